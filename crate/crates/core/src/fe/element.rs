//! Bilinear 4-node square element in plane stress, integrated with 2×2 Gauss points.

use crate::error::{Error, Result};

pub type ElementMatrix = [[f64; 8]; 8];

/// Natural coordinates of the element corners, counterclockwise from (-1, -1).
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

const GAUSS: f64 = 0.577_350_269_189_625_8; // 1/√3

fn gauss_points() -> [[f64; 2]; 4] {
    [
        [-GAUSS, -GAUSS],
        [GAUSS, -GAUSS],
        [GAUSS, GAUSS],
        [-GAUSS, GAUSS],
    ]
}

pub(crate) fn check_material(modulus: f64, poisson: f64, thickness: f64, size: f64) -> Result<()> {
    if !(modulus.is_finite() && modulus > 0.0) {
        return Err(Error::Parameter(format!("modulus must be positive, got {modulus}")));
    }
    if !(0.0..0.5).contains(&poisson) {
        return Err(Error::Parameter(format!(
            "Poisson ratio must lie in [0, 0.5), got {poisson}"
        )));
    }
    if !(thickness.is_finite() && thickness > 0.0) {
        return Err(Error::Parameter(format!("thickness must be positive, got {thickness}")));
    }
    if !(size.is_finite() && size > 0.0) {
        return Err(Error::Parameter(format!("element size must be positive, got {size}")));
    }
    Ok(())
}

/// Plane-stress constitutive matrix.
pub fn plane_stress_matrix(modulus: f64, poisson: f64) -> [[f64; 3]; 3] {
    let c = modulus / (1.0 - poisson * poisson);
    [
        [c, c * poisson, 0.0],
        [c * poisson, c, 0.0],
        [0.0, 0.0, c * (1.0 - poisson) / 2.0],
    ]
}

/// Strain-displacement matrix at natural point `(xi, eta)` of a square of edge `size`.
fn strain_displacement(xi: f64, eta: f64, size: f64) -> [[f64; 8]; 3] {
    let inv_j = 2.0 / size;
    let mut b = [[0.0; 8]; 3];
    for (i, [xi_i, eta_i]) in CORNERS.iter().enumerate() {
        let dx = 0.25 * xi_i * (1.0 + eta_i * eta) * inv_j;
        let dy = 0.25 * eta_i * (1.0 + xi_i * xi) * inv_j;
        b[0][2 * i] = dx;
        b[1][2 * i + 1] = dy;
        b[2][2 * i] = dy;
        b[2][2 * i + 1] = dx;
    }
    b
}

pub fn element_stiffness(modulus: f64, poisson: f64, thickness: f64, size: f64) -> Result<ElementMatrix> {
    check_material(modulus, poisson, thickness, size)?;
    Ok(stiffness_unchecked(modulus, poisson, thickness, size))
}

pub(crate) fn stiffness_unchecked(modulus: f64, poisson: f64, thickness: f64, size: f64) -> ElementMatrix {
    let d = plane_stress_matrix(modulus, poisson);
    let weight = thickness * size * size / 4.0; // t · det J, unit Gauss weights
    let mut k = [[0.0; 8]; 8];
    for [xi, eta] in gauss_points() {
        let b = strain_displacement(xi, eta, size);
        // db = D B
        let mut db = [[0.0; 8]; 3];
        for r in 0..3 {
            for c in 0..8 {
                db[r][c] = (0..3).map(|s| d[r][s] * b[s][c]).sum();
            }
        }
        for i in 0..8 {
            for j in i..8 {
                let v: f64 = (0..3).map(|r| b[r][i] * db[r][j]).sum();
                k[i][j] += v * weight;
            }
        }
    }
    for i in 0..8 {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
    k
}

/// Stresses `[σxx, σyy, τxy]` at the four Gauss points for element displacements
/// ordered `[u0, v0, u1, v1, u2, v2, u3, v3]`.
pub fn element_stresses(modulus: f64, poisson: f64, size: f64, u: &[f64; 8]) -> [[f64; 3]; 4] {
    let d = plane_stress_matrix(modulus, poisson);
    let mut out = [[0.0; 3]; 4];
    for (g, [xi, eta]) in gauss_points().into_iter().enumerate() {
        let b = strain_displacement(xi, eta, size);
        let strain: Vec<f64> = (0..3)
            .map(|r| (0..8).map(|c| b[r][c] * u[c]).sum())
            .collect();
        for r in 0..3 {
            out[g][r] = (0..3).map(|s| d[r][s] * strain[s]).sum();
        }
    }
    out
}

/// Lumped nodal mass: a quarter of the element mass per node.
pub fn lumped_nodal_mass(density: f64, thickness: f64, size: f64) -> f64 {
    density * thickness * size * size / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_rigid_body_free() {
        let k = element_stiffness(500_000.0, 0.2, 10.0, 50.0).unwrap();
        let scale = k.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(k[i][j], k[j][i]);
            }
        }
        // translations in x and y, and an in-plane rotation about the centre
        let modes: [[f64; 8]; 3] = [
            [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
            [1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0],
        ];
        for m in modes {
            for row in &k {
                let f: f64 = row.iter().zip(&m).map(|(a, b)| a * b).sum();
                assert!(f.abs() <= 1e-10 * scale, "{f}");
            }
        }
    }

    #[test]
    fn scales_linearly() {
        let k1 = element_stiffness(1.0, 0.3, 1.0, 50.0).unwrap();
        let k2 = element_stiffness(3.0, 0.3, 2.0, 50.0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!((k2[i][j] - 6.0 * k1[i][j]).abs() <= 1e-14 * k2[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn closed_form_diagonal() {
        // for a square, k11 = E t / (1 - ν²) · (1/2 - ν/6), independent of the edge length
        let k = element_stiffness(1.0, 0.3, 1.0, 50.0).unwrap();
        let expected = (0.5 - 0.3 / 6.0) / (1.0 - 0.09);
        assert!((k[0][0] - expected).abs() < 1e-14);
        assert!((k[1][1] - expected).abs() < 1e-14);
    }

    #[test]
    fn invalid_material() {
        assert!(element_stiffness(0.0, 0.3, 1.0, 1.0).is_err());
        assert!(element_stiffness(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(element_stiffness(1.0, -0.1, 1.0, 1.0).is_err());
        assert!(element_stiffness(1.0, 0.3, 0.0, 1.0).is_err());
        assert!(element_stiffness(1.0, 0.3, 1.0, -2.0).is_err());
    }
}
