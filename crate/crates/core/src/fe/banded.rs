//! Symmetric banded storage and an in-band Cholesky factorization.

/// Lower band of a symmetric matrix. Row `i` stores columns `i - bandwidth ..= i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bandwidth = bandwidth.min(n.saturating_sub(1));
        BandedSym {
            n,
            bandwidth,
            data: vec![0.0; n * (bandwidth + 1)],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut bw = 0;
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate().take(i) {
                if v != 0.0 {
                    bw = bw.max(i - j);
                }
            }
        }
        let mut m = BandedSym::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let s = m.slot(i, j);
                m.data[s] = rows[i][j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (j + self.bandwidth - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Adds to the symmetric pair `(i, j)` / `(j, i)`. Panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bandwidth, "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    pub fn add_diagonal(&mut self, diag: &[f64], scale: f64) {
        for (i, d) in diag.iter().enumerate() {
            let s = self.slot(i, i);
            self.data[s] += scale * d;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BandedSym {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        let w = self.bandwidth + 1;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let j0 = i.saturating_sub(self.bandwidth);
            let off = j0 + self.bandwidth - i;
            let mut acc = row[w - 1] * x[i];
            for (k, j) in (j0..i).enumerate() {
                let a = row[off + k];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
    }

    /// Principal submatrix on `keep` (must be increasing).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut bw = 0;
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().take(a).rev() {
                if i - j > self.bandwidth {
                    break;
                }
                if self.get(i, j) != 0.0 {
                    bw = bw.max(a - b);
                }
            }
        }
        let mut m = BandedSym::zeros(keep.len(), bw);
        for (a, &i) in keep.iter().enumerate() {
            for b in a.saturating_sub(bw)..=a {
                let v = self.get(i, keep[b]);
                let s = m.slot(a, b);
                m.data[s] = v;
            }
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `A = L Lᵀ`. Returns `None` when a pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<BandedCholesky> {
        let bw = self.bandwidth;
        let w = bw + 1;
        let mut l = self.data.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for j in 0..self.n {
            let kj0 = j.saturating_sub(bw);
            let mut d = l[j * w + bw];
            for k in kj0..j {
                let v = l[j * w + (k + bw - j)];
                d -= v * v;
            }
            if !(d > scale * 1e-14) {
                return None;
            }
            let d = d.sqrt();
            l[j * w + bw] = d;
            for i in j + 1..(j + w).min(self.n) {
                let ki0 = i.saturating_sub(bw);
                let mut s = l[i * w + (j + bw - i)];
                for k in ki0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                l[i * w + (j + bw - i)] = s / d;
            }
        }
        Some(BandedCholesky {
            n: self.n,
            bandwidth: bw,
            l,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let bw = self.bandwidth;
        let w = bw + 1;
        for i in 0..self.n {
            let k0 = i.saturating_sub(bw);
            let row = &self.l[i * w..(i + 1) * w];
            let mut s = b[i];
            for k in k0..i {
                s -= row[k + bw - i] * b[k];
            }
            b[i] = s / row[bw];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + w).min(self.n) {
                s -= self.l[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize, bw: usize) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 4.0 + i as f64;
            for j in i.saturating_sub(bw)..i {
                let v = 1.0 / (1.0 + (i + 2 * j) as f64);
                a[i][j] = v;
                a[j][i] = v;
            }
        }
        a
    }

    #[test]
    fn dense_round_trip_and_matvec() {
        let a = spd(7, 2);
        let m = BandedSym::from_dense(&a);
        assert_eq!(m.bandwidth(), 2);
        assert_eq!(m.to_dense(), a);
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 3.0).collect();
        let mut y = vec![0.0; 7];
        m.mul_vec(&x, &mut y);
        for i in 0..7 {
            let e: f64 = (0..7).map(|j| a[i][j] * x[j]).sum();
            assert!((y[i] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_solves() {
        let a = spd(9, 3);
        let m = BandedSym::from_dense(&a);
        let c = m.cholesky().unwrap();
        let b: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        c.solve_in_place(&mut x);
        let mut r = vec![0.0; 9];
        m.mul_vec(&x, &mut r);
        for i in 0..9 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_rejected() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(BandedSym::from_dense(&a).cholesky().is_none());
    }

    #[test]
    fn submatrix_keeps_entries() {
        let a = spd(8, 3);
        let m = BandedSym::from_dense(&a);
        let keep = [1, 2, 5, 7];
        let s = m.submatrix(&keep);
        for (p, &i) in keep.iter().enumerate() {
            for (q, &j) in keep.iter().enumerate() {
                assert_eq!(s.get(p, q), a[i][j]);
            }
        }
    }
}
