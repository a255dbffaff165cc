#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn demo_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/demo.toml")
}

/// Writes the demo config with `overrides` merged section by section into
/// `dir/demo.toml` and returns its path.
pub fn write_config(dir: &Path, overrides: &str) -> PathBuf {
    let text = std::fs::read_to_string(demo_config_path()).unwrap();
    let mut base: toml::Table = text.parse().unwrap();
    let extra: toml::Table = overrides.parse().unwrap();
    for (section, values) in extra {
        let target = base
            .entry(section)
            .or_insert_with(|| toml::Value::Table(Default::default()))
            .as_table_mut()
            .unwrap();
        for (k, v) in values.as_table().unwrap() {
            target.insert(k.clone(), v.clone());
        }
    }
    let path = dir.join("demo.toml");
    std::fs::write(&path, toml::to_string(&base).unwrap()).unwrap();
    path
}

/// A short, cheap variant of the demo for pipeline tests.
pub const SMALL: &str = r#"
[simulation]
steps = 60
[pso]
particles = 6
max_iterations = 3
[quasi_newton]
max_iterations = 3
max_function_evals = 10
"#;

pub fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["neuroskin"];
    argv.extend_from_slice(args);
    neuroskin::cli::run(argv)
}

pub mod oracles {
    //! Error measures shared by the FE tests and the acceptance run.

    use neuroskin::fe::banded::BandedSym;
    use neuroskin::fe::newmark::initial_acceleration;
    use neuroskin::fe::*;
    use neuroskin::membrane::*;

    pub fn plain(nx: usize, ny: usize) -> MembraneModel {
        build_membrane(nx, ny, 50.0, SupportEdge::Left, 1)
            .unwrap()
            .with_neurons(Neuron::disabled())
    }

    pub fn d_matrix(e: f64, nu: f64) -> [[f64; 3]; 3] {
        let c = e / (1.0 - nu * nu);
        [[c, c * nu, 0.0], [c * nu, c, 0.0], [0.0, 0.0, c * (1.0 - nu) / 2.0]]
    }

    /// Largest stress deviation from `expected`, relative to its largest component.
    pub fn stress_deviation(field: &[[[f64; 3]; 4]], expected: [f64; 3]) -> f64 {
        let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        field
            .iter()
            .flatten()
            .flat_map(|s| (0..3).map(move |c| (s[c] - expected[c]).abs()))
            .fold(0.0, f64::max)
            / scale
    }

    /// One element pinned at a corner, on a roller above it, pulled by a uniform
    /// edge traction `p`. Returns the relative stress error.
    pub fn single_element_patch(p: f64) -> f64 {
        let model = plain(1, 1);
        let (t, a) = (model.material.thickness, model.mesh.size);
        let sys = assemble_with_constraints(&model, &[0, 1, 4]).unwrap();
        let mut f = vec![0.0; 8];
        f[2] = p * t * a / 2.0;
        f[6] = p * t * a / 2.0;
        let u = solve_static(&sys, &[0.0; 3], Some(&f), &NoFeedback, FixedPointOptions::default()).unwrap();
        stress_deviation(&element_stress_field(&model, &u), [p, 0.0, 0.0])
    }

    /// 2x2 mesh with a linear displacement field imposed on the boundary and the
    /// centre node free. Returns (centre displacement error, relative stress error).
    pub fn two_by_two_patch() -> (f64, f64) {
        let model = plain(2, 2);
        let (e, nu) = (model.material.moduli[0], model.material.poisson_ratio);
        let field = |x: f64, y: f64| (1e-3 + 2e-4 * x - 1e-4 * y, -5e-4 + 3e-5 * x + 4e-4 * y);
        let centre = 4;
        let constrained: Vec<usize> = (0..9).filter(|&n| n != centre).flat_map(|n| [2 * n, 2 * n + 1]).collect();
        let sys = assemble_with_constraints(&model, &constrained).unwrap();
        let prescribed: Vec<f64> = constrained
            .iter()
            .map(|&d| {
                let [x, y] = model.mesh.coords[d / 2];
                let (u, v) = field(x, y);
                if d % 2 == 0 {
                    u
                } else {
                    v
                }
            })
            .collect();
        let u = solve_static(&sys, &prescribed, None, &NoFeedback, FixedPointOptions::default()).unwrap();
        let (cu, cv) = field(50.0, 50.0);
        let disp = (u[8] - cu).abs().max((u[9] - cv).abs());
        let d = d_matrix(e, nu);
        let strain = [2e-4, 4e-4, -1e-4 + 3e-5];
        let expected = [0, 1, 2].map(|i| (0..3).map(|j| d[i][j] * strain[j]).sum());
        (disp, stress_deviation(&element_stress_field(&model, &u), expected))
    }

    /// Unit mass on a unit spring released from 1 over one period at
    /// `steps_per_period`; returns the largest deviation from `cos t`.
    pub fn sdof_cosine_error(steps_per_period: usize) -> f64 {
        let sys = GlobalSystem::from_parts(BandedSym::from_dense(&[vec![1.0]]), vec![1.0], &[]).unwrap();
        let dt = 2.0 * std::f64::consts::PI / steps_per_period as f64;
        let mut state = DynamicState::zeros(1);
        state.displacement[0] = 1.0;
        initial_acceleration(&sys, &mut state, None);
        let mut nm = Newmark::new(&sys, dt, FixedPointOptions::default()).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..steps_per_period {
            nm.step(&mut state, None, &[], &NoFeedback).unwrap();
            worst = worst.max((state.displacement[0] - state.time.cos()).abs());
        }
        worst
    }

    /// Mechanical energy history of an undamped membrane released from a
    /// static deflection.
    pub fn free_vibration_energy(dt: f64, steps: usize) -> Vec<f64> {
        let model = plain(8, 4);
        let sys = assemble(&model).unwrap();
        let mut f = vec![0.0; sys.dof_count()];
        let tip = model.mesh.node_count() - 1;
        f[2 * tip] = 1.0e3;
        f[2 * tip + 1] = -2.0e3;
        let p = vec![0.0; sys.constrained.len()];
        let u0 = solve_static(&sys, &p, Some(&f), &NoFeedback, FixedPointOptions::default()).unwrap();
        let mut state = DynamicState::zeros(sys.dof_count());
        state.displacement = u0;
        initial_acceleration(&sys, &mut state, None);
        let mut nm = Newmark::new(&sys, dt, FixedPointOptions::default()).unwrap();
        let mut energy = vec![state.mechanical_energy(&sys)];
        for _ in 0..steps {
            nm.step(&mut state, None, &p, &NoFeedback).unwrap();
            energy.push(state.mechanical_energy(&sys));
        }
        energy
    }

    pub fn relative_drift(energy: &[f64]) -> f64 {
        energy.iter().map(|v| (v - energy[0]).abs()).fold(0.0, f64::max) / energy[0]
    }
}

pub mod fidelity {
    use neuroskin::objective::Objective;

    /// Per-dimension comparison of forward and central differences.
    #[derive(Debug)]
    pub struct Check {
        pub forward: f64,
        pub central: f64,
        /// Second derivative from a wide symmetric probe.
        pub curvature: f64,
        /// Standard deviation of the evaluation noise.
        pub noise: f64,
        pub bound: f64,
    }

    impl Check {
        pub fn gap(&self) -> f64 {
            (self.forward - self.central).abs()
        }

        pub fn holds(&self) -> bool {
            self.gap() <= self.bound
        }
    }

    /// Noise level from sixth differences of equally spaced samples.
    pub fn noise_level(samples: &[f64]) -> f64 {
        let mut d = samples.to_vec();
        for _ in 0..6 {
            d = d.windows(2).map(|w| w[1] - w[0]).collect();
        }
        // (6!)^2 / 12! normalizes the variance of a sixth difference of white noise
        let gamma = 1.0 / 924.0;
        (gamma * d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt()
    }

    /// Forward vs central difference along each axis. The allowed gap is the
    /// first-order truncation term `delta/2 |f''|` plus the rounding term
    /// `3 eps / delta`, with `eps` taken as three noise standard deviations.
    pub fn forward_vs_central(f: &impl Objective, x: &[f64], delta: f64, probe: f64, spacing: f64) -> Vec<Check> {
        let at = |i: usize, h: f64| {
            let mut y = x.to_vec();
            y[i] += h;
            f.evaluate(&y).unwrap()
        };
        let f0 = f.evaluate(x).unwrap();
        (0..x.len())
            .map(|i| {
                let (fp, fm) = (at(i, delta), at(i, -delta));
                let curvature = (at(i, probe) - 2.0 * f0 + at(i, -probe)) / (probe * probe);
                let samples: Vec<f64> = (0..30).map(|k| at(i, k as f64 * spacing)).collect();
                let noise = noise_level(&samples);
                let eps = 3.0 * noise;
                Check {
                    forward: (fp - f0) / delta,
                    central: (fp - fm) / (2.0 * delta),
                    curvature,
                    noise,
                    bound: 0.5 * delta * curvature.abs() + 3.0 * eps / delta,
                }
            })
            .collect()
    }
}
