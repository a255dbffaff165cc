//! Average-acceleration Newmark (β = 1/4, γ = 1/2) with prescribed DOFs and a
//! displacement-dependent feedback force resolved by fixed-point iteration inside
//! each step.

use crate::error::{Error, Result};
use crate::fe::assembly::{GlobalSystem, NodalFeedback};
use crate::fe::banded::BandedCholesky;

pub const DEFAULT_FIXED_POINT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_FIXED_POINT_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub time: f64,
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

impl DynamicState {
    pub fn zeros(ndof: usize) -> Self {
        DynamicState {
            time: 0.0,
            displacement: vec![0.0; ndof],
            velocity: vec![0.0; ndof],
            acceleration: vec![0.0; ndof],
        }
    }

    /// `½ vᵀMv + ½ uᵀKu`
    pub fn mechanical_energy(&self, system: &GlobalSystem) -> f64 {
        let mut ku = vec![0.0; self.displacement.len()];
        system.stiffness.mul_vec(&self.displacement, &mut ku);
        let strain: f64 = ku.iter().zip(&self.displacement).map(|(a, b)| a * b).sum();
        let kinetic: f64 = self
            .velocity
            .iter()
            .zip(&system.mass)
            .map(|(v, m)| m * v * v)
            .sum();
        0.5 * (strain + kinetic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Relative change of the feedback force that ends the inner iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tolerance: DEFAULT_FIXED_POINT_TOLERANCE,
            max_iterations: DEFAULT_FIXED_POINT_MAX_ITERATIONS,
        }
    }
}

/// Integrator with the effective matrix factored once for a fixed `dt`.
pub struct Newmark<'a> {
    system: &'a GlobalSystem,
    dt: f64,
    factor: BandedCholesky,
    options: FixedPointOptions,
    step_index: usize,
    // scratch
    rhs: Vec<f64>,
    q: Vec<f64>,
    kq: Vec<f64>,
    feedback: Vec<f64>,
}

impl<'a> Newmark<'a> {
    pub fn new(system: &'a GlobalSystem, dt: f64, options: FixedPointOptions) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let c = system.damping;
        let mass_factor = 4.0 / (dt * dt) + 2.0 / dt * c.mass_coeff;
        let stiffness_factor = 1.0 + 2.0 / dt * c.stiffness_coeff;
        let factor = system
            .free_effective(mass_factor, stiffness_factor)
            .cholesky()
            .ok_or_else(|| Error::Assembly("effective Newmark matrix is not positive definite".into()))?;
        let ndof = system.dof_count();
        Ok(Newmark {
            system,
            dt,
            factor,
            options,
            step_index: 0,
            rhs: vec![0.0; system.free.len()],
            q: vec![0.0; ndof],
            kq: vec![0.0; ndof],
            feedback: vec![0.0; ndof],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` by one step.
    ///
    /// `external` holds nodal loads at the new time over all DOFs (constrained
    /// entries are ignored) and `prescribed` the new displacement of each
    /// constrained DOF, in the order of `system.constrained`.
    pub fn step(
        &mut self,
        state: &mut DynamicState,
        external: Option<&[f64]>,
        prescribed: &[f64],
        feedback: &impl NodalFeedback,
    ) -> Result<()> {
        let sys = self.system;
        let ndof = sys.dof_count();
        if prescribed.len() != sys.constrained.len() {
            return Err(Error::Shape(format!(
                "{} prescribed values for {} constrained DOFs",
                prescribed.len(),
                sys.constrained.len()
            )));
        }
        if state.displacement.len() != ndof {
            return Err(Error::Shape(format!(
                "state has {} DOFs, system has {ndof}",
                state.displacement.len()
            )));
        }
        if let Some(f) = external {
            if f.len() != ndof {
                return Err(Error::Shape(format!("load vector has {} entries, expected {ndof}", f.len())));
            }
        }
        let dt = self.dt;
        let a0 = 4.0 / (dt * dt);
        let a1 = 4.0 / dt;
        let c = sys.damping;
        self.step_index += 1;

        // constrained DOFs follow their prescribed history
        for (&d, &u_new) in sys.constrained.iter().zip(prescribed) {
            let du = u_new - state.displacement[d];
            let acc = a0 * du - a1 * state.velocity[d] - state.acceleration[d];
            state.velocity[d] = 2.0 / dt * du - state.velocity[d];
            state.acceleration[d] = acc;
            state.displacement[d] = u_new;
        }

        // rhs_f = F_f + M(a0 u + a1 v + a) + c_m M z - (K (c_k z - w))_f
        // with z_f = 2/dt u + v, z_c = -v_c(new), w_c = u_c(new)
        for d in 0..ndof {
            self.q[d] = match sys.free_index[d] {
                Some(_) => c.stiffness_coeff * (2.0 / dt * state.displacement[d] + state.velocity[d]),
                None => -c.stiffness_coeff * state.velocity[d] - state.displacement[d],
            };
        }
        sys.stiffness.mul_vec(&self.q, &mut self.kq);
        for (k, &d) in sys.free.iter().enumerate() {
            let (u, v, a) = (state.displacement[d], state.velocity[d], state.acceleration[d]);
            let m = sys.mass[d];
            let mut r = m * (a0 * u + a1 * v + a) + c.mass_coeff * m * (2.0 / dt * u + v) + self.kq[d];
            if let Some(f) = external {
                r += f[d];
            }
            self.rhs[k] = r;
        }

        // predictor: constant acceleration
        let mut trial = state.displacement.clone();
        for &d in &sys.free {
            trial[d] += dt * state.velocity[d] + 0.5 * dt * dt * state.acceleration[d];
        }

        let active = feedback.is_active();
        self.feedback.iter_mut().for_each(|v| *v = 0.0);
        if active {
            feedback.add_forces(&trial, &mut self.feedback);
        }
        let mut solution = vec![0.0; sys.free.len()];
        let mut converged = false;
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        while iterations < self.options.max_iterations.max(1) {
            iterations += 1;
            for (k, &d) in sys.free.iter().enumerate() {
                solution[k] = self.rhs[k] + self.feedback[d];
            }
            self.factor.solve_in_place(&mut solution);
            for (k, &d) in sys.free.iter().enumerate() {
                trial[d] = solution[k];
            }
            if !active {
                converged = true;
                residual = 0.0;
                break;
            }
            let mut next = vec![0.0; ndof];
            feedback.add_forces(&trial, &mut next);
            let mut diff = 0.0;
            let mut total = 0.0;
            for (k, &d) in sys.free.iter().enumerate() {
                diff += (next[d] - self.feedback[d]).powi(2);
                total += (self.rhs[k] + next[d]).powi(2);
            }
            residual = if diff == 0.0 { 0.0 } else { (diff / total).sqrt() };
            self.feedback = next;
            if residual <= self.options.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Step {
                step: self.step_index,
                residual,
                iterations,
            });
        }

        for &d in &sys.free {
            let du = trial[d] - state.displacement[d];
            let acc = a0 * du - a1 * state.velocity[d] - state.acceleration[d];
            state.velocity[d] = 2.0 / dt * du - state.velocity[d];
            state.acceleration[d] = acc;
            state.displacement[d] = trial[d];
        }
        state.time += dt;
        Ok(())
    }
}

/// One average-acceleration step. Factors the effective matrix on every call;
/// use [`Newmark`] directly for time histories.
pub fn newmark_step(
    system: &GlobalSystem,
    state: &DynamicState,
    dt: f64,
    external: Option<&[f64]>,
    prescribed: &[f64],
    feedback: &impl NodalFeedback,
) -> Result<DynamicState> {
    let mut integrator = Newmark::new(system, dt, FixedPointOptions::default())?;
    let mut next = state.clone();
    integrator.step(&mut next, external, prescribed, feedback)?;
    Ok(next)
}

/// Initial acceleration consistent with `M a = F - K u - C v` on the free DOFs.
pub fn initial_acceleration(system: &GlobalSystem, state: &mut DynamicState, external: Option<&[f64]>) {
    let n = system.dof_count();
    let mut ku = vec![0.0; n];
    system.stiffness.mul_vec(&state.displacement, &mut ku);
    let mut kv = vec![0.0; n];
    system.stiffness.mul_vec(&state.velocity, &mut kv);
    let c = system.damping;
    for &d in &system.free {
        let f = external.map_or(0.0, |f| f[d]);
        let m = system.mass[d];
        state.acceleration[d] =
            (f - ku[d] - c.mass_coeff * m * state.velocity[d] - c.stiffness_coeff * kv[d]) / m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::assembly::{assemble, NoFeedback};
    use crate::fe::banded::BandedSym;
    use crate::membrane::{build_membrane, ActivationKind, Neuron, SupportEdge};

    fn sdof(k: f64, m: f64) -> GlobalSystem {
        GlobalSystem::from_parts(BandedSym::from_dense(&[vec![k]]), vec![m], &[]).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let m = build_membrane(4, 2, 50.0, SupportEdge::Left, 1).unwrap();
        let sys = assemble(&m).unwrap();
        let s0 = DynamicState::zeros(sys.dof_count());
        let p = vec![0.0; sys.constrained.len()];
        let s1 = newmark_step(&sys, &s0, 1e-3, None, &p, &m).unwrap();
        assert!(s1.displacement.iter().all(|&u| u == 0.0));
        assert_eq!(s1.time, 1e-3);
    }

    #[test]
    fn sdof_tracks_cosine() {
        let sys = sdof(1.0, 1.0);
        let period = 2.0 * std::f64::consts::PI;
        let dt = period / 100.0;
        let mut state = DynamicState::zeros(1);
        state.displacement[0] = 1.0;
        initial_acceleration(&sys, &mut state, None);
        let mut nm = Newmark::new(&sys, dt, FixedPointOptions::default()).unwrap();
        for _ in 0..100 {
            nm.step(&mut state, None, &[], &NoFeedback).unwrap();
            let exact = state.time.cos();
            assert!((state.displacement[0] - exact).abs() < 0.01, "t={}", state.time);
        }
    }

    #[test]
    fn step_reports_non_convergence() {
        let neuron = Neuron::uniform(50.0, ActivationKind::SymmetricSigmoid, -1e5);
        let m = build_membrane(2, 1, 50.0, SupportEdge::Left, 1).unwrap().with_neurons(neuron);
        let sys = assemble(&m).unwrap();
        let mut nm = Newmark::new(&sys, 1e-3, FixedPointOptions { tolerance: 1e-14, max_iterations: 3 }).unwrap();
        let mut s = DynamicState::zeros(sys.dof_count());
        let p: Vec<f64> = sys.constrained.iter().map(|&d| if d % 2 == 0 { 1e-3 } else { 0.0 }).collect();
        let err = nm.step(&mut s, None, &p, &m).unwrap_err();
        assert!(matches!(err, Error::Step { step: 1, iterations: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_dt_and_shapes() {
        let sys = sdof(1.0, 1.0);
        assert!(Newmark::new(&sys, 0.0, FixedPointOptions::default()).is_err());
        let s = DynamicState::zeros(1);
        assert!(newmark_step(&sys, &s, 0.1, None, &[1.0], &NoFeedback).is_err());
    }
}
