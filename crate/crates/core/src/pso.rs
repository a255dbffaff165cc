//! Particle swarm global search.
//!
//! Each iteration evaluates every particle, updates personal and global bests,
//! then moves the swarm with
//!
//! ```text
//! V ← ω V + φ1 R (E_bp − E) + φ2 C (E_g − E)
//! E ← E + V
//! ```
//!
//! where `R` and `C` are diagonal matrices of fresh uniform `[0, 1)` draws for
//! every particle and iteration. Positions leaving the box are clamped to the
//! violated bound and the matching velocity component is zeroed.
//!
//! Random draws come from a stream keyed on `(seed, particle, iteration)`, so
//! results do not depend on how evaluations are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::pool::EvalPool;

#[derive(Debug, Clone, PartialEq)]
pub struct PsoConfig {
    /// Inertia weight ω.
    pub inertia: f64,
    /// Cognitive acceleration φ1 (pull toward the personal best).
    pub cognitive: f64,
    /// Social acceleration φ2 (pull toward the global best).
    pub social: f64,
    pub particles: usize,
    pub max_iterations: usize,
    pub bounds: Bounds,
    pub seed: u64,
}

impl PsoConfig {
    pub fn new(bounds: Bounds) -> Self {
        PsoConfig {
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            particles: 20,
            max_iterations: 20,
            bounds,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inertia >= 0.0 && self.cognitive >= 0.0 && self.social >= 0.0) {
            return Err(Error::Config(format!(
                "PSO coefficients must be non-negative (ω={}, φ1={}, φ2={})",
                self.inertia, self.cognitive, self.social
            )));
        }
        if self.particles == 0 {
            return Err(Error::Config("PSO needs at least one particle".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best: Vec<f64>,
    pub global_best_fitness: f64,
    /// Completed iterations.
    pub iteration: usize,
}

/// Diagonals of `R` and `C` for one particle and iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDraws {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
}

pub fn draw_coefficients(rng: &mut impl Rng, n: usize) -> CoefficientDraws {
    let r = (0..n).map(|_| rng.random::<f64>()).collect();
    let c = (0..n).map(|_| rng.random::<f64>()).collect();
    CoefficientDraws { r, c }
}

const INIT_STREAM: u64 = u64::MAX;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream owned by one particle at one iteration.
pub fn particle_rng(seed: u64, particle: usize, iteration: u64) -> ChaCha8Rng {
    let key = splitmix(splitmix(splitmix(seed) ^ particle as u64) ^ iteration);
    ChaCha8Rng::seed_from_u64(key)
}

/// Velocity for given draws.
pub fn velocity_with_draws(
    particle: &Particle,
    global_best: &[f64],
    config: &PsoConfig,
    draws: &CoefficientDraws,
) -> Vec<f64> {
    (0..particle.position.len())
        .map(|i| {
            let x = particle.position[i];
            config.inertia * particle.velocity[i]
                + config.cognitive * draws.r[i] * (particle.best_position[i] - x)
                + config.social * draws.c[i] * (global_best[i] - x)
        })
        .collect()
}

pub fn velocity_update(
    particle: &Particle,
    global_best: &[f64],
    config: &PsoConfig,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let draws = draw_coefficients(rng, particle.position.len());
    velocity_with_draws(particle, global_best, config, &draws)
}

/// New `(position, velocity)`: the move `E + V`, clamped into the box with the
/// velocity component zeroed wherever a bound was hit.
pub fn position_update(particle: &Particle, velocity: &[f64], bounds: &Bounds) -> (Vec<f64>, Vec<f64>) {
    let mut position = Vec::with_capacity(velocity.len());
    let mut velocity = velocity.to_vec();
    for (i, v) in velocity.iter_mut().enumerate() {
        let next = particle.position[i] + *v;
        let (lo, hi) = (bounds.lower()[i], bounds.upper()[i]);
        if next > hi {
            position.push(hi);
            *v = 0.0;
        } else if next < lo {
            position.push(lo);
            *v = 0.0;
        } else {
            position.push(next);
        }
    }
    (position, velocity)
}

/// Uniform positions in the box and zero velocities. With `initial_guess`,
/// particle 0 starts there instead.
pub fn initialize_swarm(config: &PsoConfig, initial_guess: Option<&[f64]>) -> Result<Swarm> {
    config.validate()?;
    let n = config.bounds.dim();
    if let Some(g) = initial_guess {
        if g.len() != n {
            return Err(Error::Shape(format!("initial guess has {} entries, bounds have {n}", g.len())));
        }
    }
    let particles = (0..config.particles)
        .map(|p| {
            let position = match initial_guess {
                Some(g) if p == 0 => config.bounds.clamped(g),
                _ => {
                    let mut rng = particle_rng(config.seed, p, INIT_STREAM);
                    (0..n)
                        .map(|i| {
                            let (lo, hi) = (config.bounds.lower()[i], config.bounds.upper()[i]);
                            lo + (hi - lo) * rng.random::<f64>()
                        })
                        .collect()
                }
            };
            Particle {
                best_position: position.clone(),
                position,
                velocity: vec![0.0; n],
                best_fitness: f64::INFINITY,
            }
        })
        .collect::<Vec<_>>();
    Ok(Swarm {
        global_best: particles[0].position.clone(),
        global_best_fitness: f64::INFINITY,
        particles,
        iteration: 0,
    })
}

/// What happened in one iteration; useful for logging and for checking draws.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub iteration: usize,
    /// Fitness of each particle at its pre-move position (`+∞` on failure).
    pub fitness: Vec<f64>,
    pub failures: usize,
    pub draws: Vec<CoefficientDraws>,
}

/// Evaluates the swarm, updates the bests, then moves every particle.
pub fn pso_step(
    swarm: &mut Swarm,
    objective: &impl Objective,
    config: &PsoConfig,
    pool: &EvalPool,
) -> StepRecord {
    let fitness: Vec<f64> = pool.map(&swarm.particles, |_, p| {
        match objective.evaluate(&p.position) {
            Ok(f) if !f.is_nan() => f,
            _ => f64::INFINITY,
        }
    });
    let failures = fitness.iter().filter(|f| f.is_infinite()).count();

    for (p, &f) in swarm.particles.iter_mut().zip(&fitness) {
        if f < p.best_fitness {
            p.best_fitness = f;
            p.best_position = p.position.clone();
        }
    }
    for p in &swarm.particles {
        if p.best_fitness < swarm.global_best_fitness {
            swarm.global_best_fitness = p.best_fitness;
            swarm.global_best = p.best_position.clone();
        }
    }

    let k = swarm.iteration as u64;
    let n = config.bounds.dim();
    let mut draws = Vec::with_capacity(swarm.particles.len());
    let global_best = swarm.global_best.clone();
    for (i, p) in swarm.particles.iter_mut().enumerate() {
        let mut rng = particle_rng(config.seed, i, k);
        let d = draw_coefficients(&mut rng, n);
        let v = velocity_with_draws(p, &global_best, config, &d);
        let (x, v) = position_update(p, &v, &config.bounds);
        p.position = x;
        p.velocity = v;
        draws.push(d);
    }
    swarm.iteration += 1;
    StepRecord {
        iteration: swarm.iteration,
        fitness,
        failures,
        draws,
    }
}

/// Global best after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PsoIteration {
    pub iteration: usize,
    pub best_fitness: f64,
    pub best_position: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub history: Vec<PsoIteration>,
    pub evaluations: usize,
}

pub fn pso_run(
    config: &PsoConfig,
    objective: &impl Objective,
    pool: &EvalPool,
    initial_guess: Option<&[f64]>,
    mut on_iteration: impl FnMut(&PsoIteration) -> Result<()>,
) -> Result<PsoResult> {
    let mut swarm = initialize_swarm(config, initial_guess)?;
    let mut history = Vec::with_capacity(config.max_iterations);
    let mut evaluations = 0;
    for _ in 0..config.max_iterations {
        let record = pso_step(&mut swarm, objective, config, pool);
        evaluations += record.fitness.len();
        if record.iteration == 1 && record.failures == record.fitness.len() {
            return Err(Error::Optimizer(
                "every particle failed to evaluate in the first iteration".into(),
            ));
        }
        let it = PsoIteration {
            iteration: record.iteration,
            best_fitness: swarm.global_best_fitness,
            best_position: swarm.global_best.clone(),
        };
        on_iteration(&it)?;
        history.push(it);
    }
    Ok(PsoResult {
        best_position: swarm.global_best,
        best_fitness: swarm.global_best_fitness,
        history,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    fn particle(pos: &[f64], vel: &[f64], best: &[f64]) -> Particle {
        Particle {
            position: pos.to_vec(),
            velocity: vel.to_vec(),
            best_position: best.to_vec(),
            best_fitness: 0.0,
        }
    }

    fn config(dim: usize) -> PsoConfig {
        PsoConfig::new(Bounds::uniform(dim, -5.0, 5.0).unwrap())
    }

    #[test]
    fn no_attraction_keeps_inertia() {
        let cfg = config(3);
        let p = particle(&[1.0, 2.0, 3.0], &[0.5, -1.0, 2.0], &[1.0, 2.0, 3.0]);
        let mut rng = particle_rng(1, 0, 0);
        let v = velocity_update(&p, &[1.0, 2.0, 3.0], &cfg, &mut rng);
        assert_eq!(v, vec![0.35, -0.7, 1.4]);

        let cfg = PsoConfig { inertia: 0.0, ..cfg };
        let v = velocity_update(&p, &[1.0, 2.0, 3.0], &cfg, &mut rng);
        assert_eq!(v, vec![0.0; 3]);
    }

    #[test]
    fn velocity_matches_hand_evaluation() {
        let cfg = PsoConfig {
            inertia: 0.5,
            cognitive: 2.0,
            social: 1.0,
            ..config(2)
        };
        let p = particle(&[1.0, -1.0], &[0.2, 0.4], &[2.0, 0.0]);
        let g = [0.0, 3.0];
        let mut rng = particle_rng(42, 3, 7);
        let mut replay = rng.clone();
        let v = velocity_update(&p, &g, &cfg, &mut rng);
        let r: [f64; 2] = [replay.random(), replay.random()];
        let c: [f64; 2] = [replay.random(), replay.random()];
        // 0.5·V + 2·R·(E_bp − E) + 1·C·(E_g − E)
        let e0 = 0.5 * 0.2 + 2.0 * r[0] * (2.0 - 1.0) + c[0] * (0.0 - 1.0);
        let e1 = 0.5 * 0.4 + 2.0 * r[1] * (0.0 + 1.0) + c[1] * (3.0 + 1.0);
        assert_eq!(v, vec![e0, e1]);
        assert!(r.iter().chain(&c).all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn position_rules() {
        let b = Bounds::uniform(2, -10.0, 10.0).unwrap();
        let p = particle(&[1.0, 1.0], &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(position_update(&p, &[0.0, 0.0], &b).0, vec![1.0, 1.0]);
        assert_eq!(position_update(&p, &[2.0, -1.0], &b), (vec![3.0, 0.0], vec![2.0, -1.0]));

        let b = Bounds::new(vec![0.0, 0.0], vec![2.0, 4.0]).unwrap();
        let (x, v) = position_update(&p, &[1.5, -3.0], &b);
        assert_eq!(x, vec![2.0, 0.0]);
        assert_eq!(v, vec![0.0, 0.0]);
        let (x, v) = position_update(&p, &[1.0, 2.0], &b);
        assert_eq!(x, vec![2.0, 3.0]);
        assert_eq!(v, vec![1.0, 2.0]);
    }

    #[test]
    fn particle_at_optimum_stays_best() {
        let cfg = PsoConfig {
            particles: 3,
            ..config(2)
        };
        let pool = EvalPool::new(1).unwrap();
        let mut swarm = initialize_swarm(&cfg, Some(&[0.0, 0.0])).unwrap();
        for _ in 0..5 {
            pso_step(&mut swarm, &sphere, &cfg, &pool);
            assert_eq!(swarm.global_best, vec![0.0, 0.0]);
            assert_eq!(swarm.global_best_fitness, 0.0);
        }
    }

    #[test]
    fn better_particle_wins() {
        let cfg = PsoConfig {
            particles: 2,
            ..config(1)
        };
        let pool = EvalPool::new(2).unwrap();
        let mut swarm = initialize_swarm(&cfg, None).unwrap();
        swarm.particles[0].position = vec![3.0];
        swarm.particles[1].position = vec![-1.0];
        pso_step(&mut swarm, &sphere, &cfg, &pool);
        assert_eq!(swarm.global_best, vec![-1.0]);
        assert_eq!(swarm.global_best_fitness, 1.0);
    }

    #[test]
    fn draws_regenerated_each_iteration() {
        let cfg = PsoConfig {
            particles: 4,
            seed: 9,
            ..config(3)
        };
        let pool = EvalPool::new(2).unwrap();
        let mut swarm = initialize_swarm(&cfg, None).unwrap();
        let a = pso_step(&mut swarm, &sphere, &cfg, &pool);
        let b = pso_step(&mut swarm, &sphere, &cfg, &pool);
        for p in 0..4 {
            assert_ne!(a.draws[p], b.draws[p]);
            let mut rng = particle_rng(9, p, 1);
            assert_eq!(b.draws[p], draw_coefficients(&mut rng, 3));
        }
        assert_ne!(a.draws[0], a.draws[1]);
    }

    #[test]
    fn failures_score_infinity() {
        let cfg = PsoConfig {
            particles: 4,
            ..config(1)
        };
        let pool = EvalPool::new(1).unwrap();
        let picky = |x: &[f64]| {
            if x[0] > 0.0 {
                Err(Error::Optimizer("diverged".into()))
            } else {
                Ok(-x[0])
            }
        };
        let mut swarm = initialize_swarm(&cfg, None).unwrap();
        for (p, x) in swarm.particles.iter_mut().zip([1.0, -2.0, 3.0, -1.0]) {
            p.position = vec![x];
        }
        let rec = pso_step(&mut swarm, &picky, &cfg, &pool);
        assert_eq!(rec.fitness, vec![f64::INFINITY, 2.0, f64::INFINITY, 1.0]);
        assert_eq!(rec.failures, 2);
        assert_eq!(swarm.global_best_fitness, 1.0);

        let always = |_: &[f64]| -> Result<f64> { Err(Error::Optimizer("no".into())) };
        assert!(pso_run(&cfg, &always, &pool, None, |_| Ok(())).is_err());
    }

    #[test]
    fn frozen_single_particle() {
        let cfg = PsoConfig {
            inertia: 0.0,
            cognitive: 0.0,
            social: 0.0,
            particles: 1,
            max_iterations: 10,
            ..config(2)
        };
        let pool = EvalPool::new(1).unwrap();
        let init = initialize_swarm(&cfg, None).unwrap().particles[0].position.clone();
        let res = pso_run(&cfg, &sphere, &pool, None, |_| Ok(())).unwrap();
        assert_eq!(res.best_position, init);
        assert_eq!(res.evaluations, 10);
    }

    #[test]
    fn sphere_history_monotone_and_reproducible() {
        let cfg = PsoConfig {
            particles: 10,
            max_iterations: 50,
            seed: 5,
            ..config(4)
        };
        let run = |workers| {
            let pool = EvalPool::new(workers).unwrap();
            pso_run(&cfg, &sphere, &pool, None, |_| Ok(())).unwrap()
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
        for w in a.history.windows(2) {
            assert!(w[1].best_fitness <= w[0].best_fitness);
        }
        assert!(a.best_fitness < a.history[0].best_fitness);
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(2);
        cfg.particles = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = config(2);
        cfg.inertia = -0.1;
        assert!(cfg.validate().is_err());
    }
}
