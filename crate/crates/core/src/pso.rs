//! Bounded particle swarm optimizer.
//!
//! Each iteration first moves every particle (in index order), then evaluates
//! the new positions, then updates personal and global bests. Velocity:
//!
//! ```text
//! w ← Ω1 (x_gbest − x) + Ω2 (x_pbest − x) + Ω3 w
//! x ← clip(x + w, lower, upper)
//! ```
//!
//! `Ω1`, `Ω2` are diagonal with entries drawn uniformly from `[0, omega1_max]`
//! and `[0, omega2_max]`; `Ω3` is a scalar inertia. Random draws come from a
//! seeded ChaCha8 stream in a fixed order: initial positions particle by
//! particle, coordinate by coordinate; then per iteration, per particle, all of
//! `Ω1`'s diagonal followed by all of `Ω2`'s. Uniform draws map to a range as
//! `lo + (hi − lo) · u` with `u ∈ [0, 1)`.

use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PsoRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> PsoRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A particle position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector(pub Vec<f64>);

impl Deref for DecisionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for DecisionVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Coordinatewise box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidBounds(format!(
                "lower has {} coordinates, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::InvalidBounds("zero-dimensional search space".into()));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidBounds(format!(
                    "coordinate {i}: [{lo}, {hi}] is not a finite interval"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// `min(max(x, lower), upper)` per coordinate.
    pub fn clip(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.max(*lo).min(*hi);
        }
    }

    fn sample(&self, rng: &mut PsoRng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }
}

/// The inertia weight `Ω3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inertia {
    Constant(f64),
    /// `(T − 1) / T` for a run of `T` iterations.
    IterationRatio,
}

impl Inertia {
    /// Default constant inertia. Values of 1 or more make the velocity
    /// recursion grow without bound, so the swarm never settles.
    pub const DEFAULT: f64 = 0.7298;

    pub fn value(&self, iterations: usize) -> f64 {
        match *self {
            Inertia::Constant(c) => c,
            Inertia::IterationRatio => (iterations as f64 - 1.0) / iterations as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub particles: usize,
    pub iterations: usize,
    pub omega1_max: f64,
    pub omega2_max: f64,
    pub inertia: Inertia,
    pub seed: u64,
    /// Place caller-supplied baseline points at the front of the swarm.
    pub seed_with_baseline: bool,
    /// Evaluate the particles of one iteration in parallel. Results do not
    /// depend on this flag.
    pub parallel: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            particles: 20,
            iterations: 150,
            omega1_max: 2.0,
            omega2_max: 2.0,
            inertia: Inertia::Constant(Inertia::DEFAULT),
            seed: 0,
            seed_with_baseline: true,
            parallel: false,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::InvalidConfig(
                "particle count must be at least 1".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig(
                "iteration count must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("omega1_max", self.omega1_max),
            ("omega2_max", self.omega2_max),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        let w = self.inertia.value(self.iterations);
        if !w.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "inertia must be finite, got {w}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub personal_best: Vec<f64>,
    /// Fitness of `personal_best`; `+∞` until the particle is first evaluated.
    pub personal_best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best: DecisionVector,
    pub best_fitness: f64,
    /// Global best after the initial evaluation and after each iteration
    /// (`iterations + 1` entries).
    pub fitness_trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Uniform positions inside `bounds`, zero velocities. When
/// `cfg.seed_with_baseline` is set, `baselines[i]` replaces particle `i`'s
/// position (extra baselines beyond the swarm size are ignored). Random
/// positions are drawn for every particle regardless, so the stream does not
/// depend on the baselines.
pub fn initialize_swarm(
    cfg: &PsoConfig,
    bounds: &Bounds,
    baselines: &[DecisionVector],
    rng: &mut PsoRng,
) -> Result<Vec<Particle>> {
    cfg.validate()?;
    for (i, b) in baselines.iter().enumerate() {
        if !bounds.contains(b) {
            return Err(Error::InvalidBounds(format!(
                "baseline {i} lies outside the search bounds"
            )));
        }
    }
    let dim = bounds.dimension();
    let mut swarm: Vec<Particle> = (0..cfg.particles)
        .map(|_| {
            let position = bounds.sample(rng);
            Particle {
                personal_best: position.clone(),
                position,
                velocity: vec![0.0; dim],
                personal_best_fitness: f64::INFINITY,
            }
        })
        .collect();
    if cfg.seed_with_baseline {
        for (p, b) in swarm.iter_mut().zip(baselines) {
            p.position.clone_from(&b.0);
            p.personal_best.clone_from(&b.0);
        }
    }
    Ok(swarm)
}

/// Draws one random diagonal, entries uniform on `[0, max]`.
pub fn draw_diagonal(rng: &mut PsoRng, dim: usize, max: f64) -> Vec<f64> {
    (0..dim).map(|_| max * rng.random::<f64>()).collect()
}

/// New velocity for `p` given the drawn diagonals `omega1`, `omega2` and the
/// inertia weight.
pub fn velocity_update(
    p: &Particle,
    global_best: &[f64],
    omega1: &[f64],
    omega2: &[f64],
    inertia: f64,
) -> Vec<f64> {
    (0..p.position.len())
        .map(|i| {
            let x = p.position[i];
            omega1[i] * (global_best[i] - x)
                + omega2[i] * (p.personal_best[i] - x)
                + inertia * p.velocity[i]
        })
        .collect()
}

/// `clip(position + velocity, lower, upper)`.
pub fn position_update(p: &Particle, bounds: &Bounds) -> Vec<f64> {
    let mut x: Vec<f64> = p
        .position
        .iter()
        .zip(&p.velocity)
        .map(|(x, w)| x + w)
        .collect();
    bounds.clip(&mut x);
    x
}

fn evaluate_all<F>(positions: Vec<&[f64]>, fitness: &F, parallel: bool) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if parallel {
        positions.into_par_iter().map(fitness).collect()
    } else {
        positions.into_iter().map(fitness).collect()
    }
}

/// Minimizes `fitness` over `bounds`.
pub fn run<F>(
    cfg: &PsoConfig,
    bounds: &Bounds,
    baselines: &[DecisionVector],
    fitness: F,
) -> Result<PsoResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut rng = seeded_rng(cfg.seed);
    let mut swarm = initialize_swarm(cfg, bounds, baselines, &mut rng)?;
    let inertia = cfg.inertia.value(cfg.iterations);
    let dim = bounds.dimension();

    let mut evaluations = 0;
    let mut gbest: Option<(usize, f64)> = None;
    let mut gbest_pos = swarm[0].position.clone();
    let mut trace = Vec::with_capacity(cfg.iterations + 1);

    for t in 0..=cfg.iterations {
        if t > 0 {
            for p in swarm.iter_mut() {
                let o1 = draw_diagonal(&mut rng, dim, cfg.omega1_max);
                let o2 = draw_diagonal(&mut rng, dim, cfg.omega2_max);
                p.velocity = velocity_update(p, &gbest_pos, &o1, &o2, inertia);
                p.position = position_update(p, bounds);
            }
        }

        let values = evaluate_all(
            swarm.iter().map(|p| p.position.as_slice()).collect(),
            &fitness,
            cfg.parallel,
        )?;
        evaluations += values.len();

        for (p, f) in swarm.iter_mut().zip(values) {
            if f < p.personal_best_fitness {
                p.personal_best_fitness = f;
                p.personal_best.clone_from(&p.position);
            }
        }
        // Index-order fold with strict comparison: ties keep the earlier best.
        let start = gbest.unwrap_or((0, swarm[0].personal_best_fitness));
        let (bi, bf) = swarm.iter().enumerate().fold(start, |acc, (i, p)| {
            if p.personal_best_fitness < acc.1 {
                (i, p.personal_best_fitness)
            } else {
                acc
            }
        });
        gbest_pos.clone_from(&swarm[bi].personal_best);
        gbest = Some((bi, bf));
        trace.push(bf);
    }

    let best_fitness = gbest.map_or(f64::INFINITY, |(_, g)| g);
    Ok(PsoResult {
        best: DecisionVector(gbest_pos),
        best_fitness,
        fitness_trace: trace,
        iterations: cfg.iterations,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle(x: Vec<f64>, v: Vec<f64>, pbest: Vec<f64>) -> Particle {
        Particle {
            position: x,
            velocity: v,
            personal_best: pbest,
            personal_best_fitness: 0.0,
        }
    }

    fn unit_box(dim: usize) -> Bounds {
        Bounds::new(vec![0.0; dim], vec![1.0; dim]).unwrap()
    }

    #[test]
    fn velocity_vanishes_at_both_bests() {
        let p = particle(vec![0.3, 0.7], vec![0.0, 0.0], vec![0.3, 0.7]);
        let v = velocity_update(&p, &[0.3, 0.7], &[1.2, 0.4], &[1.9, 0.1], 1.1);
        assert_eq!(v, vec![0.0, 0.0]);
    }

    #[test]
    fn inertia_only() {
        let p = particle(vec![0.5], vec![0.2], vec![0.5]);
        let v = velocity_update(&p, &[0.5], &[2.0], &[2.0], 1.1);
        assert!((v[0] - 0.22).abs() < 1e-15);
    }

    #[test]
    fn pinned_draws_one_dimensional() {
        let p = particle(vec![0.0], vec![0.0], vec![1.0]);
        let v = velocity_update(&p, &[1.0], &[2.0], &[2.0], 1.1);
        assert_eq!(v, vec![4.0]);
    }

    #[test]
    fn clipped_position_update() {
        let b = unit_box(1);
        let cases = [(0.5, 0.3, 0.8), (0.9, 0.5, 1.0), (0.1, -0.5, 0.0)];
        for (x, w, want) in cases {
            let got = position_update(&particle(vec![x], vec![w], vec![x]), &b)[0];
            assert!((got - want).abs() < 1e-15, "{x}+{w} -> {got}");
        }
    }

    #[test]
    fn degenerate_bounds_pin_the_particle() {
        let b = Bounds::new(vec![0.25, -3.0], vec![0.25, -3.0]).unwrap();
        let cfg = PsoConfig {
            particles: 1,
            ..PsoConfig::default()
        };
        let s = initialize_swarm(&cfg, &b, &[], &mut seeded_rng(5)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].position, vec![0.25, -3.0]);
    }

    #[test]
    fn initial_swarm_is_seeded_and_still() {
        let b = Bounds::new(vec![-1.0, 0.0, 5.0], vec![1.0, 2.0, 6.0]).unwrap();
        let cfg = PsoConfig::default();
        let a = initialize_swarm(&cfg, &b, &[], &mut seeded_rng(17)).unwrap();
        let c = initialize_swarm(&cfg, &b, &[], &mut seeded_rng(17)).unwrap();
        assert_eq!(a, c);
        assert_eq!(a.len(), 20);
        for p in &a {
            assert!(p.velocity.iter().all(|v| *v == 0.0));
            assert!(b.contains(&p.position));
        }
        let base = DecisionVector(vec![0.0, 1.0, 5.5]);
        let s =
            initialize_swarm(&cfg, &b, std::slice::from_ref(&base), &mut seeded_rng(17)).unwrap();
        assert_eq!(s[0].position, base.0);
        assert_eq!(s[1..], a[1..]);
        let outside = DecisionVector(vec![0.0, 3.0, 5.5]);
        assert!(initialize_swarm(&cfg, &b, &[outside], &mut seeded_rng(1)).is_err());
    }

    #[test]
    fn zero_iterations_is_rejected_and_single_pass_picks_best_sample() {
        let b = unit_box(3);
        let cfg = PsoConfig {
            iterations: 0,
            ..PsoConfig::default()
        };
        assert!(run(&cfg, &b, &[], |_| Ok(0.0)).is_err());

        // One iteration: the t = 0 best is the minimum over the initial samples.
        let cfg = PsoConfig {
            iterations: 1,
            seed: 99,
            ..PsoConfig::default()
        };
        let f = |x: &[f64]| Ok(x.iter().map(|v| (v - 0.4).powi(2)).sum::<f64>());
        let init = initialize_swarm(&cfg, &b, &[], &mut seeded_rng(99)).unwrap();
        let best0 = init
            .iter()
            .map(|p| f(&p.position).unwrap())
            .fold(f64::INFINITY, f64::min);
        let r = run(&cfg, &b, &[], f).unwrap();
        assert_eq!(r.fitness_trace[0], best0);
        assert_eq!(r.fitness_trace.len(), 2);
        assert_eq!(r.evaluations, 40);
    }

    #[test]
    fn baseline_dominance() {
        let b = unit_box(4);
        let f = |x: &[f64]| {
            Ok(x.iter()
                .enumerate()
                .map(|(i, v)| (v - 0.1 * i as f64).abs())
                .sum::<f64>())
        };
        let base = DecisionVector(vec![0.0, 0.1, 0.2, 0.3]);
        for seed in 0..10 {
            let cfg = PsoConfig {
                seed,
                iterations: 5,
                ..PsoConfig::default()
            };
            let r = run(&cfg, &b, std::slice::from_ref(&base), f).unwrap();
            assert!(r.best_fitness <= f(&base).unwrap());
            assert!(r.best_fitness < 1e-12);
        }
    }

    #[test]
    fn fitness_errors_propagate() {
        let b = unit_box(2);
        let r = run(&PsoConfig::default(), &b, &[], |_| {
            Err(Error::Empty("boom"))
        });
        assert!(matches!(r, Err(Error::Empty("boom"))));
    }

    #[test]
    fn parallel_evaluation_matches_serial() {
        let b = Bounds::new(vec![-2.0; 3], vec![2.0; 3]).unwrap();
        let f = |x: &[f64]| Ok(x.iter().map(|v| v.sin() + v * v).sum::<f64>());
        let cfg = PsoConfig {
            seed: 3,
            iterations: 30,
            ..PsoConfig::default()
        };
        let serial = run(&cfg, &b, &[], f).unwrap();
        let par = run(
            &PsoConfig {
                parallel: true,
                ..cfg
            },
            &b,
            &[],
            f,
        )
        .unwrap();
        assert_eq!(serial, par);
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());
        assert!(Bounds::new(vec![f64::NEG_INFINITY], vec![0.0]).is_err());
        assert_eq!(Inertia::IterationRatio.value(150), 149.0 / 150.0);
    }
}
