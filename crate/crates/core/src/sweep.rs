//! The three comparison schemes and angle-grid sweeps over them.
//!
//! - MD: beams steered exactly at the users with unit gains.
//! - CM: steering angles optimized, gains pinned to one.
//! - NCM: steering angles and every per-element gain optimized jointly.
//!
//! CM and NCM swarms start with the MD point in them, and NCM additionally
//! with the CM solution, so per cell `fitness(NCM) <= fitness(CM) <= fitness(MD)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{extract_subarray, slice_band, BandSlice, SiChannel};
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, SteeringAngles};
use crate::objective::{ConstraintConfig, SiEvaluation, SiProblem, ANGLE_COORDS};
use crate::pso::{self, Bounds, DecisionVector, PsoConfig};

pub const CSV_HEADER: [&str; 9] = [
    "psi_d_deg",
    "psi_u_deg",
    "theta_d_deg",
    "theta_u_deg",
    "scheme",
    "si_level_db",
    "tx_degradation",
    "rx_degradation",
    "iterations_used",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    /// Maximum directivity: exact steering, unit gains.
    Md,
    /// Constant modulus: optimized angles, unit gains.
    Cm,
    /// Non-constant modulus: optimized angles and gains.
    Ncm,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Md, SchemeKind::Cm, SchemeKind::Ncm];

    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::Md => "MD",
            SchemeKind::Cm => "CM",
            SchemeKind::Ncm => "NCM",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let t = t.strip_suffix("-BF-SIS").unwrap_or(&t);
        match t {
            "MD" => Ok(SchemeKind::Md),
            "CM" => Ok(SchemeKind::Cm),
            "NCM" => Ok(SchemeKind::Ncm),
            _ => Err(Error::InvalidConfig(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Search box for `kind`: angles in `[0, 2π]`, gains in `[0, 1]` (NCM) or
/// pinned at 1 (CM and MD).
pub fn scheme_bounds(kind: SchemeKind, problem: &SiProblem) -> Result<Bounds> {
    let gains = problem.dimension() - ANGLE_COORDS;
    let gain_low = match kind {
        SchemeKind::Ncm => 0.0,
        SchemeKind::Cm | SchemeKind::Md => 1.0,
    };
    let mut lower = vec![0.0; ANGLE_COORDS];
    let mut upper = vec![2.0 * PI; ANGLE_COORDS];
    lower.extend(std::iter::repeat_n(gain_low, gains));
    upper.extend(std::iter::repeat_n(1.0, gains));
    Bounds::new(lower, upper)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSolution {
    pub kind: SchemeKind,
    pub x: DecisionVector,
    pub eval: SiEvaluation,
    /// Penalized objective at `x`.
    pub fitness: f64,
    /// Optimizer iterations (0 for MD).
    pub iterations_used: usize,
    /// Global best before the first move and at the end of the run.
    pub initial_fitness: f64,
    pub evaluations: usize,
}

/// Solves one scheme on `problem`. `extra_seeds` are placed in the swarm after
/// the MD point (ignored for MD).
pub fn solve_scheme(
    kind: SchemeKind,
    problem: &SiProblem,
    pso_cfg: &PsoConfig,
    extra_seeds: &[DecisionVector],
) -> Result<SchemeSolution> {
    for a in [problem.nominal_tx(), problem.nominal_rx()] {
        if !a.in_search_range() {
            return Err(Error::InvalidGrid(format!(
                "nominal angles ({}, {}) rad lie outside [0, 2π]",
                a.theta, a.psi
            )));
        }
    }
    let md = DecisionVector(problem.nominal_point());
    if kind == SchemeKind::Md {
        let eval = problem.evaluate(&md)?;
        let fitness = eval.mean_si_power + problem.penalty(&eval);
        return Ok(SchemeSolution {
            kind,
            x: md,
            eval,
            fitness,
            iterations_used: 0,
            initial_fitness: fitness,
            evaluations: 1,
        });
    }

    let bounds = scheme_bounds(kind, problem)?;
    let mut seeds = vec![md];
    seeds.extend(extra_seeds.iter().filter(|s| bounds.contains(s)).cloned());
    let res = pso::run(pso_cfg, &bounds, &seeds, |x| problem.fitness(x))?;
    let eval = problem.evaluate(&res.best)?;
    Ok(SchemeSolution {
        kind,
        eval,
        fitness: res.best_fitness,
        iterations_used: res.iterations,
        initial_fitness: res.fitness_trace[0],
        evaluations: res.evaluations,
        x: res.best,
    })
}

/// Solves the requested schemes in MD, CM, NCM order, handing the CM
/// solution to NCM as an extra seed.
pub fn solve_cell(
    problem: &SiProblem,
    schemes: &[SchemeKind],
    pso_cfg: &PsoConfig,
) -> Result<Vec<SchemeSolution>> {
    let mut wanted: Vec<SchemeKind> = schemes.to_vec();
    wanted.sort();
    wanted.dedup();
    let mut out: Vec<SchemeSolution> = Vec::with_capacity(wanted.len());
    for kind in wanted {
        let extra: Vec<DecisionVector> = out
            .iter()
            .filter(|s| s.kind == SchemeKind::Cm && kind == SchemeKind::Ncm)
            .map(|s| s.x.clone())
            .collect();
        out.push(solve_scheme(kind, problem, pso_cfg, &extra)?);
    }
    Ok(out)
}

/// Angle values in degrees, parsed from `"start:step:stop"` (inclusive) or a
/// single number.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleAxis(pub Vec<f64>);

impl AngleAxis {
    pub fn range(start: f64, step: f64, stop: f64) -> Result<Self> {
        if !(start.is_finite() && step.is_finite() && stop.is_finite()) {
            return Err(Error::InvalidGrid("non-finite range".into()));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step}"
            )));
        }
        if stop < start {
            return Err(Error::InvalidGrid(format!(
                "range {start}:{step}:{stop} is empty"
            )));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Self::values((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn single(value: f64) -> Result<Self> {
        Self::values(vec![value])
    }

    pub fn values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("axis has no values".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=360.0).contains(*v)) {
            return Err(Error::InvalidGrid(format!("angle {v}° outside [0°, 360°]")));
        }
        Ok(Self(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for AngleAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidGrid(format!(
                "expected <deg> or <start>:<step>:<stop>, got {s:?}"
            ))
        };
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match parts[..] {
            [v] => Self::single(v),
            [a, st, b] => Self::range(a, st, b),
            _ => Err(bad()),
        }
    }
}

/// Cartesian grid of nominal user directions, in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub psi_d: AngleAxis,
    pub psi_u: AngleAxis,
    pub theta_d: AngleAxis,
    pub theta_u: AngleAxis,
}

/// Nominal directions of one grid cell, in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellAngles {
    pub psi_d: f64,
    pub psi_u: f64,
    pub theta_d: f64,
    pub theta_u: f64,
}

impl CellAngles {
    pub fn tx(&self) -> Result<SteeringAngles> {
        SteeringAngles::from_degrees(self.theta_d, self.psi_d)
    }

    pub fn rx(&self) -> Result<SteeringAngles> {
        SteeringAngles::from_degrees(self.theta_u, self.psi_u)
    }
}

impl SweepGrid {
    /// Azimuth pairs `{ψ_D, ψ_U} ∈ 0°:30°:180°` at `θ_D = θ_U = 90°` (49 cells).
    pub fn azimuth_pairs() -> Self {
        Self {
            psi_d: AngleAxis::range(0.0, 30.0, 180.0).unwrap(),
            psi_u: AngleAxis::range(0.0, 30.0, 180.0).unwrap(),
            theta_d: AngleAxis::single(90.0).unwrap(),
            theta_u: AngleAxis::single(90.0).unwrap(),
        }
    }

    /// Elevation pairs `{θ_D, θ_U} ∈ 0°:30°:90°` at `ψ_D = ψ_U = 90°` (16 cells).
    pub fn elevation_pairs() -> Self {
        Self {
            psi_d: AngleAxis::single(90.0).unwrap(),
            psi_u: AngleAxis::single(90.0).unwrap(),
            theta_d: AngleAxis::range(0.0, 30.0, 90.0).unwrap(),
            theta_u: AngleAxis::range(0.0, 30.0, 90.0).unwrap(),
        }
    }

    /// Downlink direction `θ_D ∈ 0°:30°:90°`, `ψ_D ∈ 0°:30°:180°` with the
    /// uplink user fixed at `θ_U = ψ_U = 90°` (28 cells).
    pub fn downlink_directions() -> Self {
        Self {
            psi_d: AngleAxis::range(0.0, 30.0, 180.0).unwrap(),
            psi_u: AngleAxis::single(90.0).unwrap(),
            theta_d: AngleAxis::range(0.0, 30.0, 90.0).unwrap(),
            theta_u: AngleAxis::single(90.0).unwrap(),
        }
    }

    pub fn len(&self) -> usize {
        self.psi_d.len() * self.psi_u.len() * self.theta_d.len() * self.theta_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells in CSV column order: `ψ_D` outermost, `θ_U` innermost.
    pub fn cells(&self) -> Vec<CellAngles> {
        let mut out = Vec::with_capacity(self.len());
        for &psi_d in &self.psi_d.0 {
            for &psi_u in &self.psi_u.0 {
                for &theta_d in &self.theta_d.0 {
                    for &theta_u in &self.theta_u.0 {
                        out.push(CellAngles {
                            psi_d,
                            psi_u,
                            theta_d,
                            theta_u,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Which Tx and Rx tiles of the full arrays to use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubarraySelection {
    pub tx_layout: ArrayLayout,
    pub rx_layout: ArrayLayout,
    pub tx_block: usize,
    pub rx_block: usize,
}

impl SubarraySelection {
    /// Same layout on both sides, first tile of each array.
    pub fn first_block(layout: ArrayLayout) -> Self {
        Self {
            tx_layout: layout,
            rx_layout: layout,
            tx_block: 0,
            rx_block: 0,
        }
    }
}

/// Everything a sweep needs besides the grid.
#[derive(Debug, Clone)]
pub struct SweepContext {
    channel: SiChannel,
    pub constraints: ConstraintConfig,
    pub pso: PsoConfig,
    /// Worker threads for cells; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl SweepContext {
    /// Extracts the selected sub-array channel from `full` and keeps only the
    /// samples of the band centred at `center_hz`.
    pub fn new(
        full: &SiChannel,
        selection: &SubarraySelection,
        center_hz: f64,
        bandwidth_hz: f64,
        constraints: ConstraintConfig,
        pso: PsoConfig,
    ) -> Result<Self> {
        let sub = extract_subarray(
            full,
            selection.tx_block,
            selection.rx_block,
            &selection.tx_layout,
            &selection.rx_layout,
        )?;
        let band = slice_band(&sub, center_hz, bandwidth_hz)?;
        Ok(Self {
            channel: sub.select_band(&band)?,
            constraints,
            pso,
            threads: None,
        })
    }

    /// Sub-array channel restricted to the band.
    pub fn channel(&self) -> &SiChannel {
        &self.channel
    }

    pub fn problem(&self, cell: &CellAngles) -> Result<SiProblem> {
        SiProblem::new(
            &self.channel,
            &BandSlice::full(&self.channel),
            cell.tx()?,
            cell.rx()?,
            self.constraints,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub angles: CellAngles,
    pub solutions: Vec<SchemeSolution>,
}

impl CellResult {
    pub fn solution(&self, kind: SchemeKind) -> Option<&SchemeSolution> {
        self.solutions.iter().find(|s| s.kind == kind)
    }
}

/// Best (lowest), worst (highest) and mean SI level in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub best: f64,
    pub worst: f64,
    pub average: f64,
}

pub fn aggregate(levels_db: &[f64]) -> Result<Aggregate> {
    if levels_db.is_empty() {
        return Err(Error::Empty("no cells to aggregate"));
    }
    let best = levels_db.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = levels_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let average = levels_db.iter().sum::<f64>() / levels_db.len() as f64;
    Ok(Aggregate {
        best,
        worst,
        average,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<(SchemeKind, Aggregate)>,
}

impl SweepReport {
    pub fn aggregate_for(&self, kind: SchemeKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, a)| a)
    }

    /// Writes one row per (cell, scheme) and then `best`/`worst`/`avg` rows per
    /// scheme, with the angle and degradation columns left empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(CSV_HEADER)?;
        for cell in &self.cells {
            let a = &cell.angles;
            for s in &cell.solutions {
                wtr.write_record([
                    a.psi_d.to_string(),
                    a.psi_u.to_string(),
                    a.theta_d.to_string(),
                    a.theta_u.to_string(),
                    s.kind.to_string(),
                    s.eval.si_level_db().to_string(),
                    s.eval.tx_degradation.to_string(),
                    s.eval.rx_degradation.to_string(),
                    s.iterations_used.to_string(),
                ])?;
            }
        }
        for (kind, agg) in &self.aggregates {
            for (suffix, v) in [
                ("best", agg.best),
                ("worst", agg.worst),
                ("avg", agg.average),
            ] {
                wtr.write_record([
                    "",
                    "",
                    "",
                    "",
                    &format!("{kind}:{suffix}"),
                    &v.to_string(),
                    "",
                    "",
                    "",
                ])?;
            }
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Solves every cell of `grid` for every scheme in `schemes`.
///
/// Cell `i` runs its optimizers with seed `ctx.pso.seed ^ i`, so results do
/// not depend on scheduling.
pub fn run_sweep(
    grid: &SweepGrid,
    schemes: &[SchemeKind],
    ctx: &SweepContext,
) -> Result<SweepReport> {
    if schemes.is_empty() {
        return Err(Error::Empty("no schemes requested"));
    }
    let cells = grid.cells();
    let solve = |(i, angles): (usize, &CellAngles)| -> Result<CellResult> {
        let problem = ctx.problem(angles)?;
        let cfg = PsoConfig {
            seed: ctx.pso.seed ^ i as u64,
            ..ctx.pso.clone()
        };
        Ok(CellResult {
            angles: *angles,
            solutions: solve_cell(&problem, schemes, &cfg)?,
        })
    };
    let results: Result<Vec<CellResult>> = match ctx.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| cells.par_iter().enumerate().map(solve).collect()),
        None => cells.par_iter().enumerate().map(solve).collect(),
    };
    let cells = results?;

    let mut kinds: Vec<SchemeKind> = schemes.to_vec();
    kinds.sort();
    kinds.dedup();
    let aggregates = kinds
        .into_iter()
        .map(|k| {
            let levels: Vec<f64> = cells
                .iter()
                .filter_map(|c| c.solution(k))
                .map(|s| s.eval.si_level_db())
                .collect();
            aggregate(&levels).map(|a| (k, a))
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport { cells, aggregates })
}
