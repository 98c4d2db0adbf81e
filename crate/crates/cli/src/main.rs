use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sisbf::channel::{
    generate_los_channel, linspace_hz, load_channel, reference_frequency_grid, save_channel,
    slice_band, ChannelFormat, SiChannel, DEFAULT_LOS_ALPHA, DEFAULT_SEPARATION_WAVELENGTHS,
};
use sisbf::geometry::ArrayLayout;
use sisbf::objective::{to_db_or_floor, ConstraintConfig, ANGLE_COORDS, DEFAULT_DB_FLOOR};
use sisbf::pso::PsoConfig;
use sisbf::sweep::{
    run_sweep, AngleAxis, SchemeKind, SubarraySelection, SweepContext, SweepGrid, SweepReport,
};

mod config;

use config::{parse_inertia, FileConfig};

#[derive(Parser, Debug)]
#[command(
    name = "sisbf",
    version,
    about = "Self-interference suppressing RF beamformer search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve every cell of an angle grid and write the CSV report.
    Sweep(RunArgs),
    /// Solve one nominal user geometry and print the beams found.
    Solve(RunArgs),
    /// Write a synthetic line-of-sight SI channel to a file.
    GenChannel(GenArgs),
    /// Print a summary of a channel file.
    InspectChannel(InspectArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Preset {
    /// ψ_D, ψ_U over 0:30:180 at θ = 90.
    Azimuth,
    /// θ_D, θ_U over 0:30:90 at ψ = 90.
    Elevation,
    /// θ_D over 0:30:90 and ψ_D over 0:30:180, uplink at 90/90.
    Downlink,
}

impl Preset {
    fn grid(self) -> SweepGrid {
        match self {
            Preset::Azimuth => SweepGrid::azimuth_pairs(),
            Preset::Elevation => SweepGrid::elevation_pairs(),
            Preset::Downlink => SweepGrid::downlink_directions(),
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Binary,
    Csv,
}

impl From<FormatArg> for ChannelFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => ChannelFormat::Binary,
            FormatArg::Csv => ChannelFormat::Csv,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML config file. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel file (.csv, anything else is read as binary).
    #[arg(long, conflicts_with = "synthetic")]
    channel: Option<PathBuf>,
    /// Use the synthetic line-of-sight channel (default when no file is given).
    #[arg(long)]
    synthetic: bool,
    /// Full Tx/Rx array size, e.g. 8x8. Relabels a loaded file.
    #[arg(long)]
    array: Option<ArrayLayout>,
    /// Synthetic array separation in carrier wavelengths.
    #[arg(long)]
    separation: Option<f64>,
    /// Sub-array used for beamforming, e.g. 2x2, 4x4 or 1x4.
    #[arg(long)]
    subarray: Option<ArrayLayout>,
    #[arg(long)]
    tx_block: Option<usize>,
    #[arg(long)]
    rx_block: Option<usize>,
    #[arg(long)]
    band_center_hz: Option<f64>,
    #[arg(long)]
    band_width_hz: Option<f64>,
    /// Allowed directivity loss per beam (default 5% of the element count).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Penalty weight for constraint violations.
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Constant inertia weight, or "ratio" for (T-1)/T.
    #[arg(long)]
    inertia: Option<String>,
    /// Upper end of the uniform attraction coefficients.
    #[arg(long)]
    omega_max: Option<f64>,
    /// Worker threads for sweep cells.
    #[arg(long)]
    threads: Option<usize>,
    /// Schemes to solve, comma separated (md, cm, ncm).
    #[arg(long, value_delimiter = ',')]
    scheme: Vec<SchemeKind>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Degrees: a value or start:step:stop.
    #[arg(long)]
    psi_d: Option<String>,
    #[arg(long)]
    psi_u: Option<String>,
    #[arg(long)]
    theta_d: Option<String>,
    #[arg(long)]
    theta_u: Option<String>,
    /// Output CSV (stdout for sweep when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Array size used for both Tx and Rx.
    #[arg(long, default_value = "8x8")]
    array: ArrayLayout,
    #[arg(long)]
    tx_array: Option<ArrayLayout>,
    #[arg(long)]
    rx_array: Option<ArrayLayout>,
    #[arg(long, default_value_t = DEFAULT_SEPARATION_WAVELENGTHS)]
    separation: f64,
    #[arg(long, default_value_t = DEFAULT_LOS_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = 3.0e9)]
    f_low_hz: f64,
    #[arg(long, default_value_t = 4.0e9)]
    f_high_hz: f64,
    #[arg(long, default_value_t = 1601)]
    points: usize,
    /// Defaults to the output file extension.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct InspectArgs {
    path: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Also report the band slice for this centre and width.
    #[arg(long, requires = "band_width_hz")]
    band_center_hz: Option<f64>,
    #[arg(long, requires = "band_center_hz")]
    band_width_hz: Option<f64>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::GenChannel(args) => cmd_gen(&args),
        Command::InspectChannel(args) => cmd_inspect(&args),
    }
}

struct Setup {
    ctx: SweepContext,
    grid: SweepGrid,
    schemes: Vec<SchemeKind>,
}

fn parse_layout(s: &str) -> Result<ArrayLayout> {
    s.parse().with_context(|| format!("bad array size {s:?}"))
}

fn axis(flag: &Option<String>, file: &Option<String>, fallback: &AngleAxis) -> Result<AngleAxis> {
    match flag.as_ref().or(file.as_ref()) {
        Some(s) => Ok(s.parse()?),
        None => Ok(fallback.clone()),
    }
}

fn setup(a: &RunArgs, single_cell: bool) -> Result<Setup> {
    let file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };

    let array = match (&a.array, &file.channel.array) {
        (Some(l), _) => Some(*l),
        (None, Some(s)) => Some(parse_layout(s)?),
        (None, None) => None,
    };
    let channel_file = if a.synthetic {
        None
    } else {
        a.channel.clone().or(match file.channel.synthetic {
            Some(true) => None,
            _ => file.channel.file.clone(),
        })
    };
    let channel = match channel_file {
        Some(path) => {
            let ch = load_channel(&path, ChannelFormat::from_path(&path))
                .with_context(|| format!("loading channel {}", path.display()))?;
            match array {
                Some(l) => ch.with_layouts(l, l)?,
                None => ch,
            }
        }
        None => {
            let l = array.unwrap_or(ArrayLayout::ura(8, 8)?);
            let sep = a
                .separation
                .or(file.channel.separation_wavelengths)
                .unwrap_or(DEFAULT_SEPARATION_WAVELENGTHS);
            let alpha = file.channel.alpha.unwrap_or(DEFAULT_LOS_ALPHA);
            generate_los_channel(&l, &l, sep, &reference_frequency_grid(), alpha)?
        }
    };

    let sub = match (&a.subarray, &file.subarray.layout) {
        (Some(l), _) => *l,
        (None, Some(s)) => parse_layout(s)?,
        (None, None) => ArrayLayout::ura(2, 2)?,
    };
    let selection = SubarraySelection {
        tx_layout: sub,
        rx_layout: sub,
        tx_block: a.tx_block.or(file.subarray.tx_block).unwrap_or(0),
        rx_block: a.rx_block.or(file.subarray.rx_block).unwrap_or(0),
    };

    let defaults = ConstraintConfig::default_for(sub.len(), sub.len());
    let constraints = ConstraintConfig::new(
        a.epsilon
            .or(file.constraints.epsilon)
            .unwrap_or(defaults.epsilon),
        a.penalty
            .or(file.constraints.penalty)
            .unwrap_or(defaults.penalty_weight),
    )?;

    let mut pso = PsoConfig::default();
    if let Some(p) = a.particles.or(file.pso.particles) {
        pso.particles = p;
    }
    if let Some(t) = a.iterations.or(file.pso.iterations) {
        pso.iterations = t;
    }
    if let Some(s) = a.seed.or(file.pso.seed) {
        pso.seed = s;
    }
    if let Some(w) = a.omega_max.or(file.pso.omega_max) {
        pso.omega1_max = w;
        pso.omega2_max = w;
    }
    match (&a.inertia, &file.pso.inertia) {
        (Some(s), _) => pso.inertia = parse_inertia(s)?,
        (None, Some(v)) => pso.inertia = v.resolve()?,
        (None, None) => {}
    }
    pso.validate()?;

    let center = a.band_center_hz.or(file.band.center_hz).unwrap_or(3.5e9);
    let width = a.band_width_hz.or(file.band.width_hz).unwrap_or(20e6);
    let mut ctx = SweepContext::new(&channel, &selection, center, width, constraints, pso)
        .context("preparing the sub-array channel")?;
    ctx.threads = a.threads.or(file.pso.threads);

    let preset = match (a.preset, &file.grid.preset) {
        (Some(p), _) => p,
        (None, Some(s)) => Preset::from_str(s, true).map_err(anyhow::Error::msg)?,
        (None, None) => Preset::Azimuth,
    };
    let base = if single_cell {
        let ninety = AngleAxis::single(90.0)?;
        SweepGrid {
            psi_d: ninety.clone(),
            psi_u: ninety.clone(),
            theta_d: ninety.clone(),
            theta_u: ninety,
        }
    } else {
        preset.grid()
    };
    let g = &file.grid;
    let grid = SweepGrid {
        psi_d: axis(&a.psi_d, &g.psi_d, &base.psi_d)?,
        psi_u: axis(&a.psi_u, &g.psi_u, &base.psi_u)?,
        theta_d: axis(&a.theta_d, &g.theta_d, &base.theta_d)?,
        theta_u: axis(&a.theta_u, &g.theta_u, &base.theta_u)?,
    };

    let schemes = if !a.scheme.is_empty() {
        a.scheme.clone()
    } else if let Some(list) = &g.schemes {
        list.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    } else {
        SchemeKind::ALL.to_vec()
    };
    Ok(Setup { ctx, grid, schemes })
}

fn write_report(report: &SweepReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            report.write_csv(BufWriter::new(f))?;
        }
        None => report.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_sweep(a: &RunArgs) -> Result<()> {
    let s = setup(a, false)?;
    let report = run_sweep(&s.grid, &s.schemes, &s.ctx)?;
    write_report(&report, a.out.as_deref())?;
    for (kind, agg) in &report.aggregates {
        eprintln!(
            "{kind:>4}: best {:.2} dB, worst {:.2} dB, avg {:.2} dB over {} cells",
            agg.best,
            agg.worst,
            agg.average,
            report.cells.len()
        );
    }
    Ok(())
}

fn cmd_solve(a: &RunArgs) -> Result<()> {
    // Angles not given default to 90°.
    let s = setup(a, true)?;
    if s.grid.len() != 1 {
        bail!("solve needs one value per angle; use `sweep` for ranges");
    }
    let report = run_sweep(&s.grid, &s.schemes, &s.ctx)?;
    let cell = &report.cells[0];
    let c = cell.angles;
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "downlink θ={}° ψ={}°, uplink θ={}° ψ={}°, ε={}",
        c.theta_d, c.psi_d, c.theta_u, c.psi_u, s.ctx.constraints.epsilon
    )?;
    for sol in &cell.solutions {
        let x = &sol.x;
        writeln!(
            out,
            "{:>4}: SI {:.2} dB (suppression {:.2} dB), degradation tx {:.4} rx {:.4}, {} iterations",
            sol.kind,
            sol.eval.si_level_db(),
            sol.eval.suppression_db,
            sol.eval.tx_degradation,
            sol.eval.rx_degradation,
            sol.iterations_used
        )?;
        writeln!(
            out,
            "      steer D θ={:.3}° ψ={:.3}°, U θ={:.3}° ψ={:.3}°",
            x[0].to_degrees(),
            x[2].to_degrees(),
            x[1].to_degrees(),
            x[3].to_degrees()
        )?;
        let gains = &x[ANGLE_COORDS..];
        let (tx, rx) = gains.split_at(gains.len() / 2);
        writeln!(out, "      tx gains {}", fmt_gains(tx))?;
        writeln!(out, "      rx gains {}", fmt_gains(rx))?;
    }
    if let Some(p) = &a.out {
        write_report(&report, Some(p))?;
    }
    Ok(())
}

fn fmt_gains(g: &[f64]) -> String {
    let parts: Vec<String> = g.iter().map(|v| format!("{v:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    if a.points == 0
        || a.f_low_hz
            .partial_cmp(&a.f_high_hz)
            .is_none_or(|o| o.is_gt())
    {
        bail!("need at least one point and f-low <= f-high");
    }
    let tx = a.tx_array.unwrap_or(a.array);
    let rx = a.rx_array.unwrap_or(a.array);
    let freqs = linspace_hz(a.f_low_hz, a.f_high_hz, a.points);
    let ch = generate_los_channel(&tx, &rx, a.separation, &freqs, a.alpha)?;
    let format = a
        .format
        .map(Into::into)
        .unwrap_or_else(|| ChannelFormat::from_path(&a.out));
    save_channel(&ch, &a.out, format)?;
    eprintln!(
        "wrote {} ({} rx x {} tx x {} frequencies)",
        a.out.display(),
        ch.n_rx(),
        ch.n_tx(),
        ch.n_freqs()
    );
    Ok(())
}

fn describe(ch: &SiChannel) -> String {
    let f = ch.freqs_hz();
    format!(
        "rx elements: {} ({})\ntx elements: {} ({})\nfrequencies: {} points, {} Hz to {} Hz\nmean power: {:.2} dB",
        ch.n_rx(),
        ch.rx_layout(),
        ch.n_tx(),
        ch.tx_layout(),
        f.len(),
        f[0],
        f[f.len() - 1],
        -to_db_or_floor(ch.mean_power(), DEFAULT_DB_FLOOR),
    )
}

fn cmd_inspect(a: &InspectArgs) -> Result<()> {
    let format = a
        .format
        .map(Into::into)
        .unwrap_or_else(|| ChannelFormat::from_path(&a.path));
    let ch = load_channel(&a.path, format)
        .with_context(|| format!("loading channel {}", a.path.display()))?;
    println!("file: {}", a.path.display());
    println!("{}", describe(&ch));
    if let (Some(c), Some(w)) = (a.band_center_hz, a.band_width_hz) {
        let band = slice_band(&ch, c, w)?;
        let r = band.indices();
        println!(
            "band: {} points (indices {}..{})",
            band.len(),
            r.start,
            r.end
        );
    }
    Ok(())
}
