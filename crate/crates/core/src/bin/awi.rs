use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use awi_core::hamiltonian::Level;
use awi_core::mcwf::{run_ensemble, write_events_csv, TrajectoryConfig};
use awi_core::periods::{empirical_stats, write_stats_csv};
use awi_core::scheme::{dimensionless_preset, hg_field_preset, validity_check, HG_PUMP_US_INV};
use awi_core::semianalytic::summarize;
use awi_core::sweep::{compare_methods, run_sweep, write_csv, write_report, McwfSettings, Method, SweepAxis, SweepSpec};
use awi_core::{Error, Result, SchemeParams, Units};

#[derive(Parser)]
#[command(name = "awi", version, about = "Four-level amplification-without-inversion toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a parameter file for a built-in operating point.
    Preset {
        #[arg(value_enum)]
        name: PresetName,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady-state probe response and populations over a grid.
    DmeSweep(SweepArgs),
    /// Closed-form period probabilities at one point, or over a grid.
    Semianalytic(SweepArgs),
    /// Run a trajectory ensemble and dump its jump events.
    McwfRun(RunArgs),
    /// Run a trajectory ensemble and write its period statistics.
    Periods(RunArgs),
    /// Cross-method comparison over a grid.
    Compare(SweepArgs),
    /// General sweep with a selectable method.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetName {
    /// Hg decay rates and field set, no pump (units of 2π MHz).
    Hg,
    /// As `hg` with the pump rate that produces gain.
    HgPumped,
    /// The dimensionless operating point (units of γ₂₁).
    Dimensionless,
}

#[derive(Args)]
struct Common {
    /// TOML parameter file; defaults to the dimensionless preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Units of the parameter file and sweep values; overrides the file.
    #[arg(long)]
    units: Option<Units>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    trajectories: usize,
    /// Step in units of γ₂₁⁻¹; defaults to the largest admissible step.
    #[arg(long)]
    dt: Option<f64>,
    /// Trajectory length in units of γ₂₁⁻¹.
    #[arg(long, default_value_t = 500.0)]
    tmax: f64,
    /// Periods starting before this time are discarded.
    #[arg(long, default_value_t = 50.0)]
    burn_in: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Swept parameter as name:min:max:count; at most twice.
    #[arg(long, value_parser = parse_axis)]
    sweep: Vec<SweepAxis>,
    /// Only used by `sweep`.
    #[arg(long, default_value = "dme")]
    method: Method,
    #[command(flatten)]
    ensemble: EnsembleArgs,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// Level every trajectory starts in.
    #[arg(long, default_value_t = 2)]
    initial_level: u8,
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(common: &Common) -> Result<(SchemeParams, Units)> {
    let (params, file_units) = match &common.config {
        Some(path) => SchemeParams::load(path)?,
        None => (dimensionless_preset(), Units::Gamma21),
    };
    Ok((params, common.units.unwrap_or(file_units)))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn settings(e: &EnsembleArgs) -> McwfSettings {
    McwfSettings { trajectories: e.trajectories, dt: e.dt, t_max: e.tmax, burn_in: e.burn_in, seed: e.seed }
}

fn sweep_spec(args: &SweepArgs, method: Method) -> Result<SweepSpec> {
    let (base, units) = load(&args.common)?;
    let spec = SweepSpec { base, units, axes: args.sweep.clone(), method, mcwf: settings(&args.ensemble) };
    spec.validate()?;
    Ok(spec)
}

fn sweep_to_csv(args: &SweepArgs, method: Method) -> Result<()> {
    let spec = sweep_spec(args, method)?;
    let rows = run_sweep(&spec)?;
    let mut out = output(&args.common.out)?;
    write_csv(&mut out, &spec, &rows)?;
    out.flush()?;
    Ok(())
}

fn warn_validity(p: &SchemeParams) {
    for w in validity_check(p).warnings {
        eprintln!("warning: {w}");
    }
}

fn point_summary(args: &SweepArgs) -> Result<()> {
    let (base, units) = load(&args.common)?;
    let p = base.to_gamma21_units(units)?.0;
    warn_validity(&p);
    let s = summarize(&p)?;
    let mut out = output(&args.common.out)?;
    writeln!(out, "i,j,P_ij")?;
    for i in [Level::One, Level::Two, Level::Four] {
        for j in [Level::One, Level::Two, Level::Three] {
            writeln!(out, "{i},{j},{}", s.table.pair(i, j))?;
        }
    }
    writeln!(out, "# P_start = {:?}", s.table.p_start)?;
    writeln!(out, "# mean_delta_np = {}", s.mean_delta_np)?;
    match s.threshold {
        Some(t) => writeln!(out, "# one_photon_threshold = {t}")?,
        None => writeln!(out, "# one_photon_threshold = none")?,
    }
    out.flush()?;
    Ok(())
}

fn ensemble(args: &RunArgs) -> Result<(SchemeParams, Vec<awi_core::mcwf::Trajectory>)> {
    let (base, units) = load(&args.common)?;
    let p = base.to_gamma21_units(units)?.0;
    let level = Level::from_number(args.initial_level)
        .ok_or_else(|| Error::InvalidConfig(format!("initial level {} is not in 1..4", args.initial_level)))?;
    let e = &args.ensemble;
    let mut cfg = TrajectoryConfig { initial_level: level, ..TrajectoryConfig::for_params(&p, e.tmax, e.seed) };
    if let Some(dt) = e.dt {
        cfg.dt = dt;
    }
    Ok((p, run_ensemble(&p, &cfg, e.trajectories)?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preset { name, out } => {
            let (params, units) = match name {
                PresetName::Hg => (hg_field_preset().scaled(1.0 / Units::TwoPiMhz.to_us_inv()), Units::TwoPiMhz),
                PresetName::HgPumped => {
                    let p = SchemeParams { lambda_pump: HG_PUMP_US_INV, ..hg_field_preset() };
                    (p.scaled(1.0 / Units::TwoPiMhz.to_us_inv()), Units::TwoPiMhz)
                }
                PresetName::Dimensionless => (dimensionless_preset(), Units::Gamma21),
            };
            let mut w = output(&out)?;
            w.write_all(params.to_toml(units).as_bytes())?;
            w.flush()?;
            Ok(())
        }
        Command::DmeSweep(args) => sweep_to_csv(&args, Method::Dme),
        Command::Semianalytic(args) => {
            if args.sweep.is_empty() {
                point_summary(&args)
            } else {
                sweep_to_csv(&args, Method::Semianalytic)
            }
        }
        Command::Sweep(args) => sweep_to_csv(&args, args.method),
        Command::Compare(args) => {
            let spec = sweep_spec(&args, Method::All)?;
            let report = compare_methods(&spec)?;
            let mut out = output(&args.common.out)?;
            write_report(&mut out, &spec, &report)?;
            out.flush()?;
            Ok(())
        }
        Command::McwfRun(args) => {
            let (_, trajectories) = ensemble(&args)?;
            let mut out = output(&args.common.out)?;
            write_events_csv(&mut out, &trajectories)?;
            out.flush()?;
            Ok(())
        }
        Command::Periods(args) => {
            let (p, trajectories) = ensemble(&args)?;
            warn_validity(&p);
            let stats = empirical_stats(&trajectories, args.ensemble.burn_in)?;
            let mut out = output(&args.common.out)?;
            write_stats_csv(&mut out, &stats)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
