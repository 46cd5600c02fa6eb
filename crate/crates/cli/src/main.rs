use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use gapcast_core::gap::{GapCenter, GapConfig};
use gapcast_core::pattern::{build_tau, pattern_case, Case, Orientation, PatternKind};
use gapcast_core::{
    kernel_freq_error, project_gap, synth_kernel, z_transform_on_grid, Error as CoreError,
    ObservationPattern, PredictorParams64, RecoveryTask64, Signal64, SpectralGap64,
};
use gapcast_cli::config::{default_spec, ExperimentSpec, TaskConfig, TaskSignal};
use gapcast_cli::gen::{materialize, Truth};
use gapcast_cli::sweep::{run_sweep, write_csv, write_json};
use gapcast_cli::{AppError, AppResult};

#[derive(Parser)]
#[command(name = "gapcast", version, about = "Predict gap-band-limited signals from sparse observations")]
struct Cli {
    /// JSON configuration file (experiment spec for `sweep`, task for
    /// `recover`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker threads for row-parallel commands (1 = sequential).
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Predictor kernel synthesis and diagnostics.
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Project a signal (t,re,im CSV) onto the complement of a gap arc.
    Project {
        /// Input signal CSV.
        #[arg(long)]
        input: PathBuf,
        /// Transform grid size (power of two, >= signal length).
        #[arg(long)]
        grid: usize,
        /// Arc center: "pi", "zero", or radians.
        #[arg(long, default_value = "pi")]
        center: String,
        /// Arc chord diameter.
        #[arg(long)]
        delta: f64,
    },
    /// Observation pattern tooling.
    Patterns {
        #[command(subcommand)]
        cmd: PatternsCmd,
    },
    /// Run a single recovery task described by --config.
    Recover,
    /// Run the (gamma, N, rho) sweep from --config; the bundled default
    /// spec when --config is omitted.
    Sweep,
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Synthesize the taps of one kernel.
    Synth {
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        r_hat: f64,
        /// Prediction horizon.
        #[arg(long)]
        m: u32,
        /// Number of taps N.
        #[arg(long)]
        taps: usize,
        /// Mask arc center ("pi", "zero", or radians); unmasked when absent.
        #[arg(long)]
        center: Option<String>,
        /// Mask arc chord diameter; required with --center.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Worst off-arc deviation of the response from the pure shift.
    FreqError {
        /// May repeat; one output row per value.
        #[arg(long, required = true)]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        r_hat: f64,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value = "pi")]
        center: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
}

#[derive(Subcommand)]
enum PatternsCmd {
    /// Enumerate a pattern around its anchor and classify target sets.
    Show {
        /// Pattern: "contiguous", "periodic:S", "power:D",
        /// "power-reflected:D", "signed-power:S,D", "explicit:p1,p2,...",
        /// or inline JSON.
        #[arg(long)]
        pattern: String,
        /// Mirror the pattern through t -> -t.
        #[arg(long)]
        backward: bool,
        #[arg(long, default_value_t = 0)]
        theta: i64,
        /// Number of enumeration entries to materialize.
        #[arg(long, default_value_t = 16)]
        depth: usize,
        /// Comma-separated targets to classify against.
        #[arg(long)]
        targets: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> AppResult<()> {
    let mut out = out_writer(&cli.out)?;
    match cli.cmd {
        Cmd::Kernel { cmd } => kernel_cmd(cmd, cli.format, &mut out),
        Cmd::Project { input, grid, center, delta } => {
            project_cmd(&input, grid, &center, delta, cli.format, &mut out)
        }
        Cmd::Patterns { cmd } => patterns_cmd(cmd, cli.format, &mut out),
        Cmd::Recover => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| AppError::Config("recover requires --config".into()))?;
            recover_cmd(path, cli.format, &mut out)
        }
        Cmd::Sweep => {
            let spec = match &cli.config {
                Some(path) => read_config::<ExperimentSpec>(path)?,
                None => default_spec(),
            };
            let rows = run_sweep(&spec, cli.parallel)?;
            match cli.format {
                Format::Csv => write_csv(&rows, &mut out),
                Format::Json => write_json(&rows, &mut out),
            }
        }
    }?;
    out.flush()?;
    Ok(())
}

fn out_writer(out: &Option<PathBuf>) -> AppResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn read_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> AppResult<T> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

fn parse_center(s: &str) -> AppResult<GapCenter> {
    match s {
        "pi" | "zero" => Ok(GapCenter::Named(s.to_string())),
        _ => s
            .parse::<f64>()
            .map(GapCenter::Radians)
            .map_err(|_| AppError::Config(format!("bad arc center {s:?}"))),
    }
}

fn build_gap(center: &str, delta: f64) -> AppResult<SpectralGap64> {
    let cfg = GapConfig { center: parse_center(center)?, delta };
    Ok(cfg.to_gap()?)
}

fn kernel_cmd(cmd: KernelCmd, format: Format, out: &mut dyn Write) -> AppResult<()> {
    match cmd {
        KernelCmd::Synth { gamma, r_hat, m, taps, center, delta } => {
            let gap = match (center, delta) {
                (Some(c), Some(d)) => Some(build_gap(&c, d)?),
                (None, None) => None,
                _ => {
                    return Err(AppError::Config(
                        "--center and --delta must be given together".into(),
                    ))
                }
            };
            let params = PredictorParams64::new(gamma, r_hat)?;
            let kernel = synth_kernel(m, &params, taps, gap.as_ref())?;
            match format {
                Format::Csv => kernel.write_taps_csv(out)?,
                Format::Json => {
                    let doc = serde_json::json!({
                        "meta": kernel.meta(),
                        "taps": kernel.taps,
                    });
                    serde_json::to_writer_pretty(&mut *out, &doc).map_err(CoreError::from)?;
                    writeln!(out)?;
                }
            }
            Ok(())
        }
        KernelCmd::FreqError { gamma, r_hat, m, center, delta, grid } => {
            let gap = build_gap(&center, delta)?;
            let mut rows = Vec::new();
            for &g in &gamma {
                let params = PredictorParams64::new(g, r_hat)?;
                rows.push((g, kernel_freq_error(m, &params, &gap, grid)?));
            }
            match format {
                Format::Csv => {
                    writeln!(out, "gamma,freq_error")?;
                    for (g, fe) in rows {
                        writeln!(out, "{g},{fe}")?;
                    }
                }
                Format::Json => {
                    let doc: Vec<_> = rows
                        .iter()
                        .map(|(g, fe)| serde_json::json!({"gamma": g, "freq_error": fe}))
                        .collect();
                    serde_json::to_writer_pretty(&mut *out, &doc).map_err(CoreError::from)?;
                    writeln!(out)?;
                }
            }
            Ok(())
        }
    }
}

fn project_cmd(
    input: &PathBuf,
    grid: usize,
    center: &str,
    delta: f64,
    format: Format,
    out: &mut dyn Write,
) -> AppResult<()> {
    let gap = build_gap(center, delta)?;
    let signal = Signal64::read_csv(BufReader::new(File::open(input)?))?;
    let projected = project_gap(&signal, &gap, grid)?;
    let spectrum = z_transform_on_grid(&signal, grid)?;
    let mut removed = 0.0f64;
    for j in 0..grid {
        if gap.in_gap(spectrum.omega(j)) {
            removed += spectrum.values()[j].norm_sqr();
        }
    }
    let residual = (removed / grid as f64).sqrt();
    match format {
        Format::Csv => projected.write_csv(&mut *out)?,
        Format::Json => {
            let rows: Vec<_> = projected
                .iter()
                .map(|(t, v)| serde_json::json!({"t": t, "re": v.re, "im": v.im}))
                .collect();
            let doc = serde_json::json!({"removed_l2": residual, "signal": rows});
            serde_json::to_writer_pretty(&mut *out, &doc).map_err(CoreError::from)?;
            writeln!(out)?;
        }
    }
    eprintln!("removed_l2 = {residual}");
    Ok(())
}

fn parse_pattern(text: &str, backward: bool) -> AppResult<ObservationPattern> {
    let kind: PatternKind = if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| AppError::Config(format!("pattern: {e}")))?
    } else {
        let (name, args) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let ints = |a: Option<&str>| -> AppResult<Vec<i64>> {
            a.unwrap_or("")
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<i64>()
                        .map_err(|_| AppError::Config(format!("bad pattern argument {s:?}")))
                })
                .collect()
        };
        match name {
            "contiguous" => PatternKind::ContiguousNegative,
            "periodic" => match ints(args)?.as_slice() {
                [s] if *s > 0 => PatternKind::Periodic { step: *s as u32 },
                _ => return Err(AppError::Config("periodic:<step>".into())),
            },
            "power" => match ints(args)?.as_slice() {
                [d] if *d > 0 => PatternKind::Power { exponent: *d as u32, reflected: false },
                _ => return Err(AppError::Config("power:<exponent>".into())),
            },
            "power-reflected" => match ints(args)?.as_slice() {
                [d] if *d > 0 => PatternKind::Power { exponent: *d as u32, reflected: true },
                _ => return Err(AppError::Config("power-reflected:<exponent>".into())),
            },
            "signed-power" => match ints(args)?.as_slice() {
                [s, d] if *s > 0 && *d > 0 => {
                    PatternKind::SignedPower { step: *s as u32, exponent: *d as u32 }
                }
                _ => return Err(AppError::Config("signed-power:<step>,<exponent>".into())),
            },
            "explicit" => PatternKind::Explicit { points: ints(args)? },
            _ => return Err(AppError::Config(format!("unknown pattern {name:?}"))),
        }
    };
    let orientation = if backward { Orientation::Backward } else { Orientation::Forward };
    Ok(ObservationPattern::new(kind, orientation)?)
}

fn patterns_cmd(cmd: PatternsCmd, format: Format, out: &mut dyn Write) -> AppResult<()> {
    let PatternsCmd::Show { pattern, backward, theta, depth, targets } = cmd;
    let pattern = parse_pattern(&pattern, backward)?;
    let tau = build_tau(&pattern, theta, depth)?;
    let case = match &targets {
        Some(list) => {
            let parsed: Vec<i64> = list
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<i64>()
                        .map_err(|_| AppError::Config(format!("bad target {s:?}")))
                })
                .collect::<AppResult<_>>()?;
            Some(pattern_case(&pattern, &parsed)?)
        }
        None => None,
    };
    let case_name = case.map(|c| match c {
        Case::A => "A",
        Case::B => "B",
        Case::C => "C",
        Case::Unsupported => "unsupported",
    });
    match format {
        Format::Csv => {
            writeln!(out, "k,tau")?;
            for (i, &pos) in tau.positions().iter().enumerate() {
                writeln!(out, "{},{}", tau.k_lo() + i as i64, pos)?;
            }
            if let Some(name) = case_name {
                eprintln!("case = {name}");
            }
        }
        Format::Json => {
            let rows: Vec<_> = tau
                .positions()
                .iter()
                .enumerate()
                .map(|(i, &pos)| serde_json::json!({"k": tau.k_lo() + i as i64, "tau": pos}))
                .collect();
            let doc = serde_json::json!({"theta": theta, "case": case_name, "rows": rows});
            serde_json::to_writer_pretty(&mut *out, &doc).map_err(CoreError::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn recover_cmd(path: &PathBuf, format: Format, out: &mut dyn Write) -> AppResult<()> {
    let cfg: TaskConfig = read_config(path)?;
    let gap: SpectralGap64 = cfg.gap.to_gap()?;
    let pattern =
        ObservationPattern::new(cfg.pattern.kind().clone(), cfg.pattern.orientation())?;
    let params = PredictorParams64::new(cfg.gamma, cfg.r_hat)?;

    let (observations, truth): (Signal64, Option<Truth>) = match &cfg.signal {
        TaskSignal::Csv { path } => {
            let sig = Signal64::read_csv(BufReader::new(File::open(path)?))?;
            (sig, None)
        }
        TaskSignal::Generated(spec) => {
            validate_generated(spec, &gap)?;
            let m = materialize(spec, &pattern, cfg.theta, &gap, cfg.taps)?;
            (m.observations, Some(m.truth))
        }
    };

    let task = RecoveryTask64 {
        pattern,
        observations,
        targets: cfg.targets.clone(),
        theta: cfg.theta,
        window: cfg.taps,
        params,
        gap,
        masked: cfg.masked,
    };
    let mut report = gapcast_core::recover(&task)?;
    if let Some(path) = &cfg.truth {
        let sig = Signal64::read_csv(BufReader::new(File::open(path)?))?;
        report = report.with_truth(&sig);
    } else if let Some(truth) = truth {
        report = report.with_truth(&truth.signal_over(&cfg.targets)?);
    }
    match format {
        Format::Json => {
            writeln!(out, "{}", report.to_json()?)?;
        }
        Format::Csv => {
            writeln!(out, "t,estimate_re,estimate_im,error")?;
            for (i, &t) in report.targets.iter().enumerate() {
                let est = report.estimates[i];
                match &report.errors {
                    Some(errs) => writeln!(out, "{t},{},{},{}", est.re, est.im, errs[i])?,
                    None => writeln!(out, "{t},{},{},NaN", est.re, est.im)?,
                }
            }
        }
    }
    Ok(())
}

fn validate_generated(spec: &gapcast_cli::config::SignalSpec, gap: &SpectralGap64) -> AppResult<()> {
    use gapcast_cli::config::SignalSpec;
    match spec {
        SignalSpec::SinusoidMix { components } => {
            for c in components {
                if gap.in_gap(c.frequency) {
                    return Err(AppError::Core(CoreError::FrequencyInGap { omega: c.frequency }));
                }
            }
        }
        SignalSpec::SeededNoise { length, .. } => {
            if !length.is_power_of_two() {
                return Err(AppError::Core(CoreError::GridNotPowerOfTwo { grid: *length }));
            }
        }
    }
    Ok(())
}
