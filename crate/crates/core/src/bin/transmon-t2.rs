//! Command-line front end: spectrum queries, per-channel dephasing times,
//! ratio sweeps with CSV/JSON/SVG output, and config validation.
//!
//! Exit codes: 0 success, 2 validation failure, 3 solver failure, 4 I/O
//! failure (`validate` exits 0/1 on its own verdict).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use transmon_t2::config::{
    parse_config, ChannelSetting, OutputFormat, Overrides, PolicySetting, RunConfig, SpacingSetting,
};
use transmon_t2::error::Error;
use transmon_t2::io::{emit_plot, emit_rows};
use transmon_t2::noise::{t2_pure, ChannelKind, OperatingPoint, PointPolicy};
use transmon_t2::spectral::eigen_spectrum;
use transmon_t2::sweep::{reproduce_table2, run_sweep};
use transmon_t2::{build_hamiltonian, converge_ncut};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Fixed,
    #[value(alias = "worst")]
    WorstCase,
}

impl PolicyArg {
    fn to_setting(self) -> PolicySetting {
        match self {
            PolicyArg::Fixed => PolicySetting::Fixed,
            PolicyArg::WorstCase => PolicySetting::WorstCase,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl FormatArg {
    fn to_setting(self) -> OutputFormat {
        match self {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

impl SpacingArg {
    fn to_setting(self) -> SpacingSetting {
        match self {
            SpacingArg::Linear => SpacingSetting::Linear,
            SpacingArg::Log => SpacingSetting::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChannelArg {
    Charge,
    Flux,
    Ic,
}

impl ChannelArg {
    fn to_setting(self) -> ChannelSetting {
        match self {
            ChannelArg::Charge => ChannelSetting::Charge,
            ChannelArg::Flux => ChannelSetting::Flux,
            ChannelArg::Ic => ChannelSetting::Ic,
        }
    }
}

/// Split-junction transmon spectra and 1/f-noise dephasing times.
#[derive(Debug, Parser)]
#[command(name = "transmon-t2", version, about)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Sum of both Josephson energies, E/h in GHz.
    #[arg(long, global = true)]
    ej_sum: Option<f64>,

    /// Charging energy, E/h in GHz.
    #[arg(long, global = true)]
    ec: Option<f64>,

    /// Junction asymmetry, 0 <= d < 1.
    #[arg(long, global = true)]
    d: Option<f64>,

    /// Offset charge in Cooper-pair units.
    #[arg(long, global = true)]
    ng: Option<f64>,

    /// External flux in units of the flux quantum.
    #[arg(long = "flux", global = true)]
    flux: Option<f64>,

    /// Charge-basis half width (matrix dimension 2*ncut+1).
    #[arg(long, global = true)]
    ncut: Option<usize>,

    /// 1/f amplitude of the charge channel, in e.
    #[arg(long, global = true)]
    amplitude_charge: Option<f64>,

    /// 1/f amplitude of the flux channel, in flux quanta.
    #[arg(long, global = true)]
    amplitude_flux: Option<f64>,

    /// 1/f amplitude of the critical-current channel, fractional.
    #[arg(long, global = true)]
    amplitude_ic: Option<f64>,

    #[arg(long, global = true, value_enum)]
    policy_charge: Option<PolicyArg>,

    #[arg(long, global = true, value_enum)]
    policy_flux: Option<PolicyArg>,

    #[arg(long, global = true, value_enum)]
    policy_ic: Option<PolicyArg>,

    /// Channels to evaluate (repeatable).
    #[arg(long = "channel", global = true, value_enum)]
    channels: Vec<ChannelArg>,

    /// Row output format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Row output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// SVG output path; with several channels the channel name is inserted
    /// before the extension.
    #[arg(long, global = true)]
    svg: Option<PathBuf>,

    /// Lower edge of the swept EJ/Ec ratio.
    #[arg(long, global = true)]
    ratio_min: Option<f64>,

    /// Upper edge of the swept EJ/Ec ratio.
    #[arg(long, global = true)]
    ratio_max: Option<f64>,

    /// Number of sweep grid points.
    #[arg(long, global = true)]
    points: Option<usize>,

    #[arg(long, global = true, value_enum)]
    spacing: Option<SpacingArg>,

    /// Allow 1/f amplitudes outside the documented per-channel ranges.
    #[arg(long, global = true)]
    amplitude_override: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print E01, E12 and the anharmonicity for one parameter set.
    Spectrum,
    /// Per-channel dephasing times at a point or worst case.
    T2 {
        /// Compare all three channels against the built-in reference values.
        #[arg(long)]
        table2: bool,
    },
    /// Sweep EJ/Ec and emit rows plus optional plots.
    Sweep,
    /// Parse the config, print the resolved values, exit 0 or 1.
    Validate,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            ej_sum: self.ej_sum,
            ec: self.ec,
            d: self.d,
            ng: self.ng,
            phi_ext: self.flux,
            ncut: self.ncut,
            convergence_tol_ghz: None,
            amplitude_charge: self.amplitude_charge,
            amplitude_flux: self.amplitude_flux,
            amplitude_ic: self.amplitude_ic,
            policy_charge: self.policy_charge.map(PolicyArg::to_setting),
            policy_flux: self.policy_flux.map(PolicyArg::to_setting),
            policy_ic: self.policy_ic.map(PolicyArg::to_setting),
            channels: if self.channels.is_empty() {
                None
            } else {
                Some(self.channels.iter().map(|c| c.to_setting()).collect())
            },
            ratio_min: self.ratio_min,
            ratio_max: self.ratio_max,
            points: self.points,
            spacing: self.spacing.map(SpacingArg::to_setting),
            format: self.format.map(FormatArg::to_setting),
            out: self.out.clone(),
            svg: self.svg.clone(),
            amplitude_override: self.amplitude_override,
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SweepRow { source, .. } => exit_code_for(source),
        Error::NonFiniteParameter { .. }
        | Error::Validation { .. }
        | Error::Parse { .. }
        | Error::GridMismatch { .. }
        | Error::EmptySeries { .. } => 2,
        Error::SolverFailure { .. }
        | Error::NoConvergence { .. }
        | Error::StepUnderflow { .. }
        | Error::DegeneratePair { .. }
        | Error::UnboundedReference => 3,
        Error::Io(_) => 4,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides());
    cfg.validate()?;
    Ok(cfg)
}

fn policy_point(cfg: &RunConfig, policy: PointPolicy) -> OperatingPoint<f64> {
    match policy {
        PointPolicy::Fixed => OperatingPoint::fixed(cfg.ng, cfg.phi_ext),
        PointPolicy::WorstCase => OperatingPoint::worst_case(cfg.ng, cfg.phi_ext),
    }
}

fn format_t2(t2: &transmon_t2::CoherenceTime64) -> String {
    match t2.seconds() {
        Some(s) => format!("{s:.6e} s"),
        None => "unbounded".to_string(),
    }
}

fn run_spectrum(cfg: &RunConfig) -> Result<(), Error> {
    let params = cfg.params()?;
    let trunc = cfg.trunc()?;
    let ncut = converge_ncut(&params, &trunc)?;
    let h = build_hamiltonian(&params, &trunc.with_ncut(ncut))?;
    let s = eigen_spectrum(&h, 3)?;
    println!(
        "EJ_sum = {} GHz, Ec = {} GHz (ratio {:.6}), d = {}, ng = {}, phi_ext = {}",
        params.ej_sum,
        params.ec,
        params.ratio(),
        params.d,
        params.ng,
        params.phi_ext
    );
    println!("converged ncut = {ncut}");
    println!("E01   = {:.9} GHz", s.e01);
    println!("E12   = {:.9} GHz", s.e12);
    println!("alpha = {:.9} GHz", s.anharmonicity);
    Ok(())
}

fn run_t2(cfg: &RunConfig, table2: bool) -> Result<(), Error> {
    if table2 {
        let report = reproduce_table2(&cfg.table2_setup()?)?;
        print!("{report}");
        return Ok(());
    }
    let params = cfg.params()?;
    let trunc = cfg.trunc()?;
    let amplitudes = cfg.amplitudes();
    let policies = cfg.policies();
    for kind in cfg.channel_kinds() {
        let amplitude = amplitudes.get(kind);
        let channel = if cfg.amplitude_override {
            transmon_t2::noise::NoiseChannel::with_range_override(kind, amplitude)?
        } else {
            transmon_t2::noise::NoiseChannel::new(kind, amplitude)?
        };
        let point = policy_point(cfg, policies.get(kind));
        let r = t2_pure(&params, &trunc, &channel, &point)?;
        println!(
            "{:<16} T2 = {:<15} (A = {:e}, slope = {:.6e} GHz, point: ng = {:.6}, phi_ext = {:.6}{})",
            kind.label(),
            format_t2(&r.t2),
            amplitude,
            r.slope,
            r.point.ng,
            r.point.phi_ext,
            if r.point.clamped { ", clamped" } else { "" },
        );
    }
    Ok(())
}

fn svg_path_for(base: &Path, kind: ChannelKind, multiple: bool) -> PathBuf {
    if !multiple {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".to_string());
    let ext = base
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "svg".to_string());
    let name = match kind {
        ChannelKind::Charge => format!("{stem}-charge.{ext}"),
        ChannelKind::Flux => format!("{stem}-flux.{ext}"),
        ChannelKind::CriticalCurrent => format!("{stem}-ic.{ext}"),
    };
    base.with_file_name(name)
}

fn run_sweep_command(cfg: &RunConfig) -> Result<(), Error> {
    let spec = cfg.sweep_spec()?;
    let rows = run_sweep(&spec)?;
    match &cfg.out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            let bytes = emit_rows(&rows, cfg.format, &mut file)?;
            eprintln!(
                "wrote {} rows ({bytes} bytes) to {}",
                rows.len(),
                path.display()
            );
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_rows(&rows, cfg.format, &mut lock)?;
            lock.flush()?;
        }
    }
    if let Some(svg_base) = &cfg.svg {
        let multiple = spec.channels.len() > 1;
        for &kind in &spec.channels {
            let path = svg_path_for(svg_base, kind, multiple);
            let mut file = fs::File::create(&path)?;
            let bytes = emit_plot(&rows, kind, &mut file)?;
            eprintln!(
                "wrote {} plot ({bytes} bytes) to {}",
                kind.label(),
                path.display()
            );
        }
    }
    Ok(())
}

fn run_validate(cli: &Cli) -> ExitCode {
    match load_config(cli) {
        Ok(cfg) => {
            println!("{}", cfg.to_json_pretty());
            println!("ratio = {:.6}", cfg.ratio());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("invalid configuration: {err}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if matches!(cli.command, Command::Validate) {
        return run_validate(&cli);
    }

    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(exit_code_for(&err));
        }
    };

    let result = match &cli.command {
        Command::Spectrum => run_spectrum(&cfg),
        Command::T2 { table2 } => run_t2(&cfg, *table2),
        Command::Sweep => run_sweep_command(&cfg),
        Command::Validate => unreachable!("handled above"),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
