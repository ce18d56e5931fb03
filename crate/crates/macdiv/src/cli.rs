//! Argument parsing and command dispatch.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use macdiv_core::bounds::{mmse_lower, mmse_upper, sic_lower, sic_upper, zf_lower, zf_upper};
use macdiv_core::evt::threshold_for_rate;

use crate::config::{Base, Command, ExperimentSpec, Format, KGrid, OutputSpec, ReceiverKind, SystemConfig, Target};
use crate::engine::{Comparator, Engine};
use crate::error::{Error, Result};
use crate::output::{write_outputs, BoundsRow, Metadata, Outcome};

#[derive(Debug, Parser)]
#[command(name = "macdiv", version, about = "Threshold scheduling for the MIMO uplink: bounds and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Gumbel fit of the strongest of K users' channel gains.
    EvtCheck(Common),
    /// Sum capacity of the ZF threshold scheduler over a grid of k.
    ZfSweep(Sweep),
    /// Same with the MMSE receiver.
    MmseSweep(Sweep),
    /// Sum-capacity histograms: random user, strongest user, ZF group, ZF-SIC group.
    SicDist(Common),
    /// All closed-form bounds at one k.
    BoundsTable(Common),
    /// Poisson and tail diagnostics of the above-threshold users.
    Diagnostics(Common),
    /// Re-run the experiment recorded in a metadata sidecar.
    Replay {
        /// Path to a `.meta.json` file.
        meta: PathBuf,
        /// Write here instead of the recorded path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Number of users K.
    #[arg(long)]
    users: u64,
    /// Receive antennas r.
    #[arg(long)]
    antennas: u32,
    /// Transmit SNR P.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    power: f64,
    /// Expected number of users above the threshold.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Explicit threshold on the channel gain, instead of --k.
    #[arg(long, conflicts_with = "k", allow_negative_numbers = true)]
    threshold: Option<f64>,
    /// Monte Carlo slots (trials).
    #[arg(long, visible_alias = "trials")]
    slots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    receiver: Option<ReceiverKind>,
    #[arg(long, value_enum, default_value_t = Base::Nats)]
    log_base: Base,
    /// Per-stage expected exceedances for the SIC thresholds.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    sic_target: f64,
    /// Literal SIC threshold and lower-bound variants.
    #[arg(long)]
    paper_literal: bool,
    /// Output file; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write a gnuplot script next to the output.
    #[arg(long)]
    emit_plot_script: bool,
}

#[derive(Debug, Args)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    k_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    k_step: Option<f64>,
}

const DEFAULT_SLOTS: u64 = 10_000;

impl Common {
    fn spec(self, command: Command, grid: Option<KGrid>) -> ExperimentSpec {
        let default_receiver = match command {
            Command::MmseSweep => ReceiverKind::Mmse,
            _ => ReceiverKind::Zf,
        };
        let target = match (self.k, self.threshold) {
            (_, Some(u)) => Target::Threshold(u),
            (Some(k), None) => Target::Rate(k),
            // sic-dist defaults to r - 1 expected exceedances, clamped to 1.
            (None, None) if command == Command::SicDist => Target::Rate((self.antennas as f64 - 1.0).max(1.0)),
            (None, None) => Target::Rate(1.0),
        };
        let config = SystemConfig {
            users: self.users,
            antennas: self.antennas,
            power: self.power,
            target,
            slots: self.slots.unwrap_or(DEFAULT_SLOTS),
            seed: self.seed,
            receiver: self.receiver.unwrap_or(default_receiver),
            log_base: self.log_base,
            sic_target: self.sic_target,
            paper_literal: self.paper_literal,
        };
        ExperimentSpec {
            command,
            config,
            grid,
            output: self.out.map(|path| OutputSpec { path, format: self.format }),
            emit_plot_script: self.emit_plot_script,
        }
    }
}

impl Sweep {
    fn spec(self, command: Command) -> ExperimentSpec {
        let d = KGrid::default();
        let grid = KGrid {
            min: self.k_min.unwrap_or(d.min),
            max: self.k_max.unwrap_or(d.max),
            step: self.k_step.unwrap_or(d.step),
        };
        self.common.spec(command, Some(grid))
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit status.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

fn report(e: &Error) {
    match e {
        Error::Config(errs) => {
            for fe in errs {
                eprintln!("error: {fe}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let spec = match cli.command {
        Sub::EvtCheck(c) => c.spec(Command::EvtCheck, None),
        Sub::ZfSweep(s) => s.spec(Command::ZfSweep),
        Sub::MmseSweep(s) => s.spec(Command::MmseSweep),
        Sub::SicDist(c) => c.spec(Command::SicDist, None),
        Sub::BoundsTable(c) => c.spec(Command::BoundsTable, None),
        Sub::Diagnostics(c) => c.spec(Command::Diagnostics, None),
        Sub::Replay { meta, out } => {
            let mut spec = Metadata::read(&meta)?.spec;
            if let Some(path) = out {
                let format = spec.output.as_ref().map(|o| o.format).unwrap_or_default();
                spec.output = Some(OutputSpec { path, format });
            }
            spec
        }
    };
    run_spec(&spec)
}

/// Validates, executes and writes one experiment.
pub fn run_spec(spec: &ExperimentSpec) -> Result<()> {
    let errs = spec.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let engine = Engine::from_env()?;
    let outcome = execute(spec, &engine)?;
    match &spec.output {
        Some(o) => write_outputs(spec, &outcome, &o.path, o.format),
        None => {
            let text = outcome.render(Format::Csv)?;
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

/// Computes the result of an already validated experiment.
pub fn execute(spec: &ExperimentSpec, engine: &Engine) -> Result<Outcome> {
    let cfg = &spec.config;
    Ok(match spec.command {
        Command::EvtCheck => Outcome::Evt(engine.evt_check(cfg.users, cfg.antennas, cfg.slots, cfg.seed)?),
        Command::ZfSweep | Command::MmseSweep => {
            let grid = spec.grid.unwrap_or_default();
            Outcome::Sweep(engine.run_sweep(cfg, &grid.values())?)
        }
        Command::SicDist => Outcome::Distribution(engine.distribution_report(cfg, &Comparator::ALL)?),
        Command::Diagnostics => Outcome::Diagnostics(engine.diagnostics(cfg)?),
        Command::BoundsTable => Outcome::Bounds(bounds_row(cfg)?),
    })
}

/// Every bound at the configured `k`. Values are in the configured log base.
pub fn bounds_row(cfg: &SystemConfig) -> Result<BoundsRow> {
    let Target::Rate(k) = cfg.target else {
        return Err(Error::Runtime("bounds-table needs --k".into()));
    };
    let (n, r, p) = (cfg.users, cfg.antennas, cfg.power);
    let base = macdiv_core::receivers::LogBase::from(cfg.log_base);
    let b = |v: f64| base.from_nats(v);
    Ok(BoundsRow {
        k,
        u: threshold_for_rate(n, k, r)?,
        zf_upper: b(zf_upper(k, n, r, p)?),
        zf_lower: b(zf_lower(k, n, r, p)?),
        mmse_upper: b(mmse_upper(k, n, r, p)?),
        mmse_lower: if p == 1.0 && r >= 2 { Some(b(mmse_lower(k, n, r)?)) } else { None },
        sic_upper: b(sic_upper(n, r, p)?),
        sic_lower: if n >= 3 { Some(b(sic_lower(n, r, p, cfg.convention())?)) } else { None },
    })
}
