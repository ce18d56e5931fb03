//! Experiment configuration and its validation.

use std::fmt;
use std::path::PathBuf;

use macdiv_core::receivers::LogBase;
use macdiv_core::scheduler::{Convention, Receiver};
use serde::{Deserialize, Serialize};

/// Receiver choice, including the SIC procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverKind {
    Zf,
    Mmse,
    Zfsic,
}

impl ReceiverKind {
    /// The linear receiver, if this is not SIC.
    pub fn linear(self) -> Option<Receiver> {
        match self {
            ReceiverKind::Zf => Some(Receiver::Zf),
            ReceiverKind::Mmse => Some(Receiver::Mmse),
            ReceiverKind::Zfsic => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    #[default]
    Nats,
    Bits,
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::Nats => LogBase::Nats,
            Base::Bits => LogBase::Bits,
        }
    }
}

/// How the single threshold is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Expected number of users above the threshold.
    Rate(f64),
    /// Explicit threshold on `‖h‖²`.
    Threshold(f64),
}

/// Everything a Monte Carlo run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub users: u64,
    pub antennas: u32,
    pub power: f64,
    pub target: Target,
    pub slots: u64,
    pub seed: u64,
    pub receiver: ReceiverKind,
    pub log_base: Base,
    /// Expected exceedances per SIC stage.
    pub sic_target: f64,
    pub paper_literal: bool,
}

impl SystemConfig {
    pub fn new(users: u64, antennas: u32) -> Self {
        Self {
            users,
            antennas,
            power: 1.0,
            target: Target::Rate(1.0),
            slots: 10_000,
            seed: 0,
            receiver: ReceiverKind::Zf,
            log_base: Base::Nats,
            sic_target: 1.0,
            paper_literal: false,
        }
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.target = Target::Rate(k);
        self
    }

    pub fn with_threshold(mut self, u: f64) -> Self {
        self.target = Target::Threshold(u);
        self
    }

    pub fn with_slots(mut self, slots: u64) -> Self {
        self.slots = slots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_power(mut self, p: f64) -> Self {
        self.power = p;
        self
    }

    pub fn with_receiver(mut self, r: ReceiverKind) -> Self {
        self.receiver = r;
        self
    }

    pub fn convention(&self) -> Convention {
        if self.paper_literal {
            Convention::Literal
        } else {
            Convention::Corrected
        }
    }

    /// All violations, each naming its field.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        if self.antennas < 1 {
            errs.push(FieldError::new("antennas", "antennas must be at least 1"));
        }
        if self.users < 1 {
            errs.push(FieldError::new("users", "users must be at least 1"));
        }
        if self.antennas >= 1 && self.users >= 1 && (self.users as u128) < self.antennas as u128 {
            errs.push(FieldError::new(
                "users/antennas",
                format!("users ({}) must be at least antennas ({})", self.users, self.antennas),
            ));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            errs.push(FieldError::new("power", "power must be positive"));
        }
        match self.target {
            Target::Rate(k) => check_k("k", k, self.users, &mut errs),
            Target::Threshold(u) => {
                if !(u >= 0.0 && u.is_finite()) {
                    errs.push(FieldError::new("threshold", "threshold must be finite and non-negative"));
                }
            }
        }
        if self.slots < 1 {
            errs.push(FieldError::new("slots", "slots must be at least 1"));
        }
        check_k("sic_target", self.sic_target, self.users, &mut errs);
        errs
    }
}

pub(crate) fn check_k(field: &'static str, k: f64, users: u64, errs: &mut Vec<FieldError>) {
    if k.is_nan() || k <= 0.0 {
        errs.push(FieldError::new(field, format!("{field} must be positive")));
    } else if k > users as f64 {
        errs.push(FieldError::new(field, format!("{field} ({k}) must not exceed users ({users})")));
    }
}

/// A validation failure tied to a field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Uniform grid of expected exceedance counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for KGrid {
    fn default() -> Self {
        Self { min: 0.5, max: 8.0, step: macdiv_core::bounds::DEFAULT_K_STEP }
    }
}

impl KGrid {
    pub fn values(&self) -> Vec<f64> {
        macdiv_core::bounds::k_grid(self.min, self.max, self.step).unwrap_or_default()
    }

    pub fn validate(&self, users: u64) -> Vec<FieldError> {
        let mut errs = Vec::new();
        check_k("k_min", self.min, users, &mut errs);
        check_k("k_max", self.max, users, &mut errs);
        if !(self.step > 0.0 && self.step.is_finite()) {
            errs.push(FieldError::new("k_step", "k_step must be positive"));
        }
        if self.max < self.min {
            errs.push(FieldError::new("k_max", "k_max must be at least k_min"));
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    EvtCheck,
    ZfSweep,
    MmseSweep,
    SicDist,
    BoundsTable,
    Diagnostics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::EvtCheck => "evt-check",
            Command::ZfSweep => "zf-sweep",
            Command::MmseSweep => "mmse-sweep",
            Command::SicDist => "sic-dist",
            Command::BoundsTable => "bounds-table",
            Command::Diagnostics => "diagnostics",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    pub format: Format,
}

/// A fully normalized experiment: what the metadata sidecar stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub command: Command,
    pub config: SystemConfig,
    /// Sweep grid; only for the sweep commands.
    pub grid: Option<KGrid>,
    pub output: Option<OutputSpec>,
    pub emit_plot_script: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = self.config.validate();
        if let Some(g) = &self.grid {
            errs.extend(g.validate(self.config.users));
        }
        match self.command {
            Command::MmseSweep if self.config.receiver != ReceiverKind::Mmse => {
                errs.push(FieldError::new("receiver", "mmse-sweep uses the MMSE receiver"));
            }
            Command::ZfSweep if self.config.receiver != ReceiverKind::Zf => {
                errs.push(FieldError::new("receiver", "zf-sweep uses the ZF receiver"));
            }
            _ => {}
        }
        if matches!(self.command, Command::BoundsTable | Command::Diagnostics | Command::SicDist)
            && !matches!(self.config.target, Target::Rate(_))
        {
            errs.push(FieldError::new("k", format!("{} needs --k", self.command.name())));
        }
        if self.command == Command::SicDist && self.config.users < 3 {
            errs.push(FieldError::new("users", "sic-dist needs at least 3 users"));
        }
        if self.emit_plot_script && self.output.is_none() {
            errs.push(FieldError::new("emit_plot_script", "a plot script needs --out"));
        }
        errs
    }
}
