//! CSV / JSON rendering, metadata sidecars and plot scripts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{Command, ExperimentSpec, Format};
use crate::engine::{DiagnosticsReport, DistributionReport, EvtReport, SweepResult};
use crate::error::{Error, Result};

/// `%.12g`: 12 significant digits, shortest form, no locale.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Rows of one rendered table; the data file contents.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn sweep_table(s: &SweepResult) -> Table {
    Table {
        header: vec!["k", "u", "mc_mean", "mc_stderr", "upper", "lower", "p_idle", "p_collision", "p_served"],
        rows: s
            .rows
            .iter()
            .map(|r| {
                vec![
                    fmt_num(r.k),
                    fmt_num(r.u),
                    fmt_num(r.mc_mean),
                    fmt_num(r.mc_stderr),
                    opt(r.upper),
                    opt(r.lower),
                    fmt_num(r.p_idle),
                    fmt_num(r.p_collision),
                    fmt_num(r.p_served),
                ]
            })
            .collect(),
    }
}

pub fn evt_table(r: &EvtReport) -> Table {
    Table {
        header: vec!["users", "antennas", "trials", "a", "b", "ks", "ks_slow", "mc_mean", "mc_stderr", "gumbel_mean"],
        rows: vec![vec![
            r.users.to_string(),
            r.antennas.to_string(),
            r.trials.to_string(),
            fmt_num(r.a),
            fmt_num(r.b),
            fmt_num(r.ks),
            fmt_num(r.ks_slow),
            fmt_num(r.mc_mean),
            fmt_num(r.mc_stderr),
            fmt_num(r.gumbel_mean),
        ]],
    }
}

pub fn distribution_table(d: &DistributionReport) -> Table {
    let mut rows = Vec::new();
    for c in &d.comparators {
        let head = [c.comparator.name().to_string(), fmt_num(c.mean), fmt_num(c.stderr)];
        let mut row = head.to_vec();
        row.extend(["0".into(), "0".into(), c.zero_count.to_string()]);
        rows.push(row);
        for (i, n) in c.counts.iter().enumerate() {
            let mut row = head.to_vec();
            row.extend([fmt_num(d.edges[i]), fmt_num(d.edges[i + 1]), n.to_string()]);
            rows.push(row);
        }
    }
    Table { header: vec!["comparator", "mean", "stderr", "bin_lo", "bin_hi", "count"], rows }
}

pub fn diagnostics_table(d: &DiagnosticsReport) -> Table {
    let mut rows = Vec::new();
    let mut add = |metric: String, value: f64, stderr: Option<f64>, reference: Option<f64>| {
        rows.push(vec![metric, fmt_num(value), opt(stderr), opt(reference)]);
    };
    add("tv_exact".into(), d.tv_exact, None, None);
    add("tv_empirical".into(), d.tv_empirical, None, None);
    add("conditional_samples".into(), d.conditional_samples as f64, None, None);
    add("cond_norm_mean".into(), d.cond_norm_mean, Some(d.cond_norm_stderr), Some(d.cond_norm_reference));
    for e in &d.entries {
        add(format!("entry{}_mean_re", e.index), e.mean_re, Some(e.mean_re_stderr), Some(0.0));
        add(format!("entry{}_mean_im", e.index), e.mean_im, Some(e.mean_im_stderr), Some(0.0));
        add(format!("entry{}_second_moment", e.index), e.second_moment, Some(e.second_moment_stderr), Some(d.entry_reference));
    }
    for p in &d.pairs {
        add(format!("pair{}_{}_re", p.m, p.n), p.re, Some(p.re_stderr), Some(0.0));
        add(format!("pair{}_{}_im", p.m, p.n), p.im, Some(p.im_stderr), Some(0.0));
    }
    add("angle_ks".into(), d.angle_ks, None, None);
    add("excess_ks".into(), d.excess_ks, None, None);
    Table { header: vec!["metric", "value", "stderr", "reference"], rows }
}

/// All six bounds at one `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub k: f64,
    pub u: f64,
    pub zf_upper: f64,
    pub zf_lower: f64,
    pub mmse_upper: f64,
    pub mmse_lower: Option<f64>,
    pub sic_upper: f64,
    pub sic_lower: Option<f64>,
}

pub fn bounds_table(b: &BoundsRow) -> Table {
    Table {
        header: vec!["k", "u", "zf_upper", "zf_lower", "mmse_upper", "mmse_lower", "sic_upper", "sic_lower"],
        rows: vec![vec![
            fmt_num(b.k),
            fmt_num(b.u),
            fmt_num(b.zf_upper),
            fmt_num(b.zf_lower),
            fmt_num(b.mmse_upper),
            opt(b.mmse_lower),
            fmt_num(b.sic_upper),
            opt(b.sic_lower),
        ]],
    }
}

/// Whatever a command produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Sweep(SweepResult),
    Evt(EvtReport),
    Distribution(DistributionReport),
    Diagnostics(DiagnosticsReport),
    Bounds(BoundsRow),
}

impl Outcome {
    pub fn table(&self) -> Table {
        match self {
            Outcome::Sweep(s) => sweep_table(s),
            Outcome::Evt(e) => evt_table(e),
            Outcome::Distribution(d) => distribution_table(d),
            Outcome::Diagnostics(d) => diagnostics_table(d),
            Outcome::Bounds(b) => bounds_table(b),
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Csv => self.table().to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self)
                    .map_err(|e| Error::Json { path: PathBuf::from("<output>"), source: e })?;
                s.push('\n');
                s
            }
        })
    }
}

/// Contents of `<out>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub spec: ExperimentSpec,
}

impl Metadata {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: spec.config.seed,
            spec: spec.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn plot_script_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".gp");
    PathBuf::from(s)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the data file, its sidecar and optionally a gnuplot script.
pub fn write_outputs(spec: &ExperimentSpec, outcome: &Outcome, path: &Path, format: Format) -> Result<()> {
    write(path, &outcome.render(format)?)?;
    let meta = serde_json::to_string_pretty(&Metadata::new(spec))
        .map_err(|e| Error::Json { path: sidecar_path(path), source: e })?;
    write(&sidecar_path(path), &(meta + "\n"))?;
    if spec.emit_plot_script {
        write(&plot_script_path(path), &plot_script(spec.command, path, format))?;
    }
    Ok(())
}

/// A gnuplot script for the data file. JSON output gets a note instead,
/// since gnuplot reads delimited text.
pub fn plot_script(command: Command, data: &Path, format: Format) -> String {
    let name = data.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut s = String::new();
    writeln!(s, "# gnuplot script for {name}").unwrap();
    if format == Format::Json {
        writeln!(s, "# the data file is JSON; re-run with --format csv to plot it directly").unwrap();
        return s;
    }
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set key autotitle columnhead").unwrap();
    writeln!(s, "set grid").unwrap();
    let stem = name.trim_end_matches(".csv");
    writeln!(s, "set terminal pngcairo size 900,600").unwrap();
    writeln!(s, "set output '{stem}.png'").unwrap();
    match command {
        Command::ZfSweep | Command::MmseSweep => {
            writeln!(s, "set xlabel 'k'\nset ylabel 'expected sum capacity'").unwrap();
            writeln!(s, "set style fill solid 0.4").unwrap();
            writeln!(s, "plot '{name}' using 1:3 with boxes title 'simulation', \\").unwrap();
            writeln!(s, "     '' using 1:3:4 with yerrorbars notitle, \\").unwrap();
            writeln!(s, "     '' using 1:5 with lines lw 2 title 'upper', \\").unwrap();
            writeln!(s, "     '' using 1:6 with lines lw 2 dt 2 title 'lower'").unwrap();
        }
        Command::SicDist => {
            writeln!(s, "set xlabel 'sum capacity'\nset ylabel 'count'").unwrap();
            let mut parts = Vec::new();
            for c in ["random-user", "strongest-user", "zf-group", "zfsic-group"] {
                parts.push(format!(
                    "'{name}' using (strcol(1) eq '{c}' && $5 > 0 ? ($4+$5)/2 : 1/0):6 with steps title '{c}'"
                ));
            }
            writeln!(s, "plot {}", parts.join(", \\\n     ")).unwrap();
        }
        Command::EvtCheck | Command::BoundsTable | Command::Diagnostics => {
            writeln!(s, "set style data histograms\nset style fill solid 0.5").unwrap();
            writeln!(s, "plot '{name}' using 2:xtic(1) title 'value'").unwrap();
        }
    }
    s
}
