//! Experiment configuration (`[section]` / `key = value` text), the named
//! experiments' defaults, and CSV output.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::reservation::SchemeKind;
use crate::sim::sweep::{aggregate, sweep, CellResult, SweepSpec, TopologyKind};
use crate::sim::transport::TransportSetting;
use crate::sim::workload::VolumeDist;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Transport settings on one link: fail and block probability.
    Motivation,
    /// The evaluated schemes plus the ideal reference on one link.
    SingleLink,
    /// The evaluated schemes on a star.
    StarNetwork,
    /// Multi-Interval piece counts over star sizes.
    IntervalCount,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [Self; 5] =
        [Self::Motivation, Self::SingleLink, Self::StarNetwork, Self::IntervalCount, Self::Custom];
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Motivation => "motivation",
            Self::SingleLink => "single-link",
            Self::StarNetwork => "star-network",
            Self::IntervalCount => "interval-count",
            Self::Custom => "custom",
        })
    }
}

impl FromStr for ExperimentKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "motivation" => Self::Motivation,
            "single-link" => Self::SingleLink,
            "star-network" | "star" => Self::StarNetwork,
            "interval-count" | "intervals" => Self::IntervalCount,
            "custom" => Self::Custom,
            other => return Err(ConfigError::Invalid(format!("unknown experiment {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Everything needed to run and label one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub loads: Vec<f64>,
    pub settings: Vec<TransportSetting>,
    pub arrivals: usize,
    pub replications: usize,
    /// Must fit in a signed 64-bit integer (the config format's integers).
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub topology: TopologyKind,
    /// Star sizes.
    pub sizes: Vec<usize>,
    pub capacity: f64,
    pub volume: VolumeDist,
    pub r_max_ratio: f64,
    pub r_min_ratio: f64,
}

pub const DEFAULT_LOADS: [f64; 8] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6];
pub const DEFAULT_ARRIVALS: usize = 100_000;
pub const DEFAULT_REPLICATIONS: usize = 10;
pub const DEFAULT_SEED: u64 = 1;

fn schemes() -> Vec<TransportSetting> {
    SchemeKind::evaluated().into_iter().map(TransportSetting::SchemeDull).collect()
}

impl ExperimentSpec {
    /// `C = 1`, `r_max = C/10`, `r_min = C/20`, unit volumes; exponential
    /// volumes for the motivation setup.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut spec = Self {
            name: kind.to_string(),
            kind,
            loads: DEFAULT_LOADS.to_vec(),
            settings: schemes(),
            arrivals: DEFAULT_ARRIVALS,
            replications: DEFAULT_REPLICATIONS,
            seed: DEFAULT_SEED,
            output: None,
            topology: TopologyKind::SingleLink,
            sizes: vec![1],
            capacity: 1.0,
            volume: VolumeDist::Constant(1.0),
            r_max_ratio: 0.1,
            r_min_ratio: 0.05,
        };
        match kind {
            ExperimentKind::Motivation => {
                spec.settings = vec![
                    TransportSetting::INTERNET_NOAC,
                    TransportSetting::GRID_NOAC,
                    TransportSetting::ACIdeal,
                    TransportSetting::ACDull,
                ];
                spec.volume = VolumeDist::Exponential { mean: 1.0 };
            }
            ExperimentKind::SingleLink | ExperimentKind::Custom => spec.settings.push(TransportSetting::ACIdeal),
            ExperimentKind::StarNetwork => {
                spec.topology = TopologyKind::Star;
                spec.sizes = vec![10];
            }
            ExperimentKind::IntervalCount => {
                spec.topology = TopologyKind::Star;
                spec.sizes = vec![5, 10, 20, 40];
                spec.loads = vec![1.0];
                spec.settings = vec![TransportSetting::SchemeDull(SchemeKind::MultiInterval)];
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.name.is_empty() || self.name.contains([',', '"', '\n', '\r']) {
            return bad(format!("name {:?} must be nonempty without commas, quotes or newlines", self.name));
        }
        if self.loads.is_empty() || self.settings.is_empty() {
            return bad("loads and settings must be nonempty".into());
        }
        if let Some(l) = self.loads.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return bad(format!("load {l} must be positive"));
        }
        if self.arrivals == 0 || self.replications == 0 {
            return bad("arrivals and replications must be positive".into());
        }
        if i64::try_from(self.seed).is_err() {
            return bad(format!("seed {} exceeds {}", self.seed, i64::MAX));
        }
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return bad(format!("capacity {} must be positive", self.capacity));
        }
        if !(self.volume.mean().is_finite() && self.volume.mean() > 0.0) {
            return bad(format!("mean volume {} must be positive", self.volume.mean()));
        }
        for (key, r) in [("r_max_ratio", self.r_max_ratio), ("r_min_ratio", self.r_min_ratio)] {
            if !(r > 0.0 && r <= 1.0) {
                return bad(format!("{key} {r} must lie in (0, 1]"));
            }
        }
        if self.r_min_ratio > self.r_max_ratio {
            return bad("r_min_ratio exceeds r_max_ratio".into());
        }
        match self.topology {
            TopologyKind::SingleLink => {}
            TopologyKind::Star => {
                if self.sizes.is_empty() || self.sizes.contains(&0) {
                    return bad("star sizes must be nonempty and positive".into());
                }
                if let Some(s) = self.settings.iter().find(|s| s.scheme().is_none()) {
                    return bad(format!("{s} runs on a single link only"));
                }
            }
        }
        Ok(())
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            topology: self.topology,
            sizes: self.sizes.clone(),
            capacity: self.capacity,
            loads: self.loads.clone(),
            settings: self.settings.clone(),
            volume: self.volume,
            r_max_ratio: self.r_max_ratio,
            r_min_ratio: self.r_min_ratio,
            arrivals: self.arrivals,
            replications: self.replications,
            seed: self.seed,
        }
    }

    pub fn run(&self) -> Vec<CellResult> {
        sweep(&self.sweep_spec())
    }

    pub fn render(&self) -> String {
        let (volume, mean_volume) = match self.volume {
            VolumeDist::Constant(v) => ("constant", v),
            VolumeDist::Exponential { mean } => ("exponential", mean),
        };
        let raw = RawConfig {
            experiment: RawExperiment {
                name: Some(self.name.clone()),
                kind: Some(self.kind.to_string()),
                loads: Some(self.loads.clone()),
                settings: Some(self.settings.iter().map(|s| s.to_string()).collect()),
                arrivals: Some(self.arrivals as u64),
                replications: Some(self.replications as u64),
                seed: Some(self.seed),
                output: self.output.as_ref().map(|p| p.display().to_string()),
            },
            topology: RawTopology {
                kind: Some(self.topology.to_string()),
                n: Some(self.sizes.iter().map(|&n| n as u64).collect()),
                capacity: Some(self.capacity),
            },
            workload: RawWorkload {
                volume: Some(volume.to_string()),
                mean_volume: Some(mean_volume),
                r_max_ratio: Some(self.r_max_ratio),
                r_min_ratio: Some(self.r_min_ratio),
            },
        };
        toml::to_string(&raw).expect("config renders")
    }

    /// Missing keys take the defaults of the `kind` key (`custom` if absent).
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_over(text, ExperimentKind::Custom)
    }

    /// As [`ExperimentSpec::parse`] with `fallback` standing in for a missing
    /// `kind` key.
    pub fn parse_over(text: &str, fallback: ExperimentKind) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let kind = match &raw.experiment.kind {
            Some(k) => k.parse()?,
            None => fallback,
        };
        let mut spec = Self::defaults(kind);
        let e = raw.experiment;
        if let Some(v) = e.name {
            spec.name = v;
        }
        if let Some(v) = e.loads {
            spec.loads = v;
        }
        if let Some(v) = e.settings {
            spec.settings = parse_settings(&v)?;
        }
        if let Some(v) = e.arrivals {
            spec.arrivals = to_usize(v)?;
        }
        if let Some(v) = e.replications {
            spec.replications = to_usize(v)?;
        }
        if let Some(v) = e.seed {
            spec.seed = v;
        }
        spec.output = e.output.map(PathBuf::from).or(spec.output);
        let t = raw.topology;
        if let Some(v) = t.kind {
            spec.topology = match v.as_str() {
                "single-link" => TopologyKind::SingleLink,
                "star" => TopologyKind::Star,
                other => return Err(ConfigError::Invalid(format!("unknown topology {other:?}"))),
            };
        }
        if let Some(v) = t.n {
            spec.sizes = v.into_iter().map(to_usize).collect::<Result<_, _>>()?;
        }
        if let Some(v) = t.capacity {
            spec.capacity = v;
        }
        let w = raw.workload;
        let mean = w.mean_volume.unwrap_or(spec.volume.mean());
        let shape = w.volume.unwrap_or_else(|| {
            match spec.volume {
                VolumeDist::Constant(_) => "constant",
                VolumeDist::Exponential { .. } => "exponential",
            }
            .to_string()
        });
        spec.volume = match shape.as_str() {
            "constant" => VolumeDist::Constant(mean),
            "exponential" => VolumeDist::Exponential { mean },
            other => return Err(ConfigError::Invalid(format!("unknown volume distribution {other:?}"))),
        };
        if let Some(v) = w.r_max_ratio {
            spec.r_max_ratio = v;
        }
        if let Some(v) = w.r_min_ratio {
            spec.r_min_ratio = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn to_usize(v: u64) -> Result<usize, ConfigError> {
    usize::try_from(v).map_err(|_| ConfigError::Invalid(format!("{v} is too large")))
}

/// Parses setting labels such as `ftfr-rmin`, `threshold:0.3`, `ac-dull` or
/// `noac:0.01`.
pub fn parse_settings<S: AsRef<str>>(labels: &[S]) -> Result<Vec<TransportSetting>, ConfigError> {
    labels.iter().map(|s| s.as_ref().parse().map_err(|e| ConfigError::Invalid(format!("{e}")))).collect()
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    topology: RawTopology,
    #[serde(default)]
    workload: RawWorkload,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: Option<String>,
    kind: Option<String>,
    loads: Option<Vec<f64>>,
    settings: Option<Vec<String>>,
    arrivals: Option<u64>,
    replications: Option<u64>,
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    kind: Option<String>,
    n: Option<Vec<u64>>,
    capacity: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    volume: Option<String>,
    mean_volume: Option<f64>,
    r_max_ratio: Option<f64>,
    r_min_ratio: Option<f64>,
}

pub const CSV_HEADER: [&str; 14] = [
    "experiment",
    "topology_n",
    "load",
    "scheme",
    "replication",
    "offered",
    "accepted",
    "blocked",
    "failed",
    "blocking_prob",
    "fail_prob",
    "mean_flow_time",
    "mean_intervals",
    "seed",
];

/// One CSV line; `replication` is `None` for the aggregate row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub topology_n: usize,
    pub load: f64,
    pub scheme: String,
    pub replication: Option<usize>,
    pub offered: f64,
    pub accepted: f64,
    pub blocked: f64,
    pub failed: f64,
    pub blocking_prob: f64,
    pub fail_prob: f64,
    pub mean_flow_time: f64,
    pub mean_intervals: f64,
    pub seed: u64,
}

impl CsvRow {
    pub fn record(&self) -> [String; 14] {
        [
            self.experiment.clone(),
            self.topology_n.to_string(),
            format_sig6(self.load),
            self.scheme.clone(),
            self.replication.map_or_else(|| "agg".to_string(), |r| r.to_string()),
            format_sig6(self.offered),
            format_sig6(self.accepted),
            format_sig6(self.blocked),
            format_sig6(self.failed),
            format_sig6(self.blocking_prob),
            format_sig6(self.fail_prob),
            format_sig6(self.mean_flow_time),
            format_sig6(self.mean_intervals),
            self.seed.to_string(),
        ]
    }
}

/// Rows per successful cell, each group followed by its aggregate row (seed
/// column: the master seed). Failed cells produce no rows.
pub fn csv_rows(spec: &ExperimentSpec, results: &[CellResult]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for group in aggregate(results) {
        let base = |replication, seed| CsvRow {
            experiment: spec.name.clone(),
            topology_n: group.n,
            load: group.load,
            scheme: group.setting.to_string(),
            replication,
            offered: 0.0,
            accepted: 0.0,
            blocked: 0.0,
            failed: 0.0,
            blocking_prob: 0.0,
            fail_prob: 0.0,
            mean_flow_time: 0.0,
            mean_intervals: 0.0,
            seed,
        };
        let cells = results.iter().filter(|r| {
            r.outcome.is_ok() && r.cell.n == group.n && r.cell.load == group.load && r.cell.setting == group.setting
        });
        for (r, m) in cells.zip(&group.stats.runs) {
            rows.push(CsvRow {
                offered: m.offered as f64,
                accepted: m.accepted as f64,
                blocked: m.blocked as f64,
                failed: m.failed as f64,
                blocking_prob: m.blocking_probability,
                fail_prob: m.fail_probability,
                mean_flow_time: m.mean_flow_time,
                mean_intervals: m.mean_intervals_per_flow,
                ..base(Some(r.cell.replication), r.cell.seed)
            });
        }
        let m = group.stats.mean_metrics();
        rows.push(CsvRow {
            offered: m.offered,
            accepted: m.accepted,
            blocked: m.blocked,
            failed: m.failed,
            blocking_prob: m.blocking_probability,
            fail_prob: m.fail_probability,
            mean_flow_time: m.mean_flow_time,
            mean_intervals: m.mean_intervals_per_flow,
            ..base(None, spec.seed)
        });
    }
    rows
}

pub fn write_csv_to<W: io::Write>(rows: &[CsvRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()
}

pub fn write_csv(rows: &[CsvRow], path: &Path) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv_to(rows, std::fs::File::create(path)?)
}

pub fn csv_string(rows: &[CsvRow]) -> String {
    let mut buf = Vec::new();
    write_csv_to(rows, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8 csv")
}

/// Six significant digits in the style of C's `%g`; `nan`, `inf`, `-inf`
/// for non-finite values.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
