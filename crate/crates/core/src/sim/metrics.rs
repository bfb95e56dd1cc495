/// Counters and means of one simulation run, after warm-up.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    pub offered: u64,
    pub accepted: u64,
    pub blocked: u64,
    /// Flows that missed `arrival + v / r_min` without admission control.
    pub failed: u64,
    pub blocking_probability: f64,
    pub fail_probability: f64,
    /// Over accepted flows that completed; NaN when there are none.
    pub mean_flow_time: f64,
    /// Maximal constant-rate pieces per accepted reservation; NaN for
    /// transport settings, which reserve nothing piecewise.
    pub mean_intervals_per_flow: f64,
}

#[derive(Debug, Default)]
pub(crate) struct Tally {
    pub offered: u64,
    pub accepted: u64,
    pub blocked: u64,
    pub failed: u64,
    pub completed: u64,
    pub flow_time_sum: f64,
    pub interval_sum: u64,
    pub track_intervals: bool,
}

impl Tally {
    pub fn finish(&self) -> Metrics {
        let ratio = |n: u64, d: u64| if d == 0 { f64::NAN } else { n as f64 / d as f64 };
        Metrics {
            offered: self.offered,
            accepted: self.accepted,
            blocked: self.blocked,
            failed: self.failed,
            blocking_probability: ratio(self.blocked, self.offered),
            fail_probability: ratio(self.failed, self.offered),
            mean_flow_time: if self.completed == 0 { f64::NAN } else { self.flow_time_sum / self.completed as f64 },
            mean_intervals_per_flow: if self.track_intervals {
                ratio(self.interval_sum, self.accepted)
            } else {
                f64::NAN
            },
        }
    }
}

/// Sample mean and sample standard deviation of one metric across
/// replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl SampleStats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let values: Vec<f64> = values.into_iter().collect();
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std =
            if n > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Self { mean, std, n }
    }

    pub fn std_error(&self) -> f64 {
        self.std / (self.n as f64).sqrt()
    }
}

/// Per-replication metrics with their summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicated {
    pub runs: Vec<Metrics>,
    pub blocking: SampleStats,
    pub fail: SampleStats,
    pub flow_time: SampleStats,
    pub intervals: SampleStats,
}

impl Replicated {
    pub fn new(runs: Vec<Metrics>) -> Self {
        let stat = |f: fn(&Metrics) -> f64| SampleStats::of(runs.iter().map(f));
        Self {
            blocking: stat(|m| m.blocking_probability),
            fail: stat(|m| m.fail_probability),
            flow_time: stat(|m| m.mean_flow_time),
            intervals: stat(|m| m.mean_intervals_per_flow),
            runs,
        }
    }

    /// Field-wise mean over replications, the aggregate row.
    pub fn mean_metrics(&self) -> MeanMetrics {
        let mean = |f: fn(&Metrics) -> f64| SampleStats::of(self.runs.iter().map(f)).mean;
        MeanMetrics {
            offered: mean(|m| m.offered as f64),
            accepted: mean(|m| m.accepted as f64),
            blocked: mean(|m| m.blocked as f64),
            failed: mean(|m| m.failed as f64),
            blocking_probability: self.blocking.mean,
            fail_probability: self.fail.mean,
            mean_flow_time: self.flow_time.mean,
            mean_intervals_per_flow: self.intervals.mean,
        }
    }
}

/// Like [`Metrics`] with averaged counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanMetrics {
    pub offered: f64,
    pub accepted: f64,
    pub blocked: f64,
    pub failed: f64,
    pub blocking_probability: f64,
    pub fail_probability: f64,
    pub mean_flow_time: f64,
    pub mean_intervals_per_flow: f64,
}
