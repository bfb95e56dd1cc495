//! Fluid single-link simulation of transport settings: no admission control
//! with fair sharing, and count-based admission (`C / r_min` reservations)
//! with either dull or ideal transport.

use std::fmt;
use std::str::FromStr;

use crate::network::Topology;
use crate::reservation::{RequestId, SchemeKind, SchemeParseError, SiteId};
use crate::sim::metrics::{Metrics, Tally};
use crate::sim::reserve::{run_reservation_sim, warmup_len};
use crate::sim::workload::WorkloadSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransportSetting {
    /// Every arrival is admitted; `n` active flows each get
    /// `min(r_max, C / n)` with `r_max = r_max_ratio * C`. A flow still
    /// unfinished at `arrival + v / r_min` fails and leaves.
    NoAC { r_max_ratio: f64 },
    /// Admit while fewer than `C / r_min` reservations are active; admitted
    /// flows get `r_min` plus a water-filled share of the unreserved
    /// capacity, capped at `r_max`.
    ACIdeal,
    /// Same admission; flows send exactly `r_min` (an M/M/m/m loss system).
    ACDull,
    /// A reservation scheme with dull transport.
    SchemeDull(SchemeKind<f64>),
}

impl TransportSetting {
    pub const INTERNET_NOAC: Self = Self::NoAC { r_max_ratio: 0.01 };
    pub const GRID_NOAC: Self = Self::NoAC { r_max_ratio: 0.1 };

    pub fn scheme(&self) -> Option<&SchemeKind<f64>> {
        match self {
            Self::SchemeDull(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for TransportSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoAC { r_max_ratio } => write!(f, "noac:{r_max_ratio}"),
            Self::ACIdeal => write!(f, "ac-ideal"),
            Self::ACDull => write!(f, "ac-dull"),
            Self::SchemeDull(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for TransportSetting {
    type Err = SchemeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s {
            "internet-noac" => Self::INTERNET_NOAC,
            "grid-noac" => Self::GRID_NOAC,
            "ac-ideal" | "grid-ac-ideal" | "rmin-ideal" => Self::ACIdeal,
            "ac-dull" | "mmmm" => Self::ACDull,
            _ => match s.strip_prefix("noac:") {
                Some(ratio) => {
                    let r_max_ratio = ratio
                        .parse::<f64>()
                        .ok()
                        .filter(|r| *r > 0.0 && *r <= 1.0)
                        .ok_or_else(|| SchemeParseError::Unknown(s.to_string()))?;
                    Self::NoAC { r_max_ratio }
                }
                None => Self::SchemeDull(s.parse()?),
            },
        })
    }
}

/// Equal extra shares on top of each flow's `floor`, never above its `cap`;
/// capacity a capped flow cannot use goes to the others.
pub fn water_fill(floors: &[f64], caps: &[f64], capacity: f64) -> Vec<f64> {
    let mut rates = floors.to_vec();
    let mut spare = capacity - floors.iter().sum::<f64>();
    if spare <= 0.0 || floors.is_empty() {
        return rates;
    }
    let mut order: Vec<usize> = (0..floors.len()).collect();
    order.sort_by(|&a, &b| (caps[a] - floors[a]).total_cmp(&(caps[b] - floors[b])));
    let mut left = order.len();
    for (pos, &i) in order.iter().enumerate() {
        let share = spare / left as f64;
        let headroom = (caps[i] - floors[i]).max(0.0);
        if headroom <= share {
            rates[i] = floors[i] + headroom;
            spare -= headroom;
            left -= 1;
        } else {
            for &j in &order[pos..] {
                rates[j] = floors[j] + share;
            }
            break;
        }
    }
    rates
}

/// What happened to one arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowOutcome {
    Completed { at: f64 },
    Failed { at: f64 },
    Blocked,
}

struct Flow {
    id: RequestId,
    arrival: f64,
    deadline: f64,
    remaining: f64,
    floor: f64,
    cap: f64,
    rate: f64,
    counted: bool,
}

/// Single-link fluid simulation of `setting`. `SchemeDull` settings run the
/// reservation simulator on one link of `capacity`.
pub fn run_transport_sim(
    setting: &TransportSetting,
    workload: &WorkloadSpec,
    capacity: f64,
    num_arrivals: usize,
) -> Metrics {
    run_transport_sim_observed(setting, workload, capacity, num_arrivals, |_, _| {})
}

/// As [`run_transport_sim`], reporting every flow's outcome (warm-up
/// included; not called for `SchemeDull`).
pub fn run_transport_sim_observed(
    setting: &TransportSetting,
    workload: &WorkloadSpec,
    capacity: f64,
    num_arrivals: usize,
    mut observe: impl FnMut(RequestId, FlowOutcome),
) -> Metrics {
    let workload = match *setting {
        TransportSetting::SchemeDull(scheme) => {
            return run_reservation_sim(&Topology::single_link(capacity), &scheme, workload, num_arrivals);
        }
        TransportSetting::NoAC { r_max_ratio } => {
            let r_max = r_max_ratio * capacity;
            workload.with_rates(r_max, r_max * workload.r_min / workload.r_max)
        }
        TransportSetting::ACIdeal | TransportSetting::ACDull => workload.clone(),
    };
    let admission_limit = match setting {
        TransportSetting::NoAC { .. } => usize::MAX,
        _ => (capacity / workload.r_min + 1e-9).floor() as usize,
    };
    let noac = matches!(setting, TransportSetting::NoAC { .. });
    let ideal = !matches!(setting, TransportSetting::ACDull);

    let warmup = warmup_len(num_arrivals);
    let mut tally = Tally::default();
    let mut flows: Vec<Flow> = Vec::new();
    let mut arrivals = workload.requests(&[SiteId(0)], &[SiteId(1)]).take(num_arrivals).enumerate().peekable();
    let mut now = 0.0f64;

    loop {
        let next_arrival = arrivals.peek().map_or(f64::INFINITY, |(_, r)| r.arrival);
        let (done_idx, done_at) = flows
            .iter()
            .enumerate()
            .filter(|(_, f)| f.rate > 0.0)
            .map(|(i, f)| (i, now + f.remaining.max(0.0) / f.rate))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((usize::MAX, f64::INFINITY));
        let (late_idx, late_at) = if noac {
            flows
                .iter()
                .enumerate()
                .map(|(i, f)| (i, f.deadline))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap_or((usize::MAX, f64::INFINITY))
        } else {
            (usize::MAX, f64::INFINITY)
        };
        let t = next_arrival.min(done_at).min(late_at);
        if t.is_infinite() {
            break;
        }
        let dt = t - now;
        for f in &mut flows {
            f.remaining -= f.rate * dt;
        }
        now = t;

        if done_at <= late_at && done_at <= next_arrival {
            let f = flows.swap_remove(done_idx);
            if f.counted {
                tally.completed += 1;
                tally.flow_time_sum += now - f.arrival;
            }
            observe(f.id, FlowOutcome::Completed { at: now });
        } else if late_at <= next_arrival {
            let f = flows.swap_remove(late_idx);
            if f.counted {
                tally.failed += 1;
            }
            observe(f.id, FlowOutcome::Failed { at: now });
        } else {
            let (i, r) = arrivals.next().expect("peeked arrival");
            let counted = i >= warmup;
            if counted {
                tally.offered += 1;
            }
            if flows.len() < admission_limit {
                if counted {
                    tally.accepted += 1;
                }
                flows.push(Flow {
                    id: r.id,
                    arrival: r.arrival,
                    deadline: r.deadline,
                    remaining: r.volume,
                    floor: if noac { 0.0 } else { r.min_rate().min(r.max_rate) },
                    cap: r.max_rate,
                    rate: 0.0,
                    counted,
                });
            } else {
                if counted {
                    tally.blocked += 1;
                }
                observe(r.id, FlowOutcome::Blocked);
            }
        }
        assign_rates(&mut flows, capacity, noac, ideal);
    }
    tally.finish()
}

fn assign_rates(flows: &mut [Flow], capacity: f64, noac: bool, ideal: bool) {
    if noac {
        let fair = capacity / flows.len().max(1) as f64;
        for f in flows.iter_mut() {
            f.rate = f.cap.min(fair);
        }
    } else if ideal {
        let floors: Vec<f64> = flows.iter().map(|f| f.floor).collect();
        let caps: Vec<f64> = flows.iter().map(|f| f.cap).collect();
        for (f, rate) in flows.iter_mut().zip(water_fill(&floors, &caps, capacity)) {
            f.rate = rate;
        }
    } else {
        for f in flows.iter_mut() {
            f.rate = f.floor;
        }
    }
    debug_assert!(flows.iter().map(|f| f.rate).sum::<f64>() <= capacity + 1e-9);
    debug_assert!(flows.iter().all(|f| f.rate <= f.cap + 1e-12));
}
