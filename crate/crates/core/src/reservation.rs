//! Transfer requests, constraint construction and the reservation schemes.
//!
//! Every scheme maps a request and its constraint function `C_r` (the most
//! bandwidth that may be reserved at each instant) to a [`Decision`]. The
//! families differ in how much of the time-rate plane they may use:
//!
//! | scheme                | accepted decision                          |
//! |-----------------------|--------------------------------------------|
//! | FixTime-FixRate       | fixed rate starting at arrival             |
//! | FixTime-FlexRate      | one rectangle starting at arrival          |
//! | FlexTime-FlexRate     | any rectangle under `C_r`                  |
//! | Multi-Interval        | any step function under `C_r`              |

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::steprate::{Rectangle, StepFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RequestId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(pub usize);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

impl fmt::Display for SiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// A bulk transfer: move `volume` from `source` to `dest` between `arrival`
/// and `deadline`, never faster than `max_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Request<T> {
    pub id: RequestId,
    pub source: SiteId,
    pub dest: SiteId,
    pub volume: T,
    pub arrival: T,
    pub deadline: T,
    pub max_rate: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum RequestError {
    #[error("volume must be positive")]
    NonPositiveVolume,
    #[error("deadline must be after arrival")]
    DeadlineBeforeArrival,
    #[error("maximum rate must be positive")]
    NonPositiveRate,
}

impl<T: Scalar> Request<T> {
    pub fn new(
        id: RequestId,
        source: SiteId,
        dest: SiteId,
        volume: T,
        arrival: T,
        deadline: T,
        max_rate: T,
    ) -> Result<Self, RequestError> {
        if !(volume > T::zero()) {
            return Err(RequestError::NonPositiveVolume);
        }
        if !(deadline > arrival) {
            return Err(RequestError::DeadlineBeforeArrival);
        }
        if !(max_rate > T::zero()) {
            return Err(RequestError::NonPositiveRate);
        }
        Ok(Self { id, source, dest, volume, arrival, deadline, max_rate })
    }

    /// The slowest rate that still meets the deadline when started at
    /// arrival.
    pub fn min_rate(&self) -> T {
        self.volume / (self.deadline - self.arrival)
    }

    /// Whether `max_rate` can move `volume` inside the window at all.
    pub fn is_feasible(&self) -> bool {
        self.volume <= self.max_rate * (self.deadline - self.arrival) + volume_slack(self.volume)
    }
}

fn volume_slack<T: Scalar>(volume: T) -> T {
    T::TOLERANCE * volume.max(T::one())
}

/// Outcome of a scheme. A rejection reserves nothing (`f^0`).
#[derive(Debug, Clone, PartialEq)]
pub enum Decision<T> {
    Reject,
    Accept(StepFunction<T>),
}

impl<T: Scalar> Decision<T> {
    pub fn is_accept(&self) -> bool {
        matches!(self, Decision::Accept(_))
    }

    pub fn reservation(&self) -> Option<&StepFunction<T>> {
        match self {
            Decision::Accept(d) => Some(d),
            Decision::Reject => None,
        }
    }

    /// The reserved function, `f^0` for a rejection.
    pub fn to_step_function(&self) -> StepFunction<T> {
        self.reservation().cloned().unwrap_or_else(StepFunction::zero)
    }

    /// Last breakpoint of the reservation.
    pub fn completion_time(&self) -> Option<T> {
        self.reservation().and_then(StepFunction::last_breakpoint)
    }

    pub fn flow_time(&self, request: &Request<T>) -> Option<T> {
        self.completion_time().map(|c| c - request.arrival)
    }

    /// Number of maximal constant-rate positive pieces.
    pub fn interval_count(&self) -> usize {
        self.reservation().map_or(0, |d| d.positive_runs().count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateRule {
    /// `v / (deadline - arrival)`: finishes exactly at the deadline.
    MinRate,
    /// The request's maximum rate.
    MaxRate,
}

/// One representative scheme per family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind<T> {
    FixTimeFixRate(RateRule),
    /// Reserve the maximum rate while every path link keeps more than
    /// `theta * capacity` unreserved at arrival, the minimum rate otherwise.
    ThresholdFixTimeFlexRate {
        theta: T,
    },
    /// Greedy-Accept, Minimize-FlowTime over single rectangles.
    FlexTimeFlexRate,
    /// Greedy-Accept, Minimize-FlowTime over arbitrary step functions.
    MultiInterval,
}

#[derive(Debug, Error, PartialEq)]
pub enum SchemeParseError {
    #[error("unknown scheme {0:?}")]
    Unknown(String),
    #[error("threshold must lie in (0, 1], got {0:?}")]
    BadTheta(String),
}

impl<T: Scalar> SchemeKind<T> {
    pub const DEFAULT_THETA: f64 = 0.2;

    pub fn threshold(theta: T) -> Option<Self> {
        (theta > T::zero() && theta <= T::one()).then_some(Self::ThresholdFixTimeFlexRate { theta })
    }

    /// Degrees of freedom of an accepted decision; `breakpoints` is the
    /// breakpoint budget of a Multi-Interval decision.
    pub fn flexibility(&self, breakpoints: usize) -> usize {
        match self {
            Self::FixTimeFixRate(_) => 0,
            Self::ThresholdFixTimeFlexRate { .. } => 1,
            Self::FlexTimeFlexRate => 2,
            Self::MultiInterval => (2 * breakpoints).saturating_sub(2),
        }
    }

    /// The five settings evaluated in the scheme comparison, in plotting order.
    pub fn evaluated() -> [Self; 5] {
        [
            Self::FixTimeFixRate(RateRule::MaxRate),
            Self::FixTimeFixRate(RateRule::MinRate),
            Self::ThresholdFixTimeFlexRate { theta: T::from_f64_lossy(Self::DEFAULT_THETA) },
            Self::FlexTimeFlexRate,
            Self::MultiInterval,
        ]
    }

    pub fn starts_at_arrival(&self) -> bool {
        matches!(self, Self::FixTimeFixRate(_) | Self::ThresholdFixTimeFlexRate { .. })
    }
}

impl<T: Scalar> fmt::Display for SchemeKind<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FixTimeFixRate(RateRule::MinRate) => write!(f, "ftfr-rmin"),
            Self::FixTimeFixRate(RateRule::MaxRate) => write!(f, "ftfr-rmax"),
            Self::ThresholdFixTimeFlexRate { theta } => write!(f, "threshold:{theta}"),
            Self::FlexTimeFlexRate => write!(f, "flextime-flexrate"),
            Self::MultiInterval => write!(f, "multi-interval"),
        }
    }
}

impl<T: Scalar> FromStr for SchemeKind<T> {
    type Err = SchemeParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(match s {
            "ftfr-rmin" => Self::FixTimeFixRate(RateRule::MinRate),
            "ftfr-rmax" => Self::FixTimeFixRate(RateRule::MaxRate),
            "threshold" => Self::ThresholdFixTimeFlexRate { theta: T::from_f64_lossy(Self::DEFAULT_THETA) },
            "flextime-flexrate" | "ftflex" => Self::FlexTimeFlexRate,
            "multi-interval" | "mi" => Self::MultiInterval,
            _ => {
                let Some(theta) = s.strip_prefix("threshold:") else {
                    return Err(SchemeParseError::Unknown(s.to_string()));
                };
                theta
                    .parse::<T>()
                    .ok()
                    .and_then(Self::threshold)
                    .ok_or_else(|| SchemeParseError::BadTheta(theta.to_string()))?
            }
        })
    }
}

/// Unreserved bandwidth seen along the path at the request's arrival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSnapshot<T> {
    pub min_unreserved: T,
    pub capacity: T,
}

impl<T: Scalar> PathSnapshot<T> {
    /// No links seen yet; never trips the threshold.
    pub fn empty() -> Self {
        Self { min_unreserved: T::infinity(), capacity: T::zero() }
    }

    /// Folds in one more link's `(L_i(a_r), B_i)`.
    pub fn with_link(self, unreserved: T, capacity: T) -> Self {
        if self.min_unreserved.is_infinite() {
            return Self { min_unreserved: unreserved, capacity };
        }
        Self { min_unreserved: self.min_unreserved.min(unreserved), capacity: self.capacity.min(capacity) }
    }

    pub fn from_links(links: impl IntoIterator<Item = (T, T)>) -> Self {
        links.into_iter().fold(Self::empty(), |acc, (u, c)| acc.with_link(u, c))
    }
}

/// `R^max (h(t - a) - h(t - dl))`.
pub fn request_constraint<T: Scalar>(r: &Request<T>) -> StepFunction<T> {
    StepFunction::rectangle(r.arrival, r.deadline, r.max_rate)
}

/// Minimum of the request window and every path link's remaining bandwidth.
pub fn combined_constraint<'a, T: Scalar>(
    r: &Request<T>,
    path_states: impl IntoIterator<Item = &'a StepFunction<T>>,
) -> StepFunction<T> {
    path_states.into_iter().fold(request_constraint(r), |c, l| c.min(l))
}

/// Rectangle at `rate` starting at arrival, accepted if it fits under the
/// constraint.
fn accept_from_arrival<T: Scalar>(r: &Request<T>, constraint: &StepFunction<T>, rate: T) -> Decision<T> {
    if !r.is_feasible() || rate > r.max_rate + T::TOLERANCE || !(rate > T::zero()) {
        return Decision::Reject;
    }
    let mut end = r.arrival + r.volume / rate;
    if end > r.deadline && end - r.deadline < T::TIME_EPS {
        end = r.deadline;
    }
    let d = StepFunction::rectangle(r.arrival, end, rate);
    if d.leq_within(constraint, T::TOLERANCE) {
        Decision::Accept(d)
    } else {
        Decision::Reject
    }
}

pub fn decide_fixtime_fixrate<T: Scalar>(r: &Request<T>, constraint: &StepFunction<T>, rule: RateRule) -> Decision<T> {
    match rule {
        RateRule::MinRate => accept_ending_at_deadline(r, constraint),
        RateRule::MaxRate => accept_from_arrival(r, constraint, r.max_rate),
    }
}

fn accept_ending_at_deadline<T: Scalar>(r: &Request<T>, constraint: &StepFunction<T>) -> Decision<T> {
    let rate = r.min_rate();
    if !r.is_feasible() || rate > r.max_rate + T::TOLERANCE {
        return Decision::Reject;
    }
    let d = StepFunction::rectangle(r.arrival, r.deadline, rate);
    if d.leq_within(constraint, T::TOLERANCE) {
        Decision::Accept(d)
    } else {
        Decision::Reject
    }
}

pub fn decide_threshold_flexrate<T: Scalar>(
    r: &Request<T>,
    constraint: &StepFunction<T>,
    min_unreserved_at_arrival: T,
    capacity: T,
    theta: T,
) -> Decision<T> {
    if min_unreserved_at_arrival > theta * capacity {
        accept_from_arrival(r, constraint, r.max_rate)
    } else {
        accept_ending_at_deadline(r, constraint)
    }
}

/// All rectangles under `constraint` not dominated by another rectangle
/// under it, ordered by start time. `constraint` must be nonnegative; a
/// positive tail yields rectangles ending at infinity.
pub fn pareto_rectangles<T: Scalar>(constraint: &StepFunction<T>) -> Vec<Rectangle<T>> {
    let pieces: Vec<_> = constraint.pieces().collect();
    let mut out = Vec::new();
    for (i, anchor) in pieces.iter().enumerate() {
        let left = if i == 0 { T::zero() } else { pieces[i - 1].value };
        if !(anchor.value > left) {
            continue;
        }
        let mut rate = anchor.value;
        let mut k = i;
        loop {
            while k < pieces.len() && pieces[k].value >= rate {
                k += 1;
            }
            let end = pieces.get(k).map_or(T::infinity(), |p| p.start);
            out.push(Rectangle { start: anchor.start, end, rate });
            match pieces.get(k) {
                Some(p) if p.value > left => rate = p.value,
                _ => break,
            }
        }
    }
    out
}

/// Earliest-completion rectangle among the Pareto set; ties go to the
/// earlier start, then the lower rate.
pub fn decide_flextime_flexrate<T: Scalar>(r: &Request<T>, constraint: &StepFunction<T>) -> Decision<T> {
    if !r.is_feasible() {
        return Decision::Reject;
    }
    let need = r.volume - volume_slack(r.volume);
    let best = pareto_rectangles(constraint)
        .into_iter()
        .filter(|rect| rect.volume() >= need)
        .map(|rect| (rect.start + r.volume / rect.rate, rect))
        .min_by(|(ca, a), (cb, b)| {
            ca.partial_cmp(cb)
                .unwrap()
                .then(a.start.partial_cmp(&b.start).unwrap())
                .then(a.rate.partial_cmp(&b.rate).unwrap())
        });
    match best {
        Some((completion, rect)) => {
            Decision::Accept(StepFunction::rectangle(rect.start, completion.min(rect.end), rect.rate))
        }
        None => Decision::Reject,
    }
}

/// Reserve all of `C_r` from arrival until the volume is covered.
pub fn decide_multi_interval<T: Scalar>(r: &Request<T>, constraint: &StepFunction<T>) -> Decision<T> {
    if !r.is_feasible() {
        return Decision::Reject;
    }
    match constraint.truncate_at_volume(r.arrival, r.volume) {
        Some((_, prefix)) => Decision::Accept(prefix),
        None => Decision::Reject,
    }
}

pub fn decide<T: Scalar>(
    scheme: &SchemeKind<T>,
    r: &Request<T>,
    constraint: &StepFunction<T>,
    snapshot: &PathSnapshot<T>,
) -> Decision<T> {
    let decision = match *scheme {
        SchemeKind::FixTimeFixRate(rule) => decide_fixtime_fixrate(r, constraint, rule),
        SchemeKind::ThresholdFixTimeFlexRate { theta } => {
            decide_threshold_flexrate(r, constraint, snapshot.min_unreserved, snapshot.capacity, theta)
        }
        SchemeKind::FlexTimeFlexRate => decide_flextime_flexrate(r, constraint),
        SchemeKind::MultiInterval => decide_multi_interval(r, constraint),
    };
    debug_assert_eq!(validate_decision(r, constraint, &decision), Ok(()), "{scheme}");
    decision
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionViolation {
    #[error("reservation exceeds the constraint")]
    AboveConstraint,
    #[error("reservation is negative somewhere")]
    Negative,
    #[error("reservation leaves the arrival/deadline window")]
    OutsideWindow,
    #[error("reserved volume {got} differs from requested {want}")]
    Volume { got: f64, want: f64 },
}

/// Checks an accepted decision against `D <= C_r`, the volume equation and
/// the request window.
pub fn validate_decision<T: Scalar>(
    r: &Request<T>,
    constraint: &StepFunction<T>,
    decision: &Decision<T>,
) -> Result<(), DecisionViolation> {
    let Some(d) = decision.reservation() else {
        return Ok(());
    };
    if !d.is_nonnegative() {
        return Err(DecisionViolation::Negative);
    }
    if !d.leq_within(constraint, T::TOLERANCE) {
        return Err(DecisionViolation::AboveConstraint);
    }
    let inside = d.first_breakpoint().is_none_or(|t| t >= r.arrival - T::TIME_EPS)
        && d.last_breakpoint().is_none_or(|t| t <= r.deadline + T::TIME_EPS)
        && d.tail_value() == T::zero();
    if !inside {
        return Err(DecisionViolation::OutsideWindow);
    }
    let got = d.integrate(r.arrival, r.deadline);
    if (got - r.volume).abs() > volume_slack(r.volume) {
        return Err(DecisionViolation::Volume {
            got: got.to_f64().unwrap_or(f64::NAN),
            want: r.volume.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}
