//! Step time-rate functions and the min-plus algebra over them.
//!
//! A [`StepFunction`] is a finite sum of scaled, shifted Heaviside steps
//! `a_1 h(t - b_1) + ... + a_n h(t - b_n)` with right-continuous,
//! half-open pieces `[b_i, b_{i+1})`. The value before the first breakpoint
//! is zero and the value after the last breakpoint is constant.
//!
//! Internally a function is stored as the sequence of levels it takes at
//! each breakpoint; the jump form is available through
//! [`StepFunction::steps`]. Every constructor canonicalizes: breakpoints
//! closer than [`Scalar::TIME_EPS`] are merged and level changes smaller than
//! [`Scalar::RATE_EPS`] are dropped.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Level<T> {
    time: T,
    value: T,
}

/// Canonical piecewise-constant function of time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepFunction<T> {
    levels: Vec<Level<T>>,
}

/// A constant-rate piece `[start, end)` at `rate`; the value of
/// `rate * (h(t - start) - h(t - end))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle<T> {
    pub start: T,
    pub end: T,
    pub rate: T,
}

/// One constant piece of a step function. `end` is infinite for the last
/// piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<T> {
    pub start: T,
    pub end: T,
    pub value: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum StepParseError {
    #[error("line {line}: expected `time,jump`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: breakpoints must be strictly increasing")]
    Unordered { line: usize },
}

fn canonicalize<T: Scalar>(points: impl IntoIterator<Item = (T, T)>) -> Vec<Level<T>> {
    let mut out: Vec<Level<T>> = Vec::new();
    for (time, value) in points {
        let value = if value.abs() < T::RATE_EPS { T::zero() } else { value };
        if let Some(last) = out.last_mut() {
            if time - last.time < T::TIME_EPS {
                last.value = value;
                let n = out.len();
                let prev = if n >= 2 { out[n - 2].value } else { T::zero() };
                if (out[n - 1].value - prev).abs() < T::RATE_EPS {
                    out.pop();
                }
                continue;
            }
        }
        let prev = out.last().map_or(T::zero(), |l| l.value);
        if (value - prev).abs() < T::RATE_EPS {
            continue;
        }
        out.push(Level { time, value });
    }
    out
}

impl<T: Scalar> StepFunction<T> {
    /// The zero function `f^0`.
    pub fn zero() -> Self {
        Self { levels: Vec::new() }
    }

    /// `amplitude * h(t - at)`.
    pub fn heaviside(at: T, amplitude: T) -> Self {
        Self::from_levels([(at, amplitude)])
    }

    /// `rate` on `[start, end)`, zero elsewhere. Empty if `end <= start`.
    pub fn rectangle(start: T, end: T, rate: T) -> Self {
        if end <= start {
            return Self::zero();
        }
        Self::from_levels([(start, rate), (end, T::zero())])
    }

    /// Builds a function from `(time, jump)` pairs in any order. Jumps at the
    /// same time are summed.
    pub fn from_steps(steps: impl IntoIterator<Item = (T, T)>) -> Self {
        let mut steps: Vec<(T, T)> = steps.into_iter().collect();
        steps.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("NaN breakpoint"));
        let mut acc = T::zero();
        let mut points: Vec<(T, T)> = Vec::with_capacity(steps.len());
        for (time, jump) in steps {
            acc = acc + jump;
            match points.last_mut() {
                Some(last) if last.0 == time => last.1 = acc,
                _ => points.push((time, acc)),
            }
        }
        Self { levels: canonicalize(points) }
    }

    /// Builds a function from `(time, value)` pairs: `value` holds from
    /// `time` until the next pair. Times must be nondecreasing.
    pub fn from_levels(levels: impl IntoIterator<Item = (T, T)>) -> Self {
        Self { levels: canonicalize(levels) }
    }

    pub fn is_zero(&self) -> bool {
        self.levels.is_empty()
    }

    /// Number of breakpoints `n` (the function lies in `F^n_s`).
    pub fn breakpoint_count(&self) -> usize {
        self.levels.len()
    }

    pub fn first_breakpoint(&self) -> Option<T> {
        self.levels.first().map(|l| l.time)
    }

    pub fn last_breakpoint(&self) -> Option<T> {
        self.levels.last().map(|l| l.time)
    }

    /// Value after the last breakpoint.
    pub fn tail_value(&self) -> T {
        self.levels.last().map_or(T::zero(), |l| l.value)
    }

    /// Breakpoint times in increasing order.
    pub fn breakpoints(&self) -> impl Iterator<Item = T> + '_ {
        self.levels.iter().map(|l| l.time)
    }

    /// `(time, jump)` pairs: the columns of the 2 x n matrix form.
    pub fn steps(&self) -> impl Iterator<Item = (T, T)> + '_ {
        let mut prev = T::zero();
        self.levels.iter().map(move |l| {
            let jump = l.value - prev;
            prev = l.value;
            (l.time, jump)
        })
    }

    /// `(time, value)` pairs, one per breakpoint.
    pub fn levels(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.levels.iter().map(|l| (l.time, l.value))
    }

    /// Constant pieces from the first breakpoint on; the last piece ends at
    /// infinity. The implicit zero piece before the first breakpoint is not
    /// included.
    pub fn pieces(&self) -> impl Iterator<Item = Piece<T>> + '_ {
        self.levels.iter().enumerate().map(move |(i, l)| Piece {
            start: l.time,
            end: self.levels.get(i + 1).map_or(T::infinity(), |n| n.time),
            value: l.value,
        })
    }

    /// Right-continuous evaluation: the sum of all jumps at or before `t`.
    pub fn evaluate(&self, t: T) -> T {
        let idx = self.levels.partition_point(|l| l.time <= t);
        if idx == 0 {
            T::zero()
        } else {
            self.levels[idx - 1].value
        }
    }

    /// Smallest value on `[t0, t1)`. Zero-width or reversed spans evaluate at
    /// `t0`.
    pub fn min_over(&self, t0: T, t1: T) -> T {
        let mut lo = self.evaluate(t0);
        for l in self.levels.iter().filter(|l| l.time > t0 && l.time < t1) {
            lo = lo.min(l.value);
        }
        lo
    }

    pub fn negate(&self) -> Self {
        Self { levels: self.levels.iter().map(|l| Level { time: l.time, value: -l.value }).collect() }
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::from_levels(self.levels.iter().map(|l| (l.time, l.value * factor)))
    }

    /// Pointwise minimum.
    pub fn min(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.min(b))
    }

    /// Pointwise maximum.
    pub fn max(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.max(b))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a + b)
    }

    pub fn subtract(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a - b)
    }

    /// Single linear merge over the union of breakpoints.
    fn combine(&self, other: &Self, op: impl Fn(T, T) -> T) -> Self {
        let points = MergeWalk::new(self, other).map(|(t, a, b)| (t, op(a, b)));
        Self { levels: canonicalize(points) }
    }

    /// `self(t) <= other(t)` for every `t`.
    pub fn leq(&self, other: &Self) -> bool {
        self.leq_within(other, T::zero())
    }

    /// `self(t) <= other(t) + slack` for every `t`.
    pub fn leq_within(&self, other: &Self, slack: T) -> bool {
        // both functions are zero before the first breakpoint
        MergeWalk::new(self, other).all(|(_, a, b)| a <= b + slack)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.levels.iter().all(|l| l.value >= T::zero())
    }

    /// Exact integral over `[t0, t1]`.
    pub fn integrate(&self, t0: T, t1: T) -> T {
        if t1 <= t0 {
            return T::zero();
        }
        let mut total = T::zero();
        for p in self.pieces() {
            if p.start >= t1 {
                break;
            }
            let lo = p.start.max(t0);
            let hi = p.end.min(t1);
            if hi > lo {
                total = total + p.value * (hi - lo);
            }
        }
        total
    }

    /// Earliest `tau >= t_start` with `integrate(t_start, tau) == volume`,
    /// together with `self` restricted to `[t_start, tau)`. `None` when the
    /// function does not hold `volume` after `t_start`.
    pub fn truncate_at_volume(&self, t_start: T, volume: T) -> Option<(T, Self)> {
        let mut acc = T::zero();
        let mut prefix: Vec<(T, T)> = Vec::new();
        let initial = self.evaluate(t_start);
        let mut cursor = (t_start, initial);
        let upcoming = self.levels.iter().filter(|l| l.time > t_start);
        for next in upcoming.map(|l| (l.time, l.value)).chain(std::iter::once((T::infinity(), T::zero()))) {
            let (start, rate) = cursor;
            let end = next.0;
            if rate > T::zero() {
                let room = rate * (end - start);
                prefix.push((start, rate));
                if acc + room >= volume - T::TOLERANCE * volume.max(T::one()) {
                    let tau = (start + (volume - acc) / rate).min(end);
                    prefix.push((tau, T::zero()));
                    return Some((tau, Self::from_levels(prefix)));
                }
                acc = acc + room;
            } else if !prefix.is_empty() {
                prefix.push((start, T::zero()));
            }
            cursor = next;
        }
        None
    }

    /// Maximal runs of constant positive rate, in time order.
    pub fn positive_runs(&self) -> impl Iterator<Item = Piece<T>> + '_ {
        self.pieces().filter(|p| p.value > T::zero())
    }

    /// Debug text form: one `time,jump` line per breakpoint.
    pub fn to_debug_text(&self) -> String {
        let mut s = String::new();
        for (t, a) in self.steps() {
            s.push_str(&format!("{t},{a}\n"));
        }
        s
    }

    pub fn parse_debug_text(text: &str) -> Result<Self, StepParseError> {
        let mut steps = Vec::new();
        let mut last: Option<T> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let malformed = || StepParseError::Malformed { line: i + 1, text: line.to_string() };
            let (t, a) = line.split_once(',').ok_or_else(malformed)?;
            let t: T = t.trim().parse().map_err(|_| malformed())?;
            let a: T = a.trim().parse().map_err(|_| malformed())?;
            if last.is_some_and(|prev| t <= prev) {
                return Err(StepParseError::Unordered { line: i + 1 });
            }
            last = Some(t);
            steps.push((t, a));
        }
        Ok(Self::from_steps(steps))
    }
}

impl<T: Scalar> fmt::Display for StepFunction<T> {
    /// `a_1 h(t-b_1) + a_2 h(t-b_2) ...`; `0` for the zero function.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (t, a)) in self.steps().enumerate() {
            let sign = if a < T::zero() {
                "-"
            } else if i > 0 {
                "+"
            } else {
                ""
            };
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{sign}{}h(t-{t})", a.abs())?;
        }
        Ok(())
    }
}

/// Walks the union of two breakpoint sets, yielding `(time, f(time),
/// g(time))` at every distinct breakpoint.
struct MergeWalk<'a, T> {
    f: &'a [Level<T>],
    g: &'a [Level<T>],
    i: usize,
    j: usize,
    fv: T,
    gv: T,
}

impl<'a, T: Scalar> MergeWalk<'a, T> {
    fn new(f: &'a StepFunction<T>, g: &'a StepFunction<T>) -> Self {
        Self { f: &f.levels, g: &g.levels, i: 0, j: 0, fv: T::zero(), gv: T::zero() }
    }
}

impl<T: Scalar> Iterator for MergeWalk<'_, T> {
    type Item = (T, T, T);

    fn next(&mut self) -> Option<Self::Item> {
        let ft = self.f.get(self.i).map(|l| l.time);
        let gt = self.g.get(self.j).map(|l| l.time);
        let t = match (ft, gt) {
            (None, None) => return None,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => a.min(b),
        };
        if ft == Some(t) {
            self.fv = self.f[self.i].value;
            self.i += 1;
        }
        if gt == Some(t) {
            self.gv = self.g[self.j].value;
            self.j += 1;
        }
        Some((t, self.fv, self.gv))
    }
}

impl<T: Scalar> Rectangle<T> {
    /// `None` unless `end > start` and `rate > 0`.
    pub fn new(start: T, end: T, rate: T) -> Option<Self> {
        (end > start && rate > T::zero()).then_some(Self { start, end, rate })
    }

    pub fn volume(&self) -> T {
        self.rate * (self.end - self.start)
    }

    pub fn to_step_function(&self) -> StepFunction<T> {
        StepFunction::rectangle(self.start, self.end, self.rate)
    }

    /// `self <= other` pointwise as functions.
    pub fn within(&self, other: &Self) -> bool {
        other.start <= self.start && self.end <= other.end && self.rate <= other.rate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type F = StepFunction<f64>;

    fn h(at: f64) -> F {
        F::heaviside(at, 1.0)
    }

    // value 0 on [0,1), 1 on [1,3), 2 on [3,6), 0 after
    fn staircase_constraint() -> F {
        F::from_levels([(1.0, 1.0), (3.0, 2.0), (6.0, 0.0)])
    }

    fn grid_oracle(f: &F, g: &F, op: impl Fn(f64, f64) -> f64) -> Vec<(f64, f64)> {
        (-20..=160).map(|k| k as f64 * 0.05).map(|t| (t, op(f.evaluate(t), g.evaluate(t)))).collect()
    }

    #[test]
    fn evaluate_heaviside() {
        assert_eq!(h(0.0).evaluate(-1.0), 0.0);
        assert_eq!(h(0.0).evaluate(0.0), 1.0);
        let f = F::from_steps([(0.0, 3.0), (2.0, -1.0)]);
        assert_eq!(f.evaluate(2.0), 2.0);
        assert_eq!(f.evaluate(1.999), 3.0);
    }

    #[test]
    fn min_examples() {
        let f = F::from_steps([(0.0, 3.0), (2.0, -1.0)]);
        assert_eq!(f.min(&f), f);
        assert_eq!(f.min(&F::zero()), F::zero());
        let g = F::heaviside(1.0, 2.0);
        let m = f.min(&g);
        assert_eq!(m, F::heaviside(1.0, 2.0));
        for (t, want) in grid_oracle(&f, &g, f64::min) {
            assert_eq!(m.evaluate(t), want, "t={t}");
        }
    }

    #[test]
    fn add_and_subtract() {
        let f = F::from_steps([(0.0, 3.0), (2.0, -1.0)]);
        assert_eq!(f.add(&F::zero()), f);
        assert_eq!(f.subtract(&f), F::zero());
        assert_eq!(h(0.0).add(&h(1.0)).evaluate(1.5), 2.0);
        assert_eq!(f.subtract(&h(1.0)), f.add(&h(1.0).negate()));
    }

    #[test]
    fn partial_order() {
        let f = F::from_steps([(0.0, 3.0), (2.0, -1.0)]);
        assert!(f.leq(&f));
        assert!(h(0.0).leq(&F::heaviside(0.0, 2.0)));
        assert!(h(1.0).leq(&h(0.0)));
        assert!(!h(0.0).leq(&h(1.0)));
        let a = F::rectangle(0.0, 1.0, 1.0);
        let b = F::rectangle(1.0, 2.0, 1.0);
        assert!(!a.leq(&b));
        assert!(!b.leq(&a));
    }

    #[test]
    fn order_sees_shared_breakpoints() {
        assert!(!F::heaviside(0.0, 2.0).leq(&h(0.0)));
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(F::zero().integrate(0.0, 10.0), 0.0);
        assert_eq!(F::rectangle(1.0, 3.0, 2.0).integrate(0.0, 10.0), 4.0);
        let d = F::from_steps([(1.0, 1.0), (3.0, 1.0), (4.0, -2.0)]);
        assert_eq!(d.integrate(1.0, 4.0), 4.0);
        assert_eq!(h(0.0).integrate(2.0, 5.0), 3.0);
    }

    #[test]
    fn truncate_examples() {
        let (tau, prefix) = F::heaviside(0.0, 2.0).truncate_at_volume(0.0, 4.0).unwrap();
        assert_eq!(tau, 2.0);
        assert_eq!(prefix, F::rectangle(0.0, 2.0, 2.0));

        let (tau, prefix) = staircase_constraint().truncate_at_volume(0.0, 6.0).unwrap();
        assert_eq!(tau, 5.0);
        assert_eq!(prefix, F::from_steps([(1.0, 1.0), (3.0, 1.0), (5.0, -2.0)]));

        assert!(staircase_constraint().truncate_at_volume(0.0, 9.0).is_none());
    }

    #[test]
    fn truncate_stops_at_end_of_positive_piece() {
        // exactly 2 units before a zero plateau
        let f = F::from_levels([(0.0, 1.0), (2.0, 0.0), (5.0, 3.0), (7.0, 0.0)]);
        let (tau, prefix) = f.truncate_at_volume(0.0, 2.0).unwrap();
        assert_eq!(tau, 2.0);
        assert_eq!(prefix, F::rectangle(0.0, 2.0, 1.0));
        // continuing across the plateau keeps the gap
        let (tau, prefix) = f.truncate_at_volume(0.0, 5.0).unwrap();
        assert_eq!(tau, 6.0);
        assert_eq!(prefix.positive_runs().count(), 2);
        assert!((prefix.integrate(0.0, tau) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn truncate_mid_piece_start() {
        let f = F::rectangle(0.0, 10.0, 1.0);
        let (tau, prefix) = f.truncate_at_volume(4.0, 3.0).unwrap();
        assert_eq!(tau, 7.0);
        assert_eq!(prefix, F::rectangle(4.0, 7.0, 1.0));
    }

    #[test]
    fn canonical_form_drops_residue() {
        let f = F::from_steps([(0.0, 0.1), (0.0, 0.2), (1.0, -0.3)]);
        // 0.1 + 0.2 - 0.3 is not exactly zero in binary floating point
        assert_eq!(f.breakpoint_count(), 2);
        assert_eq!(f.tail_value(), 0.0);
        let g = F::from_levels([(0.0, 1.0), (1.0, 1.0 + 1e-14), (2.0 + 1e-11, 0.0), (2.0, 0.0)]);
        assert_eq!(g.breakpoint_count(), 2);
        let close = F::from_levels([(0.0, 1.0), (1.0, 2.0), (1.0 + 1e-10, 3.0)]);
        assert_eq!(close, F::from_levels([(0.0, 1.0), (1.0, 3.0)]));
    }

    #[test]
    fn canonicalization_idempotent() {
        let f = F::from_steps([(0.0, 1.0), (1.0, 2.0), (3.0, -3.0), (3.0, 0.5)]);
        assert_eq!(F::from_levels(f.levels()), f);
        assert_eq!(F::from_steps(f.steps()), f);
    }

    #[test]
    fn debug_text_round_trip() {
        let f = F::from_steps([(1.0, 1.0), (3.0, 1.0), (5.0, -2.0)]);
        let text = f.to_debug_text();
        assert_eq!(text, "1,1\n3,1\n5,-2\n");
        assert_eq!(F::parse_debug_text(&text).unwrap(), f);
        assert_eq!(F::parse_debug_text("").unwrap(), F::zero());
        assert!(matches!(F::parse_debug_text("1;2"), Err(StepParseError::Malformed { line: 1, .. })));
        assert_eq!(F::parse_debug_text("2,1\n1,1"), Err(StepParseError::Unordered { line: 2 }));
    }

    #[test]
    fn display_form() {
        let f = F::from_steps([(1.0, 1.0), (3.0, 1.0), (5.0, -2.0)]);
        assert_eq!(f.to_string(), "1h(t-1) +1h(t-3) -2h(t-5)");
        assert_eq!(F::zero().to_string(), "0");
    }

    #[test]
    fn rectangle_shape() {
        let r = Rectangle::new(1.0, 3.0, 2.0).unwrap();
        let f = r.to_step_function();
        let jumps: Vec<f64> = f.steps().map(|s| s.1).collect();
        assert_eq!(jumps, vec![2.0, -2.0]);
        assert_eq!(r.volume(), 4.0);
        assert!(Rectangle::new(1.0, 1.0, 2.0).is_none());
        assert!(Rectangle::new(1.0, 2.0, 0.0).is_none());
    }

    #[test]
    fn min_over_span() {
        let c = staircase_constraint();
        assert_eq!(c.min_over(1.0, 6.0), 1.0);
        assert_eq!(c.min_over(3.0, 6.0), 2.0);
        assert_eq!(c.min_over(0.0, 6.0), 0.0);
    }

    #[test]
    fn works_for_f32() {
        let f = StepFunction::<f32>::from_levels([(1.0, 1.0), (3.0, 2.0), (6.0, 0.0)]);
        let (tau, _) = f.truncate_at_volume(0.0, 6.0).unwrap();
        assert_eq!(tau, 5.0);
        assert_eq!(f.integrate(0.0, 10.0), 8.0);
    }
}
