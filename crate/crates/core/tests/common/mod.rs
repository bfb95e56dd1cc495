//! Property checks shared by the property tests and the acceptance suite.
//! Every check draws from a fixed-seed runner, so failures reproduce.
#![allow(dead_code)]

use bulkresv::experiment::{ExperimentKind, ExperimentSpec};
use bulkresv::network::{centralized_reserve, distributed_reserve, LinkId, LinkState, Topology};
use bulkresv::reservation::{
    combined_constraint, decide, pareto_rectangles, PathSnapshot, RateRule, Request, RequestId, SchemeKind, SiteId,
};
use bulkresv::sim::{TopologyKind, TransportSetting, VolumeDist};
use bulkresv::steprate::{Rectangle, StepFunction};
use bulkresv::{Scalar, StepFn};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub struct Property {
    pub name: &'static str,
    pub run: fn(u32) -> Result<(), String>,
}

/// The algebra and scheme properties, with their default case counts.
pub const ALGEBRA: &[(Property, u32)] = &[
    (Property { name: "closure", run: closure }, 512),
    (Property { name: "closure-f32", run: closure_f32 }, 256),
    (Property { name: "pointwise-oracle", run: pointwise }, 512),
    (Property { name: "pointwise-oracle-f32", run: pointwise_f32 }, 256),
    (Property { name: "partial-order", run: partial_order }, 512),
    (Property { name: "integration-additivity", run: integration }, 512),
    (Property { name: "truncate-earliest", run: truncate }, 512),
    (Property { name: "pareto-brute-force", run: pareto }, 1000),
    (Property { name: "multi-interval-earliest", run: multi_interval }, 512),
    (Property { name: "flextime-minimal", run: flextime }, 512),
    (Property { name: "scheme-nesting", run: nesting }, 512),
];

pub const NETWORK: &[(Property, u32)] = &[
    (Property { name: "centralized-distributed", run: equivalence }, 64),
    (Property { name: "compact-preserves-future", run: compact }, 256),
    (Property { name: "commit-keeps-bounds", run: commit_bounds }, 256),
    (Property { name: "config-round-trip", run: config_round_trip }, 256),
];

pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn outcome<V: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<V>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Breakpoints on a half-unit grid, small integer levels of either sign,
/// at most 8 breakpoints; the tail may be nonzero.
pub fn any_step() -> impl Strategy<Value = StepFn> {
    prop::collection::vec((1u8..=4, -3i8..=3), 0..=8).prop_map(|v| {
        let mut t = 0.0;
        StepFn::from_levels(v.into_iter().map(|(gap, x)| {
            t += gap as f64 * 0.5;
            (t, x as f64)
        }))
    })
}

/// Nonnegative with finite support: a link's free bandwidth over a horizon.
pub fn finite_nonneg() -> impl Strategy<Value = StepFn> {
    prop::collection::vec((1u8..=4, 0u8..=4), 0..=7).prop_map(|v| {
        let mut t = 0.0;
        let mut levels: Vec<(f64, f64)> = v
            .into_iter()
            .map(|(gap, x)| {
                t += gap as f64 * 0.5;
                (t, x as f64)
            })
            .collect();
        levels.push((t + 0.5, 0.0));
        StepFn::from_levels(levels)
    })
}

fn to_f32(f: &StepFn) -> StepFunction<f32> {
    StepFunction::from_levels(f.levels().map(|(t, v)| (t as f32, v as f32)))
}

fn sample_points<T: Scalar>(fs: &[&StepFunction<T>]) -> Vec<T> {
    let quarter = T::from_f64_lossy(0.25);
    let mut pts = vec![T::from_f64_lossy(-1.0), T::from_f64_lossy(100.0)];
    for f in fs {
        for t in f.breakpoints() {
            pts.extend([t - quarter, t, t + quarter]);
        }
    }
    pts
}

fn check_canonical<T: Scalar>(h: &StepFunction<T>) -> Result<(), TestCaseError> {
    let levels: Vec<(T, T)> = h.levels().collect();
    let mut prev_value = T::zero();
    for (i, &(t, v)) in levels.iter().enumerate() {
        if i > 0 {
            prop_assert!(t - levels[i - 1].0 >= T::TIME_EPS, "breakpoints too close in {h}");
        }
        prop_assert!((v - prev_value).abs() > T::RATE_EPS, "redundant breakpoint in {h}");
        prev_value = v;
    }
    prop_assert!(*h == StepFunction::from_levels(levels), "not a fixed point: {h}");
    Ok(())
}

fn closure_generic<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>) -> Result<(), TestCaseError> {
    for h in [f.min(g), f.max(g), f.add(g), f.subtract(g), f.negate(), f.scale(T::from_f64_lossy(2.0))] {
        check_canonical(&h)?;
    }
    Ok(())
}

fn pointwise_generic<T: Scalar>(f: &StepFunction<T>, g: &StepFunction<T>) -> Result<(), TestCaseError> {
    let (mn, mx, sum, diff) = (f.min(g), f.max(g), f.add(g), f.subtract(g));
    for t in sample_points(&[f, g]) {
        let (a, b) = (f.evaluate(t), g.evaluate(t));
        prop_assert_eq!(mn.evaluate(t), a.min(b));
        prop_assert_eq!(mx.evaluate(t), a.max(b));
        prop_assert!((sum.evaluate(t) - (a + b)).abs() <= T::RATE_EPS);
        prop_assert!((diff.evaluate(t) - (a - b)).abs() <= T::RATE_EPS);
    }
    Ok(())
}

pub fn closure(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(any_step(), any_step()), |(f, g)| closure_generic(&f, &g)))
}

pub fn closure_f32(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(any_step(), any_step()), |(f, g)| closure_generic(&to_f32(&f), &to_f32(&g))))
}

pub fn pointwise(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(any_step(), any_step()), |(f, g)| pointwise_generic(&f, &g)))
}

pub fn pointwise_f32(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(any_step(), any_step()), |(f, g)| pointwise_generic(&to_f32(&f), &to_f32(&g))))
}

pub fn partial_order(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(any_step(), any_step(), any_step()), |(f, g, h)| {
        prop_assert!(f.leq(&f));
        let lo = f.min(&g);
        let hi = f.max(&h);
        prop_assert!(lo.leq(&f) && lo.leq(&g));
        prop_assert!(f.leq(&hi));
        prop_assert!(lo.leq(&hi), "transitivity");
        if f.leq(&g) && g.leq(&f) {
            prop_assert_eq!(&f, &g);
        }
        let oracle = sample_points(&[&f, &g]).into_iter().all(|t| f.evaluate(t) <= g.evaluate(t));
        prop_assert_eq!(f.leq(&g), oracle);
        Ok(())
    }))
}

/// Integral over `[t0, t1]` on the quarter grid; exact for the generators.
fn grid_integral(f: &StepFn, t0: f64, t1: f64) -> f64 {
    let mut total = 0.0;
    let mut t = t0;
    while t < t1 {
        total += f.evaluate(t) * 0.25;
        t += 0.25;
    }
    total
}

pub fn integration(cases: u32) -> Result<(), String> {
    let grid = || (0u8..=100).prop_map(|k| k as f64 * 0.25);
    outcome(runner(cases).run(&(any_step(), any_step(), grid(), grid(), grid()), |(f, g, x, y, z)| {
        let mut p = [x, y, z];
        p.sort_by(f64::total_cmp);
        let [a, b, c] = p;
        prop_assert!((f.integrate(a, b) + f.integrate(b, c) - f.integrate(a, c)).abs() < 1e-9);
        prop_assert!((f.add(&g).integrate(a, c) - f.integrate(a, c) - g.integrate(a, c)).abs() < 1e-9);
        prop_assert!((f.integrate(a, c) - grid_integral(&f, a, c)).abs() < 1e-9);
        prop_assert_eq!(f.integrate(c, a), 0.0);
        Ok(())
    }))
}

/// Earliest completion of `volume` from `t0` against `f` walked on the
/// quarter grid.
fn grid_completion(f: &StepFn, t0: f64, volume: f64) -> Option<f64> {
    let end = f.last_breakpoint().unwrap_or(t0).max(t0);
    let mut acc = 0.0;
    let mut t = t0;
    while t < end {
        let rate = f.evaluate(t);
        if rate > 0.0 && acc + rate * 0.25 >= volume - 1e-12 {
            return Some(t + (volume - acc) / rate);
        }
        acc += rate * 0.25;
        t += 0.25;
    }
    None
}

pub fn truncate(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(finite_nonneg(), 0u8..=60, 1u8..=60), |(f, t0, v)| {
        let (t0, volume) = (t0 as f64 * 0.25, v as f64 * 0.25);
        let got = f.truncate_at_volume(t0, volume);
        match (got, grid_completion(&f, t0, volume)) {
            (None, None) => {}
            (Some((tau, prefix)), Some(want)) => {
                prop_assert!((tau - want).abs() < 1e-9, "tau {tau} want {want}");
                prop_assert!(prefix.leq(&f));
                prop_assert!(prefix.is_nonnegative());
                prop_assert!((prefix.integrate(t0, tau) - volume).abs() < 1e-9);
                prop_assert!(prefix.first_breakpoint().unwrap() >= t0);
                prop_assert!(prefix.last_breakpoint().unwrap() <= tau + 1e-12);
                prop_assert_eq!(prefix.tail_value(), 0.0);
            }
            (got, want) => prop_assert!(false, "truncate {got:?} vs oracle {want:?} for {f}"),
        }
        Ok(())
    }))
}

fn key(r: &Rectangle<f64>) -> (f64, f64, f64) {
    (r.start, r.end, r.rate)
}

/// Every rectangle spanning two breakpoints at the minimum level between
/// them, minus those dominated by another.
pub fn brute_force_pareto(c: &StepFn) -> Vec<Rectangle<f64>> {
    let bps: Vec<f64> = c.breakpoints().collect();
    let mut all = Vec::new();
    for (i, &s) in bps.iter().enumerate() {
        for &e in &bps[i + 1..] {
            let rate = c.min_over(s, e);
            if rate > 0.0 {
                all.push(Rectangle { start: s, end: e, rate });
            }
        }
    }
    let mut maximal: Vec<Rectangle<f64>> =
        all.iter().filter(|a| !all.iter().any(|b| b != *a && a.within(b))).cloned().collect();
    maximal.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    maximal.dedup();
    maximal
}

pub fn pareto(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&finite_nonneg(), |c| {
        let mut got = pareto_rectangles(&c);
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        prop_assert_eq!(got, brute_force_pareto(&c), "constraint {}", c);
        Ok(())
    }))
}

/// A request on the half grid against a link from [`finite_nonneg`].
pub fn request_and_link() -> impl Strategy<Value = (Request<f64>, StepFn)> {
    (finite_nonneg(), 0u8..=20, 1u8..=30, 1u8..=24, 1u8..=3).prop_map(|(link, a, span, v, rmax)| {
        let arrival = a as f64 * 0.5;
        let r = Request::new(
            RequestId(0),
            SiteId(0),
            SiteId(1),
            v as f64 * 0.5,
            arrival,
            arrival + span as f64 * 0.5,
            rmax as f64,
        )
        .expect("valid request");
        (r, link)
    })
}

pub fn multi_interval(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&request_and_link(), |(r, link)| {
        let c = combined_constraint(&r, [&link]);
        let d = decide(&SchemeKind::MultiInterval, &r, &c, &PathSnapshot::empty());
        match (d.completion_time(), grid_completion(&c, r.arrival, r.volume)) {
            (None, None) => {}
            (Some(done), Some(want)) => {
                let res = d.reservation().unwrap();
                prop_assert!((done - want).abs() < 1e-9, "completion {done} want {want}");
                prop_assert!(res.leq(&c));
                prop_assert!((res.integrate(r.arrival, r.deadline) - r.volume).abs() < 1e-9);
            }
            (got, want) => prop_assert!(false, "multi-interval {got:?} vs oracle {want:?}"),
        }
        Ok(())
    }))
}

/// Earliest completion over every rectangle spanning breakpoints of `c`.
fn brute_force_flex(r: &Request<f64>, c: &StepFn) -> Option<f64> {
    let bps: Vec<f64> = c.breakpoints().collect();
    let mut best: Option<f64> = None;
    for (i, &s) in bps.iter().enumerate() {
        for &e in &bps[i + 1..] {
            let rate = c.min_over(s, e);
            if rate > 0.0 && rate * (e - s) >= r.volume - 1e-12 {
                let done = s + r.volume / rate;
                best = Some(best.map_or(done, |b: f64| b.min(done)));
            }
        }
    }
    best
}

pub fn flextime(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&request_and_link(), |(r, link)| {
        let c = combined_constraint(&r, [&link]);
        let d = decide(&SchemeKind::FlexTimeFlexRate, &r, &c, &PathSnapshot::empty());
        match (d.completion_time(), brute_force_flex(&r, &c)) {
            (None, None) => {}
            (Some(done), Some(want)) => {
                prop_assert!((done - want).abs() < 1e-9, "completion {done} want {want}");
                let res = d.reservation().unwrap();
                prop_assert_eq!(res.positive_runs().count(), 1);
                prop_assert!(res.leq(&c));
            }
            (got, want) => prop_assert!(false, "flextime {got:?} vs oracle {want:?}"),
        }
        Ok(())
    }))
}

pub fn nesting(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&request_and_link(), |(r, link)| {
        let c = combined_constraint(&r, [&link]);
        let snap = PathSnapshot::from_links([(link.evaluate(r.arrival), 4.0)]);
        let done = |s: SchemeKind<f64>| decide(&s, &r, &c, &snap).completion_time();
        let mi = done(SchemeKind::MultiInterval);
        let flex = done(SchemeKind::FlexTimeFlexRate);
        for fixed in
            [done(SchemeKind::FixTimeFixRate(RateRule::MaxRate)), done(SchemeKind::FixTimeFixRate(RateRule::MinRate))]
                .into_iter()
                .flatten()
        {
            prop_assert!(flex.is_some_and(|f| f <= fixed + 1e-9), "fixed {fixed} flex {flex:?}");
        }
        if let Some(f) = flex {
            prop_assert!(mi.is_some_and(|m| m <= f + 1e-9), "flex {f} mi {mi:?}");
        }
        if let Some(t) = done(SchemeKind::ThresholdFixTimeFlexRate { theta: 0.2 }) {
            prop_assert!(mi.is_some_and(|m| m <= t + 1e-9));
        }
        Ok(())
    }))
}

/// Arrival-ordered requests between random sites of a 3-site star.
fn star_requests() -> impl Strategy<Value = Vec<Request<f64>>> {
    prop::collection::vec((0.0f64..3.0, 0usize..3, 0usize..3, 0.1f64..4.0, 0.05f64..0.6, 1.0f64..4.0), 1..40).prop_map(
        |v| {
            let mut t = 0.0;
            v.into_iter()
                .enumerate()
                .map(|(i, (gap, s, d, volume, rmax, slack))| {
                    t += gap;
                    let deadline = t + slack * volume / rmax;
                    Request::new(RequestId(i as u64), SiteId(s), SiteId(3 + d), volume, t, deadline, rmax).unwrap()
                })
                .collect()
        },
    )
}

pub fn equivalence(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&star_requests(), |requests| {
        for scheme in SchemeKind::<f64>::evaluated() {
            let mut central = Topology::star(3, 1.0);
            let mut hop = Topology::star(3, 1.0);
            for r in &requests {
                let a = centralized_reserve(&mut central, &scheme, r).unwrap();
                let (b, _) = distributed_reserve(&mut hop, &scheme, r).unwrap();
                prop_assert_eq!(&a, &b, "{} {}", scheme, r.id);
                prop_assert_eq!(&central, &hop);
            }
        }
        Ok(())
    }))
}

fn commits() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.0f64..20.0, 0.1f64..10.0, 0.01f64..1.0), 0..12)
}

pub fn compact(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&(commits(), 0.0f64..30.0), |(rects, now)| {
        let mut link = LinkState::empty(LinkId(0), 4.0, 0.0);
        for (s, len, rate) in rects {
            let d = StepFn::rectangle(s, s + len, rate);
            if link.can_commit(&d) {
                link.commit(&d);
            }
        }
        let before = link.remaining().clone();
        link.compact(now);
        prop_assert!(link.invariants_hold());
        prop_assert!(link.remaining().breakpoints().filter(|&t| t < now).count() <= 1);
        for t in sample_points(&[&before]).into_iter().chain([now]).filter(|&t| t >= now) {
            prop_assert_eq!(link.unreserved_at(t), before.evaluate(t), "t={}", t);
        }
        Ok(())
    }))
}

pub fn commit_bounds(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&commits(), |rects| {
        let mut link = LinkState::empty(LinkId(0), 1.0, 0.0);
        let mut reserved = StepFn::zero();
        for (s, len, rate) in rects {
            let d = StepFn::rectangle(s, s + len, rate);
            if link.can_commit(&d) {
                link.commit(&d);
                reserved = reserved.add(&d);
            }
            prop_assert!(link.invariants_hold());
        }
        let full = StepFn::heaviside(0.0, 1.0);
        for t in sample_points(&[&reserved]) {
            let want = (full.evaluate(t) - reserved.evaluate(t)).max(0.0);
            prop_assert!((link.unreserved_at(t) - want).abs() < 1e-9);
        }
        Ok(())
    }))
}

fn settings(star: bool) -> impl Strategy<Value = Vec<TransportSetting>> {
    let scheme = prop_oneof![
        Just(SchemeKind::FixTimeFixRate(RateRule::MinRate)),
        Just(SchemeKind::FixTimeFixRate(RateRule::MaxRate)),
        (0.001f64..=1.0).prop_map(|theta| SchemeKind::ThresholdFixTimeFlexRate { theta }),
        Just(SchemeKind::FlexTimeFlexRate),
        Just(SchemeKind::MultiInterval),
    ]
    .prop_map(TransportSetting::SchemeDull);
    let any = prop_oneof![
        4 => scheme.clone(),
        1 => (0.001f64..=1.0).prop_map(|r_max_ratio| TransportSetting::NoAC { r_max_ratio }),
        1 => Just(TransportSetting::ACIdeal),
        1 => Just(TransportSetting::ACDull),
    ];
    if star {
        prop::collection::vec(scheme, 1..6).boxed()
    } else {
        prop::collection::vec(any, 1..6).boxed()
    }
}

pub fn experiment_spec() -> impl Strategy<Value = ExperimentSpec> {
    let kind = prop::sample::select(ExperimentKind::ALL.to_vec());
    (any::<bool>(), kind, "[a-z][a-z0-9-]{0,12}", prop::collection::vec(0.001f64..5.0, 1..6))
        .prop_flat_map(|(star, kind, name, loads)| {
            (
                Just((star, kind, name, loads)),
                settings(star),
                prop::collection::vec(1usize..64, 1..4),
                (1usize..1_000_000, 1usize..50, 0u64..=i64::MAX as u64),
                (0.01f64..100.0, any::<bool>(), 0.01f64..10.0),
                (0.001f64..=1.0, 0.0f64..=1.0, proptest::option::of("[a-z]{1,8}/[a-z]{1,8}\\.csv")),
            )
        })
        .prop_map(
            |(
                (star, kind, name, loads),
                settings,
                sizes,
                (arrivals, replications, seed),
                (capacity, exp, mean),
                (r_max_ratio, frac, output),
            )| {
                ExperimentSpec {
                    name,
                    kind,
                    loads,
                    settings,
                    arrivals,
                    replications,
                    seed,
                    output: output.map(Into::into),
                    topology: if star { TopologyKind::Star } else { TopologyKind::SingleLink },
                    sizes: if star { sizes } else { vec![1] },
                    capacity,
                    volume: if exp { VolumeDist::Exponential { mean } } else { VolumeDist::Constant(mean) },
                    r_max_ratio,
                    r_min_ratio: (r_max_ratio * frac).max(1e-6),
                }
            },
        )
}

pub fn config_round_trip(cases: u32) -> Result<(), String> {
    outcome(runner(cases).run(&experiment_spec(), |spec| {
        prop_assert_eq!(spec.validate(), Ok(()));
        let text = spec.render();
        prop_assert_eq!(ExperimentSpec::parse(&text), Ok(spec), "{}", text);
        Ok(())
    }))
}
