use crate::network::{centralized_reserve, Topology};
use crate::reservation::{Decision, Request, SchemeKind};
use crate::sim::metrics::{Metrics, Tally};
use crate::sim::workload::WorkloadSpec;

/// Fraction of arrivals at the start of a run left out of the metrics.
pub const WARMUP_FRACTION: f64 = 0.1;

pub(crate) fn warmup_len(num_arrivals: usize) -> usize {
    (num_arrivals as f64 * WARMUP_FRACTION) as usize
}

/// Runs `num_arrivals` requests through `scheme` on a fresh copy of
/// `topology` with dull transport: accepted flows send exactly their
/// reservation and finish at its last breakpoint.
pub fn run_reservation_sim(
    topology: &Topology<f64>,
    scheme: &SchemeKind<f64>,
    workload: &WorkloadSpec,
    num_arrivals: usize,
) -> Metrics {
    run_reservation_sim_observed(topology, scheme, workload, num_arrivals, |_, _| {})
}

/// As [`run_reservation_sim`], calling `observe` with every request and its
/// decision, warm-up included.
pub fn run_reservation_sim_observed(
    topology: &Topology<f64>,
    scheme: &SchemeKind<f64>,
    workload: &WorkloadSpec,
    num_arrivals: usize,
    mut observe: impl FnMut(&Request<f64>, &Decision<f64>),
) -> Metrics {
    let mut net = topology.clone();
    let ingress = net.ingress_sites().to_vec();
    let egress = net.egress_sites().to_vec();
    let warmup = warmup_len(num_arrivals);
    let mut tally = Tally { track_intervals: true, ..Default::default() };

    for (i, r) in workload.requests(&ingress, &egress).take(num_arrivals).enumerate() {
        net.compact_path(r.source, r.dest, r.arrival).expect("generated sites are routable");
        let decision = centralized_reserve(&mut net, scheme, &r).expect("generated sites are routable");
        observe(&r, &decision);
        if i < warmup {
            continue;
        }
        tally.offered += 1;
        match &decision {
            Decision::Reject => tally.blocked += 1,
            Decision::Accept(_) => {
                let completion = decision.completion_time().expect("accepted reservation ends");
                assert!(
                    completion <= r.deadline + 1e-9,
                    "{scheme} finished {} after deadline {}",
                    completion,
                    r.deadline
                );
                tally.accepted += 1;
                tally.completed += 1;
                tally.flow_time_sum += completion - r.arrival;
                tally.interval_sum += decision.interval_count() as u64;
            }
        }
    }
    tally.finish()
}
