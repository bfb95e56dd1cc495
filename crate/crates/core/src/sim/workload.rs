use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::reservation::{Request, RequestId, SiteId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolumeDist {
    Constant(f64),
    Exponential { mean: f64 },
}

impl VolumeDist {
    pub fn mean(&self) -> f64 {
        match *self {
            VolumeDist::Constant(v) => v,
            VolumeDist::Exponential { mean } => mean,
        }
    }
}

/// Poisson arrivals of bulk requests. Every request gets `max_rate = r_max`
/// and deadline `arrival + volume / r_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub arrival_rate: f64,
    pub volume: VolumeDist,
    pub r_max: f64,
    pub r_min: f64,
    pub seed: u64,
}

impl WorkloadSpec {
    /// Arrival rate chosen so each of `links_sharing` equally loaded access
    /// links sees load `load` (`rho = lambda E[v] / C` per link).
    pub fn at_load(
        load: f64,
        capacity: f64,
        links_sharing: usize,
        volume: VolumeDist,
        r_max: f64,
        r_min: f64,
        seed: u64,
    ) -> Self {
        let arrival_rate = load * capacity * links_sharing as f64 / volume.mean();
        Self { arrival_rate, volume, r_max, r_min, seed }
    }

    /// `lambda E[v] / C`.
    pub fn load(&self, capacity: f64) -> f64 {
        self.arrival_rate * self.volume.mean() / capacity
    }

    pub fn with_rates(&self, r_max: f64, r_min: f64) -> Self {
        Self { r_max, r_min, ..self.clone() }
    }

    /// Endless request stream. Arrival times and volumes come from one
    /// ChaCha stream and site choices from another, so the same seed gives
    /// the same arrival process on any topology.
    pub fn requests<'a>(&self, ingress: &'a [SiteId], egress: &'a [SiteId]) -> impl Iterator<Item = Request<f64>> + 'a {
        let mut timing = ChaCha8Rng::seed_from_u64(self.seed);
        timing.set_stream(0);
        let mut sites = ChaCha8Rng::seed_from_u64(self.seed);
        sites.set_stream(1);
        let gaps = Exp::new(self.arrival_rate).expect("positive arrival rate");
        let volume = self.volume;
        let sizes = match volume {
            VolumeDist::Exponential { mean } => Some(Exp::new(1.0 / mean).expect("positive mean volume")),
            VolumeDist::Constant(_) => None,
        };
        let (r_max, r_min) = (self.r_max, self.r_min);
        let mut now = 0.0;
        (0u64..).map(move |i| {
            now += gaps.sample(&mut timing);
            let v = match (volume, &sizes) {
                (VolumeDist::Constant(v), _) => v,
                (_, Some(exp)) => exp.sample(&mut timing),
                _ => unreachable!(),
            };
            let source = ingress[sites.random_range(0..ingress.len())];
            let dest = egress[sites.random_range(0..egress.len())];
            Request::new(RequestId(i), source, dest, v, now, now + v / r_min, r_max).expect("valid generated request")
        })
    }
}
