//! Replicated parameter sweeps, run in parallel with deterministic output
//! order.

use std::fmt;

use rayon::prelude::*;

use crate::network::Topology;
use crate::sim::erlang::erlang_b;
use crate::sim::metrics::{Metrics, Replicated, SampleStats};
use crate::sim::reserve::run_reservation_sim;
use crate::sim::transport::{run_transport_sim, TransportSetting};
use crate::sim::workload::{VolumeDist, WorkloadSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    SingleLink,
    /// `n` ingress and `n` egress sites, each behind its own access link.
    Star,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SingleLink => "single-link",
            Self::Star => "star",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub topology: TopologyKind,
    /// Star sizes; ignored (treated as `[1]`) for a single link.
    pub sizes: Vec<usize>,
    pub capacity: f64,
    pub loads: Vec<f64>,
    pub settings: Vec<TransportSetting>,
    pub volume: VolumeDist,
    /// `r_max` and `r_min` as fractions of `capacity`.
    pub r_max_ratio: f64,
    pub r_min_ratio: f64,
    pub arrivals: usize,
    pub replications: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn sizes(&self) -> Vec<usize> {
        match self.topology {
            TopologyKind::SingleLink => vec![1],
            TopologyKind::Star => self.sizes.clone(),
        }
    }

    /// All cells in output order: size, load, setting, replication.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for n in self.sizes() {
            for &load in &self.loads {
                for setting in &self.settings {
                    for replication in 0..self.replications {
                        cells.push(Cell {
                            n,
                            load,
                            setting: *setting,
                            replication,
                            seed: replication_seed(self.seed, load, replication),
                        });
                    }
                }
            }
        }
        cells
    }

    pub fn workload(&self, cell: &Cell) -> WorkloadSpec {
        WorkloadSpec::at_load(
            cell.load,
            self.capacity,
            cell.n,
            self.volume,
            self.r_max_ratio * self.capacity,
            self.r_min_ratio * self.capacity,
            cell.seed,
        )
    }

    pub fn run_cell(&self, cell: &Cell) -> Result<Metrics, CellError> {
        let workload = self.workload(cell);
        match (self.topology, cell.setting) {
            (TopologyKind::SingleLink, setting) => {
                Ok(run_transport_sim(&setting, &workload, self.capacity, self.arrivals))
            }
            (TopologyKind::Star, TransportSetting::SchemeDull(scheme)) => {
                if cell.n == 0 || !(self.capacity > 0.0) {
                    return Err(CellError(format!("invalid star n={} capacity={}", cell.n, self.capacity)));
                }
                let topo = Topology::star(cell.n, self.capacity);
                Ok(run_reservation_sim(&topo, &scheme, &workload, self.arrivals))
            }
            (TopologyKind::Star, setting) => Err(CellError(format!("{setting} runs on a single link only"))),
        }
    }
}

/// One (size, load, setting, replication) point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub load: f64,
    pub setting: TransportSetting,
    pub replication: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct CellError(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: Result<Metrics, CellError>,
}

/// Replications of one (size, load, setting) group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub n: usize,
    pub load: f64,
    pub setting: TransportSetting,
    pub stats: Replicated,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of one replication. Independent of the setting and star size, so
/// every setting sees the same arrival times and volumes.
pub fn replication_seed(master: u64, load: f64, replication: usize) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(load.to_bits())) ^ replication as u64)
}

/// Runs every cell of `spec` in parallel; results come back in
/// [`SweepSpec::cells`] order.
pub fn sweep(spec: &SweepSpec) -> Vec<CellResult> {
    spec.cells().into_par_iter().map(|cell| CellResult { cell, outcome: spec.run_cell(&cell) }).collect()
}

/// Groups consecutive replications of successful cells.
pub fn aggregate(results: &[CellResult]) -> Vec<GroupResult> {
    let mut groups: Vec<(Cell, Vec<Metrics>)> = Vec::new();
    for r in results {
        let Ok(m) = &r.outcome else { continue };
        match groups.last_mut() {
            Some((c, runs)) if c.n == r.cell.n && c.load == r.cell.load && c.setting == r.cell.setting => {
                runs.push(m.clone());
            }
            _ => groups.push((r.cell, vec![m.clone()])),
        }
    }
    groups
        .into_iter()
        .map(|(c, runs)| GroupResult { n: c.n, load: c.load, setting: c.setting, stats: Replicated::new(runs) })
        .collect()
}

/// Simulated blocking of a dull `m`-server loss link against Erlang-B.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub load: f64,
    pub servers: u32,
    pub simulated: SampleStats,
    pub erlang_b: f64,
    pub tolerance: f64,
}

impl OracleRow {
    pub fn passes(&self) -> bool {
        (self.simulated.mean - self.erlang_b).abs() <= self.tolerance
    }
}

/// Runs a single link with `r_min = r_max = C / servers` and exponential
/// volumes at each load; the offered traffic is `load * servers` Erlangs.
/// Tolerance is `max(0.005, 2 SE)`.
pub fn oracle_check(loads: &[f64], servers: u32, arrivals: usize, replications: usize, seed: u64) -> Vec<OracleRow> {
    let rate = 1.0 / servers as f64;
    let spec = SweepSpec {
        topology: TopologyKind::SingleLink,
        sizes: vec![1],
        capacity: 1.0,
        loads: loads.to_vec(),
        settings: vec![TransportSetting::ACDull],
        volume: VolumeDist::Exponential { mean: 1.0 },
        r_max_ratio: rate,
        r_min_ratio: rate,
        arrivals,
        replications,
        seed,
    };
    aggregate(&sweep(&spec))
        .into_iter()
        .map(|g| {
            let simulated = g.stats.blocking;
            OracleRow {
                load: g.load,
                servers,
                erlang_b: erlang_b(servers, g.load * servers as f64),
                tolerance: (2.0 * simulated.std_error()).max(0.005),
                simulated,
            }
        })
        .collect()
}
