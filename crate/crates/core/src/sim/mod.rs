//! Flow-level simulation: Poisson workloads, reservation schemes on a
//! topology, fluid transport settings on a single link, and sweeps.

pub mod erlang;
pub mod metrics;
pub mod reserve;
pub mod sweep;
pub mod transport;
pub mod workload;

pub use erlang::erlang_b;
pub use metrics::{MeanMetrics, Metrics, Replicated, SampleStats};
pub use reserve::{run_reservation_sim, run_reservation_sim_observed, WARMUP_FRACTION};
pub use sweep::{
    aggregate, oracle_check, sweep, Cell, CellError, CellResult, GroupResult, OracleRow, SweepSpec, TopologyKind,
};
pub use transport::{run_transport_sim, run_transport_sim_observed, water_fill, FlowOutcome, TransportSetting};
pub use workload::{VolumeDist, WorkloadSpec};
