//! Bandwidth reservation for deadline-constrained bulk transfers.
//!
//! * [`steprate`]: canonical step time-rate functions with min, plus, order,
//!   integration and volume truncation.
//! * [`reservation`]: requests, constraints and the four scheme families.
//! * [`network`]: link state, topologies, centralized and hop-by-hop
//!   reservation.
//! * [`sim`]: flow-level simulators for reservation schemes and transport
//!   settings, Erlang-B, replicated sweeps.
//! * [`experiment`]: experiment configuration and CSV output.
//!
//! The algebra, schemes and link state are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix them to `f64`, which the simulators use.

// `!(x > 0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiment;
pub mod network;
pub mod reservation;
pub mod scalar;
pub mod sim;
pub mod steprate;

pub use scalar::Scalar;

pub type StepFn = steprate::StepFunction<f64>;
pub type Rect = steprate::Rectangle<f64>;
pub type Req = reservation::Request<f64>;
pub type Dec = reservation::Decision<f64>;
pub type Scheme = reservation::SchemeKind<f64>;
pub type Link = network::LinkState<f64>;
pub type Net = network::Topology<f64>;
