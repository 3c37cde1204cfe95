//! Minimum-length TDMA scheduling with joint relay selection and power
//! control for wireless-powered cooperative communication networks.
//!
//! An access point (AP) broadcasts RF energy during a shared harvesting slot;
//! sources and decode-and-forward relays then spend the harvested energy to
//! push their data to the AP in dedicated uplink slots. The crate computes
//! the shortest such schedule:
//!
//! - [`single_source`]: closed-form optimum for one link (Lambert-W tangent
//!   point or the max-power corner).
//! - [`scheduling`]: POWMU, the bisection over the shared harvesting time
//!   that is optimal for a fixed relay assignment, and the cheaper MAX-EH.
//! - [`relaxation`]: convex relaxation of the mixed-integer problem, solved
//!   with a log-barrier interior-point method.
//! - [`relay_select`]: branch-and-bound (BBA), the OBH/RPH heuristics built
//!   on the relaxation, the criterion-driven RSTMA local search and the
//!   harvest-then-cooperate (HTC) baseline.
//! - [`net_model`] and [`experiment`]: random topologies, channel draws and
//!   the Monte-Carlo harness.
//!
//! The analytic layers ([`numerics`], [`net_model`], [`single_source`],
//! [`scheduling`]) are generic over [`Scalar`] (`f32` or `f64`). The
//! relaxation and everything built on it run in `f64`.

pub mod experiment;
pub mod net_model;
pub mod numerics;
pub mod relaxation;
pub mod relay_select;
pub mod scalar;
pub mod scheduling;
pub mod single_source;

pub use scalar::Scalar;

pub type SourceLinkF64 = single_source::SourceLink<f64>;
pub type SourceLinkF32 = single_source::SourceLink<f32>;
pub type LinkSolutionF64 = single_source::LinkSolution<f64>;
pub type SchedulingInstanceF64 = scheduling::SchedulingInstance<f64>;
pub type SchedulingInstanceF32 = scheduling::SchedulingInstance<f32>;
pub type ScheduleF64 = scheduling::Schedule<f64>;
pub type ScheduleF32 = scheduling::Schedule<f32>;
pub type NetworkInstanceF64 = net_model::NetworkInstance<f64>;
pub type NetworkInstanceF32 = net_model::NetworkInstance<f32>;

pub type FullScheduleF64 = relay_select::FullSchedule<f64>;
