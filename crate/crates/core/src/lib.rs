//! Resource sharing and pipelining (RSP) exploration for coarse-grained
//! reconfigurable arrays.
//!
//! The crate covers the lower half of an RSP design flow: given a base
//! array and the loop-pipelined contexts of its target kernels, it estimates
//! the area of each sharing/pipelining candidate, rearranges the contexts
//! around the shared resources to bound the cycle count, filters the
//! candidates to a Pareto set and picks one. A functional simulator checks
//! that rearranged contexts still compute the same results.

pub mod arch;
pub mod cost;
pub mod dse;
pub mod kernel;
pub mod reference;
pub mod report;
pub mod scalar;
pub mod schedule;
pub mod sim;

pub use arch::{ArchError, ArchParams, SharedResource, Sharing, VariantKey};
pub use kernel::{Context, KernelError, OpId, Opcode, Operand, Operation, Pe};
pub use scalar::Scalar;
pub use schedule::{apply_rp, apply_rs, rearrange, RearrangedContext, ScheduleError};

/// Cost table over `f64`.
pub type CostTable = cost::CostTable<f64>;
/// Area estimate over `f64`.
pub type AreaEstimate = cost::AreaEstimate<f64>;
/// Exact cost table for digit-level checks.
pub type RationalCostTable = cost::CostTable<num_rational::Rational64>;
/// Candidate evaluation over `f64`.
pub type CandidateEval = dse::CandidateEval<f64>;
/// Per-kernel evaluation over `f64`.
pub type KernelEval = dse::KernelEval<f64>;
/// Exploration result over `f64`.
pub type Exploration = dse::Exploration<f64>;
