//! Exact AND-inverter-graph sizes for small Boolean functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`truthtable`]: 64-bit truth tables for up to six inputs.
//! * [`npn`]: NPN transforms, canonical forms and class enumeration.
//! * [`aig`]: AND-inverter graphs with free complemented edges, simulation and
//!   ASCII AIGER I/O.
//! * [`synthesis`]: exact minimum-size search, the brute-force oracle for
//!   `n <= 3`, the class-level sweep and the DIMACS export path.
//! * [`repair`]: the equality-detector gadget that moves a circuit one truth
//!   table bit at a time while adding at most `n` gates per flip.
//! * [`mutation`]: the NPN mutation graph and the `|delta opt| <= n` check.
//! * [`store`]: append-only persistence of proven results.

pub mod aig;
pub mod mutation;
pub mod npn;
pub mod repair;
pub mod store;
pub mod synthesis;
pub mod truthtable;

pub use aig::{AigCircuit, AigError, AndGate, Literal, Violation};
pub use mutation::{BoundReport, MutationEdge, MutationGraph, SummaryStats};
pub use npn::{NpnClass, NpnTransform};
pub use repair::{RepairError, RepairReport};
pub use store::{ResultRecord, Store, StoreError};
pub use synthesis::{
    Backend, Existence, OptResult, OptStatus, Pruning, SynthesisConfig, SynthesisError,
};
pub use truthtable::{Assignment, TruthTable, TruthTableError, MAX_VARS};
