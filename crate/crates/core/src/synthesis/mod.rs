//! Exact minimum AIG size.
//!
//! [`exists_circuit`] answers "is there a `k`-gate AIG for this table" by
//! exhaustive enumeration of canonical gate sequences. [`opt_size`] deepens
//! `k` until a witness appears and labels the result [`OptStatus::Exact`] only
//! when every smaller `k` was exhausted within budget. [`brute_oracle`] is an
//! independent breadth-first search over sets of gate functions for `n <= 3`,
//! [`sweep`] settles all NPN classes of `n <= 4` at once, and [`cnf`] exports
//! the same question as DIMACS for external solvers.

pub mod cnf;
mod oracle;
mod search;
pub mod sweep;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{AigCircuit, AigError, Literal};
use crate::truthtable::TruthTable;

pub use oracle::{brute_oracle, OracleEntry};
pub use search::exists_circuit;
pub use sweep::{sweep_classes, SweepReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    /// Exhaustive canonical enumeration; the only backend that proves bounds.
    Enumeration,
    /// Write DIMACS for an external solver.
    CnfExport,
}

impl Backend {
    pub fn tag(&self) -> &'static str {
        match self {
            Backend::Enumeration => "enum",
            Backend::CnfExport => "cnf-export",
        }
    }
}

/// Search-space restrictions. Each one keeps at least one minimum-size
/// circuit for every function, so `opt_size` is unaffected by them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pruning {
    /// Fanins never read the constant node.
    pub no_constant_fanin: bool,
    /// A gate never reads both polarities of one node.
    pub no_complement_pair: bool,
    /// Every gate except the root feeds a later gate.
    pub require_all_gates_used: bool,
    /// Skip partial circuits whose gate-function signature was seen already.
    pub signature_dedup: bool,
    /// Every gate computes a function different from the constants, the
    /// input literals and every earlier gate (up to complement).
    pub distinct_functions: bool,
}

impl Default for Pruning {
    fn default() -> Self {
        Pruning {
            no_constant_fanin: true,
            no_complement_pair: true,
            require_all_gates_used: true,
            signature_dedup: true,
            distinct_functions: true,
        }
    }
}

impl Pruning {
    /// Only the structural rules; `distinct_functions` is off so the search
    /// space is exactly the one the DIMACS encoding describes.
    pub fn structural() -> Self {
        Pruning {
            distinct_functions: false,
            ..Pruning::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisConfig {
    pub max_gates: usize,
    pub backend: Backend,
    /// Wall-clock limit for one `(table, k)` query.
    pub time_budget: Duration,
    pub pruning: Pruning,
    /// Worker threads for the top-level enumeration branches.
    pub jobs: usize,
    /// Upper bound on stored dedup signatures per worker; the set is
    /// cleared when it fills up.
    pub dedup_capacity: usize,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            max_gates: 12,
            backend: Backend::Enumeration,
            time_budget: Duration::from_secs(3600),
            pruning: Pruning::default(),
            jobs: 1,
            dedup_capacity: 1 << 22,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        if self.time_budget.is_zero() {
            return Err(SynthesisError::BadConfig("time budget must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(SynthesisError::BadConfig("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Existence {
    Witness(AigCircuit),
    /// The whole pruned space for this `k` was enumerated without a hit.
    Infeasible,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptStatus {
    Exact,
    UpperBound,
}

impl OptStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptStatus::Exact => "Exact",
            OptStatus::UpperBound => "UpperBound",
        }
    }
}

/// A size claim backed by a witness circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptResult {
    pub tt: TruthTable,
    pub size: usize,
    pub status: OptStatus,
    pub witness: AigCircuit,
    /// Largest `k` such that every gate count `<= k` is proven infeasible;
    /// `None` when nothing has been excluded.
    pub exhausted_below: Option<usize>,
    pub backend: String,
    pub elapsed: Duration,
}

impl OptResult {
    /// Re-simulates the witness and checks status bookkeeping.
    pub fn check(&self) -> Result<(), SynthesisError> {
        let tt = self.witness.evaluate()?;
        if tt != self.tt {
            return Err(SynthesisError::WitnessMismatch {
                expected: self.tt,
                got: tt,
            });
        }
        if self.witness.size() != self.size {
            return Err(SynthesisError::Inconsistent(format!(
                "witness has {} gates but size is {}",
                self.witness.size(),
                self.size
            )));
        }
        let expected = self.size.checked_sub(1);
        match self.status {
            OptStatus::Exact if self.exhausted_below != expected => {
                Err(SynthesisError::Inconsistent(format!(
                    "exact size {} with exhausted_below {:?}",
                    self.size, self.exhausted_below
                )))
            }
            OptStatus::UpperBound if self.exhausted_below >= expected && expected.is_some() => {
                Err(SynthesisError::Inconsistent(
                    "upper bound that is already proven exact".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthesisError {
    #[error("no circuit with at most {max_gates} gates found; sizes <= {exhausted_below:?} excluded")]
    Unknown {
        max_gates: usize,
        exhausted_below: Option<usize>,
    },
    #[error("brute-force oracle supports n <= 3, got {0}")]
    OracleTooLarge(usize),
    #[error("class sweep supports 1 <= n <= 4, got {0}")]
    SweepTooLarge(usize),
    #[error("class sweep to depth {depth} ran out of time")]
    SweepInterrupted { depth: usize },
    #[error("backend {0} cannot run searches in-process")]
    BackendUnavailable(&'static str),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("witness computes {got} instead of {expected}")]
    WitnessMismatch {
        expected: TruthTable,
        got: TruthTable,
    },
    #[error("inconsistent result: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Aig(#[from] AigError),
}

/// Smallest gate count worth trying: zero for constants and literals.
pub fn trivial_lower_bound(tt: TruthTable) -> usize {
    if tt.is_constant() || tt.as_literal().is_some() {
        0
    } else {
        1
    }
}

/// Zero-gate circuit for a constant or a literal.
pub(crate) fn trivial_circuit(tt: TruthTable) -> Option<AigCircuit> {
    let mut c = AigCircuit::new(tt.n());
    let out = if tt.bits() == 0 {
        Literal::FALSE
    } else if tt.is_constant() {
        Literal::TRUE
    } else {
        let (var, neg) = tt.as_literal()?;
        c.input(var).negate_if(neg)
    };
    c.set_output(out).ok()?;
    Some(c)
}

/// Iterative deepening from the trivial lower bound.
pub fn opt_size(tt: TruthTable, cfg: &SynthesisConfig) -> Result<OptResult, SynthesisError> {
    opt_size_from(tt, cfg, None)
}

/// Like [`opt_size`] but starts above a bound proven elsewhere (for
/// instance by [`sweep_classes`]); `known_exhausted` must be sound.
pub fn opt_size_from(
    tt: TruthTable,
    cfg: &SynthesisConfig,
    known_exhausted: Option<usize>,
) -> Result<OptResult, SynthesisError> {
    cfg.validate()?;
    if cfg.backend != Backend::Enumeration {
        return Err(SynthesisError::BackendUnavailable(cfg.backend.tag()));
    }
    let start = Instant::now();
    let k0 = trivial_lower_bound(tt);
    // Gate counts below k0 are excluded by the trivial bound.
    let mut exhausted_below = k0.checked_sub(1);
    if let Some(known) = known_exhausted {
        exhausted_below = exhausted_below.max(Some(known));
    }
    let first = exhausted_below.map_or(0, |k| k + 1);
    let mut unbroken = true;
    for k in first..=cfg.max_gates {
        match exists_circuit(tt, k, cfg)? {
            Existence::Witness(witness) => {
                let status = if unbroken {
                    OptStatus::Exact
                } else {
                    OptStatus::UpperBound
                };
                let result = OptResult {
                    tt,
                    size: k,
                    status,
                    witness,
                    exhausted_below,
                    backend: cfg.backend.tag().to_string(),
                    elapsed: start.elapsed(),
                };
                result.check()?;
                return Ok(result);
            }
            Existence::Infeasible => {
                if unbroken {
                    exhausted_below = Some(k);
                }
            }
            Existence::BudgetExhausted => unbroken = false,
        }
    }
    Err(SynthesisError::Unknown {
        max_gates: cfg.max_gates,
        exhausted_below,
    })
}
