//! One-bit circuit repair.
//!
//! Flipping row `x*` of a function costs at most `n` extra AND gates: an
//! equality detector `eq(x) = [x == x*]` built as an `n - 1` gate AND chain
//! over input literals, plus one gate that ORs it in (`!(!f & !eq)`) or
//! masks it out (`f & !eq`). Chaining flips bounds the size of any function
//! at Hamming distance `d` by `size + n * d`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{AigCircuit, AigError, Literal};
use crate::truthtable::{Assignment, TruthTable, TruthTableError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("row {row} already evaluates to {value}")]
    Precondition { row: usize, value: bool },
    #[error("assignment over {got} inputs for a circuit over {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("repair needs at least one input")]
    NoInputs,
    #[error("certificate failed: {0}")]
    Certificate(String),
    #[error(transparent)]
    Aig(#[from] AigError),
    #[error(transparent)]
    Table(#[from] TruthTableError),
}

/// Size certificate of a repair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairReport {
    pub input_size: usize,
    pub output_size: usize,
    pub flips: usize,
    /// `input_size + n * flips`.
    pub bound: usize,
    pub target_tt: TruthTable,
}

impl RepairReport {
    /// Re-simulates `circuit` and checks it against the report.
    pub fn check(&self, circuit: &AigCircuit) -> Result<(), RepairError> {
        if circuit.size() != self.output_size {
            return Err(RepairError::Certificate(format!(
                "circuit has {} gates, report says {}",
                circuit.size(),
                self.output_size
            )));
        }
        if self.output_size > self.bound {
            return Err(RepairError::Certificate(format!(
                "size {} exceeds bound {}",
                self.output_size, self.bound
            )));
        }
        let got = circuit.evaluate()?;
        if got != self.target_tt {
            return Err(RepairError::Certificate(format!(
                "circuit computes {got}, expected {}",
                self.target_tt
            )));
        }
        Ok(())
    }
}

/// Fragment over `n` inputs that is true exactly on `xstar`.
///
/// Input `i` enters the chain complemented iff bit `i` of `xstar` is 0.
pub fn build_detector(n: usize, xstar: Assignment) -> Result<AigCircuit, RepairError> {
    if n == 0 {
        return Err(RepairError::NoInputs);
    }
    if xstar.n() != n {
        return Err(RepairError::ArityMismatch {
            expected: n,
            got: xstar.n(),
        });
    }
    let mut c = AigCircuit::new(n);
    let lit = |c: &AigCircuit, i: usize| c.input(i).negate_if(!xstar.get(i));
    let mut acc = lit(&c, 0);
    for i in 1..n {
        let next = lit(&c, i);
        acc = c.add_and(acc, next)?;
    }
    c.set_output(acc)?;
    Ok(c)
}

fn check_arity(c: &AigCircuit, xstar: Assignment) -> Result<(), RepairError> {
    if c.n() == 0 {
        return Err(RepairError::NoInputs);
    }
    if xstar.n() != c.n() {
        return Err(RepairError::ArityMismatch {
            expected: c.n(),
            got: xstar.n(),
        });
    }
    Ok(())
}

fn flip(
    c: &AigCircuit,
    xstar: Assignment,
    expect: bool,
) -> Result<(AigCircuit, RepairReport), RepairError> {
    check_arity(c, xstar)?;
    let n = c.n();
    let before = c.evaluate()?;
    let row = xstar.row();
    if before.bit(row) != expect {
        return Err(RepairError::Precondition {
            row,
            value: before.bit(row),
        });
    }
    let mut out = c.clone();
    let f = out.output();
    let eq = out.splice(&build_detector(n, xstar)?)?;
    let root: Literal = if expect {
        // f & !eq
        out.add_and(f, !eq)?
    } else {
        // f | eq == !(!f & !eq)
        !out.add_and(!f, !eq)?
    };
    out.set_output(root)?;
    let report = RepairReport {
        input_size: c.size(),
        output_size: out.size(),
        flips: 1,
        bound: c.size() + n,
        target_tt: before.flip_bit(row)?,
    };
    report.check(&out)?;
    Ok((out, report))
}

/// Turns row `xstar` from 0 into 1.
pub fn repair_set(
    c: &AigCircuit,
    xstar: Assignment,
) -> Result<(AigCircuit, RepairReport), RepairError> {
    flip(c, xstar, false)
}

/// Turns row `xstar` from 1 into 0.
pub fn repair_clear(
    c: &AigCircuit,
    xstar: Assignment,
) -> Result<(AigCircuit, RepairReport), RepairError> {
    flip(c, xstar, true)
}

/// Flips every row where `c` and `target` differ, in ascending row order,
/// with a fresh detector per flip.
pub fn repair_multi(
    c: &AigCircuit,
    target: TruthTable,
) -> Result<(AigCircuit, RepairReport), RepairError> {
    let n = c.n();
    if target.n() != n {
        return Err(RepairError::ArityMismatch {
            expected: n,
            got: target.n(),
        });
    }
    let rows = c.evaluate()?.diff_rows(&target)?;
    let mut out = c.clone();
    for &row in &rows {
        let xstar = Assignment::new(n, row as u64)?;
        let (next, _) = if out.evaluate()?.bit(row) {
            repair_clear(&out, xstar)?
        } else {
            repair_set(&out, xstar)?
        };
        out = next;
    }
    let report = RepairReport {
        input_size: c.size(),
        output_size: out.size(),
        flips: rows.len(),
        bound: c.size() + n * rows.len(),
        target_tt: target,
    };
    report.check(&out)?;
    Ok((out, report))
}
