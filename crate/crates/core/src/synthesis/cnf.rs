//! DIMACS export of "is there a `k`-gate AIG computing `tt`" and import of
//! solver models.
//!
//! The encoding describes the same space as [`super::exists_circuit`] under
//! [`super::Pruning::structural`]: gate `i` (node `n + 1 + i`) reads two
//! distinct non-constant earlier nodes in one of four polarity combinations,
//! the last gate is the root, and every other gate feeds some later gate.
//!
//! Variable layout, gate by gate: first the selection variables, one per
//! `(j, l, polarity)` with `1 <= j < l <= n + i` in lexicographic order and
//! polarities `00, 01, 10, 11` (bit set = complemented); then one value
//! variable per truth-table row. The last variable is the output polarity.
//! The same layout is repeated in the comment header of every exported file.

use std::fmt::Write as _;

use thiserror::Error;

use crate::aig::{AigCircuit, AndGate, Literal};
use crate::truthtable::{var_mask, TruthTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("k must be at least 1")]
    ZeroGates,
    #[error("malformed model text: {0}")]
    Malformed(String),
    #[error("model inconsistent with layout: {0}")]
    Inconsistent(String),
}

/// Variable numbering for `k` gates over `n` inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    n: usize,
    k: usize,
    /// First selection variable of each gate, plus its pair list.
    gate_sel_start: Vec<i32>,
    gate_pairs: Vec<Vec<(usize, usize)>>,
    gate_val_start: Vec<i32>,
    output_var: i32,
}

impl Layout {
    pub fn new(n: usize, k: usize) -> Result<Self, CnfError> {
        if k == 0 {
            return Err(CnfError::ZeroGates);
        }
        let rows = 1i32 << n;
        let mut next = 1i32;
        let mut gate_sel_start = Vec::with_capacity(k);
        let mut gate_pairs = Vec::with_capacity(k);
        let mut gate_val_start = Vec::with_capacity(k);
        for i in 0..k {
            let top = n + i;
            let pairs: Vec<(usize, usize)> = (1..=top)
                .flat_map(|j| ((j + 1)..=top).map(move |l| (j, l)))
                .collect();
            gate_sel_start.push(next);
            next += 4 * pairs.len() as i32;
            gate_pairs.push(pairs);
            gate_val_start.push(next);
            next += rows;
        }
        Ok(Layout {
            n,
            k,
            gate_sel_start,
            gate_pairs,
            gate_val_start,
            output_var: next,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.output_var as usize
    }

    /// Selection variable for gate `gate`, pair index `p`, polarity `pol`.
    pub fn sel(&self, gate: usize, p: usize, pol: usize) -> i32 {
        self.gate_sel_start[gate] + 4 * p as i32 + pol as i32
    }

    pub fn val(&self, gate: usize, row: usize) -> i32 {
        self.gate_val_start[gate] + row as i32
    }

    pub fn output_var(&self) -> i32 {
        self.output_var
    }

    fn describe(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.k {
            let sel_end = self.gate_val_start[i] - 1;
            let val_end = self.gate_val_start[i] + (1 << self.n) - 1;
            out.push(format!(
                "gate {} node {}: selection vars {}..{} over pairs 1<=j<l<={} x polarity 00,01,10,11; value vars {}..{} rows 0..{}",
                i,
                self.n + 1 + i,
                self.gate_sel_start[i],
                sel_end,
                self.n + i,
                self.gate_val_start[i],
                val_end,
                (1 << self.n) - 1
            ));
        }
        out.push(format!("output polarity var {} (true = root complemented)", self.output_var));
        out
    }
}

/// A CNF formula with its comment header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<i32>>,
    pub comments: Vec<String>,
}

impl Cnf {
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        for c in &self.comments {
            let _ = writeln!(s, "c {c}");
        }
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(s, "{lit} ");
            }
            s.push_str("0\n");
        }
        s
    }

    /// Checks a full assignment (`assignment[v]` for variable `v`, index 0 unused).
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|&l| assignment[l.unsigned_abs() as usize] == (l > 0))
        })
    }
}

/// Value of a fanin at one row: a constant for inputs, a literal for gates.
enum Term {
    Const(bool),
    Var(i32),
}

pub fn encode_cnf(tt: TruthTable, k: usize) -> Result<Cnf, CnfError> {
    let n = tt.n();
    let layout = Layout::new(n, k)?;
    let rows = 1usize << n;
    let mut clauses: Vec<Vec<i32>> = Vec::new();

    let term = |node: usize, complemented: bool, row: usize| -> Term {
        if node <= n {
            let v = (var_mask(node - 1, n) >> row) & 1 == 1;
            Term::Const(v ^ complemented)
        } else {
            let x = layout.val(node - n - 1, row);
            Term::Var(if complemented { -x } else { x })
        }
    };

    for i in 0..k {
        let pairs = &layout.gate_pairs[i];
        let sels: Vec<i32> = (0..pairs.len())
            .flat_map(|p| (0..4).map(move |pol| (p, pol)))
            .map(|(p, pol)| layout.sel(i, p, pol))
            .collect();
        clauses.push(sels.clone());
        for a in 0..sels.len() {
            for b in (a + 1)..sels.len() {
                clauses.push(vec![-sels[a], -sels[b]]);
            }
        }
        for (p, &(j, l)) in pairs.iter().enumerate() {
            for pol in 0..4 {
                let s = layout.sel(i, p, pol);
                let (cj, cl) = (pol & 2 != 0, pol & 1 != 0);
                for row in 0..rows {
                    let x = layout.val(i, row);
                    let a = term(j, cj, row);
                    let b = term(l, cl, row);
                    // x -> a, x -> b, (a & b) -> x, each guarded by s.
                    for t in [&a, &b] {
                        match t {
                            Term::Const(true) => {}
                            Term::Const(false) => clauses.push(vec![-s, -x]),
                            Term::Var(v) => clauses.push(vec![-s, -x, *v]),
                        }
                    }
                    let mut c = vec![-s, x];
                    let mut satisfied = false;
                    for t in [&a, &b] {
                        match t {
                            Term::Const(true) => {}
                            Term::Const(false) => satisfied = true,
                            Term::Var(v) => c.push(-*v),
                        }
                    }
                    if !satisfied {
                        clauses.push(c);
                    }
                }
            }
        }
    }

    // Every non-root gate feeds a later gate.
    for g in 0..k.saturating_sub(1) {
        let node = n + 1 + g;
        let mut users = Vec::new();
        for i in (g + 1)..k {
            for (p, &(j, l)) in layout.gate_pairs[i].iter().enumerate() {
                if j == node || l == node {
                    users.extend((0..4).map(|pol| layout.sel(i, p, pol)));
                }
            }
        }
        clauses.push(users);
    }

    // Root value xor output polarity equals the target.
    let o = layout.output_var();
    for row in 0..rows {
        let x = layout.val(k - 1, row);
        if tt.bit(row) {
            clauses.push(vec![x, o]);
            clauses.push(vec![-x, -o]);
        } else {
            clauses.push(vec![-x, o]);
            clauses.push(vec![x, -o]);
        }
    }

    let mut comments = vec![
        "aigsense exact AIG synthesis".to_string(),
        format!("target {} n {} k {}", tt.to_hex(), n, k),
    ];
    comments.extend(layout.describe());
    Ok(Cnf {
        num_vars: layout.num_vars(),
        clauses,
        comments,
    })
}

/// Result of reading solver output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelOutcome {
    Unsat,
    Circuit(AigCircuit),
}

/// Parses solver output (`s`/`v` lines or bare signed integers ending in 0;
/// a `UNSAT` or `UNSATISFIABLE` token means no model) and rebuilds the circuit.
pub fn decode_model(text: &str, k: usize, n: usize) -> Result<ModelOutcome, CnfError> {
    let layout = Layout::new(n, k)?;
    let mut truth = vec![false; layout.num_vars() + 1];
    let mut seen_any = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let body = line
            .strip_prefix("s ")
            .or_else(|| line.strip_prefix("v "))
            .unwrap_or(line);
        for tok in body.split_whitespace() {
            match tok {
                "UNSAT" | "UNSATISFIABLE" => return Ok(ModelOutcome::Unsat),
                "SAT" | "SATISFIABLE" => continue,
                _ => {}
            }
            let lit: i64 = tok
                .parse()
                .map_err(|_| CnfError::Malformed(format!("unexpected token {tok:?}")))?;
            if lit == 0 {
                continue;
            }
            let var = lit.unsigned_abs() as usize;
            if var > layout.num_vars() {
                return Err(CnfError::Inconsistent(format!("variable {var} outside layout")));
            }
            truth[var] = lit > 0;
            seen_any = true;
        }
    }
    if !seen_any {
        return Err(CnfError::Malformed("no assignment found".into()));
    }

    let mut gates = Vec::with_capacity(k);
    for i in 0..k {
        let mut chosen = None;
        for (p, &(j, l)) in layout.gate_pairs[i].iter().enumerate() {
            for pol in 0..4 {
                if truth[layout.sel(i, p, pol) as usize] {
                    if chosen.is_some() {
                        return Err(CnfError::Inconsistent(format!(
                            "gate {i} selects more than one fanin pair"
                        )));
                    }
                    chosen = Some(AndGate::new(
                        Literal::new(j, pol & 2 != 0),
                        Literal::new(l, pol & 1 != 0),
                    ));
                }
            }
        }
        gates.push(chosen.ok_or_else(|| {
            CnfError::Inconsistent(format!("gate {i} selects no fanin pair"))
        })?);
    }
    let root = Literal::new(n + k, truth[layout.output_var() as usize]);
    Ok(ModelOutcome::Circuit(AigCircuit::from_parts(n, gates, root)))
}
