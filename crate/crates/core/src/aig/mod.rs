//! And-inverter graphs with free complemented edges.
//!
//! Node 0 is the constant false, nodes `1..=n` are the inputs (`x_0` is node
//! 1) and gate `g` of the gate list is node `n + 1 + g`. Inverters live on the
//! edges, so [`AigCircuit::size`] counts AND gates only.

mod aiger;

use std::fmt;
use std::ops::Not;

use thiserror::Error;

use crate::npn::NpnTransform;
use crate::truthtable::{row_mask, var_mask, Assignment, TruthTable, TruthTableError, MAX_VARS};

pub use aiger::AigerError;

/// A possibly complemented reference to a node, encoded as `2 * node + c`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(u32);

impl Literal {
    pub const FALSE: Literal = Literal(0);
    pub const TRUE: Literal = Literal(1);

    #[inline]
    pub fn new(node: usize, complement: bool) -> Self {
        Literal(((node as u32) << 1) | complement as u32)
    }

    #[inline]
    pub fn from_code(code: u32) -> Self {
        Literal(code)
    }

    #[inline]
    pub fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn node(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn regular(self) -> Self {
        Literal(self.0 & !1)
    }

    #[inline]
    pub fn negate_if(self, c: bool) -> Self {
        Literal(self.0 ^ c as u32)
    }
}

impl Not for Literal {
    type Output = Literal;

    #[inline]
    fn not(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_complemented() {
            write!(f, "!n{}", self.node())
        } else {
            write!(f, "n{}", self.node())
        }
    }
}

/// A two-input AND. [`AndGate::new`] sorts the fanins so that
/// `fanin0 <= fanin1`, which makes structural equality meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AndGate {
    fanin0: Literal,
    fanin1: Literal,
}

impl AndGate {
    pub fn new(a: Literal, b: Literal) -> Self {
        if a <= b {
            AndGate { fanin0: a, fanin1: b }
        } else {
            AndGate { fanin0: b, fanin1: a }
        }
    }

    /// Keeps the given fanin order, for building deliberately broken circuits.
    pub fn raw(fanin0: Literal, fanin1: Literal) -> Self {
        AndGate { fanin0, fanin1 }
    }

    #[inline]
    pub fn fanin0(&self) -> Literal {
        self.fanin0
    }

    #[inline]
    pub fn fanin1(&self) -> Literal {
        self.fanin1
    }
}

/// A structural problem reported by [`AigCircuit::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooManyInputs(usize),
    /// Fanin of gate `gate` does not refer to a strictly earlier node.
    FaninNotTopological { gate: usize, fanin: Literal },
    FaninsNotNormalized { gate: usize },
    OutputOutOfRange(Literal),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooManyInputs(n) => write!(f, "too many inputs: {n}"),
            Violation::FaninNotTopological { gate, fanin } => {
                write!(f, "fanin not topological: gate {gate} reads {fanin:?}")
            }
            Violation::FaninsNotNormalized { gate } => {
                write!(f, "fanins of gate {gate} not normalized")
            }
            Violation::OutputOutOfRange(lit) => write!(f, "output {lit:?} out of range"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AigError {
    #[error("invalid circuit: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("literal {0:?} refers to a node that does not exist yet")]
    UnknownNode(Literal),
    #[error("circuit has {0} inputs; simulation needs 1..=6")]
    BadArity(usize),
    #[error("circuit has {circuit} inputs but {other} were expected")]
    ArityMismatch { circuit: usize, other: usize },
    #[error(transparent)]
    Table(#[from] TruthTableError),
}

/// A single-output AIG. Gates are stored in topological order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AigCircuit {
    n: usize,
    gates: Vec<AndGate>,
    output: Literal,
}

impl AigCircuit {
    /// An empty circuit over `n` inputs whose output is constant false.
    pub fn new(n: usize) -> Self {
        AigCircuit {
            n,
            gates: Vec::new(),
            output: Literal::FALSE,
        }
    }

    /// Assembles a circuit without checking it; see [`AigCircuit::validate`].
    pub fn from_parts(n: usize, gates: Vec<AndGate>, output: Literal) -> Self {
        AigCircuit { n, gates, output }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn gates(&self) -> &[AndGate] {
        &self.gates
    }

    #[inline]
    pub fn output(&self) -> Literal {
        self.output
    }

    /// Number of AND gates; inverters are free.
    #[inline]
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Constant node, inputs and gates.
    #[inline]
    pub fn num_nodes(&self) -> usize {
        1 + self.n + self.gates.len()
    }

    /// Literal of input `x_var` (node `var + 1`).
    #[inline]
    pub fn input(&self, var: usize) -> Literal {
        Literal::new(var + 1, false)
    }

    #[inline]
    pub fn gate_node(&self, gate: usize) -> usize {
        self.n + 1 + gate
    }

    pub fn set_output(&mut self, output: Literal) -> Result<(), AigError> {
        if output.node() >= self.num_nodes() {
            return Err(AigError::UnknownNode(output));
        }
        self.output = output;
        Ok(())
    }

    /// Appends `AND(a, b)` and returns its positive literal.
    pub fn add_and(&mut self, a: Literal, b: Literal) -> Result<Literal, AigError> {
        for lit in [a, b] {
            if lit.node() >= self.num_nodes() {
                return Err(AigError::UnknownNode(lit));
            }
        }
        let node = self.num_nodes();
        self.gates.push(AndGate::new(a, b));
        Ok(Literal::new(node, false))
    }

    /// Copies the gates of `fragment` (same inputs) after the existing gates
    /// and returns the fragment's output literal in this circuit.
    pub fn splice(&mut self, fragment: &AigCircuit) -> Result<Literal, AigError> {
        if fragment.n != self.n {
            return Err(AigError::ArityMismatch {
                circuit: fragment.n,
                other: self.n,
            });
        }
        let offset = self.gates.len();
        let remap = |lit: Literal| -> Literal {
            if lit.node() <= fragment.n {
                lit
            } else {
                Literal::new(lit.node() + offset, lit.is_complemented())
            }
        };
        for gate in &fragment.gates {
            let g = AndGate::new(remap(gate.fanin0), remap(gate.fanin1));
            self.gates.push(g);
        }
        Ok(remap(fragment.output))
    }

    /// Lists every broken invariant; an empty list means the circuit is valid.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.n > MAX_VARS {
            out.push(Violation::TooManyInputs(self.n));
        }
        for (i, g) in self.gates.iter().enumerate() {
            let node = self.gate_node(i);
            for fanin in [g.fanin0, g.fanin1] {
                if fanin.node() >= node {
                    out.push(Violation::FaninNotTopological { gate: i, fanin });
                }
            }
            if g.fanin0 > g.fanin1 {
                out.push(Violation::FaninsNotNormalized { gate: i });
            }
        }
        if self.output.node() >= self.num_nodes() {
            out.push(Violation::OutputOutOfRange(self.output));
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Bit-parallel simulation of every node over all `2^n` rows.
    pub fn simulate_nodes(&self) -> Result<Vec<u64>, AigError> {
        self.validate().map_err(AigError::Invalid)?;
        if self.n == 0 || self.n > MAX_VARS {
            return Err(AigError::BadArity(self.n));
        }
        let mask = row_mask(self.n);
        let mut values = Vec::with_capacity(self.num_nodes());
        values.push(0u64);
        for v in 0..self.n {
            values.push(var_mask(v, self.n));
        }
        let lit = |values: &[u64], l: Literal| {
            let v = values[l.node()];
            if l.is_complemented() {
                !v & mask
            } else {
                v
            }
        };
        for g in &self.gates {
            let v = lit(&values, g.fanin0) & lit(&values, g.fanin1);
            values.push(v);
        }
        Ok(values)
    }

    /// Truth table of the output literal.
    pub fn evaluate(&self) -> Result<TruthTable, AigError> {
        let values = self.simulate_nodes()?;
        let v = values[self.output.node()];
        let bits = if self.output.is_complemented() { !v } else { v };
        Ok(TruthTable::from_masked(self.n, bits)?)
    }

    /// Evaluates the output on one assignment by walking the gate list.
    pub fn eval_assignment(&self, a: Assignment) -> Result<bool, AigError> {
        self.validate().map_err(AigError::Invalid)?;
        if a.n() != self.n {
            return Err(AigError::ArityMismatch {
                circuit: self.n,
                other: a.n(),
            });
        }
        let mut values = vec![false; self.num_nodes()];
        for v in 0..self.n {
            values[v + 1] = a.get(v);
        }
        let read = |values: &[bool], l: Literal| values[l.node()] ^ l.is_complemented();
        for (i, g) in self.gates.iter().enumerate() {
            values[self.gate_node(i)] = read(&values, g.fanin0) && read(&values, g.fanin1);
        }
        Ok(read(&values, self.output))
    }

    /// The same circuit with its output complemented.
    pub fn complemented(&self) -> Self {
        AigCircuit {
            n: self.n,
            gates: self.gates.clone(),
            output: !self.output,
        }
    }

    /// A circuit for `t.apply(f)` where `f` is the function of `self`.
    pub fn transformed(&self, t: &NpnTransform) -> Result<Self, AigError> {
        if t.n() != self.n {
            return Err(AigError::ArityMismatch {
                circuit: self.n,
                other: t.n(),
            });
        }
        // Original x_i reads new input perm[i], complemented by neg_i.
        let map = |lit: Literal| -> Literal {
            let node = lit.node();
            if node == 0 || node > self.n {
                lit
            } else {
                let (pos, neg) = t.map_input(node - 1);
                Literal::new(pos + 1, lit.is_complemented() ^ neg)
            }
        };
        let gates = self
            .gates
            .iter()
            .map(|g| AndGate::new(map(g.fanin0), map(g.fanin1)))
            .collect();
        Ok(AigCircuit {
            n: self.n,
            gates,
            output: map(self.output).negate_if(t.output_neg()),
        })
    }

    /// Propagates constants, merges structurally identical gates and drops
    /// gates the output does not depend on. Never increases the size.
    pub fn cleanup(&self) -> Self {
        use std::collections::HashMap;

        let mut out = AigCircuit::new(self.n);
        let mut map: Vec<Literal> = Vec::with_capacity(self.num_nodes());
        for node in 0..=self.n {
            map.push(Literal::new(node, false));
        }
        let mut strash: HashMap<AndGate, Literal> = HashMap::new();
        let translate = |map: &[Literal], l: Literal| map[l.node()].negate_if(l.is_complemented());
        for g in &self.gates {
            let a = translate(&map, g.fanin0);
            let b = translate(&map, g.fanin1);
            let lit = if a == Literal::FALSE || b == Literal::FALSE || a == !b {
                Literal::FALSE
            } else if a == Literal::TRUE || a == b {
                b
            } else if b == Literal::TRUE {
                a
            } else {
                let key = AndGate::new(a, b);
                match strash.get(&key) {
                    Some(&l) => l,
                    None => {
                        let node = out.num_nodes();
                        out.gates.push(key);
                        let l = Literal::new(node, false);
                        strash.insert(key, l);
                        l
                    }
                }
            };
            map.push(lit);
        }
        out.output = translate(&map, self.output);
        out.without_dangling()
    }

    /// Removes gates outside the transitive fanin of the output.
    pub fn without_dangling(&self) -> Self {
        let mut live = vec![false; self.num_nodes()];
        live[self.output.node()] = true;
        for i in (0..self.gates.len()).rev() {
            if live[self.gate_node(i)] {
                let g = self.gates[i];
                live[g.fanin0.node()] = true;
                live[g.fanin1.node()] = true;
            }
        }
        let mut map: Vec<Literal> = (0..=self.n).map(|v| Literal::new(v, false)).collect();
        let mut gates = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            if live[self.gate_node(i)] {
                let t = |l: Literal| map[l.node()].negate_if(l.is_complemented());
                let gate = AndGate::new(t(g.fanin0), t(g.fanin1));
                gates.push(gate);
                map.push(Literal::new(self.n + gates.len(), false));
            } else {
                map.push(Literal::FALSE);
            }
        }
        let output = map[self.output.node()].negate_if(self.output.is_complemented());
        AigCircuit {
            n: self.n,
            gates,
            output,
        }
    }

    /// AIGER ASCII text, one item per line.
    pub fn to_aiger(&self) -> String {
        aiger::write(self, "\n")
    }

    /// AIGER ASCII text with `;` in place of line breaks.
    pub fn to_aiger_compact(&self) -> String {
        aiger::write(self, ";")
    }

    /// Parses ASCII AIGER with one output and no latches. Lines may be
    /// separated by newlines or by `;`.
    pub fn from_aiger(text: &str) -> Result<Self, AigerError> {
        aiger::parse(text)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::npn::all_transforms;
    use proptest::prelude::*;

    fn and2() -> AigCircuit {
        let mut c = AigCircuit::new(2);
        let g = c.add_and(c.input(0), c.input(1)).unwrap();
        c.set_output(g).unwrap();
        c
    }

    fn minterm15() -> AigCircuit {
        let mut c = AigCircuit::new(4);
        let g1 = c.add_and(c.input(0), c.input(1)).unwrap();
        let g2 = c.add_and(c.input(2), c.input(3)).unwrap();
        let g3 = c.add_and(g1, g2).unwrap();
        c.set_output(g3).unwrap();
        c
    }

    #[test]
    fn validate_examples() {
        assert_eq!(AigCircuit::new(4).validate(), Ok(()));
        assert_eq!(and2().validate(), Ok(()));
        let bad = AigCircuit::from_parts(
            2,
            vec![AndGate::new(Literal::new(1, false), Literal::new(4, false))],
            Literal::new(3, false),
        );
        let v = bad.validate().unwrap_err();
        assert!(v[0].to_string().contains("fanin not topological"));
        let unsorted = AigCircuit::from_parts(
            2,
            vec![AndGate::raw(Literal::new(2, false), Literal::new(1, false))],
            Literal::new(3, false),
        );
        assert_eq!(
            unsorted.validate().unwrap_err(),
            vec![Violation::FaninsNotNormalized { gate: 0 }]
        );
        let dangling_out = AigCircuit::from_parts(2, vec![], Literal::new(5, true));
        assert!(matches!(
            dangling_out.evaluate(),
            Err(AigError::Invalid(_))
        ));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(and2().evaluate().unwrap().bits(), 0x8);
        let mut one = AigCircuit::new(2);
        one.set_output(Literal::TRUE).unwrap();
        assert_eq!(one.evaluate().unwrap().bits(), 0xf);
        assert_eq!(minterm15().evaluate().unwrap().bits(), 0x8000);
        assert_eq!(minterm15().size(), 3);
        assert_eq!(AigCircuit::new(4).size(), 0);
        assert!(matches!(AigCircuit::new(0).evaluate(), Err(AigError::BadArity(0))));
    }

    #[test]
    fn add_and_rejects_future_nodes() {
        let mut c = AigCircuit::new(2);
        assert!(matches!(
            c.add_and(Literal::new(1, false), Literal::new(3, false)),
            Err(AigError::UnknownNode(_))
        ));
    }

    #[test]
    fn cleanup_folds_constants_and_duplicates() {
        let mut c = AigCircuit::new(2);
        let a = c.add_and(c.input(0), Literal::TRUE).unwrap();
        let b = c.add_and(c.input(0), c.input(1)).unwrap();
        let d = c.add_and(c.input(1), c.input(0)).unwrap();
        let e = c.add_and(b, d).unwrap();
        let f = c.add_and(e, d).unwrap();
        let g = c.add_and(a, Literal::TRUE).unwrap();
        let h = c.add_and(g, !g).unwrap();
        let out = c.add_and(f, !h).unwrap();
        c.set_output(!out).unwrap();
        let clean = c.cleanup();
        assert_eq!(clean.size(), 1);
        assert_eq!(clean.evaluate().unwrap(), c.evaluate().unwrap());
    }

    pub(crate) fn random_circuit() -> impl Strategy<Value = AigCircuit> {
        (1usize..=4, prop::collection::vec((any::<u32>(), any::<u32>()), 0..10), any::<u32>())
            .prop_map(|(n, picks, out)| {
                let mut c = AigCircuit::new(n);
                for (a, b) in picks {
                    let nodes = c.num_nodes() as u32;
                    let la = Literal::from_code(a % (2 * nodes));
                    let lb = Literal::from_code(b % (2 * nodes));
                    c.add_and(la, lb).unwrap();
                }
                let nodes = c.num_nodes() as u32;
                c.set_output(Literal::from_code(out % (2 * nodes))).unwrap();
                c
            })
    }

    proptest! {
        #[test]
        fn simulation_matches_row_evaluation(c in random_circuit()) {
            let tt = c.evaluate().unwrap();
            for v in 0..(1u64 << c.n()) {
                let a = Assignment::new(c.n(), v).unwrap();
                prop_assert_eq!(c.eval_assignment(a).unwrap(), tt.bit(v as usize));
            }
        }

        #[test]
        fn complementing_output_complements_table(c in random_circuit()) {
            prop_assert_eq!(c.complemented().evaluate().unwrap(), c.evaluate().unwrap().complement());
        }

        #[test]
        fn transformed_circuit_computes_transformed_table(c in random_circuit(), pick in any::<usize>()) {
            let ts = all_transforms(c.n());
            let t = ts[pick % ts.len()];
            let image = c.transformed(&t).unwrap();
            prop_assert_eq!(image.size(), c.size());
            prop_assert_eq!(image.evaluate().unwrap(), t.apply(c.evaluate().unwrap()).unwrap());
        }

        #[test]
        fn cleanup_preserves_function(c in random_circuit()) {
            let clean = c.cleanup();
            prop_assert!(clean.size() <= c.size());
            prop_assert_eq!(clean.evaluate().unwrap(), c.evaluate().unwrap());
            prop_assert_eq!(c.without_dangling().evaluate().unwrap(), c.evaluate().unwrap());
        }
    }
}
