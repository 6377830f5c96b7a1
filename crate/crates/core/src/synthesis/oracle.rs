//! Breadth-first reference oracle for `n <= 3`.
//!
//! A partial circuit is abstracted by the set of (complement-normalised)
//! functions its gates compute. Level `k` holds every set reachable with `k`
//! gates; a function's exact size is the first level whose sets contain it.
//! Sharing is handled by construction because a new gate may read any
//! function already in the set. No ordering rule, no pruning on dangling gates
//! and no symmetry reduction are used, so this is independent of the
//! depth-first search.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{trivial_circuit, SynthesisError};
use crate::aig::{AigCircuit, Literal};
use crate::truthtable::{row_mask, var_mask, TruthTable};

/// Exact size of one function together with a witness of that size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleEntry {
    pub size: usize,
    pub witness: AigCircuit,
}

/// Exact AIG size of every function of `n <= 3` variables.
pub fn brute_oracle(n: usize) -> Result<BTreeMap<TruthTable, OracleEntry>, SynthesisError> {
    if !(1..=3).contains(&n) {
        return Err(SynthesisError::OracleTooLarge(n));
    }
    let mask = row_mask(n);
    let total = 1usize << (1 << n);
    let norm = |v: u64| v.min(!v & mask);

    let mut trivial = vec![0u64, mask];
    for i in 0..n {
        trivial.push(var_mask(i, n));
        trivial.push(!var_mask(i, n) & mask);
    }

    // Discovery record per function: level and the set it was found in.
    let mut found: HashMap<u64, (usize, u128, u64)> = HashMap::new();
    for &t in &trivial {
        found.insert(t, (0, 0, t));
    }

    let mut level: HashSet<u128> = HashSet::from([0u128]);
    let mut k = 0;
    while found.len() < total {
        k += 1;
        let mut next: HashSet<u128> = HashSet::new();
        'states: for &set in &level {
            let mut lits = trivial.clone();
            for g in members(set) {
                lits.push(g);
                lits.push(!g & mask);
            }
            for (i, &a) in lits.iter().enumerate() {
                for &b in &lits[i..] {
                    let v = a & b;
                    let nv = norm(v);
                    if found.get(&nv).is_some_and(|e| e.0 == 0) || set & bit(nv) != 0 {
                        continue;
                    }
                    let grown = set | bit(nv);
                    if !next.insert(grown) {
                        continue;
                    }
                    for f in [nv, !nv & mask] {
                        found.entry(f).or_insert((k, grown, nv));
                    }
                    if found.len() == total {
                        break 'states;
                    }
                }
            }
        }
        level = next;
    }

    let mut out = BTreeMap::new();
    for (f, (size, set, gate)) in found {
        let tt = TruthTable::new(n, f).expect("in range");
        let witness = if size == 0 {
            trivial_circuit(tt).expect("trivial function")
        } else {
            rebuild(n, set, gate, f)
        };
        debug_assert_eq!(witness.size(), size);
        out.insert(tt, OracleEntry { size, witness });
    }
    Ok(out)
}

#[inline]
fn bit(nv: u64) -> u128 {
    1u128 << nv
}

fn members(set: u128) -> impl Iterator<Item = u64> {
    (0..128u64).filter(move |&i| set & (1u128 << i) != 0)
}

/// Orders the gate functions of `set` so each is an AND of earlier literals,
/// builds the circuit and points the output at `target`.
fn rebuild(n: usize, set: u128, gate: u64, target: u64) -> AigCircuit {
    let mask = row_mask(n);
    let mut circuit = AigCircuit::new(n);
    // (value, literal) of every available literal.
    let mut lits: Vec<(u64, Literal)> = vec![(0, Literal::FALSE), (mask, Literal::TRUE)];
    for i in 0..n {
        let v = var_mask(i, n);
        lits.push((v, circuit.input(i)));
        lits.push((!v & mask, !circuit.input(i)));
    }
    let mut pending: Vec<u64> = members(set).collect();
    let mut node_of_gate = None;
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&g| {
            for (i, &(va, la)) in lits.iter().enumerate() {
                for &(vb, lb) in &lits[i..] {
                    let v = va & vb;
                    if v.min(!v & mask) == g {
                        let lit = circuit.add_and(la, lb).expect("earlier literals");
                        lits.push((v, lit));
                        lits.push((!v & mask, !lit));
                        if g == gate {
                            node_of_gate = Some((v, lit));
                        }
                        return false;
                    }
                }
            }
            true
        });
        assert!(pending.len() < before, "unreachable gate set");
    }
    let (v, lit) = node_of_gate.expect("gate in set");
    circuit
        .set_output(lit.negate_if(v != target))
        .expect("existing node");
    circuit.without_dangling()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n1_all_free() {
        let o = brute_oracle(1).unwrap();
        assert_eq!(o.len(), 4);
        assert!(o.values().all(|e| e.size == 0));
    }

    #[test]
    fn n2_only_parities_need_three() {
        let o = brute_oracle(2).unwrap();
        assert_eq!(o.len(), 16);
        let threes: Vec<u64> = o
            .iter()
            .filter(|(_, e)| e.size == 3)
            .map(|(t, _)| t.bits())
            .collect();
        assert_eq!(threes, vec![0x6, 0x9]);
        assert!(o.values().all(|e| e.size <= 3));
        for (t, e) in &o {
            assert_eq!(e.witness.evaluate().unwrap(), *t);
            assert_eq!(e.witness.size(), e.size);
        }
    }

    #[test]
    fn rejects_large_n() {
        assert!(matches!(
            brute_oracle(4),
            Err(SynthesisError::OracleTooLarge(4))
        ));
    }
}
