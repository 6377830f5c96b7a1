//! Exact sizes of every NPN class of `n <= 4` inputs in one enumeration.
//!
//! A partial circuit is summarised by the set of (complement-normalised)
//! functions of its gates plus which gates are still unreferenced. Two such
//! states that differ by an input permutation/negation have the same future
//! up to that transform, and NPN classes are closed under it, so the first
//! `prefix` levels are explored breadth-first with one canonical state per
//! orbit. Below that each state is extended depth-first to `depth` gates with
//! the ordering rule of the per-table search (the first gate after the
//! prefix is unconstrained, since any downward-closed prefix can be completed
//! in greedy order).
//!
//! Every gate placed at depth `d` proves `opt <= d` for its class. Minimum
//! circuits survive all the pruning rules, so after the whole space up to
//! `depth` is enumerated the smallest recorded depth is the exact size, and
//! classes never reached need more than `depth` gates.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{trivial_circuit, OptResult, OptStatus, SynthesisConfig, SynthesisError};
use crate::aig::{AigCircuit, Literal};
use crate::npn::{all_transforms, ClassIndex, NpnClass, NpnTransform};
use crate::truthtable::{row_mask, var_mask, TruthTable};

const CHECK_EVERY: u64 = 1 << 14;

/// Backend tag of results proven by the sweep.
pub const SWEEP_BACKEND: &str = "enum-sweep";

/// Outcome of [`sweep_classes`].
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub n: usize,
    pub depth: usize,
    pub prefix: usize,
    /// Canonical states kept at each breadth-first level.
    pub states_per_level: Vec<usize>,
    pub classes: Vec<NpnClass>,
    /// Minimum-size witness for each class representative, if any circuit
    /// with at most `depth` gates exists.
    pub witnesses: Vec<Option<AigCircuit>>,
    pub elapsed: Duration,
}

impl SweepReport {
    pub fn size_of(&self, class: usize) -> Option<usize> {
        self.witnesses[class].as_ref().map(AigCircuit::size)
    }

    /// Exact results for every class settled by the sweep.
    pub fn exact_results(&self) -> Vec<OptResult> {
        self.classes
            .iter()
            .zip(&self.witnesses)
            .filter_map(|(c, w)| {
                let w = w.as_ref()?;
                Some(OptResult {
                    tt: c.canon,
                    size: w.size(),
                    status: OptStatus::Exact,
                    witness: w.clone(),
                    exhausted_below: w.size().checked_sub(1),
                    backend: SWEEP_BACKEND.to_string(),
                    elapsed: self.elapsed,
                })
            })
            .collect()
    }

    /// Classes that need more than `depth` gates.
    pub fn unresolved(&self) -> Vec<NpnClass> {
        self.classes
            .iter()
            .zip(&self.witnesses)
            .filter(|(_, w)| w.is_none())
            .map(|(c, _)| *c)
            .collect()
    }
}

/// Sweeps all classes of `n` inputs up to `depth` gates with a default
/// breadth-first prefix.
pub fn sweep_classes(
    n: usize,
    depth: usize,
    cfg: &SynthesisConfig,
) -> Result<SweepReport, SynthesisError> {
    sweep_classes_with_prefix(n, depth, depth.min(4), cfg)
}

/// As [`sweep_classes`] with an explicit number of breadth-first levels.
/// The result does not depend on `prefix`; only the running time does.
pub fn sweep_classes_with_prefix(
    n: usize,
    depth: usize,
    prefix: usize,
    cfg: &SynthesisConfig,
) -> Result<SweepReport, SynthesisError> {
    cfg.validate()?;
    if !(1..=4).contains(&n) {
        return Err(SynthesisError::SweepTooLarge(n));
    }
    let start = Instant::now();
    let deadline = start + cfg.time_budget;
    let index = ClassIndex::build(n).expect("n <= 4");
    let tables = Tables::new(n);
    let prefix = prefix.min(depth);
    let mut best = Best::new(&index);

    // Breadth-first part.
    let mut level: Vec<Vec<u32>> = vec![Vec::new()];
    let mut states_per_level = vec![1];
    for l in 0..prefix {
        let mut next: HashSet<Vec<u32>> = HashSet::new();
        for (si, state) in level.iter().enumerate() {
            if si % 1024 == 0 && Instant::now() >= deadline {
                return Err(SynthesisError::SweepInterrupted { depth });
            }
            tables.children(state, depth, l, |child, key| {
                best.offer(&index, &tables, key, l + 1, child);
                if l + 1 < depth {
                    next.insert(tables.canonical(child));
                }
            });
        }
        let mut sorted: Vec<Vec<u32>> = next.into_iter().collect();
        sorted.sort_unstable();
        states_per_level.push(sorted.len());
        level = sorted;
    }

    // Depth-first completion of every prefix state.
    if depth > prefix {
        let shared = SharedSweep {
            next: AtomicUsize::new(0),
            timed_out: AtomicBool::new(false),
            results: Mutex::new(Vec::new()),
        };
        let jobs = cfg.jobs.max(1).min(level.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                let shared = &shared;
                let level = &level;
                let tables = &tables;
                let index = &index;
                scope.spawn(move || {
                    let mut w = Walker::new(tables, index, depth, prefix, deadline, cfg.dedup_capacity);
                    loop {
                        let si = shared.next.fetch_add(1, Ordering::Relaxed);
                        if si >= level.len() || shared.timed_out.load(Ordering::Relaxed) {
                            break;
                        }
                        if !w.run(&level[si]) {
                            shared.timed_out.store(true, Ordering::Relaxed);
                            break;
                        }
                    }
                    shared.results.lock().expect("poisoned").push(w.best);
                });
            }
        });
        if shared.timed_out.load(Ordering::Relaxed) {
            return Err(SynthesisError::SweepInterrupted { depth });
        }
        for b in shared.results.into_inner().expect("poisoned") {
            best.merge(b);
        }
    }

    let witnesses = best
        .found
        .into_iter()
        .map(|f| f.map(|(_, _, c)| c))
        .collect();
    Ok(SweepReport {
        n,
        depth,
        prefix,
        states_per_level,
        classes: index.classes().to_vec(),
        witnesses,
        elapsed: start.elapsed(),
    })
}

struct SharedSweep {
    next: AtomicUsize,
    timed_out: AtomicBool,
    results: Mutex<Vec<Best>>,
}

/// Smallest depth seen per class, with a witness for the representative.
/// Ties keep the witness whose gate-function list sorts first, so the
/// outcome does not depend on thread scheduling.
struct Best {
    found: Vec<Option<(usize, Vec<u16>, AigCircuit)>>,
}

impl Best {
    fn new(index: &ClassIndex) -> Self {
        let mut found: Vec<Option<(usize, Vec<u16>, AigCircuit)>> = vec![None; index.classes().len()];
        for (i, c) in index.classes().iter().enumerate() {
            if let Some(w) = trivial_circuit(c.canon) {
                found[i] = Some((0, Vec::new(), w));
            }
        }
        Best { found }
    }

    #[inline]
    fn depth_of(&self, class: usize) -> usize {
        self.found[class].as_ref().map_or(usize::MAX, |f| f.0)
    }

    /// Records that gate function `key` is reached with the gate set of `state`.
    fn offer(&mut self, index: &ClassIndex, tables: &Tables, key: u16, depth: usize, state: &[u32]) {
        let class = index.class_of_bits(key as u64);
        let cur = self.depth_of(class);
        if depth > cur {
            return;
        }
        let keys: Vec<u16> = state.iter().map(|&e| (e >> 1) as u16).collect();
        let mut sorted = keys.clone();
        sorted.sort_unstable();
        if depth == cur {
            if let Some((_, old, _)) = &self.found[class] {
                if *old <= sorted {
                    return;
                }
            }
        }
        let witness = tables.witness(index, &keys, key);
        // A witness can only shrink when dangling gates are trimmed, which
        // the depth bookkeeping would then also have seen.
        debug_assert!(witness.size() <= depth);
        self.found[class] = Some((depth, sorted, witness));
    }

    fn merge(&mut self, other: Best) {
        for (mine, theirs) in self.found.iter_mut().zip(other.found) {
            let Some(t) = theirs else { continue };
            let better = match mine {
                None => true,
                Some(m) => (t.0, &t.1) < (m.0, &m.1),
            };
            if better {
                *mine = Some(t);
            }
        }
    }
}

/// Transform tables over complement-normalised keys.
struct Tables {
    n: usize,
    mask: u16,
    nkeys: usize,
    inputs: Vec<u16>,
    /// `map[t * nkeys + key]`: normalised image of `key` under transform `t`.
    map: Vec<u16>,
    canon_key: Vec<u16>,
    /// Transform index taking `key` onto `canon_key[key]`.
    to_canon: Vec<u16>,
    /// Input transforms fixing a canonical key.
    stab: Vec<Vec<u16>>,
}

impl Tables {
    fn new(n: usize) -> Self {
        let mask = row_mask(n) as u16;
        let nkeys = 1usize << ((1 << n) - 1);
        let transforms: Vec<NpnTransform> = all_transforms(n)
            .iter()
            .filter(|t| !t.output_neg())
            .copied()
            .collect();
        let norm = |v: u16| v.min(!v & mask);
        let mut map = vec![0u16; transforms.len() * nkeys];
        for (ti, t) in transforms.iter().enumerate() {
            for key in 0..nkeys {
                map[ti * nkeys + key] = norm(t.apply_bits(key as u64) as u16);
            }
        }
        let mut canon_key = vec![u16::MAX; nkeys];
        let mut to_canon = vec![0u16; nkeys];
        for key in 0..nkeys {
            for ti in 0..transforms.len() {
                let img = map[ti * nkeys + key];
                if img < canon_key[key] {
                    canon_key[key] = img;
                    to_canon[key] = ti as u16;
                }
            }
        }
        let mut stab = vec![Vec::new(); nkeys];
        for key in 0..nkeys {
            if canon_key[key] as usize == key {
                stab[key] = (0..transforms.len())
                    .filter(|&ti| map[ti * nkeys + key] as usize == key)
                    .map(|ti| ti as u16)
                    .collect();
            }
        }
        let inputs = (0..n).map(|i| var_mask(i, n) as u16).collect();
        Tables {
            n,
            mask,
            nkeys,
            inputs,
            map,
            canon_key,
            to_canon,
            stab,
        }
    }

    #[inline]
    fn norm(&self, v: u16) -> u16 {
        v.min(!v & self.mask)
    }

    #[inline]
    fn image(&self, t: u16, key: u16) -> u16 {
        self.map[t as usize * self.nkeys + key as usize]
    }

    fn is_trivial(&self, key: u16) -> bool {
        key == 0 || self.inputs.iter().any(|&x| self.norm(x) == key)
    }

    /// Smallest image of a state (entries `key << 1 | dangling`, sorted)
    /// under the input transforms.
    fn canonical(&self, state: &[u32]) -> Vec<u32> {
        let lead = state
            .iter()
            .map(|&e| ((self.canon_key[(e >> 1) as usize] as u32) << 1) | (e & 1))
            .min()
            .expect("non-empty state");
        let mut best: Option<Vec<u32>> = None;
        let mut buf = Vec::with_capacity(state.len());
        for &e in state {
            let key = (e >> 1) as u16;
            if ((self.canon_key[key as usize] as u32) << 1) | (e & 1) != lead {
                continue;
            }
            let tg = self.to_canon[key as usize];
            for &s in &self.stab[self.canon_key[key as usize] as usize] {
                buf.clear();
                buf.extend(state.iter().map(|&x| {
                    let k = self.image(s, self.image(tg, (x >> 1) as u16));
                    ((k as u32) << 1) | (x & 1)
                }));
                buf.sort_unstable();
                if best.as_ref().is_none_or(|b| buf < *b) {
                    best = Some(buf.clone());
                }
            }
        }
        best.expect("at least one candidate")
    }

    /// Calls `f(child, key)` for every admissible one-gate extension of
    /// `state` (which has `level` gates), with the child sorted.
    fn children(&self, state: &[u32], depth: usize, level: usize, mut f: impl FnMut(&[u32], u16)) {
        let n = self.n;
        // Node values: inputs, then gates.
        let vals: Vec<u16> = self
            .inputs
            .iter()
            .copied()
            .chain(state.iter().map(|&e| (e >> 1) as u16))
            .collect();
        let dangling_now = state.iter().filter(|&&e| e & 1 == 1).count();
        let budget = depth - (level + 1) + 1;
        let mut child = Vec::with_capacity(state.len() + 1);
        for i in 0..vals.len() {
            for j in (i + 1)..vals.len() {
                for pol in 0..4u16 {
                    let a = if pol & 2 != 0 { !vals[i] & self.mask } else { vals[i] };
                    let b = if pol & 1 != 0 { !vals[j] & self.mask } else { vals[j] };
                    let key = self.norm(a & b);
                    if self.is_trivial(key) || vals[n..].contains(&key) {
                        continue;
                    }
                    let mut dangling = dangling_now + 1;
                    for node in [i, j] {
                        if node >= n && state[node - n] & 1 == 1 {
                            dangling -= 1;
                        }
                    }
                    if dangling > budget {
                        continue;
                    }
                    child.clear();
                    child.extend(state.iter().enumerate().map(|(g, &e)| {
                        if g + n == i || g + n == j {
                            e & !1
                        } else {
                            e
                        }
                    }));
                    child.push(((key as u32) << 1) | 1);
                    child.sort_unstable();
                    f(&child, key);
                }
            }
        }
    }

    /// A circuit over the gate functions `keys` whose output computes a
    /// member of `target`'s class, transformed onto the representative.
    fn witness(&self, index: &ClassIndex, keys: &[u16], target: u16) -> AigCircuit {
        let n = self.n;
        let mask = self.mask;
        let mut c = AigCircuit::new(n);
        let mut lits: Vec<(u16, Literal)> = Vec::new();
        for i in 0..n {
            lits.push((self.inputs[i], c.input(i)));
            lits.push((!self.inputs[i] & mask, !c.input(i)));
        }
        let mut pending: Vec<u16> = keys.to_vec();
        let mut out = None;
        while !pending.is_empty() {
            let before = pending.len();
            pending.retain(|&g| {
                for (x, &(va, la)) in lits.iter().enumerate() {
                    for &(vb, lb) in &lits[x + 1..] {
                        let v = va & vb;
                        if self.norm(v) == g && la.node() != lb.node() {
                            let lit = c.add_and(la, lb).expect("existing literals");
                            lits.push((v, lit));
                            lits.push((!v & mask, !lit));
                            if g == target {
                                out = Some(lit.negate_if(v != target));
                            }
                            return false;
                        }
                    }
                }
                true
            });
            assert!(pending.len() < before, "gate set is not realisable");
        }
        c.set_output(out.expect("target among gates")).expect("existing node");
        let c = c.without_dangling();
        let tt = TruthTable::new(n, target as u64).expect("in range");
        let t = index.to_canon(tt);
        c.transformed(&t).expect("same arity")
    }
}

/// Depth-first completion below one prefix state.
struct Walker<'a> {
    tables: &'a Tables,
    index: &'a ClassIndex,
    depth: usize,
    prefix: usize,
    /// Gate keys, in placement order.
    keys: Vec<u16>,
    fanins: Vec<(usize, usize)>,
    refcount: Vec<u32>,
    dangling: usize,
    dedup: HashSet<Box<[u32]>>,
    dedup_capacity: usize,
    deadline: Instant,
    visited: u64,
    best: Best,
}

impl<'a> Walker<'a> {
    fn new(
        tables: &'a Tables,
        index: &'a ClassIndex,
        depth: usize,
        prefix: usize,
        deadline: Instant,
        dedup_capacity: usize,
    ) -> Self {
        let best = Best::new(index);
        Walker {
            tables,
            index,
            depth,
            prefix,
            keys: Vec::with_capacity(depth),
            fanins: Vec::with_capacity(depth),
            refcount: vec![0; depth],
            dangling: 0,
            dedup: HashSet::new(),
            dedup_capacity,
            deadline,
            visited: 0,
            best,
        }
    }

    /// Returns false on timeout.
    fn run(&mut self, state: &[u32]) -> bool {
        self.keys.clear();
        self.fanins.clear();
        self.refcount.iter_mut().for_each(|r| *r = 0);
        self.dangling = 0;
        for &e in state {
            self.keys.push((e >> 1) as u16);
            // Prefix gates keep their dangling flag through a fake reference.
            self.fanins.push((usize::MAX, usize::MAX));
            if e & 1 == 1 {
                self.dangling += 1;
            } else {
                let g = self.keys.len() - 1;
                self.refcount[g] = 1;
            }
        }
        self.dfs().is_some()
    }

    #[inline]
    fn node_value(&self, node: usize) -> u16 {
        let n = self.tables.n;
        if node < n {
            self.tables.inputs[node]
        } else {
            self.keys[node - n]
        }
    }

    fn record(&mut self, key: u16) {
        let d = self.keys.len();
        let class = self.index.class_of_bits(key as u64);
        if self.best.depth_of(class) < d {
            return;
        }
        let entries: Vec<u32> = self.keys.iter().map(|&k| (k as u32) << 1).collect();
        self.best.offer(self.index, self.tables, key, d, &entries);
    }

    fn push(&mut self, i: usize, j: usize, key: u16) {
        let n = self.tables.n;
        for node in [i, j] {
            if node >= n {
                let g = node - n;
                if self.refcount[g] == 0 {
                    self.dangling -= 1;
                }
                self.refcount[g] += 1;
            }
        }
        self.keys.push(key);
        self.fanins.push((i, j));
        self.dangling += 1;
    }

    fn pop(&mut self) {
        let n = self.tables.n;
        let (i, j) = self.fanins.pop().expect("non-empty");
        self.keys.pop();
        self.dangling -= 1;
        for node in [i, j] {
            if node >= n {
                let g = node - n;
                self.refcount[g] -= 1;
                if self.refcount[g] == 0 {
                    self.dangling += 1;
                }
            }
        }
    }

    fn first_visit(&mut self) -> bool {
        let d = self.keys.len();
        let mut sig: Vec<u32> = (0..d)
            .map(|g| ((self.keys[g] as u32) << 1) | (self.refcount[g] == 0) as u32)
            .collect();
        sig.sort_unstable();
        sig.push(self.keys[d - 1] as u32);
        let sig = sig.into_boxed_slice();
        if self.dedup.contains(&sig) {
            return false;
        }
        if self.dedup.len() >= self.dedup_capacity {
            self.dedup.clear();
        }
        self.dedup.insert(sig);
        true
    }

    /// `None` on timeout.
    fn dfs(&mut self) -> Option<()> {
        self.visited += 1;
        if self.visited % CHECK_EVERY == 0 && Instant::now() >= self.deadline {
            return None;
        }
        let d = self.keys.len();
        let n = self.tables.n;
        let mask = self.tables.mask;
        if self.dangling > self.depth - d + 1 {
            return Some(());
        }
        if d + 1 == self.depth {
            self.final_gate();
            return Some(());
        }
        if d >= 2 && d > self.prefix && d + 2 <= self.depth && !self.first_visit() {
            return Some(());
        }
        let nodes = n + d;
        let prev = nodes - 1;
        for i in 0..nodes {
            for j in (i + 1)..nodes {
                let (vi, vj) = (self.node_value(i), self.node_value(j));
                for pol in 0..4u16 {
                    let a = if pol & 2 != 0 { !vi & mask } else { vi };
                    let b = if pol & 1 != 0 { !vj & mask } else { vj };
                    let key = self.tables.norm(a & b);
                    if self.tables.is_trivial(key) || self.keys.contains(&key) {
                        continue;
                    }
                    if d > self.prefix && i != prev && j != prev && key <= self.keys[d - 1] {
                        continue;
                    }
                    self.push(i, j, key);
                    self.record(key);
                    let r = self.dfs();
                    self.pop();
                    r?;
                }
            }
        }
        Some(())
    }

    /// The last gate must read every unreferenced gate.
    fn final_gate(&mut self) {
        let d = self.keys.len();
        let n = self.tables.n;
        let mask = self.tables.mask;
        let required: Vec<usize> = (0..d).filter(|&g| self.refcount[g] == 0).map(|g| g + n).collect();
        let nodes = n + d;
        let prev = nodes - 1;
        let ordered = |s: &Self, i: usize, j: usize, key: u16| {
            d <= s.prefix || i == prev || j == prev || key > s.keys[d - 1]
        };
        let try_pair = |s: &mut Self, i: usize, j: usize| {
            let (vi, vj) = (s.node_value(i), s.node_value(j));
            for pol in 0..4u16 {
                let a = if pol & 2 != 0 { !vi & mask } else { vi };
                let b = if pol & 1 != 0 { !vj & mask } else { vj };
                let key = s.tables.norm(a & b);
                if s.tables.is_trivial(key) || s.keys.contains(&key) || !ordered(s, i, j, key) {
                    continue;
                }
                let class = s.index.class_of_bits(key as u64);
                if s.best.depth_of(class) >= d + 1 {
                    s.push(i, j, key);
                    s.record(key);
                    s.pop();
                }
            }
        };
        match required.as_slice() {
            [i, j] => try_pair(self, *i, *j),
            [g] => {
                for other in 0..nodes {
                    if other != *g {
                        try_pair(self, other.min(*g), other.max(*g));
                    }
                }
            }
            [] => {
                for i in 0..nodes {
                    for j in (i + 1)..nodes {
                        try_pair(self, i, j);
                    }
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_arities_match_oracle() {
        let cfg = SynthesisConfig::default();
        for n in 1..=3 {
            let oracle = super::super::brute_oracle(n).unwrap();
            let r = sweep_classes(n, 8, &cfg).unwrap();
            assert!(r.unresolved().is_empty());
            for (i, c) in r.classes.iter().enumerate() {
                let w = r.witnesses[i].as_ref().unwrap();
                assert_eq!(w.evaluate().unwrap(), c.canon);
                assert_eq!(Some(oracle[&c.canon].size), r.size_of(i), "n={n} {}", c.canon);
            }
        }
    }

    #[test]
    fn prefix_does_not_change_sizes() {
        let cfg = SynthesisConfig::default();
        let a = sweep_classes_with_prefix(3, 6, 0, &cfg).unwrap();
        let b = sweep_classes_with_prefix(3, 6, 3, &cfg).unwrap();
        let sa: Vec<_> = (0..a.classes.len()).map(|i| a.size_of(i)).collect();
        let sb: Vec<_> = (0..b.classes.len()).map(|i| b.size_of(i)).collect();
        assert_eq!(sa, sb);
    }

    #[test]
    fn shallow_sweep_leaves_classes_open() {
        let r = sweep_classes(3, 2, &SynthesisConfig::default()).unwrap();
        let open = r.unresolved();
        assert!(!open.is_empty());
        for c in &open {
            assert!(super::super::brute_oracle(3).unwrap()[&c.canon].size > 2);
        }
        assert!(r.exact_results().iter().all(|x| x.check().is_ok()));
    }

    #[test]
    fn canonical_state_is_orbit_invariant() {
        let t = Tables::new(3);
        let state: Vec<u32> = {
            let mut s = vec![(0x08u32 << 1) | 0, (0x28u32 << 1) | 1];
            s.sort_unstable();
            s
        };
        let c = t.canonical(&state);
        for ti in 0..(t.map.len() / t.nkeys) as u16 {
            let mut img: Vec<u32> = state
                .iter()
                .map(|&e| ((t.image(ti, (e >> 1) as u16) as u32) << 1) | (e & 1))
                .collect();
            img.sort_unstable();
            assert_eq!(t.canonical(&img), c);
        }
    }
}
