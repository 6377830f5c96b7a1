//! Depth-first enumeration of canonical `k`-gate AIGs for one target table.
//!
//! Gates are placed one at a time. Each gate reads two distinct earlier nodes
//! in any of the four polarity combinations and the last gate is the output
//! root. Gate order is fixed by a greedy rule: when a gate does not read the
//! gate placed just before it, its normalised function must not be smaller
//! than that gate's. Every DAG has such an order (repeatedly place the
//! available gate with the smallest function), so no circuit is lost.

use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::{trivial_circuit, Existence, Pruning, SynthesisConfig, SynthesisError};
use crate::aig::{AigCircuit, AndGate, Literal};
use crate::truthtable::{row_mask, var_mask, TruthTable};

const CHECK_EVERY: u64 = 1 << 12;

/// Does some `k`-gate circuit in the pruned canonical space compute `tt`?
///
/// With all pruning rules on, the space holds a minimum-size circuit of every
/// function, but it may hold no circuit at all for a `k` above the optimum.
/// [`super::Pruning::structural`] drops the function-level rule and makes the
/// answer monotone in `k` for `k >= 1`.
pub fn exists_circuit(
    tt: TruthTable,
    k: usize,
    cfg: &SynthesisConfig,
) -> Result<Existence, SynthesisError> {
    cfg.validate()?;
    if k == 0 {
        return Ok(match trivial_circuit(tt) {
            Some(c) => Existence::Witness(c),
            None => Existence::Infeasible,
        });
    }
    let deadline = Instant::now() + cfg.time_budget;
    let shared = Shared {
        best_branch: AtomicUsize::new(usize::MAX),
        timed_out: AtomicBool::new(false),
        next_branch: AtomicUsize::new(0),
        witnesses: Mutex::new(Vec::new()),
    };

    let root = Searcher::new(tt, k, cfg.pruning, cfg.dedup_capacity, deadline, None);
    let branches = root.top_level_branches();
    if branches.is_empty() {
        // k == 1: the first gate is the root.
        let mut s = root;
        return Ok(match s.final_gate() {
            Step::Found => Existence::Witness(s.witness()),
            _ => Existence::Infeasible,
        });
    }

    let jobs = cfg.jobs.min(branches.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let shared = &shared;
            let branches = &branches;
            let mut worker =
                Searcher::new(tt, k, cfg.pruning, cfg.dedup_capacity, deadline, Some(shared));
            scope.spawn(move || worker.run_branches(branches));
        }
    });

    let mut witnesses = shared.witnesses.into_inner().expect("poisoned");
    witnesses.sort_by_key(|(b, _)| *b);
    if let Some((_, c)) = witnesses.into_iter().next() {
        return Ok(Existence::Witness(c));
    }
    if shared.timed_out.load(Ordering::Relaxed) {
        Ok(Existence::BudgetExhausted)
    } else {
        Ok(Existence::Infeasible)
    }
}

struct Shared {
    best_branch: AtomicUsize,
    timed_out: AtomicBool,
    next_branch: AtomicUsize,
    witnesses: Mutex<Vec<(usize, AigCircuit)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Found,
    Exhausted,
    Aborted,
}

struct Searcher<'a> {
    n: usize,
    k: usize,
    mask: u64,
    target: u64,
    pruning: Pruning,
    first_node: usize,
    /// Node values, constant and inputs first.
    values: Vec<u64>,
    keys: Vec<u64>,
    fanins: Vec<(Literal, Literal)>,
    refcount: Vec<u32>,
    dangling: usize,
    output_complemented: bool,
    dedup: HashSet<Box<[u64]>>,
    dedup_capacity: usize,
    visited: u64,
    deadline: Instant,
    branch: usize,
    shared: Option<&'a Shared>,
}

impl<'a> Searcher<'a> {
    fn new(
        tt: TruthTable,
        k: usize,
        pruning: Pruning,
        dedup_capacity: usize,
        deadline: Instant,
        shared: Option<&'a Shared>,
    ) -> Self {
        let n = tt.n();
        let mask = row_mask(n);
        let mut values = Vec::with_capacity(1 + n + k);
        values.push(0);
        for v in 0..n {
            values.push(var_mask(v, n));
        }
        let keys = values.iter().map(|&v| v.min(!v & mask)).collect();
        Searcher {
            n,
            k,
            mask,
            target: tt.bits(),
            pruning,
            first_node: if pruning.no_constant_fanin { 1 } else { 0 },
            values,
            keys,
            fanins: Vec::with_capacity(k),
            refcount: vec![0; k],
            dangling: 0,
            output_complemented: false,
            dedup: HashSet::new(),
            dedup_capacity,
            visited: 0,
            deadline,
            branch: 0,
            shared,
        }
    }

    #[inline]
    fn lit_value(&self, l: Literal) -> u64 {
        let v = self.values[l.node()];
        if l.is_complemented() {
            !v & self.mask
        } else {
            v
        }
    }

    #[inline]
    fn key(&self, v: u64) -> u64 {
        v.min(!v & self.mask)
    }

    /// Candidate fanin pairs for the gate at position `d`.
    fn pairs(&self, d: usize) -> Vec<(Literal, Literal)> {
        let last = self.n + d;
        let mut out = Vec::new();
        for i in self.first_node..=last {
            for j in i..=last {
                if i == j {
                    if !self.pruning.no_complement_pair {
                        out.push((Literal::new(i, false), Literal::new(i, true)));
                    }
                    continue;
                }
                for pa in [false, true] {
                    for pb in [false, true] {
                        out.push((Literal::new(i, pa), Literal::new(j, pb)));
                    }
                }
            }
        }
        out
    }

    fn top_level_branches(&self) -> Vec<(Literal, Literal)> {
        if self.k <= 1 {
            return Vec::new();
        }
        let mut seen = HashSet::new();
        self.pairs(0)
            .into_iter()
            .filter(|&(a, b)| {
                let v = self.lit_value(a) & self.lit_value(b);
                self.admissible(0, a, b, v) && (!self.pruning.signature_dedup || {
                    // Identical first-gate functions lead to identical subtrees.
                    seen.insert(self.key(v))
                })
            })
            .collect()
    }

    /// Local admissibility of `AND(a, b) = v` as gate `d` (not the root).
    #[inline]
    fn admissible(&self, d: usize, a: Literal, b: Literal, v: u64) -> bool {
        let key = self.key(v);
        if self.pruning.distinct_functions {
            if self.keys[..self.n + 1 + d].contains(&key) {
                return false;
            }
        }
        if d > 0 {
            let prev = self.n + d;
            if a.node() != prev && b.node() != prev {
                let prev_key = self.keys[prev];
                let ordered = if self.pruning.distinct_functions {
                    key > prev_key
                } else {
                    key >= prev_key
                };
                if !ordered {
                    return false;
                }
            }
        }
        true
    }

    fn push(&mut self, a: Literal, b: Literal, v: u64) {
        for l in [a, b] {
            if l.node() > self.n {
                let g = l.node() - self.n - 1;
                if self.refcount[g] == 0 {
                    self.dangling -= 1;
                }
                self.refcount[g] += 1;
            }
        }
        self.dangling += 1;
        self.values.push(v);
        self.keys.push(self.key(v));
        self.fanins.push((a, b));
    }

    fn pop(&mut self) {
        let (a, b) = self.fanins.pop().expect("non-empty");
        self.values.pop();
        self.keys.pop();
        self.dangling -= 1;
        for l in [a, b] {
            if l.node() > self.n {
                let g = l.node() - self.n - 1;
                self.refcount[g] -= 1;
                if self.refcount[g] == 0 {
                    self.dangling += 1;
                }
            }
        }
    }

    fn run_branches(&mut self, branches: &[(Literal, Literal)]) {
        let shared = self.shared.expect("worker without shared state");
        loop {
            let b = shared.next_branch.fetch_add(1, Ordering::Relaxed);
            if b >= branches.len() || b > shared.best_branch.load(Ordering::Relaxed) {
                return;
            }
            if shared.timed_out.load(Ordering::Relaxed) {
                return;
            }
            self.branch = b;
            self.dedup.clear();
            let (x, y) = branches[b];
            let v = self.lit_value(x) & self.lit_value(y);
            self.push(x, y, v);
            let step = self.dfs(1);
            match step {
                Step::Found => {
                    shared.best_branch.fetch_min(b, Ordering::Relaxed);
                    shared
                        .witnesses
                        .lock()
                        .expect("poisoned")
                        .push((b, self.witness()));
                    self.reset();
                }
                Step::Aborted => {
                    if Instant::now() >= self.deadline {
                        shared.timed_out.store(true, Ordering::Relaxed);
                    }
                    self.reset();
                }
                Step::Exhausted => self.pop(),
            }
        }
    }

    fn reset(&mut self) {
        while !self.fanins.is_empty() {
            self.pop();
        }
    }

    fn should_abort(&mut self) -> bool {
        self.visited += 1;
        if self.visited % CHECK_EVERY != 0 {
            return false;
        }
        if Instant::now() >= self.deadline {
            return true;
        }
        self.shared
            .is_some_and(|s| s.best_branch.load(Ordering::Relaxed) < self.branch)
    }

    /// `d` gates are placed; place gate `d`.
    fn dfs(&mut self, d: usize) -> Step {
        if self.should_abort() {
            return Step::Aborted;
        }
        if self.pruning.require_all_gates_used && self.dangling > self.k - d + 1 {
            return Step::Exhausted;
        }
        if d + 1 == self.k {
            return self.final_gate();
        }
        if self.pruning.signature_dedup && d + 2 <= self.k && d >= 2 && !self.first_visit(d) {
            return Step::Exhausted;
        }
        for (a, b) in self.pairs(d) {
            let v = self.lit_value(a) & self.lit_value(b);
            if !self.admissible(d, a, b, v) {
                continue;
            }
            self.push(a, b, v);
            let step = self.dfs(d + 1);
            if step != Step::Exhausted {
                return step;
            }
            self.pop();
        }
        Step::Exhausted
    }

    fn first_visit(&mut self, d: usize) -> bool {
        let base = self.n + 1;
        let mut sig: Vec<u64> = (0..d)
            .map(|g| (self.keys[base + g] << 1) | (self.refcount[g] == 0) as u64)
            .collect();
        if self.pruning.distinct_functions {
            sig.sort_unstable();
        }
        sig.push(self.keys[base + d - 1]);
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

    /// The root: must read every still-unreferenced gate.
    fn final_gate(&mut self) -> Step {
        let d = self.k - 1;
        let target_c = !self.target & self.mask;
        let required: Vec<usize> = if self.pruning.require_all_gates_used {
            (0..d)
                .filter(|&g| self.refcount[g] == 0)
                .map(|g| self.n + 1 + g)
                .collect()
        } else {
            Vec::new()
        };
        if required.len() > 2 {
            return Step::Exhausted;
        }
        let target_key = self.key(self.target);
        if self.pruning.distinct_functions && self.keys.contains(&target_key) {
            return Step::Exhausted;
        }
        let last = self.n + d;
        let try_pair = |s: &mut Self, i: usize, j: usize| -> bool {
            for pa in [false, true] {
                for pb in [false, true] {
                    if i == j && pa == pb {
                        continue;
                    }
                    let a = Literal::new(i, pa);
                    let b = Literal::new(j, pb);
                    let v = s.lit_value(a) & s.lit_value(b);
                    if v == s.target || v == target_c {
                        s.output_complemented = v != s.target;
                        s.push(a, b, v);
                        return true;
                    }
                }
            }
            false
        };
        let allow_same = !self.pruning.no_complement_pair;
        match required.as_slice() {
            [i, j] => {
                if try_pair(self, *i, *j) {
                    return Step::Found;
                }
            }
            [g] => {
                let g = *g;
                for other in self.first_node..=last {
                    let hit = if other == g {
                        allow_same && try_pair(self, g, g)
                    } else {
                        try_pair(self, other.min(g), other.max(g))
                    };
                    if hit {
                        return Step::Found;
                    }
                }
            }
            _ => {
                for i in self.first_node..=last {
                    for j in i..=last {
                        if i == j && !allow_same {
                            continue;
                        }
                        if try_pair(self, i, j) {
                            return Step::Found;
                        }
                    }
                }
            }
        }
        Step::Exhausted
    }

    /// Circuit for the current (complete) gate stack.
    fn witness(&self) -> AigCircuit {
        let gates = self
            .fanins
            .iter()
            .map(|&(a, b)| AndGate::new(a, b))
            .collect::<Vec<_>>();
        let root = Literal::new(self.n + gates.len(), self.output_complemented);
        AigCircuit::from_parts(self.n, gates, root)
    }
}
