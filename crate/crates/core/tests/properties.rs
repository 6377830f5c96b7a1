use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use proptest::prelude::*;

use aigsense_core::mutation::{build_graph, class_neighbors, verify_bound, ClassOpt};
use aigsense_core::npn::{all_transforms, ClassIndex};
use aigsense_core::repair::{repair_clear, repair_set};
use aigsense_core::synthesis::{brute_oracle, exists_circuit, opt_size, Existence, Pruning};
use aigsense_core::{AigCircuit, Assignment, OptStatus, ResultRecord, SynthesisConfig, TruthTable};

fn oracle3() -> &'static BTreeMap<TruthTable, usize> {
    static CELL: OnceLock<BTreeMap<TruthTable, usize>> = OnceLock::new();
    CELL.get_or_init(|| {
        brute_oracle(3)
            .unwrap()
            .into_iter()
            .map(|(t, e)| (t, e.size))
            .collect()
    })
}

fn tt3(bits: u64) -> TruthTable {
    TruthTable::new(3, bits).unwrap()
}

fn witness(f: TruthTable) -> AigCircuit {
    opt_size(f, &SynthesisConfig::default()).unwrap().witness
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn opt_size_is_npn_invariant(bits in 0u64..256, pick in any::<usize>()) {
        let cfg = SynthesisConfig::default();
        let ts = all_transforms(3);
        let t = &ts[pick % ts.len()];
        let f = tt3(bits);
        let a = opt_size(f, &cfg).unwrap();
        let b = opt_size(t.apply(f).unwrap(), &cfg).unwrap();
        prop_assert_eq!(a.size, b.size);
        prop_assert_eq!(a.status, OptStatus::Exact);
        prop_assert!(a.check().is_ok());
    }

    #[test]
    fn one_flip_moves_opt_by_at_most_n(bits in 0u64..256, row in 0usize..8) {
        let opt = oracle3();
        let f = tt3(bits);
        let g = f.flip_bit(row).unwrap();
        prop_assert!(opt[&f].abs_diff(opt[&g]) <= 3);
        // The repair gadget realises the upper side of the bound.
        let x = Assignment::new(3, row as u64).unwrap();
        let c = witness(f);
        let (out, _) = if f.bit(row) { repair_clear(&c, x).unwrap() } else { repair_set(&c, x).unwrap() };
        prop_assert_eq!(out.evaluate().unwrap(), g);
        prop_assert!(out.size() <= opt[&f] + 3);
        prop_assert!(out.size() >= opt[&g]);
    }

    #[test]
    fn structural_existence_is_monotone(bits in 0u64..16) {
        let cfg = SynthesisConfig { pruning: Pruning::structural(), ..SynthesisConfig::default() };
        let f = TruthTable::new(2, bits).unwrap();
        let found: Vec<bool> = (1..=4)
            .map(|k| matches!(exists_circuit(f, k, &cfg).unwrap(), Existence::Witness(_)))
            .collect();
        for w in found.windows(2) {
            prop_assert!(!w[0] || w[1]);
        }
    }

    #[test]
    fn record_json_roundtrip(bits in 0u64..256) {
        let r = opt_size(tt3(bits), &SynthesisConfig::default()).unwrap();
        let rec = ResultRecord::from_result(&r, chrono::Utc::now());
        let text = serde_json::to_string(&rec).unwrap();
        let back: ResultRecord = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(back.verify().unwrap().evaluate().unwrap(), r.tt);
        prop_assert_eq!(back.to_result().unwrap().size, r.size);
    }
}

#[test]
fn n3_graph_matches_a_direct_count() {
    let index = ClassIndex::build(3).unwrap();
    let opt = oracle3();
    let opts: BTreeMap<usize, ClassOpt> = index
        .classes()
        .iter()
        .map(|c| {
            (
                c.class_index,
                ClassOpt {
                    size: opt[&c.canon],
                    status: OptStatus::Exact,
                },
            )
        })
        .collect();
    let g = build_graph(&index, &opts).unwrap();

    // Independent edge set: class pairs joined by any single flip of any function.
    let mut pairs = BTreeSet::new();
    for (&f, _) in opt {
        for row in 0..8 {
            let a = index.class_of(f);
            let b = index.class_of(f.flip_bit(row).unwrap());
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    let edges: BTreeSet<(usize, usize)> = g.edges.iter().map(|e| (e.a, e.b)).collect();
    assert_eq!(edges, pairs);
    let mut hist = BTreeMap::new();
    for &(a, b) in &pairs {
        *hist.entry(opt[&index.classes()[a].canon].abs_diff(opt[&index.classes()[b].canon])).or_insert(0) += 1;
    }
    assert_eq!(g.histogram, hist);
    assert_eq!(g.summary.exact_edge_total, pairs.len());
    assert!(verify_bound(&g).holds);
    for c in index.classes() {
        for nb in class_neighbors(&index, c) {
            assert!(pairs.contains(&(c.class_index.min(nb), c.class_index.max(nb))));
        }
    }
}
