//! The NPN mutation graph: classes joined when some members differ in one
//! truth-table row, annotated with the difference of their optimal sizes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::npn::{ClassIndex, NpnClass};
use crate::synthesis::{OptResult, OptStatus};
use crate::truthtable::TruthTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MutationError {
    #[error("no result for {} class(es): {}", .0.len(), fmt_tables(.0))]
    MissingClasses(Vec<TruthTable>),
    #[error("no edge has a defined delta")]
    NoDefinedDeltas,
    #[error("class index {0} out of range")]
    UnknownClass(usize),
}

fn fmt_tables(t: &[TruthTable]) -> String {
    t.iter().map(|t| t.to_hex()).collect::<Vec<_>>().join(", ")
}

/// Size claim for one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassOpt {
    pub size: usize,
    pub status: OptStatus,
}

impl From<&OptResult> for ClassOpt {
    fn from(r: &OptResult) -> Self {
        ClassOpt {
            size: r.size,
            status: r.status,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationEdge {
    /// Smaller class index.
    pub a: usize,
    pub b: usize,
    /// `|opt(a) - opt(b)|`, defined only when both sizes are exact.
    pub delta: Option<usize>,
    /// Number of single-row flips of either representative that cross this
    /// edge. Informational only.
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub edge_total: usize,
    pub exact_edge_total: usize,
    pub max_delta: Option<usize>,
    pub mean_abs_delta: Option<f64>,
    pub share_delta_le_2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationGraph {
    pub n: usize,
    pub classes: Vec<NpnClass>,
    pub opt: Vec<ClassOpt>,
    pub edges: Vec<MutationEdge>,
    /// Edge count per defined delta.
    pub histogram: BTreeMap<usize, usize>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub holds: bool,
    pub max_delta: Option<usize>,
    pub violating: Vec<MutationEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean_abs_delta: f64,
    pub share_delta_le_2: f64,
}

/// One exported edge: class representatives and the delta or `"NA"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub class_a: String,
    pub class_b: String,
    pub delta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub delta: usize,
    pub count: usize,
    pub percent: f64,
}

/// Classes reachable by flipping one row of `tt`, excluding its own class.
pub fn neighbors_of(index: &ClassIndex, tt: TruthTable) -> BTreeSet<usize> {
    let own = index.class_of(tt);
    (0..tt.rows())
        .map(|r| index.class_of(tt.flip_bit(r).expect("row in range")))
        .filter(|&c| c != own)
        .collect()
}

/// Neighbours of a class, computed from its representative. Any other member
/// gives the same set because NPN transforms preserve Hamming distance.
pub fn class_neighbors(index: &ClassIndex, cls: &NpnClass) -> BTreeSet<usize> {
    neighbors_of(index, cls.canon)
}

/// Builds the graph; `opt` must hold a result for every class.
pub fn build_graph(
    index: &ClassIndex,
    opt: &BTreeMap<usize, ClassOpt>,
) -> Result<MutationGraph, MutationError> {
    let classes = index.classes().to_vec();
    let missing: Vec<TruthTable> = classes
        .iter()
        .filter(|c| !opt.contains_key(&c.class_index))
        .map(|c| c.canon)
        .collect();
    if !missing.is_empty() {
        return Err(MutationError::MissingClasses(missing));
    }
    if let Some(&extra) = opt.keys().find(|&&k| k >= classes.len()) {
        return Err(MutationError::UnknownClass(extra));
    }
    let opt: Vec<ClassOpt> = classes.iter().map(|c| opt[&c.class_index]).collect();

    let mut mult: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for c in &classes {
        for r in 0..c.canon.rows() {
            let other = index.class_of(c.canon.flip_bit(r).expect("row in range"));
            if other != c.class_index {
                let key = (c.class_index.min(other), c.class_index.max(other));
                *mult.entry(key).or_default() += 1;
            }
        }
    }
    let edges: Vec<MutationEdge> = mult
        .into_iter()
        .map(|((a, b), multiplicity)| {
            let (oa, ob) = (opt[a], opt[b]);
            let delta = (oa.status == OptStatus::Exact && ob.status == OptStatus::Exact)
                .then(|| oa.size.abs_diff(ob.size));
            MutationEdge {
                a,
                b,
                delta,
                multiplicity,
            }
        })
        .collect();

    let mut histogram = BTreeMap::new();
    for d in edges.iter().filter_map(|e| e.delta) {
        *histogram.entry(d).or_insert(0) += 1;
    }
    let exact_edge_total: usize = histogram.values().sum();
    let stats = stats_of(&histogram);
    let summary = Summary {
        edge_total: edges.len(),
        exact_edge_total,
        max_delta: histogram.keys().next_back().copied(),
        mean_abs_delta: stats.map(|s| s.mean_abs_delta),
        share_delta_le_2: stats.map(|s| s.share_delta_le_2),
    };
    Ok(MutationGraph {
        n: index.n(),
        classes,
        opt,
        edges,
        histogram,
        summary,
    })
}

fn stats_of(histogram: &BTreeMap<usize, usize>) -> Option<SummaryStats> {
    let total: usize = histogram.values().sum();
    if total == 0 {
        return None;
    }
    let sum: usize = histogram.iter().map(|(d, c)| d * c).sum();
    let le2: usize = histogram.range(..=2).map(|(_, c)| c).sum();
    Some(SummaryStats {
        mean_abs_delta: sum as f64 / total as f64,
        share_delta_le_2: le2 as f64 / total as f64,
    })
}

/// Checks `|delta| <= n` on every edge with a defined delta.
pub fn verify_bound(g: &MutationGraph) -> BoundReport {
    let violating: Vec<MutationEdge> = g
        .edges
        .iter()
        .filter(|e| e.delta.is_some_and(|d| d > g.n))
        .cloned()
        .collect();
    BoundReport {
        n: g.n,
        holds: violating.is_empty(),
        max_delta: g.summary.max_delta,
        violating,
    }
}

pub fn summary_stats(g: &MutationGraph) -> Result<SummaryStats, MutationError> {
    stats_of(&g.histogram).ok_or(MutationError::NoDefinedDeltas)
}

impl MutationGraph {
    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        self.edges
            .iter()
            .map(|e| EdgeRecord {
                class_a: self.classes[e.a].canon.to_hex(),
                class_b: self.classes[e.b].canon.to_hex(),
                delta: e.delta.map_or_else(|| "NA".to_string(), |d| d.to_string()),
            })
            .collect()
    }

    pub fn histogram_rows(&self) -> Vec<HistogramRow> {
        let total = self.summary.exact_edge_total.max(1) as f64;
        self.histogram
            .iter()
            .map(|(&delta, &count)| HistogramRow {
                delta,
                count,
                percent: 100.0 * count as f64 / total,
            })
            .collect()
    }

    /// Edges with the given delta, as `(size_a, size_b)` pairs.
    pub fn sizes_at_delta(&self, delta: usize) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .filter(|e| e.delta == Some(delta))
            .map(|e| (self.opt[e.a].size, self.opt[e.b].size))
            .collect()
    }
}
