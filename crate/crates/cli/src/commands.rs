use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use anyhow::{anyhow, bail, Context as _, Result};
use chrono::Utc;
use serde::Serialize;

use aigsense_core::mutation::{self, build_graph, verify_bound, MutationGraph};
use aigsense_core::npn::{enumerate_classes, ClassIndex};
use aigsense_core::repair::{repair_clear, repair_multi, repair_set};
use aigsense_core::store::{Loaded, Rejected};
use aigsense_core::synthesis::cnf::{decode_model, encode_cnf, ModelOutcome};
use aigsense_core::synthesis::{
    brute_oracle, opt_size, opt_size_from, sweep_classes, trivial_lower_bound, Backend,
    SynthesisError,
};
use aigsense_core::{
    AigCircuit, Assignment, OptStatus, ResultRecord, Store, SynthesisConfig, TruthTable,
};

use crate::output::{render, Outcome};
use crate::{BackendArg, SearchArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UPPER_BOUND: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;
pub const EXIT_INCOMPLETE: i32 = 4;

pub struct Context {
    pub store: Option<PathBuf>,
    pub jobs: usize,
}

impl Context {
    fn store(&self) -> Result<Option<Store>> {
        self.store
            .as_ref()
            .map(|p| Store::open(p).map_err(Into::into))
            .transpose()
    }

    fn require_store(&self) -> Result<Store> {
        self.store()?
            .ok_or_else(|| anyhow!("no store given (use --store or {})", aigsense_core::store::STORE_ENV))
    }
}

fn config(search: &SearchArgs, jobs: usize) -> Result<SynthesisConfig> {
    let cfg = SynthesisConfig {
        max_gates: search.max_gates,
        backend: match search.backend {
            BackendArg::Enum => Backend::Enumeration,
            BackendArg::CnfExport => Backend::CnfExport,
        },
        time_budget: Duration::from_secs(search.budget_secs),
        jobs,
        ..SynthesisConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_tt(hex: &str, n: usize) -> Result<TruthTable> {
    TruthTable::parse_hex(hex, n).with_context(|| format!("bad truth table {hex:?} for n = {n}"))
}

fn load_reporting(store: &Store) -> Result<Loaded> {
    let loaded = store.load()?;
    for Rejected { line, reason } in &loaded.rejected {
        eprintln!("aigsense: {}: skipped line {line}: {reason}", store.path().display());
    }
    Ok(loaded)
}

fn record_row(r: &ResultRecord) -> Vec<String> {
    vec![
        r.tt_hex.clone(),
        r.n.to_string(),
        r.size.to_string(),
        r.status.as_str().to_string(),
        r.exhausted_below.map_or("-".into(), |k| k.to_string()),
        r.backend.clone(),
        r.elapsed_ms.to_string(),
    ]
}

const RECORD_HEADER: [&str; 7] = ["tt", "n", "size", "status", "exhausted_below", "backend", "elapsed_ms"];

pub fn synth(
    ctx: &Context,
    hex: &str,
    n: usize,
    search: &SearchArgs,
    only_k: Option<usize>,
    out_dir: &Path,
) -> Result<Outcome> {
    let tt = parse_tt(hex, n)?;
    let cfg = config(search, ctx.jobs)?;
    if cfg.backend == Backend::CnfExport {
        return export_cnf(tt, &cfg, only_k, out_dir);
    }
    match opt_size(tt, &cfg) {
        Ok(result) => {
            let rec = ResultRecord::from_result(&result, Utc::now());
            if let Some(store) = ctx.store()? {
                store.append(&rec)?;
            }
            let code = match rec.status {
                OptStatus::Exact => EXIT_OK,
                OptStatus::UpperBound => EXIT_UPPER_BOUND,
            };
            let table = render(&RECORD_HEADER, &[record_row(&rec)]);
            Ok(Outcome::new(code, "synth", SynthDoc { record: &rec })
                .with_table(table)
                .with_csv(RECORD_HEADER.to_vec(), vec![record_row(&rec)]))
        }
        Err(SynthesisError::Unknown {
            max_gates,
            exhausted_below,
        }) => {
            let doc = UnknownDoc {
                tt_hex: tt.to_hex(),
                n,
                max_gates,
                exhausted_below,
            };
            let table = format!(
                "{}: no circuit with <= {max_gates} gates found; sizes <= {} excluded\n",
                tt.to_hex(),
                exhausted_below.map_or("-".into(), |k| k.to_string())
            );
            Ok(Outcome::new(EXIT_UPPER_BOUND, "synth-unknown", doc).with_table(table))
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct SynthDoc<'a> {
    record: &'a ResultRecord,
}

#[derive(Serialize)]
struct UnknownDoc {
    tt_hex: String,
    n: usize,
    max_gates: usize,
    exhausted_below: Option<usize>,
}

#[derive(Serialize)]
struct CnfFile {
    k: usize,
    path: String,
    variables: usize,
    clauses: usize,
}

fn export_cnf(
    tt: TruthTable,
    cfg: &SynthesisConfig,
    only_k: Option<usize>,
    out_dir: &Path,
) -> Result<Outcome> {
    let ks: Vec<usize> = match only_k {
        Some(k) => vec![k],
        None => (trivial_lower_bound(tt).max(1)..=cfg.max_gates).collect(),
    };
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = Vec::new();
    for k in ks {
        let cnf = encode_cnf(tt, k)?;
        let path = out_dir.join(format!("{}_n{}_k{}.cnf", tt.to_hex(), tt.n(), k));
        fs::write(&path, cnf.to_dimacs()).with_context(|| format!("writing {}", path.display()))?;
        files.push(CnfFile {
            k,
            path: path.display().to_string(),
            variables: cnf.num_vars,
            clauses: cnf.clauses.len(),
        });
    }
    let rows: Vec<Vec<String>> = files
        .iter()
        .map(|f| vec![f.k.to_string(), f.variables.to_string(), f.clauses.to_string(), f.path.clone()])
        .collect();
    let header = vec!["k", "variables", "clauses", "path"];
    #[derive(Serialize)]
    struct Doc {
        tt_hex: String,
        n: usize,
        backend: &'static str,
        files: Vec<CnfFile>,
    }
    let doc = Doc {
        tt_hex: tt.to_hex(),
        n: tt.n(),
        backend: Backend::CnfExport.tag(),
        files,
    };
    Ok(Outcome::new(EXIT_OK, "cnf-export", doc)
        .with_table(render(&header, &rows))
        .with_csv(header, rows))
}

pub fn campaign(ctx: &Context, n: usize, search: &SearchArgs, sweep_depth: usize) -> Result<Outcome> {
    let store = ctx.require_store()?;
    let mut cfg = config(search, ctx.jobs)?;
    if cfg.backend != Backend::Enumeration {
        bail!("a campaign needs the enum backend");
    }
    let index = ClassIndex::build(n)?;
    let loaded = load_reporting(&store)?;
    let mut best = class_records(&index, &loaded);
    let is_exact = |best: &BTreeMap<usize, ResultRecord>, c: usize| {
        best.get(&c).is_some_and(|r| r.status == OptStatus::Exact)
    };
    let mut known: BTreeMap<usize, usize> = best
        .iter()
        .filter_map(|(&c, r)| r.exhausted_below.map(|k| (c, k)))
        .collect();

    let open = |best: &BTreeMap<usize, ResultRecord>| -> Vec<usize> {
        (0..index.classes().len()).filter(|&c| !is_exact(best, c)).collect()
    };
    let skipped = index.classes().len() - open(&best).len();
    eprintln!("aigsense: campaign n={n}: {skipped} classes already exact");

    let mut sweep_ms = None;
    let depth = sweep_depth.min(cfg.max_gates);
    // A sweep is only worth running if it can prove more than the store knows.
    let sweep_needed = open(&best)
        .iter()
        .any(|c| known.get(c).is_none_or(|&k| k < depth));
    if sweep_needed && depth > 0 {
        let report = sweep_classes(n, depth, &cfg)?;
        eprintln!(
            "aigsense: sweep to {depth} gates settled {} classes in {:.1}s",
            index.classes().len() - report.unresolved().len(),
            report.elapsed.as_secs_f64()
        );
        sweep_ms = Some(report.elapsed.as_millis() as u64);
        let now = Utc::now();
        for result in report.exact_results() {
            let c = index.class_of(result.tt);
            if !is_exact(&best, c) {
                let rec = ResultRecord::from_result(&result, now);
                store.append(&rec)?;
                best.insert(c, rec);
            }
        }
        let unresolved = report.unresolved();
        for cls in &unresolved {
            let k = known.entry(cls.class_index).or_insert(depth);
            *k = (*k).max(depth);
        }
        // Persist the exhaustion with a repair-built witness so that a
        // resumed run (or an imported SAT model) can build on it. Repeats
        // until no class gains a record, since open classes may only border
        // other open classes.
        let mut progress = true;
        while progress {
            progress = false;
            for cls in &unresolved {
                let c = cls.class_index;
                if best.get(&c).is_some_and(|r| r.exhausted_below >= Some(depth)) {
                    continue;
                }
                let status_for = |size: usize| {
                    if size == depth + 1 {
                        OptStatus::Exact
                    } else {
                        OptStatus::UpperBound
                    }
                };
                let rec = if let Some(old) = best.get(&c) {
                    // Keep the stored witness, with the stronger bound.
                    ResultRecord {
                        status: status_for(old.size),
                        exhausted_below: Some(depth),
                        timestamp: now,
                        ..old.clone()
                    }
                } else {
                    let Some(w) = neighbor_repair_witness(&index, c, &best) else { continue };
                    ResultRecord {
                        tt_hex: cls.canon.to_hex(),
                        n,
                        size: w.size(),
                        status: status_for(w.size()),
                        exhausted_below: Some(depth),
                        witness_aag: w.to_aiger_compact(),
                        backend: REPAIR_BACKEND.into(),
                        elapsed_ms: 0,
                        timestamp: now,
                    }
                };
                store.append(&rec)?;
                best.insert(c, rec);
                progress = true;
            }
        }
    }

    let todo = open(&best);
    let mut failures: Vec<(String, String)> = Vec::new();
    if !todo.is_empty() {
        let workers = ctx.jobs.max(1).min(todo.len());
        cfg.jobs = 1;
        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let (todo, next, cfg, index, known) = (&todo, &next, &cfg, &index, &known);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&c) = todo.get(i) else { break };
                    let canon = index.classes()[c].canon;
                    let r = opt_size_from(canon, cfg, known.get(&c).copied());
                    if tx.send((c, r)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            // Single writer: results are appended as they arrive.
            for (c, r) in rx {
                let canon = index.classes()[c].canon;
                match r {
                    Ok(result) => {
                        let rec = ResultRecord::from_result(&result, Utc::now());
                        eprintln!(
                            "aigsense: {} size {} {}",
                            rec.tt_hex,
                            rec.size,
                            rec.status.as_str()
                        );
                        let better = best.get(&c).is_none_or(|old| rec.dominance(old).is_lt());
                        if better {
                            if let Err(e) = store.append(&rec) {
                                failures.push((canon.to_hex(), e.to_string()));
                            }
                            best.insert(c, rec);
                        }
                    }
                    Err(SynthesisError::Unknown { .. }) => {
                        eprintln!("aigsense: {} unresolved within --max-gates", canon.to_hex());
                    }
                    Err(e) => failures.push((canon.to_hex(), e.to_string())),
                }
            }
        });
    }

    let records: Vec<&ResultRecord> = best.values().collect();
    let exact = records.iter().filter(|r| r.status == OptStatus::Exact).count();
    let upper = records.len() - exact;
    let missing: Vec<String> = index
        .classes()
        .iter()
        .filter(|c| !best.contains_key(&c.class_index))
        .map(|c| c.canon.to_hex())
        .collect();
    let mut by_size: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    for r in &records {
        *by_size.entry((r.size, r.status.as_str())).or_default() += 1;
    }
    let rows: Vec<Vec<String>> = by_size
        .iter()
        .map(|((s, st), c)| vec![s.to_string(), st.to_string(), c.to_string()])
        .collect();
    let mut table = render(&["size", "status", "classes"], &rows);
    table.push_str(&format!(
        "{} classes: {exact} exact, {upper} upper bound, {} unresolved\n",
        index.classes().len(),
        missing.len()
    ));
    let code = if exact == index.classes().len() {
        EXIT_OK
    } else {
        EXIT_UPPER_BOUND
    };
    #[derive(Serialize)]
    struct Doc<'a> {
        n: usize,
        classes: usize,
        exact: usize,
        upper_bound: usize,
        unresolved: Vec<String>,
        skipped_exact: usize,
        sweep_ms: Option<u64>,
        failures: Vec<(String, String)>,
        records: Vec<&'a ResultRecord>,
    }
    let csv_rows = records.iter().map(|r| record_row(r)).collect();
    let doc = Doc {
        n,
        classes: index.classes().len(),
        exact,
        upper_bound: upper,
        unresolved: missing,
        skipped_exact: skipped,
        sweep_ms,
        failures,
        records: records.clone(),
    };
    Ok(Outcome::new(code, "campaign", doc)
        .with_table(table)
        .with_csv(RECORD_HEADER.to_vec(), csv_rows))
}

const REPAIR_BACKEND: &str = "repair";

/// Best record per class, taken from any stored member of the class.
fn class_records(index: &ClassIndex, loaded: &Loaded) -> BTreeMap<usize, ResultRecord> {
    let mut best: BTreeMap<usize, ResultRecord> = BTreeMap::new();
    for (tt, rec) in &loaded.records {
        if tt.n() != index.n() {
            continue;
        }
        let c = index.class_of(*tt);
        if best.get(&c).is_none_or(|old| rec.dominance(old).is_lt()) {
            best.insert(c, rec.clone());
        }
    }
    best
}

/// Smallest circuit for the representative of `class` obtained by flipping
/// one row of a stored neighbour's witness: an upper bound of
/// `opt(neighbour) + n`.
fn neighbor_repair_witness(
    index: &ClassIndex,
    class: usize,
    best: &BTreeMap<usize, ResultRecord>,
) -> Option<AigCircuit> {
    let target = index.classes()[class];
    let mut out: Option<AigCircuit> = None;
    for nb in mutation::class_neighbors(index, &target) {
        let Some(rec) = best.get(&nb) else { continue };
        let Ok(w) = rec.verify() else { continue };
        let f = w.evaluate().ok()?;
        for row in 0..f.rows() {
            let g = f.flip_bit(row).ok()?;
            if index.class_of(g) != class {
                continue;
            }
            let x = Assignment::new(f.n(), row as u64).ok()?;
            let repaired = if f.bit(row) {
                repair_clear(&w, x)
            } else {
                repair_set(&w, x)
            };
            let Ok((c, _)) = repaired else { continue };
            let Ok(c) = c.cleanup().transformed(&index.to_canon(g)) else { continue };
            if c.evaluate().ok() != Some(target.canon) {
                continue;
            }
            if out.as_ref().is_none_or(|o| c.size() < o.size()) {
                out = Some(c);
            }
        }
    }
    out
}

pub fn classify(n: usize) -> Result<Outcome> {
    let classes = enumerate_classes(n)?;
    #[derive(Serialize)]
    struct Class {
        index: usize,
        canon: String,
        orbit_size: usize,
    }
    #[derive(Serialize)]
    struct Doc {
        n: usize,
        count: usize,
        classes: Vec<Class>,
    }
    let list: Vec<Class> = classes
        .iter()
        .map(|c| Class {
            index: c.class_index,
            canon: c.canon.to_hex(),
            orbit_size: c.orbit_size,
        })
        .collect();
    let rows: Vec<Vec<String>> = list
        .iter()
        .map(|c| vec![c.index.to_string(), c.canon.clone(), c.orbit_size.to_string()])
        .collect();
    let mut table = render(&["index", "canon", "orbit"], &rows);
    table.push_str(&format!("{} classes for n = {n}\n", list.len()));
    let header = vec!["index", "canon", "orbit_size"];
    let doc = Doc {
        n,
        count: list.len(),
        classes: list,
    };
    Ok(Outcome::new(EXIT_OK, "classify", doc)
        .with_table(table)
        .with_csv(header, rows))
}

/// The graph over the store, or an "incomplete store" outcome.
fn graph_from_store(ctx: &Context, n: usize) -> Result<std::result::Result<MutationGraph, Outcome>> {
    let store = ctx.require_store()?;
    let index = ClassIndex::build(n)?;
    let loaded = load_reporting(&store)?;
    let (opts, missing) = loaded.class_opts(&index);
    if !missing.is_empty() {
        #[derive(Serialize)]
        struct Doc {
            n: usize,
            classes: usize,
            missing: Vec<String>,
        }
        let missing: Vec<String> = missing.iter().map(|t| t.to_hex()).collect();
        let table = format!(
            "store covers {} of {} classes; missing: {}\n",
            index.classes().len() - missing.len(),
            index.classes().len(),
            missing.join(" ")
        );
        let doc = Doc {
            n,
            classes: index.classes().len(),
            missing,
        };
        return Ok(Err(Outcome::new(EXIT_INCOMPLETE, "incomplete-store", doc).with_table(table)));
    }
    Ok(Ok(build_graph(&index, &opts)?))
}

fn histogram_table(g: &MutationGraph) -> String {
    let rows: Vec<Vec<String>> = g
        .histogram_rows()
        .iter()
        .map(|r| vec![r.delta.to_string(), r.count.to_string(), format!("{:.1}", r.percent)])
        .collect();
    let mut t = render(&["|delta opt|", "edges", "%"], &rows);
    t.push_str(&format!(
        "total {} exact-exact edges of {}; mean {} share<=2 {}\n",
        g.summary.exact_edge_total,
        g.summary.edge_total,
        g.summary.mean_abs_delta.map_or("-".into(), |m| format!("{m:.4}")),
        g.summary.share_delta_le_2.map_or("-".into(), |s| format!("{s:.4}")),
    ));
    t
}

pub fn graph(ctx: &Context, n: usize) -> Result<Outcome> {
    let g = match graph_from_store(ctx, n)? {
        Ok(g) => g,
        Err(outcome) => return Ok(outcome),
    };
    #[derive(Serialize)]
    struct Edge {
        class_a: String,
        class_b: String,
        delta: String,
        multiplicity: usize,
    }
    #[derive(Serialize)]
    struct Doc {
        n: usize,
        classes: usize,
        summary: mutation::Summary,
        histogram: Vec<mutation::HistogramRow>,
        edges: Vec<Edge>,
    }
    let edges: Vec<Edge> = g
        .edge_records()
        .into_iter()
        .zip(&g.edges)
        .map(|(r, e)| Edge {
            class_a: r.class_a,
            class_b: r.class_b,
            delta: r.delta,
            multiplicity: e.multiplicity,
        })
        .collect();
    let rows = edges
        .iter()
        .map(|e| vec![e.class_a.clone(), e.class_b.clone(), e.delta.clone(), e.multiplicity.to_string()])
        .collect();
    let table = histogram_table(&g);
    let doc = Doc {
        n,
        classes: g.classes.len(),
        summary: g.summary.clone(),
        histogram: g.histogram_rows(),
        edges,
    };
    Ok(Outcome::new(EXIT_OK, "graph", doc)
        .with_table(table)
        .with_csv(vec!["class_a", "class_b", "delta", "multiplicity"], rows))
}

pub fn verify(ctx: &Context, n: usize) -> Result<Outcome> {
    let g = match graph_from_store(ctx, n)? {
        Ok(g) => g,
        Err(outcome) => return Ok(outcome),
    };
    let report = verify_bound(&g);
    let code = if report.holds { EXIT_OK } else { EXIT_VIOLATION };
    let rows: Vec<Vec<String>> = report
        .violating
        .iter()
        .map(|e| {
            vec![
                g.classes[e.a].canon.to_hex(),
                g.classes[e.b].canon.to_hex(),
                e.delta.map_or("NA".into(), |d| d.to_string()),
            ]
        })
        .collect();
    let mut table = format!(
        "bound |delta opt| <= {n}: {} (max delta {}, {} exact-exact edges)\n",
        if report.holds { "holds" } else { "VIOLATED" },
        report.max_delta.map_or("-".into(), |d| d.to_string()),
        g.summary.exact_edge_total
    );
    if !rows.is_empty() {
        table.push_str(&render(&["class_a", "class_b", "delta"], &rows));
    }
    Ok(Outcome::new(code, "verify", report)
        .with_table(table)
        .with_csv(vec!["class_a", "class_b", "delta"], rows))
}

pub fn report(ctx: &Context, n: usize) -> Result<Outcome> {
    let g = match graph_from_store(ctx, n)? {
        Ok(g) => g,
        Err(outcome) => return Ok(outcome),
    };
    let inexact: Vec<String> = g
        .classes
        .iter()
        .zip(&g.opt)
        .filter(|(_, o)| o.status != OptStatus::Exact)
        .map(|(c, o)| format!("{} (<= {})", c.canon.to_hex(), o.size))
        .collect();
    #[derive(Serialize)]
    struct Doc {
        n: usize,
        classes: usize,
        exact_classes: usize,
        inexact_classes: Vec<String>,
        rows: Vec<mutation::HistogramRow>,
        total: usize,
        max_delta: Option<usize>,
        max_delta_edges: Vec<(usize, usize)>,
        mean_abs_delta: Option<f64>,
        share_delta_le_2: Option<f64>,
    }
    let rows = g.histogram_rows();
    let csv_rows = rows
        .iter()
        .map(|r| vec![r.delta.to_string(), r.count.to_string(), format!("{:.1}", r.percent)])
        .collect();
    let mut table = histogram_table(&g);
    if !inexact.is_empty() {
        table.push_str(&format!("classes without exact size: {}\n", inexact.join(", ")));
    }
    let doc = Doc {
        n,
        classes: g.classes.len(),
        exact_classes: g.classes.len() - inexact.len(),
        inexact_classes: inexact,
        rows,
        total: g.summary.exact_edge_total,
        max_delta: g.summary.max_delta,
        max_delta_edges: g.summary.max_delta.map_or_else(Vec::new, |d| g.sizes_at_delta(d)),
        mean_abs_delta: g.summary.mean_abs_delta,
        share_delta_le_2: g.summary.share_delta_le_2,
    };
    Ok(Outcome::new(EXIT_OK, "report", doc)
        .with_table(table)
        .with_csv(vec!["delta", "edges", "percent"], csv_rows))
}

pub fn repair(
    input: &Path,
    flip: Option<usize>,
    target: Option<&str>,
    output: Option<&Path>,
) -> Result<Outcome> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let circuit = AigCircuit::from_aiger(&text).with_context(|| format!("parsing {}", input.display()))?;
    if let Err(v) = circuit.validate() {
        bail!("invalid circuit: {v:?}");
    }
    let n = circuit.n();
    let before = circuit.evaluate()?;
    let (out, report) = match (flip, target) {
        (Some(row), _) => {
            if row >= before.rows() {
                bail!("row {row} out of range for n = {n}");
            }
            let x = Assignment::new(n, row as u64)?;
            if before.bit(row) {
                repair_clear(&circuit, x)?
            } else {
                repair_set(&circuit, x)?
            }
        }
        (None, Some(hex)) => repair_multi(&circuit, parse_tt(hex, n)?)?,
        (None, None) => bail!("repair needs --flip or --target"),
    };
    let aag = out.to_aiger();
    if let Some(path) = output {
        fs::write(path, &aag).with_context(|| format!("writing {}", path.display()))?;
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        input_tt: String,
        report: &'a aigsense_core::RepairReport,
        witness_aag: String,
    }
    let row = vec![
        before.to_hex(),
        report.target_tt.to_hex(),
        report.flips.to_string(),
        report.input_size.to_string(),
        report.output_size.to_string(),
        report.bound.to_string(),
    ];
    let header = vec!["input", "target", "flips", "input_size", "output_size", "bound"];
    let table = render(&header, &[row.clone()]);
    let doc = Doc {
        input_tt: before.to_hex(),
        report: &report,
        witness_aag: out.to_aiger_compact(),
    };
    Ok(Outcome::new(EXIT_OK, "repair", doc)
        .with_table(table)
        .with_csv(header, vec![row]))
}

pub fn oracle(ctx: &Context, n: usize) -> Result<Outcome> {
    let store = ctx.require_store()?;
    let start = std::time::Instant::now();
    let table = brute_oracle(n)?;
    let elapsed = start.elapsed();
    let now = Utc::now();
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for (tt, e) in &table {
        let rec = ResultRecord {
            tt_hex: tt.to_hex(),
            n,
            size: e.size,
            status: OptStatus::Exact,
            exhausted_below: e.size.checked_sub(1),
            witness_aag: e.witness.to_aiger_compact(),
            backend: "oracle".into(),
            elapsed_ms: elapsed.as_millis() as u64,
            timestamp: now,
        };
        store.append(&rec)?;
        *sizes.entry(e.size).or_default() += 1;
    }
    #[derive(Serialize)]
    struct Doc {
        n: usize,
        records: usize,
        sizes: BTreeMap<usize, usize>,
        store: String,
    }
    let rows: Vec<Vec<String>> = sizes.iter().map(|(s, c)| vec![s.to_string(), c.to_string()]).collect();
    let mut t = render(&["size", "functions"], &rows);
    t.push_str(&format!("{} exact records written\n", table.len()));
    let doc = Doc {
        n,
        records: table.len(),
        sizes,
        store: store.path().display().to_string(),
    };
    Ok(Outcome::new(EXIT_OK, "oracle", doc)
        .with_table(t)
        .with_csv(vec!["size", "functions"], rows))
}

pub fn decode(ctx: &Context, model: &Path, n: usize, k: usize, hex: &str) -> Result<Outcome> {
    let tt = parse_tt(hex, n)?;
    let text = fs::read_to_string(model).with_context(|| format!("reading {}", model.display()))?;
    #[derive(Serialize)]
    struct Doc {
        tt_hex: String,
        n: usize,
        k: usize,
        satisfiable: bool,
        witness_aag: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        record: Option<ResultRecord>,
    }
    match decode_model(&text, k, n)? {
        ModelOutcome::Unsat => {
            let doc = Doc {
                tt_hex: tt.to_hex(),
                n,
                k,
                satisfiable: false,
                witness_aag: None,
                record: None,
            };
            Ok(Outcome::new(EXIT_UPPER_BOUND, "decode", doc)
                .with_table(format!("{}: no circuit with {k} gates\n", tt.to_hex())))
        }
        ModelOutcome::Circuit(c) => {
            let got = c.evaluate()?;
            if got != tt {
                bail!("model decodes to a circuit computing {got}, not {tt}");
            }
            let record = match ctx.store()? {
                Some(store) => Some(import_witness(&store, tt, &c)?),
                None => None,
            };
            let doc = Doc {
                tt_hex: tt.to_hex(),
                n,
                k,
                satisfiable: true,
                witness_aag: Some(c.to_aiger_compact()),
                record,
            };
            Ok(Outcome::new(EXIT_OK, "decode", doc)
                .with_table(format!("{}: {k}-gate circuit\n{}", tt.to_hex(), c.to_aiger())))
        }
    }
}

/// Appends a solver-found witness. It inherits the exhaustion bound already
/// proven for the function (or, for `n <= 4`, for any member of its class),
/// so a witness one gate above that bound is exact.
fn import_witness(store: &Store, tt: TruthTable, c: &AigCircuit) -> Result<ResultRecord> {
    let loaded = load_reporting(store)?;
    let exhausted = if tt.n() <= 4 {
        let index = ClassIndex::build(tt.n())?;
        class_records(&index, &loaded)
            .get(&index.class_of(tt))
            .and_then(|r| r.exhausted_below)
    } else {
        loaded.records.get(&tt).and_then(|r| r.exhausted_below)
    };
    let size = c.size();
    if exhausted.is_some_and(|e| e >= size) {
        bail!("store proves no circuit with <= {} gates, but the model has {size}", exhausted.unwrap_or(0));
    }
    let status = if exhausted == size.checked_sub(1) {
        OptStatus::Exact
    } else {
        OptStatus::UpperBound
    };
    let rec = ResultRecord {
        tt_hex: tt.to_hex(),
        n: tt.n(),
        size,
        status,
        exhausted_below: exhausted,
        witness_aag: c.to_aiger_compact(),
        backend: Backend::CnfExport.tag().into(),
        elapsed_ms: 0,
        timestamp: Utc::now(),
    };
    store.append(&rec)?;
    Ok(rec)
}
