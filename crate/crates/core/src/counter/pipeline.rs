//! The per-component counting loop and the method dispatch behind [`count`].

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use serde::Serialize;

use super::branching;
use super::candidates::{self, EnumOutcome, EnumerateConfig, Slice, VarPool};
use super::component::{decompose, Component};
use super::oracle;
use super::support::{support_sets, SupportReport};
use super::CountError;
use crate::bdd::{catch_abort, Bdd, BddAbort, Limits, Manager};
use crate::bigcount::BigCount;
use crate::expansion::{self, ExpansionConfig};
use crate::formula::Dqbf;
use crate::reachability::Implication;
use crate::reductions::{self, ReductionError};

/// Stack size for threads running the symbolic pipeline; branching
/// recurses once per decided cell.
const STACK_SIZE: usize = 512 << 20;

/// Enumeration budget tried by [`Strategy::Auto`] before it falls back to
/// branching.
pub const AUTO_MAX_CANDIDATES: u64 = 64;
pub const AUTO_MAX_ITERATIONS: u64 = 512;
/// Diagram nodes the enumeration attempt of [`Strategy::Auto`] may create.
pub const AUTO_MAX_NEW_NODES: usize = 1 << 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Symbolic,
    Expansion,
    Brute,
    /// `#Φ1 − #Φ2` through the extended 2-DQBF pair.
    Reduction,
    Auto,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Symbolic => "symbolic",
            Method::Expansion => "expansion",
            Method::Brute => "brute",
            Method::Reduction => "reduction",
            Method::Auto => "auto",
        }
    }
}

/// How the symbolic method counts a single component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Candidate enumeration.
    Enumerate,
    /// Case splitting on literals.
    Branch,
    /// Enumeration under a small budget, then branching.
    Auto,
}

#[derive(Debug, Clone)]
pub struct CountOptions {
    pub method: Method,
    pub strategy: Strategy,
    pub pruning: bool,
    pub smaller_side: bool,
    pub max_candidates: Option<u64>,
    pub max_iterations: Option<u64>,
    pub jobs: usize,
    pub timeout: Option<Duration>,
    pub max_nodes: Option<usize>,
    pub expansion_cells: u128,
    pub expansion_clauses: u64,
    pub brute_cells: u32,
    pub record_slices: bool,
    pub interrupt: Option<Arc<AtomicBool>>,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            method: Method::Auto,
            strategy: Strategy::Auto,
            pruning: true,
            smaller_side: true,
            max_candidates: None,
            max_iterations: None,
            jobs: 1,
            timeout: None,
            max_nodes: None,
            expansion_cells: expansion::DEFAULT_MAX_CELLS,
            expansion_clauses: expansion::DEFAULT_MAX_CLAUSES,
            brute_cells: oracle::BRUTE_CELL_LIMIT,
            record_slices: false,
            interrupt: None,
        }
    }
}

impl CountOptions {
    pub fn with_method(method: Method) -> Self {
        CountOptions {
            method,
            ..CountOptions::default()
        }
    }

    fn limits(&self, start: Instant) -> Limits {
        Limits {
            deadline: self.timeout.map(|t| start + t),
            max_nodes: self.max_nodes,
            interrupt: self.interrupt.clone(),
        }
    }

    fn expansion_config(&self, limits: Limits) -> ExpansionConfig {
        ExpansionConfig {
            max_cells: self.expansion_cells,
            max_clauses: self.expansion_clauses,
            limits,
            ..ExpansionConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    pub cells1: u64,
    pub cells2: u64,
    pub candidates_enumerated: u64,
    pub blocked: u64,
    pub n_c_sparse: Vec<String>,
    #[serde(skip)]
    pub n_c: BigCount,
    pub strategy: Strategy,
    /// Existential (1 or 2) whose restrictions were enumerated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionReport {
    pub support_cells: u64,
    pub clauses: u64,
}

/// The two counts whose difference is the result of [`Method::Reduction`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub minuend: BigCount,
    pub subtrahend: BigCount,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountReport {
    pub schema: u32,
    pub count: BigCount,
    pub satisfiable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support: Option<SupportReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<ComponentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ExpansionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slices: Option<Vec<Slice>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction: Option<ReductionReport>,
    pub method: Method,
    pub elapsed_ms: u64,
}

impl CountReport {
    fn plain(count: BigCount, method: Method) -> Self {
        CountReport {
            schema: 1,
            satisfiable: !count.is_zero(),
            count,
            support: None,
            components: Vec::new(),
            closure_iterations: None,
            expansion: None,
            slices: None,
            reduction: None,
            method,
            elapsed_ms: 0,
        }
    }
}

/// Counts the models of `d` with the method in `opts`.
pub fn count(d: &Dqbf, opts: &CountOptions) -> Result<CountReport, CountError> {
    let start = Instant::now();
    let limits = opts.limits(start);
    let mut report = match opts.method {
        Method::Brute => CountReport::plain(
            oracle::brute_count_with_limit(d, opts.brute_cells)?,
            Method::Brute,
        ),
        Method::Expansion => by_expansion(d, opts, limits)?,
        Method::Symbolic => symbolic(d, opts, limits)?,
        Method::Auto => match by_expansion(d, opts, limits.clone()) {
            Err(CountError::Budget { .. }) if d.is_2dqbf() => symbolic(d, opts, limits)?,
            Err(CountError::Budget { .. }) if d.k() > 2 => by_reduction(d, opts)?,
            other => other?,
        },
        Method::Reduction => by_reduction(d, opts)?,
    };
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn by_expansion(d: &Dqbf, opts: &CountOptions, limits: Limits) -> Result<CountReport, CountError> {
    let e = expansion::count_via_expansion(d, &opts.expansion_config(limits))?;
    let mut r = CountReport::plain(e.count, Method::Expansion);
    r.expansion = Some(ExpansionReport {
        support_cells: e.support_cells,
        clauses: e.clauses,
    });
    Ok(r)
}

fn by_reduction(d: &Dqbf, opts: &CountOptions) -> Result<CountReport, CountError> {
    let g = reductions::count_general(d, opts).map_err(|e| match e {
        ReductionError::Count(c) => c,
        other => CountError::Reduction(Box::new(other)),
    })?;
    let mut r = CountReport::plain(g.count, Method::Reduction);
    r.reduction = Some(ReductionReport {
        minuend: g.minuend.count,
        subtrahend: g.subtrahend.count,
    });
    Ok(r)
}

/// Runs `f` on a thread with a large stack, re-raising its panics here.
pub(crate) fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        let h = std::thread::Builder::new()
            .stack_size(STACK_SIZE)
            .spawn_scoped(s, f)
            .expect("spawning a counting thread");
        match h.join() {
            Ok(v) => v,
            Err(p) => std::panic::resume_unwind(p),
        }
    })
}

fn symbolic(d: &Dqbf, opts: &CountOptions, limits: Limits) -> Result<CountReport, CountError> {
    d.require_k(2)?;
    with_big_stack(|| {
        let mut mgr = Manager::new();
        mgr.set_limits(limits.clone());
        catch_abort(|| symbolic_in(d, opts, &mut mgr, &limits))?
    })
}

fn symbolic_in(
    d: &Dqbf,
    opts: &CountOptions,
    mgr: &mut Manager,
    limits: &Limits,
) -> Result<CountReport, CountError> {
    let mut imp = Implication::build(mgr, d)?;
    let tr = imp.closure(mgr);
    let satisfiable = imp.is_satisfiable(mgr);
    let support = support_sets(mgr, &imp)?;
    let mut report = CountReport::plain(BigCount::zero(), Method::Symbolic);
    report.satisfiable = satisfiable;
    report.support = Some(support.report());
    report.closure_iterations = Some(imp.closure_iterations());
    if !satisfiable {
        return Ok(report);
    }
    let comps = decompose(mgr, &imp, support.literals)?;
    let results = if opts.jobs > 1 && comps.len() > 1 {
        count_parallel(d, opts, mgr, tr, &comps, limits)?
    } else {
        let mut pool = VarPool::default();
        comps
            .iter()
            .map(|c| count_one(mgr, &imp, tr, c, &mut pool, opts))
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut n = BigCount::one();
    let mut slices = Vec::new();
    for (r, s) in results {
        n = n.mul(&r.n_c);
        report.components.push(r);
        slices.extend(s);
    }
    report.count = n.shl(&support.nonsupport_exponent);
    if opts.record_slices {
        report.slices = Some(slices);
    }
    Ok(report)
}

fn count_one(
    mgr: &mut Manager,
    imp: &Implication,
    tr: Bdd,
    comp: &Component,
    pool: &mut VarPool,
    opts: &CountOptions,
) -> Result<(ComponentReport, Vec<Slice>), CountError> {
    let cells = |i: usize| comp.sizes[i].to_u64().expect("cell counts fit in 64 bits");
    let mut report = ComponentReport {
        cells1: cells(0),
        cells2: cells(1),
        candidates_enumerated: 0,
        blocked: 0,
        n_c_sparse: Vec::new(),
        n_c: BigCount::zero(),
        strategy: Strategy::Branch,
        side: None,
    };
    let (max_c, max_i) = match opts.strategy {
        Strategy::Branch => (Some(0), Some(0)),
        Strategy::Enumerate => (opts.max_candidates, opts.max_iterations),
        Strategy::Auto => (
            Some(opts.max_candidates.unwrap_or(AUTO_MAX_CANDIDATES)),
            Some(opts.max_iterations.unwrap_or(AUTO_MAX_ITERATIONS)),
        ),
    };
    if opts.strategy != Strategy::Branch {
        let cfg = EnumerateConfig {
            pruning: opts.pruning,
            smaller_side: opts.smaller_side,
            max_candidates: max_c,
            max_iterations: max_i,
            record_slices: opts.record_slices,
        };
        let outcome = if opts.strategy == Strategy::Auto {
            let saved = mgr.limits().clone();
            let cap = mgr.total_nodes() + AUTO_MAX_NEW_NODES;
            let own = saved.max_nodes.is_some_and(|m| m <= cap);
            mgr.set_limits(Limits {
                max_nodes: Some(saved.max_nodes.map_or(cap, |m| m.min(cap))),
                ..saved.clone()
            });
            let r = catch_abort(|| candidates::count_component(mgr, imp, tr, comp, pool, &cfg));
            mgr.set_limits(saved);
            match r {
                Ok(r) => r?,
                Err(BddAbort::NodeLimit(_)) if !own => EnumOutcome::OverBudget {
                    candidates: 0,
                    iterations: 0,
                },
                Err(e) => return Err(e.into()),
            }
        } else {
            candidates::count_component(mgr, imp, tr, comp, pool, &cfg)?
        };
        match outcome {
            EnumOutcome::Counted(e) => {
                report.candidates_enumerated = e.candidates;
                report.blocked = e.blocked;
                report.n_c_sparse = sparse(&e.n_c);
                report.n_c = e.n_c;
                report.strategy = Strategy::Enumerate;
                report.side = Some(e.side as u8 + 1);
                return Ok((report, e.slices));
            }
            EnumOutcome::OverBudget { candidates, iterations } => {
                if opts.strategy == Strategy::Enumerate {
                    return Err(CountError::Budget {
                        what: "candidate enumeration".into(),
                        needed: format!("more than {candidates} candidates / {iterations} iterations"),
                        limit: format!("{max_c:?} candidates / {max_i:?} iterations"),
                    });
                }
            }
        }
    }
    let b = branching::count_component(mgr, imp, tr, comp)?;
    report.n_c_sparse = sparse(&b.n_c);
    report.n_c = b.n_c;
    Ok((report, Vec::new()))
}

fn sparse(n: &BigCount) -> Vec<String> {
    n.exponents().iter().map(|e| e.to_string()).collect()
}

type ComponentResult = (ComponentReport, Vec<Slice>);

/// Counts components on `opts.jobs` workers. Each worker rebuilds the
/// literal space in its own manager; the layout is deterministic, so the
/// exported diagrams import with the same variable meaning.
fn count_parallel(
    d: &Dqbf,
    opts: &CountOptions,
    mgr: &Manager,
    tr: Bdd,
    comps: &[Component],
    limits: &Limits,
) -> Result<Vec<ComponentResult>, CountError> {
    let mut roots = vec![tr];
    roots.extend(comps.iter().map(|c| c.lits));
    let portable = mgr.export(&roots);
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<Result<ComponentResult, CountError>>>> =
        Mutex::new(vec![None; comps.len()]);
    let workers = opts.jobs.min(comps.len());
    std::thread::scope(|s| {
        let mut handles = Vec::new();
        for _ in 0..workers {
            let h = std::thread::Builder::new()
                .stack_size(STACK_SIZE)
                .spawn_scoped(s, || {
                    let mut m = Manager::new();
                    m.set_limits(limits.clone());
                    let run = catch_abort(|| -> Result<(), CountError> {
                        let imp = Implication::build(&mut m, d)?;
                        let imported = m.import(&portable);
                        let tr = imported[0];
                        let mut pool = VarPool::default();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= comps.len() || failed.load(Ordering::Relaxed) {
                                return Ok(());
                            }
                            let c = Component::from_lits(&mut m, &imp, imported[i + 1], comps[i].seed)?;
                            let r = count_one(&mut m, &imp, tr, &c, &mut pool, opts);
                            if r.is_err() {
                                failed.store(true, Ordering::Relaxed);
                            }
                            slots.lock().expect("result slots")[i] = Some(r);
                        }
                    });
                    if let Err(e) = run.map_err(CountError::from).and_then(|r| r) {
                        failed.store(true, Ordering::Relaxed);
                        slots.lock().expect("result slots").push(Some(Err(e)));
                    }
                })
                .expect("spawning a counting worker");
            handles.push(h);
        }
        for h in handles {
            if let Err(p) = h.join() {
                std::panic::resume_unwind(p);
            }
        }
    });
    let slots = slots.into_inner().expect("result slots");
    if let Some(e) = slots.iter().flatten().find_map(|r| r.as_ref().err()) {
        return Err(e.clone());
    }
    Ok(slots
        .into_iter()
        .take(comps.len())
        .map(|r| r.expect("every component was counted").expect("errors handled above"))
        .collect())
}
