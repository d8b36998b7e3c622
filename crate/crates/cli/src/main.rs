//! Command-line front end for the #DQBF counter.

mod fail;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dqcount::bdd::{catch_abort, Manager};
use dqcount::counter::component::decompose;
use dqcount::counter::support::support_sets;
use dqcount::counter::{count, CountOptions, CountReport, Method, Strategy};
use dqcount::expansion::{self, ExpansionConfig};
use dqcount::formula::{parse, serialize_circuit, InputFormat};
use dqcount::generators::{self, RandomGeneralSpec, RandomSpec};
use dqcount::reachability::Implication;
use dqcount::reductions::{extended_to_2dqbf, fomc_encode, parse_fo, to_extended_pair, to_uniform};
use dqcount::{BigCount, Dqbf};

use fail::{Failure, Kind};

#[derive(Parser)]
#[command(name = "dqcount", version, about = "Exact model counting for DQBF")]
struct Cli {
    /// Report format on standard output.
    #[arg(long, value_enum, default_value = "json", global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Count the Skolem function tuples of an instance.
    Count {
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Include every 1-DQBF slice counted during enumeration.
        #[arg(long)]
        record_slices: bool,
    },
    /// Count with two methods and check that they agree.
    Compare {
        input: PathBuf,
        /// The two methods to run, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "symbolic,expansion")]
        methods: Vec<MethodArg>,
        #[command(flatten)]
        run: RunArgs,
        /// Adds one to the second count (exercises the mismatch path).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Write the expansion as DIMACS CNF.
    Expand {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// List each clause over only the existentials it constrains.
        #[arg(long)]
        reduce: bool,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Satisfiability, support sizes and component structure of a 2-DQBF.
    Info {
        input: PathBuf,
        /// Write the implication graph and its closure as Graphviz DOT.
        #[arg(long)]
        dump_bdd: Option<PathBuf>,
        #[command(flatten)]
        budgets: Budgets,
    },
    /// Transform an instance while preserving its count.
    Reduce {
        #[command(subcommand)]
        kind: ReduceCommand,
    },
    /// Encode a first-order sentence as a DQBF.
    Encode {
        #[command(subcommand)]
        kind: EncodeCommand,
    },
    /// Emit benchmark instances.
    Generate {
        #[command(subcommand)]
        family: GenerateCommand,
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// A uniform DQBF with the same count.
    Uniform {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Two 2-DQBFs whose counts differ by the input's count.
    #[command(name = "to-2dqbf")]
    To2dqbf {
        input: PathBuf,
        /// Directory for the two instances and the manifest.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum EncodeCommand {
    /// Models of a universal sentence over a domain of size 2^n.
    Fomc {
        input: PathBuf,
        #[arg(long)]
        log_domain: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenerateCommand {
    #[command(name = "two-col")]
    TwoCol {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    #[command(name = "ind-set")]
    IndSet {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    /// A random 2-DQBF.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        w1: usize,
        #[arg(long)]
        w2: usize,
        #[arg(long, default_value_t = 4)]
        gates: usize,
        /// Conjoin the uniformity guard when the widths match.
        #[arg(long)]
        guard: bool,
    },
    /// A random DQBF with one existential per listed width.
    #[command(name = "random-general")]
    RandomGeneral {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        gates: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Symbolic,
    Expansion,
    Brute,
    Reduction,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Auto,
            MethodArg::Symbolic => Method::Symbolic,
            MethodArg::Expansion => Method::Expansion,
            MethodArg::Brute => Method::Brute,
            MethodArg::Reduction => Method::Reduction,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Auto,
    Enumerate,
    Branch,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Enumerate => Strategy::Enumerate,
            StrategyArg::Branch => Strategy::Branch,
        }
    }
}

/// Resource bounds; each can also be set through the environment.
#[derive(Args, Clone)]
struct Budgets {
    /// Largest Σ 2^{|z̄_i|} the expansion accepts.
    #[arg(long, env = "DQCOUNT_EXPANSION_CELLS", default_value_t = expansion::DEFAULT_MAX_CELLS)]
    expansion_cells: u128,
    #[arg(long, env = "DQCOUNT_EXPANSION_CLAUSES", default_value_t = expansion::DEFAULT_MAX_CLAUSES)]
    expansion_clauses: u64,
    /// Largest Σ 2^{|z̄_i|} brute force accepts.
    #[arg(long, env = "DQCOUNT_BRUTE_CELLS", default_value_t = dqcount::counter::oracle::BRUTE_CELL_LIMIT)]
    brute_cells: u32,
    /// Diagram node budget.
    #[arg(long, env = "DQCOUNT_MAX_NODES")]
    max_nodes: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long, env = "DQCOUNT_TIMEOUT")]
    timeout: Option<f64>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    /// Threads for counting independent components.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Count without the candidate pruning conjuncts.
    #[arg(long)]
    no_pruning: bool,
    #[command(flatten)]
    budgets: Budgets,
}

impl Budgets {
    fn timeout(&self) -> Result<Option<Duration>, Failure> {
        match self.timeout {
            None => Ok(None),
            Some(t) if t > 0.0 && t.is_finite() => Ok(Some(Duration::from_secs_f64(t))),
            Some(t) => Err(Failure::input(format!("timeout must be positive, got {t}"))),
        }
    }

    fn check(&self) -> Result<(), Failure> {
        if self.expansion_cells == 0 || self.expansion_clauses == 0 || self.brute_cells == 0 || self.max_nodes == Some(0) {
            return Err(Failure::input("budgets must be positive"));
        }
        self.timeout().map(|_| ())
    }

    fn expansion(&self) -> ExpansionConfig {
        ExpansionConfig {
            max_cells: self.expansion_cells,
            max_clauses: self.expansion_clauses,
            ..ExpansionConfig::default()
        }
    }
}

impl RunArgs {
    fn options(&self, interrupt: Arc<AtomicBool>) -> Result<CountOptions, Failure> {
        self.budgets.check()?;
        if self.jobs == 0 {
            return Err(Failure::input("--jobs must be at least 1"));
        }
        let b = &self.budgets;
        Ok(CountOptions {
            method: self.method.into(),
            strategy: self.strategy.into(),
            pruning: !self.no_pruning,
            jobs: self.jobs,
            timeout: b.timeout()?,
            max_nodes: b.max_nodes,
            expansion_cells: b.expansion_cells,
            expansion_clauses: b.expansion_clauses,
            brute_cells: b.brute_cells,
            interrupt: Some(interrupt),
            ..CountOptions::default()
        })
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Dqbf, Failure> {
    let text = read(path)?;
    parse(&text, InputFormat::detect(&text)).map_err(|e| Failure::from(e).with_path(&path.display().to_string()))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Writes `text` to `output` and returns a manifest, or returns the text
/// itself for standard output.
fn emit(kind: &str, text: String, output: Option<&Path>, extra: Value) -> Result<Output, Failure> {
    match output {
        None => Ok(Output::Raw(text)),
        Some(p) => {
            write(p, &text)?;
            let mut m = json!({ "schema": 1, "kind": kind, "files": [p.display().to_string()] });
            merge(&mut m, extra);
            Ok(Output::Report(m))
        }
    }
}

fn merge(into: &mut Value, extra: Value) {
    if let (Some(a), Value::Object(b)) = (into.as_object_mut(), extra) {
        a.extend(b);
    }
}

enum Output {
    Report(Value),
    Raw(String),
}

fn count_job(d: Dqbf, opts: CountOptions) -> Result<CountReport, Failure> {
    let timeout = opts.timeout;
    let interrupt = opts.interrupt.clone().unwrap_or_default();
    run::limited(timeout, interrupt, move || Ok(count(&d, &opts)?))
}

fn to_json(v: &CountReport) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::new(Kind::Internal, e.to_string()))
}

fn do_count(input: &Path, run: &RunArgs, record_slices: bool) -> Result<Output, Failure> {
    let d = load(input)?;
    let mut opts = run.options(Arc::default())?;
    opts.record_slices = record_slices;
    Ok(Output::Report(to_json(&count_job(d, opts)?)?))
}

fn do_compare(input: &Path, methods: &[MethodArg], run: &RunArgs, inject_fault: bool) -> Result<Output, Failure> {
    if methods.len() != 2 {
        return Err(Failure::input(format!("compare takes two methods, got {}", methods.len())));
    }
    let d = load(input)?;
    let mut runs = Vec::new();
    let mut counts: Vec<BigCount> = Vec::new();
    for (i, m) in methods.iter().enumerate() {
        let mut opts = run.options(Arc::default())?;
        opts.method = (*m).into();
        let r = count_job(d.clone(), opts)?;
        let mut c = r.count;
        if inject_fault && i == 1 {
            c = c.add(&BigCount::one());
        }
        runs.push(json!({ "method": r.method, "count": c, "elapsed_ms": r.elapsed_ms }));
        counts.push(c);
    }
    let equal = counts.windows(2).all(|w| w[0] == w[1]);
    let report = json!({
        "schema": 1,
        "verdict": if equal { "EQUAL" } else { "MISMATCH" },
        "runs": runs,
    });
    if equal {
        return Ok(Output::Report(report));
    }
    let names: Vec<&str> = methods.iter().map(|m| Method::from(*m).name()).collect();
    let mut f = Failure::new(Kind::Mismatch, format!("{} disagree", names.join(" and ")));
    f.detail = Some(report);
    Err(f)
}

fn do_expand(input: &Path, output: Option<&Path>, reduce: bool, budgets: &Budgets) -> Result<Output, Failure> {
    budgets.check()?;
    let d = load(input)?;
    let cfg = ExpansionConfig {
        reduce,
        ..budgets.expansion()
    };
    let interrupt = Arc::new(AtomicBool::new(false));
    let flag = interrupt.clone();
    let timeout = budgets.timeout()?;
    let (text, vars, clauses) = run::limited(timeout, interrupt, move || {
        let mut cfg = cfg;
        cfg.limits.deadline = timeout.map(|t| std::time::Instant::now() + t);
        cfg.limits.interrupt = Some(flag);
        let (cnf, table) = expansion::expand(&d, &cfg)?;
        Ok((expansion::to_dimacs(&d, &cnf, &table), cnf.num_vars, cnf.clauses.len()))
    })?;
    emit("expansion", text, output, json!({ "vars": vars, "clauses": clauses }))
}

fn do_info(input: &Path, dump: Option<&Path>, budgets: &Budgets) -> Result<Output, Failure> {
    budgets.check()?;
    let d = load(input)?;
    d.require_k(2)?;
    let timeout = budgets.timeout()?;
    let interrupt = Arc::new(AtomicBool::new(false));
    let flag = interrupt.clone();
    let max_nodes = budgets.max_nodes;
    let (report, dot) = run::limited(timeout, interrupt, move || {
        let mut mgr = Manager::new();
        let mut limits = mgr.limits().clone();
        limits.deadline = timeout.map(|t| std::time::Instant::now() + t);
        limits.max_nodes = max_nodes;
        limits.interrupt = Some(flag);
        mgr.set_limits(limits);
        let out = catch_abort(|| -> Result<(Value, String), Failure> {
            let mut imp = Implication::build(&mut mgr, &d)?;
            let tr = imp.closure(&mut mgr);
            let satisfiable = imp.is_satisfiable(&mut mgr);
            let support = support_sets(&mut mgr, &imp)?;
            let components = decompose(&mut mgr, &imp, support.literals)?.len();
            let report = json!({
                "schema": 1,
                "satisfiable": satisfiable,
                "support_cells": [support.sizes[0].to_string(), support.sizes[1].to_string()],
                "nonsupport_exponent": support.nonsupport_exponent.to_string(),
                "components": components,
                "closure_iterations": imp.closure_iterations(),
            });
            let dot = mgr.to_dot(
                &[("edges".to_string(), imp.edges), ("closure".to_string(), tr)],
                &|v| format!("v{v}"),
            );
            Ok((report, dot))
        });
        out.map_err(|a| Failure::from(dqcount::counter::CountError::from(a)))?
    })?;
    if let Some(p) = dump {
        write(p, &dot)?;
    }
    Ok(Output::Report(report))
}

fn do_reduce(kind: &ReduceCommand) -> Result<Output, Failure> {
    match kind {
        ReduceCommand::Uniform { input, output } => {
            let d = load(input)?;
            let u = to_uniform(&d)?;
            emit("uniform", serialize_circuit(&u), output.as_deref(), json!({ "k": u.k(), "n": u.n() }))
        }
        ReduceCommand::To2dqbf { input, out_dir } => {
            let d = load(input)?;
            let (p1, p2) = to_extended_pair(&d)?;
            let f1 = extended_to_2dqbf(&p1)?;
            let f2 = extended_to_2dqbf(&p2)?;
            std::fs::create_dir_all(out_dir)
                .map_err(|e| Failure::input(format!("{}: {e}", out_dir.display())))?;
            let names = ["minuend.dqcir", "subtrahend.dqcir"];
            for (name, f) in names.iter().zip([&f1, &f2]) {
                write(&out_dir.join(name), &serialize_circuit(f))?;
            }
            let manifest = json!({
                "schema": 1,
                "kind": "to-2dqbf",
                "source": input.display().to_string(),
                "minuend": names[0],
                "subtrahend": names[1],
                "count": format!("#{} - #{}", names[0], names[1]),
                "n": f1.n(),
            });
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            write(&out_dir.join("manifest.json"), &(text + "\n"))?;
            Ok(Output::Report(manifest))
        }
    }
}

fn do_encode(kind: &EncodeCommand) -> Result<Output, Failure> {
    match kind {
        EncodeCommand::Fomc {
            input,
            log_domain,
            output,
        } => {
            let s = parse_fo(&read(input)?).map_err(|e| Failure::from(e).with_path(&input.display().to_string()))?;
            let d = fomc_encode(&s, *log_domain)?;
            emit("fomc", serialize_circuit(&d), output.as_deref(), json!({ "log_domain": log_domain }))
        }
    }
}

fn do_generate(family: &GenerateCommand, output: Option<&Path>) -> Result<Output, Failure> {
    let d = match family {
        GenerateCommand::TwoCol { n, k } => generators::two_col(*n, *k)?,
        GenerateCommand::IndSet { n, k } => generators::ind_set(*n, *k)?,
        GenerateCommand::Random {
            seed,
            n,
            w1,
            w2,
            gates,
            guard,
        } => generators::random(&RandomSpec {
            seed: *seed,
            n: *n,
            w1: *w1,
            w2: *w2,
            gates: *gates,
            guard: *guard,
        })?,
        GenerateCommand::RandomGeneral { seed, n, widths, gates } => {
            generators::random_general(&RandomGeneralSpec {
                seed: *seed,
                n: *n,
                widths: widths.clone(),
                gates: *gates,
            })?
        }
    };
    emit("instance", serialize_circuit(&d), output, json!({ "n": d.n(), "k": d.k() }))
}

fn dispatch(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Count {
            input,
            run,
            record_slices,
        } => do_count(input, run, *record_slices),
        Command::Compare {
            input,
            methods,
            run,
            inject_fault,
        } => do_compare(input, methods, run, *inject_fault),
        Command::Expand {
            input,
            output,
            reduce,
            budgets,
        } => do_expand(input, output.as_deref(), *reduce, budgets),
        Command::Info {
            input,
            dump_bdd,
            budgets,
        } => do_info(input, dump_bdd.as_deref(), budgets),
        Command::Reduce { kind } => do_reduce(kind),
        Command::Encode { kind } => do_encode(kind),
        Command::Generate { family, output } => do_generate(family, output.as_deref()),
    }
}

/// `key: value` lines, with counts in decimal when they fit.
fn render_text(v: &Value) -> String {
    fn scalar(v: &Value) -> String {
        match v {
            Value::String(s) => s.clone(),
            Value::Object(m) if m.contains_key("sparse") => match m.get("decimal") {
                Some(Value::String(d)) => d.clone(),
                _ => {
                    let exps: Vec<String> = m["sparse"]
                        .as_array()
                        .map(|a| a.iter().rev().map(|e| format!("2^{}", scalar(e))).collect())
                        .unwrap_or_default();
                    exps.join(" + ")
                }
            },
            other => other.to_string(),
        }
    }
    let mut out = String::new();
    if let Value::Object(m) = v {
        for (k, v) in m {
            if k == "runs" {
                for r in v.as_array().into_iter().flatten() {
                    out += &format!("{}: {} ({} ms)\n", scalar(&r["method"]), scalar(&r["count"]), r["elapsed_ms"]);
                }
            } else {
                out += &format!("{k}: {}\n", scalar(v));
            }
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // Help and version requests.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("{}", Failure::input(first).to_json());
            return ExitCode::from(Kind::Input.exit_code() as u8);
        }
    };
    match dispatch(&cli) {
        Ok(Output::Raw(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(Output::Report(v)) => {
            match cli.format {
                Format::Json => println!("{v}"),
                Format::Text => print!("{}", render_text(&v)),
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Some(d) = f.detail.as_ref().filter(|_| f.kind == Kind::Mismatch) {
                match cli.format {
                    Format::Json => println!("{d}"),
                    Format::Text => print!("{}", render_text(d)),
                }
            }
            eprintln!("{}", f.to_json());
            ExitCode::from(f.kind.exit_code() as u8)
        }
    }
}
