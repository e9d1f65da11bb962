//! Command-line front end: run queries against a source file, print the
//! statistics table for a directory of examples, check that residual
//! programs preserve semantics on random inputs, and evaluate expressions.
//!
//! Exit codes: 0 success, 1 usage or parse errors, 2 empty result set,
//! 3 semantic check mismatch.

use crate::engine::{mr_scp_with, EngineConfig};
use crate::graphset::{
    count_graphs, enumerate_graphs, first_graph, graph_size, graph_to_dot, last_graph,
    min_max_size_graph, to_dot, ConfGraph, ExtremalMode, GraphSet, SizeMeasure,
};
use crate::lang::eval::{eval_cbn, EvalResult, Value};
use crate::lang::parse::{parse_exp, parse_program};
use crate::lang::print::pretty_program_with_main;
use crate::lang::{CallKind, Def, Exp, Name, Program};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QuerySpec {
    First,
    Last,
    Min(SizeMeasure),
    Max(SizeMeasure),
    Enumerate(usize),
}

impl QuerySpec {
    pub fn parse(s: &str) -> Result<QuerySpec, String> {
        match s {
            "first" => Ok(QuerySpec::First),
            "last" => Ok(QuerySpec::Last),
            "min" => Ok(QuerySpec::Min(SizeMeasure::AllNodes)),
            "max" => Ok(QuerySpec::Max(SizeMeasure::AllNodes)),
            "min-skip-unfold" => Ok(QuerySpec::Min(SizeMeasure::SkipUnfold)),
            "max-skip-unfold" => Ok(QuerySpec::Max(SizeMeasure::SkipUnfold)),
            _ => match s.strip_prefix("enumerate:") {
                Some(n) => match n.parse::<usize>() {
                    Ok(n) if n >= 1 => Ok(QuerySpec::Enumerate(n)),
                    _ => Err(format!("bad enumeration limit `{n}`")),
                },
                None => Err(format!(
                    "unknown query `{s}` (expected first, last, min, max, \
                     min-skip-unfold, max-skip-unfold or enumerate:N)"
                )),
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "mrscp", version, about = "Multi-result supercompiler")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Supercompile a file and print residual programs for a query
    Run {
        file: PathBuf,
        /// Target expression (overrides the file's `expression:` line)
        #[arg(short, long)]
        expression: Option<String>,
        /// first | last | min | max | min-skip-unfold | max-skip-unfold | enumerate:N
        #[arg(short, long, default_value = "min")]
        query: String,
        /// Write a DOT rendering (the chosen graph, or the whole set when
        /// enumerating) to this path
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Abort if the graph set grows beyond this many nodes
        #[arg(long, env = "MRSCP_MAX_NODES", default_value_t = 10_000_000)]
        max_graphset_nodes: u64,
    },
    /// Graph-size statistics for every .scp file in a directory
    Stats {
        dir: PathBuf,
        /// Machine-readable output: name,count,first,last,min,max
        #[arg(long)]
        csv: bool,
        #[arg(long, env = "MRSCP_MAX_NODES", default_value_t = 10_000_000)]
        max_graphset_nodes: u64,
    },
    /// Compare residual programs against the original on random inputs
    Check {
        file: PathBuf,
        /// Random environments per query
        #[arg(long, default_value_t = 100)]
        samples: u64,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "MRSCP_MAX_NODES", default_value_t = 10_000_000)]
        max_graphset_nodes: u64,
    },
    /// Evaluate an expression under a ground environment
    Eval {
        file: PathBuf,
        #[arg(short, long)]
        expression: String,
        /// Bindings like xs=Cons(True,Nil); repeatable
        #[arg(long = "env")]
        env: Vec<String>,
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
    },
}

pub fn main_with<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Run { file, expression, query, dot, max_graphset_nodes } => {
            cmd_run(&file, expression.as_deref(), &query, dot.as_deref(), max_graphset_nodes)
        }
        Cmd::Stats { dir, csv, max_graphset_nodes } => cmd_stats(&dir, csv, max_graphset_nodes),
        Cmd::Check { file, samples, fuel, seed, max_graphset_nodes } => {
            cmd_check(&file, samples, fuel, seed, max_graphset_nodes)
        }
        Cmd::Eval { file, expression, env, fuel } => cmd_eval(&file, &expression, &env, fuel),
    };
    match result {
        Ok(()) => 0,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

type CmdResult = Result<(), (i32, String)>;

fn load(file: &Path, expression: Option<&str>) -> Result<(Program, Exp), (i32, String)> {
    let src = std::fs::read_to_string(file)
        .map_err(|e| (1, format!("{}: {e}", file.display())))?;
    let (p, main) = parse_program(&src).map_err(|e| (1, format!("{}: {e}", file.display())))?;
    let c0 = match expression {
        Some(s) => parse_exp(s).map_err(|e| (1, format!("bad expression: {e}")))?,
        None => main.ok_or_else(|| {
            (1, format!("{} has no `expression:` line and no -e was given", file.display()))
        })?,
    };
    p.check_exp(&c0).map_err(|e| (1, e.to_string()))?;
    Ok((p, c0))
}

fn build(p: &Program, c0: &Exp, max_nodes: u64) -> Result<GraphSet, (i32, String)> {
    let cfg = EngineConfig { max_nodes };
    mr_scp_with(p, c0, &cfg).map_err(|e| (1, e.to_string()))
}

/// Applies a query, returning the selected graphs with their reported
/// sizes. Single-result queries yield at most one graph.
pub fn query_results(gs: &GraphSet, q: &QuerySpec) -> Vec<(ConfGraph, u64)> {
    match q {
        QuerySpec::First => first_graph(gs)
            .map(|g| {
                let s = graph_size(&g, SizeMeasure::AllNodes);
                vec![(g, s)]
            })
            .unwrap_or_default(),
        QuerySpec::Last => last_graph(gs)
            .map(|g| {
                let s = graph_size(&g, SizeMeasure::AllNodes);
                vec![(g, s)]
            })
            .unwrap_or_default(),
        QuerySpec::Min(m) | QuerySpec::Max(m) => {
            let mode = match q {
                QuerySpec::Min(_) => ExtremalMode::Min,
                _ => ExtremalMode::Max,
            };
            min_max_size_graph(gs, *m, mode)
                .map(|(size, pruned)| {
                    let g = first_graph(&pruned).expect("pruned set holds one graph");
                    vec![(g, size)]
                })
                .unwrap_or_default()
        }
        QuerySpec::Enumerate(n) => enumerate_graphs(gs)
            .take(*n)
            .map(|g| {
                let s = graph_size(&g, SizeMeasure::AllNodes);
                (g, s)
            })
            .collect(),
    }
}

fn cmd_run(
    file: &Path,
    expression: Option<&str>,
    query: &str,
    dot: Option<&Path>,
    max_nodes: u64,
) -> CmdResult {
    let q = QuerySpec::parse(query).map_err(|e| (1, e))?;
    let (p, c0) = load(file, expression)?;
    let gs = build(&p, &c0, max_nodes)?;
    let results = query_results(&gs, &q);
    if results.is_empty() {
        return Err((2, "the result set is empty (every development hit the whistle)".into()));
    }
    if let Some(path) = dot {
        let text = match &q {
            QuerySpec::Enumerate(_) => to_dot(&gs),
            _ => graph_to_dot(&results[0].0),
        };
        std::fs::write(path, text).map_err(|e| (1, format!("{}: {e}", path.display())))?;
    }
    for (i, (g, size)) in results.iter().enumerate() {
        if i > 0 {
            println!();
        }
        let (rp, rm) = crate::residual::residual_program(g).map_err(|e| (1, e.to_string()))?;
        print!("{}", pretty_program_with_main(&rp, &rm));
        println!("graph size: {size}");
    }
    Ok(())
}

fn cmd_stats(dir: &Path, csv: bool, max_nodes: u64) -> CmdResult {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| (1, format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scp"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err((1, format!("no .scp files in {}", dir.display())));
    }
    let mut rows = Vec::new();
    let mut failed = false;
    for f in &files {
        let name = f.file_stem().unwrap_or_default().to_string_lossy().to_string();
        let row = load(f, None).and_then(|(p, c0)| {
            let gs = build(&p, &c0, max_nodes)?;
            let count = count_graphs(&gs);
            let first = query_results(&gs, &QuerySpec::First);
            let last = query_results(&gs, &QuerySpec::Last);
            let min = query_results(&gs, &QuerySpec::Min(SizeMeasure::AllNodes));
            let max = query_results(&gs, &QuerySpec::Max(SizeMeasure::AllNodes));
            let cell = |v: &Vec<(ConfGraph, u64)>| {
                v.first().map(|(_, s)| s.to_string()).unwrap_or_else(|| "-".into())
            };
            Ok((count.to_string(), cell(&first), cell(&last), cell(&min), cell(&max)))
        });
        match row {
            Ok((count, first, last, min, max)) => rows.push((name, count, first, last, min, max)),
            Err((_, msg)) => {
                eprintln!("error: {name}: {msg}");
                failed = true;
            }
        }
    }
    if csv {
        println!("name,count,first,last,min,max");
        for (name, count, first, last, min, max) in &rows {
            println!("{name},{count},{first},{last},{min},{max}");
        }
    } else {
        println!(
            "{:<20} {:>14} {:>7} {:>7} {:>7} {:>7}",
            "example", "count", "first", "last", "min", "max"
        );
        for (name, count, first, last, min, max) in &rows {
            println!("{name:<20} {count:>14} {first:>7} {last:>7} {min:>7} {max:>7}");
        }
    }
    if failed {
        Err((1, "some examples failed".into()))
    } else {
        Ok(())
    }
}

fn cmd_check(file: &Path, samples: u64, fuel: u64, seed: u64, max_nodes: u64) -> CmdResult {
    let (p, c0) = load(file, None)?;
    let gs = build(&p, &c0, max_nodes)?;
    let gen = ValueGen::infer(&p, &c0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    println!("seed: {seed}");
    let queries = [
        ("first", QuerySpec::First),
        ("last", QuerySpec::Last),
        ("min", QuerySpec::Min(SizeMeasure::AllNodes)),
        ("min-skip-unfold", QuerySpec::Min(SizeMeasure::SkipUnfold)),
    ];
    let mut mismatches = 0u64;
    let mut compared = 0u64;
    let mut skipped = 0u64;
    for (label, q) in queries {
        let Some((g, _)) = query_results(&gs, &q).into_iter().next() else {
            println!("{label}: empty result set, skipped");
            continue;
        };
        let (rp, rm) = crate::residual::residual_program(&g).map_err(|e| (1, e.to_string()))?;
        let mut ok = 0u64;
        let mut bad = 0u64;
        let mut oof = 0u64;
        for _ in 0..samples {
            let env = gen.random_env(&mut rng);
            let a = eval_cbn(&p, &c0, &env, fuel);
            let b = eval_cbn(&rp, &rm, &env, fuel);
            if a.result == EvalResult::OutOfFuel || b.result == EvalResult::OutOfFuel {
                oof += 1;
                continue;
            }
            // stuck diagnostics mention generated function names; two stuck
            // runs count as agreement
            let agree = a.result == b.result
                || matches!(
                    (&a.result, &b.result),
                    (EvalResult::Stuck(_), EvalResult::Stuck(_))
                );
            if agree {
                ok += 1;
            } else {
                bad += 1;
                if bad == 1 {
                    eprintln!("{label}: mismatch under {env:?}: {:?} vs {:?}", a.result, b.result);
                }
            }
        }
        compared += ok + bad;
        skipped += oof;
        mismatches += bad;
        println!("{label}: {ok} ok, {bad} mismatches, {oof} out-of-fuel");
    }
    if samples == 0 {
        println!("check vacuously passed (0 trials)");
        return Ok(());
    }
    if mismatches > 0 {
        Err((3, format!("{mismatches} mismatches in {compared} comparisons")))
    } else {
        println!("check passed ({compared} comparisons, {skipped} skipped)");
        Ok(())
    }
}

fn cmd_eval(file: &Path, expression: &str, env: &[String], fuel: u64) -> CmdResult {
    let (p, _) = {
        let src = std::fs::read_to_string(file)
            .map_err(|e| (1, format!("{}: {e}", file.display())))?;
        parse_program(&src).map_err(|e| (1, format!("{}: {e}", file.display())))?
    };
    let e = parse_exp(expression).map_err(|e| (1, format!("bad expression: {e}")))?;
    let mut bindings: HashMap<Name, Value> = HashMap::new();
    for b in env {
        let (var, val) = b
            .split_once('=')
            .ok_or_else(|| (1, format!("bad binding `{b}` (expected VAR=VALUE)")))?;
        let ve = parse_exp(val).map_err(|e| (1, format!("bad value for `{var}`: {e}")))?;
        let v = Value::from_exp(&ve)
            .ok_or_else(|| (1, format!("value for `{var}` is not ground")))?;
        bindings.insert(var.to_string(), v);
    }
    let out = eval_cbn(&p, &e, &bindings, fuel);
    match out.result {
        EvalResult::Value(v) => {
            println!("{v}");
            println!("steps: {}", out.steps);
            Ok(())
        }
        EvalResult::OutOfFuel => Err((1, format!("out of fuel after {} steps", out.steps))),
        EvalResult::Stuck(m) => Err((1, format!("stuck: {m}"))),
    }
}

/// Random ground environments for the free variables of a target
/// expression. The constructor group of every variable is inferred by
/// unifying argument slots across the program; variables that are never
/// scrutinized get an opaque constant.
pub struct ValueGen {
    vars: Vec<(Name, Option<usize>)>,
    groups: Vec<Vec<Name>>,
    ctor_arity: HashMap<Name, usize>,
    /// group of each constructor argument slot, if constrained
    ctor_arg_group: HashMap<(Name, usize), Option<usize>>,
    max_depth: usize,
}

/// Union-find over slot keys.
struct Unify {
    parent: HashMap<String, String>,
}

impl Unify {
    fn new() -> Unify {
        Unify { parent: HashMap::new() }
    }

    fn find(&mut self, k: &str) -> String {
        let p = self
            .parent
            .entry(k.to_string())
            .or_insert_with(|| k.to_string())
            .clone();
        if p == k {
            return p;
        }
        let r = self.find(&p);
        self.parent.insert(k.to_string(), r.clone());
        r
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }
}

impl ValueGen {
    pub fn infer(p: &Program, c0: &Exp) -> ValueGen {
        let groups = p.ctor_groups();
        let group_of: HashMap<&str, usize> = groups
            .iter()
            .enumerate()
            .flat_map(|(i, g)| g.iter().map(move |c| (c.as_str(), i)))
            .collect();
        let mut uf = Unify::new();
        let mut ctor_arity: HashMap<Name, usize> = HashMap::new();

        // the key an expression's value flows out of
        fn key_of(e: &Exp, env: &HashMap<&str, String>, group_of: &HashMap<&str, usize>) -> Option<String> {
            match e {
                Exp::Var(v) => env.get(v.as_str()).cloned(),
                Exp::Call(CallKind::Ctr(c), _) => {
                    group_of.get(c.as_str()).map(|g| format!("g:{g}"))
                }
                Exp::Call(CallKind::Fun(f), _) => Some(format!("r:{f}")),
            }
        }
        fn walk(
            e: &Exp,
            env: &HashMap<&str, String>,
            uf: &mut Unify,
            group_of: &HashMap<&str, usize>,
            arities: &mut HashMap<Name, usize>,
        ) {
            if let Exp::Call(kind, args) = e {
                for (i, a) in args.iter().enumerate() {
                    let slot = match kind {
                        CallKind::Fun(f) => format!("p:{f}:{i}"),
                        CallKind::Ctr(c) => format!("c:{c}:{i}"),
                    };
                    if let Some(k) = key_of(a, env, group_of) {
                        uf.union(&slot, &k);
                    }
                    walk(a, env, uf, group_of, arities);
                }
                if let CallKind::Ctr(c) = kind {
                    arities.insert(c.clone(), args.len());
                }
            }
        }

        for d in p.defs() {
            match d {
                Def::Ordinary { name, params, body } => {
                    let env: HashMap<&str, String> = params
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.as_str(), format!("p:{name}:{i}")))
                        .collect();
                    if let Some(k) = key_of(body, &env, &group_of) {
                        uf.union(&format!("r:{name}"), &k);
                    }
                    walk(body, &env, &mut uf, &group_of, &mut ctor_arity);
                }
                Def::PatternMatch { name, clauses } => {
                    if let Some(g) = group_of.get(clauses[0].pat.ctr.as_str()) {
                        uf.union(&format!("p:{name}:0"), &format!("g:{g}"));
                    }
                    for cl in clauses {
                        ctor_arity.insert(cl.pat.ctr.clone(), cl.pat.vars.len());
                        let mut env: HashMap<&str, String> = cl
                            .pat
                            .vars
                            .iter()
                            .enumerate()
                            .map(|(i, v)| (v.as_str(), format!("c:{}:{i}", cl.pat.ctr)))
                            .collect();
                        env.extend(
                            cl.params
                                .iter()
                                .enumerate()
                                .map(|(i, v)| (v.as_str(), format!("p:{name}:{}", i + 1))),
                        );
                        if let Some(k) = key_of(&cl.body, &env, &group_of) {
                            uf.union(&format!("r:{name}"), &k);
                        }
                        walk(&cl.body, &env, &mut uf, &group_of, &mut ctor_arity);
                    }
                }
            }
        }
        let free = crate::lang::free_vars(c0);
        let env: HashMap<&str, String> =
            free.iter().map(|v| (v.as_str(), format!("v:{v}"))).collect();
        walk(c0, &env, &mut uf, &group_of, &mut ctor_arity);

        let group_roots: Vec<String> =
            (0..groups.len()).map(|i| uf.find(&format!("g:{i}"))).collect();
        let class_group = |uf: &mut Unify, key: &str| -> Option<usize> {
            let r = uf.find(key);
            group_roots.iter().position(|gr| *gr == r)
        };
        let vars = free
            .iter()
            .map(|v| (v.clone(), class_group(&mut uf, &format!("v:{v}"))))
            .collect();
        let mut ctor_arg_group = HashMap::new();
        for (c, n) in &ctor_arity {
            for i in 0..*n {
                let g = class_group(&mut uf, &format!("c:{c}:{i}"));
                ctor_arg_group.insert((c.clone(), i), g);
            }
        }
        ValueGen { vars, groups, ctor_arity, ctor_arg_group, max_depth: 8 }
    }

    fn gen(&self, group: Option<usize>, depth: usize, rng: &mut impl Rng) -> Value {
        let Some(g) = group else {
            return Value::new("U", vec![]);
        };
        let ctors = &self.groups[g];
        // near the depth bound, prefer constructors that do not recurse
        // into the same group
        let recursive = |c: &Name| {
            (0..self.ctor_arity.get(c).copied().unwrap_or(0))
                .any(|i| self.ctor_arg_group.get(&(c.clone(), i)) == Some(&Some(g)))
        };
        let pick: Vec<&Name> = if depth >= self.max_depth {
            let base: Vec<&Name> = ctors.iter().filter(|c| !recursive(c)).collect();
            if base.is_empty() {
                // every constructor of the group recurses into it, so the
                // value cannot bottom out; cut it off opaquely
                return Value::new("U", vec![]);
            }
            base
        } else {
            ctors.iter().collect()
        };
        let c = pick[rng.gen_range(0..pick.len())];
        let n = self.ctor_arity.get(c).copied().unwrap_or(0);
        let args = (0..n)
            .map(|i| {
                let g = self.ctor_arg_group.get(&(c.clone(), i)).copied().flatten();
                self.gen(g, depth + 1, rng)
            })
            .collect();
        Value { ctr: c.clone(), args }
    }

    pub fn random_env(&self, rng: &mut impl Rng) -> HashMap<Name, Value> {
        self.vars
            .iter()
            .map(|(v, g)| (v.clone(), self.gen(*g, 0, rng)))
            .collect()
    }
}
