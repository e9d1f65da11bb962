//! Turning a selected configuration graph back into a runnable program.
//!
//! Fold targets become recursive function definitions; case and let nodes
//! first land in an intermediate language that still has them as expression
//! forms, then get lifted out into fresh top-level definitions (much like
//! lambda lifting). A final cleanup inlines cheap generated helpers and
//! merges duplicated definitions.

use crate::graphset::ConfGraph;
use crate::lang::{
    free_vars, substitute, CallKind, Clause, Def, Exp, LangError, Name, Pattern, Program, Subst,
};
use std::collections::{HashMap, HashSet};

/// The core language extended with case and let expressions. Case
/// scrutinees are always variables: driving only ever case-analyzes a free
/// variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtExp {
    Var(Name),
    Call(CallKind, Vec<ExtExp>),
    Case(Name, Vec<(Pattern, ExtExp)>),
    Let(Vec<(Name, ExtExp)>, Box<ExtExp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtDef {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: ExtExp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtProgram {
    pub defs: Vec<ExtDef>,
    pub main: ExtExp,
}

fn ext_of_exp(e: &Exp) -> ExtExp {
    match e {
        Exp::Var(v) => ExtExp::Var(v.clone()),
        Exp::Call(k, args) => ExtExp::Call(k.clone(), args.iter().map(ext_of_exp).collect()),
    }
}

/// A node's position in the graph: the child indices on the way down from
/// the root. Used both to identify fold targets and to name the functions
/// generated for them.
type Path = Vec<usize>;

fn def_name(path: &Path) -> Name {
    let mut s = String::from("f");
    for i in path {
        s.push('_');
        s.push_str(&i.to_string());
    }
    s
}

/// Children in a fixed order shared by the marking and translation passes:
/// for a let, the body comes first, then the bound subgraphs.
fn children_of(g: &ConfGraph) -> Vec<&ConfGraph> {
    match g {
        ConfGraph::Leaf(_) | ConfGraph::Fold(..) => vec![],
        ConfGraph::Con(_, gs) => gs.iter().collect(),
        ConfGraph::Unfold(g) => vec![g.as_ref()],
        ConfGraph::Cases(_, branches) => branches.iter().map(|(_, g)| g).collect(),
        ConfGraph::Let(binds, body) => {
            let mut v = vec![body.as_ref()];
            v.extend(binds.iter().map(|(_, g)| g));
            v
        }
    }
}

/// First pass: find every node some fold points back to, and fix its
/// parameter list as the domain of the fold's renaming (the free variables
/// of the target's configuration, in first-occurrence order; every fold to
/// the same target carries the same domain).
fn mark_targets(
    g: &ConfGraph,
    stack: &mut Vec<Path>,
    path: &Path,
    targets: &mut HashMap<Path, Vec<Name>>,
) {
    if let ConfGraph::Fold(back, ren) = g {
        let tp = stack[stack.len() - back].clone();
        targets
            .entry(tp)
            .or_insert_with(|| ren.pairs().iter().map(|(a, _)| a.clone()).collect());
        return;
    }
    stack.push(path.clone());
    for (i, c) in children_of(g).into_iter().enumerate() {
        let mut p = path.clone();
        p.push(i);
        mark_targets(c, stack, &p, targets);
    }
    stack.pop();
}

struct Residualizer<'a> {
    targets: &'a HashMap<Path, Vec<Name>>,
    stack: Vec<Path>,
    defs: Vec<ExtDef>,
}

impl Residualizer<'_> {
    fn trans(&mut self, g: &ConfGraph, path: &Path) -> ExtExp {
        if let ConfGraph::Fold(back, ren) = g {
            let tp = &self.stack[self.stack.len() - back];
            let name = def_name(tp);
            let args = ren
                .pairs()
                .iter()
                .map(|(_, b)| ExtExp::Var(b.clone()))
                .collect();
            return ExtExp::Call(CallKind::Fun(name), args);
        }
        self.stack.push(path.clone());
        let sub = |i: usize| {
            let mut p = path.clone();
            p.push(i);
            p
        };
        let core = match g {
            ConfGraph::Leaf(e) => ext_of_exp(e),
            ConfGraph::Con(c, gs) => ExtExp::Call(
                CallKind::Ctr(c.clone()),
                gs.iter()
                    .enumerate()
                    .map(|(i, g)| self.trans(g, &sub(i)))
                    .collect(),
            ),
            // unfold nodes vanish: the call is replaced by its unfolding
            ConfGraph::Unfold(gb) => self.trans(gb, &sub(0)),
            ConfGraph::Cases(x, branches) => ExtExp::Case(
                x.clone(),
                branches
                    .iter()
                    .enumerate()
                    .map(|(i, (pat, g))| (pat.clone(), self.trans(g, &sub(i))))
                    .collect(),
            ),
            ConfGraph::Let(binds, body) => {
                let b = self.trans(body, &sub(0));
                let bs = binds
                    .iter()
                    .enumerate()
                    .map(|(i, (v, g))| (v.clone(), self.trans(g, &sub(i + 1))))
                    .collect();
                ExtExp::Let(bs, Box::new(b))
            }
            ConfGraph::Fold(..) => unreachable!("handled above"),
        };
        self.stack.pop();
        match self.targets.get(path) {
            None => core,
            Some(params) => {
                let name = def_name(path);
                self.defs.push(ExtDef {
                    name: name.clone(),
                    params: params.clone(),
                    body: core,
                });
                ExtExp::Call(
                    CallKind::Fun(name),
                    params.iter().cloned().map(ExtExp::Var).collect(),
                )
            }
        }
    }
}

/// Extracts a program in the extended language from a configuration graph.
/// Every fold target becomes a definition; unfold nodes are skipped.
pub fn residualize(g: &ConfGraph) -> ExtProgram {
    let mut targets = HashMap::new();
    mark_targets(g, &mut Vec::new(), &Vec::new(), &mut targets);
    let mut r = Residualizer {
        targets: &targets,
        stack: Vec::new(),
        defs: Vec::new(),
    };
    let main = r.trans(g, &Vec::new());
    ExtProgram { defs: r.defs, main }
}

struct Lifter {
    out: Vec<Def>,
}

impl Lifter {
    fn lift_exp(&mut self, owner: &str, nc: &mut usize, nl: &mut usize, e: &ExtExp) -> Exp {
        match e {
            ExtExp::Var(v) => Exp::Var(v.clone()),
            ExtExp::Call(k, args) => Exp::Call(
                k.clone(),
                args.iter().map(|a| self.lift_exp(owner, nc, nl, a)).collect(),
            ),
            ExtExp::Case(x, branches) => {
                let n = *nc;
                *nc += 1;
                let name = format!("{owner}_case{n}");
                let lifted: Vec<(Pattern, Exp)> = branches
                    .iter()
                    .map(|(p, b)| (p.clone(), self.lift_exp(owner, nc, nl, b)))
                    .collect();
                // variables the branches need beyond what the pattern binds
                let mut extras: Vec<Name> = Vec::new();
                for (pat, body) in &lifted {
                    for v in free_vars(body) {
                        if !pat.vars.contains(&v) && !extras.contains(&v) {
                            extras.push(v);
                        }
                    }
                }
                let clauses = lifted
                    .into_iter()
                    .map(|(pat, body)| Clause { pat, params: extras.clone(), body })
                    .collect();
                self.out.push(Def::PatternMatch { name: name.clone(), clauses });
                let mut args = vec![Exp::Var(x.clone())];
                args.extend(extras.into_iter().map(Exp::Var));
                Exp::Call(CallKind::Fun(name), args)
            }
            ExtExp::Let(binds, body) => {
                let n = *nl;
                *nl += 1;
                let name = format!("{owner}_let{n}");
                let bound: Vec<Exp> = binds
                    .iter()
                    .map(|(_, e)| self.lift_exp(owner, nc, nl, e))
                    .collect();
                let body = self.lift_exp(owner, nc, nl, body);
                let mut params: Vec<Name> = binds.iter().map(|(v, _)| v.clone()).collect();
                let n_binders = params.len();
                for v in free_vars(&body) {
                    if !params.contains(&v) {
                        params.push(v);
                    }
                }
                let mut args = bound;
                args.extend(params[n_binders..].iter().cloned().map(Exp::Var));
                self.out.push(Def::Ordinary { name: name.clone(), params, body });
                Exp::Call(CallKind::Fun(name), args)
            }
        }
    }
}

/// Removes case and let expressions by lifting each into a fresh top-level
/// definition, named after the enclosing definition (`<owner>_caseN`,
/// `<owner>_letN`). A lifted case takes the scrutinee first; a lifted let
/// takes its binders first, called with the bound expressions.
pub fn lift(ep: &ExtProgram) -> Result<(Program, Exp), LangError> {
    let mut l = Lifter { out: Vec::new() };
    for d in &ep.defs {
        let (mut nc, mut nl) = (0, 0);
        let body = l.lift_exp(&d.name, &mut nc, &mut nl, &d.body);
        l.out.push(Def::Ordinary {
            name: d.name.clone(),
            params: d.params.clone(),
            body,
        });
    }
    let (mut nc, mut nl) = (0, 0);
    let main = l.lift_exp("main", &mut nc, &mut nl, &ep.main);
    Ok((Program::new(l.out)?, main))
}

fn calls_in(e: &Exp, out: &mut HashSet<Name>) {
    if let Exp::Call(kind, args) = e {
        if let CallKind::Fun(f) = kind {
            out.insert(f.clone());
        }
        for a in args {
            calls_in(a, out);
        }
    }
}

fn def_calls(d: &Def) -> HashSet<Name> {
    let mut out = HashSet::new();
    match d {
        Def::Ordinary { body, .. } => calls_in(body, &mut out),
        Def::PatternMatch { clauses, .. } => {
            for cl in clauses {
                calls_in(&cl.body, &mut out);
            }
        }
    }
    out
}

/// Names of definitions on a call-graph cycle (reachable from themselves).
fn recursive_names(defs: &[Def]) -> HashSet<Name> {
    let callees: HashMap<&str, HashSet<Name>> =
        defs.iter().map(|d| (d.name(), def_calls(d))).collect();
    let mut rec = HashSet::new();
    for d in defs {
        let mut seen = HashSet::new();
        let mut work: Vec<Name> = callees[d.name()].iter().cloned().collect();
        while let Some(f) = work.pop() {
            if f == d.name() {
                rec.insert(f);
                break;
            }
            if seen.insert(f.clone()) {
                if let Some(cs) = callees.get(f.as_str()) {
                    work.extend(cs.iter().cloned());
                }
            }
        }
    }
    rec
}

fn count_var(e: &Exp, v: &str) -> usize {
    match e {
        Exp::Var(x) => usize::from(x == v),
        Exp::Call(_, args) => args.iter().map(|a| count_var(a, v)).sum(),
    }
}

/// Inlines calls to non-recursive ordinary definitions wherever doing so
/// cannot duplicate work: every argument is either a plain variable or
/// bound to a parameter used at most once in the body. Sound under
/// call-by-name (an unused argument is simply dropped).
fn inline_exp(e: &Exp, defs: &HashMap<&str, &Def>, rec: &HashSet<Name>) -> Exp {
    match e {
        Exp::Var(_) => e.clone(),
        Exp::Call(kind, args) => {
            let args: Vec<Exp> = args.iter().map(|a| inline_exp(a, defs, rec)).collect();
            if let CallKind::Fun(f) = kind {
                if !rec.contains(f) {
                    if let Some(Def::Ordinary { params, body, .. }) = defs.get(f.as_str()) {
                        let cheap = params.iter().zip(&args).all(|(p, a)| {
                            matches!(a, Exp::Var(_)) || count_var(body, p) <= 1
                        });
                        if cheap {
                            let s: Subst = params.iter().cloned().zip(args).collect();
                            return inline_exp(&substitute(body, &s), defs, rec);
                        }
                    }
                }
            }
            Exp::Call(kind.clone(), args)
        }
    }
}

fn map_def_bodies(d: &Def, f: &mut impl FnMut(&Exp) -> Exp) -> Def {
    match d {
        Def::Ordinary { name, params, body } => Def::Ordinary {
            name: name.clone(),
            params: params.clone(),
            body: f(body),
        },
        Def::PatternMatch { name, clauses } => Def::PatternMatch {
            name: name.clone(),
            clauses: clauses
                .iter()
                .map(|cl| Clause {
                    pat: cl.pat.clone(),
                    params: cl.params.clone(),
                    body: f(&cl.body),
                })
                .collect(),
        },
    }
}

fn rename_calls(e: &Exp, ren: &HashMap<Name, Name>) -> Exp {
    match e {
        Exp::Var(_) => e.clone(),
        Exp::Call(kind, args) => {
            let kind = match kind {
                CallKind::Fun(f) => {
                    CallKind::Fun(ren.get(f).cloned().unwrap_or_else(|| f.clone()))
                }
                c => c.clone(),
            };
            Exp::Call(kind, args.iter().map(|a| rename_calls(a, ren)).collect())
        }
    }
}

/// Merges definitions that are equal up to parameter names and up to a
/// consistent bijection between merged definition names: greatest-fixpoint
/// partition refinement over a positional rendering of the bodies. Returns
/// whether anything was merged.
fn merge_duplicates(defs: &mut Vec<Def>, main: &mut Exp) -> bool {
    fn render(e: &Exp, env: &HashMap<&str, String>, class: &HashMap<Name, usize>, out: &mut String) {
        match e {
            Exp::Var(v) => match env.get(v.as_str()) {
                Some(t) => out.push_str(t),
                None => out.push_str(v),
            },
            Exp::Call(kind, args) => {
                match kind {
                    CallKind::Ctr(c) => {
                        out.push('C');
                        out.push_str(c);
                    }
                    CallKind::Fun(f) => {
                        out.push('F');
                        out.push_str(&class[f].to_string());
                    }
                }
                out.push('(');
                for a in args {
                    render(a, env, class, out);
                    out.push(',');
                }
                out.push(')');
            }
        }
    }
    fn signature(d: &Def, class: &HashMap<Name, usize>) -> String {
        let mut out = String::new();
        match d {
            Def::Ordinary { params, body, .. } => {
                out.push('O');
                out.push_str(&params.len().to_string());
                let env: HashMap<&str, String> = params
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.as_str(), format!("%{i}")))
                    .collect();
                render(body, &env, class, &mut out);
            }
            Def::PatternMatch { clauses, .. } => {
                out.push('P');
                out.push_str(&clauses[0].params.len().to_string());
                for cl in clauses {
                    out.push_str(&cl.pat.ctr);
                    out.push('/');
                    out.push_str(&cl.pat.vars.len().to_string());
                    out.push(':');
                    let mut env: HashMap<&str, String> = cl
                        .pat
                        .vars
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.as_str(), format!("%p{i}")))
                        .collect();
                    env.extend(
                        cl.params
                            .iter()
                            .enumerate()
                            .map(|(i, v)| (v.as_str(), format!("%q{i}"))),
                    );
                    render(&cl.body, &env, class, &mut out);
                    out.push(';');
                }
            }
        }
        out
    }

    // start with everything in one class, split until stable
    let mut class: HashMap<Name, usize> =
        defs.iter().map(|d| (d.name().to_string(), 0)).collect();
    loop {
        let mut next = HashMap::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        for d in defs.iter() {
            let sig = signature(d, &class);
            let n = ids.len();
            let id = *ids.entry(sig).or_insert(n);
            next.insert(d.name().to_string(), id);
        }
        if next == class {
            break;
        }
        class = next;
    }

    // representative of each class: the first definition in program order
    let mut repr: HashMap<usize, Name> = HashMap::new();
    let mut ren: HashMap<Name, Name> = HashMap::new();
    for d in defs.iter() {
        let r = repr
            .entry(class[d.name()])
            .or_insert_with(|| d.name().to_string());
        if r != d.name() {
            ren.insert(d.name().to_string(), r.clone());
        }
    }
    if ren.is_empty() {
        return false;
    }
    defs.retain(|d| !ren.contains_key(d.name()));
    for d in defs.iter_mut() {
        *d = map_def_bodies(d, &mut |e| rename_calls(e, &ren));
    }
    *main = rename_calls(main, &ren);
    true
}

/// Cleans up a residual program: inline cheap generated helpers, merge
/// duplicated definitions, drop unreachable ones; iterated to a fixpoint.
pub fn simplify(p: &Program, main: &Exp) -> (Program, Exp) {
    let mut defs: Vec<Def> = p.defs().to_vec();
    let mut main = main.clone();
    loop {
        let before = (defs.clone(), main.clone());

        let rec = recursive_names(&defs);
        let by_name: HashMap<&str, &Def> = before.0.iter().map(|d| (d.name(), d)).collect();
        main = inline_exp(&main, &by_name, &rec);
        defs = defs
            .iter()
            .map(|d| map_def_bodies(d, &mut |e| inline_exp(e, &by_name, &rec)))
            .collect();

        merge_duplicates(&mut defs, &mut main);

        // keep only definitions reachable from the main expression
        let mut live = HashSet::new();
        calls_in(&main, &mut live);
        let callees: HashMap<&str, HashSet<Name>> =
            defs.iter().map(|d| (d.name(), def_calls(d))).collect();
        let mut work: Vec<Name> = live.iter().cloned().collect();
        while let Some(f) = work.pop() {
            if let Some(cs) = callees.get(f.as_str()) {
                for c in cs {
                    if live.insert(c.clone()) {
                        work.push(c.clone());
                    }
                }
            }
        }
        defs.retain(|d| live.contains(d.name()));

        if (defs.clone(), main.clone()) == before {
            break;
        }
    }
    let p = Program::new(defs).expect("cleanup preserves well-formedness");
    (p, main)
}

/// The whole pipeline: graph → extended program → core program → cleanup.
pub fn residual_program(g: &ConfGraph) -> Result<(Program, Exp), LangError> {
    let ep = residualize(g);
    let (p, main) = lift(&ep)?;
    Ok(simplify(&p, &main))
}

/// Whether two programs (with their main expressions) are equal up to a
/// consistent renaming of function names, parameters and pattern variables.
/// Free variables of the main expressions must match literally. Clause
/// order is ignored; definitions not reachable from main are ignored.
pub fn alpha_equivalent(p1: &Program, m1: &Exp, p2: &Program, m2: &Exp) -> bool {
    canonical_form(p1, m1) == canonical_form(p2, m2)
}

fn canonical_form(p: &Program, main: &Exp) -> String {
    // assign ids to functions in discovery order
    let mut ids: HashMap<Name, usize> = HashMap::new();
    let mut queue: Vec<Name> = Vec::new();
    fn discover(e: &Exp, ids: &mut HashMap<Name, usize>, queue: &mut Vec<Name>) {
        if let Exp::Call(kind, args) = e {
            if let CallKind::Fun(f) = kind {
                if !ids.contains_key(f) {
                    ids.insert(f.clone(), ids.len());
                    queue.push(f.clone());
                }
            }
            for a in args {
                discover(a, ids, queue);
            }
        }
    }
    fn render(e: &Exp, env: &HashMap<&str, String>, ids: &HashMap<Name, usize>, out: &mut String) {
        match e {
            Exp::Var(v) => match env.get(v.as_str()) {
                Some(t) => out.push_str(t),
                None => out.push_str(v),
            },
            Exp::Call(kind, args) => {
                match kind {
                    CallKind::Ctr(c) => {
                        out.push('C');
                        out.push_str(c);
                    }
                    CallKind::Fun(f) => {
                        out.push('g');
                        out.push_str(&ids[f].to_string());
                    }
                }
                out.push('(');
                for a in args {
                    render(a, env, ids, out);
                    out.push(',');
                }
                out.push(')');
            }
        }
    }

    discover(main, &mut ids, &mut queue);
    let mut out = String::new();
    render(main, &HashMap::new(), &ids, &mut out);
    out.push('\n');
    let mut i = 0;
    while i < queue.len() {
        let name = queue[i].clone();
        i += 1;
        let Some(d) = p.lookup(&name) else {
            out.push_str("missing\n");
            continue;
        };
        // discover callees first so ids only depend on structure
        match d {
            Def::Ordinary { body, .. } => discover(body, &mut ids, &mut queue),
            Def::PatternMatch { clauses, .. } => {
                let mut sorted: Vec<&Clause> = clauses.iter().collect();
                sorted.sort_by(|a, b| a.pat.ctr.cmp(&b.pat.ctr));
                for cl in sorted {
                    discover(&cl.body, &mut ids, &mut queue);
                }
            }
        }
        match d {
            Def::Ordinary { params, body, .. } => {
                let env: HashMap<&str, String> = params
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.as_str(), format!("%{i}")))
                    .collect();
                out.push_str(&format!("g{} O{} ", ids[&name], params.len()));
                render(body, &env, &ids, &mut out);
                out.push('\n');
            }
            Def::PatternMatch { clauses, .. } => {
                let mut sorted: Vec<&Clause> = clauses.iter().collect();
                sorted.sort_by(|a, b| a.pat.ctr.cmp(&b.pat.ctr));
                out.push_str(&format!("g{} P ", ids[&name]));
                for cl in sorted {
                    let mut env: HashMap<&str, String> = cl
                        .pat
                        .vars
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.as_str(), format!("%p{i}")))
                        .collect();
                    env.extend(
                        cl.params
                            .iter()
                            .enumerate()
                            .map(|(i, v)| (v.as_str(), format!("%q{i}"))),
                    );
                    out.push_str(&cl.pat.ctr);
                    out.push('/');
                    render(&cl.body, &env, &ids, &mut out);
                    out.push(';');
                }
                out.push('\n');
            }
        }
    }
    out
}
