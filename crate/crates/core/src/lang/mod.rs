//! Object-language syntax and the basic operations on it: substitution,
//! free variables, renaming detection, well-formedness checking.
//!
//! Constructor names start with an uppercase letter, function and variable
//! names with a lowercase one. Patterns are flat and pattern-matching
//! definitions must be exhaustive and non-overlapping.

pub mod eval;
pub mod parse;
pub mod print;

use std::collections::{HashMap, HashSet};
use thiserror::Error;

pub type Name = String;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CallKind {
    Ctr(Name),
    Fun(Name),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Exp {
    Var(Name),
    Call(CallKind, Vec<Exp>),
}

impl Exp {
    pub fn var(name: &str) -> Exp {
        Exp::Var(name.to_string())
    }

    pub fn ctr(name: &str, args: Vec<Exp>) -> Exp {
        Exp::Call(CallKind::Ctr(name.to_string()), args)
    }

    pub fn fun(name: &str, args: Vec<Exp>) -> Exp {
        Exp::Call(CallKind::Fun(name.to_string()), args)
    }
}

/// A flat pattern: constructor name plus pairwise-distinct variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub ctr: Name,
    pub vars: Vec<Name>,
}

impl Pattern {
    /// The pattern read back as an expression, e.g. `Cons(x0, xs1)`.
    pub fn to_exp(&self) -> Exp {
        Exp::Call(
            CallKind::Ctr(self.ctr.clone()),
            self.vars.iter().map(|v| Exp::Var(v.clone())).collect(),
        )
    }
}

/// One clause of a pattern-matching definition:
/// `g(C(x1, ..), y1, ..) = body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub pat: Pattern,
    pub params: Vec<Name>,
    pub body: Exp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Def {
    Ordinary {
        name: Name,
        params: Vec<Name>,
        body: Exp,
    },
    PatternMatch {
        name: Name,
        clauses: Vec<Clause>,
    },
}

impl Def {
    pub fn name(&self) -> &str {
        match self {
            Def::Ordinary { name, .. } => name,
            Def::PatternMatch { name, .. } => name,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Def::Ordinary { params, .. } => params.len(),
            Def::PatternMatch { clauses, .. } => 1 + clauses[0].params.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Program {
    defs: Vec<Def>,
    index: HashMap<Name, usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("duplicate definition of `{0}`")]
    DuplicateDef(Name),
    #[error("duplicate variable `{1}` in definition of `{0}`")]
    DuplicateVar(Name, Name),
    #[error("free variable `{1}` in the body of `{0}`")]
    UnboundVar(Name, Name),
    #[error("clauses of `{0}` disagree on parameter count")]
    ClauseArity(Name),
    #[error("overlapping clauses for constructor `{1}` in `{0}`")]
    OverlappingClauses(Name, Name),
    #[error("`{0}` is not exhaustive: missing constructor `{1}`")]
    NonExhaustive(Name, Name),
    #[error("call to undefined function `{0}`")]
    UndefinedFun(Name),
    #[error("`{0}` called with {1} arguments, expected {2}")]
    CallArity(Name, usize, usize),
    #[error("constructor `{0}` used with arities {1} and {2}")]
    CtrArity(Name, usize, usize),
}

impl Program {
    /// Builds a program and runs all well-formedness checks.
    pub fn new(defs: Vec<Def>) -> Result<Program, LangError> {
        let mut index = HashMap::new();
        for (i, d) in defs.iter().enumerate() {
            if index.insert(d.name().to_string(), i).is_some() {
                return Err(LangError::DuplicateDef(d.name().to_string()));
            }
        }
        let p = Program { defs, index };
        p.check()?;
        Ok(p)
    }

    pub fn empty() -> Program {
        Program {
            defs: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn defs(&self) -> &[Def] {
        &self.defs
    }

    pub fn lookup(&self, name: &str) -> Option<&Def> {
        self.index.get(name).map(|&i| &self.defs[i])
    }

    fn check(&self) -> Result<(), LangError> {
        for d in &self.defs {
            self.check_binders(d)?;
        }
        self.check_clause_heads()?;
        let mut ctr_arities: HashMap<&str, usize> = HashMap::new();
        for d in &self.defs {
            match d {
                Def::Ordinary { name, body, .. } => {
                    self.check_exp_in(name, body, &mut ctr_arities)?
                }
                Def::PatternMatch { name, clauses } => {
                    for cl in clauses {
                        note_ctr_arity(&mut ctr_arities, &cl.pat.ctr, cl.pat.vars.len())?;
                        self.check_exp_in(name, &cl.body, &mut ctr_arities)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_binders(&self, d: &Def) -> Result<(), LangError> {
        let name = d.name().to_string();
        let check_scope = |bound: &[Name], body: &Exp| -> Result<(), LangError> {
            let mut seen = HashSet::new();
            for v in bound {
                if !seen.insert(v.clone()) {
                    return Err(LangError::DuplicateVar(name.clone(), v.clone()));
                }
            }
            for v in free_vars(body) {
                if !seen.contains(&v) {
                    return Err(LangError::UnboundVar(name.clone(), v));
                }
            }
            Ok(())
        };
        match d {
            Def::Ordinary { params, body, .. } => check_scope(params, body),
            Def::PatternMatch { clauses, .. } => {
                let n = clauses[0].params.len();
                for cl in clauses {
                    if cl.params.len() != n {
                        return Err(LangError::ClauseArity(name));
                    }
                    let mut bound = cl.pat.vars.clone();
                    bound.extend(cl.params.iter().cloned());
                    check_scope(&bound, &cl.body)?;
                }
                Ok(())
            }
        }
    }

    /// Clause overlap and exhaustiveness. Constructors are grouped by
    /// co-occurrence in clause heads (union-find over all definitions);
    /// a function must cover the whole group its constructors belong to.
    fn check_clause_heads(&self) -> Result<(), LangError> {
        let groups = self.ctor_groups();
        for d in &self.defs {
            if let Def::PatternMatch { name, clauses } = d {
                let mut covered = HashSet::new();
                for cl in clauses {
                    if !covered.insert(cl.pat.ctr.clone()) {
                        return Err(LangError::OverlappingClauses(
                            name.clone(),
                            cl.pat.ctr.clone(),
                        ));
                    }
                }
                let group = groups
                    .iter()
                    .find(|g| g.contains(&clauses[0].pat.ctr))
                    .expect("every clause constructor is in some group");
                for c in group {
                    if !covered.contains(c) {
                        return Err(LangError::NonExhaustive(name.clone(), c.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Constructor groups inferred from clause heads: constructors that are
    /// matched by the same function belong to one group. Constructors that
    /// never appear in a clause head form singleton groups.
    pub fn ctor_groups(&self) -> Vec<Vec<Name>> {
        let mut parent: HashMap<Name, Name> = HashMap::new();
        fn find(parent: &mut HashMap<Name, Name>, x: &str) -> Name {
            let p = parent.entry(x.to_string()).or_insert_with(|| x.to_string()).clone();
            if p == x {
                return p;
            }
            let r = find(parent, &p);
            parent.insert(x.to_string(), r.clone());
            r
        }
        let mut all: Vec<Name> = Vec::new();
        let note = |all: &mut Vec<Name>, c: &Name| {
            if !all.contains(c) {
                all.push(c.clone());
            }
        };
        for d in &self.defs {
            match d {
                Def::PatternMatch { clauses, .. } => {
                    for cl in clauses {
                        note(&mut all, &cl.pat.ctr);
                        for v in ctors_of(&cl.body) {
                            note(&mut all, &v);
                        }
                    }
                    let first = clauses[0].pat.ctr.clone();
                    for cl in &clauses[1..] {
                        let (a, b) = (find(&mut parent, &first), find(&mut parent, &cl.pat.ctr));
                        if a != b {
                            parent.insert(a, b);
                        }
                    }
                }
                Def::Ordinary { body, .. } => {
                    for v in ctors_of(body) {
                        note(&mut all, &v);
                    }
                }
            }
        }
        let mut groups: Vec<(Name, Vec<Name>)> = Vec::new();
        for c in &all {
            let root = find(&mut parent, c);
            match groups.iter_mut().find(|(r, _)| *r == root) {
                Some((_, g)) => g.push(c.clone()),
                None => groups.push((root, vec![c.clone()])),
            }
        }
        groups.into_iter().map(|(_, g)| g).collect()
    }

    /// Checks calls and constructor arities in an expression against this
    /// program, e.g. for a target expression supplied next to it.
    pub fn check_exp(&self, e: &Exp) -> Result<(), LangError> {
        let mut ctr_arities = HashMap::new();
        for d in &self.defs {
            if let Def::PatternMatch { clauses, .. } = d {
                for cl in clauses {
                    note_ctr_arity(&mut ctr_arities, &cl.pat.ctr, cl.pat.vars.len())?;
                }
            }
        }
        self.check_exp_in("<expression>", e, &mut ctr_arities)
    }

    fn check_exp_in<'a>(
        &'a self,
        _owner: &str,
        e: &'a Exp,
        ctr_arities: &mut HashMap<&'a str, usize>,
    ) -> Result<(), LangError> {
        match e {
            Exp::Var(_) => Ok(()),
            Exp::Call(kind, args) => {
                match kind {
                    CallKind::Ctr(c) => note_ctr_arity(ctr_arities, c, args.len())?,
                    CallKind::Fun(f) => {
                        let def = self
                            .lookup(f)
                            .ok_or_else(|| LangError::UndefinedFun(f.clone()))?;
                        if def.arity() != args.len() {
                            return Err(LangError::CallArity(f.clone(), args.len(), def.arity()));
                        }
                    }
                }
                for a in args {
                    self.check_exp_in(_owner, a, ctr_arities)?;
                }
                Ok(())
            }
        }
    }

    /// Every variable name occurring anywhere in the program, for seeding
    /// fresh-name generation.
    pub fn all_var_names(&self) -> HashSet<Name> {
        let mut out = HashSet::new();
        for d in &self.defs {
            match d {
                Def::Ordinary { params, body, .. } => {
                    out.extend(params.iter().cloned());
                    collect_vars(body, &mut out);
                }
                Def::PatternMatch { clauses, .. } => {
                    for cl in clauses {
                        out.extend(cl.pat.vars.iter().cloned());
                        out.extend(cl.params.iter().cloned());
                        collect_vars(&cl.body, &mut out);
                    }
                }
            }
        }
        out
    }
}

fn note_ctr_arity<'a>(
    arities: &mut HashMap<&'a str, usize>,
    ctr: &'a Name,
    n: usize,
) -> Result<(), LangError> {
    match arities.get(ctr.as_str()) {
        Some(&m) if m != n => Err(LangError::CtrArity(ctr.clone(), m, n)),
        Some(_) => Ok(()),
        None => {
            arities.insert(ctr, n);
            Ok(())
        }
    }
}

fn ctors_of(e: &Exp) -> Vec<Name> {
    let mut out = Vec::new();
    fn go(e: &Exp, out: &mut Vec<Name>) {
        if let Exp::Call(kind, args) = e {
            if let CallKind::Ctr(c) = kind {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
            for a in args {
                go(a, out);
            }
        }
    }
    go(e, &mut out);
    out
}

fn collect_vars(e: &Exp, out: &mut HashSet<Name>) {
    match e {
        Exp::Var(v) => {
            out.insert(v.clone());
        }
        Exp::Call(_, args) => {
            for a in args {
                collect_vars(a, out);
            }
        }
    }
}

/// A finite map from variables to expressions, applied simultaneously.
pub type Subst = HashMap<Name, Exp>;

pub fn substitute(e: &Exp, s: &Subst) -> Exp {
    match e {
        Exp::Var(v) => s.get(v).cloned().unwrap_or_else(|| e.clone()),
        Exp::Call(kind, args) => {
            Exp::Call(kind.clone(), args.iter().map(|a| substitute(a, s)).collect())
        }
    }
}

/// Free variables in first-occurrence order.
pub fn free_vars(e: &Exp) -> Vec<Name> {
    let mut out = Vec::new();
    fn go(e: &Exp, out: &mut Vec<Name>) {
        match e {
            Exp::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Exp::Call(_, args) => {
                for a in args {
                    go(a, out);
                }
            }
        }
    }
    go(e, &mut out);
    out
}

/// An injective variable-to-variable mapping. Pairs are kept in
/// first-occurrence order of the domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Renaming {
    pairs: Vec<(Name, Name)>,
}

impl Renaming {
    pub fn pairs(&self) -> &[(Name, Name)] {
        &self.pairs
    }

    pub fn get(&self, v: &str) -> Option<&Name> {
        self.pairs.iter().find(|(a, _)| a == v).map(|(_, b)| b)
    }

    pub fn as_subst(&self) -> Subst {
        self.pairs
            .iter()
            .map(|(a, b)| (a.clone(), Exp::Var(b.clone())))
            .collect()
    }

    fn insert(&mut self, from: &str, to: &str) -> bool {
        match self.get(from) {
            Some(t) => t == to,
            None => {
                // injectivity: no two domain variables share an image
                if self.pairs.iter().any(|(_, b)| b == to) {
                    return false;
                }
                self.pairs.push((from.to_string(), to.to_string()));
                true
            }
        }
    }
}

/// Finds the unique injective renaming turning `ancestor` into `current`,
/// restricted to the free variables of `ancestor`.
pub fn find_renaming(ancestor: &Exp, current: &Exp) -> Option<Renaming> {
    let mut ren = Renaming { pairs: Vec::new() };
    fn go(a: &Exp, c: &Exp, ren: &mut Renaming) -> bool {
        match (a, c) {
            (Exp::Var(x), Exp::Var(y)) => ren.insert(x, y),
            (Exp::Call(k1, xs), Exp::Call(k2, ys)) => {
                k1 == k2
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| go(x, y, ren))
            }
            _ => false,
        }
    }
    if go(ancestor, current, &mut ren) {
        Some(ren)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitute_is_simultaneous() {
        // f(x, y) under {x -> y, y -> x} swaps, it does not chain
        let e = Exp::fun("f", vec![Exp::var("x"), Exp::var("y")]);
        let mut s = Subst::new();
        s.insert("x".into(), Exp::var("y"));
        s.insert("y".into(), Exp::var("x"));
        assert_eq!(
            substitute(&e, &s),
            Exp::fun("f", vec![Exp::var("y"), Exp::var("x")])
        );
    }

    #[test]
    fn substitute_direct_replacement() {
        let e = Exp::ctr(
            "Cons",
            vec![
                Exp::var("x"),
                Exp::fun("append", vec![Exp::var("xs"), Exp::var("ys")]),
            ],
        );
        let mut s = Subst::new();
        s.insert("x".into(), Exp::ctr("A", vec![]));
        s.insert("xs".into(), Exp::ctr("Nil", vec![]));
        assert_eq!(
            substitute(&e, &s),
            Exp::ctr(
                "Cons",
                vec![
                    Exp::ctr("A", vec![]),
                    Exp::fun("append", vec![Exp::ctr("Nil", vec![]), Exp::var("ys")]),
                ]
            )
        );
    }

    #[test]
    fn substitute_empty_identity() {
        let e = Exp::var("x");
        assert_eq!(substitute(&e, &Subst::new()), e);
    }

    #[test]
    fn free_vars_order_and_dedup() {
        // g(Cons(A(), Nil()), z) -> [z]
        let e = Exp::fun(
            "g",
            vec![
                Exp::ctr("Cons", vec![Exp::ctr("A", vec![]), Exp::ctr("Nil", vec![])]),
                Exp::var("z"),
            ],
        );
        assert_eq!(free_vars(&e), vec!["z".to_string()]);
        assert_eq!(free_vars(&Exp::var("x")), vec!["x".to_string()]);
        assert!(free_vars(&Exp::ctr("Nil", vec![])).is_empty());
    }

    #[test]
    fn renaming_basic() {
        // f(g(xs0, y0)) vs f(g(xs1, y0))
        let a = Exp::fun("f", vec![Exp::fun("g", vec![Exp::var("xs0"), Exp::var("y0")])]);
        let c = Exp::fun("f", vec![Exp::fun("g", vec![Exp::var("xs1"), Exp::var("y0")])]);
        let r = find_renaming(&a, &c).unwrap();
        assert_eq!(
            r.pairs(),
            &[
                ("xs0".to_string(), "xs1".to_string()),
                ("y0".to_string(), "y0".to_string())
            ]
        );
    }

    #[test]
    fn renaming_none_var_vs_ctr() {
        assert!(find_renaming(&Exp::var("x"), &Exp::ctr("C", vec![])).is_none());
    }

    #[test]
    fn renaming_injective() {
        // B(x, y) cannot be renamed to B(u, u)
        let a = Exp::ctr("B", vec![Exp::var("x"), Exp::var("y")]);
        let c = Exp::ctr("B", vec![Exp::var("u"), Exp::var("u")]);
        assert!(find_renaming(&a, &c).is_none());
    }

    #[test]
    fn renaming_identity_on_self() {
        let e = Exp::fun("f", vec![Exp::var("a"), Exp::var("b")]);
        let r = find_renaming(&e, &e).unwrap();
        for (x, y) in r.pairs() {
            assert_eq!(x, y);
        }
        assert_eq!(r.pairs().len(), 2);
    }
}
