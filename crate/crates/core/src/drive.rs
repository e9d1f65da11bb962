//! Single-step driving and multi-result driving.
//!
//! Multi-result driving offers, next to the ordinary driving step, a
//! generalization step wherever driving could duplicate an existing
//! subexpression: unfolding an ordinary call, reducing a pattern match on a
//! known constructor, and pattern-matching on a nested call. Generalization
//! alternatives are always listed before the driving alternative they shadow,
//! so the first graph in the expanded set carries the most generalizations.

use crate::lang::{free_vars, substitute, CallKind, Clause, Def, Exp, Name, Pattern, Program, Subst};
use std::collections::{HashMap, HashSet};

/// Deterministic source of fresh variable names. A fresh name is its base
/// name plus a counter, skipping anything that already occurs in the program
/// or the initial configuration. One source is confined to one
/// supercompilation run.
#[derive(Clone, Debug)]
pub struct FreshSource {
    counters: HashMap<String, u64>,
    used: HashSet<String>,
}

impl FreshSource {
    pub fn new(forbidden: impl IntoIterator<Item = Name>) -> FreshSource {
        FreshSource {
            counters: HashMap::new(),
            used: forbidden.into_iter().collect(),
        }
    }

    /// A source that avoids every variable of the program and of the initial
    /// configuration.
    pub fn for_run(p: &Program, c0: &Exp) -> FreshSource {
        let mut forbidden = p.all_var_names();
        forbidden.extend(free_vars(c0));
        FreshSource::new(forbidden)
    }

    pub fn fresh(&mut self, base: &str) -> Name {
        let counter = self.counters.entry(base.to_string()).or_insert(0);
        loop {
            let candidate = format!("{base}{counter}");
            *counter += 1;
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }
}

/// An expression with exactly one hole, e.g. `g(•, e1, ..., en)`.
#[derive(Clone, Debug)]
pub struct ExpContext(Exp);

// The hole marker cannot be produced by the parser, so it never collides
// with a program variable.
const HOLE: &str = "\u{2022}";

impl ExpContext {
    /// `g(•, rest...)` for a pattern-matching call around a nested call.
    pub fn pm_call(fun: &str, rest: &[Exp]) -> ExpContext {
        let mut args = vec![Exp::Var(HOLE.to_string())];
        args.extend_from_slice(rest);
        ExpContext(Exp::Call(CallKind::Fun(fun.to_string()), args))
    }

    pub fn fill(&self, e: &Exp) -> Exp {
        let mut s = Subst::new();
        s.insert(HOLE.to_string(), e.clone());
        substitute(&self.0, &s)
    }

    /// Substitutes an expression for a variable inside the context itself
    /// (the hole is unaffected).
    pub fn subst_var(&self, var: &str, e: &Exp) -> ExpContext {
        let mut s = Subst::new();
        s.insert(var.to_string(), e.clone());
        ExpContext(substitute(&self.0, &s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DriveStepResult {
    None,
    Con(Name, Vec<Exp>),
    Unfold(Exp),
    Cases(Name, Vec<(Pattern, Exp)>),
}

/// Outcome of one multi-result driving step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mdsr {
    Leaf(Exp),
    Con(Name, Vec<Exp>),
    Unfold(Exp),
    Cases(Name, Vec<(Pattern, Exp)>),
    Let(Vec<(Name, Exp)>, Exp),
}

/// Sub-configurations of one alternative that driving must pursue further.
/// For a let the body comes first, then the bound expressions.
pub fn mdsr_sub_exps(r: &Mdsr) -> Vec<Exp> {
    match r {
        Mdsr::Leaf(_) => vec![],
        Mdsr::Con(_, args) => args.clone(),
        Mdsr::Unfold(e) => vec![e.clone()],
        Mdsr::Cases(_, branches) => branches.iter().map(|(_, b)| b.clone()).collect(),
        Mdsr::Let(binds, body) => {
            let mut out = vec![body.clone()];
            out.extend(binds.iter().map(|(_, e)| e.clone()));
            out
        }
    }
}

/// Positive information propagation: one branch of a case analysis on `x`.
/// Pattern variables are renamed fresh; the pattern replaces `x` everywhere,
/// including inside the remaining arguments, simultaneously.
pub fn propagate(
    x: &str,
    clause: &Clause,
    args: &[Exp],
    fresh: &mut FreshSource,
) -> (Pattern, Exp) {
    assert_eq!(clause.params.len(), args.len(), "argument count mismatch");
    let fresh_vars: Vec<Name> = clause.pat.vars.iter().map(|v| fresh.fresh(v)).collect();
    let pat = Pattern { ctr: clause.pat.ctr.clone(), vars: fresh_vars.clone() };
    let pat_exp = pat.to_exp();

    let mut x_subst = Subst::new();
    x_subst.insert(x.to_string(), pat_exp);

    let mut s: Subst = clause
        .pat
        .vars
        .iter()
        .cloned()
        .zip(fresh_vars.into_iter().map(Exp::Var))
        .collect();
    for (param, arg) in clause.params.iter().zip(args) {
        s.insert(param.clone(), substitute(arg, &x_subst));
    }
    (pat, substitute(&clause.body, &s))
}

fn bind(params: &[Name], args: &[Exp]) -> Subst {
    assert_eq!(params.len(), args.len(), "arity mismatch");
    params.iter().cloned().zip(args.iter().cloned()).collect()
}

fn select_clause<'a>(clauses: &'a [Clause], ctr: &str, f: &str) -> &'a Clause {
    clauses
        .iter()
        .find(|cl| cl.pat.ctr == ctr)
        .unwrap_or_else(|| panic!("no clause of `{f}` matches `{ctr}`"))
}

/// One step of ordinary (single-result) driving.
pub fn drive_step(p: &Program, e: &Exp, fresh: &mut FreshSource) -> DriveStepResult {
    match e {
        Exp::Var(_) => DriveStepResult::None,
        Exp::Call(CallKind::Ctr(c), args) => DriveStepResult::Con(c.clone(), args.clone()),
        Exp::Call(CallKind::Fun(f), args) => match p.lookup(f) {
            Some(Def::Ordinary { params, body, .. }) => {
                DriveStepResult::Unfold(substitute(body, &bind(params, args)))
            }
            Some(Def::PatternMatch { clauses, .. }) => {
                let (scrut, rest) = args.split_first().expect("pattern-matching call arity");
                match scrut {
                    Exp::Call(CallKind::Ctr(c), cargs) => {
                        let cl = select_clause(clauses, c, f);
                        let mut s = bind(&cl.pat.vars, cargs);
                        s.extend(bind(&cl.params, rest));
                        DriveStepResult::Unfold(substitute(&cl.body, &s))
                    }
                    Exp::Var(x) => DriveStepResult::Cases(
                        x.clone(),
                        clauses
                            .iter()
                            .map(|cl| propagate(x, cl, rest, fresh))
                            .collect(),
                    ),
                    Exp::Call(CallKind::Fun(_), _) => {
                        let ctx = ExpContext::pm_call(f, rest);
                        dsr_map(&ctx, drive_step(p, scrut, fresh))
                    }
                }
            }
            None => panic!("undefined function `{f}`"),
        },
    }
}

/// Splices a driving step result into a context with a hole.
pub fn dsr_map(ctx: &ExpContext, inner: DriveStepResult) -> DriveStepResult {
    match inner {
        DriveStepResult::Unfold(e) => DriveStepResult::Unfold(ctx.fill(&e)),
        DriveStepResult::Cases(x, branches) => DriveStepResult::Cases(
            x.clone(),
            branches
                .into_iter()
                .map(|(pat, body)| {
                    let ctx1 = ctx.subst_var(&x, &pat.to_exp());
                    (pat, ctx1.fill(&body))
                })
                .collect(),
        ),
        DriveStepResult::None | DriveStepResult::Con(..) => {
            panic!("dsr_map applied to a non-call inner result")
        }
    }
}

/// One step of multi-result driving: the ordered list of alternatives for a
/// configuration, generalizations first.
pub fn multi_drive_steps(p: &Program, e: &Exp, fresh: &mut FreshSource) -> Vec<Mdsr> {
    match e {
        Exp::Var(_) => vec![Mdsr::Leaf(e.clone())],
        Exp::Call(CallKind::Ctr(c), args) => vec![Mdsr::Con(c.clone(), args.clone())],
        Exp::Call(CallKind::Fun(f), args) => match p.lookup(f) {
            Some(Def::Ordinary { params, body, .. }) => {
                let binders: Vec<Name> = params.iter().map(|x| fresh.fresh(x)).collect();
                let gen_body = substitute(
                    body,
                    &bind(params, &binders.iter().cloned().map(Exp::Var).collect::<Vec<_>>()),
                );
                vec![
                    Mdsr::Let(binders.into_iter().zip(args.iter().cloned()).collect(), gen_body),
                    Mdsr::Unfold(substitute(body, &bind(params, args))),
                ]
            }
            Some(Def::PatternMatch { clauses, .. }) => {
                let (scrut, rest) = args.split_first().expect("pattern-matching call arity");
                match scrut {
                    Exp::Call(CallKind::Ctr(c), cargs) => {
                        let cl = select_clause(clauses, c, f);
                        let pat_binders: Vec<Name> =
                            cl.pat.vars.iter().map(|x| fresh.fresh(x)).collect();
                        let rest_binders: Vec<Name> =
                            cl.params.iter().map(|x| fresh.fresh(x)).collect();
                        let mut gen_subst = bind(
                            &cl.pat.vars,
                            &pat_binders.iter().cloned().map(Exp::Var).collect::<Vec<_>>(),
                        );
                        gen_subst.extend(bind(
                            &cl.params,
                            &rest_binders.iter().cloned().map(Exp::Var).collect::<Vec<_>>(),
                        ));
                        let mut binds: Vec<(Name, Exp)> =
                            pat_binders.into_iter().zip(cargs.iter().cloned()).collect();
                        binds.extend(rest_binders.into_iter().zip(rest.iter().cloned()));

                        let mut drive_subst = bind(&cl.pat.vars, cargs);
                        drive_subst.extend(bind(&cl.params, rest));
                        vec![
                            Mdsr::Let(binds, substitute(&cl.body, &gen_subst)),
                            Mdsr::Unfold(substitute(&cl.body, &drive_subst)),
                        ]
                    }
                    Exp::Var(x) => vec![Mdsr::Cases(
                        x.clone(),
                        clauses
                            .iter()
                            .map(|cl| propagate(x, cl, rest, fresh))
                            .collect(),
                    )],
                    Exp::Call(CallKind::Fun(_), _) => {
                        // Full generalization of the outer call, then every
                        // result of driving the nested call spliced back in.
                        let scrut_binder = fresh.fresh("x");
                        let rest_binders: Vec<Name> =
                            clauses[0].params.iter().map(|x| fresh.fresh(x)).collect();
                        let mut binds = vec![(scrut_binder.clone(), scrut.clone())];
                        binds.extend(rest_binders.iter().cloned().zip(rest.iter().cloned()));
                        let mut gen_args = vec![Exp::Var(scrut_binder)];
                        gen_args.extend(rest_binders.into_iter().map(Exp::Var));
                        let gen_body = Exp::Call(CallKind::Fun(f.clone()), gen_args);

                        let inner = multi_drive_steps(p, scrut, fresh);
                        let ctx = ExpContext::pm_call(f, rest);
                        let mut out = vec![Mdsr::Let(binds, gen_body)];
                        out.extend(mdsr_map(&ctx, inner));
                        out
                    }
                }
            }
            None => panic!("undefined function `{f}`"),
        },
    }
}

/// Splices multi-result driving alternatives into a context with a hole.
/// The inner expression is a function call, so leaves and constructor
/// results cannot occur here.
pub fn mdsr_map(ctx: &ExpContext, inner: Vec<Mdsr>) -> Vec<Mdsr> {
    inner
        .into_iter()
        .map(|r| match r {
            Mdsr::Unfold(e) => Mdsr::Unfold(ctx.fill(&e)),
            Mdsr::Let(binds, body) => Mdsr::Let(binds, ctx.fill(&body)),
            Mdsr::Cases(x, branches) => Mdsr::Cases(
                x.clone(),
                branches
                    .into_iter()
                    .map(|(pat, body)| {
                        let ctx1 = ctx.subst_var(&x, &pat.to_exp());
                        (pat, ctx1.fill(&body))
                    })
                    .collect(),
            ),
            Mdsr::Leaf(_) | Mdsr::Con(..) => {
                panic!("mdsr_map applied to a non-call inner result")
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::eval::{eval_cbn, EvalResult, Value};
    use crate::lang::parse::{parse_exp, parse_program};

    fn expgrowth() -> Program {
        let src = "g(Nil, y) = y; g(Cons(x, xs), y) = f(g(xs, y)); f(w) = B(w, w);";
        parse_program(src).unwrap().0
    }

    fn fresh_for(p: &Program, e: &Exp) -> FreshSource {
        FreshSource::for_run(p, e)
    }

    #[test]
    fn fresh_names_are_base_derived_and_skip_collisions() {
        let mut fs = FreshSource::new(vec!["xs0".to_string()]);
        assert_eq!(fs.fresh("xs"), "xs1");
        assert_eq!(fs.fresh("xs"), "xs2");
        assert_eq!(fs.fresh("x"), "x0");
    }

    #[test]
    fn drive_variable_is_none() {
        let p = expgrowth();
        let e = Exp::var("x");
        let mut fs = fresh_for(&p, &e);
        assert_eq!(drive_step(&p, &e, &mut fs), DriveStepResult::None);
    }

    #[test]
    fn drive_ordinary_call_unfolds() {
        let p = expgrowth();
        let e = parse_exp("f(g(xs0, y0))").unwrap();
        let mut fs = fresh_for(&p, &e);
        assert_eq!(
            drive_step(&p, &e, &mut fs),
            DriveStepResult::Unfold(parse_exp("B(g(xs0, y0), g(xs0, y0))").unwrap())
        );
    }

    #[test]
    fn drive_pm_on_variable_propagates() {
        let p = expgrowth();
        let e = parse_exp("g(xs0, y0)").unwrap();
        let mut fs = fresh_for(&p, &e);
        let r = drive_step(&p, &e, &mut fs);
        let expected = DriveStepResult::Cases(
            "xs0".into(),
            vec![
                (Pattern { ctr: "Nil".into(), vars: vec![] }, Exp::var("y0")),
                (
                    Pattern { ctr: "Cons".into(), vars: vec!["x0".into(), "xs1".into()] },
                    parse_exp("f(g(xs1, y0))").unwrap(),
                ),
            ],
        );
        assert_eq!(r, expected);
    }

    #[test]
    fn propagate_matches_worked_example() {
        let p = expgrowth();
        let clauses = match p.lookup("g").unwrap() {
            Def::PatternMatch { clauses, .. } => clauses.clone(),
            _ => unreachable!(),
        };
        let e = parse_exp("g(xs0, y0)").unwrap();
        let mut fs = fresh_for(&p, &e);
        let args = [Exp::var("y0")];
        let (pat, body) = propagate("xs0", &clauses[0], &args, &mut fs);
        assert_eq!(pat, Pattern { ctr: "Nil".into(), vars: vec![] });
        assert_eq!(body, Exp::var("y0"));
        let (pat, body) = propagate("xs0", &clauses[1], &args, &mut fs);
        assert_eq!(pat.ctr, "Cons");
        assert_eq!(body, parse_exp("f(g(xs1, y0))").unwrap());
    }

    #[test]
    fn propagate_reaches_into_other_arguments() {
        // scrutinee also occurs in another argument: it is rewritten there too
        let src = "g(C(v), y) = Pair(v, y); g(D, y) = y; h(a) = a;";
        let (p, _) = parse_program(src).unwrap();
        let e = parse_exp("g(x, h(x))").unwrap();
        let mut fs = fresh_for(&p, &e);
        let r = drive_step(&p, &e, &mut fs);
        match r {
            DriveStepResult::Cases(x, branches) => {
                assert_eq!(x, "x");
                assert_eq!(branches[0].1, parse_exp("Pair(v0, h(C(v0)))").unwrap());
                assert_eq!(branches[1].1, parse_exp("h(D())").unwrap());
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn mrdrive_variable_is_leaf() {
        let p = expgrowth();
        let e = Exp::var("x");
        let mut fs = fresh_for(&p, &e);
        assert_eq!(multi_drive_steps(&p, &e, &mut fs), vec![Mdsr::Leaf(Exp::var("x"))]);
    }

    #[test]
    fn mrdrive_pm_on_constructor() {
        // g(Cons(A(), Nil()), z): generalization first, then the unfolding
        let p = expgrowth();
        let e = parse_exp("g(Cons(A, Nil), z)").unwrap();
        let mut fs = fresh_for(&p, &e);
        let rs = multi_drive_steps(&p, &e, &mut fs);
        assert_eq!(rs.len(), 2);
        assert_eq!(
            rs[0],
            Mdsr::Let(
                vec![
                    ("x0".into(), parse_exp("A()").unwrap()),
                    ("xs0".into(), parse_exp("Nil()").unwrap()),
                    ("y0".into(), Exp::var("z")),
                ],
                parse_exp("f(g(xs0, y0))").unwrap()
            )
        );
        assert_eq!(rs[1], Mdsr::Unfold(parse_exp("f(g(Nil(), z))").unwrap()));
    }

    #[test]
    fn mrdrive_ordinary_call() {
        let p = expgrowth();
        let e = parse_exp("f(g(xs0, y0))").unwrap();
        let mut fs = fresh_for(&p, &e);
        let rs = multi_drive_steps(&p, &e, &mut fs);
        assert_eq!(
            rs,
            vec![
                Mdsr::Let(
                    vec![("w0".into(), parse_exp("g(xs0, y0)").unwrap())],
                    parse_exp("B(w0, w0)").unwrap()
                ),
                Mdsr::Unfold(parse_exp("B(g(xs0, y0), g(xs0, y0))").unwrap()),
            ]
        );
    }

    #[test]
    fn mrdrive_pm_on_nested_call_generalizes_outer_call() {
        let src = include_str!("../../../corpus/kmp.scp");
        let (p, target) = parse_program(src).unwrap();
        // matchHdEq(eqBool(p0, s0), pp0, ss0, op0, os0)
        let e = parse_exp("matchHdEq(eqBool(p0, s0), pp0, ss0, op0, os0)").unwrap();
        let mut fs = fresh_for(&p, target.as_ref().unwrap());
        let rs = multi_drive_steps(&p, &e, &mut fs);
        // first: full generalization of the outer call
        match &rs[0] {
            Mdsr::Let(binds, body) => {
                assert_eq!(binds.len(), 5);
                assert_eq!(binds[0].1, parse_exp("eqBool(p0, s0)").unwrap());
                let binder_vars: Vec<Exp> =
                    binds.iter().map(|(v, _)| Exp::Var(v.clone())).collect();
                assert_eq!(body, &Exp::Call(CallKind::Fun("matchHdEq".into()), binder_vars));
            }
            other => panic!("expected outer generalization, got {other:?}"),
        }
        // the rest are the spliced results of the inner call; eqBool(p0, s0)
        // case-analyzes the variable p0, so a single Cases alternative
        assert_eq!(rs.len(), 2);
        assert!(matches!(rs[1], Mdsr::Cases(..)));
        if let Mdsr::Cases(x, branches) = &rs[1] {
            assert_eq!(x, "p0");
            // positive propagation happens inside the outer context too
            for (pat, body) in branches {
                let printed = crate::lang::print::pretty_exp(body);
                assert!(printed.starts_with("matchHdEq("));
                assert!(!crate::lang::free_vars(body).contains(&"p0".to_string()));
                let _ = pat;
            }
        }
    }

    #[test]
    fn mdsr_sub_exps_ordering() {
        assert_eq!(mdsr_sub_exps(&Mdsr::Leaf(Exp::var("x"))), Vec::<Exp>::new());
        let let_r = Mdsr::Let(
            vec![("w0".into(), parse_exp("g(xs0, y0)").unwrap())],
            parse_exp("B(w0, w0)").unwrap(),
        );
        assert_eq!(
            mdsr_sub_exps(&let_r),
            vec![parse_exp("B(w0, w0)").unwrap(), parse_exp("g(xs0, y0)").unwrap()]
        );
        let con = Mdsr::Con("Cons".into(), vec![parse_exp("A()").unwrap(), parse_exp("Nil()").unwrap()]);
        assert_eq!(
            mdsr_sub_exps(&con),
            vec![parse_exp("A()").unwrap(), parse_exp("Nil()").unwrap()]
        );
    }

    #[test]
    fn mdsr_map_fills_holes() {
        let ctx = ExpContext::pm_call("g", &[Exp::var("ys")]);
        let mapped = mdsr_map(&ctx, vec![Mdsr::Unfold(parse_exp("f(x)").unwrap())]);
        assert_eq!(mapped, vec![Mdsr::Unfold(parse_exp("g(f(x), ys)").unwrap())]);

        // let bindings pass through untouched, only the body is wrapped
        let mapped = mdsr_map(
            &ctx,
            vec![Mdsr::Let(vec![("x0".into(), Exp::var("e0"))], parse_exp("f(x0)").unwrap())],
        );
        assert_eq!(
            mapped,
            vec![Mdsr::Let(
                vec![("x0".into(), Exp::var("e0"))],
                parse_exp("g(f(x0), ys)").unwrap()
            )]
        );

        // case branches substitute the branch pattern into the context
        let ctx = ExpContext::pm_call("g", &[parse_exp("h(s)").unwrap()]);
        let branches = vec![(
            Pattern { ctr: "True".into(), vars: vec![] },
            parse_exp("f(ss)").unwrap(),
        )];
        let mapped = mdsr_map(&ctx, vec![Mdsr::Cases("s".into(), branches)]);
        assert_eq!(
            mapped,
            vec![Mdsr::Cases(
                "s".into(),
                vec![(
                    Pattern { ctr: "True".into(), vars: vec![] },
                    parse_exp("g(f(ss), h(True()))").unwrap()
                )]
            )]
        );
    }

    #[test]
    fn generalization_precedes_driving_and_binders_are_fresh() {
        let src = include_str!("../../../corpus/kmp.scp");
        let (p, target) = parse_program(src).unwrap();
        let target = target.unwrap();
        let mut fs = fresh_for(&p, &target);
        // explore a few levels of driving and check the invariants everywhere
        let mut frontier = vec![target.clone()];
        for _ in 0..4 {
            let mut next = Vec::new();
            for c in &frontier {
                let rs = multi_drive_steps(&p, c, &mut fs);
                let input_vars = free_vars(c);
                let mut last_let: Option<usize> = None;
                let mut first_unfold: Option<usize> = None;
                for (i, r) in rs.iter().enumerate() {
                    match r {
                        Mdsr::Let(binds, _) => {
                            last_let = Some(i);
                            for (v, _) in binds {
                                assert!(!input_vars.contains(v), "binder {v} not fresh");
                            }
                        }
                        Mdsr::Unfold(_) => first_unfold = first_unfold.or(Some(i)),
                        Mdsr::Cases(_, branches) => {
                            for (pat, _) in branches {
                                for v in &pat.vars {
                                    assert!(!input_vars.contains(v), "pattern var {v} not fresh");
                                }
                            }
                        }
                        _ => {}
                    }
                    next.extend(mdsr_sub_exps(r));
                }
                if let (Some(l), Some(u)) = (last_let, first_unfold) {
                    assert!(l < u, "generalization must precede driving in {rs:?}");
                }
            }
            frontier = next;
        }
    }

    #[test]
    fn drive_step_agrees_with_last_multi_alternative() {
        let src = include_str!("../../../corpus/kmp.scp");
        let (p, target) = parse_program(src).unwrap();
        let target = target.unwrap();
        let mut frontier = vec![target.clone()];
        for _ in 0..3 {
            let mut next = Vec::new();
            for c in &frontier {
                let mut fs1 = fresh_for(&p, &target);
                let mut fs2 = fresh_for(&p, &target);
                let rs = multi_drive_steps(&p, c, &mut fs1);
                let ds = drive_step(&p, c, &mut fs2);
                match (rs.last().unwrap(), &ds) {
                    (Mdsr::Leaf(_), DriveStepResult::None) => {}
                    (Mdsr::Con(c1, a1), DriveStepResult::Con(c2, a2)) => {
                        assert_eq!((c1, a1), (c2, a2));
                    }
                    (Mdsr::Unfold(e1), DriveStepResult::Unfold(e2)) => assert_eq!(e1, e2),
                    (Mdsr::Cases(x1, b1), DriveStepResult::Cases(x2, b2)) => {
                        assert_eq!(x1, x2);
                        assert_eq!(b1, b2);
                    }
                    (m, d) => panic!("disagreement: {m:?} vs {d:?}"),
                }
                for r in &rs {
                    next.extend(mdsr_sub_exps(r));
                }
            }
            frontier = next;
        }
    }

    /// Reconstructs the expression an alternative stands for, given a ground
    /// environment (needed to pick a case branch).
    fn reconstruct(
        r: &Mdsr,
        env: &std::collections::HashMap<Name, Value>,
    ) -> (Exp, std::collections::HashMap<Name, Value>) {
        match r {
            Mdsr::Leaf(e) => (e.clone(), env.clone()),
            Mdsr::Con(c, args) => (Exp::Call(CallKind::Ctr(c.clone()), args.clone()), env.clone()),
            Mdsr::Unfold(e) => (e.clone(), env.clone()),
            Mdsr::Let(binds, body) => {
                let s: Subst = binds.iter().cloned().collect();
                (substitute(body, &s), env.clone())
            }
            Mdsr::Cases(x, branches) => {
                let v = env.get(x).expect("env covers scrutinee");
                let (pat, body) = branches
                    .iter()
                    .find(|(pat, _)| pat.ctr == v.ctr)
                    .expect("matching branch");
                let mut env1 = env.clone();
                for (pv, arg) in pat.vars.iter().zip(&v.args) {
                    env1.insert(pv.clone(), arg.clone());
                }
                (body.clone(), env1)
            }
        }
    }

    #[test]
    fn alternatives_are_semantically_sound() {
        type Env = std::collections::HashMap<Name, Value>;
        let (p, target) = parse_program(include_str!("../../../corpus/expgrowth.scp")).unwrap();
        let target = target.unwrap();
        let mut env0 = Env::new();
        env0.insert("z".to_string(), Value::new("Z", vec![]));
        let mut fs = fresh_for(&p, &target);
        let mut frontier: Vec<(Exp, Env)> = vec![(target.clone(), env0)];
        let mut compared = 0;
        for _ in 0..5 {
            let mut next = Vec::new();
            for (c, env) in &frontier {
                let base = eval_cbn(&p, c, env, 10_000);
                let rs = multi_drive_steps(&p, c, &mut fs);
                for r in &rs {
                    let (e1, env1) = reconstruct(r, env);
                    let got = eval_cbn(&p, &e1, &env1, 10_000);
                    if let (EvalResult::Value(a), EvalResult::Value(b)) =
                        (&base.result, &got.result)
                    {
                        assert_eq!(a, b, "alternative changed the meaning of {c:?}");
                        compared += 1;
                    }
                    // descend with environments matching each sub-configuration
                    match r {
                        Mdsr::Leaf(_) => {}
                        Mdsr::Con(_, args) => {
                            for a in args {
                                next.push((a.clone(), env.clone()));
                            }
                        }
                        Mdsr::Unfold(e) => next.push((e.clone(), env.clone())),
                        Mdsr::Let(binds, body) => {
                            let mut env1 = Env::new();
                            let mut all_values = true;
                            for (v, e) in binds {
                                match eval_cbn(&p, e, env, 10_000).result {
                                    EvalResult::Value(val) => {
                                        env1.insert(v.clone(), val);
                                    }
                                    _ => all_values = false,
                                }
                                next.push((e.clone(), env.clone()));
                            }
                            if all_values {
                                next.push((body.clone(), env1));
                            }
                        }
                        Mdsr::Cases(x, branches) => {
                            // only the branch matching the environment is
                            // reachable under it
                            let v = env.get(x).expect("env covers scrutinee");
                            for (pat, body) in branches {
                                if pat.ctr != v.ctr {
                                    continue;
                                }
                                let mut env1 = env.clone();
                                env1.remove(x);
                                for (pv, arg) in pat.vars.iter().zip(&v.args) {
                                    env1.insert(pv.clone(), arg.clone());
                                }
                                next.push((body.clone(), env1));
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        assert!(compared > 10, "too few comparisons actually happened");
    }
}
