//! Pretty-printing back to the concrete syntax. Zero-arity constructors are
//! always printed with `()`, so the output round-trips through the parser.

use super::{CallKind, Def, Exp, Pattern, Program};
use std::fmt::Write;

pub fn pretty_exp(e: &Exp) -> String {
    let mut s = String::new();
    write_exp(&mut s, e);
    s
}

fn write_exp(out: &mut String, e: &Exp) {
    match e {
        Exp::Var(v) => out.push_str(v),
        Exp::Call(kind, args) => {
            match kind {
                CallKind::Ctr(n) | CallKind::Fun(n) => out.push_str(n),
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_exp(out, a);
            }
            out.push(')');
        }
    }
}

fn write_pattern(out: &mut String, p: &Pattern) {
    out.push_str(&p.ctr);
    out.push('(');
    for (i, v) in p.vars.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(v);
    }
    out.push(')');
}

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for d in p.defs() {
        match d {
            Def::Ordinary { name, params, body } => {
                let _ = write!(out, "{name}(");
                for (i, v) in params.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(v);
                }
                out.push_str(") = ");
                write_exp(&mut out, body);
                out.push_str(";\n");
            }
            Def::PatternMatch { name, clauses } => {
                for cl in clauses {
                    let _ = write!(out, "{name}(");
                    write_pattern(&mut out, &cl.pat);
                    for v in &cl.params {
                        out.push_str(", ");
                        out.push_str(v);
                    }
                    out.push_str(") = ");
                    write_exp(&mut out, &cl.body);
                    out.push_str(";\n");
                }
            }
        }
    }
    out
}

/// Prints a program followed by its target expression, the same layout as a
/// source file.
pub fn pretty_program_with_main(p: &Program, main: &Exp) -> String {
    let mut out = pretty_program(p);
    let _ = write!(out, "expression: {}", pretty_exp(main));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::parse_program;

    #[test]
    fn prints_basics() {
        assert_eq!(pretty_exp(&Exp::var("x")), "x");
        assert_eq!(pretty_exp(&Exp::ctr("Nil", vec![])), "Nil()");
    }

    #[test]
    fn round_trips_substring_program() {
        let src = "\
not(True)  = False;
not(False) = True;
eqBool(True,  b) = b;
eqBool(False, b) = not(b);
match(Nil,         ss, op, os) = True;
match(Cons(p, pp), ss, op, os) = matchCons(ss, p, pp, op, os);
matchCons(Nil,         p, pp, op, os) = False;
matchCons(Cons(s, ss), p, pp, op, os) = matchHdEq(eqBool(p, s), pp, ss, op, os);
matchHdEq(True,  pp, ss, op, os) = match(pp, ss, op, os);
matchHdEq(False, pp, ss, op, os) = next(os, op);
next(Nil,         op) = False;
next(Cons(s, ss), op) = match(op, ss, op, ss);
isSublist(p, s) = match(p, s, p, s);
";
        let (p1, _) = parse_program(src).unwrap();
        let printed = pretty_program(&p1);
        let (p2, _) = parse_program(&printed).unwrap();
        assert_eq!(p1.defs(), p2.defs());
        // printing is a fixpoint after one round
        assert_eq!(printed, pretty_program(&p2));
    }
}
