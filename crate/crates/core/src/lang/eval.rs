//! A fuel-bounded call-by-name reference interpreter. One fuel unit is
//! spent per function unfolding or clause selection; constructor building
//! is free, so the fuel spent doubles as an execution step count.

use super::{substitute, CallKind, Def, Exp, Name, Program, Subst};
use std::collections::HashMap;
use std::fmt;

/// A ground constructor term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Value {
    pub ctr: Name,
    pub args: Vec<Value>,
}

impl Value {
    pub fn new(ctr: &str, args: Vec<Value>) -> Value {
        Value { ctr: ctr.to_string(), args }
    }

    pub fn to_exp(&self) -> Exp {
        Exp::Call(
            CallKind::Ctr(self.ctr.clone()),
            self.args.iter().map(Value::to_exp).collect(),
        )
    }

    /// Reads a ground expression back as a value; `None` if it contains a
    /// variable or a function call.
    pub fn from_exp(e: &Exp) -> Option<Value> {
        match e {
            Exp::Call(CallKind::Ctr(c), args) => Some(Value {
                ctr: c.clone(),
                args: args.iter().map(Value::from_exp).collect::<Option<_>>()?,
            }),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.ctr)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalResult {
    Value(Value),
    OutOfFuel,
    Stuck(String),
}

/// Result of evaluation together with the number of steps consumed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalOutcome {
    pub result: EvalResult,
    pub steps: u64,
}

enum Halt {
    OutOfFuel,
    Stuck(String),
}

struct Evaluator<'a> {
    program: &'a Program,
    fuel_left: u64,
}

impl<'a> Evaluator<'a> {
    fn spend(&mut self) -> Result<(), Halt> {
        if self.fuel_left == 0 {
            Err(Halt::OutOfFuel)
        } else {
            self.fuel_left -= 1;
            Ok(())
        }
    }

    /// Reduces to head-normal form: a constructor at the top.
    fn whnf(&mut self, mut e: Exp) -> Result<(Name, Vec<Exp>), Halt> {
        loop {
            match e {
                Exp::Var(v) => return Err(Halt::Stuck(format!("free variable `{v}`"))),
                Exp::Call(CallKind::Ctr(c), args) => return Ok((c, args)),
                Exp::Call(CallKind::Fun(f), args) => {
                    let def = self
                        .program
                        .lookup(&f)
                        .ok_or_else(|| Halt::Stuck(format!("undefined function `{f}`")))?;
                    match def {
                        Def::Ordinary { params, body, .. } => {
                            self.spend()?;
                            let s: Subst =
                                params.iter().cloned().zip(args.into_iter()).collect();
                            e = substitute(body, &s);
                        }
                        Def::PatternMatch { clauses, .. } => {
                            let mut it = args.into_iter();
                            let scrut = it.next().ok_or_else(|| {
                                Halt::Stuck(format!("`{f}` called without a scrutinee"))
                            })?;
                            let rest: Vec<Exp> = it.collect();
                            let (c, cargs) = self.whnf(scrut)?;
                            let cl = clauses
                                .iter()
                                .find(|cl| cl.pat.ctr == c)
                                .ok_or_else(|| {
                                    Halt::Stuck(format!("no clause of `{f}` matches `{c}`"))
                                })?;
                            self.spend()?;
                            let mut s: Subst = cl
                                .pat
                                .vars
                                .iter()
                                .cloned()
                                .zip(cargs.into_iter())
                                .collect();
                            s.extend(cl.params.iter().cloned().zip(rest.into_iter()));
                            e = substitute(&cl.body, &s);
                        }
                    }
                }
            }
        }
    }

    fn eval(&mut self, e: Exp) -> Result<Value, Halt> {
        let (ctr, args) = self.whnf(e)?;
        let args = args
            .into_iter()
            .map(|a| self.eval(a))
            .collect::<Result<_, _>>()?;
        Ok(Value { ctr, args })
    }
}

/// Evaluates `e` under `env` with at most `fuel` steps.
pub fn eval_cbn(p: &Program, e: &Exp, env: &HashMap<Name, Value>, fuel: u64) -> EvalOutcome {
    if fuel == 0 {
        return EvalOutcome { result: EvalResult::OutOfFuel, steps: 0 };
    }
    let s: Subst = env.iter().map(|(k, v)| (k.clone(), v.to_exp())).collect();
    let closed = substitute(e, &s);
    let mut ev = Evaluator { program: p, fuel_left: fuel };
    let result = match ev.eval(closed) {
        Ok(v) => EvalResult::Value(v),
        Err(Halt::OutOfFuel) => EvalResult::OutOfFuel,
        Err(Halt::Stuck(m)) => EvalResult::Stuck(m),
    };
    EvalOutcome { result, steps: fuel - ev.fuel_left }
}
