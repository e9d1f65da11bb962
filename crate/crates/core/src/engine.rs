//! The multi-result supercompilation loop: repeated multi-result driving
//! with folding to renamed ancestors and a homeomorphic-embedding whistle,
//! producing a `GraphSet`.

use crate::drive::{mdsr_sub_exps, multi_drive_steps, FreshSource, Mdsr};
use crate::graphset::{Alt, GraphSet, MConf};
use crate::lang::{find_renaming, Exp, Program};
use thiserror::Error;

/// Homeomorphic embedding. `a` embeds into `b` if they are both variables,
/// if `a` embeds into some argument of `b` (diving), or if they are calls of
/// the same name and arity and the arguments embed pairwise (coupling).
pub fn embeds(a: &Exp, b: &Exp) -> bool {
    couples(a, b) || dives(a, b)
}

fn dives(a: &Exp, b: &Exp) -> bool {
    match b {
        Exp::Var(_) => false,
        Exp::Call(_, args) => args.iter().any(|arg| embeds(a, arg)),
    }
}

fn couples(a: &Exp, b: &Exp) -> bool {
    match (a, b) {
        (Exp::Var(_), Exp::Var(_)) => true,
        (Exp::Call(k1, xs), Exp::Call(k2, ys)) => {
            k1 == k2 && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| embeds(x, y))
        }
        _ => false,
    }
}

/// Whether a configuration's step is global (it case-analyzes a free
/// variable) or local. The whistle only compares configurations of the same
/// kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HistKind {
    Local,
    Global,
}

struct HistEntry {
    kind: HistKind,
    config: Exp,
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    /// Hard cap on the number of graph-set nodes built in one run; a safety
    /// valve against configurations the whistle does not catch fast enough.
    pub max_nodes: u64,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig { max_nodes: 10_000_000 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("graph set exceeded the node budget of {0}")]
    NodeBudget(u64),
}

struct Engine<'a> {
    program: &'a Program,
    fresh: FreshSource,
    history: Vec<HistEntry>,
    nodes: u64,
    max_nodes: u64,
}

impl<'a> Engine<'a> {
    fn tick(&mut self) -> Result<(), EngineError> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            Err(EngineError::NodeBudget(self.max_nodes))
        } else {
            Ok(())
        }
    }

    fn go(&mut self, c: Exp) -> Result<GraphSet, EngineError> {
        self.tick()?;

        // Fold to a renamed ancestor anywhere in the history; the
        // shallowest one wins.
        for (i, entry) in self.history.iter().enumerate() {
            if let Some(renaming) = find_renaming(&entry.config, &c) {
                return Ok(GraphSet::Fold {
                    conf: MConf { step: Mdsr::Leaf(c.clone()), config: c },
                    back: self.history.len() - i,
                    renaming,
                });
            }
        }

        let steps = multi_drive_steps(self.program, &c, &mut self.fresh);
        let kind = if steps.iter().any(|r| matches!(r, Mdsr::Cases(..))) {
            HistKind::Global
        } else {
            HistKind::Local
        };

        // The whistle: stop if a relevant ancestor embeds into this
        // configuration. For a global step every global ancestor is
        // relevant; for a local step only the unbroken run of local
        // ancestors just above.
        let whistle = match kind {
            HistKind::Global => self
                .history
                .iter()
                .filter(|h| h.kind == HistKind::Global)
                .any(|h| embeds(&h.config, &c)),
            HistKind::Local => self
                .history
                .iter()
                .rev()
                .take_while(|h| h.kind == HistKind::Local)
                .any(|h| embeds(&h.config, &c)),
        };
        if whistle {
            return Ok(GraphSet::None);
        }

        self.history.push(HistEntry { kind, config: c.clone() });
        let mut alts = Vec::with_capacity(steps.len());
        let mut result = Ok(());
        'outer: for step in steps {
            let mut children = Vec::new();
            for sub in mdsr_sub_exps(&step) {
                match self.go(sub) {
                    Ok(gs) => children.push(gs),
                    Err(e) => {
                        result = Err(e);
                        break 'outer;
                    }
                }
            }
            alts.push(Alt { step, children });
        }
        self.history.pop();
        result?;
        Ok(GraphSet::Build { conf: c, alts })
    }
}

/// Supercompiles `c0` against `p`, returning the set of all configuration
/// graphs as a `GraphSet`.
pub fn mr_scp(p: &Program, c0: &Exp) -> Result<GraphSet, EngineError> {
    mr_scp_with(p, c0, &EngineConfig::default())
}

pub fn mr_scp_with(p: &Program, c0: &Exp, cfg: &EngineConfig) -> Result<GraphSet, EngineError> {
    let mut engine = Engine {
        program: p,
        fresh: FreshSource::for_run(p, c0),
        history: Vec::new(),
        nodes: 0,
        max_nodes: cfg.max_nodes,
    };
    engine.go(c0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphset::count_graphs;
    use crate::lang::parse::{parse_exp, parse_program};
    use crate::lang::{substitute, Renaming};

    #[test]
    fn embeds_examples() {
        let x = parse_exp("x").unwrap();
        let y = parse_exp("y").unwrap();
        assert!(embeds(&x, &y));
        assert!(embeds(
            &parse_exp("f(x)").unwrap(),
            &parse_exp("f(g(x))").unwrap()
        ));
        assert!(!embeds(
            &parse_exp("f(g(x))").unwrap(),
            &parse_exp("f(x)").unwrap()
        ));
        // a call never embeds into a bare variable
        assert!(!embeds(&parse_exp("f(x)").unwrap(), &x));
        // different constructors couple with nothing, but diving still works
        assert!(embeds(
            &parse_exp("A()").unwrap(),
            &parse_exp("Cons(A(), Nil())").unwrap()
        ));
        assert!(!embeds(
            &parse_exp("A()").unwrap(),
            &parse_exp("Nil()").unwrap()
        ));
    }

    #[test]
    fn embeds_is_reflexive() {
        for s in ["x", "f(x, y)", "Cons(A(), append(xs, ys))"] {
            let e = parse_exp(s).unwrap();
            assert!(embeds(&e, &e), "embeds not reflexive on {s}");
        }
    }

    #[test]
    fn variable_supercompiles_to_single_leaf() {
        let p = parse_program("").unwrap().0;
        let gs = mr_scp(&p, &parse_exp("x").unwrap()).unwrap();
        match &gs {
            GraphSet::Build { alts, .. } => {
                assert_eq!(alts.len(), 1);
                assert!(matches!(alts[0].step, Mdsr::Leaf(_)));
                assert!(alts[0].children.is_empty());
            }
            other => panic!("unexpected: {other:?}"),
        }
        assert_eq!(count_graphs(&gs), 1u32.into());
    }

    #[test]
    fn expgrowth_small_root_shape() {
        // g(Cons(A(), Nil()), z): generalization alternative then unfolding
        let src = "g(Nil, y) = y; g(Cons(x, xs), y) = f(g(xs, y)); f(w) = B(w, w);";
        let p = parse_program(src).unwrap().0;
        let c0 = parse_exp("g(Cons(A, Nil), z)").unwrap();
        let gs = mr_scp(&p, &c0).unwrap();
        match &gs {
            GraphSet::Build { conf, alts } => {
                assert_eq!(conf, &c0);
                assert_eq!(alts.len(), 2);
                assert!(matches!(alts[0].step, Mdsr::Let(..)));
                assert!(matches!(alts[1].step, Mdsr::Unfold(_)));
                // let has body + 3 bindings, unfold has one child
                assert_eq!(alts[0].children.len(), 4);
                assert_eq!(alts[1].children.len(), 1);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    fn find_fold<'a>(gs: &'a GraphSet, out: &mut Vec<&'a GraphSet>) {
        match gs {
            GraphSet::None => {}
            GraphSet::Fold { .. } => out.push(gs),
            GraphSet::Build { alts, .. } => {
                for alt in alts {
                    for c in &alt.children {
                        find_fold(c, out);
                    }
                }
            }
        }
    }

    #[test]
    fn expgrowth_small_folds_with_expected_renaming() {
        let src = "g(Nil, y) = y; g(Cons(x, xs), y) = f(g(xs, y)); f(w) = B(w, w);";
        let p = parse_program(src).unwrap().0;
        let c0 = parse_exp("g(Cons(A, Nil), z)").unwrap();
        let gs = mr_scp(&p, &c0).unwrap();
        let mut folds = Vec::new();
        find_fold(&gs, &mut folds);
        assert!(!folds.is_empty());
        // f(g(xs1, y0)) folds back to f(g(xs0, y0)) with xs0 -> xs1, y0 -> y0
        let want: Vec<(String, String)> = vec![
            ("xs0".into(), "xs1".into()),
            ("y0".into(), "y0".into()),
        ];
        assert!(folds.iter().any(|f| match f {
            GraphSet::Fold { renaming, .. } => renaming.pairs() == want.as_slice(),
            _ => false,
        }));
    }

    /// Walks a graph set keeping the stack of build configurations, checking
    /// every fold's back-reference and renaming.
    fn check_folds(gs: &GraphSet, stack: &mut Vec<Exp>) {
        match gs {
            GraphSet::None => {}
            GraphSet::Fold { conf, back, renaming } => {
                assert!(*back >= 1 && *back <= stack.len(), "dangling back pointer");
                let ancestor = &stack[stack.len() - back];
                assert_eq!(
                    substitute(ancestor, &renaming.as_subst()),
                    conf.config,
                    "fold renaming does not reproduce the configuration"
                );
            }
            GraphSet::Build { conf, alts } => {
                stack.push(conf.clone());
                for alt in alts {
                    for c in &alt.children {
                        check_folds(c, stack);
                    }
                }
                stack.pop();
            }
        }
    }

    #[test]
    fn folds_are_valid_across_corpus() {
        for src in [
            include_str!("../../../corpus/expgrowth.scp"),
            include_str!("../../../corpus/doubleapp.scp"),
            include_str!("../../../corpus/eqbool.scp"),
            include_str!("../../../corpus/evenodd.scp"),
            include_str!("../../../corpus/idnat.scp"),
        ] {
            let (p, c0) = parse_program(src).unwrap();
            let c0 = c0.unwrap();
            let gs = mr_scp(&p, &c0).unwrap();
            check_folds(&gs, &mut Vec::new());
            assert!(count_graphs(&gs) > 0u32.into());
        }
    }

    #[test]
    fn node_budget_aborts() {
        let (p, c0) = parse_program(include_str!("../../../corpus/kmp.scp")).unwrap();
        let cfg = EngineConfig { max_nodes: 50 };
        assert_eq!(
            mr_scp_with(&p, &c0.unwrap(), &cfg),
            Err(EngineError::NodeBudget(50))
        );
    }

    #[test]
    fn renaming_direction_is_ancestor_to_current() {
        // sanity for the property `check_folds` relies on
        let a = parse_exp("f(x, y)").unwrap();
        let c = parse_exp("f(u, v)").unwrap();
        let r: Renaming = crate::lang::find_renaming(&a, &c).unwrap();
        assert_eq!(substitute(&a, &r.as_subst()), c);
    }
}
