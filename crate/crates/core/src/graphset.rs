//! The compact representation of the whole set of configuration graphs
//! produced by multi-result supercompilation, its lazy expansion into
//! individual graphs, and single-pass queries over it.
//!
//! A `GraphSet` node is either the empty set (whistle), a single fold node,
//! or a list of alternative developments of one configuration, each with one
//! sub-set per sub-configuration. Expanding a build node concatenates, per
//! alternative, the cartesian product of its children's expansions.

use crate::drive::Mdsr;
use crate::lang::print::pretty_exp;
use crate::lang::{Exp, Name, Pattern, Renaming};
use num_bigint::BigUint;
use std::fmt::Write;

/// A configuration paired with the driving step taken from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MConf {
    pub step: Mdsr,
    pub config: Exp,
}

/// One alternative development of a configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alt {
    pub step: Mdsr,
    pub children: Vec<GraphSet>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphSet {
    /// The whistle blew: an empty set of graphs.
    None,
    /// Folding to the ancestor `back` levels up, via `renaming`.
    /// The step in `conf` is a synthetic leaf and must not be interpreted.
    Fold {
        conf: MConf,
        back: usize,
        renaming: Renaming,
    },
    Build {
        conf: Exp,
        alts: Vec<Alt>,
    },
}

/// A single configuration graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfGraph {
    Leaf(Exp),
    Con(Name, Vec<ConfGraph>),
    Unfold(Box<ConfGraph>),
    Cases(Name, Vec<(Pattern, ConfGraph)>),
    Fold(usize, Renaming),
    Let(Vec<(Name, ConfGraph)>, Box<ConfGraph>),
}

/// Builds one configuration graph node from a configuration and the graphs
/// of its sub-configurations. Shape-directed by the driving step; the child
/// count must match `mdsr_sub_exps`.
pub fn build_graph(conf: &MConf, children: Vec<ConfGraph>) -> ConfGraph {
    match &conf.step {
        Mdsr::Leaf(e) => {
            assert!(children.is_empty(), "leaf with children");
            ConfGraph::Leaf(e.clone())
        }
        Mdsr::Con(c, args) => {
            assert_eq!(args.len(), children.len(), "constructor arity mismatch");
            ConfGraph::Con(c.clone(), children)
        }
        Mdsr::Unfold(_) => {
            let mut it = children.into_iter();
            let child = it.next().expect("unfold child");
            assert!(it.next().is_none(), "unfold with extra children");
            ConfGraph::Unfold(Box::new(child))
        }
        Mdsr::Cases(x, branches) => {
            assert_eq!(branches.len(), children.len(), "branch count mismatch");
            ConfGraph::Cases(
                x.clone(),
                branches
                    .iter()
                    .map(|(pat, _)| pat.clone())
                    .zip(children)
                    .collect(),
            )
        }
        Mdsr::Let(binds, _) => {
            assert_eq!(binds.len() + 1, children.len(), "binding count mismatch");
            let mut it = children.into_iter();
            let body = it.next().expect("let body child");
            ConfGraph::Let(
                binds.iter().map(|(v, _)| v.clone()).zip(it).collect(),
                Box::new(body),
            )
        }
    }
}

/// Lazily expands a graph set into the sequence of its configuration
/// graphs. Alternatives are expanded in order; within one alternative the
/// rightmost child varies fastest, so the first graph of the sequence takes
/// the first choice everywhere.
pub fn enumerate_graphs<'a>(gs: &'a GraphSet) -> Box<dyn Iterator<Item = ConfGraph> + 'a> {
    match gs {
        GraphSet::None => Box::new(std::iter::empty()),
        GraphSet::Fold { back, renaming, .. } => {
            Box::new(std::iter::once(ConfGraph::Fold(*back, renaming.clone())))
        }
        GraphSet::Build { alts, .. } => {
            Box::new(alts.iter().flat_map(move |alt| AltProduct::new(alt)))
        }
    }
}

/// Odometer over the cartesian product of the children's graph sequences.
struct AltProduct<'a> {
    alt: &'a Alt,
    iters: Vec<Box<dyn Iterator<Item = ConfGraph> + 'a>>,
    current: Option<Vec<ConfGraph>>,
}

impl<'a> AltProduct<'a> {
    fn new(alt: &'a Alt) -> AltProduct<'a> {
        let mut iters = Vec::with_capacity(alt.children.len());
        let mut current = Vec::with_capacity(alt.children.len());
        let mut empty = false;
        for child in &alt.children {
            let mut it = enumerate_graphs(child);
            match it.next() {
                Some(g) => current.push(g),
                None => {
                    empty = true;
                    break;
                }
            }
            iters.push(it);
        }
        AltProduct {
            alt,
            iters,
            current: if empty { None } else { Some(current) },
        }
    }
}

impl<'a> Iterator for AltProduct<'a> {
    type Item = ConfGraph;

    fn next(&mut self) -> Option<ConfGraph> {
        let current = self.current.as_mut()?;
        let conf = MConf {
            step: self.alt.step.clone(),
            config: Exp::Var(String::new()), // not consulted by build_graph
        };
        let out = build_graph(&conf, current.clone());
        // advance, rightmost child first
        let mut i = self.alt.children.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if let Some(g) = self.iters[i].next() {
                current[i] = g;
                for j in i + 1..self.alt.children.len() {
                    let mut it = enumerate_graphs(&self.alt.children[j]);
                    current[j] = it.next().expect("was non-empty before");
                    self.iters[j] = it;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Number of graphs in the set, computed structurally without enumeration.
pub fn count_graphs(gs: &GraphSet) -> BigUint {
    match gs {
        GraphSet::None => BigUint::from(0u32),
        GraphSet::Fold { .. } => BigUint::from(1u32),
        GraphSet::Build { alts, .. } => alts
            .iter()
            .map(|alt| {
                alt.children
                    .iter()
                    .map(count_graphs)
                    .fold(BigUint::from(1u32), |a, b| a * b)
            })
            .sum(),
    }
}

/// How much a graph node contributes to a graph's size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeMeasure {
    /// Every node counts 1.
    AllNodes,
    /// Unfold nodes count 0 (they are skipped during residualization),
    /// everything else counts 1.
    SkipUnfold,
}

impl SizeMeasure {
    fn node_weight(&self, g: &ConfGraph) -> u64 {
        match (self, g) {
            (SizeMeasure::SkipUnfold, ConfGraph::Unfold(_)) => 0,
            _ => 1,
        }
    }

    fn step_weight(&self, step: &Mdsr) -> u64 {
        match (self, step) {
            (SizeMeasure::SkipUnfold, Mdsr::Unfold(_)) => 0,
            _ => 1,
        }
    }
}

/// Total measured size of a configuration graph.
pub fn graph_size(g: &ConfGraph, m: SizeMeasure) -> u64 {
    let own = m.node_weight(g);
    own + match g {
        ConfGraph::Leaf(_) | ConfGraph::Fold(..) => 0,
        ConfGraph::Con(_, children) => children.iter().map(|c| graph_size(c, m)).sum(),
        ConfGraph::Unfold(child) => graph_size(child, m),
        ConfGraph::Cases(_, branches) => branches.iter().map(|(_, c)| graph_size(c, m)).sum(),
        ConfGraph::Let(binds, body) => {
            graph_size(body, m) + binds.iter().map(|(_, c)| graph_size(c, m)).sum::<u64>()
        }
    }
}

/// First graph of the enumeration, computed bottom-up in a single pass:
/// the earliest alternative whose children all admit a graph, with each
/// child's first graph.
pub fn first_graph(gs: &GraphSet) -> Option<ConfGraph> {
    extremal_graph(gs, false)
}

/// Last graph of the enumeration: the latest viable alternative with each
/// child's last graph.
pub fn last_graph(gs: &GraphSet) -> Option<ConfGraph> {
    extremal_graph(gs, true)
}

fn extremal_graph(gs: &GraphSet, last: bool) -> Option<ConfGraph> {
    match gs {
        GraphSet::None => None,
        GraphSet::Fold { back, renaming, .. } => Some(ConfGraph::Fold(*back, renaming.clone())),
        GraphSet::Build { conf, alts } => {
            let pick = |alt: &Alt| -> Option<ConfGraph> {
                let children = alt
                    .children
                    .iter()
                    .map(|c| extremal_graph(c, last))
                    .collect::<Option<Vec<_>>>()?;
                Some(build_graph(
                    &MConf { step: alt.step.clone(), config: conf.clone() },
                    children,
                ))
            };
            if last {
                alts.iter().rev().find_map(pick)
            } else {
                alts.iter().find_map(pick)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtremalMode {
    Min,
    Max,
}

/// Selects a graph of minimum (or maximum) measured size, returning its
/// size and the graph set pruned down to exactly that graph. Single pass
/// over the set; ties go to the earliest alternative.
pub fn min_max_size_graph(
    gs: &GraphSet,
    m: SizeMeasure,
    mode: ExtremalMode,
) -> Option<(u64, GraphSet)> {
    match gs {
        GraphSet::None => None,
        GraphSet::Fold { .. } => Some((1, gs.clone())),
        GraphSet::Build { conf, alts } => {
            let mut best: Option<(u64, Alt)> = None;
            for alt in alts {
                let mut total = m.step_weight(&alt.step);
                let mut pruned_children = Vec::with_capacity(alt.children.len());
                let mut viable = true;
                for child in &alt.children {
                    match min_max_size_graph(child, m, mode) {
                        Some((k, pruned)) => {
                            total += k;
                            pruned_children.push(pruned);
                        }
                        None => {
                            viable = false;
                            break;
                        }
                    }
                }
                if !viable {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((b, _)) => match mode {
                        ExtremalMode::Min => total < *b,
                        ExtremalMode::Max => total > *b,
                    },
                };
                if better {
                    best = Some((total, Alt { step: alt.step.clone(), children: pruned_children }));
                }
            }
            let (size, alt) = best?;
            Some((size, GraphSet::Build { conf: conf.clone(), alts: vec![alt] }))
        }
    }
}

/// DOT rendering of a graph set. Nodes are numbered in pre-order; fold
/// edges are drawn dashed back to their ancestor, annotated with the
/// renaming.
pub fn to_dot(gs: &GraphSet) -> String {
    let mut out = String::from("digraph graphset {\n  node [shape=box];\n");
    let mut counter = 0usize;
    let mut path = Vec::new();
    dot_gs(gs, &mut out, &mut counter, &mut path);
    out.push_str("}\n");
    out
}

fn renaming_label(r: &Renaming) -> String {
    r.pairs()
        .iter()
        .map(|(a, b)| format!("{a}->{b}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn dot_gs(gs: &GraphSet, out: &mut String, counter: &mut usize, path: &mut Vec<usize>) {
    let id = *counter;
    *counter += 1;
    match gs {
        GraphSet::None => {
            let _ = writeln!(out, "  n{id} [label=\"NONE\"];");
        }
        GraphSet::Fold { conf, back, renaming } => {
            let _ = writeln!(
                out,
                "  n{id} [label=\"{}\"];",
                escape(&pretty_exp(&conf.config))
            );
            let target = path[path.len() - back];
            let _ = writeln!(
                out,
                "  n{id} -> n{target} [style=dashed, label=\"{}\"];",
                escape(&renaming_label(renaming))
            );
        }
        GraphSet::Build { conf, alts } => {
            let _ = writeln!(out, "  n{id} [label=\"{}\"];", escape(&pretty_exp(conf)));
            path.push(id);
            for (ai, alt) in alts.iter().enumerate() {
                for (ci, child) in alt.children.iter().enumerate() {
                    let child_id = *counter;
                    let _ = writeln!(out, "  n{id} -> n{child_id} [label=\"{ai}.{ci}\"];");
                    dot_gs(child, out, counter, path);
                }
                // an alternative with no children still shows up as a node
                if alt.children.is_empty() {
                    let leaf_id = *counter;
                    *counter += 1;
                    let _ = writeln!(
                        out,
                        "  n{leaf_id} [label=\"{}\", shape=plaintext];",
                        escape(&step_label(&alt.step))
                    );
                    let _ = writeln!(out, "  n{id} -> n{leaf_id} [label=\"{ai}\"];");
                }
            }
            path.pop();
        }
    }
}

fn step_label(step: &Mdsr) -> String {
    match step {
        Mdsr::Leaf(e) => format!("leaf {}", pretty_exp(e)),
        Mdsr::Con(c, _) => format!("con {c}"),
        Mdsr::Unfold(_) => "unfold".to_string(),
        Mdsr::Cases(x, _) => format!("case {x}"),
        Mdsr::Let(binds, _) => format!(
            "let {}",
            binds.iter().map(|(v, _)| v.as_str()).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// DOT rendering of a single configuration graph.
pub fn graph_to_dot(g: &ConfGraph) -> String {
    let mut out = String::from("digraph confgraph {\n  node [shape=box];\n");
    let mut counter = 0usize;
    let mut path = Vec::new();
    dot_cg(g, &mut out, &mut counter, &mut path);
    out.push_str("}\n");
    out
}

fn dot_cg(g: &ConfGraph, out: &mut String, counter: &mut usize, path: &mut Vec<usize>) {
    let id = *counter;
    *counter += 1;
    fn edge(out: &mut String, counter: &usize, from: usize, label: &str) {
        let child_id = *counter;
        let _ = writeln!(out, "  n{from} -> n{child_id} [label=\"{}\"];", escape(label));
    }
    match g {
        ConfGraph::Leaf(e) => {
            let _ = writeln!(out, "  n{id} [label=\"{}\"];", escape(&pretty_exp(e)));
        }
        ConfGraph::Con(c, children) => {
            let _ = writeln!(out, "  n{id} [label=\"{c}\"];");
            path.push(id);
            for child in children {
                edge(out, counter, id, "");
                dot_cg(child, out, counter, path);
            }
            path.pop();
        }
        ConfGraph::Unfold(child) => {
            let _ = writeln!(out, "  n{id} [label=\"unfold\"];");
            path.push(id);
            edge(out, counter, id, "");
            dot_cg(child, out, counter, path);
            path.pop();
        }
        ConfGraph::Cases(x, branches) => {
            let _ = writeln!(out, "  n{id} [label=\"case {x}\"];");
            path.push(id);
            for (pat, child) in branches {
                edge(out, counter, id, &pretty_exp(&pat.to_exp()));
                dot_cg(child, out, counter, path);
            }
            path.pop();
        }
        ConfGraph::Fold(back, renaming) => {
            let _ = writeln!(out, "  n{id} [label=\"fold\"];");
            let target = path[path.len() - back];
            let _ = writeln!(
                out,
                "  n{id} -> n{target} [style=dashed, label=\"{}\"];",
                escape(&renaming_label(renaming))
            );
        }
        ConfGraph::Let(binds, body) => {
            let _ = writeln!(
                out,
                "  n{id} [label=\"{}\"];",
                escape(&step_label(&Mdsr::Let(
                    binds.iter().map(|(v, _)| (v.clone(), Exp::Var(v.clone()))).collect(),
                    Exp::Var(String::new())
                )))
            );
            path.push(id);
            edge(out, counter, id, "body");
            dot_cg(body, out, counter, path);
            for (v, child) in binds {
                edge(out, counter, id, v);
                dot_cg(child, out, counter, path);
            }
            path.pop();
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
