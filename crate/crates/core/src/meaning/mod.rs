//! Tree-structured meaning representations.
//!
//! A [`Forest`] is an arena of functor vertices. Every vertex carries a
//! [`Functor`] label (name and arity) and one [`Arg`] per argument position.
//! An argument position is either free (`_`), bound to an existentially
//! quantified variable shared across the whole forest, or filled by one or
//! more subterms. Several subterms in one position form a conjunction, and
//! the top level of a forest is itself a conjunction of its trees.
//!
//! Variables are annotations on argument positions, not vertices: they take
//! part in matching and rendering but never in [`Forest::vertex_count`].
//! A variable occurring only once carries no information and is equivalent
//! to a free position; [`Forest::normalize`] performs that rewrite.

mod canon;
mod count;
mod embed;
mod parse;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use canon::iso_equal;
pub use count::count_interpretations;
pub use embed::{embeds, first_occurrence, occurrences, Embedding};
pub use parse::{parse_term, parse_term_with, ParseOptions};

use crate::error::{Error, Result};

/// Index of a vertex inside its forest's arena.
pub type NodeId = usize;

/// Identity of an existential variable, scoped to one forest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

/// Vertex label: a predicate or function symbol together with its arity.
/// Constants are functors of arity zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Functor {
    pub name: Arc<str>,
    pub arity: usize,
}

impl Functor {
    pub fn new(name: &str, arity: usize) -> Self {
        Functor {
            name: Arc::from(name),
            arity,
        }
    }
}

impl fmt::Display for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Content of one argument position. The position (1-based) is the edge label
/// of every child stored in it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Arg {
    Free,
    Var(VarId),
    /// One or more subterms; more than one denotes a conjunction.
    Sub(Vec<NodeId>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub functor: Functor,
    pub args: Vec<Arg>,
    /// Parent vertex and the (0-based) argument index this vertex sits in.
    pub parent: Option<(NodeId, usize)>,
}

/// A forest of directed, vertex- and edge-labeled trees with forest-scoped
/// variables. Vertex ids are always assigned in preorder.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Forest {
    nodes: Vec<Node>,
    roots: Vec<NodeId>,
}

impl Forest {
    pub fn empty() -> Self {
        Forest::default()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of functor vertices; free positions and variables contribute nothing.
    pub fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of parent/child edges.
    pub fn edge_count(&self) -> usize {
        self.nodes.len() - self.roots.len()
    }

    /// Maximum number of edges on a root-to-leaf path; `None` for the empty forest.
    pub fn depth(&self) -> Option<usize> {
        fn go(f: &Forest, n: NodeId) -> usize {
            f.children(n).map(|c| 1 + go(f, c)).max().unwrap_or(0)
        }
        self.roots.iter().map(|&r| go(self, r)).max()
    }

    /// All children of a vertex, in argument order.
    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[id].args.iter().flat_map(|a| match a {
            Arg::Sub(c) => c.as_slice(),
            _ => &[],
        })
        .copied()
    }

    /// Sibling groups: the top-level conjunction followed by every filled
    /// argument position, in preorder. Each vertex belongs to exactly one group.
    pub fn groups(&self) -> Vec<&[NodeId]> {
        let mut out = Vec::with_capacity(self.nodes.len() + 1);
        if !self.roots.is_empty() {
            out.push(self.roots.as_slice());
        }
        for n in &self.nodes {
            for a in &n.args {
                if let Arg::Sub(c) = a {
                    out.push(c.as_slice());
                }
            }
        }
        out
    }

    /// Occurrence count of every variable.
    pub fn var_occurrences(&self) -> HashMap<VarId, usize> {
        let mut counts = HashMap::new();
        for n in &self.nodes {
            for a in &n.args {
                if let Arg::Var(v) = a {
                    *counts.entry(*v).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    /// Number of argument positions bound to a variable shared with another position.
    pub fn shared_var_slots(&self) -> usize {
        self.var_occurrences().values().filter(|&&c| c > 1).sum()
    }

    /// Replace every variable that occurs only once by a free position.
    pub fn normalize(&mut self) {
        let counts = self.var_occurrences();
        for n in &mut self.nodes {
            for a in &mut n.args {
                if let Arg::Var(v) = a {
                    if counts[v] < 2 {
                        *a = Arg::Free;
                    }
                }
            }
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// The sub-forest induced by the vertices with `keep[v] == true`.
    ///
    /// Every kept vertex whose parent is dropped becomes a root; roots keep
    /// their original preorder. Variables survive only in kept positions, and
    /// a position whose subterms are all dropped becomes free. The second
    /// component maps new vertex ids to the original ones.
    pub fn induced(&self, keep: &[bool]) -> (Forest, Vec<NodeId>) {
        debug_assert_eq!(keep.len(), self.nodes.len());
        let mut b = Builder::default();
        let mut origin = Vec::new();
        let mut roots = Vec::new();
        for id in self.preorder() {
            if !keep[id] {
                continue;
            }
            let parent_kept = self.nodes[id].parent.is_some_and(|(p, _)| keep[p]);
            if !parent_kept {
                roots.push(self.copy_kept(id, keep, &mut b, &mut origin, None));
            }
        }
        (b.finish(roots), origin)
    }

    fn copy_kept(
        &self,
        id: NodeId,
        keep: &[bool],
        b: &mut Builder,
        origin: &mut Vec<NodeId>,
        parent: Option<(NodeId, usize)>,
    ) -> NodeId {
        let src = &self.nodes[id];
        let new = b.push(src.functor.clone(), parent);
        origin.push(id);
        for (i, a) in src.args.iter().enumerate() {
            let arg = match a {
                Arg::Free => Arg::Free,
                Arg::Var(v) => Arg::Var(*v),
                Arg::Sub(children) => {
                    let kept: Vec<NodeId> = children
                        .iter()
                        .filter(|&&c| keep[c])
                        .map(|&c| self.copy_kept(c, keep, b, origin, Some((new, i))))
                        .collect();
                    if kept.is_empty() {
                        Arg::Free
                    } else {
                        Arg::Sub(kept)
                    }
                }
            };
            b.set_arg(new, i, arg);
        }
        new
    }

    /// Vertex ids in preorder (which, for arena-built forests, is `0..len`).
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.roots.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            let children: Vec<NodeId> = self.children(n).collect();
            stack.extend(children.into_iter().rev());
        }
        out
    }

    /// Remove the image of `emb` from `self`, leaving the uncovered remainder.
    pub fn subtract(&self, emb: &Embedding) -> Result<Forest> {
        if emb.map.iter().any(|&t| t >= self.nodes.len()) {
            return Err(Error::InvalidEmbedding(
                "image vertex out of range".to_string(),
            ));
        }
        let mut keep = vec![true; self.nodes.len()];
        for &t in &emb.map {
            if !keep[t] {
                return Err(Error::InvalidEmbedding("image is not injective".to_string()));
            }
            keep[t] = false;
        }
        Ok(self.induced(&keep).0.normalized())
    }

    /// Forest made of the trees of `self` followed by those of `other`,
    /// with the variables of `other` kept apart from those of `self`.
    pub fn disjoint_union(&self, other: &Forest) -> Forest {
        let offset = self
            .var_occurrences()
            .keys()
            .map(|v| v.0 + 1)
            .max()
            .unwrap_or(0);
        let base = self.nodes.len();
        let mut nodes = self.nodes.clone();
        for n in &other.nodes {
            let args = n
                .args
                .iter()
                .map(|a| match a {
                    Arg::Free => Arg::Free,
                    Arg::Var(v) => Arg::Var(VarId(v.0 + offset)),
                    Arg::Sub(c) => Arg::Sub(c.iter().map(|&x| x + base).collect()),
                })
                .collect();
            nodes.push(Node {
                functor: n.functor.clone(),
                args,
                parent: n.parent.map(|(p, i)| (p + base, i)),
            });
        }
        let mut roots = self.roots.clone();
        roots.extend(other.roots.iter().map(|&r| r + base));
        // Re-pack so ids stay in preorder.
        let f = Forest { nodes, roots };
        let keep = vec![true; f.nodes.len()];
        f.induced(&keep).0
    }

    /// Replace the single `name/2` wrapper tree, if present, by the content
    /// of its second argument.
    pub fn strip_wrapper(&self, name: &str) -> Forest {
        if self.roots.len() != 1 {
            return self.clone();
        }
        let root = &self.nodes[self.roots[0]];
        if &*root.functor.name != name || root.functor.arity != 2 {
            return self.clone();
        }
        if !matches!(root.args[1], Arg::Sub(_)) {
            return Forest::empty();
        }
        let mut keep = vec![true; self.nodes.len()];
        keep[self.roots[0]] = false;
        if let Arg::Sub(first) = &root.args[0] {
            for &c in first {
                for d in self.subtree(c) {
                    keep[d] = false;
                }
            }
        }
        self.induced(&keep).0
    }

    /// All vertices of the subtree rooted at `id`.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut i = 0;
        while i < out.len() {
            let n = out[i];
            out.extend(self.children(n));
            i += 1;
        }
        out
    }

    /// Canonical text; see [`render_term`].
    pub fn render(&self) -> String {
        canon::render_canonical(self)
    }

    /// Canonical key of the normalized forest: equal keys iff [`iso_equal`].
    pub fn key(&self) -> String {
        canon::render_canonical(&self.clone().normalized())
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Canonical rendering: trees and conjuncts ordered canonically, variables
/// named `A`, `B`, ... by first appearance, free positions as `_`.
pub fn render_term(f: &Forest) -> String {
    f.render()
}

/// Incremental arena construction in preorder.
#[derive(Default)]
pub(crate) struct Builder {
    nodes: Vec<Node>,
}

impl Builder {
    pub(crate) fn push(&mut self, functor: Functor, parent: Option<(NodeId, usize)>) -> NodeId {
        let arity = functor.arity;
        self.nodes.push(Node {
            functor,
            args: vec![Arg::Free; arity],
            parent,
        });
        self.nodes.len() - 1
    }

    pub(crate) fn set_arg(&mut self, node: NodeId, i: usize, arg: Arg) {
        self.nodes[node].args[i] = arg;
    }

    pub(crate) fn finish(self, roots: Vec<NodeId>) -> Forest {
        Forest {
            nodes: self.nodes,
            roots,
        }
    }
}
