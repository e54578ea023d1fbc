//! Candidate meanings: largest common connected sub-forests with
//! variable-aware generalization, and exhaustive fracturing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::meaning::{Arg, Builder, Forest, NodeId, VarId};
use crate::rng;

/// Conjunctions wider than this are aligned greedily.
const MAX_EXACT_WIDTH: usize = 8;
/// Upper bound on the optimal alignments explored per LICS call.
const MAX_ALIGNMENTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CandidateMode {
    #[default]
    Lics,
    Fracture,
}

impl FromStr for CandidateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lics" => Ok(CandidateMode::Lics),
            "fracture" => Ok(CandidateMode::Fracture),
            other => Err(Error::InvalidArgument(format!("unknown candidate mode '{other}'"))),
        }
    }
}

impl fmt::Display for CandidateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateMode::Lics => "lics",
            CandidateMode::Fracture => "fracture",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub pairs_per_phrase: usize,
    pub seed: u64,
    pub mode: CandidateMode,
    /// Largest fracture set (estimated) that may be enumerated.
    pub fracture_cap: u128,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            pairs_per_phrase: 20,
            seed: 0,
            mode: CandidateMode::Lics,
            fracture_cap: 200_000,
        }
    }
}

/// Candidate meanings for a phrase given the (remaining) meanings of the
/// examples it occurs in, listed in corpus order.
///
/// With a single source the whole forest is the only candidate. Otherwise up
/// to `pairs_per_phrase` distinct source pairs are drawn (all of them when
/// there are no more) and their LICS collected; in fracture mode the same
/// number of sources is drawn and all their non-empty fractures collected.
/// The result is deduplicated and sorted by canonical key.
pub fn candidate_meanings(sources: &[&Forest], stream_key: &str, cfg: &SamplerConfig) -> Result<Vec<Forest>> {
    let sources: Vec<&Forest> = sources.iter().copied().filter(|f| !f.is_empty()).collect();
    let mut found: BTreeMap<String, Forest> = BTreeMap::new();
    let mut add = |f: Forest| {
        if !f.is_empty() {
            found.entry(f.key()).or_insert(f);
        }
    };
    let k = sources.len();
    let budget = cfg.pairs_per_phrase.max(1);
    match cfg.mode {
        CandidateMode::Lics if k == 1 => add(sources[0].clone().normalized()),
        CandidateMode::Lics => {
            for (i, j) in sample_pairs(k, budget, cfg.seed, stream_key) {
                for f in lics(sources[i], sources[j]) {
                    add(f);
                }
            }
        }
        CandidateMode::Fracture => {
            let chosen: Vec<usize> = if k <= budget {
                (0..k).collect()
            } else {
                let mut rng = rng::keyed_stream(cfg.seed, stream_key);
                let mut v = index::sample(&mut rng, k, budget).into_vec();
                v.sort_unstable();
                v
            };
            for i in chosen {
                for f in fracture(sources[i], cfg.fracture_cap)? {
                    add(f);
                }
            }
        }
    }
    Ok(found.into_values().collect())
}

/// Up to `budget` distinct unordered pairs `(i, j)`, `i < j < k`, in
/// increasing order. All pairs when there are at most `budget`.
pub fn sample_pairs(k: usize, budget: usize, seed: u64, stream_key: &str) -> Vec<(usize, usize)> {
    let total = k * k.saturating_sub(1) / 2;
    let decode = |mut r: usize| {
        let mut i = 0;
        while r >= k - 1 - i {
            r -= k - 1 - i;
            i += 1;
        }
        (i, i + 1 + r)
    };
    if total <= budget {
        return (0..total).map(decode).collect();
    }
    let mut rng = rng::keyed_stream(seed, stream_key);
    let mut picks = index::sample(&mut rng, total, budget).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(decode).collect()
}

/// Largest common connected sub-forests of `a` and `b`, generalized by
/// anti-unification. Size is measured in functor vertices and variables are
/// ignored while searching; every optimal alignment (up to a cap) yields a
/// candidate. Results are canonical, deduplicated and sorted by key; among
/// results with the same variable-free skeleton only those keeping the most
/// variable sharing survive.
pub fn lics(a: &Forest, b: &Forest) -> Vec<Forest> {
    let a = a.clone().normalized();
    let b = b.clone().normalized();
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let al = Aligner::new(&a, &b);
    let mut best_w = 0;
    let mut group_pairs = Vec::new();
    for ga in a.groups() {
        for gb in b.groups() {
            let (w, _) = al.match_groups(ga, gb, false);
            if w == 0 {
                continue;
            }
            if w > best_w {
                best_w = w;
                group_pairs.clear();
            }
            if w == best_w {
                group_pairs.push((ga, gb));
            }
        }
    }
    let mut alignments = Vec::new();
    for (ga, gb) in group_pairs {
        for al_set in al.group_alignments(ga, gb) {
            if alignments.len() >= MAX_ALIGNMENTS {
                break;
            }
            alignments.push(al_set);
        }
    }
    let mut by_skeleton: BTreeMap<String, (usize, BTreeMap<String, Forest>)> = BTreeMap::new();
    for pairs in alignments {
        let g = build_generalization(&a, &b, &pairs);
        let skeleton = strip_variables(&g).key();
        let shared = g.shared_var_slots();
        let entry = by_skeleton.entry(skeleton).or_insert((0, BTreeMap::new()));
        if shared > entry.0 {
            *entry = (shared, BTreeMap::new());
        }
        if shared == entry.0 {
            entry.1.entry(g.key()).or_insert(g);
        }
    }
    let mut out: BTreeMap<String, Forest> = BTreeMap::new();
    for (_, (_, gs)) in by_skeleton {
        out.extend(gs);
    }
    out.into_values().collect()
}

/// Anti-unification of two forests under their best LICS alignment:
/// matched structure is kept, unmatched subterms are dropped, and argument
/// positions holding variables in both inputs become variables, the same
/// pair of input variables always mapping to the same output variable.
/// Among equally large alignments the one keeping the most variable sharing
/// wins. Returns the empty forest when nothing is shared.
pub fn lgg_refine(a: &Forest, b: &Forest) -> Forest {
    lics(a, b)
        .into_iter()
        .max_by(|x, y| {
            (x.vertex_count(), x.shared_var_slots())
                .cmp(&(y.vertex_count(), y.shared_var_slots()))
                .then_with(|| y.key().cmp(&x.key()))
        })
        .unwrap_or_default()
}

fn strip_variables(f: &Forest) -> Forest {
    let mut b = Builder::default();
    fn copy(f: &Forest, id: NodeId, b: &mut Builder, parent: Option<(NodeId, usize)>) -> NodeId {
        let n = f.node(id);
        let new = b.push(n.functor.clone(), parent);
        for (i, a) in n.args.iter().enumerate() {
            if let Arg::Sub(c) = a {
                let kids = c.iter().map(|&x| copy(f, x, b, Some((new, i)))).collect();
                b.set_arg(new, i, Arg::Sub(kids));
            }
        }
        new
    }
    let roots = f.roots().iter().map(|&r| copy(f, r, &mut b, None)).collect();
    b.finish(roots)
}

/// A set of aligned vertex pairs, closed under the parent relation.
type Alignment = Vec<(NodeId, NodeId)>;

struct Aligner<'a> {
    a: &'a Forest,
    b: &'a Forest,
    /// Size of the largest common rooted subtree for each vertex pair.
    best: Vec<Vec<usize>>,
}

impl<'a> Aligner<'a> {
    fn new(a: &'a Forest, b: &'a Forest) -> Self {
        let mut al = Aligner {
            a,
            b,
            best: vec![vec![0; b.vertex_count()]; a.vertex_count()],
        };
        // Children have larger ids than their parents.
        for u in (0..a.vertex_count()).rev() {
            for w in (0..b.vertex_count()).rev() {
                if a.node(u).functor != b.node(w).functor {
                    continue;
                }
                let mut total = 1;
                for (x, y) in a.node(u).args.iter().zip(&b.node(w).args) {
                    if let (Arg::Sub(cx), Arg::Sub(cy)) = (x, y) {
                        total += al.match_groups(cx, cy, false).0;
                    }
                }
                al.best[u][w] = total;
            }
        }
        al
    }

    /// Maximum total weight of an injective matching between two sibling
    /// groups; with `all`, every optimal matching as well.
    fn match_groups(&self, ga: &[NodeId], gb: &[NodeId], all: bool) -> (usize, Vec<Alignment>) {
        if ga.len() > MAX_EXACT_WIDTH || gb.len() > MAX_EXACT_WIDTH {
            return self.greedy_match(ga, gb);
        }
        let mut best = 0;
        let mut found: Vec<Alignment> = Vec::new();
        let mut used = vec![false; gb.len()];
        let mut current = Vec::new();
        self.enumerate(ga, gb, 0, 0, &mut used, &mut current, &mut best, &mut found, all);
        (best, found)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &self,
        ga: &[NodeId],
        gb: &[NodeId],
        i: usize,
        weight: usize,
        used: &mut [bool],
        current: &mut Alignment,
        best: &mut usize,
        found: &mut Vec<Alignment>,
        all: bool,
    ) {
        if i == ga.len() {
            if weight > *best {
                *best = weight;
                found.clear();
            }
            if all && weight == *best && weight > 0 && found.len() < MAX_ALIGNMENTS {
                found.push(current.clone());
            }
            return;
        }
        // Upper bound: everything left matched at its best.
        let bound: usize = ga[i..]
            .iter()
            .map(|&u| gb.iter().map(|&w| self.best[u][w]).max().unwrap_or(0))
            .sum();
        if weight + bound < *best || (!all && weight + bound == *best && *best > 0) {
            return;
        }
        let u = ga[i];
        for (j, &w) in gb.iter().enumerate() {
            if used[j] || self.best[u][w] == 0 {
                continue;
            }
            used[j] = true;
            current.push((u, w));
            self.enumerate(ga, gb, i + 1, weight + self.best[u][w], used, current, best, found, all);
            current.pop();
            used[j] = false;
        }
        self.enumerate(ga, gb, i + 1, weight, used, current, best, found, all);
    }

    fn greedy_match(&self, ga: &[NodeId], gb: &[NodeId]) -> (usize, Vec<Alignment>) {
        let mut pairs: Vec<(usize, NodeId, NodeId)> = ga
            .iter()
            .flat_map(|&u| gb.iter().map(move |&w| (u, w)))
            .filter(|&(u, w)| self.best[u][w] > 0)
            .map(|(u, w)| (self.best[u][w], u, w))
            .collect();
        pairs.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut used_a = HashMap::new();
        let mut used_b = HashMap::new();
        let mut total = 0;
        let mut m = Vec::new();
        for (wt, u, w) in pairs {
            if used_a.contains_key(&u) || used_b.contains_key(&w) {
                continue;
            }
            used_a.insert(u, ());
            used_b.insert(w, ());
            total += wt;
            m.push((u, w));
        }
        (total, if total > 0 { vec![m] } else { Vec::new() })
    }

    /// Every optimal full alignment below a group pair: an optimal member
    /// matching, then optimal alignments below each matched pair.
    fn group_alignments(&self, ga: &[NodeId], gb: &[NodeId]) -> Vec<Alignment> {
        let (_, matchings) = self.match_groups(ga, gb, true);
        let mut out = Vec::new();
        for m in matchings {
            let mut partial: Vec<Alignment> = vec![Vec::new()];
            for &(u, w) in &m {
                let below = self.pair_alignments(u, w);
                partial = cross(&partial, &below);
            }
            out.extend(partial);
            if out.len() >= MAX_ALIGNMENTS {
                out.truncate(MAX_ALIGNMENTS);
                break;
            }
        }
        out
    }

    fn pair_alignments(&self, u: NodeId, w: NodeId) -> Vec<Alignment> {
        let mut partial: Vec<Alignment> = vec![vec![(u, w)]];
        for (x, y) in self.a.node(u).args.iter().zip(&self.b.node(w).args) {
            if let (Arg::Sub(cx), Arg::Sub(cy)) = (x, y) {
                let below = self.group_alignments(cx, cy);
                if !below.is_empty() {
                    partial = cross(&partial, &below);
                }
            }
        }
        partial
    }
}

fn cross(left: &[Alignment], right: &[Alignment]) -> Vec<Alignment> {
    let mut out = Vec::new();
    'outer: for l in left {
        for r in right {
            if out.len() >= MAX_ALIGNMENTS {
                break 'outer;
            }
            let mut v = l.clone();
            v.extend_from_slice(r);
            out.push(v);
        }
    }
    out
}

fn build_generalization(a: &Forest, b: &Forest, pairs: &[(NodeId, NodeId)]) -> Forest {
    let mut partner = vec![None; a.vertex_count()];
    for &(u, w) in pairs {
        partner[u] = Some(w);
    }
    let is_child = |u: NodeId| a.node(u).parent.is_some_and(|(p, _)| partner[p].is_some());
    let mut roots: Vec<NodeId> = pairs.iter().map(|&(u, _)| u).filter(|&u| !is_child(u)).collect();
    roots.sort_unstable();
    let mut builder = Builder::default();
    let mut vars: HashMap<(VarId, VarId), VarId> = HashMap::new();
    let new_roots = roots
        .iter()
        .map(|&u| copy_pair(a, b, u, &partner, &mut builder, &mut vars, None))
        .collect();
    builder.finish(new_roots).normalized()
}

fn copy_pair(
    a: &Forest,
    b: &Forest,
    u: NodeId,
    partner: &[Option<NodeId>],
    builder: &mut Builder,
    vars: &mut HashMap<(VarId, VarId), VarId>,
    parent: Option<(NodeId, usize)>,
) -> NodeId {
    let w = partner[u].expect("aligned vertex");
    let new = builder.push(a.node(u).functor.clone(), parent);
    for (i, (x, y)) in a.node(u).args.iter().zip(&b.node(w).args).enumerate() {
        let arg = match (x, y) {
            (Arg::Var(p), Arg::Var(q)) => {
                let next = VarId(vars.len() as u32);
                Arg::Var(*vars.entry((*p, *q)).or_insert(next))
            }
            (Arg::Sub(cx), Arg::Sub(_)) => {
                let kids: Vec<NodeId> = cx
                    .iter()
                    .filter(|&&c| partner[c].is_some())
                    .map(|&c| copy_pair(a, b, c, partner, builder, vars, Some((new, i))))
                    .collect();
                if kids.is_empty() {
                    Arg::Free
                } else {
                    Arg::Sub(kids)
                }
            }
            _ => Arg::Free,
        };
        builder.set_arg(new, i, arg);
    }
    new
}

/// Estimated number of connected sub-forests of `f` (plus the empty one),
/// exact when all sibling subtrees are pairwise non-isomorphic.
pub fn fracture_estimate(f: &Forest) -> u128 {
    // rooted[v]: connected pieces whose topmost vertex is v.
    let mut rooted = vec![0u128; f.vertex_count()];
    for v in (0..f.vertex_count()).rev() {
        rooted[v] = f
            .children(v)
            .fold(1u128, |acc, c| acc.saturating_mul(1 + rooted[c]));
    }
    f.groups()
        .iter()
        .map(|g| {
            g.iter()
                .fold(1u128, |acc, &m| acc.saturating_mul(1 + rooted[m]))
                - 1
        })
        .fold(1u128, u128::saturating_add)
}

/// Every connected sub-forest of `f` (roots drawn from one sibling group,
/// closed under the parent relation below them) plus the empty forest,
/// canonicalized and deduplicated, sorted by key.
pub fn fracture(f: &Forest, cap: u128) -> Result<Vec<Forest>> {
    let estimate = fracture_estimate(f);
    if estimate > cap {
        return Err(Error::CapExceeded { estimate, cap });
    }
    // Vertex sets of the pieces rooted at each vertex.
    let mut rooted: Vec<Vec<Vec<NodeId>>> = vec![Vec::new(); f.vertex_count()];
    for v in (0..f.vertex_count()).rev() {
        let mut sets: Vec<Vec<NodeId>> = vec![vec![v]];
        for c in f.children(v).collect::<Vec<_>>() {
            let mut next = Vec::with_capacity(sets.len() * (1 + rooted[c].len()));
            for s in &sets {
                next.push(s.clone());
                for piece in &rooted[c] {
                    let mut t = s.clone();
                    t.extend_from_slice(piece);
                    next.push(t);
                }
            }
            sets = next;
        }
        rooted[v] = sets;
    }
    let mut out: BTreeMap<String, Forest> = BTreeMap::new();
    out.insert(String::new(), Forest::empty());
    for g in f.groups() {
        let mut sets: Vec<Vec<NodeId>> = vec![Vec::new()];
        for &m in g {
            let mut next = Vec::with_capacity(sets.len() * (1 + rooted[m].len()));
            for s in &sets {
                next.push(s.clone());
                for piece in &rooted[m] {
                    let mut t = s.clone();
                    t.extend_from_slice(piece);
                    next.push(t);
                }
            }
            sets = next;
        }
        for s in sets.into_iter().filter(|s| !s.is_empty()) {
            let mut keep = vec![false; f.vertex_count()];
            for v in s {
                keep[v] = true;
            }
            let piece = f.induced(&keep).0.normalized();
            out.entry(piece.key()).or_insert(piece);
        }
    }
    Ok(out.into_values().collect())
}
