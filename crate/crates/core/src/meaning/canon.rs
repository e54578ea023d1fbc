//! Canonical ordering and rendering.
//!
//! Siblings (conjuncts and top-level trees) are sorted by their skeleton, the
//! rendering with every variable written as `?`. Runs of siblings with equal
//! skeletons can still differ in how their variables are shared, so for those
//! runs every permutation is tried and the smallest full rendering wins.

use std::fmt::Write;

use super::{Arg, Forest, NodeId, VarId};

/// Upper bound on the number of tie-run permutations explored per forest.
const PERMUTATION_CAP: usize = 5040;

/// Label-preserving isomorphism up to consistent variable renaming,
/// conjunct order and tree order. Single-occurrence variables are equivalent
/// to free positions.
pub fn iso_equal(a: &Forest, b: &Forest) -> bool {
    a.vertex_count() == b.vertex_count() && a.key() == b.key()
}

pub(super) fn render_canonical(f: &Forest) -> String {
    if f.is_empty() {
        return String::new();
    }
    let skel = skeletons(f);
    let mut order = Order {
        roots: f.roots.clone(),
        slots: f
            .nodes
            .iter()
            .map(|n| {
                n.args
                    .iter()
                    .map(|a| match a {
                        Arg::Sub(c) => c.clone(),
                        _ => Vec::new(),
                    })
                    .collect()
            })
            .collect(),
    };
    let mut runs = Vec::new();
    sort_and_collect(&mut order.roots, None, &skel, &mut runs);
    for n in 0..f.nodes.len() {
        for s in 0..order.slots[n].len() {
            let mut list = std::mem::take(&mut order.slots[n][s]);
            sort_and_collect(&mut list, Some((n, s)), &skel, &mut runs);
            order.slots[n][s] = list;
        }
    }
    if runs.is_empty() {
        return render_with(f, &order);
    }
    let mut best: Option<String> = None;
    let mut budget = PERMUTATION_CAP;
    search(f, &mut order, &runs, 0, &mut best, &mut budget);
    best.expect("at least one ordering is rendered")
}

struct Order {
    roots: Vec<NodeId>,
    slots: Vec<Vec<Vec<NodeId>>>,
}

impl Order {
    fn list_mut(&mut self, loc: Option<(NodeId, usize)>) -> &mut Vec<NodeId> {
        match loc {
            None => &mut self.roots,
            Some((n, s)) => &mut self.slots[n][s],
        }
    }
}

/// A run of siblings with identical skeletons that mention variables.
struct Run {
    loc: Option<(NodeId, usize)>,
    start: usize,
    len: usize,
}

fn sort_and_collect(
    list: &mut [NodeId],
    loc: Option<(NodeId, usize)>,
    skel: &[String],
    runs: &mut Vec<Run>,
) {
    list.sort_by(|&a, &b| skel[a].cmp(&skel[b]));
    let mut i = 0;
    while i < list.len() {
        let mut j = i + 1;
        while j < list.len() && skel[list[j]] == skel[list[i]] {
            j += 1;
        }
        if j - i > 1 && skel[list[i]].contains('?') {
            runs.push(Run {
                loc,
                start: i,
                len: j - i,
            });
        }
        i = j;
    }
}

fn search(
    f: &Forest,
    order: &mut Order,
    runs: &[Run],
    k: usize,
    best: &mut Option<String>,
    budget: &mut usize,
) {
    if k == runs.len() || *budget == 0 {
        let r = render_with(f, order);
        *budget = budget.saturating_sub(1);
        if best.as_ref().is_none_or(|b| r < *b) {
            *best = Some(r);
        }
        return;
    }
    let run = &runs[k];
    let original: Vec<NodeId> =
        order.list_mut(run.loc)[run.start..run.start + run.len].to_vec();
    let mut perm = original.clone();
    permute(&mut perm, 0, &mut |p| {
        if *budget == 0 {
            return;
        }
        order.list_mut(run.loc)[run.start..run.start + run.len].copy_from_slice(p);
        search(f, order, runs, k + 1, best, budget);
    });
    order.list_mut(run.loc)[run.start..run.start + run.len].copy_from_slice(&original);
}

fn permute(v: &mut Vec<NodeId>, i: usize, visit: &mut dyn FnMut(&[NodeId])) {
    if i == v.len() {
        visit(v);
        return;
    }
    for j in i..v.len() {
        v.swap(i, j);
        permute(v, i + 1, visit);
        v.swap(i, j);
    }
}

/// Variable-blind rendering of every subtree, with sorted conjuncts.
fn skeletons(f: &Forest) -> Vec<String> {
    let mut out = vec![String::new(); f.nodes.len()];
    // Children always have larger ids than their parent.
    for id in (0..f.nodes.len()).rev() {
        let n = &f.nodes[id];
        let mut s = n.functor.name.to_string();
        if !n.args.is_empty() {
            s.push('(');
            for (i, a) in n.args.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match a {
                    Arg::Free => s.push('_'),
                    Arg::Var(_) => s.push('?'),
                    Arg::Sub(c) => {
                        let mut parts: Vec<&str> = c.iter().map(|&x| out[x].as_str()).collect();
                        parts.sort_unstable();
                        if parts.len() == 1 {
                            s.push_str(parts[0]);
                        } else {
                            s.push('(');
                            s.push_str(&parts.join(","));
                            s.push(')');
                        }
                    }
                }
            }
            s.push(')');
        }
        out[id] = s;
    }
    out
}

fn var_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    if i < 26 {
        letter.to_string()
    } else {
        format!("{letter}{}", i / 26)
    }
}

fn render_with(f: &Forest, order: &Order) -> String {
    let mut names: Vec<(VarId, usize)> = Vec::new();
    let mut out = String::new();
    render_list(f, order, &order.roots, &mut names, &mut out);
    out
}

fn render_list(
    f: &Forest,
    order: &Order,
    list: &[NodeId],
    names: &mut Vec<(VarId, usize)>,
    out: &mut String,
) {
    if list.len() == 1 {
        render_node(f, order, list[0], names, out);
        return;
    }
    out.push('(');
    for (i, &n) in list.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        render_node(f, order, n, names, out);
    }
    out.push(')');
}

fn render_node(
    f: &Forest,
    order: &Order,
    id: NodeId,
    names: &mut Vec<(VarId, usize)>,
    out: &mut String,
) {
    let n = &f.nodes[id];
    out.push_str(&n.functor.name);
    if n.args.is_empty() {
        return;
    }
    out.push('(');
    for (i, a) in n.args.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        match a {
            Arg::Free => out.push('_'),
            Arg::Var(v) => {
                let idx = match names.iter().find(|(w, _)| w == v) {
                    Some(&(_, idx)) => idx,
                    None => {
                        names.push((*v, names.len()));
                        names.len() - 1
                    }
                };
                let _ = write!(out, "{}", var_name(idx));
            }
            Arg::Sub(_) => render_list(f, order, &order.slots[id][i], names, out),
        }
    }
    out.push(')');
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meaning::parse_term;

    fn p(s: &str) -> Forest {
        parse_term(s).unwrap()
    }

    #[test]
    fn canonical_variable_names() {
        assert_eq!(p("state(S)").render(), "state(A)");
        assert_eq!(Forest::empty().render(), "");
    }

    #[test]
    fn variable_renaming() {
        assert!(iso_equal(&p("state(S)"), &p("state(T)")));
        assert!(iso_equal(&p("f(X,g(Y,X))"), &p("f(B,g(A,B))")));
        assert!(!iso_equal(&p("f(X,g(X,Y))"), &p("f(X,g(Y,X))")));
    }

    #[test]
    fn vertex_count_mismatch() {
        assert!(!iso_equal(&p("largest(_,state(_))"), &p("state(_)")));
    }

    #[test]
    fn tree_order_is_immaterial() {
        assert!(iso_equal(&p("(state(S),loc(C,S))"), &p("(loc(A,B),state(B))")));
        assert!(iso_equal(&p("f((a,b,c))"), &p("f((c,a,b))")));
    }

    #[test]
    fn singleton_variable_equals_free_position() {
        assert!(iso_equal(&p("f10(A,f15(B))"), &p("f10(_,f15(_))")));
        assert!(!iso_equal(&p("f(A,A)"), &p("f(_,_)")));
    }

    #[test]
    fn tied_siblings_resolved_by_variable_sharing() {
        // Same skeleton p(?,?) three times; only the sharing pattern differs.
        let a = p("(p(X,Y),p(Y,Z),q(Z,X))");
        let b = p("(q(C,A),p(B,C),p(A,B))");
        let c = p("(p(X,Y),p(Z,Y),q(Z,X))");
        assert!(iso_equal(&a, &b));
        assert!(!iso_equal(&a, &c));
        assert_eq!(a.render(), b.render());
    }

    #[test]
    fn functor_arity_distinguishes_labels() {
        assert!(!iso_equal(&p("capital(_)"), &p("capital(_,_)")));
    }
}
