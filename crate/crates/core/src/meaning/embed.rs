//! Occurrences of a pattern forest inside a target forest.
//!
//! The roots of the pattern are mapped injectively onto members of a single
//! sibling group of the target (the top-level conjunction or one argument
//! position), and every filled argument position of a pattern vertex is
//! matched the same way against the corresponding position of its image.
//! A free pattern position matches anything. A pattern variable matches a
//! target variable, and the correspondence must be a bijection across the
//! whole embedding.

use std::collections::HashMap;

use super::{Arg, Forest, NodeId, VarId};

/// Injective map from pattern vertex ids (by index) to target vertex ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Embedding {
    pub map: Vec<NodeId>,
}

impl Embedding {
    /// Target vertices covered by this embedding.
    pub fn image(&self) -> &[NodeId] {
        &self.map
    }
}

/// All embeddings of `pattern` into `target`, in target group order and,
/// within a group, in target sibling order.
pub fn occurrences(pattern: &Forest, target: &Forest) -> Vec<Embedding> {
    let mut out = Vec::new();
    search(pattern, target, &mut |e| {
        out.push(e);
        true
    });
    out
}

/// The first embedding in the order of [`occurrences`], if any.
pub fn first_occurrence(pattern: &Forest, target: &Forest) -> Option<Embedding> {
    let mut found = None;
    search(pattern, target, &mut |e| {
        found = Some(e);
        false
    });
    found
}

pub fn embeds(pattern: &Forest, target: &Forest) -> bool {
    first_occurrence(pattern, target).is_some()
}

/// Runs `visit` on each embedding until it returns `false`.
fn search(pattern: &Forest, target: &Forest, visit: &mut dyn FnMut(Embedding) -> bool) {
    let pattern = pattern.clone().normalized();
    if pattern.is_empty() {
        visit(Embedding { map: Vec::new() });
        return;
    }
    if pattern.vertex_count() > target.vertex_count() {
        return;
    }
    let mut m = Matcher {
        pat: &pattern,
        tgt: target,
        map: vec![usize::MAX; pattern.vertex_count()],
        used: vec![false; target.vertex_count()],
        p2t: HashMap::new(),
        t2p: HashMap::new(),
        visit,
        stopped: false,
    };
    for group in target.groups() {
        let mut tasks = vec![Task {
            pat: pattern.roots(),
            tgt: group,
        }];
        m.solve(&mut tasks);
        if m.stopped {
            return;
        }
    }
}

#[derive(Clone, Copy)]
struct Task<'a> {
    pat: &'a [NodeId],
    tgt: &'a [NodeId],
}

struct Matcher<'a, 'v> {
    pat: &'a Forest,
    tgt: &'a Forest,
    map: Vec<NodeId>,
    used: Vec<bool>,
    p2t: HashMap<VarId, VarId>,
    t2p: HashMap<VarId, VarId>,
    visit: &'v mut dyn FnMut(Embedding) -> bool,
    stopped: bool,
}

impl<'a> Matcher<'a, '_> {
    fn solve(&mut self, tasks: &mut Vec<Task<'a>>) {
        if self.stopped {
            return;
        }
        let Some(task) = tasks.pop() else {
            let e = Embedding {
                map: self.map.clone(),
            };
            if !(self.visit)(e) {
                self.stopped = true;
            }
            return;
        };
        let Some((&p, rest)) = task.pat.split_first() else {
            self.solve(tasks);
            tasks.push(task);
            return;
        };
        let (pat, tgt): (&'a Forest, &'a Forest) = (self.pat, self.tgt);
        let pn = pat.node(p);
        for &t in task.tgt {
            if self.used[t] || tgt.node(t).functor != pn.functor {
                continue;
            }
            let tn = tgt.node(t);
            let mut bound = Vec::new();
            let mut pushed = 0;
            let mut ok = true;
            for (pa, ta) in pn.args.iter().zip(&tn.args) {
                match (pa, ta) {
                    (Arg::Free, _) => {}
                    (Arg::Var(x), Arg::Var(y)) => match (self.p2t.get(x), self.t2p.get(y)) {
                        (Some(a), Some(b)) if a == y && b == x => {}
                        (None, None) => {
                            self.p2t.insert(*x, *y);
                            self.t2p.insert(*y, *x);
                            bound.push((*x, *y));
                        }
                        _ => ok = false,
                    },
                    (Arg::Sub(pc), Arg::Sub(tc)) if pc.len() <= tc.len() => {
                        tasks.push(Task { pat: pc, tgt: tc });
                        pushed += 1;
                    }
                    _ => ok = false,
                }
                if !ok {
                    break;
                }
            }
            if ok {
                self.used[t] = true;
                self.map[p] = t;
                // The siblings of `p` are matched after its own subterms.
                let slot_tasks: Vec<Task<'a>> = tasks.drain(tasks.len() - pushed..).collect();
                tasks.push(Task {
                    pat: rest,
                    tgt: task.tgt,
                });
                tasks.extend(slot_tasks.iter().rev());
                self.solve(tasks);
                tasks.truncate(tasks.len() - pushed - 1);
                self.used[t] = false;
                self.map[p] = usize::MAX;
            } else {
                tasks.truncate(tasks.len() - pushed);
            }
            for (x, y) in bound {
                self.p2t.remove(&x);
                self.t2p.remove(&y);
            }
            if self.stopped {
                break;
            }
        }
        tasks.push(task);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meaning::parse_term;

    fn p(s: &str) -> Forest {
        parse_term(s).unwrap()
    }

    fn fig7() -> Forest {
        p("(state(S), eq(C,cityid(texarkana,_)), loc(C,S))")
    }

    #[test]
    fn single_state_vertex_in_figure_seven() {
        assert_eq!(occurrences(&p("state(_)"), &fig7()).len(), 1);
    }

    #[test]
    fn identity_embedding() {
        let t = fig7();
        let all = occurrences(&t, &t);
        assert!(all.iter().any(|e| e.map == (0..t.vertex_count()).collect::<Vec<_>>()));
    }

    #[test]
    fn chain_has_three_occurrences() {
        assert_eq!(occurrences(&p("f1(_)"), &p("f1(f1(f1(a)))")).len(), 3);
        // A leaf f1 of arity 0 is a different functor.
        assert_eq!(occurrences(&p("f1(_)"), &p("f1(f1(f1))")).len(), 2);
    }

    #[test]
    fn shared_variables_must_agree() {
        let t = p("(state(S),loc(C,S),capital(C))");
        assert!(embeds(&p("(state(X),loc(_,X))"), &t));
        assert!(!embeds(&p("(state(X),loc(X,_))"), &t));
        // Pattern variables bind to variables only, one to one.
        assert!(!embeds(&p("f(X,X)"), &p("f(A,B)")));
        assert!(!embeds(&p("(g(X),g(Y),h(X,Y))"), &p("(g(A),g(A),h(A,A))")));
    }

    #[test]
    fn siblings_across_groups_do_not_connect() {
        // state and capital sit in different groups, sharing only a variable.
        let t = p("(capital(S,_),largest(_,(state(S),population(S,_))))");
        assert!(!embeds(&p("(capital(S,_),state(S))"), &t));
        assert!(embeds(&p("largest(_,state(_))"), &t));
        assert!(embeds(&p("(state(S),population(S,_))"), &t));
    }

    #[test]
    fn conjunct_order_is_free() {
        let t = p("f((a,b,c))");
        assert_eq!(occurrences(&p("f((c,a))"), &t).len(), 1);
        assert_eq!(occurrences(&p("(a,b)"), &t).len(), 1);
    }

    #[test]
    fn injective_within_group() {
        let t = p("(a,a)");
        assert_eq!(occurrences(&p("a"), &t).len(), 2);
        assert_eq!(occurrences(&p("(a,a)"), &t).len(), 2);
        assert!(occurrences(&p("(a,a,a)"), &t).is_empty());
    }

    #[test]
    fn first_occurrence_matches_enumeration_order() {
        let t = p("(f(a),f(b),g(f(c)))");
        let all = occurrences(&p("f(_)"), &t);
        assert_eq!(all.len(), 3);
        assert_eq!(first_occurrence(&p("f(_)"), &t), Some(all[0].clone()));
    }

    #[test]
    fn embeddings_revalidate() {
        let t = p("(high_point(B,C),loc(C,B),state(B),capital(B,_))");
        for pat in ["state(_)", "(state(S),loc(_,S))", "(high_point(X,Y),loc(Y,X))"] {
            for e in occurrences(&p(pat), &t) {
                let rest = t.subtract(&e).unwrap();
                assert_eq!(rest.vertex_count() + e.map.len(), t.vertex_count());
            }
        }
    }
}
