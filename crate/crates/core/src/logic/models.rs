use std::collections::{BTreeMap, BTreeSet};

use super::{eval_il, IlFormula, Structure, Term};
use crate::syntax::{ClauseDecl, ValidatedSystem};

/// One instantiation of a clause: the values of its bound variables and the
/// node set of every port it mentions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalModel {
    pub assignment: Vec<usize>,
    pub ports: BTreeMap<String, BTreeSet<usize>>,
}

/// The clause as a closed IL formula:
/// `exists i1..il . guard & p1(t1) & .. & (forall k . psi -> q(k)) & ..`.
pub fn clause_formula(clause: &ClauseDecl) -> IlFormula {
    let mut parts = vec![clause.guard.clone()];
    parts.extend(clause.rendezvous.iter().map(|a| IlFormula::pred(&a.port, a.arg.clone())));
    for b in &clause.broadcasts {
        parts.push(IlFormula::forall(
            &b.var,
            IlFormula::implies(b.guard.clone(), IlFormula::pred(&b.port, Term::var(&b.var))),
        ));
    }
    IlFormula::exists_many(clause.bound_vars.clone(), IlFormula::and(parts))
}

pub(crate) fn term_value(t: &Term, env: &BTreeMap<String, usize>, n: usize) -> usize {
    match t {
        Term::Var(v) => env[v],
        Term::Root => 0,
        Term::Succ(inner) => (term_value(inner, env, n) + 1) % n,
    }
}

/// Enumerates the minimal models of a clause over the universe `{0..n-1}`,
/// one per tuple of bound-variable values satisfying the guard. Models in
/// which two distinct ports of the same component type would fire at a
/// common node are dropped.
pub fn minimal_models(sys: &ValidatedSystem, clause: &ClauseDecl, n: usize) -> Vec<MinimalModel> {
    assert!(n >= 1, "universe must be nonempty");
    let l = clause.bound_vars.len();
    let mut out = Vec::new();
    let mut tuple = vec![0usize; l];
    let total = n.checked_pow(l as u32).expect("too many bound variables");
    for _ in 0..total {
        let mut s = Structure::new(n);
        for (v, &u) in clause.bound_vars.iter().zip(&tuple) {
            s.positions.insert(v.clone(), u);
        }
        if eval_il(&clause.guard, &s).expect("validated guard") {
            let mut ports: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
            for a in &clause.rendezvous {
                ports
                    .entry(a.port.clone())
                    .or_default()
                    .insert(term_value(&a.arg, &s.positions, n));
            }
            for b in &clause.broadcasts {
                let set = ports.entry(b.port.clone()).or_default();
                for u in 0..n {
                    let sk = s.clone().with_position(&b.var, u);
                    if eval_il(&b.guard, &sk).expect("validated broadcast guard") {
                        set.insert(u);
                    }
                }
            }
            if respects_port_axiom(sys, &ports) {
                out.push(MinimalModel {
                    assignment: tuple.clone(),
                    ports,
                });
            }
        }
        // odometer, last variable fastest
        for d in (0..l).rev() {
            tuple[d] += 1;
            if tuple[d] < n {
                break;
            }
            tuple[d] = 0;
        }
    }
    out
}

fn respects_port_axiom(sys: &ValidatedSystem, ports: &BTreeMap<String, BTreeSet<usize>>) -> bool {
    let entries: Vec<(&String, &BTreeSet<usize>)> = ports.iter().collect();
    for (i, (p, ps)) in entries.iter().enumerate() {
        for (q, qs) in &entries[i + 1..] {
            if sys.type_of_port(p) == sys.type_of_port(q) && !ps.is_disjoint(qs) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_system, validate};

    const PHILO: &str = "
component Fork { ports t, l; states f, b; init f; f -t-> b; b -l-> f; }
component Philosopher { ports g, p; states w, e; init w; w -g-> e; e -p-> w; }
clause exists i: g(i) & t(i) & t(succ(i));
clause exists i: p(i) & l(i) & l(succ(i));
clause exists i when i < i: g(i);
";

    fn sys() -> ValidatedSystem {
        validate(parse_system(PHILO).unwrap()).unwrap()
    }

    #[test]
    fn philosophers_get_clause() {
        let sys = sys();
        let ms = minimal_models(&sys, &sys.clauses()[0], 3);
        assert_eq!(ms.len(), 3);
        for (k, m) in ms.iter().enumerate() {
            assert_eq!(m.assignment, vec![k]);
            assert_eq!(m.ports["g"], BTreeSet::from([k]));
            assert_eq!(m.ports["t"], BTreeSet::from([k, (k + 1) % 3]));
        }
    }

    #[test]
    fn unsatisfiable_guard_has_no_models() {
        let sys = sys();
        assert!(minimal_models(&sys, &sys.clauses()[2], 4).is_empty());
    }

    #[test]
    fn models_are_minimal() {
        let sys = sys();
        for cl in &sys.clauses()[..2] {
            let f = clause_formula(cl);
            for n in 1..=4 {
                for m in minimal_models(&sys, cl, n) {
                    let mut s = Structure::new(n);
                    for p in ["g", "p", "t", "l"] {
                        s.sets.insert(p.into(), m.ports.get(p).cloned().unwrap_or_default());
                    }
                    assert!(eval_il(&f, &s).unwrap());
                    for (p, nodes) in &m.ports {
                        for u in nodes {
                            let mut smaller = s.clone();
                            smaller.sets.get_mut(p).unwrap().remove(u);
                            assert!(!eval_il(&f, &smaller).unwrap(), "n={n} {p} {u}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn distinct_same_type_ports_may_not_meet() {
        let src = "
component A { ports a, b; states s, r; init s; s -a-> r; r -b-> s; }
clause exists i, j: a(i) & b(j);
";
        let sys = validate(parse_system(src).unwrap()).unwrap();
        let ms = minimal_models(&sys, &sys.clauses()[0], 3);
        assert_eq!(ms.len(), 6);
        assert!(ms.iter().all(|m| m.assignment[0] != m.assignment[1]));
    }
}
