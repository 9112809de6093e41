//! Generation of the parameterized formulas: trap predicate and trap
//! invariant, 1-invariant (flow) machinery, deadlock property and the
//! decision formulas handed to the solver.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::logic::{flatten, translate, IlFormula, Term, Ws1sFormula};
use crate::syntax::{Broadcast, ClauseDecl, ValidatedSystem};


#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvgenError {
    #[error("clause {clause} is not normalized: {reason}")]
    NotNormalized { clause: usize, reason: String },
    #[error("property mentions unknown state variable `{0}`")]
    UnknownStateVariable(String),
    #[error("property has free first-order variable `{0}`")]
    OpenProperty(String),
}

/// Which copy of the state variables a formula talks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetCopy {
    Current,
    Primed,
}

/// Maps every state `s` to the set variables `X_s` and `X_s'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVariableMap {
    /// (state, component type index), in declaration order
    states: Vec<(String, usize)>,
    initial: Vec<String>,
}

impl StateVariableMap {
    pub fn new(sys: &ValidatedSystem) -> StateVariableMap {
        let states = sys
            .types()
            .iter()
            .enumerate()
            .flat_map(|(ti, c)| c.states.iter().map(move |s| (s.clone(), ti)))
            .collect();
        StateVariableMap {
            states,
            initial: sys.initial_states().into_iter().map(String::from).collect(),
        }
    }

    pub fn var(&self, state: &str) -> String {
        format!("X_{state}")
    }

    pub fn primed(&self, state: &str) -> String {
        format!("X_{state}'")
    }

    pub fn name(&self, state: &str, copy: SetCopy) -> String {
        match copy {
            SetCopy::Current => self.var(state),
            SetCopy::Primed => self.primed(state),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = &str> {
        self.states.iter().map(|(s, _)| s.as_str())
    }

    pub fn vars(&self, copy: SetCopy) -> Vec<String> {
        self.states().map(|s| self.name(s, copy)).collect()
    }

    /// States of each component type, grouped.
    fn by_type(&self) -> Vec<Vec<&str>> {
        let mut out: Vec<Vec<&str>> = Vec::new();
        for (s, t) in &self.states {
            if out.len() <= *t {
                out.resize(t + 1, Vec::new());
            }
            out[*t].push(s);
        }
        out
    }

    /// The state named by an unprimed set variable.
    pub fn state_of(&self, var: &str) -> Option<&str> {
        let s = var.strip_prefix("X_")?;
        self.states().find(|t| *t == s)
    }

    fn at(&self, state: &str, copy: SetCopy, t: Term) -> IlFormula {
        IlFormula::pred(self.name(state, copy), t)
    }
}

/// A system whose clauses carry at most one broadcast per port, each
/// excluding the nodes of same-port rendezvous atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedSystem {
    sys: ValidatedSystem,
    changed: bool,
}

impl NormalizedSystem {
    pub fn system(&self) -> &ValidatedSystem {
        &self.sys
    }

    /// True when normalization rewrote at least one clause.
    pub fn changed(&self) -> bool {
        self.changed
    }

    /// Accepts a system only if it is already in normal form.
    pub fn assume(sys: ValidatedSystem) -> Result<NormalizedSystem, InvgenError> {
        for (ci, c) in sys.clauses().iter().enumerate() {
            let mut ports = BTreeSet::new();
            for b in &c.broadcasts {
                if !ports.insert(b.port.as_str()) {
                    return Err(InvgenError::NotNormalized {
                        clause: ci,
                        reason: format!("two broadcasts on port `{}`", b.port),
                    });
                }
                for a in c.rendezvous.iter().filter(|a| a.port == b.port) {
                    let excl = IlFormula::not(IlFormula::Eq(Term::var(&b.var), a.arg.clone()));
                    let has = match &b.guard {
                        IlFormula::And(parts) => parts.contains(&excl),
                        g => *g == excl,
                    };
                    if !has {
                        return Err(InvgenError::NotNormalized {
                            clause: ci,
                            reason: format!("broadcast on `{}` does not exclude {}", b.port, a.arg),
                        });
                    }
                }
            }
        }
        Ok(NormalizedSystem { sys, changed: false })
    }
}

/// Merges broadcasts on a common port into one (disjoining their guards)
/// and removes same-port rendezvous nodes from broadcast guards.
pub fn normalize_clauses(sys: &ValidatedSystem) -> NormalizedSystem {
    let mut out = sys.clone();
    let mut changed = false;
    for c in &mut out.spec.clauses {
        let mut merged: Vec<Broadcast> = Vec::new();
        for b in &c.broadcasts {
            if let Some(m) = merged.iter_mut().find(|m| m.port == b.port) {
                let renamed = b.guard.substitute(&b.var, &Term::var(&m.var));
                m.guard = IlFormula::or([m.guard.clone(), renamed]);
                changed = true;
            } else {
                merged.push(b.clone());
            }
        }
        for m in &mut merged {
            let excl: Vec<IlFormula> = c
                .rendezvous
                .iter()
                .filter(|a| a.port == m.port)
                .map(|a| IlFormula::not(IlFormula::Eq(Term::var(&m.var), a.arg.clone())))
                .collect();
            if !excl.is_empty() {
                changed = true;
                m.guard = IlFormula::and(std::iter::once(m.guard.clone()).chain(excl));
            }
        }
        c.broadcasts = merged;
    }
    NormalizedSystem { sys: out, changed }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Pre,
    Post,
}

fn port_state<'a>(sys: &'a ValidatedSystem, port: &str, side: Side) -> &'a str {
    match side {
        Side::Pre => sys.pre_of(port),
        Side::Post => sys.post_of(port),
    }
}

const X: &str = "#x";
const Y: &str = "#y";

fn to_ws1s(f: &IlFormula) -> Ws1sFormula {
    translate(&flatten(f)).expect("flattened formula translates")
}

fn broadcast_at(b: &Broadcast, t: &Term) -> IlFormula {
    b.guard.substitute(&b.var, t)
}

/// Extra guard conjuncts ruling out instantiations in which two distinct
/// ports of one component type would share a node.
fn feasibility(sys: &ValidatedSystem, c: &ClauseDecl) -> IlFormula {
    let same_type = |p: &str, q: &str| p != q && sys.type_of_port(p) == sys.type_of_port(q);
    let mut parts = Vec::new();
    for (i, a) in c.rendezvous.iter().enumerate() {
        for b in &c.rendezvous[i + 1..] {
            if same_type(&a.port, &b.port) {
                parts.push(IlFormula::not(IlFormula::Eq(a.arg.clone(), b.arg.clone())));
            }
        }
        for b in &c.broadcasts {
            if same_type(&a.port, &b.port) {
                parts.push(IlFormula::not(broadcast_at(b, &a.arg)));
            }
        }
    }
    for (i, b1) in c.broadcasts.iter().enumerate() {
        for b2 in &c.broadcasts[i + 1..] {
            if same_type(&b1.port, &b2.port) {
                let k = Term::var(&b1.var);
                parts.push(IlFormula::not(IlFormula::exists(
                    &b1.var,
                    IlFormula::and([b1.guard.clone(), broadcast_at(b2, &k)]),
                )));
            }
        }
    }
    IlFormula::and(parts)
}

fn guard(sys: &ValidatedSystem, c: &ClauseDecl) -> IlFormula {
    IlFormula::and([c.guard.clone(), feasibility(sys, c)])
}

struct Gen<'a> {
    sys: &'a ValidatedSystem,
    m: &'a StateVariableMap,
    copy: SetCopy,
}

impl Gen<'_> {
    fn at(&self, state: &str, t: Term) -> IlFormula {
        self.m.at(state, self.copy, t)
    }

    fn state(&self, port: &str, side: Side) -> &str {
        port_state(self.sys, port, side)
    }

    fn intersects(&self, c: &ClauseDecl, side: Side) -> IlFormula {
        let rz = c.rendezvous.iter().map(|a| self.at(self.state(&a.port, side), a.arg.clone()));
        let bc = c.broadcasts.iter().map(|b| {
            IlFormula::exists(
                &b.var,
                IlFormula::and([b.guard.clone(), self.at(self.state(&b.port, side), Term::var(&b.var))]),
            )
        });
        IlFormula::or(rz.chain(bc).collect::<Vec<_>>())
    }

    fn trappred(&self) -> IlFormula {
        IlFormula::and(self.sys.clauses().iter().map(|c| {
            IlFormula::forall_many(
                c.bound_vars.clone(),
                IlFormula::implies(
                    IlFormula::and([guard(self.sys, c), self.intersects(c, Side::Pre)]),
                    self.intersects(c, Side::Post),
                ),
            )
        }))
    }

    fn unique_ex(&self, c: &ClauseDecl, side: Side) -> IlFormula {
        let rz = &c.rendezvous;
        IlFormula::or((0..rz.len()).map(|i| {
            let si = self.state(&rz[i].port, side);
            let ti = &rz[i].arg;
            let mut parts = vec![self.at(si, ti.clone())];
            for (o, a) in rz.iter().enumerate() {
                if o == i {
                    continue;
                }
                let so = self.state(&a.port, side);
                if so == si {
                    parts.push(IlFormula::implies(
                        self.at(so, a.arg.clone()),
                        IlFormula::Eq(ti.clone(), a.arg.clone()),
                    ));
                } else {
                    parts.push(IlFormula::not(self.at(so, a.arg.clone())));
                }
            }
            IlFormula::and(parts)
        }))
    }

    fn disjoint_ex(&self, c: &ClauseDecl, side: Side) -> IlFormula {
        IlFormula::and(
            c.rendezvous
                .iter()
                .map(|a| IlFormula::not(self.at(self.state(&a.port, side), a.arg.clone()))),
        )
    }

    fn disjoint_broadcast(&self, c: &ClauseDecl, side: Side) -> IlFormula {
        if c.broadcasts.is_empty() {
            return IlFormula::True;
        }
        let y = Term::var(Y);
        IlFormula::forall(
            Y,
            IlFormula::and(c.broadcasts.iter().map(|b| {
                IlFormula::implies(
                    broadcast_at(b, &y),
                    IlFormula::not(self.at(self.state(&b.port, side), y.clone())),
                )
            })),
        )
    }

    fn unique_broadcast(&self, c: &ClauseDecl, side: Side) -> IlFormula {
        let y = Term::var(Y);
        IlFormula::or(c.broadcasts.iter().enumerate().map(|(j, b)| {
            let sj = self.state(&b.port, side);
            let k = Term::var(&b.var);
            let mut inner = vec![IlFormula::implies(
                IlFormula::and([broadcast_at(b, &y), self.at(sj, y.clone())]),
                IlFormula::Eq(y.clone(), k.clone()),
            )];
            for (o, bo) in c.broadcasts.iter().enumerate() {
                if o != j {
                    inner.push(IlFormula::implies(
                        broadcast_at(bo, &y),
                        IlFormula::not(self.at(self.state(&bo.port, side), y.clone())),
                    ));
                }
            }
            IlFormula::exists(
                &b.var,
                IlFormula::and([
                    b.guard.clone(),
                    self.at(sj, k.clone()),
                    IlFormula::forall(Y, IlFormula::and(inner)),
                ]),
            )
        }))
    }

    fn unique(&self, c: &ClauseDecl, side: Side) -> IlFormula {
        IlFormula::or([
            IlFormula::and([self.unique_ex(c, side), self.disjoint_broadcast(c, side)]),
            IlFormula::and([self.unique_broadcast(c, side), self.disjoint_ex(c, side)]),
        ])
    }

    fn flowpred(&self) -> IlFormula {
        let clauses = self.sys.clauses().iter().map(|c| {
            let pre = self.intersects(c, Side::Pre);
            let post = self.intersects(c, Side::Post);
            let upre = self.unique(c, Side::Pre);
            let body = IlFormula::or([
                IlFormula::and([IlFormula::not(pre.clone()), IlFormula::not(post)]),
                IlFormula::and([upre.clone(), self.unique(c, Side::Post)]),
                IlFormula::and([pre, IlFormula::not(upre)]),
            ]);
            IlFormula::forall_many(c.bound_vars.clone(), IlFormula::implies(guard(self.sys, c), body))
        });
        IlFormula::and(std::iter::once(unique_initially(self.m, self.copy)).chain(clauses))
    }

    fn deadlock(&self) -> IlFormula {
        IlFormula::and(self.sys.clauses().iter().map(|c| {
            let rz = c
                .rendezvous
                .iter()
                .map(|a| IlFormula::not(self.at(self.state(&a.port, Side::Pre), a.arg.clone())));
            let bc = c.broadcasts.iter().map(|b| {
                IlFormula::exists(
                    &b.var,
                    IlFormula::and([
                        b.guard.clone(),
                        IlFormula::not(self.at(self.state(&b.port, Side::Pre), Term::var(&b.var))),
                    ]),
                )
            });
            IlFormula::forall_many(
                c.bound_vars.clone(),
                IlFormula::implies(guard(self.sys, c), IlFormula::or(rz.chain(bc).collect::<Vec<_>>())),
            )
        }))
    }
}

fn unique_initially(m: &StateVariableMap, copy: SetCopy) -> IlFormula {
    let init = &m.initial;
    let x = Term::var(X);
    let y = Term::var(Y);
    let exactly_one = IlFormula::or(init.iter().enumerate().map(|(ci, s)| {
        IlFormula::and(
            std::iter::once(m.at(s, copy, x.clone())).chain(
                init.iter()
                    .enumerate()
                    .filter(|(o, _)| *o != ci)
                    .map(|(_, so)| IlFormula::not(m.at(so, copy, x.clone()))),
            ),
        )
    }));
    let only_here = IlFormula::forall(
        Y,
        IlFormula::implies(
            IlFormula::or(init.iter().map(|s| m.at(s, copy, y.clone()))),
            IlFormula::Eq(x.clone(), y.clone()),
        ),
    );
    IlFormula::exists(X, IlFormula::and([exactly_one, only_here]))
}

fn gen<'a>(sys: &'a ValidatedSystem, m: &'a StateVariableMap, copy: SetCopy) -> Gen<'a> {
    Gen { sys, m, copy }
}

/// `pre∩`: some rendezvous or broadcast participant of the clause has its
/// pre-state in X̄. Open over X̄ and the clause's bound variables.
pub fn gen_intersects_pre(sys: &ValidatedSystem, clause: &ClauseDecl, m: &StateVariableMap) -> Ws1sFormula {
    to_ws1s(&gen(sys, m, SetCopy::Current).intersects(clause, Side::Pre))
}

pub fn gen_intersects_post(sys: &ValidatedSystem, clause: &ClauseDecl, m: &StateVariableMap) -> Ws1sFormula {
    to_ws1s(&gen(sys, m, SetCopy::Current).intersects(clause, Side::Post))
}

/// Holds exactly for the place sets (given by X̄) that are traps.
pub fn gen_trappred(sys: &ValidatedSystem, m: &StateVariableMap) -> Ws1sFormula {
    gen_trappred_over(sys, m, SetCopy::Current)
}

pub fn gen_trappred_over(sys: &ValidatedSystem, m: &StateVariableMap, copy: SetCopy) -> Ws1sFormula {
    to_ws1s(&gen(sys, m, copy).trappred())
}

/// Every node is in exactly one state of each component type.
pub fn gen_marking(m: &StateVariableMap) -> Ws1sFormula {
    let x = Term::var(X);
    let per_type = m.by_type().into_iter().map(|states| {
        IlFormula::or(states.iter().map(|s| {
            IlFormula::and(
                std::iter::once(m.at(s, SetCopy::Current, x.clone())).chain(
                    states
                        .iter()
                        .filter(|o| *o != s)
                        .map(|o| IlFormula::not(m.at(o, SetCopy::Current, x.clone()))),
                ),
            )
        }))
    });
    to_ws1s(&IlFormula::forall(X, IlFormula::and(per_type.collect::<Vec<_>>())))
}

pub fn gen_initially(m: &StateVariableMap) -> Ws1sFormula {
    gen_initially_over(m, SetCopy::Current)
}

pub fn gen_initially_over(m: &StateVariableMap, copy: SetCopy) -> Ws1sFormula {
    let x = Term::var(X);
    to_ws1s(&IlFormula::exists(
        X,
        IlFormula::or(m.initial.iter().map(|s| m.at(s, copy, x.clone()))),
    ))
}

/// X̄ and X̄' share a place.
pub fn gen_intersection(m: &StateVariableMap) -> Ws1sFormula {
    let x = Term::var(X);
    to_ws1s(&IlFormula::exists(
        X,
        IlFormula::or(m.states().map(|s| both(m, s, &x))),
    ))
}

fn both(m: &StateVariableMap, s: &str, t: &Term) -> IlFormula {
    IlFormula::and([m.at(s, SetCopy::Current, t.clone()), m.at(s, SetCopy::Primed, t.clone())])
}

/// X̄ and X̄' share exactly one place.
pub fn gen_unique_intersection(m: &StateVariableMap) -> Ws1sFormula {
    let states: Vec<&str> = m.states().collect();
    let x = Term::var(X);
    let y = Term::var(Y);
    let exactly_one = IlFormula::or(states.iter().map(|q| {
        IlFormula::and(
            std::iter::once(both(m, q, &x)).chain(
                states
                    .iter()
                    .filter(|p| *p != q)
                    .map(|p| IlFormula::not(both(m, p, &x))),
            ),
        )
    }));
    let only_here = IlFormula::forall(
        Y,
        IlFormula::implies(
            IlFormula::or(states.iter().map(|q| both(m, q, &y))),
            IlFormula::Eq(x.clone(), y.clone()),
        ),
    );
    to_ws1s(&IlFormula::exists(X, IlFormula::and([exactly_one, only_here])))
}

/// Every initially marked trap (X̄') still meets X̄.
pub fn gen_trap_invariant(sys: &ValidatedSystem, m: &StateVariableMap) -> Ws1sFormula {
    Ws1sFormula::forall2_many(
        m.vars(SetCopy::Primed),
        Ws1sFormula::implies(
            Ws1sFormula::and([
                gen_trappred_over(sys, m, SetCopy::Primed),
                gen_initially_over(m, SetCopy::Primed),
            ]),
            gen_intersection(m),
        ),
    )
}

/// X̄ is a marking enabling no instantiation of any clause.
pub fn gen_deadlock_property(sys: &ValidatedSystem, m: &StateVariableMap) -> Ws1sFormula {
    to_ws1s(&gen(sys, m, SetCopy::Current).deadlock())
}

/// The safety property "no deadlock", i.e. the negation of [`gen_deadlock_property`].
pub fn deadlock_freedom(sys: &ValidatedSystem, m: &StateVariableMap) -> Ws1sFormula {
    Ws1sFormula::not(gen_deadlock_property(sys, m))
}

/// Sufficient condition for X̄ to be a 1-invariant (structural check).
pub fn gen_flowpred(sys: &NormalizedSystem, m: &StateVariableMap) -> Ws1sFormula {
    gen_flowpred_over(sys, m, SetCopy::Current)
}

pub fn gen_flowpred_over(sys: &NormalizedSystem, m: &StateVariableMap, copy: SetCopy) -> Ws1sFormula {
    to_ws1s(&gen(&sys.sys, m, copy).flowpred())
}

pub fn gen_unique_initially(m: &StateVariableMap, copy: SetCopy) -> Ws1sFormula {
    to_ws1s(&unique_initially(m, copy))
}

/// Every structural 1-invariant (X̄') meets X̄ in exactly one place.
pub fn gen_flow_invariant(sys: &NormalizedSystem, m: &StateVariableMap) -> Ws1sFormula {
    Ws1sFormula::forall2_many(
        m.vars(SetCopy::Primed),
        Ws1sFormula::implies(gen_flowpred_over(sys, m, SetCopy::Primed), gen_unique_intersection(m)),
    )
}

fn rename_preds(f: &IlFormula, m: &StateVariableMap) -> IlFormula {
    use IlFormula as F;
    let r = |g: &IlFormula| rename_preds(g, m);
    match f {
        F::Pred(s, t) => F::Pred(m.var(s), t.clone()),
        F::Not(g) => F::Not(Box::new(r(g))),
        F::And(gs) => F::And(gs.iter().map(r).collect()),
        F::Or(gs) => F::Or(gs.iter().map(r).collect()),
        F::Implies(a, b) => F::Implies(Box::new(r(a)), Box::new(r(b))),
        F::Iff(a, b) => F::Iff(Box::new(r(a)), Box::new(r(b))),
        F::Exists(v, g) => F::Exists(v.clone(), Box::new(r(g))),
        F::Forall(v, g) => F::Forall(v.clone(), Box::new(r(g))),
        _ => f.clone(),
    }
}

/// Turns a user property over state predicates `s(i)` into a WS1S formula
/// over the set variables X̄.
pub fn property_formula(il: &IlFormula, m: &StateVariableMap) -> Result<Ws1sFormula, InvgenError> {
    for p in il.predicates() {
        if !m.states().any(|s| s == p) {
            return Err(InvgenError::UnknownStateVariable(p));
        }
    }
    if let Some(v) = il.free_vars().into_iter().next() {
        return Err(InvgenError::OpenProperty(v));
    }
    Ok(to_ws1s(&rename_preds(il, m)))
}

/// `marking ∧ trap_invariant ∧ [flow_invariant] ∧ ¬property`; X̄ stays free.
/// Unsatisfiable means the property holds for every universe size.
pub fn gen_decision_formula(
    sys: &ValidatedSystem,
    property: &Ws1sFormula,
    use_flow: bool,
    m: &StateVariableMap,
) -> Result<Ws1sFormula, InvgenError> {
    let fv = property.free_vars();
    if let Some(v) = fv.first_order.into_iter().next() {
        return Err(InvgenError::OpenProperty(v));
    }
    let known: BTreeSet<String> = m.vars(SetCopy::Current).into_iter().collect();
    if let Some(v) = fv.second_order.into_iter().find(|v| !known.contains(v)) {
        return Err(InvgenError::UnknownStateVariable(v));
    }
    let mut parts = vec![gen_marking(m), gen_trap_invariant(sys, m)];
    if use_flow {
        parts.push(gen_flow_invariant(&normalize_clauses(sys), m));
    }
    parts.push(Ws1sFormula::not(property.clone()));
    Ok(Ws1sFormula::and(parts))
}
