//! Explicit-instance cross-checks of the generated formulas.

use crate::invgen::{
    gen_deadlock_property, gen_flow_invariant, gen_flowpred, gen_marking, gen_trap_invariant, gen_trappred,
    normalize_clauses, StateVariableMap,
};
use crate::logic::{eval_ws1s, EvalError, Structure, Ws1sFormula};
use crate::petri::{
    enumerate_traps, instantiate, is_structural_one_invariant, is_trap, marking_to_structure, reachable, InstanceNet,
    Marking, ReachGraph,
};
use crate::syntax::ValidatedSystem;
use crate::ws1s_solver::{compile, TrackAutomaton};

use super::{NamedProperty, PropertyReport, VerdictKind};

/// Subset-enumerating checks are skipped above this many places.
pub const SUBSET_CHECK_PLACES: usize = 15;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    pub size: usize,
    pub places: usize,
    pub transitions: usize,
    pub reachable: Option<usize>,
    pub deadlocks: Option<usize>,
    pub checks: Vec<Check>,
    /// The marking cap was hit; reachability-based checks were skipped.
    pub partial: bool,
}

impl OracleReport {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| matches!(c.status, CheckStatus::Fail(_)))
    }
}

/// Evaluates with the reference evaluator, falling back to automaton
/// membership when a second-order block is too wide to enumerate.
pub(crate) struct Evaluator<'a> {
    f: &'a Ws1sFormula,
    automaton: Option<TrackAutomaton>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(f: &'a Ws1sFormula) -> Evaluator<'a> {
        Evaluator { f, automaton: None }
    }

    pub(crate) fn holds(&mut self, st: &Structure) -> bool {
        match eval_ws1s(self.f, st) {
            Ok(b) => b,
            Err(EvalError::Budget(_)) => {
                let a = self
                    .automaton
                    .get_or_insert_with(|| compile(self.f).expect("oracle formula compiles"));
                a.accepts(st)
            }
            Err(e) => panic!("oracle evaluation failed: {e}"),
        }
    }
}

pub(crate) fn holds(f: &Ws1sFormula, st: &Structure) -> bool {
    Evaluator::new(f).holds(st)
}

fn status(failure: Option<String>) -> CheckStatus {
    match failure {
        None => CheckStatus::Pass,
        Some(s) => CheckStatus::Fail(s),
    }
}

fn subsets(net: &InstanceNet) -> impl Iterator<Item = Marking> + '_ {
    let p = net.place_count();
    (0u32..1 << p).map(move |w| Marking::from_places(p, (0..p).filter(|i| w >> i & 1 == 1)))
}

/// Cross-checks the generated formulas against the explicit instance of
/// size `n`.
pub fn oracle_check(
    sys: &ValidatedSystem,
    m: &StateVariableMap,
    props: &[NamedProperty],
    n: usize,
    use_flow: bool,
    cap: usize,
    verdicts: &[PropertyReport],
) -> OracleReport {
    let net = instantiate(sys, n);
    let mut rep = OracleReport {
        size: n,
        places: net.place_count(),
        transitions: net.transitions.len(),
        reachable: None,
        deadlocks: None,
        checks: Vec::new(),
        partial: false,
    };
    let small = net.place_count() <= SUBSET_CHECK_PLACES;
    let too_big = || CheckStatus::Skipped(format!("more than {SUBSET_CHECK_PLACES} places"));

    // traps are exactly the models of the trap predicate
    let trappred = gen_trappred(sys, m);
    rep.checks.push(Check {
        name: "traps-match-trap-predicate",
        status: if small {
            status(subsets(&net).find_map(|w| {
                let st = marking_to_structure(&net, &w);
                (is_trap(&net, &w) != holds(&trappred, &st))
                    .then(|| crate::petri::format_places(&net, &w))
            }))
        } else {
            too_big()
        },
    });

    let g = match reachable(&net, cap) {
        Ok(g) => g,
        Err(e) => {
            rep.partial = true;
            rep.checks.push(Check {
                name: "reachability",
                status: CheckStatus::Skipped(e.to_string()),
            });
            return rep;
        }
    };
    rep.reachable = Some(g.len());
    rep.deadlocks = Some(g.markings.iter().filter(|mk| net.enabled(mk).next().is_none()).count());

    rep.checks.push(Check {
        name: "one-state-per-instance",
        status: status(
            g.markings
                .iter()
                .find(|mk| net.marked_states_per_instance(mk).iter().any(|&c| c != 1))
                .map(|mk| crate::petri::format_places(&net, mk)),
        ),
    });

    let mut inv = vec![gen_marking(m), gen_trap_invariant(sys, m)];
    let norm = normalize_clauses(sys);
    if use_flow {
        inv.push(gen_flow_invariant(&norm, m));
    }
    let inv = Ws1sFormula::and(inv);
    let mut ev = Evaluator::new(&inv);
    rep.checks.push(Check {
        name: "reachable-markings-satisfy-invariant",
        status: status(first_failing(&net, &g, |st| ev.holds(st))),
    });

    let dl = gen_deadlock_property(sys, m);
    rep.checks.push(Check {
        name: "deadlock-formula-matches-enabledness",
        status: status(g.markings.iter().find_map(|mk| {
            let dead = net.enabled(mk).next().is_none();
            (dead != holds(&dl, &marking_to_structure(&net, mk))).then(|| crate::petri::format_places(&net, mk))
        })),
    });

    let one_sum = |w: &Marking| g.markings.iter().all(|mk| w.intersection_len(mk) == 1);
    rep.checks.push(Check {
        name: "structural-one-invariants-hold",
        status: if small {
            status(
                subsets(&net)
                    .find(|w| is_structural_one_invariant(&net, w) && !one_sum(w))
                    .map(|w| crate::petri::format_places(&net, &w)),
            )
        } else {
            too_big()
        },
    });
    let flowpred = gen_flowpred(&norm, m);
    rep.checks.push(Check {
        name: "flow-predicate-models-hold",
        status: if small {
            let mut ev = Evaluator::new(&flowpred);
            status(
                subsets(&net)
                    .find(|w| ev.holds(&marking_to_structure(&net, w)) && !one_sum(w))
                    .map(|w| crate::petri::format_places(&net, &w)),
            )
        } else {
            too_big()
        },
    });

    if small {
        // marked traps stay marked along every edge
        let traps = enumerate_traps(&net).expect("small net");
        let broken = g.edges.iter().enumerate().find_map(|(i, es)| {
            es.iter().find_map(|&(_, j)| {
                traps
                    .iter()
                    .find(|t| t.intersects(&g.markings[i]) && !t.intersects(&g.markings[j]))
                    .map(|t| crate::petri::format_places(&net, t))
            })
        });
        rep.checks.push(Check {
            name: "marked-traps-stay-marked",
            status: status(broken),
        });
    }

    for (p, v) in props.iter().zip(verdicts) {
        if v.verdict != VerdictKind::Verified {
            continue;
        }
        rep.checks.push(Check {
            name: "verified-property-holds",
            status: status(
                first_failing(&net, &g, |st| holds(&p.formula, st)).map(|w| format!("{}: {w}", p.name)),
            ),
        });
    }
    rep
}

fn first_failing(net: &InstanceNet, g: &ReachGraph, mut ok: impl FnMut(&Structure) -> bool) -> Option<String> {
    g.markings
        .iter()
        .find(|mk| !ok(&marking_to_structure(net, mk)))
        .map(|mk| crate::petri::format_places(net, mk))
}
