use super::*;
use crate::syntax::tests::PHILOSOPHERS;
use crate::syntax::{parse_system, validate};

fn net(src: &str, n: usize) -> InstanceNet {
    instantiate(&validate(parse_system(src).unwrap()).unwrap(), n)
}

fn alternating() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/alternating.cbs")).unwrap()
}

#[test]
fn philosophers_three_has_twelve_places_six_transitions() {
    let net = net(PHILOSOPHERS, 3);
    assert_eq!(net.place_count(), 12);
    assert_eq!(net.transitions.len(), 6);
    assert_eq!(net.instantiations, 6);
}

#[test]
fn philosophers_one_node() {
    // succ(0) = 0: the single philosopher takes fork 0 "twice", i.e. once
    let net = net(PHILOSOPHERS, 1);
    assert_eq!(net.place_count(), 4);
    assert_eq!(net.transitions.len(), 2);
    let t = &net.transitions[0];
    assert_eq!(t.pre, net.set_of(&[("w", 0), ("f", 0)]));
}

#[test]
fn unsatisfiable_guards_give_no_transitions() {
    let src = "component A { ports p; states a; init a; a -p-> a; } clause exists i when i < i: p(i);";
    let net = net(src, 3);
    assert!(net.transitions.is_empty());
    let g = reachable(&net, 10).unwrap();
    assert_eq!(g.markings, vec![net.initial.clone()]);
    assert_eq!(deadlocks(&net, &g), vec![net.initial.clone()]);
}

#[test]
fn two_philosophers_never_eat_together() {
    let net = net(PHILOSOPHERS, 2);
    let g = reachable(&net, 1000).unwrap();
    let both = net.set_of(&[("e", 0), ("e", 1)]);
    assert!(g.markings.iter().all(|m| !both.is_subset(m)));
    assert!(deadlocks(&net, &g).is_empty());
}

#[test]
fn reachable_markings_are_one_per_instance() {
    let net = net(&alternating(), 3);
    let g = reachable(&net, 10_000).unwrap();
    for m in &g.markings {
        assert!(net.marked_states_per_instance(m).iter().all(|&c| c == 1));
    }
}

#[test]
fn philosophers_known_traps() {
    let net = net(PHILOSOPHERS, 3);
    assert!(is_trap(&net, &net.set_of(&[("f", 1), ("b", 1)])));
    assert!(is_trap(&net, &net.set_of(&[("f", 0), ("b", 1), ("f", 2), ("e", 2)])));
    assert!(is_trap(&net, &net.empty_set()));
    assert!(!is_trap(&net, &net.set_of(&[("f", 1)])));
}

#[test]
fn maximal_trap_matches_enumeration() {
    let net = net(PHILOSOPHERS, 2);
    let traps = enumerate_traps(&net).unwrap();
    for within in [net.all_places(), net.set_of(&[("f", 0), ("b", 0), ("w", 1)]), net.set_of(&[("w", 0)])] {
        let mut union = net.empty_set();
        for t in traps.iter().filter(|t| t.is_subset(&within)) {
            for p in t.places() {
                union.insert(p);
            }
        }
        assert_eq!(maximal_trap(&net, &within), union);
    }
}

#[test]
fn structural_one_invariants() {
    let net = net(PHILOSOPHERS, 3);
    for k in 0..3 {
        assert!(is_structural_one_invariant(&net, &net.set_of(&[("f", k), ("b", k)])));
    }
    assert!(!is_structural_one_invariant(&net, &net.set_of(&[("f", 0)])));
    assert!(!is_structural_one_invariant(&net, &net.set_of(&[("f", 0), ("f", 1)])));
}

#[test]
fn alternating_stuck_state_is_unreachable_deadlock() {
    let net = net(&alternating(), 3);
    let s = net.set_of(&[("b", 0), ("h", 0), ("b", 1), ("w", 1), ("f", 2), ("e", 2)]);
    assert!(net.enabled(&s).next().is_none());
    let g = reachable(&net, 10_000).unwrap();
    assert!(!g.contains(&s));
    assert!(deadlocks(&net, &g).is_empty());
}

#[test]
fn structure_round_trip() {
    let net = net(PHILOSOPHERS, 3);
    let st = marking_to_structure(&net, &net.initial);
    assert_eq!(st.sets["X_w"], BTreeSet::from([0, 1, 2]));
    assert_eq!(st.sets["X_f"], BTreeSet::from([0, 1, 2]));
    assert!(st.sets["X_e"].is_empty() && st.sets["X_b"].is_empty());
    assert_eq!(structure_to_marking(&net, &st), net.initial);
    let e = marking_to_structure(&net, &net.empty_set());
    assert!(e.sets.values().all(BTreeSet::is_empty));
}

#[test]
fn dot_lists_places_and_arcs() {
    let net = net(PHILOSOPHERS, 2);
    let dot = to_dot(&net);
    assert_eq!(dot.matches("shape=circle").count(), 8);
    assert_eq!(dot.matches("shape=box").count(), 4);
    assert!(dot.contains("label=\"w,0\",style=filled"));
}
