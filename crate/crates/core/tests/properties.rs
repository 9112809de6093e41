mod common;

use proptest::prelude::*;

use trapinv::invgen::normalize_clauses;
use trapinv::logic::{eval_il, eval_ws1s, flatten, is_flat, minimal_models, translate, Ws1sFormula};
use trapinv::petri::{enumerate_traps, instantiate, reachable};
use trapinv::syntax::{parse_formula, parse_system, print_formula, print_system, validate};
use trapinv::ws1s_solver::{decide, Verdict};

use common::*;

fn fo_sets(f: &Ws1sFormula) -> (Vec<String>, Vec<String>) {
    let fv = f.free_vars();
    (fv.first_order.into_iter().collect(), fv.second_order.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn translation_preserves_truth(f in il_formula()) {
        let g = flatten(&f);
        prop_assert!(is_flat(&g));
        let w = translate(&g).unwrap();
        let fo: Vec<String> = f.free_vars().into_iter().collect();
        let preds: Vec<String> = f.predicates().into_iter().collect();
        for n in 1..=3 {
            for st in structures(n, &fo, &preds) {
                prop_assert_eq!(eval_il(&f, &st).unwrap(), eval_ws1s(&w, &st).unwrap(), "{} on {}", f, st);
            }
        }
    }

    #[test]
    fn flatten_is_idempotent(f in il_formula()) {
        let g = flatten(&f);
        prop_assert_eq!(flatten(&g), g);
    }

    #[test]
    fn printed_formulas_parse_back(f in il_formula()) {
        let g = parse_formula(&print_formula(&f)).unwrap();
        let fo: Vec<String> = f.free_vars().into_iter().collect();
        let preds: Vec<String> = f.predicates().into_iter().collect();
        for n in 1..=3 {
            for st in structures(n, &fo, &preds) {
                prop_assert_eq!(eval_il(&f, &st).unwrap(), eval_il(&g, &st).unwrap());
            }
        }
    }

    #[test]
    fn decide_agrees_with_enumeration(f in ws1s_formula(), min in 1usize..=3) {
        let (fo, so) = fo_sets(&f);
        let sat_at = |n: usize| structures(n, &fo, &so).iter().any(|st| eval_ws1s(&f, st).unwrap());
        match decide(&f, min).unwrap() {
            Verdict::Unsat => {
                for n in min..=4 {
                    prop_assert!(!sat_at(n), "{} has a model of size {}", f, n);
                }
            }
            Verdict::Sat { witness, rechecked } => {
                prop_assert!(rechecked);
                prop_assert!(eval_ws1s(&f, &witness).unwrap());
                prop_assert!(witness.size >= min);
                for n in min..witness.size.min(5) {
                    prop_assert!(!sat_at(n), "witness of size {} is not shortest", witness.size);
                }
            }
        }
    }
}

#[test]
fn corpus_round_trips_through_printer() {
    for path in corpus_files() {
        let spec = parse_system(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let again = parse_system(&print_system(&spec)).unwrap();
        assert_eq!(spec, again, "{}", path.display());
    }
}

#[test]
fn normalization_preserves_instantiations() {
    for path in corpus_files() {
        let sys = validate(parse_system(&std::fs::read_to_string(&path).unwrap()).unwrap()).unwrap();
        let norm = normalize_clauses(&sys);
        for n in 1..=4 {
            for (a, b) in sys.clauses().iter().zip(norm.system().clauses()) {
                assert_eq!(minimal_models(&sys, a, n), minimal_models(&sys, b, n), "{}", path.display());
            }
        }
    }
}

#[test]
fn marked_traps_stay_marked() {
    for name in ["philosophers", "alternating", "broadcast_mutex", "token_ring"] {
        let sys = load(name);
        for n in 2..=3 {
            let net = instantiate(&sys, n);
            if net.place_count() > 16 {
                continue;
            }
            let traps = enumerate_traps(&net).unwrap();
            let g = reachable(&net, 100_000).unwrap();
            for (i, edges) in g.edges.iter().enumerate() {
                for &(_, j) in edges {
                    for t in &traps {
                        assert!(!t.intersects(&g.markings[i]) || t.intersects(&g.markings[j]));
                    }
                }
            }
        }
    }
}

#[test]
fn reachable_markings_are_one_safe_and_complete() {
    for path in corpus_files() {
        let sys = validate(parse_system(&std::fs::read_to_string(&path).unwrap()).unwrap()).unwrap();
        for n in 1..=4 {
            let net = instantiate(&sys, n);
            let g = reachable(&net, 100_000).unwrap();
            for m in &g.markings {
                assert!(net.marked_states_per_instance(m).iter().all(|&c| c == 1), "{}", path.display());
            }
        }
    }
}
