#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

use trapinv::logic::{IlFormula, Structure, Term, Ws1sFormula};
use trapinv::syntax::{parse_system, validate, ValidatedSystem};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cbs"))
        .collect();
    v.sort();
    v
}

pub fn load(name: &str) -> ValidatedSystem {
    let src = std::fs::read_to_string(corpus_dir().join(format!("{name}.cbs"))).unwrap();
    validate(parse_system(&src).unwrap()).unwrap()
}

fn term(vars: Vec<&'static str>, root: bool) -> BoxedStrategy<Term> {
    let var = proptest::sample::select(vars).prop_map(Term::var);
    let base = if root {
        prop_oneof![4 => var, 1 => Just(Term::Root)].boxed()
    } else {
        var.boxed()
    };
    base.prop_recursive(2, 3, 1, |inner| inner.prop_map(Term::succ)).boxed()
}

/// IL formulas over free variables `x`, `y` and predicates `P`, `Q`, with
/// bound variables drawn from `x`, `y`, `z`.
pub fn il_formula() -> BoxedStrategy<IlFormula> {
    let vars = vec!["x", "y", "z"];
    let t = || term(vars.clone(), false);
    let atom = prop_oneof![
        (t(), t()).prop_map(|(a, b)| IlFormula::Eq(a, b)),
        (t(), t()).prop_map(|(a, b)| IlFormula::Le(a, b)),
        (t(), t()).prop_map(|(a, b)| IlFormula::Lt(a, b)),
        t().prop_map(IlFormula::Zero),
        t().prop_map(IlFormula::Max),
        (proptest::sample::select(vec!["P", "Q"]), t()).prop_map(|(p, a)| IlFormula::pred(p, a)),
        Just(IlFormula::True),
    ];
    atom.prop_recursive(4, 24, 3, move |inner| {
        let v = proptest::sample::select(vec!["x", "y", "z"]);
        prop_oneof![
            inner.clone().prop_map(IlFormula::not),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(IlFormula::And),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(IlFormula::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IlFormula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| IlFormula::iff(a, b)),
            (v.clone(), inner.clone()).prop_map(|(v, g)| IlFormula::exists(v, g)),
            (v, inner).prop_map(|(v, g)| IlFormula::forall(v, g)),
        ]
    })
    .boxed()
}

/// WS1S formulas over free `x`, `y`, `X`, with bound `z`, `Y`, `Z` as well.
pub fn ws1s_formula() -> BoxedStrategy<Ws1sFormula> {
    let t = || term(vec!["x", "y", "z"], true);
    let sets = || proptest::sample::select(vec!["X", "Y", "Z"]);
    let atom = prop_oneof![
        (t(), t()).prop_map(|(a, b)| Ws1sFormula::Eq(a, b)),
        (t(), t()).prop_map(|(a, b)| Ws1sFormula::Le(a, b)),
        (t(), t()).prop_map(|(a, b)| Ws1sFormula::Lt(a, b)),
        t().prop_map(Ws1sFormula::Max),
        (sets(), t()).prop_map(|(s, a)| Ws1sFormula::member(s, a)),
        (sets(), t()).prop_map(|(s, a)| Ws1sFormula::member(s, a)),
    ];
    atom.prop_recursive(4, 20, 3, move |inner| {
        let v1 = proptest::sample::select(vec!["x", "y", "z"]);
        let v2 = proptest::sample::select(vec!["Y", "Z"]);
        prop_oneof![
            inner.clone().prop_map(Ws1sFormula::not),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Ws1sFormula::And),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Ws1sFormula::Or),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ws1sFormula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ws1sFormula::iff(a, b)),
            (v1.clone(), inner.clone()).prop_map(|(v, g)| Ws1sFormula::exists(v, g)),
            (v1, inner.clone()).prop_map(|(v, g)| Ws1sFormula::forall(v, g)),
            (v2.clone(), inner.clone()).prop_map(|(v, g)| Ws1sFormula::exists2(v, g)),
            (v2, inner).prop_map(|(v, g)| Ws1sFormula::forall2(v, g)),
        ]
    })
    .boxed()
}

/// `count` values of `s`, reproducibly.
pub fn sample<T: std::fmt::Debug>(s: BoxedStrategy<T>, count: usize) -> Vec<T> {
    let mut runner = TestRunner::deterministic();
    (0..count).map(|_| s.new_tree(&mut runner).unwrap().current()).collect()
}

/// Every structure of size `n` assigning the given first-order variables
/// and sets.
pub fn structures(n: usize, fo: &[String], so: &[String]) -> Vec<Structure> {
    let mut out = vec![Structure::new(n)];
    for v in fo {
        out = out
            .into_iter()
            .flat_map(|s| (0..n).map(move |u| s.clone().with_position(v.clone(), u)))
            .collect();
    }
    for v in so {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0u32..1 << n).map(move |mask| {
                    let set: BTreeSet<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                    s.clone().with_set(v.clone(), set)
                })
            })
            .collect();
    }
    out
}
