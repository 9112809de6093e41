use std::collections::HashMap;

use thiserror::Error;

use super::ground::{ground, Circuit, GroundError, Grounding, NodeId, LANE_MASKS};
use super::{IlFormula, Structure, Term, Ws1sFormula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not assigned by the structure")]
    UnassignedVariable(String),
    #[error("predicate or set variable `{0}` is not assigned by the structure")]
    UnassignedSet(String),
    #[error("universe size {0} is outside the evaluable range 1..=64")]
    UniverseSize(usize),
    #[error("the root constant is not part of the interaction logic")]
    RootInIl,
    #[error("structure assigns a position or node outside the universe")]
    OutOfUniverse,
    #[error("second-order quantifier block needs 2^{0} assignments, above the evaluation budget")]
    Budget(usize),
}

/// Largest number of set bits enumerated by one second-order quantifier block.
pub const SO_BLOCK_BUDGET: usize = 36;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Succ {
    /// IL: successor modulo n.
    Modular,
    /// WS1S: the successor of the last position is itself.
    SelfLoop,
}

struct Env<'a> {
    n: usize,
    succ: Succ,
    fo_free: HashMap<&'a str, usize>,
    so_free: HashMap<&'a str, u64>,
    fo: Vec<(&'a str, usize)>,
    so: Vec<(&'a str, u64)>,
}

impl<'a> Env<'a> {
    fn new(s: &'a Structure, succ: Succ) -> Result<Env<'a>, EvalError> {
        if s.size == 0 || s.size > 64 {
            return Err(EvalError::UniverseSize(s.size));
        }
        if !s.is_well_formed() {
            return Err(EvalError::OutOfUniverse);
        }
        let fo_free = s.positions.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        let so_free = s
            .sets
            .iter()
            .map(|(k, v)| (k.as_str(), v.iter().fold(0u64, |m, &p| m | (1 << p))))
            .collect();
        Ok(Env {
            n: s.size,
            succ,
            fo_free,
            so_free,
            fo: Vec::new(),
            so: Vec::new(),
        })
    }

    fn position(&self, v: &str) -> Result<usize, EvalError> {
        if let Some((_, p)) = self.fo.iter().rev().find(|(name, _)| *name == v) {
            return Ok(*p);
        }
        self.fo_free
            .get(v)
            .copied()
            .ok_or_else(|| EvalError::UnassignedVariable(v.to_string()))
    }

    fn set(&self, x: &str) -> Result<u64, EvalError> {
        if let Some((_, m)) = self.so.iter().rev().find(|(name, _)| *name == x) {
            return Ok(*m);
        }
        self.so_free
            .get(x)
            .copied()
            .ok_or_else(|| EvalError::UnassignedSet(x.to_string()))
    }

    fn term(&self, t: &Term) -> Result<usize, EvalError> {
        match t {
            Term::Var(v) => self.position(v),
            Term::Root => match self.succ {
                Succ::Modular => Err(EvalError::RootInIl),
                Succ::SelfLoop => Ok(0),
            },
            Term::Succ(inner) => {
                let p = self.term(inner)?;
                Ok(match self.succ {
                    Succ::Modular => (p + 1) % self.n,
                    Succ::SelfLoop => (p + 1).min(self.n - 1),
                })
            }
        }
    }
}

/// Evaluates an IL formula; successor is interpreted modulo the universe size.
pub fn eval_il(f: &IlFormula, s: &Structure) -> Result<bool, EvalError> {
    let mut env = Env::new(s, Succ::Modular)?;
    il(f, &mut env)
}

fn il<'a>(f: &'a IlFormula, env: &mut Env<'a>) -> Result<bool, EvalError> {
    use IlFormula as F;
    Ok(match f {
        F::True => true,
        F::False => false,
        F::Le(a, b) => env.term(a)? <= env.term(b)?,
        F::Lt(a, b) => env.term(a)? < env.term(b)?,
        F::Eq(a, b) => env.term(a)? == env.term(b)?,
        F::Zero(t) => env.term(t)? == 0,
        F::Max(t) => env.term(t)? == env.n - 1,
        F::Pred(p, t) => {
            let pos = env.term(t)?;
            env.set(p)? & (1 << pos) != 0
        }
        F::Not(g) => !il(g, env)?,
        F::And(gs) => {
            for g in gs {
                if !il(g, env)? {
                    return Ok(false);
                }
            }
            true
        }
        F::Or(gs) => {
            for g in gs {
                if il(g, env)? {
                    return Ok(true);
                }
            }
            false
        }
        F::Implies(a, b) => !il(a, env)? || il(b, env)?,
        F::Iff(a, b) => il(a, env)? == il(b, env)?,
        F::Exists(v, g) | F::Forall(v, g) => {
            let want = matches!(f, F::Exists(..));
            let mut result = !want;
            for p in 0..env.n {
                env.fo.push((v, p));
                let r = il(g, env);
                env.fo.pop();
                if r? == want {
                    result = want;
                    break;
                }
            }
            result
        }
    })
}

/// Evaluates a WS1S formula over a finite word structure: the successor of
/// the last position is itself, the root is position 0. Second-order
/// quantifiers are evaluated by enumerating all subsets of the universe.
pub fn eval_ws1s(f: &Ws1sFormula, s: &Structure) -> Result<bool, EvalError> {
    let mut env = Env::new(s, Succ::SelfLoop)?;
    ws1s(f, &mut env)
}

fn ws1s<'a>(f: &'a Ws1sFormula, env: &mut Env<'a>) -> Result<bool, EvalError> {
    use Ws1sFormula as F;
    Ok(match f {
        F::True => true,
        F::False => false,
        F::Eq(a, b) => env.term(a)? == env.term(b)?,
        F::Le(a, b) => env.term(a)? <= env.term(b)?,
        F::Lt(a, b) => env.term(a)? < env.term(b)?,
        F::Max(t) => env.term(t)? == env.n - 1,
        F::In(x, t) => {
            let pos = env.term(t)?;
            env.set(x)? & (1 << pos) != 0
        }
        F::Not(g) => !ws1s(g, env)?,
        F::And(gs) => {
            for g in gs {
                if !ws1s(g, env)? {
                    return Ok(false);
                }
            }
            true
        }
        F::Or(gs) => {
            for g in gs {
                if ws1s(g, env)? {
                    return Ok(true);
                }
            }
            false
        }
        F::Implies(a, b) => !ws1s(a, env)? || ws1s(b, env)?,
        F::Iff(a, b) => ws1s(a, env)? == ws1s(b, env)?,
        F::Exists1(v, g) | F::Forall1(v, g) => {
            let want = matches!(f, F::Exists1(..));
            let mut result = !want;
            for p in 0..env.n {
                env.fo.push((v, p));
                let r = ws1s(g, env);
                env.fo.pop();
                if r? == want {
                    result = want;
                    break;
                }
            }
            result
        }
        F::Exists2(..) | F::Forall2(..) if !has_nested_so(f) => so_block(f, env)?,
        F::Exists2(x, g) | F::Forall2(x, g) => {
            let want = matches!(f, F::Exists2(..));
            let mut result = !want;
            for mask in 0..(1u64 << env.n) {
                env.so.push((x, mask));
                let r = ws1s(g, env);
                env.so.pop();
                if r? == want {
                    result = want;
                    break;
                }
            }
            result
        }
    })
}

/// True when the body below the outermost block of same-kind second-order
/// quantifiers still contains second-order quantifiers.
fn has_nested_so(f: &Ws1sFormula) -> bool {
    let (_, _, body) = so_prefix(f);
    contains_so(body)
}

fn so_prefix(f: &Ws1sFormula) -> (bool, Vec<&str>, &Ws1sFormula) {
    let exists = matches!(f, Ws1sFormula::Exists2(..));
    let mut vars = Vec::new();
    let mut cur = f;
    loop {
        match cur {
            Ws1sFormula::Exists2(x, g) if exists => {
                vars.push(x.as_str());
                cur = g;
            }
            Ws1sFormula::Forall2(x, g) if !exists => {
                vars.push(x.as_str());
                cur = g;
            }
            _ => return (exists, vars, cur),
        }
    }
}

fn contains_so(f: &Ws1sFormula) -> bool {
    use Ws1sFormula as F;
    match f {
        F::Exists2(..) | F::Forall2(..) => true,
        F::Not(g) | F::Exists1(_, g) | F::Forall1(_, g) => contains_so(g),
        F::And(gs) | F::Or(gs) => gs.iter().any(contains_so),
        F::Implies(a, b) | F::Iff(a, b) => contains_so(a) || contains_so(b),
        _ => false,
    }
}

/// A block of second-order quantifiers over a body without further
/// second-order quantifiers: the body is grounded into a circuit whose
/// inputs are the block's set variables and all assignments are enumerated,
/// 64 at a time.
fn so_block(f: &Ws1sFormula, env: &Env<'_>) -> Result<bool, EvalError> {
    let (exists, mut vars, body) = so_prefix(f);
    // an inner binder of the same name shadows the outer one
    let mut seen = std::collections::BTreeSet::new();
    vars.retain(|v| seen.insert(*v));
    let bits = vars.len() * env.n;
    if bits > SO_BLOCK_BUDGET {
        return Err(EvalError::Budget(bits));
    }
    let mut g = Grounding::new(env.n).with_inputs(vars.iter().copied());
    for (k, v) in env.fo_free.iter().map(|(k, v)| (*k, *v)).chain(env.fo.iter().copied()) {
        g.positions.insert(k.to_string(), v);
    }
    for (k, m) in env.so_free.iter().map(|(k, v)| (*k, *v)).chain(env.so.iter().copied()) {
        if !vars.contains(&k) {
            g.fixed_sets
                .insert(k.to_string(), (0..env.n).filter(|u| m >> u & 1 == 1).collect());
        }
    }
    let mut c = Circuit::new();
    let root = ground(body, &g, &mut c).map_err(|e| match e {
        GroundError::Unassigned(v) => EvalError::UnassignedVariable(v),
        GroundError::UnassignedSet(x) => EvalError::UnassignedSet(x),
        GroundError::SecondOrder(x) => unreachable!("nested set quantifier over {x}"),
    })?;
    Ok(if exists {
        any_assignment(&c, root, bits, true)
    } else {
        !any_assignment(&c, root, bits, false)
    })
}

/// Whether some input assignment makes the circuit evaluate to `target`.
fn any_assignment(c: &Circuit, root: NodeId, inputs: usize, target: bool) -> bool {
    let sched = c.schedule(root);
    let mut scratch = Vec::new();
    let mut words = vec![0u64; inputs];
    let low = inputs.min(6);
    let lane_mask = if low == 6 { !0u64 } else { (1u64 << (1 << low)) - 1 };
    for (i, w) in words.iter_mut().enumerate().take(low) {
        *w = LANE_MASKS[i];
    }
    for batch in 0..(1u64 << (inputs - low)) {
        for (i, w) in words.iter_mut().enumerate().skip(low) {
            *w = if (batch >> (i - low)) & 1 == 1 { !0 } else { 0 };
        }
        let r = c.eval64(&sched, &words, &mut scratch);
        let hits = if target { r } else { !r };
        if hits & lane_mask != 0 {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn il_successor_wraps_around() {
        let f = IlFormula::Eq(Term::succ(v("x")), v("y"));
        let s = Structure::new(3).with_position("x", 2).with_position("y", 0);
        assert!(eval_il(&f, &s).unwrap());
    }

    #[test]
    fn il_le_is_reflexive() {
        let f = IlFormula::Le(v("x"), v("x"));
        for n in 1..5 {
            for p in 0..n {
                assert!(eval_il(&f, &Structure::new(n).with_position("x", p)).unwrap());
            }
        }
    }

    #[test]
    fn philosophers_first_disjunct_minimal_model() {
        // g(i) & t(i) & t(succ(i)) with n=3, i=1, g={1}, t={1,2}
        let f = IlFormula::and([
            IlFormula::pred("g", v("i")),
            IlFormula::pred("t", v("i")),
            IlFormula::pred("t", Term::succ(v("i"))),
        ]);
        let s = Structure::new(3)
            .with_position("i", 1)
            .with_set("g", [1])
            .with_set("t", [1, 2]);
        assert!(eval_il(&f, &s).unwrap());
    }

    #[test]
    fn ws1s_successor_self_loops_at_the_end() {
        let f = Ws1sFormula::Eq(Term::succ(v("x")), v("x"));
        assert!(eval_ws1s(&f, &Structure::new(3).with_position("x", 2)).unwrap());
        assert!(!eval_ws1s(&f, &Structure::new(3).with_position("x", 0)).unwrap());
    }

    #[test]
    fn ws1s_root_and_max() {
        let s = Structure::new(4).with_position("x", 0).with_position("y", 3);
        assert!(eval_ws1s(&Ws1sFormula::Eq(v("x"), Term::Root), &s).unwrap());
        assert!(eval_ws1s(&Ws1sFormula::Max(v("y")), &s).unwrap());
        assert!(!eval_ws1s(&Ws1sFormula::Max(v("x")), &s).unwrap());
    }

    #[test]
    fn unassigned_symbols_are_reported() {
        let f = IlFormula::pred("p", v("x"));
        let s = Structure::new(2).with_position("x", 0);
        assert_eq!(eval_il(&f, &s), Err(EvalError::UnassignedSet("p".into())));
        let s = Structure::new(2).with_set("p", [0]);
        assert_eq!(eval_il(&f, &s), Err(EvalError::UnassignedVariable("x".into())));
    }

    #[test]
    fn root_is_rejected_in_il() {
        let f = IlFormula::Eq(v("x"), Term::Root);
        let s = Structure::new(2).with_position("x", 0);
        assert_eq!(eval_il(&f, &s), Err(EvalError::RootInIl));
    }

    #[test]
    fn second_order_quantifier_enumerates_subsets() {
        // exists X . X(x) & !X(y)  holds iff x != y
        let f = Ws1sFormula::exists2(
            "X",
            Ws1sFormula::and([
                Ws1sFormula::member("X", v("x")),
                Ws1sFormula::not(Ws1sFormula::member("X", v("y"))),
            ]),
        );
        let s = Structure::new(3).with_position("x", 1).with_position("y", 1);
        assert!(!eval_ws1s(&f, &s).unwrap());
        let s = Structure::new(3).with_position("x", 1).with_position("y", 2);
        assert!(eval_ws1s(&f, &s).unwrap());
    }

    #[test]
    fn nested_set_quantifiers_match_block_evaluation() {
        // forall X . exists Y . (X(x) -> Y(x)) & (all1 z . Y(z) -> X(z) | z = y)
        let body = Ws1sFormula::and([
            Ws1sFormula::implies(Ws1sFormula::member("X", v("x")), Ws1sFormula::member("Y", v("x"))),
            Ws1sFormula::forall(
                "z",
                Ws1sFormula::implies(
                    Ws1sFormula::member("Y", v("z")),
                    Ws1sFormula::or([Ws1sFormula::member("X", v("z")), Ws1sFormula::Eq(v("z"), v("y"))]),
                ),
            ),
        ]);
        let nested = Ws1sFormula::forall2("X", Ws1sFormula::exists2("Y", body.clone()));
        // the same as a single block after swapping in a fresh universally quantified copy
        let flat = Ws1sFormula::forall2("X", Ws1sFormula::forall2("W", Ws1sFormula::True));
        for n in 1..=4 {
            for x in 0..n {
                for y in 0..n {
                    let s = Structure::new(n).with_position("x", x).with_position("y", y);
                    assert!(eval_ws1s(&nested, &s).unwrap());
                    assert!(eval_ws1s(&flat, &s).unwrap());
                    // block path vs. naive path on the inner existential
                    for mask in 0..(1u64 << n) {
                        let sx = s.clone().with_set("X", (0..n).filter(|u| mask >> u & 1 == 1));
                        let block = eval_ws1s(&Ws1sFormula::exists2("Y", body.clone()), &sx).unwrap();
                        let naive = (0..(1u64 << n)).any(|m| {
                            let sy = sx.clone().with_set("Y", (0..n).filter(|u| m >> u & 1 == 1));
                            eval_ws1s(&body, &sy).unwrap()
                        });
                        assert_eq!(block, naive);
                    }
                }
            }
        }
    }

    #[test]
    fn block_budget_is_reported() {
        let f = Ws1sFormula::forall2_many((0..5).map(|i| format!("X{i}")), Ws1sFormula::True);
        assert_eq!(eval_ws1s(&f, &Structure::new(8)), Err(EvalError::Budget(40)));
    }
}
