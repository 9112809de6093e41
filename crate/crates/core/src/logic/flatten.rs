use thiserror::Error;

use super::{max_fresh_index_il, IlFormula, Term, Ws1sFormula, FRESH_PREFIX};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("formula is not flattened: atom `{0}` nests a successor")]
    NotFlat(String),
}

struct Fresh {
    next: usize,
}

impl Fresh {
    fn name(&mut self) -> String {
        let n = format!("{FRESH_PREFIX}{}", self.next);
        self.next += 1;
        n
    }
}

/// Rewrites every atom so that the successor function only occurs in atoms
/// of the shape `succ(x) = y` over variables; nested or embedded successor
/// terms are named by fresh existentially quantified variables.
pub fn flatten(f: &IlFormula) -> IlFormula {
    let mut fresh = Fresh {
        next: max_fresh_index_il(f) + 1,
    };
    flatten_rec(f, &mut fresh)
}

fn flatten_rec(f: &IlFormula, fresh: &mut Fresh) -> IlFormula {
    use IlFormula as F;
    match f {
        F::True | F::False => f.clone(),
        F::Eq(a, b) => flatten_eq(a, b, fresh),
        F::Le(a, b) => binary_atom(a, b, fresh, F::Le),
        F::Lt(a, b) => binary_atom(a, b, fresh, F::Lt),
        F::Zero(t) => unary_atom(t, fresh, F::Zero),
        F::Max(t) => unary_atom(t, fresh, F::Max),
        F::Pred(p, t) => unary_atom(t, fresh, |t| F::Pred(p.clone(), t)),
        F::Not(g) => F::Not(Box::new(flatten_rec(g, fresh))),
        F::And(gs) => F::And(gs.iter().map(|g| flatten_rec(g, fresh)).collect()),
        F::Or(gs) => F::Or(gs.iter().map(|g| flatten_rec(g, fresh)).collect()),
        F::Implies(a, b) => F::Implies(Box::new(flatten_rec(a, fresh)), Box::new(flatten_rec(b, fresh))),
        F::Iff(a, b) => F::Iff(Box::new(flatten_rec(a, fresh)), Box::new(flatten_rec(b, fresh))),
        F::Exists(v, g) => F::Exists(v.clone(), Box::new(flatten_rec(g, fresh))),
        F::Forall(v, g) => F::Forall(v.clone(), Box::new(flatten_rec(g, fresh))),
    }
}

/// Names `t` by a variable, collecting `succ(a) = b` definitions and the
/// fresh variables they introduce.
fn name_term(t: &Term, fresh: &mut Fresh, defs: &mut Vec<IlFormula>, vars: &mut Vec<String>) -> Term {
    match t {
        Term::Var(_) | Term::Root => t.clone(),
        Term::Succ(inner) => {
            let base = name_term(inner, fresh, defs, vars);
            let z = fresh.name();
            defs.push(IlFormula::Eq(Term::succ(base), Term::Var(z.clone())));
            vars.push(z.clone());
            Term::Var(z)
        }
    }
}

fn wrap(vars: Vec<String>, mut defs: Vec<IlFormula>, atom: IlFormula) -> IlFormula {
    if vars.is_empty() {
        return atom;
    }
    defs.push(atom);
    IlFormula::exists_many(vars, IlFormula::And(defs))
}

fn unary_atom(t: &Term, fresh: &mut Fresh, mk: impl FnOnce(Term) -> IlFormula) -> IlFormula {
    let (mut defs, mut vars) = (Vec::new(), Vec::new());
    let t = name_term(t, fresh, &mut defs, &mut vars);
    wrap(vars, defs, mk(t))
}

fn binary_atom(a: &Term, b: &Term, fresh: &mut Fresh, mk: impl FnOnce(Term, Term) -> IlFormula) -> IlFormula {
    let (mut defs, mut vars) = (Vec::new(), Vec::new());
    let a = name_term(a, fresh, &mut defs, &mut vars);
    let b = name_term(b, fresh, &mut defs, &mut vars);
    wrap(vars, defs, mk(a, b))
}

fn flatten_eq(a: &Term, b: &Term, fresh: &mut Fresh) -> IlFormula {
    // Orient so that a successor term, if any, is on the left.
    let (l, r) = match (a, b) {
        (Term::Succ(_), _) => (a, b),
        (_, Term::Succ(_)) => (b, a),
        _ => return IlFormula::Eq(a.clone(), b.clone()),
    };
    let (mut defs, mut vars) = (Vec::new(), Vec::new());
    let Term::Succ(inner) = l else { unreachable!() };
    let base = name_term(inner, fresh, &mut defs, &mut vars);
    let rhs = name_term(r, fresh, &mut defs, &mut vars);
    wrap(vars, defs, IlFormula::Eq(Term::succ(base), rhs))
}

fn simple(t: &Term) -> bool {
    matches!(t, Term::Var(_) | Term::Root)
}

/// Checks that successor occurs only in atoms `succ(x) = y` with `x`, `y` variables.
pub fn is_flat(f: &IlFormula) -> bool {
    first_unflat_atom(f).is_none()
}

fn first_unflat_atom(f: &IlFormula) -> Option<&IlFormula> {
    use IlFormula as F;
    match f {
        F::True | F::False => None,
        F::Eq(Term::Succ(x), y) => (!(simple(x) && simple(y))).then_some(f),
        F::Eq(a, b) | F::Le(a, b) | F::Lt(a, b) => (!(simple(a) && simple(b))).then_some(f),
        F::Zero(t) | F::Max(t) | F::Pred(_, t) => (!simple(t)).then_some(f),
        F::Not(g) | F::Exists(_, g) | F::Forall(_, g) => first_unflat_atom(g),
        F::And(gs) | F::Or(gs) => gs.iter().find_map(first_unflat_atom),
        F::Implies(a, b) | F::Iff(a, b) => first_unflat_atom(a).or_else(|| first_unflat_atom(b)),
    }
}

/// Embeds a flattened IL formula into WS1S. Homomorphic on connectives;
/// `succ(x) = y` becomes `(!max(x) & succ(x) = y) | (max(x) & y = root)`
/// so that the modular successor of IL is recovered over words.
pub fn translate(f: &IlFormula) -> Result<Ws1sFormula, TranslateError> {
    if let Some(atom) = first_unflat_atom(f) {
        return Err(TranslateError::NotFlat(atom.to_string()));
    }
    Ok(tr(f))
}

fn tr(f: &IlFormula) -> Ws1sFormula {
    use IlFormula as F;
    use Ws1sFormula as W;
    match f {
        F::True => W::True,
        F::False => W::False,
        F::Eq(Term::Succ(x), y) => {
            let x = (**x).clone();
            W::Or(vec![
                W::And(vec![
                    W::Not(Box::new(W::Max(x.clone()))),
                    W::Eq(Term::succ(x.clone()), y.clone()),
                ]),
                W::And(vec![W::Max(x), W::Eq(y.clone(), Term::Root)]),
            ])
        }
        F::Eq(a, b) => W::Eq(a.clone(), b.clone()),
        F::Le(a, b) => W::Le(a.clone(), b.clone()),
        F::Lt(a, b) => W::Lt(a.clone(), b.clone()),
        F::Zero(t) => W::Eq(t.clone(), Term::Root),
        F::Max(t) => W::Max(t.clone()),
        F::Pred(p, t) => W::In(p.clone(), t.clone()),
        F::Not(g) => W::Not(Box::new(tr(g))),
        F::And(gs) => W::And(gs.iter().map(tr).collect()),
        F::Or(gs) => W::Or(gs.iter().map(tr).collect()),
        F::Implies(a, b) => W::Implies(Box::new(tr(a)), Box::new(tr(b))),
        F::Iff(a, b) => W::Iff(Box::new(tr(a)), Box::new(tr(b))),
        F::Exists(v, g) => W::Exists1(v.clone(), Box::new(tr(g))),
        F::Forall(v, g) => W::Forall1(v.clone(), Box::new(tr(g))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{eval_il, eval_ws1s, Structure};

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    #[test]
    fn double_successor_gets_one_fresh_variable() {
        let f = IlFormula::Eq(Term::succ(Term::succ(v("x"))), v("y"));
        let g = flatten(&f);
        let expected = IlFormula::exists(
            "#1",
            IlFormula::And(vec![
                IlFormula::Eq(Term::succ(v("x")), v("#1")),
                IlFormula::Eq(Term::succ(v("#1")), v("y")),
            ]),
        );
        assert_eq!(g, expected);
        assert!(is_flat(&g));
    }

    #[test]
    fn flat_atoms_are_unchanged() {
        let f = IlFormula::Le(v("x"), v("y"));
        assert_eq!(flatten(&f), f);
        let g = IlFormula::Eq(Term::succ(v("x")), v("y"));
        assert_eq!(flatten(&g), g);
    }

    #[test]
    fn predicate_over_successor() {
        let f = IlFormula::pred("p", Term::succ(v("x")));
        let g = flatten(&f);
        assert_eq!(
            g,
            IlFormula::exists(
                "#1",
                IlFormula::And(vec![
                    IlFormula::Eq(Term::succ(v("x")), v("#1")),
                    IlFormula::pred("p", v("#1")),
                ])
            )
        );
        // equal under every structure with n <= 4
        for n in 1..=4 {
            for x in 0..n {
                for mask in 0..(1u32 << n) {
                    let s = Structure::new(n)
                        .with_position("x", x)
                        .with_set("p", (0..n).filter(|i| mask & (1 << i) != 0));
                    assert_eq!(eval_il(&f, &s).unwrap(), eval_il(&g, &s).unwrap());
                }
            }
        }
    }

    #[test]
    fn translation_of_successor_atom() {
        let f = IlFormula::Eq(Term::succ(v("x")), v("y"));
        let w = translate(&f).unwrap();
        let expected = Ws1sFormula::Or(vec![
            Ws1sFormula::And(vec![
                Ws1sFormula::Not(Box::new(Ws1sFormula::Max(v("x")))),
                Ws1sFormula::Eq(Term::succ(v("x")), v("y")),
            ]),
            Ws1sFormula::And(vec![Ws1sFormula::Max(v("x")), Ws1sFormula::Eq(v("y"), Term::Root)]),
        ]);
        assert_eq!(w, expected);
        for n in 1..=4 {
            for x in 0..n {
                for y in 0..n {
                    let s = Structure::new(n).with_position("x", x).with_position("y", y);
                    assert_eq!(eval_il(&f, &s).unwrap(), eval_ws1s(&w, &s).unwrap());
                }
            }
        }
    }

    #[test]
    fn unflattened_input_is_rejected() {
        let f = IlFormula::pred("p", Term::succ(v("x")));
        assert!(matches!(translate(&f), Err(TranslateError::NotFlat(_))));
    }

    #[test]
    fn le_translates_unchanged() {
        let f = IlFormula::Le(v("x"), v("y"));
        assert_eq!(translate(&f).unwrap(), Ws1sFormula::Le(v("x"), v("y")));
    }
}
