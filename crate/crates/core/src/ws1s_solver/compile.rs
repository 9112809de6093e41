use std::collections::HashMap;

use super::automaton::{complement, combine, intersect, project, Track, TrackAutomaton};
use super::SolverError;
use crate::logic::{Term, Ws1sFormula};

/// Formula-to-automaton compiler. Subformula results are cached by syntax.
pub struct Compiler {
    pub max_states: usize,
    fresh: usize,
    cache: HashMap<Ws1sFormula, TrackAutomaton>,
    /// Largest intermediate automaton seen (state count).
    pub peak_states: usize,
}

impl Compiler {
    pub fn new(max_states: usize) -> Compiler {
        Compiler {
            max_states,
            fresh: 0,
            cache: HashMap::new(),
            peak_states: 0,
        }
    }

    pub fn compile(&mut self, f: &Ws1sFormula) -> Result<TrackAutomaton, SolverError> {
        if let Some(a) = self.cache.get(f) {
            return Ok(a.clone());
        }
        let a = self.compile_uncached(f)?;
        self.peak_states = self.peak_states.max(a.state_count());
        if a.state_count() > self.max_states {
            return Err(SolverError::Resource {
                states: a.state_count(),
            });
        }
        self.cache.insert(f.clone(), a.clone());
        Ok(a)
    }

    fn compile_uncached(&mut self, f: &Ws1sFormula) -> Result<TrackAutomaton, SolverError> {
        use Ws1sFormula as F;
        let cap = self.max_states;
        match f {
            F::True => Ok(TrackAutomaton::universal(Vec::new())),
            F::False => Ok(TrackAutomaton::empty(Vec::new())),
            F::Eq(..) | F::Le(..) | F::Lt(..) | F::Max(_) | F::In(..) => self.atom(f),
            F::Not(g) => {
                let a = self.compile(g)?;
                complement(&a, cap)
            }
            F::And(gs) => {
                let mut parts = Vec::with_capacity(gs.len());
                for g in gs {
                    let a = self.compile(g)?;
                    if a.is_empty() {
                        // the conjunction is empty; keep the tracks for uniformity
                        return Ok(TrackAutomaton::empty(Vec::new()));
                    }
                    parts.push(a);
                }
                self.fold(parts, |x, y| x && y)
            }
            F::Or(gs) => {
                let mut parts = Vec::with_capacity(gs.len());
                for g in gs {
                    parts.push(self.compile(g)?);
                }
                self.fold(parts, |x, y| x || y)
            }
            F::Implies(a, b) => {
                let a = self.compile(a)?;
                let b = self.compile(b)?;
                combine(&a, &b, |x, y| !x || y, cap)
            }
            F::Iff(a, b) => {
                let a = self.compile(a)?;
                let b = self.compile(b)?;
                combine(&a, &b, |x, y| x == y, cap)
            }
            F::Exists1(..) | F::Exists2(..) => {
                let (vars, body) = quantifier_block(f);
                let a = self.compile(body)?;
                project(&a, &vars, cap)
            }
            F::Forall1(..) | F::Forall2(..) => {
                let (vars, body) = quantifier_block(f);
                let a = self.compile(body)?;
                let na = complement(&a, cap)?;
                let p = project(&na, &vars, cap)?;
                complement(&p, cap)
            }
        }
    }

    /// Balanced fold so that intermediate products stay small.
    fn fold(&mut self, mut parts: Vec<TrackAutomaton>, op: fn(bool, bool) -> bool) -> Result<TrackAutomaton, SolverError> {
        if parts.is_empty() {
            return Ok(if op(true, true) && !op(true, false) {
                TrackAutomaton::universal(Vec::new())
            } else {
                TrackAutomaton::empty(Vec::new())
            });
        }
        while parts.len() > 1 {
            let mut next = Vec::with_capacity(parts.len().div_ceil(2));
            let mut it = parts.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => {
                        let c = combine(&a, &b, op, self.max_states)?;
                        self.peak_states = self.peak_states.max(c.state_count());
                        next.push(c);
                    }
                    None => next.push(a),
                }
            }
            parts = next;
        }
        Ok(parts.pop().unwrap())
    }

    fn fresh(&mut self) -> String {
        self.fresh += 1;
        format!("#s{}", self.fresh)
    }

    /// Names a term by a variable, collecting definitions.
    fn name(&mut self, t: &Term, defs: &mut Vec<TrackAutomaton>, vars: &mut Vec<Track>) -> String {
        match t {
            Term::Var(v) => v.clone(),
            Term::Root => {
                let z = self.fresh();
                defs.push(root_atom(&z));
                vars.push(Track::first(&z));
                z
            }
            Term::Succ(inner) => {
                let x = self.name(inner, defs, vars);
                let z = self.fresh();
                defs.push(succ_atom(&x, &z));
                vars.push(Track::first(&z));
                z
            }
        }
    }

    fn atom(&mut self, f: &Ws1sFormula) -> Result<TrackAutomaton, SolverError> {
        use Ws1sFormula as F;
        // direct shapes first
        match f {
            F::Eq(Term::Succ(x), Term::Var(y)) | F::Eq(Term::Var(y), Term::Succ(x)) => {
                if let Term::Var(x) = &**x {
                    return Ok(succ_atom(x, y));
                }
            }
            F::Eq(Term::Var(x), Term::Root) | F::Eq(Term::Root, Term::Var(x)) => return Ok(root_atom(x)),
            F::Eq(Term::Root, Term::Root) => return Ok(TrackAutomaton::universal(Vec::new())),
            _ => {}
        }
        let mut defs = Vec::new();
        let mut vars = Vec::new();
        let base = match f {
            F::Eq(a, b) | F::Le(a, b) | F::Lt(a, b) => {
                let x = self.name(a, &mut defs, &mut vars);
                let y = self.name(b, &mut defs, &mut vars);
                match f {
                    F::Eq(..) => eq_atom(&x, &y),
                    F::Le(..) => le_atom(&x, &y, false),
                    _ => le_atom(&x, &y, true),
                }
            }
            F::Max(t) => {
                let x = self.name(t, &mut defs, &mut vars);
                max_atom(&x)
            }
            F::In(set, t) => {
                let x = self.name(t, &mut defs, &mut vars);
                in_atom(set, &x)
            }
            _ => unreachable!(),
        };
        let mut acc = base;
        for d in defs {
            acc = intersect(&acc, &d, self.max_states)?;
        }
        project(&acc, &vars, self.max_states)
    }
}

fn quantifier_block(f: &Ws1sFormula) -> (Vec<Track>, &Ws1sFormula) {
    use Ws1sFormula as F;
    let mut vars = Vec::new();
    let mut cur = f;
    loop {
        let next = match (f, cur) {
            (F::Exists1(..), F::Exists1(v, g)) | (F::Forall1(..), F::Forall1(v, g)) => {
                vars.push(Track::first(v));
                g
            }
            (F::Exists2(..), F::Exists2(v, g)) | (F::Forall2(..), F::Forall2(v, g)) => {
                vars.push(Track::second(v));
                g
            }
            _ => return (vars, cur),
        };
        cur = next;
    }
}

const DEAD: usize = usize::MAX;

/// Builds an atom automaton from a partial transition table; missing
/// entries go to a dead state.
fn table(tracks: Vec<Track>, accepting: &[usize], nstates: usize, delta: impl Fn(usize, u32) -> usize) -> TrackAutomaton {
    let dead = nstates;
    let mut acc = vec![false; nstates + 1];
    for &q in accepting {
        acc[q] = true;
    }
    TrackAutomaton::explicit(tracks, acc, move |q, l| {
        if q == dead {
            return dead;
        }
        match delta(q, l) {
            DEAD => dead,
            t => t,
        }
    })
}

fn single_var(x: &str) -> Vec<Track> {
    vec![Track::first(x)]
}

/// `x = y`, or the well-formedness of `x` alone when both are the same variable.
fn eq_atom(x: &str, y: &str) -> TrackAutomaton {
    if x == y {
        return TrackAutomaton::well_formed(&single_var(x));
    }
    // bit 0: x, bit 1: y
    table(vec![Track::first(x), Track::first(y)], &[1], 2, |q, l| match (q, l) {
        (0, 0) => 0,
        (0, 3) => 1,
        (1, 0) => 1,
        _ => DEAD,
    })
}

fn le_atom(x: &str, y: &str, strict: bool) -> TrackAutomaton {
    if x == y {
        return if strict {
            TrackAutomaton::empty(Vec::new())
        } else {
            TrackAutomaton::well_formed(&single_var(x))
        };
    }
    // 0: neither seen, 1: x seen, 2: both seen
    table(vec![Track::first(x), Track::first(y)], &[2], 3, move |q, l| match (q, l) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 3) if !strict => 2,
        (1, 0) => 1,
        (1, 2) => 2,
        (2, 0) => 2,
        _ => DEAD,
    })
}

/// `succ(x) = y` with the successor of the last position being itself.
fn succ_atom(x: &str, y: &str) -> TrackAutomaton {
    if x == y {
        return max_atom(x);
    }
    // 0: nothing seen, 1: x at previous position, 2: y right after x, 3: x = y here
    table(vec![Track::first(x), Track::first(y)], &[2, 3], 4, |q, l| match (q, l) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 3) => 3,
        (1, 2) => 2,
        (2, 0) => 2,
        _ => DEAD,
    })
}

fn max_atom(x: &str) -> TrackAutomaton {
    // 0: not seen, 1: seen at the current (last) position, 2: seen earlier
    table(single_var(x), &[1], 3, |q, l| match (q, l) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 0) | (2, 0) => 2,
        _ => DEAD,
    })
}

fn root_atom(x: &str) -> TrackAutomaton {
    table(single_var(x), &[1], 2, |q, l| match (q, l) {
        (0, 1) => 1,
        (1, 0) => 1,
        _ => DEAD,
    })
}

fn in_atom(set: &str, x: &str) -> TrackAutomaton {
    // bit 0: x, bit 1: X
    table(vec![Track::first(x), Track::second(set)], &[1], 2, |q, l| match (q, l) {
        (0, 0) | (0, 2) => 0,
        (0, 3) => 1,
        (1, 0) | (1, 2) => 1,
        _ => DEAD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{eval_ws1s, Structure};

    fn v(s: &str) -> Term {
        Term::var(s)
    }

    fn all_structures(n: usize, fo: &[&str], so: &[&str]) -> Vec<Structure> {
        let mut out = vec![Structure::new(n)];
        for x in fo {
            out = out
                .into_iter()
                .flat_map(|s| (0..n).map(move |p| s.clone().with_position(*x, p)))
                .collect();
        }
        for x in so {
            out = out
                .into_iter()
                .flat_map(|s| (0..1u32 << n).map(move |m| s.clone().with_set(*x, (0..n).filter(|u| m >> u & 1 == 1))))
                .collect();
        }
        out
    }

    fn agrees(f: &Ws1sFormula, fo: &[&str], so: &[&str]) {
        let a = Compiler::new(100_000).compile(f).unwrap();
        assert!(a.is_deterministic_complete());
        for n in 1..=4 {
            for s in all_structures(n, fo, so) {
                assert_eq!(a.accepts(&s), eval_ws1s(f, &s).unwrap(), "{f} on {s}");
            }
        }
    }

    #[test]
    fn atoms_agree_with_evaluator() {
        let atoms = [
            Ws1sFormula::Eq(v("x"), v("y")),
            Ws1sFormula::Eq(v("x"), v("x")),
            Ws1sFormula::Le(v("x"), v("y")),
            Ws1sFormula::Lt(v("x"), v("y")),
            Ws1sFormula::Lt(v("x"), v("x")),
            Ws1sFormula::Eq(Term::succ(v("x")), v("y")),
            Ws1sFormula::Eq(Term::succ(v("x")), v("x")),
            Ws1sFormula::Eq(Term::succ(Term::succ(v("x"))), v("y")),
            Ws1sFormula::Le(Term::succ(v("x")), v("y")),
            Ws1sFormula::Eq(v("x"), Term::Root),
            Ws1sFormula::Eq(Term::Root, Term::succ(v("x"))),
            Ws1sFormula::Max(v("x")),
            Ws1sFormula::Max(Term::succ(v("x"))),
            Ws1sFormula::member("X", v("x")),
            Ws1sFormula::member("X", Term::succ(v("y"))),
        ];
        for f in &atoms {
            agrees(f, &["x", "y"], &["X"]);
        }
    }

    #[test]
    fn connectives_and_quantifiers() {
        let f = Ws1sFormula::forall(
            "i",
            Ws1sFormula::implies(
                Ws1sFormula::member("X", v("i")),
                Ws1sFormula::or([
                    Ws1sFormula::member("Y", Term::succ(v("i"))),
                    Ws1sFormula::Max(v("i")),
                ]),
            ),
        );
        agrees(&f, &[], &["X", "Y"]);
        let g = Ws1sFormula::exists2(
            "Z",
            Ws1sFormula::iff(Ws1sFormula::member("Z", v("x")), Ws1sFormula::not(Ws1sFormula::member("X", v("y")))),
        );
        agrees(&g, &["x", "y"], &["X"]);
        let h = Ws1sFormula::or([Ws1sFormula::member("X", v("x")), Ws1sFormula::Lt(v("y"), v("y"))]);
        agrees(&h, &["x", "y"], &["X"]);
    }

    #[test]
    fn false_accepts_nothing_and_exists_max_accepts_everything() {
        let mut c = Compiler::new(1000);
        assert!(c.compile(&Ws1sFormula::False).unwrap().is_empty());
        let a = c.compile(&Ws1sFormula::exists("x", Ws1sFormula::Max(v("x")))).unwrap();
        assert!(super::super::automaton::isomorphic(&a, &TrackAutomaton::universal(Vec::new())));
    }
}
