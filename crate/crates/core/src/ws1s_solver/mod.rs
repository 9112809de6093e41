//! Decision procedure for WS1S over finite words: formulas are compiled to
//! minimal deterministic automata over bit-vector letters.

mod automaton;
mod compile;
mod dump;
mod mtbdd;

use thiserror::Error;

use crate::logic::{eval_ws1s, EvalError, Structure, Ws1sFormula};

pub use automaton::{
    combine, complement, decode, intersect, isomorphic, minimize, project, shortest_word, union, Track,
    TrackAutomaton, VarKind,
};
pub use compile::Compiler;
pub use dump::{to_dot, to_text};

pub const DEFAULT_MAX_STATES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("resource limit exceeded: automaton with {states} states")]
    Resource { states: usize },
    #[error("internal error: witness {witness} does not satisfy the formula")]
    UnsoundWitness { witness: String },
    #[error("witness re-evaluation failed: {0}")]
    Eval(EvalError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Unsat,
    /// `rechecked` is false only when the reference evaluator's budget was
    /// too small to re-evaluate the witness.
    Sat { witness: Structure, rechecked: bool },
}

impl Verdict {
    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat)
    }

    pub fn witness(&self) -> Option<&Structure> {
        match self {
            Verdict::Sat { witness, .. } => Some(witness),
            Verdict::Unsat => None,
        }
    }
}

/// Compiles `f` with the default state cap.
pub fn compile(f: &Ws1sFormula) -> Result<TrackAutomaton, SolverError> {
    Compiler::new(DEFAULT_MAX_STATES).compile(f)
}

/// Decides whether `f` has a model with at least `min_universe` positions.
pub fn decide(f: &Ws1sFormula, min_universe: usize) -> Result<Verdict, SolverError> {
    decide_with(f, min_universe, &mut Compiler::new(DEFAULT_MAX_STATES))
}

pub fn decide_with(f: &Ws1sFormula, min_universe: usize, compiler: &mut Compiler) -> Result<Verdict, SolverError> {
    let a = compiler.compile(f)?;
    decide_automaton(f, &a, min_universe)
}

/// Searches `a` (the automaton of `f`) for a shortest witness and
/// re-evaluates it on `f` with the reference evaluator.
pub fn decide_automaton(f: &Ws1sFormula, a: &TrackAutomaton, min_universe: usize) -> Result<Verdict, SolverError> {
    let Some(word) = shortest_word(a, min_universe) else {
        return Ok(Verdict::Unsat);
    };
    let mut witness = decode(a.tracks(), &word);
    // free variables the automaton does not constrain still need a value
    let fv = f.free_vars();
    for x in fv.first_order {
        witness.positions.entry(x).or_insert(0);
    }
    for x in fv.second_order {
        witness.sets.entry(x).or_default();
    }
    let rechecked = match eval_ws1s(f, &witness) {
        Ok(true) => true,
        Ok(false) => {
            return Err(SolverError::UnsoundWitness {
                witness: witness.to_string(),
            })
        }
        Err(EvalError::Budget(_)) => false,
        Err(e) => return Err(SolverError::Eval(e)),
    };
    Ok(Verdict::Sat { witness, rechecked })
}

/// Language equality of the two formulas' automata.
pub fn equivalent(f: &Ws1sFormula, g: &Ws1sFormula) -> Result<bool, SolverError> {
    let mut c = Compiler::new(DEFAULT_MAX_STATES);
    let a = c.compile(f)?;
    let b = c.compile(g)?;
    Ok(combine(&a, &b, |x, y| x != y, c.max_states)?.is_empty())
}
