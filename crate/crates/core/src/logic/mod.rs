//! Interaction logic (IL, one successor) and weak monadic second-order logic
//! over finite words (WS1S), with evaluators over finite structures and the
//! flattening / translation passes between them.

mod eval;
mod flatten;
pub mod ground;
mod models;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use eval::{eval_il, eval_ws1s, EvalError};
pub use flatten::{flatten, is_flat, translate, TranslateError};
pub use models::{clause_formula, minimal_models, MinimalModel};

/// Prefix reserved for generated variables; never produced by the DSL lexer.
pub const FRESH_PREFIX: char = '#';

/// Position term: a variable, the root constant (WS1S only) or a successor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Root,
    Succ(Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn succ(t: Term) -> Term {
        Term::Succ(Box::new(t))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn succ_depth(&self) -> usize {
        match self {
            Term::Succ(t) => 1 + t.succ_depth(),
            _ => 0,
        }
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Term::Var(v) => {
                out.insert(v);
            }
            Term::Root => {}
            Term::Succ(t) => t.collect_vars(out),
        }
    }

    /// Replaces every occurrence of variable `from` by `to`.
    pub fn substitute(&self, from: &str, to: &Term) -> Term {
        match self {
            Term::Var(v) if v == from => to.clone(),
            Term::Var(_) | Term::Root => self.clone(),
            Term::Succ(t) => Term::succ(t.substitute(from, to)),
        }
    }

    fn mentions(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::Root => false,
            Term::Succ(t) => t.mentions(name),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Root => write!(f, "root"),
            Term::Succ(t) => write!(f, "succ({t})"),
        }
    }
}

/// Formula of the interaction logic. `Eq`, `Lt`, `Zero`, `Max` and the
/// connectives beyond `And`/`Not`/`Exists` are derived forms kept as
/// variants so that printing and evaluation stay direct.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IlFormula {
    True,
    False,
    Le(Term, Term),
    Lt(Term, Term),
    Eq(Term, Term),
    Zero(Term),
    Max(Term),
    Pred(String, Term),
    Not(Box<IlFormula>),
    And(Vec<IlFormula>),
    Or(Vec<IlFormula>),
    Implies(Box<IlFormula>, Box<IlFormula>),
    Iff(Box<IlFormula>, Box<IlFormula>),
    Exists(String, Box<IlFormula>),
    Forall(String, Box<IlFormula>),
}

/// Formula of WS1S over finite words. Set variables and port predicates
/// share the `In` atom; first-order and second-order variables occupy
/// separate namespaces.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ws1sFormula {
    True,
    False,
    Eq(Term, Term),
    Le(Term, Term),
    Lt(Term, Term),
    Max(Term),
    In(String, Term),
    Not(Box<Ws1sFormula>),
    And(Vec<Ws1sFormula>),
    Or(Vec<Ws1sFormula>),
    Implies(Box<Ws1sFormula>, Box<Ws1sFormula>),
    Iff(Box<Ws1sFormula>, Box<Ws1sFormula>),
    Exists1(String, Box<Ws1sFormula>),
    Forall1(String, Box<Ws1sFormula>),
    Exists2(String, Box<Ws1sFormula>),
    Forall2(String, Box<Ws1sFormula>),
}

macro_rules! connective_helpers {
    ($ty:ident, $ex:ident, $all:ident) => {
        impl $ty {
            pub fn not(f: $ty) -> $ty {
                match f {
                    $ty::True => $ty::False,
                    $ty::False => $ty::True,
                    $ty::Not(inner) => *inner,
                    other => $ty::Not(Box::new(other)),
                }
            }

            /// Conjunction with unit/zero simplification and flattening of nested `And`.
            pub fn and(parts: impl IntoIterator<Item = $ty>) -> $ty {
                let mut out = Vec::new();
                for p in parts {
                    match p {
                        $ty::True => {}
                        $ty::False => return $ty::False,
                        $ty::And(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => $ty::True,
                    1 => out.pop().unwrap(),
                    _ => $ty::And(out),
                }
            }

            pub fn or(parts: impl IntoIterator<Item = $ty>) -> $ty {
                let mut out = Vec::new();
                for p in parts {
                    match p {
                        $ty::False => {}
                        $ty::True => return $ty::True,
                        $ty::Or(inner) => out.extend(inner),
                        other => out.push(other),
                    }
                }
                match out.len() {
                    0 => $ty::False,
                    1 => out.pop().unwrap(),
                    _ => $ty::Or(out),
                }
            }

            pub fn implies(a: $ty, b: $ty) -> $ty {
                match (&a, &b) {
                    ($ty::True, _) => b,
                    ($ty::False, _) | (_, $ty::True) => $ty::True,
                    (_, $ty::False) => $ty::not(a),
                    _ => $ty::Implies(Box::new(a), Box::new(b)),
                }
            }

            pub fn iff(a: $ty, b: $ty) -> $ty {
                $ty::Iff(Box::new(a), Box::new(b))
            }

            pub fn exists(var: impl Into<String>, body: $ty) -> $ty {
                $ty::$ex(var.into(), Box::new(body))
            }

            pub fn forall(var: impl Into<String>, body: $ty) -> $ty {
                $ty::$all(var.into(), Box::new(body))
            }

            pub fn exists_many<S: Into<String>>(vars: impl IntoIterator<Item = S>, body: $ty) -> $ty {
                let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
                vars.into_iter().rev().fold(body, |acc, v| $ty::exists(v, acc))
            }

            pub fn forall_many<S: Into<String>>(vars: impl IntoIterator<Item = S>, body: $ty) -> $ty {
                let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
                vars.into_iter().rev().fold(body, |acc, v| $ty::forall(v, acc))
            }
        }
    };
}

connective_helpers!(IlFormula, Exists, Forall);
connective_helpers!(Ws1sFormula, Exists1, Forall1);

impl IlFormula {
    pub fn pred(port: impl Into<String>, t: Term) -> IlFormula {
        IlFormula::Pred(port.into(), t)
    }

    /// Free first-order variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut Vec::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add_terms = |ts: &[&Term], bound: &Vec<String>| {
            let mut vs = BTreeSet::new();
            for t in ts {
                t.collect_vars(&mut vs);
            }
            for v in vs {
                if !bound.iter().any(|b| b == v) {
                    out.insert(v.to_string());
                }
            }
        };
        match self {
            IlFormula::True | IlFormula::False => {}
            IlFormula::Le(a, b) | IlFormula::Lt(a, b) | IlFormula::Eq(a, b) => add_terms(&[a, b], bound),
            IlFormula::Zero(t) | IlFormula::Max(t) | IlFormula::Pred(_, t) => add_terms(&[t], bound),
            IlFormula::Not(f) => f.free_vars_into(bound, out),
            IlFormula::And(fs) | IlFormula::Or(fs) => {
                for f in fs {
                    f.free_vars_into(bound, out);
                }
            }
            IlFormula::Implies(a, b) | IlFormula::Iff(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            IlFormula::Exists(v, f) | IlFormula::Forall(v, f) => {
                bound.push(v.clone());
                f.free_vars_into(bound, out);
                bound.pop();
            }
        }
    }

    /// Predicate symbols occurring in the formula.
    pub fn predicates(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let IlFormula::Pred(p, _) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    fn visit(&self, cb: &mut impl FnMut(&IlFormula)) {
        cb(self);
        match self {
            IlFormula::Not(f) | IlFormula::Exists(_, f) | IlFormula::Forall(_, f) => f.visit(cb),
            IlFormula::And(fs) | IlFormula::Or(fs) => fs.iter().for_each(|f| f.visit(cb)),
            IlFormula::Implies(a, b) | IlFormula::Iff(a, b) => {
                a.visit(cb);
                b.visit(cb);
            }
            _ => {}
        }
    }

    /// Capture-avoiding substitution of a term for a free variable. Bound
    /// variables that would capture a variable of `to` are renamed.
    pub fn substitute(&self, from: &str, to: &Term) -> IlFormula {
        let mut counter = max_fresh_index_il(self).max(fresh_index_of_term(to)) + 1;
        self.subst_inner(from, to, &mut counter)
    }

    fn subst_inner(&self, from: &str, to: &Term, counter: &mut usize) -> IlFormula {
        use IlFormula as F;
        let s = |t: &Term| t.substitute(from, to);
        match self {
            F::True | F::False => self.clone(),
            F::Le(a, b) => F::Le(s(a), s(b)),
            F::Lt(a, b) => F::Lt(s(a), s(b)),
            F::Eq(a, b) => F::Eq(s(a), s(b)),
            F::Zero(t) => F::Zero(s(t)),
            F::Max(t) => F::Max(s(t)),
            F::Pred(p, t) => F::Pred(p.clone(), s(t)),
            F::Not(f) => F::Not(Box::new(f.subst_inner(from, to, counter))),
            F::And(fs) => F::And(fs.iter().map(|f| f.subst_inner(from, to, counter)).collect()),
            F::Or(fs) => F::Or(fs.iter().map(|f| f.subst_inner(from, to, counter)).collect()),
            F::Implies(a, b) => F::Implies(
                Box::new(a.subst_inner(from, to, counter)),
                Box::new(b.subst_inner(from, to, counter)),
            ),
            F::Iff(a, b) => F::Iff(
                Box::new(a.subst_inner(from, to, counter)),
                Box::new(b.subst_inner(from, to, counter)),
            ),
            F::Exists(v, f) | F::Forall(v, f) => {
                let is_exists = matches!(self, F::Exists(..));
                let rebuild = |v: String, body: IlFormula| {
                    if is_exists {
                        F::Exists(v, Box::new(body))
                    } else {
                        F::Forall(v, Box::new(body))
                    }
                };
                if v == from {
                    return self.clone();
                }
                if to.mentions(v) {
                    let fresh = format!("{FRESH_PREFIX}{counter}");
                    *counter += 1;
                    let renamed = f.subst_inner(v, &Term::Var(fresh.clone()), counter);
                    rebuild(fresh, renamed.subst_inner(from, to, counter))
                } else {
                    rebuild(v.clone(), f.subst_inner(from, to, counter))
                }
            }
        }
    }

    /// True when the formula is a conjunction of (possibly negated) atoms
    /// without predicates; the shape required of clause guards.
    pub fn is_literal_conjunction(&self) -> bool {
        fn literal(f: &IlFormula) -> bool {
            match f {
                IlFormula::True
                | IlFormula::False
                | IlFormula::Le(..)
                | IlFormula::Lt(..)
                | IlFormula::Eq(..)
                | IlFormula::Zero(_)
                | IlFormula::Max(_) => true,
                IlFormula::Not(inner) => literal(inner),
                _ => false,
            }
        }
        match self {
            IlFormula::And(fs) => fs.iter().all(literal),
            other => literal(other),
        }
    }
}

impl Ws1sFormula {
    pub fn member(set: impl Into<String>, t: Term) -> Ws1sFormula {
        Ws1sFormula::In(set.into(), t)
    }

    pub fn exists2(var: impl Into<String>, body: Ws1sFormula) -> Ws1sFormula {
        Ws1sFormula::Exists2(var.into(), Box::new(body))
    }

    pub fn forall2(var: impl Into<String>, body: Ws1sFormula) -> Ws1sFormula {
        Ws1sFormula::Forall2(var.into(), Box::new(body))
    }

    pub fn forall2_many<S: Into<String>>(vars: impl IntoIterator<Item = S>, body: Ws1sFormula) -> Ws1sFormula {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        vars.into_iter().rev().fold(body, |acc, v| Ws1sFormula::forall2(v, acc))
    }

    /// Free variables, split into first-order and second-order.
    pub fn free_vars(&self) -> FreeVars {
        let mut fv = FreeVars::default();
        self.free_vars_into(&mut Vec::new(), &mut Vec::new(), &mut fv);
        fv
    }

    fn free_vars_into(&self, b1: &mut Vec<String>, b2: &mut Vec<String>, out: &mut FreeVars) {
        let add = |ts: &[&Term], b1: &Vec<String>, out: &mut FreeVars| {
            let mut vs = BTreeSet::new();
            for t in ts {
                t.collect_vars(&mut vs);
            }
            for v in vs {
                if !b1.iter().any(|b| b == v) {
                    out.first_order.insert(v.to_string());
                }
            }
        };
        use Ws1sFormula as F;
        match self {
            F::True | F::False => {}
            F::Eq(a, b) | F::Le(a, b) | F::Lt(a, b) => add(&[a, b], b1, out),
            F::Max(t) => add(&[t], b1, out),
            F::In(x, t) => {
                add(&[t], b1, out);
                if !b2.iter().any(|b| b == x) {
                    out.second_order.insert(x.clone());
                }
            }
            F::Not(f) => f.free_vars_into(b1, b2, out),
            F::And(fs) | F::Or(fs) => fs.iter().for_each(|f| f.free_vars_into(b1, b2, out)),
            F::Implies(a, b) | F::Iff(a, b) => {
                a.free_vars_into(b1, b2, out);
                b.free_vars_into(b1, b2, out);
            }
            F::Exists1(v, f) | F::Forall1(v, f) => {
                b1.push(v.clone());
                f.free_vars_into(b1, b2, out);
                b1.pop();
            }
            F::Exists2(v, f) | F::Forall2(v, f) => {
                b2.push(v.clone());
                f.free_vars_into(b1, b2, out);
                b2.pop();
            }
        }
    }

    /// Number of AST nodes; used for report statistics.
    pub fn size(&self) -> usize {
        use Ws1sFormula as F;
        1 + match self {
            F::Not(f) | F::Exists1(_, f) | F::Forall1(_, f) | F::Exists2(_, f) | F::Forall2(_, f) => f.size(),
            F::And(fs) | F::Or(fs) => fs.iter().map(Ws1sFormula::size).sum(),
            F::Implies(a, b) | F::Iff(a, b) => a.size() + b.size(),
            _ => 0,
        }
    }

    /// Maximum nesting of quantifier alternations is not tracked; this is
    /// the count of quantifier nodes.
    pub fn quantifier_count(&self) -> usize {
        use Ws1sFormula as F;
        match self {
            F::Exists1(_, f) | F::Forall1(_, f) | F::Exists2(_, f) | F::Forall2(_, f) => 1 + f.quantifier_count(),
            F::Not(f) => f.quantifier_count(),
            F::And(fs) | F::Or(fs) => fs.iter().map(Ws1sFormula::quantifier_count).sum(),
            F::Implies(a, b) | F::Iff(a, b) => a.quantifier_count() + b.quantifier_count(),
            _ => 0,
        }
    }

    /// Renames free occurrences of the second-order variable `from`.
    pub fn rename_set(&self, from: &str, to: &str) -> Ws1sFormula {
        use Ws1sFormula as F;
        let r = |f: &Ws1sFormula| Box::new(f.rename_set(from, to));
        match self {
            F::In(x, t) if x == from => F::In(to.to_string(), t.clone()),
            F::Not(f) => F::Not(r(f)),
            F::And(fs) => F::And(fs.iter().map(|f| f.rename_set(from, to)).collect()),
            F::Or(fs) => F::Or(fs.iter().map(|f| f.rename_set(from, to)).collect()),
            F::Implies(a, b) => F::Implies(r(a), r(b)),
            F::Iff(a, b) => F::Iff(r(a), r(b)),
            F::Exists1(v, f) => F::Exists1(v.clone(), r(f)),
            F::Forall1(v, f) => F::Forall1(v.clone(), r(f)),
            F::Exists2(v, _) | F::Forall2(v, _) if v == from => self.clone(),
            F::Exists2(v, f) => F::Exists2(v.clone(), r(f)),
            F::Forall2(v, f) => F::Forall2(v.clone(), r(f)),
            _ => self.clone(),
        }
    }
}

/// Free variables of a WS1S formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub first_order: BTreeSet<String>,
    pub second_order: BTreeSet<String>,
}

impl FreeVars {
    pub fn is_empty(&self) -> bool {
        self.first_order.is_empty() && self.second_order.is_empty()
    }
}

fn fresh_index_of_term(t: &Term) -> usize {
    match t {
        Term::Var(v) => fresh_index(v),
        Term::Root => 0,
        Term::Succ(t) => fresh_index_of_term(t),
    }
}

fn fresh_index(name: &str) -> usize {
    name.strip_prefix(FRESH_PREFIX)
        .and_then(|rest| rest.parse::<usize>().ok())
        .unwrap_or(0)
}

pub(crate) fn max_fresh_index_il(f: &IlFormula) -> usize {
    let mut max = 0;
    f.visit(&mut |g| {
        let mut upd = |t: &Term| max = max.max(fresh_index_of_term(t));
        match g {
            IlFormula::Le(a, b) | IlFormula::Lt(a, b) | IlFormula::Eq(a, b) => {
                upd(a);
                upd(b);
            }
            IlFormula::Zero(t) | IlFormula::Max(t) | IlFormula::Pred(_, t) => upd(t),
            IlFormula::Exists(v, _) | IlFormula::Forall(v, _) => max = max.max(fresh_index(v)),
            _ => {}
        }
    });
    max
}

/// A finite structure: universe `{0..size-1}`, positions for first-order
/// variables and node sets for predicates / set variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Structure {
    pub size: usize,
    pub positions: BTreeMap<String, usize>,
    pub sets: BTreeMap<String, BTreeSet<usize>>,
}

impl Structure {
    pub fn new(size: usize) -> Structure {
        Structure {
            size,
            ..Structure::default()
        }
    }

    pub fn with_position(mut self, var: impl Into<String>, pos: usize) -> Structure {
        self.positions.insert(var.into(), pos);
        self
    }

    pub fn with_set(mut self, var: impl Into<String>, nodes: impl IntoIterator<Item = usize>) -> Structure {
        self.sets.insert(var.into(), nodes.into_iter().collect());
        self
    }

    /// Checks the structure invariants (positions and sets inside the universe).
    pub fn is_well_formed(&self) -> bool {
        self.size >= 1
            && self.positions.values().all(|&p| p < self.size)
            && self.sets.values().all(|s| s.iter().all(|&p| p < self.size))
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}", self.size)?;
        for (v, p) in &self.positions {
            write!(f, " {v}={p}")?;
        }
        for (x, s) in &self.sets {
            let items: Vec<String> = s.iter().map(usize::to_string).collect();
            write!(f, " {x}={{{}}}", items.join(","))?;
        }
        Ok(())
    }
}

// Pretty-printing: fully parenthesized binary structure, deterministic.

impl fmt::Display for IlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use IlFormula as F;
        match self {
            F::True => write!(f, "true"),
            F::False => write!(f, "false"),
            F::Le(a, b) => write!(f, "{a} <= {b}"),
            F::Lt(a, b) => write!(f, "{a} < {b}"),
            F::Eq(a, b) => write!(f, "{a} = {b}"),
            F::Zero(t) => write!(f, "zero({t})"),
            F::Max(t) => write!(f, "max({t})"),
            F::Pred(p, t) => write!(f, "{p}({t})"),
            F::Not(g) => write!(f, "!({g})"),
            F::And(gs) => write_joined(f, gs, " & "),
            F::Or(gs) => write_joined(f, gs, " | "),
            F::Implies(a, b) => write!(f, "(({a}) -> ({b}))"),
            F::Iff(a, b) => write!(f, "(({a}) <-> ({b}))"),
            F::Exists(v, g) => write!(f, "(exists {v} . {g})"),
            F::Forall(v, g) => write!(f, "(forall {v} . {g})"),
        }
    }
}

impl fmt::Display for Ws1sFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Ws1sFormula as F;
        match self {
            F::True => write!(f, "true"),
            F::False => write!(f, "false"),
            F::Eq(a, b) => write!(f, "{a} = {b}"),
            F::Le(a, b) => write!(f, "{a} <= {b}"),
            F::Lt(a, b) => write!(f, "{a} < {b}"),
            F::Max(t) => write!(f, "max({t})"),
            F::In(x, t) => write!(f, "{x}({t})"),
            F::Not(g) => write!(f, "!({g})"),
            F::And(gs) => write_joined(f, gs, " & "),
            F::Or(gs) => write_joined(f, gs, " | "),
            F::Implies(a, b) => write!(f, "(({a}) -> ({b}))"),
            F::Iff(a, b) => write!(f, "(({a}) <-> ({b}))"),
            F::Exists1(v, g) => write!(f, "(ex1 {v} . {g})"),
            F::Forall1(v, g) => write!(f, "(all1 {v} . {g})"),
            F::Exists2(v, g) => write!(f, "(ex2 {v} . {g})"),
            F::Forall2(v, g) => write!(f, "(all2 {v} . {g})"),
        }
    }
}

fn write_joined<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T], sep: &str) -> fmt::Result {
    write!(f, "(")?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            write!(f, "{sep}")?;
        }
        write!(f, "({item})")?;
    }
    write!(f, ")")
}
