//! Grounding of WS1S formulas without second-order quantifiers into
//! propositional circuits at a fixed universe size. First-order quantifiers
//! are unrolled; free set variables become circuit inputs (one per node).
//! The circuit evaluates 64 assignments at once.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use super::{Term, Ws1sFormula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error("second-order quantifier over `{0}` cannot be grounded")]
    SecondOrder(String),
    #[error("variable `{0}` is neither bound nor assigned")]
    Unassigned(String),
    #[error("set `{0}` is neither an input nor fixed")]
    UnassignedSet(String),
}

/// Node reference inside a [`Circuit`].
pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    False,
    True,
    Input(u32),
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
}

const FALSE: NodeId = 0;
const TRUE: NodeId = 1;

#[derive(Clone, Debug)]
pub struct Circuit {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
}

impl Default for Circuit {
    fn default() -> Self {
        Circuit::new()
    }
}

impl Circuit {
    pub fn new() -> Circuit {
        let mut c = Circuit {
            nodes: Vec::new(),
            index: HashMap::new(),
        };
        c.intern(Node::False);
        c.intern(Node::True);
        c
    }

    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(n);
        self.index.insert(n, id);
        id
    }

    pub fn constant(&mut self, b: bool) -> NodeId {
        if b {
            TRUE
        } else {
            FALSE
        }
    }

    pub fn input(&mut self, i: u32) -> NodeId {
        self.intern(Node::Input(i))
    }

    pub fn not(&mut self, a: NodeId) -> NodeId {
        match self.nodes[a as usize] {
            Node::False => TRUE,
            Node::True => FALSE,
            Node::Not(inner) => inner,
            _ => self.intern(Node::Not(a)),
        }
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (a, b) {
            (FALSE, _) | (_, FALSE) => FALSE,
            (TRUE, x) | (x, TRUE) => x,
            _ if a == b => a,
            _ => self.intern(Node::And(a.min(b), a.max(b))),
        }
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (a, b) {
            (TRUE, _) | (_, TRUE) => TRUE,
            (FALSE, x) | (x, FALSE) => x,
            _ if a == b => a,
            _ => self.intern(Node::Or(a.min(b), a.max(b))),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 2
    }

    /// Nodes reachable from `root`, children before parents.
    pub fn schedule(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n as usize], true) {
                continue;
            }
            match self.nodes[n as usize] {
                Node::Not(a) => stack.push(a),
                Node::And(a, b) | Node::Or(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                _ => {}
            }
        }
        // ids are created bottom-up, so id order is a topological order
        (0..self.nodes.len() as NodeId).filter(|&i| seen[i as usize]).collect()
    }

    /// Evaluates 64 assignments in parallel; bit `k` of `inputs[i]` is the
    /// value of input `i` in assignment `k`.
    pub fn eval64(&self, schedule: &[NodeId], inputs: &[u64], scratch: &mut Vec<u64>) -> u64 {
        scratch.resize(self.nodes.len(), 0);
        let mut last = 0;
        for &id in schedule {
            let v = match self.nodes[id as usize] {
                Node::False => 0,
                Node::True => !0,
                Node::Input(i) => inputs[i as usize],
                Node::Not(a) => !scratch[a as usize],
                Node::And(a, b) => scratch[a as usize] & scratch[b as usize],
                Node::Or(a, b) => scratch[a as usize] | scratch[b as usize],
            };
            scratch[id as usize] = v;
            last = v;
        }
        last
    }

    pub fn eval(&self, root: NodeId, inputs: &[bool]) -> bool {
        let words: Vec<u64> = inputs.iter().map(|&b| if b { !0 } else { 0 }).collect();
        let sched = self.schedule(root);
        self.eval64(&sched, &words, &mut Vec::new()) & 1 == 1
    }
}

/// Describes how a formula's free symbols are interpreted during grounding.
#[derive(Clone, Debug, Default)]
pub struct Grounding {
    pub size: usize,
    pub positions: BTreeMap<String, usize>,
    pub fixed_sets: BTreeMap<String, BTreeSet<usize>>,
    /// Set variable -> index of its input for node 0; node `u` uses `base + u`.
    pub input_sets: BTreeMap<String, u32>,
}

impl Grounding {
    pub fn new(size: usize) -> Grounding {
        Grounding {
            size,
            ..Grounding::default()
        }
    }

    /// Registers the sets as consecutive input blocks of `size` inputs each.
    pub fn with_inputs<S: Into<String>>(mut self, sets: impl IntoIterator<Item = S>) -> Grounding {
        for s in sets {
            let base = self.input_sets.len() as u32 * self.size as u32;
            self.input_sets.insert(s.into(), base);
        }
        self
    }

    pub fn input_count(&self) -> usize {
        self.input_sets.len() * self.size
    }
}

/// Grounds `f` under the given interpretation (WS1S semantics: the successor
/// of the last node is itself, root is node 0).
pub fn ground(f: &Ws1sFormula, g: &Grounding, c: &mut Circuit) -> Result<NodeId, GroundError> {
    let mut env = Vec::new();
    go(f, g, &mut env, c)
}

fn term(t: &Term, g: &Grounding, env: &[(String, usize)]) -> Result<usize, GroundError> {
    match t {
        Term::Var(v) => env
            .iter()
            .rev()
            .find(|(name, _)| name == v)
            .map(|(_, p)| *p)
            .or_else(|| g.positions.get(v).copied())
            .ok_or_else(|| GroundError::Unassigned(v.clone())),
        Term::Root => Ok(0),
        Term::Succ(inner) => Ok((term(inner, g, env)? + 1).min(g.size - 1)),
    }
}

fn go(f: &Ws1sFormula, g: &Grounding, env: &mut Vec<(String, usize)>, c: &mut Circuit) -> Result<NodeId, GroundError> {
    use Ws1sFormula as F;
    Ok(match f {
        F::True => TRUE,
        F::False => FALSE,
        F::Eq(a, b) => c.constant(term(a, g, env)? == term(b, g, env)?),
        F::Le(a, b) => c.constant(term(a, g, env)? <= term(b, g, env)?),
        F::Lt(a, b) => c.constant(term(a, g, env)? < term(b, g, env)?),
        F::Max(t) => c.constant(term(t, g, env)? == g.size - 1),
        F::In(x, t) => {
            let u = term(t, g, env)?;
            if let Some(&base) = g.input_sets.get(x) {
                c.input(base + u as u32)
            } else if let Some(s) = g.fixed_sets.get(x) {
                c.constant(s.contains(&u))
            } else {
                return Err(GroundError::UnassignedSet(x.clone()));
            }
        }
        F::Not(a) => {
            let a = go(a, g, env, c)?;
            c.not(a)
        }
        F::And(fs) => {
            let mut acc = TRUE;
            for h in fs {
                let x = go(h, g, env, c)?;
                acc = c.and(acc, x);
                if acc == FALSE {
                    break;
                }
            }
            acc
        }
        F::Or(fs) => {
            let mut acc = FALSE;
            for h in fs {
                let x = go(h, g, env, c)?;
                acc = c.or(acc, x);
                if acc == TRUE {
                    break;
                }
            }
            acc
        }
        F::Implies(a, b) => {
            let a = go(a, g, env, c)?;
            let na = c.not(a);
            if na == TRUE {
                return Ok(TRUE);
            }
            let b = go(b, g, env, c)?;
            c.or(na, b)
        }
        F::Iff(a, b) => {
            let a = go(a, g, env, c)?;
            let b = go(b, g, env, c)?;
            let both = c.and(a, b);
            let (na, nb) = (c.not(a), c.not(b));
            let neither = c.and(na, nb);
            c.or(both, neither)
        }
        F::Exists1(v, body) | F::Forall1(v, body) => {
            let exists = matches!(f, F::Exists1(..));
            let mut acc = if exists { FALSE } else { TRUE };
            for u in 0..g.size {
                env.push((v.clone(), u));
                let x = go(body, g, env, c);
                env.pop();
                let x = x?;
                acc = if exists { c.or(acc, x) } else { c.and(acc, x) };
                if acc == if exists { TRUE } else { FALSE } {
                    break;
                }
            }
            acc
        }
        F::Exists2(x, _) | F::Forall2(x, _) => return Err(GroundError::SecondOrder(x.clone())),
    })
}

/// Lane masks for the low six input bits of a 64-wide batch.
pub const LANE_MASKS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Calls `visit(mask, result)` for every assignment `mask < 2^inputs` of the
/// circuit inputs, evaluating 64 assignments per pass.
pub fn for_each_assignment(c: &Circuit, root: NodeId, inputs: usize, mut visit: impl FnMut(u64, bool)) {
    assert!(inputs < 64);
    let sched = c.schedule(root);
    let mut scratch = Vec::new();
    let mut words = vec![0u64; inputs];
    let low = inputs.min(6);
    let lanes = 1u64 << low;
    for (i, w) in words.iter_mut().enumerate().take(low) {
        *w = LANE_MASKS[i];
    }
    let batches = 1u64 << (inputs - low);
    for batch in 0..batches {
        for (i, w) in words.iter_mut().enumerate().skip(low) {
            *w = if (batch >> (i - low)) & 1 == 1 { !0 } else { 0 };
        }
        let r = c.eval64(&sched, &words, &mut scratch);
        for lane in 0..lanes {
            visit((batch << low) | lane, (r >> lane) & 1 == 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{eval_ws1s, Structure};

    #[test]
    fn agrees_with_reference_evaluator() {
        // forall i . X(i) -> (Y(succ(i)) | max(i))
        let f = Ws1sFormula::forall(
            "i",
            Ws1sFormula::implies(
                Ws1sFormula::member("X", Term::var("i")),
                Ws1sFormula::or([
                    Ws1sFormula::member("Y", Term::succ(Term::var("i"))),
                    Ws1sFormula::Max(Term::var("i")),
                ]),
            ),
        );
        for n in 1..=4 {
            let g = Grounding::new(n).with_inputs(["X", "Y"]);
            let mut c = Circuit::new();
            let root = ground(&f, &g, &mut c).unwrap();
            for_each_assignment(&c, root, g.input_count(), |mask, r| {
                let bits = |base: usize| (0..n).filter(move |u| mask >> (base + u) & 1 == 1);
                let s = Structure::new(n).with_set("X", bits(0)).with_set("Y", bits(n));
                assert_eq!(r, eval_ws1s(&f, &s).unwrap());
            });
        }
    }

    #[test]
    fn second_order_is_rejected() {
        let f = Ws1sFormula::exists2("Z", Ws1sFormula::True);
        assert!(matches!(
            ground(&f, &Grounding::new(2), &mut Circuit::new()),
            Err(GroundError::SecondOrder(_))
        ));
    }

    #[test]
    fn hash_consing_shares_nodes() {
        let mut c = Circuit::new();
        let a = c.input(0);
        let b = c.input(1);
        let x = c.and(a, b);
        let y = c.and(b, a);
        assert_eq!(x, y);
        let na = c.not(a);
        assert_eq!(c.not(na), a);
    }
}
