//! Hash-consed multi-terminal decision diagrams with `u32` leaves.

use std::collections::HashMap;

pub type NodeRef = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(u32),
    Branch { var: u32, lo: NodeRef, hi: NodeRef },
}

#[derive(Clone, Debug, Default)]
pub struct Mtbdd {
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeRef>,
}

impl Mtbdd {
    pub fn new() -> Mtbdd {
        Mtbdd::default()
    }

    pub fn node(&self, r: NodeRef) -> Node {
        self.nodes[r as usize]
    }

    fn intern(&mut self, n: Node) -> NodeRef {
        if let Some(&r) = self.unique.get(&n) {
            return r;
        }
        let r = self.nodes.len() as NodeRef;
        self.nodes.push(n);
        self.unique.insert(n, r);
        r
    }

    pub fn leaf(&mut self, v: u32) -> NodeRef {
        self.intern(Node::Leaf(v))
    }

    pub fn branch(&mut self, var: u32, lo: NodeRef, hi: NodeRef) -> NodeRef {
        if lo == hi {
            return lo;
        }
        debug_assert!(self.top_var(lo).is_none_or(|v| v > var) && self.top_var(hi).is_none_or(|v| v > var));
        self.intern(Node::Branch { var, lo, hi })
    }

    pub fn top_var(&self, r: NodeRef) -> Option<u32> {
        match self.node(r) {
            Node::Leaf(_) => None,
            Node::Branch { var, .. } => Some(var),
        }
    }

    /// Cofactors of `r` with respect to `var` (which must not be below r's top).
    pub fn cofactors(&self, r: NodeRef, var: u32) -> (NodeRef, NodeRef) {
        match self.node(r) {
            Node::Branch { var: v, lo, hi } if v == var => (lo, hi),
            _ => (r, r),
        }
    }

    /// Follows a full assignment (`bit(var)`) to a leaf.
    pub fn eval(&self, mut r: NodeRef, bit: impl Fn(u32) -> bool) -> u32 {
        loop {
            match self.node(r) {
                Node::Leaf(v) => return v,
                Node::Branch { var, lo, hi } => r = if bit(var) { hi } else { lo },
            }
        }
    }

    /// Distinct leaf values reachable from `r`, in first-visit order (lo before hi).
    pub fn leaves(&self, r: NodeRef) -> Vec<u32> {
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![r];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            match self.node(n) {
                Node::Leaf(v) => {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
                Node::Branch { lo, hi, .. } => {
                    stack.push(hi);
                    stack.push(lo);
                }
            }
        }
        out
    }

    /// For every leaf value reachable from `r`, one path to it as a list of
    /// fixed `(var, bit)` pairs, preferring `lo` edges.
    pub fn paths_to_leaves(&self, r: NodeRef) -> Vec<(u32, Vec<(u32, bool)>)> {
        let mut out: Vec<(u32, Vec<(u32, bool)>)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![(r, Vec::new())];
        // depth-first with lo explored first
        while let Some((n, path)) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            match self.node(n) {
                Node::Leaf(v) => {
                    if !out.iter().any(|(w, _)| *w == v) {
                        out.push((v, path));
                    }
                }
                Node::Branch { var, lo, hi } => {
                    let mut ph = path.clone();
                    ph.push((var, true));
                    let mut pl = path;
                    pl.push((var, false));
                    stack.push((hi, ph));
                    stack.push((lo, pl));
                }
            }
        }
        out
    }

    /// All cubes (partial assignments) leading to each leaf; used for dumps.
    pub fn cubes(&self, r: NodeRef, out: &mut Vec<(Vec<(u32, bool)>, u32)>, prefix: &mut Vec<(u32, bool)>) {
        match self.node(r) {
            Node::Leaf(v) => out.push((prefix.clone(), v)),
            Node::Branch { var, lo, hi } => {
                prefix.push((var, false));
                self.cubes(lo, out, prefix);
                prefix.pop();
                prefix.push((var, true));
                self.cubes(hi, out, prefix);
                prefix.pop();
            }
        }
    }

    /// Copies the diagram rooted at `r` from `src` into `self`, renaming
    /// variables with `var_map` (which must be monotone) and leaves with
    /// `leaf_map`.
    pub fn import(
        &mut self,
        src: &Mtbdd,
        r: NodeRef,
        var_map: &dyn Fn(u32) -> u32,
        leaf_map: &mut dyn FnMut(u32) -> u32,
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> NodeRef {
        if let Some(&x) = memo.get(&r) {
            return x;
        }
        let res = match src.node(r) {
            Node::Leaf(v) => {
                let l = leaf_map(v);
                self.leaf(l)
            }
            Node::Branch { var, lo, hi } => {
                let lo = self.import(src, lo, var_map, leaf_map, memo);
                let hi = self.import(src, hi, var_map, leaf_map, memo);
                self.branch(var_map(var), lo, hi)
            }
        };
        memo.insert(r, res);
        res
    }

    /// Combines two diagrams of this arena leaf-wise.
    pub fn apply(
        &mut self,
        a: NodeRef,
        b: NodeRef,
        op: &mut dyn FnMut(u32, u32) -> u32,
        memo: &mut HashMap<(NodeRef, NodeRef), NodeRef>,
    ) -> NodeRef {
        if let Some(&x) = memo.get(&(a, b)) {
            return x;
        }
        let res = match (self.node(a), self.node(b)) {
            (Node::Leaf(x), Node::Leaf(y)) => {
                let v = op(x, y);
                self.leaf(v)
            }
            _ => {
                let var = match (self.top_var(a), self.top_var(b)) {
                    (Some(x), Some(y)) => x.min(y),
                    (Some(x), None) | (None, Some(x)) => x,
                    (None, None) => unreachable!(),
                };
                let (a0, a1) = self.cofactors(a, var);
                let (b0, b1) = self.cofactors(b, var);
                let lo = self.apply(a0, b0, op, memo);
                let hi = self.apply(a1, b1, op, memo);
                self.branch(var, lo, hi)
            }
        };
        memo.insert((a, b), res);
        res
    }

    /// Renames leaves of the diagram rooted at `r`.
    pub fn map_leaves(
        &mut self,
        r: NodeRef,
        f: &mut dyn FnMut(u32) -> u32,
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> NodeRef {
        if let Some(&x) = memo.get(&r) {
            return x;
        }
        let res = match self.node(r) {
            Node::Leaf(v) => {
                let l = f(v);
                self.leaf(l)
            }
            Node::Branch { var, lo, hi } => {
                let lo = self.map_leaves(lo, f, memo);
                let hi = self.map_leaves(hi, f, memo);
                self.branch(var, lo, hi)
            }
        };
        memo.insert(r, res);
        res
    }

    /// Existentially abstracts the variables for which `drop` holds,
    /// combining the two cofactors with `join` (a commutative, associative,
    /// idempotent leaf operation such as set union).
    pub fn abstract_vars(
        &mut self,
        r: NodeRef,
        drop: &dyn Fn(u32) -> bool,
        join: &mut dyn FnMut(u32, u32) -> u32,
        memo: &mut HashMap<NodeRef, NodeRef>,
        join_memo: &mut HashMap<(NodeRef, NodeRef), NodeRef>,
    ) -> NodeRef {
        if let Some(&x) = memo.get(&r) {
            return x;
        }
        let res = match self.node(r) {
            Node::Leaf(_) => r,
            Node::Branch { var, lo, hi } => {
                let lo = self.abstract_vars(lo, drop, join, memo, join_memo);
                let hi = self.abstract_vars(hi, drop, join, memo, join_memo);
                if drop(var) {
                    let (a, b) = (lo.min(hi), lo.max(hi));
                    self.apply(a, b, join, join_memo)
                } else {
                    self.branch(var, lo, hi)
                }
            }
        };
        memo.insert(r, res);
        res
    }
}
