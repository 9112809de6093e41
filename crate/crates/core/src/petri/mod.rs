//! Concrete instances as 1-safe Petri nets: construction from minimal
//! models, explicit reachability, traps and structural 1-invariants.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write;

use thiserror::Error;

use crate::logic::{minimal_models, Structure};
use crate::syntax::ValidatedSystem;

pub const DEFAULT_MAX_MARKINGS: usize = 1_000_000;
pub const MAX_TRAP_ENUMERATION_PLACES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PetriError {
    #[error("reachability exceeded {0} markings")]
    Cap(usize),
    #[error("net has {0} places; trap enumeration is limited to {MAX_TRAP_ENUMERATION_PLACES}")]
    TooManyPlaces(usize),
    #[error("transition {transition} puts a second token on place {place}")]
    NotOneSafe { transition: usize, place: String },
}

/// Set of places as a bit vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Marking {
    words: Vec<u64>,
}

impl Marking {
    pub fn empty(places: usize) -> Marking {
        Marking {
            words: vec![0; places.div_ceil(64)],
        }
    }

    pub fn from_places(places: usize, set: impl IntoIterator<Item = usize>) -> Marking {
        let mut m = Marking::empty(places);
        for p in set {
            m.insert(p);
        }
        m
    }

    pub fn contains(&self, p: usize) -> bool {
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    pub fn insert(&mut self, p: usize) {
        self.words[p / 64] |= 1 << (p % 64);
    }

    pub fn remove(&mut self, p: usize) {
        self.words[p / 64] &= !(1 << (p % 64));
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn places(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b)
        })
    }

    pub fn intersects(&self, other: &Marking) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn intersection_len(&self, other: &Marking) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn is_subset(&self, other: &Marking) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub pre: Marking,
    pub post: Marking,
    /// Every (clause index, bound-variable tuple) instantiation producing it.
    pub origins: Vec<(usize, Vec<usize>)>,
}

/// The marked net of one instance: places `(state, node)` with id
/// `state_index * n + node`.
#[derive(Clone, Debug)]
pub struct InstanceNet {
    pub size: usize,
    pub states: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial: Marking,
    /// Transitions before merging duplicates, one per instantiation.
    pub instantiations: usize,
    state_index: HashMap<String, usize>,
    type_of_state: Vec<usize>,
}

impl InstanceNet {
    pub fn place_count(&self) -> usize {
        self.states.len() * self.size
    }

    pub fn place(&self, state: &str, node: usize) -> usize {
        self.state_index[state] * self.size + node
    }

    pub fn place_name(&self, p: usize) -> String {
        format!("({},{})", self.states[p / self.size], p % self.size)
    }

    pub fn place_of(&self, p: usize) -> (&str, usize) {
        (&self.states[p / self.size], p % self.size)
    }

    pub fn empty_set(&self) -> Marking {
        Marking::empty(self.place_count())
    }

    pub fn set_of(&self, places: &[(&str, usize)]) -> Marking {
        Marking::from_places(self.place_count(), places.iter().map(|(s, u)| self.place(s, *u)))
    }

    pub fn all_places(&self) -> Marking {
        Marking::from_places(self.place_count(), 0..self.place_count())
    }

    pub fn is_enabled(&self, t: usize, m: &Marking) -> bool {
        self.transitions[t].pre.is_subset(m)
    }

    pub fn fire(&self, t: usize, m: &Marking) -> Result<Marking, PetriError> {
        let tr = &self.transitions[t];
        let mut out = m.clone();
        for p in tr.pre.places() {
            out.remove(p);
        }
        for p in tr.post.places() {
            if out.contains(p) {
                return Err(PetriError::NotOneSafe {
                    transition: t,
                    place: self.place_name(p),
                });
            }
            out.insert(p);
        }
        Ok(out)
    }

    pub fn enabled(&self, m: &Marking) -> impl Iterator<Item = usize> + '_ {
        let m = m.clone();
        (0..self.transitions.len()).filter(move |&t| self.is_enabled(t, &m))
    }

    /// Marked states of every component instance, indexed `type * n + node`.
    pub fn marked_states_per_instance(&self, m: &Marking) -> Vec<usize> {
        let types = self.type_of_state.iter().max().map_or(0, |t| t + 1);
        let mut counts = vec![0; types * self.size];
        for p in m.places() {
            let s = p / self.size;
            counts[self.type_of_state[s] * self.size + p % self.size] += 1;
        }
        counts
    }
}

/// Builds the net of the instance with `n` nodes: one transition per
/// minimal model of each clause, duplicates merged.
pub fn instantiate(sys: &ValidatedSystem, n: usize) -> InstanceNet {
    assert!(n >= 1, "universe must be nonempty");
    let states: Vec<String> = sys.states().into_iter().map(String::from).collect();
    let state_index: HashMap<String, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let type_of_state = states.iter().map(|s| sys.state_type[s]).collect();
    let places = states.len() * n;
    let mut transitions: Vec<Transition> = Vec::new();
    let mut by_arcs: HashMap<(Marking, Marking), usize> = HashMap::new();
    let mut instantiations = 0;
    for (ci, c) in sys.clauses().iter().enumerate() {
        for model in minimal_models(sys, c, n) {
            instantiations += 1;
            let mut pre = Marking::empty(places);
            let mut post = Marking::empty(places);
            for (port, nodes) in &model.ports {
                let si = state_index[sys.pre_of(port)];
                let so = state_index[sys.post_of(port)];
                for &u in nodes {
                    pre.insert(si * n + u);
                    post.insert(so * n + u);
                }
            }
            // distinct ports of one instantiation never share a pre-place
            let arity: usize = model.ports.values().map(BTreeSet::len).sum();
            assert_eq!(pre.len(), arity, "instantiation {:?} of clause {ci} overlaps", model.assignment);
            let origin = (ci, model.assignment);
            match by_arcs.get(&(pre.clone(), post.clone())) {
                Some(&t) => transitions[t].origins.push(origin),
                None => {
                    by_arcs.insert((pre.clone(), post.clone()), transitions.len());
                    transitions.push(Transition {
                        pre,
                        post,
                        origins: vec![origin],
                    });
                }
            }
        }
    }
    let mut initial = Marking::empty(places);
    for s in sys.initial_states() {
        for u in 0..n {
            initial.insert(state_index[s] * n + u);
        }
    }
    InstanceNet {
        size: n,
        states,
        transitions,
        initial,
        instantiations,
        state_index,
        type_of_state,
    }
}

/// Explicit reachability graph, markings in breadth-first discovery order.
#[derive(Clone, Debug)]
pub struct ReachGraph {
    pub markings: Vec<Marking>,
    pub index: HashMap<Marking, usize>,
    /// `(transition, target index)` per marking
    pub edges: Vec<Vec<(usize, usize)>>,
}

impl ReachGraph {
    pub fn contains(&self, m: &Marking) -> bool {
        self.index.contains_key(m)
    }

    pub fn len(&self) -> usize {
        self.markings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markings.is_empty()
    }
}

pub fn reachable(net: &InstanceNet, cap: usize) -> Result<ReachGraph, PetriError> {
    let mut g = ReachGraph {
        markings: vec![net.initial.clone()],
        index: HashMap::from([(net.initial.clone(), 0)]),
        edges: Vec::new(),
    };
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let m = g.markings[i].clone();
        let mut out = Vec::new();
        for t in 0..net.transitions.len() {
            if !net.is_enabled(t, &m) {
                continue;
            }
            let next = net.fire(t, &m)?;
            let j = match g.index.get(&next) {
                Some(&j) => j,
                None => {
                    if g.markings.len() >= cap {
                        return Err(PetriError::Cap(cap));
                    }
                    let j = g.markings.len();
                    g.index.insert(next.clone(), j);
                    g.markings.push(next);
                    queue.push_back(j);
                    j
                }
            };
            out.push((t, j));
        }
        if g.edges.len() <= i {
            g.edges.resize(i + 1, Vec::new());
        }
        g.edges[i] = out;
    }
    Ok(g)
}

/// Reachable markings enabling no transition.
pub fn deadlocks(net: &InstanceNet, g: &ReachGraph) -> Vec<Marking> {
    g.markings
        .iter()
        .filter(|m| net.enabled(m).next().is_none())
        .cloned()
        .collect()
}

/// Every transition taking a token from `w` puts one back into `w`.
pub fn is_trap(net: &InstanceNet, w: &Marking) -> bool {
    net.transitions
        .iter()
        .all(|t| !t.pre.intersects(w) || t.post.intersects(w))
}

/// All traps (including the empty set), by testing every subset.
pub fn enumerate_traps(net: &InstanceNet) -> Result<Vec<Marking>, PetriError> {
    let places = net.place_count();
    if places > MAX_TRAP_ENUMERATION_PLACES {
        return Err(PetriError::TooManyPlaces(places));
    }
    let masks: Vec<(u32, u32)> = net
        .transitions
        .iter()
        .map(|t| (small_mask(&t.pre), small_mask(&t.post)))
        .collect();
    let mut out = Vec::new();
    for w in 0u32..(1 << places) {
        if masks.iter().all(|&(pre, post)| pre & w == 0 || post & w != 0) {
            out.push(Marking::from_places(places, (0..places).filter(|p| w >> p & 1 == 1)));
        }
    }
    Ok(out)
}

fn small_mask(m: &Marking) -> u32 {
    m.words.first().copied().unwrap_or(0) as u32
}

/// The largest trap contained in `within`: repeatedly drop places that some
/// transition consumes without producing back into the remaining set.
pub fn maximal_trap(net: &InstanceNet, within: &Marking) -> Marking {
    let mut w = within.clone();
    loop {
        let mut changed = false;
        for t in &net.transitions {
            if t.pre.intersects(&w) && !t.post.intersects(&w) {
                for p in t.pre.places() {
                    if w.contains(p) {
                        w.remove(p);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return w;
        }
    }
}

/// Whether `m` meets every initially marked trap. Equivalent to: the
/// maximal trap outside `m` is initially unmarked.
pub fn meets_every_marked_trap(net: &InstanceNet, m: &Marking) -> bool {
    let mut outside = net.all_places();
    for p in m.places() {
        outside.remove(p);
    }
    !maximal_trap(net, &outside).intersects(&net.initial)
}

/// Structural sufficient condition for `w` to carry exactly one token in
/// every reachable marking.
pub fn is_structural_one_invariant(net: &InstanceNet, w: &Marking) -> bool {
    if net.initial.intersection_len(w) != 1 {
        return false;
    }
    net.transitions.iter().all(|t| {
        let a = t.pre.intersection_len(w);
        let b = t.post.intersection_len(w);
        a > 1 || (a == b && a <= 1)
    })
}

pub fn token_sum(w: &Marking, m: &Marking) -> usize {
    w.intersection_len(m)
}

/// Interprets each `X_s` as the nodes `u` with `(s,u)` in the set.
pub fn marking_to_structure(net: &InstanceNet, m: &Marking) -> Structure {
    let mut sets: BTreeMap<String, BTreeSet<usize>> =
        net.states.iter().map(|s| (format!("X_{s}"), BTreeSet::new())).collect();
    for p in m.places() {
        let (s, u) = net.place_of(p);
        sets.get_mut(&format!("X_{s}")).unwrap().insert(u);
    }
    Structure {
        size: net.size,
        positions: BTreeMap::new(),
        sets,
    }
}

/// Inverse of [`marking_to_structure`]; sets not named `X_<state>` are ignored.
pub fn structure_to_marking(net: &InstanceNet, st: &Structure) -> Marking {
    assert_eq!(st.size, net.size, "universe size mismatch");
    let mut m = net.empty_set();
    for (i, s) in net.states.iter().enumerate() {
        if let Some(nodes) = st.sets.get(&format!("X_{s}")) {
            for &u in nodes {
                m.insert(i * net.size + u);
            }
        }
    }
    m
}

pub fn format_places(net: &InstanceNet, m: &Marking) -> String {
    let names: Vec<String> = m.places().map(|p| net.place_name(p)).collect();
    format!("{{{}}}", names.join(", "))
}

pub fn to_dot(net: &InstanceNet) -> String {
    let mut out = String::from("digraph net {\n  rankdir=LR;\n");
    for p in 0..net.place_count() {
        let (s, u) = net.place_of(p);
        let style = if net.initial.contains(p) { ",style=filled" } else { "" };
        writeln!(out, "  p{p} [shape=circle,label=\"{s},{u}\"{style}];").unwrap();
    }
    for (i, t) in net.transitions.iter().enumerate() {
        writeln!(out, "  t{i} [shape=box,label=\"t{i}\"];").unwrap();
        for p in t.pre.places() {
            writeln!(out, "  p{p} -> t{i};").unwrap();
        }
        for p in t.post.places() {
            writeln!(out, "  t{i} -> p{p};").unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests;
