use std::collections::{HashMap, VecDeque};

use super::mtbdd::{Mtbdd, NodeRef};
use super::SolverError;
use crate::logic::Structure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    First,
    Second,
}

/// A track of the word alphabet: one bit per position for each free variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Track {
    pub name: String,
    pub kind: VarKind,
}

impl Track {
    pub fn first(name: impl Into<String>) -> Track {
        Track {
            name: name.into(),
            kind: VarKind::First,
        }
    }

    pub fn second(name: impl Into<String>) -> Track {
        Track {
            name: name.into(),
            kind: VarKind::Second,
        }
    }
}

/// Deterministic complete automaton over bit-vector letters. Transitions
/// of each state form one decision diagram over the track bits whose leaves
/// are target states; a path of the diagram is a cube (wildcards for the
/// variables it skips). State 0 is initial. The accepted language only
/// contains words of length at least 1.
#[derive(Clone, Debug)]
pub struct TrackAutomaton {
    pub(crate) tracks: Vec<Track>,
    pub(crate) bdd: Mtbdd,
    pub(crate) delta: Vec<NodeRef>,
    pub(crate) accepting: Vec<bool>,
}

impl TrackAutomaton {
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn state_count(&self) -> usize {
        self.delta.len()
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    /// Every state has exactly one successor per letter: always true by
    /// construction, checked here for tests and dumps.
    pub fn is_deterministic_complete(&self) -> bool {
        let n = self.delta.len() as u32;
        self.delta.len() == self.accepting.len() && self.delta.iter().all(|&r| self.bdd.leaves(r).iter().all(|&t| t < n))
    }

    pub fn step(&self, q: usize, letter: &[bool]) -> usize {
        self.bdd.eval(self.delta[q], |v| letter[v as usize]) as usize
    }

    /// Runs the automaton on a word given as letters (one bool per track).
    pub fn accepts_word(&self, word: &[Vec<bool>]) -> bool {
        if word.is_empty() {
            return false;
        }
        let q = word.iter().fold(0, |q, l| self.step(q, l));
        self.accepting[q]
    }

    /// Encodes the structure over this automaton's tracks and runs it.
    /// Variables without an assignment read as empty tracks.
    pub fn accepts(&self, s: &Structure) -> bool {
        self.accepts_word(&encode(&self.tracks, s))
    }

    /// True when the language is empty.
    pub fn is_empty(&self) -> bool {
        // states reachable by at least one letter
        let mut seen = vec![false; self.delta.len()];
        let mut stack: Vec<u32> = self.bdd.leaves(self.delta[0]);
        while let Some(q) = stack.pop() {
            if std::mem::replace(&mut seen[q as usize], true) {
                continue;
            }
            if self.accepting[q as usize] {
                return false;
            }
            stack.extend(self.bdd.leaves(self.delta[q as usize]));
        }
        true
    }

    /// Successor states of `q` with one letter (lowest bits) leading to each.
    pub(crate) fn successors(&self, q: usize) -> Vec<(usize, Vec<(u32, bool)>)> {
        self.bdd
            .paths_to_leaves(self.delta[q])
            .into_iter()
            .map(|(t, p)| (t as usize, p))
            .collect()
    }

    /// Explicit construction: `delta(state, letter)` where bit `i` of
    /// `letter` is the value of `tracks[i]` (in the given order). The result
    /// is minimized.
    pub fn explicit(
        tracks: Vec<Track>,
        accepting: Vec<bool>,
        delta: impl Fn(usize, u32) -> usize,
    ) -> TrackAutomaton {
        let k = tracks.len();
        assert!(k < 32);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| tracks[a].cmp(&tracks[b]));
        let mut bdd = Mtbdd::new();
        let mut roots = Vec::new();
        for q in 0..accepting.len() {
            roots.push(shannon(&mut bdd, 0, k, 0, &|sorted_bits| {
                let mut given = 0u32;
                for (pos, &orig) in order.iter().enumerate() {
                    if sorted_bits >> pos & 1 == 1 {
                        given |= 1 << orig;
                    }
                }
                delta(q, given) as u32
            }));
        }
        let mut sorted = tracks;
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), k, "duplicate tracks");
        minimize(&TrackAutomaton {
            tracks: sorted,
            bdd,
            delta: roots,
            accepting,
        })
    }

    /// The automaton accepting every nonempty word over the given tracks.
    pub fn universal(tracks: Vec<Track>) -> TrackAutomaton {
        TrackAutomaton::explicit(tracks, vec![false, true], |_, _| 1)
    }

    pub fn empty(tracks: Vec<Track>) -> TrackAutomaton {
        TrackAutomaton::explicit(tracks, vec![false], |_, _| 0)
    }

    /// Words in which every first-order track among `tracks` has exactly one 1.
    pub fn well_formed(tracks: &[Track]) -> TrackAutomaton {
        let fo: Vec<Track> = tracks.iter().filter(|t| t.kind == VarKind::First).cloned().collect();
        let k = fo.len();
        if k == 0 {
            return TrackAutomaton::universal(Vec::new());
        }
        // state = bitmask of tracks already seen; 2^k is the dead state
        let dead = 1usize << k;
        let mut accepting = vec![false; dead + 1];
        accepting[dead - 1] = true;
        TrackAutomaton::explicit(fo, accepting, move |q, letter| {
            if q == dead || q & letter as usize != 0 {
                dead
            } else {
                q | letter as usize
            }
        })
    }

    pub fn first_order_tracks(&self) -> Vec<Track> {
        self.tracks.iter().filter(|t| t.kind == VarKind::First).cloned().collect()
    }
}

fn shannon(bdd: &mut Mtbdd, var: usize, k: usize, bits: u32, leaf: &dyn Fn(u32) -> u32) -> NodeRef {
    if var == k {
        let v = leaf(bits);
        return bdd.leaf(v);
    }
    let lo = shannon(bdd, var + 1, k, bits, leaf);
    let hi = shannon(bdd, var + 1, k, bits | 1 << var, leaf);
    bdd.branch(var as u32, lo, hi)
}

pub(crate) fn encode(tracks: &[Track], s: &Structure) -> Vec<Vec<bool>> {
    (0..s.size)
        .map(|p| {
            tracks
                .iter()
                .map(|t| match t.kind {
                    VarKind::First => s.positions.get(&t.name) == Some(&p),
                    VarKind::Second => s.sets.get(&t.name).is_some_and(|set| set.contains(&p)),
                })
                .collect()
        })
        .collect()
}

fn union_tracks(a: &[Track], b: &[Track]) -> Vec<Track> {
    let mut u: Vec<Track> = a.iter().chain(b).cloned().collect();
    u.sort();
    u.dedup();
    u
}

fn index_map(from: &[Track], to: &[Track]) -> Vec<u32> {
    from.iter()
        .map(|t| to.binary_search(t).expect("track present") as u32)
        .collect()
}

/// Synchronous product; acceptance combined with `op`. Not minimized.
pub(crate) fn product(
    a: &TrackAutomaton,
    b: &TrackAutomaton,
    op: fn(bool, bool) -> bool,
    max_states: usize,
) -> Result<TrackAutomaton, SolverError> {
    let tracks = union_tracks(&a.tracks, &b.tracks);
    let amap = index_map(&a.tracks, &tracks);
    let bmap = index_map(&b.tracks, &tracks);
    let mut bdd = Mtbdd::new();
    let mut memo = HashMap::new();
    let ra: Vec<NodeRef> = a
        .delta
        .iter()
        .map(|&r| bdd.import(&a.bdd, r, &|v| amap[v as usize], &mut |l| l, &mut memo))
        .collect();
    let mut memo = HashMap::new();
    let rb: Vec<NodeRef> = b
        .delta
        .iter()
        .map(|&r| bdd.import(&b.bdd, r, &|v| bmap[v as usize], &mut |l| l, &mut memo))
        .collect();

    let mut ids: HashMap<(u32, u32), u32> = HashMap::new();
    let mut pairs: Vec<(u32, u32)> = vec![(0, 0)];
    ids.insert((0, 0), 0);
    let mut delta = Vec::new();
    let mut apply_memo = HashMap::new();
    let mut i = 0;
    while i < pairs.len() {
        let (x, y) = pairs[i];
        i += 1;
        let mut overflow = false;
        let root = bdd.apply(
            ra[x as usize],
            rb[y as usize],
            &mut |p, q| {
                let next = ids.len() as u32;
                *ids.entry((p, q)).or_insert_with(|| {
                    pairs.push((p, q));
                    if pairs.len() > max_states {
                        overflow = true;
                    }
                    next
                })
            },
            &mut apply_memo,
        );
        if overflow {
            return Err(SolverError::Resource { states: pairs.len() });
        }
        delta.push(root);
    }
    let accepting = pairs
        .iter()
        .map(|&(x, y)| op(a.accepting[x as usize], b.accepting[y as usize]))
        .collect();
    Ok(TrackAutomaton {
        tracks,
        bdd,
        delta,
        accepting,
    })
}

/// Binary boolean combination of two automata whose languages are
/// cylinders over their own tracks intersected with their well-formedness
/// languages. The result is minimized.
pub fn combine(
    a: &TrackAutomaton,
    b: &TrackAutomaton,
    op: fn(bool, bool) -> bool,
    max_states: usize,
) -> Result<TrackAutomaton, SolverError> {
    let p = minimize(&product(a, b, op, max_states)?);
    let needs_wf = !op_is_and(op) && (op(false, false) || a.first_order_tracks() != b.first_order_tracks());
    if needs_wf {
        let wf = TrackAutomaton::well_formed(&p.tracks);
        return Ok(minimize(&product(&p, &wf, |x, y| x && y, max_states)?));
    }
    Ok(p)
}

fn op_is_and(op: fn(bool, bool) -> bool) -> bool {
    !op(false, false) && !op(true, false) && !op(false, true) && op(true, true)
}

pub fn intersect(a: &TrackAutomaton, b: &TrackAutomaton, max_states: usize) -> Result<TrackAutomaton, SolverError> {
    combine(a, b, |x, y| x && y, max_states)
}

pub fn union(a: &TrackAutomaton, b: &TrackAutomaton, max_states: usize) -> Result<TrackAutomaton, SolverError> {
    combine(a, b, |x, y| x || y, max_states)
}

/// Complement relative to the well-formed words over the automaton's tracks.
pub fn complement(a: &TrackAutomaton, max_states: usize) -> Result<TrackAutomaton, SolverError> {
    let mut c = a.clone();
    for acc in &mut c.accepting {
        *acc = !*acc;
    }
    if a.tracks.iter().any(|t| t.kind == VarKind::First) {
        let wf = TrackAutomaton::well_formed(&a.tracks);
        return Ok(minimize(&product(&c, &wf, |x, y| x && y, max_states)?));
    }
    Ok(minimize(&c))
}

/// Existential projection of the given tracks (absent ones are ignored).
pub fn project(a: &TrackAutomaton, drop: &[Track], max_states: usize) -> Result<TrackAutomaton, SolverError> {
    let dropped: Vec<u32> = drop
        .iter()
        .filter_map(|t| a.tracks.binary_search(t).ok().map(|i| i as u32))
        .collect();
    if dropped.is_empty() {
        return Ok(a.clone());
    }
    let keep: Vec<Track> = a
        .tracks
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(&(*i as u32)))
        .map(|(_, t)| t.clone())
        .collect();
    // compacted index of every kept variable
    let mut compact = vec![u32::MAX; a.tracks.len()];
    let mut next = 0;
    for (i, c) in compact.iter_mut().enumerate() {
        if !dropped.contains(&(i as u32)) {
            *c = next;
            next += 1;
        }
    }

    let mut sets = SetTable::default();
    let mut work = a.bdd.clone();
    let mut leaf_memo = HashMap::new();
    let mut abs_memo = HashMap::new();
    let mut join_memo = HashMap::new();
    let proj: Vec<NodeRef> = a
        .delta
        .iter()
        .map(|&r| {
            let r = work.map_leaves(r, &mut |q| sets.intern(vec![q]), &mut leaf_memo);
            work.abstract_vars(
                r,
                &|v| dropped.contains(&v),
                &mut |x, y| sets.union(x, y),
                &mut abs_memo,
                &mut join_memo,
            )
        })
        .collect();

    // subset construction; states are set-table ids
    let start = sets.intern(vec![0]);
    let mut state_of: HashMap<u32, u32> = HashMap::from([(start, 0)]);
    let mut subsets = vec![start];
    let mut roots = Vec::new();
    let mut i = 0;
    while i < subsets.len() {
        let s = subsets[i];
        i += 1;
        let members = sets.get(s).to_vec();
        let mut root = proj[members[0] as usize];
        for &q in &members[1..] {
            let (x, y) = (root.min(proj[q as usize]), root.max(proj[q as usize]));
            root = work.apply(x, y, &mut |x, y| sets.union(x, y), &mut join_memo);
        }
        for t in work.leaves(root) {
            if let std::collections::hash_map::Entry::Vacant(e) = state_of.entry(t) {
                e.insert(subsets.len() as u32);
                subsets.push(t);
                if subsets.len() > max_states {
                    return Err(SolverError::Resource { states: subsets.len() });
                }
            }
        }
        roots.push(root);
    }
    let mut bdd = Mtbdd::new();
    let mut memo = HashMap::new();
    let delta = roots
        .iter()
        .map(|&r| bdd.import(&work, r, &|v| compact[v as usize], &mut |l| state_of[&l], &mut memo))
        .collect();
    let accepting = subsets
        .iter()
        .map(|&s| sets.get(s).iter().any(|&q| a.accepting[q as usize]))
        .collect();
    Ok(minimize(&TrackAutomaton {
        tracks: keep,
        bdd,
        delta,
        accepting,
    }))
}

#[derive(Default)]
struct SetTable {
    sets: Vec<Vec<u32>>,
    ids: HashMap<Vec<u32>, u32>,
    union_memo: HashMap<(u32, u32), u32>,
}

impl SetTable {
    fn intern(&mut self, s: Vec<u32>) -> u32 {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.sets.len() as u32;
        self.sets.push(s.clone());
        self.ids.insert(s, id);
        id
    }

    fn get(&self, id: u32) -> &[u32] {
        &self.sets[id as usize]
    }

    fn union(&mut self, a: u32, b: u32) -> u32 {
        if a == b {
            return a;
        }
        let key = (a.min(b), a.max(b));
        if let Some(&r) = self.union_memo.get(&key) {
            return r;
        }
        let (x, y) = (&self.sets[a as usize], &self.sets[b as usize]);
        let mut merged = Vec::with_capacity(x.len() + y.len());
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            if j == y.len() || (i < x.len() && x[i] < y[j]) {
                merged.push(x[i]);
                i += 1;
            } else if i == x.len() || y[j] < x[i] {
                merged.push(y[j]);
                j += 1;
            } else {
                merged.push(x[i]);
                i += 1;
                j += 1;
            }
        }
        let r = self.intern(merged);
        self.union_memo.insert(key, r);
        r
    }
}

/// Moore minimization followed by canonical breadth-first renumbering.
/// The initial state is first split off into a fresh non-accepting copy so
/// that the empty word never influences the result.
pub fn minimize(a: &TrackAutomaton) -> TrackAutomaton {
    // fresh initial state with state 0's transitions, then restrict to reachable
    let n0 = a.delta.len();
    let mut delta = a.delta.clone();
    delta.push(a.delta[0]);
    let mut accepting = a.accepting.clone();
    accepting.push(false);
    let start = n0;
    let mut seen = vec![false; n0 + 1];
    let mut states = vec![start];
    seen[start] = true;
    let mut i = 0;
    while i < states.len() {
        let q = states[i];
        i += 1;
        for t in a.bdd.leaves(delta[q]) {
            if !std::mem::replace(&mut seen[t as usize], true) {
                states.push(t as usize);
            }
        }
    }

    let mut class = vec![u32::MAX; n0 + 1];
    for &q in &states {
        class[q] = accepting[q] as u32;
    }
    let mut count = {
        let mut c: Vec<u32> = states.iter().map(|&q| class[q]).collect();
        c.sort();
        c.dedup();
        c.len()
    };
    let (mut work, mut sig): (Mtbdd, Vec<NodeRef>);
    loop {
        work = Mtbdd::new();
        let mut memo = HashMap::new();
        sig = vec![0; n0 + 1];
        for &q in &states {
            sig[q] = work.import(&a.bdd, delta[q], &|v| v, &mut |t| class[t as usize], &mut memo);
        }
        let mut keys: HashMap<(u32, NodeRef), u32> = HashMap::new();
        let mut next = vec![u32::MAX; n0 + 1];
        for &q in &states {
            let k = keys.len() as u32;
            next[q] = *keys.entry((class[q], sig[q])).or_insert(k);
        }
        let new_count = keys.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }
    // sig roots are expressed over the classes of the previous round, which
    // induce the same partition as the final classes; recompute once more so
    // leaves carry final class ids
    let mut work2 = Mtbdd::new();
    let mut memo = HashMap::new();
    let mut rep: Vec<Option<usize>> = vec![None; count];
    for &q in &states {
        rep[class[q] as usize].get_or_insert(q);
    }
    let class_root: Vec<NodeRef> = rep
        .iter()
        .map(|q| work2.import(&a.bdd, delta[q.unwrap()], &|v| v, &mut |t| class[t as usize], &mut memo))
        .collect();
    drop(work);
    drop(sig);

    // canonical numbering: BFS from the initial class, leaves in lo-first order
    let mut number = vec![u32::MAX; count];
    let mut order = vec![class[start]];
    number[class[start] as usize] = 0;
    let mut i = 0;
    while i < order.len() {
        let c = order[i];
        i += 1;
        for t in work2.leaves(class_root[c as usize]) {
            if number[t as usize] == u32::MAX {
                number[t as usize] = order.len() as u32;
                order.push(t);
            }
        }
    }
    let mut bdd = Mtbdd::new();
    let mut memo = HashMap::new();
    let delta = order
        .iter()
        .map(|&c| bdd.import(&work2, class_root[c as usize], &|v| v, &mut |t| number[t as usize], &mut memo))
        .collect();
    let accepting = order.iter().map(|&c| accepting[rep[c as usize].unwrap()]).collect();
    TrackAutomaton {
        tracks: a.tracks.clone(),
        bdd,
        delta,
        accepting,
    }
}

/// Structural identity of two minimized automata (same tracks, same
/// numbered transition diagrams and acceptance).
pub fn isomorphic(a: &TrackAutomaton, b: &TrackAutomaton) -> bool {
    if a.tracks != b.tracks || a.accepting != b.accepting {
        return false;
    }
    let mut cubes_a = Vec::new();
    let mut cubes_b = Vec::new();
    for (&ra, &rb) in a.delta.iter().zip(&b.delta) {
        cubes_a.clear();
        cubes_b.clear();
        a.bdd.cubes(ra, &mut cubes_a, &mut Vec::new());
        b.bdd.cubes(rb, &mut cubes_b, &mut Vec::new());
        if cubes_a != cubes_b {
            return false;
        }
    }
    true
}

/// Breadth-first search for a shortest accepted word whose length is at
/// least `min_len`; letters fix every bit not constrained by the path to 0.
pub fn shortest_word(a: &TrackAutomaton, min_len: usize) -> Option<Vec<Vec<bool>>> {
    let k = min_len.max(1);
    let idx = |q: usize, c: usize| q * (k + 1) + c;
    let mut parent: HashMap<usize, (usize, Vec<(u32, bool)>)> = HashMap::new();
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let mut seen = vec![false; a.delta.len() * (k + 1)];
    seen[idx(0, 0)] = true;
    while let Some((q, c)) = queue.pop_front() {
        if c == k && a.accepting[q] {
            // rebuild
            let mut word = Vec::new();
            let mut cur = idx(q, c);
            while let Some((prev, cube)) = parent.get(&cur) {
                let mut letter = vec![false; a.tracks.len()];
                for &(v, b) in cube {
                    letter[v as usize] = b;
                }
                word.push(letter);
                cur = *prev;
            }
            word.reverse();
            return Some(word);
        }
        for (t, cube) in a.successors(q) {
            let nc = (c + 1).min(k);
            let id = idx(t, nc);
            if !seen[id] {
                seen[id] = true;
                parent.insert(id, (idx(q, c), cube));
                queue.push_back((t, nc));
            }
        }
    }
    None
}

/// Decodes a word into a structure over the given tracks.
pub fn decode(tracks: &[Track], word: &[Vec<bool>]) -> Structure {
    let mut s = Structure::new(word.len());
    for (i, t) in tracks.iter().enumerate() {
        let ones = (0..word.len()).filter(|&p| word[p][i]);
        match t.kind {
            VarKind::First => {
                let p = ones.clone().next().unwrap_or(0);
                s.positions.insert(t.name.clone(), p);
            }
            VarKind::Second => {
                s.sets.insert(t.name.clone(), ones.collect());
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Track {
        Track::first("x")
    }

    #[test]
    fn well_formed_single_track() {
        let wf = TrackAutomaton::well_formed(&[x()]);
        assert!(wf.accepts_word(&[vec![false], vec![true]]));
        assert!(!wf.accepts_word(&[vec![true], vec![true]]));
        assert!(!wf.accepts_word(&[vec![false]]));
        assert!(!wf.accepts_word(&[]));
        assert_eq!(wf.state_count(), 3);
        assert!(wf.is_deterministic_complete());
    }

    #[test]
    fn double_complement() {
        let wf = TrackAutomaton::well_formed(&[x(), Track::first("y")]);
        let c = complement(&complement(&wf, 1000).unwrap(), 1000).unwrap();
        assert!(isomorphic(&c, &wf));
        // complement of a well-formedness language is empty
        assert!(complement(&wf, 1000).unwrap().is_empty());
    }

    #[test]
    fn projection_of_singleton_gives_nonempty_words() {
        let wf = TrackAutomaton::well_formed(&[x()]);
        let p = project(&wf, &[x()], 1000).unwrap();
        assert!(isomorphic(&p, &TrackAutomaton::universal(Vec::new())));
        assert!(!p.accepts_word(&[]));
        assert!(p.accepts_word(&[vec![]]));
    }

    #[test]
    fn minimization_is_canonical() {
        // two constructions of "X is nonempty"
        let a = TrackAutomaton::explicit(vec![Track::second("X")], vec![false, false, true], |q, l| {
            if q == 2 || l == 1 {
                2
            } else {
                1
            }
        });
        let b = TrackAutomaton::explicit(vec![Track::second("X")], vec![false, false, true, true], |q, l| match q {
            0 | 1 => {
                if l == 1 {
                    3
                } else {
                    1
                }
            }
            _ => 2 + (l as usize),
        });
        assert!(isomorphic(&a, &b));
        assert_eq!(a.state_count(), 2);
    }

    #[test]
    fn shortest_word_respects_minimum() {
        let u = TrackAutomaton::universal(vec![Track::second("X")]);
        assert_eq!(shortest_word(&u, 1).unwrap().len(), 1);
        assert_eq!(shortest_word(&u, 3).unwrap(), vec![vec![false]; 3]);
        assert!(shortest_word(&TrackAutomaton::empty(Vec::new()), 1).is_none());
    }
}
