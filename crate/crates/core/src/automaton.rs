//! Eventually-always weak Büchi automata over multi-track words.
//!
//! Accepting runs have the shape `(Q∖F)* F^ω`, which holds exactly when no
//! transition leaves `F`. Transition labels are sets of [`Cube`]s, products of
//! per-track letter sets, so the `5^k` letters of a `k`-track alphabet are
//! never enumerated.

use std::cell::Cell;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::numeric::{Column, Letter, UPWord};
use crate::relations;

/// Subset of the five-letter alphabet, one bit per letter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LetterSet(u8);

impl LetterSet {
    pub const EMPTY: LetterSet = LetterSet(0);
    pub const ALL: LetterSet = LetterSet(0b11111);
    pub const PLUS: LetterSet = LetterSet(1 << 0);
    pub const MINUS: LetterSet = LetterSet(1 << 1);
    pub const DOT: LetterSet = LetterSet(1 << 2);
    pub const ZERO: LetterSet = LetterSet(1 << 3);
    pub const ONE: LetterSet = LetterSet(1 << 4);
    pub const SIGNS: LetterSet = LetterSet(0b00011);
    pub const BITS: LetterSet = LetterSet(0b11000);

    pub fn of(letter: Letter) -> LetterSet {
        LetterSet(1 << letter.index())
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, letter: Letter) -> bool {
        self.0 & (1 << letter.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: LetterSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersect(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 & other.0)
    }

    pub fn union(self, other: LetterSet) -> LetterSet {
        LetterSet(self.0 | other.0)
    }

    /// Least letter in the order `+ < - < . < 0 < 1`.
    pub fn least(self) -> Option<Letter> {
        (0..5u8).find(|i| self.0 & (1 << i) != 0).map(Letter::from_index)
    }

    /// Exchanges `+` and `-`.
    pub fn swap_signs(self) -> LetterSet {
        let plus = self.0 & 1;
        let minus = (self.0 >> 1) & 1;
        LetterSet((self.0 & !0b11) | (plus << 1) | minus)
    }

    pub fn letters(self) -> impl Iterator<Item = Letter> {
        Letter::ALL.into_iter().filter(move |&l| self.contains(l))
    }

    pub fn parse(s: &str) -> Result<LetterSet> {
        let mut set = LetterSet::EMPTY;
        for c in s.chars() {
            set = set.union(LetterSet::of(Letter::from_char(c)?));
        }
        Ok(set)
    }
}

impl fmt::Display for LetterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.letters() {
            f.write_char(l.to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for LetterSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

/// Product of per-track letter sets.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube(Box<[LetterSet]>);

impl Cube {
    pub fn new(sets: Vec<LetterSet>) -> Result<Cube> {
        if sets.is_empty() {
            return Err(Error::Arity("a cube needs at least one track".into()));
        }
        if sets.iter().any(|s| s.is_empty()) {
            return Err(Error::Format("cube with an empty track set".into()));
        }
        Ok(Cube(sets.into_boxed_slice()))
    }

    pub(crate) fn from_sets(sets: Vec<LetterSet>) -> Cube {
        debug_assert!(!sets.is_empty() && sets.iter().all(|s| !s.is_empty()));
        Cube(sets.into_boxed_slice())
    }

    /// The same set on every track.
    pub fn uniform(tracks: usize, set: LetterSet) -> Cube {
        Cube::from_sets(vec![set; tracks])
    }

    /// Parse a cube written as one letter-set string per track, e.g. `["01", "."]`.
    pub fn parse<S: AsRef<str>>(tracks: &[S]) -> Result<Cube> {
        Cube::new(tracks.iter().map(|s| LetterSet::parse(s.as_ref())).collect::<Result<_>>()?)
    }

    /// Cube of singletons for an explicit letter column.
    pub fn letter(column: &[Letter]) -> Cube {
        Cube::from_sets(column.iter().map(|&l| LetterSet::of(l)).collect())
    }

    pub fn tracks(&self) -> usize {
        self.0.len()
    }

    pub fn sets(&self) -> &[LetterSet] {
        &self.0
    }

    pub fn admits(&self, column: &[Letter]) -> bool {
        self.0.iter().zip(column).all(|(s, &l)| s.contains(l))
    }

    pub fn intersect(&self, other: &Cube) -> Option<Cube> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            let s = a.intersect(*b);
            if s.is_empty() {
                return None;
            }
            out.push(s);
        }
        Some(Cube(out.into_boxed_slice()))
    }

    pub fn is_subset(&self, other: &Cube) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a.is_subset(*b))
    }

    pub fn concat(&self, other: &Cube) -> Cube {
        Cube(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    pub fn strings(&self) -> Vec<String> {
        self.0.iter().map(|s| s.to_string()).collect()
    }

    fn least_column(&self) -> Column {
        self.0.iter().map(|s| s.least().expect("nonempty track set")).collect()
    }

    fn with_set(&self, track: usize, set: LetterSet) -> Cube {
        let mut sets = self.0.clone();
        sets[track] = set;
        Cube(sets)
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.strings().join(","))
    }
}

/// Removes duplicate and subsumed cubes and merges cubes that differ on one
/// track. The output is sorted.
pub fn normalize_cubes(mut cubes: Vec<Cube>) -> Vec<Cube> {
    cubes.sort();
    cubes.dedup();
    loop {
        let mut changed = false;
        let mut keep = vec![true; cubes.len()];
        for i in 0..cubes.len() {
            if !keep[i] {
                continue;
            }
            for j in 0..cubes.len() {
                if i != j && keep[j] && cubes[i].is_subset(&cubes[j]) {
                    keep[i] = false;
                    changed = true;
                    break;
                }
            }
        }
        let mut it = keep.iter();
        cubes.retain(|_| *it.next().unwrap());

        'merge: for i in 0..cubes.len() {
            for j in i + 1..cubes.len() {
                let mut diff = None;
                let mut count = 0;
                for t in 0..cubes[i].tracks() {
                    if cubes[i].0[t] != cubes[j].0[t] {
                        diff = Some(t);
                        count += 1;
                        if count > 1 {
                            break;
                        }
                    }
                }
                if let (1, Some(t)) = (count, diff) {
                    let merged = cubes[i].with_set(t, cubes[i].0[t].union(cubes[j].0[t]));
                    cubes[i] = merged;
                    cubes.remove(j);
                    changed = true;
                    break 'merge;
                }
            }
        }
        if !changed {
            break;
        }
    }
    cubes.sort();
    cubes
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub cubes: Vec<Cube>,
}

impl Transition {
    pub fn admits(&self, column: &[Letter]) -> bool {
        self.cubes.iter().any(|c| c.admits(column))
    }
}

thread_local! {
    static STATE_BUDGET: Cell<Option<usize>> = const { Cell::new(None) };
}

/// Runs `f` with a cap on the number of states any product construction on
/// this thread may create. Exceeding it yields [`Error::StateBudget`].
pub fn with_state_budget<R>(limit: Option<usize>, f: impl FnOnce() -> R) -> R {
    let previous = STATE_BUDGET.with(|b| b.replace(limit));
    let out = f();
    STATE_BUDGET.with(|b| b.set(previous));
    out
}

fn check_budget(states: usize) -> Result<()> {
    match STATE_BUDGET.with(Cell::get) {
        Some(limit) if states > limit => Err(Error::StateBudget { limit }),
        _ => Ok(()),
    }
}

/// Incremental construction of an [`Automaton`]; parallel edges are merged.
#[derive(Debug)]
pub struct Builder {
    tracks: usize,
    accepting: Vec<bool>,
    edges: BTreeMap<(usize, usize), Vec<Cube>>,
}

impl Builder {
    pub fn new(tracks: usize) -> Builder {
        Builder { tracks, accepting: Vec::new(), edges: BTreeMap::new() }
    }

    pub fn add_state(&mut self, accepting: bool) -> usize {
        self.accepting.push(accepting);
        self.accepting.len() - 1
    }

    pub fn states(&self) -> usize {
        self.accepting.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cube: Cube) {
        debug_assert_eq!(cube.tracks(), self.tracks);
        self.edges.entry((from, to)).or_default().push(cube);
    }

    pub fn add_edges(&mut self, from: usize, to: usize, cubes: impl IntoIterator<Item = Cube>) {
        self.edges.entry((from, to)).or_default().extend(cubes);
    }

    /// Convenience for hand-written figures: `cubes` are per-track strings.
    pub fn edge(&mut self, from: usize, to: usize, cubes: &[&[&str]]) -> &mut Self {
        for c in cubes {
            let cube = Cube::parse(c).expect("well-formed cube literal");
            self.add_edge(from, to, cube);
        }
        self
    }

    pub fn finish(self, initial: usize) -> Automaton {
        let transitions = self
            .edges
            .into_iter()
            .filter(|(_, c)| !c.is_empty())
            .map(|((from, to), cubes)| Transition { from, to, cubes: normalize_cubes(cubes) })
            .collect();
        let a = Automaton::assemble(self.tracks, self.accepting, initial, transitions);
        debug_assert!(a.validate_fg().is_valid(), "{:?}", a.validate_fg());
        a
    }
}

/// An eventually-always weak nondeterministic Büchi automaton.
#[derive(Clone, PartialEq, Eq)]
pub struct Automaton {
    tracks: usize,
    initial: usize,
    accepting: Vec<bool>,
    /// Sorted by `(from, to)`, one entry per pair.
    transitions: Vec<Transition>,
    /// CSR offsets into `transitions` by source state.
    offsets: Vec<usize>,
}

impl fmt::Debug for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Automaton{:?}", self.stats())
    }
}

/// Issue found by [`Automaton::validate_fg`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Issue {
    /// Edge leaving the accepting set.
    LeavesAccepting { from: usize, to: usize },
    StateOutOfRange { state: usize },
    EmptyLabel { from: usize, to: usize },
    CubeWidth { from: usize, to: usize, width: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub issues: Vec<Issue>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Stats {
    pub tracks: usize,
    pub states: usize,
    pub transitions: usize,
    pub cubes: usize,
    pub accepting: usize,
}

/// Result of an emptiness check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub empty: bool,
    pub witness: Option<UPWord>,
}

impl Automaton {
    fn assemble(tracks: usize, accepting: Vec<bool>, initial: usize, mut transitions: Vec<Transition>) -> Automaton {
        transitions.sort_by_key(|t| (t.from, t.to));
        let states = accepting.len();
        let mut offsets = vec![0usize; states + 1];
        for t in &transitions {
            offsets[t.from + 1] += 1;
        }
        for s in 0..states {
            offsets[s + 1] += offsets[s];
        }
        Automaton { tracks, initial, accepting, transitions, offsets }
    }

    /// Build from raw parts. Structural problems are errors; FG violations
    /// are allowed here and reported by [`Automaton::validate_fg`].
    pub fn from_parts(
        tracks: usize,
        states: usize,
        initial: usize,
        accepting: &[usize],
        transitions: Vec<Transition>,
    ) -> Result<Automaton> {
        if tracks == 0 {
            return Err(Error::Arity("automaton needs at least one track".into()));
        }
        if states == 0 || initial >= states {
            return Err(Error::Format(format!("initial state {initial} out of range")));
        }
        let mut acc = vec![false; states];
        for &q in accepting {
            *acc.get_mut(q).ok_or_else(|| Error::Format(format!("accepting state {q} out of range")))? = true;
        }
        let mut merged: BTreeMap<(usize, usize), Vec<Cube>> = BTreeMap::new();
        for t in transitions {
            if t.from >= states || t.to >= states {
                return Err(Error::Format(format!("transition {}->{} out of range", t.from, t.to)));
            }
            if t.cubes.is_empty() {
                return Err(Error::Format(format!("transition {}->{} has an empty label", t.from, t.to)));
            }
            if let Some(c) = t.cubes.iter().find(|c| c.tracks() != tracks) {
                return Err(Error::Arity(format!("cube of width {} in a {tracks}-track automaton", c.tracks())));
            }
            merged.entry((t.from, t.to)).or_default().extend(t.cubes);
        }
        let transitions = merged
            .into_iter()
            .map(|((from, to), cubes)| Transition { from, to, cubes: normalize_cubes(cubes) })
            .collect();
        Ok(Automaton::assemble(tracks, acc, initial, transitions))
    }

    /// The automaton with a single non-accepting state and no transitions.
    pub fn empty(tracks: usize) -> Automaton {
        Automaton::assemble(tracks, vec![false], 0, Vec::new())
    }

    pub fn tracks(&self) -> usize {
        self.tracks
    }

    pub fn states(&self) -> usize {
        self.accepting.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.states()).filter(|&q| self.accepting[q]).collect()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn out(&self, q: usize) -> &[Transition] {
        &self.transitions[self.offsets[q]..self.offsets[q + 1]]
    }

    pub fn stats(&self) -> Stats {
        Stats {
            tracks: self.tracks,
            states: self.states(),
            transitions: self.transitions.len(),
            cubes: self.transitions.iter().map(|t| t.cubes.len()).sum(),
            accepting: self.accepting.iter().filter(|&&a| a).count(),
        }
    }

    pub fn validate_fg(&self) -> Diagnostics {
        let mut issues = Vec::new();
        let n = self.states();
        if self.initial >= n {
            issues.push(Issue::StateOutOfRange { state: self.initial });
        }
        for t in &self.transitions {
            for s in [t.from, t.to] {
                if s >= n {
                    issues.push(Issue::StateOutOfRange { state: s });
                }
            }
            if t.cubes.is_empty() {
                issues.push(Issue::EmptyLabel { from: t.from, to: t.to });
            }
            for c in &t.cubes {
                if c.tracks() != self.tracks {
                    issues.push(Issue::CubeWidth { from: t.from, to: t.to, width: c.tracks() });
                }
            }
            if t.from < n && t.to < n && self.accepting[t.from] && !self.accepting[t.to] {
                issues.push(Issue::LeavesAccepting { from: t.from, to: t.to });
            }
        }
        Diagnostics { issues }
    }

    /// Accepting states from which an infinite path inside `F` starts.
    fn live_accepting(&self) -> Vec<bool> {
        let n = self.states();
        let mut live: Vec<bool> = self.accepting.clone();
        let mut degree = vec![0usize; n];
        // Predecessors inside F, stored flat: those of q are
        // preds[start[q]..start[q + 1]].
        let mut start = vec![0usize; n + 1];
        for t in &self.transitions {
            if self.accepting[t.from] && self.accepting[t.to] {
                degree[t.from] += 1;
                start[t.to + 1] += 1;
            }
        }
        for q in 0..n {
            start[q + 1] += start[q];
        }
        let mut fill = start.clone();
        let mut preds = vec![0usize; start[n]];
        for t in &self.transitions {
            if self.accepting[t.from] && self.accepting[t.to] {
                preds[fill[t.to]] = t.from;
                fill[t.to] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&q| live[q] && degree[q] == 0).collect();
        while let Some(q) = queue.pop_front() {
            live[q] = false;
            for &p in &preds[start[q]..start[q + 1]] {
                degree[p] -= 1;
                if degree[p] == 0 && live[p] {
                    queue.push_back(p);
                }
            }
        }
        live
    }

    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states()];
        seen[self.initial] = true;
        let mut stack = vec![self.initial];
        while let Some(q) = stack.pop() {
            for t in self.out(q) {
                if !seen[t.to] {
                    seen[t.to] = true;
                    stack.push(t.to);
                }
            }
        }
        seen
    }

    /// Linear-time emptiness: is a live accepting state reachable?
    pub fn is_empty(&self) -> bool {
        let live = self.live_accepting();
        let reach = self.reachable();
        !(0..self.states()).any(|q| live[q] && reach[q])
    }

    /// An accepted lasso, if any. Letters are the least admissible ones.
    pub fn witness(&self) -> Option<UPWord> {
        let live = self.live_accepting();
        let n = self.states();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[self.initial] = true;
        let mut queue = VecDeque::from([self.initial]);
        let mut target = None;
        while let Some(q) = queue.pop_front() {
            if live[q] {
                target = Some(q);
                break;
            }
            for (k, t) in self.out(q).iter().enumerate() {
                if !seen[t.to] {
                    seen[t.to] = true;
                    parent[t.to] = Some((q, k));
                    queue.push_back(t.to);
                }
            }
        }
        let target = target?;
        let mut path = Vec::new();
        let mut q = target;
        while let Some((p, k)) = parent[q] {
            path.push(&self.out(p)[k]);
            q = p;
        }
        path.reverse();

        // Walk inside the live accepting part until a state repeats.
        let mut order: HashMap<usize, usize> = HashMap::new();
        let mut walk = Vec::new();
        let mut q = target;
        while !order.contains_key(&q) {
            order.insert(q, walk.len());
            let t = self.out(q).iter().find(|t| live[t.to]).expect("live state has a live successor");
            walk.push(t);
            q = t.to;
        }
        let start = order[&q];
        let column = |t: &Transition| t.cubes[0].least_column();
        let prefix = path.iter().chain(&walk[..start]).map(|t| column(t)).collect();
        let period = walk[start..].iter().map(|t| column(t)).collect();
        Some(UPWord::new(self.tracks, prefix, period).expect("lasso columns have automaton width"))
    }

    pub fn check(&self) -> Verdict {
        let witness = self.witness();
        Verdict { empty: witness.is_none(), witness }
    }

    /// Does the automaton accept `prefix · period^ω`?
    pub fn member(&self, w: &UPWord) -> Result<bool> {
        if w.tracks() != self.tracks {
            return Err(Error::Arity(format!(
                "{}-track word against a {}-track automaton",
                w.tracks(),
                self.tracks
            )));
        }
        let p = w.prefix().len();
        let len = p + w.period().len();
        let next = |pos: usize| if pos + 1 < len { pos + 1 } else { p };
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut nodes: Vec<(usize, usize)> = Vec::new();
        let mut succ: Vec<Vec<usize>> = Vec::new();
        index.insert((self.initial, 0), 0);
        nodes.push((self.initial, 0));
        succ.push(Vec::new());
        let mut i = 0;
        while i < nodes.len() {
            let (q, pos) = nodes[i];
            let col = w.column(pos);
            for t in self.out(q) {
                if t.admits(col) {
                    let key = (t.to, next(pos));
                    let id = *index.entry(key).or_insert_with(|| {
                        nodes.push(key);
                        succ.push(Vec::new());
                        nodes.len() - 1
                    });
                    succ[i].push(id);
                }
            }
            i += 1;
        }
        // Prune dead ends among accepting nodes in the periodic part.
        let good = |id: usize| {
            let (q, pos) = nodes[id];
            self.accepting[q] && pos >= p
        };
        let m = nodes.len();
        let mut alive: Vec<bool> = (0..m).map(good).collect();
        let mut degree = vec![0usize; m];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m];
        for a in 0..m {
            if alive[a] {
                for &b in &succ[a] {
                    if alive[b] {
                        degree[a] += 1;
                        preds[b].push(a);
                    }
                }
            }
        }
        let mut queue: VecDeque<usize> = (0..m).filter(|&a| alive[a] && degree[a] == 0).collect();
        while let Some(a) = queue.pop_front() {
            alive[a] = false;
            for &b in &preds[a] {
                degree[b] -= 1;
                if degree[b] == 0 && alive[b] {
                    queue.push_back(b);
                }
            }
        }
        Ok(alive.into_iter().any(|x| x))
    }

    /// Removes states that are unreachable or cannot reach a live accepting
    /// cycle. The initial state becomes state 0.
    pub fn trim(&self) -> Automaton {
        let n = self.states();
        let live = self.live_accepting();
        let reach = self.reachable();
        let mut useful = vec![false; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for t in &self.transitions {
            preds[t.to].push(t.from);
        }
        let mut stack: Vec<usize> = (0..n).filter(|&q| live[q] && reach[q]).collect();
        for &q in &stack {
            useful[q] = true;
        }
        while let Some(q) = stack.pop() {
            for &p in &preds[q] {
                if !useful[p] && reach[p] {
                    useful[p] = true;
                    stack.push(p);
                }
            }
        }
        if !useful[self.initial] {
            return Automaton::empty(self.tracks);
        }
        let mut renum = vec![usize::MAX; n];
        let mut accepting = Vec::new();
        renum[self.initial] = 0;
        accepting.push(self.accepting[self.initial]);
        for q in 0..n {
            if useful[q] && q != self.initial {
                renum[q] = accepting.len();
                accepting.push(self.accepting[q]);
            }
        }
        let transitions = self
            .transitions
            .iter()
            .filter(|t| useful[t.from] && useful[t.to])
            .map(|t| Transition { from: renum[t.from], to: renum[t.to], cubes: t.cubes.clone() })
            .collect();
        Automaton::assemble(self.tracks, accepting, 0, transitions)
    }

    /// Graphviz rendering for small automata.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph wnba {\n  rankdir=LR;\n  init [shape=point];\n");
        for q in 0..self.states() {
            let shape = if self.accepting[q] { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  q{q} [shape={shape}];");
        }
        let _ = writeln!(s, "  init -> q{};", self.initial);
        for t in &self.transitions {
            let label: Vec<String> = t.cubes.iter().map(|c| format!("[{}]", c.strings().join(","))).collect();
            let _ = writeln!(s, "  q{} -> q{} [label=\"{}\"];", t.from, t.to, label.join(" "));
        }
        s.push_str("}\n");
        s
    }

    /// Applies `f` to every cube, dropping transitions whose label vanishes.
    fn map_cubes(&self, tracks: usize, f: impl Fn(&Transition, &Cube) -> Option<Cube>) -> Automaton {
        let transitions = self
            .transitions
            .iter()
            .filter_map(|t| {
                let cubes: Vec<Cube> = t.cubes.iter().filter_map(|c| f(t, c)).collect();
                (!cubes.is_empty()).then(|| Transition { from: t.from, to: t.to, cubes: normalize_cubes(cubes) })
            })
            .collect();
        let out = Automaton::assemble(tracks, self.accepting.clone(), self.initial, transitions);
        debug_assert!(!self.validate_fg().is_valid() || out.validate_fg().is_valid());
        out
    }

    /// Relabels the sign letters of track `track` (1-based) on transitions
    /// leaving the initial state. Negates that track when the initial state
    /// is only visited at position 0.
    pub fn swap_initial_signs(&self, track: usize) -> Result<Automaton> {
        check_track(track, self.tracks)?;
        let a = self.detach_initial();
        let init = a.initial;
        Ok(a.map_cubes(a.tracks, |t, c| {
            if t.from != init {
                return Some(c.clone());
            }
            Some(c.with_set(track - 1, c.0[track - 1].swap_signs()))
        }))
    }

    /// Equivalent automaton whose initial state has no incoming transitions.
    pub fn detach_initial(&self) -> Automaton {
        if !self.transitions.iter().any(|t| t.to == self.initial) {
            return self.clone();
        }
        let fresh = self.states();
        let mut accepting = self.accepting.clone();
        accepting.push(self.accepting[self.initial]);
        let mut transitions = self.transitions.clone();
        for t in self.out(self.initial) {
            transitions.push(Transition { from: fresh, to: t.to, cubes: t.cubes.clone() });
        }
        Automaton::assemble(self.tracks, accepting, fresh, transitions).trim()
    }
}

fn check_track(track: usize, tracks: usize) -> Result<()> {
    if track == 0 || track > tracks {
        Err(Error::Arity(format!("track {track} outside 1..={tracks}")))
    } else {
        Ok(())
    }
}

fn same_tracks(a: &Automaton, b: &Automaton) -> Result<()> {
    if a.tracks != b.tracks {
        Err(Error::Arity(format!("{}-track vs {}-track automaton", a.tracks, b.tracks)))
    } else {
        Ok(())
    }
}

/// Reachable synchronous product; `label` combines a pair of labels.
fn product(
    a: &Automaton,
    b: &Automaton,
    tracks: usize,
    label: impl Fn(&[Cube], &[Cube]) -> Vec<Cube>,
) -> Result<Automaton> {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut pairs = vec![(a.initial, b.initial)];
    index.insert((a.initial, b.initial), 0);
    let mut accepting = Vec::new();
    let mut transitions = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let (qa, qb) = pairs[i];
        accepting.push(a.accepting[qa] && b.accepting[qb]);
        let mut local: BTreeMap<usize, Vec<Cube>> = BTreeMap::new();
        for ta in a.out(qa) {
            for tb in b.out(qb) {
                let cubes = label(&ta.cubes, &tb.cubes);
                if cubes.is_empty() {
                    continue;
                }
                let key = (ta.to, tb.to);
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        pairs.push(key);
                        check_budget(pairs.len())?;
                        index.insert(key, pairs.len() - 1);
                        pairs.len() - 1
                    }
                };
                local.entry(id).or_default().extend(cubes);
            }
        }
        for (to, cubes) in local {
            transitions.push(Transition { from: i, to, cubes: normalize_cubes(cubes) });
        }
        i += 1;
    }
    let out = reduce(&Automaton::assemble(tracks, accepting, 0, transitions).trim());
    debug_assert!(out.validate_fg().is_valid(), "product broke FG discipline");
    Ok(out)
}

/// Intersection by the plain product with accepting set `F_a × F_b`.
pub fn intersect(a: &Automaton, b: &Automaton) -> Result<Automaton> {
    same_tracks(a, b)?;
    product(a, b, a.tracks, |ca, cb| {
        let mut out = Vec::new();
        for x in ca {
            for y in cb {
                if let Some(c) = x.intersect(y) {
                    out.push(c);
                }
            }
        }
        out
    })
}

/// Intersection of a nonempty list, left to right.
pub fn intersect_all<'a>(parts: impl IntoIterator<Item = &'a Automaton>) -> Result<Automaton> {
    let mut it = parts.into_iter();
    let first = it.next().ok_or_else(|| Error::Input("intersection of no automata".into()))?;
    let mut acc = first.clone();
    for p in it {
        acc = intersect(&acc, p)?;
    }
    Ok(acc)
}

/// Union through a fresh non-accepting initial state.
pub fn union(a: &Automaton, b: &Automaton) -> Result<Automaton> {
    same_tracks(a, b)?;
    let off_a = 1;
    let off_b = 1 + a.states();
    let mut accepting = vec![false];
    accepting.extend_from_slice(&a.accepting);
    accepting.extend_from_slice(&b.accepting);
    let mut transitions = Vec::with_capacity(a.transitions.len() + b.transitions.len() + 4);
    for (m, off) in [(a, off_a), (b, off_b)] {
        for t in &m.transitions {
            transitions.push(Transition { from: t.from + off, to: t.to + off, cubes: t.cubes.clone() });
        }
        for t in m.out(m.initial) {
            transitions.push(Transition { from: 0, to: t.to + off, cubes: t.cubes.clone() });
        }
    }
    let states = accepting.len();
    let merged = Automaton::from_parts(
        a.tracks,
        states,
        0,
        &(0..states).filter(|&q| accepting[q]).collect::<Vec<_>>(),
        transitions,
    )?;
    Ok(merged.trim())
}

pub fn union_all<'a>(parts: impl IntoIterator<Item = &'a Automaton>) -> Result<Automaton> {
    let mut it = parts.into_iter();
    let first = it.next().ok_or_else(|| Error::Input("union of no automata".into()))?;
    let mut acc = first.clone();
    for p in it {
        acc = union(&acc, p)?;
    }
    Ok(acc)
}

/// Pointwise projection: result track `n` carries source track `pi[n]`
/// (1-based). Tracks may be dropped, duplicated or reordered.
pub fn project(a: &Automaton, pi: &[usize]) -> Result<Automaton> {
    if pi.is_empty() {
        return Err(Error::Arity("projection onto no tracks".into()));
    }
    for &i in pi {
        check_track(i, a.tracks)?;
    }
    Ok(a.map_cubes(pi.len(), |_, c| Some(Cube::from_sets(pi.iter().map(|&i| c.0[i - 1]).collect()))))
}

/// Cartesian product: tracks of `a` followed by tracks of `b`.
pub fn cartesian(a: &Automaton, b: &Automaton) -> Result<Automaton> {
    product(a, b, a.tracks + b.tracks, |ca, cb| {
        let mut out = Vec::with_capacity(ca.len() * cb.len());
        for x in ca {
            for y in cb {
                out.push(x.concat(y));
            }
        }
        out
    })
}

/// Lift to `tracks` tracks: source track `t` (1-based) goes to `map[t-1]`,
/// all other tracks accept any letter.
pub fn embed(a: &Automaton, tracks: usize, map: &[usize]) -> Result<Automaton> {
    if map.len() != a.tracks {
        return Err(Error::Arity(format!("embedding map of length {} for {} tracks", map.len(), a.tracks)));
    }
    let mut used = vec![false; tracks + 1];
    for &t in map {
        check_track(t, tracks)?;
        if std::mem::replace(&mut used[t], true) {
            return Err(Error::Arity(format!("embedding map is not injective at track {t}")));
        }
    }
    Ok(a.map_cubes(tracks, |_, c| {
        let mut sets = vec![LetterSet::ALL; tracks];
        for (src, &dst) in map.iter().enumerate() {
            sets[dst - 1] = c.0[src];
        }
        Some(Cube::from_sets(sets))
    }))
}

/// Relation composition `R(a) ∘_k R(b)`: the last `k` tracks of `a` are
/// identified, up to numeric equality, with the first `k` tracks of `b`.
pub fn compose(a: &Automaton, b: &Automaton, k: usize) -> Result<Automaton> {
    let (ka, kb) = (a.tracks, b.tracks);
    if k > ka.min(kb) {
        return Err(Error::Arity(format!("overlap {k} exceeds track counts {ka}, {kb}")));
    }
    if ka + kb == 2 * k {
        return Err(Error::Arity("composition would leave no tracks".into()));
    }
    let left = cartesian(a, &relations::wf(kb)?)?;
    let right = cartesian(&relations::wf(ka)?, b)?;
    let mut glued = left;
    for i in 1..=k {
        glued = intersect(&glued, &relations::equality(ka + kb, ka - k + i, ka + i)?)?;
    }
    glued = intersect(&glued, &right)?;
    let keep: Vec<usize> = (1..=ka - k).chain(ka + k + 1..=ka + kb).collect();
    Ok(saturate_leading_zeros(&project(&glued, &keep)?))
}

/// Closes the language under removal of leading all-zero columns right after
/// the sign column: accepts `s·u` whenever some `s·0^n·u` is accepted.
///
/// For languages of well-formed words this keeps the denoted relation of
/// numbers and makes it independent of the shared integer width, which
/// matters after tracks holding intermediate values were projected away.
pub fn saturate_leading_zeros(a: &Automaton) -> Automaton {
    let a = a.detach_initial();
    let zero: Column = vec![Letter::Zero; a.tracks];
    let mut extra = Vec::new();
    for t in a.out(a.initial) {
        let mut seen = vec![false; a.states()];
        seen[t.to] = true;
        let mut stack = vec![t.to];
        while let Some(q) = stack.pop() {
            for u in a.out(q) {
                if !seen[u.to] && u.admits(&zero) {
                    seen[u.to] = true;
                    stack.push(u.to);
                    extra.push(Transition { from: a.initial, to: u.to, cubes: t.cubes.clone() });
                }
            }
        }
    }
    if extra.is_empty() {
        return a;
    }
    let mut transitions = a.transitions.clone();
    transitions.extend(extra);
    let acc = a.accepting_states();
    let saturated = Automaton::from_parts(a.tracks, a.states(), a.initial, &acc, transitions)
        .expect("saturation keeps the structure valid");
    reduce(&saturated.trim())
}

/// Canonical form of a label for comparing transitions: explicit letter
/// bitsets for narrow automata, normalised cubes otherwise.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum LabelKey {
    Letters(Vec<u64>),
    Cubes(Vec<Cube>),
}

const EXPLICIT_TRACKS: usize = 5;

fn label_key(tracks: usize, cubes: &[Cube]) -> LabelKey {
    if tracks > EXPLICIT_TRACKS {
        return LabelKey::Cubes(normalize_cubes(cubes.to_vec()));
    }
    let size = 5usize.pow(tracks as u32);
    let mut bits = vec![0u64; size.div_ceil(64)];
    for c in cubes {
        let mut codes = vec![0usize];
        let mut scale = 1;
        for s in c.sets() {
            let mut next = Vec::with_capacity(codes.len() * 5);
            for l in s.letters() {
                for &code in &codes {
                    next.push(code + scale * l.index() as usize);
                }
            }
            codes = next;
            scale *= 5;
        }
        for code in codes {
            bits[code / 64] |= 1 << (code % 64);
        }
    }
    LabelKey::Letters(bits)
}

/// Quotient by the coarsest forward bisimulation that respects acceptance.
/// The language is unchanged.
pub fn reduce(a: &Automaton) -> Automaton {
    let n = a.states();
    let mut class: Vec<usize> = a.accepting.iter().map(|&f| f as usize).collect();
    let mut count = class.iter().copied().max().map_or(0, |m| m + 1);
    let mut signatures: Vec<Vec<(usize, LabelKey)>> = vec![Vec::new(); n];
    loop {
        let mut index: HashMap<(usize, &[(usize, LabelKey)]), usize> = HashMap::new();
        for (q, sig) in signatures.iter_mut().enumerate() {
            let mut by_class: BTreeMap<usize, Vec<Cube>> = BTreeMap::new();
            for t in a.out(q) {
                by_class.entry(class[t.to]).or_default().extend(t.cubes.iter().cloned());
            }
            *sig = by_class.into_iter().map(|(c, cubes)| (c, label_key(a.tracks, &cubes))).collect();
        }
        let mut next = vec![0; n];
        for q in 0..n {
            let id = index.len();
            next[q] = *index.entry((class[q], &signatures[q])).or_insert(id);
        }
        let fresh = index.len();
        drop(index);
        class = next;
        if fresh == count {
            break;
        }
        count = fresh;
    }
    if count == n {
        return a.clone();
    }
    let mut rep = vec![usize::MAX; count];
    for q in 0..n {
        if rep[class[q]] == usize::MAX {
            rep[class[q]] = q;
        }
    }
    let accepting = rep.iter().map(|&q| a.accepting[q]).collect();
    let mut transitions = Vec::new();
    for (c, &q) in rep.iter().enumerate() {
        let mut by_class: BTreeMap<usize, Vec<Cube>> = BTreeMap::new();
        for t in a.out(q) {
            by_class.entry(class[t.to]).or_default().extend(t.cubes.iter().cloned());
        }
        for (to, cubes) in by_class {
            transitions.push(Transition { from: c, to, cubes: normalize_cubes(cubes) });
        }
    }
    Automaton::assemble(a.tracks, accepting, class[a.initial], transitions).trim()
}

/// Free-function forms matching the operation names used elsewhere.
pub fn is_empty(a: &Automaton) -> bool {
    a.is_empty()
}

pub fn witness(a: &Automaton) -> Option<UPWord> {
    a.witness()
}

pub fn member(a: &Automaton, w: &UPWord) -> Result<bool> {
    a.member(w)
}

pub fn trim(a: &Automaton) -> Automaton {
    a.trim()
}

pub fn validate_fg(a: &Automaton) -> Diagnostics {
    a.validate_fg()
}
