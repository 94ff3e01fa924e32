//! Game structures, selectors, valuations and the structural queries the
//! solvers build on.
//!
//! States and moves carry string ids but are addressed by dense indices;
//! index order is declaration order, and every tie-break in the crate
//! inherits it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{usage, Error, Result};
use crate::rational::{format_rational, is_positive, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::One => write!(f, "player 1"),
            Player::Two => write!(f, "player 2"),
        }
    }
}

/// Set of state indices over a fixed universe `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    members: Vec<bool>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet {
            members: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        StateSet {
            members: vec![true; n],
        }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut set = StateSet::empty(n);
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn from_mask(members: Vec<bool>) -> Self {
        StateSet { members }
    }

    pub fn universe(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, s: usize) -> bool {
        self.members.get(s).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, s: usize) -> bool {
        let was = self.members[s];
        self.members[s] = true;
        !was
    }

    pub fn remove(&mut self, s: usize) -> bool {
        let was = self.members[s];
        self.members[s] = false;
        was
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn complement(&self) -> StateSet {
        StateSet {
            members: self.members.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &StateSet) -> StateSet {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &StateSet) -> StateSet {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    fn zip(&self, other: &StateSet, f: impl Fn(bool, bool) -> bool) -> StateSet {
        assert_eq!(self.universe(), other.universe(), "state sets over different universes");
        StateSet {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl fmt::Debug for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Probability distribution over state indices. Entries are kept sorted by
/// state index; validation rejects zero, negative and duplicate entries.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Distribution {
    entries: Vec<(usize, Rational)>,
}

impl Distribution {
    pub fn new(mut entries: Vec<(usize, Rational)>) -> Self {
        entries.sort_by_key(|(t, _)| *t);
        Distribution { entries }
    }

    pub fn point(t: usize) -> Self {
        Distribution {
            entries: vec![(t, Rational::one())],
        }
    }

    pub fn uniform(targets: &[usize]) -> Self {
        let p = Rational::new(1.into(), (targets.len() as i64).into());
        Distribution::new(targets.iter().map(|&t| (t, p.clone())).collect())
    }

    /// Weighted sum of distributions; zero-weight terms are skipped.
    pub fn mix<'a>(parts: impl IntoIterator<Item = (&'a Rational, &'a Distribution)>) -> Self {
        let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
        for (w, d) in parts {
            if w.is_zero() {
                continue;
            }
            for (t, p) in &d.entries {
                *acc.entry(*t).or_insert_with(Rational::zero) += w * p;
            }
        }
        Distribution {
            entries: acc.into_iter().filter(|(_, p)| !p.is_zero()).collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, Rational)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(t, _)| *t)
    }

    pub fn prob(&self, t: usize) -> Rational {
        self.entries
            .iter()
            .find(|(u, _)| *u == t)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn expectation(&self, values: &[Rational]) -> Rational {
        self.entries.iter().map(|(t, p)| p * &values[*t]).sum()
    }

    fn check(&self, n: usize, state: &str, at: &str, out: &mut Vec<Violation>) {
        let mut seen = HashSet::new();
        for (t, p) in &self.entries {
            if *t >= n {
                out.push(Violation::new(
                    ViolationKind::UnknownState,
                    state,
                    format!("{at}: successor index {t} out of range"),
                ));
            }
            if !seen.insert(*t) {
                out.push(Violation::new(
                    ViolationKind::DuplicateSuccessor,
                    state,
                    format!("{at}: successor index {t} listed twice"),
                ));
            }
            if !is_positive(p) {
                out.push(Violation::new(
                    ViolationKind::NonPositiveProbability,
                    state,
                    format!("{at}: probability {} is not positive", format_rational(p)),
                ));
            }
        }
        let total = self.total();
        if !total.is_one() {
            out.push(Violation::new(
                ViolationKind::DistributionSum,
                state,
                format!("{at}: distribution sum {} != 1", format_rational(&total)),
            ));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    DuplicateId,
    EmptyMoveSet,
    DuplicateMove,
    MissingTransition,
    UnknownState,
    DuplicateSuccessor,
    NonPositiveProbability,
    DistributionSum,
    NoOutgoingEdge,
    SupportMismatch,
    UnexpectedDistribution,
    InvalidSelector,
}

impl ViolationKind {
    pub fn rule(self) -> &'static str {
        match self {
            ViolationKind::DuplicateId => "duplicate id",
            ViolationKind::EmptyMoveSet => "empty move set",
            ViolationKind::DuplicateMove => "duplicate move",
            ViolationKind::MissingTransition => "missing transition",
            ViolationKind::UnknownState => "unknown state",
            ViolationKind::DuplicateSuccessor => "duplicate successor",
            ViolationKind::NonPositiveProbability => "non-positive probability",
            ViolationKind::DistributionSum => "distribution sum != 1",
            ViolationKind::NoOutgoingEdge => "no outgoing edge",
            ViolationKind::SupportMismatch => "distribution support != edges",
            ViolationKind::UnexpectedDistribution => "distribution on non-random state",
            ViolationKind::InvalidSelector => "invalid selector",
        }
    }
}

/// One broken invariant, naming the state (and move pair, when relevant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub state: String,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, state: &str, detail: String) -> Self {
        Violation {
            kind,
            state: state.to_string(),
            detail,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] state {}: {}", self.kind.rule(), self.state, self.detail)
    }
}

fn build_index(states: &[String]) -> HashMap<String, usize> {
    let mut index = HashMap::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        index.entry(s.clone()).or_insert(i);
    }
    index
}

fn duplicate_ids(states: &[String], out: &mut Vec<Violation>) {
    let mut seen = HashSet::new();
    for s in states {
        if !seen.insert(s.as_str()) {
            out.push(Violation::new(
                ViolationKind::DuplicateId,
                s,
                "state id declared more than once".into(),
            ));
        }
    }
}

/// Concurrent game: both players choose simultaneously, the pair fixes a
/// distribution over successors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcurrentGame {
    states: Vec<String>,
    index: HashMap<String, usize>,
    moves1: Vec<Vec<String>>,
    moves2: Vec<Vec<String>>,
    /// `delta[s][a][b]`
    delta: Vec<Vec<Vec<Distribution>>>,
}

impl ConcurrentGame {
    /// Assembles a game without checking it; see [`ConcurrentGame::validate`].
    pub fn from_parts(
        states: Vec<String>,
        moves1: Vec<Vec<String>>,
        moves2: Vec<Vec<String>>,
        delta: Vec<Vec<Vec<Distribution>>>,
    ) -> Self {
        let index = build_index(&states);
        ConcurrentGame {
            states,
            index,
            moves1,
            moves2,
            delta,
        }
    }

    /// Assembles and validates.
    pub fn new(
        states: Vec<String>,
        moves1: Vec<Vec<String>>,
        moves2: Vec<Vec<String>>,
        delta: Vec<Vec<Vec<Distribution>>>,
    ) -> Result<Self> {
        let g = Self::from_parts(states, moves1, moves2, delta);
        let v = g.validate();
        if v.is_empty() {
            Ok(g)
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn builder() -> ConcurrentGameBuilder {
        ConcurrentGameBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_id(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn moves(&self, player: Player, s: usize) -> &[String] {
        match player {
            Player::One => &self.moves1[s],
            Player::Two => &self.moves2[s],
        }
    }

    pub fn moves1(&self, s: usize) -> &[String] {
        &self.moves1[s]
    }

    pub fn moves2(&self, s: usize) -> &[String] {
        &self.moves2[s]
    }

    pub fn move_index(&self, player: Player, s: usize, name: &str) -> Option<usize> {
        self.moves(player, s).iter().position(|m| m == name)
    }

    /// Unchecked transition lookup; the game must be valid.
    pub fn transition(&self, s: usize, a: usize, b: usize) -> &Distribution {
        &self.delta[s][a][b]
    }

    pub fn delta(&self) -> &[Vec<Vec<Distribution>>] {
        &self.delta
    }

    /// `Dest(s, a, b)`: the support of `delta(s, a, b)`.
    pub fn dest(&self, s: usize, a: usize, b: usize) -> Result<Vec<usize>> {
        if s >= self.num_states() {
            return usage(format!("unknown state index {s}"));
        }
        if a >= self.moves1[s].len() || b >= self.moves2[s].len() {
            return usage(format!(
                "move pair ({a}, {b}) not available at state {}",
                self.states[s]
            ));
        }
        Ok(self.delta[s][a][b].support().collect())
    }

    /// Possible successors of `s` when both players follow the given selectors.
    pub fn dest_selectors(&self, s: usize, xi1: &Selector, xi2: &Selector) -> Result<Vec<usize>> {
        check_selector_at(self, xi1, Player::One, s)?;
        check_selector_at(self, xi2, Player::Two, s)?;
        let mut out = std::collections::BTreeSet::new();
        for a in xi1.support(s) {
            for b in xi2.support(s) {
                out.extend(self.delta[s][a][b].support());
            }
        }
        Ok(out.into_iter().collect())
    }

    /// All violated invariants; empty iff the game is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.states.len();
        duplicate_ids(&self.states, &mut out);
        if self.moves1.len() != n || self.moves2.len() != n || self.delta.len() != n {
            out.push(Violation::new(
                ViolationKind::MissingTransition,
                "*",
                "move or transition tables do not cover every state".into(),
            ));
            return out;
        }
        for s in 0..n {
            let id = &self.states[s];
            for (player, moves) in [(Player::One, &self.moves1[s]), (Player::Two, &self.moves2[s])] {
                if moves.is_empty() {
                    out.push(Violation::new(
                        ViolationKind::EmptyMoveSet,
                        id,
                        format!("{player} has no moves"),
                    ));
                }
                let mut seen = HashSet::new();
                for m in moves {
                    if !seen.insert(m) {
                        out.push(Violation::new(
                            ViolationKind::DuplicateMove,
                            id,
                            format!("{player} move {m} listed twice"),
                        ));
                    }
                }
            }
            for (a, ma) in self.moves1[s].iter().enumerate() {
                for (b, mb) in self.moves2[s].iter().enumerate() {
                    match self.delta[s].get(a).and_then(|row| row.get(b)) {
                        None => out.push(Violation::new(
                            ViolationKind::MissingTransition,
                            id,
                            format!("no distribution for moves ({ma}, {mb})"),
                        )),
                        Some(d) => d.check(n, id, &format!("moves ({ma}, {mb})"), &mut out),
                    }
                }
            }
        }
        out
    }

    /// Exchanges the roles of the two players.
    pub fn swap_players(&self) -> ConcurrentGame {
        let delta = self
            .delta
            .iter()
            .enumerate()
            .map(|(s, rows)| {
                (0..self.moves2[s].len())
                    .map(|b| (0..self.moves1[s].len()).map(|a| rows[a][b].clone()).collect())
                    .collect()
            })
            .collect();
        ConcurrentGame::from_parts(
            self.states.clone(),
            self.moves2.clone(),
            self.moves1.clone(),
            delta,
        )
    }

    /// True if every state gives `player` a single move.
    pub fn is_singleton_for(&self, player: Player) -> bool {
        (0..self.num_states()).all(|s| self.moves(player, s).len() == 1)
    }
}

/// Builder keyed by string ids; targets may be referenced before they are declared.
#[derive(Default)]
pub struct ConcurrentGameBuilder {
    states: Vec<(String, Vec<String>, Vec<String>)>,
    transitions: Vec<(String, String, String, Vec<(String, Rational)>)>,
}

impl ConcurrentGameBuilder {
    pub fn state(&mut self, id: &str, moves1: &[&str], moves2: &[&str]) -> &mut Self {
        self.states.push((
            id.to_string(),
            moves1.iter().map(|m| m.to_string()).collect(),
            moves2.iter().map(|m| m.to_string()).collect(),
        ));
        self
    }

    /// Single-move-pair absorbing state.
    pub fn absorbing(&mut self, id: &str) -> &mut Self {
        self.state(id, &["_"], &["_"]);
        self.transition(id, "_", "_", &[(id, Rational::one())])
    }

    pub fn transition(
        &mut self,
        state: &str,
        m1: &str,
        m2: &str,
        dist: &[(&str, Rational)],
    ) -> &mut Self {
        self.transitions.push((
            state.to_string(),
            m1.to_string(),
            m2.to_string(),
            dist.iter().map(|(t, p)| (t.to_string(), p.clone())).collect(),
        ));
        self
    }

    pub fn build(&self) -> Result<ConcurrentGame> {
        let states: Vec<String> = self.states.iter().map(|(s, _, _)| s.clone()).collect();
        let index = build_index(&states);
        let moves1: Vec<Vec<String>> = self.states.iter().map(|(_, m, _)| m.clone()).collect();
        let moves2: Vec<Vec<String>> = self.states.iter().map(|(_, _, m)| m.clone()).collect();
        let mut table: Vec<Vec<Vec<Option<Distribution>>>> = (0..states.len())
            .map(|s| vec![vec![None; moves2[s].len()]; moves1[s].len()])
            .collect();
        for (s, m1, m2, dist) in &self.transitions {
            let si = *index
                .get(s)
                .ok_or_else(|| Error::Usage(format!("transition from undeclared state {s}")))?;
            let a = moves1[si]
                .iter()
                .position(|m| m == m1)
                .ok_or_else(|| Error::Usage(format!("unknown player-1 move {m1} at {s}")))?;
            let b = moves2[si]
                .iter()
                .position(|m| m == m2)
                .ok_or_else(|| Error::Usage(format!("unknown player-2 move {m2} at {s}")))?;
            let mut entries = Vec::new();
            for (t, p) in dist {
                let ti = *index
                    .get(t)
                    .ok_or_else(|| Error::Usage(format!("unknown successor {t} from {s}")))?;
                entries.push((ti, p.clone()));
            }
            table[si][a][b] = Some(Distribution::new(entries));
        }
        let mut missing = Vec::new();
        let delta = table
            .into_iter()
            .enumerate()
            .map(|(s, rows)| {
                rows.into_iter()
                    .enumerate()
                    .map(|(a, row)| {
                        row.into_iter()
                            .enumerate()
                            .map(|(b, d)| {
                                d.unwrap_or_else(|| {
                                    missing.push(Violation::new(
                                        ViolationKind::MissingTransition,
                                        &states[s],
                                        format!(
                                            "no distribution for moves ({}, {})",
                                            moves1[s][a], moves2[s][b]
                                        ),
                                    ));
                                    Distribution::default()
                                })
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        if !missing.is_empty() {
            return Err(Error::Invalid(missing));
        }
        ConcurrentGame::new(states, moves1, moves2, delta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    Player1,
    Player2,
    Random,
}

/// Turn-based stochastic game: each state belongs to one player or to chance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurnBasedGame {
    states: Vec<String>,
    index: HashMap<String, usize>,
    owner: Vec<Owner>,
    edges: Vec<Vec<usize>>,
    dist: Vec<Option<Distribution>>,
}

/// Move name used for the side that has no choice when a turn-based game is
/// viewed as a concurrent one.
pub const PASS_MOVE: &str = "_";

impl TurnBasedGame {
    pub fn from_parts(
        states: Vec<String>,
        owner: Vec<Owner>,
        edges: Vec<Vec<usize>>,
        dist: Vec<Option<Distribution>>,
    ) -> Self {
        let index = build_index(&states);
        TurnBasedGame {
            states,
            index,
            owner,
            edges,
            dist,
        }
    }

    pub fn new(
        states: Vec<String>,
        owner: Vec<Owner>,
        edges: Vec<Vec<usize>>,
        dist: Vec<Option<Distribution>>,
    ) -> Result<Self> {
        let g = Self::from_parts(states, owner, edges, dist);
        let v = g.validate();
        if v.is_empty() {
            Ok(g)
        } else {
            Err(Error::Invalid(v))
        }
    }

    pub fn builder() -> TurnBasedGameBuilder {
        TurnBasedGameBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_id(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn owner(&self, s: usize) -> Owner {
        self.owner[s]
    }

    pub fn edges(&self, s: usize) -> &[usize] {
        &self.edges[s]
    }

    /// Distribution at a random state, `None` elsewhere.
    pub fn distribution(&self, s: usize) -> Option<&Distribution> {
        self.dist[s].as_ref()
    }

    pub fn states_owned_by(&self, owner: Owner) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_states()).filter(move |&s| self.owner[s] == owner)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.states.len();
        duplicate_ids(&self.states, &mut out);
        if self.owner.len() != n || self.edges.len() != n || self.dist.len() != n {
            out.push(Violation::new(
                ViolationKind::MissingTransition,
                "*",
                "owner, edge or distribution tables do not cover every state".into(),
            ));
            return out;
        }
        for s in 0..n {
            let id = &self.states[s];
            if self.edges[s].is_empty() {
                out.push(Violation::new(
                    ViolationKind::NoOutgoingEdge,
                    id,
                    "no outgoing edge".into(),
                ));
            }
            let mut seen = HashSet::new();
            for &t in &self.edges[s] {
                if t >= n {
                    out.push(Violation::new(
                        ViolationKind::UnknownState,
                        id,
                        format!("edge to index {t} out of range"),
                    ));
                }
                if !seen.insert(t) {
                    out.push(Violation::new(
                        ViolationKind::DuplicateSuccessor,
                        id,
                        format!("edge to index {t} listed twice"),
                    ));
                }
            }
            match (self.owner[s], &self.dist[s]) {
                (Owner::Random, None) => out.push(Violation::new(
                    ViolationKind::MissingTransition,
                    id,
                    "random state without a distribution".into(),
                )),
                (Owner::Random, Some(d)) => {
                    d.check(n, id, "distribution", &mut out);
                    let support: HashSet<usize> = d.support().collect();
                    if support != seen {
                        out.push(Violation::new(
                            ViolationKind::SupportMismatch,
                            id,
                            "distribution support differs from the edge set".into(),
                        ));
                    }
                }
                (_, Some(_)) => out.push(Violation::new(
                    ViolationKind::UnexpectedDistribution,
                    id,
                    "only random states carry a distribution".into(),
                )),
                (_, None) => {}
            }
        }
        out
    }

    /// The same game as a concurrent game. The owning player's moves are the
    /// successor ids in edge order; the other side gets the single move `_`.
    pub fn to_concurrent(&self) -> ConcurrentGame {
        let n = self.num_states();
        let pass = || vec![PASS_MOVE.to_string()];
        let mut moves1 = Vec::with_capacity(n);
        let mut moves2 = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        for s in 0..n {
            let succ: Vec<String> = self.edges[s].iter().map(|&t| self.states[t].clone()).collect();
            match self.owner[s] {
                Owner::Player1 => {
                    moves1.push(succ);
                    moves2.push(pass());
                    delta.push(self.edges[s].iter().map(|&t| vec![Distribution::point(t)]).collect());
                }
                Owner::Player2 => {
                    moves1.push(pass());
                    moves2.push(succ);
                    delta.push(vec![self.edges[s].iter().map(|&t| Distribution::point(t)).collect()]);
                }
                Owner::Random => {
                    moves1.push(pass());
                    moves2.push(pass());
                    let d = self.dist[s].clone().unwrap_or_default();
                    delta.push(vec![vec![d]]);
                }
            }
        }
        ConcurrentGame::from_parts(self.states.clone(), moves1, moves2, delta)
    }

    /// Selector on [`TurnBasedGame::to_concurrent`] for `player`: the chosen
    /// edge at their own states (first edge where undefined), the pass move
    /// elsewhere.
    pub fn selector_from(&self, player: Player, choice: &PartialSelector) -> Selector {
        let own = match player {
            Player::One => Owner::Player1,
            Player::Two => Owner::Player2,
        };
        let choices: Vec<usize> = (0..self.num_states())
            .map(|s| {
                if self.owner[s] == own {
                    choice.get(s).unwrap_or(0)
                } else {
                    0
                }
            })
            .collect();
        Selector::pure(player, &choices)
    }

    /// Binary: every random state has at most two successors, uniform when two.
    pub fn is_binary(&self) -> bool {
        let half = Rational::new(1.into(), 2.into());
        (0..self.num_states()).all(|s| match (self.owner[s], &self.dist[s]) {
            (Owner::Random, Some(d)) => match d.entries().len() {
                1 => true,
                2 => d.entries().iter().all(|(_, p)| *p == half),
                _ => false,
            },
            _ => true,
        })
    }
}

#[derive(Default)]
pub struct TurnBasedGameBuilder {
    states: Vec<(String, Owner, Vec<String>, Option<Vec<(String, Rational)>>)>,
}

impl TurnBasedGameBuilder {
    pub fn player(&mut self, id: &str, owner: Owner, succ: &[&str]) -> &mut Self {
        self.states.push((
            id.to_string(),
            owner,
            succ.iter().map(|t| t.to_string()).collect(),
            None,
        ));
        self
    }

    pub fn p1(&mut self, id: &str, succ: &[&str]) -> &mut Self {
        self.player(id, Owner::Player1, succ)
    }

    pub fn p2(&mut self, id: &str, succ: &[&str]) -> &mut Self {
        self.player(id, Owner::Player2, succ)
    }

    pub fn random(&mut self, id: &str, dist: &[(&str, Rational)]) -> &mut Self {
        self.states.push((
            id.to_string(),
            Owner::Random,
            dist.iter().map(|(t, _)| t.to_string()).collect(),
            Some(dist.iter().map(|(t, p)| (t.to_string(), p.clone())).collect()),
        ));
        self
    }

    pub fn build(&self) -> Result<TurnBasedGame> {
        let states: Vec<String> = self.states.iter().map(|s| s.0.clone()).collect();
        let index = build_index(&states);
        let lookup = |s: &str, t: &str| {
            index
                .get(t)
                .copied()
                .ok_or_else(|| Error::Usage(format!("unknown successor {t} from {s}")))
        };
        let mut owner = Vec::new();
        let mut edges = Vec::new();
        let mut dist = Vec::new();
        for (id, o, succ, d) in &self.states {
            owner.push(*o);
            edges.push(succ.iter().map(|t| lookup(id, t)).collect::<Result<Vec<_>>>()?);
            dist.push(match d {
                None => None,
                Some(d) => Some(Distribution::new(
                    d.iter()
                        .map(|(t, p)| Ok((lookup(id, t)?, p.clone())))
                        .collect::<Result<Vec<_>>>()?,
                )),
            });
        }
        TurnBasedGame::new(states, owner, edges, dist)
    }
}

/// Memoryless randomized strategy: per state, a distribution over the
/// player's move indices (sorted, positive entries).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector {
    player: Player,
    dist: Vec<Vec<(usize, Rational)>>,
}

impl Selector {
    pub fn new(player: Player, mut dist: Vec<Vec<(usize, Rational)>>) -> Self {
        for d in &mut dist {
            d.sort_by_key(|(a, _)| *a);
        }
        Selector { player, dist }
    }

    pub fn uniform(game: &ConcurrentGame, player: Player) -> Self {
        let dist = (0..game.num_states())
            .map(|s| {
                let k = game.moves(player, s).len();
                let p = Rational::new(1.into(), (k as i64).into());
                (0..k).map(|a| (a, p.clone())).collect()
            })
            .collect();
        Selector { player, dist }
    }

    pub fn pure(player: Player, choices: &[usize]) -> Self {
        Selector {
            player,
            dist: choices.iter().map(|&a| vec![(a, Rational::one())]).collect(),
        }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn num_states(&self) -> usize {
        self.dist.len()
    }

    pub fn at(&self, s: usize) -> &[(usize, Rational)] {
        &self.dist[s]
    }

    pub fn set(&mut self, s: usize, mut d: Vec<(usize, Rational)>) {
        d.sort_by_key(|(a, _)| *a);
        self.dist[s] = d;
    }

    pub fn support(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.dist[s].iter().map(|(a, _)| *a)
    }

    pub fn prob(&self, s: usize, a: usize) -> Rational {
        self.dist[s]
            .iter()
            .find(|(m, _)| *m == a)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Dense probability vector at `s` over `k` moves.
    pub fn dense(&self, s: usize, k: usize) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); k];
        for (a, p) in &self.dist[s] {
            v[*a] = p.clone();
        }
        v
    }

    pub fn pure_choice(&self, s: usize) -> Option<usize> {
        match self.dist[s].as_slice() {
            [(a, p)] if p.is_one() => Some(*a),
            _ => None,
        }
    }

    pub fn is_pure(&self) -> bool {
        (0..self.dist.len()).all(|s| self.pure_choice(s).is_some())
    }

    /// Violations of the selector invariants against `game`.
    pub fn validate(&self, game: &ConcurrentGame) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.dist.len() != game.num_states() {
            out.push(Violation::new(
                ViolationKind::InvalidSelector,
                "*",
                format!(
                    "selector covers {} states, game has {}",
                    self.dist.len(),
                    game.num_states()
                ),
            ));
            return out;
        }
        for s in 0..game.num_states() {
            if let Err(Error::Usage(msg)) = check_selector_at(game, self, self.player, s) {
                out.push(Violation::new(ViolationKind::InvalidSelector, game.state_id(s), msg));
            }
        }
        out
    }
}

pub(crate) fn check_selector_at(
    game: &ConcurrentGame,
    sel: &Selector,
    player: Player,
    s: usize,
) -> Result<()> {
    if sel.player != player {
        return usage(format!("expected a {player} selector, got a {} selector", sel.player));
    }
    if s >= sel.dist.len() || s >= game.num_states() {
        return usage(format!("selector undefined at state index {s}"));
    }
    let k = game.moves(player, s).len();
    let d = &sel.dist[s];
    let mut total = Rational::zero();
    let mut last = None;
    for (a, p) in d {
        if *a >= k {
            return usage(format!("move index {a} not available at {}", game.state_id(s)));
        }
        if last == Some(*a) {
            return usage(format!("move index {a} repeated at {}", game.state_id(s)));
        }
        if !is_positive(p) {
            return usage(format!("non-positive probability at {}", game.state_id(s)));
        }
        last = Some(*a);
        total += p;
    }
    if !total.is_one() {
        return usage(format!(
            "selector at {} sums to {}",
            game.state_id(s),
            format_rational(&total)
        ));
    }
    Ok(())
}

pub(crate) fn check_selector(game: &ConcurrentGame, sel: &Selector, player: Player) -> Result<()> {
    if sel.dist.len() != game.num_states() {
        return usage("selector does not cover every state");
    }
    (0..game.num_states()).try_for_each(|s| check_selector_at(game, sel, player, s))
}

/// Pure choice defined on a subset of states (e.g. a winning strategy on a
/// winning region).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSelector {
    choice: Vec<Option<usize>>,
}

impl PartialSelector {
    pub fn undefined(n: usize) -> Self {
        PartialSelector {
            choice: vec![None; n],
        }
    }

    pub fn from_choices(choice: Vec<Option<usize>>) -> Self {
        PartialSelector { choice }
    }

    pub fn get(&self, s: usize) -> Option<usize> {
        self.choice.get(s).copied().flatten()
    }

    pub fn set(&mut self, s: usize, a: usize) {
        self.choice[s] = Some(a);
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.choice
            .iter()
            .enumerate()
            .filter_map(|(s, c)| c.map(|_| s))
    }

    /// Total selector: defined choices become point masses, the rest falls back.
    pub fn complete(&self, fallback: &Selector) -> Selector {
        let mut sel = fallback.clone();
        for (s, c) in self.choice.iter().enumerate() {
            if let Some(a) = c {
                sel.set(s, vec![(*a, Rational::one())]);
            }
        }
        sel
    }
}

/// Per-state values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Valuation(Vec<Rational>);

impl Valuation {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        for (s, v) in values.iter().enumerate() {
            if v < &Rational::zero() || v > &Rational::one() {
                return usage(format!(
                    "valuation entry {} at index {s} outside [0,1]",
                    format_rational(v)
                ));
            }
        }
        Ok(Valuation(values))
    }

    pub(crate) fn from_raw(values: Vec<Rational>) -> Self {
        debug_assert!(values
            .iter()
            .all(|v| v >= &Rational::zero() && v <= &Rational::one()));
        Valuation(values)
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        Valuation(vec![c; n])
    }

    pub fn indicator(set: &StateSet) -> Self {
        Valuation(
            (0..set.universe())
                .map(|s| {
                    if set.contains(s) {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, s: usize) -> &Rational {
        &self.0[s]
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_values(self) -> Vec<Rational> {
        self.0
    }

    /// `1 - v` pointwise.
    pub fn complement(&self) -> Valuation {
        Valuation(self.0.iter().map(|v| Rational::one() - v).collect())
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &Valuation) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// States where `self > other`.
    pub fn greater_at(&self, other: &Valuation) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter_map(|(s, (a, b))| (a > b).then_some(s))
            .collect()
    }

    /// Maximum of `other - self` over states (zero for empty valuations).
    pub fn max_gap_to(&self, other: &Valuation) -> Rational {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| b - a)
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

impl std::ops::Index<usize> for Valuation {
    type Output = Rational;
    fn index(&self, s: usize) -> &Rational {
        &self.0[s]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    Safety,
    Reachability,
}

/// `Safe(F)` or `Reach(T)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub states: StateSet,
}

impl Objective {
    pub fn safety(states: StateSet) -> Self {
        Objective {
            kind: ObjectiveKind::Safety,
            states,
        }
    }

    pub fn reachability(states: StateSet) -> Self {
        Objective {
            kind: ObjectiveKind::Reachability,
            states,
        }
    }

    /// Safe set of the safety view of this objective (`S \ T` for reachability).
    pub fn safe_set(&self) -> StateSet {
        match self.kind {
            ObjectiveKind::Safety => self.states.clone(),
            ObjectiveKind::Reachability => self.states.complement(),
        }
    }

    /// Target set of the reachability view of this objective.
    pub fn target_set(&self) -> StateSet {
        match self.kind {
            ObjectiveKind::Safety => self.states.complement(),
            ObjectiveKind::Reachability => self.states.clone(),
        }
    }
}

/// Synthetic move name the fixed player keeps after [`fix_selector`].
pub const FIXED_MOVE: &str = "*";

/// Fixes `xi` for its player, giving an MDP for the other player:
/// `delta'(s, m)(t) = sum_a delta(s, a, m)(t) * xi(s)(a)`.
pub fn fix_selector(game: &ConcurrentGame, xi: &Selector) -> Result<ConcurrentGame> {
    let player = xi.player();
    check_selector(game, xi, player)?;
    let n = game.num_states();
    let mut moves1 = Vec::with_capacity(n);
    let mut moves2 = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    for s in 0..n {
        match player {
            Player::One => {
                let row = (0..game.moves2(s).len())
                    .map(|b| {
                        Distribution::mix(xi.at(s).iter().map(|(a, p)| (p, game.transition(s, *a, b))))
                    })
                    .collect();
                moves1.push(vec![FIXED_MOVE.to_string()]);
                moves2.push(game.moves2(s).to_vec());
                delta.push(vec![row]);
            }
            Player::Two => {
                let rows = (0..game.moves1(s).len())
                    .map(|a| {
                        vec![Distribution::mix(
                            xi.at(s).iter().map(|(b, p)| (p, game.transition(s, a, *b))),
                        )]
                    })
                    .collect();
                moves1.push(game.moves1(s).to_vec());
                moves2.push(vec![FIXED_MOVE.to_string()]);
                delta.push(rows);
            }
        }
    }
    Ok(ConcurrentGame::from_parts(
        game.states().to_vec(),
        moves1,
        moves2,
        delta,
    ))
}

/// Replaces every transition out of `set` by a sure self-loop.
pub fn make_absorbing(game: &ConcurrentGame, set: &StateSet) -> ConcurrentGame {
    let mut g = game.clone();
    for s in set.iter() {
        for row in &mut g.delta[s] {
            for d in row.iter_mut() {
                *d = Distribution::point(s);
            }
        }
    }
    g
}

/// Turn-based counterpart of [`make_absorbing`]: a single self-edge.
pub fn make_absorbing_turn_based(game: &TurnBasedGame, set: &StateSet) -> TurnBasedGame {
    let mut g = game.clone();
    for s in set.iter() {
        g.edges[s] = vec![s];
        if g.owner[s] == Owner::Random {
            g.dist[s] = Some(Distribution::point(s));
        }
    }
    g
}

/// Groups states by exact value; classes come back in ascending value order.
pub fn value_classes(v: &Valuation) -> Vec<(Rational, Vec<usize>)> {
    let mut classes: BTreeMap<Rational, Vec<usize>> = BTreeMap::new();
    for (s, r) in v.values().iter().enumerate() {
        classes.entry(r.clone()).or_default().push(s);
    }
    classes.into_iter().collect()
}
