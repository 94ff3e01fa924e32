//! JSON game files, result files, valuation files and the NDJSON trace.
//!
//! Rationals are written as `"p/q"` strings (a bare integer means `q = 1`).
//! Semantic diagnostics carry a stable code and the JSON path of the
//! offending field; syntax errors carry line and column.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::model::{
    ConcurrentGame, Distribution, Objective, ObjectiveKind, Owner, Player, Selector, StateSet,
    TurnBasedGame, Valuation, Violation, ViolationKind,
};
use crate::rational::{format_rational, parse_rational, to_decimal, Rational};
use crate::safety::{IterationRecord, SolveReport, StepKind};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_DIGITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Code {
    Syntax,
    Schema,
    Version,
    MalformedRational,
    UnknownState,
    DistributionSum,
    MissingTransition,
    DuplicateId,
    EmptyMoveSet,
    DuplicateMove,
    DuplicateSuccessor,
    NonPositiveProbability,
    NoOutgoingEdge,
    SupportMismatch,
    UnexpectedDistribution,
    UnknownMove,
    DuplicateTransition,
    MissingDistribution,
    InvalidSelector,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::Syntax => "E001",
            Code::Schema => "E002",
            Code::Version => "E003",
            Code::MalformedRational => "E101",
            Code::UnknownState => "E102",
            Code::DistributionSum => "E103",
            Code::MissingTransition => "E104",
            Code::DuplicateId => "E105",
            Code::EmptyMoveSet => "E106",
            Code::DuplicateMove => "E107",
            Code::DuplicateSuccessor => "E108",
            Code::NonPositiveProbability => "E109",
            Code::NoOutgoingEdge => "E110",
            Code::SupportMismatch => "E111",
            Code::UnexpectedDistribution => "E112",
            Code::UnknownMove => "E113",
            Code::DuplicateTransition => "E114",
            Code::MissingDistribution => "E115",
            Code::InvalidSelector => "E116",
        }
    }

    fn of(kind: ViolationKind) -> Code {
        match kind {
            ViolationKind::DuplicateId => Code::DuplicateId,
            ViolationKind::EmptyMoveSet => Code::EmptyMoveSet,
            ViolationKind::DuplicateMove => Code::DuplicateMove,
            ViolationKind::MissingTransition => Code::MissingTransition,
            ViolationKind::UnknownState => Code::UnknownState,
            ViolationKind::DuplicateSuccessor => Code::DuplicateSuccessor,
            ViolationKind::NonPositiveProbability => Code::NonPositiveProbability,
            ViolationKind::DistributionSum => Code::DistributionSum,
            ViolationKind::NoOutgoingEdge => Code::NoOutgoingEdge,
            ViolationKind::SupportMismatch => Code::SupportMismatch,
            ViolationKind::UnexpectedDistribution => Code::UnexpectedDistribution,
            ViolationKind::InvalidSelector => Code::InvalidSelector,
        }
    }
}

/// One problem with an input file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: Code,
    /// JSON path such as `transitions[3].to[1]`, empty for syntax errors.
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn at(code: Code, path: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }

    fn from_json(e: &serde_json::Error) -> Self {
        let code = if e.is_data() { Code::Schema } else { Code::Syntax };
        Diagnostic {
            code,
            path: String::new(),
            line: Some(e.line()),
            column: Some(e.column()),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code.as_str())?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at {l}:{c}")?;
        }
        if !self.path.is_empty() {
            write!(f, " at {}", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}", render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{0}")]
    File(#[from] std::io::Error),
    /// The trace emitter found iterates that break the expected ordering.
    #[error("refusing to write trace: {0}")]
    Trace(String),
}

fn render(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

// ---------------------------------------------------------------------------
// Game files

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    Concurrent,
    TurnBased,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OwnerName {
    Player1,
    Player2,
    Random,
}

/// A probability as written: a string, or an integer shorthand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbText {
    Text(String),
    Int(i64),
}

impl ProbText {
    fn parse(&self) -> Result<Rational, String> {
        match self {
            ProbText::Text(s) => parse_rational(s).map_err(|e| format!("{:?}: {}", e.input, e.reason)),
            ProbText::Int(n) => Ok(Rational::from_integer((*n).into())),
        }
    }
}

impl From<&Rational> for ProbText {
    fn from(r: &Rational) -> Self {
        ProbText::Text(format_rational(r))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StateEntry {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moves1: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moves2: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<OwnerName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<String>>,
    /// `[successor, probability]` pairs of a random state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Vec<(String, ProbText)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TransitionEntry {
    pub state: String,
    pub move1: String,
    pub move2: String,
    pub to: Vec<(String, ProbText)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectiveEntry {
    Safety(Vec<String>),
    Reachability(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GameFile {
    pub format_version: u32,
    pub kind: GameKind,
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<TransitionEntry>,
    pub objective: ObjectiveEntry,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Game {
    Concurrent(ConcurrentGame),
    TurnBased(TurnBasedGame),
}

impl Game {
    pub fn num_states(&self) -> usize {
        match self {
            Game::Concurrent(g) => g.num_states(),
            Game::TurnBased(g) => g.num_states(),
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            Game::Concurrent(g) => g.states(),
            Game::TurnBased(g) => g.states(),
        }
    }

    /// The concurrent view; turn-based games go through `to_concurrent`.
    pub fn concurrent(&self) -> ConcurrentGame {
        match self {
            Game::Concurrent(g) => g.clone(),
            Game::TurnBased(g) => g.to_concurrent(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadedGame {
    pub game: Game,
    pub objective: Objective,
}

pub fn parse_game_str(text: &str) -> Result<LoadedGame, IoError> {
    let file: GameFile =
        serde_json::from_str(text).map_err(|e| IoError::Invalid(vec![Diagnostic::from_json(&e)]))?;
    load_game_file(&file)
}

pub fn parse_game(path: &std::path::Path) -> Result<LoadedGame, IoError> {
    parse_game_str(&std::fs::read_to_string(path)?)
}

fn parse_dist(
    pairs: &[(String, ProbText)],
    index: &HashMap<&str, usize>,
    path: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<Distribution> {
    let mut entries = Vec::new();
    let mut ok = true;
    for (k, (t, p)) in pairs.iter().enumerate() {
        let at = format!("{path}[{k}]");
        let target = index.get(t.as_str()).copied();
        if target.is_none() {
            diags.push(Diagnostic::at(Code::UnknownState, &at, format!("unknown state {t:?}")));
            ok = false;
        }
        match p.parse() {
            Ok(p) => {
                if let Some(t) = target {
                    entries.push((t, p));
                }
            }
            Err(e) => {
                diags.push(Diagnostic::at(Code::MalformedRational, &at, format!("malformed rational {e}")));
                ok = false;
            }
        }
    }
    ok.then(|| Distribution::new(entries))
}

fn lookup_states(
    ids: &[String],
    index: &HashMap<&str, usize>,
    path: &str,
    diags: &mut Vec<Diagnostic>,
) -> StateSet {
    let mut set = StateSet::empty(index.len());
    for (k, id) in ids.iter().enumerate() {
        match index.get(id.as_str()) {
            Some(&s) => {
                set.insert(s);
            }
            None => diags.push(Diagnostic::at(
                Code::UnknownState,
                format!("{path}[{k}]"),
                format!("unknown state {id:?}"),
            )),
        }
    }
    set
}

/// Maps core-model violations to diagnostics pointing at the state entry.
fn violation_diags(violations: Vec<Violation>, ids: &[String]) -> Vec<Diagnostic> {
    violations
        .into_iter()
        .map(|v| {
            let path = ids
                .iter()
                .position(|id| *id == v.state)
                .map(|i| format!("states[{i}]"))
                .unwrap_or_default();
            Diagnostic::at(Code::of(v.kind), path, format!("state {}: {}", v.state, v.detail))
        })
        .collect()
}

pub fn load_game_file(file: &GameFile) -> Result<LoadedGame, IoError> {
    let mut diags = Vec::new();
    if file.format_version != FORMAT_VERSION {
        return Err(IoError::Invalid(vec![Diagnostic::at(
            Code::Version,
            "formatVersion",
            format!("unsupported format version {}", file.format_version),
        )]));
    }
    let ids: Vec<String> = file.states.iter().map(|s| s.id.clone()).collect();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, id) in ids.iter().enumerate() {
        if index.insert(id.as_str(), i).is_some() {
            diags.push(Diagnostic::at(
                Code::DuplicateId,
                format!("states[{i}].id"),
                format!("state id {id:?} declared more than once"),
            ));
        }
    }
    // First occurrence wins for lookups.
    for (i, id) in ids.iter().enumerate().rev() {
        index.insert(id.as_str(), i);
    }
    let n = ids.len();

    let game = match file.kind {
        GameKind::Concurrent => load_concurrent(file, &ids, &index, &mut diags).map(Game::Concurrent),
        GameKind::TurnBased => load_turn_based(file, &ids, &index, &mut diags).map(Game::TurnBased),
    };
    let objective = match &file.objective {
        ObjectiveEntry::Safety(s) => Objective::safety(lookup_states(s, &index, "objective.safety", &mut diags)),
        ObjectiveEntry::Reachability(s) => {
            Objective::reachability(lookup_states(s, &index, "objective.reachability", &mut diags))
        }
    };
    if !diags.is_empty() {
        return Err(IoError::Invalid(diags));
    }
    let game = game.expect("no diagnostics means the game was built");
    debug_assert_eq!(game.num_states(), n);
    Ok(LoadedGame { game, objective })
}

fn load_concurrent(
    file: &GameFile,
    ids: &[String],
    index: &HashMap<&str, usize>,
    diags: &mut Vec<Diagnostic>,
) -> Option<ConcurrentGame> {
    let start = diags.len();
    let mut moves1 = Vec::new();
    let mut moves2 = Vec::new();
    for (i, s) in file.states.iter().enumerate() {
        let path = format!("states[{i}]");
        if s.owner.is_some() || s.edges.is_some() || s.distribution.is_some() {
            diags.push(Diagnostic::at(
                Code::Schema,
                &path,
                "concurrent states take moves1/moves2, not owner/edges/distribution",
            ));
        }
        for (name, m, out) in [("moves1", &s.moves1, &mut moves1), ("moves2", &s.moves2, &mut moves2)] {
            match m {
                Some(m) => out.push(m.clone()),
                None => {
                    diags.push(Diagnostic::at(Code::Schema, format!("{path}.{name}"), "missing field"));
                    out.push(Vec::new());
                }
            }
        }
    }
    let mut table: Vec<Vec<Vec<Option<Distribution>>>> = (0..ids.len())
        .map(|s| vec![vec![None; moves2[s].len()]; moves1[s].len()])
        .collect();
    for (k, t) in file.transitions.iter().enumerate() {
        let path = format!("transitions[{k}]");
        let Some(&s) = index.get(t.state.as_str()) else {
            diags.push(Diagnostic::at(
                Code::UnknownState,
                format!("{path}.state"),
                format!("unknown state {:?}", t.state),
            ));
            continue;
        };
        let a = moves1[s].iter().position(|m| *m == t.move1);
        let b = moves2[s].iter().position(|m| *m == t.move2);
        if a.is_none() {
            diags.push(Diagnostic::at(
                Code::UnknownMove,
                format!("{path}.move1"),
                format!("state {}: unknown player-1 move {:?}", t.state, t.move1),
            ));
        }
        if b.is_none() {
            diags.push(Diagnostic::at(
                Code::UnknownMove,
                format!("{path}.move2"),
                format!("state {}: unknown player-2 move {:?}", t.state, t.move2),
            ));
        }
        let d = parse_dist(&t.to, index, &format!("{path}.to"), diags);
        if let (Some(a), Some(b), Some(d)) = (a, b, d) {
            if table[s][a][b].is_some() {
                diags.push(Diagnostic::at(
                    Code::DuplicateTransition,
                    &path,
                    format!("state {}: moves ({}, {}) defined twice", t.state, t.move1, t.move2),
                ));
            }
            let total = d.total();
            if total != Rational::from_integer(1.into()) {
                diags.push(Diagnostic::at(
                    Code::DistributionSum,
                    format!("{path}.to"),
                    format!(
                        "state {}: moves ({}, {}): distribution sum {} != 1",
                        t.state,
                        t.move1,
                        t.move2,
                        format_rational(&total)
                    ),
                ));
            }
            table[s][a][b] = Some(d);
        }
    }
    for s in 0..ids.len() {
        for a in 0..moves1[s].len() {
            for b in 0..moves2[s].len() {
                if table[s][a][b].is_none() {
                    diags.push(Diagnostic::at(
                        Code::MissingTransition,
                        format!("states[{s}]"),
                        format!(
                            "state {}: no transition for moves ({}, {})",
                            ids[s], moves1[s][a], moves2[s][b]
                        ),
                    ));
                }
            }
        }
    }
    if diags.len() > start {
        return None;
    }
    let delta = table
        .into_iter()
        .map(|rows| {
            rows.into_iter()
                .map(|row| row.into_iter().map(|d| d.expect("checked above")).collect())
                .collect()
        })
        .collect();
    let game = ConcurrentGame::from_parts(ids.to_vec(), moves1, moves2, delta);
    let violations: Vec<Violation> = game
        .validate()
        .into_iter()
        // Duplicate ids were reported with their field path already.
        .filter(|v| v.kind != ViolationKind::DuplicateId)
        .collect();
    if violations.is_empty() {
        Some(game)
    } else {
        diags.extend(violation_diags(violations, ids));
        None
    }
}

fn load_turn_based(
    file: &GameFile,
    ids: &[String],
    index: &HashMap<&str, usize>,
    diags: &mut Vec<Diagnostic>,
) -> Option<TurnBasedGame> {
    let start = diags.len();
    if !file.transitions.is_empty() {
        diags.push(Diagnostic::at(
            Code::Schema,
            "transitions",
            "turn-based games put distributions on random states",
        ));
    }
    let mut owner = Vec::new();
    let mut edges = Vec::new();
    let mut dist = Vec::new();
    for (i, s) in file.states.iter().enumerate() {
        let path = format!("states[{i}]");
        if s.moves1.is_some() || s.moves2.is_some() {
            diags.push(Diagnostic::at(Code::Schema, &path, "turn-based states take owner/edges, not moves"));
        }
        let o = match s.owner {
            Some(OwnerName::Player1) => Owner::Player1,
            Some(OwnerName::Player2) => Owner::Player2,
            Some(OwnerName::Random) => Owner::Random,
            None => {
                diags.push(Diagnostic::at(Code::Schema, format!("{path}.owner"), "missing field"));
                Owner::Player1
            }
        };
        owner.push(o);
        let d = match (&s.distribution, o) {
            (Some(d), _) => parse_dist(d, index, &format!("{path}.distribution"), diags),
            (None, Owner::Random) => {
                diags.push(Diagnostic::at(
                    Code::MissingDistribution,
                    format!("{path}.distribution"),
                    format!("random state {} has no distribution", s.id),
                ));
                None
            }
            (None, _) => None,
        };
        let e: Vec<usize> = match (&s.edges, &d) {
            (Some(list), _) => list
                .iter()
                .enumerate()
                .filter_map(|(k, t)| {
                    let found = index.get(t.as_str()).copied();
                    if found.is_none() {
                        diags.push(Diagnostic::at(
                            Code::UnknownState,
                            format!("{path}.edges[{k}]"),
                            format!("unknown state {t:?}"),
                        ));
                    }
                    found
                })
                .collect(),
            // Random states may omit edges; they default to the support.
            (None, Some(d)) if o == Owner::Random => d.support().collect(),
            (None, _) => {
                if o != Owner::Random {
                    diags.push(Diagnostic::at(Code::Schema, format!("{path}.edges"), "missing field"));
                }
                Vec::new()
            }
        };
        edges.push(e);
        dist.push(d);
    }
    if diags.len() > start {
        return None;
    }
    let game = TurnBasedGame::from_parts(ids.to_vec(), owner, edges, dist);
    let violations: Vec<Violation> = game
        .validate()
        .into_iter()
        .filter(|v| v.kind != ViolationKind::DuplicateId)
        .collect();
    if violations.is_empty() {
        Some(game)
    } else {
        diags.extend(violation_diags(violations, ids));
        None
    }
}

fn dist_pairs(d: &Distribution, ids: &[String]) -> Vec<(String, ProbText)> {
    d.entries()
        .iter()
        .map(|(t, p)| (ids[*t].clone(), ProbText::from(p)))
        .collect()
}

fn objective_entry(objective: &Objective, ids: &[String]) -> ObjectiveEntry {
    let list = objective.states.iter().map(|s| ids[s].clone()).collect();
    match objective.kind {
        ObjectiveKind::Safety => ObjectiveEntry::Safety(list),
        ObjectiveKind::Reachability => ObjectiveEntry::Reachability(list),
    }
}

pub fn concurrent_to_file(game: &ConcurrentGame, objective: &Objective) -> GameFile {
    let ids = game.states();
    let mut transitions = Vec::new();
    for s in 0..game.num_states() {
        for (a, ma) in game.moves1(s).iter().enumerate() {
            for (b, mb) in game.moves2(s).iter().enumerate() {
                transitions.push(TransitionEntry {
                    state: ids[s].clone(),
                    move1: ma.clone(),
                    move2: mb.clone(),
                    to: dist_pairs(game.transition(s, a, b), ids),
                });
            }
        }
    }
    GameFile {
        format_version: FORMAT_VERSION,
        kind: GameKind::Concurrent,
        states: (0..game.num_states())
            .map(|s| StateEntry {
                id: ids[s].clone(),
                moves1: Some(game.moves1(s).to_vec()),
                moves2: Some(game.moves2(s).to_vec()),
                owner: None,
                edges: None,
                distribution: None,
            })
            .collect(),
        transitions,
        objective: objective_entry(objective, ids),
    }
}

pub fn turn_based_to_file(game: &TurnBasedGame, objective: &Objective) -> GameFile {
    let ids = game.states();
    GameFile {
        format_version: FORMAT_VERSION,
        kind: GameKind::TurnBased,
        states: (0..game.num_states())
            .map(|s| {
                let (owner, distribution) = match game.owner(s) {
                    Owner::Player1 => (OwnerName::Player1, None),
                    Owner::Player2 => (OwnerName::Player2, None),
                    Owner::Random => (
                        OwnerName::Random,
                        game.distribution(s).map(|d| dist_pairs(d, ids)),
                    ),
                };
                StateEntry {
                    id: ids[s].clone(),
                    moves1: None,
                    moves2: None,
                    owner: Some(owner),
                    edges: Some(game.edges(s).iter().map(|&t| ids[t].clone()).collect()),
                    distribution,
                }
            })
            .collect(),
        transitions: Vec::new(),
        objective: objective_entry(objective, ids),
    }
}

pub fn game_to_file(loaded: &LoadedGame) -> GameFile {
    match &loaded.game {
        Game::Concurrent(g) => concurrent_to_file(g, &loaded.objective),
        Game::TurnBased(g) => turn_based_to_file(g, &loaded.objective),
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Valuation and result files

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValueEntry {
    pub state: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimal: Option<String>,
}

/// Anything with a `values` list; result files qualify.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct ValuationFile {
    pub values: Vec<ValueEntry>,
}

pub fn value_entries(v: &Valuation, ids: &[String], digits: Option<usize>) -> Vec<ValueEntry> {
    ids.iter()
        .zip(v.values())
        .map(|(id, x)| ValueEntry {
            state: id.clone(),
            value: format_rational(x),
            decimal: digits.map(|d| to_decimal(x, d)),
        })
        .collect()
}

/// Reads a valuation over `ids`; every state must be given exactly once.
pub fn parse_valuation_str(text: &str, ids: &[String]) -> Result<Valuation, IoError> {
    let file: ValuationFile =
        serde_json::from_str(text).map_err(|e| IoError::Invalid(vec![Diagnostic::from_json(&e)]))?;
    let mut diags = Vec::new();
    let mut values: Vec<Option<Rational>> = vec![None; ids.len()];
    for (k, e) in file.values.iter().enumerate() {
        let path = format!("values[{k}]");
        let Some(s) = ids.iter().position(|id| *id == e.state) else {
            diags.push(Diagnostic::at(Code::UnknownState, &path, format!("unknown state {:?}", e.state)));
            continue;
        };
        match parse_rational(&e.value) {
            Ok(x) => {
                if values[s].replace(x).is_some() {
                    diags.push(Diagnostic::at(Code::DuplicateId, &path, format!("state {} given twice", e.state)));
                }
            }
            Err(err) => diags.push(Diagnostic::at(
                Code::MalformedRational,
                format!("{path}.value"),
                format!("malformed rational {:?}: {}", err.input, err.reason),
            )),
        }
    }
    for (s, v) in values.iter().enumerate() {
        if v.is_none() {
            diags.push(Diagnostic::at(Code::Schema, "values", format!("no value for state {}", ids[s])));
        }
    }
    if !diags.is_empty() {
        return Err(IoError::Invalid(diags));
    }
    Valuation::new(values.into_iter().map(|v| v.expect("checked")).collect())
        .map_err(|e| IoError::Invalid(vec![Diagnostic::at(Code::Schema, "values", e.to_string())]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StrategyEntry {
    pub state: String,
    pub player: u8,
    pub distribution: Vec<(String, String)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Metadata {
    pub command: String,
    pub iterations: usize,
    pub stop_reason: String,
    pub terminated: bool,
    /// Certified `max_s (upper - lower)` when an upper bound is known.
    #[serde(default)]
    pub gap: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Bounds {
    pub lower: Vec<ValueEntry>,
    pub upper: Vec<ValueEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultFile {
    pub format_version: u32,
    pub objective: String,
    pub values: Vec<ValueEntry>,
    pub strategy: Vec<StrategyEntry>,
    pub metadata: Metadata,
}

pub fn strategy_entries(game: &ConcurrentGame, sel: &Selector) -> Vec<StrategyEntry> {
    let player = sel.player();
    (0..game.num_states())
        .map(|s| StrategyEntry {
            state: game.state_id(s).to_string(),
            player: match player {
                Player::One => 1,
                Player::Two => 2,
            },
            distribution: sel
                .at(s)
                .iter()
                .map(|(a, p)| (game.moves(player, s)[*a].clone(), format_rational(p)))
                .collect(),
        })
        .collect()
}

pub fn objective_name(o: &Objective) -> &'static str {
    match o.kind {
        ObjectiveKind::Safety => "safety",
        ObjectiveKind::Reachability => "reachability",
    }
}

/// Result document of a safety solve. Values are rendered with `digits`
/// decimals; the bounds, if any, are exact only.
pub fn safety_result(
    game: &ConcurrentGame,
    objective: &Objective,
    report: &SolveReport,
    command: &str,
    digits: usize,
) -> ResultFile {
    let ids = game.states();
    let bounds = report.upper.last().map(|up| Bounds {
        lower: value_entries(&report.final_valuation, ids, None),
        upper: value_entries(up, ids, None),
    });
    ResultFile {
        format_version: FORMAT_VERSION,
        objective: objective_name(objective).into(),
        values: value_entries(&report.final_valuation, ids, Some(digits)),
        strategy: strategy_entries(game, &report.final_selector),
        metadata: Metadata {
            command: command.into(),
            iterations: report.records.len(),
            stop_reason: report.stop_reason.to_string(),
            terminated: report.terminated,
            gap: report.gap.as_ref().map(format_rational),
            bounds,
        },
    }
}

pub fn parse_result_str(text: &str) -> Result<ResultFile, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Invalid(vec![Diagnostic::from_json(&e)]))
}

// ---------------------------------------------------------------------------
// Trace

/// Writes newline-delimited JSON trace records. Lower iterates must be
/// pointwise nondecreasing, upper iterates nonincreasing, and each upper
/// iterate must dominate every lower one; otherwise nothing is written.
pub struct TraceWriter {
    ids: Vec<String>,
    lines: Vec<String>,
    last_lower: Option<Valuation>,
    max_lower: Option<Valuation>,
    last_upper: Option<Valuation>,
    min_upper: Option<Valuation>,
}

fn valuation_map(ids: &[String], v: &Valuation) -> Value {
    let mut m = Map::new();
    for (id, x) in ids.iter().zip(v.values()) {
        m.insert(id.clone(), Value::String(format_rational(x)));
    }
    Value::Object(m)
}

fn pointwise_max(a: &Valuation, b: &Valuation) -> Valuation {
    Valuation::from_raw(a.values().iter().zip(b.values()).map(|(x, y)| x.max(y).clone()).collect())
}

fn pointwise_min(a: &Valuation, b: &Valuation) -> Valuation {
    Valuation::from_raw(a.values().iter().zip(b.values()).map(|(x, y)| x.min(y).clone()).collect())
}

impl TraceWriter {
    pub fn new(ids: &[String]) -> Self {
        TraceWriter {
            ids: ids.to_vec(),
            lines: Vec::new(),
            last_lower: None,
            max_lower: None,
            last_upper: None,
            min_upper: None,
        }
    }

    fn push(&mut self, index: usize, kind: &str, improved: Option<&[usize]>, v: &Valuation) {
        let mut m = Map::new();
        m.insert("index".into(), Value::from(index));
        m.insert("kind".into(), Value::from(kind));
        if let Some(imp) = improved {
            m.insert(
                "improved".into(),
                Value::Array(imp.iter().map(|&s| Value::from(self.ids[s].clone())).collect()),
            );
        }
        m.insert("valuation".into(), valuation_map(&self.ids, v));
        self.lines.push(Value::Object(m).to_string());
    }

    /// Records a lower-bound iterate.
    pub fn lower(&mut self, index: usize, kind: &str, improved: &[usize], v: &Valuation) -> Result<(), IoError> {
        if let Some(prev) = &self.last_lower {
            if !prev.le(v) {
                return Err(IoError::Trace(format!("lower iterate {index} decreases somewhere")));
            }
        }
        if let Some(up) = &self.min_upper {
            if !v.le(up) {
                return Err(IoError::Trace(format!("lower iterate {index} exceeds an upper iterate")));
            }
        }
        self.max_lower = Some(match &self.max_lower {
            None => v.clone(),
            Some(m) => pointwise_max(m, v),
        });
        self.last_lower = Some(v.clone());
        self.push(index, kind, Some(improved), v);
        Ok(())
    }

    /// Records an upper-bound iterate.
    pub fn upper(&mut self, index: usize, v: &Valuation) -> Result<(), IoError> {
        if let Some(prev) = &self.last_upper {
            if !v.le(prev) {
                return Err(IoError::Trace(format!("upper iterate {index} increases somewhere")));
            }
        }
        if let Some(low) = &self.max_lower {
            if !low.le(v) {
                return Err(IoError::Trace(format!("upper iterate {index} is below a lower iterate")));
            }
        }
        self.min_upper = Some(match &self.min_upper {
            None => v.clone(),
            Some(m) => pointwise_min(m, v),
        });
        self.last_upper = Some(v.clone());
        self.push(index, "UpperVI", None, v);
        Ok(())
    }

    /// Records an iterate outside the lower/upper discipline, e.g. a
    /// reachability evaluation; still required to be nondecreasing.
    pub fn other(&mut self, index: usize, kind: &str, v: &Valuation) -> Result<(), IoError> {
        self.lower(index, kind, &[], v)
    }

    /// Safety records in order, then the upper iterates.
    pub fn from_safety(
        ids: &[String],
        records: &[IterationRecord],
        upper: &[Valuation],
    ) -> Result<TraceWriter, IoError> {
        let mut t = TraceWriter::new(ids);
        // Interleave: upper j is computed after lower record j.
        let mut ui = 0;
        for r in records {
            t.lower(r.index, kind_name(r.kind), &r.improved_states, &r.valuation)?;
            if ui < upper.len() && ui <= r.index {
                t.upper(ui, &upper[ui])?;
                ui += 1;
            }
        }
        while ui < upper.len() {
            t.upper(ui, &upper[ui])?;
            ui += 1;
        }
        Ok(t)
    }

    pub fn contents(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), IoError> {
        w.write_all(self.contents().as_bytes())?;
        Ok(())
    }
}

pub fn kind_name(kind: StepKind) -> &'static str {
    match kind {
        StepKind::PreStep => "PreStep",
        StepKind::TbStep => "TbStep",
        StepKind::Terminal => "Terminal",
    }
}
