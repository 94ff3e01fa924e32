//! Qualitative analysis: almost-sure safety, zero-probability reachability and
//! attractors. All fixpoints are counter-based worklists.

use crate::error::{usage, Result};
use crate::model::{ConcurrentGame, Owner, PartialSelector, Player, StateSet, TurnBasedGame};

/// Almost-sure winning set for `Safe(F)` in a concurrent game, with a pure
/// witness on it.
///
/// Computed as the sure-winning fixpoint
/// `X -> {s in F & X | exists a. forall b. Dest(s,a,b) in X}`. Outside it every
/// player-1 move has an escaping reply, so the uniform player-2 selector escapes
/// with probability at least `min delta / |moves2|` per visit, which keeps the
/// value below 1; hence almost-sure and sure winning coincide for safety.
pub fn almost_sure_safe_concurrent(game: &ConcurrentGame, safe: &StateSet) -> (StateSet, PartialSelector) {
    let n = game.num_states();
    let mut inside: Vec<bool> = (0..n).map(|s| safe.contains(s)).collect();
    // leaks[s][a]: successor entries of (s, a, *) currently outside.
    let mut leaks: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for s in 0..n {
        let mut row = Vec::with_capacity(game.moves1(s).len());
        for a in 0..game.moves1(s).len() {
            let mut count = 0;
            for b in 0..game.moves2(s).len() {
                for t in game.transition(s, a, b).support() {
                    preds[t].push((s, a));
                    if !inside[t] {
                        count += 1;
                    }
                }
            }
            row.push(count);
        }
        leaks.push(row);
    }
    let mut good: Vec<usize> = (0..n)
        .map(|s| leaks[s].iter().filter(|&&c| c == 0).count())
        .collect();
    let mut work: Vec<usize> = (0..n).filter(|&s| inside[s] && good[s] == 0).collect();
    for &s in &work {
        inside[s] = false;
    }
    while let Some(t) = work.pop() {
        for &(s, a) in &preds[t] {
            leaks[s][a] += 1;
            if leaks[s][a] == 1 {
                good[s] -= 1;
                if good[s] == 0 && inside[s] {
                    inside[s] = false;
                    work.push(s);
                }
            }
        }
    }
    let mut witness = PartialSelector::undefined(n);
    for s in 0..n {
        if inside[s] {
            let a = leaks[s].iter().position(|&c| c == 0).expect("winning move");
            witness.set(s, a);
        }
    }
    (StateSet::from_mask(inside), witness)
}

/// Almost-sure winning set for `Safe(F)` in a turn-based game and the pure
/// strategy taking the first edge that stays inside.
pub fn almost_sure_safe_turn_based(game: &TurnBasedGame, safe: &StateSet) -> (StateSet, PartialSelector) {
    let n = game.num_states();
    let mut inside: Vec<bool> = (0..n).map(|s| safe.contains(s)).collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        for &t in game.edges(s) {
            preds[t].push(s);
        }
    }
    // Player-1 states: number of edges still inside. Others: edges outside.
    let mut count: Vec<usize> = (0..n)
        .map(|s| {
            let in_count = game.edges(s).iter().filter(|&&t| inside[t]).count();
            match game.owner(s) {
                Owner::Player1 => in_count,
                _ => game.edges(s).len() - in_count,
            }
        })
        .collect();
    let losing = |c: usize, owner: Owner| match owner {
        Owner::Player1 => c == 0,
        _ => c > 0,
    };
    let mut work: Vec<usize> = (0..n)
        .filter(|&s| inside[s] && losing(count[s], game.owner(s)))
        .collect();
    for &s in &work {
        inside[s] = false;
    }
    while let Some(t) = work.pop() {
        for &s in &preds[t] {
            match game.owner(s) {
                Owner::Player1 => count[s] -= 1,
                _ => count[s] += 1,
            }
            if inside[s] && losing(count[s], game.owner(s)) {
                inside[s] = false;
                work.push(s);
            }
        }
    }
    let mut strategy = PartialSelector::undefined(n);
    for s in game.states_owned_by(Owner::Player1) {
        if inside[s] {
            let e = game.edges(s).iter().position(|&t| inside[t]).expect("safe edge");
            strategy.set(s, e);
        }
    }
    (StateSet::from_mask(inside), strategy)
}

fn owner_of(player: Player) -> Owner {
    match player {
        Player::One => Owner::Player1,
        Player::Two => Owner::Player2,
    }
}

/// States from which `player` cannot reach `T` with positive probability.
pub fn zero_reach_states_turn_based(game: &TurnBasedGame, target: &StateSet, player: Player) -> StateSet {
    let n = game.num_states();
    let own = owner_of(player);
    let mut reach: Vec<bool> = (0..n).map(|s| target.contains(s)).collect();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        for &t in game.edges(s) {
            preds[t].push(s);
        }
    }
    // Opponent states join once all their edges are in.
    let mut missing: Vec<usize> = (0..n).map(|s| game.edges(s).len()).collect();
    let mut work: Vec<usize> = (0..n).filter(|&s| reach[s]).collect();
    while let Some(t) = work.pop() {
        for &s in &preds[t] {
            if reach[s] {
                continue;
            }
            let joins = match game.owner(s) {
                o if o == own || o == Owner::Random => true,
                _ => {
                    missing[s] -= 1;
                    missing[s] == 0
                }
            };
            if joins {
                reach[s] = true;
                work.push(s);
            }
        }
    }
    StateSet::from_mask(reach).complement()
}

/// Concurrent counterpart: `s` joins the positive-reach set when every
/// opponent move admits some own move with a successor already in the set
/// (the reaching player randomizes uniformly over its moves).
pub fn zero_reach_states_concurrent(game: &ConcurrentGame, target: &StateSet, player: Player) -> StateSet {
    let n = game.num_states();
    let mut reach: Vec<bool> = (0..n).map(|s| target.contains(s)).collect();
    let hits = |s: usize, own: usize, opp: usize, reach: &[bool]| {
        let (a, b) = match player {
            Player::One => (own, opp),
            Player::Two => (opp, own),
        };
        game.transition(s, a, b).support().any(|t| reach[t])
    };
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..n {
            if reach[s] {
                continue;
            }
            let own_moves = game.moves(player, s).len();
            let opp_moves = game.moves(player.opponent(), s).len();
            if (0..opp_moves).all(|o| (0..own_moves).any(|m| hits(s, m, o, &reach))) {
                reach[s] = true;
                changed = true;
            }
        }
    }
    StateSet::from_mask(reach).complement()
}

/// Layered player-1 attractor to `target` and the pure selector moving one
/// layer down at every player-1 state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attractor {
    /// `stages[0]` is the target; each later stage strictly grows; the last is `S`.
    pub stages: Vec<StateSet>,
    /// Defined on every player-1 state.
    pub selector: PartialSelector,
}

/// `A_{i+1} = A_i + {s in S1 u SR | E(s) meets A_i} + {s in S2 | E(s) in A_i}`.
/// Fails unless the stages cover every state.
pub fn attractor_selector(game: &TurnBasedGame, target: &StateSet) -> Result<Attractor> {
    let n = game.num_states();
    let mut current = target.clone();
    let mut stages = vec![current.clone()];
    let mut selector = PartialSelector::undefined(n);
    for s in game.states_owned_by(Owner::Player1) {
        if current.contains(s) {
            selector.set(s, 0);
        }
    }
    loop {
        let mut next = current.clone();
        for s in 0..n {
            if current.contains(s) {
                continue;
            }
            let edges = game.edges(s);
            match game.owner(s) {
                Owner::Player2 => {
                    if edges.iter().all(|&t| current.contains(t)) {
                        next.insert(s);
                    }
                }
                owner => {
                    if let Some(e) = edges.iter().position(|&t| current.contains(t)) {
                        next.insert(s);
                        if owner == Owner::Player1 {
                            selector.set(s, e);
                        }
                    }
                }
            }
        }
        if next == current {
            break;
        }
        stages.push(next.clone());
        current = next;
    }
    if current.len() != n {
        return usage("attractor does not cover state space");
    }
    Ok(Attractor { stages, selector })
}
