//! Strategy improvement restricted to k-uniform selectors, via the turn-based
//! game where player 1 first commits to a k-uniform selector.

use crate::error::{Error, Result};
use crate::model::{ConcurrentGame, Distribution, Owner, StateSet, TurnBasedGame, Valuation};
use crate::rational::{format_rational, Rational};
use crate::safety::{solve_safety, SafetyOptions};

/// All distributions at `s` whose probabilities are `i/j` for a common
/// `j <= k`, reduced and deduplicated. For each `j` the numerator vectors are
/// listed in descending lexicographic order.
pub fn enumerate_k_uniform(game: &ConcurrentGame, s: usize, k: usize) -> Vec<Vec<(usize, Rational)>> {
    let m = game.moves1(s).len();
    let mut out: Vec<Vec<(usize, Rational)>> = Vec::new();
    for j in 1..=k {
        let mut parts = vec![0usize; m];
        compositions(j, 0, &mut parts, &mut |p| {
            let d: Vec<(usize, Rational)> = p
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(a, &c)| (a, Rational::new((c as i64).into(), (j as i64).into())))
                .collect();
            if !out.contains(&d) {
                out.push(d);
            }
        });
    }
    out
}

fn compositions(left: usize, i: usize, parts: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if i + 1 == parts.len() {
        parts[i] = left;
        f(parts);
        return;
    }
    for c in (0..=left).rev() {
        parts[i] = c;
        compositions(left - c, i + 1, parts, f);
    }
    parts[i] = 0;
}

fn binomial(n: u128, r: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Upper bound on the number of states [`k_uniform_turn_based`] creates.
pub fn k_uniform_size(game: &ConcurrentGame, k: usize) -> u128 {
    (0..game.num_states())
        .map(|s| {
            let m = game.moves1(s).len() as u128;
            let sel: u128 = (1..=k as u128).map(|j| binomial(j + m - 1, m - 1)).sum();
            1 + sel.saturating_mul(1 + game.moves2(s).len() as u128)
        })
        .fold(0u128, |a, b| a.saturating_add(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KUniformGame {
    pub game: TurnBasedGame,
    pub safe_set: StateSet,
    /// Original state behind every state.
    pub root: Vec<usize>,
}

/// Player 1 picks a k-uniform selector at `s` (a player-2 state), player 2
/// picks a move `b` (a random state), and chance mixes `delta(s, ., b)`.
pub fn k_uniform_turn_based(
    game: &ConcurrentGame,
    safe: &StateSet,
    k: usize,
    budget: u128,
) -> Result<KUniformGame> {
    let size = k_uniform_size(game, k);
    if size > budget {
        return Err(Error::Budget {
            what: format!("{k}-uniform expansion"),
            count: size,
            budget,
        });
    }
    let n = game.num_states();
    let mut ids: Vec<String> = game.states().to_vec();
    let mut owner = vec![Owner::Player1; n];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dist: Vec<Option<Distribution>> = vec![None; n];
    let mut root: Vec<usize> = (0..n).collect();
    for s in 0..n {
        for xi in enumerate_k_uniform(game, s, k) {
            let label: Vec<String> = (0..game.moves1(s).len())
                .map(|a| {
                    xi.iter()
                        .find(|(b, _)| *b == a)
                        .map(|(_, p)| format_rational(p))
                        .unwrap_or_else(|| "0".into())
                })
                .collect();
            let p = ids.len();
            ids.push(format!("{}#[{}]", game.state_id(s), label.join(",")));
            owner.push(Owner::Player2);
            edges.push(Vec::new());
            dist.push(None);
            root.push(s);
            edges[s].push(p);
            for b in 0..game.moves2(s).len() {
                let d = Distribution::mix(xi.iter().map(|(a, w)| (w, game.transition(s, *a, b))));
                let r = ids.len();
                ids.push(format!("{}#[{}]#{}", game.state_id(s), label.join(","), game.moves2(s)[b]));
                owner.push(Owner::Random);
                edges.push(d.support().collect());
                dist.push(Some(d));
                root.push(s);
                edges[p].push(r);
            }
        }
    }
    let safe_set = StateSet::from_mask(root.iter().map(|&r| safe.contains(r)).collect());
    Ok(KUniformGame {
        game: TurnBasedGame::new(ids, owner, edges, dist)?,
        safe_set,
        root,
    })
}

/// Valuations `z_i^k` of strategy improvement on the k-uniform game,
/// restricted to the original states.
pub fn k_uniform_iterates(
    game: &ConcurrentGame,
    safe: &StateSet,
    k: usize,
    options: &SafetyOptions,
) -> Result<Vec<Valuation>> {
    let kg = k_uniform_turn_based(game, safe, k, options.enum_budget)?;
    let report = solve_safety(&kg.game.to_concurrent(), &kg.safe_set, options)?;
    let n = game.num_states();
    let project = |v: &Valuation| Valuation::from_raw(v.values()[..n].to_vec());
    let mut out: Vec<Valuation> = report.records.iter().map(|r| project(&r.valuation)).collect();
    let last = project(&report.final_valuation);
    if out.last() != Some(&last) {
        out.push(last);
    }
    Ok(out)
}
