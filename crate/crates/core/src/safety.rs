//! Strategy improvement for concurrent safety games.
//!
//! Each iteration either switches the states where the one-step game value
//! beats the current value (a Pre step), or, when none exist, solves the
//! turn-based reduction at the current value and installs optimal selectors
//! whose counter-optimal replies keep the play safe (a TB step).

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{usage, Result};
use crate::matrix::{game_value, local_matrix, DEFAULT_ENUM_BUDGET};
use crate::mdp::safety_value_under;
use crate::model::{make_absorbing, ConcurrentGame, Player, Selector, StateSet, Valuation};
use crate::qualitative::{almost_sure_safe_concurrent, almost_sure_safe_turn_based};
use crate::rational::Rational;
use crate::reach::{reach_vi_step, round_all, Precision, DEFAULT_VI_PRECISION};
use crate::reduction::{lift_strategy, tb_reduce};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StepKind {
    PreStep,
    TbStep,
    Terminal,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::PreStep => "PreStep",
            StepKind::TbStep => "TbStep",
            StepKind::Terminal => "Terminal",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StopReason {
    ExactTermination,
    IterationCap,
    EpsilonGap,
    /// The upper-bound iteration reached an exact fixpoint.
    UpperStable,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::ExactTermination => "ExactTermination",
            StopReason::IterationCap => "IterationCap",
            StopReason::EpsilonGap => "EpsilonGap",
            StopReason::UpperStable => "UpperStable",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpperBoundSource {
    None,
    ValueIteration,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyOptions {
    /// Stop once `v_i + u_i >= 1 - epsilon` everywhere; needs an upper-bound source.
    pub epsilon_gap: Option<Rational>,
    pub max_iterations: usize,
    pub upper_bound_source: UpperBoundSource,
    /// Cap on support pairs tested per state by the reduction.
    pub enum_budget: u128,
    /// Arithmetic of the upper-bound value iteration.
    pub vi_precision: Precision,
}

impl Default for SafetyOptions {
    fn default() -> Self {
        SafetyOptions {
            epsilon_gap: None,
            max_iterations: 10_000,
            upper_bound_source: UpperBoundSource::None,
            enum_budget: DEFAULT_ENUM_BUDGET,
            vi_precision: DEFAULT_VI_PRECISION,
        }
    }
}

/// State of iteration `index` and the step taken from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    pub index: usize,
    pub selector: Selector,
    pub valuation: Valuation,
    /// `I` for a Pre step, `U` for a TB step, empty when terminal.
    pub improved_states: Vec<usize>,
    pub kind: StepKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveReport {
    pub records: Vec<IterationRecord>,
    pub terminated: bool,
    pub w1: StateSet,
    pub final_selector: Selector,
    pub final_valuation: Valuation,
    pub stop_reason: StopReason,
    /// Upper bounds `1 - u_j` when an upper-bound source is configured.
    pub upper: Vec<Valuation>,
    /// `max_s (upper - lower)` at the stop, when an upper-bound source is configured.
    pub gap: Option<Rational>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub selector: Selector,
    pub kind: StepKind,
    pub improved_states: Vec<usize>,
}

/// Uniform over player-1 moves at every state.
pub fn initial_selector(game: &ConcurrentGame) -> Selector {
    Selector::uniform(game, Player::One)
}

/// One improvement step. `game` must already have `W1 u T` absorbing and `v`
/// must be the exact value of `gamma` (re-checked here).
pub fn improvement_step(
    game: &ConcurrentGame,
    safe: &StateSet,
    w1: &StateSet,
    gamma: &Selector,
    v: &Valuation,
    budget: u128,
) -> Result<StepOutcome> {
    if safety_value_under(game, gamma, safe)? != *v {
        return usage("valuation is not the value of the given selector");
    }
    step(game, safe, w1, gamma, v, budget)
}

fn step(
    game: &ConcurrentGame,
    safe: &StateSet,
    w1: &StateSet,
    gamma: &Selector,
    v: &Valuation,
    budget: u128,
) -> Result<StepOutcome> {
    let n = game.num_states();
    let fixed = w1.union(&safe.complement());

    let mut next = gamma.clone();
    let mut improved = Vec::new();
    for s in (0..n).filter(|&s| !fixed.contains(s)) {
        let sol = game_value(&local_matrix(game, s, v));
        if sol.value > v[s] {
            next.set(
                s,
                sol.row_strategy
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .collect(),
            );
            improved.push(s);
        }
    }
    if !improved.is_empty() {
        return Ok(StepOutcome {
            selector: next,
            kind: StepKind::PreStep,
            improved_states: improved,
        });
    }

    let reduced = tb_reduce(game, v, safe, budget)?;
    let (a_bar, pi_bar) = almost_sure_safe_turn_based(&reduced.game, &reduced.safe_set);
    let u: Vec<usize> = (0..n).filter(|&s| a_bar.contains(s) && !w1.contains(s)).collect();
    if u.is_empty() {
        return Ok(StepOutcome {
            selector: gamma.clone(),
            kind: StepKind::Terminal,
            improved_states: Vec::new(),
        });
    }
    let u_set = StateSet::from_indices(n, u.iter().copied());
    Ok(StepOutcome {
        selector: lift_strategy(&reduced, &pi_bar, gamma, &u_set)?,
        kind: StepKind::TbStep,
        improved_states: u,
    })
}

/// Runs strategy improvement for `Safe(F)` from the uniform selector.
pub fn solve_safety(game: &ConcurrentGame, safe: &StateSet, options: &SafetyOptions) -> Result<SolveReport> {
    let n = game.num_states();
    if safe.universe() != n {
        return usage("safe set does not match the game");
    }
    let with_upper = options.upper_bound_source == UpperBoundSource::ValueIteration;
    if options.epsilon_gap.is_some() && !with_upper {
        return usage("an epsilon gap needs an upper-bound source");
    }
    let target = safe.complement();
    let (w1, witness) = almost_sure_safe_concurrent(game, safe);
    let g = make_absorbing(game, &w1.union(&target));

    let mut gamma = initial_selector(&g);
    let mut v = safety_value_under(&g, &gamma, safe)?;
    let mut records = Vec::new();

    // Player-2 reach iterates; upper bounds are their complements.
    let mut u = Valuation::indicator(&target);
    let mut upper = if with_upper { vec![u.complement()] } else { Vec::new() };
    let one_minus_eps = options
        .epsilon_gap
        .as_ref()
        .map(|e| Rational::one() - e);

    let mut stop = StopReason::IterationCap;
    let mut exact_upper: Option<Valuation> = None;
    for index in 0.. {
        if let Some(bound) = &one_minus_eps {
            if (0..n).all(|s| &(&v[s] + &u[s]) >= bound) {
                stop = StopReason::EpsilonGap;
                break;
            }
        }
        if index >= options.max_iterations {
            break;
        }
        let out = step(&g, safe, &w1, &gamma, &v, options.enum_budget)?;
        records.push(IterationRecord {
            index,
            selector: gamma.clone(),
            valuation: v.clone(),
            improved_states: out.improved_states.clone(),
            kind: out.kind,
        });
        if out.kind == StepKind::Terminal {
            stop = StopReason::ExactTermination;
            break;
        }
        gamma = out.selector;
        v = safety_value_under(&g, &gamma, safe)?;

        if with_upper {
            let next = reach_vi_step(game, &target, Player::Two, &u);
            if next == u.values() {
                exact_upper = Some(u.complement());
                stop = StopReason::UpperStable;
                break;
            }
            u = round_all(next, options.vi_precision, false);
            upper.push(u.complement());
        }
    }

    let final_selector = witness.complete(&gamma);
    let terminated = stop == StopReason::ExactTermination;
    let (final_valuation, gap) = match exact_upper {
        Some(exact) => (exact, Some(Rational::zero())),
        None => {
            let gap = upper.last().map(|up| v.max_gap_to(up));
            (v, gap)
        }
    };
    let gap = if terminated && with_upper { Some(Rational::zero()) } else { gap };
    Ok(SolveReport {
        records,
        terminated,
        w1,
        final_selector,
        final_valuation,
        stop_reason: stop,
        upper,
        gap,
    })
}
