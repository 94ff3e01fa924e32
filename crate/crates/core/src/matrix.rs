//! One-shot zero-sum matrix games and the one-step operators built on them.

use num_traits::{One, Zero};

use crate::error::{usage, Error, Result};
use crate::lp::{solve_lp, solve_max_slack, Direction, LinearProgram, Relation};
use crate::model::{check_selector_at, ConcurrentGame, Player, Selector, Valuation};
use crate::rational::Rational;

/// Default cap on the number of (A, B) support pairs `opt_sel_count` may test.
pub const DEFAULT_ENUM_BUDGET: u128 = 1 << 20;

/// Row player maximizes, column player minimizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixGame {
    pub row_moves: Vec<String>,
    pub col_moves: Vec<String>,
    pub payoff: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameSolution {
    pub value: Rational,
    pub row_strategy: Vec<Rational>,
    pub col_strategy: Vec<Rational>,
}

impl MatrixGame {
    pub fn rows(&self) -> usize {
        self.payoff.len()
    }

    pub fn cols(&self) -> usize {
        self.col_moves.len()
    }

    /// Expected payoff of each pure column against row mix `x`.
    pub fn column_payoffs(&self, x: &[Rational]) -> Vec<Rational> {
        (0..self.cols())
            .map(|b| {
                (0..self.rows())
                    .filter(|&a| !x[a].is_zero())
                    .map(|a| &x[a] * &self.payoff[a][b])
                    .sum()
            })
            .collect()
    }

    /// Expected payoff of each pure row against column mix `y`.
    pub fn row_payoffs(&self, y: &[Rational]) -> Vec<Rational> {
        self.payoff
            .iter()
            .map(|row| {
                row.iter()
                    .zip(y)
                    .filter(|(_, q)| !q.is_zero())
                    .map(|(m, q)| m * q)
                    .sum()
            })
            .collect()
    }

    /// `x^T M y`.
    pub fn bilinear(&self, x: &[Rational], y: &[Rational]) -> Rational {
        self.column_payoffs(x)
            .iter()
            .zip(y)
            .map(|(c, q)| c * q)
            .sum()
    }

    /// Rows and columns exchanged; the new row player is the old column player
    /// and now maximizes the same payoff.
    pub fn transposed(&self) -> MatrixGame {
        MatrixGame {
            row_moves: self.col_moves.clone(),
            col_moves: self.row_moves.clone(),
            payoff: (0..self.cols())
                .map(|b| (0..self.rows()).map(|a| self.payoff[a][b].clone()).collect())
                .collect(),
        }
    }

    /// The game seen from the column player: transposed and complemented, so
    /// the new row player maximizes `1 - payoff`.
    pub fn swapped(&self) -> MatrixGame {
        MatrixGame {
            row_moves: self.col_moves.clone(),
            col_moves: self.row_moves.clone(),
            payoff: (0..self.cols())
                .map(|b| {
                    (0..self.rows())
                        .map(|a| Rational::one() - &self.payoff[a][b])
                        .collect()
                })
                .collect(),
        }
    }
}

fn min_of(v: &[Rational]) -> Rational {
    v.iter().min().cloned().expect("non-empty move set")
}

fn max_of(v: &[Rational]) -> Rational {
    v.iter().max().cloned().expect("non-empty move set")
}

/// `payoff[a][b] = sum_t v(t) * delta(s, a, b)(t)`.
pub fn local_matrix(game: &ConcurrentGame, s: usize, v: &Valuation) -> MatrixGame {
    MatrixGame {
        row_moves: game.moves1(s).to_vec(),
        col_moves: game.moves2(s).to_vec(),
        payoff: (0..game.moves1(s).len())
            .map(|a| {
                (0..game.moves2(s).len())
                    .map(|b| game.transition(s, a, b).expectation(v.values()))
                    .collect()
            })
            .collect(),
    }
}

fn unit(k: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); k];
    v[i] = Rational::one();
    v
}

/// Value and optimal mixed strategies. A pure saddle point is returned when
/// one exists (first in row-major order); otherwise both LPs are solved and
/// their optima must agree exactly.
pub fn game_value(m: &MatrixGame) -> GameSolution {
    let (rows, cols) = (m.rows(), m.cols());
    let row_min: Vec<Rational> = m.payoff.iter().map(|r| min_of(r)).collect();
    let col_max: Vec<Rational> = (0..cols)
        .map(|b| max_of(&m.payoff.iter().map(|r| r[b].clone()).collect::<Vec<_>>()))
        .collect();
    for a in 0..rows {
        for b in 0..cols {
            if m.payoff[a][b] == row_min[a] && m.payoff[a][b] == col_max[b] {
                return GameSolution {
                    value: m.payoff[a][b].clone(),
                    row_strategy: unit(rows, a),
                    col_strategy: unit(cols, b),
                };
            }
        }
    }

    let (value, row_strategy) = solve_side(m, true);
    let (dual, col_strategy) = solve_side(m, false);
    assert_eq!(value, dual, "matrix game primal and dual values differ");
    GameSolution {
        value,
        row_strategy,
        col_strategy,
    }
}

/// Row LP (`max w : x^T M >= w`) or column LP (`min z : M y <= z`).
fn solve_side(m: &MatrixGame, row_side: bool) -> (Rational, Vec<Rational>) {
    let k = if row_side { m.rows() } else { m.cols() };
    let other = if row_side { m.cols() } else { m.rows() };
    let mut lp = LinearProgram::new(if row_side {
        Direction::Maximize
    } else {
        Direction::Minimize
    });
    let vars: Vec<usize> = (0..k)
        .map(|i| lp.add_variable(format!("p{i}"), Some(Rational::zero()), None))
        .collect();
    let w = lp.add_variable("w", None, None);
    lp.set_objective(w, Rational::one());
    lp.add_constraint(
        vars.iter().map(|&x| (x, Rational::one())).collect(),
        Relation::Eq,
        Rational::one(),
    );
    for j in 0..other {
        let mut coeffs: Vec<(usize, Rational)> = vars
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let e = if row_side { &m.payoff[i][j] } else { &m.payoff[j][i] };
                (x, e.clone())
            })
            .collect();
        coeffs.push((w, -Rational::one()));
        let rel = if row_side { Relation::Ge } else { Relation::Le };
        lp.add_constraint(coeffs, rel, Rational::zero());
    }
    let sol = solve_lp(&lp).expect("matrix game LP is well formed");
    assert!(sol.is_optimal(), "matrix game LP must have an optimum");
    let mut x = sol.assignment;
    let value = x.pop().expect("value variable");
    (value, x)
}

/// `Pre_{xi1,xi2}(v)(s)`.
pub fn pre_both(
    game: &ConcurrentGame,
    s: usize,
    v: &Valuation,
    xi1: &Selector,
    xi2: &Selector,
) -> Result<Rational> {
    check_selector_at(game, xi1, Player::One, s)?;
    check_selector_at(game, xi2, Player::Two, s)?;
    let m = local_matrix(game, s, v);
    Ok(m.bilinear(&xi1.dense(s, m.rows()), &xi2.dense(s, m.cols())))
}

/// `Pre_{1;xi1}(v)(s)`: the minimum over pure columns.
pub fn pre_fixed1(game: &ConcurrentGame, s: usize, v: &Valuation, xi1: &Selector) -> Result<Rational> {
    check_selector_at(game, xi1, Player::One, s)?;
    let m = local_matrix(game, s, v);
    Ok(min_of(&m.column_payoffs(&xi1.dense(s, m.rows()))))
}

/// `Pre_1(v)(s)`.
pub fn pre1(game: &ConcurrentGame, s: usize, v: &Valuation) -> Rational {
    game_value(&local_matrix(game, s, v)).value
}

/// One-step value of `v` at `s` when `player` maximizes and the other minimizes.
pub fn pre_value(game: &ConcurrentGame, s: usize, v: &Valuation, player: Player) -> Rational {
    let m = local_matrix(game, s, v);
    match player {
        Player::One => game_value(&m).value,
        Player::Two => game_value(&m.transposed()).value,
    }
}

/// `Pre_1(v)` at every state.
pub fn pre1_all(game: &ConcurrentGame, v: &Valuation) -> Vec<Rational> {
    (0..game.num_states()).map(|s| pre1(game, s, v)).collect()
}

/// `Pre_{1;xi1}(v)` at every state.
pub fn pre_fixed1_all(game: &ConcurrentGame, v: &Valuation, xi1: &Selector) -> Result<Vec<Rational>> {
    (0..game.num_states())
        .map(|s| pre_fixed1(game, s, v, xi1))
        .collect()
}

/// Whether `xi1` is optimal at `s` for `v`.
pub fn is_opt_sel(game: &ConcurrentGame, s: usize, v: &Valuation, xi1: &Selector) -> Result<bool> {
    Ok(pre_fixed1(game, s, v, xi1)? == pre1(game, s, v))
}

/// Player-2 moves that hold an optimal `xi1` down to exactly `Pre_1(v)(s)`.
pub fn count_opt(game: &ConcurrentGame, s: usize, v: &Valuation, xi1: &Selector) -> Result<Vec<usize>> {
    check_selector_at(game, xi1, Player::One, s)?;
    let m = local_matrix(game, s, v);
    let value = game_value(&m).value;
    let cols = m.column_payoffs(&xi1.dense(s, m.rows()));
    if min_of(&cols) != value {
        return usage(format!(
            "selector is not optimal at state {}",
            game.state_id(s)
        ));
    }
    Ok(cols
        .iter()
        .enumerate()
        .filter_map(|(b, c)| (*c == value).then_some(b))
        .collect())
}

/// A realizable (support, counter-optimal set) pair with its witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportPair {
    /// Player-1 move indices, ascending.
    pub a: Vec<usize>,
    /// Player-2 move indices, ascending.
    pub b: Vec<usize>,
    /// Dense distribution over player-1 moves with support exactly `a`.
    pub witness: Vec<Rational>,
}

fn bits(mask: u64, k: usize) -> Vec<usize> {
    (0..k).filter(|i| mask >> i & 1 == 1).collect()
}

/// Number of subset pairs `opt_sel_count` tests at `s`.
pub fn support_pair_count(m1: usize, m2: usize) -> u128 {
    let sub = |k: usize| -> u128 {
        if k >= 127 {
            u128::MAX
        } else {
            (1u128 << k) - 1
        }
    };
    sub(m1).saturating_mul(sub(m2))
}

/// All `(A, B)` such that some optimal `xi1` has support exactly `A` and
/// counter-optimal set exactly `B`. Subsets are enumerated in increasing
/// bitmask order (A outer, B inner).
pub fn opt_sel_count(
    game: &ConcurrentGame,
    s: usize,
    v: &Valuation,
    budget: u128,
) -> Result<Vec<SupportPair>> {
    let m = local_matrix(game, s, v);
    opt_sel_count_matrix(&m, budget)
}

pub fn opt_sel_count_matrix(m: &MatrixGame, budget: u128) -> Result<Vec<SupportPair>> {
    let (k1, k2) = (m.rows(), m.cols());
    let count = support_pair_count(k1, k2);
    if count > budget {
        return Err(Error::Budget {
            what: "support-pair enumeration".into(),
            count,
            budget,
        });
    }
    let value = game_value(m).value;
    let mut out = Vec::new();
    for amask in 1u64..(1u64 << k1) {
        let a_set = bits(amask, k1);
        // Columns that some optimal selector on A can push strictly above the
        // value must be excluded from B; test each B exactly.
        for bmask in 1u64..(1u64 << k2) {
            let b_set = bits(bmask, k2);
            let mut lp = LinearProgram::new(Direction::Maximize);
            let x: Vec<usize> = a_set
                .iter()
                .map(|&a| lp.add_variable(format!("x{a}"), Some(Rational::zero()), None))
                .collect();
            let mut strict: Vec<usize> = x
                .iter()
                .map(|&xi| lp.add_constraint(vec![(xi, Rational::one())], Relation::Ge, Rational::zero()))
                .collect();
            lp.add_constraint(
                x.iter().map(|&xi| (xi, Rational::one())).collect(),
                Relation::Eq,
                Rational::one(),
            );
            for b in 0..k2 {
                let coeffs: Vec<(usize, Rational)> = a_set
                    .iter()
                    .zip(&x)
                    .map(|(&a, &xi)| (xi, m.payoff[a][b].clone()))
                    .collect();
                if bmask >> b & 1 == 1 {
                    lp.add_constraint(coeffs, Relation::Eq, value.clone());
                } else {
                    strict.push(lp.add_constraint(coeffs, Relation::Ge, value.clone()));
                }
            }
            let sol = solve_max_slack(&lp, &strict).expect("support LP is well formed");
            if sol.strictly_feasible() {
                let mut witness = vec![Rational::zero(); k1];
                for (&a, p) in a_set.iter().zip(sol.assignment) {
                    witness[a] = p;
                }
                out.push(SupportPair {
                    a: a_set.clone(),
                    b: b_set,
                    witness,
                });
            }
        }
    }
    Ok(out)
}
