//! Independent oracles and random instance generators shared by the
//! integration tests. Nothing here calls the solver code under test; only the
//! game data types are shared.
#![allow(dead_code)]

use csg::model::{ConcurrentGame, Distribution, Owner, StateSet, TurnBasedGame};
use csg::Rational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> csg::io::LoadedGame {
    let path: std::path::PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name].iter().collect();
    csg::io::parse_game(&path).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn r(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

// ---------------------------------------------------------------------------
// Exact linear algebra

/// Solves `A x = b` by Gauss-Jordan elimination; `None` if singular.
pub fn solve_linear(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&i| !a[i][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for j in col..n {
            a[col][j] = &a[col][j] / &p;
        }
        b[col] = &b[col] / &p;
        for i in 0..n {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in col..n {
                    let v = &f * &a[col][j];
                    a[i][j] -= v;
                }
                let v = &f * &b[col];
                b[i] -= v;
            }
        }
    }
    Some(b)
}

/// Probability of ever reaching `target` in a Markov chain given as sparse rows.
pub fn chain_reach(rows: &[Vec<(usize, Rational)>], target: &[bool]) -> Vec<Rational> {
    let n = rows.len();
    // Graph backward reachability to the target.
    let mut can = target.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for s in 0..n {
            if !can[s] && rows[s].iter().any(|(t, p)| p.is_positive() && can[*t]) {
                can[s] = true;
                changed = true;
            }
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| can[s] && !target[s]).collect();
    let pos: Vec<Option<usize>> = (0..n).map(|s| unknown.iter().position(|&u| u == s)).collect();
    let m = unknown.len();
    let mut a = vec![vec![Rational::zero(); m]; m];
    let mut b = vec![Rational::zero(); m];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += Rational::one();
        for (t, p) in &rows[s] {
            if target[*t] {
                b[i] += p;
            } else if let Some(j) = pos[*t] {
                a[i][j] -= p;
            }
        }
    }
    let x = solve_linear(a, b).expect("absorbing system is nonsingular");
    (0..n)
        .map(|s| {
            if target[s] {
                Rational::one()
            } else if let Some(i) = pos[s] {
                x[i].clone()
            } else {
                Rational::zero()
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Turn-based brute force over pure memoryless strategies

fn tb_chain(g: &TurnBasedGame, choice: &[usize]) -> Vec<Vec<(usize, Rational)>> {
    (0..g.num_states())
        .map(|s| match g.owner(s) {
            Owner::Random => g.distribution(s).unwrap().entries().to_vec(),
            _ => vec![(g.edges(s)[choice[s]], Rational::one())],
        })
        .collect()
}

fn strategies(g: &TurnBasedGame, owner: Owner) -> Vec<Vec<usize>> {
    let n = g.num_states();
    let mut out = vec![vec![0usize; n]];
    for s in 0..n {
        if g.owner(s) != owner {
            continue;
        }
        let mut next = Vec::new();
        for base in &out {
            for e in 0..g.edges(s).len() {
                let mut c = base.clone();
                c[s] = e;
                next.push(c);
            }
        }
        out = next;
    }
    out
}

/// `max_{s1} min_{s2}` over pure memoryless strategies of the probability
/// that player 1 (maximizer) reaches `target`.
pub fn brute_force_tb_reach(g: &TurnBasedGame, target: &[bool]) -> Vec<Rational> {
    let n = g.num_states();
    let s1 = strategies(g, Owner::Player1);
    let s2 = strategies(g, Owner::Player2);
    let mut best: Option<Vec<Rational>> = None;
    for a in &s1 {
        let mut worst: Option<Vec<Rational>> = None;
        for b in &s2 {
            let choice: Vec<usize> = (0..n)
                .map(|s| if g.owner(s) == Owner::Player1 { a[s] } else { b[s] })
                .collect();
            let v = chain_reach(&tb_chain(g, &choice), target);
            worst = Some(match worst {
                None => v,
                Some(w) => w.into_iter().zip(v).map(|(x, y)| x.min(y)).collect(),
            });
        }
        let w = worst.unwrap();
        best = Some(match best {
            None => w,
            Some(bb) => bb.into_iter().zip(w).map(|(x, y)| x.max(y)).collect(),
        });
    }
    best.unwrap()
}

/// Safety value of player 1 for `safe`: the complement of player 2's optimal
/// reach probability to the unsafe states, by brute force.
pub fn brute_force_tb_safety(g: &TurnBasedGame, safe: &[bool]) -> Vec<Rational> {
    let n = g.num_states();
    let s1 = strategies(g, Owner::Player1);
    let s2 = strategies(g, Owner::Player2);
    let bad: Vec<bool> = safe.iter().map(|b| !b).collect();
    let mut best: Option<Vec<Rational>> = None;
    for a in &s1 {
        let mut worst: Option<Vec<Rational>> = None;
        for b in &s2 {
            let choice: Vec<usize> = (0..n)
                .map(|s| if g.owner(s) == Owner::Player1 { a[s] } else { b[s] })
                .collect();
            let v: Vec<Rational> = chain_reach(&tb_chain(g, &choice), &bad)
                .into_iter()
                .map(|x| Rational::one() - x)
                .collect();
            worst = Some(match worst {
                None => v,
                Some(w) => w.into_iter().zip(v).map(|(x, y)| x.min(y)).collect(),
            });
        }
        let w = worst.unwrap();
        best = Some(match best {
            None => w,
            Some(bb) => bb.into_iter().zip(w).map(|(x, y)| x.max(y)).collect(),
        });
    }
    best.unwrap()
}

/// Per-state best safety probability player 1 can guarantee with a pure
/// memoryless strategy in a concurrent game. A lower bound on the value.
pub fn brute_force_pure_safety(g: &ConcurrentGame, safe: &StateSet) -> Vec<Rational> {
    let n = g.num_states();
    let bad: Vec<bool> = (0..n).map(|s| !safe.contains(s)).collect();
    let choices = |moves: &dyn Fn(usize) -> usize| -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for s in 0..n {
            let mut next = Vec::new();
            for c in &out {
                for m in 0..moves(s) {
                    let mut c: Vec<usize> = c.clone();
                    c.push(m);
                    next.push(c);
                }
            }
            out = next;
        }
        out
    };
    let p1 = choices(&|s| g.moves1(s).len());
    let p2 = choices(&|s| g.moves2(s).len());
    let mut best = vec![Rational::zero(); n];
    for a in &p1 {
        let mut worst: Option<Vec<Rational>> = None;
        for b in &p2 {
            let rows: Vec<Vec<(usize, Rational)>> =
                (0..n).map(|s| g.transition(s, a[s], b[s]).entries().to_vec()).collect();
            let v: Vec<Rational> = chain_reach(&rows, &bad).into_iter().map(|x| Rational::one() - x).collect();
            worst = Some(match worst {
                None => v,
                Some(w) => w.into_iter().zip(v).map(|(x, y)| x.min(y)).collect(),
            });
        }
        for (bs, w) in best.iter_mut().zip(worst.unwrap()) {
            if w > *bs {
                *bs = w;
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Matrix games

/// Exact matrix-game value by support enumeration: for every pair of equal-size
/// supports solve the indifference equations and keep equilibria.
pub fn support_enum_value(m: &[Vec<Rational>]) -> Rational {
    let rows = m.len();
    let cols = m[0].len();
    let subsets = |k: usize| -> Vec<Vec<usize>> {
        (1u32..(1 << k))
            .map(|mask| (0..k).filter(|i| mask >> i & 1 == 1).collect())
            .collect()
    };
    for ra in subsets(rows) {
        for cb in subsets(cols) {
            if ra.len() != cb.len() {
                continue;
            }
            let k = ra.len();
            // Row mix x on ra: x^T M[:, b] = w for b in cb, sum x = 1.
            let mut a = vec![vec![Rational::zero(); k + 1]; k + 1];
            let mut rhs = vec![Rational::zero(); k + 1];
            for (i, &b) in cb.iter().enumerate() {
                for (j, &ai) in ra.iter().enumerate() {
                    a[i][j] = m[ai][b].clone();
                }
                a[i][k] = -Rational::one();
            }
            for j in 0..k {
                a[k][j] = Rational::one();
            }
            rhs[k] = Rational::one();
            let Some(x) = solve_linear(a, rhs) else { continue };
            // Column mix y on cb: M[a, :] y = w for a in ra, sum y = 1.
            let mut a2 = vec![vec![Rational::zero(); k + 1]; k + 1];
            let mut rhs2 = vec![Rational::zero(); k + 1];
            for (i, &ai) in ra.iter().enumerate() {
                for (j, &b) in cb.iter().enumerate() {
                    a2[i][j] = m[ai][b].clone();
                }
                a2[i][k] = -Rational::one();
            }
            for j in 0..k {
                a2[k][j] = Rational::one();
            }
            rhs2[k] = Rational::one();
            let Some(y) = solve_linear(a2, rhs2) else { continue };
            if x[..k].iter().any(|p| p.is_negative()) || y[..k].iter().any(|p| p.is_negative()) {
                continue;
            }
            let w = x[k].clone();
            let mut full_x = vec![Rational::zero(); rows];
            for (j, &ai) in ra.iter().enumerate() {
                full_x[ai] = x[j].clone();
            }
            let mut full_y = vec![Rational::zero(); cols];
            for (j, &b) in cb.iter().enumerate() {
                full_y[b] = y[j].clone();
            }
            let col_ok = (0..cols).all(|b| {
                let v: Rational = (0..rows).map(|a| &full_x[a] * &m[a][b]).sum();
                v >= w
            });
            let row_ok = (0..rows).all(|a| {
                let v: Rational = (0..cols).map(|b| &full_y[b] * &m[a][b]).sum();
                v <= w
            });
            if col_ok && row_ok {
                return w;
            }
        }
    }
    panic!("no equilibrium found by support enumeration");
}

/// Distributions over `k` outcomes with probabilities in multiples of `1/mesh`.
pub fn grid_points(k: usize, mesh: i64) -> Vec<Vec<Rational>> {
    fn rec(k: usize, left: i64, mesh: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<Rational>>) {
        if cur.len() + 1 == k {
            cur.push(left);
            out.push(cur.iter().map(|&c| Rational::new(c.into(), mesh.into())).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(k, left - c, mesh, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, mesh, mesh, &mut Vec::new(), &mut out);
    out
}

/// Grid maximin and minimax at the given mesh: `(lower, upper)` brackets of the value.
pub fn grid_value_bracket(m: &[Vec<Rational>], mesh: i64) -> (Rational, Rational) {
    let rows = m.len();
    let cols = m[0].len();
    let lower = grid_points(rows, mesh)
        .iter()
        .map(|x| {
            (0..cols)
                .map(|b| (0..rows).map(|a| &x[a] * &m[a][b]).sum::<Rational>())
                .min()
                .unwrap()
        })
        .max()
        .unwrap();
    let upper = grid_points(cols, mesh)
        .iter()
        .map(|y| {
            (0..rows)
                .map(|a| (0..cols).map(|b| &y[b] * &m[a][b]).sum::<Rational>())
                .max()
                .unwrap()
        })
        .min()
        .unwrap();
    (lower, upper)
}

/// `(A, B)` pairs realized by optimal grid selectors at mesh `1/mesh`.
pub fn grid_support_pairs(m: &[Vec<Rational>], value: &Rational, mesh: i64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let rows = m.len();
    let cols = m[0].len();
    let mut out = Vec::new();
    for x in grid_points(rows, mesh) {
        let col: Vec<Rational> = (0..cols)
            .map(|b| (0..rows).map(|a| &x[a] * &m[a][b]).sum())
            .collect();
        if col.iter().min().unwrap() != value {
            continue;
        }
        let a: Vec<usize> = (0..rows).filter(|&a| !x[a].is_zero()).collect();
        let b: Vec<usize> = (0..cols).filter(|&b| &col[b] == value).collect();
        if !out.contains(&(a.clone(), b.clone())) {
            out.push((a, b));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// End components by brute force

/// Maximal end components of an MDP given as per-state action distributions,
/// by checking every state subset.
pub fn brute_force_mecs(actions: &[Vec<Vec<usize>>]) -> Vec<Vec<usize>> {
    let n = actions.len();
    let mut ecs: Vec<u32> = Vec::new();
    for mask in 1u32..(1 << n) {
        let inside = |t: usize| mask >> t & 1 == 1;
        let members: Vec<usize> = (0..n).filter(|&s| inside(s)).collect();
        let kept: Vec<Vec<&Vec<usize>>> = members
            .iter()
            .map(|&s| actions[s].iter().filter(|succ| succ.iter().all(|&t| inside(t))).collect())
            .collect();
        if kept.iter().any(|k| k.is_empty()) {
            continue;
        }
        // strongly connected: every member reaches every member
        let reach_from = |start: usize| -> u32 {
            let mut seen = 1u32 << start;
            let mut stack = vec![start];
            while let Some(s) = stack.pop() {
                let i = members.iter().position(|&m| m == s).unwrap();
                for succ in &kept[i] {
                    for &t in succ.iter() {
                        if seen >> t & 1 == 0 {
                            seen |= 1 << t;
                            stack.push(t);
                        }
                    }
                }
            }
            seen
        };
        if members.iter().all(|&s| reach_from(s) == mask) {
            ecs.push(mask);
        }
    }
    let maximal: Vec<u32> = ecs
        .iter()
        .copied()
        .filter(|&c| !ecs.iter().any(|&d| d != c && d & c == c))
        .collect();
    let mut out: Vec<Vec<usize>> = maximal
        .into_iter()
        .map(|c| (0..n).filter(|&s| c >> s & 1 == 1).collect())
        .collect();
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// Random instances

fn dyadic_split<R: Rng>(rng: &mut R, k: usize, bits: u32) -> Vec<Rational> {
    let total: i64 = 1 << bits;
    let total = total.max(k as i64);
    let mut cuts: Vec<i64> = Vec::new();
    while cuts.len() + 1 < k {
        let c = rng.gen_range(1..total);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort();
    let mut prev = 0;
    let mut out = Vec::new();
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(Rational::new((c - prev).into(), total.into()));
        prev = c;
    }
    out
}

fn pick_successors<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k.min(n));
    all
}

/// Random turn-based game with `2..=max_states` states, branching up to
/// `max_branch`, dyadic probabilities with denominators up to `2^bits`.
pub fn random_turn_based<R: Rng>(rng: &mut R, max_states: usize, max_branch: usize, bits: u32) -> TurnBasedGame {
    let n = rng.gen_range(2..=max_states);
    let mut b = TurnBasedGame::builder();
    let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    for i in 0..n {
        let k = rng.gen_range(1..=max_branch.min(n));
        let succ = pick_successors(rng, n, k);
        let names: Vec<&str> = succ.iter().map(|&t| ids[t].as_str()).collect();
        match rng.gen_range(0..3) {
            0 => {
                b.p1(&ids[i], &names);
            }
            1 => {
                b.p2(&ids[i], &names);
            }
            _ => {
                let ps = dyadic_split(rng, names.len(), bits);
                let d: Vec<(&str, Rational)> = names.iter().copied().zip(ps).collect();
                b.random(&ids[i], &d);
            }
        }
    }
    b.build().expect("generated game is valid")
}

/// Random binary turn-based game: random states flip a fair coin over at most
/// two successors. `random_states` of the states are random.
pub fn random_binary<R: Rng>(rng: &mut R, n: usize, random_states: usize, max_branch: usize) -> TurnBasedGame {
    let mut b = TurnBasedGame::builder();
    let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut kinds: Vec<u8> = (0..n).map(|i| if i < random_states { 2 } else { rng.gen_range(0..2) }).collect();
    kinds.shuffle(rng);
    for i in 0..n {
        match kinds[i] {
            2 => {
                let succ = { let k = rng.gen_range(1..=2); pick_successors(rng, n, k) };
                let p = Rational::new(1.into(), (succ.len() as i64).into());
                let d: Vec<(&str, Rational)> = succ.iter().map(|&t| (ids[t].as_str(), p.clone())).collect();
                b.random(&ids[i], &d);
            }
            k => {
                let succ = { let k = rng.gen_range(1..=max_branch.min(n)); pick_successors(rng, n, k) };
                let names: Vec<&str> = succ.iter().map(|&t| ids[t].as_str()).collect();
                if k == 0 {
                    b.p1(&ids[i], &names);
                } else {
                    b.p2(&ids[i], &names);
                }
            }
        }
    }
    b.build().expect("generated game is valid")
}

/// Random concurrent game: up to `max_states` states, up to `max_moves` moves
/// per player, each move pair leads to one or two successors.
pub fn random_concurrent<R: Rng>(rng: &mut R, max_states: usize, max_moves: usize, bits: u32) -> ConcurrentGame {
    let n = rng.gen_range(2..=max_states);
    let mut b = ConcurrentGame::builder();
    let ids: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let m1n = ["a", "b", "c"];
    let m2n = ["x", "y", "z"];
    for i in 0..n {
        let k1 = rng.gen_range(1..=max_moves);
        let k2 = rng.gen_range(1..=max_moves);
        b.state(&ids[i], &m1n[..k1], &m2n[..k2]);
        for a in 0..k1 {
            for c in 0..k2 {
                let succ = { let k = rng.gen_range(1..=2); pick_successors(rng, n, k) };
                let ps = dyadic_split(rng, succ.len(), bits);
                let d: Vec<(&str, Rational)> = succ.iter().map(|&t| ids[t].as_str()).zip(ps).collect();
                b.transition(&ids[i], m1n[a], m2n[c], &d);
            }
        }
    }
    b.build().expect("generated game is valid")
}

/// Safety instance with `3..=max_states` states, the last two being an
/// absorbing safe sink and an absorbing unsafe sink, so values are
/// typically strictly between 0 and 1. Non-sink states get exactly
/// `max_moves` moves per player.
pub fn random_safety_game<R: Rng>(
    rng: &mut R,
    max_states: usize,
    max_moves: usize,
    bits: u32,
) -> (ConcurrentGame, StateSet) {
    let inner = rng.gen_range(1..=max_states.max(3) - 2);
    let n = inner + 2;
    let mut b = ConcurrentGame::builder();
    let ids: Vec<String> = (0..inner)
        .map(|i| format!("s{i}"))
        .chain(["good".to_string(), "bad".to_string()])
        .collect();
    let m1n = ["a", "b", "c"];
    let m2n = ["x", "y", "z"];
    for i in 0..inner {
        let (k1, k2) = (max_moves, max_moves);
        b.state(&ids[i], &m1n[..k1], &m2n[..k2]);
        for a in 0..k1 {
            for c in 0..k2 {
                let succ = {
                    let k = rng.gen_range(1..=2);
                    pick_successors(rng, n, k)
                };
                let ps = dyadic_split(rng, succ.len(), bits);
                let d: Vec<(&str, Rational)> = succ.iter().map(|&t| ids[t].as_str()).zip(ps).collect();
                b.transition(&ids[i], m1n[a], m2n[c], &d);
            }
        }
    }
    b.absorbing("good").absorbing("bad");
    let game = b.build().expect("generated game is valid");
    let mut mask: Vec<bool> = (0..inner).map(|_| rng.gen_bool(0.85)).collect();
    mask.extend([true, false]);
    (game, StateSet::from_mask(mask))
}

pub fn random_subset<R: Rng>(rng: &mut R, n: usize) -> StateSet {
    StateSet::from_mask((0..n).map(|_| rng.gen_bool(0.6)).collect())
}

/// Sparse rows of a turn-based game seen as a Markov chain (random states only
/// have a distribution; callers fix choices first).
pub fn dist_rows(d: &[Distribution]) -> Vec<Vec<(usize, Rational)>> {
    d.iter().map(|x| x.entries().to_vec()).collect()
}

// ---------------------------------------------------------------------------
// One-shot game values from raw game data

/// `M[a][b] = sum_t delta(s, a, b)(t) * v(t)`.
pub fn local_payoff(g: &ConcurrentGame, s: usize, v: &[Rational]) -> Vec<Vec<Rational>> {
    (0..g.moves1(s).len())
        .map(|a| {
            (0..g.moves2(s).len())
                .map(|b| g.transition(s, a, b).entries().iter().map(|(t, p)| p * &v[*t]).sum())
                .collect()
        })
        .collect()
}

/// Player-1 one-shot value at `s`, by support enumeration.
pub fn oracle_pre1(g: &ConcurrentGame, s: usize, v: &[Rational]) -> Rational {
    support_enum_value(&local_payoff(g, s, v))
}

/// Single-state concurrent game whose local matrix at state 0 under
/// [`matrix_valuation`] equals `m` (entries in `[0, 1]`).
pub fn matrix_as_game(m: &[Vec<Rational>]) -> ConcurrentGame {
    let rows: Vec<String> = (0..m.len()).map(|a| format!("r{a}")).collect();
    let cols: Vec<String> = (0..m[0].len()).map(|b| format!("c{b}")).collect();
    let rr: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
    let cc: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut b = ConcurrentGame::builder();
    b.state("s", &rr, &cc);
    for (a, row) in m.iter().enumerate() {
        for (c, p) in row.iter().enumerate() {
            let mut d = Vec::new();
            if !p.is_zero() {
                d.push(("win", p.clone()));
            }
            if !p.is_one() {
                d.push(("lose", Rational::one() - p));
            }
            b.transition("s", rr[a], cc[c], &d);
        }
    }
    b.absorbing("win").absorbing("lose");
    b.build().expect("matrix game is valid")
}

/// Valuation for [`matrix_as_game`]: 0 at the matrix state and at `lose`, 1 at `win`.
pub fn matrix_valuation() -> Vec<Rational> {
    vec![Rational::zero(), Rational::one(), Rational::zero()]
}

/// Random matrix with entries in multiples of `1/4`.
pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<Rational>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| r(rng.gen_range(0..=4), 4)).collect())
        .collect()
}
