//! Exact Nash equilibrium computation for small bimatrix games.
//!
//! [`enumerate_equilibria`] solves the indifference systems of every pair of
//! equal-size supports. [`lemke_howson`] follows one complementary pivoting
//! path and serves as an independent cross-check. Both are generic over
//! [`Scalar`] but are meant to be run on exact rationals: near-degenerate
//! floating-point systems would invent or lose equilibria.

use crate::bimatrix::{is_nash, BimatrixGame, MixedProfile};
use crate::error::{Error, Result};
use crate::linalg::{solve, LinearSolution, Matrix};
use crate::scalar::{rational_to_string, Scalar};
use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;

/// Largest number of pure strategies per player accepted by the enumerator.
pub const MAX_ENUM_SIZE: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub support_x: Vec<usize>,
    pub support_y: Vec<usize>,
    pub payoff_1: T,
    pub payoff_2: T,
    pub is_pure: bool,
}

impl<T: Scalar> Equilibrium<T> {
    fn new(x: Vec<T>, y: Vec<T>, payoff_1: T, payoff_2: T) -> Self {
        let support = |v: &[T]| v.iter().enumerate().filter(|(_, c)| **c > T::zero()).map(|(i, _)| i).collect::<Vec<_>>();
        let support_x = support(&x);
        let support_y = support(&y);
        let is_pure = support_x.len() == 1 && support_y.len() == 1;
        Self { x, y, support_x, support_y, payoff_1, payoff_2, is_pure }
    }

    pub fn profile(&self) -> MixedProfile<T> {
        MixedProfile::from_parts_unchecked(self.x.clone(), self.y.clone())
    }

    /// Deterministic report order: supports first, then the mixtures.
    fn order(&self, other: &Self) -> Ordering {
        self.support_x
            .cmp(&other.support_x)
            .then_with(|| self.support_y.cmp(&other.support_y))
            .then_with(|| lex(&self.x, &other.x))
            .then_with(|| lex(&self.y, &other.y))
    }
}

fn lex<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        match p.partial_cmp(q) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationReport<T> {
    pub equilibria: Vec<Equilibrium<T>>,
    /// Set when the game is degenerate; the list then holds only the
    /// equilibria found on equal-size supports and may be incomplete.
    pub degenerate: bool,
}

impl<T: Scalar> EnumerationReport<T> {
    pub fn count(&self) -> usize {
        self.equilibria.len()
    }

    pub fn pure_count(&self) -> usize {
        self.equilibria.iter().filter(|e| e.is_pure).count()
    }

    pub fn contains(&self, eq: &Equilibrium<T>) -> bool {
        self.equilibria.iter().any(|e| e.x == eq.x && e.y == eq.y)
    }
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Solves for a mixture on `own` that makes the opponent indifferent among
/// `targets`: unknowns `(w_own..., value)`, equations
/// `Σ_i pay(i, t) w_i = value` for `t` in `targets` and `Σ w = 1`.
/// `pay(i, t)` is the opponent's payoff when this player uses `i`.
fn indifference<T: Scalar>(own: &[usize], targets: &[usize], pay: impl Fn(usize, usize) -> T) -> LinearSolution<T> {
    let k = own.len();
    let mut rows = Vec::with_capacity(targets.len() + 1);
    let mut rhs = Vec::with_capacity(targets.len() + 1);
    for &t in targets {
        let mut r: Vec<T> = own.iter().map(|&i| pay(i, t)).collect();
        r.push(-T::one());
        rows.push(r);
        rhs.push(T::zero());
    }
    let mut r = vec![T::one(); k];
    r.push(T::zero());
    rows.push(r);
    rhs.push(T::one());
    solve(&Matrix::from_rows(rows).expect("rectangular"), &rhs)
}

fn embed<T: Scalar>(len: usize, support: &[usize], values: &[T]) -> Vec<T> {
    let mut v = vec![T::zero(); len];
    for (&i, w) in support.iter().zip(values) {
        v[i] = w.clone();
    }
    v
}

fn max_of<T: Scalar>(v: &[T]) -> T {
    v.iter()
        .skip(1)
        .fold(v[0].clone(), |acc, c| if *c > acc { c.clone() } else { acc })
}

fn check_size<T: Scalar>(game: &BimatrixGame<T>) -> Result<()> {
    if game.rows() > MAX_ENUM_SIZE || game.cols() > MAX_ENUM_SIZE {
        return Err(Error::Size { rows: game.rows(), cols: game.cols(), limit: MAX_ENUM_SIZE });
    }
    Ok(())
}

/// Looks for a mixed strategy of one player with more pure best responses
/// than its support size.
///
/// If such a strategy exists, one exists at a vertex of the region where a
/// fixed set of opponent strategies ties for best; there the indifference
/// system is uniquely solvable, so it suffices to scan supports `S` and tie
/// sets `T` with `|T| > |S|` for unique, strictly positive solutions.
fn best_response_excess<T: Scalar>(
    own_len: usize,
    opp_len: usize,
    pay: impl Fn(usize, usize) -> T + Sync,
) -> Option<(Vec<usize>, Vec<usize>)> {
    for k in 1..=own_len {
        for s in subsets(own_len, k) {
            for t_size in (k + 1)..=opp_len {
                for t in subsets(opp_len, t_size) {
                    let LinearSolution::Unique(sol) = indifference(&s, &t, &pay) else { continue };
                    let (w, value) = sol.split_at(k);
                    if w.iter().any(|c| *c <= T::zero()) {
                        continue;
                    }
                    let full = embed(own_len, &s, w);
                    let opp_best = (0..opp_len).all(|j| {
                        let p = full.iter().enumerate().fold(T::zero(), |acc, (i, c)| acc + c.clone() * pay(i, j));
                        p <= value[0]
                    });
                    if opp_best {
                        return Some((s, t));
                    }
                }
            }
        }
    }
    None
}

/// A game is nondegenerate when no mixed strategy of either player has more
/// pure best responses than the size of its support.
pub fn is_nondegenerate<T: Scalar>(game: &BimatrixGame<T>) -> bool {
    degeneracy_witness(game).is_none()
}

/// Describes a mixed strategy with too many best responses, if one exists.
pub fn degeneracy_witness<T: Scalar>(game: &BimatrixGame<T>) -> Option<String> {
    let (a, b) = (game.payoff_a(), game.payoff_b());
    if let Some((s, t)) = best_response_excess(game.rows(), game.cols(), |i, j| b[(i, j)].clone()) {
        return Some(format!("row mixture on {s:?} has best responses {t:?}"));
    }
    if let Some((s, t)) = best_response_excess(game.cols(), game.rows(), |j, i| a[(i, j)].clone()) {
        return Some(format!("column mixture on {s:?} has best responses {t:?}"));
    }
    None
}

/// Every Nash equilibrium of a nondegenerate game, by support enumeration.
pub fn enumerate_equilibria<T: Scalar>(game: &BimatrixGame<T>) -> Result<EnumerationReport<T>> {
    check_size(game)?;
    let (m, n) = (game.rows(), game.cols());
    let pairs: Vec<(Vec<usize>, Vec<usize>)> = (1..=m.min(n))
        .flat_map(|k| {
            let cols = subsets(n, k);
            subsets(m, k)
                .into_iter()
                .flat_map(move |s| cols.clone().into_iter().map(move |t| (s.clone(), t)))
        })
        .collect();

    let mut equilibria: Vec<Equilibrium<T>> = pairs
        .par_iter()
        .filter_map(|(s, t)| support_pair_equilibrium(game, s, t))
        .collect();
    equilibria.sort_by(|p, q| p.order(q));
    equilibria.dedup_by(|p, q| p.x == q.x && p.y == q.y);

    Ok(EnumerationReport { equilibria, degenerate: !is_nondegenerate(game) })
}

fn support_pair_equilibrium<T: Scalar>(game: &BimatrixGame<T>, s: &[usize], t: &[usize]) -> Option<Equilibrium<T>> {
    let (a, b) = (game.payoff_a(), game.payoff_b());
    let k = s.len();
    // x on s makes the column player indifferent over t, and vice versa
    let LinearSolution::Unique(xs) = indifference(s, t, |i, j| b[(i, j)].clone()) else { return None };
    let LinearSolution::Unique(yt) = indifference(t, s, |j, i| a[(i, j)].clone()) else { return None };
    let (xw, v) = xs.split_at(k);
    let (yw, u) = yt.split_at(k);
    if xw.iter().chain(yw).any(|c| *c <= T::zero()) {
        return None;
    }
    let x = embed(game.rows(), s, xw);
    let y = embed(game.cols(), t, yw);
    let eps = T::default_eps();
    if max_of(&game.row_payoffs(&y)) > u[0].clone() + eps.clone() || max_of(&game.col_payoffs(&x)) > v[0].clone() + eps {
        return None;
    }
    Some(Equilibrium::new(x, y, u[0].clone(), v[0].clone()))
}

/// Checks an equilibrium against [`is_nash`] with zero tolerance.
pub fn verify_equilibrium<T: Scalar>(game: &BimatrixGame<T>, eq: &Equilibrium<T>) -> bool {
    is_nash(game, &eq.profile(), &T::zero()).unwrap_or(false)
}

/// Variables of the two Lemke-Howson tableaux. Labels: `X(i)` and `R(i)` carry
/// label `i`, `Y(j)` and `S(j)` carry label `m + j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    X(usize),
    Y(usize),
    /// slack of row `i` in `A y + r = 1`
    R(usize),
    /// slack of column `j` in `Bᵀ x + s = 1`
    S(usize),
}

impl Var {
    fn label(self, m: usize) -> usize {
        match self {
            Var::X(i) | Var::R(i) => i,
            Var::Y(j) | Var::S(j) => m + j,
        }
    }
}

struct Tableau<T> {
    /// column variables, in order
    vars: Vec<Var>,
    /// rows of coefficients over `vars` followed by the right-hand side
    rows: Vec<Vec<T>>,
    basis: Vec<Var>,
}

impl<T: Scalar> Tableau<T> {
    fn new(payoff: &Matrix<T>, decision: fn(usize) -> Var, slack: fn(usize) -> Var) -> Self {
        let (r, c) = (payoff.rows(), payoff.cols());
        let mut vars: Vec<Var> = (0..c).map(decision).collect();
        vars.extend((0..r).map(slack));
        let rows = (0..r)
            .map(|i| {
                let mut row = payoff.row(i).to_vec();
                row.extend((0..r).map(|l| if l == i { T::one() } else { T::zero() }));
                row.push(T::one());
                row
            })
            .collect();
        Self { vars, rows, basis: (0..r).map(slack).collect() }
    }

    fn has(&self, v: Var) -> bool {
        self.vars.contains(&v)
    }

    /// Brings `entering` into the basis; returns the variable that leaves.
    fn pivot(&mut self, entering: Var) -> Result<Var> {
        let col = self.vars.iter().position(|&v| v == entering).expect("variable of this tableau");
        let rhs = self.vars.len();
        let mut best: Option<(usize, T)> = None;
        let mut tied = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            if row[col] <= T::zero() {
                continue;
            }
            let ratio = row[rhs].clone() / row[col].clone();
            match &best {
                Some((_, b)) if ratio > *b => {}
                Some((_, b)) if ratio == *b => tied.push(r),
                _ => {
                    best = Some((r, ratio));
                    tied.clear();
                }
            }
        }
        let (p, _) = best.ok_or_else(|| Error::Degenerate(format!("unbounded ray entering {entering:?}")))?;
        if !tied.is_empty() {
            let names: Vec<String> = std::iter::once(p).chain(tied).map(|r| format!("{:?}", self.basis[r])).collect();
            return Err(Error::Degenerate(format!("ratio test tie between {}", names.join(", "))));
        }
        let piv = self.rows[p][col].clone();
        for v in self.rows[p].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        let pivot_row = self.rows[p].clone();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == p || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
        Ok(std::mem::replace(&mut self.basis[p], entering))
    }

    fn value(&self, v: Var) -> T {
        let rhs = self.vars.len();
        self.basis
            .iter()
            .position(|&b| b == v)
            .map_or_else(T::zero, |r| self.rows[r][rhs].clone())
    }
}

fn shift_positive<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let min = max_of(&m.as_slice().iter().map(|v| -v.clone()).collect::<Vec<_>>());
    let shift = min + T::one();
    m.map(|v| v.clone() + shift.clone())
}

/// One Nash equilibrium by complementary pivoting from the artificial
/// equilibrium, dropping `dropped_label` (1-based; rows are `1..=m`, columns
/// `m+1..=m+n`) first.
pub fn lemke_howson<T: Scalar>(game: &BimatrixGame<T>, dropped_label: usize) -> Result<Equilibrium<T>> {
    let (m, n) = (game.rows(), game.cols());
    if dropped_label == 0 || dropped_label > m + n {
        return Err(Error::Bounds(format!("label {dropped_label} outside 1..={}", m + n)));
    }
    let target = dropped_label - 1;
    // positive payoffs keep both best-response polytopes bounded
    let a = shift_positive(game.payoff_a());
    let bt = shift_positive(game.payoff_b()).transpose();
    let mut row_tab = Tableau::new(&a, Var::Y, Var::R);
    let mut col_tab = Tableau::new(&bt, Var::X, Var::S);

    let mut entering = if target < m { Var::X(target) } else { Var::Y(target - m) };
    let limit = 10_000;
    for _ in 0..limit {
        let leaving = if col_tab.has(entering) { col_tab.pivot(entering)? } else { row_tab.pivot(entering)? };
        let label = leaving.label(m);
        if label == target {
            let x: Vec<T> = (0..m).map(|i| col_tab.value(Var::X(i))).collect();
            let y: Vec<T> = (0..n).map(|j| row_tab.value(Var::Y(j))).collect();
            let sx = crate::scalar::sum(&x);
            let sy = crate::scalar::sum(&y);
            let x: Vec<T> = x.into_iter().map(|v| v / sx.clone()).collect();
            let y: Vec<T> = y.into_iter().map(|v| v / sy.clone()).collect();
            let p = MixedProfile::from_parts_unchecked(x.clone(), y.clone());
            let (p1, p2) = crate::bimatrix::expected_payoffs(game, &p)?;
            return Ok(Equilibrium::new(x, y, p1, p2));
        }
        // the variable with the same label in the other tableau enters next
        entering = match leaving {
            Var::X(_) | Var::S(_) => {
                if label < m { Var::R(label) } else { Var::Y(label - m) }
            }
            Var::Y(_) | Var::R(_) => {
                if label < m { Var::X(label) } else { Var::S(label - m) }
            }
        };
    }
    Err(Error::Degenerate(format!("no termination after {limit} pivots")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Law {
    /// at least one equilibrium exists
    Existence,
    /// nondegenerate games have an odd number of equilibria
    Oddness,
    /// at most `2^n - 1` equilibria in an `n x n` game, proven for `n <= 3`
    QuintShubikBound,
    /// at most `(count + 1) / 2` of the equilibria are pure
    PureStrategyBound,
    /// at most 15 equilibria in a 4x4 game
    McLennanParkBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LawStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawCheck {
    pub law: Law,
    pub status: LawStatus,
    pub detail: String,
}

impl LawCheck {
    pub fn passed(&self) -> bool {
        self.status != LawStatus::Fail
    }
}

/// Checks the equilibrium-count laws for an `n x n` game from raw counts.
pub fn check_counts(count: usize, pure_count: usize, n: usize, degenerate: bool) -> Vec<LawCheck> {
    let mut out = Vec::new();
    let mut push = |law, ok: bool, detail: String| {
        let status = if degenerate {
            LawStatus::NotApplicable
        } else if ok {
            LawStatus::Pass
        } else {
            LawStatus::Fail
        };
        out.push(LawCheck { law, status, detail });
    };
    push(Law::Existence, count >= 1, format!("count = {count}"));
    push(Law::Oddness, count % 2 == 1, format!("count = {count}"));
    if (1..=3).contains(&n) {
        let bound = (1usize << n) - 1;
        push(Law::QuintShubikBound, count <= bound, format!("count = {count}, bound = {bound}"));
    }
    push(
        Law::PureStrategyBound,
        2 * pure_count <= count + 1,
        format!("pure = {pure_count}, bound = {}", count.div_ceil(2)),
    );
    if n == 4 {
        push(Law::McLennanParkBound, count <= 15, format!("count = {count}, bound = 15"));
    }
    out
}

pub fn verify_counting_laws<T: Scalar>(report: &EnumerationReport<T>, n: usize) -> Vec<LawCheck> {
    check_counts(report.count(), report.pure_count(), n, report.degenerate)
}

/// Integer payoffs drawn uniformly from `lo..=hi`.
pub fn random_integer_game<R: Rng>(rows: usize, cols: usize, lo: i64, hi: i64, rng: &mut R) -> BimatrixGame<BigRational> {
    let mut draw = || {
        let data = (0..rows * cols).map(|_| BigRational::from_integer(rng.gen_range(lo..=hi).into())).collect();
        Matrix::from_row_major(rows, cols, data).expect("shape")
    };
    let a = draw();
    let b = draw();
    BimatrixGame::new(a, b).expect("valid shape")
}

/// Resamples [`random_integer_game`] until the draw is nondegenerate.
pub fn random_nondegenerate_game<R: Rng>(rows: usize, cols: usize, lo: i64, hi: i64, rng: &mut R) -> BimatrixGame<BigRational> {
    loop {
        let g = random_integer_game(rows, cols, lo, hi, rng);
        if is_nondegenerate(&g) {
            return g;
        }
    }
}

#[derive(Serialize)]
struct EquilibriumJson {
    x: Vec<String>,
    y: Vec<String>,
    payoffs: Vec<String>,
}

#[derive(Serialize)]
struct ReportJson {
    count: usize,
    pure_count: usize,
    degenerate: bool,
    equilibria: Vec<EquilibriumJson>,
}

/// `{"count", "pure_count", "degenerate", "equilibria": [{"x", "y", "payoffs"}]}`
/// with every rational written as `p/q`.
pub fn report_to_json(report: &EnumerationReport<BigRational>) -> serde_json::Value {
    let strs = |v: &[BigRational]| v.iter().map(rational_to_string).collect::<Vec<_>>();
    let json = ReportJson {
        count: report.count(),
        pure_count: report.pure_count(),
        degenerate: report.degenerate,
        equilibria: report
            .equilibria
            .iter()
            .map(|e| EquilibriumJson {
                x: strs(&e.x),
                y: strs(&e.y),
                payoffs: strs(&[e.payoff_1.clone(), e.payoff_2.clone()]),
            })
            .collect(),
    };
    serde_json::to_value(json).expect("plain data serializes")
}
