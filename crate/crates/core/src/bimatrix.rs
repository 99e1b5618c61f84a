//! Two-player games in strategic form.
//!
//! Both payoff matrices are stored *player-indexed*: entry `(i, j)` of
//! `payoff_b` is the column player's payoff when the row player uses `i` and
//! the column player uses `j`. Under this convention the zero-sum condition
//! `A_ij = -B_ji` of the usual "B acts on x" notation becomes plain entrywise
//! negation, `payoff_b = -payoff_a`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{rational_from_f64, Scalar, MAX_DENOMINATOR};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct BimatrixGame<T> {
    payoff_a: Matrix<T>,
    payoff_b: Matrix<T>,
}

impl<T: Scalar> BimatrixGame<T> {
    pub fn new(payoff_a: Matrix<T>, payoff_b: Matrix<T>) -> Result<Self> {
        if payoff_a.rows() != payoff_b.rows() || payoff_a.cols() != payoff_b.cols() {
            return Err(Error::Dimension(format!(
                "payoff_a is {}x{}, payoff_b is {}x{}",
                payoff_a.rows(),
                payoff_a.cols(),
                payoff_b.rows(),
                payoff_b.cols()
            )));
        }
        if payoff_a.rows() == 0 || payoff_a.cols() == 0 {
            return Err(Error::Bounds("a game needs at least one strategy per player".into()));
        }
        let finite = |m: &Matrix<T>| m.as_slice().iter().all(|v| v.to_f64_lossy().is_finite());
        if !finite(&payoff_a) || !finite(&payoff_b) {
            return Err(Error::Bounds("payoffs must be finite".into()));
        }
        Ok(Self { payoff_a, payoff_b })
    }

    pub fn from_rows(a: Vec<Vec<T>>, b: Vec<Vec<T>>) -> Result<Self> {
        let a = Matrix::from_rows(a).ok_or_else(|| Error::Dimension("ragged rows in payoff_a".into()))?;
        let b = Matrix::from_rows(b).ok_or_else(|| Error::Dimension("ragged rows in payoff_b".into()))?;
        Self::new(a, b)
    }

    pub fn rows(&self) -> usize {
        self.payoff_a.rows()
    }

    pub fn cols(&self) -> usize {
        self.payoff_a.cols()
    }

    pub fn payoff_a(&self) -> &Matrix<T> {
        &self.payoff_a
    }

    pub fn payoff_b(&self) -> &Matrix<T> {
        &self.payoff_b
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> BimatrixGame<U> {
        BimatrixGame { payoff_a: self.payoff_a.map(&f), payoff_b: self.payoff_b.map(&f) }
    }

    /// Same game with the row player's strategies reordered; row `k` of the
    /// result is row `perm[k]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self { payoff_a: self.payoff_a.permute_rows(perm), payoff_b: self.payoff_b.permute_rows(perm) }
    }

    /// Player 1's payoff against each of player 2's strategies mixed by `y`: `A y`.
    pub fn row_payoffs(&self, y: &[T]) -> Vec<T> {
        self.payoff_a.mul_vec(y)
    }

    /// Player 2's payoff for each of its strategies against `x`: `xᵀ B`.
    pub fn col_payoffs(&self, x: &[T]) -> Vec<T> {
        self.payoff_b.vec_mul(x)
    }

    fn check_profile(&self, profile: &MixedProfile<T>) -> Result<()> {
        if profile.x.len() != self.rows() || profile.y.len() != self.cols() {
            return Err(Error::Dimension(format!(
                "profile is {}x{}, game is {}x{}",
                profile.x.len(),
                profile.y.len(),
                self.rows(),
                self.cols()
            )));
        }
        Ok(())
    }
}

impl BimatrixGame<f64> {
    /// Exact rational copy; fails if an entry is not `p/q` with `q <= 10^6`.
    pub fn to_rational(&self) -> Result<BimatrixGame<BigRational>> {
        let conv = |m: &Matrix<f64>| -> Result<Matrix<BigRational>> {
            let data = m
                .as_slice()
                .iter()
                .map(|&v| {
                    rational_from_f64(v, MAX_DENOMINATOR)
                        .ok_or_else(|| Error::Parse(format!("{v} is not a ratio with denominator <= 10^6")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Matrix::from_row_major(m.rows(), m.cols(), data).expect("same shape"))
        };
        BimatrixGame::new(conv(&self.payoff_a)?, conv(&self.payoff_b)?)
    }
}

/// Tie payoffs of the generalized rock-paper-scissors game, each in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpsParams<T> {
    pub eps_x: T,
    pub eps_y: T,
}

impl<T: Scalar> RpsParams<T> {
    pub fn new(eps_x: T, eps_y: T) -> Result<Self> {
        let one = T::one();
        for (name, e) in [("eps_x", &eps_x), ("eps_y", &eps_y)] {
            if !(*e >= -one.clone() && *e <= one) {
                return Err(Error::Bounds(format!("{name} = {e} outside [-1, 1]")));
            }
        }
        Ok(Self { eps_x, eps_y })
    }

    pub fn zero_sum(eps: T) -> Result<Self> {
        Self::new(eps.clone(), T::zero() - eps)
    }

    pub fn is_zero_sum(&self) -> bool {
        (self.eps_x.clone() + self.eps_y.clone()).is_zero()
    }
}

/// Cyclic 3x3 payoff table with `tie` on the diagonal; rows/cols are rock,
/// paper, scissors and `+1` means the row move beats the column move.
fn rps_table<T: Scalar>(tie: &T) -> Vec<Vec<T>> {
    let one = T::one();
    let win = one.clone();
    let lose = -one;
    vec![
        vec![tie.clone(), lose.clone(), win.clone()],
        vec![win.clone(), tie.clone(), lose.clone()],
        vec![lose, win, tie.clone()],
    ]
}

/// Generalized rock-paper-scissors with tie payoffs `eps_x` (player 1) and
/// `eps_y` (player 2).
pub fn build_generalized_rps<T: Scalar>(params: &RpsParams<T>) -> Result<BimatrixGame<T>> {
    let params = RpsParams::new(params.eps_x.clone(), params.eps_y.clone())?;
    let a = Matrix::from_rows(rps_table(&params.eps_x)).expect("3x3");
    // the column player's own table is indexed (own move, opponent move);
    // store its transpose so entry (i, j) is keyed by (row move, col move)
    let b = Matrix::from_rows(rps_table(&params.eps_y)).expect("3x3").transpose();
    BimatrixGame::new(a, b)
}

/// Both players receive the `n x n` identity matrix.
pub fn identity_coordination_game<T: Scalar>(n: usize) -> Result<BimatrixGame<T>> {
    if n == 0 {
        return Err(Error::Bounds("identity game needs n >= 1".into()));
    }
    BimatrixGame::new(Matrix::identity(n), Matrix::identity(n))
}

/// A point of the product of two probability simplices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedProfile<T> {
    x: Vec<T>,
    y: Vec<T>,
}

/// Components below `-NEGATIVE_SLACK` are rejected rather than clipped.
pub const NEGATIVE_SLACK: f64 = 1e-12;

impl<T: Scalar> MixedProfile<T> {
    /// Validates and normalizes both mixtures onto their simplices.
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        Ok(Self { x: normalize(x, "x")?, y: normalize(y, "y")? })
    }

    pub fn uniform(m: usize, n: usize) -> Self {
        let u = |k: usize| vec![T::one() / T::from_usize(k).unwrap(); k];
        Self { x: u(m), y: u(n) }
    }

    /// Pure profile: row `i` against column `j`.
    pub fn pure(m: usize, n: usize, i: usize, j: usize) -> Result<Self> {
        if i >= m || j >= n {
            return Err(Error::Bounds(format!("pure strategy ({i}, {j}) outside {m}x{n}")));
        }
        let e = |k: usize, at: usize| (0..k).map(|l| if l == at { T::one() } else { T::zero() }).collect();
        Ok(Self { x: e(m, i), y: e(n, j) })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub(crate) fn from_parts_unchecked(x: Vec<T>, y: Vec<T>) -> Self {
        Self { x, y }
    }

    /// Smallest component across both mixtures.
    pub fn min_component(&self) -> T {
        self.x
            .iter()
            .chain(&self.y)
            .cloned()
            .fold(None, |acc: Option<T>, v| match acc {
                Some(a) if a <= v => Some(a),
                _ => Some(v),
            })
            .expect("non-empty")
    }
}

fn normalize<T: Scalar>(v: Vec<T>, name: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Err(Error::Bounds(format!("{name} is empty")));
    }
    let slack = T::from_f64(NEGATIVE_SLACK).unwrap_or_else(T::zero);
    let mut total = T::zero();
    for c in &v {
        if !c.to_f64_lossy().is_finite() {
            return Err(Error::Bounds(format!("{name} has a non-finite component")));
        }
        if *c < -slack.clone() {
            return Err(Error::Bounds(format!("{name} has negative component {c}")));
        }
        total = total + c.clone();
    }
    if total <= T::zero() {
        return Err(Error::Bounds(format!("{name} has no mass")));
    }
    Ok(v.into_iter()
        .map(|c| if c < T::zero() { T::zero() } else { c / total.clone() })
        .collect())
}

/// `(xᵀ A y, xᵀ B y)`
pub fn expected_payoffs<T: Scalar>(game: &BimatrixGame<T>, profile: &MixedProfile<T>) -> Result<(T, T)> {
    game.check_profile(profile)?;
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + p.clone() * q.clone());
    let p1 = dot(&profile.x, &game.row_payoffs(&profile.y));
    let p2 = dot(&game.col_payoffs(&profile.x), &profile.y);
    Ok((p1, p2))
}

/// True iff no pure deviation gains either player more than `tol`.
pub fn is_nash<T: Scalar>(game: &BimatrixGame<T>, profile: &MixedProfile<T>, tol: &T) -> Result<bool> {
    if *tol < T::zero() {
        return Err(Error::Bounds("tolerance must be non-negative".into()));
    }
    let (p1, p2) = expected_payoffs(game, profile)?;
    let best = |v: Vec<T>| v.into_iter().fold(None, |acc: Option<T>, c| match acc {
        Some(a) if a >= c => Some(a),
        _ => Some(c),
    });
    let best1 = best(game.row_payoffs(&profile.y)).expect("non-empty");
    let best2 = best(game.col_payoffs(&profile.x)).expect("non-empty");
    Ok(best1 - p1 <= *tol && best2 - p2 <= *tol)
}

/// True iff `payoff_b = -payoff_a` entrywise within `tol`.
pub fn is_zero_sum<T: Scalar>(game: &BimatrixGame<T>, tol: &T) -> bool {
    game.payoff_a
        .as_slice()
        .iter()
        .zip(game.payoff_b.as_slice())
        .all(|(a, b)| (a.clone() + b.clone()).abs() <= *tol)
}

/// Wire format for games: row-major flat arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameJson {
    pub rows: usize,
    pub cols: usize,
    #[serde(deserialize_with = "flat_or_nested")]
    pub payoff_a: Vec<f64>,
    #[serde(deserialize_with = "flat_or_nested")]
    pub payoff_b: Vec<f64>,
}

fn flat_or_nested<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        Flat(Vec<f64>),
        Nested(Vec<Vec<f64>>),
    }
    Ok(match Either::deserialize(d)? {
        Either::Flat(v) => v,
        Either::Nested(v) => v.into_iter().flatten().collect(),
    })
}

impl From<&BimatrixGame<f64>> for GameJson {
    fn from(g: &BimatrixGame<f64>) -> Self {
        Self {
            rows: g.rows(),
            cols: g.cols(),
            payoff_a: g.payoff_a.as_slice().to_vec(),
            payoff_b: g.payoff_b.as_slice().to_vec(),
        }
    }
}

impl TryFrom<GameJson> for BimatrixGame<f64> {
    type Error = Error;

    fn try_from(j: GameJson) -> Result<Self> {
        let shape = |v: Vec<f64>, name: &str| {
            Matrix::from_row_major(j.rows, j.cols, v).ok_or_else(|| {
                Error::Dimension(format!("{name} does not have {}x{} entries", j.rows, j.cols))
            })
        };
        BimatrixGame::new(shape(j.payoff_a.clone(), "payoff_a")?, shape(j.payoff_b.clone(), "payoff_b")?)
    }
}

pub fn game_to_json(game: &BimatrixGame<f64>) -> String {
    serde_json::to_string_pretty(&GameJson::from(game)).expect("plain data serializes")
}

pub fn game_from_json(s: &str) -> Result<BimatrixGame<f64>> {
    let j: GameJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    j.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rps(ex: f64, ey: f64) -> BimatrixGame<f64> {
        build_generalized_rps(&RpsParams::new(ex, ey).unwrap()).unwrap()
    }

    #[test]
    fn rock_row_of_standard_rps() {
        let g = rps(0.0, 0.0);
        assert_eq!(g.payoff_a().row(0), &[0.0, -1.0, 1.0]);
    }

    #[test]
    fn first_column_reads_rock_paper_scissors() {
        // opponent plays rock: rock ties, paper wins, scissors loses
        let g = rps(0.4, 0.0);
        let col: Vec<f64> = (0..3).map(|i| g.payoff_a()[(i, 0)]).collect();
        assert_eq!(col, vec![0.4, 1.0, -1.0]);
        // column player's view is the same table from its own side
        let g = rps(0.0, 0.7);
        let own: Vec<f64> = (0..3).map(|j| g.payoff_b()[(0, j)]).collect();
        assert_eq!(own, vec![0.7, 1.0, -1.0]);
    }

    #[test]
    fn tie_payoffs_on_diagonal_and_zero_sum() {
        let g = rps(0.5, -0.5);
        assert_eq!((0..3).map(|i| g.payoff_a()[(i, i)]).collect::<Vec<_>>(), vec![0.5; 3]);
        assert!(is_zero_sum(&g, &0.0));
        assert!(is_zero_sum(&rps(0.3, -0.3), &1e-15));
        assert!(!is_zero_sum(&rps(0.3, 0.3), &1e-9));
        assert!(!is_zero_sum(&identity_coordination_game::<f64>(2).unwrap(), &1e-9));
    }

    #[test]
    fn out_of_bounds_ties_rejected() {
        assert!(matches!(RpsParams::new(1.2, 0.0), Err(Error::Bounds(_))));
        assert!(matches!(RpsParams::new(0.0, -1.0001), Err(Error::Bounds(_))));
        assert!(RpsParams::new(-1.0, 1.0).is_ok());
        assert!(RpsParams::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn identity_games() {
        let g = identity_coordination_game::<f64>(2).unwrap();
        assert_eq!(g.payoff_a().as_slice(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(g.payoff_a(), g.payoff_b());
        let g = identity_coordination_game::<f64>(1).unwrap();
        assert_eq!(g.payoff_a().as_slice(), &[1.0]);
        assert!(matches!(identity_coordination_game::<f64>(0), Err(Error::Bounds(_))));
    }

    #[test]
    fn payoffs_of_simple_profiles() {
        let g = rps(0.0, 0.0);
        let u = MixedProfile::uniform(3, 3);
        let (p1, p2) = expected_payoffs(&g, &u).unwrap();
        assert!(p1.abs() < 1e-15 && p2.abs() < 1e-15);

        // rock against scissors
        let p = MixedProfile::pure(3, 3, 0, 2).unwrap();
        assert_eq!(expected_payoffs(&g, &p).unwrap(), (1.0, -1.0));

        let eps = 0.37;
        let g = rps(eps, 0.1);
        let (p1, _) = expected_payoffs(&g, &u).unwrap();
        let direct: f64 = g.payoff_a().as_slice().iter().sum::<f64>() / 9.0;
        assert!((p1 - direct).abs() < 1e-15);
        assert!((p1 - eps / 3.0).abs() < 1e-15);
    }

    #[test]
    fn nash_checks() {
        let g = rps(0.3, -0.8);
        assert!(is_nash(&g, &MixedProfile::uniform(3, 3), &1e-9).unwrap());
        let g = rps(0.0, 0.0);
        assert!(!is_nash(&g, &MixedProfile::pure(3, 3, 0, 0).unwrap(), &1e-9).unwrap());
        let id = identity_coordination_game::<f64>(2).unwrap();
        assert!(is_nash(&id, &MixedProfile::pure(2, 2, 0, 0).unwrap(), &1e-9).unwrap());
        assert!(!is_nash(&id, &MixedProfile::pure(2, 2, 0, 1).unwrap(), &1e-9).unwrap());
        assert!(matches!(is_nash(&id, &MixedProfile::uniform(3, 2), &0.0), Err(Error::Dimension(_))));
        assert!(matches!(is_nash(&id, &MixedProfile::uniform(2, 2), &-1.0), Err(Error::Bounds(_))));
    }

    #[test]
    fn identity_pure_profiles_by_brute_force() {
        // every pure deviation enumerated by hand: only diagonal cells are stable
        let id = identity_coordination_game::<f64>(2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let p = MixedProfile::pure(2, 2, i, j).unwrap();
                let stable = (0..2).all(|k| id.payoff_a()[(k, j)] <= id.payoff_a()[(i, j)])
                    && (0..2).all(|k| id.payoff_b()[(i, k)] <= id.payoff_b()[(i, j)]);
                assert_eq!(is_nash(&id, &p, &0.0).unwrap(), stable);
            }
        }
    }

    #[test]
    fn profile_validation() {
        let p = MixedProfile::new(vec![2.0, 2.0], vec![1.0, 0.0, 3.0]).unwrap();
        assert_eq!(p.x(), &[0.5, 0.5]);
        assert_eq!(p.y(), &[0.25, 0.0, 0.75]);
        assert!(MixedProfile::new(vec![1.0, -1e-9], vec![1.0]).is_err());
        let p = MixedProfile::new(vec![1.0, -1e-13], vec![1.0]).unwrap();
        assert_eq!(p.x()[1], 0.0);
        assert!(MixedProfile::<f64>::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(MixedProfile::<f64>::new(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn json_round_trip_and_nested_input() {
        let g = rps(0.25, -0.5);
        let back = game_from_json(&game_to_json(&g)).unwrap();
        assert_eq!(back, g);
        let nested = r#"{"rows":2,"cols":2,"payoff_a":[[1,0],[0,1]],"payoff_b":[[1,0],[0,1]]}"#;
        assert_eq!(game_from_json(nested).unwrap(), identity_coordination_game(2).unwrap());
        let bad = r#"{"rows":2,"cols":2,"payoff_a":[1,0,0],"payoff_b":[1,0,0,1]}"#;
        assert!(matches!(game_from_json(bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn rational_conversion() {
        let g = rps(0.3, -0.3).to_rational().unwrap();
        assert_eq!(crate::scalar::rational_to_string(&g.payoff_a()[(0, 0)]), "3/10");
        let bad = BimatrixGame::from_rows(vec![vec![std::f64::consts::E]], vec![vec![0.0]]).unwrap();
        assert!(bad.to_rational().is_err());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn rps(ex: f64, ey: f64) -> BimatrixGame<f64> {
        build_generalized_rps(&RpsParams::new(ex, ey).unwrap()).unwrap()
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|c| c / s).collect()
        })
    }

    proptest! {
        #[test]
        fn rows_and_columns_are_permutations(ex in -1.0f64..=1.0, ey in -1.0f64..=1.0) {
            let g = rps(ex, ey);
            let mut want = vec![ex, -1.0, 1.0];
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for k in 0..3 {
                let mut row = g.payoff_a().row(k).to_vec();
                row.sort_by(|a, b| a.partial_cmp(b).unwrap());
                prop_assert_eq!(&row, &want);
                let mut col: Vec<f64> = (0..3).map(|i| g.payoff_a()[(i, k)]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                prop_assert_eq!(&col, &want);
            }
        }

        #[test]
        fn uniform_is_always_nash(ex in -1.0f64..=1.0, ey in -1.0f64..=1.0) {
            prop_assert!(is_nash(&rps(ex, ey), &MixedProfile::uniform(3, 3), &1e-9).unwrap());
        }

        #[test]
        fn opposite_ties_are_zero_sum(e in -1.0f64..=1.0) {
            prop_assert!(is_zero_sum(&rps(e, -e), &0.0));
        }

        #[test]
        fn payoffs_are_bilinear(
            ex in -1.0f64..=1.0, ey in -1.0f64..=1.0,
            x1 in simplex(3), x2 in simplex(3), y in simplex(3), w in 0.0f64..=1.0,
        ) {
            let g = rps(ex, ey);
            let mix: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| w * a + (1.0 - w) * b).collect();
            let pay = |x: &Vec<f64>| expected_payoffs(&g, &MixedProfile::new(x.clone(), y.clone()).unwrap()).unwrap();
            let (a1, b1) = pay(&x1);
            let (a2, b2) = pay(&x2);
            let (am, bm) = pay(&mix);
            prop_assert!((am - (w * a1 + (1.0 - w) * a2)).abs() < 1e-12);
            prop_assert!((bm - (w * b1 + (1.0 - w) * b2)).abs() < 1e-12);
        }
    }
}
