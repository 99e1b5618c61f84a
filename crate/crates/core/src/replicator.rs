//! Coupled replicator learning dynamics for two independently adapting
//! players:
//!
//! ```text
//! dx_i/dt = x_i [ (A y)_i - xᵀ A y ]
//! dy_j/dt = y_j [ (xᵀ B)_j - xᵀ B y ]
//! ```
//!
//! `B` is stored player-indexed (see [`crate::bimatrix`]), so the column
//! player's payoff vector against `x` is `xᵀ B`.
//!
//! Integration runs either directly on the simplices or in log-ratio
//! coordinates, where for a player with `m` strategies
//! `u_k = ln(x_{m-k} / x_1)`, `k = 1..m-1` (for three strategies:
//! `u = (ln x3/x1, ln x2/x1)`). In these coordinates the zero-sum 3x3 flow is
//! `(u', v') = J ∇H` with the Hamiltonian
//! `H = -(u1 + u2 + v1 + v2)/3 + ln(1 + e^u1 + e^u2) + ln(1 + e^v1 + e^v2)`.

use crate::bimatrix::{is_zero_sum, BimatrixGame, MixedProfile, RpsParams};
use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeSystem, Tolerances};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coords {
    Simplex,
    #[default]
    LogRatio,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig<T> {
    pub step_initial: T,
    pub tol_rel: T,
    pub tol_abs: T,
    pub t_end: T,
    pub record_every: T,
    pub coords: Coords,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            step_initial: T::lit(0.01),
            tol_rel: T::lit(1e-10),
            tol_abs: T::lit(1e-12),
            t_end: T::lit(1000.0),
            record_every: T::lit(0.1),
            coords: Coords::LogRatio,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step_initial", self.step_initial),
            ("tol_rel", self.tol_rel),
            ("tol_abs", self.tol_abs),
            ("t_end", self.t_end),
            ("record_every", self.record_every),
        ];
        for (name, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::Bounds(format!("{name} must be positive and finite")));
            }
        }
        if self.record_every > self.t_end {
            return Err(Error::Bounds("record_every exceeds t_end".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearningState<T> {
    pub t: T,
    pub profile: MixedProfile<T>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub samples: Vec<LearningState<T>>,
    pub game: BimatrixGame<T>,
    /// Tie payoffs when the game is a generalized rock-paper-scissors game.
    pub game_params: Option<RpsParams<T>>,
    /// `H` at every sample; present for interior 3x3 runs.
    pub hamiltonian_series: Option<Vec<T>>,
}

impl<T: Real> Trajectory<T> {
    /// `max |H(t) - H(0)|` over the run.
    pub fn hamiltonian_drift(&self) -> Option<T> {
        let h = self.hamiltonian_series.as_ref()?;
        let h0 = *h.first()?;
        Some(h.iter().fold(T::zero(), |acc, v| acc.max((*v - h0).abs())))
    }

    /// Trajectory built from given samples, e.g. for analysis of recorded data.
    pub fn from_samples(game: BimatrixGame<T>, samples: Vec<LearningState<T>>) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::Domain("sample times must increase strictly".into()));
        }
        Ok(Self { samples, game, game_params: None, hamiltonian_series: None })
    }
}

/// Right-hand side of the replicator equations at `profile`.
pub fn vector_field<T: Real>(game: &BimatrixGame<T>, profile: &MixedProfile<T>) -> Result<(Vec<T>, Vec<T>)> {
    let (x, y) = (profile.x(), profile.y());
    if x.len() != game.rows() || y.len() != game.cols() {
        return Err(Error::Dimension(format!("profile {}x{} vs game {}x{}", x.len(), y.len(), game.rows(), game.cols())));
    }
    Ok(raw_field(game, x, y))
}

fn raw_field<T: Real>(game: &BimatrixGame<T>, x: &[T], y: &[T]) -> (Vec<T>, Vec<T>) {
    let ay = game.row_payoffs(y);
    let xb = game.col_payoffs(x);
    let mean1 = x.iter().zip(&ay).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
    let mean2 = y.iter().zip(&xb).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
    let dx = x.iter().zip(&ay).map(|(xi, p)| *xi * (*p - mean1)).collect();
    let dy = y.iter().zip(&xb).map(|(yi, p)| *yi * (*p - mean2)).collect();
    (dx, dy)
}

/// Strategy index paired with log-ratio coordinate `k` of a player with
/// `len` strategies; index 0 is the reference strategy.
pub fn chart_index(len: usize, k: usize) -> usize {
    len - 1 - k
}

/// Log-ratio coordinates of an interior mixture.
pub fn to_log_ratio<T: Real>(x: &[T]) -> Result<Vec<T>> {
    if x.iter().any(|c| !(*c > T::zero())) {
        return Err(Error::Domain("log-ratio coordinates need a strictly interior mixture".into()));
    }
    let l0 = x[0].ln();
    Ok((0..x.len() - 1).map(|k| x[chart_index(x.len(), k)].ln() - l0).collect())
}

/// Inverse of [`to_log_ratio`], evaluated with a max-shift for stability.
pub fn from_log_ratio<T: Real>(u: &[T]) -> Vec<T> {
    let len = u.len() + 1;
    let mut w = vec![T::zero(); len];
    for (k, uk) in u.iter().enumerate() {
        w[chart_index(len, k)] = *uk;
    }
    let top = w.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
    let e: Vec<T> = w.iter().map(|wi| (*wi - top).exp()).collect();
    let total = e.iter().fold(T::zero(), |a, b| a + *b);
    e.into_iter().map(|v| v / total).collect()
}

fn log1p_sum_exp<T: Real>(u: &[T]) -> T {
    let top = u.iter().fold(T::zero(), |a, b| a.max(*b));
    let s = u.iter().fold((-top).exp(), |acc, v| acc + (*v - top).exp());
    top + s.ln()
}

/// Flow of the replicator equations in log-ratio coordinates; the state is
/// `(u_1..u_{m-1}, v_1..v_{n-1})`.
pub struct LogRatioFlow<'a, T> {
    pub game: &'a BimatrixGame<T>,
}

impl<T: Real> LogRatioFlow<'_, T> {
    pub fn dim(&self) -> usize {
        self.game.rows() + self.game.cols() - 2
    }

    pub fn split<'s>(&self, s: &'s [T]) -> (&'s [T], &'s [T]) {
        s.split_at(self.game.rows() - 1)
    }

    pub fn to_profile(&self, s: &[T]) -> MixedProfile<T> {
        let (u, v) = self.split(s);
        MixedProfile::from_parts_unchecked(from_log_ratio(u), from_log_ratio(v))
    }

    pub fn to_state(&self, p: &MixedProfile<T>) -> Result<Vec<T>> {
        let mut s = to_log_ratio(p.x())?;
        s.extend(to_log_ratio(p.y())?);
        Ok(s)
    }

    /// Jacobian of the log-ratio flow, row-major `dim x dim`.
    pub fn jacobian(&self, s: &[T]) -> Vec<T> {
        let (m, n) = (self.game.rows(), self.game.cols());
        let d = self.dim();
        let p = self.to_profile(s);
        let (x, y) = (p.x(), p.y());
        let (a, b) = (self.game.payoff_a(), self.game.payoff_b());
        let mut jac = vec![T::zero(); d * d];
        // u' depends only on y: d/dv_l of (A y)_{σk} - (A y)_0
        for k in 0..m - 1 {
            let row = chart_index(m, k);
            let diff: Vec<T> = (0..n).map(|j| a[(row, j)] - a[(0, j)]).collect();
            let mean = diff.iter().zip(y).fold(T::zero(), |acc, (d, yj)| acc + *d * *yj);
            for l in 0..n - 1 {
                let col = chart_index(n, l);
                jac[k * d + (m - 1) + l] = y[col] * (diff[col] - mean);
            }
        }
        for k in 0..n - 1 {
            let col = chart_index(n, k);
            let diff: Vec<T> = (0..m).map(|i| b[(i, col)] - b[(i, 0)]).collect();
            let mean = diff.iter().zip(x).fold(T::zero(), |acc, (d, xi)| acc + *d * *xi);
            for l in 0..m - 1 {
                let row = chart_index(m, l);
                jac[(m - 1 + k) * d + l] = x[row] * (diff[row] - mean);
            }
        }
        jac
    }
}

impl<T: Real> OdeSystem<T> for LogRatioFlow<'_, T> {
    fn dim(&self) -> usize {
        LogRatioFlow::dim(self)
    }

    fn rhs(&self, _t: T, s: &[T], ds: &mut [T]) {
        let (m, n) = (self.game.rows(), self.game.cols());
        let (u, v) = self.split(s);
        let x = from_log_ratio(u);
        let y = from_log_ratio(v);
        let ay = self.game.row_payoffs(&y);
        let xb = self.game.col_payoffs(&x);
        for k in 0..m - 1 {
            ds[k] = ay[chart_index(m, k)] - ay[0];
        }
        for k in 0..n - 1 {
            ds[m - 1 + k] = xb[chart_index(n, k)] - xb[0];
        }
    }
}

struct SimplexFlow<'a, T> {
    game: &'a BimatrixGame<T>,
}

impl<T: Real> OdeSystem<T> for SimplexFlow<'_, T> {
    fn dim(&self) -> usize {
        self.game.rows() + self.game.cols()
    }

    fn rhs(&self, _t: T, s: &[T], ds: &mut [T]) {
        let (x, y) = s.split_at(self.game.rows());
        let (dx, dy) = raw_field(self.game, x, y);
        ds[..dx.len()].copy_from_slice(&dx);
        ds[dx.len()..].copy_from_slice(&dy);
    }
}

/// Floor applied to simplex-mode components after each recorded sample.
pub const SIMPLEX_FLOOR: f64 = 1e-300;

/// Smallest start component accepted by [`integrate`].
pub const INTERIOR_MIN: f64 = 1e-12;

fn renormalize<T: Real>(v: &mut [T]) {
    let floor = T::lit(SIMPLEX_FLOOR);
    for c in v.iter_mut() {
        *c = c.max(floor);
    }
    let s = v.iter().fold(T::zero(), |a, b| a + *b);
    for c in v.iter_mut() {
        *c = *c / s;
    }
}

/// Recognizes the generalized rock-paper-scissors structure of a 3x3 game.
pub fn rps_params_of<T: Real>(game: &BimatrixGame<T>) -> Option<RpsParams<T>> {
    if game.rows() != 3 || game.cols() != 3 {
        return None;
    }
    let ex = game.payoff_a()[(0, 0)];
    let ey = game.payoff_b()[(0, 0)];
    let p = RpsParams::new(ex, ey).ok()?;
    let rebuilt = crate::bimatrix::build_generalized_rps(&p).ok()?;
    (rebuilt == *game).then_some(p)
}

/// Integrates the learning dynamics from `start`, recording a sample every
/// `record_every` time units (and at `t_end`).
pub fn integrate<T: Real>(game: &BimatrixGame<T>, start: &MixedProfile<T>, config: &IntegratorConfig<T>) -> Result<Trajectory<T>> {
    config.validate()?;
    if start.x().len() != game.rows() || start.y().len() != game.cols() {
        return Err(Error::Dimension("start profile does not match the game".into()));
    }
    if start.min_component() < T::lit(INTERIOR_MIN) {
        return Err(Error::Domain("start must be strictly interior".into()));
    }
    let tol = Tolerances { rel: config.tol_rel, abs: config.tol_abs };
    let times = record_times(config.t_end, config.record_every);
    let three = game.rows() == 3 && game.cols() == 3;
    let mut samples = Vec::with_capacity(times.len());
    let mut hs = Vec::with_capacity(times.len());

    match config.coords {
        Coords::LogRatio => {
            let flow = LogRatioFlow { game };
            let s0 = flow.to_state(start)?;
            let mut ig = Dopri5::new(T::zero(), s0, config.step_initial, tol);
            for &t in &times {
                ig.advance_to(&flow, t)?;
                let s = ig.y();
                if three {
                    let (u, v) = flow.split(s);
                    hs.push(hamiltonian_log(u, v));
                }
                samples.push(LearningState { t, profile: flow.to_profile(s) });
            }
        }
        Coords::Simplex => {
            let flow = SimplexFlow { game };
            let mut s0 = start.x().to_vec();
            s0.extend_from_slice(start.y());
            let mut ig = Dopri5::new(T::zero(), s0, config.step_initial, tol);
            for &t in &times {
                ig.advance_to(&flow, t)?;
                let mut s = ig.y().to_vec();
                let (x, y) = s.split_at_mut(game.rows());
                renormalize(x);
                renormalize(y);
                let profile = MixedProfile::from_parts_unchecked(x.to_vec(), y.to_vec());
                if three {
                    hs.push(hamiltonian(&profile).unwrap_or(T::nan()));
                }
                ig.set_state(s);
                samples.push(LearningState { t, profile });
            }
        }
    }

    let hamiltonian_series = (three && hs.iter().all(|h| h.is_finite())).then_some(hs);
    Ok(Trajectory { samples, game: game.clone(), game_params: rps_params_of(game), hamiltonian_series })
}

fn record_times<T: Real>(t_end: T, every: T) -> Vec<T> {
    let mut out = vec![T::zero()];
    let mut k = 1usize;
    loop {
        let t = every * T::from_usize(k).unwrap();
        // avoid a sliver interval just before t_end
        if t >= t_end - every * T::lit(1e-9) {
            out.push(t_end);
            return out;
        }
        out.push(t);
        k += 1;
    }
}

/// `H` from log-ratio coordinates of a 3x3 game.
pub fn hamiltonian_log<T: Real>(u: &[T], v: &[T]) -> T {
    let third = T::one() / T::lit(3.0);
    let lin = u.iter().chain(v).fold(T::zero(), |a, b| a + *b);
    -third * lin + log1p_sum_exp(u) + log1p_sum_exp(v)
}

/// The conserved quantity of the zero-sum 3x3 dynamics.
pub fn hamiltonian<T: Real>(profile: &MixedProfile<T>) -> Result<T> {
    if profile.x().len() != 3 || profile.y().len() != 3 {
        return Err(Error::Dimension("the Hamiltonian is defined for 3x3 games".into()));
    }
    let u = to_log_ratio(profile.x())?;
    let v = to_log_ratio(profile.y())?;
    Ok(hamiltonian_log(&u, &v))
}

/// `∇H` with respect to `(u1, u2, v1, v2)`.
pub fn hamiltonian_gradient<T: Real>(u: &[T], v: &[T]) -> [T; 4] {
    let third = T::one() / T::lit(3.0);
    let x = from_log_ratio(u);
    let y = from_log_ratio(v);
    [
        x[chart_index(3, 0)] - third,
        x[chart_index(3, 1)] - third,
        y[chart_index(3, 0)] - third,
        y[chart_index(3, 1)] - third,
    ]
}

/// Antisymmetric 4x4 matrix with `(u', v') = J ∇H` for the zero-sum game
/// with `eps = eps_x = -eps_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoissonStructure<T> {
    pub j: [[T; 4]; 4],
}

impl<T: Real> PoissonStructure<T> {
    pub fn apply(&self, grad: &[T; 4]) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for (o, row) in out.iter_mut().zip(&self.j) {
            *o = row.iter().zip(grad).fold(T::zero(), |a, (p, q)| a + *p * *q);
        }
        out
    }

    pub fn antisymmetry_residual(&self) -> T {
        let mut r = T::zero();
        for i in 0..4 {
            for k in 0..4 {
                r = r.max((self.j[i][k] + self.j[k][i]).abs());
            }
        }
        r
    }
}

pub fn poisson_structure<T: Real>(eps: T) -> Result<PoissonStructure<T>> {
    if !(eps.abs() <= T::one()) {
        return Err(Error::Bounds(format!("eps = {eps} outside [-1, 1]")));
    }
    let (z, two, three) = (T::zero(), T::lit(2.0), T::lit(3.0));
    Ok(PoissonStructure {
        j: [
            [z, z, two * eps, three + eps],
            [z, z, -three + eps, two * eps],
            [-two * eps, three - eps, z, z],
            [-three - eps, -two * eps, z, z],
        ],
    })
}

/// Fraction of `t_end` discarded before averaging.
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.1;

/// Minimum number of samples left after the transient.
pub const MIN_AVERAGE_SAMPLES: usize = 100;

/// Time-weighted mean payoffs after discarding the first 10% of the run.
pub fn time_average_payoff<T: Real>(traj: &Trajectory<T>, game: &BimatrixGame<T>) -> Result<(T, T)> {
    let t_last = traj.samples.last().map_or(T::zero(), |s| s.t);
    time_average_payoff_after(traj, game, t_last * T::lit(DEFAULT_TRANSIENT_FRACTION))
}

/// Trapezoidal time average of the expected payoffs over samples with `t >= discard_until`.
pub fn time_average_payoff_after<T: Real>(traj: &Trajectory<T>, game: &BimatrixGame<T>, discard_until: T) -> Result<(T, T)> {
    let kept: Vec<&LearningState<T>> = traj.samples.iter().filter(|s| s.t >= discard_until).collect();
    if kept.len() == 1 && traj.samples.len() == 1 {
        return crate::bimatrix::expected_payoffs(game, &kept[0].profile);
    }
    if kept.len() < MIN_AVERAGE_SAMPLES {
        return Err(Error::TooFewSamples(format!("{} samples after the transient, need {MIN_AVERAGE_SAMPLES}", kept.len())));
    }
    let pay: Vec<(T, T)> = kept
        .iter()
        .map(|s| crate::bimatrix::expected_payoffs(game, &s.profile))
        .collect::<Result<_>>()?;
    let (mut a1, mut a2, mut span) = (T::zero(), T::zero(), T::zero());
    let half = T::lit(0.5);
    for w in 0..kept.len() - 1 {
        let dt = kept[w + 1].t - kept[w].t;
        a1 = a1 + half * dt * (pay[w].0 + pay[w + 1].0);
        a2 = a2 + half * dt * (pay[w].1 + pay[w + 1].1);
        span = span + dt;
    }
    Ok((a1 / span, a2 / span))
}

/// Whether a game satisfies the zero-sum condition to rounding accuracy.
pub fn conserves_hamiltonian<T: Real>(game: &BimatrixGame<T>) -> bool {
    game.rows() == 3 && game.cols() == 3 && is_zero_sum(game, &T::lit(1e-12))
}
