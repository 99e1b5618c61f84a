//! Chaos diagnostics for replicator trajectories: Lyapunov spectra by
//! tangent-space QR, Poincaré sections on `x2 - x1 + y2 - y1 = 0`, and
//! residence times near the pure strategies.

use crate::bimatrix::{build_generalized_rps, BimatrixGame, MixedProfile, RpsParams};
use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeSystem, Tolerances};
use crate::replicator::{LogRatioFlow, Trajectory};
use crate::scalar::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Log-ratio magnitude beyond which a run counts as having left the interior
/// (a strategy weight below `e^-700`).
pub const ESCAPE_LOG_RATIO: f64 = 700.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LyapunovConfig<T> {
    pub t_total: T,
    pub qr_interval: T,
    /// Time integrated before stretch factors are accumulated.
    pub transient: T,
    pub tol_rel: T,
    pub tol_abs: T,
}

impl<T: Real> Default for LyapunovConfig<T> {
    fn default() -> Self {
        Self {
            t_total: T::lit(5000.0),
            qr_interval: T::lit(1.0),
            transient: T::lit(500.0),
            tol_rel: T::lit(1e-10),
            tol_abs: T::lit(1e-12),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovResult<T> {
    /// Descending.
    pub exponents: Vec<T>,
    /// `(t, running estimates)` after every re-orthonormalization past the transient.
    pub convergence_series: Vec<(T, Vec<T>)>,
    pub qr_interval: T,
    pub t_total: T,
    /// The run left the interior before `t_total`; estimates cover the part before.
    pub escaped: bool,
}

impl<T: Real> LyapunovResult<T> {
    pub fn largest(&self) -> T {
        self.exponents[0]
    }

    /// `max_i |λ_i + λ_{D+1-i}|`
    pub fn pair_residual(&self) -> T {
        let d = self.exponents.len();
        (0..d / 2).fold(T::zero(), |acc, i| acc.max((self.exponents[i] + self.exponents[d - 1 - i]).abs()))
    }

    pub fn sum(&self) -> T {
        self.exponents.iter().fold(T::zero(), |a, b| a + *b)
    }
}

/// Base flow plus a `d x d` tangent frame stored column after column.
struct TangentFlow<'a, T> {
    flow: LogRatioFlow<'a, T>,
}

impl<T: Real> OdeSystem<T> for TangentFlow<'_, T> {
    fn dim(&self) -> usize {
        let d = self.flow.dim();
        d + d * d
    }

    fn rhs(&self, t: T, s: &[T], ds: &mut [T]) {
        let d = self.flow.dim();
        let (base, frame) = s.split_at(d);
        self.flow.rhs(t, base, &mut ds[..d]);
        let jac = self.flow.jacobian(base);
        for c in 0..d {
            let col = &frame[c * d..(c + 1) * d];
            for r in 0..d {
                let row = &jac[r * d..(r + 1) * d];
                ds[d + c * d + r] = row.iter().zip(col).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
            }
        }
    }
}

/// Modified Gram-Schmidt on the columns of `frame`; returns `ln |r_ii|`.
fn orthonormalize<T: Real>(frame: &mut [T], d: usize) -> Vec<T> {
    let mut logs = Vec::with_capacity(d);
    for c in 0..d {
        for p in 0..c {
            let dot = (0..d).fold(T::zero(), |acc, r| acc + frame[p * d + r] * frame[c * d + r]);
            for r in 0..d {
                frame[c * d + r] = frame[c * d + r] - dot * frame[p * d + r];
            }
        }
        let norm = (0..d).fold(T::zero(), |acc, r| acc + frame[c * d + r] * frame[c * d + r]).sqrt();
        for r in 0..d {
            frame[c * d + r] = frame[c * d + r] / norm;
        }
        logs.push(norm.ln());
    }
    logs
}

/// Lyapunov spectrum with default transient and tolerances.
pub fn lyapunov_spectrum<T: Real>(game: &BimatrixGame<T>, start: &MixedProfile<T>, t_total: T, qr_interval: T) -> Result<LyapunovResult<T>> {
    let cfg = LyapunovConfig { t_total, qr_interval, transient: t_total * T::lit(0.1), ..Default::default() };
    lyapunov_spectrum_with(game, start, &cfg)
}

/// Evolves an orthonormal frame under the linearized log-ratio flow,
/// re-orthonormalizing every `qr_interval` and averaging the log stretch
/// factors after the transient.
pub fn lyapunov_spectrum_with<T: Real>(game: &BimatrixGame<T>, start: &MixedProfile<T>, cfg: &LyapunovConfig<T>) -> Result<LyapunovResult<T>> {
    if !(cfg.qr_interval > T::zero()) || !(cfg.t_total > cfg.transient) || cfg.transient < T::zero() {
        return Err(Error::Bounds("need qr_interval > 0 and t_total > transient >= 0".into()));
    }
    if start.min_component() <= T::zero() {
        return Err(Error::Domain("Lyapunov spectra need an interior start".into()));
    }
    let flow = LogRatioFlow { game };
    let d = flow.dim();
    let mut s0 = flow.to_state(start)?;
    for c in 0..d {
        s0.extend((0..d).map(|r| if r == c { T::one() } else { T::zero() }));
    }
    let sys = TangentFlow { flow: LogRatioFlow { game } };
    let mut ig = Dopri5::new(T::zero(), s0, cfg.qr_interval * T::lit(0.01), Tolerances { rel: cfg.tol_rel, abs: cfg.tol_abs });

    let mut sums = vec![T::zero(); d];
    let mut series = Vec::new();
    let mut escaped = false;
    let mut k = 1usize;
    let escape = T::lit(ESCAPE_LOG_RATIO);
    loop {
        let t = (cfg.qr_interval * T::from_usize(k).unwrap()).min(cfg.t_total);
        if let Err(e) = ig.advance_to(&sys, t) {
            match e {
                Error::Stiffness { .. } => {
                    escaped = true;
                    break;
                }
                other => return Err(other),
            }
        }
        let mut state = ig.y().to_vec();
        if state[..d].iter().any(|v| !v.is_finite() || v.abs() > escape) {
            escaped = true;
            break;
        }
        let logs = orthonormalize(&mut state[d..], d);
        ig.set_state(state);
        if t > cfg.transient {
            for (s, l) in sums.iter_mut().zip(&logs) {
                *s = *s + *l;
            }
            let elapsed = t - cfg.transient;
            series.push((t, sums.iter().map(|s| *s / elapsed).collect::<Vec<T>>()));
        }
        if t >= cfg.t_total {
            break;
        }
        k += 1;
    }

    let mut exponents = series.last().map(|(_, v)| v.clone()).unwrap_or_else(|| vec![T::zero(); d]);
    exponents.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(LyapunovResult { exponents, convergence_series: series, qr_interval: cfg.qr_interval, t_total: cfg.t_total, escaped })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Regular,
    Chaotic,
    Escaped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification<T> {
    pub regime: Regime,
    pub largest_exponent: T,
}

/// Chaotic iff the largest exponent exceeds `tol`; requires the estimate of
/// the largest exponent to vary by less than `tol / 2` over the last 10% of
/// its convergence series.
pub fn classify_regime<T: Real>(result: &LyapunovResult<T>, tol: T) -> Result<Classification<T>> {
    let largest_exponent = result.largest();
    if result.escaped {
        return Ok(Classification { regime: Regime::Escaped, largest_exponent });
    }
    let n = result.convergence_series.len();
    if n == 0 {
        return Err(Error::Inconclusive("empty convergence series".into()));
    }
    let tail = &result.convergence_series[n - (n / 10).max(1)..];
    let top = |v: &Vec<T>| v.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
    let (lo, hi) = tail.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), (_, v)| (lo.min(top(v)), hi.max(top(v))));
    if hi - lo >= tol * T::lit(0.5) {
        return Err(Error::Inconclusive(format!("largest exponent still moving by {} over the last 10%", hi - lo)));
    }
    let regime = if largest_exponent > tol { Regime::Chaotic } else { Regime::Regular };
    Ok(Classification { regime, largest_exponent })
}

/// Zero-sum (`eps_y = -eps_x`) or symmetric-tie (`eps_y = eps_x`) sweeps.
pub fn lyapunov_sweep<T: Real>(eps_values: &[T], zero_sum: bool, start: &MixedProfile<T>, cfg: &LyapunovConfig<T>) -> Result<Vec<(T, LyapunovResult<T>)>> {
    eps_values
        .par_iter()
        .map(|&e| {
            let params = if zero_sum { RpsParams::zero_sum(e)? } else { RpsParams::new(e, e)? };
            let game = build_generalized_rps(&params)?;
            Ok((e, lyapunov_spectrum_with(&game, start, cfg)?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectionPoint<T> {
    pub t: T,
    /// `(x1, x2, y1, y2)`; `x3` and `y3` follow from normalization.
    pub coords: [T; 4],
    /// `+1` when `x2 - x1 + y2 - y1` increases through zero.
    pub crossing_direction: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoincareSection<T> {
    pub points: Vec<SectionPoint<T>>,
    /// The trajectory lies on the hyperplane throughout (e.g. the uniform
    /// fixed point), so crossings are not defined.
    pub degenerate: bool,
}

/// Required accuracy of refined crossing points.
pub const SECTION_TOL: f64 = 1e-8;

pub fn section_value<T: Real>(p: &MixedProfile<T>) -> T {
    let (x, y) = (p.x(), p.y());
    x[1] - x[0] + y[1] - y[0]
}

/// Crossings of `x2 - x1 + y2 - y1 = 0`, each refined by bisection on the
/// integration time from the sample preceding it.
pub fn poincare_section<T: Real>(traj: &Trajectory<T>) -> Result<PoincareSection<T>> {
    let game = &traj.game;
    if game.rows() != 3 || game.cols() != 3 {
        return Err(Error::Dimension("sections are defined for 3x3 games".into()));
    }
    if traj.samples.len() < 2 {
        return Err(Error::TooFewSamples("a section needs at least two samples".into()));
    }
    let values: Vec<T> = traj.samples.iter().map(|s| section_value(&s.profile)).collect();
    let flat = T::lit(1e-12);
    if values.iter().all(|v| v.abs() <= flat) {
        return Ok(PoincareSection { points: Vec::new(), degenerate: true });
    }
    let tol = T::lit(SECTION_TOL);
    let flow = LogRatioFlow { game };
    let mut points = Vec::new();
    for w in 0..traj.samples.len() - 1 {
        let (va, vb) = (values[w], values[w + 1]);
        let crosses = (va < T::zero() && vb >= T::zero()) || (va > T::zero() && vb <= T::zero());
        if !crosses {
            continue;
        }
        let (sa, sb) = (&traj.samples[w], &traj.samples[w + 1]);
        let direction: i8 = if vb > va { 1 } else { -1 };
        let (p, offset) = if vb.abs() < tol {
            (sb.profile.clone(), sb.t - sa.t)
        } else {
            refine_crossing(&flow, &sa.profile, va, sb.t - sa.t, tol)?
        };
        let t = sa.t + offset;
        points.push(SectionPoint { t, coords: [p.x()[0], p.x()[1], p.y()[0], p.y()[1]], crossing_direction: direction });
    }
    Ok(PoincareSection { points, degenerate: false })
}

fn refine_crossing<T: Real>(flow: &LogRatioFlow<'_, T>, from: &MixedProfile<T>, v_from: T, span: T, tol: T) -> Result<(MixedProfile<T>, T)> {
    let s0 = flow.to_state(from)?;
    let eval = |tau: T| -> Result<MixedProfile<T>> {
        let mut ig = Dopri5::new(T::zero(), s0.clone(), tau * T::lit(0.1), Tolerances { rel: T::lit(1e-12), abs: T::lit(1e-14) });
        ig.advance_to(flow, tau)?;
        Ok(flow.to_profile(ig.y()))
    };
    let (mut lo, mut hi) = (T::zero(), span);
    let sign_from = v_from > T::zero();
    let mut best = eval(hi)?;
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        let p = eval(mid)?;
        let v = section_value(&p);
        if v.abs() < tol {
            return Ok((p, mid));
        }
        if (v > T::zero()) == sign_from {
            lo = mid;
        } else {
            hi = mid;
            best = p;
        }
        if hi - lo <= T::epsilon() * span {
            break;
        }
    }
    let v = section_value(&best);
    if v.abs() < tol {
        Ok((best, hi))
    } else {
        Err(Error::Domain(format!("crossing refinement stalled at |s| = {v}")))
    }
}

/// Number of cells of a `grid x grid` partition of `[0,1]^2` hit by the
/// `(x1, y1)` projections of the points; `direction` filters by crossing sign.
pub fn section_occupancy<T: Real>(points: &[SectionPoint<T>], grid: usize, direction: Option<i8>) -> usize {
    let mut hit = vec![false; grid * grid];
    let g = T::from_usize(grid).unwrap();
    for p in points.iter().filter(|p| direction.is_none_or(|d| d == p.crossing_direction)) {
        let cell = |v: T| (v * g).floor().to_usize().unwrap_or(0).min(grid - 1);
        hit[cell(p.coords[0]) * grid + cell(p.coords[2])] = true;
    }
    hit.iter().filter(|h| **h).count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Episode<T> {
    /// Index of the dominant pure strategy of player 1.
    pub corner: usize,
    pub entry_t: T,
    pub duration: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidenceReport<T> {
    pub episodes: Vec<Episode<T>>,
    pub threshold: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

/// Ordinary least squares of `ys` against `xs`.
pub fn linear_fit<T: Real>(xs: &[T], ys: &[T]) -> Option<LinearFit<T>> {
    let n = T::from_usize(xs.len())?;
    if xs.len() < 3 {
        return None;
    }
    let mx = xs.iter().fold(T::zero(), |a, b| a + *b) / n;
    let my = ys.iter().fold(T::zero(), |a, b| a + *b) / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (x, y) in xs.iter().zip(ys) {
        sxx = sxx + (*x - mx) * (*x - mx);
        sxy = sxy + (*x - mx) * (*y - my);
        syy = syy + (*y - my) * (*y - my);
    }
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == T::zero() { T::one() } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

impl<T: Real> ResidenceReport<T> {
    /// Sequence of visited corners.
    pub fn corner_order(&self) -> Vec<usize> {
        self.episodes.iter().map(|e| e.corner).collect()
    }

    pub fn total_time(&self) -> T {
        self.episodes.iter().fold(T::zero(), |a, e| a + e.duration)
    }

    /// Linear fit of episode duration against episode index, optionally
    /// dropping the first `skip` episodes.
    pub fn duration_trend(&self, skip: usize) -> Option<LinearFit<T>> {
        let eps = self.episodes.get(skip..)?;
        let xs: Vec<T> = (0..eps.len()).map(|i| T::from_usize(i).unwrap()).collect();
        let ys: Vec<T> = eps.iter().map(|e| e.duration).collect();
        linear_fit(&xs, &ys)
    }
}

/// Episodes during which some `x_i` exceeds `threshold`; entry and exit
/// times are linearly interpolated between samples.
pub fn residence_times<T: Real>(traj: &Trajectory<T>, threshold: T) -> Result<ResidenceReport<T>> {
    if !(threshold > T::lit(0.5) && threshold < T::one()) {
        return Err(Error::Bounds(format!("threshold {threshold} outside (0.5, 1)")));
    }
    let dominant = |p: &MixedProfile<T>| p.x().iter().position(|v| *v > threshold);
    let cross = |t0: T, v0: T, t1: T, v1: T| {
        if v1 == v0 {
            t1
        } else {
            t0 + (t1 - t0) * (threshold - v0) / (v1 - v0)
        }
    };
    let mut episodes = Vec::new();
    let mut open: Option<(usize, T)> = None;
    for (w, s) in traj.samples.iter().enumerate() {
        let now = dominant(&s.profile);
        match (open, now) {
            (None, Some(c)) => {
                let entry = if w == 0 {
                    s.t
                } else {
                    let prev = &traj.samples[w - 1];
                    cross(prev.t, prev.profile.x()[c], s.t, s.profile.x()[c])
                };
                open = Some((c, entry));
            }
            (Some((c, entry)), now) if now != Some(c) => {
                let prev = &traj.samples[w - 1];
                let exit = cross(prev.t, prev.profile.x()[c], s.t, s.profile.x()[c]);
                episodes.push(Episode { corner: c, entry_t: entry, duration: exit - entry });
                open = now.map(|n| {
                    let e = cross(prev.t, prev.profile.x()[n], s.t, s.profile.x()[n]);
                    (n, e)
                });
            }
            _ => {}
        }
    }
    if let (Some((c, entry)), Some(last)) = (open, traj.samples.last()) {
        episodes.push(Episode { corner: c, entry_t: entry, duration: last.t - entry });
    }
    Ok(ResidenceReport { episodes, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicator::{integrate, IntegratorConfig, LearningState};

    fn result(series: Vec<(f64, Vec<f64>)>) -> LyapunovResult<f64> {
        let exponents = series.last().unwrap().1.clone();
        LyapunovResult { exponents, convergence_series: series, qr_interval: 1.0, t_total: 100.0, escaped: false }
    }

    #[test]
    fn classification_thresholds() {
        let flat = |l: f64| result((0..100).map(|k| (k as f64, vec![l, -l])).collect());
        assert_eq!(classify_regime(&flat(0.002), 0.01).unwrap().regime, Regime::Regular);
        assert_eq!(classify_regime(&flat(0.05), 0.01).unwrap().regime, Regime::Chaotic);
        let drifting = result((0..100).map(|k| (k as f64, vec![k as f64 * 0.01])).collect());
        assert!(matches!(classify_regime(&drifting, 0.01), Err(Error::Inconclusive(_))));
        let mut esc = flat(0.0);
        esc.escaped = true;
        assert_eq!(classify_regime(&esc, 0.01).unwrap().regime, Regime::Escaped);
    }

    #[test]
    fn gram_schmidt_logs() {
        let mut frame = vec![2.0, 0.0, 1.0, 3.0];
        let logs = orthonormalize(&mut frame, 2);
        assert!((logs[0] - 2f64.ln()).abs() < 1e-15);
        assert!((logs[1] - 3f64.ln()).abs() < 1e-15);
        assert!((frame[0] * frame[2] + frame[1] * frame[3]).abs() < 1e-15);
    }

    #[test]
    fn fit_of_exact_line() {
        let xs = [0.0f64, 1.0, 2.0, 3.0];
        let fit = linear_fit(&xs, &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&xs[..2], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn uniform_start_gives_degenerate_section() {
        let game = build_generalized_rps(&RpsParams::zero_sum(0.3).unwrap()).unwrap();
        let cfg = IntegratorConfig { t_end: 5.0, ..Default::default() };
        let traj = integrate(&game, &MixedProfile::uniform(3, 3), &cfg).unwrap();
        let s = poincare_section(&traj).unwrap();
        assert!(s.degenerate && s.points.is_empty());
    }

    #[test]
    fn section_points_lie_on_hyperplane() {
        let game = build_generalized_rps(&RpsParams::zero_sum(0.25).unwrap()).unwrap();
        let start = MixedProfile::new(vec![0.5, 0.01, 0.49], vec![0.5, 0.25, 0.25]).unwrap();
        let traj = integrate(&game, &start, &IntegratorConfig { t_end: 200.0, ..Default::default() }).unwrap();
        let s = poincare_section(&traj).unwrap();
        assert!(s.points.len() > 10);
        for p in &s.points {
            let [x1, x2, y1, y2]: [f64; 4] = p.coords;
            assert!((x2 - x1 + y2 - y1).abs() < SECTION_TOL);
            assert!(x1 > 0.0 && x2 > 0.0 && x1 + x2 < 1.0 && y1 > 0.0 && y2 > 0.0 && y1 + y2 < 1.0);
        }
        assert!(s.points.windows(2).all(|w| w[0].t < w[1].t));
    }

    #[test]
    fn pinned_trajectory_is_one_episode() {
        let game = build_generalized_rps(&RpsParams::new(0.0, 0.0).unwrap()).unwrap();
        let p = MixedProfile::new(vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]).unwrap();
        let samples = (0..11).map(|k| LearningState { t: k as f64, profile: p.clone() }).collect();
        let traj = Trajectory::from_samples(game, samples).unwrap();
        let r = residence_times(&traj, 0.9).unwrap();
        assert_eq!(r.episodes, vec![Episode { corner: 1, entry_t: 0.0, duration: 10.0 }]);
        assert!(residence_times(&traj, 0.5).is_err());
    }

    #[test]
    fn episode_boundaries_are_interpolated() {
        let game = build_generalized_rps(&RpsParams::new(0.0, 0.0).unwrap()).unwrap();
        let xs = [0.5, 0.8, 1.0, 0.8, 0.5, 0.0];
        let samples = xs
            .iter()
            .enumerate()
            .map(|(k, &a)| LearningState { t: k as f64, profile: MixedProfile::new(vec![a, 1.0 - a, 0.0], vec![1.0, 0.0, 0.0]).unwrap() })
            .collect();
        let traj = Trajectory::from_samples(game, samples).unwrap();
        let r = residence_times(&traj, 0.9).unwrap();
        // x1 crosses 0.9 at t = 1.5 and 2.5; x2 rises past 0.9 between t = 4 and 5
        assert_eq!(r.corner_order(), vec![0, 1]);
        assert!((r.episodes[0].entry_t - 1.5).abs() < 1e-12 && (r.episodes[0].duration - 1.0).abs() < 1e-12);
        assert!((r.episodes[1].entry_t - 4.8).abs() < 1e-12);
    }
}
