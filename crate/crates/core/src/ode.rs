//! Adaptive Dormand-Prince 5(4) integrator.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Autonomous or time-dependent first-order system `y' = f(t, y)`.
pub trait OdeSystem<T> {
    fn dim(&self) -> usize;
    fn rhs(&self, t: T, y: &[T], dy: &mut [T]);
}

#[derive(Clone, Debug)]
pub struct Tolerances<T> {
    pub rel: T,
    pub abs: T,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus the embedded fourth-order ones
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator state: current time, solution and the step size to try next.
#[derive(Clone, Debug)]
pub struct Dopri5<T> {
    t: T,
    y: Vec<T>,
    h: T,
    tol: Tolerances<T>,
    /// derivative at `(t, y)` (first-same-as-last)
    f0: Option<Vec<T>>,
    k: [Vec<T>; 7],
    tmp: Vec<T>,
    ynew: Vec<T>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl<T: Real> Dopri5<T> {
    pub fn new(t0: T, y0: Vec<T>, h_initial: T, tol: Tolerances<T>) -> Self {
        let n = y0.len();
        let z = || vec![T::zero(); n];
        Self {
            t: t0,
            y: y0,
            h: h_initial,
            tol,
            f0: None,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            ynew: z(),
            accepted_steps: 0,
            rejected_steps: 0,
        }
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// Replaces the state (e.g. after re-orthonormalizing tangent vectors).
    pub fn set_state(&mut self, y: Vec<T>) {
        self.y = y;
        self.f0 = None;
    }

    fn stage(&mut self, sys: &impl OdeSystem<T>, h: T, coeffs: &[(usize, f64)], c: f64, out: usize) {
        for i in 0..self.y.len() {
            let mut acc = T::zero();
            for &(j, a) in coeffs {
                acc = acc + T::lit(a) * self.k[j][i];
            }
            self.tmp[i] = self.y[i] + h * acc;
        }
        let (t, tmp) = (self.t + T::lit(c) * h, std::mem::take(&mut self.tmp));
        sys.rhs(t, &tmp, &mut self.k[out]);
        self.tmp = tmp;
    }

    /// One trial step of size `h`; returns the scaled error norm and leaves
    /// the candidate solution in `ynew` and its derivative in `k[6]`.
    fn trial(&mut self, sys: &impl OdeSystem<T>, h: T) -> T {
        if self.f0.is_none() {
            let mut f = vec![T::zero(); self.y.len()];
            sys.rhs(self.t, &self.y, &mut f);
            self.f0 = Some(f);
        }
        self.k[0].clone_from(self.f0.as_ref().unwrap());
        self.stage(sys, h, &[(0, A21)], C2, 1);
        self.stage(sys, h, &[(0, A31), (1, A32)], C3, 2);
        self.stage(sys, h, &[(0, A41), (1, A42), (2, A43)], C4, 3);
        self.stage(sys, h, &[(0, A51), (1, A52), (2, A53), (3, A54)], C5, 4);
        self.stage(sys, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 1.0, 5);
        for i in 0..self.y.len() {
            let k = &self.k;
            self.ynew[i] = self.y[i]
                + h * (T::lit(B1) * k[0][i] + T::lit(B3) * k[2][i] + T::lit(B4) * k[3][i] + T::lit(B5) * k[4][i] + T::lit(B6) * k[5][i]);
        }
        let mut f7 = std::mem::take(&mut self.k[6]);
        sys.rhs(self.t + h, &self.ynew, &mut f7);
        self.k[6] = f7;

        let mut err = T::zero();
        let n = self.y.len();
        for i in 0..n {
            let k = &self.k;
            let e = h * (T::lit(E1) * k[0][i] + T::lit(E3) * k[2][i] + T::lit(E4) * k[3][i] + T::lit(E5) * k[4][i] + T::lit(E6) * k[5][i] + T::lit(E7) * k[6][i]);
            let scale = self.tol.abs + self.tol.rel * self.y[i].abs().max(self.ynew[i].abs());
            let r = e / scale;
            err = err + r * r;
        }
        let err = (err / T::from_usize(n.max(1)).unwrap()).sqrt();
        if err.is_finite() {
            err
        } else {
            T::infinity()
        }
    }

    /// Advances exactly to `t_target`.
    pub fn advance_to(&mut self, sys: &impl OdeSystem<T>, t_target: T) -> Result<()> {
        let safety = T::lit(0.9);
        let min_scale = T::lit(0.2);
        let max_scale = T::lit(10.0);
        let tiny = T::lit(1e-14);
        while self.t < t_target {
            let remaining = t_target - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h <= tiny * self.t.abs().max(T::one()) && !last {
                return Err(Error::Stiffness { t: self.t.to_f64_lossy(), last_state: self.y.iter().map(|v| v.to_f64_lossy()).collect() });
            }
            let err = self.trial(sys, h);
            let factor = if err == T::zero() {
                max_scale
            } else {
                (safety * err.powf(T::lit(-0.2))).max(min_scale).min(max_scale)
            };
            if err <= T::one() {
                self.t = if last { t_target } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                self.f0 = Some(self.k[6].clone());
                self.accepted_steps += 1;
                // a clipped final step says nothing about the natural step size
                if !last || factor < T::one() {
                    self.h = h * factor;
                }
            } else {
                self.rejected_steps += 1;
                self.h = h * factor.min(T::one());
                if !self.h.is_finite() || self.h <= tiny * self.t.abs().max(T::one()) {
                    return Err(Error::Stiffness { t: self.t.to_f64_lossy(), last_state: self.y.iter().map(|v| v.to_f64_lossy()).collect() });
                }
            }
        }
        Ok(())
    }
}
