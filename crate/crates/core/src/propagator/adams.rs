//! Variable-order, variable-step Adams predictor-corrector (PECE) for
//! non-stiff real systems `y' = f(t, y)`.
//!
//! Coefficients are recomputed every step by integrating Lagrange
//! polynomials over the actual (non-uniform) node history, so order and
//! step changes need no special restart. The accepted value is the
//! corrector one order above the estimate (local extrapolation); the
//! difference of successive corrector orders estimates the error used for
//! step and order selection.

use crate::bspline::gauss_legendre;
use std::collections::VecDeque;
use thiserror::Error;

pub const MAX_ORDER: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdamsError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {0} exhausted at t = {1}")]
    TooManySteps(usize, f64),
    #[error("invalid tolerances rtol = {rtol:e}, atol = {atol:e}")]
    InvalidTolerance { rtol: f64, atol: f64 },
}

/// Right-hand side `dy = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamsOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_order: usize,
    pub max_steps: usize,
    /// First trial step; `None` picks a small fraction of the span.
    pub initial_step: Option<f64>,
}

impl Default for AdamsOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_order: MAX_ORDER,
            max_steps: 50_000_000,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdamsStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    pub max_order_used: usize,
}

/// `∫₀¹ L_j(s) ds` for the Lagrange basis on `nodes`.
fn lagrange_weights(nodes: &[f64], gl: &(Vec<f64>, Vec<f64>), out: &mut Vec<f64>) {
    out.clear();
    for (j, &sj) in nodes.iter().enumerate() {
        let mut w = 0.0;
        for (&x, &gw) in gl.0.iter().zip(&gl.1) {
            let s = 0.5 * (x + 1.0);
            let mut l = 1.0;
            for (i, &si) in nodes.iter().enumerate() {
                if i != j {
                    l *= (s - si) / (sj - si);
                }
            }
            w += 0.5 * gw * l;
        }
        out.push(w);
    }
}

struct Weights {
    /// Predictor weights over `hist[0..q]`.
    ab: Vec<f64>,
    /// Corrector weights with `p` nodes: index 0 for the new point, then
    /// `hist[0..p-1]`.
    am: Vec<Vec<f64>>,
}

/// Adams-PECE integrator state; reusable for several integrations.
pub struct Adams {
    opts: AdamsOptions,
    gl: (Vec<f64>, Vec<f64>),
}

impl Adams {
    pub fn new(opts: AdamsOptions) -> Result<Self, AdamsError> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(opts.rtol) || !ok(opts.atol) {
            return Err(AdamsError::InvalidTolerance {
                rtol: opts.rtol,
                atol: opts.atol,
            });
        }
        // exact for the degree-13 Lagrange polynomials of the highest order
        Ok(Self {
            opts,
            gl: gauss_legendre(8),
        })
    }

    /// Integrate from `t0` to `t1` (either direction), overwriting `y`.
    /// `on_step(t, y)` runs after every accepted step and may abort.
    pub fn integrate<S: OdeSystem, E: From<AdamsError>>(
        &self,
        sys: &mut S,
        t0: f64,
        t1: f64,
        y: &mut [f64],
        mut on_step: impl FnMut(f64, &[f64]) -> Result<(), E>,
    ) -> Result<AdamsStats, E> {
        let n = sys.dim();
        assert_eq!(y.len(), n, "state length does not match system dimension");
        let mut stats = AdamsStats::default();
        if t1 == t0 {
            return Ok(stats);
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let max_order = self.opts.max_order.clamp(1, MAX_ORDER);

        let mut hist: VecDeque<(f64, Vec<f64>)> = VecDeque::with_capacity(max_order + 3);
        let mut f0 = vec![0.0; n];
        sys.rhs(t0, y, &mut f0);
        stats.rhs_evals += 1;
        hist.push_front((t0, f0));

        let mut t = t0;
        let mut h = self.opts.initial_step.map_or(1e-5 * span, f64::abs).min(span);
        let mut q = 1usize;
        let mut steps_at_order = 0usize;

        let mut yp = vec![0.0; n];
        let mut fp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut scale = vec![0.0; n];
        let mut spare: Option<Vec<f64>> = None;
        let mut wbuf = Vec::new();

        loop {
            if stats.accepted + stats.rejected >= self.opts.max_steps {
                return Err(AdamsError::TooManySteps(self.opts.max_steps, t).into());
            }
            let remaining = (t1 - t).abs();
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let hs = dir * h;
            let tn = hist[0].0;
            let tnew = if last { t1 } else { t + hs };
            if h <= 1e-13 * t.abs().max(span) {
                return Err(AdamsError::StepUnderflow { t, h }.into());
            }

            let avail = hist.len();
            let w = self.weights(&hist, tn, hs, q, avail, &mut wbuf);

            // predict
            yp.copy_from_slice(y);
            for (j, b) in w.ab.iter().enumerate() {
                axpy(hs * b, &hist[j].1, &mut yp);
            }
            sys.rhs(tnew, &yp, &mut fp);
            stats.rhs_evals += 1;

            // corrector of q + 1 nodes is accepted
            let acc = &w.am[q + 1];
            ynew.copy_from_slice(y);
            axpy(hs * acc[0], &fp, &mut ynew);
            for (j, g) in acc[1..].iter().enumerate() {
                axpy(hs * g, &hist[j].1, &mut ynew);
            }
            for i in 0..n {
                scale[i] = self.opts.atol + self.opts.rtol * y[i].abs().max(ynew[i].abs());
            }
            // error estimate for order p: |AM_{p+1} - AM_p|
            let est = |p: usize| -> Option<f64> {
                if p == 0 || p + 1 >= w.am.len() {
                    return None;
                }
                let hi = &w.am[p + 1];
                let lo = &w.am[p];
                let mut worst = 0.0f64;
                for i in 0..n {
                    let mut d = hs * (hi[0] - lo[0]) * fp[i];
                    for j in 0..p {
                        let lw = if j + 1 < lo.len() { lo[j + 1] } else { 0.0 };
                        d += hs * (hi[j + 1] - lw) * hist[j].1[i];
                    }
                    let r = d / scale[i];
                    worst = worst.max(r.abs());
                }
                let e = worst;
                Some(if e.is_finite() { e } else { f64::INFINITY })
            };
            let err = est(q).expect("current order always has an estimate");
            let ratio = |e: f64, p: usize| -> f64 {
                if e == 0.0 {
                    f64::INFINITY
                } else {
                    (1.0 / e).powf(1.0 / (p as f64 + 1.0))
                }
            };

            let err_lo = if q > 1 { est(q - 1) } else { None };
            let err_hi = if q < max_order && steps_at_order + 1 > q && hist.len() > q {
                est(q + 1)
            } else {
                None
            };

            if err <= 1.0 && ynew.iter().all(|v| v.is_finite()) {
                // evaluate at the accepted point and shift the history
                let mut fnew = spare.take().unwrap_or_else(|| vec![0.0; n]);
                sys.rhs(tnew, &ynew, &mut fnew);
                stats.rhs_evals += 1;
                y.copy_from_slice(&ynew);
                t = tnew;
                hist.push_front((t, fnew));
                if hist.len() > max_order + 2 {
                    spare = hist.pop_back().map(|(_, v)| v);
                }
                stats.accepted += 1;
                stats.max_order_used = stats.max_order_used.max(q + 1);
                steps_at_order += 1;
                on_step(t, y)?;
                if last {
                    return Ok(stats);
                }

                // choose the next order among q-1, q, q+1
                let mut best_q = q;
                let mut best = ratio(err, q);
                if let Some(e) = err_lo {
                    let r = ratio(e, q - 1);
                    if r >= best {
                        best = r;
                        best_q = q - 1;
                    }
                }
                if let Some(e) = err_hi {
                    let r = ratio(e, q + 1);
                    if r > 1.1 * best {
                        best = r;
                        best_q = q + 1;
                    }
                }
                if best_q != q {
                    q = best_q;
                    steps_at_order = 0;
                }
                h *= (0.9 * best).clamp(0.2, 2.0);
            } else {
                stats.rejected += 1;
                let mut r = ratio(err, q);
                if let Some(e) = err_lo {
                    let r1 = ratio(e, q - 1);
                    if r1 > r {
                        r = r1;
                        q -= 1;
                        steps_at_order = 0;
                    }
                }
                h *= (0.9 * r).clamp(0.2, 0.9);
            }
        }
    }

    /// Predictor weights for order `q` and corrector weights with
    /// `1..=min(q + 2, avail + 1)` nodes.
    fn weights(&self, hist: &VecDeque<(f64, Vec<f64>)>, tn: f64, hs: f64, q: usize, avail: usize, buf: &mut Vec<f64>) -> Weights {
        let s: Vec<f64> = hist.iter().map(|(ti, _)| (ti - tn) / hs).collect();
        lagrange_weights(&s[..q], &self.gl, buf);
        let ab = buf.clone();
        let top = (q + 2).min(avail + 1);
        let mut am = vec![Vec::new()];
        let mut nodes = vec![1.0];
        for p in 1..=top {
            if p > 1 {
                nodes.push(s[p - 2]);
            }
            lagrange_weights(&nodes, &self.gl, buf);
            am.push(buf.clone());
        }
        Weights { ab, am }
    }
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -y[0];
        }
    }

    /// Harmonic oscillator `y'' = -ω² y`.
    struct Oscillator(f64);
    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&mut self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -self.0 * self.0 * y[0];
        }
    }

    fn run<S: OdeSystem>(sys: &mut S, t0: f64, t1: f64, y: &mut [f64], rtol: f64) -> AdamsStats {
        let a = Adams::new(AdamsOptions {
            rtol,
            atol: rtol * 1e-3,
            ..Default::default()
        })
        .unwrap();
        a.integrate::<_, AdamsError>(sys, t0, t1, y, |_, _| Ok(())).unwrap()
    }

    #[test]
    fn lagrange_weights_reproduce_known_formulas() {
        let gl = gauss_legendre(8);
        let mut w = Vec::new();
        // trapezoid
        lagrange_weights(&[1.0, 0.0], &gl, &mut w);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
        // 2-step Adams-Bashforth
        lagrange_weights(&[0.0, -1.0], &gl, &mut w);
        assert!((w[0] - 1.5).abs() < 1e-14 && (w[1] + 0.5).abs() < 1e-14);
        // 3-node Adams-Moulton: 5/12, 8/12, -1/12
        lagrange_weights(&[1.0, 0.0, -1.0], &gl, &mut w);
        assert!((w[0] - 5.0 / 12.0).abs() < 1e-14);
        assert!((w[1] - 8.0 / 12.0).abs() < 1e-14);
        assert!((w[2] + 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_decay() {
        let mut y = [1.0];
        let stats = run(&mut Decay, 0.0, 5.0, &mut y, 1e-10);
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-9);
        assert!(stats.max_order_used > 4);
    }

    #[test]
    fn oscillator_many_periods_forward_and_back() {
        let w = 3.0;
        let mut y = [1.0, 0.0];
        let t1 = 40.0;
        let stats = run(&mut Oscillator(w), 0.0, t1, &mut y, 1e-10);
        assert!((y[0] - (w * t1).cos()).abs() < 1e-7, "{}", y[0]);
        assert!((y[1] + w * (w * t1).sin()).abs() < 3e-7);
        assert!(stats.accepted < 5000, "{stats:?}");
        run(&mut Oscillator(w), t1, 0.0, &mut y, 1e-10);
        assert!((y[0] - 1.0).abs() < 1e-6 && y[1].abs() < 3e-6);
    }

    #[test]
    fn tighter_tolerance_is_more_accurate() {
        let mut errs = Vec::new();
        for tol in [1e-6, 1e-8, 1e-10] {
            let mut y = [1.0, 0.0];
            run(&mut Oscillator(1.0), 0.0, 20.0, &mut y, tol);
            errs.push((y[0] - 20f64.cos()).abs());
        }
        assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    }

    #[test]
    fn deterministic() {
        let mut a = [1.0, 0.0];
        let mut b = [1.0, 0.0];
        let s1 = run(&mut Oscillator(2.0), 0.0, 10.0, &mut a, 1e-9);
        let s2 = run(&mut Oscillator(2.0), 0.0, 10.0, &mut b, 1e-9);
        assert_eq!(a, b);
        assert_eq!(s1, s2);
    }

    #[test]
    fn zero_span_is_a_no_op() {
        let mut y = [2.0];
        let s = run(&mut Decay, 1.0, 1.0, &mut y, 1e-8);
        assert_eq!(y[0], 2.0);
        assert_eq!(s.accepted, 0);
    }

    #[test]
    fn rejects_bad_tolerances() {
        assert!(Adams::new(AdamsOptions {
            rtol: 0.0,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn observer_can_abort() {
        #[derive(Debug, PartialEq)]
        enum Stop {
            Here(f64),
            Solver,
        }
        impl From<AdamsError> for Stop {
            fn from(_: AdamsError) -> Self {
                Stop::Solver
            }
        }
        let a = Adams::new(AdamsOptions::default()).unwrap();
        let mut y = [1.0];
        let r = a.integrate(&mut Decay, 0.0, 5.0, &mut y, |t, _| if t > 1.0 { Err(Stop::Here(t)) } else { Ok(()) });
        assert!(matches!(r, Err(Stop::Here(t)) if t > 1.0));
    }
}
