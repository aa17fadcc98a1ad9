use super::BasisError;

/// Maximum spline order supported by the fixed-size evaluation buffers.
pub const MAX_ORDER: usize = 24;

/// Open (clamped) knot vector: the two end points carry multiplicity `k`,
/// interior breakpoints are simple.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    order: usize,
    knots: Vec<f64>,
    breakpoints: Vec<f64>,
}

/// Value and first derivative of one nonzero B-spline at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineValue {
    pub index: usize,
    pub value: f64,
    pub derivative: f64,
}

impl KnotVector {
    /// Uniform ("linear") knot sequence giving exactly `n_splines` splines of
    /// order `order` on `[a, b]`.
    pub fn linear(n_splines: usize, order: usize, a: f64, b: f64) -> Result<Self, BasisError> {
        if order < 2 || order > MAX_ORDER {
            return Err(BasisError::InvalidOrder(order));
        }
        if n_splines < order {
            return Err(BasisError::Underdetermined { n_splines, order });
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(BasisError::EmptyDomain(a, b));
        }
        let intervals = n_splines - order + 1;
        let h = (b - a) / intervals as f64;
        let mut breakpoints: Vec<f64> = (0..=intervals).map(|j| a + h * j as f64).collect();
        breakpoints[intervals] = b;
        Self::from_breakpoints(order, breakpoints)
    }

    /// Knot vector over arbitrary strictly increasing breakpoints.
    pub fn from_breakpoints(order: usize, breakpoints: Vec<f64>) -> Result<Self, BasisError> {
        if order < 2 || order > MAX_ORDER {
            return Err(BasisError::InvalidOrder(order));
        }
        if breakpoints.len() < 2 {
            return Err(BasisError::EmptyDomain(f64::NAN, f64::NAN));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(BasisError::NonMonotoneBreakpoints);
        }
        let a = breakpoints[0];
        let b = *breakpoints.last().unwrap();
        let mut knots = Vec::with_capacity(breakpoints.len() + 2 * (order - 1));
        knots.extend(std::iter::repeat(a).take(order - 1));
        knots.extend_from_slice(&breakpoints);
        knots.extend(std::iter::repeat(b).take(order - 1));
        Ok(Self {
            order,
            knots,
            breakpoints,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_intervals(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn n_splines(&self) -> usize {
        self.knots.len() - self.order
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// Support `[t_i, t_{i+k}]` of spline `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.order])
    }

    /// Interval index `j` with `x` in `[x_j, x_{j+1})`; the right end point
    /// belongs to the last interval.
    pub fn interval_of(&self, x: f64) -> Result<usize, BasisError> {
        let (a, b) = self.domain();
        if !(x >= a && x <= b) {
            return Err(BasisError::OutsideDomain { x, a, b });
        }
        let bp = &self.breakpoints;
        let last = bp.len() - 2;
        if x >= bp[last] {
            return Ok(last);
        }
        // first breakpoint strictly greater than x, minus one
        let j = bp.partition_point(|&t| t <= x);
        Ok(j - 1)
    }

    /// Values and derivatives of the `k` splines that may be nonzero on
    /// interval `interval`, evaluated at `x`. Spline `interval + m` is stored
    /// at position `m`.
    pub fn eval_interval(&self, interval: usize, x: f64, values: &mut [f64], derivs: &mut [f64]) {
        let k = self.order;
        let p = k - 1;
        let span = interval + p;
        let t = &self.knots;
        let mut left = [0.0; MAX_ORDER];
        let mut right = [0.0; MAX_ORDER];
        let n = &mut values[..k];
        n.iter_mut().for_each(|v| *v = 0.0);
        n[0] = 1.0;
        // Cox-de Boor up to degree p-1, then keep those values for the derivative.
        for j in 1..p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        // n[0..p] now holds degree p-1 splines span-p+1 ..= span.
        let d = &mut derivs[..k];
        let pf = p as f64;
        for m in 0..k {
            let i = span - p + m;
            let mut acc = 0.0;
            if m >= 1 {
                let denom = t[i + p] - t[i];
                if denom > 0.0 {
                    acc += n[m - 1] / denom;
                }
            }
            if m < p {
                let denom = t[i + p + 1] - t[i + 1];
                if denom > 0.0 {
                    acc -= n[m] / denom;
                }
            }
            d[m] = pf * acc;
        }
        left[p] = x - t[span + 1 - p];
        right[p] = t[span + p] - x;
        let j = p;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }

    /// The (at most `k`) splines supported at `x` with values and derivatives.
    pub fn eval(&self, x: f64) -> Result<Vec<SplineValue>, BasisError> {
        let interval = self.interval_of(x)?;
        let mut v = [0.0; MAX_ORDER];
        let mut d = [0.0; MAX_ORDER];
        self.eval_interval(interval, x, &mut v, &mut d);
        Ok((0..self.order)
            .map(|m| SplineValue {
                index: interval + m,
                value: v[m],
                derivative: d[m],
            })
            .collect())
    }

    /// Evaluate a spline expansion `sum_i c_i B_i(x)`; `coeffs` covers all
    /// splines, `offset` shifts the index when leading splines were dropped.
    pub fn eval_expansion(&self, coeffs: &[f64], offset: usize, x: f64) -> Result<f64, BasisError> {
        let interval = self.interval_of(x)?;
        let mut v = [0.0; MAX_ORDER];
        let mut d = [0.0; MAX_ORDER];
        self.eval_interval(interval, x, &mut v, &mut d);
        let mut acc = 0.0;
        for m in 0..self.order {
            let i = interval + m;
            if i >= offset && i - offset < coeffs.len() {
                acc += coeffs[i - offset] * v[m];
            }
        }
        Ok(acc)
    }

    /// Reflected knot vector on the same domain (`x -> a + b - x`).
    pub fn reflected(&self) -> Self {
        let (a, b) = self.domain();
        let bp: Vec<f64> = self.breakpoints.iter().rev().map(|&x| a + b - x).collect();
        Self::from_breakpoints(self.order, bp).expect("reflection preserves validity")
    }
}
