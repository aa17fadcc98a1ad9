use super::KnotVector;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one Gauss point");
    if m == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_m(x) and its derivative
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=m {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = mf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre points laid out interval by interval over a knot vector.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    per_interval: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `per_interval` points on every breakpoint interval of `kv`.
    pub fn new(kv: &KnotVector, per_interval: usize) -> Self {
        let (xg, wg) = gauss_legendre(per_interval);
        let bp = kv.breakpoints();
        let mut points = Vec::with_capacity(per_interval * (bp.len() - 1));
        let mut weights = Vec::with_capacity(points.capacity());
        for w in bp.windows(2) {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            for (x, wt) in xg.iter().zip(&wg) {
                points.push(mid + half * x);
                weights.push(half * wt);
            }
        }
        Self {
            per_interval,
            points,
            weights,
        }
    }

    /// Default rule: `k + 1` points per interval.
    pub fn for_basis(kv: &KnotVector) -> Self {
        Self::new(kv, kv.order() + 1)
    }

    pub fn per_interval(&self) -> usize {
        self.per_interval
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Points and weights of one interval.
    pub fn interval(&self, j: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let r = j * self.per_interval..(j + 1) * self.per_interval;
        self.points[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
