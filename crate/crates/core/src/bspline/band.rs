use faer::Mat;

/// Storage symmetry of a [`BandMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSymmetry {
    /// Only the lower band is stored; `a[j][i] = a[i][j]`.
    Symmetric,
    /// Full band stored.
    General,
}

/// Square banded matrix with `bw` sub- (and super-) diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    symmetry: BandSymmetry,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize, symmetry: BandSymmetry) -> Self {
        let width = match symmetry {
            BandSymmetry::Symmetric => bw + 1,
            BandSymmetry::General => 2 * bw + 1,
        };
        Self {
            n,
            bw,
            symmetry,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn symmetry(&self) -> BandSymmetry {
        self.symmetry
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || i.abs_diff(j) > self.bw {
            return None;
        }
        match self.symmetry {
            BandSymmetry::Symmetric => {
                let (r, c) = if i >= j { (i, j) } else { (j, i) };
                Some(r * (self.bw + 1) + (r - c))
            }
            BandSymmetry::General => Some(i * (2 * self.bw + 1) + (j + self.bw - i)),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to element `(i, j)`. For symmetric storage only `i >= j`
    /// should be passed, otherwise the element is counted twice.
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("element outside band");
        self.data[s] += v;
    }

    /// Principal sub-block `range x range`.
    pub fn sub(&self, range: std::ops::Range<usize>) -> Self {
        let n = range.len();
        let mut out = Self::zeros(n, self.bw, self.symmetry);
        for i in 0..n {
            for j in i.saturating_sub(self.bw)..(i + self.bw + 1).min(n) {
                if self.symmetry == BandSymmetry::Symmetric && j > i {
                    continue;
                }
                let v = self.get(range.start + i, range.start + j);
                if let Some(s) = out.slot(i, j) {
                    out.data[s] = v;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw + 1).min(self.n);
            *yi = (lo..hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    /// Largest `|a_ij + a_ji|` over the band.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                worst = worst.max((self.get(i, j) + self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest `|a_ij - a_ji|` over the band.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}
