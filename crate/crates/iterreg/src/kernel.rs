//! Kernels, Gram matrices, and kernel expansions.
//!
//! All training state lives in coefficient space: a function is a vector `c`
//! over the sample points, its values are `G c`, and its squared RKHS norm is
//! the Gram quadratic form `c' G c`.

use std::sync::Arc;

use thiserror::Error;

use crate::data::PointSet;
use crate::exec::{fill_rows, ExecMode};

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("polynomial degree must be at least 1")]
    ZeroDegree,
    #[error("polynomial offset must be nonnegative, got {0}")]
    NegativeOffset(f64),
    #[error("gaussian bandwidth must be positive, got {0}")]
    BadBandwidth(f64),
    #[error("dictionary kernel needs at least one feature map")]
    EmptyDictionary,
    #[error("no bound source: supply points or an explicit value")]
    NoKappaSource,
    #[error("supplied bound must be positive and finite, got {0}")]
    BadKappa(f64),
    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
}

/// Feature map used by dictionary kernels.
pub type FeatureMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Positive semidefinite kernel on real vectors.
#[derive(Clone)]
pub enum Kernel {
    /// `K(x, y) = <x, y>`
    Linear,
    /// `K(x, y) = (<x, y> + offset)^degree`, offset >= 0
    Polynomial { degree: u32, offset: f64 },
    /// `K(x, y) = exp(-||x - y||^2 / (2 bandwidth^2))`
    Gaussian { bandwidth: f64 },
    /// `K(x, y) = sum_i phi_i(x) phi_i(y)` over a finite dictionary
    Dictionary { features: Vec<FeatureMap> },
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Linear => write!(f, "Linear"),
            Kernel::Polynomial { degree, offset } => {
                write!(f, "Polynomial {{ degree: {degree}, offset: {offset} }}")
            }
            Kernel::Gaussian { bandwidth } => write!(f, "Gaussian {{ bandwidth: {bandwidth} }}"),
            Kernel::Dictionary { features } => {
                write!(f, "Dictionary {{ features: {} }}", features.len())
            }
        }
    }
}

impl Kernel {
    pub fn linear() -> Self {
        Kernel::Linear
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self, KernelError> {
        if degree == 0 {
            return Err(KernelError::ZeroDegree);
        }
        if !(offset >= 0.0) {
            return Err(KernelError::NegativeOffset(offset));
        }
        Ok(Kernel::Polynomial { degree, offset })
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self, KernelError> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(KernelError::BadBandwidth(bandwidth));
        }
        Ok(Kernel::Gaussian { bandwidth })
    }

    pub fn dictionary(features: Vec<FeatureMap>) -> Result<Self, KernelError> {
        if features.is_empty() {
            return Err(KernelError::EmptyDictionary);
        }
        Ok(Kernel::Dictionary { features })
    }

    /// Dictionary of monomials `x[0]^k`, k = 1..=degree.
    pub fn monomial_dictionary(degree: u32) -> Result<Self, KernelError> {
        if degree == 0 {
            return Err(KernelError::EmptyDictionary);
        }
        let features = (1..=degree)
            .map(|k| {
                let k = k as i32;
                Arc::new(move |x: &[f64]| x[0].powi(k)) as FeatureMap
            })
            .collect();
        Self::dictionary(features)
    }

    /// Single kernel evaluation.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Linear => dot(x, y),
            Kernel::Polynomial { degree, offset } => {
                (dot(x, y) + offset).powi(*degree as i32)
            }
            Kernel::Gaussian { bandwidth } => {
                let sq: f64 = x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
            Kernel::Dictionary { features } => {
                features.iter().map(|phi| phi(x) * phi(y)).sum()
            }
        }
    }

    /// Dense Gram matrix over `points`, default execution mode.
    pub fn gram(&self, points: &PointSet) -> GramMatrix {
        self.gram_with(points, ExecMode::default())
    }

    /// Dense Gram matrix; rows are computed independently, so both modes
    /// produce bitwise-identical matrices. Symmetry is exact because every
    /// kernel formula above is symmetric in its float operations.
    pub fn gram_with(&self, points: &PointSet, mode: ExecMode) -> GramMatrix {
        let n = points.len();
        let mut values = vec![0.0; n * n];
        fill_rows(mode, &mut values, n, |i, row| {
            let xi = points.point(i);
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.eval(xi, points.point(j));
            }
        });
        GramMatrix { values, points: points.clone() }
    }

    /// Rectangular kernel matrix `K[i][j] = K(rows[i], cols[j])`.
    pub fn cross_gram(&self, rows: &PointSet, cols: &PointSet) -> CrossGram {
        let (nr, nc) = (rows.len(), cols.len());
        let mut values = vec![0.0; nr * nc];
        for i in 0..nr {
            let xi = rows.point(i);
            for j in 0..nc {
                values[i * nc + j] = self.eval(xi, cols.point(j));
            }
        }
        CrossGram { values, rows: nr, cols: nc }
    }

    /// Upper bound on `sup sqrt(K(x, x))` with its provenance.
    ///
    /// The Gaussian bound is exactly 1 regardless of the other arguments.
    /// Otherwise a user-supplied value wins, and a point set yields the
    /// maximum over the sample.
    pub fn kappa(
        &self,
        points: Option<&PointSet>,
        supplied: Option<f64>,
    ) -> Result<KappaBound, KernelError> {
        if let Kernel::Gaussian { .. } = self {
            return Ok(KappaBound { kappa: 1.0, source: KappaSource::Analytic });
        }
        if let Some(k) = supplied {
            if !(k > 0.0 && k.is_finite()) {
                return Err(KernelError::BadKappa(k));
            }
            return Ok(KappaBound { kappa: k, source: KappaSource::UserSupplied });
        }
        let points = points.ok_or(KernelError::NoKappaSource)?;
        let mut max_sq: f64 = 0.0;
        for i in 0..points.len() {
            let p = points.point(i);
            max_sq = max_sq.max(self.eval(p, p));
        }
        Ok(KappaBound { kappa: max_sq.max(0.0).sqrt(), source: KappaSource::DataEstimated })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaSource {
    Analytic,
    DataEstimated,
    UserSupplied,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaBound {
    pub kappa: f64,
    pub source: KappaSource,
}

/// Dense symmetric Gram matrix together with the points that produced it.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    values: Vec<f64>,
    points: PointSet,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    /// `out = G v`.
    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n();
        debug_assert_eq!(v.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            out[i] = dot(self.row(i), v);
        }
    }

    /// `v' G v`; small negative roundoff is clamped to zero.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            acc += v[i] * dot(self.row(i), v);
        }
        acc.max(0.0)
    }
}

/// Rectangular kernel matrix for scoring points outside the training set.
#[derive(Debug, Clone)]
pub struct CrossGram {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl CrossGram {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Values of the expansion `c` at each row point.
    pub fn apply(&self, c: &[f64], out: &mut [f64]) {
        debug_assert_eq!(c.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for i in 0..self.rows {
            out[i] = dot(&self.values[i * self.cols..(i + 1) * self.cols], c);
        }
    }
}

/// Squared RKHS norm `c' G c` of the expansion with coefficients `coeffs`.
pub fn rkhs_norm_sq(gram: &GramMatrix, coeffs: &[f64]) -> f64 {
    gram.quad_form(coeffs)
}

/// Evaluates `sum_j coeffs[j] K(x, centers[j])`.
pub fn expansion_eval(kernel: &Kernel, centers: &PointSet, coeffs: &[f64], x: &[f64]) -> f64 {
    debug_assert_eq!(coeffs.len(), centers.len());
    coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| c * kernel.eval(x, centers.point(j)))
        .sum()
}

/// A function in the kernel's span: fixed centers plus one coefficient each.
#[derive(Clone, Debug)]
pub struct KernelExpansion {
    pub kernel: Kernel,
    pub centers: PointSet,
    pub coefficients: Vec<f64>,
}

impl KernelExpansion {
    pub fn new(
        kernel: Kernel,
        centers: PointSet,
        coefficients: Vec<f64>,
    ) -> Result<Self, KernelError> {
        if coefficients.len() != centers.len() {
            return Err(KernelError::CoefficientCount {
                expected: centers.len(),
                got: coefficients.len(),
            });
        }
        Ok(Self { kernel, centers, coefficients })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        expansion_eval(&self.kernel, &self.centers, &self.coefficients, x)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
