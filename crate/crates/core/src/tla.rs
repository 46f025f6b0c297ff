//! Transformed-linear algebra on positive heavy-tailed variables.
//!
//! Vector-space operations on `RV(2)` variables are defined through the
//! softplus bijection `t: R -> (0, inf)`:
//!
//! - `x ⊕ y = t(t⁻¹(x) + t⁻¹(y))`
//! - `a ∘ x = t(a · t⁻¹(x))`
//!
//! The tail index is fixed at 2 throughout the crate. Margins are standardized
//! to Pareto(scale 1, shape 2), i.e. `P(X > z) = z⁻²` for `z ≥ 1`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::{Error, Result};

/// Above this magnitude the softplus pair switches to its asymptotic branch.
const STABLE_BRANCH: f64 = 30.0;

/// `t(x) = log(1 + exp(x))`, overflow-safe.
pub fn softplus(x: f64) -> f64 {
    if x > STABLE_BRANCH {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `t⁻¹(y) = log(exp(y) - 1)` for `y > 0`.
pub fn softplus_inv(y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("softplus_inv requires y > 0, got {y}")));
    }
    Ok(softplus_inv_unchecked(y))
}

/// `t⁻¹` without the domain check; callers guarantee `y > 0`.
#[inline]
pub(crate) fn softplus_inv_unchecked(y: f64) -> f64 {
    if y > STABLE_BRANCH {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// A realization of a positive regularly varying scalar.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TailScalar(f64);

impl TailScalar {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(Error::Domain(format!("tail scalar must be positive and finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn preimage(self) -> f64 {
        softplus_inv_unchecked(self.0)
    }
}

/// Transformed-linear sum `x ⊕ y`.
pub fn tl_add(x: TailScalar, y: TailScalar) -> TailScalar {
    TailScalar(softplus(x.preimage() + y.preimage()))
}

/// Transformed-linear scalar multiple `a ∘ x`. Any real `a` is accepted.
pub fn tl_scale(a: f64, x: TailScalar) -> TailScalar {
    TailScalar(softplus(a * x.preimage()))
}

/// Componentwise `t(M t⁻¹(z))`, i.e. the row-wise ⊕ of `M_ik ∘ z_k`.
pub fn tl_matvec(m: &DMatrix<f64>, z: &[f64]) -> Result<Vec<f64>> {
    if m.ncols() != z.len() {
        return Err(Error::Dimension {
            expected: format!("vector of length {}", m.ncols()),
            got: format!("length {}", z.len()),
        });
    }
    if let Some(bad) = z.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("tl_matvec requires positive entries, got {bad}")));
    }
    let pre: Vec<f64> = z.iter().map(|&v| softplus_inv_unchecked(v)).collect();
    Ok(linear_then_softplus(m, &pre))
}

/// `t(M y)` for a preimage vector `y` that is already on the real line.
pub(crate) fn linear_then_softplus(m: &DMatrix<f64>, pre: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| {
            let s: f64 = (0..m.ncols()).map(|k| m[(i, k)] * pre[k]).sum();
            softplus(s)
        })
        .collect()
}

/// Inverse Pareto(1, 2) CDF at `u ∈ [0, 1)`: `(1 - u)^(-1/2)`.
#[inline]
pub fn pareto2_from_uniform(u: f64) -> f64 {
    (1.0 - u).powf(-0.5)
}

/// `count` i.i.d. Pareto(1, 2) draws via the inverse CDF.
pub fn sample_pareto2<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count)
        .map(|_| pareto2_from_uniform(rng.random::<f64>()))
        .collect()
}

/// An `n × p` sample of strictly positive values.
///
/// `standardized` records whether each margin has been mapped to
/// Pareto(1, 2) (by [`StandardizedMatrix::rank_standardize`] or by
/// construction of the data).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedMatrix {
    data: DMatrix<f64>,
    standardized: bool,
}

impl StandardizedMatrix {
    pub fn new(data: DMatrix<f64>, standardized: bool) -> Result<Self> {
        if let Some(v) = data.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("sample entries must be positive and finite, got {v}")));
        }
        Ok(Self { data, standardized })
    }

    /// Builds from row-major samples.
    pub fn from_rows(rows: &[Vec<f64>], standardized: bool) -> Result<Self> {
        Self::new(crate::linalg::from_rows(rows)?, standardized)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Contiguous view of column `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    pub fn row(&self, l: usize) -> Vec<f64> {
        (0..self.p()).map(|j| self.data[(l, j)]).collect()
    }

    /// Applies [`rank_to_pareto2`] to every column.
    pub fn rank_standardize(&self) -> Result<Self> {
        rank_standardize_matrix(&self.data)
    }

    /// Keeps the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let n = self.n();
        let data = DMatrix::from_fn(n, cols.len(), |l, c| self.data[(l, cols[c])]);
        Self { data, standardized: self.standardized }
    }
}

/// Rank-standardizes every column of an arbitrary real matrix.
pub fn rank_standardize_matrix(data: &DMatrix<f64>) -> Result<StandardizedMatrix> {
    let n = data.nrows();
    let mut out = DMatrix::zeros(n, data.ncols());
    for j in 0..data.ncols() {
        let col: Vec<f64> = data.column(j).iter().copied().collect();
        let z = rank_to_pareto2(&col)?;
        out.column_mut(j).copy_from_slice(&z);
    }
    Ok(StandardizedMatrix { data: out, standardized: true })
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their average
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Empirical rank transform to Pareto(1, 2): `x'_l = (1 - r_l/(n+1))^(-1/2)`.
pub fn rank_to_pareto2(column: &[f64]) -> Result<Vec<f64>> {
    let n = column.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("rank transform needs n >= 2, got {n}")));
    }
    if column.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("rank transform input contains NaN".into()));
    }
    let denom = (n + 1) as f64;
    Ok(average_ranks(column)
        .into_iter()
        .map(|r| (1.0 - r / denom).powf(-0.5))
        .collect())
}

/// Classical Hill estimate of the tail index from the `k` largest values:
/// `k / Σ_{i=1..k} log(X_(n-i+1) / X_(n-k))`.
pub fn hill_estimator(column: &[f64], k: usize) -> Result<f64> {
    let n = column.len();
    if k < 2 || k >= n {
        return Err(Error::InvalidParameter(format!("Hill estimator needs 2 <= k < n, got k={k}, n={n}")));
    }
    if let Some(v) = column.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!("Hill estimator needs positive values, got {v}")));
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let reference = sorted[k].ln();
    let sum: f64 = sorted[..k].iter().map(|x| x.ln() - reference).sum();
    if !(sum > 0.0) {
        return Err(Error::Domain("top order statistics are all tied; tail index undefined".into()));
    }
    Ok(k as f64 / sum)
}

/// Number of observations strictly above the empirical `q`-quantile, the
/// default `k` for [`hill_estimator`].
pub fn hill_k_for_quantile(column: &[f64], q: f64) -> Result<usize> {
    let threshold = crate::tpdm::select_threshold(column, q)?;
    Ok(column.iter().filter(|&&v| v > threshold).count())
}
