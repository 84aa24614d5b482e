//! From a span basis to the boundary correlation matrix, and back.
//!
//! The doubling map sends an `n x n` correlation matrix `M` to an `n x 2n`
//! matrix `M̃` with `M̃ K_n = I`. Given any basis `A` of the same row space,
//! `B = (A K_n)^{-1} A` recovers `M̃`, and `M` is read off its odd columns.

use std::f64::consts::PI;

use thiserror::Error;

use crate::curve::{
    default_sample_points, derivative_basis, fourier_matrix, sample_basis, CurveError, Provenance,
    SpanBasis,
};
use crate::exec::Execution;
use crate::numerics::{lu_solve, NumericsError, RealMatrix, TolerancePolicy};
use crate::region::{Region, RegionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelateError {
    #[error("A K_n is singular; the rows do not span a doubled correlation matrix ({0})")]
    SingularProduct(NumericsError),
    #[error("imaginary residual {max_imag:e} exceeds {tolerance:e}")]
    ResidualImaginary { max_imag: f64, tolerance: f64 },
    #[error("doubled matrix breaks the sign pattern at ({row}, {col}) by {deviation:e}")]
    SignPatternViolation {
        row: usize,
        col: usize,
        deviation: f64,
    },
    #[error("reads of ⟨σ_{j}σ_{k}⟩ differ by {discrepancy:e}")]
    AsymmetryAboveTolerance {
        j: usize,
        k: usize,
        discrepancy: f64,
    },
    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),
    #[error("{0} is not a τ-descent")]
    NotADescent(usize),
    #[error("x = {0} lies outside (0, 1)")]
    DomainError(f64),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// `2n x n` matrix with `1/2` at `(2j − 1, j)` and `(2j, j)`.
pub fn k_matrix(n: usize) -> RealMatrix {
    let mut k = RealMatrix::zeros(2 * n, n);
    for j in 0..n {
        k[(2 * j, j)] = 0.5;
        k[(2 * j + 1, j)] = 0.5;
    }
    k
}

/// Symmetric `n x n` matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: RealMatrix,
}

impl CorrelationMatrix {
    /// Validates symmetry and the `[−1, 1]` range up to `tol`; the diagonal is
    /// forced to exactly 1 after checking it.
    pub fn new(mut entries: RealMatrix, tol: f64) -> Result<Self, CorrelateError> {
        let n = entries.rows();
        if entries.cols() != n {
            return Err(CorrelateError::InvalidMatrix(format!(
                "expected a square matrix, got {}x{}",
                n,
                entries.cols()
            )));
        }
        if !entries.is_finite() {
            return Err(CorrelateError::InvalidMatrix("non-finite entry".into()));
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > tol {
                return Err(CorrelateError::InvalidMatrix(format!(
                    "diagonal entry {} is {}",
                    i + 1,
                    entries[(i, i)]
                )));
            }
            entries[(i, i)] = 1.0;
            for j in 0..n {
                let a = entries[(i, j)];
                if (a - entries[(j, i)]).abs() > tol {
                    return Err(CorrelateError::InvalidMatrix(format!(
                        "not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if a.abs() > 1.0 + tol {
                    return Err(CorrelateError::InvalidMatrix(format!(
                        "entry ({}, {}) = {a} outside [-1, 1]",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: RealMatrix::identity(n),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    /// `⟨σ_j σ_k⟩`, 1-based.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[(j - 1, k - 1)]
    }

    pub fn entries(&self) -> &RealMatrix {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.to_rows()
    }

    pub fn max_abs_diff(&self, other: &CorrelationMatrix) -> f64 {
        self.entries.max_abs_diff(&other.entries)
    }
}

/// `n x 2n` image of a correlation matrix under the doubling map.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubledMatrix {
    entries: RealMatrix,
}

impl DoubledMatrix {
    /// Wraps an arbitrary `n x 2n` matrix; the sign pattern is checked only
    /// on extraction.
    pub fn from_entries(entries: RealMatrix) -> Result<Self, CorrelateError> {
        if entries.cols() != 2 * entries.rows() {
            return Err(CorrelateError::InvalidMatrix(format!(
                "doubled matrix must be n x 2n, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &RealMatrix {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }
}

fn sign(e: usize) -> f64 {
    if e.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// The doubling map: `m̃_{j,2j−1} = m̃_{j,2j} = 1` and, for `j ≠ k`,
/// `m̃_{j,2k−1} = −m̃_{j,2k} = (−1)^{j+k+[j<k]} m_{j,k}`.
pub fn double(m: &CorrelationMatrix) -> DoubledMatrix {
    let n = m.n();
    let mut d = RealMatrix::zeros(n, 2 * n);
    for j in 1..=n {
        for k in 1..=n {
            let (a, b) = if j == k {
                (1.0, 1.0)
            } else {
                let v = sign(j + k + usize::from(j < k)) * m.get(j, k);
                (v, -v)
            };
            d[(j - 1, 2 * k - 2)] = a;
            d[(j - 1, 2 * k - 1)] = b;
        }
    }
    DoubledMatrix { entries: d }
}

/// `B = (A K_n)^{-1} A`, computed in complex arithmetic and checked to be real.
pub fn doubled_from_span(
    a: &SpanBasis,
    policy: &TolerancePolicy,
) -> Result<DoubledMatrix, CorrelateError> {
    let n = a.n();
    let rows = a.rows();
    let ak = rows.matmul(&k_matrix(n).to_complex());
    let b = lu_solve(&ak, rows, policy).map_err(CorrelateError::SingularProduct)?;
    let max_imag = b.max_imag();
    if max_imag > policy.residual_eps {
        return Err(CorrelateError::ResidualImaginary {
            max_imag,
            tolerance: policy.residual_eps,
        });
    }
    Ok(DoubledMatrix {
        entries: b.real_part(),
    })
}

/// A correlation matrix together with the two internal consistency figures
/// of its extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub matrix: CorrelationMatrix,
    /// Largest gap between the two reads of one correlation.
    pub discrepancy: f64,
    /// Largest deviation from the doubled sign pattern.
    pub sign_residual: f64,
}

/// Reads `m_{j,k} = (−1)^{k−j+1} b_{j,2k−1}` and `m_{j,k} = (−1)^{j+k} b_{k,2j−1}`
/// for `j < k` and returns their mean.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks
pub fn extract_correlations(
    b: &DoubledMatrix,
    policy: &TolerancePolicy,
) -> Result<Extraction, CorrelateError> {
    let n = b.n();
    let e = &b.entries;
    let tol = policy.agreement_eps;
    let mut sign_residual: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let (odd, even) = (e[(j, 2 * k)], e[(j, 2 * k + 1)]);
            let (deviation, col) = if j == k {
                let d1 = (odd - 1.0).abs();
                let d2 = (even - 1.0).abs();
                if d1 >= d2 {
                    (d1, 2 * k + 1)
                } else {
                    (d2, 2 * k + 2)
                }
            } else {
                ((odd + even).abs(), 2 * k + 2)
            };
            if !(deviation <= tol) {
                return Err(CorrelateError::SignPatternViolation {
                    row: j + 1,
                    col,
                    deviation,
                });
            }
            sign_residual = sign_residual.max(deviation);
        }
    }
    let mut m = RealMatrix::identity(n);
    let mut discrepancy: f64 = 0.0;
    for j in 1..=n {
        for k in j + 1..=n {
            let first = sign(k - j + 1) * e[(j - 1, 2 * k - 2)];
            let second = sign(j + k) * e[(k - 1, 2 * j - 2)];
            let gap = (first - second).abs();
            if !(gap <= tol) {
                return Err(CorrelateError::AsymmetryAboveTolerance {
                    j,
                    k,
                    discrepancy: gap,
                });
            }
            discrepancy = discrepancy.max(gap);
            let mean = 0.5 * (first + second);
            m[(j - 1, k - 1)] = mean;
            m[(k - 1, j - 1)] = mean;
        }
    }
    Ok(Extraction {
        matrix: CorrelationMatrix::new(m, tol)?,
        discrepancy,
        sign_residual,
    })
}

/// How to obtain the span basis.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BasisStrategy {
    /// Fourier rows for non-alternating regions, derivative rows at `k = 1`
    /// otherwise.
    #[default]
    Auto,
    Fourier,
    /// Curve samples; `None` uses [`default_sample_points`].
    Samples(Option<Vec<f64>>),
    Derivative(usize),
    /// Crossing removal down to a non-crossing matching.
    Recursive,
}

/// Full pipeline output.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub extraction: Extraction,
    pub provenance: Provenance,
}

/// Span basis for `r` according to `strategy`.
pub fn span_basis(
    r: &Region,
    strategy: &BasisStrategy,
    policy: &TolerancePolicy,
) -> Result<SpanBasis, CorrelateError> {
    Ok(match strategy {
        BasisStrategy::Auto => {
            if r.is_alternating() {
                derivative_basis(r, 1, policy)?
            } else {
                fourier_matrix(r).into_basis(policy)?
            }
        }
        BasisStrategy::Fourier => fourier_matrix(r).into_basis(policy)?,
        BasisStrategy::Samples(ts) => {
            let ts = ts.clone().unwrap_or_else(|| default_sample_points(r.n()));
            sample_basis(r, &ts, policy)?
        }
        BasisStrategy::Derivative(k) => derivative_basis(r, *k, policy)?,
        BasisStrategy::Recursive => recursive_basis(r, policy)?,
    })
}

pub fn correlations_report(
    r: &Region,
    strategy: &BasisStrategy,
    policy: &TolerancePolicy,
) -> Result<CorrelationReport, CorrelateError> {
    let basis = span_basis(r, strategy, policy)?;
    let b = doubled_from_span(&basis, policy)?;
    Ok(CorrelationReport {
        extraction: extract_correlations(&b, policy)?,
        provenance: basis.provenance(),
    })
}

/// Boundary correlation matrix of `r`.
///
/// Disconnected matchings are handled on the whole region at once; labels
/// that share a black face in every arrangement then come out correlated.
pub fn correlations(
    r: &Region,
    strategy: &BasisStrategy,
    policy: &TolerancePolicy,
) -> Result<CorrelationMatrix, CorrelateError> {
    Ok(correlations_report(r, strategy, policy)?.extraction.matrix)
}

/// The matrix `g_k^θ` attached to a descent.
#[derive(Debug, Clone, PartialEq)]
pub struct GMatrix {
    pub entries: RealMatrix,
    pub k: usize,
}

pub fn g_matrix(r: &Region, k: usize) -> Result<GMatrix, CorrelateError> {
    if !r.descents().contains(&k) {
        return Err(CorrelateError::NotADescent(k));
    }
    let size = r.size();
    let delta = r.affine_theta(k as i64 + 1) - r.affine_theta(k as i64);
    let (s, c) = delta.sin_cos();
    let mut g = RealMatrix::identity(size);
    if k < size {
        let (a, b) = (k - 1, k);
        g[(a, a)] = 1.0 / c;
        g[(b, b)] = 1.0 / c;
        g[(a, b)] = s / c;
        g[(b, a)] = s / c;
    } else {
        let twist = sign(r.n() - 1);
        let last = size - 1;
        g[(0, 0)] = 1.0 / c;
        g[(last, last)] = 1.0 / c;
        g[(0, last)] = twist * s / c;
        g[(last, 0)] = twist * s / c;
    }
    Ok(GMatrix { entries: g, k })
}

/// Rows `e_a + ε e_b` with `ε = (−1)^{(b−a−1)/2}`, one per pair `a < b` of a
/// non-crossing matching.
pub fn noncrossing_base(r: &Region) -> RealMatrix {
    let pairs = r.matching().pairs();
    let mut a = RealMatrix::zeros(pairs.len(), r.size());
    for (row, &(lo, hi)) in pairs.iter().enumerate() {
        a[(row, lo - 1)] = 1.0;
        a[(row, hi - 1)] = sign((hi - lo - 1) / 2);
    }
    a
}

/// Span basis built by removing the smallest descent until no crossing is
/// left, then pulling the non-crossing base span back through the
/// accumulated `g`-matrices.
pub fn recursive_basis(r: &Region, policy: &TolerancePolicy) -> Result<SpanBasis, CorrelateError> {
    let mut current = r.clone();
    let mut gs: Vec<GMatrix> = Vec::new();
    while let Some(&k) = current.descents().first() {
        gs.push(g_matrix(&current, k)?);
        current = current.remove_crossing(k)?;
    }
    let mut a = noncrossing_base(&current);
    for g in gs.iter().rev() {
        a = a.matmul(&g.entries);
    }
    Ok(SpanBasis::from_real(
        a,
        Provenance::NoncrossingRecursive,
        policy,
    )?)
}

pub fn correlations_recursive(
    r: &Region,
    policy: &TolerancePolicy,
) -> Result<CorrelationMatrix, CorrelateError> {
    correlations(r, &BasisStrategy::Recursive, policy)
}

/// Closed form for the regular `2n`-gon:
/// `(2/n) Σ_{i=1}^{k} (−1)^{k−i} / sin((2i − 1)π/(2n)) + (−1)^k`, `k = |p − q|`.
pub fn regular_correlation(n: usize, p: usize, q: usize) -> f64 {
    let k = p.abs_diff(q);
    if k == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let sum: f64 = (1..=k)
        .map(|i| sign(k - i) / ((2 * i - 1) as f64 * PI / (2.0 * nf)).sin())
        .sum();
    2.0 / nf * sum + sign(k)
}

/// `⟨σ_1 σ_k⟩` for `k ∈ [n]`.
pub fn regular_row(n: usize, exec: Execution) -> Vec<f64> {
    exec.map_range(1..n + 1, |k| regular_correlation(n, 1, k))
}

/// The whole closed-form matrix, rows evaluated under `exec`.
pub fn regular_table(n: usize, exec: Execution) -> CorrelationMatrix {
    let rows = exec.map_range(1..n + 1, |p| {
        (1..=n)
            .map(|q| regular_correlation(n, p, q))
            .collect::<Vec<f64>>()
    });
    CorrelationMatrix {
        entries: RealMatrix::from_rows(&rows),
    }
}

/// `1 / sin(πx)` on `(0, 1)`.
pub fn scaling_limit(x: f64) -> Result<f64, CorrelateError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(CorrelateError::DomainError(x));
    }
    Ok(1.0 / (PI * x).sin())
}

/// `n ⟨σ_1 σ_{⌊nx⌋}⟩` from the closed form.
pub fn scaled_regular(n: usize, x: f64) -> Result<f64, CorrelateError> {
    if !(x > 0.0 && x < 1.0) {
        return Err(CorrelateError::DomainError(x));
    }
    let q = ((n as f64 * x).floor() as usize).max(1);
    Ok(n as f64 * regular_correlation(n, 1, q))
}

/// Row-vector action `(x_1, …, x_{2n}) ↦ ((−1)^{n−1} x_{2n}, x_1, …, x_{2n−1})`.
pub fn cyclic_shift_matrix(n: usize) -> RealMatrix {
    let size = 2 * n;
    let mut s = RealMatrix::zeros(size, size);
    for i in 0..size - 1 {
        s[(i, i + 1)] = 1.0;
    }
    s[(size - 1, 0)] = sign(n - 1);
    s
}
