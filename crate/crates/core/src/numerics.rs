//! Small dense linear algebra over real and complex scalars.
//!
//! Matrices here are tiny (an `n x 2n` span basis with `n` at most a few
//! hundred), so everything is row-major `Vec` storage with straightforward
//! elimination. All thresholds come from one [`TolerancePolicy`].

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Numeric thresholds shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    /// Angle comparisons (direction equality, strict interleaving).
    pub angle_eps: f64,
    /// Relative pivot threshold for solves and rank decisions.
    pub solve_eps: f64,
    /// Largest imaginary part tolerated when a complex result must be real.
    pub residual_eps: f64,
    /// Agreement between two independent computations of the same quantity.
    pub agreement_eps: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            angle_eps: 1e-9,
            solve_eps: 1e-12,
            residual_eps: 1e-9,
            agreement_eps: 1e-9,
        }
    }
}

impl TolerancePolicy {
    /// Returns an error naming the first non-positive field.
    pub fn validate(&self) -> Result<(), NumericsError> {
        for (name, value) in [
            ("angle_eps", self.angle_eps),
            ("solve_eps", self.solve_eps),
            ("residual_eps", self.residual_eps),
            ("agreement_eps", self.agreement_eps),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(NumericsError::BadTolerance { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is singular: pivot {pivot:e} below threshold {threshold:e} at step {step}")]
    Singular {
        step: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("tolerance {name} must be positive and finite, got {value}")]
    BadTolerance { name: &'static str, value: f64 },
}

/// Field operations needed by elimination.
pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn conjugate(self) -> Self;
    fn is_finite_value(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn conjugate(self) -> Self {
        self
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RealMatrix = DenseMatrix<f64>;
pub type ComplexMatrix = DenseMatrix<Complex64>;

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == cols),
            "ragged rows passed to DenseMatrix::from_rows"
        );
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_value())
    }

    pub fn scale_row(&mut self, i: usize, factor: T) {
        for x in self.row_mut(i) {
            *x = *x * factor;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Matrix product; panics on incompatible shapes.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    /// Largest entrywise distance to `other` (same shape required).
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).modulus())
            .fold(0.0, f64::max)
    }
}

impl RealMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        self.map(Complex64::from_f64)
    }
}

impl ComplexMatrix {
    pub fn real_part(&self) -> RealMatrix {
        self.map(|z| z.re)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for DenseMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactors<T> {
    pub fn factor(a: &DenseMatrix<T>, policy: &TolerancePolicy) -> Result<Self, NumericsError> {
        if a.rows != a.cols {
            return Err(NumericsError::Dimension(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let threshold = policy.solve_eps * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for step in 0..n {
            let (pivot_row, pivot) =
                (step..n)
                    .map(|i| (i, lu[(i, step)].modulus()))
                    .fold(
                        (step, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // a NaN pivot is singular too
            if !(pivot > threshold) || pivot == 0.0 {
                return Err(NumericsError::Singular {
                    step,
                    pivot,
                    threshold,
                });
            }
            lu.swap_rows(step, pivot_row);
            perm.swap(step, pivot_row);
            let diag = lu[(step, step)];
            for i in step + 1..n {
                let factor = lu[(i, step)] / diag;
                lu[(i, step)] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in step + 1..n {
                    let delta = factor * lu[(step, j)];
                    lu[(i, j)] = lu[(i, j)] - delta;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>, NumericsError> {
        let n = self.lu.rows;
        if b.rows != n {
            return Err(NumericsError::Dimension(format!(
                "right-hand side has {} rows, expected {n}",
                b.rows
            )));
        }
        let mut x = DenseMatrix::from_fn(n, b.cols, |i, j| b[(self.perm[i], j)]);
        for col in 0..b.cols {
            for i in 0..n {
                let mut acc = x[(i, col)];
                for k in 0..i {
                    acc = acc - self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[(i, col)];
                for k in i + 1..n {
                    acc = acc - self.lu[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = acc / self.lu[(i, i)];
            }
        }
        Ok(x)
    }
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn lu_solve<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    policy: &TolerancePolicy,
) -> Result<DenseMatrix<T>, NumericsError> {
    LuFactors::factor(a, policy)?.solve(b)
}

/// Numerical rank by Gaussian elimination with complete pivoting.
///
/// A pivot counts when it exceeds `solve_eps` times the largest entry of the
/// input.
pub fn rank<T: Scalar>(a: &DenseMatrix<T>, policy: &TolerancePolicy) -> usize {
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0;
    }
    let threshold = policy.solve_eps * scale;
    let mut m = a.clone();
    let (rows, cols) = (m.rows, m.cols);
    let mut col_order: Vec<usize> = (0..cols).collect();
    let mut r = 0;
    while r < rows.min(cols) {
        let mut best = (r, r, -1.0);
        for i in r..rows {
            for (jj, &j) in col_order.iter().enumerate().skip(r) {
                let v = m[(i, j)].modulus();
                if v > best.2 {
                    best = (i, jj, v);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        m.swap_rows(r, best.0);
        col_order.swap(r, best.1);
        let pc = col_order[r];
        let diag = m[(r, pc)];
        for i in r + 1..rows {
            let factor = m[(i, pc)] / diag;
            if factor == T::zero() {
                continue;
            }
            for &j in &col_order[r..] {
                let delta = factor * m[(r, j)];
                m[(i, j)] = m[(i, j)] - delta;
            }
        }
        r += 1;
    }
    r
}

fn inner<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x.conjugate() * y)
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus().powi(2)).sum::<f64>().sqrt()
}

/// Orthonormal basis of the row space, via twice-iterated modified Gram-Schmidt.
pub fn orthonormal_row_basis<T: Scalar>(
    a: &DenseMatrix<T>,
    policy: &TolerancePolicy,
) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = Vec::new();
    for i in 0..a.rows {
        let original = a.row(i);
        let scale = norm(original);
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<T> = original.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &v);
                for (x, &qx) in v.iter_mut().zip(q) {
                    *x = *x - c * qx;
                }
            }
        }
        let remaining = norm(&v);
        if remaining > policy.solve_eps.sqrt() * scale {
            let inv = T::from_f64(1.0 / remaining);
            basis.push(v.into_iter().map(|x| x * inv).collect());
        }
    }
    basis
}

fn one_sided_residual<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    policy: &TolerancePolicy,
) -> f64 {
    let basis = orthonormal_row_basis(a, policy);
    let mut worst: f64 = 0.0;
    for i in 0..b.rows {
        let row = b.row(i);
        let scale = norm(row);
        if scale == 0.0 {
            continue;
        }
        let mut v = row.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c = inner(q, &v);
                for (x, &qx) in v.iter_mut().zip(q) {
                    *x = *x - c * qx;
                }
            }
        }
        worst = worst.max(norm(&v) / scale);
    }
    worst
}

/// Distance between the row spaces of `a` and `b`.
///
/// Each row of one matrix is normalised, projected onto the orthogonal
/// complement of the other's row space, and the largest remaining norm in
/// either direction is returned. Zero exactly when the spans agree.
pub fn span_residual<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    policy: &TolerancePolicy,
) -> Result<f64, NumericsError> {
    if a.cols != b.cols {
        return Err(NumericsError::Dimension(format!(
            "span_residual needs equal column counts, got {} and {}",
            a.cols, b.cols
        )));
    }
    Ok(one_sided_residual(a, b, policy).max(one_sided_residual(b, a, policy)))
}

/// Determinant via LU; zero when elimination finds no usable pivot.
pub fn determinant<T: Scalar>(a: &DenseMatrix<T>) -> T {
    let policy = TolerancePolicy {
        solve_eps: f64::MIN_POSITIVE,
        ..TolerancePolicy::default()
    };
    match LuFactors::factor(a, &policy) {
        Ok(f) => {
            let n = a.rows;
            let mut swaps = 0;
            let mut seen = f.perm.clone();
            for i in 0..n {
                while seen[i] != i {
                    let t = seen[i];
                    seen.swap(i, t);
                    swaps += 1;
                }
            }
            let mut det = if swaps % 2 == 0 { T::one() } else { -T::one() };
            for i in 0..n {
                det = det * f.lu[(i, i)];
            }
            det
        }
        Err(_) => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let x = lu_solve(&RealMatrix::identity(2), &b, &policy()).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_inverse() {
        let a = RealMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = lu_solve(&a, &RealMatrix::identity(2), &policy()).unwrap();
        assert_eq!(x, RealMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.25]]));
    }

    #[test]
    fn random_systems_have_small_backward_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 8, 17, 32, 64] {
            // diagonally weighted so the condition number stays moderate
            let a = RealMatrix::from_fn(n, n, |i, j| {
                rng.gen_range(-1.0..1.0) + if i == j { n as f64 } else { 0.0 }
            });
            let b = RealMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0));
            let x = lu_solve(&a, &b, &policy()).unwrap();
            let resid = a.matmul(&x).max_abs_diff(&b);
            assert!(resid <= 1e-11, "n={n} residual {resid:e}");
        }
    }

    #[test]
    fn complex_solve_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 9;
        let a = ComplexMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                + if i == j {
                    Complex64::new(3.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
        });
        let b = ComplexMatrix::identity(n);
        let x = lu_solve(&a, &b, &policy()).unwrap();
        assert!(a.matmul(&x).max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = RealMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let err = lu_solve(&a, &RealMatrix::identity(2), &policy()).unwrap_err();
        assert!(matches!(err, NumericsError::Singular { step: 1, .. }));
    }

    #[test]
    fn rank_of_zero_and_deficient_matrices() {
        assert_eq!(rank(&RealMatrix::zeros(3, 5), &policy()), 0);
        let a = RealMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 1.0, 1.0],
        ]);
        assert_eq!(rank(&a, &policy()), 2);
    }

    #[test]
    fn rank_is_invariant_under_permutation_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = RealMatrix::from_fn(4, 8, |_, _| rng.gen_range(-1.0..1.0));
        let mut deficient = base.clone();
        // make row 3 a combination of rows 0 and 1
        for j in 0..8 {
            deficient[(3, j)] = 2.0 * base[(0, j)] - base[(1, j)];
        }
        for m in [&base, &deficient] {
            let r = rank(m, &policy());
            let mut shuffled = m.clone();
            shuffled.swap_rows(0, 3);
            shuffled.swap_rows(1, 2);
            shuffled.scale_row(0, -7.5);
            shuffled.scale_row(2, 1e-3);
            assert_eq!(rank(&shuffled, &policy()), r);
        }
        assert_eq!(rank(&base, &policy()), 4);
        assert_eq!(rank(&deficient, &policy()), 3);
    }

    #[test]
    fn span_residual_detects_equal_and_different_spans() {
        let a = RealMatrix::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]);
        assert!(span_residual(&a, &a, &policy()).unwrap() < 1e-15);
        let mut scaled = a.clone();
        scaled.scale_row(0, 1e3);
        scaled.scale_row(1, -0.25);
        assert!(span_residual(&a, &scaled, &policy()).unwrap() <= 1e-12);
        let other = RealMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]]);
        assert!(span_residual(&a, &other, &policy()).unwrap() > 0.1);
        assert!(span_residual(&a, &RealMatrix::zeros(1, 2), &policy()).is_err());
    }

    #[test]
    fn determinant_of_small_matrices() {
        let a = RealMatrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]);
        assert!((determinant(&a) + 6.0).abs() < 1e-15);
        assert_eq!(determinant(&RealMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn default_policy_is_valid_and_bad_values_are_rejected() {
        assert!(policy().validate().is_ok());
        let bad = TolerancePolicy {
            residual_eps: 0.0,
            ..policy()
        };
        assert!(matches!(
            bad.validate(),
            Err(NumericsError::BadTolerance {
                name: "residual_eps",
                ..
            })
        ));
    }
}
