//! The curve `γ_R(t) ∈ R^{2n}`, its polynomial form `Γ_R(T)`, and the three
//! spanning bases built from them (Fourier coefficients, sample points,
//! derivatives at the roots `v_k`).

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{rank, ComplexMatrix, RealMatrix, TolerancePolicy};
use crate::region::{CyclicInterval, Matching, Region, RegionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("basis has rank {rank}, expected {expected}; the region may be alternating")]
    RankDeficient { rank: usize, expected: usize },
    #[error("bad sample points: {0}")]
    BadSamplePoints(String),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// `γ_R(t)` together with its parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub t: f64,
    pub coords: Vec<f64>,
}

impl CurvePoint {
    /// `Σ_k (−1)^{k+1} x_k y_k`, which vanishes for two points on one curve.
    pub fn alternating_form(&self, other: &CurvePoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .enumerate()
            .map(|(i, (a, b))| if i % 2 == 0 { a * b } else { -a * b })
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `γ_k(t) = ∏_{j ∈ J̃_k} sin(t − θ̃_j)` for any integer `k`.
pub fn gamma_coordinate(r: &Region, k: i64, t: f64) -> f64 {
    r.affine_j_set(k)
        .iter()
        .map(|&j| (t - r.affine_theta(j)).sin())
        .product()
}

pub fn gamma(r: &Region, t: f64) -> CurvePoint {
    CurvePoint {
        t,
        coords: (1..=r.size() as i64)
            .map(|k| gamma_coordinate(r, k, t))
            .collect(),
    }
}

/// The finite-index form `(−1)^{|J_k ∩ [k]|} ∏_{j ∈ J_k} sin(t − θ_j)`.
pub fn gamma_via_signs(r: &Region, t: f64) -> Vec<f64> {
    (1..=r.size())
        .map(|k| {
            let j = r.matching().j_set(k);
            let below = j.iter().filter(|&&x| x <= k).count();
            let prod: f64 = j.iter().map(|&x| (t - r.theta()[x - 1]).sin()).product();
            if below % 2 == 0 {
                prod
            } else {
                -prod
            }
        })
        .collect()
}

/// Coefficients (ascending degree) of `Γ_k(T) = ∏_{j ∈ J̃_k} (T − v_j)/T̃_j`,
/// one vector of length `n` per `k ∈ [2n]`.
pub fn gamma_polynomials(r: &Region) -> Vec<Vec<Complex64>> {
    let n = r.n();
    (1..=r.size() as i64)
        .map(|k| {
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            c[0] = Complex64::new(1.0, 0.0);
            for (deg, &j) in r.affine_j_set(k).iter().enumerate() {
                let v = Complex64::from_polar(1.0, 2.0 * r.affine_theta(j));
                let inv_t = r.affine_t(j).inv();
                for d in (0..=deg + 1).rev() {
                    let shifted = if d > 0 {
                        c[d - 1]
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    c[d] = (shifted - v * c[d]) * inv_t;
                }
            }
            c
        })
        .collect()
}

fn horner(c: &[Complex64], x: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * x + a)
}

/// `m`-th derivative of the polynomial with ascending coefficients `c` at `x`.
pub fn polynomial_derivative(c: &[Complex64], m: usize, x: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for d in (m..c.len()).rev() {
        let falling: f64 = ((d - m + 1)..=d).map(|i| i as f64).product();
        acc = acc * x + c[d] * falling;
    }
    acc
}

/// `Γ_R(T)` by direct products.
pub fn gamma_complex(r: &Region, t: Complex64) -> Vec<Complex64> {
    (1..=r.size() as i64)
        .map(|k| {
            r.affine_j_set(k)
                .iter()
                .map(|&j| {
                    let v = Complex64::from_polar(1.0, 2.0 * r.affine_theta(j));
                    (t - v) / r.affine_t(j)
                })
                .product()
        })
        .collect()
}

/// `Γ_R(T)` through [`gamma_polynomials`].
pub fn gamma_complex_from_polynomials(polys: &[Vec<Complex64>], t: Complex64) -> Vec<Complex64> {
    polys.iter().map(|c| horner(c, t)).collect()
}

/// Elementary symmetric polynomials `e_0..=e_m` of `xs`, built one linear
/// factor at a time.
pub fn elementary_symmetric(xs: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); xs.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (m, &x) in xs.iter().enumerate() {
        for i in (1..=m + 1).rev() {
            let prev = e[i - 1];
            e[i] += x * prev;
        }
    }
    e
}

/// `n x 2n` matrix `f_{j,k} = e_{j−1}((T̃_m²)_{m ∈ J̃_k}) / ∏_{m ∈ J̃_k} T̃_m`.
///
/// The scalar `(−1)^{n−j}/(2i)^{n−1}` relating these rows to the
/// coefficients of `γ_R` is dropped, so only the row span is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierMatrix {
    pub entries: ComplexMatrix,
}

impl FourierMatrix {
    pub fn rank(&self, policy: &TolerancePolicy) -> usize {
        rank(&self.entries, policy)
    }

    pub fn into_basis(self, policy: &TolerancePolicy) -> Result<SpanBasis, CurveError> {
        SpanBasis::new(self.entries, Provenance::Fourier, policy)
    }
}

pub fn fourier_matrix(r: &Region) -> FourierMatrix {
    let n = r.n();
    let mut entries = ComplexMatrix::zeros(n, r.size());
    for k in 1..=r.size() {
        let js = r.affine_j_set(k as i64);
        let ts: Vec<Complex64> = js.iter().map(|&m| r.affine_t(m)).collect();
        let squares: Vec<Complex64> = ts.iter().map(|t| t * t).collect();
        let e = elementary_symmetric(&squares);
        let denom: Complex64 = ts.iter().product();
        for j in 0..n {
            entries[(j, k - 1)] = e[j] / denom;
        }
    }
    FourierMatrix { entries }
}

/// Where a span basis came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Fourier,
    Samples,
    Derivative { k: usize },
    NoncrossingRecursive,
}

/// `n x 2n` matrix of full rank whose row span represents the region.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanBasis {
    rows: ComplexMatrix,
    provenance: Provenance,
}

impl SpanBasis {
    /// Accepts `rows` when it is `n x 2n` of rank `n`.
    pub fn new(
        rows: ComplexMatrix,
        provenance: Provenance,
        policy: &TolerancePolicy,
    ) -> Result<Self, CurveError> {
        let n = rows.rows();
        if rows.cols() != 2 * n {
            return Err(CurveError::RankDeficient {
                rank: 0,
                expected: rows.cols() / 2,
            });
        }
        let r = rank(&rows, policy);
        if r != n {
            return Err(CurveError::RankDeficient {
                rank: r,
                expected: n,
            });
        }
        Ok(Self { rows, provenance })
    }

    pub fn from_real(
        rows: RealMatrix,
        provenance: Provenance,
        policy: &TolerancePolicy,
    ) -> Result<Self, CurveError> {
        Self::new(rows.to_complex(), provenance, policy)
    }

    pub fn rows(&self) -> &ComplexMatrix {
        &self.rows
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n(&self) -> usize {
        self.rows.rows()
    }
}

/// `t_m = (2m − 1)π/(2n)` for `m ∈ [n]`.
pub fn default_sample_points(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|m| (2 * m - 1) as f64 * PI / (2 * n) as f64)
        .collect()
}

/// Rows `γ_R(t_1), …, γ_R(t_n)`.
pub fn sample_basis(
    r: &Region,
    ts: &[f64],
    policy: &TolerancePolicy,
) -> Result<SpanBasis, CurveError> {
    let n = r.n();
    if ts.len() != n {
        return Err(CurveError::BadSamplePoints(format!(
            "need {n} points, got {}",
            ts.len()
        )));
    }
    if ts.iter().any(|&t| !(0.0..PI).contains(&t)) {
        return Err(CurveError::BadSamplePoints(
            "points must lie in [0, π)".into(),
        ));
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CurveError::BadSamplePoints(
            "points must be strictly increasing".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = ts.iter().map(|&t| gamma(r, t).coords).collect();
    SpanBasis::from_real(RealMatrix::from_rows(&rows), Provenance::Samples, policy)
}

/// `m_k = #{j ∈ J_k : v_j = v_k}`.
pub fn multiplicity(r: &Region, k: usize) -> Result<usize, CurveError> {
    Ok(r.j_set(k)?
        .into_iter()
        .filter(|&j| r.same_direction(j, k))
        .count())
}

/// `supp_τ(k)`: the cyclic interval from `k` to `τ(k)`.
pub fn support(m: &Matching, k: usize) -> Result<CyclicInterval, CurveError> {
    m.check_index(k)?;
    Ok(m.support(k))
}

/// Indices `J_k ∪ {k}` in cyclic order starting at `k`.
pub fn derivative_indices(r: &Region, k: usize) -> Result<Vec<usize>, CurveError> {
    let size = r.size();
    let mut idx = r.j_set(k)?;
    idx.push(k);
    idx.sort_by_key(|&j| (j + size - k) % size);
    Ok(idx)
}

/// Rows `u^(j) = Γ_R^{(m_j)}(v_j)` restricted to `supp_τ(j)`, for
/// `j ∈ J_k ∪ {k}` in cyclic order from `k`. Valid for alternating regions.
pub fn derivative_basis(
    r: &Region,
    k: usize,
    policy: &TolerancePolicy,
) -> Result<SpanBasis, CurveError> {
    let size = r.size();
    let polys = gamma_polynomials(r);
    let indices = derivative_indices(r, k)?;
    let mut rows = ComplexMatrix::zeros(indices.len(), size);
    for (row, &j) in indices.iter().enumerate() {
        let m = multiplicity(r, j)?;
        let v = r.v(j);
        let supp = r.matching().support(j);
        for i in supp.members() {
            rows[(row, i - 1)] = polynomial_derivative(&polys[i - 1], m, v);
        }
    }
    SpanBasis::new(rows, Provenance::Derivative { k }, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::span_residual;
    use crate::region::{regular_polygon, staple};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn policy() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_gamma_closed_form() {
        let r = regular_polygon(2);
        for &t in &[0.0, 0.3, 1.7, -2.2] {
            let g = gamma(&r, t).coords;
            let expected = [
                (t - FRAC_PI_4).sin(),
                (t - FRAC_PI_2).sin(),
                (t - 3.0 * FRAC_PI_4).sin(),
                -t.sin(),
            ];
            for (a, b) in g.iter().zip(expected) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        let g0 = gamma(&r, 0.0).coords;
        let h = SQRT_2 / 2.0;
        for (a, b) in g0.iter().zip([-h, -1.0, -h, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn n_equals_one_curve_is_constant() {
        let r = regular_polygon(1);
        assert_eq!(gamma(&r, 0.4).coords, vec![1.0, 1.0]);
        assert_eq!(gamma_via_signs(&r, 0.4), vec![1.0, 1.0]);
    }

    #[test]
    fn signed_and_affine_forms_agree() {
        for r in [regular_polygon(2), regular_polygon(5), staple()] {
            for &t in &[0.1, 0.9, 2.5] {
                let a = gamma(&r, t).coords;
                let b = gamma_via_signs(&r, t);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-13, "{x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn affine_twist() {
        let r = staple();
        let n = r.n() as i64;
        let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
        for k in -12i64..12 {
            let a = gamma_coordinate(&r, k + 2 * n, 0.77);
            let b = sign * gamma_coordinate(&r, k, 0.77);
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_curve_examples() {
        let r = regular_polygon(2);
        let g = gamma_complex(&r, c(1.0, 0.0));
        let v2 = r.v(2);
        let expected = (c(1.0, 0.0) - v2) / r.affine_t(2);
        assert!((g[0] - expected).norm() < 1e-15);
        assert!(g[0].norm() > 0.5);
        assert!(gamma_complex(&r, v2)[0].norm() < 1e-15);
    }

    #[test]
    fn complex_curve_matches_real_curve() {
        for r in [regular_polygon(2), regular_polygon(4), staple()] {
            let t = 0.37;
            let big_t = Complex64::from_polar(1.0, t);
            let lhs = gamma_complex(&r, big_t * big_t);
            let scale = (c(0.0, 2.0) * big_t).powu(r.n() as u32 - 1);
            let polys = gamma_polynomials(&r);
            let via_poly = gamma_complex_from_polynomials(&polys, big_t * big_t);
            for ((a, g), p) in lhs.iter().zip(gamma(&r, t).coords).zip(via_poly) {
                assert!((a - scale * g).norm() < 1e-12);
                assert!((a - p).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn elementary_symmetric_small() {
        let e = elementary_symmetric(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let expected = [1.0, 6.0, 11.0, 6.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - c(b, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn square_fourier_matrix_entries() {
        let r = regular_polygon(2);
        let f = fourier_matrix(&r).entries;
        let h = SQRT_2 / 2.0;
        let t2 = c(h, h);
        let t3 = c(0.0, 1.0);
        let t4 = c(-h, h);
        let t1 = c(1.0, 0.0);
        let row1 = [t2.inv(), t3.inv(), t4.inv(), -t1.inv()];
        let row2 = [t2, t3, t4, -t1];
        for k in 0..4 {
            assert!((f[(0, k)] - row1[k]).norm() < 1e-15);
            assert!((f[(1, k)] - row2[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn fourier_ranks() {
        let f1 = fourier_matrix(&regular_polygon(1)).entries;
        assert_eq!((f1.rows(), f1.cols()), (1, 2));
        assert!((f1[(0, 0)].norm() - 1.0).abs() < 1e-15 && (f1[(0, 1)].norm() - 1.0).abs() < 1e-15);
        assert_eq!(fourier_matrix(&regular_polygon(4)).rank(&policy()), 4);
        assert_eq!(fourier_matrix(&staple()).rank(&policy()), 5);
        assert!(matches!(
            fourier_matrix(&staple()).into_basis(&policy()),
            Err(CurveError::RankDeficient {
                rank: 5,
                expected: 6
            })
        ));
    }

    #[test]
    fn square_sample_basis_matches_example() {
        let r = regular_polygon(2);
        let b = sample_basis(&r, &[0.0, 3.0 * FRAC_PI_4], &policy()).unwrap();
        let h = SQRT_2 / 2.0;
        let expected = [[-h, -1.0, -h, 0.0], [1.0, h, 0.0, -h]];
        for i in 0..2 {
            for j in 0..4 {
                assert!((b.rows()[(i, j)] - c(expected[i][j], 0.0)).norm() < 1e-15);
            }
        }
        let fourier = fourier_matrix(&r).entries;
        assert!(span_residual(b.rows(), &fourier, &policy()).unwrap() <= 1e-10);
    }

    #[test]
    fn sample_basis_errors_and_defaults() {
        let r = regular_polygon(3);
        assert_eq!(
            sample_basis(&r, &default_sample_points(3), &policy())
                .unwrap()
                .n(),
            3
        );
        assert!(matches!(
            sample_basis(&r, &[0.1, 0.2], &policy()),
            Err(CurveError::BadSamplePoints(_))
        ));
        assert!(matches!(
            sample_basis(&r, &[0.3, 0.2, 0.4], &policy()),
            Err(CurveError::BadSamplePoints(_))
        ));
        assert!(matches!(
            sample_basis(&r, &[0.3, 0.2, 4.0], &policy()),
            Err(CurveError::BadSamplePoints(_))
        ));
        let s = staple();
        assert!(matches!(
            sample_basis(&s, &default_sample_points(6), &policy()),
            Err(CurveError::RankDeficient { .. })
        ));
    }

    #[test]
    fn multiplicities() {
        let r = regular_polygon(5);
        for k in 1..=10 {
            assert_eq!(multiplicity(&r, k).unwrap(), 0);
        }
        // J_11 holds both 4 and 12, each pointing down like v_11
        assert_eq!(multiplicity(&staple(), 11).unwrap(), 2);
    }

    #[test]
    fn multiplicity_is_the_vanishing_order_of_gamma_k() {
        for r in [staple(), regular_polygon(4)] {
            let polys = gamma_polynomials(&r);
            for k in 1..=r.size() {
                let m = multiplicity(&r, k).unwrap();
                let v = r.v(k);
                for i in 0..m {
                    assert!(polynomial_derivative(&polys[k - 1], i, v).norm() < 1e-12);
                }
                assert!(polynomial_derivative(&polys[k - 1], m, v).norm() > 1e-6);
            }
        }
    }

    #[test]
    fn support_examples_and_equivalence() {
        let m = Matching::from_tau(vec![3, 4, 1, 2]).unwrap();
        assert_eq!(support(&m, 1).unwrap().members(), vec![1, 2, 3]);
        assert_eq!(support(&m, 3).unwrap().members(), vec![3, 4, 1]);
        assert!(support(&m, 9).is_err());
    }

    #[test]
    fn derivative_basis_matches_fourier_span_on_square() {
        let r = regular_polygon(2);
        let d = derivative_basis(&r, 1, &policy()).unwrap();
        let polys = gamma_polynomials(&r);
        // row for j = 1 is Γ(v_1) on {1, 2, 3}
        let g1 = gamma_complex_from_polynomials(&polys, r.v(1));
        assert!((d.rows()[(0, 0)] - g1[0]).norm() < 1e-15);
        assert_eq!(d.rows()[(0, 3)], c(0.0, 0.0));
        let f = fourier_matrix(&r).entries;
        assert!(span_residual(d.rows(), &f, &policy()).unwrap() < 1e-10);
    }

    #[test]
    fn staple_derivative_basis_has_full_rank() {
        let s = staple();
        for k in 1..=12 {
            assert_eq!(derivative_basis(&s, k, &policy()).unwrap().n(), 6);
        }
    }

    #[test]
    fn derivative_basis_is_triangular_on_its_index_columns() {
        for r in [regular_polygon(3), staple(), regular_polygon(6)] {
            for k in 1..=r.size() {
                let idx = derivative_indices(&r, k).unwrap();
                let d = derivative_basis(&r, k, &policy()).unwrap();
                let scale = d.rows().max_abs();
                for (a, _) in idx.iter().enumerate() {
                    assert!(d.rows()[(a, idx[a] - 1)].norm() > 1e-9 * scale);
                    for b in 0..a {
                        assert!(
                            d.rows()[(a, idx[b] - 1)].norm() <= 1e-12 * scale,
                            "entry below diagonal at ({a}, {b}) for k = {k}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn polynomial_derivative_of_monomials() {
        let coeffs = vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let x = c(2.0, 0.0);
        assert!((polynomial_derivative(&coeffs, 0, x) - c(8.0, 0.0)).norm() < 1e-14);
        assert!((polynomial_derivative(&coeffs, 1, x) - c(12.0, 0.0)).norm() < 1e-14);
        assert!((polynomial_derivative(&coeffs, 2, x) - c(12.0, 0.0)).norm() < 1e-14);
        assert!((polynomial_derivative(&coeffs, 3, x) - c(6.0, 0.0)).norm() < 1e-14);
        assert_eq!(polynomial_derivative(&coeffs, 4, x), c(0.0, 0.0));
    }
}
