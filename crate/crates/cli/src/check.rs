//! The invariant suite behind `isocorr check`.

use std::f64::consts::PI;

use isocorr::correlate::{
    correlations, doubled_from_span, g_matrix, k_matrix, span_basis, BasisStrategy, CorrelateError,
    CorrelationMatrix,
};
use isocorr::curve::{gamma, CurveError};
use isocorr::numerics::RealMatrix;
use isocorr::oracle::{oracle_correlations, OracleError};
use isocorr::{Execution, Region, TolerancePolicy};

pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const BK_TOL: f64 = 1e-10;
pub const RECURSION_TOL: f64 = 1e-10;
pub const CHECK_POINTS: usize = 20;
pub const CHECK_PLACEMENTS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct Finding {
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

fn judge(name: &'static str, value: f64, tol: f64, what: &str) -> Finding {
    Finding {
        name,
        outcome: if value <= tol {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
        detail: format!("{what} {value:.3e} (tol {tol:.0e})"),
    }
}

fn failed(name: &'static str, detail: String) -> Finding {
    Finding {
        name,
        outcome: Outcome::Fail,
        detail,
    }
}

/// Deterministic parameters spread over `[0, 2π)` by the golden ratio.
fn points(count: usize, offset: usize) -> impl Iterator<Item = f64> {
    const PHI: f64 = 0.618_033_988_749_894_8;
    (offset..offset + count).map(|i| 2.0 * PI * ((i as f64 + 0.5) * PHI).fract())
}

fn orthogonality(r: &Region) -> Finding {
    let worst = points(CHECK_POINTS, 0)
        .zip(points(CHECK_POINTS, CHECK_POINTS))
        .map(|(s, t)| {
            let (a, b) = (gamma(r, s), gamma(r, t));
            let scale = norm(&a.coords) * norm(&b.coords);
            if scale > 0.0 {
                a.alternating_form(&b).abs() / scale
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    judge(
        "orthogonality",
        worst,
        ORTHOGONALITY_TOL,
        "max relative form",
    )
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn bk_identity(r: &Region, policy: &TolerancePolicy) -> Finding {
    let result =
        span_basis(r, &BasisStrategy::Auto, policy).and_then(|a| doubled_from_span(&a, policy));
    match result {
        Ok(b) => {
            let prod = b.entries().matmul(&k_matrix(r.n()));
            let dev = prod.max_abs_diff(&RealMatrix::identity(r.n()));
            judge("bk-identity", dev, BK_TOL, "max |B K - I|")
        }
        Err(e) => failed("bk-identity", e.to_string()),
    }
}

fn basis_equivalence(
    r: &Region,
    reference: &CorrelationMatrix,
    policy: &TolerancePolicy,
    tol: f64,
) -> Finding {
    let strategies = [
        ("fourier", BasisStrategy::Fourier),
        ("samples", BasisStrategy::Samples(None)),
        ("derivative", BasisStrategy::Derivative(1)),
        ("recursive", BasisStrategy::Recursive),
    ];
    let mut worst: f64 = 0.0;
    let mut used = Vec::new();
    for (label, s) in strategies {
        match correlations(r, &s, policy) {
            Ok(m) => {
                worst = worst.max(m.max_abs_diff(reference));
                used.push(label);
            }
            // Fourier and sample rows lose rank on alternating regions
            Err(CorrelateError::Curve(CurveError::RankDeficient { .. })) if r.is_alternating() => {}
            Err(e) => return failed("basis-equivalence", format!("{label}: {e}")),
        }
    }
    let mut f = judge("basis-equivalence", worst, tol, "max spread");
    f.detail.push_str(&format!(" over {}", used.join(", ")));
    f
}

fn recursion_identity(r: &Region) -> Finding {
    let descents = r.descents();
    let mut worst: f64 = 0.0;
    for &k in &descents {
        let (g, smaller) = match (g_matrix(r, k), r.remove_crossing(k)) {
            (Ok(g), Ok(s)) => (g.entries, s),
            (Err(e), _) => return failed("recursion-identity", e.to_string()),
            (_, Err(e)) => return failed("recursion-identity", e.to_string()),
        };
        for t in points(CHECK_POINTS, 2 * CHECK_POINTS) {
            let rhs = RealMatrix::from_rows(&[gamma(&smaller, t).coords]).matmul(&g);
            for (x, y) in gamma(r, t).coords.iter().zip(rhs.row(0)) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    let mut f = judge("recursion-identity", worst, RECURSION_TOL, "max deviation");
    f.detail
        .push_str(&format!(" over {} descents", descents.len()));
    f
}

fn oracle(
    r: &Region,
    reference: &CorrelationMatrix,
    seed: u64,
    policy: &TolerancePolicy,
    tol: f64,
    exec: Execution,
) -> Finding {
    let loose = TolerancePolicy {
        agreement_eps: f64::INFINITY,
        ..*policy
    };
    match oracle_correlations(r, CHECK_PLACEMENTS, seed, &loose, exec) {
        Ok(o) => {
            let diff = o.mean.max_abs_diff(reference);
            let worst = diff.max(o.spread);
            let mut f = judge("oracle", worst, tol, "max of difference and spread");
            f.detail.push_str(&format!(
                " (difference {diff:.3e}, spread {:.3e}, {} edges)",
                o.spread, o.edge_counts[0]
            ));
            f
        }
        Err(OracleError::TooLarge { vertices, limit }) => Finding {
            name: "oracle",
            outcome: Outcome::Skip,
            detail: format!("{vertices} vertices exceed the enumeration limit {limit}"),
        },
        Err(e) => failed("oracle", e.to_string()),
    }
}

/// Runs every invariant; a failure does not stop later checks. `tol`
/// bounds the cross-method comparisons.
pub fn run(
    r: &Region,
    seed: u64,
    policy: &TolerancePolicy,
    tol: f64,
    exec: Execution,
) -> Vec<Finding> {
    let mut out = vec![orthogonality(r), bk_identity(r, policy)];
    match correlations(r, &BasisStrategy::Auto, policy) {
        Ok(reference) => {
            out.push(basis_equivalence(r, &reference, policy, tol));
            out.push(recursion_identity(r));
            out.push(oracle(r, &reference, seed, policy, tol, exec));
        }
        Err(e) => out.push(failed("pipeline", e.to_string())),
    }
    out
}
