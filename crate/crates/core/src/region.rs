//! Regions: a matching `τ` on `[2n]` plus a compatible angle sequence `θ`.
//!
//! Besides validation this module holds the affine extension
//! (`τ̃(k + 2n) = τ̃(k) + 2n`, `θ̃_{k+2n} = θ̃_k + π`), the index sets `J_k`,
//! direction classes, descents and the crossing-removal surgery `s_k R`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::TolerancePolicy;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("a matching needs an even, nonzero number of indices, got {0}")]
    OddSize(usize),
    #[error("index {index} is out of range 1..={size}")]
    IndexOutOfRange { index: i64, size: usize },
    #[error("index {0} appears more than once in the matching")]
    DuplicateIndex(usize),
    #[error("τ({0}) = {0} is a fixed-point; a matching must be fixed-point-free")]
    FixedPoint(usize),
    #[error("τ is not an involution: τ({k}) = {image} but τ({image}) = {back}")]
    NotInvolution { k: usize, image: usize, back: usize },
    #[error("expected {expected} angles, got {got}")]
    ThetaLength { expected: usize, got: usize },
    #[error("angle θ_{0} is not finite")]
    NonFiniteAngle(usize),
    #[error("θ_{closer} - θ_{opener} = {difference} but must equal π/2")]
    OppositeAngle {
        opener: usize,
        closer: usize,
        difference: f64,
    },
    #[error("crossing pair ({j}, {k}) violates θ_{j} < θ_{k} < θ_τ({j})")]
    Interleaving { j: usize, k: usize },
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("{0} is not a τ-descent")]
    NotADescent(usize),
    #[error("boundary vector {index} has length {length}, expected 1")]
    NotUnitVector { index: usize, length: f64 },
    #[error("boundary chain does not close: sum has length {0}")]
    ChainNotClosed(f64),
    #[error("direction class of index {0} has unequal numbers of opposite vectors")]
    UnpairedDirection(usize),
    #[error(
        "pairing is ambiguous for an alternating region (indices {0:?}); provide τ explicitly"
    )]
    AlternatingAmbiguous([usize; 4]),
    #[error("the supplied matching pairs {0} and {1}, whose vectors are not opposite")]
    VectorsNotOpposite(usize, usize),
    #[error("no consistent angle lift found; provide θ explicitly")]
    LiftFailed,
}

/// Fixed-point-free involution on `[2n]`, stored 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    n: usize,
    tau: Vec<usize>,
}

/// Cyclic interval `{start, start+1, …, end}` in `[size]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CyclicInterval {
    pub start: usize,
    pub end: usize,
    pub size: usize,
}

impl CyclicInterval {
    pub fn len(&self) -> usize {
        (self.end + self.size - self.start) % self.size + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        (k + self.size - self.start) % self.size < self.len()
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| (self.start - 1 + i) % self.size + 1)
            .collect()
    }
}

/// Builds a matching from its pairs.
pub fn new_matching(pairs: &[(usize, usize)]) -> Result<Matching, RegionError> {
    Matching::from_pairs(pairs)
}

impl Matching {
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self, RegionError> {
        let size = 2 * pairs.len();
        if size == 0 {
            return Err(RegionError::OddSize(0));
        }
        let mut tau = vec![0usize; size];
        for &(a, b) in pairs {
            if a == b {
                return Err(RegionError::FixedPoint(a));
            }
            for x in [a, b] {
                if x == 0 || x > size {
                    return Err(RegionError::IndexOutOfRange {
                        index: x as i64,
                        size,
                    });
                }
                if tau[x - 1] != 0 {
                    return Err(RegionError::DuplicateIndex(x));
                }
            }
            tau[a - 1] = b;
            tau[b - 1] = a;
        }
        Ok(Self {
            n: pairs.len(),
            tau,
        })
    }

    /// Builds a matching from the 1-based image list `[τ(1), …, τ(2n)]`.
    pub fn from_tau(tau: Vec<usize>) -> Result<Self, RegionError> {
        let size = tau.len();
        if size == 0 || size % 2 == 1 {
            return Err(RegionError::OddSize(size));
        }
        for (i, &t) in tau.iter().enumerate() {
            let k = i + 1;
            if t == 0 || t > size {
                return Err(RegionError::IndexOutOfRange {
                    index: t as i64,
                    size,
                });
            }
            if t == k {
                return Err(RegionError::FixedPoint(k));
            }
        }
        for (i, &t) in tau.iter().enumerate() {
            let back = tau[t - 1];
            if back != i + 1 {
                return Err(RegionError::NotInvolution {
                    k: i + 1,
                    image: t,
                    back,
                });
            }
        }
        Ok(Self { n: size / 2, tau })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `2n`.
    pub fn size(&self) -> usize {
        2 * self.n
    }

    /// `τ(k)` for `k ∈ [2n]`.
    pub fn tau(&self, k: usize) -> usize {
        self.tau[k - 1]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.tau
    }

    /// Pairs `(a, τ(a))` with `a < τ(a)`, ordered by `a`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (1..=self.size())
            .filter(|&a| a < self.tau(a))
            .map(|a| (a, self.tau(a)))
            .collect()
    }

    pub fn check_index(&self, k: usize) -> Result<(), RegionError> {
        if k == 0 || k > self.size() {
            Err(RegionError::IndexOutOfRange {
                index: k as i64,
                size: self.size(),
            })
        } else {
            Ok(())
        }
    }

    /// `#{(j, k) : j < k < τ(j) < τ(k)}`.
    pub fn crossing_number(&self) -> usize {
        let pairs = self.pairs();
        let mut count = 0;
        for (i, &(_, tj)) in pairs.iter().enumerate() {
            for &(k, tk) in &pairs[i + 1..] {
                if k < tj && tj < tk {
                    count += 1;
                }
            }
        }
        count
    }

    /// Top-level blocks of the matching as cyclic intervals.
    ///
    /// The cut after position `p` is labelled by the set of chords straddling
    /// it; two cuts with equal labels bound a `τ`-closed interval. The blocks
    /// are read off the largest class of equal cuts, preferring the class that
    /// contains the cut after `2n`.
    pub fn connected_components(&self) -> Vec<CyclicInterval> {
        let size = self.size();
        let pairs = self.pairs();
        let signature = |p: usize| -> Vec<(usize, usize)> {
            pairs
                .iter()
                .copied()
                .filter(|&(a, b)| a <= p && p < b)
                .collect()
        };
        let sigs: Vec<Vec<(usize, usize)>> = (1..=size).map(signature).collect();
        let mut best: Vec<usize> = Vec::new();
        for p in (1..=size).rev() {
            let class: Vec<usize> = (1..=size).filter(|&q| sigs[q - 1] == sigs[p - 1]).collect();
            if class.len() > best.len() {
                best = class;
            }
        }
        if best.len() <= 1 {
            return vec![CyclicInterval {
                start: 1,
                end: size,
                size,
            }];
        }
        let mut out: Vec<CyclicInterval> = (0..best.len())
            .map(|i| {
                let from = best[i];
                let to = best[(i + 1) % best.len()];
                CyclicInterval {
                    start: from % size + 1,
                    end: to,
                    size,
                }
            })
            .collect();
        out.sort_by_key(|c| c.start);
        out
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() == 1
    }

    /// Affine extension `τ̃` on all integers.
    pub fn affine_tau(&self, k: i64) -> i64 {
        let size = self.size() as i64;
        let k0 = (k - 1).rem_euclid(size) + 1;
        let shift = k - k0;
        let t = self.tau(k0 as usize) as i64;
        let t = if t > k0 { t } else { t + size };
        t + shift
    }

    /// `supp_τ(k)`, the cyclic interval from `k` to `τ(k)`.
    pub fn support(&self, k: usize) -> CyclicInterval {
        CyclicInterval {
            start: k,
            end: self.tau(k),
            size: self.size(),
        }
    }

    /// `J_k`: indices `j` such that `(k, j, τ(j))` is a counterclockwise
    /// triple, in increasing order.
    pub fn j_set(&self, k: usize) -> Vec<usize> {
        let size = self.size();
        let tk = self.tau(k);
        let pos = |x: usize| (x + size - k) % size;
        (1..=size)
            .filter(|&j| j != k && j != tk && pos(j) < pos(self.tau(j)))
            .collect()
    }

    /// `J̃_k = {τ̃(j) : k − 2n < j < k, τ̃(j) > k}`, increasing, for any integer `k`.
    pub fn affine_j_set(&self, k: i64) -> Vec<i64> {
        let size = self.size() as i64;
        let mut out: Vec<i64> = (k - size + 1..k)
            .map(|j| self.affine_tau(j))
            .filter(|&t| t > k)
            .collect();
        out.sort_unstable();
        out
    }

    /// Labels shifted by one: `τ'(k) = τ(k − 1) + 1`.
    pub fn rotated(&self) -> Self {
        let size = self.size();
        let wrap = |x: usize| (x - 1) % size + 1;
        let tau = (1..=size)
            .map(|k| {
                let prev = if k == 1 { size } else { k - 1 };
                wrap(self.tau(prev) + 1)
            })
            .collect();
        Self { n: self.n, tau }
    }
}

/// Free-function form of [`Matching::crossing_number`].
pub fn crossing_number(m: &Matching) -> usize {
    m.crossing_number()
}

/// Indices `k` with `v_k = ±v` for one direction `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionClass {
    pub representative: Complex64,
    pub members: Vec<usize>,
    /// `+1` where `v_k = v`, `-1` where `v_k = -v`, aligned with `members`.
    pub signs: Vec<i8>,
}

impl DirectionClass {
    /// Maximal runs of equal sign in index order, each as a list of members.
    pub fn runs(&self) -> Vec<Vec<usize>> {
        let mut runs: Vec<Vec<usize>> = Vec::new();
        let mut last = 0i8;
        for (&k, &s) in self.members.iter().zip(&self.signs) {
            if s != last {
                runs.push(Vec::new());
                last = s;
            }
            runs.last_mut().expect("pushed above").push(k);
        }
        runs
    }

    /// First index of each of the first four runs, when there are four.
    pub fn alternating_witness(&self) -> Option<[usize; 4]> {
        let runs = self.runs();
        (runs.len() >= 4).then(|| [runs[0][0], runs[1][0], runs[2][0], runs[3][0]])
    }
}

/// Result of the alternating test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternation {
    NonAlternating,
    /// `(a, b, c, d)` with `a < b < c < d` and `v_a = −v_b = v_c = −v_d`.
    Alternating([usize; 4]),
}

impl Alternation {
    pub fn is_alternating(&self) -> bool {
        matches!(self, Alternation::Alternating(_))
    }
}

/// A matching with a compatible angle sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    matching: Matching,
    theta: Vec<f64>,
    tolerance: f64,
}

impl Region {
    /// Validates `θ` against `τ` with the default angle tolerance.
    pub fn new(matching: Matching, theta: Vec<f64>) -> Result<Self, RegionError> {
        Self::with_tolerance(matching, theta, TolerancePolicy::default().angle_eps)
    }

    pub fn with_tolerance(
        matching: Matching,
        theta: Vec<f64>,
        tolerance: f64,
    ) -> Result<Self, RegionError> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(RegionError::BadTolerance(tolerance));
        }
        let size = matching.size();
        if theta.len() != size {
            return Err(RegionError::ThetaLength {
                expected: size,
                got: theta.len(),
            });
        }
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(RegionError::NonFiniteAngle(i + 1));
        }
        for (a, b) in matching.pairs() {
            let difference = theta[b - 1] - theta[a - 1];
            if (difference - FRAC_PI_2).abs() > tolerance {
                return Err(RegionError::OppositeAngle {
                    opener: a,
                    closer: b,
                    difference,
                });
            }
        }
        // With the opposite-angle rule in place the chain θ_j < θ_k < θ_τ(j) < θ_τ(k)
        // reduces to 0 < θ_k − θ_j < π/2.
        let pairs = matching.pairs();
        for (i, &(j, tj)) in pairs.iter().enumerate() {
            for &(k, tk) in &pairs[i + 1..] {
                if k < tj && tj < tk {
                    let d = theta[k - 1] - theta[j - 1];
                    if !(d > tolerance && d < FRAC_PI_2 - tolerance) {
                        return Err(RegionError::Interleaving { j, k });
                    }
                }
            }
        }
        Ok(Self {
            matching,
            theta,
            tolerance,
        })
    }

    /// Convenience constructor from `[τ(1), …]` and `θ`.
    pub fn from_parts(tau: Vec<usize>, theta: Vec<f64>) -> Result<Self, RegionError> {
        Self::new(Matching::from_tau(tau)?, theta)
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn n(&self) -> usize {
        self.matching.n
    }

    pub fn size(&self) -> usize {
        self.matching.size()
    }

    pub fn tau(&self, k: usize) -> usize {
        self.matching.tau(k)
    }

    /// `θ̃_k` for any integer `k`.
    pub fn affine_theta(&self, k: i64) -> f64 {
        let size = self.size() as i64;
        let k0 = (k - 1).rem_euclid(size) + 1;
        let turns = (k - k0) / size;
        self.theta[k0 as usize - 1] + PI * turns as f64
    }

    /// `v_k = exp(2iθ_k)`.
    pub fn v(&self, k: usize) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * self.theta[k - 1])
    }

    /// `T̃_k = exp(iθ̃_k)`.
    pub fn affine_t(&self, k: i64) -> Complex64 {
        Complex64::from_polar(1.0, self.affine_theta(k))
    }

    pub fn boundary_vectors(&self) -> Vec<[f64; 2]> {
        (1..=self.size())
            .map(|k| {
                let v = self.v(k);
                [v.re, v.im]
            })
            .collect()
    }

    pub fn j_set(&self, k: usize) -> Result<Vec<usize>, RegionError> {
        self.matching.check_index(k)?;
        Ok(self.matching.j_set(k))
    }

    pub fn affine_j_set(&self, k: i64) -> Vec<i64> {
        self.matching.affine_j_set(k)
    }

    /// Signed offset of `θ_a − θ_b` in units of `π/2`, if it is an integer
    /// within tolerance.
    fn quarter_turns(&self, a: usize, b: usize) -> Option<i64> {
        let d = (self.theta[a - 1] - self.theta[b - 1]) / FRAC_PI_2;
        let r = d.round();
        ((d - r).abs() * FRAC_PI_2 <= self.tolerance).then_some(r as i64)
    }

    /// `v_a = v_b` within tolerance.
    pub fn same_direction(&self, a: usize, b: usize) -> bool {
        matches!(self.quarter_turns(a, b), Some(q) if q.rem_euclid(2) == 0)
    }

    /// `v_a = −v_b` within tolerance.
    pub fn opposite_direction(&self, a: usize, b: usize) -> bool {
        matches!(self.quarter_turns(a, b), Some(q) if q.rem_euclid(2) == 1)
    }

    /// Partition of `[2n]` into classes `L_v = {k : v_k = ±v}`.
    pub fn direction_classes(&self) -> Vec<DirectionClass> {
        let mut classes: Vec<(usize, DirectionClass)> = Vec::new();
        for k in 1..=self.size() {
            let found = classes
                .iter_mut()
                .find_map(|(rep, class)| self.quarter_turns(k, *rep).map(|q| (q, class)));
            match found {
                Some((q, class)) => {
                    class.members.push(k);
                    class.signs.push(if q.rem_euclid(2) == 0 { 1 } else { -1 });
                }
                None => classes.push((
                    k,
                    DirectionClass {
                        representative: self.v(k),
                        members: vec![k],
                        signs: vec![1],
                    },
                )),
            }
        }
        classes.into_iter().map(|(_, c)| c).collect()
    }

    /// Alternating test with a witness.
    pub fn alternation(&self) -> Alternation {
        self.direction_classes()
            .iter()
            .filter_map(DirectionClass::alternating_witness)
            .min()
            .map_or(Alternation::NonAlternating, Alternation::Alternating)
    }

    pub fn is_alternating(&self) -> bool {
        self.alternation().is_alternating()
    }

    /// `τ`-descents: `k ∈ [2n]` with `k + 1 < τ̃(k) < τ̃(k + 1)`.
    pub fn descents(&self) -> Vec<usize> {
        (1..=self.size())
            .filter(|&k| {
                let k = k as i64;
                let a = self.matching.affine_tau(k);
                let b = self.matching.affine_tau(k + 1);
                k + 1 < a && a < b
            })
            .collect()
    }

    /// The region `s_k R` with the crossing at descent `k` removed.
    pub fn remove_crossing(&self, k: usize) -> Result<Region, RegionError> {
        self.matching.check_index(k)?;
        if !self.descents().contains(&k) {
            return Err(RegionError::NotADescent(k));
        }
        let size = self.size();
        let s = size as i64;
        let reduce = |x: i64| ((x - 1).rem_euclid(s) + 1) as usize;
        let ki = k as i64;
        let a = self.matching.affine_tau(ki);
        let b = self.matching.affine_tau(ki + 1);
        let mut tau = self.matching.tau.clone();
        for (from, to) in [(ki, b), (ki + 1, a), (a, ki + 1 + s), (b, ki + s)] {
            tau[reduce(from) - 1] = reduce(to);
        }
        let mut theta = self.theta.clone();
        // θ̃'_k = θ̃_{k+1} and θ̃'_{k+1} = θ̃_k, written back through the affine shift.
        let new_k = self.affine_theta(ki + 1);
        let new_k1 = self.affine_theta(ki);
        let back = |idx: i64, value: f64| value - PI * ((idx - reduce(idx) as i64) / s) as f64;
        theta[reduce(ki) - 1] = back(ki, new_k);
        theta[reduce(ki + 1) - 1] = back(ki + 1, new_k1);
        Region::with_tolerance(Matching::from_tau(tau)?, theta, self.tolerance)
    }

    /// The same region with labels shifted by one: `θ'_1 = θ_{2n} − π`,
    /// `θ'_k = θ_{k−1}` otherwise.
    pub fn rotate_labels(&self) -> Result<Region, RegionError> {
        let size = self.size();
        let mut theta = Vec::with_capacity(size);
        theta.push(self.theta[size - 1] - PI);
        theta.extend_from_slice(&self.theta[..size - 1]);
        Region::with_tolerance(self.matching.rotated(), theta, self.tolerance)
    }

    /// Same data with another angle tolerance, revalidated.
    pub fn retolerance(&self, tolerance: f64) -> Result<Region, RegionError> {
        Region::with_tolerance(self.matching.clone(), self.theta.clone(), tolerance)
    }
}

/// Regular `2n`-gon: `θ_k = (k − 1)π/(2n)`, `τ(k) = k + n mod 2n`.
///
/// Panics if `n == 0`.
pub fn regular_polygon(n: usize) -> Region {
    assert!(n >= 1, "regular_polygon needs n >= 1");
    let size = 2 * n;
    let tau = (1..=size).map(|k| (k + n - 1) % size + 1).collect();
    let theta = (0..size).map(|i| i as f64 * PI / size as f64).collect();
    Region::from_parts(tau, theta).expect("regular polygon is a valid region")
}

/// The 3x2 rectangle with the bottom-centre unit square removed.
///
/// Boundary directions `r,u,r,d,r,u,u,l,l,l,d,d`; alternating.
pub fn staple() -> Region {
    let tau = vec![10, 12, 9, 6, 8, 4, 11, 5, 3, 1, 7, 2];
    let q = FRAC_PI_4;
    let theta = vec![
        0.0,
        q,
        0.0,
        -q,
        0.0,
        q,
        q,
        2.0 * q,
        2.0 * q,
        2.0 * q,
        3.0 * q,
        3.0 * q,
    ];
    Region::from_parts(tau, theta).expect("staple is a valid region")
}

/// Reconstructs a region from its boundary vectors.
///
/// `τ` is recovered by pairing opposite vectors within each direction class
/// without crossings, which is unique exactly when the class has no `+−+−`
/// pattern; pass `tau` to skip this step. `θ` is lifted from `arg(v_k)/2` by a
/// bounded depth-first search over the `π` ambiguity.
pub fn from_boundary_vectors(
    vs: &[[f64; 2]],
    tau: Option<Matching>,
    policy: &TolerancePolicy,
) -> Result<Region, RegionError> {
    let size = vs.len();
    if size == 0 || size % 2 == 1 {
        return Err(RegionError::OddSize(size));
    }
    let eps = policy.angle_eps;
    for (i, v) in vs.iter().enumerate() {
        let length = v[0].hypot(v[1]);
        if (length - 1.0).abs() > eps {
            return Err(RegionError::NotUnitVector {
                index: i + 1,
                length,
            });
        }
    }
    let sum = vs
        .iter()
        .fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
    let closure = sum[0].hypot(sum[1]);
    if closure > eps * size as f64 {
        return Err(RegionError::ChainNotClosed(closure));
    }
    // base angles in [0, π)
    let base: Vec<f64> = vs
        .iter()
        .map(|v| (v[1].atan2(v[0]) / 2.0).rem_euclid(PI))
        .collect();
    // A throwaway region-like view for direction classes: θ = base works
    // since classes only look at θ modulo π/2.
    let probe = DirectionProbe { theta: &base, eps };

    let matching = match tau {
        Some(m) => {
            if m.size() != size {
                return Err(RegionError::ThetaLength {
                    expected: m.size(),
                    got: size,
                });
            }
            for (a, b) in m.pairs() {
                if probe
                    .quarter_turns(a, b)
                    .is_none_or(|q| q.rem_euclid(2) != 1)
                {
                    return Err(RegionError::VectorsNotOpposite(a, b));
                }
            }
            m
        }
        None => pair_by_direction(&probe, size)?,
    };

    let theta = lift_theta(&matching, &base, eps).ok_or(RegionError::LiftFailed)?;
    Region::with_tolerance(matching, theta, eps)
}

struct DirectionProbe<'a> {
    theta: &'a [f64],
    eps: f64,
}

impl DirectionProbe<'_> {
    fn quarter_turns(&self, a: usize, b: usize) -> Option<i64> {
        let d = (self.theta[a - 1] - self.theta[b - 1]) / FRAC_PI_2;
        let r = d.round();
        ((d - r).abs() * FRAC_PI_2 <= self.eps).then_some(r as i64)
    }
}

fn pair_by_direction(probe: &DirectionProbe<'_>, size: usize) -> Result<Matching, RegionError> {
    let mut assigned = vec![false; size];
    let mut pairs = Vec::with_capacity(size / 2);
    for start in 1..=size {
        if assigned[start - 1] {
            continue;
        }
        let mut members = Vec::new();
        let mut signs = Vec::new();
        for k in start..=size {
            if assigned[k - 1] {
                continue;
            }
            if let Some(q) = probe.quarter_turns(k, start) {
                assigned[k - 1] = true;
                members.push(k);
                signs.push(if q.rem_euclid(2) == 0 { 1i8 } else { -1 });
            }
        }
        let class = DirectionClass {
            representative: Complex64::from_polar(1.0, 2.0 * probe.theta[start - 1]),
            members,
            signs,
        };
        if let Some(w) = class.alternating_witness() {
            return Err(RegionError::AlternatingAmbiguous(w));
        }
        let mut stack: Vec<(usize, i8)> = Vec::new();
        for (&k, &s) in class.members.iter().zip(&class.signs) {
            match stack.last() {
                Some(&(top, ts)) if ts != s => {
                    stack.pop();
                    pairs.push((top, k));
                }
                _ => stack.push((k, s)),
            }
        }
        if !stack.is_empty() {
            return Err(RegionError::UnpairedDirection(start));
        }
    }
    Matching::from_pairs(&pairs)
}

/// Depth-first lift of the opener angles; closers follow by `+π/2`.
fn lift_theta(m: &Matching, base: &[f64], eps: f64) -> Option<Vec<f64>> {
    const BUDGET: usize = 100_000;
    let openers: Vec<(usize, usize)> = m.pairs();
    let crosses = |a: (usize, usize), b: (usize, usize)| {
        let (x, y) = if a.0 < b.0 { (a, b) } else { (b, a) };
        y.0 < x.1 && x.1 < y.1
    };
    // an opener's base angle must be shifted so the closer lands on base + π/2 mod π;
    // both are already consistent because the vectors are opposite.
    let mut chosen: Vec<f64> = Vec::with_capacity(openers.len());
    let mut steps = 0usize;

    fn candidates(b: f64, anchor: f64) -> [f64; 4] {
        // values congruent to b mod π near the anchor window [anchor - π, anchor + π)
        let m = ((anchor - b) / PI).floor();
        [
            b + (m - 1.0) * PI,
            b + m * PI,
            b + (m + 1.0) * PI,
            b + (m + 2.0) * PI,
        ]
    }

    fn go(
        idx: usize,
        openers: &[(usize, usize)],
        base: &[f64],
        eps: f64,
        chosen: &mut Vec<f64>,
        steps: &mut usize,
        crosses: &dyn Fn((usize, usize), (usize, usize)) -> bool,
    ) -> bool {
        if idx == openers.len() {
            return true;
        }
        *steps += 1;
        if *steps > BUDGET {
            return false;
        }
        let me = openers[idx];
        let b = base[me.0 - 1];
        let anchor = chosen.first().copied().unwrap_or(b);
        let cands: Vec<f64> = if idx == 0 {
            vec![b]
        } else {
            candidates(b, anchor).to_vec()
        };
        for c in cands {
            let ok = openers[..idx]
                .iter()
                .zip(chosen.iter())
                .all(|(&other, &t)| {
                    if !crosses(other, me) {
                        return true;
                    }
                    // other.0 < me.0 always since openers are sorted
                    let d = c - t;
                    d > eps && d < FRAC_PI_2 - eps
                });
            if ok {
                chosen.push(c);
                if go(idx + 1, openers, base, eps, chosen, steps, crosses) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }

    if !go(0, &openers, base, eps, &mut chosen, &mut steps, &crosses) {
        return None;
    }
    let mut theta = vec![0.0; m.size()];
    for (&(a, b), &t) in openers.iter().zip(&chosen) {
        theta[a - 1] = t;
        theta[b - 1] = t + FRAC_PI_2;
    }
    Some(theta)
}
