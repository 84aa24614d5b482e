//! Ground truth by brute force.
//!
//! A region's matching is realised by straight chords in the unit disk, the
//! complement is checkerboard coloured, black faces become Ising vertices and
//! every chord crossing becomes an edge with weight `cot(θ_e/2)`. Boundary
//! correlations are then summed over all spin configurations.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::correlate::{CorrelateError, CorrelationMatrix};
use crate::exec::Execution;
use crate::numerics::{RealMatrix, TolerancePolicy};
use crate::region::{regular_polygon, Matching, Region};

/// Largest number of Ising vertices accepted by [`exact_correlations`].
pub const MAX_VERTICES: usize = 26;
/// Largest endpoint perturbation, in radians.
pub const MAX_JITTER: f64 = 0.01;
const MAX_ATTEMPTS: usize = 100;
/// Configurations per enumeration chunk; each chunk restarts from an exact
/// weight so multiplicative drift stays bounded.
const CHUNK: usize = 1 << 12;
const GEOMETRY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("no generic chord placement found after {0} attempts")]
    GenericityFailure(usize),
    #[error("face colouring is inconsistent: {0}")]
    ColoringInconsistent(String),
    #[error("edge angle {theta} at crossing of chords {j} and {k} is outside (0, π/2)")]
    WeightOutOfRange { j: usize, k: usize, theta: f64 },
    #[error("graph has {vertices} vertices; enumeration is limited to {limit}")]
    TooLarge { vertices: usize, limit: usize },
    #[error("arrangement realises a different matching than the region")]
    MatchingMismatch,
    #[error("placement spread {spread:e} exceeds {tolerance:e}")]
    SpreadTooLarge { spread: f64, tolerance: f64 },
    #[error("at least one placement is required")]
    NoPlacements,
    #[error("edge-weight anchor failed: square weight {got}, expected cot(π/8)")]
    AnchorFailed { got: f64 },
    #[error(transparent)]
    Correlate(#[from] CorrelateError),
}

type Point = [f64; 2];

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Two chords meeting in the open disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    /// Openers `j < k` of the chords `(j, τ(j))` and `(k, τ(k))`.
    pub chords: (usize, usize),
    pub point: Point,
}

/// Straight-chord realisation of a matching.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    matching: Matching,
    angles: Vec<f64>,
    endpoints: Vec<Point>,
    crossings: Vec<Crossing>,
    attempts: usize,
}

impl Arrangement {
    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn endpoints(&self) -> &[Point] {
        &self.endpoints
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn crossings(&self) -> &[Crossing] {
        &self.crossings
    }

    /// Number of jitter draws used.
    pub fn attempts(&self) -> usize {
        self.attempts
    }

    fn endpoint(&self, k: usize) -> Point {
        self.endpoints[k - 1]
    }
}

/// Places `d_k` at angle `2π(k − 1)/(2n)` plus seeded jitter and joins
/// `d_k` to `d_τ(k)` by straight chords, retrying until the picture is
/// generic.
pub fn build_arrangement(m: &Matching, seed: u64) -> Result<Arrangement, OracleError> {
    let size = m.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_ATTEMPTS {
        let angles: Vec<f64> = (0..size)
            .map(|i| 2.0 * PI * i as f64 / size as f64 + rng.gen_range(-MAX_JITTER..=MAX_JITTER))
            .collect();
        if let Some(crossings) = generic_crossings(m, &angles) {
            let endpoints = angles.iter().map(|a| [a.cos(), a.sin()]).collect();
            return Ok(Arrangement {
                matching: m.clone(),
                angles,
                endpoints,
                crossings,
                attempts: attempt,
            });
        }
    }
    Err(OracleError::GenericityFailure(MAX_ATTEMPTS))
}

fn generic_crossings(m: &Matching, angles: &[f64]) -> Option<Vec<Crossing>> {
    let pts: Vec<Point> = angles.iter().map(|a| [a.cos(), a.sin()]).collect();
    let pairs = m.pairs();
    let mut crossings = Vec::new();
    for (i, &(j, tj)) in pairs.iter().enumerate() {
        for &(k, tk) in &pairs[i + 1..] {
            let (p1, p2, q1, q2) = (pts[j - 1], pts[tj - 1], pts[k - 1], pts[tk - 1]);
            let o = [
                orient(p1, p2, q1),
                orient(p1, p2, q2),
                orient(q1, q2, p1),
                orient(q1, q2, p2),
            ];
            if o.iter().any(|x| x.abs() < GEOMETRY_EPS) {
                return None;
            }
            if o[0] * o[1] < 0.0 && o[2] * o[3] < 0.0 {
                let s = o[2] / (o[2] - o[3]);
                let point = [p1[0] + s * (p2[0] - p1[0]), p1[1] + s * (p2[1] - p1[1])];
                crossings.push(Crossing {
                    chords: (j, k),
                    point,
                });
            }
        }
    }
    if crossings.len() != m.crossing_number() {
        return None;
    }
    for (i, a) in crossings.iter().enumerate() {
        for b in &crossings[i + 1..] {
            let d = (a.point[0] - b.point[0]).hypot(a.point[1] - b.point[1]);
            if d < GEOMETRY_EPS {
                return None;
            }
        }
    }
    Some(crossings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EdgeKind {
    Chord,
    /// Boundary arc from `d_k` to `d_{k+1}`.
    Arc(usize),
}

/// Half-edge model of the disk cut by the chords.
struct Subdivision {
    origin: Vec<usize>,
    kind: Vec<EdgeKind>,
    face: Vec<usize>,
    face_count: usize,
    /// Per vertex: outgoing half-edges sorted counterclockwise.
    outgoing: Vec<Vec<(f64, usize)>>,
    positions: Vec<Point>,
}

impl Subdivision {
    fn twin(h: usize) -> usize {
        h ^ 1
    }

    fn build(a: &Arrangement) -> Self {
        let size = a.matching.size();
        let mut positions: Vec<Point> = a.endpoints.clone();
        positions.extend(a.crossings.iter().map(|c| c.point));
        let vcount = positions.len();

        let mut origin = Vec::new();
        let mut kind = Vec::new();
        let mut dirs: Vec<f64> = Vec::new();
        let mut add = |u: usize, v: usize, k: EdgeKind, du: f64, dv: f64| {
            origin.extend([u, v]);
            kind.extend([k, k]);
            dirs.extend([du, dv]);
        };
        let direction = |u: Point, v: Point| (v[1] - u[1]).atan2(v[0] - u[0]);

        for (a_idx, b_idx) in a.matching.pairs() {
            let (p, q) = (a.endpoint(a_idx), a.endpoint(b_idx));
            let len2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            let mut stops: Vec<(f64, usize)> = vec![(0.0, a_idx - 1), (1.0, b_idx - 1)];
            for (ci, c) in a.crossings.iter().enumerate() {
                let on_chord = [c.chords.0, c.chords.1].contains(&a_idx);
                if on_chord {
                    let t = ((c.point[0] - p[0]) * (q[0] - p[0])
                        + (c.point[1] - p[1]) * (q[1] - p[1]))
                        / len2;
                    stops.push((t, size + ci));
                }
            }
            stops.sort_by(|x, y| x.0.total_cmp(&y.0));
            for w in stops.windows(2) {
                let (u, v) = (w[0].1, w[1].1);
                let d = direction(positions[u], positions[v]);
                add(u, v, EdgeKind::Chord, d, d + PI);
            }
        }
        for k in 1..=size {
            let next = k % size + 1;
            let (pk, pn) = (a.angles[k - 1], a.angles[next - 1]);
            add(
                k - 1,
                next - 1,
                EdgeKind::Arc(k),
                pk + FRAC_PI_2,
                pn - FRAC_PI_2,
            );
        }

        let mut outgoing: Vec<Vec<(f64, usize)>> = vec![Vec::new(); vcount];
        for (h, &u) in origin.iter().enumerate() {
            outgoing[u].push((dirs[h].rem_euclid(2.0 * PI), h));
        }
        for list in &mut outgoing {
            list.sort_by(|x, y| x.0.total_cmp(&y.0));
        }
        let hcount = origin.len();
        let mut slot = vec![0usize; hcount];
        for list in &outgoing {
            for (i, &(_, h)) in list.iter().enumerate() {
                slot[h] = i;
            }
        }
        // next(h): the outgoing half-edge just clockwise of twin(h) at its origin
        let next = |h: usize| {
            let t = Self::twin(h);
            let list = &outgoing[origin[t]];
            let i = slot[t];
            list[(i + list.len() - 1) % list.len()].1
        };
        let mut face = vec![usize::MAX; hcount];
        let mut face_count = 0;
        for start in 0..hcount {
            if face[start] != usize::MAX {
                continue;
            }
            let mut h = start;
            while face[h] == usize::MAX {
                face[h] = face_count;
                h = next(h);
            }
            face_count += 1;
        }
        Self {
            origin,
            kind,
            face,
            face_count,
            outgoing,
            positions,
        }
    }

    /// Counterclockwise half-edge of arc `k`.
    fn arc(&self, k: usize) -> usize {
        self.kind
            .iter()
            .position(|&x| x == EdgeKind::Arc(k))
            .expect("every arc is present")
    }

    /// Half-edge leaving vertex `v` towards the point `target`.
    fn towards(&self, v: usize, target: Point) -> usize {
        let want = (target[1] - self.positions[v][1]).atan2(target[0] - self.positions[v][0]);
        self.outgoing[v]
            .iter()
            .filter(|&&(_, h)| self.kind[h] == EdgeKind::Chord)
            .min_by(|x, y| {
                let dx = angle_gap(x.0, want);
                let dy = angle_gap(y.0, want);
                dx.total_cmp(&dy)
            })
            .expect("crossing vertices have four chord half-edges")
            .1
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// One Ising edge, born at a chord crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingEdge {
    pub u: usize,
    pub v: usize,
    /// Half of the rhombus angle at the white vertex, in `(0, π/2)`.
    pub theta: f64,
    pub weight: f64,
    pub chords: (usize, usize),
}

/// Weighted graph on the black faces.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingGraph {
    n: usize,
    vertex_count: usize,
    edges: Vec<IsingEdge>,
    /// `labels[j − 1]` is the vertex carrying boundary spin `b_j`.
    labels: Vec<usize>,
}

impl IsingGraph {
    /// Assembles a graph directly; panics on out-of-range vertex ids.
    pub fn from_parts(
        n: usize,
        vertex_count: usize,
        edges: Vec<IsingEdge>,
        labels: Vec<usize>,
    ) -> Self {
        assert_eq!(labels.len(), n);
        assert!(labels.iter().all(|&v| v < vertex_count));
        assert!(edges
            .iter()
            .all(|e| e.u < vertex_count && e.v < vertex_count));
        Self {
            n,
            vertex_count,
            edges,
            labels,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[IsingEdge] {
        &self.edges
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Groups of boundary labels that share a vertex, each of size at least 2.
    pub fn contraction_classes(&self) -> Vec<Vec<usize>> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for v in 0..self.vertex_count {
            let members: Vec<usize> = (1..=self.n).filter(|&j| self.labels[j - 1] == v).collect();
            if members.len() > 1 {
                classes.push(members);
            }
        }
        classes
    }
}

/// Black-face graph of `a` weighted by the angles of `r`.
///
/// At a crossing of chords `j < k < τ(j) < τ(k)` the rays towards
/// `d_j, d_k, d_τ(j), d_τ(k)` appear in counterclockwise order. When the
/// sector between rays `j` and `k` is black the edge angle is `θ_k − θ_j`,
/// otherwise `θ_τ(j) − θ_k`; the two add up to `π/2`.
pub fn build_ising_graph(a: &Arrangement, r: &Region) -> Result<IsingGraph, OracleError> {
    if a.matching() != r.matching() {
        return Err(OracleError::MatchingMismatch);
    }
    let n = r.n();
    let size = r.size();
    let sub = Subdivision::build(a);

    let outer = sub.face[Subdivision::twin(sub.arc(1))];
    let mut color: Vec<Option<bool>> = vec![None; sub.face_count];
    let start = sub.face[sub.arc(1)];
    if start == outer {
        return Err(OracleError::ColoringInconsistent(
            "arc 1 bounds the outer face".into(),
        ));
    }
    color[start] = Some(true);
    let mut queue = std::collections::VecDeque::from([start]);
    // face -> chord half-edges on its boundary
    let mut by_face: Vec<Vec<usize>> = vec![Vec::new(); sub.face_count];
    for h in 0..sub.origin.len() {
        if sub.kind[h] == EdgeKind::Chord {
            by_face[sub.face[h]].push(h);
        }
    }
    while let Some(f) = queue.pop_front() {
        let c = color[f].expect("queued faces are coloured");
        for &h in &by_face[f] {
            let g = sub.face[Subdivision::twin(h)];
            match color[g] {
                None => {
                    color[g] = Some(!c);
                    queue.push_back(g);
                }
                Some(cg) if cg == c => {
                    return Err(OracleError::ColoringInconsistent(format!(
                        "faces {f} and {g} share a chord but have equal colours"
                    )))
                }
                _ => {}
            }
        }
    }
    if color
        .iter()
        .enumerate()
        .any(|(f, c)| f != outer && c.is_none())
    {
        return Err(OracleError::ColoringInconsistent(
            "unreached interior face".into(),
        ));
    }

    let black: Vec<usize> = (0..sub.face_count)
        .filter(|&f| color[f] == Some(true))
        .collect();
    let vertex_of = |f: usize| black.iter().position(|&b| b == f);

    let mut labels = Vec::with_capacity(n);
    for j in 1..=n {
        let f = sub.face[sub.arc(2 * j - 1)];
        labels.push(vertex_of(f).ok_or_else(|| {
            OracleError::ColoringInconsistent(format!("boundary face of b_{j} is white"))
        })?);
    }

    let theta = r.theta();
    let mut edges = Vec::with_capacity(a.crossings.len());
    for (ci, c) in a.crossings.iter().enumerate() {
        let (j, k) = c.chords;
        let (tj, tk) = (r.tau(j), r.tau(k));
        let v = size + ci;
        let rays: Vec<usize> = [j, k, tj, tk]
            .iter()
            .map(|&x| sub.towards(v, a.endpoint(x)))
            .collect();
        let ccw: Vec<usize> = sub.outgoing[v].iter().map(|&(_, h)| h).collect();
        let pos0 = ccw.iter().position(|&h| h == rays[0]).expect("ray present");
        let ordered = (0..4).all(|i| ccw[(pos0 + i) % 4] == rays[i]);
        if ccw.len() != 4 || !ordered {
            return Err(OracleError::ColoringInconsistent(format!(
                "rays at crossing of chords {j} and {k} are not in cyclic order"
            )));
        }
        let sector = |i: usize| sub.face[rays[i]];
        let (angle, f1, f2) = if color[sector(0)] == Some(true) {
            (theta[k - 1] - theta[j - 1], sector(0), sector(2))
        } else {
            (theta[tj - 1] - theta[k - 1], sector(1), sector(3))
        };
        if !(angle > 0.0 && angle < FRAC_PI_2) {
            return Err(OracleError::WeightOutOfRange { j, k, theta: angle });
        }
        let (u, w) = match (vertex_of(f1), vertex_of(f2)) {
            (Some(u), Some(w)) if u != w => (u, w),
            _ => {
                return Err(OracleError::ColoringInconsistent(format!(
                    "crossing of chords {j} and {k} does not join two black faces"
                )))
            }
        };
        edges.push(IsingEdge {
            u,
            v: w,
            theta: angle,
            weight: 1.0 / (angle / 2.0).tan(),
            chords: (j, k),
        });
    }
    Ok(IsingGraph {
        n,
        vertex_count: black.len(),
        edges,
        labels,
    })
}

struct Tally {
    z: f64,
    pairs: Vec<f64>,
}

fn adjacency(g: &IsingGraph) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); g.vertex_count];
    for e in &g.edges {
        adj[e.u].push((e.v, e.weight));
        adj[e.v].push((e.u, e.weight));
    }
    adj
}

/// Sums over the configurations with vertex 0 fixed to `+1`, in Gray-code
/// order, chunk by chunk.
fn enumerate(
    g: &IsingGraph,
    watch: &[(usize, usize)],
    exec: Execution,
) -> Result<Tally, OracleError> {
    let vcount = g.vertex_count;
    if vcount > MAX_VERTICES {
        return Err(OracleError::TooLarge {
            vertices: vcount,
            limit: MAX_VERTICES,
        });
    }
    let adj = adjacency(g);
    let total: usize = 1 << (vcount.max(1) - 1);
    let chunks = total.div_ceil(CHUNK);
    let run_chunk = |c: usize| -> Tally {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(total);
        let gray = lo ^ (lo >> 1);
        let mut spin: Vec<i8> = (0..vcount)
            .map(|v| {
                if v > 0 && (gray >> (v - 1)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        let mut w: f64 = g
            .edges
            .iter()
            .filter(|e| spin[e.u] == spin[e.v])
            .map(|e| e.weight)
            .product();
        let mut tally = Tally {
            z: 0.0,
            pairs: vec![0.0; watch.len()],
        };
        let record = |w: f64, spin: &[i8], tally: &mut Tally| {
            tally.z += w;
            for (acc, &(a, b)) in tally.pairs.iter_mut().zip(watch) {
                if spin[a] == spin[b] {
                    *acc += w;
                } else {
                    *acc -= w;
                }
            }
        };
        record(w, &spin, &mut tally);
        for i in lo + 1..hi {
            let v = i.trailing_zeros() as usize + 1;
            for &(u, x) in &adj[v] {
                if spin[u] == spin[v] {
                    w /= x;
                } else {
                    w *= x;
                }
            }
            spin[v] = -spin[v];
            record(w, &spin, &mut tally);
        }
        tally
    };
    let parts = exec.map_range(0..chunks, run_chunk);
    let mut out = Tally {
        z: 0.0,
        pairs: vec![0.0; watch.len()],
    };
    for p in parts {
        out.z += p.z;
        for (a, b) in out.pairs.iter_mut().zip(&p.pairs) {
            *a += b;
        }
    }
    Ok(out)
}

/// `Z = Σ_σ ∏_{e : σ_u = σ_v} x_e` over all `2^|V|` configurations.
pub fn partition_function(g: &IsingGraph, exec: Execution) -> Result<f64, OracleError> {
    Ok(2.0 * enumerate(g, &[], exec)?.z)
}

/// Boundary correlation matrix by exhaustive enumeration.
pub fn exact_correlations(
    g: &IsingGraph,
    exec: Execution,
) -> Result<CorrelationMatrix, OracleError> {
    let n = g.n;
    let mut watch: Vec<(usize, usize)> = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let pair = (g.labels[j], g.labels[k]);
            if pair.0 != pair.1 && !watch.contains(&pair) {
                watch.push(pair);
            }
        }
    }
    let tally = enumerate(g, &watch, exec)?;
    let mut m = RealMatrix::identity(n);
    for j in 0..n {
        for k in j + 1..n {
            let (a, b) = (g.labels[j], g.labels[k]);
            let value = if a == b {
                1.0
            } else {
                let idx = watch.iter().position(|&p| p == (a, b)).expect("watched");
                tally.pairs[idx] / tally.z
            };
            m[(j, k)] = value;
            m[(k, j)] = value;
        }
    }
    // enumeration is exact up to rounding, so symmetry and range hold tightly
    Ok(CorrelationMatrix::new(m, 1e-12)?)
}

/// Oracle output over several arrangements.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub mean: CorrelationMatrix,
    /// Largest entrywise range across placements.
    pub spread: f64,
    pub placements: Vec<CorrelationMatrix>,
    /// Edge count of each placement's graph.
    pub edge_counts: Vec<usize>,
}

/// Seed of placement `p` derived from a base seed.
pub fn placement_seed(seed: u64, p: usize) -> u64 {
    seed.wrapping_add((p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Checks once per process that the square yields a single edge with
/// weight `cot(π/8)`.
pub fn anchor_self_test() -> Result<(), OracleError> {
    static ANCHOR: OnceLock<Result<(), OracleError>> = OnceLock::new();
    ANCHOR
        .get_or_init(|| {
            let r = regular_polygon(2);
            let a = build_arrangement(r.matching(), 0)?;
            let g = build_ising_graph(&a, &r)?;
            let expected = 1.0 / FRAC_PI_8.tan();
            match g.edges() {
                [e] if (e.weight - expected).abs() < 1e-12 => Ok(()),
                [e] => Err(OracleError::AnchorFailed { got: e.weight }),
                _ => Err(OracleError::AnchorFailed { got: f64::NAN }),
            }
        })
        .clone()
}

/// Runs the oracle on `placements` independent jitters and averages.
pub fn oracle_correlations(
    r: &Region,
    placements: usize,
    seed: u64,
    policy: &TolerancePolicy,
    exec: Execution,
) -> Result<OracleReport, OracleError> {
    if placements == 0 {
        return Err(OracleError::NoPlacements);
    }
    anchor_self_test()?;
    let mut mats = Vec::with_capacity(placements);
    let mut edge_counts = Vec::with_capacity(placements);
    for p in 0..placements {
        let a = build_arrangement(r.matching(), placement_seed(seed, p))?;
        let g = build_ising_graph(&a, r)?;
        edge_counts.push(g.edges().len());
        mats.push(exact_correlations(&g, exec)?);
    }
    let n = r.n();
    let mut mean = RealMatrix::zeros(n, n);
    let mut spread: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let vals = mats.iter().map(|m| m.entries()[(i, j)]);
            let (lo, hi) = vals
                .clone()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                });
            spread = spread.max(hi - lo);
            mean[(i, j)] = vals.sum::<f64>() / placements as f64;
        }
    }
    if spread > policy.agreement_eps {
        return Err(OracleError::SpreadTooLarge {
            spread,
            tolerance: policy.agreement_eps,
        });
    }
    Ok(OracleReport {
        mean: CorrelationMatrix::new(mean, policy.agreement_eps)?,
        spread,
        placements: mats,
        edge_counts,
    })
}
