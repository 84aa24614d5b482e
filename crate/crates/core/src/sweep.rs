//! Exhaustive matchings and random valid shapes for property sweeps.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec::Execution;
use crate::region::{Matching, Region};

/// All `(2n − 1)!!` matchings on `[2n]`, in lexicographic order of `τ`.
pub fn all_matchings(n: usize) -> Vec<Matching> {
    fn go(tau: &mut Vec<usize>, out: &mut Vec<Matching>) {
        let Some(first) = tau.iter().position(|&t| t == 0) else {
            out.push(Matching::from_tau(tau.clone()).expect("complete pairing"));
            return;
        };
        for partner in first + 1..tau.len() {
            if tau[partner] == 0 {
                tau[first] = partner + 1;
                tau[partner] = first + 1;
                go(tau, out);
                tau[first] = 0;
                tau[partner] = 0;
            }
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        go(&mut vec![0; 2 * n], &mut out);
    }
    out
}

pub fn connected_matchings(n: usize) -> Vec<Matching> {
    all_matchings(n)
        .into_iter()
        .filter(Matching::is_connected)
        .collect()
}

/// A generic shape for `m`: opener angles drawn in `(0, π/2)`, sorted by
/// index and shifted by a random offset in `[0, π/2)`; closers sit `π/2`
/// higher. All directions are distinct, so the region is non-alternating.
pub fn random_shape<R: Rng>(m: &Matching, rng: &mut R) -> Region {
    let pairs = m.pairs();
    let mut draws: Vec<f64> = (0..pairs.len())
        .map(|_| rng.gen_range(0.02..FRAC_PI_2 - 0.02))
        .collect();
    draws.sort_by(f64::total_cmp);
    let offset = rng.gen_range(0.0..FRAC_PI_2);
    let mut theta = vec![0.0; m.size()];
    for (&(a, b), &d) in pairs.iter().zip(&draws) {
        theta[a - 1] = offset + d;
        theta[b - 1] = offset + d + FRAC_PI_2;
    }
    Region::new(m.clone(), theta).expect("sorted opener angles give a valid shape")
}

/// `shapes` random regions for every connected matching with `n ≤ max_n`.
pub fn shape_corpus(max_n: usize, shapes: usize, seed: u64) -> Vec<Region> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for n in 1..=max_n {
        for m in connected_matchings(n) {
            for _ in 0..shapes {
                out.push(random_shape(&m, &mut rng));
            }
        }
    }
    out
}

/// Applies `f` to each region, in parallel when available; output order
/// follows input order.
pub fn sweep<T, F>(regions: &[Region], exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Region) -> T + Sync + Send,
{
    exec.map(regions, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| all_matchings(n).len()).collect();
        assert_eq!(counts, vec![1, 3, 15, 105, 945]);
        assert!(all_matchings(0).is_empty());
    }

    #[test]
    fn connected_counts() {
        // [2,1] and [3,4,1,2] are the connected ones for n <= 2
        assert_eq!(connected_matchings(1).len(), 1);
        assert_eq!(connected_matchings(2).len(), 1);
        for n in 1..=4 {
            for m in connected_matchings(n) {
                assert_eq!(m.connected_components().len(), 1);
            }
        }
    }

    #[test]
    fn random_shapes_are_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in all_matchings(4) {
            let r = random_shape(&m, &mut rng);
            assert!(!r.is_alternating());
        }
    }

    #[test]
    fn sweep_is_order_preserving() {
        let corpus = shape_corpus(3, 2, 9);
        let seq = sweep(&corpus, Execution::Sequential, |r| r.n());
        let par = sweep(&corpus, Execution::Parallel, |r| r.n());
        assert_eq!(seq, par);
    }
}
