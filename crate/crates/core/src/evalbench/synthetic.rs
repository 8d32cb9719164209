//! Planted-partition signed graphs for tests and demos.

use rand::Rng;

use crate::graph::{EdgeSample, Sign};
use crate::rng::rng_from_seed;

/// Two factions (even and odd ids): each pair is linked with probability
/// `p_edge`, positive inside a faction and negative across, with each sign
/// flipped with probability `noise`.
pub fn two_factions(n: usize, p_edge: f64, noise: f64, seed: u64) -> Vec<EdgeSample> {
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if !rng.gen_bool(p_edge) {
                continue;
            }
            let mut sign = if u % 2 == v % 2 { Sign::Positive } else { Sign::Negative };
            if rng.gen_bool(noise) {
                sign = sign.flipped();
            }
            out.push(EdgeSample { u, v, sign });
        }
    }
    out
}
