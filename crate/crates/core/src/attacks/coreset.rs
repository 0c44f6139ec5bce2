use rand::Rng as _;

use crate::rng;
use crate::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy k-center selection; returns indices into `pool` in selection order.
///
/// The first index is drawn uniformly with `seed`; each further pick maximizes
/// the Euclidean distance to its nearest already-selected point, ties going to
/// the lowest pool index.
pub fn coreset_select(pool: &[Vec<f64>], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > pool.len() {
        return Err(Error::Input(format!(
            "cannot select {k} points from a pool of {}",
            pool.len()
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let first = rng::seeded(seed).gen_range(0..pool.len());
    let mut selected = vec![first];
    let mut nearest: Vec<f64> = pool.iter().map(|p| sq_dist(p, &pool[first])).collect();
    let mut taken = vec![false; pool.len()];
    taken[first] = true;
    while selected.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for (i, &d) in nearest.iter().enumerate() {
            if taken[i] {
                continue;
            }
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let (next, _) = best.expect("k ≤ pool size leaves a candidate");
        taken[next] = true;
        selected.push(next);
        for (i, p) in pool.iter().enumerate() {
            let d = sq_dist(p, &pool[next]);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
    }
    Ok(selected)
}
