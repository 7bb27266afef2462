//! Random mask pairs and confusion-matrix counting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sonobiometry::metrics::ConfusionTally;
use sonobiometry::{BinaryMask, Grid};

pub fn random_pair(rng: &mut ChaCha8Rng) -> (BinaryMask, BinaryMask) {
    let (h, w) = (rng.random_range(1..40), rng.random_range(1..40));
    let (pa, pb): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
    let a = Grid::from_fn(h, w, |_, _| rng.random_bool(pa));
    // Correlate b with a half the time so the overlap spans the full range.
    let follow = rng.random_bool(0.5);
    let b = Grid::from_fn(h, w, |r, c| {
        if follow && rng.random_bool(0.7) {
            *a.get(r, c)
        } else {
            rng.random_bool(pb)
        }
    });
    (a, b)
}

/// Full confusion matrix by direct counting, then one-vs-rest tallies read
/// off its rows and columns.
pub fn tally_oracle(preds: &[usize], labels: &[usize], k: usize) -> Vec<ConfusionTally> {
    let mut m = vec![vec![0u64; k]; k];
    for i in 0..preds.len() {
        m[labels[i]][preds[i]] += 1;
    }
    let n = preds.len() as u64;
    (0..k)
        .map(|c| {
            let tp = m[c][c];
            let fn_ = m[c].iter().sum::<u64>() - tp;
            let fp = (0..k).map(|r| m[r][c]).sum::<u64>() - tp;
            ConfusionTally {
                tp,
                fp,
                fn_,
                tn: n - tp - fp - fn_,
            }
        })
        .collect()
}
