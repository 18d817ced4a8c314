//! Random matrix fixtures shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeSet;

use corrguard::gradients::CorrelationMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symmetric matrix with i.i.d. uniform off-diagonal weights in [-1, 1].
pub fn random_matrix(rng: &mut impl Rng, n: usize) -> CorrelationMatrix {
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let x = rng.random_range(-1.0..=1.0);
            w[i][j] = x;
            w[j][i] = x;
        }
    }
    CorrelationMatrix::from_rows(&w).unwrap()
}

/// A graph whose weights fall in three disjoint bands:
/// attacker-attacker above normal-normal above attacker-normal, with at
/// least `margin` between neighbouring bands.
pub struct BandedCase {
    pub matrix: CorrelationMatrix,
    pub attackers: BTreeSet<usize>,
}

pub fn banded_case(rng: &mut impl Rng, n_range: (usize, usize), margin: f64) -> BandedCase {
    let n = rng.random_range(n_range.0..=n_range.1);
    let k = rng.random_range(2..=n - 2);
    let attackers: BTreeSet<usize> = sample(rng, n, k).into_iter().collect();

    // Two cut points splitting [-1, 1] into three bands of positive width.
    let usable = 2.0 - 2.0 * margin;
    let mut cuts = [rng.random_range(0.0..usable), rng.random_range(0.0..usable)];
    cuts.sort_by(f64::total_cmp);
    let low = (-1.0, -1.0 + cuts[0]);
    let mid = (low.1 + margin, -1.0 + margin + cuts[1]);
    let high = (mid.1 + margin, 1.0);
    let draw = |rng: &mut dyn rand::RngCore, (a, b): (f64, f64)| {
        if b > a {
            rng.random_range(a..=b)
        } else {
            a
        }
    };

    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let band = match (attackers.contains(&i), attackers.contains(&j)) {
                (true, true) => high,
                (false, false) => mid,
                _ => low,
            };
            let x = draw(rng, band);
            w[i][j] = x;
            w[j][i] = x;
        }
    }
    BandedCase {
        matrix: CorrelationMatrix::from_rows(&w).unwrap(),
        attackers,
    }
}
