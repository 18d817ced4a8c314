//! Client weight updates and the pairwise correlation graph built from them.
//!
//! Every detector in this crate consumes a [`CorrelationMatrix`]: the weighted
//! complete graph whose vertices are the clients of one round and whose edge
//! weights are Pearson coefficients between their flattened weight updates.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// One client's flattened weight delta (`local - global`) for a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientUpdate {
    pub client_id: usize,
    pub delta: Vec<f64>,
    pub num_samples: usize,
}

impl GradientUpdate {
    pub fn new(client_id: usize, delta: Vec<f64>, num_samples: usize) -> Self {
        Self {
            client_id,
            delta,
            num_samples,
        }
    }
}

/// How each delta is centered before correlating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Standard Pearson: each vector centered by its own mean.
    #[default]
    PerVector,
    /// Every vector centered by one scalar mean taken over all entries of all
    /// updates in the round.
    GlobalMean,
}

/// Symmetric `n x n` matrix of pairwise correlations with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    /// Builds a matrix from the strict upper triangle given by `weight(i, j)`
    /// for `i < j`. The lower triangle mirrors it and the diagonal is zero.
    pub fn from_fn(n: usize, mut weight: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = weight(i, j);
                entries[i * n + j] = w;
                entries[j * n + i] = w;
            }
        }
        let m = Self { n, entries };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix from explicit rows, checking every invariant.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let m = Self { n, entries };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is nonzero")));
            }
            for j in (i + 1)..n {
                let w = self.get(i, j);
                if w != self.get(j, i) {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) is not symmetric")));
                }
                if !(-1.0..=1.0).contains(&w) {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {w} outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Applies `f` to every off-diagonal entry, keeping the diagonal at zero.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(self.n, |i, j| f(self.get(i, j)))
    }
}

impl Serialize for CorrelationMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq((0..self.n).map(|i| self.row(i)))
    }
}

/// Pearson correlation of two equally long vectors, each centered by its own mean.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            client: 1,
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::VectorTooShort(a.len()));
    }
    let ca = Centered::new(a, mean(a));
    let cb = Centered::new(b, mean(b));
    ca.correlate(&cb).ok_or(Error::DegenerateInput)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Centered {
    values: Vec<f64>,
    sum_sq: f64,
}

impl Centered {
    fn new(v: &[f64], center: f64) -> Self {
        let values: Vec<f64> = v.iter().map(|x| x - center).collect();
        let sum_sq = values.iter().map(|x| x * x).sum::<f64>();
        Self { values, sum_sq }
    }

    fn is_degenerate(&self) -> bool {
        self.sum_sq == 0.0
    }

    fn correlate(&self, other: &Centered) -> Option<f64> {
        if self.is_degenerate() || other.is_degenerate() {
            return None;
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * y)
            .sum();
        Some((dot / (self.sum_sq * other.sum_sq).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Correlates every unordered pair of updates exactly once.
///
/// Vertex `k` of the result is `updates[k]`. A client whose delta has zero
/// variance gets an all-zero row and a warning.
pub fn build_correlation_matrix(
    updates: &[GradientUpdate],
    centering: Centering,
) -> Result<CorrelationMatrix> {
    if updates.len() < 2 {
        return Err(Error::TooFewUpdates {
            needed: 2,
            found: updates.len(),
        });
    }
    let d = updates[0].delta.len();
    if let Some(bad) = updates.iter().find(|u| u.delta.len() != d) {
        return Err(Error::LengthMismatch {
            client: bad.client_id,
            expected: d,
            found: bad.delta.len(),
        });
    }
    if d < 2 {
        return Err(Error::VectorTooShort(d));
    }

    let global = match centering {
        Centering::PerVector => None,
        Centering::GlobalMean => {
            let total: f64 = updates.iter().map(|u| u.delta.iter().sum::<f64>()).sum();
            Some(total / (d * updates.len()) as f64)
        }
    };
    let centered: Vec<Centered> = updates
        .par_iter()
        .map(|u| Centered::new(&u.delta, global.unwrap_or_else(|| mean(&u.delta))))
        .collect();
    for (u, c) in updates.iter().zip(&centered) {
        if c.is_degenerate() {
            warn!(
                "client {} sent a constant update; its correlations are set to 0",
                u.client_id
            );
        }
    }

    let n = updates.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| centered[i].correlate(&centered[j]).unwrap_or(0.0))
                .collect()
        })
        .collect();
    CorrelationMatrix::from_fn(n, |i, j| upper[i][j - i - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_and_reversed_vectors() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson(&a, &a).unwrap(), 1.0);
        assert_eq!(pearson(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn reference_value() {
        // mpmath, 50 digits:
        // -0.42374713042129055473895668978123615854116179296056
        let a = [0.3, -1.1, 2.0, 0.4, -0.6];
        let b = [1.2, 0.1, -0.7, 0.9, 0.5];
        let r = pearson(&a, &b).unwrap();
        assert!((r - (-0.423_747_130_421_290_55)).abs() < 1e-12, "{r}");
    }

    #[test]
    fn degenerate_and_short_inputs() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateInput)
        ));
        assert!(matches!(pearson(&[1.0], &[2.0]), Err(Error::VectorTooShort(1))));
    }

    #[test]
    fn matrix_of_identical_updates() {
        let updates: Vec<_> = (0..3)
            .map(|i| GradientUpdate::new(i, vec![0.5, -1.0, 2.0, 0.0], 10))
            .collect();
        let m = build_correlation_matrix(&updates, Centering::PerVector).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn matrix_of_negated_pair() {
        let d = vec![0.1, 0.7, -0.3, 0.2];
        let neg = d.iter().map(|x| -x).collect();
        let updates = [GradientUpdate::new(0, d, 1), GradientUpdate::new(1, neg, 1)];
        let m = build_correlation_matrix(&updates, Centering::PerVector).unwrap();
        assert_eq!(m.get(0, 1), -1.0);
        assert_eq!(m.get(1, 0), -1.0);
    }

    #[test]
    fn constant_client_gets_zero_row() {
        let updates = [
            GradientUpdate::new(0, vec![1.0, 2.0, 3.0], 1),
            GradientUpdate::new(1, vec![0.0, 0.0, 0.0], 1),
            GradientUpdate::new(2, vec![3.0, 1.0, 2.0], 1),
        ];
        let m = build_correlation_matrix(&updates, Centering::PerVector).unwrap();
        assert_eq!(m.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(m.get(0, 1), 0.0);
        assert!(m.get(0, 2) != 0.0);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let updates = [
            GradientUpdate::new(0, vec![1.0, 2.0, 3.0], 1),
            GradientUpdate::new(7, vec![1.0, 2.0], 1),
        ];
        assert!(matches!(
            build_correlation_matrix(&updates, Centering::PerVector),
            Err(Error::LengthMismatch { client: 7, .. })
        ));
        assert!(build_correlation_matrix(&updates[..1], Centering::PerVector).is_err());
    }

    #[test]
    fn global_centering_stays_in_range() {
        let updates = [
            GradientUpdate::new(0, vec![1.0, 2.0, 3.0, 5.0], 1),
            GradientUpdate::new(1, vec![10.0, 9.0, 12.0, 11.0], 1),
            GradientUpdate::new(2, vec![-3.0, 1.0, 2.0, 0.0], 1),
        ];
        let m = build_correlation_matrix(&updates, Centering::GlobalMean).unwrap();
        let per = build_correlation_matrix(&updates, Centering::PerVector).unwrap();
        assert_ne!(m, per);
    }

    #[test]
    fn from_rows_rejects_bad_matrices() {
        assert!(CorrelationMatrix::from_rows(&[vec![0.0, 0.5], vec![0.4, 0.0]]).is_err());
        assert!(CorrelationMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 0.0]]).is_err());
        assert!(CorrelationMatrix::from_rows(&[vec![0.0, 1.5], vec![1.5, 0.0]]).is_err());
        assert!(CorrelationMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).is_ok());
    }

    #[test]
    fn serializes_as_nested_rows() {
        let m = CorrelationMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[[0.0,0.5],[0.5,0.0]]");
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|d| {
            (
                prop::collection::vec(-10.0f64..10.0, d),
                prop::collection::vec(-10.0f64..10.0, d),
            )
        })
    }

    proptest! {
        #[test]
        fn pearson_is_symmetric((a, b) in vec_pair()) {
            if let (Ok(ab), Ok(ba)) = (pearson(&a, &b), pearson(&b, &a)) {
                prop_assert_eq!(ab, ba);
                prop_assert!((-1.0..=1.0).contains(&ab));
            }
        }

        #[test]
        fn pearson_affine_invariant(
            (a, _) in vec_pair(),
            scale in 0.01f64..100.0,
            shift in -50.0f64..50.0,
        ) {
            let b: Vec<f64> = a.iter().map(|x| scale * x + shift).collect();
            if let Ok(r) = pearson(&a, &b) {
                prop_assert!((r - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn matrix_invariants_hold(
            n in 2usize..12,
            d in 2usize..30,
            seed in any::<u64>(),
            global in any::<bool>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let updates: Vec<_> = (0..n)
                .map(|i| GradientUpdate::new(i, (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(), 1))
                .collect();
            let centering = if global { Centering::GlobalMean } else { Centering::PerVector };
            let m = build_correlation_matrix(&updates, centering).unwrap();
            prop_assert!(CorrelationMatrix::from_rows(&m.to_rows()).is_ok());
        }
    }
}
