use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{slate_distribution, MixtureModel, OracleTable, Slate};
use crate::error::{Error, Result};
use crate::rng::{items_tag, stream};

/// Multinomial counts of `samples` i.i.d. draws from `probs`.
///
/// Drawn by sequential conditional binomials, which has the same law as
/// tallying individual categorical draws at O(len) cost.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], samples: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = samples;
    let mut mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let k = Binomial::new(left, q).map(|d| d.sample(rng)).unwrap_or(0);
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    counts
}

/// Per-slate tallies of simulated choices.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRow {
    pub counts: Vec<u64>,
    pub samples: u64,
}

impl EmpiricalRow {
    /// Scaled empirical values `(1+lambda) * count_i / N`.
    pub fn scaled(&self, lambda: f64) -> Vec<f64> {
        let n = self.samples as f64;
        self.counts.iter().map(|&c| (1.0 + lambda) * c as f64 / n).collect()
    }
}

/// Empirical counterpart of an [`OracleTable`], built from finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTable {
    n: usize,
    lambda: f64,
    seed: u64,
    entries: BTreeMap<Slate, EmpiricalRow>,
}

impl EmpiricalTable {
    pub fn new(n: usize, lambda: f64, seed: u64) -> Self {
        Self { n, lambda, seed, entries: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Samples `samples` choices on `slate` (stream keyed by the table seed
    /// and the slate) and stores the tallies.
    pub fn sample_slate(&mut self, model: &MixtureModel, slate: &Slate, samples: u64) -> Result<&EmpiricalRow> {
        let row = sample_empirical(model, slate, samples, self.seed)?;
        self.entries.insert(slate.clone(), row);
        Ok(&self.entries[slate])
    }

    pub fn row(&self, slate: &Slate) -> Option<&EmpiricalRow> {
        self.entries.get(slate)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Slate, &EmpiricalRow)> {
        self.entries.iter()
    }

    pub fn total_samples(&self) -> u64 {
        self.entries.values().map(|r| r.samples).sum()
    }

    /// Scaled empirical rows as an oracle table. Rows may contain zeros, so
    /// they bypass the open-interval check.
    pub fn to_oracle(&self) -> OracleTable<f64> {
        let mut t = OracleTable::new(self.n, self.lambda);
        for (s, row) in &self.entries {
            t.insert_unchecked(s.clone(), row.scaled(self.lambda));
        }
        t
    }
}

/// Draws `samples` i.i.d. choices from the model on `slate`.
pub fn sample_empirical(model: &MixtureModel, slate: &Slate, samples: u64, seed: u64) -> Result<EmpiricalRow> {
    if samples == 0 {
        return Err(Error::Parameter("sample count must be at least 1".into()));
    }
    let probs = slate_distribution(model, slate)?;
    let mut rng = stream(seed, items_tag(slate.items()));
    Ok(EmpiricalRow { counts: sample_counts(&probs, samples, &mut rng), samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{oracle_table, random_instance, WeightVector, DEFAULT_WEIGHT_FLOOR};

    #[test]
    fn counts_sum_to_n_and_scale_to_one_plus_lambda() {
        let m = random_instance(5, 2.0, 3, DEFAULT_WEIGHT_FLOOR).unwrap();
        let row = sample_empirical(&m, &Slate::full(5), 1234, 9).unwrap();
        assert_eq!(row.counts.iter().sum::<u64>(), 1234);
        let s: f64 = row.scaled(2.0).iter().sum();
        assert!((s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reproducible() {
        let m = random_instance(4, 1.5, 1, DEFAULT_WEIGHT_FLOOR).unwrap();
        let s = Slate::full(4);
        assert_eq!(sample_empirical(&m, &s, 1000, 5).unwrap(), sample_empirical(&m, &s, 1000, 5).unwrap());
        assert_ne!(sample_empirical(&m, &s, 1000, 5).unwrap(), sample_empirical(&m, &s, 1000, 6).unwrap());
    }

    #[test]
    fn zero_samples_rejected() {
        let m = random_instance(3, 1.0, 1, DEFAULT_WEIGHT_FLOOR).unwrap();
        assert!(sample_empirical(&m, &Slate::full(3), 0, 1).is_err());
    }

    #[test]
    fn near_deterministic_distribution() {
        let delta = 1e-9;
        let w = WeightVector::new(vec![1.0 - 2.0 * delta, delta, delta]).unwrap();
        let m = MixtureModel::new(w.clone(), w, 2.0).unwrap();
        let row = sample_empirical(&m, &Slate::full(3), 100, 11).unwrap();
        assert_eq!(row.scaled(2.0), vec![3.0, 0.0, 0.0]);
    }

    #[test]
    fn large_n_matches_oracle() {
        let m = random_instance(3, 2.0, 17, DEFAULT_WEIGHT_FLOOR).unwrap();
        let s = Slate::full(3);
        let exact = oracle_table(&m, [&s]).unwrap();
        let mut within = 0;
        for seed in 0..100 {
            let row = sample_empirical(&m, &s, 1_000_000, seed).unwrap().scaled(2.0);
            let err = row
                .iter()
                .zip(exact.row(&s).unwrap())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            within += (err <= 5e-3) as u32;
        }
        assert!(within >= 99, "{within}/100");
    }

    #[test]
    fn table_accumulates_rows() {
        let m = random_instance(4, 1.0, 2, DEFAULT_WEIGHT_FLOOR).unwrap();
        let mut t = EmpiricalTable::new(4, 1.0, 77);
        t.sample_slate(&m, &Slate::full(4), 50).unwrap();
        t.sample_slate(&m, &Slate::without(4, 0), 70).unwrap();
        assert_eq!(t.total_samples(), 120);
        assert_eq!(t.to_oracle().len(), 2);
    }
}
