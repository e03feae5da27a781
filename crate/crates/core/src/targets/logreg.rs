use ndarray::{Array1, Array2};

use super::{bernoulli_logit_loglik, sigmoid, PredictiveTarget, Split, Target};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Dense design matrix and 0/1 labels.
#[derive(Clone, Debug)]
pub(crate) struct DenseXY {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
}

impl DenseXY {
    /// Densifies `ds`, optionally appending a trailing constant-one column.
    pub fn from_dataset(ds: &Dataset, add_bias: bool) -> Result<Self> {
        if let Some(bad) = ds.labels.iter().find(|y| **y > 1) {
            return Err(Error::Data(format!("label {bad} outside {{0, 1}}")));
        }
        let raw = ds.features.to_dense();
        let x = if add_bias {
            let (n, p) = raw.dim();
            let mut x = Array2::ones((n, p + 1));
            x.slice_mut(ndarray::s![.., ..p]).assign(&raw);
            x
        } else {
            raw
        };
        Ok(Self {
            x,
            y: ds.labels.iter().map(|v| f64::from(*v)).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

pub(crate) fn split_slot(split: Split) -> usize {
    match split {
        Split::Train => 0,
        Split::Validation => 1,
        Split::Test => 2,
    }
}

/// Bayesian logistic regression with an isotropic Gaussian prior. The last
/// parameter is the intercept.
#[derive(Clone, Debug)]
pub struct LogisticRegression {
    name: String,
    prior_var: f64,
    splits: [Option<DenseXY>; 3],
    dim: usize,
}

/// Prior-plus-likelihood target on a single (training) dataset.
pub fn make_logreg(ds: &Dataset, prior_var: f64) -> Result<LogisticRegression> {
    LogisticRegression::new(&ds.name, ds, None, None, prior_var)
}

impl LogisticRegression {
    pub fn new(
        name: &str,
        train: &Dataset,
        validation: Option<&Dataset>,
        test: Option<&Dataset>,
        prior_var: f64,
    ) -> Result<Self> {
        if !(prior_var > 0.0) {
            return Err(Error::config("prior variance must be positive"));
        }
        let dim = train.p() + 1;
        let load = |d: Option<&Dataset>| -> Result<Option<DenseXY>> {
            d.map(|d| {
                if d.p() + 1 != dim {
                    return Err(Error::Data("split feature count mismatch".into()));
                }
                DenseXY::from_dataset(d, true)
            })
            .transpose()
        };
        Ok(Self {
            name: format!("logreg-{name}"),
            prior_var,
            splits: [Some(DenseXY::from_dataset(train, true)?), load(validation)?, load(test)?],
            dim,
        })
    }

    fn train(&self) -> &DenseXY {
        self.splits[0].as_ref().expect("train split")
    }

    fn accumulate(&self, w: &[f64], rows: impl Iterator<Item = usize>, scale: f64, out: &mut [f64]) {
        let tr = self.train();
        let w = ndarray::ArrayView1::from(w);
        let mut acc = Array1::<f64>::zeros(self.dim);
        for i in rows {
            let xi = tr.x.row(i);
            let r = tr.y[i] - sigmoid(xi.dot(&w));
            acc.scaled_add(r, &xi);
        }
        for ((o, a), wj) in out.iter_mut().zip(acc.iter()).zip(w.iter()) {
            *o = scale * a - wj / self.prior_var;
        }
    }
}

impl Target for LogisticRegression {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, w: &[f64]) -> f64 {
        let tr = self.train();
        let wv = ndarray::ArrayView1::from(w);
        let lik: f64 = tr
            .x
            .rows()
            .into_iter()
            .zip(&tr.y)
            .map(|(xi, y)| bernoulli_logit_loglik(*y, xi.dot(&wv)))
            .sum();
        lik - w.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.prior_var)
    }

    fn score_into(&self, w: &[f64], out: &mut [f64]) {
        self.accumulate(w, 0..self.train().n(), 1.0, out);
    }

    fn as_predictive(&self) -> Option<&dyn PredictiveTarget> {
        Some(self)
    }

    fn n_obs(&self) -> usize {
        self.train().n()
    }

    fn minibatch_score_into(&self, w: &[f64], batch: &[usize], out: &mut [f64]) -> bool {
        let scale = self.n_obs() as f64 / batch.len().max(1) as f64;
        self.accumulate(w, batch.iter().copied(), scale, out);
        true
    }
}

impl PredictiveTarget for LogisticRegression {
    fn has_split(&self, split: Split) -> bool {
        self.splits[split_slot(split)].is_some()
    }

    fn labels(&self, split: Split) -> &[f64] {
        self.splits[split_slot(split)]
            .as_ref()
            .map_or(&[], |s| &s.y)
    }

    fn predict_proba_into(&self, w: &[f64], split: Split, out: &mut [f64]) {
        let Some(s) = &self.splits[split_slot(split)] else {
            return;
        };
        let wv = ndarray::ArrayView1::from(w);
        for (o, xi) in out.iter_mut().zip(s.x.rows()) {
            *o = sigmoid(xi.dot(&wv));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Features;
    use crate::targets::testutil::fd_score_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
        let labels = (0..n).map(|_| rng.random_bool(0.4) as u8).collect();
        Dataset {
            name: "rand".into(),
            features: Features::Dense(x),
            labels,
            scaling: None,
        }
    }

    #[test]
    fn zero_weights_predict_one_half() {
        let ds = random_dataset(30, 4, 1);
        let t = LogisticRegression::new("r", &ds, None, Some(&ds), 1.0).unwrap();
        let mut out = vec![0.0; 30];
        t.predict_proba_into(&[0.0; 5], Split::Test, &mut out);
        assert!(out.iter().all(|p| *p == 0.5));
        // per-example log-likelihood at zero is -ln 2
        assert!((t.log_density(&[0.0; 5]) + 30.0 * 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn score_matches_fd_and_prior_only_case() {
        let ds = random_dataset(40, 3, 2);
        let t = make_logreg(&ds, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let w: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            assert!(fd_score_error(&t, &w, 1e-5) < 1e-5);
        }
        let w = [0.3, -1.0, 2.0, 0.5];
        let mut out = [0.0; 4];
        assert!(t.minibatch_score_into(&w, &[], &mut out));
        for (o, wj) in out.iter().zip(w) {
            assert_eq!(*o, -wj);
        }
    }

    #[test]
    fn rejects_bad_labels() {
        let mut ds = random_dataset(5, 2, 0);
        ds.labels[2] = 3;
        assert!(matches!(make_logreg(&ds, 1.0), Err(Error::Data(_))));
    }
}
