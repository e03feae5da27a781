use super::logreg::{split_slot, DenseXY};
use super::{bernoulli_logit_loglik, sigmoid, PredictiveTarget, Split, Target};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// One-hidden-layer tanh network for binary classification with an isotropic
/// Gaussian prior on all weights.
///
/// Parameter layout: `W1` (`width x p`, row-major), `b1` (`width`),
/// `w2` (`width`), `b2`.
#[derive(Clone, Debug)]
pub struct Bnn {
    name: String,
    width: usize,
    p: usize,
    prior_var: f64,
    splits: [Option<DenseXY>; 3],
}

impl Bnn {
    pub fn new(
        name: &str,
        train: &Dataset,
        validation: Option<&Dataset>,
        test: Option<&Dataset>,
        width: usize,
        prior_var: f64,
    ) -> Result<Self> {
        if width == 0 {
            return Err(Error::config("BNN width must be >= 1"));
        }
        if !(prior_var > 0.0) {
            return Err(Error::config("prior variance must be positive"));
        }
        let p = train.p();
        let load = |d: Option<&Dataset>| -> Result<Option<DenseXY>> {
            d.map(|d| {
                if d.p() != p {
                    return Err(Error::Data("split feature count mismatch".into()));
                }
                DenseXY::from_dataset(d, false)
            })
            .transpose()
        };
        Ok(Self {
            name: format!("bnn-{name}"),
            width,
            p,
            prior_var,
            splits: [Some(DenseXY::from_dataset(train, false)?), load(validation)?, load(test)?],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    fn train(&self) -> &DenseXY {
        self.splits[0].as_ref().expect("train split")
    }

    /// Forward pass; fills `hidden` with activations and returns the logit.
    #[inline]
    fn forward(&self, theta: &[f64], x: &[f64], hidden: &mut [f64]) -> f64 {
        let (w1, rest) = theta.split_at(self.width * self.p);
        let (b1, rest) = rest.split_at(self.width);
        let (w2, b2) = rest.split_at(self.width);
        let mut z = b2[0];
        for k in 0..self.width {
            let row = &w1[k * self.p..(k + 1) * self.p];
            let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b1[k];
            hidden[k] = a.tanh();
            z += w2[k] * hidden[k];
        }
        z
    }

    fn accumulate(&self, theta: &[f64], rows: impl Iterator<Item = usize>, scale: f64, out: &mut [f64]) {
        let tr = self.train();
        let (w, p) = (self.width, self.p);
        let w2 = &theta[w * p + w..w * p + 2 * w];
        let mut hidden = vec![0.0; w];
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in rows {
            let x = tr.x.row(i);
            let x = x.as_slice().expect("standard layout");
            let z = self.forward(theta, x, &mut hidden);
            let dz = tr.y[i] - sigmoid(z);
            let (g_w1, rest) = out.split_at_mut(w * p);
            let (g_b1, rest) = rest.split_at_mut(w);
            let (g_w2, g_b2) = rest.split_at_mut(w);
            g_b2[0] += dz;
            for k in 0..w {
                g_w2[k] += dz * hidden[k];
                let dh = dz * w2[k] * (1.0 - hidden[k] * hidden[k]);
                g_b1[k] += dh;
                for (g, xv) in g_w1[k * p..(k + 1) * p].iter_mut().zip(x) {
                    *g += dh * xv;
                }
            }
        }
        for (o, t) in out.iter_mut().zip(theta) {
            *o = scale * *o - t / self.prior_var;
        }
    }
}

impl Target for Bnn {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.width * (self.p + 2) + 1
    }

    fn log_density(&self, theta: &[f64]) -> f64 {
        let tr = self.train();
        let mut hidden = vec![0.0; self.width];
        let lik: f64 = (0..tr.n())
            .map(|i| {
                let x = tr.x.row(i);
                let z = self.forward(theta, x.as_slice().unwrap(), &mut hidden);
                bernoulli_logit_loglik(tr.y[i], z)
            })
            .sum();
        lik - theta.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.prior_var)
    }

    fn score_into(&self, theta: &[f64], out: &mut [f64]) {
        self.accumulate(theta, 0..self.train().n(), 1.0, out);
    }

    fn as_predictive(&self) -> Option<&dyn PredictiveTarget> {
        Some(self)
    }

    fn n_obs(&self) -> usize {
        self.train().n()
    }

    fn minibatch_score_into(&self, theta: &[f64], batch: &[usize], out: &mut [f64]) -> bool {
        let scale = self.n_obs() as f64 / batch.len().max(1) as f64;
        self.accumulate(theta, batch.iter().copied(), scale, out);
        true
    }
}

impl PredictiveTarget for Bnn {
    fn has_split(&self, split: Split) -> bool {
        self.splits[split_slot(split)].is_some()
    }

    fn labels(&self, split: Split) -> &[f64] {
        self.splits[split_slot(split)]
            .as_ref()
            .map_or(&[], |s| &s.y)
    }

    fn predict_proba_into(&self, theta: &[f64], split: Split, out: &mut [f64]) {
        let Some(s) = &self.splits[split_slot(split)] else {
            return;
        };
        let mut hidden = vec![0.0; self.width];
        for (o, x) in out.iter_mut().zip(s.x.rows()) {
            *o = sigmoid(self.forward(theta, x.as_slice().unwrap(), &mut hidden));
        }
    }
}
