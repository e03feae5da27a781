//! Bayesian logistic regression from a CSV file (or synthetic data when no
//! path is given), scored by test NLL, accuracy and ECE.
//!
//!     cargo run --example logistic_regression -- data.csv
//!     cargo run --example logistic_regression -- data.libsvm
use msvgd::data::{load_dataset, standardize_and_split, synthetic_classification, DataFormat, SplitSpec};
use msvgd::prelude::*;
use msvgd::targets::{LogisticRegression, Split};

fn main() -> Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(path) if path.ends_with(".libsvm") => load_dataset(&path, &DataFormat::LibsvmSparseText)?,
        Some(path) => load_dataset(&path, &DataFormat::Csv { header: true, label_column: None })?,
        None => synthetic_classification(800, 10, 3)?,
    };
    let sp = standardize_and_split(&ds, &SplitSpec::train_test(0))?;
    let target = LogisticRegression::new(&ds.name, &sp.train, None, Some(&sp.test), 1.0)?;
    println!("{}: {} train rows, {} test rows, d = {}", ds.name, sp.train.n(), sp.test.n(), target.dim());

    let kernel = KernelSpec::rbf();
    let cfg = StepConfig { h: 2e-3, ..StepConfig::default() };
    let mut ctr = CostCounters::default();
    let mut ens = init_ensemble(64, target.dim(), &InitSpec::gaussian(0.1), &RngStream::new(0))?;
    for it in 0..=300 {
        if it % 50 == 0 {
            let probs = posterior_predictive(ens.particles.view(), &target, Split::Test)?;
            let m = predictive_metrics(&probs, target.labels(Split::Test), 10)?;
            println!("iter {it:>3}  nll {:.4}  acc {:.3}  ece {:.4}", m.nll, m.accuracy, m.ece);
        }
        ens = mr_svgd_step(&ens, &target, &kernel, &cfg, &mut ctr)?;
    }
    Ok(())
}
