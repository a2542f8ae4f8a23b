//! Minimal end-to-end run: generate the overlapping-squares task, train with
//! the squared hinge loss in the m = 2 space over the min kernel, report
//! held-out accuracy, and save the model.
//!
//! ```sh
//! cargo run --release -p rkbs-svm --example train_squares
//! ```

use rkbs_svm::data::generate_overlapping_squares;
use rkbs_svm::kernels::{build_feature_matrix, KernelSpec};
use rkbs_svm::loss::builtin;
use rkbs_svm::solver::{multi_start_solve, SolverConfig};
use rkbs_svm::tensor::TensorHandle;
use rkbs_svm::{Result, TrainedModel};

fn main() -> Result<()> {
    let (train, test) = generate_overlapping_squares(300, 120, 1)?;
    let kernel = KernelSpec::min(2);
    let fm = build_feature_matrix(&kernel, 32, train.points())?;
    let config = SolverConfig {
        m: 2,
        lambda: 0.01,
        beta: 1.0,
        eps2: 1e-4,
        max_outer: 200,
        init_lo: -0.01,
        init_hi: 0.01,
        ..SolverConfig::default()
    };
    let t = TensorHandle::from_feature_matrix(&fm, config.m)?;
    let result = multi_start_solve(&t, &builtin::squared_hinge(), train.labels(), &config)?;
    let model = TrainedModel::from_training(kernel, 32, &config, train.points(), &result)?;

    println!("objective  {}", result.objective);
    println!("iterations {}", result.iterations);
    println!("converged  {}", result.converged);
    println!("accuracy   {}", model.evaluate_accuracy(&test)?);
    model.save("model.json".as_ref())?;
    println!("saved      model.json");
    Ok(())
}
