//! Trains a current surrogate on 5600 random samples of the reference module
//! and scores it on a 3 × 101 evaluation grid.

use std::time::Instant;

use pvrbf::dataset::{generate_grid, generate_random};
use pvrbf::train::{relative_mse, train, TrainConfig};
use pvrbf::{reference_module, ModuleModel, OutputKind};

fn main() -> pvrbf::Result<()> {
    let module = ModuleModel::five_param(reference_module(), 1000.0)?;
    let data = generate_random(&module, 5600, [200.0, 1000.0], [0.0, 30.0], OutputKind::Current, 1)?;
    let grid = generate_grid(&module, &[200.0, 600.0, 1000.0], [0.0, 30.0], 101, OutputKind::Current)?;

    let cfg = TrainConfig::default().with_default_ladder();
    let start = Instant::now();
    let outcome = train(&data, &cfg)?;
    for (sigma, mse, _) in &outcome.candidates {
        println!("start sigma {sigma:<5} training relative MSE {mse:.5}");
    }
    let net = &outcome.surrogate;
    println!(
        "kept {} neurons, sigma {:.4}, training MSE {:.5}, grid MSE {:.5} ({:.1?})",
        net.len(),
        net.sigma(),
        outcome.training_mse,
        relative_mse(net, &grid)?,
        start.elapsed()
    );
    Ok(())
}
