//! Evaluates the two published 16-neuron networks against the reference
//! module for a few spreads.
//!
//! The networks use raw volts and W/m² with the product kernel, so any neuron
//! whose centroid irradiance equals the input fires fully whatever the voltage.
//! On the 200/600/1000 grid the spread therefore has no effect.

use pvrbf::dataset::generate_grid;
use pvrbf::rbf::{table1_current_network, table1_power_network};
use pvrbf::train::relative_mse;
use pvrbf::{reference_module, InputPoint, ModuleModel, OutputKind};

fn main() -> pvrbf::Result<()> {
    let module = ModuleModel::five_param(reference_module(), 1000.0)?;
    let gs = [200.0, 600.0, 1000.0];
    let current_grid = generate_grid(&module, &gs, [0.0, 30.0], 101, OutputKind::Current)?;
    let power_grid = generate_grid(&module, &gs, [0.0, 30.0], 101, OutputKind::Power)?;

    println!("{:>8} {:>14} {:>14}", "sigma", "current MSE", "power MSE");
    for sigma in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let cur = table1_current_network(sigma)?;
        let pow = table1_power_network(sigma)?;
        println!(
            "{sigma:>8} {:>14.4e} {:>14.4e}",
            relative_mse(&cur, &current_grid)?,
            relative_mse(&pow, &power_grid)?
        );
    }

    for g in [1000.0, 800.0] {
        println!("\ncurrent network, G = {g} W/m²:");
        println!("  {:>5} {:>10} {:>10} {:>10} {:>8}", "v", "sigma 1", "sigma 100", "sigma 1e4", "circuit");
        for v in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0] {
            let x = InputPoint::new(v, g);
            let mut row = format!("  {v:>5.1}");
            for sigma in [1.0, 100.0, 1e4] {
                row += &format!(" {:>10.4}", table1_current_network(sigma)?.evaluate(&x)?);
            }
            row += &format!(" {:>8.4}", module.current(g, 298.15, v)?);
            println!("{row}");
        }
    }
    Ok(())
}
