//! Sweeps the reference module as a five-parameter and as a two-diode circuit
//! and prints the figures of merit at three irradiance levels.

use pvrbf::characteristics::{metrics, sweep_curve};
use pvrbf::{reference_module, CircuitModel, ModuleModel, ThermalContext, TwoDiodeModel};

fn main() -> pvrbf::Result<()> {
    let five = ModuleModel::five_param(reference_module(), 1000.0)?;
    let two = ModuleModel::new(
        CircuitModel::TwoDiode(TwoDiodeModel::with_default_factors(
            5.0,
            5e-9,
            2e-7,
            0.3,
            200.0,
            ThermalContext::new(36, 298.15)?,
        )?),
        1000.0,
    )?;

    println!("{:<12} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}", "model", "G", "Isc", "Voc", "Vmp", "Imp", "Pmp", "FF");
    for (name, model) in [("five-param", &five), ("two-diode", &two)] {
        for g in [200.0, 600.0, 1000.0] {
            let curve = sweep_curve(model, g, 298.15, 30.0, 301)?;
            let m = metrics(&curve, Some(0.6))?;
            println!(
                "{name:<12} {g:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.3} {:>6.3}",
                m.isc,
                m.voc.unwrap_or(f64::NAN),
                m.vmp,
                m.imp,
                m.pmp,
                m.fill_factor.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
