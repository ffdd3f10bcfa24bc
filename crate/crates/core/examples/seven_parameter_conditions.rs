//! Shows how the seven-parameter adjustments move the maximum power point
//! as the cell temperature rises.

use pvrbf::characteristics::{metrics, sweep_curve};
use pvrbf::{reference_module, ModuleModel, SevenParamExtension};

const BOLTZMANN: f64 = 1.380649e-23;
const ELECTRON_CHARGE: f64 = 1.602176634e-19;

fn main() -> pvrbf::Result<()> {
    let module = ModuleModel::five_param(reference_module(), 1000.0)?.with_extension(SevenParamExtension {
        rs_ref: 0.3,
        delta: 0.002,
        t_ref: 298.15,
        i0_ref: 5e-9,
        g_ref: 1000.0,
        m_exponent: 0.1,
        eg_ref_over_k: 1.12 * ELECTRON_CHARGE / BOLTZMANN,
        eg_temp_coeff: -2.677e-4,
    })?;

    println!("{:>7} {:>6} {:>10} {:>8} {:>8} {:>8}", "T (K)", "G", "I0", "Voc", "Pmp", "FF");
    for g in [400.0, 1000.0] {
        for t in [273.15, 298.15, 323.15, 348.15] {
            let ext = module.extension.as_ref().unwrap();
            let curve = sweep_curve(&module, g, t, 30.0, 601)?;
            let m = metrics(&curve, None)?;
            println!(
                "{t:>7.2} {g:>6} {:>10.3e} {:>8.3} {:>8.3} {:>8.3}",
                ext.i0_at_conditions(g, t)?,
                m.voc.unwrap_or(f64::NAN),
                m.pmp,
                m.fill_factor.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
