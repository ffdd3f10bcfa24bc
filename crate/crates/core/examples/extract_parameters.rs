//! Recovers the five circuit parameters from three noisy swept curves,
//! starting from a deliberately poor guess.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pvrbf::characteristics::{sweep_curve, Curve};
use pvrbf::extraction::{fit_five_param, FitConfig, JacobianMethod};
use pvrbf::{reference_module, FiveParamModel, ModuleModel};

fn main() -> pvrbf::Result<()> {
    let truth = reference_module();
    let module = ModuleModel::five_param(truth, 1000.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut curves = Vec::new();
    for g in [200.0, 600.0, 1000.0] {
        let clean = sweep_curve(&module, g, 298.15, 30.0, 101)?;
        let noisy: Vec<(f64, f64)> = clean
            .points()
            .iter()
            .map(|p| (p.v, p.i + rng.gen_range(-1e-3..1e-3)))
            .collect();
        curves.push(Curve::from_vi(g, 298.15, "noisy", noisy)?);
    }

    let init = FiveParamModel {
        photocurrent: 3.0,
        saturation_current: 1e-7,
        ideality: 1.8,
        series_resistance: 0.1,
        shunt_resistance: 1000.0,
        ..truth
    };
    for jacobian in [JacobianMethod::ForwardDifference, JacobianMethod::Analytic] {
        let cfg = FitConfig {
            jacobian,
            ..FitConfig::default()
        };
        let r = fit_five_param(&curves, &init, &cfg)?;
        let m = &r.model;
        println!("{jacobian:?}: {} iterations, RMS residual {:.3e} A", r.iterations, r.residual_norm);
        for (name, got, want) in [
            ("Iph", m.photocurrent, truth.photocurrent),
            ("I0", m.saturation_current, truth.saturation_current),
            ("a", m.ideality, truth.ideality),
            ("Rs", m.series_resistance, truth.series_resistance),
            ("Rsh", m.shunt_resistance, truth.shunt_resistance),
        ] {
            println!("  {name:<4} {got:>12.5e}  (true {want:.5e})");
        }
    }
    Ok(())
}
