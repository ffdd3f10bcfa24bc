//! Generates a training set, writes it as CSV, reads it back, and does the
//! same for one swept curve.

use pvrbf::characteristics::sweep_curve;
use pvrbf::dataset::{generate_random, read_curve_file, read_dataset_file, write_curve_file, write_dataset_file};
use pvrbf::{reference_module, ModuleModel, OutputKind};

fn main() -> pvrbf::Result<()> {
    let module = ModuleModel::five_param(reference_module(), 1000.0)?;
    let dir = std::env::temp_dir().join("pvrbf-dataset-roundtrip");
    std::fs::create_dir_all(&dir).map_err(|source| pvrbf::Error::Io {
        path: dir.clone(),
        source,
    })?;

    let data = generate_random(&module, 1000, [200.0, 1000.0], [0.0, 30.0], OutputKind::Power, 5)?;
    let path = dir.join("power.csv");
    write_dataset_file(&data, &path)?;
    let back = read_dataset_file(&path, OutputKind::Power)?;
    println!("{}: {} samples, identical after reload: {}", path.display(), back.len(), back == data);
    for s in back.samples.iter().take(3) {
        println!("  G={:.2} V={:.4} P={:.5}", s.irradiance, s.voltage, s.target);
    }

    let curve = sweep_curve(&module, 800.0, 298.15, 25.0, 51)?;
    let cpath = dir.join("curve_800.csv");
    write_curve_file(&curve, &cpath)?;
    let cback = read_curve_file(&cpath)?;
    println!("{}: {} points, identical after reload: {}", cpath.display(), cback.len(), cback.points() == curve.points());
    Ok(())
}
