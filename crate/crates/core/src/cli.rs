//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for invalid input, 2 when a numerical
//! procedure fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::characteristics::{compare_curves, metrics, sweep_curve, CurrentSource};
use crate::circuit::ModuleModel;
use crate::dataset::{
    declared_kind, generate_grid, generate_random, parse_dataset, read_curve_file, write_curve_file,
    write_dataset_file,
};
use crate::document::ModelDocument;
use crate::error::{Error, Result};
use crate::extraction::{fit_five_param, FitConfig, JacobianMethod};
use crate::rbf::{table1_current_network, table1_power_network, RbfSurrogate};
use crate::train::{relative_mse, train, TrainConfig};
use crate::OutputKind;

#[derive(Debug, Parser)]
#[command(name = "pvrbf", version, about = "PV module circuit models and RBF surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep I–V/P–V curves from a circuit model or current surrogate.
    Simulate(SimulateArgs),
    /// Generate a training or evaluation dataset from a circuit model.
    GenData(GenDataArgs),
    /// Train a surrogate on a dataset.
    Train(TrainArgs),
    /// Relative MSE of a surrogate on a dataset.
    Eval(EvalArgs),
    /// Figures of merit of a curve file.
    Metrics(MetricsArgs),
    /// Fit five circuit parameters to one or more curve files.
    Extract(ExtractArgs),
    /// Write one of the published 16-neuron networks.
    Table1(Table1Args),
    /// Compare two curve files on the same voltage grid.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Current,
    Power,
}

impl From<Kind> for OutputKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Current => OutputKind::Current,
            Kind::Power => OutputKind::Power,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Irradiances, comma separated, W/m².
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    g: Vec<f64>,
    /// Temperature in kelvin; defaults to the model's reference temperature.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 30.0)]
    vmax: f64,
    #[arg(long, default_value_t = 301)]
    n: usize,
    /// Output CSV; with several irradiances, `<stem>_g<G>.csv` is written per curve.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenDataArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of random samples.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    n: Option<usize>,
    /// Irradiances of a regular grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Voltages per irradiance on a grid.
    #[arg(long, default_value_t = 101)]
    n_v: usize,
    #[arg(long, default_value_t = 200.0)]
    g_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    g_max: f64,
    #[arg(long, default_value_t = 0.0)]
    v_min: f64,
    #[arg(long, default_value_t = 30.0)]
    v_max: f64,
    #[arg(long, value_enum, default_value = "current")]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Target kind; read from the file's `# kind=` line when omitted.
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long, default_value_t = 16)]
    max_neurons: usize,
    #[arg(long, default_value_t = 0.02)]
    mse_goal: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Further starting spreads, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.1,0.05")]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of samples held out to choose the spread.
    #[arg(long, default_value_t = 0.0)]
    holdout: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    net: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    curve: PathBuf,
    /// Module area in m², for the conversion efficiency.
    #[arg(long)]
    area: Option<f64>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long, num_args = 1.., required = true)]
    curves: Vec<PathBuf>,
    /// Starting circuit model.
    #[arg(long)]
    init: PathBuf,
    /// RMS residual goal, ampere.
    #[arg(long, default_value_t = 1e-9)]
    goal: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    /// Use implicit-function derivatives instead of finite differences.
    #[arg(long)]
    analytic: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Table1Args {
    #[arg(long, value_enum)]
    which: Kind,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    reference: PathBuf,
    other: PathBuf,
}

/// Runs the command line `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a, out),
        Command::GenData(a) => gen_data(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Metrics(a) => metrics_cmd(a, out),
        Command::Extract(a) => extract(a, out),
        Command::Table1(a) => table1(a, out),
        Command::Compare(a) => compare(a, out),
    }
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(out, "{text}").map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

enum Source {
    Circuit(ModuleModel),
    Surrogate(RbfSurrogate),
}

fn load_source(path: &Path) -> Result<Source> {
    match ModelDocument::read(path)? {
        doc @ ModelDocument::RbfSurrogate(_) => Ok(Source::Surrogate(doc.into_surrogate()?)),
        doc => Ok(Source::Circuit(doc.into_module()?)),
    }
}

fn load_module(path: &Path) -> Result<ModuleModel> {
    ModelDocument::read(path)?.into_module()
}

fn curve_path(base: &Path, g: f64, several: bool) -> PathBuf {
    if !several {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("curve");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_g{g}.{ext}"))
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    if a.g.is_empty() {
        return Err(Error::invalid("g", "at least one irradiance is required"));
    }
    let source = load_source(&a.model)?;
    let (src, t): (&dyn CurrentSource, f64) = match &source {
        Source::Circuit(m) => (m, a.t.unwrap_or_else(|| m.reference_temperature())),
        Source::Surrogate(s) => (s, a.t.unwrap_or(298.15)),
    };
    for &g in &a.g {
        let curve = sweep_curve(src, g, t, a.vmax, a.n)?;
        let path = curve_path(&a.out, g, a.g.len() > 1);
        write_curve_file(&curve, &path)?;
        say(out, format_args!("wrote {} ({} points, G={g})", path.display(), curve.len()))?;
    }
    Ok(())
}

fn gen_data(a: GenDataArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_module(&a.model)?;
    let kind = a.kind.into();
    let data = match (&a.grid, a.n) {
        (Some(gs), _) => generate_grid(&model, gs, [a.v_min, a.v_max], a.n_v, kind)?,
        (None, Some(n)) => generate_random(&model, n, [a.g_min, a.g_max], [a.v_min, a.v_max], kind, a.seed)?,
        (None, None) => return Err(Error::invalid("n", "give --n or --grid")),
    };
    write_dataset_file(&data, &a.out)?;
    say(out, format_args!("wrote {} ({} {kind} samples)", a.out.display(), data.len()))
}

fn read_data(path: &Path, kind: Option<OutputKind>) -> Result<crate::dataset::Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let kind = kind.or_else(|| declared_kind(&text)).unwrap_or(OutputKind::Current);
    parse_dataset(&text, kind)
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let data = read_data(&a.data, a.kind.map(Into::into))?;
    let cfg = TrainConfig {
        max_neurons: a.max_neurons,
        mse_goal: a.mse_goal,
        sigma_init: a.sigma,
        fine_tune_epochs: a.epochs,
        learning_rate: a.learning_rate,
        seed: a.seed,
        sigma_candidates: a.sigmas,
        holdout: a.holdout,
    };
    let outcome = train(&data, &cfg)?;
    ModelDocument::from(&outcome.surrogate).write(&a.out)?;
    for (sigma, t, h) in &outcome.candidates {
        match h {
            Some(h) => say(out, format_args!("sigma0={sigma} training_mse={t} holdout_mse={h}"))?,
            None => say(out, format_args!("sigma0={sigma} training_mse={t}"))?,
        }
    }
    say(
        out,
        format_args!(
            "neurons={} sigma={} relative_mse={}",
            outcome.surrogate.len(),
            outcome.surrogate.sigma(),
            outcome.training_mse
        ),
    )?;
    if let Some(h) = outcome.holdout_mse {
        say(out, format_args!("holdout_mse={h}"))?;
    }
    say(out, format_args!("wrote {}", a.out.display()))
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let net = ModelDocument::read(&a.net)?.into_surrogate()?;
    let data = read_data(&a.data, Some(net.output_kind()))?;
    let mse = relative_mse(&net, &data)?;
    say(out, format_args!("relative_mse={mse}"))
}

fn metrics_cmd(a: MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let curve = read_curve_file(&a.curve)?;
    let m = metrics(&curve, a.area)?;
    let opt = |x: Option<f64>| x.map_or_else(|| "absent".to_string(), |x| x.to_string());
    say(out, format_args!("isc={}", m.isc))?;
    say(out, format_args!("voc={}", opt(m.voc)))?;
    say(out, format_args!("vmp={}", m.vmp))?;
    say(out, format_args!("imp={}", m.imp))?;
    say(out, format_args!("pmp={}", m.pmp))?;
    say(out, format_args!("fill_factor={}", opt(m.fill_factor)))?;
    if a.area.is_some() {
        say(out, format_args!("efficiency={}", opt(m.efficiency)))?;
    }
    Ok(())
}

fn extract(a: ExtractArgs, out: &mut dyn Write) -> Result<()> {
    let init = load_module(&a.init)?;
    let crate::circuit::CircuitModel::FiveParam(init_model) = init.circuit else {
        return Err(Error::Document("extraction needs a five_param starting model".into()));
    };
    let curves = a
        .curves
        .iter()
        .map(|p| read_curve_file(p))
        .collect::<Result<Vec<_>>>()?;
    let cfg = FitConfig {
        goal: a.goal,
        max_iterations: a.max_iterations,
        irradiance_ref: init.irradiance_ref,
        jacobian: if a.analytic {
            JacobianMethod::Analytic
        } else {
            JacobianMethod::ForwardDifference
        },
        ..FitConfig::default()
    };
    let report = fit_five_param(&curves, &init_model, &cfg)?;
    ModelDocument::from(&report).write(&a.out)?;
    let m = &report.model;
    say(
        out,
        format_args!(
            "photocurrent={} saturation_current={} ideality={} series_resistance={} shunt_resistance={}",
            m.photocurrent, m.saturation_current, m.ideality, m.series_resistance, m.shunt_resistance
        ),
    )?;
    say(
        out,
        format_args!(
            "residual_norm={} iterations={} converged={}",
            report.residual_norm, report.iterations, report.converged
        ),
    )?;
    say(out, format_args!("wrote {}", a.out.display()))
}

fn table1(a: Table1Args, out: &mut dyn Write) -> Result<()> {
    let net = match a.which {
        Kind::Current => table1_current_network(a.sigma)?,
        Kind::Power => table1_power_network(a.sigma)?,
    };
    ModelDocument::from(&net).write(&a.out)?;
    say(out, format_args!("wrote {} ({} neurons)", a.out.display(), net.len()))
}

fn compare(a: CompareArgs, out: &mut dyn Write) -> Result<()> {
    let r = compare_curves(&read_curve_file(&a.reference)?, &read_curve_file(&a.other)?)?;
    say(out, format_args!("relative_mse_current={}", r.relative_mse_current))?;
    say(out, format_args!("relative_mse_power={}", r.relative_mse_power))?;
    say(out, format_args!("max_abs_current={}", r.max_abs_current))?;
    say(out, format_args!("max_abs_power={}", r.max_abs_power))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("pvrbf").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let (code, _, err) = run_str(&["eval", "--bogus"]);
        assert_eq!(code, 1);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("table1"));
    }

    #[test]
    fn curve_paths_per_irradiance() {
        let p = Path::new("/tmp/out/curve.csv");
        assert_eq!(curve_path(p, 600.0, false), p);
        assert_eq!(curve_path(p, 600.0, true), Path::new("/tmp/out/curve_g600.csv"));
    }

    #[test]
    fn missing_model_file_is_exit_one() {
        let (code, _, err) = run_str(&["simulate", "--model", "/nonexistent/m.json", "--out", "/tmp/x.csv"]);
        assert_eq!(code, 1);
        assert!(err.contains("error"));
    }
}
