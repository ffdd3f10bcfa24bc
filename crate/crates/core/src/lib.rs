//! Photovoltaic module I–V and P–V modeling.
//!
//! Two families of models live side by side:
//!
//! * [`circuit`]: single-diode (five-parameter) and two-diode equivalent
//!   circuits, solved numerically for the terminal current, with the
//!   seven-parameter temperature/irradiance adjustments.
//! * [`rbf`]: radial-basis-function surrogates mapping `(V, G[, T])` to current
//!   or power, including the published 16-neuron networks
//!   ([`rbf::table1_current_network`], [`rbf::table1_power_network`]).
//!
//! [`train`] builds surrogates from data, [`dataset`] generates and stores that
//! data, [`characteristics`] sweeps curves and extracts figures of merit, and
//! [`extraction`] fits circuit parameters back from curves.
//!
//! Each capability has a runnable program under `examples/`:
//!
//! ```bash
//! cargo run --release --example circuit_curves
//! cargo run --release --example table1_networks
//! cargo run --release --example train_current_surrogate
//! cargo run --release --example train_power_surrogate
//! cargo run --release --example extract_parameters
//! cargo run --release --example seven_parameter_conditions
//! cargo run --release --example dataset_roundtrip
//! ```
//!
//! The `pvrbf` binary wraps the same operations as subcommands.

pub mod characteristics;
pub mod circuit;
pub mod cli;
pub mod dataset;
pub mod document;
pub mod error;
pub mod extraction;
pub mod rbf;
mod sum;
pub mod train;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use characteristics::{compare_curves, metrics, sweep_curve, Curve, CurveMetrics, CurrentSource};
pub use circuit::{
    photocurrent_at_irradiance, reference_module, thermal_voltage, CircuitModel, DiodeCircuit,
    FiveParamModel, ModuleModel, SevenParamExtension, SolverOptions, ThermalContext, TwoDiodeModel,
};
pub use dataset::{Dataset, Sample};
pub use error::{Error, Result};
pub use extraction::{fit_five_param, FitConfig, FitReport};
pub use rbf::{InputPoint, InputScaling, KernelMode, RbfNeuron, RbfSurrogate};
pub use train::{build_greedy, fine_tune, relative_mse, TrainConfig};

/// What a dataset target or a surrogate output represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Current,
    Power,
}

impl OutputKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputKind::Current => "current",
            OutputKind::Power => "power",
        }
    }
}

impl fmt::Display for OutputKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OutputKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "current" => Ok(OutputKind::Current),
            "power" => Ok(OutputKind::Power),
            other => Err(Error::invalid("kind", format!("expected current or power, got `{other}`"))),
        }
    }
}
