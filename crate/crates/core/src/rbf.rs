//! Radial-basis-function surrogates.
//!
//! A surrogate is a weighted sum of Gaussian neurons with a shared spread `σ`:
//!
//! ```text
//! y(x) = bias + Σ_j w_j exp(-D_j(x) / σ²)
//! ```
//!
//! where `D_j` is either the squared Euclidean distance to the centroid
//! ([`KernelMode::SumOfSquares`]) or the product of the squared per-coordinate
//! differences ([`KernelMode::ProductOfSquares`], the form in which the
//! published 16-neuron networks are written). Inputs pass through a
//! per-dimension affine map before the distance is taken.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use crate::OutputKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    SumOfSquares,
    ProductOfSquares,
}

/// `x ↦ (x - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub offset: f64,
    pub scale: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        offset: 0.0,
        scale: 1.0,
    };

    /// Maps `[min, max]` onto `[0, 1]`; a degenerate range keeps unit scale.
    pub fn min_max(min: f64, max: f64) -> Self {
        let span = max - min;
        Affine {
            offset: min,
            scale: if span > 0.0 { span } else { 1.0 },
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }

    #[inline]
    pub fn invert(&self, u: f64) -> f64 {
        self.offset + self.scale * u
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite() && self.offset.is_finite()) {
            return Err(Error::invalid(
                name,
                format!("scale must be finite and > 0 (got offset {}, scale {})", self.offset, self.scale),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputScaling {
    pub v: Affine,
    pub g: Affine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Affine>,
}

impl InputScaling {
    pub fn identity() -> Self {
        Self {
            v: Affine::IDENTITY,
            g: Affine::IDENTITY,
            t: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.v.validate("scaling.v")?;
        self.g.validate("scaling.g")?;
        if let Some(t) = &self.t {
            t.validate("scaling.t")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfNeuron {
    pub weight: f64,
    /// volt
    pub centroid_v: f64,
    /// W/m²
    pub centroid_g: f64,
    /// kelvin; only in three-input networks
    pub centroid_t: Option<f64>,
}

impl RbfNeuron {
    pub fn new(weight: f64, centroid_v: f64, centroid_g: f64) -> Self {
        Self {
            weight,
            centroid_v,
            centroid_g,
            centroid_t: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.weight.is_finite() {
            return Err(Error::invalid("weight", "must be finite"));
        }
        if !(-5.0..=100.0).contains(&self.centroid_v) {
            return Err(Error::invalid(
                "centroid_v",
                format!("must lie in [-5, 100] V, got {}", self.centroid_v),
            ));
        }
        if !(0.0..=2000.0).contains(&self.centroid_g) {
            return Err(Error::invalid(
                "centroid_g",
                format!("must lie in [0, 2000] W/m², got {}", self.centroid_g),
            ));
        }
        if let Some(t) = self.centroid_t {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid("centroid_t", format!("must be > 0 K, got {t}")));
            }
        }
        Ok(())
    }
}

/// Surrogate input: load voltage, irradiance and optionally temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputPoint {
    pub voltage: f64,
    pub irradiance: f64,
    pub temperature: Option<f64>,
}

impl InputPoint {
    pub fn new(voltage: f64, irradiance: f64) -> Self {
        Self {
            voltage,
            irradiance,
            temperature: None,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = Some(temperature);
        self
    }
}

/// Kernel distance `D` between a point and a centroid, both already scaled.
#[inline]
pub(crate) fn kernel_distance(mode: KernelMode, diffs: &[f64]) -> f64 {
    match mode {
        KernelMode::SumOfSquares => diffs.iter().map(|d| d * d).sum(),
        KernelMode::ProductOfSquares => diffs.iter().map(|d| d * d).product(),
    }
}

/// Gaussian activation of one neuron, in `(0, 1]`.
pub fn gaussian_activation(
    x: &InputPoint,
    neuron: &RbfNeuron,
    sigma: f64,
    mode: KernelMode,
    scaling: &InputScaling,
) -> f64 {
    let mut diffs = [0.0; 3];
    let mut n = 2;
    diffs[0] = scaling.v.apply(x.voltage) - scaling.v.apply(neuron.centroid_v);
    diffs[1] = scaling.g.apply(x.irradiance) - scaling.g.apply(neuron.centroid_g);
    if let (Some(t), Some(ct)) = (x.temperature, neuron.centroid_t) {
        let st = scaling.t.unwrap_or(Affine::IDENTITY);
        diffs[2] = st.apply(t) - st.apply(ct);
        n = 3;
    }
    (-kernel_distance(mode, &diffs[..n]) / (sigma * sigma)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbfSurrogate {
    neurons: Vec<RbfNeuron>,
    sigma: f64,
    kernel_mode: KernelMode,
    scaling: InputScaling,
    output_kind: OutputKind,
    output_bias: f64,
}

impl RbfSurrogate {
    pub fn new(
        neurons: Vec<RbfNeuron>,
        sigma: f64,
        kernel_mode: KernelMode,
        scaling: InputScaling,
        output_kind: OutputKind,
        output_bias: f64,
    ) -> Result<Self> {
        let s = Self {
            neurons,
            sigma,
            kernel_mode,
            scaling,
            output_kind,
            output_bias,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be finite and > 0, got {}", self.sigma)));
        }
        if !self.output_bias.is_finite() {
            return Err(Error::invalid("output_bias", "must be finite"));
        }
        self.scaling.validate()?;
        for n in &self.neurons {
            n.validate()?;
        }
        let with_t = self.neurons.iter().filter(|n| n.centroid_t.is_some()).count();
        if with_t != 0 && with_t != self.neurons.len() {
            return Err(Error::invalid(
                "centroid_t",
                "either every neuron or none must carry a temperature centroid",
            ));
        }
        Ok(())
    }

    pub fn neurons(&self) -> &[RbfNeuron] {
        &self.neurons
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kernel_mode(&self) -> KernelMode {
        self.kernel_mode
    }

    pub fn scaling(&self) -> &InputScaling {
        &self.scaling
    }

    pub fn output_kind(&self) -> OutputKind {
        self.output_kind
    }

    pub fn output_bias(&self) -> f64 {
        self.output_bias
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    /// True when the network expects a temperature input.
    pub fn uses_temperature(&self) -> bool {
        self.neurons.first().is_some_and(|n| n.centroid_t.is_some())
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_neurons(mut self, neurons: Vec<RbfNeuron>) -> Result<Self> {
        self.neurons = neurons;
        self.validate()?;
        Ok(self)
    }

    pub fn with_output_bias(mut self, bias: f64) -> Result<Self> {
        self.output_bias = bias;
        self.validate()?;
        Ok(self)
    }

    pub fn activation(&self, x: &InputPoint, neuron: &RbfNeuron) -> f64 {
        gaussian_activation(x, neuron, self.sigma, self.kernel_mode, &self.scaling)
    }

    /// `bias + Σ w_j φ_j(x)`, accumulated in stored neuron order with compensation.
    pub fn evaluate(&self, x: &InputPoint) -> Result<f64> {
        if self.neurons.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        if self.uses_temperature() && x.temperature.is_none() {
            return Err(Error::Data(
                "network has a temperature input but the point has none".into(),
            ));
        }
        let mut acc = CompensatedSum::new(self.output_bias);
        for n in &self.neurons {
            acc.add(n.weight * self.activation(x, n));
        }
        Ok(acc.value())
    }
}

/// Published weights and centroids: `(w, c_v, c_g)` per neuron, current network.
pub const TABLE1_CURRENT: [(f64, f64, f64); 16] = [
    (5.46, 12.56, 200.0),
    (3.40, 7.54, 1000.0),
    (1.60, 22.50, 200.0),
    (5.84, 11.25, 600.0),
    (0.17, 18.75, 600.0),
    (3.53, 27.52, 1000.0),
    (-1.03, 17.56, 200.0),
    (0.71, 18.75, 200.0),
    (2.65, 7.50, 1000.0),
    (2.01, 2.52, 200.0),
    (1.48, 26.25, 600.0),
    (1.20, 26.25, 1000.0),
    (-629.95, 3.75, 200.0),
    (629.51, 3.75, 600.0),
    (-7.39, 11.25, 200.0),
    (8.96, 22.55, 200.0),
];

/// Published weights and centroids, power network.
pub const TABLE1_POWER: [(f64, f64, f64); 16] = [
    (-508.62, 13.05, 200.0),
    (234.13, 18.74, 1000.0),
    (80.66, 20.58, 200.0),
    (11.30, 18.76, 600.0),
    (-13291.85, 26.25, 600.0),
    (32.03, 11.24, 1000.0),
    (-30.05, 9.31, 200.0),
    (-323980.43, 28.12, 200.0),
    (324721.68, 26.25, 1000.0),
    (-391.01, 16.81, 200.0),
    (-4.21, 11.27, 600.0),
    (-1241.57, 3.75, 1000.0),
    (1397.96, 24.35, 200.0),
    (20.57, 3.76, 600.0),
    (13018.81, 1.86, 200.0),
    (30.81, 5.58, 200.0),
];

fn table1_network(rows: &[(f64, f64, f64); 16], sigma: f64, kind: OutputKind) -> Result<RbfSurrogate> {
    let neurons = rows
        .iter()
        .map(|&(w, cv, cg)| RbfNeuron::new(w, cv, cg))
        .collect();
    RbfSurrogate::new(
        neurons,
        sigma,
        KernelMode::ProductOfSquares,
        InputScaling::identity(),
        kind,
        0.0,
    )
}

/// The published 16-neuron current network in raw units. The spread was not
/// published, so it must be supplied.
pub fn table1_current_network(sigma: f64) -> Result<RbfSurrogate> {
    table1_network(&TABLE1_CURRENT, sigma, OutputKind::Current)
}

/// The published 16-neuron power network in raw units.
pub fn table1_power_network(sigma: f64) -> Result<RbfSurrogate> {
    table1_network(&TABLE1_POWER, sigma, OutputKind::Power)
}
