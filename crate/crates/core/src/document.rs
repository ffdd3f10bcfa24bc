//! JSON model documents.
//!
//! Surrogates and circuit models share one schema family, told apart by the
//! `type` field:
//!
//! ```json
//! {"type": "rbf_surrogate", "version": 1, "output_kind": "current",
//!  "kernel_mode": "sum_of_squares", "sigma": 0.31, "output_bias": 0.0,
//!  "scaling": {"v": {"offset": 0.0, "scale": 30.0}, "g": {"offset": 200.0, "scale": 800.0}},
//!  "neurons": [{"w": 1.2, "c_v": 12.0, "c_g": 600.0}]}
//!
//! {"type": "five_param", "version": 1, "photocurrent": 5.0, "saturation_current": 5e-9,
//!  "ideality": 1.3, "series_resistance": 0.3, "shunt_resistance": 200.0,
//!  "n_series": 36, "temperature": 298.15, "irradiance_ref": 1000.0}
//! ```
//!
//! Numbers are written with the shortest representation that round-trips, so
//! a write/read cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{
    CircuitModel, FiveParamModel, ModuleModel, SevenParamExtension, ThermalContext, TwoDiodeModel,
};
use crate::error::{Error, Result};
use crate::extraction::FitReport;
use crate::rbf::{InputScaling, KernelMode, RbfNeuron, RbfSurrogate};
use crate::OutputKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeuronDoc {
    pub w: f64,
    pub c_v: f64,
    pub c_g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateDoc {
    pub version: u32,
    pub output_kind: OutputKind,
    pub kernel_mode: KernelMode,
    pub sigma: f64,
    #[serde(default)]
    pub output_bias: f64,
    pub scaling: InputScaling,
    pub neurons: Vec<NeuronDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionDoc {
    pub rs_ref: f64,
    pub delta: f64,
    pub t_ref: f64,
    pub i0_ref: f64,
    pub g_ref: f64,
    pub m_exponent: f64,
    #[serde(default)]
    pub eg_ref_over_k: f64,
    #[serde(default)]
    pub eg_temp_coeff: f64,
}

fn default_irradiance_ref() -> f64 {
    1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiveParamDoc {
    pub version: u32,
    pub photocurrent: f64,
    pub saturation_current: f64,
    pub ideality: f64,
    pub series_resistance: f64,
    pub shunt_resistance: f64,
    pub n_series: u32,
    pub temperature: f64,
    #[serde(default = "default_irradiance_ref")]
    pub irradiance_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seven_param: Option<ExtensionDoc>,
}

fn default_eta1() -> f64 {
    1.0
}

fn default_eta2() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoDiodeDoc {
    pub version: u32,
    pub photocurrent: f64,
    pub i01: f64,
    pub i02: f64,
    #[serde(default = "default_eta1")]
    pub eta1: f64,
    #[serde(default = "default_eta2")]
    pub eta2: f64,
    pub series_resistance: f64,
    pub shunt_resistance: f64,
    pub n_series: u32,
    pub temperature: f64,
    #[serde(default = "default_irradiance_ref")]
    pub irradiance_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seven_param: Option<ExtensionDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReportDoc {
    pub version: u32,
    pub model: FiveParamDoc,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub relative_step: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelDocument {
    RbfSurrogate(SurrogateDoc),
    FiveParam(FiveParamDoc),
    TwoDiode(TwoDiodeDoc),
    FitReport(FitReportDoc),
}

impl ModelDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        let version = match &doc {
            ModelDocument::RbfSurrogate(d) => d.version,
            ModelDocument::FiveParam(d) => d.version,
            ModelDocument::TwoDiode(d) => d.version,
            ModelDocument::FitReport(d) => d.version,
        };
        if version != SCHEMA_VERSION {
            return Err(Error::Document(format!(
                "unsupported version {version}, expected {SCHEMA_VERSION}"
            )));
        }
        Ok(doc)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            ModelDocument::RbfSurrogate(_) => "rbf_surrogate",
            ModelDocument::FiveParam(_) => "five_param",
            ModelDocument::TwoDiode(_) => "two_diode",
            ModelDocument::FitReport(_) => "fit_report",
        }
    }

    pub fn into_surrogate(self) -> Result<RbfSurrogate> {
        match self {
            ModelDocument::RbfSurrogate(d) => surrogate_from_doc(d),
            other => Err(Error::Document(format!(
                "expected an rbf_surrogate document, found {}",
                other.type_name()
            ))),
        }
    }

    /// The circuit model described by this document. A fit report yields its fitted model.
    pub fn into_module(self) -> Result<ModuleModel> {
        match self {
            ModelDocument::FiveParam(d) => module_from_five_param_doc(&d),
            ModelDocument::TwoDiode(d) => {
                let thermal = ThermalContext::new(d.n_series, d.temperature)?;
                let m = TwoDiodeModel {
                    photocurrent: d.photocurrent,
                    i01: d.i01,
                    i02: d.i02,
                    eta1: d.eta1,
                    eta2: d.eta2,
                    series_resistance: d.series_resistance,
                    shunt_resistance: d.shunt_resistance,
                    thermal,
                };
                let module = ModuleModel::new(CircuitModel::TwoDiode(m), d.irradiance_ref)?;
                attach_extension(module, d.seven_param.as_ref())
            }
            ModelDocument::FitReport(d) => module_from_five_param_doc(&d.model),
            ModelDocument::RbfSurrogate(_) => Err(Error::Document(
                "expected a circuit model document, found rbf_surrogate".into(),
            )),
        }
    }
}

fn attach_extension(module: ModuleModel, ext: Option<&ExtensionDoc>) -> Result<ModuleModel> {
    match ext {
        None => Ok(module),
        Some(e) => module.with_extension(SevenParamExtension {
            rs_ref: e.rs_ref,
            delta: e.delta,
            t_ref: e.t_ref,
            i0_ref: e.i0_ref,
            g_ref: e.g_ref,
            m_exponent: e.m_exponent,
            eg_ref_over_k: e.eg_ref_over_k,
            eg_temp_coeff: e.eg_temp_coeff,
        }),
    }
}

fn extension_doc(e: &SevenParamExtension) -> ExtensionDoc {
    ExtensionDoc {
        rs_ref: e.rs_ref,
        delta: e.delta,
        t_ref: e.t_ref,
        i0_ref: e.i0_ref,
        g_ref: e.g_ref,
        m_exponent: e.m_exponent,
        eg_ref_over_k: e.eg_ref_over_k,
        eg_temp_coeff: e.eg_temp_coeff,
    }
}

fn module_from_five_param_doc(d: &FiveParamDoc) -> Result<ModuleModel> {
    let thermal = ThermalContext::new(d.n_series, d.temperature)?;
    let m = FiveParamModel::new(
        d.photocurrent,
        d.saturation_current,
        d.ideality,
        d.series_resistance,
        d.shunt_resistance,
        thermal,
    )?;
    let module = ModuleModel::five_param(m, d.irradiance_ref)?;
    attach_extension(module, d.seven_param.as_ref())
}

pub fn five_param_doc(model: &FiveParamModel, irradiance_ref: f64) -> FiveParamDoc {
    FiveParamDoc {
        version: SCHEMA_VERSION,
        photocurrent: model.photocurrent,
        saturation_current: model.saturation_current,
        ideality: model.ideality,
        series_resistance: model.series_resistance,
        shunt_resistance: model.shunt_resistance,
        n_series: model.thermal.n_series(),
        temperature: model.thermal.temperature(),
        irradiance_ref,
        seven_param: None,
    }
}

impl From<&ModuleModel> for ModelDocument {
    fn from(module: &ModuleModel) -> Self {
        let ext = module.extension.as_ref().map(extension_doc);
        match &module.circuit {
            CircuitModel::FiveParam(m) => ModelDocument::FiveParam(FiveParamDoc {
                seven_param: ext,
                ..five_param_doc(m, module.irradiance_ref)
            }),
            CircuitModel::TwoDiode(m) => ModelDocument::TwoDiode(TwoDiodeDoc {
                version: SCHEMA_VERSION,
                photocurrent: m.photocurrent,
                i01: m.i01,
                i02: m.i02,
                eta1: m.eta1,
                eta2: m.eta2,
                series_resistance: m.series_resistance,
                shunt_resistance: m.shunt_resistance,
                n_series: m.thermal.n_series(),
                temperature: m.thermal.temperature(),
                irradiance_ref: module.irradiance_ref,
                seven_param: ext,
            }),
        }
    }
}

impl From<&RbfSurrogate> for ModelDocument {
    fn from(s: &RbfSurrogate) -> Self {
        ModelDocument::RbfSurrogate(SurrogateDoc {
            version: SCHEMA_VERSION,
            output_kind: s.output_kind(),
            kernel_mode: s.kernel_mode(),
            sigma: s.sigma(),
            output_bias: s.output_bias(),
            scaling: *s.scaling(),
            neurons: s
                .neurons()
                .iter()
                .map(|n| NeuronDoc {
                    w: n.weight,
                    c_v: n.centroid_v,
                    c_g: n.centroid_g,
                    c_t: n.centroid_t,
                })
                .collect(),
        })
    }
}

impl From<&FitReport> for ModelDocument {
    fn from(r: &FitReport) -> Self {
        ModelDocument::FitReport(FitReportDoc {
            version: SCHEMA_VERSION,
            model: five_param_doc(&r.model, r.irradiance_ref),
            residual_norm: r.residual_norm,
            iterations: r.iterations,
            converged: r.converged,
            relative_step: r.relative_step,
        })
    }
}

fn surrogate_from_doc(d: SurrogateDoc) -> Result<RbfSurrogate> {
    let neurons = d
        .neurons
        .into_iter()
        .map(|n| RbfNeuron {
            weight: n.w,
            centroid_v: n.c_v,
            centroid_g: n.c_g,
            centroid_t: n.c_t,
        })
        .collect();
    RbfSurrogate::new(neurons, d.sigma, d.kernel_mode, d.scaling, d.output_kind, d.output_bias)
}

/// Serializes a surrogate to its JSON document.
pub fn serialize(surrogate: &RbfSurrogate) -> String {
    ModelDocument::from(surrogate).to_json()
}

/// Parses and validates a surrogate document.
pub fn deserialize(text: &str) -> Result<RbfSurrogate> {
    ModelDocument::from_json(text)?.into_surrogate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::reference_module;
    use crate::rbf::{table1_current_network, table1_power_network, Affine};

    #[test]
    fn table1_round_trip_is_exact() {
        for net in [table1_current_network(1.0).unwrap(), table1_power_network(0.37).unwrap()] {
            let back = deserialize(&serialize(&net)).unwrap();
            assert_eq!(back, net);
        }
    }

    #[test]
    fn awkward_floats_round_trip_bit_exactly() {
        let scaling = InputScaling {
            v: Affine::min_max(0.1, 29.999999999999996),
            g: Affine::min_max(200.00000000000003, 999.9),
            t: Some(Affine::min_max(273.15, 348.15)),
        };
        let neurons = vec![RbfNeuron {
            weight: std::f64::consts::PI * 1e-7,
            centroid_v: 1.0 / 3.0,
            centroid_g: 2.0_f64.sqrt() * 100.0,
            centroid_t: Some(298.15),
        }];
        let net = RbfSurrogate::new(
            neurons,
            0.1 + 0.2,
            KernelMode::SumOfSquares,
            scaling,
            OutputKind::Power,
            -1e-300,
        )
        .unwrap();
        let back = deserialize(&serialize(&net)).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.sigma().to_bits(), net.sigma().to_bits());
    }

    #[test]
    fn missing_sigma_is_named() {
        let text = serialize(&table1_current_network(1.0).unwrap());
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value.as_object_mut().unwrap().remove("sigma");
        let err = deserialize(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        let text = serialize(&table1_current_network(1.0).unwrap());
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["sigma"] = serde_json::json!(0.0);
        let err = deserialize(&value.to_string()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "sigma", .. }), "{err}");
        value["sigma"] = serde_json::json!(-2.0);
        assert!(deserialize(&value.to_string()).is_err());
    }

    #[test]
    fn circuit_documents_round_trip() {
        let module = ModuleModel::five_param(reference_module(), 1000.0).unwrap();
        let doc = ModelDocument::from(&module);
        let back = ModelDocument::from_json(&doc.to_json()).unwrap().into_module().unwrap();
        assert_eq!(back, module);

        let two = ModuleModel::new(
            CircuitModel::TwoDiode(TwoDiodeModel::from_five_param(&reference_module())),
            800.0,
        )
        .unwrap();
        let back = ModelDocument::from_json(&ModelDocument::from(&two).to_json())
            .unwrap()
            .into_module()
            .unwrap();
        assert_eq!(back, two);
    }

    #[test]
    fn document_type_is_checked() {
        let text = serialize(&table1_current_network(1.0).unwrap());
        assert!(ModelDocument::from_json(&text).unwrap().into_module().is_err());
        let bad = r#"{"type": "mystery", "version": 1}"#;
        assert!(ModelDocument::from_json(bad).is_err());
        let future = text.replace("\"version\": 1", "\"version\": 9");
        assert!(ModelDocument::from_json(&future).is_err());
    }
}
