//! I–V / P–V curve sweeps and figures of merit.

use crate::circuit::ModuleModel;
use crate::error::{Error, Result};
use crate::rbf::{InputPoint, RbfSurrogate};
use crate::OutputKind;

/// Anything that yields a terminal current at `(G, T, V)`.
pub trait CurrentSource {
    fn current_at(&self, g: f64, t: f64, v: f64) -> Result<f64>;

    fn source_tag(&self) -> String;

    /// Refines an open-circuit voltage known to lie in `[lo, hi]`. Sources
    /// without an implicit residual return `None`.
    fn refine_voc(&self, _g: f64, _t: f64, _lo: f64, _hi: f64) -> Option<Result<f64>> {
        None
    }
}

impl CurrentSource for ModuleModel {
    fn current_at(&self, g: f64, t: f64, v: f64) -> Result<f64> {
        self.current(g, t, v)
    }

    fn source_tag(&self) -> String {
        self.circuit.kind_name().to_string()
    }

    fn refine_voc(&self, g: f64, t: f64, lo: f64, hi: f64) -> Option<Result<f64>> {
        Some(
            self.at_conditions(g, t)
                .and_then(|c| c.as_circuit().open_circuit_voltage_between(lo, hi, &self.solver)),
        )
    }
}

impl CurrentSource for RbfSurrogate {
    fn current_at(&self, g: f64, t: f64, v: f64) -> Result<f64> {
        if self.output_kind() != OutputKind::Current {
            return Err(Error::WrongOutputKind(self.output_kind().as_str()));
        }
        let mut x = InputPoint::new(v, g);
        if self.uses_temperature() {
            x = x.with_temperature(t);
        }
        self.evaluate(&x)
    }

    fn source_tag(&self) -> String {
        format!("rbf_surrogate({} neurons)", self.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub v: f64,
    pub i: f64,
    pub p: f64,
}

/// A voltage sweep at fixed irradiance and temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub irradiance: f64,
    pub temperature: f64,
    points: Vec<CurvePoint>,
    pub source_tag: String,
}

impl Curve {
    /// Builds a curve from `(v, i)` pairs; `p` is computed as `v * i`.
    pub fn from_vi(
        irradiance: f64,
        temperature: f64,
        source_tag: impl Into<String>,
        vi: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        let points: Vec<CurvePoint> = vi
            .into_iter()
            .map(|(v, i)| CurvePoint { v, i, p: v * i })
            .collect();
        for (k, pt) in points.iter().enumerate() {
            if !(pt.v.is_finite() && pt.i.is_finite()) {
                return Err(Error::MalformedCurve(format!("non-finite value at point {k}")));
            }
        }
        if let Some(k) = points.windows(2).position(|w| w[1].v <= w[0].v) {
            return Err(Error::MalformedCurve(format!(
                "voltages must be strictly increasing (point {})",
                k + 1
            )));
        }
        Ok(Self {
            irradiance,
            temperature,
            points,
            source_tag: source_tag.into(),
        })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn voltages(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.v)
    }

    /// Current by linear interpolation (linear extrapolation outside the sweep).
    pub fn interpolate_current(&self, v: f64) -> f64 {
        let pts = &self.points;
        let k = pts.partition_point(|p| p.v <= v).clamp(1, pts.len() - 1);
        let (a, b) = (pts[k - 1], pts[k]);
        a.i + (b.i - a.i) * (v - a.v) / (b.v - a.v)
    }
}

/// `n` evenly spaced voltages from 0 to `v_max` inclusive.
pub fn voltage_grid(v_min: f64, v_max: f64, n: usize) -> Vec<f64> {
    let last = n.saturating_sub(1).max(1) as f64;
    (0..n)
        .map(|k| {
            if k + 1 == n {
                v_max
            } else {
                v_min + (v_max - v_min) * k as f64 / last
            }
        })
        .collect()
}

pub fn sweep_curve<S: CurrentSource + ?Sized>(
    source: &S,
    g: f64,
    t: f64,
    v_max: f64,
    n: usize,
) -> Result<Curve> {
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2 points, got {n}")));
    }
    if !(v_max > 0.0 && v_max.is_finite()) {
        return Err(Error::invalid("v_max", format!("must be > 0, got {v_max}")));
    }
    let vi = voltage_grid(0.0, v_max, n)
        .into_iter()
        .map(|v| {
            source
                .current_at(g, t, v)
                .map(|i| (v, i))
                .map_err(|e| e.at_voltage(v))
        })
        .collect::<Result<Vec<_>>>()?;
    Curve::from_vi(g, t, source.source_tag(), vi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveMetrics {
    pub isc: f64,
    /// Absent when the sweep ends before the current crosses zero.
    pub voc: Option<f64>,
    pub vmp: f64,
    pub imp: f64,
    pub pmp: f64,
    pub fill_factor: Option<f64>,
    pub efficiency: Option<f64>,
}

/// Figures of merit from the curve alone.
pub fn metrics(curve: &Curve, module_area: Option<f64>) -> Result<CurveMetrics> {
    compute_metrics(curve, None::<&ModuleModel>, module_area)
}

/// Figures of merit with `Voc` and the maximum power point refined against `source`.
pub fn metrics_with_source<S: CurrentSource + ?Sized>(
    curve: &Curve,
    source: &S,
    module_area: Option<f64>,
) -> Result<CurveMetrics> {
    compute_metrics(curve, Some(source), module_area)
}

const GOLDEN_RESOLUTION: f64 = 1e-6;

fn compute_metrics<S: CurrentSource + ?Sized>(
    curve: &Curve,
    source: Option<&S>,
    module_area: Option<f64>,
) -> Result<CurveMetrics> {
    let pts = curve.points();
    if pts.len() < 3 {
        return Err(Error::MalformedCurve(format!(
            "need at least 3 points, got {}",
            pts.len()
        )));
    }
    if let Some(area) = module_area {
        if !(area > 0.0) {
            return Err(Error::invalid("area", format!("must be > 0, got {area}")));
        }
    }
    let (g, t) = (curve.irradiance, curve.temperature);

    let isc = if pts[0].v == 0.0 {
        pts[0].i
    } else {
        curve.interpolate_current(0.0)
    };
    if !(isc > 0.0) {
        return Err(Error::MalformedCurve(format!(
            "short-circuit current must be positive, got {isc}"
        )));
    }

    let voc = match pts.iter().position(|p| p.i <= 0.0) {
        Some(k) => {
            let (a, b) = (pts[k - 1], pts[k]);
            let linear = if b.i == 0.0 {
                b.v
            } else {
                a.v + (b.v - a.v) * a.i / (a.i - b.i)
            };
            Some(match source.and_then(|s| s.refine_voc(g, t, a.v, b.v)) {
                Some(refined) => refined?,
                None => linear,
            })
        }
        None => {
            if pts[pts.len() - 1].i > pts[0].i {
                return Err(Error::MalformedCurve(
                    "current never crosses zero and increases with voltage".into(),
                ));
            }
            None
        }
    };

    let power_at = |v: f64| -> Result<f64> {
        let i = match source {
            Some(s) => s.current_at(g, t, v)?,
            None => curve.interpolate_current(v),
        };
        Ok(v * i)
    };

    let (j, _) = pts
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, p)| if p.p > best.1 { (k, p.p) } else { best });
    let lo = pts[j.saturating_sub(1)].v;
    let hi = pts[(j + 1).min(pts.len() - 1)].v;
    let refined = golden_section_max(&power_at, lo, hi, GOLDEN_RESOLUTION)?;
    let (vmp, imp) = if refined.1 > pts[j].p {
        (refined.0, refined.1 / refined.0)
    } else {
        (pts[j].v, pts[j].i)
    };
    let imp = if vmp == pts[j].v { pts[j].i } else { imp };
    let pmp = vmp * imp;

    let fill_factor = voc.map(|voc| pmp / (voc * isc));
    let efficiency = module_area.map(|area| pmp / (g * area));
    Ok(CurveMetrics {
        isc,
        voc,
        vmp,
        imp,
        pmp,
        fill_factor,
        efficiency,
    })
}

fn golden_section_max(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    resolution: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > resolution {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let v = 0.5 * (a + b);
    Ok((v, f(v)?))
}

/// Deviation statistics between two curves on the same voltage grid; `a` is the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveComparison {
    pub relative_mse_current: f64,
    pub relative_mse_power: f64,
    pub max_abs_current: f64,
    pub max_abs_power: f64,
}

fn relative_error(num: f64, den: f64) -> Result<f64> {
    if num == 0.0 {
        Ok(0.0)
    } else if den == 0.0 {
        Err(Error::ZeroTargets)
    } else {
        Ok(num / den)
    }
}

pub fn compare_curves(a: &Curve, b: &Curve) -> Result<CurveComparison> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} vs {} points", a.len(), b.len())));
    }
    if let Some(k) = a.voltages().zip(b.voltages()).position(|(x, y)| x != y) {
        return Err(Error::GridMismatch(format!("voltage differs at point {k}")));
    }
    let (mut ni, mut di, mut np, mut dp) = (0.0, 0.0, 0.0, 0.0);
    let (mut max_i, mut max_p) = (0.0_f64, 0.0_f64);
    for (pa, pb) in a.points().iter().zip(b.points()) {
        let (ei, ep) = (pb.i - pa.i, pb.p - pa.p);
        ni += ei * ei;
        di += pa.i * pa.i;
        np += ep * ep;
        dp += pa.p * pa.p;
        max_i = max_i.max(ei.abs());
        max_p = max_p.max(ep.abs());
    }
    Ok(CurveComparison {
        relative_mse_current: relative_error(ni, di)?,
        relative_mse_power: relative_error(np, dp)?,
        max_abs_current: max_i,
        max_abs_power: max_p,
    })
}
