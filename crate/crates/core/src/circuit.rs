//! Equivalent-circuit models of a PV module.
//!
//! The single-diode (five-parameter) and two-diode models are implicit in the
//! terminal current: for a fixed voltage `v` the current `i` is the root of
//!
//! ```text
//! f(i) = Iph - I0 (exp((v + i Rs) / (a Vt)) - 1) - (v + i Rs) / Rsh - i
//! ```
//!
//! (plus a second diode term for the two-diode model). `f` is strictly
//! decreasing in `i`, so the root is unique. It is found with a damped Newton
//! iteration that falls back to bisection; a pure bisection solver is kept as
//! an independent cross-check.
//!
//! [`SevenParamExtension`] adds the temperature dependence of `Rs` and the
//! irradiance/temperature dependence of `I0`, and [`ModuleModel`] ties a
//! circuit to reference conditions so it can be evaluated at any `(G, T)`.

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Elementary charge, C.
pub const ELECTRON_CHARGE: f64 = 1.602177e-19;
/// Largest diode exponent argument evaluated before reporting saturation.
pub const DEFAULT_EXPONENT_CAP: f64 = 250.0;

/// Number of series cells and the cell temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalContext {
    n_series: u32,
    temperature: f64,
}

impl ThermalContext {
    pub fn new(n_series: u32, temperature: f64) -> Result<Self> {
        if n_series == 0 {
            return Err(Error::invalid("n_series", "must be at least 1"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid(
                "temperature",
                format!("must be positive and finite, got {temperature}"),
            ));
        }
        Ok(Self {
            n_series,
            temperature,
        })
    }

    pub fn n_series(&self) -> u32 {
        self.n_series
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.n_series, temperature)
    }

    /// Module thermal voltage `Ns k T / q`.
    pub fn thermal_voltage(&self) -> f64 {
        f64::from(self.n_series) * BOLTZMANN * self.temperature / ELECTRON_CHARGE
    }
}

pub fn thermal_voltage(ctx: &ThermalContext) -> f64 {
    ctx.thermal_voltage()
}

/// Iteration controls shared by the current solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Residual tolerance, ampere.
    pub tol: f64,
    pub max_iterations: usize,
    /// Largest admissible |v|, volt.
    pub voltage_cap: f64,
    pub exponent_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 100,
            voltage_cap: 100.0,
            exponent_cap: DEFAULT_EXPONENT_CAP,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn check(&self, v: f64) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", format!("must be positive, got {}", self.tol)));
        }
        if !(v.abs() <= self.voltage_cap) {
            return Err(Error::invalid(
                "voltage",
                format!("|v| must not exceed {} V, got {v}", self.voltage_cap),
            ));
        }
        Ok(())
    }
}

fn guarded_exp_m1(argument: f64, cap: f64) -> Result<f64> {
    if argument <= cap {
        Ok(argument.exp_m1())
    } else {
        Err(Error::Saturation { argument, cap })
    }
}

/// Common surface of the implicit diode-circuit models.
pub trait DiodeCircuit {
    fn photocurrent(&self) -> f64;
    fn series_resistance(&self) -> f64;
    fn shunt_resistance(&self) -> f64;
    fn validate(&self) -> Result<()>;

    /// Residual `f(v, i)` and its partial derivative with respect to `i`.
    fn residual_with_slope(&self, v: f64, i: f64, exponent_cap: f64) -> Result<(f64, f64)>;

    /// Residual with the default exponent cap.
    fn residual(&self, v: f64, i: f64) -> Result<f64> {
        self.residual_with_slope(v, i, DEFAULT_EXPONENT_CAP)
            .map(|(f, _)| f)
    }

    /// Damped Newton solve for the terminal current, falling back to bisection.
    fn solve_current_with(&self, v: f64, opts: &SolverOptions) -> Result<f64> {
        self.validate()?;
        opts.check(v)?;
        newton_then_bisect(self, v, opts)
    }

    fn solve_current(&self, v: f64, tol: f64) -> Result<f64> {
        self.solve_current_with(v, &SolverOptions::default().with_tol(tol))
    }

    /// Pure bisection solve, independent of the Newton path.
    fn solve_current_bisect_with(&self, v: f64, opts: &SolverOptions) -> Result<f64> {
        self.validate()?;
        opts.check(v)?;
        let (lo, hi) = sign_bracket(self, v, opts)?;
        bisect(self, v, lo, hi, opts)
    }

    fn solve_current_bisect(&self, v: f64, tol: f64) -> Result<f64> {
        self.solve_current_bisect_with(v, &SolverOptions::default().with_tol(tol))
    }

    /// Terminal power `v * i` at the solved operating point.
    fn power_at_with(&self, v: f64, opts: &SolverOptions) -> Result<f64> {
        Ok(v * self.solve_current_with(v, opts)?)
    }

    fn power_at(&self, v: f64) -> Result<f64> {
        self.power_at_with(v, &SolverOptions::default())
    }

    /// Open-circuit voltage: the root of `f(v, 0)` on `[0, voltage_cap]`.
    fn open_circuit_voltage_with(&self, opts: &SolverOptions) -> Result<f64> {
        self.validate()?;
        open_circuit_voltage(self, opts)
    }

    fn open_circuit_voltage(&self) -> Result<f64> {
        self.open_circuit_voltage_with(&SolverOptions::default())
    }

    /// Open-circuit voltage within a known bracket `[lo, hi]`.
    fn open_circuit_voltage_between(&self, lo: f64, hi: f64, opts: &SolverOptions) -> Result<f64> {
        self.validate()?;
        voc_bisect(self, lo, hi, opts)
    }
}

/// Residual value where a saturated exponent counts as a large negative value:
/// a diode term beyond the cap dominates every other term.
fn signed_residual<C: DiodeCircuit + ?Sized>(c: &C, v: f64, i: f64, cap: f64) -> Result<f64> {
    match c.residual_with_slope(v, i, cap) {
        Ok((f, _)) => Ok(f),
        Err(Error::Saturation { .. }) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

const MAX_BRACKET_EXPANSIONS: usize = 64;
const MAX_STEP_HALVINGS: usize = 60;
const STALL_LIMIT: usize = 5;

/// Sign-change bracket seeded at `[-(v/Rsh + Iph + 1), Iph + 1]` and widened
/// geometrically until `f(lo) > 0 > f(hi)`.
fn sign_bracket<C: DiodeCircuit + ?Sized>(c: &C, v: f64, opts: &SolverOptions) -> Result<(f64, f64)> {
    let iph = c.photocurrent();
    let mut hi = iph + 1.0;
    let mut lo = (-(v / c.shunt_resistance() + iph + 1.0)).min(hi - 1.0);
    let cap = opts.exponent_cap;

    let mut f_lo = signed_residual(c, v, lo, cap)?;
    let mut f_hi = signed_residual(c, v, hi, cap)?;
    for _ in 0..MAX_BRACKET_EXPANSIONS {
        if f_lo > 0.0 && f_hi < 0.0 {
            return Ok((lo, hi));
        }
        let width = hi - lo;
        if f_lo <= 0.0 {
            lo -= width;
            f_lo = signed_residual(c, v, lo, cap)?;
        }
        if f_hi >= 0.0 {
            hi += width;
            f_hi = signed_residual(c, v, hi, cap)?;
        }
    }
    if f_lo > 0.0 && f_hi < 0.0 {
        return Ok((lo, hi));
    }
    Err(Error::InvalidBracket { lo, hi, f_lo, f_hi })
}

fn bisect<C: DiodeCircuit + ?Sized>(
    c: &C,
    v: f64,
    mut lo: f64,
    mut hi: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let cap = opts.exponent_cap;
    for _ in 0..opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        let f = signed_residual(c, v, mid, cap)?;
        if f.abs() < opts.tol {
            return Ok(mid);
        }
        if mid <= lo || mid >= hi {
            // Adjacent floats: the root is bracketed as tightly as f64 allows.
            let f_lo = signed_residual(c, v, lo, cap)?;
            let f_hi = signed_residual(c, v, hi, cap)?;
            return Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi });
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        lo,
        hi,
    })
}

fn newton_then_bisect<C: DiodeCircuit + ?Sized>(c: &C, v: f64, opts: &SolverOptions) -> Result<f64> {
    let cap = opts.exponent_cap;
    let fallback = |opts: &SolverOptions| -> Result<f64> {
        let (lo, hi) = sign_bracket(c, v, opts)?;
        bisect(c, v, lo, hi, opts)
    };

    let mut i = c.photocurrent();
    let (mut f, mut df) = match c.residual_with_slope(v, i, cap) {
        Ok(pair) => pair,
        Err(Error::Saturation { .. }) => return fallback(opts),
        Err(e) => return Err(e),
    };

    let mut stalls = 0;
    for _ in 0..opts.max_iterations {
        if f.abs() < opts.tol {
            return Ok(i);
        }
        let step = -f / df;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_STEP_HALVINGS {
            let candidate = i + scale * step;
            if let Ok((fc, dc)) = c.residual_with_slope(v, candidate, cap) {
                if fc.abs() < f.abs() {
                    accepted = Some((candidate, fc, dc));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((ni, nf, nd)) => {
                if nf.abs() > 0.5 * f.abs() {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                i = ni;
                f = nf;
                df = nd;
            }
            None => stalls = STALL_LIMIT,
        }
        if stalls >= STALL_LIMIT {
            return fallback(opts);
        }
    }
    if f.abs() < opts.tol {
        return Ok(i);
    }
    fallback(opts)
}

fn open_circuit_voltage<C: DiodeCircuit + ?Sized>(c: &C, opts: &SolverOptions) -> Result<f64> {
    let f0 = signed_residual(c, 0.0, 0.0, opts.exponent_cap)?;
    if f0 <= 0.0 {
        return Ok(0.0);
    }
    voc_bisect(c, 0.0, opts.voltage_cap, opts)
}

/// Bisection on `f(v, 0)`, which is strictly decreasing in `v`.
fn voc_bisect<C: DiodeCircuit + ?Sized>(c: &C, mut lo: f64, mut hi: f64, opts: &SolverOptions) -> Result<f64> {
    let cap = opts.exponent_cap;
    let f_lo = signed_residual(c, lo, 0.0, cap)?;
    let f_hi = signed_residual(c, hi, 0.0, cap)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::InvalidBracket { lo, hi, f_lo, f_hi });
    }
    let mut best = if f_lo.abs() <= f_hi.abs() { (f_lo.abs(), lo) } else { (f_hi.abs(), hi) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = signed_residual(c, mid, 0.0, cap)?;
        if f.abs() < best.0 {
            best = (f.abs(), mid);
        }
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.1)
}

/// Single-diode, five-parameter model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveParamModel {
    /// Iph, ampere.
    pub photocurrent: f64,
    /// I0, ampere.
    pub saturation_current: f64,
    /// Diode ideality factor `a`.
    pub ideality: f64,
    /// Rs, ohm.
    pub series_resistance: f64,
    /// Rsh, ohm.
    pub shunt_resistance: f64,
    pub thermal: ThermalContext,
}

impl FiveParamModel {
    pub fn new(
        photocurrent: f64,
        saturation_current: f64,
        ideality: f64,
        series_resistance: f64,
        shunt_resistance: f64,
        thermal: ThermalContext,
    ) -> Result<Self> {
        let model = Self {
            photocurrent,
            saturation_current,
            ideality,
            series_resistance,
            shunt_resistance,
            thermal,
        };
        model.validate()?;
        Ok(model)
    }

    /// Diode exponent scale `a Vt`.
    pub fn diode_voltage_scale(&self) -> f64 {
        self.ideality * self.thermal.thermal_voltage()
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

impl DiodeCircuit for FiveParamModel {
    fn photocurrent(&self) -> f64 {
        self.photocurrent
    }

    fn series_resistance(&self) -> f64 {
        self.series_resistance
    }

    fn shunt_resistance(&self) -> f64 {
        self.shunt_resistance
    }

    fn validate(&self) -> Result<()> {
        check_nonnegative("photocurrent", self.photocurrent)?;
        check_positive("saturation_current", self.saturation_current)?;
        check_positive("ideality", self.ideality)?;
        check_nonnegative("series_resistance", self.series_resistance)?;
        check_positive("shunt_resistance", self.shunt_resistance)
    }

    fn residual_with_slope(&self, v: f64, i: f64, exponent_cap: f64) -> Result<(f64, f64)> {
        let scale = self.diode_voltage_scale();
        let vd = v + i * self.series_resistance;
        let em1 = guarded_exp_m1(vd / scale, exponent_cap)?;
        let f = self.photocurrent - self.saturation_current * em1 - vd / self.shunt_resistance - i;
        let slope = -self.saturation_current * (em1 + 1.0) * self.series_resistance / scale
            - self.series_resistance / self.shunt_resistance
            - 1.0;
        Ok((f, slope))
    }
}

/// Two-diode model; the second diode captures recombination losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoDiodeModel {
    pub photocurrent: f64,
    pub i01: f64,
    pub i02: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub series_resistance: f64,
    pub shunt_resistance: f64,
    pub thermal: ThermalContext,
}

impl TwoDiodeModel {
    /// Model with the customary quality factors `eta1 = 1`, `eta2 = 2`.
    pub fn with_default_factors(
        photocurrent: f64,
        i01: f64,
        i02: f64,
        series_resistance: f64,
        shunt_resistance: f64,
        thermal: ThermalContext,
    ) -> Result<Self> {
        let model = Self {
            photocurrent,
            i01,
            i02,
            eta1: 1.0,
            eta2: 2.0,
            series_resistance,
            shunt_resistance,
            thermal,
        };
        model.validate()?;
        Ok(model)
    }

    /// The two-diode model that reduces exactly to `model` (`I02 = 0`, `eta1 = a`).
    ///
    /// `eta2` is kept at 1 so the unused second diode stays within its range.
    pub fn from_five_param(model: &FiveParamModel) -> Self {
        Self {
            photocurrent: model.photocurrent,
            i01: model.saturation_current,
            i02: 0.0,
            eta1: model.ideality,
            eta2: 1.0,
            series_resistance: model.series_resistance,
            shunt_resistance: model.shunt_resistance,
            thermal: model.thermal,
        }
    }
}

impl DiodeCircuit for TwoDiodeModel {
    fn photocurrent(&self) -> f64 {
        self.photocurrent
    }

    fn series_resistance(&self) -> f64 {
        self.series_resistance
    }

    fn shunt_resistance(&self) -> f64 {
        self.shunt_resistance
    }

    fn validate(&self) -> Result<()> {
        check_nonnegative("photocurrent", self.photocurrent)?;
        check_nonnegative("i01", self.i01)?;
        check_nonnegative("i02", self.i02)?;
        check_positive("eta1", self.eta1)?;
        if !(1.0..=2.0).contains(&self.eta2) {
            return Err(Error::invalid(
                "eta2",
                format!("must lie in [1, 2], got {}", self.eta2),
            ));
        }
        check_nonnegative("series_resistance", self.series_resistance)?;
        check_positive("shunt_resistance", self.shunt_resistance)
    }

    fn residual_with_slope(&self, v: f64, i: f64, exponent_cap: f64) -> Result<(f64, f64)> {
        let vt = self.thermal.thermal_voltage();
        let vd = v + i * self.series_resistance;
        let (n1, n2) = (self.eta1 * vt, self.eta2 * vt);
        let em1_1 = guarded_exp_m1(vd / n1, exponent_cap)?;
        // A diode with zero saturation current contributes nothing, whatever its exponent.
        let em1_2 = if self.i02 == 0.0 {
            0.0
        } else {
            guarded_exp_m1(vd / n2, exponent_cap)?
        };
        let f = self.photocurrent
            - self.i01 * em1_1
            - self.i02 * em1_2
            - vd / self.shunt_resistance
            - i;
        let rs = self.series_resistance;
        let slope = -self.i01 * (em1_1 + 1.0) * rs / n1
            - if self.i02 == 0.0 { 0.0 } else { self.i02 * (em1_2 + 1.0) * rs / n2 }
            - rs / self.shunt_resistance
            - 1.0;
        Ok((f, slope))
    }
}

/// Photocurrent at irradiance `g`, proportional to a reference value.
pub fn photocurrent_at_irradiance(iph_ref: f64, g: f64, g_ref: f64) -> f64 {
    iph_ref * g / g_ref
}

/// Temperature dependence of `Rs` and irradiance/temperature dependence of `I0`.
///
/// The band-gap term enters as `Eg / k` (kelvin). `Eg(T) = Eg_ref (1 + eg_temp_coeff (T - T_ref))`;
/// a zero `eg_ref_over_k` switches the exponential factor off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SevenParamExtension {
    pub rs_ref: f64,
    /// 1/K
    pub delta: f64,
    pub t_ref: f64,
    pub i0_ref: f64,
    pub g_ref: f64,
    pub m_exponent: f64,
    pub eg_ref_over_k: f64,
    /// 1/K
    pub eg_temp_coeff: f64,
}

impl SevenParamExtension {
    pub fn validate(&self) -> Result<()> {
        check_positive("g_ref", self.g_ref)?;
        check_positive("t_ref", self.t_ref)?;
        check_nonnegative("rs_ref", self.rs_ref)?;
        check_positive("i0_ref", self.i0_ref)?;
        for (name, value) in [
            ("delta", self.delta),
            ("m_exponent", self.m_exponent),
            ("eg_ref_over_k", self.eg_ref_over_k),
            ("eg_temp_coeff", self.eg_temp_coeff),
        ] {
            if !value.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// `Rs_ref exp(delta (t - T_ref))`.
    pub fn rs_at_temperature(&self, t: f64) -> f64 {
        self.rs_ref * (self.delta * (t - self.t_ref)).exp()
    }

    fn eg_over_k(&self, t: f64) -> f64 {
        self.eg_ref_over_k * (1.0 + self.eg_temp_coeff * (t - self.t_ref))
    }

    /// `I0_ref (G_ref/g)^m (t/T_ref)^3 exp((Eg/k)_ref/T_ref - (Eg/k)(t)/t)`.
    pub fn i0_at_conditions(&self, g: f64, t: f64) -> Result<f64> {
        if !(g > 0.0) {
            return Err(Error::invalid("irradiance", format!("must be > 0, got {g}")));
        }
        if !(t > 0.0) {
            return Err(Error::invalid("temperature", format!("must be > 0, got {t}")));
        }
        let irradiance = (self.g_ref / g).powf(self.m_exponent);
        let thermal = (t / self.t_ref).powi(3);
        let gap = (self.eg_ref_over_k / self.t_ref - self.eg_over_k(t) / t).exp();
        Ok(self.i0_ref * irradiance * thermal * gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircuitModel {
    FiveParam(FiveParamModel),
    TwoDiode(TwoDiodeModel),
}

impl CircuitModel {
    pub fn as_circuit(&self) -> &dyn DiodeCircuit {
        match self {
            CircuitModel::FiveParam(m) => m,
            CircuitModel::TwoDiode(m) => m,
        }
    }

    pub fn thermal(&self) -> ThermalContext {
        match self {
            CircuitModel::FiveParam(m) => m.thermal,
            CircuitModel::TwoDiode(m) => m.thermal,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CircuitModel::FiveParam(_) => "five_param",
            CircuitModel::TwoDiode(_) => "two_diode",
        }
    }
}

/// A circuit whose photocurrent is stated at a reference irradiance, evaluable
/// at arbitrary operating conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleModel {
    pub circuit: CircuitModel,
    /// Irradiance at which the circuit's photocurrent applies, W/m².
    pub irradiance_ref: f64,
    pub extension: Option<SevenParamExtension>,
    pub solver: SolverOptions,
}

impl ModuleModel {
    pub fn new(circuit: CircuitModel, irradiance_ref: f64) -> Result<Self> {
        check_positive("irradiance_ref", irradiance_ref)?;
        circuit.as_circuit().validate()?;
        Ok(Self {
            circuit,
            irradiance_ref,
            extension: None,
            solver: SolverOptions::default(),
        })
    }

    pub fn five_param(model: FiveParamModel, irradiance_ref: f64) -> Result<Self> {
        Self::new(CircuitModel::FiveParam(model), irradiance_ref)
    }

    pub fn with_extension(mut self, extension: SevenParamExtension) -> Result<Self> {
        extension.validate()?;
        self.extension = Some(extension);
        Ok(self)
    }

    /// The circuit at irradiance `g` and temperature `t`.
    pub fn at_conditions(&self, g: f64, t: f64) -> Result<CircuitModel> {
        check_nonnegative("irradiance", g)?;
        let mut circuit = self.circuit;
        match &mut circuit {
            CircuitModel::FiveParam(m) => {
                m.photocurrent = photocurrent_at_irradiance(m.photocurrent, g, self.irradiance_ref);
                m.thermal = m.thermal.with_temperature(t)?;
                if let Some(ext) = &self.extension {
                    m.series_resistance = ext.rs_at_temperature(t);
                    m.saturation_current = ext.i0_at_conditions(g, t)?;
                }
            }
            CircuitModel::TwoDiode(m) => {
                m.photocurrent = photocurrent_at_irradiance(m.photocurrent, g, self.irradiance_ref);
                m.thermal = m.thermal.with_temperature(t)?;
                if let Some(ext) = &self.extension {
                    m.series_resistance = ext.rs_at_temperature(t);
                    m.i01 = ext.i0_at_conditions(g, t)?;
                }
            }
        }
        Ok(circuit)
    }

    pub fn reference_temperature(&self) -> f64 {
        self.circuit.thermal().temperature()
    }

    pub fn current(&self, g: f64, t: f64, v: f64) -> Result<f64> {
        self.at_conditions(g, t)?
            .as_circuit()
            .solve_current_with(v, &self.solver)
    }

    pub fn open_circuit_voltage(&self, g: f64, t: f64) -> Result<f64> {
        self.at_conditions(g, t)?
            .as_circuit()
            .open_circuit_voltage_with(&self.solver)
    }
}

/// The reference module used throughout the tests and examples:
/// Iph = 5 A, I0 = 5 nA, a = 1.3, Rs = 0.3 Ω, Rsh = 200 Ω, 36 cells at 298.15 K.
pub fn reference_module() -> FiveParamModel {
    FiveParamModel {
        photocurrent: 5.0,
        saturation_current: 5e-9,
        ideality: 1.3,
        series_resistance: 0.3,
        shunt_resistance: 200.0,
        thermal: ThermalContext {
            n_series: 36,
            temperature: 298.15,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ref_mod() -> FiveParamModel {
        reference_module()
    }

    #[test]
    fn large_forward_current_resolves_to_float_precision() {
        let m = FiveParamModel::new(0.5, 1e-6, 1.0, 0.004310591124547992, 50.0, ThermalContext::new(36, 273.15).unwrap())
            .unwrap();
        let v = 38.590300610857606;
        let i = m.solve_current(v, 1e-12).unwrap();
        assert!(i < -4000.0);
        assert!(m.residual(v, i).unwrap().abs() < 1e-9);
        assert_eq!(i, m.solve_current_bisect(v, 1e-12).unwrap());
    }

    fn ref_mod_2d() -> TwoDiodeModel {
        TwoDiodeModel {
            photocurrent: 5.0,
            i01: 5e-9,
            i02: 1e-6,
            eta1: 1.0,
            eta2: 2.0,
            series_resistance: 0.3,
            shunt_resistance: 200.0,
            thermal: ThermalContext::new(36, 298.15).unwrap(),
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn thermal_voltage_values() {
        let unit = ThermalContext::new(1, ELECTRON_CHARGE / BOLTZMANN).unwrap();
        assert!((unit.thermal_voltage() - 1.0).abs() < 1e-15);

        // 40-digit evaluation of 36 k T / q.
        let vt36 = ThermalContext::new(36, 298.15).unwrap().thermal_voltage();
        assert!(rel(vt36, 0.924_932_637_068_189_1) < 1e-14);

        let vt72 = ThermalContext::new(72, 298.15).unwrap().thermal_voltage();
        assert_eq!(vt72, 2.0 * vt36);
    }

    #[test]
    fn thermal_context_rejects_bad_inputs() {
        assert!(ThermalContext::new(0, 300.0).is_err());
        assert!(ThermalContext::new(36, 0.0).is_err());
        assert!(ThermalContext::new(36, f64::NAN).is_err());
    }

    #[test]
    fn residual_closed_forms() {
        let mut m = ref_mod();
        m.series_resistance = 0.0;
        assert_eq!(m.residual(0.0, m.photocurrent).unwrap(), 0.0);
        assert_eq!(m.residual(0.0, 0.0).unwrap(), m.photocurrent);
    }

    #[test]
    fn residual_matches_high_precision_oracle() {
        // mpmath, 40 digits.
        let f = ref_mod().residual(12.0, 4.0).unwrap();
        assert!(rel(f, 0.933_707_168_897_294_9) < 1e-13, "{f}");
    }

    #[test]
    fn residual_saturates_instead_of_overflowing() {
        let m = ref_mod();
        match m.residual(400.0, 0.0) {
            Err(Error::Saturation { argument, cap }) => {
                assert!(argument > cap);
                assert_eq!(cap, 250.0);
            }
            other => panic!("expected saturation, got {other:?}"),
        }
    }

    #[test]
    fn residual_is_strictly_decreasing_in_current() {
        let m = ref_mod();
        for k in 0..=30 {
            let v = k as f64;
            let mut prev = f64::INFINITY;
            for j in 0..=200 {
                let i = -15.0 + 0.1 * j as f64;
                let f = m.residual(v, i).unwrap();
                assert!(f < prev, "v={v} i={i}");
                prev = f;
            }
        }
    }

    #[test]
    fn solve_current_short_circuit_without_series_resistance() {
        let mut m = ref_mod();
        m.series_resistance = 0.0;
        assert_eq!(m.solve_current(0.0, 1e-9).unwrap(), 5.0);
        let b = m.solve_current_bisect(0.0, 1e-9).unwrap();
        assert!((b - 5.0).abs() < 1e-9);
    }

    #[test]
    fn solve_current_matches_oracle_at_12_volts() {
        // Root of the residual by mpmath findroot, 40 digits.
        let expected = 4.932_232_137_291_256;
        let newton = ref_mod().solve_current(12.0, 1e-12).unwrap();
        let bisect = ref_mod().solve_current_bisect(12.0, 1e-12).unwrap();
        assert!((newton - expected).abs() < 1e-11, "{newton}");
        assert!((bisect - expected).abs() < 1e-11, "{bisect}");
    }

    #[test]
    fn open_circuit_voltage_zeroes_current() {
        let m = ref_mod();
        let voc = m.open_circuit_voltage().unwrap();
        assert!((voc - 24.887_608_547_301_97).abs() < 1e-9, "{voc}");
        let i = m.solve_current(voc, 1e-9).unwrap();
        assert!(i.abs() < 1e-9);
        assert!(m.power_at(voc).unwrap().abs() < voc * 1e-9);
    }

    #[test]
    fn newton_and_bisection_agree_on_dense_sweep() {
        let m = ref_mod();
        for k in 0..1000 {
            let v = 30.0 * k as f64 / 999.0;
            let a = m.solve_current(v, 1e-9).unwrap();
            let b = m.solve_current_bisect(v, 1e-9).unwrap();
            assert!((a - b).abs() < 1e-6, "v={v}: {a} vs {b}");
        }
    }

    #[test]
    fn bisection_handles_deep_forward_bias() {
        // Far past Voc the seed bracket's lower end still has a negative residual.
        let m = ref_mod();
        let i = m.solve_current_bisect(30.0, 1e-9).unwrap();
        assert!(i < -6.0);
        assert!(m.residual(30.0, i).unwrap().abs() < 1e-9);
    }

    #[test]
    fn power_is_voltage_times_current() {
        let m = ref_mod();
        assert_eq!(m.power_at(0.0).unwrap(), 0.0);
        let i = m.solve_current(12.0, 1e-9).unwrap();
        assert_eq!(m.power_at(12.0).unwrap(), 12.0 * i);
    }

    #[test]
    fn solver_rejects_out_of_range_voltage() {
        assert!(matches!(
            ref_mod().solve_current(150.0, 1e-9),
            Err(Error::InvalidParameter { name: "voltage", .. })
        ));
        assert!(ref_mod().solve_current(1.0, 0.0).is_err());
    }

    fn extension() -> SevenParamExtension {
        SevenParamExtension {
            rs_ref: 0.3,
            delta: 0.01,
            t_ref: 298.15,
            i0_ref: 5e-9,
            g_ref: 1000.0,
            m_exponent: 0.5,
            eg_ref_over_k: 13_008.0,
            eg_temp_coeff: -2.677e-4,
        }
    }

    #[test]
    fn series_resistance_temperature_dependence() {
        let ext = extension();
        assert_eq!(ext.rs_at_temperature(ext.t_ref), ext.rs_ref);
        let hot = ext.rs_at_temperature(ext.t_ref + 10.0);
        assert!(rel(hot, 0.3 * 1.105_170_918_075_647_6) < 1e-14);
        let flat = SevenParamExtension { delta: 0.0, ..ext };
        for t in [250.0, 300.0, 350.0] {
            assert_eq!(flat.rs_at_temperature(t), flat.rs_ref);
        }
    }

    #[test]
    fn saturation_current_condition_dependence() {
        let ext = extension();
        assert_eq!(ext.i0_at_conditions(ext.g_ref, ext.t_ref).unwrap(), ext.i0_ref);

        let frozen = SevenParamExtension {
            m_exponent: 0.0,
            eg_ref_over_k: 0.0,
            ..ext
        };
        let hot = frozen.i0_at_conditions(500.0, 2.0 * ext.t_ref).unwrap();
        assert!(rel(hot, 8.0 * ext.i0_ref) < 1e-15);

        let linear = SevenParamExtension {
            m_exponent: 1.0,
            ..ext
        };
        let dim = linear.i0_at_conditions(ext.g_ref / 2.0, ext.t_ref).unwrap();
        assert!(rel(dim, 2.0 * ext.i0_ref) < 1e-15);

        assert!(ext.i0_at_conditions(0.0, 300.0).is_err());
        assert!(ext.i0_at_conditions(-1.0, 300.0).is_err());
    }

    #[test]
    fn two_diode_reduces_to_five_param() {
        let m = ref_mod();
        let two = TwoDiodeModel::from_five_param(&m);
        for k in 0..=30 {
            for j in 0..=20 {
                let (v, i) = (k as f64, -5.0 + 0.5 * j as f64);
                assert_eq!(two.residual(v, i).unwrap(), m.residual(v, i).unwrap());
            }
        }
    }

    #[test]
    fn two_diode_closed_form_and_oracle() {
        let mut m = ref_mod_2d();
        let f = m.residual(12.0, 4.0).unwrap();
        assert!(rel(f, 0.924_857_879_512_169_2) < 1e-13, "{f}");

        let expected = 4.920_530_663_050_039;
        assert!((m.solve_current(12.0, 1e-12).unwrap() - expected).abs() < 1e-11);
        assert!((m.solve_current_bisect(12.0, 1e-12).unwrap() - expected).abs() < 1e-11);

        m.series_resistance = 0.0;
        assert_eq!(m.residual(0.0, m.photocurrent).unwrap(), 0.0);
        assert_eq!(m.solve_current(0.0, 1e-9).unwrap(), m.photocurrent);
    }

    #[test]
    fn two_diode_rejects_eta2_outside_unit_interval() {
        let mut m = ref_mod_2d();
        m.eta2 = 2.5;
        assert!(m.validate().is_err());
        m.eta2 = 0.9;
        assert!(m.solve_current(1.0, 1e-9).is_err());
    }

    #[test]
    fn photocurrent_scales_linearly() {
        assert_eq!(photocurrent_at_irradiance(5.0, 1000.0, 1000.0), 5.0);
        assert_eq!(photocurrent_at_irradiance(5.0, 0.0, 1000.0), 0.0);
        assert_eq!(photocurrent_at_irradiance(5.0, 200.0, 1000.0), 1.0);
    }

    #[test]
    fn module_model_applies_conditions() {
        let module = ModuleModel::five_param(ref_mod(), 1000.0).unwrap();
        let c = module.at_conditions(600.0, 310.0).unwrap();
        match c {
            CircuitModel::FiveParam(m) => {
                assert_eq!(m.photocurrent, 3.0);
                assert_eq!(m.thermal.temperature(), 310.0);
                assert_eq!(m.saturation_current, 5e-9);
            }
            _ => unreachable!(),
        }
        let ext = module.with_extension(extension()).unwrap();
        let c = ext.at_conditions(1000.0, 298.15).unwrap();
        if let CircuitModel::FiveParam(m) = c {
            assert_eq!(m.series_resistance, 0.3);
            assert_eq!(m.saturation_current, 5e-9);
        }
        assert_eq!(module.open_circuit_voltage(0.0, 298.15).unwrap(), 0.0);
    }
}
