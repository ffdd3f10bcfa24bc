//! Five-parameter identification from measured or simulated curves.
//!
//! The fit minimises `Σ (i_obs - i_model(v))²` over every point of every curve
//! with a Levenberg–Marquardt iteration in the coordinates
//! `(Iph_ref, ln I0, a, Rs, ln Rsh)`. The photocurrent of each curve is
//! `Iph_ref · G / G_ref`, so curves at several irradiances share one `Iph_ref`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix5, Vector2, Vector3, Vector5};

use crate::characteristics::Curve;
use crate::circuit::{photocurrent_at_irradiance, DiodeCircuit, FiveParamModel, SolverOptions};
use crate::error::{Error, Result};

const PARAMETERS: usize = 5;
const STEP_STOP: f64 = 1e-12;
const MAX_DAMPING: f64 = 1e16;
const PROJECTION_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMethod {
    /// Forward differences on the solved current.
    ForwardDifference,
    /// Implicit-function derivatives of the circuit residual.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// RMS current residual at which the fit stops, ampere.
    pub goal: f64,
    pub max_iterations: usize,
    /// Relative forward-difference step.
    pub fd_step: f64,
    pub jacobian: JacobianMethod,
    /// Irradiance at which `Iph_ref` applies, W/m².
    pub irradiance_ref: f64,
    pub solver: SolverOptions,
    /// Improve the start by a variable-projection pass before the main iteration.
    pub projection_start: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            goal: 1e-9,
            max_iterations: 200,
            fd_step: 1e-6,
            jacobian: JacobianMethod::ForwardDifference,
            irradiance_ref: 1000.0,
            solver: SolverOptions::default().with_tol(1e-12),
            projection_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Fitted model, photocurrent stated at `irradiance_ref`.
    pub model: FiveParamModel,
    pub irradiance_ref: f64,
    /// RMS current residual, ampere.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Last step per parameter relative to the parameter (absolute for the log-coordinates).
    pub relative_step: [f64; 5],
    /// Residual norm after each accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

struct Point {
    v: f64,
    i: f64,
    g: f64,
    t: f64,
}

fn encode(m: &FiveParamModel) -> Vector5<f64> {
    Vector5::new(
        m.photocurrent,
        m.saturation_current.ln(),
        m.ideality,
        m.series_resistance,
        m.shunt_resistance.ln(),
    )
}

fn decode(theta: &Vector5<f64>, template: &FiveParamModel) -> Result<FiveParamModel> {
    FiveParamModel::new(
        theta[0],
        theta[1].exp(),
        theta[2],
        theta[3],
        theta[4].exp(),
        template.thermal,
    )
}

struct Problem<'a> {
    points: Vec<Point>,
    template: FiveParamModel,
    cfg: &'a FitConfig,
}

impl Problem<'_> {
    fn circuit_at(&self, m: &FiveParamModel, p: &Point) -> Result<FiveParamModel> {
        let mut c = *m;
        c.photocurrent = photocurrent_at_irradiance(m.photocurrent, p.g, self.cfg.irradiance_ref);
        c.thermal = m.thermal.with_temperature(p.t)?;
        Ok(c)
    }

    fn residuals(&self, theta: &Vector5<f64>) -> Result<Vec<f64>> {
        let m = decode(theta, &self.template)?;
        self.points
            .iter()
            .map(|p| {
                let c = self.circuit_at(&m, p)?;
                Ok(p.i - c.solve_current_with(p.v, &self.cfg.solver)?)
            })
            .collect()
    }

    fn jacobian(&self, theta: &Vector5<f64>, r: &[f64]) -> Result<Vec<[f64; 5]>> {
        match self.cfg.jacobian {
            JacobianMethod::ForwardDifference => self.jacobian_fd(theta, r),
            JacobianMethod::Analytic => self.jacobian_analytic(theta, r),
        }
    }

    fn jacobian_fd(&self, theta: &Vector5<f64>, r: &[f64]) -> Result<Vec<[f64; 5]>> {
        let mut jac = vec![[0.0; 5]; r.len()];
        for k in 0..PARAMETERS {
            let h = self.cfg.fd_step * theta[k].abs().max(1e-3);
            let mut shifted = *theta;
            shifted[k] += h;
            let rk = self.residuals(&shifted)?;
            for (row, (a, b)) in jac.iter_mut().zip(rk.iter().zip(r)) {
                row[k] = (a - b) / h;
            }
        }
        Ok(jac)
    }

    /// `∂r/∂θ = (∂f/∂θ) / (∂f/∂i)` at the solved current, where `r = i_obs - i`.
    fn jacobian_analytic(&self, theta: &Vector5<f64>, r: &[f64]) -> Result<Vec<[f64; 5]>> {
        let m = decode(theta, &self.template)?;
        self.points
            .iter()
            .zip(r)
            .map(|(p, r)| {
                let c = self.circuit_at(&m, p)?;
                let i = p.i - r;
                let scale = c.diode_voltage_scale();
                let vd = p.v + i * c.series_resistance;
                let x = vd / scale;
                let e = x.exp();
                let (_, df_di) = c.residual_with_slope(p.v, i, self.cfg.solver.exponent_cap)?;
                let df = [
                    p.g / self.cfg.irradiance_ref,
                    -c.saturation_current * x.exp_m1(),
                    c.saturation_current * e * x / c.ideality,
                    -c.saturation_current * e * i / scale - i / c.shunt_resistance,
                    vd / c.shunt_resistance,
                ];
                Ok(df.map(|d| d / df_di))
            })
            .collect()
    }
}

/// Linear part of the circuit equation at the observed points: for fixed
/// `(a, Rs)`, `i = Iph_ref·G/G_ref - I0·expm1(vd/(a·Vt)) - vd/Rsh` with
/// `vd = v + i·Rs` is linear in `(Iph_ref, I0, 1/Rsh)`.
struct Projection<'a> {
    problem: &'a Problem<'a>,
    thermal_voltages: Vec<f64>,
}

impl Projection<'_> {
    /// Best `(Iph_ref, I0, 1/Rsh)` and the equation residuals for the given `(a, Rs)`.
    fn solve(&self, a: f64, rs: f64) -> Option<(Vector3<f64>, Vec<f64>)> {
        if !(a > 0.0 && rs >= 0.0) {
            return None;
        }
        let pts = &self.problem.points;
        let g_ref = self.problem.cfg.irradiance_ref;
        let cap = self.problem.cfg.solver.exponent_cap;
        let mut m = DMatrix::<f64>::zeros(pts.len(), 3);
        let mut b = DVector::<f64>::zeros(pts.len());
        for (n, (p, vt)) in pts.iter().zip(&self.thermal_voltages).enumerate() {
            let vd = p.v + p.i * rs;
            let x = vd / (a * vt);
            if !(x <= cap) {
                return None;
            }
            m[(n, 0)] = p.g / g_ref;
            m[(n, 1)] = -x.exp_m1();
            m[(n, 2)] = -vd;
            b[n] = p.i;
        }
        // Equilibrate columns; their magnitudes differ by many decades.
        let norms: Vec<f64> = (0..3).map(|k| m.column(k).norm().max(f64::MIN_POSITIVE)).collect();
        for k in 0..3 {
            m.column_mut(k).scale_mut(1.0 / norms[k]);
        }
        let y = m.clone().svd(true, true).solve(&b, 1e-14).ok()?;
        let resid = (&b - &m * &y).iter().copied().collect();
        let beta = Vector3::new(y[0] / norms[0], y[1] / norms[1], y[2] / norms[2]);
        Some((beta, resid))
    }

    fn sse(&self, a: f64, rs: f64) -> Option<f64> {
        self.solve(a, rs).map(|(_, r)| r.iter().map(|x| x * x).sum())
    }

    /// Levenberg–Marquardt over `(a, Rs)` on the projected residuals.
    fn refine(&self, mut a: f64, mut rs: f64) -> Option<FiveParamModel> {
        let mut sse = self.sse(a, rs)?;
        let mut lambda = 1e-3;
        for _ in 0..PROJECTION_ITERATIONS {
            let (_, r) = self.solve(a, rs)?;
            let ha = 1e-6 * a;
            let hr = 1e-6 * rs.max(1e-3);
            let (_, ra) = self.solve(a + ha, rs)?;
            let (_, rr) = self.solve(a, rs + hr)?;
            let mut jtj = Matrix2::<f64>::zeros();
            let mut jtr = Vector2::<f64>::zeros();
            for n in 0..r.len() {
                let row = Vector2::new((ra[n] - r[n]) / ha, (rr[n] - r[n]) / hr);
                jtj += row * row.transpose();
                jtr += row * r[n];
            }
            let mut improved = false;
            while lambda <= MAX_DAMPING {
                let mut m = jtj;
                for k in 0..2 {
                    m[(k, k)] += lambda * jtj[(k, k)].max(f64::MIN_POSITIVE);
                }
                let Some(step) = m.cholesky().map(|ch| ch.solve(&(-jtr))) else {
                    lambda *= 10.0;
                    continue;
                };
                let (ta, tr) = (a + step[0], (rs + step[1]).max(0.0));
                if let Some(t) = self.sse(ta, tr) {
                    if t < sse {
                        let small = (ta - a).abs() < STEP_STOP * a && (tr - rs).abs() < STEP_STOP * rs.max(1e-3);
                        a = ta;
                        rs = tr;
                        sse = t;
                        lambda /= 10.0;
                        improved = !small;
                        break;
                    }
                }
                lambda *= 10.0;
            }
            if !improved {
                break;
            }
        }
        let (beta, _) = self.solve(a, rs)?;
        FiveParamModel::new(beta[0], beta[1], a, rs, beta[2].recip(), self.problem.template.thermal).ok()
    }
}

fn rms(r: &[f64]) -> f64 {
    (r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64).sqrt()
}

/// Fits `(Iph, I0, a, Rs, Rsh)` of `init` to the curves. `Ns` and the curve
/// temperatures are taken as known.
pub fn fit_five_param(curves: &[Curve], init: &FiveParamModel, cfg: &FitConfig) -> Result<FitReport> {
    init.validate()?;
    let mut points = Vec::new();
    for c in curves {
        if !(c.irradiance.is_finite() && c.irradiance >= 0.0 && c.temperature.is_finite()) {
            return Err(Error::Data(format!(
                "curve conditions must be finite (G={}, T={})",
                c.irradiance, c.temperature
            )));
        }
        for p in c.points() {
            if !(p.v.is_finite() && p.i.is_finite()) {
                return Err(Error::Data(format!("non-finite observation at v={}", p.v)));
            }
            points.push(Point {
                v: p.v,
                i: p.i,
                g: c.irradiance,
                t: c.temperature,
            });
        }
    }
    if points.len() < PARAMETERS {
        return Err(Error::UnderDetermined {
            points: points.len(),
            parameters: PARAMETERS,
        });
    }

    let problem = Problem {
        points,
        template: *init,
        cfg,
    };
    let theta = encode(init);
    let r = problem.residuals(&theta)?;
    let norm = rms(&r);
    let mut state = State {
        theta,
        r,
        norm,
        model: *init,
        history: vec![norm],
        lambda: 1e-3,
        last_step: Vector5::zeros(),
        iterations: 0,
        converged: norm <= cfg.goal,
    };
    if !state.converged && cfg.projection_start {
        // A better start from the linear structure of the circuit equation,
        // kept only when it lowers the current residual.
        let projection = Projection {
            problem: &problem,
            thermal_voltages: problem
                .points
                .iter()
                .map(|p| init.thermal.with_temperature(p.t).map(|t| t.thermal_voltage()))
                .collect::<Result<_>>()?,
        };
        if let Some(start) = projection.refine(init.ideality, init.series_resistance) {
            let theta = encode(&start);
            if let Ok(r) = problem.residuals(&theta) {
                let norm = rms(&r);
                if norm < state.norm {
                    state.theta = theta;
                    state.r = r;
                    state.norm = norm;
                    state.model = start;
                    state.history.push(norm);
                    state.converged = norm <= cfg.goal;
                }
            }
        }
    }
    if !state.converged {
        levenberg_marquardt(&problem, &mut state)?;
    }

    Ok(FitReport {
        model: state.model,
        irradiance_ref: cfg.irradiance_ref,
        residual_norm: state.norm,
        iterations: state.iterations,
        converged: state.converged,
        relative_step: relative_step(&state.theta, &state.last_step),
        history: state.history,
    })
}

struct State {
    theta: Vector5<f64>,
    r: Vec<f64>,
    norm: f64,
    model: FiveParamModel,
    history: Vec<f64>,
    lambda: f64,
    last_step: Vector5<f64>,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(problem: &Problem<'_>, s: &mut State) -> Result<()> {
    let goal = problem.cfg.goal;
    for _ in 0..problem.cfg.max_iterations {
        s.iterations += 1;
        let jac = problem.jacobian(&s.theta, &s.r)?;
        let mut jtj = Matrix5::<f64>::zeros();
        let mut jtr = Vector5::<f64>::zeros();
        for (row, ri) in jac.iter().zip(&s.r) {
            let row = Vector5::from_row_slice(row);
            jtj += row * row.transpose();
            jtr += row * *ri;
        }
        let accepted = loop {
            if s.lambda > MAX_DAMPING {
                break false;
            }
            let mut a = jtj;
            for k in 0..PARAMETERS {
                a[(k, k)] += s.lambda * jtj[(k, k)].max(f64::MIN_POSITIVE);
            }
            let Some(step) = a.cholesky().map(|ch| ch.solve(&(-jtr))) else {
                s.lambda *= 10.0;
                continue;
            };
            s.last_step = step;
            let trial = s.theta + step;
            if let Ok(rt) = problem.residuals(&trial) {
                let nt = rms(&rt);
                if nt < s.norm {
                    s.theta = trial;
                    s.model = decode(&s.theta, &problem.template)?;
                    s.r = rt;
                    s.norm = nt;
                    s.history.push(nt);
                    s.lambda /= 10.0;
                    break true;
                }
            }
            if relative_step(&s.theta, &step).iter().all(|x| *x < STEP_STOP) {
                break false;
            }
            s.lambda *= 10.0;
        };
        let small = relative_step(&s.theta, &s.last_step).iter().all(|x| *x < STEP_STOP);
        if s.norm <= goal || small {
            s.converged = true;
            return Ok(());
        }
        if !accepted {
            return Ok(());
        }
    }
    Ok(())
}

fn relative_step(theta: &Vector5<f64>, step: &Vector5<f64>) -> [f64; 5] {
    let mut out = [0.0; 5];
    for k in 0..PARAMETERS {
        out[k] = match k {
            1 | 4 => step[k].abs(),
            _ => step[k].abs() / theta[k].abs().max(f64::MIN_POSITIVE),
        };
    }
    out
}
