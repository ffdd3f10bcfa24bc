//! Surrogate training.
//!
//! [`build_greedy`] grows a network one neuron at a time, placing each new
//! centroid on the training sample with the largest absolute residual and
//! re-solving the output weights by regularised least squares.
//! [`fine_tune`] then adjusts every parameter (bias, weights, centroids and the
//! shared spread) with guarded, Levenberg–Marquardt-damped descent steps.
//! [`train`] runs both for several starting spreads and keeps the best network.
//!
//! Trained networks use [`KernelMode::SumOfSquares`] on min-max scaled inputs,
//! so `σ` is expressed in scaled units.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rbf::{Affine, InputPoint, InputScaling, KernelMode, RbfNeuron, RbfSurrogate};
use crate::sum::CompensatedSum;

const RIDGE: f64 = 1e-10;
const DUPLICATE_DISTANCE: f64 = 1e-9;
const MAX_DAMPING: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_neurons: usize,
    pub mse_goal: f64,
    /// Initial spread in scaled input units.
    pub sigma_init: f64,
    pub fine_tune_epochs: usize,
    /// Initial damping of the fine-tuning steps; steps shrink as it grows.
    pub learning_rate: f64,
    /// Drives the holdout shuffle in [`train`].
    pub seed: u64,
    /// Further starting spreads tried by [`train`] after `sigma_init`.
    pub sigma_candidates: Vec<f64>,
    /// Fraction of samples held out from training and used to choose among spreads.
    pub holdout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_neurons: 16,
            mse_goal: 0.02,
            sigma_init: 1.0,
            fine_tune_epochs: 200,
            learning_rate: 1e-3,
            seed: 0,
            sigma_candidates: Vec::new(),
            holdout: 0.0,
        }
    }
}

impl TrainConfig {
    /// The default spread ladder used by the command-line trainer.
    pub fn with_default_ladder(mut self) -> Self {
        self.sigma_candidates = vec![0.5, 0.25, 0.1, 0.05];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_neurons < 1 {
            return Err(Error::invalid("max_neurons", "must be >= 1"));
        }
        if !(self.mse_goal > 0.0 && self.mse_goal < 1.0) {
            return Err(Error::invalid("mse_goal", format!("must lie in (0, 1), got {}", self.mse_goal)));
        }
        for &s in std::iter::once(&self.sigma_init).chain(&self.sigma_candidates) {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid("sigma_init", format!("must be finite and > 0, got {s}")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", format!("must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::invalid("holdout", format!("must lie in [0, 1), got {}", self.holdout)));
        }
        Ok(())
    }
}

fn input_point(s: &crate::dataset::Sample) -> InputPoint {
    InputPoint {
        voltage: s.voltage,
        irradiance: s.irradiance,
        temperature: s.temperature,
    }
}

/// `Σ(ŷ - y)² / Σy²` over the dataset.
pub fn relative_mse(surrogate: &RbfSurrogate, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if surrogate.output_kind() != data.kind {
        return Err(Error::Data(format!(
            "{} network evaluated against {} targets",
            surrogate.output_kind(),
            data.kind
        )));
    }
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for (k, s) in data.samples.iter().enumerate() {
        let y = surrogate.evaluate(&input_point(s)).map_err(|e| e.at_sample(k))?;
        num.add((y - s.target) * (y - s.target));
        den.add(s.target * s.target);
    }
    ratio(num.value(), den.value())
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if den == 0.0 {
        Err(Error::ZeroTargets)
    } else {
        Ok(num / den)
    }
}

/// Training samples in scaled coordinates.
struct Scaled {
    dims: usize,
    x: Vec<[f64; 3]>,
    y: Vec<f64>,
    y_sq: f64,
}

impl Scaled {
    fn new(data: &Dataset, scaling: &InputScaling, dims: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let t_scale = scaling.t.unwrap_or(Affine::IDENTITY);
        let x = data
            .samples
            .iter()
            .map(|s| {
                [
                    scaling.v.apply(s.voltage),
                    scaling.g.apply(s.irradiance),
                    s.temperature.map_or(0.0, |t| t_scale.apply(t)),
                ]
            })
            .collect();
        let y: Vec<f64> = data.samples.iter().map(|s| s.target).collect();
        let y_sq = y.iter().map(|v| v * v).collect::<CompensatedSum>().value();
        if y_sq == 0.0 {
            return Err(Error::ZeroTargets);
        }
        Ok(Self { dims, x, y, y_sq })
    }

    fn len(&self) -> usize {
        self.y.len()
    }
}

/// Whether the dataset carries a temperature channel (all or nothing).
fn temperature_channel(data: &Dataset) -> Result<bool> {
    let with_t = data.samples.iter().filter(|s| s.temperature.is_some()).count();
    match with_t {
        0 => Ok(false),
        n if n == data.len() => Ok(true),
        _ => Err(Error::Data("temperature must be given for every sample or none".into())),
    }
}

fn min_max_scaling(data: &Dataset, with_t: bool) -> InputScaling {
    let range = |f: &dyn Fn(&crate::dataset::Sample) -> f64| {
        let (lo, hi) = data
            .samples
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        Affine::min_max(lo, hi)
    };
    InputScaling {
        v: range(&|s| s.voltage),
        g: range(&|s| s.irradiance),
        t: with_t.then(|| range(&|s| s.temperature.unwrap_or(0.0))),
    }
}

#[inline]
fn distance(mode: KernelMode, x: &[f64; 3], c: &[f64; 3], dims: usize) -> f64 {
    let mut acc = match mode {
        KernelMode::SumOfSquares => 0.0,
        KernelMode::ProductOfSquares => 1.0,
    };
    for k in 0..dims {
        let d = x[k] - c[k];
        match mode {
            KernelMode::SumOfSquares => acc += d * d,
            KernelMode::ProductOfSquares => acc *= d * d,
        }
    }
    acc
}

/// Activations of every neuron for every sample, `N × M`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            cols: 0,
            entries: Vec::new(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.entries[col * self.rows..(col + 1) * self.rows]
    }

    fn push_column(&mut self, column: Vec<f64>) {
        debug_assert_eq!(column.len(), self.rows);
        self.entries.extend(column);
        self.cols += 1;
    }

    /// Least-squares weights and bias for `y ≈ bias + Φ w`. The bias is unpenalised;
    /// the weights carry a ridge of `1e-10` relative to the largest diagonal entry.
    /// Falls back to the minimum-norm solution when the system is singular.
    fn solve(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let p = self.cols + 1;
        let col = |j: usize| -> &[f64] { self.column(j) };
        let mut a = DMatrix::<f64>::zeros(p, p);
        let mut b = DVector::<f64>::zeros(p);
        a[(0, 0)] = self.rows as f64;
        b[0] = y.iter().sum();
        for j in 0..self.cols {
            let cj = col(j);
            a[(0, j + 1)] = cj.iter().sum();
            a[(j + 1, 0)] = a[(0, j + 1)];
            b[j + 1] = cj.iter().zip(y).map(|(c, y)| c * y).sum();
            for k in j..self.cols {
                let v: f64 = cj.iter().zip(col(k)).map(|(a, b)| a * b).sum();
                a[(j + 1, k + 1)] = v;
                a[(k + 1, j + 1)] = v;
            }
        }
        let max_diag = (1..p).map(|j| a[(j, j)]).fold(0.0, f64::max);
        for j in 1..p {
            a[(j, j)] += RIDGE * max_diag;
        }
        let x = match a.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => a
                .svd(true, true)
                .solve(&b, 1e-14 * max_diag.max(1.0))
                .unwrap_or_else(|_| DVector::zeros(p)),
        };
        (x.iter().skip(1).copied().collect(), x[0])
    }
}

fn predictions(phi: &DesignMatrix, weights: &[f64], bias: f64) -> Vec<f64> {
    let mut out = vec![bias; phi.rows];
    for (j, w) in weights.iter().enumerate() {
        for (o, a) in out.iter_mut().zip(phi.column(j)) {
            *o += w * a;
        }
    }
    out
}

fn squared_error(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter()
        .zip(y)
        .map(|(p, y)| (p - y) * (p - y))
        .collect::<CompensatedSum>()
        .value()
}

/// Greedy construction, returning the network and its training relative MSE
/// after each neuron was added.
pub fn build_greedy_traced(data: &Dataset, cfg: &TrainConfig) -> Result<(RbfSurrogate, Vec<f64>)> {
    cfg.validate()?;
    let with_t = temperature_channel(data)?;
    let scaling = min_max_scaling(data, with_t);
    let dims = if with_t { 3 } else { 2 };
    let s = Scaled::new(data, &scaling, dims)?;
    let sigma = cfg.sigma_init;
    let mode = KernelMode::SumOfSquares;

    let mut phi = DesignMatrix::new(s.len());
    let mut centres: Vec<[f64; 3]> = Vec::new();
    let mut used = vec![false; s.len()];
    let mut bias = s.y.iter().copied().collect::<CompensatedSum>().value() / s.len() as f64;
    let mut weights: Vec<f64> = Vec::new();
    let mut pred = vec![bias; s.len()];
    let mut err = squared_error(&pred, &s.y) / s.y_sq;
    let mut trace = Vec::new();

    while centres.len() < cfg.max_neurons && (centres.is_empty() || err > cfg.mse_goal) {
        let pick = (0..s.len())
            .filter(|&n| !used[n])
            .filter(|&n| {
                centres
                    .iter()
                    .all(|c| distance(KernelMode::SumOfSquares, &s.x[n], c, dims) > DUPLICATE_DISTANCE)
            })
            .fold(None, |best: Option<(usize, f64)>, n| {
                let r = (s.y[n] - pred[n]).abs();
                match best {
                    Some((_, b)) if b >= r => best,
                    _ => Some((n, r)),
                }
            });
        let Some((n, _)) = pick else { break };
        used[n] = true;
        let c = s.x[n];
        centres.push(c);
        let sig2 = sigma * sigma;
        phi.push_column(s.x.iter().map(|x| (-distance(mode, x, &c, dims) / sig2).exp()).collect());

        let (w_new, b_new) = phi.solve(&s.y);
        let pred_new = predictions(&phi, &w_new, b_new);
        let err_new = squared_error(&pred_new, &s.y) / s.y_sq;
        // The previous solution padded with a zero weight is always feasible.
        if err_new <= err || !err.is_finite() {
            weights = w_new;
            bias = b_new;
            pred = pred_new;
            err = err_new;
        } else {
            weights.push(0.0);
        }
        trace.push(err);
    }

    let t_scale = scaling.t.unwrap_or(Affine::IDENTITY);
    let neurons = centres
        .iter()
        .zip(&weights)
        .map(|(c, &w)| RbfNeuron {
            weight: w,
            centroid_v: scaling.v.invert(c[0]),
            centroid_g: scaling.g.invert(c[1]),
            centroid_t: with_t.then(|| t_scale.invert(c[2])),
        })
        .collect();
    let net = RbfSurrogate::new(neurons, sigma, mode, scaling, data.kind, bias)?;
    Ok((net, trace))
}

pub fn build_greedy(data: &Dataset, cfg: &TrainConfig) -> Result<RbfSurrogate> {
    build_greedy_traced(data, cfg).map(|(net, _)| net)
}

/// The training loss `Σ(ŷ - y)² / Σy²` of a network as a function of its
/// parameter vector.
///
/// Layout: `[bias, w_1..w_M, c_1..c_M, σ]` where each `c_j` holds the neuron's
/// centroid in scaled coordinates (`V`, `G`, then `T` when present).
pub struct Objective {
    template: RbfSurrogate,
    data: Scaled,
    mode: KernelMode,
    neurons: usize,
}

impl Objective {
    pub fn new(surrogate: &RbfSurrogate, data: &Dataset) -> Result<Self> {
        if surrogate.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let with_t = surrogate.uses_temperature();
        if with_t != temperature_channel(data)? {
            return Err(Error::Data("network and dataset disagree on the temperature input".into()));
        }
        let dims = if with_t { 3 } else { 2 };
        Ok(Self {
            template: surrogate.clone(),
            data: Scaled::new(data, surrogate.scaling(), dims)?,
            mode: surrogate.kernel_mode(),
            neurons: surrogate.len(),
        })
    }

    pub fn dimension(&self) -> usize {
        2 + self.neurons * (1 + self.data.dims)
    }

    fn centre_offset(&self, j: usize) -> usize {
        1 + self.neurons + j * self.data.dims
    }

    fn sigma_index(&self) -> usize {
        self.dimension() - 1
    }

    pub fn parameters(&self) -> Vec<f64> {
        let sc = self.template.scaling();
        let ts = sc.t.unwrap_or(Affine::IDENTITY);
        let mut theta = vec![self.template.output_bias()];
        theta.extend(self.template.neurons().iter().map(|n| n.weight));
        for n in self.template.neurons() {
            theta.push(sc.v.apply(n.centroid_v));
            theta.push(sc.g.apply(n.centroid_g));
            if self.data.dims == 3 {
                theta.push(ts.apply(n.centroid_t.unwrap_or(0.0)));
            }
        }
        theta.push(self.template.sigma());
        theta
    }

    /// The network described by `theta`, with centroids mapped back to raw units.
    pub fn surrogate(&self, theta: &[f64]) -> Result<RbfSurrogate> {
        self.check_len(theta)?;
        let sc = self.template.scaling();
        let ts = sc.t.unwrap_or(Affine::IDENTITY);
        let neurons = (0..self.neurons)
            .map(|j| {
                let c = &theta[self.centre_offset(j)..];
                RbfNeuron {
                    weight: theta[1 + j],
                    centroid_v: sc.v.invert(c[0]),
                    centroid_g: sc.g.invert(c[1]),
                    centroid_t: (self.data.dims == 3).then(|| ts.invert(c[2])),
                }
            })
            .collect();
        self.template
            .clone()
            .with_neurons(neurons)?
            .with_sigma(theta[self.sigma_index()])?
            .with_output_bias(theta[0])
    }

    fn check_len(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dimension() {
            return Err(Error::invalid(
                "theta",
                format!("expected {} parameters, got {}", self.dimension(), theta.len()),
            ));
        }
        Ok(())
    }

    fn centre(&self, theta: &[f64], j: usize) -> [f64; 3] {
        let o = self.centre_offset(j);
        let mut c = [0.0; 3];
        c[..self.data.dims].copy_from_slice(&theta[o..o + self.data.dims]);
        c
    }

    fn predict(&self, theta: &[f64], x: &[f64; 3]) -> f64 {
        let sig2 = theta[self.sigma_index()].powi(2);
        let mut y = theta[0];
        for j in 0..self.neurons {
            let c = self.centre(theta, j);
            y += theta[1 + j] * (-distance(self.mode, x, &c, self.data.dims) / sig2).exp();
        }
        y
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        self.check_len(theta)?;
        let sse: CompensatedSum = self
            .data
            .x
            .iter()
            .zip(&self.data.y)
            .map(|(x, y)| {
                let r = self.predict(theta, x) - y;
                r * r
            })
            .collect();
        Ok(sse.value() / self.data.y_sq)
    }

    /// Fills one Jacobian row `∂ŷ/∂θ` and returns `ŷ`.
    fn jacobian_row(&self, theta: &[f64], x: &[f64; 3], row: &mut [f64]) -> f64 {
        let dims = self.data.dims;
        let sigma = theta[self.sigma_index()];
        let sig2 = sigma * sigma;
        let mut y = theta[0];
        let mut d_sigma = 0.0;
        row[0] = 1.0;
        for j in 0..self.neurons {
            let c = self.centre(theta, j);
            let w = theta[1 + j];
            let dist = distance(self.mode, x, &c, dims);
            let phi = (-dist / sig2).exp();
            y += w * phi;
            row[1 + j] = phi;
            let o = self.centre_offset(j);
            for k in 0..dims {
                let d = x[k] - c[k];
                // ∂D/∂c_k
                let dd = match self.mode {
                    KernelMode::SumOfSquares => -2.0 * d,
                    KernelMode::ProductOfSquares => {
                        let others: f64 = (0..dims)
                            .filter(|&l| l != k)
                            .map(|l| (x[l] - c[l]).powi(2))
                            .product();
                        -2.0 * d * others
                    }
                };
                row[o + k] = -w * phi * dd / sig2;
            }
            d_sigma += w * phi * 2.0 * dist / (sig2 * sigma);
        }
        row[self.sigma_index()] = d_sigma;
        y
    }

    /// Loss and its analytic gradient `2 Jᵀ r / Σy²`.
    pub fn loss_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_len(theta)?;
        let p = self.dimension();
        let mut row = vec![0.0; p];
        let mut grad = vec![0.0; p];
        let mut sse = CompensatedSum::default();
        for (x, y) in self.data.x.iter().zip(&self.data.y) {
            let r = self.jacobian_row(theta, x, &mut row) - y;
            sse.add(r * r);
            for (g, j) in grad.iter_mut().zip(&row) {
                *g += 2.0 * r * j;
            }
        }
        grad.iter_mut().for_each(|g| *g /= self.data.y_sq);
        Ok((sse.value() / self.data.y_sq, grad))
    }

    /// Gauss–Newton pieces `JᵀJ` and `Jᵀr`, plus the loss.
    fn normal_equations(&self, theta: &[f64]) -> (DMatrix<f64>, DVector<f64>, f64) {
        let p = self.dimension();
        let mut upper = vec![0.0; p * p];
        let mut jtr = DVector::<f64>::zeros(p);
        let mut row = vec![0.0; p];
        let mut sse = CompensatedSum::default();
        for (x, y) in self.data.x.iter().zip(&self.data.y) {
            let r = self.jacobian_row(theta, x, &mut row) - y;
            sse.add(r * r);
            for a in 0..p {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                jtr[a] += ra * r;
                let col = &mut upper[a * p..a * p + a + 1];
                for (c, rb) in col.iter_mut().zip(&row[..=a]) {
                    *c += ra * rb;
                }
            }
        }
        let jtj = DMatrix::from_fn(p, p, |i, j| {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            upper[hi * p + lo]
        });
        (jtj, jtr, sse.value() / self.data.y_sq)
    }

    /// Spread positive and centroids inside the admissible raw-unit box.
    fn admissible(&self, theta: &[f64]) -> bool {
        if !theta.iter().all(|x| x.is_finite()) || theta[self.sigma_index()] <= 0.0 {
            return false;
        }
        let sc = self.template.scaling();
        let ts = sc.t.unwrap_or(Affine::IDENTITY);
        (0..self.neurons).all(|j| {
            let c = self.centre(theta, j);
            RbfNeuron {
                weight: 0.0,
                centroid_v: sc.v.invert(c[0]),
                centroid_g: sc.g.invert(c[1]),
                centroid_t: (self.data.dims == 3).then(|| ts.invert(c[2])),
            }
            .validate()
            .is_ok()
        })
    }
}

/// Guarded descent on the training loss over all network parameters.
///
/// Each epoch computes one damped Gauss–Newton step
/// `(JᵀJ + λ diag(JᵀJ)) δ = -Jᵀr`, starting from `λ = learning_rate`. A step
/// that does not lower the loss, or leaves the admissible parameter box, is
/// rejected and retried with `λ × 10`; an accepted step divides `λ` by 10. The
/// returned network's training relative MSE never exceeds the input's.
pub fn fine_tune(surrogate: &RbfSurrogate, data: &Dataset, cfg: &TrainConfig) -> Result<RbfSurrogate> {
    cfg.validate()?;
    if cfg.fine_tune_epochs == 0 {
        return Ok(surrogate.clone());
    }
    let obj = Objective::new(surrogate, data)?;
    let mut theta = obj.parameters();
    let mut lambda = cfg.learning_rate;
    let p = obj.dimension();

    'epochs: for _ in 0..cfg.fine_tune_epochs {
        let (jtj, jtr, loss) = obj.normal_equations(&theta);
        let max_diag = (0..p).map(|a| jtj[(a, a)]).fold(0.0, f64::max);
        loop {
            if lambda > MAX_DAMPING {
                break 'epochs;
            }
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * max_diag);
            }
            let step = a.cholesky().map(|ch| ch.solve(&(-&jtr)));
            if let Some(step) = step {
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, d)| t + d).collect();
                if obj.admissible(&trial) {
                    let trial_loss = obj.loss(&trial)?;
                    if trial_loss < loss {
                        theta = trial;
                        lambda = (lambda / 10.0).max(1e-15);
                        continue 'epochs;
                    }
                }
            }
            lambda *= 10.0;
        }
    }

    let tuned = obj.surrogate(&theta)?;
    // Guard against drift from the scaled/raw round trip of the centroids.
    if relative_mse(&tuned, data)? <= relative_mse(surrogate, data)? {
        Ok(tuned)
    } else {
        Ok(surrogate.clone())
    }
}

/// Outcome of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub surrogate: RbfSurrogate,
    pub training_mse: f64,
    pub holdout_mse: Option<f64>,
    /// `(starting σ, training MSE, holdout MSE)` for every candidate tried.
    pub candidates: Vec<(f64, f64, Option<f64>)>,
}

/// Greedy construction followed by fine-tuning, for `sigma_init` and every
/// entry of `sigma_candidates`. The network with the lowest holdout MSE (or
/// training MSE without a holdout) wins; ties keep the earlier candidate.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let (fit, check) = if cfg.holdout > 0.0 {
        let mut shuffled = data.clone();
        shuffled
            .samples
            .shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        let (a, b) = shuffled.split_holdout(cfg.holdout)?;
        (a, (!b.is_empty()).then_some(b))
    } else {
        (data.clone(), None)
    };
    if fit.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut best: Option<(RbfSurrogate, f64, Option<f64>)> = None;
    let mut candidates = Vec::new();
    for &sigma in std::iter::once(&cfg.sigma_init).chain(&cfg.sigma_candidates) {
        let run = TrainConfig {
            sigma_init: sigma,
            ..cfg.clone()
        };
        let net = fine_tune(&build_greedy(&fit, &run)?, &fit, &run)?;
        let train_mse = relative_mse(&net, &fit)?;
        let hold_mse = check.as_ref().map(|h| relative_mse(&net, h)).transpose()?;
        candidates.push((sigma, train_mse, hold_mse));
        let score = hold_mse.unwrap_or(train_mse);
        let better = best
            .as_ref()
            .is_none_or(|(_, t, h)| score < h.unwrap_or(*t));
        if better {
            best = Some((net, train_mse, hold_mse));
        }
    }
    let (surrogate, training_mse, holdout_mse) = best.expect("at least one candidate");
    Ok(TrainOutcome {
        surrogate,
        training_mse,
        holdout_mse,
        candidates,
    })
}
