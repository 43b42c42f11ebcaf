//! GAN distillation of an ensemble into a lightweight generator.
//!
//! The generator and the ensemble receive the same Gaussian noise batch;
//! a discriminator learns to tell their outputs apart, and training stops
//! once it reliably cannot (accuracy inside the equilibrium band).

use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleModel, MemberDescriptor};
use super::GaenError;
use crate::numerics::{random_normal, sigmoid_scalar, xavier_uniform, OptimizerState, SeededRng};
use crate::{Mat, Real};

const PROB_CLAMP: Real = 1e-12;

/// Parameter indexes inside an MLP's parameter vector.
const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;

/// Two-layer perceptron with biases, ReLU hidden activation, linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    /// [w1 (in x hidden), b1 (1 x hidden), w2 (hidden x out), b2 (1 x out)].
    params: Vec<Mat>,
}

struct MlpTrace {
    pre1: Mat,
    h1: Mat,
    out: Mat,
}

/// Gradients aligned with `Mlp::params`, plus the gradient w.r.t. the input.
struct MlpBackward {
    grads: Vec<Mat>,
    dinput: Mat,
}

fn add_row_broadcast(m: &Mat, row: &Mat) -> Mat {
    let mut out = m.clone();
    for r in 0..out.rows() {
        for c in 0..out.cols() {
            let v = out.get(r, c) + row.get(0, c);
            out.set(r, c, v);
        }
    }
    out
}

fn column_sums(m: &Mat) -> Mat {
    let mut out = Mat::zeros(1, m.cols());
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = out.get(0, c) + m.get(r, c);
            out.set(0, c, v);
        }
    }
    out
}

impl Mlp {
    fn init(input_dim: usize, hidden_dim: usize, output_dim: usize, rng: &mut SeededRng) -> Self {
        Self {
            input_dim,
            hidden_dim,
            output_dim,
            params: vec![
                xavier_uniform(rng, input_dim, hidden_dim),
                Mat::zeros(1, hidden_dim),
                xavier_uniform(rng, hidden_dim, output_dim),
                Mat::zeros(1, output_dim),
            ],
        }
    }

    pub fn zeroed(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            output_dim,
            params: vec![
                Mat::zeros(input_dim, hidden_dim),
                Mat::zeros(1, hidden_dim),
                Mat::zeros(hidden_dim, output_dim),
                Mat::zeros(1, output_dim),
            ],
        }
    }

    pub fn param_count(&self) -> u64 {
        self.params
            .iter()
            .map(|p| (p.rows() * p.cols()) as u64)
            .sum()
    }

    pub fn params(&self) -> &[Mat] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Vec<Mat> {
        &mut self.params
    }

    fn trace(&self, x: &Mat) -> Result<MlpTrace, GaenError> {
        if x.cols() != self.input_dim {
            return Err(GaenError::DimMismatch {
                member: "mlp".to_string(),
                expected: self.input_dim,
                got: x.cols(),
            });
        }
        let pre1 = add_row_broadcast(&x.matmul(&self.params[W1])?, &self.params[B1]);
        let h1 = pre1.relu();
        let out = add_row_broadcast(&h1.matmul(&self.params[W2])?, &self.params[B2]);
        Ok(MlpTrace { pre1, h1, out })
    }

    /// Linear-output forward pass on a batch (rows = samples).
    pub fn forward(&self, x: &Mat) -> Result<Mat, GaenError> {
        Ok(self.trace(x)?.out)
    }

    fn backward(&self, x: &Mat, trace: &MlpTrace, dout: &Mat) -> Result<MlpBackward, GaenError> {
        let dw2 = trace.h1.transpose().matmul(dout)?;
        let db2 = column_sums(dout);
        let dh1 = dout.matmul(&self.params[W2].transpose())?;
        let mask = trace.pre1.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let dpre1 = dh1.hadamard(&mask)?;
        let dw1 = x.transpose().matmul(&dpre1)?;
        let db1 = column_sums(&dpre1);
        let dinput = dpre1.matmul(&self.params[W1].transpose())?;
        Ok(MlpBackward {
            grads: vec![dw1, db1, dw2, db2],
            dinput,
        })
    }
}

/// Student network: maps a noise vector (dim = feature count) to a
/// feature-value vector. Hidden width is 4x the feature count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub net: Mlp,
}

impl Generator {
    pub fn init(dim: usize, rng: &mut SeededRng) -> Self {
        Self {
            net: Mlp::init(dim, 4 * dim, dim, rng),
        }
    }

    pub fn dim(&self) -> usize {
        self.net.input_dim
    }

    pub fn param_count(&self) -> u64 {
        self.net.param_count()
    }

    /// Single-vector forward pass.
    pub fn predict(&self, noise: &[Real]) -> Result<Vec<Real>, GaenError> {
        if noise.len() != self.net.input_dim {
            return Err(GaenError::DimMismatch {
                member: "generator".to_string(),
                expected: self.net.input_dim,
                got: noise.len(),
            });
        }
        let x = Mat::from_vec(1, noise.len(), noise.to_vec()).map_err(|_| {
            GaenError::MemberFailure {
                member: "generator".to_string(),
                message: "non-finite noise".to_string(),
            }
        })?;
        Ok(self.net.forward(&x)?.row(0).to_vec())
    }
}

/// Critic network: feature-value vector to real-vs-generated probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub net: Mlp,
}

impl Discriminator {
    pub fn init(dim: usize, rng: &mut SeededRng) -> Self {
        Self {
            net: Mlp::init(dim, 4 * dim, 1, rng),
        }
    }

    /// Probability that each batch row is an ensemble ("real") output.
    pub fn probabilities(&self, x: &Mat) -> Result<Mat, GaenError> {
        Ok(self.net.forward(x)?.map(sigmoid_scalar))
    }
}

/// Non-saturating discriminator loss: mean BCE over the joint real+fake
/// batch, with real labeled 1 and generated labeled 0.
pub fn discriminator_loss(d: &Discriminator, real: &Mat, fake: &Mat) -> Result<Real, GaenError> {
    let total = (real.rows() + fake.rows()) as Real;
    let mut loss = 0.0;
    for (batch, label) in [(real, 1.0), (fake, 0.0)] {
        let p = d.probabilities(batch)?;
        for &prob in p.values() {
            let prob = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            loss += -label * prob.ln() - (1.0 - label) * (1.0 - prob).ln();
        }
    }
    Ok(loss / total)
}

/// Gradients of `discriminator_loss` w.r.t. the discriminator parameters.
pub fn discriminator_grads(
    d: &Discriminator,
    real: &Mat,
    fake: &Mat,
) -> Result<Vec<Mat>, GaenError> {
    let total = (real.rows() + fake.rows()) as Real;
    let mut acc: Option<Vec<Mat>> = None;
    for (batch, label) in [(real, 1.0), (fake, 0.0)] {
        let trace = d.net.trace(batch)?;
        // Fused sigmoid-BCE gradient: dL/dlogit = p - label, zeroed in the
        // clamped band.
        let dout = trace.out.map(|logit| {
            let p = sigmoid_scalar(logit);
            if p <= PROB_CLAMP || p >= 1.0 - PROB_CLAMP {
                0.0
            } else {
                (p - label) / total
            }
        });
        let back = d.net.backward(batch, &trace, &dout)?;
        acc = Some(match acc {
            None => back.grads,
            Some(prev) => prev
                .iter()
                .zip(&back.grads)
                .map(|(a, b)| a.add(b))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(acc.expect("two batches"))
}

/// Non-saturating generator loss: -mean log D(G(z)).
pub fn generator_loss(g: &Generator, d: &Discriminator, noise: &Mat) -> Result<Real, GaenError> {
    let fake = g.net.forward(noise)?;
    let p = d.probabilities(&fake)?;
    let mut loss = 0.0;
    for &prob in p.values() {
        let prob = prob.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        loss += -prob.ln();
    }
    Ok(loss / noise.rows() as Real)
}

/// Gradients of `generator_loss` w.r.t. the generator parameters (the
/// discriminator is held fixed).
pub fn generator_grads(
    g: &Generator,
    d: &Discriminator,
    noise: &Mat,
) -> Result<Vec<Mat>, GaenError> {
    let batch = noise.rows() as Real;
    let g_trace = g.net.trace(noise)?;
    let fake = g_trace.out.clone();
    let d_trace = d.net.trace(&fake)?;
    let dout = d_trace.out.map(|logit| {
        let p = sigmoid_scalar(logit);
        if p <= PROB_CLAMP || p >= 1.0 - PROB_CLAMP {
            0.0
        } else {
            (p - 1.0) / batch
        }
    });
    let d_back = d.net.backward(&fake, &d_trace, &dout)?;
    let g_back = g.net.backward(noise, &g_trace, &d_back.dinput)?;
    Ok(g_back.grads)
}

/// Distillation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub noise_std: Real,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Discriminator-accuracy equilibrium band [lo, hi].
    pub band_lo: Real,
    pub band_hi: Real,
    /// Checks in a row that must land inside the band before stopping.
    pub consecutive_checks: usize,
    /// Epochs between equilibrium checks.
    pub check_interval: usize,
    /// Epochs to wait before equilibrium checking begins, letting the
    /// adversarial transient pass.
    pub check_warmup: usize,
    /// Discriminator learning rate.
    pub learning_rate: Real,
    /// Generator learning rate; None means same as the discriminator.
    /// A slower generator keeps the discriminator informative instead of
    /// collapsing flat mid-training.
    pub generator_lr: Option<Real>,
    /// Inverse-time learning-rate decay constant (epochs); None disables.
    /// Damps the adversarial limit cycle so the generator settles instead
    /// of orbiting the ensemble's output.
    pub lr_decay_tau: Option<Real>,
    pub momentum: Real,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            noise_std: 0.25,
            batch_size: 32,
            max_epochs: 2000,
            band_lo: 0.45,
            band_hi: 0.55,
            consecutive_checks: 5,
            check_interval: 25,
            check_warmup: 0,
            learning_rate: 0.005,
            generator_lr: Some(0.001),
            lr_decay_tau: None,
            momentum: 0.0,
            seed: 0,
        }
    }
}

impl FusionConfig {
    fn validate(&self) -> Result<(), GaenError> {
        let band_ok =
            0.0 < self.band_lo && self.band_lo < 0.5 && 0.5 < self.band_hi && self.band_hi < 1.0;
        if !band_ok
            || self.batch_size == 0
            || self.check_interval == 0
            || self.noise_std <= 0.0
            || self.learning_rate <= 0.0
            || matches!(self.generator_lr, Some(g) if g <= 0.0)
            || matches!(self.lr_decay_tau, Some(t) if t <= 0.0)
        {
            return Err(GaenError::BadFusionConfig);
        }
        Ok(())
    }
}

/// What happened during distillation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistillReport {
    /// Whether the equilibrium stop fired (false: ran to max_epochs).
    pub converged: bool,
    pub epochs_run: usize,
    /// Discriminator accuracy on the held-out batch at the last check.
    pub final_accuracy: Real,
    /// || mean_gen - mean_ensemble ||_2 on a diagnostic batch.
    pub mean_distance: Real,
    /// Frobenius distance between output covariance matrices.
    pub cov_distance: Real,
    pub generator_param_count: u64,
    pub ensemble_param_count: u64,
}

/// Distilled fusion result for one entity: member descriptors, the
/// generator surrogate, and the training report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaenBundle {
    pub entity_id: String,
    pub members: Vec<MemberDescriptor>,
    pub normalized_weights: Vec<Real>,
    pub generator: Generator,
    pub report: DistillReport,
}

fn ensemble_batch(ensemble: &mut EnsembleModel, noise: &Mat) -> Result<Mat, GaenError> {
    let mut rows = Vec::with_capacity(noise.rows());
    for r in 0..noise.rows() {
        rows.push(ensemble.predict(noise.row(r))?);
    }
    Mat::from_rows(&rows).map_err(|_| GaenError::MemberFailure {
        member: "ensemble".to_string(),
        message: "non-finite ensemble output".to_string(),
    })
}

fn held_out_accuracy(d: &Discriminator, real: &Mat, fake: &Mat) -> Result<Real, GaenError> {
    let p_real = d.probabilities(real)?;
    let p_fake = d.probabilities(fake)?;
    let correct = p_real.values().iter().filter(|&&p| p > 0.5).count()
        + p_fake.values().iter().filter(|&&p| p <= 0.5).count();
    Ok(correct as Real / (real.rows() + fake.rows()) as Real)
}

fn batch_mean(m: &Mat) -> Vec<Real> {
    let mut mean = vec![0.0; m.cols()];
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            mean[c] += m.get(r, c);
        }
    }
    for v in &mut mean {
        *v /= m.rows() as Real;
    }
    mean
}

fn batch_cov(m: &Mat, mean: &[Real]) -> Mat {
    let mut cov = Mat::zeros(m.cols(), m.cols());
    for r in 0..m.rows() {
        for i in 0..m.cols() {
            for j in 0..m.cols() {
                let v = cov.get(i, j) + (m.get(r, i) - mean[i]) * (m.get(r, j) - mean[j]);
                cov.set(i, j, v);
            }
        }
    }
    cov.scale(1.0 / m.rows() as Real)
}

/// Distills the ensemble into a generator via 1:1 alternating GAN steps.
/// Each step feeds the same Gaussian noise batch to both the generator and
/// the ensemble. Hitting max_epochs without equilibrium is reported, not
/// an error.
pub fn distill(
    ensemble: &mut EnsembleModel,
    config: &FusionConfig,
) -> Result<(Generator, DistillReport), GaenError> {
    config.validate()?;
    let dim = ensemble.dim();
    let mut rng = SeededRng::new(config.seed);
    let mut generator = Generator::init(dim, &mut rng);
    let mut discriminator = Discriminator::init(dim, &mut rng);
    let mut opt_g = OptimizerState::new(
        config.generator_lr.unwrap_or(config.learning_rate),
        config.momentum,
    );
    let mut opt_d = OptimizerState::new(config.learning_rate, config.momentum);

    let held_noise: Mat = random_normal(&mut rng, config.batch_size, dim, 0.0, config.noise_std);
    let held_real = ensemble_batch(ensemble, &held_noise)?;

    let mut converged = false;
    let mut epochs_run = 0;
    let mut final_accuracy = 0.0;
    let mut streak = 0;
    let base_d_lr = config.learning_rate;
    let base_g_lr = config.generator_lr.unwrap_or(config.learning_rate);
    for epoch in 0..config.max_epochs {
        epochs_run += 1;
        if let Some(tau) = config.lr_decay_tau {
            let factor = 1.0 / (1.0 + epoch as Real / tau);
            opt_d.set_learning_rate(base_d_lr * factor);
            opt_g.set_learning_rate(base_g_lr * factor);
        }
        let noise: Mat = random_normal(&mut rng, config.batch_size, dim, 0.0, config.noise_std);
        let real = ensemble_batch(ensemble, &noise)?;

        // Discriminator step on (real, generated-detached).
        let fake = generator.net.forward(&noise)?;
        let d_grads = discriminator_grads(&discriminator, &real, &fake)?;
        opt_d
            .step(discriminator.net.params_mut(), &d_grads)
            .map_err(GaenError::from)?;

        // Generator step against the updated discriminator.
        let g_grads = generator_grads(&generator, &discriminator, &noise)?;
        opt_g
            .step(generator.net.params_mut(), &g_grads)
            .map_err(GaenError::from)?;

        // Equilibrium check on the held-out batch.
        if epochs_run > config.check_warmup && epochs_run % config.check_interval == 0 {
            let held_fake = generator.net.forward(&held_noise)?;
            final_accuracy = held_out_accuracy(&discriminator, &held_real, &held_fake)?;
            if final_accuracy >= config.band_lo && final_accuracy <= config.band_hi {
                streak += 1;
                if streak >= config.consecutive_checks {
                    converged = true;
                    break;
                }
            } else {
                streak = 0;
            }
        }
    }
    if !converged {
        let held_fake = generator.net.forward(&held_noise)?;
        final_accuracy = held_out_accuracy(&discriminator, &held_real, &held_fake)?;
    }

    // Distillation-quality diagnostics on a fresh batch.
    let diag_noise: Mat = random_normal(&mut rng, config.batch_size, dim, 0.0, config.noise_std);
    let diag_real = ensemble_batch(ensemble, &diag_noise)?;
    let diag_fake = generator.net.forward(&diag_noise)?;
    let mean_real = batch_mean(&diag_real);
    let mean_fake = batch_mean(&diag_fake);
    let mean_distance = mean_real
        .iter()
        .zip(&mean_fake)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<Real>()
        .sqrt();
    let cov_distance = batch_cov(&diag_real, &mean_real)
        .sub(&batch_cov(&diag_fake, &mean_fake))?
        .frobenius_norm();

    let report = DistillReport {
        converged,
        epochs_run,
        final_accuracy,
        mean_distance,
        cov_distance,
        generator_param_count: generator.param_count(),
        ensemble_param_count: ensemble.effective_param_count(),
    };
    Ok((generator, report))
}
