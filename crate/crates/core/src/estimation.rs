//! Adaptive maximum-likelihood estimation of θ or Ω and Monte-Carlo
//! mean-squared-error campaigns.
//!
//! Each round builds the code (or the reversing control) at the current
//! estimate, records `m` binary outcomes, and re-maximizes the likelihood of
//! all rounds so far over a dense grid followed by golden-section
//! refinement.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{bell_return_probability, controlled_omega_propagator};
use crate::error::{Error, Result};
use crate::metrology::{omega_decoherence_exponent, MeasurementDistribution};

/// Grid spacing of the tabulated unitary-control Ω probabilities.
const OMEGA_TABLE_SPACING: f64 = 1e-3;
const OMEGA_TABLE_STEPS: usize = 1000;
const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Theta,
    Omega,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    QecCorrected,
    UnitaryControlled,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::QecCorrected => "qec_corrected",
            Strategy::UnitaryControlled => "unitary_controlled",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
}

impl Grid {
    /// `[0, π/2]` for θ, `[0, 1]` for Ω, both at resolution `1e-4`.
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Theta => Grid {
                lo: 0.0,
                hi: std::f64::consts::FRAC_PI_2,
                resolution: 1e-4,
            },
            Task::Omega => Grid {
                lo: 0.0,
                hi: 1.0,
                resolution: 1e-4,
            },
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn points(&self) -> Vec<f64> {
        let n = (self.width() / self.resolution).floor() as usize;
        let mut pts: Vec<f64> = (0..=n)
            .map(|i| self.lo + i as f64 * self.resolution)
            .collect();
        if self.hi - pts[n] > 1e-12 * self.width() {
            pts.push(self.hi);
        }
        pts
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveConfig {
    pub task: Task,
    pub true_value: f64,
    pub initial_guess: f64,
    /// Shots per round.
    pub m: usize,
    pub rounds: usize,
    pub t: f64,
    pub b: f64,
    pub gamma: f64,
    pub grid: Grid,
    pub seed: u64,
    pub strategy: Strategy,
    /// Maximize the product of all rounds' likelihoods (`true`) or only the
    /// latest round's.
    pub accumulate: bool,
}

impl AdaptiveConfig {
    /// θ = π/4 from an initial guess of 0, `m = 10`, `K = 10`, `B = 0.1`,
    /// `γ = 0.05`, `t = 5`.
    pub fn theta_default() -> Self {
        Self {
            task: Task::Theta,
            true_value: std::f64::consts::FRAC_PI_4,
            initial_guess: 0.0,
            m: 10,
            rounds: 10,
            t: 5.0,
            b: 0.1,
            gamma: 0.05,
            grid: Grid::default_for(Task::Theta),
            seed: 0,
            strategy: Strategy::QecCorrected,
            accumulate: true,
        }
    }

    /// Ω = 0.3 from an initial guess of 0.2, otherwise as
    /// [`theta_default`](Self::theta_default).
    pub fn omega_default() -> Self {
        Self {
            task: Task::Omega,
            true_value: 0.3,
            initial_guess: 0.2,
            grid: Grid::default_for(Task::Omega),
            ..Self::theta_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m < 1 {
            return bad("m must be at least 1".into());
        }
        if self.rounds < 1 {
            return bad("rounds must be at least 1".into());
        }
        if !(self.grid.lo < self.grid.hi) {
            return bad(format!(
                "grid.lo ({}) must be below grid.hi ({})",
                self.grid.lo, self.grid.hi
            ));
        }
        if !(self.grid.resolution > 0.0) || self.grid.resolution > self.grid.width() {
            return bad(format!(
                "grid.resolution must lie in (0, {}]",
                self.grid.width()
            ));
        }
        if !(self.t >= 0.0) || !self.t.is_finite() {
            return bad(format!("t must be non-negative, got {}", self.t));
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        if !self.b.is_finite() {
            return bad("B must be finite".into());
        }
        for (name, v) in [
            ("true_value", self.true_value),
            ("initial_guess", self.initial_guess),
        ] {
            if v < self.grid.lo || v > self.grid.hi {
                return bad(format!(
                    "{name} = {v} lies outside the grid [{}, {}]",
                    self.grid.lo, self.grid.hi
                ));
            }
        }
        let phase = self.b.abs() * self.t * self.grid.width();
        if phase >= 2.0 * std::f64::consts::PI {
            return bad(format!(
                "B·t·(grid width) = {phase:.4} must stay below 2π to keep the likelihood unambiguous"
            ));
        }
        Ok(())
    }

    /// Largest Fisher information per shot, reached once the estimate has
    /// converged.
    pub fn max_fisher(&self) -> f64 {
        let (b, g, t) = (self.b, self.gamma, self.t);
        match (self.task, self.strategy) {
            (Task::Theta, Strategy::QecCorrected) => 4.0 * b * b * t * t + 4.0 * g * t,
            (Task::Theta, Strategy::UnitaryControlled) => 4.0 * b * b * t * t,
            (Task::Omega, Strategy::QecCorrected) => b * b * t.powi(4) + 4.0 / 3.0 * g * t.powi(3),
            (Task::Omega, Strategy::UnitaryControlled) => b * b * t.powi(4),
        }
    }

    /// Cramér-Rao bound `1/(m·K·J_max)`.
    pub fn crb(&self) -> f64 {
        1.0 / ((self.m * self.rounds) as f64 * self.max_fisher())
    }
}

fn two_outcome(p_plus: f64) -> Result<MeasurementDistribution> {
    let p = p_plus.clamp(0.0, 1.0);
    MeasurementDistribution::new(vec![("+".into(), p), ("-".into(), 1.0 - p)])
}

fn theta_qec_p_plus(theta: f64, theta_hat: f64, b: f64, gamma: f64, t: f64) -> f64 {
    let s = (theta - theta_hat).sin();
    0.5 * (1.0 + (-2.0 * t * gamma * s * s).exp() * (2.0 * b * t * s).cos())
}

fn theta_unitary_p_plus(theta: f64, theta_hat: f64, b: f64, t: f64) -> f64 {
    let w = 2.0 * ((theta - theta_hat) / 2.0).sin();
    (b * t * w).cos().powi(2)
}

fn omega_qec_p_plus(omega: f64, omega_hat: f64, b: f64, gamma: f64, t: f64) -> f64 {
    let z = omega_decoherence_exponent(b, gamma, t, omega - omega_hat);
    0.5 * (1.0 + (-z).exp().re)
}

/// `p(±|θ, θ̂) = ½(1 ± e^{−2tγ sin²(θ−θ̂)}cos[2Bt sin(θ−θ̂)])`: logical-X
/// measurement after error-corrected evolution.
pub fn outcome_probability_theta(
    theta: f64,
    theta_hat: f64,
    b: f64,
    gamma: f64,
    t: f64,
) -> Result<MeasurementDistribution> {
    two_outcome(theta_qec_p_plus(theta, theta_hat, b, gamma, t))
}

/// `p(+|Ω, Ω̂) = ½(1 + Re e^{−∫₀ᵗ g})`: logical-X measurement after
/// error-corrected evolution of the rotating field.
pub fn outcome_probability_omega(
    omega: f64,
    omega_hat: f64,
    b: f64,
    gamma: f64,
    t: f64,
) -> Result<MeasurementDistribution> {
    two_outcome(omega_qec_p_plus(omega, omega_hat, b, gamma, t))
}

/// Bell-state return probability `cos²(Bt√(2 − 2cos dθ))` under the
/// reversing control, noise ignored.
pub fn outcome_probability_theta_unitary(
    theta: f64,
    theta_hat: f64,
    b: f64,
    t: f64,
) -> Result<MeasurementDistribution> {
    two_outcome(theta_unitary_p_plus(theta, theta_hat, b, t))
}

/// Bell-state return probability under the reversing control for the
/// rotating field, noise ignored, by direct integration.
pub fn outcome_probability_omega_unitary(
    omega: f64,
    omega_hat: f64,
    b: f64,
    t: f64,
) -> Result<MeasurementDistribution> {
    let u = controlled_omega_propagator(b, omega - omega_hat, t, OMEGA_TABLE_STEPS);
    two_outcome(bell_return_probability(&u))
}

/// `p(+)` of the unitary-control Ω strategy tabulated in `|Ω − Ω̂|` and
/// read back by cubic interpolation.
#[derive(Debug)]
pub struct OmegaUnitaryTable {
    values: Vec<f64>,
    spacing: f64,
}

impl OmegaUnitaryTable {
    pub fn new(b: f64, t: f64, max_detuning: f64) -> Self {
        let n = (max_detuning / OMEGA_TABLE_SPACING).ceil() as usize + 3;
        let values = (0..=n)
            .into_par_iter()
            .map(|i| {
                let a = i as f64 * OMEGA_TABLE_SPACING;
                bell_return_probability(&controlled_omega_propagator(b, a, t, OMEGA_TABLE_STEPS))
            })
            .collect();
        Self {
            values,
            spacing: OMEGA_TABLE_SPACING,
        }
    }

    fn at(&self, i: isize) -> f64 {
        // p is even in the detuning.
        let idx = i.unsigned_abs().min(self.values.len() - 1);
        self.values[idx]
    }

    pub fn p_plus(&self, detuning: f64) -> f64 {
        let x = detuning.abs() / self.spacing;
        let i = x.floor() as isize;
        let f = x - i as f64;
        let (p0, p1, p2, p3) = (self.at(i - 1), self.at(i), self.at(i + 1), self.at(i + 2));
        // Catmull-Rom
        let v = p1
            + 0.5
                * f
                * (p2 - p0
                    + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
        v.clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug)]
enum ProbabilityModel {
    ThetaQec { b: f64, gamma: f64, t: f64 },
    ThetaUnitary { b: f64, t: f64 },
    OmegaQec { b: f64, gamma: f64, t: f64 },
    OmegaUnitary(Arc<OmegaUnitaryTable>),
}

impl ProbabilityModel {
    fn new(config: &AdaptiveConfig) -> Self {
        let (b, gamma, t) = (config.b, config.gamma, config.t);
        match (config.task, config.strategy) {
            (Task::Theta, Strategy::QecCorrected) => Self::ThetaQec { b, gamma, t },
            (Task::Theta, Strategy::UnitaryControlled) => Self::ThetaUnitary { b, t },
            (Task::Omega, Strategy::QecCorrected) => Self::OmegaQec { b, gamma, t },
            (Task::Omega, Strategy::UnitaryControlled) => {
                Self::OmegaUnitary(Arc::new(OmegaUnitaryTable::new(b, t, config.grid.width())))
            }
        }
    }

    fn p_plus(&self, x: f64, x_hat: f64) -> f64 {
        match self {
            Self::ThetaQec { b, gamma, t } => theta_qec_p_plus(x, x_hat, *b, *gamma, *t),
            Self::ThetaUnitary { b, t } => theta_unitary_p_plus(x, x_hat, *b, *t),
            Self::OmegaQec { b, gamma, t } => omega_qec_p_plus(x, x_hat, *b, *gamma, *t),
            Self::OmegaUnitary(table) => table.p_plus(x - x_hat),
        }
    }

    fn log_likelihood(&self, x: f64, x_hat: f64, plus: usize, minus: usize) -> f64 {
        let p = self.p_plus(x, x_hat).clamp(0.0, 1.0);
        let mut ll = 0.0;
        if plus > 0 {
            ll += plus as f64 * p.max(LOG_FLOOR).ln();
        }
        if minus > 0 {
            ll += minus as f64 * (1.0 - p).max(LOG_FLOOR).ln();
        }
        ll
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationRun {
    /// `x̂₀ … x̂_K`
    pub estimates: Vec<f64>,
    /// `(n₊, n₋)` per round.
    pub outcome_history: Vec<(usize, usize)>,
    pub log_likelihood_final: f64,
    pub seed: u64,
}

struct Round {
    x_hat: f64,
    plus: usize,
    minus: usize,
}

fn total_log_likelihood(model: &ProbabilityModel, rounds: &[Round], x: f64) -> f64 {
    rounds
        .iter()
        .map(|r| model.log_likelihood(x, r.x_hat, r.plus, r.minus))
        .sum()
}

/// Grid argmax (lowest point wins ties) refined by golden-section search
/// within the neighbouring cells.
fn maximize(
    model: &ProbabilityModel,
    rounds: &[Round],
    grid: &Grid,
    points: &[f64],
    ll: &[f64],
) -> (f64, f64) {
    let mut best = 0;
    for i in 1..ll.len() {
        if ll[i] > ll[best] {
            best = i;
        }
    }
    let lo = points[best.saturating_sub(1)];
    let hi = points[(best + 1).min(points.len() - 1)];
    let f = |x: f64| total_log_likelihood(model, rounds, x);
    let (mut a, mut b) = (lo, hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if (b - a).abs() < 1e-12 * grid.width().max(1.0) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    if fx > ll[best] {
        (x, fx)
    } else {
        (points[best], ll[best])
    }
}

/// Runs the adaptive protocol with a generator seeded from `config.seed`.
pub fn run_adaptive(config: &AdaptiveConfig) -> Result<EstimationRun> {
    config.validate()?;
    let model = ProbabilityModel::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_with_model(config, &model, &mut rng)
}

/// Runs the adaptive protocol drawing outcomes from `rng`.
pub fn run_adaptive_with_rng<R: Rng + ?Sized>(
    config: &AdaptiveConfig,
    rng: &mut R,
) -> Result<EstimationRun> {
    config.validate()?;
    let model = ProbabilityModel::new(config);
    run_with_model(config, &model, rng)
}

fn run_with_model<R: Rng + ?Sized>(
    config: &AdaptiveConfig,
    model: &ProbabilityModel,
    rng: &mut R,
) -> Result<EstimationRun> {
    let points = config.grid.points();
    let mut ll = vec![0.0; points.len()];
    let mut rounds: Vec<Round> = Vec::with_capacity(config.rounds);
    let mut estimates = Vec::with_capacity(config.rounds + 1);
    let mut outcome_history = Vec::with_capacity(config.rounds);
    let mut x_hat = config.initial_guess;
    let mut log_likelihood_final = 0.0;
    estimates.push(x_hat);

    for _ in 0..config.rounds {
        let p = model.p_plus(config.true_value, x_hat);
        let plus = (0..config.m).filter(|_| rng.random::<f64>() < p).count();
        let minus = config.m - plus;
        outcome_history.push((plus, minus));
        let round = Round { x_hat, plus, minus };
        if config.accumulate {
            for (l, &x) in ll.iter_mut().zip(&points) {
                *l += model.log_likelihood(x, round.x_hat, plus, minus);
            }
            rounds.push(round);
        } else {
            for (l, &x) in ll.iter_mut().zip(&points) {
                *l = model.log_likelihood(x, round.x_hat, plus, minus);
            }
            rounds.clear();
            rounds.push(round);
        }
        let (x, value) = maximize(model, &rounds, &config.grid, &points, &ll);
        x_hat = x;
        log_likelihood_final = value;
        estimates.push(x_hat);
    }
    Ok(EstimationRun {
        estimates,
        outcome_history,
        log_likelihood_final,
        seed: config.seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignResult {
    /// Mean of `(x̂_k − x)²` over repetitions, for `k = 0 … K`.
    pub mse: Vec<f64>,
    pub estimate_mean: Vec<f64>,
    /// `(x̂_K − x)²` of every repetition, in repetition order.
    pub final_squared_errors: Vec<f64>,
    pub crb: f64,
    pub repetitions: usize,
}

/// Repeats the protocol `repetitions` times, seeding repetition `r` with
/// `config.seed XOR r`. Runs in parallel; results do not depend on thread
/// count.
pub fn mse_campaign(config: &AdaptiveConfig, repetitions: usize) -> Result<CampaignResult> {
    if repetitions < 1 {
        return Err(Error::Config("repetitions must be at least 1".into()));
    }
    config.validate()?;
    let model = ProbabilityModel::new(config);
    let runs: Vec<EstimationRun> = (0..repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ r);
            let mut run = run_with_model(config, &model, &mut rng)?;
            run.seed = config.seed ^ r;
            Ok(run)
        })
        .collect::<Result<_>>()?;

    let k = config.rounds + 1;
    let n = repetitions as f64;
    let mut mse = vec![0.0; k];
    let mut estimate_mean = vec![0.0; k];
    for run in &runs {
        for (i, &e) in run.estimates.iter().enumerate() {
            mse[i] += (e - config.true_value).powi(2) / n;
            estimate_mean[i] += e / n;
        }
    }
    let final_squared_errors = runs
        .iter()
        .map(|r| (r.estimates[k - 1] - config.true_value).powi(2))
        .collect();
    Ok(CampaignResult {
        mse,
        estimate_mean,
        final_squared_errors,
        crb: config.crb(),
        repetitions,
    })
}

/// One-sided Welch statistic for `mean(worse) > mean(better)`.
pub fn welch_z(better: &[f64], worse: &[f64]) -> f64 {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, var / n)
    };
    let (mb, vb) = stats(better);
    let (mw, vw) = stats(worse);
    (mw - mb) / (vb + vw).sqrt()
}
