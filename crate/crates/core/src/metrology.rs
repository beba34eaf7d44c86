//! Fidelity, symmetric logarithmic derivatives, quantum and classical Fisher
//! information, and closed-form reference values for the built-in models.

use crate::error::{Error, Result};
use crate::qmat::{hermitian_eig, sqrtm_psd, CMatrix, CVector, DensityMatrix, C64};

/// Central finite-difference step used for state derivatives.
pub const FD_STEP: f64 = 1e-5;

/// Relative agreement required between the `δ` and `δ/2` derivatives.
pub const RICHARDSON_TOL: f64 = 1e-6;

/// SLD support cutoff relative to the largest eigenvalue.
pub const KERNEL_TOL: f64 = 1e-12;

/// Outcomes below this probability are treated as vanishing in [`cfi`].
pub const CFI_PROBABILITY_FLOOR: f64 = 1e-14;

/// Eigenvalues of `√ρ₁ρ₂√ρ₁` below this are rounding noise.
const FIDELITY_EIG_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FisherMethod {
    ClosedForm,
    Sld,
    FidelityFd,
    TrajectoryCfi,
    MeasurementCfi,
}

/// Model point a Fisher information was evaluated at. Fields that do not
/// apply are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FisherParams {
    pub b: Option<f64>,
    pub gamma: Option<f64>,
    pub t: Option<f64>,
    pub d_param: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherResult {
    pub value: f64,
    pub method: FisherMethod,
    pub params: FisherParams,
}

impl FisherResult {
    fn new(value: f64, method: FisherMethod, params: FisherParams) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Numeric(format!(
                "Fisher information is not finite ({value})"
            )));
        }
        Ok(Self {
            value: value.max(0.0),
            method,
            params,
        })
    }

    fn closed(
        value: f64,
        b: Option<f64>,
        gamma: Option<f64>,
        t: f64,
        d_param: Option<f64>,
    ) -> Self {
        let params = FisherParams {
            b,
            gamma,
            t: Some(t),
            d_param,
        };
        Self {
            value: value.max(0.0),
            method: FisherMethod::ClosedForm,
            params,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementDistribution {
    outcomes: Vec<(String, f64)>,
}

impl MeasurementDistribution {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(outcomes: Vec<(String, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Distribution("no outcomes".into()));
        }
        let mut sum = 0.0;
        for (label, p) in &outcomes {
            if !p.is_finite() || *p < -Self::SUM_TOL {
                return Err(Error::Distribution(format!(
                    "outcome {label} has probability {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::Distribution(format!(
                "probabilities sum to {sum:.15}"
            )));
        }
        let outcomes = outcomes.into_iter().map(|(l, p)| (l, p.max(0.0))).collect();
        Ok(Self { outcomes })
    }

    /// Outcomes labelled `0, 1, …`.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        Self::new(
            probs
                .iter()
                .enumerate()
                .map(|(i, &p)| (i.to_string(), p))
                .collect(),
        )
    }

    pub fn outcomes(&self) -> &[(String, f64)] {
        &self.outcomes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|(_, p)| *p).collect()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Outcome probabilities `⟨v_i|ρ|v_i⟩` of a projective measurement onto
/// orthonormal `basis`. Any weight outside the span of `basis` is reported
/// as an extra `"other"` outcome.
pub fn projective_distribution(
    rho: &DensityMatrix,
    basis: &[CVector],
) -> Result<MeasurementDistribution> {
    let mut outcomes: Vec<(String, f64)> = basis
        .iter()
        .enumerate()
        .map(|(i, v)| (i.to_string(), rho.expectation(v).re.max(0.0)))
        .collect();
    let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
    if basis.len() < rho.dim() {
        outcomes.push(("other".into(), (1.0 - total).max(0.0)));
    }
    let sum: f64 = outcomes.iter().map(|(_, p)| p).sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Distribution(format!(
            "projective outcomes sum to {sum:.12}"
        )));
    }
    for o in &mut outcomes {
        o.1 /= sum;
    }
    MeasurementDistribution::new(outcomes)
}

/// Bell basis `Φ⁺, Φ⁻, Ψ⁺, Ψ⁻`.
pub fn bell_basis() -> [CVector; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        CVector::from_real(&[h, 0.0, 0.0, h]),
        CVector::from_real(&[h, 0.0, 0.0, -h]),
        CVector::from_real(&[0.0, h, h, 0.0]),
        CVector::from_real(&[0.0, h, -h, 0.0]),
    ]
}

fn same_dim(r1: &CMatrix, r2: &CMatrix) -> Result<()> {
    if r1.dim() != r2.dim() {
        return Err(Error::Dimension(format!(
            "states have dimensions {} and {}",
            r1.dim(),
            r2.dim()
        )));
    }
    Ok(())
}

/// Uhlmann fidelity `Tr√(√ρ₁ ρ₂ √ρ₁)` (not squared).
pub fn fidelity(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    same_dim(r1, r2)?;
    let s = sqrtm_psd(r1).map_err(|e| Error::Domain(e.to_string()))?;
    let m = s.matmul(r2).matmul(&s).hermitian_part();
    let eig = hermitian_eig(&m)?;
    if eig.values[0] < -crate::qmat::PSD_TOL {
        return Err(Error::Domain(format!(
            "negative eigenvalue {:.3e} in fidelity",
            eig.values[0]
        )));
    }
    Ok(eig
        .values
        .iter()
        .map(|&l| {
            if l < FIDELITY_EIG_FLOOR {
                0.0
            } else {
                l.sqrt()
            }
        })
        .sum())
}

/// `Tr(ρ₁ρ₂) + 2√(det ρ₁ det ρ₂)` for qubits. This equals the square of
/// [`fidelity`].
pub fn fidelity_qubit(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<f64> {
    if r1.dim() != 2 || r2.dim() != 2 {
        return Err(Error::Dimension(format!(
            "qubit fidelity needs 2x2 states, got {} and {}",
            r1.dim(),
            r2.dim()
        )));
    }
    let det = |m: &CMatrix| (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re.max(0.0);
    Ok(r1.trace_product(r2).re + 2.0 * (det(r1) * det(r2)).sqrt())
}

/// Symmetric logarithmic derivative `L` solving `∂ρ = (Lρ + ρL)/2`, with
/// `L = 0` on pairs whose eigenvalue sum is below [`KERNEL_TOL`]·λ_max.
pub fn sld(rho: &DensityMatrix, drho: &CMatrix) -> Result<CMatrix> {
    sld_with_tol(rho, drho, KERNEL_TOL)
}

pub fn sld_with_tol(rho: &DensityMatrix, drho: &CMatrix, kernel_tol: f64) -> Result<CMatrix> {
    same_dim(rho, drho)?;
    let deviation = drho.hermiticity_deviation();
    if deviation > 1e-8 * drho.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = hermitian_eig(rho)?;
    let v = &eig.vectors;
    let d = v.dagger().matmul(drho).matmul(v);
    let n = rho.dim();
    let lmax = eig.values[n - 1].max(0.0);
    let cutoff = kernel_tol * lmax;
    let mut l = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let s = eig.values[i] + eig.values[j];
            if s > cutoff {
                l[(i, j)] = d[(i, j)] * (2.0 / s);
            }
        }
    }
    Ok(v.matmul(&l).matmul(&v.dagger()).hermitian_part())
}

/// `Tr(ρL²)`.
pub fn qfi_sld(rho: &DensityMatrix, drho: &CMatrix) -> Result<FisherResult> {
    let l = sld(rho, drho)?;
    let value = rho.trace_product(&l.matmul(&l)).re;
    FisherResult::new(value, FisherMethod::Sld, FisherParams::default())
}

fn central_difference<F>(state_map: &F, x: f64, delta: f64) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    let plus = state_map(x + delta)?;
    let minus = state_map(x - delta)?;
    Ok((&*plus - &*minus).scale_real(1.0 / (2.0 * delta)))
}

/// `∂ρ/∂x` by central differences at `δ` and `δ/2`, Richardson-extrapolated.
/// Fails if the two step sizes disagree by more than [`RICHARDSON_TOL`].
pub fn state_derivative<F>(state_map: &F, x: f64, delta: f64) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {delta}"
        )));
    }
    let d1 = central_difference(state_map, x, delta)?;
    let d2 = central_difference(state_map, x, delta / 2.0)?;
    let scale = d2.max_abs().max(1e-3);
    let relative = d1.max_abs_diff(&d2) / scale;
    if relative > RICHARDSON_TOL {
        return Err(Error::FiniteDifference { relative });
    }
    Ok((&d2.scale_real(4.0) - &d1)
        .scale_real(1.0 / 3.0)
        .hermitian_part())
}

/// QFI of a state family through the SLD, with the derivative taken by
/// [`state_derivative`] at step [`FD_STEP`].
pub fn qfi_sld_map<F>(state_map: F, x: f64) -> Result<FisherResult>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    let rho = state_map(x)?;
    let drho = state_derivative(&state_map, x, FD_STEP)?;
    qfi_sld(&rho, &drho)
}

/// QFI from the Bures metric, `8[1 − F(ρ_x, ρ_{x+δ})]/δ²`, averaged over
/// `+δ` and `−δ` so the `O(δ)` bias cancels. Unlike the SLD route this stays
/// continuous where the rank of `ρ_x` changes.
pub fn qfi_fidelity_fd<F>(state_map: F, x: f64, delta: f64) -> Result<FisherResult>
where
    F: Fn(f64) -> Result<DensityMatrix>,
{
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {delta}"
        )));
    }
    let r0 = state_map(x)?;
    let mut deficit = 0.0;
    for side in [delta, -delta] {
        let f = fidelity(&r0, &state_map(x + side)?)?;
        if f > 1.0 + 1e-8 {
            return Err(Error::Numeric(format!("fidelity {f} exceeds one")));
        }
        deficit += (1.0 - f).max(0.0);
    }
    let value = 4.0 * deficit / (delta * delta);
    FisherResult::new(
        value,
        FisherMethod::FidelityFd,
        FisherParams {
            d_param: Some(delta),
            ..Default::default()
        },
    )
}

/// Classical Fisher information `Σ (∂p_i)²/p_i` by five-point central
/// differences.
///
/// An outcome whose probability vanishes at `x` sits at a minimum, so its
/// contribution is the limit `2∂²p_i`.
pub fn cfi<F>(dist_map: F, x: f64, delta: f64) -> Result<FisherResult>
where
    F: Fn(f64) -> Result<MeasurementDistribution>,
{
    cfi_with_method(dist_map, x, delta, FisherMethod::MeasurementCfi)
}

pub fn cfi_with_method<F>(
    dist_map: F,
    x: f64,
    delta: f64,
    method: FisherMethod,
) -> Result<FisherResult>
where
    F: Fn(f64) -> Result<MeasurementDistribution>,
{
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "finite-difference step must be positive, got {delta}"
        )));
    }
    let p0 = dist_map(x)?.probabilities();
    let pp = dist_map(x + delta)?.probabilities();
    let pm = dist_map(x - delta)?.probabilities();
    let pp2 = dist_map(x + 2.0 * delta)?.probabilities();
    let pm2 = dist_map(x - 2.0 * delta)?.probabilities();
    if [&pp, &pm, &pp2, &pm2].iter().any(|p| p.len() != p0.len()) {
        return Err(Error::Distribution(
            "outcome count changes with the parameter".into(),
        ));
    }
    let mut value = 0.0;
    for i in 0..p0.len() {
        if p0[i] < CFI_PROBABILITY_FLOOR {
            let second = (-pp2[i] + 16.0 * pp[i] - 30.0 * p0[i] + 16.0 * pm[i] - pm2[i])
                / (12.0 * delta * delta);
            value += 2.0 * second.max(0.0);
        } else {
            let d = (-pp2[i] + 8.0 * pp[i] - 8.0 * pm[i] + pm2[i]) / (12.0 * delta);
            value += d * d / p0[i];
        }
    }
    FisherResult::new(
        value,
        method,
        FisherParams {
            d_param: Some(delta),
            ..Default::default()
        },
    )
}

/// `x / (eˣ − 1)`, continuous at zero.
fn x_over_expm1(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - x / 2.0
    } else {
        x / x.exp_m1()
    }
}

/// Free evolution of the Bell probe along `σ_n(θ)`: `2[1 − e^{−2γt}cos 2Bt]`.
pub fn qfi_theta_free_closed(b: f64, gamma: f64, t: f64) -> FisherResult {
    let value = 2.0 * (1.0 - (-2.0 * gamma * t).exp() * (2.0 * b * t).cos());
    FisherResult::closed(value, Some(b), Some(gamma), t, None)
}

/// Error-corrected θ estimation with a code built at `θ − dθ`:
/// `4t²cos²dθ·[B²(1 − e^{−x}) + 4γ²sin²dθ]/(eˣ − 1)`, `x = 4γt·sin²dθ`,
/// evaluated in the cancellation-free form
/// `4t²cos²dθ·B²e^{−x} + 4γt·cos²dθ·x/(eˣ − 1)`.
pub fn qfi_theta_qec_closed(b: f64, gamma: f64, t: f64, dtheta: f64) -> FisherResult {
    let (s, c) = dtheta.sin_cos();
    let x = 4.0 * gamma * t * s * s;
    let value =
        4.0 * t * t * c * c * b * b * (-x).exp() + 4.0 * gamma * t * c * c * x_over_expm1(x);
    FisherResult::closed(value, Some(b), Some(gamma), t, Some(dtheta))
}

struct OmegaExponent {
    /// `γ`-part of the decoherence exponent divided by `γ`.
    u: f64,
    /// `u'²/u`, finite at zero detuning.
    du_sq_over_u: f64,
    dv: f64,
}

/// Below this `|Ω − Ω̂|·t` the detuning functions use their Taylor series.
const OMEGA_SERIES_THRESHOLD: f64 = 1e-2;

fn omega_exponent(t: f64, a: f64) -> OmegaExponent {
    let y = a * t;
    if y.abs() < OMEGA_SERIES_THRESHOLD {
        let y2 = y * y;
        let uu = 4.0 / 6.0 - y2 * (16.0 / 120.0 - y2 * (64.0 / 5040.0 - y2 * 256.0 / 362880.0));
        let p = 8.0 / 6.0 - y2 * (64.0 / 120.0 - y2 * (384.0 / 5040.0 - y2 * 2048.0 / 362880.0));
        let dv = t * t * (0.5 - y2 * (3.0 / 24.0 - y2 * (5.0 / 720.0 - y2 * 7.0 / 40320.0)));
        OmegaExponent {
            u: t * y2 * uu,
            du_sq_over_u: t.powi(3) * p * p / uu,
            dv,
        }
    } else {
        let u = t - (2.0 * y).sin() / (2.0 * a);
        let du = -t * (2.0 * y).cos() / a + (2.0 * y).sin() / (2.0 * a * a);
        let dv = t * y.sin() / a - (1.0 - y.cos()) / (a * a);
        OmegaExponent {
            u,
            du_sq_over_u: du * du / u,
            dv,
        }
    }
}

/// `∫₀ᵗ g(τ)dτ = 2iB(1 − cos at)/a + γ(t − sin(2at)/(2a))`, `a = Ω − Ω̂`:
/// the log-decay of the logical coherence for the rotating-field code.
pub fn omega_decoherence_exponent(b: f64, gamma: f64, t: f64, domega: f64) -> C64 {
    let y = domega * t;
    let (u, v) = if y.abs() < OMEGA_SERIES_THRESHOLD {
        let e = omega_exponent(t, domega);
        let y2 = y * y;
        (
            e.u,
            t * y * (0.5 - y2 * (1.0 / 24.0 - y2 * (1.0 / 720.0 - y2 / 40320.0))),
        )
    } else {
        (
            t - (2.0 * y).sin() / (2.0 * domega),
            (1.0 - y.cos()) / domega,
        )
    };
    C64::new(gamma * u, 2.0 * b * v)
}

/// Error-corrected Ω estimation with a code built at `Ω − dΩ`. The logical
/// qubit has coherence `e^{−∫g}`; with `u, v` its real and imaginary parts
/// per unit `γ` and `2B`, the QFI is `γ²u'²/(e^{2γu} − 1) + 4B²e^{−2γu}v'²`.
/// Equals `B²t⁴ + (4/3)γt³` at `dΩ = 0`.
pub fn qfi_omega_qec_closed(b: f64, gamma: f64, t: f64, domega: f64) -> FisherResult {
    let e = omega_exponent(t, domega);
    let two_gu = 2.0 * gamma * e.u;
    let dephasing = 0.5 * gamma * e.du_sq_over_u * x_over_expm1(two_gu);
    let rotation = 4.0 * b * b * (-two_gu).exp() * e.dv * e.dv;
    FisherResult::closed(dephasing + rotation, Some(b), Some(gamma), t, Some(domega))
}

/// Noiseless θ estimation with the reversing control at `θ − dθ`:
/// `½[1 + 4B²t² + 4B²t²cos dθ − cos(2Bt√(2 − 2cos dθ))]`.
pub fn qfi_theta_unitary_controlled(b: f64, t: f64, dtheta: f64) -> FisherResult {
    let w = 2.0 * (dtheta / 2.0).sin();
    let bt = b * t;
    let value = 0.5 * (4.0 * bt * bt * (1.0 + dtheta.cos()) + 2.0 * (bt * w).sin().powi(2));
    FisherResult::closed(value, Some(b), None, t, Some(dtheta))
}

/// Noiseless Ω estimation with the reversing control at `Ω − dΩ`, to second
/// order: `B²t⁴(1 − t²dΩ²/18)`, floored at zero outside its validity range.
pub fn qfi_omega_unitary_controlled(b: f64, t: f64, domega: f64) -> FisherResult {
    let value = b * b * t.powi(4) * (1.0 - t * t * domega * domega / 18.0);
    FisherResult::closed(value, Some(b), None, t, Some(domega))
}

/// Field-strength estimation with the Bell probe under strength
/// fluctuations: `4t²e^{−4γt}`.
pub fn qfi_b_trajectory_averaged(t: f64, gamma: f64) -> FisherResult {
    let value = 4.0 * t * t * (-4.0 * gamma * t).exp();
    FisherResult::closed(value, None, Some(gamma), t, None)
}
