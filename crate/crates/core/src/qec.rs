//! Adaptive error correction for the direction and rotating-frequency
//! models, and a general engine that expands the corrected dynamics of any
//! model to second order in the parameter error.
//!
//! A code is a two-dimensional subspace `span{C₀, C₁}` of the probe+ancilla
//! space, built from the current estimate. Time-dependent codes move rigidly
//! under a frame generator `G`: `|C_i(t)⟩ = e^{iGt}|C_i(0)⟩`.

use crate::dynamics::{lindblad_evolve_interval, sigma_n_theta, LindbladModel};
use crate::error::{Error, Result};
use crate::metrology::omega_decoherence_exponent;
use crate::metrology::{FisherMethod, FisherParams, FisherResult};
use crate::qmat::{
    expm, hermitian_eig, on_probe, pauli_x, pauli_z, polar_isometry, CMatrix, CVector,
    DensityMatrix, C64,
};

/// `d_kk` below this marks an error operator that acts trivially on the code.
pub const DEG_TOL: f64 = 1e-12;

/// Off-diagonal Gram entries above this trigger orthogonalization.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// Trace lost in a recovery beyond this is reported as leakage.
pub const LEAKAGE_TOL: f64 = 1e-6;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct QecCode {
    c0: CVector,
    c1: CVector,
    recovery: Vec<CMatrix>,
    frame_generator: Option<CMatrix>,
}

impl QecCode {
    /// A code from explicit basis vectors and recovery Kraus operators, all
    /// given at `t = 0`.
    pub fn new(
        c0: CVector,
        c1: CVector,
        recovery: Vec<CMatrix>,
        frame_generator: Option<CMatrix>,
    ) -> Result<Self> {
        let dim = c0.dim();
        if c1.dim() != dim {
            return Err(Error::Dimension("code vectors differ in dimension".into()));
        }
        for v in [&c0, &c1] {
            if (v.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Domain(format!(
                    "code vector has norm {:.12}",
                    v.norm()
                )));
            }
        }
        let overlap = c0.inner(&c1).norm();
        if overlap > 1e-12 {
            return Err(Error::Orthogonality {
                k: 0,
                j: 1,
                overlap,
            });
        }
        if recovery.iter().any(|k| k.dim() != dim) {
            return Err(Error::Dimension(
                "recovery operator dimension mismatch".into(),
            ));
        }
        if let Some(g) = &frame_generator {
            if g.dim() != dim {
                return Err(Error::Dimension(
                    "frame generator dimension mismatch".into(),
                ));
            }
            let deviation = g.hermiticity_deviation();
            if deviation > 1e-10 {
                return Err(Error::NotHermitian { deviation });
            }
        }
        Ok(Self {
            c0,
            c1,
            recovery,
            frame_generator,
        })
    }

    /// Same code with a different recovery channel.
    pub fn with_recovery(&self, recovery: Vec<CMatrix>) -> Result<Self> {
        Self::new(
            self.c0.clone(),
            self.c1.clone(),
            recovery,
            self.frame_generator.clone(),
        )
    }

    pub fn dim(&self) -> usize {
        self.c0.dim()
    }

    pub fn frame_generator(&self) -> Option<&CMatrix> {
        self.frame_generator.as_ref()
    }

    /// `e^{iGt}`, the identity for static codes.
    pub fn frame(&self, t: f64) -> CMatrix {
        match &self.frame_generator {
            Some(g) if t != 0.0 => expm(&g.scale(I * t)).expect("finite frame generator"),
            _ => CMatrix::identity(self.dim()),
        }
    }

    pub fn basis(&self, t: f64) -> (CVector, CVector) {
        let w = self.frame(t);
        (w.apply(&self.c0), w.apply(&self.c1))
    }

    pub fn projector(&self, t: f64) -> CMatrix {
        let (c0, c1) = self.basis(t);
        &CMatrix::projector(&c0) + &CMatrix::projector(&c1)
    }

    pub fn recovery(&self, t: f64) -> Vec<CMatrix> {
        if self.frame_generator.is_none() {
            return self.recovery.clone();
        }
        let w = self.frame(t);
        self.recovery.iter().map(|k| k.conjugate_by(&w)).collect()
    }

    /// `|C₀⟩⟨C₀| − |C₁⟩⟨C₁|`
    pub fn logical_z(&self, t: f64) -> CMatrix {
        let (c0, c1) = self.basis(t);
        &CMatrix::projector(&c0) - &CMatrix::projector(&c1)
    }

    /// `|C₀⟩⟨C₁| + |C₁⟩⟨C₀|`
    pub fn logical_x(&self, t: f64) -> CMatrix {
        let (c0, c1) = self.basis(t);
        &CMatrix::outer(&c0, &c1) + &CMatrix::outer(&c1, &c0)
    }

    /// `(|C₀⟩ ± |C₁⟩)/√2`, the eigenvectors of the logical X.
    pub fn logical_x_basis(&self, t: f64) -> [CVector; 2] {
        let (c0, c1) = self.basis(t);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        [c0.add(&c1).scale(h), c0.sub(&c1).scale(h)]
    }

    pub fn plus_state(&self, t: f64) -> CVector {
        let [plus, _] = self.logical_x_basis(t);
        plus
    }

    /// Maps a state into the frame co-moving with the code, `e^{−iGt} ρ e^{iGt}`.
    pub fn to_rotating_frame(&self, rho: &DensityMatrix, t: f64) -> DensityMatrix {
        DensityMatrix::from_trusted(rho.conjugate_by(&self.frame(t).dagger()))
    }

    /// `‖Σ K†K − I‖_max` restricted to `subspace` (a projector).
    pub fn recovery_completeness(&self, subspace: &CMatrix, t: f64) -> f64 {
        let mut s = CMatrix::zeros(self.dim());
        for k in self.recovery(t) {
            s = &s + &k.dagger().matmul(&k);
        }
        subspace.matmul(&s).matmul(subspace).max_abs_diff(subspace)
    }
}

/// `|±_θ̂⟩`, the eigenvectors of `∂σ_n(θ̂)/∂θ` with eigenvalues `±1`.
pub fn theta_code_vectors(theta_hat: f64) -> (CVector, CVector) {
    let (s, c) = (theta_hat / 2.0).sin_cos();
    (CVector::from_real(&[-c, s]), CVector::from_real(&[s, c]))
}

/// Code `{|+_θ̂⟩|+_θ̂⟩, |−_θ̂⟩|−_θ̂⟩}` with recovery `{Π_C, Π_C σ_n(θ̂)}`.
pub fn theta_code(theta_hat: f64) -> QecCode {
    let (plus, minus) = theta_code_vectors(theta_hat);
    let c0 = plus.kron(&plus);
    let c1 = minus.kron(&minus);
    let pi = &CMatrix::projector(&c0) + &CMatrix::projector(&c1);
    let flip = pi.matmul(&on_probe(&sigma_n_theta(theta_hat)));
    QecCode::new(c0, c1, vec![pi, flip], None).expect("orthonormal code")
}

/// Rotating code `{|+(Ω̂,t)⟩|0⟩, |−(Ω̂,t)⟩|1⟩}` built from the eigenvectors
/// of `∂H/∂Ω`, moving under `G = (Ω̂/2)σ₃ ⊗ I`.
pub fn omega_code(omega_hat: f64) -> QecCode {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = CVector::new(vec![C64::new(h, 0.0), C64::new(0.0, -h)]);
    let minus = CVector::new(vec![C64::new(h, 0.0), C64::new(0.0, h)]);
    let c0 = plus.kron(&CVector::basis(2, 0));
    let c1 = minus.kron(&CVector::basis(2, 1));
    let pi = &CMatrix::projector(&c0) + &CMatrix::projector(&c1);
    let flip = pi.matmul(&on_probe(&pauli_x()));
    let g = on_probe(&pauli_z()).scale_real(omega_hat / 2.0);
    QecCode::new(c0, c1, vec![pi, flip], Some(g)).expect("orthonormal code")
}

/// Applies the code's recovery channel at time `t`.
pub fn apply_recovery(code: &QecCode, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    apply_kraus(&code.recovery(t), rho)
}

fn apply_kraus(kraus: &[CMatrix], rho: &DensityMatrix) -> Result<DensityMatrix> {
    let mut out = CMatrix::zeros(rho.dim());
    for k in kraus {
        out = &out + &rho.conjugate_by(k);
    }
    let loss = 1.0 - out.trace().re;
    if loss > LEAKAGE_TOL {
        return Err(Error::Leakage { loss });
    }
    Ok(DensityMatrix::from_trusted(out))
}

/// How a moving code frame is followed between recoveries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FrameControl {
    /// Recover with the code at the interval start, then rotate the state by
    /// `Ũ(τ) = e^{iGτ}`.
    #[default]
    Discrete,
    /// Apply the control Hamiltonian `−G` throughout and recover with the
    /// code at the interval end. Same continuum limit, smaller cadence error.
    Continuous,
}

/// Evolves under `model` for time `t`, recovering `n_recoveries` times at
/// equal intervals. Each interval integrates the master equation with steps
/// no larger than `dt`, applies the recovery of the code at the interval
/// start, then moves the state with the code frame.
pub fn corrected_evolve(
    model: &LindbladModel,
    code: &QecCode,
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
    n_recoveries: usize,
) -> Result<DensityMatrix> {
    corrected_evolve_with(
        model,
        code,
        rho0,
        t,
        dt,
        n_recoveries,
        FrameControl::Discrete,
    )
}

pub fn corrected_evolve_with(
    model: &LindbladModel,
    code: &QecCode,
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
    n_recoveries: usize,
    frame_control: FrameControl,
) -> Result<DensityMatrix> {
    if n_recoveries == 0 {
        return Err(Error::Domain("at least one recovery is required".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "evolution time must be positive, got {t}"
        )));
    }
    if model.dim() != code.dim() {
        return Err(Error::Dimension("model and code dimensions differ".into()));
    }
    let interval = t / n_recoveries as f64;
    let step = dt.min(interval);
    let mut rho = rho0.clone();
    match (code.frame_generator(), frame_control) {
        (Some(g), FrameControl::Continuous) => {
            let controlled = model.with_control(g.scale_real(-1.0))?;
            for i in 0..n_recoveries {
                let t0 = i as f64 * interval;
                rho = lindblad_evolve_interval(&controlled, &rho, t0, interval, step)?;
                rho = apply_recovery(code, &rho, t0 + interval)?;
            }
        }
        (frame, _) => {
            let advance = code.frame(interval);
            for i in 0..n_recoveries {
                let t0 = i as f64 * interval;
                rho = lindblad_evolve_interval(model, &rho, t0, interval, step)?;
                rho = apply_recovery(code, &rho, t0)?;
                if frame.is_some() {
                    rho = DensityMatrix::from_trusted(rho.conjugate_by(&advance));
                }
            }
        }
    }
    Ok(rho)
}

/// Corrected evolution of the direction model from the logical plus state
/// (the Bell state) of the code at `θ̂`.
pub fn corrected_evolve_theta(
    b: f64,
    gamma: f64,
    theta: f64,
    theta_hat: f64,
    t: f64,
    dt: f64,
    n_recoveries: usize,
) -> Result<DensityMatrix> {
    let model = crate::dynamics::theta_model(b, gamma, theta)?;
    let code = theta_code(theta_hat);
    let rho0 = DensityMatrix::pure(&code.plus_state(0.0));
    corrected_evolve(&model, &code, &rho0, t, dt, n_recoveries)
}

/// Corrected evolution of the rotating-field model from the logical plus
/// state of the code at `Ω̂`. The result is in the laboratory frame.
pub fn corrected_evolve_omega(
    b: f64,
    gamma: f64,
    omega: f64,
    omega_hat: f64,
    t: f64,
    dt: f64,
    n_recoveries: usize,
) -> Result<DensityMatrix> {
    corrected_evolve_omega_with(
        b,
        gamma,
        omega,
        omega_hat,
        t,
        dt,
        n_recoveries,
        FrameControl::Discrete,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn corrected_evolve_omega_with(
    b: f64,
    gamma: f64,
    omega: f64,
    omega_hat: f64,
    t: f64,
    dt: f64,
    n_recoveries: usize,
    frame_control: FrameControl,
) -> Result<DensityMatrix> {
    let model = crate::dynamics::omega_model(b, gamma, omega)?;
    let code = omega_code(omega_hat);
    let rho0 = DensityMatrix::pure(&code.plus_state(0.0));
    corrected_evolve_with(&model, &code, &rho0, t, dt, n_recoveries, frame_control)
}

fn logical_state(c0: &CVector, c1: &CVector, coherence: C64) -> DensityMatrix {
    let diag = &CMatrix::projector(c0) + &CMatrix::projector(c1);
    let off = CMatrix::outer(c0, c1).scale(coherence);
    let m = &(&diag + &off) + &off.dagger();
    DensityMatrix::from_trusted(m.scale_real(0.5))
}

/// `½(|C₀⟩⟨C₀| + |C₁⟩⟨C₁| + e^{−gt}|C₀⟩⟨C₁| + h.c.)` with
/// `g = 2iB sin(θ−θ̂) + 2γ sin²(θ−θ̂)`.
pub fn corrected_state_theta_closed(
    b: f64,
    gamma: f64,
    theta: f64,
    theta_hat: f64,
    t: f64,
) -> DensityMatrix {
    let s = (theta - theta_hat).sin();
    let g = C64::new(2.0 * gamma * s * s, 2.0 * b * s);
    let (c0, c1) = theta_code(theta_hat).basis(0.0);
    logical_state(&c0, &c1, (-g * t).exp())
}

/// Rotating-frame corrected state of the rotating-field model: the logical
/// plus state with coherence `e^{−∫₀ᵗ g}`,
/// `g(τ) = 2 sin((Ω−Ω̂)τ)[iB + γ sin((Ω−Ω̂)τ)]`.
pub fn corrected_state_omega_rotating(
    b: f64,
    gamma: f64,
    omega: f64,
    omega_hat: f64,
    t: f64,
) -> DensityMatrix {
    let exponent = omega_decoherence_exponent(b, gamma, t, omega - omega_hat);
    let code = omega_code(omega_hat);
    let (c0, c1) = code.basis(0.0);
    logical_state(&c0, &c1, (-exponent).exp())
}

/// Laboratory-frame image of [`corrected_state_omega_rotating`].
pub fn corrected_state_omega_closed(
    b: f64,
    gamma: f64,
    omega: f64,
    omega_hat: f64,
    t: f64,
) -> DensityMatrix {
    let rot = corrected_state_omega_rotating(b, gamma, omega, omega_hat, t);
    let w = omega_code(omega_hat).frame(t);
    DensityMatrix::from_trusted(rot.conjugate_by(&w))
}

/// Projected error-correction quantities `Π E_k Π = α_k Π` and
/// `Π E_k†E_j Π = β_kj Π`, with the residuals of each fit.
#[derive(Clone, Debug)]
pub struct QecConditions {
    pub alpha: Vec<C64>,
    /// `beta[k][j]`
    pub beta: Vec<Vec<C64>>,
    /// `β_kk − |α_k|²`
    pub d: Vec<f64>,
    pub alpha_residuals: Vec<f64>,
    pub beta_residuals: Vec<Vec<f64>>,
}

impl QecConditions {
    pub fn max_residual(&self) -> f64 {
        self.alpha_residuals
            .iter()
            .chain(self.beta_residuals.iter().flatten())
            .fold(0.0, |a, &b| a.max(b))
    }

    /// The worst violation above `tol`, if any, named as `alpha[k]` or
    /// `beta[k,j]`.
    pub fn violation(&self, tol: f64) -> Option<(String, f64)> {
        let mut worst: Option<(String, f64)> = None;
        let mut consider = |name: String, r: f64| {
            if r > tol && worst.as_ref().is_none_or(|(_, w)| r > *w) {
                worst = Some((name, r));
            }
        };
        for (k, &r) in self.alpha_residuals.iter().enumerate() {
            consider(format!("alpha[{k}]"), r);
        }
        for (k, row) in self.beta_residuals.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                consider(format!("beta[{k},{j}]"), r);
            }
        }
        worst
    }
}

fn projected_scalar(pi: &CMatrix, op: &CMatrix) -> (C64, f64) {
    let proj = pi.matmul(op).matmul(pi);
    let coeff = proj.trace() / pi.trace().re;
    (coeff, proj.max_abs_diff(&pi.scale(coeff)))
}

fn conditions_for(pi: &CMatrix, lindblads: &[CMatrix]) -> QecConditions {
    let n = lindblads.len();
    let mut alpha = Vec::with_capacity(n);
    let mut alpha_residuals = Vec::with_capacity(n);
    for e in lindblads {
        let (a, r) = projected_scalar(pi, e);
        alpha.push(a);
        alpha_residuals.push(r);
    }
    let mut beta = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut beta_residuals = vec![vec![0.0; n]; n];
    for k in 0..n {
        let ekd = lindblads[k].dagger();
        for j in 0..n {
            let (b, r) = projected_scalar(pi, &ekd.matmul(&lindblads[j]));
            beta[k][j] = b;
            beta_residuals[k][j] = r;
        }
    }
    let d = (0..n)
        .map(|k| beta[k][k].re - alpha[k].norm_sqr())
        .collect();
    QecConditions {
        alpha,
        beta,
        d,
        alpha_residuals,
        beta_residuals,
    }
}

fn require_code_dim(model: &LindbladModel, code: &QecCode) -> Result<()> {
    if code.dim() != model.dim() {
        return Err(Error::Dimension(format!(
            "code lives in dimension {}, model in {}",
            code.dim(),
            model.dim()
        )));
    }
    Ok(())
}

/// Fits the error-correction conditions for the model's Lindblad operators
/// at `t = 0` without judging them.
pub fn measure_qec_conditions(model: &LindbladModel, code: &QecCode) -> Result<QecConditions> {
    require_code_dim(model, code)?;
    Ok(conditions_for(&code.projector(0.0), &model.lindblads(0.0)))
}

/// As [`measure_qec_conditions`], failing on the worst residual above `tol`.
pub fn check_qec_conditions(
    model: &LindbladModel,
    code: &QecCode,
    tol: f64,
) -> Result<QecConditions> {
    let c = measure_qec_conditions(model, code)?;
    if let Some((term, residual)) = c.violation(tol) {
        return Err(Error::CodeCondition { term, residual });
    }
    Ok(c)
}

/// Second-order term of the corrected generator:
/// `L₂(ρ) = −i[G, ρ] + Σ J ρ J† − ½{A, ρ}`.
#[derive(Clone, Debug)]
pub struct L2Action {
    pub generator: CMatrix,
    pub jumps: Vec<CMatrix>,
    pub anti: CMatrix,
}

impl L2Action {
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = self.generator.commutator(rho).scale(-I);
        for j in &self.jumps {
            out = &out + &j.matmul(rho).matmul(&j.dagger());
        }
        &out - &self.anti.anticommutator(rho).scale_real(0.5)
    }
}

/// Everything the general engine derives for a model and code at the
/// working point.
#[derive(Clone, Debug)]
pub struct GeneralQecReport {
    pub conditions: QecConditions,
    /// Unitary recombination of the Lindblad operators that made the error
    /// Gram matrix diagonal (identity when no recombination was needed).
    pub mixing: CMatrix,
    /// `d_kk` after recombination.
    pub d: Vec<f64>,
    /// Isometries `U_k` for every non-degenerate error.
    pub isometries: Vec<CMatrix>,
    pub code_projector: CMatrix,
    /// `{Π_C, Π_C U_k†}`
    pub recovery: Vec<CMatrix>,
    /// `Π_C H Π_C`; `L₀(ρ) = −i[·, ρ]`.
    pub l0_generator: CMatrix,
    /// `−Π_C H Π_C`, cancelling `L₀`.
    pub control_hamiltonian: CMatrix,
    /// `H̃ = Π_C[Ḣ + (i/2)Σ(E_k†Ė_k − Ė_k†E_k)]Π_C`; `L₁(ρ) = −i[H̃, ρ]`.
    pub l1_generator: CMatrix,
    pub l2: L2Action,
}

impl GeneralQecReport {
    pub fn l0_apply(&self, rho: &CMatrix) -> CMatrix {
        self.l0_generator.commutator(rho).scale(-I)
    }

    pub fn l1_apply(&self, rho: &CMatrix) -> CMatrix {
        self.l1_generator.commutator(rho).scale(-I)
    }

    pub fn l2_apply(&self, rho: &CMatrix) -> CMatrix {
        self.l2.apply(rho)
    }

    /// `Σ K ρ K†` over the recovery channel.
    pub fn recover(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.dim());
        for k in &self.recovery {
            out = &out + &rho.conjugate_by(k);
        }
        out
    }
}

fn mix(ops: &[CMatrix], v: &CMatrix) -> Vec<CMatrix> {
    let n = ops.len();
    (0..n)
        .map(|j| {
            let mut acc = CMatrix::zeros(ops[0].dim());
            for k in 0..n {
                acc = &acc + &ops[k].scale(v[(k, j)]);
            }
            acc
        })
        .collect()
}

/// Builds the recovery and the second-order expansion of the corrected
/// generator, `L₀ + L₁·dx + L₂·dx²`, for a model carrying first and second
/// parameter derivatives.
pub fn expansion_superoperators(
    model: &LindbladModel,
    code: &QecCode,
    tol: f64,
) -> Result<GeneralQecReport> {
    let first = model
        .first_derivs()
        .ok_or_else(|| Error::Domain("model has no first derivatives".into()))?;
    let second = model
        .second_derivs()
        .ok_or_else(|| Error::Domain("model has no second derivatives".into()))?;
    let conditions = check_qec_conditions(model, code, tol)?;
    let pi = code.projector(0.0);
    let dim = model.dim();
    let n = conditions.alpha.len();

    let mut e = model.lindblads(0.0);
    let mut de = first.lindblads.clone();
    let mut dde = second.lindblads.clone();
    let mut alpha = conditions.alpha.clone();

    // Gram matrix of M_k = (E_k − α_k)Π_C.
    let mut gram = CMatrix::zeros(n.max(1));
    for k in 0..n {
        for j in 0..n {
            gram[(k, j)] = conditions.beta[k][j] - alpha[k].conj() * alpha[j];
        }
    }
    let mut mixing = CMatrix::identity(n.max(1));
    let off_diag = (0..n)
        .flat_map(|k| (0..n).filter(move |&j| j != k).map(move |j| (k, j)))
        .map(|(k, j)| gram[(k, j)].norm())
        .fold(0.0, f64::max);
    if n > 1 && off_diag > ORTHOGONALITY_TOL {
        let eig = hermitian_eig(&gram)?;
        mixing = eig.vectors.clone();
        e = mix(&e, &mixing);
        de = mix(&de, &mixing);
        dde = mix(&dde, &mixing);
        alpha = (0..n)
            .map(|j| (0..n).map(|k| alpha[k] * mixing[(k, j)]).sum())
            .collect();
    }

    let m: Vec<CMatrix> = (0..n)
        .map(|k| (&e[k] - &CMatrix::identity(dim).scale(alpha[k])).matmul(&pi))
        .collect();
    let mut d = vec![0.0; n];
    for k in 0..n {
        d[k] = (m[k].dagger().matmul(&m[k]).trace().re / 2.0).max(0.0);
        for j in 0..k {
            let overlap = m[k].dagger().matmul(&m[j]).max_abs();
            if overlap > ORTHOGONALITY_TOL.max(tol) {
                return Err(Error::Orthogonality { k, j, overlap });
            }
        }
    }

    let mut isometries = Vec::new();
    let mut nondegenerate = Vec::new();
    for k in 0..n {
        if d[k] < DEG_TOL {
            let coupling = (0..n)
                .map(|j| m[k].dagger().matmul(&de[j]).matmul(&pi).max_abs())
                .fold(0.0, f64::max);
            if coupling > ORTHOGONALITY_TOL {
                return Err(Error::DegenerateError {
                    k,
                    d: d[k],
                    coupling,
                });
            }
            continue;
        }
        let polar = polar_isometry(&m[k], &pi, tol.max(1e-10))?;
        isometries.push(polar.isometry);
        nondegenerate.push(k);
    }

    let mut recovery = vec![pi.clone()];
    recovery.extend(isometries.iter().map(|u| pi.matmul(&u.dagger())));

    let h0 = model.hamiltonian(0.0);
    let l0_generator = pi.matmul(&h0).matmul(&pi);
    let control_hamiltonian = l0_generator.scale_real(-1.0);

    let half_i = C64::new(0.0, 0.5);
    let mut h_tilde = first.hamiltonian.clone();
    let mut h2 = second.hamiltonian.clone();
    for k in 0..n {
        let ed = e[k].dagger();
        h_tilde = &h_tilde + &(&ed.matmul(&de[k]) - &de[k].dagger().matmul(&e[k])).scale(half_i);
        h2 = &h2 + &(&ed.matmul(&dde[k]) - &dde[k].dagger().matmul(&e[k])).scale(half_i);
    }
    let l1_generator = pi.matmul(&h_tilde).matmul(&pi).hermitian_part();
    let generator = pi.matmul(&h2).matmul(&pi).scale_real(0.5).hermitian_part();

    let mut jumps = Vec::new();
    let mut anti = CMatrix::zeros(dim);
    for dek in &de {
        jumps.push(pi.matmul(dek).matmul(&pi));
        anti = &anti + &pi.matmul(&dek.dagger()).matmul(dek).matmul(&pi);
    }
    for &j in &nondegenerate {
        let scale = 1.0 / d[j].sqrt();
        for dek in &de {
            let op = m[j].dagger().matmul(dek).matmul(&pi);
            jumps.push(op.scale_real(scale));
        }
    }

    Ok(GeneralQecReport {
        conditions,
        mixing,
        d,
        isometries,
        code_projector: pi,
        recovery,
        l0_generator,
        control_hamiltonian,
        l1_generator,
        l2: L2Action {
            generator,
            jumps,
            anti: anti.hermitian_part(),
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticQfi {
    /// `4t²·Var_ψ(H̃) − 4t·⟨ψ|L₂(|ψ⟩⟨ψ|)|ψ⟩`
    pub value: f64,
    pub variance: f64,
    pub l1_expectation: f64,
    pub l2_expectation: f64,
    pub t: f64,
}

impl AsymptoticQfi {
    pub fn fisher(&self) -> FisherResult {
        FisherResult {
            value: self.value.max(0.0),
            method: FisherMethod::ClosedForm,
            params: FisherParams {
                t: Some(self.t),
                d_param: Some(0.0),
                ..Default::default()
            },
        }
    }
}

/// QFI of a code-space probe once the estimate has converged.
pub fn asymptotic_qfi(report: &GeneralQecReport, psi: &CVector, t: f64) -> Result<AsymptoticQfi> {
    let pi = &report.code_projector;
    if psi.dim() != pi.dim() {
        return Err(Error::Dimension(
            "probe dimension differs from the code".into(),
        ));
    }
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("probe has norm {:.12}", psi.norm())));
    }
    let outside = pi.apply(psi).sub(psi).norm();
    if outside > 1e-8 {
        return Err(Error::Domain(format!(
            "probe has weight {outside:.3e} outside the code space"
        )));
    }
    let h = &report.l1_generator;
    let mean = h.expectation(psi).re;
    let variance = (h.matmul(h).expectation(psi).re - mean * mean).max(0.0);
    let rho = CMatrix::projector(psi);
    let l1_expectation = report.l1_apply(&rho).expectation(psi).re;
    if l1_expectation.abs() > 1e-10 {
        return Err(Error::Numeric(format!(
            "⟨L₁⟩ = {l1_expectation:.3e} is not zero"
        )));
    }
    let l2_expectation = report.l2_apply(&rho).expectation(psi).re;
    let value = 4.0 * t * t * variance - 4.0 * t * l2_expectation;
    Ok(AsymptoticQfi {
        value,
        variance,
        l1_expectation,
        l2_expectation,
        t,
    })
}

/// Integrates `dρ/dt = L₁(ρ)·dx + L₂(ρ)·dx²` (with `L₀` cancelled by the
/// control Hamiltonian) from `rho0` for time `t` with `steps` RK4 steps.
pub fn expansion_evolve(
    report: &GeneralQecReport,
    rho0: &DensityMatrix,
    dx: f64,
    t: f64,
    steps: usize,
) -> Result<DensityMatrix> {
    if steps == 0 {
        return Err(Error::Domain("at least one step is required".into()));
    }
    let f = |rho: &CMatrix| {
        &report.l1_apply(rho).scale_real(dx) + &report.l2_apply(rho).scale_real(dx * dx)
    };
    let h = t / steps as f64;
    let mut rho = rho0.matrix().clone();
    for _ in 0..steps {
        let k1 = f(&rho);
        let k2 = f(&(&rho + &k1.scale_real(0.5 * h)));
        let k3 = f(&(&rho + &k2.scale_real(0.5 * h)));
        let k4 = f(&(&rho + &k3.scale_real(h)));
        let incr = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
        rho = (&rho + &incr.scale_real(h / 6.0)).hermitian_part();
    }
    if !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(DensityMatrix::from_trusted(rho))
}
