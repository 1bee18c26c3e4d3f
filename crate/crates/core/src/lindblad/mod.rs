//! Dense Lindblad master-equation engine for a few fermionic modes and at
//! most a handful of truncated bosonic modes.
//!
//! dρ/dt = −i[H, ρ] + Σ_m γ_m (L_m ρ L_m† − ½{L_m† L_m, ρ})

mod quadratic;
mod space;
mod steady;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use quadratic::quadratic_steady_state;
pub use space::{HilbertSpace, Mode};
pub use steady::{
    steady_state, steady_state_by_evolution, steady_state_null_space, steady_state_with, SteadyStateOptions,
};

pub type Operator = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LindbladError {
    #[error("dimension mismatch: expected {expected}x{expected}, found {rows}x{cols}")]
    DimensionMismatch { expected: usize, rows: usize, cols: usize },
    #[error("integration diverged at step {step}")]
    Divergence { step: usize },
    #[error("steady state is not unique: null space of dimension {dimension}")]
    NonUniqueSteadyState { dimension: usize },
    #[error("steady state requires at least one channel with positive rate")]
    NoDissipation,
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("channel {channel} violates the commutant precondition (commutator norm {norm:e})")]
    CommutantViolation { channel: usize, norm: f64 },
    #[error("time evolution did not reach ||drho/dt|| < {tolerance:e} by t = {time} (residual {residual:e})")]
    NotConverged { tolerance: f64, time: f64, residual: f64 },
    #[error("drift spectrum touches the imaginary axis (max Re = {max_real:e}); no decaying steady state")]
    NoDecay { max_real: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Single dissipative channel `γ D[L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    pub op: Operator,
    pub rate: f64,
}

impl JumpChannel {
    pub fn new(op: Operator, rate: f64) -> Result<Self, LindbladError> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(LindbladError::InvalidArgument(format!("jump rate must be >= 0, got {rate}")));
        }
        Ok(Self { op, rate })
    }
}

/// Hermitian, unit-trace, positive semidefinite state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-10;

    pub fn new(m: Operator) -> Result<Self, LindbladError> {
        if !m.is_square() || m.nrows() < 2 {
            return Err(LindbladError::InvalidState(format!(
                "expected a square matrix of dimension >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.norm().max(f64::MIN_POSITIVE);
        let herm = (&m - m.adjoint()).norm();
        if herm > Self::HERMITICITY_TOL * scale {
            return Err(LindbladError::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > Self::TRACE_TOL {
            return Err(LindbladError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let rho = Self(m);
        let min = rho.min_eigenvalue();
        if min < -Self::POSITIVITY_TOL {
            return Err(LindbladError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Hermitizes and normalizes without the positivity check.
    pub(crate) fn from_raw(mut m: Operator) -> Self {
        m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = m.trace().re;
        m /= Complex64::new(tr, 0.0);
        Self(m)
    }

    pub fn pure(psi: &[Complex64]) -> Result<Self, LindbladError> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let n = v.norm();
        if n == 0.0 {
            return Err(LindbladError::InvalidState("zero state vector".into()));
        }
        let v = v / Complex64::new(n, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self, LindbladError> {
        let mut m = Operator::zeros(dim, dim);
        if k >= dim {
            return Err(LindbladError::InvalidState(format!("basis index {k} >= dimension {dim}")));
        }
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self, LindbladError> {
        Self::new(Operator::identity(dim, dim) / Complex64::new(dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Operator {
        &self.0
    }

    pub fn into_matrix(self) -> Operator {
        self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }
}

fn check_dim(op: &Operator, dim: usize) -> Result<(), LindbladError> {
    if op.nrows() != dim || op.ncols() != dim {
        return Err(LindbladError::DimensionMismatch { expected: dim, rows: op.nrows(), cols: op.ncols() });
    }
    Ok(())
}

fn check_all(h: &Operator, channels: &[JumpChannel], dim: usize) -> Result<(), LindbladError> {
    check_dim(h, dim)?;
    channels.iter().try_for_each(|c| check_dim(&c.op, dim))
}

/// Non-Hermitian drift `−iH − ½ Σ γ L†L`, so that
/// dρ/dt = Aρ + ρA† + Σ γ LρL†.
pub(crate) fn drift(h: &Operator, channels: &[JumpChannel]) -> Operator {
    let mut a = h * (-I);
    for c in channels.iter().filter(|c| c.rate > 0.0) {
        a -= (c.op.adjoint() * &c.op) * Complex64::new(0.5 * c.rate, 0.0);
    }
    a
}

fn apply_with_drift(a: &Operator, channels: &[JumpChannel], rho: &Operator) -> Operator {
    let mut out = a * rho;
    out += rho * a.adjoint();
    for c in channels.iter().filter(|c| c.rate > 0.0) {
        out += (&c.op * rho * c.op.adjoint()) * Complex64::new(c.rate, 0.0);
    }
    out
}

/// Right-hand side of the master equation.
pub fn liouvillian_apply(
    h: &Operator,
    channels: &[JumpChannel],
    rho: &Operator,
) -> Result<Operator, LindbladError> {
    check_dim(rho, rho.nrows())?;
    check_all(h, channels, rho.nrows())?;
    Ok(apply_with_drift(&drift(h, channels), channels, rho))
}

/// `Tr(O ρ)`.
pub fn expectation(o: &Operator, rho: &DensityMatrix) -> Result<Complex64, LindbladError> {
    check_dim(o, rho.dim())?;
    Ok(trace_product(o, rho.matrix()))
}

/// `Tr(A B)` without forming the product.
pub(crate) fn trace_product(a: &Operator, b: &Operator) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest rate scale of the generator, used to pick the RK4 step.
pub fn spectral_scale(h: &Operator, channels: &[JumpChannel]) -> f64 {
    let norm1 = |m: &Operator| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut s = 2.0 * norm1(h);
    for c in channels {
        let n = norm1(&c.op);
        s += 2.0 * c.rate * n * n;
    }
    s.max(f64::MIN_POSITIVE)
}

/// Default step `0.02 / scale`.
pub fn default_step(h: &Operator, channels: &[JumpChannel]) -> f64 {
    0.02 / spectral_scale(h, channels)
}

fn rk4_step(a: &Operator, channels: &[JumpChannel], rho: &Operator, dt: f64) -> Operator {
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let k1 = apply_with_drift(a, channels, rho);
    let k2 = apply_with_drift(a, channels, &(rho + &k1 * half));
    let k3 = apply_with_drift(a, channels, &(rho + &k2 * half));
    let k4 = apply_with_drift(a, channels, &(rho + &k3 * full));
    let sixth = Complex64::new(dt / 6.0, 0.0);
    rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * sixth
}

/// Fixed-step RK4 propagation returning the state at every `sample_every`-th
/// step (and at `t = 0` and `t_final`).
pub fn evolve_trajectory(
    rho0: &DensityMatrix,
    h: &Operator,
    channels: &[JumpChannel],
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<Vec<(f64, DensityMatrix)>, LindbladError> {
    check_all(h, channels, rho0.dim())?;
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(LindbladError::InvalidArgument(format!("need dt > 0 and t_final >= 0 (dt = {dt}, t = {t_final})")));
    }
    let steps = (t_final / dt).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let a = drift(h, channels);
    let mut rho = rho0.matrix().clone();
    let mut out = vec![(0.0, rho0.clone())];
    let sample_every = sample_every.max(1);
    for step in 1..=steps {
        let next = rk4_step(&a, channels, &rho, dt);
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LindbladError::Divergence { step });
        }
        rho = (&next + next.adjoint()) * Complex64::new(0.5, 0.0);
        if step % sample_every == 0 || step == steps {
            out.push((step as f64 * dt, DensityMatrix(rho.clone())));
        }
    }
    Ok(out)
}

/// RK4 propagation to `t_final`; the step is shrunk so it divides `t_final`.
pub fn evolve(
    rho0: &DensityMatrix,
    h: &Operator,
    channels: &[JumpChannel],
    t_final: f64,
    dt: f64,
) -> Result<DensityMatrix, LindbladError> {
    let mut traj = evolve_trajectory(rho0, h, channels, t_final, dt, usize::MAX)?;
    Ok(traj.pop().expect("trajectory holds the initial state").1)
}

pub(crate) fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// `|Tr(O_L dρ/dt) − Tr(O_L (−i)[H, ρ])|` for an observable commuting with
/// every jump operator and its adjoint.
pub fn commutant_drift_check(
    o: &Operator,
    h: &Operator,
    channels: &[JumpChannel],
    rho: &DensityMatrix,
) -> Result<f64, LindbladError> {
    check_dim(o, rho.dim())?;
    check_all(h, channels, rho.dim())?;
    let scale = o.norm().max(1.0);
    for (idx, c) in channels.iter().enumerate() {
        let scale = scale * c.op.norm().max(1.0);
        let norm = commutator(o, &c.op).norm().max(commutator(o, &c.op.adjoint()).norm());
        if norm > 1e-12 * scale {
            return Err(LindbladError::CommutantViolation { channel: idx, norm });
        }
    }
    let full = liouvillian_apply(h, channels, rho.matrix())?;
    let unitary = commutator(h, rho.matrix()) * (-I);
    Ok((trace_product(o, &full) - trace_product(o, &unitary)).norm())
}

/// Maximum over `trajectory` of `|i ∂t⟨L⟩ − Tr(L [H_eff, ρ])|` with
/// `H_eff = H − i(γ/2) L†L`, where `∂t⟨L⟩` is taken from the full generator
/// with all `channels` (of which `leap` must be one that commutes with the rest).
pub fn leap_expectation_check(
    leap: &JumpChannel,
    h: &Operator,
    channels: &[JumpChannel],
    trajectory: &[(f64, DensityMatrix)],
) -> Result<f64, LindbladError> {
    let mut worst: f64 = 0.0;
    let h_eff = effective_hamiltonian(h, leap);
    for (_, rho) in trajectory {
        check_all(h, channels, rho.dim())?;
        let deriv = liouvillian_apply(h, channels, rho.matrix())?;
        let lhs = I * trace_product(&leap.op, &deriv);
        let rhs = trace_product(&leap.op, &commutator(&h_eff, rho.matrix()));
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Maximum over `trajectory` of `|∂t⟨L†⟩ − conj(∂t⟨L⟩)|`, with `∂t⟨L†⟩` taken
/// from `Tr(L† [H_eff†, ρ])`.
pub fn leap_conjugate_check(
    leap: &JumpChannel,
    h: &Operator,
    channels: &[JumpChannel],
    trajectory: &[(f64, DensityMatrix)],
) -> Result<f64, LindbladError> {
    let h_eff = effective_hamiltonian(h, leap);
    let h_eff_dag = h_eff.adjoint();
    let l_dag = leap.op.adjoint();
    let mut worst: f64 = 0.0;
    for (_, rho) in trajectory {
        let deriv = liouvillian_apply(h, channels, rho.matrix())?;
        let d_l = trace_product(&leap.op, &deriv);
        let d_ldag = -I * trace_product(&l_dag, &commutator(&h_eff_dag, rho.matrix()));
        worst = worst.max((d_ldag - d_l.conj()).norm());
    }
    Ok(worst)
}

pub fn effective_hamiltonian(h: &Operator, leap: &JumpChannel) -> Operator {
    h - (leap.op.adjoint() * &leap.op) * Complex64::new(0.0, 0.5 * leap.rate)
}
