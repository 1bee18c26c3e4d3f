//! Steady-state nonequilibrium Green functions of the three-site network.
//!
//! Sites are ordered (g, e, 5). Both leads attach to g; site 5 couples to the
//! Markovian bath. All self-energies are local and enter the contour-ordered
//! Dyson equation, whose 6×6 inverse yields every real-time component.

mod quadrature;

use nalgebra::{Matrix3, Matrix6};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BondTreatment, Distribution, EffectiveModel, Lead, ModelError};

pub use quadrature::{integrate, integrate_many, Estimate, FrequencyGrid, QuadratureOptions};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KeldyshError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("Dyson matrix is singular at omega = {omega}")]
    Singular { omega: f64 },
    #[error(
        "quadrature did not converge on [{omega_lo}, {omega_hi}]: error estimate {estimate:e} above {tolerance:e}"
    )]
    Accuracy { estimate: f64, tolerance: f64, omega_lo: f64, omega_hi: f64 },
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    G,
    E,
    Five,
}

impl Site {
    pub const ALL: [Site; 3] = [Site::G, Site::E, Site::Five];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeadSide {
    Left,
    Right,
}

/// Retarded, lesser and greater parts of a local self-energy at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteSelfEnergy {
    pub retarded: Complex64,
    pub lesser: Complex64,
    pub greater: Complex64,
}

impl SiteSelfEnergy {
    pub const ZERO: Self = Self { retarded: ZERO, lesser: ZERO, greater: ZERO };

    pub fn advanced(&self) -> Complex64 {
        self.retarded.conj()
    }

    pub fn keldysh(&self) -> Complex64 {
        self.lesser + self.greater
    }

    fn plus_plus(&self) -> Complex64 {
        self.retarded + self.lesser
    }

    fn minus_minus(&self) -> Complex64 {
        self.lesser - self.advanced()
    }

    fn add(self, o: Self) -> Self {
        Self {
            retarded: self.retarded + o.retarded,
            lesser: self.lesser + o.lesser,
            greater: self.greater + o.greater,
        }
    }
}

/// Wide-band Gibbsian lead: returns `(Σ^R, Σ^K)` with
/// `Σ^K = −2iΓ tanh((ω−μ)/2T)` (a sign step at `T = 0`).
pub fn lead_self_energy(gamma: f64, mu: f64, temperature: f64, omega: f64) -> (Complex64, Complex64) {
    let s = lead_components(&Lead { gamma, distribution: Distribution::Gibbs { mu, temperature } }, omega);
    (s.retarded, s.keldysh())
}

pub fn lead_components(lead: &Lead, omega: f64) -> SiteSelfEnergy {
    let f = lead.distribution.occupation(omega);
    let g = lead.gamma;
    SiteSelfEnergy {
        retarded: Complex64::new(0.0, -g),
        lesser: Complex64::new(0.0, 2.0 * g * f),
        greater: Complex64::new(0.0, -2.0 * g * (1.0 - f)),
    }
}

/// Self-energy of site 5 from the empty Markovian bath with enhancement `e_nh`.
///
/// The retarded part is `−i e_nh Γ_5` in both treatments and nothing is ever
/// injected (`Σ^< = 0`). The greater part is `−2i e_nh Γ_5` for a causal bath
/// and `−2i Γ_5` on the time loop, where only the bare forward amplitude
/// feeds the reservoir.
pub fn markov_self_energy(gamma_5: f64, e_nh: f64, bond: BondTreatment) -> Result<SiteSelfEnergy, KeldyshError> {
    if !(gamma_5 >= 0.0) {
        return Err(KeldyshError::Domain(format!("Gamma_5 must be >= 0, got {gamma_5}")));
    }
    if !(e_nh >= 1.0) {
        return Err(KeldyshError::Domain(format!("e_nh must be >= 1, got {e_nh}")));
    }
    let absorbed = match bond {
        BondTreatment::Causal => e_nh * gamma_5,
        BondTreatment::TimeLoop => gamma_5,
    };
    Ok(SiteSelfEnergy {
        retarded: Complex64::new(0.0, -e_nh * gamma_5),
        lesser: ZERO,
        greater: Complex64::new(0.0, -2.0 * absorbed),
    })
}

/// Real single-particle Hamiltonian of the network.
pub fn hamiltonian(model: &EffectiveModel) -> Matrix3<Complex64> {
    let mut h = Matrix3::zeros();
    h[(0, 0)] = Complex64::new(model.eps_g, 0.0);
    h[(1, 1)] = Complex64::new(model.eps_e, 0.0);
    h[(2, 2)] = Complex64::new(model.eps_5.re, 0.0);
    h[(1, 0)] = model.t_eg;
    h[(0, 1)] = model.t_eg.conj();
    h[(2, 1)] = model.t_e5;
    h[(1, 2)] = model.t_e5.conj();
    h
}

/// Site-diagonal self-energies `[g, e, 5]` at `omega`.
pub fn self_energies(model: &EffectiveModel, omega: f64) -> Result<[SiteSelfEnergy; 3], KeldyshError> {
    let leads = lead_components(&model.leads[0], omega).add(lead_components(&model.leads[1], omega));
    Ok([leads, SiteSelfEnergy::ZERO, markov_self_energy(model.gamma_5, model.e_nh, model.bond)?])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensPoint {
    pub retarded: Matrix3<Complex64>,
    pub lesser: Matrix3<Complex64>,
    pub greater: Matrix3<Complex64>,
}

impl GreensPoint {
    pub fn advanced(&self) -> Matrix3<Complex64> {
        self.retarded.adjoint()
    }

    pub fn keldysh(&self) -> Matrix3<Complex64> {
        self.lesser + self.greater
    }
}

fn invert6(m: Matrix6<Complex64>, omega: f64) -> Result<Matrix6<Complex64>, KeldyshError> {
    m.try_inverse().ok_or(KeldyshError::Singular { omega })
}

fn greens_with(
    h: &Matrix3<Complex64>,
    sigma: &[SiteSelfEnergy; 3],
    omega: f64,
) -> Result<GreensPoint, KeldyshError> {
    let x = Matrix3::from_diagonal_element(Complex64::new(omega, 0.0)) - h;
    // Contour-ordered inverse [[X − Σ⁺⁺, Σ⁺⁻], [Σ⁻⁺, −X − Σ⁻⁻]]; its inverse
    // holds G^< in the upper-right and G^> in the lower-left block.
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&x);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-x));
    let mut gr_inv = x;
    for (j, s) in sigma.iter().enumerate() {
        m[(j, j)] -= s.plus_plus();
        m[(j + 3, j + 3)] -= s.minus_minus();
        m[(j, j + 3)] += s.lesser;
        m[(j + 3, j)] += s.greater;
        gr_inv[(j, j)] -= s.retarded;
    }
    let g = invert6(m, omega)?;
    let retarded = gr_inv.try_inverse().ok_or(KeldyshError::Singular { omega })?;
    Ok(GreensPoint {
        retarded,
        lesser: g.fixed_view::<3, 3>(0, 3).into_owned(),
        greater: g.fixed_view::<3, 3>(3, 0).into_owned(),
    })
}

/// `G^R`, `G^<` and `G^>` at a single frequency.
pub fn greens(omega: f64, model: &EffectiveModel) -> Result<GreensPoint, KeldyshError> {
    model.validate()?;
    greens_with(&hamiltonian(model), &self_energies(model, omega)?, omega)
}

/// Frequency-resolved integrands of every steady-state observable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    /// `−i G^<_jj(ω)`.
    pub density: [f64; 3],
    pub lead_inflow: [f64; 2],
    pub loss: f64,
}

fn spectral_point(model: &EffectiveModel, h: &Matrix3<Complex64>, omega: f64) -> Result<SpectralPoint, KeldyshError> {
    let sigma = self_energies(model, omega)?;
    let g = greens_with(h, &sigma, omega)?;
    let density = [0, 1, 2].map(|j| (-I * g.lesser[(j, j)]).re);
    let hole = |j: usize| (I * g.greater[(j, j)]).re;
    // Inflow from a reservoir: (−iΣ^<)(iG^>) − (iΣ^>)(−iG^<) on its site.
    let inflow = |s: &SiteSelfEnergy, j: usize| (-I * s.lesser).re * hole(j) - (I * s.greater).re * density[j];
    let leads = [0, 1].map(|k| inflow(&lead_components(&model.leads[k], omega), 0));
    Ok(SpectralPoint { density, lead_inflow: leads, loss: -inflow(&sigma[2], 2) })
}

/// Solver settings for frequency integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Absolute quadrature tolerance for every integrated observable.
    pub tolerance: f64,
    /// Finite window half-width in units of the largest model scale.
    pub window_factor: f64,
    pub max_depth: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, window_factor: 50.0, max_depth: 12 }
    }
}

/// Frequency grid whose breakpoints follow the poles of `G^R` and the Fermi
/// edges of the leads.
pub fn grid_for(model: &EffectiveModel, opts: &SolverOptions) -> Result<FrequencyGrid, KeldyshError> {
    let mut h_eff = hamiltonian(model);
    let sigma = self_energies(model, 0.0)?;
    for (j, s) in sigma.iter().enumerate() {
        h_eff[(j, j)] += s.retarded;
    }
    let poles: Vec<Complex64> = h_eff.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default();
    let mut scale: f64 = [model.eps_g, model.eps_e, model.eps_5.re, model.t_eg.norm(), model.t_e5.norm()]
        .iter()
        .map(|x| x.abs())
        .fold(model.total_lead_gamma() + model.e_nh * model.gamma_5, f64::max);
    let mut edges = Vec::new();
    for lead in &model.leads {
        if let Distribution::Gibbs { mu, temperature } = lead.distribution {
            scale = scale.max(mu.abs()).max(temperature);
            edges.extend([-8.0, -2.0, 0.0, 2.0, 8.0].map(|k| mu + k * temperature));
        }
    }
    for p in &poles {
        let w = p.im.abs().max(1e-12);
        edges.extend([-16.0, -4.0, -1.0, 0.0, 1.0, 4.0, 16.0].map(|k| p.re + k * w));
    }
    let omega_max = opts.window_factor * scale.max(1e-3);
    let mut r = 0.0625;
    while r < omega_max {
        edges.extend([-r, r]);
        r *= 2.0;
    }
    FrequencyGrid::new(omega_max, edges)
}

/// Integrated steady-state observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub occupation: [f64; 3],
    pub lead_current: [f64; 2],
    pub loss_current: f64,
    /// `I_L + I_R − I_loss`.
    pub continuity_residual: f64,
    pub error_estimate: f64,
}

/// Occupations and currents from a single adaptive pass over the frequency axis.
pub fn solve(model: &EffectiveModel, opts: &SolverOptions) -> Result<Observables, KeldyshError> {
    model.validate()?;
    let h = hamiltonian(model);
    let grid = grid_for(model, opts)?;
    let q = QuadratureOptions { tolerance: opts.tolerance, max_depth: opts.max_depth };
    let two_pi = 2.0 * std::f64::consts::PI;
    let est = integrate_many(
        |w| {
            let p = spectral_point(model, &h, w)?;
            Ok([p.density[0], p.density[1], p.density[2], p.lead_inflow[0], p.lead_inflow[1], p.loss].map(|x| x / two_pi))
        },
        &grid,
        &q,
    )?;
    let v = est.value;
    Ok(Observables {
        occupation: [v[0], v[1], v[2]],
        lead_current: [v[3], v[4]],
        loss_current: v[5],
        continuity_residual: v[3] + v[4] - v[5],
        error_estimate: est.error,
    })
}

/// `n_j = ∫ dω/2π (−i) G^<_jj(ω)`.
pub fn occupation(model: &EffectiveModel, site: Site, opts: &SolverOptions) -> Result<f64, KeldyshError> {
    Ok(solve(model, opts)?.occupation[site.index()])
}

/// Particle current flowing from the chosen lead into the junction.
pub fn lead_current(model: &EffectiveModel, side: LeadSide, opts: &SolverOptions) -> Result<f64, KeldyshError> {
    Ok(solve(model, opts)?.lead_current[side as usize])
}

/// Particle current absorbed by the bath on site 5.
pub fn loss_current(model: &EffectiveModel, opts: &SolverOptions) -> Result<f64, KeldyshError> {
    Ok(solve(model, opts)?.loss_current)
}

/// `∫ dω/2π (−2 Im G^R_jj)` for each site.
pub fn spectral_sum_rule(model: &EffectiveModel, opts: &SolverOptions) -> Result<[f64; 3], KeldyshError> {
    model.validate()?;
    let h = hamiltonian(model);
    let grid = grid_for(model, opts)?;
    let q = QuadratureOptions { tolerance: opts.tolerance, max_depth: opts.max_depth };
    let est = integrate_many(
        |w| {
            let g = greens_with(&h, &self_energies(model, w)?, w)?;
            Ok([0, 1, 2].map(|j| -2.0 * g.retarded[(j, j)].im / (2.0 * std::f64::consts::PI)))
        },
        &grid,
        &q,
    )?;
    Ok(est.value)
}
