//! Physical parameters of the lambda-system junction and the reduction from
//! the light-matter model to the purely fermionic effective network.
//!
//! Units: ħ = k_B = 1. Linearized baths use the convention `2 v_F = 1`
//! unless a different Fermi velocity is supplied.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("bath coupling must be strictly positive, got Gamma_5 = {0}")]
    NonPositiveBathCoupling(f64),
    #[error("photon loss rate must be non-negative, got Gamma_e5 = {0}")]
    NegativePhotonLoss(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown Hamiltonian term `{0}` (expected one of g-e, e-5, 5-5b)")]
    UnknownTerm(String),
}

/// How the e-5 bond amplitude of the effective model is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpontaneousBond {
    /// Mean-field product `t_e5 = lambda_e5 * alpha_e5`.
    Coherent { alpha_e5: Complex64 },
    /// `t_e5` given directly.
    Direct(Complex64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroscopicParams {
    pub eps_g: f64,
    pub eps_e: f64,
    pub eps_5: f64,
    pub omega_eg: f64,
    pub omega_e5: f64,
    pub lambda_eg: Complex64,
    pub lambda_e5: Complex64,
    /// Coherent amplitude of the driven g-e photon mode.
    pub alpha_eg: Complex64,
    pub e5_bond: SpontaneousBond,
    /// Cavity loss rate of the spontaneous mode; the jump rate is `2 * gamma_e5`.
    pub gamma_e5: f64,
    pub t_5: Complex64,
    pub t_l: Complex64,
    pub t_r: Complex64,
    pub mu_l: f64,
    pub mu_r: f64,
    pub temperature: f64,
    pub v_f: f64,
}

impl MicroscopicParams {
    /// Parameters of the loss-current figure at drive `gamma = |t_eg|^2`:
    /// resonant drive, `t_{L,R} = 1/2`, `t_e5 = t_5 = 1`, `k_B T = 0.1`.
    pub fn junction_defaults(gamma: f64, gamma_e5: f64, delta_mu: f64) -> Self {
        let (eps_g, eps_5, eps_e) = (0.0, 2.0, 10.0);
        Self {
            eps_g,
            eps_e,
            eps_5,
            omega_eg: eps_e - eps_g,
            omega_e5: eps_e - eps_5,
            lambda_eg: Complex64::new(1.0, 0.0),
            lambda_e5: Complex64::new(1.0, 0.0),
            alpha_eg: Complex64::new(gamma.sqrt(), 0.0),
            e5_bond: SpontaneousBond::Direct(Complex64::new(1.0, 0.0)),
            gamma_e5,
            t_5: Complex64::new(1.0, 0.0),
            t_l: Complex64::new(0.5, 0.0),
            t_r: Complex64::new(0.5, 0.0),
            mu_l: delta_mu / 2.0,
            mu_r: -delta_mu / 2.0,
            temperature: 0.1,
            v_f: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |msg: String| Err(ModelError::InvalidParameter(msg));
        if !(self.eps_e > self.eps_5 && self.eps_5 > self.eps_g) {
            return invalid(format!(
                "level ordering eps_e > eps_5 > eps_g violated ({}, {}, {})",
                self.eps_e, self.eps_5, self.eps_g
            ));
        }
        if !(self.gamma_e5 >= 0.0) {
            return Err(ModelError::NegativePhotonLoss(self.gamma_e5));
        }
        if !(self.temperature >= 0.0) {
            return invalid(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.v_f > 0.0) {
            return invalid(format!("Fermi velocity must be > 0, got {}", self.v_f));
        }
        // The spontaneous mode is emitted on resonance; a detuned e-5 photon
        // would split the e and 5 effective site energies.
        let scale = self.eps_e.abs().max(self.eps_5.abs()).max(1.0);
        let offset = self.omega_e5 - (self.eps_e - self.eps_5);
        if offset.abs() > 1e-9 * scale {
            return invalid(format!(
                "spontaneous photon must be resonant: omega_e5 - (eps_e - eps_5) = {offset}"
            ));
        }
        Ok(())
    }

    pub fn t_eg_eff(&self) -> Complex64 {
        self.lambda_eg * self.alpha_eg
    }

    pub fn t_e5_eff(&self) -> Complex64 {
        match self.e5_bond {
            SpontaneousBond::Coherent { alpha_e5 } => self.lambda_e5 * alpha_e5,
            SpontaneousBond::Direct(t) => t,
        }
    }
}

/// Occupation law of a fermionic reservoir attached to site g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    /// Thermal reservoir at chemical potential `mu` and temperature `temperature`.
    Gibbs { mu: f64, temperature: f64 },
    /// Structureless reservoir with a frequency-independent occupation.
    Flat { occupation: f64 },
}

impl Distribution {
    /// Fermi factor `f(omega)`; at zero temperature the step is taken as 1/2 at `omega = mu`.
    pub fn occupation(&self, omega: f64) -> f64 {
        match *self {
            Distribution::Gibbs { mu, temperature } => {
                if temperature > 0.0 {
                    0.5 * (1.0 + ((mu - omega) / (2.0 * temperature)).tanh())
                } else if omega < mu {
                    1.0
                } else if omega > mu {
                    0.0
                } else {
                    0.5
                }
            }
            Distribution::Flat { occupation } => occupation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lead {
    /// Wide-band broadening `Gamma = |t|^2 / (2 v_F)`.
    pub gamma: f64,
    pub distribution: Distribution,
}

/// Keldysh structure of the nonreciprocal bond between site 5 and the empty bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BondTreatment {
    /// Causal bath of strength `e_nh Gamma_5`: the whole decay of site 5 is
    /// accompanied by quantum jumps into the empty reservoir.
    #[default]
    Causal,
    /// Forward branch evolves with `H_55b`, backward branch with its adjoint.
    /// The return amplitude `e_nh t_5*` enhances retarded damping but the bath
    /// only absorbs at the bare rate `2 Gamma_5`. Breaks the particle-hole
    /// symmetry of the causal bath, so loss currents depend on the bias.
    TimeLoop,
}

impl fmt::Display for BondTreatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BondTreatment::TimeLoop => write!(f, "time-loop"),
            BondTreatment::Causal => write!(f, "causal"),
        }
    }
}

impl FromStr for BondTreatment {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "time-loop" => Ok(BondTreatment::TimeLoop),
            "causal" => Ok(BondTreatment::Causal),
            other => Err(ModelError::InvalidParameter(format!("unknown bond treatment `{other}`"))),
        }
    }
}

/// The three-site effective network: g attached to both leads, e in the middle,
/// 5 attached to the Markovian loss bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub eps_g: f64,
    pub eps_e: f64,
    /// Complex display energy `eps - i e_nh Gamma_5`; solvers use only the real part.
    pub eps_5: Complex64,
    pub t_eg: Complex64,
    pub t_e5: Complex64,
    pub leads: [Lead; 2],
    pub gamma_5: f64,
    pub e_nh: f64,
    pub bond: BondTreatment,
}

impl EffectiveModel {
    /// Gibbs-lead junction with equal site energies `eps_g - detuning` on e and 5.
    #[allow(clippy::too_many_arguments)]
    pub fn junction(
        eps_g: f64,
        detuning: f64,
        t_eg: Complex64,
        t_e5: Complex64,
        gamma_l: f64,
        gamma_r: f64,
        mu_l: f64,
        mu_r: f64,
        temperature: f64,
        gamma_5: f64,
        e_nh: f64,
        bond: BondTreatment,
    ) -> Self {
        let shifted = eps_g - detuning;
        Self {
            eps_g,
            eps_e: shifted,
            eps_5: Complex64::new(shifted, -e_nh * gamma_5),
            t_eg,
            t_e5,
            leads: [
                Lead { gamma: gamma_l, distribution: Distribution::Gibbs { mu: mu_l, temperature } },
                Lead { gamma: gamma_r, distribution: Distribution::Gibbs { mu: mu_r, temperature } },
            ],
            gamma_5,
            e_nh,
            bond,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidParameter(m));
        for (i, lead) in self.leads.iter().enumerate() {
            if !(lead.gamma >= 0.0) {
                return bad(format!("lead {i} broadening must be >= 0, got {}", lead.gamma));
            }
            match lead.distribution {
                Distribution::Gibbs { temperature, mu } => {
                    if !(temperature >= 0.0) || !mu.is_finite() {
                        return bad(format!("lead {i} has invalid (mu, T) = ({mu}, {temperature})"));
                    }
                }
                Distribution::Flat { occupation } => {
                    if !(0.0..=1.0).contains(&occupation) {
                        return bad(format!("lead {i} occupation {occupation} outside [0, 1]"));
                    }
                }
            }
        }
        if !(self.gamma_5 >= 0.0) {
            return bad(format!("Gamma_5 must be >= 0, got {}", self.gamma_5));
        }
        if !(self.e_nh >= 1.0) {
            return bad(format!("e_nh must be >= 1, got {}", self.e_nh));
        }
        let expected_im = -self.e_nh * self.gamma_5;
        if (self.eps_5.im - expected_im).abs() > 1e-12 * expected_im.abs().max(1.0) {
            return bad(format!(
                "eps_5 imaginary part {} disagrees with -e_nh*Gamma_5 = {expected_im}; \
                 the site-5 damping must be carried once",
                self.eps_5.im
            ));
        }
        let finite = [self.eps_g, self.eps_e, self.eps_5.re, self.t_eg.norm(), self.t_e5.norm()];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("non-finite energy or bond".into());
        }
        Ok(())
    }

    pub fn total_lead_gamma(&self) -> f64 {
        self.leads.iter().map(|l| l.gamma).sum()
    }
}

/// `delta_eg = omega_eg - (eps_e - eps_g)`.
pub fn detuning(p: &MicroscopicParams) -> f64 {
    p.omega_eg - (p.eps_e - p.eps_g)
}

/// `e_nh = 1 + Gamma_e5 / Gamma_5`.
pub fn enhancement(gamma_e5: f64, gamma_5: f64) -> Result<f64, ModelError> {
    if !(gamma_5 > 0.0) {
        return Err(ModelError::NonPositiveBathCoupling(gamma_5));
    }
    if !(gamma_e5 >= 0.0) {
        return Err(ModelError::NegativePhotonLoss(gamma_e5));
    }
    Ok(1.0 + gamma_e5 / gamma_5)
}

/// Wide-band broadening of a site hybridized with a linearized chiral band:
/// `Gamma = |t|^2 / (2 v_F)`.
pub fn bath_rate(t: Complex64, v_f: f64) -> f64 {
    t.norm_sqr() / (2.0 * v_f)
}

/// Exact complex rate; floats convert to rationals without rounding, so
/// cancellations along the gauge chain are exact.
pub type ExactRate = Complex<BigRational>;

fn exact(x: f64) -> ExactRate {
    Complex::new(rational(x), BigRational::zero())
}

fn exact_imag(y: f64) -> ExactRate {
    Complex::new(BigRational::zero(), rational(y))
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

fn to_complex64(r: &ExactRate) -> Complex64 {
    Complex64::new(r.re.to_f64().unwrap_or(f64::NAN), r.im.to_f64().unwrap_or(f64::NAN))
}

/// Field operators tracked by the gauge ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    PhotonEg,
    PhotonE5,
    AtomG,
    AtomE,
    Atom5,
    Bath5,
}

impl Field {
    pub const ALL: [Field; 6] =
        [Field::PhotonEg, Field::PhotonE5, Field::AtomG, Field::AtomE, Field::Atom5, Field::Bath5];

    fn index(self) -> usize {
        self as usize
    }

    /// Whether the creation operator is transformed with the complex conjugate
    /// factor. Only the driven photon keeps the Hermitian-conjugate rule; the
    /// leaky photon and every fermion use the same exponent on both operators
    /// so diagonal terms stay untouched.
    pub fn hermitian_conjugate_rule(self) -> bool {
        matches!(self, Field::PhotonEg)
    }
}

/// Bonds of the interaction Hamiltonian, identified by their forward term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bond {
    /// `c_e^dag a_eg c_g`
    GroundExcited,
    /// `c_e^dag a_e5 c_5`
    ExcitedAux,
    /// `c_5b^dag c_5`
    AuxBath,
}

impl Bond {
    pub const ALL: [Bond; 3] = [Bond::GroundExcited, Bond::ExcitedAux, Bond::AuxBath];

    fn annihilated(self) -> &'static [Field] {
        match self {
            Bond::GroundExcited => &[Field::PhotonEg, Field::AtomG],
            Bond::ExcitedAux => &[Field::PhotonE5, Field::Atom5],
            Bond::AuxBath => &[Field::Atom5],
        }
    }

    fn created(self) -> &'static [Field] {
        match self {
            Bond::GroundExcited | Bond::ExcitedAux => &[Field::AtomE],
            Bond::AuxBath => &[Field::Bath5],
        }
    }
}

impl FromStr for Bond {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "g-e" | "e-g" => Ok(Bond::GroundExcited),
            "e-5" | "5-e" => Ok(Bond::ExcitedAux),
            "5-5b" | "5b-5" => Ok(Bond::AuxBath),
            other => Err(ModelError::UnknownTerm(other.to_string())),
        }
    }
}

/// Points of the transformation chain at which the ledger is snapshotted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GaugeStage {
    /// No transformation applied.
    Laboratory,
    /// Photons and atoms rotated by their bare frequencies (`H_ph, H_at -> 0`).
    RotatingFrame,
    /// g restored, then e and 5 shifted so the internal transitions are static.
    FermionChain,
    /// Space-time transformation of the linearized bath.
    BathSpaceTime,
}

#[derive(Debug, Clone)]
struct Snapshot {
    stage: GaugeStage,
    rates: Vec<ExactRate>,
}

/// Bookkeeping of the time-dependent gauge transformations. Each field carries
/// the cumulative rate `r` of the factor `exp(-i r t)` applied to its
/// annihilation operator.
#[derive(Debug, Clone)]
pub struct GaugeLedger {
    snapshots: Vec<Snapshot>,
    bare_energies: [ExactRate; 3],
    pub delta_eg: f64,
    pub delta_mu_eff: Complex64,
}

impl GaugeLedger {
    /// Runs the full chain for `p`.
    pub fn build(p: &MicroscopicParams) -> Self {
        let mut rates: Vec<ExactRate> = vec![ExactRate::zero(); Field::ALL.len()];
        let mut snapshots = vec![Snapshot { stage: GaugeStage::Laboratory, rates: rates.clone() }];

        let set = |rates: &mut Vec<ExactRate>, f: Field, r: ExactRate| rates[f.index()] = r;
        let eps_g = exact(p.eps_g);
        let eps_e = exact(p.eps_e);
        let eps_5 = exact(p.eps_5);
        let gamma_e5 = exact_imag(p.gamma_e5);

        set(&mut rates, Field::PhotonEg, exact(p.omega_eg));
        set(&mut rates, Field::PhotonE5, exact(p.omega_e5) - gamma_e5.clone());
        set(&mut rates, Field::AtomG, eps_g.clone());
        set(&mut rates, Field::AtomE, eps_e.clone());
        set(&mut rates, Field::Atom5, eps_5.clone());
        snapshots.push(Snapshot { stage: GaugeStage::RotatingFrame, rates: rates.clone() });

        let delta = exact(p.omega_eg) - (eps_e.clone() - eps_g.clone());
        // Offset of the spontaneous photon from the e-5 transition; zero for
        // validated parameters, kept so the cancellation is exact regardless.
        let spontaneous_offset = exact(p.omega_e5) - (eps_e.clone() - eps_5.clone());
        rates[Field::AtomG.index()] = rates[Field::AtomG.index()].clone() - eps_g.clone();
        rates[Field::AtomE.index()] =
            rates[Field::AtomE.index()].clone() + delta.clone() - eps_g.clone();
        rates[Field::Atom5.index()] = rates[Field::Atom5.index()].clone() + delta.clone()
            - eps_g.clone()
            + gamma_e5.clone()
            - spontaneous_offset;
        snapshots.push(Snapshot { stage: GaugeStage::FermionChain, rates: rates.clone() });

        let net_5 = rates[Field::Atom5.index()].clone();
        rates[Field::Bath5.index()] = net_5.clone();
        snapshots.push(Snapshot { stage: GaugeStage::BathSpaceTime, rates });

        Self {
            snapshots,
            bare_energies: [eps_g, eps_e, eps_5],
            delta_eg: detuning(p),
            delta_mu_eff: to_complex64(&net_5),
        }
    }

    pub fn stages(&self) -> impl Iterator<Item = GaugeStage> + '_ {
        self.snapshots.iter().map(|s| s.stage)
    }

    fn snapshot(&self, stage: GaugeStage) -> &Snapshot {
        self.snapshots.iter().find(|s| s.stage == stage).expect("every stage is recorded")
    }

    /// Cumulative rate of `field` at `stage`.
    pub fn rate(&self, field: Field, stage: GaugeStage) -> Complex64 {
        to_complex64(&self.snapshot(stage).rates[field.index()])
    }

    /// Exact net rate `r` of the factor `exp(-i r t)` multiplying the forward
    /// term of `bond` at `stage`.
    pub fn residual_exact(&self, bond: Bond, stage: GaugeStage) -> ExactRate {
        let rates = &self.snapshot(stage).rates;
        let mut net = ExactRate::zero();
        for f in bond.annihilated() {
            net = net + rates[f.index()].clone();
        }
        for f in bond.created() {
            let r = &rates[f.index()];
            net = net - if f.hermitian_conjugate_rule() { r.conj() } else { r.clone() };
        }
        net
    }

    pub fn residual_at(&self, bond: Bond, stage: GaugeStage) -> Complex64 {
        to_complex64(&self.residual_exact(bond, stage))
    }

    /// Effective (possibly complex) energy of atomic level `field` at `stage`:
    /// the bare energy minus the accumulated rate.
    pub fn site_energy(&self, field: Field, stage: GaugeStage) -> Option<Complex64> {
        let bare = match field {
            Field::AtomG => &self.bare_energies[0],
            Field::AtomE => &self.bare_energies[1],
            Field::Atom5 => &self.bare_energies[2],
            _ => return None,
        };
        Some(to_complex64(&(bare.clone() - self.snapshot(stage).rates[field.index()].clone())))
    }
}

/// Net residual exponent rate of `term` after the whole chain.
pub fn ledger_residual(ledger: &GaugeLedger, term: &str) -> Result<Complex64, ModelError> {
    let bond: Bond = term.parse()?;
    Ok(ledger.residual_at(bond, GaugeStage::BathSpaceTime))
}

/// Reduction to the effective fermionic network (Gibbs leads on g, Markov bath on 5).
pub fn reduce(p: &MicroscopicParams) -> Result<(EffectiveModel, GaugeLedger), ModelError> {
    p.validate()?;
    let ledger = GaugeLedger::build(p);
    let gamma_5 = bath_rate(p.t_5, p.v_f);
    let e_nh = enhancement(p.gamma_e5, gamma_5)?;
    let delta = detuning(p);
    let model = EffectiveModel::junction(
        p.eps_g,
        delta,
        p.t_eg_eff(),
        p.t_e5_eff(),
        bath_rate(p.t_l, p.v_f),
        bath_rate(p.t_r, p.v_f),
        p.mu_l,
        p.mu_r,
        p.temperature,
        gamma_5,
        e_nh,
        BondTreatment::Causal,
    );
    Ok((model, ledger))
}
