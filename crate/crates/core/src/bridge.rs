//! Cross-validation of the microscopic master equation against the
//! effective three-site Green-function solver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keldysh::{self, KeldyshError, SolverOptions};
use crate::lindblad::{self, expectation, HilbertSpace, JumpChannel, LindbladError, Mode, Operator};
use crate::model::{enhancement, BondTreatment, Distribution, EffectiveModel, Lead, ModelError};

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lindblad(#[from] LindbladError),
    #[error(transparent)]
    Keldysh(#[from] KeldyshError),
    #[error("invalid bridge instance: {0}")]
    Invalid(String),
    #[error("Fock cutoff {cutoff} not converged: truncation indicator {shift:e} exceeds {limit:e}")]
    Cutoff { cutoff: usize, shift: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// No photon mode; the photon loss is folded into the atom-loss rate.
    ExactQuadratic,
    /// Explicit leaky photon mode with `Gamma_e5` well above the couplings.
    Adiabatic,
    /// Photon mode with a single joint jump `a c_5`; kept as a negative control.
    JointJump,
}

/// Markovian lead with constant occupation, attached to site g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatLead {
    pub gamma: f64,
    pub occupation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeInstance {
    pub eps_g: f64,
    /// Common rotating-frame energy of e and 5.
    pub eps_shifted: f64,
    pub t_eg: f64,
    /// Spontaneous-bond amplitude; `lambda_e5` when the photon is explicit.
    pub t_e5: f64,
    pub gamma_5: f64,
    pub gamma_e5: f64,
    pub leads: [FlatLead; 2],
    pub fock_cutoff: usize,
    pub regime: Regime,
}

impl BridgeInstance {
    /// Resonant instance with both leads full.
    pub fn filled(regime: Regime, t_eg: f64, t_e5: f64, gamma_5: f64, gamma_e5: f64, lead_gamma: f64) -> Self {
        Self {
            eps_g: 0.0,
            eps_shifted: 0.0,
            t_eg,
            t_e5,
            gamma_5,
            gamma_e5,
            leads: [FlatLead { gamma: lead_gamma, occupation: 1.0 }; 2],
            fock_cutoff: 8,
            regime,
        }
    }

    pub fn max_coupling(&self) -> f64 {
        self.t_eg.abs().max(self.t_e5.abs())
    }

    pub fn validate(&self) -> Result<(), BridgeError> {
        let bad = |m: String| Err(BridgeError::Invalid(m));
        for l in &self.leads {
            if !(l.gamma >= 0.0) || !(0.0..=1.0).contains(&l.occupation) {
                return bad(format!("lead ({}, {}) needs gamma >= 0 and occupation in [0, 1]", l.gamma, l.occupation));
            }
        }
        if !(self.gamma_5 > 0.0) || !(self.gamma_e5 >= 0.0) {
            return bad(format!("need Gamma_5 > 0 and Gamma_e5 >= 0, got {} and {}", self.gamma_5, self.gamma_e5));
        }
        if self.regime != Regime::ExactQuadratic && self.fock_cutoff == 0 {
            return bad("photon cutoff must be >= 1".into());
        }
        if self.regime == Regime::Adiabatic && self.gamma_e5 < 5.0 * self.max_coupling() {
            return bad(format!(
                "adiabatic instance needs Gamma_e5 >= 5 max(|t_eg|, |t_e5|) = {}, got {}",
                5.0 * self.max_coupling(),
                self.gamma_e5
            ));
        }
        Ok(())
    }

    pub fn enhancement(&self) -> Result<f64, BridgeError> {
        Ok(enhancement(self.gamma_e5, self.gamma_5)?)
    }

    pub fn with_cutoff(&self, fock_cutoff: usize) -> Self {
        Self { fock_cutoff, ..self.clone() }
    }
}

/// Operators of the assembled master equation.
#[derive(Debug, Clone)]
pub struct FullLindblad {
    pub space: HilbertSpace,
    pub hamiltonian: Operator,
    pub channels: Vec<JumpChannel>,
    /// Annihilators of g, e, 5 and (when present) the photon.
    pub modes: Vec<Operator>,
    /// Indices into `channels` of the jumps that remove an atom to the bath.
    pub loss_channels: Vec<usize>,
}

impl FullLindblad {
    pub fn atom_number(&self) -> Operator {
        self.modes[..3].iter().map(|c| c.adjoint() * c).fold(self.space.identity() * Complex64::new(0.0, 0.0), |acc, n| acc + n)
    }
}

pub fn build_full_lindblad(inst: &BridgeInstance) -> Result<FullLindblad, BridgeError> {
    inst.validate()?;
    let photon = inst.regime != Regime::ExactQuadratic;
    let mut modes = vec![Mode::Fermion; 3];
    if photon {
        modes.push(Mode::Boson { cutoff: inst.fock_cutoff });
    }
    let space = HilbertSpace::new(modes)?;
    let ops: Vec<Operator> = (0..space.modes().len()).map(|k| space.annihilation(k)).collect::<Result<_, _>>()?;
    let (g, e, s) = (&ops[0], &ops[1], &ops[2]);
    let re = |x: f64| Complex64::new(x, 0.0);

    let drive = e.adjoint() * g * re(inst.t_eg);
    let mut h = g.adjoint() * g * re(inst.eps_g)
        + (e.adjoint() * e + s.adjoint() * s) * re(inst.eps_shifted)
        + &drive
        + drive.adjoint();
    let bond = if photon { e.adjoint() * &ops[3] * s } else { e.adjoint() * s } * re(inst.t_e5);
    h += &bond + bond.adjoint();

    let mut channels = Vec::new();
    let mut loss_channels = Vec::new();
    match inst.regime {
        Regime::ExactQuadratic => {
            loss_channels.push(channels.len());
            channels.push(JumpChannel::new(s.clone(), 2.0 * (inst.gamma_5 + inst.gamma_e5))?);
        }
        Regime::Adiabatic => {
            channels.push(JumpChannel::new(ops[3].clone(), 2.0 * inst.gamma_e5)?);
            loss_channels.push(channels.len());
            channels.push(JumpChannel::new(s.clone(), 2.0 * inst.gamma_5)?);
        }
        Regime::JointJump => {
            loss_channels.push(channels.len());
            channels.push(JumpChannel::new(&ops[3] * s, 2.0 * (inst.gamma_5 + inst.gamma_e5))?);
        }
    }
    for lead in &inst.leads {
        if lead.occupation < 1.0 {
            channels.push(JumpChannel::new(g.clone(), 2.0 * lead.gamma * (1.0 - lead.occupation))?);
        }
        if lead.occupation > 0.0 {
            channels.push(JumpChannel::new(g.adjoint(), 2.0 * lead.gamma * lead.occupation)?);
        }
    }
    Ok(FullLindblad { space, hamiltonian: h, channels, modes: ops, loss_channels })
}

/// Effective network with flat leads and a causal bath on site 5.
pub fn effective_counterpart(inst: &BridgeInstance) -> Result<EffectiveModel, BridgeError> {
    inst.validate()?;
    Ok(counterpart_with(inst, BondTreatment::Causal)?)
}

fn counterpart_with(inst: &BridgeInstance, bond: BondTreatment) -> Result<EffectiveModel, BridgeError> {
    let e_nh = inst.enhancement()?;
    let lead = |l: &FlatLead| Lead { gamma: l.gamma, distribution: Distribution::Flat { occupation: l.occupation } };
    let model = EffectiveModel {
        eps_g: inst.eps_g,
        eps_e: inst.eps_shifted,
        eps_5: Complex64::new(inst.eps_shifted, -e_nh * inst.gamma_5),
        t_eg: Complex64::new(inst.t_eg, 0.0),
        t_e5: Complex64::new(inst.t_e5, 0.0),
        leads: [lead(&inst.leads[0]), lead(&inst.leads[1])],
        gamma_5: inst.gamma_5,
        e_nh,
        bond,
    };
    model.validate()?;
    Ok(model)
}

/// Steady-state observables of the master-equation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladObservables {
    pub occupation: [f64; 3],
    pub photon_number: f64,
    /// Population of the highest retained Fock level.
    pub top_fock_weight: f64,
    pub loss_current: f64,
    /// Lead injection minus loss current.
    pub atom_balance: f64,
}

pub fn lindblad_observables(inst: &BridgeInstance) -> Result<LindbladObservables, BridgeError> {
    let full = build_full_lindblad(inst)?;
    let rho = lindblad::steady_state(&full.hamiltonian, &full.channels)?;
    let number = |c: &Operator| -> Result<f64, BridgeError> { Ok(expectation(&(c.adjoint() * c), &rho)?.re) };
    let occupation = [number(&full.modes[0])?, number(&full.modes[1])?, number(&full.modes[2])?];
    let photon_number = if full.modes.len() > 3 { number(&full.modes[3])? } else { 0.0 };
    let top_fock_weight = if full.modes.len() > 3 {
        (0..full.space.dim())
            .filter(|&k| full.space.digits(k)[3] == inst.fock_cutoff)
            .map(|k| rho.matrix()[(k, k)].re)
            .sum()
    } else {
        0.0
    };
    let mut loss_current = 0.0;
    for &k in &full.loss_channels {
        let ch = &full.channels[k];
        loss_current += ch.rate * expectation(&(ch.op.adjoint() * &ch.op), &rho)?.re;
    }
    let injection: f64 = inst
        .leads
        .iter()
        .map(|l| 2.0 * l.gamma * (l.occupation * (1.0 - occupation[0]) - (1.0 - l.occupation) * occupation[0]))
        .sum();
    Ok(LindbladObservables { occupation, photon_number, top_fock_weight, loss_current, atom_balance: injection - loss_current })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeOptions {
    pub solver: SolverOptions,
    /// Rerun the master equation at twice the Fock cutoff.
    pub check_cutoff: bool,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        Self { solver: SolverOptions { tolerance: 1e-11, ..Default::default() }, check_cutoff: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub instance: BridgeInstance,
    pub e_nh: f64,
    pub lindblad: LindbladObservables,
    pub keldysh_occupation: [f64; 3],
    pub keldysh_loss_current: f64,
    /// Loss current of the same network with the time-loop bath, for reference.
    pub time_loop_loss_current: f64,
    pub relative_deviation: f64,
    /// Larger of the relative loss-current shift on doubling the Fock cutoff
    /// and the population of the top Fock level.
    pub cutoff_shift: Option<f64>,
    pub grid_error: f64,
}

impl BridgeReport {
    /// Agreement bar for the regime.
    pub fn tolerance(&self) -> f64 {
        regime_tolerance(self.instance.regime)
    }

    pub fn passes(&self) -> bool {
        self.relative_deviation <= self.tolerance()
    }
}

pub fn regime_tolerance(regime: Regime) -> f64 {
    match regime {
        Regime::ExactQuadratic => 1e-6,
        Regime::Adiabatic | Regime::JointJump => 5e-2,
    }
}

/// Currents below this magnitude count as zero when comparing paths.
pub const CURRENT_FLOOR: f64 = 1e-12;

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale <= CURRENT_FLOOR {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn compare(inst: &BridgeInstance, opts: &BridgeOptions) -> Result<BridgeReport, BridgeError> {
    inst.validate()?;
    let lind = lindblad_observables(inst)?;
    let cutoff_shift = if inst.regime != Regime::ExactQuadratic && opts.check_cutoff {
        let doubled = lindblad_observables(&inst.with_cutoff(2 * inst.fock_cutoff))?;
        let shift = relative(lind.loss_current, doubled.loss_current).max(lind.top_fock_weight);
        let limit = regime_tolerance(inst.regime) / 10.0;
        if shift > limit {
            return Err(BridgeError::Cutoff { cutoff: inst.fock_cutoff, shift, limit });
        }
        Some(shift)
    } else {
        None
    };
    let causal = keldysh::solve(&effective_counterpart(inst)?, &opts.solver)?;
    let time_loop = keldysh::solve(&counterpart_with(inst, BondTreatment::TimeLoop)?, &opts.solver)?;
    Ok(BridgeReport {
        instance: inst.clone(),
        e_nh: inst.enhancement()?,
        lindblad: lind,
        keldysh_occupation: causal.occupation,
        keldysh_loss_current: causal.loss_current,
        time_loop_loss_current: time_loop.loss_current,
        relative_deviation: relative(lind.loss_current, causal.loss_current),
        cutoff_shift,
        grid_error: causal.error_estimate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub reports: Vec<BridgeReport>,
    /// Deviations strictly decrease along the ladder.
    pub monotone: bool,
}

/// Runs `compare` for `Gamma_e5 = ratio · max coupling` over `ratios`.
pub fn adiabatic_ladder(base: &BridgeInstance, ratios: &[f64], opts: &BridgeOptions) -> Result<LadderReport, BridgeError> {
    let reports = ratios
        .iter()
        .map(|r| compare(&BridgeInstance { gamma_e5: r * base.max_coupling(), ..base.clone() }, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = reports.windows(2).all(|w| w[1].relative_deviation < w[0].relative_deviation);
    Ok(LadderReport { reports, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::commutant_drift_check;

    fn opts() -> BridgeOptions {
        BridgeOptions::default()
    }

    #[test]
    fn filled_quadratic_instance_matches() {
        let inst = BridgeInstance::filled(Regime::ExactQuadratic, 0.8, 1.0, 1.0, 0.0, 0.5);
        let r = compare(&inst, &opts()).unwrap();
        assert!(r.relative_deviation <= 1e-6, "{r:?}");
        let rate = 2.0 * inst.gamma_5;
        assert!((r.lindblad.loss_current - rate * r.lindblad.occupation[2]).abs() < 1e-14);
        assert!(r.lindblad.atom_balance.abs() < 1e-8);
    }

    #[test]
    fn undriven_instance_carries_no_current() {
        let inst = BridgeInstance::filled(Regime::ExactQuadratic, 0.0, 1.0, 1.0, 0.5, 0.5);
        let r = compare(&inst, &opts()).unwrap();
        assert!(r.lindblad.loss_current.abs() < 1e-12);
        assert!(r.keldysh_loss_current.abs() < 1e-12);
        assert!(r.relative_deviation < 1e-6);
    }

    #[test]
    fn counterpart_examples() {
        let mut inst = BridgeInstance::filled(Regime::ExactQuadratic, 0.5, 1.0, 1.0, 0.0, 0.3);
        assert_eq!(effective_counterpart(&inst).unwrap().e_nh, 1.0);
        inst.gamma_e5 = 1.0;
        let m = effective_counterpart(&inst).unwrap();
        assert_eq!(m.eps_5.im, -2.0);
        inst.leads = [FlatLead { gamma: 0.3, occupation: 0.5 }; 2];
        let s = keldysh::lead_components(&effective_counterpart(&inst).unwrap().leads[0], 0.7);
        assert_eq!(s.keldysh(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn adiabatic_instance_keeps_few_photons() {
        let inst = BridgeInstance::filled(Regime::Adiabatic, 0.5, 1.0, 1.0, 10.0, 0.5);
        let obs = lindblad_observables(&inst).unwrap();
        assert!(obs.photon_number < 0.05, "{}", obs.photon_number);
        assert!(obs.atom_balance.abs() < 1e-8);
    }

    #[test]
    fn photon_loss_leaves_atom_number_alone() {
        let inst = BridgeInstance::filled(Regime::Adiabatic, 0.5, 1.0, 1.0, 5.0, 0.5).with_cutoff(3);
        let full = build_full_lindblad(&inst).unwrap();
        let rho = lindblad::DensityMatrix::maximally_mixed(full.space.dim()).unwrap();
        let photon_only = [full.channels[0].clone()];
        let drift = commutant_drift_check(&full.atom_number(), &full.hamiltonian, &photon_only, &rho).unwrap();
        assert!(drift < 1e-10);
    }

    #[test]
    fn adiabatic_ladder_converges() {
        let base = BridgeInstance::filled(Regime::Adiabatic, 1.0, 1.0, 1.0, 5.0, 0.5).with_cutoff(4);
        let ladder = adiabatic_ladder(&base, &[5.0, 10.0, 20.0], &opts()).unwrap();
        assert!(ladder.monotone);
        assert!(ladder.reports.iter().all(BridgeReport::passes));
    }

    #[test]
    fn single_photon_cutoff_is_rejected() {
        let inst = BridgeInstance::filled(Regime::Adiabatic, 1.0, 1.0, 1.0, 5.0, 0.5).with_cutoff(1);
        assert!(matches!(compare(&inst, &opts()), Err(BridgeError::Cutoff { cutoff: 1, .. })));
    }

    #[test]
    fn rejects_slow_photon_in_adiabatic_regime() {
        let inst = BridgeInstance::filled(Regime::Adiabatic, 1.0, 1.0, 1.0, 2.0, 0.5);
        assert!(matches!(inst.validate(), Err(BridgeError::Invalid(_))));
    }
}
