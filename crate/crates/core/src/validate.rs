//! Named self-checks grouped into suites, with a JSON report.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bridge::{self, BridgeInstance, BridgeOptions, FlatLead, Regime};
use crate::keldysh::{self, integrate, FrequencyGrid, QuadratureOptions, Site, SolverOptions};
use crate::lindblad::{
    self, commutant_drift_check, default_step, evolve_trajectory, expectation, leap_conjugate_check,
    leap_expectation_check, liouvillian_apply, quadratic_steady_state, steady_state_by_evolution, DensityMatrix,
    HilbertSpace, JumpChannel, Mode, Operator, SteadyStateOptions,
};
use crate::model::{
    BondTreatment, Bond, Distribution, EffectiveModel, GaugeLedger, GaugeStage, Lead, MicroscopicParams,
    SpontaneousBond,
};
use crate::sweep::SweepConfig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown suite `{0}` (expected lindblad, keldysh, bridge or all)")]
pub struct UnknownSuite(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lindblad,
    Keldysh,
    Bridge,
    All,
}

impl FromStr for Suite {
    type Err = UnknownSuite;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lindblad" => Ok(Suite::Lindblad),
            "keldysh" => Ok(Suite::Keldysh),
            "bridge" => Ok(Suite::Bridge),
            "all" => Ok(Suite::All),
            other => Err(UnknownSuite(other.to_string())),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Lindblad => "lindblad",
            Suite::Keldysh => "keldysh",
            Suite::Bridge => "bridge",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    /// Quadrature tolerance of the Green-function solver.
    pub tolerance: f64,
    /// Photon cutoff of the adiabatic bridge instances.
    pub fock_cutoff: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self { tolerance: 1e-11, fock_cutoff: 8 }
    }
}

impl ValidationOptions {
    pub fn from_config(cfg: &SweepConfig) -> Self {
        Self { tolerance: cfg.solver.tolerance, fock_cutoff: cfg.solver.fock_cutoff }
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions { tolerance: self.tolerance, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    /// Measured violation; `null` when the check errored before measuring.
    pub residual: Option<f64>,
    pub limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Measured = Result<f64, String>;

fn record(name: &str, limit: f64, measured: Measured) -> CheckRecord {
    match measured {
        Ok(r) => CheckRecord { name: name.into(), passed: r <= limit, residual: Some(r), limit, error: None },
        Err(e) => CheckRecord { name: name.into(), passed: false, residual: None, limit, error: Some(e) },
    }
}

fn s<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn run_suite(suite: Suite, opts: &ValidationOptions) -> ValidationReport {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Lindblad | Suite::All) {
        checks.extend(lindblad_checks());
    }
    if matches!(suite, Suite::Keldysh | Suite::All) {
        checks.extend(keldysh_checks(opts));
    }
    if matches!(suite, Suite::Bridge | Suite::All) {
        checks.extend(bridge_checks(opts));
    }
    let passed = checks.iter().all(|c| c.passed);
    ValidationReport { suite, passed, checks }
}

struct Decay {
    ratio_error: f64,
    trace_drift: f64,
    negativity: f64,
}

fn photon_decay() -> Result<Decay, String> {
    let cutoff = 10;
    let space = HilbertSpace::new(vec![Mode::Boson { cutoff }]).map_err(s)?;
    let a = space.annihilation(0).map_err(s)?;
    let n = a.adjoint() * &a;
    let ch = [JumpChannel::new(a, 2.0).map_err(s)?];
    let h = n.clone() * c(0.5);
    let amp: Vec<Complex64> = (0..=cutoff).map(|k| c(0.9f64.powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>().sqrt())).collect();
    let rho0 = DensityMatrix::pure(&amp).map_err(s)?;
    let n0 = expectation(&n, &rho0).map_err(s)?.re;
    let traj = evolve_trajectory(&rho0, &h, &ch, 1.0, default_step(&h, &ch), 1).map_err(s)?;
    let mut out = Decay { ratio_error: 0.0, trace_drift: 0.0, negativity: 0.0 };
    for (t, rho) in &traj {
        let ratio = expectation(&n, rho).map_err(s)?.re / n0;
        out.ratio_error = out.ratio_error.max((ratio - (-2.0 * t).exp()).abs());
        out.trace_drift = out.trace_drift.max((rho.matrix().trace() - c(1.0)).norm());
        out.negativity = out.negativity.max(-rho.min_eigenvalue());
    }
    Ok(out)
}

struct Lambda {
    space: HilbertSpace,
    ops: Vec<Operator>,
    h: Operator,
    channels: Vec<JumpChannel>,
}

fn driven_lambda(cutoff: usize) -> Result<Lambda, String> {
    let space =
        HilbertSpace::new(vec![Mode::Fermion, Mode::Fermion, Mode::Fermion, Mode::Boson { cutoff }]).map_err(s)?;
    let ops: Vec<Operator> = (0..4).map(|k| space.annihilation(k)).collect::<Result<_, _>>().map_err(s)?;
    let (g, e, f, a) = (&ops[0], &ops[1], &ops[2], &ops[3]);
    let drive = e.adjoint() * g * c(0.8);
    let spont = e.adjoint() * a * f * c(1.1);
    let h = &drive + drive.adjoint() + &spont + spont.adjoint() + e.adjoint() * e * c(0.3);
    let channels = vec![JumpChannel::new(a.clone(), 1.4).map_err(s)?, JumpChannel::new(f.clone(), 0.9).map_err(s)?];
    Ok(Lambda { space, ops, h, channels })
}

/// Atom in g with the photon in a truncated coherent state.
fn lambda_trajectory(l: &Lambda, cutoff: usize) -> Result<Vec<(f64, DensityMatrix)>, String> {
    let mut psi = vec![c(0.0); l.space.dim()];
    let mut amp = 1.0;
    for k in 0..=cutoff {
        if k > 0 {
            amp *= 0.6 / (k as f64).sqrt();
        }
        psi[4 * (cutoff + 1) + k] = c(amp);
    }
    let rho0 = DensityMatrix::pure(&psi).map_err(s)?;
    evolve_trajectory(&rho0, &l.h, &l.channels, 3.0, default_step(&l.h, &l.channels), 20).map_err(s)
}

fn commutant_residual() -> Measured {
    let l = driven_lambda(2)?;
    let (g, e) = (&l.ops[0], &l.ops[1]);
    let basis = [
        l.space.identity(),
        g.adjoint() * g,
        e.adjoint() * e,
        g.adjoint() * e,
        e.adjoint() * g,
        g * e,
        e.adjoint() * g.adjoint(),
        g.adjoint() * g * e.adjoint() * e,
    ];
    let rho = DensityMatrix::maximally_mixed(l.space.dim()).map_err(s)?;
    let mut worst: f64 = 0.0;
    for k in 0..basis.len() {
        let mut o = basis[k].clone();
        o += &basis[(k + 3) % basis.len()] * Complex64::new(0.3, -0.7);
        worst = worst.max(commutant_drift_check(&o, &l.h, &l.channels, &rho).map_err(s)?);
    }
    Ok(worst)
}

/// Partially filled leads on g make the steady state mixed in every sector.
fn open_lambda() -> Result<(Operator, Vec<JumpChannel>, usize), String> {
    let l = driven_lambda(1)?;
    let g = &l.ops[0];
    let mut channels = l.channels.clone();
    channels.push(JumpChannel::new(g.adjoint(), 0.6).map_err(s)?);
    channels.push(JumpChannel::new(g.clone(), 0.4).map_err(s)?);
    Ok((l.h, channels, l.space.dim()))
}

fn lindblad_checks() -> Vec<CheckRecord> {
    let decay = photon_decay();
    let field = |f: fn(&Decay) -> f64| decay.as_ref().map(f).map_err(Clone::clone);
    let mut out = vec![
        record("lindblad.photon_decay", 1e-6, field(|d| d.ratio_error)),
        record("lindblad.trace_drift", 1e-10, field(|d| d.trace_drift)),
        record("lindblad.positivity", 1e-10, field(|d| d.negativity)),
        record("lindblad.commutant_drift", 1e-10, commutant_residual()),
    ];

    let cutoff = 3;
    let traj = driven_lambda(cutoff).and_then(|l| Ok((lambda_trajectory(&l, cutoff)?, l)));
    let leap = |f: fn(&JumpChannel, &Operator, &[JumpChannel], &[(f64, DensityMatrix)]) -> Result<f64, lindblad::LindbladError>| -> Measured {
        let (t, l) = traj.as_ref().map_err(Clone::clone)?;
        f(&l.channels[0], &l.h, &l.channels, t).map_err(s)
    };
    out.push(record("lindblad.leap_expectation", 1e-8, leap(leap_expectation_check)));
    out.push(record("lindblad.leap_conjugate", 1e-8, leap(leap_conjugate_check)));

    let open = open_lambda();
    let steady = open.as_ref().map_err(Clone::clone).and_then(|(h, ch, _)| lindblad::steady_state(h, ch).map_err(s));
    out.push(record(
        "lindblad.steady_state_residual",
        1e-10,
        steady.as_ref().map_err(Clone::clone).and_then(|rho| {
            let (h, ch, _) = open.as_ref().map_err(Clone::clone)?;
            Ok(liouvillian_apply(h, ch, rho.matrix()).map_err(s)?.norm())
        }),
    ));
    out.push(record(
        "lindblad.null_space_vs_evolution",
        1e-6,
        steady.as_ref().map_err(Clone::clone).and_then(|rho| {
            let (h, ch, dim) = open.as_ref().map_err(Clone::clone)?;
            let opts = SteadyStateOptions { residual_tolerance: 1e-9, ..Default::default() };
            let start = DensityMatrix::maximally_mixed(*dim).map_err(s)?;
            let evolved = steady_state_by_evolution(&start, h, ch, &opts).map_err(s)?;
            Ok((evolved.matrix() - rho.matrix()).norm())
        }),
    ));
    out.push(record("lindblad.lyapunov_oracle", 1e-8, lyapunov_vs_dense()));
    out.push(record("lindblad.canonical_anticommutators", 1e-14, anticommutators()));
    out
}

fn anticommutators() -> Measured {
    let space = HilbertSpace::new(vec![Mode::Fermion, Mode::Boson { cutoff: 2 }, Mode::Fermion, Mode::Fermion]).map_err(s)?;
    let id = space.identity();
    let mut worst: f64 = 0.0;
    for i in [0, 2, 3] {
        let ci = space.annihilation(i).map_err(s)?;
        for j in [0, 2, 3] {
            let cj = space.annihilation(j).map_err(s)?;
            let mut anti = &ci * cj.adjoint() + cj.adjoint() * &ci;
            if i == j {
                anti -= &id;
            }
            worst = worst.max(anti.norm()).max((&ci * &cj + &cj * &ci).norm());
        }
    }
    Ok(worst)
}

fn lyapunov_vs_dense() -> Measured {
    let n = 4;
    let space = HilbertSpace::new(vec![Mode::Fermion; n]).map_err(s)?;
    let ops: Vec<Operator> = (0..n).map(|k| space.annihilation(k)).collect::<Result<_, _>>().map_err(s)?;
    let h1 = DMatrix::from_fn(n, n, |i, j| match (i as i64 - j as i64).abs() {
        0 => c(0.2 * i as f64 - 0.3),
        1 => Complex64::new(0.7, if i < j { 0.2 } else { -0.2 }),
        _ => c(0.0),
    });
    let loss = [0.3, 0.0, 0.5, 1.1];
    let gain = [0.8, 0.0, 0.1, 0.0];
    let mut h = Operator::zeros(space.dim(), space.dim());
    let mut channels = Vec::new();
    for i in 0..n {
        for j in 0..n {
            h += ops[i].adjoint() * &ops[j] * h1[(i, j)];
        }
        channels.push(JumpChannel::new(ops[i].clone(), loss[i]).map_err(s)?);
        channels.push(JumpChannel::new(ops[i].adjoint(), gain[i]).map_err(s)?);
    }
    let rho = lindblad::steady_state(&h, &channels).map_err(s)?;
    let corr = quadratic_steady_state(&h1, &loss, &gain).map_err(s)?;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dense = expectation(&(ops[i].adjoint() * &ops[j]), &rho).map_err(s)?;
            worst = worst.max((dense - corr[(i, j)]).norm());
        }
    }
    Ok(worst)
}

fn caption(gamma: f64, e_nh: f64, delta_mu: f64, bond: BondTreatment) -> EffectiveModel {
    let mut cfg = SweepConfig::default();
    cfg.solver.bond = bond;
    cfg.model_at(gamma, e_nh, delta_mu)
}

fn single_site(eps: f64, gamma: f64, distribution: Distribution) -> EffectiveModel {
    let none = Lead { gamma: 0.0, distribution: Distribution::Flat { occupation: 0.0 } };
    EffectiveModel {
        eps_g: eps,
        eps_e: 37.0,
        eps_5: c(37.0),
        t_eg: c(0.0),
        t_e5: c(0.0),
        leads: [Lead { gamma, distribution }, none],
        gamma_5: 0.0,
        e_nh: 1.0,
        bond: BondTreatment::Causal,
    }
}

fn keldysh_checks(opts: &ValidationOptions) -> Vec<CheckRecord> {
    let solver = opts.solver();
    let mut out = Vec::new();

    out.push(record("keldysh.lorentzian_normalization", 1e-6, {
        let g = 0.3;
        FrequencyGrid::new(15.0, [0.0])
            .and_then(|grid| integrate(|w| g / std::f64::consts::PI / (w * w + g * g), &grid, &QuadratureOptions::default()))
            .map(|e| (e.value[0] - 1.0).abs())
            .map_err(s)
    }));

    out.push(record("keldysh.arctan_occupation", 1e-8, {
        let mut worst: f64 = 0.0;
        let mut res = Ok(());
        for mu in [-2.0, -0.3, 0.0, 0.5, 3.0] {
            let m = single_site(0.1, 0.4, Distribution::Gibbs { mu, temperature: 0.0 });
            match keldysh::occupation(&m, Site::G, &solver) {
                Ok(n) => worst = worst.max((n - (0.5 + ((mu - 0.1) / 0.4).atan() / std::f64::consts::PI)).abs()),
                Err(e) => res = Err(s(e)),
            }
        }
        res.map(|_| worst)
    }));

    out.push(record("keldysh.advanced_adjoint", 1e-12, {
        let m = caption(1.0, 2.0, 1.0, BondTreatment::Causal);
        let mut worst: f64 = 0.0;
        let mut res = Ok(());
        for w in [-3.0, -0.4, 0.0, 0.37, 2.5] {
            match keldysh::greens(w, &m) {
                Ok(g) => {
                    let x = nalgebra::Matrix3::from_diagonal_element(c(w)) - keldysh::hamiltonian(&m);
                    let mut ga_inv = x;
                    for (j, sig) in keldysh::self_energies(&m, w).unwrap_or([keldysh::SiteSelfEnergy::ZERO; 3]).iter().enumerate() {
                        ga_inv[(j, j)] -= sig.advanced();
                    }
                    worst = worst.max((ga_inv * g.advanced() - nalgebra::Matrix3::identity()).norm());
                }
                Err(e) => res = Err(s(e)),
            }
        }
        res.map(|_| worst)
    }));

    out.push(record("keldysh.lesser_positivity", 1e-10, {
        let mut worst: f64 = 0.0;
        let mut res = Ok(());
        for bond in [BondTreatment::Causal, BondTreatment::TimeLoop] {
            let m = caption(2.0, 4.0, 4.0, bond);
            for k in -40..=40 {
                match keldysh::greens(0.15 * k as f64, &m) {
                    Ok(g) => {
                        for j in 0..3 {
                            worst = worst.max((Complex64::i() * g.lesser[(j, j)]).re);
                        }
                    }
                    Err(e) => res = Err(s(e)),
                }
            }
        }
        res.map(|_| worst)
    }));

    out.push(record(
        "keldysh.sum_rule",
        1e-3,
        keldysh::spectral_sum_rule(&caption(0.5, 2.0, 1.0, BondTreatment::Causal), &solver)
            .map(|v| v.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max))
            .map_err(s),
    ));

    out.push(record("keldysh.continuity", 1e-8, {
        let mut worst: f64 = 0.0;
        let mut res = Ok(());
        for bond in [BondTreatment::Causal, BondTreatment::TimeLoop] {
            for (g, e, d) in [(1e-3, 1.0, 0.0), (0.3, 1.5, 1.0), (1.0, 2.0, 4.0), (30.0, 4.0, 1000.0), (1e3, 2.0, 1.0)] {
                match keldysh::solve(&caption(g, e, d, bond), &solver) {
                    Ok(o) => worst = worst.max(o.continuity_residual.abs() / o.loss_current.abs().max(1.0)),
                    Err(err) => res = Err(s(err)),
                }
            }
        }
        res.map(|_| worst)
    }));

    out.push(record("keldysh.reciprocal_oracle", 1e-6, {
        let inst = BridgeInstance {
            eps_g: 0.2,
            eps_shifted: -0.1,
            t_eg: 0.9,
            t_e5: 0.7,
            gamma_5: 0.8,
            gamma_e5: 0.0,
            leads: [FlatLead { gamma: 0.3, occupation: 0.7 }, FlatLead { gamma: 0.5, occupation: 0.2 }],
            fock_cutoff: 1,
            regime: Regime::ExactQuadratic,
        };
        reciprocal_oracle(&inst, &solver)
    }));

    out.push(record("keldysh.delta_mu_collapse", 1e-6, {
        let mut res = Ok(0.0f64);
        for g in [1e-2, 1.0, 1e2] {
            let loss = |d: f64| keldysh::loss_current(&caption(g, 1.0, d, BondTreatment::Causal), &solver).map_err(s);
            res = res.and_then(|worst| {
                let base = loss(0.0)?;
                Ok(worst.max((loss(1.0)? - base).abs() / base).max((loss(4.0)? - base).abs() / base))
            });
        }
        res
    }));

    out.push(record("keldysh.thread_determinism", 0.0, {
        let m = caption(0.7, 2.0, 4.0, BondTreatment::Causal);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(s);
        pool.and_then(|pool| {
            let one = pool.install(|| keldysh::solve(&m, &solver)).map_err(s)?;
            let many = keldysh::solve(&m, &solver).map_err(s)?;
            Ok(if one.loss_current.to_bits() == many.loss_current.to_bits() { 0.0 } else { (one.loss_current - many.loss_current).abs().max(f64::MIN_POSITIVE) })
        })
    }));

    out.push(record("model.gauge_residuals", 0.0, gauge_residuals()));
    out
}

fn reciprocal_oracle(inst: &BridgeInstance, solver: &SolverOptions) -> Measured {
    let model = bridge::effective_counterpart(inst).map_err(s)?;
    let obs = keldysh::solve(&model, solver).map_err(s)?;
    let mut h = DMatrix::zeros(3, 3);
    h[(0, 0)] = c(inst.eps_g);
    h[(1, 1)] = c(inst.eps_shifted);
    h[(2, 2)] = c(inst.eps_shifted);
    h[(1, 0)] = c(inst.t_eg);
    h[(0, 1)] = c(inst.t_eg);
    h[(1, 2)] = c(inst.t_e5);
    h[(2, 1)] = c(inst.t_e5);
    let gain: f64 = inst.leads.iter().map(|l| 2.0 * l.gamma * l.occupation).sum();
    let drain: f64 = inst.leads.iter().map(|l| 2.0 * l.gamma * (1.0 - l.occupation)).sum();
    let corr = quadratic_steady_state(&h, &[drain, 0.0, 2.0 * inst.gamma_5], &[gain, 0.0, 0.0]).map_err(s)?;
    let mut worst = (2.0 * inst.gamma_5 * corr[(2, 2)].re - obs.loss_current).abs();
    for k in 0..3 {
        worst = worst.max((corr[(k, k)].re - obs.occupation[k]).abs());
    }
    Ok(worst)
}

/// Count of nonzero exact residuals over a deterministic parameter lattice.
fn gauge_residuals() -> Measured {
    let mut nonzero = 0usize;
    for k in 0..200u32 {
        let x = |m: u32, span: f64| ((k * m) % 97) as f64 / 97.0 * span;
        let eps_g = x(13, 6.0) - 3.0;
        let eps_5 = eps_g + 0.1 + x(29, 4.0);
        let eps_e = eps_5 + 0.3 + x(31, 11.0);
        let z = |m: u32| Complex64::new(x(m, 2.0) - 1.0, x(m + 7, 2.0) - 1.0);
        let p = MicroscopicParams {
            eps_g,
            eps_e,
            eps_5,
            omega_eg: eps_e - eps_g + x(17, 1.0) - 0.5,
            omega_e5: eps_e - eps_5,
            lambda_eg: z(3),
            lambda_e5: z(5),
            alpha_eg: z(11),
            e5_bond: if k % 2 == 0 { SpontaneousBond::Coherent { alpha_e5: z(19) } } else { SpontaneousBond::Direct(z(23)) },
            gamma_e5: x(37, 4.0),
            t_5: c(0.5 + x(41, 1.0)),
            t_l: z(43),
            t_r: z(47),
            mu_l: x(53, 2.0),
            mu_r: -x(59, 2.0),
            temperature: x(61, 0.5),
            v_f: 0.5 + x(67, 1.0),
        };
        p.validate().map_err(s)?;
        let ledger = GaugeLedger::build(&p);
        nonzero += Bond::ALL.iter().filter(|&&b| !ledger.residual_exact(b, GaugeStage::BathSpaceTime).is_zero()).count();
    }
    Ok(nonzero as f64)
}

fn bridge_checks(opts: &ValidationOptions) -> Vec<CheckRecord> {
    let bopts = BridgeOptions { solver: opts.solver(), check_cutoff: true };
    let mut out = Vec::new();
    let exact = [
        BridgeInstance::filled(Regime::ExactQuadratic, 0.8, 1.0, 1.0, 0.0, 0.5),
        BridgeInstance::filled(Regime::ExactQuadratic, 1.3, 0.6, 0.7, 1.5, 0.25),
        BridgeInstance {
            leads: [FlatLead { gamma: 0.4, occupation: 0.3 }, FlatLead { gamma: 0.2, occupation: 0.9 }],
            eps_g: 0.3,
            ..BridgeInstance::filled(Regime::ExactQuadratic, 0.5, 1.2, 0.9, 0.4, 0.0)
        },
    ];
    let mut balance: f64 = 0.0;
    let exact_dev = exact.iter().try_fold(0.0f64, |acc, inst| {
        let r = bridge::compare(inst, &bopts).map_err(s)?;
        balance = balance.max(r.lindblad.atom_balance.abs());
        Ok::<_, String>(acc.max(r.relative_deviation))
    });
    out.push(record("bridge.exact_quadratic", 1e-6, exact_dev));
    out.push(record("bridge.atom_balance", 1e-8, Ok(balance)));

    let base = BridgeInstance::filled(Regime::Adiabatic, 1.0, 1.0, 1.0, 5.0, 0.5).with_cutoff(opts.fock_cutoff);
    let ratios = [5.0, 10.0, 20.0];
    match bridge::adiabatic_ladder(&base, &ratios, &bopts) {
        Ok(ladder) => {
            for (r, rep) in ratios.iter().zip(&ladder.reports) {
                out.push(record(&format!("bridge.adiabatic_ratio_{r}"), rep.tolerance(), Ok(rep.relative_deviation)));
            }
            let worst_step = ladder
                .reports
                .windows(2)
                .map(|w| w[1].relative_deviation - w[0].relative_deviation)
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(CheckRecord {
                name: "bridge.ladder_monotone".into(),
                passed: ladder.monotone,
                residual: Some(worst_step.max(0.0)),
                limit: 0.0,
                error: None,
            });
        }
        Err(e) => {
            for r in ratios {
                out.push(record(&format!("bridge.adiabatic_ratio_{r}"), bridge::regime_tolerance(Regime::Adiabatic), Err(s(&e))));
            }
            out.push(record("bridge.ladder_monotone", 0.0, Err(s(&e))));
        }
    }
    out
}
