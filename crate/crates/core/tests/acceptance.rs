//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zenoloss::bridge::{self, BridgeInstance, BridgeOptions, FlatLead, Regime};
use zenoloss::keldysh::{self, SolverOptions};
use zenoloss::lindblad::{
    self, commutant_drift_check, default_step, evolve_trajectory, expectation, leap_expectation_check,
    quadratic_steady_state, DensityMatrix, HilbertSpace, JumpChannel, Mode, Operator,
};
use zenoloss::model::{
    BondTreatment, Bond, GaugeLedger, GaugeStage, MicroscopicParams, SpontaneousBond,
};
use zenoloss::sweep::{interior_maxima, run_sweep, SweepConfig, SweepResult};

type Outcome = Result<String, String>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn coherent(alpha: f64, cutoff: usize) -> Vec<Complex64> {
    let mut amp = Vec::with_capacity(cutoff + 1);
    let mut term = 1.0;
    for n in 0..=cutoff {
        if n > 0 {
            term *= alpha / (n as f64).sqrt();
        }
        amp.push(c(term));
    }
    amp
}

fn photon_decay() -> Outcome {
    let cutoff = 12;
    let space = HilbertSpace::new(vec![Mode::Boson { cutoff }]).map_err(|e| e.to_string())?;
    let a = space.annihilation(0).map_err(|e| e.to_string())?;
    let n = a.adjoint() * &a;
    let h = n.clone() * c(0.7);
    let ch = [JumpChannel::new(a, 2.0).map_err(|e| e.to_string())?];
    let rho0 = DensityMatrix::pure(&coherent(1.3, cutoff)).map_err(|e| e.to_string())?;
    let dt = default_step(&h, &ch);
    let n0 = expectation(&n, &rho0).map_err(|e| e.to_string())?.re;
    let (mut decay, mut drift, mut min_eig): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for t in [0.25, 0.5, 1.0] {
        let traj = evolve_trajectory(&rho0, &h, &ch, t, dt, 1).map_err(|e| e.to_string())?;
        for (_, rho) in &traj {
            drift = drift.max((rho.matrix().trace() - c(1.0)).norm());
            min_eig = min_eig.min(rho.min_eigenvalue());
        }
        let last = &traj.last().expect("trajectory is non-empty").1;
        let ratio = expectation(&n, last).map_err(|e| e.to_string())?.re / n0;
        decay = decay.max((ratio - (-2.0 * t).exp()).abs());
    }
    check(
        decay <= 1e-6 && drift <= 1e-10 && min_eig >= -1e-10,
        format!("decay error {decay:.2e}, trace drift {drift:.2e}, min eigenvalue {min_eig:.2e}"),
    )
}

/// g, e, 5 fermions and the spontaneous photon with the given cutoff.
fn driven_lambda(rng: &mut ChaCha8Rng, cutoff: usize) -> Result<(HilbertSpace, Operator, Vec<JumpChannel>), String> {
    let space =
        HilbertSpace::new(vec![Mode::Fermion, Mode::Fermion, Mode::Fermion, Mode::Boson { cutoff }]).map_err(|e| e.to_string())?;
    let ops: Vec<Operator> = (0..4).map(|k| space.annihilation(k)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let (g, e, s, a) = (&ops[0], &ops[1], &ops[2], &ops[3]);
    let drive = e.adjoint() * g * c(rng.random_range(0.3..1.5));
    let spont = e.adjoint() * a * s * c(rng.random_range(0.3..1.5));
    let h = &drive + drive.adjoint() + &spont + spont.adjoint() + e.adjoint() * e * c(rng.random_range(-0.5..0.5));
    let ch = vec![
        JumpChannel::new(a.clone(), rng.random_range(0.5..3.0)).map_err(|e| e.to_string())?,
        JumpChannel::new(s.clone(), rng.random_range(0.5..3.0)).map_err(|e| e.to_string())?,
    ];
    Ok((space, h, ch))
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Result<DensityMatrix, String> {
    let m = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let p = &m * m.adjoint();
    let tr = p.trace();
    DensityMatrix::new(p / tr).map_err(|e| e.to_string())
}

fn expectation_lemmas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_commutant: f64 = 0.0;
    for _ in 0..100 {
        let (space, h, ch) = driven_lambda(&mut rng, 2)?;
        let g = space.annihilation(0).map_err(|e| e.to_string())?;
        let e = space.annihilation(1).map_err(|e| e.to_string())?;
        // Even operators on (g, e) commute with c_5, c_5† and the photon.
        let basis = [
            space.identity(),
            g.adjoint() * &g,
            e.adjoint() * &e,
            g.adjoint() * &e,
            e.adjoint() * &g,
            &g * &e,
            e.adjoint() * g.adjoint(),
            g.adjoint() * &g * e.adjoint() * &e,
        ];
        let mut o = Operator::zeros(space.dim(), space.dim());
        for b in &basis {
            o += b * Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let rho = random_state(&mut rng, space.dim())?;
        let r = commutant_drift_check(&o, &h, &ch, &rho).map_err(|e| e.to_string())?;
        worst_commutant = worst_commutant.max(r);
    }

    let cutoff = 4;
    let (space, h, ch) = driven_lambda(&mut rng, cutoff)?;
    // Atom in g, photon in a truncated coherent state.
    let photon = coherent(0.6, cutoff);
    let mut psi = vec![c(0.0); space.dim()];
    let base = 4 * (cutoff + 1);
    for (k, amp) in photon.iter().enumerate() {
        psi[base + k] = *amp;
    }
    let rho0 = DensityMatrix::pure(&psi).map_err(|e| e.to_string())?;
    let traj = evolve_trajectory(&rho0, &h, &ch, 4.0, default_step(&h, &ch), 25).map_err(|e| e.to_string())?;
    let leap = leap_expectation_check(&ch[0], &h, &ch, &traj).map_err(|e| e.to_string())?;
    let a_mean = traj.iter().map(|(_, r)| expectation(&ch[0].op, r).map(|z| z.norm()).unwrap_or(0.0)).fold(0.0, f64::max);
    check(
        worst_commutant <= 1e-10 && leap <= 1e-8 && a_mean > 0.1,
        format!("commutant residual {worst_commutant:.2e} over 100 operators, leap residual {leap:.2e} over {} samples", traj.len()),
    )
}

fn random_quadratic(rng: &mut ChaCha8Rng) -> BridgeInstance {
    let mut lead = || FlatLead { gamma: rng.random_range(0.1..1.0), occupation: rng.random_range(0.0..1.0) };
    let leads = [lead(), lead()];
    BridgeInstance {
        eps_g: rng.random_range(-1.0..1.0),
        eps_shifted: rng.random_range(-1.0..1.0),
        t_eg: rng.random_range(0.1..1.5),
        t_e5: rng.random_range(0.2..1.5),
        gamma_5: rng.random_range(0.2..2.0),
        gamma_e5: 0.0,
        leads,
        fock_cutoff: 1,
        regime: Regime::ExactQuadratic,
    }
}

/// `⟨c_i† c_j⟩` of the dense steady state.
fn dense_correlations(inst: &BridgeInstance) -> Result<DMatrix<Complex64>, String> {
    let full = bridge::build_full_lindblad(inst).map_err(|e| e.to_string())?;
    let rho = lindblad::steady_state(&full.hamiltonian, &full.channels).map_err(|e| e.to_string())?;
    let mut out = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            out[(i, j)] = expectation(&(full.modes[i].adjoint() * &full.modes[j]), &rho).map_err(|e| e.to_string())?;
        }
    }
    Ok(out)
}

fn lyapunov_correlations(inst: &BridgeInstance) -> Result<DMatrix<Complex64>, String> {
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
    let loss = [drain, 0.0, 2.0 * (inst.gamma_5 + inst.gamma_e5)];
    quadratic_steady_state(&h, &loss, &[gain, 0.0, 0.0]).map_err(|e| e.to_string())
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = SolverOptions { tolerance: 1e-11, ..Default::default() };
    let (mut dense_lyap, mut dense_keld, mut lyap_keld): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let count = 24;
    for _ in 0..count {
        let inst = random_quadratic(&mut rng);
        let dense = dense_correlations(&inst)?;
        let lyap = lyapunov_correlations(&inst)?;
        let model = bridge::effective_counterpart(&inst).map_err(|e| e.to_string())?;
        let obs = keldysh::solve(&model, &opts).map_err(|e| e.to_string())?;
        dense_lyap = dense_lyap.max((&dense - &lyap).iter().map(|z| z.norm()).fold(0.0, f64::max));
        let rate = 2.0 * inst.gamma_5;
        let loss_dense = rate * dense[(2, 2)].re;
        let loss_lyap = rate * lyap[(2, 2)].re;
        dense_lyap = dense_lyap.max((loss_dense - loss_lyap).abs());
        for k in 0..3 {
            dense_keld = dense_keld.max((dense[(k, k)].re - obs.occupation[k]).abs());
            lyap_keld = lyap_keld.max((lyap[(k, k)].re - obs.occupation[k]).abs());
        }
        dense_keld = dense_keld.max((loss_dense - obs.loss_current).abs());
        lyap_keld = lyap_keld.max((loss_lyap - obs.loss_current).abs());
    }
    let worst = dense_lyap.max(dense_keld).max(lyap_keld);
    check(
        worst <= 1e-6,
        format!("{count} instances: dense/Lyapunov {dense_lyap:.2e}, dense/Keldysh {dense_keld:.2e}, Lyapunov/Keldysh {lyap_keld:.2e}"),
    )
}

fn continuity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let e_values = [1.0, 1.5, 2.0, 4.0];
    let mu_values = [0.0, 1.0, 4.0, 1000.0];
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let mut cfg = SweepConfig::default();
        cfg.model.eps_g = rng.random_range(-1.0..1.0);
        cfg.model.detuning = rng.random_range(-1.0..1.0);
        cfg.model.temperature = rng.random_range(0.02..0.5);
        cfg.solver.bond = if k % 2 == 0 { BondTreatment::TimeLoop } else { BondTreatment::Causal };
        let gamma = 10f64.powf(rng.random_range(-3.0..3.0));
        let e = e_values[k % 4];
        let d = mu_values[(k / 4) % 4];
        let obs = keldysh::solve(&cfg.model_at(gamma, e, d), &cfg.solver_options())
            .map_err(|err| format!("gamma = {gamma}, e_nh = {e}, delta_mu = {d}: {err}"))?;
        let inflow = obs.lead_current[0] + obs.lead_current[1];
        worst = worst.max((inflow - obs.loss_current).abs() / obs.loss_current.abs());
    }
    check(worst <= 1e-8, format!("100 points, worst relative residual {worst:.2e}"))
}

fn values(result: &SweepResult, e: f64, d: f64) -> Vec<f64> {
    result.curve(e, d).iter().map(|r| r.i_loss).collect()
}

fn zeno_peaks(cfg: &SweepConfig, result: &SweepResult) -> Outcome {
    let mut counts = Vec::new();
    for &e in &cfg.sweep.e_nh {
        for &d in &cfg.sweep.delta_mu {
            counts.push(((e, d), interior_maxima(&values(result, e, d))));
        }
    }
    let bad: Vec<_> = counts.iter().filter(|(_, n)| *n != 1).collect();
    check(
        bad.is_empty() && counts.len() == 12,
        format!("{} curves of {} points, curves without exactly one maximum: {bad:?}", counts.len(), cfg.sweep.gamma_count),
    )
}

fn collapse(result: &SweepResult) -> Outcome {
    let reference = values(result, 1.0, 0.0);
    let mut worst: f64 = 0.0;
    for d in [1.0, 4.0] {
        for (a, b) in values(result, 1.0, d).iter().zip(&reference) {
            worst = worst.max((a - b).abs() / b.abs());
        }
    }
    check(worst <= 1e-6 && reference.len() == 33, format!("worst relative spread {worst:.2e}"))
}

fn crossover(result: &SweepResult) -> Outcome {
    let at = |d: f64, idx: usize| values(result, 2.0, d)[idx];
    let mut lines = Vec::new();
    let mut ok = true;
    for (idx, label, near_proxy) in [(0, "1e-3", true), (32, "1e3", false)] {
        for d in [1.0, 4.0] {
            let to_proxy = (at(d, idx) - at(1000.0, idx)).abs();
            let to_zero = (at(d, idx) - at(0.0, idx)).abs();
            // Orderings decided by quadrature noise do not count.
            let resolution = 1e-9 * at(d, idx).abs();
            let gap = if near_proxy { to_zero - to_proxy } else { to_proxy - to_zero };
            ok &= gap > resolution;
            lines.push(format!("gamma {label}, delta_mu {d}: |to proxy| {to_proxy:.2e} |to zero| {to_zero:.2e}"));
        }
    }
    check(ok, lines.join("; "))
}

fn bridge_ladder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = BridgeOptions::default();
    let mut exact: f64 = 0.0;
    for k in 0..8 {
        let mut inst = random_quadratic(&mut rng);
        if k % 2 == 1 {
            inst.gamma_e5 = rng.random_range(0.1..3.0);
        }
        let r = bridge::compare(&inst, &opts).map_err(|e| e.to_string())?;
        exact = exact.max(r.relative_deviation);
    }
    let base = BridgeInstance::filled(Regime::Adiabatic, 1.0, 1.0, 1.0, 5.0, 0.5).with_cutoff(8);
    let ladder = bridge::adiabatic_ladder(&base, &[5.0, 10.0, 20.0], &opts).map_err(|e| e.to_string())?;
    let devs: Vec<String> = ladder.reports.iter().map(|r| format!("{:.3e}", r.relative_deviation)).collect();
    let within = ladder.reports.iter().all(|r| r.relative_deviation <= 5e-2);
    check(
        exact <= 1e-6 && within && ladder.monotone,
        format!("exact worst {exact:.2e}; ladder deviations [{}], monotone {}", devs.join(", "), ladder.monotone),
    )
}

fn random_params(rng: &mut ChaCha8Rng) -> MicroscopicParams {
    let mut z = |s: f64| Complex64::new(rng.random_range(-s..s), rng.random_range(-s..s));
    let (lambda_eg, lambda_e5, alpha_eg, alpha_e5) = (z(2.0), z(2.0), z(3.0), z(1.0));
    let (t_5, t_l, t_r) = (z(1.5), z(1.0), z(1.0));
    let eps_g = rng.random_range(-5.0..5.0);
    let eps_5 = eps_g + rng.random_range(0.01..5.0);
    let eps_e = eps_5 + rng.random_range(0.01..20.0);
    let e5_bond = if rng.random_bool(0.5) {
        SpontaneousBond::Coherent { alpha_e5 }
    } else {
        SpontaneousBond::Direct(alpha_e5)
    };
    MicroscopicParams {
        eps_g,
        eps_e,
        eps_5,
        omega_eg: eps_e - eps_g + rng.random_range(-2.0..2.0),
        omega_e5: eps_e - eps_5,
        lambda_eg,
        lambda_e5,
        alpha_eg,
        e5_bond,
        gamma_e5: rng.random_range(0.0..5.0),
        t_5,
        t_l,
        t_r,
        mu_l: rng.random_range(-3.0..3.0),
        mu_r: rng.random_range(-3.0..3.0),
        temperature: rng.random_range(0.0..1.0),
        v_f: rng.random_range(0.1..2.0),
    }
}

fn gauge_ledger() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut nonzero = Vec::new();
    for draw in 0..1000 {
        let p = random_params(&mut rng);
        p.validate().map_err(|e| format!("draw {draw}: {e}"))?;
        let ledger = GaugeLedger::build(&p);
        for bond in Bond::ALL {
            if !ledger.residual_exact(bond, GaugeStage::BathSpaceTime).is_zero() {
                nonzero.push((draw, bond));
            }
        }
    }
    check(nonzero.is_empty(), format!("1000 draws x {} bonds, nonzero residuals: {nonzero:?}", Bond::ALL.len()))
}

fn report(index: usize, name: &str, start: Instant, outcome: Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("criterion {index} {tag} {name} [{secs:.1} s]: {detail}");
    ok
}

fn main() -> ExitCode {
    let mut all = true;
    let start = Instant::now();
    all &= report(1, "photon decay", start, photon_decay());
    let start = Instant::now();
    all &= report(2, "expectation-value lemmas", start, expectation_lemmas());
    let start = Instant::now();
    all &= report(3, "oracle equivalence", start, oracle_equivalence());
    let start = Instant::now();
    all &= report(4, "continuity", start, continuity());

    let start = Instant::now();
    let cfg = SweepConfig::default();
    match run_sweep(&cfg) {
        Ok(result) => {
            all &= report(5, "zeno non-monotonicity", start, zeno_peaks(&cfg, &result));
            all &= report(6, "delta_mu collapse at e_nh = 1", start, collapse(&result));
            all &= report(7, "crossover at e_nh = 2", start, crossover(&result));
        }
        Err(e) => {
            for (k, name) in [(5, "zeno non-monotonicity"), (6, "delta_mu collapse at e_nh = 1"), (7, "crossover at e_nh = 2")] {
                all &= report(k, name, start, Err(format!("sweep failed: {e}")));
            }
        }
    }

    let start = Instant::now();
    all &= report(8, "bridge", start, bridge_ladder());
    let start = Instant::now();
    all &= report(9, "gauge ledger", start, gauge_ledger());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
