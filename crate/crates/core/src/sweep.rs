//! Drive-intensity sweeps of the loss current and location of its maximum.

use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keldysh::{self, KeldyshError, SolverOptions};
use crate::model::{bath_rate, BondTreatment, EffectiveModel};

pub const CSV_HEADER: &str = "gamma,e_nh,delta_mu,I_loss,I_L,I_R,n_g,n_e,n_5,continuity_residual,grid_error";

/// Largest tolerated `|I_L + I_R − I_loss| / max(1, I_loss)`.
pub const CONTINUITY_LIMIT: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("configuration parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("solver failed at gamma = {gamma}, e_nh = {e_nh}, delta_mu = {delta_mu}: {source}")]
    Solver { gamma: f64, e_nh: f64, delta_mu: f64, source: KeldyshError },
    #[error("continuity violated at gamma = {gamma}, e_nh = {e_nh}, delta_mu = {delta_mu}: residual {residual:e}")]
    Continuity { gamma: f64, e_nh: f64, delta_mu: f64, residual: f64 },
    #[error("no curve for e_nh = {e_nh}, delta_mu = {delta_mu} in the sweep")]
    MissingCurve { e_nh: f64, delta_mu: f64 },
    #[error("curve has {0} points; at least 8 are needed to locate a peak")]
    TooFewPoints(usize),
    #[error("no interior maximum: the curve is {0} at the grid end")]
    NoPeak(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub eps_g: f64,
    pub detuning: f64,
    pub t_l: f64,
    pub t_r: f64,
    pub t_e5: f64,
    pub t_5: f64,
    pub temperature: f64,
    pub two_v_f: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { eps_g: 0.0, detuning: 0.0, t_l: 0.5, t_r: 0.5, t_e5: 1.0, t_5: 1.0, temperature: 0.1, two_v_f: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_count: usize,
    pub e_nh: Vec<f64>,
    pub delta_mu: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            gamma_min: 1e-3,
            gamma_max: 1e3,
            gamma_count: 33,
            e_nh: vec![1.0, 2.0, 4.0],
            delta_mu: vec![0.0, 1.0, 4.0, 1000.0],
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub bond: BondTreatment,
    pub fock_cutoff: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-12, bond: BondTreatment::Causal, fock_cutoff: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub model: ModelConfig,
    pub sweep: SweepSpec,
    pub solver: SolverConfig,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: String| Err(SweepError::Config(m));
        let s = &self.sweep;
        if !(s.gamma_min > 0.0) || !s.gamma_min.is_finite() {
            return bad(format!("sweep.gamma_min must be > 0, got {}", s.gamma_min));
        }
        if !(s.gamma_max >= s.gamma_min) || !s.gamma_max.is_finite() {
            return bad(format!("sweep.gamma_max must be >= gamma_min, got {}", s.gamma_max));
        }
        if s.gamma_count < 2 {
            return bad(format!("sweep.gamma_count must be >= 2, got {}", s.gamma_count));
        }
        if s.e_nh.is_empty() || s.delta_mu.is_empty() {
            return bad("sweep.e_nh and sweep.delta_mu must be non-empty".into());
        }
        if let Some(e) = s.e_nh.iter().find(|e| !(**e >= 1.0) || !e.is_finite()) {
            return bad(format!("every e_nh must be >= 1, got {e}"));
        }
        if let Some(d) = s.delta_mu.iter().find(|d| !d.is_finite()) {
            return bad(format!("delta_mu must be finite, got {d}"));
        }
        let m = &self.model;
        if !(m.two_v_f > 0.0) {
            return bad(format!("model.two_v_f must be > 0, got {}", m.two_v_f));
        }
        if !(m.temperature >= 0.0) {
            return bad(format!("model.temperature must be >= 0, got {}", m.temperature));
        }
        let fields = [m.eps_g, m.detuning, m.t_l, m.t_r, m.t_e5, m.t_5];
        if fields.iter().any(|x| !x.is_finite()) {
            return bad("model parameters must be finite".into());
        }
        if bath_rate(Complex64::new(m.t_5, 0.0), m.two_v_f / 2.0) <= 0.0 {
            return bad("model.t_5 must be nonzero".into());
        }
        if !(self.solver.tolerance > 0.0) {
            return bad(format!("solver.tolerance must be > 0, got {}", self.solver.tolerance));
        }
        if self.solver.fock_cutoff == 0 {
            return bad("solver.fock_cutoff must be >= 1".into());
        }
        Ok(())
    }

    /// Log-spaced drive intensities with exact end points.
    pub fn gammas(&self) -> Vec<f64> {
        let s = &self.sweep;
        let n = s.gamma_count;
        let ratio = (s.gamma_max / s.gamma_min).ln();
        (0..n)
            .map(|k| match k {
                0 => s.gamma_min,
                k if k == n - 1 => s.gamma_max,
                k => s.gamma_min * (ratio * k as f64 / (n - 1) as f64).exp(),
            })
            .collect()
    }

    /// Network at drive intensity `gamma` (`t_eg = sqrt(gamma)`), with
    /// `mu_L = −mu_R = delta_mu / 2`.
    pub fn model_at(&self, gamma: f64, e_nh: f64, delta_mu: f64) -> EffectiveModel {
        let m = &self.model;
        let v_f = m.two_v_f / 2.0;
        let rate = |t: f64| bath_rate(Complex64::new(t, 0.0), v_f);
        EffectiveModel::junction(
            m.eps_g,
            m.detuning,
            Complex64::new(gamma.sqrt(), 0.0),
            Complex64::new(m.t_e5, 0.0),
            rate(m.t_l),
            rate(m.t_r),
            delta_mu / 2.0,
            -delta_mu / 2.0,
            m.temperature,
            rate(m.t_5),
            e_nh,
            self.solver.bond,
        )
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tolerance: self.solver.tolerance, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub gamma: f64,
    pub e_nh: f64,
    pub delta_mu: f64,
    pub i_loss: f64,
    pub i_l: f64,
    pub i_r: f64,
    pub n_g: f64,
    pub n_e: f64,
    pub n_5: f64,
    pub continuity_residual: f64,
    pub grid_error: f64,
}

impl SweepRecord {
    pub fn csv_line(&self) -> String {
        [
            self.gamma,
            self.e_nh,
            self.delta_mu,
            self.i_loss,
            self.i_l,
            self.i_r,
            self.n_g,
            self.n_e,
            self.n_5,
            self.continuity_residual,
            self.grid_error,
        ]
        .iter()
        .map(|x| format!("{x:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    /// Records of one `(e_nh, delta_mu)` curve in increasing `gamma`.
    pub fn curve(&self, e_nh: f64, delta_mu: f64) -> Vec<SweepRecord> {
        self.records.iter().filter(|r| r.e_nh == e_nh && r.delta_mu == delta_mu).copied().collect()
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(out, "{}", r.csv_line())?;
        }
        Ok(())
    }
}

/// Solves one sweep point and enforces steady-state continuity.
pub fn evaluate_point(cfg: &SweepConfig, gamma: f64, e_nh: f64, delta_mu: f64) -> Result<SweepRecord, SweepError> {
    let model = cfg.model_at(gamma, e_nh, delta_mu);
    let obs = keldysh::solve(&model, &cfg.solver_options())
        .map_err(|source| SweepError::Solver { gamma, e_nh, delta_mu, source })?;
    let residual = obs.continuity_residual;
    if !(residual.abs() <= CONTINUITY_LIMIT * obs.loss_current.abs().max(1.0)) {
        return Err(SweepError::Continuity { gamma, e_nh, delta_mu, residual });
    }
    Ok(SweepRecord {
        gamma,
        e_nh,
        delta_mu,
        i_loss: obs.loss_current,
        i_l: obs.lead_current[0],
        i_r: obs.lead_current[1],
        n_g: obs.occupation[0],
        n_e: obs.occupation[1],
        n_5: obs.occupation[2],
        continuity_residual: residual,
        grid_error: obs.error_estimate,
    })
}

/// Evaluates the Cartesian grid in parallel; records come out gamma-major,
/// then `e_nh`, then `delta_mu`, in configuration order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    let mut points = Vec::new();
    for g in cfg.gammas() {
        for &e in &cfg.sweep.e_nh {
            for &d in &cfg.sweep.delta_mu {
                points.push((g, e, d));
            }
        }
    }
    let records = points
        .par_iter()
        .map(|&(g, e, d)| evaluate_point(cfg, g, e, d))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult { records })
}

/// Number of strict interior local maxima.
pub fn interior_maxima(values: &[f64]) -> usize {
    values.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenoPeak {
    pub gamma: f64,
    pub i_loss: f64,
    /// Index of the grid argmax that seeded the refinement.
    pub grid_index: usize,
}

/// Grid argmax refined by golden-section search in `ln gamma` between the
/// neighbouring grid points.
pub fn refine_peak<F>(gammas: &[f64], values: &[f64], f: F, rel_tol: f64) -> Result<ZenoPeak, SweepError>
where
    F: Fn(f64) -> Result<f64, SweepError>,
{
    let n = values.len();
    if n < 8 || gammas.len() != n {
        return Err(SweepError::TooFewPoints(n));
    }
    let (k, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    if k == 0 {
        return Err(SweepError::NoPeak("decreasing"));
    }
    if k == n - 1 {
        return Err(SweepError::NoPeak("increasing"));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (gammas[k - 1].ln(), gammas[k + 1].ln());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c.exp())?, f(d.exp())?);
    while b - a > rel_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d.exp())?;
        }
    }
    let (x, fx) = if fc > fd { (c, fc) } else { (d, fd) };
    if fx >= values[k] {
        Ok(ZenoPeak { gamma: x.exp(), i_loss: fx, grid_index: k })
    } else {
        Ok(ZenoPeak { gamma: gammas[k], i_loss: values[k], grid_index: k })
    }
}

/// Maximum of the loss current along one curve of `result`.
pub fn find_zeno_peak(result: &SweepResult, cfg: &SweepConfig, e_nh: f64, delta_mu: f64) -> Result<ZenoPeak, SweepError> {
    let curve = result.curve(e_nh, delta_mu);
    if curve.is_empty() {
        return Err(SweepError::MissingCurve { e_nh, delta_mu });
    }
    let gammas: Vec<f64> = curve.iter().map(|r| r.gamma).collect();
    let values: Vec<f64> = curve.iter().map(|r| r.i_loss).collect();
    refine_peak(&gammas, &values, |g| Ok(evaluate_point(cfg, g, e_nh, delta_mu)?.i_loss), 1e-6)
}
