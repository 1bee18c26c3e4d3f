//! Adaptive composite Gauss–Legendre quadrature over the real line.
//!
//! The finite window `[-Ω, Ω]` is split at caller-supplied breakpoints; the
//! two tails are mapped onto `u ∈ (0, 1]` through `ω = ±Ω/u`, so integrands
//! decaying like `1/ω²` are integrated exactly to infinity.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;

use super::KeldyshError;

const ORDER: usize = 16;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(ORDER).expect("nonzero order"))
            .as_node_weight_pairs()
            .to_vec()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    breakpoints: Vec<f64>,
}

impl FrequencyGrid {
    /// Window `[-omega_max, omega_max]` split at every interior point of
    /// `interior` (points outside the window are ignored).
    pub fn new(omega_max: f64, interior: impl IntoIterator<Item = f64>) -> Result<Self, KeldyshError> {
        if !(omega_max > 0.0) || !omega_max.is_finite() {
            return Err(KeldyshError::InvalidGrid(format!("window half-width must be > 0, got {omega_max}")));
        }
        let mut pts: Vec<f64> = interior
            .into_iter()
            .filter(|x| x.is_finite() && x.abs() < omega_max)
            .chain([-omega_max, omega_max])
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * omega_max);
        Ok(Self { breakpoints: pts })
    }

    pub fn omega_max(&self) -> f64 {
        *self.breakpoints.last().expect("grid has both window edges")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn panels(&self) -> Vec<Panel> {
        let w = self.omega_max();
        let mut out = vec![Panel { kind: Kind::LowerTail(w), a: 0.0, b: 1.0 }];
        out.extend(self.breakpoints.windows(2).map(|p| Panel { kind: Kind::Window, a: p[0], b: p[1] }));
        out.push(Panel { kind: Kind::UpperTail(w), a: 0.0, b: 1.0 });
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Window,
    LowerTail(f64),
    UpperTail(f64),
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    kind: Kind,
    a: f64,
    b: f64,
}

impl Panel {
    /// Frequency and Jacobian at the panel variable `x`.
    fn map(&self, x: f64) -> (f64, f64) {
        match self.kind {
            Kind::Window => (x, 1.0),
            Kind::LowerTail(w) => (-w / x, w / (x * x)),
            Kind::UpperTail(w) => (w / x, w / (x * x)),
        }
    }

    fn omega_range(&self) -> (f64, f64) {
        let a = match self.kind {
            Kind::Window => self.a,
            _ => self.a.max(f64::MIN_POSITIVE),
        };
        let (lo, _) = self.map(a);
        let (hi, _) = self.map(self.b);
        (lo.min(hi), lo.max(hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Absolute error target shared by the whole real line.
    pub tolerance: f64,
    /// Maximum number of interval bisections below a top-level panel.
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_depth: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const K: usize> {
    pub value: [f64; K],
    /// Sum over accepted leaves of the coarse/fine discrepancy.
    pub error: f64,
    pub evaluations: usize,
}

fn gauss<const K: usize, F>(f: &F, panel: &Panel, a: f64, b: f64) -> Result<([f64; K], f64), KeldyshError>
where
    F: Fn(f64) -> Result<[f64; K], KeldyshError>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    let mut acc = [0.0; K];
    let mut magnitude = 0.0;
    for &(x, w) in rule() {
        let (omega, jac) = panel.map(mid + half * x);
        let v = f(omega)?;
        for k in 0..K {
            let term = w * half * jac * v[k];
            acc[k] += term;
            magnitude += term.abs();
        }
    }
    Ok((acc, magnitude))
}

struct Leaf<const K: usize> {
    value: [f64; K],
    error: f64,
    evaluations: usize,
}

fn adapt<const K: usize, F>(
    f: &F,
    panel: &Panel,
    a: f64,
    b: f64,
    coarse: [f64; K],
    tol: f64,
    depth: u32,
    opts: &QuadratureOptions,
) -> Result<Leaf<K>, KeldyshError>
where
    F: Fn(f64) -> Result<[f64; K], KeldyshError>,
{
    let m = 0.5 * (a + b);
    let (left, mag_l) = gauss(f, panel, a, m)?;
    let (right, mag_r) = gauss(f, panel, m, b)?;
    let mut fine = [0.0; K];
    let mut diff: f64 = 0.0;
    for k in 0..K {
        fine[k] = left[k] + right[k];
        diff = diff.max((fine[k] - coarse[k]).abs());
    }
    let rounding = 64.0 * f64::EPSILON * (mag_l + mag_r);
    if diff <= tol.max(rounding) {
        return Ok(Leaf { value: fine, error: diff, evaluations: 2 * ORDER });
    }
    if depth >= opts.max_depth {
        let (lo, hi) = Panel { a, b, ..*panel }.omega_range();
        return Err(KeldyshError::Accuracy { estimate: diff, tolerance: tol, omega_lo: lo, omega_hi: hi });
    }
    let l = adapt(f, panel, a, m, left, 0.5 * tol, depth + 1, opts)?;
    let r = adapt(f, panel, m, b, right, 0.5 * tol, depth + 1, opts)?;
    let mut value = [0.0; K];
    for k in 0..K {
        value[k] = l.value[k] + r.value[k];
    }
    Ok(Leaf { value, error: l.error + r.error, evaluations: l.evaluations + r.evaluations + 2 * ORDER })
}

/// Integrates `K` real functions sharing one evaluation per node.
///
/// Top-level panels run in parallel; partial sums are combined in panel
/// order, so the result does not depend on the thread count.
pub fn integrate_many<const K: usize, F>(
    f: F,
    grid: &FrequencyGrid,
    opts: &QuadratureOptions,
) -> Result<Estimate<K>, KeldyshError>
where
    F: Fn(f64) -> Result<[f64; K], KeldyshError> + Sync,
{
    if !(opts.tolerance > 0.0) {
        return Err(KeldyshError::InvalidGrid(format!("tolerance must be > 0, got {}", opts.tolerance)));
    }
    let panels = grid.panels();
    let share = opts.tolerance / panels.len() as f64;
    let leaves: Vec<Leaf<K>> = panels
        .par_iter()
        .map(|p| {
            let (coarse, _) = gauss(&f, p, p.a, p.b)?;
            let leaf = adapt(&f, p, p.a, p.b, coarse, share, 0, opts)?;
            Ok(Leaf { evaluations: leaf.evaluations + ORDER, ..leaf })
        })
        .collect::<Result<_, KeldyshError>>()?;
    let mut est = Estimate { value: [0.0; K], error: 0.0, evaluations: 0 };
    for leaf in &leaves {
        for k in 0..K {
            est.value[k] += leaf.value[k];
        }
        est.error += leaf.error;
        est.evaluations += leaf.evaluations;
    }
    Ok(est)
}

/// Scalar version of [`integrate_many`].
pub fn integrate<F>(f: F, grid: &FrequencyGrid, opts: &QuadratureOptions) -> Result<Estimate<1>, KeldyshError>
where
    F: Fn(f64) -> f64 + Sync,
{
    integrate_many(|w| Ok([f(w)]), grid, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn opts(tol: f64) -> QuadratureOptions {
        QuadratureOptions { tolerance: tol, ..Default::default() }
    }

    #[test]
    fn lorentzian_is_normalized() {
        let g = 0.3;
        let grid = FrequencyGrid::new(15.0, [0.0]).unwrap();
        let est = integrate(|w| g / PI / (w * w + g * g), &grid, &opts(1e-12)).unwrap();
        assert!((est.value[0] - 1.0).abs() < 1e-10, "{}", est.value[0]);
        assert!(est.error <= 1e-12);
    }

    #[test]
    fn odd_function_vanishes() {
        let grid = FrequencyGrid::new(20.0, [-1.0, 1.0]).unwrap();
        let est = integrate(|w| w / (1.0 + w.powi(4)) * (-w * w / 50.0).exp(), &grid, &opts(1e-13)).unwrap();
        assert!(est.value[0].abs() < 1e-12);
    }

    #[test]
    fn tanh_weighted_lorentzian_against_trapezoid() {
        let (g, eps, mu, t) = (0.4, 0.3, 0.1, 0.05);
        let f = |w: f64| g / PI / ((w - eps).powi(2) + g * g) * ((w - mu) / (2.0 * t)).tanh();
        let grid = FrequencyGrid::new(40.0, [eps, mu]).unwrap();
        let est = integrate(f, &grid, &opts(1e-12)).unwrap();

        // Trapezoid on [-L, L] with 2^18 intervals plus the analytic tails
        // where tanh = ±1 (they cancel up to the asymmetric centre).
        let l = 400.0;
        let n = 1usize << 18;
        let h = 2.0 * l / n as f64;
        let mut sum = 0.5 * (f(-l) + f(l));
        for k in 1..n {
            sum += f(-l + k as f64 * h);
        }
        let tail = |x: f64| (((x - eps) / g).atan()) / PI;
        let tails = (0.5 - tail(l)) - (tail(-l) + 0.5);
        let reference = sum * h + tails;
        assert!((est.value[0] - reference).abs() < 1e-8, "{} vs {reference}", est.value[0]);
    }

    #[test]
    fn deterministic_under_thread_count() {
        let grid = FrequencyGrid::new(10.0, [-0.5, 0.2, 3.0]).unwrap();
        let f = |w: f64| 1.0 / (1.0 + (w - 0.1).powi(2)) + w.cos() * (-w * w / 4.0).exp();
        let a = integrate(f, &grid, &opts(1e-12)).unwrap().value[0];
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| integrate(f, &grid, &opts(1e-12)).unwrap().value[0]);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn unresolvable_step_is_reported() {
        let grid = FrequencyGrid::new(1.0, []).unwrap();
        let err = integrate(|w| if w > 0.123456789 { 1.0 } else { 0.0 }, &grid, &QuadratureOptions { tolerance: 1e-14, max_depth: 4 })
            .unwrap_err();
        assert!(matches!(err, KeldyshError::Accuracy { .. }));
    }
}
