//! Steady states of the master equation.
//!
//! The vectorized generator couples the entry ρ_kl only to entries reachable
//! through the nonzero pattern of the drift and the jump operators, so the
//! null-space problem splits into independent blocks found by union–find.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{
    apply_with_drift, check_all, default_step, drift, rk4_step, DensityMatrix, JumpChannel,
    LindbladError, Operator,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Largest block handled by the dense null-space path.
    pub max_block: usize,
    /// Relative singular-value threshold for counting null directions.
    pub null_tolerance: f64,
    /// Target for ‖dρ/dt‖₁ on the evolution path.
    pub residual_tolerance: f64,
    /// Initial evolution time; doubled until converged or `max_time` is hit.
    pub initial_time: f64,
    pub max_time: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            max_block: 2048,
            null_tolerance: 1e-10,
            residual_tolerance: 1e-10,
            initial_time: 1.0,
            max_time: 1e4,
        }
    }
}

/// Unique steady state, via the block null-space solve when every block
/// fits `max_block` and via time evolution otherwise.
pub fn steady_state(h: &Operator, channels: &[JumpChannel]) -> Result<DensityMatrix, LindbladError> {
    steady_state_with(h, channels, &SteadyStateOptions::default())
}

pub fn steady_state_with(
    h: &Operator,
    channels: &[JumpChannel],
    opts: &SteadyStateOptions,
) -> Result<DensityMatrix, LindbladError> {
    precheck(h, channels)?;
    let blocks = Blocks::build(h, channels);
    if blocks.largest() <= opts.max_block {
        blocks.solve(h, channels, opts)
    } else {
        let rho0 = DensityMatrix::maximally_mixed(h.nrows())?;
        steady_state_by_evolution(&rho0, h, channels, opts)
    }
}

/// Block null-space solve regardless of block size.
pub fn steady_state_null_space(
    h: &Operator,
    channels: &[JumpChannel],
    opts: &SteadyStateOptions,
) -> Result<DensityMatrix, LindbladError> {
    precheck(h, channels)?;
    Blocks::build(h, channels).solve(h, channels, opts)
}

fn precheck(h: &Operator, channels: &[JumpChannel]) -> Result<(), LindbladError> {
    check_all(h, channels, h.nrows())?;
    if !channels.iter().any(|c| c.rate > 0.0) {
        return Err(LindbladError::NoDissipation);
    }
    Ok(())
}

/// RK4 evolution from `rho0`, doubling the horizon until ‖dρ/dt‖₁ drops
/// below the tolerance.
pub fn steady_state_by_evolution(
    rho0: &DensityMatrix,
    h: &Operator,
    channels: &[JumpChannel],
    opts: &SteadyStateOptions,
) -> Result<DensityMatrix, LindbladError> {
    precheck(h, channels)?;
    check_all(h, channels, rho0.dim())?;
    let a = drift(h, channels);
    let dt_max = default_step(h, channels);
    let mut rho = rho0.matrix().clone();
    let mut t = 0.0;
    let mut horizon = opts.initial_time;
    let mut step_count = 0usize;
    loop {
        let span = horizon - t;
        let steps = (span / dt_max).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        for _ in 0..steps {
            step_count += 1;
            let next = rk4_step(&a, channels, &rho, dt);
            if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(LindbladError::Divergence { step: step_count });
            }
            rho = DensityMatrix::from_raw(next).into_matrix();
        }
        t = horizon;
        let residual = trace_norm(&apply_with_drift(&a, channels, &rho));
        if residual < opts.residual_tolerance {
            return Ok(DensityMatrix::from_raw(rho));
        }
        if horizon >= opts.max_time {
            return Err(LindbladError::NotConverged { tolerance: opts.residual_tolerance, time: t, residual });
        }
        horizon = (2.0 * horizon).min(opts.max_time);
    }
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub(crate) fn trace_norm(m: &Operator) -> f64 {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigenvalues().iter().map(|x| x.abs()).sum()
}

type SparseCols = Vec<Vec<(usize, Complex64)>>;

fn sparse_cols(m: &Operator) -> SparseCols {
    (0..m.ncols())
        .map(|j| {
            (0..m.nrows())
                .filter_map(|i| {
                    let z = m[(i, j)];
                    (z != Complex64::new(0.0, 0.0)).then_some((i, z))
                })
                .collect()
        })
        .collect()
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected blocks of the vectorized generator; entry (k, l) of ρ is
/// flattened to `k * dim + l`.
struct Blocks {
    dim: usize,
    members: Vec<Vec<usize>>,
}

impl Blocks {
    fn build(h: &Operator, channels: &[JumpChannel]) -> Self {
        let dim = h.nrows();
        let a = sparse_cols(&drift(h, channels));
        let jumps: Vec<SparseCols> = channels.iter().filter(|c| c.rate > 0.0).map(|c| sparse_cols(&c.op)).collect();
        let mut set = DisjointSet::new(dim * dim);
        for k in 0..dim {
            for l in 0..dim {
                let src = k * dim + l;
                for &(i, _) in &a[k] {
                    set.union(src, i * dim + l);
                }
                for &(j, _) in &a[l] {
                    set.union(src, k * dim + j);
                }
                for lop in &jumps {
                    for &(i, _) in &lop[k] {
                        for &(j, _) in &lop[l] {
                            set.union(src, i * dim + j);
                        }
                    }
                }
            }
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for p in 0..dim * dim {
            let r = set.find(p);
            by_root.entry(r).or_default().push(p);
        }
        Self { dim, members: by_root.into_values().collect() }
    }

    fn largest(&self) -> usize {
        self.members.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn dense_block(&self, members: &[usize], h: &Operator, channels: &[JumpChannel]) -> DMatrix<Complex64> {
        let dim = self.dim;
        let a = drift(h, channels);
        let m = members.len();
        let mut local = std::collections::HashMap::with_capacity(m);
        for (idx, &p) in members.iter().enumerate() {
            local.insert(p, idx);
        }
        let mut s = DMatrix::zeros(m, m);
        // S[(i,j),(k,l)] = A_ik δ_jl + δ_ik conj(A_jl) + Σ γ L_ik conj(L_jl)
        for (col, &p) in members.iter().enumerate() {
            let (k, l) = (p / dim, p % dim);
            for i in 0..dim {
                let z = a[(i, k)];
                if z != Complex64::new(0.0, 0.0) {
                    s[(local[&(i * dim + l)], col)] += z;
                }
            }
            for j in 0..dim {
                let z = a[(j, l)].conj();
                if z != Complex64::new(0.0, 0.0) {
                    s[(local[&(k * dim + j)], col)] += z;
                }
            }
            for c in channels.iter().filter(|c| c.rate > 0.0) {
                for i in 0..dim {
                    let li = c.op[(i, k)];
                    if li == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..dim {
                        let lj = c.op[(j, l)];
                        if lj != Complex64::new(0.0, 0.0) {
                            s[(local[&(i * dim + j)], col)] += li * lj.conj() * c.rate;
                        }
                    }
                }
            }
        }
        s
    }

    fn solve(
        &self,
        h: &Operator,
        channels: &[JumpChannel],
        opts: &SteadyStateOptions,
    ) -> Result<DensityMatrix, LindbladError> {
        let dim = self.dim;
        let mut nullity = 0usize;
        let mut state: Option<Operator> = None;
        for members in &self.members {
            let has_diagonal = members.iter().any(|&p| p / dim == p % dim);
            let s = self.dense_block(members, h, channels);
            let svd = s.svd(false, has_diagonal);
            let sv = &svd.singular_values;
            let smax = sv.iter().copied().fold(0.0, f64::max);
            let threshold = opts.null_tolerance * smax.max(f64::MIN_POSITIVE);
            let null: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] <= threshold).collect();
            nullity += null.len();
            if nullity > 1 {
                return Err(LindbladError::NonUniqueSteadyState { dimension: nullity });
            }
            if let (Some(&k), true) = (null.first(), has_diagonal) {
                let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
                let mut rho = Operator::zeros(dim, dim);
                for (idx, &p) in members.iter().enumerate() {
                    rho[(p / dim, p % dim)] = v_t[(k, idx)].conj();
                }
                state = Some(rho);
            }
        }
        let rho = state.ok_or(LindbladError::NonUniqueSteadyState { dimension: 0 })?;
        let tr = rho.trace();
        if tr.norm() < f64::EPSILON {
            return Err(LindbladError::NonUniqueSteadyState { dimension: nullity });
        }
        Ok(DensityMatrix::from_raw(rho / tr))
    }
}
