use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LindbladError;

/// Steady-state correlations `C_ij = ⟨c_i† c_j⟩` of a quadratic fermionic
/// Lindbladian with Hamiltonian `Σ h_ij c_i† c_j`, loss channels `c_i` and
/// gain channels `c_i†`.
///
/// Solves `A†C + CA = −diag(gain)` with `A = −i hᵀ − ½ diag(loss + gain)`.
pub fn quadratic_steady_state(
    h: &DMatrix<Complex64>,
    loss: &[f64],
    gain: &[f64],
) -> Result<DMatrix<Complex64>, LindbladError> {
    let n = h.nrows();
    if h.ncols() != n || loss.len() != n || gain.len() != n || n == 0 {
        return Err(LindbladError::DimensionMismatch { expected: n, rows: h.nrows(), cols: h.ncols() });
    }
    if loss.iter().chain(gain).any(|&r| !(r >= 0.0) || !r.is_finite()) {
        return Err(LindbladError::InvalidArgument("rates must be finite and >= 0".into()));
    }
    let mut a = h.transpose() * Complex64::new(0.0, -1.0);
    for k in 0..n {
        a[(k, k)] -= Complex64::new(0.5 * (loss[k] + gain[k]), 0.0);
    }
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let max_real = a
        .clone()
        .schur()
        .eigenvalues()
        .map(|ev| ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
        .unwrap_or(f64::INFINITY);
    if max_real >= -1e-12 * scale {
        return Err(LindbladError::NoDecay { max_real });
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    let system = id.kronecker(&a.adjoint()) + a.transpose().kronecker(&id);
    let mut rhs = nalgebra::DVector::<Complex64>::zeros(n * n);
    for k in 0..n {
        rhs[k * n + k] = Complex64::new(-gain[k], 0.0);
    }
    let sol = system
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(LindbladError::NoDecay { max_real })?;
    let c = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&c + c.adjoint()) * Complex64::new(0.5, 0.0))
}
