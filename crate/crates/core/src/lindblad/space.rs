use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{LindbladError, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Fermion,
    Boson { cutoff: usize },
}

impl Mode {
    pub fn dim(self) -> usize {
        match self {
            Mode::Fermion => 2,
            Mode::Boson { cutoff } => cutoff + 1,
        }
    }
}

/// Ordered tensor product of modes. The first mode is the most significant
/// digit of the basis index; fermion operators carry a Jordan–Wigner parity
/// string over the fermionic modes that precede them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    modes: Vec<Mode>,
    dims: Vec<usize>,
    dim: usize,
}

impl HilbertSpace {
    pub fn new(modes: Vec<Mode>) -> Result<Self, LindbladError> {
        if modes.iter().any(|m| matches!(m, Mode::Boson { cutoff: 0 })) {
            return Err(LindbladError::InvalidArgument("boson cutoff must be >= 1".into()));
        }
        let dims: Vec<usize> = modes.iter().map(|m| m.dim()).collect();
        let dim = dims.iter().product::<usize>();
        if dim < 2 {
            return Err(LindbladError::InvalidArgument("Hilbert space dimension must be >= 2".into()));
        }
        Ok(Self { modes, dims, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Occupation digits of basis state `index`.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&n, &d)| acc * d + n)
    }

    /// Annihilation operator of mode `k`.
    pub fn annihilation(&self, k: usize) -> Result<Operator, LindbladError> {
        let mode = *self
            .modes
            .get(k)
            .ok_or_else(|| LindbladError::InvalidArgument(format!("mode index {k} out of range")))?;
        let mut op = DMatrix::zeros(self.dim, self.dim);
        for col in 0..self.dim {
            let mut digits = self.digits(col);
            let n = digits[k];
            if n == 0 {
                continue;
            }
            let amp = match mode {
                Mode::Boson { .. } => (n as f64).sqrt(),
                Mode::Fermion => {
                    let parity = self.modes[..k]
                        .iter()
                        .zip(&digits)
                        .filter(|(m, &occ)| **m == Mode::Fermion && occ == 1)
                        .count();
                    if parity % 2 == 0 { 1.0 } else { -1.0 }
                }
            };
            digits[k] = n - 1;
            op[(self.index(&digits), col)] = Complex64::new(amp, 0.0);
        }
        Ok(op)
    }

    pub fn number(&self, k: usize) -> Result<Operator, LindbladError> {
        let a = self.annihilation(k)?;
        Ok(a.adjoint() * a)
    }

    pub fn identity(&self) -> Operator {
        DMatrix::identity(self.dim, self.dim)
    }
}
