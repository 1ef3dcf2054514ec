//! Closed-system propagation through eigen-decomposition phases.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::{hermitian_eig, HermitianEigen, Operator};
use crate::{Result, C64};

/// Coefficients below this modulus are dropped from the phase sum.
const NEGLIGIBLE: f64 = 1e-15;
/// Samples evaluated per batched matrix product.
const BATCH: usize = 256;

/// ψ(t) = Σ_k c_k e^{−iE_k t} φ_k for a constant Hamiltonian.
#[derive(Debug, Clone)]
pub struct PhasePropagator {
    energies: Vec<f64>,
    coefficients: Vec<C64>,
    /// Retained eigenvectors, real when the Hamiltonian is real.
    basis: Basis,
}

#[derive(Debug, Clone)]
enum Basis {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl PhasePropagator {
    pub fn new(h: &Operator, psi0: &DVector<C64>) -> Result<Self> {
        let eig = hermitian_eig(h)?;
        Ok(Self::from_eigen(&eig, psi0))
    }

    pub fn from_eigen(eig: &HermitianEigen, psi0: &DVector<C64>) -> Self {
        let c = eig.vectors.ad_mul(psi0);
        let keep: Vec<usize> = (0..c.len())
            .filter(|&k| c[k].norm() >= NEGLIGIBLE)
            .collect();
        let energies = keep.iter().map(|&k| eig.values[k]).collect();
        let coefficients = keep.iter().map(|&k| c[k]).collect();
        let d = eig.vectors.nrows();
        let real = eig.vectors.iter().all(|z| z.im == 0.0);
        let basis = if real {
            Basis::Real(DMatrix::from_fn(d, keep.len(), |r, j| {
                eig.vectors[(r, keep[j])].re
            }))
        } else {
            Basis::Complex(DMatrix::from_fn(d, keep.len(), |r, j| {
                eig.vectors[(r, keep[j])]
            }))
        };
        Self {
            energies,
            coefficients,
            basis,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.basis {
            Basis::Real(m) => m.nrows(),
            Basis::Complex(m) => m.nrows(),
        }
    }

    pub fn retained(&self) -> usize {
        self.coefficients.len()
    }

    /// State at a single time.
    pub fn state(&self, t: f64) -> DVector<C64> {
        let states = self.states(&[t]);
        states.column(0).into_owned()
    }

    /// States at several times as the columns of a D × T matrix.
    pub fn states(&self, times: &[f64]) -> DMatrix<C64> {
        let m = self.retained();
        let phases = DMatrix::from_fn(m, times.len(), |k, j| {
            self.coefficients[k] * C64::from_polar(1.0, -self.energies[k] * times[j])
        });
        match &self.basis {
            Basis::Complex(v) => v * phases,
            Basis::Real(v) => {
                let re = v * phases.map(|z| z.re);
                let im = v * phases.map(|z| z.im);
                re.zip_map(&im, C64::new)
            }
        }
    }

    /// Calls `visit(index, t, ψ(t))` for each time, batching the products.
    pub fn for_each_state<F>(&self, times: &[f64], mut visit: F) -> Result<()>
    where
        F: FnMut(usize, f64, &[C64]) -> Result<()>,
    {
        for (b, chunk) in times.chunks(BATCH).enumerate() {
            let block = self.states(chunk);
            for (j, &t) in chunk.iter().enumerate() {
                let col = block.column(j);
                visit(b * BATCH + j, t, col.as_slice())?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{pauli, PauliAxis};

    #[test]
    fn rabi_oscillation_of_sigma_x() {
        // H = σx, ψ(0) = |0⟩ → ψ(t) = cos t |0⟩ − i sin t |1⟩
        let h = pauli(PauliAxis::X);
        let psi0 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let prop = PhasePropagator::new(&h, &psi0).unwrap();
        for t in [0.0, 0.3, 1.7, 12.0] {
            let psi = prop.state(t);
            assert!((psi[0] - C64::new(t.cos(), 0.0)).norm() < 1e-14);
            assert!((psi[1] - C64::new(0.0, -t.sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn complex_hamiltonian_uses_complex_basis() {
        // H = σy, ψ(0) = |0⟩ → ψ(t) = cos t |0⟩ + sin t |1⟩
        let h = pauli(PauliAxis::Y);
        let psi0 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let prop = PhasePropagator::new(&h, &psi0).unwrap();
        let times: Vec<f64> = (0..600).map(|i| i as f64 * 0.01).collect();
        prop.for_each_state(&times, |_, t, psi| {
            assert!((psi[0] - C64::new(t.cos(), 0.0)).norm() < 1e-13);
            assert!((psi[1] - C64::new(t.sin(), 0.0)).norm() < 1e-13);
            Ok(())
        })
        .unwrap();
    }
}
