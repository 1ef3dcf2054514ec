//! Operators and states on the composite space charger ⊗ battery ⊗ photons.
//!
//! Qubit basis convention: index 0 is the excited level |1⟩ (σ_z = +1) and
//! index 1 is the ground level |0⟩ (σ_z = −1). Photon index `n` is the Fock
//! state with `n` photons. The composite index of (charger, battery, n) is
//! `(2 * charger + battery) * (n_max + 1) + n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Imaginary part of an expectation value that is silently discarded.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-9;

/// Dense complex square matrix tagged with its tensor-factor dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    data: DMatrix<C64>,
    dims: Vec<usize>,
}

impl Operator {
    pub fn new(data: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if data.nrows() != data.ncols() || data.nrows() != total {
            return Err(Error::DimensionMismatch {
                expected: vec![total, total],
                found: vec![data.nrows(), data.ncols()],
            });
        }
        Ok(Self { data, dims })
    }

    /// Operator on a single factor of dimension `n`.
    pub fn from_matrix(data: DMatrix<C64>) -> Result<Self> {
        let n = data.nrows();
        Self::new(data, vec![n])
    }

    pub fn from_real(data: DMatrix<f64>, dims: Vec<usize>) -> Result<Self> {
        Self::new(data.map(|x| C64::new(x, 0.0)), dims)
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            data: DMatrix::identity(n, n),
            dims,
        }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            data: DMatrix::zeros(n, n),
            dims,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            data: &self.data * C64::new(factor, 0.0),
            dims: self.dims.clone(),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Self {
            data: &self.data * factor,
            dims: self.dims.clone(),
        }
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            data: &self.data + &other.data,
            dims: self.dims.clone(),
        })
    }

    pub fn sub(&self, other: &Operator) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            data: &self.data - &other.data,
            dims: self.dims.clone(),
        })
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Operator) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            data: &self.data * &other.data,
            dims: self.dims.clone(),
        })
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.check_dims(other)?;
        Ok(Self {
            data: &self.data * &other.data - &other.data * &self.data,
            dims: self.dims.clone(),
        })
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.data, &other.data)
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Max-norm distance from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.data, &self.data.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// True when every entry has an exactly zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.dims != state.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: state.dims.clone(),
            });
        }
        Ok(StateVector {
            data: &self.data * &state.data,
            dims: self.dims.clone(),
        })
    }

    fn check_dims(&self, other: &Operator) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(())
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Pure state on the composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    data: DVector<C64>,
    dims: Vec<usize>,
}

impl StateVector {
    pub fn new(data: DVector<C64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if data.len() != total {
            return Err(Error::DimensionMismatch {
                expected: vec![total],
                found: vec![data.len()],
            });
        }
        Ok(Self { data, dims })
    }

    pub fn basis(index: usize, dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        let mut data = DVector::zeros(n);
        data[index] = ONE;
        Self { data, dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.data
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.data[index]
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn normalized(&self) -> Self {
        Self {
            data: self.data.normalize(),
            dims: self.dims.clone(),
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.data.dotc(&other.data)
    }

    /// |ψ⟩⟨ψ| as a density matrix (no renormalization).
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            data: &self.data * self.data.adjoint(),
            dims: self.dims.clone(),
        }
    }
}

/// Mixed state on the composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<C64>,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn new(data: DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if data.nrows() != data.ncols() || data.nrows() != total {
            return Err(Error::DimensionMismatch {
                expected: vec![total, total],
                found: vec![data.nrows(), data.ncols()],
            });
        }
        Ok(Self { data, dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    /// Tr ρ²
    pub fn purity(&self) -> f64 {
        // Tr(ρ ρ) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs_diff(&self.data, &self.data.adjoint())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let op = Operator::new(self.hermitian_part(), self.dims.clone())?;
        let eig = hermitian_eig(&op)?;
        Ok(eig.values[0])
    }

    /// True when ρ + bound·I admits a Cholesky factorization, i.e. every
    /// eigenvalue of ρ exceeds −bound. Much cheaper than a full eigensolve.
    pub fn eigenvalues_above(&self, bound: f64) -> bool {
        let n = self.dim();
        let shifted = self.hermitian_part() + DMatrix::<C64>::identity(n, n) * C64::new(bound, 0.0);
        nalgebra::Cholesky::new(shifted).is_some()
    }

    /// Trace norm distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        let diff = Operator::new(&self.data - &other.data, self.dims.clone())?;
        let eig = hermitian_eig_unchecked(&diff)?;
        Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Reduced density matrix of the photon mode (traces out both qubits).
    pub fn photon_reduced(&self) -> DMatrix<C64> {
        let np = *self.dims.last().expect("dims never empty");
        let blocks = self.dim() / np;
        let mut out = DMatrix::zeros(np, np);
        for q in 0..blocks {
            let off = q * np;
            out += self.data.view((off, off), (np, np));
        }
        out
    }

    fn hermitian_part(&self) -> DMatrix<C64> {
        (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0)
    }
}

/// Targets that an observable can be averaged over.
pub trait Expectation {
    fn dims(&self) -> &[usize];
    /// Raw ⟨op⟩ before the imaginary residue check.
    fn raw_expectation(&self, op: &DMatrix<C64>) -> C64;
}

impl Expectation for StateVector {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn raw_expectation(&self, op: &DMatrix<C64>) -> C64 {
        self.data.dotc(&(op * &self.data))
    }
}

impl Expectation for DensityMatrix {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn raw_expectation(&self, op: &DMatrix<C64>) -> C64 {
        // Tr(ρ A) = Σ_ij ρ_ij A_ji
        let n = self.data.nrows();
        let mut acc = ZERO;
        for j in 0..n {
            for i in 0..n {
                acc += self.data[(i, j)] * op[(j, i)];
            }
        }
        acc
    }
}

/// ⟨op⟩ on a pure or mixed state. An imaginary residue above
/// [`EXPECTATION_IMAG_TOL`] is reported as an error.
pub fn expectation<S: Expectation + ?Sized>(op: &Operator, state: &S) -> Result<f64> {
    if op.dims() != state.dims() {
        return Err(Error::DimensionMismatch {
            expected: op.dims().to_vec(),
            found: state.dims().to_vec(),
        });
    }
    let value = state.raw_expectation(op.matrix());
    if value.im.abs() > EXPECTATION_IMAG_TOL {
        return Err(Error::NonHermitianResidue { imag: value.im });
    }
    Ok(value.re)
}

/// Kronecker product; the factor dimensions are concatenated.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let data = a.data.kronecker(&b.data);
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Operator { data, dims }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    Charger,
    Battery,
}

/// 2×2 Pauli matrix in the (excited, ground) basis.
pub fn pauli(axis: PauliAxis) -> Operator {
    let i = C64::new(0.0, 1.0);
    let m = match axis {
        PauliAxis::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        PauliAxis::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -i, i, ZERO]),
        PauliAxis::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    };
    Operator {
        data: m,
        dims: vec![2],
    }
}

/// Canonical factor dimensions `[2, 2, n_max + 1]`.
pub fn composite_dims(n_max: usize) -> Vec<usize> {
    vec![2, 2, n_max + 1]
}

/// Pauli matrix on one qubit, identity on the other qubit and the photons.
pub fn embed_pauli(axis: PauliAxis, which: Qubit, n_max: usize) -> Operator {
    let p = pauli(axis);
    let id2 = Operator::identity(vec![2]);
    let idp = Operator::identity(vec![n_max + 1]);
    match which {
        Qubit::Charger => kron(&kron(&p, &id2), &idp),
        Qubit::Battery => kron(&kron(&id2, &p), &idp),
    }
}

/// Truncated annihilation and creation operators on the photon ladder alone.
pub fn boson_ops(n_max: usize) -> (Operator, Operator) {
    let n = n_max + 1;
    let mut a = DMatrix::<C64>::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    let a = Operator {
        data: a,
        dims: vec![n],
    };
    let a_dag = a.adjoint();
    (a, a_dag)
}

/// Photon operator lifted to the composite space (identity on both qubits).
pub fn embed_photon(op: &Operator) -> Operator {
    let id4 = Operator::identity(vec![2, 2]);
    kron(&id4, op)
}

/// Photon number a†a on the composite space, built diagonally so the entries
/// are exact integers.
pub fn number_operator(n_max: usize) -> Operator {
    let n = n_max + 1;
    let diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            ZERO
        }
    });
    embed_photon(&Operator {
        data: diag,
        dims: vec![n],
    })
}

/// Quadrature a + a† on the composite space.
pub fn quadrature(n_max: usize) -> Operator {
    let (a, a_dag) = boson_ops(n_max);
    embed_photon(&a.add(&a_dag).expect("same ladder"))
}

/// Parity Π = σ_z^C ⊗ σ_z^B ⊗ (−1)^{a†a}.
pub fn parity_operator(n_max: usize) -> Operator {
    let n = n_max + 1;
    let photon = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            ZERO
        }
    });
    let photon = Operator {
        data: photon,
        dims: vec![n],
    };
    kron(&kron(&pauli(PauliAxis::Z), &pauli(PauliAxis::Z)), &photon)
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }

    /// V diag(λ) V†
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let lam = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| C64::new(v, 0.0)),
        );
        let scaled = DMatrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |i, j| {
            self.vectors[(i, j)] * lam[j]
        });
        scaled * self.vectors.adjoint()
    }
}

/// Tolerance on Hermiticity accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// operator. Real symmetric input takes a cheaper real-arithmetic path.
pub fn hermitian_eig(op: &Operator) -> Result<HermitianEigen> {
    let dev = op.hermiticity_error();
    if dev > HERMITIAN_TOL * op.max_norm().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    hermitian_eig_unchecked(op)
}

fn hermitian_eig_unchecked(op: &Operator) -> Result<HermitianEigen> {
    let n = op.dim();
    let max_iter = 1000 * n.max(1);
    let (values, vectors) = if op.is_real() {
        let m = op.data.map(|z| z.re);
        let m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, max_iter)
            .ok_or(Error::ConvergenceFailure { dim: n })?;
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors.map(|x| C64::new(x, 0.0)),
        )
    } else {
        let m = (&op.data + op.data.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::try_new(m, f64::EPSILON, max_iter)
            .ok_or(Error::ConvergenceFailure { dim: n })?;
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors,
        )
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    Ok(HermitianEigen {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}
