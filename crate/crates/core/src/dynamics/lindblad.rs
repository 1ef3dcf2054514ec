//! Lindblad right-hand side on a row-major flattened density matrix.
//!
//! dρ/dt = Kρ + ρK† + Σ_j γ_j A_j ρ A_j with K = −iH − ½ Σ_j γ_j A_j², valid
//! for Hermitian jump operators A_j. The operators of this model have at most
//! a handful of non-zeros per row, so products are taken in compressed form.

use nalgebra::DMatrix;

use crate::hilbert::Operator;
use crate::model::CollapseSet;
use crate::C64;

/// Compressed sparse row copy of a dense matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl Csr {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let n = m.nrows();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// out = self · X for row-major n×n X.
    fn mul_left(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let row_out = &mut out[i * n..(i + 1) * n];
            row_out.fill(C64::new(0.0, 0.0));
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.vals[idx];
                let k = self.cols[idx];
                let row_x = &x[k * n..(k + 1) * n];
                for (o, v) in row_out.iter_mut().zip(row_x) {
                    *o += a * v;
                }
            }
        }
    }

    /// out += scale · X · self on the upper triangle, mirrored by conjugation
    /// into the lower one. Assumes `self` Hermitian (column j is the conjugate
    /// of row j) and X·self Hermitian, as for X = Aρ with ρ Hermitian.
    fn sandwich_add_hermitian(&self, x: &[C64], scale: f64, out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let row_x = &x[i * n..(i + 1) * n];
            for j in i..n {
                let mut acc = C64::new(0.0, 0.0);
                for idx in self.row_ptr[j]..self.row_ptr[j + 1] {
                    // (X A)_{ij} = Σ_k X_{ik} A_{kj} = Σ_k X_{ik} conj(A_{jk})
                    acc += row_x[self.cols[idx]] * self.vals[idx].conj();
                }
                let v = acc * scale;
                if i == j {
                    out[i * n + i].re += v.re;
                } else {
                    out[i * n + j] += v;
                    out[j * n + i] += v.conj();
                }
            }
        }
    }
}

/// Precomputed pieces of the Liouvillian for one constant-H segment.
#[derive(Debug, Clone)]
pub struct LindbladRhs {
    n: usize,
    k: Csr,
    jumps: Vec<(Csr, f64)>,
    work: Vec<C64>,
}

impl LindbladRhs {
    pub fn new(h: &Operator, collapse: &CollapseSet) -> Self {
        let n = h.dim();
        let i = C64::new(0.0, 1.0);
        let mut k = h.matrix() * (-i);
        for (a, gamma) in &collapse.ops {
            if *gamma == 0.0 {
                continue;
            }
            let a2 = a.matrix() * a.matrix();
            k -= a2 * C64::new(0.5 * gamma, 0.0);
        }
        let jumps = collapse
            .ops
            .iter()
            .filter(|(_, g)| *g > 0.0)
            .map(|(a, g)| (Csr::from_dense(a.matrix()), *g))
            .collect();
        Self {
            n,
            k: Csr::from_dense(&k),
            jumps,
            work: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// dρ/dt for Hermitian ρ given row-major. The result is Hermitian to the
    /// last bit, so an integrator that combines such increments never grows an
    /// anti-Hermitian part, which the extension of this map to non-Hermitian
    /// input would amplify.
    pub fn eval(&mut self, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        // W = Kρ
        self.k.mul_left(rho, &mut self.work);
        // out = W + W†
        for i in 0..n {
            for j in i..n {
                let wij = self.work[i * n + j];
                let wji = self.work[j * n + i];
                let v = wij + wji.conj();
                out[i * n + j] = v;
                out[j * n + i] = v.conj();
            }
        }
        // + γ A ρ A
        for (a, gamma) in &self.jumps {
            a.mul_left(rho, &mut self.work);
            a.sandwich_add_hermitian(&self.work, *gamma, out);
        }
    }
}
