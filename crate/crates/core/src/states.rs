//! Initial states: excited charger, empty battery, and a Fock or coherent
//! cavity state on the truncated photon ladder.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::hilbert::{composite_dims, DensityMatrix, StateVector};
use crate::{Error, Result, C64};

/// Truncation tail above which a coherent state is rejected.
pub const MAX_TAIL: f64 = 1e-8;

/// Cavity preparation request, before truncation is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CavitySpec {
    Fock { n: usize },
    Coherent { n_bar: f64 },
}

impl CavitySpec {
    /// Default truncation: 10·N for Fock and 10·⌈N̄⌉ for coherent states,
    /// never below 1.
    pub fn default_n_max(&self) -> usize {
        let base = match *self {
            CavitySpec::Fock { n } => 10 * n,
            CavitySpec::Coherent { n_bar } => 10 * n_bar.ceil() as usize,
        };
        base.max(1)
    }

    pub fn amplitudes(&self, n_max: usize) -> Result<CavityInitState> {
        match *self {
            CavitySpec::Fock { n } => fock_amplitudes(n, n_max),
            CavitySpec::Coherent { n_bar } => coherent_amplitudes(n_bar, n_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CavityKind {
    Fock,
    Coherent,
}

/// Photon amplitudes α_n, n = 0..=n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityInitState {
    pub kind: CavityKind,
    /// N for Fock states, N̄ for coherent states.
    pub photon_number: f64,
    pub amplitudes: Vec<f64>,
    /// 1 − Σ α_n², the probability lost to truncation.
    pub norm_deficit: f64,
}

impl CavityInitState {
    pub fn n_max(&self) -> usize {
        self.amplitudes.len() - 1
    }
}

pub fn fock_amplitudes(n: usize, n_max: usize) -> Result<CavityInitState> {
    if n > n_max {
        return Err(Error::TruncationTooSmall { photons: n, n_max });
    }
    let mut amplitudes = vec![0.0; n_max + 1];
    amplitudes[n] = 1.0;
    Ok(CavityInitState {
        kind: CavityKind::Fock,
        photon_number: n as f64,
        amplitudes,
        norm_deficit: 0.0,
    })
}

/// α_n = e^{−N̄/2} N̄^{n/2} / √(n!), evaluated in log space.
fn coherent_amplitude(n_bar: f64, n: usize, ln_fact: f64) -> f64 {
    if n_bar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-n_bar / 2.0 + 0.5 * n as f64 * n_bar.ln() - 0.5 * ln_fact).exp()
}

pub fn coherent_amplitudes(n_bar: f64, n_max: usize) -> Result<CavityInitState> {
    if !(n_bar.is_finite() && n_bar >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "n_bar must be >= 0, got {n_bar}"
        )));
    }
    let mut amplitudes = Vec::with_capacity(n_max + 1);
    let mut ln_fact = 0.0;
    for n in 0..=n_max {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        amplitudes.push(coherent_amplitude(n_bar, n, ln_fact));
    }
    // Sum the tail directly so the deficit does not suffer cancellation in 1 − Σ.
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        ln_fact += (n as f64).ln();
        let a = coherent_amplitude(n_bar, n, ln_fact);
        tail += a * a;
        let negligible = a * a <= 1e-30 * tail || a * a < 1e-300;
        if ((n as f64) > n_bar && negligible) || n > n_max + 10_000 {
            break;
        }
        n += 1;
    }
    if tail >= MAX_TAIL {
        return Err(Error::TailTooLarge { tail });
    }
    Ok(CavityInitState {
        kind: CavityKind::Coherent,
        photon_number: n_bar,
        amplitudes,
        norm_deficit: tail,
    })
}

/// |1_C, 0_B⟩ ⊗ Σ α_n |n⟩, renormalized when the truncation deficit is
/// below [`MAX_TAIL`].
pub fn assemble_initial_state(cavity: &CavityInitState) -> Result<StateVector> {
    if cavity.norm_deficit >= MAX_TAIL {
        return Err(Error::TailTooLarge {
            tail: cavity.norm_deficit,
        });
    }
    let n_max = cavity.n_max();
    let np = n_max + 1;
    let norm: f64 = cavity.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut data = DVector::<C64>::zeros(4 * np);
    // qubit block (charger excited = 0, battery ground = 1) → block index 1
    let offset = np;
    for (n, a) in cavity.amplitudes.iter().enumerate() {
        data[offset + n] = C64::new(a / norm, 0.0);
    }
    StateVector::new(data, composite_dims(n_max))
}

/// ρ(0) = |ψ(0)⟩⟨ψ(0)|.
pub fn initial_density_matrix(cavity: &CavityInitState) -> Result<DensityMatrix> {
    Ok(assemble_initial_state(cavity)?.projector())
}
