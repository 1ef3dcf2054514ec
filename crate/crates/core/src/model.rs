//! Physical model: system and battery Hamiltonians, switch window, Ohmic
//! bath, decay rates and collapse operators.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hilbert::{
    composite_dims, embed_pauli, number_operator, quadrature, Operator, PauliAxis, Qubit,
};
use crate::{Error, Result};

/// Largest coupling for which the Lindblad description is trusted.
pub const LINDBLAD_COUPLING_LIMIT: f64 = 0.5;
/// Upper end of the weak system-bath regime.
pub const WEAK_BATH_LIMIT: f64 = 0.1;
/// Arguments of coth above this value are treated as giving exactly 1.
pub const COTH_SATURATION: f64 = 30.0;

/// Sign of the free qubit terms in the system Hamiltonian.
///
/// `Standard` builds `+(ω/2)σ_z` so the initial charger (σ_z = +1) sits in
/// its upper level. `Inverted` builds `−(ω/2)σ_z` for both qubits, which is
/// what one obtains when a σ_z matrix in the (up, down) basis is combined
/// with a lowering operator written in the (down, up) basis. The battery
/// observable `(ω_B/2)σ_z^B` is the same in both cases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitConvention {
    #[default]
    Standard,
    Inverted,
}

impl QubitConvention {
    fn sign(self) -> f64 {
        match self {
            QubitConvention::Standard => 1.0,
            QubitConvention::Inverted => -1.0,
        }
    }
}

/// Physical knobs of the closed system, in units of ω_B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_b: f64,
    pub omega_m: f64,
    pub g: f64,
    /// Switch-off time; `None` keeps the coupling on forever.
    pub tau: Option<f64>,
    pub n_max: usize,
    pub convention: QubitConvention,
}

impl SystemParams {
    /// Resonant system ω_C = ω_B = ω_M = 1 with the coupling held on.
    pub fn resonant(g: f64, n_max: usize) -> Self {
        Self {
            omega_c: 1.0,
            omega_b: 1.0,
            omega_m: 1.0,
            g,
            tau: None,
            n_max,
            convention: QubitConvention::Standard,
        }
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_tau(mut self, tau: Option<f64>) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_convention(mut self, convention: QubitConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn dim(&self) -> usize {
        4 * (self.n_max + 1)
    }

    pub fn dims(&self) -> Vec<usize> {
        composite_dims(self.n_max)
    }

    /// Hard validity checks. Couplings beyond the Lindblad limit only warn.
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("omega_c", self.omega_c),
            ("omega_b", self.omega_b),
            ("omega_m", self.omega_m),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be > 0, got {w}"
                )));
            }
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "g must be >= 0, got {}",
                self.g
            )));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be >= 1".into()));
        }
        if let Some(tau) = self.tau {
            if tau.is_nan() || tau < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "tau must be >= 0, got {tau}"
                )));
            }
        }
        if self.g > LINDBLAD_COUPLING_LIMIT * self.omega_b {
            log::warn!(
                "g = {} exceeds {} omega_b; the Lindblad description is unreliable there",
                self.g,
                LINDBLAD_COUPLING_LIMIT
            );
        }
        Ok(())
    }
}

/// Ohmic reservoirs acting on the battery (index 1) and the cavity (index 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParams {
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub beta: f64,
    pub omega_cut: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        Self {
            alpha_1: 0.0,
            alpha_2: 0.0,
            beta: 10.0,
            omega_cut: 500.0,
        }
    }
}

impl BathParams {
    pub fn closed() -> Self {
        Self::default()
    }

    pub fn new(alpha_1: f64, alpha_2: f64) -> Self {
        Self {
            alpha_1,
            alpha_2,
            ..Self::default()
        }
    }

    pub fn is_dissipative(&self) -> bool {
        self.alpha_1 > 0.0 || self.alpha_2 > 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_1", self.alpha_1), ("alpha_2", self.alpha_2)] {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be >= 0, got {a}"
                )));
            }
            if a > WEAK_BATH_LIMIT {
                log::warn!(
                    "{name} = {a} is outside the weak system-bath regime (<= {WEAK_BATH_LIMIT})"
                );
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        if !(self.omega_cut.is_finite() && self.omega_cut > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega_cut must be > 0, got {}",
                self.omega_cut
            )));
        }
        Ok(())
    }
}

/// Hermitian jump operators with their rates: battery σ_x first, cavity
/// quadrature second.
#[derive(Debug, Clone)]
pub struct CollapseSet {
    pub ops: Vec<(Operator, f64)>,
}

/// f(t) = 1 on [0, τ), 0 afterwards. `None` never switches off.
pub fn switch_value(t: f64, tau: Option<f64>) -> f64 {
    match tau {
        Some(tau) if t >= tau => 0.0,
        _ => 1.0,
    }
}

/// Free part (ω_C/2)σ_z^C + (ω_B/2)σ_z^B + ω_M a†a, with the qubit sign set
/// by the convention.
pub fn free_hamiltonian(p: &SystemParams) -> Operator {
    let s = p.convention.sign();
    let zc = embed_pauli(PauliAxis::Z, Qubit::Charger, p.n_max).scale(s * p.omega_c / 2.0);
    let zb = embed_pauli(PauliAxis::Z, Qubit::Battery, p.n_max).scale(s * p.omega_b / 2.0);
    let num = number_operator(p.n_max).scale(p.omega_m);
    zc.add(&zb).and_then(|h| h.add(&num)).expect("shared dims")
}

/// (a† + a)(σ_x^C + σ_x^B) without the coupling constant.
pub fn interaction_operator(n_max: usize) -> Operator {
    let xc = embed_pauli(PauliAxis::X, Qubit::Charger, n_max);
    let xb = embed_pauli(PauliAxis::X, Qubit::Battery, n_max);
    quadrature(n_max)
        .mul(&xc.add(&xb).expect("shared dims"))
        .expect("shared dims")
}

/// System Hamiltonian with the coupling either on (`g`) or off (0).
pub fn build_hamiltonian(p: &SystemParams, coupling_on: bool) -> Operator {
    let h0 = free_hamiltonian(p);
    if !coupling_on || p.g == 0.0 {
        return h0;
    }
    h0.add(&interaction_operator(p.n_max).scale(p.g))
        .expect("shared dims")
}

/// H_B = (ω_B/2)σ_z^B.
pub fn battery_hamiltonian(p: &SystemParams) -> Operator {
    embed_pauli(PauliAxis::Z, Qubit::Battery, p.n_max).scale(p.omega_b / 2.0)
}

/// J(ω) = α ω e^{−ω/ω_cut}.
pub fn ohmic_spectral_density(omega: f64, alpha: f64, omega_cut: f64) -> f64 {
    alpha * omega * (-omega / omega_cut).exp()
}

fn coth_saturating(x: f64) -> f64 {
    if x > COTH_SATURATION {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

/// γ = π α ω² / √(g² + ω²) · coth(β √(g² + ω²) / 2).
pub fn decay_rate(alpha: f64, omega: f64, g: f64, beta: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    let dressed = (g * g + omega * omega).sqrt();
    PI * alpha * omega * omega / dressed * coth_saturating(beta * dressed / 2.0)
}

/// (γ_1, γ_2) at an explicit instantaneous coupling.
pub fn decay_rates_at(p: &SystemParams, b: &BathParams, g: f64) -> (f64, f64) {
    (
        decay_rate(b.alpha_1, p.omega_b, g, b.beta),
        decay_rate(b.alpha_2, p.omega_m, g, b.beta),
    )
}

/// (γ_1, γ_2) with the coupling switched on.
pub fn decay_rates(p: &SystemParams, b: &BathParams) -> (f64, f64) {
    decay_rates_at(p, b, p.g)
}

/// Collapse operators at an explicit instantaneous coupling.
pub fn collapse_set_at(p: &SystemParams, b: &BathParams, g: f64) -> CollapseSet {
    let (g1, g2) = decay_rates_at(p, b, g);
    CollapseSet {
        ops: vec![
            (embed_pauli(PauliAxis::X, Qubit::Battery, p.n_max), g1),
            (quadrature(p.n_max), g2),
        ],
    }
}

/// Collapse operators with the coupling switched on.
pub fn collapse_set(p: &SystemParams, b: &BathParams) -> CollapseSet {
    collapse_set_at(p, b, p.g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::hermitian_eig;

    fn analytic_ladder(p: &SystemParams) -> Vec<f64> {
        let mut out = Vec::new();
        for n in 0..=p.n_max {
            for sc in [-1.0, 1.0] {
                for sb in [-1.0, 1.0] {
                    out.push(p.omega_m * n as f64 + sc * p.omega_c / 2.0 + sb * p.omega_b / 2.0);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    #[test]
    fn switch_window_boundaries() {
        assert_eq!(switch_value(0.0, Some(5.0)), 1.0);
        assert_eq!(switch_value(5.0, Some(5.0)), 0.0);
        assert_eq!(switch_value(4.999, Some(5.0)), 1.0);
        assert_eq!(switch_value(1e9, None), 1.0);
    }

    #[test]
    fn hamiltonian_dimension_and_hermiticity() {
        let p = SystemParams::resonant(0.3, 7);
        let h = build_hamiltonian(&p, true);
        assert_eq!(h.dim(), 32);
        assert!(h.hermiticity_error() < 1e-12);
    }

    #[test]
    fn zero_coupling_spectrum_is_analytic_ladder() {
        let mut p = SystemParams::resonant(0.4, 9);
        p.omega_c = 0.8;
        p.omega_m = 0.7;
        let eig = hermitian_eig(&build_hamiltonian(&p, false)).unwrap();
        for (a, b) in eig.values.iter().zip(analytic_ladder(&p)) {
            assert!((a - b).abs() < 1e-10);
        }
        let inverted = p.with_convention(QubitConvention::Inverted);
        let eig = hermitian_eig(&build_hamiltonian(&inverted, false)).unwrap();
        for (a, b) in eig.values.iter().zip(analytic_ladder(&p)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn coupling_difference_is_interaction_term() {
        let p = SystemParams::resonant(0.27, 5);
        let diff = build_hamiltonian(&p, true)
            .sub(&build_hamiltonian(&p, false))
            .unwrap();
        // independent assembly of g (a + a†)(σx^C + σx^B) from index rules
        let np = p.n_max + 1;
        for r in 0..p.dim() {
            for c in 0..p.dim() {
                let (qr, nr) = (r / np, r % np);
                let (qc, nc) = (c / np, c % np);
                let photon = if nr + 1 == nc {
                    (nc as f64).sqrt()
                } else if nc + 1 == nr {
                    (nr as f64).sqrt()
                } else {
                    0.0
                };
                // σx flips exactly one of the two qubit bits
                let flips = (qr ^ qc).count_ones() == 1;
                let expected = if flips { p.g * photon } else { 0.0 };
                assert!((diff.get(r, c).re - expected).abs() < 1e-14);
                assert_eq!(diff.get(r, c).im, 0.0);
            }
        }
    }

    #[test]
    fn inverted_convention_flips_qubit_terms_only() {
        let p = SystemParams::resonant(0.2, 3);
        let q = p.with_convention(QubitConvention::Inverted);
        let sum = build_hamiltonian(&p, true)
            .add(&build_hamiltonian(&q, true))
            .unwrap();
        let expected = number_operator(3)
            .scale(2.0)
            .add(&interaction_operator(3).scale(0.4))
            .unwrap();
        assert!(sum.max_abs_diff(&expected) < 1e-14);
        assert_eq!(
            battery_hamiltonian(&p).max_abs_diff(&battery_hamiltonian(&q)),
            0.0
        );
    }

    #[test]
    fn battery_hamiltonian_spectrum() {
        let p = SystemParams::resonant(0.0, 4);
        let eig = hermitian_eig(&battery_hamiltonian(&p)).unwrap();
        let m = 2 * (p.n_max + 1);
        assert!(eig.values[..m].iter().all(|&v| v == -0.5));
        assert!(eig.values[m..].iter().all(|&v| v == 0.5));
    }

    #[test]
    fn ohmic_density_values() {
        assert_eq!(ohmic_spectral_density(0.0, 0.1, 500.0), 0.0);
        let jc = ohmic_spectral_density(500.0, 0.1, 500.0);
        assert!((jc - 0.1 * 500.0 / std::f64::consts::E).abs() < 1e-12);
        // maximum at ω_cut
        assert!(ohmic_spectral_density(499.0, 0.1, 500.0) < jc);
        assert!(ohmic_spectral_density(501.0, 0.1, 500.0) < jc);
        let j1 = ohmic_spectral_density(3.0, 0.05, 500.0);
        assert!((ohmic_spectral_density(3.0, 0.1, 500.0) - 2.0 * j1).abs() < 1e-15);
    }

    #[test]
    fn decay_rate_reference_value() {
        let p = SystemParams::resonant(0.34, 4);
        let b = BathParams::new(0.07, 0.0);
        let (g1, g2) = decay_rates(&p, &b);
        // π·0.07/√(1.1156) with coth(5.281) = 1.0000521...
        let s = (1.0f64 + 0.34 * 0.34).sqrt();
        let x = 10.0 * s / 2.0;
        let coth = x.cosh() / x.sinh();
        let oracle = PI * 0.07 / s * coth;
        assert!((g1 - oracle).abs() < 1e-14);
        assert!((g1 - 0.20820).abs() < 5e-5);
        assert_eq!(g2, 0.0);
    }

    #[test]
    fn decay_rate_limits() {
        assert_eq!(decay_rate(0.0, 1.0, 0.3, 10.0), 0.0);
        let r = decay_rate(0.05, 1.0, 0.0, 1e4);
        assert_eq!(r, PI * 0.05);
    }

    #[test]
    fn decay_rate_decreases_with_coupling() {
        let mut prev = f64::INFINITY;
        for i in 0..=50 {
            let g = 0.01 * i as f64;
            let r = decay_rate(0.07, 1.0, g, 10.0);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn collapse_operators_square_correctly() {
        let p = SystemParams::resonant(0.2, 4);
        let set = collapse_set(&p, &BathParams::new(0.0, 0.0));
        assert_eq!(set.ops.len(), 2);
        assert!(set.ops.iter().all(|(_, r)| *r == 0.0));
        let a1 = &set.ops[0].0;
        let sq = a1.mul(a1).unwrap();
        assert_eq!(sq.max_abs_diff(&Operator::identity(p.dims())), 0.0);
        let a2 = &set.ops[1].0;
        assert!(a2.is_hermitian(0.0));
        // photon block: √n on both off-diagonals
        for n in 1..=p.n_max {
            assert!((a2.get(n - 1, n).re - (n as f64).sqrt()).abs() < 1e-15);
            assert!((a2.get(n, n - 1).re - (n as f64).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn validation() {
        assert!(SystemParams::resonant(0.1, 0).validate().is_err());
        assert!(SystemParams::resonant(-0.1, 4).validate().is_err());
        let mut p = SystemParams::resonant(0.1, 4);
        p.omega_m = 0.0;
        assert!(p.validate().is_err());
        assert!(SystemParams::resonant(0.7, 4).validate().is_ok());
        let mut b = BathParams::new(0.2, 0.0);
        assert!(b.validate().is_ok());
        b.beta = 0.0;
        assert!(b.validate().is_err());
    }
}
