//! Time evolution with the coupling switched off at τ: exact eigen-phase
//! propagation for the closed system and adaptive Dormand–Prince integration
//! of the Lindblad equation for the open system.

pub mod lindblad;
pub mod ode;
pub mod unitary;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hilbert::{expectation, DensityMatrix, Operator, StateVector};
use crate::model::{
    battery_hamiltonian, build_hamiltonian, collapse_set_at, BathParams, SystemParams,
};
use crate::{Error, Result, C64};

use lindblad::LindbladRhs;
use ode::{OdeOptions, OdeStats};
use unitary::PhasePropagator;

/// Most negative eigenvalue tolerated in a sampled density matrix.
pub const POSITIVITY_BOUND: f64 = 1e-7;
/// Population of the two highest photon levels above which a run is invalid.
pub const LEAKAGE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    /// Keep the full state at every sample.
    pub store_states: bool,
    /// Check ρ ≥ −[`POSITIVITY_BOUND`] on every n-th sample (and the last).
    pub positivity_stride: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            store_states: false,
            positivity_stride: 10,
        }
    }
}

impl EvolveOptions {
    pub fn storing_states(mut self) -> Self {
        self.store_states = true;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub ode: OdeStats,
    pub positivity_checks: usize,
    /// Coefficients kept in the eigen-phase sums (unitary branch).
    pub retained_modes: usize,
}

#[derive(Debug, Clone)]
pub enum StoredStates {
    None,
    Pure(Vec<StateVector>),
    Mixed(Vec<DensityMatrix>),
}

/// Samples of one evolution.
#[derive(Debug, Clone)]
pub struct EvolutionRecord {
    pub times: Vec<f64>,
    /// ⟨H_B⟩(t).
    pub battery_energy: Vec<f64>,
    /// ‖ψ‖² (unitary) or Tr ρ (Lindblad).
    pub norms: Vec<f64>,
    /// Population of the two highest photon levels.
    pub leakage: Vec<f64>,
    pub leakage_exceeded: bool,
    pub states: StoredStates,
    pub params: SystemParams,
    pub bath: BathParams,
    pub stats: SolverStats,
}

impl EvolutionRecord {
    pub fn max_norm_drift(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max((n - 1.0).abs()))
    }

    pub fn max_leakage(&self) -> f64 {
        self.leakage.iter().copied().fold(0.0, f64::max)
    }

    pub fn pure_states(&self) -> Option<&[StateVector]> {
        match &self.states {
            StoredStates::Pure(v) => Some(v),
            _ => None,
        }
    }

    pub fn mixed_states(&self) -> Option<&[DensityMatrix]> {
        match &self.states {
            StoredStates::Mixed(v) => Some(v),
            _ => None,
        }
    }
}

/// Diagonal-observable bookkeeping shared by both branches.
struct Probe {
    hb: Vec<f64>,
    top: Vec<bool>,
}

impl Probe {
    fn new(p: &SystemParams) -> Self {
        let hb_op = battery_hamiltonian(p);
        let d = hb_op.dim();
        let np = p.n_max + 1;
        Self {
            hb: (0..d).map(|i| hb_op.get(i, i).re).collect(),
            top: (0..d).map(|i| i % np + 2 > p.n_max).collect(),
        }
    }

    /// (⟨H_B⟩, norm, leakage) from diagonal populations.
    fn measure(&self, pops: impl Iterator<Item = f64>) -> (f64, f64, f64) {
        let (mut e, mut n, mut l) = (0.0, 0.0, 0.0);
        for (i, pop) in pops.enumerate() {
            e += self.hb[i] * pop;
            n += pop;
            if self.top[i] {
                l += pop;
            }
        }
        (e, n, l)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times[0] != 0.0 {
        return Err(Error::Precondition(
            "sample times must start at t = 0".into(),
        ));
    }
    if !times.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Precondition(
            "sample times must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Uniform sample times 0, Δt, …, up to and including `t_end` when it lies on
/// the grid.
pub fn time_grid(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt + 1e-9).floor() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

/// Splits sample times at τ: samples with t ≤ τ use the coupled Hamiltonian.
fn split_at_tau(times: &[f64], tau: Option<f64>) -> usize {
    match tau {
        Some(tau) => times.partition_point(|&t| t <= tau),
        None => times.len(),
    }
}

/// Closed-system evolution from `psi0`, exact per constant-H segment.
pub fn evolve_unitary(
    p: &SystemParams,
    psi0: &StateVector,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<EvolutionRecord> {
    p.validate()?;
    check_times(times)?;
    if psi0.dims() != p.dims().as_slice() {
        return Err(Error::DimensionMismatch {
            expected: p.dims(),
            found: psi0.dims().to_vec(),
        });
    }
    let probe = Probe::new(p);
    let n_on = split_at_tau(times, p.tau);
    let mut rec = EvolutionRecord {
        times: times.to_vec(),
        battery_energy: Vec::with_capacity(times.len()),
        norms: Vec::with_capacity(times.len()),
        leakage: Vec::with_capacity(times.len()),
        leakage_exceeded: false,
        states: StoredStates::None,
        params: *p,
        bath: BathParams::closed(),
        stats: SolverStats::default(),
    };
    let mut stored = Vec::new();
    let dims = p.dims();

    let mut visit = |_: usize, _: f64, psi: &[C64]| -> Result<()> {
        let (e, n, l) = probe.measure(psi.iter().map(|z| z.norm_sqr()));
        rec.battery_energy.push(e);
        rec.norms.push(n);
        rec.leakage.push(l);
        if opts.store_states {
            stored.push(StateVector::new(
                DVector::from_column_slice(psi),
                dims.clone(),
            )?);
        }
        Ok(())
    };

    let on = PhasePropagator::new(&build_hamiltonian(p, true), psi0.vector())?;
    let mut retained = on.retained();
    on.for_each_state(&times[..n_on], &mut visit)?;
    if n_on < times.len() {
        let tau = p.tau.expect("split implies tau");
        let psi_tau = on.state(tau);
        let off = PhasePropagator::new(&build_hamiltonian(p, false), &psi_tau)?;
        retained = retained.max(off.retained());
        let shifted: Vec<f64> = times[n_on..].iter().map(|t| t - tau).collect();
        off.for_each_state(&shifted, &mut visit)?;
    }
    rec.stats.retained_modes = retained;
    rec.leakage_exceeded = rec.max_leakage() > LEAKAGE_LIMIT;
    if rec.leakage_exceeded {
        log::warn!(
            "photon truncation leakage {:.3e} exceeds {LEAKAGE_LIMIT:e}; increase n_max",
            rec.max_leakage()
        );
    }
    if opts.store_states {
        rec.states = StoredStates::Pure(stored);
    }
    Ok(rec)
}

fn to_matrix(flat: &[C64], n: usize) -> DMatrix<C64> {
    DMatrix::from_row_slice(n, n, flat)
}

/// Open-system evolution of `rho0` under the Lindblad equation. The decay
/// rates follow the instantaneous coupling, so they are re-evaluated at g = 0
/// after the switch-off.
pub fn evolve_lindblad(
    p: &SystemParams,
    b: &BathParams,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<EvolutionRecord> {
    p.validate()?;
    b.validate()?;
    check_times(times)?;
    if rho0.dims() != p.dims().as_slice() {
        return Err(Error::DimensionMismatch {
            expected: p.dims(),
            found: rho0.dims().to_vec(),
        });
    }
    let n = p.dim();
    let probe = Probe::new(p);
    let n_on = split_at_tau(times, p.tau);
    let t_last = *times.last().expect("non-empty");
    let stride = opts.positivity_stride.max(1);
    let dims = p.dims();

    let mut rec = EvolutionRecord {
        times: times.to_vec(),
        battery_energy: Vec::with_capacity(times.len()),
        norms: Vec::with_capacity(times.len()),
        leakage: Vec::with_capacity(times.len()),
        leakage_exceeded: false,
        states: StoredStates::None,
        params: *p,
        bath: *b,
        stats: SolverStats::default(),
    };
    let mut stored = Vec::new();
    let mut sample_index = 0usize;
    let total = times.len();

    let mut on_sample = |t: f64, rho: &[C64]| -> Result<()> {
        let (e, tr, l) = probe.measure((0..n).map(|i| rho[i * n + i].re));
        rec.battery_energy.push(e);
        rec.norms.push(tr);
        rec.leakage.push(l);
        let check = sample_index.is_multiple_of(stride) || sample_index + 1 == total;
        if check || opts.store_states {
            let dm = DensityMatrix::new(to_matrix(rho, n), dims.clone())?;
            if check {
                rec.stats.positivity_checks += 1;
                if !dm.eigenvalues_above(POSITIVITY_BOUND) {
                    return Err(Error::PositivityBreach {
                        t,
                        bound: -POSITIVITY_BOUND,
                    });
                }
            }
            if opts.store_states {
                stored.push(dm);
            }
        }
        sample_index += 1;
        Ok(())
    };

    // exact Hermitian symmetry of the start keeps every iterate Hermitian
    let m0 = rho0.matrix();
    let y0: Vec<C64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            (m0[(i, j)] + m0[(j, i)].conj()) * 0.5
        })
        .collect();
    let mut stats = OdeStats::default();

    let t_switch = match p.tau {
        Some(tau) if tau < t_last => tau,
        _ => t_last,
    };
    let mut rhs_on = LindbladRhs::new(&build_hamiltonian(p, true), &collapse_set_at(p, b, p.g));
    let y_tau = ode::integrate(
        |_, y, dy| rhs_on.eval(y, dy),
        0.0,
        t_switch,
        &y0,
        &times[..n_on],
        &opts.ode,
        &mut on_sample,
        &mut stats,
    )?;
    if n_on < times.len() {
        let mut rhs_off =
            LindbladRhs::new(&build_hamiltonian(p, false), &collapse_set_at(p, b, 0.0));
        let mut seg = OdeStats::default();
        ode::integrate(
            |_, y, dy| rhs_off.eval(y, dy),
            t_switch,
            t_last,
            &y_tau,
            &times[n_on..],
            &opts.ode,
            &mut on_sample,
            &mut seg,
        )?;
        stats.merge(&seg);
    }
    rec.stats.ode = stats;
    rec.leakage_exceeded = rec.max_leakage() > LEAKAGE_LIMIT;
    if rec.leakage_exceeded {
        log::warn!(
            "photon truncation leakage {:.3e} exceeds {LEAKAGE_LIMIT:e}; increase n_max",
            rec.max_leakage()
        );
    }
    if opts.store_states {
        rec.states = StoredStates::Mixed(stored);
    }
    Ok(rec)
}

/// E_B(t) = ⟨H_B⟩(t) − ⟨H_B⟩(0), with H_B built from `p`.
pub fn battery_energy_series(rec: &EvolutionRecord, p: &SystemParams) -> Vec<f64> {
    let hb: Operator = battery_hamiltonian(p);
    let raw: Vec<f64> = match &rec.states {
        StoredStates::Pure(v) if hb.dims() == rec.params.dims().as_slice() => v
            .iter()
            .map(|s| expectation(&hb, s).unwrap_or(f64::NAN))
            .collect(),
        StoredStates::Mixed(v) if hb.dims() == rec.params.dims().as_slice() => v
            .iter()
            .map(|s| expectation(&hb, s).unwrap_or(f64::NAN))
            .collect(),
        // H_B is linear in ω_B
        _ => {
            let scale = p.omega_b / rec.params.omega_b;
            rec.battery_energy.iter().map(|e| e * scale).collect()
        }
    };
    let e0 = raw.first().copied().unwrap_or(0.0);
    raw.iter().map(|e| e - e0).collect()
}
