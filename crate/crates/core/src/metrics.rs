//! Figures of merit: maximum stored energy, transfer time and charging power,
//! plus coupling sweeps and location of the power jump.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    battery_energy_series, evolve_lindblad, evolve_unitary, time_grid, EvolutionRecord,
    EvolveOptions,
};
use crate::model::{BathParams, SystemParams};
use crate::states::{assemble_initial_state, CavityInitState};
use crate::{Error, Result};

/// Two maxima closer than this in energy count as equal; the earlier wins.
pub const TIE_ENERGY: f64 = 1e-6;
/// A series whose range is below this carries no transfer.
pub const FLAT_RANGE: f64 = 1e-12;
/// Couplings below this use the long search window.
pub const WEAK_COUPLING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMetrics {
    pub g: f64,
    pub e_max: f64,
    pub t_max: f64,
    pub p_max: f64,
    pub dissipative: bool,
    pub search_window: f64,
    /// Transfer time and energy of the same point without dissipation;
    /// recorded for dissipative runs only.
    pub t_max_closed: Option<f64>,
    pub e_max_closed: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    pub dt: f64,
    /// Fixed search horizon; the coupling-dependent default when `None`.
    pub window: Option<f64>,
    pub evolve: EvolveOptions,
    /// Also evaluate the dissipationless transfer time for dissipative runs.
    pub record_closed: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            window: None,
            evolve: EvolveOptions::default(),
            record_closed: true,
        }
    }
}

impl MetricsOptions {
    pub fn with_window(mut self, window: f64) -> Self {
        self.window = Some(window);
        self
    }

    pub fn search_window(&self, g: f64) -> f64 {
        self.window.unwrap_or(default_window(g))
    }
}

/// 200/ω_B below g = 0.1, 50/ω_B otherwise.
pub fn default_window(g: f64) -> f64 {
    if g < WEAK_COUPLING {
        200.0
    } else {
        50.0
    }
}

/// Vertex of the parabola through three points (abscissae need not be
/// uniform). Falls back to the middle point when the points are collinear.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = ((y[2] - y[1]) / (x[2] - x[1]) - d1) / (x[2] - x[0]);
    if d2 >= 0.0 {
        return (x[1], y[1]);
    }
    // y = y0 + d1 (t − x0) + d2 (t − x0)(t − x1)
    let xv = 0.5 * (x[0] + x[1]) - d1 / (2.0 * d2);
    let xv = xv.clamp(x[0], x[2]);
    let yv = y[0] + d1 * (xv - x[0]) + d2 * (xv - x[0]) * (xv - x[1]);
    (xv, yv)
}

/// Global maximum of a sampled series, each local maximum refined by a
/// parabola. Among maxima within [`TIE_ENERGY`] of the best, the earliest is
/// returned.
pub fn find_transfer_max(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::Precondition(
            "series needs at least 3 samples with matching times".into(),
        ));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    if (hi - lo).is_nan() || hi - lo < FLAT_RANGE {
        return Err(Error::FlatSeries);
    }
    let n = values.len();
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    if values[0] > values[1] {
        candidates.push((times[0], values[0]));
    }
    for i in 1..n - 1 {
        if values[i] >= values[i - 1] && values[i] > values[i + 1] {
            candidates.push(parabola_vertex(
                [times[i - 1], times[i], times[i + 1]],
                [values[i - 1], values[i], values[i + 1]],
            ));
        }
    }
    if values[n - 1] >= values[n - 2] {
        candidates.push((times[n - 1], values[n - 1]));
    }
    let best = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = candidates
        .into_iter()
        .find(|c| c.1 >= best - TIE_ENERGY)
        .expect("at least one candidate reaches the best value");
    Ok(chosen)
}

fn check_cavity(p: &SystemParams, cavity: &CavityInitState) -> Result<()> {
    if cavity.n_max() != p.n_max {
        return Err(Error::DimensionMismatch {
            expected: p.dims(),
            found: vec![2, 2, cavity.n_max() + 1],
        });
    }
    Ok(())
}

/// Runs the closed or open evolution from the standard initial state.
pub fn evolve_from(
    p: &SystemParams,
    b: &BathParams,
    cavity: &CavityInitState,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<EvolutionRecord> {
    check_cavity(p, cavity)?;
    let psi0 = assemble_initial_state(cavity)?;
    if b.is_dissipative() {
        evolve_lindblad(p, b, &psi0.projector(), times, opts)
    } else {
        evolve_unitary(p, &psi0, times, opts)
    }
}

fn locate(
    p: &SystemParams,
    b: &BathParams,
    cavity: &CavityInitState,
    window: f64,
    opts: &MetricsOptions,
) -> Result<(f64, f64)> {
    let held = p.with_tau(None);
    let times = time_grid(window, opts.dt);
    let rec = evolve_from(&held, b, cavity, &times, &opts.evolve)?;
    let series = battery_energy_series(&rec, &held);
    find_transfer_max(&times, &series)
}

/// Transfer metrics at one parameter point, with the coupling held on over
/// the search window. Dissipative runs locate the maximum under dissipation
/// and also record the dissipationless values.
pub fn metrics_at(
    p: &SystemParams,
    b: &BathParams,
    cavity: &CavityInitState,
    opts: &MetricsOptions,
) -> Result<TransferMetrics> {
    let window = opts.search_window(p.g);
    let (t_max, e_max) = locate(p, b, cavity, window, opts)?;
    let dissipative = b.is_dissipative();
    let (t_max_closed, e_max_closed) = if dissipative && opts.record_closed {
        let (t, e) = locate(p, &BathParams::closed(), cavity, window, opts)?;
        (Some(t), Some(e))
    } else {
        (None, None)
    };
    Ok(TransferMetrics {
        g: p.g,
        e_max,
        t_max,
        p_max: e_max / t_max,
        dissipative,
        search_window: window,
        t_max_closed,
        e_max_closed,
    })
}

/// E_B(t) with the coupling switched off at `tau`, sampled on [0, t_end].
pub fn hold_and_store(
    p: &SystemParams,
    b: &BathParams,
    cavity: &CavityInitState,
    tau: f64,
    t_end: f64,
    opts: &MetricsOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let switched = p.with_tau(Some(tau));
    let times = time_grid(t_end, opts.dt);
    let rec = evolve_from(&switched, b, cavity, &times, &opts.evolve)?;
    let series = battery_energy_series(&rec, &switched);
    Ok((times, series))
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub g: f64,
    pub outcome: Result<TransferMetrics>,
}

/// Metrics for every coupling of an ascending grid, evaluated in parallel.
/// Failures are kept per point and do not stop the sweep.
pub fn sweep_g(
    p_template: &SystemParams,
    b: &BathParams,
    cavity: &CavityInitState,
    g_grid: &[f64],
    opts: &MetricsOptions,
) -> Result<Vec<SweepPoint>> {
    if !g_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Precondition(
            "g grid must be strictly ascending".into(),
        ));
    }
    Ok(g_grid
        .par_iter()
        .map(|&g| SweepPoint {
            g,
            outcome: metrics_at(&p_template.with_g(g), b, cavity, opts),
        })
        .collect())
}

/// Successful points of a sweep, in grid order.
pub fn successes(points: &[SweepPoint]) -> Vec<TransferMetrics> {
    points
        .iter()
        .filter_map(|p| p.outcome.clone().ok())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpLocation {
    pub g_jump: f64,
    /// Final bracket; the jump lies inside.
    pub bracket: (f64, f64),
    pub p_below: f64,
    pub p_above: f64,
    pub refinements: usize,
}

/// Largest bracket width accepted by the bisection.
pub const JUMP_RESOLUTION: f64 = 0.01;
/// A jump must exceed this multiple of the median step.
pub const JUMP_FACTOR: f64 = 3.0;

/// Jump of p_max along a sweep, bisected with `evaluate` until the bracket is
/// at most [`JUMP_RESOLUTION`] wide. The midpoint of the bracket is returned.
pub fn locate_jump_with<F>(sweep: &[TransferMetrics], mut evaluate: F) -> Result<JumpLocation>
where
    F: FnMut(f64) -> Result<f64>,
{
    if sweep.len() < 10 {
        return Err(Error::Precondition(format!(
            "jump location needs at least 10 sweep points, got {}",
            sweep.len()
        )));
    }
    let steps: Vec<f64> = sweep.windows(2).map(|w| w[1].p_max - w[0].p_max).collect();
    let mut mags: Vec<f64> = steps.iter().map(|s| s.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let mid = mags.len() / 2;
    let median = if mags.len().is_multiple_of(2) {
        0.5 * (mags[mid - 1] + mags[mid])
    } else {
        mags[mid]
    };
    let (i, &largest) = steps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty");
    if largest.is_nan() || largest <= JUMP_FACTOR * median {
        return Err(Error::NoJumpFound);
    }
    let (mut lo, mut hi) = (sweep[i].g, sweep[i + 1].g);
    let (mut p_lo, mut p_hi) = (sweep[i].p_max, sweep[i + 1].p_max);
    let mut refinements = 0;
    while hi - lo > JUMP_RESOLUTION + 1e-12 {
        let g = 0.5 * (lo + hi);
        let pm = evaluate(g)?;
        refinements += 1;
        // keep the half that carries the larger increase
        if pm - p_lo >= p_hi - pm {
            hi = g;
            p_hi = pm;
        } else {
            lo = g;
            p_lo = pm;
        }
    }
    Ok(JumpLocation {
        g_jump: 0.5 * (lo + hi),
        bracket: (lo, hi),
        p_below: p_lo,
        p_above: p_hi,
        refinements,
    })
}

/// [`locate_jump_with`] refining through [`metrics_at`].
pub fn jump_locator(
    sweep: &[TransferMetrics],
    p: &SystemParams,
    b: &BathParams,
    cavity: &CavityInitState,
    opts: &MetricsOptions,
) -> Result<JumpLocation> {
    locate_jump_with(sweep, |g| {
        metrics_at(&p.with_g(g), b, cavity, opts).map(|m| m.p_max)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent_amplitudes, fock_amplitudes};

    fn metric(g: f64, p_max: f64) -> TransferMetrics {
        TransferMetrics {
            g,
            e_max: p_max,
            t_max: 1.0,
            p_max,
            dissipative: false,
            search_window: 50.0,
            t_max_closed: None,
            e_max_closed: None,
        }
    }

    #[test]
    fn single_peak_is_refined() {
        // sin²-shaped peak at t = 1.234, sampled at 0.01
        let times: Vec<f64> = (0..300).map(|i| i as f64 * 0.01).collect();
        let vals: Vec<f64> = times
            .iter()
            .map(|t| 0.8 * (1.0 - (t - 1.234) * (t - 1.234)))
            .collect();
        let (t, e) = find_transfer_max(&times, &vals).unwrap();
        assert!((t - 1.234).abs() < 1e-9);
        assert!((e - 0.8).abs() < 1e-12);
    }

    #[test]
    fn equal_maxima_pick_the_earlier() {
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        // two bumps of identical height at t = 2 and t = 7
        let vals: Vec<f64> = times
            .iter()
            .map(|t| (-(t - 2.0) * (t - 2.0) * 4.0).exp() + (-(t - 7.0) * (t - 7.0) * 4.0).exp())
            .collect();
        let (t, _) = find_transfer_max(&times, &vals).unwrap();
        assert!((t - 2.0).abs() < 1e-3);
        // the later bump higher by more than the tie tolerance wins
        let vals2: Vec<f64> = times
            .iter()
            .map(|t| {
                (-(t - 2.0) * (t - 2.0) * 4.0).exp()
                    + 1.00001 * (-(t - 7.0) * (t - 7.0) * 4.0).exp()
            })
            .collect();
        let (t2, _) = find_transfer_max(&times, &vals2).unwrap();
        assert!((t2 - 7.0).abs() < 1e-3);
    }

    #[test]
    fn flat_series_is_rejected() {
        let times = [0.0, 0.01, 0.02, 0.03];
        assert_eq!(find_transfer_max(&times, &[0.0; 4]), Err(Error::FlatSeries));
    }

    #[test]
    fn zero_coupling_is_flat() {
        let p = SystemParams::resonant(0.0, 10);
        let cav = fock_amplitudes(1, 10).unwrap();
        let opts = MetricsOptions::default().with_window(5.0);
        assert_eq!(
            metrics_at(&p, &BathParams::closed(), &cav, &opts),
            Err(Error::FlatSeries)
        );
    }

    #[test]
    fn stored_consistency_and_single_point_sweep() {
        let p = SystemParams::resonant(0.2, 20);
        let cav = coherent_amplitudes(1.0, 20).unwrap();
        let opts = MetricsOptions::default().with_window(20.0);
        let m = metrics_at(&p, &BathParams::closed(), &cav, &opts).unwrap();
        assert_eq!(m.p_max, m.e_max / m.t_max);
        assert!(m.e_max <= 1.0 + 1e-6 && m.t_max > 0.0);
        let sweep = sweep_g(&p, &BathParams::closed(), &cav, &[0.2], &opts).unwrap();
        assert_eq!(sweep[0].outcome, Ok(m));
    }

    #[test]
    fn smooth_curve_has_no_jump() {
        let sweep: Vec<TransferMetrics> = (0..20)
            .map(|i| metric(0.02 * i as f64, 0.1 + 0.01 * i as f64))
            .collect();
        assert_eq!(
            locate_jump_with(&sweep, |_| Ok(0.0)),
            Err(Error::NoJumpFound)
        );
    }

    #[test]
    fn synthetic_step_is_bisected() {
        let step = |g: f64| {
            if g < 0.3371 {
                0.4 + 0.1 * g
            } else {
                1.2 + 0.5 * g
            }
        };
        let sweep: Vec<TransferMetrics> = (0..=20)
            .map(|i| {
                let g = 0.025 * i as f64;
                metric(g, step(g))
            })
            .collect();
        let j = locate_jump_with(&sweep, |g| Ok(step(g))).unwrap();
        assert!((j.g_jump - 0.3371).abs() <= 0.005);
        assert!(j.bracket.1 - j.bracket.0 <= 0.01 + 1e-12);
        assert!(j.p_below < 0.5 && j.p_above > 1.2);
    }

    #[test]
    fn too_few_points_is_a_precondition_error() {
        let sweep: Vec<TransferMetrics> = (0..5).map(|i| metric(i as f64, i as f64)).collect();
        assert!(matches!(
            locate_jump_with(&sweep, |_| Ok(0.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn default_windows() {
        assert_eq!(default_window(0.05), 200.0);
        assert_eq!(default_window(0.1), 50.0);
    }
}
