//! Eigenvalue sweeps over the coupling g, diabatic level tracking, crossing
//! detection and crossing relevance for a given initial state.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{hermitian_eig, HermitianEigen, StateVector};
use crate::model::{build_hamiltonian, SystemParams};
use crate::states::{assemble_initial_state, CavityInitState};
use crate::{Error, Result, C64};

/// Tunables of a spectrum sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Levels retained for reporting and crossing detection.
    pub k: usize,
    /// Extra levels tracked above `k` so that tracks entering from above are
    /// matched against their true predecessors.
    pub buffer: usize,
    /// Points in the refinement of each candidate interval, endpoints included.
    pub refine_points: usize,
    /// Largest gap still declared an exact crossing.
    pub gap_threshold: f64,
    /// Smallest acceptable |⟨φ(g_i)|φ(g_{i+1})⟩| along a retained track.
    pub overlap_floor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            k: 12,
            buffer: 8,
            refine_points: 16,
            gap_threshold: 1e-3,
            overlap_floor: 0.8,
        }
    }
}

/// Uniform grid of `points` values over `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + h * i as f64).collect()
}

/// Default coupling grid: 201 points over [0, 0.5].
pub fn default_grid() -> Vec<f64> {
    uniform_grid(0.0, 0.5, 201)
}

/// Exact two-level crossing found along a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub g_star: f64,
    pub track_pair: (usize, usize),
    /// Ascending-order indices of the two degenerate levels at `g_star`.
    pub ranks: (usize, usize),
    pub energy: f64,
    pub min_gap: f64,
    /// Σ|c_k(0)|² over the two levels; 0 until ranked.
    pub weight: f64,
}

/// Eigenvectors kept at one grid point, columns in ascending order.
#[derive(Debug, Clone)]
struct Window {
    values: Vec<f64>,
    vectors: DMatrix<C64>,
    labels: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub params: SystemParams,
    pub options: SweepOptions,
    pub g_grid: Vec<f64>,
    /// First `k` ascending eigenvalues per grid point.
    pub levels: Vec<Vec<f64>>,
    /// Diabatic label of each of the first `k` ascending levels per grid point.
    pub tracks: Vec<Vec<usize>>,
    pub crossings: Vec<CrossingEvent>,
    #[serde(skip)]
    windows: Vec<Window>,
}

impl SpectrumResult {
    /// Energy of a diabatic track at each grid point where it is among the
    /// first `k` levels.
    pub fn track_energies(&self, label: usize) -> Vec<Option<f64>> {
        self.tracks
            .iter()
            .zip(&self.levels)
            .map(|(t, lv)| t.iter().position(|&l| l == label).map(|r| lv[r]))
            .collect()
    }
}

/// Expansion of an initial state in the eigenbasis of H(g).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeDecomposition {
    pub g: f64,
    pub energies: Vec<f64>,
    pub coefficients: Vec<C64>,
    pub weights: Vec<f64>,
}

impl AmplitudeDecomposition {
    pub fn from_eigen(g: f64, eig: &HermitianEigen, psi: &StateVector) -> Self {
        let coeffs = eig.vectors.ad_mul(psi.vector());
        let coefficients: Vec<C64> = coeffs.iter().copied().collect();
        let weights = coefficients.iter().map(|c| c.norm_sqr()).collect();
        Self {
            g,
            energies: eig.values.clone(),
            coefficients,
            weights,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Eigenvalues closer than this are treated as one degenerate cluster.
const CLUSTER_TOL: f64 = 1e-8;
/// Overlap below which a buffered level is considered a new track.
const NEW_TRACK_OVERLAP: f64 = 0.5;

fn eig_at(p: &SystemParams, g: f64) -> Result<HermitianEigen> {
    hermitian_eig(&build_hamiltonian(&p.with_g(g), true))
}

/// Number of ascending levels kept: `want`, extended so a degenerate cluster
/// is never split, capped at the dimension.
fn window_size(values: &[f64], want: usize) -> usize {
    let mut w = want.min(values.len());
    while w < values.len() && w > 0 && (values[w] - values[w - 1]).abs() < CLUSTER_TOL {
        w += 1;
    }
    w
}

fn clusters(values: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[i - 1]).abs() >= CLUSTER_TOL {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn abs_overlaps(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<f64> {
    a.ad_mul(b).map(|z| z.norm())
}

/// Rotates the columns of `target` inside each degenerate cluster so that
/// they line up with the columns of `reference` that live mostly in that
/// cluster. Degenerate eigenvectors are otherwise an arbitrary basis.
fn align_clusters(target_vals: &[f64], target: &mut DMatrix<C64>, reference: &DMatrix<C64>) {
    for cl in clusters(target_vals) {
        let m = cl.len();
        if m < 2 {
            continue;
        }
        let block = target.columns(cl.start, m).into_owned();
        let proj = block.ad_mul(reference); // m × R
        let mut weights: Vec<(usize, f64)> = (0..reference.ncols())
            .map(|j| (j, proj.column(j).norm_squared()))
            .collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let take = m.min(weights.len());
        let mut sel: Vec<usize> = weights[..take].iter().map(|w| w.0).collect();
        sel.sort_unstable();
        let a = DMatrix::from_fn(m, take, |r, c| proj[(r, sel[c])]);
        let svd = a.svd(true, true);
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
            continue;
        };
        // polar factor U Vᴴ: closest isometry to the projected references
        let coeffs = complete_basis(&u * &v_t);
        let rotated = &block * &coeffs;
        target.columns_mut(cl.start, m).copy_from(&rotated);
    }
}

/// Extends an m×t matrix with orthonormal columns to an m×m unitary by
/// Gram–Schmidt against the standard basis.
fn complete_basis(partial: DMatrix<C64>) -> DMatrix<C64> {
    let (m, t) = partial.shape();
    if t >= m {
        return partial;
    }
    let mut cols: Vec<DVector<C64>> = (0..t).map(|c| partial.column(c).into_owned()).collect();
    for e in 0..m {
        if cols.len() == m {
            break;
        }
        let mut v = DVector::<C64>::zeros(m);
        v[e] = C64::new(1.0, 0.0);
        for q in &cols {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / C64::new(norm, 0.0));
        }
    }
    DMatrix::from_columns(&cols)
}

/// One-to-one greedy matching of previous columns to current columns by
/// descending |overlap|. Returns, per current column, the matched previous
/// column and the overlap.
fn greedy_match(overlaps: &DMatrix<f64>) -> Vec<Option<(usize, f64)>> {
    let (np, nc) = overlaps.shape();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(np * nc);
    for i in 0..np {
        for j in 0..nc {
            pairs.push((i, j, overlaps[(i, j)]));
        }
    }
    pairs.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_prev = vec![false; np];
    let mut out = vec![None; nc];
    let mut left = np.min(nc);
    for (i, j, o) in pairs {
        if left == 0 {
            break;
        }
        if used_prev[i] || out[j].is_some() {
            continue;
        }
        used_prev[i] = true;
        out[j] = Some((i, o));
        left -= 1;
    }
    out
}

/// Aligns degenerate clusters on both sides, then matches.
fn align_and_match(
    prev_vals: &[f64],
    prev: &mut DMatrix<C64>,
    cur_vals: &[f64],
    cur: &mut DMatrix<C64>,
) -> Vec<Option<(usize, f64)>> {
    align_clusters(prev_vals, prev, cur);
    align_clusters(cur_vals, cur, prev);
    greedy_match(&abs_overlaps(prev, cur))
}

fn window_from(eig: &HermitianEigen, want: usize) -> (Vec<f64>, DMatrix<C64>) {
    let w = window_size(&eig.values, want);
    (
        eig.values[..w].to_vec(),
        eig.vectors.columns(0, w).into_owned(),
    )
}

fn check_grid(g_grid: &[f64]) -> Result<()> {
    if g_grid.len() < 3 {
        return Err(Error::Precondition(format!(
            "a spectrum sweep needs at least 3 grid points, got {}",
            g_grid.len()
        )));
    }
    let ascending = g_grid.windows(2).all(|w| w[1] > w[0]);
    let descending = g_grid.windows(2).all(|w| w[1] < w[0]);
    if !(ascending || descending) {
        return Err(Error::Precondition(
            "g grid must be strictly monotone".into(),
        ));
    }
    if g_grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::Precondition(
            "g grid values must be finite and >= 0".into(),
        ));
    }
    Ok(())
}

/// Eigenvalues over the grid with diabatic tracks, using `k` reported levels
/// and default options otherwise.
pub fn eigen_sweep(p: &SystemParams, g_grid: &[f64], k: usize) -> Result<SpectrumResult> {
    eigen_sweep_with(
        p,
        g_grid,
        &SweepOptions {
            k,
            ..SweepOptions::default()
        },
    )
}

/// Eigenvalues over a strictly monotone grid, tracked by eigenvector overlap.
/// Tracks are seeded by ascending order at the first grid point.
pub fn eigen_sweep_with(
    p: &SystemParams,
    g_grid: &[f64],
    opts: &SweepOptions,
) -> Result<SpectrumResult> {
    check_grid(g_grid)?;
    p.validate()?;
    let k = opts.k.min(p.dim());
    let want = k + opts.buffer;
    let raw: Vec<(Vec<f64>, DMatrix<C64>)> = g_grid
        .par_iter()
        .map(|&g| eig_at(p, g).map(|e| window_from(&e, want)))
        .collect::<Result<_>>()?;

    let mut windows: Vec<Window> = Vec::with_capacity(raw.len());
    let mut next_label = 0usize;
    for (i, (values, mut vectors)) in raw.into_iter().enumerate() {
        let labels = if i == 0 {
            let l: Vec<usize> = (0..values.len()).collect();
            next_label = values.len();
            l
        } else {
            let prev_win = windows.last_mut().expect("i > 0");
            let matches = align_and_match(
                &prev_win.values,
                &mut prev_win.vectors,
                &values,
                &mut vectors,
            );
            let mut labels = Vec::with_capacity(values.len());
            for (r, m) in matches.iter().enumerate() {
                match *m {
                    Some((pi, o)) => {
                        if (r < k || pi < k) && o < opts.overlap_floor {
                            return Err(Error::TrackingAmbiguity {
                                g: g_grid[i],
                                overlap: o,
                            });
                        }
                        if o >= NEW_TRACK_OVERLAP {
                            labels.push(prev_win.labels[pi]);
                        } else {
                            labels.push(next_label);
                            next_label += 1;
                        }
                    }
                    None => {
                        labels.push(next_label);
                        next_label += 1;
                    }
                }
            }
            labels
        };
        windows.push(Window {
            values,
            vectors,
            labels,
        });
    }

    let levels = windows.iter().map(|w| w.values[..k].to_vec()).collect();
    let tracks = windows.iter().map(|w| w.labels[..k].to_vec()).collect();
    Ok(SpectrumResult {
        params: *p,
        options: SweepOptions { k, ..*opts },
        g_grid: g_grid.to_vec(),
        levels,
        tracks,
        crossings: Vec::new(),
        windows,
    })
}

/// Signed diabatic gap samples of a refined interval.
struct Refinement {
    g: Vec<f64>,
    ea: Vec<f64>,
    eb: Vec<f64>,
    last_vectors: Vec<DMatrix<C64>>,
}

/// Follows the two tracked vectors through `points` evenly spaced couplings
/// from `g0` to `g1` (endpoints included).
fn mini_track(
    p: &SystemParams,
    g0: f64,
    g1: f64,
    start_vals: [f64; 2],
    start: DMatrix<C64>,
    points: usize,
    want: usize,
) -> Result<Refinement> {
    let gs = uniform_grid(g0, g1, points.max(2));
    let mut out = Refinement {
        g: vec![g0],
        ea: vec![start_vals[0]],
        eb: vec![start_vals[1]],
        last_vectors: vec![start.clone()],
    };
    let mut tracked = start;
    let mut tracked_vals = start_vals.to_vec();
    for &g in &gs[1..] {
        let (vals, mut vecs) = window_from(&eig_at(p, g)?, want);
        let mut prev = tracked.clone();
        let matches = align_and_match(&tracked_vals, &mut prev, &vals, &mut vecs);
        let mut found = [None, None];
        for (j, m) in matches.iter().enumerate() {
            if let Some((pi, _)) = m {
                found[*pi] = Some(j);
            }
        }
        let (Some(ja), Some(jb)) = (found[0], found[1]) else {
            return Err(Error::TrackingAmbiguity { g, overlap: 0.0 });
        };
        tracked = DMatrix::from_fn(vecs.nrows(), 2, |r, c| {
            vecs[(r, if c == 0 { ja } else { jb })]
        });
        tracked_vals = vec![vals[ja], vals[jb]];
        out.g.push(g);
        out.ea.push(vals[ja]);
        out.eb.push(vals[jb]);
        out.last_vectors.push(tracked.clone());
    }
    Ok(out)
}

/// Root of the quadratic through three points that lies in `[lo, hi]`,
/// falling back to the secant root of the bracketing pair.
fn quadratic_root(xs: [f64; 3], ys: [f64; 3], lo: f64, hi: f64, bracket: (usize, usize)) -> f64 {
    let (x0, x1, x2) = (xs[0], xs[1], xs[2]);
    let (y0, y1, y2) = (ys[0], ys[1], ys[2]);
    // Newton form y = y0 + d1 (x − x0) + d2 (x − x0)(x − x1)
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = ((y2 - y1) / (x2 - x1) - d1) / (x2 - x0);
    // expand to a x² + b x + c
    let a = d2;
    let b = d1 - d2 * (x0 + x1);
    let c = y0 - d1 * x0 + d2 * x0 * x1;
    let (xl, xh) = (lo.min(hi), lo.max(hi));
    let secant = {
        let (i, j) = bracket;
        xs[i] - ys[i] * (xs[j] - xs[i]) / (ys[j] - ys[i])
    };
    if a.abs() < 1e-14 * (b.abs() + c.abs()).max(1e-300) {
        return secant;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return secant;
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = -0.5 * (b + b.signum() * sq);
    let mut roots = vec![];
    if q != 0.0 {
        roots.push(q / a);
        roots.push(c / q);
    } else {
        roots.push(-b / (2.0 * a));
    }
    roots
        .into_iter()
        .filter(|r| *r >= xl && *r <= xh)
        .min_by(|r, s| (r - secant).abs().total_cmp(&(s - secant).abs()))
        .unwrap_or(secant)
}

fn refine_candidate(
    s: &SpectrumResult,
    i: usize,
    la: usize,
    lb: usize,
) -> Result<Option<CrossingEvent>> {
    let p = &s.params;
    let opts = &s.options;
    let want = opts.k + opts.buffer;
    let w0 = &s.windows[i];
    let ca = w0
        .labels
        .iter()
        .position(|&l| l == la)
        .expect("label in window");
    let cb = w0
        .labels
        .iter()
        .position(|&l| l == lb)
        .expect("label in window");
    let start = DMatrix::from_fn(w0.vectors.nrows(), 2, |r, c| {
        w0.vectors[(r, if c == 0 { ca } else { cb })]
    });
    let (g0, g1) = (s.g_grid[i], s.g_grid[i + 1]);
    let refined = mini_track(
        p,
        g0,
        g1,
        [w0.values[ca], w0.values[cb]],
        start,
        opts.refine_points,
        want,
    )?;
    let d: Vec<f64> = refined
        .ea
        .iter()
        .zip(&refined.eb)
        .map(|(a, b)| a - b)
        .collect();
    let Some(j) = (1..d.len()).find(|&j| d[j] == 0.0 || d[j].signum() != d[j - 1].signum()) else {
        log::debug!("rank exchange of tracks {la},{lb} near g = {g0} not confirmed on refinement");
        return Ok(None);
    };
    let g_star = if d[j] == 0.0 {
        refined.g[j]
    } else {
        // third point: the neighbour on the side with the smaller |gap|
        let (idx, bracket) = if j + 1 < d.len() && (j < 2 || d[j + 1].abs() <= d[j - 2].abs()) {
            ([j - 1, j, j + 1], (0, 1))
        } else if j >= 2 {
            ([j - 2, j - 1, j], (1, 2))
        } else {
            ([j - 1, j, j], (0, 1))
        };
        if idx[1] == idx[2] {
            let (x0, x1) = (refined.g[j - 1], refined.g[j]);
            x0 - d[j - 1] * (x1 - x0) / (d[j] - d[j - 1])
        } else {
            quadratic_root(
                [refined.g[idx[0]], refined.g[idx[1]], refined.g[idx[2]]],
                [d[idx[0]], d[idx[1]], d[idx[2]]],
                refined.g[j - 1],
                refined.g[j],
                bracket,
            )
        }
    };
    let (glo, ghi) = (
        s.g_grid.first().copied().unwrap_or(0.0),
        s.g_grid.last().copied().unwrap_or(0.0),
    );
    let (glo, ghi) = (glo.min(ghi), glo.max(ghi));
    if !(g_star > glo && g_star < ghi) {
        return Ok(None);
    }

    // energy of the crossing from linear interpolation of track a
    let t = (g_star - refined.g[j - 1]) / (refined.g[j] - refined.g[j - 1]);
    let energy = refined.ea[j - 1] + t * (refined.ea[j] - refined.ea[j - 1]);
    let eig = eig_at(p, g_star)?;
    let mut nearest: Vec<usize> = (0..eig.values.len()).collect();
    nearest.sort_by(|&x, &y| {
        (eig.values[x] - energy)
            .abs()
            .total_cmp(&(eig.values[y] - energy).abs())
            .then(x.cmp(&y))
    });
    let (r1, r2) = (nearest[0].min(nearest[1]), nearest[0].max(nearest[1]));
    let gap_at_star = (eig.values[r2] - eig.values[r1]).abs();
    let sampled = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let min_gap = gap_at_star.min(sampled);
    if min_gap >= opts.gap_threshold {
        return Ok(None);
    }
    Ok(Some(CrossingEvent {
        g_star,
        track_pair: (la.min(lb), la.max(lb)),
        ranks: (r1, r2),
        energy,
        min_gap,
        weight: 0.0,
    }))
}

/// Crossings between retained tracks: pairs that exchange ascending rank
/// between consecutive grid points, confirmed on a refined sub-grid, with
/// `g_star` the root of the quadratic interpolant of the signed gap.
pub fn detect_crossings(s: &SpectrumResult) -> Result<Vec<CrossingEvent>> {
    if s.windows.len() != s.g_grid.len() {
        return Err(Error::Precondition(
            "spectrum result carries no eigenvectors; rerun eigen_sweep".into(),
        ));
    }
    let mut candidates = Vec::new();
    for i in 0..s.g_grid.len() - 1 {
        let (t0, t1) = (&s.tracks[i], &s.tracks[i + 1]);
        for a in 0..t0.len() {
            for b in a + 1..t0.len() {
                let (la, lb) = (t0[a], t0[b]);
                let (Some(ra), Some(rb)) = (
                    t1.iter().position(|&l| l == la),
                    t1.iter().position(|&l| l == lb),
                ) else {
                    continue;
                };
                if rb < ra {
                    candidates.push((i, la, lb));
                }
            }
        }
    }
    let results: Vec<Result<Option<CrossingEvent>>> = candidates
        .par_iter()
        .map(|&(i, la, lb)| refine_candidate(s, i, la, lb))
        .collect();
    let mut events = Vec::new();
    for r in results {
        if let Some(e) = r? {
            events.push(e);
        }
    }
    events.sort_by(|a, b| a.g_star.total_cmp(&b.g_star).then(a.ranks.cmp(&b.ranks)));
    Ok(events)
}

/// c_k(0) = ⟨φ_k|ψ(0)⟩ over the full eigenbasis of H(g) with coupling on.
pub fn amplitude_decomposition(
    p: &SystemParams,
    cavity: &CavityInitState,
    g: f64,
) -> Result<AmplitudeDecomposition> {
    let psi = assemble_initial_state(cavity)?;
    if psi.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dims(),
            found: psi.dims().to_vec(),
        });
    }
    let eig = eig_at(p, g)?;
    Ok(AmplitudeDecomposition::from_eigen(g, &eig, &psi))
}

/// Ties in weight closer than this are broken by the smaller `g_star`.
pub const WEIGHT_TIE: f64 = 1e-9;

/// Attaches Σ|c_k(0)|² over each event's two levels, using the decomposition
/// at the same index, and sorts by descending weight.
pub fn rank_crossings(
    events: Vec<CrossingEvent>,
    decomps: &[AmplitudeDecomposition],
) -> Result<Vec<CrossingEvent>> {
    if events.len() != decomps.len() {
        return Err(Error::Precondition(format!(
            "{} events but {} decompositions",
            events.len(),
            decomps.len()
        )));
    }
    let mut ranked: Vec<CrossingEvent> = events
        .into_iter()
        .zip(decomps)
        .map(|(mut e, d)| {
            e.weight = d.weights[e.ranks.0] + d.weights[e.ranks.1];
            e
        })
        .collect();
    ranked.sort_by(|a, b| {
        if (a.weight - b.weight).abs() <= WEIGHT_TIE {
            a.g_star.total_cmp(&b.g_star)
        } else {
            b.weight.total_cmp(&a.weight)
        }
    });
    Ok(ranked)
}

/// Sweep, crossing detection and ranking against the given cavity state.
pub fn analyze_spectrum(
    p: &SystemParams,
    cavity: &CavityInitState,
    g_grid: &[f64],
    opts: &SweepOptions,
) -> Result<SpectrumResult> {
    let mut s = eigen_sweep_with(p, g_grid, opts)?;
    let events = detect_crossings(&s)?;
    let decomps: Vec<AmplitudeDecomposition> = events
        .par_iter()
        .map(|e| amplitude_decomposition(p, cavity, e.g_star))
        .collect::<Result<_>>()?;
    s.crossings = rank_crossings(events, &decomps)?;
    Ok(s)
}

/// |ψ⟩ from a decomposition after time t: Σ c_k e^{−iE_k t} |φ_k⟩.
pub fn evolve_decomposition(eig: &HermitianEigen, coefficients: &[C64], t: f64) -> DVector<C64> {
    let phased = DVector::from_iterator(
        coefficients.len(),
        coefficients
            .iter()
            .zip(&eig.values)
            .map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
    );
    &eig.vectors * phased
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::fock_amplitudes;

    fn ladder(p: &SystemParams) -> Vec<f64> {
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
    fn needs_three_points() {
        let p = SystemParams::resonant(0.0, 4);
        assert!(matches!(
            eigen_sweep(&p, &[0.0, 0.1], 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn zero_coupling_levels_are_ladder() {
        let mut p = SystemParams::resonant(0.0, 6);
        p.omega_c = 0.8;
        p.omega_m = 0.8;
        let s = eigen_sweep(&p, &[0.0, 0.001, 0.002], 12).unwrap();
        for (a, b) in s.levels[0].iter().zip(ladder(&p)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn levels_are_permutation_of_tracks() {
        let p = SystemParams::resonant(0.0, 12);
        let s = eigen_sweep(&p, &uniform_grid(0.0, 0.5, 41), 8).unwrap();
        for t in &s.tracks {
            let mut sorted = t.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), t.len());
        }
    }

    #[test]
    fn no_crossings_without_degeneracy_window() {
        // ω_C ≠ ω_B ≠ ω_M incommensurate, tiny couplings: no level ordering changes
        let p = SystemParams {
            omega_c: 1.13,
            omega_b: 1.0,
            omega_m: 0.71,
            ..SystemParams::resonant(0.0, 8)
        };
        let s = eigen_sweep(&p, &uniform_grid(0.0, 0.01, 5), 6).unwrap();
        assert!(detect_crossings(&s).unwrap().is_empty());
    }

    #[test]
    fn quadratic_root_recovers_exact_parabola() {
        // y = (x − 0.3)(x + 1): root 0.3 in [0.2, 0.4]
        let f = |x: f64| (x - 0.3) * (x + 1.0);
        let xs = [0.2, 0.4, 0.5];
        let r = quadratic_root(xs, xs.map(f), 0.2, 0.4, (0, 1));
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn decomposition_is_complete_and_reconstructs_dynamics() {
        let p = SystemParams::resonant(0.3, 10);
        let cav = fock_amplitudes(1, 10).unwrap();
        let d = amplitude_decomposition(&p, &cav, 0.3).unwrap();
        assert!((d.total_weight() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rank_tie_prefers_smaller_g() {
        let ev = |g: f64, ranks| CrossingEvent {
            g_star: g,
            track_pair: (0, 1),
            ranks,
            energy: 0.0,
            min_gap: 0.0,
            weight: 0.0,
        };
        let d = AmplitudeDecomposition {
            g: 0.0,
            energies: vec![0.0; 4],
            coefficients: vec![C64::new(0.0, 0.0); 4],
            weights: vec![0.25, 0.25, 0.25, 0.25],
        };
        let ranked = rank_crossings(
            vec![ev(0.4, (2, 3)), ev(0.2, (0, 1))],
            &[d.clone(), d.clone()],
        )
        .unwrap();
        assert_eq!(ranked[0].g_star, 0.2);
        assert_eq!(ranked[0].weight, 0.5);
        let single = rank_crossings(vec![ev(0.3, (1, 2))], &[d]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].weight, 0.5);
    }

    #[test]
    fn small_resonant_sweep_finds_exact_crossings() {
        let p = SystemParams::resonant(0.0, 30);
        let s = eigen_sweep(&p, &uniform_grid(0.0, 0.5, 101), 8).unwrap();
        let events = detect_crossings(&s).unwrap();
        assert!(!events.is_empty());
        for e in &events {
            assert!(e.min_gap < 1e-3);
            assert!(e.g_star > 0.0 && e.g_star < 0.5);
            assert_eq!(e.ranks.1, e.ranks.0 + 1);
        }
    }
}
