//! Energy sweeps of the chain discriminant and band-edge location.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{
    discriminant_a, fixed_point_surface_gf, gf_cell, iterate_chain, Branch, ChainSpec,
};
use crate::error::{Error, Result};
use crate::greens::EnergyPoint;

/// Scan-level pole exclusion, in units of ω.
pub const SCAN_POLE_GUARD_REL: f64 = 1e-4;
/// Broadening used for the surface Green's function attached to each sample.
pub const PROBE_ETA: f64 = 1e-9;
/// Bisection stops once `|A| ≤ EDGE_TOL`.
pub const EDGE_TOL: f64 = 1e-8;
/// ...or once the bracket is narrower than this fraction of ω.
pub const EDGE_MIN_WIDTH_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub pole_guard_rel: f64,
    pub probe_eta: f64,
    pub edge_tol: f64,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            pole_guard_rel: SCAN_POLE_GUARD_REL,
            probe_eta: PROBE_ETA,
            edge_tol: EDGE_TOL,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub e: f64,
    pub a: f64,
    /// Surface Green's function at `e + i·probe_eta`.
    pub s: Complex64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub e_lo: f64,
    pub e_hi: f64,
}

impl Band {
    pub fn contains(&self, e: f64) -> bool {
        self.e_lo <= e && e <= self.e_hi
    }

    pub fn width(&self) -> f64 {
        self.e_hi - self.e_lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.e_lo + self.e_hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleExclusion {
    pub center: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketFailure {
    pub lo: f64,
    pub hi: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub samples: Vec<Sample>,
    pub bands: Vec<Band>,
    pub pole_exclusions: Vec<PoleExclusion>,
    pub failures: Vec<BracketFailure>,
}

impl BandReport {
    pub fn band_containing(&self, e: f64) -> Option<&Band> {
        self.bands.iter().find(|b| b.contains(e))
    }
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Levels of the base site lying within `[lo, hi]` widened by the guard.
pub fn pole_exclusions(spec: &ChainSpec, lo: f64, hi: f64, guard_rel: f64) -> Vec<PoleExclusion> {
    let site = &spec.base_site;
    let half_width = guard_rel * site.omega;
    let mut out = Vec::new();
    let mut n = 0usize;
    loop {
        let center = site.eigenenergy(n);
        if center - half_width > hi {
            break;
        }
        if center + half_width >= lo {
            out.push(PoleExclusion { center, half_width });
        }
        n += 1;
    }
    out
}

fn excluded(e: f64, poles: &[PoleExclusion]) -> bool {
    poles.iter().any(|p| (e - p.center).abs() < p.half_width)
}

/// Discriminant of the homogeneous chain at real energy `e`.
pub fn discriminant_at(spec: &ChainSpec, e: f64) -> Result<f64> {
    let cell = gf_cell(&spec.base_site, spec, EnergyPoint::real(e))?;
    discriminant_a(&cell, spec.k0)
}

fn sample_at(spec: &ChainSpec, e: f64, probe_eta: f64) -> Result<Sample> {
    let a = discriminant_at(spec, e)?;
    let cell = gf_cell(&spec.base_site, spec, EnergyPoint::new(e, probe_eta)?)?;
    let s = fixed_point_surface_gf(&cell, spec.k0)?;
    Ok(Sample {
        e,
        a,
        s: s.value,
        branch: s.branch,
    })
}

/// Uniform grid on `[e_min, e_max]` with points near the base site's levels dropped.
///
/// Overrides in `spec` are ignored; the sweep describes the ideal chain.
pub fn scan(
    spec: &ChainSpec,
    e_min: f64,
    e_max: f64,
    n_grid: usize,
    opts: &ScanOptions,
) -> Result<(Vec<Sample>, Vec<PoleExclusion>)> {
    if !(e_min.is_finite() && e_max.is_finite()) || e_min >= e_max {
        return Err(Error::InvalidParameter(format!(
            "need e_min < e_max, got [{e_min}, {e_max}]"
        )));
    }
    if n_grid < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_grid must be >= 2, got {n_grid}"
        )));
    }
    let poles = pole_exclusions(spec, e_min, e_max, opts.pole_guard_rel);
    let step = (e_max - e_min) / (n_grid - 1) as f64;
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| {
            if i + 1 == n_grid {
                e_max
            } else {
                e_min + step * i as f64
            }
        })
        .filter(|&e| !excluded(e, &poles))
        .collect();
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let samples = in_pool(opts.threads, || {
        grid.par_iter()
            .map(|&e| sample_at(spec, e, opts.probe_eta))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok((samples, poles))
}

/// Bisects `a` on `[lo, hi]` until `|a| ≤ tol` or the bracket is below `min_width`.
pub fn bisect_sign_change(
    a: &dyn Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    tol: f64,
    min_width: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut a_lo = a(lo)?;
    let a_hi = a(hi)?;
    if (a_lo < 0.0) == (a_hi < 0.0) {
        return Err(Error::LostBracket { lo, hi });
    }
    if a_lo.abs() <= tol {
        return Ok(lo);
    }
    if a_hi.abs() <= tol {
        return Ok(hi);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let a_mid = a(mid)?;
        if a_mid.abs() <= tol || hi - lo <= min_width || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if (a_mid < 0.0) == (a_lo < 0.0) {
            lo = mid;
            a_lo = a_mid;
        } else {
            hi = mid;
        }
    }
}

/// Locates the sign change of `a` between two samples, stepping around any
/// excluded pole in between. A change that happens across an exclusion is
/// placed at the pole, where `A` passes through infinity.
fn locate_edge(
    a: &dyn Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    poles: &[PoleExclusion],
    tol: f64,
    min_width: f64,
) -> Result<f64> {
    let inside: Vec<&PoleExclusion> = poles
        .iter()
        .filter(|p| p.center > lo && p.center < hi)
        .collect();
    if inside.is_empty() {
        return bisect_sign_change(a, lo, hi, tol, min_width);
    }
    // alternating segments and gaps: [lo, p1-], gap, [p1+, p2-], gap, ..., [pk+, hi]
    let mut seg_lo = lo;
    let mut val_lo = a(lo)?;
    for p in inside {
        let seg_hi = (p.center - p.half_width).max(seg_lo);
        let val_hi = a(seg_hi)?;
        if (val_lo < 0.0) != (val_hi < 0.0) {
            return bisect_sign_change(a, seg_lo, seg_hi, tol, min_width);
        }
        let next_lo = (p.center + p.half_width).min(hi);
        let val_next = a(next_lo)?;
        if (val_hi < 0.0) != (val_next < 0.0) {
            return Ok(p.center);
        }
        seg_lo = next_lo;
        val_lo = val_next;
    }
    bisect_sign_change(a, seg_lo, hi, tol, min_width)
}

/// Pairs the sign changes of `A` along `samples` into bands of negative `A`.
///
/// Runs of negative samples interrupted only by a pole exclusion stay one band.
pub fn find_band_edges(
    samples: &[Sample],
    a: &dyn Fn(f64) -> Result<f64>,
    poles: &[PoleExclusion],
    edge_tol: f64,
    min_width: f64,
) -> (Vec<Band>, Vec<BracketFailure>) {
    let mut bands = Vec::new();
    let mut failures = Vec::new();
    let Some(first) = samples.first() else {
        return (bands, failures);
    };
    let mut open = (first.a < 0.0).then_some(first.e);
    for pair in samples.windows(2) {
        let (p, q) = (&pair[0], &pair[1]);
        if (p.a < 0.0) == (q.a < 0.0) {
            continue;
        }
        let edge = match locate_edge(a, p.e, q.e, poles, edge_tol, min_width) {
            Ok(e) => e,
            Err(err) => {
                failures.push(BracketFailure {
                    lo: p.e,
                    hi: q.e,
                    error: err.to_string(),
                });
                0.5 * (p.e + q.e)
            }
        };
        if q.a < 0.0 {
            open = Some(edge);
        } else if let Some(lo) = open.take() {
            bands.push(Band {
                e_lo: lo,
                e_hi: edge,
            });
        }
    }
    if let (Some(lo), Some(last)) = (open, samples.last()) {
        bands.push(Band {
            e_lo: lo,
            e_hi: last.e,
        });
    }
    (bands, failures)
}

/// Full sweep: samples, band edges and exclusions.
pub fn band_report(
    spec: &ChainSpec,
    e_min: f64,
    e_max: f64,
    n_grid: usize,
    opts: &ScanOptions,
) -> Result<BandReport> {
    let (samples, poles) = scan(spec, e_min, e_max, n_grid, opts)?;
    let a = |e: f64| discriminant_at(spec, e);
    let min_width = EDGE_MIN_WIDTH_REL * spec.base_site.omega;
    let (bands, failures) = find_band_edges(&samples, &a, &poles, opts.edge_tol, min_width);
    Ok(BandReport {
        samples,
        bands,
        pole_exclusions: poles,
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpurityRow {
    pub e: f64,
    pub homogeneous: Vec<Complex64>,
    pub perturbed: Vec<Complex64>,
    /// Closure root of the ideal chain at the same broadened energy.
    pub fixed_point: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpurityTable {
    pub eta: f64,
    pub n_sites: usize,
    pub impurity_sites: Vec<usize>,
    pub rows: Vec<ImpurityRow>,
}

/// Finite-chain surface Green's functions `S_1..S_n` with and without the
/// overrides in `spec`, at each energy `e + iη`.
pub fn impurity_scan(
    spec: &ChainSpec,
    energies: &[f64],
    n_sites: usize,
    eta: f64,
    threads: Option<usize>,
) -> Result<ImpurityTable> {
    if eta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "impurity scan needs eta > 0, got {eta}"
        )));
    }
    let mut ideal = spec.clone();
    ideal.overrides.clear();
    let rows = in_pool(threads, || {
        energies
            .par_iter()
            .map(|&e| -> Result<ImpurityRow> {
                let ep = EnergyPoint::new(e, eta)?;
                let cell = gf_cell(&ideal.base_site, &ideal, ep)?;
                Ok(ImpurityRow {
                    e,
                    homogeneous: iterate_chain(&ideal, ep, n_sites)?,
                    perturbed: iterate_chain(spec, ep, n_sites)?,
                    fixed_point: fixed_point_surface_gf(&cell, ideal.k0)?.value,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ImpurityTable {
        eta,
        n_sites,
        impurity_sites: spec.overrides.keys().copied().collect(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTrial {
    pub k0: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSearch {
    pub k0: f64,
    pub score: f64,
    pub trials: Vec<CouplingTrial>,
}

/// Log-grid search for a coupling that opens separate bands around each of
/// `targets` (energies, typically `(n + ½)ω`).
///
/// Candidates are `10^(log_lo + j·step)`. A candidate scores the narrowest of
/// the bands containing the targets, and scores 0 if a target is not inside a
/// band, if two targets share a band, or if a band touches the ends of
/// `[e_min, e_max]`. The highest score wins; ties go to the smaller coupling.
#[allow(clippy::too_many_arguments)]
pub fn search_band_coupling(
    spec: &ChainSpec,
    targets: &[f64],
    e_min: f64,
    e_max: f64,
    n_grid: usize,
    log_lo: f64,
    log_hi: f64,
    steps_per_decade: usize,
) -> Result<CouplingSearch> {
    let n = ((log_hi - log_lo) * steps_per_decade as f64).round() as usize;
    let mut trials = Vec::with_capacity(n + 1);
    let opts = ScanOptions::default();
    for j in 0..=n {
        let k0 = 10f64.powf(log_lo + j as f64 / steps_per_decade as f64);
        let mut trial = spec.clone();
        trial.k0 = k0;
        let report = band_report(&trial, e_min, e_max, n_grid, &opts)?;
        let mut score = f64::INFINITY;
        let mut used: Vec<usize> = Vec::new();
        for &t in targets {
            match report.bands.iter().position(|b| b.contains(t)) {
                Some(i) if !used.contains(&i) => {
                    let b = report.bands[i];
                    let first = report.samples.first().map(|s| s.e).unwrap_or(e_min);
                    let last = report.samples.last().map(|s| s.e).unwrap_or(e_max);
                    if b.e_lo <= first || b.e_hi >= last {
                        score = 0.0;
                    } else {
                        score = score.min(b.width());
                    }
                    used.push(i);
                }
                _ => score = 0.0,
            }
        }
        if !score.is_finite() {
            score = 0.0;
        }
        trials.push(CouplingTrial { k0, score });
    }
    let best = trials
        .iter()
        .fold(None::<&CouplingTrial>, |acc, t| match acc {
            Some(b) if b.score >= t.score => Some(b),
            _ => Some(t),
        })
        .ok_or_else(|| Error::InvalidParameter("empty coupling search".into()))?;
    Ok(CouplingSearch {
        k0: best.k0,
        score: best.score,
        trials: trials.clone(),
    })
}
