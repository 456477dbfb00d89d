//! Semi-infinite chain of delta-coupled harmonic sites.
//!
//! Site `n` sits at `center + n·spacing` and meets site `n+1` at the crossing
//! point `crossing_offset` to its right. Attaching site `n` to a chain whose
//! surface Green's function is `S` at the shared crossing gives, from the
//! two-surface solution,
//!
//! ```text
//! S' = g_right + K0² g_across² S / (1 − K0² g_left S)
//! ```
//!
//! where the `g`s are the isolated site's Green's function at its left and
//! right crossing points. For identical sites the semi-infinite limit is a
//! fixed point of this map, i.e. a root of
//!
//! ```text
//! K0² g_left S² − [K0² g_left g_right − K0² g_across² + 1] S + g_right = 0
//! ```
//!
//! and the sign of the discriminant `A` decides whether `S` is real (gap) or
//! complex (band).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{ClosedResolvent, EnergyPoint, HarmonicSite};

/// Attach-site denominators below this magnitude are resonances.
pub const ATTACH_RESONANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub spacing: f64,
    pub crossing_offset: f64,
    pub k0: f64,
    /// Site 0; site `n` is this template translated by `n·spacing`.
    pub base_site: HarmonicSite,
    /// Replacement templates (impurities), positioned like `base_site`.
    pub overrides: BTreeMap<usize, HarmonicSite>,
}

impl ChainSpec {
    pub fn new(
        spacing: f64,
        crossing_offset: f64,
        k0: f64,
        base_site: HarmonicSite,
    ) -> Result<Self> {
        let spec = Self {
            spacing,
            crossing_offset,
            k0,
            base_site,
            overrides: BTreeMap::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Crossing points halfway between neighboring centers.
    pub fn symmetric(spacing: f64, k0: f64, base_site: HarmonicSite) -> Result<Self> {
        Self::new(spacing, 0.5 * spacing, k0, base_site)
    }

    pub fn with_override(mut self, index: usize, site: HarmonicSite) -> Result<Self> {
        site.validate()?;
        self.overrides.insert(index, site);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing.is_finite() && self.crossing_offset.is_finite() && self.k0.is_finite()) {
            return Err(Error::NonFinite("chain geometry or coupling".into()));
        }
        if self.spacing <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "spacing must be > 0, got {}",
                self.spacing
            )));
        }
        if !(self.crossing_offset > 0.0 && self.crossing_offset < self.spacing) {
            return Err(Error::InvalidParameter(format!(
                "crossing offset {} must lie strictly between 0 and the spacing {}",
                self.crossing_offset, self.spacing
            )));
        }
        if self.k0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "k0 must be >= 0, got {}",
                self.k0
            )));
        }
        self.base_site.validate()?;
        for site in self.overrides.values() {
            site.validate()?;
        }
        Ok(())
    }

    pub fn template(&self, index: usize) -> &HarmonicSite {
        self.overrides.get(&index).unwrap_or(&self.base_site)
    }

    /// Site `index` placed on the lattice.
    pub fn site(&self, index: usize) -> HarmonicSite {
        self.template(index).shifted(index as f64 * self.spacing)
    }

    /// Crossing point shared by sites `index` and `index + 1`.
    pub fn crossing_point(&self, index: usize) -> f64 {
        self.base_site.center + index as f64 * self.spacing + self.crossing_offset
    }
}

/// An isolated site's Green's function at its two crossing points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfCell {
    /// `G₀(x_left, x_left)`
    pub left: Complex64,
    /// `G₀(x_right, x_right)`
    pub right: Complex64,
    /// `G₀(x_left, x_right)`
    pub across: Complex64,
}

impl GfCell {
    pub fn is_real(&self) -> bool {
        self.left.im == 0.0 && self.right.im == 0.0 && self.across.im == 0.0
    }
}

/// Evaluates the cell of `site` in its own frame.
///
/// Crossings sit at `center − (spacing − crossing_offset)` and
/// `center + crossing_offset`; the result depends only on the template, so
/// translated copies of a site share bit-identical cells.
pub fn gf_cell(site: &HarmonicSite, spec: &ChainSpec, e: EnergyPoint) -> Result<GfCell> {
    let resolvent = ClosedResolvent::new(site, e)?;
    let x_left = site.center - (spec.spacing - spec.crossing_offset);
    let x_right = site.center + spec.crossing_offset;
    Ok(GfCell {
        left: resolvent.eval(x_left, x_left)?,
        right: resolvent.eval(x_right, x_right)?,
        across: resolvent.eval(x_left, x_right)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
        }
    }
}

/// Surface Green's function `G⁽ⁿ⁾(x_n, x_n; E)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGf {
    pub value: Complex64,
    pub branch: Branch,
    pub converged: bool,
}

/// One application of the attachment map. `site` only labels errors.
pub fn attach_site(s_prev: Complex64, cell: &GfCell, k0: f64, site: usize) -> Result<Complex64> {
    let k2 = k0 * k0;
    let den = 1.0 - k2 * cell.left * s_prev;
    if den.norm() < ATTACH_RESONANCE_TOL {
        return Err(Error::Resonance {
            magnitude: den.norm(),
        });
    }
    let s = cell.right + k2 * cell.across * cell.across * s_prev / den;
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::Divergence { site });
    }
    Ok(s)
}

/// `S_1, …, S_n` for a chain of `n_sites` sites numbered from 1, starting
/// from the bare first site.
pub fn iterate_chain(spec: &ChainSpec, e: EnergyPoint, n_sites: usize) -> Result<Vec<Complex64>> {
    let mut cells: BTreeMap<Option<usize>, GfCell> = BTreeMap::new();
    let base = gf_cell(&spec.base_site, spec, e)?;
    cells.insert(None, base);
    for (&idx, site) in &spec.overrides {
        cells.insert(Some(idx), gf_cell(site, spec, e)?);
    }
    let cell_of = |n: usize| -> &GfCell {
        if spec.overrides.contains_key(&n) {
            &cells[&Some(n)]
        } else {
            &cells[&None]
        }
    };
    let mut out = Vec::with_capacity(n_sites);
    if n_sites == 0 {
        return Ok(out);
    }
    let mut s = cell_of(1).right;
    out.push(s);
    for n in 2..=n_sites {
        s = attach_site(s, cell_of(n), spec.k0, n)?;
        out.push(s);
    }
    Ok(out)
}

/// Coefficients `(a, B, c)` of `a S² − B S + c = 0`.
fn closure_coefficients(cell: &GfCell, k0: f64) -> (Complex64, Complex64, Complex64) {
    let k2 = k0 * k0;
    let a = k2 * cell.left;
    let b = 1.0 + k2 * (cell.left * cell.right - cell.across * cell.across);
    (a, b, cell.right)
}

/// Relative residual of `S` in the closure quadratic.
pub fn closure_residual(cell: &GfCell, k0: f64, s: Complex64) -> f64 {
    let (a, b, c) = closure_coefficients(cell, k0);
    let terms = [a * s * s, b * s, c];
    let scale = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    (terms[0] - terms[1] + terms[2]).norm() / scale
}

/// Multiplier `|dS'/dS|` of the attachment map at a fixed point.
fn multiplier(cell: &GfCell, k0: f64, s: Complex64) -> f64 {
    let k2 = k0 * k0;
    let den = 1.0 - k2 * cell.left * s;
    (k2 * cell.across * cell.across / (den * den)).norm()
}

/// Both roots of the closure quadratic, minus branch first.
///
/// With `a = 0` the plus root is at infinity and is returned as such.
pub fn closure_roots(cell: &GfCell, k0: f64) -> [(Complex64, Branch); 2] {
    let (a, b, c) = closure_coefficients(cell, k0);
    let mut root = (b * b - 4.0 * a * c).sqrt();
    if (root * b.conj()).re < 0.0 {
        root = -root;
    }
    let q = b + root;
    [(2.0 * c / q, Branch::Minus), (q / (2.0 * a), Branch::Plus)]
}

/// Semi-infinite surface Green's function from the closure quadratic.
///
/// Roots are written as `S₋ = 2c/(B + √A)` and `S₊ = (B + √A)/(2a)` with
/// the square root taken in the half-plane of `B`, so `S₋` is the root that
/// tends to `g_right` as `K₀ → 0`. At complex energy the root kept is the
/// attracting fixed point of [`attach_site`], which is what iteration
/// converges to. At real energy outside a band (`A ≥ 0`) the attracting root
/// is kept as well; inside a band both roots are neutral and the one with
/// `Im S ≤ 0` is kept.
pub fn fixed_point_surface_gf(cell: &GfCell, k0: f64) -> Result<SurfaceGf> {
    let (a, b, c) = closure_coefficients(cell, k0);
    if a.norm() == 0.0 {
        return Ok(SurfaceGf {
            value: c,
            branch: Branch::Minus,
            converged: true,
        });
    }
    let disc = b * b - 4.0 * a * c;
    let candidates = closure_roots(cell, k0);
    let (minus, plus) = (candidates[0].0, candidates[1].0);

    let m_minus = multiplier(cell, k0, minus);
    let m_plus = multiplier(cell, k0, plus);
    let neutral = (m_minus - 1.0).abs() < 1e-12 && (m_plus - 1.0).abs() < 1e-12;
    let chosen = if cell.is_real() && disc.re < 0.0 || neutral {
        candidates
            .iter()
            .filter(|(s, _)| s.im <= 0.0)
            .min_by(|x, y| x.0.im.total_cmp(&y.0.im))
            .copied()
    } else if m_minus < m_plus {
        Some(candidates[0])
    } else {
        Some(candidates[1])
    };
    let (value, branch) = chosen.ok_or(Error::BranchRule)?;
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::BranchRule);
    }
    Ok(SurfaceGf {
        value,
        branch,
        converged: true,
    })
}

/// Discriminant `A = [K0² g_left g_right − K0² g_across² + 1]² − 4 K0² g_left g_right`.
///
/// Defined for real energy only; a cell with imaginary parts is rejected.
pub fn discriminant_a(cell: &GfCell, k0: f64) -> Result<f64> {
    if !cell.is_real() {
        return Err(Error::ComplexCell {
            im_in: cell.left.im,
            im_out: cell.right.im,
            im_across: cell.across.im,
        });
    }
    let k2 = k0 * k0;
    let (l, r, o) = (cell.left.re, cell.right.re, cell.across.re);
    let bracket = k2 * l * r - k2 * o * o + 1.0;
    Ok(bracket * bracket - 4.0 * k2 * l * r)
}

/// Iterates the homogeneous chain until successive values differ by less
/// than `tol`, or `max_sites` is reached.
pub fn converge_surface_gf(
    spec: &ChainSpec,
    e: EnergyPoint,
    max_sites: usize,
    tol: f64,
) -> Result<(SurfaceGf, Vec<Complex64>)> {
    let cell = gf_cell(&spec.base_site, spec, e)?;
    let mut history = Vec::with_capacity(max_sites);
    let mut s = cell.right;
    history.push(s);
    let mut converged = false;
    for n in 2..=max_sites {
        let next = attach_site(s, &cell, spec.k0, n)?;
        let delta = (next - s).norm();
        s = next;
        history.push(s);
        if delta < tol {
            converged = true;
            break;
        }
    }
    let branch = closure_roots(&cell, spec.k0)
        .iter()
        .min_by(|x, y| (x.0 - s).norm().total_cmp(&(y.0 - s).norm()))
        .map(|r| r.1)
        .unwrap_or(Branch::Minus);
    Ok((
        SurfaceGf {
            value: s,
            branch,
            converged,
        },
        history,
    ))
}
