//! Exact Green's function of two diabatic surfaces coupled by `K₀ δ(x − x_c)`.
//!
//! With a point coupling the Lippmann–Schwinger equation closes on the single
//! value at `x_c`, so every element of the 2×2 resolvent is an algebraic
//! combination of the two uncoupled Green's functions:
//!
//! ```text
//! G11(x,x0) = G1(x,x0) + K0² G1(x,xc) G2(xc,xc) G1(xc,x0) / den
//! G12(x,x0) = K0 G1(x,xc) G2(xc,x0) / den
//! den       = 1 − K0² G1(xc,xc) G2(xc,xc)
//! ```
//!
//! and `G22`, `G21` follow by exchanging the surfaces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{gf_eval, ClosedResolvent, EnergyPoint, GfMethod, GfValue, HarmonicSite};

/// `|den|` below this is reported as a resonance.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Point coupling `K₀ δ(x − x_c)` between the two surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub k0: f64,
    pub xc: f64,
}

impl CouplingSpec {
    pub fn new(k0: f64, xc: f64) -> Result<Self> {
        if !(k0.is_finite() && xc.is_finite()) {
            return Err(Error::NonFinite(format!("coupling k0 = {k0}, xc = {xc}")));
        }
        if k0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "k0 must be >= 0, got {k0}"
            )));
        }
        Ok(Self { k0, xc })
    }
}

/// Source of uncoupled Green's functions for one surface.
pub trait GfProvider: Sync {
    fn gf(&self, x: f64, x0: f64, e: EnergyPoint) -> Result<GfValue>;

    /// Row-major `G(xs[i], ys[j])`.
    fn gf_table(&self, xs: &[f64], ys: &[f64], e: EnergyPoint) -> Result<Vec<GfValue>> {
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        for &x in xs {
            for &y in ys {
                out.push(self.gf(x, y, e)?);
            }
        }
        Ok(out)
    }
}

/// A harmonic well evaluated by the chosen route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicProvider {
    pub site: HarmonicSite,
    pub method: GfMethod,
}

impl HarmonicProvider {
    pub fn closed(site: HarmonicSite) -> Self {
        Self {
            site,
            method: GfMethod::Closed,
        }
    }
}

impl GfProvider for HarmonicProvider {
    fn gf(&self, x: f64, x0: f64, e: EnergyPoint) -> Result<GfValue> {
        gf_eval(&self.site, x, x0, e, self.method)
    }

    fn gf_table(&self, xs: &[f64], ys: &[f64], e: EnergyPoint) -> Result<Vec<GfValue>> {
        match self.method {
            GfMethod::Closed => ClosedResolvent::new(&self.site, e)?.table(xs, ys),
            GfMethod::Spectral { .. } => {
                let mut out = Vec::with_capacity(xs.len() * ys.len());
                for &x in xs {
                    for &y in ys {
                        out.push(self.gf(x, y, e)?);
                    }
                }
                Ok(out)
            }
        }
    }
}

impl<T: GfProvider + ?Sized> GfProvider for &T {
    fn gf(&self, x: f64, x0: f64, e: EnergyPoint) -> Result<GfValue> {
        (**self).gf(x, x0, e)
    }

    fn gf_table(&self, xs: &[f64], ys: &[f64], e: EnergyPoint) -> Result<Vec<GfValue>> {
        (**self).gf_table(xs, ys, e)
    }
}

pub fn denominator(
    g1: &dyn GfProvider,
    g2: &dyn GfProvider,
    c: &CouplingSpec,
    e: EnergyPoint,
) -> Result<Complex64> {
    let a = g1.gf(c.xc, c.xc, e)?;
    let b = g2.gf(c.xc, c.xc, e)?;
    Ok(1.0 - c.k0 * c.k0 * (a * b))
}

fn checked_denominator(
    g1: &dyn GfProvider,
    g2: &dyn GfProvider,
    c: &CouplingSpec,
    e: EnergyPoint,
) -> Result<Complex64> {
    let den = denominator(g1, g2, c, e)?;
    if den.norm() < RESONANCE_TOL {
        return Err(Error::Resonance {
            magnitude: den.norm(),
        });
    }
    Ok(den)
}

pub fn g11(
    g1: &dyn GfProvider,
    g2: &dyn GfProvider,
    c: &CouplingSpec,
    x: f64,
    x0: f64,
    e: EnergyPoint,
) -> Result<GfValue> {
    let den = checked_denominator(g1, g2, c, e)?;
    let direct = g1.gf(x, x0, e)?;
    let k2 = c.k0 * c.k0;
    let scattered = k2 * g1.gf(x, c.xc, e)? * g2.gf(c.xc, c.xc, e)? * g1.gf(c.xc, x0, e)? / den;
    Ok(direct + scattered)
}

pub fn g12(
    g1: &dyn GfProvider,
    g2: &dyn GfProvider,
    c: &CouplingSpec,
    x: f64,
    x0: f64,
    e: EnergyPoint,
) -> Result<GfValue> {
    let den = checked_denominator(g1, g2, c, e)?;
    Ok(c.k0 * g1.gf(x, c.xc, e)? * g2.gf(c.xc, x0, e)? / den)
}

pub fn g22(
    g1: &dyn GfProvider,
    g2: &dyn GfProvider,
    c: &CouplingSpec,
    x: f64,
    x0: f64,
    e: EnergyPoint,
) -> Result<GfValue> {
    g11(g2, g1, c, x, x0, e)
}

pub fn g21(
    g1: &dyn GfProvider,
    g2: &dyn GfProvider,
    c: &CouplingSpec,
    x: f64,
    x0: f64,
    e: EnergyPoint,
) -> Result<GfValue> {
    g12(g2, g1, c, x, x0, e)
}

/// Relative mismatch when the computed G11 is substituted back into its own
/// integral equation `G11(x,x₀) = G1(x,x₀) + k0² G1(x,xc) G2(xc,xc) G11(xc,x₀)`.
pub fn dyson_residual(
    g1: &dyn GfProvider,
    g2: &dyn GfProvider,
    c: &CouplingSpec,
    x: f64,
    x0: f64,
    e: EnergyPoint,
) -> Result<f64> {
    let lhs = g11(g1, g2, c, x, x0, e)?;
    let at_c = g11(g1, g2, c, c.xc, x0, e)?;
    let rhs = g1.gf(x, x0, e)? + c.k0 * c.k0 * g1.gf(x, c.xc, e)? * g2.gf(c.xc, c.xc, e)? * at_c;
    Ok((lhs - rhs).norm() / lhs.norm().max(f64::MIN_POSITIVE))
}

/// Two coupled surfaces bundled for repeated evaluation.
#[derive(Clone, Copy)]
pub struct TwoStateSystem<'a> {
    pub surface1: &'a dyn GfProvider,
    pub surface2: &'a dyn GfProvider,
    pub coupling: CouplingSpec,
}

impl<'a> TwoStateSystem<'a> {
    pub fn new(
        surface1: &'a dyn GfProvider,
        surface2: &'a dyn GfProvider,
        coupling: CouplingSpec,
    ) -> Self {
        Self {
            surface1,
            surface2,
            coupling,
        }
    }

    /// `[[G11, G12], [G21, G22]]` at `(x, x₀)`.
    pub fn matrix(&self, x: f64, x0: f64, e: EnergyPoint) -> Result<[[GfValue; 2]; 2]> {
        let (g1, g2, c) = (self.surface1, self.surface2, &self.coupling);
        Ok([
            [g11(g1, g2, c, x, x0, e)?, g12(g1, g2, c, x, x0, e)?],
            [g21(g1, g2, c, x, x0, e)?, g22(g1, g2, c, x, x0, e)?],
        ])
    }

    /// The four coupled kernels on `xs × xs`, row-major, in the order G11, G12, G21, G22.
    pub fn kernels(&self, xs: &[f64], e: EnergyPoint) -> Result<[Vec<GfValue>; 4]> {
        let c = &self.coupling;
        let den = checked_denominator(self.surface1, self.surface2, c, e)?;
        let xc = [c.xc];
        let t1 = self.surface1.gf_table(xs, xs, e)?;
        let t2 = self.surface2.gf_table(xs, xs, e)?;
        let c1 = self.surface1.gf_table(xs, &xc, e)?;
        let c2 = self.surface2.gf_table(xs, &xc, e)?;
        let g1cc = self.surface1.gf(c.xc, c.xc, e)?;
        let g2cc = self.surface2.gf(c.xc, c.xc, e)?;
        let k = c.k0;
        let n = xs.len();
        let mut out = [
            Vec::with_capacity(n * n),
            Vec::with_capacity(n * n),
            Vec::with_capacity(n * n),
            Vec::with_capacity(n * n),
        ];
        // symmetric providers: G_i(xc, x0) = G_i(x0, xc)
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                out[0].push(t1[idx] + k * k * c1[i] * g2cc * c1[j] / den);
                out[1].push(k * c1[i] * c2[j] / den);
                out[2].push(k * c2[i] * c1[j] / den);
                out[3].push(t2[idx] + k * k * c2[i] * g1cc * c2[j] / den);
            }
        }
        Ok(out)
    }
}

/// Amplitudes on both surfaces sampled on a shared, strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionPair {
    pub grid: Vec<f64>,
    pub psi1: Vec<Complex64>,
    pub psi2: Vec<Complex64>,
}

impl WavefunctionPair {
    pub fn new(grid: Vec<f64>, psi1: Vec<Complex64>, psi2: Vec<Complex64>) -> Result<Self> {
        if grid.len() < 3 {
            return Err(Error::GridTooCoarse(grid.len()));
        }
        if psi1.len() != grid.len() || psi2.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "wavefunction lengths {} and {} do not match grid length {}",
                psi1.len(),
                psi2.len(),
                grid.len()
            )));
        }
        if grid
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidParameter(
                "grid must be strictly increasing".into(),
            ));
        }
        if grid.iter().any(|v| !v.is_finite())
            || psi1
                .iter()
                .chain(&psi2)
                .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::NonFinite("wavefunction samples".into()));
        }
        Ok(Self { grid, psi1, psi2 })
    }

    pub fn zeros(grid: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Self::new(grid, zero.clone(), zero)
    }
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let h = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Energy-domain amplitude `Ψ̄(x, E) = i ∫ G(x, x₀; E) Ψ(x₀, 0) dx₀`.
///
/// The integral runs over the grid of `psi0` with trapezoid weights; the
/// output is sampled on the same grid.
pub fn half_fourier_wavefunction(
    system: &TwoStateSystem<'_>,
    psi0: &WavefunctionPair,
    e: EnergyPoint,
) -> Result<WavefunctionPair> {
    let grid = &psi0.grid;
    if grid.len() < 3 {
        return Err(Error::GridTooCoarse(grid.len()));
    }
    let n = grid.len();
    let w = trapezoid_weights(grid);
    let [k11, k12, k21, k22] = system.kernels(grid, e)?;
    let i_unit = Complex64::new(0.0, 1.0);
    let mut psi1 = Vec::with_capacity(n);
    let mut psi2 = Vec::with_capacity(n);
    for row in 0..n {
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for (col, wc) in w.iter().enumerate() {
            let idx = row * n + col;
            let s1 = psi0.psi1[col] * wc;
            let s2 = psi0.psi2[col] * wc;
            a += k11[idx] * s1 + k12[idx] * s2;
            b += k21[idx] * s1 + k22[idx] * s2;
        }
        psi1.push(i_unit * a);
        psi2.push(i_unit * b);
    }
    WavefunctionPair::new(grid.clone(), psi1, psi2)
}
