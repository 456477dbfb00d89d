//! Quick self-checks of a resolved configuration against the independent routes.

use serde::Serialize;

use crate::chain::{closure_residual, fixed_point_surface_gf, gf_cell};
use crate::config::ResolvedConfig;
use crate::error::Result;
use crate::greens::{gf_closed, gf_spectral_resummed, EnergyPoint};
use crate::twostate::{dyson_residual, CouplingSpec, GfProvider, HarmonicProvider};

pub const SPECTRAL_TOL: f64 = 1e-6;
pub const DYSON_TOL: f64 = 1e-10;
pub const CLOSURE_TOL: f64 = 1e-12;

/// Energies in units of ω, all clear of the levels.
const PROBE_ENERGIES: [f64; 5] = [0.3, 0.7, 1.1, 1.9, 2.3];

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub spectral_vs_closed: f64,
    pub dyson: f64,
    /// Largest `|k0² g1(xc,xc) g2(xc,xc)|` seen; the Dyson residual cannot be
    /// expected below roughly `1e-16` times this.
    pub dyson_condition: f64,
    pub closure: f64,
    pub passed: bool,
}

/// Maximum relative residuals of the closed form against the resummed
/// spectral sum, of the coupled G11 against its integral equation, and of the
/// selected closure root against its quadratic.
pub fn run_checks(cfg: &ResolvedConfig) -> Result<CheckReport> {
    let site = cfg.base_site()?;
    let spec = cfg.chain_spec()?;
    let w = site.omega;
    let ell = site.length_scale();
    let xs: Vec<f64> = (0..5).map(|i| ell * (-2.0 + i as f64)).collect();

    let mut spectral = 0.0f64;
    for &f in &PROBE_ENERGIES[..3] {
        let e = EnergyPoint::new(f * w, cfg.eta_internal)?;
        for &x in &xs {
            for &x0 in &xs {
                let closed = gf_closed(&site, x, x0, e)?;
                let (oracle, _) = gf_spectral_resummed(&site, x, x0, e, 1e-10)?;
                spectral = spectral.max((closed - oracle).norm() / oracle.norm());
            }
        }
    }

    let p1 = HarmonicProvider::closed(spec.site(0));
    let p2 = HarmonicProvider::closed(spec.site(1));
    let coupling = CouplingSpec::new(spec.k0, spec.crossing_point(0))?;
    let mut dyson = 0.0f64;
    let mut dyson_condition = 0.0f64;
    for &f in &PROBE_ENERGIES {
        let e = EnergyPoint::new(f * w, cfg.eta_internal)?;
        let k2ab = coupling.k0
            * coupling.k0
            * p1.gf(coupling.xc, coupling.xc, e)?
            * p2.gf(coupling.xc, coupling.xc, e)?;
        dyson_condition = dyson_condition.max(k2ab.norm());
        for &(x, x0) in &[(xs[1], xs[3]), (xs[2], xs[4])] {
            dyson = dyson.max(dyson_residual(&p1, &p2, &coupling, x, x0, e)?);
        }
    }

    let mut closure = 0.0f64;
    for &f in &PROBE_ENERGIES {
        let cell = gf_cell(
            &spec.base_site,
            &spec,
            EnergyPoint::new(f * w, cfg.eta_internal)?,
        )?;
        let s = fixed_point_surface_gf(&cell, spec.k0)?;
        closure = closure.max(closure_residual(&cell, spec.k0, s.value));
    }

    Ok(CheckReport {
        spectral_vs_closed: spectral,
        dyson,
        dyson_condition,
        closure,
        passed: spectral <= SPECTRAL_TOL && dyson <= DYSON_TOL && closure <= CLOSURE_TOL,
    })
}
