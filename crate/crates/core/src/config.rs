//! Flat `key = value` run configuration, presets and resolution to internal units.
//!
//! Values may carry an optional unit token after the number (`500 cm-1`,
//! `0.1 angstrom`); a token naming the wrong dimension is rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::greens::HarmonicSite;
use crate::units::{to_internal, Dimension, PhysicalQuantity, UnitSystem};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Coupling found by the log-grid band search on the reference well
/// (`10^-0.6`, internal units); see `scanner::search_band_coupling`.
pub const BANDED_K0_INTERNAL: f64 = 0.251_188_643_150_958;

pub const KEYS: [&str; 10] = [
    "mass_amu",
    "omega_cm1",
    "site_spacing_angstrom",
    "crossing_offset_angstrom",
    "k0_value",
    "k0_unit",
    "eta_internal",
    "emin_cm1",
    "emax_cm1",
    "n_grid",
];

const REQUIRED: [&str; 5] = [
    "mass_amu",
    "omega_cm1",
    "site_spacing_angstrom",
    "k0_value",
    "k0_unit",
];

pub const DEFAULT_ETA_INTERNAL: f64 = 1e-9;
pub const DEFAULT_N_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum K0Unit {
    ErgAngstrom,
    Internal,
}

impl fmt::Display for K0Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            K0Unit::ErgAngstrom => "erg_angstrom",
            K0Unit::Internal => "internal",
        })
    }
}

impl FromStr for K0Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "erg_angstrom" => Ok(K0Unit::ErgAngstrom),
            "internal" => Ok(K0Unit::Internal),
            other => Err(Error::InvalidParameter(format!(
                "k0_unit must be erg_angstrom or internal, got '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Literal reference parameters, coupling read as erg·Å.
    Paper,
    /// Reference well and geometry with the band-opening internal coupling.
    PaperBanded,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Paper, Preset::PaperBanded];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::PaperBanded => "paper-banded",
        }
    }

    pub fn values(&self) -> RawConfig {
        let mut raw = RawConfig::default();
        for (k, v) in [
            ("mass_amu", "35.4"),
            ("omega_cm1", "500"),
            ("site_spacing_angstrom", "0.1"),
            ("crossing_offset_angstrom", "0.05"),
            ("emin_cm1", "100"),
            ("emax_cm1", "900"),
        ] {
            raw.set(k, v);
        }
        match self {
            Preset::Paper => {
                raw.set("k0_value", "1.58e-7");
                raw.set("k0_unit", "erg_angstrom");
            }
            Preset::PaperBanded => {
                raw.set("k0_value", &format!("{BANDED_K0_INTERNAL:e}"));
                raw.set("k0_unit", "internal");
            }
        }
        raw
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(vec![format!(
                    "unknown preset '{s}' (known: {})",
                    names.join(", ")
                )])
            })
    }
}

/// Unresolved string values; later layers overwrite earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: &str) {
        self.values
            .insert(key.to_string(), value.trim().to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn layer(&mut self, other: &RawConfig) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => raw.set(k.trim(), v),
                _ => errors.push(format!(
                    "line {}: expected key = value, got '{line}'",
                    lineno + 1
                )),
            }
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(Error::Config(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub preset: Option<String>,
    pub version: String,
    pub mass_amu: f64,
    pub omega_cm1: f64,
    pub site_spacing_angstrom: f64,
    pub crossing_offset_angstrom: f64,
    pub k0_value: f64,
    pub k0_unit: K0Unit,
    pub eta_internal: f64,
    pub emin_cm1: f64,
    pub emax_cm1: f64,
    pub n_grid: usize,
    pub internal: InternalParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalParams {
    pub mass: f64,
    pub omega: f64,
    pub spacing: f64,
    pub crossing_offset: f64,
    pub k0: f64,
    pub e_min: f64,
    pub e_max: f64,
}

impl ResolvedConfig {
    pub fn base_site(&self) -> Result<HarmonicSite> {
        HarmonicSite::new(self.internal.mass, self.internal.omega, 0.0, 0.0)
    }

    pub fn chain_spec(&self) -> Result<ChainSpec> {
        ChainSpec::new(
            self.internal.spacing,
            self.internal.crossing_offset,
            self.internal.k0,
            self.base_site()?,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn unit_dimension(token: &str) -> Option<Dimension> {
    match token {
        "erg" => Some(Dimension::Energy),
        "angstrom" | "Å" | "A" => Some(Dimension::Length),
        "amu" => Some(Dimension::Mass),
        "cm-1" | "cm^-1" | "1/cm" => Some(Dimension::Frequency),
        "erg_angstrom" | "erg*angstrom" | "erg·Å" => Some(Dimension::CouplingStrength),
        _ => None,
    }
}

fn key_dimension(key: &str) -> Option<Dimension> {
    match key {
        "mass_amu" => Some(Dimension::Mass),
        "omega_cm1" | "emin_cm1" | "emax_cm1" => Some(Dimension::Frequency),
        "site_spacing_angstrom" | "crossing_offset_angstrom" => Some(Dimension::Length),
        _ => None,
    }
}

fn parse_number(key: &str, text: &str, errors: &mut Vec<String>) -> Option<f64> {
    let mut parts = text.split_whitespace();
    let number = parts.next().unwrap_or("");
    let unit: Vec<&str> = parts.collect();
    if !unit.is_empty() {
        let token = unit.join(" ");
        match (unit_dimension(&token), key_dimension(key)) {
            (Some(found), Some(expected)) if found != expected => {
                errors.push(format!(
                    "{key}: dimension mismatch, expected {expected}, found {found} ('{token}')"
                ));
                return None;
            }
            (Some(_), Some(_)) => {}
            _ => {
                errors.push(format!("{key}: unrecognized unit '{token}'"));
                return None;
            }
        }
    }
    match number.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => {
            errors.push(format!("{key}: not a finite number: '{number}'"));
            None
        }
    }
}

/// Layers preset < file < flags and validates, collecting every problem found.
pub fn resolve(
    preset: Option<Preset>,
    file: Option<&RawConfig>,
    flags: &RawConfig,
) -> Result<ResolvedConfig> {
    let mut raw = preset.map(|p| p.values()).unwrap_or_default();
    if let Some(f) = file {
        raw.layer(f);
    }
    raw.layer(flags);

    let mut errors = Vec::new();
    for key in raw.values.keys() {
        if !KEYS.contains(&key.as_str()) {
            errors.push(format!("unknown key '{key}'"));
        }
    }
    let missing: Vec<&str> = REQUIRED
        .iter()
        .copied()
        .filter(|k| raw.get(k).is_none())
        .collect();
    if !missing.is_empty() {
        errors.push(format!("missing required keys: {}", missing.join(", ")));
    }

    let num = |key: &str, errors: &mut Vec<String>| {
        raw.get(key).and_then(|v| parse_number(key, v, errors))
    };
    let mass = num("mass_amu", &mut errors);
    let omega = num("omega_cm1", &mut errors);
    let spacing = num("site_spacing_angstrom", &mut errors);
    let offset = num("crossing_offset_angstrom", &mut errors);
    let k0_value = num("k0_value", &mut errors);
    let eta = num("eta_internal", &mut errors);
    let emin = num("emin_cm1", &mut errors);
    let emax = num("emax_cm1", &mut errors);
    let k0_unit = raw.get("k0_unit").and_then(|v| match v.parse::<K0Unit>() {
        Ok(u) => Some(u),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    });
    let n_grid = match raw.get("n_grid") {
        None => Some(DEFAULT_N_GRID),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n >= 2 => Some(n),
            _ => {
                errors.push(format!("n_grid: expected an integer >= 2, got '{v}'"));
                None
            }
        },
    };

    for (key, v) in [
        ("mass_amu", mass),
        ("omega_cm1", omega),
        ("site_spacing_angstrom", spacing),
    ] {
        if let Some(v) = v {
            if v <= 0.0 {
                errors.push(format!("{key} must be positive, got {v}"));
            }
        }
    }
    if let Some(k) = k0_value {
        if k < 0.0 {
            errors.push(format!("k0_value must be non-negative, got {k}"));
        }
    }
    if let Some(e) = eta {
        if e < 0.0 {
            errors.push(format!("eta_internal must be non-negative, got {e}"));
        }
    }
    let offset = offset.or(spacing.map(|d| 0.5 * d));
    if let (Some(o), Some(d)) = (offset, spacing) {
        if !(o > 0.0 && o < d) {
            errors.push(format!(
                "crossing_offset_angstrom must lie in (0, {d}), got {o}"
            ));
        }
    }
    let emin = emin.or(omega.map(|w| 0.2 * w));
    let emax = emax.or(omega.map(|w| 1.8 * w));
    if let (Some(lo), Some(hi)) = (emin, emax) {
        if lo >= hi {
            errors.push(format!("emin_cm1 ({lo}) must be below emax_cm1 ({hi})"));
        }
    }
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }

    let (mass, omega, spacing, offset, k0_value, k0_unit, emin, emax, n_grid) = (
        mass.unwrap(),
        omega.unwrap(),
        spacing.unwrap(),
        offset.unwrap(),
        k0_value.unwrap(),
        k0_unit.unwrap(),
        emin.unwrap(),
        emax.unwrap(),
        n_grid.unwrap(),
    );
    let u = UnitSystem::standard();
    let internal = InternalParams {
        mass: to_internal(PhysicalQuantity::new(mass, Dimension::Mass), &u)?,
        omega: to_internal(PhysicalQuantity::new(omega, Dimension::Frequency), &u)?,
        spacing: to_internal(PhysicalQuantity::new(spacing, Dimension::Length), &u)?,
        crossing_offset: to_internal(PhysicalQuantity::new(offset, Dimension::Length), &u)?,
        k0: match k0_unit {
            K0Unit::Internal => k0_value,
            K0Unit::ErgAngstrom => to_internal(
                PhysicalQuantity::new(k0_value, Dimension::CouplingStrength),
                &u,
            )?,
        },
        e_min: to_internal(PhysicalQuantity::new(emin, Dimension::Frequency), &u)?,
        e_max: to_internal(PhysicalQuantity::new(emax, Dimension::Frequency), &u)?,
    };
    Ok(ResolvedConfig {
        preset: preset.map(|p| p.name().to_string()),
        version: VERSION.to_string(),
        mass_amu: mass,
        omega_cm1: omega,
        site_spacing_angstrom: spacing,
        crossing_offset_angstrom: offset,
        k0_value,
        k0_unit,
        eta_internal: eta.unwrap_or(DEFAULT_ETA_INTERNAL),
        emin_cm1: emin,
        emax_cm1: emax,
        n_grid,
        internal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_errors(r: Result<ResolvedConfig>) -> Vec<String> {
        match r {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn paper_preset_values() {
        let c = resolve(Some(Preset::Paper), None, &RawConfig::default()).unwrap();
        assert_eq!(c.mass_amu, 35.4);
        assert_eq!(c.omega_cm1, 500.0);
        assert_eq!(c.site_spacing_angstrom, 0.1);
        assert_eq!(c.crossing_offset_angstrom, 0.05);
        assert_eq!(c.k0_unit, K0Unit::ErgAngstrom);
        assert_eq!(c.preset.as_deref(), Some("paper"));
        assert!((c.internal.omega - 14.830080639710387).abs() < 1e-12);
        // 1.58e-7 erg·Å over the internal energy unit
        let expected = 1.58e-7 / 6.6973535256100995e-15;
        assert!((c.internal.k0 / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_lists_required_keys() {
        let errs = config_errors(resolve(None, None, &RawConfig::default()));
        let joined = errs.join("\n");
        for key in REQUIRED {
            assert!(joined.contains(key), "{key} not reported in {joined}");
        }
    }

    #[test]
    fn flags_equal_preset_field_for_field() {
        let mut flags = RawConfig::default();
        for (k, v) in [
            ("mass_amu", "35.4"),
            ("omega_cm1", "500"),
            ("site_spacing_angstrom", "0.1"),
            ("crossing_offset_angstrom", "0.05"),
            ("k0_value", "1.58e-7"),
            ("k0_unit", "erg_angstrom"),
            ("emin_cm1", "100"),
            ("emax_cm1", "900"),
        ] {
            flags.set(k, v);
        }
        let from_flags = resolve(None, None, &flags).unwrap();
        let mut preset = resolve(Some(Preset::Paper), None, &RawConfig::default()).unwrap();
        preset.preset = None;
        assert_eq!(from_flags, preset);
    }

    #[test]
    fn layering_order() {
        let file = RawConfig::parse("omega_cm1 = 600\nmass_amu = 20 # comment\n").unwrap();
        let mut flags = RawConfig::default();
        flags.set("omega_cm1", "700");
        let c = resolve(Some(Preset::Paper), Some(&file), &flags).unwrap();
        assert_eq!(c.omega_cm1, 700.0);
        assert_eq!(c.mass_amu, 20.0);
        assert_eq!(c.site_spacing_angstrom, 0.1);
    }

    #[test]
    fn all_errors_reported_together() {
        let file = RawConfig::parse(
            "mass_amu = -1\nomega_cm1 = 0\nsite_spacing_angstrom = 0.1 erg\nk0_value = 1\nk0_unit = internal\n\
             emin_cm1 = 900\nemax_cm1 = 100\ncolour = blue\n",
        )
        .unwrap();
        let errs = config_errors(resolve(None, Some(&file), &RawConfig::default()));
        let joined = errs.join("\n");
        assert!(joined.contains("unknown key 'colour'"));
        assert!(joined.contains("mass_amu must be positive"));
        assert!(joined.contains("omega_cm1 must be positive"));
        assert!(joined.contains("dimension mismatch"));
        assert!(joined.contains("emin_cm1 (900) must be below"));
        assert!(errs.len() >= 5);
    }

    #[test]
    fn unit_tokens_accepted_when_consistent() {
        let file =
            RawConfig::parse("omega_cm1 = 500 cm-1\nsite_spacing_angstrom = 0.1 angstrom").unwrap();
        let c = resolve(
            Some(Preset::PaperBanded),
            Some(&file),
            &RawConfig::default(),
        )
        .unwrap();
        assert_eq!(c.omega_cm1, 500.0);
        assert_eq!(c.internal.k0, BANDED_K0_INTERNAL);
    }

    #[test]
    fn crossing_offset_defaults_to_half_spacing() {
        let mut flags = RawConfig::default();
        for (k, v) in [
            ("mass_amu", "1"),
            ("omega_cm1", "100"),
            ("site_spacing_angstrom", "0.4"),
            ("k0_value", "0"),
            ("k0_unit", "internal"),
        ] {
            flags.set(k, v);
        }
        let c = resolve(None, None, &flags).unwrap();
        assert_eq!(c.crossing_offset_angstrom, 0.2);
        assert_eq!(c.emin_cm1, 20.0);
        assert_eq!(c.emax_cm1, 180.0);
        assert_eq!(c.n_grid, DEFAULT_N_GRID);
        c.chain_spec().unwrap();
    }

    #[test]
    fn malformed_lines_and_presets() {
        assert!(RawConfig::parse("just words").is_err());
        assert!("nope".parse::<Preset>().is_err());
        assert_eq!(
            "paper-banded".parse::<Preset>().unwrap(),
            Preset::PaperBanded
        );
    }
}
