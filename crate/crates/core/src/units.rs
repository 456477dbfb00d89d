//! Laboratory units to the internal unit system and back.
//!
//! Internally ħ = 1, masses are in amu and lengths in Å, so the energy unit is
//! ħ²/(amu·Å²) ≈ 6.697e-15 erg (≈ 33.7 cm⁻¹). Angular frequencies and energies
//! share that unit. Lab-side units are CGS: erg, Å, amu, cm⁻¹ and erg·Å.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 values in CGS. Every conversion in the crate goes through these.
pub mod constants {
    /// Reduced Planck constant, erg·s.
    pub const HBAR_ERG_S: f64 = 1.054_571_817e-27;
    /// Planck constant (exact), erg·s.
    pub const PLANCK_ERG_S: f64 = 6.626_070_15e-27;
    /// Speed of light (exact), cm/s.
    pub const SPEED_OF_LIGHT_CM_S: f64 = 2.997_924_58e10;
    /// Atomic mass constant, g.
    pub const AMU_G: f64 = 1.660_539_066_60e-24;
    /// Ångström, cm.
    pub const ANGSTROM_CM: f64 = 1.0e-8;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub energy_unit_in_erg: f64,
    pub length_unit_in_angstrom: f64,
    pub mass_unit_in_amu: f64,
    pub hbar_internal: f64,
}

impl UnitSystem {
    pub fn standard() -> Self {
        use constants::*;
        let energy = HBAR_ERG_S * HBAR_ERG_S / (AMU_G * ANGSTROM_CM * ANGSTROM_CM);
        Self {
            energy_unit_in_erg: energy,
            length_unit_in_angstrom: 1.0,
            mass_unit_in_amu: 1.0,
            hbar_internal: 1.0,
        }
    }

    /// Erg carried by one cm⁻¹ of wavenumber (E = hcν̃).
    fn erg_per_wavenumber() -> f64 {
        constants::PLANCK_ERG_S * constants::SPEED_OF_LIGHT_CM_S
    }

    /// Internal units per one lab unit of `dim`.
    fn factor(&self, dim: Dimension) -> f64 {
        match dim {
            Dimension::Energy => 1.0 / self.energy_unit_in_erg,
            Dimension::Length => 1.0 / self.length_unit_in_angstrom,
            Dimension::Mass => 1.0 / self.mass_unit_in_amu,
            Dimension::Frequency => Self::erg_per_wavenumber() / self.energy_unit_in_erg,
            Dimension::CouplingStrength => {
                1.0 / (self.energy_unit_in_erg * self.length_unit_in_angstrom)
            }
        }
    }

    pub fn wavenumber_to_internal(&self, cm1: f64) -> f64 {
        cm1 * self.factor(Dimension::Frequency)
    }

    pub fn internal_to_wavenumber(&self, e: f64) -> f64 {
        e / self.factor(Dimension::Frequency)
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::standard()
    }
}

/// Lab units: Energy in erg, Length in Å, Mass in amu, Frequency in cm⁻¹,
/// CouplingStrength in erg·Å.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Energy,
    Length,
    Mass,
    Frequency,
    CouplingStrength,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Energy => "energy",
            Dimension::Length => "length",
            Dimension::Mass => "mass",
            Dimension::Frequency => "frequency",
            Dimension::CouplingStrength => "coupling_strength",
        };
        f.write_str(s)
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "energy" => Ok(Dimension::Energy),
            "length" => Ok(Dimension::Length),
            "mass" => Ok(Dimension::Mass),
            "frequency" => Ok(Dimension::Frequency),
            "coupling_strength" | "coupling" => Ok(Dimension::CouplingStrength),
            other => Err(Error::UnknownDimension(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalQuantity {
    pub value: f64,
    pub dimension: Dimension,
}

impl PhysicalQuantity {
    pub fn new(value: f64, dimension: Dimension) -> Self {
        Self { value, dimension }
    }

    /// Returns the value if the quantity carries `dim`, otherwise a mismatch error.
    pub fn expect(&self, dim: Dimension) -> Result<f64> {
        if self.dimension == dim {
            Ok(self.value)
        } else {
            Err(Error::DimensionMismatch {
                expected: dim.to_string(),
                found: self.dimension.to_string(),
            })
        }
    }
}

pub fn to_internal(q: PhysicalQuantity, u: &UnitSystem) -> Result<f64> {
    if !q.value.is_finite() {
        return Err(Error::NonFinite(format!(
            "{} value {}",
            q.dimension, q.value
        )));
    }
    Ok(q.value * u.factor(q.dimension))
}

pub fn from_internal(v: f64, dim: Dimension, u: &UnitSystem) -> Result<PhysicalQuantity> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("internal {dim} value {v}")));
    }
    Ok(PhysicalQuantity::new(v / u.factor(dim), dim))
}
