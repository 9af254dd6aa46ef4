//! Physical parameters of the four-level scheme, unit handling and presets.
//!
//! Level layout: a probe field couples |1⟩↔|2⟩, a strong field |2⟩↔|3⟩ and a
//! weak field |3⟩↔|4⟩. Level |3⟩ decays to |2⟩ (γ₃₂) and |4⟩ (γ₃₄), level |2⟩
//! decays to |1⟩ (γ₂₁), and an incoherent pump Λ transfers population between
//! |1⟩ and |2⟩ in both directions.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rabi frequencies, detunings, decay and pump rates (angular frequencies).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    pub omega_p: f64,
    pub omega_s: f64,
    pub omega_w: f64,
    pub delta_p: f64,
    pub delta_s: f64,
    pub delta_w: f64,
    pub gamma_21: f64,
    pub gamma_32: f64,
    pub gamma_34: f64,
    pub lambda_pump: f64,
}

/// Field names accepted in parameter files and `--sweep` specifications.
pub const FIELD_NAMES: [&str; 10] = [
    "omega_p",
    "omega_s",
    "omega_w",
    "delta_p",
    "delta_s",
    "delta_w",
    "gamma_21",
    "gamma_32",
    "gamma_34",
    "lambda_pump",
];

impl SchemeParams {
    /// Checks that every field is finite, rates and Rabi frequencies are
    /// non-negative.
    pub fn validate(&self) -> Result<()> {
        for name in FIELD_NAMES {
            let v = self.get(name).expect("known field");
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        let non_negative = [
            ("omega_p", self.omega_p),
            ("omega_s", self.omega_s),
            ("omega_w", self.omega_w),
            ("gamma_21", self.gamma_21),
            ("gamma_32", self.gamma_32),
            ("gamma_34", self.gamma_34),
            ("lambda_pump", self.lambda_pump),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "omega_p" => self.omega_p,
            "omega_s" => self.omega_s,
            "omega_w" => self.omega_w,
            "delta_p" => self.delta_p,
            "delta_s" => self.delta_s,
            "delta_w" => self.delta_w,
            "gamma_21" => self.gamma_21,
            "gamma_32" => self.gamma_32,
            "gamma_34" => self.gamma_34,
            "lambda_pump" => self.lambda_pump,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "omega_p" => &mut self.omega_p,
            "omega_s" => &mut self.omega_s,
            "omega_w" => &mut self.omega_w,
            "delta_p" => &mut self.delta_p,
            "delta_s" => &mut self.delta_s,
            "delta_w" => &mut self.delta_w,
            "gamma_21" => &mut self.gamma_21,
            "gamma_32" => &mut self.gamma_32,
            "gamma_34" => &mut self.gamma_34,
            "lambda_pump" => &mut self.lambda_pump,
            _ => return Err(Error::InvalidParams(format!("unknown parameter `{name}`"))),
        };
        *slot = value;
        Ok(())
    }

    /// Every field multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = *self;
        for name in FIELD_NAMES {
            out.set(name, self.get(name).unwrap() * factor).unwrap();
        }
        out
    }

    /// Re-expresses a parameter set given in `units` in units of γ₂₁.
    ///
    /// Returns the rescaled parameters together with γ₂₁ in µs⁻¹ (angular),
    /// or `None` for the scale when the input was already dimensionless.
    pub fn to_gamma21_units(&self, units: Units) -> Result<(SchemeParams, Option<f64>)> {
        match units {
            Units::Gamma21 => {
                if self.gamma_21 != 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "units = gamma21 requires gamma_21 == 1, got {}",
                        self.gamma_21
                    )));
                }
                Ok((*self, None))
            }
            Units::UsInv | Units::TwoPiMhz => {
                let absolute = self.scaled(units.to_us_inv());
                let g21 = absolute.gamma_21;
                if !(g21 > 0.0) {
                    return Err(Error::InvalidParams(
                        "gamma_21 must be positive to rescale into units of gamma_21".into(),
                    ));
                }
                let mut out = absolute.scaled(1.0 / g21);
                // exact by construction; avoid 0.999... from rounding
                out.gamma_21 = 1.0;
                Ok((out, Some(g21)))
            }
        }
    }

    /// Inverse of [`to_gamma21_units`](Self::to_gamma21_units): `gamma_21_us_inv`
    /// is γ₂₁ expressed in µs⁻¹ (angular).
    pub fn from_gamma21_units(&self, gamma_21_us_inv: f64, units: Units) -> SchemeParams {
        match units {
            Units::Gamma21 => *self,
            _ => self.scaled(gamma_21_us_inv / units.to_us_inv()),
        }
    }

    /// Loads a flat key–value TOML parameter file and converts it to γ₂₁ units.
    pub fn load(path: &Path) -> Result<(SchemeParams, Units)> {
        let text = std::fs::read_to_string(path)?;
        let file: ParamFile = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        let units = file.units;
        let params = file.params;
        params.validate()?;
        Ok((params, units))
    }

    pub fn to_toml(&self, units: Units) -> String {
        let file = ParamFile { units, params: *self };
        toml::to_string(&file).expect("flat record always serializes")
    }
}

/// On-disk parameter file: the [`SchemeParams`] fields plus a `units` key.
/// Missing fields default to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    #[serde(default)]
    pub units: Units,
    #[serde(flatten)]
    pub params: SchemeParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Units {
    /// Dimensionless, γ₂₁ = 1.
    #[default]
    #[serde(rename = "gamma21")]
    Gamma21,
    /// Angular frequency in µs⁻¹.
    #[serde(rename = "us_inv")]
    UsInv,
    /// Values are multiples of 2π MHz (2π µs⁻¹).
    #[serde(rename = "two_pi_MHz")]
    TwoPiMhz,
}

impl Units {
    /// Factor converting a value in these units to angular µs⁻¹.
    /// Meaningless for [`Units::Gamma21`], which has no absolute scale.
    pub fn to_us_inv(self) -> f64 {
        match self {
            Units::Gamma21 | Units::UsInv => 1.0,
            Units::TwoPiMhz => TAU,
        }
    }
}

impl FromStr for Units {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma21" => Ok(Units::Gamma21),
            "us_inv" => Ok(Units::UsInv),
            "two_pi_MHz" => Ok(Units::TwoPiMhz),
            other => Err(Error::InvalidConfig(format!(
                "unknown units `{other}` (expected gamma21, us_inv or two_pi_MHz)"
            ))),
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Gamma21 => "gamma21",
            Units::UsInv => "us_inv",
            Units::TwoPiMhz => "two_pi_MHz",
        })
    }
}

/// Neutral-Hg decay rates in angular µs⁻¹; fields and detunings zero.
pub fn hg_preset() -> SchemeParams {
    SchemeParams {
        gamma_21: TAU * 1.27,
        gamma_34: TAU * 7.75,
        gamma_32: TAU * 8.86,
        ..Default::default()
    }
}

/// Hg decay rates with the experimental field set (Ω_s = 2π×88.9 MHz,
/// Ω_w = 2π×25.4 MHz, Ω_p = 2π×0.0013 MHz, all detunings zero) and no pump.
pub fn hg_field_preset() -> SchemeParams {
    SchemeParams {
        omega_s: TAU * 88.9,
        omega_w: TAU * 25.4,
        omega_p: TAU * 0.0013,
        ..hg_preset()
    }
}

/// Pump rate that turns the Hg configuration from absorbing to amplifying.
pub const HG_PUMP_US_INV: f64 = TAU * 0.38;

/// Dimensionless operating point: γ₃₂ = 5, γ₃₄ = 10, Λ = 0.3, Ω_p = 0.001,
/// Ω_w = 20, Ω_s = 70 (units of γ₂₁), all detunings zero.
pub fn dimensionless_preset() -> SchemeParams {
    SchemeParams {
        omega_p: 0.001,
        omega_s: 70.0,
        omega_w: 20.0,
        gamma_21: 1.0,
        gamma_32: 5.0,
        gamma_34: 10.0,
        lambda_pump: 0.3,
        ..Default::default()
    }
}

/// Total incoherent departure rate out of each level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepartureRates {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
}

impl DepartureRates {
    pub fn as_array(&self) -> [f64; 4] {
        [self.g1, self.g2, self.g3, self.g4]
    }

    /// Largest departure rate; sets the Monte Carlo step-size bound.
    pub fn max(&self) -> f64 {
        self.as_array().into_iter().fold(0.0, f64::max)
    }
}

pub fn departure_rates(p: &SchemeParams) -> DepartureRates {
    DepartureRates {
        g1: p.lambda_pump,
        g2: p.gamma_21 + p.lambda_pump,
        g3: p.gamma_32 + p.gamma_34,
        g4: 0.0,
    }
}

/// Ratio at or below which "a ≪ b" is considered satisfied.
pub const MUCH_LESS_RATIO: f64 = 0.1;

/// Diagnostic for the regime in which the closed-form start probabilities
/// apply: Ω_p ≪ Λ, γ₂₁ and Ω_s, Ω_w > γ₃₄, γ₃₂, Λ.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub probe_below_pump: bool,
    pub probe_below_decay: bool,
    pub strong_above_rates: bool,
    pub weak_above_rates: bool,
    pub warnings: Vec<String>,
}

impl ValidityReport {
    pub fn holds(&self) -> bool {
        self.probe_below_pump && self.probe_below_decay && self.strong_above_rates && self.weak_above_rates
    }
}

fn much_less(a: f64, b: f64) -> bool {
    b > 0.0 && a / b <= MUCH_LESS_RATIO
}

pub fn validity_check(p: &SchemeParams) -> ValidityReport {
    let rates_max = p.gamma_34.max(p.gamma_32).max(p.lambda_pump);
    let report = ValidityReport {
        probe_below_pump: much_less(p.omega_p, p.lambda_pump),
        probe_below_decay: much_less(p.omega_p, p.gamma_21),
        strong_above_rates: p.omega_s > rates_max,
        weak_above_rates: p.omega_w > rates_max,
        warnings: Vec::new(),
    };
    let mut warnings = Vec::new();
    if !report.probe_below_pump {
        warnings.push(format!("omega_p/lambda_pump = {:.3} exceeds {MUCH_LESS_RATIO}", p.omega_p / p.lambda_pump));
    }
    if !report.probe_below_decay {
        warnings.push(format!("omega_p/gamma_21 = {:.3} exceeds {MUCH_LESS_RATIO}", p.omega_p / p.gamma_21));
    }
    if !report.strong_above_rates {
        warnings.push(format!("omega_s = {} does not exceed max(gamma_34, gamma_32, lambda) = {rates_max}", p.omega_s));
    }
    if !report.weak_above_rates {
        warnings.push(format!("omega_w = {} does not exceed max(gamma_34, gamma_32, lambda) = {rates_max}", p.omega_w));
    }
    ValidityReport { warnings, ..report }
}
