//! Refractive-index models in normalized units.
//!
//! Frequencies are measured in units of the pump frequency (so the pump sits
//! at `omega = 1`) and lengths in units of `c / omega_pump`. A wave of
//! frequency `omega` in a medium of index `mu` has wavenumber `omega * mu`.
//!
//! The Sellmeier form is evaluated on the normalized inverse frequency
//! squared:
//!
//! ```text
//! mu(omega)^2 = 1 + sum_i B_i / (1 / omega^2 - C_i)
//! ```
//!
//! The pump wave gets its own index (`pump_index`), independent of the
//! signal-band curve.

use serde::{Deserialize, Serialize};

use crate::error::{PdcError, Result};

/// Number of interior samples used to check `mu >= 1` at construction.
const VALIDATION_SAMPLES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispersionKind {
    Constant,
    Linear,
    Sellmeier,
}

/// Validated refractive-index model.
///
/// Coefficient layout in `params`:
/// - `Constant`: `[mu0]`
/// - `Linear`: `[mu0, alpha]` with `mu = mu0 * (1 + alpha * omega)`
/// - `Sellmeier`: `[B1, C1, B2, C2, ...]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDispersion", into = "RawDispersion")]
pub struct DispersionModel {
    kind: DispersionKind,
    params: Vec<f64>,
    pump_index: f64,
    validity: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDispersion {
    kind: DispersionKind,
    params: Vec<f64>,
    pump_index: f64,
    validity: [f64; 2],
}

impl TryFrom<RawDispersion> for DispersionModel {
    type Error = PdcError;

    fn try_from(raw: RawDispersion) -> Result<Self> {
        DispersionModel::new(raw.kind, raw.params, raw.pump_index, raw.validity)
    }
}

impl From<DispersionModel> for RawDispersion {
    fn from(m: DispersionModel) -> Self {
        RawDispersion {
            kind: m.kind,
            params: m.params,
            pump_index: m.pump_index,
            validity: m.validity,
        }
    }
}

impl DispersionModel {
    pub fn new(
        kind: DispersionKind,
        params: Vec<f64>,
        pump_index: f64,
        validity: [f64; 2],
    ) -> Result<Self> {
        let bad = |msg: String| Err(PdcError::InvalidModel(msg));

        if params.iter().any(|p| !p.is_finite()) {
            return bad("params must be finite".into());
        }
        match kind {
            DispersionKind::Constant if params.len() != 1 => {
                return bad(format!(
                    "constant model takes 1 param, got {}",
                    params.len()
                ))
            }
            DispersionKind::Linear if params.len() != 2 => {
                return bad(format!("linear model takes 2 params, got {}", params.len()))
            }
            DispersionKind::Sellmeier if params.is_empty() || params.len() % 2 != 0 => {
                return bad(format!(
                    "sellmeier model takes (B, C) pairs, got {} params",
                    params.len()
                ))
            }
            _ => {}
        }
        if !(pump_index.is_finite() && pump_index >= 1.0) {
            return bad(format!("pump_index must be >= 1, got {pump_index}"));
        }
        let [lo, hi] = validity;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return bad(format!(
                "validity must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            ));
        }

        let model = DispersionModel {
            kind,
            params,
            pump_index,
            validity,
        };

        if kind == DispersionKind::Sellmeier {
            for pair in model.params.chunks_exact(2) {
                let c = pair[1];
                if c > 0.0 {
                    let pole = 1.0 / c.sqrt();
                    if (lo..=hi).contains(&pole) {
                        return bad(format!(
                            "sellmeier pole at omega = {pole} lies inside validity range"
                        ));
                    }
                }
            }
        }

        for k in 0..=VALIDATION_SAMPLES {
            let omega = lo + (hi - lo) * k as f64 / VALIDATION_SAMPLES as f64;
            let mu = model.eval(omega)?;
            if !(mu.is_finite() && mu >= 1.0) {
                return bad(format!("mu({omega}) = {mu} violates mu >= 1"));
            }
        }
        Ok(model)
    }

    pub fn constant(mu0: f64, pump_index: f64, validity: [f64; 2]) -> Result<Self> {
        Self::new(DispersionKind::Constant, vec![mu0], pump_index, validity)
    }

    pub fn linear(mu0: f64, alpha: f64, pump_index: f64, validity: [f64; 2]) -> Result<Self> {
        Self::new(
            DispersionKind::Linear,
            vec![mu0, alpha],
            pump_index,
            validity,
        )
    }

    pub fn sellmeier(terms: &[(f64, f64)], pump_index: f64, validity: [f64; 2]) -> Result<Self> {
        let params = terms.iter().flat_map(|&(b, c)| [b, c]).collect();
        Self::new(DispersionKind::Sellmeier, params, pump_index, validity)
    }

    pub fn kind(&self) -> DispersionKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn validity(&self) -> [f64; 2] {
        self.validity
    }

    /// Signal-band refractive index at `omega`. The pump override is not
    /// applied here; see [`DispersionModel::mu_pump`].
    pub fn mu(&self, omega: f64) -> Result<f64> {
        let [lo, hi] = self.validity;
        if !(omega > 0.0 && omega >= lo && omega <= hi) {
            return Err(PdcError::OutOfRange { omega, lo, hi });
        }
        self.eval(omega)
    }

    /// Index seen by the pump wave.
    pub fn mu_pump(&self) -> f64 {
        self.pump_index
    }

    /// Wavenumber `omega * mu(omega)`.
    pub fn wavenumber(&self, omega: f64) -> Result<f64> {
        Ok(omega * self.mu(omega)?)
    }

    fn eval(&self, omega: f64) -> Result<f64> {
        match self.kind {
            DispersionKind::Constant => Ok(self.params[0]),
            DispersionKind::Linear => Ok(self.params[0] * (1.0 + self.params[1] * omega)),
            DispersionKind::Sellmeier => {
                let inv2 = 1.0 / (omega * omega);
                let mut mu2 = 1.0;
                for pair in self.params.chunks_exact(2) {
                    let denom = inv2 - pair[1];
                    if denom == 0.0 {
                        return Err(PdcError::InvalidModel(format!(
                            "sellmeier denominator vanishes at omega = {omega}"
                        )));
                    }
                    mu2 += pair[0] / denom;
                }
                if mu2 < 0.0 {
                    return Err(PdcError::InvalidModel(format!(
                        "sellmeier mu^2 = {mu2} < 0 at omega = {omega}"
                    )));
                }
                Ok(mu2.sqrt())
            }
        }
    }
}
