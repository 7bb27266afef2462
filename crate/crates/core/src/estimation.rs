//! Gestational age and estimated fetal weight from the four biometrics.
//!
//! Both regressions take centimetres. Terms are summed in the printed order
//! so results are bit-reproducible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biometry::BiometrySet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestAge {
    pub weeks: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FetalWeight {
    pub grams: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("incomplete biometry: {0}")]
    IncompleteBiometry(String),
}

fn check(name: &str, v: f64) -> Result<f64, EstimationError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(EstimationError::IncompleteBiometry(format!(
            "{name} must be a positive length in cm, got {v}"
        )))
    }
}

/// The dating polynomial without input validation.
pub fn ga_polynomial(hc: f64, bpd: f64, ac: f64, fl: f64) -> f64 {
    10.6 - 0.168 * bpd + 0.045 * hc + 0.03 * ac + 0.058 * fl + 0.002 * bpd * bpd + 0.002 * fl * fl + 0.0005 * bpd * ac
        - 0.005 * bpd * fl
        - 0.0002 * hc * ac
        + 0.0008 * hc * fl
        + 0.0005 * ac * fl
}

/// Base-10 exponent of the weight regression, without input validation.
pub fn efw_log10(hc: f64, ac: f64, fl: f64) -> f64 {
    1.326 - 0.00326 * ac * fl + 0.0107 * hc + 0.0438 * ac + 0.158 * fl
}

pub fn estimate_ga(hc: f64, bpd: f64, ac: f64, fl: f64) -> Result<GestAge, EstimationError> {
    let (hc, bpd, ac, fl) = (check("HC", hc)?, check("BPD", bpd)?, check("AC", ac)?, check("FL", fl)?);
    Ok(GestAge {
        weeks: ga_polynomial(hc, bpd, ac, fl),
    })
}

/// Hadlock-style weight in grams.
pub fn estimate_efw(hc: f64, ac: f64, fl: f64) -> Result<FetalWeight, EstimationError> {
    let (hc, ac, fl) = (check("HC", hc)?, check("AC", ac)?, check("FL", fl)?);
    Ok(FetalWeight {
        grams: 10f64.powf(efw_log10(hc, ac, fl)),
    })
}

/// Fills GA and EFW when all four biometrics are present; clears them
/// otherwise.
pub fn complete_or_skip(b: BiometrySet) -> BiometrySet {
    let mut out = BiometrySet {
        ga_weeks: None,
        efw_g: None,
        ..b
    };
    if let (Some(hc), Some(bpd), Some(ac), Some(fl)) = (b.hc_cm, b.bpd_cm, b.ac_cm, b.fl_cm) {
        if let (Ok(ga), Ok(w)) = (estimate_ga(hc, bpd, ac, fl), estimate_efw(hc, ac, fl)) {
            out.ga_weeks = Some(ga.weeks);
            out.efw_g = Some(w.grams);
        }
    }
    out
}
