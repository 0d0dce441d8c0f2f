//! Closed-form links between the trigger offset `c0`, the achievable
//! consensus error level `c`, the weight floor `gamma`, and the regular
//! node count `N`.
//!
//! `N` counts regular (non-malicious) agents only; callers derive it from a
//! scenario as `|V| - |A|`. The forward direction picks the largest `c0`
//! that still guarantees error level `c`; `c_from_c0` inverts it.

use thiserror::Error;

use crate::msr::ProtocolKind;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("gamma must lie in (0, 1/2], got {0}")]
    InvalidGamma(f64),
    #[error("regular node count must be >= {min}, got {got}")]
    InvalidN { min: usize, got: usize },
    #[error("{name} must be finite and >= 0, got {value}")]
    InvalidLevel { name: &'static str, value: f64 },
}

fn check_gamma(gamma: f64) -> Result<(), BoundsError> {
    if !gamma.is_finite() || gamma <= 0.0 || gamma > 0.5 {
        return Err(BoundsError::InvalidGamma(gamma));
    }
    Ok(())
}

fn check_n(n: usize, min: usize) -> Result<(), BoundsError> {
    if n < min {
        return Err(BoundsError::InvalidN { min, got: n });
    }
    Ok(())
}

fn check_level(name: &'static str, value: f64) -> Result<(), BoundsError> {
    if !value.is_finite() || value < 0.0 {
        return Err(BoundsError::InvalidLevel { name, value });
    }
    Ok(())
}

/// Largest trigger offset that still achieves error level `c` under the
/// first protocol: `gamma^N * c / (4N)`.
pub fn c0_max_p1(gamma: f64, n: usize, c: f64) -> Result<f64, BoundsError> {
    check_gamma(gamma)?;
    check_n(n, 1)?;
    check_level("c", c)?;
    Ok(gamma.powi(n as i32) * c / (4.0 * n as f64))
}

/// The variant rule that anchors corrections at the last broadcast value
/// halves the admissible offset: `gamma^N * c / (8N)`.
pub fn c0_max_p1b(gamma: f64, n: usize, c: f64) -> Result<f64, BoundsError> {
    Ok(c0_max_p1(gamma, n, c)? / 2.0)
}

/// Largest trigger offset for the second protocol:
/// `gamma^(N-1) * (1 - gamma) * c / (1 - gamma^(N-1))`.
pub fn c0_max_p2(gamma: f64, n: usize, c: f64) -> Result<f64, BoundsError> {
    check_gamma(gamma)?;
    check_n(n, 2)?;
    check_level("c", c)?;
    let g = gamma.powi(n as i32 - 1);
    Ok(g * (1.0 - gamma) * c / (1.0 - g))
}

/// Guaranteed consensus error level for a given trigger offset; the inverse
/// of the `c0_max_*` formulas.
pub fn c_from_c0(
    protocol: ProtocolKind,
    gamma: f64,
    n: usize,
    c0: f64,
) -> Result<f64, BoundsError> {
    check_gamma(gamma)?;
    check_level("c0", c0)?;
    match protocol {
        ProtocolKind::P1 => {
            check_n(n, 1)?;
            Ok(4.0 * c0 * n as f64 / gamma.powi(n as i32))
        }
        ProtocolKind::P1B => {
            check_n(n, 1)?;
            Ok(8.0 * c0 * n as f64 / gamma.powi(n as i32))
        }
        ProtocolKind::P2 => {
            check_n(n, 2)?;
            let g = gamma.powi(n as i32 - 1);
            Ok(c0 * (1.0 - g) / (g * (1.0 - gamma)))
        }
    }
}
