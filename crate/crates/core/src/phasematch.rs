//! Mode construction, longitudinal phase mismatch and phase-matching angles.
//!
//! Geometry is planar with a single transverse axis. The pump travels along
//! `z` with wavenumber `mu_pump` (pump frequency is 1). For an input mode at
//! frequency `omega` and transverse wavenumber `q`:
//!
//! - the down-conversion partner sits at `1 - omega` with transverse `-q`,
//! - the up-conversion partner sits at `1 + omega` with transverse `+q`,
//!
//! and the mismatches are
//!
//! ```text
//! delta_d = k_pump - kz_a - kz_b
//! delta_u = k_pump + kz_a - kz_c
//! ```
//!
//! Angles are internal to the crystal, measured from `z`.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionModel;
use crate::error::{PdcError, Result};
use crate::roots::brent;

/// Residual bound on a returned phase-matching root (normalized wavenumber).
pub const TOL_ROOT: f64 = 1e-10;

/// Uniform panels scanned on `[0, pi/2)` when bracketing roots.
pub const SCAN_PANELS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Down,
    Up,
}

impl Process {
    pub fn as_str(self) -> &'static str {
        match self {
            Process::Down => "down",
            Process::Up => "up",
        }
    }
}

impl std::str::FromStr for Process {
    type Err = PdcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "down" => Ok(Process::Down),
            "up" => Ok(Process::Up),
            other => Err(PdcError::InvalidParameter(format!(
                "process must be \"down\" or \"up\", got {other:?}"
            ))),
        }
    }
}

/// A propagating scalar plane-wave mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub omega: f64,
    pub q: f64,
    pub kz: f64,
}

impl ModeSpec {
    /// Internal angle to the `z` axis, in `[0, pi/2)`.
    pub fn theta(&self) -> f64 {
        self.q.abs().atan2(self.kz)
    }
}

/// Input mode plus its down- and up-conversion partners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionTriple {
    pub a: ModeSpec,
    pub b: ModeSpec,
    pub c: ModeSpec,
    pub k_pump: f64,
    pub delta_d: f64,
    pub delta_u: f64,
}

impl InteractionTriple {
    pub fn mismatch(&self, process: Process) -> f64 {
        match process {
            Process::Down => self.delta_d,
            Process::Up => self.delta_u,
        }
    }
}

pub fn make_mode(model: &DispersionModel, omega: f64, q: f64) -> Result<ModeSpec> {
    let k = model.wavenumber(omega)?;
    let aq = q.abs();
    if !(aq < k) {
        return Err(PdcError::Evanescent { omega, q: aq, k });
    }
    let kz = ((k - aq) * (k + aq)).sqrt();
    if !(kz > 0.0) {
        return Err(PdcError::Evanescent { omega, q: aq, k });
    }
    Ok(ModeSpec { omega, q, kz })
}

pub fn make_triple(model: &DispersionModel, omega: f64, q: f64) -> Result<InteractionTriple> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(PdcError::OutOfRange {
            omega,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let a = make_mode(model, omega, q)?;
    let b = make_mode(model, 1.0 - omega, -q)?;
    let c = make_mode(model, 1.0 + omega, q)?;
    let k_pump = model.mu_pump();
    Ok(InteractionTriple {
        a,
        b,
        c,
        k_pump,
        delta_d: k_pump - a.kz - b.kz,
        delta_u: k_pump + a.kz - c.kz,
    })
}

/// Triple whose input mode travels at internal angle `theta`.
pub fn triple_at_angle(
    model: &DispersionModel,
    omega: f64,
    theta: f64,
) -> Result<InteractionTriple> {
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(PdcError::InvalidParameter(format!(
            "theta must lie in [0, pi/2), got {theta}"
        )));
    }
    let q = model.wavenumber(omega)? * theta.sin();
    make_triple(model, omega, q)
}

pub fn mismatch(model: &DispersionModel, omega: f64, theta: f64, process: Process) -> Result<f64> {
    Ok(triple_at_angle(model, omega, theta)?.mismatch(process))
}

pub fn mismatch_d(model: &DispersionModel, omega: f64, theta: f64) -> Result<f64> {
    mismatch(model, omega, theta, Process::Down)
}

pub fn mismatch_u(model: &DispersionModel, omega: f64, theta: f64) -> Result<f64> {
    mismatch(model, omega, theta, Process::Up)
}

fn scan_grid() -> impl Iterator<Item = f64> {
    let width = FRAC_PI_2 / SCAN_PANELS as f64;
    (0..=SCAN_PANELS).map(move |k| {
        if k == SCAN_PANELS {
            FRAC_PI_2.next_down()
        } else {
            k as f64 * width
        }
    })
}

/// Every root of the mismatch on the scanned range, in increasing order.
pub fn solve_theta_all(model: &DispersionModel, omega: f64, process: Process) -> Result<Vec<f64>> {
    let f = |theta: f64| mismatch(model, omega, theta, process);
    // an invalid starting point is a hard error, not an empty locus
    let f0 = f(0.0)?;

    let mut roots = Vec::new();
    let mut prev = (0.0, f0);
    if f0 == 0.0 {
        roots.push(0.0);
    }
    for theta in scan_grid().skip(1) {
        let Ok(value) = f(theta) else {
            // partner modes turn evanescent past this angle
            break;
        };
        let (t0, f0) = prev;
        if value == 0.0 {
            roots.push(theta);
        } else if f0 != 0.0 && f0.signum() != value.signum() {
            roots.push(brent(f, t0, theta, f0, value)?);
        }
        prev = (theta, value);
    }
    Ok(roots)
}

/// Smallest phase-matching angle for `process` at `omega`.
pub fn solve_theta(model: &DispersionModel, omega: f64, process: Process) -> Result<f64> {
    let f = |theta: f64| mismatch(model, omega, theta, process);
    let f0 = f(0.0)?;
    if f0 == 0.0 {
        return Ok(0.0);
    }
    let mut prev = (0.0, f0);
    for theta in scan_grid().skip(1) {
        let Ok(value) = f(theta) else {
            break;
        };
        let (t0, v0) = prev;
        if value == 0.0 {
            return Ok(theta);
        }
        if v0.signum() != value.signum() {
            return brent(f, t0, theta, v0, value);
        }
        prev = (theta, value);
    }
    Err(PdcError::NoSolution {
        theta_lo: 0.0,
        theta_hi: prev.0,
        mismatch_lo: f0,
        mismatch_hi: prev.1,
    })
}

pub fn solve_theta_d(model: &DispersionModel, omega: f64) -> Result<f64> {
    solve_theta(model, omega, Process::Down)
}

pub fn solve_theta_u(model: &DispersionModel, omega: f64) -> Result<f64> {
    solve_theta(model, omega, Process::Up)
}

/// Phase-matched angle and the triple built there.
pub fn matched_triple(
    model: &DispersionModel,
    omega: f64,
    process: Process,
) -> Result<(f64, InteractionTriple)> {
    let theta = solve_theta(model, omega, process)?;
    Ok((theta, triple_at_angle(model, omega, theta)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocusPoint {
    pub omega: f64,
    pub theta: Result<f64>,
}

impl LocusPoint {
    pub fn status(&self) -> &'static str {
        status_of(&self.theta)
    }
}

/// Short status tag used in output files.
pub fn status_of<T>(r: &Result<T>) -> &'static str {
    match r {
        Ok(_) => "ok",
        Err(PdcError::NoSolution { .. }) => "no_solution",
        Err(PdcError::Evanescent { .. }) => "evanescent",
        Err(PdcError::OutOfRange { .. }) => "out_of_range",
        Err(_) => "error",
    }
}

/// Phase-matching angle over a frequency grid. Failed points stay in the
/// output as gaps, in grid order.
pub fn rainbow_locus(model: &DispersionModel, grid: &[f64], process: Process) -> Vec<LocusPoint> {
    grid.par_iter()
        .map(|&omega| LocusPoint {
            omega,
            theta: solve_theta(model, omega, process),
        })
        .collect()
}
