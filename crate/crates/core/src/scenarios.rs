//! End-to-end experiments built from the lower modules.
//!
//! Channel naming in rainbow curves: `signal` is the mode at the input
//! frequency `omega` travelling at the matched angle; `conjugate` is its
//! partner, at `1 - omega` for down-conversion and `1 + omega` for
//! up-conversion. The satellite rainbow is the `signal` channel of the
//! up-conversion curve.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{
    cascade, exact_two_mode_down, ode_transfer, perturb2_transfer, phase_integral, Attenuator,
    Couplings, CrystalConfig, Element, Method, TransferMatrix, C64, MODE_A, MODE_B, MODE_C,
};
use crate::dispersion::DispersionModel;
use crate::ensemble::analytic_moments;
use crate::error::{PdcError, Result};
use crate::phasematch::{matched_triple, status_of, InteractionTriple, Process};

/// Reference values the satellite diagnostics are compared against.
pub const TARGET_INTENSITY_RATIO: f64 = 0.03;
pub const TARGET_ANGLE_RATIO: f64 = 2.5;

/// Frequency at which ratio diagnostics are evaluated (half the pump).
pub const HALF_PUMP: f64 = 0.5;
const HALF_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainbowPoint {
    pub omega: f64,
    pub theta: Option<f64>,
    pub s_signal: Option<f64>,
    pub s_conjugate: Option<f64>,
    pub count_signal: Option<f64>,
    pub count_conjugate: Option<f64>,
    /// Mismatch of the process that is not being phase matched.
    pub delta_other: Option<f64>,
    pub status: String,
}

impl RainbowPoint {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainbowCurve {
    pub process: Process,
    pub method: String,
    pub model: DispersionModel,
    pub crystal: CrystalConfig,
    pub points: Vec<RainbowPoint>,
}

impl RainbowCurve {
    /// The solved point at half the pump frequency, if on the grid.
    pub fn half_point(&self) -> Option<&RainbowPoint> {
        self.points
            .iter()
            .find(|p| (p.omega - HALF_PUMP).abs() <= HALF_MATCH_TOL && p.is_ok())
    }
}

/// Values behind one solved rainbow point.
#[derive(Debug, Clone)]
pub struct SolvedPoint {
    pub theta: f64,
    pub triple: InteractionTriple,
    pub couplings: Couplings,
    pub transfer: TransferMatrix,
}

pub fn solve_point(
    model: &DispersionModel,
    crystal: &CrystalConfig,
    omega: f64,
    process: Process,
    method: Method,
) -> Result<SolvedPoint> {
    let (theta, triple) = matched_triple(model, omega, process)?;
    let couplings = Couplings::from_triple(&triple, crystal);
    let transfer = method.build(&couplings, crystal.length())?;
    Ok(SolvedPoint {
        theta,
        triple,
        couplings,
        transfer,
    })
}

fn rainbow_point(
    model: &DispersionModel,
    crystal: &CrystalConfig,
    omega: f64,
    process: Process,
    method: Method,
) -> RainbowPoint {
    let solved = solve_point(model, crystal, omega, process, method);
    let status = status_of(&solved).to_string();
    match solved {
        Ok(p) => {
            let s = analytic_moments(&p.transfer).above_threshold();
            let (partner, other) = match process {
                Process::Down => (MODE_B, p.triple.delta_u),
                Process::Up => (MODE_C, p.triple.delta_d),
            };
            let (sig, conj) = (s[MODE_A], s[partner]);
            RainbowPoint {
                omega,
                theta: Some(p.theta),
                s_signal: Some(sig),
                s_conjugate: Some(conj),
                count_signal: Some(sig.max(0.0)),
                count_conjugate: Some(conj.max(0.0)),
                delta_other: Some(other),
                status,
            }
        }
        Err(_) => RainbowPoint {
            omega,
            theta: None,
            s_signal: None,
            s_conjugate: None,
            count_signal: None,
            count_conjugate: None,
            delta_other: None,
            status,
        },
    }
}

fn rainbow(
    model: &DispersionModel,
    crystal: &CrystalConfig,
    grid: &[f64],
    method: Method,
    process: Process,
) -> RainbowCurve {
    let points = grid
        .par_iter()
        .map(|&omega| rainbow_point(model, crystal, omega, process, method))
        .collect();
    RainbowCurve {
        process,
        method: method.name().to_string(),
        model: model.clone(),
        crystal: *crystal,
        points,
    }
}

/// Main down-conversion rainbow from vacuum inputs, three modes coupled.
pub fn pdc_rainbow(
    model: &DispersionModel,
    crystal: &CrystalConfig,
    grid: &[f64],
    method: Method,
) -> RainbowCurve {
    rainbow(model, crystal, grid, method, Process::Down)
}

/// Up-conversion satellite. The mismatched down-conversion partner stays in
/// the system; without it vacuum converts into vacuum and nothing is seen.
pub fn puc_satellite(
    model: &DispersionModel,
    crystal: &CrystalConfig,
    grid: &[f64],
    method: Method,
) -> RainbowCurve {
    rainbow(model, crystal, grid, method, Process::Up)
}

/// Lowest-order pair number per mode from the photon picture,
/// `(kd L)^2 sinc^2(dd L / 2)`.
pub fn photon_pair_intensity(kappa_d: f64, delta_d: f64, length: f64) -> f64 {
    kappa_d * kappa_d * phase_integral(delta_d, length).norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainbowSummary {
    pub omega: f64,
    pub theta_d: f64,
    pub theta_u: f64,
    pub s_pdc: f64,
    pub s_puc: f64,
    /// Signed above-zeropoint intensity of the `1 + omega` output.
    pub s_puc_upper: f64,
    pub ratio_intensity_at_half: f64,
    pub ratio_angle_at_half: f64,
    pub target_intensity_ratio: f64,
    pub target_angle_ratio: f64,
}

/// Ratio diagnostics at half the pump frequency, read from the curves only.
pub fn rainbow_summary(pdc: &RainbowCurve, puc: &RainbowCurve) -> Option<RainbowSummary> {
    let d = pdc.half_point()?;
    let u = puc.half_point()?;
    let (theta_d, theta_u) = (d.theta?, u.theta?);
    let (s_pdc, s_puc) = (d.s_signal?, u.s_signal?);
    Some(RainbowSummary {
        omega: d.omega,
        theta_d,
        theta_u,
        s_pdc,
        s_puc,
        s_puc_upper: u.s_conjugate?,
        ratio_intensity_at_half: s_puc / s_pdc,
        ratio_angle_at_half: theta_u / theta_d,
        target_intensity_ratio: TARGET_INTENSITY_RATIO,
        target_angle_ratio: TARGET_ANGLE_RATIO,
    })
}

/// How the idler loss between the two crystals is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossModel {
    /// Beam splitter feeding zeropoint noise from the spare mode.
    #[default]
    NoisePort,
    /// Row scaling only.
    Bare,
}

/// Two-crystal induced-coherence layout. Modes: `(s1, s2, i*, spare*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZwmSetup {
    pub slabs: [CrystalConfig; 2],
    pub transmission: f64,
    pub triple: InteractionTriple,
    pub loss: LossModel,
}

pub const ZWM_METRIC: [f64; 4] = [1.0, 1.0, -1.0, -1.0];
const ZWM_S1: usize = 0;
const ZWM_S2: usize = 1;
const ZWM_IDLER: usize = 2;
const ZWM_SPARE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZwmResult {
    pub visibility: f64,
    pub transmission: f64,
    /// `(phi, count_rate)` samples of the combined signal.
    pub fringe: Vec<(f64, f64)>,
    /// Phase-averaged above-threshold rate.
    pub mean_rate: f64,
    /// Interference amplitude: rate = mean + Re(e^{i phi} x).
    pub fringe_amplitude: f64,
}

fn down_slab(method: Method, couplings: &Couplings, length: f64) -> Result<TransferMatrix> {
    let c = couplings.down_only();
    match method {
        Method::Exact => exact_two_mode_down(c.kappa_d, c.delta_d, length),
        Method::Perturb2 => perturb2_transfer(&c, length),
        Method::Ode { steps } => ode_transfer(&c, length, steps),
    }
}

/// Full transfer of the two-crystal layout before the signal combiner.
pub fn zwm_transfer(setup: &ZwmSetup, method: Method) -> Result<TransferMatrix> {
    let t = setup.transmission;
    if !(0.0..=1.0).contains(&t) {
        return Err(PdcError::InvalidParameter(format!(
            "idler transmission must lie in [0, 1], got {t}"
        )));
    }
    let mut elements = Vec::with_capacity(3);
    for (k, slab) in setup.slabs.iter().enumerate() {
        let couplings = Couplings::from_triple(&setup.triple, slab);
        let block = down_slab(method, &couplings, slab.length())?.select(&[MODE_A, MODE_B])?;
        let signal = if k == 0 { ZWM_S1 } else { ZWM_S2 };
        elements.push(Element::Slab(
            block.embed(&ZWM_METRIC, &[signal, ZWM_IDLER])?,
        ));
        if k == 0 {
            elements.push(Element::Loss(Attenuator {
                mode: ZWM_IDLER,
                transmission: t,
                noise_port: match setup.loss {
                    LossModel::NoisePort => Some(ZWM_SPARE),
                    LossModel::Bare => None,
                },
            }));
        }
    }
    cascade(&elements)
}

/// Signal fringe visibility versus the phase between the two signal arms.
pub fn zwm_visibility(setup: &ZwmSetup, method: Method, n_phi: usize) -> Result<ZwmResult> {
    if n_phi < 2 {
        return Err(PdcError::InvalidParameter(format!(
            "need at least 2 fringe samples, got {n_phi}"
        )));
    }
    let m = zwm_transfer(setup, method)?;
    let mat = m.matrix();
    let n0: f64 = mat.row(ZWM_S1).iter().map(|z| z.norm_sqr()).sum();
    let n1: f64 = mat.row(ZWM_S2).iter().map(|z| z.norm_sqr()).sum();
    let cross: C64 = (0..m.dim())
        .map(|j| mat[(ZWM_S2, j)] * mat[(ZWM_S1, j)].conj())
        .sum();
    let mean_rate = 0.25 * (n0 + n1) - 0.5;
    let amplitude = 0.5 * cross.norm();

    let hi = (mean_rate + amplitude).max(0.0);
    let lo = (mean_rate - amplitude).max(0.0);
    let visibility = if hi + lo > 0.0 {
        (hi - lo) / (hi + lo)
    } else {
        0.0
    };

    let x = 0.5 * cross;
    let fringe = (0..n_phi)
        .map(|k| {
            let phi = TAU * k as f64 / n_phi as f64;
            let rate = mean_rate + (C64::from_polar(1.0, phi) * x).re;
            (phi, rate.max(0.0))
        })
        .collect();

    Ok(ZwmResult {
        visibility,
        transmission: setup.transmission,
        fringe,
        mean_rate,
        fringe_amplitude: amplitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::TransferMethod;
    use crate::phasematch::matched_triple;
    use nalgebra::DMatrix;

    fn reference() -> (DispersionModel, CrystalConfig) {
        (
            DispersionModel::linear(1.7, -0.02, 1.666, [0.02, 1.98]).unwrap(),
            CrystalConfig::new(64.0, 0.02).unwrap(),
        )
    }

    #[test]
    fn dark_without_pump() {
        let (model, _) = reference();
        let crystal = CrystalConfig::new(64.0, 0.0).unwrap();
        let grid = [0.4, 0.5, 0.6];
        for curve in [
            pdc_rainbow(&model, &crystal, &grid, Method::Exact),
            puc_satellite(&model, &crystal, &grid, Method::Exact),
        ] {
            for p in curve.points.iter().filter(|p| p.is_ok()) {
                assert_eq!(p.count_signal, Some(0.0));
                assert_eq!(p.count_conjugate, Some(0.0));
            }
        }
    }

    #[test]
    fn pdc_both_channels_light() {
        let (model, crystal) = reference();
        let grid: Vec<f64> = (0..11).map(|k| 0.4 + 0.02 * k as f64).collect();
        let curve = pdc_rainbow(&model, &crystal, &grid, Method::Exact);
        assert!(curve.points.iter().any(|p| p.is_ok()));
        for p in curve.points.iter().filter(|p| p.is_ok()) {
            assert!(p.count_signal.unwrap() > 0.0);
            assert!(p.count_conjugate.unwrap() > 0.0);
        }
    }

    #[test]
    fn photon_pair_limits() {
        assert_eq!(photon_pair_intensity(0.0, 0.3, 2.0), 0.0);
        assert!((photon_pair_intensity(0.1, 0.0, 2.0) - 0.04).abs() < 1e-16);
        // first sinc zero at dd L / 2 = pi
        assert!(photon_pair_intensity(0.1, std::f64::consts::PI, 2.0) < 1e-32);
    }

    #[test]
    fn summary_needs_half_point() {
        let (model, crystal) = reference();
        let grid = [0.45, 0.5, 0.55];
        let pdc = pdc_rainbow(&model, &crystal, &grid, Method::Exact);
        let puc = puc_satellite(&model, &crystal, &grid, Method::Exact);
        let s = rainbow_summary(&pdc, &puc).unwrap();
        assert_eq!(s.theta_d, pdc.points[1].theta.unwrap());
        assert_eq!(s.s_puc / s.s_pdc, s.ratio_intensity_at_half);

        let off = [0.45, 0.55];
        let pdc = pdc_rainbow(&model, &crystal, &off, Method::Exact);
        assert!(rainbow_summary(&pdc, &puc).is_none());
    }

    fn zwm(t: f64, loss: LossModel) -> ZwmResult {
        let model = DispersionModel::constant(1.6, 1.6, [0.02, 1.98]).unwrap();
        let (_, triple) = matched_triple(&model, 0.5, Process::Down).unwrap();
        let slab = CrystalConfig::new(1.0, 0.05).unwrap();
        let setup = ZwmSetup {
            slabs: [slab, slab],
            transmission: t,
            triple,
            loss,
        };
        zwm_visibility(&setup, Method::Exact, 64).unwrap()
    }

    #[test]
    fn zwm_blocked_idler() {
        let r = zwm(0.0, LossModel::NoisePort);
        assert_eq!(r.visibility, 0.0);
        assert_eq!(r.fringe_amplitude, 0.0);
    }

    /// Balanced beam splitter on the two signal arms with phase `phi` on s2.
    fn combiner(phi: f64) -> TransferMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let e = C64::from_polar(h, phi);
        let mut m = DMatrix::<C64>::identity(4, 4);
        m[(ZWM_S1, ZWM_S1)] = C64::from(h);
        m[(ZWM_S1, ZWM_S2)] = e;
        m[(ZWM_S2, ZWM_S1)] = C64::from(h);
        m[(ZWM_S2, ZWM_S2)] = -e;
        TransferMatrix::new(m, ZWM_METRIC.to_vec(), TransferMethod::Cascade, true)
            .expect("4x4 combiner is well formed")
    }

    #[test]
    fn zwm_fringe_matches_combiner_cascade() {
        let (model, _) = reference();
        let (_, triple) = matched_triple(&model, 0.5, Process::Down).unwrap();
        let slab = CrystalConfig::new(64.0, 0.01).unwrap();
        let setup = ZwmSetup {
            slabs: [slab, slab],
            transmission: 0.6,
            triple,
            loss: LossModel::NoisePort,
        };
        let m = zwm_transfer(&setup, Method::Exact).unwrap();
        let r = zwm_visibility(&setup, Method::Exact, 16).unwrap();
        for &(phi, rate) in &r.fringe {
            let full = cascade(&[Element::Slab(m.clone()), Element::Slab(combiner(phi))]).unwrap();
            let direct = analytic_moments(&full).modes[ZWM_S1].count_rate;
            assert!((rate - direct).abs() < 1e-12, "{phi}: {rate} vs {direct}");
        }
    }

    #[test]
    fn zwm_fringe_matches_decomposition() {
        let r = zwm(0.6, LossModel::NoisePort);
        let hi = r.fringe.iter().map(|f| f.1).fold(f64::MIN, f64::max);
        let lo = r.fringe.iter().map(|f| f.1).fold(f64::MAX, f64::min);
        assert!((hi - (r.mean_rate + r.fringe_amplitude)).abs() < 1e-12);
        assert!((lo - (r.mean_rate - r.fringe_amplitude)).abs() < 1e-12);
        assert!((r.visibility - 0.6).abs() < 1e-3);
    }

    #[test]
    fn zwm_bare_loss_biases_visibility() {
        // without the noise port the second crystal sees attenuated vacuum,
        // giving V = 4t / (3 + t^2) at leading order
        let t = 0.5;
        let r = zwm(t, LossModel::Bare);
        assert!((r.visibility - 4.0 * t / (3.0 + t * t)).abs() < 1e-3);
    }

    #[test]
    fn zwm_rejects_bad_transmission() {
        let model = DispersionModel::constant(1.6, 1.6, [0.02, 1.98]).unwrap();
        let (_, triple) = matched_triple(&model, 0.5, Process::Down).unwrap();
        let slab = CrystalConfig::new(1.0, 0.05).unwrap();
        let setup = ZwmSetup {
            slabs: [slab, slab],
            transmission: 1.2,
            triple,
            loss: LossModel::NoisePort,
        };
        assert!(zwm_visibility(&setup, Method::Exact, 16).is_err());
    }
}
