//! Zeropoint input ensemble, output moments and threshold detection.
//!
//! Every input mode carries an independent circular complex Gaussian
//! amplitude with `<|a|^2> = 1/2` (half a photon in flux units). Detectors
//! register only the excess of the mean output intensity over that level.
//!
//! # Sampler
//!
//! Monte Carlo amplitudes come from the ChaCha20 block function
//! (`rand_chacha::ChaCha20Rng`). The 256-bit key is the little-endian run
//! seed in bytes 0..8 and zeros elsewhere; the stream id is the shot index
//! and the word position is `4 * mode`. Each amplitude consumes two `u64`
//! words `(u1, u2)` and is built by Box-Muller:
//!
//! ```text
//! r   = 0.5 * sqrt(-2 ln(((u1 >> 11) + 1) * 2^-53))
//! phi = 2 pi * (u2 >> 11) * 2^-53
//! a   = r (cos phi + i sin phi)
//! ```
//!
//! so a draw depends only on `(seed, shot, mode)`.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{TransferMatrix, C64};
use crate::error::{PdcError, Result};

/// Mean zeropoint intensity per mode.
pub const ZEROPOINT_INTENSITY: f64 = 0.5;
/// Minimum shots accepted by [`monte_carlo_moments`].
pub const MIN_SHOTS: usize = 100;
/// Shots per reduction block. Fixed so sums do not depend on thread count.
const BLOCK_SHOTS: usize = 1024;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VacuumEnsemble {
    pub n_modes: usize,
    pub seed: u64,
    pub shots: usize,
}

/// Counter-addressed zeropoint amplitude generator.
#[derive(Debug, Clone)]
pub struct ZeropointSampler {
    rng: ChaCha20Rng,
}

impl ZeropointSampler {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        ZeropointSampler {
            rng: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn amplitude(&mut self, shot: u64, mode: usize) -> C64 {
        self.rng.set_stream(shot);
        self.rng.set_word_pos(4 * mode as u128);
        let u1 = self.rng.next_u64();
        let u2 = self.rng.next_u64();
        let uniform_open = ((u1 >> 11) + 1) as f64 * TWO_POW_M53;
        let uniform = (u2 >> 11) as f64 * TWO_POW_M53;
        let r = 0.5 * (-2.0 * uniform_open.ln()).sqrt();
        C64::from_polar(r, std::f64::consts::TAU * uniform)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMoments {
    pub mode: String,
    pub mean_intensity: f64,
    /// `mean_intensity - 1/2`, signed.
    pub above_threshold: f64,
    pub count_rate: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnsembleMoments {
    pub modes: Vec<ModeMoments>,
}

impl EnsembleMoments {
    fn from_means(means: &[f64], stderr: Option<&[f64]>) -> Self {
        let n = means.len();
        let modes = means
            .iter()
            .enumerate()
            .map(|(i, &mean)| {
                let above = mean - ZEROPOINT_INTENSITY;
                ModeMoments {
                    mode: mode_label(n, i),
                    mean_intensity: mean,
                    above_threshold: above,
                    count_rate: above.max(0.0),
                    stderr: stderr.map(|s| s[i]),
                }
            })
            .collect();
        EnsembleMoments { modes }
    }

    pub fn above_threshold(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.above_threshold).collect()
    }

    pub fn mean_intensity(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.mean_intensity).collect()
    }
}

/// `a`, `b`, `c` for the three-mode space, indices otherwise.
pub fn mode_label(n_modes: usize, index: usize) -> String {
    match (n_modes, index) {
        (3, 0) => "a".into(),
        (3, 1) => "b".into(),
        (3, 2) => "c".into(),
        _ => index.to_string(),
    }
}

/// `input_intensity * sum_j |M_ij|^2` for independent zero-mean inputs of
/// equal intensity.
pub fn output_intensities(m: &TransferMatrix, input_intensity: f64) -> Vec<f64> {
    let mat = m.matrix();
    (0..m.dim())
        .map(|i| input_intensity * mat.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect()
}

pub fn analytic_moments(m: &TransferMatrix) -> EnsembleMoments {
    EnsembleMoments::from_means(&output_intensities(m, ZEROPOINT_INTENSITY), None)
}

/// Above-threshold intensity predicted by the metric: for a metric-preserving
/// `M`, `S_i = sum over j of opposite metric sign of |M_ij|^2`.
pub fn threshold_identity(m: &TransferMatrix) -> Vec<f64> {
    let mat = m.matrix();
    let eta = m.metric();
    (0..m.dim())
        .map(|i| {
            (0..m.dim())
                .filter(|&j| eta[j] != eta[i])
                .map(|j| mat[(i, j)].norm_sqr())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Per-block first and second moments of `|out_i|^2`.
fn block_sums(m: &TransferMatrix, seed: u64, shots: std::ops::Range<usize>) -> Vec<(f64, f64)> {
    let n = m.dim();
    let mat = m.matrix();
    let mut sampler = ZeropointSampler::new(seed);
    let mut input = vec![C64::ZERO; n];
    let mut sums = vec![(Neumaier::default(), Neumaier::default()); n];
    for shot in shots {
        for (j, z) in input.iter_mut().enumerate() {
            *z = sampler.amplitude(shot as u64, j);
        }
        for (i, (s1, s2)) in sums.iter_mut().enumerate() {
            let out: C64 = (0..n).map(|j| mat[(i, j)] * input[j]).sum();
            let x = out.norm_sqr();
            s1.add(x);
            s2.add(x * x);
        }
    }
    sums.into_iter()
        .map(|(a, b)| (a.value(), b.value()))
        .collect()
}

/// Sampled output moments. Depends only on `(seed, shots, M)`.
pub fn monte_carlo_moments(m: &TransferMatrix, ens: &VacuumEnsemble) -> Result<EnsembleMoments> {
    if ens.shots < MIN_SHOTS {
        return Err(PdcError::InvalidParameter(format!(
            "need at least {MIN_SHOTS} shots, got {}",
            ens.shots
        )));
    }
    if ens.n_modes != m.dim() {
        return Err(PdcError::DimensionMismatch {
            expected: m.dim(),
            got: ens.n_modes,
        });
    }
    let n_blocks = ens.shots.div_ceil(BLOCK_SHOTS);
    let blocks: Vec<Vec<(f64, f64)>> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_SHOTS;
            let end = (start + BLOCK_SHOTS).min(ens.shots);
            block_sums(m, ens.seed, start..end)
        })
        .collect();

    let n = m.dim();
    let shots = ens.shots as f64;
    let mut means = Vec::with_capacity(n);
    let mut errs = Vec::with_capacity(n);
    for i in 0..n {
        let mut s1 = Neumaier::default();
        let mut s2 = Neumaier::default();
        for block in &blocks {
            s1.add(block[i].0);
            s2.add(block[i].1);
        }
        let mean = s1.value() / shots;
        let var = ((s2.value() - shots * mean * mean) / (shots - 1.0)).max(0.0);
        means.push(mean);
        errs.push((var / shots).sqrt());
    }
    Ok(EnsembleMoments::from_means(&means, Some(&errs)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub mode: String,
    pub count_rate: f64,
    pub dark: bool,
}

/// Threshold detection: counts are the clamped above-zeropoint intensity,
/// modes at or below zeropoint are dark.
pub fn detect(moments: &EnsembleMoments) -> Vec<Detection> {
    moments
        .modes
        .iter()
        .map(|m| Detection {
            mode: m.mode.clone(),
            count_rate: m.above_threshold.max(0.0),
            dark: m.above_threshold <= 0.0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{
        exact_three_mode, exact_two_mode_down, exact_two_mode_up, Couplings, TransferMethod,
        THREE_MODE_METRIC,
    };

    fn identity3() -> TransferMatrix {
        TransferMatrix::identity(THREE_MODE_METRIC.to_vec(), TransferMethod::Exact3)
    }

    #[test]
    fn identity_is_vacuum() {
        let m = analytic_moments(&identity3());
        for mode in &m.modes {
            assert_eq!(mode.mean_intensity, 0.5);
            assert_eq!(mode.above_threshold, 0.0);
            assert_eq!(mode.count_rate, 0.0);
        }
        assert!(detect(&m).iter().all(|d| d.dark && d.count_rate == 0.0));
        assert_eq!(m.modes[1].mode, "b");
    }

    #[test]
    fn matched_pdc_gives_sinh_squared() {
        let m = exact_two_mode_down(0.2, 0.0, 4.0).unwrap();
        let s = analytic_moments(&m).above_threshold();
        let expected = 0.8f64.sinh().powi(2);
        assert!((s[0] - expected).abs() < 1e-14);
        assert!((s[1] - expected).abs() < 1e-14);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn pure_conversion_is_dark() {
        let m = exact_two_mode_up(0.3, 0.4, 6.0).unwrap();
        for s in analytic_moments(&m).above_threshold() {
            assert!(s.abs() < 1e-15);
        }
    }

    #[test]
    fn threshold_identity_matches() {
        let c = Couplings {
            kappa_d: 0.2,
            kappa_u: 0.15,
            delta_d: 0.3,
            delta_u: -0.1,
        };
        let m = exact_three_mode(&c, 5.0).unwrap();
        let s = analytic_moments(&m).above_threshold();
        let predicted = threshold_identity(&m);
        for (a, b) in s.iter().zip(&predicted) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((predicted[0] - m.get(0, 1).norm_sqr()).abs() < 1e-15);
        assert!((predicted[2] - m.get(2, 1).norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn intensities_scale_with_input() {
        let m = exact_two_mode_down(0.1, 0.2, 3.0).unwrap();
        let one = output_intensities(&m, 0.5);
        let two = output_intensities(&m, 1.0);
        for (a, b) in one.iter().zip(&two) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn detection_passes_rates_through() {
        let moments = EnsembleMoments {
            modes: vec![
                ModeMoments {
                    mode: "a".into(),
                    mean_intensity: 0.54,
                    above_threshold: 0.04,
                    count_rate: 0.04,
                    stderr: None,
                },
                ModeMoments {
                    mode: "c".into(),
                    mean_intensity: 0.49,
                    above_threshold: -0.01,
                    count_rate: 0.0,
                    stderr: None,
                },
            ],
        };
        let d = detect(&moments);
        assert_eq!(d[0].count_rate, 0.04);
        assert!(!d[0].dark);
        assert!(d[1].dark);
        assert_eq!(d[1].count_rate, 0.0);
    }

    #[test]
    fn sampler_is_addressable() {
        let mut s = ZeropointSampler::new(7);
        let x = s.amplitude(3, 1);
        let _ = s.amplitude(10, 0);
        let mut fresh = ZeropointSampler::new(7);
        assert_eq!(fresh.amplitude(3, 1), x);
        assert_ne!(fresh.amplitude(3, 2), x);
        assert_ne!(ZeropointSampler::new(8).amplitude(3, 1), x);
    }

    #[test]
    fn monte_carlo_guards() {
        let m = identity3();
        let few = VacuumEnsemble {
            n_modes: 3,
            seed: 1,
            shots: 99,
        };
        assert!(monte_carlo_moments(&m, &few).is_err());
        let wrong = VacuumEnsemble {
            n_modes: 2,
            seed: 1,
            shots: 1000,
        };
        assert!(matches!(
            monte_carlo_moments(&m, &wrong),
            Err(PdcError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn json_shape() {
        let m = analytic_moments(&identity3());
        let v = serde_json::to_value(&m).unwrap();
        let first = &v[0];
        for key in [
            "mode",
            "mean_intensity",
            "above_threshold",
            "count_rate",
            "stderr",
        ] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
    }
}
