#![allow(dead_code)]

use pdc_core::coupling::{Couplings, C64};
use pdc_core::dispersion::DispersionModel;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic uniform draws for randomized test configurations.
pub struct Draw(ChaCha8Rng);

impl Draw {
    pub fn new(seed: u64) -> Self {
        Draw(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    pub fn couplings(&mut self) -> (Couplings, f64) {
        let c = Couplings {
            kappa_d: self.uniform(0.0, 0.5),
            kappa_u: self.uniform(0.0, 0.5),
            delta_d: self.uniform(-2.0, 2.0),
            delta_u: self.uniform(-2.0, 2.0),
        };
        (c, self.uniform(0.1, 20.0))
    }
}

pub fn reference_model() -> DispersionModel {
    DispersionModel::linear(1.7, -0.02, 1.666, [0.02, 1.98]).unwrap()
}

pub fn max_abs_diff(a: &nalgebra::DMatrix<C64>, b: &nalgebra::DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &nalgebra::DMatrix<C64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
