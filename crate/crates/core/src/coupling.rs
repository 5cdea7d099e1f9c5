//! Transfer matrices of a pumped slab acting on `(a, b*, c)`.
//!
//! Amplitudes are in photon-flux units. Inside the slab the three modes obey
//!
//! ```text
//! da/dz  =  i kd e^{ i dd z} b*  +  i ku e^{-i du z} c
//! db*/dz = -i kd e^{-i dd z} a
//! dc/dz  =  i ku e^{ i du z} a
//! ```
//!
//! with `kd`, `ku` the down/up coupling constants and `dd`, `du` the
//! longitudinal mismatches. The flow preserves the indefinite form
//! `|a|^2 - |b|^2 + |c|^2`, so every exact transfer matrix satisfies
//! `M^H eta M = eta` with `eta = diag(+1, -1, +1)`.
//!
//! Phase convention: the two-mode diagonal entries carry `e^{+i d L/2}` on
//! the `a` row (down-conversion) and `e^{-i d L/2}` on the `a` row
//! (up-conversion); only squared moduli enter the observables.

use std::fmt;

use nalgebra::{Complex, DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{PdcError, Result};
use crate::phasematch::InteractionTriple;

pub type C64 = Complex<f64>;

/// Default RK4 step count.
pub const DEFAULT_ODE_STEPS: usize = 4096;
/// Smallest accepted RK4 step count.
pub const MIN_ODE_STEPS: usize = 1000;
/// `g * L` below which the slab counts as perturbative.
pub const PERTURBATIVE_GL: f64 = 0.3;

/// Mode indices in the three-mode space.
pub const MODE_A: usize = 0;
pub const MODE_B: usize = 1;
pub const MODE_C: usize = 2;

/// Metric signature of `(a, b*, c)`.
pub const THREE_MODE_METRIC: [f64; 3] = [1.0, -1.0, 1.0];

const I: C64 = Complex { re: 0.0, im: 1.0 };

/// Nonlinear slab: thickness and pump-proportional coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCrystal", into = "RawCrystal")]
pub struct CrystalConfig {
    length: f64,
    g: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCrystal {
    #[serde(alias = "L")]
    length: f64,
    g: f64,
}

impl TryFrom<RawCrystal> for CrystalConfig {
    type Error = PdcError;

    fn try_from(raw: RawCrystal) -> Result<Self> {
        CrystalConfig::new(raw.length, raw.g)
    }
}

impl From<CrystalConfig> for RawCrystal {
    fn from(c: CrystalConfig) -> Self {
        RawCrystal {
            length: c.length,
            g: c.g,
        }
    }
}

impl CrystalConfig {
    pub fn new(length: f64, g: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(PdcError::InvalidParameter(format!(
                "crystal length must be > 0, got {length}"
            )));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(PdcError::InvalidParameter(format!(
                "coupling g must be >= 0, got {g}"
            )));
        }
        Ok(CrystalConfig { length, g })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn gl(&self) -> f64 {
        self.g * self.length
    }

    pub fn is_perturbative(&self) -> bool {
        self.gl() < PERTURBATIVE_GL
    }
}

/// Coupling constants and mismatches of one triple in one slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub kappa_d: f64,
    pub kappa_u: f64,
    pub delta_d: f64,
    pub delta_u: f64,
}

impl Couplings {
    pub fn from_triple(triple: &InteractionTriple, crystal: &CrystalConfig) -> Self {
        let (kappa_d, kappa_u) = coupling_constants(triple, crystal);
        Couplings {
            kappa_d,
            kappa_u,
            delta_d: triple.delta_d,
            delta_u: triple.delta_u,
        }
    }

    /// Same mismatches with the up-conversion partner decoupled.
    pub fn down_only(self) -> Self {
        Couplings {
            kappa_u: 0.0,
            ..self
        }
    }

    /// Same mismatches with the down-conversion partner decoupled.
    pub fn up_only(self) -> Self {
        Couplings {
            kappa_d: 0.0,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.kappa_d.is_finite()
            && self.kappa_u.is_finite()
            && self.kappa_d >= 0.0
            && self.kappa_u >= 0.0
            && self.delta_d.is_finite()
            && self.delta_u.is_finite();
        if ok {
            Ok(())
        } else {
            Err(PdcError::InvalidParameter(format!(
                "couplings must be finite with kappa >= 0: {self:?}"
            )))
        }
    }
}

/// `(kappa_d, kappa_u)`; the pump cosine feeds `g/2` into each channel and
/// the square-root factors convert field amplitudes to photon flux.
pub fn coupling_constants(triple: &InteractionTriple, crystal: &CrystalConfig) -> (f64, f64) {
    let half_g = 0.5 * crystal.g();
    let (a, b, c) = (&triple.a, &triple.b, &triple.c);
    let kd = half_g * ((a.omega * b.omega) / (a.kz * b.kz)).sqrt();
    let ku = half_g * ((a.omega * c.omega) / (a.kz * c.kz)).sqrt();
    (kd, ku)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMethod {
    Exact2Down,
    Exact2Up,
    Exact3,
    Perturb2,
    Ode,
    Cascade,
}

/// How a slab's transfer matrix is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Closed form (matrix exponential for three coupled modes).
    Exact,
    /// Identity plus first- and second-order Dyson terms.
    Perturb2,
    /// Fixed-step classical RK4.
    Ode { steps: usize },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Perturb2 => "perturb2",
            Method::Ode { .. } => "ode",
        }
    }

    pub fn parse(name: &str, ode_steps: usize) -> Result<Self> {
        match name {
            "exact" => Ok(Method::Exact),
            "perturb2" => Ok(Method::Perturb2),
            "ode" => Ok(Method::Ode { steps: ode_steps }),
            other => Err(PdcError::InvalidParameter(format!(
                "method must be one of exact|perturb2|ode, got {other:?}"
            ))),
        }
    }

    /// Three-mode transfer matrix over a slab of `length`.
    pub fn build(&self, couplings: &Couplings, length: f64) -> Result<TransferMatrix> {
        match *self {
            Method::Exact => exact_three_mode(couplings, length),
            Method::Perturb2 => perturb2_transfer(couplings, length),
            Method::Ode { steps } => ode_transfer(couplings, length, steps),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Linear map on mode amplitudes together with the metric it should keep.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    matrix: DMatrix<C64>,
    metric: Vec<f64>,
    method: TransferMethod,
    metric_preserving: bool,
}

impl TransferMatrix {
    pub fn new(
        matrix: DMatrix<C64>,
        metric: Vec<f64>,
        method: TransferMethod,
        metric_preserving: bool,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(PdcError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if metric.len() != matrix.nrows() {
            return Err(PdcError::DimensionMismatch {
                expected: matrix.nrows(),
                got: metric.len(),
            });
        }
        if metric.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(PdcError::InvalidParameter(
                "metric entries must be +1 or -1".into(),
            ));
        }
        Ok(TransferMatrix {
            matrix,
            metric,
            method,
            metric_preserving,
        })
    }

    pub fn identity(metric: Vec<f64>, method: TransferMethod) -> Self {
        let n = metric.len();
        TransferMatrix {
            matrix: DMatrix::identity(n, n),
            metric,
            method,
            metric_preserving: true,
        }
    }

    fn three_mode(m: Matrix3<C64>, method: TransferMethod, metric_preserving: bool) -> Self {
        TransferMatrix {
            matrix: DMatrix::from_iterator(3, 3, m.iter().copied()),
            metric: THREE_MODE_METRIC.to_vec(),
            method,
            metric_preserving,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn metric(&self) -> &[f64] {
        &self.metric
    }

    pub fn method(&self) -> TransferMethod {
        self.method
    }

    /// False for perturbative results and for cascades with bare losses.
    pub fn is_metric_preserving(&self) -> bool {
        self.metric_preserving
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// `max |(M^H eta M - eta)_ij|`.
    pub fn metric_defect(&self) -> f64 {
        let eta = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.metric.iter().map(|&s| C64::new(s, 0.0)),
        ));
        let g = self.matrix.adjoint() * &eta * &self.matrix - eta;
        g.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Sub-matrix on the listed modes, e.g. `[MODE_A, MODE_B]`.
    pub fn select(&self, modes: &[usize]) -> Result<TransferMatrix> {
        if let Some(&bad) = modes.iter().find(|&&m| m >= self.dim()) {
            return Err(PdcError::DimensionMismatch {
                expected: self.dim(),
                got: bad + 1,
            });
        }
        let n = modes.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| self.matrix[(modes[i], modes[j])]);
        let metric = modes.iter().map(|&m| self.metric[m]).collect();
        TransferMatrix::new(matrix, metric, self.method, self.metric_preserving)
    }

    /// Places this matrix on `slots` of a larger identity with `metric`.
    pub fn embed(&self, metric: &[f64], slots: &[usize]) -> Result<TransferMatrix> {
        if slots.len() != self.dim() {
            return Err(PdcError::DimensionMismatch {
                expected: self.dim(),
                got: slots.len(),
            });
        }
        let n = metric.len();
        let mut out = DMatrix::identity(n, n);
        for (i, &si) in slots.iter().enumerate() {
            if si >= n {
                return Err(PdcError::DimensionMismatch {
                    expected: n,
                    got: si + 1,
                });
            }
            if metric[si] != self.metric[i] {
                return Err(PdcError::InvalidParameter(format!(
                    "metric sign mismatch when embedding mode {i} into slot {si}"
                )));
            }
            for (j, &sj) in slots.iter().enumerate() {
                out[(si, sj)] = self.matrix[(i, j)];
            }
        }
        TransferMatrix::new(out, metric.to_vec(), self.method, self.metric_preserving)
    }
}

/// `cosh(sL)` and `sinh(sL)/s` for `s^2` of either sign.
fn hyperbolic_pair(s2: f64, length: f64) -> (f64, f64) {
    let x = s2 * length * length;
    if x.abs() < 1e-5 {
        // removable singularity of sinh(sL)/s
        let ch = 1.0 + x / 2.0 + x * x / 24.0;
        let sh = length * (1.0 + x / 6.0 + x * x / 120.0);
        (ch, sh)
    } else if s2 > 0.0 {
        let s = s2.sqrt();
        ((s * length).cosh(), (s * length).sinh() / s)
    } else {
        let s = (-s2).sqrt();
        ((s * length).cos(), (s * length).sin() / s)
    }
}

fn check_kappa(kappa: f64, delta: f64, length: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa >= 0.0 && delta.is_finite() && length.is_finite()) {
        return Err(PdcError::InvalidParameter(format!(
            "need finite kappa >= 0, delta, length; got ({kappa}, {delta}, {length})"
        )));
    }
    Ok(())
}

/// Parametric amplification on `(a, b*)`; `c` passes through.
pub fn exact_two_mode_down(kappa_d: f64, delta_d: f64, length: f64) -> Result<TransferMatrix> {
    check_kappa(kappa_d, delta_d, length)?;
    if kappa_d == 0.0 {
        return Ok(TransferMatrix::identity(
            THREE_MODE_METRIC.to_vec(),
            TransferMethod::Exact2Down,
        ));
    }
    let half = 0.5 * delta_d;
    let (ch, sh) = hyperbolic_pair(kappa_d * kappa_d - half * half, length);
    let phase = C64::from_polar(1.0, half * length);
    let diag = C64::new(ch, -half * sh);
    let m = Matrix3::new(
        phase * diag,
        I * phase * (kappa_d * sh),
        C64::ZERO,
        -I * phase.conj() * (kappa_d * sh),
        phase.conj() * diag.conj(),
        C64::ZERO,
        C64::ZERO,
        C64::ZERO,
        C64::ONE,
    );
    Ok(TransferMatrix::three_mode(
        m,
        TransferMethod::Exact2Down,
        true,
    ))
}

/// Frequency conversion on `(a, c)`; `b*` passes through.
pub fn exact_two_mode_up(kappa_u: f64, delta_u: f64, length: f64) -> Result<TransferMatrix> {
    check_kappa(kappa_u, delta_u, length)?;
    if kappa_u == 0.0 {
        return Ok(TransferMatrix::identity(
            THREE_MODE_METRIC.to_vec(),
            TransferMethod::Exact2Up,
        ));
    }
    let half = 0.5 * delta_u;
    let (co, si) = hyperbolic_pair(-(kappa_u * kappa_u + half * half), length);
    let phase = C64::from_polar(1.0, half * length);
    let diag = C64::new(co, half * si);
    let m = Matrix3::new(
        phase.conj() * diag,
        C64::ZERO,
        I * phase.conj() * (kappa_u * si),
        C64::ZERO,
        C64::ONE,
        C64::ZERO,
        I * phase * (kappa_u * si),
        C64::ZERO,
        phase * diag.conj(),
    );
    Ok(TransferMatrix::three_mode(
        m,
        TransferMethod::Exact2Up,
        true,
    ))
}

/// All three modes coupled at once.
///
/// In the co-rotating variables `(a, e^{i dd z} b*, e^{-i du z} c)` the flow
/// has a constant generator, so the slab is a single matrix exponential
/// followed by the phase rotation back to the lab frame.
pub fn exact_three_mode(couplings: &Couplings, length: f64) -> Result<TransferMatrix> {
    couplings.validate()?;
    check_kappa(0.0, 0.0, length)?;
    let Couplings {
        kappa_d: kd,
        kappa_u: ku,
        delta_d: dd,
        delta_u: du,
    } = *couplings;
    if kd == 0.0 && ku == 0.0 {
        return Ok(TransferMatrix::identity(
            THREE_MODE_METRIC.to_vec(),
            TransferMethod::Exact3,
        ));
    }
    let r = |x: f64| C64::new(x, 0.0);
    let generator = Matrix3::new(
        r(0.0),
        r(kd),
        r(ku),
        r(-kd),
        r(dd),
        r(0.0),
        r(ku),
        r(0.0),
        r(-du),
    ) * (I * length);
    let rotating = generator.exp();
    let back = Matrix3::from_diagonal(&nalgebra::Vector3::new(
        C64::ONE,
        C64::from_polar(1.0, -dd * length),
        C64::from_polar(1.0, du * length),
    ));
    Ok(TransferMatrix::three_mode(
        back * rotating,
        TransferMethod::Exact3,
        true,
    ))
}

fn generator_at(c: &Couplings, z: f64) -> Matrix3<C64> {
    let ed = C64::from_polar(1.0, c.delta_d * z);
    let eu = C64::from_polar(1.0, c.delta_u * z);
    Matrix3::new(
        C64::ZERO,
        I * ed * c.kappa_d,
        I * eu.conj() * c.kappa_u,
        -I * ed.conj() * c.kappa_d,
        C64::ZERO,
        C64::ZERO,
        I * eu * c.kappa_u,
        C64::ZERO,
        C64::ZERO,
    )
}

/// Classical RK4 on the lab-frame equations, propagating all three basis
/// columns at once.
pub fn ode_transfer(couplings: &Couplings, length: f64, steps: usize) -> Result<TransferMatrix> {
    couplings.validate()?;
    check_kappa(0.0, 0.0, length)?;
    if steps < MIN_ODE_STEPS {
        return Err(PdcError::StepCountTooSmall {
            steps,
            min: MIN_ODE_STEPS,
        });
    }
    let h = length / steps as f64;
    let mut m = Matrix3::<C64>::identity();
    for n in 0..steps {
        let z = n as f64 * h;
        let a0 = generator_at(couplings, z);
        let a_mid = generator_at(couplings, z + 0.5 * h);
        let a1 = generator_at(couplings, z + h);
        let k1 = a0 * m;
        let k2 = a_mid * (m + k1 * C64::new(0.5 * h, 0.0));
        let k3 = a_mid * (m + k2 * C64::new(0.5 * h, 0.0));
        let k4 = a1 * (m + k3 * C64::new(h, 0.0));
        m += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
    }
    Ok(TransferMatrix::three_mode(m, TransferMethod::Ode, true))
}

/// `int_0^L e^{i d z} dz = L e^{i d L/2} sinc(d L/2)`.
pub fn phase_integral(delta: f64, length: f64) -> C64 {
    let x = 0.5 * delta * length;
    let sinc = if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    };
    C64::from_polar(length * sinc, x)
}

/// `int_0^L e^{i d1 z} int_0^z e^{i d2 z'} dz' dz`.
///
/// Equals `L^2` times the second divided difference of `exp` at
/// `0, i d1 L, i (d1 + d2) L`, read off the exponential of a bidiagonal
/// matrix so that coincident nodes need no special casing.
pub fn nested_phase_integral(delta1: f64, delta2: f64, length: f64) -> C64 {
    let x1 = I * (delta1 * length);
    let x2 = I * ((delta1 + delta2) * length);
    let t = Matrix3::new(
        C64::ZERO,
        C64::ONE,
        C64::ZERO,
        C64::ZERO,
        x1,
        C64::ONE,
        C64::ZERO,
        C64::ZERO,
        x2,
    );
    t.exp()[(0, 2)] * (length * length)
}

/// `I + M1 + M2` from the Dyson series of the lab-frame equations.
pub fn perturb2_transfer(couplings: &Couplings, length: f64) -> Result<TransferMatrix> {
    couplings.validate()?;
    check_kappa(0.0, 0.0, length)?;
    let Couplings {
        kappa_d: kd,
        kappa_u: ku,
        delta_d: dd,
        delta_u: du,
    } = *couplings;
    if kd == 0.0 && ku == 0.0 {
        return Ok(TransferMatrix::identity(
            THREE_MODE_METRIC.to_vec(),
            TransferMethod::Perturb2,
        ));
    }
    let e = |d: f64| phase_integral(d, length);
    let f = |d1: f64, d2: f64| nested_phase_integral(d1, d2, length);

    let first = Matrix3::new(
        C64::ZERO,
        I * e(dd) * kd,
        I * e(-du) * ku,
        -I * e(-dd) * kd,
        C64::ZERO,
        C64::ZERO,
        I * e(du) * ku,
        C64::ZERO,
        C64::ZERO,
    );
    let second = Matrix3::new(
        f(dd, -dd) * (kd * kd) - f(-du, du) * (ku * ku),
        C64::ZERO,
        C64::ZERO,
        C64::ZERO,
        f(-dd, dd) * (kd * kd),
        f(-dd, -du) * (kd * ku),
        C64::ZERO,
        -f(du, dd) * (ku * kd),
        -f(du, -du) * (ku * ku),
    );
    Ok(TransferMatrix::three_mode(
        Matrix3::identity() + first + second,
        TransferMethod::Perturb2,
        false,
    ))
}

/// Loss on one mode between slabs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attenuator {
    pub mode: usize,
    pub transmission: f64,
    /// Vacuum mode mixed in to fill the lost fraction. `None` is a bare row
    /// scaling, which breaks the metric.
    pub noise_port: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Slab(TransferMatrix),
    Loss(Attenuator),
}

/// Ordered product of slabs and losses, first element acting first.
pub fn cascade(elements: &[Element]) -> Result<TransferMatrix> {
    let Some(first) = elements.iter().find_map(|e| match e {
        Element::Slab(m) => Some(m),
        Element::Loss(_) => None,
    }) else {
        return Err(PdcError::InvalidParameter(
            "cascade needs at least one slab".into(),
        ));
    };
    let metric = first.metric().to_vec();
    let n = metric.len();
    let mut acc = DMatrix::<C64>::identity(n, n);
    let mut preserving = true;

    for element in elements {
        match element {
            Element::Slab(m) => {
                if m.dim() != n {
                    return Err(PdcError::DimensionMismatch {
                        expected: n,
                        got: m.dim(),
                    });
                }
                if m.metric() != metric.as_slice() {
                    return Err(PdcError::InvalidParameter(
                        "cascade slabs use different metrics".into(),
                    ));
                }
                preserving &= m.is_metric_preserving();
                acc = m.matrix() * acc;
            }
            Element::Loss(att) => {
                let t = att.transmission;
                if !(0.0..=1.0).contains(&t) {
                    return Err(PdcError::InvalidParameter(format!(
                        "transmission must lie in [0, 1], got {t}"
                    )));
                }
                if att.mode >= n {
                    return Err(PdcError::DimensionMismatch {
                        expected: n,
                        got: att.mode + 1,
                    });
                }
                match att.noise_port {
                    None => {
                        preserving = false;
                        acc.row_mut(att.mode).scale_mut(t);
                    }
                    Some(port) => {
                        if port >= n || port == att.mode {
                            return Err(PdcError::InvalidParameter(format!(
                                "bad noise port {port} for mode {}",
                                att.mode
                            )));
                        }
                        if metric[port] != metric[att.mode] {
                            return Err(PdcError::InvalidParameter(
                                "noise port must share the attenuated mode's metric sign".into(),
                            ));
                        }
                        let r = (1.0 - t * t).max(0.0).sqrt();
                        let row_m = acc.row(att.mode).clone_owned();
                        let row_p = acc.row(port).clone_owned();
                        acc.set_row(att.mode, &(&row_m * C64::from(t) + &row_p * C64::from(r)));
                        acc.set_row(port, &(&row_p * C64::from(t) - &row_m * C64::from(r)));
                    }
                }
            }
        }
    }
    TransferMatrix::new(acc, metric, TransferMethod::Cascade, preserving)
}
