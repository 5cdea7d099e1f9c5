//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test -p pdc-core --test acceptance -- --nocapture --test-threads=1`.

mod common;

use common::{max_abs, max_abs_diff, reference_model, sinc, Draw};
use pdc_core::config::RunConfig;
use pdc_core::coupling::{
    exact_three_mode, exact_two_mode_down, exact_two_mode_up, ode_transfer, perturb2_transfer,
    Couplings, CrystalConfig, Method, DEFAULT_ODE_STEPS, MODE_A, MODE_C,
};
use pdc_core::dispersion::DispersionModel;
use pdc_core::ensemble::{analytic_moments, detect, monte_carlo_moments, VacuumEnsemble};
use pdc_core::phasematch::{mismatch, rainbow_locus, solve_theta_d, Process};
use pdc_core::scenarios::{
    pdc_rainbow, puc_satellite, rainbow_summary, solve_point, zwm_visibility, LossModel, ZwmSetup,
    HALF_PUMP,
};

fn report(n: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} | {detail}");
}

#[test]
fn criterion_1_metric_preservation() {
    const TOL: f64 = 1e-10;
    let mut draw = Draw::new(1);
    let mut worst = [0.0f64; 4];
    let mut fails = [0usize; 4];
    for _ in 0..1000 {
        let (c, l) = draw.couplings();
        let built = [
            exact_two_mode_down(c.kappa_d, c.delta_d, l).unwrap(),
            exact_two_mode_up(c.kappa_u, c.delta_u, l).unwrap(),
            exact_three_mode(&c, l).unwrap(),
            ode_transfer(&c, l, DEFAULT_ODE_STEPS).unwrap(),
        ];
        for (k, m) in built.iter().enumerate() {
            let d = m.metric_defect();
            worst[k] = worst[k].max(d);
            if !(d <= TOL) {
                fails[k] += 1;
            }
        }
    }
    let pass = fails.iter().all(|&f| f == 0);
    report(
        1,
        pass,
        &format!(
            "max defect exact2_down={:.3e} ({} over), exact2_up={:.3e} ({} over), \
             exact3={:.3e} ({} over), ode={:.3e} ({} over), tol={TOL:e}",
            worst[0], fails[0], worst[1], fails[1], worst[2], fails[2], worst[3], fails[3]
        ),
    );
    assert!(
        pass,
        "metric defect above {TOL:e}: {worst:?}, counts {fails:?}"
    );
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn criterion_2_oracle_equivalence() {
    const TOL: f64 = 1e-8;
    let mut draw = Draw::new(2);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let (c, l) = draw.couplings();
        let (exact, ode) = if k % 2 == 0 {
            let c = c.down_only();
            (
                exact_two_mode_down(c.kappa_d, c.delta_d, l).unwrap(),
                ode_transfer(&c, l, DEFAULT_ODE_STEPS).unwrap(),
            )
        } else {
            let c = c.up_only();
            (
                exact_two_mode_up(c.kappa_u, c.delta_u, l).unwrap(),
                ode_transfer(&c, l, DEFAULT_ODE_STEPS).unwrap(),
            )
        };
        let rel = max_abs_diff(exact.matrix(), ode.matrix()) / max_abs(exact.matrix());
        worst = worst.max(rel);
    }

    let model = reference_model();
    let (_, triple) = pdc_core::phasematch::matched_triple(&model, 0.4, Process::Down).unwrap();
    let length = 64.0;
    let gls: Vec<f64> = (0..8).map(|k| 0.01 * 20f64.powf(k as f64 / 7.0)).collect();
    let errs: Vec<f64> = gls
        .iter()
        .map(|gl| {
            let crystal = CrystalConfig::new(length, gl / length).unwrap();
            let c = Couplings::from_triple(&triple, &crystal);
            let p = perturb2_transfer(&c, length).unwrap();
            let o = ode_transfer(&c, length, DEFAULT_ODE_STEPS).unwrap();
            max_abs_diff(p.matrix(), o.matrix())
        })
        .collect();
    let slope = log_log_slope(&gls, &errs);

    let pass = worst <= TOL && (slope - 3.0).abs() <= 0.3;
    report(
        2,
        pass,
        &format!("max rel exact2 vs rk4={worst:.3e} (tol {TOL:e}), perturb2 slope={slope:.4}"),
    );
    assert!(worst <= TOL, "exact vs RK4 relative error {worst:e}");
    assert!((slope - 3.0).abs() <= 0.3, "perturb2 error slope {slope}");
}

#[test]
fn criterion_3_photon_pair_equivalence() {
    let models = [
        reference_model(),
        DispersionModel::constant(1.62, 1.60, [0.02, 1.98]).unwrap(),
    ];
    let mut worst_ratio: f64 = 0.0;
    let mut n = 0;
    for model in &models {
        for &g in &[1e-3, 3e-3, 1e-2] {
            for &l in &[4.0, 16.0, 32.0] {
                let crystal = CrystalConfig::new(l, g).unwrap();
                for k in 1..=19 {
                    let omega = 0.05 * k as f64;
                    for process in [Process::Down, Process::Up] {
                        let Ok(p) = solve_point(model, &crystal, omega, process, Method::Exact)
                        else {
                            continue;
                        };
                        let c = p.couplings;
                        let s = analytic_moments(&p.transfer).above_threshold()[MODE_A];
                        let kl = c.kappa_d * l;
                        let photon = kl * kl * sinc(c.delta_d * l / 2.0).powi(2);
                        let bound = 10.0 * kl.powi(4);
                        let err = (s - photon).abs();
                        worst_ratio = worst_ratio.max(err / bound);
                        n += 1;
                    }
                }
            }
        }
    }
    let pass = n > 0 && worst_ratio <= 1.0;
    report(
        3,
        pass,
        &format!("{n} configs, max |S - photon| / 10(kL)^4 = {worst_ratio:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_vacuum_sanity() {
    let model = reference_model();
    let dark = CrystalConfig::new(64.0, 0.0).unwrap();
    let grid: Vec<f64> = (0..61).map(|k| 0.2 + 0.01 * k as f64).collect();
    let mut all_zero = true;
    let mut points = 0;
    for method in [Method::Exact, Method::Perturb2, Method::Ode { steps: 1000 }] {
        for curve in [
            pdc_rainbow(&model, &dark, &grid, method),
            puc_satellite(&model, &dark, &grid, method),
        ] {
            for p in curve.points.iter().filter(|p| p.is_ok()) {
                points += 1;
                all_zero &= p.count_signal == Some(0.0) && p.count_conjugate == Some(0.0);
            }
        }
        let p = solve_point(&model, &dark, 0.5, Process::Down, method).unwrap();
        all_zero &= detect(&analytic_moments(&p.transfer))
            .iter()
            .all(|d| d.count_rate == 0.0 && d.dark);
    }
    let (_, triple) = pdc_core::phasematch::matched_triple(&model, 0.5, Process::Down).unwrap();
    let zwm = zwm_visibility(
        &ZwmSetup {
            slabs: [dark, dark],
            transmission: 0.5,
            triple,
            loss: LossModel::NoisePort,
        },
        Method::Exact,
        16,
    )
    .unwrap();
    all_zero &= zwm.fringe.iter().all(|&(_, r)| r == 0.0);

    let mut draw = Draw::new(4);
    let mut worst_puc: f64 = 0.0;
    for _ in 0..200 {
        let (c, l) = draw.couplings();
        for m in [
            exact_two_mode_up(c.kappa_u, c.delta_u, l).unwrap(),
            ode_transfer(&c.up_only(), l, DEFAULT_ODE_STEPS).unwrap(),
        ] {
            for s in analytic_moments(&m).above_threshold() {
                worst_puc = worst_puc.max(s.abs());
            }
        }
    }
    let pass = all_zero && points > 0 && worst_puc <= 1e-12;
    report(
        4,
        pass,
        &format!("g=0 counts all exactly zero: {all_zero} ({points} points), max |S| pure up = {worst_puc:.3e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_monte_carlo_consistency() {
    const SHOTS: usize = 100_000;
    let mut draw = Draw::new(5);
    let mut worst_z: f64 = 0.0;
    for k in 0..20 {
        let c = Couplings {
            kappa_d: draw.uniform(0.0, 0.5),
            kappa_u: draw.uniform(0.0, 0.5),
            delta_d: draw.uniform(-2.0, 2.0),
            delta_u: draw.uniform(-2.0, 2.0),
        };
        let l = draw.uniform(0.1, 5.0);
        let m = exact_three_mode(&c, l).unwrap();
        let ens = VacuumEnsemble {
            n_modes: 3,
            seed: 1000 + k,
            shots: SHOTS,
        };
        let mc = monte_carlo_moments(&m, &ens).unwrap();
        let an = analytic_moments(&m);
        for (s, a) in mc.modes.iter().zip(&an.modes) {
            let se = s.stderr.expect("sampled moments carry a standard error");
            let z = (s.mean_intensity - a.mean_intensity).abs() / se;
            worst_z = worst_z.max(z);
        }
    }

    let m = exact_three_mode(
        &Couplings {
            kappa_d: 0.3,
            kappa_u: 0.1,
            delta_d: 0.2,
            delta_u: -0.4,
        },
        3.0,
    )
    .unwrap();
    let ens = VacuumEnsemble {
        n_modes: 3,
        seed: 77,
        shots: SHOTS,
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| serde_json::to_vec(&monte_carlo_moments(&m, &ens).unwrap()).unwrap())
    };
    let (a, b, c) = (run(1), run(1), run(4));
    let identical = a == b && a == c;

    let pass = worst_z <= 5.0 && identical;
    report(
        5,
        pass,
        &format!("max |mc - analytic| / stderr = {worst_z:.3} over 20 configs, byte-identical reruns: {identical}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_phase_matching() {
    let models = [
        reference_model(),
        DispersionModel::constant(1.62, 1.60, [0.02, 1.98]).unwrap(),
        DispersionModel::linear(1.65, -0.05, 1.6, [0.02, 1.98]).unwrap(),
    ];
    let grid: Vec<f64> = (1..200).map(|k| k as f64 / 200.0).collect();
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    for model in &models {
        for process in [Process::Down, Process::Up] {
            for p in rainbow_locus(model, &grid, process) {
                if let Ok(theta) = p.theta {
                    let d = mismatch(model, p.omega, theta, process).unwrap();
                    worst = worst.max(d.abs());
                    solved += 1;
                }
            }
        }
    }
    let closed = DispersionModel::constant(1.62, 1.60, [0.02, 1.98]).unwrap();
    let theta = solve_theta_d(&closed, HALF_PUMP).unwrap();
    let expect = (1.60f64 / 1.62).acos();
    let closed_err = (theta - expect).abs();

    let pass = solved > 0 && worst <= 1e-10 && closed_err <= 1e-9;
    report(
        6,
        pass,
        &format!(
            "{solved} solved angles, max |mismatch| = {worst:.3e}; theta_d = {theta:.12} vs arccos(1.60/1.62) = {expect:.12} (err {closed_err:.3e})"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_zwm_visibility_law() {
    let model = reference_model();
    let (_, triple) =
        pdc_core::phasematch::matched_triple(&model, HALF_PUMP, Process::Down).unwrap();
    let length = 64.0;
    let crystal = CrystalConfig::new(length, 0.05 / length).unwrap();
    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let r = zwm_visibility(
            &ZwmSetup {
                slabs: [crystal, crystal],
                transmission: t,
                triple,
                loss: LossModel::NoisePort,
            },
            Method::Exact,
            64,
        )
        .unwrap();
        worst = worst.max((r.visibility - t).abs());
        detail.push_str(&format!(" V({t})={:.5}", r.visibility));
    }
    let pass = worst <= 1e-2;
    report(
        7,
        pass,
        &format!("gL=0.05, max |V - t| = {worst:.3e};{detail}"),
    );
    assert!(pass);
}

#[test]
fn criterion_8_reference_soft_targets() {
    let config = RunConfig::reference();
    let grid = config.omega_grid();
    let pdc = pdc_rainbow(&config.dispersion, &config.crystal, &grid, config.method());
    let puc = puc_satellite(&config.dispersion, &config.crystal, &grid, config.method());
    let summary = rainbow_summary(&pdc, &puc).expect("both processes match at half pump");
    let angle = summary.ratio_angle_at_half;
    let intensity = summary.ratio_intensity_at_half;
    let pass = (1.5..=3.5).contains(&angle) && (0.005..=0.15).contains(&intensity);
    report(
        8,
        pass,
        &format!(
            "theta_u/theta_d = {angle:.6} (target {}), S_puc/S_pdc = {intensity:.6} (target {})",
            summary.target_angle_ratio, summary.target_intensity_ratio
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_sum_channel_sign() {
    let config = RunConfig::reference();
    let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
    let mut lowest = f64::INFINITY;
    let mut n = 0;
    for method in [
        Method::Exact,
        Method::Ode {
            steps: DEFAULT_ODE_STEPS,
        },
    ] {
        let puc = puc_satellite(&config.dispersion, &config.crystal, &grid, method);
        for s in puc.points.iter().filter_map(|p| p.s_conjugate) {
            lowest = lowest.min(s);
            n += 1;
        }
        let pdc = pdc_rainbow(&config.dispersion, &config.crystal, &grid, method);
        for p in pdc.points.iter().filter(|p| p.is_ok()) {
            let sp = solve_point(
                &config.dispersion,
                &config.crystal,
                p.omega,
                Process::Down,
                method,
            )
            .unwrap();
            lowest = lowest.min(analytic_moments(&sp.transfer).above_threshold()[MODE_C]);
            n += 1;
        }
    }
    let pass = n > 0 && lowest >= -1e-9;
    report(
        9,
        pass,
        &format!("{n} samples of the sum-frequency channel, min signed S = {lowest:.6e}"),
    );
    assert!(pass);
}
