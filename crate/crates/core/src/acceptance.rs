//! End-to-end verification experiments. Each criterion runs a concrete
//! experiment at pinned resolution and tolerances and reports one pass/fail
//! outcome; `run_all` executes the whole suite.

use crate::constants::{c_one_of, q_poly, TheoryConstants};
use crate::curve::ClosedCurve;
use crate::diagnostics::{
    self, decay_report, evolution_residuals, image_deviation, length_law_residual,
    max_consecutive_increase, rescaled_curve,
};
use crate::flow::{gradient_check, run, DtPolicy, FlowConfig, Redistribution, RunResult, RunStatus};
use crate::geometry::{compute_geometry, poincare_margin, subtract_average};
use crate::solutions::{perturbed_circle, CircleSolution, LemniscateSolution, PerturbationMode};
use crate::vec2::Vec2;

use std::f64::consts::PI;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub details: String,
    pub seconds: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {}: {} ({:.1}s) — {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.details
        )
    }
}

fn finish(
    id: u32,
    name: &'static str,
    started: Instant,
    pass: bool,
    details: String,
) -> CriterionOutcome {
    CriterionOutcome {
        id,
        name,
        pass,
        details,
        seconds: started.elapsed().as_secs_f64(),
    }
}

/// Criterion 1: the simulated unit circle follows ρ(t) = (1 + 2t)^{1/4} to
/// 0.5% at every record over t ∈ [0, 40] at N = 256, in under two minutes.
pub fn criterion_circle_oracle() -> CriterionOutcome {
    let started = Instant::now();
    let sol = CircleSolution::new(1, 1.0, Vec2::ZERO).unwrap();
    let config = FlowConfig {
        t_end: 40.0,
        dt: DtPolicy::Adaptive { scale: 50.0 },
        record_stride: 500,
        ..FlowConfig::default()
    };
    let out = match run(&sol.curve_at(0.0, 256).unwrap(), &config) {
        Ok(o) => o,
        Err(e) => return finish(1, "circle oracle", started, false, format!("run failed: {e}")),
    };
    let completed = out.status == RunStatus::Completed;
    let mut max_rel = 0.0f64;
    for r in &out.records {
        let radius = r.length / (2.0 * PI);
        let exact = sol.radius(r.t);
        max_rel = max_rel.max((radius - exact).abs() / exact);
    }
    let final_radius = out.records.last().unwrap().length / (2.0 * PI);
    let final_rel = (final_radius - 3.0).abs() / 3.0;
    let seconds = started.elapsed().as_secs_f64();
    let pass = completed && max_rel <= 5e-3 && final_rel <= 5e-3 && seconds < 120.0;
    finish(
        1,
        "circle oracle",
        started,
        pass,
        format!(
            "max radius error {:.2e}, final radius {:.6} (target 3), {} steps",
            max_rel, final_radius, out.steps
        ),
    )
}

/// Criterion 2: the lemniscate expands self-similarly: rescaled image within
/// 1% of the initial rescaled image, measured scale within 1% of
/// (1 + 30t)^{1/4}, N = 1024, t ∈ [0, 1], under five minutes.
pub fn criterion_lemniscate_self_similarity() -> CriterionOutcome {
    let started = Instant::now();
    let sol = LemniscateSolution::new(1.0).unwrap();
    let initial = sol.curve_at(0.0, 1024).unwrap();
    let eta0 = match rescaled_curve(&initial) {
        Ok(c) => c,
        Err(e) => return finish(2, "lemniscate self-similarity", started, false, e.to_string()),
    };
    let config = FlowConfig {
        t_end: 1.0,
        dt: DtPolicy::Adaptive { scale: 200.0 },
        record_stride: 8192,
        snapshots: 26,
        ..FlowConfig::default()
    };
    let out = match run(&initial, &config) {
        Ok(o) => o,
        Err(e) => {
            return finish(2, "lemniscate self-similarity", started, false, format!("run failed: {e}"))
        }
    };
    let completed = out.status == RunStatus::Completed;
    let l0 = out.records[0].length;
    let mut max_scale_rel = 0.0f64;
    for r in &out.records {
        let measured = r.length / l0;
        let exact = sol.scale(r.t);
        max_scale_rel = max_scale_rel.max((measured - exact).abs() / exact);
    }
    let mut max_image_dev = 0.0f64;
    for (_, snap) in &out.snapshots {
        match rescaled_curve(snap) {
            Ok(eta) => max_image_dev = max_image_dev.max(image_deviation(&eta, &eta0)),
            Err(e) => {
                return finish(2, "lemniscate self-similarity", started, false, e.to_string())
            }
        }
    }
    let seconds = started.elapsed().as_secs_f64();
    let pass = completed && max_scale_rel <= 1e-2 && max_image_dev <= 1e-2 && seconds < 300.0;
    finish(
        2,
        "lemniscate self-similarity",
        started,
        pass,
        format!(
            "max scale error {:.2e}, max rescaled-image deviation {:.2e}, {} steps, {} snapshots",
            max_scale_rel,
            max_image_dev,
            out.steps,
            out.snapshots.len()
        ),
    )
}

/// The shared stability experiment behind criteria 3–5: a perturbed unit
/// circle (single m = 2 mode, measured eps(0) ≤ eps₂(1)) run to t = 100.
pub fn stability_run() -> crate::Result<(RunResult, TheoryConstants, f64)> {
    let tc = TheoryConstants::compute(1)?;
    let gen = perturbed_circle(
        1,
        &[PerturbationMode {
            wavenumber: 2,
            amplitude: 1e-4,
            phase: 0.3,
        }],
        1.0,
        256,
    )?;
    let config = FlowConfig {
        t_end: 100.0,
        dt: DtPolicy::Adaptive { scale: 50.0 },
        record_stride: 500,
        ..FlowConfig::default()
    };
    let out = run(&gen.curve, &config)?;
    Ok((out, tc, gen.eps_initial))
}

/// Criteria 3, 4, 5 from the shared stability run (5 adds an ω = 2 run).
pub fn criteria_stability() -> Vec<CriterionOutcome> {
    let started = Instant::now();
    let (out, tc, eps0) = match stability_run() {
        Ok(v) => v,
        Err(e) => {
            let msg = format!("stability run failed: {e}");
            return vec![
                finish(3, "sharp length law", started, false, msg.clone()),
                finish(4, "stability of the rescaled flow", started, false, msg.clone()),
                finish(5, "monotonicity threshold", started, false, msg),
            ];
        }
    };
    let completed = out.status == RunStatus::Completed;
    let series = &out.records;
    let hypothesis = eps0 <= tc.eps_two.value && completed;

    // --- Criterion 3: sharp length law -------------------------------------
    let c3_started = Instant::now();
    let c3 = match length_law_residual(series, 1) {
        Ok(check) => {
            let pass = hypothesis
                && check.max_residual <= 1.0 + diagnostics::ENVELOPE_SLACK
                && check.fitted_exponent >= 0.24
                && check.fitted_exponent <= 0.26;
            finish(
                3,
                "sharp length law",
                c3_started,
                pass,
                format!(
                    "eps(0) {:.3e} <= eps2 {:.3e}: {}; max residual {:.3}, tail exponent {:.4}, sigma {:.3e}",
                    eps0, tc.eps_two.value, hypothesis, check.max_residual, check.fitted_exponent, check.sigma
                ),
            )
        }
        Err(e) => finish(3, "sharp length law", c3_started, false, e.to_string()),
    };

    // --- Criterion 4: rescaled-flow stability -------------------------------
    let c4_started = Instant::now();
    let c4 = match decay_report(series, &tc) {
        Ok(rep) => {
            let final_rec = series.last().unwrap();
            let ks_max = series.iter().fold(0.0f64, |m, r| m.max(r.ks_sup_rescaled));
            let kss_max = series.iter().fold(0.0f64, |m, r| m.max(r.kss_sup_rescaled));
            let ks_drop = ks_max / final_rec.ks_sup_rescaled.max(1e-300);
            let kss_drop = kss_max / final_rec.kss_sup_rescaled.max(1e-300);
            let mono_ok =
                rep.q_monotone_max_increase <= diagnostics::MONOTONE_SLACK_REL * rep.q_initial;
            let pass = hypothesis
                && rep.eps_bounded_by_eps_one
                && mono_ok
                && rep.q_envelope_max_ratio <= 1.0 + diagnostics::ENVELOPE_SLACK
                && final_rec.circle_dev_origin < 1e-2
                && ks_drop >= 10.0
                && kss_drop >= 10.0
                && rep.le_min >= 2.0 * PI * PI - 1e-6
                && rep.le_bound_max_ratio <= 1.0 + 1e-6
                && rep.kbar_bound_max_ratio <= 1.0 + diagnostics::KBAR_SLACK;
            finish(
                4,
                "stability of the rescaled flow",
                c4_started,
                pass,
                format!(
                    "eps max {:.3e} (eps1 {:.3e}), Q envelope ratio {:.3}, origin deviation {:.2e}, rescaled-norm drops {:.0}x/{:.0}x, LE in [{:.4}, {:.4}]",
                    rep.eps_max,
                    tc.eps_one.value,
                    rep.q_envelope_max_ratio,
                    final_rec.circle_dev_origin,
                    ks_drop,
                    kss_drop,
                    rep.le_min,
                    rep.le_final
                ),
            )
        }
        Err(e) => finish(4, "stability of the rescaled flow", c4_started, false, e.to_string()),
    };

    // --- Criterion 5: monotonicity threshold for ω = 1 and ω = 2 -----------
    let c5_started = Instant::now();
    let c5 = (|| -> crate::Result<CriterionOutcome> {
        let eps_star_1 = crate::constants::eps_star(1);
        let under_1 = series.iter().all(|r| r.eps <= eps_star_1);
        let inc_1 = max_consecutive_increase(series.iter().map(|r| r.ks_l2_sq));

        let tc2_star = crate::constants::eps_star(2);
        let gen2 = perturbed_circle(
            2,
            &[PerturbationMode {
                wavenumber: 2,
                amplitude: 2e-6,
                phase: 0.7,
            }],
            0.2,
            256,
        )?;
        let config2 = FlowConfig {
            t_end: 0.05,
            dt: DtPolicy::Adaptive { scale: 50.0 },
            record_stride: 50,
            ..FlowConfig::default()
        };
        let out2 = run(&gen2.curve, &config2)?;
        let completed2 = out2.status == RunStatus::Completed;
        let under_2 = out2.records.iter().all(|r| r.eps <= tc2_star);
        let inc_2 = max_consecutive_increase(out2.records.iter().map(|r| r.ks_l2_sq));

        let pass = completed
            && completed2
            && under_1
            && under_2
            && inc_1 <= 1e-8
            && inc_2 <= 1e-8;
        Ok(finish(
            5,
            "monotonicity threshold",
            c5_started,
            pass,
            format!(
                "omega=1: eps <= eps_* {}: max increase {:.2e}; omega=2: eps(0) {:.2e} <= eps_* {:.2e}, max increase {:.2e}",
                under_1, inc_1, gen2.eps_initial, tc2_star, inc_2
            ),
        ))
    })()
    .unwrap_or_else(|e| finish(5, "monotonicity threshold", c5_started, false, e.to_string()));

    vec![c3, c4, c5]
}

/// Criterion 6: evolution-identity residuals at N = 1024 are each ≤ 10%
/// (energy dissipation ≤ 5%) and shrink when dt and 1/N are halved together.
pub fn criterion_evolution_identities() -> CriterionOutcome {
    let started = Instant::now();
    let make = |n: usize| {
        perturbed_circle(
            1,
            &[PerturbationMode {
                wavenumber: 2,
                amplitude: 1e-2,
                phase: 0.0,
            }],
            1.0,
            n,
        )
        .map(|g| g.curve)
    };
    let result = (|| -> crate::Result<(bool, String)> {
        let coarse = evolution_residuals(&make(1024)?, 2e-5)?;
        let fine = evolution_residuals(&make(2048)?, 1e-5)?;
        let bounds_ok = coarse.length_rate <= 0.10
            && coarse.curvature_rate <= 0.10
            && coarse.ks_identity <= 0.10
            && coarse.energy_dissipation <= 0.05;
        // Shrink under refinement, up to a tiny absolute floor.
        let floor = 1e-6;
        let shrink = |a: f64, b: f64| b <= a || b <= floor;
        let shrink_ok = shrink(coarse.length_rate, fine.length_rate)
            && shrink(coarse.curvature_rate, fine.curvature_rate)
            && shrink(coarse.ks_identity, fine.ks_identity)
            && shrink(coarse.energy_dissipation, fine.energy_dissipation);
        Ok((
            bounds_ok && shrink_ok,
            format!(
                "N=1024: dL {:.2e}, dk {:.2e}, d∫k_s² {:.2e}, dE {:.2e}; N=2048: {:.2e}, {:.2e}, {:.2e}, {:.2e}",
                coarse.length_rate,
                coarse.curvature_rate,
                coarse.ks_identity,
                coarse.energy_dissipation,
                fine.length_rate,
                fine.curvature_rate,
                fine.ks_identity,
                fine.energy_dissipation
            ),
        ))
    })();
    match result {
        Ok((pass, details)) => finish(6, "evolution-identity residuals", started, pass, details),
        Err(e) => finish(6, "evolution-identity residuals", started, false, e.to_string()),
    }
}

/// Criterion 7: first-variation discrepancy of the energy at N = 512,
/// h = 1e-4 for the two pinned perturbations.
pub fn criterion_gradient() -> CriterionOutcome {
    let started = Instant::now();
    let c = CircleSolution::new(1, 1.0, Vec2::ZERO)
        .unwrap()
        .curve_at(0.0, 512)
        .unwrap();
    let result = (|| -> crate::Result<(bool, String)> {
        let phi1 = vec![1.0; 512];
        let g1 = gradient_check(&c, &phi1, 1e-4)?;
        let phi2: Vec<f64> = (0..512)
            .map(|i| (4.0 * PI * i as f64 / 512.0).cos())
            .collect();
        let g2 = gradient_check(&c, &phi2, 1e-4)?;
        let pass = g1.discrepancy <= 1e-6
            && (g1.pairing - PI).abs() <= 1e-6
            && g2.discrepancy <= 1e-5;
        Ok((
            pass,
            format!(
                "phi=1: discrepancy {:.2e} (pairing {:.9} vs π); phi=cos(4πu): discrepancy {:.2e}",
                g1.discrepancy, g1.pairing, g2.discrepancy
            ),
        ))
    })();
    match result {
        Ok((pass, details)) => finish(7, "energy gradient check", started, pass, details),
        Err(e) => finish(7, "energy gradient check", started, false, e.to_string()),
    }
}

/// Criterion 8: the constants table for ω = 1..5 with its invariant chain,
/// the 1e-12 closed-form/bisection agreement, and c₁ → 3/10, in under 1 s.
pub fn criterion_constants() -> CriterionOutcome {
    let started = Instant::now();
    let result = (|| -> crate::Result<(bool, String)> {
        let mut ok = true;
        let mut notes = Vec::new();
        for omega in 1..=5u32 {
            let tc = TheoryConstants::compute(omega)?;
            let w = omega as f64;
            let target = (2.0 * w * PI).powi(4) / 15.0;
            let chain = tc.eps_two.value > 0.0
                && tc.eps_two.value < tc.eps_one.value
                && tc.eps_one.value <= tc.eps_star.value
                && tc.eps_one.value <= PI.powi(4) / 6.0
                && q_poly(tc.eps_one.value, omega)? <= target + 1e-12
                && tc.eps_one.value * crate::constants::c_hat(tc.eps_one.value, omega)?
                    <= 16.0 * w.powi(4) * PI.powi(4)
                && tc.c_two.residual.abs() <= 1e-10 * tc.c_two.value
                && tc.c_one.residual.abs() <= 1e-10
                && tc.c_one.value < 0.3
                && tc.eps_two.residual <= 0.0;
            ok &= chain;
            if omega == 1 {
                ok &= tc.eps_star_bisect_gap <= 1e-12;
                notes.push(format!(
                    "eps_*(1) = {:.6e} (bisect gap {:.1e})",
                    tc.eps_star.value, tc.eps_star_bisect_gap
                ));
            }
        }
        let c_small = c_one_of(1e-6, 1)?;
        let c_large = c_one_of(1e-3, 1)?;
        let limit_ok = c_large < c_small && c_small < 0.3 && (c_small - 0.3).abs() < 1e-6;
        ok &= limit_ok;
        notes.push(format!(
            "c1(1e-3) = {c_large:.10}, c1(1e-6) = {c_small:.10} -> 3/10"
        ));
        let seconds = started.elapsed().as_secs_f64();
        ok &= seconds < 1.0;
        notes.push(format!("{seconds:.3}s"));
        Ok((ok, notes.join("; ")))
    })();
    match result {
        Ok((pass, details)) => finish(8, "constants table", started, pass, details),
        Err(e) => finish(8, "constants table", started, false, e.to_string()),
    }
}

/// Criterion 9: the discrete Poincaré ratios stay ≤ 1 + 1e-2 on the test
/// fields, with the first Fourier mode saturating to 1e-3.
pub fn criterion_poincare() -> CriterionOutcome {
    let started = Instant::now();
    let result = (|| -> crate::Result<(bool, String)> {
        let n = 512;
        let circle = CircleSolution::new(1, 1.0, Vec2::ZERO)
            .unwrap()
            .curve_at(0.0, n)?;
        let g = compute_geometry(&circle)?;

        let first: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
        let (r1_l2, r1_sup) = poincare_margin(&g, &first)?;

        let third: Vec<f64> = (0..n).map(|i| (6.0 * PI * i as f64 / n as f64).sin()).collect();
        let (r3_l2, r3_sup) = poincare_margin(&g, &third)?;

        let pert = perturbed_circle(
            1,
            &[PerturbationMode {
                wavenumber: 4,
                amplitude: 0.03,
                phase: 0.2,
            }],
            1.0,
            n,
        )?;
        let gp = compute_geometry(&pert.curve)?;
        let kf = subtract_average(&gp, &gp.curvature);
        let (rk_l2, rk_sup) = poincare_margin(&gp, &kf)?;

        let mix_curve = ClosedCurve::new(
            (0..n)
                .map(|i| {
                    let th = 2.0 * PI * i as f64 / n as f64;
                    Vec2::new(2.0 * th.cos(), th.sin())
                })
                .collect(),
        )?;
        let gm = compute_geometry(&mix_curve)?;
        let mix_raw: Vec<f64> = (0..n)
            .map(|i| {
                let u = i as f64 / n as f64;
                0.7 * (4.0 * PI * u).sin() + 0.2 * (10.0 * PI * u + 0.3).cos()
            })
            .collect();
        let mix = subtract_average(&gm, &mix_raw);
        let (rm_l2, rm_sup) = poincare_margin(&gm, &mix)?;

        let cap = 1.0 + 1e-2;
        let all_bounded = [r1_l2, r1_sup, r3_l2, r3_sup, rk_l2, rk_sup, rm_l2, rm_sup]
            .iter()
            .all(|r| *r <= cap);
        let pass = all_bounded && (r1_l2 - 1.0).abs() <= 1e-3 && (r3_l2 - 1.0 / 9.0).abs() <= 1e-2;
        Ok((
            pass,
            format!(
                "mode1 ratio {r1_l2:.6}, mode3 ratio {r3_l2:.6} (≈1/9), curvature-fluctuation ratios ({rk_l2:.4}, {rk_sup:.4}), mixed-field ratios ({rm_l2:.4}, {rm_sup:.4})"
            ),
        ))
    })();
    match result {
        Ok((pass, details)) => finish(9, "Poincaré inequality suite", started, pass, details),
        Err(e) => finish(9, "Poincaré inequality suite", started, false, e.to_string()),
    }
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    let mut out = Vec::new();
    out.push(criterion_circle_oracle());
    out.push(criterion_lemniscate_self_similarity());
    out.extend(criteria_stability());
    out.push(criterion_evolution_identities());
    out.push(criterion_gradient());
    out.push(criterion_constants());
    out.push(criterion_poincare());
    out
}
