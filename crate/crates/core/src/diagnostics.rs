//! Time-series observables, residuals against the quantitative laws of the
//! flow, and convergence metrics for the rescaled curves.

use crate::constants::{c_hat, length_law_slope, TheoryConstants};
use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::flow::{velocity_f, DtPolicy, FlowConfig, FlowState, Redistribution};
use crate::geometry::{compute_geometry, GeometricQuantities};
use crate::vec2::Vec2;

use std::f64::consts::PI;

/// Multiplicative slack applied to theoretical envelopes (discretization and
/// quadrature error; the continuum inequalities are exact only in the limit).
pub const ENVELOPE_SLACK: f64 = 0.05;
/// Slack for the sup-norm curvature bound ‖Lk − 2ωπ‖∞ ≤ sqrt(eps/2π).
pub const KBAR_SLACK: f64 = 0.02;
/// Relative (to the initial value) slack for monotonicity checks of Q.
pub const MONOTONE_SLACK_REL: f64 = 1e-8;

/// One time slice of scalar observables. `circle_dev_*` are reported as -1
/// for turning number zero, where no reference circle exists.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub length: f64,
    pub energy: f64,
    /// Signed turning number of the run's initial data.
    pub turning: i64,
    pub eps: f64,
    pub q_ratio: f64,
    /// ∫ k_s² ds.
    pub ks_l2_sq: f64,
    /// ‖L·k − 2ωπ‖∞ with the signed ω.
    pub kbar_dev_sup: f64,
    /// |∫k ds − 2ωπ|: the turning-number quantization defect of the mesh.
    pub turning_defect: f64,
    pub k_sup: f64,
    pub ks_sup: f64,
    pub kss_sup: f64,
    /// L²‖k_s‖∞ — sup norm of the rescaled first curvature derivative.
    pub ks_sup_rescaled: f64,
    /// L³‖k_ss‖∞.
    pub kss_sup_rescaled: f64,
    pub com_x: f64,
    pub com_y: f64,
    /// max_i | ‖γ_i − com‖/L − 1/(2|ω|π) |.
    pub circle_dev_centered: f64,
    /// | max_i ‖γ_i‖/L − 1/(2|ω|π) |, the origin-centred confinement metric.
    pub circle_dev_origin: f64,
}

/// Measures every record field from a consistent curve/geometry pair.
/// Fails with `NonFinite` if any observable is not finite.
pub fn measure_record(
    curve: &ClosedCurve,
    geom: &GeometricQuantities,
    t: f64,
    dt: f64,
    turning: i64,
) -> Result<DiagnosticsRecord> {
    let length = geom.length;
    let k2 = geom.l2_norm_sq(&geom.curvature);
    let ks2 = geom.l2_norm_sq(&geom.k_s);
    let two_om_pi = 2.0 * PI * turning as f64;
    let kbar_dev_sup = geom
        .curvature
        .iter()
        .fold(0.0f64, |m, k| m.max((length * k - two_om_pi).abs()));
    let turning_defect = (geom.integrate(&geom.curvature) - two_om_pi).abs();
    let com = geom.centre_of_mass(curve);

    let (dev_c, dev_o) = if turning != 0 {
        circle_deviation_scaled(curve, geom, com, turning.unsigned_abs())
    } else {
        (-1.0, -1.0)
    };

    let rec = DiagnosticsRecord {
        t,
        dt,
        length,
        energy: 0.5 * k2,
        turning,
        eps: length.powi(3) * ks2,
        q_ratio: ks2 / k2.powi(3),
        ks_l2_sq: ks2,
        kbar_dev_sup,
        turning_defect,
        k_sup: geom.sup_norm(&geom.curvature),
        ks_sup: geom.sup_norm(&geom.k_s),
        kss_sup: geom.sup_norm(&geom.k_ss),
        ks_sup_rescaled: length.powi(2) * geom.sup_norm(&geom.k_s),
        kss_sup_rescaled: length.powi(3) * geom.sup_norm(&geom.k_ss),
        com_x: com.x,
        com_y: com.y,
        circle_dev_centered: dev_c,
        circle_dev_origin: dev_o,
    };
    let fields = [
        rec.t,
        rec.dt,
        rec.length,
        rec.energy,
        rec.eps,
        rec.q_ratio,
        rec.ks_l2_sq,
        rec.kbar_dev_sup,
        rec.turning_defect,
        rec.k_sup,
        rec.ks_sup,
        rec.kss_sup,
        rec.ks_sup_rescaled,
        rec.kss_sup_rescaled,
        rec.com_x,
        rec.com_y,
        rec.circle_dev_centered,
        rec.circle_dev_origin,
    ];
    if fields.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("diagnostics record"));
    }
    Ok(rec)
}

fn circle_deviation_scaled(
    curve: &ClosedCurve,
    geom: &GeometricQuantities,
    com: Vec2,
    omega: u64,
) -> (f64, f64) {
    let target = 1.0 / (2.0 * omega as f64 * PI);
    let inv_l = 1.0 / geom.length;
    let mut centered = 0.0f64;
    let mut max_norm = 0.0f64;
    for p in curve.points() {
        centered = centered.max(((*p - com).norm() * inv_l - target).abs());
        max_norm = max_norm.max(p.norm() * inv_l);
    }
    (centered, (max_norm - target).abs())
}

/// η = γ/L: unit-length rescaling of a curve.
pub fn rescaled_curve(curve: &ClosedCurve) -> Result<ClosedCurve> {
    let geom = compute_geometry(curve)?;
    curve.scaled(1.0 / geom.length)
}

/// Circle deviations of a unit-length curve:
/// (max_i |‖η_i − c‖ − 1/(2ωπ)| with c the centre of mass,
///  |max_i ‖η_i‖ − 1/(2ωπ)|).
pub fn circle_deviation(curve: &ClosedCurve, omega: u64) -> Result<(f64, f64)> {
    if omega == 0 {
        return Err(Error::InvalidParameter(
            "circle deviation needs turning number >= 1".into(),
        ));
    }
    let geom = compute_geometry(curve)?;
    if (geom.length - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "expected a unit-length (rescaled) curve, got L = {}",
            geom.length
        )));
    }
    let com = geom.centre_of_mass(curve);
    Ok(circle_deviation_scaled(curve, &geom, com, omega))
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sq();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

fn sup_distance_to_polygon(pts: &[Vec2], poly: &ClosedCurve) -> f64 {
    let n = poly.node_count();
    let q = poly.points();
    pts.iter().fold(0.0f64, |worst, p| {
        let mut best = f64::INFINITY;
        for i in 0..n {
            best = best.min(point_segment_distance(*p, q[i], q[(i + 1) % n]));
            if best == 0.0 {
                break;
            }
        }
        worst.max(best)
    })
}

/// Symmetric Hausdorff-type deviation between two curve images, normalized by
/// the max radius of `reference` around its vertex centroid. Insensitive to
/// parametrization, so it is the right metric for "same image" checks.
pub fn image_deviation(curve: &ClosedCurve, reference: &ClosedCurve) -> f64 {
    let fwd = sup_distance_to_polygon(curve.points(), reference);
    let bwd = sup_distance_to_polygon(reference.points(), curve);
    let centroid = reference
        .points()
        .iter()
        .fold(Vec2::ZERO, |acc, p| acc + *p)
        / reference.node_count() as f64;
    let scale = reference
        .points()
        .iter()
        .fold(0.0f64, |m, p| m.max((*p - centroid).norm()));
    fwd.max(bwd) / scale
}

/// Max nodewise distance between two equally sampled curves.
pub fn max_node_distance(a: &ClosedCurve, b: &ClosedCurve) -> Result<f64> {
    if a.node_count() != b.node_count() {
        return Err(Error::InvalidParameter("node counts differ".into()));
    }
    Ok(a.points()
        .iter()
        .zip(b.points())
        .fold(0.0f64, |m, (p, q)| m.max((*p - *q).norm())))
}

/// Least-squares slope of ln y against ln x.
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::SeriesTooShort {
            len: pts.len(),
            min: 5,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return Err(Error::InvalidParameter("degenerate abscissae in fit".into()));
    }
    Ok(num / den)
}

/// Tail of a series: records with t >= t_last/2.
fn tail<'a>(series: &'a [DiagnosticsRecord]) -> Vec<&'a DiagnosticsRecord> {
    let t_last = series.last().map(|r| r.t).unwrap_or(0.0);
    series.iter().filter(|r| r.t >= 0.5 * t_last).collect()
}

/// Sharp length-law residual and tail growth exponent.
#[derive(Clone, Copy, Debug)]
pub struct LengthLawCheck {
    /// max over records of |L⁴ − L₀⁴ − 32ω⁴π⁴ t| / max(σ Ĉ(σ,ω) t, floor).
    pub max_residual: f64,
    /// Fitted exponent p of L ~ t^p over the series tail.
    pub fitted_exponent: f64,
    /// σ = max eps(t) over the run.
    pub sigma: f64,
    pub c_hat: f64,
}

pub fn length_law_residual(series: &[DiagnosticsRecord], omega: u32) -> Result<LengthLawCheck> {
    if series.len() < 10 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: 10,
        });
    }
    let sigma = series.iter().fold(0.0f64, |m, r| m.max(r.eps));
    let chat = c_hat(sigma, omega)?;
    let slope = length_law_slope(omega);
    let l0 = series[0].length;
    let floor = 1e-4 * l0.powi(4);
    let mut max_residual = 0.0f64;
    for r in series.iter().skip(1) {
        let defect = (r.length.powi(4) - l0.powi(4) - slope * r.t).abs();
        let denom = (sigma * chat * r.t).max(floor);
        max_residual = max_residual.max(defect / denom);
    }
    let tl = tail(series);
    let ts: Vec<f64> = tl.iter().map(|r| r.t).collect();
    let ls: Vec<f64> = tl.iter().map(|r| r.length).collect();
    let fitted_exponent = fit_log_log(&ts, &ls)?;
    Ok(LengthLawCheck {
        max_residual,
        fitted_exponent,
        sigma,
        c_hat: chat,
    })
}

/// Largest consecutive increase in a sequence (0 when non-increasing).
pub fn max_consecutive_increase(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut worst = 0.0f64;
    let mut prev: Option<f64> = None;
    for v in values {
        if let Some(p) = prev {
            worst = worst.max(v - p);
        }
        prev = Some(v);
    }
    worst
}

/// Decay and boundedness report for a small-eps run.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub omega: u32,
    pub eps_initial: f64,
    /// eps(0) ≤ eps₂(ω): the hypothesis of the decay estimates.
    pub hypothesis_satisfied: bool,
    /// When the hypothesis fails the report is informational only.
    pub informational_only: bool,
    pub eps_max: f64,
    pub eps_bounded_by_eps_one: bool,
    pub q_initial: f64,
    /// Largest consecutive increase of Q (0 when non-increasing).
    pub q_monotone_max_increase: f64,
    /// max over records of Q(t) / [Q(0)(1 + c₂t/L₀⁴)^{−c₁}].
    pub q_envelope_max_ratio: f64,
    pub eps_tail_exponent: Option<f64>,
    pub q_tail_exponent: Option<f64>,
    /// min over records of L·E (≥ 2π² up to quadrature error).
    pub le_min: f64,
    /// max over records of L·E / (eps/8π² + 2ω²π²).
    pub le_bound_max_ratio: f64,
    pub le_final: f64,
    /// max over records of ‖Lk − 2ωπ‖∞ / (sqrt(eps/2π) + quantization defect).
    pub kbar_bound_max_ratio: f64,
}

impl DecayReport {
    /// All asserted laws hold within their slacks.
    pub fn is_pass(&self) -> bool {
        self.hypothesis_satisfied
            && self.eps_bounded_by_eps_one
            && self.q_monotone_max_increase <= MONOTONE_SLACK_REL * self.q_initial.max(1e-300)
            && self.q_envelope_max_ratio <= 1.0 + ENVELOPE_SLACK
            && self.le_min >= 2.0 * PI * PI - 1e-6
            && self.le_bound_max_ratio <= 1.0 + 1e-6
            && self.kbar_bound_max_ratio <= 1.0 + KBAR_SLACK
    }
}

/// Builds the decay report of a series against a constant chain.
pub fn decay_report(series: &[DiagnosticsRecord], constants: &TheoryConstants) -> Result<DecayReport> {
    if series.is_empty() {
        return Err(Error::SeriesTooShort { len: 0, min: 1 });
    }
    let omega = constants.omega;
    if series[0].turning.unsigned_abs() != omega as u64 {
        return Err(Error::InvalidParameter(format!(
            "series turning number {} does not match constants for omega = {omega}",
            series[0].turning
        )));
    }
    let eps0 = series[0].eps;
    let q0 = series[0].q_ratio;
    let l0 = series[0].length;
    let hypothesis = eps0 <= constants.eps_two.value;
    let eps_max = series.iter().fold(0.0f64, |m, r| m.max(r.eps));

    let mut q_env_ratio = 0.0f64;
    let mut le_min = f64::INFINITY;
    let mut le_ratio = 0.0f64;
    let mut kbar_ratio = 0.0f64;
    let w = omega as f64;
    for r in series {
        if q0 > 0.0 {
            let env = constants.q_envelope(q0, l0, r.t);
            q_env_ratio = q_env_ratio.max(r.q_ratio / env);
        }
        let le = r.length * r.energy;
        le_min = le_min.min(le);
        le_ratio = le_ratio.max(le / (r.eps / (8.0 * PI * PI) + 2.0 * w * w * PI * PI));
        let denom = (r.eps / (2.0 * PI)).sqrt() + r.turning_defect;
        if denom > 0.0 {
            kbar_ratio = kbar_ratio.max(r.kbar_dev_sup / denom);
        }
    }

    let tl = tail(series);
    let ts: Vec<f64> = tl.iter().map(|r| r.t).collect();
    let eps_tail: Vec<f64> = tl.iter().map(|r| r.eps).collect();
    let qs_tail: Vec<f64> = tl.iter().map(|r| r.q_ratio).collect();

    Ok(DecayReport {
        omega,
        eps_initial: eps0,
        hypothesis_satisfied: hypothesis,
        informational_only: !hypothesis,
        eps_max,
        eps_bounded_by_eps_one: eps_max <= constants.eps_one.value,
        q_initial: q0,
        q_monotone_max_increase: max_consecutive_increase(series.iter().map(|r| r.q_ratio)),
        q_envelope_max_ratio: q_env_ratio,
        eps_tail_exponent: fit_log_log(&ts, &eps_tail).ok(),
        q_tail_exponent: fit_log_log(&ts, &qs_tail).ok(),
        le_min,
        le_bound_max_ratio: le_ratio,
        le_final: series.last().map(|r| r.length * r.energy).unwrap_or(f64::NAN),
        kbar_bound_max_ratio: kbar_ratio,
    })
}

/// Relative residuals of the evolution identities, measured with a centered
/// difference across two fixed steps against the continuum right sides at the
/// middle state (redistribution off).
#[derive(Clone, Copy, Debug)]
pub struct EvolutionResiduals {
    /// dL/dt vs −∫k_s² ds + ½∫k⁴ ds.
    pub length_rate: f64,
    /// dk/dt vs −(F_ss + F k²), in relative discrete L².
    pub curvature_rate: f64,
    /// d/dt ∫k_s² ds vs −2∫k_sss² + 5∫k_ss²k² − (5/3)∫k_s⁴ − (11/2)∫k_s²k⁴.
    pub ks_identity: f64,
    /// dE/dt vs −‖F‖₂².
    pub energy_dissipation: f64,
}

pub fn evolution_residuals(curve: &ClosedCurve, dt: f64) -> Result<EvolutionResiduals> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let config = FlowConfig {
        t_end: 3.0 * dt,
        dt: DtPolicy::Fixed { dt },
        redistribution: Redistribution::Off,
        ..FlowConfig::default()
    };
    let mut state = FlowState::new(curve.clone(), &config)?;

    let g0 = state.geometry();
    let l_0 = g0.length;
    let e_0 = 0.5 * g0.l2_norm_sq(&g0.curvature);
    let ks2_0 = g0.l2_norm_sq(&g0.k_s);
    let k_0 = g0.curvature.clone();

    state.step(&config)?;
    // Everything needed at the middle state, captured before stepping on.
    let (rhs_len, rhs_k, rhs_ks, f_norm_sq, ds_mid) = {
        let g1 = state.geometry();
        let n = g1.node_count();
        let f = velocity_f(g1);
        let f_s = g1.arclength_derivative(&f);
        let f_ss = g1.arclength_derivative(&f_s);
        let rhs_k: Vec<f64> = (0..n)
            .map(|i| -(f_ss[i] + f[i] * g1.curvature[i].powi(2)))
            .collect();
        let k4: Vec<f64> = g1.curvature.iter().map(|k| k.powi(4)).collect();
        let rhs_len = -g1.l2_norm_sq(&g1.k_s) + 0.5 * g1.integrate(&k4);
        let i_ksss = g1.l2_norm_sq(&g1.k_sss);
        let kssk: Vec<f64> = g1
            .k_ss
            .iter()
            .zip(&g1.curvature)
            .map(|(a, k)| a * a * k * k)
            .collect();
        let ks4: Vec<f64> = g1.k_s.iter().map(|v| v.powi(4)).collect();
        let ksk4: Vec<f64> = g1
            .k_s
            .iter()
            .zip(&g1.curvature)
            .map(|(a, k)| a * a * k.powi(4))
            .collect();
        let rhs_ks = -2.0 * i_ksss + 5.0 * g1.integrate(&kssk) - 5.0 / 3.0 * g1.integrate(&ks4)
            - 5.5 * g1.integrate(&ksk4);
        let f2: Vec<f64> = f.iter().map(|v| v * v).collect();
        (rhs_len, rhs_k, rhs_ks, g1.integrate(&f2), g1.ds.clone())
    };

    state.step(&config)?;
    let g2 = state.geometry();
    let l_2 = g2.length;
    let e_2 = 0.5 * g2.l2_norm_sq(&g2.curvature);
    let ks2_2 = g2.l2_norm_sq(&g2.k_s);
    let k_2 = g2.curvature.clone();

    let two_dt = 2.0 * dt;
    let rel = |lhs: f64, rhs: f64| -> f64 {
        let denom = rhs.abs().max(1e-12);
        (lhs - rhs).abs() / denom
    };
    let length_rate = rel((l_2 - l_0) / two_dt, rhs_len);
    let energy_dissipation = rel((e_2 - e_0) / two_dt, -f_norm_sq);
    let ks_identity = rel((ks2_2 - ks2_0) / two_dt, rhs_ks);

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..k_0.len() {
        let lhs = (k_2[i] - k_0[i]) / two_dt;
        num += (lhs - rhs_k[i]).powi(2) * ds_mid[i];
        den += rhs_k[i].powi(2) * ds_mid[i];
    }
    let curvature_rate = (num / den.max(1e-24)).sqrt();

    Ok(EvolutionResiduals {
        length_rate,
        curvature_rate,
        ks_identity,
        energy_dissipation,
    })
}

/// Relative discrepancy of the ∫k_s² ds evolution identity alone.
pub fn ks_identity_residual(curve: &ClosedCurve, dt: f64) -> Result<f64> {
    Ok(evolution_residuals(curve, dt)?.ks_identity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{perturbed_circle, CircleSolution, LemniscateSolution, PerturbationMode};

    fn circle_series(omega: u32, rho0: f64, n: usize, times: &[f64]) -> Vec<DiagnosticsRecord> {
        let sol = CircleSolution::new(omega, rho0, Vec2::ZERO).unwrap();
        times
            .iter()
            .map(|&t| {
                let c = sol.curve_at(t, n).unwrap();
                let g = compute_geometry(&c).unwrap();
                measure_record(&c, &g, t, 0.0, omega as i64).unwrap()
            })
            .collect()
    }

    #[test]
    fn rescaled_circle_radii() {
        let c1 = CircleSolution::new(1, 3.7, Vec2::ZERO)
            .unwrap()
            .curve_at(0.0, 128)
            .unwrap();
        let eta = rescaled_curve(&c1).unwrap();
        for p in eta.points() {
            assert!((p.norm() - 1.0 / (2.0 * PI)).abs() < 1e-10);
        }
        let c2 = CircleSolution::new(2, 0.4, Vec2::ZERO)
            .unwrap()
            .curve_at(0.0, 128)
            .unwrap();
        let eta = rescaled_curve(&c2).unwrap();
        for p in eta.points() {
            assert!((p.norm() - 1.0 / (4.0 * PI)).abs() < 1e-10);
        }
        let g = compute_geometry(&eta).unwrap();
        assert!((g.length - 1.0).abs() < 1e-10);
    }

    #[test]
    fn circle_deviation_cases() {
        let c = CircleSolution::new(1, 2.0, Vec2::ZERO)
            .unwrap()
            .curve_at(0.0, 256)
            .unwrap();
        let eta = rescaled_curve(&c).unwrap();
        let (dc, do_) = circle_deviation(&eta, 1).unwrap();
        assert!(dc < 1e-10 && do_ < 1e-10, "({dc}, {do_})");

        let shifted = eta.translated(Vec2::new(0.1, 0.0));
        let (dc, do_) = circle_deviation(&shifted, 1).unwrap();
        assert!(dc < 1e-10, "centered deviation {dc}");
        assert!((do_ - 0.1).abs() < 1e-8, "origin deviation {do_}");
    }

    #[test]
    fn length_law_exact_circle_series() {
        let times: Vec<f64> = (0..=40).map(|i| i as f64).collect();
        let series = circle_series(1, 1.0, 256, &times);
        let check = length_law_residual(&series, 1).unwrap();
        assert!(check.max_residual < 0.05, "residual {}", check.max_residual);
        assert!(
            check.fitted_exponent > 0.24 && check.fitted_exponent < 0.26,
            "p = {}",
            check.fitted_exponent
        );
    }

    #[test]
    fn length_law_rejects_short_series() {
        let times: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let series = circle_series(1, 1.0, 64, &times);
        assert!(matches!(
            length_law_residual(&series, 1),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn lemniscate_scale_exponent() {
        let sol = LemniscateSolution::new(1.0).unwrap();
        let build = |times: &[f64]| -> Vec<DiagnosticsRecord> {
            times
                .iter()
                .map(|&t| {
                    let c = sol.curve_at(t, 256).unwrap();
                    let g = compute_geometry(&c).unwrap();
                    measure_record(&c, &g, t, 0.0, 0).unwrap()
                })
                .collect()
        };
        // Short horizon: within 0.02 of 1/4.
        let times: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let series = build(&times);
        let tl: Vec<&DiagnosticsRecord> = series.iter().filter(|r| r.t >= 0.5).collect();
        let p = fit_log_log(
            &tl.iter().map(|r| r.t).collect::<Vec<_>>(),
            &tl.iter().map(|r| r.length).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((p - 0.25).abs() <= 0.02, "p = {p}");
        // Long horizon: inside [0.24, 0.26].
        let times: Vec<f64> = (0..=40).map(|i| i as f64 / 4.0).collect();
        let series = build(&times);
        let tl: Vec<&DiagnosticsRecord> = series.iter().filter(|r| r.t >= 5.0).collect();
        let p = fit_log_log(
            &tl.iter().map(|r| r.t).collect::<Vec<_>>(),
            &tl.iter().map(|r| r.length).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(p > 0.24 && p < 0.26, "p = {p}");
    }

    #[test]
    fn image_deviation_detects_scale_mismatch() {
        let c = CircleSolution::new(1, 1.0, Vec2::ZERO)
            .unwrap()
            .curve_at(0.0, 128)
            .unwrap();
        assert!(image_deviation(&c, &c) < 1e-14);
        let bigger = c.scaled(1.02).unwrap();
        let dev = image_deviation(&bigger, &c);
        assert!((dev - 0.02).abs() < 1e-3, "dev = {dev}");
    }

    #[test]
    fn evolution_residuals_vanish_on_circle() {
        let c = CircleSolution::new(1, 1.0, Vec2::ZERO)
            .unwrap()
            .curve_at(0.0, 256)
            .unwrap();
        let r = evolution_residuals(&c, 1e-5).unwrap();
        // k_s ≡ 0 on the symmetric circle: both sides of the identity vanish.
        assert!(r.ks_identity <= 1e-8, "ks identity {}", r.ks_identity);
        assert!(r.length_rate <= 1e-4, "length rate {}", r.length_rate);
        assert!(r.energy_dissipation <= 1e-4, "energy {}", r.energy_dissipation);
    }

    #[test]
    fn evolution_residuals_small_on_perturbed_circle() {
        let c = perturbed_circle(
            1,
            &[PerturbationMode {
                wavenumber: 2,
                amplitude: 1e-2,
                phase: 0.0,
            }],
            1.0,
            512,
        )
        .unwrap()
        .curve;
        let r = evolution_residuals(&c, 2e-5).unwrap();
        assert!(r.length_rate <= 0.1, "length {}", r.length_rate);
        assert!(r.curvature_rate <= 0.1, "curvature {}", r.curvature_rate);
        assert!(r.ks_identity <= 0.1, "ks identity {}", r.ks_identity);
        assert!(r.energy_dissipation <= 0.05, "energy {}", r.energy_dissipation);
    }
}
