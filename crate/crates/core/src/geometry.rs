//! Discrete differential geometry of closed curves: arclength derivatives,
//! the curvature hierarchy k, k_s, k_ss, k_sss, quadrature, and the
//! scale-invariant diagnostics eps = L^3 ∫k_s^2 ds and Q = ∫k_s^2 ds / (∫k^2 ds)^3.
//!
//! Derivatives are periodic central differences of fourth order on the uniform
//! parameter grid; arclength operators are formed as (1/|γ_u|) ∂_u applied
//! recursively. Quadrature uses the weights ds_i = |γ_u|_i / N (periodic
//! trapezoidal rule). With these choices summation by parts
//! Σ f_s g ds = -Σ f g_s ds holds exactly in exact arithmetic, so periodic
//! derivatives integrate to zero at machine precision.

use crate::curve::{ClosedCurve, DEFAULT_MAX_MESH_RATIO};
use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Fourth-order periodic central difference in the parameter u (grid step 1/N):
/// out_i = N * (8(f_{i+1} - f_{i-1}) - (f_{i+2} - f_{i-2})) / 12.
pub(crate) fn d4_cyclic(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 5 && out.len() == n);
    let s = n as f64 / 12.0;
    out[0] = s * (8.0 * (f[1] - f[n - 1]) - (f[2] - f[n - 2]));
    out[1] = s * (8.0 * (f[2] - f[0]) - (f[3] - f[n - 1]));
    for i in 2..n - 2 {
        out[i] = s * (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2]));
    }
    out[n - 2] = s * (8.0 * (f[n - 1] - f[n - 3]) - (f[0] - f[n - 4]));
    out[n - 1] = s * (8.0 * (f[0] - f[n - 2]) - (f[1] - f[n - 3]));
}

fn d4_cyclic_vec2(f: &[Vec2], out: &mut [Vec2]) {
    let n = f.len();
    debug_assert!(n >= 5 && out.len() == n);
    let s = n as f64 / 12.0;
    let d = |a: Vec2, b: Vec2, c: Vec2, e: Vec2| (8.0 * (b - c) - (a - e)) * s;
    out[0] = d(f[2], f[1], f[n - 1], f[n - 2]);
    out[1] = d(f[3], f[2], f[0], f[n - 1]);
    for i in 2..n - 2 {
        out[i] = d(f[i + 2], f[i + 1], f[i - 1], f[i - 2]);
    }
    out[n - 2] = d(f[0], f[n - 1], f[n - 3], f[n - 4]);
    out[n - 1] = d(f[1], f[0], f[n - 2], f[n - 3]);
}

/// Per-node geometry of a closed curve: arclength weights, frame, and the
/// curvature hierarchy through the third arclength derivative.
#[derive(Clone, Debug)]
pub struct GeometricQuantities {
    /// Parameter speed |γ_u| estimates.
    pub speed: Vec<f64>,
    /// Quadrature weights ds_i = |γ_u|_i / N, all positive, summing to `length`.
    pub ds: Vec<f64>,
    /// Unit tangent τ = γ_s.
    pub tangent: Vec<Vec2>,
    /// Inward unit normal ν = rot τ (counterclockwise rotation by π/2).
    pub normal: Vec<Vec2>,
    /// Signed curvature k = ⟨γ_ss, ν⟩.
    pub curvature: Vec<f64>,
    pub k_s: Vec<f64>,
    pub k_ss: Vec<f64>,
    pub k_sss: Vec<f64>,
    /// Total length Σ ds_i.
    pub length: f64,
    scratch: Vec<f64>,
}

impl GeometricQuantities {
    /// Computes geometry with the default mesh-quality limit.
    pub fn compute(curve: &ClosedCurve) -> Result<Self> {
        Self::compute_with_limit(curve, DEFAULT_MAX_MESH_RATIO)
    }

    pub fn compute_with_limit(curve: &ClosedCurve, max_mesh_ratio: f64) -> Result<Self> {
        let mut g = GeometricQuantities {
            speed: Vec::new(),
            ds: Vec::new(),
            tangent: Vec::new(),
            normal: Vec::new(),
            curvature: Vec::new(),
            k_s: Vec::new(),
            k_ss: Vec::new(),
            k_sss: Vec::new(),
            length: 0.0,
            scratch: Vec::new(),
        };
        g.recompute(curve, max_mesh_ratio)?;
        Ok(g)
    }

    /// Recomputes in place, reusing buffers. Rejects degraded meshes.
    pub fn recompute(&mut self, curve: &ClosedCurve, max_mesh_ratio: f64) -> Result<()> {
        let n = curve.node_count();
        let ratio = curve.mesh_ratio();
        if !(ratio <= max_mesh_ratio) {
            return Err(Error::MeshQuality {
                ratio,
                limit: max_mesh_ratio,
            });
        }

        self.speed.resize(n, 0.0);
        self.ds.resize(n, 0.0);
        self.tangent.resize(n, Vec2::ZERO);
        self.normal.resize(n, Vec2::ZERO);
        self.curvature.resize(n, 0.0);
        self.k_s.resize(n, 0.0);
        self.k_ss.resize(n, 0.0);
        self.k_sss.resize(n, 0.0);
        self.scratch.resize(n, 0.0);

        let pts = curve.points();
        // γ_u into tangent storage, then normalize.
        d4_cyclic_vec2(pts, &mut self.tangent);
        let inv_n = 1.0 / n as f64;
        let mut length = 0.0;
        for i in 0..n {
            let g = self.tangent[i].norm();
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::NotImmersed(format!(
                    "vanishing parameter speed at node {i}"
                )));
            }
            self.speed[i] = g;
            self.ds[i] = g * inv_n;
            length += self.ds[i];
            self.tangent[i] = self.tangent[i] / g;
            self.normal[i] = self.tangent[i].perp();
        }
        self.length = length;

        // Curvature vector κ = τ_s; signed curvature k = ⟨κ, ν⟩.
        // Reuse a Vec2 buffer by differentiating components through scratch.
        {
            let mut kappa = vec![Vec2::ZERO; n];
            d4_cyclic_vec2(&self.tangent, &mut kappa);
            for i in 0..n {
                self.curvature[i] = kappa[i].dot(self.normal[i]) / self.speed[i];
            }
        }

        d4_cyclic(&self.curvature, &mut self.scratch);
        for i in 0..n {
            self.k_s[i] = self.scratch[i] / self.speed[i];
        }
        d4_cyclic(&self.k_s, &mut self.scratch);
        for i in 0..n {
            self.k_ss[i] = self.scratch[i] / self.speed[i];
        }
        d4_cyclic(&self.k_ss, &mut self.scratch);
        for i in 0..n {
            self.k_sss[i] = self.scratch[i] / self.speed[i];
        }

        for i in 0..n {
            if !(self.curvature[i].is_finite() && self.k_sss[i].is_finite()) {
                return Err(Error::NonFinite("curvature hierarchy"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.ds.len()
    }

    /// Arclength derivative of a nodal scalar field: (1/|γ_u|) D_u f.
    pub fn arclength_derivative(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.arclength_derivative_into(f, &mut out);
        out
    }

    pub fn arclength_derivative_into(&self, f: &[f64], out: &mut [f64]) {
        assert_eq!(f.len(), self.speed.len());
        d4_cyclic(f, out);
        for (o, g) in out.iter_mut().zip(&self.speed) {
            *o /= *g;
        }
    }

    /// Quadrature Σ f_i ds_i.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.ds).map(|(v, w)| v * w).sum()
    }

    /// Length-normalized average (1/L) Σ f ds.
    pub fn average(&self, f: &[f64]) -> f64 {
        self.integrate(f) / self.length
    }

    /// Σ f² ds.
    pub fn l2_norm_sq(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.ds).map(|(v, w)| v * v * w).sum()
    }

    pub fn sup_norm(&self, f: &[f64]) -> f64 {
        f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Centre of mass (1/L) Σ γ ds.
    pub fn centre_of_mass(&self, curve: &ClosedCurve) -> Vec2 {
        let mut c = Vec2::ZERO;
        for (p, w) in curve.points().iter().zip(&self.ds) {
            c += *p * *w;
        }
        c / self.length
    }
}

/// Convenience wrapper matching the operation name used throughout.
pub fn compute_geometry(curve: &ClosedCurve) -> Result<GeometricQuantities> {
    GeometricQuantities::compute(curve)
}

/// Maximum distance of the total-curvature integral from an integer before
/// the turning number is reported as ambiguous.
pub const TURNING_SNAP_TOL: f64 = 0.1;

/// Turning number: (1/2π) ∫ k ds snapped to the nearest integer.
#[derive(Clone, Copy, Debug)]
pub struct Turning {
    /// Raw integral value (1/2π) Σ k ds before snapping.
    pub raw: f64,
    /// Snapped signed turning number.
    pub signed: i64,
}

impl Turning {
    pub fn absolute(&self) -> u64 {
        self.signed.unsigned_abs()
    }
}

/// Computes the turning number; errors when the integral is farther than
/// [`TURNING_SNAP_TOL`] from every integer (under-resolved input).
pub fn turning_number(geom: &GeometricQuantities) -> Result<Turning> {
    let raw = geom.integrate(&geom.curvature) / (2.0 * std::f64::consts::PI);
    let nearest = raw.round();
    if (raw - nearest).abs() > TURNING_SNAP_TOL {
        return Err(Error::AmbiguousTurningNumber {
            value: raw,
            tol: TURNING_SNAP_TOL,
        });
    }
    Ok(Turning {
        raw,
        signed: nearest as i64,
    })
}

/// Scalar observables of one curve.
#[derive(Clone, Copy, Debug)]
pub struct ScalarDiagnostics {
    pub length: f64,
    /// Elastic energy E = ½ ∫ k² ds.
    pub energy: f64,
    pub turning: Turning,
    /// Average curvature 2ωπ/L, signed via the orientation.
    pub kbar: f64,
    /// Scale-invariant eps = L³ ∫ k_s² ds.
    pub eps: f64,
    /// Scale-invariant Q = ∫ k_s² ds / (∫ k² ds)³.
    pub q_ratio: f64,
    pub centre_of_mass: Vec2,
    /// ∫ k_s² ds, kept separately for monotonicity checks.
    pub ks_l2_sq: f64,
}

/// Populates every scalar observable from a consistent curve/geometry pair.
pub fn diagnostics(geom: &GeometricQuantities, curve: &ClosedCurve) -> Result<ScalarDiagnostics> {
    let turning = turning_number(geom)?;
    let k2 = geom.l2_norm_sq(&geom.curvature);
    let ks2 = geom.l2_norm_sq(&geom.k_s);
    let length = geom.length;
    Ok(ScalarDiagnostics {
        length,
        energy: 0.5 * k2,
        turning,
        kbar: 2.0 * std::f64::consts::PI * turning.signed as f64 / length,
        eps: length.powi(3) * ks2,
        q_ratio: ks2 / k2.powi(3),
        centre_of_mass: geom.centre_of_mass(curve),
        ks_l2_sq: ks2,
    })
}

/// Discrete Poincaré margins for a zero-average nodal field f:
/// returns (‖f‖₂² / ((L²/4π²)‖f_s‖₂²), ‖f‖∞² / ((L/2π)‖f_s‖₂²)).
/// Both ratios are at most 1 + O(1/N²) for resolved fields.
pub fn poincare_margin(geom: &GeometricQuantities, f: &[f64]) -> Result<(f64, f64)> {
    if f.len() != geom.node_count() {
        return Err(Error::InvalidParameter(format!(
            "field has {} nodes, geometry has {}",
            f.len(),
            geom.node_count()
        )));
    }
    let avg = geom.average(f);
    let scale = geom.sup_norm(f).max(1e-300);
    if avg.abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::NonzeroAverage { average: avg });
    }
    let fs = geom.arclength_derivative(f);
    let fs2 = geom.l2_norm_sq(&fs);
    if fs2 == 0.0 {
        return Err(Error::InvalidParameter(
            "zero-derivative field has no Poincaré ratio".into(),
        ));
    }
    let l = geom.length;
    let two_pi = 2.0 * std::f64::consts::PI;
    let ratio_l2 = geom.l2_norm_sq(f) / (l * l / (two_pi * two_pi) * fs2);
    let sup = geom.sup_norm(f);
    let ratio_sup = sup * sup / (l / two_pi * fs2);
    Ok((ratio_l2, ratio_sup))
}

/// Subtracts the ds-weighted average, producing a zero-average field.
pub fn subtract_average(geom: &GeometricQuantities, f: &[f64]) -> Vec<f64> {
    let avg = geom.average(f);
    f.iter().map(|v| v - avg).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn curve_from(f: impl Fn(f64) -> Vec2, n: usize) -> ClosedCurve {
        ClosedCurve::new((0..n).map(|i| f(i as f64 / n as f64)).collect()).unwrap()
    }

    fn circle(n: usize, rho: f64, omega: f64) -> ClosedCurve {
        curve_from(
            |u| {
                let th = 2.0 * PI * omega * u;
                Vec2::new(rho * th.cos(), rho * th.sin())
            },
            n,
        )
    }

    fn ellipse(n: usize, a: f64, b: f64) -> ClosedCurve {
        curve_from(
            |u| {
                let th = 2.0 * PI * u;
                Vec2::new(a * th.cos(), b * th.sin())
            },
            n,
        )
    }

    fn perturbed_circle(n: usize, m: f64, amp: f64) -> ClosedCurve {
        curve_from(
            |u| {
                let th = 2.0 * PI * u;
                let r = 1.0 + amp * (m * th).cos();
                Vec2::new(r * th.cos(), r * th.sin())
            },
            n,
        )
    }

    #[test]
    fn unit_circle_curvature_and_length() {
        let c = circle(256, 1.0, 1.0);
        let g = compute_geometry(&c).unwrap();
        for &k in &g.curvature {
            assert!((k - 1.0).abs() < 1e-3, "k = {k}");
        }
        assert!((g.length - 2.0 * PI).abs() < 1e-4, "L = {}", g.length);
    }

    #[test]
    fn omega_three_circle_radius_two() {
        let c = circle(384, 2.0, 3.0);
        let g = compute_geometry(&c).unwrap();
        for &k in &g.curvature {
            assert!((k - 0.5).abs() < 1e-6);
        }
        assert!((g.length - 12.0 * PI).abs() < 1e-6 * 12.0 * PI);
    }

    #[test]
    fn ellipse_curvature_matches_closed_form() {
        // Oracle: for (a cos t, b sin t), k(t) = ab / (a² sin²t + b² cos²t)^{3/2}.
        let (a, b) = (2.0, 1.0);
        let n = 512;
        let c = ellipse(n, a, b);
        let g = compute_geometry(&c).unwrap();
        for i in 0..n {
            let t = 2.0 * PI * i as f64 / n as f64;
            let denom = (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5);
            let exact = a * b / denom;
            assert!(
                (g.curvature[i] - exact).abs() < 1e-3,
                "node {i}: {} vs {exact}",
                g.curvature[i]
            );
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let g = compute_geometry(&ellipse(128, 2.0, 1.0)).unwrap();
        for i in 0..g.node_count() {
            assert!((g.tangent[i].norm() - 1.0).abs() < 1e-14);
            assert!((g.normal[i].norm() - 1.0).abs() < 1e-14);
            assert!(g.tangent[i].dot(g.normal[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn turning_numbers() {
        let g = compute_geometry(&circle(256, 1.0, 2.0)).unwrap();
        let t = turning_number(&g).unwrap();
        assert_eq!(t.signed, 2);
        assert_eq!(t.absolute(), 2);

        // Clockwise traversal flips the sign but not the absolute value.
        let cw = curve_from(
            |u| {
                let th = -2.0 * PI * u;
                Vec2::new(th.cos(), th.sin())
            },
            128,
        );
        let t = turning_number(&compute_geometry(&cw).unwrap()).unwrap();
        assert_eq!(t.signed, -1);
        assert_eq!(t.absolute(), 1);
    }

    #[test]
    fn derivative_integrals_vanish() {
        let g = compute_geometry(&ellipse(256, 2.0, 1.0)).unwrap();
        for f in [&g.k_s, &g.k_ss, &g.k_sss] {
            let total = g.integrate(f);
            let scale: f64 = f.iter().zip(&g.ds).map(|(v, w)| v.abs() * w).sum();
            assert!(
                total.abs() <= 1e-11 * scale.max(1.0),
                "∫ f ds = {total}, scale {scale}"
            );
        }
    }

    #[test]
    fn summation_by_parts_is_exact() {
        let g = compute_geometry(&ellipse(256, 2.0, 1.0)).unwrap();
        let lhs: f64 = g.integrate(
            &g.k_ss
                .iter()
                .zip(&g.curvature)
                .map(|(a, b)| a * b)
                .collect::<Vec<_>>(),
        );
        let rhs = g.l2_norm_sq(&g.k_s);
        let scale = rhs.abs().max(1.0);
        assert!(
            (lhs + rhs).abs() < 1e-11 * scale,
            "∫k_ss k ds + ∫k_s² ds = {}",
            lhs + rhs
        );
    }

    #[test]
    fn circle_diagnostics_are_exact_cases() {
        // ω-circle of radius ρ: E = ωπ/ρ, eps = 0, Q = 0.
        for (omega, rho) in [(1.0, 1.0), (2.0, 0.5), (3.0, 2.5)] {
            let c = circle(512, rho, omega);
            let g = compute_geometry(&c).unwrap();
            let d = diagnostics(&g, &c).unwrap();
            let e_exact = omega * PI / rho;
            assert!((d.energy - e_exact).abs() < 1e-8 * e_exact);
            assert!(d.eps.abs() < 1e-18);
            assert!(d.q_ratio.abs() < 1e-20);
        }
    }

    #[test]
    fn length_energy_product_bounds() {
        // Equality case on the round circle, strict inequality elsewhere.
        let c = circle(256, 1.0, 1.0);
        let g = compute_geometry(&c).unwrap();
        let d = diagnostics(&g, &c).unwrap();
        assert!((d.length * d.energy - 2.0 * PI * PI).abs() < 1e-7);

        for c in [ellipse(256, 2.0, 1.0), perturbed_circle(256, 3.0, 0.05)] {
            let g = compute_geometry(&c).unwrap();
            let d = diagnostics(&g, &c).unwrap();
            assert!(d.length * d.energy >= 2.0 * PI * PI - 1e-7);
        }
    }

    #[test]
    fn eps_identity_against_q() {
        for c in [ellipse(256, 2.0, 1.0), perturbed_circle(512, 5.0, 0.02)] {
            let g = compute_geometry(&c).unwrap();
            let d = diagnostics(&g, &c).unwrap();
            let reconstructed = d.length.powi(3) * (2.0 * d.energy).powi(3) * d.q_ratio;
            assert!((reconstructed - d.eps).abs() <= 1e-10 * d.eps.abs().max(1e-300));
        }
    }

    #[test]
    fn eps_and_q_are_invariant_under_rigid_motions_and_scaling() {
        let base = ellipse(256, 2.0, 1.0);
        let g = compute_geometry(&base).unwrap();
        let d0 = diagnostics(&g, &base).unwrap();
        let variants = [
            base.rotated(PI / 7.0),
            base.translated(Vec2::new(3.0, -4.0)),
            base.scaled(5.0).unwrap(),
            base.scaled(0.5).unwrap(),
            base.scaled(10.0).unwrap(),
        ];
        for v in variants {
            let g = compute_geometry(&v).unwrap();
            let d = diagnostics(&g, &v).unwrap();
            assert!(
                (d.eps - d0.eps).abs() <= 1e-10 * d0.eps,
                "eps {} vs {}",
                d.eps,
                d0.eps
            );
            assert!((d.q_ratio - d0.q_ratio).abs() <= 1e-10 * d0.q_ratio);
        }
    }

    #[test]
    fn curvature_error_bound_and_order() {
        // On the unit circle the discretization is exact up to roundoff,
        // comfortably inside the O(N^-2) requirement.
        for n in [64usize, 128, 256, 512] {
            let g = compute_geometry(&circle(n, 1.0, 1.0)).unwrap();
            let err = g
                .curvature
                .iter()
                .fold(0.0f64, |m, k| m.max((k - 1.0).abs()));
            assert!(err <= 4.0 / (n * n) as f64, "N={n}: err={err}");
        }

        // Measured order on the ellipse, where every mode is present.
        let mut errs = Vec::new();
        for n in [64usize, 128, 256, 512] {
            let g = compute_geometry(&ellipse(n, 2.0, 1.0)).unwrap();
            let err = (0..n).fold(0.0f64, |m, i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let denom = (4.0 * t.sin().powi(2) + t.cos().powi(2)).powf(1.5);
                m.max((g.curvature[i] - 2.0 / denom).abs())
            });
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 4.0, "order below 2: {:?}", errs);
        }
    }

    #[test]
    fn mesh_quality_is_refused() {
        // Cluster nodes around u = 0 hard enough to exceed the default ratio.
        let n = 64;
        let c = curve_from(
            |u| {
                let v = u - 0.35 * (2.0 * PI * u).sin() / (2.0 * PI);
                let th = 2.0 * PI * v;
                Vec2::new(th.cos(), th.sin())
            },
            n,
        );
        assert!(c.mesh_ratio() > 2.0);
        assert!(matches!(
            GeometricQuantities::compute_with_limit(&c, 1.5),
            Err(Error::MeshQuality { .. })
        ));
        assert!(compute_geometry(&c).is_ok());
    }

    #[test]
    fn poincare_first_mode_saturates() {
        let c = circle(256, 1.0, 1.0);
        let g = compute_geometry(&c).unwrap();
        let f: Vec<f64> = (0..256)
            .map(|i| (2.0 * PI * i as f64 / 256.0).sin())
            .collect();
        let (l2, sup) = poincare_margin(&g, &f).unwrap();
        assert!((l2 - 1.0).abs() < 1e-3, "l2 ratio {l2}");
        assert!(sup <= 1.0 + 1e-2);
    }

    #[test]
    fn poincare_third_mode_ratio() {
        // Oracle: mode e^{i m s} on the unit circle gives ‖f‖² / ((L²/4π²)‖f_s‖²) = 1/m².
        let c = circle(512, 1.0, 1.0);
        let g = compute_geometry(&c).unwrap();
        let f: Vec<f64> = (0..512)
            .map(|i| (6.0 * PI * i as f64 / 512.0).sin())
            .collect();
        let (l2, sup) = poincare_margin(&g, &f).unwrap();
        assert!((l2 - 1.0 / 9.0).abs() < 1e-3, "l2 ratio {l2}");
        assert!(sup <= 1.0 + 1e-2);
    }

    #[test]
    fn poincare_curvature_fluctuation() {
        let c = perturbed_circle(256, 4.0, 0.03);
        let g = compute_geometry(&c).unwrap();
        let f = subtract_average(&g, &g.curvature);
        let (l2, sup) = poincare_margin(&g, &f).unwrap();
        assert!(l2 <= 1.0 + 1e-2, "l2 ratio {l2}");
        assert!(sup <= 1.0 + 1e-2, "sup ratio {sup}");
    }

    #[test]
    fn poincare_rejects_nonzero_average() {
        let c = circle(64, 1.0, 1.0);
        let g = compute_geometry(&c).unwrap();
        let f = vec![1.0; 64];
        assert!(matches!(
            poincare_margin(&g, &f),
            Err(Error::NonzeroAverage { .. })
        ));
    }
}
