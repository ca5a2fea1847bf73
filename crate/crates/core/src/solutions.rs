//! Closed-form solutions and initial-data generators used as oracles:
//! expanding multiply-covered circles, the self-similarly expanding
//! lemniscate of Bernoulli, and radially perturbed circles.

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::geometry::{compute_geometry, diagnostics};
use crate::vec2::Vec2;

use std::f64::consts::PI;

/// Expanding ω-circle: radius ρ(t) = (ρ₀⁴ + 2t)^{1/4}.
#[derive(Clone, Copy, Debug)]
pub struct CircleSolution {
    pub omega: u32,
    pub rho0: f64,
    pub centre: Vec2,
}

impl CircleSolution {
    pub fn new(omega: u32, rho0: f64, centre: Vec2) -> Result<Self> {
        if omega < 1 {
            return Err(Error::InvalidParameter("circle turning number must be >= 1".into()));
        }
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(Error::InvalidParameter(format!("initial radius must be positive, got {rho0}")));
        }
        Ok(CircleSolution { omega, rho0, centre })
    }

    pub fn radius(&self, t: f64) -> f64 {
        (self.rho0.powi(4) + 2.0 * t).powf(0.25)
    }

    pub fn length(&self, t: f64) -> f64 {
        2.0 * PI * self.omega as f64 * self.radius(t)
    }

    /// Samples ρ(t)(cos 2πωu, sin 2πωu) + centre at u_i = i/N.
    pub fn curve_at(&self, t: f64, n: usize) -> Result<ClosedCurve> {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!("negative time {t}")));
        }
        let rho = self.radius(t);
        let om = self.omega as f64;
        let pts = (0..n)
            .map(|i| {
                let th = 2.0 * PI * om * i as f64 / n as f64;
                self.centre + Vec2::new(rho * th.cos(), rho * th.sin())
            })
            .collect();
        ClosedCurve::new(pts)
    }
}

/// Unit lemniscate of Bernoulli at angle θ ∈ [0, 2π):
/// β(θ) = (1/(1 + sin²θ)) (cos θ, ½ sin 2θ). Turning number zero.
pub fn lemniscate_point(theta: f64) -> Vec2 {
    let s = theta.sin();
    let d = 1.0 + s * s;
    Vec2::new(theta.cos() / d, 0.5 * (2.0 * theta).sin() / d)
}

/// Self-similarly expanding lemniscate: scale h(t) = (h₀⁴ + 30t)^{1/4}.
#[derive(Clone, Copy, Debug)]
pub struct LemniscateSolution {
    pub h0: f64,
}

impl LemniscateSolution {
    pub fn new(h0: f64) -> Result<Self> {
        if !(h0 > 0.0 && h0.is_finite()) {
            return Err(Error::InvalidParameter(format!("initial scale must be positive, got {h0}")));
        }
        Ok(LemniscateSolution { h0 })
    }

    pub fn scale(&self, t: f64) -> f64 {
        (self.h0.powi(4) + 30.0 * t).powf(0.25)
    }

    /// Samples h(t)·β(2πu_i); the angle parameter is rescaled from [0, 2π)
    /// to the unit parameter interval.
    pub fn curve_at(&self, t: f64, n: usize) -> Result<ClosedCurve> {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!("negative time {t}")));
        }
        let h = self.scale(t);
        let pts = (0..n)
            .map(|i| lemniscate_point(2.0 * PI * i as f64 / n as f64) * h)
            .collect();
        ClosedCurve::new(pts)
    }
}

/// One radial Fourier mode of a perturbed circle.
#[derive(Clone, Copy, Debug)]
pub struct PerturbationMode {
    /// Wavenumber in the polar angle θ (integer, so every covering sheet
    /// carries the same radial profile).
    pub wavenumber: u32,
    pub amplitude: f64,
    pub phase: f64,
}

/// A generated perturbed circle with its measured initial diagnostics.
#[derive(Clone, Debug)]
pub struct PerturbedCircle {
    pub curve: ClosedCurve,
    /// Measured eps(0) = L³ ∫k_s² ds of the generated curve.
    pub eps_initial: f64,
    /// Measured signed turning number.
    pub turning: i64,
}

/// ω-fold traversal of the radial graph r(θ) = ρ₀(1 + Σ aₘ cos(mθ + φₘ)).
/// The curve is rejected if the radial graph loses positivity or the samples
/// fail the immersion proxy. The measured eps(0) is reported so callers can
/// compare against the stability thresholds.
pub fn perturbed_circle(
    omega: u32,
    modes: &[PerturbationMode],
    rho0: f64,
    n: usize,
) -> Result<PerturbedCircle> {
    if omega < 1 {
        return Err(Error::InvalidParameter("turning number must be >= 1".into()));
    }
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {rho0}")));
    }
    for m in modes {
        if m.wavenumber == 0 {
            return Err(Error::InvalidParameter("mode wavenumber must be >= 1".into()));
        }
    }
    let radial = |theta: f64| -> f64 {
        let mut r = 1.0;
        for m in modes {
            r += m.amplitude * (m.wavenumber as f64 * theta + m.phase).cos();
        }
        rho0 * r
    };
    // Positivity on an oversampled grid; the graph must stay a graph.
    for j in 0..4 * n {
        let th = 2.0 * PI * omega as f64 * j as f64 / (4 * n) as f64;
        if radial(th) <= 0.0 {
            return Err(Error::NotImmersed(
                "radial graph loses positivity; amplitudes too large".into(),
            ));
        }
    }
    let pts = (0..n)
        .map(|i| {
            let th = 2.0 * PI * omega as f64 * i as f64 / n as f64;
            let r = radial(th);
            Vec2::new(r * th.cos(), r * th.sin())
        })
        .collect();
    let curve = ClosedCurve::new(pts)?;
    let geom = compute_geometry(&curve)?;
    let d = diagnostics(&geom, &curve)?;
    Ok(PerturbedCircle {
        curve,
        eps_initial: d.eps,
        turning: d.turning.signed,
    })
}
