//! The explicit constant chain of the circle-stability estimates.
//!
//! For turning number ω ≥ 1 the chain consists of the monotonicity threshold
//! eps_*(ω), the decay threshold eps₁(ω) (a minimum of three candidates plus a
//! cap), the preservation threshold eps₂(ω), the length-law coefficient
//! Ĉ(σ,ω), the lifespan δ_*(ε,σ), the decay exponents c₁, c₂ and the decay
//! prefactor c₃. Closed forms are evaluated in double-double arithmetic
//! (rewritten to avoid the catastrophic cancellation in eps_*) and every
//! root-characterized value is cross-checked by independent bisection.

use crate::dd::Dd;
use crate::error::{Error, Result};

use std::f64::consts::PI;

/// How a constant was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Evaluated from the closed form in double-double arithmetic.
    ClosedForm,
    /// Closed form, independently confirmed by a bisection root-finder.
    CrossChecked,
    /// Located by bisection.
    Bisection,
    /// The defining constraint does not bind for this ω; the value is the
    /// documented fallback eps₁/2.
    NonBindingFallback,
}

/// A scalar with provenance and the defect in its defining equation.
#[derive(Clone, Copy, Debug)]
pub struct Certified {
    pub value: f64,
    pub provenance: Provenance,
    pub residual: f64,
}

fn require_omega(omega: u32) -> Result<()> {
    if omega < 1 {
        return Err(Error::InvalidParameter(format!(
            "turning number must be >= 1, got {omega}"
        )));
    }
    Ok(())
}

/// A = 11ω³ + 5ω, the coefficient entering the monotonicity threshold.
fn coeff_a(omega: u32) -> Dd {
    let w = Dd::from_u64(omega as u64);
    Dd::from_f64(11.0) * w.powi(3) + Dd::from_f64(5.0) * w
}

fn eps_star_dd(omega: u32) -> Dd {
    // (8π³/25)·B² with B = sqrt(A² + 5/16) − A rewritten as
    // B = (5/16)/(sqrt(A² + 5/16) + A) to avoid cancellation.
    let a = coeff_a(omega);
    let five_sixteenth = Dd::from_f64(5.0) / Dd::from_f64(16.0);
    let b = five_sixteenth / ((a * a + five_sixteenth).sqrt() + a);
    Dd::from_f64(8.0) * Dd::PI.powi(3) / Dd::from_f64(25.0) * b * b
}

/// Monotonicity threshold eps_*(ω) = (8π³/25)(sqrt((11ω³+5ω)² + 5/16) − (11ω³+5ω))².
/// Below this value of eps, ∫k_s² ds is non-increasing along the flow.
pub fn eps_star(omega: u32) -> f64 {
    eps_star_dd(omega).to_f64()
}

/// The quadratic whose positive root squares to eps_*:
/// g(x) = 1/16 − (5/(8π³))x² − ((11ω³+5ω)/sqrt(2π³))x.
fn eps_star_quadratic(omega: u32, x: f64) -> f64 {
    let a = coeff_a(omega).to_f64();
    1.0 / 16.0 - 5.0 / (8.0 * PI.powi(3)) * x * x - a / (2.0 * PI.powi(3)).sqrt() * x
}

/// eps_* with the defect of sqrt(eps_*) in its defining quadratic.
pub fn eps_star_certified(omega: u32) -> Result<Certified> {
    require_omega(omega)?;
    let value = eps_star(omega);
    let residual = eps_star_quadratic(omega, value.sqrt());
    Ok(Certified {
        value,
        provenance: Provenance::CrossChecked,
        residual,
    })
}

/// Plain bisection on a bracketing interval; returns (root, final width).
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64, iters: usize) -> Result<(f64, f64)> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok((lo, 0.0));
    }
    if fhi == 0.0 {
        return Ok((hi, 0.0));
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootFind(format!(
            "no sign change on [{lo:.6e}, {hi:.6e}]: f = {flo:.3e}, {fhi:.3e}"
        )));
    }
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok((mid, 0.0));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), hi - lo))
}

/// Independent root-finder for eps_*: bisects the defining quadratic and
/// squares the root.
pub fn eps_star_bisected(omega: u32) -> Result<f64> {
    require_omega(omega)?;
    let (root, _) = bisect(0.0, 1.0, |x| eps_star_quadratic(omega, x), 200)?;
    Ok(root * root)
}

/// Length-law coefficient Ĉ(σ,ω) = 4 + σ/(4π³) + sqrt(8ω²/π³)·sqrt(σ) + 12ω²,
/// a quadratic polynomial in sqrt(σ) with positive coefficients.
pub fn c_hat(sigma: f64, omega: u32) -> Result<f64> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    let s = Dd::from_f64(sigma);
    let w2 = Dd::from_u64(omega as u64 * omega as u64);
    let pi3 = Dd::PI.powi(3);
    let v = Dd::from_f64(4.0)
        + s / (Dd::from_f64(4.0) * pi3)
        + (Dd::from_f64(8.0) * w2 / pi3).sqrt() * s.sqrt()
        + Dd::from_f64(12.0) * w2;
    Ok(v.to_f64())
}

/// 32 ω⁴ π⁴, the leading length-law slope.
pub fn length_law_slope(omega: u32) -> f64 {
    (Dd::from_f64(32.0) * Dd::from_u64(omega as u64).powi(4) * Dd::PI.powi(4)).to_f64()
}

/// Lifespan δ_*(ε,σ,ω), the unique positive root of
/// P(t) = ε(1 + (σĈ(σ,ω) + 31ω⁴π⁴·…)t)^{3/4} − σ; explicitly
/// ((σ/ε)^{4/3} − 1)/(σĈ(σ,ω) + 32ω⁴π⁴).
#[derive(Clone, Copy, Debug)]
pub struct DeltaStar {
    pub value: f64,
    /// Set when ε = σ exactly (zero lifespan boundary).
    pub at_boundary: bool,
}

pub fn delta_star(eps: f64, sigma: f64, omega: u32) -> Result<DeltaStar> {
    require_omega(omega)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    if eps > sigma {
        return Err(Error::InvalidParameter(format!(
            "lifespan undefined for eps = {eps} > sigma = {sigma}"
        )));
    }
    if eps == sigma {
        return Ok(DeltaStar {
            value: 0.0,
            at_boundary: true,
        });
    }
    let ratio = Dd::from_f64(sigma) / Dd::from_f64(eps);
    let num = ratio.pow_4_3() - Dd::ONE;
    let denom = Dd::from_f64(sigma) * Dd::from_f64(c_hat(sigma, omega)?)
        + Dd::from_f64(32.0) * Dd::from_u64(omega as u64).powi(4) * Dd::PI.powi(4);
    Ok(DeltaStar {
        value: (num / denom).to_f64(),
        at_boundary: false,
    })
}

/// Defect P(δ) of a candidate lifespan in the defining equation.
pub fn delta_star_residual(eps: f64, sigma: f64, omega: u32, delta: f64) -> Result<f64> {
    require_omega(omega)?;
    let c2 = Dd::from_f64(sigma) * Dd::from_f64(c_hat(sigma, omega)?)
        + Dd::from_f64(32.0) * Dd::from_u64(omega as u64).powi(4) * Dd::PI.powi(4);
    let x = Dd::ONE + c2 * Dd::from_f64(delta);
    let p = Dd::from_f64(eps) * x.pow_3_4() - Dd::from_f64(sigma);
    Ok(p.to_f64())
}

/// Q(x) = (3/8π²)x² + (6ω/sqrt(2π))x^{3/2} + 18ω²π·x + (48ω³π³/sqrt(2π))x^{1/2}.
pub fn q_poly(x: f64, omega: u32) -> Result<f64> {
    require_omega(omega)?;
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("x must be nonnegative, got {x}")));
    }
    let xd = Dd::from_f64(x);
    let w = Dd::from_u64(omega as u64);
    let sqrt_2pi = (Dd::from_f64(2.0) * Dd::PI).sqrt();
    let rx = xd.sqrt();
    let v = Dd::from_f64(3.0) / (Dd::from_f64(8.0) * Dd::PI.powi(2)) * xd * xd
        + Dd::from_f64(6.0) * w / sqrt_2pi * xd * rx
        + Dd::from_f64(18.0) * w * w * Dd::PI * xd
        + Dd::from_f64(48.0) * w.powi(3) * Dd::PI.powi(3) / sqrt_2pi * rx;
    Ok(v.to_f64())
}

/// Which candidate fixes eps₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpsOneBinding {
    EpsStar,
    SixthOfPiFourth,
    QPolyRoot,
    CHatCap,
}

impl std::fmt::Display for EpsOneBinding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EpsOneBinding::EpsStar => "eps_star",
            EpsOneBinding::SixthOfPiFourth => "pi^4/6",
            EpsOneBinding::QPolyRoot => "Q-poly root",
            EpsOneBinding::CHatCap => "eps*C_hat cap",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EpsOne {
    pub value: f64,
    pub binding: EpsOneBinding,
    /// First positive root of Q(x) = (2ωπ)⁴/15 (one of the candidates).
    pub q_root: f64,
}

/// eps₁(ω) = min{eps_*(ω), π⁴/6, first positive root of Q(x) − (2ωπ)⁴/15},
/// reduced further if needed so that eps₁·Ĉ(eps₁,ω) ≤ 16ω⁴π⁴.
pub fn eps_one(omega: u32) -> Result<EpsOne> {
    require_omega(omega)?;
    let target = (2.0 * omega as f64 * PI).powi(4) / 15.0;
    // Bracket the Q-root by doubling: Q is strictly increasing from 0.
    let mut hi = 1.0;
    while q_poly(hi, omega)? < target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::RootFind("Q-poly root bracket diverged".into()));
        }
    }
    let (q_root, _) = bisect(0.0, hi, |x| q_poly(x, omega).unwrap() - target, 200)?;

    let candidates = [
        (eps_star(omega), EpsOneBinding::EpsStar),
        (PI.powi(4) / 6.0, EpsOneBinding::SixthOfPiFourth),
        (q_root, EpsOneBinding::QPolyRoot),
    ];
    let (mut value, mut binding) = candidates[0];
    for &(v, b) in &candidates[1..] {
        if v < value {
            value = v;
            binding = b;
        }
    }
    // Cap so the lower length bound keeps a positive coefficient of t.
    let cap = 16.0 * (omega as f64).powi(4) * PI.powi(4);
    if value * c_hat(value, omega)? > cap {
        let (capped, _) = bisect(0.0, value, |e| e * c_hat(e, omega).unwrap() - cap, 200)?;
        value = capped;
        binding = EpsOneBinding::CHatCap;
    }
    Ok(EpsOne {
        value,
        binding,
        q_root,
    })
}

/// c₁ as a function of an (artificially small) eps₁:
/// c₁ = 48ω⁴π⁴ / (5(eps₁Ĉ(eps₁,ω) + 32ω⁴π⁴)); approaches 3/10 as eps₁ → 0.
pub fn c_one_of(eps1: f64, omega: u32) -> Result<f64> {
    require_omega(omega)?;
    let w4pi4 = Dd::from_u64(omega as u64).powi(4) * Dd::PI.powi(4);
    let c2 = Dd::from_f64(eps1) * Dd::from_f64(c_hat(eps1, omega)?)
        + Dd::from_f64(32.0) * w4pi4;
    Ok((Dd::from_f64(48.0) * w4pi4 / (Dd::from_f64(5.0) * c2)).to_f64())
}

/// The full constant chain for one turning number.
#[derive(Clone, Debug)]
pub struct TheoryConstants {
    pub omega: u32,
    /// Residual: defining quadratic at sqrt(eps_*).
    pub eps_star: Certified,
    /// Relative gap between the closed form and the independent bisection.
    pub eps_star_bisect_gap: f64,
    /// Residual: Q(eps₁) − (2ωπ)⁴/15 (nonpositive margin).
    pub eps_one: Certified,
    pub eps_one_binding: EpsOneBinding,
    pub q_root: f64,
    /// Residual: log of the preservation inequality at eps₂ (nonpositive).
    pub eps_two: Certified,
    /// Certified bisection bracket width (zero for the fallback).
    pub eps_two_bracket: f64,
    /// Relative agreement of bisected eps₂ with its closed form, when bound.
    pub eps_two_closed_form_gap: Option<f64>,
    /// c₂ = eps₁Ĉ(eps₁,ω) + 32ω⁴π⁴. Residual: defect of that identity.
    pub c_two: Certified,
    /// c₁ = 48ω⁴π⁴/(5c₂), the decay exponent. Residual: defect of the identity.
    pub c_one: Certified,
    /// Decay prefactor c₃ = (eps₂/64π⁶)(eps₁/8π² + 2ω²π²)³; since c₂ ≥ 1,
    /// (1 + c₂t/L₀⁴)^{−c₁} ≤ (1 + t/L₀⁴)^{−c₁} needs no extra normalization.
    pub c_three: Certified,
    /// δ_*(eps₂, eps₁) — the certified lifespan used in the preservation step.
    pub delta_star_two_one: f64,
}

/// Log-form of the preservation inequality evaluated at eps:
/// ln[(1/64π⁶)(eps₁/8π² + 2ω²π²)³] − c₁ ln(1 + δ_*(eps,eps₁)/c₂)  (≤ 0 required).
fn preservation_log(eps: f64, eps1: f64, c1: f64, c2: f64, ln_r: f64) -> f64 {
    // δ*/c₂ = ((eps₁/eps)^{4/3} − 1)/c₂²; safe in log space for tiny eps.
    let pow43 = ((4.0 / 3.0) * (eps1.ln() - eps.ln())).exp();
    let delta_over_c2 = (pow43 - 1.0) / (c2 * c2);
    ln_r - c1 * delta_over_c2.ln_1p()
}

impl TheoryConstants {
    pub fn compute(omega: u32) -> Result<TheoryConstants> {
        require_omega(omega)?;
        let eps_star_cert = eps_star_certified(omega)?;
        let bisected = eps_star_bisected(omega)?;
        let eps_star_bisect_gap = (eps_star_cert.value - bisected).abs() / eps_star_cert.value;

        let e1 = eps_one(omega)?;
        let target = (2.0 * omega as f64 * PI).powi(4) / 15.0;
        let eps_one_cert = Certified {
            value: e1.value,
            provenance: match e1.binding {
                EpsOneBinding::QPolyRoot | EpsOneBinding::CHatCap => Provenance::Bisection,
                _ => Provenance::ClosedForm,
            },
            residual: q_poly(e1.value, omega)? - target,
        };

        let w = omega as f64;
        let w4pi4_dd = Dd::from_u64(omega as u64).powi(4) * Dd::PI.powi(4);
        let c2_dd = Dd::from_f64(e1.value) * Dd::from_f64(c_hat(e1.value, omega)?)
            + Dd::from_f64(32.0) * w4pi4_dd;
        let c2 = c2_dd.to_f64();
        let c1 = (Dd::from_f64(48.0) * w4pi4_dd / (Dd::from_f64(5.0) * c2_dd)).to_f64();

        // R = (1/64π⁶)(eps₁/8π² + 2ω²π²)³.
        let r_dd = (Dd::from_f64(e1.value) / (Dd::from_f64(8.0) * Dd::PI.powi(2))
            + Dd::from_f64(2.0 * w * w) * Dd::PI.powi(2))
        .powi(3)
            / (Dd::from_f64(64.0) * Dd::PI.powi(6));
        let r = r_dd.to_f64();
        let ln_r = r.ln();

        let g = |e: f64| preservation_log(e, e1.value, c1, c2, ln_r);

        let (eps2_value, eps2_prov, eps2_bracket, eps2_cf_gap) = if g(e1.value * (1.0 - 1e-12))
            <= 0.0
        {
            // The inequality holds all the way up to eps₁ (R ≤ 1): the
            // corollary constraint does not bind. Canonical fallback eps₁/2.
            (e1.value / 2.0, Provenance::NonBindingFallback, 0.0, None)
        } else {
            // Find a negative bracket end; δ_* → ∞ as eps → 0 guarantees one.
            let mut lo = e1.value / 2.0;
            let mut shrink = 0;
            while g(lo) > 0.0 {
                lo *= 0.5;
                shrink += 1;
                if shrink > 4000 {
                    return Err(Error::RootFind(
                        "preservation inequality vacuous: no admissible eps2 found".into(),
                    ));
                }
            }
            let (root, width) = bisect(lo, e1.value, g, 240)?;
            // Closed form: eps₂ = eps₁ (1 + c₂²(R^{1/c₁} − 1))^{−3/4}.
            let cf = e1.value * (1.0 + c2 * c2 * ((ln_r / c1).exp() - 1.0)).powf(-0.75);
            let gap = (root - cf).abs() / cf;
            (root, Provenance::Bisection, width, Some(gap))
        };
        let eps_two_cert = Certified {
            value: eps2_value,
            provenance: eps2_prov,
            residual: g(eps2_value),
        };

        let c_two_cert = Certified {
            value: c2,
            provenance: Provenance::ClosedForm,
            residual: c2 - (e1.value * c_hat(e1.value, omega)? + 32.0 * w.powi(4) * PI.powi(4)),
        };
        let c_one_cert = Certified {
            value: c1,
            provenance: Provenance::ClosedForm,
            residual: c1 * 5.0 * c2 - 48.0 * w.powi(4) * PI.powi(4),
        };
        let c3 = (Dd::from_f64(eps2_value) * r_dd).to_f64();
        let c_three_cert = Certified {
            value: c3,
            provenance: Provenance::ClosedForm,
            residual: c3 - eps2_value * r,
        };

        let ds = delta_star(eps2_value, e1.value, omega)?;

        Ok(TheoryConstants {
            omega,
            eps_star: eps_star_cert,
            eps_star_bisect_gap,
            eps_one: eps_one_cert,
            eps_one_binding: e1.binding,
            q_root: e1.q_root,
            eps_two: eps_two_cert,
            eps_two_bracket: eps2_bracket,
            eps_two_closed_form_gap: eps2_cf_gap,
            c_two: c_two_cert,
            c_one: c_one_cert,
            c_three: c_three_cert,
            delta_star_two_one: ds.value,
        })
    }

    /// Decay envelope Q(0)(1 + c₂ t / L₀⁴)^{−c₁}.
    pub fn q_envelope(&self, q0: f64, l0: f64, t: f64) -> f64 {
        q0 * (1.0 + self.c_two.value * t / l0.powi(4)).powf(-self.c_one.value)
    }

    /// Decay envelope c₃ (1 + t/L₀⁴)^{−c₁} for eps(t).
    pub fn eps_envelope(&self, l0: f64, t: f64) -> f64 {
        self.c_three.value * (1.0 + t / l0.powi(4)).powf(-self.c_one.value)
    }

    /// The preservation inequality evaluated at eps (log form, ≤ 0 means admissible).
    pub fn preservation_residual(&self, eps: f64) -> f64 {
        let w = self.omega as f64;
        let r = ((self.eps_one.value / (8.0 * PI * PI) + 2.0 * w * w * PI * PI).powi(3))
            / (64.0 * PI.powi(6));
        if eps >= self.eps_one.value {
            // Beyond eps₁ there is no preservation guarantee at all.
            return f64::INFINITY;
        }
        preservation_log(eps, self.eps_one.value, self.c_one.value, self.c_two.value, r.ln())
    }
}
