//! Double-double arithmetic (~31 significant digits) for evaluating the
//! stability-constant chain beyond f64 precision before rounding.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum hi + lo with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, f64::mul_add(a, b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// π to double-double precision.
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_u64(x: u64) -> Dd {
        Dd { hi: x as f64, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        debug_assert!(self.hi > 0.0);
        // One dd Newton step on a correctly rounded f64 seed.
        let y = Dd::from_f64(self.hi.sqrt());
        let y = (y + self / y) * Dd::from_f64(0.5);
        (y + self / y) * Dd::from_f64(0.5)
    }

    pub fn cbrt(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::ZERO;
        }
        let mut y = Dd::from_f64(self.hi.cbrt());
        for _ in 0..2 {
            // y <- y - (y³ - a) / (3y²)
            let y2 = y * y;
            y = y - (y2 * y - self) / (Dd::from_f64(3.0) * y2);
        }
        y
    }

    pub fn powi(self, n: i32) -> Dd {
        if n == 0 {
            return Dd::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// x^{3/4} = sqrt(x · sqrt(x)), for x >= 0.
    pub fn pow_3_4(self) -> Dd {
        (self * self.sqrt()).sqrt()
    }

    /// x^{4/3} = cbrt(x⁴), for x >= 0.
    pub fn pow_4_3(self) -> Dd {
        self.powi(4).cbrt()
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let two = Dd::from_f64(2.0);
        let r = two.sqrt();
        let back = r * r - two;
        assert!(back.to_f64().abs() < 1e-30);
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = Dd::from_f64(3.0) / Dd::from_f64(7.0);
        let b = a * Dd::from_f64(7.0) - Dd::from_f64(3.0);
        assert!(b.to_f64().abs() < 1e-30);
    }

    #[test]
    fn cbrt_exact_cube() {
        let x = Dd::from_f64(4096.0);
        let r = x.cbrt();
        assert!((r - Dd::from_f64(16.0)).to_f64().abs() < 1e-28);
    }

    #[test]
    fn pi_consistency() {
        // sin(pi_hi) equals the low word of π to first order.
        assert!((std::f64::consts::PI.sin() - Dd::PI.lo).abs() < 1e-26);
        let p2 = Dd::PI.powi(2);
        assert!((p2.to_f64() - std::f64::consts::PI * std::f64::consts::PI).abs() < 1e-14);
        let r = p2.sqrt() - Dd::PI;
        assert!(r.to_f64().abs() < 1e-30);
    }

    #[test]
    fn fractional_powers() {
        let x = Dd::from_f64(8.0);
        // 8^{4/3} = 16 exactly.
        assert!((x.pow_4_3() - Dd::from_f64(16.0)).to_f64().abs() < 1e-28);
        // 16^{3/4} = 8 exactly.
        assert!((Dd::from_f64(16.0).pow_3_4() - x).to_f64().abs() < 1e-28);
    }
}
