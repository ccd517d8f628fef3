use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Double-double scalar: an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`,
/// giving about 32 significant digits. Used as the reference side of
/// finite-difference gradient checks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Extended {
    hi: f64,
    lo: f64,
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
    (p, a.mul_add(b, -p))
}

impl Extended {
    pub const ZERO: Extended = Extended { hi: 0.0, lo: 0.0 };
    pub const ONE: Extended = Extended { hi: 1.0, lo: 0.0 };

    /// Normalizes `hi + lo`.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Self { hi, lo }
    }

    fn scale_pow2(self, s: f64) -> Self {
        Self {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Self::ZERO } else { Self::from(f64::NAN) };
        }
        let y = Self::from(self.hi.sqrt());
        // one Newton step doubles the 53 correct bits
        y + (self - y * y) / (y + y)
    }

    pub fn exp(self) -> Self {
        const LN2_HI: f64 = std::f64::consts::LN_2;
        const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;
        if self.hi > 709.0 {
            return Self::from(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Self::ZERO;
        }
        let k = (self.hi / LN2_HI).round();
        let ln2 = Self::new(LN2_HI, LN2_LO);
        // |r| <= ln2/2048, so a short Taylor series converges to full width
        let r = (self - ln2.mul_f64(k)).scale_pow2(1.0 / 1024.0);
        let mut term = Self::ONE;
        let mut sum = Self::ONE;
        for n in 1..=14 {
            term = term * r / Self::from(n as f64);
            sum += term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.scale_pow2(2f64.powi(k as i32))
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Self::from(if self.hi == 0.0 { f64::NEG_INFINITY } else { f64::NAN });
        }
        let mut y = Self::from(self.hi.ln());
        // Newton on exp(y) = x; quadratic convergence from 53 bits
        for _ in 0..2 {
            y = y + self * (-y).exp() - Self::ONE;
        }
        y
    }

    pub fn tanh(self) -> Self {
        if self.hi.abs() > 40.0 {
            return Self::from(self.hi.signum());
        }
        if self.hi.abs() < 1e-3 {
            // avoids cancellation in e - 1 for tiny arguments
            let x2 = self * self;
            let mut term = self;
            let mut sum = self;
            // tanh x = x - x^3/3 + 2x^5/15 - 17x^7/315 + 62x^9/2835 - ...
            let coeffs = [
                (-1.0, 3.0),
                (2.0, 15.0),
                (-17.0, 315.0),
                (62.0, 2835.0),
                (-1382.0, 155_925.0),
                (21844.0, 6_081_075.0),
                (-929_569.0, 638_512_875.0),
            ];
            for (num, den) in coeffs {
                term *= x2;
                sum += term * Self::from(num) / Self::from(den);
            }
            return sum;
        }
        let e = (self + self).exp();
        (e - Self::ONE) / (e + Self::ONE)
    }
}

impl From<f64> for Extended {
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }
}

impl Neg for Extended {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Extended {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        if !s.is_finite() {
            return Self::from(s);
        }
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }
}

impl Sub for Extended {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + -b
    }
}

impl Mul for Extended {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        if !p.is_finite() {
            return Self::from(p);
        }
        let (hi, lo) = quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi));
        Self { hi, lo }
    }
}

impl Div for Extended {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Self::from(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from(q3)
    }
}

impl AddAssign for Extended {
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl SubAssign for Extended {
    fn sub_assign(&mut self, b: Self) {
        *self = *self - b;
    }
}

impl MulAssign for Extended {
    fn mul_assign(&mut self, b: Self) {
        *self = *self * b;
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}{:+e}", self.hi, self.lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Extended, b: Extended, tol: f64) -> bool {
        (a - b).abs().to_f64() <= tol * b.abs().to_f64().max(1e-300)
    }

    #[test]
    fn division_recovers_product() {
        for &(a, b) in &[(0.3, 1.7), (1.0, 3.0), (-7.25, 0.1), (1e-8, 9.0)] {
            let (a, b) = (Extended::from(a), Extended::from(b));
            let q = a / b;
            assert!(close(q * b, a, 1e-30), "{a} / {b}");
        }
        // 1/3 is 0.333... with the lo part carrying the next 53 bits
        let third = Extended::ONE / Extended::from(3.0);
        let resid = Extended::ONE - third * Extended::from(3.0);
        assert!(resid.abs().to_f64() < 1e-31);
    }

    #[test]
    fn exp_and_ln_are_inverse() {
        for &x in &[-20.0, -1.5, -1e-6, 0.0, 0.3, 1.0, 12.5] {
            let x = Extended::from(x) / Extended::from(7.0);
            let back = x.exp().ln();
            assert!((back - x).abs().to_f64() < 1e-27 * x.abs().to_f64().max(1.0), "{x}");
        }
        // e^1 against a 40-digit constant split into two doubles
        let e = Extended::new(std::f64::consts::E, 1.445_646_891_729_250_2e-16);
        assert!(close(Extended::ONE.exp(), e, 1e-28));
    }

    #[test]
    fn tanh_matches_exp_definition_and_series() {
        for &x in &[-3.0, -0.2, 1e-4, 5e-4, 2e-3, 0.7, 4.0] {
            let x = Extended::from(x);
            let e = (x + x).exp();
            let reference = (e - Extended::ONE) / (e + Extended::ONE);
            // the reference itself loses digits to cancellation near zero
            assert!(close(x.tanh(), reference, 1e-24), "{x}");
        }
        let s = Extended::from(2.0).sqrt();
        assert!(close(s * s, Extended::from(2.0), 1e-31));
    }
}
