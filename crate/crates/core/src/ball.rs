//! Fixed-point ball arithmetic with proven error radii.
//!
//! A [`Ball`] at precision `prec` stands for every real number in
//! `[(mid - rad) / 2^prec, (mid + rad) / 2^prec]`. Every operation widens the
//! radius by enough to cover both input uncertainty and its own rounding,
//! so an exact value that starts inside a ball stays inside after any
//! sequence of operations.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

/// Lowest working precision accepted anywhere.
pub const MIN_PRECISION: u32 = 53;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    mid: BigInt,
    rad: BigUint,
    prec: u32,
}

fn shr_round(x: &BigInt, bits: u32) -> BigInt {
    if bits == 0 {
        return x.clone();
    }
    let half = BigInt::from(1) << (bits - 1);
    (x + half) >> bits
}

fn shr_ceil(x: &BigUint, bits: u32) -> BigUint {
    if bits == 0 {
        return x.clone();
    }
    let mask = (BigUint::from(1u32) << bits) - 1u32;
    let up = (x + mask) >> bits;
    up
}

impl Ball {
    pub fn zero(prec: u32) -> Self {
        Ball {
            mid: BigInt::zero(),
            rad: BigUint::zero(),
            prec,
        }
    }

    pub fn from_int(k: &BigInt, prec: u32) -> Self {
        Ball {
            mid: k << prec,
            rad: BigUint::zero(),
            prec,
        }
    }

    pub fn from_i64(k: i64, prec: u32) -> Self {
        Ball::from_int(&BigInt::from(k), prec)
    }

    pub fn from_parts(mid: BigInt, rad: BigUint, prec: u32) -> Self {
        Ball { mid, rad, prec }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn mid_raw(&self) -> &BigInt {
        &self.mid
    }

    pub fn rad_raw(&self) -> &BigUint {
        &self.rad
    }

    pub fn mid_f64(&self) -> f64 {
        ratio_to_f64(&self.mid, self.prec)
    }

    pub fn rad_f64(&self) -> f64 {
        ratio_to_f64(&BigInt::from(self.rad.clone()), self.prec)
    }

    /// Upper bound on |x| in raw units.
    fn abs_upper(&self) -> BigUint {
        self.mid.magnitude() + &self.rad
    }

    pub fn add(&self, o: &Ball) -> Ball {
        debug_assert_eq!(self.prec, o.prec);
        Ball {
            mid: &self.mid + &o.mid,
            rad: &self.rad + &o.rad,
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &Ball) -> Ball {
        debug_assert_eq!(self.prec, o.prec);
        Ball {
            mid: &self.mid - &o.mid,
            rad: &self.rad + &o.rad,
            prec: self.prec,
        }
    }

    pub fn neg(&self) -> Ball {
        Ball {
            mid: -&self.mid,
            rad: self.rad.clone(),
            prec: self.prec,
        }
    }

    pub fn mul(&self, o: &Ball) -> Ball {
        debug_assert_eq!(self.prec, o.prec);
        let prod = &self.mid * &o.mid;
        let mid = shr_round(&prod, self.prec);
        // |xy - m1 m2| <= |m1| r2 + |m2| r1 + r1 r2, plus half an ulp of rounding
        let err = self.mid.magnitude() * &o.rad + o.mid.magnitude() * &self.rad + &self.rad * &o.rad;
        let rad = shr_ceil(&err, self.prec) + 1u32;
        Ball {
            mid,
            rad,
            prec: self.prec,
        }
    }

    /// Exact scaling by an integer.
    pub fn mul_int(&self, k: &BigInt) -> Ball {
        Ball {
            mid: &self.mid * k,
            rad: &self.rad * k.magnitude(),
            prec: self.prec,
        }
    }

    pub fn div_u64(&self, q: u64) -> Ball {
        assert!(q > 0, "division by zero");
        let qb = BigInt::from(q);
        let shifted: BigInt = &self.mid + (&qb >> 1);
        let quot = shifted.div_floor(&qb);
        let rad = (&self.rad + BigUint::from(q - 1)) / q + 1u32;
        Ball {
            mid: quot,
            rad,
            prec: self.prec,
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.mid.magnitude() <= &self.rad
    }

    pub fn contains_int(&self, k: &BigInt) -> bool {
        let shifted: BigInt = k << self.prec;
        (&self.mid - shifted).magnitude() <= &self.rad
    }

    /// Smallest and largest integers inside the ball, if any.
    pub fn integer_range(&self) -> Option<(BigInt, BigInt)> {
        let radi = BigInt::from(self.rad.clone());
        let lo_raw = &self.mid - &radi;
        let hi_raw = &self.mid + &radi;
        let one = BigInt::from(1) << self.prec;
        let lo = lo_raw.div_ceil(&one);
        let hi = hi_raw.div_floor(&one);
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// Width (2 * radius) rounded up to an integer.
    pub fn width_ceil(&self) -> BigInt {
        let w = BigInt::from(&self.rad * 2u32);
        let one = BigInt::from(1) << self.prec;
        w.div_ceil(&one)
    }
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} +/- {:.3e}]", self.mid_f64(), self.rad_f64())
    }
}

fn ratio_to_f64(x: &BigInt, prec: u32) -> f64 {
    // keep 64 significant bits, then scale
    let bits = x.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (x >> drop as usize).to_f64().unwrap_or(0.0);
    top * 2f64.powi((drop - prec as i64) as i32)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexBall {
    pub re: Ball,
    pub im: Ball,
}

impl ComplexBall {
    pub fn zero(prec: u32) -> Self {
        ComplexBall {
            re: Ball::zero(prec),
            im: Ball::zero(prec),
        }
    }

    pub fn add(&self, o: &ComplexBall) -> ComplexBall {
        ComplexBall {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    pub fn mul(&self, o: &ComplexBall) -> ComplexBall {
        ComplexBall {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> ComplexBall {
        ComplexBall {
            re: self.re.mul_int(k),
            im: self.im.mul_int(k),
        }
    }

    pub fn contains_int(&self, k: &BigInt) -> bool {
        self.re.contains_int(k) && self.im.contains_zero()
    }
}

/// arctan(1/x) in raw fixed point at `prec` bits, with an error bound in ulps.
fn atan_inv(x: u64, prec: u32) -> (BigInt, u64) {
    let one = BigInt::from(1) << prec;
    let x2 = BigInt::from(x * x);
    let mut power = &one / BigInt::from(x); // truncation: < 1 ulp
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    let mut err: u64 = 1;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power = &power / &x2;
        // one truncation for the term, one for the next power
        err += 2;
        k += 1;
    }
    // the neglected tail is bounded by the first skipped term, which is < 1 ulp
    (sum, err + 1)
}

/// A ball enclosing pi at `prec` bits (Machin's formula).
pub fn pi(prec: u32) -> Ball {
    let guard = 16;
    let wp = prec + guard;
    let (a5, e5) = atan_inv(5, wp);
    let (a239, e239) = atan_inv(239, wp);
    let mid = a5 * 16 - a239 * 4;
    let err = 16 * e5 + 4 * e239;
    let rad = (BigUint::from(err) >> guard) + 1u32;
    Ball {
        mid: shr_round(&mid, guard),
        rad,
        prec,
    }
}

/// Enclosures of (cos x, sin x) for a ball `x` with |x| <= 4.
pub fn cos_sin(x: &Ball) -> (Ball, Ball) {
    let prec = x.prec;
    let one = BigUint::from(1u32) << prec;
    assert!(
        x.abs_upper() <= &one * 4u32,
        "cos_sin expects an argument reduced to |x| <= 4"
    );
    let x2 = x.mul(x);
    let mut cos = Ball::from_i64(1, prec);
    let mut sin = x.clone();
    let mut cterm = Ball::from_i64(1, prec);
    let mut sterm = x.clone();
    let mut k: u64 = 0;
    loop {
        // cterm_k = (-1)^k x^{2k} / (2k)!,  sterm_k = (-1)^k x^{2k+1} / (2k+1)!
        cterm = cterm.mul(&x2).neg().div_u64((2 * k + 1) * (2 * k + 2));
        sterm = sterm.mul(&x2).neg().div_u64((2 * k + 2) * (2 * k + 3));
        cos = cos.add(&cterm);
        sin = sin.add(&sterm);
        k += 1;
        // for k >= 8 and |x| <= 4 successive terms shrink by a factor below 1/16,
        // so the omitted tail is bounded by the last term added
        if k >= 8 && cterm.abs_upper() <= BigUint::from(8u32) && sterm.abs_upper() <= BigUint::from(8u32) {
            break;
        }
    }
    cos.rad += cterm.abs_upper() + 1u32;
    sin.rad += sterm.abs_upper() + 1u32;
    (cos, sin)
}

/// Balls around cos(2 pi t / n) and sin(2 pi t / n) for t = 0..n.
pub fn unit_circle_table(n: u64, prec: u32) -> Vec<(Ball, Ball)> {
    let guard = 24 + 64 - (n.max(2) - 1).leading_zeros();
    let wp = prec + guard;
    let two_pi = pi(wp).mul_int(&BigInt::from(2));
    let mut table = Vec::with_capacity(n as usize);
    for t in 0..n {
        // reduce to angle in [0, pi] via t -> n - t
        let (tt, flip) = if 2 * t > n { (n - t, true) } else { (t, false) };
        let theta = two_pi.mul_int(&BigInt::from(tt)).div_u64(n);
        let (c, s) = cos_sin(&theta);
        let s = if flip { s.neg() } else { s };
        table.push((c.round_to(prec), s.round_to(prec)));
    }
    table
}

impl Ball {
    /// Drop to a lower precision, widening the radius to stay rigorous.
    pub fn round_to(&self, prec: u32) -> Ball {
        if prec >= self.prec {
            let shift = prec - self.prec;
            return Ball {
                mid: &self.mid << shift,
                rad: &self.rad << shift,
                prec,
            };
        }
        let shift = self.prec - prec;
        Ball {
            mid: shr_round(&self.mid, shift),
            rad: shr_ceil(&self.rad, shift) + 1u32,
            prec,
        }
    }

    pub fn is_negative_definite(&self) -> bool {
        self.mid.sign() == Sign::Minus && self.mid.magnitude() > &self.rad
    }

    pub fn abs_upper_f64(&self) -> f64 {
        ratio_to_f64(&BigInt::from(self.abs_upper()), self.prec)
    }

    pub fn is_within(&self, bound: &BigInt) -> bool {
        let b: BigInt = bound.abs() << self.prec;
        BigInt::from(self.abs_upper()) <= b
    }
}
