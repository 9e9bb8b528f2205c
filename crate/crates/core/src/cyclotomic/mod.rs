//! Exact arithmetic in Z[ζ_p] for a prime p.
//!
//! Elements are coefficient vectors of length p over the spanning set
//! 1, ζ, ..., ζ^{p-1}. The only relation is 1 + ζ + ... + ζ^{p-1} = 0, so a
//! vector is canonical once its constant coefficient has been subtracted from
//! every entry. Multiplication is cyclic convolution modulo X^p - 1.

mod ntt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ball::{unit_circle_table, ComplexBall, MIN_PRECISION};
use crate::ffprime::Prime;

pub use ntt::cyclic_convolution as ntt_cyclic_convolution;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycError {
    #[error("operands live in different cyclotomic rings (p = {0} vs p = {1})")]
    ModulusMismatch(u64, u64),
    #[error("coefficient vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("element is not a rational integer")]
    NotRational,
}

/// How products are computed. Both paths are bit-exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MulStrategy {
    Schoolbook,
    Ntt,
    /// Schoolbook up to the threshold, NTT above it.
    Auto { ntt_above: usize },
}

impl Default for MulStrategy {
    fn default() -> Self {
        MulStrategy::Auto { ntt_above: 512 }
    }
}

/// An element of Z[ζ_p] in canonical form (`coeffs[0] == 0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycInt {
    p: Prime,
    coeffs: Vec<BigInt>,
}

impl CycInt {
    pub fn zero(p: Prime) -> Self {
        CycInt {
            p,
            coeffs: vec![BigInt::zero(); p.as_usize()],
        }
    }

    pub fn from_integer(p: Prime, k: &BigInt) -> Self {
        let mut coeffs = vec![BigInt::zero(); p.as_usize()];
        coeffs[0] = k.clone();
        CycInt::canonical(p, coeffs)
    }

    pub fn one(p: Prime) -> Self {
        CycInt::from_integer(p, &BigInt::from(1))
    }

    /// ζ^t, exponent taken modulo p.
    pub fn zeta_pow(p: Prime, t: u64) -> Self {
        let mut coeffs = vec![BigInt::zero(); p.as_usize()];
        coeffs[(t % p.get()) as usize] = BigInt::from(1);
        CycInt::canonical(p, coeffs)
    }

    pub fn from_coeffs(p: Prime, coeffs: Vec<BigInt>) -> Result<Self, CycError> {
        if coeffs.len() != p.as_usize() {
            return Err(CycError::LengthMismatch {
                expected: p.as_usize(),
                got: coeffs.len(),
            });
        }
        Ok(CycInt::canonical(p, coeffs))
    }

    pub fn from_i64s(p: Prime, coeffs: &[i64]) -> Result<Self, CycError> {
        CycInt::from_coeffs(p, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    fn canonical(p: Prime, mut coeffs: Vec<BigInt>) -> Self {
        if !coeffs[0].is_zero() {
            let c0 = coeffs[0].clone();
            for c in coeffs.iter_mut() {
                *c -= &c0;
            }
        }
        CycInt { p, coeffs }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    fn check(&self, other: &CycInt) -> Result<(), CycError> {
        if self.p != other.p {
            return Err(CycError::ModulusMismatch(self.p.get(), other.p.get()));
        }
        Ok(())
    }

    pub fn add(&self, other: &CycInt) -> Result<CycInt, CycError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CycInt::canonical(self.p, coeffs))
    }

    pub fn add_assign(&mut self, other: &CycInt) -> Result<(), CycError> {
        self.check(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &CycInt) -> Result<CycInt, CycError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CycInt::canonical(self.p, coeffs))
    }

    pub fn neg(&self) -> CycInt {
        CycInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> CycInt {
        CycInt {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }

    pub fn mul(&self, other: &CycInt) -> Result<CycInt, CycError> {
        self.mul_with(other, MulStrategy::default())
    }

    pub fn mul_with(&self, other: &CycInt, strategy: MulStrategy) -> Result<CycInt, CycError> {
        self.check(other)?;
        let use_ntt = match strategy {
            MulStrategy::Schoolbook => false,
            MulStrategy::Ntt => true,
            MulStrategy::Auto { ntt_above } => self.p.as_usize() > ntt_above,
        };
        let coeffs = if use_ntt {
            ntt::cyclic_convolution(&self.coeffs, &other.coeffs)
        } else {
            schoolbook(&self.coeffs, &other.coeffs)
        };
        Ok(CycInt::canonical(self.p, coeffs))
    }

    pub fn pow(&self, mut e: u32) -> CycInt {
        let mut base = self.clone();
        let mut acc = CycInt::one(self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same ring");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same ring");
            }
        }
        acc
    }

    /// The rational integer this element equals, if it is one.
    pub fn as_integer(&self) -> Result<BigInt, CycError> {
        let c = self.coeffs.get(1).cloned().unwrap_or_default();
        if self.coeffs[1..].iter().any(|x| *x != c) {
            return Err(CycError::NotRational);
        }
        Ok(-c)
    }

    /// Galois automorphism ζ ↦ ζ^k for k prime to p.
    pub fn galois(&self, k: u64) -> CycInt {
        let p = self.p.get();
        assert!(k % p != 0, "Galois action needs k prime to p");
        let mut coeffs = vec![BigInt::zero(); p as usize];
        for (t, c) in self.coeffs.iter().enumerate() {
            coeffs[((t as u64 * k) % p) as usize] += c;
        }
        CycInt::canonical(self.p, coeffs)
    }

    /// Trace down to Q: the sum of all Galois conjugates.
    pub fn trace(&self) -> BigInt {
        // Tr(ζ^t) = -1 for t != 0, p - 1 for t = 0; coeffs[0] is zero here
        -self.coeffs[1..].iter().sum::<BigInt>()
    }

    /// A rigorous complex enclosure of the value under ζ = exp(2πi/p).
    pub fn approx_complex(&self, precision: u32) -> ComplexBall {
        let prec = precision.max(MIN_PRECISION);
        let table = unit_circle_table(self.p.get(), prec);
        self.approx_with_table(&table, prec)
    }

    pub(crate) fn approx_with_table(
        &self,
        table: &[(crate::ball::Ball, crate::ball::Ball)],
        prec: u32,
    ) -> ComplexBall {
        let mut acc = ComplexBall::zero(prec);
        for (c, (cos, sin)) in self.coeffs.iter().zip(table) {
            if c.is_zero() {
                continue;
            }
            acc.re = acc.re.add(&cos.mul_int(c));
            acc.im = acc.im.add(&sin.mul_int(c));
        }
        acc
    }
}

fn max_bits(v: &[BigInt]) -> u64 {
    v.iter().map(|c| c.bits()).max().unwrap_or(0)
}

fn schoolbook(x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
    let n = x.len();
    let len_bits = 64 - (n as u64).leading_zeros() as u64;
    if max_bits(x) + max_bits(y) + len_bits <= 126 {
        return schoolbook_i128(x, y);
    }
    let mut out = vec![BigInt::zero(); n];
    for (i, a) in x.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in y.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            let k = if i + j >= n { i + j - n } else { i + j };
            out[k] += a * b;
        }
    }
    out
}

/// Same convolution on machine words; the caller has checked every partial
/// sum fits in 127 bits.
fn schoolbook_i128(x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
    let n = x.len();
    let xs: Vec<i128> = x.iter().map(|c| c.to_i128().expect("bounded")).collect();
    let ys: Vec<i128> = y.iter().map(|c| c.to_i128().expect("bounded")).collect();
    let mut out = vec![0i128; n];
    for (i, &a) in xs.iter().enumerate() {
        if a == 0 {
            continue;
        }
        // split the inner loop where the index wraps
        let (head, tail) = out.split_at_mut(i);
        for (o, &b) in tail.iter_mut().zip(&ys[..n - i]) {
            *o += a * b;
        }
        for (o, &b) in head.iter_mut().zip(&ys[n - i..]) {
            *o += a * b;
        }
    }
    out.into_iter().map(BigInt::from).collect()
}

/// Largest absolute coefficient, for growth diagnostics.
pub fn max_coeff(x: &CycInt) -> BigInt {
    x.coeffs
        .iter()
        .map(|c| c.abs())
        .max()
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffprime::primes_in_range;
    use proptest::prelude::*;

    fn p(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&c| BigInt::from(c)).collect()
    }

    #[test]
    fn addition_examples() {
        let p3 = p(3);
        let z = CycInt::zeta_pow(p3, 1);
        let z2 = CycInt::zeta_pow(p3, 2);
        assert_eq!(z.add(&z2).unwrap().coeffs(), ints(&[0, 1, 1]).as_slice());
        assert_eq!(z.add(&CycInt::zero(p3)).unwrap(), z);
        let vanishing = CycInt::from_i64s(p3, &[1, 1, 1]).unwrap();
        assert!(vanishing.is_zero());
        assert_eq!(vanishing.add(&z).unwrap(), z);
        assert!(matches!(
            z.add(&CycInt::zero(p(5))),
            Err(CycError::ModulusMismatch(3, 5))
        ));
    }

    #[test]
    fn multiplication_examples() {
        for q in [p(3), p(5), p(13)] {
            let z = CycInt::zeta_pow(q, 1);
            let zinv = CycInt::zeta_pow(q, q.get() - 1);
            assert_eq!(z.mul(&zinv).unwrap(), CycInt::one(q));
            let x = CycInt::from_i64s(q, &(0..q.get() as i64).map(|t| t * t - 3).collect::<Vec<_>>())
                .unwrap();
            assert_eq!(x.mul(&CycInt::one(q)).unwrap(), x);
        }
        // (ζ + ζ²)² = 1 at p = 3
        let w = CycInt::from_i64s(p(3), &[0, 1, 1]).unwrap();
        let sq = w.mul(&w).unwrap();
        assert_eq!(sq.as_integer().unwrap(), BigInt::from(1));
        assert_eq!(sq, CycInt::one(p(3)));
    }

    #[test]
    fn as_integer_examples() {
        let p3 = p(3);
        assert_eq!(
            CycInt::from_i64s(p3, &[0, 1, 1]).unwrap().as_integer().unwrap(),
            BigInt::from(-1)
        );
        assert_eq!(CycInt::zero(p3).as_integer().unwrap(), BigInt::zero());
        assert_eq!(
            CycInt::from_i64s(p3, &[0, 1, 0]).unwrap().as_integer(),
            Err(CycError::NotRational)
        );
        // p = 2: every element is rational
        let x = CycInt::from_i64s(p(2), &[3, 7]).unwrap();
        assert_eq!(x.as_integer().unwrap(), BigInt::from(-4));
    }

    #[test]
    fn approx_examples() {
        let p3 = p(3);
        let zero = CycInt::zero(p3).approx_complex(64);
        assert!(zero.re.rad_raw().is_zero() && zero.re.mid_raw().is_zero());
        let m1 = CycInt::from_i64s(p3, &[0, 1, 1]).unwrap().approx_complex(64);
        assert!(m1.contains_int(&BigInt::from(-1)));
        for q in primes_in_range(2, 40) {
            let k = BigInt::from(-17);
            assert!(CycInt::from_integer(q, &k).approx_complex(80).contains_int(&k));
        }
    }

    #[test]
    fn ntt_and_schoolbook_agree_on_large_values() {
        let q = p(31);
        let x = CycInt::from_coeffs(
            q,
            (0..31).map(|t| BigInt::from(3).pow(t as u32 * 3) * if t % 2 == 0 { 1 } else { -1 }).collect(),
        )
        .unwrap();
        let y = CycInt::from_coeffs(q, (0..31).map(|t| BigInt::from(t * t - 50)).collect()).unwrap();
        assert_eq!(
            x.mul_with(&y, MulStrategy::Ntt).unwrap(),
            x.mul_with(&y, MulStrategy::Schoolbook).unwrap()
        );
    }

    #[test]
    fn trace_matches_sum_of_conjugates() {
        let q = p(11);
        let x = CycInt::from_i64s(q, &[4, -1, 2, 0, 5, 3, -7, 1, 1, 0, 9]).unwrap();
        let mut sum = CycInt::zero(q);
        for k in 1..11 {
            sum.add_assign(&x.galois(k)).unwrap();
        }
        assert_eq!(sum.as_integer().unwrap(), x.trace());
    }

    fn arb_pair() -> impl Strategy<Value = (u64, Vec<i64>, Vec<i64>, Vec<i64>)> {
        prop::sample::select(vec![2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31]).prop_flat_map(|q| {
            let v = prop::collection::vec(-5i64..=5, q as usize);
            (Just(q), v.clone(), v.clone(), v)
        })
    }

    proptest! {
        #[test]
        fn ring_laws((q, a, b, c) in arb_pair()) {
            let q = p(q);
            let x = CycInt::from_i64s(q, &a).unwrap();
            let y = CycInt::from_i64s(q, &b).unwrap();
            let z = CycInt::from_i64s(q, &c).unwrap();
            prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
            prop_assert_eq!(
                x.mul(&y).unwrap().mul(&z).unwrap(),
                x.mul(&y.mul(&z).unwrap()).unwrap()
            );
            prop_assert_eq!(
                x.mul(&y.add(&z).unwrap()).unwrap(),
                x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap()
            );
            prop_assert_eq!(
                x.mul_with(&y, MulStrategy::Ntt).unwrap(),
                x.mul_with(&y, MulStrategy::Schoolbook).unwrap()
            );
        }

        #[test]
        fn constant_shift_is_invisible((q, a, _b, _c) in arb_pair(), k in -9i64..9) {
            let q = p(q);
            let shifted: Vec<i64> = a.iter().map(|v| v + k).collect();
            prop_assert_eq!(
                CycInt::from_i64s(q, &a).unwrap(),
                CycInt::from_i64s(q, &shifted).unwrap()
            );
        }

        #[test]
        fn galois_action_is_a_ring_map((q, a, b, _c) in arb_pair(), k in 1u64..13) {
            prop_assume!(q <= 13 && k % q != 0);
            let q = p(q);
            let x = CycInt::from_i64s(q, &a).unwrap();
            let y = CycInt::from_i64s(q, &b).unwrap();
            prop_assert_eq!(
                x.mul(&y).unwrap().galois(k),
                x.galois(k).mul(&y.galois(k)).unwrap()
            );
        }

        #[test]
        fn rational_values_are_enclosed((q, a, _b, _c) in arb_pair()) {
            let q = p(q);
            let x = CycInt::from_i64s(q, &a).unwrap();
            // the trace is always rational
            let mut tr = CycInt::zero(q);
            for k in 1..q.get() {
                tr.add_assign(&x.galois(k)).unwrap();
            }
            let tr = CycInt::from_coeffs(q, tr.coeffs().to_vec()).unwrap();
            let v = tr.as_integer().unwrap();
            prop_assert!(tr.approx_complex(64).contains_int(&v));
        }
    }
}
