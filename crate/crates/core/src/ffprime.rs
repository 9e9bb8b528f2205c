//! Prime-field arithmetic and the small number-theoretic helpers every
//! formula in the crate leans on: deterministic primality, modular
//! inverses, Jacobi symbols and double factorials.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("Jacobi symbol needs an odd positive modulus, got {0}")]
    EvenModulus(BigInt),
    #[error("double factorial is only defined here for odd d, got {0}")]
    EvenInput(u32),
    #[error("field elements live in different prime fields ({0} vs {1})")]
    ModulusMismatch(u64, u64),
}

/// Witnesses making Miller-Rabin deterministic on the whole `u64` range.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin primality test, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &MR_WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &MR_WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes in `lo..=hi`, ascending.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<Prime> {
    if hi < 2 || lo > hi {
        return Vec::new();
    }
    (lo.max(2)..=hi).filter(|&n| is_prime(n)).map(Prime).collect()
}

/// A rational prime, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u64);

impl Prime {
    pub fn new(value: u64) -> Result<Self, FieldError> {
        if is_prime(value) {
            Ok(Prime(value))
        } else {
            Err(FieldError::NotPrime(value))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn as_usize(self) -> usize {
        self.0 as usize
    }

    pub fn is_two(self) -> bool {
        self.0 == 2
    }

    pub fn elem(self, value: i64) -> FieldElem {
        FieldElem::new(self, value)
    }
}

impl TryFrom<u64> for Prime {
    type Error = FieldError;
    fn try_from(value: u64) -> Result<Self, Self::Error> {
        Prime::new(value)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of F_p, stored reduced into `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElem {
    modulus: Prime,
    value: u64,
}

impl FieldElem {
    pub fn new(modulus: Prime, value: i64) -> Self {
        let value = value.rem_euclid(modulus.get() as i64) as u64;
        FieldElem { modulus, value }
    }

    pub fn modulus(self) -> Prime {
        self.modulus
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn mul(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        self.check(other)?;
        Ok(FieldElem {
            modulus: self.modulus,
            value: mul_mod(self.value, other.value, self.modulus.get()),
        })
    }

    pub fn add(self, other: FieldElem) -> Result<FieldElem, FieldError> {
        self.check(other)?;
        Ok(FieldElem {
            modulus: self.modulus,
            value: (self.value + other.value) % self.modulus.get(),
        })
    }

    fn check(self, other: FieldElem) -> Result<(), FieldError> {
        if self.modulus != other.modulus {
            return Err(FieldError::ModulusMismatch(
                self.modulus.get(),
                other.modulus.get(),
            ));
        }
        Ok(())
    }
}

/// Inverse in F_p by the extended Euclidean algorithm.
pub fn mod_inverse(x: FieldElem) -> Result<FieldElem, FieldError> {
    if x.is_zero() {
        return Err(FieldError::ZeroInverse);
    }
    let p = x.modulus.get() as i128;
    let (mut r0, mut r1) = (p, x.value as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    debug_assert_eq!(r0, 1);
    Ok(FieldElem {
        modulus: x.modulus,
        value: s0.rem_euclid(p) as u64,
    })
}

/// Table of inverses of 1..p-1 (index 0 holds 0).
pub fn inverse_table(p: Prime) -> Vec<u64> {
    let n = p.as_usize();
    let mut inv = vec![0u64; n];
    if n > 1 {
        inv[1] = 1;
    }
    for i in 2..n {
        // inv[i] = -(p / i) * inv[p mod i]
        let q = p.get() / i as u64;
        let r = p.get() as usize % i;
        inv[i] = (p.get() - mul_mod(q, inv[r], p.get())) % p.get();
    }
    inv
}

/// Jacobi symbol (a/n) by the binary reciprocity algorithm; `n` is never factored.
pub fn jacobi_symbol(a: &BigInt, n: &BigInt) -> Result<i8, FieldError> {
    if !n.is_positive() || n.is_even() {
        return Err(FieldError::EvenModulus(n.clone()));
    }
    let mut a: BigUint = a.mod_floor(n).magnitude().clone();
    let mut n: BigUint = n.magnitude().clone();
    let mut sign = 1i8;
    while !a.is_zero() {
        let tz = a.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            a >>= tz;
            // (2/n) = -1 iff n = 3, 5 mod 8
            let n8 = (&n % 8u32).iter_u32_digits().next().unwrap_or(0);
            if tz % 2 == 1 && (n8 == 3 || n8 == 5) {
                sign = -sign;
            }
        }
        // reciprocity: flip when both are 3 mod 4
        let a4 = (&a % 4u32).iter_u32_digits().next().unwrap_or(0);
        let n4 = (&n % 4u32).iter_u32_digits().next().unwrap_or(0);
        if a4 == 3 && n4 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut n);
        a %= &n;
    }
    Ok(if n.is_one() { sign } else { 0 })
}

/// Machine-word convenience wrapper around [`jacobi_symbol`].
pub fn jacobi(a: i64, n: u64) -> Result<i8, FieldError> {
    jacobi_symbol(&BigInt::from(a), &BigInt::from(n))
}

/// Legendre symbol (a/p) for an odd prime.
pub fn legendre(a: i64, p: Prime) -> Result<i8, FieldError> {
    jacobi(a, p.get())
}

/// d!! = d (d-2) (d-4) ... 1 for odd d.
pub fn double_factorial(d: u32) -> Result<BigUint, FieldError> {
    if d % 2 == 0 {
        return Err(FieldError::EvenInput(d));
    }
    Ok((1..=d).step_by(2).map(BigUint::from).product())
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: u64) -> Prime {
        Prime::new(v).unwrap()
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(p(7).elem(1)).unwrap().value(), 1);
        assert_eq!(mod_inverse(p(7).elem(3)).unwrap().value(), 5);
        assert_eq!(mod_inverse(p(5).elem(0)), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn inverse_is_involution_and_table_agrees() {
        for q in primes_in_range(2, 300) {
            let table = inverse_table(q);
            for x in 1..q.get() {
                let e = q.elem(x as i64);
                let inv = mod_inverse(e).unwrap();
                assert_eq!(inv.value(), table[x as usize]);
                assert_eq!(e.mul(inv).unwrap().value(), 1);
                assert_eq!(mod_inverse(inv).unwrap(), e);
            }
        }
    }

    #[test]
    fn jacobi_examples() {
        assert_eq!(jacobi(1, 15).unwrap(), 1);
        assert_eq!(jacobi(2, 15).unwrap(), 1);
        assert_eq!(jacobi(7, 15).unwrap(), -1);
        assert_eq!(jacobi(5, 15).unwrap(), 0);
        assert!(matches!(jacobi(3, 14), Err(FieldError::EvenModulus(_))));
        assert!(matches!(jacobi(3, 0), Err(FieldError::EvenModulus(_))));
    }

    #[test]
    fn jacobi_matches_residue_enumeration_for_primes() {
        for q in primes_in_range(3, 500) {
            let n = q.get();
            let mut square = vec![false; n as usize];
            for x in 1..n {
                square[(x * x % n) as usize] = true;
            }
            for a in -(n as i64)..(2 * n as i64) {
                let r = a.rem_euclid(n as i64) as usize;
                let expect = if r == 0 {
                    0
                } else if square[r] {
                    1
                } else {
                    -1
                };
                assert_eq!(jacobi(a, n).unwrap(), expect, "({a}/{n})");
            }
        }
    }

    #[test]
    fn jacobi_is_multiplicative_in_both_arguments() {
        for n in (1..400u64).step_by(2) {
            for a in 0..60i64 {
                for b in 0..60i64 {
                    assert_eq!(
                        jacobi(a, n).unwrap() * jacobi(b, n).unwrap(),
                        jacobi(a * b, n).unwrap()
                    );
                }
            }
        }
        for a in -30..30i64 {
            for m in (1..120u64).step_by(2) {
                for n in (1..120u64).step_by(2) {
                    assert_eq!(
                        jacobi(a, m).unwrap() * jacobi(a, n).unwrap(),
                        jacobi(a, m * n).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn double_factorial_values() {
        assert_eq!(double_factorial(1).unwrap(), BigUint::from(1u32));
        assert_eq!(double_factorial(5).unwrap(), BigUint::from(15u32));
        assert_eq!(double_factorial(7).unwrap(), BigUint::from(105u32));
        assert_eq!(double_factorial(13).unwrap(), BigUint::from(135135u32));
        assert_eq!(double_factorial(4), Err(FieldError::EvenInput(4)));
    }

    #[test]
    fn primality_against_trial_division() {
        let trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..20_000 {
            assert_eq!(is_prime(n), trial(n), "{n}");
        }
        assert!(is_prime(18_446_744_073_709_551_557));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to 2,3,5,7
        assert!(Prime::new(4).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(6, 0), BigUint::from(1u32));
        assert_eq!(binomial(3, 4), BigUint::from(0u32));
    }
}
