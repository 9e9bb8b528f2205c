//! Exact cyclic convolution by multi-modular number-theoretic transforms.
//!
//! Coefficients are reduced modulo enough 30-bit NTT primes to cover the
//! largest possible output magnitude, transformed, multiplied pointwise,
//! and lifted back to signed integers with Garner's CRT.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::ffprime::{is_prime, pow_mod};

/// A prime q = c * 2^k + 1 with a generator of its multiplicative group.
#[derive(Debug, Clone, Copy)]
struct NttPrime {
    q: u64,
    two_adicity: u32,
    generator: u64,
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn find_generator(q: u64) -> u64 {
    let factors = prime_factors(q - 1);
    (2..q)
        .find(|&g| factors.iter().all(|&f| pow_mod(g, (q - 1) / f, q) != 1))
        .expect("every prime has a primitive root")
}

/// Primes below 2^31 of the form c * 2^k + 1 with k >= `min_log` whose
/// product has at least `bits` bits, scanning c downward.
fn ntt_primes(bits: u64, min_log: u32) -> Vec<NttPrime> {
    let mut out = Vec::new();
    let mut covered = 0u64;
    let step = 1u64 << min_log;
    let mut c = ((1u64 << 31) - 1) / step;
    while covered < bits && c > 0 {
        let q = c * step + 1;
        if q < (1u64 << 31) && is_prime(q) {
            out.push(NttPrime {
                q,
                two_adicity: (q - 1).trailing_zeros(),
                generator: find_generator(q),
            });
            // floor(log2 q) undercounts, which only adds margin
            covered += 63 - q.leading_zeros() as u64;
        }
        c -= 1;
    }
    assert!(covered >= bits, "ran out of NTT primes");
    out
}

fn cached_primes(bits: u64, min_log: u32) -> Vec<NttPrime> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), Vec<NttPrime>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((bits, min_log))
        .or_insert_with(|| ntt_primes(bits, min_log))
        .clone()
}

fn bit_reverse(a: &mut [u64]) {
    let n = a.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
}

fn ntt(a: &mut [u64], prime: &NttPrime, inverse: bool) {
    let n = a.len();
    let q = prime.q;
    debug_assert!(n.is_power_of_two());
    debug_assert!(n.trailing_zeros() <= prime.two_adicity);
    bit_reverse(a);
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(prime.generator, (q - 1) / len as u64, q);
        if inverse {
            w = pow_mod(w, q - 2, q);
        }
        for start in (0..n).step_by(len) {
            let mut wk = 1u64;
            for k in 0..len / 2 {
                let u = a[start + k];
                let v = a[start + k + len / 2] * wk % q;
                a[start + k] = if u + v >= q { u + v - q } else { u + v };
                a[start + k + len / 2] = if u >= v { u - v } else { u + q - v };
                wk = wk * w % q;
            }
        }
        len <<= 1;
    }
    if inverse {
        let n_inv = pow_mod(n as u64, q - 2, q);
        for x in a.iter_mut() {
            *x = *x * n_inv % q;
        }
    }
}

fn residues(v: &[BigInt], q: u64) -> Vec<u64> {
    let qb = BigInt::from(q);
    v.iter()
        .map(|c| c.mod_floor(&qb).to_u64().expect("residue fits"))
        .collect()
}

/// Cyclic convolution of two length-`n` integer vectors modulo X^n - 1.
pub fn cyclic_convolution(x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
    let n = x.len();
    assert_eq!(n, y.len());
    if n == 0 {
        return Vec::new();
    }
    let max_x = x.iter().map(|c| c.magnitude().clone()).max().unwrap_or_default();
    let max_y = y.iter().map(|c| c.magnitude().clone()).max().unwrap_or_default();
    if max_x.is_zero() || max_y.is_zero() {
        return vec![BigInt::zero(); n];
    }
    // each folded output coefficient is a sum of n products
    let bound: BigUint = max_x * max_y * BigUint::from(n as u64);
    // symmetric reconstruction needs a modulus above 2 * bound
    let needed_bits = bound.bits() + 2;

    let size = (2 * n - 1).next_power_of_two();
    let primes = cached_primes(needed_bits, size.trailing_zeros());

    let mut per_prime: Vec<Vec<u64>> = Vec::with_capacity(primes.len());
    for prime in &primes {
        let q = prime.q;
        let mut a = residues(x, q);
        let mut b = residues(y, q);
        a.resize(size, 0);
        b.resize(size, 0);
        ntt(&mut a, prime, false);
        ntt(&mut b, prime, false);
        for (ai, bi) in a.iter_mut().zip(&b) {
            *ai = *ai * bi % q;
        }
        ntt(&mut a, prime, true);
        // fold the linear convolution back onto X^n = 1
        let mut folded = vec![0u64; n];
        for (i, v) in a.into_iter().enumerate().take(2 * n - 1) {
            let slot = &mut folded[i % n];
            *slot = (*slot + v) % q;
        }
        per_prime.push(folded);
    }
    garner(&per_prime, &primes)
}

/// Reconstruct signed integers from residues, choosing the symmetric range.
fn garner(res: &[Vec<u64>], primes: &[NttPrime]) -> Vec<BigInt> {
    let k = primes.len();
    // inverses of prod_{j<i} q_j modulo q_i
    let mut inv = vec![0u64; k];
    for i in 0..k {
        let mut prod = 1u64;
        for j in 0..i {
            prod = prod * (primes[j].q % primes[i].q) % primes[i].q;
        }
        inv[i] = pow_mod(prod, primes[i].q - 2, primes[i].q);
    }
    let modulus: BigInt = primes.iter().map(|p| BigInt::from(p.q)).product();
    let half = &modulus >> 1;
    let n = res[0].len();
    (0..n)
        .map(|idx| {
            // mixed-radix digits
            let mut digits = vec![0u64; k];
            for i in 0..k {
                let q = primes[i].q;
                // evaluate the partial reconstruction modulo q_i
                let mut acc = 0u64;
                let mut radix = 1u64;
                for j in 0..i {
                    acc = (acc + digits[j] % q * radix) % q;
                    radix = radix * (primes[j].q % q) % q;
                }
                let r = res[i][idx] % q;
                digits[i] = (r + q - acc) % q * inv[i] % q;
            }
            let mut value = BigInt::zero();
            let mut radix = BigInt::one();
            for i in 0..k {
                value += &radix * digits[i];
                radix *= primes[i].q;
            }
            if value > half {
                value -= &modulus;
            }
            value
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schoolbook(x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
        let n = x.len();
        let mut out = vec![BigInt::zero(); n];
        for i in 0..n {
            for j in 0..n {
                out[(i + j) % n] += &x[i] * &y[j];
            }
        }
        out
    }

    #[test]
    fn ntt_primes_are_valid() {
        for p in ntt_primes(180, 12) {
            assert!(is_prime(p.q));
            assert!(p.two_adicity >= 12);
            assert_eq!(pow_mod(p.generator, (p.q - 1) / 2, p.q), p.q - 1);
        }
    }

    #[test]
    fn matches_schoolbook_on_mixed_signs() {
        let n = 37;
        let x: Vec<BigInt> = (0..n).map(|i| BigInt::from((i * 7919 % 23) as i64 - 11)).collect();
        let y: Vec<BigInt> = (0..n)
            .map(|i| BigInt::from(1_000_000_007i64 * ((i % 5) as i64 - 2)).pow(3))
            .collect();
        assert_eq!(cyclic_convolution(&x, &y), schoolbook(&x, &y));
    }

    #[test]
    fn zero_and_tiny_inputs() {
        let z = vec![BigInt::zero(); 5];
        let o: Vec<BigInt> = (0..5).map(BigInt::from).collect();
        assert_eq!(cyclic_convolution(&z, &o), z);
        let a = vec![BigInt::from(-3)];
        let b = vec![BigInt::from(4)];
        assert_eq!(cyclic_convolution(&a, &b), vec![BigInt::from(-12)]);
    }
}
