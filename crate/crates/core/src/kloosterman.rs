//! Kloosterman sums Kl_n(p; a) = Σ ζ_p^{x_1 + ... + x_n} over n-tuples of
//! nonzero residues with product a.
//!
//! Values are kept as exponent histograms: `counts[t]` is the number of
//! tuples whose coordinate sum is t. A histogram turns into an exact
//! [`CycInt`] or a rigorous real [`Ball`] on demand.

use num_bigint::BigInt;
use thiserror::Error;

use crate::ball::{unit_circle_table, Ball, MIN_PRECISION};
use crate::cyclotomic::CycInt;
use crate::ffprime::{inverse_table, FieldElem, Prime};

/// Default ceiling on n * p^3 elementary steps for the n-variable DP.
pub const DEFAULT_WORK_BUDGET: u128 = 10_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KlError {
    #[error("Kloosterman parameter a must be nonzero")]
    ZeroParameter,
    #[error("parameter lives in F_{got}, expected F_{expected}")]
    ModulusMismatch { expected: u64, got: u64 },
    #[error("n must be at least 2, got {0}")]
    TooFewVariables(u32),
    #[error("work estimate {steps} exceeds budget {budget}")]
    BudgetExceeded { steps: u128, budget: u128 },
    #[error("tuple counts overflow 128 bits for p = {p}, n = {n}")]
    CountOverflow { p: u64, n: u32 },
    #[error("imaginary part of the enclosure excludes zero (radius too small or bug)")]
    ImaginaryResidue,
}

/// Joint distribution of coordinate sums over the fibre Π x_i = a.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentCounts {
    pub p: Prime,
    pub a: FieldElem,
    pub n: u32,
    pub counts: Vec<u128>,
}

impl ExponentCounts {
    pub fn total(&self) -> u128 {
        self.counts.iter().sum()
    }

    /// counts[t] == counts[-t] for every t.
    pub fn is_symmetric(&self) -> bool {
        let p = self.counts.len();
        (1..p).all(|t| self.counts[t] == self.counts[p - t])
    }

    pub fn to_cycint(&self) -> CycInt {
        let coeffs = self.counts.iter().map(|&c| BigInt::from(c)).collect();
        CycInt::from_coeffs(self.p, coeffs).expect("length p by construction")
    }

    /// Real enclosure using a precomputed cosine table for ζ_p.
    pub fn to_real_ball(&self, table: &[(Ball, Ball)], prec: u32) -> Result<Ball, KlError> {
        let mut re = Ball::zero(prec);
        let mut im = Ball::zero(prec);
        for (&c, (cos, sin)) in self.counts.iter().zip(table) {
            if c == 0 {
                continue;
            }
            let k = BigInt::from(c);
            re = re.add(&cos.mul_int(&k));
            im = im.add(&sin.mul_int(&k));
        }
        if !im.contains_zero() {
            return Err(KlError::ImaginaryResidue);
        }
        Ok(re)
    }
}

fn check_param(p: Prime, a: FieldElem) -> Result<(), KlError> {
    if a.modulus() != p {
        return Err(KlError::ModulusMismatch {
            expected: p.get(),
            got: a.modulus().get(),
        });
    }
    if a.is_zero() {
        return Err(KlError::ZeroParameter);
    }
    Ok(())
}

/// Histogram of x + a/x over x in F_p^×, in O(p).
pub fn kl2_counts(p: Prime, a: FieldElem) -> Result<ExponentCounts, KlError> {
    check_param(p, a)?;
    Ok(kl2_counts_with(p, a.value(), &inverse_table(p)))
}

/// [`kl2_counts`] with a shared inverse table; `a` must be in 1..p.
pub(crate) fn kl2_counts_with(p: Prime, a: u64, inv: &[u64]) -> ExponentCounts {
    let q = p.get();
    let mut counts = vec![0u128; p.as_usize()];
    for x in 1..q {
        let t = (x + a * inv[x as usize] % q) % q;
        counts[t as usize] += 1;
    }
    ExponentCounts {
        p,
        a: FieldElem::new(p, a as i64),
        n: 2,
        counts,
    }
}

pub fn kl2_value(p: Prime, a: FieldElem) -> Result<CycInt, KlError> {
    Ok(kl2_counts(p, a)?.to_cycint())
}

fn check_budget(p: Prime, n: u32, budget: u128) -> Result<(), KlError> {
    if n < 2 {
        return Err(KlError::TooFewVariables(n));
    }
    let q = p.get() as u128;
    let steps = n as u128 * q * q * q;
    if steps > budget {
        return Err(KlError::BudgetExceeded { steps, budget });
    }
    // the largest possible count is the fibre size (p-1)^(n-1)
    let mut size: u128 = 1;
    for _ in 1..n {
        size = size
            .checked_mul(q - 1)
            .ok_or(KlError::CountOverflow { p: p.get(), n })?;
    }
    Ok(())
}

/// Histograms for every a in F_p^× at once. Entry `a - 1` belongs to a.
///
/// Runs the DP N_{k+1}(b, t) = Σ_x N_k(b/x, t - x) over (product, sum) pairs.
pub fn kln_counts_all(p: Prime, n: u32, budget: u128) -> Result<Vec<ExponentCounts>, KlError> {
    check_budget(p, n, budget)?;
    let q = p.as_usize();
    let inv = inverse_table(p);
    // table[b * q + t]; b = 0 row is unused
    let mut cur = vec![0u128; q * q];
    for x in 1..q {
        cur[x * q + x] = 1;
    }
    for _ in 1..n {
        let mut next = vec![0u128; q * q];
        for b in 1..q {
            let row = &mut next[b * q..(b + 1) * q];
            for x in 1..q {
                let prev_b = b * inv[x] as usize % q;
                let prev = &cur[prev_b * q..(prev_b + 1) * q];
                // row[t] += prev[t - x]
                for (t, slot) in row.iter_mut().enumerate() {
                    let s = if t >= x { t - x } else { t + q - x };
                    *slot += prev[s];
                }
            }
        }
        cur = next;
    }
    Ok((1..q)
        .map(|a| ExponentCounts {
            p,
            a: FieldElem::new(p, a as i64),
            n,
            counts: cur[a * q..(a + 1) * q].to_vec(),
        })
        .collect())
}

pub fn kln_counts(
    p: Prime,
    a: FieldElem,
    n: u32,
    budget: u128,
) -> Result<ExponentCounts, KlError> {
    check_param(p, a)?;
    let mut all = kln_counts_all(p, n, budget)?;
    Ok(all.swap_remove(a.value() as usize - 1))
}

/// Rigorous real enclosure of Kl_2(p; a) at roughly `precision` bits.
pub fn kl2_float(p: Prime, a: FieldElem, precision: u32) -> Result<Ball, KlError> {
    let counts = kl2_counts(p, a)?;
    let prec = precision.max(MIN_PRECISION);
    counts.to_real_ball(&unit_circle_table(p.get(), prec), prec)
}
