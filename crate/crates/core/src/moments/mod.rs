//! Power sums S_n(p) = Σ_a Kl_2(p; a)^n and symmetric-power moments
//! m^d(p) = Σ_a Σ_{i=0}^d α_a^i β_a^{d-i}, where α_a + β_a = -Kl_2(p; a)
//! and α_a β_a = p.
//!
//! Two conventions for the power sums are supported. `Restricted` sums over
//! a in F_p^×. `Completed` also includes an a = 0 term of value -1, so
//! S'_n = S_n + (-1)^n. The completed sums satisfy
//! S'_n ≡ (-1)^{n-1} (n-1) p (mod p^2), which is what lets a floating-point
//! enclosure be rounded to the exact integer.

pub mod cache;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ball::{unit_circle_table, Ball, MIN_PRECISION};
use crate::cyclotomic::{CycError, CycInt};
use crate::ffprime::{binomial, inverse_table, Prime};
use crate::kloosterman::{kl2_counts_with, kln_counts_all, KlError};

pub use cache::{CacheError, PowerSumCache};

/// Largest p handled by the exact cyclotomic path unless overridden.
pub const DEFAULT_EXACT_LIMIT: u64 = 257;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Restricted,
    Completed,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Restricted => "restricted",
            Convention::Completed => "completed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumMethod {
    ExactCyclotomic,
    FloatCongruence,
}

impl fmt::Display for SumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SumMethod::ExactCyclotomic => "exact-cyclotomic",
            SumMethod::FloatCongruence => "float-congruence",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    Girard,
    DirectRecurrence,
    Degree8Polynomial,
}

impl fmt::Display for MomentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MomentMethod::Girard => "girard",
            MomentMethod::DirectRecurrence => "direct-recurrence",
            MomentMethod::Degree8Polynomial => "degree8-polynomial",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentsError {
    #[error("p = {p} exceeds the exact-path limit {limit}")]
    ExactLimitExceeded { p: u64, limit: u64 },
    #[error("power sum is not rational; arithmetic bug")]
    NotRational,
    #[error("enclosure for S'_{n}(p = {p}) at {precision} bits admits {candidates} admissible integers")]
    AmbiguousRounding {
        p: u64,
        n: u32,
        precision: u32,
        candidates: usize,
    },
    #[error("power sum S_{0} missing from table")]
    MissingPowerSum(u32),
    #[error("table uses the {got} convention, {expected} required")]
    WrongConvention {
        expected: Convention,
        got: Convention,
    },
    #[error("n must be at least 1")]
    EmptyRange,
    #[error(transparent)]
    Kloosterman(#[from] KlError),
    #[error("precision policy start {start} exceeds cap {cap}")]
    BadPolicy { start: u32, cap: u32 },
}

impl From<CycError> for MomentsError {
    fn from(_: CycError) -> Self {
        MomentsError::NotRational
    }
}

/// Exact values S_1..S_nmax for one prime, tagged with how they were obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSumTable {
    pub p: Prime,
    pub convention: Convention,
    pub method: SumMethod,
    pub values: BTreeMap<u32, BigInt>,
}

fn sign_pow(n: u32) -> BigInt {
    if n % 2 == 0 {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}

impl PowerSumTable {
    pub fn get(&self, n: u32) -> Option<&BigInt> {
        self.values.get(&n)
    }

    pub fn nmax(&self) -> u32 {
        self.values.keys().next_back().copied().unwrap_or(0)
    }

    fn shifted(&self, to: Convention) -> PowerSumTable {
        if self.convention == to {
            return self.clone();
        }
        // completed = restricted + (-1)^n
        let dir = if to == Convention::Completed { 1 } else { -1 };
        let values = self
            .values
            .iter()
            .map(|(&n, v)| (n, v + sign_pow(n) * dir))
            .collect();
        PowerSumTable {
            p: self.p,
            convention: to,
            method: self.method,
            values,
        }
    }

    pub fn to_completed(&self) -> PowerSumTable {
        self.shifted(Convention::Completed)
    }

    pub fn to_restricted(&self) -> PowerSumTable {
        self.shifted(Convention::Restricted)
    }
}

/// The residue class of S'_n modulo p^2.
pub fn completed_congruence_class(p: Prime, n: u32) -> BigInt {
    let p = BigInt::from(p.get());
    let p2 = &p * &p;
    (sign_pow(n - 1) * BigInt::from(n - 1) * &p).mod_floor(&p2)
}

fn kl2_all(p: Prime) -> Vec<CycInt> {
    let inv = inverse_table(p);
    (1..p.get())
        .map(|a| kl2_counts_with(p, a, &inv).to_cycint())
        .collect()
}

/// Per-a sums Σ_a f_a[j] for j < len, combined by exact addition.
fn sum_over_a<F>(p: Prime, len: usize, per_a: F) -> Vec<CycInt>
where
    F: Fn(&CycInt) -> Vec<CycInt> + Sync + Send,
{
    let values = kl2_all(p);
    let zero = || vec![CycInt::zero(p); len];
    values
        .par_iter()
        .fold(zero, |mut acc, kl| {
            for (slot, v) in acc.iter_mut().zip(per_a(kl)) {
                slot.add_assign(&v).expect("same ring");
            }
            acc
        })
        .reduce(zero, |mut a, b| {
            for (x, y) in a.iter_mut().zip(&b) {
                x.add_assign(y).expect("same ring");
            }
            a
        })
}

pub fn power_sums_exact(
    p: Prime,
    nmax: u32,
    convention: Convention,
) -> Result<PowerSumTable, MomentsError> {
    power_sums_exact_with_limit(p, nmax, convention, DEFAULT_EXACT_LIMIT)
}

/// S_1..S_nmax by multiplying out Kl_2(p; a)^n in Z[ζ_p] for every a.
pub fn power_sums_exact_with_limit(
    p: Prime,
    nmax: u32,
    convention: Convention,
    limit: u64,
) -> Result<PowerSumTable, MomentsError> {
    if p.get() > limit {
        return Err(MomentsError::ExactLimitExceeded { p: p.get(), limit });
    }
    if nmax == 0 {
        return Err(MomentsError::EmptyRange);
    }
    let sums = sum_over_a(p, nmax as usize, |kl| {
        let mut out = Vec::with_capacity(nmax as usize);
        let mut pow = kl.clone();
        out.push(pow.clone());
        for _ in 1..nmax {
            pow = pow.mul(kl).expect("same ring");
            out.push(pow.clone());
        }
        out
    });
    let mut values = BTreeMap::new();
    for (i, s) in sums.iter().enumerate() {
        values.insert(i as u32 + 1, s.as_integer()?);
    }
    let table = PowerSumTable {
        p,
        convention: Convention::Restricted,
        method: SumMethod::ExactCyclotomic,
        values,
    };
    Ok(table.shifted(convention))
}

/// Float enclosures of the completed sums S'_1..S'_nmax.
pub fn power_sum_enclosures(p: Prime, nmax: u32, precision: u32) -> Result<Vec<Ball>, MomentsError> {
    let prec = precision.max(MIN_PRECISION);
    let table = unit_circle_table(p.get(), prec);
    let inv = inverse_table(p);
    let n = nmax as usize;
    let zero = || vec![Ball::zero(prec); n];
    let sums = (1..p.get())
        .into_par_iter()
        .map(|a| {
            kl2_counts_with(p, a, &inv)
                .to_real_ball(&table, prec)
                .map_err(MomentsError::from)
        })
        .try_fold(zero, |mut acc, kl| {
            let kl = kl?;
            let mut pow = kl.clone();
            acc[0] = acc[0].add(&pow);
            for slot in acc.iter_mut().skip(1) {
                pow = pow.mul(&kl);
                *slot = slot.add(&pow);
            }
            Ok::<_, MomentsError>(acc)
        })
        .try_reduce(zero, |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x.add(y)).collect()))?;
    // the a = 0 term of the completed convention contributes (-1)^n exactly
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.add(&Ball::from_int(&sign_pow(i as u32 + 1), prec)))
        .collect())
}

/// The unique integer in `ball` congruent to `residue` mod `modulus`.
pub fn recover_congruent(
    ball: &Ball,
    residue: &BigInt,
    modulus: &BigInt,
) -> Result<BigInt, usize> {
    let Some((lo, hi)) = ball.integer_range() else {
        return Err(0);
    };
    if ball.width_ceil() >= *modulus {
        return Err(2);
    }
    // smallest candidate >= lo
    let first = &lo + (residue - &lo).mod_floor(modulus);
    if first > hi {
        return Err(0);
    }
    if &first + modulus <= hi {
        return Err(2);
    }
    Ok(first)
}

/// Completed sums S'_1..S'_nmax from float enclosures plus the mod p^2
/// congruence.
pub fn power_sums_float(p: Prime, nmax: u32, precision: u32) -> Result<PowerSumTable, MomentsError> {
    if nmax == 0 {
        return Err(MomentsError::EmptyRange);
    }
    let balls = power_sum_enclosures(p, nmax, precision)?;
    let q = BigInt::from(p.get());
    let p2 = &q * &q;
    let mut values = BTreeMap::new();
    for (i, ball) in balls.iter().enumerate() {
        let n = i as u32 + 1;
        let r = completed_congruence_class(p, n);
        let v = recover_congruent(ball, &r, &p2).map_err(|candidates| {
            MomentsError::AmbiguousRounding {
                p: p.get(),
                n,
                precision,
                candidates,
            }
        })?;
        values.insert(n, v);
    }
    Ok(PowerSumTable {
        p,
        convention: Convention::Completed,
        method: SumMethod::FloatCongruence,
        values,
    })
}

/// Start precision, doubling until rounding is unambiguous, capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub start: u32,
    pub cap: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            start: 64,
            cap: 4096,
        }
    }
}

/// [`power_sums_float`] under a precision policy; also returns the
/// precision that succeeded.
pub fn power_sums_float_auto(
    p: Prime,
    nmax: u32,
    policy: PrecisionPolicy,
) -> Result<(PowerSumTable, u32), MomentsError> {
    if policy.start > policy.cap {
        return Err(MomentsError::BadPolicy {
            start: policy.start,
            cap: policy.cap,
        });
    }
    let mut prec = policy.start.max(MIN_PRECISION);
    loop {
        match power_sums_float(p, nmax, prec) {
            Ok(t) => return Ok((t, prec)),
            Err(MomentsError::AmbiguousRounding { .. }) if prec < policy.cap => {
                log::debug!("p = {p}: ambiguous at {prec} bits, doubling");
                prec = (prec * 2).min(policy.cap);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Recompute a float table at twice the precision it was produced at and
/// confirm every value. Returns the mismatching n, if any.
pub fn audit_float_table(table: &PowerSumTable, precision: u32) -> Result<Vec<u32>, MomentsError> {
    let again = power_sums_float(table.p, table.nmax(), precision * 2)?;
    let mine = table.to_completed();
    Ok(mine
        .values
        .iter()
        .filter(|(n, v)| again.get(**n) != Some(v))
        .map(|(n, _)| *n)
        .collect())
}

/// m^d(p) for one degree, tagged with its method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentValue {
    pub p: Prime,
    pub d: u32,
    pub value: BigInt,
    pub method: MomentMethod,
}

/// m^d = (-1)^d Σ_k (-1)^k C(d-k, k) p^k S_{d-2k} with S_0 = p - 1.
pub fn sym_moment_girard(p: Prime, d: u32, table: &PowerSumTable) -> Result<MomentValue, MomentsError> {
    if table.convention != Convention::Restricted {
        return Err(MomentsError::WrongConvention {
            expected: Convention::Restricted,
            got: table.convention,
        });
    }
    let q = BigInt::from(p.get());
    let mut acc = BigInt::zero();
    for k in 0..=d / 2 {
        let n = d - 2 * k;
        let s = if n == 0 {
            &q - 1
        } else {
            table.get(n).cloned().ok_or(MomentsError::MissingPowerSum(n))?
        };
        let c = BigInt::from(binomial((d - k) as u64, k as u64));
        acc += sign_pow(k) * c * q.pow(k) * s;
    }
    Ok(MomentValue {
        p,
        d,
        value: sign_pow(d) * acc,
        method: MomentMethod::Girard,
    })
}

/// m^0..m^dmax from the per-a recurrence h_j = s h_{j-1} - p h_{j-2},
/// s = -Kl_2(p; a).
pub fn sym_moments_direct(p: Prime, dmax: u32, limit: u64) -> Result<Vec<BigInt>, MomentsError> {
    if p.get() > limit {
        return Err(MomentsError::ExactLimitExceeded { p: p.get(), limit });
    }
    let len = dmax as usize + 1;
    let pb = BigInt::from(p.get());
    let sums = sum_over_a(p, len, |kl| {
        let s = kl.neg();
        let mut out = Vec::with_capacity(len);
        out.push(CycInt::one(p));
        if len > 1 {
            out.push(s.clone());
        }
        for j in 2..len {
            let next = s
                .mul(&out[j - 1])
                .and_then(|x| x.sub(&out[j - 2].scale(&pb)))
                .expect("same ring");
            out.push(next);
        }
        out
    });
    sums.iter()
        .map(|s| s.as_integer().map_err(MomentsError::from))
        .collect()
}

pub fn sym_moment_direct(p: Prime, d: u32) -> Result<MomentValue, MomentsError> {
    let all = sym_moments_direct(p, d, DEFAULT_EXACT_LIMIT)?;
    Ok(MomentValue {
        p,
        d,
        value: all[d as usize].clone(),
        method: MomentMethod::DirectRecurrence,
    })
}

/// The degree-8 moment as a polynomial in the completed sums:
/// S'_8 - 7p S'_6 + 15p^2 S'_4 - 10p^3 S'_2 + p^5 - p^4 + 10p^3 - 15p^2 + 7p - 1.
pub fn sym_moment_degree8(p: Prime, table: &PowerSumTable) -> Result<MomentValue, MomentsError> {
    if table.convention != Convention::Completed {
        return Err(MomentsError::WrongConvention {
            expected: Convention::Completed,
            got: table.convention,
        });
    }
    let s = |n: u32| table.get(n).cloned().ok_or(MomentsError::MissingPowerSum(n));
    let q = BigInt::from(p.get());
    let value = s(8)? - 7 * &q * s(6)? + 15 * q.pow(2) * s(4)? - 10 * q.pow(3) * s(2)?
        + q.pow(5)
        - q.pow(4)
        + 10 * q.pow(3)
        - 15 * q.pow(2)
        + 7 * &q
        - 1;
    Ok(MomentValue {
        p,
        d: 8,
        value,
        method: MomentMethod::Degree8Polynomial,
    })
}

/// Σ_a ((-1)^{n-1} Kl_n(p; a))^d, the moment of the d-th tensor power.
pub fn tensor_moment(p: Prime, n: u32, d: u32, budget: u128) -> Result<BigInt, MomentsError> {
    if d == 0 {
        return Ok(BigInt::from(p.get() - 1));
    }
    let all = kln_counts_all(p, n, budget)?;
    let sign = sign_pow(n - 1);
    let zero = || CycInt::zero(p);
    let total = all
        .par_iter()
        .map(|c| c.to_cycint().scale(&sign).pow(d))
        .reduce(zero, |a, b| a.add(&b).expect("same ring"));
    Ok(total.as_integer()?)
}

/// Picks the exact or float path per prime and consults an optional cache.
#[derive(Debug, Clone)]
pub struct MomentEngine {
    pub exact_limit: u64,
    pub policy: PrecisionPolicy,
    pub cache: Option<PowerSumCache>,
}

impl Default for MomentEngine {
    fn default() -> Self {
        MomentEngine {
            exact_limit: DEFAULT_EXACT_LIMIT,
            policy: PrecisionPolicy::default(),
            cache: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Moments(#[from] MomentsError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// A power sum table plus the precision used, when the float path ran.
#[derive(Debug, Clone)]
pub struct SumsOutcome {
    pub table: PowerSumTable,
    pub precision: Option<u32>,
}

impl MomentEngine {
    pub fn method_for(&self, p: Prime) -> SumMethod {
        if p.get() <= self.exact_limit {
            SumMethod::ExactCyclotomic
        } else {
            SumMethod::FloatCongruence
        }
    }

    /// Restricted power sums S_1..S_nmax through the preferred method.
    pub fn power_sums(&self, p: Prime, nmax: u32) -> Result<SumsOutcome, EngineError> {
        let method = self.method_for(p);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.load_checked(p, method)? {
                if hit.nmax() >= nmax {
                    let mut t = hit.to_restricted();
                    t.values.retain(|&n, _| n <= nmax);
                    return Ok(SumsOutcome {
                        table: t,
                        precision: None,
                    });
                }
            }
        }
        let (table, precision) = match method {
            SumMethod::ExactCyclotomic => (
                power_sums_exact_with_limit(p, nmax, Convention::Restricted, self.exact_limit)?,
                None,
            ),
            SumMethod::FloatCongruence => {
                let (t, prec) = power_sums_float_auto(p, nmax, self.policy)?;
                (t, Some(prec))
            }
        };
        if let Some(cache) = &self.cache {
            cache.store(&table)?;
        }
        Ok(SumsOutcome {
            table: table.to_restricted(),
            precision,
        })
    }

    pub fn sym_moment(&self, p: Prime, d: u32) -> Result<(MomentValue, SumMethod), EngineError> {
        if d == 0 {
            let v = MomentValue {
                p,
                d,
                value: BigInt::from(p.get() - 1),
                method: MomentMethod::Girard,
            };
            return Ok((v, SumMethod::ExactCyclotomic));
        }
        let sums = self.power_sums(p, d)?;
        Ok((sym_moment_girard(p, d, &sums.table)?, sums.table.method))
    }
}
