//! Integer q-expansions: Dedekind eta products, eta quotients, and checks
//! that a q-expansion behaves like a normalized Hecke eigenform.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffprime::{is_prime, jacobi, primes_in_range};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModformError {
    #[error("eta quotient has q-order {num}/24, which is not an integer")]
    FractionalOrder { num: i64 },
    #[error("eta quotient has odd exponent sum {0}, so its weight is not an integer")]
    FractionalWeight(i64),
    #[error("series is not normalized (needs a(0) = 0 and a(1) = 1)")]
    NotNormalized,
    #[error("series is known only below q^{truncation}, index {needed} requested")]
    TruncationTooShort { truncation: i64, needed: i64 },
    #[error("series with non-unit leading coefficient cannot be inverted over Z")]
    NonUnitLeading,
    #[error("coefficient table: {0}")]
    Table(String),
}

/// Σ coeffs[i] q^{leading_exponent + i} + O(q^truncation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    leading_exponent: i64,
    coeffs: Vec<BigInt>,
    truncation: i64,
}

impl QSeries {
    /// Build from coefficients starting at `leading_exponent`; everything at
    /// or beyond `truncation` is discarded.
    pub fn new(leading_exponent: i64, mut coeffs: Vec<BigInt>, truncation: i64) -> Self {
        let keep = (truncation - leading_exponent).max(0) as usize;
        coeffs.truncate(keep);
        coeffs.resize(keep, BigInt::zero());
        let mut s = QSeries {
            leading_exponent,
            coeffs,
            truncation,
        };
        s.normalize();
        s
    }

    pub fn from_i64s(leading_exponent: i64, coeffs: &[i64], truncation: i64) -> Self {
        QSeries::new(
            leading_exponent,
            coeffs.iter().map(|&c| BigInt::from(c)).collect(),
            truncation,
        )
    }

    pub fn zero(truncation: i64) -> Self {
        QSeries {
            leading_exponent: truncation,
            coeffs: Vec::new(),
            truncation,
        }
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|c| !c.is_zero());
        match lead {
            Some(0) => {}
            Some(k) => {
                self.coeffs.drain(..k);
                self.leading_exponent += k as i64;
            }
            None => {
                self.coeffs.clear();
                self.leading_exponent = self.truncation;
            }
        }
    }

    pub fn leading_exponent(&self) -> i64 {
        self.leading_exponent
    }

    pub fn truncation(&self) -> i64 {
        self.truncation
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of q^n, if n is below the truncation.
    pub fn coeff(&self, n: i64) -> Option<BigInt> {
        if n >= self.truncation {
            return None;
        }
        if n < self.leading_exponent {
            return Some(BigInt::zero());
        }
        Some(self.coeffs[(n - self.leading_exponent) as usize].clone())
    }

    fn coeff_or_zero(&self, n: i64) -> BigInt {
        self.coeff(n).unwrap_or_default()
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let trunc = self.truncation.min(other.truncation);
        let lead = self.leading_exponent.min(other.leading_exponent).min(trunc);
        let coeffs = (lead..trunc)
            .map(|n| self.coeff_or_zero(n) + other.coeff_or_zero(n))
            .collect();
        QSeries::new(lead, coeffs, trunc)
    }

    pub fn neg(&self) -> QSeries {
        QSeries {
            leading_exponent: self.leading_exponent,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            truncation: self.truncation,
        }
    }

    pub fn sub(&self, other: &QSeries) -> QSeries {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &QSeries) -> QSeries {
        let trunc = (self.truncation + other.leading_exponent)
            .min(other.truncation + self.leading_exponent);
        if self.is_zero() || other.is_zero() {
            return QSeries::zero(trunc);
        }
        let lead = self.leading_exponent + other.leading_exponent;
        let len = (trunc - lead).max(0) as usize;
        let mut out = vec![BigInt::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                out[i + j] += a * b;
            }
        }
        QSeries::new(lead, out, trunc)
    }

    /// 1/s, for a series whose leading coefficient is ±1.
    pub fn inverse(&self) -> Result<QSeries, ModformError> {
        let Some(c0) = self.coeffs.first() else {
            return Err(ModformError::NonUnitLeading);
        };
        if c0.abs() != BigInt::one() {
            return Err(ModformError::NonUnitLeading);
        }
        let rel = self.coeffs.len();
        let mut inv: Vec<BigInt> = Vec::with_capacity(rel);
        for n in 0..rel {
            let mut acc = if n == 0 { BigInt::one() } else { BigInt::zero() };
            for k in 1..=n {
                acc -= &self.coeffs[k] * &inv[n - k];
            }
            // c0 = ±1 is its own inverse
            inv.push(acc * c0);
        }
        let lead = -self.leading_exponent;
        Ok(QSeries::new(lead, inv, lead + rel as i64))
    }

    pub fn pow(&self, e: i64) -> Result<QSeries, ModformError> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut k = e.unsigned_abs();
        let rel = self.coeffs.len() as i64;
        let mut acc = QSeries::from_i64s(0, &[1], rel.max(1));
        let mut b = base;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    /// s(q^d).
    pub fn substitute_power(&self, d: u64) -> QSeries {
        let d = d as i64;
        let mut coeffs = vec![BigInt::zero(); (self.coeffs.len() as i64 * d) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * d as usize] = c.clone();
        }
        let lead = self.leading_exponent * d;
        QSeries::new(lead, coeffs, self.truncation * d)
    }

    pub fn shift(&self, k: i64) -> QSeries {
        QSeries {
            leading_exponent: self.leading_exponent + k,
            coeffs: self.coeffs.clone(),
            truncation: self.truncation + k,
        }
    }
}

/// Π_{n>=1} (1 - q^n) modulo q^terms, from the pentagonal number theorem.
pub fn eta_unit_series(terms: usize) -> QSeries {
    let mut coeffs = vec![BigInt::zero(); terms];
    let put = |c: &mut Vec<BigInt>, n: i64, s: i64| {
        if (n as usize) < c.len() {
            c[n as usize] += s;
        }
    };
    put(&mut coeffs, 0, 1);
    let mut k: i64 = 1;
    loop {
        let a = k * (3 * k - 1) / 2;
        let b = k * (3 * k + 1) / 2;
        if a as usize >= terms {
            break;
        }
        let s = if k % 2 == 0 { 1 } else { -1 };
        put(&mut coeffs, a, s);
        put(&mut coeffs, b, s);
        k += 1;
    }
    QSeries::new(0, coeffs, terms as i64)
}

/// Π_j η(d_j τ)^{e_j}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EtaQuotient {
    pub factors: Vec<(u64, i64)>,
}

impl EtaQuotient {
    pub fn new(factors: &[(u64, i64)]) -> Self {
        EtaQuotient {
            factors: factors.to_vec(),
        }
    }

    pub fn weight(&self) -> Result<i64, ModformError> {
        let s: i64 = self.factors.iter().map(|&(_, e)| e).sum();
        if s % 2 != 0 {
            return Err(ModformError::FractionalWeight(s));
        }
        Ok(s / 2)
    }

    pub fn q_order(&self) -> Result<i64, ModformError> {
        let num: i64 = self.factors.iter().map(|&(d, e)| d as i64 * e).sum();
        if num % 24 != 0 {
            return Err(ModformError::FractionalOrder { num });
        }
        Ok(num / 24)
    }
}

/// Expansion of an eta quotient with `terms` coefficients past its leading
/// exponent.
pub fn eta_quotient_series(eq: &EtaQuotient, terms: usize) -> Result<QSeries, ModformError> {
    let order = eq.q_order()?;
    let mut acc = QSeries::from_i64s(0, &[1], terms as i64);
    for &(d, e) in &eq.factors {
        let unit = eta_unit_series(terms).substitute_power(d);
        let unit = QSeries::new(0, (0..terms as i64).map(|n| unit.coeff_or_zero(n)).collect(), terms as i64);
        acc = acc.mul(&unit.pow(e)?);
    }
    Ok(acc.shift(order))
}

/// a(p) for every prime p <= pmax.
pub fn prime_coefficients(s: &QSeries, pmax: u64) -> Result<BTreeMap<u64, BigInt>, ModformError> {
    if s.truncation <= pmax as i64 {
        return Err(ModformError::TruncationTooShort {
            truncation: s.truncation,
            needed: pmax as i64,
        });
    }
    Ok(primes_in_range(2, pmax)
        .into_iter()
        .map(|p| (p.get(), s.coeff_or_zero(p.get() as i64)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeckeReport {
    pub weight: u32,
    pub level: u64,
    pub bound: u64,
    pub relations_checked: usize,
    pub failures: Vec<String>,
}

impl HeckeReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn smallest_prime_factor(n: u64) -> u64 {
    (2..).find(|d| n % d == 0 || d * d > n).map_or(n, |d| if n % d == 0 { d } else { n })
}

/// Check that `s` looks like a normalized Hecke eigenform of weight k and
/// level N up to index `bound`: multiplicativity on coprime indices, the
/// prime-power recursion at p ∤ N (with χ(p) = (p / nebentypus) if given),
/// and |a(p)| <= 2 p^{(k-1)/2}.
pub fn hecke_validate(
    s: &QSeries,
    k: u32,
    level: u64,
    bound: u64,
    nebentypus: Option<u64>,
) -> Result<HeckeReport, ModformError> {
    if s.coeff(0) != Some(BigInt::zero()) || s.coeff(1) != Some(BigInt::one()) {
        return Err(ModformError::NotNormalized);
    }
    if s.truncation <= bound as i64 {
        return Err(ModformError::TruncationTooShort {
            truncation: s.truncation,
            needed: bound as i64,
        });
    }
    let a = |n: u64| s.coeff_or_zero(n as i64);
    let chi = |p: u64| -> i64 {
        match nebentypus {
            None => 1,
            Some(m) => jacobi(p as i64, m).map(i64::from).unwrap_or(0),
        }
    };
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for n in 2..=bound {
        let p = smallest_prime_factor(n);
        let mut pk = p;
        while (n / pk) % p == 0 {
            pk *= p;
        }
        let m = n / pk;
        checked += 1;
        if m > 1 {
            // a(n) = a(p^r) a(m) with gcd(p^r, m) = 1
            if a(n) != a(pk) * a(m) {
                failures.push(format!("a({n}) != a({pk}) a({m})"));
            }
        } else if pk > p && level % p != 0 {
            let prev = pk / p;
            let pp = prev / p;
            let rhs = a(p) * a(prev)
                - BigInt::from(chi(p)) * BigInt::from(p).pow(k - 1) * a(pp);
            if a(n) != rhs {
                failures.push(format!("prime-power recursion fails at a({n})"));
            }
        } else if pk == p {
            // a(p)^2 <= 4 p^{k-1}
            let ap = a(p);
            if &ap * &ap > BigInt::from(4) * BigInt::from(p).pow(k - 1) {
                failures.push(format!("Deligne bound fails at a({p}) = {ap}"));
            }
        } else {
            checked -= 1;
        }
    }
    Ok(HeckeReport {
        weight: k,
        level,
        bound,
        relations_checked: checked,
        failures,
    })
}

/// A named eta quotient expected to be a newform of the given weight and level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegistryForm {
    pub label: String,
    pub quotient: EtaQuotient,
    pub weight: u32,
    pub level: u64,
}

/// The eta quotient attached to the degree-d moment, where one is known.
/// Only d = 6 has one: η(τ)^2 η(2τ)^2 η(3τ)^2 η(6τ)^2 in weight 4, level 6.
pub fn registry_form(d: u32) -> Option<RegistryForm> {
    match d {
        6 => Some(RegistryForm {
            label: "6.4.a.a".into(),
            quotient: EtaQuotient::new(&[(1, 2), (2, 2), (3, 2), (6, 2)]),
            weight: 4,
            level: 6,
        }),
        _ => None,
    }
}

/// Default truncation for coefficient work up to `pmax`.
pub fn default_truncation(pmax: u64) -> usize {
    2 * pmax as usize + 16
}

pub const TABLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub n: u64,
    pub a: String,
}

/// Externally supplied Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub schema_version: u32,
    pub label: String,
    pub weight: u32,
    pub level: u64,
    #[serde(default)]
    pub nebentypus_modulus: Option<u64>,
    pub entries: Vec<TableEntry>,
}

impl CoefficientTable {
    pub fn from_json(text: &str) -> Result<Self, ModformError> {
        let t: CoefficientTable =
            serde_json::from_str(text).map_err(|e| ModformError::Table(e.to_string()))?;
        if t.schema_version != TABLE_SCHEMA_VERSION {
            return Err(ModformError::Table(format!(
                "unsupported schema_version {}",
                t.schema_version
            )));
        }
        for e in &t.entries {
            e.a.parse::<BigInt>()
                .map_err(|_| ModformError::Table(format!("bad coefficient for n = {}", e.n)))?;
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, ModformError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModformError::Table(format!("{}: {e}", path.display())))?;
        CoefficientTable::from_json(&text)
    }

    pub fn coefficient(&self, n: u64) -> Option<BigInt> {
        self.entries
            .iter()
            .find(|e| e.n == n)
            .and_then(|e| e.a.parse().ok())
    }

    /// Primes whose coefficient violates |a(p)| <= 2 p^{(k-1)/2}.
    pub fn deligne_violations(&self) -> Vec<u64> {
        self.entries
            .iter()
            .filter(|e| is_prime(e.n))
            .filter(|e| {
                let a: BigInt = e.a.parse().expect("validated on load");
                let bound = BigInt::from(4) * BigInt::from(e.n).pow(self.weight - 1);
                &a * &a > bound
            })
            .map(|e| e.n)
            .collect()
    }
}

/// |a| <= 2 p^{(k-1)/2}, compared exactly through squares.
pub fn within_deligne(a: &BigInt, p: u64, k: u32) -> bool {
    a * a <= BigInt::from(4) * BigInt::from(p).pow(k - 1)
}
