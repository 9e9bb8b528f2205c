//! Exact power series expansion of rational functions P(t)/Q(t).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// P(t) / Q(t) with Q(0) != 0, expanded by the linear recurrence
/// Q(0) c_n = P_n - Σ_{k>=1} Q_k c_{n-k}.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSeries {
    num: Vec<BigRational>,
    den: Vec<BigRational>,
}

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.len() > 1 && v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
    v
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            a.get(i).cloned().unwrap_or_else(BigRational::zero)
                + b.get(i).cloned().unwrap_or_else(BigRational::zero)
        })
        .collect()
}

fn to_rat(v: &[i64]) -> Vec<BigRational> {
    v.iter()
        .map(|&c| BigRational::from_integer(BigInt::from(c)))
        .collect()
}

impl RationalSeries {
    /// Panics if the denominator vanishes at t = 0.
    pub fn new(num: &[i64], den: &[i64]) -> Self {
        RationalSeries::from_rationals(to_rat(num), to_rat(den))
    }

    pub fn from_rationals(num: Vec<BigRational>, den: Vec<BigRational>) -> Self {
        assert!(
            den.first().is_some_and(|c| !c.is_zero()),
            "denominator must have a nonzero constant term"
        );
        let num = if num.is_empty() {
            vec![BigRational::zero()]
        } else {
            num
        };
        RationalSeries {
            num: trim(num),
            den: trim(den),
        }
    }

    pub fn zero() -> Self {
        RationalSeries::new(&[0], &[1])
    }

    pub fn add(&self, other: &RationalSeries) -> RationalSeries {
        if self.den == other.den {
            return RationalSeries::from_rationals(poly_add(&self.num, &other.num), self.den.clone());
        }
        let num = poly_add(
            &poly_mul(&self.num, &other.den),
            &poly_mul(&other.num, &self.den),
        );
        RationalSeries::from_rationals(num, poly_mul(&self.den, &other.den))
    }

    pub fn scale(&self, k: &BigRational) -> RationalSeries {
        RationalSeries::from_rationals(self.num.iter().map(|c| c * k).collect(), self.den.clone())
    }

    /// Coefficients of t^0 .. t^nmax.
    pub fn expand(&self, nmax: usize) -> Vec<BigRational> {
        let q0_inv = BigRational::one() / &self.den[0];
        let mut c: Vec<BigRational> = Vec::with_capacity(nmax + 1);
        for n in 0..=nmax {
            let mut v = self.num.get(n).cloned().unwrap_or_else(BigRational::zero);
            for (k, qk) in self.den.iter().enumerate().skip(1).take(n) {
                v -= qk * &c[n - k];
            }
            c.push(v * &q0_inv);
        }
        c
    }

    /// Expansion as integers; panics if a coefficient is not integral.
    pub fn expand_integers(&self, nmax: usize) -> Vec<BigInt> {
        self.expand(nmax)
            .into_iter()
            .map(|c| {
                assert!(c.is_integer(), "non-integral series coefficient {c}");
                c.to_integer()
            })
            .collect()
    }
}
