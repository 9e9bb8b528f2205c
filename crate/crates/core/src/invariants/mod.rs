//! Closed-form dimensions, Swan conductors, local invariants at ∞,
//! Molien series and the determinant character for the moments of Sym^d
//! of the rank-2 Kloosterman sheaf.
//!
//! Brackets [x] are floors throughout.

pub mod series;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::ffprime::{double_factorial, jacobi_symbol, legendre, primes_in_range, Prime};

pub use series::RationalSeries;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantsError {
    #[error("degree d = {0} is not supported here")]
    UnsupportedDegree(u32),
    #[error("p = 2 is not allowed here")]
    EvenPrime,
}

/// A specific prime, or the generic "good p" row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimeOrGood {
    Specific(Prime),
    Good,
}

impl From<Prime> for PrimeOrGood {
    fn from(p: Prime) -> Self {
        PrimeOrGood::Specific(p)
    }
}

/// p is good for degree d: p > d for odd d, 2p > d for even d. At p = 2
/// every odd d counts as good, since the odd-degree formulas there coincide
/// with the generic ones.
pub fn is_good(d: u32, p: Prime) -> bool {
    let q = p.get();
    if d % 2 == 1 {
        q > d as u64 || p.is_two()
    } else {
        2 * q > d as u64
    }
}

fn check_degree(d: u32, pq: PrimeOrGood) -> Result<(), InvariantsError> {
    let bad = d == 0 || matches!(pq, PrimeOrGood::Specific(p) if p.is_two() && d == 1);
    if bad {
        Err(InvariantsError::UnsupportedDegree(d))
    } else {
        Ok(())
    }
}

/// dim M^d_{!}: the compactly supported moment.
pub fn dim_m_shriek(d: u32, pq: PrimeOrGood) -> Result<u64, InvariantsError> {
    check_degree(d, pq)?;
    let d = d as u64;
    Ok(match pq {
        PrimeOrGood::Good => {
            if d % 2 == 0 {
                d / 2
            } else {
                (d + 1) / 2
            }
        }
        PrimeOrGood::Specific(p) if p.is_two() => {
            if d % 2 == 1 {
                (d + 1) / 2
            } else {
                (d + 2) / 4
            }
        }
        PrimeOrGood::Specific(p) => {
            let q = p.get();
            if d % 2 == 0 {
                d / 2 - d / (2 * q)
            } else {
                (d + 1) / 2 - (d + q) / (2 * q)
            }
        }
    })
}

/// dim M^d_{!*}: the middle extension, i.e. the pure part.
pub fn dim_m_middle(d: u32, pq: PrimeOrGood) -> Result<u64, InvariantsError> {
    check_degree(d, pq)?;
    let d = d as u64;
    // d = 1 and d = 2 give formal values below zero; the space is zero
    let sub = |a: u64, b: u64| a.saturating_sub(b);
    Ok(match pq {
        PrimeOrGood::Good => {
            if d % 2 == 0 {
                sub(2 * ((d + 2) / 4), 2)
            } else {
                (d - 1) / 2
            }
        }
        PrimeOrGood::Specific(p) if p.is_two() => {
            if d % 2 == 1 {
                (d - 1) / 2
            } else if d % 12 == 0 {
                d / 6 - 2
            } else {
                2 * ((d + 2) / 12)
            }
        }
        PrimeOrGood::Specific(p) => {
            let q = p.get();
            let br = d / (2 * q);
            match d % 4 {
                0 => sub(d / 2, 2 * br + 2),
                2 => sub(d / 2, 2 * br + 1),
                _ => (d - 1) / 2 - (d + q) / (2 * q),
            }
        }
    })
}

/// Swan conductor of Sym^d of the Kloosterman sheaf at ∞.
pub fn swan_sym(d: u32, p: Prime) -> Result<u64, InvariantsError> {
    dim_m_shriek(d, p.into())
}

/// V^{I_∞} for V = Sym^d as a Frobenius module: `plus` copies on which
/// Frobenius acts by +p^{d/2} and `minus` copies acting by -p^{d/2}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalInvariants {
    pub dimension: u64,
    pub plus: u64,
    pub minus: u64,
}

impl LocalInvariants {
    /// Trace of Frobenius divided by p^{d/2}.
    pub fn normalized_trace(&self) -> i64 {
        self.plus as i64 - self.minus as i64
    }
}

pub fn local_inv_inf(d: u32, p: Prime) -> LocalInvariants {
    let d = d as u64;
    let (plus, minus) = if d % 2 == 1 {
        (0, 0)
    } else if p.is_two() {
        let k = d / 24;
        match d % 24 {
            r if r % 8 == 0 => (k + 1, k),
            r if r % 8 == 6 => (k, k + 1),
            2 | 4 | 10 => (k, k),
            _ => (k + 1, k + 1),
        }
    } else {
        let br = d / (2 * p.get());
        if d % 4 == 0 {
            (br + 1, 0)
        } else {
            (br, 0)
        }
    };
    LocalInvariants {
        dimension: plus + minus,
        plus,
        minus,
    }
}

/// Character-sum traces of the binary tetrahedral group on its
/// 2-dimensional representation, with multiplicities.
const TETRAHEDRAL_TRACES: [(i64, i64); 5] = [(2, 1), (-2, 1), (1, 8), (-1, 8), (0, 6)];

/// dim (Sym^d)^G for the binary tetrahedral group G, d = 0..=dmax, as the
/// expansion of (1/24) Σ_g 1/(1 - Tr(g) t + t^2).
pub fn molien_dim_series(dmax: usize) -> Vec<BigInt> {
    let mut acc = RationalSeries::zero();
    for (tr, mult) in TETRAHEDRAL_TRACES {
        acc = acc.add(&RationalSeries::new(&[mult], &[1, -tr, 1]));
    }
    acc.scale(&BigRational::new(1.into(), 24.into()))
        .expand_integers(dmax)
}

/// The closed form the Molien series must reproduce.
pub fn molien_dim_closed_form(d: u64) -> u64 {
    if d % 2 == 1 {
        return 0;
    }
    match d % 12 {
        0 | 6 | 8 => d / 12 + 1,
        _ => d / 12,
    }
}

/// Trace of Frobenius on (Sym^d)^G normalized by p^{d/2}:
/// (1/2)[(1 + t^2)/(1 + t^4) + 1/(1 + t^2)].
pub fn molien_frob_series(dmax: usize) -> Vec<BigInt> {
    let a = RationalSeries::new(&[1, 0, 1], &[1, 0, 0, 0, 1]);
    let b = RationalSeries::new(&[1], &[1, 0, 1]);
    a.add(&b)
        .scale(&BigRational::new(1.into(), 2.into()))
        .expand_integers(dmax)
}

/// +1 for d ≡ 0 mod 8, -1 for d ≡ 6 mod 8, 0 otherwise.
pub fn molien_frob_pattern(d: u64) -> i64 {
    match d % 8 {
        0 => 1,
        6 => -1,
        _ => 0,
    }
}

/// Normalized determinant of Frobenius on M^d_{!*} (Fu and Wan):
/// 1 for even d; for odd d,
/// (-2/p)^{[(d+p)/2p]} · Π_{0<=j<=(d-1)/2, p∤2j+1} ((-1)^j (2j+1) / p).
pub fn fuwan_det(d: u32, p: Prime) -> Result<i8, InvariantsError> {
    if p.is_two() {
        return Err(InvariantsError::EvenPrime);
    }
    if d % 2 == 0 {
        return Ok(1);
    }
    let q = p.get();
    let d = d as u64;
    let mut sign = legendre(-2, p).expect("odd prime");
    sign = sign.pow(((d + q) / (2 * q)) as u32);
    for j in 0..=(d - 1) / 2 {
        let m = 2 * j + 1;
        if m % q == 0 {
            continue;
        }
        let v = if j % 2 == 0 { m as i64 } else { -(m as i64) };
        sign *= legendre(v, p).expect("odd prime");
    }
    Ok(sign)
}

/// One row of the determinant character check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetCheck {
    pub p: u64,
    pub fuwan: i8,
    pub jacobi: i8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetCharacterReport {
    pub d: u32,
    pub modulus: String,
    pub rows: Vec<DetCheck>,
}

impl DetCharacterReport {
    pub fn failures(&self) -> Vec<&DetCheck> {
        self.rows.iter().filter(|r| r.fuwan != r.jacobi).collect()
    }
}

/// Compare fuwan_det(d, p) with (p / d!!) for primes d < p <= pmax.
pub fn det_character_check(d: u32, pmax: u64) -> Result<DetCharacterReport, InvariantsError> {
    if d < 3 || d % 2 == 0 {
        return Err(InvariantsError::UnsupportedDegree(d));
    }
    let modulus = BigInt::from(double_factorial(d).expect("odd d"));
    let rows = primes_in_range(d as u64 + 1, pmax)
        .into_iter()
        .map(|p| DetCheck {
            p: p.get(),
            fuwan: fuwan_det(d, p).expect("odd prime"),
            jacobi: jacobi_symbol(&BigInt::from(p.get()), &modulus).expect("odd modulus"),
        })
        .collect();
    Ok(DetCharacterReport {
        d,
        modulus: modulus.to_string(),
        rows,
    })
}

/// A cell of the dimension table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum Cell {
    Value(u64),
    Good,
    Sign(char),
    Blank,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Value(v) => write!(f, "{v}"),
            Cell::Good => f.write_str("good"),
            Cell::Sign(c) => write!(f, "{c}"),
            Cell::Blank => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimsRow {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimsTable {
    pub degrees: Vec<u32>,
    pub rows: Vec<DimsRow>,
}

pub const TABLE_PRIMES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// dim M^d_{!*} for d = 1..=13 over the generic row, the sign of the
/// autoduality, and the primes 2..13.
pub fn dims_table() -> DimsTable {
    dims_table_for(13, &TABLE_PRIMES)
}

pub fn dims_table_for(dmax: u32, primes: &[u64]) -> DimsTable {
    let degrees: Vec<u32> = (1..=dmax).collect();
    let good: Vec<u64> = degrees
        .iter()
        .map(|&d| dim_m_middle(d, PrimeOrGood::Good).expect("d >= 1"))
        .collect();
    let mut rows = vec![DimsRow {
        label: "good p".into(),
        cells: good.iter().map(|&v| Cell::Value(v)).collect(),
    }];
    rows.push(DimsRow {
        label: "duality".into(),
        cells: degrees
            .iter()
            .zip(&good)
            .map(|(&d, &g)| match (g, d % 2) {
                (0, _) => Cell::Blank,
                (_, 1) => Cell::Sign('+'),
                _ => Cell::Sign('-'),
            })
            .collect(),
    });
    for &q in primes {
        let p = Prime::new(q).expect("table primes are prime");
        let cells = degrees
            .iter()
            .zip(&good)
            .map(|(&d, &g)| {
                if g == 0 {
                    Cell::Blank
                } else if is_good(d, p) {
                    Cell::Good
                } else {
                    Cell::Value(dim_m_middle(d, p.into()).expect("d > 1"))
                }
            })
            .collect();
        rows.push(DimsRow {
            label: format!("p={q}"),
            cells,
        });
    }
    DimsTable { degrees, rows }
}

impl DimsTable {
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .flat_map(|r| r.cells.iter().map(|c| c.to_string().len()))
            .chain(self.degrees.iter().map(|d| d.to_string().len()))
            .max()
            .unwrap_or(1);
        let label_w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(1).max(1);
        let mut out = String::new();
        let mut line = format!("{:<label_w$}", "d");
        for d in &self.degrees {
            line.push_str(&format!(" {:>width$}", d));
        }
        out.push_str(line.trim_end());
        out.push('\n');
        for row in &self.rows {
            let mut line = format!("{:<label_w$}", row.label);
            for c in &row.cells {
                line.push_str(&format!(" {:>width$}", c.to_string()));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("row");
        for d in &self.degrees {
            out.push_str(&format!(",{d}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.label);
            for c in &row.cells {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, label: &str, d: u32) -> Option<Cell> {
        let col = self.degrees.iter().position(|&x| x == d)?;
        self.rows.iter().find(|r| r.label == label).map(|r| r.cells[col])
    }
}
