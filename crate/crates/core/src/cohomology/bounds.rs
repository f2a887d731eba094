//! Lower bounds on the number of closed and periodic trajectories, each
//! backed by a product verified nonzero in the relevant ring.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ring::{Coefficients, GradedRing};
use super::spaces::{closed_string_ring, cyclic_ring, poincare_polynomial_quotient, projective_space_ring, quotient_ring};
use crate::error::{Error, Result};

/// Category weight of the degree-2 torsion class `e` (a Bockstein image).
pub const CATEGORY_WEIGHT_E: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    ClosedFromPoint,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Clause {
    I,
    II,
    III,
    Thm2,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::I => "I",
            Clause::II => "II",
            Clause::III => "III",
            Clause::Thm2 => "Thm2",
        })
    }
}

impl std::str::FromStr for Clause {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" => Ok(Clause::I),
            "II" | "2" => Ok(Clause::II),
            "III" | "3" => Ok(Clause::III),
            other => Err(Error::BadInput(format!("unknown clause `{other}`"))),
        }
    }
}

/// A nonzero product and the category estimate it yields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub ring: String,
    pub factors: Vec<String>,
    pub weights: Vec<usize>,
    /// The product written in the ring's basis.
    pub product: String,
    pub nonzero: bool,
    /// `Σ weights + 1`.
    pub category_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub m: usize,
    pub n: usize,
    pub kind: BoundKind,
    pub clause: Clause,
    pub value: usize,
    pub witness: Option<Witness>,
    pub evidence: String,
}

fn bad(clause: Clause, reason: impl Into<String>) -> Error {
    Error::BadClause { clause: clause.to_string(), reason: reason.into() }
}

fn witness(ring: &GradedRing, factors: Vec<String>, weight: impl Fn(&str) -> usize) -> Result<Witness> {
    let refs: Vec<&str> = factors.iter().map(String::as_str).collect();
    let product = ring.product_of(&refs)?;
    let weights: Vec<usize> = refs.iter().map(|f| weight(f)).collect();
    Ok(Witness {
        ring: ring.name().to_string(),
        category_bound: weights.iter().sum::<usize>() + 1,
        weights,
        product: ring.format_element(&product),
        nonzero: !product.is_zero(),
        factors,
    })
}

fn require_nonzero(w: Witness, clause: Clause, value: usize) -> Result<Witness> {
    if !w.nonzero || w.category_bound < value {
        return Err(Error::Axiom(format!(
            "clause {clause}: witness {:?} in {} gives {} (nonzero: {}), short of {value}",
            w.factors, w.ring, w.category_bound, w.nonzero
        )));
    }
    Ok(w)
}

fn log2_floor(n: usize) -> usize {
    n.ilog2() as usize
}

fn delta_chain(s: isize) -> Vec<String> {
    (0..=s).map(|t| format!("delta_{}", 1usize << t)).collect()
}

/// Lower bound on closed trajectories through a point, by clause.
pub fn bound_closed(m: usize, n: usize, clause: Clause) -> Result<BoundReport> {
    if n == 0 {
        return Err(bad(clause, "n must be at least 1"));
    }
    let report = |value, witness, evidence: String| BoundReport { m, n, kind: BoundKind::ClosedFromPoint, clause, value, witness, evidence };
    match clause {
        Clause::I => {
            if m < 2 {
                return Err(bad(clause, "needs m ≥ 2"));
            }
            let value = if m % 2 == 1 { n } else { n / 2 + 1 };
            let ring = closed_string_ring(m, n, Coefficients::Integers)?;
            let cl = ring.cup_length();
            let w = require_nonzero(witness(&ring, cl.witness, |_| 1)?, clause, value)?;
            Ok(report(value, Some(w), format!("cup-length {} of the closed-string space, plus one", cl.length)))
        }
        Clause::II => {
            if m < 2 {
                return Err(bad(clause, "needs m ≥ 2"));
            }
            if n % 2 == 1 {
                return Err(bad(clause, format!("needs even n, got {n}")));
            }
            let weight = |f: &str| if f.starts_with('e') { CATEGORY_WEIGHT_E } else { 1 };
            let e_powers = |k: usize| vec!["e".to_string(); k];
            let (value, ring, factors) = if m % 2 == 1 {
                let s = log2_floor(n) as isize - 2;
                let mut f = delta_chain(s);
                f.extend(e_powers((m - 1) / 2));
                (log2_floor(n) + m - 1, quotient_ring(m, n, Coefficients::Integers)?, f)
            } else if n == 2 {
                // b vanishes for n = 2; the quotient is RP^{m−1} up to homotopy.
                (m, projective_space_ring(m - 1), vec!["alpha".to_string(); m - 1])
            } else {
                let ring = quotient_ring(m, n, Coefficients::Integers)?;
                let mut f = Vec::new();
                if n == 4 || n == 6 {
                    f.push("b".to_string());
                } else if (n + 2).is_power_of_two() {
                    let r = log2_floor(n + 2) as isize;
                    f.extend(delta_chain(r - 3));
                } else {
                    let s = log2_floor((n + 2) / 4) as isize - 1;
                    f.extend(delta_chain(s));
                    f.push("b".to_string());
                }
                f.extend(e_powers((m - 2) / 2));
                (log2_floor(n) + m - 2, ring, f)
            };
            let w = require_nonzero(witness(&ring, factors, weight)?, clause, value)?;
            Ok(report(value, Some(w), format!("category weights with cwgt(e) = {CATEGORY_WEIGHT_E}")))
        }
        Clause::III => {
            if n % 2 == 1 {
                return Err(bad(clause, format!("needs even n, got {n}")));
            }
            if m == 0 {
                return Err(bad(clause, "needs m ≥ 1"));
            }
            if m == 1 {
                return Ok(report(n / 2, None, format!("{} contractible components (generic data)", n / 2)));
            }
            let sum: i64 = poincare_polynomial_quotient(m, n)?.iter().sum();
            let value = m * n / 2;
            if sum != value as i64 {
                return Err(Error::Axiom(format!("Poincaré polynomial sums to {sum}, expected {value}")));
            }
            Ok(report(value, None, format!("sum of Z2 Betti numbers {sum} (generic data)")))
        }
        Clause::Thm2 => Err(bad(clause, "use bound_periodic")),
    }
}

/// Every closed-string clause that applies to `(m, n)`.
pub fn all_closed_bounds(m: usize, n: usize) -> Vec<BoundReport> {
    [Clause::I, Clause::II, Clause::III].into_iter().filter_map(|c| bound_closed(m, n, c).ok()).collect()
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Lower bound on `n`-periodic trajectories (`n` an odd prime).
pub fn bound_periodic(m: usize, n: usize) -> Result<BoundReport> {
    if m < 2 {
        return Err(Error::BadInput(format!("needs m ≥ 2, got {m}")));
    }
    if n % 2 == 0 || !is_prime(n) {
        return Err(Error::BadInput(format!("needs an odd prime n, got {n}")));
    }
    let ring = cyclic_ring(m, n, Coefficients::Rationals)?;
    let (value, factors) = if m % 2 == 1 {
        let mut f = vec!["sigma_1".to_string(); n - 2];
        f.push("u".into());
        (n, f)
    } else {
        let mut f = vec!["sigma_2".to_string(); (n - 3) / 2];
        f.push("w".into());
        ((n + 1) / 2, f)
    };
    let w = require_nonzero(witness(&ring, factors, |_| 1)?, Clause::Thm2, value)?;
    Ok(BoundReport {
        m,
        n,
        kind: BoundKind::Periodic,
        clause: Clause::Thm2,
        value,
        witness: Some(w),
        evidence: "cup-length of the cyclic space, plus one".into(),
    })
}
