//! The concrete rings: closed-string spaces `G(Sᵐ;A,A,n)`, their quotients by
//! the reversal, and cyclic spaces `G(Sᵐ,n)`.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::ring::{build_ring, BasisElement, Coefficients, GradedRing, RingElement};
use crate::error::{Error, Result};

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn binom(n: usize, k: usize) -> BigInt {
    BigInt::from(binomial(n as u64, k as u64))
}

fn sigma_label(i: usize) -> String {
    if i == 0 {
        "1".into()
    } else {
        format!("sigma_{i}")
    }
}

fn joined(parts: &[String]) -> String {
    let parts: Vec<&str> = parts.iter().map(String::as_str).filter(|p| *p != "1").collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

fn check_m(m: usize) -> Result<()> {
    if m <= 1 {
        return Err(Error::BadInput(format!(
            "m = {m}: for m = 1 the space is a disjoint union of contractible components"
        )));
    }
    Ok(())
}

/// `H*(G(Sᵐ;A,A,n))`: additive generators `σ_i` in degree `i(m−1)`,
/// `i = 0..n−1`, multiplied by
/// `σ_iσ_j = (i+j)!/(i!j!)·σ_{i+j}` (m odd) or
/// `σ_iσ_j = [(i+j)/2]!/([i/2]![j/2]!)·σ_{i+j}`, zero for `i, j` both odd (m even).
pub fn closed_string_ring(m: usize, n: usize, coeffs: Coefficients) -> Result<GradedRing> {
    check_m(m)?;
    if n == 0 {
        return Err(Error::BadInput("n must be at least 1".into()));
    }
    let basis = (0..n).map(|i| BasisElement::new(sigma_label(i), i * (m - 1), 0)).collect();
    let labels: Vec<String> = (1..n).map(sigma_label).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Ok(build_ring(format!("closed-string(m={m},n={n};{coeffs})"), coeffs, basis, &label_refs, |i, j| {
        if i + j >= n {
            return vec![];
        }
        let c = if m % 2 == 1 {
            binom(i + j, i)
        } else if i % 2 == 1 && j % 2 == 1 {
            return vec![];
        } else {
            binom((i + j) / 2, i / 2)
        };
        vec![(i + j, c)]
    }))
}

/// Signs of the reversal involution on the `σ_i`: `(−1)^i` for m odd,
/// `(−1)^{[i/2]+ni}` for m even.
pub fn reflection_action(m: usize, n: usize) -> Result<Vec<i32>> {
    check_m(m)?;
    Ok((0..n)
        .map(|i| {
            let exponent = if m % 2 == 1 { i } else { i / 2 + n * i };
            if exponent % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// Applies a diagonal involution given by basis signs.
pub fn apply_signs(ring: &GradedRing, signs: &[i32], x: &RingElement) -> RingElement {
    let mut out = RingElement::zero();
    for (i, c) in x.terms() {
        let term = ring.scaled(i, c * BigInt::from(signs[i]));
        out = ring.add(&out, &term);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Mono {
    delta: usize,
    a: bool,
    b: bool,
    e: usize,
}

impl Mono {
    fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.delta > 0 {
            parts.push(format!("delta_{}", self.delta));
        }
        if self.a {
            parts.push("a".into());
        }
        if self.b {
            parts.push("b".into());
        }
        match self.e {
            0 => {}
            1 => parts.push("e".into()),
            k => parts.push(format!("e^{k}")),
        }
        joined(&parts)
    }
}

/// `H*(G(Sᵐ;A,A,n)/Z₂; Z)` for even `n` (or its rational reduction).
///
/// m odd: `δ_i` in degree `2i(m−1)` and `e` in degree 2 with `2e = 0`,
/// `e^{(m+1)/2} = 0`, `δ_{n/2} = 0`.
/// m even: `δ_i` in degree `4i(m−1)`, `e` (degree 2, `2e = 0`, `e^{m/2} = 0`),
/// `a` (degree `m−1`), `b` (degree `2m−1`, `2b = 0`) with
/// `a² = ab = ae = b² = 0`, `δ_{[(n+2)/4]} = 0` and `δ_k b = 0` when `n = 4k+2`.
/// In both cases `δ_iδ_j = C(2i+2j, 2i)·δ_{i+j}`.
pub fn quotient_ring(m: usize, n: usize, coeffs: Coefficients) -> Result<GradedRing> {
    check_m(m)?;
    if n == 0 || n % 2 == 1 {
        return Err(Error::BadInput(format!("the quotient ring needs even n ≥ 2, got {n}")));
    }
    if coeffs == Coefficients::IntegersMod2 {
        return Err(Error::Unsupported("quotient ring over Z2 (only the integral ring and its rationalization are built)".into()));
    }
    let odd = m % 2 == 1;
    let (delta_count, delta_degree, e_cap) = if odd { (n / 2, 2 * (m - 1), (m + 1) / 2) } else { ((n + 2) / 4, 4 * (m - 1), m / 2) };
    let b_killed = |delta: usize| !odd && n == 4 * delta + 2;
    let mut monos = Vec::new();
    for delta in 0..delta_count {
        for e in 0..e_cap {
            monos.push(Mono { delta, a: false, b: false, e });
        }
        if !odd {
            monos.push(Mono { delta, a: true, b: false, e: 0 });
            if !b_killed(delta) {
                for e in 0..e_cap {
                    monos.push(Mono { delta, a: false, b: true, e });
                }
            }
        }
    }
    let degree = |x: &Mono| x.delta * delta_degree + usize::from(x.a) * (m - 1) + usize::from(x.b) * (2 * m - 1) + 2 * x.e;
    monos.sort_by_key(|x| (degree(x), x.label()));
    let basis: Vec<BasisElement> = monos
        .iter()
        .map(|x| BasisElement::new(x.label(), degree(x), if x.e > 0 || x.b { 2 } else { 0 }))
        .collect();
    let generators: Vec<String> = if odd {
        (1..delta_count).map(|i| format!("delta_{i}")).chain(std::iter::once("e".to_string())).collect()
    } else {
        (1..delta_count).map(|i| format!("delta_{i}")).chain(["a", "b", "e"].map(String::from)).collect()
    };
    let gen_refs: Vec<&str> = generators.iter().map(String::as_str).collect();
    let name = format!("quotient(m={m},n={n};{coeffs})");
    Ok(build_ring(name, coeffs, basis, &gen_refs, |i, j| {
        let (x, y) = (monos[i], monos[j]);
        let product = Mono { delta: x.delta + y.delta, a: x.a || y.a, b: x.b || y.b, e: x.e + y.e };
        let vanishes = (x.a && y.a) || (x.b && y.b) || (product.a && product.b) || (product.a && product.e > 0);
        if vanishes || product.delta >= delta_count || product.e >= e_cap {
            return vec![];
        }
        match monos.iter().position(|z| *z == product) {
            Some(k) => vec![(k, binom(2 * product.delta, 2 * x.delta))],
            None => vec![],
        }
    }))
}

/// `(tᵐ−1)/(t−1) · (t^{n(m−1)}−1)/(t^{2(m−1)}−1)`, coefficients by degree.
pub fn poincare_polynomial_quotient(m: usize, n: usize) -> Result<Vec<i64>> {
    check_m(m)?;
    if n == 0 || n % 2 == 1 {
        return Err(Error::BadInput(format!("the Poincaré polynomial needs even n ≥ 2, got {n}")));
    }
    let binomial_minus_one = |d: usize| {
        let mut p = vec![0i64; d + 1];
        p[0] = -1;
        p[d] += 1;
        p
    };
    let first = poly_div_exact(&binomial_minus_one(m), &binomial_minus_one(1))?;
    let second = poly_div_exact(&binomial_minus_one(n * (m - 1)), &binomial_minus_one(2 * (m - 1)))?;
    Ok(poly_mul(&first, &second))
}

fn poly_mul(p: &[i64], q: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

/// Long division of integer polynomials (low degree first); fails unless exact.
pub fn poly_div_exact(num: &[i64], den: &[i64]) -> Result<Vec<i64>> {
    let dlead = *den.last().ok_or_else(|| Error::BadInput("empty divisor".into()))?;
    if dlead == 0 || num.len() < den.len() {
        return Err(Error::BadInput("polynomial division is not exact".into()));
    }
    let mut rem = num.to_vec();
    let mut quot = vec![0i64; num.len() - den.len() + 1];
    for k in (0..quot.len()).rev() {
        let top = rem[k + den.len() - 1];
        if top % dlead != 0 {
            return Err(Error::BadInput("polynomial division is not exact".into()));
        }
        let c = top / dlead;
        quot[k] = c;
        for (i, d) in den.iter().enumerate() {
            rem[k + i] -= c * d;
        }
    }
    if rem.iter().any(|&r| r != 0) {
        return Err(Error::BadInput("polynomial division leaves a remainder".into()));
    }
    Ok(quot)
}

/// `H*(G(Sᵐ,n))`.
///
/// m odd (`m ≥ 3`, `n ≥ 2`): `u` in degree `m` with `u² = 0` and `σ_i`,
/// `i = 1..n−2`, multiplied as in the closed-string ring for m odd,
/// truncated past `n−2`. Stated over `Q`; the `Z₂` version is built but
/// flagged as not verified by its source.
///
/// m even, n odd: `w` in degree `2m−1` with `w² = 0` and `σ_{2i}` in degree
/// `2i(m−1)`, `σ_{2i}σ_{2j} = (i+j)!/(i!j!)·σ_{2(i+j)}`, truncated past
/// `(n−3)/2`. Stated over fields of characteristic ≠ 2, built over `Q`.
pub fn cyclic_ring(m: usize, n: usize, coeffs: Coefficients) -> Result<GradedRing> {
    check_m(m)?;
    if m % 2 == 1 {
        if n < 2 {
            return Err(Error::BadInput("cyclic configurations need n ≥ 2".into()));
        }
        if coeffs == Coefficients::Integers {
            return Err(Error::Unsupported("integral cohomology of the cyclic space is not stated".into()));
        }
        let top = n - 2;
        let mut basis = Vec::new();
        for eps in 0..2 {
            for i in 0..=top {
                let label = joined(&[sigma_label(i), if eps == 1 { "u".into() } else { "1".into() }]);
                basis.push(((i, eps), BasisElement::new(label, i * (m - 1) + eps * m, 0)));
            }
        }
        basis.sort_by_key(|(_, b)| (b.degree, b.label.clone()));
        let keys: Vec<(usize, usize)> = basis.iter().map(|(k, _)| *k).collect();
        let mut gens: Vec<String> = (1..=top).map(sigma_label).collect();
        gens.push("u".into());
        let gen_refs: Vec<&str> = gens.iter().map(String::as_str).collect();
        let ring = build_ring(
            format!("cyclic(m={m},n={n};{coeffs})"),
            coeffs,
            basis.into_iter().map(|(_, b)| b).collect(),
            &gen_refs,
            |x, y| {
                let ((i, a), (j, b)) = (keys[x], keys[y]);
                if a + b > 1 || i + j > top {
                    return vec![];
                }
                let k = keys.iter().position(|&z| z == (i + j, a + b)).expect("closed under products");
                vec![(k, binom(i + j, i))]
            },
        );
        return Ok(if coeffs == Coefficients::IntegersMod2 { ring.mark_unverified() } else { ring });
    }
    if n % 2 == 0 {
        return Err(Error::Unsupported(format!("cyclic ring for even m = {m} and even n = {n} is not stated")));
    }
    if n < 3 {
        return Err(Error::BadInput("cyclic configurations with m even need odd n ≥ 3".into()));
    }
    if coeffs != Coefficients::Rationals {
        return Err(Error::Unsupported(format!("cyclic ring for even m over {coeffs} (stated for characteristic ≠ 2 fields)")));
    }
    let top = (n - 3) / 2;
    let mut basis = Vec::new();
    for eps in 0..2 {
        for i in 0..=top {
            let label = joined(&[sigma_label(2 * i), if eps == 1 { "w".into() } else { "1".into() }]);
            basis.push(((i, eps), BasisElement::new(label, 2 * i * (m - 1) + eps * (2 * m - 1), 0)));
        }
    }
    basis.sort_by_key(|(_, b)| (b.degree, b.label.clone()));
    let keys: Vec<(usize, usize)> = basis.iter().map(|(k, _)| *k).collect();
    let mut gens: Vec<String> = (1..=top).map(|i| sigma_label(2 * i)).collect();
    gens.push("w".into());
    let gen_refs: Vec<&str> = gens.iter().map(String::as_str).collect();
    Ok(build_ring(
        format!("cyclic(m={m},n={n};{coeffs})"),
        coeffs,
        basis.into_iter().map(|(_, b)| b).collect(),
        &gen_refs,
        |x, y| {
            let ((i, a), (j, b)) = (keys[x], keys[y]);
            if a + b > 1 || i + j > top {
                return vec![];
            }
            let k = keys.iter().position(|&z| z == (i + j, a + b)).expect("closed under products");
            vec![(k, binom(i + j, i))]
        },
    ))
}

/// `H*(RP^d; Z₂) = Z₂[α]/(α^{d+1})`.
pub fn projective_space_ring(d: usize) -> GradedRing {
    let label = |k: usize| match k {
        0 => "1".to_string(),
        1 => "alpha".to_string(),
        k => format!("alpha^{k}"),
    };
    let basis = (0..=d).map(|k| BasisElement::new(label(k), k, 2)).collect();
    build_ring(format!("RP^{d}(Z2)"), Coefficients::IntegersMod2, basis, &["alpha"], |i, j| {
        if i + j <= d {
            vec![(i + j, BigInt::one())]
        } else {
            vec![]
        }
    })
}

/// `C(2i+2j, 2i)` is even exactly when `i` and `j` share a binary digit.
pub fn binomial_parity(i: u64, j: u64) -> bool {
    i & j != 0
}
