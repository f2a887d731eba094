//! Rings, Poincaré polynomials and bound tables against values rebuilt here
//! from the stated relations.

use std::collections::BTreeSet;

use billiards::cohomology::{
    bound_closed, bound_periodic, closed_string_ring, cyclic_ring, poincare_polynomial_quotient, quotient_ring, Clause, Coefficients,
    GradedRing, RingElement, Witness,
};
use num_bigint::BigInt;

use crate::Outcome;

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * k)
}

/// `top! / (a!·b!)`.
fn ratio(top: usize, a: usize, b: usize) -> BigInt {
    factorial(top) / (factorial(a) * factorial(b))
}

fn join(parts: &[String]) -> String {
    let parts: Vec<&str> = parts.iter().map(String::as_str).filter(|p| !p.is_empty()).collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

fn sigma(i: usize) -> String {
    if i == 0 {
        String::new()
    } else {
        format!("sigma_{i}")
    }
}

/// An additive basis with its multiplication table, written down from the
/// relations alone.
struct Oracle<K> {
    keys: Vec<K>,
    label: fn(&K) -> String,
    degree: Box<dyn Fn(&K) -> usize>,
    order: fn(&K) -> u32,
    /// `None` when the product vanishes.
    product: Box<dyn Fn(&K, &K) -> Option<(K, BigInt)>>,
}

impl<K: PartialEq> Oracle<K> {
    /// Basis comparison plus every pairwise product. Returns the number of
    /// products checked.
    fn check(&self, ring: &GradedRing) -> Result<usize, String> {
        let expected: BTreeSet<(String, usize, u32)> =
            self.keys.iter().map(|k| ((self.label)(k), (self.degree)(k), (self.order)(k))).collect();
        let actual: BTreeSet<(String, usize, u32)> = ring.basis().iter().map(|b| (b.label.clone(), b.degree, b.order)).collect();
        if expected != actual {
            let missing: Vec<_> = expected.difference(&actual).collect();
            let extra: Vec<_> = actual.difference(&expected).collect();
            return Err(format!("{}: basis mismatch, missing {missing:?}, extra {extra:?}", ring.name()));
        }
        let element = |k: &K| ring.element(&(self.label)(k)).map_err(|e| e.to_string());
        let mut checked = 0;
        for x in &self.keys {
            for y in &self.keys {
                let want = match (self.product)(x, y) {
                    Some((z, c)) if self.keys.contains(&z) => {
                        let index = ring.index_of(&(self.label)(&z)).ok_or("basis lookup")?;
                        ring.scaled(index, c)
                    }
                    _ => RingElement::zero(),
                };
                let got = ring.mul(&element(x)?, &element(y)?);
                if got != want {
                    return Err(format!(
                        "{}: {} · {} = {}, expected {}",
                        ring.name(),
                        (self.label)(x),
                        (self.label)(y),
                        ring.format_element(&got),
                        ring.format_element(&want)
                    ));
                }
                checked += 1;
            }
        }
        Ok(checked)
    }
}

fn closed_string_oracle(m: usize, n: usize) -> Oracle<usize> {
    Oracle {
        keys: (0..n).collect(),
        label: |&i| join(&[sigma(i)]),
        degree: Box::new(move |&i| i * (m - 1)),
        order: |_| 0,
        product: Box::new(move |&i, &j| {
            if i + j > n - 1 {
                None
            } else if m % 2 == 1 {
                Some((i + j, ratio(i + j, i, j)))
            } else if i % 2 == 1 && j % 2 == 1 {
                None
            } else {
                Some((i + j, ratio((i + j) / 2, i / 2, j / 2)))
            }
        }),
    }
}

/// `δ_d · a^α · b^β · e^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct QuotientMono {
    d: usize,
    a: usize,
    b: usize,
    k: usize,
}

fn quotient_oracle(m: usize, n: usize) -> Oracle<QuotientMono> {
    let odd = m % 2 == 1;
    let delta_end = if odd { n / 2 } else { (n + 2) / 4 };
    let e_end = if odd { (m + 1) / 2 } else { m / 2 };
    let alive = move |x: &QuotientMono| {
        x.d < delta_end
            && x.k < e_end
            && x.a <= 1
            && x.b <= 1
            && !(x.a == 1 && (x.b == 1 || x.k > 0))
            && (odd || !(x.b == 1 && n == 4 * x.d + 2))
            && (!odd || (x.a == 0 && x.b == 0))
    };
    let mut keys = Vec::new();
    for d in 0..delta_end {
        for a in 0..2 {
            for b in 0..2 {
                for k in 0..e_end {
                    let x = QuotientMono { d, a, b, k };
                    if alive(&x) {
                        keys.push(x);
                    }
                }
            }
        }
    }
    let delta_degree = if odd { 2 * (m - 1) } else { 4 * (m - 1) };
    Oracle {
        keys,
        label: |x| {
            let mut parts = Vec::new();
            if x.d > 0 {
                parts.push(format!("delta_{}", x.d));
            }
            if x.a == 1 {
                parts.push("a".into());
            }
            if x.b == 1 {
                parts.push("b".into());
            }
            match x.k {
                0 => {}
                1 => parts.push("e".into()),
                k => parts.push(format!("e^{k}")),
            }
            join(&parts)
        },
        degree: Box::new(move |x| x.d * delta_degree + x.a * (m - 1) + x.b * (2 * m - 1) + 2 * x.k),
        order: |x| if x.b == 1 || x.k > 0 { 2 } else { 0 },
        product: Box::new(move |x, y| {
            let z = QuotientMono { d: x.d + y.d, a: x.a + y.a, b: x.b + y.b, k: x.k + y.k };
            alive(&z).then(|| (z, ratio(2 * z.d, 2 * x.d, 2 * y.d)))
        }),
    }
}

/// `σ_i · v^ε` with `v = u` (m odd) or `w` (m even, indices doubled).
fn cyclic_oracle(m: usize, n: usize) -> Oracle<(usize, usize)> {
    let odd = m % 2 == 1;
    let top = if odd { n - 2 } else { (n - 3) / 2 };
    let keys = (0..2).flat_map(|eps| (0..=top).map(move |i| (i, eps))).collect();
    let label: fn(&(usize, usize)) -> String = if odd {
        |&(i, eps)| join(&[sigma(i), if eps == 1 { "u".into() } else { String::new() }])
    } else {
        |&(i, eps)| join(&[sigma(2 * i), if eps == 1 { "w".into() } else { String::new() }])
    };
    Oracle {
        keys,
        label,
        degree: Box::new(move |&(i, eps)| if odd { i * (m - 1) + eps * m } else { 2 * i * (m - 1) + eps * (2 * m - 1) }),
        order: |_| 0,
        product: Box::new(move |&(i, a), &(j, b)| (a + b <= 1 && i + j <= top).then(|| ((i + j, a + b), ratio(i + j, i, j)))),
    }
}

/// Additive structure of the quotient by degree: `(free, Z₂)` counts.
fn quotient_groups(m: usize, n: usize) -> Vec<(usize, usize, u32)> {
    let mut groups = Vec::new();
    if m % 2 == 1 {
        for i in 0..n / 2 {
            groups.push((2 * i * (m - 1), 1, 0));
            for j in (2 * i * (m - 1) + 1)..=((2 * i + 1) * (m - 1)) {
                if j % 2 == 0 {
                    groups.push((j, 1, 2));
                }
            }
        }
    } else {
        for r in 0..=(n - 2) / 4 {
            for eps in 0..2 {
                groups.push(((4 * r + eps) * (m - 1), 1, 0));
            }
            for i in (2..=m.saturating_sub(2)).step_by(2) {
                groups.push((4 * r * (m - 1) + i, 1, 2));
            }
        }
        if n >= 4 {
            for r in 0..=(n - 4) / 4 {
                for i in (1..m).step_by(2) {
                    groups.push(((4 * r + 2) * (m - 1) + i, 1, 2));
                }
            }
        }
    }
    groups.sort();
    groups
}

fn ring_groups(ring: &GradedRing) -> Vec<(usize, usize, u32)> {
    let mut groups: Vec<_> = ring.basis().iter().map(|b| (b.degree, 1, b.order)).collect();
    groups.sort();
    groups
}

pub fn ring_reproduction() -> Outcome {
    let mut rings = 0;
    let mut products = 0;
    let fail = |e: billiards::Error| e.to_string();
    for m in 2..=5 {
        for n in 2..=12 {
            let ring = closed_string_ring(m, n, Coefficients::Integers).map_err(fail)?;
            products += closed_string_oracle(m, n).check(&ring)?;
            ring.verify_axioms().map_err(fail)?;
            rings += 1;

            if n % 2 == 0 {
                let ring = quotient_ring(m, n, Coefficients::Integers).map_err(fail)?;
                if ring_groups(&ring) != quotient_groups(m, n) {
                    return Err(format!("{}: additive groups differ from the stated table", ring.name()));
                }
                products += quotient_oracle(m, n).check(&ring)?;
                ring.verify_axioms().map_err(fail)?;
                rings += 1;
            }

            if m % 2 == 1 || (n % 2 == 1 && n >= 3) {
                let ring = cyclic_ring(m, n, Coefficients::Rationals).map_err(fail)?;
                products += cyclic_oracle(m, n).check(&ring)?;
                ring.verify_axioms().map_err(fail)?;
                rings += 1;
            }
        }
    }
    Ok(format!("{rings} rings, {products} basis products"))
}

/// `b_j = #{p < n/2 : 2p(m−1) ≤ j ≤ (2p+1)(m−1)}`, one `RP^{m−1}` per level.
fn filtration_betti(m: usize, n: usize) -> Vec<usize> {
    let top = (n - 2) * (m - 1) + (m - 1);
    let mut betti = vec![0; top + 1];
    for p in 0..n / 2 {
        for b in betti.iter_mut().take((2 * p + 1) * (m - 1) + 1).skip(2 * p * (m - 1)) {
            *b += 1;
        }
    }
    betti
}

pub fn poincare_betti() -> Outcome {
    let mut cases = 0;
    for m in 2..=5 {
        for n in (2..=12).step_by(2) {
            let poly = poincare_polynomial_quotient(m, n).map_err(|e| e.to_string())?;
            let sum: i64 = poly.iter().sum();
            if sum != (m * n / 2) as i64 {
                return Err(format!("m={m} n={n}: coefficient sum {sum}, expected {}", m * n / 2));
            }
            let poly: Vec<usize> = poly.iter().map(|&c| usize::try_from(c).map_err(|_| format!("negative coefficient {c}"))).collect::<Result<_, _>>()?;
            let filtration = filtration_betti(m, n);
            let ring = quotient_ring(m, n, Coefficients::Integers).map_err(|e| e.to_string())?;
            let uct = ring.z2_betti_from_integral().map_err(|e| e.to_string())?;
            let pad = |v: &[usize], len: usize| {
                let mut v = v.to_vec();
                v.resize(len, 0);
                v
            };
            let len = poly.len().max(filtration.len()).max(uct.len());
            if pad(&poly, len) != pad(&filtration, len) {
                return Err(format!("m={m} n={n}: polynomial {poly:?} vs filtration {filtration:?}"));
            }
            if pad(&poly, len) != pad(&uct, len) {
                return Err(format!("m={m} n={n}: polynomial {poly:?} vs quotient ring Z2 dimensions {uct:?}"));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} (m, n) pairs, sums mn/2, degreewise match"))
}

fn log2_floor(n: usize) -> usize {
    let mut k = 0;
    while 1usize << (k + 1) <= n {
        k += 1;
    }
    k
}

fn closed_table(m: usize, n: usize, clause: Clause) -> Option<usize> {
    match clause {
        Clause::I if m >= 3 && m % 2 == 1 => Some(n),
        Clause::I if m >= 2 && m % 2 == 0 => Some(n / 2 + 1),
        Clause::II if n >= 2 && n % 2 == 0 && m >= 3 && m % 2 == 1 => Some(log2_floor(n) + m - 1),
        Clause::II if n >= 4 && n % 2 == 0 && m >= 2 && m % 2 == 0 => Some(log2_floor(n) + m - 2),
        Clause::II if n == 2 && m >= 2 && m % 2 == 0 => Some(m),
        Clause::III if n >= 2 && n % 2 == 0 && m >= 1 => Some(m * n / 2),
        _ => None,
    }
}

fn periodic_table(m: usize, n: usize) -> Option<usize> {
    let odd_prime = n >= 3 && n % 2 == 1 && (3..n).step_by(2).take_while(|d| d * d <= n).all(|d| n % d != 0);
    match (m, odd_prime) {
        (m, true) if m >= 3 && m % 2 == 1 => Some(n),
        (m, true) if m >= 2 && m % 2 == 0 => Some((n + 1) / 2),
        _ => None,
    }
}

fn check_witness(w: &Option<Witness>, value: usize, cell: &str) -> Result<(), String> {
    match w {
        Some(w) if w.nonzero && w.category_bound >= value && w.weights.iter().sum::<usize>() + 1 == w.category_bound => Ok(()),
        Some(w) => Err(format!("{cell}: witness {:?} = {} does not certify {value}", w.factors, w.product)),
        None => Err(format!("{cell}: no witness")),
    }
}

pub fn bound_tables() -> Outcome {
    let mut applicable = 0;
    let mut rejected = 0;
    for m in 1..=6 {
        for n in 1..=20 {
            for clause in [Clause::I, Clause::II, Clause::III] {
                let cell = format!("clause {clause} m={m} n={n}");
                match (closed_table(m, n, clause), bound_closed(m, n, clause)) {
                    (Some(v), Ok(r)) if r.value == v => {
                        if clause == Clause::II {
                            check_witness(&r.witness, v, &cell)?;
                        }
                        applicable += 1;
                    }
                    (None, Err(_)) => rejected += 1,
                    (want, got) => return Err(format!("{cell}: expected {want:?}, got {:?}", got.map(|r| r.value))),
                }
            }
            let cell = format!("periodic m={m} n={n}");
            match (periodic_table(m, n), bound_periodic(m, n)) {
                (Some(v), Ok(r)) if r.value == v => {
                    check_witness(&r.witness, v, &cell)?;
                    applicable += 1;
                }
                (None, Err(_)) => rejected += 1,
                (want, got) => return Err(format!("{cell}: expected {want:?}, got {:?}", got.map(|r| r.value))),
            }
        }
    }
    for (m, n, want) in [(2, 2, 2), (4, 2, 4), (6, 2, 6), (2, 6, 2), (4, 14, 5), (6, 14, 7)] {
        let got = bound_closed(m, n, Clause::II).map_err(|e| e.to_string())?.value;
        if got != want {
            return Err(format!("edge case clause II m={m} n={n}: {got}, expected {want}"));
        }
    }
    Ok(format!("{applicable} applicable cells, {rejected} rejected"))
}
