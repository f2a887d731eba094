//! Finite graded rings with an explicit additive basis and exact integer
//! structure constants.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient domain of a ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coefficients {
    #[serde(rename = "Z")]
    Integers,
    #[serde(rename = "Q")]
    Rationals,
    #[serde(rename = "Z2")]
    IntegersMod2,
}

impl Coefficients {
    pub fn label(&self) -> &'static str {
        match self {
            Coefficients::Integers => "Z",
            Coefficients::Rationals => "Q",
            Coefficients::IntegersMod2 => "Z2",
        }
    }
}

impl FromStr for Coefficients {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Coefficients::Integers),
            "Q" | "q" => Ok(Coefficients::Rationals),
            "Z2" | "z2" => Ok(Coefficients::IntegersMod2),
            other => Err(Error::BadInput(format!("unknown coefficients `{other}` (expected Z, Q or Z2)"))),
        }
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One additive generator. `order == 0` means a free summand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElement {
    pub label: String,
    pub degree: usize,
    pub order: u32,
}

impl BasisElement {
    pub fn new(label: impl Into<String>, degree: usize, order: u32) -> Self {
        Self { label: label.into(), degree, order }
    }
}

/// Sparse integer combination of basis elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RingElement {
    terms: BTreeMap<usize, BigInt>,
}

impl RingElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, index: usize) -> BigInt {
        self.terms.get(&index).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &BigInt)> {
        self.terms.iter().map(|(&i, c)| (i, c))
    }

    fn add_term(&mut self, index: usize, coef: BigInt) {
        let entry = self.terms.entry(index).or_default();
        *entry += coef;
        if entry.is_zero() {
            self.terms.remove(&index);
        }
    }

    /// The element as `(index, coefficient)` pairs, ordered by index.
    pub fn to_pairs(&self) -> Vec<(usize, BigInt)> {
        self.terms.iter().map(|(&i, c)| (i, c.clone())).collect()
    }
}

/// A finite graded ring. Basis element 0 is the unit.
#[derive(Debug, Clone)]
pub struct GradedRing {
    name: String,
    coeffs: Coefficients,
    basis: Vec<BasisElement>,
    generators: Vec<usize>,
    table: Vec<RingElement>,
    verified_by_source: bool,
}

/// Builds a ring from an integral description: basis with additive orders,
/// the indices of the ring generators, and the product of two basis elements.
/// Passing to `Q` drops torsion summands; passing to `Z₂` reduces every
/// coefficient mod 2 (only correct for torsion-free integral rings or rings
/// whose statement holds over every field; callers decide).
pub(crate) fn build_ring(
    name: impl Into<String>,
    coeffs: Coefficients,
    basis: Vec<BasisElement>,
    generator_labels: &[&str],
    rule: impl Fn(usize, usize) -> Vec<(usize, BigInt)>,
) -> GradedRing {
    let keep: Vec<usize> = (0..basis.len()).filter(|&i| coeffs != Coefficients::Rationals || basis[i].order == 0).collect();
    let mut new_index = vec![usize::MAX; basis.len()];
    for (new, &old) in keep.iter().enumerate() {
        new_index[old] = new;
    }
    let new_basis: Vec<BasisElement> = keep
        .iter()
        .map(|&i| {
            let mut b = basis[i].clone();
            if coeffs == Coefficients::IntegersMod2 {
                b.order = 2;
            }
            b
        })
        .collect();
    let mut ring = GradedRing {
        name: name.into(),
        coeffs,
        generators: generator_labels
            .iter()
            .filter_map(|l| new_basis.iter().position(|b| b.label == *l))
            .collect(),
        basis: new_basis,
        table: Vec::new(),
        verified_by_source: true,
    };
    let size = keep.len();
    let mut table = Vec::with_capacity(size * size);
    for &i in &keep {
        for &j in &keep {
            let mut element = RingElement::zero();
            for (k, c) in rule(i, j) {
                if new_index[k] != usize::MAX {
                    element.add_term(new_index[k], c);
                }
            }
            table.push(ring.reduce(element));
        }
    }
    ring.table = table;
    ring
}

impl GradedRing {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coefficients(&self) -> Coefficients {
        self.coeffs
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Ring generators (indices into the basis).
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    /// `false` when the ring is offered beyond the coefficients its source proves.
    pub fn verified_by_source(&self) -> bool {
        self.verified_by_source
    }

    pub(crate) fn mark_unverified(mut self) -> Self {
        self.verified_by_source = false;
        self
    }

    pub fn top_degree(&self) -> usize {
        self.basis.iter().map(|b| b.degree).max().unwrap_or(0)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.basis.iter().position(|b| b.label == label)
    }

    pub fn degree_of(&self, index: usize) -> usize {
        self.basis[index].degree
    }

    pub fn unit(&self) -> RingElement {
        self.basis_element(0)
    }

    pub fn basis_element(&self, index: usize) -> RingElement {
        self.scaled(index, BigInt::one())
    }

    pub fn scaled(&self, index: usize, coef: BigInt) -> RingElement {
        let mut e = RingElement::zero();
        e.add_term(index, coef);
        self.reduce(e)
    }

    /// Basis element by label.
    pub fn element(&self, label: &str) -> Result<RingElement> {
        self.index_of(label)
            .map(|i| self.basis_element(i))
            .ok_or_else(|| Error::BadInput(format!("`{label}` is not a basis element of {}", self.name)))
    }

    fn reduce(&self, element: RingElement) -> RingElement {
        let mut out = RingElement::zero();
        for (i, c) in element.terms {
            let order = self.basis[i].order;
            let c = if order > 0 { c.mod_floor_positive(order) } else { c };
            out.add_term(i, c);
        }
        out
    }

    /// Product of two basis elements.
    pub fn basis_product(&self, i: usize, j: usize) -> &RingElement {
        &self.table[i * self.len() + j]
    }

    pub fn mul(&self, x: &RingElement, y: &RingElement) -> RingElement {
        let mut out = RingElement::zero();
        for (i, a) in x.terms() {
            for (j, b) in y.terms() {
                for (k, c) in self.basis_product(i, j).terms() {
                    out.add_term(k, a * b * c);
                }
            }
        }
        self.reduce(out)
    }

    pub fn add(&self, x: &RingElement, y: &RingElement) -> RingElement {
        let mut out = x.clone();
        for (k, c) in y.terms() {
            out.add_term(k, c.clone());
        }
        self.reduce(out)
    }

    pub fn neg(&self, x: &RingElement) -> RingElement {
        let mut out = RingElement::zero();
        for (k, c) in x.terms() {
            out.add_term(k, -c);
        }
        self.reduce(out)
    }

    /// Product of basis elements given by label, left to right.
    pub fn product_of(&self, labels: &[&str]) -> Result<RingElement> {
        let mut acc = self.unit();
        for l in labels {
            acc = self.mul(&acc, &self.element(l)?);
        }
        Ok(acc)
    }

    pub fn pow(&self, x: &RingElement, k: usize) -> RingElement {
        (0..k).fold(self.unit(), |acc, _| self.mul(&acc, x))
    }

    /// Checks unit, homogeneity, graded commutativity and associativity on
    /// every basis pair and triple.
    pub fn verify_axioms(&self) -> Result<()> {
        let n = self.len();
        if n == 0 || self.basis[0].degree != 0 {
            return Err(Error::Axiom(format!("{}: basis element 0 must be the unit", self.name)));
        }
        for i in 0..n {
            let e = self.basis_element(i);
            if self.mul(&self.unit(), &e) != e || self.mul(&e, &self.unit()) != e {
                return Err(Error::Axiom(format!("{}: unit law fails on {}", self.name, self.basis[i].label)));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let p = self.basis_product(i, j);
                let d = self.basis[i].degree + self.basis[j].degree;
                if p.terms().any(|(k, _)| self.basis[k].degree != d) {
                    return Err(Error::Axiom(format!("{}: product {}·{} is not homogeneous", self.name, self.label(i), self.label(j))));
                }
                let swapped = self.basis_product(j, i);
                let sign_odd = self.basis[i].degree * self.basis[j].degree % 2 == 1;
                let expected = if sign_odd { self.neg(swapped) } else { swapped.clone() };
                if *p != expected {
                    return Err(Error::Axiom(format!(
                        "{}: graded commutativity fails for {}, {}",
                        self.name,
                        self.label(i),
                        self.label(j)
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let ij = self.basis_product(i, j);
                for k in 0..n {
                    let left = self.mul(ij, &self.basis_element(k));
                    let right = self.mul(&self.basis_element(i), self.basis_product(j, k));
                    if left != right {
                        return Err(Error::Axiom(format!(
                            "{}: associativity fails for {}, {}, {}",
                            self.name,
                            self.label(i),
                            self.label(j),
                            self.label(k)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn label(&self, i: usize) -> &str {
        &self.basis[i].label
    }

    /// Longest nonzero product of positive-degree basis elements.
    pub fn cup_length(&self) -> CupLength {
        let factors: Vec<usize> = (0..self.len()).filter(|&i| self.basis[i].degree > 0).collect();
        let mut memo: HashMap<(usize, RingElement), Vec<usize>> = HashMap::new();
        let mut best: Vec<usize> = Vec::new();
        for (pos, &f) in factors.iter().enumerate() {
            let e = self.basis_element(f);
            if e.is_zero() {
                continue;
            }
            let mut chain = vec![f];
            chain.extend(self.extend_product(&factors, pos, e, &mut memo));
            if chain.len() > best.len() {
                best = chain;
            }
        }
        CupLength {
            length: best.len(),
            witness: best.iter().map(|&i| self.basis[i].label.clone()).collect(),
        }
    }

    /// Longest continuation using factors at positions `≥ from` that keeps the product nonzero.
    fn extend_product(
        &self,
        factors: &[usize],
        from: usize,
        current: RingElement,
        memo: &mut HashMap<(usize, RingElement), Vec<usize>>,
    ) -> Vec<usize> {
        let key = (from, current);
        if let Some(hit) = memo.get(&key) {
            return hit.clone();
        }
        let mut best = Vec::new();
        for (pos, &g) in factors.iter().enumerate().skip(from) {
            let next = self.mul(&key.1, &self.basis_element(g));
            if next.is_zero() {
                continue;
            }
            let mut chain = vec![g];
            chain.extend(self.extend_product(factors, pos, next, memo));
            if chain.len() > best.len() {
                best = chain;
            }
        }
        memo.insert(key, best.clone());
        best
    }

    /// Ranks of the free summands by degree (the rational Betti numbers).
    pub fn free_ranks(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for b in self.basis.iter().filter(|b| b.order == 0) {
            *out.entry(b.degree).or_insert(0) += 1;
        }
        out
    }

    /// Betti numbers over `Z₂` of an integral ring by universal coefficients:
    /// `b_j = free_j + t_j + t_{j+1}` with `t_j` the number of even-order
    /// summands in degree `j`.
    pub fn z2_betti_from_integral(&self) -> Result<Vec<usize>> {
        if self.coeffs != Coefficients::Integers {
            return Err(Error::BadInput("universal coefficients need an integral ring".into()));
        }
        let mut betti = vec![0usize; self.top_degree() + 1];
        for b in &self.basis {
            if b.order == 0 {
                betti[b.degree] += 1;
            } else if b.order % 2 == 0 {
                betti[b.degree] += 1;
                if b.degree > 0 {
                    betti[b.degree - 1] += 1;
                }
            }
        }
        Ok(betti)
    }

    pub fn format_element(&self, x: &RingElement) -> String {
        if x.is_zero() {
            return "0".into();
        }
        x.terms()
            .map(|(i, c)| if c.is_one() { self.label(i).to_string() } else { format!("{c}*{}", self.label(i)) })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Basis, generators and the nonzero part of the multiplication table.
    pub fn dump(&self) -> RingDump {
        let mut products = Vec::new();
        for i in 1..self.len() {
            for j in i..self.len() {
                let p = self.basis_product(i, j);
                if !p.is_zero() {
                    products.push(ProductEntry {
                        left: self.label(i).to_string(),
                        right: self.label(j).to_string(),
                        result: self.format_element(p),
                    });
                }
            }
        }
        RingDump {
            name: self.name.clone(),
            coefficients: self.coeffs,
            verified_by_source: self.verified_by_source,
            generators: self.generators.iter().map(|&i| self.label(i).to_string()).collect(),
            basis: self.basis.clone(),
            products,
        }
    }
}

trait ModPositive {
    fn mod_floor_positive(&self, order: u32) -> BigInt;
}

impl ModPositive for BigInt {
    fn mod_floor_positive(&self, order: u32) -> BigInt {
        let o = BigInt::from(order);
        let r = self % &o;
        if r.is_negative() {
            r + o
        } else {
            r
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CupLength {
    pub length: usize,
    /// Labels of the factors of one longest nonzero product.
    pub witness: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductEntry {
    pub left: String,
    pub right: String,
    pub result: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RingDump {
    pub name: String,
    pub coefficients: Coefficients,
    pub verified_by_source: bool,
    pub generators: Vec<String>,
    pub basis: Vec<BasisElement>,
    pub products: Vec<ProductEntry>,
}
