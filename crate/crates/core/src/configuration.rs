//! Configuration spaces `G(X;A,A,n)` (closed strings anchored at `A`) and
//! `G(X,n)` (cyclic), the negative total length functional and its first and
//! second derivatives in tangent coordinates.
//!
//! Tangent coordinates at a configuration are taken with respect to a
//! [`Frame`]: one orthonormal basis of `T_{x_j}X` per point. The default frame
//! comes from [`ConvexBody::tangent_basis`]; callers may supply their own
//! (the sphere oracle does, to compare matrices entry by entry).
//!
//! The Hessian is the Riemannian Hessian of the submanifold `Xⁿ ⊂ R^{(m+1)n}`:
//! the projected Euclidean Hessian plus the Weingarten term
//! `−⟨∇_j F, N_j⟩ · II_j` on each diagonal block.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::symmetry::{DihedralElement, SymmetryGroup};

/// Relative threshold (times the body diameter) below which two points coincide.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    ClosedString { anchor: DVector<f64> },
    Cyclic,
}

impl Kind {
    pub fn label(&self) -> &'static str {
        match self {
            Kind::ClosedString { .. } => "closed-string",
            Kind::Cyclic => "cyclic",
        }
    }

    pub fn symmetry(&self) -> SymmetryGroup {
        match self {
            Kind::ClosedString { .. } => SymmetryGroup::Reversal,
            Kind::Cyclic => SymmetryGroup::Dihedral,
        }
    }
}

/// Per-point tangent coefficients: row `j` holds the `m` coordinates of the
/// component in `T_{x_j}X`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub blocks: DMatrix<f64>,
}

impl TangentVector {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { blocks: DMatrix::zeros(n, m) }
    }

    /// Row-major flattening: entry `(j, a)` lands at `j·m + a`.
    pub fn from_flat(n: usize, m: usize, flat: &DVector<f64>) -> Self {
        Self { blocks: DMatrix::from_row_slice(n, m, flat.as_slice()) }
    }

    pub fn to_flat(&self) -> DVector<f64> {
        let (n, m) = self.blocks.shape();
        DVector::from_iterator(n * m, (0..n).flat_map(|j| (0..m).map(move |a| (j, a))).map(|(j, a)| self.blocks[(j, a)]))
    }

    pub fn n(&self) -> usize {
        self.blocks.nrows()
    }

    pub fn m(&self) -> usize {
        self.blocks.ncols()
    }

    pub fn block_norm(&self, j: usize) -> f64 {
        self.blocks.row(j).norm()
    }

    pub fn norm(&self) -> f64 {
        self.blocks.norm()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.blocks.dot(&other.blocks)
    }
}

/// Orthonormal tangent bases, one `(m+1) × m` matrix per configuration point.
#[derive(Debug, Clone)]
pub struct Frame {
    pub bases: Vec<DMatrix<f64>>,
}

impl Frame {
    /// Ambient vector of the tangent vector `v`, block by block.
    pub fn ambient(&self, v: &TangentVector) -> Vec<DVector<f64>> {
        self.bases.iter().enumerate().map(|(j, b)| b * v.blocks.row(j).transpose()).collect()
    }

    /// Coordinates of per-point ambient vectors after orthogonal projection.
    pub fn coordinates(&self, ambient: &[DVector<f64>]) -> TangentVector {
        let n = self.bases.len();
        let m = self.bases.first().map_or(0, |b| b.ncols());
        let mut blocks = DMatrix::zeros(n, m);
        for (j, (b, w)) in self.bases.iter().zip(ambient).enumerate() {
            blocks.set_row(j, &(b.transpose() * w).transpose());
        }
        TangentVector { blocks }
    }
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Anchor,
    Point(usize),
}

/// An ordered tuple of boundary points, either anchored at `A` or cyclic.
#[derive(Debug, Clone)]
pub struct Configuration {
    body: Arc<ConvexBody>,
    kind: Kind,
    points: Vec<DVector<f64>>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.points == other.points && *self.body == *other.body
    }
}

impl Configuration {
    /// Closed string `A → x₁ → … → xₙ → A`; requires `n ≥ 1`.
    pub fn closed_string(body: Arc<ConvexBody>, anchor: DVector<f64>, points: Vec<DVector<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::BadInput("a closed string needs n ≥ 1 points".into()));
        }
        Self::check_on_surface(&body, std::iter::once(&anchor).chain(&points))?;
        Ok(Self { body, kind: Kind::ClosedString { anchor }, points })
    }

    /// Cyclic configuration `x₁ → … → xₙ → x₁`; requires `n ≥ 2`.
    pub fn cyclic(body: Arc<ConvexBody>, points: Vec<DVector<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::BadInput("a cyclic configuration needs n ≥ 2 points".into()));
        }
        Self::check_on_surface(&body, points.iter())?;
        Ok(Self { body, kind: Kind::Cyclic, points })
    }

    pub fn new(body: Arc<ConvexBody>, kind: Kind, points: Vec<DVector<f64>>) -> Result<Self> {
        match kind {
            Kind::ClosedString { anchor } => Self::closed_string(body, anchor, points),
            Kind::Cyclic => Self::cyclic(body, points),
        }
    }

    fn check_on_surface<'a>(body: &ConvexBody, points: impl Iterator<Item = &'a DVector<f64>>) -> Result<()> {
        for p in points {
            if p.len() != body.ambient_dim() {
                return Err(Error::BadInput(format!("point has {} coordinates, expected {}", p.len(), body.ambient_dim())));
            }
            let residual = body.residual(p);
            if !(residual <= body.tolerance()) {
                return Err(Error::OffSurface { residual, tolerance: body.tolerance() });
            }
        }
        Ok(())
    }

    /// Same kind and body, new points (no surface check).
    pub(crate) fn with_points(&self, points: Vec<DVector<f64>>) -> Self {
        Self { body: self.body.clone(), kind: self.kind.clone(), points }
    }

    pub fn body(&self) -> &Arc<ConvexBody> {
        &self.body
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn m(&self) -> usize {
        self.body.dim_m()
    }

    pub fn anchor(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            Kind::ClosedString { anchor } => Some(anchor),
            Kind::Cyclic => None,
        }
    }

    fn node(&self, node: Node) -> &DVector<f64> {
        match node {
            Node::Anchor => self.anchor().expect("anchor node on a closed string"),
            Node::Point(j) => &self.points[j],
        }
    }

    /// Chords in path order: `(A,x₁),…,(xₙ,A)` or `(x₁,x₂),…,(xₙ,x₁)`.
    fn chords(&self) -> Vec<(Node, Node)> {
        let n = self.n();
        match self.kind {
            Kind::ClosedString { .. } => {
                let mut chords = Vec::with_capacity(n + 1);
                chords.push((Node::Anchor, Node::Point(0)));
                chords.extend((0..n - 1).map(|j| (Node::Point(j), Node::Point(j + 1))));
                chords.push((Node::Point(n - 1), Node::Anchor));
                chords
            }
            Kind::Cyclic => (0..n).map(|j| (Node::Point(j), Node::Point((j + 1) % n))).collect(),
        }
    }

    /// Consecutive gap lengths in path order (`n+1` for closed strings, `n` for cyclic).
    pub fn gaps(&self) -> Vec<f64> {
        self.chords().into_iter().map(|(a, b)| (self.node(a) - self.node(b)).norm()).collect()
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn gap_product(&self) -> f64 {
        self.gaps().into_iter().product()
    }

    pub fn is_admissible(&self) -> bool {
        self.min_gap() > COINCIDENCE_THRESHOLD * self.body.diameter()
    }

    fn check_admissible(&self) -> Result<()> {
        let gaps = self.gaps();
        let threshold = COINCIDENCE_THRESHOLD * self.body.diameter();
        match gaps.iter().position(|&g| !(g > threshold)) {
            Some(i) => Err(Error::Inadmissible(format!("gap {i} has length {:.3e}", gaps[i]))),
            None => Ok(()),
        }
    }

    /// `−Σ |x_i − x_{i+1}|`. Gaps are summed in sorted order so the value is
    /// bit-identical across the symmetry group.
    pub fn neg_total_length(&self) -> Result<f64> {
        self.check_admissible()?;
        let mut gaps = self.gaps();
        gaps.sort_by(f64::total_cmp);
        Ok(-gaps.iter().sum::<f64>())
    }

    pub fn total_length(&self) -> Result<f64> {
        self.neg_total_length().map(|l| -l)
    }

    pub fn frame(&self) -> Result<Frame> {
        Ok(Frame { bases: self.points.iter().map(|p| self.body.tangent_basis(p)).collect::<Result<_>>()? })
    }

    /// Euclidean gradient of the functional with respect to each point.
    pub fn euclidean_gradient(&self) -> Result<Vec<DVector<f64>>> {
        self.check_admissible()?;
        let mut grad = vec![DVector::zeros(self.body.ambient_dim()); self.n()];
        for (a, b) in self.chords() {
            let d = self.node(a) - self.node(b);
            let u = &d / d.norm();
            if let Node::Point(j) = a {
                grad[j] -= &u;
            }
            if let Node::Point(j) = b {
                grad[j] += &u;
            }
        }
        Ok(grad)
    }

    /// Euclidean gradient of `log Π gaps` with respect to each point.
    pub fn log_gap_product_gradient(&self) -> Result<Vec<DVector<f64>>> {
        self.check_admissible()?;
        let mut grad = vec![DVector::zeros(self.body.ambient_dim()); self.n()];
        for (a, b) in self.chords() {
            let d = self.node(a) - self.node(b);
            let scaled = &d / d.norm_squared();
            if let Node::Point(j) = a {
                grad[j] += &scaled;
            }
            if let Node::Point(j) = b {
                grad[j] -= &scaled;
            }
        }
        Ok(grad)
    }

    /// Riemannian gradient in the default frame.
    pub fn gradient(&self) -> Result<TangentVector> {
        self.gradient_in(&self.frame()?)
    }

    pub fn gradient_in(&self, frame: &Frame) -> Result<TangentVector> {
        Ok(frame.coordinates(&self.euclidean_gradient()?))
    }

    pub fn gradient_norm(&self) -> Result<f64> {
        Ok(self.gradient()?.norm())
    }

    /// Riemannian Hessian in the default frame, an `nm × nm` symmetric matrix
    /// indexed like [`TangentVector::to_flat`].
    pub fn hessian(&self) -> Result<DMatrix<f64>> {
        self.hessian_in(&self.frame()?)
    }

    pub fn hessian_in(&self, frame: &Frame) -> Result<DMatrix<f64>> {
        self.check_admissible()?;
        let n = self.n();
        let m = self.m();
        let dim = self.body.ambient_dim();
        // Ambient second derivatives, block (j, k).
        let mut blocks = vec![DMatrix::<f64>::zeros(dim, dim); n * n];
        for (a, b) in self.chords() {
            let d = self.node(a) - self.node(b);
            let r = d.norm();
            let u = &d / r;
            let perp = (DMatrix::identity(dim, dim) - &u * u.transpose()) / r;
            let idx = |node: Node| match node {
                Node::Point(j) => Some(j),
                Node::Anchor => None,
            };
            let (ia, ib) = (idx(a), idx(b));
            if let Some(j) = ia {
                blocks[j * n + j] -= &perp;
            }
            if let Some(k) = ib {
                blocks[k * n + k] -= &perp;
            }
            if let (Some(j), Some(k)) = (ia, ib) {
                blocks[j * n + k] += &perp;
                blocks[k * n + j] += &perp;
            }
        }
        let grad = self.euclidean_gradient()?;
        let mut h = DMatrix::zeros(n * m, n * m);
        for j in 0..n {
            for k in 0..n {
                let mut block = frame.bases[j].transpose() * &blocks[j * n + k] * &frame.bases[k];
                if j == k {
                    let p = &self.points[j];
                    let g_def = self.body.defining_gradient(p);
                    let g_norm = g_def.norm();
                    let normal = &g_def / g_norm;
                    let sff = frame.bases[j].transpose() * self.body.defining_hessian(p) * &frame.bases[j] / g_norm;
                    block -= sff * grad[j].dot(&normal);
                }
                h.view_mut((j * m, k * m), (m, m)).copy_from(&block);
            }
        }
        // symmetrize away rounding
        let ht = h.transpose();
        Ok((h + ht) * 0.5)
    }

    /// Moves every point along its tangent block and projects back to `X`.
    pub fn retract(&self, frame: &Frame, step: &TangentVector) -> Result<Self> {
        let moved = frame.ambient(step);
        let points = self
            .points
            .iter()
            .zip(moved)
            .map(|(p, v)| self.body.project(&(p + v)))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.with_points(points))
    }

    /// Configuration with `x'_i = x_{map[i]}`.
    pub fn permuted(&self, map: &[usize]) -> Self {
        self.with_points(map.iter().map(|&i| self.points[i].clone()).collect())
    }

    /// The reversal `T(x₁,…,xₙ) = (xₙ,…,x₁)` of a closed string.
    pub fn reflect_t(&self) -> Result<Self> {
        match self.kind {
            Kind::ClosedString { .. } => Ok(self.with_points(self.points.iter().rev().cloned().collect())),
            Kind::Cyclic => Err(Error::WrongKind { expected: "closed-string" }),
        }
    }

    pub fn dihedral_act(&self, g: DihedralElement) -> Result<Self> {
        match self.kind {
            Kind::Cyclic => {
                let n = self.n();
                Ok(self.with_points((0..n).map(|i| self.points[g.source_index(i, n)].clone()).collect()))
            }
            Kind::ClosedString { .. } => Err(Error::WrongKind { expected: "cyclic" }),
        }
    }

    /// Images under every element of the kind's symmetry group, identity first.
    pub fn group_orbit(&self) -> Vec<Self> {
        self.kind.symmetry().index_maps(self.n()).iter().map(|map| self.permuted(map)).collect()
    }

    /// Membership in the truncation `G_ε`: the product of consecutive gaps is
    /// at least `ε` (up to a relative rounding slack of `1e−12`).
    pub fn in_g_epsilon(&self, epsilon: f64) -> bool {
        let product = self.gap_product();
        product.is_finite() && product >= epsilon * (1.0 - 1e-12)
    }

    /// Default truncation level `(10⁻³ · diameter)ⁿ`.
    pub fn default_epsilon(body: &ConvexBody, n: usize) -> f64 {
        (1e-3 * body.diameter()).powi(n as i32)
    }

    /// Largest ambient distance between matching points.
    pub fn distance(&self, other: &Self) -> f64 {
        self.points.iter().zip(&other.points).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
    }

    /// Distance to the nearest image of `other` under the symmetry group.
    pub fn orbit_distance(&self, other: &Self) -> f64 {
        other.group_orbit().iter().map(|g| self.distance(g)).fold(f64::INFINITY, f64::min)
    }

    pub fn to_record(&self, body_ref: &str) -> ConfigurationRecord {
        ConfigurationRecord {
            body_ref: body_ref.to_string(),
            kind: self.kind.label().to_string(),
            anchor: self.anchor().map(|a| a.iter().cloned().collect()),
            points: self.points.iter().map(|p| p.iter().cloned().collect()).collect(),
        }
    }

    pub fn from_record(record: &ConfigurationRecord, body: Arc<ConvexBody>) -> Result<Self> {
        let points = record.points.iter().map(|p| DVector::from_column_slice(p)).collect();
        match (record.kind.as_str(), &record.anchor) {
            ("closed-string", Some(anchor)) => Self::closed_string(body, DVector::from_column_slice(anchor), points),
            ("closed-string", None) => Err(Error::Config("closed-string record without an anchor".into())),
            ("cyclic", _) => Self::cyclic(body, points),
            (other, _) => Err(Error::Config(format!("unknown configuration kind `{other}`"))),
        }
    }
}

/// Serialized as `{kind, anchor?, points}`; the body is referenced separately.
impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            kind: &'a str,
            #[serde(skip_serializing_if = "Option::is_none")]
            anchor: Option<&'a [f64]>,
            points: Vec<&'a [f64]>,
        }
        View {
            kind: self.kind.label(),
            anchor: self.anchor().map(|a| a.as_slice()),
            points: self.points.iter().map(|p| p.as_slice()).collect(),
        }
        .serialize(serializer)
    }
}

/// Structured-text form of a configuration. Coordinates are written with a
/// round-trip float format, so parsing recovers the exact bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationRecord {
    pub body_ref: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    pub points: Vec<Vec<f64>>,
}
