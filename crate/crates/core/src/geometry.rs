//! Smooth strictly convex hypersurfaces `X = ∂T ⊂ R^{m+1}`.
//!
//! A body is described by a defining function `g` with `g < 0` inside, `g = 0`
//! on the surface and `∇g ≠ 0` there. Spheres and ellipsoids use the quadric
//! `Σ (x_i/a_i)² − 1`; implicit bodies use a user polynomial. Every query that
//! takes a surface point checks the on-surface residual `|g(p)|` against the
//! body tolerance. The origin is the interior reference point and must lie
//! inside the body.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IMPLICIT_MAX_ITER: usize = 50;
const IMPLICIT_TOL: f64 = 1e-12;
const DEFAULT_TOLERANCE: f64 = 1e-9;
const DEFAULT_CONVEXITY_SAMPLES: usize = 1000;
const CONVEXITY_SEED: u64 = 0x5eed_b0d1;

/// One monomial `coef · Π x_i^{e_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

/// A real polynomial on `R^{m+1}` with analytic gradient and Hessian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Term>,
}

fn powi(x: f64, e: u32) -> f64 {
    x.powi(e as i32)
}

impl Polynomial {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    /// `Σ x_i^power − 1`, e.g. the quartic ball for `power = 4`.
    pub fn power_ball(dim: usize, power: u32) -> Self {
        let mut terms: Vec<Term> = (0..dim)
            .map(|i| {
                let mut exponents = vec![0; dim];
                exponents[i] = power;
                Term { coef: 1.0, exponents }
            })
            .collect();
        terms.push(Term { coef: -1.0, exponents: vec![0; dim] });
        Self { terms }
    }

    pub fn dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.exponents.len())
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * t.exponents.iter().zip(x.iter()).map(|(&e, &xi)| powi(xi, e)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x.len();
        let mut g = DVector::zeros(d);
        for t in &self.terms {
            for k in 0..d {
                let ek = t.exponents[k];
                if ek == 0 {
                    continue;
                }
                let mut v = t.coef * ek as f64 * powi(x[k], ek - 1);
                for (i, (&e, &xi)) in t.exponents.iter().zip(x.iter()).enumerate() {
                    if i != k {
                        v *= powi(xi, e);
                    }
                }
                g[k] += v;
            }
        }
        g
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = x.len();
        let mut h = DMatrix::zeros(d, d);
        for t in &self.terms {
            for k in 0..d {
                for l in k..d {
                    let mut exps = t.exponents.clone();
                    let mut c = t.coef;
                    if exps[k] == 0 {
                        continue;
                    }
                    c *= exps[k] as f64;
                    exps[k] -= 1;
                    if exps[l] == 0 {
                        continue;
                    }
                    c *= exps[l] as f64;
                    exps[l] -= 1;
                    let v = c * exps.iter().zip(x.iter()).map(|(&e, &xi)| powi(xi, e)).product::<f64>();
                    h[(k, l)] += v;
                    if k != l {
                        h[(l, k)] += v;
                    }
                }
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    Ellipsoid { semi_axes: Vec<f64> },
    Implicit { polynomial: Polynomial },
}

/// On-disk body description (TOML or JSON).
///
/// ```toml
/// kind = "ellipsoid"
/// semi_axes = [1.1, 1.0, 0.9]
/// tolerance = 1e-9
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySpec {
    /// Hypersurface dimension `m`; inferred from the shape when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convexity_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexBody {
    dim_m: usize,
    shape: Shape,
    tolerance: f64,
    #[serde(skip)]
    diameter: f64,
}

impl ConvexBody {
    pub fn sphere(dim_m: usize, radius: f64) -> Result<Self> {
        if dim_m < 1 {
            return Err(Error::BadInput("dimension m must be at least 1".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::BadInput(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self { dim_m, shape: Shape::Sphere { radius }, tolerance: DEFAULT_TOLERANCE, diameter: 2.0 * radius })
    }

    pub fn unit_sphere(dim_m: usize) -> Result<Self> {
        Self::sphere(dim_m, 1.0)
    }

    /// Ellipsoid `Σ (x_i/a_i)² = 1`; `m = semi_axes.len() − 1`.
    pub fn ellipsoid(semi_axes: &[f64]) -> Result<Self> {
        if semi_axes.len() < 2 {
            return Err(Error::BadInput("an ellipsoid needs at least two semi-axes".into()));
        }
        if let Some(a) = semi_axes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::BadInput(format!("semi-axes must be positive, got {a}")));
        }
        let diameter = 2.0 * semi_axes.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            dim_m: semi_axes.len() - 1,
            shape: Shape::Ellipsoid { semi_axes: semi_axes.to_vec() },
            tolerance: DEFAULT_TOLERANCE,
            diameter,
        })
    }

    /// Body `{f ≤ 0}` for a polynomial `f`; strict convexity is checked on
    /// `samples` seeded surface points.
    pub fn implicit(polynomial: Polynomial) -> Result<Self> {
        Self::implicit_checked(polynomial, DEFAULT_CONVEXITY_SAMPLES)
    }

    pub fn implicit_checked(polynomial: Polynomial, samples: usize) -> Result<Self> {
        let dim = polynomial
            .dim()
            .ok_or_else(|| Error::BadInput("implicit polynomial has no terms".into()))?;
        if dim < 2 {
            return Err(Error::BadInput("implicit body needs ambient dimension ≥ 2".into()));
        }
        if polynomial.terms.iter().any(|t| t.exponents.len() != dim) {
            return Err(Error::BadInput("polynomial terms disagree on the number of variables".into()));
        }
        if polynomial.eval(&DVector::zeros(dim)) >= 0.0 {
            return Err(Error::BadInput("the origin must lie strictly inside the body".into()));
        }
        let mut body = Self {
            dim_m: dim - 1,
            shape: Shape::Implicit { polynomial },
            tolerance: DEFAULT_TOLERANCE,
            diameter: 0.0,
        };
        body.diameter = body.verify_convexity(samples)?;
        Ok(body)
    }

    pub fn from_spec(spec: &BodySpec) -> Result<Self> {
        let body = match &spec.shape {
            Shape::Sphere { radius } => {
                let m = spec.dim.ok_or_else(|| Error::Config("sphere body needs `dim`".into()))?;
                Self::sphere(m, *radius)?
            }
            Shape::Ellipsoid { semi_axes } => Self::ellipsoid(semi_axes)?,
            Shape::Implicit { polynomial } => {
                Self::implicit_checked(polynomial.clone(), spec.convexity_samples.unwrap_or(DEFAULT_CONVEXITY_SAMPLES))?
            }
        };
        if let Some(m) = spec.dim {
            if m != body.dim_m {
                return Err(Error::Config(format!("declared dim {m} does not match shape dimension {}", body.dim_m)));
            }
        }
        match spec.tolerance {
            Some(t) => body.with_tolerance(t),
            None => Ok(body),
        }
    }

    pub fn to_spec(&self) -> BodySpec {
        BodySpec { dim: Some(self.dim_m), shape: self.shape.clone(), tolerance: Some(self.tolerance), convexity_samples: None }
    }

    /// Parses a body file; `.json` is read as JSON, anything else as TOML.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let spec: BodySpec = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        Self::from_spec(&spec)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::BadInput("tolerance must be positive".into()));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn dim_m(&self) -> usize {
        self.dim_m
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim_m + 1
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Diameter scale: exact for spheres and ellipsoids, `2 · max |p|` over the
    /// convexity samples for implicit bodies.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.shape, Shape::Sphere { .. })
    }

    pub fn defining_value(&self, x: &DVector<f64>) -> f64 {
        match &self.shape {
            Shape::Sphere { radius } => x.norm_squared() / (radius * radius) - 1.0,
            Shape::Ellipsoid { semi_axes } => {
                x.iter().zip(semi_axes).map(|(xi, a)| (xi / a) * (xi / a)).sum::<f64>() - 1.0
            }
            Shape::Implicit { polynomial } => polynomial.eval(x),
        }
    }

    pub fn defining_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.shape {
            Shape::Sphere { radius } => x * (2.0 / (radius * radius)),
            Shape::Ellipsoid { semi_axes } => {
                DVector::from_iterator(x.len(), x.iter().zip(semi_axes).map(|(xi, a)| 2.0 * xi / (a * a)))
            }
            Shape::Implicit { polynomial } => polynomial.gradient(x),
        }
    }

    pub fn defining_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.shape {
            Shape::Sphere { radius } => DMatrix::identity(x.len(), x.len()) * (2.0 / (radius * radius)),
            Shape::Ellipsoid { semi_axes } => {
                DMatrix::from_diagonal(&DVector::from_iterator(x.len(), semi_axes.iter().map(|a| 2.0 / (a * a))))
            }
            Shape::Implicit { polynomial } => polynomial.hessian(x),
        }
    }

    pub fn residual(&self, p: &DVector<f64>) -> f64 {
        self.defining_value(p).abs()
    }

    pub(crate) fn check_point(&self, p: &DVector<f64>) -> Result<()> {
        if p.len() != self.ambient_dim() {
            return Err(Error::BadInput(format!("point has {} coordinates, expected {}", p.len(), self.ambient_dim())));
        }
        let residual = self.residual(p);
        if !(residual <= self.tolerance) {
            return Err(Error::OffSurface { residual, tolerance: self.tolerance });
        }
        Ok(())
    }

    /// Retraction onto `X`: radial for spheres, closest point for ellipsoids,
    /// Newton along the gradient line for implicit bodies.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::BadInput(format!("point has {} coordinates, expected {}", x.len(), self.ambient_dim())));
        }
        match &self.shape {
            Shape::Sphere { radius } => {
                let r = x.norm();
                if r == 0.0 || !r.is_finite() {
                    return Err(Error::BadInput("cannot project the center of a sphere".into()));
                }
                Ok(x * (radius / r))
            }
            Shape::Ellipsoid { semi_axes } => project_ellipsoid(semi_axes, x),
            Shape::Implicit { polynomial } => project_implicit(polynomial, x),
        }
    }

    pub fn outward_normal(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_point(p)?;
        let g = self.defining_gradient(p);
        let norm = g.norm();
        if norm == 0.0 {
            return Err(Error::BadInput("defining function has a vanishing gradient".into()));
        }
        Ok(g / norm)
    }

    /// Orthonormal basis of `T_pX` as the columns of an `(m+1) × m` matrix.
    ///
    /// Built from the Householder reflection sending a coordinate axis onto
    /// the normal, so the basis depends smoothly on `p` away from switches of
    /// the dominant normal coordinate.
    pub fn tangent_basis(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        let normal = self.outward_normal(p)?;
        Ok(householder_complement(&normal))
    }

    /// Second fundamental form with respect to the outward normal, in the
    /// coordinates of [`Self::tangent_basis`]. Positive definite on strictly
    /// convex bodies.
    pub fn second_fundamental_form(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        let basis = self.tangent_basis(p)?;
        let grad_norm = self.defining_gradient(p).norm();
        Ok(basis.transpose() * self.defining_hessian(p) * &basis / grad_norm)
    }

    /// Uniform direction from a normalized Gaussian, projected to `X`.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        loop {
            let v = DVector::from_iterator(self.ambient_dim(), (0..self.ambient_dim()).map(|_| rng.sample(StandardNormal)));
            let norm: f64 = v.norm();
            if norm > 1e-8 {
                return self.project(&(v / norm));
            }
        }
    }

    /// Samples the surface, checks `∇g ≠ 0` and positive definiteness of the
    /// second fundamental form. Returns the diameter estimate.
    fn verify_convexity(&self, samples: usize) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(CONVEXITY_SEED);
        let mut max_radius: f64 = 0.0;
        for _ in 0..samples.max(1) {
            let p = self.sample_point(&mut rng)?;
            let grad_norm = self.defining_gradient(&p).norm();
            if !(grad_norm > 1e-12) {
                return Err(Error::NotConvex(format!("vanishing gradient at {:?}", p.as_slice())));
            }
            let sff = self.second_fundamental_form(&p)?;
            let min_eig = SymmetricEigen::new(sff).eigenvalues.min();
            if !(min_eig > 0.0) {
                return Err(Error::NotConvex(format!(
                    "second fundamental form has eigenvalue {min_eig:.3e} at {:?}",
                    p.as_slice()
                )));
            }
            max_radius = max_radius.max(p.norm());
        }
        Ok(2.0 * max_radius)
    }
}

/// Columns `H e_j` (`j ≠ k`) of the Householder reflection with `H e_k = ±n`.
pub(crate) fn householder_complement(normal: &DVector<f64>) -> DMatrix<f64> {
    let d = normal.len();
    let k = normal.iamax();
    let sign = if normal[k] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = normal.clone();
    w[k] += sign;
    let ww = w.norm_squared();
    let mut basis = DMatrix::zeros(d, d - 1);
    let mut col = 0;
    for j in 0..d {
        if j == k {
            continue;
        }
        for i in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            basis[(i, col)] = delta - 2.0 * w[i] * w[j] / ww;
        }
        col += 1;
    }
    basis
}

/// Closest point on `Σ (x_i/a_i)² = 1` via the Lagrange multiplier `t`:
/// `p_i = a_i² x_i / (a_i² + t)` where `t` is the largest root of
/// `Σ (a_i x_i / (a_i² + t))² = 1`.
fn project_ellipsoid(axes: &[f64], x: &DVector<f64>) -> Result<DVector<f64>> {
    let active: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    if active.is_empty() {
        return Err(Error::BadInput("cannot project the center of an ellipsoid".into()));
    }
    let lo_bound = -active.iter().map(|&i| axes[i] * axes[i]).fold(f64::INFINITY, f64::min);
    let phi = |t: f64| -> (f64, f64) {
        let mut value = -1.0;
        let mut deriv = 0.0;
        for &i in &active {
            let a2 = axes[i] * axes[i];
            let q = axes[i] * x[i] / (a2 + t);
            value += q * q;
            deriv -= 2.0 * q * q / (a2 + t);
        }
        (value, deriv)
    };
    // phi decreases from +inf at lo_bound to -1 at infinity; bracket the root.
    let mut lo = lo_bound;
    let mut hi = 1.0;
    while phi(hi).0 > 0.0 {
        lo = hi;
        hi = 2.0 * hi + 1.0;
    }
    if phi(0.0).0 > 0.0 {
        lo = lo.max(0.0);
    } else {
        hi = hi.min(0.0);
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..300 {
        let (v, dv) = phi(t);
        if v.abs() < 1e-16 {
            break;
        }
        if v > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - v / dv;
        let next = if newton >= lo && newton <= hi { newton } else { 0.5 * (lo + hi) };
        if next == t {
            break;
        }
        t = next;
    }
    let p = DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            let a2 = axes[i] * axes[i];
            a2 * x[i] / (a2 + t)
        }),
    );
    let residual = (p.iter().zip(axes).map(|(pi, a)| (pi / a) * (pi / a)).sum::<f64>() - 1.0).abs();
    if !(residual <= 1e-10) {
        return Err(Error::NoConvergence(format!("ellipsoid projection residual {residual:.3e}")));
    }
    Ok(p)
}

fn project_implicit(f: &Polynomial, x: &DVector<f64>) -> Result<DVector<f64>> {
    let mut p = x.clone();
    for _ in 0..IMPLICIT_MAX_ITER {
        let value = f.eval(&p);
        let g = f.gradient(&p);
        let gg = g.norm_squared();
        if !(gg > 1e-300) {
            return Err(Error::NoConvergence("gradient vanished during implicit projection".into()));
        }
        p -= g * (value / gg);
        // One step past the tolerance, so the result is smooth in `x`.
        if value.abs() <= IMPLICIT_TOL {
            return Ok(p);
        }
    }
    Err(Error::NoConvergence(format!(
        "implicit projection did not reach |f| ≤ {IMPLICIT_TOL:e} in {IMPLICIT_MAX_ITER} iterations"
    )))
}
