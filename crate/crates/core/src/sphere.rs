//! Closed-form billiard data on the unit round sphere `Sᵐ`.
//!
//! Closed strings through `A` are the great-circle polygons
//! `x_j = cos(jψ_k)·A + sin(jψ_k)·a` with `ψ_k = 2πk/(n+1)`; periodic
//! trajectories are regular (star) `n`-gons in central planes, with turning
//! angle `α_p = (2π/n)((n−1)/2 − p)`. Both come in critical manifolds, and
//! the Hessian of the negative length splits into an in-plane block and
//! `m−1` identical out-of-plane blocks built from
//! `Q_ψ = J − 2cos ψ · I` (`J` the path or cycle adjacency matrix).
//!
//! The critical value of a closed level is `−2(n+1)·sin(πk/(n+1))`: every
//! chord subtends the angle `ψ_k` and has length `2 sin(ψ_k/2)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::configuration::{Configuration, Frame};
use crate::error::{Error, Result};
use crate::geometry::{householder_complement, ConvexBody};

/// Spectrum of a level: the `Q_ψ` data plus the full Hessian spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    pub level: usize,
    pub turning: usize,
    pub angle: f64,
    pub critical_value: f64,
    /// Closed-form eigenvalues of `Q_ψ`, in the order of `s`.
    pub q_eigenvalues: Vec<f64>,
    /// Eigenvectors of `Q_ψ` matching `q_eigenvalues` (unnormalized sines or cosines).
    pub q_eigenvectors: Vec<Vec<f64>>,
    pub q_index: usize,
    pub q_nullity: usize,
    /// Eigenvalues of the full Hessian of the negative length, ascending.
    pub hessian_eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
}

/// Hessian at an oracle configuration in the oracle frame.
#[derive(Debug, Clone)]
pub struct OracleHessian {
    /// `nm × nm` matrix, coordinates ordered like [`crate::TangentVector::to_flat`]:
    /// slot 0 of each block is the in-plane direction, slots `1..m` the
    /// out-of-plane directions.
    pub matrix: DMatrix<f64>,
    pub frame: Frame,
    pub in_plane_eigenvalues: Vec<f64>,
    /// Eigenvalues of one out-of-plane copy (there are `m−1`).
    pub out_of_plane_eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
}

impl OracleHessian {
    /// All eigenvalues with multiplicity, ascending.
    pub fn eigenvalues(&self, m: usize) -> Vec<f64> {
        let mut all = self.in_plane_eigenvalues.clone();
        for _ in 1..m {
            all.extend_from_slice(&self.out_of_plane_eigenvalues);
        }
        all.sort_by(f64::total_cmp);
        all
    }
}

/// Relative cutoff used to call a closed-form eigenvalue zero.
const ZERO_CUT: f64 = 1e-12;

fn count_signs(values: &[f64]) -> (usize, usize) {
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let neg = values.iter().filter(|&&v| v < -ZERO_CUT * scale).count();
    let zero = values.iter().filter(|&&v| v.abs() <= ZERO_CUT * scale).count();
    (neg, zero)
}

/// Largest closed-string level `⌊(n−1)/2⌋`.
pub fn max_closed_level(n: usize) -> usize {
    (n.max(1) - 1) / 2
}

/// `k = ⌊(n+1)/2⌋ − p`.
pub fn closed_turning(n: usize, p: usize) -> Result<usize> {
    if n == 0 || p > max_closed_level(n) {
        return Err(Error::BadInput(format!("closed level p={p} out of range for n={n}")));
    }
    Ok((n + 1) / 2 - p)
}

fn check_closed(k: usize, n: usize) -> Result<()> {
    if n == 0 || k == 0 || k > (n + 1) / 2 {
        return Err(Error::BadInput(format!("need n ≥ 1 and 1 ≤ k ≤ ⌊(n+1)/2⌋, got k={k}, n={n}")));
    }
    Ok(())
}

pub fn closed_angle(k: usize, n: usize) -> f64 {
    2.0 * PI * k as f64 / (n + 1) as f64
}

fn check_orthonormal(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::BadInput("frame vectors must share a dimension ≥ 2".into()));
    }
    if (a.norm() - 1.0).abs() > 1e-12 || (b.norm() - 1.0).abs() > 1e-12 || a.dot(b).abs() > 1e-12 {
        return Err(Error::BadInput("frame vectors must be orthonormal".into()));
    }
    Ok(())
}

fn unit_sphere(ambient: usize) -> Result<Arc<ConvexBody>> {
    Ok(Arc::new(ConvexBody::unit_sphere(ambient - 1)?))
}

fn circle_point(e1: &DVector<f64>, e2: &DVector<f64>, angle: f64) -> DVector<f64> {
    e1 * angle.cos() + e2 * angle.sin()
}

/// Tangent frame of a planar polygon: the in-plane unit tangent first, then a
/// fixed orthonormal basis of the plane's orthogonal complement.
fn planar_frame(e1: &DVector<f64>, e2: &DVector<f64>, angles: &[f64]) -> Frame {
    let dim = e1.len();
    let mut plane = DMatrix::zeros(dim, 2);
    plane.set_column(0, e1);
    plane.set_column(1, e2);
    let complement = orthogonal_complement(&plane);
    let bases = angles
        .iter()
        .map(|&t| {
            let mut b = DMatrix::zeros(dim, dim - 1);
            b.set_column(0, &(-e1 * t.sin() + e2 * t.cos()));
            for c in 0..complement.ncols() {
                b.set_column(c + 1, &complement.column(c));
            }
            b
        })
        .collect();
    Frame { bases }
}

fn orthogonal_complement(plane: &DMatrix<f64>) -> DMatrix<f64> {
    let first = householder_complement(&plane.column(0).into_owned());
    let second = first.transpose() * plane.column(1);
    let inner = householder_complement(&second);
    first * inner
}

/// `x_j = cos(jψ_k)·A + sin(jψ_k)·a`, `j = 1..n`, on the unit sphere.
pub fn closed_trajectory(anchor: &DVector<f64>, a: &DVector<f64>, k: usize, n: usize) -> Result<Configuration> {
    check_closed(k, n)?;
    check_orthonormal(anchor, a)?;
    let psi = closed_angle(k, n);
    let points = (1..=n).map(|j| circle_point(anchor, a, j as f64 * psi)).collect();
    Configuration::closed_string(unit_sphere(anchor.len())?, anchor.clone(), points)
}

pub fn closed_critical_value(k: usize, n: usize) -> Result<f64> {
    check_closed(k, n)?;
    Ok(-2.0 * (n + 1) as f64 * (PI * k as f64 / (n + 1) as f64).sin())
}

/// Eigenvalues `2[cos(πs/(n+1)) − cos ψ_k]`, `s = 1..n`, with eigenvectors
/// `v_{j,s} = sin(πjs/(n+1))`.
pub fn q_form_spectrum(k: usize, n: usize) -> Result<SpectrumRecord> {
    check_closed(k, n)?;
    let psi = closed_angle(k, n);
    let np1 = (n + 1) as f64;
    let q_eigenvalues: Vec<f64> = (1..=n).map(|s| 2.0 * ((PI * s as f64 / np1).cos() - psi.cos())).collect();
    let q_eigenvectors = (1..=n).map(|s| (1..=n).map(|j| (PI * (j * s) as f64 / np1).sin()).collect()).collect();
    let (q_index, q_nullity) = closed_q_signs(k, n);
    Ok(SpectrumRecord {
        kind: "closed-string".into(),
        m: 1,
        n,
        level: (n + 1) / 2 - k,
        turning: k,
        angle: psi,
        critical_value: closed_critical_value(k, n)?,
        q_eigenvalues,
        q_eigenvectors,
        q_index,
        q_nullity,
        hessian_eigenvalues: Vec::new(),
        index: 0,
        nullity: 0,
    })
}

/// Exact sign counts of the `Q_ψ` spectrum: `λ_s < 0 ⇔ s > 2k`, `λ_s = 0 ⇔ s = 2k`.
fn closed_q_signs(k: usize, n: usize) -> (usize, usize) {
    if 2 * k <= n {
        (n - 2 * k, 1)
    } else {
        (0, 0)
    }
}

/// The dense `Q_ψ` matrix for the closed-string problem.
pub fn q_matrix(k: usize, n: usize) -> Result<DMatrix<f64>> {
    check_closed(k, n)?;
    let c = closed_angle(k, n).cos();
    Ok(DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => -2.0 * c,
        1 => 1.0,
        _ => 0.0,
    }))
}

/// Closed-form Hessian of the negative length at `closed_trajectory(e₁, e₂, k, n)`
/// on `Sᵐ`, in the oracle frame.
pub fn full_hessian_closed(k: usize, n: usize, m: usize) -> Result<OracleHessian> {
    check_closed(k, n)?;
    if m < 2 {
        return Err(Error::BadInput("the closed-form Hessian needs m ≥ 2".into()));
    }
    let psi = closed_angle(k, n);
    let half = (psi / 2.0).sin();
    let np1 = (n + 1) as f64;
    // In plane: (sin(ψ/2)/2)·tridiag(−1, 2, −1).
    let in_plane = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => half,
        1 => -half / 2.0,
        _ => 0.0,
    });
    let out = q_matrix(k, n)? / (2.0 * half);
    let in_plane_eigenvalues: Vec<f64> =
        (1..=n).map(|s| 2.0 * half * (PI * s as f64 / (2.0 * np1)).sin().powi(2)).collect();
    let out_of_plane_eigenvalues: Vec<f64> = (1..=n).map(|s| ((PI * s as f64 / np1).cos() - psi.cos()) / half).collect();
    let (qi, qn) = closed_q_signs(k, n);
    let e1 = DVector::from_fn(m + 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let e2 = DVector::from_fn(m + 1, |i, _| if i == 1 { 1.0 } else { 0.0 });
    let angles: Vec<f64> = (1..=n).map(|j| j as f64 * psi).collect();
    Ok(OracleHessian {
        matrix: assemble(&in_plane, &out, m),
        frame: planar_frame(&e1, &e2, &angles),
        in_plane_eigenvalues,
        out_of_plane_eigenvalues,
        index: (m - 1) * qi,
        nullity: (m - 1) * qn,
    })
}

fn assemble(in_plane: &DMatrix<f64>, out: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let n = in_plane.nrows();
    let mut h = DMatrix::zeros(n * m, n * m);
    for j in 0..n {
        for l in 0..n {
            h[(j * m, l * m)] = in_plane[(j, l)];
            for a in 1..m {
                h[(j * m + a, l * m + a)] = out[(j, l)];
            }
        }
    }
    h
}

/// Full spectrum record of a closed-string level on `Sᵐ`.
pub fn closed_spectrum(m: usize, n: usize, p: usize) -> Result<SpectrumRecord> {
    let k = closed_turning(n, p)?;
    let mut record = q_form_spectrum(k, n)?;
    let h = full_hessian_closed(k, n, m)?;
    record.m = m;
    record.hessian_eigenvalues = h.eigenvalues(m);
    record.index = h.index;
    record.nullity = h.nullity;
    Ok(record)
}

/// Largest periodic level `(n−3)/2` (odd `n ≥ 3`).
pub fn max_periodic_level(n: usize) -> Result<usize> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::BadInput(format!("periodic sphere families need odd n ≥ 3, got {n}")));
    }
    Ok((n - 3) / 2)
}

fn periodic_turning(n: usize, p: usize) -> Result<usize> {
    if p > max_periodic_level(n)? {
        return Err(Error::BadInput(format!("periodic level p={p} out of range for n={n}")));
    }
    Ok((n - 1) / 2 - p)
}

/// `α_p = (2π/n)((n−1)/2 − p)`.
pub fn periodic_angle(n: usize, p: usize) -> Result<f64> {
    Ok(2.0 * PI * periodic_turning(n, p)? as f64 / n as f64)
}

/// Regular `n`-gon (or star polygon) of turning angle `α_p` in the plane of
/// the orthonormal pair `(e₁, e₂)`, starting at `e₁`.
pub fn periodic_family(n: usize, p: usize, e1: &DVector<f64>, e2: &DVector<f64>) -> Result<Configuration> {
    let alpha = periodic_angle(n, p)?;
    check_orthonormal(e1, e2)?;
    let points = (0..n).map(|j| circle_point(e1, e2, j as f64 * alpha)).collect();
    Configuration::cyclic(unit_sphere(e1.len())?, points)
}

pub fn periodic_critical_value(n: usize, p: usize) -> Result<f64> {
    Ok(-2.0 * n as f64 * (periodic_angle(n, p)? / 2.0).sin())
}

/// Closed-form Hessian at `periodic_family(n, p, e₁, e₂)` on `Sᵐ`.
pub fn full_hessian_periodic(n: usize, p: usize, m: usize) -> Result<OracleHessian> {
    let q = periodic_turning(n, p)?;
    if m < 2 {
        return Err(Error::BadInput("the closed-form Hessian needs m ≥ 2".into()));
    }
    let alpha = periodic_angle(n, p)?;
    let half = (alpha / 2.0).sin();
    let cyc = |i: usize, j: usize| {
        let d = i.abs_diff(j);
        d == 1 || d == n - 1
    };
    let in_plane = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            half
        } else if cyc(i, j) {
            -half / 2.0
        } else {
            0.0
        }
    });
    let out = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -2.0 * alpha.cos()
        } else if cyc(i, j) {
            1.0
        } else {
            0.0
        }
    }) / (2.0 * half);
    let theta = |s: usize| 2.0 * PI * s as f64 / n as f64;
    let in_plane_eigenvalues = (0..n).map(|s| half / 2.0 * (2.0 - 2.0 * theta(s).cos())).collect();
    let out_of_plane_eigenvalues = (0..n).map(|s| (theta(s).cos() - alpha.cos()) / half).collect();
    // cos(2πs/n) < cos α ⇔ min(s, n−s) > q; equality at min(s, n−s) = q.
    let neg = (0..n).filter(|&s| s.min(n - s) > q).count();
    let zero = (0..n).filter(|&s| s.min(n - s) == q).count();
    let e1 = DVector::from_fn(m + 1, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let e2 = DVector::from_fn(m + 1, |i, _| if i == 1 { 1.0 } else { 0.0 });
    let angles: Vec<f64> = (0..n).map(|j| j as f64 * alpha).collect();
    Ok(OracleHessian {
        matrix: assemble(&in_plane, &out, m),
        frame: planar_frame(&e1, &e2, &angles),
        in_plane_eigenvalues,
        out_of_plane_eigenvalues,
        index: (m - 1) * neg,
        nullity: 1 + (m - 1) * zero,
    })
}

/// Full spectrum record of a periodic level on `Sᵐ`.
pub fn periodic_spectrum(m: usize, n: usize, p: usize) -> Result<SpectrumRecord> {
    let h = full_hessian_periodic(n, p, m)?;
    let alpha = periodic_angle(n, p)?;
    let (q_index, q_nullity) = count_signs(&h.out_of_plane_eigenvalues);
    Ok(SpectrumRecord {
        kind: "periodic".into(),
        m,
        n,
        level: p,
        turning: periodic_turning(n, p)?,
        angle: alpha,
        critical_value: periodic_critical_value(n, p)?,
        q_eigenvalues: h.out_of_plane_eigenvalues.iter().map(|v| v * 2.0 * (alpha / 2.0).sin()).collect(),
        q_eigenvectors: (0..n).map(|s| (0..n).map(|j| (2.0 * PI * (j * s) as f64 / n as f64).cos()).collect()).collect(),
        q_index,
        q_nullity,
        hessian_eigenvalues: h.eigenvalues(m),
        index: h.index,
        nullity: h.nullity,
    })
}

/// Coefficients (degrees `0..m`) of `(1+α)^{p(m−1)}` in `Z₂[α]/(αᵐ)`.
pub fn sw_class_negative_bundle(p: usize, m: usize) -> Vec<u8> {
    let mut coeffs = vec![0u8; m.max(1)];
    coeffs[0] = 1;
    for _ in 0..p * m.saturating_sub(1) {
        for d in (1..coeffs.len()).rev() {
            coeffs[d] ^= coeffs[d - 1];
        }
    }
    coeffs
}

/// `w₁ ≠ 0`, i.e. the negative bundle of `V_p` is non-orientable.
pub fn first_sw_nonzero(p: usize, m: usize) -> bool {
    sw_class_negative_bundle(p, m).get(1).copied().unwrap_or(0) == 1
}

/// Dense eigenvalues of a symmetric matrix, ascending.
pub fn sorted_eigenvalues(matrix: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(matrix.clone()).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
