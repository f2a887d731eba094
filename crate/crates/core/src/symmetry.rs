//! Index symmetries of configurations: the reversal `T` of closed strings and
//! the dihedral group `D_n` of cyclic configurations.
//!
//! Every group element is represented by the index map it induces: the acted
//! configuration has `x'_i = x_{π(i)}` (0-based indices).

use serde::{Deserialize, Serialize};

/// Element of `D_n`: optional flip followed by a rotation.
///
/// The flip fixes `x₁` and reverses the remaining points, so `(r=0, flip)`
/// sends `(x₁,x₂,x₃)` to `(x₁,x₃,x₂)`; the rotation `r=1` sends it to
/// `(x₂,x₃,x₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DihedralElement {
    pub rotation: usize,
    pub flip: bool,
}

impl DihedralElement {
    pub const IDENTITY: Self = Self { rotation: 0, flip: false };

    pub fn new(rotation: usize, flip: bool) -> Self {
        Self { rotation, flip }
    }

    /// `π(i)`: index of the source point landing at position `i`.
    pub fn source_index(&self, i: usize, n: usize) -> usize {
        let shifted = (i + self.rotation) % n;
        if self.flip {
            (n - shifted) % n
        } else {
            shifted
        }
    }

    /// Group law matching the action: `act(g.compose(h), c) = act(g, act(h, c))`.
    pub fn compose(&self, other: &Self, n: usize) -> Self {
        // π_g(i) = s_g i + t_g; acting by g after h reads c at π_h(π_g(i)).
        let (sg, tg) = self.affine(n);
        let (sh, th) = other.affine(n);
        let s = sg * sh;
        let t = (sh * tg + th).rem_euclid(n as i64);
        Self::from_affine(s, t, n)
    }

    pub fn inverse(&self, n: usize) -> Self {
        let (s, t) = self.affine(n);
        // π^{-1}(i) = s (i − t)
        Self::from_affine(s, (-s * t).rem_euclid(n as i64), n)
    }

    fn affine(&self, n: usize) -> (i64, i64) {
        let r = (self.rotation % n) as i64;
        if self.flip {
            (-1, (-r).rem_euclid(n as i64))
        } else {
            (1, r)
        }
    }

    fn from_affine(s: i64, t: i64, n: usize) -> Self {
        let n = n as i64;
        if s == 1 {
            Self { rotation: t.rem_euclid(n) as usize, flip: false }
        } else {
            Self { rotation: (-t).rem_euclid(n) as usize, flip: true }
        }
    }

    /// All `2n` elements, rotations first.
    pub fn all(n: usize) -> Vec<Self> {
        (0..n).map(|r| Self::new(r, false)).chain((0..n).map(|r| Self::new(r, true))).collect()
    }
}

/// Symmetry group of a configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryGroup {
    /// `Z₂ = {id, T}` acting on closed strings by reversal.
    Reversal,
    /// `D_n` acting on cyclic configurations.
    Dihedral,
}

impl SymmetryGroup {
    /// Index maps of all group elements for `n` points; the identity is first.
    pub fn index_maps(&self, n: usize) -> Vec<Vec<usize>> {
        match self {
            SymmetryGroup::Reversal => vec![(0..n).collect(), (0..n).rev().collect()],
            SymmetryGroup::Dihedral => DihedralElement::all(n)
                .into_iter()
                .map(|g| (0..n).map(|i| g.source_index(i, n)).collect())
                .collect(),
        }
    }

    pub fn order(&self, n: usize) -> usize {
        match self {
            SymmetryGroup::Reversal => 2,
            SymmetryGroup::Dihedral => 2 * n,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SymmetryGroup::Reversal => "Z2",
            SymmetryGroup::Dihedral => "Dn",
        }
    }
}
