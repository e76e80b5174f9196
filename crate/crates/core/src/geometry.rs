//! Coordinates, the reference cube and cone fields.
//!
//! Ambient vectors are always laid out as `(stable, central, unstable)`, so a
//! point of `R^n` with `n = s + 1 + u` stores the stable block in
//! `0..s`, the central coordinate at index `s` and the unstable block in
//! `s+1..n`. Norms are Euclidean; a cone inequality such as
//! `|v^c + v^u| <= alpha |v^s|` uses the Euclidean norm of the concatenated
//! `(v^c, v^u)` block.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack used when deciding whether a coordinate sits on a face.
pub const FACE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub s: usize,
    pub u: usize,
}

impl Dims {
    pub fn new(s: usize, u: usize) -> Result<Self> {
        if s == 0 || u == 0 {
            return Err(Error::InvalidParameter(format!(
                "stable and unstable dimensions must be >= 1 (got s={s}, u={u})"
            )));
        }
        Ok(Self { s, u })
    }

    pub fn n(&self) -> usize {
        self.s + 1 + self.u
    }

    pub fn stable(&self) -> Range<usize> {
        0..self.s
    }

    pub fn central(&self) -> usize {
        self.s
    }

    pub fn unstable(&self) -> Range<usize> {
        self.s + 1..self.n()
    }

    /// Euclidean diameter `2 sqrt(u)` of the unstable cube `[-1,1]^u`.
    pub fn unstable_diameter(&self) -> f64 {
        2.0 * (self.u as f64).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub xs: Vec<f64>,
    pub xc: f64,
    pub xu: Vec<f64>,
}

impl AmbientPoint {
    pub fn new(xs: Vec<f64>, xc: f64, xu: Vec<f64>) -> Self {
        Self { xs, xc, xu }
    }

    pub fn origin(dims: Dims) -> Self {
        Self::new(vec![0.0; dims.s], 0.0, vec![0.0; dims.u])
    }

    pub fn dims(&self) -> Dims {
        Dims { s: self.xs.len(), u: self.xu.len() }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.xs.len() + 1 + self.xu.len());
        for (i, x) in self.xs.iter().enumerate() {
            v[i] = *x;
        }
        v[self.xs.len()] = self.xc;
        for (j, x) in self.xu.iter().enumerate() {
            v[self.xs.len() + 1 + j] = *x;
        }
        v
    }

    pub fn from_vector(v: &DVector<f64>, dims: Dims) -> Result<Self> {
        check_len(v.len(), dims.n())?;
        Ok(Self {
            xs: v.rows(0, dims.s).iter().copied().collect(),
            xc: v[dims.s],
            xu: v.rows(dims.s + 1, dims.u).iter().copied().collect(),
        })
    }

    pub fn distance(&self, other: &AmbientPoint) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }
}

/// `[-1,1]^s x [-delta, delta] x [-1,1]^u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCube {
    pub delta: f64,
}

impl ReferenceCube {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("cube half-width delta must be > 0, got {delta}")));
        }
        Ok(Self { delta })
    }

    /// Largest amount by which `p` sticks out of the closed cube (0 inside).
    pub fn excursion(&self, p: &AmbientPoint) -> f64 {
        let over = |x: f64, h: f64| (x.abs() - h).max(0.0);
        let mut e = over(p.xc, self.delta);
        for x in p.xs.iter().chain(p.xu.iter()) {
            e = e.max(over(*x, 1.0));
        }
        e
    }

    pub fn contains(&self, p: &AmbientPoint, tol: f64) -> bool {
        self.excursion(p) <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub alpha: f64,
    pub alpha_prime: f64,
}

impl ConeParams {
    pub fn new(alpha: f64, alpha_prime: f64) -> Result<Self> {
        if !(0.0 < alpha_prime && alpha_prime < alpha && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cone parameters need 0 < alpha' < alpha < 1 (got alpha={alpha}, alpha'={alpha_prime})"
            )));
        }
        Ok(Self { alpha, alpha_prime })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConeKind {
    S,
    U,
    UU,
}

impl ConeKind {
    /// Index blocks `(small, large)` such that the cone is `|v_small| <= alpha |v_large|`.
    pub fn blocks(&self, dims: Dims) -> (Range<usize>, Range<usize>) {
        let n = dims.n();
        match self {
            ConeKind::S => (dims.s..n, 0..dims.s),
            ConeKind::U => (0..dims.s, dims.s..n),
            ConeKind::UU => (0..dims.s + 1, dims.s + 1..n),
        }
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn block_norm(v: &[f64], r: Range<usize>) -> f64 {
    v[r].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `|v_small| / |v_large|` for the given cone; `inf` when the large block vanishes
/// and the small one does not, `0` for the zero vector.
pub fn cone_ratio(v: &[f64], dims: Dims, kind: ConeKind) -> Result<f64> {
    check_len(v.len(), dims.n())?;
    let (small, large) = kind.blocks(dims);
    let a = block_norm(v, small);
    let b = block_norm(v, large);
    Ok(if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    })
}

pub fn in_cone(v: &[f64], dims: Dims, kind: ConeKind, alpha: f64) -> Result<bool> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("cone opening must lie in (0,1), got {alpha}")));
    }
    check_len(v.len(), dims.n())?;
    let (small, large) = kind.blocks(dims);
    Ok(block_norm(v, small) <= alpha * block_norm(v, large))
}

/// Faces of the cube touched by a point. An empty set means interior.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryParts {
    pub d_s: bool,
    pub d_c: bool,
    pub d_uu: bool,
}

impl BoundaryParts {
    pub fn is_interior(&self) -> bool {
        !(self.d_s || self.d_c || self.d_uu)
    }

    /// `d^u = d^c ∪ d^uu`.
    pub fn touches_unstable(&self) -> bool {
        self.d_c || self.d_uu
    }
}

pub fn boundary_part(p: &AmbientPoint, cube: &ReferenceCube) -> Result<BoundaryParts> {
    if cube.excursion(p) > FACE_TOL {
        return Err(Error::OutsideCube);
    }
    let on = |x: f64, h: f64| x.abs() >= h - FACE_TOL;
    Ok(BoundaryParts {
        d_s: p.xs.iter().any(|x| on(*x, 1.0)),
        d_c: on(p.xc, cube.delta),
        d_uu: p.xu.iter().any(|x| on(*x, 1.0)),
    })
}

/// Operator 2-norm.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Smallest singular value of a square block.
pub fn min_singular(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Bound on how a linear map acts on the cone `|v_small| <= alpha |v_large|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeImage {
    /// Every image vector satisfies `|w_small| <= alpha_image |w_large|`.
    pub alpha_image: f64,
    /// Every vector of the cone is stretched by at least this factor.
    pub expansion: f64,
}

/// Sufficient bound for the image of a cone under `j`, valid for every matrix
/// within operator distance `inflate` of `j`. `None` when the large block can
/// collapse, in which case nothing is certified.
pub fn cone_image_bound(
    j: &DMatrix<f64>,
    small: Range<usize>,
    large: Range<usize>,
    alpha: f64,
    inflate: f64,
) -> Option<ConeImage> {
    let ns = small.len();
    let nl = large.len();
    let take = |rows: &Range<usize>, cols: &Range<usize>| {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| j[(rows.start + r, cols.start + c)])
    };
    let a_ss = op_norm(&take(&small, &small)) + inflate;
    let a_sl = op_norm(&take(&small, &large)) + inflate;
    let a_ls = op_norm(&take(&large, &small)) + inflate;
    let sig = min_singular(&take(&large, &large)) - inflate;
    let den = sig - alpha * a_ls;
    if ns == 0 || nl == 0 || den <= 0.0 {
        return None;
    }
    Some(ConeImage {
        alpha_image: (alpha * a_ss + a_sl) / den,
        expansion: den / (1.0 + alpha * alpha).sqrt(),
    })
}

/// Smallest principal angle between `v` and the column span of `basis`.
pub fn angle_to_span(v: &DVector<f64>, basis: &DMatrix<f64>) -> f64 {
    let nv = v.norm();
    if nv == 0.0 || basis.ncols() == 0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let q = basis.clone().qr().q();
    let proj = &q * (q.transpose() * v);
    let perp = v - &proj;
    perp.norm().atan2(proj.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d11() -> Dims {
        Dims::new(1, 1).unwrap()
    }

    #[test]
    fn cone_examples() {
        assert!(in_cone(&[1.0, 0.0, 0.0], d11(), ConeKind::S, 0.1).unwrap());
        assert!(!in_cone(&[0.0, 1.0, 1.0], d11(), ConeKind::S, 0.9).unwrap());
        // sqrt(0.05^2 + 0.2^2) = 0.2062 <= 0.25
        assert!(in_cone(&[0.05, 0.2, 1.0], d11(), ConeKind::UU, 0.25).unwrap());
        assert!(!in_cone(&[0.05, 0.2, 1.0], d11(), ConeKind::UU, 0.2).unwrap());
    }

    #[test]
    fn cone_dimension_mismatch() {
        let err = in_cone(&[1.0, 0.0], d11(), ConeKind::U, 0.5).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn boundary_examples() {
        let cube = ReferenceCube::new(0.125).unwrap();
        let p = AmbientPoint::new(vec![0.0], 0.0, vec![0.0]);
        assert!(boundary_part(&p, &cube).unwrap().is_interior());
        let p = AmbientPoint::new(vec![0.0], 0.125, vec![0.0]);
        assert_eq!(boundary_part(&p, &cube).unwrap(), BoundaryParts { d_c: true, ..Default::default() });
        let p = AmbientPoint::new(vec![1.0], 0.125, vec![0.0]);
        assert_eq!(
            boundary_part(&p, &cube).unwrap(),
            BoundaryParts { d_s: true, d_c: true, d_uu: false }
        );
        let p = AmbientPoint::new(vec![0.0], 0.2, vec![0.0]);
        assert!(matches!(boundary_part(&p, &cube), Err(Error::OutsideCube)));
    }

    #[test]
    fn cone_image_of_block_diagonal() {
        // diag(1/4, 1.2, 3): uu-cone factor max(1/4, 1.2) / 3 = 0.4
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 1.2, 3.0]));
        let (sm, lg) = ConeKind::UU.blocks(d11());
        let img = cone_image_bound(&j, sm, lg, 0.2, 0.0).unwrap();
        assert!((img.alpha_image - 0.08).abs() < 1e-15);
        assert!(img.expansion > 1.0);
    }

    #[test]
    fn angle_to_span_basic() {
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 1e-3, 0.0, 0.0, 0.0, 1.0]);
        assert!(angle_to_span(&v, &b) < 2e-3);
        let b = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!((angle_to_span(&v, &b) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
