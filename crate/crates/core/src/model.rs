//! The piecewise-affine family `f_{lambda,mu}`.
//!
//! The base horseshoe `F` acts on `(x^s, x^u)` by `x^s -> S_i x^s + c_i`,
//! `x^u -> U_i x^u + d_i` on the two branch domains; the central coordinate is
//! multiplied by `lambda` on branch A and by `lambda` followed by a shift `-mu`
//! on branch B. `P = 0` is fixed by branch A and `Q = (a^s, mu/(lambda-1), a^u)`
//! by branch B.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::disks::{SDisk, UUDisk};
use crate::error::{Error, Result};
use crate::geometry::{min_singular, op_norm, AmbientPoint, Dims, ReferenceCube};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    A,
    B,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::A, Branch::B];

    pub fn other(self) -> Branch {
        match self {
            Branch::A => Branch::B,
            Branch::B => Branch::A,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Branch::A => 'A',
            Branch::B => 'B',
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

pub fn word_string(word: &[Branch]) -> String {
    word.iter().map(|b| b.letter()).collect()
}

/// Axis-aligned closed box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl UBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Self {
        Self { min, max }
    }

    pub fn cube(dim: usize) -> Self {
        Self::new(vec![-1.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_tol(x, 0.0)
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.min.iter().zip(&self.max)).all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
    }

    pub fn intersects(&self, other: &UBox) -> bool {
        self.min
            .iter()
            .zip(&self.max)
            .zip(other.min.iter().zip(&other.max))
            .all(|((a0, a1), (b0, b1))| a0 <= b1 && b0 <= a1)
    }

    /// Largest absolute coordinate reached by the box.
    pub fn max_abs(&self) -> f64 {
        self.min.iter().chain(&self.max).map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// Image box of `m * box + offset` (exact for axis-aligned boxes).
pub(crate) fn affine_box_image(m: &DMatrix<f64>, offset: &DVector<f64>, b: &UBox) -> UBox {
    let n = m.nrows();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for r in 0..n {
        let mut c = offset[r];
        let mut rad = 0.0;
        for k in 0..m.ncols() {
            let mid = 0.5 * (b.min[k] + b.max[k]);
            let half = 0.5 * (b.max[k] - b.min[k]);
            c += m[(r, k)] * mid;
            rad += m[(r, k)].abs() * half;
        }
        lo[r] = c - rad;
        hi[r] = c + rad;
    }
    UBox::new(lo, hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineBranch {
    pub stable: DMatrix<f64>,
    pub stable_offset: DVector<f64>,
    pub unstable: DMatrix<f64>,
    pub unstable_offset: DVector<f64>,
    pub domain: UBox,
}

impl AffineBranch {
    pub fn map_stable(&self, xs: &[f64]) -> Vec<f64> {
        (&self.stable * DVector::from_column_slice(xs) + &self.stable_offset).iter().copied().collect()
    }

    pub fn map_unstable(&self, xu: &[f64]) -> Vec<f64> {
        (&self.unstable * DVector::from_column_slice(xu) + &self.unstable_offset).iter().copied().collect()
    }

    /// `U^{-1}(xu - d)`; `None` when `U` is singular.
    pub fn unmap_unstable(&self, xu: &[f64]) -> Option<Vec<f64>> {
        let rhs = DVector::from_column_slice(xu) - &self.unstable_offset;
        self.unstable.clone().lu().solve(&rhs).map(|v| v.iter().copied().collect())
    }

    pub fn unmap_stable(&self, xs: &[f64]) -> Option<Vec<f64>> {
        let rhs = DVector::from_column_slice(xs) - &self.stable_offset;
        self.stable.clone().lu().solve(&rhs).map(|v| v.iter().copied().collect())
    }

    pub fn stable_norm(&self) -> f64 {
        op_norm(&self.stable)
    }

    /// `|U^{-1}| = 1 / sigma_min(U)`.
    pub fn unstable_inverse_norm(&self) -> f64 {
        1.0 / min_singular(&self.unstable)
    }
}

/// Base horseshoe `F` with its two affine branches.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineHorseshoe {
    pub dims: Dims,
    pub branch_a: AffineBranch,
    pub branch_b: AffineBranch,
    /// Stable coordinates of the fixed point `q` of branch B.
    pub a_s: Vec<f64>,
    /// Unstable coordinates of `q`.
    pub a_u: Vec<f64>,
}

impl AffineHorseshoe {
    pub fn new(dims: Dims, branch_a: AffineBranch, branch_b: AffineBranch) -> Result<Self> {
        let shape_ok = |b: &AffineBranch| {
            b.stable.shape() == (dims.s, dims.s)
                && b.stable_offset.len() == dims.s
                && b.unstable.shape() == (dims.u, dims.u)
                && b.unstable_offset.len() == dims.u
                && b.domain.dim() == dims.u
        };
        if !shape_ok(&branch_a) || !shape_ok(&branch_b) {
            return Err(Error::InvalidParameter("branch matrices/offsets/domains do not match (s, u)".into()));
        }
        let fixed = |m: &DMatrix<f64>, c: &DVector<f64>| -> Result<Vec<f64>> {
            let id = DMatrix::<f64>::identity(m.nrows(), m.ncols());
            (id - m)
                .lu()
                .solve(c)
                .map(|v| v.iter().copied().collect())
                .ok_or_else(|| Error::InvalidParameter("branch B has no isolated fixed point".into()))
        };
        let a_s = fixed(&branch_b.stable, &branch_b.stable_offset)?;
        let a_u = fixed(&branch_b.unstable, &branch_b.unstable_offset)?;
        Ok(Self { dims, branch_a, branch_b, a_s, a_u })
    }

    pub fn branch(&self, b: Branch) -> &AffineBranch {
        match b {
            Branch::A => &self.branch_a,
            Branch::B => &self.branch_b,
        }
    }

    pub fn branch_of(&self, xu: &[f64]) -> Option<Branch> {
        Branch::BOTH.into_iter().find(|b| self.branch(*b).domain.contains(xu))
    }

    /// Unstable point whose forward orbit under the base horseshoe follows
    /// `word`: inverse branches applied to `seed`, last letter first.
    pub fn coded_unstable_point(&self, word: &[Branch], seed: &[f64]) -> Vec<f64> {
        let mut x = seed.to_vec();
        for b in word.iter().rev() {
            x = self.branch(*b).unmap_unstable(&x).expect("unstable branch matrices are invertible");
        }
        x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlenderModel {
    pub horseshoe: AffineHorseshoe,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
}

impl BlenderModel {
    /// Validated constructor.
    pub fn new(horseshoe: AffineHorseshoe, lambda: f64, mu: f64, delta: f64) -> Result<Self> {
        let m = Self::new_unchecked(horseshoe, lambda, mu, delta);
        let v = m.audit();
        if v.is_empty() {
            Ok(m)
        } else {
            Err(Error::ModelInvariant(v))
        }
    }

    /// Builds the model without checking any invariant. Used to feed the
    /// certifier with instances that are expected to fail.
    pub fn new_unchecked(horseshoe: AffineHorseshoe, lambda: f64, mu: f64, delta: f64) -> Self {
        Self { horseshoe, lambda, mu, delta }
    }

    /// Every violated invariant, in words. Empty when the model is admissible.
    pub fn audit(&self) -> Vec<String> {
        let mut v = Vec::new();
        let h = &self.horseshoe;
        for b in Branch::BOTH {
            let br = h.branch(b);
            if br.stable_norm() >= 0.5 {
                v.push(format!("|S_{b}| = {} is not < 1/2", br.stable_norm()));
            }
            if br.unstable_inverse_norm() >= 0.5 {
                v.push(format!("|U_{b}^-1| = {} is not < 1/2", br.unstable_inverse_norm()));
            }
            if !is_monomial(&br.unstable) {
                v.push(format!("U_{b} does not map axis-aligned boxes to axis-aligned boxes"));
            }
            let img = affine_box_image(&br.unstable, &br.unstable_offset, &br.domain);
            let onto = img.min.iter().all(|x| (x + 1.0).abs() < 1e-12) && img.max.iter().all(|x| (x - 1.0).abs() < 1e-12);
            if !onto {
                v.push(format!("U_{b} does not map its domain onto [-1,1]^u"));
            }
            if !UBox::cube(h.dims.u).contains(&br.domain.min) || !UBox::cube(h.dims.u).contains(&br.domain.max) {
                v.push(format!("domain of branch {b} is not inside [-1,1]^u"));
            }
        }
        if h.branch_a.domain.intersects(&h.branch_b.domain) {
            v.push("branch domains intersect".into());
        }
        let p0 = vec![0.0; h.dims.u];
        if h.branch_a.stable_offset.norm() != 0.0 || h.branch_a.unstable_offset.norm() != 0.0 {
            v.push("p = 0 is not fixed by branch A".into());
        }
        if !h.branch_a.domain.contains(&p0) {
            v.push("p = 0 is not in the domain of branch A".into());
        }
        if !h.branch_b.domain.contains(&h.a_u) {
            v.push("a_u is not in the domain of branch B".into());
        }
        if !(self.lambda > 1.0 && self.lambda < 2.0) {
            v.push(format!("lambda = {} is not in (1, 2)", self.lambda));
        }
        if !(self.delta > 0.0) {
            v.push(format!("delta = {} is not > 0", self.delta));
        }
        let bound = (self.lambda - 1.0) * self.delta;
        if !(self.mu > 0.0 && self.mu < bound) {
            v.push(format!("mu = {} is not in (0, (lambda-1) delta) = (0, {bound})", self.mu));
        }
        v
    }

    pub fn dims(&self) -> Dims {
        self.horseshoe.dims
    }

    pub fn cube(&self) -> ReferenceCube {
        ReferenceCube { delta: self.delta }
    }

    pub fn central_shift(&self, b: Branch) -> f64 {
        match b {
            Branch::A => 0.0,
            Branch::B => self.mu,
        }
    }

    /// Central coordinate `mu/(lambda-1)` of `Q`.
    pub fn q_central(&self) -> f64 {
        self.mu / (self.lambda - 1.0)
    }

    pub fn p(&self) -> AmbientPoint {
        AmbientPoint::origin(self.dims())
    }

    pub fn q(&self) -> AmbientPoint {
        AmbientPoint::new(self.horseshoe.a_s.clone(), self.q_central(), self.horseshoe.a_u.clone())
    }

    pub fn apply(&self, p: &AmbientPoint) -> Option<(AmbientPoint, Branch)> {
        let b = self.horseshoe.branch_of(&p.xu)?;
        Some((self.map_branch(b, p), b))
    }

    pub fn apply_branch(&self, b: Branch, p: &AmbientPoint) -> Result<AmbientPoint> {
        self.check_dims(p)?;
        if !self.horseshoe.branch(b).domain.contains(&p.xu) {
            return Err(Error::OutsideBranch { branch: b, what: "domain" });
        }
        Ok(self.map_branch(b, p))
    }

    pub fn inverse_branch(&self, b: Branch, p: &AmbientPoint) -> Result<AmbientPoint> {
        self.check_dims(p)?;
        if !UBox::cube(self.dims().u).contains_tol(&p.xu, 1e-14) {
            return Err(Error::OutsideBranch { branch: b, what: "image" });
        }
        let br = self.horseshoe.branch(b);
        let xs = br.unmap_stable(&p.xs).ok_or_else(|| Error::InvalidParameter("singular S".into()))?;
        let xu = br.unmap_unstable(&p.xu).ok_or_else(|| Error::InvalidParameter("singular U".into()))?;
        Ok(AmbientPoint::new(xs, (p.xc + self.central_shift(b)) / self.lambda, xu))
    }

    /// Branch map applied on the whole space (affine extension, no domain check).
    pub fn map_branch(&self, b: Branch, p: &AmbientPoint) -> AmbientPoint {
        let br = self.horseshoe.branch(b);
        AmbientPoint::new(br.map_stable(&p.xs), self.lambda * p.xc - self.central_shift(b), br.map_unstable(&p.xu))
    }

    pub fn jacobian(&self, p: &AmbientPoint) -> Result<DMatrix<f64>> {
        self.check_dims(p)?;
        let b = self
            .horseshoe
            .branch_of(&p.xu)
            .ok_or(Error::OutsideBranch { branch: Branch::A, what: "domain (and of branch B)" })?;
        Ok(self.jacobian_branch(b))
    }

    /// `diag(S_i, lambda, U_i)`.
    pub fn jacobian_branch(&self, b: Branch) -> DMatrix<f64> {
        let d = self.dims();
        let br = self.horseshoe.branch(b);
        let mut j = DMatrix::zeros(d.n(), d.n());
        j.view_mut((0, 0), (d.s, d.s)).copy_from(&br.stable);
        j[(d.s, d.s)] = self.lambda;
        j.view_mut((d.s + 1, d.s + 1), (d.u, d.u)).copy_from(&br.unstable);
        j
    }

    pub fn local_manifolds(&self) -> LocalManifolds {
        let d = self.dims();
        let q = self.q();
        LocalManifolds {
            ws_p: SDisk::flat(d, 0.0, vec![0.0; d.u]),
            ws_q: SDisk::flat(d, q.xc, q.xu.clone()),
            wuu_p: UUDisk::flat(vec![0.0; d.s], 0.0, d.u),
            wuu_q: UUDisk::flat(q.xs.clone(), q.xc, d.u),
        }
    }

    pub fn to_config(&self) -> ModelConfig {
        let d = self.dims();
        let sec = |b: &AffineBranch| BranchConfig {
            stable: row_major(&b.stable),
            stable_offset: b.stable_offset.iter().copied().collect(),
            unstable: row_major(&b.unstable),
            unstable_offset: b.unstable_offset.iter().copied().collect(),
            domain_min: b.domain.min.clone(),
            domain_max: b.domain.max.clone(),
        };
        ModelConfig {
            s: d.s,
            u: d.u,
            lambda: self.lambda,
            mu: self.mu,
            delta: self.delta,
            branch_a: sec(&self.horseshoe.branch_a),
            branch_b: sec(&self.horseshoe.branch_b),
        }
    }

    /// Same horseshoe, different central parameters; no validation.
    pub fn with_params(&self, lambda: f64, mu: f64, delta: f64) -> Self {
        Self::new_unchecked(self.horseshoe.clone(), lambda, mu, delta)
    }

    fn check_dims(&self, p: &AmbientPoint) -> Result<()> {
        let d = self.dims();
        if p.xs.len() != d.s || p.xu.len() != d.u {
            return Err(Error::DimensionMismatch { expected: d.n(), got: p.xs.len() + 1 + p.xu.len() });
        }
        Ok(())
    }
}

fn is_monomial(m: &DMatrix<f64>) -> bool {
    m.row_iter().all(|r| r.iter().filter(|x| **x != 0.0).count() == 1)
        && m.column_iter().all(|c| c.iter().filter(|x| **x != 0.0).count() == 1)
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().iter().copied().collect()
}

#[derive(Clone, Debug)]
pub struct LocalManifolds {
    pub ws_p: SDisk,
    pub ws_q: SDisk,
    pub wuu_p: UUDisk,
    pub wuu_q: UUDisk,
}

/// s = u = 1 instance: `S_A(y) = y/4`, `S_B(y) = y/4 + 5/8`, `U_A(x) = 3x` on
/// `[-1/3, 1/3]`, `U_B(x) = 4x - 5/2` on `[3/8, 7/8]`, `lambda = 1.2`,
/// `mu = 0.02`, `delta = 0.125`. Then `q = (5/6, 5/6)` and `Q = (5/6, 0.1, 5/6)`.
pub fn default_instance() -> BlenderModel {
    let dims = Dims { s: 1, u: 1 };
    let one = |x: f64| DMatrix::from_element(1, 1, x);
    let vec1 = |x: f64| DVector::from_element(1, x);
    let a = AffineBranch {
        stable: one(0.25),
        stable_offset: vec1(0.0),
        unstable: one(3.0),
        unstable_offset: vec1(0.0),
        domain: UBox::new(vec![-1.0 / 3.0], vec![1.0 / 3.0]),
    };
    let b = AffineBranch {
        stable: one(0.25),
        stable_offset: vec1(0.625),
        unstable: one(4.0),
        unstable_offset: vec1(-2.5),
        domain: UBox::new(vec![0.375], vec![0.875]),
    };
    let h = AffineHorseshoe::new(dims, a, b).expect("default horseshoe is well formed");
    BlenderModel::new(h, 1.2, 0.02, 0.125).expect("default instance satisfies its invariants")
}

/// On-disk model description (TOML). Matrices are row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub s: usize,
    pub u: usize,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub branch_a: BranchConfig,
    pub branch_b: BranchConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchConfig {
    pub stable: Vec<f64>,
    pub stable_offset: Vec<f64>,
    pub unstable: Vec<f64>,
    pub unstable_offset: Vec<f64>,
    pub domain_min: Vec<f64>,
    pub domain_max: Vec<f64>,
}

impl ModelConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model config serializes")
    }

    /// Builds the model without validating the blender invariants.
    pub fn to_model_unchecked(&self) -> Result<BlenderModel> {
        let dims = Dims::new(self.s, self.u)?;
        let branch = |c: &BranchConfig| -> Result<AffineBranch> {
            let mat = |v: &[f64], n: usize, what: &str| -> Result<DMatrix<f64>> {
                if v.len() != n * n {
                    return Err(Error::Config(format!("{what}: expected {} entries, got {}", n * n, v.len())));
                }
                Ok(DMatrix::from_row_slice(n, n, v))
            };
            let vecn = |v: &[f64], n: usize, what: &str| -> Result<DVector<f64>> {
                if v.len() != n {
                    return Err(Error::Config(format!("{what}: expected {n} entries, got {}", v.len())));
                }
                Ok(DVector::from_column_slice(v))
            };
            if c.domain_min.len() != self.u || c.domain_max.len() != self.u {
                return Err(Error::Config("domain bounds must have u entries".into()));
            }
            Ok(AffineBranch {
                stable: mat(&c.stable, self.s, "stable")?,
                stable_offset: vecn(&c.stable_offset, self.s, "stable_offset")?,
                unstable: mat(&c.unstable, self.u, "unstable")?,
                unstable_offset: vecn(&c.unstable_offset, self.u, "unstable_offset")?,
                domain: UBox::new(c.domain_min.clone(), c.domain_max.clone()),
            })
        };
        let h = AffineHorseshoe::new(dims, branch(&self.branch_a)?, branch(&self.branch_b)?)?;
        Ok(BlenderModel::new_unchecked(h, self.lambda, self.mu, self.delta))
    }

    pub fn to_model(&self) -> Result<BlenderModel> {
        let m = self.to_model_unchecked()?;
        BlenderModel::new(m.horseshoe, m.lambda, m.mu, m.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(xs: f64, xc: f64, xu: f64) -> AmbientPoint {
        AmbientPoint::new(vec![xs], xc, vec![xu])
    }

    #[test]
    fn default_instance_audit_passes() {
        let m = default_instance();
        assert!(m.audit().is_empty(), "{:?}", m.audit());
        assert!((m.horseshoe.branch_a.stable_norm() - 0.25).abs() < 1e-15);
        assert!((m.horseshoe.branch_a.unstable_inverse_norm() - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.horseshoe.branch_b.unstable_inverse_norm() - 0.25).abs() < 1e-15);
        assert!(m.mu < (m.lambda - 1.0) * m.delta);
        assert!(!m.horseshoe.branch_a.domain.intersects(&m.horseshoe.branch_b.domain));
    }

    #[test]
    fn fixed_points() {
        let m = default_instance();
        let (p, b) = m.apply(&m.p()).unwrap();
        assert_eq!(b, Branch::A);
        assert_eq!(p, m.p());
        let q = m.q();
        assert!((q.xc - 0.1).abs() < 1e-15);
        assert!((q.xs[0] - 5.0 / 6.0).abs() < 1e-15 && (q.xu[0] - 5.0 / 6.0).abs() < 1e-15);
        let (q1, b) = m.apply(&q).unwrap();
        assert_eq!(b, Branch::B);
        assert!(q1.distance(&q) < 1e-14);
        assert!(m.apply_branch(Branch::B, &q).unwrap().distance(&q) < 1e-14);
    }

    #[test]
    fn apply_and_invert_examples() {
        let m = default_instance();
        let (img, b) = m.apply(&pt(0.0, 0.05, 0.0)).unwrap();
        assert_eq!(b, Branch::A);
        assert!((img.xc - 0.06).abs() < 1e-15 && img.xs[0] == 0.0 && img.xu[0] == 0.0);
        let back = m.inverse_branch(Branch::A, &pt(0.0, 0.06, 0.0)).unwrap();
        assert!((back.xc - 0.05).abs() < 1e-15);
        assert!(m.apply(&pt(0.0, 0.0, 0.35)).is_none());
        assert!(matches!(m.apply_branch(Branch::A, &pt(0.0, 0.0, 0.5)), Err(Error::OutsideBranch { .. })));
        assert!(matches!(m.inverse_branch(Branch::A, &pt(0.0, 0.0, 1.5)), Err(Error::OutsideBranch { .. })));
    }

    #[test]
    fn round_trip_random_points() {
        let m = default_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let p = pt(rng.gen_range(-1.0..1.0), rng.gen_range(-0.125..0.125), rng.gen_range(-1.0 / 3.0..1.0 / 3.0));
            let back = m.inverse_branch(Branch::A, &m.apply_branch(Branch::A, &p).unwrap()).unwrap();
            worst = worst.max(back.distance(&p));
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn jacobian_blocks() {
        let m = default_instance();
        let jp = m.jacobian(&m.p()).unwrap();
        assert_eq!(jp, DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 1.2, 3.0])));
        let jq = m.jacobian(&m.q()).unwrap();
        assert_eq!(jq, DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 1.2, 4.0])));
        assert!((jq.determinant() - 0.25 * 1.2 * 4.0).abs() < 1e-14);
    }

    #[test]
    fn local_manifold_levels() {
        let m = default_instance();
        let lm = m.local_manifolds();
        assert_eq!(lm.ws_p.central_at(&[0.3]), 0.0);
        assert!((lm.ws_q.central_at(&[0.3]) - 0.1).abs() < 1e-15);
        assert_eq!(lm.wuu_p.eval(&[0.7]), (vec![0.0], 0.0));
    }

    #[test]
    fn invariants_rejected() {
        let m = default_instance();
        let bad = BlenderModel::new(m.horseshoe.clone(), 1.2, 0.0, 0.125);
        assert!(matches!(bad, Err(Error::ModelInvariant(_))));
        let bad = BlenderModel::new(m.horseshoe.clone(), 1.2, 0.03, 0.125);
        assert!(matches!(bad, Err(Error::ModelInvariant(_))));
        let bad = BlenderModel::new(m.horseshoe.clone(), 2.0, 0.02, 0.125);
        assert!(matches!(bad, Err(Error::ModelInvariant(_))));
    }

    #[test]
    fn config_round_trip() {
        let m = default_instance();
        let text = m.to_config().to_toml();
        let back = ModelConfig::from_toml(&text).unwrap().to_model().unwrap();
        assert_eq!(back, m);
        assert!(ModelConfig::from_toml("s = 1").is_err());
    }

    #[test]
    fn coded_point_follows_word() {
        let m = default_instance();
        let h = &m.horseshoe;
        let word = [Branch::A, Branch::B, Branch::B, Branch::A];
        let mut x = h.coded_unstable_point(&word, &[0.0]);
        for b in word {
            assert!(h.branch(b).domain.contains(&x));
            x = h.branch(b).map_unstable(&x);
        }
        assert!(x[0].abs() < 1e-12);
    }
}
