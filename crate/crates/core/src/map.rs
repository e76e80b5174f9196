//! Maps that share the branch structure of the model: the model itself and
//! its C¹-small perturbations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AmbientPoint, Dims};
use crate::model::{BlenderModel, Branch};

/// One of the two reference saddles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Saddle {
    P,
    Q,
}

impl Saddle {
    /// Branch that fixes the saddle.
    pub fn home_branch(self) -> Branch {
        match self {
            Saddle::P => Branch::A,
            Saddle::Q => Branch::B,
        }
    }

    pub fn other(self) -> Saddle {
        match self {
            Saddle::P => Saddle::Q,
            Saddle::Q => Saddle::P,
        }
    }

    /// `+1` for `P`, `-1` for `Q`: multiplies a clearance so that the side
    /// facing the other saddle is positive.
    pub fn orientation(self) -> f64 {
        match self {
            Saddle::P => 1.0,
            Saddle::Q => -1.0,
        }
    }
}

pub trait PiecewiseMap: Sync {
    /// Unperturbed model supplying the branch partition and parameters.
    fn model(&self) -> &BlenderModel;

    /// Branch formula applied without a domain check.
    fn eval_branch(&self, b: Branch, p: &AmbientPoint) -> AmbientPoint;

    fn jacobian_branch(&self, b: Branch, p: &AmbientPoint) -> DMatrix<f64>;

    /// Certified bound on the C¹ distance to `model()`.
    fn c1_distance(&self) -> f64;

    fn dims(&self) -> Dims {
        self.model().dims()
    }

    /// True when the map coincides with its model.
    fn is_affine(&self) -> bool {
        self.c1_distance() == 0.0
    }

    fn apply(&self, p: &AmbientPoint) -> Option<(AmbientPoint, Branch)> {
        let b = self.model().horseshoe.branch_of(&p.xu)?;
        Some((self.eval_branch(b, p), b))
    }

    /// Continuation of a reference saddle by Newton's method.
    fn saddle(&self, which: Saddle) -> Result<AmbientPoint> {
        let m = self.model();
        let start = match which {
            Saddle::P => m.p(),
            Saddle::Q => m.q(),
        };
        if self.is_affine() {
            return Ok(start);
        }
        newton_fixed_point(self, which.home_branch(), start, 20)
    }
}

impl PiecewiseMap for BlenderModel {
    fn model(&self) -> &BlenderModel {
        self
    }

    fn eval_branch(&self, b: Branch, p: &AmbientPoint) -> AmbientPoint {
        self.map_branch(b, p)
    }

    fn jacobian_branch(&self, b: Branch, _p: &AmbientPoint) -> DMatrix<f64> {
        BlenderModel::jacobian_branch(self, b)
    }

    fn c1_distance(&self) -> f64 {
        0.0
    }
}

/// Solves `f_b(x) = x` starting from `x0`.
pub fn newton_fixed_point<M: PiecewiseMap + ?Sized>(
    map: &M,
    b: Branch,
    x0: AmbientPoint,
    max_iter: usize,
) -> Result<AmbientPoint> {
    let dims = map.dims();
    let n = dims.n();
    let mut x = x0;
    for _ in 0..max_iter {
        let fx = map.eval_branch(b, &x);
        let r = fx.to_vector() - x.to_vector();
        if r.amax() < 1e-15 {
            return Ok(x);
        }
        let a = map.jacobian_branch(b, &x) - DMatrix::<f64>::identity(n, n);
        let step = a
            .lu()
            .solve(&(-r))
            .ok_or_else(|| Error::NoConvergence(format!("singular Newton step for branch {b} saddle")))?;
        x = AmbientPoint::from_vector(&(x.to_vector() + step), dims)?;
    }
    let res = map.eval_branch(b, &x).distance(&x);
    if res < 1e-13 {
        Ok(x)
    } else {
        Err(Error::NoConvergence(format!("branch {b} fixed point: residual {res:e} after {max_iter} Newton steps")))
    }
}

/// The unique fixed point of the composition along `word` (first letter
/// applied first) for the affine model.
pub fn periodic_point(m: &BlenderModel, word: &[Branch]) -> Result<AmbientPoint> {
    if word.is_empty() {
        return Err(Error::InvalidParameter("empty word".into()));
    }
    let d = m.dims();
    let h = &m.horseshoe;
    // Composition x -> M x + c for each block.
    let compose = |stable: bool| -> (DMatrix<f64>, DVector<f64>) {
        let k = if stable { d.s } else { d.u };
        let mut mat = DMatrix::<f64>::identity(k, k);
        let mut off = DVector::<f64>::zeros(k);
        for b in word {
            let br = h.branch(*b);
            let (bm, bo) = if stable { (&br.stable, &br.stable_offset) } else { (&br.unstable, &br.unstable_offset) };
            mat = bm * &mat;
            off = bm * &off + bo;
        }
        (mat, off)
    };
    let solve = |(mat, off): (DMatrix<f64>, DVector<f64>)| -> Result<Vec<f64>> {
        let k = mat.nrows();
        (DMatrix::<f64>::identity(k, k) - mat)
            .lu()
            .solve(&off)
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::InvalidParameter("composition has no isolated fixed point".into()))
    };
    let xs = solve(compose(true))?;
    let xu = solve(compose(false))?;
    let mut scale = 1.0;
    let mut shift = 0.0;
    for b in word {
        scale *= m.lambda;
        shift = m.lambda * shift + m.central_shift(*b);
    }
    let xc = shift / (scale - 1.0);
    Ok(AmbientPoint::new(xs, xc, xu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_instance;

    #[test]
    fn affine_saddles_are_exact() {
        let m = default_instance();
        assert_eq!(m.saddle(Saddle::P).unwrap(), m.p());
        assert_eq!(m.saddle(Saddle::Q).unwrap(), m.q());
    }

    #[test]
    fn newton_recovers_q() {
        let m = default_instance();
        let start = AmbientPoint::new(vec![0.8], 0.09, vec![0.8]);
        let q = newton_fixed_point(&m, Branch::B, start, 20).unwrap();
        assert!(q.distance(&m.q()) < 1e-14);
    }

    #[test]
    fn periodic_point_of_ab() {
        let m = default_instance();
        let w = [Branch::A, Branch::B];
        let x = periodic_point(&m, &w).unwrap();
        let y = m.apply_branch(Branch::A, &x).unwrap();
        let z = m.apply_branch(Branch::B, &y).unwrap();
        assert!(z.distance(&x) < 1e-14);
        // central: x = lambda (lambda x) - mu  =>  x = mu / (lambda^2 - 1)
        assert!((x.xc - 0.02 / (1.44 - 1.0)).abs() < 1e-15);
    }
}
