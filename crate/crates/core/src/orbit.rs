//! Finite orbit segments with split boundary conditions.
//!
//! Stable and central coordinates are propagated forward, unstable ones are
//! solved backward, which keeps every sweep well conditioned. For the affine
//! model the sweeps terminate after one pass.

use nalgebra::DVector;

use crate::disks::{Position, SDisk, UUDisk, POSITION_TOL};
use crate::error::{Error, Result};
use crate::geometry::AmbientPoint;
use crate::map::{PiecewiseMap, Saddle};
use crate::model::Branch;

const SWEEP_LIMIT: usize = 60;
const NEWTON_LIMIT: usize = 30;
const STEP_TOL: f64 = 1e-15;

/// Number of steps used to pin a point to a local stable manifold.
pub const LEAF_STEPS: usize = 36;

/// A graph `x^u -> (x^s, x^c)` to start an orbit from.
pub trait DiskLike {
    fn eval(&self, xu: &[f64]) -> (Vec<f64>, f64);
}

impl DiskLike for UUDisk {
    fn eval(&self, xu: &[f64]) -> (Vec<f64>, f64) {
        UUDisk::eval(self, xu)
    }
}

impl<F: Fn(&[f64]) -> (Vec<f64>, f64)> DiskLike for F {
    fn eval(&self, xu: &[f64]) -> (Vec<f64>, f64) {
        self(xu)
    }
}

/// Solves `u`-component of `f_b(xs, xc, xu) = target` for `xu`.
fn solve_unstable<M: PiecewiseMap + ?Sized>(
    map: &M,
    b: Branch,
    xs: &[f64],
    xc: f64,
    guess: &[f64],
    target: &[f64],
) -> Result<Vec<f64>> {
    let d = map.dims();
    let mut p = AmbientPoint::new(xs.to_vec(), xc, guess.to_vec());
    for _ in 0..NEWTON_LIMIT {
        let img = map.eval_branch(b, &p);
        let r = DVector::from_iterator(d.u, img.xu.iter().zip(target).map(|(a, t)| a - t));
        let jac = map.jacobian_branch(b, &p);
        let juu = jac.view((d.s + 1, d.s + 1), (d.u, d.u)).clone_owned();
        let step = juu.lu().solve(&r).ok_or_else(|| Error::NoConvergence("singular unstable block".into()))?;
        for (x, dx) in p.xu.iter_mut().zip(step.iter()) {
            *x -= dx;
        }
        if step.amax() <= STEP_TOL * (1.0 + p.xu.iter().fold(0.0f64, |a, x| a.max(x.abs()))) || map.is_affine() {
            return Ok(p.xu);
        }
    }
    Err(Error::NoConvergence("unstable preimage".into()))
}

/// Solves the central and unstable components of `f_b(xs, xc, xu) = target`
/// for `(xc, xu)`.
fn solve_center_unstable<M: PiecewiseMap + ?Sized>(
    map: &M,
    b: Branch,
    xs: &[f64],
    guess_c: f64,
    guess_u: &[f64],
    target_c: f64,
    target_u: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let d = map.dims();
    let mut p = AmbientPoint::new(xs.to_vec(), guess_c, guess_u.to_vec());
    for _ in 0..NEWTON_LIMIT {
        let img = map.eval_branch(b, &p);
        let mut r = DVector::zeros(d.u + 1);
        r[0] = img.xc - target_c;
        for j in 0..d.u {
            r[1 + j] = img.xu[j] - target_u[j];
        }
        let jac = map.jacobian_branch(b, &p);
        let blk = jac.view((d.s, d.s), (d.u + 1, d.u + 1)).clone_owned();
        let step = blk.lu().solve(&r).ok_or_else(|| Error::NoConvergence("singular center-unstable block".into()))?;
        p.xc -= step[0];
        for j in 0..d.u {
            p.xu[j] -= step[1 + j];
        }
        let scale = 1.0 + p.xc.abs().max(p.xu.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        if step.amax() <= STEP_TOL * scale || map.is_affine() {
            return Ok((p.xc, p.xu));
        }
    }
    Err(Error::NoConvergence("center-unstable preimage".into()))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Orbit `x_0, ..., x_N` with `x_0` on `disk`, `x_{k+1} = f_{word[k]}(x_k)`
/// and `x_N^u = target`.
pub fn disk_orbit<M: PiecewiseMap + ?Sized, D: DiskLike + ?Sized>(
    map: &M,
    disk: &D,
    word: &[Branch],
    target: &[f64],
) -> Result<Vec<AmbientPoint>> {
    let h = &map.model().horseshoe;
    let n = word.len();
    let mut xu: Vec<Vec<f64>> = vec![target.to_vec(); n + 1];
    for k in (0..n).rev() {
        xu[k] = h.branch(word[k]).unmap_unstable(&xu[k + 1]).expect("invertible");
    }
    let forward = |xu: &[Vec<f64>]| -> Vec<AmbientPoint> {
        let (xs0, xc0) = disk.eval(&xu[0]);
        let mut orbit = Vec::with_capacity(n + 1);
        orbit.push(AmbientPoint::new(xs0, xc0, xu[0].clone()));
        for k in 0..n {
            let img = map.eval_branch(word[k], &orbit[k]);
            orbit.push(AmbientPoint::new(img.xs, img.xc, xu[k + 1].clone()));
        }
        orbit
    };
    if map.is_affine() {
        return Ok(forward(&xu));
    }
    for _ in 0..SWEEP_LIMIT {
        let orbit = forward(&xu);
        let mut change: f64 = 0.0;
        let mut next = target.to_vec();
        for k in (0..n).rev() {
            let sol = solve_unstable(map, word[k], &orbit[k].xs, orbit[k].xc, &xu[k], &next)?;
            change = change.max(max_diff(&sol, &xu[k]));
            xu[k] = sol.clone();
            next = sol;
        }
        if change <= 4.0 * STEP_TOL {
            return Ok(forward(&xu));
        }
    }
    Err(Error::NoConvergence(format!("disk orbit along a word of length {n}")))
}

/// Point `(xc, xu)` over `xs` whose forward orbit under the saddle's home
/// branch converges to the saddle, computed over `steps` iterates.
pub fn stable_leaf_point<M: PiecewiseMap + ?Sized>(
    map: &M,
    saddle_point: &AmbientPoint,
    home: Branch,
    xs: &[f64],
    steps: usize,
) -> Result<(f64, Vec<f64>)> {
    if map.is_affine() {
        return Ok((saddle_point.xc, saddle_point.xu.clone()));
    }
    let mut cs = vec![saddle_point.xc; steps + 1];
    let mut us = vec![saddle_point.xu.clone(); steps + 1];
    for _ in 0..SWEEP_LIMIT {
        let mut orbit = Vec::with_capacity(steps + 1);
        orbit.push(AmbientPoint::new(xs.to_vec(), cs[0], us[0].clone()));
        for k in 0..steps {
            let img = map.eval_branch(home, &orbit[k]);
            orbit.push(AmbientPoint::new(img.xs, cs[k + 1], us[k + 1].clone()));
        }
        let mut change: f64 = 0.0;
        let (mut tc, mut tu) = (saddle_point.xc, saddle_point.xu.clone());
        for k in (0..steps).rev() {
            let (c, u) = solve_center_unstable(map, home, &orbit[k].xs, cs[k], &us[k], tc, &tu)?;
            change = change.max((c - cs[k]).abs()).max(max_diff(&u, &us[k]));
            cs[k] = c;
            us[k] = u.clone();
            tc = c;
            tu = u;
        }
        if change <= 4.0 * STEP_TOL {
            return Ok((cs[0], us[0].clone()));
        }
    }
    Err(Error::NoConvergence("stable leaf".into()))
}

/// The continued saddles and their local stable manifolds.
pub struct ReferenceLeaves<'a, M: PiecewiseMap + ?Sized> {
    pub map: &'a M,
    pub p: AmbientPoint,
    pub q: AmbientPoint,
    pub steps: usize,
}

/// Clearance of an image disk to a local stable manifold together with the
/// orbit that realizes it.
#[derive(Clone, Debug)]
pub struct Clearance {
    /// Disk central value minus manifold central value, at the crossing.
    pub value: f64,
    pub orbit: Vec<AmbientPoint>,
}

impl<'a, M: PiecewiseMap + ?Sized> ReferenceLeaves<'a, M> {
    pub fn new(map: &'a M) -> Result<Self> {
        let p = map.saddle(Saddle::P)?;
        let q = map.saddle(Saddle::Q)?;
        Ok(Self { map, p, q, steps: LEAF_STEPS })
    }

    pub fn saddle(&self, s: Saddle) -> &AmbientPoint {
        match s {
            Saddle::P => &self.p,
            Saddle::Q => &self.q,
        }
    }

    /// Central gap between the continued saddles.
    pub fn central_gap(&self) -> f64 {
        self.q.xc - self.p.xc
    }

    /// Local stable manifold of `s` over `xs`.
    pub fn leaf(&self, s: Saddle, xs: &[f64]) -> Result<(f64, Vec<f64>)> {
        stable_leaf_point(self.map, self.saddle(s), s.home_branch(), xs, self.steps)
    }

    pub fn leaf_disk(&self, s: Saddle, n: usize) -> Result<SDisk> {
        let mut err = None;
        let d = SDisk::sampled(self.map.dims(), n, |xs| match self.leaf(s, xs) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                (f64::NAN, vec![f64::NAN; self.map.dims().u])
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(d),
        }
    }

    /// Clearance of `f_word(disk)` to the local stable manifold of `s`.
    pub fn clearance<D: DiskLike + ?Sized>(&self, s: Saddle, disk: &D, word: &[Branch]) -> Result<Clearance> {
        let mut xi = self.saddle(s).xu.clone();
        for _ in 0..SWEEP_LIMIT {
            let orbit = disk_orbit(self.map, disk, word, &xi)?;
            let end = orbit.last().expect("orbit has a start");
            let (lc, lu) = self.leaf(s, &end.xs)?;
            if self.map.is_affine() || max_diff(&lu, &xi) <= 4.0 * STEP_TOL {
                return Ok(Clearance { value: end.xc - lc, orbit });
            }
            xi = lu;
        }
        Err(Error::NoConvergence("crossing with local stable manifold".into()))
    }

    /// Position of `f_word(disk)` relative to the continued manifolds.
    pub fn position<D: DiskLike + ?Sized>(&self, disk: &D, word: &[Branch]) -> Result<Position> {
        let to_p = self.clearance(Saddle::P, disk, word)?.value;
        let to_q = self.clearance(Saddle::Q, disk, word)?.value;
        Position::from_clearances(to_p, to_q, POSITION_TOL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disks::{graph_transform, PositionClass};
    use crate::model::{default_instance, Branch::*};

    #[test]
    fn affine_clearance_matches_graph_transforms() {
        let m = default_instance();
        let refs = ReferenceLeaves::new(&m).unwrap();
        let d = UUDisk::tilted(vec![0.1], 0.03, &[0.004]);
        let word = [A, B, A, A, B];
        let mut img = d.clone();
        for b in word {
            img = graph_transform(&img, b, &m);
        }
        let cp = refs.clearance(Saddle::P, &d, &word).unwrap();
        let cq = refs.clearance(Saddle::Q, &d, &word).unwrap();
        assert!((cp.value - img.central_at(&[0.0])).abs() < 1e-14);
        assert!((cq.value - (img.central_at(&[5.0 / 6.0]) - 0.1)).abs() < 1e-14);
        let pos = refs.position(&d, &word).unwrap();
        assert_eq!(pos.class, crate::disks::classify_position(&img, &m).unwrap().class);
        assert_eq!(pos.class, PositionClass::Between);
    }

    #[test]
    fn orbit_is_consistent() {
        let m = default_instance();
        let d = UUDisk::flat(vec![0.0], 0.05, 1);
        let word = [A, A, B];
        let orbit = disk_orbit(&m, &d, &word, &[0.25]).unwrap();
        assert!((orbit[3].xu[0] - 0.25).abs() < 1e-15);
        for k in 0..3 {
            let img = m.apply_branch(word[k], &orbit[k]).unwrap();
            assert!(img.distance(&orbit[k + 1]) < 1e-14);
        }
    }

    #[test]
    fn affine_leaves_are_flat() {
        let m = default_instance();
        let refs = ReferenceLeaves::new(&m).unwrap();
        assert_eq!(refs.leaf(Saddle::Q, &[-0.3]).unwrap(), (m.q().xc, vec![5.0 / 6.0]));
        assert!((refs.central_gap() - 0.1).abs() < 1e-15);
    }
}
