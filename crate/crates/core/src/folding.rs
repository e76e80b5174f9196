//! Folding manifolds and the nested search for a tangency with the local
//! stable set.
//!
//! A fold is a one-parameter family `S_t`, `t ∈ [0, 1]`, of uu-disks. The
//! stable coordinate of `S_t` moves along `e_1` with `t`, and the central
//! profile over the anchoring stable leaf is `apex (1 - (2t-1)^2)`. Hence
//! `S_0` and `S_1` meet the local stable manifold of the anchoring saddle,
//! and at `t = 1/2` the fold is tangent to the stable direction.
//!
//! Images are never resampled. A fold keeps its original parametrization
//! together with the word applied so far and the window of surviving
//! parameters, so every image is evaluated exactly through orbit solves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::axioms;
use crate::disks::{PositionClass, UUDisk, POSITION_TOL};
use crate::error::{Error, Result};
use crate::geometry::{angle_to_span, cone_ratio, AmbientPoint, ConeKind};
use crate::map::{PiecewiseMap, Saddle};
use crate::model::{word_string, Branch};
use crate::orbit::{Clearance, ReferenceLeaves};

pub const DEFAULT_T_GRID: usize = 257;
/// Samples per window when scanning for crossings.
pub const SCAN_POINTS: usize = 33;
/// Root-finding tolerance, in central-coordinate units.
pub const BISECTION_TOL: f64 = 1e-13;
const ROOT_ITER: usize = 200;
const GOLDEN_ITER: usize = 60;
/// Half-length of the stable segment swept by the fold.
pub const FOLD_SPAN: f64 = 0.5;
const FD_STEP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldingManifold {
    /// Saddle whose local stable manifold anchors the fold.
    pub saddle: Saddle,
    pub apex: f64,
    /// Norm of the central slope of every `S_t`.
    pub lip: f64,
    pub span: f64,
    /// Branches applied to the original fold, first letter first.
    pub word: Vec<Branch>,
    /// Surviving parameters of the original fold.
    pub window: [f64; 2],
    pub t_grid: usize,
}

/// Quadratic fold anchored at `saddle`. Works for perturbed maps, where the
/// profile is measured from the continued local stable manifold.
pub fn make_quadratic_fold<M: PiecewiseMap + ?Sized>(
    map: &M,
    saddle: Saddle,
    apex: f64,
    lip: f64,
    t_grid: usize,
) -> Result<FoldingManifold> {
    let refs = ReferenceLeaves::new(map)?;
    let gap = refs.central_gap();
    if !(apex > 0.0 && apex < gap) {
        return Err(Error::ApexOutside(apex));
    }
    let bound = axioms::alpha_admissible(map);
    if !(lip >= 0.0 && lip <= bound) {
        return Err(Error::InvalidParameter(format!("fold slope {lip} exceeds the admissible cone opening {bound:.6e}")));
    }
    if t_grid < 3 {
        return Err(Error::InvalidParameter("fold grid needs at least 3 samples".into()));
    }
    Ok(FoldingManifold { saddle, apex, lip, span: FOLD_SPAN, word: Vec::new(), window: [0.0, 1.0], t_grid })
}

/// `S_t` as a graph over the unstable coordinates.
pub struct FoldDisk {
    pub xs: Vec<f64>,
    anchor_c: f64,
    anchor_u: Vec<f64>,
    offset: f64,
    slope: Vec<f64>,
}

impl FoldDisk {
    pub fn central_at(&self, xu: &[f64]) -> f64 {
        let tilt: f64 = self.slope.iter().zip(xu.iter().zip(&self.anchor_u)).map(|(k, (x, a))| k * (x - a)).sum();
        self.anchor_c + self.offset + tilt
    }

    pub fn point(&self, xu: &[f64]) -> AmbientPoint {
        AmbientPoint::new(self.xs.clone(), self.central_at(xu), xu.to_vec())
    }

    pub fn to_uu_disk(&self) -> UUDisk {
        let shift: f64 = self.slope.iter().zip(&self.anchor_u).map(|(k, a)| k * a).sum();
        UUDisk::tilted(self.xs.clone(), self.anchor_c + self.offset - shift, &self.slope)
    }
}

impl crate::orbit::DiskLike for FoldDisk {
    fn eval(&self, xu: &[f64]) -> (Vec<f64>, f64) {
        (self.xs.clone(), self.central_at(xu))
    }
}

impl FoldingManifold {
    pub fn profile(&self, t: f64) -> f64 {
        let s = 2.0 * t - 1.0;
        self.apex * (1.0 - s * s)
    }

    pub fn stable_coord(&self, t: f64, s_dim: usize) -> Vec<f64> {
        let mut xs = vec![0.0; s_dim];
        xs[0] = self.span * (2.0 * t - 1.0);
        xs
    }

    pub fn width(&self) -> f64 {
        self.window[1] - self.window[0]
    }

    pub fn disk<M: PiecewiseMap + ?Sized>(&self, refs: &ReferenceLeaves<'_, M>, t: f64) -> Result<FoldDisk> {
        let d = refs.map.dims();
        let xs = self.stable_coord(t, d.s);
        let (anchor_c, anchor_u) = refs.leaf(self.saddle, &xs)?;
        let k = self.lip / (d.u as f64).sqrt();
        Ok(FoldDisk {
            xs,
            anchor_c,
            anchor_u,
            offset: self.saddle.orientation() * self.profile(t),
            slope: vec![k; d.u],
        })
    }

    /// Point of the original fold.
    pub fn point<M: PiecewiseMap + ?Sized>(&self, refs: &ReferenceLeaves<'_, M>, t: f64, xu: &[f64]) -> Result<AmbientPoint> {
        Ok(self.disk(refs, t)?.point(xu))
    }

    /// Clearance of the image of `S_t` under `word` followed by `extra`.
    fn clearance<M: PiecewiseMap + ?Sized>(
        &self,
        refs: &ReferenceLeaves<'_, M>,
        t: f64,
        to: Saddle,
        extra: Option<Branch>,
    ) -> Result<Clearance> {
        let disk = self.disk(refs, t)?;
        let mut word = self.word.clone();
        word.extend(extra);
        refs.clearance(to, &disk, &word)
    }

    /// Checks that the current image is a folding manifold: endpoints meet the
    /// anchoring saddle's stable manifold, interior disks lie in between.
    pub fn validate<M: PiecewiseMap + ?Sized>(&self, map: &M) -> Result<()> {
        let [lo, hi] = self.window;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(format!("window [{lo}, {hi}] not inside [0, 1]")));
        }
        let refs = ReferenceLeaves::new(map)?;
        let meet = match self.saddle {
            Saddle::P => PositionClass::MeetsP,
            Saddle::Q => PositionClass::MeetsQ,
        };
        for (k, t) in linspace(lo, hi, self.t_grid).into_iter().enumerate() {
            let disk = self.disk(&refs, t)?;
            let pos = refs.position(&disk, &self.word)?;
            let want = if k == 0 || k + 1 == self.t_grid { meet } else { PositionClass::Between };
            if pos.class != want {
                return Err(Error::InvalidParameter(format!("fold disk at t = {t} is {:?}, expected {want:?}", pos.class)));
            }
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
}

/// Root of `f` between `a` (where `f > 0`) and `b` (where `f <= 0`), by the
/// Illinois variant of regula falsi. Stops at `|f| <= tol` or a bracket of a
/// few ulps.
fn refine_root(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> Result<f64> {
    let mut side = 0i8;
    for _ in 0..ROOT_ITER {
        if fa.abs() <= tol {
            return Ok(a);
        }
        if fb.abs() <= tol {
            return Ok(b);
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        let lo = a.min(b);
        let hi = a.max(b);
        if !(x > lo && x < hi) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx > 0.0 {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::Bisection(format!("no root within {ROOT_ITER} iterations")))
}

/// Minimum of `f` on `[a, b]` by golden-section search.
fn golden_min(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITER {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
        if b - a <= 4.0 * f64::EPSILON {
            break;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldStep {
    pub fold: FoldingManifold,
    pub branch: Branch,
    pub window: [f64; 2],
    /// Window endpoints had drifted off the anchoring manifold and were re-located.
    pub rebracketed: bool,
}

/// One step of the image construction: keeps the home-branch image when it
/// stays clear of the far saddle, otherwise switches to the other branch on
/// the parameter window where that image lies beyond the anchoring manifold.
pub fn image_fold<M: PiecewiseMap + ?Sized>(fold: &FoldingManifold, map: &M) -> Result<FoldStep> {
    let refs = ReferenceLeaves::new(map)?;
    image_fold_with(fold, &refs)
}

fn image_fold_with<M: PiecewiseMap + ?Sized>(fold: &FoldingManifold, refs: &ReferenceLeaves<'_, M>) -> Result<FoldStep> {
    let sigma = fold.saddle.orientation();
    let home = fold.saddle.home_branch();
    let other = home.other();
    let near = |t: f64, b: Branch| -> Result<f64> { Ok(sigma * fold.clearance(refs, t, fold.saddle, Some(b))?.value) };
    let far = |t: f64, b: Branch| -> Result<f64> { Ok(-sigma * fold.clearance(refs, t, fold.saddle.other(), Some(b))?.value) };

    let [lo, hi] = fold.window;
    let ts = linspace(lo, hi, SCAN_POINTS);
    let mut near_home = Vec::with_capacity(SCAN_POINTS);
    let mut far_home = Vec::with_capacity(SCAN_POINTS);
    for &t in &ts {
        near_home.push(near(t, home)?);
        far_home.push(far(t, home)?);
    }
    if near_home.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) <= BISECTION_TOL {
        return Err(Error::Bisection(format!("fold image within {BISECTION_TOL:e} of the stable manifold")));
    }
    let (imin, &fmin) = far_home.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("scan is not empty");
    let first_cross = far_home.iter().position(|&v| v <= 0.0);
    let mut touch = None;
    if first_cross.is_none() {
        let a = ts[imin.saturating_sub(1)];
        let b = ts[(imin + 1).min(SCAN_POINTS - 1)];
        let (tm, vm) = golden_min(|t| far(t, home), a, b)?;
        let (tm, vm) = if vm < fmin { (tm, vm) } else { (ts[imin], fmin) };
        if vm > POSITION_TOL {
            return keep_home(fold, refs, home, &ts, &near_home);
        }
        touch = Some(tm);
    }
    let t1 = match (first_cross, touch) {
        (Some(0), _) => return Err(Error::NonNested(fold.word.len())),
        (Some(i), _) => refine_root(|t| far(t, home), ts[i - 1], far_home[i - 1], ts[i], far_home[i], BISECTION_TOL)?,
        (None, Some(t)) => t,
        (None, None) => unreachable!(),
    };
    let n1 = near(t1, other)?;
    if n1 <= 0.0 {
        return Err(Error::NoAdmissibleBranch(fold.word.len()));
    }
    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let edge = |dir: f64| -> Result<f64> {
        let (mut a, mut fa) = (t1, n1);
        loop {
            let b = if dir < 0.0 { (a - h).max(lo) } else { (a + h).min(hi) };
            let fb = near(b, other)?;
            if fb <= 0.0 {
                return refine_root(|t| near(t, other), a, fa, b, fb, BISECTION_TOL);
            }
            if b == lo || b == hi {
                return Err(Error::NonNested(fold.word.len()));
            }
            a = b;
            fa = fb;
        }
    };
    let t2 = edge(-1.0)?;
    let t3 = edge(1.0)?;
    if !(lo <= t2 && t2 < t3 && t3 <= hi && t3 - t2 < hi - lo) {
        return Err(Error::NonNested(fold.word.len()));
    }
    let mut next = fold.clone();
    next.word.push(other);
    next.window = [t2, t3];
    Ok(FoldStep { window: next.window, fold: next, branch: other, rebracketed: false })
}

/// Home-branch image over the same window; endpoints that drifted off the
/// anchoring manifold are moved back onto it.
fn keep_home<M: PiecewiseMap + ?Sized>(
    fold: &FoldingManifold,
    refs: &ReferenceLeaves<'_, M>,
    home: Branch,
    ts: &[f64],
    near_home: &[f64],
) -> Result<FoldStep> {
    let sigma = fold.saddle.orientation();
    let near = |t: f64| -> Result<f64> { Ok(sigma * fold.clearance(refs, t, fold.saddle, Some(home))?.value) };
    let mut window = fold.window;
    let mut rebracketed = false;
    let last = ts.len() - 1;
    if near_home[0].abs() > POSITION_TOL {
        rebracketed = true;
        window[0] = if near_home[0] < 0.0 {
            refine_root(&near, ts[1], near_home[1], ts[0], near_home[0], BISECTION_TOL)?
        } else {
            window[0]
        };
    }
    if near_home[last].abs() > POSITION_TOL {
        rebracketed = true;
        window[1] = if near_home[last] < 0.0 {
            refine_root(&near, ts[last - 1], near_home[last - 1], ts[last], near_home[last], BISECTION_TOL)?
        } else {
            window[1]
        };
    }
    let mut next = fold.clone();
    next.word.push(home);
    next.window = window;
    Ok(FoldStep { window, fold: next, branch: home, rebracketed })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocateOptions {
    pub n_iter: usize,
    /// Stop once the parameter window is at most this wide.
    pub tol: f64,
    /// Stable cone opening for the direction check; the automatic cone when absent.
    pub alpha: Option<f64>,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self { n_iter: 60, tol: 1e-2, alpha: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangencyResult {
    pub saddle: Saddle,
    pub t_star: f64,
    pub interval_width: f64,
    pub itinerary: String,
    /// Point of the original fold whose orbit stays in the cube along the itinerary.
    pub point: AmbientPoint,
    /// Unit stable direction at `point`.
    pub direction: Vec<f64>,
    /// Angle between `direction` and the fold's tangent space at `point`.
    pub residual_angle: f64,
    /// Smallest slack of the pulled-back directions in the stable cone.
    pub cone_margin: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rebracketed: usize,
    pub parameter_intervals: Vec<[f64; 2]>,
}

pub fn locate_tangency<M: PiecewiseMap + ?Sized>(fold: &FoldingManifold, map: &M, opts: &LocateOptions) -> Result<TangencyResult> {
    let refs = ReferenceLeaves::new(map)?;
    let alpha = match opts.alpha {
        Some(a) => a,
        None => axioms::auto_cones(map, &axioms::CertifyOptions::default()).alpha,
    };
    let mut f = fold.clone();
    let mut intervals = vec![f.window];
    let mut rebracketed = 0;
    let mut iterations = 0;
    while iterations < opts.n_iter && f.width() > opts.tol {
        let step = image_fold_with(&f, &refs)?;
        rebracketed += usize::from(step.rebracketed);
        f = step.fold;
        intervals.push(f.window);
        iterations += 1;
    }
    let t_star = 0.5 * (f.window[0] + f.window[1]);
    let disk = f.disk(&refs, t_star)?;
    let orbit = refs.clearance(f.saddle, &disk, &f.word)?.orbit;
    let dims = map.dims();

    let mut v = DVector::<f64>::zeros(dims.n());
    v[0] = 1.0;
    let mut cone_margin = alpha - cone_ratio(v.as_slice(), dims, ConeKind::S)?;
    for k in (0..f.word.len()).rev() {
        let j = map.jacobian_branch(f.word[k], &orbit[k]);
        v = j.lu().solve(&v).ok_or_else(|| Error::NoConvergence("singular jacobian along the orbit".into()))?;
        v /= v.norm();
        cone_margin = cone_margin.min(alpha - cone_ratio(v.as_slice(), dims, ConeKind::S)?);
    }
    if v[0] < 0.0 {
        v = -v;
    }

    let x = orbit[0].clone();
    let plus = f.point(&refs, t_star + FD_STEP, &x.xu)?.to_vector();
    let minus = f.point(&refs, t_star - FD_STEP, &x.xu)?.to_vector();
    let mut basis = DMatrix::<f64>::zeros(dims.n(), dims.u + 1);
    basis.set_column(0, &((plus - minus) / (2.0 * FD_STEP)));
    let k = f.lip / (dims.u as f64).sqrt();
    for j in 0..dims.u {
        basis[(dims.s, j + 1)] = k;
        basis[(dims.s + 1 + j, j + 1)] = 1.0;
    }
    let residual_angle = angle_to_span(&v, &basis);

    Ok(TangencyResult {
        saddle: f.saddle,
        t_star,
        interval_width: f.width(),
        itinerary: word_string(&f.word),
        point: x,
        direction: v.iter().copied().collect(),
        residual_angle,
        cone_margin,
        alpha,
        iterations,
        converged: f.width() <= opts.tol,
        rebracketed,
        parameter_intervals: intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_instance;

    #[test]
    fn quadratic_fold_profile() {
        let m = default_instance();
        let f = make_quadratic_fold(&m, Saddle::P, 0.05, 0.0, DEFAULT_T_GRID).unwrap();
        assert_eq!(f.profile(0.5), 0.05);
        assert_eq!(f.profile(0.0), 0.0);
        assert_eq!(f.profile(1.0), 0.0);
        f.validate(&m).unwrap();
        assert!(matches!(make_quadratic_fold(&m, Saddle::P, m.q_central(), 0.0, 257), Err(Error::ApexOutside(_))));
        assert!(matches!(make_quadratic_fold(&m, Saddle::P, 0.15, 0.0, 257), Err(Error::ApexOutside(_))));
        assert!(make_quadratic_fold(&m, Saddle::P, 0.05, 0.5, 257).is_err());
    }

    #[test]
    fn mirrored_fold_is_valid() {
        let m = default_instance();
        let f = make_quadratic_fold(&m, Saddle::Q, 0.05, 0.005, 65).unwrap();
        f.validate(&m).unwrap();
        let refs = ReferenceLeaves::new(&m).unwrap();
        assert!((f.disk(&refs, 0.5).unwrap().central_at(&m.q().xu) - (m.q_central() - 0.05)).abs() < 1e-15);
    }

    #[test]
    fn small_apex_keeps_branch_a() {
        let m = default_instance();
        let f = make_quadratic_fold(&m, Saddle::P, 0.05, 0.0, 65).unwrap();
        let step = image_fold(&f, &m).unwrap();
        assert_eq!(step.branch, Branch::A);
        assert_eq!(step.window, [0.0, 1.0]);
        step.fold.validate(&m).unwrap();
    }

    #[test]
    fn large_apex_switches_to_b() {
        let m = default_instance();
        let f = make_quadratic_fold(&m, Saddle::P, 0.09, 0.0, 65).unwrap();
        let step = image_fold(&f, &m).unwrap();
        assert_eq!(step.branch, Branch::B);
        // window edges solve 1.2 c(t) = 0.02
        for t in step.window {
            assert!((f.profile(t) - 0.02 / 1.2).abs() < 1e-12, "{t}");
        }
        step.fold.validate(&m).unwrap();
    }

    #[test]
    fn degenerate_fold_is_rejected() {
        let m = default_instance();
        let f = make_quadratic_fold(&m, Saddle::P, 1e-15, 0.0, 65).unwrap();
        assert!(matches!(image_fold(&f, &m), Err(Error::Bisection(_))));
    }

    #[test]
    fn fold_apex_has_stable_tangent() {
        let m = default_instance();
        let f = make_quadratic_fold(&m, Saddle::P, 0.05, 0.0, 65).unwrap();
        let refs = ReferenceLeaves::new(&m).unwrap();
        let a = f.point(&refs, 0.5 + 1e-7, &[0.2]).unwrap().to_vector();
        let b = f.point(&refs, 0.5 - 1e-7, &[0.2]).unwrap().to_vector();
        let v = (a - b) / 2e-7;
        assert!(crate::geometry::in_cone(v.as_slice(), m.dims(), ConeKind::S, 1e-6).unwrap());
    }

    #[test]
    fn affine_tangency_is_symmetric() {
        let m = default_instance();
        let f = make_quadratic_fold(&m, Saddle::P, 0.05, 0.0, 65).unwrap();
        let r = locate_tangency(&f, &m, &LocateOptions { n_iter: 20, tol: 0.0, alpha: None }).unwrap();
        assert!((r.t_star - 0.5).abs() < 1e-12);
        assert!(r.itinerary.starts_with("AAA"));
        assert!(r.residual_angle < 1e-12);
        assert!(r.cone_margin > 0.0);
        for w in r.parameter_intervals.windows(2) {
            assert!(w[1][0] >= w[0][0] && w[1][1] <= w[0][1]);
        }
    }
}
