//! C¹-small perturbations of the model and the robustness suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::axioms::{certify_blender, CertifyOptions, Status};
use crate::error::{Error, Result};
use crate::folding::{locate_tangency, make_quadratic_fold, LocateOptions, DEFAULT_T_GRID};
use crate::geometry::AmbientPoint;
use crate::map::{PiecewiseMap, Saddle};
use crate::model::{BlenderModel, Branch};

/// Largest slope of `rho -> (1 - rho^2)^3` on `[0, 1]`, attained at `rho = 1/sqrt(5)`.
pub const BUMP_SLOPE_MAX: f64 = 96.0 / (25.0 * 2.236_067_977_499_79);

fn bump_profile(rho: f64) -> (f64, f64) {
    if rho >= 1.0 {
        return (0.0, 0.0);
    }
    let w = 1.0 - rho * rho;
    (w * w * w, -6.0 * rho * w * w)
}

/// Additive term `amplitude * phi(|x - center| / radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: AmbientPoint,
    pub radius: f64,
    pub amplitude: Vec<f64>,
}

impl Bump {
    fn norm(&self) -> f64 {
        self.amplitude.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn c1_bound(&self) -> f64 {
        self.norm() * 1f64.max(BUMP_SLOPE_MAX / self.radius)
    }

    fn offset(&self, p: &AmbientPoint) -> (f64, Vec<f64>) {
        let d: Vec<f64> = p.to_vector().iter().zip(self.center.to_vector().iter()).map(|(a, b)| a - b).collect();
        let r = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        (r, d)
    }

    pub fn value(&self, p: &AmbientPoint) -> Vec<f64> {
        let (r, _) = self.offset(p);
        let (phi, _) = bump_profile(r / self.radius);
        self.amplitude.iter().map(|a| a * phi).collect()
    }

    pub fn jacobian(&self, p: &AmbientPoint) -> DMatrix<f64> {
        let n = self.amplitude.len();
        let (r, d) = self.offset(p);
        let (_, dphi) = bump_profile(r / self.radius);
        if r == 0.0 || dphi == 0.0 {
            return DMatrix::zeros(n, n);
        }
        let scale = dphi / (r * self.radius);
        DMatrix::from_fn(n, n, |i, j| self.amplitude[i] * scale * d[j])
    }

    /// Whether the support reaches across the boundary of a branch domain.
    pub fn crosses_domain_boundary(&self, m: &BlenderModel) -> bool {
        Branch::BOTH.iter().any(|b| {
            let dom = &m.horseshoe.branch(*b).domain;
            let mut inside = true;
            let mut meets = true;
            for (k, c) in self.center.xu.iter().enumerate() {
                let (lo, hi) = (c - self.radius, c + self.radius);
                inside &= lo >= dom.min[k] && hi <= dom.max[k];
                meets &= hi > dom.min[k] && lo < dom.max[k];
            }
            meets && !inside
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    ParamJitter { dlambda: f64, dmu: f64 },
    Bump(Bump),
    Composite { parts: Vec<Perturbation> },
}

impl Perturbation {
    /// Bound on the C¹ distance to `m` over the reference cube.
    pub fn c1_bound(&self, m: &BlenderModel) -> f64 {
        match self {
            Perturbation::ParamJitter { dlambda, dmu } => (dlambda.abs() * m.delta + dmu.abs()).max(dlambda.abs()),
            Perturbation::Bump(b) => b.c1_bound(),
            Perturbation::Composite { parts } => parts.iter().map(|p| p.c1_bound(m)).sum(),
        }
    }

    fn collect(&self, dl: &mut f64, dm: &mut f64, bumps: &mut Vec<Bump>) {
        match self {
            Perturbation::ParamJitter { dlambda, dmu } => {
                *dl += dlambda;
                *dm += dmu;
            }
            Perturbation::Bump(b) => bumps.push(b.clone()),
            Perturbation::Composite { parts } => parts.iter().for_each(|p| p.collect(dl, dm, bumps)),
        }
    }
}

/// The model plus a perturbation. Parameter jitter is absorbed into the
/// base model, so `c1_distance` only accounts for the bumps.
#[derive(Clone, Debug)]
pub struct PerturbedMap {
    base: BlenderModel,
    bumps: Vec<Bump>,
    c1: f64,
    pub warnings: Vec<String>,
}

pub fn perturbed_map(m: &BlenderModel, p: &Perturbation) -> Result<PerturbedMap> {
    let total = p.c1_bound(m);
    if !total.is_finite() {
        return Err(Error::InvalidParameter("perturbation bound is not finite".into()));
    }
    let (mut dl, mut dm) = (0.0, 0.0);
    let mut bumps = Vec::new();
    p.collect(&mut dl, &mut dm, &mut bumps);
    let n = m.dims().n();
    for b in &bumps {
        if b.amplitude.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.amplitude.len() });
        }
        if !(b.radius > 0.0) {
            return Err(Error::InvalidParameter(format!("bump radius {} must be positive", b.radius)));
        }
    }
    let base = if dl == 0.0 && dm == 0.0 { m.clone() } else { m.with_params(m.lambda + dl, m.mu + dm, m.delta) };
    let warnings = bumps
        .iter()
        .enumerate()
        .filter(|(_, b)| b.crosses_domain_boundary(m))
        .map(|(k, _)| format!("bump {k} support crosses a branch-domain boundary; recheck the two-component image"))
        .collect();
    let c1 = bumps.iter().map(Bump::c1_bound).sum();
    Ok(PerturbedMap { base, bumps, c1, warnings })
}

impl PiecewiseMap for PerturbedMap {
    fn model(&self) -> &BlenderModel {
        &self.base
    }

    fn eval_branch(&self, b: Branch, p: &AmbientPoint) -> AmbientPoint {
        let img = self.base.map_branch(b, p);
        if self.bumps.is_empty() {
            return img;
        }
        let mut v = img.to_vector();
        for bump in &self.bumps {
            for (x, a) in v.iter_mut().zip(bump.value(p)) {
                *x += a;
            }
        }
        AmbientPoint::from_vector(&v, self.base.dims()).expect("dimensions agree")
    }

    fn jacobian_branch(&self, b: Branch, p: &AmbientPoint) -> DMatrix<f64> {
        let mut j = self.base.jacobian_branch(b);
        for bump in &self.bumps {
            j += bump.jacobian(p);
        }
        j
    }

    fn c1_distance(&self) -> f64 {
        self.c1
    }
}

/// Fold and search parameters used for every case of the suite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub saddle: Saddle,
    pub apex: f64,
    pub lip: f64,
    pub n_iter: usize,
    pub tol: f64,
}

impl Default for FoldSpec {
    fn default() -> Self {
        Self { saddle: Saddle::P, apex: 0.05, lip: 0.0, n_iter: 60, tol: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangencySummary {
    pub t_star: f64,
    pub interval_width: f64,
    pub residual_angle: f64,
    pub cone_margin: f64,
    pub iterations: usize,
    pub itinerary: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub index: usize,
    pub perturbation: Perturbation,
    pub c1_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    /// Base minimum margin minus the perturbed one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin_shrinkage: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tangency: Option<TangencySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub base_min_margin: f64,
    pub cases: Vec<CaseReport>,
    pub all_passed: bool,
    /// Largest bound below which every sampled case passed.
    pub max_safe_c1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessOptions {
    pub certify: CertifyOptions,
    pub fold: FoldSpec,
    /// Largest tangency residual that still counts as found.
    pub residual_tol: f64,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        Self { certify: CertifyOptions::default(), fold: FoldSpec::default(), residual_tol: 1e-6 }
    }
}

fn run_case(m: &BlenderModel, index: usize, p: &Perturbation, base_margin: f64, opts: &RobustnessOptions) -> CaseReport {
    let mut report = CaseReport {
        index,
        perturbation: p.clone(),
        c1_bound: p.c1_bound(m),
        status: None,
        min_margin: None,
        margin_shrinkage: None,
        tangency: None,
        error: None,
        warnings: Vec::new(),
        passed: false,
    };
    let map = match perturbed_map(m, p) {
        Ok(map) => map,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    report.warnings = map.warnings.clone();
    if let Err(e) = map.saddle(Saddle::P).and_then(|_| map.saddle(Saddle::Q)) {
        report.error = Some(format!("out of neighborhood: {e}"));
        return report;
    }
    let cert = match certify_blender(&map, None, &opts.certify) {
        Ok(c) => c,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    report.status = Some(cert.status);
    report.min_margin = Some(cert.min_margin);
    report.margin_shrinkage = Some(base_margin - cert.min_margin);
    if !cert.is_certified() {
        return report;
    }
    let f = &opts.fold;
    let located = make_quadratic_fold(&map, f.saddle, f.apex, f.lip, DEFAULT_T_GRID).and_then(|fold| {
        locate_tangency(&fold, &map, &LocateOptions { n_iter: f.n_iter, tol: f.tol, alpha: Some(cert.alpha) })
    });
    match located {
        Ok(t) => {
            report.passed = t.residual_angle < opts.residual_tol && t.cone_margin > 0.0;
            report.tangency = Some(TangencySummary {
                t_star: t.t_star,
                interval_width: t.interval_width,
                residual_angle: t.residual_angle,
                cone_margin: t.cone_margin,
                iterations: t.iterations,
                itinerary: t.itinerary,
            });
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report
}

/// Re-certifies and re-locates the tangency for every perturbation, in parallel.
pub fn robustness_suite(m: &BlenderModel, perturbations: &[Perturbation], opts: &RobustnessOptions) -> Result<RobustnessReport> {
    let base = certify_blender(m, None, &opts.certify)?;
    if !base.is_certified() {
        return Err(Error::InvalidParameter(format!("base model is not certified ({:?})", base.status)));
    }
    let cases: Vec<CaseReport> = perturbations
        .par_iter()
        .enumerate()
        .map(|(k, p)| run_case(m, k, p, base.min_margin, opts))
        .collect();
    let mut order: Vec<&CaseReport> = cases.iter().collect();
    order.sort_by(|a, b| a.c1_bound.total_cmp(&b.c1_bound));
    let mut max_safe_c1 = 0.0;
    for c in order {
        if !c.passed {
            break;
        }
        max_safe_c1 = c.c1_bound;
    }
    Ok(RobustnessReport { base_min_margin: base.min_margin, all_passed: cases.iter().all(|c| c.passed), cases, max_safe_c1 })
}

/// Random perturbations mixing a parameter jitter and a bump, each with
/// C¹ bound at most `c1_max`.
pub fn random_perturbations(m: &BlenderModel, count: usize, c1_max: f64, seed: u64) -> Vec<Perturbation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = m.dims();
    (0..count)
        .map(|_| {
            let budget = c1_max * rng.gen_range(0.2..=1.0);
            let share: f64 = rng.gen_range(0.0..=1.0);
            // jitter bound is max(|dl| delta + |dm|, |dl|) <= |dl| + |dm| for delta <= 1
            let jitter = budget * share;
            let w: f64 = rng.gen_range(0.0..=1.0);
            let sign = |rng: &mut ChaCha8Rng| if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let dlambda = sign(&mut rng) * jitter * w;
            let dmu = sign(&mut rng) * jitter * (1.0 - w) * m.delta.min(1.0);
            let radius = rng.gen_range(0.1..=0.5);
            let center = AmbientPoint::new(
                (0..dims.s).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
                rng.gen_range(-m.delta..=m.delta),
                (0..dims.u).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            );
            let mut dir: Vec<f64> = (0..dims.n()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let amp = budget * (1.0 - share) / 1f64.max(BUMP_SLOPE_MAX / radius);
            dir.iter_mut().for_each(|x| *x *= amp / norm);
            Perturbation::Composite {
                parts: vec![Perturbation::ParamJitter { dlambda, dmu }, Perturbation::Bump(Bump { center, radius, amplitude: dir })],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_instance;

    fn bump(amp: f64, radius: f64) -> Bump {
        Bump { center: AmbientPoint::new(vec![0.0], 0.0, vec![0.0]), radius, amplitude: vec![0.0, amp, 0.0] }
    }

    #[test]
    fn slope_constant() {
        let rho = 1.0 / 5f64.sqrt();
        assert!((bump_profile(rho).1.abs() - BUMP_SLOPE_MAX).abs() < 1e-14);
        for k in 0..=1000 {
            assert!(bump_profile(k as f64 / 1000.0).1.abs() <= BUMP_SLOPE_MAX + 1e-15);
        }
    }

    #[test]
    fn zero_bump_is_identity() {
        let m = default_instance();
        let g = perturbed_map(&m, &Perturbation::Bump(bump(0.0, 0.2))).unwrap();
        for p in [AmbientPoint::new(vec![0.1], 0.01, vec![0.05]), AmbientPoint::new(vec![-0.5], -0.1, vec![0.6])] {
            let b = m.horseshoe.branch_of(&p.xu).unwrap();
            assert_eq!(g.eval_branch(b, &p), m.map_branch(b, &p));
            assert_eq!(g.jacobian_branch(b, &p), m.jacobian_branch(b));
        }
        assert_eq!(g.c1_distance(), 0.0);
    }

    #[test]
    fn jitter_is_parameter_substitution() {
        let m = default_instance();
        let p = Perturbation::ParamJitter { dlambda: 0.01, dmu: 0.001 };
        let g = perturbed_map(&m, &p).unwrap();
        assert!((g.model().lambda - 1.21).abs() < 1e-15);
        assert!((g.model().mu - 0.021).abs() < 1e-15);
        assert!((p.c1_bound(&m) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn bump_bound_and_jacobian() {
        let b = bump(1e-4, 0.1);
        assert!((b.c1_bound() - 1e-4 * BUMP_SLOPE_MAX / 0.1).abs() < 1e-18);
        let p = AmbientPoint::new(vec![0.03], 0.01, vec![0.02]);
        let j = b.jacobian(&p);
        let h = 1e-7;
        for col in 0..3 {
            let mut v = p.to_vector();
            v[col] += h;
            let plus = b.value(&AmbientPoint::from_vector(&v, p.dims()).unwrap());
            v[col] -= 2.0 * h;
            let minus = b.value(&AmbientPoint::from_vector(&v, p.dims()).unwrap());
            assert!(((plus[1] - minus[1]) / (2.0 * h) - j[(1, col)]).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_warning() {
        let m = default_instance();
        let mut b = bump(1e-5, 0.1);
        b.center.xu = vec![1.0 / 3.0];
        assert!(!perturbed_map(&m, &Perturbation::Bump(b.clone())).unwrap().warnings.is_empty());
        b.center.xu = vec![0.0];
        assert!(perturbed_map(&m, &Perturbation::Bump(b)).unwrap().warnings.is_empty());
    }

    #[test]
    fn random_perturbations_respect_budget() {
        let m = default_instance();
        for p in random_perturbations(&m, 50, 1e-4, 7) {
            assert!(p.c1_bound(&m) <= 1e-4 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn saddles_continue() {
        let m = default_instance();
        let p = Perturbation::Bump(Bump { center: m.p(), radius: 0.3, amplitude: vec![0.0, 1e-4, 0.0] });
        let g = perturbed_map(&m, &p).unwrap();
        let ps = g.saddle(Saddle::P).unwrap();
        assert!(g.eval_branch(Branch::A, &ps).distance(&ps) < 1e-14);
        assert!(ps.xc != 0.0);
    }
}
