//! Certification of the six blender-horseshoe conditions.
//!
//! Every check works from the affine data of the underlying model. For a
//! perturbed map each bound is inflated by the map's certified C¹ distance
//! `eps` (which also bounds the C⁰ distance), so a positive inflated margin is
//! a certificate for the perturbed map as well. A non-positive margin of the
//! unperturbed data refutes the condition; anything in between is reported as
//! inconclusive. The position laws are additionally audited on random disks,
//! with exact image positions computed relative to the continued manifolds.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::central_reduction::CentralIfs;
use crate::disks::{Position, PositionClass, UUDisk, POSITION_TOL};
use crate::error::Result;
use crate::geometry::{cone_image_bound, min_singular, op_norm, ConeKind, ConeParams, Dims};
use crate::map::{PiecewiseMap, Saddle};
use crate::model::{affine_box_image, BlenderModel, Branch, UBox};
use crate::orbit::ReferenceLeaves;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    /// Slack of the sufficient inequality after inflation; positive iff certified.
    pub margin: f64,
    /// Same slack for the unperturbed data.
    pub raw_margin: f64,
    pub detail: String,
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else if x > 0.0 {
        f64::MAX
    } else {
        -1.0
    }
}

impl Verdict {
    fn judge(raw: f64, inflated: f64, detail: impl Into<String>) -> Self {
        let status = if inflated > 0.0 {
            Status::Certified
        } else if raw <= 0.0 {
            Status::Refuted
        } else {
            Status::Inconclusive
        };
        Self { status, margin: finite(inflated), raw_margin: finite(raw), detail: detail.into() }
    }

    fn refuted(margin: f64, detail: impl Into<String>) -> Self {
        Self { status: Status::Refuted, margin: finite(margin), raw_margin: finite(margin), detail: detail.into() }
    }

    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Random disks per position class in the position-law audit.
    pub samples_per_class: usize,
    /// Jacobian sample points per branch for non-affine maps.
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { samples_per_class: 500, grid_points: 33, seed: 0 }
    }
}

/// Box in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeBox {
    pub stable_min: Vec<f64>,
    pub stable_max: Vec<f64>,
    pub central_min: f64,
    pub central_max: f64,
    pub unstable_min: Vec<f64>,
    pub unstable_max: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovBoxes {
    pub a: CubeBox,
    pub b: CubeBox,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingRates {
    /// Upper bound for `|Df|` on the stable bundle.
    pub stable_contraction: f64,
    pub central_min: f64,
    pub central_max: f64,
    /// Lower bound for the expansion on the strong unstable bundle.
    pub unstable_expansion: f64,
    /// `stable_contraction < 1 < central_min <= central_max < unstable_expansion`.
    pub dominated: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub disks: usize,
    pub checks: usize,
    pub violations: usize,
    /// Image classifications that fell within the position tolerance.
    pub ambiguous: usize,
    /// Smallest clearance, in the direction a law asserts, over all checks.
    pub worst_clearance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlenderCertificate {
    pub status: Status,
    pub conditions: BTreeMap<String, Verdict>,
    pub alpha: f64,
    pub alpha_prime: f64,
    /// Largest cone opening for which the disk conditions are certified.
    pub alpha_admissible: f64,
    pub markov: MarkovBoxes,
    pub splitting_rates: SplittingRates,
    pub c1_distance: f64,
    pub min_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
    pub model_violations: Vec<String>,
}

impl BlenderCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == Status::Certified
    }

    pub fn condition(&self, name: &str) -> &Verdict {
        &self.conditions[name]
    }
}

fn stable_image(m: &BlenderModel, b: Branch) -> UBox {
    let br = m.horseshoe.branch(b);
    affine_box_image(&br.stable, &br.stable_offset, &UBox::cube(m.dims().s))
}

/// Largest separation between two boxes along a single axis (negative when they overlap).
fn box_gap(a: &UBox, b: &UBox) -> f64 {
    a.min
        .iter()
        .zip(&a.max)
        .zip(b.min.iter().zip(&b.max))
        .map(|((a0, a1), (b0, b1))| (b0 - a1).max(a0 - b1))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Growth of a branch domain when the unstable map moves by `eps`.
fn domain_inflation(m: &BlenderModel, b: Branch, eps: f64) -> f64 {
    let k = m.horseshoe.branch(b).unstable_inverse_norm();
    if eps * k >= 1.0 {
        f64::INFINITY
    } else {
        eps * k / (1.0 - eps * k)
    }
}

/// Displacement bound for the central position of continued stable manifolds.
fn leaf_shift(m: &BlenderModel, eps: f64) -> f64 {
    if m.lambda > 1.0 {
        eps / (m.lambda - 1.0)
    } else {
        f64::INFINITY
    }
}

fn bh1_margin(m: &BlenderModel, eps: f64) -> (f64, String) {
    let mut worst = f64::INFINITY;
    let mut what = String::new();
    let mut take = |v: f64, label: String| {
        if v < worst {
            worst = v;
            what = label;
        }
    };
    let delta = m.delta;
    for b in Branch::BOTH {
        let img = stable_image(m, b);
        take(1.0 - img.max_abs() - eps, format!("stable image of {b} inside (-1,1)^s"));
        let dom = &m.horseshoe.branch(b).domain;
        take(1.0 - dom.max_abs() - domain_inflation(m, b, eps), format!("domain of {b} away from the uu-boundary"));
        let shift = m.central_shift(b);
        let reach = (m.lambda.abs() + 1.0) * delta;
        take(reach - shift.abs() - eps, format!("central image of {b} meets the cube"));
    }
    take(box_gap(&stable_image(m, Branch::A), &stable_image(m, Branch::B)) - 2.0 * eps, "stable images disjoint".into());
    let infl = domain_inflation(m, Branch::A, eps).max(domain_inflation(m, Branch::B, eps));
    take(
        box_gap(&m.horseshoe.branch_a.domain, &m.horseshoe.branch_b.domain) - 2.0 * infl,
        "branch domains disjoint".into(),
    );
    (worst, what)
}

/// Two-component image inside the stable slab, domains away from the uu-boundary.
pub fn check_bh1<M: PiecewiseMap + ?Sized>(map: &M) -> Verdict {
    let m = map.model();
    let (raw, _) = bh1_margin(m, 0.0);
    let (infl, what) = bh1_margin(m, map.c1_distance());
    Verdict::judge(raw, infl, format!("tightest: {what}"))
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct ConeBounds {
    margin: f64,
    /// Largest `alpha_image / alpha` over cones and branches.
    ratio: f64,
    what: &'static str,
}

fn inverse_inflation(jinv: &DMatrix<f64>, eps: f64) -> f64 {
    let k = op_norm(jinv);
    if eps * k >= 1.0 {
        f64::INFINITY
    } else {
        k * k * eps / (1.0 - k * eps)
    }
}

fn cone_bounds(j: &DMatrix<f64>, dims: Dims, alpha: f64, alpha_prime: f64, eps: f64) -> ConeBounds {
    let mut out = ConeBounds { margin: f64::INFINITY, ratio: 0.0, what: "" };
    let mut take = |slack: f64, what: &'static str| {
        if slack < out.margin {
            out.margin = slack;
            out.what = what;
        }
    };
    let mut image = |mat: &DMatrix<f64>, kind: ConeKind, inflate: f64, check_expansion: bool, what: &'static str| {
        let (sm, lg) = kind.blocks(dims);
        match cone_image_bound(mat, sm, lg, alpha, inflate) {
            Some(img) => {
                out.ratio = out.ratio.max(img.alpha_image / alpha);
                take(alpha_prime - img.alpha_image, what);
                if check_expansion {
                    take(img.expansion - 1.0, "expansion");
                }
            }
            None => {
                out.ratio = f64::INFINITY;
                take(-1.0, what);
            }
        }
    };
    image(j, ConeKind::UU, eps, false, "uu-cone invariance");
    image(j, ConeKind::U, eps, true, "u-cone invariance");
    match j.clone().try_inverse() {
        Some(jinv) => {
            let e = inverse_inflation(&jinv, eps);
            image(&jinv, ConeKind::S, e, true, "s-cone invariance");
        }
        None => take(-1.0, "singular jacobian"),
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bh2Outcome {
    pub verdict: Verdict,
    /// Largest achieved `alpha_image / alpha`.
    pub ratio: f64,
}

/// Strict cone invariance with uniform expansion and contraction.
pub fn check_bh2<M: PiecewiseMap + ?Sized>(map: &M, alpha: f64, alpha_prime: f64, opts: &CertifyOptions) -> Bh2Outcome {
    if !(0.0 < alpha_prime && alpha_prime < alpha && alpha < 1.0) {
        let margin = (alpha - alpha_prime).min(1.0 - alpha).min(alpha_prime);
        return Bh2Outcome {
            verdict: Verdict::refuted(margin, format!("need 0 < alpha' < alpha < 1, got alpha={alpha}, alpha'={alpha_prime}")),
            ratio: f64::INFINITY,
        };
    }
    let m = map.model();
    let dims = m.dims();
    let eps = map.c1_distance();
    let mut raw = f64::INFINITY;
    let mut infl = f64::INFINITY;
    let mut ratio: f64 = 0.0;
    let mut what = "";
    for b in Branch::BOTH {
        let j = m.jacobian_branch(b);
        let r = cone_bounds(&j, dims, alpha, alpha_prime, 0.0);
        raw = raw.min(r.margin);
        ratio = ratio.max(r.ratio);
        let i = cone_bounds(&j, dims, alpha, alpha_prime, eps);
        if i.margin < infl {
            infl = i.margin;
            what = i.what;
        }
    }
    let mut detail = format!("tightest: {what}");
    if !map.is_affine() {
        let sampled = sampled_cone_ratio(map, alpha, alpha_prime, opts);
        detail.push_str(&format!("; sampled jacobians: worst ratio {:.6}, worst slack {:.3e}", sampled.ratio, sampled.margin));
    }
    Bh2Outcome { verdict: Verdict::judge(raw, infl, detail), ratio }
}

fn sampled_cone_ratio<M: PiecewiseMap + ?Sized>(map: &M, alpha: f64, alpha_prime: f64, opts: &CertifyOptions) -> ConeBounds {
    let m = map.model();
    let dims = m.dims();
    let boxes = markov_boxes(m);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x6a09_e667);
    let mut worst = ConeBounds { margin: f64::INFINITY, ratio: 0.0, what: "" };
    for (b, bx) in [(Branch::A, &boxes.a), (Branch::B, &boxes.b)] {
        for _ in 0..opts.grid_points {
            let p = random_point_in(&mut rng, bx);
            let r = cone_bounds(&map.jacobian_branch(b, &p), dims, alpha, alpha_prime, 0.0);
            worst.ratio = worst.ratio.max(r.ratio);
            worst.margin = worst.margin.min(r.margin);
        }
    }
    worst
}

fn random_point_in(rng: &mut ChaCha8Rng, bx: &CubeBox) -> crate::geometry::AmbientPoint {
    let pick = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let xs = bx.stable_min.iter().zip(&bx.stable_max).map(|(a, b)| pick(rng, *a, *b)).collect();
    let xc = pick(rng, bx.central_min, bx.central_max);
    let xu = bx.unstable_min.iter().zip(&bx.unstable_max).map(|(a, b)| pick(rng, *a, *b)).collect();
    crate::geometry::AmbientPoint::new(xs, xc, xu)
}

/// `f^{-1}(f(R) ∩ C)` for both branch regions of the affine model.
pub fn markov_boxes(m: &BlenderModel) -> MarkovBoxes {
    let dims = m.dims();
    let mk = |b: Branch| {
        let shift = m.central_shift(b);
        let dom = &m.horseshoe.branch(b).domain;
        CubeBox {
            stable_min: vec![-1.0; dims.s],
            stable_max: vec![1.0; dims.s],
            central_min: (-m.delta + shift) / m.lambda,
            central_max: (m.delta + shift) / m.lambda,
            unstable_min: dom.min.clone(),
            unstable_max: dom.max.clone(),
        }
    };
    MarkovBoxes { a: mk(Branch::A), b: mk(Branch::B) }
}

fn bh3_margin(m: &BlenderModel, eps: f64) -> (f64, String) {
    let mut worst = f64::INFINITY;
    let mut what = String::new();
    let mut take = |v: f64, label: String| {
        if v < worst {
            worst = v;
            what = label;
        }
    };
    if m.lambda <= eps {
        return (-1.0, "central map not orientation preserving".into());
    }
    let boxes = markov_boxes(m);
    let slab_infl = eps / (m.lambda - eps);
    for (b, bx) in [(Branch::A, &boxes.a), (Branch::B, &boxes.b)] {
        let reach = bx.central_min.abs().max(bx.central_max.abs());
        take(m.delta - reach - slab_infl, format!("central slab of {b} inside (-delta, delta)"));
        let dom = &m.horseshoe.branch(b).domain;
        take(1.0 - dom.max_abs() - domain_inflation(m, b, eps), format!("region {b} away from the uu-boundary"));
        take(1.0 - stable_image(m, b).max_abs() - eps, format!("image of region {b} away from the s-boundary"));
    }
    (worst, what)
}

/// Markov regions disjoint from the unstable boundary, images disjoint from the stable one.
pub fn check_bh3<M: PiecewiseMap + ?Sized>(map: &M) -> (Verdict, MarkovBoxes) {
    let m = map.model();
    let (raw, _) = bh3_margin(m, 0.0);
    let (infl, what) = bh3_margin(m, map.c1_distance());
    (Verdict::judge(raw, infl, format!("tightest: {what}")), markov_boxes(m))
}

/// Largest cone opening for which disks through the two local stable
/// manifolds are kept apart from each other and from the central faces.
pub fn bh4_alpha_bound(m: &BlenderModel, eps: f64) -> f64 {
    let d = m.dims().unstable_diameter();
    let q = m.q_central();
    let e = leaf_shift(m, eps);
    let bound = ((q - 2.0 * e) / (2.0 * d)).min((m.delta - q - e) / d).min((m.delta - e) / d);
    if bound.is_finite() {
        bound.max(0.0)
    } else {
        0.0
    }
}

fn bh4_margin(m: &BlenderModel, alpha: f64, eps: f64) -> f64 {
    let d = m.dims().unstable_diameter();
    let q = m.q_central();
    let e = leaf_shift(m, eps);
    (q - 2.0 * alpha * d - 2.0 * e).min(m.delta - q - alpha * d - e).min(m.delta - alpha * d - e)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bh4Outcome {
    pub verdict: Verdict,
    pub alpha_admissible: f64,
}

pub fn check_bh4<M: PiecewiseMap + ?Sized>(map: &M, alpha: f64) -> Bh4Outcome {
    let m = map.model();
    let eps = map.c1_distance();
    let q = m.q_central();
    let alpha_admissible = bh4_alpha_bound(m, eps);
    if !(m.lambda > 1.0 && q > 0.0 && q < m.delta) {
        let v = Verdict::refuted(
            bh4_margin(m, alpha, 0.0).min(0.0),
            format!("saddle Q central value {q} not strictly inside (0, delta)"),
        );
        return Bh4Outcome { verdict: v, alpha_admissible };
    }
    let raw = bh4_margin(m, alpha, 0.0);
    let infl = bh4_margin(m, alpha, eps);
    let status = if infl > 0.0 { Status::Certified } else { Status::Inconclusive };
    let verdict = Verdict {
        status,
        margin: finite(infl),
        raw_margin: finite(raw),
        detail: format!("sufficient bound alpha < {alpha_admissible:.6e}"),
    };
    Bh4Outcome { verdict, alpha_admissible }
}

/// Distances `|xi_P - pre_B(xi_P)|` and `|a_u - pre_A(a_u)|`.
fn crossing_distances(m: &BlenderModel) -> (f64, f64) {
    let h = &m.horseshoe;
    let zero = vec![0.0; m.dims().u];
    let pre_b = h.branch_b.unmap_unstable(&zero).expect("invertible");
    let pre_a = h.branch_a.unmap_unstable(&h.a_u).expect("invertible");
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    (dist(&zero, &pre_b), dist(&h.a_u, &pre_a))
}

fn bh5_margin(m: &BlenderModel, alpha: f64, eps: f64) -> f64 {
    let (dist_b, dist_a) = crossing_distances(m);
    let e = leaf_shift(m, eps);
    let lam = m.lambda + eps;
    let slack = eps + (lam + 1.0) * e;
    let item5 = m.mu - lam * alpha * (dist_b + domain_inflation(m, Branch::B, eps)) - slack;
    let item6 = m.mu - lam * alpha * (dist_a + domain_inflation(m, Branch::A, eps)) - slack;
    item5.min(item6)
}

/// Cone opening below which the crossing items of the first position law hold.
pub fn bh5_alpha_bound(m: &BlenderModel, eps: f64) -> f64 {
    let at0 = bh5_margin(m, 0.0, eps);
    let at1 = bh5_margin(m, 1.0, eps);
    let slope = at0 - at1;
    if at0 <= 0.0 || !at0.is_finite() {
        0.0
    } else if slope <= 0.0 {
        f64::MAX
    } else {
        at0 / slope
    }
}

/// Position laws for single branch images, analytic with a random-disk audit.
pub fn check_bh5<M: PiecewiseMap + ?Sized>(map: &M, alpha: f64, opts: &CertifyOptions) -> Result<(Verdict, Option<AuditReport>)> {
    let m = map.model();
    let eps = map.c1_distance();
    if m.lambda <= 0.0 {
        return Ok((Verdict::refuted(m.lambda, "central multiplier reverses orientation"), None));
    }
    if m.lambda - eps <= 0.0 {
        return Ok((
            Verdict { status: Status::Inconclusive, margin: m.lambda - eps, raw_margin: m.lambda, detail: "orientation not certified".into() },
            None,
        ));
    }
    let raw = bh5_margin(m, alpha, 0.0);
    let infl = bh5_margin(m, alpha, eps);
    let mut verdict = Verdict::judge(raw, infl, "crossing items; non-crossing items follow from orientation");
    let audit = if opts.samples_per_class > 0 && verdict.status != Status::Refuted {
        let report = audit_position_laws(map, alpha, opts.samples_per_class, opts.seed)?;
        if report.violations > 0 {
            verdict.status = Status::Refuted;
            verdict.detail = format!("audit: {}", report.first_violation.clone().unwrap_or_default());
        } else if report.ambiguous > 0 && verdict.status == Status::Certified {
            verdict.status = Status::Inconclusive;
            verdict.detail = format!("audit: {} ambiguous classifications", report.ambiguous);
        }
        Some(report)
    } else {
        None
    };
    Ok((verdict, audit))
}

fn bh6_alpha_bound_inner(m: &BlenderModel, eps: f64) -> f64 {
    let ifs = CentralIfs::new(m.lambda, m.mu);
    let d = m.dims().unstable_diameter();
    let e = leaf_shift(m, eps);
    let v = (ifs.overlap_width() / 2.0 - (eps + e) / m.lambda) / d;
    if v.is_finite() {
        v.max(0.0)
    } else {
        0.0
    }
}

/// Cone opening below which every in-between disk has an in-between image.
pub fn bh6_alpha_bound(m: &BlenderModel, eps: f64) -> f64 {
    if CentralIfs::new(m.lambda, m.mu).covering_check().is_err() {
        return 0.0;
    }
    bh6_alpha_bound_inner(m, eps)
}

pub fn check_bh6<M: PiecewiseMap + ?Sized>(map: &M, alpha: f64) -> Verdict {
    let m = map.model();
    let ifs = CentralIfs::new(m.lambda, m.mu);
    let d = m.dims().unstable_diameter();
    let raw = ifs.overlap_width() / 2.0 - alpha * d;
    let cov = match ifs.covering_check() {
        Ok(c) => c,
        Err(e) => return Verdict::refuted(raw.min(0.0), e.to_string()),
    };
    if !cov.certified {
        return Verdict::refuted(raw.min(0.0), "central covering fails");
    }
    let eps = map.c1_distance();
    let infl = raw - (eps + leaf_shift(m, eps)) / m.lambda;
    if infl > 0.0 {
        return Verdict::judge(raw, infl, format!("overlap width {:.6e}", cov.overlap_width));
    }
    match bh6_counterexample(m, alpha) {
        Some(msg) => Verdict::refuted(infl, msg),
        None => Verdict {
            status: Status::Inconclusive,
            margin: finite(infl),
            raw_margin: finite(raw),
            detail: "sufficient bound fails, no counterexample found".into(),
        },
    }
}

/// Linear disk that is in between but has neither branch image in between:
/// it passes just below `inf I2` over `pre_B(0)` and just above `sup I1`
/// over `pre_A(a_u)`.
fn bh6_counterexample(m: &BlenderModel, alpha: f64) -> Option<String> {
    let ifs = CentralIfs::new(m.lambda, m.mu);
    let h = &m.horseshoe;
    let u = m.dims().u;
    let x1 = h.branch_b.unmap_unstable(&vec![0.0; u])?;
    let x2 = h.branch_a.unmap_unstable(&h.a_u)?;
    let eta = 1e-9 * ifs.superposition_end();
    let c1 = ifs.i2_start() - eta;
    let c2 = ifs.i1_end() + eta;
    let v: Vec<f64> = x2.iter().zip(&x1).map(|(a, b)| a - b).collect();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    if vv == 0.0 {
        return None;
    }
    let grad: Vec<f64> = v.iter().map(|x| (c2 - c1) * x / vv).collect();
    let lip = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
    if lip > alpha {
        return None;
    }
    let base = c1 - grad.iter().zip(&x1).map(|(g, x)| g * x).sum::<f64>();
    let disk = UUDisk::tilted(vec![0.0; m.dims().s], base, &grad);
    let reach: f64 = grad.iter().map(|g| g.abs()).sum();
    if base.abs() + reach > m.delta {
        return None;
    }
    let class = |d: &UUDisk| -> Option<PositionClass> {
        let to_p = d.central_at(&vec![0.0; u]);
        let to_q = d.central_at(&h.a_u) - m.q_central();
        Position::from_clearances(to_p, to_q, POSITION_TOL).ok().map(|p| p.class)
    };
    if class(&disk)? != PositionClass::Between {
        return None;
    }
    let a = class(&crate::disks::graph_transform(&disk, Branch::A, m))?;
    let b = class(&crate::disks::graph_transform(&disk, Branch::B, m))?;
    if a != PositionClass::Between && b != PositionClass::Between {
        Some(format!("in-between disk with lip {lip:.3e}: A-image {a:?}, B-image {b:?}"))
    } else {
        None
    }
}

pub fn splitting_rates<M: PiecewiseMap + ?Sized>(map: &M) -> SplittingRates {
    let m = map.model();
    let eps = map.c1_distance();
    let h = &m.horseshoe;
    let stable_contraction = h.branch_a.stable_norm().max(h.branch_b.stable_norm()) + eps;
    let unstable_expansion = min_singular(&h.branch_a.unstable).min(min_singular(&h.branch_b.unstable)) - eps;
    let central_min = m.lambda - eps;
    let central_max = m.lambda + eps;
    SplittingRates {
        stable_contraction,
        central_min,
        central_max,
        unstable_expansion,
        dominated: stable_contraction < 1.0 && 1.0 < central_min && central_max < unstable_expansion,
    }
}

/// Largest certified opening: the smallest of the disk-condition bounds.
pub fn alpha_admissible<M: PiecewiseMap + ?Sized>(map: &M) -> f64 {
    let m = map.model();
    let eps = map.c1_distance();
    bh4_alpha_bound(m, eps).min(bh5_alpha_bound(m, eps)).min(bh6_alpha_bound(m, eps))
}

/// Cone parameters chosen from the model: `alpha` is half the smallest of the
/// disk bounds.
pub fn auto_cones<M: PiecewiseMap + ?Sized>(map: &M, opts: &CertifyOptions) -> ConeParams {
    let bound = alpha_admissible(map);
    let alpha = if bound > 0.0 { (0.5 * bound).min(0.5) } else { 1e-3 };
    cones_for_alpha(map, alpha, opts)
}

/// `alpha'` halfway between the achieved image opening and `alpha`.
pub fn cones_for_alpha<M: PiecewiseMap + ?Sized>(map: &M, alpha: f64, opts: &CertifyOptions) -> ConeParams {
    let ratio = check_bh2(map, alpha, 0.5 * alpha, opts).ratio;
    let factor = if ratio.is_finite() { ((1.0 + ratio) / 2.0).min(0.999) } else { 0.999 };
    ConeParams { alpha, alpha_prime: alpha * factor.max(1e-3) }
}

/// Runs all six checks.
pub fn certify_blender<M: PiecewiseMap + ?Sized>(
    map: &M,
    cones: Option<ConeParams>,
    opts: &CertifyOptions,
) -> Result<BlenderCertificate> {
    let cones = cones.unwrap_or_else(|| auto_cones(map, opts));
    let (alpha, alpha_prime) = (cones.alpha, cones.alpha_prime);
    let mut conditions = BTreeMap::new();
    conditions.insert("BH1".to_string(), check_bh1(map));
    conditions.insert("BH2".to_string(), check_bh2(map, alpha, alpha_prime, opts).verdict);
    let (bh3, markov) = check_bh3(map);
    conditions.insert("BH3".to_string(), bh3);
    conditions.insert("BH4".to_string(), check_bh4(map, alpha).verdict);
    let (bh5, audit) = check_bh5(map, alpha, opts)?;
    conditions.insert("BH5".to_string(), bh5);
    conditions.insert("BH6".to_string(), check_bh6(map, alpha));
    let status = if conditions.values().all(|v| v.status == Status::Certified) {
        Status::Certified
    } else if conditions.values().any(|v| v.status == Status::Refuted) {
        Status::Refuted
    } else {
        Status::Inconclusive
    };
    let min_margin = conditions.values().map(|v| v.margin).fold(f64::INFINITY, f64::min);
    Ok(BlenderCertificate {
        status,
        conditions,
        alpha,
        alpha_prime,
        alpha_admissible: alpha_admissible(map),
        markov,
        splitting_rates: splitting_rates(map),
        c1_distance: map.c1_distance(),
        min_margin,
        audit,
        model_violations: map.model().audit(),
    })
}

/// Random affine disk with Lipschitz constant at most `alpha`, stable block
/// centred at `xs0`, base central value 0.
pub fn random_disk(rng: &mut impl Rng, dims: Dims, alpha: f64) -> UUDisk {
    let mut slope = DMatrix::from_fn(dims.s + 1, dims.u, |_, _| rng.gen_range(-1.0..1.0));
    let n = op_norm(&slope);
    if n > 0.0 {
        slope *= alpha * rng.gen_range(0.0..=1.0) / n;
    }
    let xs0: Vec<f64> = (0..dims.s).map(|_| rng.gen_range(-0.9..0.9)).collect();
    UUDisk::affine(xs0, 0.0, slope)
}

fn shifted(d: &UUDisk, dc: f64) -> UUDisk {
    match d.repr() {
        crate::disks::GraphRepr::Affine(g) => {
            let s = d.dims().s;
            let xs0: Vec<f64> = g.base.rows(0, s).iter().copied().collect();
            UUDisk::affine(xs0, g.base[s] + dc, g.slope.clone())
        }
        crate::disks::GraphRepr::Sampled(_) => {
            let dd = d.clone();
            UUDisk::sampled(d.dims(), crate::disks::DEFAULT_GRID, move |x| {
                let (xs, xc) = dd.eval(x);
                (xs, xc + dc)
            })
        }
    }
}

/// Whether an affine disk stays inside the reference cube.
fn inside_cube(d: &UUDisk, delta: f64) -> bool {
    match d.repr() {
        crate::disks::GraphRepr::Affine(g) => {
            let s = d.dims().s;
            (0..=s).all(|r| {
                let reach: f64 = g.slope.row(r).iter().map(|x| x.abs()).sum();
                let half = if r == s { delta } else { 1.0 };
                g.base[r].abs() + reach <= half
            })
        }
        crate::disks::GraphRepr::Sampled(_) => true,
    }
}

/// Random admissible disk of the requested class, relative to the continued manifolds.
pub fn random_disk_in_class<M: PiecewiseMap + ?Sized>(
    rng: &mut impl Rng,
    refs: &ReferenceLeaves<'_, M>,
    class: PositionClass,
    alpha: f64,
) -> Result<Option<UUDisk>> {
    let m = refs.map.model();
    let gap = refs.central_gap();
    for _ in 0..200 {
        let d0 = random_disk(rng, m.dims(), alpha);
        let c_p = refs.clearance(Saddle::P, &d0, &[])?.value;
        let c_q = refs.clearance(Saddle::Q, &d0, &[])?.value;
        // log-uniform clearances reach down to the tolerance scale
        let scale = 10f64.powf(-rng.gen_range(0.0..7.0));
        let offset = |room: f64| room * scale;
        let target = match class {
            PositionClass::MeetsP => -c_p,
            PositionClass::MeetsQ => -c_q,
            PositionClass::LeftOfP => -c_p - offset(m.delta),
            PositionClass::RightOfQ => -c_q + offset(m.delta),
            PositionClass::Between => {
                let left: bool = rng.gen();
                -c_p + if left { offset(0.5 * gap) } else { gap - offset(0.5 * gap) }
            }
        };
        let d = shifted(&d0, target);
        if !inside_cube(&d, m.delta) {
            continue;
        }
        match refs.position(&d, &[]) {
            Ok(p) if p.class == class => return Ok(Some(d)),
            _ => continue,
        }
    }
    Ok(None)
}

/// Transforms random admissible disks of every class by both branches and
/// checks every position law against the classification of the images.
pub fn audit_position_laws<M: PiecewiseMap + ?Sized>(map: &M, alpha: f64, per_class: usize, seed: u64) -> Result<AuditReport> {
    let refs = ReferenceLeaves::new(map)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AuditReport { worst_clearance: f64::INFINITY, ..Default::default() };
    for class in PositionClass::ALL {
        for _ in 0..per_class {
            let Some(d) = random_disk_in_class(&mut rng, &refs, class, alpha)? else {
                report.ambiguous += 1;
                continue;
            };
            report.disks += 1;
            let img_a = refs.position(&d, &[Branch::A]);
            let img_b = refs.position(&d, &[Branch::B]);
            let (ia, ib) = match (img_a, img_b) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    report.ambiguous += 1;
                    continue;
                }
            };
            let mut law = |holds: bool, clearance: f64, label: &str| {
                report.checks += 1;
                report.worst_clearance = report.worst_clearance.min(clearance);
                if !holds {
                    report.violations += 1;
                    report.first_violation.get_or_insert_with(|| {
                        format!("{label}: disk {class:?}, A-image {:?}, B-image {:?}", ia.class, ib.class)
                    });
                }
            };
            if class.right_of_p() {
                law(ia.class.right_of_p(), ia.to_p, "right of P stays right under A");
            }
            if class == PositionClass::LeftOfP {
                law(ia.class == PositionClass::LeftOfP, -ia.to_p, "left of P stays left under A");
            }
            if class == PositionClass::RightOfQ {
                law(ib.class == PositionClass::RightOfQ, ib.to_q, "right of Q stays right under B");
            }
            if class.left_of_q() {
                law(ib.class.left_of_q(), -ib.to_q, "left of Q stays left under B");
            }
            if matches!(class, PositionClass::LeftOfP | PositionClass::MeetsP) {
                law(ib.class == PositionClass::LeftOfP, -ib.to_p, "B sends left of or through P to the left");
            }
            if matches!(class, PositionClass::RightOfQ | PositionClass::MeetsQ) {
                law(ia.class == PositionClass::RightOfQ, ia.to_q, "A sends right of or through Q to the right");
            }
            if class == PositionClass::Between {
                let slack = |p: &Position| p.to_p.min(-p.to_q);
                let best = slack(&ia).max(slack(&ib));
                law(
                    ia.class == PositionClass::Between || ib.class == PositionClass::Between,
                    best,
                    "one image of an in-between disk is in between",
                );
            }
        }
    }
    if !report.worst_clearance.is_finite() {
        report.worst_clearance = 0.0;
    }
    Ok(report)
}

/// Convenience for callers holding only a model.
pub fn certify_model(m: &BlenderModel, opts: &CertifyOptions) -> Result<BlenderCertificate> {
    certify_blender(m, None, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_instance, AffineHorseshoe};

    fn quick() -> CertifyOptions {
        CertifyOptions { samples_per_class: 40, ..Default::default() }
    }

    #[test]
    fn default_instance_is_certified() {
        let m = default_instance();
        let c = certify_blender(&m, None, &quick()).unwrap();
        assert!(c.is_certified(), "{c:#?}");
        assert!(c.min_margin > 0.0);
        assert!((c.alpha - 0.00625).abs() < 1e-15);
        assert!((c.alpha_prime - 0.004375).abs() < 1e-15);
        assert!((c.condition("BH2").margin - 0.001875).abs() < 1e-12);
        assert!((c.condition("BH3").margin - (0.125 - 0.145 / 1.2)).abs() < 1e-12);
        assert!((c.condition("BH4").margin - 0.0125).abs() < 1e-12);
        assert!((c.condition("BH6").margin - ((1.0 / 12.0 - 1.0 / 60.0) / 2.0 - 0.0125)).abs() < 1e-12);
        assert!(c.splitting_rates.dominated);
        assert_eq!(c.audit.as_ref().unwrap().violations, 0);
    }

    #[test]
    fn bh1_examples() {
        let m = default_instance();
        let v = check_bh1(&m);
        assert!(v.is_certified());
        // domains [-1/3, 1/3] and [3/8, 7/8] are 1/24 apart
        assert!((v.margin - 1.0 / 24.0).abs() < 1e-15, "{v:?}");
        let mut h = m.horseshoe.clone();
        h.branch_a.stable[(0, 0)] = 0.9;
        let bad = BlenderModel::new_unchecked(AffineHorseshoe::new(h.dims, h.branch_a, h.branch_b).unwrap(), 1.2, 0.02, 0.125);
        assert_eq!(check_bh1(&bad).status, Status::Refuted);
        let far = m.with_params(1.2, 0.3, 0.125);
        assert_eq!(check_bh1(&far).status, Status::Refuted);
    }

    #[test]
    fn bh2_examples() {
        let m = default_instance();
        let o = check_bh2(&m, 0.2, 0.1, &CertifyOptions::default());
        assert!(o.verdict.is_certified());
        // uu factor 1.2/3 = 0.4 on branch A is the largest ratio
        assert!((o.ratio - 0.4).abs() < 1e-15);
        assert_eq!(check_bh2(&m, 0.1, 0.1, &CertifyOptions::default()).verdict.status, Status::Refuted);
        let h = &m.horseshoe;
        let mut a = h.branch_a.clone();
        let mut b = h.branch_b.clone();
        a.unstable[(0, 0)] = 3.0;
        b.unstable[(0, 0)] = 3.0;
        b.unstable_offset[0] = -2.0;
        b.domain = UBox::new(vec![1.0 / 3.0 + 0.01], vec![1.0]);
        let bad = BlenderModel::new_unchecked(AffineHorseshoe::new(h.dims, a, b).unwrap(), 3.5, 0.02, 0.125);
        assert_eq!(check_bh2(&bad, 0.2, 0.1, &CertifyOptions::default()).verdict.status, Status::Refuted);
    }

    #[test]
    fn bh3_examples() {
        let m = default_instance();
        let (v, boxes) = check_bh3(&m);
        assert!(v.is_certified());
        assert!((boxes.a.central_min + 0.125 / 1.2).abs() < 1e-15);
        assert!((boxes.a.central_max - 0.125 / 1.2).abs() < 1e-15);
        assert_eq!(boxes.a.unstable_min, vec![-1.0 / 3.0]);
        assert!((boxes.b.central_min - (-0.125 + 0.02) / 1.2).abs() < 1e-15);
        assert!((boxes.b.central_max - (0.125 + 0.02) / 1.2).abs() < 1e-15);
        let v = check_bh3(&m.with_params(1.2, 0.024, 0.125)).0;
        assert!(v.is_certified());
        assert!((v.margin - (0.125 - 0.149 / 1.2)).abs() < 1e-12);
        assert_eq!(check_bh3(&m.with_params(1.2, 0.03, 0.125)).0.status, Status::Refuted);
        assert_eq!(check_bh3(&m.with_params(1.2, 0.025, 0.125)).0.status, Status::Refuted);
    }

    #[test]
    fn bh4_examples() {
        let m = default_instance();
        let o = check_bh4(&m, 0.00625);
        assert!((o.alpha_admissible - 0.0125).abs() < 1e-15);
        assert!(o.verdict.is_certified());
        assert!(check_bh4(&m, 0.0).verdict.is_certified());
        assert_eq!(check_bh4(&m, 0.05).verdict.status, Status::Inconclusive);
        assert_eq!(check_bh4(&m.with_params(1.2, 0.03, 0.125), 0.001).verdict.status, Status::Refuted);
    }

    #[test]
    fn bh5_item_margins() {
        let m = default_instance();
        // item 5: 0.02 - 1.2 * alpha * 0.625, item 6: 0.02 - 1.2 * alpha * (5/6 - 5/18)
        let alpha = 0.00625;
        let expect = (0.02 - 1.2 * alpha * 0.625f64).min(0.02 - 1.2 * alpha * (5.0 / 6.0 - 5.0 / 18.0));
        let (v, audit) = check_bh5(&m, alpha, &quick()).unwrap();
        assert!(v.is_certified());
        assert!((v.margin - expect).abs() < 1e-15);
        assert_eq!(audit.unwrap().violations, 0);
        let flipped = m.with_params(-1.2, 0.02, 0.125);
        assert_eq!(check_bh5(&flipped, alpha, &quick()).unwrap().0.status, Status::Refuted);
    }

    #[test]
    fn bh6_examples() {
        let m = default_instance();
        let v = check_bh6(&m, 0.0125);
        assert!(v.is_certified());
        assert!((v.margin - ((1.0 / 12.0 - 1.0 / 60.0) / 2.0 - 0.025)).abs() < 1e-12);
        assert!(check_bh6(&m, 0.0).is_certified());
        let steep = m.with_params(1.99, 0.02, 0.125);
        assert_eq!(check_bh6(&steep, 1e-3).status, Status::Refuted);
        assert!(bh6_alpha_bound(&steep, 0.0) < 3e-5);
        assert_eq!(check_bh6(&m.with_params(2.0, 0.02, 0.125), 0.001).status, Status::Refuted);
    }

    #[test]
    fn expanding_center_is_required() {
        let m = default_instance().with_params(0.9, 0.02, 0.125);
        let c = certify_blender(&m, None, &quick()).unwrap();
        assert_eq!(c.status, Status::Refuted);
    }

    #[test]
    fn monotone_in_cone_parameters() {
        let m = default_instance();
        let o = CertifyOptions { samples_per_class: 0, ..Default::default() };
        let c = certify_blender(&m, Some(ConeParams::new(0.01, 0.006).unwrap()), &o).unwrap();
        assert!(c.is_certified());
        let c = certify_blender(&m, Some(ConeParams::new(0.008, 0.007).unwrap()), &o).unwrap();
        assert!(c.is_certified());
    }

    #[test]
    fn certificate_json_has_sorted_conditions() {
        let m = default_instance();
        let c = certify_blender(&m, None, &CertifyOptions { samples_per_class: 2, ..Default::default() }).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        let keys: Vec<_> = v["conditions"].as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["BH1", "BH2", "BH3", "BH4", "BH5", "BH6"]);
        assert_eq!(v["status"], "certified");
    }
}
