//! uu-disks and s-disks as graphs over the unstable (resp. stable) cube.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::axioms::bh4_alpha_bound;
use crate::error::{Error, Result};
use crate::geometry::{op_norm, AmbientPoint, Dims};
use crate::map::PiecewiseMap;
use crate::model::{BlenderModel, Branch};

/// Absolute tolerance (central units) for "meets" classifications.
pub const POSITION_TOL: f64 = 1e-10;

/// Grid resolution used when a disk has to be sampled.
pub const DEFAULT_GRID: usize = 65;

/// Inflation applied to sampled difference quotients.
pub const LIP_INFLATION: f64 = 1.5;

/// Regular grid over `[-1,1]^d_in` carrying `d_out` values per node,
/// evaluated by multilinear interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledGraph {
    pub dim_in: usize,
    pub dim_out: usize,
    pub points_per_axis: usize,
    /// Node-major: node `k` occupies `values[k*dim_out..(k+1)*dim_out]`,
    /// with the first input axis varying fastest.
    pub values: Vec<f64>,
}

impl SampledGraph {
    pub fn from_fn(dim_in: usize, dim_out: usize, n: usize, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        assert!(n >= 2, "grid needs at least two points per axis");
        let total = n.pow(dim_in as u32);
        let mut values = Vec::with_capacity(total * dim_out);
        let mut x = vec![0.0; dim_in];
        for k in 0..total {
            let mut r = k;
            for xi in x.iter_mut() {
                *xi = node(r % n, n);
                r /= n;
            }
            let v = f(&x);
            debug_assert_eq!(v.len(), dim_out);
            values.extend(v);
        }
        Self { dim_in, dim_out, points_per_axis: n, values }
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.points_per_axis - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim_in as u32)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let n = self.points_per_axis;
        let h = self.spacing();
        let mut base = 0usize;
        let mut stride = 1usize;
        let mut frac = Vec::with_capacity(self.dim_in);
        let mut strides = Vec::with_capacity(self.dim_in);
        for xi in x.iter().take(self.dim_in) {
            let pos = ((xi.clamp(-1.0, 1.0) + 1.0) / h).min((n - 1) as f64);
            let i = (pos.floor() as usize).min(n - 2);
            frac.push(pos - i as f64);
            base += i * stride;
            strides.push(stride);
            stride *= n;
        }
        let mut out = vec![0.0; self.dim_out];
        for corner in 0..(1usize << self.dim_in) {
            let mut w = 1.0;
            let mut idx = base;
            for (a, (f, s)) in frac.iter().zip(&strides).enumerate() {
                if corner >> a & 1 == 1 {
                    w *= f;
                    idx += s;
                } else {
                    w *= 1.0 - f;
                }
            }
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&self.values[idx * self.dim_out..(idx + 1) * self.dim_out]) {
                *o += w * v;
            }
        }
        out
    }

    /// Inflated forward-difference Lipschitz estimate.
    pub fn lipschitz(&self) -> f64 {
        let n = self.points_per_axis;
        let h = self.spacing();
        let mut worst: f64 = 0.0;
        for k in 0..self.node_count() {
            let mut sq = 0.0;
            let mut stride = 1;
            let mut r = k;
            for _ in 0..self.dim_in {
                let i = r % n;
                r /= n;
                let (lo, hi) = if i + 1 < n { (k, k + stride) } else { (k - stride, k) };
                for o in 0..self.dim_out {
                    let d = (self.values[hi * self.dim_out + o] - self.values[lo * self.dim_out + o]) / h;
                    sq += d * d;
                }
                stride *= n;
            }
            worst = worst.max(sq.sqrt());
        }
        LIP_INFLATION * worst
    }
}

fn node(i: usize, n: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / (n - 1) as f64
}

/// `x -> base + slope * x`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineGraph {
    pub base: DVector<f64>,
    pub slope: DMatrix<f64>,
}

impl AffineGraph {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (&self.base + &self.slope * DVector::from_column_slice(x)).iter().copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphRepr {
    Affine(AffineGraph),
    Sampled(SampledGraph),
}

impl GraphRepr {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            GraphRepr::Affine(a) => a.eval(x),
            GraphRepr::Sampled(s) => s.eval(x),
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            GraphRepr::Affine(a) => op_norm(&a.slope),
            GraphRepr::Sampled(s) => s.lipschitz(),
        }
    }
}

/// A u-dimensional disk `x^u -> (x^s, x^c)` over the full unstable cube.
#[derive(Clone, Debug, PartialEq)]
pub struct UUDisk {
    dims: Dims,
    repr: GraphRepr,
    lip: f64,
}

impl UUDisk {
    /// `slope` is `(s+1) x u`; its last row is the central slope.
    pub fn affine(xs0: Vec<f64>, xc0: f64, slope: DMatrix<f64>) -> Self {
        let dims = Dims { s: xs0.len(), u: slope.ncols() };
        assert_eq!(slope.nrows(), dims.s + 1, "slope must have s+1 rows");
        let mut base = DVector::zeros(dims.s + 1);
        base.rows_mut(0, dims.s).copy_from_slice(&xs0);
        base[dims.s] = xc0;
        let repr = GraphRepr::Affine(AffineGraph { base, slope });
        let lip = repr.lipschitz();
        Self { dims, repr, lip }
    }

    /// Disk whose central coordinate is `xc0 + central_slope · x^u` and whose
    /// stable coordinates are constant.
    pub fn tilted(xs0: Vec<f64>, xc0: f64, central_slope: &[f64]) -> Self {
        let s = xs0.len();
        let u = central_slope.len();
        let mut slope = DMatrix::zeros(s + 1, u);
        for (j, v) in central_slope.iter().enumerate() {
            slope[(s, j)] = *v;
        }
        Self::affine(xs0, xc0, slope)
    }

    /// Disk parallel to the strong unstable direction.
    pub fn flat(xs0: Vec<f64>, xc0: f64, u: usize) -> Self {
        Self::tilted(xs0, xc0, &vec![0.0; u])
    }

    pub fn sampled(dims: Dims, n: usize, mut f: impl FnMut(&[f64]) -> (Vec<f64>, f64)) -> Self {
        let g = SampledGraph::from_fn(dims.u, dims.s + 1, n, |x| {
            let (mut xs, xc) = f(x);
            xs.push(xc);
            xs
        });
        let repr = GraphRepr::Sampled(g);
        let lip = repr.lipschitz();
        Self { dims, repr, lip }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn repr(&self) -> &GraphRepr {
        &self.repr
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.repr, GraphRepr::Affine(_))
    }

    pub fn eval(&self, xu: &[f64]) -> (Vec<f64>, f64) {
        let mut v = self.repr.eval(xu);
        let xc = v.pop().expect("graph has a central row");
        (v, xc)
    }

    pub fn central_at(&self, xu: &[f64]) -> f64 {
        self.eval(xu).1
    }

    pub fn point(&self, xu: &[f64]) -> AmbientPoint {
        let (xs, xc) = self.eval(xu);
        AmbientPoint::new(xs, xc, xu.to_vec())
    }

    pub fn to_sampled(&self, n: usize) -> UUDisk {
        UUDisk::sampled(self.dims, n, |x| self.eval(x))
    }

    pub fn to_record(&self, name: &str) -> DiskRecord {
        DiskRecord::new(name, "uu", &self.repr, self.lip)
    }
}

/// An s-dimensional disk `x^s -> (x^c, x^u)` over the full stable cube.
#[derive(Clone, Debug, PartialEq)]
pub struct SDisk {
    dims: Dims,
    repr: GraphRepr,
    lip: f64,
}

impl SDisk {
    /// `slope` is `(1+u) x s`; row 0 is the central slope.
    pub fn affine(xc0: f64, xu0: Vec<f64>, slope: DMatrix<f64>) -> Self {
        let dims = Dims { s: slope.ncols(), u: xu0.len() };
        assert_eq!(slope.nrows(), dims.u + 1, "slope must have 1+u rows");
        let mut base = DVector::zeros(dims.u + 1);
        base[0] = xc0;
        base.rows_mut(1, dims.u).copy_from_slice(&xu0);
        let repr = GraphRepr::Affine(AffineGraph { base, slope });
        let lip = repr.lipschitz();
        Self { dims, repr, lip }
    }

    pub fn flat(dims: Dims, xc0: f64, xu0: Vec<f64>) -> Self {
        Self::affine(xc0, xu0, DMatrix::zeros(dims.u + 1, dims.s))
    }

    pub fn sampled(dims: Dims, n: usize, mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>)) -> Self {
        let g = SampledGraph::from_fn(dims.s, dims.u + 1, n, |x| {
            let (xc, xu) = f(x);
            let mut v = Vec::with_capacity(dims.u + 1);
            v.push(xc);
            v.extend(xu);
            v
        });
        let repr = GraphRepr::Sampled(g);
        let lip = repr.lipschitz();
        Self { dims, repr, lip }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn eval(&self, xs: &[f64]) -> (f64, Vec<f64>) {
        let mut v = self.repr.eval(xs);
        let xu = v.split_off(1);
        (v[0], xu)
    }

    pub fn central_at(&self, xs: &[f64]) -> f64 {
        self.eval(xs).0
    }

    pub fn to_record(&self, name: &str) -> DiskRecord {
        DiskRecord::new(name, "s", &self.repr, self.lip)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PositionClass {
    LeftOfP,
    MeetsP,
    Between,
    MeetsQ,
    RightOfQ,
}

impl PositionClass {
    pub const ALL: [PositionClass; 5] = [
        PositionClass::LeftOfP,
        PositionClass::MeetsP,
        PositionClass::Between,
        PositionClass::MeetsQ,
        PositionClass::RightOfQ,
    ];

    /// Strictly right of `W^s_loc(P)`.
    pub fn right_of_p(self) -> bool {
        matches!(self, PositionClass::Between | PositionClass::MeetsQ | PositionClass::RightOfQ)
    }

    /// Strictly left of `W^s_loc(Q)`.
    pub fn left_of_q(self) -> bool {
        matches!(self, PositionClass::LeftOfP | PositionClass::MeetsP | PositionClass::Between)
    }
}

/// Position of a uu-disk with its signed central clearances to the two
/// local stable manifolds (disk minus manifold).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub class: PositionClass,
    pub to_p: f64,
    pub to_q: f64,
}

impl Position {
    pub fn from_clearances(to_p: f64, to_q: f64, tol: f64) -> Result<Position> {
        let meets_p = to_p.abs() <= tol;
        let meets_q = to_q.abs() <= tol;
        let class = match (meets_p, meets_q) {
            (true, true) => None,
            (true, false) if to_q < 0.0 => Some(PositionClass::MeetsP),
            (false, true) if to_p > 0.0 => Some(PositionClass::MeetsQ),
            (false, false) if to_p < 0.0 && to_q < 0.0 => Some(PositionClass::LeftOfP),
            (false, false) if to_p > 0.0 && to_q > 0.0 => Some(PositionClass::RightOfQ),
            (false, false) if to_p > 0.0 && to_q < 0.0 => Some(PositionClass::Between),
            _ => None,
        };
        class
            .map(|class| Position { class, to_p, to_q })
            .ok_or_else(|| Error::Inadmissible(format!("clearances to P = {to_p:e} and to Q = {to_q:e} are inconsistent")))
    }
}

/// Classifies `d` relative to the flat local stable manifolds of the model.
/// Refuses disks steeper than the model's admissibility bound.
pub fn classify_position(d: &UUDisk, m: &BlenderModel) -> Result<Position> {
    classify_position_tol(d, m, POSITION_TOL)
}

pub fn classify_position_tol(d: &UUDisk, m: &BlenderModel, tol: f64) -> Result<Position> {
    let bound = bh4_alpha_bound(m, 0.0);
    if d.lip() > bound {
        return Err(Error::Inadmissible(format!("lip {} exceeds admissible {}", d.lip(), bound)));
    }
    let to_p = d.central_at(&vec![0.0; m.dims().u]);
    let to_q = d.central_at(&m.horseshoe.a_u) - m.q_central();
    Position::from_clearances(to_p, to_q, tol)
}

/// Image of `d` under one affine branch, as a graph over the full unstable cube.
pub fn graph_transform(d: &UUDisk, b: Branch, m: &BlenderModel) -> UUDisk {
    let dims = m.dims();
    let br = m.horseshoe.branch(b);
    let uinv = br.unstable.clone().try_inverse().expect("unstable branch matrices are invertible");
    let shift = -m.central_shift(b);
    match d.repr() {
        GraphRepr::Affine(g) => {
            // blockdiag(S, lambda)
            let mut lin = DMatrix::zeros(dims.s + 1, dims.s + 1);
            lin.view_mut((0, 0), (dims.s, dims.s)).copy_from(&br.stable);
            lin[(dims.s, dims.s)] = m.lambda;
            let mut off = DVector::zeros(dims.s + 1);
            off.rows_mut(0, dims.s).copy_from(&br.stable_offset);
            off[dims.s] = shift;
            let pre0 = -(&uinv * &br.unstable_offset);
            let base = &lin * (&g.base + &g.slope * pre0) + off;
            let slope = &lin * &g.slope * &uinv;
            let xs0 = base.rows(0, dims.s).iter().copied().collect();
            let mut out = UUDisk::affine(xs0, base[dims.s], slope);
            out.dims = dims;
            out
        }
        GraphRepr::Sampled(g) => UUDisk::sampled(dims, g.points_per_axis, |xi| {
            let xu = br.unmap_unstable(xi).expect("invertible");
            let (xs, xc) = d.eval(&xu);
            (br.map_stable(&xs), m.lambda * xc + shift)
        }),
    }
}

/// Graph transform for any map with the model's branch structure. Affine maps
/// keep affine disks affine; otherwise the image is sampled on `n` points per axis.
pub fn graph_transform_map<M: PiecewiseMap + ?Sized>(d: &UUDisk, b: Branch, map: &M, n: usize) -> Result<UUDisk> {
    if map.is_affine() {
        return Ok(graph_transform(d, b, map.model()));
    }
    let dims = map.dims();
    let br = map.model().horseshoe.branch(b);
    let mut failure = None;
    let out = UUDisk::sampled(dims, n, |xi| {
        let mut xu = br.unmap_unstable(xi).expect("invertible");
        let mut converged = false;
        for _ in 0..50 {
            let p = d.point(&xu);
            let img = map.eval_branch(b, &p);
            let r = DVector::from_iterator(dims.u, img.xu.iter().zip(xi).map(|(a, c)| a - c));
            let jac = map.jacobian_branch(b, &p);
            let juu = jac.view((dims.s + 1, dims.s + 1), (dims.u, dims.u)).clone_owned();
            let Some(step) = juu.lu().solve(&r) else { break };
            for (x, dx) in xu.iter_mut().zip(step.iter()) {
                *x -= dx;
            }
            if step.amax() < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged && failure.is_none() {
            failure = Some(xi.to_vec());
        }
        let img = map.eval_branch(b, &d.point(&xu));
        (img.xs, img.xc)
    });
    match failure {
        Some(x) => Err(Error::NoConvergence(format!("graph transform preimage at {x:?}"))),
        None => Ok(out),
    }
}

/// Serializable description of a disk for plotting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskRecord {
    pub name: String,
    /// `"uu"` or `"s"`.
    pub kind: String,
    pub representation: String,
    pub lip: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    /// Row-major.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points_per_axis: Option<usize>,
    /// One entry per grid node: the graph value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<f64>>>,
}

impl DiskRecord {
    fn new(name: &str, kind: &str, repr: &GraphRepr, lip: f64) -> Self {
        let mut r = DiskRecord {
            name: name.to_string(),
            kind: kind.to_string(),
            representation: String::new(),
            lip,
            base: None,
            slope: None,
            points_per_axis: None,
            values: None,
        };
        match repr {
            GraphRepr::Affine(a) => {
                r.representation = "affine".into();
                r.base = Some(a.base.iter().copied().collect());
                r.slope = Some(a.slope.row_iter().map(|row| row.iter().copied().collect()).collect());
            }
            GraphRepr::Sampled(s) => {
                r.representation = "sampled".into();
                r.points_per_axis = Some(s.points_per_axis);
                r.values = Some(s.values.chunks(s.dim_out).map(|c| c.to_vec()).collect());
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn position_examples() {
        let m = default_instance();
        let p = classify_position(&UUDisk::flat(vec![0.0], 0.05, 1), &m).unwrap();
        assert_eq!(p.class, PositionClass::Between);
        let p = classify_position(&UUDisk::flat(vec![0.0], 0.0, 1), &m).unwrap();
        assert_eq!(p.class, PositionClass::MeetsP);
        assert_eq!(p.to_p, 0.0);
        // xc = 0.02 + 0.01 xu: to_p = 0.02, to_q = 0.02 + 0.01 * 5/6 - 0.1
        let d = UUDisk::tilted(vec![0.0], 0.02, &[0.01]);
        let p = classify_position(&d, &m).unwrap();
        assert_eq!(p.class, PositionClass::Between);
        assert!((p.to_p - 0.02).abs() < 1e-15);
        assert!((p.to_q - (0.02 + 0.01 * 5.0 / 6.0 - 0.1)).abs() < 1e-15);
        let p = classify_position(&UUDisk::flat(vec![0.0], m.q_central(), 1), &m).unwrap();
        assert_eq!(p.class, PositionClass::MeetsQ);
        let p = classify_position(&UUDisk::flat(vec![0.0], -0.01, 1), &m).unwrap();
        assert_eq!(p.class, PositionClass::LeftOfP);
        let p = classify_position(&UUDisk::flat(vec![0.0], 0.11, 1), &m).unwrap();
        assert_eq!(p.class, PositionClass::RightOfQ);
    }

    #[test]
    fn steep_disks_are_refused() {
        let m = default_instance();
        let d = UUDisk::tilted(vec![0.0], 0.05, &[0.2]);
        assert!(matches!(classify_position(&d, &m), Err(Error::Inadmissible(_))));
        assert!(matches!(Position::from_clearances(-0.01, 0.02, POSITION_TOL), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn flat_transform_examples() {
        let m = default_instance();
        let d = UUDisk::flat(vec![0.4], 0.05, 1);
        let a = graph_transform(&d, Branch::A, &m);
        let (xs, xc) = a.eval(&[0.3]);
        assert!((xc - 0.06).abs() < 1e-15 && (xs[0] - 0.1).abs() < 1e-15);
        assert!(a.is_affine() && a.lip() == 0.0);
        let b = graph_transform(&d, Branch::B, &m);
        let (xs, xc) = b.eval(&[-0.7]);
        assert!((xc - 0.04).abs() < 1e-15 && (xs[0] - 0.725).abs() < 1e-15);
    }

    #[test]
    fn lip_contraction_example() {
        let m = default_instance();
        let d = UUDisk::tilted(vec![0.0], 0.05, &[0.2]);
        let a = graph_transform(&d, Branch::A, &m);
        assert!(a.lip() <= 0.2 * 1.2 / 3.0 + 1e-15);
        assert!((a.lip() - 0.08).abs() < 1e-15);
    }

    #[test]
    fn transform_matches_pointwise_images() {
        let m = default_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let d = UUDisk::affine(
                vec![rng.gen_range(-0.5..0.5)],
                rng.gen_range(0.0..0.1),
                DMatrix::from_column_slice(2, 1, &[rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01)]),
            );
            for b in Branch::BOTH {
                let img = graph_transform(&d, b, &m);
                let dom = &m.horseshoe.branch(b).domain;
                let xu = rng.gen_range(dom.min[0]..dom.max[0]);
                let y = m.apply_branch(b, &d.point(&[xu])).unwrap();
                let (xs, xc) = img.eval(&y.xu);
                assert!((xs[0] - y.xs[0]).abs() < 1e-14 && (xc - y.xc).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sampled_and_affine_pipelines_agree() {
        let m = default_instance();
        let d = UUDisk::affine(vec![0.2], 0.03, DMatrix::from_column_slice(2, 1, &[0.004, -0.006]));
        let s = d.to_sampled(DEFAULT_GRID);
        assert!(s.lip() >= d.lip() - 1e-15);
        for b in Branch::BOTH {
            let ia = graph_transform(&d, b, &m);
            let is = graph_transform(&s, b, &m);
            let isg = graph_transform_map(&s, b, &m, DEFAULT_GRID).unwrap();
            for k in 0..=20 {
                let x = -1.0 + 0.1 * k as f64;
                let (a, ac) = ia.eval(&[x]);
                let (b1, bc) = is.eval(&[x]);
                // linear data interpolates exactly
                assert!((a[0] - b1[0]).abs() < 1e-14 && (ac - bc).abs() < 1e-14);
                assert!((isg.central_at(&[x]) - ac).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sampled_interpolation_error_is_bounded() {
        // curved disk: central = 0.05 + 0.01 x^2; linear interpolation error <= h^2/8 * 0.02
        let d = UUDisk::sampled(Dims { s: 1, u: 1 }, DEFAULT_GRID, |x| (vec![0.0], 0.05 + 0.01 * x[0] * x[0]));
        let h = 2.0 / 64.0;
        for k in 0..=997 {
            let x = -1.0 + 2.0 * k as f64 / 997.0;
            assert!((d.central_at(&[x]) - (0.05 + 0.01 * x * x)).abs() <= h * h / 8.0 * 0.02 + 1e-16);
        }
        assert!(d.lip() >= 0.02 && d.lip() <= 1.5 * 0.02 * 1.0001);
    }

    #[test]
    fn two_dimensional_grid_interpolates_bilinear_data() {
        let g = SampledGraph::from_fn(2, 1, 5, |x| vec![1.0 + 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[0] * x[1]]);
        for (a, b) in [(0.3, -0.7), (-1.0, 1.0), (0.99, 0.01)] {
            let v = g.eval(&[a, b])[0];
            assert!((v - (1.0 + 2.0 * a - 3.0 * b + 0.5 * a * b)).abs() < 1e-14);
        }
    }

    #[test]
    fn record_export() {
        let d = UUDisk::tilted(vec![0.0], 0.02, &[0.01]);
        let r = d.to_record("tilted");
        assert_eq!(r.representation, "affine");
        assert_eq!(r.slope.as_ref().unwrap(), &vec![vec![0.0], vec![0.01]]);
        let s = d.to_sampled(3).to_record("tilted");
        assert_eq!(s.values.as_ref().unwrap().len(), 3);
        let json = serde_json::to_value(&s).unwrap();
        assert!(json.get("slope").is_none());
    }
}
