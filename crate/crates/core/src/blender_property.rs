//! Witnesses that an in-between uu-disk meets the local stable set.
//!
//! The disk itself is followed forward: at every step a branch is chosen
//! whose image disk is again in between, so the images never leave the
//! cube. The witness orbit is read off the image disks over the pullback of
//! a fixed unstable coordinate; consecutive points differ from exact images
//! only by rounding, which is checked step by step.

use serde::{Deserialize, Serialize};

use crate::central_reduction::{BranchPolicy, CentralIfs};
use crate::disks::{classify_position, graph_transform, PositionClass, UUDisk};
use crate::error::{Error, Result};
use crate::geometry::AmbientPoint;
use crate::model::{word_string, BlenderModel, Branch};

pub const DEFAULT_STEPS: usize = 200;
/// Largest accepted distance between `f(x_j)` and `x_{j+1}`.
pub const STEP_DEFECT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionWitness {
    pub point: AmbientPoint,
    pub itinerary: String,
    pub steps: usize,
    /// Largest distance of an orbit point from the closed cube.
    pub forward_orbit_max_excursion: f64,
    /// Largest step defect `|f(x_j) - x_{j+1}|`.
    pub residual: f64,
    /// Distance from the witness to a true orbit with the same itinerary.
    pub compounding_bound: f64,
    /// Smallest central distance of an image disk to either reference manifold.
    pub min_clearance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<Vec<AmbientPoint>>,
}

fn pick(d: &UUDisk, m: &BlenderModel, policy: BranchPolicy, step: usize) -> Result<(Branch, UUDisk, f64)> {
    let order = match policy {
        BranchPolicy::PreferA => [Branch::A, Branch::B],
        BranchPolicy::PreferB => [Branch::B, Branch::A],
        BranchPolicy::Midpoint => {
            let rep = 0.5 * (d.central_at(&vec![0.0; m.dims().u]) + d.central_at(&m.horseshoe.a_u));
            let ifs = CentralIfs::new(m.lambda, m.mu);
            let first = ifs.choose_branch(rep.clamp(0.0, ifs.superposition_end()), BranchPolicy::Midpoint)?;
            [first, first.other()]
        }
    };
    for b in order {
        let img = graph_transform(d, b, m);
        let pos = classify_position(&img, m)?;
        if pos.class == PositionClass::Between {
            return Ok((b, img, pos.to_p.min(-pos.to_q)));
        }
    }
    Err(Error::NoAdmissibleBranch(step))
}

/// Follows `d` for `n_steps` and returns a point of `d` whose orbit stays in the cube.
pub fn intersect_disk(d: &UUDisk, m: &BlenderModel, n_steps: usize, policy: BranchPolicy) -> Result<IntersectionWitness> {
    let pos = classify_position(d, m)?;
    let dims = m.dims();
    let (word, disks, min_clearance) = match pos.class {
        PositionClass::MeetsP | PositionClass::MeetsQ => {
            let b = if pos.class == PositionClass::MeetsP { Branch::A } else { Branch::B };
            let mut disks = vec![d.clone()];
            for _ in 0..n_steps {
                let next = graph_transform(disks.last().expect("not empty"), b, m);
                disks.push(next);
            }
            (vec![b; n_steps], disks, 0.0)
        }
        PositionClass::Between => {
            let mut word = Vec::with_capacity(n_steps);
            let mut disks = vec![d.clone()];
            let mut clear = pos.to_p.min(-pos.to_q);
            for j in 0..n_steps {
                let (b, img, c) = pick(disks.last().expect("not empty"), m, policy, j)?;
                word.push(b);
                disks.push(img);
                clear = clear.min(c);
            }
            (word, disks, clear)
        }
        other => return Err(Error::InvalidParameter(format!("disk is {other:?}, not in between"))),
    };

    // Terminal unstable coordinate: the saddle's own for the trivial cases.
    let mut xu = match pos.class {
        PositionClass::MeetsQ => m.horseshoe.a_u.clone(),
        _ => vec![0.0; dims.u],
    };
    let mut path = vec![xu.clone()];
    for b in word.iter().rev() {
        xu = m.horseshoe.branch(*b).unmap_unstable(&xu).expect("invertible");
        path.push(xu.clone());
    }
    path.reverse();
    let orbit: Vec<AmbientPoint> = disks.iter().zip(&path).map(|(dk, u)| dk.point(u)).collect();

    let cube = m.cube();
    let mut residual: f64 = 0.0;
    let mut excursion: f64 = 0.0;
    for (j, b) in word.iter().enumerate() {
        let img = m.map_branch(*b, &orbit[j]);
        let defect = img.distance(&orbit[j + 1]);
        if defect > STEP_DEFECT_TOL {
            return Err(Error::NoConvergence(format!("step {j}: orbit defect {defect:e}")));
        }
        residual = residual.max(defect);
    }
    for p in &orbit {
        excursion = excursion.max(cube.excursion(p));
    }
    if excursion > STEP_DEFECT_TOL {
        return Err(Error::OutsideCube);
    }
    let compounding_bound = residual * m.lambda / (m.lambda - 1.0);
    Ok(IntersectionWitness {
        point: orbit[0].clone(),
        itinerary: word_string(&word),
        steps: word.len(),
        forward_orbit_max_excursion: excursion,
        residual,
        compounding_bound,
        min_clearance,
        orbit: None,
    })
}

/// Like [`intersect_disk`], keeping the orbit for export.
pub fn intersect_disk_with_orbit(d: &UUDisk, m: &BlenderModel, n_steps: usize, policy: BranchPolicy) -> Result<IntersectionWitness> {
    let mut w = intersect_disk(d, m, n_steps, policy)?;
    let mut orbit = vec![w.point.clone()];
    let word: Vec<Branch> = w.itinerary.chars().map(|c| if c == 'A' { Branch::A } else { Branch::B }).collect();
    for b in word {
        let next = m.map_branch(b, orbit.last().expect("not empty"));
        orbit.push(next);
    }
    w.orbit = Some(orbit);
    Ok(w)
}
