//! One-dimensional central dynamics `g_A(x) = lambda x`, `g_B(x) = lambda x - mu`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Branch;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralIfs {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    OutsideLeft,
    BoundaryP,
    I1Only,
    Overlap,
    I2Only,
    BoundaryQ,
    OutsideRight,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    #[default]
    PreferA,
    PreferB,
    Midpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub word: Vec<Branch>,
    /// `k + 1` values, starting with the initial point.
    pub orbit: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub certified: bool,
    /// `sup I1 - inf I2`.
    pub overlap_width: f64,
    /// `lambda sup I1 - sup J`; zero in exact arithmetic.
    pub right_defect: f64,
    /// `lambda inf I2 - mu - inf J`; zero in exact arithmetic.
    pub left_defect: f64,
}

impl CentralIfs {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Self { lambda, mu }
    }

    fn refusal(&self) -> Option<String> {
        if !(self.lambda > 1.0 && self.lambda < 2.0) {
            Some(format!("lambda = {} outside (1, 2)", self.lambda))
        } else if !(self.mu > 0.0) {
            Some(format!("mu = {} is not positive", self.mu))
        } else {
            None
        }
    }

    /// `sup J = mu / (lambda - 1)`, the fixed point of `g_B`.
    pub fn superposition_end(&self) -> f64 {
        self.mu / (self.lambda - 1.0)
    }

    /// `sup I1 = mu / (lambda (lambda - 1))`.
    pub fn i1_end(&self) -> f64 {
        self.mu / (self.lambda * (self.lambda - 1.0))
    }

    /// `inf I2 = mu / lambda`.
    pub fn i2_start(&self) -> f64 {
        self.mu / self.lambda
    }

    pub fn overlap_width(&self) -> f64 {
        self.i1_end() - self.i2_start()
    }

    pub fn apply(&self, b: Branch, x: f64) -> f64 {
        match b {
            Branch::A => self.lambda * x,
            Branch::B => self.lambda * x - self.mu,
        }
    }

    pub fn classify(&self, x: f64) -> Region {
        let j = self.superposition_end();
        if x == 0.0 {
            Region::BoundaryP
        } else if x == j {
            Region::BoundaryQ
        } else if x < 0.0 {
            Region::OutsideLeft
        } else if x > j {
            Region::OutsideRight
        } else if x < self.i2_start() {
            Region::I1Only
        } else if x > self.i1_end() {
            Region::I2Only
        } else {
            Region::Overlap
        }
    }

    pub fn choose_branch(&self, x: f64, policy: BranchPolicy) -> Result<Branch> {
        Ok(match self.classify(x) {
            Region::OutsideLeft | Region::OutsideRight => return Err(Error::OutsideSuperposition(x)),
            Region::BoundaryP | Region::I1Only => Branch::A,
            Region::BoundaryQ | Region::I2Only => Branch::B,
            Region::Overlap => match policy {
                BranchPolicy::PreferA => Branch::A,
                BranchPolicy::PreferB => Branch::B,
                BranchPolicy::Midpoint => {
                    if x < 0.5 * (self.i2_start() + self.i1_end()) {
                        Branch::A
                    } else {
                        Branch::B
                    }
                }
            },
        })
    }

    pub fn itinerary(&self, x: f64, k: usize, policy: BranchPolicy) -> Result<Itinerary> {
        let mut orbit = Vec::with_capacity(k + 1);
        let mut word = Vec::with_capacity(k);
        let mut cur = x;
        orbit.push(cur);
        for _ in 0..k {
            let b = self.choose_branch(cur, policy)?;
            // Endpoint images can leave [0, sup J] by one rounding step.
            cur = self.apply(b, cur).clamp(0.0, self.superposition_end());
            word.push(b);
            orbit.push(cur);
        }
        Ok(Itinerary { word, orbit })
    }

    /// Checks `g_A(cl I1) ∪ g_B(cl I2) ⊇ cl J` and reports the overlap.
    pub fn covering_check(&self) -> Result<Covering> {
        if let Some(r) = self.refusal() {
            return Err(Error::Refused(r));
        }
        let j = self.superposition_end();
        let right_defect = self.lambda * self.i1_end() - j;
        let left_defect = self.lambda * self.i2_start() - self.mu;
        let slack = 4.0 * f64::EPSILON * j;
        let certified = self.overlap_width() > 0.0 && right_defect >= -slack && left_defect <= slack;
        Ok(Covering { certified, overlap_width: self.overlap_width(), right_defect, left_defect })
    }
}
