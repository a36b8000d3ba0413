//! Finite families of self-dual crystals sharing their discrete invariants,
//! checked fiber by fiber at a common break point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::newton_hodge::{self_dual_decompose, SplitOptions};
use crate::polygon::{Rational, SlopePolygon};
use crate::report::Verdict;
use crate::selfdual::SelfDualCrystal;

#[derive(Debug, Clone)]
pub struct CrystalFamily {
    fibers: Vec<SelfDualCrystal>,
    a: usize,
    b: Rational,
}

impl CrystalFamily {
    /// Fibers must agree on `p`, `a`, `n`, the kind of form and `val(c)`.
    pub fn new(fibers: Vec<SelfDualCrystal>, a: usize, b: Rational) -> Result<Self> {
        let first = fibers
            .first()
            .ok_or_else(|| Error::FamilyMismatch("family has no fibers".into()))?;
        for (i, s) in fibers.iter().enumerate().skip(1) {
            let (r0, r) = (first.ring(), s.ring());
            let mismatch = if r.p() != r0.p() || r.degree() != r0.degree() {
                Some("residue field")
            } else if s.rank() != first.rank() {
                Some("rank")
            } else if s.kind() != first.kind() {
                Some("kind of form")
            } else if s.nu() != first.nu() {
                Some("val(c)")
            } else {
                None
            };
            if let Some(what) = mismatch {
                return Err(Error::FamilyMismatch(format!(
                    "fiber {i} differs from fiber 0 in {what}"
                )));
            }
        }
        Ok(CrystalFamily { fibers, a, b })
    }

    pub fn fibers(&self) -> &[SelfDualCrystal] {
        &self.fibers
    }

    pub fn break_point(&self) -> (usize, Rational) {
        (self.a, self.b)
    }

    /// Runs the self-dual decomposition on every fiber. Fibers where the
    /// break-point hypothesis fails are reported, not treated as errors.
    pub fn filter_check(&self, opts: &SplitOptions) -> FamilyReport {
        let fibers: Vec<FiberReport> = self
            .fibers
            .iter()
            .enumerate()
            .map(|(i, s)| self.check_fiber(i, s, opts))
            .collect();
        FamilyReport {
            all_decomposed: fibers.iter().all(|f| f.status == FiberStatus::Decomposed),
            hypothesis_violations: fibers
                .iter()
                .filter(|f| f.status == FiberStatus::HypothesisViolation)
                .map(|f| f.index)
                .collect(),
            fibers,
        }
    }

    fn check_fiber(&self, index: usize, s: &SelfDualCrystal, opts: &SplitOptions) -> FiberReport {
        let polygons = s
            .base()
            .newton_slopes()
            .ok()
            .zip(s.base().hodge_slopes().ok());
        let (newton, hodge) = match polygons {
            Some((n, h)) => (Some(n), Some(h)),
            None => (None, None),
        };
        match self_dual_decompose(s, self.a, self.b, opts) {
            Ok(d) => {
                let status = if d.passed() {
                    FiberStatus::Decomposed
                } else {
                    FiberStatus::Failed
                };
                let middle = d.middle.base().newton_slopes().ok();
                FiberReport {
                    index,
                    status,
                    newton,
                    hodge,
                    middle_newton: middle,
                    precision: Some(d.precision),
                    verdicts: d.certificates,
                }
            }
            Err(e) => {
                let status = match e {
                    Error::NoBreak(_) | Error::HypothesisFailed(_) | Error::RankTooLarge { .. } => {
                        FiberStatus::HypothesisViolation
                    }
                    _ => FiberStatus::Failed,
                };
                let name = if status == FiberStatus::HypothesisViolation {
                    "hypothesis"
                } else {
                    "decomposition"
                };
                FiberReport {
                    index,
                    status,
                    newton,
                    hodge,
                    middle_newton: None,
                    precision: None,
                    verdicts: vec![Verdict::fail(name, e.to_string())],
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberStatus {
    Decomposed,
    HypothesisViolation,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiberReport {
    pub index: usize,
    pub status: FiberStatus,
    pub newton: Option<SlopePolygon>,
    pub hodge: Option<SlopePolygon>,
    pub middle_newton: Option<SlopePolygon>,
    pub precision: Option<u32>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyReport {
    pub all_decomposed: bool,
    pub hypothesis_violations: Vec<usize>,
    pub fibers: Vec<FiberReport>,
}
