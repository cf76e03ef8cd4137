//! Reduced phase space `M`, the first return map `T = F^R` and the cell
//! enumeration of `{R = n}` by itinerary class.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{inverse_map, step, CollisionRecord, DynamicsError, PhasePoint};
use crate::geometry::{CurvatureClass, MembershipRuleId, Shape, TableGeometry};

pub const DEFAULT_CAP: u64 = 1_000_000;
pub const DEFAULT_CUSP_FRACTION: f64 = 0.05;

/// Membership predicate for `M`, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ReducedSpaceRule {
    /// Collisions with obstacles (inner boundary loops).
    ObstacleCollisions,
    /// Collisions on a focusing arc whose predecessor is on another component.
    ArcFirstCollisions,
    /// Collisions farther than `fraction · length` (arc length) from both
    /// ends of their component.
    CuspExterior { fraction: f64 },
    /// Collisions off the flat curves, or on them with `|x| > radius` in the
    /// curve's local abscissa.
    FlatExterior { radius: f64 },
    /// All of `𝓜`.
    Everything,
}

impl ReducedSpaceRule {
    pub fn for_table(table: &TableGeometry) -> Self {
        match table.membership {
            MembershipRuleId::ObstacleCollisions => ReducedSpaceRule::ObstacleCollisions,
            MembershipRuleId::ArcFirstCollisions => ReducedSpaceRule::ArcFirstCollisions,
            MembershipRuleId::CuspExterior => ReducedSpaceRule::CuspExterior {
                fraction: DEFAULT_CUSP_FRACTION,
            },
            MembershipRuleId::FlatExterior => ReducedSpaceRule::FlatExterior {
                radius: table
                    .components()
                    .iter()
                    .find_map(|c| match &c.shape {
                        Shape::Flat(curve) => Some(curve.half_width()),
                        _ => None,
                    })
                    .unwrap_or(0.0),
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReducedSpaceRule::ObstacleCollisions => "obstacle-collisions",
            ReducedSpaceRule::ArcFirstCollisions => "arc-first-collisions",
            ReducedSpaceRule::CuspExterior { .. } => "cusp-exterior",
            ReducedSpaceRule::FlatExterior { .. } => "flat-exterior",
            ReducedSpaceRule::Everything => "everything",
        }
    }

    /// Whether membership depends on the previous collision.
    pub fn needs_predecessor(&self) -> bool {
        matches!(self, ReducedSpaceRule::ArcFirstCollisions)
    }

    /// Whether component `id` can carry points of `M`.
    pub fn is_candidate(&self, table: &TableGeometry, id: usize) -> bool {
        let c = &table.components()[id];
        match self {
            ReducedSpaceRule::ObstacleCollisions => c.boundary_loop > 0,
            ReducedSpaceRule::ArcFirstCollisions => c.class == CurvatureClass::Focusing,
            _ => true,
        }
    }

    pub fn candidates(&self, table: &TableGeometry) -> Vec<usize> {
        (0..table.len())
            .filter(|&i| self.is_candidate(table, i))
            .collect()
    }

    /// Membership of `x` given its predecessor `prev = F⁻¹(x)`, when known.
    /// Rules needing a predecessor treat `None` as "different component".
    pub fn contains_given(
        &self,
        table: &TableGeometry,
        x: PhasePoint,
        prev: Option<PhasePoint>,
    ) -> bool {
        let c = &table.components()[x.component];
        match *self {
            ReducedSpaceRule::ObstacleCollisions => c.boundary_loop > 0,
            ReducedSpaceRule::ArcFirstCollisions => {
                c.class == CurvatureClass::Focusing
                    && prev.is_none_or(|p| p.component != x.component)
            }
            ReducedSpaceRule::CuspExterior { fraction } => {
                let margin = fraction * c.length;
                x.r.min(c.length - x.r) > margin
            }
            ReducedSpaceRule::FlatExterior { radius } => match &c.shape {
                Shape::Flat(curve) => curve.x_at_r(x.r).abs() > radius,
                _ => true,
            },
            ReducedSpaceRule::Everything => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InducedError {
    #[error("no return to M within {cap} collisions")]
    NoReturnWithinCap { cap: u64 },
    #[error("orbit hit the singular set: {0}")]
    SingularOrbit(DynamicsError),
    #[error(transparent)]
    Dynamics(DynamicsError),
}

impl From<DynamicsError> for InducedError {
    fn from(e: DynamicsError) -> Self {
        if e.is_singular() {
            InducedError::SingularOrbit(e)
        } else {
            InducedError::Dynamics(e)
        }
    }
}

/// `in_reduced_space`: membership of `x`, probing one backward step when the
/// rule needs it.
pub fn in_reduced_space(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
) -> Result<bool, DynamicsError> {
    if !rule.needs_predecessor() {
        return Ok(rule.contains_given(table, x, None));
    }
    if !rule.contains_given(table, x, None) {
        return Ok(false);
    }
    let prev = inverse_map(table, x)?;
    Ok(rule.contains_given(table, x, Some(prev)))
}

/// One application of `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InducedStep {
    pub start: PhasePoint,
    pub return_time: u64,
    pub end: PhasePoint,
    pub tau_sum: f64,
    pub min_singularity_distance: f64,
    /// Hash of the start component and the components visited, end point
    /// included.
    pub signature: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

fn mix(h: u64, v: u64) -> u64 {
    let mut h = h;
    for b in v.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn excursion_impl(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    cap: u64,
    mut path: Option<&mut Vec<CollisionRecord>>,
) -> Result<InducedStep, InducedError> {
    let mut cur = x;
    let mut tau_sum = 0.0;
    let mut min_sd = f64::INFINITY;
    let mut sig = mix(FNV_OFFSET, x.component as u64);
    for n in 1..=cap {
        let rec = step(table, cur)?;
        tau_sum += rec.tau;
        min_sd = min_sd.min(rec.singularity_distance);
        sig = mix(sig, rec.next.component as u64);
        if let Some(p) = path.as_deref_mut() {
            p.push(rec);
        }
        if rule.contains_given(table, rec.next, Some(cur)) {
            return Ok(InducedStep {
                start: x,
                return_time: n,
                end: rec.next,
                tau_sum,
                min_singularity_distance: min_sd,
                signature: sig,
            });
        }
        cur = rec.next;
    }
    Err(InducedError::NoReturnWithinCap { cap })
}

/// First return of `x ∈ M` to `M` within `cap` collisions of `F`.
pub fn first_return(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    cap: u64,
) -> Result<InducedStep, InducedError> {
    excursion_impl(table, rule, x, cap, None)
}

/// Like [`first_return`], also returning the collisions `F(x), …, F^R(x)`.
pub fn excursion(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    cap: u64,
) -> Result<(InducedStep, Vec<CollisionRecord>), InducedError> {
    let mut path = Vec::new();
    let s = excursion_impl(table, rule, x, cap, Some(&mut path))?;
    Ok((s, path))
}

/// `T⁻¹(x)` by backward iteration of `F`, together with the backward
/// return time.
pub fn backward_return(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    cap: u64,
) -> Result<(PhasePoint, u64), InducedError> {
    let mut y = inverse_map(table, x)?;
    for n in 1..=cap {
        let prev = if rule.needs_predecessor() {
            Some(inverse_map(table, y)?)
        } else {
            None
        };
        if rule.contains_given(table, y, prev) {
            return Ok((y, n));
        }
        y = match prev {
            Some(p) => p,
            None => inverse_map(table, y)?,
        };
    }
    Err(InducedError::NoReturnWithinCap { cap })
}

/// Completed prefix of an induced orbit and why it stopped early, if it did.
#[derive(Debug, Clone)]
pub struct InducedOrbit {
    pub steps: Vec<InducedStep>,
    pub termination: Option<InducedError>,
}

pub fn induced_orbit(
    table: &TableGeometry,
    rule: &ReducedSpaceRule,
    x: PhasePoint,
    steps: usize,
    cap: u64,
) -> InducedOrbit {
    let mut out = Vec::with_capacity(steps);
    let mut cur = x;
    for _ in 0..steps {
        match first_return(table, rule, cur, cap) {
            Ok(s) => {
                cur = s.end;
                out.push(s);
            }
            Err(e) => {
                return InducedOrbit {
                    steps: out,
                    termination: Some(e),
                }
            }
        }
    }
    InducedOrbit {
        steps: out,
        termination: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellIndex {
    pub n: u64,
    pub j: u64,
}

impl CellIndex {
    /// Derived enumeration `m = n₀(n − 1) + j`.
    pub fn m(&self, n0: u64) -> u64 {
        n0 * (self.n - 1) + self.j
    }
}

/// Itinerary signature → ordinal `j`, assigned in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct CellDictionary {
    ordinals: HashMap<(u64, u64), u64>,
    per_n: HashMap<u64, u64>,
}

impl CellDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// `cell_index`: the cell of an induced step, registering new classes.
    pub fn cell_index(&mut self, step: &InducedStep) -> CellIndex {
        let n = step.return_time;
        let key = (n, step.signature);
        if let Some(&j) = self.ordinals.get(&key) {
            return CellIndex { n, j };
        }
        let count = self.per_n.entry(n).or_insert(0);
        *count += 1;
        let j = *count;
        self.ordinals.insert(key, j);
        CellIndex { n, j }
    }

    pub fn lookup(&self, step: &InducedStep) -> Option<CellIndex> {
        let n = step.return_time;
        self.ordinals
            .get(&(n, step.signature))
            .map(|&j| CellIndex { n, j })
    }

    /// Number of itinerary classes seen with return time `n`.
    pub fn classes_at(&self, n: u64) -> u64 {
        self.per_n.get(&n).copied().unwrap_or(0)
    }

    /// Measured `n₀`: the largest class count over all `n`.
    pub fn n0(&self) -> u64 {
        self.per_n.values().copied().max().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.ordinals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinals.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{build_table, TableSpec};

    fn sinai() -> (TableGeometry, ReducedSpaceRule) {
        let t = build_table(TableSpec::sinai(1.0, 0.25)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        (t, rule)
    }

    fn obstacle_top() -> PhasePoint {
        PhasePoint::new(4, 1.5 * PI * 0.25, 0.0)
    }

    #[test]
    fn sinai_membership() {
        let (t, rule) = sinai();
        assert!(in_reduced_space(&t, &rule, obstacle_top()).unwrap());
        assert!(!in_reduced_space(&t, &rule, PhasePoint::new(0, 0.5, 0.0)).unwrap());
    }

    #[test]
    fn stadium_repeated_arc_collision_is_excluded() {
        let t = build_table(TableSpec::stadium(1.0, 2.0)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let x = PhasePoint::new(1, 0.5 * PI, 1.3);
        let (y, _) = crate::dynamics::billiard_map(&t, x).unwrap();
        assert_eq!(y.component, 1);
        assert!(!in_reduced_space(&t, &rule, y).unwrap());
        let apex = PhasePoint::new(3, 0.5 * PI, 0.0);
        assert!(in_reduced_space(&t, &rule, apex).unwrap());
    }

    #[test]
    fn sinai_vertical_orbit_returns() {
        let (t, rule) = sinai();
        let s = first_return(&t, &rule, obstacle_top(), 10).unwrap();
        assert_eq!(s.return_time, 2);
        assert!((s.tau_sum - 0.5).abs() < 1e-12);
        assert!((s.end.r - obstacle_top().r).abs() < 1e-12);
        assert!(matches!(
            first_return(&t, &rule, obstacle_top(), 1),
            Err(InducedError::NoReturnWithinCap { cap: 1 })
        ));
        let orbit = induced_orbit(&t, &rule, obstacle_top(), 3, 10);
        let rs: Vec<u64> = orbit.steps.iter().map(|s| s.return_time).collect();
        assert_eq!(rs, vec![2, 2, 2]);
        assert!(orbit.termination.is_none());
        assert!(induced_orbit(&t, &rule, obstacle_top(), 0, 10).steps.is_empty());
    }

    #[test]
    fn stadium_axial_orbit_returns_immediately() {
        let t = build_table(TableSpec::stadium(1.0, 2.0)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let s = first_return(&t, &rule, PhasePoint::new(3, 0.5 * PI, 0.0), 10).unwrap();
        assert_eq!(s.return_time, 1);
        assert!((s.tau_sum - 4.0).abs() < 1e-12);
    }

    #[test]
    fn orbit_into_tangency_reports_prefix() {
        let (t, rule) = sinai();
        // Graze the obstacle after one clean return.
        let x = PhasePoint::new(4, 1.5 * PI * 0.25, std::f64::consts::FRAC_PI_2 - 1e-9);
        let orbit = induced_orbit(&t, &rule, x, 3, 10);
        assert!(orbit.steps.is_empty());
        assert!(matches!(
            orbit.termination,
            Some(InducedError::SingularOrbit(_))
        ));
    }

    #[test]
    fn backward_return_inverts_forward() {
        let t = build_table(TableSpec::stadium(1.0, 2.0)).unwrap();
        let rule = ReducedSpaceRule::for_table(&t);
        let x = PhasePoint::new(1, 1.0, 0.4);
        let s = first_return(&t, &rule, x, 1000).unwrap();
        let (back, n) = backward_return(&t, &rule, s.end, 1000).unwrap();
        assert_eq!(n, s.return_time);
        assert_eq!(back.component, x.component);
        assert!((back.r - x.r).abs() < 1e-9 && (back.phi - x.phi).abs() < 1e-9);
    }

    #[test]
    fn cell_dictionary_is_first_seen() {
        let (t, rule) = sinai();
        let mut dict = CellDictionary::new();
        let s = first_return(&t, &rule, obstacle_top(), 10).unwrap();
        let a = dict.cell_index(&s);
        let b = dict.cell_index(&s);
        assert_eq!(a, b);
        assert_eq!(a, CellIndex { n: 2, j: 1 });
        // Bottom bounce: same n, different wall.
        let bottom = PhasePoint::new(4, 0.5 * PI * 0.25, 0.0);
        let s2 = first_return(&t, &rule, bottom, 10).unwrap();
        assert_eq!(s2.return_time, 2);
        let c = dict.cell_index(&s2);
        assert_eq!(c, CellIndex { n: 2, j: 2 });
        assert_eq!(dict.n0(), 2);
        assert_eq!(c.m(dict.n0()), 4);
    }
}
