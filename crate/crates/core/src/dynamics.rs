//! The billiard map on collision coordinates `(component, r, φ)`.
//!
//! `φ` is measured from the inward normal towards the positive tangent, so
//! the outgoing velocity is `cos φ · n + sin φ · t`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, NoConvergence, TableGeometry, Vec2};

/// Collisions this close to grazing are treated as tangential.
pub const TOL_TAN: f64 = 1e-8;
/// Collisions this close (in arc length) to a junction are corner hits.
pub const TOL_CORNER: f64 = 1e-10;
/// Minimal free path; excludes re-detecting the launch point.
pub const TAU_MIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub component: usize,
    pub r: f64,
    pub phi: f64,
}

impl PhasePoint {
    pub const fn new(component: usize, r: f64, phi: f64) -> Self {
        Self { component, r, phi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hazard {
    NearTangency,
    CornerHit,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("direction is not incoming (d·n = {0})")]
    NotIncoming(f64),
    #[error("ray from {position:?} along {direction:?} left the table")]
    NoIntersection { position: Vec2, direction: Vec2 },
    #[error("near-tangential collision (|phi| = {phi})")]
    NearTangency { phi: f64 },
    #[error("collision at r = {r} on component {component} hits a junction")]
    CornerHit { component: usize, r: f64 },
    #[error("flat-curve intersection did not converge")]
    NoConvergence,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<NoConvergence> for DynamicsError {
    fn from(_: NoConvergence) -> Self {
        DynamicsError::NoConvergence
    }
}

impl DynamicsError {
    /// Orbits hitting `S₀` are discarded rather than treated as bugs.
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            DynamicsError::NearTangency { .. } | DynamicsError::CornerHit { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionRecord {
    pub next: PhasePoint,
    pub tau: f64,
    pub start: Vec2,
    pub end: Vec2,
    /// `min(π/2 − |φ_next|, junction distance of r_next)`.
    pub singularity_distance: f64,
    pub hazard: Option<Hazard>,
}

/// Specular reflection `d − 2(d·n)n` of an incoming direction.
pub fn reflect(direction: Vec2, normal: Vec2) -> Result<Vec2, DynamicsError> {
    let dn = direction.dot(normal);
    if !(dn < 0.0) {
        return Err(DynamicsError::NotIncoming(dn));
    }
    Ok(direction - normal * (2.0 * dn))
}

pub fn involution(x: PhasePoint) -> PhasePoint {
    PhasePoint::new(x.component, x.r, -x.phi)
}

/// Position and unit outgoing velocity of a phase point.
pub fn position_velocity(
    table: &TableGeometry,
    x: PhasePoint,
) -> Result<(Vec2, Vec2), DynamicsError> {
    let f = table.point_normal_curvature(x.component, x.r)?;
    let (s, c) = x.phi.sin_cos();
    Ok((f.point, f.normal * c + f.tangent * s))
}

/// Earliest boundary hit of the ray `position + τ·direction`, `τ > TAU_MIN`.
///
/// `from` names the component the ray leaves from, if any. Near-tangential
/// and corner hits are reported through `hazard`, not as errors.
pub fn next_collision(
    table: &TableGeometry,
    position: Vec2,
    direction: Vec2,
    from: Option<usize>,
) -> Result<CollisionRecord, DynamicsError> {
    let mut best: Option<(f64, usize, f64)> = None;
    for (id, c) in table.components().iter().enumerate() {
        let t_max = best.map_or(f64::INFINITY, |b| b.0);
        if let Some((t, r)) = c.intersect(position, direction, TAU_MIN, t_max, from == Some(id))? {
            if best.is_none_or(|b| t < b.0) {
                best = Some((t, id, r));
            }
        }
    }
    let Some((tau, id, r)) = best else {
        return Err(DynamicsError::NoIntersection {
            position,
            direction,
        });
    };
    let comp = &table.components()[id];
    let r = if comp.closed {
        r.rem_euclid(comp.length)
    } else {
        r.min(comp.length.next_down())
    };
    let frame = table.frame(id, r);
    let dn = direction.dot(frame.normal);
    let end = position + direction * tau;
    if dn >= 0.0 {
        // Ray met the wall from behind; only possible at grazing incidence.
        return Ok(CollisionRecord {
            next: PhasePoint::new(id, r, FRAC_PI_2.copysign(direction.dot(frame.tangent))),
            tau,
            start: position,
            end,
            singularity_distance: 0.0,
            hazard: Some(Hazard::NearTangency),
        });
    }
    let out = direction - frame.normal * (2.0 * dn);
    let phi = out.dot(frame.tangent).atan2(out.dot(frame.normal));
    let junction = table.junction_distance(id, r);
    let hazard = if FRAC_PI_2 - phi.abs() < TOL_TAN {
        Some(Hazard::NearTangency)
    } else if junction < TOL_CORNER {
        Some(Hazard::CornerHit)
    } else {
        None
    };
    Ok(CollisionRecord {
        next: PhasePoint::new(id, r, phi),
        tau,
        start: position,
        end,
        singularity_distance: (FRAC_PI_2 - phi.abs()).max(0.0).min(junction),
        hazard,
    })
}

/// One application of `F`, keeping the full collision record.
pub fn step(table: &TableGeometry, x: PhasePoint) -> Result<CollisionRecord, DynamicsError> {
    if FRAC_PI_2 - x.phi.abs() < TOL_TAN {
        return Err(DynamicsError::NearTangency { phi: x.phi });
    }
    let (p, v) = position_velocity(table, x)?;
    let rec = next_collision(table, p, v, Some(x.component))?;
    match rec.hazard {
        Some(Hazard::NearTangency) => Err(DynamicsError::NearTangency { phi: rec.next.phi }),
        Some(Hazard::CornerHit) => Err(DynamicsError::CornerHit {
            component: rec.next.component,
            r: rec.next.r,
        }),
        None => Ok(rec),
    }
}

/// The billiard map `F`: next collision and the free path to it.
pub fn billiard_map(
    table: &TableGeometry,
    x: PhasePoint,
) -> Result<(PhasePoint, f64), DynamicsError> {
    step(table, x).map(|rec| (rec.next, rec.tau))
}

/// `F⁻¹ = ι ∘ F ∘ ι`.
pub fn inverse_map(table: &TableGeometry, x: PhasePoint) -> Result<PhasePoint, DynamicsError> {
    billiard_map(table, involution(x)).map(|(y, _)| involution(y))
}

/// Proxy distance to `S₁`: grazing margin and junction distance at `x`,
/// and the same two terms at `F(x)`. Zero when the forward step fails.
pub fn singularity_distance(table: &TableGeometry, x: PhasePoint) -> f64 {
    let own = (FRAC_PI_2 - x.phi.abs())
        .max(0.0)
        .min(table.junction_distance(x.component, x.r));
    if own <= 0.0 {
        return 0.0;
    }
    match step(table, x) {
        Ok(rec) => own.min(rec.singularity_distance),
        Err(_) => 0.0,
    }
}

/// Forward orbit of `F`, yielding collision records until an error.
pub struct Orbit<'a> {
    table: &'a TableGeometry,
    current: Option<PhasePoint>,
}

impl<'a> Orbit<'a> {
    pub fn new(table: &'a TableGeometry, start: PhasePoint) -> Self {
        Self {
            table,
            current: Some(start),
        }
    }
}

impl Iterator for Orbit<'_> {
    type Item = Result<CollisionRecord, DynamicsError>;

    fn next(&mut self) -> Option<Self::Item> {
        let x = self.current.take()?;
        let rec = step(self.table, x);
        if let Ok(r) = &rec {
            self.current = Some(r.next);
        }
        Some(rec)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    use super::*;
    use crate::geometry::{build_table, TableSpec};

    fn sinai() -> TableGeometry {
        build_table(TableSpec::sinai(1.0, 0.25)).unwrap()
    }

    fn stadium() -> TableGeometry {
        build_table(TableSpec::stadium(1.0, 2.0)).unwrap()
    }

    #[test]
    fn reflect_examples() {
        let up = Vec2::new(0.0, 1.0);
        assert_eq!(reflect(Vec2::new(0.0, -1.0), up).unwrap(), up);
        let v = reflect(Vec2::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2), up).unwrap();
        assert!((v - Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-14);
        assert!(matches!(
            reflect(Vec2::new(1.0, 0.0), up),
            Err(DynamicsError::NotIncoming(_))
        ));
    }

    #[test]
    fn sinai_closed_form_collisions() {
        let t = sinai();
        let rec = next_collision(&t, Vec2::new(0.5, 0.75), Vec2::new(0.0, 1.0), None).unwrap();
        assert!((rec.end - Vec2::new(0.5, 1.0)).norm() < 1e-14);
        assert!((rec.tau - 0.25).abs() < 1e-14);
        assert_eq!(rec.next.component, 2);

        let rec = next_collision(&t, Vec2::new(0.5, 1.0), Vec2::new(0.0, -1.0), Some(2)).unwrap();
        assert!((rec.end - Vec2::new(0.5, 0.75)).norm() < 1e-14);
        assert!((rec.tau - 0.25).abs() < 1e-14);
        assert_eq!(rec.next.component, 4);
        assert!(rec.next.phi.abs() < 1e-14);
    }

    #[test]
    fn stadium_axial_chord() {
        let t = stadium();
        let rec = next_collision(&t, Vec2::new(-2.0, 0.0), Vec2::new(1.0, 0.0), Some(3)).unwrap();
        assert!((rec.end - Vec2::new(2.0, 0.0)).norm() < 1e-14);
        assert!((rec.tau - 4.0).abs() < 1e-14);
        assert!(rec.next.phi.abs() < 1e-14);

        let left_apex = PhasePoint::new(3, 0.5 * PI, 0.0);
        let (y, tau) = billiard_map(&t, left_apex).unwrap();
        assert_eq!(y.component, 1);
        assert!((y.r - 0.5 * PI).abs() < 1e-12);
        assert!(y.phi.abs() < 1e-12);
        assert!((tau - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sinai_vertical_bounce() {
        let t = sinai();
        // Obstacle top: angle π/2 on a clockwise circle starting at angle 0.
        let top = PhasePoint::new(4, 1.5 * PI * 0.25, 0.0);
        let (p, _) = position_velocity(&t, top).unwrap();
        assert!((p - Vec2::new(0.5, 0.75)).norm() < 1e-12);
        let (y, tau) = billiard_map(&t, top).unwrap();
        assert_eq!(y.component, 2);
        assert!((y.r - 0.5).abs() < 1e-12);
        assert!(y.phi.abs() < 1e-12);
        assert!((tau - 0.25).abs() < 1e-12);
    }

    #[test]
    fn involution_examples() {
        let x = PhasePoint::new(1, 0.4, 0.3);
        assert_eq!(involution(x).phi, -0.3);
        assert_eq!(involution(involution(x)), x);
        let z = PhasePoint::new(1, 0.4, 0.0);
        assert_eq!(involution(z), z);
    }

    #[test]
    fn singularity_distance_examples() {
        let t = sinai();
        let x = PhasePoint::new(4, 1.5 * PI * 0.25, FRAC_PI_2 - 1e-4);
        assert!((singularity_distance(&t, x) - 1e-4).abs() < 1e-12);
        let mid = PhasePoint::new(0, 0.5, 0.0);
        assert!((singularity_distance(&t, mid) - 0.5).abs() < 1e-12);
        assert_eq!(singularity_distance(&t, PhasePoint::new(1, 0.0, 0.2)), 0.0);
    }

    #[test]
    fn grazing_start_is_rejected() {
        let t = sinai();
        let x = PhasePoint::new(0, 0.5, FRAC_PI_2 - 1e-9);
        assert!(matches!(
            billiard_map(&t, x),
            Err(DynamicsError::NearTangency { .. })
        ));
    }

    #[test]
    fn focusing_arc_can_be_hit_twice() {
        let t = stadium();
        // Steep shot along the right arc stays on it.
        let x = PhasePoint::new(1, 0.5 * PI, 1.3);
        let (y, _) = billiard_map(&t, x).unwrap();
        assert_eq!(y.component, 1);
        assert!((y.phi - 1.3).abs() < 1e-12);
    }
}
