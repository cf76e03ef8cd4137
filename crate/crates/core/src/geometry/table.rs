use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::component::{BoundaryComponent, BoundaryFrame, CurvatureClass, Shape};
use super::flat::FlatCurve;
use super::vec2::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("arc length {r} out of range [0, {length}) on component {component}")]
    OutOfRange {
        component: usize,
        r: f64,
        length: f64,
    },
    #[error("no component with id {0}")]
    UnknownComponent(usize),
}

/// Parameters of one of the supported table families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TableSpec {
    /// Square of side `side` with a centred circular obstacle of radius `rho`.
    SemiDispersingSquare { side: f64, rho: f64 },
    /// Curvilinear triangle between three mutually tangent discs.
    Cusp { radii: [f64; 3] },
    /// Dispersing table whose top and bottom walls each carry a flat point
    /// `y = |x|^beta`, facing each other across `2 * half_height`.
    FlatPoint {
        beta: f64,
        half_height: f64,
        flat_half_width: f64,
        blend_radius: f64,
        half_width: f64,
        side_radius: f64,
    },
    /// Two semicircles of radius `radius` joined by segments of length `length`.
    Stadium { radius: f64, length: f64 },
}

impl TableSpec {
    pub fn sinai(side: f64, rho: f64) -> Self {
        TableSpec::SemiDispersingSquare { side, rho }
    }

    pub fn stadium(radius: f64, length: f64) -> Self {
        TableSpec::Stadium { radius, length }
    }

    pub fn cusp(radii: [f64; 3]) -> Self {
        TableSpec::Cusp { radii }
    }

    /// Flat-point table with the default layout for a given flatness. The
    /// flat curve extends to where its slope reaches 0.864 (0.6 for β = 4),
    /// and the side walls take the smallest radius from a short ladder that
    /// keeps the boundary simple (2 for β = 4).
    pub fn flat_point(beta: f64) -> Self {
        let flat_half_width = if beta > 2.0 {
            (0.864 / beta).powf(1.0 / (beta - 1.0)).min(0.6)
        } else {
            0.6
        };
        let spec = |side_radius| TableSpec::FlatPoint {
            beta,
            half_height: 0.5,
            flat_half_width,
            blend_radius: 1.0,
            half_width: 0.8,
            side_radius,
        };
        [2.0, 2.5, 3.0, 4.0, 6.0]
            .into_iter()
            .map(spec)
            .find(|s| build_table(s.clone()).is_ok())
            .unwrap_or_else(|| spec(2.0))
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            TableSpec::SemiDispersingSquare { .. } => "semi-dispersing-square",
            TableSpec::Cusp { .. } => "cusp",
            TableSpec::FlatPoint { .. } => "flat-point",
            TableSpec::Stadium { .. } => "stadium",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JunctionKind {
    /// Transversal corner.
    Corner,
    /// Tangential meeting with reversed direction (cusp).
    Tangential,
    /// Tangent-continuous join.
    Smooth,
}

#[derive(Debug, Clone, Serialize)]
pub struct Junction {
    /// Component ending at the junction.
    pub from: usize,
    /// Component starting at the junction.
    pub to: usize,
    pub point: Vec2,
    pub kind: JunctionKind,
    /// Turning angle of the tangent across the junction, radians in (-π, π].
    pub turn: f64,
}

/// How points are admitted to the reduced phase space; see `induced`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipRuleId {
    ObstacleCollisions,
    ArcFirstCollisions,
    CuspExterior,
    FlatExterior,
}

/// Immutable, validated billiard table.
#[derive(Debug, Clone)]
pub struct TableGeometry {
    pub spec: TableSpec,
    components: Vec<BoundaryComponent>,
    offsets: Vec<f64>,
    total_length: f64,
    junctions: Vec<Junction>,
    /// Junction arc-length positions on each component (0 and/or length).
    has_start_junction: Vec<bool>,
    has_end_junction: Vec<bool>,
    diameter: f64,
    pub membership: MembershipRuleId,
}

impl TableGeometry {
    pub fn components(&self) -> &[BoundaryComponent] {
        &self.components
    }

    pub fn component(&self, id: usize) -> Result<&BoundaryComponent, GeometryError> {
        self.components
            .get(id)
            .ok_or(GeometryError::UnknownComponent(id))
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    /// Upper bound on any chord of the table.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn offset(&self, component: usize) -> f64 {
        self.offsets[component]
    }

    /// Global arc-length coordinate in `[0, |∂Q|)`.
    pub fn global_r(&self, component: usize, r: f64) -> f64 {
        self.offsets[component] + r
    }

    /// Inverse of [`global_r`](Self::global_r).
    pub fn split_global(&self, s: f64) -> (usize, f64) {
        let s = s.rem_euclid(self.total_length);
        let idx = match self.offsets.binary_search_by(|o| o.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let r = (s - self.offsets[idx]).min(self.components[idx].length);
        (idx, r)
    }

    /// Arc-length distance from `r` to the nearest junction on the component.
    pub fn junction_distance(&self, component: usize, r: f64) -> f64 {
        let c = &self.components[component];
        let mut d = f64::INFINITY;
        if self.has_start_junction[component] {
            d = d.min(r.abs());
        }
        if self.has_end_junction[component] {
            d = d.min((c.length - r).abs());
        }
        d
    }

    /// `point_normal_curvature`: position, inward normal and curvature magnitude.
    pub fn point_normal_curvature(
        &self,
        component: usize,
        r: f64,
    ) -> Result<BoundaryFrame, GeometryError> {
        let c = self.component(component)?;
        if !(0.0..c.length).contains(&r) {
            return Err(GeometryError::OutOfRange {
                component,
                r,
                length: c.length,
            });
        }
        Ok(c.frame(r))
    }

    /// Same as [`point_normal_curvature`](Self::point_normal_curvature) without
    /// the range check (hot path).
    #[inline]
    pub fn frame(&self, component: usize, r: f64) -> BoundaryFrame {
        self.components[component].frame(r)
    }

    /// Signed area enclosed by one boundary loop; sign gives the winding number.
    pub fn loop_signed_area(&self, boundary_loop: usize) -> f64 {
        let mut pts = Vec::new();
        for c in self.components.iter().filter(|c| c.boundary_loop == boundary_loop) {
            let n = 256;
            for k in 0..n {
                pts.push(c.point(c.length * k as f64 / n as f64));
            }
        }
        let mut area = 0.0;
        for i in 0..pts.len() {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            area += a.cross(b);
        }
        0.5 * area
    }

    pub fn winding_number(&self, boundary_loop: usize) -> i32 {
        let area = self.loop_signed_area(boundary_loop);
        if area > 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn loop_count(&self) -> usize {
        self.components
            .iter()
            .map(|c| c.boundary_loop + 1)
            .max()
            .unwrap_or(0)
    }
}

fn invalid(msg: impl Into<String>) -> GeometryError {
    GeometryError::InvalidGeometry(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), GeometryError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Build and validate a table from its family parameters.
pub fn build_table(spec: TableSpec) -> Result<TableGeometry, GeometryError> {
    let (components, membership) = match &spec {
        TableSpec::SemiDispersingSquare { side, rho } => {
            let (a, rho) = (*side, *rho);
            positive("side", a)?;
            positive("rho", rho)?;
            if rho >= 0.5 * a {
                return Err(invalid(format!(
                    "obstacle radius {rho} must be below half the side {}",
                    0.5 * a
                )));
            }
            let c = Vec2::new(0.5 * a, 0.5 * a);
            (
                vec![
                    BoundaryComponent::segment("bottom", Vec2::new(0.0, 0.0), Vec2::new(a, 0.0)),
                    BoundaryComponent::segment("right", Vec2::new(a, 0.0), Vec2::new(a, a)),
                    BoundaryComponent::segment("top", Vec2::new(a, a), Vec2::new(0.0, a)),
                    BoundaryComponent::segment("left", Vec2::new(0.0, a), Vec2::new(0.0, 0.0)),
                    BoundaryComponent::arc("obstacle", c, rho, 0.0, -TAU).in_loop(1),
                ],
                MembershipRuleId::ObstacleCollisions,
            )
        }
        TableSpec::Stadium { radius, length } => {
            let (rho, l) = (*radius, *length);
            positive("radius", rho)?;
            positive("length", l)?;
            let h = 0.5 * l;
            (
                vec![
                    BoundaryComponent::segment("bottom", Vec2::new(-h, -rho), Vec2::new(h, -rho)),
                    BoundaryComponent::arc("right-arc", Vec2::new(h, 0.0), rho, -FRAC_PI_2, PI),
                    BoundaryComponent::segment("top", Vec2::new(h, rho), Vec2::new(-h, rho)),
                    BoundaryComponent::arc("left-arc", Vec2::new(-h, 0.0), rho, FRAC_PI_2, PI),
                ],
                MembershipRuleId::ArcFirstCollisions,
            )
        }
        TableSpec::Cusp { radii } => (build_cusp(*radii)?, MembershipRuleId::CuspExterior),
        TableSpec::FlatPoint {
            beta,
            half_height,
            flat_half_width,
            blend_radius,
            half_width,
            side_radius,
        } => (
            build_flat_point(
                *beta,
                *half_height,
                *flat_half_width,
                *blend_radius,
                *half_width,
                *side_radius,
            )?,
            MembershipRuleId::FlatExterior,
        ),
    };
    assemble(spec, components, membership)
}

fn build_cusp(radii: [f64; 3]) -> Result<Vec<BoundaryComponent>, GeometryError> {
    for (i, r) in radii.iter().enumerate() {
        positive(&format!("radii[{i}]"), *r)?;
    }
    let [r1, r2, r3] = radii;
    let c1 = Vec2::new(0.0, 0.0);
    let c2 = Vec2::new(r1 + r2, 0.0);
    // Third centre from the side lengths |c1 c3| = r1 + r3, |c2 c3| = r2 + r3.
    let d13 = r1 + r3;
    let d23 = r2 + r3;
    let d12 = r1 + r2;
    let x = (d13 * d13 - d23 * d23 + d12 * d12) / (2.0 * d12);
    let y = (d13 * d13 - x * x).sqrt();
    let c3 = Vec2::new(x, y);
    let centers = [c1, c2, c3];
    let tangency = |i: usize, j: usize| {
        let (ci, cj) = (centers[i], centers[j]);
        ci + (cj - ci) * (radii[i] / (radii[i] + radii[j]))
    };
    let t12 = tangency(0, 1);
    let t23 = tangency(1, 2);
    let t31 = tangency(2, 0);
    // Each arc runs clockwise about its own centre.
    let arc_between = |label: &str, i: usize, from: Vec2, to: Vec2| {
        let c = centers[i];
        let a0 = (from - c).angle();
        let a1 = (to - c).angle();
        let sweep = -((a0 - a1).rem_euclid(TAU));
        BoundaryComponent::arc(label, c, radii[i], a0, sweep)
    };
    // Walk the region T12 -> T23 -> T31 -> T12 keeping it on the left.
    let comps = vec![
        arc_between("disc-2", 1, t12, t23),
        arc_between("disc-3", 2, t23, t31),
        arc_between("disc-1", 0, t31, t12),
    ];
    for c in &comps {
        if let Shape::Arc { sweep, .. } = c.shape {
            if sweep.abs() >= PI {
                return Err(invalid("degenerate cusp arcs"));
            }
        }
    }
    Ok(comps)
}

fn build_flat_point(
    beta: f64,
    half_height: f64,
    flat_half_width: f64,
    blend_radius: f64,
    half_width: f64,
    side_radius: f64,
) -> Result<Vec<BoundaryComponent>, GeometryError> {
    if !(beta.is_finite() && beta > 2.0) {
        return Err(invalid(format!("flatness exponent beta must exceed 2, got {beta}")));
    }
    positive("half_height", half_height)?;
    positive("flat_half_width", flat_half_width)?;
    positive("blend_radius", blend_radius)?;
    positive("half_width", half_width)?;
    positive("side_radius", side_radius)?;
    if flat_half_width >= half_width {
        return Err(invalid("flat_half_width must be below half_width"));
    }
    // Blend point on the top-right branch; the blend circle shares its
    // tangent there (C1 join) and lies on the outward side.
    let xb = flat_half_width;
    let slope = beta * xb.powf(beta - 1.0);
    let w = (1.0 + slope * slope).sqrt();
    let b_tr = Vec2::new(xb, half_height + xb.powf(beta));
    let outward = Vec2::new(-slope, 1.0) * (1.0 / w);
    let blend_center_tr = b_tr + outward * blend_radius;

    // Corner at abscissa `half_width` on the lower-right quarter of the
    // blend circle.
    let sin_psi = (half_width - blend_center_tr.x) / blend_radius;
    if !(sin_psi > slope / w && sin_psi < 1.0) {
        return Err(invalid(
            "half_width is not reachable on the blend arc (increase blend_radius)",
        ));
    }
    let corner_tr = Vec2::new(
        half_width,
        blend_center_tr.y - blend_radius * (1.0 - sin_psi * sin_psi).sqrt(),
    );
    if corner_tr.y <= 0.0 || corner_tr.y >= side_radius {
        return Err(invalid("side wall radius too small for the corner height"));
    }
    let side_center_r = Vec2::new(
        half_width + (side_radius * side_radius - corner_tr.y * corner_tr.y).sqrt(),
        0.0,
    );

    let mirror_x = |v: Vec2| Vec2::new(-v.x, v.y);
    let mirror_y = |v: Vec2| Vec2::new(v.x, -v.y);
    let top = FlatCurve::new(Vec2::new(0.0, half_height), Vec2::new(-1.0, 0.0), beta, xb);
    let bottom = FlatCurve::new(Vec2::new(0.0, -half_height), Vec2::new(1.0, 0.0), beta, xb);

    // Domain-on-the-left traversal runs clockwise about every circle here.
    let arc_from_to = |label: &str, center: Vec2, radius: f64, from: Vec2, to: Vec2| {
        let a0 = (from - center).angle();
        let a1 = (to - center).angle();
        BoundaryComponent::arc(label, center, radius, a0, -((a0 - a1).rem_euclid(TAU)))
    };
    let blend_center_br = mirror_y(blend_center_tr);
    let blend_center_tl = mirror_x(blend_center_tr);
    let blend_center_bl = mirror_x(blend_center_br);
    let side_center_l = mirror_x(side_center_r);
    let corner_br = mirror_y(corner_tr);
    let corner_tl = mirror_x(corner_tr);
    let corner_bl = mirror_x(corner_br);
    // Blend points are taken from the flat curves themselves so the chain
    // closes to rounding error.
    let b_br = bottom.point_at_x(xb);
    let b_bl = bottom.point_at_x(-xb);
    let b_tr = top.point_at_x(-xb);
    let b_tl = top.point_at_x(xb);

    Ok(vec![
        BoundaryComponent::flat("bottom-flat", bottom),
        arc_from_to("bottom-right-blend", blend_center_br, blend_radius, b_br, corner_br),
        arc_from_to("right-side", side_center_r, side_radius, corner_br, corner_tr),
        arc_from_to("top-right-blend", blend_center_tr, blend_radius, corner_tr, b_tr),
        BoundaryComponent::flat("top-flat", top),
        arc_from_to("top-left-blend", blend_center_tl, blend_radius, b_tl, corner_tl),
        arc_from_to("left-side", side_center_l, side_radius, corner_tl, corner_bl),
        arc_from_to("bottom-left-blend", blend_center_bl, blend_radius, corner_bl, b_bl),
    ])
}

fn classify_junction(t_in: Vec2, t_out: Vec2) -> (JunctionKind, f64) {
    let turn = t_in.cross(t_out).atan2(t_in.dot(t_out));
    let kind = if turn.abs() < 1e-9 {
        JunctionKind::Smooth
    } else if (PI - turn.abs()) < 1e-9 {
        JunctionKind::Tangential
    } else {
        JunctionKind::Corner
    };
    (kind, turn)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let o1 = (b - a).cross(c - a);
    let o2 = (b - a).cross(d - a);
    let o3 = (d - c).cross(a - c);
    let o4 = (d - c).cross(b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn assemble(
    spec: TableSpec,
    components: Vec<BoundaryComponent>,
    membership: MembershipRuleId,
) -> Result<TableGeometry, GeometryError> {
    let n = components.len();
    let mut offsets = Vec::with_capacity(n);
    let mut total = 0.0;
    for c in &components {
        if !(c.length.is_finite() && c.length > 0.0) {
            return Err(invalid(format!("component {} has non-positive length", c.label)));
        }
        offsets.push(total);
        total += c.length;
    }

    let mut junctions = Vec::new();
    let mut has_start = vec![false; n];
    let mut has_end = vec![false; n];
    let loops = components.iter().map(|c| c.boundary_loop).max().unwrap_or(0) + 1;
    for l in 0..loops {
        let ids: Vec<usize> = (0..n).filter(|&i| components[i].boundary_loop == l).collect();
        if ids.len() == 1 && components[ids[0]].closed {
            continue;
        }
        for (k, &i) in ids.iter().enumerate() {
            let j = ids[(k + 1) % ids.len()];
            let (ci, cj) = (&components[i], &components[j]);
            let gap = (ci.end_point() - cj.start_point()).norm();
            if gap > 1e-9 {
                return Err(invalid(format!(
                    "components {} and {} do not chain (gap {gap:e})",
                    ci.label, cj.label
                )));
            }
            let t_in = ci.frame(ci.length).tangent;
            let t_out = cj.frame(0.0).tangent;
            let (kind, turn) = classify_junction(t_in, t_out);
            has_end[i] = true;
            has_start[j] = true;
            junctions.push(Junction {
                from: i,
                to: j,
                point: cj.start_point(),
                kind,
                turn,
            });
        }
    }

    // Sampled polylines: self-intersection and obstacle/wall contact checks.
    let samples = 128;
    let mut polylines: Vec<Vec<Vec2>> = Vec::new();
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in &components {
        let pts: Vec<Vec2> = (0..=samples)
            .map(|k| c.point(c.length * k as f64 / samples as f64))
            .collect();
        for p in &pts {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        polylines.push(pts);
    }
    for i in 0..n {
        for j in i..n {
            let adjacent = junctions
                .iter()
                .any(|jn| (jn.from == i && jn.to == j) || (jn.from == j && jn.to == i));
            for a in 0..samples {
                for b in 0..samples {
                    if i == j && (a as isize - b as isize).abs() <= 1 {
                        continue;
                    }
                    if adjacent
                        && ((a == samples - 1 && b == 0) || (a == 0 && b == samples - 1))
                    {
                        continue;
                    }
                    if i == j && components[i].closed && (a + 1 == samples && b == 0 || a == 0 && b + 1 == samples) {
                        continue;
                    }
                    let (p0, p1) = (polylines[i][a], polylines[i][a + 1]);
                    let (q0, q1) = (polylines[j][b], polylines[j][b + 1]);
                    if segments_cross(p0, p1, q0, q1) {
                        return Err(invalid(format!(
                            "boundary self-intersection between {} and {}",
                            components[i].label, components[j].label
                        )));
                    }
                }
            }
        }
    }

    let geometry = TableGeometry {
        spec,
        offsets,
        total_length: total,
        junctions,
        has_start_junction: has_start,
        has_end_junction: has_end,
        diameter: (hi - lo).norm() * 1.01 + 1e-9,
        components,
        membership,
    };
    if geometry.winding_number(0) != 1 {
        return Err(invalid("outer boundary must be counterclockwise"));
    }
    for l in 1..geometry.loop_count() {
        if geometry.winding_number(l) != -1 {
            return Err(invalid("obstacles must be traversed clockwise"));
        }
    }
    if geometry
        .components
        .iter()
        .any(|c| c.class == CurvatureClass::Focusing && c.boundary_loop > 0)
    {
        return Err(invalid("obstacle components must be dispersing"));
    }
    Ok(geometry)
}
