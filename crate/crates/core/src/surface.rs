//! Closed flat surfaces given as convex polygons glued by translations and
//! half-translations, together with their cone-point structure.

use crate::geom::{angle_ccw, angle_signed, signed_area, wrap, Iso};
use crate::{Point, Tolerances, Vector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GluingKind {
    Translation,
    HalfTranslation,
}

impl GluingKind {
    /// Linear part of the chart transition.
    pub fn rho(self) -> f64 {
        match self {
            GluingKind::Translation => 1.0,
            GluingKind::HalfTranslation => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolygonChart {
    pub id: usize,
    pub vertices: Vec<Point>,
}

impl PolygonChart {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` runs from vertex `i` to vertex `i+1`.
    pub fn edge(&self, i: usize) -> Vector {
        self.vertex(i + 1) - self.vertex(i)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }
}

/// A side is `(polygon id, edge index)`.
pub type Side = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeGluing {
    pub side_a: Side,
    pub side_b: Side,
    pub kind: GluingKind,
}

/// Input description consumed by [`build_surface`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceSpec {
    pub name: Option<String>,
    pub polygons: Vec<Vec<Point>>,
    pub gluings: Vec<EdgeGluing>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corner {
    pub polygon: usize,
    pub vertex: usize,
    /// Direction parameter where this corner starts (its outgoing edge).
    pub offset: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConePoint {
    pub id: usize,
    /// Corners in counterclockwise order, starting from the lexicographically
    /// smallest `(polygon, vertex)`.
    pub corners: Vec<Corner>,
    pub angle: f64,
    /// `angle = k·π`.
    pub k: u32,
}

impl ConePoint {
    pub fn corner_cycle(&self) -> Vec<(usize, usize)> {
        self.corners.iter().map(|c| (c.polygon, c.vertex)).collect()
    }

    pub fn is_singular(&self) -> bool {
        self.k >= 3
    }
}

/// Where an edge lands after gluing, and the chart map across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeLink {
    pub polygon: usize,
    pub edge: usize,
    /// Chart of the source polygon → chart of `polygon`.
    pub map: Iso<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("polygon {polygon}: {reason}")]
    InvalidPolygon { polygon: usize, reason: String },
    #[error("gluing references missing side ({0}, {1})")]
    UnknownSide(usize, usize),
    #[error("side ({0}, {1}) is glued more than once")]
    DuplicateEdgeReference(usize, usize),
    #[error("side ({0}, {1}) is not glued")]
    UnpairedEdge(usize, usize),
    #[error("sides {a:?} and {b:?} have lengths {la} and {lb}")]
    MismatchedEdgeLengths { a: Side, b: Side, la: f64, lb: f64 },
    #[error("sides {a:?} and {b:?} are not related by a {kind:?} gluing")]
    IncompatibleGluing { a: Side, b: Side, kind: GluingKind },
    #[error("cone point {id} has angle {angle}, not a multiple of π")]
    ConeAngleNotMultipleOfPi { id: usize, angle: f64 },
    #[error("cone point {id} has forbidden angle {k}π")]
    ForbiddenConeAngle { id: usize, k: u32 },
    #[error("surface is not connected")]
    NotConnected,
    #[error("Euler characteristic {chi} > -2")]
    GenusTooSmall { chi: i64 },
}

impl SurfaceError {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceError::InvalidPolygon { .. } => "InvalidPolygon",
            SurfaceError::UnknownSide(..) => "UnknownSide",
            SurfaceError::DuplicateEdgeReference(..) => "DuplicateEdgeReference",
            SurfaceError::UnpairedEdge(..) => "UnpairedEdge",
            SurfaceError::MismatchedEdgeLengths { .. } => "MismatchedEdgeLengths",
            SurfaceError::IncompatibleGluing { .. } => "IncompatibleGluing",
            SurfaceError::ConeAngleNotMultipleOfPi { .. } => "ConeAngleNotMultipleOfPi",
            SurfaceError::ForbiddenConeAngle { .. } => "ForbiddenConeAngle",
            SurfaceError::NotConnected => "NotConnected",
            SurfaceError::GenusTooSmall { .. } => "GenusTooSmall",
        }
    }
}

/// A point given by a polygon and chart coordinates in its closed polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub polygon: usize,
    pub pos: Point,
}

impl SurfacePoint {
    pub fn new(polygon: usize, x: f64, y: f64) -> Self {
        SurfacePoint { polygon, pos: Point::new(x, y) }
    }
}

/// A direction at a point, as a parameter on its circle of directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionAt {
    pub base: SurfacePoint,
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side2 {
    Plus,
    Minus,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngleError {
    #[error("direction is based at a different point")]
    MismatchedBasePoint,
}

/// Position of a point relative to the cell structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Interior,
    Edge(usize),
    Vertex(usize),
}

/// One wedge of the direction circle at a point, realized in one chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub polygon: usize,
    pub apex: Point,
    /// Unit chart direction at parameter `offset`.
    pub start: Vector,
    pub offset: f64,
    pub width: f64,
}

/// The circle of directions at a point, cut into chart sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Star {
    pub sectors: Vec<Sector>,
    pub total: f64,
    pub cone: Option<usize>,
}

impl Star {
    /// Sector containing parameter `phi` (half-open sectors).
    pub fn sector_of(&self, phi: f64) -> usize {
        let phi = wrap(phi, self.total);
        let mut idx = 0;
        for (i, s) in self.sectors.iter().enumerate() {
            if s.offset <= phi {
                idx = i;
            }
        }
        idx
    }

    /// Chart direction of parameter `phi`, with the sector it lives in.
    pub fn direction(&self, phi: f64) -> (usize, Vector) {
        let phi = wrap(phi, self.total);
        let i = self.sector_of(phi);
        let s = &self.sectors[i];
        (i, s.start.rotate(phi - s.offset))
    }

    /// Parameter of chart direction `dir` taken near sector `i` (within π of
    /// its start, through the flat neighborhood of that sector).
    pub fn param_near(&self, i: usize, dir: Vector) -> f64 {
        let s = &self.sectors[i];
        wrap(s.offset + angle_signed(s.start, dir), self.total)
    }

    /// Counterclockwise angle from `a` to `b` on this circle, in [0, total).
    pub fn ccw(&self, a: f64, b: f64) -> f64 {
        wrap(b - a, self.total)
    }
}

/// Counterclockwise angle from parameter `a` to parameter `b` on a circle
/// of total angle `total`.
pub fn ccw_gap(a: f64, b: f64, total: f64) -> f64 {
    wrap(b - a, total)
}

/// Whether leaving at `out` after arriving along `back` (both measured at a
/// point of total angle `total`) leaves at least `π - slack` on both sides.
pub fn straight_enough(back: f64, out: f64, total: f64, slack: f64) -> bool {
    let plus = ccw_gap(back, out, total);
    plus >= PI - slack && total - plus >= PI - slack
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatSurface {
    pub name: Option<String>,
    pub polygons: Vec<PolygonChart>,
    pub gluings: Vec<EdgeGluing>,
    pub cone_points: Vec<ConePoint>,
    /// Ids of cone points with angle greater than 2π.
    pub singularities: Vec<usize>,
    pub area: f64,
    pub euler_characteristic: i64,
    pub tol: Tolerances,
    links: Vec<Vec<EdgeLink>>,
    /// `(cone id, index in the corner cycle)` for every polygon vertex.
    corner_of: Vec<Vec<(usize, usize)>>,
}

pub fn build_surface(spec: &SurfaceSpec) -> Result<FlatSurface, SurfaceError> {
    build_surface_with(spec, Tolerances::default())
}

pub fn build_surface_with(spec: &SurfaceSpec, tol: Tolerances) -> Result<FlatSurface, SurfaceError> {
    let polygons: Vec<PolygonChart> = spec
        .polygons
        .iter()
        .enumerate()
        .map(|(id, v)| PolygonChart { id, vertices: v.clone() })
        .collect();
    for p in &polygons {
        check_polygon(p, tol)?;
    }

    let mut links: Vec<Vec<Option<EdgeLink>>> = polygons.iter().map(|p| vec![None; p.len()]).collect();
    for g in &spec.gluings {
        for &(pi, ei) in [g.side_a, g.side_b].iter() {
            if pi >= polygons.len() || ei >= polygons[pi].len() {
                return Err(SurfaceError::UnknownSide(pi, ei));
            }
        }
        if g.side_a == g.side_b {
            return Err(SurfaceError::DuplicateEdgeReference(g.side_a.0, g.side_a.1));
        }
        for &(pi, ei) in [g.side_a, g.side_b].iter() {
            if links[pi][ei].is_some() {
                return Err(SurfaceError::DuplicateEdgeReference(pi, ei));
            }
        }
        let (pa, ea) = g.side_a;
        let (pb, eb) = g.side_b;
        let e = polygons[pa].edge(ea);
        let f = polygons[pb].edge(eb);
        let (la, lb) = (e.norm(), f.norm());
        if (la - lb).abs() > tol.len {
            return Err(SurfaceError::MismatchedEdgeLengths { a: g.side_a, b: g.side_b, la, lb });
        }
        let rho = g.kind.rho();
        if (f + e * rho).norm() > tol.len {
            return Err(SurfaceError::IncompatibleGluing { a: g.side_a, b: g.side_b, kind: g.kind });
        }
        // vertex ea+1 of A lands on vertex eb of B
        let ab = Iso { rho, trans: polygons[pb].vertex(eb) - polygons[pa].vertex(ea + 1) * rho };
        let ba = ab.inverse();
        links[pa][ea] = Some(EdgeLink { polygon: pb, edge: eb, map: ab });
        links[pb][eb] = Some(EdgeLink { polygon: pa, edge: ea, map: ba });
    }
    let mut full_links = Vec::with_capacity(polygons.len());
    for (pi, row) in links.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (ei, l) in row.iter().enumerate() {
            match l {
                Some(l) => out.push(*l),
                None => return Err(SurfaceError::UnpairedEdge(pi, ei)),
            }
        }
        full_links.push(out);
    }

    // connectivity
    let mut comp: Vec<usize> = (0..polygons.len()).collect();
    fn root(c: &mut [usize], mut i: usize) -> usize {
        while c[i] != i {
            c[i] = c[c[i]];
            i = c[i];
        }
        i
    }
    for g in &spec.gluings {
        let a = root(&mut comp, g.side_a.0);
        let b = root(&mut comp, g.side_b.0);
        comp[a] = b;
    }
    let r0 = root(&mut comp, 0);
    for i in 0..polygons.len() {
        if root(&mut comp, i) != r0 {
            return Err(SurfaceError::NotConnected);
        }
    }

    // corner cycles; the next corner counterclockwise sits across the
    // incoming edge of the current corner
    let mut corner_of: Vec<Vec<(usize, usize)>> = polygons.iter().map(|p| vec![(usize::MAX, 0); p.len()]).collect();
    let mut cone_points = Vec::new();
    for pi in 0..polygons.len() {
        for vi in 0..polygons[pi].len() {
            if corner_of[pi][vi].0 != usize::MAX {
                continue;
            }
            let id = cone_points.len();
            let mut corners = Vec::new();
            let (mut p, mut v) = (pi, vi);
            let mut offset = 0.0;
            loop {
                corner_of[p][v] = (id, corners.len());
                let poly = &polygons[p];
                let n = poly.len();
                let width = angle_ccw(poly.edge(v), poly.edge((v + n - 1) % n) * -1.0);
                corners.push(Corner { polygon: p, vertex: v, offset, width });
                offset += width;
                let l = full_links[p][(v + n - 1) % n];
                p = l.polygon;
                v = l.edge;
                if (p, v) == (pi, vi) {
                    break;
                }
            }
            let angle = offset;
            let kf = (angle / PI).round();
            if (angle - kf * PI).abs() > tol.angle * corners.len().max(1) as f64 {
                return Err(SurfaceError::ConeAngleNotMultipleOfPi { id, angle });
            }
            let k = kf as u32;
            if k < 2 {
                return Err(SurfaceError::ForbiddenConeAngle { id, k });
            }
            cone_points.push(ConePoint { id, corners, angle, k });
        }
    }

    let twice: i64 = cone_points.iter().map(|c| 2 - c.k as i64).sum();
    // 2πχ = Σ(2π − kπ)
    let chi = twice / 2;
    if chi > -2 {
        return Err(SurfaceError::GenusTooSmall { chi });
    }
    let singularities = cone_points.iter().filter(|c| c.k >= 3).map(|c| c.id).collect();
    let area = polygons.iter().map(|p| p.area()).sum();
    Ok(FlatSurface {
        name: spec.name.clone(),
        polygons,
        gluings: spec.gluings.clone(),
        cone_points,
        singularities,
        area,
        euler_characteristic: chi,
        tol,
        links: full_links,
        corner_of,
    })
}

fn check_polygon(p: &PolygonChart, tol: Tolerances) -> Result<(), SurfaceError> {
    let bad = |reason: &str| SurfaceError::InvalidPolygon { polygon: p.id, reason: reason.to_string() };
    if p.len() < 3 {
        return Err(bad("fewer than 3 vertices"));
    }
    for i in 0..p.len() {
        if p.edge(i).norm() <= tol.len {
            return Err(bad("repeated vertex"));
        }
    }
    if p.area() <= 0.0 {
        return Err(bad("vertices are not counterclockwise"));
    }
    for i in 0..p.len() {
        let a = p.edge(i + p.len() - 1);
        let b = p.edge(i);
        if a.cross(b) <= tol.len * a.norm() * b.norm() {
            return Err(bad("not strictly convex"));
        }
    }
    Ok(())
}

/// |2πχ − Σ(2π − θ)| over all cone points.
pub fn gauss_bonnet_check(s: &FlatSurface) -> f64 {
    let sum: f64 = s.cone_points.iter().map(|c| TAU - c.angle).sum();
    (TAU * s.euler_characteristic as f64 - sum).abs()
}

impl FlatSurface {
    pub fn polygon(&self, id: usize) -> &PolygonChart {
        &self.polygons[id]
    }

    pub fn link(&self, polygon: usize, edge: usize) -> EdgeLink {
        self.links[polygon][edge]
    }

    /// Cone point at a polygon vertex, and the corner's index in its cycle.
    pub fn corner_at(&self, polygon: usize, vertex: usize) -> (usize, usize) {
        self.corner_of[polygon][vertex]
    }

    pub fn corner(&self, polygon: usize, vertex: usize) -> &Corner {
        let (c, i) = self.corner_at(polygon, vertex);
        &self.cone_points[c].corners[i]
    }

    pub fn is_singular(&self, cone: usize) -> bool {
        self.cone_points[cone].k >= 3
    }

    pub fn cone_angle(&self, cone: usize) -> f64 {
        self.cone_points[cone].angle
    }

    pub fn locate(&self, p: &SurfacePoint) -> Location {
        let poly = &self.polygons[p.polygon];
        for i in 0..poly.len() {
            if poly.vertex(i).dist(p.pos) <= self.tol.len {
                return Location::Vertex(i);
            }
        }
        for i in 0..poly.len() {
            let e = poly.edge(i);
            let d = e.cross(p.pos - poly.vertex(i)) / e.norm();
            if d.abs() <= self.tol.len {
                return Location::Edge(i);
            }
        }
        Location::Interior
    }

    pub fn contains(&self, p: &SurfacePoint) -> bool {
        if p.polygon >= self.polygons.len() {
            return false;
        }
        let poly = &self.polygons[p.polygon];
        (0..poly.len()).all(|i| {
            let e = poly.edge(i);
            e.cross(p.pos - poly.vertex(i)) / e.norm() >= -self.tol.len
        })
    }

    /// Cone point id if `p` is a polygon vertex.
    pub fn cone_at(&self, p: &SurfacePoint) -> Option<usize> {
        match self.locate(p) {
            Location::Vertex(v) => Some(self.corner_at(p.polygon, v).0),
            _ => None,
        }
    }

    /// Representative of `p` with a canonical polygon: vertices map to the
    /// first corner of their cone point, edge points to the smaller side.
    pub fn canonical(&self, p: &SurfacePoint) -> SurfacePoint {
        match self.locate(p) {
            Location::Vertex(v) => {
                let (c, _) = self.corner_at(p.polygon, v);
                let k = &self.cone_points[c].corners[0];
                SurfacePoint { polygon: k.polygon, pos: self.polygons[k.polygon].vertex(k.vertex) }
            }
            Location::Edge(e) => {
                let l = self.link(p.polygon, e);
                if (l.polygon, l.edge) < (p.polygon, e) {
                    SurfacePoint { polygon: l.polygon, pos: l.map.apply(p.pos) }
                } else {
                    *p
                }
            }
            Location::Interior => *p,
        }
    }

    pub fn same_point(&self, a: &SurfacePoint, b: &SurfacePoint) -> bool {
        let a = self.canonical(a);
        let b = self.canonical(b);
        a.polygon == b.polygon && a.pos.dist(b.pos) <= self.tol.len
    }

    /// Star at a cone point.
    pub fn cone_star(&self, cone: usize) -> Star {
        let c = &self.cone_points[cone];
        let sectors = c
            .corners
            .iter()
            .map(|k| {
                let poly = &self.polygons[k.polygon];
                Sector { polygon: k.polygon, apex: poly.vertex(k.vertex), start: poly.edge(k.vertex).unit(), offset: k.offset, width: k.width }
            })
            .collect();
        Star { sectors, total: c.angle, cone: Some(cone) }
    }

    /// Star of directions at any point.
    pub fn star(&self, p: &SurfacePoint) -> Star {
        let p = self.canonical(p);
        match self.locate(&p) {
            Location::Vertex(v) => self.cone_star(self.corner_at(p.polygon, v).0),
            Location::Edge(e) => {
                let poly = &self.polygons[p.polygon];
                let l = self.link(p.polygon, e);
                let other = &self.polygons[l.polygon];
                Star {
                    sectors: vec![
                        Sector { polygon: p.polygon, apex: p.pos, start: poly.edge(e).unit(), offset: 0.0, width: PI },
                        Sector { polygon: l.polygon, apex: l.map.apply(p.pos), start: other.edge(l.edge).unit(), offset: PI, width: PI },
                    ],
                    total: TAU,
                    cone: None,
                }
            }
            Location::Interior => Star {
                sectors: vec![Sector { polygon: p.polygon, apex: p.pos, start: Vector::new(1.0, 0.0), offset: 0.0, width: TAU }],
                total: TAU,
                cone: None,
            },
        }
    }

    /// Total angle at a point.
    pub fn total_angle(&self, p: &SurfacePoint) -> f64 {
        match self.cone_at(p) {
            Some(c) => self.cone_points[c].angle,
            None => TAU,
        }
    }

    /// Sector angle between two directions at `p` on the chosen side. `Plus`
    /// runs counterclockwise from `d1` to `d2`.
    pub fn flat_angle(&self, p: &SurfacePoint, d1: &DirectionAt, d2: &DirectionAt, side: Side2) -> Result<f64, AngleError> {
        if !self.same_point(p, &d1.base) || !self.same_point(p, &d2.base) {
            return Err(AngleError::MismatchedBasePoint);
        }
        let total = self.total_angle(p);
        let plus = ccw_gap(d1.angle, d2.angle, total);
        Ok(match side {
            Side2::Plus => plus,
            Side2::Minus => total - plus,
        })
    }

    /// Parameter at the cone point of `(polygon, vertex)` for a chart
    /// direction taken in the flat neighborhood of that corner.
    pub fn corner_param(&self, polygon: usize, vertex: usize, dir: Vector) -> f64 {
        let (c, i) = self.corner_at(polygon, vertex);
        let cone = &self.cone_points[c];
        let k = &cone.corners[i];
        let start = self.polygons[polygon].edge(vertex).unit();
        wrap(k.offset + angle_signed(start, dir), cone.angle)
    }

    /// Largest distance from a point of any polygon to the nearest
    /// singular vertex of that polygon, or `None` when some polygon has no
    /// singular vertex.
    pub fn polygon_covering_radius(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for poly in &self.polygons {
            let sites: Vec<Point> =
                (0..poly.len()).filter(|&v| self.is_singular(self.corner_at(poly.id, v).0)).map(|v| poly.vertex(v)).collect();
            if sites.is_empty() {
                return None;
            }
            worst = worst.max(farthest_from_sites(poly, &sites, self.tol.len));
        }
        Some(worst)
    }
}

/// max over x in the convex polygon of min over sites |x - site|, found
/// among the Voronoi candidates: polygon vertices, bisector-edge crossings
/// and interior circumcenters.
fn farthest_from_sites(poly: &PolygonChart, sites: &[Point], eps: f64) -> f64 {
    let inside = |x: Point| {
        (0..poly.len()).all(|i| {
            let e = poly.edge(i);
            e.cross(x - poly.vertex(i)) / e.norm() >= -eps
        })
    };
    let score = |x: Point| sites.iter().map(|s| s.dist(x)).fold(f64::INFINITY, f64::min);
    let mut cands: Vec<Point> = poly.vertices.clone();
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            let m = (sites[i] + sites[j]) * 0.5;
            let d = (sites[j] - sites[i]).perp();
            for e in 0..poly.len() {
                let a = poly.vertex(e);
                let b = poly.vertex(e + 1);
                let den = d.cross(b - a);
                if den.abs() < 1e-15 {
                    continue;
                }
                let t = (a - m).cross(b - a) / den;
                cands.push(m + d * t);
            }
            for k in j + 1..sites.len() {
                if let Some(c) = circumcenter(sites[i], sites[j], sites[k]) {
                    cands.push(c);
                }
            }
        }
    }
    cands.into_iter().filter(|&x| inside(x)).map(score).fold(0.0, f64::max)
}

fn circumcenter(a: Point, b: Point, c: Point) -> Option<Point> {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    if d.abs() < 1e-15 {
        return None;
    }
    let ux = (ac.y * ab.norm2() - ab.y * ac.norm2()) / d;
    let uy = (ab.x * ac.norm2() - ac.x * ab.norm2()) / d;
    Some(a + Vector::new(ux, uy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn torus() -> SurfaceSpec {
        let sq = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
        SurfaceSpec {
            name: None,
            polygons: vec![sq],
            gluings: vec![
                EdgeGluing { side_a: (0, 0), side_b: (0, 2), kind: GluingKind::Translation },
                EdgeGluing { side_a: (0, 1), side_b: (0, 3), kind: GluingKind::Translation },
            ],
        }
    }

    #[test]
    fn octagon_has_one_cone_point_of_6pi() {
        let s = bundled::octagon();
        assert_eq!(s.cone_points.len(), 1);
        assert_eq!(s.cone_points[0].corners.len(), 8);
        assert!((s.cone_points[0].angle - 6.0 * PI).abs() < 1e-9);
        assert_eq!(s.euler_characteristic, -2);
        assert!(gauss_bonnet_check(&s) < 1e-9);
    }

    #[test]
    fn torus_is_rejected() {
        assert_eq!(build_surface(&torus()).unwrap_err(), SurfaceError::GenusTooSmall { chi: 0 });
    }

    #[test]
    fn l3_corner_walk() {
        let s = bundled::l3();
        assert_eq!(s.cone_points.len(), 1);
        let c = &s.cone_points[0];
        assert_eq!(c.k, 6);
        assert_eq!(c.corners.len(), 12);
        assert_eq!(c.corner_cycle()[0], (0, 0));
        assert!((s.area - 3.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_angle_shows_in_residual() {
        let mut s = bundled::l3();
        s.cone_points[0].angle += 0.01;
        assert!((gauss_bonnet_check(&s) - 0.01).abs() < 1e-9);
    }

    #[test]
    fn unpaired_and_duplicate_edges() {
        let mut t = torus();
        t.gluings.pop();
        assert_eq!(build_surface(&t).unwrap_err(), SurfaceError::UnpairedEdge(0, 1));
        let mut t = torus();
        t.gluings[1].side_a = (0, 0);
        assert!(matches!(build_surface(&t).unwrap_err(), SurfaceError::DuplicateEdgeReference(0, 0)));
    }

    #[test]
    fn mismatched_lengths() {
        let mut t = torus();
        t.polygons[0][2].x = 1.5;
        t.polygons[0][1].x = 1.5;
        t.polygons[0][2].y = 1.2;
        assert!(matches!(build_surface(&t).unwrap_err(), SurfaceError::MismatchedEdgeLengths { .. }));
    }

    #[test]
    fn flat_angle_sides() {
        let s = bundled::l3();
        let p = SurfacePoint::new(0, 0.0, 0.0);
        let d1 = DirectionAt { base: p, angle: 0.0 };
        let d2 = DirectionAt { base: SurfacePoint::new(1, 1.0, 1.0), angle: PI };
        assert!((s.flat_angle(&p, &d1, &d2, Side2::Plus).unwrap() - PI).abs() < 1e-12);
        assert!((s.flat_angle(&p, &d1, &d2, Side2::Minus).unwrap() - 5.0 * PI).abs() < 1e-12);
        let q = SurfacePoint::new(0, 0.5, 0.5);
        let e = DirectionAt { base: q, angle: 1.0 };
        assert_eq!(s.flat_angle(&q, &e, &e, Side2::Plus).unwrap(), 0.0);
        assert!((s.flat_angle(&q, &e, &e, Side2::Minus).unwrap() - TAU).abs() < 1e-15);
        assert_eq!(s.flat_angle(&p, &d1, &e, Side2::Plus), Err(AngleError::MismatchedBasePoint));
    }

    #[test]
    fn edge_point_star_is_continuous() {
        let s = bundled::l3();
        // right edge of square A, shared with B
        let p = SurfacePoint::new(0, 1.0, 0.5);
        let star = s.star(&p);
        assert_eq!(star.sectors.len(), 2);
        let (i, d) = star.direction(1.5 * PI);
        let sec = star.sectors[i];
        // direction straight right, seen in B's chart
        assert!((d - Vector::new(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(sec.polygon, 1);
    }

    #[test]
    fn covering_radius_of_l3() {
        let s = bundled::l3();
        let r = s.polygon_covering_radius().unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
