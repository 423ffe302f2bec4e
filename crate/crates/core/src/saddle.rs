//! Saddle connections, flat cylinders, and singular directions near a given
//! direction.

use crate::cast::{arrival_at, cast_star, cast_wedge, trace_from_cone, trace_ray, trace_ray_with, CastError, CastLimits, RayEnd, Wedge};
use crate::geom::{angle_ccw, wrap};
use crate::geodesic::{Anchor, GeodesicPath, PathVertex};
use crate::surface::{FlatSurface, SurfacePoint};
use crate::{Point, Vector};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Range;

/// A saddle connection with a chosen orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedSaddle {
    pub start: usize,
    pub end: usize,
    /// Direction parameter at `start`.
    pub depart: f64,
    /// Direction parameter at `end`, pointing back along the connection.
    pub arrive: f64,
    pub length: f64,
    /// Displacement in the chart of the starting corner.
    pub holonomy: Vector,
}

/// Unoriented saddle connection in canonical orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleConnection {
    pub id: usize,
    pub start: usize,
    pub end: usize,
    pub holonomy: Vector,
    pub length: f64,
    pub start_dir: f64,
    pub end_dir: f64,
}

/// Every oriented saddle connection up to a length, indexed for lookups by
/// departure direction.
#[derive(Debug, Clone)]
pub struct SaddleCatalog {
    pub max_length: f64,
    /// Sorted by `(start, depart)`.
    pub oriented: Vec<OrientedSaddle>,
    /// Index of the reversed connection.
    pub reverse: Vec<usize>,
    /// Canonical unoriented id of each oriented connection.
    pub unoriented: Vec<usize>,
    /// Unoriented connections in canonical order.
    pub canonical: Vec<SaddleConnection>,
    /// Oriented index of each canonical connection.
    pub canonical_oriented: Vec<usize>,
    ranges: Vec<Range<usize>>,
    totals: Vec<f64>,
}

const PARAM_MATCH: f64 = 1e-7;

fn length_key(l: f64) -> i64 {
    (l * 1e9).round() as i64
}

impl SaddleCatalog {
    pub fn build(s: &FlatSurface, max_length: f64) -> Result<Self, CastError> {
        let per_cone: Result<Vec<Vec<OrientedSaddle>>, CastError> = s
            .singularities
            .par_iter()
            .map(|&c| {
                let star = s.cone_star(c);
                let hits = cast_star(s, &star, CastLimits::radius(max_length), None)?;
                Ok(hits
                    .into_iter()
                    .map(|h| OrientedSaddle { start: c, end: h.cone, depart: h.param, arrive: h.back, length: h.dist, holonomy: h.dev })
                    .collect())
            })
            .collect();
        let mut oriented: Vec<OrientedSaddle> = per_cone?.into_iter().flatten().collect();
        oriented.sort_by(|a, b| a.start.cmp(&b.start).then(a.depart.total_cmp(&b.depart)));
        let n_cones = s.cone_points.len();
        let mut ranges = vec![0..0; n_cones];
        let mut i = 0;
        while i < oriented.len() {
            let c = oriented[i].start;
            let j = i + oriented[i..].iter().take_while(|o| o.start == c).count();
            ranges[c] = i..j;
            i = j;
        }
        let totals = s.cone_points.iter().map(|c| c.angle).collect();
        let mut cat = SaddleCatalog {
            max_length,
            oriented,
            reverse: vec![],
            unoriented: vec![],
            canonical: vec![],
            canonical_oriented: vec![],
            ranges,
            totals,
        };
        cat.reverse = (0..cat.oriented.len())
            .map(|i| {
                let o = cat.oriented[i];
                cat.lookup(o.end, o.arrive).filter(|&j| (cat.oriented[j].length - o.length).abs() < 1e-7).unwrap_or(usize::MAX)
            })
            .collect();
        // connections right at the length bound may be found in one
        // direction only; drop the orphans
        let keep: Vec<bool> = cat.reverse.iter().map(|&r| r != usize::MAX).collect();
        if keep.iter().any(|k| !k) {
            let oriented: Vec<OrientedSaddle> = cat.oriented.iter().zip(&keep).filter(|(_, k)| **k).map(|(o, _)| *o).collect();
            let mut again = SaddleCatalog { oriented, ..cat.clone() };
            again.reindex(s);
            return Ok(again);
        }
        cat.finish();
        Ok(cat)
    }

    fn reindex(&mut self, s: &FlatSurface) {
        let mut ranges = vec![0..0; s.cone_points.len()];
        let mut i = 0;
        while i < self.oriented.len() {
            let c = self.oriented[i].start;
            let j = i + self.oriented[i..].iter().take_while(|o| o.start == c).count();
            ranges[c] = i..j;
            i = j;
        }
        self.ranges = ranges;
        self.reverse = (0..self.oriented.len())
            .map(|i| {
                let o = self.oriented[i];
                self.lookup(o.end, o.arrive).expect("reverse exists after pruning")
            })
            .collect();
        self.finish();
    }

    fn finish(&mut self) {
        let n = self.oriented.len();
        let mut reps: Vec<usize> = (0..n)
            .filter(|&i| {
                let o = &self.oriented[i];
                let r = &self.oriented[self.reverse[i]];
                (o.start, o.depart) <= (r.start, r.depart)
            })
            .collect();
        reps.sort_by(|&a, &b| {
            let (x, y) = (&self.oriented[a], &self.oriented[b]);
            length_key(x.length)
                .cmp(&length_key(y.length))
                .then(x.start.cmp(&y.start))
                .then(x.depart.total_cmp(&y.depart))
        });
        let mut unoriented = vec![0; n];
        let mut canonical = Vec::with_capacity(reps.len());
        for (id, &i) in reps.iter().enumerate() {
            unoriented[i] = id;
            unoriented[self.reverse[i]] = id;
            let o = &self.oriented[i];
            canonical.push(SaddleConnection {
                id,
                start: o.start,
                end: o.end,
                holonomy: o.holonomy,
                length: o.length,
                start_dir: o.depart,
                end_dir: o.arrive,
            });
        }
        self.unoriented = unoriented;
        self.canonical = canonical;
        self.canonical_oriented = reps;
    }

    /// Oriented connections leaving `cone`, by increasing departure.
    pub fn from_cone(&self, cone: usize) -> Range<usize> {
        self.ranges.get(cone).cloned().unwrap_or(0..0)
    }

    /// The oriented connection leaving `cone` at parameter `param`.
    pub fn lookup(&self, cone: usize, param: f64) -> Option<usize> {
        let r = self.from_cone(cone);
        if r.is_empty() {
            return None;
        }
        let total = self.totals[cone];
        let slice = &self.oriented[r.clone()];
        let k = slice.partition_point(|o| o.depart < param);
        let cands = [k.wrapping_sub(1), k, 0, slice.len() - 1];
        cands
            .into_iter()
            .filter(|&i| i < slice.len())
            .find(|&i| {
                let d = (slice[i].depart - param).rem_euclid(total);
                d <= PARAM_MATCH || total - d <= PARAM_MATCH
            })
            .map(|i| r.start + i)
    }

    pub fn oriented_connection(&self, i: usize) -> SaddleConnection {
        let o = &self.oriented[i];
        SaddleConnection {
            id: self.unoriented[i],
            start: o.start,
            end: o.end,
            holonomy: o.holonomy,
            length: o.length,
            start_dir: o.depart,
            end_dir: o.arrive,
        }
    }

    pub fn total_angle(&self, cone: usize) -> f64 {
        self.totals[cone]
    }
}

/// All saddle connections of length at most `max_length`, unoriented, in
/// canonical order (length, start id, direction).
pub fn enumerate_saddle_connections(s: &FlatSurface, max_length: f64) -> Result<Vec<SaddleConnection>, CastError> {
    Ok(SaddleCatalog::build(s, max_length)?.canonical)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatCylinder {
    pub circumference: f64,
    pub height: f64,
    /// Unit core direction in the chart of the first bottom connection.
    pub direction: Vector,
    /// Unoriented ids of the boundary connections on each side.
    pub bottom: Vec<usize>,
    pub top: Vec<usize>,
    /// A regular point on the core curve and the core direction there.
    pub core_point: SurfacePoint,
    pub core_dir: Vector,
}

const CYL_OFFSET: f64 = 1e-6;

struct Corridor {
    circumference: f64,
    bottom: f64,
    top: f64,
    /// Boundary vertices `(polygon, vertex, corridor direction in that chart)`.
    low_vertices: Vec<(usize, usize, Vector)>,
    high_vertices: Vec<(usize, usize, Vector)>,
}

/// Walk the straight trajectory through `(polygon, pos)` in direction `u`
/// (offset `base` above the cylinder's bottom line) until it closes up.
fn walk_corridor(s: &FlatSurface, polygon: usize, pos: Point, u: Vector, base: f64, max_len: f64) -> Option<Corridor> {
    let tol = s.tol.len;
    let mut traveled = 0.0;
    let mut closed: Option<f64> = None;
    let mut crossings: Vec<[(usize, usize, f64, Vector); 2]> = Vec::new();
    let end = trace_ray_with(s, polygon, pos, u, max_len, true, |pid, from, to, d| {
        let seg = to.dist(from);
        if traveled > 10.0 * tol && pid == polygon && (d - u).norm() < 1e-9 {
            let w = pos - from;
            let along = w.dot(d);
            if d.cross(w).abs() <= 1e-8 && along >= -tol && along <= seg + tol {
                closed = Some(traveled + along);
                return false;
            }
        }
        // offsets of the exit edge's endpoints
        let poly = s.polygon(pid);
        let n = poly.len();
        if let Some(k) = (0..n).find(|&k| {
            let e = poly.edge(k);
            (e.cross(to - poly.vertex(k)) / e.norm()).abs() <= 1e-9 && e.dot(to - poly.vertex(k)) > 0.0
        }) {
            let off = |v: usize| base + d.cross(poly.vertex(v) - from);
            crossings.push([(pid, k, off(k), d), (pid, (k + 1) % n, off((k + 1) % n), d)]);
        }
        traveled += seg;
        true
    });
    if let RayEnd::Cone { .. } = end {
        return None;
    }
    let c = closed?;
    let mut bottom = f64::NEG_INFINITY;
    let mut top = f64::INFINITY;
    for pair in &crossings {
        for &(_, _, o, _) in pair {
            if o < base {
                bottom = bottom.max(o);
            } else {
                top = top.min(o);
            }
        }
    }
    let mut low_vertices = Vec::new();
    let mut high_vertices = Vec::new();
    for pair in &crossings {
        for &(pid, v, o, d) in pair {
            if (o - bottom).abs() <= 1e-7 && !low_vertices.iter().any(|&(a, b, _)| (a, b) == (pid, v)) {
                low_vertices.push((pid, v, d));
            }
            if (o - top).abs() <= 1e-7 && !high_vertices.iter().any(|&(a, b, _)| (a, b) == (pid, v)) {
                high_vertices.push((pid, v, d));
            }
        }
    }
    Some(Corridor { circumference: c, bottom, top, low_vertices, high_vertices })
}

/// Maximal flat cylinders with circumference at most `max_length`, found
/// from the saddle connections bounding them.
pub fn enumerate_cylinders(s: &FlatSurface, max_length: f64) -> Result<Vec<FlatCylinder>, CastError> {
    let cat = SaddleCatalog::build(s, max_length)?;
    let found: Vec<Option<FlatCylinder>> = (0..cat.oriented.len()).into_par_iter().map(|i| cylinder_left_of(s, &cat, i)).collect();
    let mut seen = BTreeMap::new();
    for c in found.into_iter().flatten() {
        let mut a = c.bottom.clone();
        let mut b = c.top.clone();
        a.sort_unstable();
        b.sort_unstable();
        let key = if a <= b { (a, b) } else { (b, a) };
        seen.entry(key).or_insert(c);
    }
    let mut out: Vec<FlatCylinder> = seen.into_values().collect();
    out.sort_by(|x, y| {
        length_key(x.circumference)
            .cmp(&length_key(y.circumference))
            .then(length_key(x.height).cmp(&length_key(y.height)))
            .then(x.bottom.cmp(&y.bottom))
    });
    Ok(out)
}

fn cylinder_left_of(s: &FlatSurface, cat: &SaddleCatalog, i: usize) -> Option<FlatCylinder> {
    let o = &cat.oriented[i];
    // start just left of the midpoint, reached straight from the cone so
    // the point is never on a polygon side
    let half = 0.5 * o.length;
    let tilt = (CYL_OFFSET / half).asin();
    let (p2, pos2, u2) = match trace_from_cone(s, o.start, o.depart + tilt, half, true) {
        RayEnd::Open { polygon, pos, dir, .. } => (polygon, pos, dir.rotate(-tilt)),
        _ => return None,
    };
    let cor = walk_corridor(s, p2, pos2, u2, CYL_OFFSET, cat.max_length + 1e-7)?;
    if cor.circumference > cat.max_length + 1e-7 || cor.bottom.abs() > 1e-7 || !(cor.top > CYL_OFFSET) {
        return None;
    }
    let side_ids = |verts: &[(usize, usize, Vector)], top: bool| -> Option<Vec<usize>> {
        let mut ids = Vec::new();
        for &(pid, v, d) in verts {
            let (cone, k) = s.corner_at(pid, v);
            if !s.is_singular(cone) {
                continue;
            }
            // the cylinder lies on a known side of `d`, which fixes the
            // branch of the angle when `d` runs backwards along a side
            let mut a = angle_ccw(s.polygon(pid).edge(v), d);
            if a > if top { 1.5 * PI } else { 0.5 * PI } {
                a -= 2.0 * PI;
            }
            let cp = &s.cone_points[cone];
            let j = cat.lookup(cone, wrap(cp.corners[k].offset + a, cp.angle))?;
            if !ids.contains(&cat.unoriented[j]) {
                ids.push(cat.unoriented[j]);
            }
        }
        Some(ids)
    };
    let bottom = side_ids(&cor.low_vertices, false)?;
    let top = side_ids(&cor.high_vertices, true)?;
    if bottom.is_empty() || top.is_empty() {
        return None;
    }
    let h = cor.top;
    // core point: halfway up
    let (cp, cpos, cdir) = match trace_ray(s, p2, pos2, u2.perp(), 0.5 * h - CYL_OFFSET, true) {
        RayEnd::Open { polygon, pos, dir: d2, .. } => (polygon, pos, u2 * d2.dot(u2.perp()).signum()),
        _ => return None,
    };
    Some(FlatCylinder {
        circumference: cor.circumference,
        height: h,
        direction: o.holonomy.unit(),
        bottom,
        top,
        core_point: SurfacePoint { polygon: cp, pos: cpos },
        core_dir: cdir,
    })
}

/// Re-check a cylinder: trajectories at several heights close up after the
/// circumference without meeting a cone point.
pub fn validate_cylinder(s: &FlatSurface, c: &FlatCylinder) -> bool {
    for frac in [-0.45, -0.25, 0.0, 0.25, 0.45] {
        let shift = frac * c.height;
        let start = if shift == 0.0 {
            Some((c.core_point.polygon, c.core_point.pos, c.core_dir))
        } else {
            let n = if shift > 0.0 { c.core_dir.perp() } else { -c.core_dir.perp() };
            match trace_ray(s, c.core_point.polygon, c.core_point.pos, n, shift.abs(), true) {
                RayEnd::Open { polygon, pos, dir, .. } => Some((polygon, pos, c.core_dir * dir.dot(n).signum())),
                _ => None,
            }
        };
        let (p, pos, u) = match start {
            Some(x) => x,
            None => return false,
        };
        match walk_corridor(s, p, pos, u, 0.0, c.circumference + 1e-6) {
            Some(cor) if (cor.circumference - c.circumference).abs() < 1e-6 => {}
            _ => return false,
        }
    }
    true
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DirectionError {
    #[error("no singular direction found within radius {0}")]
    PatchBudgetExceeded(f64),
    #[error("angular tolerance must be positive")]
    NonPositiveTolerance,
    #[error(transparent)]
    Cast(#[from] CastError),
}

/// A geodesic from `x` to a singularity leaving within `eps` of the
/// direction parameter `theta`. The shortest such geodesic is returned,
/// found by casting the sector with doubling radius up to `max_radius`.
pub fn nearest_singular_direction(
    s: &FlatSurface,
    x: &SurfacePoint,
    theta: f64,
    eps: f64,
    max_radius: f64,
) -> Result<(GeodesicPath, f64), DirectionError> {
    if !(eps > 0.0) {
        return Err(DirectionError::NonPositiveTolerance);
    }
    let star = s.star(x);
    let width = (2.0 * eps).min(star.total);
    let pieces = (width / (0.9 * PI)).ceil().max(1.0) as usize;
    let w = width / pieces as f64;
    let lo = theta - width / 2.0;
    let mut r = 1.0;
    loop {
        let mut best: Option<crate::cast::Hit> = None;
        for k in 0..pieces {
            let wedge = Wedge { lo: lo + w * k as f64, width: w, lo_closed: true, hi_closed: k + 1 == pieces };
            for h in cast_wedge(s, &star, wedge, CastLimits::radius(r), None)? {
                let dev = |h: &crate::cast::Hit| crate::surface::ccw_gap(theta, h.param, star.total).min(star.total - crate::surface::ccw_gap(theta, h.param, star.total));
                let better = match &best {
                    None => true,
                    Some(b) => h.dist < b.dist - 1e-12 || ((h.dist - b.dist).abs() <= 1e-12 && dev(&h) < dev(b)),
                };
                if better {
                    best = Some(h);
                }
            }
        }
        if let Some(h) = best {
            let at = match s.cone_at(x) {
                Some(c) => Anchor::Cone(c),
                None => Anchor::Point(s.canonical(x)),
            };
            let path = GeodesicPath {
                vertices: vec![
                    PathVertex { at, incoming: None, outgoing: Some(h.param) },
                    PathVertex { at: Anchor::Cone(h.cone), incoming: Some(h.back), outgoing: None },
                ],
                lengths: vec![h.dist],
            };
            let gap = crate::surface::ccw_gap(theta, h.param, star.total);
            return Ok((path, gap.min(star.total - gap)));
        }
        if r >= max_radius {
            return Err(DirectionError::PatchBudgetExceeded(max_radius));
        }
        r = (2.0 * r).min(max_radius);
    }
}

/// Upper bound for the diameter of the surface: twice the covering radius
/// of the singular set plus the largest distance between singularities.
pub fn diameter_bound(s: &FlatSurface) -> f64 {
    let cover = match s.polygon_covering_radius() {
        Some(r) => r,
        None => {
            // some polygon has only regular vertices: bound via distances to
            // any vertex plus the distance from marked points to singularities
            let to_vertex = s
                .polygons
                .iter()
                .map(|p| {
                    let c = p.vertices.iter().fold(Point::zero(), |a, &v| a + v) * (1.0 / p.len() as f64);
                    p.vertices.iter().map(|v| v.dist(c)).fold(0.0, f64::max) * 2.0
                })
                .fold(0.0, f64::max);
            let marked = s
                .cone_points
                .iter()
                .filter(|c| !c.is_singular())
                .map(|c| {
                    let star = s.cone_star(c.id);
                    let mut r = 1.0;
                    loop {
                        let hits = cast_star(s, &star, CastLimits::radius(r), None).unwrap_or_default();
                        if let Some(d) = hits.iter().map(|h| h.dist).reduce(f64::min) {
                            break d;
                        }
                        r *= 2.0;
                    }
                })
                .fold(0.0, f64::max);
            to_vertex + marked
        }
    };
    let sing = &s.singularities;
    if sing.len() <= 1 {
        return 2.0 * cover;
    }
    // shortest chains of saddle connections between singularities
    let mut reach = 2.0 * cover.max(1.0);
    loop {
        let cat = match SaddleCatalog::build(s, reach) {
            Ok(c) => c,
            Err(_) => return f64::INFINITY,
        };
        let n = s.cone_points.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for c in 0..n {
            d[c][c] = 0.0;
        }
        for o in &cat.oriented {
            d[o.start][o.end] = d[o.start][o.end].min(o.length);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        let worst = sing.iter().flat_map(|&a| sing.iter().map(move |&b| (a, b))).map(|(a, b)| d[a][b]).fold(0.0, f64::max);
        if worst.is_finite() {
            return 2.0 * cover + worst;
        }
        reach *= 2.0;
    }
}

/// Arrival point of a straight ray of length `len` from a regular point.
pub fn point_along(s: &FlatSurface, p: &SurfacePoint, param: f64, len: f64) -> Option<(SurfacePoint, f64)> {
    let end = crate::cast::trace_from_point(s, p, param, len, true);
    arrival_at(s, &end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn l3_unit_connections() {
        let s = bundled::l3();
        let sc = enumerate_saddle_connections(&s, 1.0).unwrap();
        assert_eq!(sc.len(), 6);
        for c in &sc {
            assert!((c.length - 1.0).abs() < 1e-12);
            assert!(c.holonomy.x.abs() < 1e-12 || c.holonomy.y.abs() < 1e-12);
        }
    }

    #[test]
    fn below_systole_is_empty() {
        let s = bundled::octagon();
        assert!(enumerate_saddle_connections(&s, 0.9).unwrap().is_empty());
    }

    #[test]
    fn reverse_is_an_involution() {
        let s = bundled::octagon();
        let cat = SaddleCatalog::build(&s, 4.0).unwrap();
        for i in 0..cat.oriented.len() {
            assert_eq!(cat.reverse[cat.reverse[i]], i);
            assert_ne!(cat.reverse[i], i);
        }
        assert_eq!(cat.canonical.len() * 2, cat.oriented.len());
    }

    #[test]
    fn l3_horizontal_cylinders() {
        let s = bundled::l3();
        let cyl = enumerate_cylinders(&s, 2.0).unwrap();
        let mut horiz: Vec<(f64, f64)> =
            cyl.iter().filter(|c| c.direction.y.abs() < 1e-9).map(|c| (c.circumference, c.height)).collect();
        horiz.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(horiz.len(), 2);
        assert!((horiz[0].0 - 1.0).abs() < 1e-9 && (horiz[0].1 - 1.0).abs() < 1e-6);
        assert!((horiz[1].0 - 2.0).abs() < 1e-9 && (horiz[1].1 - 1.0).abs() < 1e-6);
        for c in &cyl {
            assert!(validate_cylinder(&s, c));
        }
    }

    #[test]
    fn no_cylinder_below_shortest_core() {
        let s = bundled::l3();
        assert!(enumerate_cylinders(&s, 0.5).unwrap().is_empty());
    }

    #[test]
    fn diameter_bounds() {
        assert!((diameter_bound(&bundled::l3()) - 2f64.sqrt()).abs() < 1e-12);
        let d = diameter_bound(&bundled::octagon());
        assert!((d - 1.0 / (PI / 8.0).sin()).abs() < 1e-9);
    }
}
