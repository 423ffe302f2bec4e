//! Straight-line unfolding: single rays and wedges of rays developed across
//! polygon gluings.
//!
//! A wedge narrower than π issued from a point develops isometrically into
//! the plane until it meets cone points, which split it. The cast reports
//! every cone point hit in the frame of the wedge's first sector, and
//! optionally the polygon copies it sweeps.

use crate::geom::{angle_signed, origin_segment_dist, ray_line_param, wrap, Iso};
use crate::surface::{FlatSurface, Star, SurfacePoint};
use crate::{Point, Vector};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CastError {
    #[error("unfolding exceeded the budget of {0} beams")]
    PatchBudgetExceeded(usize),
}

impl CastError {
    pub fn name(&self) -> &'static str {
        match self {
            CastError::PatchBudgetExceeded(_) => "PatchBudgetExceeded",
        }
    }
}

/// Default cap on processed beams per cast.
pub const DEFAULT_BEAM_BUDGET: usize = 20_000_000;

/// A cone point seen from the apex of a cast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Direction parameter at the apex.
    pub param: f64,
    /// Position in the cast frame (apex at the origin).
    pub dev: Vector,
    pub dist: f64,
    pub cone: usize,
    /// Parameter at the hit cone point of the direction back to the apex.
    pub back: f64,
}

/// A polygon copy swept by a cast: `iso` maps its chart into the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub polygon: usize,
    pub iso: Iso<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Wedge {
    pub lo: f64,
    pub width: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CastLimits {
    pub radius: f64,
    /// Only keep hits on the apex side of the line through these points.
    pub chord: Option<(Point, Point)>,
    pub max_beams: usize,
}

impl CastLimits {
    pub fn radius(radius: f64) -> Self {
        CastLimits { radius, chord: None, max_beams: DEFAULT_BEAM_BUDGET }
    }
}

#[derive(Debug, Clone, Copy)]
struct Beam {
    polygon: usize,
    iso: Iso<f64>,
    right: Vector,
    left: Vector,
    right_closed: bool,
    left_closed: bool,
    entry: Option<usize>,
}

/// Is unit direction `x` inside the cone from `lo` counterclockwise to `hi`
/// (narrower than π)?
fn within(x: Vector, lo: Vector, hi: Vector) -> bool {
    lo.cross(x) >= -1e-12 && x.cross(hi) >= -1e-12
}

struct Caster<'a> {
    s: &'a FlatSurface,
    lim: CastLimits,
    lo: f64,
    lo_dir: Vector,
    total: f64,
    hits: Vec<Hit>,
    beams: usize,
}

impl<'a> Caster<'a> {
    /// Signed distance beyond the chord (positive on the far side).
    fn beyond(&self, x: Point) -> f64 {
        match self.lim.chord {
            None => f64::NEG_INFINITY,
            Some((a, b)) => {
                let e = b - a;
                let s = e.cross(x - a) / e.norm();
                // orient so that the origin is on the negative side
                if e.cross(-a) > 0.0 {
                    -s
                } else {
                    s
                }
            }
        }
    }

    fn param_of(&self, v: Vector) -> f64 {
        wrap(self.lo + angle_signed(self.lo_dir, v), self.total)
    }

    fn record(&mut self, polygon: usize, vertex: usize, iso: &Iso<f64>, v: Vector) {
        let tol = self.s.tol.len;
        let dist = v.norm();
        if dist > self.lim.radius + tol || self.beyond(v) > tol {
            return;
        }
        // frame = rho·chart + t, so chart directions are rho·frame directions
        let chart_dir = v.unit() * iso.rho;
        let (cone, _) = self.s.corner_at(polygon, vertex);
        let back = self.s.corner_param(polygon, vertex, -chart_dir);
        let param = self.param_of(v);
        if self.s.is_singular(cone) {
            self.hits.push(Hit { param, dev: v, dist, cone, back });
            return;
        }
        // marked point: the ray carries on straight
        let remaining = self.lim.radius - dist;
        if remaining <= 0.0 {
            return;
        }
        if let RayEnd::Cone { cone, dist: d2, back, .. } = trace_from_cone(self.s, cone, back + PI, remaining, true) {
            let total = dist + d2;
            let dev = v.unit() * total;
            if self.beyond(dev) <= tol {
                self.hits.push(Hit { param, dev, dist: total, cone, back });
            }
        }
    }

    fn run(&mut self, mut stack: Vec<Beam>, mut frags: Option<&mut Vec<Fragment>>) -> Result<(), CastError> {
        let tol = self.s.tol.len;
        while let Some(b) = stack.pop() {
            self.beams += 1;
            if self.beams > self.lim.max_beams {
                return Err(CastError::PatchBudgetExceeded(self.lim.max_beams));
            }
            if let Some(f) = frags.as_deref_mut() {
                f.push(Fragment { polygon: b.polygon, iso: b.iso });
            }
            let poly = self.s.polygon(b.polygon);
            let n = poly.len();
            let dv: Vec<Vector> = poly.vertices.iter().map(|&v| b.iso.apply(v)).collect();
            let exits: Vec<usize> = (0..n)
                .filter(|&k| Some(k) != b.entry)
                .filter(|&k| {
                    let e = dv[(k + 1) % n] - dv[k];
                    e.cross(-dv[k]) > tol * e.norm()
                })
                .collect();

            // cone points on the far side of the polygon
            let mut seen = Vec::with_capacity(exits.len() + 1);
            let mut right_blocked = false;
            let mut left_blocked = false;
            for &k in &exits {
                for vi in [k, (k + 1) % n] {
                    if seen.contains(&vi) {
                        continue;
                    }
                    seen.push(vi);
                    let v = dv[vi];
                    if v.norm() <= tol {
                        continue;
                    }
                    let cr = b.right.cross(v);
                    let cl = b.left.cross(v);
                    let on_right = cr.abs() <= tol && b.right.dot(v) > 0.0;
                    let on_left = cl.abs() <= tol && b.left.dot(v) > 0.0;
                    if on_right {
                        right_blocked = true;
                        if b.right_closed {
                            self.record(b.polygon, vi, &b.iso, v);
                        }
                    } else if on_left {
                        left_blocked = true;
                        if b.left_closed {
                            self.record(b.polygon, vi, &b.iso, v);
                        }
                    } else if cr > tol && cl < -tol {
                        self.record(b.polygon, vi, &b.iso, v);
                    }
                }
            }

            for &k in &exits {
                let a = dv[k];
                let c = dv[(k + 1) % n];
                let (right, right_closed) =
                    if b.right.cross(a) > tol { (a.unit(), false) } else { (b.right, b.right_closed && !right_blocked) };
                let (left, left_closed) =
                    if b.left.cross(c) < -tol { (c.unit(), false) } else { (b.left, b.left_closed && !left_blocked) };
                if right.cross(left) <= 1e-15 {
                    continue;
                }
                // an apex inside the polygon sees exit edges outside the beam
                let (ad, cd) = (a.unit(), c.unit());
                if !within(right, b.right, b.left) || !within(left, b.right, b.left) || !within(right, ad, cd) || !within(left, ad, cd) {
                    continue;
                }
                let (tr, tl) = match (ray_line_param(right, a, c), ray_line_param(left, a, c)) {
                    (Some(x), Some(y)) => (x, y),
                    _ => continue,
                };
                let pr = right * tr;
                let pl = left * tl;
                if origin_segment_dist(pr, pl) > self.lim.radius + tol {
                    continue;
                }
                if self.beyond(pr) > tol && self.beyond(pl) > tol {
                    continue;
                }
                let link = self.s.link(b.polygon, k);
                stack.push(Beam {
                    polygon: link.polygon,
                    iso: b.iso.compose(&link.map.inverse()),
                    right,
                    left,
                    right_closed,
                    left_closed,
                    entry: Some(link.edge),
                });
            }
        }
        Ok(())
    }
}

/// Cast the wedge of directions `[lo, lo + width]` (width < π) from the
/// point whose star is given. Hits are reported in the chart frame of the
/// sector containing `lo`, translated so the apex is the origin.
pub fn cast_wedge(
    s: &FlatSurface,
    star: &Star,
    wedge: Wedge,
    lim: CastLimits,
    frags: Option<&mut Vec<Fragment>>,
) -> Result<Vec<Hit>, CastError> {
    assert!(wedge.width < PI, "wedges must be narrower than π");
    let total = star.total;
    let lo = wrap(wedge.lo, total);
    let hi = lo + wedge.width;
    let j0 = star.sector_of(lo);
    let s0 = star.sectors[j0];
    let frame_angle = |u: f64| s0.start.angle() + (u - s0.offset);
    let lo_dir = s0.start.rotate(lo - s0.offset);

    // split at sector boundaries
    let mut stack = Vec::new();
    let mut a = lo;
    let mut j = j0;
    let mut wraps = 0.0;
    while a < hi - 1e-15 {
        let sec = star.sectors[j];
        let end = sec.offset + sec.width + wraps;
        let b = end.min(hi);
        // chart angle of param a in sector j versus its frame angle
        let chart_angle = sec.start.angle() + (a - wraps - sec.offset);
        let delta = frame_angle(a) - chart_angle;
        let rho = delta.cos().round();
        let iso = Iso { rho, trans: -(sec.apex * rho) };
        let right = if a == lo { lo_dir } else { iso.apply_dir(sec.start) };
        let left = iso.apply_dir(sec.start.rotate(b - wraps - sec.offset));
        stack.push(Beam {
            polygon: sec.polygon,
            iso,
            right,
            left,
            right_closed: if a == lo { wedge.lo_closed } else { true },
            left_closed: if b >= hi { wedge.hi_closed } else { false },
            entry: None,
        });
        a = b;
        j += 1;
        if j == star.sectors.len() {
            j = 0;
            wraps += total;
        }
    }
    // process the first sector last so that stack order does not matter for
    // results; hits are sorted below anyway
    stack.reverse();
    let mut c = Caster { s, lim, lo, lo_dir, total, hits: Vec::new(), beams: 0 };
    c.run(stack, frags)?;
    let mut hits = c.hits;
    hits.sort_by(|x, y| {
        let ux = wrap(x.param - lo, total);
        let uy = wrap(y.param - lo, total);
        ux.partial_cmp(&uy).unwrap().then(x.dist.partial_cmp(&y.dist).unwrap())
    });
    Ok(hits)
}

/// Cast the full circle of directions at a point, cut into wedges narrower
/// than π. Hits carry parameters on the star; `dev` is in the frame of the
/// wedge that found them.
pub fn cast_star(s: &FlatSurface, star: &Star, lim: CastLimits, mut frags: Option<&mut Vec<Fragment>>) -> Result<Vec<Hit>, CastError> {
    let mut out = Vec::new();
    for w in star_wedges(star) {
        let hits = cast_wedge(s, star, w, lim, frags.as_deref_mut())?;
        out.extend(hits);
    }
    Ok(out)
}

/// Half-open wedges (each narrower than π) covering a star.
pub fn star_wedges(star: &Star) -> Vec<Wedge> {
    let mut out = Vec::new();
    for sec in &star.sectors {
        let pieces = (sec.width / (0.9 * PI)).ceil().max(1.0) as usize;
        let w = sec.width / pieces as f64;
        for i in 0..pieces {
            out.push(Wedge { lo: sec.offset + w * i as f64, width: w, lo_closed: true, hi_closed: false });
        }
    }
    out
}

/// Where a ray stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayEnd {
    Cone { cone: usize, dist: f64, back: f64, polygon: usize, vertex: usize },
    /// Reached the length limit at a regular point.
    Open { polygon: usize, pos: Point, dir: Vector, dist: f64 },
}

/// Walk the straight ray starting at `pos` in `polygon` with unit chart
/// direction `dir`. With `pass_marked` set the ray continues straight
/// through cone points of angle 2π.
pub fn trace_ray(s: &FlatSurface, polygon: usize, pos: Point, dir: Vector, max_len: f64, pass_marked: bool) -> RayEnd {
    trace_ray_with(s, polygon, pos, dir, max_len, pass_marked, |_, _, _, _| true)
}

/// As [`trace_ray`], calling `visit(polygon, from, to, dir)` for every
/// straight piece inside a polygon; the walk stops early (as an open end at
/// `to`) when the visitor returns `false`.
pub fn trace_ray_with<F: FnMut(usize, Point, Point, Vector) -> bool>(
    s: &FlatSurface,
    polygon: usize,
    pos: Point,
    dir: Vector,
    max_len: f64,
    pass_marked: bool,
    mut visit: F,
) -> RayEnd {
    let tol = s.tol.len;
    let (mut p_id, mut p, mut d) = (polygon, pos, dir);
    let mut entry: Option<usize> = None;
    let mut traveled = 0.0;
    loop {
        let poly = s.polygon(p_id);
        let n = poly.len();
        let mut best: Option<(f64, usize)> = None;
        for k in 0..n {
            if Some(k) == entry {
                continue;
            }
            let e = poly.edge(k);
            let normal = Vector::new(e.y, -e.x) * (1.0 / e.norm());
            let den = d.dot(normal);
            if den <= 1e-15 {
                continue;
            }
            let t = (poly.vertex(k) - p).dot(normal) / den;
            if t <= tol {
                continue;
            }
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, k));
            }
        }
        let (t, k) = match best {
            Some(x) => x,
            None => {
                // stuck on a boundary point pointing outward; treat as a stop
                return RayEnd::Open { polygon: p_id, pos: p, dir: d, dist: traveled };
            }
        };
        let q = p + d * t;
        let vhit = [k, (k + 1) % n].into_iter().find(|&v| poly.vertex(v).dist(q) <= tol);
        let step = match vhit {
            Some(v) => poly.vertex(v).dist(p),
            None => t,
        };
        if traveled + step >= max_len - 1e-15 && !(vhit.is_some() && (traveled + step - max_len).abs() <= tol) {
            let rem = max_len - traveled;
            let end = p + d * rem;
            if !visit(p_id, p, end, d) {
                return RayEnd::Open { polygon: p_id, pos: end, dir: d, dist: max_len };
            }
            return RayEnd::Open { polygon: p_id, pos: end, dir: d, dist: max_len };
        }
        if let Some(v) = vhit {
            let vp = poly.vertex(v);
            if !visit(p_id, p, vp, d) {
                return RayEnd::Open { polygon: p_id, pos: vp, dir: d, dist: traveled + step };
            }
            let (cone, _) = s.corner_at(p_id, v);
            let back = s.corner_param(p_id, v, -d);
            let dist = traveled + step;
            if pass_marked && !s.is_singular(cone) {
                let star = s.cone_star(cone);
                let (i, nd) = star.direction(back + PI);
                let sec = star.sectors[i];
                p_id = sec.polygon;
                p = sec.apex;
                d = nd;
                entry = None;
                traveled = dist;
                continue;
            }
            return RayEnd::Cone { cone, dist, back, polygon: p_id, vertex: v };
        }
        if !visit(p_id, p, q, d) {
            return RayEnd::Open { polygon: p_id, pos: q, dir: d, dist: traveled + t };
        }
        let link = s.link(p_id, k);
        p = link.map.apply(q);
        d = link.map.apply_dir(d);
        p_id = link.polygon;
        entry = Some(link.edge);
        traveled += t;
    }
}

/// Ray leaving cone point `cone` at parameter `param`.
pub fn trace_from_cone(s: &FlatSurface, cone: usize, param: f64, max_len: f64, pass_marked: bool) -> RayEnd {
    let star = s.cone_star(cone);
    let (i, d) = star.direction(param);
    let sec = star.sectors[i];
    trace_ray(s, sec.polygon, sec.apex, d, max_len, pass_marked)
}

/// Ray leaving a point at direction parameter `param` of its star.
pub fn trace_from_point(s: &FlatSurface, p: &SurfacePoint, param: f64, max_len: f64, pass_marked: bool) -> RayEnd {
    let star = s.star(p);
    let (i, d) = star.direction(param);
    let sec = star.sectors[i];
    trace_ray(s, sec.polygon, sec.apex, d, max_len, pass_marked)
}

/// Surface point and arrival direction parameter (pointing back along the
/// ray) at the end of an open ray.
pub fn arrival_at(s: &FlatSurface, end: &RayEnd) -> Option<(SurfacePoint, f64)> {
    match *end {
        RayEnd::Open { polygon, pos, dir, .. } => {
            let p = SurfacePoint { polygon, pos };
            let star = s.star(&p);
            let i = star
                .sectors
                .iter()
                .position(|sec| sec.polygon == polygon && sec.apex.dist(pos) <= s.tol.len)
                .expect("an open ray ends at a regular point of its polygon");
            Some((s.canonical(&p), star.param_near(i, -dir)))
        }
        RayEnd::Cone { .. } => None,
    }
}
