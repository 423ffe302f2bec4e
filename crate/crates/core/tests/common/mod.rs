//! Helpers shared by the integration tests: independent oracles and random
//! point generation in the cover.
#![allow(dead_code)]

use flatflow_core::cover::{CoverPatch, LiftedPoint};
use flatflow_core::geodesic::{Anchor, GeodesicPath};
use flatflow_core::surface::GluingKind;
use flatflow_core::FlatSurface;
use rand::Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

type P = (f64, f64);

fn sub(a: P, b: P) -> P {
    (a.0 - b.0, a.1 - b.1)
}
fn cross(a: P, b: P) -> f64 {
    a.0 * b.1 - a.1 * b.0
}
fn norm(a: P) -> f64 {
    a.0.hypot(a.1)
}

fn seg_dist(p: P, a: P, b: P) -> f64 {
    let ab = sub(b, a);
    let t = (((p.0 - a.0) * ab.0 + (p.1 - a.1) * ab.1) / (ab.0 * ab.0 + ab.1 * ab.1)).clamp(0.0, 1.0);
    norm(sub(p, (a.0 + t * ab.0, a.1 + t * ab.1)))
}

/// Polygon placement in the plane: `z ↦ rho·z + c`.
#[derive(Clone, Copy)]
struct Place {
    rho: f64,
    c: P,
}

impl Place {
    fn apply(&self, z: P) -> P {
        (self.rho * z.0 + self.c.0, self.rho * z.1 + self.c.1)
    }
}

struct Unfolder<'a> {
    verts: Vec<Vec<P>>,
    glue: BTreeMap<(usize, usize), (usize, usize, f64)>,
    max_len: f64,
    apex: P,
    out: &'a mut Vec<P>,
}

impl Unfolder<'_> {
    fn inside(a: P, d: P, b: P) -> bool {
        let eps = 1e-12;
        cross(a, d) > eps * norm(a) * norm(d) && cross(d, b) > eps * norm(b) * norm(d)
    }

    fn visit(&mut self, poly: usize, place: Place, entry: usize, a: P, b: P) {
        let vs: Vec<P> = self.verts[poly].iter().map(|&v| place.apply(v)).collect();
        let n = vs.len();
        for (j, &v) in vs.iter().enumerate() {
            if j == entry || j == (entry + 1) % n {
                continue;
            }
            let d = sub(v, self.apex);
            if norm(d) <= self.max_len + 1e-9 && Self::inside(a, d, b) {
                self.out.push(d);
            }
        }
        for k in 0..n {
            if k == entry {
                continue;
            }
            self.cross_edge(poly, place, k, &vs, a, b);
        }
    }

    fn cross_edge(&mut self, poly: usize, place: Place, k: usize, vs: &[P], a: P, b: P) {
        let n = vs.len();
        let (ea, eb) = (vs[k], vs[(k + 1) % n]);
        if seg_dist(self.apex, ea, eb) > self.max_len {
            return;
        }
        let (da, db) = (sub(ea, self.apex), sub(eb, self.apex));
        let lo = if cross(a, da) > 0.0 { da } else { a };
        let hi = if cross(db, b) > 0.0 { db } else { b };
        if cross(lo, hi) <= 1e-12 * norm(lo) * norm(hi) {
            return;
        }
        let (next, m, rho) = self.glue[&(poly, k)];
        // edge m of `next` lands on edge k of `poly` reversed
        let qk1 = self.verts[poly][(k + 1) % n];
        let rm = self.verts[next][m];
        let c = (qk1.0 - rho * rm.0, qk1.1 - rho * rm.1);
        let placed = Place { rho: place.rho * rho, c: (place.rho * c.0 + place.c.0, place.rho * c.1 + place.c.1) };
        self.visit(next, placed, m, lo, hi);
    }
}

/// Oriented saddle connection holonomies up to `max_len`, found by unfolding
/// polygon copies across every edge a cone of directions passes through.
/// Every polygon vertex must be a singularity.
pub fn brute_force_holonomies(s: &FlatSurface, max_len: f64) -> Vec<(f64, f64)> {
    assert!(s.cone_points.iter().all(|c| c.angle > 2.0 * PI + 1e-6), "every vertex must be singular");
    let verts: Vec<Vec<P>> = s.polygons.iter().map(|p| p.vertices.iter().map(|v| (v.x, v.y)).collect()).collect();
    let mut glue = BTreeMap::new();
    for g in &s.gluings {
        let rho = match g.kind {
            GluingKind::Translation => 1.0,
            GluingKind::HalfTranslation => -1.0,
        };
        glue.insert(g.side_a, (g.side_b.0, g.side_b.1, rho));
        glue.insert(g.side_b, (g.side_a.0, g.side_a.1, rho));
    }
    let mut out = Vec::new();
    for p in 0..verts.len() {
        let n = verts[p].len();
        for i in 0..n {
            let apex = verts[p][i];
            let lo = sub(verts[p][(i + 1) % n], apex);
            let hi = sub(verts[p][(i + n - 1) % n], apex);
            let mut u = Unfolder { verts: verts.clone(), glue: glue.clone(), max_len, apex, out: &mut out };
            if norm(lo) <= max_len + 1e-9 {
                u.out.push(lo);
            }
            let place = Place { rho: 1.0, c: (0.0, 0.0) };
            let vs = verts[p].clone();
            for j in 0..n {
                if j == i || j == (i + 1) % n || j == (i + n - 1) % n {
                    continue;
                }
                let d = sub(vs[j], apex);
                if norm(d) <= max_len + 1e-9 {
                    u.out.push(d);
                }
            }
            for k in 0..n {
                if k == i || k == (i + n - 1) % n {
                    continue;
                }
                u.cross_edge(p, place, k, &vs, lo, hi);
            }
        }
    }
    out
}

/// Holonomy up to sign, rounded, as a sortable key.
pub fn unsigned_key(v: (f64, f64)) -> (i64, i64) {
    let (x, y) = if v.0 > 1e-9 || (v.0.abs() <= 1e-9 && v.1 > 0.0) { v } else { (-v.0, -v.1) };
    ((x * 1e8).round() as i64, (y * 1e8).round() as i64)
}

/// Multiset of unsigned holonomies.
pub fn holonomy_multiset<I: IntoIterator<Item = (f64, f64)>>(it: I) -> BTreeMap<(i64, i64), usize> {
    let mut m = BTreeMap::new();
    for v in it {
        *m.entry(unsigned_key(v)).or_insert(0) += 1;
    }
    m
}

/// A random point within `r` of the base, reached through admissible turns
/// at singularities.
pub fn random_point<R: Rng>(patch: &CoverPatch, rng: &mut R, r: f64) -> LiftedPoint {
    let mut word = vec![];
    let mut left = rng.gen_range(0.0..r);
    loop {
        let (total, lo, width) = if word.is_empty() {
            (patch.base_star().total, 0.0, patch.base_star().total)
        } else {
            let n = patch.node(&word).unwrap();
            let t = patch.surface.cone_angle(n.cone);
            (t, n.arrive + PI, t - 2.0 * PI)
        };
        let dir = (lo + rng.gen_range(0.0..width)) % total;
        let p = patch.canonical_point(&LiftedPoint { word: word.clone(), dir, dist: left }).unwrap();
        if p.word.len() == word.len() || rng.gen_bool(0.5) {
            return p;
        }
        let next = p.word[..word.len() + 1].to_vec();
        let d = patch.distance_bound(&LiftedPoint::node(next.clone())).unwrap();
        word = next;
        left = (r - d) * rng.gen_range(0.0..1.0);
        if left <= 1e-6 {
            return LiftedPoint::node(word);
        }
    }
}

/// Both angles at every interior vertex are at least π.
pub fn angles_ok(s: &FlatSurface, g: &GeodesicPath) -> bool {
    g.vertices[1..g.vertices.len().saturating_sub(1)].iter().all(|v| {
        let total = match v.at {
            Anchor::Cone(c) => s.cone_angle(c),
            Anchor::Point(_) => 2.0 * PI,
        };
        let a = (v.incoming.unwrap() - v.outgoing.unwrap()).rem_euclid(total);
        a >= PI - 1e-9 && total - a >= PI - 1e-9
    })
}

/// Distance from the nearest integer point other than the endpoints to the
/// segment `a → a + v` (square-tiled surfaces, where every integer point of
/// a development is a singularity).
pub fn lattice_clearance(a: P, v: P) -> f64 {
    let b = (a.0 + v.0, a.1 + v.1);
    let (x0, x1) = (a.0.min(b.0).floor() as i64 - 1, a.0.max(b.0).ceil() as i64 + 1);
    let (y0, y1) = (a.1.min(b.1).floor() as i64 - 1, a.1.max(b.1).ceil() as i64 + 1);
    let mut best = f64::INFINITY;
    for x in x0..=x1 {
        for y in y0..=y1 {
            let z = (x as f64, y as f64);
            if norm(sub(z, a)) < 1e-9 || norm(sub(z, b)) < 1e-9 {
                continue;
            }
            best = best.min(seg_dist(z, a, b));
        }
    }
    best
}

/// Length of a random competitor to `g` on a square-tiled surface: every
/// interior singular vertex is moved to a random point of a small disc
/// around it, and consecutive moved points are joined by the straight
/// segment of the developed neighbourhood of the leg between them, or
/// through the singularity when that segment is not available.
pub fn perturbed_polyline_length<R: Rng>(s: &FlatSurface, g: &GeodesicPath, rng: &mut R) -> f64 {
    let k = g.vertices.len();
    let vecs = g.segment_vectors(s);
    let start = match g.vertices[0].at {
        Anchor::Point(p) => (p.pos.x.rem_euclid(1.0), p.pos.y.rem_euclid(1.0)),
        Anchor::Cone(_) => (0.0, 0.0),
    };
    let mut clear = Vec::with_capacity(k - 1);
    for (i, v) in vecs.iter().enumerate() {
        let a = if i == 0 { start } else { (0.0, 0.0) };
        clear.push(lattice_clearance(a, (v.x, v.y)));
    }
    // (radius, param) of the moved point, none for the endpoints
    let moved: Vec<Option<(f64, f64)>> = (0..k)
        .map(|i| {
            if i == 0 || i == k - 1 {
                return None;
            }
            let Anchor::Cone(c) = g.vertices[i].at else { return None };
            let cap = 0.45 * clear[i - 1].min(clear[i]).min(0.2);
            Some((rng.gen_range(0.0..cap), rng.gen_range(0.0..s.cone_angle(c))))
        })
        .collect();
    let wrap = |x: f64, total: f64| {
        let y = x.rem_euclid(total);
        if y > total / 2.0 {
            y - total
        } else {
            y
        }
    };
    let mut total = 0.0;
    for i in 0..k - 1 {
        let l = g.lengths[i];
        let mut from: (P, f64) = ((0.0, 0.0), 0.0);
        if let (Some((r, th)), Anchor::Cone(c)) = (moved[i], g.vertices[i].at) {
            let a = wrap(th - g.vertices[i].outgoing.unwrap(), s.cone_angle(c));
            from = if a.abs() < PI - 1e-9 { ((r * a.cos(), r * a.sin()), 0.0) } else { ((0.0, 0.0), r) };
        }
        let mut to: (P, f64) = ((l, 0.0), 0.0);
        if let (Some((r, th)), Anchor::Cone(c)) = (moved[i + 1], g.vertices[i + 1].at) {
            let d = wrap(th - g.vertices[i + 1].incoming.unwrap(), s.cone_angle(c));
            to = if d.abs() < PI - 1e-9 { ((l + r * (PI + d).cos(), r * (PI + d).sin()), 0.0) } else { ((l, 0.0), r) };
        }
        let crosses_slit = |a: P, b: P| {
            if (a.1 > 0.0 && b.1 > 0.0) || (a.1 < 0.0 && b.1 < 0.0) || a.1 == b.1 {
                return false;
            }
            let t = a.1 / (a.1 - b.1);
            let x = a.0 + t * (b.0 - a.0);
            x < -1e-12 || x > l + 1e-12
        };
        if crosses_slit(from.0, to.0) {
            if let Some((r, _)) = moved[i] {
                if from.1 == 0.0 {
                    from = ((0.0, 0.0), r);
                }
            }
        }
        if crosses_slit(from.0, to.0) {
            if let Some((r, _)) = moved[i + 1] {
                if to.1 == 0.0 {
                    to = ((l, 0.0), r);
                }
            }
        }
        assert!(!crosses_slit(from.0, to.0));
        total += from.1 + norm(sub(to.0, from.0)) + to.1;
    }
    total
}
