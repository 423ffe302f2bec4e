//! The universal cover around a base point.
//!
//! Lifted singularities form a tree: the geodesic from the base to a lifted
//! singularity turns only at lifted singularities, so each one is reached
//! from the previous vertex of that geodesic by a single straight leg. Legs
//! out of the base are the singularities visible from it; legs out of a
//! lifted singularity are the oriented saddle connections leaving at least
//! π on both sides of the arrival direction. A node is named by its word of
//! legs, and distinct words are distinct points of the cover.
//!
//! Points of the cover are a node plus a straight final leg. Geodesics
//! between two points start as the tree path through the common ancestor
//! and are tightened at every corner narrower than π until none is left.

use crate::cast::{arrival_at, cast_star, cast_wedge, trace_from_cone, trace_from_point, CastError, CastLimits, Fragment, RayEnd, Wedge};
use crate::geodesic::{Anchor, GeodesicPath, PathVertex};
use crate::geom::{angle_signed, wrap};
use crate::saddle::SaddleCatalog;
use crate::surface::{ccw_gap, straight_enough, FlatSurface, Star, SurfacePoint};
use crate::{Isometry, Point};
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("radius must be finite and non-negative, got {0}")]
    InvalidRadius(f64),
    #[error("point at distance up to {dist} lies outside the certified radius {radius}")]
    OutsideCertifiedRadius { dist: f64, radius: f64 },
    #[error("patch exceeded the budget of {0} items")]
    PatchBudgetExceeded(usize),
    #[error("word does not name a lifted singularity: {0}")]
    InvalidWord(String),
    #[error("tightening did not converge")]
    NoConvergence,
}

impl CoverError {
    pub fn name(&self) -> &'static str {
        match self {
            CoverError::InvalidRadius(_) => "InvalidRadius",
            CoverError::OutsideCertifiedRadius { .. } => "OutsideCertifiedRadius",
            CoverError::PatchBudgetExceeded(_) => "PatchBudgetExceeded",
            CoverError::InvalidWord(_) => "InvalidWord",
            CoverError::NoConvergence => "NoConvergence",
        }
    }
}

impl From<CastError> for CoverError {
    fn from(e: CastError) -> Self {
        match e {
            CastError::PatchBudgetExceeded(n) => CoverError::PatchBudgetExceeded(n),
        }
    }
}

/// A straight leg from the base to a visible singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootLeg {
    pub cone: usize,
    /// Parameter at the base.
    pub depart: f64,
    /// Parameter at the singularity pointing back to the base.
    pub arrive: f64,
    pub length: f64,
}

/// A lifted singularity.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedNode {
    /// Root leg index, then oriented catalog indices.
    pub word: Vec<usize>,
    pub cone: usize,
    pub dist: f64,
    /// Parameter pointing back toward the base.
    pub arrive: f64,
}

/// A point of the cover: go along the legs of `word`, then straight for
/// `dist` in direction `dir` (a parameter at the last node, or at the base
/// when the word is empty).
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoint {
    pub word: Vec<usize>,
    pub dir: f64,
    pub dist: f64,
}

impl LiftedPoint {
    pub fn base() -> Self {
        LiftedPoint { word: vec![], dir: 0.0, dist: 0.0 }
    }

    pub fn node(word: Vec<usize>) -> Self {
        LiftedPoint { word, dir: 0.0, dist: 0.0 }
    }
}

/// A polygon copy in the cover, developed into the frame of the wedge that
/// swept it from node `word` (the base when empty).
#[derive(Debug, Clone, PartialEq)]
pub struct DevelopedCell {
    pub id: usize,
    pub polygon: usize,
    pub iso: Isometry,
    pub word: Vec<usize>,
}

/// The cover out to a radius, held implicitly.
#[derive(Debug, Clone)]
pub struct CoverPatch<'a> {
    pub surface: &'a FlatSurface,
    pub base: SurfacePoint,
    pub base_cone: Option<usize>,
    pub radius: f64,
    pub catalog: SaddleCatalog,
    /// Sorted by departure parameter.
    pub roots: Vec<RootLeg>,
    base_star: Star,
    /// Departure parameters of the catalog, per cone.
    departs: Vec<Vec<f64>>,
}

/// Cyclic parameter window `[lo, lo + width]` as index ranges into a list
/// sorted by parameter in `[0, total)`.
fn window_ranges(params: &[f64], lo: f64, width: f64, total: f64) -> [Range<usize>; 2] {
    let lo = wrap(lo, total);
    let hi = lo + width;
    let first = |x: f64| params.partition_point(|&p| p < x);
    let last = |x: f64| params.partition_point(|&p| p <= x);
    if hi < total {
        [first(lo)..last(hi), 0..0]
    } else {
        [first(lo)..params.len(), 0..last(hi - total)]
    }
}

pub fn develop_patch<'a>(s: &'a FlatSurface, base: &SurfacePoint, radius: f64) -> Result<CoverPatch<'a>, CoverError> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(CoverError::InvalidRadius(radius));
    }
    let base = s.canonical(base);
    let base_cone = s.cone_at(&base).filter(|&c| s.is_singular(c));
    let catalog = SaddleCatalog::build(s, radius)?;
    let base_star = match base_cone {
        Some(c) => s.cone_star(c),
        None => s.star(&base),
    };
    let mut roots: Vec<RootLeg> = match base_cone {
        Some(c) => catalog
            .from_cone(c)
            .map(|i| {
                let o = &catalog.oriented[i];
                RootLeg { cone: o.end, depart: o.depart, arrive: o.arrive, length: o.length }
            })
            .collect(),
        None => cast_star(s, &base_star, CastLimits::radius(radius), None)?
            .into_iter()
            .map(|h| RootLeg { cone: h.cone, depart: h.param, arrive: h.back, length: h.dist })
            .collect(),
    };
    roots.sort_by(|a, b| a.depart.total_cmp(&b.depart));
    let departs = (0..s.cone_points.len()).map(|c| catalog.oriented[catalog.from_cone(c)].iter().map(|o| o.depart).collect()).collect();
    Ok(CoverPatch { surface: s, base, base_cone, radius, catalog, roots, base_star, departs })
}

impl<'a> CoverPatch<'a> {
    pub fn base_anchor(&self) -> Anchor {
        match self.base_cone {
            Some(c) => Anchor::Cone(c),
            None => Anchor::Point(self.base),
        }
    }

    pub fn base_star(&self) -> &Star {
        &self.base_star
    }

    /// Oriented catalog indices leaving `cone` within the admissible window
    /// after arriving along `arrive`.
    pub fn successors(&self, cone: usize, arrive: f64) -> [Range<usize>; 2] {
        let r = self.catalog.from_cone(cone);
        let total = self.surface.cone_angle(cone);
        let eps = self.surface.tol.angle;
        let [a, b] = window_ranges(&self.departs[cone], arrive + PI - eps, total - 2.0 * PI + 2.0 * eps, total);
        [r.start + a.start..r.start + a.end, r.start + b.start..r.start + b.end]
    }

    /// Cone, distance and arrival parameter of the node named by `word`.
    pub fn node(&self, word: &[usize]) -> Result<LiftedNode, CoverError> {
        let bad = |m: &str| CoverError::InvalidWord(m.to_string());
        let (&r, rest) = word.split_first().ok_or_else(|| bad("empty word"))?;
        let root = self.roots.get(r).ok_or_else(|| bad("unknown root leg"))?;
        let (mut cone, mut arrive, mut dist) = (root.cone, root.arrive, root.length);
        for &i in rest {
            let o = self.catalog.oriented.get(i).ok_or_else(|| bad("unknown saddle connection"))?;
            let total = self.surface.cone_angle(cone);
            if o.start != cone || !straight_enough(arrive, o.depart, total, self.surface.tol.angle) {
                return Err(bad("leg not admissible"));
            }
            cone = o.end;
            arrive = o.arrive;
            dist += o.length;
        }
        Ok(LiftedNode { word: word.to_vec(), cone, dist, arrive })
    }

    /// Every lifted singularity within `radius` of the base, depth first.
    pub fn lifted_singularities(&self, radius: f64, max_count: usize) -> Result<Vec<LiftedNode>, CoverError> {
        let mut out = Vec::new();
        let mut word = Vec::new();
        let mut err = None;
        self.walk_nodes(radius, &mut word, &mut |w, cone, dist, arrive| {
            if out.len() >= max_count {
                err = Some(CoverError::PatchBudgetExceeded(max_count));
                return false;
            }
            out.push(LiftedNode { word: w.to_vec(), cone, dist, arrive });
            true
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Depth-first walk over nodes within `radius`; the visitor returns
    /// whether to continue.
    pub fn walk_nodes<F: FnMut(&[usize], usize, f64, f64) -> bool>(&self, radius: f64, word: &mut Vec<usize>, visit: &mut F) -> bool {
        for (r, root) in self.roots.iter().enumerate() {
            if root.length > radius + self.surface.tol.len {
                continue;
            }
            word.push(r);
            let go = visit(word, root.cone, root.length, root.arrive) && self.walk_below(radius, word, root.cone, root.length, root.arrive, visit);
            word.pop();
            if !go {
                return false;
            }
        }
        true
    }

    fn walk_below<F: FnMut(&[usize], usize, f64, f64) -> bool>(
        &self,
        radius: f64,
        word: &mut Vec<usize>,
        cone: usize,
        dist: f64,
        arrive: f64,
        visit: &mut F,
    ) -> bool {
        for range in self.successors(cone, arrive) {
            for i in range {
                let o = self.catalog.oriented[i];
                let d = dist + o.length;
                if d > radius + self.surface.tol.len {
                    continue;
                }
                word.push(i);
                let go = visit(word, o.end, d, o.arrive) && self.walk_below(radius, word, o.end, d, o.arrive, visit);
                word.pop();
                if !go {
                    return false;
                }
            }
        }
        true
    }

    /// Upper bound on the distance from the base (exact when the word and
    /// final leg form a geodesic).
    pub fn distance_bound(&self, p: &LiftedPoint) -> Result<f64, CoverError> {
        let d = if p.word.is_empty() { 0.0 } else { self.node(&p.word)?.dist };
        Ok(d + p.dist)
    }

    fn root_by_param(&self, param: f64) -> Option<usize> {
        let total = self.base_star.total;
        self.roots.iter().position(|r| {
            let d = ccw_gap(r.depart, param, total);
            d <= 1e-7 || total - d <= 1e-7
        })
    }

    /// Rewrite a point so that its final leg meets no singularity before
    /// its end (a final leg ending exactly at one becomes that node).
    pub fn canonical_point(&self, p: &LiftedPoint) -> Result<LiftedPoint, CoverError> {
        let s = self.surface;
        let bound = self.distance_bound(p)?;
        if bound > self.radius + s.tol.len {
            return Err(CoverError::OutsideCertifiedRadius { dist: bound, radius: self.radius });
        }
        let mut q = p.clone();
        let tol = s.tol.len;
        while q.dist > tol {
            let end = if q.word.is_empty() {
                match self.base_cone {
                    Some(c) => trace_from_cone(s, c, q.dir, q.dist + tol, true),
                    None => trace_from_point(s, &self.base, q.dir, q.dist + tol, true),
                }
            } else {
                trace_from_cone(s, self.node(&q.word)?.cone, q.dir, q.dist + tol, true)
            };
            match end {
                RayEnd::Cone { cone, dist, back, .. } if dist <= q.dist + tol => {
                    let leg = if q.word.is_empty() {
                        self.root_by_param(q.dir)
                    } else {
                        let from = self.node(&q.word)?.cone;
                        self.catalog.lookup(from, q.dir)
                    };
                    let leg = leg.ok_or(CoverError::OutsideCertifiedRadius { dist: bound, radius: self.radius })?;
                    q.word.push(leg);
                    if dist >= q.dist - tol {
                        q.dist = 0.0;
                        q.dir = 0.0;
                    } else {
                        q.dist -= dist;
                        q.dir = wrap(back + PI, s.cone_angle(cone));
                    }
                }
                _ => break,
            }
        }
        if q.dist <= tol {
            q.dist = 0.0;
            q.dir = 0.0;
        }
        Ok(q)
    }

    /// Anchor of a canonical point and, for a point off the tree, the
    /// parameter at it pointing back along its final leg.
    fn anchor_of(&self, p: &LiftedPoint) -> Result<(Anchor, Option<f64>), CoverError> {
        let s = self.surface;
        if p.dist == 0.0 {
            return Ok(if p.word.is_empty() { (self.base_anchor(), None) } else { (Anchor::Cone(self.node(&p.word)?.cone), None) });
        }
        let end = if p.word.is_empty() {
            match self.base_cone {
                Some(c) => trace_from_cone(s, c, p.dir, p.dist, true),
                None => trace_from_point(s, &self.base, p.dir, p.dist, true),
            }
        } else {
            trace_from_cone(s, self.node(&p.word)?.cone, p.dir, p.dist, true)
        };
        let (at, back) = arrival_at(s, &end).ok_or(CoverError::NoConvergence)?;
        let at = match s.cone_at(&at) {
            Some(c) => Anchor::Cone(c),
            None => Anchor::Point(at),
        };
        Ok((at, Some(back)))
    }

    /// Tree path from `p` up to the common ancestor and down to `q`.
    pub fn tree_path(&self, p: &LiftedPoint, q: &LiftedPoint) -> Result<GeodesicPath, CoverError> {
        let p = self.canonical_point(p)?;
        let q = self.canonical_point(q)?;
        let k = p.word.iter().zip(&q.word).take_while(|(a, b)| a == b).count();

        // node vertices from p's node up to the ancestor, then down to q's
        let mut verts: Vec<PathVertex> = Vec::new();
        let mut lengths: Vec<f64> = Vec::new();
        let leg = |word: &[usize]| -> (f64, f64, f64) {
            let last = *word.last().unwrap();
            if word.len() == 1 {
                let r = &self.roots[last];
                (r.depart, r.arrive, r.length)
            } else {
                let o = &self.catalog.oriented[last];
                (o.depart, o.arrive, o.length)
            }
        };
        let anchor_of_prefix = |word: &[usize]| -> Result<Anchor, CoverError> {
            Ok(if word.is_empty() { self.base_anchor() } else { Anchor::Cone(self.node(word)?.cone) })
        };

        let (pa, pback) = self.anchor_of(&p)?;
        if p.dist > 0.0 {
            verts.push(PathVertex { at: pa, incoming: None, outgoing: pback });
            lengths.push(p.dist);
        }
        // ascend: vertices p.word[..m] for m = len..k (inclusive)
        let mut m = p.word.len();
        let mut incoming = if p.dist > 0.0 { Some(p.dir) } else { None };
        while m > k {
            let (depart, arrive, len) = leg(&p.word[..m]);
            verts.push(PathVertex { at: anchor_of_prefix(&p.word[..m])?, incoming, outgoing: Some(arrive) });
            lengths.push(len);
            incoming = Some(depart);
            m -= 1;
        }
        // the ancestor
        let down_out = if q.word.len() > k {
            Some(leg(&q.word[..k + 1]).0)
        } else if q.dist > 0.0 {
            Some(q.dir)
        } else {
            None
        };
        verts.push(PathVertex { at: anchor_of_prefix(&q.word[..k])?, incoming, outgoing: down_out });
        // descend
        for m in k + 1..=q.word.len() {
            let (_, arrive, len) = leg(&q.word[..m]);
            lengths.push(len);
            let out = if m < q.word.len() {
                Some(leg(&q.word[..m + 1]).0)
            } else if q.dist > 0.0 {
                Some(q.dir)
            } else {
                None
            };
            verts.push(PathVertex { at: anchor_of_prefix(&q.word[..m])?, incoming: Some(arrive), outgoing: out });
        }
        if q.dist > 0.0 {
            let (qa, qback) = self.anchor_of(&q)?;
            lengths.push(q.dist);
            verts.push(PathVertex { at: qa, incoming: qback, outgoing: None });
        }
        Ok(GeodesicPath { vertices: verts, lengths })
    }

    /// Polygon copies covering the ball of the patch radius: those swept
    /// from the base and, behind each lifted singularity, those swept
    /// across its admissible window.
    pub fn develop_cells(&self, max_cells: usize) -> Result<Vec<DevelopedCell>, CoverError> {
        let s = self.surface;
        let mut cells = Vec::new();
        let mut seen = BTreeSet::new();
        let mut push = |word: &[usize], frags: Vec<Fragment>, star: &Star, lo: f64, cells: &mut Vec<DevelopedCell>| -> Result<(), CoverError> {
            let (_, lo_dir) = star.direction(lo);
            for f in frags {
                let poly = s.polygon(f.polygon);
                let c = poly.vertices.iter().fold(Point::zero(), |acc, &v| acc + f.iso.apply(v)) * (1.0 / poly.len() as f64);
                let key = (
                    word.to_vec(),
                    f.polygon,
                    (wrap(lo + angle_signed(lo_dir, c), star.total) * 1e7).round() as i64,
                    (c.norm() * 1e7).round() as i64,
                );
                if seen.insert(key) {
                    if cells.len() >= max_cells {
                        return Err(CoverError::PatchBudgetExceeded(max_cells));
                    }
                    cells.push(DevelopedCell { id: cells.len(), polygon: f.polygon, iso: f.iso, word: word.to_vec() });
                }
            }
            Ok(())
        };
        if self.radius == 0.0 {
            let iso = Isometry { rho: 1.0, trans: -self.base.pos };
            return Ok(vec![DevelopedCell { id: 0, polygon: self.base.polygon, iso, word: vec![] }]);
        }
        for w in crate::cast::star_wedges(&self.base_star) {
            let mut frags = Vec::new();
            cast_wedge(s, &self.base_star, w, CastLimits::radius(self.radius), Some(&mut frags))?;
            push(&[], frags, &self.base_star, w.lo, &mut cells)?;
        }
        let nodes = self.lifted_singularities(self.radius, max_cells)?;
        for n in nodes {
            let star = s.cone_star(n.cone);
            let width = star.total - 2.0 * PI;
            let pieces = (width / (0.9 * PI)).ceil().max(1.0) as usize;
            let step = width / pieces as f64;
            for k in 0..pieces {
                let lo = n.arrive + PI + step * k as f64;
                let w = Wedge { lo, width: step, lo_closed: true, hi_closed: k + 1 == pieces };
                let mut frags = Vec::new();
                cast_wedge(s, &star, w, CastLimits::radius(self.radius - n.dist), Some(&mut frags))?;
                push(&n.word, frags, &star, wrap(lo, star.total), &mut cells)?;
            }
        }
        Ok(cells)
    }
}

fn anchor_star(s: &FlatSurface, a: &Anchor) -> Star {
    match a {
        Anchor::Cone(c) => s.cone_star(*c),
        Anchor::Point(p) => match s.cone_at(p) {
            Some(c) => s.cone_star(c),
            None => s.star(p),
        },
    }
}

fn anchor_singular(s: &FlatSurface, a: &Anchor) -> bool {
    match a {
        Anchor::Cone(c) => s.is_singular(*c),
        Anchor::Point(p) => s.cone_at(p).is_some_and(|c| s.is_singular(c)),
    }
}

const MAX_TIGHTEN_STEPS: usize = 1_000_000;

/// Shorten a path with fixed endpoints until every interior vertex is a
/// singularity leaving at least π on both sides. The result is the unique
/// geodesic of the cover between the endpoints.
pub fn tighten(s: &FlatSurface, path: &GeodesicPath) -> Result<GeodesicPath, CoverError> {
    let mut verts = path.vertices.clone();
    let mut lens = path.lengths.clone();
    let eps = s.tol.angle;
    let tol = s.tol.len;
    let mut i = 1;
    let mut steps = 0;
    while i + 1 < verts.len() {
        steps += 1;
        if steps > MAX_TIGHTEN_STEPS {
            return Err(CoverError::NoConvergence);
        }
        let v = verts[i];
        let star = anchor_star(s, &v.at);
        let total = star.total;
        let back = v.incoming.unwrap();
        let out = v.outgoing.unwrap();
        let ccw = ccw_gap(out, back, total);
        let singular = anchor_singular(s, &v.at);
        if singular && straight_enough(back, out, total, eps) {
            i += 1;
            continue;
        }
        let (d1, d2) = (lens[i - 1], lens[i]);
        if !singular && ccw >= PI - 1e-12 && total - ccw >= PI - 1e-12 {
            // straight through a regular point
            lens[i - 1] = d1 + d2;
            lens.remove(i);
            verts.remove(i);
            i = i.max(2) - 1;
            continue;
        }
        // the narrow side: from `lo` counterclockwise by `alpha`
        let (lo, alpha, lo_is_next) = if ccw < PI { (out, ccw, true) } else { (back, total - ccw, false) };
        if alpha < 1e-9 {
            // the path doubles back along itself
            let (a, b) = (verts[i - 1], verts[i + 1]);
            if (d1 - d2).abs() <= tol {
                verts.remove(i + 1);
                verts.remove(i);
                let mut merged = a;
                merged.outgoing = b.outgoing;
                verts[i - 1] = merged;
                lens.remove(i);
                lens.remove(i - 1);
                if verts.len() == 1 {
                    break;
                }
            } else if d1 > d2 {
                // b lies on the segment toward a
                let bt = anchor_star(s, &b.at).total;
                verts[i + 1].incoming = Some(wrap(b.incoming.unwrap() + PI, bt));
                lens[i - 1] = d1 - d2;
                lens.remove(i);
                verts.remove(i);
            } else {
                let at = anchor_star(s, &a.at).total;
                verts[i - 1].outgoing = Some(wrap(a.outgoing.unwrap() + PI, at));
                lens[i] = d2 - d1;
                lens.remove(i - 1);
                verts.remove(i);
            }
            i = i.max(2) - 1;
            continue;
        }
        let (_, lo_dir) = star.direction(lo);
        let hi_dir = lo_dir.rotate(alpha);
        let (dlo, dhi) = if lo_is_next { (d2, d1) } else { (d1, d2) };
        let p_lo = lo_dir * dlo;
        let p_hi = hi_dir * dhi;
        let lim = CastLimits { radius: dlo.max(dhi) + tol, chord: Some((p_lo, p_hi)), max_beams: crate::cast::DEFAULT_BEAM_BUDGET };
        let wedge = Wedge { lo, width: alpha, lo_closed: false, hi_closed: false };
        let hits = cast_wedge(s, &star, wedge, lim, None)?;

        // convex chain from p_lo to p_hi facing the apex
        let mut chain: Vec<usize> = Vec::new();
        let pos = |k: usize| hits[k].dev;
        for k in 0..hits.len() {
            let r = pos(k);
            loop {
                let (a, b) = match chain.len() {
                    0 => break,
                    1 => (p_lo, pos(chain[0])),
                    n => (pos(chain[n - 2]), pos(chain[n - 1])),
                };
                let e = b - a;
                let f = r - b;
                if e.cross(f) > 1e-12 * e.norm() * f.norm() {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(k);
        }
        loop {
            let (a, b) = match chain.len() {
                0 => break,
                1 => (p_lo, pos(chain[0])),
                n => (pos(chain[n - 2]), pos(chain[n - 1])),
            };
            let e = b - a;
            let f = p_hi - b;
            if e.cross(f) > 1e-12 * e.norm() * f.norm() {
                chain.pop();
            } else {
                break;
            }
        }

        // new vertices in frame order lo → hi
        let mut pts: Vec<Point> = vec![p_lo];
        pts.extend(chain.iter().map(|&k| pos(k)));
        pts.push(p_hi);
        let mut mids: Vec<PathVertex> = Vec::new();
        for (j, &k) in chain.iter().enumerate() {
            let h = &hits[k];
            let ht = s.cone_angle(h.cone);
            let to_prev = pts[j] - h.dev;
            let to_next = pts[j + 2] - h.dev;
            let p_prev = wrap(h.back + angle_signed(-h.dev, to_prev), ht);
            let p_next = wrap(h.back + angle_signed(-h.dev, to_next), ht);
            // frame order runs lo → hi; incoming points toward lo
            mids.push(PathVertex { at: Anchor::Cone(h.cone), incoming: Some(p_prev), outgoing: Some(p_next) });
        }
        let seg: Vec<f64> = pts.windows(2).map(|w| w[1].dist(w[0])).collect();
        // endpoint parameters, rotated from the direction toward the apex
        let lo_new = |orig: f64, total_end: f64| wrap(orig + angle_signed(-p_lo, pts[1] - p_lo), total_end);
        let hi_new = |orig: f64, total_end: f64| wrap(orig + angle_signed(-p_hi, pts[pts.len() - 2] - p_hi), total_end);
        let ta = anchor_star(s, &verts[i - 1].at).total;
        let tb = anchor_star(s, &verts[i + 1].at).total;
        if lo_is_next {
            // lo is b (next), hi is a (previous): reverse into path order
            let a_out = hi_new(verts[i - 1].outgoing.unwrap(), ta);
            let b_in = lo_new(verts[i + 1].incoming.unwrap(), tb);
            verts[i - 1].outgoing = Some(a_out);
            verts[i + 1].incoming = Some(b_in);
            let rev: Vec<PathVertex> =
                mids.iter().rev().map(|m| PathVertex { at: m.at, incoming: m.outgoing, outgoing: m.incoming }).collect();
            let rev_seg: Vec<f64> = seg.iter().rev().copied().collect();
            verts.splice(i..i + 1, rev);
            lens.splice(i - 1..i + 1, rev_seg);
        } else {
            let a_out = lo_new(verts[i - 1].outgoing.unwrap(), ta);
            let b_in = hi_new(verts[i + 1].incoming.unwrap(), tb);
            verts[i - 1].outgoing = Some(a_out);
            verts[i + 1].incoming = Some(b_in);
            verts.splice(i..i + 1, mids);
            lens.splice(i - 1..i + 1, seg);
        }
        i = i.max(2) - 1;
    }
    Ok(GeodesicPath { vertices: verts, lengths: lens })
}

/// The geodesic of the cover from `p` to `q`.
pub fn distance_and_path(patch: &CoverPatch, p: &LiftedPoint, q: &LiftedPoint) -> Result<GeodesicPath, CoverError> {
    let start = patch.tree_path(p, q)?;
    tighten(patch.surface, &start)
}

/// The single straight segment from `p` to `q`, if nothing singular lies
/// strictly between them.
pub fn visible_segment(patch: &CoverPatch, p: &LiftedPoint, q: &LiftedPoint) -> Result<Option<GeodesicPath>, CoverError> {
    let g = distance_and_path(patch, p, q)?;
    Ok(if g.lengths.len() <= 1 { Some(g) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::geodesic::is_local_geodesic;

    #[test]
    fn window_wraps() {
        let params = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(window_ranges(&params, 1.0, 2.0, 6.0), [1..4, 0..0]);
        assert_eq!(window_ranges(&params, 4.5, 2.0, 6.0), [5..6, 0..1]);
    }

    #[test]
    fn small_patch_at_the_cone_point() {
        let s = bundled::l3();
        let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 0.4).unwrap();
        let cells = patch.develop_cells(1000).unwrap();
        assert_eq!(cells.len(), 12);
        assert!(patch.lifted_singularities(0.4, 1000).unwrap().is_empty());
        let zero = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 0.0).unwrap();
        assert_eq!(zero.develop_cells(10).unwrap().len(), 1);
    }

    #[test]
    fn unit_neighbours_of_the_cone_point() {
        let s = bundled::l3();
        let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 1.0).unwrap();
        let nodes = patch.lifted_singularities(1.0, 1000).unwrap();
        // the 12 unit legs out of the 6π cone point
        assert_eq!(nodes.len(), 12);
    }

    #[test]
    fn back_and_forth_tightens_to_a_point() {
        let s = bundled::l3();
        let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 3.0).unwrap();
        let p = LiftedPoint::node(vec![0]);
        let g = distance_and_path(&patch, &p, &p).unwrap();
        assert_eq!(g.lengths.len(), 0);
    }

    #[test]
    fn two_unit_legs_at_a_right_angle_become_a_diagonal() {
        let s = bundled::l3();
        let patch = develop_patch(&s, &SurfacePoint::new(0, 0.5, 0.5), 3.0).unwrap();
        // from the centre of A go to two points half a unit away at right angles
        let p = LiftedPoint { word: vec![], dir: 0.0, dist: 0.3 };
        let q = LiftedPoint { word: vec![], dir: PI / 2.0, dist: 0.4 };
        let g = distance_and_path(&patch, &p, &q).unwrap();
        assert_eq!(g.lengths.len(), 1);
        assert!((g.length() - 0.5).abs() < 1e-12);
        assert!(is_local_geodesic(&s, &g).unwrap());
    }

    #[test]
    fn geodesic_between_nodes_is_local_geodesic() {
        let s = bundled::l3();
        let patch = develop_patch(&s, &SurfacePoint::new(0, 0.0, 0.0), 3.0).unwrap();
        let nodes = patch.lifted_singularities(2.0, 100000).unwrap();
        let a = LiftedPoint::node(nodes[3].word.clone());
        let b = LiftedPoint::node(nodes[nodes.len() - 7].word.clone());
        let g = distance_and_path(&patch, &a, &b).unwrap();
        assert!(is_local_geodesic(&s, &g).unwrap());
        let h = distance_and_path(&patch, &b, &a).unwrap();
        assert!((g.length() - h.length()).abs() < 1e-9);
        assert!(g.length() <= nodes[3].dist + nodes[nodes.len() - 7].dist + 1e-9);
    }
}
