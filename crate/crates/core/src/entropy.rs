//! Orbit growth, truncated Poincaré series and shadow weights in the cover.
//!
//! Sums over lifted singularities are organized along the tree of the cover.
//! For an oriented saddle connection σ, `G_σ(r)` sums `exp(-s·t)` over the
//! node reached through σ and all its descendants at tree depth `t ≤ r`
//! below it:
//!
//! `G_σ(r) = 1 + Σ_τ exp(-s·l_τ) G_τ(r - l_τ)`
//!
//! over the admissible successors τ of σ. The recursion is evaluated on a
//! grid of radii; rounding the child radius down gives a lower bound and
//! rounding it up an upper bound, and estimates use their geometric mean.

use crate::cover::{CoverError, CoverPatch, LiftedNode};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("need at least 4 radii with two or more orbit points in the fit window")]
    InsufficientGrowthData,
    #[error("exponent must be non-negative and finite, got {0}")]
    InvalidExponent(f64),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

impl EntropyError {
    pub fn name(&self) -> &'static str {
        match self {
            EntropyError::InsufficientGrowthData => "InsufficientGrowthData",
            EntropyError::InvalidExponent(_) => "InvalidExponent",
            EntropyError::Cover(e) => e.name(),
        }
    }
}

/// Default number of grid steps per table.
pub const DEFAULT_STEPS: usize = 2400;

/// Default number of depth cells in the shadow survey.
pub const DEFAULT_SURVEY_CELLS: usize = 4096;

/// Lower and upper bounds with their geometric mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        (self.lower * self.upper).sqrt()
    }

    fn add_scaled(&mut self, w: f64, b: Bracket) {
        self.lower += w * b.lower;
        self.upper += w * b.upper;
    }
}

/// `G_σ` on the grid `r = k·h`, `k = 0..=steps`, for every oriented saddle
/// connection of the patch catalog.
#[derive(Debug, Clone)]
pub struct SeriesTable {
    pub s: f64,
    pub h: f64,
    pub steps: usize,
    n: usize,
    succ: Vec<[Range<usize>; 2]>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SeriesTable {
    pub fn build(patch: &CoverPatch, s: f64, steps: usize) -> Result<Self, EntropyError> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(EntropyError::InvalidExponent(s));
        }
        let cat = &patch.catalog;
        let n = cat.oriented.len();
        let steps = steps.max(1);
        let h = patch.radius.max(f64::MIN_POSITIVE) / steps as f64;
        let succ: Vec<[Range<usize>; 2]> = cat.oriented.iter().map(|o| patch.successors(o.end, o.arrive)).collect();
        let weight: Vec<f64> = cat.oriented.iter().map(|o| (-s * o.length).exp()).collect();
        let lo_shift: Vec<usize> = cat.oriented.iter().map(|o| (o.length / h).ceil() as usize).collect();
        let hi_shift: Vec<usize> = cat.oriented.iter().map(|o| ((o.length / h).floor() as usize).max(1)).collect();
        let mut lower = vec![0.0; n * (steps + 1)];
        let mut upper = vec![0.0; n * (steps + 1)];
        let mut pl = vec![0.0; n + 1];
        let mut pu = vec![0.0; n + 1];
        for k in 0..=steps {
            for i in 0..n {
                let vl = if lo_shift[i] <= k { weight[i] * lower[(k - lo_shift[i]) * n + i] } else { 0.0 };
                let vu = if hi_shift[i] <= k { weight[i] * upper[(k - hi_shift[i]) * n + i] } else { 0.0 };
                pl[i + 1] = pl[i] + vl;
                pu[i + 1] = pu[i] + vu;
            }
            for i in 0..n {
                let mut a = 1.0;
                let mut b = 1.0;
                for r in &succ[i] {
                    a += pl[r.end] - pl[r.start];
                    b += pu[r.end] - pu[r.start];
                }
                lower[k * n + i] = a;
                upper[k * n + i] = b;
            }
        }
        Ok(SeriesTable { s, h, steps, n, succ, lower, upper })
    }

    /// `G_σ(r)` for oriented catalog index `sigma`.
    pub fn saddle(&self, sigma: usize, r: f64) -> Bracket {
        if r < -1e-12 {
            return Bracket { lower: 0.0, upper: 0.0 };
        }
        let x = (r / self.h).max(0.0);
        let kl = (x.floor() as usize).min(self.steps);
        let ku = (x.ceil() as usize).min(self.steps);
        Bracket { lower: self.lower[kl * self.n + sigma], upper: self.upper[ku * self.n + sigma] }
    }

    /// Sum over a node arriving at `cone` along `arrive` and its
    /// descendants within `r`.
    pub fn node(&self, patch: &CoverPatch, cone: usize, arrive: f64, r: f64) -> Bracket {
        self.sum_over(patch, patch.successors(cone, arrive), r)
    }

    fn sum_over(&self, patch: &CoverPatch, ranges: [Range<usize>; 2], r: f64) -> Bracket {
        let mut b = Bracket { lower: 1.0, upper: 1.0 };
        if r < -1e-12 {
            return Bracket { lower: 0.0, upper: 0.0 };
        }
        for range in ranges {
            for i in range {
                let o = &patch.catalog.oriented[i];
                if o.length <= r + 1e-12 {
                    b.add_scaled((-self.s * o.length).exp(), self.saddle(i, r - o.length));
                }
            }
        }
        b
    }

    /// Poincaré sum around the base: `1` for the base itself plus every
    /// lifted singularity within `r`.
    pub fn base(&self, patch: &CoverPatch, r: f64) -> Bracket {
        let mut b = Bracket { lower: 1.0, upper: 1.0 };
        for root in &patch.roots {
            if root.length <= r + 1e-12 {
                b.add_scaled((-self.s * root.length).exp(), self.node(patch, root.cone, root.arrive, r - root.length));
            }
        }
        b
    }

    /// Poincaré sum based at a singularity `cone` (all directions admissible).
    pub fn at_cone(&self, patch: &CoverPatch, cone: usize, r: f64) -> Bracket {
        let range = patch.catalog.from_cone(cone);
        self.sum_over(patch, [range, 0..0], r)
    }

    /// Sum below a node given by its word.
    pub fn below(&self, patch: &CoverPatch, word: &[usize], r: f64) -> Result<Bracket, EntropyError> {
        if word.len() >= 2 {
            return Ok(self.saddle(*word.last().unwrap(), r));
        }
        let n = patch.node(word)?;
        Ok(self.node(patch, n.cone, n.arrive, r))
    }

    /// Admissible successor ranges of an oriented catalog index.
    pub fn successors(&self, sigma: usize) -> &[Range<usize>; 2] {
        &self.succ[sigma]
    }
}

/// Number of lifted singularities within each radius.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCounts {
    pub radii: Vec<f64>,
    pub counts: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn check_radius(patch: &CoverPatch, r: f64) -> Result<(), EntropyError> {
    if r > patch.radius + 1e-12 {
        return Err(CoverError::OutsideCertifiedRadius { dist: r, radius: patch.radius }.into());
    }
    Ok(())
}

/// Growth counts from the recursion; the base counts itself only when it
/// is a singularity.
pub fn orbit_counts(patch: &CoverPatch, radii: &[f64], steps: usize) -> Result<OrbitCounts, EntropyError> {
    for &r in radii {
        check_radius(patch, r)?;
    }
    let table = SeriesTable::build(patch, 0.0, steps)?;
    let own = if patch.base_cone.is_some() { 0.0 } else { 1.0 };
    let mut out = OrbitCounts { radii: radii.to_vec(), counts: vec![], lower: vec![], upper: vec![] };
    for &r in radii {
        let b = table.base(patch, r);
        let (l, u) = (b.lower - own, b.upper - own);
        out.lower.push(l);
        out.upper.push(u);
        out.counts.push((l * u).sqrt());
    }
    Ok(out)
}

/// Growth counts by walking the tree node by node.
pub fn orbit_counts_exact(patch: &CoverPatch, radii: &[f64], max_nodes: usize) -> Result<OrbitCounts, EntropyError> {
    let top = radii.iter().cloned().fold(0.0, f64::max);
    check_radius(patch, top)?;
    let nodes = patch.lifted_singularities(top, max_nodes)?;
    let own = if patch.base_cone.is_some() { 1.0 } else { 0.0 };
    let counts: Vec<f64> = radii.iter().map(|&r| own + nodes.iter().filter(|n| n.dist <= r + 1e-12).count() as f64).collect();
    Ok(OrbitCounts { radii: radii.to_vec(), lower: counts.clone(), upper: counts.clone(), counts })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub e_hat: f64,
    pub window: (f64, f64),
    /// Slope over `[R/2, R]`.
    pub slope_half: f64,
    /// Slope over `[3R/4, R]`.
    pub slope_quarter: f64,
    pub stability_gap: f64,
}

/// Least-squares slope and intercept.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn window_slope(c: &OrbitCounts, lo: f64, hi: f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = c
        .radii
        .iter()
        .zip(&c.counts)
        .filter(|(r, n)| **r >= lo - 1e-12 && **r <= hi + 1e-12 && **n >= 2.0)
        .map(|(r, n)| (*r, n.ln()))
        .unzip();
    if xs.len() < 4 {
        return None;
    }
    Some(fit_line(&xs, &ys).0)
}

/// Slope of `log N(R)` against `R` over the upper half of the radii.
pub fn estimate_entropy(c: &OrbitCounts) -> Result<EntropyEstimate, EntropyError> {
    let top = c.radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = window_slope(c, top / 2.0, top).ok_or(EntropyError::InsufficientGrowthData)?;
    let quarter = window_slope(c, 0.75 * top, top).unwrap_or(half);
    if !(half > 1e-12) {
        return Err(EntropyError::InsufficientGrowthData);
    }
    Ok(EntropyEstimate { e_hat: half, window: (top / 2.0, top), slope_half: half, slope_quarter: quarter, stability_gap: (half - quarter).abs() })
}

/// Growth radii used for entropy fits: `radius·i/per` for `i = 1..=per`.
pub fn radius_grid(radius: f64, per: usize) -> Vec<f64> {
    (1..=per).map(|i| radius * i as f64 / per as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareSeriesValue {
    pub s: f64,
    pub radius: f64,
    pub value: f64,
    pub bracket: Bracket,
    /// Whether `s ≥ 1.05·ê`, so the truncated tail is small.
    pub tail_ok: bool,
}

pub fn poincare_series(patch: &CoverPatch, s: f64, radius: f64, e_hat: f64, steps: usize) -> Result<PoincareSeriesValue, EntropyError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(EntropyError::InvalidExponent(s));
    }
    check_radius(patch, radius)?;
    let t = SeriesTable::build(patch, s, steps)?;
    let b = t.base(patch, radius);
    Ok(PoincareSeriesValue { s, radius, value: b.mid(), bracket: b, tail_ok: s >= 1.05 * e_hat - 1e-12 })
}

/// Discrete Patterson–Sullivan weights `ν_{s,x}` truncated at a radius.
#[derive(Debug, Clone)]
pub struct PsModel<'p, 'a> {
    pub patch: &'p CoverPatch<'a>,
    pub s: f64,
    pub e_hat: f64,
    pub radius: f64,
    pub weights: SeriesTable,
    pub counts: SeriesTable,
    /// Normalizer `g_s` at the base.
    pub g: Bracket,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowEstimate {
    pub word: Vec<usize>,
    pub cone: usize,
    pub dist: f64,
    pub nu_hat: f64,
    pub r_hat: f64,
    /// Orbit points behind the singularity (itself included).
    pub behind: f64,
}

impl<'p, 'a> PsModel<'p, 'a> {
    pub fn new(patch: &'p CoverPatch<'a>, e_hat: f64, s: f64, radius: f64, steps: usize) -> Result<Self, EntropyError> {
        check_radius(patch, radius)?;
        if !(s > 0.0) || !s.is_finite() {
            return Err(EntropyError::InvalidExponent(s));
        }
        let weights = SeriesTable::build(patch, s, steps)?;
        let counts = SeriesTable::build(patch, 0.0, steps)?;
        let g = weights.base(patch, radius);
        Ok(PsModel { patch, s, e_hat, radius, weights, counts, g })
    }

    /// Weight of the orbit points whose geodesic from the base passes
    /// through the node `word`.
    pub fn shadow(&self, node: &LiftedNode) -> ShadowEstimate {
        let r = self.radius - node.dist;
        let below = if node.word.len() >= 2 {
            self.weights.saddle(*node.word.last().unwrap(), r)
        } else {
            self.weights.node(self.patch, node.cone, node.arrive, r)
        };
        let behind = if node.word.len() >= 2 {
            self.counts.saddle(*node.word.last().unwrap(), r)
        } else {
            self.counts.node(self.patch, node.cone, node.arrive, r)
        };
        let nu = (-self.s * node.dist).exp() * below.mid() / self.g.mid();
        ShadowEstimate {
            word: node.word.clone(),
            cone: node.cone,
            dist: node.dist,
            nu_hat: nu,
            r_hat: nu * (self.e_hat * node.dist).exp(),
            behind: behind.mid(),
        }
    }

    /// Shadow weight of a node named by its word.
    pub fn shadow_measure(&self, word: &[usize]) -> Result<ShadowEstimate, EntropyError> {
        let n = self.patch.node(word)?;
        if n.dist > self.radius + 1e-12 {
            return Err(CoverError::OutsideCertifiedRadius { dist: n.dist, radius: self.radius }.into());
        }
        Ok(self.shadow(&n))
    }

    /// Shadow weight of a node of saddle type `sigma` at depth `dist`.
    pub fn shadow_of_type(&self, sigma: usize, dist: f64) -> (f64, f64) {
        let r = self.radius - dist;
        let nu = (-self.s * dist).exp() * self.weights.saddle(sigma, r).mid() / self.g.mid();
        (nu, nu * (self.e_hat * dist).exp())
    }

    /// Multiplicative deviation of `ν_x(sh) / ν_y(sh)` from `exp(-ê d(x,y))`
    /// where `sh` lies behind `node` and `y` is the node's ancestor with
    /// `prefix` letters.
    pub fn conformal_error(&self, node: &LiftedNode, prefix: usize) -> Result<f64, EntropyError> {
        let y = self.patch.node(&node.word[..prefix])?;
        let below = self.weights.below(self.patch, &node.word, self.radius - node.dist)?.mid();
        let nu_x = (-self.s * node.dist).exp() * below / self.g.mid();
        let gy = self.weights.at_cone(self.patch, y.cone, self.radius - y.dist).mid();
        let nu_y = (-self.s * (node.dist - y.dist)).exp() * below / gy;
        let err = nu_x / nu_y / (-self.e_hat * y.dist).exp();
        Ok(if err >= 1.0 { err } else { 1.0 / err })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalCheck {
    pub chains: usize,
    pub median_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShadowSurvey {
    pub annulus: (f64, f64),
    /// Estimated number of lifted singularities in the annulus.
    pub population: f64,
    /// Saddle types realized in the annulus.
    pub types: usize,
    pub zero_weight: usize,
    pub min_r_hat: f64,
    pub max_r_hat: f64,
    /// `max r̂ / min r̂` over surveyed nodes with positive weight.
    pub spread: f64,
    /// Extreme nodes: the shallowest and deepest witness of every type.
    pub extremes: Vec<ShadowEstimate>,
    pub conformal: ConformalCheck,
}

#[derive(Debug, Clone, Copy)]
enum Parent {
    Root(usize),
    Slot(usize),
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    d: f64,
    parent: Parent,
}

/// r̂ over the lifted singularities with distance in `[R/3, 2R/3]`.
///
/// For a node reached through saddle σ at depth `d`, r̂ depends only on σ
/// and `d` and decreases in `d`, so its extremes over the annulus are
/// attained at the shallowest and deepest realized depth of each type.
/// Realized depths are propagated forward cell by cell, keeping the least
/// and greatest depth per (type, cell) together with a witness word.
pub fn shadow_ratio_survey(model: &PsModel, cells: usize) -> Result<ShadowSurvey, EntropyError> {
    let patch = model.patch;
    let cat = &patch.catalog;
    let n = cat.oriented.len();
    let (a, b) = (model.radius / 3.0, 2.0 * model.radius / 3.0);
    let tol = 1e-12;
    let min_len = cat.oriented.iter().map(|o| o.length).fold(f64::INFINITY, f64::min);
    let cells = cells.max(1).max((2.0 * b / min_len).ceil() as usize);
    let w = b / cells as f64;
    let cell_of = |d: f64| ((d / w) as usize).min(cells - 1);
    // slot index: ((sigma * cells) + cell) * 2 + {0: least, 1: greatest}
    let mut slots: Vec<Option<Slot>> = vec![None; n * cells * 2];
    let insert = |slots: &mut Vec<Option<Slot>>, sigma: usize, d: f64, parent: Parent| {
        let k = (sigma * cells + cell_of(d)) * 2;
        if slots[k].is_none_or(|s| d < s.d) {
            slots[k] = Some(Slot { d, parent });
        }
        if slots[k + 1].is_none_or(|s| d > s.d) {
            slots[k + 1] = Some(Slot { d, parent });
        }
    };
    let mut extremes = Vec::new();
    let mut root_nodes = Vec::new();
    for (r, root) in patch.roots.iter().enumerate() {
        if root.length > b + tol {
            continue;
        }
        if root.length >= a - tol {
            root_nodes.push(LiftedNode { word: vec![r], cone: root.cone, dist: root.length, arrive: root.arrive });
        }
        for range in patch.successors(root.cone, root.arrive) {
            for t in range {
                let d = root.length + cat.oriented[t].length;
                if d <= b + tol {
                    insert(&mut slots, t, d, Parent::Root(r));
                }
            }
        }
    }
    for c in 0..cells {
        for sigma in 0..n {
            let k = (sigma * cells + c) * 2;
            let (Some(lo), Some(hi)) = (slots[k], slots[k + 1]) else { continue };
            for (which, d) in [(k, lo.d), (k + 1, hi.d)] {
                if which == k + 1 && hi.d == lo.d {
                    continue;
                }
                for range in model.weights.successors(sigma).clone() {
                    for t in range {
                        let d2 = d + cat.oriented[t].length;
                        if d2 <= b + tol {
                            insert(&mut slots, t, d2, Parent::Slot(which));
                        }
                    }
                }
            }
        }
    }
    let word_of = |mut k: usize| -> Vec<usize> {
        let mut word = Vec::new();
        loop {
            word.push(k / 2 / cells);
            match slots[k].unwrap().parent {
                Parent::Root(r) => {
                    word.push(r);
                    break;
                }
                Parent::Slot(p) => k = p,
            }
        }
        word.reverse();
        word
    };
    let mut survey = ShadowSurvey {
        annulus: (a, b),
        population: 0.0,
        types: 0,
        zero_weight: 0,
        min_r_hat: f64::INFINITY,
        max_r_hat: 0.0,
        spread: 1.0,
        extremes: vec![],
        conformal: ConformalCheck { chains: 0, median_error: 1.0, max_error: 1.0 },
    };
    for node in &root_nodes {
        extremes.push(model.shadow(node));
    }
    for sigma in 0..n {
        let mut least: Option<(f64, usize)> = None;
        let mut greatest: Option<(f64, usize)> = None;
        for c in cell_of(a)..cells {
            for k in [(sigma * cells + c) * 2, (sigma * cells + c) * 2 + 1] {
                let Some(s) = slots[k] else { continue };
                if s.d >= a - tol && least.is_none_or(|l| s.d < l.0) {
                    least = Some((s.d, k));
                }
                if s.d <= b + tol && greatest.is_none_or(|g| s.d > g.0) {
                    greatest = Some((s.d, k));
                }
            }
        }
        let Some(least) = least else { continue };
        survey.types += 1;
        let greatest = greatest.unwrap_or(least);
        for (d, k) in if least.1 == greatest.1 { vec![least] } else { vec![least, greatest] } {
            let word = word_of(k);
            let (nu_hat, r_hat) = model.shadow_of_type(sigma, d);
            let behind = model.counts.saddle(sigma, model.radius - d).mid();
            extremes.push(ShadowEstimate { word, cone: cat.oriented[sigma].end, dist: d, nu_hat, r_hat, behind });
        }
    }
    for e in &extremes {
        if e.nu_hat > 0.0 {
            survey.min_r_hat = survey.min_r_hat.min(e.r_hat);
            survey.max_r_hat = survey.max_r_hat.max(e.r_hat);
        } else {
            survey.zero_weight += 1;
        }
    }
    if survey.max_r_hat > 0.0 {
        survey.spread = survey.max_r_hat / survey.min_r_hat;
    }
    let own = if patch.base_cone.is_some() { 0.0 } else { 1.0 };
    let inner = model.counts.base(patch, a - 1e-9).mid();
    let outer = model.counts.base(patch, b).mid();
    survey.population = (outer - own).max(0.0) - (inner - own).max(0.0);
    let mut errors = Vec::new();
    for e in extremes.iter().filter(|e| e.word.len() >= 2).take(50) {
        let node = patch.node(&e.word)?;
        errors.push(model.conformal_error(&node, e.word.len().div_ceil(2))?);
    }
    if !errors.is_empty() {
        errors.sort_by(f64::total_cmp);
        survey.conformal = ConformalCheck { chains: errors.len(), median_error: errors[errors.len() / 2], max_error: *errors.last().unwrap() };
    }
    survey.extremes = extremes;
    Ok(survey)
}

/// Extremes of r̂ found by visiting every annulus node; returns
/// `(count, min r̂, max r̂)`.
pub fn shadow_ratio_extremes_exact(model: &PsModel, max_nodes: usize) -> Result<(usize, f64, f64), EntropyError> {
    let (a, b) = (model.radius / 3.0, 2.0 * model.radius / 3.0);
    let (mut count, mut lo, mut hi) = (0usize, f64::INFINITY, 0.0f64);
    let mut over = false;
    model.patch.walk_nodes(b, &mut Vec::new(), &mut |w, cone, dist, arrive| {
        if dist < a - 1e-12 {
            return true;
        }
        if count >= max_nodes {
            over = true;
            return false;
        }
        count += 1;
        let e = model.shadow(&LiftedNode { word: w.to_vec(), cone, dist, arrive });
        lo = lo.min(e.r_hat);
        hi = hi.max(e.r_hat);
        true
    });
    if over {
        return Err(CoverError::PatchBudgetExceeded(max_nodes).into());
    }
    Ok((count, lo, hi))
}
