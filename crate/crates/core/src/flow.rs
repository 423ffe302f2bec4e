//! Sampling typical geodesics and measuring how often they pass through
//! given arcs.
//!
//! A sample joins two orbit points drawn independently from the truncated
//! Patterson–Sullivan weights restricted to the annulus `[0.8R, R]`,
//! projected to the surface and trimmed by 10% at each end.

use crate::cover::{distance_and_path, CoverError, CoverPatch, LiftedNode, LiftedPoint};
use crate::entropy::{fit_line, EntropyError, SeriesTable};
use crate::geodesic::{anchor_total, anchors_equal, is_local_geodesic, unique_extension, Anchor, GeodesicError, GeodesicPath, PathVertex};
use crate::FlatSurface;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("s = {s} is below 1.05·ê = {min}")]
    ExponentTooSmall { s: f64, min: f64 },
    #[error("no admissible endpoint pair after {0} rejections")]
    DegenerateRejectionLoop(usize),
    #[error("no orbit points in the sampling annulus")]
    EmptyAnnulus,
    #[error("experiment needs at least one sample")]
    EmptyExperiment,
    #[error("need at least {need} usable arcs, got {got}")]
    TooFewArcs { need: usize, got: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
}

impl FlowError {
    pub fn name(&self) -> &'static str {
        match self {
            FlowError::ExponentTooSmall { .. } => "ExponentTooSmall",
            FlowError::DegenerateRejectionLoop(_) => "DegenerateRejectionLoop",
            FlowError::EmptyAnnulus => "EmptyAnnulus",
            FlowError::EmptyExperiment => "EmptyExperiment",
            FlowError::TooFewArcs { .. } => "TooFewArcs",
            FlowError::TooFewSamples { .. } => "TooFewSamples",
            FlowError::Cover(e) => e.name(),
            FlowError::Entropy(e) => e.name(),
            FlowError::Geodesic(e) => e.name(),
        }
    }
}

pub const MAX_REJECTIONS: usize = 1000;
pub const TRIM: f64 = 0.1;
pub const INNER: f64 = 0.8;
pub const GROMOV_CAP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passage {
    pub cone: usize,
    /// Arc-length position along the trimmed path.
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSample {
    pub endpoints: [Vec<usize>; 2],
    pub path: GeodesicPath,
    pub trimmed: GeodesicPath,
    pub trimmed_length: f64,
    pub passages: Vec<Passage>,
    /// `Σ(θ − π)` over the trimmed passages, on the left and on the right.
    pub turning_excess: [f64; 2],
    pub rejections: usize,
}

/// Endpoint law and pair construction for one patch.
#[derive(Debug, Clone)]
pub struct FlowSampler<'p, 'a> {
    pub patch: &'p CoverPatch<'a>,
    pub s: f64,
    pub radius: f64,
    table: SeriesTable,
    root_mass: Vec<f64>,
}

impl<'p, 'a> FlowSampler<'p, 'a> {
    pub fn new(patch: &'p CoverPatch<'a>, e_hat: f64, s: f64, radius: f64, steps: usize) -> Result<Self, FlowError> {
        if !(s >= 1.05 * e_hat - 1e-12) {
            return Err(FlowError::ExponentTooSmall { s, min: 1.05 * e_hat });
        }
        if radius > patch.radius + 1e-12 {
            return Err(CoverError::OutsideCertifiedRadius { dist: radius, radius: patch.radius }.into());
        }
        let table = SeriesTable::build(patch, s, steps)?;
        let mut sampler = FlowSampler { patch, s, radius, table, root_mass: vec![] };
        sampler.root_mass = patch
            .roots
            .iter()
            .map(|r| sampler.subtree_mass(r.length, |t| sampler.table.node(patch, r.cone, r.arrive, t).mid()))
            .collect();
        if sampler.root_mass.iter().all(|&m| m <= 0.0) {
            return Err(FlowError::EmptyAnnulus);
        }
        Ok(sampler)
    }

    /// Weight of the annulus points at or below a node at depth `d`, given
    /// the node's series `below(t)` over depth `t` underneath it.
    fn subtree_mass<F: Fn(f64) -> f64>(&self, d: f64, below: F) -> f64 {
        let outer = self.radius - d;
        if outer < -1e-12 {
            return 0.0;
        }
        let inner = INNER * self.radius - d;
        let skip = if inner > 1e-12 { below(inner - 1e-9) } else { 0.0 };
        ((-self.s * d).exp() * (below(outer) - skip)).max(0.0)
    }

    fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut x = rng.gen::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return Some(i);
            }
            x -= w;
        }
        weights.iter().rposition(|&w| w > 0.0)
    }

    /// One orbit point with probability ∝ `exp(-s·d)` on the annulus.
    pub fn draw_endpoint<R: Rng>(&self, rng: &mut R) -> Result<LiftedNode, FlowError> {
        let patch = self.patch;
        let r = Self::pick(rng, &self.root_mass).ok_or(FlowError::EmptyAnnulus)?;
        let root = &patch.roots[r];
        let mut node = LiftedNode { word: vec![r], cone: root.cone, dist: root.length, arrive: root.arrive };
        let mut cands = Vec::new();
        let mut weights = Vec::new();
        loop {
            cands.clear();
            weights.clear();
            let d = node.dist;
            let here = if d >= INNER * self.radius - 1e-12 && d <= self.radius + 1e-12 { (-self.s * d).exp() } else { 0.0 };
            cands.push(usize::MAX);
            weights.push(here);
            let ranges = match node.word.len() {
                1 => patch.successors(node.cone, node.arrive),
                _ => self.table.successors(*node.word.last().unwrap()).clone(),
            };
            for range in ranges {
                for t in range {
                    let o = &patch.catalog.oriented[t];
                    let m = self.subtree_mass(d + o.length, |x| self.table.saddle(t, x).mid());
                    if m > 0.0 {
                        cands.push(t);
                        weights.push(m);
                    }
                }
            }
            let k = Self::pick(rng, &weights).ok_or(FlowError::EmptyAnnulus)?;
            if cands[k] == usize::MAX {
                return Ok(node);
            }
            let o = &patch.catalog.oriented[cands[k]];
            node.word.push(cands[k]);
            node.dist = d + o.length;
            node.cone = o.end;
            node.arrive = o.arrive;
        }
    }

    /// The sample for `(seed, index)`; independent of any other index.
    pub fn sample(&self, seed: u64, index: u64) -> Result<GeodesicSample, FlowError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let s = self.patch.surface;
        for rejections in 0..=MAX_REJECTIONS {
            let y = self.draw_endpoint(&mut rng)?;
            let z = self.draw_endpoint(&mut rng)?;
            let path = distance_and_path(self.patch, &LiftedPoint::node(y.word.clone()), &LiftedPoint::node(z.word.clone()))?;
            let dyz = path.length();
            let gromov = 0.5 * (y.dist + z.dist - dyz);
            if gromov > GROMOV_CAP * self.radius || dyz <= 0.0 {
                continue;
            }
            let trimmed = path.cut(s, TRIM * dyz, (1.0 - TRIM) * dyz);
            let trimmed_length = trimmed.length();
            let pos = trimmed.positions();
            let angles = trimmed.turning_angles(s);
            let mut passages = Vec::new();
            let mut excess = [0.0, 0.0];
            for (k, v) in trimmed.vertices.iter().enumerate().skip(1).take(trimmed.vertices.len().saturating_sub(2)) {
                if let Anchor::Cone(c) = v.at {
                    if s.is_singular(c) {
                        passages.push(Passage { cone: c, position: pos[k] });
                        excess[0] += angles[k - 1].0 - std::f64::consts::PI;
                        excess[1] += angles[k - 1].1 - std::f64::consts::PI;
                    }
                }
            }
            return Ok(GeodesicSample { endpoints: [y.word, z.word], path, trimmed, trimmed_length, passages, turning_excess: excess, rejections });
        }
        Err(FlowError::DegenerateRejectionLoop(MAX_REJECTIONS))
    }

    /// Samples `0..n` drawn in parallel; the result does not depend on the
    /// number of worker threads.
    pub fn sample_many(&self, seed: u64, n: usize) -> Result<Vec<GeodesicSample>, FlowError> {
        (0..n as u64).into_par_iter().map(|i| self.sample(seed, i)).collect()
    }
}

/// A single typical geodesic for `seed`.
pub fn sample_typical_geodesic(patch: &CoverPatch, e_hat: f64, s: f64, radius: f64, seed: u64) -> Result<GeodesicSample, FlowError> {
    FlowSampler::new(patch, e_hat, s, radius, crate::entropy::DEFAULT_STEPS)?.sample(seed, 0)
}

fn vertex_matches(s: &FlatSurface, a: &PathVertex, b: &PathVertex, inner_in: bool, inner_out: bool) -> bool {
    if !anchors_equal(s, &a.at, &b.at) {
        return false;
    }
    let total = anchor_total(s, &a.at);
    let close = |p: Option<f64>, q: Option<f64>| match (p, q) {
        (Some(p), Some(q)) => {
            let d = (p - q).rem_euclid(total);
            d <= 1e-7 || total - d <= 1e-7
        }
        _ => false,
    };
    (!inner_in || close(a.incoming, b.incoming)) && (!inner_out || close(a.outgoing, b.outgoing))
}

fn occurrences(s: &FlatSurface, hay: &GeodesicPath, c: &GeodesicPath) -> Vec<usize> {
    let m = c.lengths.len();
    let n = hay.lengths.len();
    if m == 0 || m > n {
        return vec![];
    }
    (0..=n - m)
        .filter(|&k| {
            (0..m).all(|j| (hay.lengths[k + j] - c.lengths[j]).abs() <= 1e-7)
                && (0..=m).all(|j| vertex_matches(s, &hay.vertices[k + j], &c.vertices[j], j > 0, j < m))
        })
        .collect()
}

/// Times the trimmed sample runs through `c` in either direction.
pub fn count_passages(s: &FlatSurface, sample: &GeodesicSample, c: &GeodesicPath) -> Result<usize, FlowError> {
    if !is_local_geodesic(s, c)? {
        return Err(GeodesicError::NotLocalGeodesic.into());
    }
    Ok(count_in(s, &sample.trimmed, c))
}

fn count_in(s: &FlatSurface, hay: &GeodesicPath, c: &GeodesicPath) -> usize {
    let fwd = occurrences(s, hay, c);
    let rev = c.reversed();
    let n = fwd.len();
    let back = occurrences(s, hay, &rev).into_iter().filter(|k| !fwd.contains(k)).count();
    n + back
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcFrequency {
    pub arc_id: usize,
    pub length: f64,
    pub ext_length: f64,
    pub capped: bool,
    pub passes: u64,
    pub total_length: f64,
    pub lambda_hat: f64,
    pub ci_half: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyReport {
    pub samples: usize,
    pub total_length: f64,
    pub arcs: Vec<ArcFrequency>,
}

pub const BATCHES: usize = 10;
/// Two-sided 95% Student quantile with `BATCHES - 1` degrees of freedom.
pub const T_QUANTILE: f64 = 2.262;

fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Passage frequencies of `arcs` over given samples.
pub fn frequency_report(s: &FlatSurface, arcs: &[GeodesicPath], samples: &[GeodesicSample], cap: f64) -> Result<FrequencyReport, FlowError> {
    if samples.is_empty() {
        return Err(FlowError::EmptyExperiment);
    }
    let n = samples.len();
    let batch_of = |i: usize| i * BATCHES / n;
    let mut batch_len = [0.0; BATCHES];
    for b in 0..BATCHES {
        batch_len[b] = kahan_sum((0..n).filter(|&i| batch_of(i) == b).map(|i| samples[i].trimmed_length));
    }
    let total_length = kahan_sum(samples.iter().map(|x| x.trimmed_length));
    let mut out = Vec::with_capacity(arcs.len());
    for (id, c) in arcs.iter().enumerate() {
        if !is_local_geodesic(s, c)? {
            return Err(GeodesicError::NotLocalGeodesic.into());
        }
        let ext = unique_extension(s, c, cap)?;
        let counts: Vec<u64> = samples.par_iter().map(|x| count_in(s, &x.trimmed, c) as u64).collect();
        let passes: u64 = counts.iter().sum();
        let mut per_batch = [0u64; BATCHES];
        for (i, k) in counts.iter().enumerate() {
            per_batch[batch_of(i)] += k;
        }
        let used: Vec<f64> = (0..BATCHES).filter(|&b| batch_len[b] > 0.0).map(|b| per_batch[b] as f64 / batch_len[b]).collect();
        let ci_half = if used.len() >= 2 {
            let m = used.iter().sum::<f64>() / used.len() as f64;
            let var = used.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (used.len() - 1) as f64;
            T_QUANTILE * (var / used.len() as f64).sqrt()
        } else {
            f64::INFINITY
        };
        out.push(ArcFrequency {
            arc_id: id,
            length: c.length(),
            ext_length: ext.extended.length(),
            capped: ext.capped(),
            passes,
            total_length,
            lambda_hat: passes as f64 / total_length,
            ci_half,
        });
    }
    Ok(FrequencyReport { samples: n, total_length, arcs: out })
}

/// Draw `n` samples and measure the passage frequency of every arc.
pub fn frequency_experiment(sampler: &FlowSampler, arcs: &[GeodesicPath], n: usize, seed: u64, cap: f64) -> Result<FrequencyReport, FlowError> {
    if n == 0 {
        return Err(FlowError::EmptyExperiment);
    }
    let samples = sampler.sample_many(seed, n)?;
    frequency_report(sampler.patch.surface, arcs, &samples, cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_arcs: usize,
}

pub const MIN_ARCS: usize = 30;

/// Least squares of `log Λ̂` against the extended arc length over arcs with
/// positive frequency and an uncapped extension.
pub fn scaling_regression(report: &FrequencyReport, min_arcs: usize) -> Result<RegressionResult, FlowError> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        report.arcs.iter().filter(|a| a.lambda_hat > 0.0 && !a.capped).map(|a| (a.ext_length, a.lambda_hat.ln())).unzip();
    if xs.len() < min_arcs.max(2) {
        return Err(FlowError::TooFewArcs { need: min_arcs.max(2), got: xs.len() });
    }
    let (slope, intercept) = fit_line(&xs, &ys);
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res <= 1e-24 { 1.0 } else { 0.0 };
    Ok(RegressionResult { slope: if slope.abs() < 1e-15 { 0.0 } else { slope }, intercept, r2, n_arcs: xs.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AvoidanceWindow {
    pub window: f64,
    /// Samples long enough to contain the window.
    pub eligible: usize,
    /// Fraction of eligible samples whose middle window has no passage
    /// (NaN when none is eligible).
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalityStats {
    pub windows: Vec<AvoidanceWindow>,
    /// Per sample, the smaller of the two sides' `Σ(θ − π)` per unit length.
    pub excess_per_length: Vec<f64>,
    pub median_excess: f64,
    /// 95% bootstrap interval of the median.
    pub median_ci: (f64, f64),
}

pub const MIN_TYPICALITY_SAMPLES: usize = 100;
pub const BOOTSTRAP_ROUNDS: usize = 1000;

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Avoidance fractions for middle windows of the given lengths, and the
/// turning excess per unit length with a bootstrap interval for its median.
pub fn avoidance_and_straightness_stats(samples: &[GeodesicSample], windows: &[f64], seed: u64) -> Result<TypicalityStats, FlowError> {
    if samples.len() < MIN_TYPICALITY_SAMPLES {
        return Err(FlowError::TooFewSamples { need: MIN_TYPICALITY_SAMPLES, got: samples.len() });
    }
    let windows = windows
        .iter()
        .map(|&t| {
            let eligible: Vec<&GeodesicSample> = samples.iter().filter(|x| x.trimmed_length >= t).collect();
            let clear = eligible
                .iter()
                .filter(|x| {
                    let (lo, hi) = (0.5 * (x.trimmed_length - t), 0.5 * (x.trimmed_length + t));
                    !x.passages.iter().any(|p| p.position >= lo && p.position <= hi)
                })
                .count();
            let fraction = if eligible.is_empty() { f64::NAN } else { clear as f64 / eligible.len() as f64 };
            AvoidanceWindow { window: t, eligible: eligible.len(), fraction }
        })
        .collect();
    let excess: Vec<f64> = samples.iter().map(|x| x.turning_excess[0].min(x.turning_excess[1]) / x.trimmed_length).collect();
    let median_excess = median(&mut excess.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut meds: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .map(|_| {
            let mut re: Vec<f64> = (0..excess.len()).map(|_| excess[rng.gen_range(0..excess.len())]).collect();
            median(&mut re)
        })
        .collect();
    meds.sort_by(f64::total_cmp);
    let lo = meds[(0.025 * BOOTSTRAP_ROUNDS as f64) as usize];
    let hi = meds[((0.975 * BOOTSTRAP_ROUNDS as f64) as usize).min(BOOTSTRAP_ROUNDS - 1)];
    Ok(TypicalityStats { windows, excess_per_length: excess, median_excess, median_ci: (lo, hi) })
}
