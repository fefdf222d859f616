//! Essential distance, quasiconvexity, doubling and Poincaré diagnostics,
//! and the gradient-transfer formulas between upper and Hajłasz gradients.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GradientField, ScalarField};
use crate::graph::{MetricMeasureGraph, VertexId};
use crate::metric::{DistanceMatrix, Euclidean, Metric, MetricChoice};
use crate::paths::{all_edges, ball_indices, dijkstra, distances_from, positive_edges, Ball, BallKind};
use crate::report::{ext_float, LENGTH_TOL, MEASURE_TOL, SCHEMA_VERSION};

/// Graphs up to this many vertices get an exhaustive pair scan.
pub const EXHAUSTIVE_PAIR_LIMIT: usize = 2000;

/// Pair budget for the sampled quasiconvexity scan.
pub const DEFAULT_PAIR_SAMPLES: usize = 100_000;

pub const DEFAULT_SEED: u64 = 0x5eed;

/// Zero-measure edges of a graph; the discrete stand-in for a null set whose
/// crossing curves form a negligible family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegligibleMark {
    pub edges: BTreeSet<usize>,
}

impl NegligibleMark {
    pub fn of(g: &MetricMeasureGraph) -> Self {
        NegligibleMark {
            edges: g.edges().iter().enumerate().filter(|(_, e)| e.is_negligible()).map(|(i, _)| i).collect(),
        }
    }

    pub fn is_consistent_with(&self, g: &MetricMeasureGraph) -> bool {
        self.edges.iter().all(|&e| e < g.edge_count() && g.edge(e).is_negligible())
    }
}

/// Shortest-path length over positive-measure edges; infinite when no such
/// path exists.
pub fn essential_distance(g: &MetricMeasureGraph, x: VertexId, y: VertexId) -> Result<f64> {
    let (xi, yi) = (g.index_of(x)?, g.index_of(y)?);
    Ok(distances_from(g, xi, positive_edges)[yi])
}

/// The graph with every zero-measure edge removed. Its graph distance is the
/// essential distance of `g`.
pub fn essential_metric(g: &MetricMeasureGraph) -> MetricMeasureGraph {
    g.filter_edges(positive_edges)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiconvexityReport {
    pub schema_version: u32,
    /// Largest observed ratio of the chosen metric to the ambient distance.
    #[serde(with = "ext_float")]
    pub c: f64,
    #[serde(with = "ext_float")]
    pub r: f64,
    pub metric: MetricChoice,
    pub worst_pair: Option<(VertexId, VertexId)>,
    pub samples: u64,
    pub exhaustive: bool,
    /// Sampled scans only see a subset of pairs, so `c` is a lower bound.
    pub lower_bound: bool,
    pub seed: Option<u64>,
    pub length_tol: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct QuasiconvexityOptions {
    pub exhaustive_limit: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for QuasiconvexityOptions {
    fn default() -> Self {
        QuasiconvexityOptions {
            exhaustive_limit: EXHAUSTIVE_PAIR_LIMIT,
            samples: DEFAULT_PAIR_SAMPLES,
            seed: DEFAULT_SEED,
        }
    }
}

pub fn quasiconvexity_constant<A: Metric + ?Sized>(
    g: &MetricMeasureGraph,
    ambient: &A,
    r: f64,
    metric: MetricChoice,
) -> Result<QuasiconvexityReport> {
    quasiconvexity_constant_with(g, ambient, r, metric, QuasiconvexityOptions::default())
}

/// `sup chosen(x, y) / ambient(x, y)` over distinct pairs with
/// `ambient(x, y) < r`.
pub fn quasiconvexity_constant_with<A: Metric + ?Sized>(
    g: &MetricMeasureGraph,
    ambient: &A,
    r: f64,
    metric: MetricChoice,
    opts: QuasiconvexityOptions,
) -> Result<QuasiconvexityReport> {
    if !(r > 0.0) {
        return Err(Error::input(format!("quasiconvexity scale must be positive, got {r}")));
    }
    let n = g.vertex_count();
    let keep = metric.edge_filter();
    let exhaustive = n <= opts.exhaustive_limit;

    // (ratio, i, j) per source; reduced in source order so ties keep the
    // lexicographically first pair.
    let scan = |i: usize, targets: &[usize]| -> Result<(f64, usize, usize, u64)> {
        let row = distances_from(g, i, keep);
        let mut best = (f64::NEG_INFINITY, i, i, 0u64);
        for &j in targets {
            if j == i {
                continue;
            }
            let amb = ambient.distance(i, j);
            if !(amb > 0.0) {
                return Err(Error::input(format!(
                    "ambient distance between distinct vertices {} and {} is not positive",
                    g.id(i),
                    g.id(j)
                )));
            }
            if amb >= r {
                continue;
            }
            best.3 += 1;
            let ratio = row[j] / amb;
            if ratio > best.0 {
                best = (ratio, i, j, best.3);
            }
        }
        Ok(best)
    };

    let plan: Vec<(usize, Vec<usize>)> = if exhaustive {
        (0..n).map(|i| (i, (i + 1..n).collect())).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let sources = ((opts.samples as f64).sqrt().ceil() as usize).clamp(1, n);
        let per_source = opts.samples.div_ceil(sources);
        let mut chosen: Vec<usize> = sample(&mut rng, n, sources).into_vec();
        chosen.sort_unstable();
        chosen
            .into_iter()
            .map(|i| (i, (0..per_source).map(|_| rng.gen_range(0..n)).collect()))
            .collect()
    };

    let rows: Vec<(f64, usize, usize, u64)> =
        plan.par_iter().map(|(i, targets)| scan(*i, targets)).collect::<Result<_>>()?;
    let mut c = f64::NEG_INFINITY;
    let mut worst = None;
    let mut samples = 0u64;
    for (ratio, i, j, count) in rows {
        samples += count;
        if ratio > c {
            c = ratio;
            let (a, b) = (g.id(i.min(j)), g.id(i.max(j)));
            worst = Some((a, b));
        }
    }
    if worst.is_none() {
        c = 1.0;
    }
    Ok(QuasiconvexityReport {
        schema_version: SCHEMA_VERSION,
        c,
        r,
        metric,
        worst_pair: worst,
        samples,
        exhaustive,
        lower_bound: !exhaustive,
        seed: (!exhaustive).then_some(opts.seed),
        length_tol: LENGTH_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingRow {
    pub center: VertexId,
    pub r: f64,
    pub inner_measure: f64,
    pub outer_measure: f64,
    #[serde(with = "ext_float")]
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub schema_version: u32,
    pub rows: Vec<DoublingRow>,
    pub measure_tol: f64,
}

impl DoublingReport {
    /// Largest finite-or-infinite ratio over all rows.
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// `mu(B(x, 2r)) / mu(B(x, r))` for every center and scale, open balls in the
/// graph metric. One bounded Dijkstra per center.
pub fn doubling_ratios(g: &MetricMeasureGraph, centers: &[VertexId], scales: &[f64]) -> Result<DoublingReport> {
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::input(format!("doubling scales must be positive and finite, got {s}")));
    }
    let idx: Vec<usize> = centers.iter().map(|&c| g.index_of(c)).collect::<Result<_>>()?;
    let reach = scales.iter().copied().fold(0.0, f64::max) * 2.0;
    let rows: Vec<Vec<DoublingRow>> = idx
        .par_iter()
        .map(|&ci| {
            let dist = dijkstra(g, &[(ci, 0.0)], all_edges, reach).dist;
            let mut settled: Vec<(f64, usize)> =
                dist.iter().enumerate().filter(|(_, d)| d.is_finite()).map(|(i, &d)| (d, i)).collect();
            settled.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            scales
                .iter()
                .map(|&r| {
                    let measure = |rad: f64| settled.iter().take_while(|(d, _)| *d < rad).map(|&(_, i)| g.mu(i)).sum::<f64>();
                    let (inner, outer) = (measure(r), measure(2.0 * r));
                    DoublingRow {
                        center: g.id(ci),
                        r,
                        inner_measure: inner,
                        outer_measure: outer,
                        ratio: if inner > 0.0 { outer / inner } else { f64::INFINITY },
                    }
                })
                .collect()
        })
        .collect();
    Ok(DoublingReport { schema_version: SCHEMA_VERSION, rows: rows.concat(), measure_tol: MEASURE_TOL })
}

/// Distance used to form balls in the Poincaré scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallMetric {
    #[default]
    Graph,
    Essential,
    /// Straight-line distance of the `pos` embeddings; needed for spaces that
    /// are disconnected as graphs but not as subsets of the plane.
    Euclidean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusSampling {
    /// `r, r/2, ..., r/2^(levels-1)` at every center.
    Dyadic { levels: u32 },
    /// Every distinct center distance in `(0, r]`.
    AllDistances,
}

impl Default for RadiusSampling {
    fn default() -> Self {
        RadiusSampling::Dyadic { levels: 4 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PoincareOptions {
    pub radii: RadiusSampling,
    pub ball_metric: BallMetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareRow {
    pub center: VertexId,
    pub radius: f64,
    pub measure: f64,
    pub mean_oscillation: f64,
    pub diameter: f64,
    #[serde(with = "ext_float")]
    pub rho_max: f64,
    #[serde(with = "ext_float")]
    pub quotient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub schema_version: u32,
    pub lambda: f64,
    pub r: f64,
    #[serde(with = "ext_float")]
    pub best_c: f64,
    pub witness_ball: Option<Ball>,
    pub balls_scanned: usize,
    /// `(center, radius)` of balls skipped for having zero measure.
    pub skipped_zero_measure: Vec<(VertexId, f64)>,
    pub rows: Vec<PoincareRow>,
}

/// Supremum over sampled balls `B` of
/// `avg_B |u - u_B| dmu / (diam(B) * max_{lambda B} rho)`.
pub fn poincare_constant(
    g: &MetricMeasureGraph,
    u: &ScalarField,
    rho: &GradientField,
    lambda: f64,
    r: f64,
    opts: PoincareOptions,
) -> Result<PoincareReport> {
    u.check_len(g)?;
    if rho.len() != g.vertex_count() {
        return Err(Error::input("rho must have one value per vertex"));
    }
    if !(lambda >= 1.0) {
        return Err(Error::input(format!("lambda must be at least 1, got {lambda}")));
    }
    if !(r > 0.0) {
        return Err(Error::input(format!("Poincaré scale must be positive, got {r}")));
    }
    let euclid = match opts.ball_metric {
        BallMetric::Euclidean => Some(Euclidean::new(g)?),
        _ => None,
    };
    let keep = match opts.ball_metric {
        BallMetric::Essential => positive_edges,
        _ => all_edges,
    };
    let n = g.vertex_count();
    // distances from `i`, exact up to `cutoff`
    let row = |i: usize, cutoff: f64| -> Vec<f64> {
        match &euclid {
            Some(e) => (0..n).map(|j| e.distance(i, j)).collect(),
            None => dijkstra(g, &[(i, 0.0)], keep, cutoff).dist,
        }
    };

    let per_center: Vec<(Vec<PoincareRow>, Vec<(VertexId, f64)>)> = (0..n)
        .into_par_iter()
        .map(|ci| {
            let from_center = row(ci, lambda * r);
            let radii: Vec<f64> = match opts.radii {
                RadiusSampling::Dyadic { levels } => (0..levels.max(1)).map(|k| r / 2f64.powi(k as i32)).collect(),
                RadiusSampling::AllDistances => {
                    let mut ds: Vec<f64> =
                        from_center.iter().copied().filter(|&d| d > 0.0 && d <= r).collect();
                    ds.sort_by(f64::total_cmp);
                    ds.dedup();
                    ds
                }
            };
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            for rad in radii {
                let members: Vec<usize> = (0..n).filter(|&j| from_center[j] < rad).collect();
                let measure: f64 = members.iter().map(|&j| g.mu(j)).sum();
                if measure <= 0.0 {
                    skipped.push((g.id(ci), rad));
                    continue;
                }
                let mean = members.iter().map(|&j| g.mu(j) * u.values[j]).sum::<f64>() / measure;
                let osc = members.iter().map(|&j| g.mu(j) * (u.values[j] - mean).abs()).sum::<f64>() / measure;
                let scale = members.iter().fold(1.0f64, |m, &j| m.max(u.values[j].abs()));
                let rho_max = (0..n)
                    .filter(|&j| from_center[j] < lambda * rad)
                    .fold(0.0f64, |m, j| m.max(rho.values[j]));
                let (diameter, quotient) = if osc <= MEASURE_TOL * scale {
                    (f64::NAN, 0.0)
                } else if rho_max == 0.0 {
                    (f64::NAN, f64::INFINITY)
                } else {
                    let diam = members
                        .iter()
                        .map(|&a| {
                            let ra = row(a, 2.0 * rad);
                            members.iter().fold(0.0f64, |m, &b| m.max(ra[b]))
                        })
                        .fold(0.0f64, f64::max);
                    (diam, osc / (diam * rho_max))
                };
                rows.push(PoincareRow {
                    center: g.id(ci),
                    radius: rad,
                    measure,
                    mean_oscillation: osc,
                    diameter,
                    rho_max,
                    quotient,
                });
            }
            (rows, skipped)
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r_rows, r_skip) in per_center {
        rows.extend(r_rows);
        skipped.extend(r_skip);
    }
    let mut best_c = 0.0;
    let mut witness = None;
    for (k, row) in rows.iter().enumerate() {
        if row.quotient > best_c || witness.is_none() {
            best_c = row.quotient.max(best_c);
            witness = Some(k);
        }
    }
    let witness_ball = match witness {
        Some(k) => {
            let w = &rows[k];
            let ci = g.index_of(w.center)?;
            let from_center = row(ci, w.radius);
            let members: BTreeSet<VertexId> = (0..n).filter(|&j| from_center[j] < w.radius).map(|j| g.id(j)).collect();
            Some(Ball { center: w.center, radius: w.radius, members, measure: w.measure })
        }
        None => None,
    };
    Ok(PoincareReport {
        schema_version: SCHEMA_VERSION,
        lambda,
        r,
        best_c,
        witness_ball,
        balls_scanned: rows.len(),
        skipped_zero_measure: skipped,
        rows,
    })
}

/// `z -> c * max { rho(y) : d(z, y) <= c * r }`: a Hajłasz gradient up to
/// scale `r` built from an upper gradient along `c`-quasiconvex curves.
pub fn hajlasz_gradient_from_upper(g: &MetricMeasureGraph, rho: &GradientField, c: f64, r: f64) -> Result<GradientField> {
    if !(c >= 1.0) {
        return Err(Error::Domain(format!("quasiconvexity constant must be at least 1, got {c}")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {r}")));
    }
    if rho.len() != g.vertex_count() {
        return Err(Error::input("rho must have one value per vertex"));
    }
    let values = (0..g.vertex_count())
        .into_par_iter()
        .map(|z| {
            let ball = ball_indices(g, z, c * r, BallKind::Closed, all_edges);
            c * ball.iter().fold(0.0f64, |m, &y| m.max(rho.values[y]))
        })
        .collect();
    GradientField::new(values)
}

/// Pairs at graph distance below `r` violating
/// `|u(x) - u(y)| <= d(x, y) (g(x) + g(y))` by more than the length
/// tolerance. Each pair is listed once, smaller id first.
pub fn verify_hajlasz(
    g: &MetricMeasureGraph,
    u: &ScalarField,
    grad: &GradientField,
    r: f64,
) -> Result<Vec<(VertexId, VertexId)>> {
    u.check_len(g)?;
    if grad.len() != g.vertex_count() {
        return Err(Error::input("gradient must have one value per vertex"));
    }
    let n = g.vertex_count();
    let rows: Vec<Vec<(VertexId, VertexId)>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let dist = dijkstra(g, &[(x, 0.0)], all_edges, r).dist;
            (x + 1..n)
                .filter(|&y| dist[y] < r)
                .filter(|&y| {
                    let lhs = (u.values[x] - u.values[y]).abs();
                    let rhs = dist[y] * (grad.values[x] + grad.values[y]);
                    lhs > rhs + LENGTH_TOL
                })
                .map(|y| (g.id(x), g.id(y)))
                .collect()
        })
        .collect();
    Ok(rows.concat())
}

/// Pointwise `max(g, u_norm / r)`.
pub fn local_to_global_gradient(g: &GradientField, u_norm: f64, r: f64) -> Result<GradientField> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {r}")));
    }
    if !(u_norm >= 0.0) {
        return Err(Error::input(format!("sup norm must be nonnegative, got {u_norm}")));
    }
    let floor = u_norm / r;
    GradientField::new(g.values.iter().map(|&v| v.max(floor)).collect())
}

/// Threshold `C0` such that a space whose Lipschitz representatives are
/// controlled by the Sobolev norm with constant `a` is thick
/// `(C', r)`-quasiconvex for every `C' > C0`:
/// `1` when `a = 1`, otherwise `(4r(a-1) + a) / (1 - 2r(a-1))`, valid for
/// `2r(a-1) < 1`.
pub fn c0_constant(a: f64, r: f64) -> Result<f64> {
    if !(a >= 1.0 && a.is_finite()) {
        return Err(Error::Domain(format!("norm constant must be finite and at least 1, got {a}")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {r}")));
    }
    if a == 1.0 {
        return Ok(1.0);
    }
    let t = 2.0 * r * (a - 1.0);
    if t >= 1.0 {
        return Err(Error::Domain(format!("2R(A-1) = {t} must be below 1")));
    }
    // (2t + a) / (1 - t) rewritten as (a + 2) / (1 - t) - 2: one rounding fewer
    Ok((a + 2.0) / (1.0 - t) - 2.0)
}

/// Convenience: the essential metric restricted to edges of positive measure,
/// exposed as a distance table.
pub fn essential_distances(g: &MetricMeasureGraph) -> DistanceMatrix {
    DistanceMatrix::all_pairs(g, positive_edges)
}
