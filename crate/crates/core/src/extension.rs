//! Lipschitz extension operators.
//!
//! * McShane: `Tu(x) = min_{y in Omega} u(y) + L d(x, y)` with `L = lip(u|Omega)`,
//!   evaluated by one multi-source Dijkstra pass (`O((n + m) log n)` after the
//!   `|Omega|` single-source passes needed to measure `L`).
//! * Truncation: `Eu = clamp(Tu, -|u|_inf, |u|_inf)`.
//! * Whitney-type linear operator: anchored boundary values averaged against
//!   a Lipschitz partition of unity subordinate to a cover of the exterior by
//!   blocks whose size is proportional to their distance from `Omega`.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{PartialField, ScalarField, VectorField};
use crate::graph::{MetricMeasureGraph, VertexId};
use crate::metric::{lipschitz_constant_on, Metric, MetricChoice};
use crate::paths::{all_edges, component_labels, dijkstra, distances_from};
use crate::report::{ext_float, LENGTH_TOL, MEASURE_TOL, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarExtension {
    pub field: ScalarField,
    /// Lipschitz constant of the data on `Omega` in the chosen metric.
    pub lipschitz: f64,
    /// Vertices at infinite distance from `Omega`.
    pub unreachable: Vec<VertexId>,
}

fn omega_indices(g: &MetricMeasureGraph, u: &PartialField) -> Result<Vec<usize>> {
    if u.is_empty() {
        return Err(Error::input("extension domain Omega is empty"));
    }
    if let Some((id, v)) = u.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::input(format!("data at vertex {id} is not finite: {v}")));
    }
    u.keys().map(|&id| g.index_of(id)).collect()
}

/// McShane extension of `u` (defined on `Omega = keys(u)`) in the graph or
/// essential metric. The result equals `u` on `Omega` bit for bit; vertices
/// unreachable from `Omega` get `+inf`.
pub fn mcshane_extend(g: &MetricMeasureGraph, u: &PartialField, metric: MetricChoice) -> Result<ScalarExtension> {
    let omega = omega_indices(g, u)?;
    let keep = metric.edge_filter();
    let n = g.vertex_count();
    let mut dense = vec![f64::NAN; n];
    for (&id, &v) in u {
        dense[g.index_of(id)?] = v;
    }

    let rows: Vec<Vec<f64>> = omega.par_iter().map(|&i| distances_from(g, i, keep)).collect();
    let on_omega = |a: usize, b: usize| -> f64 {
        let k = omega.binary_search(&a).expect("row of an Omega vertex");
        rows[k][b]
    };
    let lip = lipschitz_constant_on(&omega, &dense, &on_omega);

    let min_u = omega.iter().map(|&i| dense[i]).fold(f64::INFINITY, f64::min);
    let mut values = if lip > 0.0 {
        let sources: Vec<(usize, f64)> = omega.iter().map(|&i| (i, (dense[i] - min_u) / lip)).collect();
        let key = dijkstra(g, &sources, keep, f64::INFINITY).dist;
        key.into_iter().map(|k| if k.is_finite() { min_u + lip * k } else { f64::INFINITY }).collect()
    } else {
        // constant on every component: the infimum is the component's value
        let (label, parts) = component_labels(g, keep);
        let mut comp_min = vec![f64::INFINITY; parts.len()];
        for &i in &omega {
            comp_min[label[i]] = comp_min[label[i]].min(dense[i]);
        }
        (0..n).map(|x| comp_min[label[x]]).collect::<Vec<f64>>()
    };
    for &i in &omega {
        values[i] = dense[i];
    }
    let unreachable = (0..n).filter(|&i| values[i].is_infinite()).map(|i| g.id(i)).collect();
    Ok(ScalarExtension { field: ScalarField::new(values), lipschitz: lip, unreachable })
}

/// McShane extension clamped to `[-|u|_inf, |u|_inf]`; preserves both the
/// Lipschitz constant and the sup norm. Unreachable vertices are clamped to
/// the upper bound and still reported.
pub fn truncate_extend(g: &MetricMeasureGraph, u: &PartialField, metric: MetricChoice) -> Result<ScalarExtension> {
    let mut ext = mcshane_extend(g, u, metric)?;
    let bound = u.values().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut ext.field.values {
        *v = v.clamp(-bound, bound);
    }
    Ok(ext)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NagataCover {
    pub schema_version: u32,
    pub sets: Vec<Vec<VertexId>>,
    pub s: f64,
    /// Diameter bound factor: every set has diameter below `c * s`.
    pub c: f64,
    /// Dimension parameter implied by the observed multiplicity.
    pub n: usize,
    pub target_n: usize,
    /// Largest number of sets met by a probe set of diameter at most `s`.
    pub multiplicity: usize,
    pub probes: usize,
    pub max_diameter: f64,
    pub exceeds_target: bool,
}

/// Greedy `s`-net cover of `points`: centers are taken in index order when at
/// distance at least `s` from all earlier centers; every point joins its
/// nearest center (ties to the smallest id), giving sets of diameter below
/// `2s`. Multiplicity is estimated with two probe families per point: the
/// closed ball of radius `s/2`, and a greedy set grown from the point that
/// adds members of not-yet-met sets while keeping the diameter at most `s`.
pub fn nagata_cover<M: Metric + ?Sized>(
    g: &MetricMeasureGraph,
    points: &[VertexId],
    metric: &M,
    s: f64,
    target_n: usize,
) -> Result<NagataCover> {
    if !(s > 0.0) {
        return Err(Error::input(format!("cover scale must be positive, got {s}")));
    }
    let mut pts: Vec<usize> = points.iter().map(|&p| g.index_of(p)).collect::<Result<_>>()?;
    pts.sort_unstable();
    pts.dedup();
    let assignment = greedy_net(&pts, metric, s);
    let set_count = assignment.iter().map(|&(_, c)| c + 1).max().unwrap_or(0);
    let mut sets = vec![Vec::new(); set_count];
    for &(p, c) in &assignment {
        sets[c].push(p);
    }
    let max_diameter = sets
        .iter()
        .map(|set| {
            let mut d = 0.0f64;
            for (k, &a) in set.iter().enumerate() {
                for &b in &set[k + 1..] {
                    d = d.max(metric.distance(a, b));
                }
            }
            d
        })
        .fold(0.0, f64::max);

    let owner: BTreeMap<usize, usize> = assignment.iter().copied().collect();
    let probe = |x: usize| -> usize {
        let mut near: Vec<(f64, usize)> = pts
            .iter()
            .map(|&y| (metric.distance(x, y), y))
            .filter(|(d, _)| *d <= s)
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let half: BTreeSet<usize> = near.iter().filter(|(d, _)| *d <= s / 2.0).map(|&(_, y)| owner[&y]).collect();
        let mut members = vec![x];
        let mut met: BTreeSet<usize> = BTreeSet::from([owner[&x]]);
        for &(_, y) in &near {
            if met.contains(&owner[&y]) {
                continue;
            }
            if members.iter().all(|&z| metric.distance(y, z) <= s) {
                members.push(y);
                met.insert(owner[&y]);
            }
        }
        met.len().max(half.len())
    };
    let multiplicity = pts.par_iter().map(|&x| probe(x)).max().unwrap_or(0);
    let n = multiplicity.saturating_sub(1);
    Ok(NagataCover {
        schema_version: SCHEMA_VERSION,
        sets: sets.into_iter().map(|set| set.into_iter().map(|i| g.id(i)).collect()).collect(),
        s,
        c: 2.0,
        n,
        target_n,
        multiplicity,
        probes: 2 * pts.len(),
        max_diameter,
        exceeds_target: multiplicity > target_n + 1,
    })
}

/// `(point, set index)` for a greedy net of separation `sep` over sorted
/// `pts`.
fn greedy_net<M: Metric + ?Sized>(pts: &[usize], metric: &M, sep: f64) -> Vec<(usize, usize)> {
    let mut centers: Vec<usize> = Vec::new();
    for &p in pts {
        if centers.iter().all(|&c| metric.distance(p, c) >= sep) {
            centers.push(p);
        }
    }
    pts.iter()
        .map(|&p| {
            let (mut best, mut best_d) = (0, f64::INFINITY);
            for (k, &c) in centers.iter().enumerate() {
                let d = metric.distance(p, c);
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            (p, best)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhitneyParams {
    pub alpha: f64,
    pub beta: f64,
    /// Upper bound on `|I_x|`; computed from a Nagata cover of the exterior
    /// when `None`.
    pub multiplicity_bound: Option<usize>,
}

impl Default for WhitneyParams {
    fn default() -> Self {
        WhitneyParams { alpha: 2.0, beta: 0.5, multiplicity_bound: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyBlock {
    pub members: Vec<VertexId>,
    pub anchor: VertexId,
    /// `d(B_i, Omega)`
    pub distance_to_omega: f64,
    pub diameter: f64,
    /// `d(z_i, B_i)`
    pub anchor_distance: f64,
}

/// Whitney-type cover of `Z \ Omega` with its partition of unity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyData {
    pub schema_version: u32,
    pub omega: Vec<VertexId>,
    pub blocks: Vec<WhitneyBlock>,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    /// `n + 1`
    pub multiplicity_bound: usize,
    /// Largest observed `|I_x|`.
    pub max_index_count: usize,
    /// Exterior vertices at infinite distance from `Omega`, excluded.
    pub unreachable: Vec<VertexId>,
    /// Per vertex index: `(block, sigma_i(x))` for `sigma_i(x) > 0`.
    #[serde(skip)]
    pub sigma: Vec<Vec<(usize, f64)>>,
    #[serde(skip)]
    omega_idx: Vec<usize>,
    #[serde(skip)]
    block_idx: Vec<Vec<usize>>,
    #[serde(skip)]
    anchor_idx: Vec<usize>,
}

/// Builds the cover: exterior vertices are bucketed by dyadic annuli of
/// their distance to `Omega` (`base 2^k <= d < base 2^(k+1)` with `base` the
/// smallest exterior distance), and each annulus is clustered by a greedy
/// net of separation `alpha/2 * base 2^k`, so that
/// `diam B_i < alpha d(B_i, Omega)`. Each block is anchored at its nearest
/// `Omega` vertex. All invariants are validated before returning.
pub fn whitney_cover(g: &MetricMeasureGraph, omega: &[VertexId], params: WhitneyParams) -> Result<WhitneyData> {
    let WhitneyParams { alpha, beta, multiplicity_bound } = params;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::input(format!("alpha and beta must be positive, got {alpha}, {beta}")));
    }
    let mut omega_idx: Vec<usize> = omega.iter().map(|&id| g.index_of(id)).collect::<Result<_>>()?;
    omega_idx.sort_unstable();
    omega_idx.dedup();
    if omega_idx.is_empty() {
        return Err(Error::input("Whitney cover needs a nonempty Omega"));
    }
    let n = g.vertex_count();
    let delta = beta / (2.0 * (beta + 1.0));
    let mut in_omega = vec![false; n];
    for &i in &omega_idx {
        in_omega[i] = true;
    }
    let sources: Vec<(usize, f64)> = omega_idx.iter().map(|&i| (i, 0.0)).collect();
    let to_omega = dijkstra(g, &sources, all_edges, f64::INFINITY).dist;
    let unreachable: Vec<usize> = (0..n).filter(|&i| !in_omega[i] && to_omega[i].is_infinite()).collect();
    let exterior: Vec<usize> = (0..n).filter(|&i| !in_omega[i] && to_omega[i].is_finite()).collect();

    let mut data = WhitneyData {
        schema_version: SCHEMA_VERSION,
        omega: omega_idx.iter().map(|&i| g.id(i)).collect(),
        blocks: Vec::new(),
        alpha,
        beta,
        delta,
        multiplicity_bound: multiplicity_bound.unwrap_or(1),
        max_index_count: 0,
        unreachable: unreachable.iter().map(|&i| g.id(i)).collect(),
        sigma: vec![Vec::new(); n],
        omega_idx,
        block_idx: Vec::new(),
        anchor_idx: Vec::new(),
    };
    if exterior.is_empty() {
        return Ok(data);
    }

    let base = exterior.iter().map(|&i| to_omega[i]).fold(f64::INFINITY, f64::min);
    let mut annuli: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &x in &exterior {
        let k = (to_omega[x] / base).log2().floor() as i64;
        // guard against log2 rounding at exact powers of two
        let k = if base * 2f64.powi(k as i32 + 1) <= to_omega[x] { k + 1 } else { k };
        let k = if base * 2f64.powi(k as i32) > to_omega[x] { k - 1 } else { k };
        annuli.entry(k).or_default().push(x);
    }

    // distances among exterior vertices inside a block's reach
    let mut block_idx = Vec::new();
    for (&k, members) in &annuli {
        let sep = 0.5 * alpha * base * 2f64.powi(k as i32);
        let rows: Vec<Vec<f64>> = members
            .par_iter()
            .map(|&p| dijkstra(g, &[(p, 0.0)], all_edges, 2.0 * sep).dist)
            .collect();
        let local = |a: usize, b: usize| -> f64 {
            let ka = members.binary_search(&a).expect("annulus member");
            rows[ka][b]
        };
        let assignment = greedy_net(members, &local, sep);
        let count = assignment.iter().map(|&(_, c)| c + 1).max().unwrap_or(0);
        let mut blocks = vec![Vec::new(); count];
        for (p, c) in assignment {
            blocks[c].push(p);
        }
        block_idx.extend(blocks);
    }

    let per_block: Vec<(WhitneyBlock, usize, Vec<(usize, f64)>)> = block_idx
        .par_iter()
        .map(|members: &Vec<usize>| {
            let src: Vec<(usize, f64)> = members.iter().map(|&i| (i, 0.0)).collect();
            let from_block = dijkstra(g, &src, all_edges, f64::INFINITY).dist;
            let dist_omega = members.iter().map(|&i| to_omega[i]).fold(f64::INFINITY, f64::min);
            let anchor = data
                .omega_idx
                .iter()
                .copied()
                .min_by(|&a, &b| from_block[a].total_cmp(&from_block[b]).then(a.cmp(&b)))
                .expect("Omega is nonempty");
            let mut diameter = 0.0f64;
            for &a in members {
                let row = dijkstra(g, &[(a, 0.0)], all_edges, alpha * dist_omega + LENGTH_TOL).dist;
                for &b in members {
                    diameter = diameter.max(row[b]);
                }
            }
            let reach = delta * dist_omega;
            let sigma: Vec<(usize, f64)> = (0..n)
                .filter(|&x| !in_omega[x] && from_block[x] < reach)
                .map(|x| (x, reach - from_block[x]))
                .collect();
            let block = WhitneyBlock {
                members: members.iter().map(|&i| g.id(i)).collect(),
                anchor: g.id(anchor),
                distance_to_omega: dist_omega,
                diameter,
                anchor_distance: from_block[anchor],
            };
            (block, anchor, sigma)
        })
        .collect();

    for (bi, (block, anchor, sigma)) in per_block.into_iter().enumerate() {
        for (x, s) in sigma {
            data.sigma[x].push((bi, s));
        }
        data.blocks.push(block);
        data.anchor_idx.push(anchor);
    }
    data.block_idx = block_idx;
    data.max_index_count = exterior.iter().map(|&x| data.sigma[x].len()).max().unwrap_or(0);
    data.multiplicity_bound = match multiplicity_bound {
        Some(b) => b,
        None => exterior_multiplicity(g, &exterior, &annuli, base)?,
    };
    let violations = data.violations(g);
    if !violations.is_empty() {
        let shown: Vec<&str> = violations.iter().take(3).map(String::as_str).collect();
        return Err(Error::Invariant(format!(
            "Whitney cover: {} ({} violations)",
            shown.join("; "),
            violations.len()
        )));
    }
    Ok(data)
}

/// Largest Nagata multiplicity of the exterior over the annulus scales.
fn exterior_multiplicity(
    g: &MetricMeasureGraph,
    exterior: &[usize],
    annuli: &BTreeMap<i64, Vec<usize>>,
    base: f64,
) -> Result<usize> {
    let ids: Vec<VertexId> = exterior.iter().map(|&i| g.id(i)).collect();
    let mut worst = 1;
    let rows: BTreeMap<usize, Vec<f64>> = exterior
        .par_iter()
        .map(|&x| (x, distances_from(g, x, all_edges)))
        .collect();
    let metric = |a: usize, b: usize| rows[&a][b];
    for &k in annuli.keys() {
        let s = base * 2f64.powi(k as i32);
        let cover = nagata_cover(g, &ids, &metric, s, usize::MAX - 1)?;
        worst = worst.max(cover.multiplicity);
    }
    Ok(worst)
}

impl WhitneyData {
    /// Every invariant violation, as human-readable lines.
    pub fn violations(&self, g: &MetricMeasureGraph) -> Vec<String> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if b.diameter > self.alpha * b.distance_to_omega + LENGTH_TOL {
                out.push(format!("block {i}: diameter {} exceeds alpha * {}", b.diameter, b.distance_to_omega));
            }
            if !(b.anchor_distance < (2.0 - self.delta) * b.distance_to_omega) {
                out.push(format!("block {i}: anchor distance {} too large", b.anchor_distance));
            }
        }
        let mut in_omega = vec![false; g.vertex_count()];
        for &i in &self.omega_idx {
            in_omega[i] = true;
        }
        let mut excluded = vec![false; g.vertex_count()];
        for &id in &self.unreachable {
            if let Ok(i) = g.index_of(id) {
                excluded[i] = true;
            }
        }
        for x in 0..g.vertex_count() {
            if in_omega[x] || excluded[x] {
                continue;
            }
            let count = self.sigma[x].len();
            if count < 1 || count > self.multiplicity_bound {
                out.push(format!("vertex {}: |I_x| = {count} outside [1, {}]", g.id(x), self.multiplicity_bound));
            }
        }
        for (k, e) in g.edges().iter().enumerate() {
            let (a, b) = g.ends(k);
            let sa: BTreeMap<usize, f64> = self.sigma[a].iter().copied().collect();
            for &(bi, sb) in &self.sigma[b] {
                let diff = (sa.get(&bi).copied().unwrap_or(0.0) - sb).abs();
                if diff > e.len + LENGTH_TOL {
                    out.push(format!("sigma_{bi} not 1-Lipschitz on edge {}-{}", g.id(a), g.id(b)));
                }
            }
            let sb: BTreeMap<usize, f64> = self.sigma[b].iter().copied().collect();
            for &(bi, s) in &self.sigma[a] {
                if !sb.contains_key(&bi) && s > e.len + LENGTH_TOL {
                    out.push(format!("sigma_{bi} not 1-Lipschitz on edge {}-{}", g.id(a), g.id(b)));
                }
            }
        }
        out
    }

    /// Normalized weights `sigma_bar_i(x)` at vertex index `x`.
    pub fn normalized(&self, x: usize) -> Vec<(usize, f64)> {
        let total: f64 = self.sigma[x].iter().map(|&(_, s)| s).sum();
        self.sigma[x].iter().map(|&(i, s)| (i, s / total)).collect()
    }

    /// Vertex indices of `Omega`.
    pub fn omega_indices(&self) -> &[usize] {
        &self.omega_idx
    }

    pub fn anchor_indices(&self) -> &[usize] {
        &self.anchor_idx
    }

    pub fn block_indices(&self) -> &[Vec<usize>] {
        &self.block_idx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyExtension {
    pub schema_version: u32,
    pub field: VectorField,
    /// Lipschitz constant of the data on `Omega` (graph metric).
    pub lipschitz_data: f64,
    /// Lipschitz constant of the extension (graph metric, per edge).
    pub lipschitz_extension: f64,
    /// `lipschitz_extension / lipschitz_data`, the measured operator constant.
    #[serde(with = "ext_float")]
    pub k: f64,
    pub sup_data: f64,
    pub sup_extension: f64,
    pub multiplicity_bound: usize,
    pub partition_tol: f64,
}

/// `F = f` on `Omega`, `F(x) = sum_i sigma_bar_i(x) f(z_i)` on the exterior.
/// `f` must be supported exactly on the cover's `Omega`.
pub fn whitney_extend(g: &MetricMeasureGraph, f: &VectorField, cover: &WhitneyData) -> Result<WhitneyExtension> {
    if f.values.len() != g.vertex_count() {
        return Err(Error::input("vector field must have one slot per vertex"));
    }
    let violations = cover.violations(g);
    if !violations.is_empty() {
        return Err(Error::Invariant(format!("refusing to extend over an invalid cover: {}", violations[0])));
    }
    for (x, v) in f.values.iter().enumerate() {
        let in_omega = cover.omega_idx.binary_search(&x).is_ok();
        if in_omega != v.is_some() {
            return Err(Error::input(format!("field support differs from Omega at vertex {}", g.id(x))));
        }
    }
    let n = g.vertex_count();
    let values: Vec<Option<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|x| {
            if let Some(v) = &f.values[x] {
                return Some(v.clone());
            }
            if cover.sigma[x].is_empty() {
                return None;
            }
            // f(z_0) + sum_i w_i (f(z_i) - f(z_0)): equal to sum_i w_i f(z_i)
            // since the weights sum to one, and exact on constant data
            let anchor = |bi: usize| f.values[cover.anchor_idx[bi]].as_ref().expect("anchor lies in Omega");
            let weights = cover.normalized(x);
            let reference = anchor(weights[0].0);
            let mut out = reference.clone();
            for (bi, w) in weights {
                for ((o, a), r) in out.iter_mut().zip(anchor(bi)).zip(reference) {
                    *o += w * (a - r);
                }
            }
            Some(out)
        })
        .collect();
    let field = VectorField::new(f.dim, f.norm, values)?;

    let omega = &cover.omega_idx;
    let rows: Vec<Vec<f64>> = omega.par_iter().map(|&i| distances_from(g, i, all_edges)).collect();
    let mut lipschitz_data = 0.0f64;
    for (ka, &a) in omega.iter().enumerate() {
        for &b in &omega[ka + 1..] {
            let d = rows[ka][b];
            if d.is_finite() {
                let diff = f.norm.distance(f.values[a].as_ref().unwrap(), f.values[b].as_ref().unwrap());
                lipschitz_data = lipschitz_data.max(diff / d);
            }
        }
    }
    let mut lipschitz_extension = 0.0f64;
    for (k, e) in g.edges().iter().enumerate() {
        let (a, b) = g.ends(k);
        if let (Some(va), Some(vb)) = (&field.values[a], &field.values[b]) {
            lipschitz_extension = lipschitz_extension.max(f.norm.distance(va, vb) / e.len);
        }
    }
    let k = if lipschitz_data > 0.0 {
        lipschitz_extension / lipschitz_data
    } else if lipschitz_extension == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(WhitneyExtension {
        schema_version: SCHEMA_VERSION,
        sup_data: f.sup_norm(),
        sup_extension: field.sup_norm(),
        field,
        lipschitz_data,
        lipschitz_extension,
        k,
        multiplicity_bound: cover.multiplicity_bound,
        partition_tol: MEASURE_TOL,
    })
}
