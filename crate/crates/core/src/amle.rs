//! Discrete infinity-harmonic extension (AMLE) on weighted graphs.
//!
//! At an interior vertex `x` the discrete infinity-Laplacian vanishes when the
//! steepest ascent and steepest descent slopes to neighbors agree:
//! `max_y (u(y) - u(x)) / l_y = max_y (u(x) - u(y)) / l_y`.
//! For fixed neighbor values that equation has a unique root
//! `(l_b u(a) + l_a u(b)) / (l_a + l_b)`, where `(a, b)` maximizes
//! `(u(a) - u(b)) / (l_a + l_b)`. The solver runs damped Jacobi sweeps of that
//! local solve from a McShane initial guess.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::mcshane_extend;
use crate::field::{GradientField, PartialField, ScalarField};
use crate::graph::{MetricMeasureGraph, VertexId};
use crate::metric::MetricChoice;
use crate::paths::component_labels;
use crate::report::{ext_float, SCHEMA_VERSION};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
pub const DEFAULT_DAMPING: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmleProblem {
    pub graph: MetricMeasureGraph,
    /// Boundary set `A` with its data `g`.
    pub boundary: PartialField,
    pub metric: MetricChoice,
}

impl AmleProblem {
    pub fn new(graph: MetricMeasureGraph, boundary: PartialField, metric: MetricChoice) -> Result<Self> {
        if boundary.is_empty() {
            return Err(Error::input("AMLE boundary set is empty"));
        }
        for (&id, v) in &boundary {
            graph.index_of(id)?;
            if !v.is_finite() {
                return Err(Error::input(format!("boundary value at {id} is not finite")));
            }
        }
        Ok(AmleProblem { graph, boundary, metric })
    }

    fn layout(&self) -> Layout {
        let g = &self.graph;
        let n = g.vertex_count();
        let keep = self.metric.edge_filter();
        let mut on_boundary = vec![false; n];
        for &id in self.boundary.keys() {
            on_boundary[g.index_of(id).expect("validated boundary id")] = true;
        }
        let (label, parts) = component_labels(g, keep);
        let mut touches = vec![false; parts.len()];
        for i in (0..n).filter(|&i| on_boundary[i]) {
            touches[label[i]] = true;
        }
        let interior: Vec<usize> = (0..n).filter(|&i| !on_boundary[i] && touches[label[i]]).collect();
        let degenerate: Vec<usize> = (0..n).filter(|&i| !on_boundary[i] && !touches[label[i]]).collect();
        let neighbors = (0..n)
            .map(|i| {
                g.neighbors(i)
                    .filter(|inc| keep(g.edge(inc.edge)))
                    .map(|inc| (inc.vertex, g.edge(inc.edge).len))
                    .collect()
            })
            .collect();
        Layout { on_boundary, interior, degenerate, neighbors }
    }
}

struct Layout {
    on_boundary: Vec<bool>,
    interior: Vec<usize>,
    degenerate: Vec<usize>,
    /// `(neighbor, length)` over edges of the chosen metric, by neighbor index.
    neighbors: Vec<Vec<(usize, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmleSolution {
    pub schema_version: u32,
    /// Solution values; `NaN` (serialized as `"nan"`) on degenerate vertices.
    pub u: ScalarField,
    /// Largest slope imbalance over non-degenerate interior vertices.
    #[serde(with = "ext_float")]
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    /// Interior vertices with no path to the boundary in the chosen metric.
    pub degenerate_vertices: BTreeSet<VertexId>,
    pub boundary: BTreeSet<VertexId>,
    pub metric: MetricChoice,
}

impl AmleSolution {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_vertices.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initialization {
    /// McShane extension of the boundary data.
    McShane,
    /// Every interior vertex starts at `min g`.
    MinFill,
    /// Every interior vertex starts at `max g`.
    MaxFill,
    /// Caller-supplied values; boundary entries are overwritten with `g`.
    Field(ScalarField),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub init: Initialization,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            damping: DEFAULT_DAMPING,
            init: Initialization::McShane,
        }
    }
}

/// Root of the local equation at one vertex given its neighbors' values.
fn local_solve(u: &[f64], nb: &[(usize, f64)]) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for (ka, &(a, la)) in nb.iter().enumerate() {
        for (kb, &(b, lb)) in nb.iter().enumerate() {
            let slope = (u[a] - u[b]) / (la + lb);
            if slope > best.0 {
                best = (slope, ka, kb);
            }
        }
    }
    let ((a, la), (b, lb)) = (nb[best.1], nb[best.2]);
    if a == b {
        return u[a];
    }
    (lb * u[a] + la * u[b]) / (la + lb)
}

/// `|max ascent slope - max descent slope|` at `x`.
fn slope_imbalance(u: &[f64], x: usize, nb: &[(usize, f64)]) -> f64 {
    let up = nb.iter().map(|&(y, l)| (u[y] - u[x]) / l).fold(f64::NEG_INFINITY, f64::max);
    let down = nb.iter().map(|&(y, l)| (u[x] - u[y]) / l).fold(f64::NEG_INFINITY, f64::max);
    (up - down).abs()
}

fn max_residual(u: &[f64], layout: &Layout) -> f64 {
    layout
        .interior
        .par_iter()
        .map(|&x| slope_imbalance(u, x, &layout.neighbors[x]))
        .reduce(|| 0.0, f64::max)
}

pub fn solve_amle(p: &AmleProblem, tol: f64, max_iter: usize) -> Result<AmleSolution> {
    solve_amle_with(p, &SolverOptions { tol, max_iter, ..SolverOptions::default() })
}

/// Damped Jacobi iteration of the local solve over interior vertices, in
/// vertex order against the previous iterate. Stops once the residual is at
/// most `tol`; otherwise returns the iterate with the smallest residual and
/// `converged = false`.
pub fn solve_amle_with(p: &AmleProblem, opts: &SolverOptions) -> Result<AmleSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::input(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::input(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    let g = &p.graph;
    let n = g.vertex_count();
    let layout = p.layout();
    let (gmin, gmax) = p.boundary.values().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));

    let mut u: Vec<f64> = match &opts.init {
        Initialization::McShane => mcshane_extend(g, &p.boundary, p.metric)?.field.values,
        Initialization::MinFill => vec![gmin; n],
        Initialization::MaxFill => vec![gmax; n],
        Initialization::Field(f) => {
            f.check_len(g)?;
            f.values.clone()
        }
    };
    for (&id, &v) in &p.boundary {
        u[g.index_of(id)?] = v;
    }
    for &x in &layout.degenerate {
        u[x] = f64::NAN;
    }

    let mut residual = max_residual(&u, &layout);
    let mut best = (residual, u.clone());
    let mut iterations = 0;
    let omega = opts.damping;
    while residual > opts.tol && iterations < opts.max_iter {
        let updates: Vec<f64> = layout
            .interior
            .par_iter()
            .map(|&x| {
                let target = local_solve(&u, &layout.neighbors[x]);
                u[x] + omega * (target - u[x])
            })
            .collect();
        for (&x, v) in layout.interior.iter().zip(updates) {
            u[x] = v;
        }
        iterations += 1;
        residual = max_residual(&u, &layout);
        if residual < best.0 {
            best = (residual, u.clone());
        }
    }
    let converged = residual <= opts.tol;
    if !converged {
        residual = best.0;
        u = best.1;
    }
    Ok(AmleSolution {
        schema_version: SCHEMA_VERSION,
        u: ScalarField::new(u),
        residual,
        iterations,
        converged,
        tol: opts.tol,
        degenerate_vertices: layout.degenerate.iter().map(|&i| g.id(i)).collect(),
        boundary: p.boundary.keys().copied().collect(),
        metric: p.metric,
    })
}

/// Infinity-harmonic extension of `g_out` (given on every vertex outside
/// `omega`) into `omega`: AMLE in the essential metric, so zero-measure
/// edges carry no information. Interior vertices cut off from the boundary by
/// negligible edges are reported as degenerate rather than assigned values.
pub fn infinity_harmonic_extend(
    graph: &MetricMeasureGraph,
    omega: &[VertexId],
    g_out: &PartialField,
    tol: f64,
    max_iter: usize,
) -> Result<AmleSolution> {
    let inside: BTreeSet<VertexId> = omega.iter().copied().collect();
    for &id in &inside {
        graph.index_of(id)?;
    }
    let complement: Vec<VertexId> = graph.vertices().iter().map(|v| v.id).filter(|id| !inside.contains(id)).collect();
    if complement.is_empty() {
        return Err(Error::input("Omega covers the whole graph; no boundary data"));
    }
    let mut boundary = PartialField::new();
    for id in complement {
        let v = g_out
            .get(&id)
            .ok_or_else(|| Error::input(format!("no exterior data at vertex {id}")))?;
        boundary.insert(id, *v);
    }
    let problem = AmleProblem::new(graph.clone(), boundary, MetricChoice::Essential)?;
    solve_amle(&problem, tol, max_iter)
}

/// Per-vertex slope imbalance of `u`; zero on boundary and degenerate
/// vertices.
pub fn check_amle_local(u: &ScalarField, p: &AmleProblem) -> Result<GradientField> {
    let g = &p.graph;
    u.check_len(g)?;
    for (&id, &v) in &p.boundary {
        if u.values[g.index_of(id)?] != v {
            return Err(Error::input(format!("field differs from boundary data at vertex {id}")));
        }
    }
    let layout = p.layout();
    let mut out = vec![0.0; g.vertex_count()];
    for &x in &layout.interior {
        out[x] = slope_imbalance(&u.values, x, &layout.neighbors[x]);
    }
    debug_assert!(layout.on_boundary.len() == out.len());
    GradientField::new(out)
}

/// Whether `u1 <= u2 + tol` at every vertex where both are defined, `tol`
/// being the larger solver tolerance. Solutions must share their boundary
/// set and vertex count.
pub fn comparison_check(u1: &AmleSolution, u2: &AmleSolution) -> Result<bool> {
    if u1.u.len() != u2.u.len() || u1.boundary != u2.boundary {
        return Err(Error::input("solutions belong to different problems"));
    }
    let tol = u1.tol.max(u2.tol);
    Ok(u1
        .u
        .values
        .iter()
        .zip(&u2.u.values)
        .filter(|(a, b)| !a.is_nan() && !b.is_nan())
        .all(|(a, b)| *a <= *b + tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Vertex};

    fn path(n: u64) -> MetricMeasureGraph {
        MetricMeasureGraph::new(
            (0..n).map(|i| Vertex::new(i, 1.0)).collect(),
            (0..n - 1).map(|i| Edge::new(i, i + 1, 1.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn path_is_linear() {
        let p = AmleProblem::new(path(11), PartialField::from([(0, 0.0), (10, 1.0)]), MetricChoice::Graph).unwrap();
        let s = solve_amle(&p, 1e-12, 100_000).unwrap();
        assert!(s.converged);
        for k in 0..11 {
            assert!((s.u.values[k] - k as f64 / 10.0).abs() < 1e-8);
        }
        let exact = ScalarField::new((0..11).map(|k| k as f64 / 10.0).collect());
        let res = check_amle_local(&exact, &p).unwrap();
        assert!(res.values.iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn constant_boundary() {
        let p = AmleProblem::new(path(6), PartialField::from([(0, 2.5), (5, 2.5)]), MetricChoice::Graph).unwrap();
        let s = solve_amle_with(&p, &SolverOptions { init: Initialization::MinFill, ..Default::default() }).unwrap();
        assert!(s.u.values.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn single_interior_vertex_one_step() {
        // star center 0 with leaves at lengths 1, 2, 1 and values 0, 3, 1
        let g = MetricMeasureGraph::new(
            (0..4).map(|i| Vertex::new(i, 1.0)).collect(),
            vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 2.0), Edge::new(0, 3, 1.0)],
        )
        .unwrap();
        let nb = [(1, 1.0), (2, 2.0), (3, 1.0)];
        let u = [0.0, 0.0, 3.0, 1.0];
        // best pair (2, 1): slope 3/3; root (1*3 + 2*0)/3 = 1
        assert_eq!(local_solve(&u, &nb), 1.0);
        let p = AmleProblem::new(g, PartialField::from([(1, 0.0), (2, 3.0), (3, 1.0)]), MetricChoice::Graph).unwrap();
        let s = solve_amle(&p, 1e-12, 1000).unwrap();
        assert!((s.u.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_mismatch_rejected() {
        let p = AmleProblem::new(path(3), PartialField::from([(0, 0.0), (2, 1.0)]), MetricChoice::Graph).unwrap();
        assert!(check_amle_local(&ScalarField::new(vec![0.0, 0.5, 0.9]), &p).is_err());
        assert!(AmleProblem::new(path(3), PartialField::new(), MetricChoice::Graph).is_err());
    }

    #[test]
    fn empty_interior_returns_data() {
        let p = AmleProblem::new(path(2), PartialField::from([(0, 1.0), (1, 4.0)]), MetricChoice::Graph).unwrap();
        let s = solve_amle(&p, 1e-10, 10).unwrap();
        assert_eq!(s.u.values, vec![1.0, 4.0]);
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn degenerate_vertices_are_not_invented() {
        let g = MetricMeasureGraph::new(
            (0..3).map(|i| Vertex::new(i, 1.0)).collect(),
            vec![Edge::new(0, 1, 1.0).with_measure(0.0), Edge::new(1, 2, 1.0).with_measure(0.0)],
        )
        .unwrap();
        let s = infinity_harmonic_extend(&g, &[1], &PartialField::from([(0, 0.0), (2, 1.0)]), 1e-10, 100).unwrap();
        assert_eq!(s.degenerate_vertices, BTreeSet::from([1]));
        assert!(s.u.values[1].is_nan());
        assert!(infinity_harmonic_extend(&g, &[0, 1, 2], &PartialField::new(), 1e-10, 10).is_err());
    }

    #[test]
    fn comparison_rejects_mismatch() {
        let a = AmleProblem::new(path(4), PartialField::from([(0, 0.0), (3, 1.0)]), MetricChoice::Graph).unwrap();
        let b = AmleProblem::new(path(4), PartialField::from([(0, 0.0)]), MetricChoice::Graph).unwrap();
        let (sa, sb) = (solve_amle(&a, 1e-10, 10_000).unwrap(), solve_amle(&b, 1e-10, 10_000).unwrap());
        assert!(comparison_check(&sa, &sb).is_err());
        assert!(comparison_check(&sa, &sa).unwrap());
    }
}
