//! Generators for example metric measure spaces: planar grids, outward cusp
//! domains, quotients collapsing continua to points, subdivided simplicial
//! complexes and Sierpinski carpet approximations.
//!
//! Every generator is deterministic. Planar meshes use a square lattice of
//! step `h` with horizontal, vertical and both diagonal edges; lattice points
//! are numbered row-major over the bounding box, so ids are stable under
//! changes of the domain that keep the box.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, MetricMeasureGraph, Vertex, VertexId};

/// Largest lattice a planar generator will allocate.
pub const MAX_LATTICE_POINTS: usize = 50_000_000;
pub const MAX_CARPET_LEVEL: u32 = 6;
/// Quadrature samples per cell in the x direction for clipped cell areas.
const CELL_SAMPLES: usize = 16;
const LATTICE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.x0, self.y0, self.x1, self.y1].iter().all(|c| c.is_finite())
            && self.x1 > self.x0
            && self.y1 > self.y0;
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("degenerate rectangle {self:?}")))
        }
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        let tol = LATTICE_EPS * (self.x1 - self.x0).max(self.y1 - self.y0);
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    /// Closed axis-aligned rectangle; the lattice is anchored at `(x0, y0)`.
    Rect(Rect),
    /// Closed disc; the lattice is anchored at the center.
    Disc { center: [f64; 2], radius: f64 },
}

/// Cusp profile `psi` on `(0, 1]`, nondecreasing with `psi(1) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    /// `t^exponent`
    Power { exponent: f64 },
    /// `exp(1 - 1/t)`: the profile `exp(-1/t)` rescaled so that `psi(1) = 1`.
    ExpInv,
    /// `psi = 1`, no cusp.
    Constant,
    /// Left-continuous step function: `psi(t) = psi[k]` for `t` in `(t[k-1], t[k]]`.
    Samples { t: Vec<f64>, psi: Vec<f64> },
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Power { exponent } if !(exponent.is_finite() && *exponent > 0.0) => {
                Err(Error::input(format!("cusp exponent must be positive, got {exponent}")))
            }
            Profile::Samples { t, psi } => {
                if t.is_empty() || t.len() != psi.len() {
                    return Err(Error::input("cusp samples need equally many t and psi values"));
                }
                if t.iter().chain(psi).any(|v| !v.is_finite()) {
                    return Err(Error::input("cusp samples must be finite"));
                }
                if let Some(bad) = psi.iter().find(|&&p| p <= 0.0) {
                    return Err(Error::input(format!("cusp profile is nonpositive ({bad})")));
                }
                if t[0] <= 0.0 || t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::input("cusp sample abscissae must increase strictly within (0, 1]"));
                }
                if psi.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::input("cusp profile must be nondecreasing"));
                }
                if t[t.len() - 1] != 1.0 || psi[psi.len() - 1] != 1.0 {
                    return Err(Error::input("cusp samples must end at t = 1 with psi = 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `psi(t)` for `t` in `(0, 1]`, zero for `t <= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Profile::Power { exponent } => t.powf(*exponent),
            Profile::ExpInv => (1.0 - 1.0 / t).exp(),
            Profile::Constant => 1.0,
            Profile::Samples { t: ts, psi } => {
                let k = ts.partition_point(|&s| s < t);
                psi[k.min(psi.len() - 1)]
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: usize,
    pub mass: f64,
}

/// Simplicial complex by point coordinates and index lists. Points may live
/// in any common dimension.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpec {
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub segments: Vec<[usize; 2]>,
    #[serde(default)]
    pub triangles: Vec<[usize; 3]>,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Grid { shape: Shape },
    Cusp { profile: Profile },
    /// Each polyline is contracted to its own vertex.
    Collapsed { sets: Vec<Vec<[f64; 2]>>, bbox: Rect },
    Simplicial { complex: ComplexSpec },
    Carpet { level: u32 },
}

impl Domain {
    pub fn kind(&self) -> &'static str {
        match self {
            Domain::Grid { .. } => "grid",
            Domain::Cusp { .. } => "cusp",
            Domain::Collapsed { .. } => "collapsed",
            Domain::Simplicial { .. } => "simplicial",
            Domain::Carpet { .. } => "carpet",
        }
    }
}

/// Which edges of a generated graph get `mu_edge = 0`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NegligibleMode {
    #[default]
    None,
    All,
    /// Listed vertex pairs; each must be an edge of the generated graph.
    Edges { pairs: Vec<[VertexId; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    /// Mesh step; required by every kind except `carpet`.
    #[serde(default)]
    pub h: Option<f64>,
    pub domain: Domain,
    #[serde(default)]
    pub negligible_mode: NegligibleMode,
}

impl MeshSpec {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let spec: MeshSpec = serde_json::from_slice(bytes)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.domain, Domain::Carpet { .. }) {
            self.step()?;
        }
        match &self.domain {
            Domain::Cusp { profile } => profile.validate(),
            Domain::Carpet { level } if *level > MAX_CARPET_LEVEL => {
                Err(Error::Size(format!("carpet level {level} exceeds {MAX_CARPET_LEVEL}")))
            }
            _ => Ok(()),
        }
    }

    fn step(&self) -> Result<f64> {
        match self.h {
            Some(h) if h.is_finite() && h > 0.0 => Ok(h),
            Some(h) => Err(Error::input(format!("mesh step must be positive, got {h}"))),
            None => Err(Error::input(format!("mesh step h is required for {}", self.domain.kind()))),
        }
    }

    pub fn generate(&self) -> Result<MetricMeasureGraph> {
        self.validate()?;
        let g = match &self.domain {
            Domain::Grid { shape } => gen_grid(shape, self.step()?)?,
            Domain::Cusp { profile } => gen_cusp(profile, self.step()?)?,
            Domain::Collapsed { sets, bbox } => gen_multi_collapse(sets, *bbox, self.step()?)?.graph,
            Domain::Simplicial { complex } => gen_simplicial(complex, self.step()?)?,
            Domain::Carpet { level } => gen_carpet(*level, &NegligibleMode::None)?,
        };
        apply_negligible(&g, &self.negligible_mode)
    }
}

/// Copy of `g` with `mu_edge = 0` on the edges selected by `mode`.
pub fn apply_negligible(g: &MetricMeasureGraph, mode: &NegligibleMode) -> Result<MetricMeasureGraph> {
    match mode {
        NegligibleMode::None => Ok(g.clone()),
        NegligibleMode::All => mark_negligible(g, |_| true),
        NegligibleMode::Edges { pairs } => {
            let mut chosen = BTreeSet::new();
            for &[a, b] in pairs {
                let (ia, ib) = (g.index_of(a)?, g.index_of(b)?);
                let e = g
                    .edge_between(ia, ib)
                    .ok_or_else(|| Error::input(format!("no edge {a}-{b} to mark negligible")))?;
                chosen.insert(e);
            }
            let mut edges = g.edges().to_vec();
            for e in chosen {
                edges[e].mu_edge = 0.0;
            }
            MetricMeasureGraph::new(g.vertices().to_vec(), edges)
        }
    }
}

/// Copy of `g` with `mu_edge = 0` wherever `pred` holds.
pub fn mark_negligible(g: &MetricMeasureGraph, pred: impl Fn(&Edge) -> bool) -> Result<MetricMeasureGraph> {
    let edges = g
        .edges()
        .iter()
        .map(|e| if pred(e) { e.clone().with_measure(0.0) } else { e.clone() })
        .collect();
    MetricMeasureGraph::new(g.vertices().to_vec(), edges)
}

/// Planar region for lattice meshing: a membership test for lattice points
/// and the vertical cross-section `(lo, hi)` at abscissa `s`, used to clip
/// cell areas.
struct Region<I, S> {
    anchor: [f64; 2],
    bbox: Rect,
    inside: I,
    section: S,
}

struct Mesh {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl<I, S> Region<I, S>
where
    I: Fn(f64, f64) -> bool,
    S: Fn(f64) -> Option<(f64, f64)>,
{
    fn cell_area(&self, x: f64, y: f64, h: f64) -> f64 {
        let dx = h / CELL_SAMPLES as f64;
        (0..CELL_SAMPLES)
            .map(|k| {
                let s = x - h / 2.0 + (k as f64 + 0.5) * dx;
                match (self.section)(s) {
                    Some((lo, hi)) => ((y + h / 2.0).min(hi) - (y - h / 2.0).max(lo)).max(0.0) * dx,
                    None => 0.0,
                }
            })
            .sum()
    }

    fn mesh(&self, h: f64) -> Result<Mesh> {
        let [ax, ay] = self.anchor;
        let i0 = ((self.bbox.x0 - ax) / h - LATTICE_EPS).ceil() as i64;
        let i1 = ((self.bbox.x1 - ax) / h + LATTICE_EPS).floor() as i64;
        let j0 = ((self.bbox.y0 - ay) / h - LATTICE_EPS).ceil() as i64;
        let j1 = ((self.bbox.y1 - ay) / h + LATTICE_EPS).floor() as i64;
        if i1 < i0 || j1 < j0 {
            return Err(Error::input("domain contains no lattice points"));
        }
        let (nx, ny) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
        if nx.saturating_mul(ny) > MAX_LATTICE_POINTS {
            return Err(Error::Size(format!("lattice of {nx}x{ny} points at h = {h}")));
        }
        let coord = |i: usize, j: usize| [ax + (i0 + i as i64) as f64 * h, ay + (j0 + j as i64) as f64 * h];
        let mut inside = vec![false; nx * ny];
        let mut vertices = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let [x, y] = coord(i, j);
                if (self.inside)(x, y) {
                    inside[j * nx + i] = true;
                    vertices.push(Vertex::at((j * nx + i) as VertexId, vec![x, y], self.cell_area(x, y, h)));
                }
            }
        }
        if vertices.is_empty() {
            return Err(Error::input("domain contains no lattice points"));
        }
        let diag = h * std::f64::consts::SQRT_2;
        let mut edges = Vec::with_capacity(4 * vertices.len());
        for j in 0..ny {
            for i in 0..nx {
                let a = j * nx + i;
                if !inside[a] {
                    continue;
                }
                let mut link = |ii: usize, jj: usize, len: f64| {
                    let b = jj * nx + ii;
                    if inside[b] {
                        edges.push(Edge::new(a as VertexId, b as VertexId, len));
                    }
                };
                if i + 1 < nx {
                    link(i + 1, j, h);
                }
                if j + 1 < ny {
                    link(i, j + 1, h);
                    if i + 1 < nx {
                        link(i + 1, j + 1, diag);
                    }
                    if i > 0 {
                        link(i - 1, j + 1, diag);
                    }
                }
            }
        }
        Ok(Mesh { vertices, edges })
    }
}

/// Lattice mesh of a closed rectangle or disc. Vertex measures are the cell
/// areas `h^2` clipped to the domain.
pub fn gen_grid(shape: &Shape, h: f64) -> Result<MetricMeasureGraph> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::input(format!("mesh step must be positive, got {h}")));
    }
    let mesh = match *shape {
        Shape::Rect(r) => {
            r.validate()?;
            Region {
                anchor: [r.x0, r.y0],
                bbox: r,
                inside: |x: f64, y: f64| r.contains([x, y]),
                section: |s: f64| (s >= r.x0 && s <= r.x1).then_some((r.y0, r.y1)),
            }
            .mesh(h)?
        }
        Shape::Disc { center: [cx, cy], radius } => {
            if !(radius.is_finite() && radius > 0.0 && cx.is_finite() && cy.is_finite()) {
                return Err(Error::input(format!("degenerate disc of radius {radius}")));
            }
            let r2 = radius * radius;
            Region {
                anchor: [cx, cy],
                bbox: Rect::new(cx - radius, cy - radius, cx + radius, cy + radius),
                inside: |x: f64, y: f64| (x - cx).powi(2) + (y - cy).powi(2) <= r2 * (1.0 + 1e-12),
                section: |s: f64| {
                    let w2 = r2 - (s - cx).powi(2);
                    (w2 > 0.0).then(|| (cy - w2.sqrt(), cy + w2.sqrt()))
                },
            }
            .mesh(h)?
        }
    };
    MetricMeasureGraph::new(mesh.vertices, mesh.edges)
}

/// Outward cusp domain: the open disc of radius `sqrt(5)` about `(3, 0)`
/// joined to `{(x, y) : 0 < x < 1, |y| < psi(x)}`. The disc passes through
/// `(1, +-1)`, where the cusp meets it. Lattice points strictly inside the
/// domain become vertices; measures are cell areas clipped to the domain, so
/// thin parts of the cusp keep their true (tiny) area.
pub fn gen_cusp(profile: &Profile, h: f64) -> Result<MetricMeasureGraph> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::input(format!("mesh step must be positive, got {h}")));
    }
    profile.validate()?;
    let rad = 5f64.sqrt();
    let ball_half = |s: f64| {
        let w2 = 5.0 - (s - 3.0).powi(2);
        if w2 > 0.0 {
            w2.sqrt()
        } else {
            0.0
        }
    };
    let cusp_half = |s: f64| if s > 0.0 && s < 1.0 { profile.eval(s) } else { 0.0 };
    let mesh = Region {
        anchor: [0.0, 0.0],
        bbox: Rect::new(0.0, -rad, 3.0 + rad, rad),
        inside: |x: f64, y: f64| (x - 3.0).powi(2) + y * y < 5.0 || y.abs() < cusp_half(x),
        section: |s: f64| {
            let w = ball_half(s).max(cusp_half(s));
            (w > 0.0).then_some((-w, w))
        },
    }
    .mesh(h)?;
    MetricMeasureGraph::new(mesh.vertices, mesh.edges)
}

/// A quotient mesh together with the mesh it was collapsed from.
#[derive(Clone, Debug)]
pub struct Collapse {
    pub graph: MetricMeasureGraph,
    pub upstairs: MetricMeasureGraph,
    /// Upstairs vertex id to downstairs vertex id.
    pub map: BTreeMap<VertexId, VertexId>,
    /// Downstairs id of the vertex each continuum collapsed to.
    pub collapsed: Vec<VertexId>,
}

fn polyline_distance(line: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let point = |q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
    if line.len() == 1 {
        return point(line[0]);
    }
    line.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 > 0.0 {
                (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            point([a[0] + t * d[0], a[1] + t * d[1]])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Collapse one polyline `e` (a single point is allowed) inside the lattice
/// mesh of `bbox`.
pub fn gen_collapsed(e: &[[f64; 2]], bbox: Rect, h: f64) -> Result<Collapse> {
    gen_multi_collapse(&[e.to_vec()], bbox, h)
}

/// Lattice mesh of `bbox` in which the vertices closer than `h` to the `k`-th
/// polyline are contracted to one vertex of measure zero and no position.
/// Contracted vertices get ids after every lattice id, in input order. Edges
/// inside a contracted set disappear; parallel edges left by the contraction
/// keep the shorter length.
pub fn gen_multi_collapse(sets: &[Vec<[f64; 2]>], bbox: Rect, h: f64) -> Result<Collapse> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::input(format!("mesh step must be positive, got {h}")));
    }
    bbox.validate()?;
    if sets.is_empty() {
        return Err(Error::input("no continua to collapse"));
    }
    for (k, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::input(format!("continuum {k} is empty")));
        }
        if let Some(p) = set.iter().find(|p| !(p[0].is_finite() && p[1].is_finite() && bbox.contains(**p))) {
            return Err(Error::input(format!("continuum {k} leaves the bounding box at {p:?}")));
        }
    }
    let upstairs = gen_grid(&Shape::Rect(bbox), h)?;
    let base = upstairs.vertices().last().map_or(0, |v| v.id + 1);
    let mut map = BTreeMap::new();
    let mut kept = Vec::new();
    for v in upstairs.vertices() {
        let p = v.pos.as_ref().expect("grid vertices carry positions");
        let hits: Vec<usize> = (0..sets.len())
            .filter(|&k| polyline_distance(&sets[k], [p[0], p[1]]) < h)
            .collect();
        match hits.as_slice() {
            [] => {
                map.insert(v.id, v.id);
                kept.push(v.clone());
            }
            [k] => {
                map.insert(v.id, base + *k as VertexId);
            }
            _ => return Err(Error::input(format!("continua {hits:?} overlap within h at vertex {}", v.id))),
        }
    }
    let collapsed: Vec<VertexId> = (0..sets.len()).map(|k| base + k as VertexId).collect();
    if let Some(k) = collapsed.iter().position(|c| !map.values().any(|v| v == c)) {
        return Err(Error::input(format!("continuum {k} is farther than h from every lattice point")));
    }
    let mut vertices = kept;
    vertices.extend(collapsed.iter().map(|&id| Vertex::new(id, 0.0)));
    let mut merged: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
    for e in upstairs.edges() {
        let (a, b) = (map[&e.a], map[&e.b]);
        if a == b {
            continue;
        }
        let slot = merged.entry((a.min(b), a.max(b))).or_insert(f64::INFINITY);
        *slot = slot.min(e.len);
    }
    let edges = merged.into_iter().map(|((a, b), len)| Edge::new(a, b, len)).collect();
    Ok(Collapse { graph: MetricMeasureGraph::new(vertices, edges)?, upstairs, map, collapsed })
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let d = sub(a, b);
    dot(&d, &d).sqrt()
}

/// Position `a + (b - a) * s / m`.
fn lerp(a: &[f64], b: &[f64], s: usize, m: usize) -> Vec<f64> {
    let t = s as f64 / m as f64;
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

struct ComplexBuilder<'a> {
    spec: &'a ComplexSpec,
    pos: Vec<Vec<f64>>,
    mu: Vec<f64>,
    /// Interior subdivision vertices of each edge `(a, b)`, `a < b`, ordered from `a`.
    edge_points: BTreeMap<(usize, usize), Vec<usize>>,
    edges: BTreeMap<(usize, usize), f64>,
}

impl<'a> ComplexBuilder<'a> {
    fn add_vertex(&mut self, p: Vec<f64>) -> usize {
        self.pos.push(p);
        self.mu.push(0.0);
        self.pos.len() - 1
    }

    fn subdivide(&mut self, a: usize, b: usize, m: usize) {
        let (lo, hi) = (a.min(b), a.max(b));
        if self.edge_points.contains_key(&(lo, hi)) {
            return;
        }
        let (pa, pb) = (self.spec.points[lo].clone(), self.spec.points[hi].clone());
        let ids = (1..m).map(|s| self.add_vertex(lerp(&pa, &pb, s, m))).collect();
        self.edge_points.insert((lo, hi), ids);
    }

    /// Vertex at step `s` of `m` from `a` towards `b` on a subdivided edge.
    fn on_edge(&self, a: usize, b: usize, s: usize, m: usize) -> usize {
        if s == 0 {
            return a;
        }
        if s == m {
            return b;
        }
        if a < b {
            self.edge_points[&(a, b)][s - 1]
        } else {
            self.edge_points[&(b, a)][m - s - 1]
        }
    }

    fn link(&mut self, a: usize, b: usize) {
        let len = dist(&self.pos[a], &self.pos[b]);
        self.edges.insert((a.min(b), a.max(b)), len);
    }
}

/// Subdivides 1-simplices into chains of edges no longer than `h` and
/// 2-simplices into congruent sub-triangles. Each sub-segment hands half its
/// length to both ends, each sub-triangle a third of its area to its corners;
/// atoms add point masses. The complex's points keep their indices as vertex
/// ids, followed by subdivision vertices.
///
/// Triangles sharing an edge must subdivide it equally, which happens when
/// `ceil(longest side / h)` agrees; otherwise the spec is rejected.
pub fn gen_simplicial(spec: &ComplexSpec, h: f64) -> Result<MetricMeasureGraph> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::input(format!("mesh step must be positive, got {h}")));
    }
    let np = spec.points.len();
    if np == 0 {
        return Err(Error::input("complex has no points"));
    }
    let dim = spec.points[0].len();
    if dim == 0 || spec.points.iter().any(|p| p.len() != dim || p.iter().any(|c| !c.is_finite())) {
        return Err(Error::input("complex points need a common positive dimension and finite coordinates"));
    }
    let check = |idx: &[usize], what: &str| -> Result<()> {
        if let Some(&i) = idx.iter().find(|&&i| i >= np) {
            return Err(Error::input(format!("{what} references missing point {i}")));
        }
        let set: BTreeSet<_> = idx.iter().collect();
        if set.len() != idx.len() {
            return Err(Error::input(format!("{what} {idx:?} repeats a point")));
        }
        Ok(())
    };
    let steps = |len: f64| -> Result<usize> {
        let m = (len / h - LATTICE_EPS).ceil().max(1.0);
        if m > 1e7 {
            return Err(Error::Size(format!("simplex of length {len} needs {m} subdivisions")));
        }
        Ok(m as usize)
    };

    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut tri_steps = Vec::new();
    for t in &spec.triangles {
        check(t, "triangle")?;
        let [p, q, r] = t.map(|i| spec.points[i].as_slice());
        let (u, v) = (sub(q, p), sub(r, p));
        let area = 0.5 * (dot(&u, &u) * dot(&v, &v) - dot(&u, &v).powi(2)).max(0.0).sqrt();
        let longest = dist(p, q).max(dist(q, r)).max(dist(p, r));
        if !(area > 1e-12 * longest * longest) {
            return Err(Error::input(format!("triangle {t:?} is degenerate")));
        }
        let m = steps(longest)?;
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])] {
            let prev = *counts.entry((a.min(b), a.max(b))).or_insert(m);
            if prev != m {
                return Err(Error::input(format!(
                    "triangles sharing edge {a}-{b} subdivide it into {prev} and {m} parts"
                )));
            }
        }
        tri_steps.push((m, area));
    }
    for s in &spec.segments {
        check(s, "segment")?;
        let len = dist(&spec.points[s[0]], &spec.points[s[1]]);
        if !(len > 0.0) {
            return Err(Error::input(format!("segment {s:?} has zero length")));
        }
        let m = steps(len)?;
        counts.entry((s[0].min(s[1]), s[0].max(s[1]))).or_insert(m);
    }
    for a in &spec.atoms {
        if a.point >= np || !(a.mass.is_finite() && a.mass >= 0.0) {
            return Err(Error::input(format!("invalid atom {a:?}")));
        }
    }

    let mut b = ComplexBuilder {
        spec,
        pos: spec.points.clone(),
        mu: vec![0.0; np],
        edge_points: BTreeMap::new(),
        edges: BTreeMap::new(),
    };
    for (&(lo, hi), &m) in &counts {
        b.subdivide(lo, hi, m);
    }
    let segment_edges: BTreeSet<(usize, usize)> = spec.segments.iter().map(|s| (s[0].min(s[1]), s[0].max(s[1]))).collect();
    let triangle_edges: BTreeSet<(usize, usize)> = spec
        .triangles
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])])
        .map(|(a, c)| (a.min(c), a.max(c)))
        .collect();
    for &(lo, hi) in segment_edges.difference(&triangle_edges) {
        let m = counts[&(lo, hi)];
        for s in 0..m {
            let (x, y) = (b.on_edge(lo, hi, s, m), b.on_edge(lo, hi, s + 1, m));
            b.link(x, y);
            let half = 0.5 * dist(&b.pos[x], &b.pos[y]);
            b.mu[x] += half;
            b.mu[y] += half;
        }
    }
    for (t, &(m, area)) in spec.triangles.iter().zip(&tri_steps) {
        let [p, q, r] = *t;
        // lattice point (i, j) = p + (q - p) i/m + (r - p) j/m
        let mut grid = vec![vec![usize::MAX; m + 1]; m + 1];
        for i in 0..=m {
            for j in 0..=m - i {
                grid[i][j] = if j == 0 {
                    b.on_edge(p, q, i, m)
                } else if i == 0 {
                    b.on_edge(p, r, j, m)
                } else if i + j == m {
                    b.on_edge(q, r, j, m)
                } else {
                    let (pp, pq, pr) = (&spec.points[p], &spec.points[q], &spec.points[r]);
                    let pos = (0..dim)
                        .map(|c| pp[c] + (pq[c] - pp[c]) * i as f64 / m as f64 + (pr[c] - pp[c]) * j as f64 / m as f64)
                        .collect();
                    b.add_vertex(pos)
                };
            }
        }
        let share = area / (m * m) as f64 / 3.0;
        for i in 0..m {
            for j in 0..m - i {
                let mut tris = vec![[grid[i][j], grid[i + 1][j], grid[i][j + 1]]];
                if i + j + 1 < m {
                    tris.push([grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
                }
                for [x, y, z] in tris {
                    for v in [x, y, z] {
                        b.mu[v] += share;
                    }
                    b.link(x, y);
                    b.link(y, z);
                    b.link(x, z);
                }
            }
        }
    }
    for a in &spec.atoms {
        b.mu[a.point] += a.mass;
    }
    let vertices = b
        .pos
        .into_iter()
        .zip(b.mu)
        .enumerate()
        .map(|(i, (p, mu))| Vertex::at(i as VertexId, p, mu))
        .collect();
    let edges = b.edges.into_iter().map(|((x, y), len)| Edge::new(x as VertexId, y as VertexId, len)).collect();
    MetricMeasureGraph::new(vertices, edges)
}

/// Whether cell `(i, j)` of the `3^level` grid survives in the carpet.
fn carpet_keeps(mut i: usize, mut j: usize, level: u32) -> bool {
    for _ in 0..level {
        if i % 3 == 1 && j % 3 == 1 {
            return false;
        }
        i /= 3;
        j /= 3;
    }
    true
}

/// Level-`level` Sierpinski carpet approximation: one vertex per retained
/// cell of side `3^-level` at the cell center, measure `8^-level`, and edges
/// between side-adjacent retained cells. The graph itself is connected and
/// thick; `NegligibleMode::All` zeroes every edge measure to emulate the
/// continuum carpet, where every nontrivial curve family is negligible.
pub fn gen_carpet(level: u32, mode: &NegligibleMode) -> Result<MetricMeasureGraph> {
    if level > MAX_CARPET_LEVEL {
        return Err(Error::Size(format!("carpet level {level} exceeds {MAX_CARPET_LEVEL}")));
    }
    let n = 3usize.pow(level);
    let side = 1.0 / n as f64;
    let mu = 8f64.powi(-(level as i32));
    let id = |i: usize, j: usize| (j * n + i) as VertexId;
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if !carpet_keeps(i, j, level) {
                continue;
            }
            vertices.push(Vertex::at(id(i, j), vec![(i as f64 + 0.5) * side, (j as f64 + 0.5) * side], mu));
            if i + 1 < n && carpet_keeps(i + 1, j, level) {
                edges.push(Edge::new(id(i, j), id(i + 1, j), side));
            }
            if j + 1 < n && carpet_keeps(i, j + 1, level) {
                edges.push(Edge::new(id(i, j), id(i, j + 1), side));
            }
        }
    }
    apply_negligible(&MetricMeasureGraph::new(vertices, edges)?, mode)
}

/// Vertex whose position is closest to `p` (smallest id on ties); `None`
/// when no vertex has a position.
pub fn nearest_vertex(g: &MetricMeasureGraph, p: &[f64]) -> Option<VertexId> {
    g.vertices()
        .iter()
        .filter_map(|v| v.pos.as_ref().map(|q| (dist(q, p), v.id)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Two unit segments meeting at a right angle at the origin, subdivided at
/// step `h`: vertex 0 is `(1, 0)`, vertex 1 the corner, vertex 2 is `(0, 1)`.
pub fn l_complex(h: f64) -> Result<MetricMeasureGraph> {
    gen_simplicial(
        &ComplexSpec {
            points: vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]],
            segments: vec![[0, 1], [1, 2]],
            ..ComplexSpec::default()
        },
        h,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{all_edges, components, distances_from};

    #[test]
    fn unit_square_counts() {
        let g = gen_grid(&Shape::Rect(Rect::new(0.0, 0.0, 2.0, 2.0)), 1.0).unwrap();
        assert_eq!(g.vertex_count(), 9);
        // 12 axis edges plus 2 diagonals per cell
        assert_eq!(g.edge_count(), 12 + 8);
        assert!((g.total_measure() - 4.0).abs() < 1e-12);
        let d = distances_from(&g, 0, all_edges);
        assert!((d[8] - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn disc_area_converges() {
        let g = gen_grid(&Shape::Disc { center: [0.0, 0.0], radius: 1.0 }, 1.0 / 32.0).unwrap();
        // cells of lattice points just outside the circle are lost: O(perimeter * h)
        let h = 1.0 / 32.0;
        assert!((g.total_measure() - std::f64::consts::PI).abs() < 2.0 * std::f64::consts::PI * h);
        assert!(gen_grid(&Shape::Disc { center: [0.0, 0.0], radius: 0.0 }, 0.1).is_err());
        assert!(gen_grid(&Shape::Rect(Rect::new(0.0, 0.0, 0.0, 1.0)), 0.1).is_err());
    }

    #[test]
    fn profiles_validate() {
        assert!(Profile::Power { exponent: 0.0 }.validate().is_err());
        let bad = Profile::Samples { t: vec![0.5, 1.0], psi: vec![0.0, 1.0] };
        assert!(bad.validate().is_err());
        let dec = Profile::Samples { t: vec![0.5, 1.0], psi: vec![1.5, 1.0] };
        assert!(dec.validate().is_err());
        let ok = Profile::Samples { t: vec![0.5, 1.0], psi: vec![0.25, 1.0] };
        ok.validate().unwrap();
        assert_eq!(ok.eval(0.5), 0.25);
        assert_eq!(ok.eval(0.50001), 1.0);
        assert_eq!(Profile::ExpInv.eval(1.0), 1.0);
    }

    #[test]
    fn cusp_is_connected() {
        let g = gen_cusp(&Profile::Power { exponent: 2.0 }, 1.0 / 16.0).unwrap();
        assert_eq!(components(&g, all_edges).len(), 1);
        let area = 5.0 * std::f64::consts::PI + 2.0 / 3.0;
        // cusp and disc overlap for x in (3 - sqrt 5, 1)
        assert!(g.total_measure() < area && g.total_measure() > 5.0 * std::f64::consts::PI);
    }

    #[test]
    fn carpet_level_one() {
        let g = gen_carpet(1, &NegligibleMode::None).unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert_eq!(g.edge_count(), 8);
        assert!((g.total_measure() - 1.0).abs() < 1e-12);
        assert_eq!(gen_carpet(3, &NegligibleMode::None).unwrap().vertex_count(), 512);
        assert!(matches!(gen_carpet(7, &NegligibleMode::None), Err(Error::Size(_))));
        let z = gen_carpet(2, &NegligibleMode::All).unwrap();
        assert!(z.edges().iter().all(|e| e.mu_edge == 0.0));
    }

    #[test]
    fn l_complex_layout() {
        let g = l_complex(1.0 / 64.0).unwrap();
        assert_eq!(g.vertex_count(), 129);
        assert_eq!(g.edge_count(), 128);
        assert!((g.total_measure() - 2.0).abs() < 1e-12);
        let d = distances_from(&g, 0, all_edges);
        assert!((d[2] - 2.0).abs() < 1e-12);
        assert!((d[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_with_pendant_segment() {
        let spec = ComplexSpec {
            points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]],
            segments: vec![[0, 3]],
            triangles: vec![[0, 1, 2]],
            atoms: vec![Atom { point: 0, mass: 1.0 }],
        };
        let g = gen_simplicial(&spec, 0.25).unwrap();
        // area 1/2, length 1, atom 1
        assert!((g.total_measure() - 2.5).abs() < 1e-12);
        assert_eq!(components(&g, all_edges).len(), 1);
        let bad = ComplexSpec { segments: vec![[0, 9]], ..spec.clone() };
        assert!(gen_simplicial(&bad, 0.25).is_err());
    }

    #[test]
    fn collapse_contracts_segment() {
        let c = gen_collapsed(&[[0.5, 0.25], [0.5, 0.75]], Rect::new(0.0, 0.0, 1.0, 1.0), 0.125).unwrap();
        let star = c.collapsed[0];
        let g = &c.graph;
        let si = g.index_of(star).unwrap();
        assert_eq!(g.mu(si), 0.0);
        assert!(g.pos(si).is_none());
        assert!(c.map.values().filter(|&&v| v == star).count() >= 5);
        assert!(gen_collapsed(&[[2.0, 0.0]], Rect::new(0.0, 0.0, 1.0, 1.0), 0.1).is_err());
        let overlap = vec![vec![[0.5, 0.5]], vec![[0.55, 0.5]]];
        assert!(gen_multi_collapse(&overlap, Rect::new(0.0, 0.0, 1.0, 1.0), 0.125).is_err());
    }

    #[test]
    fn mesh_spec_round_trip() {
        let json = r#"{"h": 0.5, "domain": {"kind": "grid", "shape": {"type": "rect", "x0": 0, "y0": 0, "x1": 1, "y1": 1}},
                       "negligible_mode": {"mode": "edges", "pairs": [[0, 1]]}}"#;
        let spec = MeshSpec::from_json(json.as_bytes()).unwrap();
        let g = spec.generate().unwrap();
        assert_eq!(g.vertex_count(), 9);
        assert_eq!(g.edges().iter().filter(|e| e.is_negligible()).count(), 1);
        let back: MeshSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(MeshSpec::from_json(br#"{"domain": {"kind": "cusp", "profile": {"type": "exp_inv"}}}"#).is_err());
        assert!(MeshSpec::from_json(br#"{"domain": {"kind": "carpet", "level": 2}}"#).is_ok());
    }
}
