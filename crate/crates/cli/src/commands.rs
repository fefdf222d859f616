use std::fs;
use std::io::Write;
use std::path::Path;

use metricgraph::amle::{solve_amle_with, AmleProblem, Initialization, SolverOptions};
use metricgraph::analysis::{
    doubling_ratios, poincare_constant, quasiconvexity_constant_with, BallMetric, PoincareOptions,
    QuasiconvexityOptions, RadiusSampling,
};
use metricgraph::extension::{mcshane_extend, truncate_extend, whitney_cover, whitney_extend, ScalarExtension, WhitneyParams};
use metricgraph::field::{GradientField, VectorNorm};
use metricgraph::io::{
    parse_boundary_csv, parse_graph, parse_mesh_spec, parse_scalar_field_csv, parse_vector_field_csv, rows_csv,
    scalar_field_csv,
};
use metricgraph::metric::edge_lipschitz;
use metricgraph::paths::{all_edges, components, distances_from, positive_edges, shortest_path};
use metricgraph::report::{csv_float, ext_float, LENGTH_TOL, SCHEMA_VERSION};
use metricgraph::{Euclidean, MetricChoice, MetricMeasureGraph, VertexId};
use serde::Serialize;

use crate::{BallMetricArg, Command, Failure, GenKind, InitArg, Output, RadiiArg};

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    command: &'a str,
    seed: Option<u64>,
    result: T,
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<MetricMeasureGraph, Failure> {
    parse_graph(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Input(format!("stdout: {e}"))),
    }
}

fn emit<T: Serialize>(output: &Output, command: &str, seed: Option<u64>, result: T, csv: Option<String>) -> Result<(), Failure> {
    let env = Envelope { schema_version: SCHEMA_VERSION, command, seed, result };
    let mut json = serde_json::to_string_pretty(&env).map_err(|e| Failure::Input(e.to_string()))?;
    json.push('\n');
    write_text(output.out.as_deref(), &json)?;
    if let (Some(path), Some(text)) = (&output.csv, csv) {
        write_text(Some(path), &text)?;
    }
    Ok(())
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen { kind, config, out } => gen(kind, &config, out.as_deref()),
        Command::Dist { graph, from, to, metric, output } => dist("dist", &graph, from, to, metric.into(), &output),
        Command::Essdist { graph, from, to, output } => dist("essdist", &graph, from, to, MetricChoice::Essential, &output),
        Command::Qc { graph, r, metric, samples, seed, output } => {
            let g = load_graph(&graph)?;
            let ambient = Euclidean::new(&g)?;
            let opts = QuasiconvexityOptions { samples, seed, ..QuasiconvexityOptions::default() };
            let rep = quasiconvexity_constant_with(&g, &ambient, r, metric.into(), opts)?;
            let csv = rows_csv(&[QcRow {
                c: rep.c,
                r: rep.r,
                x: rep.worst_pair.map(|p| p.0),
                y: rep.worst_pair.map(|p| p.1),
                exhaustive: rep.exhaustive,
                samples: rep.samples,
            }])?;
            emit(&output, "qc", Some(seed), rep, Some(csv))
        }
        Command::Doubling { graph, centers, scales, output } => {
            let g = load_graph(&graph)?;
            let centers = if centers.is_empty() { g.vertices().iter().map(|v| v.id).collect() } else { centers };
            let rep = doubling_ratios(&g, &centers, &scales)?;
            let csv = rows_csv(&rep.rows)?;
            emit(&output, "doubling", None, rep, Some(csv))
        }
        Command::PiCheck { graph, u, rho, lambda, r, ball_metric, radii, output } => {
            let g = load_graph(&graph)?;
            let u = parse_scalar_field_csv(&read(&u)?, &g)?;
            let rho = GradientField::new(parse_scalar_field_csv(&read(&rho)?, &g)?.values)?;
            let opts = PoincareOptions {
                radii: match radii {
                    RadiiArg::Dyadic => RadiusSampling::default(),
                    RadiiArg::All => RadiusSampling::AllDistances,
                },
                ball_metric: match ball_metric {
                    BallMetricArg::Graph => BallMetric::Graph,
                    BallMetricArg::Essential => BallMetric::Essential,
                    BallMetricArg::Euclidean => BallMetric::Euclidean,
                },
            };
            let rep = poincare_constant(&g, &u, &rho, lambda, r, opts)?;
            let csv = rows_csv(&rep.rows)?;
            emit(&output, "pi-check", None, rep, Some(csv))
        }
        Command::Extend { graph, data, metric, truncate, certify, output } => {
            extend(&graph, &data, metric.into(), truncate, certify, &output)
        }
        Command::Whitney { graph, data, alpha, beta, certify, output } => whitney(&graph, &data, alpha, beta, certify, &output),
        Command::Amle { graph, boundary, metric, tol, max_iter, init, output } => {
            let g = load_graph(&graph)?;
            let data = parse_boundary_csv(&read(&boundary)?)?;
            let problem = AmleProblem::new(g, data, metric.into())?;
            let init = match init {
                InitArg::Mcshane => Initialization::McShane,
                InitArg::Min => Initialization::MinFill,
                InitArg::Max => Initialization::MaxFill,
            };
            let sol = solve_amle_with(&problem, &SolverOptions { tol, max_iter, init, ..SolverOptions::default() })?;
            let csv = scalar_field_csv(&problem.graph, &sol.u.values);
            let (converged, residual, iterations) = (sol.converged, sol.residual, sol.iterations);
            emit(&output, "amle", None, sol, Some(csv))?;
            if !converged {
                return Err(Failure::NonConvergence(format!(
                    "residual {residual:e} above tolerance {tol:e} after {iterations} iterations"
                )));
            }
            Ok(())
        }
        Command::Audit { graph, seed, output } => audit(&graph, seed, &output),
    }
}

#[derive(Serialize)]
struct QcRow {
    #[serde(with = "ext_float")]
    c: f64,
    #[serde(with = "ext_float")]
    r: f64,
    x: Option<VertexId>,
    y: Option<VertexId>,
    exhaustive: bool,
    samples: u64,
}

fn gen(kind: GenKind, config: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let spec = parse_mesh_spec(&read(config)?).map_err(|e| Failure::Input(format!("{}: {e}", config.display())))?;
    let wanted = match kind {
        GenKind::Grid => "grid",
        GenKind::Cusp => "cusp",
        GenKind::Collapsed => "collapsed",
        GenKind::Simplicial => "simplicial",
        GenKind::Carpet => "carpet",
    };
    if spec.domain.kind() != wanted {
        return Err(Failure::Input(format!("config describes a {} domain, not {wanted}", spec.domain.kind())));
    }
    let mut json = spec.generate()?.to_json()?;
    json.push('\n');
    write_text(out, &json)
}

#[derive(Serialize)]
struct DistanceRow {
    id: VertexId,
    #[serde(with = "ext_float")]
    distance: f64,
}

#[derive(Serialize)]
struct DistanceReport {
    source: VertexId,
    metric: MetricChoice,
    distances: Vec<DistanceRow>,
}

fn dist(command: &str, graph: &Path, from: VertexId, to: Option<VertexId>, metric: MetricChoice, output: &Output) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let keep = metric.edge_filter();
    match to {
        Some(to) => {
            let path = shortest_path(&g, from, to, keep)?;
            let csv = format!(
                "position,id\n{}",
                path.vertex_sequence.iter().enumerate().map(|(k, id)| format!("{k},{id}\n")).collect::<String>()
            );
            emit(output, command, None, path, Some(csv))
        }
        None => {
            let src = g.index_of(from)?;
            let d = distances_from(&g, src, keep);
            let rows: Vec<DistanceRow> = d.iter().enumerate().map(|(i, &distance)| DistanceRow { id: g.id(i), distance }).collect();
            let csv = rows_csv(&rows)?;
            emit(output, command, None, DistanceReport { source: from, metric, distances: rows }, Some(csv))
        }
    }
}

#[derive(Serialize)]
struct ExtendReport {
    extension: ScalarExtension,
    truncated: bool,
    /// Lipschitz constant of the extension in the chosen path metric.
    lipschitz_extension: f64,
    sup_data: f64,
    sup_extension: f64,
    certified: Option<bool>,
}

fn extend(graph: &Path, data: &Path, metric: MetricChoice, truncate: bool, certify: bool, output: &Output) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let u = parse_boundary_csv(&read(data)?)?;
    let ext = if truncate { truncate_extend(&g, &u, metric)? } else { mcshane_extend(&g, &u, metric)? };
    let lipschitz_extension = edge_lipschitz(&g, &ext.field.values, metric.edge_filter());
    let sup_data = u.values().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup_extension = ext.field.sup_norm();
    let lip_ok = lipschitz_extension <= ext.lipschitz * (1.0 + 1e-12) + LENGTH_TOL;
    let sup_ok = !truncate || sup_extension <= sup_data;
    let certified = certify.then_some(lip_ok && sup_ok);
    let csv = scalar_field_csv(&g, &ext.field.values);
    let lip_data = ext.lipschitz;
    emit(
        output,
        "extend",
        None,
        ExtendReport { extension: ext, truncated: truncate, lipschitz_extension, sup_data, sup_extension, certified },
        Some(csv),
    )?;
    if certified == Some(false) {
        return Err(Failure::Certification(format!(
            "extension Lipschitz {lipschitz_extension} vs data {lip_data}, sup {sup_extension} vs {sup_data}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct WhitneyReport {
    cover: metricgraph::extension::WhitneyData,
    extension: metricgraph::extension::WhitneyExtension,
    certified: Option<bool>,
}

fn whitney(graph: &Path, data: &Path, alpha: f64, beta: f64, certify: bool, output: &Output) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let f = parse_vector_field_csv(&read(data)?, &g, VectorNorm::Max)?;
    let omega: Vec<VertexId> = f.values.iter().enumerate().filter(|(_, v)| v.is_some()).map(|(i, _)| g.id(i)).collect();
    let cover = whitney_cover(&g, &omega, WhitneyParams { alpha, beta, multiplicity_bound: None })?;
    let ext = whitney_extend(&g, &f, &cover)?;
    let bound_ok = ext.sup_extension <= ext.multiplicity_bound as f64 * ext.sup_data * (1.0 + 1e-12);
    let certified = certify.then(|| bound_ok && cover.violations(&g).is_empty());
    let mut csv = String::from("id");
    for k in 0..f.dim {
        csv.push_str(&format!(",c{k}"));
    }
    csv.push('\n');
    for (i, v) in ext.field.values.iter().enumerate() {
        if let Some(v) = v {
            csv.push_str(&g.id(i).to_string());
            for x in v {
                csv.push(',');
                csv.push_str(&csv_float(*x));
            }
            csv.push('\n');
        }
    }
    let (sup_e, sup_d, bound) = (ext.sup_extension, ext.sup_data, ext.multiplicity_bound);
    emit(output, "whitney", None, WhitneyReport { cover, extension: ext, certified }, Some(csv))?;
    if certified == Some(false) {
        return Err(Failure::Certification(format!("sup {sup_e} exceeds {bound} * {sup_d}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    /// `pass`, `fail` or `info`.
    status: &'static str,
    detail: String,
}

#[derive(Serialize)]
struct AuditReport {
    vertices: usize,
    edges: usize,
    negligible_edges: usize,
    checks: Vec<Check>,
}

/// Sources for sampled distance checks: up to 64 evenly spaced indices.
fn audit_sources(n: usize) -> Vec<usize> {
    let step = n.div_ceil(64).max(1);
    (0..n).step_by(step).collect()
}

fn audit(graph: &Path, seed: u64, output: &Output) -> Result<(), Failure> {
    let g = load_graph(graph)?;
    let n = g.vertex_count();
    let mut checks = Vec::new();
    let mut push = |name, ok: Option<bool>, detail: String| {
        let status = match ok {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "info",
        };
        checks.push(Check { name, status, detail });
    };
    let negligible = g.edges().iter().filter(|e| e.is_negligible()).count();
    push("graph_valid", Some(true), format!("{n} vertices, {} edges, {negligible} zero-measure edges", g.edge_count()));
    push(
        "measure",
        None,
        format!(
            "total {}, {} zero-measure vertices",
            g.total_measure(),
            g.vertices().iter().filter(|v| v.mu == 0.0).count()
        ),
    );
    let parts = components(&g, all_edges).len();
    let ess_parts = components(&g, positive_edges).len();
    push("components", None, format!("{parts} in the graph metric, {ess_parts} in the essential metric"));

    let sources = audit_sources(n);
    let rows: Vec<(usize, Vec<f64>, Vec<f64>)> = sources
        .iter()
        .map(|&s| (s, distances_from(&g, s, all_edges), distances_from(&g, s, positive_edges)))
        .collect();
    let (mut asym, mut triangle, mut order) = (0usize, 0usize, 0usize);
    let zstep = n.div_ceil(1024).max(1);
    for (a, (sa, da, ea)) in rows.iter().enumerate() {
        for (sb, db, _) in &rows[a + 1..] {
            let (x, y) = (da[*sb], db[*sa]);
            if !(x == y || (x - y).abs() <= LENGTH_TOL) {
                asym += 1;
            }
            for z in (0..n).step_by(zstep) {
                if da[z] > da[*sb] + db[z] + LENGTH_TOL {
                    triangle += 1;
                }
            }
        }
        order += (0..n).filter(|&z| da[z] > ea[z] + LENGTH_TOL).count();
    }
    push("distance_symmetry", Some(asym == 0), format!("{asym} asymmetric pairs among {} sources", sources.len()));
    push("triangle_inequality", Some(triangle == 0), format!("{triangle} violations"));
    push("essential_dominates_graph", Some(order == 0), format!("{order} pairs with d > d_hat"));

    if n >= 2 && g.embedding_dim().is_some() {
        let ambient = Euclidean::new(&g)?;
        let opts = QuasiconvexityOptions { samples: 4096, seed, ..QuasiconvexityOptions::default() };
        for (name, metric) in [("quasiconvexity", MetricChoice::Graph), ("essential_quasiconvexity", MetricChoice::Essential)] {
            match quasiconvexity_constant_with(&g, &ambient, f64::INFINITY, metric, opts) {
                Ok(rep) => push(
                    name,
                    None,
                    format!(
                        "C = {}{}",
                        csv_float(rep.c),
                        if rep.lower_bound { " (sampled lower bound)" } else { "" }
                    ),
                ),
                Err(e) => push(name, None, format!("skipped: {e}")),
            }
        }
    }
    if g.edge_count() > 0 {
        let mut lens: Vec<f64> = g.edges().iter().map(|e| e.len).collect();
        lens.sort_by(f64::total_cmp);
        let typical = lens[lens.len() / 2];
        let centers: Vec<VertexId> = sources.iter().map(|&i| g.id(i)).collect();
        let scales = [2.0 * typical, 4.0 * typical, 8.0 * typical];
        let rep = doubling_ratios(&g, &centers, &scales)?;
        push(
            "doubling",
            None,
            format!("max ratio {} at scales {scales:?} over {} centers", csv_float(rep.max_ratio()), centers.len()),
        );
    }

    let failed: Vec<&str> = checks.iter().filter(|c| c.status == "fail").map(|c| c.name).collect();
    let csv = rows_csv(&checks)?;
    emit(
        output,
        "audit",
        Some(seed),
        AuditReport { vertices: n, edges: g.edge_count(), negligible_edges: negligible, checks },
        Some(csv),
    )?;
    if !failed.is_empty() {
        return Err(Failure::Certification(format!("audit failed: {}", failed.join(", "))));
    }
    Ok(())
}
