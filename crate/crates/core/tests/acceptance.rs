//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so the lines always print.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use metricgraph::amle::{
    check_amle_local, comparison_check, infinity_harmonic_extend, solve_amle_with, AmleProblem, Initialization,
    SolverOptions,
};
use metricgraph::analysis::{
    c0_constant, doubling_ratios, essential_distances, poincare_constant, quasiconvexity_constant,
    quasiconvexity_constant_with, BallMetric, PoincareOptions, QuasiconvexityOptions,
};
use metricgraph::extension::{nagata_cover, truncate_extend, whitney_cover, whitney_extend, WhitneyParams};
use metricgraph::field::{GradientField, PartialField, ScalarField, VectorField, VectorNorm};
use metricgraph::graph::MetricMeasureGraph;
use metricgraph::metric::{edge_lipschitz, lipschitz_constant, lipschitz_constant_on};
use metricgraph::paths::{all_edges, positive_edges};
use metricgraph::spaces::{
    apply_negligible, gen_carpet, gen_collapsed, gen_cusp, gen_grid, gen_simplicial, l_complex, nearest_vertex,
    ComplexSpec, NegligibleMode, Profile, Rect, Shape,
};
use metricgraph::{DistanceMatrix, Error, Euclidean, Metric, MetricChoice};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mcshane_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_lip, mut worst_sup) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = rng.gen_range(2..=200);
        let g = common::random_graph(&mut rng, n, n / 2);
        let k = rng.gen_range(1..=n);
        let omega = common::random_subset(&mut rng, n, k);
        let u: PartialField = omega.iter().map(|&i| (g.id(i), rng.gen_range(-5.0..5.0))).collect();
        let ext = truncate_extend(&g, &u, MetricChoice::Graph).map_err(|e| e.to_string())?;
        let d = DistanceMatrix::all_pairs(&g, all_edges);
        let lip_ext = lipschitz_constant(&g, &ext.field, &d).map_err(|e| e.to_string())?;
        let dense: Vec<f64> = ext.field.values.clone();
        let lip_data = lipschitz_constant_on(&omega, &dense, &d);
        worst_lip = worst_lip.max((lip_ext - lip_data).abs());
        let sup_data = u.values().fold(0.0f64, |m, v| m.max(v.abs()));
        worst_sup = worst_sup.max((ext.field.sup_norm() - sup_data).abs());
    }
    check(
        worst_lip <= 1e-9 && worst_sup == 0.0,
        format!("50 graphs: max |lip(Eu) - lip(u)| = {worst_lip:.3e}, max |sup diff| = {worst_sup:e}"),
    )
}

fn grid_with_hole(side: f64, hole: Rect) -> (MetricMeasureGraph, Vec<u64>) {
    let g = gen_grid(&Shape::Rect(Rect::new(0.0, 0.0, side, side)), 1.0).unwrap();
    let omega = g
        .vertices()
        .iter()
        .filter(|v| {
            let p = v.pos.as_ref().unwrap();
            p[0] >= hole.x0 && p[0] <= hole.x1 && p[1] >= hole.y0 && p[1] <= hole.y1
        })
        .map(|v| v.id)
        .collect();
    (g, omega)
}

fn whitney_partition() -> Outcome {
    let corpus = [
        (15.0, Rect::new(6.0, 6.0, 9.0, 9.0)),
        (20.0, Rect::new(2.0, 3.0, 6.0, 8.0)),
        (24.0, Rect::new(10.0, 10.0, 11.0, 11.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut notes = Vec::new();
    let mut fields = 0;
    for (side, hole) in corpus {
        let (g, omega) = grid_with_hole(side, hole);
        let cover = whitney_cover(&g, &omega, WhitneyParams::default()).map_err(|e| e.to_string())?;
        let inside: BTreeSet<usize> = cover.omega_indices().iter().copied().collect();
        let exterior: Vec<usize> = (0..g.vertex_count()).filter(|i| !inside.contains(i)).collect();
        let mut worst_sum = 0.0f64;
        let mut counts = (usize::MAX, 0usize);
        for &x in &exterior {
            let s: f64 = cover.normalized(x).iter().map(|&(_, w)| w).sum();
            worst_sum = worst_sum.max((s - 1.0).abs());
            counts = (counts.0.min(cover.sigma[x].len()), counts.1.max(cover.sigma[x].len()));
        }
        // n from Nagata covers of the exterior at the annulus scales
        let d = DistanceMatrix::all_pairs(&g, all_edges);
        let ext_ids: Vec<u64> = exterior.iter().map(|&i| g.id(i)).collect();
        let scales: BTreeSet<u64> =
            cover.blocks.iter().map(|b| (b.distance_to_omega.log2().floor() as i64 + 1000) as u64).collect();
        let mut n = 0;
        for k in scales {
            let s = 2f64.powi(k as i32 - 1000);
            n = n.max(nagata_cover(&g, &ext_ids, &d, s, usize::MAX - 1).map_err(|e| e.to_string())?.n);
        }
        let violations = cover.violations(&g);
        if worst_sum > 1e-12 || counts.0 < 1 || counts.1 > n + 1 || !violations.is_empty() {
            return Err(format!(
                "side {side}: |sum - 1| = {worst_sum:e}, |I_x| in [{}, {}], n = {n}, violations {:?}",
                counts.0,
                counts.1,
                violations.first()
            ));
        }
        for _ in 0..7 {
            let dim = rng.gen_range(1..=4);
            let data: BTreeMap<u64, Vec<f64>> =
                omega.iter().map(|&id| (id, (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect())).collect();
            let f = VectorField::from_partial(&g, dim, VectorNorm::Euclidean, &data).map_err(|e| e.to_string())?;
            let ext = whitney_extend(&g, &f, &cover).map_err(|e| e.to_string())?;
            if !(ext.sup_extension <= (n + 1) as f64 * ext.sup_data) {
                return Err(format!("sup {} > (n+1) * {}", ext.sup_extension, ext.sup_data));
            }
            fields += 1;
        }
        notes.push(format!("side {side}: |I_x| <= {} <= n+1 = {}", counts.1, n + 1));
    }
    Ok(format!("{}; {fields} vector fields within (n+1)|f|", notes.join(", ")))
}

fn amle_exactness() -> Outcome {
    use metricgraph::graph::{Edge, Vertex};
    let path = MetricMeasureGraph::new(
        (0..11).map(|i| Vertex::new(i, 1.0)).collect(),
        (0..10).map(|i| Edge::new(i, i + 1, 1.0)).collect(),
    )
    .unwrap();
    let p = AmleProblem::new(path, PartialField::from([(0, 0.0), (10, 1.0)]), MetricChoice::Graph).unwrap();
    let s = solve_amle_with(&p, &SolverOptions { tol: 1e-12, ..Default::default() }).map_err(|e| e.to_string())?;
    let path_err = (0..11).map(|k| (s.u.values[k] - k as f64 / 10.0).abs()).fold(0.0, f64::max);

    let star = MetricMeasureGraph::new(
        (0..4).map(|i| Vertex::new(i, 1.0)).collect(),
        (1..4).map(|i| Edge::new(0, i, 1.0)).collect(),
    )
    .unwrap();
    let leaves = [0.0, 0.0, 1.0];
    let p = AmleProblem::new(
        star,
        (1..4).map(|i| (i as u64, leaves[i - 1])).collect(),
        MetricChoice::Graph,
    )
    .unwrap();
    let s = solve_amle_with(&p, &SolverOptions::default()).map_err(|e| e.to_string())?;
    // brute force: minimize the largest incident slope over a 1e-4 grid
    let best = (0..=10_000)
        .map(|k| k as f64 * 1e-4)
        .map(|c| (leaves.iter().map(|g| (c - g).abs()).fold(0.0, f64::max), c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
        .1;
    let star_err = (s.u.values[0] - best).abs();
    check(
        path_err <= 1e-8 && star_err <= 1e-4,
        format!("path max error {path_err:.2e}; star center {} vs oracle {best}", s.u.values[0]),
    )
}

fn l_complex_pipeline() -> Outcome {
    let g = l_complex(1.0 / 64.0).map_err(|e| e.to_string())?;
    let omega: Vec<u64> = g.vertices().iter().map(|v| v.id).filter(|&id| id != 0 && id != 2).collect();
    let s = infinity_harmonic_extend(&g, &omega, &PartialField::from([(0, 0.0), (2, 1.0)]), 1e-10, 1_000_000)
        .map_err(|e| e.to_string())?;
    let corner = s.u.values[g.index_of(1).unwrap()];
    let lip = edge_lipschitz(&g, &s.u.values, all_edges);
    check(
        s.converged && (corner - 0.5).abs() <= 1e-3 && (lip - 0.5).abs() <= 0.02 * 0.5,
        format!("corner {corner}, Lipschitz {lip}, {} iterations", s.iterations),
    )
}

fn essential_vs_oracle() -> Outcome {
    let c = gen_collapsed(&[[0.5, 0.25], [0.5, 0.75]], Rect::new(0.0, 0.0, 1.0, 1.0), 1.0 / 16.0)
        .map_err(|e| e.to_string())?;
    let star = c.graph.index_of(c.collapsed[0]).unwrap();
    let nb = c.graph.neighbors(star).next().unwrap().vertex;
    let pair = [c.graph.id(star), c.graph.id(nb)];
    let g = apply_negligible(&c.graph, &NegligibleMode::Edges { pairs: vec![pair] }).map_err(|e| e.to_string())?;
    let dhat = essential_distances(&g);
    let d = DistanceMatrix::all_pairs(&g, all_edges);
    let n = g.vertex_count();
    let mut mismatches = 0;
    let mut order_fail = 0;
    for i in 0..n {
        let oracle = common::bellman_ford(&g, i, positive_edges);
        for j in 0..n {
            if oracle[j] != dhat.distance(i, j) {
                mismatches += 1;
            }
            if d.distance(i, j) > dhat.distance(i, j) {
                order_fail += 1;
            }
        }
    }
    let l = l_complex(1.0 / 64.0).map_err(|e| e.to_string())?;
    let qc = quasiconvexity_constant(&l, &Euclidean::new(&l).unwrap(), f64::INFINITY, MetricChoice::Essential)
        .map_err(|e| e.to_string())?;
    let bound = std::f64::consts::SQRT_2 * 1.05;
    check(
        mismatches == 0 && order_fail == 0 && qc.c <= bound,
        format!(
            "{n} vertices: {mismatches} oracle mismatches, {order_fail} pairs with d > d_hat; L-complex d_hat/ambient max {:.6} <= {bound:.6}",
            qc.c
        ),
    )
}

fn cusp_ratios(g: &MetricMeasureGraph) -> Result<Vec<f64>, String> {
    [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&rho| {
            let c = nearest_vertex(g, &[rho, 0.0]).ok_or("no positions")?;
            let rep = doubling_ratios(g, &[c], &[rho]).map_err(|e| e.to_string())?;
            Ok(rep.rows[0].ratio)
        })
        .collect()
}

fn cusp_non_doubling() -> Outcome {
    let h = 1.0 / 256.0;
    let exp = gen_cusp(&Profile::ExpInv, h).map_err(|e| e.to_string())?;
    let r_exp = cusp_ratios(&exp)?;
    drop(exp);
    let quad = Profile::Power { exponent: 2.0 };
    let sq = gen_cusp(&quad, h).map_err(|e| e.to_string())?;
    let r_sq = cusp_ratios(&sq)?;
    let increasing = r_exp.windows(2).all(|w| w[1] > w[0]);
    check(
        increasing && r_exp[2] > 100.0 && r_sq.iter().all(|&r| r < 50.0),
        format!("exp(1-1/t) ratios {r_exp:.2?} at r = 1/8, 1/16, 1/32; t^2 ratios {r_sq:.2?}"),
    )
}

fn poincare_up_to_scale() -> Outcome {
    let spec = ComplexSpec {
        points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0]],
        segments: vec![[0, 1], [2, 3]],
        ..ComplexSpec::default()
    };
    let g = gen_simplicial(&spec, 1.0 / 16.0).map_err(|e| e.to_string())?;
    let u = ScalarField::new(g.vertices().iter().map(|v| if v.pos.as_ref().unwrap()[0] >= 2.0 { 1.0 } else { 0.0 }).collect());
    let rho = GradientField::constant(g.vertex_count(), 0.0);
    let opts = PoincareOptions { ball_metric: BallMetric::Euclidean, ..Default::default() };
    let small = poincare_constant(&g, &u, &rho, 1.0, 0.4, opts).map_err(|e| e.to_string())?;
    let large = poincare_constant(&g, &u, &rho, 1.0, 2.0, opts).map_err(|e| e.to_string())?;
    check(
        small.best_c == 0.0 && large.best_c == f64::INFINITY,
        format!("C(r = 0.4) = {}, C(r = 2) = {}", small.best_c, large.best_c),
    )
}

fn c0_ledger() -> Outcome {
    for r in [0.1, 1.0, 10.0] {
        if c0_constant(1.0, r).map_err(|e| e.to_string())? != 1.0 {
            return Err(format!("c0(1, {r}) != 1"));
        }
    }
    let c = c0_constant(2.0, 0.1).map_err(|e| e.to_string())?;
    if c != 3.0 {
        return Err(format!("c0(2, 0.1) = {c:?}"));
    }
    let a_grid: Vec<f64> = (0..20).map(|i| 1.0 + 2.0 * i as f64 / 19.0).collect();
    let r_grid: Vec<f64> = (0..20).map(|j| 0.025 + 0.5 * j as f64 / 19.0).collect();
    let mut table = vec![vec![None; 20]; 20];
    let mut errors = 0;
    for (i, &a) in a_grid.iter().enumerate() {
        for (j, &r) in r_grid.iter().enumerate() {
            let expect_err = 2.0 * r * (a - 1.0) >= 1.0;
            match c0_constant(a, r) {
                Ok(v) if !expect_err => table[i][j] = Some(v),
                Err(Error::Domain(_)) if expect_err => errors += 1,
                other => return Err(format!("c0({a}, {r}) = {other:?}, domain error expected: {expect_err}")),
            }
        }
    }
    for i in 0..20 {
        for j in 0..20 {
            let Some(v) = table[i][j] else { continue };
            let up_a = table.get(i + 1).and_then(|row| row[j]);
            let up_r = table[i].get(j + 1).copied().flatten();
            if up_a.is_some_and(|w| w < v) || up_r.is_some_and(|w| w < v) {
                return Err(format!("not monotone at A = {}, R = {}", a_grid[i], r_grid[j]));
            }
        }
    }
    Ok(format!("c0(2, 0.1) = {c:?}; 400-point grid monotone, {errors} domain errors exactly where 2R(A-1) >= 1"))
}

fn carpet_degeneracy() -> Outcome {
    let g = gen_carpet(3, &NegligibleMode::All).map_err(|e| e.to_string())?;
    let n = g.vertex_count();
    let dhat = essential_distances(&g);
    let finite_off_diag = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && dhat.row(i)[j].is_finite()).count();
    let side = 27u64;
    let on_rim = |id: u64| {
        let (i, j) = (id % side, id / side);
        i == 0 || j == 0 || i == side - 1 || j == side - 1
    };
    let omega: Vec<u64> = g.vertices().iter().map(|v| v.id).filter(|&id| !on_rim(id)).collect();
    let outside: PartialField =
        g.vertices().iter().filter(|v| on_rim(v.id)).map(|v| (v.id, v.pos.as_ref().unwrap()[0])).collect();
    let sol = infinity_harmonic_extend(&g, &omega, &outside, 1e-10, 1000).map_err(|e| e.to_string())?;
    let problem = AmleProblem::new(g.clone(), outside.clone(), MetricChoice::Essential).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut fields = [vec![0.0; n], vec![0.0; n]];
    for (i, v) in g.vertices().iter().enumerate() {
        let (a, b) = match outside.get(&v.id) {
            Some(&x) => (x, x),
            None => (0.0, rng.gen_range(-1.0..1.0)),
        };
        fields[0][i] = a;
        fields[1][i] = b;
    }
    let mut residuals = Vec::new();
    for f in &fields {
        let res = check_amle_local(&ScalarField::new(f.clone()), &problem).map_err(|e| e.to_string())?;
        residuals.push(res.max());
    }
    let degenerate_all = sol.degenerate_vertices.len() == omega.len();
    check(
        finite_off_diag == 0 && degenerate_all && fields[0] != fields[1] && residuals.iter().all(|&r| r == 0.0),
        format!(
            "{n} cells, {finite_off_diag} finite off-diagonal d_hat, {} of {} Omega vertices degenerate, residuals {residuals:?}",
            sol.degenerate_vertices.len(),
            omega.len()
        ),
    )
}

fn uniqueness_and_comparison() -> Outcome {
    let tol = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_gap = 0.0f64;
    let mut iters = 0;
    for _ in 0..30 {
        let g = common::random_graph(&mut rng, 100, 100);
        let bnd = common::random_subset(&mut rng, 100, 10);
        let data: PartialField = bnd.iter().map(|&i| (g.id(i), rng.gen_range(0.0..1.0))).collect();
        let p = AmleProblem::new(g, data, MetricChoice::Graph).map_err(|e| e.to_string())?;
        let solve = |init| solve_amle_with(&p, &SolverOptions { tol, init, ..Default::default() });
        let lo = solve(Initialization::MinFill).map_err(|e| e.to_string())?;
        let hi = solve(Initialization::MaxFill).map_err(|e| e.to_string())?;
        if !(lo.converged && hi.converged) {
            return Err(format!("no convergence: residuals {} / {}", lo.residual, hi.residual));
        }
        iters = iters.max(lo.iterations.max(hi.iterations));
        let gap = lo.u.values.iter().zip(&hi.u.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_gap = worst_gap.max(gap);
    }
    let mut comparisons = 0;
    for _ in 0..30 {
        let g = gen_grid(&Shape::Rect(Rect::new(0.0, 0.0, 4.0, 9.0)), 1.0).unwrap();
        let bnd = common::random_subset(&mut rng, g.vertex_count(), 8);
        let g1: PartialField = bnd.iter().map(|&i| (g.id(i), rng.gen_range(-1.0..1.0))).collect();
        let g2: PartialField = g1.iter().map(|(&id, &v)| (id, v + rng.gen_range(0.0..0.5))).collect();
        let opts = SolverOptions { tol, ..Default::default() };
        let p1 = AmleProblem::new(g.clone(), g1, MetricChoice::Graph).map_err(|e| e.to_string())?;
        let p2 = AmleProblem::new(g, g2, MetricChoice::Graph).map_err(|e| e.to_string())?;
        let (u1, u2) = (
            solve_amle_with(&p1, &opts).map_err(|e| e.to_string())?,
            solve_amle_with(&p2, &opts).map_err(|e| e.to_string())?,
        );
        if !comparison_check(&u1, &u2).map_err(|e| e.to_string())? {
            return Err("comparison violated".into());
        }
        comparisons += 1;
    }
    check(
        worst_gap <= 10.0 * tol,
        format!("30 problems: max |u_min - u_max| = {worst_gap:.2e} (<= {:.0e}), max {iters} iterations; {comparisons} comparisons hold", 10.0 * tol),
    )
}

fn reports() -> Vec<String> {
    let json = |v: serde_json::Result<String>| v.unwrap();
    let mut out = Vec::new();
    let disc = gen_grid(&Shape::Disc { center: [0.0, 0.0], radius: 1.0 }, 1.0 / 28.0).unwrap();
    let opts = QuasiconvexityOptions { samples: 4000, ..Default::default() };
    let qc = quasiconvexity_constant_with(&disc, &Euclidean::new(&disc).unwrap(), 0.5, MetricChoice::Graph, opts).unwrap();
    out.push(json(serde_json::to_string(&qc)));
    let centers: Vec<u64> = disc.vertices().iter().step_by(97).map(|v| v.id).collect();
    out.push(json(serde_json::to_string(&doubling_ratios(&disc, &centers, &[0.1, 0.2, 0.4]).unwrap())));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = common::random_graph(&mut rng, 120, 80);
    let u = ScalarField::new((0..120).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let rho = GradientField::new((0..120).map(|_| rng.gen_range(0.0..2.0)).collect()).unwrap();
    out.push(json(serde_json::to_string(&poincare_constant(&g, &u, &rho, 2.0, 1.5, PoincareOptions::default()).unwrap())));
    let omega = common::random_subset(&mut rng, 120, 15);
    let data: PartialField = omega.iter().map(|&i| (g.id(i), u.values[i])).collect();
    out.push(json(serde_json::to_string(&truncate_extend(&g, &data, MetricChoice::Graph).unwrap())));
    let p = AmleProblem::new(g.clone(), data, MetricChoice::Graph).unwrap();
    out.push(json(serde_json::to_string(&solve_amle_with(&p, &SolverOptions::default()).unwrap())));
    let ids: Vec<u64> = g.vertices().iter().map(|v| v.id).collect();
    let d = DistanceMatrix::all_pairs(&g, all_edges);
    out.push(json(serde_json::to_string(&nagata_cover(&g, &ids, &d, 0.8, 2).unwrap())));

    let (grid, hole) = grid_with_hole(18.0, Rect::new(5.0, 5.0, 9.0, 8.0));
    let cover = whitney_cover(&grid, &hole, WhitneyParams::default()).unwrap();
    out.push(json(serde_json::to_string(&cover)));
    let f = VectorField::from_partial(
        &grid,
        2,
        VectorNorm::Max,
        &hole.iter().map(|&id| (id, vec![id as f64, -(id as f64) / 3.0])).collect(),
    )
    .unwrap();
    out.push(json(serde_json::to_string(&whitney_extend(&grid, &f, &cover).unwrap())));
    let dh = essential_distances(&gen_carpet(2, &NegligibleMode::None).unwrap());
    out.push(format!("{:?}", (0..dh.len()).map(|i| dh.row(i).to_vec()).collect::<Vec<_>>()));
    out
}

fn determinism() -> Outcome {
    let mut runs = Vec::new();
    for threads in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
        runs.push(pool.install(reports));
    }
    let same = runs.iter().all(|r| r == &runs[0]);
    let bytes: usize = runs[0].iter().map(String::len).sum();
    check(same, format!("{} reports ({bytes} bytes) identical across 1, 4, 8 threads", runs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("McShane preserves Lipschitz constant and sup norm", mcshane_preservation),
        ("Whitney partition of unity and multiplicity", whitney_partition),
        ("AMLE exact on path and star", amle_exactness),
        ("L-complex infinity-harmonic pipeline", l_complex_pipeline),
        ("essential distance matches oracle", essential_vs_oracle),
        ("cusp is not doubling", cusp_non_doubling),
        ("Poincare constant up to scale", poincare_up_to_scale),
        ("C0 constant table", c0_ledger),
        ("carpet degeneracy", carpet_degeneracy),
        ("AMLE uniqueness and comparison", uniqueness_and_comparison),
        ("reports independent of thread count", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
