use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pxrobin::energy::{beta_norm, i_beta, j_lambda_grad, sobolev_norm_ab, Problem};
use pxrobin::fields::{exponent_bounds_on_mesh, DomainSpec};
use pxrobin::geometry::{edge_quadrature, triangle_quadrature};
use pxrobin::modular::{
    check_modular_norm_relations, holder_pairing_bound, luxemburg_norm, modular_boundary, modular_closure,
    modular_gradient, modular_lebesgue, Carrier,
};
use pxrobin::solvers::{
    descent_on, estimate_embedding_on, lambda_star, linear_robin_eigs, random_function, DescentOptions, Status,
};
use pxrobin::{build_rect_mesh, parse_field, DiscreteFunction, Mesh, ProblemSpec};

fn unit_mesh(n: usize) -> Arc<Mesh> {
    Arc::new(build_rect_mesh(0.0, 0.0, 1.0, 1.0, n, n).unwrap())
}

fn spec(fields: [&str; 5], n: usize, lambda: f64) -> ProblemSpec {
    ProblemSpec::new(DomainSpec::unit_square(n), fields, lambda).unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let up = f(hi) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == up {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn degree4_rule_integrates_xy_exactly() {
    let rule = triangle_quadrature(4).unwrap();
    let s: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0] * p[1]).sum();
    assert!((s - 1.0 / 24.0).abs() < 1e-15);
}

#[test]
fn edge_rule_integrates_cubic_exactly() {
    let rule = edge_quadrature(3).unwrap();
    let s: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(3)).sum();
    assert!((s - 0.25).abs() < 1e-15);
}

#[test]
fn sampled_supremum_matches_dense_scan() {
    let mesh = build_rect_mesh(0.0, 0.0, PI, PI, 32, 32).unwrap();
    let f = parse_field("2 + sin(x)*sin(y)").unwrap();
    let (_, hi) = exponent_bounds_on_mesh(&f, &mesh).unwrap();
    let m = 320;
    let scan = (0..=m)
        .flat_map(|i| (0..=m).map(move |j| (i as f64 * PI / m as f64, j as f64 * PI / m as f64)))
        .map(|(x, y)| 2.0 + x.sin() * y.sin())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((hi - 3.0).abs() <= 1e-2, "{hi}");
    assert!((hi - scan).abs() <= 1e-2, "{hi} vs {scan}");
}

#[test]
fn lebesgue_modular_of_constant_with_linear_exponent() {
    let u = DiscreteFunction::interpolate(unit_mesh(32), |_, _| 2.0).unwrap();
    let m = modular_lebesgue(&u, &parse_field("2 + x").unwrap(), &parse_field("1").unwrap()).unwrap();
    assert!((m - 4.0 / LN_2).abs() <= 1e-4, "{m}");
}

#[test]
fn boundary_modular_of_x() {
    let u = DiscreteFunction::interpolate(unit_mesh(8), |x, _| x).unwrap();
    let one = parse_field("1").unwrap();
    let m = modular_boundary(&u, &parse_field("2").unwrap(), &one).unwrap();
    // bottom and top edges give ∫₀¹x², the right edge 1, the left edge 0
    let exact = 2.0 * (1.0 / 3.0) + 1.0;
    assert!((m - exact).abs() <= 1e-12, "{m}");
}

#[test]
fn gradient_modular_of_diagonal_plane() {
    let u = DiscreteFunction::interpolate(unit_mesh(8), |x, y| x + y).unwrap();
    let m = modular_gradient(&u, &parse_field("3").unwrap(), &parse_field("1").unwrap()).unwrap();
    assert!((m - 2f64.sqrt().powi(3)).abs() <= 1e-12, "{m}");
}

#[test]
fn luxemburg_norm_matches_scalar_root_find() {
    let u = DiscreteFunction::interpolate(unit_mesh(32), |_, _| 2.0).unwrap();
    let c = modular_closure(&u, Carrier::Volume, &parse_field("2 + x").unwrap(), &parse_field("1").unwrap()).unwrap();
    let tau = luxemburg_norm(&c).unwrap();
    // ∫₀¹ s^{2+x} dx = s²(s − 1)/ln s with s = 2/τ
    let integral = |tau: f64| {
        let s: f64 = 2.0 / tau;
        if (s - 1.0).abs() < 1e-12 {
            s * s
        } else {
            s * s * (s - 1.0) / s.ln()
        }
    };
    let oracle = bisect(|t| integral(t) - 1.0, 0.5, 8.0);
    assert!((tau - oracle).abs() <= 1e-6, "{tau} vs {oracle}");
}

#[test]
fn relation_branches_above_and_below_one() {
    let p = parse_field("2 + x").unwrap();
    let w = parse_field("1").unwrap();
    for (value, branch) in [(2.0, 1), (0.1, 2)] {
        let u = DiscreteFunction::interpolate(unit_mesh(16), move |_, _| value).unwrap();
        let verdicts = check_modular_norm_relations(&u, &p, &w).unwrap();
        assert!(verdicts[branch].applicable, "{value}");
        assert!(verdicts.iter().all(|v| v.holds), "{verdicts:?}");
    }
}

#[test]
fn holder_bound_on_random_pairs() {
    let pb = Problem::new(&spec(["1", "1 + y", "2", "2 + x", "1"], 16, 1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let u = pb.function(random_function(&pb, &mut rng)).unwrap();
        let v = pb.function(random_function(&pb, &mut rng)).unwrap();
        let (lhs, rhs) = holder_pairing_bound(&u, &v, &pb.spec.q, &pb.spec.b).unwrap();
        let direct: f64 = {
            let (uq, vq) = (pb.quad.volume_values(u.values()), pb.quad.volume_values(v.values()));
            let b = pb.b_samples();
            let q = pb.q_samples();
            let s: f64 = (0..uq.len())
                .map(|k| pb.quad.vol_weights[k] * b[k] * uq[k].abs().powf(q[k] - 2.0) * uq[k] * vq[k])
                .sum();
            s.abs()
        };
        assert!((lhs - direct).abs() <= 1e-12 * direct.max(1.0));
        assert!(lhs <= rhs);
    }
}

#[test]
fn beta_modular_norm_and_sobolev_norm_of_x() {
    let s = spec(["1", "1", "2", "2", "1"], 8, 1.0);
    let u = DiscreteFunction::interpolate(unit_mesh(8), |x, _| x).unwrap();
    assert!((i_beta(&u, &s).unwrap() - 8.0 / 3.0).abs() <= 1e-12);
    assert!((beta_norm(&u, &s).unwrap() - (8.0f64 / 3.0).sqrt()).abs() <= 1e-12);
    // ∫x² is not exact for the P1 interpolant, so the mesh must be fine
    let u = DiscreteFunction::interpolate(unit_mesh(64), |x, _| x).unwrap();
    let sob = sobolev_norm_ab(&u, &s.with_resolution(64, 64)).unwrap();
    assert!((sob - (1.0 + (1.0f64 / 3.0).sqrt())).abs() <= 1e-9, "{sob}");
}

type Dense = Vec<Vec<f64>>;

/// `K`, `B`, `M` of P1 elements, assembled densely from element formulas.
fn linear_system(mesh: &Mesh) -> (Dense, Dense, Dense) {
    let n = mesh.vertices.len();
    let zeros = || vec![vec![0.0; n]; n];
    let (mut k, mut b, mut m) = (zeros(), zeros(), zeros());
    for t in &mesh.triangles {
        let [p0, p1, p2] = t.map(|i| mesh.vertices[i]);
        let area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])).abs();
        // ∇φ_i = (y_j − y_k, x_k − x_j)/(2A) for (i, j, k) cyclic
        let pts = [p0, p1, p2];
        let grad = |i: usize| {
            let (pj, pk) = (pts[(i + 1) % 3], pts[(i + 2) % 3]);
            [(pj[1] - pk[1]) / (2.0 * area), (pk[0] - pj[0]) / (2.0 * area)]
        };
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (grad(i), grad(j));
                k[t[i]][t[j]] += area * (gi[0] * gj[0] + gi[1] * gj[1]);
                m[t[i]][t[j]] += area / 12.0 * if i == j { 2.0 } else { 1.0 };
            }
        }
    }
    for e in &mesh.boundary_edges {
        let [a, c] = e.v;
        let len = ((mesh.vertices[a][0] - mesh.vertices[c][0]).powi(2)
            + (mesh.vertices[a][1] - mesh.vertices[c][1]).powi(2))
        .sqrt();
        for (i, j, f) in [(a, a, 2.0), (c, c, 2.0), (a, c, 1.0), (c, a, 1.0)] {
            b[i][j] += len / 6.0 * f;
        }
    }
    (k, b, m)
}

#[test]
fn quadratic_gradient_equals_linear_operator() {
    let lambda = 1.7;
    let s = spec(["1", "1", "2", "2", "1"], 6, lambda);
    let pb = Problem::new(&s).unwrap();
    let (k, b, m) = linear_system(pb.mesh());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = pb.function(random_function(&pb, &mut rng)).unwrap();
    let g = j_lambda_grad(&u, &s).unwrap();
    let uv = u.values();
    for i in 0..uv.len() {
        let expect: f64 = (0..uv.len()).map(|j| (k[i][j] + b[i][j] - lambda * m[i][j]) * uv[j]).sum();
        assert!((g.values[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()), "{i}: {} vs {expect}", g.values[i]);
    }
}

#[test]
fn eigenfunction_is_critical_at_its_eigenvalue() {
    let mesh = unit_mesh(16);
    let pair = linear_robin_eigs(&mesh, 1.0, 1.0, 1.0, 1).unwrap().remove(0);
    let pb = Problem::new(&spec(["1", "1", "2", "2", "1"], 16, pair.value)).unwrap();
    let r = pb.residual(pair.vector.values());
    assert!(r <= 1e-10, "{r}");
}

#[test]
fn separation_of_variables_eigenvalue() {
    let mu = bisect(|m| (m * m - 1.0) * m.sin() - 2.0 * m * m.cos(), 1.0, PI / 2.0);
    let exact = 2.0 * mu * mu;
    let errors: Vec<f64> = [16, 32, 64]
        .map(|n| (linear_robin_eigs(&unit_mesh(n), 1.0, 1.0, 1.0, 1).unwrap()[0].value - exact).abs() / exact)
        .to_vec();
    assert!(errors[2] <= 0.02);
    for w in errors.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{errors:?}");
    }
}

#[test]
fn threshold_values() {
    let ls = lambda_star(4.0, 2.0, 0.5, 1.0).unwrap();
    let by_hand = |rho: f64, pp: f64, qm: f64, c2: f64| rho.powf(pp - qm) / (2.0 * pp) * qm / c2.powf(qm);
    assert!((ls.lambda_star - by_hand(0.5, 4.0, 2.0, 1.0)).abs() <= 1e-15);
    assert!((ls.lambda_star - 0.0625).abs() <= 1e-15);
    assert!((ls.gamma - 0.5f64.powi(4) / 8.0).abs() <= 1e-15);
    assert!((lambda_star(4.0, 2.0, 0.5, 2.0).unwrap().lambda_star - 0.015625).abs() <= 1e-15);
}

#[test]
fn descent_below_first_eigenvalue_decays_to_zero() {
    let n = 12;
    let l1 = linear_robin_eigs(&unit_mesh(n), 1.0, 1.0, 1.0, 1).unwrap()[0].value;
    let pb = Problem::new(&spec(["1", "1", "2", "2", "1"], n, 0.5 * l1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u0 = random_function(&pb, &mut rng);
    let cp = descent_on(&pb, &u0, &DescentOptions { tol: 1e-9, ..Default::default() }).unwrap();
    assert!(cp.converged(), "{:?} residual {} norm {}", cp.status, cp.residual, cp.beta_norm);
    assert!(cp.beta_norm <= 1e-6, "{}", cp.beta_norm);
    assert!(cp.energy.abs() <= 1e-12 && cp.energy >= 0.0);
}

#[test]
fn unconstrained_superlinear_descent_diverges() {
    let n = 8;
    let pair = linear_robin_eigs(&unit_mesh(n), 1.0, 1.0, 1.0, 1).unwrap().remove(0);
    let pb = Problem::new(&spec(["1", "1", "2", "4", "1"], n, 1.0)).unwrap();
    let u0: Vec<f64> = pair.vector.values().iter().map(|v| 10.0 * v).collect();
    assert!(pb.j(&u0) < 0.0);
    let cp = descent_on(&pb, &u0, &DescentOptions::default()).unwrap();
    assert_eq!(cp.status, Status::Diverged);
    assert!(cp.energy < pb.j(&u0));
}

#[test]
fn embedding_estimate_grows_under_refinement() {
    let s = spec(["1", "1", "2", "4", "1"], 8, 1.0);
    let raws: Vec<f64> = [8, 16, 32]
        .map(|n| estimate_embedding_on(&Problem::new(&s.with_resolution(n, n)).unwrap(), 2, 0).unwrap().raw)
        .to_vec();
    // nested P1 spaces; slack for the ascent's stopping tolerance
    for w in raws.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 1e-6), "{raws:?}");
    }
}

#[test]
fn small_sphere_barrier_on_random_points() {
    let pb = Problem::new(&spec(["1", "1", "2", "4", "1"], 16, 1.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rho = 0.05;
    for _ in 0..50 {
        let u = random_function(&pb, &mut rng);
        let t = rho / pb.beta_norm(&u).unwrap();
        let u: Vec<f64> = u.iter().map(|v| t * v).collect();
        assert!(pb.j(&u) > 0.0);
    }
}
