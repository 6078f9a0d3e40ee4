use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use pxrobin::energy::{monotonicity_gap, Problem};
use pxrobin::fields::{BinOp, DomainSpec, FieldExpr, Func};
use pxrobin::modular::{holder_pairing_bound, luxemburg_norm, norm_modular_relations, Carrier, SampledModular};
use pxrobin::solvers::lambda_star;
use pxrobin::{build_rect_mesh, parse_field, ProblemSpec};

const N: usize = 8;

fn problem() -> &'static Problem {
    static PB: OnceLock<Problem> = OnceLock::new();
    PB.get_or_init(|| {
        let fields = ["1 + 0.5*x*y", "2 - x", "2.5 + 0.5*sin(3*x)*y", "3 + x", "0.5 + y"];
        Problem::new(&ProblemSpec::new(DomainSpec::unit_square(N), fields, 1.3).unwrap()).unwrap()
    })
}

/// Nodal values on the `N × N` mesh with magnitudes spread over several decades.
fn nodal() -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, (N + 1) * (N + 1)), -2.0f64..2.0)
        .prop_filter("nonzero", |(v, _)| v.iter().any(|x| x.abs() > 1e-3))
        .prop_map(|(v, e)| v.into_iter().map(|x| x * 10f64.powf(e)).collect())
}

fn modulars() -> [SampledModular; 3] {
    let pb = problem();
    let s = &pb.spec;
    [
        SampledModular::new(&pb.quad, Carrier::Volume, &s.q, &s.b).unwrap(),
        SampledModular::new(&pb.quad, Carrier::Gradient, &s.p, &s.a).unwrap(),
        SampledModular::new(&pb.quad, Carrier::Boundary, &s.p, &s.beta).unwrap(),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn expr() -> impl Strategy<Value = FieldExpr> {
    let leaf = prop_oneof![(0.0f64..10.0).prop_map(FieldExpr::Num), Just(FieldExpr::X), Just(FieldExpr::Y)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        let unary = prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Abs), Just(Func::Exp)];
        let binary = prop_oneof![Just(Func::Min), Just(Func::Max)];
        prop_oneof![
            inner.clone().prop_map(|e| FieldExpr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| FieldExpr::Bin(o, Box::new(a), Box::new(b))),
            (unary, inner.clone()).prop_map(|(f, a)| FieldExpr::Call(f, vec![a])),
            (binary, inner.clone(), inner).prop_map(|(f, a, b)| FieldExpr::Call(f, vec![a, b])),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn luxemburg_norm_is_absolutely_homogeneous(u in nodal(), t in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0]) {
        let pb = problem();
        for m in modulars() {
            let n = luxemburg_norm(&m.closure(&pb.quad, &u)).unwrap();
            let ut: Vec<f64> = u.iter().map(|x| t * x).collect();
            let nt = luxemburg_norm(&m.closure(&pb.quad, &ut)).unwrap();
            prop_assert!(rel(nt, t.abs() * n) <= 1e-9, "{nt} vs {}", t.abs() * n);
        }
    }

    #[test]
    fn modular_at_the_norm_is_one(u in nodal()) {
        let pb = problem();
        for m in modulars() {
            let c = m.closure(&pb.quad, &u);
            let n = luxemburg_norm(&c).unwrap();
            prop_assert!((c.eval(n) - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn norm_and_modular_relations_hold(u in nodal()) {
        let pb = problem();
        for m in modulars() {
            let c = m.closure(&pb.quad, &u);
            let (lo, hi) = c.exponent_range().unwrap();
            let verdicts = norm_modular_relations(luxemburg_norm(&c).unwrap(), c.modular(), lo, hi);
            prop_assert!(verdicts.iter().all(|v| v.holds), "{verdicts:?}");
        }
        let r = &pb.regime;
        let verdicts = norm_modular_relations(pb.beta_norm(&u).unwrap(), pb.i_beta(&u), r.p_minus, r.p_plus);
        prop_assert!(verdicts.iter().all(|v| v.holds), "{verdicts:?}");
    }

    #[test]
    fn constant_exponent_norm_is_a_root_of_the_modular(u in nodal(), p in 1.1f64..6.0) {
        let pb = problem();
        let m = SampledModular::new(&pb.quad, Carrier::Volume, &FieldExpr::constant(p), &pb.spec.b).unwrap();
        let c = m.closure(&pb.quad, &u);
        prop_assert!(rel(luxemburg_norm(&c).unwrap(), c.modular().powf(1.0 / p)) <= 1e-10);
    }

    #[test]
    fn holder_pairing_is_bounded(u in nodal(), v in nodal()) {
        let pb = problem();
        let (lhs, rhs) = holder_pairing_bound(&pb.function(u).unwrap(), &pb.function(v).unwrap(), &pb.spec.q, &pb.spec.b).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn energy_is_even_and_vanishes_at_zero(u in nodal()) {
        let pb = problem();
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        prop_assert_eq!(pb.j(&neg), pb.j(&u));
        prop_assert_eq!(pb.j(&vec![0.0; u.len()]), 0.0);
    }

    #[test]
    fn derivative_splits_into_operator_and_source(u in nodal(), v in nodal()) {
        let pb = problem();
        let pair = |g: Vec<f64>| g.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        let (g, l, s) = (pair(pb.gradient(&u)), pair(pb.l_gradient(&u)), pair(pb.source_gradient(&u)));
        prop_assert!((g - (l - pb.lambda() * s)).abs() <= 1e-12 * (l.abs() + pb.lambda() * s.abs()));
    }

    #[test]
    fn gradient_matches_central_differences(u in nodal(), v in nodal()) {
        let pb = problem();
        let sup = |w: &[f64]| w.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let k = sup(&u) / sup(&v);
        let v: Vec<f64> = v.iter().map(|x| k * x).collect();
        let h = 1e-6;
        let at = |t: f64| pb.j(&u.iter().zip(&v).map(|(a, b)| a + t * b).collect::<Vec<_>>());
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let exact: f64 = pb.gradient(&u).iter().zip(&v).map(|(a, b)| a * b).sum();
        prop_assert!(rel(fd, exact) <= 1e-5, "{fd} vs {exact}");
    }

    #[test]
    fn operator_part_is_strictly_monotone(u in nodal(), v in nodal()) {
        let pb = problem();
        prop_assume!(u.iter().zip(&v).any(|(a, b)| (a - b).abs() > 1e-6));
        let gap = monotonicity_gap(&pb.function(u).unwrap(), &pb.function(v).unwrap(), &pb.spec).unwrap();
        prop_assert!(gap > 0.0);
    }

    #[test]
    fn display_round_trips(e in expr()) {
        let again = parse_field(&e.to_string()).unwrap();
        prop_assert_eq!(again, e);
    }

    #[test]
    fn mesh_tiles_the_rectangle(x0 in -5.0f64..5.0, y0 in -5.0f64..5.0, w in 0.1f64..4.0, h in 0.1f64..4.0, nx in 1usize..12, ny in 1usize..12) {
        let mesh = Arc::new(build_rect_mesh(x0, y0, x0 + w, y0 + h, nx, ny).unwrap());
        prop_assert!(mesh.validate().is_ok());
        let area: f64 = (0..mesh.n_triangles()).map(|t| mesh.signed_area(t)).sum();
        prop_assert!((0..mesh.n_triangles()).all(|t| mesh.signed_area(t) > 0.0));
        prop_assert!(rel(area, w * h) <= 1e-12);
        let perimeter: f64 = (0..mesh.boundary_edges.len()).map(|e| mesh.edge_length(e)).sum();
        prop_assert!(rel(perimeter, 2.0 * (w + h)) <= 1e-12);
    }

    #[test]
    fn threshold_decreases_in_c2_and_p_plus(rho in 0.05f64..0.95, qm in 1.2f64..3.0, dp in 0.1f64..3.0, c2 in 0.1f64..0.9, dc in 0.01f64..0.5) {
        let pp = qm + dp;
        prop_assume!(rho < 1.0 / (c2 + dc));
        let base = lambda_star(pp, qm, rho, c2).unwrap().lambda_star;
        prop_assert!(lambda_star(pp, qm, rho, c2 + dc).unwrap().lambda_star < base);
        prop_assert!(lambda_star(pp + 0.5, qm, rho, c2).unwrap().lambda_star < base);
    }
}
