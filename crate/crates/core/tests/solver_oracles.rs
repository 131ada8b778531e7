//! Solver checks against independent oracles: quadrature solutions of the
//! 1D two-point problem, dense policy iteration for the 1D obstacle
//! problem, hand hulls for envelopes, and the comparison/monotonicity
//! structure of the discrete problems.

mod common;

use std::sync::Arc;

use homoglab_core::env::{CheckerboardParams, ConstantParams, EllipticityField, FieldParams};
use homoglab_core::grid::{FrameSet, GridDomain, GridFunction, Shape};
use homoglab_core::operators::{LinearRule, OperatorSpec, OperatorVariant};
use homoglab_core::scheme::CompiledOperator;
use homoglab_core::solver::{
    convex_envelope, solve_dirichlet, solve_obstacle, Method, SolveConfig,
};
use homoglab_core::sym::{Dim, SymMatrix};

fn const_field(dim: Dim, v: f64) -> EllipticityField {
    EllipticityField::sample(&FieldParams::Constant(ConstantParams::new(dim, v)), 0).unwrap()
}

fn segment(h: f64) -> Arc<GridDomain> {
    GridDomain::new(
        Dim::One,
        Shape::Box2 { lo: [-1.0, 0.0], hi: [1.0, 0.0] },
        h,
        FrameSet::standard(Dim::One, 1).unwrap(),
    )
    .unwrap()
}

fn checkerboard_field_1d(seed: u64) -> EllipticityField {
    let cb = CheckerboardParams::two_valued(Dim::One, 0.25, 1.0, 0.25).sharp();
    EllipticityField::sample(&FieldParams::Checkerboard(cb), seed).unwrap()
}

#[test]
fn dirichlet_1d_matches_quadrature_oracle() {
    // −a(x)u'' = 1 with piecewise-constant random a ∈ {1, 1/4}
    let field = checkerboard_field_1d(5);
    let spec = OperatorSpec::new(
        OperatorVariant::Linear(LinearRule::isotropic(Dim::One)),
        1.0,
        field.clone(),
    )
    .unwrap();
    let h = 1.0 / 256.0;
    let dom = segment(h);
    let cfg = SolveConfig::default().with_tol(1e-11);
    let (u, _) = solve_dirichlet(&spec, &dom, |_| 1.0, |_| 0.0, &cfg).unwrap();
    let oracle = common::ode_double_integration(
        |x| field.eval_unchecked([x, 0.0]),
        |_| 1.0,
        -1.0,
        1.0,
        1 << 17,
    );
    let mut worst = 0.0f64;
    for (pi, &p) in dom.coords.iter().enumerate() {
        worst = worst.max((u.interior[pi] - oracle(p[0])).abs());
    }
    assert!(worst < 6e-3, "worst deviation from the quadrature oracle: {worst}");
}

#[test]
fn pucci_reduces_to_linear_on_matched_data() {
    // P⁻ with λ ≡ Λ collapses to −Λ·tr; compare against the linear solve
    let dom = GridDomain::new(
        Dim::Two,
        Shape::Ball { center: [0.0, 0.0], radius: 1.0 },
        1.0 / 32.0,
        FrameSet::standard(Dim::Two, 4).unwrap(),
    )
    .unwrap();
    let cap = 1.0;
    let pucci_spec = OperatorSpec::pucci_minus(cap, const_field(Dim::Two, cap)).unwrap();
    let linear_spec = OperatorSpec::new(
        OperatorVariant::Linear(LinearRule::constant(SymMatrix::identity(Dim::Two) * cap)),
        cap,
        const_field(Dim::Two, cap),
    )
    .unwrap();
    let cfg = SolveConfig::default().with_tol(1e-10);
    // rhs > 0 keeps the solution concave, where both operators agree
    let (u1, _) = solve_dirichlet(&pucci_spec, &dom, |_| 2.0, |_| 0.0, &cfg).unwrap();
    let (u2, _) = solve_dirichlet(&linear_spec, &dom, |_| 2.0, |_| 0.0, &cfg).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in u1.interior.iter().zip(&u2.interior) {
        worst = worst.max((a - b).abs());
    }
    assert!(worst < 1e-7, "pucci/linear disagreement {worst}");
}

#[test]
fn obstacle_1d_explicit_profile() {
    // min{−w'' − c, w} = 0 on (−1,1): w = (c/2)(1 − x²), no contact
    let c = 1.7;
    let spec = OperatorSpec::new(
        OperatorVariant::Linear(LinearRule::isotropic(Dim::One)),
        1.0,
        const_field(Dim::One, 1.0),
    )
    .unwrap()
    .with_zero_offset(-c);
    let dom = segment(1.0 / 128.0);
    let sol = solve_obstacle(&spec, &dom, &SolveConfig::default().with_tol(1e-11)).unwrap();
    assert_eq!(sol.contact_measure, 0.0);
    let mut worst = 0.0f64;
    for (pi, &p) in dom.coords.iter().enumerate() {
        worst = worst.max((sol.w.interior[pi] - 0.5 * c * (1.0 - p[0] * p[0])).abs());
    }
    assert!(worst < 1e-8, "profile deviation {worst}");
}

#[test]
fn obstacle_matches_policy_iteration_oracle() {
    // random 1D instances on grids of size <= 200, cross-checked to 1e-8
    for seed in 0..6u64 {
        let field = checkerboard_field_1d(seed + 100);
        // shift by a matrix and level so the contact set is nontrivial
        let m = SymMatrix::new_1d(-1.0);
        let alpha = 0.30 + 0.05 * seed as f64;
        let spec = OperatorSpec::new(
            OperatorVariant::Linear(LinearRule::isotropic(Dim::One)),
            1.0,
            field.clone(),
        )
        .unwrap()
        .shifted(m, alpha);
        let h = 2.0 / 180.0;
        let dom = segment(h);
        let sol = solve_obstacle(&spec, &dom, &SolveConfig::default().with_tol(1e-12)).unwrap();
        // oracle operates on the same lattice data
        let a: Vec<f64> = dom.coords.iter().map(|&p| field.eval_unchecked(p)).collect();
        let c: Vec<f64> = dom
            .coords
            .iter()
            .map(|&p| field.eval_unchecked(p) * (-m.xx) - alpha)
            .collect();
        let w_oracle = common::lcp_policy_iteration(&a, &c, h);
        let mut worst = 0.0f64;
        for (x, y) in sol.w.interior.iter().zip(&w_oracle) {
            worst = worst.max((x - y).abs());
        }
        assert!(worst < 1e-8, "seed {seed}: lcp oracle deviation {worst}");
    }
}

#[test]
fn obstacle_least_supersolution_property() {
    // w is below any hand-built nonnegative discrete supersolution
    let field = checkerboard_field_1d(17);
    let spec = OperatorSpec::new(
        OperatorVariant::Linear(LinearRule::isotropic(Dim::One)),
        1.0,
        field.clone(),
    )
    .unwrap()
    .shifted(SymMatrix::new_1d(-1.0), 0.5);
    let dom = segment(1.0 / 64.0);
    let sol = solve_obstacle(&spec, &dom, &SolveConfig::default().with_tol(1e-11)).unwrap();
    // candidate supersolutions: scaled concave bumps v = s(1 − x²) with s
    // large enough that −a·v'' + a − 0.5 = a(2s + 1) − 0.5 >= 0 (any s>0
    // works since a >= 1/4 gives a(2s+1) >= 0.5 for s >= 0.5)
    for s in [0.5, 1.0, 3.0] {
        let v = GridFunction::from_fn(&dom, |p| s * (1.0 - p[0] * p[0]));
        let op = CompiledOperator::compile(&spec, &dom).unwrap();
        for pi in 0..dom.n_interior() {
            assert!(op.residual_at(&v, pi) >= -1e-9, "candidate is not a supersolution");
        }
        for (w, vv) in sol.w.interior.iter().zip(&v.interior) {
            assert!(*w <= vv + 1e-8, "obstacle solution exceeds a supersolution");
        }
    }
}

#[test]
fn discrete_comparison_on_ordered_data() {
    // ordered data give ordered solutions: with F decreasing in D²u, a
    // smaller right side together with smaller boundary data keeps the
    // solution below
    let field = checkerboard_field_1d(23);
    let spec = OperatorSpec::pucci_minus(1.0, field).unwrap();
    let dom = segment(1.0 / 64.0);
    let cfg = SolveConfig::default().with_tol(1e-11);
    let (u, _) =
        solve_dirichlet(&spec, &dom, |p| 0.5 - 0.1 * p[0].abs(), |p| 0.1 * p[0], &cfg).unwrap();
    let (v, _) = solve_dirichlet(&spec, &dom, |_| 1.0, |p| 0.1 * p[0] + 0.05, &cfg).unwrap();
    for (a, b) in u.interior.iter().zip(&v.interior) {
        assert!(*a <= b + 1e-8, "comparison principle violated: {a} > {b}");
    }
}

#[test]
fn obstacle_monotone_in_domain() {
    // solving on V ⊂ W gives w_V <= w_W + tol on V, and contact of W
    // restricted to V sits inside the contact of V (up to the threshold)
    let field = checkerboard_field_1d(31);
    let spec = OperatorSpec::new(
        OperatorVariant::Linear(LinearRule::isotropic(Dim::One)),
        1.0,
        field,
    )
    .unwrap()
    .shifted(SymMatrix::new_1d(-1.0), 0.35);
    let h = 1.0 / 64.0;
    let dom_v = segment(h);
    let dom_w = GridDomain::new(
        Dim::One,
        Shape::Box2 { lo: [-2.0, 0.0], hi: [2.0, 0.0] },
        h,
        FrameSet::standard(Dim::One, 1).unwrap(),
    )
    .unwrap();
    let cfg = SolveConfig::default().with_tol(1e-11);
    let sol_v = solve_obstacle(&spec, &dom_v, &cfg).unwrap();
    let sol_w = solve_obstacle(&spec, &dom_w, &cfg).unwrap();
    for (pi, &ij) in dom_v.points.iter().enumerate() {
        let wv = sol_v.w.interior[pi];
        let ww = sol_w.w.value_at_lattice(ij).unwrap();
        assert!(wv <= ww + 1e-8, "domain monotonicity violated");
        let pi_w = dom_w.interior_index(ij).unwrap();
        if sol_w.contact[pi_w] {
            // w_V <= w_W <= contact_tol there
            assert!(wv <= sol_v.contact_tol + 1e-12);
        }
    }
}

#[test]
fn envelope_matches_hand_hull() {
    let dom = segment(1.0 / 100.0);
    let mut u = GridFunction::from_fn(&dom, |p| (3.0 * p[0]).sin() + 0.5 * p[0]);
    u.boundary = dom.boundary_coords.iter().map(|p| (3.0 * p[0]).sin() + 0.5 * p[0]).collect();
    let (env, _) = convex_envelope(&u, &SolveConfig::default().with_tol(1e-12)).unwrap();
    // oracle hull over interior + boundary nodes
    let mut xs: Vec<f64> = dom.coords.iter().map(|p| p[0]).collect();
    let mut us = u.interior.clone();
    let bx: Vec<f64> = dom.boundary_coords.iter().map(|p| p[0]).collect();
    for (x, v) in bx.iter().zip(&u.boundary) {
        xs.push(*x);
        us.push(*v);
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let xs_sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let us_sorted: Vec<f64> = order.iter().map(|&i| us[i]).collect();
    let hull = common::lower_hull_1d(&xs_sorted, &us_sorted);
    let mut worst = 0.0f64;
    for (pi, &p) in dom.coords.iter().enumerate() {
        let k = xs_sorted.iter().position(|&x| (x - p[0]).abs() < 1e-12).unwrap();
        worst = worst.max((env.interior[pi] - hull[k]).abs());
    }
    assert!(worst < 1e-6, "envelope deviates from the hand hull by {worst}");
}

#[test]
fn methods_cross_validate_on_obstacle() {
    let field = checkerboard_field_1d(41);
    let spec = OperatorSpec::new(
        OperatorVariant::Linear(LinearRule::isotropic(Dim::One)),
        1.0,
        field,
    )
    .unwrap()
    .shifted(SymMatrix::new_1d(-1.0), 0.4);
    let dom = segment(1.0 / 48.0);
    let gs = solve_obstacle(&spec, &dom, &SolveConfig::default().with_tol(1e-11)).unwrap();
    let cfg_j = SolveConfig {
        tol: 1e-11,
        method: Method::DampedJacobi,
        max_iters: 3_000_000,
        ..Default::default()
    };
    let ja = solve_obstacle(&spec, &dom, &cfg_j).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in gs.w.interior.iter().zip(&ja.w.interior) {
        worst = worst.max((a - b).abs());
    }
    assert!(worst < 1e-8, "obstacle methods disagree by {worst}");
}

#[test]
fn iteration_failure_carries_history() {
    let spec = OperatorSpec::pucci_minus(1.0, const_field(Dim::Two, 0.5)).unwrap();
    let dom = GridDomain::new(
        Dim::Two,
        Shape::Ball { center: [0.0, 0.0], radius: 1.0 },
        1.0 / 48.0,
        FrameSet::standard(Dim::Two, 4).unwrap(),
    )
    .unwrap();
    let cfg = SolveConfig { max_iters: 8, tol: 1e-14, ..Default::default() };
    let err = match solve_dirichlet(&spec, &dom, |_| 1.0, |_| 0.0, &cfg) {
        Err(e) => e,
        Ok(_) => panic!("expected iteration failure"),
    };
    match err {
        homoglab_core::CoreError::IterationFailure { history, iters, .. } => {
            assert!(!history.is_empty());
            assert!(iters >= 8);
        }
        other => panic!("unexpected error {other}"),
    }
}
