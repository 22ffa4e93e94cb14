use std::f64::consts::PI;

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use flatkb::assembly::{build_flat_torus, TorusParams};
use flatkb::cw_complex::{apply_3x4, classify_topology, cofactors_3x4, merge_coplanar, CWMesh};
use flatkb::frames::{complementary_angle, make_tube_frame, AxisLabel, BridgeFrame, FrameKind, RigidMotion, Transform, Vec3};
use flatkb::interval::Interval;
use flatkb::tube_joint::{build_tube_joint, generate_parameters, verify_flat, FlatVerdict};
use flatkb::zee_bridge::{bridge_step, build_zee_bridge, layout_residual, ZeeParams};

fn sample(rng: &mut StdRng, i: Interval) -> f64 {
    if i.lo() == i.hi() {
        i.lo()
    } else {
        rng.gen_range(i.lo()..=i.hi())
    }
}

fn random_interval(rng: &mut StdRng) -> Interval {
    let a: f64 = rng.gen_range(-100.0..100.0);
    let w: f64 = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..10.0) };
    Interval::new(a, a + w)
}

#[test]
fn interval_ops_contain_sampled_results() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut checked = 0usize;
    while checked < 1_000_000 {
        let a = random_interval(&mut rng);
        let b = random_interval(&mut rng);
        let x = sample(&mut rng, a);
        let y = sample(&mut rng, b);
        assert!((a + b).contains(x + y), "{a:?} + {b:?} at {x}, {y}");
        assert!((a - b).contains(x - y), "{a:?} - {b:?} at {x}, {y}");
        assert!((a * b).contains(x * y), "{a:?} * {b:?} at {x}, {y}");
        if let Ok(q) = a.checked_div(b) {
            assert!(q.contains(x / y), "{a:?} / {b:?} at {x}, {y}");
        }
        if a.lo() >= 0.0 {
            assert!(a.sqrt().unwrap().contains(x.sqrt()));
        }
        checked += 4;
    }
}

proptest! {
    #[test]
    fn interval_sum_contains_endpoint_sums(a in -1e6f64..1e6, w in 0.0f64..1e3, b in -1e6f64..1e6, v in 0.0f64..1e3) {
        let i = Interval::new(a, a + w);
        let j = Interval::new(b, b + v);
        for (x, y) in [(a, b), (a + w, b + v), (a, b + v), (a + w, b)] {
            prop_assert!((i + j).contains(x + y));
            prop_assert!((i * j).contains(x * y));
        }
    }
}

fn unit(v: Vec3) -> Vec3 {
    v / v.norm()
}

fn orthogonal_unit(u: &Vec3, seed: Vec3) -> Vec3 {
    unit(seed - seed.dot(u) * u)
}

fn arb_vec() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(x, y, z)| Vector3::new(x, y, z))
        .prop_filter("not too short", |v| v.norm() > 0.2)
}

// Two unit edges facing each other across a gap, each with its own normal direction.
fn arb_frame() -> impl Strategy<Value = BridgeFrame<f64>> {
    (arb_vec(), arb_vec(), arb_vec(), arb_vec(), 2.0f64..4.0, -0.5f64..0.5, -0.5f64..0.5).prop_filter_map(
        "degenerate frame",
        |(u, s, v, t, gap, lift, skew)| {
            let u = unit(u);
            let s = orthogonal_unit(&u, s);
            let across = unit(u.cross(&s));
            let w = Vec3::zeros();
            let y = w + gap * across + lift * s + skew * u;
            let v = unit(v);
            let t = orthogonal_unit(&v, t);
            let f = BridgeFrame { w, x: w + u, y, z: y + v, s_hat: s, t_hat: t };
            f.s_hat.norm().is_finite().then_some(f)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, max_global_rejects: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn generated_bridges_develop_to_rectangles(f in arb_frame(), alpha in 0.5f64..3.0, gamma in 0.5f64..3.0) {
        let step = bridge_step(&f, alpha, gamma);
        prop_assume!(step.is_ok());
        let s = step.unwrap();
        prop_assume!(s.beta > 0.1 && s.delta > 0.1 && s.discriminant > 0.1);
        let zb = build_zee_bridge(&f, ZeeParams { alpha, beta: s.beta, gamma, delta: s.delta });
        prop_assume!(zb.is_ok());
        let r = layout_residual(&zb.unwrap());
        prop_assert!(r < 1e-9, "layout residual {r}");
    }
}

#[test]
fn central_anchor_gives_mirror_symmetric_parameters() {
    // (n, L, theta, psi, alpha, gamma); psi sits just past pi for n = 4 and 8
    let cases = [
        (4usize, 3.0, PI / 6.0, None, 3.1, 2.0),
        (6, 4.0, PI / 3.0, Some(1.5 * PI), 3.1, 2.5),
        (8, 3.0, PI / 6.0, None, 3.1, 2.0),
    ];
    for (n, l, theta, psi, a, g) in cases {
        let psi = psi.unwrap_or(PI + 0.55 * (complementary_angle(n, 0.0) - PI));
        let tf = make_tube_frame(FrameKind::Vee, n, l, theta, PI, psi, AxisLabel::Inverted).unwrap();
        let k = n / 2;
        let jp = generate_parameters(&tf, k, a, g).unwrap();
        assert_eq!(verify_flat(&build_tube_joint(&tf, &jp).unwrap()).verdict, FlatVerdict::Flat);
        let k = k as i64;
        for j in 1..=n as i64 {
            assert!((jp.alpha(k + j) - jp.alpha(k - j)).abs() < 1e-10, "n = {n}, j = {j}");
            assert!((jp.gamma(k + j) - jp.gamma(k - j)).abs() < 1e-10, "n = {n}, j = {j}");
        }
    }
}

#[test]
fn cofactors_annihilate_columns() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..10_000 {
        let m: [[f64; 3]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-10.0..10.0)));
        let c = cofactors_3x4(&m);
        let scale = c.iter().fold(1.0f64, |a, &x| a.max(x.abs())) * 10.0;
        let r = apply_3x4(&m, &c);
        assert!(r.iter().all(|x| x.abs() < 1e-12 * scale), "{m:?} -> {r:?}");
    }
}

fn area(mesh: &CWMesh) -> f64 {
    mesh.area()
}

#[test]
fn merging_preserves_topology_and_area() {
    let t = build_flat_torus(&TorusParams::default(), None, false).unwrap();
    let glued = &t.glued.mesh;
    let merged = merge_coplanar(glued, 1e-9).mesh;
    assert_eq!(classify_topology(glued), classify_topology(&merged));
    assert!((area(glued) - area(&merged)).abs() < 1e-9 * area(glued));
    let tj = flatkb::tables::VeeParams::default().joint().unwrap();
    let m = merge_coplanar(&tj.mesh, 1e-9).mesh;
    assert_eq!(tj.mesh.euler_characteristic(), m.euler_characteristic());
    assert_eq!(tj.mesh.boundary_loops().len(), m.boundary_loops().len());
    assert!((area(&tj.mesh) - area(&m)).abs() < 1e-9 * area(&m));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn rigid_motions_commute_with_construction(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0,
        angle in -PI..PI,
        tx in -10.0f64..10.0, ty in -10.0f64..10.0, tz in -10.0f64..10.0,
    ) {
        let m = RigidMotion::rotation_axis(&Vector3::new(ax, ay, az), angle).then(&RigidMotion::translation(Vector3::new(tx, ty, tz)));
        let base = build_flat_torus(&TorusParams::default(), None, false).unwrap();
        let moved = build_flat_torus(&TorusParams::default(), Some(&m), false).unwrap();
        prop_assert_eq!(base.report.verdict, moved.report.verdict);
        prop_assert_eq!(&base.report.topology, &moved.report.topology);
        prop_assert_eq!(base.glued.mesh.faces(), moved.glued.mesh.faces());
        for (p, q) in base.glued.mesh.vertices().iter().zip(moved.glued.mesh.vertices()) {
            prop_assert!((m.apply_point(p) - q).norm() < 1e-9);
        }

        let tj = flatkb::tables::VeeParams::default().joint().unwrap();
        let moved = tj.transformed(&m);
        prop_assert_eq!(verify_flat(&moved).verdict, FlatVerdict::Flat);
        let tf = tj.frame.transformed(&m);
        let rebuilt = build_tube_joint(&tf, &generate_parameters(&tf, 3, 3.1, 2.5).unwrap()).unwrap();
        for (a, b) in tj.params.alphas.iter().zip(&rebuilt.params.alphas) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
