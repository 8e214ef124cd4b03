//! Cross-module invariants on the public API.

use nalgebra::Vector4;
use proptest::prelude::*;

use hill4bp::equilibria::{equilibrium_points, Kind, Label};
use hill4bp::integrate::{flow, Tolerances};
use hill4bp::manifolds::{segment_intersection, seed_manifold, Sense, Side};
use hill4bp::model::{GridSpec, HillModel};
use hill4bp::orbits::lyapunov_orbit;
use hill4bp::poincare::scan;
use hill4bp::regularization::{regularized_energy, EnergyContext, RegularizedField};

fn tol() -> Tolerances {
    Tolerances::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frames_share_jacobi_constant(mu in 0.0..0.5f64, x in 0.2..1.0f64, y in -1.0..1.0f64,
                                    u in -1.0..1.0f64, v in -1.0..1.0f64) {
        let rot = HillModel::rotated(mu).unwrap();
        let unrot = HillModel::unrotated(mu).unwrap();
        let s = Vector4::new(x, y, u, v);
        let w = rot.to_unrotated(&s);
        prop_assert!((rot.jacobi(&s) - unrot.jacobi(&w)).abs() < 1e-12);
        prop_assert!((rot.to_rotated(&w) - s).norm() < 1e-14);
    }

    #[test]
    fn collinear_points_are_saddle_centers(mu in 1e-6..0.5f64) {
        for e in equilibrium_points(mu).unwrap() {
            if matches!(e.label, Label::L1 | Label::L2) {
                prop_assert_eq!(e.kind, Kind::SaddleCenter);
                prop_assert!(e.charpoly.b < 0.0);
            }
        }
    }

    #[test]
    fn physical_flow_is_time_reversible(x in 0.3..0.8f64, v in 0.5..1.2f64) {
        // (x, y, ẋ, ẏ, t) -> (x, -y, -ẋ, ẏ, -t)
        let m = HillModel::rotated(0.00095).unwrap();
        let s0 = Vector4::new(x, 0.0, 0.0, v);
        let s1 = flow(&m, s0, 0.7, &tol()).unwrap();
        let back = flow(&m, Vector4::new(s1[0], -s1[1], -s1[2], s1[3]), 0.7, &tol()).unwrap();
        prop_assert!((back - s0).norm() < 1e-9);
    }

    #[test]
    fn regularized_flow_shadows_physical_flow(x in 0.15..0.5f64, sign in prop::bool::ANY) {
        let mu = 0.00095;
        let c = 4.5;
        let m = HillModel::rotated(mu).unwrap();
        let v = (2.0 * m.potential(x, 0.0, 0.0).unwrap() - c).sqrt();
        let s0 = Vector4::new(x, 0.0, 0.0, if sign { v } else { -v });
        let ctx = EnergyContext::new(c).unwrap();
        let f = RegularizedField::new(mu).unwrap();
        let r1 = flow(&f, ctx.to_regularized(&s0).unwrap(), 0.3, &tol()).unwrap();
        prop_assert!((f.hamiltonian(&r1) - ctx.h_reg).abs() < 1e-11);
        let p1 = ctx.to_physical(&r1).unwrap();
        prop_assert!((m.jacobi(&p1) - c).abs() < 1e-9);
    }

    #[test]
    fn segment_intersection_is_symmetric(a in prop::array::uniform4(-1.0..1.0f64),
                                          b in prop::array::uniform4(-1.0..1.0f64)) {
        let (p, q) = ([a[0], a[1]], [a[2], a[3]]);
        let (r, s) = ([b[0], b[1]], [b[2], b[3]]);
        let one = segment_intersection(p, q, r, s).map(|x| x.0);
        let two = segment_intersection(r, s, p, q).map(|x| x.0);
        prop_assert_eq!(one.is_some(), two.is_some());
        if let (Some(x), Some(y)) = (one, two) {
            prop_assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
        }
    }
}

#[test]
fn scan_is_deterministic_and_thread_independent() {
    let h = regularized_energy(4.5).unwrap();
    let grid = GridSpec::new((-0.8, 0.8), (-0.3, 0.3), 5, 4).unwrap();
    let a = scan(h, 0.1, &grid, 15).unwrap();
    let b = hill4bp::parallel::sequential(|| scan(h, 0.1, &grid, 15)).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn manifold_seeds_leave_the_orbit_on_the_requested_side() {
    let mu = 0.00095;
    let orbit = lyapunov_orbit(mu, Label::L1, 5e-3).unwrap();
    let m = HillModel::rotated(mu).unwrap();
    for (side, inward) in [(Side::Inner, true), (Side::Outer, false)] {
        let b = seed_manifold(&orbit, Sense::Unstable, side, 1e-6, 8).unwrap();
        let s = flow(&m, b.seeds[0], 3.0 * orbit.period, &tol()).unwrap();
        let r_seed = b.seeds[0][0].hypot(b.seeds[0][1]);
        let r_later = s[0].hypot(s[1]);
        assert_eq!(r_later < r_seed, inward, "{side:?}: {r_seed} -> {r_later}");
    }
}
