use proptest::prelude::*;

use super::*;
use crate::dist::{build_bundle, DistributionSpec};

fn exp1() -> DistributionBundle {
    build_bundle(DistributionSpec::exponential(1.0)).unwrap()
}

fn lomax43() -> DistributionBundle {
    build_bundle(DistributionSpec::lomax(4.0, 3.0)).unwrap()
}

fn bundles() -> Vec<DistributionBundle> {
    vec![
        exp1(),
        lomax43(),
        build_bundle(DistributionSpec::gamma(3.0, 1.0).normalized()).unwrap(),
        build_bundle(DistributionSpec::lognormal(0.0, 1.0).normalized()).unwrap(),
    ]
}

#[test]
fn phi_of_one_under_exponential() {
    let b = exp1();
    for (x, t) in [(0.0, 1.0), (3.0, 0.5), (10.0, 2.0)] {
        assert!((phi(&b, t, |_| 1.0, x) - (-t).exp()).abs() < 1e-15);
    }
}

#[test]
fn phi_at_zero_is_identity() {
    let b = lomax43();
    for x in [0.0, 0.4, 7.0] {
        assert_eq!(phi(&b, 0.0, |y| y.sin(), x), x.sin());
    }
}

#[test]
fn psi_clamps() {
    let b = lomax43();
    assert_eq!(psi(&b, 1.0, |y| y * y, 2.0, 3.0), 4.0);
    assert_eq!(psi(&b, 1.0, |y| y * y, 2.0, 1.0), 4.0);
}

proptest! {
    #[test]
    fn semigroup(t in 0.0f64..5.0, s in 0.0f64..5.0, x in 0.0f64..20.0) {
        for (i, b) in bundles().iter().enumerate() {
            let inner = |y: f64| phi(b, s, |_| 1.0, y);
            let lhs = phi(b, t, inner, x);
            let rhs = phi(b, t + s, |_| 1.0, x);
            let tol = if i == 0 { 1e-12 } else { 1e-9 };
            prop_assert!((lhs - rhs).abs() <= tol, "{} {lhs} {rhs}", b.spec());
        }
    }

    #[test]
    fn psi_group_property(s in 0.0f64..5.0, t in 0.0f64..5.0, x in 0.0f64..20.0, frac in 0.0f64..1.0) {
        let u = s * frac;
        let b = lomax43();
        let f = |y: f64| (0.3 * y).cos();
        let lhs = psi(&b, s, |y| phi(&b, t, f, y), x, u);
        let rhs = psi(&b, s + t, f, x, u);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn psi_is_a_contraction(t in 0.0f64..10.0, s in 0.0f64..10.0, x in 0.0f64..30.0) {
        for b in bundles() {
            let v = psi(&b, t, |y| (2.0 * y).sin(), x, s);
            prop_assert!(v.abs() <= 1.0);
        }
    }

    #[test]
    fn t_map_shape(ages in proptest::collection::vec(0.0f64..20.0, 0..30)) {
        let grid = RGrid::standard();
        let ages = AgeVector::new(ages);
        for b in bundles() {
            let z = t_map(&b, &ages, &grid);
            let dz = t_map_derivative(&b, &ages, &grid);
            prop_assert_eq!(z[0], ages.len() as f64);
            for k in 1..z.len() {
                prop_assert!(z[k] <= z[k - 1] + 1e-12);
            }
            for k in 0..z.len() {
                prop_assert!(dz[k] <= 0.0);
                prop_assert!(dz[k] >= -b.hazard_bound() * z[k] * (1.0 + 1e-9) - 1e-300);
            }
        }
    }

    #[test]
    fn cauchy_schwarz(f in proptest::collection::vec(-3.0f64..3.0, 21), g in proptest::collection::vec(-3.0f64..3.0, 21)) {
        let grid = RGrid::uniform(4.0, 20).unwrap();
        let df: Vec<f64> = f.iter().rev().copied().collect();
        let dg: Vec<f64> = g.iter().map(|v| v * 0.5).collect();
        let ip = h1_inner(&f, &df, &g, &dg, &grid).unwrap();
        let nf = h1_norm(&f, &df, &grid).unwrap();
        let ng = h1_norm(&g, &dg, &grid).unwrap();
        prop_assert!(ip.abs() <= nf * ng * (1.0 + 1e-12));
    }
}

#[test]
fn t_map_examples() {
    let grid = RGrid::standard();
    let b = exp1();
    let one = t_map(&b, &AgeVector::new(vec![0.0]), &grid);
    for (v, r) in one.iter().zip(grid.nodes()) {
        assert!((v - (-r).exp()).abs() < 1e-15);
    }
    let many = t_map(&b, &AgeVector::new(vec![0.3, 2.0, 5.0, 9.0]), &grid);
    for (v, r) in many.iter().zip(grid.nodes()) {
        assert!((v - 4.0 * (-r).exp()).abs() < 1e-14);
    }
    let l = lomax43();
    let z = t_map(&l, &AgeVector::new(vec![0.0, 1.0]), &grid);
    for (v, r) in z.iter().zip(grid.nodes()) {
        let direct = (1.0 + r / 3.0).powi(-4) + (1.0 + (1.0 + r) / 3.0).powi(-4) / (4.0f64 / 3.0).powi(-4);
        assert!((v - direct).abs() < 1e-14);
    }
}

#[test]
fn t_map_derivative_examples() {
    let grid = RGrid::standard();
    let b = exp1();
    let d = t_map_derivative(&b, &AgeVector::new(vec![0.0]), &grid);
    for (v, r) in d.iter().zip(grid.nodes()) {
        assert!((v + (-r).exp()).abs() < 1e-15);
    }
    assert!(t_map_derivative(&b, &AgeVector::default(), &grid).iter().all(|v| *v == 0.0));
    // central differences of the map itself
    let ages = AgeVector::new(vec![0.2, 1.7, 4.0]);
    let delta = 1e-4;
    for bnd in bundles() {
        for r in [0.5, 2.0, 7.5] {
            let g = RGrid::from_nodes(vec![0.0, r - delta, r, r + delta]).unwrap();
            let z = t_map(&bnd, &ages, &g);
            let dz = t_map_derivative(&bnd, &ages, &g);
            let fd = (z[3] - z[1]) / (2.0 * delta);
            assert!((fd - dz[2]).abs() < 1e-6, "{} r={r}", bnd.spec());
        }
    }
}

#[test]
fn h1_norm_of_decaying_exponential() {
    let grid = RGrid::uniform(40.0, 40_000).unwrap();
    let f: Vec<f64> = grid.nodes().iter().map(|r| (-r).exp()).collect();
    let df: Vec<f64> = f.iter().map(|v| -v).collect();
    let n2 = h1_inner(&f, &df, &f, &df, &grid).unwrap();
    assert!((n2 - 1.0).abs() < 1e-6);
    let zero = vec![0.0; grid.len()];
    assert_eq!(h1_norm(&zero, &zero, &grid).unwrap(), 0.0);
}

#[test]
fn h1_shape_error() {
    let grid = RGrid::uniform(1.0, 4).unwrap();
    let e = h1_inner(&[0.0; 5], &[0.0; 4], &[0.0; 5], &[0.0; 5], &grid).unwrap_err();
    assert!(matches!(e, crate::Error::Shape(_)));
}

#[test]
fn grid_construction() {
    let g = RGrid::standard();
    assert_eq!(g.nodes()[0], 0.0);
    assert_eq!(g.r_max(), 40.0);
    assert!(g.weights().iter().all(|w| *w > 0.0));
    assert!((g.weights().iter().sum::<f64>() - 40.0).abs() < 1e-12);
    assert!(RGrid::from_nodes(vec![0.1, 1.0]).is_err());
    assert!(RGrid::from_nodes(vec![0.0, 1.0, 1.0]).is_err());
    let json = serde_json::to_string(&g).unwrap();
    let back: RGrid = serde_json::from_str(&json).unwrap();
    assert_eq!(back, g);
}

#[test]
fn tail_envelope_bounds_exponential_tail() {
    // f = c e^{-r} beyond r_max: squared H1 tail is c^2 e^{-2 r_max}
    let b = exp1();
    let (c, rm): (f64, f64) = (2.0, 5.0);
    let edge = c * (-rm).exp();
    let exact = edge * edge;
    let bound = tail_envelope(&b, edge, rm);
    assert!(bound >= exact * 0.999 && bound < 3.0 * exact);
}
