use std::sync::Arc;

use approx::assert_relative_eq;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;

#[test]
fn quadratic_double_well_closed_form() {
    let p1 = make_quadratic_double_well(1);
    assert_relative_eq!(p1.eval(&[0.0]), 0.25, epsilon = 1e-15);
    assert_relative_eq!(p1.grad(&[0.0])[0], 0.0, epsilon = 1e-15);
    assert_relative_eq!(p1.hessian(&[0.0])[(0, 0)], -1.0, epsilon = 1e-15);

    let p2 = make_quadratic_double_well(2);
    assert_relative_eq!(p2.eval(&[1.0, 0.0]), 0.0, epsilon = 1e-15);
    let h = p2.hessian(&[1.0, 0.0]);
    assert_relative_eq!(h[(0, 0)], 2.0, epsilon = 1e-15);
    assert_relative_eq!(h[(1, 1)], 1.0, epsilon = 1e-15);
    let hs = p2.hessian(&[0.0, 0.0]);
    assert_relative_eq!(hs[(0, 0)], -1.0, epsilon = 1e-15);
    assert_relative_eq!(hs[(1, 1)], 1.0, epsilon = 1e-15);
}

#[test]
fn degenerate_saddle_closed_form() {
    let p = make_degenerate_saddle(4);
    assert_relative_eq!(p.eval(&[0.0, 0.0]), 0.0, epsilon = 1e-15);
    assert_eq!(p.grad(&[0.0, 0.0]), vec![0.0, 0.0]);
    let h = p.hessian(&[0.0, 0.0]);
    assert_relative_eq!(h[(0, 0)], 0.0, epsilon = 1e-15);
    assert_relative_eq!(h[(1, 1)], 1.0, epsilon = 1e-15);
    // F(t, 0) = -t^4 + t^8/2 for small t
    let t = 0.05f64;
    assert_relative_eq!(p.eval(&[t, 0.0]), -t.powi(4) + 0.5 * t.powi(8), epsilon = 1e-15);

    let e6 = catalog_entry("degenerate_p6").unwrap();
    let saddle = e6.saddles().next().unwrap();
    let g = saddle.profile.g.as_ref().unwrap();
    assert_relative_eq!(g.eval(0.5), 0.5f64.powi(6), epsilon = 1e-15);
}

#[test]
fn catalog_gradients_vanish_at_listed_points() {
    for entry in catalog() {
        for cp in &entry.critical_points {
            let gn = entry.potential.grad_norm(&cp.location);
            assert!(gn < 1e-8, "{}: |grad|={gn:.3e} at {:?}", entry.name, cp.location);
            assert_relative_eq!(
                entry.potential.eval(&cp.location),
                cp.value,
                epsilon = 1e-10
            );
        }
    }
}

#[test]
fn finite_difference_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for entry in catalog() {
        let n = entry.potential.dim;
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let g = entry.potential.grad(&x);
            let fd = entry.potential.fd_grad(&x, 1e-4);
            for i in 0..n {
                let scale = 1.0 + g[i].abs();
                assert!(
                    (g[i] - fd[i]).abs() <= 1e-5 * scale,
                    "{}: grad mismatch at {:?}",
                    entry.name,
                    x
                );
            }
            let h = entry.potential.hessian(&x);
            let hfd = entry.potential.fd_hessian(&x, 1e-4);
            for i in 0..n {
                for j in 0..n {
                    let scale = 1.0 + h[(i, j)].abs();
                    assert!((h[(i, j)] - hfd[(i, j)]).abs() <= 1e-5 * scale);
                }
            }
        }
    }
}

#[test]
fn quadratic_growth_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for entry in catalog() {
        let n = entry.potential.dim;
        let c0 = entry.potential.growth_const;
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 > 100.0 {
                continue;
            }
            let f = entry.potential.eval(&x);
            assert!(
                f + c0 - r2 / c0 >= 0.0,
                "{}: growth bound fails at {:?} (F={f})",
                entry.name,
                x
            );
        }
    }
}

#[test]
fn catalog_profiles_are_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for entry in catalog() {
        for cp in &entry.critical_points {
            if let Some(g) = &cp.profile.g {
                for _ in 0..200 {
                    let a = rng.gen_range(-1.0..1.0);
                    let b = rng.gen_range(-1.0..1.0);
                    let mid = g.eval(0.5 * (a + b));
                    assert!(mid <= 0.5 * (g.eval(a) + g.eval(b)) + 1e-12);
                }
            }
            if let Transverse::Separable(ps) = &cp.profile.transverse {
                for p in ps {
                    for _ in 0..200 {
                        let a = rng.gen_range(-1.0..1.0);
                        let b = rng.gen_range(-1.0..1.0);
                        assert!(p.eval(0.5 * (a + b)) <= 0.5 * (p.eval(a) + p.eval(b)) + 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn modulus_delta0_and_vanishing_ratio() {
    let m = Modulus::power_law(1.0, 1.5);
    // omega(d) <= d/8 iff sqrt(d) <= 1/8 iff d <= 1/64; delta0 = 1/256
    assert_relative_eq!(m.delta0, 1.0 / 256.0, max_relative = 1e-6);
    let mut prev = f64::INFINITY;
    let mut s = 1.0;
    for _ in 0..20 {
        s /= 2.0;
        let ratio = m.eval(s) / s;
        assert!(ratio < prev);
        prev = ratio;
    }
    assert!(prev < 1e-3);
}

#[test]
fn structural_check_passes_on_double_well_saddle() {
    let entry = catalog_entry("double_well_2d").unwrap();
    let mut pot = entry.potential.clone();
    pot.omega = Modulus::new(Arc::new(|s: f64| 10.0 * s * s)).unwrap_or_else(|_| Modulus {
        f: Arc::new(|s: f64| 10.0 * s * s),
        delta0: 0.0,
    });
    let saddle = entry.saddles().next().unwrap();
    let rep =
        verify_structural_assumptions(&pot, saddle.value, &saddle.profile, 0.05, 10_000).unwrap();
    assert!(rep.passed, "max violation {:.3e}", rep.max_violation);
}

#[test]
fn structural_check_rejects_wrong_profile() {
    let entry = catalog_entry("double_well_2d").unwrap();
    let wrong = LocalProfile::saddle(
        Profile1::power(4.0),
        Transverse::Separable(vec![Profile1::quadratic(1.0)]),
        Frame::identity(vec![0.0, 0.0]),
    );
    let rep =
        verify_structural_assumptions(&entry.potential, 0.25, &wrong, 0.05, 10_000).unwrap();
    assert!(!rep.passed, "an O(s^2) violation should be detected");
}

#[test]
fn structural_check_empty_neighborhood() {
    let entry = catalog_entry("double_well_2d").unwrap();
    let saddle = entry.saddles().next().unwrap();
    let rep =
        verify_structural_assumptions(&entry.potential, saddle.value, &saddle.profile, 0.0, 100)
            .unwrap();
    assert!(rep.passed);
    assert_eq!(rep.samples, 0);
}

#[test]
fn structural_check_on_default_omega_catalog() {
    // the shipped omega (K s^{3/2}, K=1) covers every catalog profile at
    // small delta
    for name in ["double_well_2d", "degenerate_p4", "triple_parallel", "chain_series_3"] {
        let entry = catalog_entry(name).unwrap();
        for cp in &entry.critical_points {
            let rep = verify_structural_assumptions(
                &entry.potential,
                cp.value,
                &cp.profile,
                0.01,
                2_000,
            )
            .unwrap();
            assert!(
                rep.passed,
                "{name} at {:?}: violation {:.3e}",
                cp.location, rep.max_violation
            );
        }
    }
}

#[test]
fn profile_roots_bracket_levels() {
    let g = Profile1::power(4.0);
    let r = g.root_above(0.1).unwrap();
    assert_relative_eq!(r, 0.1f64.powf(0.25), max_relative = 1e-9);
    let l = g.root_below(0.1).unwrap();
    assert_relative_eq!(l, -0.1f64.powf(0.25), max_relative = 1e-9);
    let c = Profile1::conical();
    assert_relative_eq!(c.root_above(0.2).unwrap(), 0.2, max_relative = 1e-9);
}
