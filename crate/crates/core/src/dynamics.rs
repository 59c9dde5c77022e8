//! Monte-Carlo transition times for the overdamped diffusion
//! `dX = -grad F dt + sqrt(2 eps) dB`, and the capacity-based exit-time
//! predictions they are checked against.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{laplace_nd, sandwich_constant};
use crate::error::{Error, Result};
use crate::potential::{Potential, Transverse};
use crate::scaled::ScaledValue;

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub max_steps: usize,
    pub paths: usize,
    pub seed: u64,
    /// a path counts as arrived once within this distance of the target
    pub target_radius: f64,
    /// leaving this box censors the path
    pub domain_box: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimResult {
    /// mean first-arrival time over the uncensored paths
    pub mean: f64,
    pub stderr: f64,
    pub hits: usize,
    pub censored: usize,
    /// per-path first-arrival times, NaN for censored paths; index = path
    pub times: Vec<f64>,
}

/// Simulate transition times from `start` to the ball around `target` with
/// Euler-Maruyama.
///
/// Each path draws from its own counter-based stream
/// (`set_stream(path index)`), so the result is independent of thread
/// count and identical across runs with the same seed.
pub fn simulate_transition(
    potential: &Potential,
    eps: f64,
    start: &[f64],
    target: &[f64],
    cfg: &SimConfig,
) -> Result<SimResult> {
    assert!(eps > 0.0);
    let n = potential.dim;
    if start.len() != n || target.len() != n || cfg.domain_box.len() != n {
        return Err(Error::InvalidInput("dimension mismatch in simulation setup".into()));
    }
    if cfg.dt <= 0.0 || cfg.paths == 0 {
        return Err(Error::InvalidInput("dt and paths must be positive".into()));
    }
    let diameter: f64 = cfg
        .domain_box
        .iter()
        .map(|&(lo, hi)| (hi - lo) * (hi - lo))
        .sum::<f64>()
        .sqrt();
    let sigma = (2.0 * eps).sqrt();
    let r2 = cfg.target_radius * cfg.target_radius;

    let times: Vec<f64> = (0..cfg.paths)
        .into_par_iter()
        .map(|path| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(path as u64);
            let mut x = start.to_vec();
            let mut g = vec![0.0; n];
            for step in 0..cfg.max_steps {
                let grad = potential.grad(&x);
                g.copy_from_slice(&grad);
                let mut move2 = 0.0;
                for d in 0..n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let dx = -g[d] * cfg.dt + sigma * cfg.dt.sqrt() * z;
                    move2 += dx * dx;
                    x[d] += dx;
                }
                if !move2.is_finite() || move2.sqrt() > diameter {
                    return Err(Error::UnstableStep { step: move2.sqrt() });
                }
                let mut out = false;
                let mut d2 = 0.0;
                for d in 0..n {
                    let (lo, hi) = cfg.domain_box[d];
                    if x[d] < lo || x[d] > hi {
                        out = true;
                    }
                    let dd = x[d] - target[d];
                    d2 += dd * dd;
                }
                if d2 <= r2 {
                    return Ok((step + 1) as f64 * cfg.dt);
                }
                if out {
                    return Ok(f64::NAN);
                }
            }
            Ok(f64::NAN)
        })
        .collect::<Result<Vec<f64>>>()?;

    // sequential reduction in path order: bitwise reproducible
    let mut sum = 0.0;
    let mut sum2 = 0.0;
    let mut hits = 0usize;
    for &t in &times {
        if t.is_nan() {
            continue;
        }
        sum += t;
        sum2 += t * t;
        hits += 1;
    }
    if hits == 0 {
        return Err(Error::EmptyResult);
    }
    let mean = sum / hits as f64;
    let var = (sum2 / hits as f64 - mean * mean).max(0.0);
    Ok(SimResult {
        mean,
        stderr: (var / hits as f64).sqrt(),
        hits,
        censored: cfg.paths - hits,
        times,
    })
}

/// Gibbs mass of a group of wells, `sum_x e^{-F(x)/eps} int e^{-G_x/eps}`,
/// from the minima's full-dimensional profiles.
pub fn gibbs_mass_estimate(wells: &[(f64, &Transverse)], eps: f64) -> Result<ScaledValue> {
    let mut iter = wells.iter();
    let Some(&(f0, g0)) = iter.next() else {
        return Err(Error::EmptyResult);
    };
    let mut acc = ScaledValue::new(laplace_nd(g0, eps)?.value, -f0);
    for &(f, g) in iter {
        acc = acc.add(&ScaledValue::new(laplace_nd(g, eps)?.value, -f), eps);
    }
    Ok(acc)
}

/// Mean-exit-time prediction `E[tau] ~= gibbs_mass / capacity`.
pub fn predict_mean_exit_time(mass: &ScaledValue, cap: &ScaledValue) -> Result<ScaledValue> {
    Ok(mass.mul(&cap.recip()?))
}

/// Two-sided exit-time bound from the level-set volume of the starting
/// well: the Gibbs mass is sandwiched between `e^{-1} |{G < eps}|` and
/// `C(n) |{G < eps}|`, and the capacity estimate carries a relative error
/// `c eps^{alpha/2}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitTimeBound {
    pub lower: ScaledValue,
    pub upper: ScaledValue,
    pub alpha: f64,
    pub c: f64,
}

pub fn exit_time_bounds(
    start_volume: f64,
    f_min: f64,
    n: usize,
    cap: &ScaledValue,
    eps: f64,
    c: f64,
    alpha: f64,
) -> Result<ExitTimeBound> {
    if start_volume <= 0.0 {
        return Err(Error::InvalidInput("level-set volume must be positive".into()));
    }
    let inv_cap = cap.recip()?;
    let margin = c * eps.powf(alpha / 2.0);
    let lower = inv_cap
        .mul(&ScaledValue::new((-1.0f64).exp() * start_volume, -f_min))
        .scale((1.0 - margin).max(0.0));
    let upper = inv_cap
        .mul(&ScaledValue::new(sandwich_constant(n) * start_volume, -f_min))
        .scale(1.0 + margin);
    Ok(ExitTimeBound { lower, upper, alpha, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::catalog::catalog_entry;
    use crate::potential::Profile1;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// Mean time for the OU process `dX = -X dt + sqrt(2 eps) dB` started
    /// at 0 to reach the level `a > 0`: solves `eps u'' - x u' = -1` on
    /// `(-L, a)` with `u(a) = 0` and reflection `u'(-L) = 0` by central
    /// differences and Thomas elimination.
    fn ou_hitting_oracle(eps: f64, a: f64, l: f64, m: usize) -> f64 {
        let h = (a + l) / m as f64;
        // unknowns u_0..u_{m-1} at x_i = -l + i h; u_m = 0 (Dirichlet)
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![-1.0; m];
        for i in 0..m {
            let x = -l + i as f64 * h;
            sub[i] = eps / (h * h) + x / (2.0 * h);
            diag[i] = -2.0 * eps / (h * h);
            sup[i] = eps / (h * h) - x / (2.0 * h);
        }
        // reflecting end: ghost u_{-1} = u_1
        sup[0] += sub[0];
        sub[0] = 0.0;
        for i in 1..m {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut u = vec![0.0; m];
        u[m - 1] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            u[i] = (rhs[i] - sup[i] * u[i + 1]) / diag[i];
        }
        // value at x = 0
        let i0 = (l / h).round() as usize;
        u[i0]
    }

    fn ou_potential() -> Potential {
        Potential::new(
            1,
            std::sync::Arc::new(|x: &[f64]| 0.5 * x[0] * x[0]),
            std::sync::Arc::new(|x: &[f64]| vec![x[0]]),
            Some(std::sync::Arc::new(|_: &[f64]| {
                nalgebra::DMatrix::from_element(1, 1, 1.0)
            })),
            10.0,
            crate::potential::Modulus::power_law(1.0, 1.5),
        )
    }

    #[test]
    fn ou_hitting_time_matches_bvp() {
        // in one dimension, entering the ball of radius 0.1 around 0.6
        // from below is the same event as reaching the level 0.5
        let eps = 0.25;
        let pot = ou_potential();
        let cfg = SimConfig {
            dt: 1e-4,
            max_steps: 5_000_000,
            paths: 3000,
            seed: 99,
            target_radius: 0.1,
            domain_box: vec![(-10.0, 10.0)],
        };
        let r = simulate_transition(&pot, eps, &[0.0], &[0.6], &cfg).unwrap();
        assert_eq!(r.censored, 0);
        let oracle = ou_hitting_oracle(eps, 0.5, 6.0, 24_000);
        let err = (r.mean - oracle).abs();
        assert!(
            err < 4.0 * r.stderr + 0.03 * oracle,
            "mc {} vs bvp {oracle} (stderr {})",
            r.mean,
            r.stderr
        );
    }

    #[test]
    fn double_well_1d_transition_matches_kramers() {
        let e = catalog_entry("double_well_1d").unwrap();
        let eps = 0.1;
        let cfg = SimConfig {
            dt: 1e-3,
            max_steps: 3_000_000,
            paths: 600,
            seed: 4242,
            target_radius: 0.2,
            domain_box: vec![(-2.5, 2.5)],
        };
        let r = simulate_transition(&e.potential, eps, &[-1.0], &[1.0], &cfg).unwrap();
        assert_eq!(r.censored, 0);
        // Kramers: tau = 2 pi / sqrt(F''(min) |F''(saddle)|) e^{0.25/eps}
        let tau = 2.0 * PI / (2.0f64).sqrt() * (0.25f64 / eps).exp();
        let ratio = r.mean / tau;
        assert!(
            (0.5..=2.0).contains(&ratio),
            "mc mean {} vs kramers {tau} (ratio {ratio})",
            r.mean
        );
    }

    #[test]
    fn simulation_is_reproducible() {
        let e = catalog_entry("double_well_1d").unwrap();
        let cfg = SimConfig {
            dt: 1e-3,
            max_steps: 500_000,
            paths: 50,
            seed: 7,
            target_radius: 0.2,
            domain_box: vec![(-2.5, 2.5)],
        };
        let a = simulate_transition(&e.potential, 0.15, &[-1.0], &[1.0], &cfg).unwrap();
        let b = simulate_transition(&e.potential, 0.15, &[-1.0], &[1.0], &cfg).unwrap();
        assert_eq!(a.times, b.times);
        let mut cfg2 = cfg.clone();
        cfg2.seed = 8;
        let c = simulate_transition(&e.potential, 0.15, &[-1.0], &[1.0], &cfg2).unwrap();
        assert_ne!(a.times, c.times);
    }

    #[test]
    fn unstable_step_detected() {
        let e = catalog_entry("double_well_1d").unwrap();
        let cfg = SimConfig {
            dt: 1e6,
            max_steps: 100,
            paths: 4,
            seed: 1,
            target_radius: 0.2,
            domain_box: vec![(-2.5, 2.5)],
        };
        let r = simulate_transition(&e.potential, 0.1, &[-1.0], &[1.0], &cfg);
        assert!(matches!(r, Err(Error::UnstableStep { .. })));
    }

    #[test]
    fn gibbs_mass_gaussian_wells() {
        let g = Transverse::Separable(vec![Profile1::quadratic(1.0), Profile1::quadratic(1.0)]);
        let eps = 0.05;
        let one = gibbs_mass_estimate(&[(0.0, &g)], eps).unwrap();
        assert_relative_eq!(one.mantissa, 2.0 * PI * eps, max_relative = 1e-8);
        assert_eq!(one.shift, 0.0);
        // two equal wells double the mass; a higher well is negligible
        let two = gibbs_mass_estimate(&[(0.0, &g), (0.0, &g)], eps).unwrap();
        assert_relative_eq!(two.ratio_at(&one, eps), 2.0, max_relative = 1e-10);
        let with_high = gibbs_mass_estimate(&[(0.0, &g), (0.5, &g)], eps).unwrap();
        assert_relative_eq!(with_high.ratio_at(&one, eps), 1.0, max_relative = 1e-4);
    }

    #[test]
    fn prediction_reproduces_kramers_time() {
        // mass/cap with harmonic inputs must equal the classical law
        let eps = 0.05;
        let g = Transverse::Separable(vec![
            Profile1::quadratic(2.0),
            Profile1::quadratic(1.0),
        ]);
        let mass = gibbs_mass_estimate(&[(0.0, &g)], eps).unwrap();
        let cap = crate::capacity::eyring_kramers_capacity(&[-1.0, 1.0], 0.25, eps).unwrap();
        let tau = predict_mean_exit_time(&mass, &cap).unwrap();
        let classical =
            crate::capacity::eyring_kramers_time(&[2.0, 1.0], 0.0, &[-1.0, 1.0], 0.25).unwrap();
        assert_relative_eq!(tau.ratio_at(&classical, eps), 1.0, max_relative = 1e-6);
    }

    #[test]
    fn exit_bounds_sandwich_prediction() {
        let eps = 0.05;
        let g = Transverse::Separable(vec![Profile1::quadratic(1.0)]);
        let mass = gibbs_mass_estimate(&[(0.0, &g)], eps).unwrap();
        let cap = ScaledValue::new(0.3, -0.25);
        let tau = predict_mean_exit_time(&mass, &cap).unwrap();
        let vol = crate::asymptotics::levelset_length(&Profile1::quadratic(1.0), eps).unwrap();
        let b = exit_time_bounds(vol, 0.0, 1, &cap, eps, 1.0, 1.0).unwrap();
        assert!(b.lower.ln_at(eps) <= tau.ln_at(eps));
        assert!(b.upper.ln_at(eps) >= tau.ln_at(eps));
    }

    #[test]
    fn arrhenius_slope_on_double_well() {
        let e = catalog_entry("double_well_1d").unwrap();
        let mut lns = Vec::new();
        let eps_list = [0.16, 0.11];
        for &eps in &eps_list {
            let cfg = SimConfig {
                dt: 1e-3,
                max_steps: 2_000_000,
                paths: 400,
                seed: 31,
                target_radius: 0.2,
                domain_box: vec![(-2.5, 2.5)],
            };
            let r = simulate_transition(&e.potential, eps, &[-1.0], &[1.0], &cfg).unwrap();
            lns.push(r.mean.ln());
        }
        let slope = (lns[1] - lns[0]) / (1.0 / eps_list[1] - 1.0 / eps_list[0]);
        assert!(
            (slope - 0.25).abs() < 0.06,
            "arrhenius slope {slope}, expected about the barrier 0.25"
        );
    }
}
