//! Laplace-type integrals of log-concave profiles, level-set volumes, the
//! sandwich/doubling/tail inequalities for convex profiles, and the
//! epsilon_1 / eta-hat error machinery.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{Modulus, Profile1, Transverse};
use crate::scaled::ScaledValue;

/// Truncation level for quadrature windows, in units of eps.  The tail
/// bound for convex profiles makes the discarded mass below 1e-12 relative
/// in dimensions up to 3.
pub const TRUNCATION_LAMBDA: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LaplaceMethod {
    Quadrature,
    LevelsetMc,
}

/// Value of a Laplace integral; `stderr` is 0 for quadrature.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplaceResult {
    pub value: f64,
    pub method: LaplaceMethod,
    pub stderr: f64,
}

/// Adaptive Simpson quadrature with recursive error control.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 48)
}

/// `int_R exp(-g(s)/eps) ds` for a convex profile `g` with `g(0) = 0`,
/// truncated where `g > 40 eps` and integrated by adaptive quadrature to
/// relative accuracy 1e-8.
pub fn laplace_1d(g: &Profile1, eps: f64) -> Result<LaplaceResult> {
    assert!(eps > 0.0);
    let level = TRUNCATION_LAMBDA * eps;
    let lo = g.root_below(level)?;
    let hi = g.root_above(level)?;
    let f = |s: f64| (-g.eval(s) / eps).exp();
    // crude scale estimate for the absolute tolerance
    let scale = (hi - lo) * 0.25;
    let value = adaptive_simpson(&f, lo, hi, scale * 1e-10);
    Ok(LaplaceResult { value, method: LaplaceMethod::Quadrature, stderr: 0.0 })
}

/// `int_{R^k} exp(-G(x')/eps) dx'` for a transverse profile, `k <= 3`.
///
/// Separable profiles use tensorized 1-D quadrature; general profiles fall
/// back to Monte Carlo over the truncation box with a reported standard
/// error.  The empty profile integrates to 1 by convention.
pub fn laplace_nd(g: &Transverse, eps: f64) -> Result<LaplaceResult> {
    assert!(eps > 0.0);
    match g {
        Transverse::Empty => {
            Ok(LaplaceResult { value: 1.0, method: LaplaceMethod::Quadrature, stderr: 0.0 })
        }
        Transverse::Separable(ps) => {
            let mut value = 1.0;
            for p in ps {
                value *= laplace_1d(p, eps)?.value;
            }
            Ok(LaplaceResult { value, method: LaplaceMethod::Quadrature, stderr: 0.0 })
        }
        Transverse::General { dim, .. } => {
            let bbox = g.bounding_box(TRUNCATION_LAMBDA * eps)?;
            let vol: f64 = bbox.iter().map(|&(lo, hi)| hi - lo).product();
            let n = 400_000usize;
            let mut rng = ChaCha8Rng::seed_from_u64(0x1ace_0002);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            let mut x = vec![0.0; *dim];
            for _ in 0..n {
                for (xi, &(lo, hi)) in x.iter_mut().zip(&bbox) {
                    *xi = rng.gen_range(lo..hi);
                }
                let v = (-g.eval(&x) / eps).exp();
                sum += v;
                sum2 += v * v;
            }
            let mean = sum / n as f64;
            let var = (sum2 / n as f64 - mean * mean).max(0.0);
            Ok(LaplaceResult {
                value: vol * mean,
                method: LaplaceMethod::LevelsetMc,
                stderr: vol * (var / n as f64).sqrt(),
            })
        }
    }
}

/// Volume estimate with its standard error (0 when exact).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VolumeResult {
    pub value: f64,
    pub stderr: f64,
}

/// Length of the 1-D sublevel set `{g < t}` by bisection on both boundary
/// roots; exact to 1e-10.
pub fn levelset_length(g: &Profile1, t: f64) -> Result<f64> {
    assert!(t > 0.0);
    Ok(g.root_above(t)? - g.root_below(t)?)
}

/// Monte-Carlo estimate of `|{G < t}|` over the given sampling box using
/// grid-stratified jittered sampling.  Errors with `BoxTooSmall` if the
/// level set touches the box boundary.
pub fn levelset_volume(
    g: &Transverse,
    t: f64,
    sampler_box: &[(f64, f64)],
    count: usize,
) -> Result<VolumeResult> {
    assert!(t > 0.0);
    let k = g.dim();
    if k == 0 {
        return Ok(VolumeResult { value: 1.0, stderr: 0.0 });
    }
    assert_eq!(sampler_box.len(), k);
    if k == 1 {
        if let Transverse::Separable(ps) = g {
            let lo = ps[0].root_below(t)?;
            let hi = ps[0].root_above(t)?;
            if lo <= sampler_box[0].0 || hi >= sampler_box[0].1 {
                return Err(Error::BoxTooSmall);
            }
            return Ok(VolumeResult { value: hi - lo, stderr: 0.0 });
        }
    }
    // boundary check: the set must not touch the box faces
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ace_0003);
    for axis in 0..k {
        for side in 0..2 {
            for _ in 0..200 {
                let mut x: Vec<f64> = sampler_box.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
                x[axis] = if side == 0 { sampler_box[axis].0 } else { sampler_box[axis].1 };
                if g.eval(&x) < t {
                    return Err(Error::BoxTooSmall);
                }
            }
        }
    }
    // stratified sampling: jittered grid with roughly `count` cells
    let per_axis = (count as f64).powf(1.0 / k as f64).floor() as usize;
    let per_axis = per_axis.max(2);
    let cells: usize = per_axis.pow(k as u32);
    let vol: f64 = sampler_box.iter().map(|&(lo, hi)| hi - lo).product();
    let mut hits = 0usize;
    let mut idx = vec![0usize; k];
    let mut x = vec![0.0; k];
    for _ in 0..cells {
        for (d, &(lo, hi)) in sampler_box.iter().enumerate() {
            let w = (hi - lo) / per_axis as f64;
            x[d] = lo + (idx[d] as f64 + rng.gen::<f64>()) * w;
        }
        if g.eval(&x) < t {
            hits += 1;
        }
        // advance the grid index
        for d in 0..k {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
        }
    }
    let p = hits as f64 / cells as f64;
    // binomial bound; conservative for stratified samples
    let stderr = vol * (p * (1.0 - p) / cells as f64).sqrt();
    Ok(VolumeResult { value: vol * p, stderr })
}

/// The explicit constant `C(n) = 2^n sum_j e^{-j} (j+1)^n` from the upper
/// sandwich bound.
pub fn sandwich_constant(n: usize) -> f64 {
    let pow = 2f64.powi(n as i32);
    let sum: f64 = (0..200).map(|j| (-(j as f64)).exp() * ((j + 1) as f64).powi(n as i32)).sum();
    pow * sum
}

/// Diagnostics for the convex-profile lemma: sandwich ratio, doubling
/// ratios and tail fraction, each with its admissible range and a pass
/// flag.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexLemmaReport {
    pub dim: usize,
    /// `int e^{-G/eps} / |{G < eps}|`, must lie in `[e^{-1}, C(n)]`.
    pub sandwich_ratio: f64,
    pub sandwich_lo: f64,
    pub sandwich_hi: f64,
    pub sandwich_ok: bool,
    /// `|{G < 2t}| / |{G < t}|` for t in {eps, 2 eps, 4 eps}; each `<= 2^n`.
    pub doubling_ratios: Vec<f64>,
    pub doubling_ok: bool,
    /// tail mass fraction beyond `Lambda eps` for Lambda = 20, checked
    /// against `C e^{-Lambda} Lambda^n`.
    pub tail_fraction: f64,
    pub tail_bound: f64,
    pub tail_ok: bool,
    pub passed: bool,
}

/// `int_{G >= level} e^{-G/eps}`, computed directly so the tiny tail is
/// never a cancellation of two near-equal estimates.  The region beyond
/// `2 * level` contributes less than `e^{-2 level/eps}` relative and is
/// dropped.
fn integral_over_superlevel(g: &Transverse, eps: f64, level: f64) -> Result<f64> {
    let cap = 2.0 * level;
    match g {
        Transverse::Empty => Ok(0.0),
        Transverse::Separable(ps) if ps.len() == 1 => {
            let p = &ps[0];
            let f = |s: f64| (-p.eval(s) / eps).exp();
            let (lo_out, lo_in) = (p.root_below(cap)?, p.root_below(level)?);
            let (hi_in, hi_out) = (p.root_above(level)?, p.root_above(cap)?);
            let tol = |a: f64, b: f64| (b - a) * (-level / eps).exp() * 1e-8;
            Ok(adaptive_simpson(&f, lo_out, lo_in, tol(lo_out, lo_in))
                + adaptive_simpson(&f, hi_in, hi_out, tol(hi_in, hi_out)))
        }
        _ => {
            let bbox = g.bounding_box(cap)?;
            let vol: f64 = bbox.iter().map(|&(lo, hi)| hi - lo).product();
            let n = 800_000usize;
            let mut rng = ChaCha8Rng::seed_from_u64(0x1ace_0004);
            let mut sum = 0.0;
            let mut x = vec![0.0; g.dim()];
            for _ in 0..n {
                for (xi, &(lo, hi)) in x.iter_mut().zip(&bbox) {
                    *xi = rng.gen_range(lo..hi);
                }
                let v = g.eval(&x);
                if v >= level {
                    sum += (-v / eps).exp();
                }
            }
            Ok(vol * sum / n as f64)
        }
    }
}

/// Check the sandwich, doubling, and tail inequalities for a convex
/// profile at noise level `eps`.  The report carries pass/fail flags
/// rather than erroring.
pub fn check_convex_lemma(g: &Transverse, eps: f64, mc_count: usize) -> Result<ConvexLemmaReport> {
    let k = g.dim().max(1);
    let total = laplace_nd(g, eps)?.value;
    let vol_at = |t: f64| -> Result<f64> {
        if g.dim() == 1 {
            if let Transverse::Separable(ps) = g {
                return levelset_length(&ps[0], t);
            }
        }
        // a sampler box snug around the level set keeps the hit fraction
        // high; 5% inflation clears the boundary-contact check
        let bbox: Vec<(f64, f64)> =
            g.bounding_box(t)?.iter().map(|&(lo, hi)| (1.05 * lo, 1.05 * hi)).collect();
        Ok(levelset_volume(g, t, &bbox, mc_count)?.value)
    };

    let v_eps = vol_at(eps)?;
    let sandwich_ratio = total / v_eps;
    let sandwich_lo = (-1.0f64).exp();
    let sandwich_hi = sandwich_constant(k);
    // 1% slack for the Monte-Carlo volumes
    let slack = 1.01;
    let sandwich_ok =
        sandwich_ratio >= sandwich_lo / slack && sandwich_ratio <= sandwich_hi * slack;

    let mut doubling_ratios = Vec::new();
    let mut doubling_ok = true;
    for t in [eps, 2.0 * eps, 4.0 * eps] {
        let r = vol_at(2.0 * t)? / vol_at(t)?;
        if r > 2f64.powi(k as i32) * slack {
            doubling_ok = false;
        }
        doubling_ratios.push(r);
    }

    let lambda = 20.0;
    let tail = integral_over_superlevel(g, eps, lambda * eps)?;
    let tail_fraction = tail / total;
    let tail_bound = sandwich_constant(k) * (-lambda).exp() * lambda.powi(k as i32);
    let tail_ok = tail_fraction <= tail_bound * slack;

    let passed = sandwich_ok && doubling_ok && tail_ok;
    Ok(ConvexLemmaReport {
        dim: k,
        sandwich_ratio,
        sandwich_lo,
        sandwich_hi,
        sandwich_ok,
        doubling_ratios,
        doubling_ok,
        tail_fraction,
        tail_bound,
        tail_ok,
        passed,
    })
}

/// The epsilon_1 / eta-hat scales attached to a noise level.
///
/// `eps1` solves `sqrt(omega(eps1) * eps1) = eps`; `eta_hat` is
/// `eta(C * eps1/eps)` with `eta(x) = exp(-1/x) x^n`.  Reported as a
/// diagnostic; the constant C is not pinned down by the theory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorScale {
    pub eps: f64,
    pub eps1: f64,
    pub eta_hat: f64,
}

pub fn eta(x: f64, n: usize) -> f64 {
    (-1.0 / x).exp() * x.powi(n as i32)
}

/// Solve for eps1 by monotone bisection and evaluate eta-hat.
pub fn error_scale(omega: &Modulus, eps: f64, n: usize, c: f64) -> Result<ErrorScale> {
    assert!(eps > 0.0);
    let phi = |e1: f64| (omega.eval(e1) * e1).sqrt() - eps;
    let lo0 = eps;
    let hi0 = (4.0 * omega.delta0).max(10.0);
    if phi(lo0) > 0.0 || phi(hi0) < 0.0 {
        return Err(Error::NoRoot);
    }
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps1 = 0.5 * (lo + hi);
    Ok(ErrorScale { eps, eps1, eta_hat: eta(c * eps1 / eps, n) })
}

/// Geodesic-distance formula from the saddle's downhill profile:
/// `d_eps ~= e^{F(z)/eps} int e^{-g/eps}`.
pub fn d_eps_formula(g: &Profile1, f_z: f64, eps: f64) -> Result<ScaledValue> {
    Ok(ScaledValue::new(laplace_1d(g, eps)?.value, f_z))
}

/// Separating-surface formula from the transverse profile:
/// `V_eps ~= e^{-F(z)/eps} int e^{-G/eps}`.
pub fn v_eps_formula(g: &Transverse, f_z: f64, eps: f64) -> Result<ScaledValue> {
    Ok(ScaledValue::new(laplace_nd(g, eps)?.value, -f_z))
}
