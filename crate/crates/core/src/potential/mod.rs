//! Potentials, their derivatives, the modulus of continuity and local
//! convex profiles near critical points.

pub mod catalog;
pub mod poly;

pub use catalog::{
    catalog, catalog_entry, chain_series_3, make_degenerate_saddle, make_quadratic_double_well,
    triple_parallel, CatalogEntry, CatalogPoint,
};

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Modulus of continuity bounding how far the potential may deviate from
/// its convex local profile, measured in the profile value.
///
/// `delta0` is the largest number for which `omega(d) <= d/8` holds for all
/// `d <= 4*delta0`.
#[derive(Clone)]
pub struct Modulus {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub delta0: f64,
}

impl Modulus {
    pub fn new(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<Self> {
        let delta0 = compute_delta0(&*f)?;
        Ok(Modulus { f, delta0 })
    }

    /// `omega(s) = k * s^p`.  The default catalog choice is `p = 3/2`: the
    /// Taylor remainder of a C^2 potential near a non-degenerate critical
    /// point is o(s) in the profile value and s^{3/2} is a concrete bound
    /// that the catalog entries satisfy.
    pub fn power_law(k: f64, p: f64) -> Self {
        let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(move |s: f64| k * s.powf(p));
        let delta0 = compute_delta0(&*f).unwrap_or(0.0);
        Modulus { f, delta0 }
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }
}

/// Bisection for the largest `d0 <= 10` with `omega(d) <= d/8` on `(0, 4*d0]`.
fn compute_delta0(f: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Result<f64> {
    let ok = |d0: f64| -> bool {
        let m = 256;
        (1..=m).all(|i| {
            let d = 4.0 * d0 * i as f64 / m as f64;
            f(d) <= d / 8.0 * (1.0 + 1e-12)
        })
    };
    if !ok(1e-9) {
        return Err(Error::NoRoot);
    }
    let (mut lo, mut hi) = (1e-9, 10.0);
    if ok(hi) {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A smooth scalar field with analytic gradient and optional Hessian.
#[derive(Clone)]
pub struct Potential {
    pub dim: usize,
    eval: ScalarFn,
    grad: VecFn,
    hessian: Option<MatFn>,
    /// C0 in the quadratic growth bound `F(x) >= |x|^2/C0 - C0`.
    pub growth_const: f64,
    pub omega: Modulus,
}

impl Potential {
    pub fn new(
        dim: usize,
        eval: ScalarFn,
        grad: VecFn,
        hessian: Option<MatFn>,
        growth_const: f64,
        omega: Modulus,
    ) -> Self {
        Potential { dim, eval, grad, hessian, growth_const, omega }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        (self.grad)(x)
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.hessian {
            Some(h) => h(x),
            None => self.fd_hessian(x, 1e-5),
        }
    }

    pub fn grad_norm(&self, x: &[f64]) -> f64 {
        self.grad(x).iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Central finite differences of `eval`; used by consistency tests.
    pub fn fd_grad(&self, x: &[f64], h: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut xp = x.to_vec();
        for i in 0..self.dim {
            xp[i] = x[i] + h;
            let fp = self.eval(&xp);
            xp[i] = x[i] - h;
            let fm = self.eval(&xp);
            xp[i] = x[i];
            out[i] = (fp - fm) / (2.0 * h);
        }
        out
    }

    /// Central finite differences of `grad`.
    pub fn fd_hessian(&self, x: &[f64], h: f64) -> DMatrix<f64> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        for j in 0..n {
            xp[j] = x[j] + h;
            let gp = self.grad(&xp);
            xp[j] = x[j] - h;
            let gm = self.grad(&xp);
            xp[j] = x[j];
            for i in 0..n {
                m[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        // symmetrize
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

/// A one-dimensional convex profile with `f(0) = 0` and a proper minimum
/// at the origin.
#[derive(Clone)]
pub struct Profile1 {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Profile1 {
    pub fn from_fn(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Self {
        Profile1 { f }
    }

    /// `lambda * s^2 / 2`
    pub fn quadratic(lambda: f64) -> Self {
        Profile1 { f: Arc::new(move |s: f64| 0.5 * lambda * s * s) }
    }

    /// `|s|^p`
    pub fn power(p: f64) -> Self {
        Profile1 { f: Arc::new(move |s: f64| s.abs().powf(p)) }
    }

    /// `|s|`
    pub fn conical() -> Self {
        Profile1 { f: Arc::new(|s: f64| s.abs()) }
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    /// Smallest `t > 0` with `f(t) >= level`, by doubling search plus
    /// bisection.  Errors with `NotProper` if the profile never reaches the
    /// level within the search window.
    pub fn root_above(&self, level: f64) -> Result<f64> {
        let mut t = 1e-9;
        while self.eval(t) < level {
            t *= 2.0;
            if t > 1e9 {
                return Err(Error::NotProper);
            }
        }
        let (mut lo, mut hi) = (t / 2.0, t);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Mirror of [`Profile1::root_above`] on the negative half-line
    /// (returned as a negative number).
    pub fn root_below(&self, level: f64) -> Result<f64> {
        let mut t = -1e-9;
        while self.eval(t) < level {
            t *= 2.0;
            if t < -1e9 {
                return Err(Error::NotProper);
            }
        }
        let (mut lo, mut hi) = (t, t / 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Transverse convex profile on `R^k`.
#[derive(Clone)]
pub enum Transverse {
    /// No transverse directions (n = 1); integrals over it are 1 by
    /// convention.
    Empty,
    /// `G(x') = sum_i G_i(x'_i)` with each component one-dimensional.
    Separable(Vec<Profile1>),
    /// General convex function; integrated by Monte Carlo.
    General { dim: usize, f: ScalarFn },
}

impl Transverse {
    pub fn dim(&self) -> usize {
        match self {
            Transverse::Empty => 0,
            Transverse::Separable(ps) => ps.len(),
            Transverse::General { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Transverse::Empty => 0.0,
            Transverse::Separable(ps) => ps.iter().zip(x).map(|(p, &s)| p.eval(s)).sum(),
            Transverse::General { f, .. } => f(x),
        }
    }

    /// Per-axis half-widths of a box containing `{G < level}`.
    pub fn bounding_box(&self, level: f64) -> Result<Vec<(f64, f64)>> {
        match self {
            Transverse::Empty => Ok(vec![]),
            Transverse::Separable(ps) => ps
                .iter()
                .map(|p| Ok((p.root_below(level)?, p.root_above(level)?)))
                .collect(),
            Transverse::General { dim, f } => {
                let mut out = Vec::with_capacity(*dim);
                for i in 0..*dim {
                    let fi = f.clone();
                    let d = *dim;
                    let axis = Profile1::from_fn(Arc::new(move |s: f64| {
                        let mut x = vec![0.0; d];
                        x[i] = s;
                        fi(&x)
                    }));
                    // An axis crossing underestimates the true extent for
                    // non-separable G; pad by 2x.
                    let lo = axis.root_below(level)? * 2.0;
                    let hi = axis.root_above(level)? * 2.0;
                    out.push((lo, hi));
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    Minimum,
    Saddle,
}

/// Orthogonal frame plus translation aligning local profile coordinates
/// with the ambient space.  `None` rotation means the identity.
#[derive(Clone)]
pub struct Frame {
    pub origin: Vec<f64>,
    pub rotation: Option<DMatrix<f64>>,
}

impl Frame {
    pub fn identity(origin: Vec<f64>) -> Self {
        Frame { origin, rotation: None }
    }

    /// Global -> local: `R (x - z)`, rows of `R` being the local axes.
    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        match &self.rotation {
            None => d,
            Some(r) => {
                let n = d.len();
                (0..n).map(|i| (0..n).map(|j| r[(i, j)] * d[j]).sum()).collect()
            }
        }
    }

    /// Local -> global: `z + R^T x`.
    pub fn to_global(&self, local: &[f64]) -> Vec<f64> {
        match &self.rotation {
            None => local.iter().zip(&self.origin).map(|(a, b)| a + b).collect(),
            Some(r) => {
                let n = local.len();
                (0..n)
                    .map(|i| {
                        self.origin[i] + (0..n).map(|j| r[(j, i)] * local[j]).sum::<f64>()
                    })
                    .collect()
            }
        }
    }
}

/// Local convex profile data at a critical point.
///
/// For a saddle, `g` is the downhill profile along the first local axis and
/// `transverse` covers the remaining n-1 directions.  For a minimum, `g` is
/// absent and `transverse` maps all n directions.
#[derive(Clone)]
pub struct LocalProfile {
    pub kind: ProfileKind,
    pub g: Option<Profile1>,
    pub transverse: Transverse,
    pub frame: Frame,
}

impl LocalProfile {
    pub fn saddle(g: Profile1, transverse: Transverse, frame: Frame) -> Self {
        LocalProfile { kind: ProfileKind::Saddle, g: Some(g), transverse, frame }
    }

    pub fn minimum(transverse: Transverse, frame: Frame) -> Self {
        LocalProfile { kind: ProfileKind::Minimum, g: None, transverse, frame }
    }

    /// Membership in the neighborhood `O_{z,delta}` (saddle: product of the
    /// two sublevel sets; minimum: sublevel set of the full profile).
    pub fn in_neighborhood(&self, x: &[f64], delta: f64) -> bool {
        let local = self.frame.to_local(x);
        match self.kind {
            ProfileKind::Saddle => {
                let g = self.g.as_ref().expect("saddle profile has g");
                g.eval(local[0]) < delta && self.transverse.eval(&local[1..]) < delta
            }
            ProfileKind::Minimum => self.transverse.eval(&local) < delta,
        }
    }
}

/// Classification of a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CritKind {
    Minimum,
    Saddle,
    Maximum,
    Degenerate,
}

/// Saddle-network topology tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Single,
    Parallel,
    Series,
    General,
}

/// Outcome of sampling the structural inequality on a neighborhood.
#[derive(Debug, Clone, Serialize)]
pub struct StructuralReport {
    pub passed: bool,
    pub max_violation: f64,
    pub samples: usize,
    /// The concrete omega is an artifact choice, not fixed by the theory;
    /// reports carry this flag so downstream consumers know.
    pub omega_is_default_choice: bool,
}

/// Sample `O_{z,delta}` and report the worst violation of the structural
/// inequality bounding `F` against its local profile.
///
/// For a saddle the sampled quantity is
/// `|F(T_z(x)) - F(z) + g(x_1) - G(x')| - omega(g(x_1)) - omega(G(x'))`,
/// for a minimum `|F(z + x) - F(z) - G(x)| - omega(G(x))`.
/// `passed` holds iff the maximum is `<= 1e-9`.
pub fn verify_structural_assumptions(
    f: &Potential,
    value: f64,
    profile: &LocalProfile,
    delta: f64,
    samples: usize,
) -> Result<StructuralReport> {
    const TOL: f64 = 1e-9;
    if delta <= 0.0 || samples == 0 {
        // empty neighborhood: vacuously true
        return Ok(StructuralReport {
            passed: true,
            max_violation: 0.0,
            samples: 0,
            omega_is_default_choice: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut max_violation = f64::NEG_INFINITY;
    let mut accepted = 0usize;

    match profile.kind {
        ProfileKind::Saddle => {
            let g = profile.g.as_ref().ok_or(Error::MissingProfile)?;
            let (g_lo, g_hi) = (g.root_below(delta)?, g.root_above(delta)?);
            let tbox = profile.transverse.bounding_box(delta)?;
            let mut guard = 0usize;
            while accepted < samples {
                guard += 1;
                if guard > samples * 1000 {
                    break;
                }
                let s1 = rng.gen_range(g_lo..g_hi);
                if g.eval(s1) >= delta {
                    continue;
                }
                let xp: Vec<f64> =
                    tbox.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
                let gt = profile.transverse.eval(&xp);
                if gt >= delta {
                    continue;
                }
                accepted += 1;
                let mut local = vec![s1];
                local.extend_from_slice(&xp);
                let global = profile.frame.to_global(&local);
                let lhs = (f.eval(&global) - value + g.eval(s1) - gt).abs();
                let bound = f.omega.eval(g.eval(s1)) + f.omega.eval(gt);
                max_violation = max_violation.max(lhs - bound);
            }
        }
        ProfileKind::Minimum => {
            let tbox = profile.transverse.bounding_box(delta)?;
            let mut guard = 0usize;
            while accepted < samples {
                guard += 1;
                if guard > samples * 1000 {
                    break;
                }
                let local: Vec<f64> =
                    tbox.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
                let gv = profile.transverse.eval(&local);
                if gv >= delta {
                    continue;
                }
                accepted += 1;
                let global = profile.frame.to_global(&local);
                let lhs = (f.eval(&global) - value - gv).abs();
                max_violation = max_violation.max(lhs - f.omega.eval(gv));
            }
        }
    }

    if accepted == 0 {
        return Ok(StructuralReport {
            passed: true,
            max_violation: 0.0,
            samples: 0,
            omega_is_default_choice: true,
        });
    }
    Ok(StructuralReport {
        passed: max_violation <= TOL,
        max_violation,
        samples: accepted,
        omega_is_default_choice: true,
    })
}

#[cfg(test)]
mod tests;
