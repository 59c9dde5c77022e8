//! Capacity assembly: the geometric distance/surface route, the classical
//! harmonic-approximation references, and series/parallel reduction over a
//! recognized network.

use crate::error::{Error, Result};
use crate::potential::Topology;
use crate::scaled::ScaledValue;

const SHIFT_TOL: f64 = 1e-9;

/// Capacity from the geodesic distance and separating surface:
/// `cap = eps * V_eps / d_eps * e^{F(z)/eps}`.
///
/// `d` must carry `+F(z)` as its shift and `v` must carry `-F(z)`; the two
/// shifts have to cancel or the inputs were computed against different
/// references (`ShiftMismatch`).  The result carries `-F(z)`.
pub fn capacity_geometric(d: &ScaledValue, v: &ScaledValue, eps: f64) -> Result<ScaledValue> {
    if (d.shift + v.shift).abs() > SHIFT_TOL {
        return Err(Error::ShiftMismatch(d.shift, v.shift));
    }
    if d.mantissa <= 0.0 {
        return Err(Error::ZeroCapacity);
    }
    Ok(ScaledValue::new(eps * v.mantissa / d.mantissa, v.shift))
}

/// Harmonic-approximation capacity of a single nondegenerate saddle at
/// height `f_z`:
/// `cap ~= eps (2 pi eps)^{(n-2)/2} |lambda_1| / sqrt(|det Hess|) e^{-f_z/eps}`.
///
/// `saddle_spectrum` must have exactly one negative eigenvalue.
pub fn eyring_kramers_capacity(
    saddle_spectrum: &[f64],
    f_z: f64,
    eps: f64,
) -> Result<ScaledValue> {
    let n = saddle_spectrum.len();
    let negs: Vec<f64> = saddle_spectrum.iter().copied().filter(|&l| l < 0.0).collect();
    if negs.len() != 1 || saddle_spectrum.iter().any(|&l| l == 0.0) {
        return Err(Error::SpectrumInvalid);
    }
    let det_abs: f64 = saddle_spectrum.iter().map(|l| l.abs()).product();
    let lam1 = negs[0].abs();
    let pref =
        eps * (2.0 * std::f64::consts::PI * eps).powf((n as f64 - 2.0) / 2.0) * lam1
            / det_abs.sqrt();
    Ok(ScaledValue::new(pref, -f_z))
}

/// Classical mean-transition-time law for a nondegenerate well and saddle:
/// `E[tau] ~= 2 pi / |lambda_1(z)| sqrt(|det Hess(z)| / det Hess(x))
///            e^{(F(z)-F(x))/eps}`.
pub fn eyring_kramers_time(
    min_spectrum: &[f64],
    f_min: f64,
    saddle_spectrum: &[f64],
    f_z: f64,
) -> Result<ScaledValue> {
    if min_spectrum.iter().any(|&l| l <= 0.0) {
        return Err(Error::SpectrumInvalid);
    }
    let negs: Vec<f64> = saddle_spectrum.iter().copied().filter(|&l| l < 0.0).collect();
    if negs.len() != 1
        || saddle_spectrum.iter().any(|&l| l == 0.0)
        || min_spectrum.len() != saddle_spectrum.len()
    {
        return Err(Error::SpectrumInvalid);
    }
    let det_z: f64 = saddle_spectrum.iter().map(|l| l.abs()).product();
    let det_x: f64 = min_spectrum.iter().product();
    let pref = 2.0 * std::f64::consts::PI / negs[0].abs() * (det_z / det_x).sqrt();
    Ok(ScaledValue::new(pref, f_z - f_min))
}

/// Parallel saddles at a common height: capacities add.
pub fn reduce_parallel(caps: &[ScaledValue], eps: f64) -> Result<ScaledValue> {
    let mut iter = caps.iter();
    let Some(first) = iter.next() else {
        return Err(Error::EmptyResult);
    };
    let mut acc = *first;
    for c in iter {
        acc = acc.add(c, eps);
    }
    Ok(acc)
}

/// Saddles in series along a chain: capacities combine harmonically,
/// `cap^{-1} = sum cap_i^{-1}`.
pub fn reduce_series(caps: &[ScaledValue], eps: f64) -> Result<ScaledValue> {
    let mut iter = caps.iter();
    let Some(first) = iter.next() else {
        return Err(Error::EmptyResult);
    };
    let mut acc = first.recip()?;
    for c in iter {
        acc = acc.add(&c.recip()?, eps);
    }
    acc.recip()
}

/// Combine per-bridge capacities according to the recognized topology.
/// General networks are refused rather than approximated.
pub fn assemble_capacity(
    topology: Topology,
    caps: &[ScaledValue],
    eps: f64,
) -> Result<ScaledValue> {
    match topology {
        Topology::Single => {
            if caps.len() != 1 {
                return Err(Error::InvalidInput(format!(
                    "single-saddle topology with {} capacities",
                    caps.len()
                )));
            }
            Ok(caps[0])
        }
        Topology::Parallel => reduce_parallel(caps, eps),
        Topology::Series => reduce_series(caps, eps),
        Topology::General => Err(Error::TopologyGeneral),
    }
}
