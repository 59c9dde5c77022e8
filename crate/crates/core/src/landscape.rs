//! Critical-point location, communication heights, and reduction of the
//! landscape to an island/bridge network with a recognized topology.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{CritKind, Potential, Topology};
use crate::transport::LatticeDomain;

const SPEC_TOL: f64 = 1e-6;
const MERGE_RADIUS: f64 = 1e-4;

/// A located critical point with its Hessian spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub kind: CritKind,
    /// eigenvalues, ascending
    pub spectrum: Vec<f64>,
    /// unit eigenvector of the smallest eigenvalue (descent direction at a
    /// saddle)
    pub soft_direction: Vec<f64>,
}

fn classify(spectrum: &[f64]) -> CritKind {
    if spectrum.iter().any(|l| l.abs() < SPEC_TOL) {
        CritKind::Degenerate
    } else if spectrum.iter().all(|&l| l > 0.0) {
        CritKind::Minimum
    } else if spectrum.iter().all(|&l| l < 0.0) {
        CritKind::Maximum
    } else {
        CritKind::Saddle
    }
}

/// Levenberg-Marquardt on the residual `grad F`.  Handles singular
/// Hessians (degenerate saddles) at the cost of linear convergence there,
/// so the iteration is pushed to a step size of 1e-12 rather than relying
/// on a quadratic tail.
fn lm_refine(potential: &Potential, start: &[f64], max_iter: usize) -> Option<Vec<f64>> {
    let n = potential.dim;
    let mut x = DVector::from_column_slice(start);
    let mut mu = 1e-3;
    for _ in 0..max_iter {
        let g = DVector::from_vec(potential.grad(x.as_slice()));
        let gn = g.norm();
        // do not stop on the gradient alone: along a flat (degenerate)
        // direction grad ~ x^{p-1} reaches any tolerance while x is still
        // far from the critical point, so iterate to a 1e-12 step instead
        if gn == 0.0 {
            return Some(x.as_slice().to_vec());
        }
        let h = potential.hessian(x.as_slice());
        let jt_j = h.transpose() * &h;
        let jt_r = h.transpose() * &g;
        let mut stepped = false;
        for _ in 0..40 {
            let a = &jt_j + DMatrix::identity(n, n) * mu;
            let Some(chol) = a.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let delta = chol.solve(&jt_r);
            let cand = &x - &delta;
            let cand_gn = DVector::from_vec(potential.grad(cand.as_slice())).norm();
            if cand_gn < gn {
                if delta.norm() < 1e-12 {
                    return Some(cand.as_slice().to_vec());
                }
                x = cand;
                mu = (mu * 0.33).max(1e-14);
                stepped = true;
                break;
            }
            mu *= 10.0;
        }
        if !stepped {
            let gn_now = DVector::from_vec(potential.grad(x.as_slice())).norm();
            return if gn_now < 1e-8 { Some(x.as_slice().to_vec()) } else { None };
        }
    }
    let gn = potential.grad_norm(x.as_slice());
    if gn < 1e-8 {
        Some(x.as_slice().to_vec())
    } else {
        None
    }
}

/// Locate critical points inside `bbox` by multistart Levenberg-Marquardt
/// on the gradient, deduplicated at radius 1e-4.
pub fn find_critical_points(
    potential: &Potential,
    bbox: &[(f64, f64)],
    starts: usize,
    seed: u64,
) -> Result<Vec<CriticalPoint>> {
    let n = potential.dim;
    if bbox.len() != n {
        return Err(Error::InvalidInput("search box dimension mismatch".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<CriticalPoint> = Vec::new();
    for _ in 0..starts {
        let x0: Vec<f64> = bbox.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        let Some(x) = lm_refine(potential, &x0, 500) else { continue };
        // discard converged points that escaped the search box
        if x.iter().zip(bbox).any(|(v, &(lo, hi))| *v < lo - 1e-6 || *v > hi + 1e-6) {
            continue;
        }
        if found.iter().any(|c| {
            c.location.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                < MERGE_RADIUS
        }) {
            continue;
        }
        let h = potential.hessian(&x);
        let sym = nalgebra::SymmetricEigen::new(h);
        let mut pairs: Vec<(f64, Vec<f64>)> = sym
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, sym.eigenvectors.column(i).iter().copied().collect()))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let spectrum: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let soft_direction = pairs[0].1.clone();
        found.push(CriticalPoint {
            value: potential.eval(&x),
            kind: classify(&spectrum),
            location: x,
            spectrum,
            soft_direction,
        });
    }
    if found.is_empty() {
        return Err(Error::EmptyResult);
    }
    found.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap()
            .then_with(|| a.location[0].partial_cmp(&b.location[0]).unwrap())
    });
    Ok(found)
}

/// Communication height between `a` and `b`: the minimax potential level
/// over lattice paths, with a witness path.
#[derive(Debug, Clone, Serialize)]
pub struct CommunicationHeight {
    pub height: f64,
    pub path: Vec<Vec<f64>>,
}

pub fn communication_height(
    domain: &LatticeDomain,
    a: &[f64],
    b: &[f64],
) -> Result<CommunicationHeight> {
    let (height, path) = crate::transport::bottleneck_path(domain, a, b)?;
    Ok(CommunicationHeight { height, path })
}

/// Connected-component labels of the sublevel set `{F < level}` on the
/// lattice; `usize::MAX` marks nodes outside the set.
pub fn sublevel_components(domain: &LatticeDomain, level: f64) -> (usize, Vec<usize>) {
    let n = domain.len();
    let mut label = vec![usize::MAX; n];
    let mut count = 0usize;
    for start in 0..n {
        if !domain.active[start] || domain.node_f[start] >= level || label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for v in domain.neighbors(u) {
                if domain.active[v] && domain.node_f[v] < level && label[v] == usize::MAX {
                    label[v] = count;
                    stack.push(v);
                }
            }
        }
        count += 1;
    }
    (count, label)
}

/// Gradient descent with backtracking, used to identify which well a
/// saddle's unstable direction drains into.
fn descend(potential: &Potential, start: &[f64]) -> Vec<f64> {
    let mut x = start.to_vec();
    let mut alpha = 0.01;
    for _ in 0..100_000 {
        let g = potential.grad(&x);
        let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn < 1e-9 {
            break;
        }
        let f0 = potential.eval(&x);
        let mut stepped = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(v, gi)| v - alpha * gi).collect();
            if potential.eval(&cand) < f0 {
                x = cand;
                alpha = (alpha * 1.3).min(1.0);
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if !stepped {
            break;
        }
    }
    x
}

#[derive(Debug, Clone, Serialize)]
pub struct IslandInfo {
    pub label: usize,
    pub f_min: f64,
    pub representative: Vec<f64>,
    /// indices into the critical-point list of the minima on this island
    pub minima: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BridgeInfo {
    /// index into the critical-point list
    pub saddle: usize,
    pub value: f64,
    /// labels of the two islands the unstable directions drain into
    pub connects: (usize, usize),
}

/// The landscape between two marked wells reduced to islands joined by
/// bridge saddles, with the recognized series/parallel structure.
#[derive(Debug, Clone, Serialize)]
pub struct Network {
    pub height: f64,
    pub level: f64,
    pub islands: Vec<IslandInfo>,
    pub bridges: Vec<BridgeInfo>,
    pub island_a: usize,
    pub island_b: usize,
    pub topology: Topology,
    /// for a series chain: island labels in order from a to b
    pub series_order: Option<Vec<usize>>,
}

/// Reduce the landscape between `a` and `b` to a network.
///
/// Islands are components of `{F < H - delta/3}` where `H` is the
/// communication height; bridges are saddles within `delta/3` of `H`.
/// Errors with `NotSeparated` if `a` and `b` share an island and with
/// `UnreachedSaddleSet` if removing delta-balls around the bridges fails
/// to disconnect them (the listed saddles then cannot carry the flow).
pub fn extract_network(
    potential: &Potential,
    domain: &LatticeDomain,
    critical_points: &[CriticalPoint],
    a: &[f64],
    b: &[f64],
    delta: f64,
) -> Result<Network> {
    assert!(delta > 0.0);
    let h = communication_height(domain, a, b)?.height;
    // the barrier must clear the endpoints by the width of the saddle band
    let f_ends = potential.eval(a).max(potential.eval(b));
    if h - f_ends <= 2.0 * delta / 3.0 {
        return Err(Error::NotSeparated);
    }
    let level = h - delta / 3.0;
    let (_count, label) = sublevel_components(domain, level);
    let island_of = |x: &[f64]| -> Result<usize> {
        let idx = domain.nearest_node(x)?;
        let l = label[idx];
        if l == usize::MAX {
            return Err(Error::Disconnected);
        }
        Ok(l)
    };
    let island_a = island_of(a)?;
    let island_b = island_of(b)?;
    if island_a == island_b {
        return Err(Error::NotSeparated);
    }

    // collect islands that host at least one listed minimum
    let mut islands: Vec<IslandInfo> = Vec::new();
    for (i, cp) in critical_points.iter().enumerate() {
        if cp.kind != CritKind::Minimum || cp.value >= level {
            continue;
        }
        let Ok(l) = island_of(&cp.location) else { continue };
        match islands.iter_mut().find(|isl| isl.label == l) {
            Some(isl) => {
                isl.minima.push(i);
                if cp.value < isl.f_min {
                    isl.f_min = cp.value;
                    isl.representative = cp.location.clone();
                }
            }
            None => islands.push(IslandInfo {
                label: l,
                f_min: cp.value,
                representative: cp.location.clone(),
                minima: vec![i],
            }),
        }
    }
    islands.sort_by_key(|isl| isl.label);

    // bridges: saddles in the height band, endpoints found by descending
    // both unstable directions
    let mut bridges = Vec::new();
    for (i, cp) in critical_points.iter().enumerate() {
        if (cp.value - h).abs() >= delta / 3.0 {
            continue;
        }
        // in one dimension the separating point is a local maximum
        let separating = matches!(cp.kind, CritKind::Saddle | CritKind::Degenerate)
            || (potential.dim == 1 && cp.kind == CritKind::Maximum);
        if !separating {
            continue;
        }
        let t = 10.0 * MERGE_RADIUS;
        let mut ends = Vec::new();
        for sgn in [-1.0, 1.0] {
            let start: Vec<f64> = cp
                .location
                .iter()
                .zip(&cp.soft_direction)
                .map(|(x, v)| x + sgn * t * v)
                .collect();
            let well = descend(potential, &start);
            ends.push(island_of(&well)?);
        }
        if ends[0] == ends[1] {
            // both sides drain into the same island; not a bridge between
            // distinct islands at this level
            continue;
        }
        bridges.push(BridgeInfo { saddle: i, value: cp.value, connects: (ends[0], ends[1]) });
    }
    if bridges.is_empty() {
        return Err(Error::UnreachedSaddleSet);
    }

    // the listed bridges must carry all the flow: removing delta-balls
    // around them has to disconnect a from b below H + delta/3
    {
        let n = domain.len();
        let mut blocked = vec![false; n];
        for br in &bridges {
            let z = &critical_points[br.saddle].location;
            for idx in 0..n {
                if blocked[idx] {
                    continue;
                }
                let p = domain.position(idx);
                let d2: f64 = p.iter().zip(z).map(|(x, y)| (x - y) * (x - y)).sum();
                if d2 <= delta * delta {
                    blocked[idx] = true;
                }
            }
        }
        // the reachability band must stay below the potential rise at the
        // blocked balls' rims, else a path could legally skirt a ball at
        // transverse distance delta; the quadratic rise there is
        // lambda_perp delta^2 / 2, taken with a factor-2 safety margin
        let mut band = delta / 3.0;
        for br in &bridges {
            let lam_perp = critical_points[br.saddle]
                .spectrum
                .iter()
                .copied()
                .filter(|&l| l > 0.0)
                .fold(f64::INFINITY, f64::min);
            if lam_perp.is_finite() {
                band = band.min(0.25 * lam_perp * delta * delta);
            }
        }
        let upper = h + band;
        let src = domain.nearest_node(a)?;
        let dst = domain.nearest_node(b)?;
        let mut seen = vec![false; n];
        seen[src] = true;
        let mut stack = vec![src];
        while let Some(u) = stack.pop() {
            if u == dst {
                return Err(Error::UnreachedSaddleSet);
            }
            for v in domain.neighbors(u) {
                if domain.active[v] && !blocked[v] && domain.node_f[v] < upper && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }

    // recognize the topology
    let direct = bridges.iter().all(|br| {
        (br.connects.0 == island_a && br.connects.1 == island_b)
            || (br.connects.0 == island_b && br.connects.1 == island_a)
    });
    let (topology, series_order) = if direct && bridges.len() == 1 {
        (Topology::Single, Some(vec![island_a, island_b]))
    } else if direct {
        (Topology::Parallel, None)
    } else if let Some(order) = chain_order(&bridges, island_a, island_b) {
        (Topology::Series, Some(order))
    } else {
        (Topology::General, None)
    };

    Ok(Network {
        height: h,
        level,
        islands,
        bridges,
        island_a,
        island_b,
        topology,
        series_order,
    })
}

/// If the bridges form a simple chain from `a` to `b` (each island visited
/// once, one bridge per consecutive pair), return the island order.
fn chain_order(bridges: &[BridgeInfo], island_a: usize, island_b: usize) -> Option<Vec<usize>> {
    let mut adj: Vec<(usize, usize)> = bridges.iter().map(|b| b.connects).collect();
    let mut order = vec![island_a];
    let mut cur = island_a;
    while cur != island_b {
        let pos = adj.iter().position(|&(u, v)| u == cur || v == cur)?;
        let (u, v) = adj.swap_remove(pos);
        let next = if u == cur { v } else { u };
        // a second edge at the current island breaks the chain
        if adj.iter().any(|&(x, y)| x == cur || y == cur) {
            return None;
        }
        if order.contains(&next) {
            return None;
        }
        order.push(next);
        cur = next;
    }
    if !adj.is_empty() {
        return None;
    }
    Some(order)
}
