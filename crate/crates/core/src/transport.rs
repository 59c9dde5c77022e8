//! Lattice discretizations of the three transport quantities: the
//! reweighted geodesic distance (shortest path), the separating-surface
//! measure (min cut), and the variational capacity (elliptic solve).
//!
//! All three return [`ScaledValue`]s against a caller-chosen reference
//! energy so the exponential factors never leave floating range.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::scaled::ScaledValue;

/// Hard cap on lattice size.
pub const NODE_BUDGET: usize = 10_000_000;

/// Largest exponent fed to `exp`; beyond this the weight is declared out of
/// range instead of silently saturating.
const EXP_LIMIT: f64 = 700.0;

/// Regular grid over an axis-aligned box with node potentials precomputed.
///
/// Nodes sit at cell centers: `x_i = lo + (i + 1/2) h`.  An optional level
/// cutoff deactivates nodes with `F > cutoff`; inactive nodes take part in
/// no path, cut, or solve.
pub struct LatticeDomain {
    pub dim: usize,
    pub h: f64,
    pub lo: Vec<f64>,
    pub dims: Vec<usize>,
    pub node_f: Vec<f64>,
    pub active: Vec<bool>,
    strides: Vec<usize>,
}

impl LatticeDomain {
    pub fn new(
        potential: &Potential,
        bbox: &[(f64, f64)],
        h: f64,
        cutoff: Option<f64>,
    ) -> Result<Self> {
        let dim = potential.dim;
        if bbox.len() != dim || dim == 0 || dim > 3 {
            return Err(Error::InvalidInput(format!(
                "lattice supports dimensions 1..=3 matching the potential, got box of {} for dim {}",
                bbox.len(),
                dim
            )));
        }
        if h <= 0.0 {
            return Err(Error::InvalidInput("lattice spacing must be positive".into()));
        }
        let mut dims = Vec::with_capacity(dim);
        let mut lo = Vec::with_capacity(dim);
        let mut nodes = 1usize;
        for &(a, b) in bbox {
            if b <= a {
                return Err(Error::InvalidInput("box has empty extent".into()));
            }
            let n = ((b - a) / h).round().max(1.0) as usize;
            nodes = nodes.saturating_mul(n);
            dims.push(n);
            lo.push(a);
        }
        if nodes > NODE_BUDGET {
            return Err(Error::TooLarge { nodes, budget: NODE_BUDGET });
        }
        let mut strides = vec![0usize; dim];
        let mut s = 1;
        for d in 0..dim {
            strides[d] = s;
            s *= dims[d];
        }
        let mut node_f = vec![0.0; nodes];
        let mut active = vec![true; nodes];
        let mut x = vec![0.0; dim];
        for idx in 0..nodes {
            let mut r = idx;
            for d in 0..dim {
                let i = r % dims[d];
                r /= dims[d];
                x[d] = lo[d] + (i as f64 + 0.5) * h;
            }
            let f = potential.eval(&x);
            node_f[idx] = f;
            if let Some(c) = cutoff {
                active[idx] = f <= c;
            }
        }
        Ok(LatticeDomain { dim, h, lo, dims, node_f, active, strides })
    }

    pub fn len(&self) -> usize {
        self.node_f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_f.is_empty()
    }

    pub fn position(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        let mut r = idx;
        for d in 0..self.dim {
            x[d] = self.lo[d] + ((r % self.dims[d]) as f64 + 0.5) * self.h;
            r /= self.dims[d];
        }
        x
    }

    /// Index of the active node nearest to `x`; `Disconnected` if every
    /// node in the containing cell column is inactive.
    pub fn nearest_node(&self, x: &[f64]) -> Result<usize> {
        assert_eq!(x.len(), self.dim);
        let mut best = None;
        let mut best_d2 = f64::INFINITY;
        // search a small neighborhood of the containing cell
        let mut base = vec![0i64; self.dim];
        for d in 0..self.dim {
            base[d] = (((x[d] - self.lo[d]) / self.h) - 0.5).round() as i64;
        }
        let r = 2i64;
        let mut off = vec![-r; self.dim];
        loop {
            let mut idx = 0usize;
            let mut ok = true;
            for d in 0..self.dim {
                let c = base[d] + off[d];
                if c < 0 || c >= self.dims[d] as i64 {
                    ok = false;
                    break;
                }
                idx += c as usize * self.strides[d];
            }
            if ok && self.active[idx] {
                let p = self.position(idx);
                let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = Some(idx);
                }
            }
            let mut d = 0;
            loop {
                if d == self.dim {
                    return best.ok_or(Error::Disconnected);
                }
                off[d] += 1;
                if off[d] <= r {
                    break;
                }
                off[d] = -r;
                d += 1;
            }
        }
    }

    /// Neighbor offsets: axis moves and all diagonals of the unit cube.
    pub fn neighbor_offsets(&self) -> Vec<(Vec<i64>, f64)> {
        let mut out = Vec::new();
        let n = self.dim;
        let total = 3usize.pow(n as u32);
        for code in 0..total {
            let mut r = code;
            let mut off = vec![0i64; n];
            for o in off.iter_mut() {
                *o = (r % 3) as i64 - 1;
                r /= 3;
            }
            if off.iter().all(|&o| o == 0) {
                continue;
            }
            let len = (off.iter().map(|&o| (o * o) as f64).sum::<f64>()).sqrt() * self.h;
            out.push((off, len));
        }
        out
    }

    /// Indices of all stencil neighbors of `idx`.  Convenience wrapper for
    /// flood fills; hot loops should reuse [`LatticeDomain::neighbor_offsets`].
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        self.neighbor_offsets().iter().filter_map(|(off, _)| self.step(idx, off)).collect()
    }

    pub fn step(&self, idx: usize, off: &[i64]) -> Option<usize> {
        let mut out = 0usize;
        let mut r = idx;
        for d in 0..self.dim {
            let c = (r % self.dims[d]) as i64 + off[d];
            r /= self.dims[d];
            if c < 0 || c >= self.dims[d] as i64 {
                return None;
            }
            out += c as usize * self.strides[d];
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeodesicResult {
    pub distance: ScaledValue,
    /// node positions along the optimal path, start to end
    pub path: Vec<Vec<f64>>,
}

struct HeapItem {
    cost: f64,
    node: usize,
}
impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cost == other.cost
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // min-heap on cost
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.partial_cmp(&self.cost).unwrap_or(Ordering::Equal)
    }
}

/// Shortest path for the edge weight `len * exp((F_mid - f_ref)/eps)`
/// between the nodes nearest `a` and `b`.  The result carries `f_ref` as
/// its exponent shift, so `distance.value_at(eps)` is the unshifted
/// geodesic length.
pub fn geodesic_distance(
    domain: &LatticeDomain,
    eps: f64,
    a: &[f64],
    b: &[f64],
    f_ref: f64,
) -> Result<GeodesicResult> {
    assert!(eps > 0.0);
    let src = domain.nearest_node(a)?;
    let dst = domain.nearest_node(b)?;
    let offsets = domain.neighbor_offsets();
    let n = domain.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem { cost: 0.0, node: src });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == dst {
            break;
        }
        for (off, len) in &offsets {
            let Some(nb) = domain.step(node, off) else { continue };
            if !domain.active[nb] {
                continue;
            }
            let f_mid = 0.5 * (domain.node_f[node] + domain.node_f[nb]);
            let ex = (f_mid - f_ref) / eps;
            if ex > EXP_LIMIT {
                return Err(Error::Overflow { exponent: ex });
            }
            let w = len * ex.exp();
            let nd = cost + w;
            if nd < dist[nb] {
                dist[nb] = nd;
                prev[nb] = node;
                heap.push(HeapItem { cost: nd, node: nb });
            }
        }
    }
    if !dist[dst].is_finite() {
        return Err(Error::Disconnected);
    }
    let mut path = Vec::new();
    let mut cur = dst;
    while cur != usize::MAX {
        path.push(domain.position(cur));
        if cur == src {
            break;
        }
        cur = prev[cur];
    }
    path.reverse();
    Ok(GeodesicResult { distance: ScaledValue::new(dist[dst], f_ref), path })
}

/// Bottleneck shortest path: minimizes the maximum node potential along
/// the path.  Returns the minimax level and a witness path.
pub fn bottleneck_path(
    domain: &LatticeDomain,
    a: &[f64],
    b: &[f64],
) -> Result<(f64, Vec<Vec<f64>>)> {
    let src = domain.nearest_node(a)?;
    let dst = domain.nearest_node(b)?;
    let offsets = domain.neighbor_offsets();
    let n = domain.len();
    let mut level = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    level[src] = domain.node_f[src];
    heap.push(HeapItem { cost: level[src], node: src });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if cost > level[node] {
            continue;
        }
        if node == dst {
            break;
        }
        for (off, _) in &offsets {
            let Some(nb) = domain.step(node, off) else { continue };
            if !domain.active[nb] {
                continue;
            }
            let nl = cost.max(domain.node_f[nb]);
            if nl < level[nb] {
                level[nb] = nl;
                prev[nb] = node;
                heap.push(HeapItem { cost: nl, node: nb });
            }
        }
    }
    if !level[dst].is_finite() {
        return Err(Error::Disconnected);
    }
    let mut path = Vec::new();
    let mut cur = dst;
    while cur != usize::MAX {
        path.push(domain.position(cur));
        if cur == src {
            break;
        }
        cur = prev[cur];
    }
    path.reverse();
    Ok((level[dst], path))
}

// --- Dinic max-flow on the axis-edge lattice ---

struct FlowGraph {
    // per node: list of (edge index into caps/to)
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph { adj: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn add_undirected(&mut self, u: usize, v: usize, c: f64) {
        let e = self.to.len();
        self.to.push(v);
        self.cap.push(c);
        self.to.push(u);
        self.cap.push(c);
        self.adj[u].push(e);
        self.adj[v].push(e + 1);
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let n = self.adj.len();
        let mut flow = 0.0;
        loop {
            // BFS level graph
            let mut lvl = vec![u32::MAX; n];
            lvl[s] = 0;
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &e in &self.adj[u] {
                    let v = self.to[e];
                    if self.cap[e] > 1e-300 && lvl[v] == u32::MAX {
                        lvl[v] = lvl[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if lvl[t] == u32::MAX {
                return flow;
            }
            let mut it = vec![0usize; n];
            loop {
                let pushed = self.dfs(s, t, f64::INFINITY, &lvl, &mut it);
                if pushed <= 0.0 {
                    break;
                }
                flow += pushed;
            }
        }
    }

    fn dfs(&mut self, u: usize, t: usize, limit: f64, lvl: &[u32], it: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while it[u] < self.adj[u].len() {
            let e = self.adj[u][it[u]];
            let v = self.to[e];
            if self.cap[e] > 1e-300 && lvl[v] == lvl[u] + 1 {
                let pushed = self.dfs(v, t, limit.min(self.cap[e]), lvl, it);
                if pushed > 0.0 {
                    self.cap[e] -= pushed;
                    self.cap[e ^ 1] += pushed;
                    return pushed;
                }
            }
            it[u] += 1;
        }
        0.0
    }

    /// Nodes reachable from `s` in the residual graph; the min cut is the
    /// set of saturated edges leaving this set.
    fn min_cut_side(&self, s: usize) -> Vec<bool> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 1e-300 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceResult {
    pub measure: ScaledValue,
    /// midpoints of the cut faces
    pub cut_faces: Vec<Vec<f64>>,
}

/// Minimum reweighted separating surface between the neighborhoods of `a`
/// and `b`: a min cut over axis faces with capacity
/// `h^{n-1} exp(-(F_face - f_ref)/eps)`.  The result carries `-f_ref` as
/// its shift.
///
/// `seed_radius` controls which nodes are merged into the two terminals;
/// every node within that euclidean distance of `a` (resp. `b`) is wired
/// to the source (sink) with infinite capacity.
pub fn min_separating_surface(
    domain: &LatticeDomain,
    eps: f64,
    a: &[f64],
    b: &[f64],
    f_ref: f64,
    seed_radius: f64,
) -> Result<SurfaceResult> {
    assert!(eps > 0.0);
    let n = domain.len();
    let src = n;
    let dst = n + 1;
    let mut g = FlowGraph::new(n + 2);
    let area = domain.h.powi(domain.dim as i32 - 1);
    // axis edges only: each cut face is a genuine lattice face
    for idx in 0..n {
        if !domain.active[idx] {
            continue;
        }
        for d in 0..domain.dim {
            let mut off = vec![0i64; domain.dim];
            off[d] = 1;
            let Some(nb) = domain.step(idx, &off) else { continue };
            if !domain.active[nb] {
                continue;
            }
            let f_face = 0.5 * (domain.node_f[idx] + domain.node_f[nb]);
            let ex = -(f_face - f_ref) / eps;
            if ex > EXP_LIMIT {
                return Err(Error::Overflow { exponent: ex });
            }
            g.add_undirected(idx, nb, area * ex.exp());
        }
    }
    let r2 = seed_radius * seed_radius;
    let mut any_src = false;
    let mut any_dst = false;
    for idx in 0..n {
        if !domain.active[idx] {
            continue;
        }
        let p = domain.position(idx);
        let da: f64 = p.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
        let db: f64 = p.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        if da <= r2 && db <= r2 {
            return Err(Error::NotSeparated);
        }
        if da <= r2 {
            g.add_undirected(src, idx, f64::INFINITY);
            any_src = true;
        } else if db <= r2 {
            g.add_undirected(idx, dst, f64::INFINITY);
            any_dst = true;
        }
    }
    if !any_src || !any_dst {
        return Err(Error::Disconnected);
    }
    let flow = g.max_flow(src, dst);
    if !flow.is_finite() {
        return Err(Error::NotSeparated);
    }
    if flow == 0.0 {
        return Err(Error::Disconnected);
    }
    // cut faces for reporting
    let side = g.min_cut_side(src);
    let mut cut_faces = Vec::new();
    for idx in 0..n {
        if !side[idx] || !domain.active[idx] {
            continue;
        }
        for d in 0..domain.dim {
            for s in [-1i64, 1] {
                let mut off = vec![0i64; domain.dim];
                off[d] = s;
                let Some(nb) = domain.step(idx, &off) else { continue };
                if domain.active[nb] && !side[nb] && nb < n {
                    let p = domain.position(idx);
                    let q = domain.position(nb);
                    cut_faces
                        .push(p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<f64>>());
                }
            }
        }
    }
    Ok(SurfaceResult { measure: ScaledValue::new(flow, -f_ref), cut_faces })
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeResult {
    pub capacity: ScaledValue,
    pub iterations: usize,
    pub residual: f64,
    /// equilibrium potential on the lattice, 1 near `a`, 0 near `b`
    #[serde(skip)]
    pub solution: Vec<f64>,
}

/// Variational capacity by a finite-volume elliptic solve.
///
/// Solves `div(exp(-F/eps) grad u) = 0` with `u = 1` on the ball around
/// `a` and `u = 0` around `b`, then evaluates the Dirichlet energy
/// `eps * sum_faces c (u_i - u_j)^2` with face conductance
/// `c = h^{n-2} exp(-(F_face - f_ref)/eps)`.  The capacity carries
/// `-f_ref` as its shift.
pub fn solve_capacity_pde(
    domain: &LatticeDomain,
    eps: f64,
    a: &[f64],
    b: &[f64],
    f_ref: f64,
    seed_radius: f64,
) -> Result<PdeResult> {
    assert!(eps > 0.0);
    let n = domain.len();
    let r2 = seed_radius * seed_radius;
    // role: 0 free, 1 fixed at one, 2 fixed at zero, 3 inactive
    let mut role = vec![0u8; n];
    let mut any_a = false;
    let mut any_b = false;
    for idx in 0..n {
        if !domain.active[idx] {
            role[idx] = 3;
            continue;
        }
        let p = domain.position(idx);
        let da: f64 = p.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
        let db: f64 = p.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        if da <= r2 && db <= r2 {
            return Err(Error::NotSeparated);
        }
        if da <= r2 {
            role[idx] = 1;
            any_a = true;
        } else if db <= r2 {
            role[idx] = 2;
            any_b = true;
        }
    }
    if !any_a || !any_b {
        return Err(Error::Disconnected);
    }

    // assemble axis-face conductances
    let cond_scale = domain.h.powi(domain.dim as i32 - 2);
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for idx in 0..n {
        if role[idx] == 3 {
            continue;
        }
        for d in 0..domain.dim {
            let mut off = vec![0i64; domain.dim];
            off[d] = 1;
            let Some(nb) = domain.step(idx, &off) else { continue };
            if role[nb] == 3 {
                continue;
            }
            let f_face = 0.5 * (domain.node_f[idx] + domain.node_f[nb]);
            let ex = -(f_face - f_ref) / eps;
            if ex > EXP_LIMIT {
                return Err(Error::Overflow { exponent: ex });
            }
            edges.push((idx, nb, cond_scale * ex.exp()));
        }
    }

    // conjugate gradient with Jacobi preconditioning on the free nodes
    let mut u = vec![0.0f64; n];
    for idx in 0..n {
        if role[idx] == 1 {
            u[idx] = 1.0;
        }
    }
    let mut diag = vec![0.0f64; n];
    for &(i, j, c) in &edges {
        diag[i] += c;
        diag[j] += c;
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(i, j, c) in &edges {
            let d = v[i] - v[j];
            out[i] += c * d;
            out[j] -= c * d;
        }
    };
    // residual r = -A u restricted to free nodes
    let mut r = vec![0.0; n];
    apply(&u, &mut r);
    for idx in 0..n {
        r[idx] = if role[idx] == 0 { -r[idx] } else { 0.0 };
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for idx in 0..r.len() {
            z[idx] = if diag[idx] > 0.0 { r[idx] / diag[idx] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    for idx in 0..n {
        if role[idx] != 0 {
            z[idx] = 0.0;
        }
    }
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let r0: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = (r0 * 1e-10).max(1e-300);
    let max_iter = 200_000;
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut rnorm = r0;
    while rnorm > tol && iterations < max_iter {
        apply(&p, &mut ap);
        for idx in 0..n {
            if role[idx] != 0 {
                ap[idx] = 0.0;
            }
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for idx in 0..n {
            if role[idx] == 0 {
                u[idx] += alpha * p[idx];
                r[idx] -= alpha * ap[idx];
            }
        }
        precond(&r, &mut z);
        for idx in 0..n {
            if role[idx] != 0 {
                z[idx] = 0.0;
            }
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for idx in 0..n {
            p[idx] = z[idx] + beta * p[idx];
        }
        rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        iterations += 1;
    }
    if rnorm > tol {
        return Err(Error::NoConvergence { iterations, residual: rnorm / r0.max(1e-300) });
    }
    let mut energy = 0.0;
    for &(i, j, c) in &edges {
        let d = u[i] - u[j];
        energy += c * d * d;
    }
    Ok(PdeResult {
        capacity: ScaledValue::new(eps * energy, -f_ref),
        iterations,
        residual: if r0 > 0.0 { rnorm / r0 } else { 0.0 },
        solution: u,
    })
}

/// Oscillation of the potential on each connected component of the active
/// sublevel set `{F < level}`.
#[derive(Debug, Clone, Serialize)]
pub struct IslandReport {
    pub size: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub oscillation: f64,
    /// position of the deepest node, a representative of the island
    pub representative: Vec<f64>,
}

pub fn island_oscillations(domain: &LatticeDomain, level: f64) -> Vec<IslandReport> {
    let n = domain.len();
    let in_set: Vec<bool> =
        (0..n).map(|i| domain.active[i] && domain.node_f[i] < level).collect();
    let mut comp = vec![usize::MAX; n];
    let mut reports = Vec::new();
    let offsets = domain.neighbor_offsets();
    for start in 0..n {
        if !in_set[start] || comp[start] != usize::MAX {
            continue;
        }
        let id = reports.len();
        comp[start] = id;
        let mut stack = vec![start];
        let mut size = 0usize;
        let mut f_min = f64::INFINITY;
        let mut f_max = f64::NEG_INFINITY;
        let mut rep = start;
        while let Some(u) = stack.pop() {
            size += 1;
            let f = domain.node_f[u];
            if f < f_min {
                f_min = f;
                rep = u;
            }
            f_max = f_max.max(f);
            for (off, _) in &offsets {
                let Some(v) = domain.step(u, off) else { continue };
                if in_set[v] && comp[v] == usize::MAX {
                    comp[v] = id;
                    stack.push(v);
                }
            }
        }
        reports.push(IslandReport {
            size,
            f_min,
            f_max,
            oscillation: f_max - f_min,
            representative: domain.position(rep),
        });
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::catalog::catalog_entry;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn double_well_2d() -> (crate::potential::Potential, Vec<(f64, f64)>) {
        let e = catalog_entry("double_well_2d").unwrap();
        (e.potential.clone(), e.box_hint.clone())
    }

    #[test]
    fn lattice_respects_budget() {
        let (pot, _) = double_well_2d();
        let err = LatticeDomain::new(&pot, &[(-10.0, 10.0), (-10.0, 10.0)], 1e-3, None);
        assert!(matches!(err, Err(Error::TooLarge { .. })));
    }

    #[test]
    fn geodesic_flat_potential_is_euclidean() {
        // constant F: geodesic reduces to straight-line distance
        let pot = crate::potential::Potential::new(
            2,
            std::sync::Arc::new(|_: &[f64]| 0.0),
            std::sync::Arc::new(|_: &[f64]| vec![0.0, 0.0]),
            None,
            10.0,
            crate::potential::Modulus::power_law(1.0, 1.5),
        );
        let dom = LatticeDomain::new(&pot, &[(-1.0, 1.0), (-1.0, 1.0)], 0.02, None).unwrap();
        let r = geodesic_distance(&dom, 0.1, &[-0.8, 0.0], &[0.8, 0.0], 0.0).unwrap();
        assert_relative_eq!(r.distance.mantissa, 1.6, max_relative = 0.02);
        // diagonal: within the 8% anisotropy of the 8-neighbor stencil
        let rd = geodesic_distance(&dom, 0.1, &[-0.6, -0.6], &[0.6, 0.6], 0.0).unwrap();
        let exact = 1.2 * 2f64.sqrt();
        assert!((rd.distance.mantissa - exact).abs() / exact < 0.08);
    }

    #[test]
    fn geodesic_double_well_matches_laplace() {
        // d_eps along the x-axis ~= e^{F(z)/eps} sqrt(2 pi eps / |lambda_1|)
        let (pot, bbox) = double_well_2d();
        let eps = 0.05;
        let dom = LatticeDomain::new(&pot, &bbox, 0.01, None).unwrap();
        let r = geodesic_distance(&dom, eps, &[-1.0, 0.0], &[1.0, 0.0], 0.25).unwrap();
        let exact = (2.0 * PI * eps).sqrt();
        assert_relative_eq!(r.distance.mantissa, exact, max_relative = 0.05);
        assert_eq!(r.distance.shift, 0.25);
        // witness path passes near the saddle
        let near = r.path.iter().any(|p| p[0].abs() < 0.02 && p[1].abs() < 0.02);
        assert!(near);
    }

    #[test]
    fn geodesic_overflow_detected() {
        let (pot, bbox) = double_well_2d();
        let dom = LatticeDomain::new(&pot, &bbox, 0.05, None).unwrap();
        let r = geodesic_distance(&dom, 1e-5, &[-1.0, 0.0], &[1.0, 0.0], 0.0);
        assert!(matches!(r, Err(Error::Overflow { .. })));
    }

    #[test]
    fn bottleneck_level_is_saddle_height() {
        let (pot, bbox) = double_well_2d();
        let dom = LatticeDomain::new(&pot, &bbox, 0.02, None).unwrap();
        let (level, path) = bottleneck_path(&dom, &[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((level - 0.25).abs() < 0.01, "level {level}");
        assert!(path.len() > 10);
    }

    #[test]
    fn surface_double_well_matches_laplace() {
        // V_eps ~= e^{-F(z)/eps} sqrt(2 pi eps) for unit transverse curvature
        let (pot, bbox) = double_well_2d();
        let eps = 0.05;
        let dom = LatticeDomain::new(&pot, &bbox, 0.01, None).unwrap();
        let r = min_separating_surface(&dom, eps, &[-1.0, 0.0], &[1.0, 0.0], 0.25, 0.2).unwrap();
        let exact = (2.0 * PI * eps).sqrt();
        assert_relative_eq!(r.measure.mantissa, exact, max_relative = 0.05);
        assert_eq!(r.measure.shift, -0.25);
        // the cut hugs the separating line x = 0
        assert!(!r.cut_faces.is_empty());
        for f in &r.cut_faces {
            assert!(f[0].abs() < 0.1, "cut face strays to {f:?}");
        }
    }

    #[test]
    fn pde_capacity_double_well() {
        // geometric reference: cap ~= eps * V_eps / d_eps * e^{F(z)/eps}.
        // For this well d and V share the mantissa sqrt(2 pi eps), so the
        // capacity mantissa at shift -0.25 is just eps.
        let (pot, bbox) = double_well_2d();
        let eps = 0.07;
        let dom = LatticeDomain::new(&pot, &bbox, 0.02, None).unwrap();
        let pde = solve_capacity_pde(&dom, eps, &[-1.0, 0.0], &[1.0, 0.0], 0.25, 0.25).unwrap();
        assert_eq!(pde.capacity.shift, -0.25);
        let ratio = pde.capacity.mantissa / eps;
        assert!(
            (0.75..=1.33).contains(&ratio),
            "pde/geometric ratio {ratio} (iters {})",
            pde.iterations
        );
        // solution is an equilibrium potential: bounded in [0,1]
        assert!(pde.solution.iter().all(|&x| (-1e-9..=1.0 + 1e-9).contains(&x)));
    }

    #[test]
    fn pde_capacity_1d_exact() {
        // in 1-D capacity has the closed form (int e^{F/eps} dx)^{-1} * eps
        let e = catalog_entry("double_well_1d").unwrap();
        let eps = 0.1;
        let dom = LatticeDomain::new(&e.potential, &[(-1.8, 1.8)], 0.002, None).unwrap();
        let pde = solve_capacity_pde(&dom, eps, &[-1.0], &[1.0], 0.25, 0.05).unwrap();
        // oracle: trapezoid on the same mesh interior to the electrodes
        let mut s = 0.0;
        let mut x = -0.95 + 0.001;
        while x < 0.95 {
            s += ((e.potential.eval(&[x]) - 0.25) / eps).exp() * 0.002;
            x += 0.002;
        }
        let exact = eps / s;
        let got = pde.capacity.mantissa;
        assert_relative_eq!(got, exact, max_relative = 0.05);
    }

    #[test]
    fn islands_of_double_well() {
        let (pot, bbox) = double_well_2d();
        let dom = LatticeDomain::new(&pot, &bbox, 0.02, None).unwrap();
        let mut islands = island_oscillations(&dom, 0.1);
        islands.sort_by(|a, b| a.representative[0].partial_cmp(&b.representative[0]).unwrap());
        assert_eq!(islands.len(), 2);
        assert!(islands[0].representative[0] < 0.0);
        assert!(islands[1].representative[0] > 0.0);
        for isl in &islands {
            assert!(isl.oscillation < 0.1);
            assert!(isl.f_min < 1e-3);
        }
        // above the saddle the wells merge
        let merged = island_oscillations(&dom, 0.3);
        assert_eq!(merged.len(), 1);
    }

    #[test]
    fn cutoff_masks_high_nodes() {
        let (pot, bbox) = double_well_2d();
        let dom = LatticeDomain::new(&pot, &bbox, 0.02, Some(0.2)).unwrap();
        assert!(dom.active.iter().any(|&a| !a));
        // below-saddle cutoff disconnects the wells
        let r = geodesic_distance(&dom, 0.05, &[-1.0, 0.0], &[1.0, 0.0], 0.0);
        assert!(matches!(r, Err(Error::Disconnected)));
    }

    #[test]
    fn triple_parallel_surface_counts_three_channels() {
        // three identical saddles: the min cut collects all three channels,
        // so V_eps is three times the single-channel value
        let e = catalog_entry("triple_parallel").unwrap();
        let eps = 0.05;
        let dom = LatticeDomain::new(&e.potential, &e.box_hint, 0.01, None).unwrap();
        let r = min_separating_surface(&dom, eps, &[-1.0, 0.0], &[1.0, 0.0], 0.25, 0.2).unwrap();
        // oracle: direct transverse quadrature of e^{-(F(0,y)-0.25)/eps}
        // over the full y-range; at eps = 0.05 the channels are wide and a
        // Gaussian per-channel approximation would be off by ~15%
        let mut expected = 0.0;
        let dy = 1e-4;
        let mut y = -1.45 + 0.5 * dy;
        while y < 1.45 {
            expected += (-(e.potential.eval(&[0.0, y]) - 0.25) / eps).exp() * dy;
            y += dy;
        }
        assert_relative_eq!(r.measure.mantissa, expected, max_relative = 0.03);
        // and the three channels really contribute about equally
        let lam = crate::potential::catalog::TP_LAMBDA;
        let per_channel_gauss = (2.0 * PI * eps / lam).sqrt();
        assert!(r.measure.mantissa > 2.5 * per_channel_gauss);
    }
}
