//! Task orchestration: landscape, geometry, capacity, and dynamics
//! pipelines over the requested noise levels, collected into a
//! self-describing bundle.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use metastab::asymptotics::{check_convex_lemma, error_scale, levelset_volume};
use metastab::capacity::{assemble_capacity, capacity_geometric, eyring_kramers_capacity};
use metastab::dynamics::{
    exit_time_bounds, gibbs_mass_estimate, predict_mean_exit_time, simulate_transition, SimConfig,
};
use metastab::error::{Error, Result};
use metastab::landscape::{extract_network, find_critical_points, CriticalPoint, Network};
use metastab::potential::{
    catalog_entry, CritKind, Potential, Profile1, Transverse,
};
use metastab::transport::{
    geodesic_distance, min_separating_surface, solve_capacity_pde, LatticeDomain,
};
use metastab::ScaledValue;

use crate::config::{ExperimentConfig, PotentialSpec, Task};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: String,
    /// None for eps-independent tasks
    pub eps: Option<f64>,
    pub ok: bool,
    pub value: Option<Value>,
    pub error: Option<String>,
    pub timing_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsDiagnostic {
    pub eps: f64,
    pub eps1: Option<f64>,
    pub eta_hat: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub eps: f64,
    /// geometric / pde capacity
    pub ratio: f64,
    pub eta_hat: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    /// |ratio - 1| nonincreasing as eps decreases
    pub trend_improving: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema_version: u32,
    pub config_hash: String,
    pub potential: String,
    pub eps: Vec<f64>,
    pub records: Vec<TaskRecord>,
    pub diagnostics: Vec<EpsDiagnostic>,
    pub compare: Option<CompareTable>,
}

impl ResultBundle {
    pub fn any_failed(&self) -> bool {
        self.records.iter().any(|r| !r.ok)
    }
}

fn scaled_json(v: &ScaledValue, eps: f64) -> Value {
    json!({
        "mantissa": v.mantissa,
        "shift": v.shift,
        "ln_value_at_eps": v.ln_at(eps),
    })
}

/// Lazily computed shared state for one experiment.
struct Pipeline<'a> {
    cfg: &'a ExperimentConfig,
    potential: Potential,
    a: Vec<f64>,
    b: Vec<f64>,
    domain: Option<LatticeDomain>,
    cps: Option<Vec<CriticalPoint>>,
    network: Option<Network>,
    /// communication height, the common exponent reference
    f_ref: Option<f64>,
    d_cache: Vec<(f64, ScaledValue)>,
    v_cache: Vec<(f64, ScaledValue)>,
    geo_cache: Vec<(f64, ScaledValue)>,
}

impl<'a> Pipeline<'a> {
    fn domain(&mut self) -> Result<&LatticeDomain> {
        if self.domain.is_none() {
            self.domain =
                Some(LatticeDomain::new(&self.potential, &self.cfg.bbox(), self.cfg.lattice.h, None)?);
        }
        Ok(self.domain.as_ref().unwrap())
    }

    fn critical_points(&mut self) -> Result<&[CriticalPoint]> {
        if self.cps.is_none() {
            let starts = 400 * self.potential.dim.max(1) * 2;
            self.cps =
                Some(find_critical_points(&self.potential, &self.cfg.bbox(), starts, self.cfg.seed)?);
        }
        Ok(self.cps.as_ref().unwrap())
    }

    fn network(&mut self) -> Result<&Network> {
        if self.network.is_none() {
            self.critical_points()?;
            let pot = self.potential.clone();
            let cps = self.cps.clone().unwrap();
            let (a, b, delta) = (self.a.clone(), self.b.clone(), self.cfg.delta);
            let dom = self.domain()?;
            self.network = Some(extract_network(&pot, dom, &cps, &a, &b, delta)?);
        }
        Ok(self.network.as_ref().unwrap())
    }

    fn f_ref(&mut self) -> Result<f64> {
        if self.f_ref.is_none() {
            let (a, b) = (self.a.clone(), self.b.clone());
            let dom = self.domain()?;
            let h = metastab::landscape::communication_height(dom, &a, &b)?.height;
            self.f_ref = Some(h);
        }
        Ok(self.f_ref.unwrap())
    }

    fn d_eps(&mut self, eps: f64) -> Result<ScaledValue> {
        if let Some((_, v)) = self.d_cache.iter().find(|(e, _)| *e == eps) {
            return Ok(*v);
        }
        let f_ref = self.f_ref()?;
        let (a, b) = (self.a.clone(), self.b.clone());
        let dom = self.domain()?;
        let d = geodesic_distance(dom, eps, &a, &b, f_ref)?.distance;
        self.d_cache.push((eps, d));
        Ok(d)
    }

    fn v_eps(&mut self, eps: f64) -> Result<ScaledValue> {
        if let Some((_, v)) = self.v_cache.iter().find(|(e, _)| *e == eps) {
            return Ok(*v);
        }
        let f_ref = self.f_ref()?;
        let (a, b, delta) = (self.a.clone(), self.b.clone(), self.cfg.delta);
        let dom = self.domain()?;
        let v = min_separating_surface(dom, eps, &a, &b, f_ref, delta)?.measure;
        self.v_cache.push((eps, v));
        Ok(v)
    }

    fn capacity_geo(&mut self, eps: f64) -> Result<ScaledValue> {
        if let Some((_, v)) = self.geo_cache.iter().find(|(e, _)| *e == eps) {
            return Ok(*v);
        }
        let d = self.d_eps(eps)?;
        let v = self.v_eps(eps)?;
        let cap = capacity_geometric(&d, &v, eps)?;
        self.geo_cache.push((eps, cap));
        Ok(cap)
    }

    /// Transverse (full-dimensional) profile describing the well nearest
    /// the start point: the catalog's listed profile when available, else
    /// the harmonic approximation from the located Hessian spectrum.
    fn start_well_profile(&mut self) -> Result<(f64, Transverse)> {
        if let PotentialSpec::Catalog(name) = &self.cfg.potential {
            if let Ok(entry) = catalog_entry(name) {
                let a = self.a.clone();
                let best = entry
                    .minima()
                    .min_by(|p, q| {
                        let dp: f64 =
                            p.location.iter().zip(&a).map(|(x, y)| (x - y) * (x - y)).sum();
                        let dq: f64 =
                            q.location.iter().zip(&a).map(|(x, y)| (x - y) * (x - y)).sum();
                        dp.partial_cmp(&dq).unwrap()
                    })
                    .ok_or(Error::EmptyResult)?;
                return Ok((best.value, best.profile.transverse.clone()));
            }
        }
        let a = self.a.clone();
        let cps = self.critical_points()?;
        let best = cps
            .iter()
            .filter(|c| c.kind == CritKind::Minimum)
            .min_by(|p, q| {
                let dp: f64 = p.location.iter().zip(&a).map(|(x, y)| (x - y) * (x - y)).sum();
                let dq: f64 = q.location.iter().zip(&a).map(|(x, y)| (x - y) * (x - y)).sum();
                dp.partial_cmp(&dq).unwrap()
            })
            .ok_or(Error::EmptyResult)?;
        let profiles =
            best.spectrum.iter().map(|&l| Profile1::quadratic(l)).collect::<Vec<_>>();
        Ok((best.value, Transverse::Separable(profiles)))
    }
}

fn run_task(p: &mut Pipeline, task: Task, eps: Option<f64>) -> Result<Value> {
    match task {
        Task::CriticalPoints => {
            let cps = p.critical_points()?;
            let points: Vec<Value> = cps
                .iter()
                .map(|c| {
                    json!({
                        "location": c.location,
                        "value": c.value,
                        "kind": format!("{:?}", c.kind),
                        "spectrum": c.spectrum,
                    })
                })
                .collect();
            Ok(json!({ "count": points.len(), "points": points }))
        }
        Task::Network => {
            let net = p.network()?;
            Ok(json!({
                "topology": format!("{:?}", net.topology),
                "height": net.height,
                "islands": net.islands.len(),
                "bridges": net.bridges.iter().map(|b| json!({
                    "value": b.value,
                    "connects": [b.connects.0, b.connects.1],
                })).collect::<Vec<_>>(),
            }))
        }
        Task::DEps => {
            let eps = eps.unwrap();
            let d = p.d_eps(eps)?;
            Ok(scaled_json(&d, eps))
        }
        Task::VEps => {
            let eps = eps.unwrap();
            let v = p.v_eps(eps)?;
            Ok(scaled_json(&v, eps))
        }
        Task::CapacityGeometric => {
            let eps = eps.unwrap();
            let cap = p.capacity_geo(eps)?;
            Ok(scaled_json(&cap, eps))
        }
        Task::CapacityPde => {
            let eps = eps.unwrap();
            let f_ref = p.f_ref()?;
            let (a, b, delta) = (p.a.clone(), p.b.clone(), p.cfg.delta);
            let dom = p.domain()?;
            let r = solve_capacity_pde(dom, eps, &a, &b, f_ref, delta)?;
            let mut v = scaled_json(&r.capacity, eps);
            v["iterations"] = json!(r.iterations);
            v["residual"] = json!(r.residual);
            Ok(v)
        }
        Task::EkClassical => {
            let eps = eps.unwrap();
            let net = p.network()?;
            let topology = net.topology;
            let bridge_idx: Vec<usize> = net.bridges.iter().map(|b| b.saddle).collect();
            let island_a = net.island_a;
            let minima_a: Vec<usize> = net
                .islands
                .iter()
                .find(|i| i.label == island_a)
                .map(|i| i.minima.clone())
                .unwrap_or_default();
            let cps = p.cps.clone().unwrap();
            let mut caps = Vec::new();
            for &i in &bridge_idx {
                let cp = &cps[i];
                if cp.kind == CritKind::Degenerate {
                    return Err(Error::SpectrumInvalid);
                }
                caps.push(eyring_kramers_capacity(&cp.spectrum, cp.value, eps)?);
            }
            let cap = assemble_capacity(topology, &caps, eps)?;
            // harmonic Gibbs mass of the starting island's wells
            let wells: Vec<(f64, Transverse)> = minima_a
                .iter()
                .map(|&i| {
                    let c = &cps[i];
                    (
                        c.value,
                        Transverse::Separable(
                            c.spectrum.iter().map(|&l| Profile1::quadratic(l)).collect(),
                        ),
                    )
                })
                .collect();
            if wells.is_empty() {
                return Err(Error::EmptyResult);
            }
            let refs: Vec<(f64, &Transverse)> = wells.iter().map(|(f, t)| (*f, t)).collect();
            let mass = gibbs_mass_estimate(&refs, eps)?;
            let time = predict_mean_exit_time(&mass, &cap)?;
            Ok(json!({
                "capacity": scaled_json(&cap, eps),
                "mean_exit_time": scaled_json(&time, eps),
                "topology": format!("{topology:?}"),
                "saddles": caps.len(),
            }))
        }
        Task::Simulate => {
            let eps = eps.unwrap();
            let sim = p.cfg.sim.as_ref().unwrap();
            let cfg = SimConfig {
                dt: sim.dt,
                max_steps: sim.max_steps,
                paths: sim.paths,
                seed: p.cfg.seed,
                target_radius: sim.target_radius,
                domain_box: p.cfg.bbox(),
            };
            let r = simulate_transition(&p.potential, eps, &p.a.clone(), &p.b.clone(), &cfg)?;
            Ok(json!({
                "mean": r.mean,
                "stderr": r.stderr,
                "hits": r.hits,
                "censored": r.censored,
            }))
        }
        Task::ExitBound => {
            let eps = eps.unwrap();
            let cap = p.capacity_geo(eps)?;
            let (f_min, transverse) = p.start_well_profile()?;
            let n = p.potential.dim;
            let vol = match &transverse {
                Transverse::Empty => 1.0,
                t => {
                    let bb = t.bounding_box(eps)?;
                    let inflated: Vec<(f64, f64)> = bb
                        .iter()
                        .map(|&(lo, hi)| {
                            let c = 0.5 * (lo + hi);
                            let r = 0.75 * (hi - lo);
                            (c - r, c + r)
                        })
                        .collect();
                    levelset_volume(t, eps, &inflated, 200_000)?.value
                }
            };
            let b = exit_time_bounds(vol, f_min, n, &cap, eps, 1.0, 1.0)?;
            Ok(json!({
                "ln_lower_at_eps": b.lower.ln_at(eps),
                "ln_upper_at_eps": b.upper.ln_at(eps),
                "start_volume": vol,
                "alpha": b.alpha,
                "c": b.c,
            }))
        }
        Task::ConvexChecks => {
            let eps = eps.unwrap();
            let (_, transverse) = p.start_well_profile()?;
            let rep = check_convex_lemma(&transverse, eps, 200_000)?;
            Ok(serde_json::to_value(&rep).map_err(|e| Error::InvalidInput(e.to_string()))?)
        }
    }
}

fn eps_independent(task: Task) -> bool {
    matches!(task, Task::CriticalPoints | Task::Network)
}

/// Execute the configured tasks in dependency order and assemble the
/// bundle.  Task errors are recorded per task without aborting siblings.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    cfg.validate()?;
    let (potential, catalog_name) = cfg.build_potential()?;
    let (a, b) = cfg.transition_pair()?;
    if a.len() != potential.dim || b.len() != potential.dim {
        return Err(Error::ConfigInvalid {
            field: "pair".to_string(),
            message: "transition pair dimension mismatch".to_string(),
        });
    }
    if cfg.lattice.bbox.len() != potential.dim {
        return Err(Error::ConfigInvalid {
            field: "lattice.box".to_string(),
            message: "lattice box dimension mismatch".to_string(),
        });
    }

    let config_hash = {
        let canon = serde_json::to_string(cfg).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        format!("{:x}", hasher.finalize())
    };

    let mut pipeline = Pipeline {
        cfg,
        potential,
        a,
        b,
        domain: None,
        cps: None,
        network: None,
        f_ref: None,
        d_cache: Vec::new(),
        v_cache: Vec::new(),
        geo_cache: Vec::new(),
    };

    let mut records = Vec::new();
    for task in Task::ORDER {
        if !cfg.tasks.contains(&task) {
            continue;
        }
        let eps_slots: Vec<Option<f64>> = if eps_independent(task) {
            vec![None]
        } else {
            cfg.eps.iter().map(|&e| Some(e)).collect()
        };
        for eps in eps_slots {
            let t0 = Instant::now();
            let out = run_task(&mut pipeline, task, eps);
            let timing_ms = t0.elapsed().as_secs_f64() * 1e3;
            records.push(match out {
                Ok(value) => TaskRecord {
                    task: task.name().to_string(),
                    eps,
                    ok: true,
                    value: Some(value),
                    error: None,
                    timing_ms,
                },
                Err(e) => TaskRecord {
                    task: task.name().to_string(),
                    eps,
                    ok: false,
                    value: None,
                    error: Some(e.to_string()),
                    timing_ms,
                },
            });
        }
    }

    let diagnostics = cfg
        .eps
        .iter()
        .map(|&eps| {
            match error_scale(&pipeline.potential.omega, eps, pipeline.potential.dim, 1.0) {
                Ok(es) => EpsDiagnostic { eps, eps1: Some(es.eps1), eta_hat: Some(es.eta_hat) },
                Err(_) => EpsDiagnostic { eps, eps1: None, eta_hat: None },
            }
        })
        .collect();

    let mut bundle = ResultBundle {
        schema_version: SCHEMA_VERSION,
        config_hash,
        potential: catalog_name.unwrap_or_else(|| "inline".to_string()),
        eps: cfg.eps.clone(),
        records,
        diagnostics,
        compare: None,
    };
    bundle.compare = compare_report(&bundle).ok();
    Ok(bundle)
}

/// Ratio table geometric/pde per eps with the eta-hat diagnostic and a
/// trend flag.  Requires both capacity routes at two or more noise levels.
pub fn compare_report(bundle: &ResultBundle) -> Result<CompareTable> {
    let ln_of = |task: &str, eps: f64| -> Option<f64> {
        bundle
            .records
            .iter()
            .find(|r| r.task == task && r.eps == Some(eps) && r.ok)
            .and_then(|r| r.value.as_ref())
            .and_then(|v| v.get("ln_value_at_eps"))
            .and_then(|v| v.as_f64())
    };
    let mut rows = Vec::new();
    for &eps in &bundle.eps {
        let (Some(g), Some(p)) = (ln_of("capacity_geometric", eps), ln_of("capacity_pde", eps))
        else {
            continue;
        };
        let eta = bundle
            .diagnostics
            .iter()
            .find(|d| d.eps == eps)
            .and_then(|d| d.eta_hat);
        rows.push(CompareRow { eps, ratio: (g - p).exp(), eta_hat: eta });
    }
    if rows.len() < 2 {
        return Err(Error::MissingData(
            "compare report needs geometric and pde capacities at two or more noise levels"
                .to_string(),
        ));
    }
    let trend_improving = rows
        .windows(2)
        .all(|w| (w[1].ratio - 1.0).abs() <= (w[0].ratio - 1.0).abs() + 1e-12);
    Ok(CompareTable { rows, trend_improving })
}

/// Render one CSV per task family, plus the comparison table.
pub fn write_csvs(bundle: &ResultBundle, dir: &std::path::Path) -> std::io::Result<()> {
    use std::io::Write;
    let tasks: Vec<&str> = {
        let mut seen = Vec::new();
        for r in &bundle.records {
            if !seen.contains(&r.task.as_str()) {
                seen.push(r.task.as_str());
            }
        }
        seen
    };
    for task in tasks {
        let path = dir.join(format!("{task}.csv"));
        let mut f = std::fs::File::create(path)?;
        match task {
            "critical_points" => {
                writeln!(f, "index,kind,value,location")?;
                if let Some(rec) =
                    bundle.records.iter().find(|r| r.task == task && r.value.is_some())
                {
                    let pts = rec.value.as_ref().unwrap()["points"].as_array().cloned();
                    for (i, pt) in pts.unwrap_or_default().iter().enumerate() {
                        let loc: Vec<String> = pt["location"]
                            .as_array()
                            .unwrap()
                            .iter()
                            .map(|v| format!("{}", v.as_f64().unwrap()))
                            .collect();
                        writeln!(
                            f,
                            "{i},{},{},{}",
                            pt["kind"].as_str().unwrap(),
                            pt["value"],
                            loc.join(" ")
                        )?;
                    }
                }
            }
            "network" => {
                writeln!(f, "topology,height,islands,bridges")?;
                if let Some(rec) =
                    bundle.records.iter().find(|r| r.task == task && r.value.is_some())
                {
                    let v = rec.value.as_ref().unwrap();
                    writeln!(
                        f,
                        "{},{},{},{}",
                        v["topology"].as_str().unwrap(),
                        v["height"],
                        v["islands"],
                        v["bridges"].as_array().map(|a| a.len()).unwrap_or(0)
                    )?;
                }
            }
            "simulate" => {
                writeln!(f, "eps,mean,stderr,hits,censored")?;
                for r in bundle.records.iter().filter(|r| r.task == task) {
                    if let (Some(eps), Some(v)) = (r.eps, r.value.as_ref()) {
                        writeln!(
                            f,
                            "{eps},{},{},{},{}",
                            v["mean"], v["stderr"], v["hits"], v["censored"]
                        )?;
                    }
                }
            }
            "exit_bound" => {
                writeln!(f, "eps,ln_lower,ln_upper,start_volume")?;
                for r in bundle.records.iter().filter(|r| r.task == task) {
                    if let (Some(eps), Some(v)) = (r.eps, r.value.as_ref()) {
                        writeln!(
                            f,
                            "{eps},{},{},{}",
                            v["ln_lower_at_eps"], v["ln_upper_at_eps"], v["start_volume"]
                        )?;
                    }
                }
            }
            "convex_checks" => {
                writeln!(f, "eps,sandwich_ratio,passed")?;
                for r in bundle.records.iter().filter(|r| r.task == task) {
                    if let (Some(eps), Some(v)) = (r.eps, r.value.as_ref()) {
                        writeln!(f, "{eps},{},{}", v["sandwich_ratio"], v["passed"])?;
                    }
                }
            }
            _ => {
                // scaled-value families
                writeln!(f, "eps,mantissa,shift,ln_value")?;
                for r in bundle.records.iter().filter(|r| r.task == task) {
                    if let (Some(eps), Some(v)) = (r.eps, r.value.as_ref()) {
                        let v = if task == "ek_classical" { &v["capacity"] } else { v };
                        writeln!(
                            f,
                            "{eps},{},{},{}",
                            v["mantissa"], v["shift"], v["ln_value_at_eps"]
                        )?;
                    }
                }
            }
        }
    }
    if let Some(cmp) = &bundle.compare {
        let mut f = std::fs::File::create(dir.join("compare.csv"))?;
        writeln!(f, "eps,ratio,eta_hat,trend_improving")?;
        for row in &cmp.rows {
            writeln!(
                f,
                "{},{},{},{}",
                row.eps,
                row.ratio,
                row.eta_hat.map(|e| e.to_string()).unwrap_or_default(),
                cmp.trend_improving
            )?;
        }
    }
    Ok(())
}
