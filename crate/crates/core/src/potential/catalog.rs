//! Built-in test landscapes.
//!
//! Each entry carries its potential, the known critical points with local
//! profiles, the expected saddle-network topology for the canonical pair of
//! wells, and a bounding box that contains every feature of interest.
//! All entries confine with explicit far-field terms so trajectories cannot
//! escape and the quadratic growth bound holds globally.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{
    CritKind, Frame, LocalProfile, Modulus, Potential, Profile1, Topology, Transverse,
};
use crate::error::{Error, Result};

/// A located critical point with classification data and local profiles.
#[derive(Clone)]
pub struct CatalogPoint {
    pub location: Vec<f64>,
    pub kind: CritKind,
    pub value: f64,
    pub profile: LocalProfile,
}

/// A named test landscape.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub potential: Potential,
    pub critical_points: Vec<CatalogPoint>,
    pub expected_topology: Topology,
    /// Axis-aligned box containing all features of interest.
    pub box_hint: Vec<(f64, f64)>,
    /// Canonical transition pair (x_a, x_b).
    pub pair: (Vec<f64>, Vec<f64>),
}

impl CatalogEntry {
    pub fn minima(&self) -> impl Iterator<Item = &CatalogPoint> {
        self.critical_points.iter().filter(|p| p.kind == CritKind::Minimum)
    }

    pub fn saddles(&self) -> impl Iterator<Item = &CatalogPoint> {
        self.critical_points
            .iter()
            .filter(|p| matches!(p.kind, CritKind::Saddle | CritKind::Degenerate))
    }
}

fn default_omega() -> Modulus {
    // K fitted so the structural inequality holds on every catalog profile
    // at small delta; the binding case is the cubic Taylor remainder at the
    // quartic wells (K just above 1.1).
    Modulus::power_law(1.5, 1.5)
}

fn quad_min_profile(curvatures: &[f64], origin: Vec<f64>) -> LocalProfile {
    let comps = curvatures.iter().map(|&l| Profile1::quadratic(l)).collect();
    LocalProfile::minimum(Transverse::Separable(comps), Frame::identity(origin))
}

/// `F(x) = (x_1^2 - 1)^2 / 4 + sum_{j>=2} x_j^2 / 2`.
///
/// Minima at `(+-1, 0, ...)` of value 0, saddle at the origin of value 1/4
/// with downhill curvature 1 and transverse curvatures 1.
pub fn make_quadratic_double_well(n: usize) -> Potential {
    assert!(n >= 1, "dimension must be positive");
    let eval: super::ScalarFn = Arc::new(move |x: &[f64]| {
        let q = x[0] * x[0] - 1.0;
        0.25 * q * q + x[1..].iter().map(|v| 0.5 * v * v).sum::<f64>()
    });
    let grad: super::VecFn = Arc::new(move |x: &[f64]| {
        let mut g = x.to_vec();
        g[0] = x[0] * x[0] * x[0] - x[0];
        g
    });
    let hess: super::MatFn = Arc::new(move |x: &[f64]| {
        let mut m = DMatrix::identity(x.len(), x.len());
        m[(0, 0)] = 3.0 * x[0] * x[0] - 1.0;
        m
    });
    Potential::new(n, eval, grad, Some(hess), 4.0, default_omega())
}

fn double_well_entry(n: usize, name: &str) -> CatalogEntry {
    let p = make_quadratic_double_well(n);
    let e = |x0: f64| {
        let mut v = vec![0.0; n];
        v[0] = x0;
        v
    };
    let min_curv: Vec<f64> = std::iter::once(2.0).chain(std::iter::repeat(1.0)).take(n).collect();
    let saddle_profile = LocalProfile::saddle(
        Profile1::quadratic(1.0),
        if n == 1 {
            Transverse::Empty
        } else {
            Transverse::Separable(vec![Profile1::quadratic(1.0); n - 1])
        },
        Frame::identity(vec![0.0; n]),
    );
    let critical_points = vec![
        CatalogPoint {
            location: e(-1.0),
            kind: CritKind::Minimum,
            value: 0.0,
            profile: quad_min_profile(&min_curv, e(-1.0)),
        },
        CatalogPoint {
            location: e(1.0),
            kind: CritKind::Minimum,
            value: 0.0,
            profile: quad_min_profile(&min_curv, e(1.0)),
        },
        CatalogPoint {
            location: vec![0.0; n],
            kind: CritKind::Saddle,
            value: 0.25,
            profile: saddle_profile,
        },
    ];
    let mut box_hint = vec![(-1.8, 1.8)];
    box_hint.extend(std::iter::repeat((-1.2, 1.2)).take(n - 1));
    CatalogEntry {
        name: name.to_string(),
        potential: p,
        critical_points,
        expected_topology: Topology::Single,
        box_hint,
        pair: (e(-1.0), e(1.0)),
    }
}

/// Degenerate saddle in dimension 2: downhill profile `-|x_1|^p` with a
/// confining `|x_1|^{2p}/2` term, transverse profile `x_2^2/2`.
///
/// `F(x) = -|x_1|^p + |x_1|^{2p}/2 + x_2^2/2`; wells at `(+-1, 0)` of value
/// -1/2, saddle at the origin of value 0 with a vanishing eigenvalue along
/// the first axis.
pub fn make_degenerate_saddle(p: u32) -> Potential {
    assert!(p >= 4 && p % 2 == 0, "p must be even and >= 4");
    let pf = p as f64;
    let eval: super::ScalarFn = Arc::new(move |x: &[f64]| {
        let a = x[0].abs();
        -a.powf(pf) + 0.5 * a.powf(2.0 * pf) + 0.5 * x[1] * x[1]
    });
    let grad: super::VecFn = Arc::new(move |x: &[f64]| {
        let a = x[0].abs();
        let s = x[0].signum();
        vec![s * (-pf * a.powf(pf - 1.0) + pf * a.powf(2.0 * pf - 1.0)), x[1]]
    });
    let hess: super::MatFn = Arc::new(move |x: &[f64]| {
        let a = x[0].abs();
        let d2 = -pf * (pf - 1.0) * a.powf(pf - 2.0)
            + pf * (2.0 * pf - 1.0) * a.powf(2.0 * pf - 2.0);
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![d2, 1.0]))
    });
    Potential::new(2, eval, grad, Some(hess), 4.0, default_omega())
}

fn degenerate_entry(p: u32) -> CatalogEntry {
    let pot = make_degenerate_saddle(p);
    let pf = p as f64;
    // F1''(1) = -p(p-1) + p(2p-1) = p^2
    let min_curv = [pf * pf, 1.0];
    let saddle_profile = LocalProfile::saddle(
        Profile1::power(pf),
        Transverse::Separable(vec![Profile1::quadratic(1.0)]),
        Frame::identity(vec![0.0, 0.0]),
    );
    let critical_points = vec![
        CatalogPoint {
            location: vec![-1.0, 0.0],
            kind: CritKind::Minimum,
            value: -0.5,
            profile: quad_min_profile(&min_curv, vec![-1.0, 0.0]),
        },
        CatalogPoint {
            location: vec![1.0, 0.0],
            kind: CritKind::Minimum,
            value: -0.5,
            profile: quad_min_profile(&min_curv, vec![1.0, 0.0]),
        },
        CatalogPoint {
            location: vec![0.0, 0.0],
            kind: CritKind::Degenerate,
            value: 0.0,
            profile: saddle_profile,
        },
    ];
    CatalogEntry {
        name: format!("degenerate_p{p}"),
        potential: pot,
        critical_points,
        expected_topology: Topology::Single,
        box_hint: vec![(-1.5, 1.5), (-1.2, 1.2)],
        pair: (vec![-1.0, 0.0], vec![1.0, 0.0]),
    }
}

pub const TP_C: f64 = 0.05;
/// Transverse curvature at the channel minima: `4 pi^2 * TP_C`.
pub const TP_LAMBDA: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI * TP_C;

fn hinge4(t: f64) -> f64 {
    if t > 0.0 { t * t * t * t } else { 0.0 }
}

fn hinge4_d(t: f64) -> f64 {
    if t > 0.0 { 4.0 * t * t * t } else { 0.0 }
}

fn hinge4_dd(t: f64) -> f64 {
    if t > 0.0 { 12.0 * t * t } else { 0.0 }
}

/// Three identical saddles in parallel.
///
/// `F(x, y) = (x^2-1)^2/4 + c (1 - cos(2 pi y)) + 5 ((|y|-1.25)_+)^4` with
/// `c = 0.05`.  Two islands (all wells at x = -1, all wells at x = +1),
/// three channels at `y = -1, 0, 1` with saddles of height 1/4 and identical
/// Hessians `diag(-1, 4 pi^2 c)`.  The inter-channel barriers (height 0.1)
/// sit below the communication height, so the islands merge across
/// channels.
pub fn triple_parallel() -> CatalogEntry {
    use std::f64::consts::PI;
    let eval: super::ScalarFn = Arc::new(|x: &[f64]| {
        let q = x[0] * x[0] - 1.0;
        0.25 * q * q + TP_C * (1.0 - (2.0 * PI * x[1]).cos()) + 5.0 * hinge4(x[1].abs() - 1.25)
    });
    let grad: super::VecFn = Arc::new(|x: &[f64]| {
        vec![
            x[0] * x[0] * x[0] - x[0],
            TP_C * 2.0 * PI * (2.0 * PI * x[1]).sin()
                + 5.0 * hinge4_d(x[1].abs() - 1.25) * x[1].signum(),
        ]
    });
    let hess: super::MatFn = Arc::new(|x: &[f64]| {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            3.0 * x[0] * x[0] - 1.0,
            TP_C * 4.0 * PI * PI * (2.0 * PI * x[1]).cos() + 5.0 * hinge4_dd(x[1].abs() - 1.25),
        ]))
    });
    let pot = Potential::new(2, eval, grad, Some(hess), 4.0, default_omega());

    let mut critical_points = Vec::new();
    for ym in [-1.0, 0.0, 1.0] {
        for xm in [-1.0, 1.0] {
            critical_points.push(CatalogPoint {
                location: vec![xm, ym],
                kind: CritKind::Minimum,
                value: 0.0,
                profile: quad_min_profile(&[2.0, TP_LAMBDA], vec![xm, ym]),
            });
        }
        critical_points.push(CatalogPoint {
            location: vec![0.0, ym],
            kind: CritKind::Saddle,
            value: 0.25,
            profile: LocalProfile::saddle(
                Profile1::quadratic(1.0),
                Transverse::Separable(vec![Profile1::quadratic(TP_LAMBDA)]),
                Frame::identity(vec![0.0, ym]),
            ),
        });
    }
    // Intra-island saddles between channels; they sit below the
    // communication height and never charge capacity.
    for ys in [-0.5, 0.5] {
        for xm in [-1.0, 1.0] {
            critical_points.push(CatalogPoint {
                location: vec![xm, ys],
                kind: CritKind::Saddle,
                value: 2.0 * TP_C,
                profile: LocalProfile::saddle(
                    Profile1::quadratic(TP_LAMBDA),
                    Transverse::Separable(vec![Profile1::quadratic(2.0)]),
                    Frame {
                        origin: vec![xm, ys],
                        rotation: Some(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
                    },
                ),
            });
        }
    }
    CatalogEntry {
        name: "triple_parallel".to_string(),
        potential: pot,
        critical_points,
        expected_topology: Topology::Parallel,
        box_hint: vec![(-1.8, 1.8), (-1.45, 1.45)],
        pair: (vec![-1.0, 0.0], vec![1.0, 0.0]),
    }
}

/// Saddle curvature magnitude: `0.275 pi^2 / 2`, the same at every odd
/// integer because the envelope has period 4 and equals 0.275 there.
pub const CS_SADDLE_CURV: f64 = 1.3570706;
/// Well curvature at x = 0 and x = 4 (depth 0.25): `pi^2 (1/8 - 1/160)`.
pub const CS_SHALLOW_CURV: f64 = 1.1720155;
/// Well curvature at x = +-2 (depth 0.3): `pi^2 (3/20 + 1/160)`.
pub const CS_DEEP_CURV: f64 = 1.5421257;

/// Three identical saddles in series (1-D).
///
/// `F(x) = -d(x) u(x) + 5 ((|x-1|-3.25)_+)^4` with
/// `d(x) = 0.25 + 0.05 sin^2(pi x / 4)` and `u(x) = (1 + cos(pi x))/2`.
/// Wells at -2, 0, 2, 4 of values -0.3, -0.25, -0.3, -0.25, linked by
/// three saddles at -1, 1, 3, all of height 0 with identical curvature
/// (the canonical pair (-2, 4) crosses all three).
pub fn chain_series_3() -> CatalogEntry {
    use std::f64::consts::PI;
    let depth = |x: f64| 0.25 + 0.05 * (PI * x / 4.0).sin().powi(2);
    let depth_d = |x: f64| 0.05 * (PI / 4.0) * (PI * x / 2.0).sin();
    let depth_dd = |x: f64| 0.05 * (PI * PI / 8.0) * (PI * x / 2.0).cos();
    let bump = |x: f64| 0.5 * (1.0 + (PI * x).cos());
    let bump_d = |x: f64| -0.5 * PI * (PI * x).sin();
    let bump_dd = |x: f64| -0.5 * PI * PI * (PI * x).cos();

    let eval: super::ScalarFn = Arc::new(move |x: &[f64]| {
        -depth(x[0]) * bump(x[0]) + 5.0 * hinge4((x[0] - 1.0).abs() - 3.25)
    });
    let grad: super::VecFn = Arc::new(move |x: &[f64]| {
        vec![
            -(depth_d(x[0]) * bump(x[0]) + depth(x[0]) * bump_d(x[0]))
                + 5.0 * hinge4_d((x[0] - 1.0).abs() - 3.25) * (x[0] - 1.0).signum(),
        ]
    });
    let hess: super::MatFn = Arc::new(move |x: &[f64]| {
        DMatrix::from_element(
            1,
            1,
            -(depth_dd(x[0]) * bump(x[0])
                + 2.0 * depth_d(x[0]) * bump_d(x[0])
                + depth(x[0]) * bump_dd(x[0]))
                + 5.0 * hinge4_dd((x[0] - 1.0).abs() - 3.25),
        )
    });
    let pot = Potential::new(1, eval, grad, Some(hess), 6.0, default_omega());

    let mut critical_points = Vec::new();
    for xm in [0.0, 4.0] {
        critical_points.push(CatalogPoint {
            location: vec![xm],
            kind: CritKind::Minimum,
            value: -0.25,
            profile: quad_min_profile(&[CS_SHALLOW_CURV], vec![xm]),
        });
    }
    for xm in [-2.0, 2.0] {
        critical_points.push(CatalogPoint {
            location: vec![xm],
            kind: CritKind::Minimum,
            value: -0.3,
            profile: quad_min_profile(&[CS_DEEP_CURV], vec![xm]),
        });
    }
    for xs in [-1.0, 1.0, 3.0] {
        critical_points.push(CatalogPoint {
            location: vec![xs],
            kind: CritKind::Saddle,
            value: 0.0,
            profile: LocalProfile::saddle(
                Profile1::quadratic(CS_SADDLE_CURV),
                Transverse::Empty,
                Frame::identity(vec![xs]),
            ),
        });
    }
    CatalogEntry {
        name: "chain_series_3".to_string(),
        potential: pot,
        critical_points,
        expected_topology: Topology::Series,
        box_hint: vec![(-3.05, 5.05)],
        pair: (vec![-2.0], vec![4.0]),
    }
}

/// All built-in landscapes.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        double_well_entry(1, "double_well_1d"),
        double_well_entry(2, "double_well_2d"),
        double_well_entry(3, "double_well_3d"),
        degenerate_entry(4),
        degenerate_entry(6),
        triple_parallel(),
        chain_series_3(),
    ]
}

/// Look up a catalog entry by name.
pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown catalog entry '{name}'")))
}
