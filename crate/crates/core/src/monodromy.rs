//! Numerical monodromy: adaptive Dormand–Prince transport of a fundamental
//! matrix along piecewise paths, keyhole generators and trace comparison.
//!
//! Convention: continuing a fundamental matrix `Y` along a loop `γ` gives
//! `Y · M_γ`, and `M_{γ₁γ₂} = M_{γ₂} M_{γ₁}` (first `γ₁`, then `γ₂`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::systems::RationalSystem;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_REP_TOL: f64 = 1e-8;
/// Smallest step, as a fraction of the segment parameter range.
pub const STEP_FLOOR: f64 = 1e-14;

/// Integrator tolerance: `ISOMON_TOL` if set and positive, else the default.
pub fn tolerance_from_env() -> f64 {
    std::env::var("ISOMON_TOL")
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|t| *t > 0.0 && t.is_finite())
        .unwrap_or(DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Segment {
    Line { from: C64, to: C64 },
    /// `center + radius·exp(i(start + s·sweep))`, `s ∈ [0, 1]`.
    Arc { center: C64, radius: f64, start: f64, sweep: f64 },
}

impl Segment {
    fn point(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { from, to } => from + (to - from) * s,
            Segment::Arc { center, radius, start, sweep } => center + C64::from_polar(radius, start + s * sweep),
        }
    }

    fn velocity(&self, s: f64) -> C64 {
        match *self {
            Segment::Line { from, to } => to - from,
            Segment::Arc { radius, start, sweep, .. } => {
                C64::new(0.0, sweep) * C64::from_polar(radius, start + s * sweep)
            }
        }
    }

    fn distance_to(&self, u: C64) -> f64 {
        match *self {
            Segment::Line { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                let s = if len2 == 0.0 {
                    0.0
                } else {
                    (((u - from) * d.conj()).re / len2).clamp(0.0, 1.0)
                };
                (self.point(s) - u).norm()
            }
            Segment::Arc { .. } => (0..=256)
                .map(|k| (self.point(k as f64 / 256.0) - u).norm())
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn reversed(&self) -> Segment {
        match *self {
            Segment::Line { from, to } => Segment::Line { from: to, to: from },
            Segment::Arc { center, radius, start, sweep } => Segment::Arc {
                center,
                radius,
                start: start + sweep,
                sweep: -sweep,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Path {
    pub segments: Vec<Segment>,
}

impl Path {
    pub fn new(segments: Vec<Segment>) -> Self {
        Path { segments }
    }

    pub fn start(&self) -> Option<C64> {
        self.segments.first().map(|s| s.point(0.0))
    }

    pub fn end(&self) -> Option<C64> {
        self.segments.last().map(|s| s.point(1.0))
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Path) -> Path {
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().copied());
        Path { segments }
    }

    pub fn reversed(&self) -> Path {
        Path {
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
        }
    }

    pub fn min_distance(&self, points: &[C64]) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| points.iter().map(move |&u| s.distance_to(u)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Full circle through `start` around `center`, positively oriented.
    pub fn circle(center: C64, start: C64) -> Path {
        let rel = start - center;
        Path::new(vec![Segment::Arc {
            center,
            radius: rel.norm(),
            start: rel.arg(),
            sweep: 2.0 * PI,
        }])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
}

impl IntegratorStats {
    fn add(&mut self, o: IntegratorStats) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn integrate_segment(
    sys: &RationalSystem,
    seg: &Segment,
    y0: CMatrix,
    tol: f64,
    offset: f64,
) -> Result<(CMatrix, IntegratorStats)> {
    let f = |s: f64, y: &CMatrix| -> CMatrix { (sys.eval(seg.point(s)) * y).scale(seg.velocity(s)) };
    let mut stats = IntegratorStats::default();
    let mut s = 0.0;
    let mut h: f64 = 0.01;
    let mut y = y0;
    let mut k1 = f(s, &y);
    while s < 1.0 {
        if s + h > 1.0 {
            h = 1.0 - s;
        }
        let mut k: Vec<CMatrix> = vec![k1.clone()];
        for i in 1..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[i][j] != 0.0 {
                    yi = yi + kj.scale(C64::new(h * A[i][j], 0.0));
                }
            }
            k.push(f(s + C[i] * h, &yi));
        }
        let y5 = k.iter().zip(B5).fold(y.clone(), |acc, (kj, b)| acc + kj.scale(C64::new(h * b, 0.0)));
        let err_m = k
            .iter()
            .zip(B5.iter().zip(B4))
            .fold(CMatrix::zeros(y.rows(), y.cols()), |acc, (kj, (b5, b4))| {
                acc + kj.scale(C64::new(h * (b5 - b4), 0.0))
            });
        let scale = tol * (1.0 + y.max_abs().max(y5.max_abs()));
        let err = err_m.max_abs() / scale;
        if err <= 1.0 {
            s += h;
            y = y5;
            k1 = k.pop().expect("seven stages");
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < STEP_FLOOR && s < 1.0 {
            return Err(Error::StepFloor(offset + s));
        }
    }
    Ok((y, stats))
}

/// Transport of the identity along `path`: the matrix `Y(end)` of the
/// solution with `Y(start) = I`.
pub fn transfer_matrix_with_stats(
    sys: &RationalSystem,
    path: &Path,
    tol: f64,
) -> Result<(CMatrix, IntegratorStats)> {
    let positions: Vec<C64> = sys.points().iter().map(|p| p.position).collect();
    let d = path.min_distance(&positions);
    if d <= 1e-12 {
        return Err(Error::PathTooClose(format!("distance {d:e}")));
    }
    let mut y = CMatrix::identity(sys.rank());
    let mut stats = IntegratorStats::default();
    for (i, seg) in path.segments.iter().enumerate() {
        let (ny, st) = integrate_segment(sys, seg, y, tol, i as f64)?;
        y = ny;
        stats.add(st);
    }
    Ok((y, stats))
}

pub fn transfer_matrix(sys: &RationalSystem, path: &Path, tol: f64) -> Result<CMatrix> {
    Ok(transfer_matrix_with_stats(sys, path, tol)?.0)
}

/// Generators of the monodromy group at a base point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonodromyRep {
    pub base: C64,
    pub points: Vec<C64>,
    /// `generators[ν]` belongs to `points[ν]`.
    pub generators: Vec<CMatrix>,
    /// Loop around infinity: the large circle taken clockwise.
    pub infinity: CMatrix,
    /// Point indices in the order whose product of loops is the large circle.
    pub ordering: Vec<usize>,
    /// `‖L - M_{ν_n} ⋯ M_{ν_1}‖_max / ‖M_{ν_n} ⋯ M_{ν_1}‖_max` with `L`
    /// integrated independently along a large circle, so that the defect does not depend on the arbitrary
    /// normalization `Y(x₀) = I`.
    pub relation_defect: f64,
    /// `‖M_∞ M_{ν_n} ⋯ M_{ν_1} - I‖_max`; inflated by the condition number
    /// of `L` when the representation is far from normal.
    pub identity_defect: f64,
    pub stats: IntegratorStats,
}

/// Segment to a small circle around `u`, the circle, and back.
pub fn keyhole(base: C64, u: C64, radius: f64) -> Path {
    let dir = (base - u) / (base - u).norm();
    let near = u + dir * radius;
    Path::new(vec![
        Segment::Line { from: base, to: near },
        Segment::Arc {
            center: u,
            radius,
            start: dir.arg(),
            sweep: 2.0 * PI,
        },
        Segment::Line { from: near, to: base },
    ])
}

/// Base point below all singular points, on a circle enclosing them.
pub fn default_base(points: &[C64]) -> (C64, f64) {
    if points.is_empty() {
        return (C64::new(0.0, -1.0), 1.0);
    }
    let center = points.iter().sum::<C64>() / points.len() as f64;
    let spread = points.iter().map(|u| (u - center).norm()).fold(0.0, f64::max);
    let closest = points
        .iter()
        .enumerate()
        .flat_map(|(i, u)| points[i + 1..].iter().map(move |v| (u - v).norm()))
        .fold(f64::INFINITY, f64::min);
    // close to the points keeps the keyhole transports well conditioned
    let radius = if points.len() == 1 { 1.0 } else { 1.5 * spread + 0.25 * closest };
    // tilt slightly so no ray from the base is exactly vertical by accident
    (center + C64::from_polar(radius, -0.5 * PI + 0.1234), radius)
}

pub fn monodromy_rep(sys: &RationalSystem, base: Option<C64>, tol: f64) -> Result<MonodromyRep> {
    let points: Vec<C64> = sys.points().iter().map(|p| p.position).collect();
    let (default, _) = default_base(&points);
    let base = base.unwrap_or(default);
    let center = if points.is_empty() {
        C64::default()
    } else {
        points.iter().sum::<C64>() / points.len() as f64
    };
    let mut stats = IntegratorStats::default();
    let mut generators = Vec::with_capacity(points.len());
    for (i, &u) in points.iter().enumerate() {
        let nearest = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| (u - v).norm())
            .chain(std::iter::once((u - base).norm()))
            .fold(f64::INFINITY, f64::min);
        let radius = nearest / 10.0;
        let path = keyhole(base, u, radius);
        let others: Vec<C64> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| *v)
            .collect();
        let clearance = path.min_distance(&others);
        if clearance <= radius {
            return Err(Error::PathTooClose(format!(
                "keyhole to point {i} passes within {clearance:e} of another singular point"
            )));
        }
        let (m, st) = transfer_matrix_with_stats(sys, &path, tol)?;
        stats.add(st);
        generators.push(m);
    }
    // counterclockwise order of the rays seen from the base
    let mut ordering: Vec<usize> = (0..points.len()).collect();
    let base_arg = (center - base).arg();
    let rel = |u: C64| {
        let mut a = (u - base).arg() - base_arg;
        while a <= -PI {
            a += 2.0 * PI;
        }
        while a > PI {
            a -= 2.0 * PI;
        }
        a
    };
    ordering.sort_by(|&i, &j| rel(points[i]).total_cmp(&rel(points[j])));
    let (big, st) = transfer_matrix_with_stats(sys, &Path::circle(center, base), tol)?;
    stats.add(st);
    let mut prod = CMatrix::identity(sys.rank());
    for &i in &ordering {
        prod = &generators[i] * &prod;
    }
    // the clockwise circle, integrated rather than inverted: the inverse of
    // a badly conditioned loop matrix loses digits the integrator keeps
    let (infinity, st) = transfer_matrix_with_stats(sys, &Path::circle(center, base).reversed(), tol)?;
    stats.add(st);
    let identity_defect = (&infinity * &prod - CMatrix::identity(sys.rank())).max_abs();
    let relation_defect = (&big - &prod).max_abs() / prod.max_abs().max(1.0);
    Ok(MonodromyRep {
        base,
        points,
        generators,
        infinity,
        ordering,
        relation_defect,
        identity_defect,
        stats,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceCheck {
    pub word: String,
    pub left: C64,
    pub right: C64,
    pub mismatch: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepComparison {
    pub compatible: bool,
    pub verdict: String,
    pub max_mismatch: f64,
    pub worst: Option<String>,
    pub checks: Vec<TraceCheck>,
}

fn trace_words(r: &MonodromyRep) -> Vec<(String, C64)> {
    let mut gens: Vec<(String, &CMatrix)> = r
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| (format!("M{i}"), g))
        .collect();
    gens.push(("Minf".to_string(), &r.infinity));
    let mut out: Vec<(String, C64)> = gens.iter().map(|(n, g)| (n.clone(), g.trace())).collect();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            out.push((format!("{}*{}", gens[i].0, gens[j].0), (gens[i].1 * gens[j].1).trace()));
        }
    }
    out
}

/// Compares traces of the generators and of all pairwise products, relative
/// to `max(1, |trace|)`.
pub fn compare_reps(r1: &MonodromyRep, r2: &MonodromyRep, tol: f64) -> RepComparison {
    if r1.points.len() != r2.points.len() {
        return RepComparison {
            compatible: false,
            verdict: "MISMATCH".into(),
            max_mismatch: f64::INFINITY,
            worst: Some("different number of singular points".into()),
            checks: Vec::new(),
        };
    }
    let checks: Vec<TraceCheck> = trace_words(r1)
        .into_iter()
        .zip(trace_words(r2))
        .map(|((word, left), (_, right))| TraceCheck {
            mismatch: (left - right).norm() / left.norm().max(1.0),
            word,
            left,
            right,
        })
        .collect();
    let worst = checks.iter().max_by(|a, b| a.mismatch.total_cmp(&b.mismatch));
    let max_mismatch = worst.map_or(0.0, |c| c.mismatch);
    let compatible = max_mismatch <= tol;
    RepComparison {
        compatible,
        verdict: if compatible { "CONJUGATE-COMPATIBLE" } else { "MISMATCH" }.into(),
        max_mismatch,
        worst: worst.filter(|_| !compatible).map(|c| c.word.clone()),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};

    #[test]
    fn scalar_loop() {
        let theta = 0.3;
        let sys = RationalSystem::fuchsian(1, vec![(cr(0.0), CMatrix::scalar(1, cr(theta)))]).unwrap();
        let m = transfer_matrix(&sys, &Path::circle(cr(0.0), cr(1.0)), DEFAULT_TOL).unwrap();
        let exact = C64::new(0.0, 2.0 * PI * theta).exp();
        assert!((m[(0, 0)] - exact).norm() < 1e-9);
    }

    #[test]
    fn concatenation_and_reversal() {
        let a = CMatrix::from_rows(&[vec![c(0.2, 0.1), cr(1.0)], vec![cr(0.3), cr(-0.4)]]).unwrap();
        let b = CMatrix::from_rows(&[vec![cr(0.5), cr(0.0)], vec![c(0.0, 1.0), cr(0.1)]]).unwrap();
        let sys = RationalSystem::fuchsian(2, vec![(cr(0.0), a), (cr(1.0), b)]).unwrap();
        let p1 = Path::new(vec![Segment::Line { from: c(0.5, -1.0), to: c(2.0, 0.5) }]);
        let p2 = Path::new(vec![Segment::Arc { center: cr(1.0), radius: 1.5, start: 0.3217505543966422, sweep: 2.0 }]);
        let p2 = Path::new(vec![Segment::Line { from: p1.end().unwrap(), to: p2.start().unwrap() }]).then(&p2);
        let t1 = transfer_matrix(&sys, &p1, DEFAULT_TOL).unwrap();
        let t2 = transfer_matrix(&sys, &p2, DEFAULT_TOL).unwrap();
        let t12 = transfer_matrix(&sys, &p1.then(&p2), DEFAULT_TOL).unwrap();
        assert!(t12.rel_diff(&(&t2 * &t1)) < 1e-9);
        let back = transfer_matrix(&sys, &p1.reversed(), DEFAULT_TOL).unwrap();
        assert!((&back * &t1).rel_diff(&CMatrix::identity(2)) < 1e-9);
    }

    #[test]
    fn relation_and_local_exponents() {
        let a = CMatrix::from_rows(&[vec![c(0.2, 0.1), cr(1.0)], vec![cr(0.3), cr(-0.4)]]).unwrap();
        let b = CMatrix::from_rows(&[vec![cr(0.5), cr(0.0)], vec![c(0.0, 1.0), cr(0.1)]]).unwrap();
        let d = CMatrix::from_rows(&[vec![cr(-0.1), cr(0.2)], vec![cr(0.7), c(0.3, -0.2)]]).unwrap();
        let sys = RationalSystem::fuchsian(2, vec![(cr(0.0), a.clone()), (cr(1.0), b), (c(0.4, 1.2), d)]).unwrap();
        let rep = monodromy_rep(&sys, None, DEFAULT_TOL).unwrap();
        assert!(rep.relation_defect < 1e-8, "{}", rep.relation_defect);
        let det = rep.generators[0][(0, 0)] * rep.generators[0][(1, 1)]
            - rep.generators[0][(0, 1)] * rep.generators[0][(1, 0)];
        let want = (C64::new(0.0, 2.0 * PI) * a.trace()).exp();
        assert!((det - want).norm() < 1e-7);
        let cmp = compare_reps(&rep, &rep, DEFAULT_REP_TOL);
        assert!(cmp.compatible && cmp.max_mismatch == 0.0);

        let g = CMatrix::from_rows(&[vec![c(1.0, 0.2), cr(0.5)], vec![cr(-0.3), c(0.8, -0.1)]]).unwrap();
        let gi = g.inverse().unwrap();
        let mut conj = rep.clone();
        for m in conj.generators.iter_mut().chain(std::iter::once(&mut conj.infinity)) {
            *m = &g * &*m * &gi;
        }
        let cmp = compare_reps(&rep, &conj, 1e-9);
        assert!(cmp.compatible, "{}", cmp.max_mismatch);
    }

    #[test]
    fn local_eigenvalues_of_rank_four_pair() {
        use crate::linalg::{eigenvalues, multiset_distance};
        use crate::schlesinger::{build_fuchsian_211, tests::sample_state};
        let mut s = sample_state();
        s.eps = c(2.5, 0.1);
        s.t1 = c(1.6, 0.2);
        s.t2 = c(-0.7, 0.15);
        let sys = build_fuchsian_211(&s).to_system(s.eps).unwrap();
        let rep = monodromy_rep(&sys, None, DEFAULT_TOL).unwrap();
        assert!(rep.relation_defect < 1e-8, "{}", rep.relation_defect);
        let two_pi_i = C64::new(0.0, 2.0 * PI);
        for (k, exps) in [s.rho(), s.sigma()].iter().enumerate() {
            let want: Vec<C64> = exps.iter().map(|z| (two_pi_i * z).exp()).collect();
            let got = eigenvalues(&rep.generators[k]).unwrap();
            assert!(multiset_distance(&got, &want) < 1e-6, "point {k}: {got:?} vs {want:?}");
        }
    }

    #[test]
    fn invariant_under_schlesinger_step() {
        use crate::schlesinger::{build_fuchsian_211, schlesinger_step, tests::sample_state, Direction};
        let mut s = sample_state();
        s.eps = c(2.5, 0.1);
        s.t1 = c(1.6, 0.2);
        s.t2 = c(-0.7, 0.15);
        let after = schlesinger_step(&s, Direction::S1).unwrap();
        let r1 = monodromy_rep(&build_fuchsian_211(&s).to_system(s.eps).unwrap(), None, DEFAULT_TOL).unwrap();
        let r2 = monodromy_rep(&build_fuchsian_211(&after).to_system(after.eps).unwrap(), None, DEFAULT_TOL).unwrap();
        assert!(r1.relation_defect < 1e-8 && r2.relation_defect < 1e-8);
        let cmp = compare_reps(&r1, &r2, 1e-6);
        assert!(cmp.compatible, "{cmp:?}");
    }
}
