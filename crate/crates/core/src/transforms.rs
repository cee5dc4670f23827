//! Addition, Möbius maps, the Laplace transform of factored systems and the
//! splitting of a rank-1 point into two regular singular points.

use crate::error::{Error, Result};
use crate::linalg::{eigen_sorted, CMatrix, C64, TOL_EIG};
use crate::systems::{FactoredSystem, RationalSystem, SingularPoint, MIN_POINT_DISTANCE};

/// Shifts the residue at finite point `point` by `alpha`.
pub fn addition(sys: &RationalSystem, point: usize, alpha: C64) -> Result<RationalSystem> {
    let mut points = sys.points().to_vec();
    let p = points
        .get_mut(point)
        .ok_or_else(|| Error::InvalidSystem(format!("no singular point {point}")))?;
    p.coefficients[0] = p.coefficients[0].shift(alpha);
    RationalSystem::new(sys.rank(), points, sys.infinity().to_vec())
}

/// Möbius map `ξ = (a x + b) / (c x + d)` used as a change of variable:
/// the returned system is `dY/dξ = B(ξ) Y` and a singular point `u` moves to
/// `φ(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moebius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Moebius {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if scale == 0.0 || (a * d - b * c).norm() <= 1e-14 * scale * scale {
            return Err(Error::DegenerateMap);
        }
        Ok(Moebius { a, b, c, d })
    }

    pub fn affine(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(alpha, beta, C64::default(), C64::new(1.0, 0.0))
    }

    pub fn translation(shift: C64) -> Self {
        Moebius {
            a: C64::new(1.0, 0.0),
            b: shift,
            c: C64::default(),
            d: C64::new(1.0, 0.0),
        }
    }

    pub fn inversion() -> Self {
        Moebius {
            a: C64::default(),
            b: C64::new(1.0, 0.0),
            c: C64::new(1.0, 0.0),
            d: C64::default(),
        }
    }

    /// Image of a finite point; `None` for the point sent to infinity.
    pub fn apply(&self, x: C64) -> Option<C64> {
        let den = self.c * x + self.d;
        (den != C64::default()).then(|| (self.a * x + self.b) / den)
    }
}

/// Collects `(position, order k, coefficient)` terms into singular points.
#[derive(Default)]
struct Accumulator {
    finite: Vec<(C64, Vec<CMatrix>)>,
    poly: Vec<CMatrix>,
}

impl Accumulator {
    fn pole(&mut self, u: C64, k: usize, m: CMatrix) {
        let idx = match self
            .finite
            .iter()
            .position(|(v, _)| (*v - u).norm() <= MIN_POINT_DISTANCE)
        {
            Some(i) => i,
            None => {
                self.finite.push((u, Vec::new()));
                self.finite.len() - 1
            }
        };
        add_at(&mut self.finite[idx].1, k, m);
    }

    /// Adds `m ξ^(k-1)`, `k ≥ 1`.
    fn polynomial(&mut self, k: usize, m: CMatrix) {
        add_at(&mut self.poly, k - 1, m);
    }

    fn finish(self, rank: usize) -> Result<RationalSystem> {
        let points = self
            .finite
            .into_iter()
            .filter_map(|(u, mut c)| {
                trim(&mut c);
                (!c.is_empty()).then(|| SingularPoint {
                    position: u,
                    coefficients: pad_residue(c, rank),
                })
            })
            .collect();
        let mut poly = self.poly;
        trim(&mut poly);
        RationalSystem::new(rank, points, poly)
    }
}

fn add_at(v: &mut Vec<CMatrix>, k: usize, m: CMatrix) {
    let n = m.rows();
    while v.len() <= k {
        v.push(CMatrix::zeros(n, n));
    }
    v[k] = &v[k] + &m;
}

fn trim(v: &mut Vec<CMatrix>) {
    while v.last().is_some_and(|m| m.max_abs() == 0.0) {
        v.pop();
    }
}

fn pad_residue(c: Vec<CMatrix>, rank: usize) -> Vec<CMatrix> {
    if c.is_empty() {
        vec![CMatrix::zeros(rank, rank)]
    } else {
        c
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `ξ = α x + β`.
fn affine(sys: &RationalSystem, alpha: C64, beta: C64) -> Result<RationalSystem> {
    let mut acc = Accumulator::default();
    for p in sys.points() {
        let u = alpha * p.position + beta;
        let mut apow = C64::new(1.0, 0.0);
        for (k, m) in p.coefficients.iter().enumerate() {
            acc.pole(u, k, m.scale(apow));
            apow *= alpha;
        }
    }
    // A^(k) x^(k-1) dx/dξ with x = (ξ - β)/α
    for (i, m) in sys.infinity().iter().enumerate() {
        let k = i + 1;
        for j in 0..k {
            let coef = binomial(k - 1, j) * (-beta).powu((k - 1 - j) as u32) / alpha.powu(k as u32);
            acc.polynomial(j + 1, m.scale(coef));
        }
    }
    acc.finish(sys.rank())
}

/// `ξ = 1/x`.
fn inversion(sys: &RationalSystem) -> Result<RationalSystem> {
    let mut acc = Accumulator::default();
    let zero = C64::default();
    for p in sys.points() {
        if p.position.norm() <= MIN_POINT_DISTANCE {
            // A/x^(k+1) dx/dξ = -A ξ^(k-1)
            acc.pole(zero, 0, -p.residue());
            for (k, m) in p.coefficients.iter().enumerate().skip(1) {
                acc.polynomial(k, -m);
            }
        } else {
            if p.order() > 0 {
                return Err(Error::Unsupported(
                    "inversion of a higher-order pole away from the origin".into(),
                ));
            }
            acc.pole(p.position.inv(), 0, p.residue().clone());
            acc.pole(zero, 0, -p.residue());
        }
    }
    // A^(k) x^(k-1) dx/dξ = -A ξ^(-k-1)
    for (i, m) in sys.infinity().iter().enumerate() {
        acc.pole(zero, i + 1, -m);
    }
    acc.finish(sys.rank())
}

/// Pulls the system back along the Möbius change of variable `map`.
pub fn moebius(sys: &RationalSystem, map: &Moebius) -> Result<RationalSystem> {
    let map = Moebius::new(map.a, map.b, map.c, map.d)?;
    if map.c == C64::default() {
        return affine(sys, map.a / map.d, map.b / map.d);
    }
    // φ = (a/c) - (ad - bc)/c · 1/(c x + d)
    let det = map.a * map.d - map.b * map.c;
    let s1 = affine(sys, map.c, map.d)?;
    let s2 = inversion(&s1)?;
    affine(&s2, -det / map.c, map.a / map.c)
}

/// Laplace transform of `Q (x - T)⁻¹ P + S`: data `(T, Q, P, S) ↦ (S, P, -Q, -T)`,
/// that is `A'(x) = -P (x - S)⁻¹ Q - T`.
pub fn laplace(fs: &FactoredSystem) -> Result<FactoredSystem> {
    FactoredSystem::new(
        fs.s().to_vec(),
        fs.p().clone(),
        -fs.q(),
        fs.t().iter().map(|z| -z).collect(),
    )
}

/// Result of splitting a rank-1 point.
#[derive(Debug, Clone)]
pub struct Separation {
    pub system: RationalSystem,
    /// Constant gauge `g` with `system → g A g⁻¹` as `ε → 0`.
    pub gauge: CMatrix,
    /// Residue at the original position `u` (block upper triangular).
    pub upper: CMatrix,
    /// Residue at `u - ε` (block lower triangular).
    pub lower: CMatrix,
    /// Block sizes of the leading matrix, in the order used.
    pub blocks: Vec<usize>,
}

/// Splits the unique rank-1 finite point `u` of `sys` into regular singular
/// points `u` and `u - ε`. The leading matrix `L` is diagonalized (kept as is
/// when already diagonal), then each diagonal block of the residue is
/// diagonalized by the stabilizer of `L`. The residue at `u` keeps the block
/// upper part and gets `t_j/ε` on the diagonal; the residue at `u - ε` keeps
/// the block lower part with diagonal blocks `Θ_j - (t_j/ε) I`.
pub fn separate(sys: &RationalSystem, eps: C64) -> Result<Separation> {
    if eps == C64::default() {
        return Err(Error::ZeroEpsilon);
    }
    let irregular: Vec<usize> = (0..sys.points().len())
        .filter(|&i| sys.points()[i].order() > 0)
        .collect();
    let [idx] = irregular[..] else {
        return Err(Error::InvalidSystem(
            "expected exactly one rank-1 finite point".into(),
        ));
    };
    let pt = &sys.points()[idx];
    if pt.order() > 1 {
        return Err(Error::Unsupported("Poincaré rank above 1".into()));
    }
    let m = sys.rank();
    let lead = &pt.coefficients[1];
    let (v, values, blocks) = if (lead - CMatrix::from_diagonal(&lead.diagonal())).max_abs() == 0.0 {
        let d = lead.diagonal();
        let mut order: Vec<usize> = Vec::new();
        // equal values must sit next to each other
        for i in 0..m {
            if !order.contains(&i) {
                order.extend((i..m).filter(|&j| d[j] == d[i]));
            }
        }
        let mut perm = CMatrix::zeros(m, m);
        for (col, &row) in order.iter().enumerate() {
            perm[(row, col)] = C64::new(1.0, 0.0);
        }
        let values: Vec<C64> = order.iter().map(|&i| d[i]).collect();
        let blocks = crate::systems::scalar_blocks(&values)
            .into_iter()
            .map(|(_, _, l)| l)
            .collect();
        (perm, values, blocks)
    } else {
        let e = eigen_sorted(lead, TOL_EIG)?;
        let v = e.basis()?;
        let mut values = Vec::new();
        let mut blocks = Vec::new();
        for cl in &e.clusters {
            values.extend(std::iter::repeat_n(cl.value, cl.multiplicity));
            blocks.push(cl.multiplicity);
        }
        (v, values, blocks)
    };
    let r = &v.inverse()? * pt.residue() * &v;
    let mut h = CMatrix::zeros(m, m);
    let mut off = 0;
    for &k in &blocks {
        let e = eigen_sorted(&r.block(off, off, k, k), TOL_EIG)?;
        h.set_block(off, off, &e.basis()?);
        off += k;
    }
    let vh = &v * &h;
    let gauge = vh.inverse()?;
    let r = &gauge * pt.residue() * &vh;
    let mut upper = CMatrix::zeros(m, m);
    let mut lower = CMatrix::zeros(m, m);
    let starts: Vec<usize> = blocks
        .iter()
        .scan(0, |s, &k| {
            let b = *s;
            *s += k;
            Some(b)
        })
        .collect();
    let block_of = |i: usize| starts.iter().rposition(|&s| s <= i).expect("index in range");
    for i in 0..m {
        for j in 0..m {
            let (bi, bj) = (block_of(i), block_of(j));
            if bi < bj {
                upper[(i, j)] = r[(i, j)];
            } else if bi > bj {
                lower[(i, j)] = r[(i, j)];
            } else if i == j {
                let rho = values[i] / eps;
                upper[(i, i)] = rho;
                lower[(i, i)] = r[(i, i)] - rho;
            }
        }
    }
    let mut points = Vec::with_capacity(sys.points().len() + 1);
    for (i, p) in sys.points().iter().enumerate() {
        if i == idx {
            points.push(SingularPoint::fuchsian(p.position, upper.clone()));
            points.push(SingularPoint::fuchsian(p.position - eps, lower.clone()));
        } else {
            points.push(SingularPoint {
                position: p.position,
                coefficients: p.coefficients.iter().map(|c| &gauge * c * &vh).collect(),
            });
        }
    }
    let infinity = sys.infinity().iter().map(|c| &gauge * c * &vh).collect();
    Ok(Separation {
        system: RationalSystem::new(m, points, infinity)?,
        gauge,
        upper,
        lower,
        blocks,
    })
}
