//! Linear ODE systems `dY/dx = A(x) Y` with rational coefficients, their
//! local HTL data, Riemann schemes and spectral types.

mod spectral_type;

pub use spectral_type::{Partition, PointType, SpectralType};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cmp_complex, eigen_sorted, CMatrix, C64, TOL_EIG};

/// Minimum separation between two finite singular points.
pub const MIN_POINT_DISTANCE: f64 = 1e-12;

/// A finite singular point `u` with Laurent coefficients `A^(k)`, `k = 0..=r`,
/// contributing `Σ_k A^(k) / (x - u)^(k+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub position: C64,
    pub coefficients: Vec<CMatrix>,
}

impl SingularPoint {
    pub fn fuchsian(position: C64, residue: CMatrix) -> Self {
        SingularPoint {
            position,
            coefficients: vec![residue],
        }
    }

    pub fn residue(&self) -> &CMatrix {
        &self.coefficients[0]
    }

    /// Pole order minus one.
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawSystem {
    rank: usize,
    points: Vec<SingularPoint>,
    #[serde(default)]
    infinity: Vec<CMatrix>,
}

/// `A(x) = Σ_ν Σ_k A_ν^(k)/(x-u_ν)^(k+1) + Σ_{k≥1} A_∞^(k) x^(k-1)`.
///
/// The residue at infinity, `A_∞^(0) = -Σ_ν A_ν^(0)`, is implied and never
/// stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem")]
pub struct RationalSystem {
    rank: usize,
    points: Vec<SingularPoint>,
    /// `infinity[k-1] = A_∞^(k)`.
    infinity: Vec<CMatrix>,
}

impl TryFrom<RawSystem> for RationalSystem {
    type Error = Error;
    fn try_from(raw: RawSystem) -> Result<Self> {
        RationalSystem::new(raw.rank, raw.points, raw.infinity)
    }
}

impl RationalSystem {
    pub fn new(rank: usize, points: Vec<SingularPoint>, infinity: Vec<CMatrix>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidSystem("rank must be positive".into()));
        }
        let check = |m: &CMatrix| -> Result<()> {
            if m.rows() != rank || m.cols() != rank {
                return Err(Error::InvalidSystem(format!(
                    "coefficient is {}x{}, expected {rank}x{rank}",
                    m.rows(),
                    m.cols()
                )));
            }
            Ok(())
        };
        for p in &points {
            if p.coefficients.is_empty() {
                return Err(Error::InvalidSystem("singular point without coefficients".into()));
            }
            p.coefficients.iter().try_for_each(check)?;
            if !p.position.re.is_finite() || !p.position.im.is_finite() {
                return Err(Error::InvalidSystem("non-finite singular point".into()));
            }
        }
        infinity.iter().try_for_each(check)?;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if (points[i].position - points[j].position).norm() <= MIN_POINT_DISTANCE {
                    return Err(Error::InvalidSystem(format!(
                        "singular points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(RationalSystem {
            rank,
            points,
            infinity,
        })
    }

    /// Fuchsian system `Σ_ν A_ν / (x - u_ν)`.
    pub fn fuchsian(rank: usize, residues: Vec<(C64, CMatrix)>) -> Result<Self> {
        let points = residues
            .into_iter()
            .map(|(u, a)| SingularPoint::fuchsian(u, a))
            .collect();
        Self::new(rank, points, Vec::new())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn points(&self) -> &[SingularPoint] {
        &self.points
    }

    pub fn infinity(&self) -> &[CMatrix] {
        &self.infinity
    }

    /// Poincaré rank at infinity, `r_∞`.
    pub fn infinity_order(&self) -> usize {
        self.infinity.len()
    }

    pub fn residue_at_infinity(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.rank, self.rank);
        for p in &self.points {
            s = s - p.residue();
        }
        s
    }

    pub fn is_fuchsian(&self) -> bool {
        self.infinity.is_empty() && self.points.iter().all(|p| p.order() == 0)
    }

    pub fn eval(&self, x: C64) -> CMatrix {
        let mut a = CMatrix::zeros(self.rank, self.rank);
        for p in &self.points {
            let z = x - p.position;
            let mut zpow = z;
            for coeff in &p.coefficients {
                a = a + coeff.scale(zpow.inv());
                zpow *= z;
            }
        }
        let mut xpow = C64::new(1.0, 0.0);
        for coeff in &self.infinity {
            a = a + coeff.scale(xpow);
            xpow *= x;
        }
        a
    }

    /// Constant gauge `A ↦ g A g⁻¹` applied to every coefficient.
    pub fn conjugate(&self, g: &CMatrix) -> Result<Self> {
        let gi = g.inverse()?;
        let conj = |m: &CMatrix| g * m * &gi;
        let points = self
            .points
            .iter()
            .map(|p| SingularPoint {
                position: p.position,
                coefficients: p.coefficients.iter().map(conj).collect(),
            })
            .collect();
        Ok(RationalSystem {
            rank: self.rank,
            points,
            infinity: self.infinity.iter().map(conj).collect(),
        })
    }
}

/// `A(x) = Q (x - T)⁻¹ P + S` with `T`, `S` diagonal and block-scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFactored")]
pub struct FactoredSystem {
    t: Vec<C64>,
    q: CMatrix,
    p: CMatrix,
    s: Vec<C64>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawFactored {
    t: Vec<C64>,
    q: CMatrix,
    p: CMatrix,
    s: Vec<C64>,
}

impl TryFrom<RawFactored> for FactoredSystem {
    type Error = Error;
    fn try_from(r: RawFactored) -> Result<Self> {
        FactoredSystem::new(r.t, r.q, r.p, r.s)
    }
}

/// Maximal runs of equal values: `(value, start, len)`.
pub fn scalar_blocks(d: &[C64]) -> Vec<(C64, usize, usize)> {
    let mut out: Vec<(C64, usize, usize)> = Vec::new();
    for (i, &z) in d.iter().enumerate() {
        match out.last_mut() {
            Some((v, _, len)) if *v == z => *len += 1,
            _ => out.push((z, i, 1)),
        }
    }
    out
}

fn check_block_scalar(d: &[C64], name: &str) -> Result<()> {
    let blocks = scalar_blocks(d);
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            if blocks[i].0 == blocks[j].0 {
                return Err(Error::InvalidSystem(format!(
                    "{name}: equal diagonal values must be contiguous"
                )));
            }
        }
    }
    Ok(())
}

impl FactoredSystem {
    pub fn new(t: Vec<C64>, q: CMatrix, p: CMatrix, s: Vec<C64>) -> Result<Self> {
        let (m, n) = (s.len(), t.len());
        if q.rows() != m || q.cols() != n || p.rows() != n || p.cols() != m {
            return Err(Error::InvalidSystem(format!(
                "factored shapes: T {n}, S {m}, Q {}x{}, P {}x{}",
                q.rows(),
                q.cols(),
                p.rows(),
                p.cols()
            )));
        }
        if m == 0 {
            return Err(Error::InvalidSystem("rank must be positive".into()));
        }
        check_block_scalar(&t, "T")?;
        check_block_scalar(&s, "S")?;
        Ok(FactoredSystem { t, q, p, s })
    }

    pub fn t(&self) -> &[C64] {
        &self.t
    }

    pub fn q(&self) -> &CMatrix {
        &self.q
    }

    pub fn p(&self) -> &CMatrix {
        &self.p
    }

    pub fn s(&self) -> &[C64] {
        &self.s
    }

    /// System rank `m`.
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Size `n` of `T`.
    pub fn size(&self) -> usize {
        self.t.len()
    }

    pub fn eval(&self, x: C64) -> CMatrix {
        let n = self.size();
        let mut qd = self.q.clone();
        for j in 0..n {
            let f = (x - self.t[j]).inv();
            for i in 0..qd.rows() {
                qd[(i, j)] *= f;
            }
        }
        &qd * &self.p + CMatrix::from_diagonal(&self.s)
    }

    /// Expands into a rational system: one Fuchsian point per block of `T`
    /// (residue `Q_j P_j`) and `A_∞^(1) = S` when `S ≠ 0`.
    pub fn to_rational(&self) -> Result<RationalSystem> {
        let m = self.rank();
        let points = scalar_blocks(&self.t)
            .into_iter()
            .map(|(u, start, len)| {
                let qj = self.q.block(0, start, m, len);
                let pj = self.p.block(start, 0, len, m);
                SingularPoint::fuchsian(u, &qj * &pj)
            })
            .collect();
        let infinity = if self.s.iter().any(|z| *z != C64::default()) {
            vec![CMatrix::from_diagonal(&self.s)]
        } else {
            Vec::new()
        };
        RationalSystem::new(m, points, infinity)
    }
}

/// Rank factorization `A = Q P` with `P` made of linearly independent rows of `A`.
fn rank_factor(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let tol = 1e-12 * a.max_abs().max(1.0);
    let mut rows: Vec<usize> = Vec::new();
    for i in 0..a.rows() {
        let mut trial = rows.clone();
        trial.push(i);
        let stacked = CMatrix::from_rows(&trial.iter().map(|&r| a.row(r)).collect::<Vec<_>>())?;
        if stacked.rank(tol) == trial.len() {
            rows = trial;
        }
    }
    if rows.is_empty() {
        return Ok((CMatrix::zeros(a.rows(), 0), CMatrix::zeros(0, a.cols())));
    }
    let p = CMatrix::from_rows(&rows.iter().map(|&r| a.row(r)).collect::<Vec<_>>())?;
    // Q = A P* (P P*)⁻¹
    let pa = p.adjoint();
    let gram = &p * &pa;
    let q = gram.transpose().solve(&(a * &pa).transpose())?.transpose();
    Ok((q, p))
}

/// Minimal realization `A(x) = Q (x - T)⁻¹ P + S` of a system whose finite
/// points are all regular singular and whose polynomial part is at most
/// constant. `T` is block-scalar with blocks `u_ν I` of size `rank A_ν^(0)`.
pub fn realize_factored(sys: &RationalSystem) -> Result<FactoredSystem> {
    if sys.infinity_order() > 1 {
        return Err(Error::NotRealizable(format!(
            "Poincaré rank {} at infinity",
            sys.infinity_order()
        )));
    }
    if let Some(p) = sys.points().iter().find(|p| p.order() > 0) {
        return Err(Error::NotRealizable(format!(
            "pole of order {} at a finite point",
            p.order() + 1
        )));
    }
    let m = sys.rank();
    let s = match sys.infinity().first() {
        Some(s) => {
            let d = s.diagonal();
            if (s - CMatrix::from_diagonal(&d)).max_abs() > 0.0 {
                return Err(Error::NotRealizable("A_∞^(1) must be diagonal".into()));
            }
            d
        }
        None => vec![C64::default(); m],
    };
    let mut t = Vec::new();
    let mut q_cols: Vec<CMatrix> = Vec::new();
    let mut p_rows: Vec<CMatrix> = Vec::new();
    for pt in sys.points() {
        let (q, p) = rank_factor(pt.residue())?;
        t.extend(std::iter::repeat_n(pt.position, p.rows()));
        q_cols.push(q);
        p_rows.push(p);
    }
    let n = t.len();
    let mut q = CMatrix::zeros(m, n);
    let mut p = CMatrix::zeros(n, m);
    let mut off = 0;
    for (qj, pj) in q_cols.iter().zip(&p_rows) {
        q.set_block(0, off, qj);
        p.set_block(off, 0, pj);
        off += pj.rows();
    }
    FactoredSystem::new(t, q, p, s)
}

/// Where a local datum lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Location {
    Finite(C64),
    Infinity,
}

/// Unramified HTL canonical form `Σ_j T_j / z^(l_j) + Θ / z` with diagonal
/// stage matrices (stored as their diagonals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HtlForm {
    /// `l_0 > l_1 > … > l_s = 1`.
    pub levels: Vec<u32>,
    /// Diagonals of `T_0 … T_{s-1}`.
    pub stages: Vec<Vec<C64>>,
    /// Diagonal of `Θ`.
    pub theta: Vec<C64>,
}

impl HtlForm {
    /// Levels are given as rationals `(numerator, denominator)`; ramified
    /// (non-integral) levels are rejected.
    pub fn new(levels: &[(i64, i64)], stages: Vec<Vec<C64>>, theta: Vec<C64>) -> Result<Self> {
        let mut ints = Vec::with_capacity(levels.len());
        for &(num, den) in levels {
            if den == 0 || num % den != 0 {
                return Err(Error::Unsupported(format!("ramified level {num}/{den}")));
            }
            let l = num / den;
            if l < 1 {
                return Err(Error::InvalidSystem(format!("level {l} below 1")));
            }
            ints.push(l as u32);
        }
        if ints.last() != Some(&1) || ints.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidSystem("levels must decrease strictly to 1".into()));
        }
        if stages.len() + 1 != ints.len() || stages.iter().any(|s| s.len() != theta.len()) {
            return Err(Error::InvalidSystem("stage columns do not match levels".into()));
        }
        Ok(HtlForm {
            levels: ints,
            stages,
            theta,
        })
    }

    pub fn fuchsian(theta: Vec<C64>) -> Self {
        HtlForm {
            levels: vec![1],
            stages: Vec::new(),
            theta,
        }
    }

    pub fn poincare_rank(&self) -> u32 {
        self.levels[0] - 1
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Row ranges sharing all stage values.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for i in 0..self.dim() {
            let same = i > 0 && self.stages.iter().all(|s| s[i] == s[i - 1]);
            match out.last_mut() {
                Some((_, len)) if same => *len += 1,
                _ => out.push((i, 1)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalScheme {
    pub location: Location,
    pub form: HtlForm,
}

/// Table of local exponents at every singular point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannScheme {
    pub rank: usize,
    pub points: Vec<LocalScheme>,
}

impl RiemannScheme {
    pub fn new(rank: usize, points: Vec<LocalScheme>) -> Result<Self> {
        if points.iter().any(|p| p.form.dim() != rank) {
            return Err(Error::InvalidSystem("scheme column length differs from rank".into()));
        }
        Ok(RiemannScheme { rank, points })
    }

    /// No two characteristic exponents in one block differ by a nonzero integer.
    pub fn is_non_resonant(&self) -> bool {
        self.points.iter().all(|p| {
            p.form.blocks().into_iter().all(|(start, len)| {
                let th = &p.form.theta[start..start + len];
                th.iter().enumerate().all(|(i, a)| {
                    th[i + 1..].iter().all(|b| {
                        let d = a - b;
                        let k = d.re.round();
                        k == 0.0 || (d - C64::new(k, 0.0)).norm() > TOL_EIG
                    })
                })
            })
        })
    }

    pub fn exponent_sum(&self) -> C64 {
        self.points.iter().flat_map(|p| p.form.theta.iter()).sum()
    }
}

fn sorted_spectrum(m: &CMatrix) -> Result<Vec<C64>> {
    let e = eigen_sorted(m, TOL_EIG)?;
    e.require_diagonalizable()?;
    Ok(e.values())
}

/// HTL data of `leading / z² + residue / z`: the leading matrix is
/// diagonalized, the residue conjugated along, and each diagonal block of
/// the residue diagonalized by the block-diagonal stabilizer of the leading
/// matrix.
fn rank_one_form(leading: &CMatrix, residue: &CMatrix) -> Result<HtlForm> {
    let eig = eigen_sorted(leading, TOL_EIG)?;
    let v = eig.basis()?;
    let r = &v.inverse()? * residue * &v;
    let mut stage = Vec::new();
    let mut theta = Vec::new();
    let mut off = 0;
    for cl in &eig.clusters {
        let k = cl.multiplicity;
        let block = r.block(off, off, k, k);
        stage.extend(std::iter::repeat_n(cl.value, k));
        theta.extend(sorted_spectrum(&block)?);
        off += k;
    }
    Ok(HtlForm {
        levels: vec![2, 1],
        stages: vec![stage],
        theta,
    })
}

/// Riemann scheme of a system with at most one Poincaré-rank-1 point, all
/// others regular singular.
pub fn riemann_scheme(sys: &RationalSystem) -> Result<RiemannScheme> {
    let mut points = Vec::new();
    let mut irregular = 0;
    for p in sys.points() {
        let loc = Location::Finite(p.position);
        let form = match p.order() {
            0 => HtlForm::fuchsian(sorted_spectrum(p.residue())?),
            1 if p.coefficients[1].max_abs() == 0.0 => HtlForm::fuchsian(sorted_spectrum(p.residue())?),
            1 => {
                irregular += 1;
                rank_one_form(&p.coefficients[1], p.residue())?
            }
            r => {
                return Err(Error::Unsupported(format!("Poincaré rank {r} at a finite point")));
            }
        };
        points.push(LocalScheme { location: loc, form });
    }
    let res_inf = sys.residue_at_infinity();
    let form = match sys.infinity_order() {
        0 => HtlForm::fuchsian(sorted_spectrum(&res_inf)?),
        1 => {
            irregular += 1;
            rank_one_form(&(-&sys.infinity()[0]), &res_inf)?
        }
        r => return Err(Error::Unsupported(format!("Poincaré rank {r} at infinity"))),
    };
    points.push(LocalScheme {
        location: Location::Infinity,
        form,
    });
    if irregular > 1 {
        return Err(Error::Unsupported("more than one irregular singular point".into()));
    }
    RiemannScheme::new(sys.rank(), points)
}

/// Clusters a list of exponents and returns their multiplicities.
fn multiplicities(values: &[C64]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_by(cmp_complex);
    let mut groups: Vec<(C64, usize)> = Vec::new();
    for z in v {
        match groups.iter_mut().find(|(w, _)| (*w - z).norm() <= TOL_EIG) {
            Some((_, n)) => *n += 1,
            None => groups.push((z, 1)),
        }
    }
    groups.into_iter().map(|(_, n)| n).collect()
}

pub fn spectral_type(scheme: &RiemannScheme) -> Result<SpectralType> {
    let mut pts = Vec::new();
    for p in &scheme.points {
        let pt = if p.form.stages.is_empty() {
            PointType::Fuchsian(Partition::new(multiplicities(&p.form.theta))?)
        } else {
            let blocks = p
                .form
                .blocks()
                .into_iter()
                .map(|(s, l)| Partition::new(multiplicities(&p.form.theta[s..s + l])))
                .collect::<Result<Vec<_>>>()?;
            PointType::Irregular(blocks)
        };
        pts.push(pt);
    }
    SpectralType::new(scheme.rank, pts)
}

/// `|Σ all exponents|` of a scheme; vanishes for every consistent system.
pub fn fuchs_residual(scheme: &RiemannScheme) -> f64 {
    scheme.exponent_sum().norm()
}

pub fn fuchs_check(sys: &RationalSystem) -> Result<f64> {
    Ok(fuchs_residual(&riemann_scheme(sys)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, cr};

    fn example_31_22_22() -> RationalSystem {
        // Residues of multiplicities 31, 22, 22 in general position.
        let g1 = CMatrix::from_real_rows(&[
            &[1.0, 2.0, 0.0, 1.0],
            &[0.0, 1.0, 1.0, 0.0],
            &[1.0, 0.0, 1.0, 3.0],
            &[0.5, 1.0, 0.0, 1.0],
        ])
        .unwrap();
        let g2 = CMatrix::from_real_rows(&[
            &[2.0, 0.0, 1.0, 1.0],
            &[1.0, 1.0, 0.0, -1.0],
            &[0.0, 1.0, 1.0, 1.0],
            &[1.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        let g3 = CMatrix::from_real_rows(&[
            &[1.0, 1.0, 1.0, 0.0],
            &[0.0, 2.0, 1.0, 1.0],
            &[1.0, 0.0, 2.0, 1.0],
            &[1.0, 1.0, 0.0, 2.0],
        ])
        .unwrap();
        let d = |v: [f64; 4]| CMatrix::from_diagonal(&v.map(cr));
        let a1 = d([0.3, 0.3, 0.3, 1.7]).conjugate_by(&g1).unwrap();
        let a2 = d([0.2, 0.2, -0.9, -0.9]).conjugate_by(&g2).unwrap();
        let a3 = d([0.45, 0.45, 1.1, 1.1]).conjugate_by(&g3).unwrap();
        RationalSystem::fuchsian(4, vec![(cr(0.0), a1), (cr(1.0), a2), (c(0.5, 2.0), a3)]).unwrap()
    }

    #[test]
    fn scheme_of_31_22_22_1111() {
        let sys = example_31_22_22();
        let sch = riemann_scheme(&sys).unwrap();
        assert_eq!(spectral_type(&sch).unwrap().to_string(), "31,22,22,1111");
        assert!(fuchs_residual(&sch) < 1e-10);
    }

    #[test]
    fn diagonal_residues_verbatim() {
        let a = CMatrix::from_diagonal(&[cr(0.5), cr(-0.25)]);
        let b = CMatrix::from_diagonal(&[cr(0.1), cr(0.7)]);
        let sys = RationalSystem::fuchsian(2, vec![(cr(0.0), a), (cr(1.0), b)]).unwrap();
        let sch = riemann_scheme(&sys).unwrap();
        assert_eq!(sch.points[0].form.theta, vec![cr(-0.25), cr(0.5)]);
        assert_eq!(sch.points[1].form.theta, vec![cr(0.1), cr(0.7)]);
        let inf = &sch.points[2].form.theta;
        assert!((inf[0] - cr(-0.6)).norm() < 1e-15 && (inf[1] - cr(-0.45)).norm() < 1e-15);
    }

    #[test]
    fn four_distinct_points() {
        let mk = |a: f64, b: f64| CMatrix::from_diagonal(&[cr(a), cr(b)]);
        let sys = RationalSystem::fuchsian(
            2,
            vec![(cr(0.0), mk(0.1, 0.2)), (cr(1.0), mk(0.3, 0.5)), (cr(3.0), mk(0.7, 0.11))],
        )
        .unwrap();
        let st = spectral_type(&riemann_scheme(&sys).unwrap()).unwrap();
        assert_eq!(st.to_string(), "11,11,11,11");
    }

    #[test]
    fn inconsistent_toy_scheme() {
        let sch = RiemannScheme::new(
            1,
            vec![LocalScheme {
                location: Location::Finite(cr(0.0)),
                form: HtlForm::fuchsian(vec![cr(1.0)]),
            }],
        )
        .unwrap();
        assert_eq!(fuchs_residual(&sch), 1.0);
    }

    #[test]
    fn ramified_levels_rejected() {
        assert!(matches!(
            HtlForm::new(&[(3, 2), (1, 1)], vec![vec![cr(1.0)]], vec![cr(0.0)]),
            Err(Error::Unsupported(_))
        ));
        let f = HtlForm::new(&[(2, 1), (1, 1)], vec![vec![cr(1.0)]], vec![cr(0.0)]).unwrap();
        assert_eq!(f.poincare_rank(), 1);
    }

    #[test]
    fn rank_two_unsupported() {
        let i = CMatrix::identity(1);
        let sys = RationalSystem::new(
            1,
            vec![SingularPoint {
                position: cr(0.0),
                coefficients: vec![i.clone(), i.clone(), i],
            }],
            vec![],
        )
        .unwrap();
        assert!(matches!(riemann_scheme(&sys), Err(Error::Unsupported(_))));
    }

    #[test]
    fn realize_rank_one_residue() {
        let a = CMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let sys = RationalSystem::fuchsian(2, vec![(cr(0.0), a)]).unwrap();
        let f = realize_factored(&sys).unwrap();
        assert_eq!(f.size(), 1);
        assert_eq!(f.t(), &[cr(0.0)]);
        assert!(f.q().rel_diff(&CMatrix::from_real_rows(&[&[1.0], &[1.0]]).unwrap()) < 1e-14);
        assert!(f.p().rel_diff(&CMatrix::from_real_rows(&[&[1.0, 1.0]]).unwrap()) < 1e-14);
    }

    #[test]
    fn realize_round_trip_pointwise() {
        let sys = example_31_22_22();
        let f = realize_factored(&sys).unwrap();
        // every residue is invertible here
        assert_eq!(f.size(), 12);
        let back = f.to_rational().unwrap();
        for k in 0..20 {
            let x = c(0.37 * k as f64 - 2.0, 1.3 - 0.21 * k as f64);
            assert!(back.eval(x).rel_diff(&sys.eval(x)) < 1e-10);
            assert!(f.eval(x).rel_diff(&sys.eval(x)) < 1e-10);
        }
    }

    #[test]
    fn realize_rejects_higher_rank_at_infinity() {
        let i = CMatrix::identity(1);
        let sys = RationalSystem::new(1, vec![], vec![i.clone(), i]).unwrap();
        assert!(matches!(realize_factored(&sys), Err(Error::NotRealizable(_))));
    }

    #[test]
    fn json_round_trip() {
        let sys = example_31_22_22();
        let s = serde_json::to_string(&sys).unwrap();
        let back: RationalSystem = serde_json::from_str(&s).unwrap();
        assert_eq!(back, sys);
        assert!(serde_json::from_str::<RationalSystem>(r#"{"rank":2,"points":[{"position":[0,0],"coefficients":[[[[1,0]]]]}]}"#).is_err());
    }
}
