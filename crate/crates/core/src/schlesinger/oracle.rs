//! Independent construction of the elementary Schlesinger multiplier and
//! the uniqueness check for the triangular gauge.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::systems::RationalSystem;

use super::{build_fuchsian_211, extract_state, Direction, GarnierState, TriangularPair};

/// Transformed system and checks from [`schlesinger_oracle`].
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub system: RationalSystem,
    /// `R(x) = I - ε Π / (x - u₁)` with `Π` this rank-one projector.
    pub projector: CMatrix,
    /// Mismatch of `R[A]` with the interpolated simple-pole form at a
    /// check point, relative.
    pub interpolation_residual: f64,
}

/// Unit vector spanning the kernel of `m - z`, rejecting both a non-kernel
/// and a kernel of dimension above one.
fn simple_eigenvector(m: &CMatrix, z: C64, what: &str) -> Result<Vec<C64>> {
    let shifted = m.shift(-z);
    let scale = m.max_abs().max(z.norm()).max(1.0);
    let sv = shifted.singular_values();
    let n = sv.len();
    if sv[n - 1] > 1e-8 * scale {
        return Err(Error::NoSolution(format!("{what} = {z} is not an eigenvalue")));
    }
    if n > 1 && sv[n - 2] <= 1e-8 * scale {
        return Err(Error::NonUnique(format!("{what} = {z} is not a simple eigenvalue")));
    }
    Ok(shifted.nullspace(f64::INFINITY).column(0))
}

/// `R[A] = R A R⁻¹ + R' R⁻¹` at `x`.
fn gauge_transform_at(sys: &RationalSystem, r: &dyn Fn(C64) -> (CMatrix, CMatrix), x: C64) -> Result<CMatrix> {
    let (rx, drx) = r(x);
    let ri = rx.inverse()?;
    Ok(&rx * &sys.eval(x) * &ri + &drx * &ri)
}

/// Raises the exponent `raise` of the residue at the first singular point
/// by one and lowers the exponent `lower` at the second by one, through the
/// rational multiplier `R(x) = I - (u₀ - u₁) Π / (x - u₁)` with `Π` the
/// projector onto the `raise`-eigenline of `A_{u₀}` along the
/// `lower`-left-eigenvector of `A_{u₁}`. The new residues are recovered by
/// interpolation of `R[A]` at sample points, independently of any closed
/// form. `shift = None` gives `R = I`.
pub fn schlesinger_oracle(sys: &RationalSystem, shift: Option<(C64, C64)>) -> Result<OracleResult> {
    if !sys.is_fuchsian() || sys.points().len() < 2 {
        return Err(Error::InvalidSystem(
            "oracle needs a Fuchsian system with at least two finite points".into(),
        ));
    }
    let n = sys.rank();
    let pts = sys.points();
    let (u0, u1) = (pts[0].position, pts[1].position);
    let d = u0 - u1;
    let projector = match shift {
        None => CMatrix::zeros(n, n),
        Some((raise, lower)) => {
            let v = simple_eigenvector(pts[0].residue(), raise, "raised exponent")?;
            let l = simple_eigenvector(&pts[1].residue().transpose(), lower, "lowered exponent")?;
            let lv: C64 = l.iter().zip(&v).map(|(a, b)| a * b).sum();
            let vn = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let ln = l.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if lv.norm() <= 1e-10 * vn * ln {
                return Err(Error::NoSolution("eigenvectors are orthogonal".into()));
            }
            &CMatrix::column_vector(&v) * &CMatrix::row_vector(&l).scale(lv.inv())
        }
    };
    let eye = CMatrix::identity(n);
    let r = |x: C64| {
        let z = (x - u1).inv();
        (&eye - &projector.scale(d * z), projector.scale(d * z * z))
    };

    // R[A] = Σ_ν B_ν / (x - u_ν): solve for the B_ν from as many samples
    let k = pts.len();
    let span = pts
        .iter()
        .map(|p| p.position.norm())
        .fold(1.0, f64::max);
    let sample = |i: usize| {
        let ang = 0.7 + 2.1 * i as f64;
        C64::from_polar(2.0 * span + 0.37 * i as f64, ang)
    };
    let mut vand = CMatrix::zeros(k, k);
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        let x = sample(i);
        for (j, p) in pts.iter().enumerate() {
            vand[(i, j)] = (x - p.position).inv();
        }
        values.push(gauge_transform_at(sys, &r, x)?);
    }
    let vinv = vand.inverse()?;
    let residues: Vec<(C64, CMatrix)> = pts
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let mut acc = CMatrix::zeros(n, n);
            for (i, val) in values.iter().enumerate() {
                acc = acc + val.scale(vinv[(j, i)]);
            }
            (p.position, acc)
        })
        .collect();
    let system = RationalSystem::fuchsian(n, residues)?;
    let check = C64::new(-0.61, 1.37) * span;
    let direct = gauge_transform_at(sys, &r, check)?;
    let interpolation_residual = system.eval(check).rel_diff(&direct);
    Ok(OracleResult {
        system,
        projector,
        interpolation_residual,
    })
}

/// Flag basis: column `k` lies in the span of the eigenvectors of `upper`
/// for its first `k+1` target exponents and in the span of the
/// eigenvectors of `lower` for its last `m-k` target exponents.
fn triangularizing_basis(
    upper: &CMatrix,
    lower: &CMatrix,
    rho: &[C64],
    sigma: &[C64],
) -> Result<CMatrix> {
    let m = rho.len();
    let v0: Vec<Vec<C64>> = rho
        .iter()
        .map(|&z| simple_eigenvector(upper, z, "upper exponent"))
        .collect::<Result<_>>()?;
    let v1: Vec<Vec<C64>> = sigma
        .iter()
        .map(|&z| simple_eigenvector(lower, z, "lower exponent"))
        .collect::<Result<_>>()?;
    let mut f = CMatrix::zeros(m, m);
    for k in 0..m {
        let mut cols: Vec<Vec<C64>> = v0[..=k].to_vec();
        cols.extend(v1[k..].iter().map(|v| v.iter().map(|z| -z).collect()));
        let mut s = CMatrix::zeros(m, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for i in 0..m {
                s[(i, j)] = col[i];
            }
        }
        let coeffs = s.nullspace(f64::INFINITY).column(0);
        for i in 0..m {
            f[(i, k)] = (0..=k).map(|j| v0[j][i] * coeffs[j]).sum();
        }
    }
    Ok(f)
}

/// New coordinates from the oracle: the oracle's residues are brought to
/// triangular form by the flag basis and the coordinates read off as in the
/// closed-form step.
pub fn oracle_state(s: &GarnierState, dir: Direction) -> Result<(GarnierState, OracleResult)> {
    let pair = build_fuchsian_211(s);
    let sys = pair.to_system(s.eps)?;
    let i = dir.index();
    let mut rho = s.rho();
    let mut sigma = s.sigma();
    let res = schlesinger_oracle(&sys, Some((rho[i], sigma[i])))?;
    rho[i] += 1.0;
    sigma[i] -= 1.0;
    let a0 = res.system.points()[0].residue();
    let a1 = res.system.points()[1].residue();
    let f = triangularizing_basis(a0, a1, &rho, &sigma)?;
    let m = (a0 + a1).conjugate_by(&f.inverse()?)?;
    let (state, _) = extract_state(s, &m, dir)?;
    Ok((state, res))
}

/// Dimension of the space of `h` (with `g = h⁻¹`) keeping `g Ā₀ g⁻¹` upper
/// and `g Ā₁ g⁻¹` lower triangular with the same diagonal order, together
/// with the largest off-diagonal weight found in that space.
///
/// Column `k` of `h` must be killed by the left eigenvectors of `Ā₀` for
/// the diagonal entries after `k` and by those of `Ā₁` before `k`.
pub fn gauge_rigidity_nullity(pair: &TriangularPair) -> Result<(usize, f64)> {
    let m = pair.upper.rows();
    let d0 = pair.upper.diagonal();
    let d1 = pair.lower.diagonal();
    let l0: Vec<Vec<C64>> = d0
        .iter()
        .map(|&z| simple_eigenvector(&pair.upper.transpose(), z, "upper diagonal"))
        .collect::<Result<_>>()?;
    let l1: Vec<Vec<C64>> = d1
        .iter()
        .map(|&z| simple_eigenvector(&pair.lower.transpose(), z, "lower diagonal"))
        .collect::<Result<_>>()?;
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for k in 0..m {
        let killers = l0[k + 1..].iter().chain(&l1[..k]);
        for l in killers {
            // unknown h[(i, k)] sits at index k*m + i
            let mut row = vec![C64::default(); m * m];
            for i in 0..m {
                row[k * m + i] = l[i];
            }
            rows.push(row);
        }
    }
    let a = CMatrix::from_rows(&rows)?;
    let scale = a.max_abs().max(1.0);
    let null = a.nullspace(1e-9 * scale);
    let mut offdiag: f64 = 0.0;
    for c in 0..null.cols() {
        let v = null.column(c);
        let mut diag: f64 = 0.0;
        let mut off: f64 = 0.0;
        for k in 0..m {
            for i in 0..m {
                if i == k {
                    diag = diag.max(v[k * m + i].norm());
                } else {
                    off = off.max(v[k * m + i].norm());
                }
            }
        }
        offdiag = offdiag.max(off / diag.max(f64::MIN_POSITIVE));
    }
    Ok((null.cols(), offdiag))
}

#[cfg(test)]
mod tests {
    use super::super::tests::sample_state;
    use super::super::{schlesinger_step_with, Direction};
    use super::*;
    use crate::linalg::LuNormalization;

    #[test]
    fn zero_shift_is_identity() {
        let s = sample_state();
        let sys = build_fuchsian_211(&s).to_system(s.eps).unwrap();
        let out = schlesinger_oracle(&sys, None).unwrap();
        for (a, b) in out.system.points().iter().zip(sys.points()) {
            assert!(a.residue().rel_diff(b.residue()) < 1e-12);
        }
    }

    #[test]
    fn oracle_agrees_with_step() {
        let s = sample_state();
        for dir in [Direction::S1, Direction::S2] {
            let step = schlesinger_step_with(&s, dir, LuNormalization::UnitDiagonalL).unwrap();
            let (o, res) = oracle_state(&s, dir).unwrap();
            assert!(res.interpolation_residual < 1e-10);
            for (a, b) in o.coordinates().iter().zip(step.state.coordinates()) {
                assert!((a - b).norm() <= 1e-8 * b.norm().max(1.0), "{dir:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rigidity() {
        let s = sample_state();
        let out = schlesinger_step_with(&s, Direction::S1, LuNormalization::UnitDiagonalU).unwrap();
        let (nullity, off) = gauge_rigidity_nullity(&out.pair).unwrap();
        assert_eq!(nullity, 4);
        assert!(off < 1e-8);
    }
}
