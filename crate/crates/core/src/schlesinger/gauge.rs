use crate::error::{Error, Result};
use crate::linalg::{lu_decompose, CMatrix, LuNormalization, C64};

/// Output of [`lu_gauge`].
#[derive(Debug, Clone)]
pub struct LuGauge {
    pub g: CMatrix,
    /// `G A₀ G⁻¹` from the closed block formula (upper triangular).
    pub upper: CMatrix,
    /// `G A₁ G⁻¹` from the closed block formula (lower triangular).
    pub lower: CMatrix,
    /// Relative gap between the closed formulas and direct conjugation.
    pub formula_mismatch: f64,
}

fn check_gap(z: C64, m: &CMatrix, what: &str) -> Result<CMatrix> {
    let shifted = CMatrix::scalar(m.rows(), z) - m;
    let scale = m.max_abs().max(z.norm()).max(1.0);
    let smin = shifted.singular_values().last().copied().unwrap_or(f64::INFINITY);
    if smin <= 1e-12 * scale {
        return Err(Error::SpectralCollision(format!("{what} = {z} is an eigenvalue")));
    }
    Ok(shifted)
}

/// Triangularizing gauge for the pair
///
/// ```text
/// A₀ = [λ 0; b B],   A₁ = [μ cᵀ; 0 C]
/// ```
///
/// Writing `x = (λ - B)⁻¹ b`, `y = cᵀ (μ - C)⁻¹` and factoring
/// `[1 y; 0 I]·[1 0; x I] = L U` without pivoting, the gauge is
/// `G = diag(l₁⁻¹, U₂₂)·[1 y; -x I]`. Then `G A₀ G⁻¹` is upper and
/// `G A₁ G⁻¹` lower triangular (when `B`, `C` are).
pub fn lu_gauge(
    lambda: C64,
    b: &[C64],
    bmat: &CMatrix,
    mu: C64,
    c: &[C64],
    cmat: &CMatrix,
    normalization: LuNormalization,
) -> Result<LuGauge> {
    let n = b.len();
    if c.len() != n || bmat.rows() != n || bmat.cols() != n || cmat.rows() != n || cmat.cols() != n {
        return Err(Error::Dimension(format!("lu_gauge expects blocks of size {n}")));
    }
    let lam_b = check_gap(lambda, bmat, "lambda")?;
    let mu_c = check_gap(mu, cmat, "mu")?;
    let bcol = CMatrix::column_vector(b);
    let crow = CMatrix::row_vector(c);
    let x = lam_b.solve(&bcol)?;
    let y = mu_c.transpose().solve(&crow.transpose())?.transpose();

    let one = CMatrix::identity(1);
    let mut left = CMatrix::identity(n + 1);
    left.set_block(0, 1, &y);
    let mut right = CMatrix::identity(n + 1);
    right.set_block(1, 0, &x);
    let lu = lu_decompose(&(&left * &right), normalization)?;
    let l1 = lu.l[(0, 0)];
    let u1 = lu.u[(0, 0)];
    let l22 = lu.l.block(1, 1, n, n);
    let u22 = lu.u.block(1, 1, n, n);

    let mut h = CMatrix::identity(n + 1);
    h.set_block(0, 1, &y);
    h.set_block(1, 0, &(-&x));
    let g = one.scale(l1.inv()).direct_sum(&u22) * h;

    let u22_inv = u22.inverse()?;
    let l22_inv = l22.inverse()?;
    let mut upper = CMatrix::zeros(n + 1, n + 1);
    upper[(0, 0)] = lambda;
    upper.set_block(0, 1, &(&y * &lam_b * &u22_inv).scale(-l1.inv()));
    upper.set_block(1, 1, &(&u22 * bmat * &u22_inv));
    let mut lower = CMatrix::zeros(n + 1, n + 1);
    lower[(0, 0)] = mu;
    lower.set_block(1, 0, &(&l22_inv * &mu_c * &x).scale(-u1.inv()));
    lower.set_block(1, 1, &(&l22_inv * cmat * &l22));

    let mut a0 = CMatrix::zeros(n + 1, n + 1);
    a0[(0, 0)] = lambda;
    a0.set_block(1, 0, &bcol);
    a0.set_block(1, 1, bmat);
    let mut a1 = CMatrix::zeros(n + 1, n + 1);
    a1[(0, 0)] = mu;
    a1.set_block(0, 1, &crow);
    a1.set_block(1, 1, cmat);
    let gi = g.inverse()?;
    let direct0 = &g * &a0 * &gi;
    let direct1 = &g * &a1 * &gi;
    let formula_mismatch = upper.rel_diff(&direct0).max(lower.rel_diff(&direct1));
    Ok(LuGauge {
        g,
        upper,
        lower,
        formula_mismatch,
    })
}
