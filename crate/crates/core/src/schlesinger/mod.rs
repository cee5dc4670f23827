//! Discrete Garnier dynamics: the rank-2 five-point system, its rank-4
//! three-point partner with a triangular residue pair, and the two
//! Schlesinger steps that shift `t₁` or `t₂` by `ε`.

mod gauge;
mod hamiltonian;
mod oracle;

pub use gauge::{lu_gauge, LuGauge};
pub use hamiltonian::{garnier_hamiltonians, painleve_vi_hamiltonian};
pub use oracle::{gauge_rigidity_nullity, oracle_state, schlesinger_oracle, OracleResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, LuNormalization, C64};
use crate::systems::{FactoredSystem, RationalSystem};

/// Tolerance on the Fuchs relation when a state file carries `theta_inf1`.
pub const FUCHS_TOL: f64 = 1e-12;

/// Point of the discrete Garnier phase space together with its parameters.
///
/// `theta_inf1` is never stored: it is fixed by the Fuchs relation. The
/// derived exponents `rho`, `sigma` are likewise recomputed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct GarnierState {
    pub q1: C64,
    pub p1: C64,
    pub q2: C64,
    pub p2: C64,
    pub w: [C64; 4],
    pub u: C64,
    pub theta0: C64,
    pub theta1: C64,
    pub theta_t1: C64,
    pub theta_t2: C64,
    pub theta_inf2: C64,
    pub t1: C64,
    pub t2: C64,
    pub eps: C64,
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    q1: C64,
    p1: C64,
    q2: C64,
    p2: C64,
    w: [C64; 4],
    u: C64,
    theta0: C64,
    theta1: C64,
    theta_t1: C64,
    theta_t2: C64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta_inf1: Option<C64>,
    theta_inf2: C64,
    t1: C64,
    t2: C64,
    eps: C64,
    /// Output only.
    #[serde(default, skip_deserializing)]
    rho: Option<[C64; 4]>,
    /// Output only.
    #[serde(default, skip_deserializing)]
    sigma: Option<[C64; 4]>,
}

impl Serialize for GarnierState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateRecord {
            q1: self.q1,
            p1: self.p1,
            q2: self.q2,
            p2: self.p2,
            w: self.w,
            u: self.u,
            theta0: self.theta0,
            theta1: self.theta1,
            theta_t1: self.theta_t1,
            theta_t2: self.theta_t2,
            theta_inf1: Some(self.theta_inf1()),
            theta_inf2: self.theta_inf2,
            t1: self.t1,
            t2: self.t2,
            eps: self.eps,
            rho: Some(self.rho()),
            sigma: Some(self.sigma()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GarnierState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = StateRecord::deserialize(d)?;
        let state = GarnierState {
            q1: r.q1,
            p1: r.p1,
            q2: r.q2,
            p2: r.p2,
            w: r.w,
            u: r.u,
            theta0: r.theta0,
            theta1: r.theta1,
            theta_t1: r.theta_t1,
            theta_t2: r.theta_t2,
            theta_inf2: r.theta_inf2,
            t1: r.t1,
            t2: r.t2,
            eps: r.eps,
        };
        if let Some(given) = r.theta_inf1 {
            let expected = state.theta_inf1();
            let scale = [state.theta0, state.theta1, state.theta_t1, state.theta_t2, state.theta_inf2]
                .iter()
                .map(|z| z.norm())
                .fold(1.0, f64::max);
            if (given - expected).norm() > FUCHS_TOL * scale {
                return Err(serde::de::Error::custom(Error::InvalidState(format!(
                    "Fuchs relation violated: theta_inf1 = {given}, the other exponents require {expected}"
                ))));
            }
        }
        state.validate().map_err(serde::de::Error::custom)?;
        Ok(state)
    }
}

impl GarnierState {
    /// Checks finiteness, nonzero gauge weights and `ε`, and the position
    /// constraints `t₁, t₂ ∉ {0, 1}`, `t₁ ≠ t₂`.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.q1, self.p1, self.q2, self.p2, self.u, self.theta0, self.theta1, self.theta_t1,
            self.theta_t2, self.theta_inf2, self.t1, self.t2, self.eps,
        ];
        if all.iter().chain(&self.w).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if self.w.iter().any(|z| z.norm() == 0.0) || self.u.norm() == 0.0 {
            return Err(Error::InvalidState("gauge weights w, u must be nonzero".into()));
        }
        if self.eps.norm() == 0.0 {
            return Err(Error::ZeroEpsilon);
        }
        let tiny = 1e-12;
        for (name, t) in [("t1", self.t1), ("t2", self.t2)] {
            if t.norm() <= tiny || (t - 1.0).norm() <= tiny {
                return Err(Error::InvalidState(format!("{name} must avoid 0 and 1")));
            }
        }
        if (self.t1 - self.t2).norm() <= tiny {
            return Err(Error::InvalidState("t1 and t2 coincide".into()));
        }
        Ok(())
    }

    pub fn theta_inf1(&self) -> C64 {
        -(self.theta0 + self.theta1 + self.theta_t1 + self.theta_t2 + self.theta_inf2)
    }

    /// Diagonal of the upper residue: `(t₁/ε, t₂/ε, 1/ε, 0)`.
    pub fn rho(&self) -> [C64; 4] {
        [self.t1 / self.eps, self.t2 / self.eps, self.eps.inv(), C64::default()]
    }

    /// Diagonal of the lower residue.
    pub fn sigma(&self) -> [C64; 4] {
        let r = self.rho();
        [
            self.theta_t1 - r[0],
            self.theta_t2 - r[1],
            self.theta1 - r[2],
            self.theta0,
        ]
    }

    pub fn coordinates(&self) -> [C64; 4] {
        [self.q1, self.p1, self.q2, self.p2]
    }

    /// `(Q̂, P̂)` with `diag(P̂ Q̂) = (θ^{t₁}, θ^{t₂}, θ¹, θ⁰)`.
    pub fn hat_matrices(&self) -> (CMatrix, CMatrix) {
        let (q1, p1, q2, p2) = (self.q1, self.p1, self.q2, self.p2);
        let (t1, t2) = (self.t1, self.t2);
        let one = C64::new(1.0, 0.0);
        let zero = C64::default();
        let qh = CMatrix::from_rows(&[
            vec![one, one, one, one],
            vec![t1 * p1, t2 * p2, p1 * q1 + p2 * q2 - self.theta_inf2, zero],
        ])
        .expect("2x4");
        let ph = CMatrix::from_rows(&[
            vec![self.theta_t1 + p1 * q1, -q1 / t1],
            vec![self.theta_t2 + p2 * q2, -q2 / t2],
            vec![self.theta1 + self.theta_inf2 - p1 * q1 - p2 * q2, one],
            vec![self.theta0, q1 / t1 + q2 / t2 - one],
        ])
        .expect("4x2");
        (qh, ph)
    }

    fn w_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.w)
    }

    fn w_inverse(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.w.map(|z| z.inv()))
    }

    /// `P Q = W⁻¹ P̂ Q̂ W`.
    pub fn pq(&self) -> CMatrix {
        let (qh, ph) = self.hat_matrices();
        &self.w_inverse() * &ph * &qh * &self.w_matrix()
    }
}

/// Rank-2 system `Q (x - T)⁻¹ P` with `T = diag(t₁, t₂, 1, 0)`,
/// `Q = U⁻¹ Q̂ W`, `P = W⁻¹ P̂ U`, `U = diag(1, u)`.
pub fn build_garnier_2x2(s: &GarnierState) -> Result<FactoredSystem> {
    let (qh, ph) = s.hat_matrices();
    let one = C64::new(1.0, 0.0);
    let u = CMatrix::from_diagonal(&[one, s.u]);
    let ui = CMatrix::from_diagonal(&[one, s.u.inv()]);
    let q = &ui * &qh * &s.w_matrix();
    let p = &s.w_inverse() * &ph * &u;
    FactoredSystem::new(vec![s.t1, s.t2, one, C64::default()], q, p, vec![C64::default(); 2])
}

/// Residues `A₀` (upper, at 0) and `A₁` (lower, at `-ε`) of the rank-4
/// three-point system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularPair {
    pub upper: CMatrix,
    pub lower: CMatrix,
}

impl TriangularPair {
    pub fn to_system(&self, eps: C64) -> Result<RationalSystem> {
        RationalSystem::fuchsian(
            self.upper.rows(),
            vec![(C64::default(), self.upper.clone()), (-eps, self.lower.clone())],
        )
    }

    /// Largest strictly-lower entry of `upper` and strictly-upper entry of
    /// `lower`, relative to the pair's size.
    pub fn triangularity_defect(&self) -> f64 {
        let scale = self.upper.max_abs().max(self.lower.max_abs()).max(1.0);
        self.upper.lower(true).max_abs().max(self.lower.upper(true).max_abs()) / scale
    }
}

/// Splits `PQ` into its upper part with diagonal `ρ` and its strictly lower
/// part with diagonal `σ`.
pub fn build_fuchsian_211(s: &GarnierState) -> TriangularPair {
    let pq = s.pq();
    TriangularPair {
        upper: pq.upper(true) + CMatrix::from_diagonal(&s.rho()),
        lower: pq.lower(true) + CMatrix::from_diagonal(&s.sigma()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    S1,
    S2,
}

impl Direction {
    pub fn index(self) -> usize {
        match self {
            Direction::S1 => 0,
            Direction::S2 => 1,
        }
    }
}

/// Diagnostics and intermediate matrices of one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: GarnierState,
    /// Transformed pair, in the gauge where `upper + lower` is the new `P̂Q̂`
    /// up to the diagonal `W̄`.
    pub pair: TriangularPair,
    /// `‖W̄⁻¹ P̂Q̂(new) W̄ - M‖ / ‖M‖` with `M = upper + lower`.
    pub rebuild_residual: f64,
    /// Smallest singular value of `θ^∞₁ + Mᵀ`, relative.
    pub kernel_residual: f64,
    /// Closed-form vs direct conjugation in the LU gauge.
    pub formula_mismatch: f64,
}

fn rel_tol(scale: f64) -> f64 {
    1e-12 * scale.max(1.0)
}

/// Recovers the new coordinates from `M = Ā₀ + Ā₁`: `w̄` spans the kernel
/// of `θ^∞₁ + Mᵀ` (normalized by `w̄₄ = 1`), `p̄ⱼq̄ⱼ` comes from the fourth
/// column, `p̄ⱼ` from the third row.
pub(crate) fn extract_state(s: &GarnierState, m: &CMatrix, dir: Direction) -> Result<(GarnierState, f64)> {
    let th_inf1 = s.theta_inf1();
    let k = m.transpose().shift(th_inf1);
    let scale = k.max_abs().max(1.0);
    let sv = k.singular_values();
    let rank = sv.iter().filter(|&&x| x > 1e-9 * scale).count();
    if rank != 3 {
        return Err(Error::KernelDimension(4 - rank));
    }
    let kernel = k.nullspace(f64::INFINITY).column(0);
    if kernel[3].norm() <= rel_tol(kernel.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
        return Err(Error::DivideByZero("w4".into()));
    }
    let w: Vec<C64> = kernel.iter().map(|z| z / kernel[3]).collect();
    let mut t = [s.t1, s.t2];
    t[dir.index()] += s.eps;
    let pq = [w[0] * m[(0, 3)] - s.theta_t1, w[1] * m[(1, 3)] - s.theta_t2];
    let common = w[0] * m[(0, 3)] + w[1] * m[(1, 3)] + s.theta0 + th_inf1;
    let mut p = [C64::default(); 2];
    for j in 0..2 {
        if w[j].norm() <= rel_tol(1.0) * 1e-3 {
            return Err(Error::DivideByZero(format!("w{}", j + 1)));
        }
        p[j] = (w[2] / w[j] * m[(2, j)] + common) / t[j];
    }
    let pscale = p.iter().chain(&pq).map(|z| z.norm()).fold(1.0, f64::max);
    for (j, pj) in p.iter().enumerate() {
        if pj.norm() <= rel_tol(pscale) {
            return Err(Error::DivideByZero(format!("p{}", j + 1)));
        }
    }
    let next = GarnierState {
        q1: pq[0] / p[0],
        p1: p[0],
        q2: pq[1] / p[1],
        p2: p[1],
        w: [w[0], w[1], w[2], w[3]],
        t1: t[0],
        t2: t[1],
        ..s.clone()
    };
    next.validate()?;
    Ok((next, sv[3] / scale))
}

fn finish_step(
    s: &GarnierState,
    m: CMatrix,
    pair: TriangularPair,
    dir: Direction,
    formula_mismatch: f64,
) -> Result<StepOutcome> {
    let (state, kernel_residual) = extract_state(s, &m, dir)?;
    let rebuild = state.pq();
    let rebuild_residual = (&rebuild - &m).norm_fro() / m.norm_fro().max(1.0);
    Ok(StepOutcome {
        state,
        pair,
        rebuild_residual,
        kernel_residual,
        formula_mismatch,
    })
}

fn step_s1(s: &GarnierState, norm: LuNormalization) -> Result<StepOutcome> {
    let (qh, ph) = s.hat_matrices();
    let x = &ph * &qh;
    let rho = s.rho();
    let sigma = s.sigma();
    let inner = x.block(1, 1, 3, 3);
    let bmat = inner.upper(true) + CMatrix::from_diagonal(&rho[1..]);
    let cmat = inner.lower(true) + CMatrix::from_diagonal(&sigma[1..]);
    let b: Vec<C64> = (1..4).map(|i| x[(i, 0)]).collect();
    let c: Vec<C64> = (1..4).map(|j| x[(0, j)]).collect();
    let one = C64::new(1.0, 0.0);
    let lg = lu_gauge(rho[0] + one, &b, &bmat, sigma[0] - one, &c, &cmat, norm)?;
    let m = x.conjugate_by(&lg.g)?;
    let pair = TriangularPair {
        upper: lg.upper.clone(),
        lower: lg.lower.clone(),
    };
    finish_step(s, m, pair, Direction::S1, lg.formula_mismatch)
}

fn step_s2(s: &GarnierState, norm: LuNormalization) -> Result<StepOutcome> {
    let pair = build_fuchsian_211(s);
    let (a0, a1) = (&pair.upper, &pair.lower);
    let pq = a0 + a1;
    let rho = s.rho();
    let sigma = s.sigma();
    let one = C64::new(1.0, 0.0);
    // constant pre-multiplier mixing the first two coordinates
    let k2 = CMatrix::from_rows(&[
        vec![rho[0] - rho[1], pq[(0, 1)]],
        vec![-pq[(1, 0)], sigma[0] - sigma[1]],
    ])?;
    let det = k2[(0, 0)] * k2[(1, 1)] - k2[(0, 1)] * k2[(1, 0)];
    if det.norm() <= rel_tol(k2.max_abs() * k2.max_abs()) {
        return Err(Error::SpectralCollision("singular 2x2 pre-multiplier".into()));
    }
    let k = k2.direct_sum(&CMatrix::identity(2));
    let ki = k.inverse()?;
    let b0 = &k * a0 * &ki;
    let b1 = &k * a1 * &ki;
    // elementary factor diag(1, x/(x+ε), 1, 1): the second row of the
    // residue at 0 and the second column of the residue at -ε trade places
    let mut t0 = b0.clone();
    let mut t1 = b1.clone();
    for j in [0, 2, 3] {
        t1[(1, j)] += b0[(1, j)];
        t0[(1, j)] = C64::default();
        t0[(j, 1)] += b1[(j, 1)];
        t1[(j, 1)] = C64::default();
    }
    t0[(1, 1)] += one;
    t1[(1, 1)] -= one;
    let w = s.w_matrix();
    let wi = s.w_inverse();
    let h0 = &w * &t0 * &wi;
    let h1 = &w * &t1 * &wi;
    let b: Vec<C64> = (2..4).map(|i| h0[(i, 1)]).collect();
    let c: Vec<C64> = (2..4).map(|j| h1[(1, j)]).collect();
    let bmat = h0.block(2, 2, 2, 2);
    let cmat = h1.block(2, 2, 2, 2);
    let lg = lu_gauge(rho[1] + one, &b, &bmat, sigma[1] - one, &c, &cmat, norm)?;
    let g = CMatrix::identity(1).direct_sum(&lg.g);
    let gi = g.inverse()?;
    let upper = &g * &h0 * &gi;
    let lower = &g * &h1 * &gi;
    let m = &upper + &lower;
    finish_step(s, m, TriangularPair { upper, lower }, Direction::S2, lg.formula_mismatch)
}

/// One Schlesinger step with full diagnostics.
pub fn schlesinger_step_with(
    s: &GarnierState,
    dir: Direction,
    norm: LuNormalization,
) -> Result<StepOutcome> {
    s.validate()?;
    match dir {
        Direction::S1 => step_s1(s, norm),
        Direction::S2 => step_s2(s, norm),
    }
}

/// `S1: ρ_{t₁} ↦ ρ_{t₁} + 1, σ₁ ↦ σ₁ - 1` (that is `t₁ ↦ t₁ + ε`) and the
/// analogous `S2` on the second slot.
pub fn schlesinger_step(s: &GarnierState, dir: Direction) -> Result<GarnierState> {
    Ok(schlesinger_step_with(s, dir, LuNormalization::UnitDiagonalU)?.state)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::{c, eigen_sorted, multiset_distance, TOL_EIG};
    use crate::systems::{riemann_scheme, spectral_type};

    pub(crate) fn sample_state() -> GarnierState {
        GarnierState {
            q1: c(0.4, -0.3),
            p1: c(-0.7, 0.2),
            q2: c(1.1, 0.5),
            p2: c(0.3, 0.9),
            w: [c(1.2, 0.1), c(-0.4, 0.8), c(0.9, -0.6), c(1.0, 0.0)],
            u: c(0.8, -0.2),
            theta0: c(0.21, 0.05),
            theta1: c(-0.33, 0.12),
            theta_t1: c(0.17, -0.28),
            theta_t2: c(0.41, 0.09),
            theta_inf2: c(-0.12, 0.31),
            t1: c(2.3, 0.7),
            t2: c(-1.4, 0.6),
            eps: c(0.37, 0.21),
        }
    }

    #[test]
    fn diag_of_hat_product() {
        let s = sample_state();
        let (qh, ph) = s.hat_matrices();
        let d = (&ph * &qh).diagonal();
        let want = [s.theta_t1, s.theta_t2, s.theta1, s.theta0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).norm() < 1e-14);
        }
        let e = eigen_sorted(&-(&qh * &ph), TOL_EIG).unwrap().values();
        assert!(multiset_distance(&e, &[s.theta_inf1(), s.theta_inf2]) < 1e-12);
    }

    #[test]
    fn rank4_type() {
        let s = sample_state();
        let pair = build_fuchsian_211(&s);
        let sys = pair.to_system(s.eps).unwrap();
        let st = spectral_type(&riemann_scheme(&sys).unwrap()).unwrap();
        assert_eq!(st.to_string(), "211,1111,1111");
        let e0 = eigen_sorted(&pair.upper, TOL_EIG).unwrap().values();
        assert!(multiset_distance(&e0, &s.rho()) < 1e-12);
        let e1 = eigen_sorted(&pair.lower, TOL_EIG).unwrap().values();
        assert!(multiset_distance(&e1, &s.sigma()) < 1e-12);
    }

    #[test]
    fn s1_and_s2_shift_exponents() {
        let s = sample_state();
        for dir in [Direction::S1, Direction::S2] {
            let out = schlesinger_step_with(&s, dir, LuNormalization::UnitDiagonalU).unwrap();
            let mut rho = s.rho();
            let mut sigma = s.sigma();
            rho[dir.index()] += 1.0;
            sigma[dir.index()] -= 1.0;
            let e0 = eigen_sorted(&out.pair.upper, TOL_EIG).unwrap().values();
            let e1 = eigen_sorted(&out.pair.lower, TOL_EIG).unwrap().values();
            assert!(multiset_distance(&e0, &rho) < 1e-9, "{dir:?}");
            assert!(multiset_distance(&e1, &sigma) < 1e-9, "{dir:?}");
            assert!(out.pair.triangularity_defect() < 1e-12, "{dir:?}");
            assert!(out.rebuild_residual < 1e-12, "{dir:?} {}", out.rebuild_residual);
            assert!(out.formula_mismatch < 1e-10);
        }
    }

    #[test]
    fn json_round_trip_and_fuchs_check() {
        let s = sample_state();
        let js = serde_json::to_string(&s).unwrap();
        assert!(js.contains("rho") && js.contains("theta_inf1"));
        let back: GarnierState = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        let mut v: serde_json::Value = serde_json::from_str(&js).unwrap();
        v["theta_inf1"][0] = serde_json::json!(s.theta_inf1().re + 1e-3);
        let err = serde_json::from_value::<GarnierState>(v).unwrap_err().to_string();
        assert!(err.contains("Fuchs"), "{err}");
    }
}
