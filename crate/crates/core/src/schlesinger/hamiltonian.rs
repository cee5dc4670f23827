use crate::error::{Error, Result};
use crate::linalg::C64;

use super::GarnierState;

/// Sixth Painlevé Hamiltonian in the polynomial form of Kajiwara, Noumi and
/// Yamada (external source), with parameters `(α, β; γ, δ)`:
///
/// ```text
/// t(t-1) H = q(q-1)(q-t) p²
///          + { δ q(q-1) - (2α+β+γ+δ) q(q-t) + γ (q-1)(q-t) } p
///          + α(α+β)(q-t)
/// ```
///
/// The sign of the linear term was checked against the discrete flow.
pub fn painleve_vi_hamiltonian(alpha: C64, beta: C64, gamma: C64, delta: C64, t: C64, q: C64, p: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let quad = q * (q - one) * (q - t) * p * p;
    let lin = (delta * q * (q - one) - (2.0 * alpha + beta + gamma + delta) * q * (q - t)
        + gamma * (q - one) * (q - t))
        * p;
    let cst = alpha * (alpha + beta) * (q - t);
    (quad + lin + cst) / (t * (t - one))
}

fn hamiltonian(s: &GarnierState, i: usize) -> C64 {
    let one = C64::new(1.0, 0.0);
    let j = 1 - i;
    let th = [s.theta_t1, s.theta_t2];
    let t = [s.t1, s.t2];
    let q = [s.q1, s.q2];
    let p = [s.p1, s.p2];
    let ti = t[i] * (t[i] - one);
    let vi = painleve_vi_hamiltonian(
        s.theta_inf2,
        s.theta1,
        th[i],
        s.theta0 + th[j] + one,
        t[i],
        q[i],
        p[i],
    );
    let coupling = (2.0 * q[i] * p[i] + q[j] * p[j] - s.theta1 - 2.0 * s.theta_inf2) * q[0] * q[1] * p[j];
    let pole = (ti * (p[i] * q[i] + th[i]) * p[i] * q[j]
        - t[i] * (t[j] - one) * (2.0 * p[i] * q[i] + th[i]) * p[j] * q[j]
        + t[j] * (t[i] - one) * (p[j] * p[j] * q[j] + th[j] * (p[j] - p[i])) * q[i])
        / (t[i] - t[j]);
    (ti * vi + coupling - pole) / ti
}

/// The two Garnier Hamiltonians `(H₁, H₂)` at the state.
pub fn garnier_hamiltonians(s: &GarnierState) -> Result<(C64, C64)> {
    if (s.t1 - s.t2).norm() <= 1e-14 * s.t1.norm().max(1.0) {
        return Err(Error::PoleAtCoincidence);
    }
    for t in [s.t1, s.t2] {
        if t.norm() == 0.0 || (t - 1.0).norm() == 0.0 {
            return Err(Error::DivideByZero("t (t - 1)".into()));
        }
    }
    Ok((hamiltonian(s, 0), hamiltonian(s, 1)))
}

#[cfg(test)]
mod tests {
    use super::super::tests::sample_state;
    use super::*;

    #[test]
    fn index_symmetry() {
        let s = sample_state();
        let mut sw = s.clone();
        std::mem::swap(&mut sw.q1, &mut sw.q2);
        std::mem::swap(&mut sw.p1, &mut sw.p2);
        std::mem::swap(&mut sw.t1, &mut sw.t2);
        std::mem::swap(&mut sw.theta_t1, &mut sw.theta_t2);
        let (h1, h2) = garnier_hamiltonians(&s).unwrap();
        let (k1, k2) = garnier_hamiltonians(&sw).unwrap();
        assert!((h1 - k2).norm() < 1e-12 * h1.norm().max(1.0));
        assert!((h2 - k1).norm() < 1e-12 * h2.norm().max(1.0));
    }

    #[test]
    fn simple_pole_in_t1_minus_t2() {
        let s = sample_state();
        let dir = C64::new(0.3, 0.8);
        let bounded: Vec<f64> = [1e-3, 1e-5, 1e-7]
            .iter()
            .map(|&h| {
                let mut st = s.clone();
                st.t2 = st.t1 + dir * h;
                let (h1, _) = garnier_hamiltonians(&st).unwrap();
                (h1 * (st.t1 - st.t2)).norm()
            })
            .collect();
        assert!((bounded[2] - bounded[1]).abs() < 1e-3 * bounded[1]);
        let mut st = s;
        st.t2 = st.t1;
        assert_eq!(garnier_hamiltonians(&st).unwrap_err(), Error::PoleAtCoincidence);
    }
}
