//! Optical Bloch equations in the frame rotating at the drive frequency.
//!
//! States are 2×2 atom density matrices; the Liouvillian acts on their
//! column-stacked vectorization.

use crate::densemath::{
    eigenvalues, inverse, left_super, lindblad_super, matexp, right_super, solve, CplxMatrix, C64, I, ONE, PIVOT_TOL,
    ZERO,
};
use crate::error::{Error, Result};
use crate::model::{
    atom_from_bloch, interaction_to_rotating, qubit_ops, rotating_to_interaction, sigma_y, ModelParams,
};

/// Largest accepted RK4 step in units of the inverse fastest rate.
pub const RK4_STEP_LIMIT: f64 = 0.05;

/// Threshold below which a second eigenvalue counts as a degenerate zero mode.
pub const NULL_SPACE_TOL: f64 = 1e-10;

/// Rotating-frame Liouvillian of one parameter point.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    pub mat: CplxMatrix,
    pub params: ModelParams,
}

/// Rotating-frame drive Hamiltonian (iΩ/2)(σ₊ − σ₋) + (δ/2)σ_z with δ = ω₀ − ω_L.
pub fn rotating_hamiltonian(p: &ModelParams) -> CplxMatrix {
    let q = qubit_ops(p.omega0);
    let mut h = sigma_y().scale_real(-0.5 * p.rabi);
    h.axpy(C64::new(0.5 * p.delta(), 0.0), &q.sigma_z);
    h
}

/// Jump operators √(γ(n̄+1)) σ₋ and √(γn̄) σ₊.
pub fn jump_operators(p: &ModelParams) -> [CplxMatrix; 2] {
    let q = qubit_ops(p.omega0);
    [
        q.sigma_minus.scale_real((p.gamma * (p.nbar + 1.0)).sqrt()),
        q.sigma_plus.scale_real((p.gamma * p.nbar).sqrt()),
    ]
}

/// Dissipator applied to an atom operator.
pub fn dissipator(p: &ModelParams, x: &CplxMatrix) -> CplxMatrix {
    let [a, b] = jump_operators(p);
    &crate::densemath::lindblad_j(&a, x) + &crate::densemath::lindblad_j(&b, x)
}

impl Liouvillian {
    pub fn new(p: &ModelParams) -> Self {
        let h = rotating_hamiltonian(p);
        let mut mat = left_super(&h);
        mat -= &right_super(&h);
        let mut mat = mat.scale(-I);
        for op in jump_operators(p) {
            mat += &lindblad_super(&op);
        }
        Liouvillian { mat, params: p.clone() }
    }

    /// L acting on an atom operator.
    pub fn apply(&self, x: &CplxMatrix) -> CplxMatrix {
        CplxMatrix::unvec_cols(&self.mat.apply(&x.vec_cols()), 2, 2)
    }

    /// Fastest rate used for the RK4 step limit.
    pub fn max_rate(&self) -> f64 {
        let p = &self.params;
        (p.gamma * (2.0 * p.nbar + 1.0)).max(p.rabi.abs()).max(p.delta().abs())
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        eigenvalues(&self.mat)
    }

    /// Propagator e^{Lτ} as a superoperator.
    pub fn propagator(&self, tau: f64) -> CplxMatrix {
        matexp(&self.mat.scale_real(tau))
    }

    /// Applies e^{Lτ} to an atom operator.
    pub fn evolve(&self, x: &CplxMatrix, tau: f64) -> CplxMatrix {
        apply_super(&self.propagator(tau), x)
    }

    /// Evolves an interaction-picture state from t0 to t0 + τ.
    pub fn evolve_interaction(&self, s: &CplxMatrix, t0: f64, tau: f64) -> CplxMatrix {
        let rot = interaction_to_rotating(s, t0, &self.params);
        rotating_to_interaction(&self.evolve(&rot, tau), t0 + tau, &self.params)
    }

    /// (z·Id − L)⁻¹.
    pub fn resolvent(&self, z: C64) -> Result<CplxMatrix> {
        let mut m = CplxMatrix::identity(4).scale(z);
        m -= &self.mat;
        inverse(&m, PIVOT_TOL)
    }

    /// (z·Id − L)⁻¹ restricted to traceless operators, regular at z = 0.
    ///
    /// Built as (z·Id − L + |r⟩⟨l|)⁻¹ (Id − |r⟩⟨l|) with r the vectorized
    /// steady state and l the vectorized identity.
    pub fn deflated_resolvent(&self, z: C64, steady: &CplxMatrix) -> Result<CplxMatrix> {
        let r = steady.vec_cols();
        let l = CplxMatrix::identity(2).vec_cols();
        let proj = CplxMatrix::from_fn(4, 4, |i, j| r[i] * l[j].conj());
        let mut m = CplxMatrix::identity(4).scale(z);
        m -= &self.mat;
        m += &proj;
        let inv = inverse(&m, PIVOT_TOL)?;
        let mut q = CplxMatrix::identity(4);
        q -= &proj;
        Ok(inv.matmul(&q))
    }

    /// Classical RK4 from `s0` to `t_end` with fixed step; returns the
    /// samples at every step including t = 0.
    pub fn integrate(&self, s0: &CplxMatrix, t_end: f64, dt: f64) -> Result<Vec<(f64, CplxMatrix)>> {
        let limit = RK4_STEP_LIMIT / self.max_rate();
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::StepSize { dt, limit });
        }
        let n = (t_end / dt).round() as usize;
        let mut out = Vec::with_capacity(n + 1);
        let mut v = s0.vec_cols();
        out.push((0.0, s0.clone()));
        let h = C64::new(dt, 0.0);
        for k in 0..n {
            let k1 = self.mat.apply(&v);
            let k2 = self.mat.apply(&axpy_vec(&v, h * 0.5, &k1));
            let k3 = self.mat.apply(&axpy_vec(&v, h * 0.5, &k2));
            let k4 = self.mat.apply(&axpy_vec(&v, h, &k3));
            for i in 0..4 {
                v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            out.push(((k + 1) as f64 * dt, CplxMatrix::unvec_cols(&v, 2, 2)));
        }
        Ok(out)
    }

    /// Normalized null vector of L.
    pub fn steady_state(&self) -> Result<CplxMatrix> {
        let mut mags: Vec<f64> = self.eigenvalues()?.iter().map(|z| z.norm()).collect();
        mags.sort_by(f64::total_cmp);
        if mags[1] < NULL_SPACE_TOL {
            return Err(Error::DegenerateNullSpace(mags[1]));
        }
        // Replace the first equation by the trace condition.
        let scale = self.mat.max_abs();
        let mut a = self.mat.scale_real(1.0 / scale);
        let l = CplxMatrix::identity(2).vec_cols();
        for j in 0..4 {
            a[(0, j)] = l[j];
        }
        let mut rhs = vec![ZERO; 4];
        rhs[0] = ONE;
        let v = solve(&a, &rhs, PIVOT_TOL)?;
        Ok(CplxMatrix::unvec_cols(&v, 2, 2).hermitian_part())
    }
}

/// Applies a superoperator to a 2×2 operator.
pub fn apply_super(sup: &CplxMatrix, x: &CplxMatrix) -> CplxMatrix {
    let n = x.rows();
    CplxMatrix::unvec_cols(&sup.apply(&x.vec_cols()), n, n)
}

fn axpy_vec(v: &[C64], a: C64, w: &[C64]) -> Vec<C64> {
    v.iter().zip(w).map(|(x, y)| x + a * y).collect()
}

/// Closed-form Bloch equations in the rotating frame: time derivative of
/// (x, y, z).
pub fn bloch_rhs(p: &ModelParams, r: [f64; 3]) -> [f64; 3] {
    let [x, y, z] = r;
    let g1 = p.gamma * (2.0 * p.nbar + 1.0);
    let g2 = 0.5 * g1;
    let d = p.delta();
    [
        -p.rabi * z - d * y - g2 * x,
        d * x - g2 * y,
        p.rabi * x - g1 * z - p.gamma,
    ]
}

/// Closed-form steady Bloch vector in the rotating frame.
pub fn steady_bloch(p: &ModelParams) -> [f64; 3] {
    let g1 = p.gamma * (2.0 * p.nbar + 1.0);
    let g2 = 0.5 * g1;
    let d = p.delta();
    let lor = g2 / (g2 * g2 + d * d);
    let z = -p.gamma / (g1 + p.rabi * p.rabi * lor);
    let x = -p.rabi * z * lor;
    let y = d * x / g2;
    [x, y, z]
}

/// Closed-form steady state as a density matrix.
pub fn steady_state_closed_form(p: &ModelParams) -> CplxMatrix {
    let [x, y, z] = steady_bloch(p);
    atom_from_bloch(x, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bloch, excited, thermal_qubit};

    fn params(rabi: f64, det: f64, nbar: f64) -> ModelParams {
        ModelParams::scaled(rabi, det, nbar, 1e-3)
    }

    #[test]
    fn trace_preservation() {
        let l = Liouvillian::new(&params(2.0, 1.0, 0.3));
        let id = CplxMatrix::identity(2).vec_cols();
        for j in 0..4 {
            let s: C64 = (0..4).map(|i| id[i].conj() * l.mat[(i, j)]).sum();
            assert!(s.norm() < 1e-12 * l.mat.max_abs());
        }
    }

    #[test]
    fn undriven_spectrum() {
        let p = params(0.0, 1.5, 0.0);
        let l = Liouvillian::new(&p);
        let mut ev = l.eigenvalues().unwrap();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        let g = p.gamma;
        let d = p.delta();
        let mut expected = vec![
            C64::new(0.0, 0.0),
            C64::new(-g / 2.0, -d),
            C64::new(-g / 2.0, d),
            C64::new(-g, 0.0),
        ];
        expected.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        for (a, b) in ev.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-10 * g, "{a} vs {b}");
        }
    }

    #[test]
    fn thermal_fixed_point() {
        let p = params(0.0, 0.0, 0.5);
        let l = Liouvillian::new(&p);
        let ss = l.steady_state().unwrap();
        assert!((&ss - &thermal_qubit(0.5)).max_abs() < 1e-12);
        assert!((ss[(0, 0)].re - 0.25).abs() < 1e-12);
        let traj = l.integrate(&ss, 5.0 / p.gamma, 1e-2 / p.gamma).unwrap();
        assert!((&traj.last().unwrap().1 - &ss).max_abs() < 1e-10);
    }

    #[test]
    fn decay_matches_exponential() {
        let p = params(0.0, 0.0, 0.0);
        let l = Liouvillian::new(&p);
        let traj = l.integrate(&excited(), 5.0 / p.gamma, 1e-2 / p.gamma).unwrap();
        for (t, s) in traj.iter().step_by(50) {
            assert!((s[(0, 0)].re - (-p.gamma * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn rk4_fourth_order() {
        let p = params(3.0, 1.0, 0.2);
        let l = Liouvillian::new(&p);
        let t = 2.0 / p.gamma;
        let exact = l.evolve(&excited(), t);
        let err = |dt: f64| (&l.integrate(&excited(), t, dt).unwrap().last().unwrap().1 - &exact).max_abs();
        let h = 0.016 / p.gamma;
        let ratio = err(h) / err(h / 2.0);
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn step_size_guard() {
        let p = params(2.0, 0.0, 0.0);
        let l = Liouvillian::new(&p);
        assert!(matches!(
            l.integrate(&excited(), 1.0, 0.1 / p.gamma),
            Err(Error::StepSize { .. })
        ));
    }

    #[test]
    fn steady_state_routes_agree() {
        for (r, d, n) in [(1.0, 0.0, 0.0), (0.7, 1.0, 0.2), (6.0, -2.0, 0.5), (0.0, 0.0, 0.1)] {
            let p = params(r, d, n);
            let l = Liouvillian::new(&p);
            let a = l.steady_state().unwrap();
            let b = steady_state_closed_form(&p);
            assert!((&a - &b).max_abs() < 1e-12, "{a:?} vs {b:?}");
            assert!(l.apply(&a).max_abs() < 1e-12 * p.gamma);
            let long = l
                .integrate(&excited(), 40.0 / p.gamma, 1e-2 / p.gamma.max(p.rabi))
                .unwrap();
            assert!((&long.last().unwrap().1 - &a).max_abs() < 1e-8);
        }
    }

    #[test]
    fn bloch_rhs_matches_liouvillian() {
        let p = params(1.3, 0.8, 0.4);
        let l = Liouvillian::new(&p);
        let r = [0.3, -0.2, 0.5];
        let s = atom_from_bloch(r[0], r[1], r[2]);
        let ds = l.apply(&s);
        // Bloch components are linear in the state; read them off ds + I/2.
        let d = bloch(&(&ds + &CplxMatrix::identity(2).scale_real(0.5)));
        let rhs = bloch_rhs(&p, r);
        for k in 0..3 {
            assert!((d[k] - rhs[k]).abs() < 1e-15, "{k}: {} vs {}", d[k], rhs[k]);
        }
    }

    #[test]
    fn resolvent_inverse_property() {
        let p = params(2.0, 0.5, 0.1);
        let l = Liouvillian::new(&p);
        let z = C64::new(0.0, 1.7 * p.gamma);
        let r = l.resolvent(z).unwrap();
        let mut m = CplxMatrix::identity(4).scale(z);
        m -= &l.mat;
        assert!((&m.matmul(&r) - &CplxMatrix::identity(4)).max_abs() < 1e-8);
    }

    #[test]
    fn deflated_resolvent_agrees_on_traceless_sector() {
        let p = params(2.0, 0.5, 0.1);
        let l = Liouvillian::new(&p);
        let ss = l.steady_state().unwrap();
        let z = C64::new(0.0, 0.9 * p.gamma);
        let full = l.resolvent(z).unwrap();
        let defl = l.deflated_resolvent(z, &ss).unwrap();
        let x = CplxMatrix::from_vec(
            2,
            2,
            vec![
                C64::new(0.2, 0.0),
                C64::new(0.1, 0.3),
                C64::new(-0.4, 0.1),
                C64::new(-0.2, 0.0),
            ],
        )
        .unwrap();
        let a = apply_super(&full, &x);
        let b = apply_super(&defl, &x);
        assert!((&a - &b).max_abs() < 1e-8 * a.max_abs());
        // Regular at z = 0.
        assert!(l.deflated_resolvent(ZERO, &ss).is_ok());
    }

    #[test]
    fn undriven_lorentzian() {
        let p = params(0.0, 0.7, 0.0);
        let l = Liouvillian::new(&p);
        let q = qubit_ops(p.omega0);
        let g = p.gamma;
        for k in -5..=5 {
            let w = (k as f64 + 0.5) * 0.4 * g;
            let r = l.resolvent(C64::new(0.0, w)).unwrap();
            let val = crate::densemath::expectation(&q.sigma_plus, &apply_super(&r, &q.sigma_minus)).re;
            let oracle = (g / 2.0) / ((g / 2.0).powi(2) + (w - p.delta()).powi(2));
            assert!((val - oracle).abs() < 1e-9 * oracle, "{val} vs {oracle}");
        }
    }
}
