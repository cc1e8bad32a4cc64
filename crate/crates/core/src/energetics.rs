//! Energy bookkeeping: standard work and heat, bipartite b-work and b-heat
//! for atom and field, self-work, coupling energy and the closed-form
//! steady-state curves.
//!
//! Flows are absolute rates (ħ = 1); divide by γω₀ for the reduced units
//! used in tables and plots. Atom states passed to the closed forms are
//! interaction-picture states at time t.

use crate::collider::{trace_against, Collider, CollisionDeltas, Observer, StepContext};
use crate::densemath::CplxMatrix;
use crate::model::{bloch, interaction_to_rotating, ModelParams};

/// Instantaneous flows evaluated from atomic averages.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Flows {
    pub u_s: f64,
    pub u_f: f64,
    /// d⟨H_D⟩/dt.
    pub v: f64,
    pub bw_s: f64,
    pub bw_f: f64,
    pub bq_s: f64,
    pub bq_f: f64,
    /// Self-work part −γω₀|⟨σ₋⟩|² of the atom b-work.
    pub bw_s_self: f64,
    pub w: f64,
    pub q: f64,
    pub w_self: f64,
}

/// Rotating-frame Bloch vector of an interaction-picture state.
pub fn rotating_bloch(s: &CplxMatrix, t: f64, p: &ModelParams) -> [f64; 3] {
    bloch(&interaction_to_rotating(s, t, p))
}

fn coherence_sqr(x: f64, y: f64) -> f64 {
    0.25 * (x * x + y * y)
}

/// Closed-form flows in terms of ⟨σ±⟩ and ⟨σ_z⟩.
pub fn flows_from_bloch(s: &CplxMatrix, t: f64, p: &ModelParams) -> Flows {
    let [x, y, z] = rotating_bloch(s, t, p);
    let g = p.gamma;
    let w0 = p.omega0;
    let nh = p.nbar + 0.5;
    let c2 = coherence_sqr(x, y);
    let hd = -0.5 * p.rabi * y;
    let u_s = 0.5 * w0 * p.rabi * x - g * w0 * nh * z - 0.5 * g * w0;
    let v = 0.5 * p.rabi * p.laser_detuning() * x - g * nh * hd;
    let u_f = -u_s - v;
    let bw_s_self = -g * w0 * c2;
    let bw_s = 0.5 * w0 * p.rabi * x + bw_s_self;
    let bq_s = u_s - bw_s;
    let (w, q, _) = standard_from_bloch(x, y, z, p);
    let w_self = 0.5 * g * hd * z - g * w0 * c2;
    let bw_f = -w - w_self;
    let bq_f = u_f - bw_f;
    Flows {
        u_s,
        u_f,
        v,
        bw_s,
        bw_f,
        bq_s,
        bq_f,
        bw_s_self,
        w,
        q,
        w_self,
    }
}

fn standard_from_bloch(x: f64, y: f64, z: f64, p: &ModelParams) -> (f64, f64, f64) {
    let g = p.gamma;
    let nh = p.nbar + 0.5;
    let hd = -0.5 * p.rabi * y;
    let w = 0.5 * p.rabi * p.omega_l * x;
    let q = -g * p.omega0 * nh * z - 0.5 * g * p.omega0 - g * nh * hd;
    (w, q, w + q)
}

/// Standard work, heat and internal-energy flows (Ẇ, Q̇, U̇).
pub fn standard_flows(s: &CplxMatrix, t: f64, p: &ModelParams) -> (f64, f64, f64) {
    let [x, y, z] = rotating_bloch(s, t, p);
    standard_from_bloch(x, y, z, p)
}

/// Coupling energy 𝒱 = ⟨H_D⟩ in the rotating frame.
pub fn coupling_energy(s: &CplxMatrix, t: f64, p: &ModelParams) -> f64 {
    -0.5 * p.rabi * rotating_bloch(s, t, p)[1]
}

/// Saturation parameter 2Ω²/(4δ² + γ²(2n̄+1)²).
pub fn saturation(p: &ModelParams) -> f64 {
    p.saturation()
}

/// Steady atom b-work flow in units of γω₀.
pub fn steady_bwork(s: f64, nbar: f64) -> f64 {
    let k = 2.0 * nbar + 1.0;
    0.5 * s / ((1.0 + s) * (1.0 + s)) * (1.0 + s - 1.0 / (k * k))
}

/// Steady self-work flow in units of γω₀.
pub fn steady_selfwork(s: f64, nbar: f64) -> f64 {
    let k = 2.0 * nbar + 1.0;
    -s / (2.0 * k * k * (1.0 + s) * (1.0 + s))
}

/// Energy changes of one collision from its splitting pieces.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DeltaFlows {
    pub u_s: f64,
    pub u_f: f64,
    pub bw_s: f64,
    pub bw_f: f64,
    pub bq_s: f64,
    pub bq_f: f64,
    /// Tr{H_S·Δρ^(2,f)}.
    pub bw_s_self: f64,
    /// Tr{H_S·Δρ^(1)}.
    pub w_first: f64,
    /// Tr{H_S·(Δρ^(1) + Δρ^(2,S))}: work of the unit mean on the atom.
    pub w_drive: f64,
    /// Tr{H_S·(UρU† − ρ)}.
    pub u_s_exact: f64,
}

/// Bipartite energy increments: atom energy H_S, field energy ω₀b†b.
pub fn bipartite_flows(c: &Collider, d: &CollisionDeltas) -> DeltaFlows {
    let hs = c.h_s_joint();
    let hf = c.h_f_joint();
    let bw_s = trace_against(&hs, &d.dotimes);
    let bq_s = trace_against(&hs, &d.dchi);
    let bw_f = trace_against(&hf, &d.dotimes);
    let bq_f = trace_against(&hf, &d.dchi);
    DeltaFlows {
        u_s: bw_s + bq_s,
        u_f: bw_f + bq_f,
        bw_s,
        bw_f,
        bq_s,
        bq_f,
        bw_s_self: trace_against(&hs, &d.d2f),
        w_first: trace_against(&hs, &d.d1),
        w_drive: trace_against(&hs, &d.d1) + trace_against(&hs, &d.d2s),
        u_s_exact: trace_against(&hs, &d.dexact),
    }
}

/// One ledger row: per-step increments and the balance residual.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LedgerStep {
    pub t: f64,
    pub delta: DeltaFlows,
    pub dv: f64,
    pub dw: f64,
    pub dq: f64,
    pub dw_self: f64,
    pub residual: f64,
}

/// Cumulative energies in units of ω₀.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LedgerTotals {
    pub u_s: f64,
    pub u_f: f64,
    pub v: f64,
    pub w: f64,
    pub q: f64,
    pub bw_s: f64,
    pub bw_f: f64,
    pub bq_s: f64,
    pub bq_f: f64,
    pub w_self: f64,
    pub bw_s_self: f64,
    /// Σ w_drive: standard work from the collision increments.
    pub w_drive: f64,
    /// U_S − w_drive: standard heat from the collision increments.
    pub q_drive: f64,
    pub residual: f64,
}

/// Observer that accumulates the energy ledger along a trajectory.
///
/// Bipartite increments come from the collision deltas; W, Q and W_self
/// are left Riemann sums of the closed forms at the step start.
#[derive(Clone, Debug)]
pub struct EnergyLedger {
    pub params: ModelParams,
    pub steps: Vec<LedgerStep>,
    pub totals: LedgerTotals,
    /// Largest |residual|/Δt over the run.
    pub max_residual_rate: f64,
}

impl EnergyLedger {
    pub fn new(p: &ModelParams) -> Self {
        EnergyLedger {
            params: p.clone(),
            steps: Vec::new(),
            totals: LedgerTotals::default(),
            max_residual_rate: 0.0,
        }
    }

    /// Cumulative residual |Σ residual| in units of ħω₀.
    pub fn cumulative_residual(&self) -> f64 {
        self.totals.residual.abs() / self.params.omega0
    }

    /// Time average of per-step flows over the steps with t ≥ t_from.
    pub fn average_flows(&self, t_from: f64) -> Option<DeltaFlows> {
        let sel: Vec<&LedgerStep> = self.steps.iter().filter(|s| s.t >= t_from).collect();
        if sel.is_empty() {
            return None;
        }
        let k = 1.0 / (sel.len() as f64 * self.params.dt);
        let mut a = DeltaFlows::default();
        for s in sel {
            let d = &s.delta;
            a.u_s += d.u_s * k;
            a.u_f += d.u_f * k;
            a.bw_s += d.bw_s * k;
            a.bw_f += d.bw_f * k;
            a.bq_s += d.bq_s * k;
            a.bq_f += d.bq_f * k;
            a.bw_s_self += d.bw_s_self * k;
            a.w_first += d.w_first * k;
            a.w_drive += d.w_drive * k;
            a.u_s_exact += d.u_s_exact * k;
        }
        Some(a)
    }
}

impl Observer for EnergyLedger {
    fn observe(&mut self, ctx: &StepContext<'_>) {
        let p = &self.params;
        let d = ctx.deltas.expect("energy ledger needs collision deltas");
        let delta = bipartite_flows(ctx.collider, d);
        let t0 = ctx.time;
        let t1 = p.time(ctx.step + 1);
        let dv = coupling_energy(ctx.atom_after, t1, p) - coupling_energy(ctx.atom_before, t0, p);
        let f = flows_from_bloch(ctx.atom_before, t0, p);
        let dw = f.w * p.dt;
        let dq = f.q * p.dt;
        let dw_self = f.w_self * p.dt;
        let residual = delta.bw_s + delta.bw_f + delta.bq_s + delta.bq_f + dv;
        self.max_residual_rate = self.max_residual_rate.max(residual.abs() / p.dt);
        let w0 = p.omega0;
        let t = &mut self.totals;
        t.u_s += delta.u_s / w0;
        t.u_f += delta.u_f / w0;
        t.v += dv / w0;
        t.w += dw / w0;
        t.q += dq / w0;
        t.bw_s += delta.bw_s / w0;
        t.bw_f += delta.bw_f / w0;
        t.bq_s += delta.bq_s / w0;
        t.bq_f += delta.bq_f / w0;
        t.w_self += dw_self / w0;
        t.bw_s_self += delta.bw_s_self / w0;
        t.w_drive += delta.w_drive / w0;
        t.q_drive += (delta.u_s - delta.w_drive) / w0;
        t.residual += residual / w0;
        self.steps.push(LedgerStep {
            t: t0,
            delta,
            dv,
            dw,
            dq,
            dw_self,
            residual,
        });
    }

    fn columns(&self) -> Vec<String> {
        [
            "s_param",
            "U_S",
            "U_f",
            "V",
            "W",
            "Q",
            "bW_S",
            "bW_f",
            "bQ_S",
            "bQ_f",
            "W_self",
            "balance_residual",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn sample(&self) -> Vec<f64> {
        let t = &self.totals;
        vec![
            self.params.saturation(),
            t.u_s,
            t.u_f,
            t.v,
            t.w,
            t.q,
            t.bw_s,
            t.bw_f,
            t.bq_s,
            t.bq_f,
            t.w_self,
            t.residual,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{atom_from_bloch, excited, ground};
    use crate::obe::{steady_state_closed_form, Liouvillian};

    fn params(rabi: f64, det: f64, nbar: f64) -> ModelParams {
        ModelParams::scaled(rabi, det, nbar, 1e-3)
    }

    #[test]
    fn ground_vacuum_no_flows() {
        let p = params(0.0, 0.0, 0.0);
        let c = Collider::new(&p).unwrap();
        let col = c.collide(&ground(), &c.unit(0), 0, true).unwrap();
        let d = bipartite_flows(&c, col.deltas.as_ref().unwrap());
        for v in [d.u_s, d.u_f, d.bw_s, d.bw_f, d.bq_s, d.bq_f] {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn plus_state_pure_self_work() {
        let p = params(0.0, 0.0, 0.0);
        let c = Collider::new(&p).unwrap();
        let plus = atom_from_bloch(1.0, 0.0, 0.0);
        let col = c.collide(&plus, &c.unit(0), 0, true).unwrap();
        let d = bipartite_flows(&c, col.deltas.as_ref().unwrap());
        let g = p.gamma_dt();
        assert!((d.bw_s / p.dt + p.gamma * p.omega0 / 4.0).abs() * p.dt < 5.0 * g.powf(1.5));
        assert!((d.bw_s - d.bw_s_self).abs() < 1e-18);
    }

    #[test]
    fn increments_match_closed_forms() {
        let p = params(1.4, 0.8, 0.2);
        let c = Collider::new(&p).unwrap();
        let s = atom_from_bloch(0.3, -0.4, 0.1);
        let n = 33;
        let t = p.time(n);
        let col = c.collide(&s, &c.unit(n), n, true).unwrap();
        let d = bipartite_flows(&c, col.deltas.as_ref().unwrap());
        let f = flows_from_bloch(&s, t, &p);
        let tol = 5.0 * p.gamma_dt().powf(1.5) * p.omega0;
        assert!((d.u_s - f.u_s * p.dt).abs() < tol);
        assert!((d.bw_s - f.bw_s * p.dt).abs() < tol);
        assert!((d.bq_s - f.bq_s * p.dt).abs() < tol);
        assert!((d.bw_s_self - f.bw_s_self * p.dt).abs() < tol);
        assert!((d.u_s_exact - f.u_s * p.dt).abs() < tol);
    }

    #[test]
    fn stationary_flows_vanish() {
        let p = params(1.1, 0.6, 0.3);
        let ss = steady_state_closed_form(&p);
        let f = flows_from_bloch(&ss, 0.0, &p);
        let scale = p.gamma * p.omega0;
        assert!(f.u_s.abs() < 1e-10 * scale);
        assert!(f.u_f.abs() < 1e-10 * scale);
        assert!(f.v.abs() < 1e-10 * scale);
        assert!((f.bw_s + p.omega0 / p.omega_l * f.bw_f).abs() < 1e-10 * scale);
        assert!((f.w_self - p.omega_l / p.omega0 * f.bw_s_self).abs() < 1e-12 * scale);
    }

    #[test]
    fn first_law_standard() {
        let p = params(0.9, -0.4, 0.1);
        for (x, y, z) in [(0.1, 0.2, 0.3), (-0.5, 0.5, 0.0), (0.0, 0.0, -1.0)] {
            let s = atom_from_bloch(x, y, z);
            let (w, q, u) = standard_flows(&s, 7.0, &p);
            assert!((u - w - q).abs() < 1e-12 * p.gamma);
        }
        let p0 = params(0.0, 0.0, 0.2);
        assert_eq!(standard_flows(&excited(), 1.0, &p0).0, 0.0);
    }

    #[test]
    fn resonant_heat_difference_is_self_work() {
        let p = ModelParams::resonant_at_saturation(1.0, 0.3, 1e-3);
        let ss = steady_state_closed_form(&p);
        let f = flows_from_bloch(&ss, 0.0, &p);
        assert!((-f.bq_s + f.q - f.bw_s_self).abs() < 1e-14);
        assert!((f.bq_f + f.q - f.bw_s_self).abs() < 1e-14);
        assert!((f.w_self - f.bw_s_self).abs() < 1e-16);
    }

    #[test]
    fn saturation_examples() {
        assert_eq!(saturation(&params(0.0, 0.0, 0.3)), 0.0);
        let n = 0.4;
        let g = crate::model::DEFAULT_GAMMA;
        let p = params((2.0 * n + 1.0) / 2f64.sqrt(), 0.0, n);
        assert!((saturation(&p) - 1.0).abs() < 1e-12);
        let q = ModelParams {
            gamma: 1.0,
            rabi: 1.0,
            omega0: 1.0,
            omega_l: 1.0,
            nbar: 0.0,
            dt: 1e-3,
            fock_dim: 12,
            hbar: 1.0,
        };
        assert!((saturation(&q) - 2.0).abs() < 1e-15);
        assert!(g > 0.0);
    }

    #[test]
    fn steady_curves() {
        assert_eq!(steady_bwork(0.0, 0.3), 0.0);
        assert!((steady_bwork(1.0, 0.0) - 0.125).abs() < 1e-15);
        assert!((steady_bwork(1e9, 0.7) - 0.5).abs() < 1e-8);
        assert!((steady_selfwork(1.0, 0.0) + 0.125).abs() < 1e-15);
        assert!((steady_selfwork(1.0, 0.5) + 1.0 / 32.0).abs() < 1e-15);
        assert!((steady_selfwork(1.0, 2.0) + 0.005).abs() < 1e-15);
        assert!(steady_selfwork(1e9, 0.0).abs() < 1e-8);
        // s = 1 is the minimum.
        for s in [0.5, 0.9, 1.1, 2.0] {
            assert!(steady_selfwork(s, 0.5) > steady_selfwork(1.0, 0.5));
        }
    }

    #[test]
    fn curves_match_closed_form_steady_state() {
        for (sat, n) in [(0.25, 0.0), (1.0, 0.2), (4.0, 0.5)] {
            let p = ModelParams::resonant_at_saturation(sat, n, 1e-3);
            let f = flows_from_bloch(&steady_state_closed_form(&p), 0.0, &p);
            let unit = p.gamma * p.omega0;
            assert!((f.bw_s / unit - steady_bwork(sat, n)).abs() < 1e-12);
            assert!((f.bw_s_self / unit - steady_selfwork(sat, n)).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_energy_rate_matches_finite_difference() {
        let p = params(1.5, 1.2, 0.1);
        let l = Liouvillian::new(&p);
        let h = 1e-3 / p.gamma;
        let traj = l.integrate(&excited(), 3.0 / p.gamma, h).unwrap();
        for k in (100..traj.len() - 1).step_by(400) {
            // Rotating-frame states; convert to interaction picture first.
            let si = |j: usize| crate::model::rotating_to_interaction(&traj[j].1, traj[j].0, &p);
            let fd = (coupling_energy(&si(k + 1), traj[k + 1].0, &p) - coupling_energy(&si(k - 1), traj[k - 1].0, &p))
                / (2.0 * h);
            let an = flows_from_bloch(&si(k), traj[k].0, &p).v;
            assert!((fd - an).abs() < 1e-6 * p.gamma * p.rabi, "{fd} vs {an}");
        }
        assert_eq!(coupling_energy(&excited(), 0.0, &params(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn ledger_identities_along_run() {
        let p = params(1.0, 1.0, 0.2);
        let c = Collider::new(&p).unwrap();
        let mut ledger = EnergyLedger::new(&p);
        c.run_trajectory(&excited(), 300, &mut [&mut ledger], 100).unwrap();
        let bound = 10.0 * p.gamma_dt().powf(1.5) * p.gamma * p.omega0;
        assert!(ledger.max_residual_rate <= bound);
        for s in &ledger.steps {
            let d = s.delta;
            assert!((d.u_s - d.bw_s - d.bq_s).abs() < 1e-12);
            assert!((d.u_f - d.bw_f - d.bq_f).abs() < 1e-12);
        }
    }
}
