//! Collision engine.
//!
//! Each step couples the atom to a fresh displaced-thermal unit through
//! V = i√(γΔt)(b σ₊ − b† σ₋) and applies U = exp(−iV) exactly. On request
//! the step also returns the second-order splitting of the joint change
//! into mean-field (product) and correlation pieces.

use crate::densemath::{expectation, kron, matexp, partial_trace, CplxMatrix, Keep, Tolerances, C64, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::model::{
    auto_fock_dim, fock_ops, fresh_unit, qubit_ops, FockOps, ModelParams, QubitOps, UnitState, DEFAULT_LEAK_TOL,
};

/// Joint atom ⊗ unit state at the start or end of a collision.
#[derive(Clone, Debug)]
pub struct JointState {
    pub rho: CplxMatrix,
    pub step: usize,
    pub time: f64,
}

/// The pieces of one collision's joint-state change.
#[derive(Clone, Debug)]
pub struct CollisionDeltas {
    /// −i[V, ρ].
    pub d1: CplxMatrix,
    /// −i[⟨V⟩_f ⊗ I, ρ]: atom driven by the unit mean.
    pub d1_s: CplxMatrix,
    /// −i[I ⊗ ⟨V⟩_S, ρ]: unit driven by the atom mean.
    pub d1_f: CplxMatrix,
    /// First-order correlation change −i[V − ⟨V⟩_f − ⟨V⟩_S, ρ].
    pub dchi1: CplxMatrix,
    /// −½[V, [⟨V⟩_f ⊗ I, ρ]].
    pub d2s: CplxMatrix,
    /// −½[V, [I ⊗ ⟨V⟩_S, ρ]].
    pub d2f: CplxMatrix,
    /// −½[V, [V − ⟨V⟩_f − ⟨V⟩_S, ρ]].
    pub d2chi: CplxMatrix,
    /// d1_s + d1_f + d2s + d2f.
    pub dotimes: CplxMatrix,
    /// dchi1 + d2chi.
    pub dchi: CplxMatrix,
    /// UρU† − ρ.
    pub dexact: CplxMatrix,
    /// ⟨V⟩_f (atom operator, equals Δt·H_D(t_n)).
    pub mean_v_f: CplxMatrix,
    /// ⟨V⟩_S (unit operator).
    pub mean_v_s: CplxMatrix,
}

impl CollisionDeltas {
    /// Second-order Dyson change dotimes + dchi.
    pub fn dyson(&self) -> CplxMatrix {
        &self.dotimes + &self.dchi
    }
}

/// Result of one collision.
#[derive(Clone, Debug)]
pub struct Collision {
    pub pre: JointState,
    pub post: JointState,
    pub deltas: Option<CollisionDeltas>,
}

/// Value-type engine for one parameter point.
#[derive(Clone, Debug)]
pub struct Collider {
    pub params: ModelParams,
    pub fock_dim: usize,
    pub v: CplxMatrix,
    pub u: CplxMatrix,
    u_dag: CplxMatrix,
    base_unit: UnitState,
    reduced: CplxMatrix,
    pub qubit: QubitOps,
    pub fock: FockOps,
    pub tol: Tolerances,
}

impl Collider {
    /// Engine with the default leak tolerance.
    pub fn new(p: &ModelParams) -> Result<Self> {
        Self::with_leak_tol(p, DEFAULT_LEAK_TOL)
    }

    /// Engine whose Fock dimension is raised from `p.fock_dim` until the
    /// unit truncation leak is below `leak_tol`.
    pub fn with_leak_tol(p: &ModelParams, leak_tol: f64) -> Result<Self> {
        p.validate()?;
        let d = auto_fock_dim(p, leak_tol)?;
        Self::build(p, d)
    }

    /// Engine at exactly `d` Fock levels, without leak-driven raising.
    pub fn with_fock_dim(p: &ModelParams, d: usize) -> Result<Self> {
        p.validate()?;
        if d < 2 {
            return Err(Error::Config(format!("Fock dimension {d} below 2")));
        }
        Self::build(p, d)
    }

    fn build(p: &ModelParams, d: usize) -> Result<Self> {
        let v = build_vn(p, d);
        let u = sparsify(&matexp(&v.scale(-I)), 1e-300);
        let u_dag = u.adjoint();
        let base_unit = fresh_unit(0, p, d)?;
        let mut c = Collider {
            params: p.clone(),
            fock_dim: d,
            v,
            u,
            u_dag,
            base_unit,
            reduced: CplxMatrix::zeros(4, 4),
            qubit: qubit_ops(p.omega0),
            fock: fock_ops(d),
            tol: Tolerances::default(),
        };
        c.reduced = c.build_reduced_map();
        Ok(c)
    }

    /// Atom map of the step-0 collision as a 4×4 superoperator on
    /// column-stacked 2×2 operators.
    fn build_reduced_map(&self) -> CplxMatrix {
        let mut m = CplxMatrix::zeros(4, 4);
        for j in 0..2 {
            for i in 0..2 {
                let e = CplxMatrix::from_fn(2, 2, |a, b| if a == i && b == j { ONE } else { ZERO });
                let joint = kron(&e, &self.base_unit.rho);
                let out = self.atom_of(&self.u.matmul(&joint).matmul(&self.u_dag)).vec_cols();
                for (k, z) in out.into_iter().enumerate() {
                    m[(k, i + 2 * j)] = z;
                }
            }
        }
        m
    }

    /// Reduced atom update of step n without building the joint state.
    ///
    /// U commutes with the total excitation number, so the step-n map is
    /// the step-0 map conjugated by the atomic phase diag(e^{iθ}, 1) with
    /// θ = −(ω_L − ω₀)t_n.
    pub fn step_atom(&self, s: &CplxMatrix, n: usize) -> CplxMatrix {
        let theta = -self.params.laser_detuning() * self.params.time(n);
        let ph = C64::from_polar(1.0, theta);
        let mut x = s.clone();
        x[(0, 1)] *= ph.conj();
        x[(1, 0)] *= ph;
        let mut y = CplxMatrix::unvec_cols(&self.reduced.apply(&x.vec_cols()), 2, 2);
        y[(0, 1)] *= ph;
        y[(1, 0)] *= ph.conj();
        y
    }

    /// Atom states at t_0 … t_N from the reduced collision map.
    pub fn run_atom(&self, s0: &CplxMatrix, n_steps: usize) -> Result<Vec<CplxMatrix>> {
        check_atom(s0, &self.tol)?;
        let mut out = Vec::with_capacity(n_steps + 1);
        out.push(s0.clone());
        for n in 0..n_steps {
            let next = self.step_atom(&out[n], n);
            check_atom(&next, &self.tol)?;
            out.push(next);
        }
        Ok(out)
    }

    pub fn joint_dim(&self) -> usize {
        2 * self.fock_dim
    }

    /// Fresh unit for step n (phase-rotated copy of the step-0 unit).
    pub fn unit(&self, n: usize) -> UnitState {
        let theta = -self.params.laser_detuning() * self.params.time(n);
        self.base_unit.rotated(theta)
    }

    /// Exact collision of atom state `s` with `unit`; deltas on request.
    pub fn collide(&self, s: &CplxMatrix, unit: &UnitState, step: usize, with_deltas: bool) -> Result<Collision> {
        let rho = kron(s, &unit.rho);
        let post = self.u.matmul(&rho).matmul(&self.u_dag);
        let time = self.params.time(step);
        let deltas = if with_deltas {
            Some(self.deltas(s, unit, &rho, &post))
        } else {
            None
        };
        self.check_joint(&post)?;
        Ok(Collision {
            pre: JointState { rho, step, time },
            post: JointState {
                rho: post,
                step: step + 1,
                time: self.params.time(step + 1),
            },
            deltas,
        })
    }

    fn deltas(&self, s: &CplxMatrix, unit: &UnitState, rho: &CplxMatrix, post: &CplxMatrix) -> CollisionDeltas {
        let d = self.fock_dim;
        let mean_v_f = mean_over_unit(&self.v, &unit.rho, d);
        let mean_v_s = mean_over_atom(&self.v, s, d);
        let w_s = kron(&mean_v_f, &CplxMatrix::identity(d));
        let w_f = kron(&CplxMatrix::identity(2), &mean_v_s);
        let c_v = self.v.commutator(rho);
        let c_s = w_s.commutator(rho);
        let c_f = w_f.commutator(rho);
        let mut c_x = c_v.clone();
        c_x -= &c_s;
        c_x -= &c_f;
        let mi = -I;
        let half = C64::new(-0.5, 0.0);
        let d1 = c_v.scale(mi);
        let d1_s = c_s.scale(mi);
        let d1_f = c_f.scale(mi);
        let dchi1 = c_x.scale(mi);
        let d2s = self.v.commutator(&c_s).scale(half);
        let d2f = self.v.commutator(&c_f).scale(half);
        let d2chi = self.v.commutator(&c_x).scale(half);
        let mut dotimes = &d1_s + &d1_f;
        dotimes += &d2s;
        dotimes += &d2f;
        let dchi = &dchi1 + &d2chi;
        let dexact = post - rho;
        CollisionDeltas {
            d1,
            d1_s,
            d1_f,
            dchi1,
            d2s,
            d2f,
            d2chi,
            dotimes,
            dchi,
            dexact,
            mean_v_f,
            mean_v_s,
        }
    }

    fn check_joint(&self, post: &CplxMatrix) -> Result<()> {
        let tr = post.trace();
        if (tr.re - 1.0).abs() > self.tol.trace || tr.im.abs() > self.tol.trace {
            return Err(Error::NumericalDegradation(format!("joint trace {tr}")));
        }
        let h = post.hermiticity_error();
        if h > self.tol.hermitian {
            return Err(Error::NumericalDegradation(format!("joint hermiticity error {h:.3e}")));
        }
        Ok(())
    }

    /// Reduced atom and output-unit states after colliding with `unit`.
    pub fn step_reduced(&self, s: &CplxMatrix, unit: &UnitState) -> Result<(CplxMatrix, CplxMatrix)> {
        let c = self.collide(s, unit, 0, false)?;
        let atom = self.atom_of(&c.post.rho);
        let out = self.unit_of(&c.post.rho);
        check_atom(&atom, &self.tol)?;
        Ok((atom, out))
    }

    pub fn atom_of(&self, joint: &CplxMatrix) -> CplxMatrix {
        partial_trace(joint, (2, self.fock_dim), Keep::A).expect("joint dimension")
    }

    pub fn unit_of(&self, joint: &CplxMatrix) -> CplxMatrix {
        partial_trace(joint, (2, self.fock_dim), Keep::B).expect("joint dimension")
    }

    /// H_S ⊗ I on the joint space.
    pub fn h_s_joint(&self) -> CplxMatrix {
        kron(&self.qubit.h_s, &CplxMatrix::identity(self.fock_dim))
    }

    /// ω₀ I ⊗ b†b on the joint space.
    pub fn h_f_joint(&self) -> CplxMatrix {
        kron(
            &CplxMatrix::identity(2),
            &self.fock.number.scale_real(self.params.omega0),
        )
    }

    /// I ⊗ b†b on the joint space.
    pub fn number_joint(&self) -> CplxMatrix {
        kron(&CplxMatrix::identity(2), &self.fock.number)
    }

    /// Runs `n_steps` collisions from `s0`, streaming every step to the
    /// observers.
    pub fn run_trajectory(
        &self,
        s0: &CplxMatrix,
        n_steps: usize,
        observers: &mut [&mut dyn Observer],
        record_stride: usize,
    ) -> Result<TrajectoryRecord> {
        check_atom(s0, &self.tol)?;
        let stride = record_stride.max(1);
        let mut rec = TrajectoryRecord {
            params: self.params.clone(),
            fock_dim: self.fock_dim,
            states: Vec::with_capacity(n_steps + 1),
            sample_steps: Vec::new(),
            columns: observers.iter().flat_map(|o| o.columns()).collect(),
            observer_rows: Vec::new(),
        };
        let mut s = s0.clone();
        rec.states.push(s.clone());
        rec.push_sample(0, observers);
        for n in 0..n_steps {
            let unit = self.unit(n);
            let wants = observers.iter().any(|o| o.needs_deltas(n));
            let c = self.collide(&s, &unit, n, wants)?;
            let next = self.atom_of(&c.post.rho);
            check_atom(&next, &self.tol)?;
            if !observers.is_empty() {
                let out_unit = self.unit_of(&c.post.rho);
                let ctx = StepContext {
                    collider: self,
                    step: n,
                    time: c.pre.time,
                    atom_before: &s,
                    atom_after: &next,
                    unit_in: &unit,
                    unit_out: &out_unit,
                    deltas: c.deltas.as_ref(),
                };
                for o in observers.iter_mut() {
                    o.observe(&ctx);
                }
            }
            s = next;
            rec.states.push(s.clone());
            if (n + 1) % stride == 0 || n + 1 == n_steps {
                rec.push_sample(n + 1, observers);
            }
        }
        Ok(rec)
    }
}

/// Information handed to observers after each collision.
pub struct StepContext<'a> {
    pub collider: &'a Collider,
    pub step: usize,
    pub time: f64,
    pub atom_before: &'a CplxMatrix,
    pub atom_after: &'a CplxMatrix,
    pub unit_in: &'a UnitState,
    pub unit_out: &'a CplxMatrix,
    pub deltas: Option<&'a CollisionDeltas>,
}

/// Per-step callback used by ledgers and field observables.
pub trait Observer {
    /// Whether step `n` needs the splitting deltas.
    fn needs_deltas(&self, _step: usize) -> bool {
        true
    }
    fn observe(&mut self, ctx: &StepContext<'_>);
    /// CSV column names contributed by this observer.
    fn columns(&self) -> Vec<String>;
    /// Current values for the trajectory row being recorded.
    fn sample(&self) -> Vec<f64>;
}

/// Time series of one trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub params: ModelParams,
    pub fock_dim: usize,
    /// Interaction-picture atom states at t_0 … t_N.
    pub states: Vec<CplxMatrix>,
    /// Step indices of recorded rows.
    pub sample_steps: Vec<usize>,
    pub columns: Vec<String>,
    pub observer_rows: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    fn push_sample(&mut self, step: usize, observers: &[&mut dyn Observer]) {
        self.sample_steps.push(step);
        self.observer_rows
            .push(observers.iter().flat_map(|o| o.sample()).collect());
    }

    pub fn n_steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn time(&self, n: usize) -> f64 {
        self.params.time(n)
    }

    pub fn final_state(&self) -> &CplxMatrix {
        self.states.last().expect("non-empty trajectory")
    }

    /// Atom state at step n in the frame rotating at ω_L.
    pub fn rotating_state(&self, n: usize) -> CplxMatrix {
        crate::model::interaction_to_rotating(&self.states[n], self.time(n), &self.params)
    }

    /// CSV with columns t, sx, sy, sz (rotating frame) and observer columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("t,sx,sy,sz");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (row, &n) in self.sample_steps.iter().enumerate() {
            let [x, y, z] = crate::model::bloch(&self.rotating_state(n));
            out.push_str(&format!("{:.10e},{:.12e},{:.12e},{:.12e}", self.time(n), x, y, z));
            for v in &self.observer_rows[row] {
                out.push_str(&format!(",{v:.12e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// V_n = i√(γΔt)(b σ₊ − b† σ₋) on atom ⊗ unit.
pub fn build_vn(p: &ModelParams, d: usize) -> CplxMatrix {
    let q = qubit_ops(p.omega0);
    let f = fock_ops(d);
    let g = (p.gamma_dt()).sqrt();
    let mut v = kron(&q.sigma_plus, &f.b);
    v -= &kron(&q.sigma_minus, &f.b.adjoint());
    v.scale(C64::new(0.0, g))
}

/// Tr_f{O (I ⊗ η)} for an operator on atom ⊗ unit.
pub fn mean_over_unit(op: &CplxMatrix, eta: &CplxMatrix, d: usize) -> CplxMatrix {
    CplxMatrix::from_fn(2, 2, |i, j| {
        let mut acc = ZERO;
        for k in 0..d {
            for l in 0..d {
                let o = op[(i * d + k, j * d + l)];
                if o != ZERO {
                    acc += o * eta[(l, k)];
                }
            }
        }
        acc
    })
}

/// Tr_S{O (s ⊗ I)} for an operator on atom ⊗ unit.
pub fn mean_over_atom(op: &CplxMatrix, s: &CplxMatrix, d: usize) -> CplxMatrix {
    CplxMatrix::from_fn(d, d, |k, l| {
        let mut acc = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                acc += op[(i * d + k, j * d + l)] * s[(j, i)];
            }
        }
        acc
    })
}

fn sparsify(m: &CplxMatrix, tol: f64) -> CplxMatrix {
    let mut out = m.clone();
    for z in out.as_mut_slice() {
        if z.norm() <= tol {
            *z = ZERO;
        }
    }
    out
}

/// Closed-form density check for a 2×2 atom state.
pub fn check_atom(s: &CplxMatrix, tol: &Tolerances) -> Result<()> {
    if s.dims() != (2, 2) {
        return Err(Error::Dimension(format!("atom state {:?}", s.dims())));
    }
    let tr = s.trace();
    if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
        return Err(Error::NumericalDegradation(format!("atom trace {tr}")));
    }
    if s.hermiticity_error() > tol.hermitian {
        return Err(Error::NumericalDegradation("atom state not Hermitian".into()));
    }
    let a = s[(0, 0)].re;
    let b = s[(1, 1)].re;
    let det = a * b - s[(0, 1)].norm_sqr();
    let disc = ((a - b) * (a - b) + 4.0 * s[(0, 1)].norm_sqr()).sqrt();
    let lmin = 0.5 * (a + b - disc);
    if lmin < tol.min_eigenvalue || det < tol.min_eigenvalue {
        return Err(Error::NumericalDegradation(format!("atom eigenvalue {lmin:.3e}")));
    }
    Ok(())
}

/// Tr{op · Δ} helper returning the real part.
pub fn trace_against(op: &CplxMatrix, delta: &CplxMatrix) -> f64 {
    expectation(op, delta).re
}

#[cfg(test)]
mod tests {
    use super::*;

    use crate::model::{atom_from_bloch, excited, ground, thermal_state};

    fn params(rabi: f64, det: f64, nbar: f64, gdt: f64) -> ModelParams {
        ModelParams::scaled(rabi, det, nbar, gdt)
    }

    #[test]
    fn vn_structure() {
        let p = params(1.0, 0.0, 0.0, 1e-3);
        let d = 5;
        let v = build_vn(&p, d);
        assert_eq!(v.adjoint(), v);
        // ⟨e,0|V|g,1⟩: |e,0⟩ = index 0, |g,1⟩ = index d + 1.
        let g = p.gamma_dt().sqrt();
        assert!((v[(0, d + 1)] - C64::new(0.0, g)).norm() < 1e-15);
        let q = qubit_ops(1.0);
        let f = fock_ops(d);
        let n_exc = &kron(&q.sigma_plus.matmul(&q.sigma_minus), &CplxMatrix::identity(d))
            + &kron(&CplxMatrix::identity(2), &f.number);
        assert!(v.commutator(&n_exc).max_abs() < 1e-12);
    }

    #[test]
    fn unitary_is_unitary() {
        let p = ModelParams {
            fock_dim: 8,
            ..params(1.0, 0.0, 0.0, 1e-3)
        };
        let c = Collider::new(&p).unwrap();
        let id = CplxMatrix::identity(c.joint_dim());
        assert!((&c.u.adjoint().matmul(&c.u) - &id).max_abs() < 1e-10);
    }

    #[test]
    fn dark_state_is_stationary() {
        let p = params(0.0, 0.0, 0.0, 1e-3);
        let c = Collider::new(&p).unwrap();
        let col = c.collide(&ground(), &c.unit(0), 0, true).unwrap();
        let dl = col.deltas.unwrap();
        for m in [
            &dl.d1,
            &dl.dchi1,
            &dl.d2s,
            &dl.d2f,
            &dl.d2chi,
            &dl.dotimes,
            &dl.dchi,
            &dl.dexact,
        ] {
            assert!(m.max_abs() < 1e-12);
        }
        assert!((&col.post.rho - &col.pre.rho).max_abs() < 1e-12);
    }

    #[test]
    fn excited_decay_one_step() {
        let p = params(0.0, 0.0, 0.0, 1e-3);
        let c = Collider::new(&p).unwrap();
        let col = c.collide(&excited(), &c.unit(0), 0, true).unwrap();
        let dpe = c.atom_of(&col.deltas.unwrap().dexact)[(0, 0)].re;
        let g = p.gamma_dt();
        let oracle = (-g).exp() - 1.0;
        assert!((dpe - oracle).abs() < g * g);
        assert!((dpe + g).abs() < g * g);
    }

    #[test]
    fn plus_state_self_drive_energy() {
        let p = params(0.0, 0.0, 0.0, 1e-3);
        let c = Collider::new(&p).unwrap();
        let plus = atom_from_bloch(1.0, 0.0, 0.0);
        let col = c.collide(&plus, &c.unit(0), 0, true).unwrap();
        let dl = col.deltas.unwrap();
        let e = trace_against(&c.h_s_joint(), &dl.d2f);
        let g = p.gamma_dt();
        assert!((e + g * p.omega0 / 4.0).abs() < 5.0 * g.powf(1.5));
    }

    #[test]
    fn deltas_hermitian_traceless_and_complete() {
        let p = params(2.0, 1.0, 0.2, 1e-3);
        let c = Collider::new(&p).unwrap();
        let s = atom_from_bloch(0.3, -0.5, 0.2);
        let unit = c.unit(17);
        let col = c.collide(&s, &unit, 17, true).unwrap();
        let dl = col.deltas.unwrap();
        for m in [
            &dl.d1,
            &dl.d1_s,
            &dl.d1_f,
            &dl.dchi1,
            &dl.d2s,
            &dl.d2f,
            &dl.d2chi,
            &dl.dotimes,
            &dl.dchi,
            &dl.dexact,
        ] {
            assert!(m.hermiticity_error() < 1e-10);
            assert!(m.trace().norm() < 1e-10);
        }
        let sum = &(&(&dl.d1 + &dl.d2s) + &dl.d2f) + &dl.d2chi;
        assert!((&dl.dyson() - &sum).max_abs() < 1e-12);
        let g = p.gamma_dt();
        assert!((&dl.dexact - &dl.dyson()).max_abs() <= 10.0 * g.powf(1.5));
        // Reduced d2s is second order in Δt.
        let red = c.atom_of(&dl.d2s);
        assert!(red.max_abs() <= 10.0 * (p.rabi * p.dt).powi(2));
        // ⟨V⟩_f = Δt·H_D(t_n).
        let alpha = unit.alpha;
        let expected = CplxMatrix::from_vec(
            2,
            2,
            vec![ZERO, I * alpha * g.sqrt(), I * -alpha.conj() * g.sqrt(), ZERO],
        )
        .unwrap();
        let hd = &dl.mean_v_f - &expected;
        assert!(hd.max_abs() < 1e-6 * p.rabi * p.dt);
    }

    #[test]
    fn product_refresh_and_traces() {
        let p = params(1.0, 0.0, 0.1, 1e-3);
        let c = Collider::new(&p).unwrap();
        let (a, u) = c.step_reduced(&excited(), &c.unit(0)).unwrap();
        assert!((a.trace() - ONE).norm() < 1e-10);
        assert!((u.trace() - ONE).norm() < 1e-10);
        // The next collision starts from a fresh unit, not the output one.
        let fresh = c.unit(1);
        assert!((&fresh.rho - &thermal_state(p.nbar, c.fock_dim).rho).max_abs() > 0.0);
    }

    #[test]
    fn undriven_diagonal_stays_diagonal() {
        let p = params(0.0, 0.0, 0.2, 1e-3);
        let c = Collider::new(&p).unwrap();
        let s0 = atom_from_bloch(0.0, 0.0, 0.4);
        let rec = c.run_trajectory(&s0, 500, &mut [], 100).unwrap();
        for s in &rec.states {
            assert!(s[(0, 1)].norm() < 1e-12);
        }
    }

    #[test]
    fn reduced_map_matches_joint_collision() {
        let p = params(1.5, 2.0, 0.3, 2e-3);
        let c = Collider::new(&p).unwrap();
        let s = atom_from_bloch(0.2, 0.4, -0.3);
        for n in [0, 1, 57, 1000] {
            let (full, _) = c.step_reduced(&s, &c.unit(n)).unwrap();
            assert!((&c.step_atom(&s, n) - &full).max_abs() < 1e-13);
        }
    }

    #[test]
    fn degraded_state_is_rejected() {
        let bad = CplxMatrix::diag_real(&[1.2, -0.2]);
        assert!(check_atom(&bad, &Tolerances::default()).is_err());
    }
}
