//! Entropy production.
//!
//! Σ = ΔS_S − βQ is the textbook Clausius form with the unit mean acting as
//! a work source. bΣ = ΔS_S + β·bQ_f replaces the heat received by the
//! atom with the correlation heat deposited in the field, which amounts to
//! taking the atom-displaced thermal state as the field reference. Both
//! are evaluated from the collision increments recorded by the energy
//! ledger, so Σ − bΣ = −β·Σ Tr{H_S Δρ^(2,f)} holds step by step.

use crate::collider::{Collider, TrajectoryRecord};
use crate::densemath::{eigh, expectation, kron, matexp, partial_trace, CplxMatrix, Keep, C64, I};
use crate::energetics::EnergyLedger;
use crate::error::{Error, Result};
use crate::model::{displacement, fock_ops, qubit_ops, sigma_minus_mean, thermal_state, unit_amplitude, ModelParams};

/// Largest unit dimension accepted by the small-instance oracle.
pub const SMALL_INSTANCE_MAX_DIM: usize = 5;

/// Per-step decrease of Σ or bΣ tolerated before it is counted.
pub const FLOW_TOL: f64 = 1e-9;

/// Eigenvalues below this are treated as zero in entropies.
const EIG_FLOOR: f64 = 1e-15;

/// −Σ λ ln λ with 0 ln 0 = 0.
pub fn von_neumann(rho: &CplxMatrix) -> f64 {
    let (vals, _) = eigh(rho);
    vals.iter().filter(|&&l| l > EIG_FLOOR).map(|&l| -l * l.ln()).sum()
}

/// −p ln p − (1−p) ln(1−p).
pub fn binary_entropy(p: f64) -> f64 {
    let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// D(ρ‖σ) = Tr ρ(ln ρ − ln σ); +∞ when ρ has weight outside supp σ.
pub fn relative_entropy(rho: &CplxMatrix, sigma: &CplxMatrix) -> Result<f64> {
    if rho.dims() != sigma.dims() || !rho.is_square() {
        return Err(Error::Dimension(format!(
            "relative entropy of {:?} and {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    let (vals, vecs) = eigh(sigma);
    let n = rho.rows();
    let mut cross = 0.0;
    for (k, &l) in vals.iter().enumerate() {
        let w: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (vecs[(i, k)].conj() * rho[(i, j)] * vecs[(j, k)]).re)
            .sum();
        if l > EIG_FLOOR {
            cross += w * l.ln();
        } else if w > 1e-12 {
            return Ok(f64::INFINITY);
        }
    }
    Ok((-von_neumann(rho) - cross).max(0.0))
}

/// ΔS + β·h where `h` is the heat term entering with a plus sign.
///
/// At β = ∞ the value is +∞ if h > 0, −∞ if h < 0, and ΔS if h = 0.
fn clausius(ds: f64, beta: f64, h: f64) -> f64 {
    if beta.is_finite() {
        ds + beta * h
    } else if h == 0.0 {
        ds
    } else if h > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

/// Entropic accounting of one trajectory.
#[derive(Clone, Debug)]
pub struct EntropyReport {
    pub t: Vec<f64>,
    /// S(ρ_S(t)) − S(ρ_S(0)).
    pub ds_s: Vec<f64>,
    pub sigma: Vec<f64>,
    pub bsigma: Vec<f64>,
    /// −β·∫Ẇ_self from the collision increments.
    pub selfwork_term: Vec<f64>,
    /// −β·∫Ẇ_self from the closed-form rate (left Riemann sum).
    pub selfwork_term_closed: Vec<f64>,
    pub beta: f64,
    pub displacement_record: Vec<C64>,
    /// Steps where Σ decreased by more than FLOW_TOL.
    pub sigma_flow_violations: usize,
    /// Steps where bΣ decreased by more than FLOW_TOL.
    pub bsigma_flow_violations: usize,
}

fn check_lengths(traj: &TrajectoryRecord, ledger: &EnergyLedger) -> Result<()> {
    if ledger.steps.len() != traj.n_steps() {
        return Err(Error::Dimension(format!(
            "ledger has {} steps, trajectory {}",
            ledger.steps.len(),
            traj.n_steps()
        )));
    }
    Ok(())
}

fn entropy_changes(traj: &TrajectoryRecord) -> Vec<f64> {
    let s0 = von_neumann(&traj.states[0]);
    traj.states.iter().map(|s| von_neumann(s) - s0).collect()
}

/// Σ(t_n) = ΔS_S − βQ with Q = Σ (ΔU_S − w_drive) from the ledger.
pub fn sigma_standard(traj: &TrajectoryRecord, ledger: &EnergyLedger) -> Result<Vec<f64>> {
    check_lengths(traj, ledger)?;
    let beta = traj.params.beta();
    let ds = entropy_changes(traj);
    let mut q = 0.0;
    let mut out = vec![clausius(ds[0], beta, 0.0)];
    for (n, st) in ledger.steps.iter().enumerate() {
        q += st.delta.u_s - st.delta.w_drive;
        out.push(clausius(ds[n + 1], beta, -q));
    }
    Ok(out)
}

/// bΣ(t_n) = ΔS_S + β·bQ_f with bQ_f accumulated from the ledger.
pub fn sigma_bipartite(traj: &TrajectoryRecord, ledger: &EnergyLedger) -> Result<Vec<f64>> {
    check_lengths(traj, ledger)?;
    let beta = traj.params.beta();
    let ds = entropy_changes(traj);
    let mut bq_f = 0.0;
    let mut out = vec![clausius(ds[0], beta, 0.0)];
    for (n, st) in ledger.steps.iter().enumerate() {
        bq_f += st.delta.bq_f;
        out.push(clausius(ds[n + 1], beta, bq_f));
    }
    Ok(out)
}

/// φ_n = −√(γΔt)⟨σ₋⟩ at the start of every collision.
pub fn displacement_record(traj: &TrajectoryRecord) -> Vec<C64> {
    let g = traj.params.gamma_dt().sqrt();
    let n = traj.n_steps();
    traj.states[..n].iter().map(|s| -sigma_minus_mean(s) * g).collect()
}

impl EntropyReport {
    pub fn from_run(traj: &TrajectoryRecord, ledger: &EnergyLedger) -> Result<Self> {
        let sigma = sigma_standard(traj, ledger)?;
        let bsigma = sigma_bipartite(traj, ledger)?;
        let beta = traj.params.beta();
        let ds_s = entropy_changes(traj);
        let mut selfwork_term = vec![0.0];
        let mut selfwork_term_closed = vec![0.0];
        let (mut a, mut b) = (0.0, 0.0);
        for st in &ledger.steps {
            a += st.delta.bw_s_self;
            b += st.dw_self;
            selfwork_term.push(clausius(0.0, beta, -a));
            selfwork_term_closed.push(clausius(0.0, beta, -b));
        }
        let drops = |v: &[f64]| {
            v.windows(2)
                .filter(|w| w[0].is_finite() && w[1].is_finite() && w[1] - w[0] < -FLOW_TOL)
                .count()
        };
        Ok(EntropyReport {
            t: (0..=traj.n_steps()).map(|n| traj.time(n)).collect(),
            sigma_flow_violations: drops(&sigma),
            bsigma_flow_violations: drops(&bsigma),
            ds_s,
            sigma,
            bsigma,
            selfwork_term,
            selfwork_term_closed,
            beta,
            displacement_record: displacement_record(traj),
        })
    }

    /// Largest |Σ − bΣ − (−β∫Ẇ_self)| over the run.
    pub fn tightening_gap(&self) -> f64 {
        self.sigma
            .iter()
            .zip(&self.bsigma)
            .zip(&self.selfwork_term)
            .map(|((s, b), w)| (s - b - w).abs())
            .fold(0.0, f64::max)
    }

    pub fn final_sigma(&self) -> f64 {
        *self.sigma.last().expect("non-empty report")
    }

    pub fn final_bsigma(&self) -> f64 {
        *self.bsigma.last().expect("non-empty report")
    }

    /// CSV with columns t, dS_S, Sigma, bSigma, Sigma_minus_bSigma.
    pub fn to_csv(&self, stride: usize) -> String {
        let mut out = String::from("t,dS_S,Sigma,bSigma,Sigma_minus_bSigma\n");
        let stride = stride.max(1);
        let last = self.t.len() - 1;
        for n in (0..self.t.len()).filter(|&n| n % stride == 0 || n == last) {
            out.push_str(&format!(
                "{:.10e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
                self.t[n],
                self.ds_s[n],
                self.sigma[n],
                self.bsigma[n],
                self.sigma[n] - self.bsigma[n]
            ));
        }
        out
    }
}

/// Relative-entropy and Clausius values after a few exact collisions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SmallInstance {
    pub n_collisions: usize,
    /// D(ρ‖ρ_S ⊗ τ^{⊗N}) in the frame where the units start thermal.
    pub sigma_re: f64,
    /// D(ρ‖ρ_S ⊗ ⊗_n D(φ_n) τ D(φ_n)†).
    pub bsigma_re: f64,
    /// ΔS_S − βQ from the collision ledger.
    pub sigma_clausius: f64,
    /// ΔS_S + β·bQ_f from the collision ledger.
    pub bsigma_clausius: f64,
    /// Atom–field mutual information.
    pub mutual_information: f64,
    /// ΔS_S + βΔ⟨H_f⟩ in the thermal frame; equals sigma_re exactly.
    pub sigma_energy_form: f64,
}

/// Swaps the tensor factors k and l of a product space with dimensions `dims`.
fn swap_factors(dims: &[usize], k: usize, l: usize) -> CplxMatrix {
    let total: usize = dims.iter().product();
    let mut perm = CplxMatrix::zeros(total, total);
    let digits = |mut i: usize| {
        let mut d = vec![0; dims.len()];
        for f in (0..dims.len()).rev() {
            d[f] = i % dims[f];
            i /= dims[f];
        }
        d
    };
    let index = |d: &[usize]| d.iter().zip(dims).fold(0, |acc, (x, n)| acc * n + x);
    for i in 0..total {
        let mut d = digits(i);
        d.swap(k, l);
        perm[(index(&d), i)] = C64::new(1.0, 0.0);
    }
    perm
}

/// Exact joint evolution of the atom with `n_collisions` units of dimension
/// `d_small`, compared with the Clausius forms.
///
/// The joint state is propagated in the frame where each unit starts in
/// the thermal state τ and the unit mean appears as the drive i√(γΔt)(α σ₊ −
/// α* σ₋). The Clausius values come from a collider run at the same
/// truncation.
pub fn small_instance_relative_entropy(
    p: &ModelParams,
    s0: &CplxMatrix,
    d_small: usize,
    n_collisions: usize,
) -> Result<SmallInstance> {
    if d_small > SMALL_INSTANCE_MAX_DIM {
        return Err(Error::MemoryGuard {
            dim: d_small,
            limit: SMALL_INSTANCE_MAX_DIM,
        });
    }
    if n_collisions > 2 {
        return Err(Error::MemoryGuard {
            dim: 2 * d_small.pow(n_collisions as u32),
            limit: 2 * SMALL_INSTANCE_MAX_DIM.pow(2),
        });
    }
    if p.nbar <= 0.0 {
        return Err(Error::Config("the relative-entropy oracle needs n̄ > 0".into()));
    }
    if n_collisions == 0 {
        return Ok(SmallInstance::default());
    }
    let beta = p.beta();
    let d = d_small;
    let n = n_collisions;
    let q = qubit_ops(p.omega0);
    let f = fock_ops(d);
    let g = p.gamma_dt().sqrt();
    let tau = thermal_state(p.nbar, d).rho;
    let mut dims = vec![2];
    dims.extend(std::iter::repeat_n(d, n));
    let field_dim = d.pow(n as u32);

    let mut v = kron(&q.sigma_plus, &f.b);
    v -= &kron(&q.sigma_minus, &f.b.adjoint());
    let v = v.scale(C64::new(0.0, g));

    let mut rho = s0.clone();
    for _ in 0..n {
        rho = kron(&rho, &tau);
    }
    let mut atoms = vec![s0.clone()];
    let mut phis = Vec::with_capacity(n);
    for k in 0..n {
        let s_k = partial_trace(&rho, (2, field_dim), Keep::A)?;
        phis.push(-sigma_minus_mean(&s_k) * g);
        let alpha = unit_amplitude(k, p);
        let mut drive = q.sigma_plus.scale(alpha);
        drive.axpy(-alpha.conj(), &q.sigma_minus);
        let gen = &v + &kron(&drive.scale(C64::new(0.0, g)), &CplxMatrix::identity(d));
        let u = matexp(&gen.scale(-I));
        let rest = d.pow((n - 1) as u32);
        let mut full = kron(&u, &CplxMatrix::identity(rest));
        if k > 0 {
            let sw = swap_factors(&dims, 1, k + 1);
            full = sw.matmul(&full).matmul(&sw);
        }
        rho = full.matmul(&rho).matmul(&full.adjoint());
        atoms.push(partial_trace(&rho, (2, field_dim), Keep::A)?);
    }
    let s_t = atoms.last().expect("at least one collision");
    let ds = von_neumann(s_t) - von_neumann(s0);

    let mut thermal_ref = CplxMatrix::identity(1);
    let mut displaced_ref = CplxMatrix::identity(1);
    for phi in &phis {
        thermal_ref = kron(&thermal_ref, &tau);
        let dm = displacement(*phi, d)?;
        displaced_ref = kron(&displaced_ref, &dm.matmul(&tau).matmul(&dm.adjoint()));
    }
    let sigma_re = relative_entropy(&rho, &kron(s_t, &thermal_ref))?;
    let bsigma_re = relative_entropy(&rho, &kron(s_t, &displaced_ref))?;
    let rho_f = partial_trace(&rho, (2, field_dim), Keep::B)?;
    let mutual_information = von_neumann(s_t) + von_neumann(&rho_f) - von_neumann(&rho);

    let mut h_f = CplxMatrix::zeros(field_dim, field_dim);
    for k in 0..n {
        let mut term = CplxMatrix::identity(1);
        for j in 0..n {
            let factor = if j == k {
                f.number.scale_real(p.omega0)
            } else {
                CplxMatrix::identity(d)
            };
            term = kron(&term, &factor);
        }
        h_f += &term;
    }
    let e_f0 = expectation(&h_f, &thermal_ref).re;
    let sigma_energy_form = ds + beta * (expectation(&h_f, &rho_f).re - e_f0);

    let collider = Collider::with_fock_dim(p, d)?;
    let mut s = s0.clone();
    let (mut heat, mut bq_f) = (0.0, 0.0);
    let hs = collider.h_s_joint();
    let hf = collider.h_f_joint();
    for k in 0..n {
        let c = collider.collide(&s, &collider.unit(k), k, true)?;
        let dl = c.deltas.expect("deltas requested");
        let du = crate::collider::trace_against(&hs, &dl.dyson());
        let w = crate::collider::trace_against(&hs, &dl.d1) + crate::collider::trace_against(&hs, &dl.d2s);
        heat += du - w;
        bq_f += crate::collider::trace_against(&hf, &dl.dchi);
        s = collider.atom_of(&c.post.rho);
    }
    let ds_coll = von_neumann(&s) - von_neumann(s0);
    Ok(SmallInstance {
        n_collisions: n,
        sigma_re,
        bsigma_re,
        sigma_clausius: ds_coll - beta * heat,
        bsigma_clausius: ds_coll + beta * bq_f,
        mutual_information,
        sigma_energy_form,
    })
}

/// Ẇ_self/(γω₀) = −((x² + y²) + εyz)/4 at resonance, ε = Ω/ω₀.
pub fn selfwork_rate_bloch(x: f64, y: f64, z: f64, eps: f64) -> f64 {
    -0.25 * (x * x + y * y + eps * y * z)
}

/// Supremum of Ẇ_self/(γω₀) over the Bloch ball: (√(1+ε²) − 1)/8.
pub fn selfwork_bound(eps: f64) -> f64 {
    ((1.0 + eps * eps).sqrt() - 1.0) / 8.0
}

/// Lattice scan of the self-work rate over the Bloch ball.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfWorkProbe {
    pub epsilon: f64,
    pub points: usize,
    /// Largest Ẇ_self/(γω₀) found.
    pub max_rate: f64,
    pub argmax: [f64; 3],
    /// Fraction of lattice points with Ẇ_self > 0.
    pub positive_fraction: f64,
    pub bound: f64,
}

/// Scans a cubic lattice with `per_axis` points per axis clipped to the ball.
pub fn selfwork_probe_eps(eps: f64, per_axis: usize) -> SelfWorkProbe {
    let m = per_axis.max(2);
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / (m - 1) as f64;
    let mut points = 0;
    let mut positive = 0;
    let mut best = f64::NEG_INFINITY;
    let mut argmax = [0.0; 3];
    for i in 0..m {
        let x = coord(i);
        for j in 0..m {
            let y = coord(j);
            for k in 0..m {
                let z = coord(k);
                if x * x + y * y + z * z > 1.0 + 1e-12 {
                    continue;
                }
                points += 1;
                let w = selfwork_rate_bloch(x, y, z, eps);
                if w > 0.0 {
                    positive += 1;
                }
                if w > best {
                    best = w;
                    argmax = [x, y, z];
                }
            }
        }
    }
    SelfWorkProbe {
        epsilon: eps,
        points,
        max_rate: best,
        argmax,
        positive_fraction: positive as f64 / points as f64,
        bound: selfwork_bound(eps),
    }
}

/// Self-work sign probe at resonance with ε = Ω/ω₀ and a 41³ lattice.
pub fn selfwork_sign_probe(p: &ModelParams) -> Result<SelfWorkProbe> {
    if p.delta() != 0.0 {
        return Err(Error::Config("the self-work probe assumes resonant driving".into()));
    }
    Ok(selfwork_probe_eps(p.rabi / p.omega0, 41))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energetics::flows_from_bloch;
    use crate::model::{atom_from_bloch, excited, ground, thermal_qubit};

    #[test]
    fn entropies_of_simple_states() {
        assert!(von_neumann(&excited()).abs() < 1e-14);
        let mixed = CplxMatrix::identity(2).scale_real(0.5);
        assert!((von_neumann(&mixed) - 2f64.ln()).abs() < 1e-14);
        // p_e = n̄/(2n̄+1) = 1/4 at n̄ = 0.5.
        let h = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((von_neumann(&thermal_qubit(0.5)) - h).abs() < 1e-13);
        assert!((binary_entropy(0.25) - 0.562_335_144_618_808_3).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_basics() {
        let a = atom_from_bloch(0.3, -0.2, 0.5);
        let b = atom_from_bloch(-0.1, 0.4, -0.2);
        assert!(relative_entropy(&a, &a).unwrap().abs() < 1e-12);
        assert!(relative_entropy(&a, &b).unwrap() > 0.0);
        assert_eq!(relative_entropy(&b, &excited()).unwrap(), f64::INFINITY);
        // Diagonal oracle: p ln(p/q) + (1−p) ln((1−p)/(1−q)).
        let (pp, qq) = (0.3, 0.6);
        let rp = CplxMatrix::diag_real(&[pp, 1.0 - pp]);
        let rq = CplxMatrix::diag_real(&[qq, 1.0 - qq]);
        let expect = pp * (pp / qq).ln() + (1.0 - pp) * ((1.0 - pp) / (1.0 - qq)).ln();
        assert!((relative_entropy(&rp, &rq).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn clausius_sentinel() {
        assert_eq!(clausius(0.1, f64::INFINITY, 0.0), 0.1);
        assert_eq!(clausius(0.1, f64::INFINITY, 1e-9), f64::INFINITY);
        assert_eq!(clausius(0.1, 2.0, 0.5), 1.1);
    }

    #[test]
    fn selfwork_formula_matches_closed_flows() {
        let p = ModelParams::resonant_at_saturation(2.0, 0.3, 1e-3);
        let eps = p.rabi / p.omega0;
        for &(x, y, z) in &[(0.3, -0.4, 0.2), (0.0, 0.5, -0.6), (-0.7, 0.1, 0.1)] {
            let s = atom_from_bloch(x, y, z);
            let f = flows_from_bloch(&s, 0.0, &p);
            let w = f.w_self / (p.gamma * p.omega0);
            assert!((w - selfwork_rate_bloch(x, y, z, eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn selfwork_bound_is_attained_off_lattice() {
        for &eps in &[0.1, 0.01] {
            // Top eigenvector of −[[1, ε/2], [ε/2, 0]] in the (y, z) plane.
            let l = selfwork_bound(eps) * 4.0;
            let (y, z) = (-(eps / 2.0), 1.0 + l);
            let nrm = (y * y + z * z).sqrt();
            let w = selfwork_rate_bloch(0.0, y / nrm, z / nrm, eps);
            assert!((w - selfwork_bound(eps)).abs() < 1e-15);
        }
        assert!((selfwork_bound(0.01) - 6.249_843_757_8e-6).abs() < 1e-15);
    }

    #[test]
    fn probe_without_drive_is_nonpositive() {
        let r = selfwork_probe_eps(0.0, 21);
        assert_eq!(r.max_rate, 0.0);
        assert_eq!(r.argmax[0], 0.0);
        assert_eq!(r.argmax[1], 0.0);
        assert_eq!(r.positive_fraction, 0.0);
        assert!(r.points > 4000);
    }

    #[test]
    fn swap_factor_permutation() {
        let a = atom_from_bloch(0.1, 0.2, 0.3);
        let b = thermal_state(0.4, 3).rho;
        let c = crate::model::displaced_thermal(C64::new(0.2, 0.1), 0.1, 3).unwrap().rho;
        let sw = swap_factors(&[2, 3, 3], 1, 2);
        let lhs = sw.matmul(&kron(&kron(&a, &b), &c)).matmul(&sw);
        let rhs = kron(&kron(&a, &c), &b);
        assert!((&lhs - &rhs).max_abs() < 1e-15);
    }

    #[test]
    fn small_instance_identities() {
        let p = ModelParams::resonant_at_saturation(1.0, 0.2, 0.02);
        let r0 = small_instance_relative_entropy(&p, &ground(), 4, 0).unwrap();
        assert_eq!(r0.sigma_re, 0.0);
        let r = small_instance_relative_entropy(&p, &ground(), 4, 2).unwrap();
        assert!(r.sigma_re >= 0.0 && r.bsigma_re >= 0.0);
        assert!((r.sigma_re - r.sigma_energy_form).abs() < 1e-10);
        assert!(r.mutual_information >= -1e-12 && r.mutual_information <= r.sigma_re + 1e-12);
        assert!(matches!(
            small_instance_relative_entropy(&p, &ground(), 6, 2),
            Err(Error::MemoryGuard { .. })
        ));
    }
}
