//! Field observables: input/output means, photon flows, the elastic weight
//! and the incoherent emission spectrum, and a brute-force two-unit
//! oracle for the spectral splitting.

use rayon::prelude::*;

use crate::collider::{mean_over_unit, trace_against, Collider, CollisionDeltas};
use crate::densemath::{expectation, kron, CplxMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::model::{b_in_mean, bloch, interaction_to_rotating, qubit_ops, sigma_minus_mean, ModelParams};
use crate::obe::{apply_super, Liouvillian};

/// Largest Fock dimension accepted by the two-unit oracle.
pub const TWO_UNIT_MAX_DIM: usize = 6;

/// Mean input and output amplitudes ⟨b_in⟩ and ⟨b_out⟩ = ⟨b_in⟩ − √γ⟨σ₋⟩
/// for an interaction-picture atom state at time t.
pub fn mean_in_out(s: &CplxMatrix, p: &ModelParams, t: f64) -> (C64, C64) {
    let b_in = b_in_mean(p, t);
    (b_in, b_in - sigma_minus_mean(s) * p.gamma.sqrt())
}

/// Photon flows of the scattered field.
///
/// `n_in` counts the coherent input flow Ω²/4γ plus the thermal photons
/// n̄/Δt carried by each unit; only differences are physical.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PhotonFlows {
    pub n_in: f64,
    pub n_out: f64,
    pub n_stim: f64,
    pub n_spont: f64,
    pub n_otimes: f64,
    pub n_chi: f64,
}

/// Photon flows from the atomic averages.
pub fn photon_flows(s: &CplxMatrix, p: &ModelParams, t: f64) -> PhotonFlows {
    let [x, y, z] = bloch(&interaction_to_rotating(s, t, p));
    let g = p.gamma;
    let c2 = 0.25 * (x * x + y * y);
    let n_stim = -0.5 * p.rabi * x;
    let n_spont = g * ((p.nbar + 0.5) * z + 0.5);
    let n_in = 0.25 * p.rabi * p.rabi / g + p.nbar / p.dt;
    PhotonFlows {
        n_in,
        n_out: n_in + n_stim + n_spont,
        n_stim,
        n_spont,
        n_otimes: n_stim + g * c2,
        n_chi: n_spont - g * c2,
    }
}

/// Photon-number changes per unit time read off one collision:
/// (total, product part, correlation part).
pub fn photon_flows_from_deltas(c: &Collider, d: &CollisionDeltas) -> (f64, f64, f64) {
    let n = c.number_joint();
    let dt = c.params.dt;
    (
        trace_against(&n, &d.dexact) / dt,
        trace_against(&n, &d.dotimes) / dt,
        trace_against(&n, &d.dchi) / dt,
    )
}

/// Energy flows expressed through photon flows: atom side weighted by ω₀,
/// field side by ω_L.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldEnergyFlows {
    pub u_s: f64,
    pub u_f: f64,
    pub bw_s: f64,
    pub bw_f: f64,
    pub bq_s: f64,
    pub bq_f: f64,
}

pub fn energy_flow_identities(f: &PhotonFlows, p: &ModelParams) -> FieldEnergyFlows {
    let dn = f.n_out - f.n_in;
    FieldEnergyFlows {
        u_s: -p.omega0 * dn,
        u_f: p.omega_l * dn,
        bw_s: -p.omega0 * f.n_otimes,
        bw_f: p.omega_l * f.n_otimes,
        bq_s: -p.omega0 * f.n_chi,
        bq_f: p.omega_l * f.n_chi,
    }
}

/// Weight of the coherent delta peak at ω_L for a rotating-frame steady
/// state: −[(Ω/2)x − γ|⟨σ₋⟩|²].
pub fn elastic_weight(s_ss: &CplxMatrix, p: &ModelParams) -> f64 {
    let [x, y, _] = bloch(s_ss);
    -(0.5 * p.rabi * x - 0.25 * p.gamma * (x * x + y * y))
}

/// Sampled emission spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub params: ModelParams,
    pub elastic_weight: f64,
    /// (ω, Ṡ^χ(ω)) pairs.
    pub grid: Vec<(f64, f64)>,
    /// Flat thermal input floor n̄/2π, kept separate from the grid.
    pub nbar_floor: f64,
    /// Ṅ^χ at steady state.
    pub n_chi: f64,
}

impl SpectrumResult {
    /// ∫Ṡ^χ dω by trapezoid plus the C/Δ² tails beyond the grid ends.
    pub fn integral(&self) -> f64 {
        let wl = self.params.omega_l;
        integrate_with_tails(&self.grid, wl)
    }

    /// Local maxima of the sampled curve as (ω, value), sorted by ω.
    pub fn peaks(&self) -> Vec<(f64, f64)> {
        let g = &self.grid;
        (1..g.len().saturating_sub(1))
            .filter(|&i| g[i].1 > g[i - 1].1 && g[i].1 >= g[i + 1].1)
            .map(|i| g[i])
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        out.push_str(&format!(
            "# elastic_weight={:.12e}\n# n_chi={:.12e}\n# nbar_floor={:.12e}\n# gamma={} rabi={} omega0={} omegaL={} nbar={}\n",
            self.elastic_weight, self.n_chi, self.nbar_floor, p.gamma, p.rabi, p.omega0, p.omega_l, p.nbar
        ));
        out.push_str("omega,sdot_chi,bq_density\n");
        for &(w, s) in &self.grid {
            out.push_str(&format!("{w:.12e},{s:.12e},{:.12e}\n", w * s));
        }
        out
    }
}

/// Line centres and half-widths extracted from sampled spectrum values.
///
/// Fits Ṡ(ω) = P(x)/Q(x), x = (ω − ω_L)/scale, with monic Q of degree
/// 2·n_lines and deg P < deg Q by linear least squares on the samples,
/// then reads the lines off the complex roots of Q. Returned as
/// (centre ω, half-width) pairs sorted by centre, one per conjugate pair.
pub fn fit_line_centers(samples: &[(f64, f64)], center: f64, scale: f64, n_lines: usize) -> Result<Vec<(f64, f64)>> {
    let nq = 2 * n_lines;
    let np = nq;
    let unknowns = nq + np;
    if samples.len() < unknowns {
        return Err(Error::Config(format!(
            "{} samples for {} unknowns",
            samples.len(),
            unknowns
        )));
    }
    let norm = samples
        .iter()
        .map(|s| s.1.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    // Rows: Σ_k q_k S x^k − Σ_k p_k x^k = −S x^{nq}.
    let mut ata = CplxMatrix::zeros(unknowns, unknowns);
    let mut atb = vec![ZERO; unknowns];
    for &(w, sv) in samples {
        let x = (w - center) / scale;
        let sv = sv / norm;
        let mut row = vec![0.0; unknowns];
        let mut xp = 1.0;
        for k in 0..nq {
            row[k] = sv * xp;
            if k < np {
                row[nq + k] = -xp;
            }
            xp *= x;
        }
        let rhs = -sv * xp;
        for i in 0..unknowns {
            for j in 0..unknowns {
                ata[(i, j)] += C64::new(row[i] * row[j], 0.0);
            }
            atb[i] += C64::new(row[i] * rhs, 0.0);
        }
    }
    let coef = crate::densemath::solve(&ata, &atb, 1e-15)?;
    // Companion matrix of x^{nq} + Σ q_k x^k.
    let comp = CplxMatrix::from_fn(nq, nq, |i, j| {
        if i == 0 {
            -coef[nq - 1 - j]
        } else if j + 1 == i {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    });
    let roots = crate::densemath::eigenvalues(&comp)?;
    let mut lines: Vec<(f64, f64)> = roots
        .iter()
        .filter(|r| r.im > 0.0)
        .map(|r| (center + r.re * scale, r.im * scale))
        .collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(lines)
}

fn integrate_with_tails(grid: &[(f64, f64)], center: f64) -> f64 {
    if grid.len() < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for w in grid.windows(2) {
        acc += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
    }
    let (w0, s0) = grid[0];
    let (w1, s1) = grid[grid.len() - 1];
    acc + s0 * (center - w0).abs() + s1 * (w1 - center).abs()
}

/// Symmetric grid around ω_L, dense near the line centre:
/// ω = ω_L + W tan(u) with u uniform and |ω − ω_L| ≤ span·W, where W is
/// the largest of γ(2n̄+1), Ω and |δ|.
pub fn spectrum_grid(p: &ModelParams, n_points: usize, span: f64) -> Vec<f64> {
    let w = (p.gamma * (2.0 * p.nbar + 1.0)).max(p.rabi.abs()).max(p.delta().abs());
    let umax = span.atan();
    let n = n_points.max(3);
    (0..n)
        .map(|k| {
            let u = -umax + 2.0 * umax * k as f64 / (n - 1) as f64;
            p.omega_l + w * u.tan()
        })
        .collect()
}

/// Default spectrum grid: 801 points over ±60 W.
pub fn default_grid(p: &ModelParams) -> Vec<f64> {
    spectrum_grid(p, 801, 60.0)
}

/// Regression source X = (n̄+1) δσ₋ ρ − n̄ ρ δσ₋ for a rotating-frame
/// steady state.
fn regression_source(s_ss: &CplxMatrix, p: &ModelParams) -> CplxMatrix {
    let q = qubit_ops(p.omega0);
    let m = sigma_minus_mean(s_ss);
    let mut ds = q.sigma_minus.clone();
    ds -= &CplxMatrix::identity(2).scale(m);
    let mut x = ds.matmul(s_ss).scale_real(p.nbar + 1.0);
    x.axpy(C64::new(-p.nbar, 0.0), &s_ss.matmul(&ds));
    x
}

/// Evaluator of Ṡ^χ(ω) for one parameter point.
pub struct IncoherentSpectrum {
    pub liouvillian: Liouvillian,
    pub steady: CplxMatrix,
    source: CplxMatrix,
    sigma_plus: CplxMatrix,
}

impl IncoherentSpectrum {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let l = Liouvillian::new(p);
        let ss = l.steady_state()?;
        Ok(Self::with_steady(l, ss))
    }

    pub fn with_steady(l: Liouvillian, steady: CplxMatrix) -> Self {
        let source = regression_source(&steady, &l.params);
        let sigma_plus = qubit_ops(l.params.omega0).sigma_plus;
        IncoherentSpectrum {
            liouvillian: l,
            steady,
            source,
            sigma_plus,
        }
    }

    /// Complex regression amplitude Tr{σ₊ (iΔ − L)⁻¹ X}, Δ = ω − ω_L.
    pub fn amplitude(&self, omega: f64) -> Result<C64> {
        let z = C64::new(0.0, omega - self.liouvillian.params.omega_l);
        let r = self.liouvillian.deflated_resolvent(z, &self.steady)?;
        Ok(expectation(&self.sigma_plus, &apply_super(&r, &self.source)))
    }

    /// Ṡ^χ(ω) = (γ/π) Re Tr{σ₊ (iΔ − L)⁻¹ X}.
    pub fn sdot_chi(&self, omega: f64) -> Result<f64> {
        Ok(self.liouvillian.params.gamma / std::f64::consts::PI * self.amplitude(omega)?.re)
    }

    /// Peak position refined by golden-section search inside [a, b].
    pub fn refine_peak(&self, a: f64, b: f64) -> Result<f64> {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (a, b);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = self.sdot_chi(c)?;
        let mut fd = self.sdot_chi(d)?;
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = self.sdot_chi(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = self.sdot_chi(d)?;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Time-domain quadrature of the same regression integral,
    /// (γ/π) Re ∫₀^T e^{−iΔτ} Tr{σ₊ e^{Lτ} X} dτ, by composite Simpson.
    pub fn sdot_chi_quadrature(&self, omega: f64, t_max: f64, n_intervals: usize) -> f64 {
        let p = &self.liouvillian.params;
        let n = n_intervals + n_intervals % 2;
        let h = t_max / n as f64;
        let step = self.liouvillian.propagator(h);
        let dw = omega - p.omega_l;
        let mut x = self.source.clone();
        let mut acc = ZERO;
        for k in 0..=n {
            let wgt = if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let f = expectation(&self.sigma_plus, &x) * C64::from_polar(1.0, -dw * h * k as f64);
            acc += f * wgt;
            x = apply_super(&step, &x);
        }
        p.gamma / std::f64::consts::PI * (acc * (h / 3.0)).re
    }
}

/// Incoherent spectrum on a grid of lab-frame frequencies, evaluated in
/// parallel over grid points.
pub fn incoherent_spectrum(s_ss: &CplxMatrix, p: &ModelParams, grid: &[f64]) -> Result<SpectrumResult> {
    let spec = IncoherentSpectrum::with_steady(Liouvillian::new(p), s_ss.clone());
    let values: Result<Vec<f64>> = grid.par_iter().map(|&w| spec.sdot_chi(w)).collect();
    let values = values?;
    let flows = photon_flows(s_ss, p, 0.0);
    Ok(SpectrumResult {
        params: p.clone(),
        elastic_weight: elastic_weight(s_ss, p),
        grid: grid.iter().copied().zip(values).collect(),
        nbar_floor: p.nbar / (2.0 * std::f64::consts::PI),
        n_chi: flows.n_chi,
    })
}

/// Frequency-resolved b-work and b-heat received by the field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEnergetics {
    /// Weight of the b-work delta peak at ω_L: ω_L times the elastic weight.
    pub bw_f_weight: f64,
    /// (ω, ω·Ṡ^χ(ω)).
    pub bq_density: Vec<(f64, f64)>,
}

impl SpectralEnergetics {
    pub fn bw_f(&self) -> f64 {
        self.bw_f_weight
    }

    /// ∫ω Ṡ^χ dω: the centroid part ω_L ∫Ṡ^χ uses the tail-corrected
    /// integral, the first moment about ω_L a plain trapezoid.
    pub fn bq_f(&self, spec: &SpectrumResult) -> f64 {
        let wl = spec.params.omega_l;
        let moment: Vec<(f64, f64)> = spec.grid.iter().map(|&(w, s)| (w, (w - wl) * s)).collect();
        let mut m1 = 0.0;
        for w in moment.windows(2) {
            m1 += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
        }
        wl * spec.integral() + m1
    }
}

pub fn spectral_energetics(spec: &SpectrumResult) -> SpectralEnergetics {
    SpectralEnergetics {
        bw_f_weight: spec.params.omega_l * spec.elastic_weight,
        bq_density: spec.grid.iter().map(|&(w, s)| (w, w * s)).collect(),
    }
}

/// Two-unit correlation values Tr{b_m† b_n Δ_{m,n}ρ_f} for one lag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoUnitTerms {
    pub lag: usize,
    /// Product part.
    pub otimes: C64,
    /// Correlation part.
    pub chi: C64,
    /// Brute-force pair-space value with the second-order first collision.
    pub direct: C64,
    /// Brute-force pair-space value with the exact first collision.
    pub direct_exact: C64,
}

/// Small-instance oracle over the joint space atom ⊗ unit n ⊗ unit m.
///
/// The atom starts at t_n = 0 in `s0` (interaction picture), collides with
/// unit n, evolves under the Bloch equations for (m − n − 1)Δt and
/// collides with unit m.
pub struct TwoUnitOracle {
    pub collider: Collider,
    liouvillian: Liouvillian,
    one_step: CplxMatrix,
    first: CollisionDeltas,
    rho0: CplxMatrix,
    alpha_n: C64,
}

impl TwoUnitOracle {
    pub fn new(p: &ModelParams, d_small: usize, s0: &CplxMatrix) -> Result<Self> {
        if d_small > TWO_UNIT_MAX_DIM {
            return Err(Error::MemoryGuard {
                dim: 2 * d_small * d_small,
                limit: 2 * TWO_UNIT_MAX_DIM * TWO_UNIT_MAX_DIM,
            });
        }
        let collider = Collider::with_fock_dim(p, d_small)?;
        let unit = collider.unit(0);
        let col = collider.collide(s0, &unit, 0, true)?;
        let l = Liouvillian::new(p);
        let one_step = l.propagator(p.dt);
        Ok(TwoUnitOracle {
            first: col.deltas.expect("deltas requested"),
            rho0: col.pre.rho,
            alpha_n: unit.alpha,
            liouvillian: l,
            one_step,
            collider,
        })
    }

    fn d(&self) -> usize {
        self.collider.fock_dim
    }

    /// Interaction-picture Bloch propagator from t_1 to t_lag as a 4×4
    /// superoperator, given the rotating-frame power e^{L(lag−1)Δt}.
    fn interaction_super(&self, rot_power: &CplxMatrix, lag: usize) -> CplxMatrix {
        let p = &self.liouvillian.params;
        let t1 = p.time(1);
        let t2 = p.time(lag);
        let mut m = CplxMatrix::zeros(4, 4);
        for j in 0..2 {
            for i in 0..2 {
                let e = CplxMatrix::from_fn(2, 2, |a, b| if a == i && b == j { C64::new(1.0, 0.0) } else { ZERO });
                let r = interaction_to_rotating(&e, t1, p);
                let out = crate::model::rotating_to_interaction(&apply_super(rot_power, &r), t2, p).vec_cols();
                for (k, z) in out.into_iter().enumerate() {
                    m[(k, i + 2 * j)] = z;
                }
            }
        }
        m
    }

    /// Applies an atom superoperator to the atom factor of an operator on
    /// atom ⊗ unit.
    fn apply_atom_super(&self, sup: &CplxMatrix, y: &CplxMatrix) -> CplxMatrix {
        let d = self.d();
        let mut out = CplxMatrix::zeros(2 * d, 2 * d);
        for k in 0..d {
            for l in 0..d {
                let block = CplxMatrix::from_fn(2, 2, |i, j| y[(i * d + k, j * d + l)]);
                let b = apply_super(sup, &block);
                for i in 0..2 {
                    for j in 0..2 {
                        out[(i * d + k, j * d + l)] = b[(i, j)];
                    }
                }
            }
        }
        out
    }

    /// Heisenberg-reduced creation operator of unit m:
    /// A = Tr_m{(I ⊗ η_m) U† (I ⊗ b†) U}.
    fn reduced_creation(&self, lag: usize) -> CplxMatrix {
        let c = &self.collider;
        let eta = c.unit(lag).rho;
        let bdag = kron(&CplxMatrix::identity(2), &c.fock.b.adjoint());
        let h = c.u.adjoint().matmul(&bdag).matmul(&c.u);
        mean_over_unit(&h, &eta, self.d())
    }

    /// Terms for the lag m − n = `lag` ≥ 1.
    pub fn terms(&self, lag: usize) -> Result<TwoUnitTerms> {
        let power = self.rot_power(lag);
        self.terms_with_power(lag, &power)
    }

    fn rot_power(&self, lag: usize) -> CplxMatrix {
        let mut m = CplxMatrix::identity(4);
        for _ in 1..lag {
            m = self.one_step.matmul(&m);
        }
        m
    }

    fn terms_with_power(&self, lag: usize, power: &CplxMatrix) -> Result<TwoUnitTerms> {
        if lag == 0 {
            return Err(Error::Config("two-unit lag must be >= 1".into()));
        }
        let c = &self.collider;
        let sup = self.interaction_super(power, lag);
        let y_otimes = self.apply_atom_super(&sup, &(&self.rho0 + &self.first.dotimes));
        let y_chi = self.apply_atom_super(&sup, &self.first.dchi);
        let a = self.reduced_creation(lag);
        let probe = kron(&a, &c.fock.b);
        let alpha_m = c.unit(lag).alpha;
        let mean = alpha_m.conj() * self.alpha_n;
        let otimes = expectation(&probe, &y_otimes) - mean;
        let chi = expectation(&probe, &y_chi);

        let y_dyson = self.apply_atom_super(&sup, &(&self.rho0 + &self.first.dyson()));
        let y_exact = self.apply_atom_super(&sup, &(&self.rho0 + &self.first.dexact));
        let direct = self.pair_space_value(&y_dyson, lag) - mean;
        let direct_exact = self.pair_space_value(&y_exact, lag) - mean;
        Ok(TwoUnitTerms {
            lag,
            otimes,
            chi,
            direct,
            direct_exact,
        })
    }

    /// Tr{b_m† b_n ρ_nm} with ρ_nm built on atom ⊗ n ⊗ m.
    fn pair_space_value(&self, y: &CplxMatrix, lag: usize) -> C64 {
        let c = &self.collider;
        let d = self.d();
        let eta_m = c.unit(lag).rho;
        let joint = kron(y, &eta_m);
        // U acting on atom ⊗ m, identity on n.
        let u = &c.u;
        let big = CplxMatrix::from_fn(2 * d * d, 2 * d * d, |r, col| {
            let (i, k, l) = (r / (d * d), (r / d) % d, r % d);
            let (j, k2, l2) = (col / (d * d), (col / d) % d, col % d);
            if k != k2 {
                ZERO
            } else {
                u[(i * d + l, j * d + l2)]
            }
        });
        let post = big.matmul(&joint).matmul(&big.adjoint());
        let obs = kron(&CplxMatrix::identity(2), &kron(&c.fock.b, &c.fock.b.adjoint()));
        expectation(&obs, &post)
    }

    /// Single-unit photon change of the first collision: product and
    /// correlation parts.
    pub fn lag_zero(&self) -> (f64, f64) {
        let n = self.collider.number_joint();
        (
            trace_against(&n, &self.first.dotimes),
            trace_against(&n, &self.first.dchi),
        )
    }

    /// Phase-summed correlation spectrum
    /// (1/2π)[G₀ + 2 Re Σ_{p≥1} e^{−i(ω−ω₀)t_p} G_p] over lags 1..=max_lag.
    pub fn chi_spectrum(&self, omegas: &[f64], max_lag: usize) -> Result<Vec<f64>> {
        let p = &self.liouvillian.params;
        let mut sums = vec![ZERO; omegas.len()];
        let mut power = CplxMatrix::identity(4);
        let c = &self.collider;
        let a_rot = self.reduced_creation(0);
        for lag in 1..=max_lag {
            if lag > 1 {
                power = self.one_step.matmul(&power);
            }
            let sup = self.interaction_super(&power, lag);
            let y_chi = self.apply_atom_super(&sup, &self.first.dchi);
            // The reduced creation operator of unit m differs from unit 0
            // only by the phase of its displacement.
            let a = if p.laser_detuning() == 0.0 {
                a_rot.clone()
            } else {
                self.reduced_creation(lag)
            };
            let g = expectation(&kron(&a, &c.fock.b), &y_chi);
            let t = p.time(lag);
            for (acc, &w) in sums.iter_mut().zip(omegas) {
                *acc += g * C64::from_polar(1.0, -(w - p.omega0) * t);
            }
        }
        let g0 = self.lag_zero().1;
        Ok(sums
            .into_iter()
            .map(|s| (g0 + 2.0 * s.re) / (2.0 * std::f64::consts::PI))
            .collect())
    }
}

/// Terms of the two-unit oracle at one lag, starting from `s0` at t = 0.
pub fn two_unit_oracle(p: &ModelParams, d_small: usize, s0: &CplxMatrix, lag: usize) -> Result<TwoUnitTerms> {
    TwoUnitOracle::new(p, d_small, s0)?.terms(lag)
}
