//! Model parameters, operator builders and field-unit states.
//!
//! Units: ħ = 1 and, by default, ω₀ = 1. Rates are given in the same
//! inverse-time unit; flows are reported in γħω₀ by the ledger modules.

use serde::{Deserialize, Serialize};

use crate::densemath::{eigh, expectation, kron, matexp, CplxMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Default spontaneous-emission rate relative to ω₀ used by the scaled
/// constructors: well inside the weak-coupling regime.
pub const DEFAULT_GAMMA: f64 = 1e-4;

/// Largest accepted truncation leak of a unit state.
pub const DEFAULT_LEAK_TOL: f64 = 1e-6;

/// Default Fock truncation.
pub const DEFAULT_FOCK_DIM: usize = 12;

/// Upper bound for automatic Fock-dimension raising.
pub const MAX_FOCK_DIM: usize = 160;

/// Extra levels used when building displaced states before truncation.
const DISPLACEMENT_PAD: usize = 16;

/// Physical constants of one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub gamma: f64,
    pub rabi: f64,
    pub omega0: f64,
    #[serde(rename = "omegaL")]
    pub omega_l: f64,
    pub nbar: f64,
    pub dt: f64,
    pub fock_dim: usize,
    pub hbar: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::scaled(0.0, 0.0, 0.0, 1e-3)
    }
}

impl ModelParams {
    /// Parameters expressed in units of γ: Rabi frequency Ω/γ, laser
    /// detuning (ω_L − ω₀)/γ, thermal occupation and γΔt. Uses ω₀ = 1 and
    /// γ = [`DEFAULT_GAMMA`].
    pub fn scaled(rabi_over_gamma: f64, laser_detuning_over_gamma: f64, nbar: f64, gamma_dt: f64) -> Self {
        let gamma = DEFAULT_GAMMA;
        ModelParams {
            gamma,
            rabi: rabi_over_gamma * gamma,
            omega0: 1.0,
            omega_l: 1.0 + laser_detuning_over_gamma * gamma,
            nbar,
            dt: gamma_dt / gamma,
            fock_dim: DEFAULT_FOCK_DIM,
            hbar: 1.0,
        }
    }

    /// Resonant parameters with the Rabi frequency chosen to hit a given
    /// saturation parameter.
    pub fn resonant_at_saturation(s: f64, nbar: f64, gamma_dt: f64) -> Self {
        let rabi_over_gamma = (2.0 * nbar + 1.0) * (s / 2.0).sqrt();
        ModelParams::scaled(rabi_over_gamma, 0.0, nbar, gamma_dt)
    }

    /// Hard validation; returns regime warnings for soft violations.
    pub fn validate(&self) -> Result<Vec<String>> {
        let finite = [
            self.gamma,
            self.rabi,
            self.omega0,
            self.omega_l,
            self.nbar,
            self.dt,
            self.hbar,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config("non-finite parameter".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.nbar < 0.0 {
            return Err(Error::Config(format!("nbar must be >= 0, got {}", self.nbar)));
        }
        if self.fock_dim < 2 {
            return Err(Error::Config(format!("fock_dim must be >= 2, got {}", self.fock_dim)));
        }
        if self.hbar != 1.0 {
            return Err(Error::Config(format!("hbar is fixed to 1, got {}", self.hbar)));
        }
        if self.omega0 <= 0.0 {
            return Err(Error::Config(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        let mut warnings = Vec::new();
        if self.gamma_dt() > 0.05 {
            warnings.push(format!("gamma*dt = {:.3e} exceeds 0.05", self.gamma_dt()));
        }
        if self.rabi > 0.1 * self.omega0 {
            warnings.push(format!("rabi = {:.3e} exceeds 0.1*omega0", self.rabi));
        }
        if self.laser_detuning().abs() > 0.1 * self.omega0 {
            warnings.push(format!(
                "|omegaL - omega0| = {:.3e} exceeds 0.1*omega0",
                self.laser_detuning().abs()
            ));
        }
        Ok(warnings)
    }

    pub fn gamma_dt(&self) -> f64 {
        self.gamma * self.dt
    }

    /// ω_L − ω₀.
    pub fn laser_detuning(&self) -> f64 {
        self.omega_l - self.omega0
    }

    /// δ = ω₀ − ω_L.
    pub fn delta(&self) -> f64 {
        self.omega0 - self.omega_l
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Inverse temperature β = ln(1 + 1/n̄)/ω₀; infinite at n̄ = 0.
    pub fn beta(&self) -> f64 {
        if self.nbar == 0.0 {
            f64::INFINITY
        } else {
            (1.0 + 1.0 / self.nbar).ln() / self.omega0
        }
    }

    /// Saturation parameter s = 2Ω²/(4δ² + γ²(2n̄+1)²).
    pub fn saturation(&self) -> f64 {
        let k = 2.0 * self.nbar + 1.0;
        2.0 * self.rabi * self.rabi / (4.0 * self.delta() * self.delta() + self.gamma * self.gamma * k * k)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Two-level operators in the basis {|e⟩, |g⟩}.
#[derive(Clone, Debug)]
pub struct QubitOps {
    pub sigma_minus: CplxMatrix,
    pub sigma_plus: CplxMatrix,
    pub sigma_z: CplxMatrix,
    pub h_s: CplxMatrix,
}

pub fn qubit_ops(omega0: f64) -> QubitOps {
    let sigma_minus = CplxMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    let sigma_plus = sigma_minus.transpose();
    let sigma_z = CplxMatrix::diag_real(&[1.0, -1.0]);
    let h_s = sigma_z.scale_real(0.5 * omega0);
    QubitOps {
        sigma_minus,
        sigma_plus,
        sigma_z,
        h_s,
    }
}

pub fn sigma_x() -> CplxMatrix {
    CplxMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn sigma_y() -> CplxMatrix {
    CplxMatrix::from_vec(2, 2, vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]).expect("2x2")
}

/// Truncated ladder operators.
#[derive(Clone, Debug)]
pub struct FockOps {
    pub b: CplxMatrix,
    pub number: CplxMatrix,
}

pub fn fock_ops(d: usize) -> FockOps {
    assert!(d >= 2, "Fock dimension must be at least 2");
    let b = CplxMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    let number = CplxMatrix::diag_real(&(0..d).map(|k| k as f64).collect::<Vec<_>>());
    FockOps { b, number }
}

/// Bloch components (x, y, z) = (⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩).
pub fn bloch(s: &CplxMatrix) -> [f64; 3] {
    let x = 2.0 * s[(0, 1)].re;
    let y = -2.0 * s[(0, 1)].im;
    let z = (s[(0, 0)] - s[(1, 1)]).re;
    [x, y, z]
}

/// Atom state with the given Bloch vector.
pub fn atom_from_bloch(x: f64, y: f64, z: f64) -> CplxMatrix {
    CplxMatrix::from_vec(
        2,
        2,
        vec![
            C64::new(0.5 * (1.0 + z), 0.0),
            C64::new(0.5 * x, -0.5 * y),
            C64::new(0.5 * x, 0.5 * y),
            C64::new(0.5 * (1.0 - z), 0.0),
        ],
    )
    .expect("2x2")
}

/// ⟨σ₋⟩ = ρ_eg.
pub fn sigma_minus_mean(s: &CplxMatrix) -> C64 {
    s[(0, 1)]
}

pub fn excited() -> CplxMatrix {
    CplxMatrix::diag_real(&[1.0, 0.0])
}

pub fn ground() -> CplxMatrix {
    CplxMatrix::diag_real(&[0.0, 1.0])
}

/// Thermal qubit with detailed-balance populations.
pub fn thermal_qubit(nbar: f64) -> CplxMatrix {
    let k = 2.0 * nbar + 1.0;
    CplxMatrix::diag_real(&[nbar / k, (nbar + 1.0) / k])
}

/// State of one field unit.
#[derive(Clone, Debug)]
pub struct UnitState {
    pub rho: CplxMatrix,
    pub alpha: C64,
    pub truncation_leak: f64,
}

impl UnitState {
    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    /// The same unit with its displacement phase advanced by θ:
    /// α → α e^{iθ}, realized as e^{iθ b†b} ρ e^{−iθ b†b}.
    pub fn rotated(&self, theta: f64) -> UnitState {
        if theta == 0.0 {
            return self.clone();
        }
        let d = self.dim();
        let phases: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0, theta * k as f64)).collect();
        let rho = CplxMatrix::from_fn(d, d, |j, k| self.rho[(j, k)] * phases[j] * phases[k].conj());
        UnitState {
            rho,
            alpha: self.alpha * C64::from_polar(1.0, theta),
            truncation_leak: self.truncation_leak,
        }
    }
}

fn thermal_weights(nbar: f64, d: usize) -> Vec<f64> {
    if nbar == 0.0 {
        let mut w = vec![0.0; d];
        w[0] = 1.0;
        return w;
    }
    let r = nbar / (nbar + 1.0);
    (0..d).map(|k| r.powi(k as i32) / (nbar + 1.0)).collect()
}

/// Truncated thermal state, renormalized; the leak records the lost weight.
pub fn thermal_state(nbar: f64, d: usize) -> UnitState {
    assert!(nbar >= 0.0, "negative thermal occupation");
    let w = thermal_weights(nbar, d);
    let total: f64 = w.iter().sum();
    let rho = CplxMatrix::diag_real(&w.iter().map(|x| x / total).collect::<Vec<_>>());
    UnitState {
        rho,
        alpha: ZERO,
        truncation_leak: (1.0 - total).max(0.0),
    }
}

/// Displacement operator exp(αb† − α*b) in the truncated space.
pub fn displacement(alpha: C64, d: usize) -> Result<CplxMatrix> {
    let limit = d as f64 / 9.0;
    if alpha.norm_sqr() > limit {
        return Err(Error::AmplitudeTooLarge {
            norm_sqr: alpha.norm_sqr(),
            limit,
        });
    }
    if alpha == ZERO {
        return Ok(CplxMatrix::identity(d));
    }
    let f = fock_ops(d);
    let mut gen = f.b.adjoint().scale(alpha);
    gen.axpy(-alpha.conj(), &f.b);
    Ok(matexp(&gen))
}

/// Displaced thermal state D(α) η^β D(α)†, built in a padded space and
/// truncated back to `d` levels.
pub fn displaced_thermal(alpha: C64, nbar: f64, d: usize) -> Result<UnitState> {
    let limit = d as f64 / 9.0;
    if alpha.norm_sqr() > limit {
        return Err(Error::AmplitudeTooLarge {
            norm_sqr: alpha.norm_sqr(),
            limit,
        });
    }
    let thermal = thermal_state(nbar, d);
    if alpha == ZERO {
        return Ok(thermal);
    }
    let big = d + DISPLACEMENT_PAD;
    let th_big = thermal_state(nbar, big);
    let disp = displacement(alpha, big)?;
    let full = disp.matmul(&th_big.rho).matmul(&disp.adjoint());
    let block = CplxMatrix::from_fn(d, d, |i, j| full[(i, j)]);
    let kept = block.trace().re;
    let rho = block.scale_real(1.0 / kept).hermitian_part();
    let leak = (1.0 - kept).max(0.0) + th_big.truncation_leak;
    Ok(UnitState {
        rho,
        alpha,
        truncation_leak: leak.max(thermal.truncation_leak),
    })
}

/// Displacement amplitude of unit n: α_n = (Ω/2)√(Δt/γ) e^{−i(ω_L−ω₀)t_n}.
pub fn unit_amplitude(n: usize, p: &ModelParams) -> C64 {
    let mag = 0.5 * p.rabi * (p.dt / p.gamma).sqrt();
    C64::from_polar(mag, -p.laser_detuning() * p.time(n))
}

/// Mean input amplitude ⟨b_in(t)⟩ = (Ω/2√γ) e^{−i(ω_L−ω₀)t}.
pub fn b_in_mean(p: &ModelParams, t: f64) -> C64 {
    C64::from_polar(0.5 * p.rabi / p.gamma.sqrt(), -p.laser_detuning() * t)
}

/// Smallest Fock dimension ≥ `p.fock_dim` for which the unit of step 0
/// leaks less than `leak_tol` and satisfies |α|² ≤ d/9.
pub fn auto_fock_dim(p: &ModelParams, leak_tol: f64) -> Result<usize> {
    let alpha = unit_amplitude(0, p);
    let mut d = p.fock_dim.max(2);
    while (alpha.norm_sqr() > d as f64 / 9.0) && d < MAX_FOCK_DIM {
        d += 1;
    }
    loop {
        let unit = displaced_thermal(alpha, p.nbar, d)?;
        if unit.truncation_leak < leak_tol {
            return Ok(d);
        }
        if d >= MAX_FOCK_DIM {
            return Err(Error::Config(format!(
                "truncation leak {:.3e} above {:.1e} at the maximal Fock dimension {}",
                unit.truncation_leak, leak_tol, MAX_FOCK_DIM
            )));
        }
        d += 1;
    }
}

/// Fresh unit for step n at a given truncation.
pub fn fresh_unit(n: usize, p: &ModelParams, d: usize) -> Result<UnitState> {
    displaced_thermal(unit_amplitude(n, p), p.nbar, d)
}

/// ⟨δb†δb⟩ of a unit state.
pub fn fluctuation_number(unit: &UnitState) -> f64 {
    let f = fock_ops(unit.dim());
    let mean_b = expectation(&f.b, &unit.rho);
    expectation(&f.number, &unit.rho).re - mean_b.norm_sqr()
}

/// Purity Tr ρ².
pub fn purity(rho: &CplxMatrix) -> f64 {
    expectation(rho, rho).re
}

/// Embeds an atom operator as A ⊗ I_d.
pub fn atom_embed(a: &CplxMatrix, d: usize) -> CplxMatrix {
    kron(a, &CplxMatrix::identity(d))
}

/// Embeds a unit operator as I₂ ⊗ B.
pub fn unit_embed(b: &CplxMatrix) -> CplxMatrix {
    kron(&CplxMatrix::identity(2), b)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CplxMatrix) -> f64 {
    eigh(m).0.first().copied().unwrap_or(0.0)
}

/// Converts an interaction-picture atom state at time t to the frame
/// rotating at ω_L: ⟨σ₋⟩ picks up e^{i(ω_L−ω₀)t}.
pub fn interaction_to_rotating(s: &CplxMatrix, t: f64, p: &ModelParams) -> CplxMatrix {
    rotate_coherence(s, p.laser_detuning() * t)
}

/// Inverse of [`interaction_to_rotating`].
pub fn rotating_to_interaction(s: &CplxMatrix, t: f64, p: &ModelParams) -> CplxMatrix {
    rotate_coherence(s, -p.laser_detuning() * t)
}

fn rotate_coherence(s: &CplxMatrix, phi: f64) -> CplxMatrix {
    let ph = C64::from_polar(1.0, phi);
    let mut out = s.clone();
    out[(0, 1)] = s[(0, 1)] * ph;
    out[(1, 0)] = s[(1, 0)] * ph.conj();
    out
}
