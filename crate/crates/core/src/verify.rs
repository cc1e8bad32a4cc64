//! Verification suite: each acceptance criterion as a list of named checks
//! with observed values and tolerances. Shared by `colmod verify` and the
//! acceptance test target.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::collider::Collider;
use crate::densemath::C64;
use crate::energetics::{flows_from_bloch, steady_bwork, steady_selfwork, EnergyLedger};
use crate::entropy::{selfwork_probe_eps, small_instance_relative_entropy, EntropyReport};
use crate::error::Result;
use crate::fieldobs::{
    default_grid, energy_flow_identities, fit_line_centers, incoherent_spectrum, mean_in_out, photon_flows,
    IncoherentSpectrum,
};
use crate::model::{atom_from_bloch, bloch, excited, ground, interaction_to_rotating, ModelParams};
use crate::obe::{steady_state_closed_form, Liouvillian};

/// Saturation values of the simulated self-work points.
pub const SWEEP_S: [f64; 8] = [0.25, 0.5, 1.0, 1.5, 2.0, 4.0, 6.0, 10.0];
/// Thermal occupations of the self-work curves.
pub const SWEEP_NBAR: [f64; 3] = [0.0, 0.5, 2.0];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when observed ≤ tolerance (NaN fails).
    pub fn at_most(criterion: u8, name: impl Into<String>, observed: f64, tolerance: f64) -> Self {
        Check {
            criterion,
            name: name.into(),
            observed,
            tolerance,
            passed: observed <= tolerance,
            detail: String::new(),
        }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

/// Knobs for mutation smoke tests of the suite itself.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct VerifyOptions {
    /// Replaces ⟨b_out⟩ = ⟨b_in⟩ − √γ⟨σ₋⟩ by ⟨b_in⟩ + √γ⟨σ₋⟩.
    pub flip_output_sign: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub options: VerifyOptions,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub seconds: f64,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Least-squares slope of ln y against ln x.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Steady atom b-work and self-work flows from the collision engine, in
/// units of γω₀: the reduced map runs to t_end − window, then the splitting
/// is evaluated every `stride` steps over the final window.
pub fn engine_steady_flows(p: &ModelParams, t_end_gamma: f64, window_gamma: f64, stride: usize) -> Result<(f64, f64)> {
    let c = Collider::new(p)?;
    let n_total = (t_end_gamma / p.gamma_dt()).round() as usize;
    let n_window = (window_gamma / p.gamma_dt()).round() as usize;
    let n_pre = n_total - n_window;
    let mut s = ground();
    for n in 0..n_pre {
        s = c.step_atom(&s, n);
    }
    let hs = c.h_s_joint();
    let (mut bw, mut bws, mut k) = (0.0, 0.0, 0usize);
    for n in n_pre..n_total {
        if (n - n_pre).is_multiple_of(stride.max(1)) {
            let col = c.collide(&s, &c.unit(n), n, true)?;
            let d = col.deltas.expect("deltas requested");
            bw += crate::collider::trace_against(&hs, &d.dotimes);
            bws += crate::collider::trace_against(&hs, &d.d2f);
            k += 1;
        }
        s = c.step_atom(&s, n);
    }
    let unit = k as f64 * p.dt * p.gamma * p.omega0;
    Ok((bw / unit, bws / unit))
}

/// Steady self-work from the collision engine on the reference grid: (n̄, s, simulated, analytic).
pub fn selfwork_points() -> Result<Vec<(f64, f64, f64, f64)>> {
    let grid: Vec<(f64, f64)> = SWEEP_NBAR
        .iter()
        .flat_map(|&n| SWEEP_S.iter().map(move |&s| (n, s)))
        .collect();
    grid.par_iter()
        .map(|&(n, s)| {
            let p = ModelParams::resonant_at_saturation(s, n, 1e-3);
            let (_, sim) = engine_steady_flows(&p, 20.0, 2.0, 10)?;
            Ok((n, s, sim, steady_selfwork(s, n)))
        })
        .collect()
}

pub fn criterion_1() -> Result<Vec<Check>> {
    let t0 = Instant::now();
    let mut out = Vec::new();
    for (&n, &expect) in SWEEP_NBAR.iter().zip(&[-0.125, -1.0 / 32.0, -0.005]) {
        // Dense scan of the analytic curve for its minimum.
        let (s_min, v_min) = (1..=100_000)
            .map(|k| k as f64 * 1e-4)
            .map(|s| (s, steady_selfwork(s, n)))
            .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        out.push(
            Check::at_most(
                1,
                format!("curve minimum value, nbar={n}"),
                (v_min - expect).abs(),
                1e-12,
            )
            .detail(format!("min {v_min:.9} at s={s_min:.4}")),
        );
        out.push(Check::at_most(
            1,
            format!("curve minimum location, nbar={n}"),
            (s_min - 1.0).abs(),
            1e-4,
        ));
    }
    let pts = selfwork_points()?;
    for &(n, s, sim, an) in &pts {
        out.push(
            Check::at_most(1, format!("engine self-work, nbar={n}, s={s}"), rel(sim, an), 0.02)
                .detail(format!("engine {sim:.6e}, curve {an:.6e}")),
        );
    }
    out.push(Check::at_most(1, "runtime seconds", t0.elapsed().as_secs_f64(), 60.0));
    Ok(out)
}

pub fn criterion_2() -> Result<Vec<Check>> {
    let mut out = vec![Check::at_most(
        2,
        "bwork(s=1, nbar=0) = 1/8",
        (steady_bwork(1.0, 0.0) - 0.125).abs(),
        1e-15,
    )];
    let ss: Vec<f64> = (0..=200).map(|k| 10f64.powf(k as f64 / 100.0)).collect();
    let drops = ss
        .windows(2)
        .filter(|w| steady_bwork(w[1], 0.0) <= steady_bwork(w[0], 0.0))
        .count();
    out.push(Check::at_most(2, "bwork monotone in s on [1, 100]", drops as f64, 0.0));
    out.push(
        Check::at_most(2, "bwork(s=100) near 1/2", rel(steady_bwork(100.0, 0.0), 0.5), 0.02)
            .detail(format!("{:.6}", steady_bwork(100.0, 0.0))),
    );
    let grid: Vec<(f64, f64)> = [0.0, 0.2]
        .iter()
        .flat_map(|&n| [0.25, 1.0, 4.0].map(|s| (n, s)))
        .collect();
    let sims: Result<Vec<_>> = grid
        .par_iter()
        .map(|&(n, s)| {
            let p = ModelParams::resonant_at_saturation(s, n, 1e-3);
            engine_steady_flows(&p, 20.0, 2.0, 10).map(|(bw, _)| (n, s, bw))
        })
        .collect();
    for (n, s, bw) in sims? {
        let an = steady_bwork(s, n);
        out.push(
            Check::at_most(2, format!("engine b-work, nbar={n}, s={s}"), rel(bw, an), 0.01)
                .detail(format!("engine {bw:.6e}, formula {an:.6e}")),
        );
    }
    Ok(out)
}

/// Parameter points (Ω/γ, (ω_L−ω₀)/γ, n̄) with initial Bloch vectors.
pub const OBE_POINTS: [(f64, f64, f64, [f64; 3]); 6] = [
    (1.0, 0.0, 0.0, [0.0, 0.0, 1.0]),
    (2.0, 0.0, 0.2, [0.0, 0.0, -1.0]),
    (4.0, 0.0, 0.0, [0.0, 0.0, -1.0]),
    (2.0, 1.0, 0.1, [1.0, 0.0, 0.0]),
    (3.0, -2.0, 0.5, [0.0, 0.6, 0.8]),
    (0.0, 0.0, 0.3, [0.6, -0.8, 0.0]),
];

/// Largest Bloch-vector distance between collision engine and RK4 over [0, 10/γ].
pub fn obe_deviation(rabi: f64, det: f64, nbar: f64, r0: [f64; 3], gamma_dt: f64) -> Result<f64> {
    let p = ModelParams::scaled(rabi, det, nbar, gamma_dt);
    let c = Collider::new(&p)?;
    let n = (10.0 / gamma_dt).round() as usize;
    let s0 = atom_from_bloch(r0[0], r0[1], r0[2]);
    let states = c.run_atom(&s0, n)?;
    let rk = Liouvillian::new(&p).integrate(&s0, p.time(n), p.dt)?;
    let mut worst: f64 = 0.0;
    for (k, (t, s_rk)) in rk.iter().enumerate().take(n + 1) {
        let a = bloch(&interaction_to_rotating(&states[k], *t, &p));
        let b = bloch(s_rk);
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        worst = worst.max(d);
    }
    Ok(worst)
}

pub fn criterion_3() -> Result<Vec<Check>> {
    let steps = [4e-3, 2e-3, 1e-3];
    let rows: Result<Vec<Vec<f64>>> = OBE_POINTS
        .par_iter()
        .map(|&(o, d, n, r0)| steps.iter().map(|&g| obe_deviation(o, d, n, r0, g)).collect())
        .collect();
    let mut out = Vec::new();
    for (&(o, d, n, _), devs) in OBE_POINTS.iter().zip(rows?) {
        let label = format!("Omega={o}, detuning={d}, nbar={n}");
        out.push(
            Check::at_most(
                3,
                format!("max deviation / (gamma dt), {label}"),
                devs[2] / steps[2],
                5.0,
            )
            .detail(format!("deviations {:?}", devs)),
        );
        let slope = log_slope(&steps, &devs);
        out.push(
            Check::at_most(3, format!("convergence slope, {label}"), (slope - 1.0).abs(), 0.2)
                .detail(format!("slope {slope:.4}")),
        );
    }
    Ok(out)
}

pub fn criterion_4() -> Result<Vec<Check>> {
    let pts = [(1.0, 0.0, 0.0), (2.0, 0.5, 0.2), (4.0, -1.0, 0.1), (0.5, 2.0, 0.5)];
    let runs: Result<Vec<_>> = pts
        .par_iter()
        .map(|&(o, d, n)| {
            let p = ModelParams::scaled(o, d, n, 1e-3);
            let c = Collider::new(&p)?;
            let mut l = EnergyLedger::new(&p);
            c.run_trajectory(&excited(), 10_000, &mut [&mut l], 10_000)?;
            Ok((o, d, n, p, l))
        })
        .collect();
    let mut out = Vec::new();
    for (o, d, n, p, l) in runs? {
        let label = format!("Omega={o}, detuning={d}, nbar={n}");
        let bound = 10.0 * p.gamma_dt().powf(1.5) * p.gamma * p.omega0;
        out.push(Check::at_most(
            4,
            format!("per-step residual rate / bound, {label}"),
            l.max_residual_rate / bound,
            1.0,
        ));
        out.push(Check::at_most(
            4,
            format!("cumulative residual, {label}"),
            l.cumulative_residual(),
            1e-2,
        ));
    }
    Ok(out)
}

pub fn criterion_5(opts: VerifyOptions, seed: u64) -> Result<Vec<Check>> {
    let pts = [
        (0.0, 0.0, 0.0),
        (1.0, 0.0, 0.0),
        (2.0, 1.0, 0.2),
        (4.0, -0.5, 0.1),
        (0.7, 3.0, 1.0),
        (3.0, 0.0, 2.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut e1, mut e2, mut e3, mut e_io, mut e_en, mut e_out) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for &(o, d, n) in &pts {
        let p = ModelParams::scaled(o, d, n, 1e-3);
        let g = p.gamma;
        let c = Collider::new(&p)?;
        for k in 0..100 {
            let r: f64 = rng.gen::<f64>().cbrt();
            let cz: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let sz = (1.0 - cz * cz).sqrt();
            let s = atom_from_bloch(r * sz * ph.cos(), r * sz * ph.sin(), r * cz);
            let t = p.time(37 * k);
            let f = photon_flows(&s, &p, t);
            let [x, y, _] = crate::energetics::rotating_bloch(&s, t, &p);
            let c2 = 0.25 * (x * x + y * y);
            e1 = e1.max(((f.n_out - f.n_in) - (f.n_stim + f.n_spont)).abs() / g);
            e2 = e2.max(((f.n_out - f.n_in) - (f.n_otimes + f.n_chi)).abs() / g);
            e3 = e3.max(
                ((f.n_otimes - f.n_stim) - g * c2)
                    .abs()
                    .max(((f.n_spont - f.n_chi) - g * c2).abs())
                    / g,
            );
            let (b_in, mut b_out) = mean_in_out(&s, &p, t);
            if opts.flip_output_sign {
                b_out = b_in + (b_in - b_out);
            }
            // Coherent part of the output flow against the product photon flow.
            e_io = e_io.max(((b_out.norm_sqr() - b_in.norm_sqr()) - f.n_otimes).abs() / g);
            // b-work balance: −ω₀(|⟨b_out⟩|² − |⟨b_in⟩|²) against the energetics flow.
            let fl = flows_from_bloch(&s, t, &p);
            let ef = energy_flow_identities(&f, &p);
            let bw_io = -p.omega0 * (b_out.norm_sqr() - b_in.norm_sqr());
            let scale = g * p.omega0;
            e_en = e_en
                .max((bw_io - fl.bw_s).abs() / scale)
                .max((ef.bq_s - fl.bq_s).abs() / scale)
                .max((ef.u_s - fl.u_s).abs() / scale);
            // Output unit mean against √Δt⟨b_out⟩ for a handful of states.
            if k < 5 {
                let n_step = 37 * k;
                let (_, unit_out) = c.step_reduced(&s, &c.unit(n_step))?;
                let mean_b = crate::densemath::expectation(&c.fock.b, &unit_out);
                let expect: C64 = b_out * p.dt.sqrt();
                let scale = (g * p.dt).sqrt();
                e_out = e_out.max((mean_b - expect).norm() / scale);
            }
        }
    }
    Ok(vec![
        Check::at_most(5, "n_out - n_in = n_stim + n_spont (rel. to gamma)", e1, 1e-10),
        Check::at_most(5, "n_out - n_in = n_otimes + n_chi (rel. to gamma)", e2, 1e-10),
        Check::at_most(5, "n_otimes - n_stim = gamma|<s->|^2 = n_spont - n_chi", e3, 1e-10),
        Check::at_most(
            5,
            "coherent output flow |<b_out>|^2 - |<b_in>|^2 = n_otimes",
            e_io,
            1e-10,
        ),
        Check::at_most(5, "energy balance via in/out flows", e_en, 1e-10),
        Check::at_most(
            5,
            "output unit mean vs sqrt(dt)<b_out> (rel. to sqrt(gamma dt))",
            e_out,
            1e-2,
        ),
    ])
}

pub fn criterion_6() -> Result<Vec<Check>> {
    let t0 = Instant::now();
    let mut out = Vec::new();
    for &om in &[4.0, 6.0, 8.0] {
        let p = ModelParams::scaled(om, 0.0, 0.0, 1e-3);
        let ss = steady_state_closed_form(&p);
        let spec = incoherent_spectrum(&ss, &p, &default_grid(&p))?;
        out.push(
            Check::at_most(
                6,
                format!("integral vs n_chi, Omega={om}"),
                rel(spec.integral(), spec.n_chi),
                1e-3,
            )
            .detail(format!("integral {:.8e}, n_chi {:.8e}", spec.integral(), spec.n_chi)),
        );
        let window: Vec<(f64, f64)> = spec
            .grid
            .iter()
            .copied()
            .filter(|(w, _)| (w - p.omega_l).abs() < 3.0 * p.rabi)
            .collect();
        let lines = fit_line_centers(&window, p.omega_l, p.rabi, 3)?;
        let side: Vec<f64> = lines
            .iter()
            .map(|l| l.0 - p.omega_l)
            .filter(|d| d.abs() > 0.5 * p.rabi)
            .collect();
        let err = if side.len() == 2 {
            side.iter().map(|d| rel(d.abs(), p.rabi)).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let raw: Vec<f64> = spec
            .peaks()
            .iter()
            .map(|pk| (pk.0 - p.omega_l) / p.gamma)
            .filter(|d| d.abs() > 0.5 * om)
            .collect();
        out.push(
            Check::at_most(6, format!("Mollow sideband offset vs Omega, Omega={om}"), err, 0.03).detail(format!(
                "fitted offsets/gamma {:?}, raw grid maxima/gamma {:?}",
                side.iter().map(|d| d / p.gamma).collect::<Vec<_>>(),
                raw
            )),
        );
    }
    let p = ModelParams::scaled(2.0, 1.0, 0.2, 1e-3);
    let ss = steady_state_closed_form(&p);
    let spec = incoherent_spectrum(&ss, &p, &default_grid(&p))?;
    out.push(Check::at_most(
        6,
        "integral vs n_chi, Omega=2, detuning=1, nbar=0.2",
        rel(spec.integral(), spec.n_chi),
        1e-3,
    ));
    let ev = IncoherentSpectrum::new(&p)?;
    let mut worst: f64 = 0.0;
    for k in [-3.0, -1.0, 0.0, 0.5, 2.0] {
        let w = p.omega_l + k * p.gamma;
        let a = ev.sdot_chi(w)?;
        let b = ev.sdot_chi_quadrature(w, 40.0 / p.gamma, 8000);
        worst = worst.max(rel(b, a));
    }
    out.push(Check::at_most(6, "resolvent vs time-domain quadrature", worst, 1e-4));
    out.push(Check::at_most(6, "runtime seconds", t0.elapsed().as_secs_f64(), 10.0));
    Ok(out)
}

pub fn criterion_7() -> Result<Vec<Check>> {
    let grid: Vec<(f64, f64)> = [0.1, 0.2, 0.5]
        .iter()
        .flat_map(|&n| [0.25, 1.0, 4.0].map(|s| (n, s)))
        .collect();
    let reports: Result<Vec<_>> = grid
        .par_iter()
        .map(|&(n, s)| {
            let p = ModelParams::resonant_at_saturation(s, n, 1e-3);
            let c = Collider::new(&p)?;
            let mut l = EnergyLedger::new(&p);
            let rec = c.run_trajectory(&ground(), 10_000, &mut [&mut l], 10_000)?;
            Ok((n, s, EntropyReport::from_run(&rec, &l)?))
        })
        .collect();
    let mut out = Vec::new();
    for (n, s, r) in reports? {
        let label = format!("nbar={n}, s={s}");
        let min_b = r.bsigma.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_gap = r
            .sigma
            .iter()
            .zip(&r.bsigma)
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min);
        out.push(Check::at_most(7, format!("-min bSigma, {label}"), -min_b, 1e-6));
        out.push(Check::at_most(
            7,
            format!("-min (Sigma - bSigma), {label}"),
            -min_gap,
            1e-6,
        ));
        out.push(
            Check::at_most(
                7,
                format!("|Sigma - bSigma + beta int W_self|, {label}"),
                r.tightening_gap(),
                1e-6,
            )
            .detail(format!(
                "Sigma {:.6}, bSigma {:.6}, closed-form self-work term {:.6}",
                r.final_sigma(),
                r.final_bsigma(),
                r.selfwork_term_closed.last().unwrap()
            )),
        );
    }
    let p = ModelParams::resonant_at_saturation(1.0, 0.2, 0.02);
    let tol = 5.0 * p.gamma_dt();
    let r = small_instance_relative_entropy(&p, &ground(), 5, 2)?;
    out.push(
        Check::at_most(
            7,
            "two-collision Sigma: relative entropy vs Clausius",
            (r.sigma_re - r.sigma_clausius).abs(),
            tol,
        )
        .detail(format!("{:.6e} vs {:.6e}", r.sigma_re, r.sigma_clausius)),
    );
    out.push(
        Check::at_most(
            7,
            "two-collision bSigma: relative entropy vs Clausius",
            (r.bsigma_re - r.bsigma_clausius).abs(),
            tol,
        )
        .detail(format!("{:.6e} vs {:.6e}", r.bsigma_re, r.bsigma_clausius)),
    );
    out.push(Check::at_most(
        7,
        "two-collision bSigma - Sigma",
        r.bsigma_re - r.sigma_re,
        tol,
    ));
    Ok(out)
}

pub fn criterion_8() -> Vec<Check> {
    let mut out = Vec::new();
    let mut fractions = Vec::new();
    for &eps in &[0.1, 0.01, 0.001] {
        let r = selfwork_probe_eps(eps, 41);
        fractions.push(r.positive_fraction);
        if eps >= 0.01 {
            out.push(
                Check::at_most(
                    8,
                    format!("max W_self - bound, eps={eps} ({} points)", r.points),
                    r.max_rate - r.bound,
                    1e-12,
                )
                .detail(format!(
                    "max {:.3e} at {:?}, bound {:.3e}",
                    r.max_rate, r.argmax, r.bound
                )),
            );
        }
    }
    let rises = fractions.windows(2).filter(|w| w[1] > w[0]).count();
    out.push(
        Check::at_most(
            8,
            "positive-region fraction non-increasing as eps falls",
            rises as f64,
            0.0,
        )
        .detail(format!("{fractions:?}")),
    );
    out
}

/// ‖UρU† − ρ − (Δρ^⊗ + Δρ^χ)‖_max at one step size.
pub fn splitting_gap(gamma_dt: f64) -> Result<f64> {
    let p = ModelParams::scaled(2.0, 0.5, 0.2, gamma_dt);
    let c = Collider::new(&p)?;
    let s = atom_from_bloch(0.4, -0.3, 0.5);
    let col = c.collide(&s, &c.unit(3), 3, true)?;
    let d = col.deltas.expect("deltas requested");
    Ok((&d.dexact - &d.dyson()).max_abs())
}

pub fn criterion_9() -> Result<Vec<Check>> {
    let steps = [8e-3, 4e-3, 2e-3, 1e-3];
    let gaps: Result<Vec<f64>> = steps.iter().map(|&g| splitting_gap(g)).collect();
    let gaps = gaps?;
    let slope = log_slope(&steps, &gaps);
    Ok(vec![Check::at_most(
        9,
        "splitting gap exponent - 1.5",
        (slope - 1.5).abs(),
        0.2,
    )
    .detail(format!("exponent {slope:.4}, gaps {gaps:?}"))])
}

/// Runs the selected criteria (all when `only` is empty).
pub fn run(only: &[u8], opts: VerifyOptions, seed: u64) -> Report {
    let t0 = Instant::now();
    let want = |k: u8| only.is_empty() || only.contains(&k);
    let mut checks = Vec::new();
    let mut push = |k: u8, r: Result<Vec<Check>>| match r {
        Ok(v) => checks.extend(v),
        Err(e) => checks.push(Check {
            criterion: k,
            name: "criterion evaluation".into(),
            observed: f64::NAN,
            tolerance: 0.0,
            passed: false,
            detail: e.to_string(),
        }),
    };
    if want(1) {
        push(1, criterion_1());
    }
    if want(2) {
        push(2, criterion_2());
    }
    if want(3) {
        push(3, criterion_3());
    }
    if want(4) {
        push(4, criterion_4());
    }
    if want(5) {
        push(5, criterion_5(opts, seed));
    }
    if want(6) {
        push(6, criterion_6());
    }
    if want(7) {
        push(7, criterion_7());
    }
    if want(8) {
        push(8, Ok(criterion_8()));
    }
    if want(9) {
        push(9, criterion_9());
    }
    let passed = checks.iter().all(|c| c.passed);
    Report {
        options: opts,
        checks,
        passed,
        seconds: t0.elapsed().as_secs_f64(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn failing_check_reports() {
        let c = Check::at_most(1, "x", 2.0, 1.0);
        assert!(!c.passed);
        assert!(!Check::at_most(1, "nan", f64::NAN, 1.0).passed);
    }

    #[test]
    fn output_sign_mutation_is_caught() {
        let good = criterion_5(VerifyOptions::default(), 7).unwrap();
        assert!(good.iter().all(|c| c.passed), "{good:?}");
        let bad = criterion_5(VerifyOptions { flip_output_sign: true }, 7).unwrap();
        let failed: Vec<&str> = bad.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert!(failed.iter().any(|n| n.contains("balance")));
        assert!(failed.iter().any(|n| n.contains("output")));
    }
}
