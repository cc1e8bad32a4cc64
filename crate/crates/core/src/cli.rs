//! Command-line front end: run configuration, subcommands, CSV and SVG
//! output, exit-code policy.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collider::Collider;
use crate::energetics::{flows_from_bloch, steady_bwork, steady_selfwork, EnergyLedger};
use crate::entropy::EntropyReport;
use crate::error::{Error, Result};
use crate::fieldobs::{default_grid, fit_line_centers, incoherent_spectrum, photon_flows};
use crate::model::{atom_from_bloch, bloch, ModelParams};
use crate::obe::{steady_state_closed_form, Liouvillian};
use crate::svg::{Chart, Series};
use crate::verify::{self, VerifyOptions, SWEEP_NBAR};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunKind {
    Simulate,
    Steady,
    Spectrum,
    Sweep,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    S,
    Nbar,
    Detuning,
}

/// Sweep variable with an inclusive range. Detuning is (ω_L − ω₀)/γ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub run: RunKind,
    pub n_steps: usize,
    /// Initial Bloch vector of the atom for `simulate`.
    #[serde(default = "default_initial")]
    pub initial_bloch: [f64; 3],
    pub sweep_axis: SweepAxis,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn default_initial() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::resonant_at_saturation(1.0, 0.0, 1e-3),
            run: RunKind::Simulate,
            n_steps: 8000,
            initial_bloch: default_initial(),
            sweep_axis: SweepAxis {
                axis: Axis::S,
                from: 0.0,
                to: 10.0,
                points: 201,
            },
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Returns parameter-regime warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        let warnings = self.params.validate()?;
        let a = &self.sweep_axis;
        if a.points < 2 {
            return Err(Error::Config(format!(
                "sweep needs at least 2 points, got {}",
                a.points
            )));
        }
        if !a.from.is_finite() || !a.to.is_finite() || a.from >= a.to {
            return Err(Error::Config(format!(
                "sweep range [{}, {}] is not a finite interval",
                a.from, a.to
            )));
        }
        if matches!(a.axis, Axis::S | Axis::Nbar) && a.from < 0.0 {
            return Err(Error::Config(format!("sweep over {:?} must start at >= 0", a.axis)));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        let r = self.initial_bloch;
        if r.iter().any(|x| !x.is_finite()) || r.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "initial Bloch vector {r:?} lies outside the unit ball"
            )));
        }
        Ok(warnings)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "colmod",
    version,
    about = "Collision-model simulation of a driven two-level atom in a waveguide"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write SVG charts next to the CSV files (default).
    #[arg(long, global = true, overrides_with = "no_svg")]
    pub svg: bool,
    /// Skip SVG charts.
    #[arg(long = "no-svg", global = true, overrides_with = "svg")]
    pub no_svg: bool,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Trajectory with energy ledger, photon flows and entropy production.
    Simulate,
    /// Steady-state flows from the Bloch equations.
    Steady,
    /// Incoherent emission spectrum and elastic weight.
    Spectrum,
    /// Steady-state flows against s, n̄ or detuning.
    Sweep,
    /// Acceptance checks with a JSON report.
    Verify {
        /// Restrict to these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        /// Mutation smoke test: flip the sign in the output-mean relation.
        #[arg(long, hide = true)]
        inject_output_sign_flip: bool,
    },
    /// Print the default configuration as JSON.
    Config,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io { .. } | Error::MemoryGuard { .. } | Error::AmplitudeTooLarge { .. } => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERICAL,
    }
}

/// Formats a float for CSV; non-finite values print as inf/-inf/nan.
fn num(v: f64) -> String {
    // Adding +0 folds -0 into 0.
    let v = v + 0.0;
    if v.is_finite() {
        format!("{v:.12e}")
    } else {
        format!("{v}")
    }
}

/// `#`-prefixed echo lines followed by an RFC-4180 table.
pub fn csv_text(echo: &[String], header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut out = String::new();
    for line in echo {
        for l in line.lines() {
            out.push_str("# ");
            out.push_str(l);
            out.push('\n');
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Config(format!("csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(r).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
    Ok(out)
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let probe = dir.join(".colmod-write-probe");
    std::fs::write(&probe, b"").map_err(|e| Error::io(format!("{} is not writable", dir.display()), e))?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

fn echo(cfg: &RunConfig) -> Vec<String> {
    // The output directory is left out so results do not depend on where they are written.
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(m) = v.as_object_mut() {
        m.remove("output_dir");
    }
    let compact = v.to_string();
    vec![
        format!("colmod {}", env!("CARGO_PKG_VERSION")),
        format!("config {compact}"),
    ]
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Trajectory CSV (Bloch vector, energy ledger, photon flows, entropy) and
/// a chart of the photon flows.
pub fn cmd_simulate(cfg: &RunConfig, svg: bool) -> Result<Vec<PathBuf>> {
    let p = &cfg.params;
    let c = Collider::new(p)?;
    let r = cfg.initial_bloch;
    let s0 = atom_from_bloch(r[0], r[1], r[2]);
    let mut ledger = EnergyLedger::new(p);
    let stride = (cfg.n_steps / 1000).max(1);
    let rec = c.run_trajectory(&s0, cfg.n_steps, &mut [&mut ledger], stride)?;
    let ent = EntropyReport::from_run(&rec, &ledger)?;
    let mut header = strings(&["t", "gamma_t", "sx", "sy", "sz", "p_e"]);
    header.extend(rec.columns.iter().cloned());
    header.extend(strings(&[
        "n_stim", "n_spont", "n_otimes", "n_chi", "dS_S", "Sigma", "bSigma",
    ]));
    let mut rows = Vec::new();
    let mut chart_rows = Vec::new();
    for (k, &n) in rec.sample_steps.iter().enumerate() {
        let t = rec.time(n);
        let [x, y, z] = bloch(&rec.rotating_state(n));
        let f = photon_flows(&rec.states[n], p, t);
        let mut row = vec![num(t), num(p.gamma * t), num(x), num(y), num(z), num(0.5 * (1.0 + z))];
        row.extend(rec.observer_rows[k].iter().map(|v| num(*v)));
        for v in [f.n_stim, f.n_spont, f.n_otimes, f.n_chi] {
            row.push(num(v / p.gamma));
        }
        row.extend([num(ent.ds_s[n]), num(ent.sigma[n]), num(ent.bsigma[n])]);
        rows.push(row);
        chart_rows.push((
            p.gamma * t,
            [f.n_stim, f.n_spont, f.n_otimes, f.n_chi].map(|v| v / p.gamma),
        ));
    }
    let mut e = echo(cfg);
    e.push(format!("fock_dim {}", c.fock_dim));
    e.push("photon flows in units of gamma; ledger energies in units of omega0".into());
    let mut files = vec![write_file(
        &cfg.output_dir,
        "trajectory.csv",
        &csv_text(&e, &header, &rows)?,
    )?];
    if svg {
        let names = ["stimulated", "spontaneous", "product (otimes)", "correlation (chi)"];
        let mut chart = Chart::new("Photon flows along the trajectory", "gamma t", "flow / gamma");
        for (j, name) in names.iter().enumerate() {
            chart = chart.with(Series::line(name, chart_rows.iter().map(|(t, v)| (*t, v[j])).collect()));
        }
        files.push(write_file(&cfg.output_dir, "flows.svg", &chart.render())?);
    }
    Ok(files)
}

/// Steady-state table: Bloch vector, energy and photon flows.
pub fn cmd_steady(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = &cfg.params;
    let ss = Liouvillian::new(p).steady_state()?;
    let closed = steady_state_closed_form(p);
    let [x, y, z] = bloch(&ss);
    let f = flows_from_bloch(&ss, 0.0, p);
    let ph = photon_flows(&ss, p, 0.0);
    let e0 = p.gamma * p.omega0;
    let sat = p.saturation();
    let mut items: Vec<(&str, f64)> = vec![
        ("sx", x),
        ("sy", y),
        ("sz", z),
        ("null_space_vs_closed_form", (&ss - &closed).max_abs()),
        ("saturation", sat),
        ("U_S", f.u_s / e0),
        ("U_f", f.u_f / e0),
        ("V", f.v / e0),
        ("bW_S", f.bw_s / e0),
        ("bW_f", f.bw_f / e0),
        ("bQ_S", f.bq_s / e0),
        ("bQ_f", f.bq_f / e0),
        ("bW_S_self", f.bw_s_self / e0),
        ("W", f.w / e0),
        ("Q", f.q / e0),
        ("W_self", f.w_self / e0),
        ("n_stim", ph.n_stim / p.gamma),
        ("n_spont", ph.n_spont / p.gamma),
        ("n_otimes", ph.n_otimes / p.gamma),
        ("n_chi", ph.n_chi / p.gamma),
    ];
    if p.delta() == 0.0 {
        items.push(("bW_S_formula", steady_bwork(sat, p.nbar)));
        items.push(("bW_S_self_formula", steady_selfwork(sat, p.nbar)));
    }
    let rows: Vec<Vec<String>> = items.iter().map(|(k, v)| vec![k.to_string(), num(*v)]).collect();
    let mut e = echo(cfg);
    e.push("energy flows in units of gamma*omega0, photon flows in units of gamma".into());
    Ok(vec![write_file(
        &cfg.output_dir,
        "steady.csv",
        &csv_text(&e, &strings(&["quantity", "value"]), &rows)?,
    )?])
}

/// Incoherent spectrum at steady state, with the elastic weight and fitted
/// line centres echoed in the header.
pub fn cmd_spectrum(cfg: &RunConfig, svg: bool) -> Result<Vec<PathBuf>> {
    let p = &cfg.params;
    let ss = Liouvillian::new(p).steady_state()?;
    let spec = incoherent_spectrum(&ss, p, &default_grid(p))?;
    let width = 3.0 * p.rabi.max(p.gamma) + p.delta().abs();
    let window: Vec<(f64, f64)> = spec
        .grid
        .iter()
        .copied()
        .filter(|(w, _)| (w - p.omega_l).abs() < width)
        .collect();
    let lines = fit_line_centers(&window, p.omega_l, width / 3.0, 3).unwrap_or_default();
    let mut e = echo(cfg);
    e.push(format!("elastic_weight {}", num(spec.elastic_weight)));
    e.push(format!("n_chi {}", num(spec.n_chi)));
    e.push(format!("integral_sdot_chi {}", num(spec.integral())));
    e.push(format!("nbar_floor {}", num(spec.nbar_floor)));
    let centres: Vec<String> = lines
        .iter()
        .map(|l| format!("{:.6}+/-{:.6}", (l.0 - p.omega_l) / p.gamma + 0.0, l.1 / p.gamma))
        .collect();
    e.push(format!(
        "fitted line offsets/gamma (centre+/-halfwidth) {}",
        centres.join(" ")
    ));
    let rows: Vec<Vec<String>> = spec
        .grid
        .iter()
        .map(|&(w, s)| vec![num(w), num((w - p.omega_l) / p.gamma), num(s), num(w * s)])
        .collect();
    let header = strings(&["omega", "detuning_over_gamma", "sdot_chi", "bq_density"]);
    let mut files = vec![write_file(
        &cfg.output_dir,
        "spectrum.csv",
        &csv_text(&e, &header, &rows)?,
    )?];
    if svg {
        let pts: Vec<(f64, f64)> = spec
            .grid
            .iter()
            .filter(|(w, _)| (w - p.omega_l).abs() < 1.5 * width)
            .map(|&(w, s)| ((w - p.omega_l) / p.gamma, s))
            .collect();
        let mut chart = Chart::new("Incoherent emission spectrum", "(omega - omega_L) / gamma", "S_chi")
            .with(Series::line("S_chi", pts));
        chart.notes.push(format!("elastic weight {:.4e}", spec.elastic_weight));
        chart.notes.push(format!("n_chi {:.4e}", spec.n_chi));
        files.push(write_file(&cfg.output_dir, "spectrum.svg", &chart.render())?);
    }
    Ok(files)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Steady-state sweeps. Along s: self-work and b-work curves for the
/// reference occupations with collision-engine points overlaid. Along n̄
/// or detuning: closed-form steady flows for the configured drive.
pub fn cmd_sweep(cfg: &RunConfig, svg: bool) -> Result<Vec<PathBuf>> {
    let a = &cfg.sweep_axis;
    let xs = linspace(a.from, a.to, a.points);
    let e = echo(cfg);
    let dir = &cfg.output_dir;
    let mut files = Vec::new();
    match a.axis {
        Axis::S => {
            let mut header = vec!["s".to_string()];
            for n in SWEEP_NBAR {
                header.push(format!("selfwork_nbar{n}"));
            }
            for n in SWEEP_NBAR {
                header.push(format!("bwork_nbar{n}"));
            }
            let rows: Vec<Vec<String>> = xs
                .iter()
                .map(|&s| {
                    let mut r = vec![num(s)];
                    r.extend(SWEEP_NBAR.iter().map(|&n| num(steady_selfwork(s, n))));
                    r.extend(SWEEP_NBAR.iter().map(|&n| num(steady_bwork(s, n))));
                    r
                })
                .collect();
            files.push(write_file(dir, "sweep.csv", &csv_text(&e, &header, &rows)?)?);
            let pts = verify::selfwork_points()?;
            let prow: Vec<Vec<String>> = pts
                .iter()
                .map(|&(n, s, sim, an)| vec![num(n), num(s), num(sim), num(an), num((sim - an) / an)])
                .collect();
            let ph = strings(&["nbar", "s", "engine_selfwork", "analytic_selfwork", "relative_error"]);
            files.push(write_file(dir, "sweep_points.csv", &csv_text(&e, &ph, &prow)?)?);
            if svg {
                let mut chart = Chart::new("Steady self-work flow", "saturation s", "W_self / (gamma hbar omega0)");
                for &n in &SWEEP_NBAR {
                    chart = chart.with(Series::line(
                        &format!("nbar = {n}"),
                        xs.iter().map(|&s| (s, steady_selfwork(s, n))).collect(),
                    ));
                }
                for &n in &SWEEP_NBAR {
                    let sel = pts.iter().filter(|q| q.0 == n).map(|q| (q.1, q.2)).collect();
                    chart = chart.with(Series::markers(&format!("engine, nbar = {n}"), sel));
                }
                files.push(write_file(dir, "sweep.svg", &chart.render())?);
            }
        }
        Axis::Nbar | Axis::Detuning => {
            let base = &cfg.params;
            let rows: Result<Vec<Vec<f64>>> = xs
                .par_iter()
                .map(|&v| {
                    let mut p = base.clone();
                    match a.axis {
                        Axis::Nbar => p.nbar = v,
                        _ => p.omega_l = p.omega0 + v * p.gamma,
                    }
                    p.validate()?;
                    let ss = steady_state_closed_form(&p);
                    let f = flows_from_bloch(&ss, 0.0, &p);
                    let e0 = p.gamma * p.omega0;
                    Ok(vec![
                        v,
                        p.saturation(),
                        f.bw_s / e0,
                        f.bw_s_self / e0,
                        f.bq_s / e0,
                        f.w / e0,
                        f.q / e0,
                        f.w_self / e0,
                    ])
                })
                .collect();
            let rows = rows?;
            let name = if a.axis == Axis::Nbar {
                "nbar"
            } else {
                "detuning_over_gamma"
            };
            let header = strings(&[name, "saturation", "bW_S", "bW_S_self", "bQ_S", "W", "Q", "W_self"]);
            let text_rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|v| num(*v)).collect()).collect();
            files.push(write_file(dir, "sweep.csv", &csv_text(&e, &header, &text_rows)?)?);
            if svg {
                let col = |j: usize| rows.iter().map(|r| (r[0], r[j])).collect::<Vec<_>>();
                let chart = Chart::new("Steady energy flows", name, "flow / (gamma hbar omega0)")
                    .with(Series::line("b-work bW_S", col(2)))
                    .with(Series::line("self-work bW_S^s", col(3)))
                    .with(Series::line("b-heat bQ_S", col(4)));
                files.push(write_file(dir, "sweep.svg", &chart.render())?);
            }
        }
    }
    Ok(files)
}

/// Runs the verification suite and writes `verify_report.json`.
pub fn cmd_verify(cfg: &RunConfig, criteria: &[u8], opts: VerifyOptions) -> Result<(bool, Vec<PathBuf>)> {
    let report = verify::run(criteria, opts, cfg.seed);
    for c in &report.checks {
        println!(
            "[{}] criterion {} | {} | observed {:.4e} | tolerance {:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.criterion,
            c.name,
            c.observed,
            c.tolerance
        );
    }
    let path = write_file(&cfg.output_dir, "verify_report.json", &report.to_json())?;
    Ok((report.passed, vec![path]))
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // A global pool may already exist when embedded; keep it then.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    if let Some(Command::Config) = cli.command {
        use std::io::Write;
        // Ignore a closed pipe (e.g. piping into `head`).
        let _ = writeln!(std::io::stdout(), "{}", RunConfig::default().to_json());
        return Ok(EXIT_OK);
    }
    let cfg = load_config(cli)?;
    for w in cfg.validate()? {
        eprintln!("warning: {w}");
    }
    prepare_dir(&cfg.output_dir)?;
    let svg = !cli.no_svg;
    let kind = match &cli.command {
        Some(Command::Simulate) => RunKind::Simulate,
        Some(Command::Steady) => RunKind::Steady,
        Some(Command::Spectrum) => RunKind::Spectrum,
        Some(Command::Sweep) => RunKind::Sweep,
        Some(Command::Verify { .. }) => RunKind::Verify,
        Some(Command::Config) => unreachable!("handled above"),
        None => cfg.run,
    };
    let (ok, files) = match kind {
        RunKind::Simulate => (true, cmd_simulate(&cfg, svg)?),
        RunKind::Steady => (true, cmd_steady(&cfg)?),
        RunKind::Spectrum => (true, cmd_spectrum(&cfg, svg)?),
        RunKind::Sweep => (true, cmd_sweep(&cfg, svg)?),
        RunKind::Verify => {
            let (criteria, flip) = match &cli.command {
                Some(Command::Verify {
                    criteria,
                    inject_output_sign_flip,
                }) => (criteria.clone(), *inject_output_sign_flip),
                _ => (Vec::new(), false),
            };
            cmd_verify(&cfg, &criteria, VerifyOptions { flip_output_sign: flip })?
        }
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
}

/// Runs the CLI and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.seed = 42;
        cfg.sweep_axis.axis = Axis::Detuning;
        cfg.params.nbar = 0.3;
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut cfg = RunConfig::default();
        cfg.sweep_axis.points = 1;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = RunConfig::default();
        cfg.sweep_axis.to = f64::INFINITY;
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.initial_bloch = [1.0, 1.0, 0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::NumericalDegradation("x".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::DegenerateNullSpace(0.0)), EXIT_NUMERICAL);
    }

    #[test]
    fn csv_quotes_fields() {
        let text = csv_text(
            &["a\nb".into()],
            &strings(&["k", "v"]),
            &[vec!["x,y".into(), "1".into()]],
        )
        .unwrap();
        assert_eq!(text, "# a\n# b\nk,v\n\"x,y\",1\n");
    }
}
