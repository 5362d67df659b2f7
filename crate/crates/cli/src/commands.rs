//! Subcommand implementations.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use haffsim_core::cooling::{haff_constants, integrate_upper_bound, PsiProfile};
use haffsim_core::diagnostics::{default_window, fit_power_law, haff_exponent, renormalized_moments, HaffFit, TailReport};
use haffsim_core::dsmc::{simulate, simulate_replicas, MomentSeries};
use haffsim_core::par::Execution;
use haffsim_core::povzner::{kappa_bound, kappa_p, kappa_p_quadrature};
use haffsim_core::restitution::RestitutionKind;
use haffsim_core::{AngularKernel, RestitutionModel};

use crate::args::{Command, Global};
use crate::config::{parse_config, RunConfig};
use crate::error::CliError;
use crate::plot::write_plots;
use crate::presets::preset;

/// Default half-width of the accepted exponent band around the target.
pub const DEFAULT_BAND_HALF_WIDTH: f64 = 0.15;

/// Standard errors a record may sit above the upper-bound ODE.
pub const BOUND_SIGMAS: f64 = 3.0;

pub const VERSION: &str = env!("HAFFSIM_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads `--config` or `--preset` and applies the global overrides.
pub fn load_config(global: &Global) -> Result<RunConfig, CliError> {
    let mut cfg = match (&global.config, &global.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })?
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(CliError::Usage("this command needs --config or --preset".into())),
    };
    if let Some(seed) = global.seed {
        cfg.sim.seed = seed;
    }
    if let Some(r) = global.replicas {
        if r == 0 {
            return Err(CliError::Usage("--replicas must be >= 1".into()));
        }
        cfg.replicas = r;
    }
    if let Some(out) = &global.out {
        cfg.series_out = Some(out.clone());
    }
    cfg.resolve()?;
    Ok(cfg)
}

/// Runs the configured simulation, merging replicas when there are several.
pub fn run_series(cfg: &RunConfig) -> Result<MomentSeries, CliError> {
    let exec = Execution::default();
    log::info!(
        "simulating {} particles to t = {} ({} replica(s), seed {})",
        cfg.sim.n_particles,
        cfg.sim.t_end,
        cfg.replicas,
        cfg.sim.seed
    );
    let series = if cfg.replicas == 1 {
        simulate(&cfg.sim, exec)?
    } else {
        simulate_replicas(&cfg.sim, cfg.replicas, exec)?
    };
    if let Some(last) = series.records.last() {
        log::info!("done: E = {:.4e}, {} collisions", last.energy, last.ncoll);
    }
    Ok(series)
}

/// `series.csv` -> `series.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "series".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Configuration text that reproduces the run, headed by the version.
pub fn manifest_text(cfg: &RunConfig, command: &str) -> String {
    format!("# haffsim {VERSION}\n# command = {command}\n{}", cfg.to_config_text())
}

/// Writes the series CSV, its standard errors and the manifest.
pub fn write_series(cfg: &RunConfig, series: &MomentSeries, path: &Path, command: &str) -> Result<Vec<PathBuf>, CliError> {
    let err_path = sibling(path, "stderr.csv");
    let manifest = sibling(path, "manifest.cfg");
    std::fs::write(path, series.to_csv())?;
    std::fs::write(&err_path, series.stderr_csv())?;
    std::fs::write(&manifest, manifest_text(cfg, command))?;
    Ok(vec![path.to_path_buf(), err_path, manifest])
}

/// Worst position of the simulated energy relative to the upper-bound ODE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// Largest `(E - E_ode) / stderr` over the records.
    pub worst_z: f64,
    pub worst_t: f64,
    pub holds: bool,
}

pub fn upper_bound_check(cfg: &RunConfig, series: &MomentSeries) -> Result<BoundCheck, CliError> {
    let t = series.times();
    let profile = PsiProfile::new(cfg.sim.restitution, cfg.sim.kernel.clone());
    let bound = integrate_upper_bound(&profile, cfg.sim.initial.energy(), &t)?;
    let mut check = BoundCheck { worst_z: f64::NEG_INFINITY, worst_t: 0.0, holds: true };
    for (rec, ode) in series.records.iter().zip(&bound) {
        let excess = rec.energy - ode;
        if excess > BOUND_SIGMAS * rec.err.energy {
            check.holds = false;
        }
        let z = if rec.err.energy > 0.0 { excess / rec.err.energy } else { excess.signum() * f64::INFINITY };
        if z > check.worst_z {
            check.worst_z = z;
            check.worst_t = rec.t;
        }
    }
    Ok(check)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaffCheck {
    pub fit: HaffFit,
    pub target: f64,
    pub band: (f64, f64),
    pub bound: BoundCheck,
}

impl HaffCheck {
    pub fn in_band(&self) -> bool {
        self.band.0 <= self.fit.exponent && self.fit.exponent <= self.band.1
    }

    pub fn verdict(&self) -> Verdict {
        if self.in_band() && self.bound.holds {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "exponent {:.6} stderr {:.2e} points {}", self.fit.exponent, self.fit.stderr, self.fit.n_points);
        let _ = writeln!(s, "window {} {}", self.fit.window.0, self.fit.window.1);
        let _ = writeln!(s, "target {:.6} band {} {}", self.target, self.band.0, self.band.1);
        let _ = writeln!(
            s,
            "upper bound {} worst z {:.3} at t = {:.6e}",
            if self.bound.holds { "holds" } else { "violated" },
            self.bound.worst_z,
            self.bound.worst_t
        );
        let _ = writeln!(s, "verdict {}", if self.verdict() == Verdict::Pass { "PASS" } else { "FAIL" });
        s
    }
}

/// Fits the energy decay of `series` and checks it against the upper bound.
pub fn haff_check(cfg: &RunConfig, series: &MomentSeries) -> Result<HaffCheck, CliError> {
    let t = series.times();
    let energy = series.column("E").expect("energy column");
    let window = match cfg.fit_window {
        Some(w) => w,
        None => default_window(&t)?,
    };
    let fit = fit_power_law(&t, &energy, window)?;
    let target = haff_exponent(cfg.sim.restitution.gamma());
    let band = cfg.band.unwrap_or((target - DEFAULT_BAND_HALF_WIDTH, target + DEFAULT_BAND_HALF_WIDTH));
    let bound = upper_bound_check(cfg, series)?;
    Ok(HaffCheck { fit, target, band, bound })
}

fn read_series(path: &Path) -> Result<MomentSeries, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    MomentSeries::from_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn emit(global: &Global, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match &global.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn model_from_flags(kind: &str, e0: Option<f64>, a: Option<f64>, eta: Option<f64>) -> Result<RestitutionModel, CliError> {
    let kind: RestitutionKind = kind.parse().map_err(|e: haffsim_core::Error| CliError::Usage(e.to_string()))?;
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| CliError::Usage(format!("--kind {} needs --{flag}", kind.as_str())));
    let model = match kind {
        RestitutionKind::Constant => RestitutionModel::constant(need(e0, "e0")?),
        RestitutionKind::MonotoneDecreasing => RestitutionModel::monotone(need(a, "a")?, need(eta, "eta")?),
        RestitutionKind::Viscoelastic => RestitutionModel::viscoelastic(need(a, "a")?),
    };
    model.map_err(|e| CliError::Usage(e.to_string()))
}

/// Executes one subcommand; tables and reports go to `stdout` unless `--out` is set.
pub fn run(global: &Global, command: &Command, stdout: &mut dyn Write) -> Result<Verdict, CliError> {
    match command {
        Command::Simulate { plot } => {
            let cfg = load_config(global)?;
            let out = cfg
                .series_out
                .clone()
                .ok_or_else(|| CliError::Usage("simulate needs --out or output.series".into()))?;
            let series = run_series(&cfg)?;
            let mut written = write_series(&cfg, &series, &out, "simulate")?;
            if let Some(svg) = plot.clone().or_else(|| cfg.plot_out.clone()) {
                written.extend(write_plots(&series, &svg)?);
            }
            for p in written {
                log::info!("wrote {}", p.display());
            }
            Ok(Verdict::Pass)
        }
        Command::HaffCheck => {
            let cfg = load_config(global)?;
            let series = run_series(&cfg)?;
            if let Some(out) = &cfg.series_out {
                write_series(&cfg, &series, out, "haff-check")?;
            }
            let check = haff_check(&cfg, &series)?;
            stdout.write_all(check.report().as_bytes())?;
            Ok(check.verdict())
        }
        Command::Fit { input, column, window, gamma } => {
            let series = read_series(input)?;
            let ys = series
                .column(column)
                .ok_or_else(|| CliError::Usage(format!("no column `{column}` in {}", input.display())))?;
            let cfg = if global.config.is_some() || global.preset.is_some() { Some(load_config(global)?) } else { None };
            let gamma = match (gamma, &cfg) {
                (Some(g), _) => *g,
                (None, Some(c)) => c.sim.restitution.gamma(),
                (None, None) => return Err(CliError::Usage("fit needs --gamma, --config or --preset for the target".into())),
            };
            let t = series.times();
            let window = match (*window, cfg.as_ref().and_then(|c| c.fit_window)) {
                (Some(w), _) | (None, Some(w)) => w,
                (None, None) => default_window(&t)?,
            };
            let fit = fit_power_law(&t, &ys, window)?;
            let mut s = String::from("column,window_lo,window_hi,points,exponent,stderr,target\n");
            let _ = writeln!(
                s,
                "{column},{},{},{},{},{},{}",
                window.0,
                window.1,
                fit.n_points,
                num(fit.exponent),
                num(fit.stderr),
                num(haff_exponent(gamma))
            );
            emit(global, stdout, &s)?;
            Ok(Verdict::Pass)
        }
        Command::Tails { input, a, b } => {
            let series = read_series(input)?;
            let (table, report) = renormalized_moments(&series.rescaled_moment_table(), *a, *b)?;
            emit(global, stdout, &tails_text(&table.orders, &table.taus, &table.z, &report))?;
            Ok(Verdict::Pass)
        }
        Command::Kappa { p_list, kernel, quadrature, q } => {
            let kernel = match kernel {
                Some(path) => AngularKernel::from_file(path)
                    .map_err(|e| CliError::Config(format!("kernel file {}: {e}", path.display())))?,
                None => AngularKernel::Isotropic,
            };
            let norm = kernel.lq_norm(*q);
            let mut s = String::from("p,kappa_p,holder_bound\n");
            for &p in p_list {
                let k = if *quadrature { kappa_p_quadrature(p, &kernel)? } else { kappa_p(p, &kernel)? };
                let _ = writeln!(s, "{p},{},{}", num(k), num(kappa_bound(p, *q, norm)?));
            }
            emit(global, stdout, &s)?;
            Ok(Verdict::Pass)
        }
        Command::PsiTable { xmin, xmax, per_decade } => {
            if !(*xmin > 0.0 && xmax > xmin && *per_decade > 0) {
                return Err(CliError::Usage("psi-table needs 0 < xmin < xmax and per-decade >= 1".into()));
            }
            let cfg = load_config(global)?;
            let profile = PsiProfile::new(cfg.sim.restitution, cfg.sim.kernel.clone());
            let consts = haff_constants(&profile)?;
            let decades = (xmax / xmin).log10();
            let n = (decades * *per_decade as f64).round().max(1.0) as usize;
            let mut s = String::from("x,psi,small_x_law,large_x_law\n");
            for i in 0..=n {
                let x = xmin * 10f64.powf(decades * i as f64 / n as f64);
                let small = consts.c_gamma * x.powf(0.5 * (3.0 + consts.gamma));
                let large = consts.c_b * x.powf(1.5);
                let _ = writeln!(s, "{},{},{},{}", num(x), num(profile.psi(x)?), num(small), num(large));
            }
            emit(global, stdout, &s)?;
            Ok(Verdict::Pass)
        }
        Command::RestitutionTable { kind, e0, a, eta, rmax, n } => {
            let model = match kind {
                Some(kind) => model_from_flags(kind, *e0, *a, *eta)?,
                None => load_config(global)?.sim.restitution,
            };
            if !(*rmax > 0.0 && *n >= 2) {
                return Err(CliError::Usage("restitution-table needs rmax > 0 and n >= 2".into()));
            }
            let mut s = String::from("r,e\n");
            for i in 0..*n {
                let r = rmax * i as f64 / (*n - 1) as f64;
                let _ = writeln!(s, "{},{}", num(r), num(model.eval(r)?));
            }
            emit(global, stdout, &s)?;
            Ok(Verdict::Pass)
        }
    }
}

fn tails_text(orders: &[f64], taus: &[f64], z: &[Vec<f64>], report: &TailReport) -> String {
    let mut s = String::from("tau");
    for p in orders {
        let _ = write!(s, ",z_{p}");
    }
    s.push('\n');
    for (j, tau) in taus.iter().enumerate() {
        s.push_str(&num(*tau));
        for col in z {
            let _ = write!(s, ",{}", num(col[j]));
        }
        s.push('\n');
    }
    let _ = writeln!(
        s,
        "# a = {} b = {} Q = {} bounded = {}",
        report.a,
        report.b_offset,
        num(report.q_certificate),
        report.bounded
    );
    s
}
