//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use haffsim_cli::commands::{haff_check, run_series, upper_bound_check};
use haffsim_cli::presets::{preset, PRESETS};
use haffsim_cli::RunConfig;
use haffsim_core::cooling::{constant_upper_bound, integrate_upper_bound, PsiProfile};
use haffsim_core::diagnostics::{moment_ratio_report, renormalized_moments, running_max_stabilized, STABILIZATION_TOL};
use haffsim_core::dsmc::MomentSeries;
use haffsim_core::kernel::uniform_on_sphere;
use haffsim_core::kinematics::{post_collision_impact, post_collision_sigma, sigma_from_impact};
use haffsim_core::povzner::{kappa_bound, kappa_p, kappa_p_isotropic, kappa_p_quadrature};
use haffsim_core::restitution::check_assumptions;
use haffsim_core::{AngularKernel, RestitutionModel, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Named<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Runs {
    constant: (RunConfig, MomentSeries),
    viscoelastic: (RunConfig, MomentSeries),
    monotone: (RunConfig, MomentSeries),
    selfsim: (RunConfig, MomentSeries),
}

fn run_preset(name: &str) -> (RunConfig, MomentSeries) {
    let cfg = preset(name).expect("preset parses");
    let series = run_series(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
    (cfg, series)
}

fn haff(run: &(RunConfig, MomentSeries), band: (f64, f64)) -> Check {
    let check = haff_check(&run.0, &run.1).map_err(|e| e.to_string())?;
    let e = check.fit.exponent;
    ensure(
        check.band == band && band.0 <= e && e <= band.1,
        format!(
            "exponent {e:.4} +- {:.4} on [{}, {}], target {:.4}, band [{}, {}]",
            check.fit.stderr, check.fit.window.0, check.fit.window.1, check.target, band.0, band.1
        ),
    )
}

fn upper_bound(runs: &Runs) -> Check {
    let mut worst = f64::NEG_INFINITY;
    for run in [&runs.constant, &runs.monotone, &runs.viscoelastic] {
        let b = upper_bound_check(&run.0, &run.1).map_err(|e| e.to_string())?;
        if !b.holds {
            return Err(format!("{:?}: E above the ODE by {:.2} standard errors at t = {}", run.0.sim.restitution.kind(), b.worst_z, b.worst_t));
        }
        worst = worst.max(b.worst_z);
    }
    let mut ode_err = 0.0f64;
    for e_init in [0.25, 1.0, 4.0] {
        let model = RestitutionModel::constant(0.5).unwrap();
        let t: Vec<f64> = (0..=60).map(|k| (k as f64 * 10f64.ln() * 5.0 / 60.0).exp_m1()).collect();
        let ode = integrate_upper_bound(&PsiProfile::isotropic(model), e_init, &t).map_err(|e| e.to_string())?;
        for (ti, e) in t.iter().zip(&ode) {
            let exact = constant_upper_bound(0.5, e_init, *ti);
            ode_err = ode_err.max((e - exact).abs() / exact);
        }
    }
    ensure(
        ode_err <= 1e-6,
        format!("three kinds below the bound (worst z {worst:.2}), ODE vs closed form {ode_err:.1e} relative"),
    )
}

fn povzner() -> Check {
    let iso = AngularKernel::Isotropic;
    let k1 = kappa_p(1.0, &iso).map_err(|e| e.to_string())?;
    let k2 = kappa_p_isotropic(2.0);
    let k2q = kappa_p_quadrature(2.0, &iso).map_err(|e| e.to_string())?;
    let exact2 = 19.0 / 24.0;
    if (k1 - 1.0).abs() > 1e-12 || (k2 - exact2).abs() > 1e-12 || (k2q - exact2).abs() > 1e-8 {
        return Err(format!("kappa_1 = {k1}, kappa_2 = {k2} (closed), {k2q} (quadrature)"));
    }
    let ps = [1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0];
    let sup = iso.lq_norm(f64::INFINITY);
    let mut prev = f64::INFINITY;
    for p in ps {
        let k = kappa_p(p, &iso).map_err(|e| e.to_string())?;
        let bound = kappa_bound(p, f64::INFINITY, sup).map_err(|e| e.to_string())?;
        if !(k < prev && k < bound) {
            return Err(format!("kappa_{p} = {k}, previous {prev}, bound {bound}"));
        }
        prev = k;
    }
    Ok(format!("kappa_1 = {k1}, kappa_2 error {:.1e} (quadrature), decreasing and below 4/(p+1) up to p = 50", (k2q - exact2).abs()))
}

fn micro_collisions() -> Check {
    let models = [
        RestitutionModel::constant(0.5).unwrap(),
        RestitutionModel::monotone(1.0, 1.0).unwrap(),
        RestitutionModel::viscoelastic(0.12).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut mom, mut energy, mut param) = (0.0f64, 0.0f64, 0.0f64);
    for model in &models {
        for _ in 0..1_000_000 {
            let scale = 10f64.powf(rng.random_range(-2.0..2.0));
            let mut draw = || Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)) * scale;
            let (v, vbar) = (draw(), draw());
            let n = uniform_on_sphere(&mut rng);
            let u = v - vbar;
            let sigma = sigma_from_impact(u, n);
            let s = post_collision_sigma(v, vbar, sigma, model).map_err(|e| e.to_string())?;
            let i = post_collision_impact(v, vbar, n, model).map_err(|e| e.to_string())?;
            let size = v.norm() + vbar.norm();
            let pair_energy = v.norm_sq() + vbar.norm_sq();
            mom = mom.max(((v + vbar) - (s.v_prime + s.vbar_prime)).norm() / size);
            let drop = pair_energy - s.v_prime.norm_sq() - s.vbar_prime.norm_sq();
            energy = energy.max((drop - s.energy_loss).abs() / pair_energy);
            param = param.max(((s.v_prime - i.v_prime).norm() + (s.vbar_prime - i.vbar_prime).norm()) / size);
        }
    }
    ensure(
        mom <= 1e-12 && energy <= 1e-12 && param <= 1e-12,
        format!("3 x 1e6 collisions: momentum {mom:.1e}, energy {energy:.1e}, parametrizations {param:.1e}"),
    )
}

fn viscoelastic_solver() -> Check {
    let model = RestitutionModel::viscoelastic(0.12).unwrap();
    let grid: Vec<f64> = (0..1000).map(|i| 10f64.powf(-8.0 + 16.0 * i as f64 / 999.0)).collect();
    let residual = grid.iter().map(|&r| model.viscoelastic_residual(r).unwrap().abs()).fold(0.0, f64::max);
    let values: Vec<f64> = grid.iter().map(|&r| model.value(r)).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let e_zero = model.eval(0.0).map_err(|e| e.to_string())?;
    let report = check_assumptions(&model, 1.0, 1000).map_err(|e| e.to_string())?;
    let gamma = report.fitted_gamma.unwrap_or(f64::NAN);
    ensure(
        residual < 1e-12 && e_zero == 1.0 && decreasing && (0.19..=0.21).contains(&gamma),
        format!("max residual {residual:.1e}, e(0) = {e_zero}, decreasing = {decreasing}, fitted gamma {gamma:.4}"),
    )
}

fn theta_band(series: &MomentSeries) -> Check {
    let taus = series.taus();
    let theta = series.column("theta").expect("theta column");
    let k = taus.iter().position(|&t| t >= 5.0).ok_or("run ends before tau = 5")?;
    // linear interpolation to tau = 5
    let theta5 = if k == 0 || taus[k] == 5.0 {
        theta[k]
    } else {
        let w = (5.0 - taus[k - 1]) / (taus[k] - taus[k - 1]);
        theta[k - 1] + w * (theta[k] - theta[k - 1])
    };
    let tail = &theta[k..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tau_end = *taus.last().unwrap();
    ensure(
        lo >= 0.1 * theta5 && hi.is_finite() && running_max_stabilized(&theta, STABILIZATION_TOL),
        format!("theta in [{lo:.3}, {hi:.3}] on tau in [5, {tau_end:.1}], theta(5) = {theta5:.3}"),
    )
}

fn moment_ratios(runs: &Runs) -> Check {
    let mut detail = Vec::new();
    for run in [&runs.constant, &runs.monotone, &runs.viscoelastic] {
        let report = moment_ratio_report(&run.1, &[1.5, 2.0, 3.0]).map_err(|e| e.to_string())?;
        for r in report {
            if !(r.stabilized && r.jensen_holds) {
                return Err(format!(
                    "{:?} p = {}: max ratio {:.3}, stabilized {}, worst Jensen z {:.2}",
                    run.0.sim.restitution.kind(),
                    r.p,
                    r.max_ratio,
                    r.stabilized,
                    r.worst_jensen_z
                ));
            }
            if run.0.sim.restitution.kind() == haffsim_core::restitution::RestitutionKind::Viscoelastic {
                detail.push(format!("p = {}: max {:.3}", r.p, r.max_ratio));
            }
        }
    }
    Ok(format!("stabilized, Jensen holds for all three kinds; viscoelastic {}", detail.join(", ")))
}

fn tails(series: &MomentSeries) -> Check {
    let (table, report) = renormalized_moments(&series.rescaled_moment_table(), 2.0, 0.5).map_err(|e| e.to_string())?;
    let p_max = table.orders.iter().copied().fold(0.0, f64::max);
    let tail = series.column("tail").ok_or("series has no tail column")?;
    let tail_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tail_ok = running_max_stabilized(&tail, STABILIZATION_TOL);
    ensure(
        report.bounded && p_max >= 5.0 && tail_ok,
        format!(
            "Q = {:.3} (bounded {}) over orders up to {p_max}; tail functional max {tail_max:.3} (stabilized {tail_ok})",
            report.q_certificate, report.bounded
        ),
    )
}

fn determinism(runs: &Runs) -> Check {
    let mut checked = Vec::new();
    for (name, _) in PRESETS {
        let first = match *name {
            "constant-e05" => Some(&runs.constant.1),
            "monotone" => Some(&runs.monotone.1),
            "viscoelastic-a012" => Some(&runs.viscoelastic.1),
            "viscoelastic-selfsim" => Some(&runs.selfsim.1),
            _ => None,
        };
        let again = run_preset(name).1;
        let reference = match first {
            Some(s) => s.to_csv(),
            None => run_preset(name).1.to_csv(),
        };
        if again.to_csv() != reference {
            return Err(format!("preset {name} is not reproducible"));
        }
        checked.push(*name);
    }
    // the binary, end to end
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_haffsim"))
            .args(["simulate", "--preset", "constant-e05", "--seed", "42", "--quiet", "--out"])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("haffsim simulate exited with {status}"));
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(
        outputs[0] == outputs[1],
        format!("byte-identical CSV for {} and for the binary with seed 42", checked.join(", ")),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let runs = Runs {
        constant: run_preset("constant-e05"),
        viscoelastic: run_preset("viscoelastic-a012"),
        monotone: run_preset("monotone"),
        selfsim: run_preset("viscoelastic-selfsim"),
    };
    let checks: Vec<Named> = vec![
        ("Haff law, constant e0 = 0.5", Box::new(|| haff(&runs.constant, (-2.15, -1.85)))),
        ("generalized Haff law, viscoelastic a = 0.12", Box::new(|| haff(&runs.viscoelastic, (-1.82, -1.52)))),
        ("decay exponent, monotone a = 1, eta = 1", Box::new(|| haff(&runs.monotone, (-1.15, -0.85)))),
        ("upper-bound ODE dominates the particle energy", Box::new(|| upper_bound(&runs))),
        ("Povzner constants", Box::new(povzner)),
        ("single-collision invariants", Box::new(micro_collisions)),
        ("viscoelastic restitution solver", Box::new(viscoelastic_solver)),
        ("self-similar temperature stays in a band", Box::new(|| theta_band(&runs.selfsim.1))),
        ("moment ratios bounded", Box::new(|| moment_ratios(&runs))),
        ("exponential tails", Box::new(|| tails(&runs.selfsim.1))),
        ("seeded runs are byte-identical", Box::new(|| determinism(&runs))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{:>2}] {tag} {name}: {detail}", k + 1);
    }
    println!("{} of {} passed in {:.1} s", checks.len() - failed, checks.len(), started.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
