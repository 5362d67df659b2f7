use haffsim_core::cooling::{integrate_upper_bound, PsiProfile};
use haffsim_core::dsmc::{
    dissipation_rate_estimate, init_ensemble, moments, simulate, simulate_replicas, step, InitialCondition, Mode,
    RecordSchedule, SimConfig, VelocityEnsemble,
};
use haffsim_core::par::Execution;
use haffsim_core::povzner::moment_rhs;
use haffsim_core::selfsim::rescale_ensemble;
use haffsim_core::{AngularKernel, RestitutionModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEQ: Execution = Execution::Sequential;

fn config(n: usize, model: RestitutionModel, t_end: f64) -> SimConfig {
    let mut c = SimConfig::new(n, model, t_end);
    c.seed = 2024;
    c
}

#[test]
fn elastic_energy_survives_many_steps() {
    let c = config(1000, RestitutionModel::elastic(), 1.0);
    let mut ens = init_ensemble(&c).unwrap();
    let e0 = ens.energy(SEQ);
    let model = RestitutionModel::elastic();
    let mut collisions = 0;
    for _ in 0..100_000 {
        collisions += step(&mut ens, 0.02, &model, &AngularKernel::Isotropic, SEQ).unwrap().accepted;
    }
    assert!(collisions > 1_000_000);
    assert!((ens.energy(SEQ) / e0 - 1.0).abs() < 1e-10);
}

#[test]
fn elastic_series_is_flat() {
    let mut c = config(3000, RestitutionModel::elastic(), 20.0);
    c.record = RecordSchedule::Linear { dt: 2.0 };
    let s = simulate(&c, SEQ).unwrap();
    assert!(s.records.iter().all(|r| (r.energy - 1.0).abs() < 1e-12));
    assert!(s.records.last().unwrap().ncoll > 0);
}

#[test]
fn acceptance_rate_matches_mean_relative_speed() {
    let c = config(2000, RestitutionModel::constant(0.8).unwrap(), 1.0);
    let ens = init_ensemble(&c).unwrap();
    let v = &ens.velocities;
    let n = v.len();
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += (v[i] - v[j]).norm();
        }
    }
    let mean_u = sum / (n * (n - 1) / 2) as f64;
    let u_maj = 2.0 * ens.max_speed(SEQ);
    let p = mean_u / u_maj;
    // a single step from the same state, repeated on fresh streams
    let (mut cand, mut acc) = (0u64, 0u64);
    for r in 0..200 {
        let mut e = VelocityEnsemble::from_velocities(ens.velocities.clone(), c.scaling(), ChaCha8Rng::seed_from_u64(r)).unwrap();
        let s = step(&mut e, 0.5 / u_maj, &c.restitution, &AngularKernel::Isotropic, SEQ).unwrap();
        cand += s.candidates;
        acc += s.accepted;
    }
    let rate = acc as f64 / cand as f64;
    let se = (p * (1.0 - p) / cand as f64).sqrt();
    assert!((rate - p).abs() < 3.0 * se, "rate {rate}, expected {p} +- {se}");
}

#[test]
fn collision_frequency_matches_hard_sphere_rate() {
    // expected accepted collisions per unit time: (1/N) sum_{i<j} |u_ij|
    let c = config(1500, RestitutionModel::elastic(), 1.0);
    let ens = init_ensemble(&c).unwrap();
    let v = &ens.velocities;
    let n = v.len();
    let mut pair_sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pair_sum += (v[i] - v[j]).norm();
        }
    }
    let expected_per_dt = pair_sum / n as f64;
    let dt = 0.01;
    let trials = 400;
    let mut total = 0u64;
    for r in 0..trials {
        let mut e = VelocityEnsemble::from_velocities(v.clone(), c.scaling(), ChaCha8Rng::seed_from_u64(r)).unwrap();
        total += step(&mut e, dt, &c.restitution, &AngularKernel::Isotropic, SEQ).unwrap().accepted;
    }
    let mean = total as f64 / trials as f64;
    let expected = expected_per_dt * dt;
    // counts are close to Poisson
    let se = (expected / trials as f64).sqrt();
    assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
}

#[test]
fn cooling_is_monotone_and_conservative() {
    let mut c = config(5000, RestitutionModel::viscoelastic(0.12).unwrap(), 200.0);
    c.record = RecordSchedule::LogSpaced { count: 40 };
    let s = simulate(&c, SEQ).unwrap();
    assert!(s.records.windows(2).all(|w| w[1].energy <= w[0].energy));
    assert!(s.records.windows(2).all(|w| w[1].ncoll >= w[0].ncoll));
    let mut ens = init_ensemble(&c).unwrap();
    for _ in 0..300 {
        step(&mut ens, 0.01, &c.restitution, &AngularKernel::Isotropic, SEQ).unwrap();
    }
    let scale = ens.len() as f64 * ens.energy(SEQ).sqrt();
    assert!(ens.momentum().norm() < 1e-12 * scale);
}

#[test]
fn dsmc_stays_below_upper_bound() {
    let mut c = config(5000, RestitutionModel::constant(0.5).unwrap(), 100.0);
    c.record = RecordSchedule::LogSpaced { count: 30 };
    let s = simulate(&c, SEQ).unwrap();
    let bound = integrate_upper_bound(&PsiProfile::isotropic(c.restitution), 1.0, &s.times()).unwrap();
    for (r, b) in s.records.iter().zip(bound) {
        assert!(r.energy <= b + 3.0 * r.err.energy, "t = {}: {} > {}", r.t, r.energy, b);
    }
}

#[test]
fn dissipation_rate_bounds_and_finite_difference() {
    let model = RestitutionModel::constant(0.5).unwrap();
    let profile = PsiProfile::isotropic(model);
    let c = config(20_000, model, 1.0);
    let ens = init_ensemble(&c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let est = dissipation_rate_estimate(&ens.velocities, &profile, 20_000, &mut rng, SEQ).unwrap();
    let e = ens.energy(SEQ);
    assert!(est.rate >= profile.psi(e).unwrap() - 3.0 * est.stderr);

    // the particle system loses energy at ((N-1)/N) times the pair average
    let h = 0.02;
    let reps = 16;
    let mut drops = Vec::new();
    for r in 0..reps {
        let mut e1 = VelocityEnsemble::from_velocities(ens.velocities.clone(), c.scaling(), ChaCha8Rng::seed_from_u64(100 + r)).unwrap();
        for _ in 0..4 {
            step(&mut e1, h / 4.0, &model, &AngularKernel::Isotropic, SEQ).unwrap();
        }
        drops.push((e - e1.energy(SEQ)) / h);
    }
    let mean = drops.iter().sum::<f64>() / reps as f64;
    let sd = (drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let fd_se = sd / (reps as f64).sqrt();
    let n = ens.len() as f64;
    let predicted = est.rate * (n - 1.0) / n;
    // the curvature bias of a forward difference over h is well below the noise here
    let combined = (fd_se.powi(2) + est.stderr.powi(2)).sqrt();
    assert!((mean - predicted).abs() < 3.0 * combined, "fd {mean} +- {fd_se}, estimate {predicted} +- {}", est.stderr);
}

#[test]
fn povzner_bound_dominates_moment_growth() {
    let model = RestitutionModel::constant(0.7).unwrap();
    let c = config(20_000, model, 1.0);
    let ens = init_ensemble(&c).unwrap();
    let orders = [0.5, 1.0, 1.5, 2.0, 2.5];
    let mv = moments(&ens.velocities, &orders, SEQ).unwrap();
    let bound = moment_rhs(&mv, 2.0, &AngularKernel::Isotropic).unwrap();
    let h = 0.02;
    let reps = 12;
    let mut rates = Vec::new();
    for r in 0..reps {
        let mut e1 = VelocityEnsemble::from_velocities(ens.velocities.clone(), c.scaling(), ChaCha8Rng::seed_from_u64(r)).unwrap();
        for _ in 0..4 {
            step(&mut e1, h / 4.0, &model, &AngularKernel::Isotropic, SEQ).unwrap();
        }
        let m2 = moments(&e1.velocities, &[2.0], SEQ).unwrap().get(2.0).unwrap();
        rates.push((m2 - mv.get(2.0).unwrap()) / h);
    }
    let mean = rates.iter().sum::<f64>() / reps as f64;
    let sd = (rates.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    assert!(mean <= bound + 3.0 * sd / (reps as f64).sqrt(), "dm2/dt = {mean}, bound {bound}");
}

#[test]
fn rescaling_round_trip_and_theta_identity() {
    let c = config(4000, RestitutionModel::viscoelastic(0.12).unwrap(), 1.0);
    let mut ens = init_ensemble(&c).unwrap();
    for _ in 0..50 {
        step(&mut ens, 0.05, &c.restitution, &AngularKernel::Isotropic, SEQ).unwrap();
    }
    let params = c.scaling();
    let before = ens.clone();
    let e_before = ens.energy(SEQ);
    let v = params.v_scale(ens.t);
    let ss = rescale_ensemble(ens, &params);
    assert_eq!(ss.mode, Mode::SelfSimilar);
    assert!((ss.mean_square(SEQ) / (v * v * e_before) - 1.0).abs() < 1e-14);
    assert!((ss.energy(SEQ) / e_before - 1.0).abs() < 1e-14);
    let back = rescale_ensemble(ss, &params);
    assert_eq!(back.mode, Mode::Physical);
    assert!((back.t - before.t).abs() < 1e-12 * before.t);
    for (a, b) in back.velocities.iter().zip(&before.velocities) {
        assert!((*a - *b).norm() < 1e-12 * (1.0 + b.norm()));
    }
    // at t = 0 the map is the identity
    let fresh = init_ensemble(&c).unwrap();
    assert_eq!(rescale_ensemble(fresh.clone(), &params).velocities, fresh.velocities);
}

#[test]
fn self_similar_run_reports_physical_energy() {
    let mut phys = config(6000, RestitutionModel::viscoelastic(0.12).unwrap(), 50.0);
    phys.record = RecordSchedule::LogSpaced { count: 10 };
    let mut ss = phys.clone();
    ss.mode = Mode::SelfSimilar;
    let a = simulate(&phys, SEQ).unwrap();
    let b = simulate(&ss, SEQ).unwrap();
    let (ea, eb) = (a.records.last().unwrap(), b.records.last().unwrap());
    assert!((eb.t / 50.0 - 1.0).abs() < 1e-12);
    // the two discretizations agree statistically at the end of the run
    assert!((ea.energy / eb.energy - 1.0).abs() < 0.05, "{} vs {}", ea.energy, eb.energy);
    let v = ss.scaling().v_scale(eb.t);
    assert!((eb.theta / (v * v * eb.energy) - 1.0).abs() < 1e-14);
}

#[test]
fn replicas_merge_deterministically() {
    let mut c = config(3000, RestitutionModel::constant(0.5).unwrap(), 5.0);
    c.record = RecordSchedule::LogSpaced { count: 6 };
    let a = simulate_replicas(&c, 3, Execution::Parallel).unwrap();
    let b = simulate_replicas(&c, 3, SEQ).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.stderr_csv(), b.stderr_csv());
    assert_eq!(a.replicas, 3);
    assert!(a.records[3].err.energy > 0.0);
}

#[test]
fn file_initial_condition() {
    let text = "# vx vy vz\n1 0 0\n-1 0 0\n0, 2, 0\n0 -2 0\n";
    let vs = haffsim_core::dsmc::parse_velocities(text).unwrap();
    let mut c = config(2, RestitutionModel::constant(0.5).unwrap(), 1.0);
    c.initial = InitialCondition::Velocities { velocities: vs, energy: 3.0 };
    let ens = init_ensemble(&c).unwrap();
    assert_eq!(ens.len(), 4);
    assert!((ens.energy(SEQ) - 3.0).abs() < 1e-14);
    assert!(haffsim_core::dsmc::parse_velocities("1 2\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_conserve_momentum_and_never_heat(seed in 0u64..1000, e0 in 0.05f64..1.0, n in 2usize..300) {
        let mut c = config(n, RestitutionModel::constant(e0).unwrap(), 1.0);
        c.seed = seed;
        let mut ens = init_ensemble(&c).unwrap();
        let p0 = ens.momentum();
        let scale = n as f64 * ens.energy(SEQ).sqrt();
        let mut e = ens.energy(SEQ);
        for _ in 0..20 {
            step(&mut ens, 0.05, &c.restitution, &AngularKernel::Isotropic, SEQ).unwrap();
            let e_new = ens.energy(SEQ);
            prop_assert!(e_new <= e * (1.0 + 1e-14));
            e = e_new;
        }
        prop_assert!((ens.momentum() - p0).norm() <= 1e-12 * scale);
        prop_assert_eq!(ens.len(), n);
    }

    #[test]
    fn identical_seeds_give_identical_series(seed in 0u64..1_000_000) {
        let mut c = config(400, RestitutionModel::monotone(1.0, 1.0).unwrap(), 3.0);
        c.seed = seed;
        c.record = RecordSchedule::LogSpaced { count: 4 };
        prop_assert_eq!(simulate(&c, SEQ).unwrap().to_csv(), simulate(&c, Execution::Parallel).unwrap().to_csv());
    }
}
