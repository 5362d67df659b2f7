//! Direct simulation Monte Carlo for the spatially homogeneous inelastic
//! Boltzmann equation with hard-sphere rate `|u|`.
//!
//! An ensemble of `N` velocities represents `f = (1/N) sum delta(v - v_i)`.
//! In the weak form every unordered pair collides at rate `|v_i - v_j| / N`;
//! [`step`] samples that process with pairwise thinning: candidate pairs are
//! drawn without replacement and accepted with probability `|u| / U_maj`,
//! where `U_maj = 2 max |v_i|` bounds every relative speed.

mod estimators;
mod series;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::AngularKernel;
use crate::kinematics::collide_sigma;
use crate::par::{self, Execution};
use crate::restitution::RestitutionModel;
use crate::selfsim::{rescale_ensemble, ScalingParams};
use crate::vec3::Vec3;

pub use estimators::{dissipation_rate_estimate, moments, tail_functional, RateEstimate, TailValue};
pub use series::{MomentSeries, Record, RecordErrors};

/// Which variables the stored velocities live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Physical,
    SelfSimilar,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Physical => "physical",
            Mode::SelfSimilar => "selfsimilar",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "physical" => Ok(Mode::Physical),
            "selfsimilar" | "self-similar" => Ok(Mode::SelfSimilar),
            other => Err(Error::InvalidParam(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Isotropic Gaussian with `(1/N) sum |v|^2 = energy`.
    Maxwellian { energy: f64 },
    /// Two Gaussian populations whose temperatures differ by `ratio`; a
    /// fraction `hot_fraction` of the particles is hot.
    TwoTemperature { energy: f64, ratio: f64, hot_fraction: f64 },
    /// Explicit velocities, normalized to `energy` after centering.
    Velocities { velocities: Vec<Vec3>, energy: f64 },
}

impl InitialCondition {
    pub fn energy(&self) -> f64 {
        match *self {
            InitialCondition::Maxwellian { energy }
            | InitialCondition::TwoTemperature { energy, .. }
            | InitialCondition::Velocities { energy, .. } => energy,
        }
    }
}

/// Reads one velocity per line (three columns separated by whitespace or
/// commas, `#` starts a comment).
pub fn read_velocity_file(path: &Path) -> Result<Vec<Vec3>> {
    let text = std::fs::read_to_string(path)?;
    parse_velocities(&text)
}

pub fn parse_velocities(text: &str) -> Result<Vec<Vec3>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if cols.len() != 3 {
            return Err(Error::InvalidParam(format!("line {}: expected 3 columns, found {}", no + 1, cols.len())));
        }
        let mut v = [0.0; 3];
        for (slot, col) in v.iter_mut().zip(&cols) {
            *slot = col
                .parse()
                .map_err(|_| Error::InvalidParam(format!("line {}: `{col}` is not a number", no + 1)))?;
        }
        out.push(Vec3(v));
    }
    Ok(out)
}

/// When records are taken, on the clock of the run's mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecordSchedule {
    /// `count` records spaced evenly in `log(1 + clock)`, plus the start.
    LogSpaced { count: usize },
    /// Every `dt` units of the clock, plus the start and the end.
    Linear { dt: f64 },
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule::LogSpaced { count: 100 }
    }
}

impl RecordSchedule {
    pub fn times(&self, end: f64) -> Result<Vec<f64>> {
        match *self {
            RecordSchedule::LogSpaced { count } => {
                if count == 0 {
                    return Err(Error::InvalidParam("record count must be >= 1".into()));
                }
                let top = end.ln_1p();
                let mut ts: Vec<f64> = (0..=count).map(|k| (top * k as f64 / count as f64).exp_m1()).collect();
                ts[count] = end;
                Ok(ts)
            }
            RecordSchedule::Linear { dt } => {
                if !(dt.is_finite() && dt > 0.0) {
                    return Err(Error::InvalidParam(format!("record dt must be > 0, got {dt}")));
                }
                let n = (end / dt).floor() as usize;
                let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
                if end - ts[n] > 1e-9 * dt {
                    ts.push(end);
                }
                Ok(ts)
            }
        }
    }
}

/// Parameters of the tail functional `(1/N) sum exp(r |w|^s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailParams {
    pub r: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_particles: usize,
    pub restitution: RestitutionModel,
    pub kernel: AngularKernel,
    pub initial: InitialCondition,
    /// Final physical time; self-similar runs stop at `tau(t_end)`.
    pub t_end: f64,
    /// Expected collisions per particle per step.
    pub coll_per_particle_per_step: f64,
    pub record: RecordSchedule,
    pub mode: Mode,
    pub moment_orders: Vec<f64>,
    pub tail: Option<TailParams>,
    pub seed: u64,
}

pub const DEFAULT_MOMENT_ORDERS: [f64; 4] = [0.5, 1.5, 2.0, 3.0];

impl SimConfig {
    /// Unit-energy Maxwellian start, log-spaced records and default orders.
    pub fn new(n_particles: usize, restitution: RestitutionModel, t_end: f64) -> Self {
        Self {
            n_particles,
            restitution,
            kernel: AngularKernel::Isotropic,
            initial: InitialCondition::Maxwellian { energy: 1.0 },
            t_end,
            coll_per_particle_per_step: 0.05,
            record: RecordSchedule::default(),
            mode: Mode::Physical,
            moment_orders: DEFAULT_MOMENT_ORDERS.to_vec(),
            tail: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        let n = match &self.initial {
            InitialCondition::Velocities { velocities, .. } => velocities.len(),
            _ => self.n_particles,
        };
        if n < 2 {
            return bad(format!("need at least 2 particles, got {n}"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be > 0, got {}", self.t_end));
        }
        let target = self.coll_per_particle_per_step;
        if !(target > 0.0 && target < 0.5) {
            return bad(format!("collisions per particle per step must lie in (0, 0.5), got {target}"));
        }
        let e0 = self.initial.energy();
        if !(e0.is_finite() && e0 > 0.0) {
            return bad(format!("initial energy must be > 0, got {e0}"));
        }
        if let InitialCondition::TwoTemperature { ratio, hot_fraction, .. } = self.initial {
            if !(ratio.is_finite() && ratio > 0.0) || !(0.0..=1.0).contains(&hot_fraction) {
                return bad(format!("two-temperature start needs ratio > 0 and hot fraction in [0, 1], got {ratio}, {hot_fraction}"));
            }
        }
        if self.moment_orders.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("moment orders must be finite and >= 0".into());
        }
        if let Some(TailParams { r, s }) = self.tail {
            if !(r.is_finite() && r >= 0.0 && s.is_finite() && s > 0.0) {
                return bad(format!("tail parameters need r >= 0 and s > 0, got r = {r}, s = {s}"));
            }
        }
        self.record.times(1.0)?;
        Ok(())
    }

    pub fn scaling(&self) -> ScalingParams {
        ScalingParams::new(self.restitution)
    }
}

/// A particle ensemble together with its clocks and random stream.
#[derive(Debug, Clone)]
pub struct VelocityEnsemble {
    pub velocities: Vec<Vec3>,
    pub t: f64,
    pub tau: f64,
    pub mode: Mode,
    pub n_collisions: u64,
    scaling: ScalingParams,
    rng: ChaCha8Rng,
    order: Vec<u32>,
}

impl VelocityEnsemble {
    /// A physical-mode ensemble at `t = 0` taken as given (no centering).
    pub fn from_velocities(velocities: Vec<Vec3>, scaling: ScalingParams, rng: ChaCha8Rng) -> Result<Self> {
        if velocities.len() < 2 {
            return Err(Error::InvalidParam(format!("need at least 2 particles, got {}", velocities.len())));
        }
        if velocities.len() > u32::MAX as usize {
            return Err(Error::InvalidParam("too many particles".into()));
        }
        if !velocities.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("velocity"));
        }
        let order = (0..velocities.len() as u32).collect();
        Ok(Self { velocities, t: 0.0, tau: 0.0, mode: Mode::Physical, n_collisions: 0, scaling, rng, order })
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn scaling(&self) -> &ScalingParams {
        &self.scaling
    }

    /// The clock the ensemble advances on: `t` or `tau`.
    pub fn clock(&self) -> f64 {
        match self.mode {
            Mode::Physical => self.t,
            Mode::SelfSimilar => self.tau,
        }
    }

    fn set_clock(&mut self, c: f64) {
        match self.mode {
            Mode::Physical => {
                self.t = c;
                self.tau = self.scaling.tau_of_t(c);
            }
            Mode::SelfSimilar => {
                self.tau = c;
                self.t = self.scaling.zeta(c);
            }
        }
    }

    /// `V(t)`, the factor from physical to stored velocities (1 in physical mode).
    pub fn frame_scale(&self) -> f64 {
        match self.mode {
            Mode::Physical => 1.0,
            Mode::SelfSimilar => self.scaling.v_scale(self.t),
        }
    }

    /// `(1/N) sum |v_i|^2` of the stored velocities.
    pub fn mean_square(&self, exec: Execution) -> f64 {
        par::sum_by(exec, &self.velocities, |v| v.norm_sq()) / self.len() as f64
    }

    /// Physical temperature `E`.
    pub fn energy(&self, exec: Execution) -> f64 {
        let v = self.frame_scale();
        self.mean_square(exec) / (v * v)
    }

    /// Rescaled temperature `Theta = V(t)^2 E`.
    pub fn theta(&self, exec: Execution) -> f64 {
        let v = self.scaling.v_scale(self.t);
        match self.mode {
            Mode::Physical => v * v * self.mean_square(exec),
            Mode::SelfSimilar => self.mean_square(exec),
        }
    }

    pub fn momentum(&self) -> Vec3 {
        self.velocities.iter().fold(Vec3::ZERO, |acc, v| acc + *v)
    }

    pub fn max_speed(&self, exec: Execution) -> f64 {
        par::max_by(exec, &self.velocities, |v| v.norm_sq()).sqrt()
    }

    /// The collision law in force at the current clock.
    pub fn current_model(&self) -> Result<RestitutionModel> {
        match self.mode {
            Mode::Physical => Ok(*self.scaling.base()),
            Mode::SelfSimilar => self.scaling.rescaled_restitution(self.tau),
        }
    }
}

fn stream_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Samples the initial velocities, removes the mean and rescales to the exact
/// configured energy. Uses random stream 0 of the configured seed.
pub fn init_ensemble(config: &SimConfig) -> Result<VelocityEnsemble> {
    init_replica(config, 0)
}

/// As [`init_ensemble`] on random stream `replica`.
pub fn init_replica(config: &SimConfig, replica: u64) -> Result<VelocityEnsemble> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, replica);
    let n = config.n_particles;
    let gaussian = |rng: &mut ChaCha8Rng, sd: f64| {
        let mut c = [0.0; 3];
        for x in &mut c {
            let z: f64 = StandardNormal.sample(rng);
            *x = sd * z;
        }
        Vec3(c)
    };
    let mut velocities: Vec<Vec3> = match &config.initial {
        InitialCondition::Maxwellian { .. } => (0..n).map(|_| gaussian(&mut rng, 1.0)).collect(),
        InitialCondition::TwoTemperature { ratio, hot_fraction, .. } => {
            let hot = (hot_fraction * n as f64).round() as usize;
            let sd_hot = ratio.sqrt();
            (0..n).map(|i| gaussian(&mut rng, if i < hot { sd_hot } else { 1.0 })).collect()
        }
        InitialCondition::Velocities { velocities, .. } => velocities.clone(),
    };
    let len = velocities.len() as f64;
    let mean = velocities.iter().fold(Vec3::ZERO, |a, v| a + *v) / len;
    for v in &mut velocities {
        *v -= mean;
    }
    let e = velocities.iter().map(|v| v.norm_sq()).sum::<f64>() / len;
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::Undefined("initial velocities have zero energy after centering".into()));
    }
    let f = (config.initial.energy() / e).sqrt();
    for v in &mut velocities {
        *v = *v * f;
    }
    let mut ens = VelocityEnsemble::from_velocities(velocities, config.scaling(), rng)?;
    if config.mode == Mode::SelfSimilar {
        ens = rescale_ensemble(ens, &config.scaling());
    }
    Ok(ens)
}

/// Counters for one call of [`step`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub dt: f64,
    pub substeps: u32,
    pub candidates: u64,
    pub accepted: u64,
    /// Majorant of the last substep.
    pub u_maj: f64,
    /// Sum over accepted pairs of the loss of `|v|^2 + |vbar|^2`.
    pub energy_loss: f64,
}

/// Advances the ensemble's clock by `dt`.
///
/// Collisions use `model`; in self-similar mode pass the rescaled law for the
/// current `tau` (see [`VelocityEnsemble::current_model`]), after which the
/// velocities are stretched by the exact drift factor. If `dt U_maj` would
/// exceed one the step is split into equal substeps.
pub fn step(
    ens: &mut VelocityEnsemble,
    dt: f64,
    model: &RestitutionModel,
    kernel: &AngularKernel,
    exec: Execution,
) -> Result<StepStats> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParam(format!("dt must be > 0, got {dt}")));
    }
    let n = ens.len();
    let mut stats = StepStats { dt, ..Default::default() };
    let u_maj = 2.0 * ens.max_speed(exec);
    let pair_factor = (n - 1) as f64 / n as f64;
    let substeps = (u_maj * dt * pair_factor).ceil().max(1.0);
    if substeps > u32::MAX as f64 {
        return Err(Error::StepUnderflow { t: ens.clock() });
    }
    let sub_dt = dt / substeps;
    stats.substeps = substeps as u32;
    for k in 0..stats.substeps {
        let u_maj = if k == 0 { u_maj } else { 2.0 * ens.max_speed(exec) };
        stats.u_maj = u_maj;
        if u_maj == 0.0 {
            // fully condensed: nothing can collide
            continue;
        }
        collide_pairs(ens, sub_dt, u_maj, model, kernel, &mut stats);
    }
    if ens.mode == Mode::SelfSimilar {
        let factor = ens.scaling.drift_factor(ens.tau, dt);
        par::for_each_mut(exec, &mut ens.velocities, |w| *w = *w * factor);
    }
    let c = ens.clock() + dt;
    ens.set_clock(c);
    Ok(stats)
}

/// One thinning sweep. In a uniformly random perfect matching a given pair is
/// matched with probability `1/(N-1)`, so testing each matched pair with
/// probability `|u| dt (N-1)/N` reproduces the pair rate `|u|/N`. The matched
/// pairs that become candidates are a binomial subset, drawn directly by a
/// partial shuffle.
fn collide_pairs(
    ens: &mut VelocityEnsemble,
    dt: f64,
    u_maj: f64,
    model: &RestitutionModel,
    kernel: &AngularKernel,
    stats: &mut StepStats,
) {
    let n = ens.velocities.len();
    let q = (u_maj * dt * (n - 1) as f64 / n as f64).min(1.0);
    let n_pairs = (n / 2) as u64;
    let candidates = Binomial::new(n_pairs, q).map(|b| b.sample(&mut ens.rng)).unwrap_or(n_pairs);
    let rng = &mut ens.rng;
    let order = &mut ens.order;
    let vel = &mut ens.velocities;
    let mut accepted = 0;
    for m in 0..candidates as usize {
        let a = 2 * m;
        let j = rng.random_range(a..n);
        order.swap(a, j);
        let j = rng.random_range(a + 1..n);
        order.swap(a + 1, j);
        let (i, k) = (order[a] as usize, order[a + 1] as usize);
        let (v, vbar) = (vel[i], vel[k]);
        let u = v - vbar;
        let speed = u.norm();
        if rng.random::<f64>() * u_maj >= speed {
            continue;
        }
        let sigma = kernel.sample_sigma(u / speed, rng);
        let out = collide_sigma(v, vbar, sigma, model);
        vel[i] = out.v_prime;
        vel[k] = out.vbar_prime;
        accepted += 1;
        stats.energy_loss += out.energy_loss;
    }
    stats.candidates += candidates;
    stats.accepted += accepted;
    ens.n_collisions += accepted;
}

/// Step size on the run's clock giving `target` expected collisions per
/// particle: the per-particle rate is the mean relative speed, which for a
/// centered ensemble is at most `sqrt(2 <|v|^2>)`.
fn adaptive_dt(ens: &VelocityEnsemble, target: f64, exec: Execution) -> Option<f64> {
    let ms = ens.mean_square(exec);
    (ms > 0.0).then(|| target / (2.0 * ms).sqrt())
}

/// Largest factor by which `dt` may grow from one step to the next.
const DT_GROWTH: f64 = 10.0;

/// Runs one replica (random stream 0).
pub fn simulate(config: &SimConfig, exec: Execution) -> Result<MomentSeries> {
    simulate_replica(config, 0, exec)
}

pub fn simulate_replica(config: &SimConfig, replica: u64, exec: Execution) -> Result<MomentSeries> {
    let mut ens = init_replica(config, replica)?;
    let end = match config.mode {
        Mode::Physical => config.t_end,
        Mode::SelfSimilar => config.scaling().tau_of_t(config.t_end),
    };
    let times = config.record.times(end)?;
    let mut series = MomentSeries::new(config.mode, config.moment_orders.clone(), config.tail);
    let mut prev_dt: Option<f64> = None;
    let mut collisions_before = 0;
    for &target in &times {
        while ens.clock() < target {
            let remaining = target - ens.clock();
            let Some(mut dt) = adaptive_dt(&ens, config.coll_per_particle_per_step, exec) else {
                ens.set_clock(target);
                break;
            };
            if let Some(p) = prev_dt {
                dt = dt.min(DT_GROWTH * p);
            }
            let last = dt >= remaining;
            if last {
                dt = remaining;
            } else {
                prev_dt = Some(dt);
            }
            let model = ens.current_model()?;
            step(&mut ens, dt, &model, &config.kernel, exec)?;
            if last {
                ens.set_clock(target);
            }
        }
        series.push(series::record(&ens, config, exec)?);
        log::trace!("t = {:.6e}, collisions = {}", ens.t, ens.n_collisions - collisions_before);
        collisions_before = ens.n_collisions;
    }
    Ok(series)
}

/// Runs `replicas` independent replicas (streams `0..replicas` of the seed)
/// and merges them record by record in replica order.
pub fn simulate_replicas(config: &SimConfig, replicas: usize, exec: Execution) -> Result<MomentSeries> {
    if replicas == 0 {
        return Err(Error::InvalidParam("replica count must be >= 1".into()));
    }
    let runs = par::map_indexed(exec, replicas, |r| simulate_replica(config, r as u64, exec));
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    MomentSeries::merge(&runs)
}
