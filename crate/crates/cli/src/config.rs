//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use haffsim_core::dsmc::{
    read_velocity_file, InitialCondition, Mode, RecordSchedule, SimConfig, TailParams, DEFAULT_MOMENT_ORDERS,
};
use haffsim_core::restitution::RestitutionKind;
use haffsim_core::{AngularKernel, RestitutionModel};

use crate::error::CliError;

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "restitution.kind",
    "restitution.e0",
    "restitution.a",
    "restitution.eta",
    "kernel.file",
    "particles.n",
    "time.t_end",
    "time.coll_per_particle_per_step",
    "initial.kind",
    "initial.energy",
    "initial.ratio",
    "initial.hot_fraction",
    "initial.file",
    "record.kind",
    "record.count",
    "record.dt",
    "mode",
    "moment_orders",
    "tail.r",
    "tail.s",
    "seed",
    "replicas",
    "output.series",
    "output.plot",
    "fit.window",
    "check.band",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Maxwellian,
    TwoTemperature,
    File,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub initial_kind: InitialKind,
    pub initial_file: Option<PathBuf>,
    pub kernel_file: Option<PathBuf>,
    pub replicas: usize,
    pub series_out: Option<PathBuf>,
    pub plot_out: Option<PathBuf>,
    pub fit_window: Option<(f64, f64)>,
    /// Accepted range of the fitted exponent; defaults to the target +- 0.15.
    pub band: Option<(f64, f64)>,
}

struct Entry {
    value: String,
    line: usize,
}

struct Table {
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("line {}: `{key}` expects {what}, got `{}`", e.line, e.value))
            }),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.parse::<f64>(key, "a number")
    }

    fn required<T>(&self, key: &str, v: Option<T>, context: &str) -> Result<T, CliError> {
        v.ok_or_else(|| CliError::Config(format!("missing required key `{key}`{context}")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(e) = self.raw(key) else { return Ok(None) };
        e.value
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    CliError::Config(format!("line {}: `{key}` expects a comma-separated list of numbers, got `{}`", e.line, e.value))
                })
            })
            .collect::<Result<Vec<f64>, _>>()
            .map(Some)
    }

    fn pair(&self, key: &str) -> Result<Option<(f64, f64)>, CliError> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(_) => {
                let line = self.raw(key).map_or(0, |e| e.line);
                Err(CliError::Config(format!("line {line}: `{key}` expects two numbers `lo, hi`")))
            }
        }
    }

    fn forbid(&self, keys: &[&str], context: &str) -> Result<(), CliError> {
        match keys.iter().find(|k| self.has(k)) {
            Some(k) => {
                let line = self.raw(k).map_or(0, |e| e.line);
                Err(CliError::Config(format!("line {line}: `{k}` does not apply {context}")))
            }
            None => Ok(()),
        }
    }
}

fn tokenize(text: &str) -> Result<Table, CliError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {line}: expected `key = value`, got `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("line {line}: unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(CliError::Config(format!("line {line}: `{key}` has no value")));
        }
        if let Some(prev) = entries.get(key) {
            return Err(CliError::Config(format!("duplicate key `{key}` on lines {} and {line}", prev.line)));
        }
        entries.insert(key.to_string(), Entry { value: value.to_string(), line });
    }
    Ok(Table { entries })
}

fn restitution(t: &Table) -> Result<RestitutionModel, CliError> {
    let kind_entry = t.raw("restitution.kind");
    let kind: RestitutionKind = t
        .required("restitution.kind", kind_entry, "")?
        .value
        .parse()
        .map_err(|e| CliError::Config(format!("line {}: {e}", kind_entry.map_or(0, |e| e.line))))?;
    let model = match kind {
        RestitutionKind::Constant => {
            t.forbid(&["restitution.a", "restitution.eta"], "to the constant kind")?;
            let e0 = t.required("restitution.e0", t.float("restitution.e0")?, " for restitution.kind = constant")?;
            RestitutionModel::constant(e0)
        }
        RestitutionKind::MonotoneDecreasing => {
            t.forbid(&["restitution.e0"], "to the monotone kind")?;
            let a = t.required("restitution.a", t.float("restitution.a")?, " for restitution.kind = monotone")?;
            let eta = t.required("restitution.eta", t.float("restitution.eta")?, " for restitution.kind = monotone")?;
            RestitutionModel::monotone(a, eta)
        }
        RestitutionKind::Viscoelastic => {
            t.forbid(&["restitution.e0", "restitution.eta"], "to the viscoelastic kind")?;
            let a = t.required("restitution.a", t.float("restitution.a")?, " for restitution.kind = viscoelastic")?;
            RestitutionModel::viscoelastic(a)
        }
    };
    model.map_err(|e| CliError::Config(e.to_string()))
}

/// Parses configuration text. Files named by `initial.file` and
/// `kernel.file` are read later by [`RunConfig::resolve`].
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let t = tokenize(text)?;
    let model = restitution(&t)?;
    let n: usize = t.required("particles.n", t.parse("particles.n", "a positive integer")?, "")?;
    let t_end = t.required("time.t_end", t.float("time.t_end")?, "")?;
    let mut sim = SimConfig::new(n, model, t_end);

    if let Some(x) = t.float("time.coll_per_particle_per_step")? {
        sim.coll_per_particle_per_step = x;
    }
    let energy = t.float("initial.energy")?.unwrap_or(1.0);
    let kind = match t.raw("initial.kind").map(|e| (e.value.as_str(), e.line)) {
        None | Some(("maxwellian", _)) => InitialKind::Maxwellian,
        Some(("two-temperature", _)) => InitialKind::TwoTemperature,
        Some(("file", _)) => InitialKind::File,
        Some((other, line)) => {
            return Err(CliError::Config(format!(
                "line {line}: `initial.kind` expects maxwellian, two-temperature or file, got `{other}`"
            )))
        }
    };
    if kind != InitialKind::TwoTemperature {
        t.forbid(&["initial.ratio", "initial.hot_fraction"], "unless initial.kind = two-temperature")?;
    }
    if kind != InitialKind::File {
        t.forbid(&["initial.file"], "unless initial.kind = file")?;
    }
    sim.initial = match kind {
        InitialKind::Maxwellian | InitialKind::File => InitialCondition::Maxwellian { energy },
        InitialKind::TwoTemperature => InitialCondition::TwoTemperature {
            energy,
            ratio: t.float("initial.ratio")?.unwrap_or(4.0),
            hot_fraction: t.float("initial.hot_fraction")?.unwrap_or(0.5),
        },
    };
    let initial_file = t.raw("initial.file").map(|e| PathBuf::from(&e.value));
    if kind == InitialKind::File && initial_file.is_none() {
        return Err(CliError::Config("missing required key `initial.file` for initial.kind = file".into()));
    }

    sim.record = match t.raw("record.kind").map(|e| (e.value.as_str(), e.line)) {
        None | Some(("log", _)) => {
            t.forbid(&["record.dt"], "to log-spaced records")?;
            RecordSchedule::LogSpaced { count: t.parse("record.count", "a positive integer")?.unwrap_or(100) }
        }
        Some(("linear", _)) => {
            t.forbid(&["record.count"], "to linear records")?;
            let dt = t.required("record.dt", t.float("record.dt")?, " for record.kind = linear")?;
            RecordSchedule::Linear { dt }
        }
        Some((other, line)) => {
            return Err(CliError::Config(format!("line {line}: `record.kind` expects log or linear, got `{other}`")))
        }
    };
    if let Some(e) = t.raw("mode") {
        sim.mode = e.value.parse::<Mode>().map_err(|err| CliError::Config(format!("line {}: {err}", e.line)))?;
    }
    sim.moment_orders = t.list("moment_orders")?.unwrap_or_else(|| DEFAULT_MOMENT_ORDERS.to_vec());
    sim.tail = match (t.float("tail.r")?, t.float("tail.s")?) {
        (Some(r), Some(s)) => Some(TailParams { r, s }),
        (None, None) => None,
        _ => return Err(CliError::Config("`tail.r` and `tail.s` must be given together".into())),
    };
    sim.seed = t.parse("seed", "an unsigned integer")?.unwrap_or(0);
    let replicas = t.parse("replicas", "a positive integer")?.unwrap_or(1);
    if replicas == 0 {
        return Err(CliError::Config("`replicas` must be >= 1".into()));
    }
    let run = RunConfig {
        sim,
        initial_kind: kind,
        initial_file,
        kernel_file: t.raw("kernel.file").map(|e| PathBuf::from(&e.value)),
        replicas,
        series_out: t.raw("output.series").map(|e| PathBuf::from(&e.value)),
        plot_out: t.raw("output.plot").map(|e| PathBuf::from(&e.value)),
        fit_window: t.pair("fit.window")?,
        band: t.pair("check.band")?,
    };
    if kind != InitialKind::File {
        run.sim.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(run)
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Loads the velocity and kernel files the configuration refers to.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        if let Some(path) = &self.kernel_file {
            self.sim.kernel = AngularKernel::from_file(path)
                .map_err(|e| CliError::Config(format!("kernel file {}: {e}", path.display())))?;
        }
        if self.initial_kind == InitialKind::File {
            let path = self.initial_file.as_ref().expect("checked at parse time");
            let velocities =
                read_velocity_file(path).map_err(|e| CliError::Config(format!("initial file {}: {e}", path.display())))?;
            self.sim.n_particles = velocities.len();
            self.sim.initial = InitialCondition::Velocities { velocities, energy: self.sim.initial.energy() };
        }
        self.sim.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Canonical configuration text; parsing it gives back this configuration.
    pub fn to_config_text(&self) -> String {
        let s = &self.sim;
        let m = &s.restitution;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("restitution.kind", m.kind().as_str().to_string());
        if let Some(e0) = m.e0() {
            kv("restitution.e0", e0.to_string());
        }
        if let Some(a) = m.a() {
            kv("restitution.a", a.to_string());
        }
        if let Some(eta) = m.eta() {
            kv("restitution.eta", eta.to_string());
        }
        if let Some(p) = &self.kernel_file {
            kv("kernel.file", p.display().to_string());
        }
        kv("particles.n", s.n_particles.to_string());
        kv("time.t_end", s.t_end.to_string());
        kv("time.coll_per_particle_per_step", s.coll_per_particle_per_step.to_string());
        match &s.initial {
            InitialCondition::TwoTemperature { ratio, hot_fraction, .. } => {
                kv("initial.kind", "two-temperature".into());
                kv("initial.ratio", ratio.to_string());
                kv("initial.hot_fraction", hot_fraction.to_string());
            }
            _ if self.initial_kind == InitialKind::File => {
                kv("initial.kind", "file".into());
                if let Some(p) = &self.initial_file {
                    kv("initial.file", p.display().to_string());
                }
            }
            _ => kv("initial.kind", "maxwellian".into()),
        }
        kv("initial.energy", s.initial.energy().to_string());
        match s.record {
            RecordSchedule::LogSpaced { count } => {
                kv("record.kind", "log".into());
                kv("record.count", count.to_string());
            }
            RecordSchedule::Linear { dt } => {
                kv("record.kind", "linear".into());
                kv("record.dt", dt.to_string());
            }
        }
        kv("mode", s.mode.as_str().into());
        kv("moment_orders", join(&s.moment_orders));
        if let Some(TailParams { r, s }) = s.tail {
            kv("tail.r", r.to_string());
            kv("tail.s", s.to_string());
        }
        kv("seed", s.seed.to_string());
        kv("replicas", self.replicas.to_string());
        if let Some(p) = &self.series_out {
            kv("output.series", p.display().to_string());
        }
        if let Some(p) = &self.plot_out {
            kv("output.plot", p.display().to_string());
        }
        if let Some((lo, hi)) = self.fit_window {
            kv("fit.window", join(&[lo, hi]));
        }
        if let Some((lo, hi)) = self.band {
            kv("check.band", join(&[lo, hi]));
        }
        out
    }
}
