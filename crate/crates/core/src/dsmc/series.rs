use std::fmt::Write as _;

use super::estimators::{mean_and_stderr, speed_power};
use super::{Mode, SimConfig, TailParams, VelocityEnsemble};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::povzner::MomentVector;

/// Standard errors of the fields of a [`Record`]. Within a single run they
/// are sampling errors over particles; after [`MomentSeries::merge`] they are
/// the spread of the replica means.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordErrors {
    pub energy: f64,
    pub theta: f64,
    pub moments: Vec<f64>,
    pub tail: Option<f64>,
}

/// One row of a [`MomentSeries`]. Moments are physical,
/// `m_p = (1/N) sum |v_i|^(2p)`; their self-similar counterparts follow from
/// `V^2 = theta / energy`.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    pub tau: f64,
    pub energy: f64,
    pub theta: f64,
    pub moments: Vec<f64>,
    /// Tail functional of the stored velocities.
    pub tail: Option<f64>,
    pub ncoll: u64,
    pub err: RecordErrors,
}

impl Record {
    /// `V(t)^(2p) m_p`, the moment of the rescaled velocities.
    pub fn rescaled_moment(&self, k: usize, p: f64) -> f64 {
        self.moments[k] * (self.theta / self.energy).powf(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub mode: Mode,
    pub orders: Vec<f64>,
    pub tail: Option<TailParams>,
    pub records: Vec<Record>,
    /// Number of merged replicas.
    pub replicas: usize,
}

pub(super) fn record(ens: &VelocityEnsemble, config: &SimConfig, exec: Execution) -> Result<Record> {
    let vel = &ens.velocities;
    let scale = ens.frame_scale();
    let (ms, ms_err) = mean_and_stderr(exec, vel, |v| v.norm_sq());
    let v2 = scale * scale;
    let big_v = ens.scaling().v_scale(ens.t);
    let (energy, energy_err) = (ms / v2, ms_err / v2);
    let theta_factor = big_v * big_v;
    let mut moments = Vec::with_capacity(config.moment_orders.len());
    let mut moment_errs = Vec::with_capacity(config.moment_orders.len());
    for &p in &config.moment_orders {
        if p == 0.0 {
            moments.push(1.0);
            moment_errs.push(0.0);
            continue;
        }
        let (m, se) = mean_and_stderr(exec, vel, |v| speed_power(v, p));
        let back = scale.powf(2.0 * p);
        moments.push(m / back);
        moment_errs.push(se / back);
    }
    let (tail, tail_err) = match config.tail {
        Some(TailParams { r, s }) => {
            let (m, se) = mean_and_stderr(exec, vel, |v| (r * v.norm_sq().powf(0.5 * s)).exp());
            if m.is_finite() {
                (Some(m), Some(se))
            } else {
                log::warn!("tail functional overflowed at t = {}", ens.t);
                (Some(f64::INFINITY), Some(f64::INFINITY))
            }
        }
        None => (None, None),
    };
    Ok(Record {
        t: ens.t,
        tau: ens.tau,
        energy,
        theta: theta_factor * energy,
        moments,
        tail,
        ncoll: ens.n_collisions,
        err: RecordErrors { energy: energy_err, theta: theta_factor * energy_err, moments: moment_errs, tail: tail_err },
    })
}

fn order_label(p: f64) -> String {
    format!("m_{p}")
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl MomentSeries {
    pub fn new(mode: Mode, orders: Vec<f64>, tail: Option<TailParams>) -> Self {
        Self { mode, orders, tail, records: Vec::new(), replicas: 1 }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau).collect()
    }

    pub fn order_index(&self, p: f64) -> Option<usize> {
        self.orders.iter().position(|q| (q - p).abs() < 1e-12)
    }

    /// Column names in CSV order.
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "tau", "E", "theta"].iter().map(|s| s.to_string()).collect();
        h.extend(self.orders.iter().map(|&p| order_label(p)));
        if self.has_tail() {
            h.push("tail".into());
        }
        h.push("ncoll".into());
        h
    }

    fn has_tail(&self) -> bool {
        self.records.first().map_or(self.tail.is_some(), |r| r.tail.is_some())
    }

    /// A column by its CSV name (`ncoll` is returned as floating point).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let get: Box<dyn Fn(&Record) -> f64> = match name {
            "t" => Box::new(|r| r.t),
            "tau" => Box::new(|r| r.tau),
            "E" => Box::new(|r| r.energy),
            "theta" => Box::new(|r| r.theta),
            "ncoll" => Box::new(|r| r.ncoll as f64),
            "tail" if self.has_tail() => Box::new(|r| r.tail.unwrap_or(f64::NAN)),
            _ => {
                let k = self.orders.iter().position(|&p| order_label(p) == name)?;
                Box::new(move |r| r.moments[k])
            }
        };
        Some(self.records.iter().map(get).collect())
    }

    /// Moment vectors of the rescaled velocities, one per record, keyed by `tau`.
    pub fn rescaled_moment_table(&self) -> Vec<(f64, MomentVector)> {
        self.records
            .iter()
            .map(|r| {
                let mv = MomentVector::from_pairs(self.orders.iter().enumerate().map(|(k, &p)| (p, r.rescaled_moment(k, p))));
                (r.tau, mv)
            })
            .collect()
    }

    fn rows(&self, pick: impl Fn(&Record) -> Vec<String>) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in &self.records {
            out.push_str(&pick(r).join(","));
            out.push('\n');
        }
        out
    }

    /// CSV text: 17 significant digits, `\n` line ends.
    pub fn to_csv(&self) -> String {
        let tail = self.has_tail();
        self.rows(|r| {
            let mut row = vec![num(r.t), num(r.tau), num(r.energy), num(r.theta)];
            row.extend(r.moments.iter().map(|&m| num(m)));
            if tail {
                row.push(num(r.tail.unwrap_or(f64::NAN)));
            }
            row.push(r.ncoll.to_string());
            row
        })
    }

    /// Same layout as [`to_csv`](Self::to_csv) with standard errors in place of
    /// the values; the clock columns are repeated and `ncoll` is zero.
    pub fn stderr_csv(&self) -> String {
        let tail = self.has_tail();
        self.rows(|r| {
            let mut row = vec![num(r.t), num(r.tau), num(r.err.energy), num(r.err.theta)];
            row.extend(r.err.moments.iter().map(|&m| num(m)));
            if tail {
                row.push(num(r.err.tail.unwrap_or(f64::NAN)));
            }
            row.push("0".into());
            row
        })
    }

    /// Parses the output of [`to_csv`](Self::to_csv). Errors are not stored
    /// in that file and come back as zero; the mode is taken as physical.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::InvalidParam("empty series file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let fixed = ["t", "tau", "E", "theta"];
        if cols.len() < 5 || cols[..4] != fixed || cols.last() != Some(&"ncoll") {
            return Err(Error::InvalidParam(format!("unexpected series header `{header}`")));
        }
        let mid = &cols[4..cols.len() - 1];
        let has_tail = mid.last() == Some(&"tail");
        let moment_cols = if has_tail { &mid[..mid.len() - 1] } else { mid };
        let orders = moment_cols
            .iter()
            .map(|c| {
                c.strip_prefix("m_")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidParam(format!("bad moment column `{c}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut series = MomentSeries::new(Mode::Physical, orders, None);
        for (no, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::InvalidParam(format!("line {}: expected {} fields, found {}", no + 1, cols.len(), fields.len())));
            }
            let val = |k: usize| -> Result<f64> {
                fields[k].parse::<f64>().map_err(|_| Error::InvalidParam(format!("line {}: `{}` is not a number", no + 1, fields[k])))
            };
            let nm = series.orders.len();
            let moments = (0..nm).map(|k| val(4 + k)).collect::<Result<Vec<f64>>>()?;
            let tail = if has_tail { Some(val(4 + nm)?) } else { None };
            let ncoll = fields[cols.len() - 1]
                .parse::<u64>()
                .map_err(|_| Error::InvalidParam(format!("line {}: bad collision count", no + 1)))?;
            series.push(Record {
                t: val(0)?,
                tau: val(1)?,
                energy: val(2)?,
                theta: val(3)?,
                err: RecordErrors { moments: vec![0.0; nm], tail: tail.map(|_| 0.0), ..Default::default() },
                moments,
                tail,
                ncoll,
            });
        }
        Ok(series)
    }

    /// Averages replicas record by record. Standard errors are the standard
    /// deviation of the replica values over `sqrt(R)`; `ncoll` is the total.
    pub fn merge(runs: &[MomentSeries]) -> Result<MomentSeries> {
        let first = runs.first().ok_or_else(|| Error::InvalidParam("nothing to merge".into()))?;
        if runs.len() == 1 {
            return Ok(first.clone());
        }
        let aligned = runs.iter().all(|s| {
            s.orders == first.orders
                && s.records.len() == first.records.len()
                && s.records.iter().zip(&first.records).all(|(a, b)| a.t == b.t && a.tau == b.tau)
        });
        if !aligned {
            return Err(Error::InvalidParam("replica series are not aligned".into()));
        }
        let rn = runs.len() as f64;
        let stats = |xs: &[f64]| -> (f64, f64) {
            let mean = xs.iter().sum::<f64>() / rn;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (rn - 1.0);
            (mean, (var / rn).sqrt())
        };
        let mut merged = MomentSeries::new(first.mode, first.orders.clone(), first.tail);
        merged.replicas = runs.iter().map(|s| s.replicas).sum();
        for (k, base) in first.records.iter().enumerate() {
            let field = |f: &dyn Fn(&Record) -> f64| stats(&runs.iter().map(|s| f(&s.records[k])).collect::<Vec<_>>());
            let (energy, energy_err) = field(&|r| r.energy);
            let (theta, theta_err) = field(&|r| r.theta);
            let (moments, moment_errs): (Vec<f64>, Vec<f64>) =
                (0..first.orders.len()).map(|j| field(&|r| r.moments[j])).unzip();
            let tail = base.tail.map(|_| field(&|r| r.tail.unwrap_or(f64::NAN)));
            merged.push(Record {
                t: base.t,
                tau: base.tau,
                energy,
                theta,
                moments,
                tail: tail.map(|t| t.0),
                ncoll: runs.iter().map(|s| s.records[k].ncoll).sum(),
                err: RecordErrors { energy: energy_err, theta: theta_err, moments: moment_errs, tail: tail.map(|t| t.1) },
            });
        }
        Ok(merged)
    }

    /// Two-column `x y` text for plotting one column against `t`.
    pub fn plot_data(&self, column: &str) -> Option<String> {
        let ys = self.column(column)?;
        let mut out = format!("# t {column}\n");
        for (t, y) in self.times().iter().zip(ys) {
            let _ = writeln!(out, "{} {}", num(*t), num(y));
        }
        Some(out)
    }
}
