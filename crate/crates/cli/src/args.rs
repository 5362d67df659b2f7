use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "haffsim", version = env!("HAFFSIM_VERSION"), about = "Cooling of granular gases: DSMC runs, fits and tables")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Global {
    /// Run configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Named preset instead of a configuration file.
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    pub preset: Option<String>,

    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Output path (series CSV or table).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Overrides the configured replica count.
    #[arg(long, global = true, value_name = "N")]
    pub replicas: Option<usize>,

    /// Only print results and errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the particle simulation and write the moment series.
    Simulate {
        /// SVG chart; per-curve data files are written next to it.
        #[arg(long, value_name = "PATH")]
        plot: Option<PathBuf>,
    },
    /// Simulate, fit the energy decay and compare with the upper-bound ODE.
    HaffCheck,
    /// Fit a power law to one column of a series CSV.
    Fit {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, default_value = "E")]
        column: String,
        /// Fit window `lo,hi` in t; defaults to the last two decades.
        #[arg(long, value_parser = parse_pair)]
        window: Option<(f64, f64)>,
        /// Small-impact exponent for the target; read from the config otherwise.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Renormalized moments and the tail certificate from a series CSV.
    Tails {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
    },
    /// Povzner constants and their Hölder bound.
    Kappa {
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,3,5,10")]
        p_list: Vec<f64>,
        /// Tabulated angular kernel; isotropic otherwise.
        #[arg(long, value_name = "PATH")]
        kernel: Option<PathBuf>,
        /// Use the generic angular quadrature even for the isotropic kernel.
        #[arg(long)]
        quadrature: bool,
        /// Lebesgue exponent of the kernel norm in the bound.
        #[arg(long, default_value_t = f64::INFINITY)]
        q: f64,
    },
    /// Tabulate the dissipation functional and its two power laws.
    PsiTable {
        #[arg(long, default_value_t = 1e-6)]
        xmin: f64,
        #[arg(long, default_value_t = 1e6)]
        xmax: f64,
        #[arg(long, default_value_t = 8)]
        per_decade: usize,
    },
    /// Tabulate e(r) on a uniform grid of [0, rmax].
    RestitutionTable {
        /// Law; read from the config when omitted.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        e0: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        rmax: f64,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi] => Ok((lo.parse().map_err(|_| format!("`{lo}` is not a number"))?, hi.parse().map_err(|_| format!("`{hi}` is not a number"))?)),
        _ => Err(format!("expected `lo,hi`, got `{s}`")),
    }
}
