//! Command line front end.
//!
//! Every subcommand except `mi-bound` reads a source description file
//! and prints an ordered `key = value` document to stdout. Exit codes:
//! 0 success, 1 usage, 2 bad source description or parameters, 3
//! enumeration or memory budget exceeded.

use crate::capacity::{
    degraded_capacity, degraded_identity_check, mi_continuity_bound, multi_letter_rate,
    quantize_family, rate_lower_bound, rate_shift_bound, SearchConfig,
};
use crate::error::{Error, Result};
use crate::extraction::SecurityMode;
use crate::protocol::{run_protocol, sweep, AuxSelect, ProtocolConfig, SweepAxis};
use crate::report::{
    render_degraded, render_mi_bound, render_multi_letter, render_protocol, render_quantized,
    render_rate, sig12, sweep_csv, Document,
};
use crate::source::check_degraded;
use crate::sourcefile::load_source_spec;
use crate::typicality::TypicalityParams;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

fn parse_gamma(s: &str) -> std::result::Result<f64, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_nan() || v < 0.0 {
        return Err(format!("budget must be nonnegative or inf, got {s}"));
    }
    Ok(v)
}

#[derive(Parser)]
#[command(
    name = "skgen",
    version,
    about = "Secret-key generation from compound correlated sources"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact key capacity; valid when every in-class pair is degraded
    Capacity {
        /// Source description file
        source: PathBuf,
    },
    /// General lower bound via auxiliary channel search
    LowerBound {
        source: PathBuf,
        /// Public communication budget per letter; "inf" lifts it
        #[arg(long, value_parser = parse_gamma, default_value = "inf")]
        gamma: f64,
        /// Outer auxiliary alphabet size; 0 picks |X| + 1
        #[arg(long, default_value_t = 0)]
        u_size: usize,
        /// Inner auxiliary alphabet size; 0 picks |X| + 1
        #[arg(long, default_value_t = 0)]
        v_size: usize,
        /// Denominator of the binary seeding grid
        #[arg(long, default_value_t = 32)]
        grid: u32,
        /// Random restarts per class
        #[arg(long, default_value_t = 6)]
        restarts: u32,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
    /// Per-letter value of the bound on n-letter blocks
    MultiLetter {
        source: PathBuf,
        /// Letters per block
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
    /// End-to-end key generation runs
    Simulate {
        source: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Degradedness witnesses and the converse identity per state pair
    CheckDegraded { source: PathBuf },
    /// Snap searched auxiliary channels to a finite grid
    Quantize {
        source: PathBuf,
        /// Grid denominator; must be at least twice the squared outer
        /// alphabet size
        #[arg(long)]
        l: u64,
        #[arg(long, value_parser = parse_gamma, default_value = "inf")]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        u_size: usize,
        #[arg(long, default_value_t = 0)]
        v_size: usize,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
    /// Bound on mutual-information shift under a distribution change;
    /// operates on alphabet sizes alone
    MiBound {
        /// Statistical distance between the two joint laws
        #[arg(long)]
        gamma_param: f64,
        #[arg(long)]
        x_size: usize,
        #[arg(long)]
        y_size: usize,
    },
    /// Rerun the simulation along one axis and tabulate
    Sweep {
        source: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum)]
        axis: AxisKind,
        /// Comma-separated axis values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Also write the table to this file
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Block length
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Rate slack driving the codebook size exponents
    #[arg(long, default_value_t = 0.11)]
    delta: f64,
    #[arg(long, value_parser = parse_gamma, default_value = "inf")]
    gamma: f64,
    /// "a" keys on first-layer columns; "ab" adds the refinement layer
    #[arg(long, value_enum, default_value_t = LayerKind::A)]
    layer: LayerKind,
    /// Run a security assessment alongside the trials
    #[arg(long, value_enum)]
    security_mode: Option<SecurityKind>,
    /// Sample count for the plugin security estimator
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    /// True state index; all states when omitted
    #[arg(long)]
    state: Option<usize>,
    /// Target key rate in bits per letter
    #[arg(long)]
    rate: Option<f64>,
    /// Forced key alphabet size, overriding the rate rule
    #[arg(long)]
    key_size: Option<u64>,
    /// Threshold for the achievability verdicts
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    /// Estimator window
    #[arg(long, default_value_t = 0.02)]
    xi: f64,
    /// Encoder window
    #[arg(long, default_value_t = 0.05)]
    zeta: f64,
    /// Decoder window
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Refinement decoder window
    #[arg(long, default_value_t = 0.15)]
    vartheta: f64,
    /// How the auxiliary channels are chosen
    #[arg(long, value_enum, default_value_t = AuxKind::Identity)]
    aux: AuxKind,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum LayerKind {
    A,
    Ab,
}

#[derive(ValueEnum, Clone, Copy)]
enum SecurityKind {
    Exact,
    Plugin,
}

#[derive(ValueEnum, Clone, Copy)]
enum AxisKind {
    N,
    Gamma,
    Rate,
    Seed,
}

#[derive(ValueEnum, Clone, Copy)]
enum AuxKind {
    Identity,
    Optimize,
}

impl SimArgs {
    fn to_config(&self) -> Result<ProtocolConfig> {
        let typicality = TypicalityParams::new(self.xi, self.zeta, self.sigma, self.vartheta)?;
        let security = self.security_mode.map(|m| match m {
            SecurityKind::Exact => SecurityMode::Exact,
            SecurityKind::Plugin => SecurityMode::PlugIn {
                samples: self.samples,
            },
        });
        Ok(ProtocolConfig {
            n: self.n,
            delta: self.delta,
            typicality,
            gamma: self.gamma,
            aux: match self.aux {
                AuxKind::Identity => AuxSelect::Identity,
                AuxKind::Optimize => AuxSelect::Optimize,
            },
            master_seed: self.seed,
            trials: self.trials,
            layer_b: self.layer == LayerKind::Ab,
            rate_target: self.rate,
            key_size: self.key_size,
            states: self.state.map(|s| vec![s]).unwrap_or_default(),
            security,
            epsilon: self.epsilon,
        })
    }
}

fn search_config(u_size: usize, v_size: usize, grid: u32, restarts: u32, seed: u64) -> SearchConfig {
    SearchConfig {
        u_size,
        v_size,
        grid: grid as usize,
        restarts: restarts as usize,
        seed,
        ..SearchConfig::default()
    }
}

fn parse_axis(axis: AxisKind, values: &[String]) -> Result<SweepAxis> {
    let bad = |v: &str, what: &str| Error::Domain(format!("axis value {v:?} is not {what}"));
    match axis {
        AxisKind::N => {
            let ns = values
                .iter()
                .map(|v| v.parse::<usize>().map_err(|_| bad(v, "a block length")))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepAxis::BlockLength(ns))
        }
        AxisKind::Seed => {
            let ss = values
                .iter()
                .map(|v| v.parse::<u64>().map_err(|_| bad(v, "a seed")))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepAxis::Seed(ss))
        }
        AxisKind::Gamma => {
            let gs = values
                .iter()
                .map(|v| parse_gamma(v).map_err(|_| bad(v, "a budget")))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepAxis::Budget(gs))
        }
        AxisKind::Rate => {
            let rs = values
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| bad(v, "a rate")))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepAxis::RateTarget(rs))
        }
    }
}

fn execute(cmd: Command) -> Result<String> {
    match cmd {
        Command::Capacity { source } => {
            let src = load_source_spec(&source)?;
            let rep = degraded_capacity(&src)?;
            Ok(render_degraded(&rep, &[]).render())
        }
        Command::LowerBound {
            source,
            gamma,
            u_size,
            v_size,
            grid,
            restarts,
            seed,
        } => {
            let src = load_source_spec(&source)?;
            let cfg = search_config(u_size, v_size, grid, restarts, seed);
            let rep = rate_lower_bound(&src, gamma, &cfg)?;
            Ok(render_rate(&rep).render())
        }
        Command::MultiLetter { source, n, seed } => {
            let src = load_source_spec(&source)?;
            let cfg = SearchConfig {
                seed,
                ..SearchConfig::default()
            };
            let rep = multi_letter_rate(&src, n as usize, &cfg)?;
            Ok(render_multi_letter(&rep).render())
        }
        Command::Simulate { source, sim } => {
            let src = load_source_spec(&source)?;
            let rep = run_protocol(&src, &sim.to_config()?)?;
            Ok(render_protocol(&rep).render())
        }
        Command::CheckDegraded { source } => {
            let src = load_source_spec(&source)?;
            let witnesses = check_degraded(&src);
            let checks = degraded_identity_check(&src)?;
            let mut d = Document::new();
            d.boolean("all_degraded", witnesses.all_degraded);
            d.int("pairs", witnesses.pairs.len() as i128);
            for p in &witnesses.pairs {
                let key = format!("pair.{}.{}", p.from_state, p.to_state);
                d.int(&format!("{key}.class"), p.class_index as i128);
                d.boolean(&format!("{key}.witnessed"), p.witness.is_some());
                if p.witness.is_some() {
                    d.float(&format!("{key}.residual"), p.residual);
                }
            }
            for c in &checks {
                let key = format!("identity.{}.{}", c.from_state, c.to_state);
                if c.skipped {
                    d.boolean(&format!("{key}.skipped"), true);
                } else {
                    d.float(&format!("{key}.gap"), c.gap);
                    d.boolean(&format!("{key}.ok"), c.ok);
                }
            }
            Ok(d.render())
        }
        Command::Quantize {
            source,
            l,
            gamma,
            u_size,
            v_size,
            seed,
        } => {
            let src = load_source_spec(&source)?;
            let cfg = search_config(u_size, v_size, 32, 6, seed);
            let rep = rate_lower_bound(&src, gamma, &cfg)?;
            let classes = src.marginal_partition();
            let mut out = String::new();
            for (cr, class) in rep.classes.iter().zip(&classes) {
                let q = quantize_family(&cr.aux, l)?;
                let shift = rate_shift_bound(&src, class, &cr.aux, &q.aux)?;
                let mut d = Document::new();
                d.int("class", cr.class_index as i128);
                d.float("searched_value", cr.value);
                out.push_str(&d.render());
                out.push_str(&render_quantized(&q, shift).render());
            }
            Ok(out)
        }
        Command::MiBound {
            gamma_param,
            x_size,
            y_size,
        } => {
            let bound = mi_continuity_bound(gamma_param, x_size, y_size)?;
            Ok(render_mi_bound(gamma_param, x_size, y_size, bound).render())
        }
        Command::Sweep {
            source,
            sim,
            axis,
            values,
            csv,
        } => {
            let src = load_source_spec(&source)?;
            let axis = parse_axis(axis, &values)?;
            let points = sweep(&src, &sim.to_config()?, &axis)?;
            let table = sweep_csv(&points);
            let mut d = Document::new();
            d.int("points", points.len() as i128);
            for p in &points {
                let key = format!("point.{}", sig12(p.value));
                let worst = p
                    .report
                    .states
                    .iter()
                    .map(|s| s.disagreement_rate)
                    .fold(0.0, f64::max);
                d.float(&format!("{key}.error_max"), worst);
                d.float(&format!("{key}.key_rate"), p.report.key_rate);
                d.float(&format!("{key}.public_rate"), p.report.public_rate);
            }
            let mut out = d.render();
            match csv {
                Some(path) => std::fs::write(&path, &table)?,
                None => {
                    out.push('\n');
                    out.push_str(&table);
                }
            }
            Ok(out)
        }
    }
}

/// Parses arguments, runs the command, prints the document, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.cmd) {
        Ok(doc) => {
            print!("{doc}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Budget(_) => 3,
                _ => 2,
            }
        }
    }
}
