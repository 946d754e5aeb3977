//! End-to-end key generation runs.
//!
//! One run fixes a source, a block length, and a master seed. Per
//! class it draws the codebooks and the key table once; per trial it
//! samples a block under a chosen true state, lets Alice estimate the
//! class, encode, and extract, and lets Bob decode from his side and
//! extract. Keys are compared including the failure sentinel: both
//! parties mapping column 0 through the same table is an agreement.
//! Everything random is replayable from the master seed.

use crate::capacity::{rate_lower_bound, AuxChannelPair, SearchConfig};
use crate::coding::{
    codebook_sizes, encode_refinement, CodebookSizes, CodebookU, CodebookV, Decoder, Encoder,
    RefinementDecoder,
};
use crate::error::{Error, Result};
use crate::estimation::estimate_marginal;
use crate::extraction::{
    assess_security, KeyExtractor, SecurityAssessment, SecurityMode, SecurityParams,
};
use crate::prob::{Channel, Pmf};
use crate::seeds::{self, Purpose};
use crate::source::CompoundSource;
use crate::typicality::TypicalityParams;
use rayon::prelude::*;

/// How the auxiliary pair is chosen for a run.
#[derive(Debug, Clone)]
pub enum AuxSelect {
    /// U = V = X: no preprocessing.
    Identity,
    /// Take the argmax of the rate search under the configured budget.
    Optimize,
    /// Caller-supplied pair, used for every class.
    Pair(AuxChannelPair),
}

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub n: usize,
    pub delta: f64,
    pub typicality: TypicalityParams,
    /// Public budget cap; may be infinite.
    pub gamma: f64,
    pub aux: AuxSelect,
    pub master_seed: u64,
    pub trials: u64,
    /// Run the refinement layer: the key then comes from its columns.
    pub layer_b: bool,
    /// Target key rate in bits per letter; caps the key size.
    pub rate_target: Option<f64>,
    /// Forced key size, overriding the rate rule.
    pub key_size: Option<u64>,
    /// True states to exercise; all states when empty.
    pub states: Vec<usize>,
    pub security: Option<SecurityMode>,
    /// Threshold for the achievability verdicts.
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct ClassContextReport {
    pub class_index: usize,
    pub sizes: CodebookSizes,
    /// Column count feeding the key table (first or refinement layer).
    pub key_columns: u64,
    pub codebook_seed: u64,
    pub extractor_seed: u64,
}

#[derive(Debug, Clone)]
pub struct StateOutcome {
    pub state: usize,
    pub class_index: usize,
    pub trials: u64,
    pub disagreements: u64,
    pub disagreement_rate: f64,
    /// 95% score interval for the disagreement probability.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Trials where Alice's class estimate missed the true class.
    pub estimator_mismatches: u64,
    pub encode_failures: u64,
    /// Bob failed to recover a column Alice had produced.
    pub decode_failures: u64,
}

#[derive(Debug, Clone)]
pub struct Achievability {
    pub epsilon: f64,
    pub error_max: f64,
    pub error_ok: bool,
    /// max over states of I(K; view): None without a security pass.
    pub leakage_max: Option<f64>,
    pub leakage_ok: Option<bool>,
    /// max over states of log2 k - H(K).
    pub uniformity_max: Option<f64>,
    pub uniformity_ok: Option<bool>,
    pub key_rate: f64,
    pub rate_ok: bool,
}

#[derive(Debug, Clone)]
pub struct ProtocolReport {
    pub n: usize,
    pub delta: f64,
    pub gamma: f64,
    pub layer_b: bool,
    pub trials: u64,
    pub master_seed: u64,
    pub k: u64,
    /// (log2 N1 [+ log2 N3] + log2 |classes|) / n.
    pub public_rate: f64,
    /// log2 k / n.
    pub key_rate: f64,
    pub classes: Vec<ClassContextReport>,
    pub states: Vec<StateOutcome>,
    /// One assessment per class when a security mode was configured.
    pub security: Vec<SecurityAssessment>,
    pub achievability: Achievability,
}

/// Two-sided score interval for a binomial proportion.
pub fn wilson_interval(fails: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = fails as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn pow2_floor(v: u64) -> u64 {
    if v == 0 {
        0
    } else {
        1u64 << (63 - v.leading_zeros())
    }
}

struct ClassSetup {
    class_index: usize,
    cb_u: CodebookU,
    cb_v: Option<CodebookV>,
    sizes: CodebookSizes,
    codebook_seed: u64,
}

struct ClassContext<'a> {
    class_index: usize,
    cb_u: &'a CodebookU,
    cb_v: Option<&'a CodebookV>,
    enc: Encoder<'a>,
    dec: Decoder,
    rdec: Option<RefinementDecoder>,
    joint_uvx: Option<crate::prob::JointPmf>,
    zeta: f64,
    extractor: KeyExtractor,
    sizes: CodebookSizes,
    codebook_seed: u64,
    extractor_seed: u64,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    disagree: u64,
    mismatch: u64,
    enc_fail: u64,
    dec_fail: u64,
}

impl Counts {
    fn add(self, other: Counts) -> Counts {
        Counts {
            disagree: self.disagree + other.disagree,
            mismatch: self.mismatch + other.mismatch,
            enc_fail: self.enc_fail + other.enc_fail,
            dec_fail: self.dec_fail + other.dec_fail,
        }
    }
}

/// Runs the full scheme and reports per-state agreement, rates, and
/// (optionally) realized security indices.
pub fn run_protocol(src: &CompoundSource, cfg: &ProtocolConfig) -> Result<ProtocolReport> {
    if cfg.trials == 0 {
        return Err(Error::Domain("a run needs at least one trial".into()));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Domain("threshold epsilon must be positive".into()));
    }
    if cfg.layer_b && cfg.security.is_some() {
        return Err(Error::Domain(
            "security assessment covers the single-layer scheme only".into(),
        ));
    }
    let classes = src.marginal_partition();
    let class_marginals: Vec<Pmf> = classes.iter().map(|c| c.x_marginal.clone()).collect();
    let mut state_class = vec![0usize; src.states().len()];
    for c in &classes {
        for &s in &c.members {
            state_class[s] = c.index;
        }
    }

    // auxiliary pair per class
    let aux_per_class: Vec<AuxChannelPair> = match &cfg.aux {
        AuxSelect::Identity => classes
            .iter()
            .map(|_| AuxChannelPair::identity(src.x_size()))
            .collect(),
        AuxSelect::Pair(p) => classes.iter().map(|_| p.clone()).collect(),
        AuxSelect::Optimize => {
            let rep = rate_lower_bound(src, cfg.gamma, &SearchConfig::default())?;
            rep.classes.into_iter().map(|c| c.aux).collect()
        }
    };

    // codebooks drawn once per class; coders borrow them below
    let mut setups: Vec<ClassSetup> = Vec::new();
    for class in &classes {
        let aux = &aux_per_class[class.index];
        let sizes = codebook_sizes(src, class, aux, cfg.n, cfg.delta)?;
        let cb_seed = seeds::derive(cfg.master_seed, Purpose::Codebook, class.index as u64);
        let pu = aux.ux_joint(&class.x_marginal)?.axis_pmf(0);
        let cb_u = CodebookU::draw(&pu, cfg.n, sizes.n1, sizes.n2, cb_seed)?;
        let cb_v = if cfg.layer_b {
            let uv = aux.uvx_joint(&class.x_marginal)?.marginal_onto(&[0, 1]);
            let us = aux.u_size();
            let vs = aux.v_size();
            let mut rows = Vec::with_capacity(us * vs);
            for u in 0..us {
                let pu_mass: f64 = (0..vs).map(|v| uv.get(&[u, v])).sum();
                if pu_mass <= 0.0 {
                    rows.extend(std::iter::once(1.0).chain(std::iter::repeat(0.0)).take(vs));
                } else {
                    rows.extend((0..vs).map(|v| uv.get(&[u, v]) / pu_mass));
                }
            }
            let v_given_u = Channel::new(us, vs, rows)?;
            let v_seed = seeds::derive(
                cfg.master_seed,
                Purpose::Codebook,
                (1u64 << 32) | class.index as u64,
            );
            Some(CodebookV::draw(&v_given_u, &cb_u, sizes.n3, sizes.n4, v_seed)?)
        } else {
            None
        };
        setups.push(ClassSetup {
            class_index: class.index,
            cb_u,
            cb_v,
            sizes,
            codebook_seed: cb_seed,
        });
    }

    // key size: forced, or min over classes of the rate-capped power
    // of two that the column count supports
    let column_cap = setups
        .iter()
        .map(|s| if cfg.layer_b { s.sizes.n4 } else { s.sizes.n2 })
        .min()
        .unwrap_or(1);
    let k = match cfg.key_size {
        Some(k) if k >= 1 => k,
        Some(_) => return Err(Error::Domain("key size must be at least 1".into())),
        None => {
            let cap = pow2_floor(column_cap).max(1);
            match cfg.rate_target {
                None => cap,
                Some(r) => {
                    if !(r > 0.0) {
                        return Err(Error::Domain("rate target must be positive".into()));
                    }
                    let bits = (cfg.n as f64 * r).ceil();
                    if bits > 62.0 {
                        return Err(Error::Budget(format!(
                            "rate target asks for 2^{bits} keys"
                        )));
                    }
                    cap.min(1u64 << bits as u32)
                }
            }
        }
    };

    let mut contexts: Vec<ClassContext<'_>> = Vec::new();
    for (class, setup) in classes.iter().zip(&setups) {
        let aux = &aux_per_class[setup.class_index];
        let columns = if cfg.layer_b {
            setup.sizes.n4
        } else {
            setup.sizes.n2
        };
        let ex_seed = seeds::derive(cfg.master_seed, Purpose::Extractor, setup.class_index as u64);
        let extractor = KeyExtractor::draw(columns + 1, k, ex_seed)?;
        let enc = Encoder::new(
            &setup.cb_u,
            aux.ux_joint(&class.x_marginal)?,
            cfg.typicality.zeta,
        )?;
        let dec = Decoder::new(src, class, aux, cfg.typicality.sigma)?;
        let (rdec, joint_uvx) = if cfg.layer_b {
            (
                Some(RefinementDecoder::new(
                    src,
                    class,
                    aux,
                    cfg.typicality.vartheta,
                )?),
                Some(aux.uvx_joint(&class.x_marginal)?),
            )
        } else {
            (None, None)
        };
        contexts.push(ClassContext {
            class_index: setup.class_index,
            cb_u: &setup.cb_u,
            cb_v: setup.cb_v.as_ref(),
            enc,
            dec,
            rdec,
            joint_uvx,
            zeta: cfg.typicality.zeta,
            extractor,
            sizes: setup.sizes.clone(),
            codebook_seed: setup.codebook_seed,
            extractor_seed: ex_seed,
        });
    }

    let chosen_states: Vec<usize> = if cfg.states.is_empty() {
        (0..src.states().len()).collect()
    } else {
        for &s in &cfg.states {
            if s >= src.states().len() {
                return Err(Error::Domain(format!("no state with index {s}")));
            }
        }
        cfg.states.clone()
    };

    let mut state_reports = Vec::with_capacity(chosen_states.len());
    for &s in &chosen_states {
        let true_class = state_class[s];
        let counts = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeds::rng(seeds::derive(
                    cfg.master_seed,
                    Purpose::Source,
                    ((s as u64) << 40) | t,
                ));
                let (x, y, _z) = src.sample_block(s, cfg.n, &mut rng);
                let mut c = Counts::default();
                let est = match estimate_marginal(&x, &class_marginals) {
                    Ok(r) => r.estimated_class,
                    Err(_) => {
                        // no admissible class at all: Alice aborts and
                        // Bob has nothing to follow; count as failure
                        c.disagree += 1;
                        c.mismatch += 1;
                        return c;
                    }
                };
                if est != true_class {
                    c.mismatch += 1;
                }
                let ctx = &contexts[est];
                let first = ctx.enc.encode(&x);
                let (col_a, col_b) = if !cfg.layer_b {
                    if first.is_failure() {
                        c.enc_fail += 1;
                        (0, 0)
                    } else {
                        (first.j, ctx.dec.decode_column(ctx.cb_u, first.i, &y))
                    }
                } else {
                    let cb_v = ctx.cb_v.expect("layer b context");
                    let second = encode_refinement(
                        cb_v,
                        ctx.cb_u,
                        first,
                        &x,
                        ctx.joint_uvx.as_ref().expect("layer b context"),
                        ctx.zeta,
                    );
                    if second.is_failure() {
                        c.enc_fail += 1;
                        (0, 0)
                    } else {
                        let j_hat = ctx.dec.decode_column(ctx.cb_u, first.i, &y);
                        let q_hat = ctx.rdec.as_ref().expect("layer b context").decode_column(
                            cb_v, ctx.cb_u, first.i, j_hat, second.i, &y,
                        );
                        (second.j, q_hat)
                    }
                };
                if col_a != 0 && col_b == 0 {
                    c.dec_fail += 1;
                }
                if ctx.extractor.key(col_a) != ctx.extractor.key(col_b) {
                    c.disagree += 1;
                }
                c
            })
            .reduce(Counts::default, Counts::add);
        let rate = counts.disagree as f64 / cfg.trials as f64;
        let (lo, hi) = wilson_interval(counts.disagree, cfg.trials, 1.959963984540054);
        state_reports.push(StateOutcome {
            state: s,
            class_index: true_class,
            trials: cfg.trials,
            disagreements: counts.disagree,
            disagreement_rate: rate,
            ci_low: lo,
            ci_high: hi,
            estimator_mismatches: counts.mismatch,
            encode_failures: counts.enc_fail,
            decode_failures: counts.dec_fail,
        });
    }

    // security pass per class with the realized codebook and table
    let mut security = Vec::new();
    if let Some(mode) = cfg.security {
        for (class, ctx) in classes.iter().zip(&contexts) {
            let assessment = assess_security(
                src,
                class,
                &aux_per_class[ctx.class_index],
                ctx.cb_u,
                &ctx.enc,
                &ctx.extractor,
                &SecurityParams {
                    mode,
                    sigma: cfg.typicality.sigma,
                    budget_log2: 24,
                    master_seed: seeds::derive(
                        cfg.master_seed,
                        Purpose::Extractor,
                        0x7365_6300_0000_0000,
                    ),
                },
            )?;
            security.push(assessment);
        }
    }

    let key_rate = (k as f64).log2() / cfg.n as f64;
    let mut public_bits = (classes.len() as f64).log2();
    let mut worst_n1 = 0.0f64;
    let mut worst_n3 = 0.0f64;
    for ctx in &contexts {
        worst_n1 = worst_n1.max((ctx.sizes.n1 as f64).log2());
        if cfg.layer_b {
            worst_n3 = worst_n3.max((ctx.sizes.n3 as f64).log2());
        }
    }
    public_bits += worst_n1 + worst_n3;
    let public_rate = public_bits / cfg.n as f64;

    let error_max = state_reports
        .iter()
        .map(|r| r.disagreement_rate)
        .fold(0.0, f64::max);
    let (leakage_max, uniformity_max) = if security.is_empty() {
        (None, None)
    } else {
        let mut leak = 0.0f64;
        let mut unif = 0.0f64;
        let log2k = (k as f64).log2();
        for a in &security {
            for st in &a.states {
                let gap = (log2k - st.key_entropy).max(0.0);
                unif = unif.max(gap);
                leak = leak.max((st.plain_index - gap).max(0.0));
            }
        }
        (Some(leak), Some(unif))
    };
    let rate_ok = cfg
        .rate_target
        .is_none_or(|r| key_rate + 1e-12 >= r - cfg.epsilon);
    let achievability = Achievability {
        epsilon: cfg.epsilon,
        error_max,
        error_ok: error_max <= cfg.epsilon,
        leakage_max,
        leakage_ok: leakage_max.map(|v| v <= cfg.epsilon),
        uniformity_max,
        uniformity_ok: uniformity_max.map(|v| v <= cfg.epsilon),
        key_rate,
        rate_ok,
    };

    Ok(ProtocolReport {
        n: cfg.n,
        delta: cfg.delta,
        gamma: cfg.gamma,
        layer_b: cfg.layer_b,
        trials: cfg.trials,
        master_seed: cfg.master_seed,
        k,
        public_rate,
        key_rate,
        classes: contexts
            .iter()
            .map(|ctx| ClassContextReport {
                class_index: ctx.class_index,
                sizes: ctx.sizes.clone(),
                key_columns: if cfg.layer_b { ctx.sizes.n4 } else { ctx.sizes.n2 },
                codebook_seed: ctx.codebook_seed,
                extractor_seed: ctx.extractor_seed,
            })
            .collect(),
        states: state_reports,
        security,
        achievability,
    })
}

/// What a sweep varies between runs.
#[derive(Debug, Clone)]
pub enum SweepAxis {
    BlockLength(Vec<usize>),
    Budget(Vec<f64>),
    RateTarget(Vec<f64>),
    Seed(Vec<u64>),
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub axis: &'static str,
    pub value: f64,
    pub report: ProtocolReport,
}

/// Reruns the protocol along one axis, everything else held fixed.
pub fn sweep(
    src: &CompoundSource,
    base: &ProtocolConfig,
    axis: &SweepAxis,
) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    match axis {
        SweepAxis::BlockLength(ns) => {
            for &n in ns {
                let cfg = ProtocolConfig { n, ..base.clone() };
                out.push(SweepPoint {
                    axis: "n",
                    value: n as f64,
                    report: run_protocol(src, &cfg)?,
                });
            }
        }
        SweepAxis::Budget(gs) => {
            for &gamma in gs {
                let cfg = ProtocolConfig {
                    gamma,
                    ..base.clone()
                };
                out.push(SweepPoint {
                    axis: "gamma",
                    value: gamma,
                    report: run_protocol(src, &cfg)?,
                });
            }
        }
        SweepAxis::RateTarget(rs) => {
            for &r in rs {
                let cfg = ProtocolConfig {
                    rate_target: Some(r),
                    ..base.clone()
                };
                out.push(SweepPoint {
                    axis: "rate",
                    value: r,
                    report: run_protocol(src, &cfg)?,
                });
            }
        }
        SweepAxis::Seed(seeds_list) => {
            for &sd in seeds_list {
                let cfg = ProtocolConfig {
                    master_seed: sd,
                    ..base.clone()
                };
                out.push(SweepPoint {
                    axis: "seed",
                    value: sd as f64,
                    report: run_protocol(src, &cfg)?,
                });
            }
        }
    }
    Ok(out)
}
