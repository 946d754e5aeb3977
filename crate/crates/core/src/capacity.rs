//! Key rates: exact formulas, single-letter lower bounds, multi-letter
//! refinements, and family quantization.
//!
//! The auxiliary pair (U, V) lives on the Alice side of the chain
//! U - V - X - (Y, Z): V is a preprocessing of X and U a coarsening of
//! V. The first layer of the scheme is built from U, the refinement
//! layer from V, and every rate expression below is a functional of the
//! per-state joints this pair induces.

use crate::error::{Error, Result};
use crate::prob::{binary_entropy, kahan_sum, Channel, JointPmf, Pmf};
use crate::seeds::{self, Purpose};
use crate::source::{check_degraded, CompoundSource, MarginalClass, SourceState};
use rand::Rng;

/// Auxiliary channel pair: V = preprocess(X), U = coarsen(V).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannelPair {
    pub v_given_x: Channel,
    pub u_given_v: Channel,
}

impl AuxChannelPair {
    pub fn new(v_given_x: Channel, u_given_v: Channel) -> Result<Self> {
        if v_given_x.output_size() != u_given_v.input_size() {
            return Err(Error::AlphabetMismatch(format!(
                "aux chain mismatch: V alphabet {} feeds U stage expecting {}",
                v_given_x.output_size(),
                u_given_v.input_size()
            )));
        }
        Ok(AuxChannelPair {
            v_given_x,
            u_given_v,
        })
    }

    /// U = V = X: both stages are identity maps.
    pub fn identity(x_size: usize) -> Self {
        AuxChannelPair {
            v_given_x: Channel::identity(x_size),
            u_given_v: Channel::identity(x_size),
        }
    }

    pub fn u_size(&self) -> usize {
        self.u_given_v.output_size()
    }

    pub fn v_size(&self) -> usize {
        self.v_given_x.output_size()
    }

    pub fn x_size(&self) -> usize {
        self.v_given_x.input_size()
    }

    /// Joint law over (U, V, X, Y, Z) for one state, axes in that order.
    pub fn full_joint(&self, state_joint: &JointPmf) -> Result<JointPmf> {
        let dims = state_joint.dims().to_vec();
        if dims.len() != 3 || dims[0] != self.x_size() {
            return Err(Error::AlphabetMismatch(format!(
                "state joint dims {dims:?} do not match aux input {}",
                self.x_size()
            )));
        }
        JointPmf::from_fn(
            vec![self.u_size(), self.v_size(), dims[0], dims[1], dims[2]],
            |i| {
                state_joint.get(&[i[2], i[3], i[4]])
                    * self.v_given_x.get(i[2], i[1])
                    * self.u_given_v.get(i[1], i[0])
            },
        )
    }

    /// Joint law over (U, X), axes [u, x].
    pub fn ux_joint(&self, px: &Pmf) -> Result<JointPmf> {
        let x_to_u = self.v_given_x.compose(&self.u_given_v)?;
        JointPmf::from_fn(vec![self.u_size(), px.size()], |i| {
            px.get(i[1]) * x_to_u.get(i[1], i[0])
        })
    }

    /// Joint law over (U, V, X), axes [u, v, x].
    pub fn uvx_joint(&self, px: &Pmf) -> Result<JointPmf> {
        JointPmf::from_fn(vec![self.u_size(), self.v_size(), px.size()], |i| {
            px.get(i[2]) * self.v_given_x.get(i[2], i[1]) * self.u_given_v.get(i[1], i[0])
        })
    }
}

/// Feasible points must keep the public budget strictly under the cap;
/// strictness is realized as this fixed margin.
pub const GAMMA_MARGIN: f64 = 1e-9;

/// Rate functionals of one auxiliary pair on one class.
#[derive(Debug, Clone, Copy)]
pub struct RateTerms {
    /// min over member states of I(V; Y | U).
    pub forward: f64,
    /// max over member states of I(V; Z | U).
    pub leak: f64,
    /// forward - leak: the extractable key rate.
    pub objective: f64,
    /// max_s I(U; X | Y) + max_s I(V; X | U, Y): the public budget.
    pub constraint: f64,
}

/// Evaluates the four rate functionals of `aux` on every member state
/// of the class. Axes of the per-state joint: [u, v, x, y, z].
pub fn evaluate_rate(
    src: &CompoundSource,
    class: &MarginalClass,
    aux: &AuxChannelPair,
) -> Result<RateTerms> {
    let mut forward = f64::INFINITY;
    let mut leak = 0.0f64;
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    for &s in &class.members {
        let full = aux.full_joint(&src.state(s).joint)?;
        forward = forward.min(full.cmi_between(&[1], &[3], &[0]));
        leak = leak.max(full.cmi_between(&[1], &[4], &[0]));
        c1 = c1.max(full.cmi_between(&[0], &[2], &[3]));
        c2 = c2.max(full.cmi_between(&[1], &[2], &[0, 3]));
    }
    Ok(RateTerms {
        forward,
        leak,
        objective: forward - leak,
        constraint: c1 + c2,
    })
}

/// Knobs for the auxiliary-pair search.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Coarsened alphabet size; 0 picks |X| + 1.
    pub u_size: usize,
    /// Preprocessed alphabet size; 0 picks |X| + 1.
    pub v_size: usize,
    /// Grid resolution for the binary-input seeding pass (0 disables).
    pub grid: usize,
    /// Random restarts per class.
    pub restarts: usize,
    pub max_sweeps: usize,
    /// Step size below which the ascent stops.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            u_size: 0,
            v_size: 0,
            grid: 32,
            restarts: 6,
            max_sweeps: 200,
            tol: 1e-7,
            seed: 17,
        }
    }
}

/// Outcome of the search on one class.
#[derive(Debug, Clone)]
pub struct ClassRate {
    pub class_index: usize,
    /// Best objective found, clamped at zero.
    pub value: f64,
    /// Unclamped best objective.
    pub raw: f64,
    /// Whether any admissible pair met the budget cap.
    pub feasible: bool,
    pub terms: RateTerms,
    pub aux: AuxChannelPair,
}

#[derive(Debug, Clone)]
pub struct RateReport {
    /// min over classes of the per-class best rate.
    pub value: f64,
    pub gamma: f64,
    pub limiting_class: usize,
    pub classes: Vec<ClassRate>,
}

/// Maximizes forward - leak over auxiliary pairs per class, subject to
/// the public budget staying under `gamma`, then takes the worst class.
/// `gamma` may be infinite, which disables the budget entirely.
pub fn rate_lower_bound(
    src: &CompoundSource,
    gamma: f64,
    cfg: &SearchConfig,
) -> Result<RateReport> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::Domain(format!(
            "budget cap must be nonnegative or infinite, got {gamma}"
        )));
    }
    let classes = src.marginal_partition();
    let mut out = Vec::with_capacity(classes.len());
    for class in &classes {
        out.push(search_class(src, class, gamma, cfg, &[])?);
    }
    let (limiting, value) = out
        .iter()
        .map(|c| c.value)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one class");
    Ok(RateReport {
        value,
        gamma,
        limiting_class: limiting,
        classes: out,
    })
}

struct AuxParams {
    x_size: usize,
    v_rows: Vec<Vec<f64>>,
    u_rows: Vec<Vec<f64>>,
}

impl AuxParams {
    fn from_aux(aux: &AuxChannelPair) -> Self {
        let x_size = aux.x_size();
        let v_rows = (0..x_size)
            .map(|x| aux.v_given_x.row(x).to_vec())
            .collect();
        let u_rows = (0..aux.v_size())
            .map(|v| aux.u_given_v.row(v).to_vec())
            .collect();
        AuxParams {
            x_size,
            v_rows,
            u_rows,
        }
    }

    fn to_aux(&self) -> Result<AuxChannelPair> {
        let v_size = self.v_rows[0].len();
        let u_size = self.u_rows[0].len();
        let v = Channel::new(
            self.x_size,
            v_size,
            self.v_rows.iter().flatten().copied().collect(),
        )?;
        let u = Channel::new(
            self.u_rows.len(),
            u_size,
            self.u_rows.iter().flatten().copied().collect(),
        )?;
        AuxChannelPair::new(v, u)
    }
}

fn delta_row(size: usize, on: usize) -> Vec<f64> {
    let mut r = vec![0.0; size];
    r[on.min(size - 1)] = 1.0;
    r
}

fn constant_channel(input: usize, output: usize) -> Channel {
    Channel::new(
        input,
        output,
        (0..input).flat_map(|_| delta_row(output, 0)).collect(),
    )
    .expect("delta rows are stochastic")
}

fn embed_identity(input: usize, output: usize) -> Channel {
    Channel::new(
        input,
        output,
        (0..input).flat_map(|x| delta_row(output, x)).collect(),
    )
    .expect("delta rows are stochastic")
}

fn penalized(terms: &RateTerms, limit: f64) -> f64 {
    let violation = (terms.constraint - limit).max(0.0);
    terms.objective - 1e6 * violation
}

/// Greedy cyclic ascent with step halving. Tracks the best point that
/// meets the budget, which is what gets returned.
fn ascend(
    src: &CompoundSource,
    class: &MarginalClass,
    limit: f64,
    start: AuxParams,
    cfg: &SearchConfig,
) -> Result<Option<(f64, RateTerms, AuxChannelPair)>> {
    let mut params = start;
    let aux = params.to_aux()?;
    let mut cur_terms = evaluate_rate(src, class, &aux)?;
    let mut cur_score = penalized(&cur_terms, limit);
    let mut best: Option<(f64, RateTerms, AuxChannelPair)> = None;
    let note_best =
        |terms: &RateTerms, aux: &AuxChannelPair, best: &mut Option<(f64, RateTerms, AuxChannelPair)>| {
            if terms.constraint <= limit
                && best
                    .as_ref()
                    .is_none_or(|(b, _, _)| terms.objective > *b)
            {
                *best = Some((terms.objective, *terms, aux.clone()));
            }
        };
    note_best(&cur_terms, &aux, &mut best);

    let mut step = 0.25f64;
    for _ in 0..cfg.max_sweeps {
        let mut improved = false;
        let v_rows = params.v_rows.len();
        let total_rows = v_rows + params.u_rows.len();
        for row_idx in 0..total_rows {
            let len = if row_idx < v_rows {
                params.v_rows[row_idx].len()
            } else {
                params.u_rows[row_idx - v_rows].len()
            };
            for from in 0..len {
                for to in 0..len {
                    if from == to {
                        continue;
                    }
                    let row = if row_idx < v_rows {
                        &mut params.v_rows[row_idx]
                    } else {
                        &mut params.u_rows[row_idx - v_rows]
                    };
                    let delta = step.min(row[from]);
                    if delta <= 1e-14 {
                        continue;
                    }
                    row[from] -= delta;
                    row[to] += delta;
                    let aux = params.to_aux()?;
                    let terms = evaluate_rate(src, class, &aux)?;
                    let score = penalized(&terms, limit);
                    if score > cur_score + 1e-12 {
                        cur_score = score;
                        cur_terms = terms;
                        note_best(&terms, &aux, &mut best);
                        improved = true;
                    } else {
                        let row = if row_idx < v_rows {
                            &mut params.v_rows[row_idx]
                        } else {
                            &mut params.u_rows[row_idx - v_rows]
                        };
                        row[from] += delta;
                        row[to] -= delta;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
            if step < cfg.tol {
                break;
            }
        }
    }
    let _ = cur_terms;
    Ok(best)
}

fn search_class(
    src: &CompoundSource,
    class: &MarginalClass,
    gamma: f64,
    cfg: &SearchConfig,
    extra_seeds: &[AuxChannelPair],
) -> Result<ClassRate> {
    let x = src.x_size();
    let v_size = if cfg.v_size == 0 { x + 1 } else { cfg.v_size };
    let u_size = if cfg.u_size == 0 { x + 1 } else { cfg.u_size };
    if v_size < 1 || u_size < 1 {
        return Err(Error::Domain("auxiliary alphabets must be nonempty".into()));
    }
    let limit = if gamma.is_infinite() {
        f64::INFINITY
    } else {
        gamma - GAMMA_MARGIN
    };

    let mut seeds: Vec<AuxChannelPair> = Vec::new();
    // structured corners: everything revealed, everything hidden, and
    // the first layer collapsed
    seeds.push(AuxChannelPair::new(
        embed_identity(x, v_size),
        embed_identity(v_size, u_size),
    )?);
    seeds.push(AuxChannelPair::new(
        constant_channel(x, v_size),
        constant_channel(v_size, u_size),
    )?);
    seeds.push(AuxChannelPair::new(
        embed_identity(x, v_size),
        constant_channel(v_size, u_size),
    )?);
    seeds.extend_from_slice(extra_seeds);

    // grid pass over binary-output preprocessors for binary sources
    if x == 2 && cfg.grid >= 2 && v_size >= 2 {
        let g = cfg.grid;
        for pi in 0..=g {
            for qi in 0..=g {
                let (p, q) = (pi as f64 / g as f64, qi as f64 / g as f64);
                let mut rows = vec![0.0; 2 * v_size];
                rows[0] = 1.0 - p;
                rows[1] = p;
                rows[v_size] = 1.0 - q;
                rows[v_size + 1] = q;
                let v = Channel::new(2, v_size, rows)?;
                seeds.push(AuxChannelPair::new(
                    v.clone(),
                    embed_identity(v_size, u_size),
                )?);
                seeds.push(AuxChannelPair::new(v, constant_channel(v_size, u_size))?);
            }
        }
    }

    let mut rng = seeds::rng(seeds::derive(
        cfg.seed,
        Purpose::Source,
        0x6175_7800_0000_0000 | class.index as u64,
    ));
    for _ in 0..cfg.restarts {
        let mut random_rows = |input: usize, output: usize| -> Result<Channel> {
            let mut rows = Vec::with_capacity(input * output);
            for _ in 0..input {
                let mut row: Vec<f64> = (0..output)
                    .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                    .collect();
                let total: f64 = row.iter().sum();
                for e in &mut row {
                    *e /= total;
                }
                rows.extend_from_slice(&row);
            }
            Channel::new(input, output, rows)
        };
        let v = random_rows(x, v_size)?;
        let u = random_rows(v_size, u_size)?;
        seeds.push(AuxChannelPair::new(v, u)?);
    }

    // rank all seeds, polish the most promising few
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(seeds.len());
    for (i, aux) in seeds.iter().enumerate() {
        let terms = evaluate_rate(src, class, aux)?;
        scored.push((penalized(&terms, limit), i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let polish = 4.min(scored.len());

    let mut best: Option<(f64, RateTerms, AuxChannelPair)> = None;
    for &(_, idx) in scored.iter().take(polish) {
        if let Some(candidate) = ascend(
            src,
            class,
            limit,
            AuxParams::from_aux(&seeds[idx]),
            cfg,
        )? {
            if best
                .as_ref()
                .is_none_or(|(b, _, _)| candidate.0 > *b)
            {
                best = Some(candidate);
            }
        }
    }

    Ok(match best {
        Some((raw, terms, aux)) => ClassRate {
            class_index: class.index,
            value: raw.max(0.0),
            raw,
            feasible: true,
            terms,
            aux,
        },
        None => ClassRate {
            class_index: class.index,
            value: 0.0,
            raw: 0.0,
            feasible: false,
            terms: RateTerms {
                forward: 0.0,
                leak: 0.0,
                objective: 0.0,
                constraint: 0.0,
            },
            aux: AuxChannelPair::new(
                constant_channel(x, v_size),
                constant_channel(v_size, u_size),
            )?,
        },
    })
}

/// n-letter blocks of every state, same compound structure.
fn product_source(src: &CompoundSource, n: usize) -> Result<CompoundSource> {
    let pow = |base: usize| -> Option<usize> { base.checked_pow(n as u32) };
    let (Some(xs), Some(ys), Some(zs)) = (
        pow(src.x_size()),
        pow(src.y_size()),
        pow(src.z_size()),
    ) else {
        return Err(Error::Budget("block alphabet overflows".into()));
    };
    if xs.checked_mul(ys).and_then(|v| v.checked_mul(zs)).is_none_or(|c| c > 1 << 24) {
        return Err(Error::Budget(
            "block joint exceeds 2^24 cells; lower the block length".into(),
        ));
    }
    let digits = |mut flat: usize, size: usize| -> Vec<usize> {
        let mut d = vec![0; n];
        for slot in d.iter_mut().rev() {
            *slot = flat % size;
            flat /= size;
        }
        d
    };
    let states = src
        .states()
        .iter()
        .map(|st| {
            let joint = JointPmf::from_fn(vec![xs, ys, zs], |idx| {
                let xd = digits(idx[0], src.x_size());
                let yd = digits(idx[1], src.y_size());
                let zd = digits(idx[2], src.z_size());
                (0..n)
                    .map(|t| st.joint.get(&[xd[t], yd[t], zd[t]]))
                    .product()
            })?;
            Ok(SourceState {
                label: st.label.clone(),
                joint,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CompoundSource::new(xs, ys, zs, states)
}

/// n-fold product of a channel acting letterwise.
fn kron_channel(c: &Channel, n: usize) -> Result<Channel> {
    let ins = c
        .input_size()
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Budget("channel power overflows".into()))?;
    let outs = c
        .output_size()
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Budget("channel power overflows".into()))?;
    let digits = |mut flat: usize, size: usize| -> Vec<usize> {
        let mut d = vec![0; n];
        for slot in d.iter_mut().rev() {
            *slot = flat % size;
            flat /= size;
        }
        d
    };
    let mut rows = Vec::with_capacity(ins * outs);
    for xin in 0..ins {
        let xd = digits(xin, c.input_size());
        for xout in 0..outs {
            let yd = digits(xout, c.output_size());
            rows.push((0..n).map(|t| c.get(xd[t], yd[t])).product());
        }
    }
    Channel::new(ins, outs, rows)
}

#[derive(Debug, Clone)]
pub struct MultiLetterReport {
    pub n: usize,
    /// Block value divided by n; never below the single-letter value
    /// up to search tolerance.
    pub per_letter: f64,
    pub block: RateReport,
    pub single: RateReport,
}

/// Evaluates the lower bound on n-letter blocks with no public budget,
/// warm-started from the letterwise product of the single-letter
/// optimum (which already guarantees per-letter >= single-letter).
pub fn multi_letter_rate(
    src: &CompoundSource,
    n: usize,
    cfg: &SearchConfig,
) -> Result<MultiLetterReport> {
    if n == 0 {
        return Err(Error::Domain("block length must be positive".into()));
    }
    if src
        .x_size()
        .checked_pow(n as u32)
        .is_none_or(|v| v > 16)
    {
        return Err(Error::Budget(
            "source block alphabet above 16; lower the block length".into(),
        ));
    }
    let single = rate_lower_bound(src, f64::INFINITY, cfg)?;
    if n == 1 {
        return Ok(MultiLetterReport {
            n,
            per_letter: single.value,
            block: single.clone(),
            single,
        });
    }
    let prod = product_source(src, n)?;
    let classes = prod.marginal_partition();
    if classes.len() != single.classes.len() {
        return Err(Error::Domain(
            "block partition disagrees with the letter partition".into(),
        ));
    }
    // polishing on the block is expensive; keep it short
    let warm_v = single.classes[0].aux.v_size().pow(n as u32);
    let warm_u = single.classes[0].aux.u_size().pow(n as u32);
    let prod_cfg = SearchConfig {
        u_size: warm_u,
        v_size: warm_v,
        grid: 0,
        restarts: cfg.restarts.min(2),
        max_sweeps: cfg.max_sweeps.min(40),
        tol: cfg.tol.max(1e-5),
        seed: cfg.seed,
    };
    let mut out = Vec::with_capacity(classes.len());
    for class in &classes {
        let warm = AuxChannelPair::new(
            kron_channel(&single.classes[class.index].aux.v_given_x, n)?,
            kron_channel(&single.classes[class.index].aux.u_given_v, n)?,
        )?;
        out.push(search_class(&prod, class, f64::INFINITY, &prod_cfg, &[warm])?);
    }
    let (limiting, value) = out
        .iter()
        .map(|c| c.value)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one class");
    let block = RateReport {
        value,
        gamma: f64::INFINITY,
        limiting_class: limiting,
        classes: out,
    };
    Ok(MultiLetterReport {
        n,
        per_letter: block.value / n as f64,
        block,
        single,
    })
}

#[derive(Debug, Clone)]
pub struct DegradedClassRate {
    pub class_index: usize,
    /// inf over member states of I(X; Y).
    pub forward_inf: f64,
    /// sup over member states of I(X; Z).
    pub leak_sup: f64,
    pub raw: f64,
    pub forward_state: usize,
    pub leak_state: usize,
}

#[derive(Debug, Clone)]
pub struct DegradedReport {
    /// Exact capacity when every in-class pair is degraded; otherwise
    /// just the value of the formula, flagged below.
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
    pub all_degraded: bool,
    pub limiting_class: usize,
    pub classes: Vec<DegradedClassRate>,
}

/// Closed-form capacity for degraded families:
/// min over classes of (inf_r I(X;Y_r) - sup_t I(X;Z_t)). The flag
/// `all_degraded` reports whether the hypothesis actually holds; the
/// formula value is returned either way.
pub fn degraded_capacity(src: &CompoundSource) -> Result<DegradedReport> {
    let report = check_degraded(src);
    let mut classes = Vec::new();
    for class in src.marginal_partition() {
        let mut forward_inf = f64::INFINITY;
        let mut leak_sup = 0.0f64;
        let (mut fs, mut ls) = (class.members[0], class.members[0]);
        for &s in &class.members {
            let joint = &src.state(s).joint;
            let fwd = joint.mi_between(&[0], &[1]);
            let lk = joint.mi_between(&[0], &[2]);
            if fwd < forward_inf {
                forward_inf = fwd;
                fs = s;
            }
            if lk > leak_sup {
                leak_sup = lk;
                ls = s;
            }
        }
        classes.push(DegradedClassRate {
            class_index: class.index,
            forward_inf,
            leak_sup,
            raw: forward_inf - leak_sup,
            forward_state: fs,
            leak_state: ls,
        });
    }
    let (limiting, raw) = classes
        .iter()
        .map(|c| c.raw)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one class");
    Ok(DegradedReport {
        value: raw.max(0.0),
        raw,
        clamped: raw < 0.0,
        all_degraded: report.all_degraded,
        limiting_class: limiting,
        classes,
    })
}

#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub class_index: usize,
    pub from_state: usize,
    pub to_state: usize,
    /// I(X; Y_r) - I(X; Z_t) from the separate state laws.
    pub direct: f64,
    /// I(X; Y_r | Z) under the coupling built from the witness.
    pub conditional: f64,
    pub gap: f64,
    pub ok: bool,
    /// True when no witness channel exists for the pair, so the
    /// coupling (and hence the check) is unavailable.
    pub skipped: bool,
}

/// For every in-class ordered pair (r, t) with a degradation witness
/// D, couples P_XY[r] with D into a law on (X, Y, Z) and verifies the
/// chain-rule identity I(X;Y_r) - I(X;Z_t) = I(X;Y_r | Z). Equality to
/// 1e-9 confirms both the identity and the witness fidelity.
pub fn degraded_identity_check(src: &CompoundSource) -> Result<Vec<IdentityCheck>> {
    let report = check_degraded(src);
    let mut out = Vec::with_capacity(report.pairs.len());
    for pair in &report.pairs {
        let (r, t) = (pair.from_state, pair.to_state);
        let xy = src.xy(r);
        let direct =
            xy.mi_between(&[0], &[1]) - src.state(t).joint.mi_between(&[0], &[2]);
        match &pair.witness {
            None => out.push(IdentityCheck {
                class_index: pair.class_index,
                from_state: r,
                to_state: t,
                direct,
                conditional: f64::INFINITY,
                gap: f64::INFINITY,
                ok: false,
                skipped: true,
            }),
            Some(d) => {
                let coupled = JointPmf::from_fn(
                    vec![src.x_size(), src.y_size(), src.z_size()],
                    |idx| xy.get(&[idx[0], idx[1]]) * d.get(idx[1], idx[2]),
                )?;
                let conditional = coupled.cmi_between(&[0], &[1], &[2]);
                let gap = direct - conditional;
                out.push(IdentityCheck {
                    class_index: pair.class_index,
                    from_state: r,
                    to_state: t,
                    direct,
                    conditional,
                    gap,
                    ok: gap.abs() <= 1e-9,
                    skipped: false,
                });
            }
        }
    }
    Ok(out)
}

/// Bound on how far mutual information can move between two joint laws
/// on an a x b alphabet at statistical distance gamma (half the summed
/// absolute difference): 3 gamma log2(ab - 1) + 3 h(gamma).
pub fn mi_continuity_bound(gamma: f64, a_size: usize, b_size: usize) -> Result<f64> {
    let cells = (a_size * b_size) as f64;
    if cells < 2.0 {
        return Err(Error::Domain(
            "mutual information needs at least two joint cells".into(),
        ));
    }
    if !(0.0..=1.0).contains(&gamma) || gamma > 1.0 - 1.0 / cells {
        return Err(Error::Domain(format!(
            "distance {gamma} outside [0, 1 - 1/{cells}]"
        )));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    Ok(3.0 * gamma * (cells - 1.0).log2() + 3.0 * binary_entropy(gamma)?)
}

#[derive(Debug, Clone)]
pub struct QuantizedFamily {
    pub aux: AuxChannelPair,
    /// Grid denominator.
    pub l: u64,
    /// log2 of the number of grid points the full net could take:
    /// every conditional entry ranges over l + 1 values.
    pub net_log2: f64,
    /// Largest row-wise statistical distance moved by snapping.
    pub max_row_distance: f64,
}

fn snap_rows(c: &Channel, l: u64) -> Result<(Channel, f64)> {
    let lf = l as f64;
    let m = c.output_size();
    let mut rows = Vec::with_capacity(c.input_size() * m);
    let mut max_dist = 0.0f64;
    for x in 0..c.input_size() {
        let row = c.row(x);
        // round up, then settle the surplus ticks on the heaviest entry:
        // rounding up never zeroes a positive probability, and the
        // heaviest entry carries at least 1/m of the mass, so every
        // original entry stays within a factor e^{2m^2/l} of its snapped
        // value and within m/l of it in absolute terms
        let mut ticks: Vec<i64> = row.iter().map(|p| (p * lf).ceil() as i64).collect();
        let surplus = ticks.iter().sum::<i64>() - l as i64;
        let heavy = (0..m)
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .expect("channel rows are nonempty");
        ticks[heavy] -= surplus;
        if ticks[heavy] < 0 {
            return Err(Error::InvalidMass(format!(
                "row {x} failed to renormalize on the 1/{l} grid"
            )));
        }
        let snapped: Vec<f64> = ticks.iter().map(|&t| t as f64 / lf).collect();
        let dist = 0.5 * kahan_sum(row.iter().zip(&snapped).map(|(a, b)| (a - b).abs()));
        max_dist = max_dist.max(dist);
        rows.extend_from_slice(&snapped);
    }
    Ok((Channel::new(c.input_size(), c.output_size(), rows)?, max_dist))
}

/// Snaps both stages to the grid of multiples of 1/l. The guard
/// l >= 2 m^2, with m the larger auxiliary alphabet, keeps the surplus
/// settlement small enough that the multiplicative bound holds.
pub fn quantize_family(aux: &AuxChannelPair, l: u64) -> Result<QuantizedFamily> {
    let m = aux.u_size().max(aux.v_size()) as u64;
    if l < 2 * m * m {
        return Err(Error::Domain(format!(
            "grid 1/{l} too coarse; need l >= {}",
            2 * m * m
        )));
    }
    let (v, dv) = snap_rows(&aux.v_given_x, l)?;
    let (u, du) = snap_rows(&aux.u_given_v, l)?;
    let entries = (aux.x_size() * aux.v_size() + aux.v_size() * aux.u_size()) as f64;
    Ok(QuantizedFamily {
        aux: AuxChannelPair::new(v, u)?,
        l,
        net_log2: entries * ((l + 1) as f64).log2(),
        max_row_distance: dv.max(du),
    })
}

/// Bound on the objective shift between two auxiliary pairs on one
/// class, from the continuity of mutual information. Each conditional
/// term I(A;B|U) splits as I(AU;B) - I(U;B), each piece bounded at the
/// realized statistical distance of the corresponding joint.
pub fn rate_shift_bound(
    src: &CompoundSource,
    class: &MarginalClass,
    a: &AuxChannelPair,
    b: &AuxChannelPair,
) -> Result<f64> {
    if a.u_size() != b.u_size() || a.v_size() != b.v_size() || a.x_size() != b.x_size() {
        return Err(Error::AlphabetMismatch(
            "shift bound needs matching auxiliary alphabets".into(),
        ));
    }
    let dist = |p: &JointPmf, q: &JointPmf| -> f64 {
        0.5 * kahan_sum(p.mass().iter().zip(q.mass()).map(|(x, y)| (x - y).abs()))
    };
    let mut forward_shift = 0.0f64;
    let mut leak_shift = 0.0f64;
    let (us, vs) = (a.u_size(), a.v_size());
    for &s in &class.members {
        let fa = a.full_joint(&src.state(s).joint)?;
        let fb = b.full_joint(&src.state(s).joint)?;
        // I(V; Y | U) = I(UV; Y) - I(U; Y)
        let y = src.y_size();
        let z = src.z_size();
        let uvy = mi_continuity_bound(dist(&fa.marginal_onto(&[0, 1, 3]), &fb.marginal_onto(&[0, 1, 3])).min(1.0 - 1.0 / (us * vs * y) as f64), us * vs, y)?;
        let uy = mi_continuity_bound(dist(&fa.marginal_onto(&[0, 3]), &fb.marginal_onto(&[0, 3])).min(1.0 - 1.0 / (us * y) as f64), us, y)?;
        forward_shift = forward_shift.max(uvy + uy);
        let uvz = mi_continuity_bound(dist(&fa.marginal_onto(&[0, 1, 4]), &fb.marginal_onto(&[0, 1, 4])).min(1.0 - 1.0 / (us * vs * z) as f64), us * vs, z)?;
        let uz = mi_continuity_bound(dist(&fa.marginal_onto(&[0, 4]), &fb.marginal_onto(&[0, 4])).min(1.0 - 1.0 / (us * z) as f64), us, z)?;
        leak_shift = leak_shift.max(uvz + uz);
    }
    Ok(forward_shift + leak_shift)
}
