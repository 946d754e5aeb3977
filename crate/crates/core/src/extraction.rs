//! Privacy amplification: random key maps, good-set structure, and
//! security indices.
//!
//! The key map is a uniformly random table from the column alphabet
//! (including the failure value 0) onto {1..k}. Its quality is judged
//! by the security index of a key K against a view V,
//!
//!   S = log2 k - H(K) + I(K; V) = log2 k - H(K | V),
//!
//! which is zero exactly for a uniform key independent of the view.
//! The good-set machinery identifies, per state, the high-probability
//! region over (column, adversary view) pairs on which the random
//! table provably extracts: pair probabilities are individually small
//! (flatness), the region captures almost all mass, and the admissible
//! key size follows from the region's slice sizes.

use crate::capacity::AuxChannelPair;
use crate::coding::{CodebookU, Encoder};
use crate::error::{Error, Result};
use crate::estimation::estimate_marginal;
use crate::prob::{binary_entropy, kahan_sum, JointPmf, Pmf};
use crate::seeds::{self, Purpose};
use crate::source::{CompoundSource, MarginalClass};
use crate::typicality::{is_jointly_typical, is_typical, typical_completion_exists};
use rand::Rng;
use std::collections::HashMap;

/// Random table from {0..domain-1} onto {1..k}.
#[derive(Debug, Clone)]
pub struct KeyExtractor {
    domain: u64,
    k: u64,
    pub seed: u64,
    table: Vec<u32>,
}

impl KeyExtractor {
    /// Draws every table entry independently and uniformly from
    /// {1..k}. k may exceed the domain size; the image is then
    /// necessarily a strict subset.
    pub fn draw(domain: u64, k: u64, seed: u64) -> Result<Self> {
        if domain == 0 || k == 0 {
            return Err(Error::Domain("extractor needs domain >= 1 and k >= 1".into()));
        }
        if k > u32::MAX as u64 {
            return Err(Error::Domain(format!("key size {k} too large for a table")));
        }
        if domain > (1 << 30) {
            return Err(Error::Budget(format!(
                "extractor table over domain {domain} exceeds the memory guard"
            )));
        }
        let mut rng = seeds::rng(seed);
        let table = (0..domain)
            .map(|_| rng.gen_range(0..k) as u32 + 1)
            .collect();
        Ok(KeyExtractor {
            domain,
            k,
            seed,
            table,
        })
    }

    /// Explicit table (entries in {1..k}), for tests and demos.
    pub fn from_table(k: u64, table: Vec<u32>) -> Result<Self> {
        if table.is_empty() || k == 0 {
            return Err(Error::Domain("extractor table must be nonempty".into()));
        }
        if table.iter().any(|&v| v == 0 || v as u64 > k) {
            return Err(Error::Domain("table entries must lie in {1..k}".into()));
        }
        Ok(KeyExtractor {
            domain: table.len() as u64,
            k,
            seed: 0,
            table,
        })
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Key value for column c (0 is the encoder's failure value and is
    /// mapped like any other column).
    pub fn key(&self, c: u64) -> u64 {
        self.table[c as usize] as u64
    }
}

/// Tail bound on the chance that pushing `weights` through a random
/// table lands further than eps + 2 eta from uniform, for a weight
/// vector with entries at most 1/lambda outside an eta-mass exception:
/// 2 k exp(-lambda eps^2 (1 - eta) / (2 k (1 + eps))), natural base.
pub fn extractor_deviation_bound(lambda: f64, eps: f64, eta: f64, k: u64) -> Result<f64> {
    if !(lambda > 0.0) || !(eps > 0.0) || !(0.0..1.0).contains(&eta) || k == 0 {
        return Err(Error::Domain(format!(
            "deviation bound needs lambda > 0, eps > 0, eta in [0,1), k >= 1; \
             got ({lambda}, {eps}, {eta}, {k})"
        )));
    }
    let kf = k as f64;
    Ok(2.0 * kf * (-lambda * eps * eps * (1.0 - eta) / (2.0 * kf * (1.0 + eps))).exp())
}

/// Summed distance between the pushforward of `weights` through the
/// table and the uniform law on {1..k}.
pub fn pushforward_distance(ex: &KeyExtractor, weights: &[f64]) -> Result<f64> {
    if weights.len() as u64 != ex.domain {
        return Err(Error::AlphabetMismatch(format!(
            "{} weights for a domain of {}",
            weights.len(),
            ex.domain
        )));
    }
    let total = kahan_sum(weights.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidMass(format!(
            "pushforward weights sum to {total}"
        )));
    }
    let mut push = vec![0.0; ex.k as usize];
    for (c, &w) in weights.iter().enumerate() {
        push[(ex.key(c as u64) - 1) as usize] += w;
    }
    let unif = 1.0 / ex.k as f64;
    Ok(kahan_sum(push.iter().map(|&p| (p - unif).abs())))
}

/// Security index of the key axes against all remaining axes,
/// S = log2 k - H(K | rest). Tiny negatives are float noise.
pub fn security_index_from_joint(joint: &JointPmf, key_axes: &[usize], k: u64) -> f64 {
    let rest: Vec<usize> = (0..joint.rank())
        .filter(|a| !key_axes.contains(a))
        .collect();
    let h_cond = if rest.is_empty() {
        joint.entropy()
    } else {
        joint.entropy() - joint.entropy_of(&rest)
    };
    let s = (k as f64).log2() - h_cond;
    debug_assert!(s > -1e-9, "security index {s} below noise floor");
    s.max(0.0)
}

fn entropy_of_weights(weights: &mut [(u64, f64)]) -> f64 {
    weights.sort_unstable_by_key(|&(key, _)| key);
    kahan_sum(
        weights
            .iter()
            .filter(|&&(_, p)| p > 0.0)
            .map(|&(_, p)| -p * p.log2()),
    )
}

fn unflatten(mut flat: u64, n: usize, size: usize) -> Vec<u8> {
    let mut seq = vec![0u8; n];
    for slot in seq.iter_mut().rev() {
        *slot = (flat % size as u64) as u8;
        flat /= size as u64;
    }
    seq
}

/// Parameters shared by the good-set construction.
#[derive(Debug, Clone, Copy)]
pub struct GoodSetParams {
    /// Rate slack of the enclosing construction.
    pub delta: f64,
    /// Probability-smoothing slack; alpha = 2^(-n (delta + 5 tau)).
    pub tau: f64,
    /// Adversary-block typicality radius.
    pub xi: f64,
    /// Triple-window radius for the revealed indicator.
    pub sigma: f64,
    /// log2 cap on both enumeration passes.
    pub budget_log2: u32,
}

#[derive(Debug, Clone)]
pub struct StateGoodSets {
    pub state: usize,
    /// Number of admissible adversary views d.
    pub d_count: u64,
    /// Total pairs (column, view) in the good set.
    pub b_size: u64,
    /// Smallest slice size over admissible views.
    pub min_bd: u64,
    /// P((column, view) lands in the good set | class).
    pub prob_in_b: f64,
    /// max over good pairs of P(pair | class) * alpha * b_size; the
    /// flatness condition requires this below 1.
    pub max_pair_scaled: f64,
    pub flatness_ok: bool,
    pub mass_ok: bool,
}

#[derive(Debug, Clone)]
pub struct GoodSetFamily {
    pub alpha: f64,
    pub eta: f64,
    /// alpha^3 * min slice size: the effective flatness scale fed to
    /// the extractor tail bound.
    pub lambda: f64,
    pub min_bd: u64,
    pub max_d_count: u64,
    pub member_count: u64,
    pub states: Vec<StateGoodSets>,
    /// alpha <= 1/6, eta <= 1/3, alpha <= eta.
    pub regime_ok: bool,
    /// Largest power of two satisfying both key-size conditions; 0
    /// when even a single key bit is unsupported.
    pub k_max: u64,
    pub failures: Vec<String>,
}

impl GoodSetFamily {
    /// Residual security bound (alpha + 2 eta) log2 k + h(alpha + eta)
    /// for an admissible k; None outside the regime.
    pub fn residual_security_bound(&self, k: u64) -> Option<f64> {
        if !self.regime_ok || k == 0 || k > self.k_max {
            return None;
        }
        let arg = self.alpha + self.eta;
        Some((self.alpha + 2.0 * self.eta) * (k as f64).log2() + binary_entropy(arg).ok()?)
    }

    /// Lower bound on the chance a random table achieves the residual
    /// bound: 1 - 2 k S D exp(-alpha^5 min_bd / k), natural base.
    pub fn success_probability_bound(&self, k: u64) -> Option<f64> {
        if !self.regime_ok || k == 0 || k > self.k_max {
            return None;
        }
        let exponent = self.alpha.powi(5) * self.min_bd as f64 / k as f64;
        Some(
            1.0 - 2.0
                * k as f64
                * self.member_count as f64
                * self.max_d_count as f64
                * (-exponent).exp(),
        )
    }
}

/// Builds the per-state good sets for one class with its realized
/// codebook: views d = (row, adversary block, indicator 1) with the
/// block xi-typical, paired with every column whose codeword window
/// over (codeword, source, adversary) can still be completed.
pub fn build_good_sets(
    src: &CompoundSource,
    class: &MarginalClass,
    aux: &AuxChannelPair,
    cb: &CodebookU,
    enc: &Encoder,
    params: &GoodSetParams,
) -> Result<GoodSetFamily> {
    let n = cb.n;
    let nf = n as f64;
    if !(params.delta > 0.0) || !(params.tau > 0.0) {
        return Err(Error::Domain("good sets need delta > 0 and tau > 0".into()));
    }
    let alpha = (-nf * (params.delta + 5.0 * params.tau)).exp2();
    let eta = (-nf * params.delta).exp2();
    let mut failures = Vec::new();
    let mut regime_ok = true;
    if alpha > 1.0 / 6.0 {
        regime_ok = false;
        failures.push(format!("alpha {alpha:.6} exceeds 1/6; n too small for this delta"));
    }
    if eta > 1.0 / 3.0 {
        regime_ok = false;
        failures.push(format!("eta {eta:.6} exceeds 1/3; n too small for this delta"));
    }
    if alpha > eta {
        regime_ok = false;
        failures.push(format!("alpha {alpha:.6} exceeds eta {eta:.6}"));
    }

    let budget = 1u64 << params.budget_log2.min(62);
    let zspace = (src.z_size() as u64).checked_pow(n as u32);
    let xspace = (src.x_size() as u64).checked_pow(n as u32);
    let (Some(zspace), Some(xspace)) = (zspace, xspace) else {
        return Err(Error::Budget("block space overflows".into()));
    };
    let structural_cost = cb
        .n1
        .checked_mul(cb.n2)
        .and_then(|v| v.checked_mul(zspace));
    let prob_cost = xspace.checked_mul(zspace);
    match (structural_cost, prob_cost) {
        (Some(a), Some(b)) if a <= budget && b <= budget => {}
        _ => {
            return Err(Error::Budget(format!(
                "good-set enumeration exceeds 2^{} cells",
                params.budget_log2
            )))
        }
    }

    let class_marginals: Vec<Pmf> = src
        .marginal_partition()
        .iter()
        .map(|c| c.x_marginal.clone())
        .collect();

    // encode every source block once; the encoder is state independent
    let mut encodes = Vec::with_capacity(xspace as usize);
    let mut gate_mass = 0.0f64;
    let mut x_prob = Vec::with_capacity(xspace as usize);
    let mut gated = Vec::with_capacity(xspace as usize);
    for xflat in 0..xspace {
        let x = unflatten(xflat, n, src.x_size());
        let p: f64 = x.iter().map(|&s| class.x_marginal.get(s as usize)).product();
        x_prob.push(p);
        if p == 0.0 {
            encodes.push((0u64, 0u64));
            gated.push(false);
            continue;
        }
        let keep = estimate_marginal(&x, &class_marginals)
            .map(|r| r.estimated_class == class.index)
            .unwrap_or(false);
        gated.push(keep);
        if keep {
            gate_mass += p;
            let r = enc.encode(&x);
            encodes.push((r.i, r.j));
        } else {
            encodes.push((0, 0));
        }
    }
    if gate_mass <= 0.0 {
        return Err(Error::Domain(
            "class estimate has zero probability under its own marginal".into(),
        ));
    }

    let mut states = Vec::with_capacity(class.members.len());
    let mut min_bd_global = u64::MAX;
    let mut max_d_count = 0u64;
    for &s in &class.members {
        let full = aux.full_joint(&src.state(s).joint)?;
        let joint_uxz = full.marginal_onto(&[0, 2, 4]);
        let pz = src.state(s).joint.axis_pmf(2);
        let xz = src.xz(s);

        // structural pass: views and slice sizes
        let mut d_count = 0u64;
        let mut b_size = 0u64;
        let mut min_bd = u64::MAX;
        let mut z_typ = vec![false; zspace as usize];
        for zflat in 0..zspace {
            let z = unflatten(zflat, n, src.z_size());
            if !is_typical(&z, &pz, params.xi) {
                continue;
            }
            z_typ[zflat as usize] = true;
            for i in 1..=cb.n1 {
                let mut slice = 0u64;
                for j in 1..=cb.n2 {
                    let u = cb.row(i, j);
                    if typical_completion_exists(&[u, &z], &[0, 2], &joint_uxz, params.sigma) {
                        slice += 1;
                    }
                }
                if slice > 0 {
                    d_count += 1;
                    b_size += slice;
                    min_bd = min_bd.min(slice);
                }
            }
        }

        // probability pass: mass inside the good set and flatness
        let mut pair_mass: HashMap<(u64, u64, u64), f64> = HashMap::new();
        let mut in_b = 0.0f64;
        for xflat in 0..xspace {
            if !gated[xflat as usize] || x_prob[xflat as usize] == 0.0 {
                continue;
            }
            let (i, j) = encodes[xflat as usize];
            if j == 0 {
                continue;
            }
            let x = unflatten(xflat, n, src.x_size());
            let u = cb.row(i, j);
            for zflat in 0..zspace {
                if !z_typ[zflat as usize] {
                    continue;
                }
                let z = unflatten(zflat, n, src.z_size());
                let w: f64 = x
                    .iter()
                    .zip(&z)
                    .map(|(&a, &b)| xz.get(&[a as usize, b as usize]))
                    .product();
                if w == 0.0 {
                    continue;
                }
                if is_jointly_typical(&[u, &x, &z], &joint_uxz, params.sigma) {
                    let w = w / gate_mass;
                    in_b += w;
                    *pair_mass.entry((j, i, zflat)).or_insert(0.0) += w;
                }
            }
        }
        let max_pair = pair_mass.values().copied().fold(0.0f64, f64::max);
        let max_pair_scaled = max_pair * alpha * b_size as f64;
        let flatness_ok = b_size > 0 && max_pair_scaled < 1.0;
        let mass_ok = in_b >= 1.0 - (eta * eta - alpha * alpha);
        if !flatness_ok {
            failures.push(format!(
                "state {s}: flatness fails (max scaled pair mass {max_pair_scaled:.4})"
            ));
        }
        if !mass_ok {
            failures.push(format!(
                "state {s}: good-set mass {in_b:.6} below 1 - (eta^2 - alpha^2)"
            ));
        }
        min_bd_global = min_bd_global.min(min_bd);
        max_d_count = max_d_count.max(d_count);
        states.push(StateGoodSets {
            state: s,
            d_count,
            b_size,
            min_bd,
            prob_in_b: in_b,
            max_pair_scaled,
            flatness_ok,
            mass_ok,
        });
    }

    // key-size conditions, evaluated in log space: log2 k < 6 log2
    // alpha + log2 min_bd and log2 k < (log2 e)/alpha - log2(2 S D)
    let members = class.members.len() as u64;
    let mut k_max = 0u64;
    if min_bd_global != u64::MAX && min_bd_global > 0 {
        let size_cap = 6.0 * alpha.log2() + (min_bd_global as f64).log2();
        let count_cap = std::f64::consts::LOG2_E / alpha
            - (2.0 * members as f64 * max_d_count as f64).log2();
        for m in 0..=62u32 {
            let lk = m as f64;
            if lk < size_cap && lk < count_cap {
                k_max = 1u64 << m;
            } else {
                break;
            }
        }
    }
    if k_max == 0 {
        failures.push("no power-of-two key size satisfies the slice conditions".into());
    }
    let lambda = if min_bd_global == u64::MAX {
        0.0
    } else {
        alpha.powi(3) * min_bd_global as f64
    };

    Ok(GoodSetFamily {
        alpha,
        eta,
        lambda,
        min_bd: if min_bd_global == u64::MAX { 0 } else { min_bd_global },
        max_d_count,
        member_count: members,
        states,
        regime_ok,
        k_max,
        failures,
    })
}

/// How the key-view joint is obtained.
#[derive(Debug, Clone, Copy)]
pub enum SecurityMode {
    /// Full enumeration of (source block, adversary block).
    Exact,
    /// Monte Carlo with a bias-corrected entropy estimate.
    PlugIn { samples: u64 },
}

#[derive(Debug, Clone)]
pub struct SecurityParams {
    pub mode: SecurityMode,
    /// Triple-window radius for the revealed indicator.
    pub sigma: f64,
    pub budget_log2: u32,
    pub master_seed: u64,
}

#[derive(Debug, Clone)]
pub struct StateSecurity {
    pub state: usize,
    /// Index against (row, adversary block, indicator): the view the
    /// achievability argument actually conditions on.
    pub proof_index: f64,
    /// Index against (row, adversary block) only.
    pub plain_index: f64,
    pub key_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct SecurityAssessment {
    pub mode: &'static str,
    pub k: u64,
    pub states: Vec<StateSecurity>,
    pub max_proof_index: f64,
    pub max_plain_index: f64,
}

/// Evaluates the realized security indices per state in the class,
/// conditioning on the class estimate. The proof-style view includes
/// the typicality indicator; both variants are reported.
pub fn assess_security(
    src: &CompoundSource,
    class: &MarginalClass,
    aux: &AuxChannelPair,
    cb: &CodebookU,
    enc: &Encoder,
    extractor: &KeyExtractor,
    params: &SecurityParams,
) -> Result<SecurityAssessment> {
    if extractor.domain() != cb.n2 + 1 {
        return Err(Error::AlphabetMismatch(format!(
            "extractor domain {} does not cover columns 0..={}",
            extractor.domain(),
            cb.n2
        )));
    }
    let n = cb.n;
    let class_marginals: Vec<Pmf> = src
        .marginal_partition()
        .iter()
        .map(|c| c.x_marginal.clone())
        .collect();
    let k = extractor.k();

    let mut states = Vec::with_capacity(class.members.len());
    let mut max_proof = 0.0f64;
    let mut max_plain = 0.0f64;
    for &s in &class.members {
        let full = aux.full_joint(&src.state(s).joint)?;
        let joint_uxz = full.marginal_onto(&[0, 2, 4]);
        let xz = src.xz(s);
        let (kv_proof, v_proof, kv_plain, v_plain, k_marg) = match params.mode {
            SecurityMode::Exact => exact_view_weights(
                src, class, &class_marginals, cb, enc, extractor, &joint_uxz, &xz, n, params,
            )?,
            SecurityMode::PlugIn { samples } => plugin_view_weights(
                src, class, &class_marginals, cb, enc, extractor, &joint_uxz, &xz, n, s, samples,
                params,
            )?,
        };
        let log2k = (k as f64).log2();
        let proof_index = (log2k - (kv_proof.entropy() - v_proof.entropy())).max(0.0);
        let plain_index = (log2k - (kv_plain.entropy() - v_plain.entropy())).max(0.0);
        let key_entropy = k_marg.entropy();
        max_proof = max_proof.max(proof_index);
        max_plain = max_plain.max(plain_index);
        states.push(StateSecurity {
            state: s,
            proof_index,
            plain_index,
            key_entropy,
        });
    }
    Ok(SecurityAssessment {
        mode: match params.mode {
            SecurityMode::Exact => "exact",
            SecurityMode::PlugIn { .. } => "plug-in",
        },
        k,
        states,
        max_proof_index: max_proof,
        max_plain_index: max_plain,
    })
}

/// Weight table for one view, with an additive correction applied to
/// the entropy (nonzero only for the plug-in estimator).
struct WeightedView {
    weights: Vec<(u64, f64)>,
    entropy_credit: f64,
}

impl WeightedView {
    fn exact(map: HashMap<u64, f64>) -> Self {
        WeightedView {
            weights: map.into_iter().collect(),
            entropy_credit: 0.0,
        }
    }

    /// Relative frequencies with the Miller-Madow bias correction
    /// (cells - 1) / (2 N) in natural-log units, converted to bits.
    fn counted(map: HashMap<u64, u64>, samples: u64) -> Self {
        let nf = samples as f64;
        let cells = map.len() as f64;
        WeightedView {
            weights: map.into_iter().map(|(k, c)| (k, c as f64 / nf)).collect(),
            entropy_credit: (cells - 1.0) / (2.0 * nf) * std::f64::consts::LOG2_E,
        }
    }

    fn entropy(mut self) -> f64 {
        entropy_of_weights(&mut self.weights) + self.entropy_credit
    }
}

type ViewWeights = (
    WeightedView,
    WeightedView,
    WeightedView,
    WeightedView,
    WeightedView,
);

fn pack_proof(key: u64, i: u64, zflat: u64, ind: bool, n1: u64, zspace: u64) -> u64 {
    ((key * (n1 + 1) + i) * zspace + zflat) * 2 + u64::from(ind)
}

#[allow(clippy::too_many_arguments)]
fn exact_view_weights(
    src: &CompoundSource,
    class: &MarginalClass,
    class_marginals: &[Pmf],
    cb: &CodebookU,
    enc: &Encoder,
    extractor: &KeyExtractor,
    joint_uxz: &JointPmf,
    xz: &JointPmf,
    n: usize,
    params: &SecurityParams,
) -> Result<ViewWeights> {
    let zspace = (src.z_size() as u64)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Budget("adversary space overflows".into()))?;
    let xspace = (src.x_size() as u64)
        .checked_pow(n as u32)
        .ok_or_else(|| Error::Budget("source space overflows".into()))?;
    let budget = 1u64 << params.budget_log2.min(62);
    if xspace.checked_mul(zspace).is_none_or(|c| c > budget) {
        return Err(Error::Budget(format!(
            "exact security enumeration exceeds 2^{} pairs",
            params.budget_log2
        )));
    }

    let mut kv_proof: HashMap<u64, f64> = HashMap::new();
    let mut v_proof: HashMap<u64, f64> = HashMap::new();
    let mut kv_plain: HashMap<u64, f64> = HashMap::new();
    let mut v_plain: HashMap<u64, f64> = HashMap::new();
    let mut k_marg: HashMap<u64, f64> = HashMap::new();
    let mut gate_mass = 0.0f64;

    // first pass for the normalizer
    let mut keep = vec![false; xspace as usize];
    for xflat in 0..xspace {
        let x = unflatten(xflat, n, src.x_size());
        let p: f64 = x.iter().map(|&s| class.x_marginal.get(s as usize)).product();
        if p == 0.0 {
            continue;
        }
        if estimate_marginal(&x, class_marginals)
            .map(|r| r.estimated_class == class.index)
            .unwrap_or(false)
        {
            keep[xflat as usize] = true;
            gate_mass += p;
        }
    }
    if gate_mass <= 0.0 {
        return Err(Error::Domain(
            "class estimate has zero probability under its own marginal".into(),
        ));
    }

    for xflat in 0..xspace {
        if !keep[xflat as usize] {
            continue;
        }
        let x = unflatten(xflat, n, src.x_size());
        let r = enc.encode(&x);
        let key = extractor.key(r.j);
        for zflat in 0..zspace {
            let z = unflatten(zflat, n, src.z_size());
            let w: f64 = x
                .iter()
                .zip(&z)
                .map(|(&a, &b)| xz.get(&[a as usize, b as usize]))
                .product();
            if w == 0.0 {
                continue;
            }
            let w = w / gate_mass;
            let ind = !r.is_failure()
                && is_jointly_typical(&[cb.row(r.i, r.j), &x, &z], joint_uxz, params.sigma);
            let vp = pack_proof(0, r.i, zflat, ind, cb.n1, zspace);
            let kp = pack_proof(key, r.i, zflat, ind, cb.n1, zspace);
            let vl = (r.i * zspace + zflat) * 2;
            let kl = (key * (cb.n1 + 1) + r.i) * zspace * 2 + zflat * 2;
            *kv_proof.entry(kp).or_insert(0.0) += w;
            *v_proof.entry(vp).or_insert(0.0) += w;
            *kv_plain.entry(kl).or_insert(0.0) += w;
            *v_plain.entry(vl).or_insert(0.0) += w;
            *k_marg.entry(key).or_insert(0.0) += w;
        }
    }
    Ok((
        WeightedView::exact(kv_proof),
        WeightedView::exact(v_proof),
        WeightedView::exact(kv_plain),
        WeightedView::exact(v_plain),
        WeightedView::exact(k_marg),
    ))
}

#[allow(clippy::too_many_arguments)]
fn plugin_view_weights(
    src: &CompoundSource,
    class: &MarginalClass,
    class_marginals: &[Pmf],
    cb: &CodebookU,
    enc: &Encoder,
    extractor: &KeyExtractor,
    joint_uxz: &JointPmf,
    xz: &JointPmf,
    n: usize,
    state: usize,
    samples: u64,
    params: &SecurityParams,
) -> Result<ViewWeights> {
    if samples == 0 {
        return Err(Error::Domain("plug-in mode needs samples".into()));
    }
    let zbits = n as f64 * (src.z_size() as f64).log2();
    if zbits > 40.0 {
        return Err(Error::Budget(
            "adversary blocks too large to index in plug-in mode".into(),
        ));
    }
    let zspace = (src.z_size() as u64).pow(n as u32);
    let mut cum = Vec::with_capacity(xz.mass().len());
    let mut acc = 0.0;
    for &p in xz.mass() {
        acc += p;
        cum.push(acc);
    }
    let zs = src.z_size() as u64;

    let mut kv_proof: HashMap<u64, u64> = HashMap::new();
    let mut v_proof: HashMap<u64, u64> = HashMap::new();
    let mut kv_plain: HashMap<u64, u64> = HashMap::new();
    let mut v_plain: HashMap<u64, u64> = HashMap::new();
    let mut k_marg: HashMap<u64, u64> = HashMap::new();

    let mut kept = 0u64;
    let mut attempts = 0u64;
    let cap = samples.saturating_mul(20);
    let mut trial = 0u64;
    let mut x = vec![0u8; n];
    let mut z = vec![0u8; n];
    while kept < samples {
        if attempts >= cap {
            return Err(Error::Domain(
                "class estimate rejects too many samples in plug-in mode".into(),
            ));
        }
        attempts += 1;
        let mut rng = seeds::rng(seeds::derive(
            params.master_seed,
            Purpose::Source,
            ((state as u64) << 48) | trial,
        ));
        trial += 1;
        let mut zflat = 0u64;
        for t in 0..n {
            let u: f64 = rng.gen();
            let cell = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
            x[t] = (cell / src.z_size()) as u8;
            z[t] = (cell % src.z_size()) as u8;
            zflat = zflat * zs + z[t] as u64;
        }
        if !estimate_marginal(&x, class_marginals)
            .map(|r| r.estimated_class == class.index)
            .unwrap_or(false)
        {
            continue;
        }
        kept += 1;
        let r = enc.encode(&x);
        let key = extractor.key(r.j);
        let ind = !r.is_failure()
            && is_jointly_typical(&[cb.row(r.i, r.j), &x, &z], joint_uxz, params.sigma);
        let vp = pack_proof(0, r.i, zflat, ind, cb.n1, zspace);
        let kp = pack_proof(key, r.i, zflat, ind, cb.n1, zspace);
        let vl = (r.i * zspace + zflat) * 2;
        let kl = (key * (cb.n1 + 1) + r.i) * zspace * 2 + zflat * 2;
        *kv_proof.entry(kp).or_insert(0) += 1;
        *v_proof.entry(vp).or_insert(0) += 1;
        *kv_plain.entry(kl).or_insert(0) += 1;
        *v_plain.entry(vl).or_insert(0) += 1;
        *k_marg.entry(key).or_insert(0) += 1;
    }

    Ok((
        WeightedView::counted(kv_proof, samples),
        WeightedView::counted(v_proof, samples),
        WeightedView::counted(kv_plain, samples),
        WeightedView::counted(v_plain, samples),
        WeightedView::counted(k_marg, samples),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviation_bound_pinned_values() {
        let b = extractor_deviation_bound(1000.0, 0.1, 0.0, 2).unwrap();
        assert!((b - 0.4121232138470568).abs() < 1e-12, "got {b}");
        let b2 = extractor_deviation_bound(4096.0, 0.1, 0.0, 4).unwrap();
        assert!((b2 - 0.07614590984779135).abs() < 1e-12, "got {b2}");
        assert!(extractor_deviation_bound(0.0, 0.1, 0.0, 2).is_err());
        assert!(extractor_deviation_bound(10.0, 0.1, 1.0, 2).is_err());
    }

    #[test]
    fn draws_are_uniform_and_reproducible() {
        let a = KeyExtractor::draw(10_000, 4, 3).unwrap();
        let b = KeyExtractor::draw(10_000, 4, 3).unwrap();
        assert_eq!(a.table, b.table);
        let mut counts = [0u64; 4];
        for c in 0..a.domain() {
            counts[(a.key(c) - 1) as usize] += 1;
        }
        for &c in &counts {
            assert!((c as f64 / 10_000.0 - 0.25).abs() < 0.02);
        }
        // k larger than the domain is legal
        let small = KeyExtractor::draw(2, 16, 9).unwrap();
        assert!(small.key(0) >= 1 && small.key(0) <= 16);
    }

    #[test]
    fn pushforward_distance_cases() {
        let even = KeyExtractor::from_table(2, vec![1, 1, 2]).unwrap();
        let d = pushforward_distance(&even, &[0.25, 0.25, 0.5]).unwrap();
        assert!(d.abs() < 1e-15);
        let collapsed = KeyExtractor::from_table(2, vec![1, 1, 1]).unwrap();
        let d2 = pushforward_distance(&collapsed, &[0.25, 0.25, 0.5]).unwrap();
        assert!((d2 - 1.0).abs() < 1e-15);
        assert!(pushforward_distance(&even, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn random_tables_rarely_deviate() {
        // uniform weights over 1024 columns: lambda = 1024, eta = 0
        let weights = vec![1.0 / 1024.0; 1024];
        let eps = 0.1;
        let bound = extractor_deviation_bound(1024.0, eps, 0.0, 2).unwrap();
        let mut fails = 0u64;
        let trials = 2000;
        for t in 0..trials {
            let ex = KeyExtractor::draw(1024, 2, 1000 + t).unwrap();
            if pushforward_distance(&ex, &weights).unwrap() > eps {
                fails += 1;
            }
        }
        let frac = fails as f64 / trials as f64;
        assert!(
            frac <= bound,
            "empirical failure {frac} above bound {bound}"
        );
    }

    fn pipeline(
        n: usize,
        delta: f64,
    ) -> (
        CompoundSource,
        AuxChannelPair,
        CodebookU,
        crate::coding::CodebookSizes,
    ) {
        use crate::prob::{Channel, Pmf};
        let px = Pmf::new(vec![0.7, 0.3]).unwrap();
        let src = CompoundSource::cascade(
            &px,
            &[("s0", Channel::bsc(0.1).unwrap(), Channel::bsc(0.15).unwrap())],
        )
        .unwrap();
        let class = src.marginal_partition().remove(0);
        let aux = AuxChannelPair::identity(2);
        let sizes = crate::coding::codebook_sizes(&src, &class, &aux, n, delta).unwrap();
        let cb = CodebookU::draw(&class.x_marginal, n, sizes.n1, sizes.n2, 77).unwrap();
        (src, aux, cb, sizes)
    }

    #[test]
    fn good_sets_on_a_small_block() {
        let (src, aux, cb, _) = pipeline(6, 0.11);
        let class = src.marginal_partition().remove(0);
        let joint_ux = aux.ux_joint(&class.x_marginal).unwrap();
        let enc = Encoder::new(&cb, joint_ux, 0.12).unwrap();
        let params = GoodSetParams {
            delta: 0.11,
            tau: 0.02,
            xi: 0.12,
            sigma: 0.15,
            budget_log2: 24,
        };
        let fam = build_good_sets(&src, &class, &aux, &cb, &enc, &params).unwrap();
        assert!((fam.alpha - (-6.0f64 * (0.11 + 0.10)).exp2()).abs() < 1e-15);
        assert!((fam.eta - (-6.0f64 * 0.11).exp2()).abs() < 1e-15);
        // n = 6 is far below the asymptotic regime and the report says so
        assert!(!fam.regime_ok);
        assert!(!fam.failures.is_empty());
        assert_eq!(fam.states.len(), 1);
        let st = &fam.states[0];
        assert!(st.d_count > 0);
        assert!(st.b_size >= st.d_count);
        assert!(st.min_bd >= 1 && st.min_bd <= cb.n2);
        assert!(st.prob_in_b > 0.0 && st.prob_in_b <= 1.0 + 1e-12);
        // outside the regime no residual bound is quoted
        assert!(fam.residual_security_bound(2).is_none());
    }

    #[test]
    fn exact_and_plugin_security_agree() {
        let (src, aux, cb, _) = pipeline(6, 0.11);
        let class = src.marginal_partition().remove(0);
        let joint_ux = aux.ux_joint(&class.x_marginal).unwrap();
        let enc = Encoder::new(&cb, joint_ux, 0.12).unwrap();
        let ex = KeyExtractor::draw(cb.n2 + 1, 2, 5).unwrap();
        let exact = assess_security(
            &src,
            &class,
            &aux,
            &cb,
            &enc,
            &ex,
            &SecurityParams {
                mode: SecurityMode::Exact,
                sigma: 0.15,
                budget_log2: 24,
                master_seed: 0,
            },
        )
        .unwrap();
        assert_eq!(exact.mode, "exact");
        assert_eq!(exact.states.len(), 1);
        assert!(exact.max_proof_index.is_finite() && exact.max_proof_index >= 0.0);
        assert!(exact.states[0].key_entropy <= 1.0 + 1e-12);
        // the estimator converges to the exact answer
        let plug = assess_security(
            &src,
            &class,
            &aux,
            &cb,
            &enc,
            &ex,
            &SecurityParams {
                mode: SecurityMode::PlugIn { samples: 40_000 },
                sigma: 0.15,
                budget_log2: 24,
                master_seed: 99,
            },
        )
        .unwrap();
        assert!(
            (plug.max_proof_index - exact.max_proof_index).abs() < 0.05,
            "plug-in {} vs exact {}",
            plug.max_proof_index,
            exact.max_proof_index
        );
        assert!(
            (plug.max_plain_index - exact.max_plain_index).abs() < 0.05,
            "plug-in {} vs exact {}",
            plug.max_plain_index,
            exact.max_plain_index
        );
        // replays are bitwise identical
        let plug2 = assess_security(
            &src,
            &class,
            &aux,
            &cb,
            &enc,
            &ex,
            &SecurityParams {
                mode: SecurityMode::PlugIn { samples: 40_000 },
                sigma: 0.15,
                budget_log2: 24,
                master_seed: 99,
            },
        )
        .unwrap();
        assert_eq!(plug.max_proof_index, plug2.max_proof_index);
    }

    #[test]
    fn security_rejects_mismatched_extractor() {
        let (src, aux, cb, _) = pipeline(6, 0.11);
        let class = src.marginal_partition().remove(0);
        let joint_ux = aux.ux_joint(&class.x_marginal).unwrap();
        let enc = Encoder::new(&cb, joint_ux, 0.12).unwrap();
        let ex = KeyExtractor::draw(cb.n2 + 7, 2, 5).unwrap();
        let err = assess_security(
            &src,
            &class,
            &aux,
            &cb,
            &enc,
            &ex,
            &SecurityParams {
                mode: SecurityMode::Exact,
                sigma: 0.15,
                budget_log2: 24,
                master_seed: 0,
            },
        );
        assert!(matches!(err, Err(Error::AlphabetMismatch(_))));
    }

    #[test]
    fn security_index_anchors() {
        // uniform key independent of the view: index 0
        let indep = JointPmf::new(vec![2, 2], vec![0.25; 4]).unwrap();
        assert!(security_index_from_joint(&indep, &[0], 2).abs() < 1e-12);
        // view reveals the key completely: index log2 k
        let revealed =
            JointPmf::new(vec![2, 2], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((security_index_from_joint(&revealed, &[0], 2) - 1.0).abs() < 1e-12);
        // constant key: uniformity failure also costs log2 k
        let constant = JointPmf::new(vec![2, 2], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((security_index_from_joint(&constant, &[0], 2) - 1.0).abs() < 1e-12);
    }
}
