//! Binned random codebooks: construction, encoding, decoding.
//!
//! The first layer draws N1*N2 codewords i.i.d. from the U-marginal,
//! arranged as N1 rows (the transmitted index) by N2 columns (the
//! column index that seeds the key). Alice encodes her block to the
//! first codeword that is jointly typical with it in row-major order;
//! Bob recovers the column from the row index and his own block by
//! uniqueness inside a widened window, taking the union of decoding
//! windows over the states in the active class. A refinement layer
//! repeats the pattern with V-codewords drawn conditionally on each
//! U-codeword. Index 0 is the failure value throughout; a valid result
//! has every component positive.

use crate::capacity::AuxChannelPair;
use crate::error::{Error, Result};
use crate::prob::{Channel, JointPmf, Pmf};
use crate::seeds;
use crate::source::{CompoundSource, MarginalClass};
use crate::typicality::{is_jointly_typical, is_typical, typical_completion_exists};
use rand::Rng;
use std::collections::HashMap;

/// Default cap on total stored codeword symbols.
pub const DEFAULT_MEMORY_GUARD_SYMBOLS: u64 = 1 << 30;

/// Environment override for the symbol guard.
pub const MEMORY_GUARD_ENV: &str = "SKGEN_MEMORY_GUARD_SYMBOLS";

pub fn memory_guard_symbols() -> u64 {
    std::env::var(MEMORY_GUARD_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MEMORY_GUARD_SYMBOLS)
}

fn guard_symbols(total: Option<u64>, what: &str) -> Result<u64> {
    let guard = memory_guard_symbols();
    match total {
        Some(t) if t <= guard => Ok(t),
        Some(t) => Err(Error::Budget(format!(
            "{what} needs {t} symbols, guard is {guard} (override via {MEMORY_GUARD_ENV})"
        ))),
        None => Err(Error::Budget(format!(
            "{what} size overflows the symbol counter"
        ))),
    }
}

/// The four codebook dimensions and the exponents they came from.
#[derive(Debug, Clone)]
pub struct CodebookSizes {
    pub n: usize,
    pub delta: f64,
    /// Rows of the first layer.
    pub n1: u64,
    /// Columns of the first layer.
    pub n2: u64,
    /// Refinement rows per (i, j).
    pub n3: u64,
    /// Refinement columns per (i, j).
    pub n4: u64,
    /// log2 of the unrounded sizes, in order [n1, n2, n3, n4].
    pub log2_raw: [f64; 4],
    /// Whether a nonpositive exponent was clamped to size 1.
    pub clamped: [bool; 4],
}

fn ceil_exp2(raw_log2: f64, what: &str) -> Result<(u64, bool)> {
    if raw_log2 <= 0.0 {
        return Ok((1, true));
    }
    if raw_log2 > 62.0 {
        return Err(Error::Budget(format!(
            "{what} exponent {raw_log2:.2} bits exceeds the representable range"
        )));
    }
    Ok((raw_log2.exp2().ceil() as u64, false))
}

/// Sizes for one class: rows cover Alice's block beyond what Bob knows,
/// columns fill the rate Bob can still resolve, layer two repeats this
/// conditionally on layer one. Worst-case states inside the class set
/// each exponent.
pub fn codebook_sizes(
    src: &CompoundSource,
    class: &MarginalClass,
    aux: &AuxChannelPair,
    n: usize,
    delta: f64,
) -> Result<CodebookSizes> {
    if n == 0 || !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "codebook sizes need n >= 1 and delta > 0, got n={n}, delta={delta}"
        )));
    }
    let mut max_i_ux_y = f64::NEG_INFINITY;
    let mut min_i_uy = f64::INFINITY;
    let mut max_i_vx_uy = f64::NEG_INFINITY;
    let mut min_i_vy_u = f64::INFINITY;
    for &s in &class.members {
        let full = aux.full_joint(&src.state(s).joint)?;
        max_i_ux_y = max_i_ux_y.max(full.cmi_between(&[0], &[2], &[3]));
        min_i_uy = min_i_uy.min(full.mi_between(&[0], &[3]));
        max_i_vx_uy = max_i_vx_uy.max(full.cmi_between(&[1], &[2], &[0, 3]));
        min_i_vy_u = min_i_vy_u.min(full.cmi_between(&[1], &[3], &[0]));
    }
    let nf = n as f64;
    let log2_raw = [
        nf * (max_i_ux_y + 3.0 * delta),
        nf * (min_i_uy - 2.0 * delta),
        nf * (max_i_vx_uy + 3.0 * delta),
        nf * (min_i_vy_u - 2.0 * delta),
    ];
    let (n1, c1) = ceil_exp2(log2_raw[0], "row count")?;
    let (n2, c2) = ceil_exp2(log2_raw[1], "column count")?;
    let (n3, c3) = ceil_exp2(log2_raw[2], "refinement row count")?;
    let (n4, c4) = ceil_exp2(log2_raw[3], "refinement column count")?;
    Ok(CodebookSizes {
        n,
        delta,
        n1,
        n2,
        n3,
        n4,
        log2_raw,
        clamped: [c1, c2, c3, c4],
    })
}

fn cumulative(mass: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(mass.len());
    let mut acc = 0.0;
    for &p in mass {
        acc += p;
        cum.push(acc);
    }
    cum
}

fn draw_symbol<R: Rng>(cum: &[f64], rng: &mut R) -> u8 {
    let u: f64 = rng.gen();
    cum.partition_point(|&c| c <= u).min(cum.len() - 1) as u8
}

/// First-layer codebook: n1 rows by n2 columns of length-n sequences,
/// flat index (i-1)*n2 + (j-1), drawn i.i.d. from the U-marginal.
#[derive(Debug, Clone)]
pub struct CodebookU {
    pub n: usize,
    pub n1: u64,
    pub n2: u64,
    pub seed: u64,
    seqs: Vec<u8>,
}

impl CodebookU {
    pub fn draw(pu: &Pmf, n: usize, n1: u64, n2: u64, seed: u64) -> Result<Self> {
        if n == 0 || n1 == 0 || n2 == 0 {
            return Err(Error::Domain("codebook dimensions must be positive".into()));
        }
        let total = n1
            .checked_mul(n2)
            .and_then(|r| r.checked_mul(n as u64));
        let total = guard_symbols(total, "first-layer codebook")?;
        let cum = cumulative(pu.mass());
        let mut rng = seeds::rng(seed);
        let mut seqs = Vec::with_capacity(total as usize);
        for _ in 0..total {
            seqs.push(draw_symbol(&cum, &mut rng));
        }
        Ok(CodebookU {
            n,
            n1,
            n2,
            seed,
            seqs,
        })
    }

    /// Explicit codewords, for handcrafted tests and demos.
    pub fn from_rows(n: usize, n1: u64, n2: u64, seqs: Vec<u8>) -> Result<Self> {
        if seqs.len() as u64 != n1 * n2 * n as u64 {
            return Err(Error::AlphabetMismatch(format!(
                "expected {} symbols, got {}",
                n1 * n2 * n as u64,
                seqs.len()
            )));
        }
        Ok(CodebookU {
            n,
            n1,
            n2,
            seed: 0,
            seqs,
        })
    }

    fn flat(&self, fl: u64) -> &[u8] {
        let start = fl as usize * self.n;
        &self.seqs[start..start + self.n]
    }

    /// Codeword at 1-based (row, column).
    pub fn row(&self, i: u64, j: u64) -> &[u8] {
        assert!(
            (1..=self.n1).contains(&i) && (1..=self.n2).contains(&j),
            "codeword index ({i}, {j}) out of range"
        );
        self.flat((i - 1) * self.n2 + (j - 1))
    }
}

/// Encoder output; both components are 0 exactly when encoding failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeResult {
    pub i: u64,
    pub j: u64,
}

impl EncodeResult {
    pub const FAIL: EncodeResult = EncodeResult { i: 0, j: 0 };

    pub fn is_failure(&self) -> bool {
        self.i == 0
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// First-layer encoder: maps Alice's block to the first codeword (in
/// row-major order) jointly typical with it, after certifying that a
/// typical pairing exists at all. When the (U, X) joint is diagonal the
/// only admissible codeword is the block itself, so encoding becomes a
/// hash lookup instead of a scan.
pub struct Encoder<'a> {
    cb: &'a CodebookU,
    joint_ux: JointPmf,
    zeta: f64,
    exact: Option<HashMap<u64, Vec<u64>>>,
}

impl<'a> Encoder<'a> {
    pub fn new(cb: &'a CodebookU, joint_ux: JointPmf, zeta: f64) -> Result<Self> {
        if joint_ux.rank() != 2 {
            return Err(Error::AlphabetMismatch(
                "encoder joint must have axes [u, x]".into(),
            ));
        }
        if !(zeta > 0.0) {
            return Err(Error::Domain("encoder window must be positive".into()));
        }
        let dims = joint_ux.dims();
        let diagonal = dims[0] == dims[1]
            && (0..dims[0]).all(|u| {
                (0..dims[1]).all(|x| u == x || joint_ux.get(&[u, x]) == 0.0)
            });
        let exact = diagonal.then(|| {
            let mut map: HashMap<u64, Vec<u64>> = HashMap::new();
            for fl in 0..cb.n1 * cb.n2 {
                map.entry(fnv1a(cb.flat(fl))).or_default().push(fl);
            }
            map
        });
        Ok(Encoder {
            cb,
            joint_ux,
            zeta,
            exact,
        })
    }

    /// Whether the block admits any typical codeword sequence (not
    /// necessarily one present in the codebook).
    pub fn encodable(&self, x: &[u8]) -> bool {
        typical_completion_exists(&[x], &[1], &self.joint_ux, self.zeta)
    }

    pub fn encode(&self, x: &[u8]) -> EncodeResult {
        assert_eq!(x.len(), self.cb.n, "block length mismatch");
        if !self.encodable(x) {
            return EncodeResult::FAIL;
        }
        if let Some(map) = &self.exact {
            if let Some(cands) = map.get(&fnv1a(x)) {
                for &fl in cands {
                    if self.cb.flat(fl) == x {
                        return EncodeResult {
                            i: fl / self.cb.n2 + 1,
                            j: fl % self.cb.n2 + 1,
                        };
                    }
                }
            }
            return EncodeResult::FAIL;
        }
        for fl in 0..self.cb.n1 * self.cb.n2 {
            if is_jointly_typical(&[self.cb.flat(fl), x], &self.joint_ux, self.zeta) {
                return EncodeResult {
                    i: fl / self.cb.n2 + 1,
                    j: fl % self.cb.n2 + 1,
                };
            }
        }
        EncodeResult::FAIL
    }
}

/// First-layer decoder: given the row index and Bob's block, the column
/// is accepted only if exactly one candidate codeword lands in the
/// widened window of some state in the class.
pub struct Decoder {
    pair_joints: Vec<JointPmf>,
    radius: f64,
}

impl Decoder {
    pub fn new(
        src: &CompoundSource,
        class: &MarginalClass,
        aux: &AuxChannelPair,
        sigma: f64,
    ) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain("decoder window must be positive".into()));
        }
        let mut pair_joints = Vec::with_capacity(class.members.len());
        for &s in &class.members {
            let full = aux.full_joint(&src.state(s).joint)?;
            pair_joints.push(full.marginal_onto(&[0, 3]));
        }
        Ok(Decoder {
            pair_joints,
            radius: sigma * src.x_size() as f64,
        })
    }

    /// Decoding window radius actually in use (sigma scaled by |X|).
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Returns the unique admissible column, or 0.
    pub fn decode_column(&self, cb: &CodebookU, i: u64, y: &[u8]) -> u64 {
        if i == 0 || i > cb.n1 {
            return 0;
        }
        let mut hit = 0u64;
        for j in 1..=cb.n2 {
            let u = cb.row(i, j);
            if self
                .pair_joints
                .iter()
                .any(|pj| is_jointly_typical(&[u, y], pj, self.radius))
            {
                if hit != 0 {
                    return 0;
                }
                hit = j;
            }
        }
        hit
    }
}

/// Refinement codebook: for every first-layer codeword, n3 x n4
/// sequences drawn per-position from P(v | u).
#[derive(Debug, Clone)]
pub struct CodebookV {
    pub n: usize,
    pub n3: u64,
    pub n4: u64,
    pub seed: u64,
    seqs: Vec<u8>,
    per_uv: u64,
}

impl CodebookV {
    pub fn draw(v_given_u: &Channel, cb_u: &CodebookU, n3: u64, n4: u64, seed: u64) -> Result<Self> {
        if n3 == 0 || n4 == 0 {
            return Err(Error::Domain("codebook dimensions must be positive".into()));
        }
        let rows = cb_u.n1.checked_mul(cb_u.n2);
        let total = rows
            .and_then(|r| r.checked_mul(n3))
            .and_then(|r| r.checked_mul(n4))
            .and_then(|r| r.checked_mul(cb_u.n as u64));
        let total = guard_symbols(total, "refinement codebook")?;
        let cums: Vec<Vec<f64>> = (0..v_given_u.input_size())
            .map(|u| cumulative(v_given_u.row(u)))
            .collect();
        let mut rng = seeds::rng(seed);
        let mut seqs = Vec::with_capacity(total as usize);
        for fl in 0..cb_u.n1 * cb_u.n2 {
            let u_row = cb_u.flat(fl);
            for _ in 0..n3 * n4 {
                for &u in u_row {
                    seqs.push(draw_symbol(&cums[u as usize], &mut rng));
                }
            }
        }
        Ok(CodebookV {
            n: cb_u.n,
            n3,
            n4,
            seed,
            seqs,
            per_uv: n3 * n4,
        })
    }

    /// Codeword at 1-based (p, q) under first-layer cell (i, j).
    pub fn row(&self, cb_u: &CodebookU, i: u64, j: u64, p: u64, q: u64) -> &[u8] {
        assert!(
            (1..=self.n3).contains(&p) && (1..=self.n4).contains(&q),
            "refinement index ({p}, {q}) out of range"
        );
        let cell = (i - 1) * cb_u.n2 + (j - 1);
        let fl = cell * self.per_uv + (p - 1) * self.n4 + (q - 1);
        let start = fl as usize * self.n;
        &self.seqs[start..start + self.n]
    }
}

/// Refinement encoder: first (p, q) whose codeword makes the triple
/// (u, v, x) jointly typical.
pub fn encode_refinement(
    cb_v: &CodebookV,
    cb_u: &CodebookU,
    first: EncodeResult,
    x: &[u8],
    joint_uvx: &JointPmf,
    zeta: f64,
) -> EncodeResult {
    if first.is_failure() {
        return EncodeResult::FAIL;
    }
    let u = cb_u.row(first.i, first.j);
    if !typical_completion_exists(&[u, x], &[0, 2], joint_uvx, zeta) {
        return EncodeResult::FAIL;
    }
    for p in 1..=cb_v.n3 {
        for q in 1..=cb_v.n4 {
            let v = cb_v.row(cb_u, first.i, first.j, p, q);
            if is_jointly_typical(&[u, v, x], joint_uvx, zeta) {
                return EncodeResult { i: p, j: q };
            }
        }
    }
    EncodeResult::FAIL
}

/// Refinement decoder over (U, V, Y) windows, radius vartheta * |X|.
pub struct RefinementDecoder {
    triple_joints: Vec<JointPmf>,
    radius: f64,
}

impl RefinementDecoder {
    pub fn new(
        src: &CompoundSource,
        class: &MarginalClass,
        aux: &AuxChannelPair,
        vartheta: f64,
    ) -> Result<Self> {
        if !(vartheta > 0.0) {
            return Err(Error::Domain("decoder window must be positive".into()));
        }
        let mut triple_joints = Vec::with_capacity(class.members.len());
        for &s in &class.members {
            let full = aux.full_joint(&src.state(s).joint)?;
            triple_joints.push(full.marginal_onto(&[0, 1, 3]));
        }
        Ok(RefinementDecoder {
            triple_joints,
            radius: vartheta * src.x_size() as f64,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Returns the unique admissible refinement column, or 0.
    pub fn decode_column(
        &self,
        cb_v: &CodebookV,
        cb_u: &CodebookU,
        i: u64,
        j: u64,
        p: u64,
        y: &[u8],
    ) -> u64 {
        if i == 0 || j == 0 || p == 0 || p > cb_v.n3 {
            return 0;
        }
        let u = cb_u.row(i, j);
        let mut hit = 0u64;
        for q in 1..=cb_v.n4 {
            let v = cb_v.row(cb_u, i, j, p, q);
            if self
                .triple_joints
                .iter()
                .any(|tj| is_jointly_typical(&[u, v, y], tj, self.radius))
            {
                if hit != 0 {
                    return 0;
                }
                hit = q;
            }
        }
        hit
    }
}

/// Result of the covering experiment: how often the number of
/// codewords typical with a typical block stays inside the window
/// 2^(n(R - I -+ tau)).
#[derive(Debug, Clone)]
pub struct CoveringReport {
    pub n: usize,
    pub rate: f64,
    pub mutual_information: f64,
    pub tau: f64,
    pub codewords: u64,
    pub trials: u64,
    pub in_window: u64,
    pub count_lo: u64,
    pub count_hi: u64,
    pub min_count: u64,
    pub max_count: u64,
}

/// Draws fresh codewords and a fresh typical block per trial and counts
/// codewords jointly typical with the block. With rate above the mutual
/// information the count concentrates at 2^(n(R - I)); tau must sit
/// strictly inside (0, R - I).
#[allow(clippy::too_many_arguments)]
pub fn covering_concentration_check(
    joint_ux: &JointPmf,
    n: usize,
    rate: f64,
    tau: f64,
    zeta: f64,
    xi: f64,
    trials: u64,
    master_seed: u64,
) -> Result<CoveringReport> {
    if joint_ux.rank() != 2 {
        return Err(Error::AlphabetMismatch(
            "covering check needs a rank-2 joint [u, x]".into(),
        ));
    }
    if n == 0 || trials == 0 {
        return Err(Error::Domain("covering check needs n and trials".into()));
    }
    let mi = joint_ux.mi_between(&[0], &[1]);
    if !(tau > 0.0 && tau < rate - mi) {
        return Err(Error::Domain(format!(
            "covering regime violated: tau must lie in (0, rate - I) = (0, {:.6}), got {tau}",
            rate - mi
        )));
    }
    let nf = n as f64;
    let codewords_log2 = nf * rate;
    if codewords_log2 > 30.0 {
        return Err(Error::Budget(format!(
            "covering check would draw 2^{codewords_log2:.1} codewords"
        )));
    }
    let codewords = codewords_log2.exp2().ceil() as u64;
    let count_lo = (nf * (rate - mi - tau)).exp2().ceil() as u64;
    let count_hi = (nf * (rate - mi + tau)).exp2().floor() as u64;
    let pu = joint_ux.axis_pmf(0);
    let px = joint_ux.axis_pmf(1);
    let cum_u = cumulative(pu.mass());
    let cum_x = cumulative(px.mass());

    let mut in_window = 0u64;
    let mut min_count = u64::MAX;
    let mut max_count = 0u64;
    for t in 0..trials {
        let mut src_rng = seeds::rng(seeds::derive(master_seed, seeds::Purpose::Source, t));
        let mut x = Vec::with_capacity(n);
        let mut found = false;
        for _ in 0..10_000 {
            x.clear();
            for _ in 0..n {
                x.push(draw_symbol(&cum_x, &mut src_rng));
            }
            if is_typical(&x, &px, xi) {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::Domain(
                "could not sample a typical block; xi is too tight for this n".into(),
            ));
        }
        let mut cb_rng = seeds::rng(seeds::derive(master_seed, seeds::Purpose::Codebook, t));
        let mut u = vec![0u8; n];
        let mut count = 0u64;
        for _ in 0..codewords {
            for s in u.iter_mut() {
                *s = draw_symbol(&cum_u, &mut cb_rng);
            }
            if is_jointly_typical(&[&u, &x], joint_ux, zeta) {
                count += 1;
            }
        }
        if (count_lo..=count_hi).contains(&count) {
            in_window += 1;
        }
        min_count = min_count.min(count);
        max_count = max_count.max(count);
    }
    Ok(CoveringReport {
        n,
        rate,
        mutual_information: mi,
        tau,
        codewords,
        trials,
        in_window,
        count_lo,
        count_hi,
        min_count,
        max_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;
    use crate::source::CompoundSource;

    fn single_state_source() -> CompoundSource {
        CompoundSource::cascade(
            &Pmf::bernoulli(0.3).unwrap(),
            &[(
                "s",
                Channel::bsc(0.1).unwrap(),
                Channel::bsc(0.2).unwrap(),
            )],
        )
        .unwrap()
    }

    #[test]
    fn sizes_match_closed_forms_for_identity_aux() {
        // with U = X: I(U;X|Y) = H(X|Y) = h(0.3) - I(X;Y) and
        // I(U;Y) = I(X;Y) = h(0.34) - h(0.1)
        let src = single_state_source();
        let class = &src.marginal_partition()[0];
        let aux = AuxChannelPair::identity(2);
        let (n, delta) = (50usize, 0.05);
        let sizes = codebook_sizes(&src, class, &aux, n, delta).unwrap();
        let i_xy = binary_entropy(0.34).unwrap() - binary_entropy(0.1).unwrap();
        let h_x = binary_entropy(0.3).unwrap();
        let want1 = 50.0 * ((h_x - i_xy) + 0.15);
        let want2 = 50.0 * (i_xy - 0.10);
        assert!((sizes.log2_raw[0] - want1).abs() < 1e-9);
        assert!((sizes.log2_raw[1] - want2).abs() < 1e-9);
        assert_eq!(sizes.n1, want1.exp2().ceil() as u64);
        assert_eq!(sizes.n2, want2.exp2().ceil() as u64);
        // the first layer is genuine; with V = U = X the refinement
        // column exponent is 0 - 2 delta and must clamp
        assert!(!sizes.clamped[0] && !sizes.clamped[1]);
        assert!(sizes.clamped[3]);
        assert_eq!(sizes.n4, 1);
        // the two exponents always add up to n (I(U;X) + delta)
        let total = sizes.log2_raw[0] + sizes.log2_raw[1];
        assert!((total - 50.0 * (h_x + delta)).abs() < 1e-9);
    }

    #[test]
    fn nonpositive_exponents_clamp_to_one() {
        let src = single_state_source();
        let class = &src.marginal_partition()[0];
        let aux = AuxChannelPair::identity(2);
        // delta so large that the column exponent goes negative
        let sizes = codebook_sizes(&src, class, &aux, 20, 0.25).unwrap();
        assert_eq!(sizes.n2, 1);
        assert!(sizes.clamped[1]);
        assert!(sizes.log2_raw[1] < 0.0);
        assert!(!sizes.clamped[0]);
    }

    #[test]
    fn oversized_requests_hit_the_budget() {
        let src = single_state_source();
        let class = &src.marginal_partition()[0];
        let aux = AuxChannelPair::identity(2);
        let err = codebook_sizes(&src, class, &aux, 100_000, 0.01).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
        // allocation guard without any allocation happening
        let big = CodebookU::draw(&Pmf::uniform(2), 1 << 11, 1 << 20, 1 << 10, 7);
        assert!(matches!(big.unwrap_err(), Error::Budget(_)));
    }

    #[test]
    fn draws_are_reproducible_and_law_abiding() {
        let pu = Pmf::bernoulli(0.3).unwrap();
        let a = CodebookU::draw(&pu, 2000, 4, 1, 11).unwrap();
        let b = CodebookU::draw(&pu, 2000, 4, 1, 11).unwrap();
        assert_eq!(a.seqs, b.seqs);
        let c = CodebookU::draw(&pu, 2000, 4, 1, 12).unwrap();
        assert_ne!(a.seqs, c.seqs);
        let ones: usize = a.seqs.iter().map(|&s| s as usize).sum();
        let freq = ones as f64 / a.seqs.len() as f64;
        assert!((freq - 0.3).abs() < 0.03, "one-frequency {freq}");
    }

    #[test]
    fn exact_match_path_agrees_with_the_scan() {
        // diagonal joint: the hash-lookup encoder must behave exactly
        // like the generic first-hit scan
        let px = Pmf::bernoulli(0.4).unwrap();
        let aux = AuxChannelPair::identity(2);
        let joint = aux.ux_joint(&px).unwrap();
        let cb = CodebookU::draw(&px, 12, 6, 3, 3).unwrap();
        let enc = Encoder::new(&cb, joint.clone(), 0.12).unwrap();
        assert!(enc.exact.is_some(), "diagonal joint should enable lookup");
        let mut state = 99u64;
        for _ in 0..200 {
            let x: Vec<u8> = (0..12)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((state >> 45) & 1) as u8
                })
                .collect();
            let got = enc.encode(&x);
            // independent reference: certificate plus literal scan
            let mut want = EncodeResult::FAIL;
            if typical_completion_exists(&[&x], &[1], &joint, 0.12) {
                'scan: for i in 1..=cb.n1 {
                    for j in 1..=cb.n2 {
                        if is_jointly_typical(&[cb.row(i, j), &x], &joint, 0.12) {
                            want = EncodeResult { i, j };
                            break 'scan;
                        }
                    }
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn encoding_a_stored_codeword_recovers_it() {
        let px = Pmf::bernoulli(0.4).unwrap();
        let aux = AuxChannelPair::identity(2);
        let joint = aux.ux_joint(&px).unwrap();
        let cb = CodebookU::draw(&px, 16, 8, 4, 21).unwrap();
        let enc = Encoder::new(&cb, joint, 0.2).unwrap();
        let target = cb.row(5, 2).to_vec();
        let r = enc.encode(&target);
        if !r.is_failure() {
            assert_eq!(cb.row(r.i, r.j), &target[..]);
        }
    }

    #[test]
    fn atypical_blocks_fail_to_encode() {
        let px = Pmf::bernoulli(0.1).unwrap();
        let aux = AuxChannelPair::identity(2);
        let joint = aux.ux_joint(&px).unwrap();
        let cb = CodebookU::draw(&px, 20, 8, 2, 5).unwrap();
        let enc = Encoder::new(&cb, joint, 0.05).unwrap();
        let all_ones = vec![1u8; 20];
        assert_eq!(enc.encode(&all_ones), EncodeResult::FAIL);
    }

    #[test]
    fn decoder_demands_a_unique_hit() {
        // uniform X, Y = BSC(0.1)(X), U = X; two columns: all zeros and
        // all ones
        let src = CompoundSource::cascade(
            &Pmf::uniform(2),
            &[(
                "s",
                Channel::bsc(0.1).unwrap(),
                Channel::bsc(0.2).unwrap(),
            )],
        )
        .unwrap();
        let class = &src.marginal_partition()[0];
        let aux = AuxChannelPair::identity(2);
        let n = 10;
        let mut seqs = vec![0u8; n];
        seqs.extend(vec![1u8; n]);
        let cb = CodebookU::from_rows(n, 1, 2, seqs).unwrap();
        let y = vec![0u8; n];
        // radius 0.6: only the all-zeros column is admissible
        let dec = Decoder::new(&src, class, &aux, 0.3).unwrap();
        assert_eq!(dec.decode_column(&cb, 1, &y), 1);
        // radius 2.0 admits both columns: ambiguity reports 0
        let loose = Decoder::new(&src, class, &aux, 0.999).unwrap();
        assert_eq!(loose.decode_column(&cb, 1, &y), 0);
        // tiny radius admits nothing
        let tight = Decoder::new(&src, class, &aux, 1e-6).unwrap();
        assert_eq!(tight.decode_column(&cb, 1, &y), 0);
    }

    #[test]
    fn refinement_layer_round_trips() {
        // V = X identity refinement on top of U = X
        let src = single_state_source();
        let class = &src.marginal_partition()[0];
        let aux = AuxChannelPair::identity(2);
        let px = src.x_marginal(0);
        let n = 14;
        // full-size codebook so the typical set is actually covered;
        // an identity aux needs N1 N2 ~ 2^(n H(X))
        let sizes = codebook_sizes(&src, class, &aux, n, 0.05).unwrap();
        let cb_u = CodebookU::draw(&px, n, sizes.n1, sizes.n2, 31).unwrap();
        let cb_v =
            CodebookV::draw(&Channel::identity(2), &cb_u, sizes.n3, sizes.n4, 32).unwrap();
        let joint_ux = aux.ux_joint(&px).unwrap();
        let joint_uvx = aux.uvx_joint(&px).unwrap();
        let enc = Encoder::new(&cb_u, joint_ux, 0.15).unwrap();
        let mut state = 4u64;
        let mut succeeded = false;
        for _ in 0..100 {
            let x: Vec<u8> = (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    u8::from(((state >> 40) as f64 / (1u64 << 24) as f64) < 0.3)
                })
                .collect();
            let first = enc.encode(&x);
            if first.is_failure() {
                continue;
            }
            let second = encode_refinement(&cb_v, &cb_u, first, &x, &joint_uvx, 0.15);
            if second.is_failure() {
                continue;
            }
            // identity V given U means the codeword equals the U row
            let v = cb_v.row(&cb_u, first.i, first.j, second.i, second.j);
            assert_eq!(v, cb_u.row(first.i, first.j));
            succeeded = true;
        }
        assert!(succeeded, "no block survived both layers");
    }

    #[test]
    fn covering_regime_is_enforced() {
        let px = Pmf::uniform(2);
        let aux = AuxChannelPair::new(
            Channel::bsc(0.172).unwrap(),
            Channel::identity(2),
        )
        .unwrap();
        let joint = aux.ux_joint(&px).unwrap();
        let mi = joint.mi_between(&[0], &[1]);
        // tau outside (0, R - I)
        assert!(covering_concentration_check(&joint, 14, mi + 0.2, 0.25, 0.1, 0.01, 5, 1).is_err());
        assert!(covering_concentration_check(&joint, 14, mi + 0.2, 0.0, 0.1, 0.01, 5, 1).is_err());
        // rate below the mutual information leaves no valid tau
        assert!(covering_concentration_check(&joint, 14, mi - 0.05, 0.01, 0.1, 0.01, 5, 1).is_err());
    }

    #[test]
    fn covering_counts_concentrate() {
        let px = Pmf::uniform(2);
        let aux = AuxChannelPair::new(
            Channel::bsc(0.172).unwrap(),
            Channel::identity(2),
        )
        .unwrap();
        let joint = aux.ux_joint(&px).unwrap();
        let mi = joint.mi_between(&[0], &[1]);
        let report =
            covering_concentration_check(&joint, 14, mi + 0.2, 0.18, 0.1, 0.01, 200, 424242)
                .unwrap();
        assert_eq!(report.codewords, 185);
        assert!(report.count_lo >= 1);
        assert!(report.count_hi > report.count_lo);
        assert!(
            report.in_window * 10 >= report.trials * 9,
            "only {}/{} trials in window [{}, {}], observed [{}, {}]",
            report.in_window,
            report.trials,
            report.count_lo,
            report.count_hi,
            report.min_count,
            report.max_count
        );
    }
}
