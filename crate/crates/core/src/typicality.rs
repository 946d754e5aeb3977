//! Letter typicality: membership tests, exact set probabilities and
//! sizes, and concentration bounds.
//!
//! Membership is the count-window convention: a tuple of sequences is
//! eps-typical for a joint law when every cell count sits within eps*n
//! of its expectation and no zero-probability cell appears at all. The
//! exact probability and size computations enumerate count vectors with
//! a log-space dynamic program over cells, so they agree bit-for-bit
//! with the membership predicate instead of replacing it with an
//! exponential estimate.

use crate::error::{Error, Result};
use crate::prob::{increment_index, Channel, JointPmf, Pmf};

const NEG_INF: f64 = f64::NEG_INFINITY;
const LN_2: f64 = std::f64::consts::LN_2;

/// Window radii used by the protocol, one per role. Encoding uses
/// `zeta`, source certificates `xi`, first-layer decoding `sigma`,
/// refinement decoding `vartheta`; soundness needs them strictly
/// increasing in that order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityParams {
    pub xi: f64,
    pub zeta: f64,
    pub sigma: f64,
    pub vartheta: f64,
}

impl TypicalityParams {
    pub fn new(xi: f64, zeta: f64, sigma: f64, vartheta: f64) -> Result<Self> {
        let ordered = 0.0 < xi && xi < zeta && zeta < sigma && sigma < vartheta && vartheta < 1.0;
        if !ordered {
            return Err(Error::Domain(format!(
                "typicality radii must satisfy 0 < xi < zeta < sigma < vartheta < 1, \
                 got ({xi}, {zeta}, {sigma}, {vartheta})"
            )));
        }
        Ok(TypicalityParams {
            xi,
            zeta,
            sigma,
            vartheta,
        })
    }

    /// Radii proportional to the smallest positive mass in play, so the
    /// windows separate distinct counts without crossing cells.
    pub fn scaled(min_mass: f64) -> Result<Self> {
        if !(min_mass > 0.0 && min_mass <= 1.0) {
            return Err(Error::Domain(format!(
                "scaled radii need min_mass in (0,1], got {min_mass}"
            )));
        }
        TypicalityParams::new(
            0.05 * min_mass,
            0.10 * min_mass,
            0.15 * min_mass,
            0.20 * min_mass,
        )
    }
}

/// Symbol counts of a sequence over {0, .., size-1}.
pub fn counts(seq: &[u8], size: usize) -> Vec<usize> {
    let mut c = vec![0usize; size];
    for &s in seq {
        assert!((s as usize) < size, "symbol {s} outside alphabet {size}");
        c[s as usize] += 1;
    }
    c
}

/// Joint cell counts for parallel sequences, flattened row-major.
pub fn joint_counts(seqs: &[&[u8]], dims: &[usize]) -> Vec<usize> {
    assert_eq!(seqs.len(), dims.len(), "one sequence per axis");
    let n = seqs[0].len();
    assert!(
        seqs.iter().all(|s| s.len() == n),
        "sequences must share a length"
    );
    let mut c = vec![0usize; dims.iter().product()];
    for pos in 0..n {
        let mut flat = 0;
        for (axis, seq) in seqs.iter().enumerate() {
            let s = seq[pos] as usize;
            assert!(s < dims[axis], "symbol {s} outside axis {axis}");
            flat = flat * dims[axis] + s;
        }
        c[flat] += 1;
    }
    c
}

fn cell_ok(p: f64, count: usize, n: usize, eps: f64) -> bool {
    if p == 0.0 {
        return count == 0;
    }
    (p - count as f64 / n as f64).abs() <= eps
}

/// Marginal typicality of one sequence.
pub fn is_typical(seq: &[u8], pmf: &Pmf, eps: f64) -> bool {
    let n = seq.len();
    if n == 0 {
        return false;
    }
    counts(seq, pmf.size())
        .iter()
        .enumerate()
        .all(|(x, &c)| cell_ok(pmf.get(x), c, n, eps))
}

/// Joint typicality of a tuple of sequences.
pub fn is_jointly_typical(seqs: &[&[u8]], joint: &JointPmf, eps: f64) -> bool {
    let n = seqs[0].len();
    if n == 0 {
        return false;
    }
    joint_counts(seqs, joint.dims())
        .iter()
        .zip(joint.mass())
        .all(|(&c, &p)| cell_ok(p, c, n, eps))
}

/// Conditional typicality of y given x: per cell,
/// |N(x) P(y|x) - N(x,y)| <= eps * n, with zero rows excluded.
pub fn is_conditionally_typical(y: &[u8], x: &[u8], ch: &Channel, eps: f64) -> bool {
    let n = x.len();
    if n == 0 || y.len() != n {
        return false;
    }
    let nx = counts(x, ch.input_size());
    let pair = joint_counts(&[x, y], &[ch.input_size(), ch.output_size()]);
    for a in 0..ch.input_size() {
        for b in 0..ch.output_size() {
            let p = ch.get(a, b);
            let c = pair[a * ch.output_size() + b];
            if p == 0.0 {
                if c != 0 {
                    return false;
                }
            } else if (nx[a] as f64 * p - c as f64).abs() / n as f64 > eps {
                return false;
            }
        }
    }
    true
}

/// Contiguous integer count window {c : |p - c/n| <= eps}, or None when
/// no count qualifies. p = 0 pins the window to {0}.
fn scan_window(n: usize, p: f64, eps: f64) -> Option<(usize, usize)> {
    if p == 0.0 {
        return Some((0, 0));
    }
    let mut lo = None;
    let mut hi = None;
    for c in 0..=n {
        if cell_ok(p, c, n, eps) {
            if lo.is_none() {
                lo = Some(c);
            }
            hi = Some(c);
        }
    }
    Some((lo?, hi?))
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        t.push(acc);
    }
    t
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == NEG_INF {
        return b;
    }
    if b == NEG_INF {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

struct WindowCell {
    ln_p: f64,
    lo: usize,
    hi: usize,
}

/// ln of the windowed multinomial weight: sum over count vectors with
/// per-cell counts inside their windows and total `total` of either the
/// multinomial probability (weighted) or the multinomial coefficient.
fn ln_window_multinomial(total: usize, cells: &[WindowCell], lnf: &[f64], weighted: bool) -> f64 {
    let mut dp = vec![NEG_INF; total + 1];
    dp[0] = 0.0;
    for cell in cells {
        let mut ndp = vec![NEG_INF; total + 1];
        for t in 0..=total {
            if dp[t] == NEG_INF {
                continue;
            }
            let hi = cell.hi.min(total - t);
            for c in cell.lo..=hi {
                let term = if c == 0 {
                    0.0
                } else if !weighted {
                    -lnf[c]
                } else if cell.ln_p == NEG_INF {
                    continue;
                } else {
                    c as f64 * cell.ln_p - lnf[c]
                };
                ndp[t + c] = ln_add(ndp[t + c], dp[t] + term);
            }
        }
        dp = ndp;
    }
    dp[total] + lnf[total]
}

/// Exact probability that n i.i.d. draws from `measure` produce a tuple
/// that is eps-typical for `target`. The two laws must share dims; the
/// usual case is measure = target, but a product-of-marginals measure
/// against a joint target is equally valid.
pub fn typical_probability_under(
    target: &JointPmf,
    measure: &JointPmf,
    n: usize,
    eps: f64,
) -> Result<f64> {
    if target.dims() != measure.dims() {
        return Err(Error::AlphabetMismatch(format!(
            "target dims {:?} vs measure dims {:?}",
            target.dims(),
            measure.dims()
        )));
    }
    if n == 0 || !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "typical probability needs n >= 1 and eps > 0, got n={n}, eps={eps}"
        )));
    }
    let lnf = ln_factorials(n);
    let mut cells = Vec::with_capacity(target.mass().len());
    for (&pt, &pm) in target.mass().iter().zip(measure.mass()) {
        match scan_window(n, pt, eps) {
            None => return Ok(0.0),
            Some((lo, hi)) => cells.push(WindowCell {
                ln_p: if pm > 0.0 { pm.ln() } else { NEG_INF },
                lo,
                hi,
            }),
        }
    }
    let ln = ln_window_multinomial(n, &cells, &lnf, true);
    Ok(ln.exp())
}

/// Exact probability that n i.i.d. draws from `pmf` form an eps-typical
/// sequence.
pub fn typical_probability(pmf: &Pmf, n: usize, eps: f64) -> Result<f64> {
    let j = JointPmf::new(vec![pmf.size()], pmf.mass().to_vec())?;
    typical_probability_under(&j, &j, n, eps)
}

/// log2 of the number of eps-typical sequences of length n; -inf when
/// the set is empty.
pub fn typical_log2_size(pmf: &Pmf, n: usize, eps: f64) -> Result<f64> {
    if n == 0 || !(eps > 0.0) {
        return Err(Error::Domain(format!(
            "typical size needs n >= 1 and eps > 0, got n={n}, eps={eps}"
        )));
    }
    let lnf = ln_factorials(n);
    let mut cells = Vec::with_capacity(pmf.size());
    for x in 0..pmf.size() {
        match scan_window(n, pmf.get(x), eps) {
            None => return Ok(NEG_INF),
            Some((lo, hi)) => cells.push(WindowCell {
                ln_p: 0.0,
                lo,
                hi,
            }),
        }
    }
    Ok(ln_window_multinomial(n, &cells, &lnf, false) / LN_2)
}

/// log2 of the number of sequences y that are conditionally eps-typical
/// for `ch` given x; -inf when the slice is empty.
pub fn conditional_typical_log2_size(x: &[u8], ch: &Channel, eps: f64) -> Result<f64> {
    let n = x.len();
    if n == 0 || !(eps > 0.0) {
        return Err(Error::Domain(
            "conditional size needs a nonempty sequence and eps > 0".into(),
        ));
    }
    let nx = counts(x, ch.input_size());
    let lnf = ln_factorials(n);
    let mut total_ln = 0.0;
    for a in 0..ch.input_size() {
        if nx[a] == 0 {
            continue;
        }
        let mut cells = Vec::with_capacity(ch.output_size());
        for b in 0..ch.output_size() {
            let p = ch.get(a, b);
            let mut lo = None;
            let mut hi = None;
            for c in 0..=nx[a] {
                let ok = if p == 0.0 {
                    c == 0
                } else {
                    (nx[a] as f64 * p - c as f64).abs() / n as f64 <= eps
                };
                if ok {
                    if lo.is_none() {
                        lo = Some(c);
                    }
                    hi = Some(c);
                }
            }
            match (lo, hi) {
                (Some(lo), Some(hi)) => cells.push(WindowCell {
                    ln_p: 0.0,
                    lo,
                    hi,
                }),
                _ => return Ok(NEG_INF),
            }
        }
        total_ln += ln_window_multinomial(nx[a], &cells, &lnf, false);
        if total_ln == NEG_INF {
            return Ok(NEG_INF);
        }
    }
    Ok(total_ln / LN_2)
}

/// Exact probability that drawing the one missing axis completes the
/// fixed sequences to an eps-typical tuple for `joint`. The missing
/// axis is drawn per position from `transition` applied to the symbol
/// on `transition_axis` (a row-constant channel expresses an
/// independent draw).
pub fn extension_probability(
    fixed: &[&[u8]],
    fixed_axes: &[usize],
    joint: &JointPmf,
    transition: &Channel,
    transition_axis: usize,
    eps: f64,
) -> Result<f64> {
    let rank = joint.rank();
    if fixed_axes.len() != rank - 1 || fixed.len() != fixed_axes.len() {
        return Err(Error::AlphabetMismatch(format!(
            "extension needs {} fixed axes, got {}",
            rank - 1,
            fixed_axes.len()
        )));
    }
    if !fixed_axes.windows(2).all(|w| w[0] < w[1]) || fixed_axes.iter().any(|&a| a >= rank) {
        return Err(Error::Domain("fixed axes must be strictly increasing".into()));
    }
    let free_axis = (0..rank)
        .find(|a| !fixed_axes.contains(a))
        .expect("one axis is free");
    let t_pos = fixed_axes
        .iter()
        .position(|&a| a == transition_axis)
        .ok_or_else(|| Error::Domain("transition axis must be a fixed axis".into()))?;
    let dims = joint.dims();
    if transition.input_size() != dims[transition_axis]
        || transition.output_size() != dims[free_axis]
    {
        return Err(Error::AlphabetMismatch(format!(
            "transition {}x{} does not map axis {} to axis {}",
            transition.input_size(),
            transition.output_size(),
            transition_axis,
            free_axis
        )));
    }
    let n = fixed[0].len();
    if n == 0 || !(eps > 0.0) {
        return Err(Error::Domain(
            "extension needs nonempty sequences and eps > 0".into(),
        ));
    }

    let fixed_dims: Vec<usize> = fixed_axes.iter().map(|&a| dims[a]).collect();
    let group_counts = joint_counts(fixed, &fixed_dims);
    let lnf = ln_factorials(n);
    let free_size = dims[free_axis];

    let mut total_ln = 0.0;
    let mut coords = vec![0usize; fixed_dims.len()];
    for g in 0..group_counts.len() {
        let size = group_counts[g];
        let row = transition.row(coords[t_pos]);
        let mut cells = Vec::with_capacity(free_size);
        let mut feasible = true;
        for y in 0..free_size {
            let mut full = vec![0usize; rank];
            for (i, &a) in fixed_axes.iter().enumerate() {
                full[a] = coords[i];
            }
            full[free_axis] = y;
            match scan_window(n, joint.get(&full), eps) {
                None => {
                    feasible = false;
                    break;
                }
                Some((lo, hi)) => {
                    if size == 0 && lo > 0 {
                        feasible = false;
                        break;
                    }
                    cells.push(WindowCell {
                        ln_p: if row[y] > 0.0 { row[y].ln() } else { NEG_INF },
                        lo,
                        hi,
                    });
                }
            }
        }
        if !feasible {
            return Ok(0.0);
        }
        if size > 0 {
            total_ln += ln_window_multinomial(size, &cells, &lnf, true);
            if total_ln == NEG_INF {
                return Ok(0.0);
            }
        }
        increment_index(&mut coords, &fixed_dims);
    }
    Ok(total_ln.exp())
}

/// Whether the observed sequences on `axes` admit any completion on the
/// remaining axes that is eps-typical for `joint`.
pub fn typical_completion_exists(
    observed: &[&[u8]],
    axes: &[usize],
    joint: &JointPmf,
    eps: f64,
) -> bool {
    let rank = joint.rank();
    assert_eq!(observed.len(), axes.len(), "one sequence per observed axis");
    assert!(
        axes.windows(2).all(|w| w[0] < w[1]) && axes.iter().all(|&a| a < rank),
        "observed axes must be strictly increasing and in range"
    );
    let dims = joint.dims();
    let free_axes: Vec<usize> = (0..rank).filter(|a| !axes.contains(a)).collect();
    let obs_dims: Vec<usize> = axes.iter().map(|&a| dims[a]).collect();
    let free_dims: Vec<usize> = free_axes.iter().map(|&a| dims[a]).collect();
    let n = observed[0].len();
    if n == 0 {
        return false;
    }
    let obs_counts = joint_counts(observed, &obs_dims);

    let mut obs_idx = vec![0usize; obs_dims.len()];
    for &count in &obs_counts {
        // per observed cell, the free-cell windows partition its count
        let mut lo_sum = 0usize;
        let mut hi_sum = 0usize;
        let mut free_idx = vec![0usize; free_dims.len()];
        let free_total: usize = free_dims.iter().product::<usize>().max(1);
        for _ in 0..free_total {
            let mut full = vec![0usize; rank];
            for (i, &a) in axes.iter().enumerate() {
                full[a] = obs_idx[i];
            }
            for (i, &a) in free_axes.iter().enumerate() {
                full[a] = free_idx[i];
            }
            match scan_window(n, joint.get(&full), eps) {
                None => return false,
                Some((lo, hi)) => {
                    lo_sum += lo;
                    hi_sum = hi_sum.saturating_add(hi);
                }
            }
            if !free_dims.is_empty() {
                increment_index(&mut free_idx, &free_dims);
            }
        }
        if count < lo_sum || count > hi_sum {
            return false;
        }
        increment_index(&mut obs_idx, &obs_dims);
    }
    true
}

/// Lower bound 1 - 2 * cells * exp(-2 * margin^2 * n) on the chance
/// that every cell count stays within `margin * n` of its mean. May be
/// negative (vacuous) for small n.
pub fn count_concentration_bound(cells: usize, n: usize, margin: f64) -> f64 {
    1.0 - 2.0 * cells as f64 * (-2.0 * margin * margin * n as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::kahan_sum;

    fn seq_prob(seq: &[u8], pmf: &Pmf) -> f64 {
        seq.iter().map(|&s| pmf.get(s as usize)).product()
    }

    /// All length-n sequences over a size-`k` alphabet.
    fn all_seqs(k: u8, n: usize) -> Vec<Vec<u8>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (0..k).map(move |c| {
                        let mut t = s.clone();
                        t.push(c);
                        t
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn membership_window_edges() {
        // deviation is exactly 0.25 in binary floating point, so the
        // inclusive window boundary is observable
        let pmf = Pmf::bernoulli(0.5).unwrap();
        let seq = [0u8, 1, 0, 0];
        assert!(is_typical(&seq, &pmf, 0.25));
        assert!(!is_typical(&seq, &pmf, 0.2499));
    }

    #[test]
    fn zero_mass_symbols_disqualify() {
        let pmf = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert!(!is_typical(&[0, 1, 0], &pmf, 0.9));
        assert!(is_typical(&[0, 0, 0], &pmf, 0.01));
    }

    #[test]
    fn exact_probability_matches_brute_force() {
        let pmf = Pmf::bernoulli(0.3).unwrap();
        let (n, eps) = (8, 0.1);
        let brute = kahan_sum(
            all_seqs(2, n)
                .iter()
                .filter(|s| is_typical(s, &pmf, eps))
                .map(|s| seq_prob(s, &pmf)),
        );
        let exact = typical_probability(&pmf, n, eps).unwrap();
        assert!((exact - brute).abs() < 1e-14, "exact {exact}, brute {brute}");
    }

    #[test]
    fn exact_size_matches_brute_force() {
        let pmf = Pmf::bernoulli(0.3).unwrap();
        let (n, eps) = (8, 0.1);
        let brute = all_seqs(2, n)
            .iter()
            .filter(|s| is_typical(s, &pmf, eps))
            .count();
        let log2_size = typical_log2_size(&pmf, n, eps).unwrap();
        assert!((log2_size.exp2() - brute as f64).abs() < 1e-9);
    }

    #[test]
    fn joint_probability_matches_brute_force() {
        let px = Pmf::bernoulli(0.4).unwrap();
        let joint = Channel::bsc(0.2).unwrap().joint_with(&px).unwrap();
        let (n, eps) = (6, 0.08);
        let mut brute = 0.0;
        for x in all_seqs(2, n) {
            let pxn = seq_prob(&x, &px);
            for y in all_seqs(2, n) {
                let pyx: f64 = x
                    .iter()
                    .zip(&y)
                    .map(|(&a, &b)| Channel::bsc(0.2).unwrap().get(a as usize, b as usize))
                    .product();
                if is_jointly_typical(&[&x, &y], &joint, eps) {
                    brute += pxn * pyx;
                }
            }
        }
        let exact = typical_probability_under(&joint, &joint, n, eps).unwrap();
        assert!((exact - brute).abs() < 1e-13, "exact {exact}, brute {brute}");
    }

    #[test]
    fn product_measure_against_joint_target() {
        // same typical set, but the pair is drawn independently
        let px = Pmf::bernoulli(0.4).unwrap();
        let ch = Channel::bsc(0.2).unwrap();
        let joint = ch.joint_with(&px).unwrap();
        let py = joint.axis_pmf(1);
        let product = JointPmf::from_fn(vec![2, 2], |i| px.get(i[0]) * py.get(i[1])).unwrap();
        let (n, eps) = (6, 0.08);
        let mut brute = 0.0;
        for x in all_seqs(2, n) {
            for y in all_seqs(2, n) {
                if is_jointly_typical(&[&x, &y], &joint, eps) {
                    brute += seq_prob(&x, &px) * seq_prob(&y, &py);
                }
            }
        }
        let exact = typical_probability_under(&joint, &product, n, eps).unwrap();
        assert!((exact - brute).abs() < 1e-13);
    }

    #[test]
    fn extension_probability_matches_brute_force() {
        // U -> X -> Y cascade; fix (u, x), draw y ~ P(y|x)
        let pu = Pmf::bernoulli(0.5).unwrap();
        let ux = Channel::bsc(0.1).unwrap();
        let xy = Channel::bsc(0.2).unwrap();
        let joint = JointPmf::from_fn(vec![2, 2, 2], |i| {
            pu.get(i[0]) * ux.get(i[0], i[1]) * xy.get(i[1], i[2])
        })
        .unwrap();
        let u = [0u8, 0, 1, 0, 1, 0];
        let x = [0u8, 0, 1, 1, 1, 0];
        let eps = 0.3;
        let mut brute = 0.0;
        for y in all_seqs(2, 6) {
            let p: f64 = x
                .iter()
                .zip(&y)
                .map(|(&a, &b)| xy.get(a as usize, b as usize))
                .product();
            if is_jointly_typical(&[&u, &x, &y], &joint, eps) {
                brute += p;
            }
        }
        let exact = extension_probability(&[&u, &x], &[0, 1], &joint, &xy, 1, eps).unwrap();
        assert!((exact - brute).abs() < 1e-14, "exact {exact}, brute {brute}");
    }

    #[test]
    fn extension_concentration_bound_holds() {
        // jointly typical prefix extends to a typical triple with
        // probability at least the concentration bound
        let pu = Pmf::bernoulli(0.5).unwrap();
        let ux = Channel::bsc(0.1).unwrap();
        let xy = Channel::bsc(0.2).unwrap();
        let joint = JointPmf::from_fn(vec![2, 2, 2], |i| {
            pu.get(i[0]) * ux.get(i[0], i[1]) * xy.get(i[1], i[2])
        })
        .unwrap();
        let n = 400;
        // build (u, x) with counts at the rounded expectation
        let pair = joint.marginal_onto(&[0, 1]);
        let mut u = Vec::new();
        let mut x = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                let c = (n as f64 * pair.get(&[a, b])).round() as usize;
                u.extend(std::iter::repeat_n(a as u8, c));
                x.extend(std::iter::repeat_n(b as u8, c));
            }
        }
        while u.len() < n {
            u.push(0);
            x.push(0);
        }
        let (xi, sigma) = (0.02, 0.1);
        assert!(is_jointly_typical(&[&u, &x], &pair, xi));
        let got = extension_probability(&[&u, &x], &[0, 1], &joint, &xy, 1, sigma).unwrap();
        let bound = count_concentration_bound(8, n, sigma - xi);
        assert!(bound > 0.5, "test instance should be non-vacuous");
        assert!(got >= bound, "exact {got} below bound {bound}");
    }

    #[test]
    fn completion_existence_matches_brute_force() {
        let px = Pmf::bernoulli(0.35).unwrap();
        let joint = Channel::bsc(0.15).unwrap().joint_with(&px).unwrap();
        // observe the output axis, ask for an input completion
        for (seed, eps) in [(3u64, 0.12), (9, 0.05), (11, 0.25)] {
            let mut state = seed;
            let x: Vec<u8> = (0..10)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    ((state >> 33) & 1) as u8
                })
                .collect();
            let brute = all_seqs(2, 10)
                .iter()
                .any(|u| is_jointly_typical(&[u, &x], &joint, eps));
            let got = typical_completion_exists(&[&x], &[1], &joint, eps);
            assert_eq!(got, brute, "seed {seed}, eps {eps}");
        }
    }

    #[test]
    fn conditional_size_matches_brute_force() {
        let ch = Channel::bsc(0.25).unwrap();
        let x = [0u8, 1, 0, 0, 1, 0, 1, 0];
        let eps = 0.1;
        let brute = all_seqs(2, 8)
            .iter()
            .filter(|y| is_conditionally_typical(y, &x, &ch, eps))
            .count();
        let got = conditional_typical_log2_size(&x, &ch, eps).unwrap();
        assert!((got.exp2() - brute as f64).abs() < 1e-9);
    }

    #[test]
    fn conditional_membership_implies_joint_membership() {
        // with x marginally xi-typical, conditional (zeta - xi) windows
        // sit inside joint zeta windows
        let px = Pmf::bernoulli(0.3).unwrap();
        let ch = Channel::bsc(0.15).unwrap();
        let joint = ch.joint_with(&px).unwrap();
        let (xi, zeta) = (0.05, 0.1);
        let n = 40;
        let x: Vec<u8> = (0..n).map(|i| u8::from(i % 10 < 3)).collect();
        assert!(is_typical(&x, &px, xi));
        let mut state = 7u64;
        for _ in 0..200 {
            let y: Vec<u8> = x
                .iter()
                .map(|&a| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                    let flip = ((state >> 40) as f64 / (1u64 << 24) as f64) < 0.15;
                    a ^ u8::from(flip)
                })
                .collect();
            if is_conditionally_typical(&y, &x, &ch, zeta - xi) {
                assert!(is_jointly_typical(&[&x, &y], &joint, zeta));
            }
        }
    }

    #[test]
    fn typical_sequences_have_entropy_typical_probability() {
        let pmf = Pmf::bernoulli(0.3).unwrap();
        let (n, eps) = (12, 0.08);
        let h = pmf.entropy();
        let slack: f64 = eps
            * (0..pmf.size())
                .filter(|&x| pmf.get(x) > 0.0)
                .map(|x| pmf.get(x).log2().abs())
                .sum::<f64>();
        for s in all_seqs(2, n) {
            if is_typical(&s, &pmf, eps) {
                let rate = -seq_prob(&s, &pmf).log2() / n as f64;
                assert!((rate - h).abs() <= slack + 1e-12);
            }
        }
    }

    #[test]
    fn size_sandwiched_by_entropy_window() {
        let pmf = Pmf::bernoulli(0.3).unwrap();
        let (n, eps) = (400usize, 0.02);
        let h = pmf.entropy();
        let slack: f64 = eps
            * (0..pmf.size())
                .filter(|&x| pmf.get(x) > 0.0)
                .map(|x| pmf.get(x).log2().abs())
                .sum::<f64>();
        let log2_size = typical_log2_size(&pmf, n, eps).unwrap();
        let types = (pmf.size() as f64) * ((n + 1) as f64).log2();
        let upper = n as f64 * (h + slack) + types;
        let p = typical_probability(&pmf, n, eps).unwrap();
        let lower = p.log2() + n as f64 * (h - slack);
        assert!(log2_size <= upper);
        assert!(log2_size >= lower);
        // rates converge: per-symbol size within slack + types overhead
        assert!((log2_size / n as f64 - h).abs() <= slack + types / n as f64);
    }

    #[test]
    fn exact_probability_dominates_concentration_bound() {
        let pmf = Pmf::bernoulli(0.3).unwrap();
        let (n, eps) = (200, 0.08);
        let exact = typical_probability(&pmf, n, eps).unwrap();
        let bound = count_concentration_bound(2, n, eps);
        assert!(bound > 0.0);
        assert!(exact >= bound);
        assert!(exact <= 1.0 + 1e-12);
    }

    #[test]
    fn concentration_bound_shapes() {
        let b = count_concentration_bound(2, 100, 0.1);
        assert!((b - (1.0 - 4.0 * (-2.0f64).exp())).abs() < 1e-12);
        assert!(count_concentration_bound(2, 10, 0.05) < 0.0);
        assert!(
            count_concentration_bound(2, 400, 0.1) > count_concentration_bound(2, 100, 0.1)
        );
    }

    #[test]
    fn params_enforce_ordering() {
        assert!(TypicalityParams::new(0.01, 0.02, 0.03, 0.04).is_ok());
        assert!(TypicalityParams::new(0.02, 0.01, 0.03, 0.04).is_err());
        assert!(TypicalityParams::new(0.0, 0.01, 0.02, 0.03).is_err());
        let p = TypicalityParams::scaled(0.02).unwrap();
        assert!((p.xi - 0.001).abs() < 1e-15);
        assert!((p.zeta - 0.002).abs() < 1e-15);
        assert!((p.sigma - 0.003).abs() < 1e-15);
        assert!((p.vartheta - 0.004).abs() < 1e-15);
    }
}
