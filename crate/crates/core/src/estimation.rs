//! Identifying the marginal class from Alice's samples.
//!
//! Alice cannot tell states within a class apart (they share her
//! marginal by definition), but she can and must identify the class
//! itself before choosing a codebook. The estimator is plain maximum
//! likelihood over class marginals; its error decays exponentially in
//! the block length, and the fitted decay rate can be compared against
//! the best possible exponent for a pair of candidates.

use crate::error::{Error, Result};
use crate::prob::{kahan_sum, Pmf};
use crate::seeds::{self, Purpose};
use crate::typicality::counts;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct EstimatorResult {
    pub estimated_class: usize,
    /// log2 likelihood per class; -inf marks a class ruled out by a
    /// zero-probability symbol.
    pub log_likelihoods: Vec<f64>,
}

/// Maximum-likelihood class choice for a block of Alice's symbols.
/// Ties break toward the smallest class index.
pub fn estimate_marginal(block: &[u8], class_marginals: &[Pmf]) -> Result<EstimatorResult> {
    if class_marginals.is_empty() {
        return Err(Error::Domain("no classes to estimate among".into()));
    }
    if block.is_empty() {
        return Err(Error::Domain("cannot estimate from an empty block".into()));
    }
    let size = class_marginals[0].size();
    if class_marginals.iter().any(|p| p.size() != size) {
        return Err(Error::AlphabetMismatch(
            "class marginals must share an alphabet".into(),
        ));
    }
    if block.iter().any(|&s| s as usize >= size) {
        return Err(Error::Domain(format!(
            "block symbol outside alphabet of size {size}"
        )));
    }
    let freq = counts(block, size);
    let log_likelihoods: Vec<f64> = class_marginals
        .iter()
        .map(|pmf| {
            let mut ll = 0.0;
            for (x, &c) in freq.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let p = pmf.get(x);
                if p == 0.0 {
                    return f64::NEG_INFINITY;
                }
                ll += c as f64 * p.log2();
            }
            ll
        })
        .collect();
    let mut best = None;
    for (i, &ll) in log_likelihoods.iter().enumerate() {
        if ll == f64::NEG_INFINITY {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                if ll > log_likelihoods[b] {
                    best = Some(i);
                }
            }
        }
    }
    let estimated_class = best.ok_or_else(|| {
        Error::NoAdmissibleClass(
            "every class puts zero probability on some observed symbol".into(),
        )
    })?;
    Ok(EstimatorResult {
        estimated_class,
        log_likelihoods,
    })
}

#[derive(Debug, Clone)]
pub struct ErrorCurve {
    /// (block length, Monte Carlo error rate) per requested length.
    pub points: Vec<(usize, f64)>,
    /// Least-squares slope of log2(error) against n over the points
    /// with a positive error rate; None when fewer than two qualify.
    pub slope: Option<f64>,
}

/// Least-squares slope of log2(err) vs n, ignoring zero-error points.
pub fn fitted_log2_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, e)| e > 0.0)
        .map(|&(n, e)| (n as f64, e.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let nbar = kahan_sum(pts.iter().map(|p| p.0)) / m;
    let ybar = kahan_sum(pts.iter().map(|p| p.1)) / m;
    let num = kahan_sum(pts.iter().map(|p| (p.0 - nbar) * (p.1 - ybar)));
    let den = kahan_sum(pts.iter().map(|p| (p.0 - nbar) * (p.0 - nbar)));
    if den == 0.0 {
        return None;
    }
    Some(num / den)
}

/// Monte Carlo error rate of the ML estimator at each block length,
/// sampling from `class_marginals[true_class]`.
pub fn estimate_error_curve(
    class_marginals: &[Pmf],
    true_class: usize,
    lengths: &[usize],
    trials: u64,
    master_seed: u64,
) -> Result<ErrorCurve> {
    if true_class >= class_marginals.len() {
        return Err(Error::Domain(format!(
            "true class {true_class} out of range"
        )));
    }
    if trials == 0 || lengths.is_empty() {
        return Err(Error::Domain("error curve needs lengths and trials".into()));
    }
    let truth = &class_marginals[true_class];
    let mut points = Vec::with_capacity(lengths.len());
    for (li, &n) in lengths.iter().enumerate() {
        if n == 0 {
            return Err(Error::Domain("block length zero".into()));
        }
        let errors: u64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed = seeds::derive(master_seed, Purpose::Source, ((li as u64) << 40) | t);
                let mut rng = seeds::rng(seed);
                let block: Vec<u8> = (0..n)
                    .map(|_| {
                        let u: f64 = rand::Rng::gen(&mut rng);
                        let mut acc = 0.0;
                        let mut sym = truth.size() - 1;
                        for x in 0..truth.size() {
                            acc += truth.get(x);
                            if u < acc {
                                sym = x;
                                break;
                            }
                        }
                        sym as u8
                    })
                    .collect();
                match estimate_marginal(&block, class_marginals) {
                    Ok(r) => u64::from(r.estimated_class != true_class),
                    Err(_) => 1,
                }
            })
            .sum();
        points.push((n, errors as f64 / trials as f64));
    }
    let slope = fitted_log2_slope(&points);
    Ok(ErrorCurve { points, slope })
}

/// Best achievable error exponent for deciding between two candidate
/// marginals: -log2 min over lambda in [0,1] of
/// sum_x p(x)^lambda q(x)^(1-lambda). Infinite when the supports are
/// disjoint.
pub fn chernoff_exponent(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.size() != q.size() {
        return Err(Error::AlphabetMismatch(
            "chernoff exponent needs a shared alphabet".into(),
        ));
    }
    let support: Vec<(f64, f64)> = (0..p.size())
        .filter(|&x| p.get(x) > 0.0 && q.get(x) > 0.0)
        .map(|x| (p.get(x).log2(), q.get(x).log2()))
        .collect();
    if support.is_empty() {
        return Ok(f64::INFINITY);
    }
    let f = |lam: f64| -> f64 {
        kahan_sum(
            support
                .iter()
                .map(|&(lp, lq)| (lam * lp + (1.0 - lam) * lq).exp2()),
        )
    };
    // f is convex on [0,1]; golden-section search
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let best = f(0.5 * (a + b)).min(f(0.0)).min(f(1.0));
    Ok((-best.log2()).max(0.0))
}
