// Maximum-likelihood estimation of the marginal class from one source
// block. The error probability decays exponentially in the block
// length; the fitted log-slope should track the Chernoff exponent of
// the two candidate marginals.

use skgen::estimation::{chernoff_exponent, estimate_error_curve};
use skgen::prob::Pmf;

fn main() -> skgen::Result<()> {
    let classes = vec![Pmf::bernoulli(0.3)?, Pmf::bernoulli(0.7)?];
    let curve = estimate_error_curve(&classes, 0, &[10, 20, 40], 100_000, 11)?;
    for (n, err) in &curve.points {
        println!("n = {n:>3}  error rate {err:.6}");
    }
    let ex = chernoff_exponent(&classes[0], &classes[1])?;
    match curve.slope {
        Some(s) => {
            println!("fitted slope      {s:.6} bits per letter");
            println!("chernoff exponent {:.6}", ex);
            println!("ratio             {:.3}", -s / ex);
        }
        None => println!("not enough error mass to fit a slope"),
    }
    Ok(())
}
