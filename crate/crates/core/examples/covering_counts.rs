// Covering concentration for a binned codebook: with rate above
// I(U;X), the number of codewords jointly typical with a typical
// source block concentrates at 2^(n (R - I)). Counts the fraction of
// seeded codebooks whose count lands inside the two-sided window.

use skgen::coding::covering_concentration_check;
use skgen::prob::JointPmf;

fn main() -> skgen::Result<()> {
    let joint = JointPmf::new(vec![2, 2], vec![0.49, 0.09, 0.21, 0.21])?;
    let mi = joint.mi_between(&[0], &[1]);
    let rep = covering_concentration_check(&joint, 14, mi + 0.2, 0.1, 0.14, 0.05, 1000, 7)?;
    println!("I(U;X)            {:.9}", rep.mutual_information);
    println!("rate              {:.9}", rep.rate);
    println!("codewords         {}", rep.codewords);
    println!("count window      [{}, {}]", rep.count_lo, rep.count_hi);
    println!("observed range    [{}, {}]", rep.min_count, rep.max_count);
    println!(
        "inside window     {} of {} ({:.4})",
        rep.in_window,
        rep.trials,
        rep.in_window as f64 / rep.trials as f64
    );
    Ok(())
}
