// Random key tables flatten a conditional distribution: push a uniform
// law on lambda columns through freshly drawn tables and compare the
// fraction of draws that miss uniformity by more than eps against the
// tail bound 2k exp(-lambda eps^2 (1 - eta) / (2k (1 + eps))).

use skgen::extraction::{extractor_deviation_bound, pushforward_distance, KeyExtractor};

fn main() -> skgen::Result<()> {
    let lambda = 1u64 << 12;
    let k = 4u64;
    let eps = 0.1;
    let weights = vec![1.0 / lambda as f64; lambda as usize];

    let draws = 1000u64;
    let mut worst = 0.0f64;
    let mut over = 0u64;
    for seed in 0..draws {
        let ex = KeyExtractor::draw(lambda, k, seed)?;
        let d = pushforward_distance(&ex, &weights)?;
        worst = worst.max(d);
        if d > eps {
            over += 1;
        }
    }
    let bound = extractor_deviation_bound(lambda as f64, eps, 0.0, k)?;
    println!("tables drawn        {draws}");
    println!("worst distance      {worst:.6}");
    println!("fraction above eps  {:.6}", over as f64 / draws as f64);
    println!("tail bound          {bound:.6}");
    Ok(())
}
