// Exact typical-set probability against the exponential tail bound
// 1 - 2|X| exp(-2 xi^2 n). The exact value walks the count lattice
// directly, so the comparison needs no sampling at all.

use skgen::prob::Pmf;
use skgen::typicality::typical_probability;

fn main() -> skgen::Result<()> {
    let p = Pmf::bernoulli(0.3)?;
    println!(
        "{:>5} {:>6} {:>18} {:>18}",
        "n", "xi", "exact", "tail bound"
    );
    for n in [10usize, 25, 50, 100] {
        for xi in [0.05, 0.08, 0.12, 0.2, 0.3] {
            let exact = typical_probability(&p, n, xi)?;
            let bound = 1.0 - 4.0 * (-2.0 * xi * xi * n as f64).exp();
            println!("{n:>5} {xi:>6} {exact:>18.12} {bound:>18.12}");
        }
    }
    Ok(())
}
