// Single-letter achievable rate via the two-stage auxiliary search.
// On a degraded family the search should recover the exact capacity
// once the preprocessed alphabet is wide enough to represent Y itself.

use skgen::capacity::{degraded_capacity, rate_lower_bound, SearchConfig};
use skgen::sourcefile::load_source_spec;

fn main() -> skgen::Result<()> {
    let src = load_source_spec(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/bsc_cascade.toml"
    ))?;
    let cfg = SearchConfig {
        u_size: 1,
        v_size: 2,
        grid: 64,
        ..SearchConfig::default()
    };
    let rep = rate_lower_bound(&src, f64::INFINITY, &cfg)?;
    for c in &rep.classes {
        println!(
            "class {}: value {:.9}, forward {:.9}, leak {:.9}, budget used {:.9}",
            c.class_index, c.value, c.terms.forward, c.terms.leak, c.terms.constraint
        );
    }
    let cap = degraded_capacity(&src)?.value;
    println!("searched bound {:.12}", rep.value);
    println!("degraded value {:.12}", cap);
    println!("gap            {:.3e}", cap - rep.value);
    Ok(())
}
