// Snapping searched auxiliary channels to the 1/l grid. The snapped
// family lives in a finite net of at most (l+1)^cells matrices, every
// entry moves by at most |out|/l, and no positive entry collapses to
// zero, so each original row is dominated by e^(2 out^2 / l) times its
// snapped row. The realized objective shift stays inside the
// mutual-information continuity bound evaluated at the realized
// statistical distance.

use skgen::capacity::{
    evaluate_rate, quantize_family, rate_lower_bound, rate_shift_bound, SearchConfig,
};
use skgen::sourcefile::load_source_spec;

fn main() -> skgen::Result<()> {
    let src = load_source_spec(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/bsc_cascade.toml"
    ))?;
    let rep = rate_lower_bound(&src, f64::INFINITY, &SearchConfig::default())?;
    let classes = src.marginal_partition();
    for c in &rep.classes {
        let q = quantize_family(&c.aux, 512)?;
        let before = evaluate_rate(&src, &classes[c.class_index], &c.aux)?;
        let after = evaluate_rate(&src, &classes[c.class_index], &q.aux)?;
        let bound = rate_shift_bound(&src, &classes[c.class_index], &c.aux, &q.aux)?;
        println!("class {}", c.class_index);
        println!("  net size        2^{:.1}", q.net_log2);
        println!("  max row move    {:.6}", q.max_row_distance);
        println!("  objective       {:.9} -> {:.9}", before.objective, after.objective);
        println!(
            "  realized shift  {:.3e} within bound {:.3e}",
            (before.objective - after.objective).abs(),
            bound
        );
    }
    Ok(())
}
