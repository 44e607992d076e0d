//! Mean margin before and after filtering, and mean quality index, as the
//! class variance grows.
//!
//! ```text
//! cargo run --release --example margin_curve
//! ```

use ggflex::margin::{margin_curve, CurveConfig};

fn main() -> ggflex::Result<()> {
    let variances: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let curve = margin_curve(&variances, &CurveConfig::default())?;
    println!("variance  unfiltered  filtered  mean_q");
    for p in curve {
        let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        println!(
            "{:>8.1}  {:>10.4}  {:>8}  {:>6}",
            p.variance,
            p.mean_unfiltered,
            show(p.mean_filtered),
            show(p.mean_q)
        );
    }
    Ok(())
}
