//! Nested cross-validation on the bundled Haberman survival data: tuned
//! flexible Chipclass against standard Chipclass on the same folds.
//!
//! ```text
//! cargo run --release --example benchmark_haberman
//! ```

use ggflex::dataset::{load_csv, CsvOptions, LabelColumn};
use ggflex::evaluation::{run_benchmark, BenchConfig};

fn main() -> ggflex::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/haberman.csv");
    let raw = load_csv(path, &CsvOptions::new(LabelColumn::Name("class".into()), "negative"))?;
    let (data, dedup) = raw.remove_duplicates()?;
    println!("{} rows, {} after dropping {dedup:?}", raw.len(), data.len());

    let report = run_benchmark(&data, &BenchConfig::default())?;
    println!("fold  flexible  standard  h_pos  h_neg");
    for f in &report.per_fold {
        println!(
            "{:>4}  {:>8.4}  {:>8.4}  {:>5.2}  {:>5.2}",
            f.fold, f.test_auc, f.fixed_test_auc, f.chosen_h.pos, f.chosen_h.neg
        );
    }
    println!("mean  {:>8.4}  {:>8.4}", report.mean, report.fixed_baseline.mean);
    Ok(())
}
