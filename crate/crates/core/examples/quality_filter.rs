//! Quality indices, class thresholds and the effect of the class multipliers
//! on an overlapping two-Gaussian dataset.
//!
//! ```text
//! cargo run --example quality_filter
//! ```

use ggflex::dataset::{gen_gaussian_pair, Label};
use ggflex::graph::build_gabriel_for;
use ggflex::quality::{fixed_filter, flexible_filter, QualityProfile};
use ggflex::PerClass;

fn main() -> ggflex::Result<()> {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.5, 200, 11)?;
    let graph = build_gabriel_for(&data)?;
    let profile = QualityProfile::compute(&graph, data.labels(), PerClass::ONES)?;
    println!("theta: positive {:.4}, negative {:.4}", profile.theta.pos, profile.theta.neg);

    let fixed = fixed_filter(&data, &graph, &profile.q, profile.theta)?;
    println!("fixed thresholds remove {} of {}", fixed.removed.len(), data.len());

    println!("{:>6} {:>6} {:>9} {:>9}", "h_pos", "h_neg", "removed+", "removed-");
    for (hp, hn) in [(0.5, 1.0), (1.0, 1.0), (1.2, 1.0), (1.0, 1.5), (2.0, 2.0)] {
        // h below a class threshold removes every sample of that class
        match flexible_filter(&data, &graph, &profile.q, profile.theta, PerClass::new(hp, hn)) {
            Ok(f) => {
                let removed = |class: Label| f.removed.iter().filter(|&&i| data.label(i) == class).count();
                println!("{hp:>6} {hn:>6} {:>9} {:>9}", removed(Label::Positive), removed(Label::Negative));
            }
            Err(e) => println!("{hp:>6} {hn:>6} {e}"),
        }
    }
    Ok(())
}
