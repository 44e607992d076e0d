//! Tunes `(h_pos, h_neg)` by inner cross-validation AUC and shows the best
//! trials next to the fixed-threshold anchor.
//!
//! ```text
//! cargo run --release --example tune_multipliers
//! ```

use ggflex::dataset::gen_gaussian_pair;
use ggflex::evaluation::cv_objective;
use ggflex::tuner::{tune, SearchSpace};

fn main() -> ggflex::Result<()> {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 1.0, 100, 21)?;
    let objective = cv_objective(&data, 5, 21, true)?;
    let space = SearchSpace::class_multipliers(0.1, 10.0, 50, 21);
    let result = tune(objective, &space)?;

    let anchor = &result.history[0];
    println!("anchor (1, 1): {:?}", anchor.score);
    let mut ranked: Vec<_> = result.history.iter().filter(|t| t.score.is_some()).collect();
    ranked.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    for t in ranked.iter().take(5) {
        println!("trial {:>2}: h = ({:.3}, {:.3}) AUC {:.4}", t.trial_index, t.params[0], t.params[1], t.score.unwrap());
    }
    let invalid = result.history.iter().filter(|t| t.score.is_none()).count();
    println!("{invalid} invalid trials; best is trial {}", result.best.trial_index);
    Ok(())
}
