//! Average ranks, Friedman test and Bonferroni-Dunn critical difference for
//! the bundled table of reported AUCs (17 datasets, 9 classifiers).
//!
//! ```text
//! cargo run --example rank_statistics
//! ```

use ggflex::evaluation::{rank_summary, ScoreTable};

fn main() -> ggflex::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/reported_auc.csv");
    let table = ScoreTable::load(path, b',')?;
    let s = rank_summary(&table, 0.05, None, Some(2.01))?;
    for ((name, rank), within) in s.classifiers.iter().zip(&s.average_ranks).zip(&s.within_cd_of_best) {
        println!("{name:<16} {rank:.4} {}", if *within { "" } else { "(outside CD of best)" });
    }
    println!("chi2 = {:.4}, F = {:.4}, reject: {:?}", s.friedman_chi2, s.friedman_f, s.reject_null);
    println!("q = {}, CD = {:.4}", s.q_alpha, s.cd);
    Ok(())
}
