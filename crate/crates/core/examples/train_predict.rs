//! Trains flexible Chipclass on a train split, scores the test split, and
//! round-trips the model through JSON.
//!
//! ```text
//! cargo run --example train_predict
//! ```

use ggflex::dataset::{gen_gaussian_pair, stratified_kfold};
use ggflex::evaluation::model_auc;
use ggflex::{fit, ChipclassModel, FitOptions, PerClass};

fn main() -> ggflex::Result<()> {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.8, 150, 3)?;
    let plan = stratified_kfold(&data, 4, 3)?;
    let train = data.subset(&plan.train_indices(0))?;
    let test = data.subset(&plan.test_indices(0))?;

    for h in [PerClass::ONES, PerClass::new(1.05, 1.2)] {
        let options = FitOptions { h, seed: Some(3), ..FitOptions::default() };
        let model = fit(&train, &options)?;
        println!(
            "h = ({}, {}): {} support edges, test AUC {:.4}",
            h.pos,
            h.neg,
            model.edges.len(),
            model_auc(&model, &test)?
        );
    }

    let model = fit(&train, &FitOptions::default())?;
    let x = [4.0, 4.0];
    println!("p(positive | {x:?}) = {:.4}, label {}", model.predict_proba(&x)?, model.predict(&x)?);

    let restored = ChipclassModel::from_json(&model.to_json()?)?;
    assert_eq!(restored.predict_proba(&x)?, model.predict_proba(&x)?);
    println!("model JSON round trip reproduces predictions");
    Ok(())
}
