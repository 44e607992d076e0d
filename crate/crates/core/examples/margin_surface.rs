//! Mean margin of the kept samples over a log grid of class multipliers,
//! printed as a small table.
//!
//! ```text
//! cargo run --release --example margin_surface
//! ```

use ggflex::dataset::gen_gaussian_pair;
use ggflex::margin::{fixed_threshold_margin, log_grid, margin_surface};

fn main() -> ggflex::Result<()> {
    let data = gen_gaussian_pair(&[3.0, 3.0], &[5.0, 5.0], 0.3, 500, 0)?;
    let axis = log_grid(0.25, 4.0, 5);
    let cells = margin_surface(&data, &axis, &axis)?;

    print!("h_pos\\h_neg");
    for h in &axis {
        print!(" {h:>7.3}");
    }
    println!();
    for (r, h_pos) in axis.iter().enumerate() {
        print!("{h_pos:>11.3}");
        for cell in &cells[r * axis.len()..(r + 1) * axis.len()] {
            match cell.mean_margin {
                Some(m) => print!(" {m:>7.4}"),
                None => print!(" {:>7}", "-"),
            }
        }
        println!();
    }
    println!("fixed thresholds: {:.4}", fixed_threshold_margin(&data)?);
    Ok(())
}
