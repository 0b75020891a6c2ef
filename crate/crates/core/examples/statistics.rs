//! The statistics used to compare planners.
//!
//! `cargo run --example statistics`

use counteract::actionable::hedges_g;
use counteract::eval::{
    improvement_score, iqr, mcnemar_exact, quantile, wilcoxon_signed_rank, ImprovementEntry, ImprovementOptions,
};

fn main() -> counteract::Result<()> {
    let a = [0.9, 1.0, 0.8, 1.0, 0.9, 0.7, 1.0, 0.9, 0.8, 1.0];
    let b = [0.5, 0.6, 0.8, 0.4, 0.7, 0.5, 0.9, 0.6, 0.3, 0.6];
    let w = wilcoxon_signed_rank(&a, &b)?;
    println!("Wilcoxon: W = {}, p = {:.4} ({:?}, n = {})", w.statistic, w.p_value, w.method, w.n);
    println!("median {:?}, IQR {:?}", quantile(&a, 0.5), iqr(&a));

    let m = mcnemar_exact(0, 14);
    println!("McNemar exact, discordant (0, 14): p = {:.4e}", m.p_value);

    println!("Hedges' g([1,2,3], [2,3,4]) = {}", hedges_g(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0])?);

    let entries = [
        ImprovementEntry { q_prev: 3.0, q_next: 1.0, overlap: 0.8 },
        ImprovementEntry { q_prev: 2.0, q_next: 1.0, overlap: 0.5 },
    ];
    println!("S_scaled = {:?}", improvement_score(&entries, ImprovementOptions::default()));
    Ok(())
}
