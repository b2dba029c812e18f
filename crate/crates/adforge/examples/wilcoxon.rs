//! Paired Wilcoxon signed-rank test: the exact null distribution for small
//! samples, the tie-corrected normal approximation for larger ones.

use adforge::eval::{wilcoxon_signed_rank, Alternative};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let before = [0.91, 0.84, 0.77, 0.95, 0.66, 0.88, 0.72, 0.81, 0.90, 0.69];
    let after = [0.62, 0.80, 0.79, 0.71, 0.58, 0.61, 0.70, 0.52, 0.74, 0.69];
    for alt in [Alternative::TwoSided, Alternative::Greater] {
        let r = wilcoxon_signed_rank(&before, &after, alt)?;
        println!(
            "{alt:?}: W+ {} W- {} n {} p {:.4} ({:?})",
            r.w_plus, r.w_minus, r.n_effective, r.p_value, r.mode
        );
    }

    let a: Vec<f64> = (0..40).map(|i| 0.5 + 0.01 * ((i * 7) % 13) as f64).collect();
    let b: Vec<f64> = (0..40).map(|i| 0.48 + 0.01 * ((i * 5) % 11) as f64).collect();
    let r = wilcoxon_signed_rank(&a, &b, Alternative::TwoSided)?;
    println!("n=40: W+ {} z {:.3} p {:.4} ({:?})", r.w_plus, r.z.unwrap_or(f64::NAN), r.p_value, r.mode);
    Ok(())
}
