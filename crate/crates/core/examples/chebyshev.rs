//! Two-variate Chebyshev models: recurrence vs power-form Horner evaluation,
//! the arithmetic Horner spends, and orthogonality of the product basis.
//!
//!     cargo run --release --example chebyshev

use chebycar::cheby::{coeff_count, weighted_inner_product, ChebyModel};
use chebycar::env::McParams;

fn main() -> chebycar::Result<()> {
    let bounds = McParams::default().bounds();
    let obs = [-0.5, 0.02];
    for d in [1, 2, 3, 5, 8] {
        let len = coeff_count(2, d);
        let coeffs: Vec<f64> = (0..len)
            .map(|i| ((i * 7 + 3) % 11) as f64 / 11.0 - 0.5)
            .collect();
        let m = ChebyModel::new(d, bounds.clone(), coeffs)?;
        let a = m.eval(&obs)?;
        let (b, ops) = m.eval_horner(&obs)?;
        println!(
            "d={d:<2} coeffs={len:<3} recurrence={a:+.12} horner={b:+.12} |diff|={:.1e} mults={} adds={}",
            (a - b).abs(),
            ops.mults,
            ops.adds
        );
    }

    // <T_a, T_b> under the Chebyshev weight on [-1, 1]^2.
    let d = 3;
    println!("\ninner products, d={d}:");
    for a in [[0, 0], [1, 0], [2, 1], [3, 3]] {
        let row: Vec<String> = [[0, 0], [1, 0], [2, 1], [3, 3]]
            .iter()
            .map(|b| format!("{:8.4}", weighted_inner_product(&a, b, d)))
            .collect();
        println!("  T{:?}: {}", a, row.join(" "));
    }
    Ok(())
}
