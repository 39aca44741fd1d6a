//! Gauss–Chebyshev quadrature for the weight `prod_i (1 - x_i^2)^(-1/2)`.

use std::f64::consts::PI;

use super::{cheb_values, flat_index};

/// Nodes `cos((2j - 1) pi / (2m))`, `j = 1..m`; each carries weight `pi / m`.
/// Exact for polynomials of degree `<= 2m - 1`.
pub fn gauss_chebyshev_nodes(m: usize) -> Vec<f64> {
    (1..=m)
        .map(|j| ((2 * j - 1) as f64 * PI / (2 * m) as f64).cos())
        .collect()
}

/// `<f, g>_w` over `[-1, 1]^n` on the full tensor grid with `m` nodes per dimension.
pub fn weighted_inner<F, G>(f: F, g: G, n: usize, m: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let nodes = gauss_chebyshev_nodes(m);
    let w = (PI / m as f64).powi(n as i32);
    let total = m.pow(n as u32);
    let mut point = vec![0.0; n];
    let mut sum = 0.0;
    for flat in 0..total {
        let mut rem = flat;
        for slot in point.iter_mut().rev() {
            *slot = nodes[rem % m];
            rem /= m;
        }
        sum += f(&point) * g(&point);
    }
    sum * w
}

/// `<T_a, T_b>_w` for two multi-indices of max-degree `<= d`, with `2d + 1`
/// nodes per dimension.
pub fn weighted_inner_product(a: &[usize], b: &[usize], d: usize) -> f64 {
    assert_eq!(a.len(), b.len(), "multi-index dimension mismatch");
    assert!(
        a.iter().chain(b).all(|&k| k <= d),
        "index exceeds degree bound"
    );
    let n = a.len();
    let m = 2 * d + 1;
    let basis = |idx: &[usize]| {
        let idx = idx.to_vec();
        move |x: &[f64]| {
            let mut buf = vec![0.0; d + 1];
            idx.iter().zip(x).fold(1.0, |acc, (&k, &xi)| {
                cheb_values(xi, d, &mut buf);
                acc * buf[k]
            })
        }
    };
    debug_assert!(flat_index(a, d) < (d + 1).pow(n as u32));
    weighted_inner(basis(a), basis(b), n, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheby::multi_index;

    #[test]
    fn orthogonality_matrix() {
        for (n, d) in [(1, 6), (2, 3), (3, 2)] {
            let count = (d + 1usize).pow(n as u32);
            for i in 0..count {
                for j in 0..count {
                    let a = multi_index(i, n, d);
                    let b = multi_index(j, n, d);
                    let ip = weighted_inner_product(&a, &b, d);
                    if i == j {
                        let ones = a.iter().filter(|&&k| k >= 1).count() as i32;
                        let expected = PI.powi(n as i32) / 2f64.powi(ones);
                        assert!((ip - expected).abs() < 1e-10, "{a:?}: {ip} vs {expected}");
                    } else {
                        assert!(ip.abs() < 1e-10, "{a:?} vs {b:?}: {ip}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_self_product_is_pi_power() {
        assert!((weighted_inner_product(&[0, 0], &[0, 0], 3) - PI * PI).abs() < 1e-10);
        assert!((weighted_inner_product(&[0], &[0], 1) - PI).abs() < 1e-12);
    }
}
