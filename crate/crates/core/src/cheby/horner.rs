//! Nested (multi-variate) Horner evaluation.
//!
//! The Chebyshev tensor is converted once into the power basis on the scaled
//! cube; an n-variate polynomial is then a polynomial in `u_1` whose
//! coefficients are polynomials in `(u_2, .., u_n)`, and so on. Each nesting
//! level costs `d` multiplications and `d` additions per evaluation of its
//! `(d+1)` sub-polynomials, for `(d+1)^n - 1` of each in total.

use crate::{Error, Result};

/// Largest degree for which the Chebyshev-to-monomial conversion is offered.
/// Beyond it the integer conversion coefficients (~2^(d-1)) make the power form
/// numerically useless.
pub const MAX_HORNER_DEGREE: usize = 30;

/// Arithmetic used by one Horner evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub mults: u64,
    pub adds: u64,
}

/// `M[k][j]`: coefficient of `x^j` in `T_k(x)`, exact integers for `d <= 30`.
pub fn cheb_to_monomial(d: usize) -> Vec<Vec<i64>> {
    let mut m = vec![vec![0i64; d + 1]; d + 1];
    m[0][0] = 1;
    if d >= 1 {
        m[1][1] = 1;
    }
    for k in 2..=d {
        for j in 0..=k {
            let shifted = if j >= 1 { 2 * m[k - 1][j - 1] } else { 0 };
            m[k][j] = shifted - m[k - 2][j];
        }
    }
    m
}

/// Power-basis coefficient tensor, same flattening as the Chebyshev tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerForm {
    n: usize,
    d: usize,
    coeffs: Vec<f64>,
}

impl PowerForm {
    pub fn from_chebyshev(n: usize, d: usize, cheb: &[f64]) -> Result<Self> {
        if d > MAX_HORNER_DEGREE {
            return Err(Error::Config(format!(
                "Horner evaluation is limited to max-degree {MAX_HORNER_DEGREE}, got {d}"
            )));
        }
        let m = cheb_to_monomial(d);
        let per = d + 1;
        let mut cur = cheb.to_vec();
        // Mode-wise transform: along axis `axis`, p[.., j, ..] = sum_k c[.., k, ..] M[k][j].
        for axis in 0..n {
            let stride = per.pow((n - 1 - axis) as u32);
            let block = stride * per;
            let mut next = vec![0.0; cur.len()];
            for outer in (0..cur.len()).step_by(block) {
                for inner in 0..stride {
                    for j in 0..per {
                        let mut acc = 0.0;
                        for (k, row) in m.iter().enumerate().skip(j) {
                            acc += cur[outer + k * stride + inner] * row[j] as f64;
                        }
                        next[outer + j * stride + inner] = acc;
                    }
                }
            }
            cur = next;
        }
        Ok(Self { n, d, coeffs: cur })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluates at a point of `[-1, 1]^n`.
    pub fn eval(&self, u: &[f64]) -> (f64, OpCount) {
        assert_eq!(u.len(), self.n, "input dimension mismatch");
        let mut ops = OpCount::default();
        let v = self.eval_level(&self.coeffs, u, &mut ops);
        (v, ops)
    }

    fn eval_level(&self, coeffs: &[f64], u: &[f64], ops: &mut OpCount) -> f64 {
        if u.is_empty() {
            return coeffs[0];
        }
        let chunk = coeffs.len() / (self.d + 1);
        let x = u[0];
        let rest = &u[1..];
        let mut acc = self.eval_level(&coeffs[self.d * chunk..], rest, ops);
        for j in (0..self.d).rev() {
            let sub = self.eval_level(&coeffs[j * chunk..(j + 1) * chunk], rest, ops);
            acc = acc * x + sub;
            ops.mults += 1;
            ops.adds += 1;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cheby::ChebyModel;
    use rand::{Rng, SeedableRng};

    #[test]
    fn monomial_table_small_degrees() {
        let m = cheb_to_monomial(4);
        assert_eq!(m[2], vec![-1, 0, 2, 0, 0]);
        assert_eq!(m[3], vec![0, -3, 0, 4, 0]);
        assert_eq!(m[4], vec![1, 0, -8, 0, 8]);
    }

    #[test]
    fn univariate_cubic_counts() {
        let model = ChebyModel::new(3, vec![(-1.0, 1.0)], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (_, ops) = model.eval_horner(&[0.3]).unwrap();
        assert_eq!(ops, OpCount { mults: 3, adds: 3 });
    }

    #[test]
    fn bivariate_cubic_counts() {
        let model = ChebyModel::zeros(3, vec![(-1.0, 1.0); 2]).unwrap();
        let (_, ops) = model.eval_horner(&[0.3, -0.2]).unwrap();
        assert_eq!(
            ops,
            OpCount {
                mults: 15,
                adds: 15
            }
        );
    }

    #[test]
    fn horner_equals_recurrence() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let bounds = vec![(-1.2, 0.6), (-0.07, 0.07)];
        let coeffs: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = ChebyModel::new(3, bounds, coeffs).unwrap();
        for _ in 0..1000 {
            let x = [rng.gen_range(-1.2..0.6), rng.gen_range(-0.07..0.07)];
            let a = model.eval(&x).unwrap();
            let (b, _) = model.eval_horner(&x).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn degree_limit() {
        let high = ChebyModel::zeros(31, vec![(-1.0, 1.0)]).unwrap();
        assert!(high.eval_horner(&[0.0]).is_err());
        assert_eq!(high.eval(&[0.0]).unwrap(), 0.0);
        let ok = ChebyModel::zeros(30, vec![(-1.0, 1.0)]).unwrap();
        assert!(ok.eval_horner(&[0.0]).is_ok());
    }

    #[test]
    fn op_count_formula_over_sizes() {
        for n in 1..=4u32 {
            for d in 0..=12usize {
                let size = (d + 1).pow(n);
                if size > 100_000 {
                    continue;
                }
                let model = ChebyModel::zeros(d, vec![(-1.0, 1.0); n as usize]).unwrap();
                let u = vec![0.1; n as usize];
                let (_, ops) = model.eval_horner(&u).unwrap();
                assert_eq!(ops.mults, size as u64 - 1);
                assert_eq!(ops.adds, size as u64 - 1);
            }
        }
    }
}
