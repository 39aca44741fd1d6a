//! Multi-variate Chebyshev polynomials of bounded max-degree.
//!
//! A model over `n` inputs with max-degree `d` stores `(d+1)^n` coefficients
//! `theta[i_1, .., i_n]` of the product basis `T_{i_1}(u_1) * .. * T_{i_n}(u_n)`,
//! flattened row-major with `i_1` varying slowest. Raw inputs are clamped to
//! the model's box and mapped affinely onto `[-1, 1]^n` before evaluation.

mod horner;
mod quadrature;

pub use horner::{cheb_to_monomial, OpCount, PowerForm, MAX_HORNER_DEGREE};
pub use quadrature::{gauss_chebyshev_nodes, weighted_inner, weighted_inner_product};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Chebyshev values `T_0(x) .. T_d(x)` by the three-term recurrence.
pub fn cheb_values(x: f64, d: usize, out: &mut [f64]) {
    debug_assert!(out.len() > d);
    out[0] = 1.0;
    if d == 0 {
        return;
    }
    out[1] = x;
    let two_x = 2.0 * x;
    for k in 2..=d {
        out[k] = two_x * out[k - 1] - out[k - 2];
    }
}

/// Affine map of `raw` from `bounds` onto `[-1, 1]` per dimension; values
/// outside the box are clamped to its boundary first.
pub fn scale_input(raw: &[f64], bounds: &[(f64, f64)]) -> Result<Vec<f64>> {
    if raw.len() != bounds.len() {
        return Err(Error::Domain(format!(
            "input has {} components, bounds have {}",
            raw.len(),
            bounds.len()
        )));
    }
    check_bounds(bounds)?;
    raw.iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| {
            if !x.is_finite() {
                return Err(Error::Domain(format!("non-finite input {x}")));
            }
            Ok(scale_one(x, lo, hi))
        })
        .collect()
}

#[inline]
fn scale_one(x: f64, lo: f64, hi: f64) -> f64 {
    let x = x.clamp(lo, hi);
    (2.0 * (x - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("degenerate bounds [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// Values of all `(d+1)^n` product basis polynomials at a scaled point,
/// in coefficient flattening order.
pub fn basis_values(x_scaled: &[f64], d: usize) -> Vec<f64> {
    let n = x_scaled.len();
    let per_dim = d + 1;
    let mut table = vec![0.0; n * per_dim];
    for (i, &x) in x_scaled.iter().enumerate() {
        cheb_values(x, d, &mut table[i * per_dim..(i + 1) * per_dim]);
    }
    let mut out = Vec::with_capacity(per_dim.pow(n as u32));
    out.push(1.0);
    for i in 0..n {
        let row = &table[i * per_dim..(i + 1) * per_dim];
        let prev = std::mem::take(&mut out);
        out.reserve(prev.len() * per_dim);
        for a in prev {
            out.extend(row.iter().map(|t| a * t));
        }
    }
    out
}

/// Number of coefficients `(d+1)^n`.
pub fn coeff_count(n: usize, d: usize) -> usize {
    (d + 1).pow(n as u32)
}

/// Flat index -> multi-index `(i_1, .., i_n)`.
pub fn multi_index(mut flat: usize, n: usize, d: usize) -> Vec<usize> {
    let mut idx = vec![0; n];
    for slot in idx.iter_mut().rev() {
        *slot = flat % (d + 1);
        flat /= d + 1;
    }
    idx
}

/// Multi-index -> flat index.
pub fn flat_index(idx: &[usize], d: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * (d + 1) + i)
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    n: usize,
    d: usize,
    bounds: Vec<[f64; 2]>,
    coeffs: Vec<f64>,
}

/// An n-variate max-degree-d Chebyshev expansion on a box.
#[derive(Debug, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct ChebyModel {
    n: usize,
    d: usize,
    bounds: Vec<(f64, f64)>,
    coeffs: Vec<f64>,
    power: OnceLock<Result<PowerForm>>,
}

impl Clone for ChebyModel {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            d: self.d,
            bounds: self.bounds.clone(),
            coeffs: self.coeffs.clone(),
            power: OnceLock::new(),
        }
    }
}

impl PartialEq for ChebyModel {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.d == other.d
            && self.bounds == other.bounds
            && self.coeffs == other.coeffs
    }
}

impl TryFrom<ModelRepr> for ChebyModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        if r.bounds.len() != r.n {
            return Err(Error::Config(format!(
                "model has n = {} but {} bound pairs",
                r.n,
                r.bounds.len()
            )));
        }
        ChebyModel::new(
            r.d,
            r.bounds.iter().map(|b| (b[0], b[1])).collect(),
            r.coeffs,
        )
    }
}

impl From<ChebyModel> for ModelRepr {
    fn from(m: ChebyModel) -> Self {
        ModelRepr {
            n: m.n,
            d: m.d,
            bounds: m.bounds.iter().map(|&(lo, hi)| [lo, hi]).collect(),
            coeffs: m.coeffs,
        }
    }
}

impl ChebyModel {
    pub fn new(d: usize, bounds: Vec<(f64, f64)>, coeffs: Vec<f64>) -> Result<Self> {
        let n = bounds.len();
        if n == 0 {
            return Err(Error::Config("a model needs at least one input".into()));
        }
        check_bounds(&bounds)?;
        let expected = coeff_count(n, d);
        if coeffs.len() != expected {
            return Err(Error::Config(format!(
                "expected (d+1)^n = {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("coefficients must be finite".into()));
        }
        Ok(Self {
            n,
            d,
            bounds,
            coeffs,
            power: OnceLock::new(),
        })
    }

    pub fn zeros(d: usize, bounds: Vec<(f64, f64)>) -> Result<Self> {
        let len = coeff_count(bounds.len(), d);
        Self::new(d, bounds, vec![0.0; len])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Replaces the coefficients in place; the cached power form is dropped.
    pub fn set_coeffs(&mut self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.coeffs.len() {
            return Err(Error::Config("coefficient length mismatch".into()));
        }
        self.coeffs.copy_from_slice(coeffs);
        self.power = OnceLock::new();
        Ok(())
    }

    /// Mutable access for optimizers. Invalidates the cached power form.
    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        self.power = OnceLock::new();
        &mut self.coeffs
    }

    pub fn scale(&self, raw: &[f64]) -> Result<Vec<f64>> {
        scale_input(raw, &self.bounds)
    }

    /// Basis vector at a raw (unscaled) input.
    pub fn basis(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(basis_values(&self.scale(raw)?, self.d))
    }

    /// Inner product of the coefficients with a precomputed basis vector.
    pub fn eval_basis(&self, basis: &[f64]) -> f64 {
        debug_assert_eq!(basis.len(), self.coeffs.len());
        self.coeffs.iter().zip(basis).map(|(c, b)| c * b).sum()
    }

    /// Evaluates via the recurrence basis.
    pub fn eval(&self, raw: &[f64]) -> Result<f64> {
        Ok(self.eval_basis(&self.basis(raw)?))
    }

    /// Power-basis form, converted once and cached.
    pub fn power_form(&self) -> Result<&PowerForm> {
        self.power
            .get_or_init(|| PowerForm::from_chebyshev(self.n, self.d, &self.coeffs))
            .as_ref()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Evaluates by the nested Horner scheme and reports the arithmetic used.
    pub fn eval_horner(&self, raw: &[f64]) -> Result<(f64, OpCount)> {
        let u = self.scale(raw)?;
        Ok(self.power_form()?.eval(&u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Closed-form power expansion of `T_k`, independent of the recurrence:
    /// `T_k(x) = k/2 * sum_m (-1)^m (k-m-1)! / (m! (k-2m)!) (2x)^(k-2m)`.
    fn t_closed_form(k: usize, x: f64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let fact = |n: usize| (1..=n).fold(1.0f64, |a, b| a * b as f64);
        let mut s = 0.0;
        for m in 0..=k / 2 {
            let c = fact(k - m - 1) / (fact(m) * fact(k - 2 * m));
            s += if m % 2 == 0 { c } else { -c } * (2.0 * x).powi((k - 2 * m) as i32);
        }
        s * k as f64 / 2.0
    }

    #[test]
    fn scale_examples() {
        let b = vec![(-1.2, 0.6), (-0.07, 0.07)];
        let mid = scale_input(&[-0.3, 0.0], &b).unwrap();
        assert!(mid.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(scale_input(&[0.6, 0.07], &b).unwrap(), vec![1.0, 1.0]);
        let u = scale_input(&[-0.375, 0.035], &b).unwrap();
        assert!((u[0] - (2.0 * 0.825 / 1.8 - 1.0)).abs() < 1e-15);
        assert!((u[0] + 0.083_333_333_333_333_3).abs() < 1e-12);
        assert!((u[1] - 0.5).abs() < 1e-15);
        assert_eq!(scale_input(&[5.0, -1.0], &b).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(matches!(
            scale_input(&[0.0], &[(1.0, 1.0)]),
            Err(Error::Config(_))
        ));
        assert!(ChebyModel::zeros(2, vec![(0.5, -0.5)]).is_err());
    }

    #[test]
    fn basis_examples() {
        assert_eq!(basis_values(&[0.5], 2), vec![1.0, 0.5, -0.5]);
        let b = basis_values(&[0.3, 0.5], 1);
        assert_eq!(b, vec![1.0, 0.5, 0.3, 0.3 * 0.5]);
        assert_eq!(
            basis_values(&[-1.0], 5),
            vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0]
        );
    }

    #[test]
    fn recurrence_matches_trigonometric_definition() {
        let mut buf = vec![0.0; 51];
        for i in 0..1000 {
            let x = -1.0 + 2.0 * i as f64 / 999.0;
            cheb_values(x, 50, &mut buf);
            for (k, t) in buf.iter().enumerate() {
                let exact = (k as f64 * x.acos()).cos();
                assert!((t - exact).abs() <= 1e-12, "k={k} x={x}: {t} vs {exact}");
            }
        }
    }

    #[test]
    fn zero_and_constant_models() {
        let b = vec![(-1.2, 0.6), (-0.07, 0.07)];
        let zero = ChebyModel::zeros(3, b.clone()).unwrap();
        assert_eq!(zero.eval(&[-0.5, 0.01]).unwrap(), 0.0);
        let mut c = vec![0.0; 16];
        c[0] = 2.5;
        let constant = ChebyModel::new(3, b, c).unwrap();
        for x in [-1.2, -0.3, 0.6] {
            assert_eq!(constant.eval(&[x, 0.03]).unwrap(), 2.5);
        }
    }

    #[test]
    fn eval_matches_power_expansion_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = 3;
        let coeffs: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = ChebyModel::new(d, vec![(-1.0, 1.0), (-1.0, 1.0)], coeffs.clone()).unwrap();
        for _ in 0..200 {
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let mut oracle = 0.0;
            for (flat, c) in coeffs.iter().enumerate() {
                let idx = multi_index(flat, 2, d);
                oracle += c * t_closed_form(idx[0], x[0]) * t_closed_form(idx[1], x[1]);
            }
            let got = model.eval(&x).unwrap();
            assert!((got - oracle).abs() <= 1e-10 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn non_finite_input_is_domain_error() {
        let m = ChebyModel::zeros(2, vec![(-1.0, 1.0)]).unwrap();
        assert!(matches!(m.eval(&[f64::NAN]), Err(Error::Domain(_))));
    }

    #[test]
    fn json_layout() {
        let m = ChebyModel::new(1, vec![(-1.0, 1.0)], vec![0.5, -0.25]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["n"], 1);
        assert_eq!(v["d"], 1);
        assert_eq!(v["bounds"], serde_json::json!([[-1.0, 1.0]]));
        assert_eq!(v["coeffs"], serde_json::json!([0.5, -0.25]));
        let bad = serde_json::json!({"n": 1, "d": 2, "bounds": [[-1.0, 1.0]], "coeffs": [1.0]});
        assert!(serde_json::from_value::<ChebyModel>(bad).is_err());
    }

    #[test]
    fn index_roundtrip() {
        for flat in 0..64 {
            assert_eq!(flat_index(&multi_index(flat, 3, 3), 3), flat);
        }
        assert_eq!(multi_index(1, 2, 1), vec![0, 1]);
    }

    proptest! {
        #[test]
        fn basis_is_bounded(x in -1.0f64..=1.0, y in -1.0f64..=1.0, z in -1.0f64..=1.0, d in 0usize..8) {
            for b in basis_values(&[x, y, z], d) {
                prop_assert!(b.abs() <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn eval_is_linear_in_coefficients(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            c1 in proptest::collection::vec(-1.0f64..1.0, 9),
            c2 in proptest::collection::vec(-1.0f64..1.0, 9),
            x in -1.0f64..1.0, y in -1.0f64..1.0,
        ) {
            let bounds = vec![(-1.0, 1.0), (-1.0, 1.0)];
            let m1 = ChebyModel::new(2, bounds.clone(), c1.clone()).unwrap();
            let m2 = ChebyModel::new(2, bounds.clone(), c2.clone()).unwrap();
            let mix: Vec<f64> = c1.iter().zip(&c2).map(|(p, q)| a * p + b * q).collect();
            let m = ChebyModel::new(2, bounds, mix).unwrap();
            let lhs = m.eval(&[x, y]).unwrap();
            let rhs = a * m1.eval(&[x, y]).unwrap() + b * m2.eval(&[x, y]).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
