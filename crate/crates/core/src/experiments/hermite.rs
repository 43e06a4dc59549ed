//! Hermite polynomials from `H_0 = 1`, `H_i(q) = 2q H_{i-1}(q) - H'_{i-1}(q)`.

/// `H_i` as a coefficient vector in increasing powers of `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteObservable {
    pub order: usize,
    coeffs: Vec<f64>,
}

impl HermiteObservable {
    pub fn new(order: usize) -> Self {
        let mut coeffs = vec![1.0];
        for _ in 0..order {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, c) in coeffs.iter().enumerate() {
                next[k + 1] += 2.0 * c;
                if k > 0 {
                    next[k - 1] -= k as f64 * c;
                }
            }
            coeffs = next;
        }
        Self { order, coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * q + c)
    }
}

pub fn hermite_eval(order: usize, q: f64) -> f64 {
    HermiteObservable::new(order).eval(q)
}
