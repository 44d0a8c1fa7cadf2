//! Small numerical kernels shared across modules.

use num_complex::Complex64;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// In-place Walsh-Hadamard transform with the unitary 2^{-n/2} normalization,
/// i.e. a Hadamard gate on every qubit of a dense register.
pub fn hadamard_all(amps: &mut [Complex64]) {
    let len = amps.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in (0..len).step_by(2 * half) {
            for i in block..block + half {
                let a = amps[i];
                let b = amps[i + half];
                amps[i] = a + b;
                amps[i + half] = a - b;
            }
        }
        half *= 2;
    }
    let scale = (len as f64).sqrt().recip();
    amps.iter_mut().for_each(|a| *a *= scale);
}

pub fn norm_sqr(amps: &[Complex64]) -> f64 {
    compensated_sum(amps.iter().map(|a| a.norm_sqr()))
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `(x - sin x) / x^2`, accurate for small `x` (odd, ~ x/6 near zero).
pub fn x_minus_sin_over_x2(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // alternating series x/6 - x^3/120 + x^5/5040 - ...
        let x2 = x * x;
        let mut term = x / 6.0;
        let mut acc = term;
        let mut k = 1u32;
        loop {
            let n = 2 * k + 3; // next factorial pair (n)(n-1) beyond 3!
            term *= -x2 / ((n * (n - 1)) as f64);
            acc += term;
            if term.abs() <= f64::EPSILON * acc.abs() || k > 20 {
                break;
            }
            k += 1;
        }
        acc
    } else {
        (x - x.sin()) / (x * x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn hadamard_all_is_involutive() {
        let mut v: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, -(i as f64) * 0.5)).collect();
        let orig = v.clone();
        hadamard_all(&mut v);
        hadamard_all(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn series_matches_direct_form_at_switch_point() {
        for &x in &[0.49_f64, -0.3, 0.1, 1e-3] {
            let direct = (x - x.sin()) / (x * x);
            assert!((x_minus_sin_over_x2(x) - direct).abs() < 1e-10, "x = {x}");
        }
        assert_eq!(x_minus_sin_over_x2(0.0), 0.0);
        assert!((x_minus_sin_over_x2(1e-9) - 1e-9 / 6.0).abs() < 1e-24);
    }
}
