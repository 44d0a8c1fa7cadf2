//! One-way computation: adaptive single-qubit measurements on cluster states.
//!
//! Conventions:
//! * Outcome `+1` (bit 0) selects `|0>` for `Z` and `(|0> + e^{i theta}|1>)/sqrt 2`
//!   for an equatorial basis at `theta`; `X` is `theta = 0`.
//! * Measuring a wire qubit at `theta` applies `X^s H P(-theta)` to the
//!   logical qubit, `P(phi) = diag(1, e^{i phi})`, `s` the outcome bit.
//! * Byproducts on outputs are removed as `X^x` then `Z^z`; logical maps are
//!   compared up to a global phase.
//! * A logical input is placed on its site as the raw qubit state in the
//!   reference cluster, and as `H|psi>` before the `XX` evolution in the
//!   generated one.

mod exec;
mod pattern;

pub use exec::*;
pub use pattern::*;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Circuit-model gates used as targets.
pub mod gates {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn identity() -> DMatrix<Complex64> {
        DMatrix::identity(2, 2)
    }

    pub fn hadamard() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)])
    }

    pub fn phase(phi: f64) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, phi)])
    }

    /// `exp(-i t X / 2)`.
    pub fn rx(t: f64) -> DMatrix<Complex64> {
        let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
        DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)])
    }

    /// `exp(-i t Z / 2)`.
    pub fn rz(t: f64) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[Complex64::from_polar(1.0, -t / 2.0), c(0.0, 0.0), c(0.0, 0.0), Complex64::from_polar(1.0, t / 2.0)])
    }

    /// Controlled-NOT with control bit 0 and target bit 1 of the basis index.
    pub fn cnot() -> DMatrix<Complex64> {
        DMatrix::from_fn(4, 4, |r, col| {
            let image = if col & 1 == 1 { col ^ 2 } else { col };
            if r == image { c(1.0, 0.0) } else { c(0.0, 0.0) }
        })
    }

    /// Target of [`super::wire_rotation_pattern`].
    pub fn euler(theta1: f64, theta2: f64, theta3: f64) -> DMatrix<Complex64> {
        rx(theta3) * rz(theta2) * rx(theta1)
    }

    /// Target of [`super::wire_pattern`].
    pub fn wire(angles: &[f64]) -> DMatrix<Complex64> {
        angles.iter().fold(identity(), |u, &a| hadamard() * phase(-a) * u)
    }
}
