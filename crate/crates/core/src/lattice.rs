//! Array geometry and the Bloch modes of the photon-hopping Hamiltonian.
//!
//! The array is periodic in both directions, so the hopping term is
//! diagonalized by the unitary lattice Fourier transform and mode `(l, k)`
//! has frequency `delta + 2J cos(2 pi l / M) + 2J cos(2 pi k / N)`.
//! All frequencies and times are measured in units of the coupling `g`.

use std::f64::consts::PI;

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    /// Rows.
    pub m: usize,
    /// Columns.
    pub n: usize,
    /// Qubit-cavity coupling.
    pub g: f64,
    /// Photon tunneling rate between neighboring cavities.
    pub j: f64,
    /// Cavity-qubit detuning.
    pub delta: f64,
}

impl LatticeConfig {
    /// Config with `g = 1`.
    pub fn new(m: usize, n: usize, j: f64, delta: f64) -> Result<Self> {
        Self::with_coupling(m, n, 1.0, j, delta)
    }

    pub fn with_coupling(m: usize, n: usize, g: f64, j: f64, delta: f64) -> Result<Self> {
        let cfg = LatticeConfig { m, n, g, j, delta };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The 19x19, J = 0.1g, delta = 0 array used for the phase figures.
    pub fn reference() -> Self {
        LatticeConfig { m: 19, n: 19, g: 1.0, j: 0.1, delta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return domain(format!("lattice dimensions must be positive, got {}x{}", self.m, self.n));
        }
        // g = 0 is admitted so that the decoupled limit can be exercised.
        if !(self.g.is_finite() && self.g >= 0.0) {
            return domain(format!("coupling g must be finite and non-negative, got {}", self.g));
        }
        if !(self.j.is_finite() && self.j >= 0.0) {
            return domain(format!("tunneling J must be finite and non-negative, got {}", self.j));
        }
        if !self.delta.is_finite() {
            return domain("detuning must be finite");
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.m * self.n
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_dims(mut self, m: usize, n: usize) -> Self {
        self.m = m;
        self.n = n;
        self
    }

    /// Separation used for "nearest neighbour" quantities: one row step,
    /// or one column step on a single-row array.
    pub fn nearest_neighbor(&self) -> (i64, i64) {
        if self.m > 1 { (1, 0) } else { (0, 1) }
    }
}

/// A photon Bloch mode of the array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub l: usize,
    pub k: usize,
    /// Row quasi-momentum `2 pi l / M`.
    pub big_l: f64,
    /// Column quasi-momentum `2 pi k / N`.
    pub big_k: f64,
    pub omega: f64,
}

impl Mode {
    /// Phase `L m + K n` picked up by site `(m, n)`.
    pub fn site_phase(&self, m: usize, n: usize) -> f64 {
        self.big_l * m as f64 + self.big_k * n as f64
    }
}

pub fn mode_frequency(config: &LatticeConfig, l: usize, k: usize) -> Result<f64> {
    Ok(mode(config, l, k)?.omega)
}

pub fn mode(config: &LatticeConfig, l: usize, k: usize) -> Result<Mode> {
    if l >= config.m || k >= config.n {
        return domain(format!(
            "mode index ({l}, {k}) out of range for {}x{} array",
            config.m, config.n
        ));
    }
    let big_l = 2.0 * PI * l as f64 / config.m as f64;
    let big_k = 2.0 * PI * k as f64 / config.n as f64;
    let omega = config.delta + 2.0 * config.j * big_l.cos() + 2.0 * config.j * big_k.cos();
    Ok(Mode { l, k, big_l, big_k, omega })
}

/// All `M * N` modes in row-major `(l, k)` order.
pub fn enumerate_modes(config: &LatticeConfig) -> Vec<Mode> {
    (0..config.m)
        .flat_map(|l| (0..config.n).map(move |k| (l, k)))
        .map(|(l, k)| mode(config, l, k).expect("indices in range"))
        .collect()
}

/// Smallest `|omega|` over the mode set; zero flags an exactly resonant mode.
pub fn min_abs_frequency(config: &LatticeConfig) -> f64 {
    enumerate_modes(config)
        .iter()
        .map(|md| md.omega.abs())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, n: usize, j: f64, delta: f64) -> LatticeConfig {
        LatticeConfig::new(m, n, j, delta).unwrap()
    }

    #[test]
    fn zero_mode_frequency() {
        let c = cfg(19, 19, 0.1, 0.0);
        assert!((mode_frequency(&c, 0, 0).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn no_tunneling_gives_flat_band() {
        let c = cfg(4, 7, 0.0, 5.0);
        assert!(enumerate_modes(&c).iter().all(|md| md.omega == 5.0));
    }

    #[test]
    fn generic_mode_value() {
        let c = cfg(19, 19, 0.1, 0.0);
        let expect = 0.2 * ((10.0 * PI / 19.0).cos() + (14.0 * PI / 19.0).cos());
        let got = mode_frequency(&c, 5, 7).unwrap();
        assert!((got - expect).abs() < 1e-15);
        assert!((got - (-0.152)).abs() < 1e-3);
    }

    #[test]
    fn out_of_range_index() {
        let c = cfg(3, 3, 0.1, 0.0);
        assert!(mode_frequency(&c, 3, 0).is_err());
        assert!(mode_frequency(&c, 0, 5).is_err());
    }

    #[test]
    fn single_site_and_two_site_spectra() {
        let j = 0.3;
        let one = enumerate_modes(&cfg(1, 1, j, 0.7));
        assert_eq!(one.len(), 1);
        assert!((one[0].omega - (0.7 + 4.0 * j)).abs() < 1e-15);

        let two = enumerate_modes(&cfg(2, 1, j, 0.0));
        assert!((two[0].omega - 4.0 * j).abs() < 1e-15);
        assert!(two[1].omega.abs() < 1e-15);
    }

    #[test]
    fn row_major_order_and_count() {
        let modes = enumerate_modes(&cfg(19, 19, 0.1, 0.0));
        assert_eq!(modes.len(), 361);
        for (i, md) in modes.iter().enumerate() {
            assert_eq!((md.l, md.k), (i / 19, i % 19));
        }
        assert!(modes.iter().all(|md| md.omega != 0.0));
    }

    #[test]
    fn min_abs_frequency_cases() {
        assert!(min_abs_frequency(&cfg(2, 2, 0.1, 0.0)) < 1e-15);
        assert!(min_abs_frequency(&cfg(19, 19, 0.1, 0.0)) > 0.0);
        assert_eq!(min_abs_frequency(&cfg(3, 5, 0.0, 3.0)), 3.0);
    }

    #[test]
    fn spectrum_inversion_symmetry() {
        let c = cfg(6, 5, 0.37, 0.2);
        for md in enumerate_modes(&c) {
            let partner = mode(&c, (c.m - md.l) % c.m, (c.n - md.k) % c.n).unwrap();
            assert!((partner.omega - md.omega).abs() < 1e-14);
        }
    }

    #[test]
    fn band_sum_vanishes() {
        for (m, n) in [(2, 2), (3, 7), (19, 19), (4, 9)] {
            let c = cfg(m, n, 0.25, 1.3);
            let total: f64 = enumerate_modes(&c).iter().map(|md| md.omega - c.delta).sum();
            assert!(total.abs() < 1e-12, "{m}x{n}: {total}");
        }
    }

    #[test]
    fn even_dimension_has_exact_zero_mode() {
        for (m, n) in [(2, 3), (3, 4), (4, 4), (6, 5)] {
            assert!(min_abs_frequency(&cfg(m, n, 0.1, 0.0)) < 1e-15, "{m}x{n}");
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(LatticeConfig::new(0, 3, 0.1, 0.0).is_err());
        assert!(LatticeConfig::new(3, 3, -0.1, 0.0).is_err());
        assert!(LatticeConfig::with_coupling(3, 3, f64::NAN, 0.1, 0.0).is_err());
    }
}
