//! Closed-form displacements and geometric phases of the driven array.
//!
//! A single interaction block of length `tau` displaces mode `(L, K)` by
//! `beta_{L,K} J_X` and imprints the phase `gamma_{L,K} J_X^dag J_X`, where
//! `J_X = sum_sites sigma_x e^{i(Lm + Kn)}`. The spin-echoed pair of blocks
//! cancels every displacement and doubles the phase, which leaves the
//! pairwise coupling
//!
//! ```text
//! Gamma(dm, dn) = sum_modes 4 gamma_{L,K} cos(L dm + K dn)
//! ```
//!
//! as the coefficient of `sigma_x sigma_x` between two sites at separation
//! `(dm, dn)`. With `x = omega tau` the per-mode phase is
//! `g^2 tau^2 (x - sin x) / (M N x^2)`, which is what integrating the
//! interaction Hamiltonian gives (see the `oracle` module).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::lattice::{enumerate_modes, min_abs_frequency, LatticeConfig, Mode};
use crate::numeric::{compensated_sum, x_minus_sin_over_x2, CompensatedSum};

/// Below this `|omega|` a mode is treated as exactly resonant.
pub const ZERO_MODE_TOL: f64 = 1e-12;

/// Gate-time search window `(0, GATE_WINDOW / g]`.
pub const GATE_WINDOW: f64 = 20.0;
/// Scan step of the gate-time search, in units of `1/g`.
pub const GATE_GRID_STEP: f64 = 0.01;
/// Relative bracket width at which bisection stops.
pub const GATE_BISECTION_RTOL: f64 = 1e-10;

/// The cluster condition `4 Gamma = pi`.
pub const CLUSTER_PHASE: f64 = PI / 4.0;

/// Mode displacement per unit of `J_X` after an interaction block of length `tau`.
pub fn beta(config: &LatticeConfig, mode: &Mode, tau: f64) -> Complex64 {
    let norm = (config.sites() as f64).sqrt();
    if mode.omega.abs() < ZERO_MODE_TOL {
        return Complex64::new(0.0, -config.g * tau / norm);
    }
    let phase = Complex64::from_polar(1.0, mode.omega * tau);
    (Complex64::new(1.0, 0.0) - phase) * (config.g / (norm * mode.omega))
}

/// Geometric phase per unit of `J_X^dag J_X` imprinted by one block on one mode.
pub fn gamma_mode(config: &LatticeConfig, mode: &Mode, tau: f64) -> f64 {
    let g2 = config.g * config.g;
    g2 * tau * tau * x_minus_sin_over_x2(mode.omega * tau) / config.sites() as f64
}

pub fn gamma_total(config: &LatticeConfig, tau: f64) -> f64 {
    compensated_sum(enumerate_modes(config).iter().map(|md| gamma_mode(config, md, tau)))
}

/// Reduce a separation to the canonical range `(-M/2, M/2] x (-N/2, N/2]`.
pub fn canonical_separation(config: &LatticeConfig, dm: i64, dn: i64) -> (i64, i64) {
    fn reduce(d: i64, size: usize) -> i64 {
        let size = size as i64;
        let r = d.rem_euclid(size);
        if 2 * r > size { r - size } else { r }
    }
    (reduce(dm, config.m), reduce(dn, config.n))
}

/// Pairwise `sigma_x sigma_x` coupling between sites separated by `(dm, dn)`.
pub fn pairwise_phase(config: &LatticeConfig, tau: f64, dm: i64, dn: i64) -> Result<f64> {
    if canonical_separation(config, dm, dn) == (0, 0) {
        return domain(format!(
            "separation ({dm}, {dn}) maps a site onto itself on a {}x{} array",
            config.m, config.n
        ));
    }
    let kernel = PairKernel::new(config, dm, dn);
    Ok(kernel.eval(config, tau))
}

/// Mode frequencies and the cosine weights of one separation, reused across
/// many interaction times.
struct PairKernel {
    omegas: Vec<f64>,
    weights: Vec<f64>,
}

impl PairKernel {
    fn new(config: &LatticeConfig, dm: i64, dn: i64) -> Self {
        let modes = enumerate_modes(config);
        PairKernel {
            omegas: modes.iter().map(|md| md.omega).collect(),
            weights: modes
                .iter()
                .map(|md| (md.big_l * dm as f64 + md.big_k * dn as f64).cos())
                .collect(),
        }
    }

    fn eval(&self, config: &LatticeConfig, tau: f64) -> f64 {
        let prefactor = 4.0 * config.g * config.g * tau * tau / config.sites() as f64;
        let sum: CompensatedSum = self
            .omegas
            .iter()
            .zip(&self.weights)
            .map(|(w, c)| x_minus_sin_over_x2(w * tau) * c)
            .collect();
        prefactor * sum.value()
    }
}

/// Pairwise couplings over every canonical separation at one interaction time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftTable {
    pub tau: f64,
    pub config: LatticeConfig,
    entries: BTreeMap<(i64, i64), f64>,
    /// Set when the array has an exactly resonant mode (even size, `delta = 0`);
    /// that mode then enters through its continuity limit.
    pub zero_mode: bool,
}

impl PhaseShiftTable {
    /// Table with every entry set to `gamma`; used for idealized evolutions.
    pub fn uniform(config: &LatticeConfig, tau: f64, gamma: f64) -> Self {
        let entries = canonical_separations(config).into_iter().map(|s| (s, gamma)).collect();
        PhaseShiftTable { tau, config: *config, entries, zero_mode: false }
    }

    /// Coupling at any separation (reduced modulo the lattice); `None` for `(0, 0)`.
    pub fn get(&self, dm: i64, dn: i64) -> Option<f64> {
        self.entries.get(&canonical_separation(&self.config, dm, dn)).copied()
    }

    pub fn set(&mut self, dm: i64, dn: i64, gamma: f64) {
        let key = canonical_separation(&self.config, dm, dn);
        if key != (0, 0) {
            self.entries.insert(key, gamma);
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = ((i64, i64), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Largest `|Gamma|` over separations with `|dm| + |dn| >= 2`.
    pub fn max_beyond_nearest(&self) -> f64 {
        self.entries()
            .filter(|((dm, dn), _)| dm.abs() + dn.abs() >= 2)
            .map(|(_, g)| g.abs())
            .fold(0.0, f64::max)
    }

    /// Separation with the largest `|Gamma|` (first in key order on ties).
    pub fn argmax(&self) -> Option<(i64, i64)> {
        let mut best: Option<((i64, i64), f64)> = None;
        for (key, g) in self.entries() {
            if best.is_none_or(|(_, b)| g.abs() > b) {
                best = Some((key, g.abs()));
            }
        }
        best.map(|(k, _)| k)
    }
}

/// Canonical separations excluding `(0, 0)`, in key order.
pub fn canonical_separations(config: &LatticeConfig) -> Vec<(i64, i64)> {
    let mut seps: Vec<(i64, i64)> = (0..config.m as i64)
        .flat_map(|dm| (0..config.n as i64).map(move |dn| (dm, dn)))
        .map(|(dm, dn)| canonical_separation(config, dm, dn))
        .filter(|&s| s != (0, 0))
        .collect();
    seps.sort_unstable();
    seps.dedup();
    seps
}

pub fn build_phase_table(config: &LatticeConfig, tau: f64) -> PhaseShiftTable {
    let entries = canonical_separations(config)
        .into_par_iter()
        .map(|(dm, dn)| ((dm, dn), PairKernel::new(config, dm, dn).eval(config, tau)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    PhaseShiftTable {
        tau,
        config: *config,
        entries,
        zero_mode: min_abs_frequency(config) < ZERO_MODE_TOL,
    }
}

/// Smallest `tau` in `(0, 20/g]` at which the nearest-neighbour coupling
/// reaches `target`; grid scan at `0.01/g` followed by bisection.
pub fn solve_gate_time(config: &LatticeConfig, target: f64) -> Result<f64> {
    if !(target.is_finite() && target > 0.0) {
        return domain(format!("target phase must be positive, got {target}"));
    }
    let (dm, dn) = config.nearest_neighbor();
    if canonical_separation(config, dm, dn) == (0, 0) {
        return domain("a single-site array has no nearest neighbour");
    }
    let kernel = PairKernel::new(config, dm, dn);
    let f = |tau: f64| kernel.eval(config, tau) - target;

    let steps = (GATE_WINDOW / GATE_GRID_STEP).round() as usize;
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    let mut achieved_max = f64::NEG_INFINITY;
    for i in 1..=steps {
        let hi = i as f64 * GATE_GRID_STEP;
        let f_hi = f(hi);
        achieved_max = achieved_max.max(f_hi + target);
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_lo < 0.0 && f_hi > 0.0 || f_lo > 0.0 && f_hi < 0.0 {
            return Ok(bisect(&f, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(Error::NotFound { target, window: GATE_WINDOW / config.g, achieved_max })
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > GATE_BISECTION_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaRow {
    pub delta: f64,
    pub gamma_nn: f64,
}

/// Nearest-neighbour coupling versus detuning at fixed `tau`.
pub fn sweep_delta(template: &LatticeConfig, tau: f64, delta_grid: &[f64]) -> Result<Vec<DeltaRow>> {
    if delta_grid.is_empty() {
        return domain("detuning grid is empty");
    }
    let (dm, dn) = template.nearest_neighbor();
    delta_grid
        .par_iter()
        .map(|&delta| {
            let cfg = template.with_delta(delta);
            cfg.validate()?;
            Ok(DeltaRow { delta, gamma_nn: pairwise_phase(&cfg, tau, dm, dn)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauRow {
    pub tau: f64,
    /// One entry per requested separation, in request order.
    pub gammas: Vec<f64>,
}

/// Couplings at several separations versus interaction time.
pub fn sweep_tau(config: &LatticeConfig, tau_grid: &[f64], separations: &[(i64, i64)]) -> Result<Vec<TauRow>> {
    if tau_grid.is_empty() {
        return domain("interaction-time grid is empty");
    }
    if separations.is_empty() {
        return domain("separation list is empty");
    }
    if let Some(&(dm, dn)) = separations.iter().find(|&&(dm, dn)| canonical_separation(config, dm, dn) == (0, 0)) {
        return domain(format!("separation ({dm}, {dn}) maps a site onto itself"));
    }
    let kernels: Vec<PairKernel> = separations.iter().map(|&(dm, dn)| PairKernel::new(config, dm, dn)).collect();
    Ok(tau_grid
        .par_iter()
        .map(|&tau| TauRow { tau, gammas: kernels.iter().map(|k| k.eval(config, tau)).collect() })
        .collect())
}

/// Physical parameter set of a candidate hardware platform.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwarePreset {
    pub name: &'static str,
    /// Coupling as an angular frequency (s^-1).
    pub g_phys: f64,
    /// Photon tunneling rate (s^-1); informational.
    pub j_phys: f64,
    /// Photon lifetime (s).
    pub t_cavity: f64,
    /// Qubit dephasing / relaxation time (s).
    pub t_qubit: f64,
    /// Classical drive Rabi frequency (s^-1), when known.
    pub omega: Option<f64>,
}

impl HardwarePreset {
    /// Cooper-pair boxes in circuit cavities.
    pub fn cpb() -> Self {
        HardwarePreset {
            name: "cpb",
            g_phys: 2.0 * PI * 50e6,
            j_phys: 2.0 * PI * 100e6,
            t_cavity: 20e-6,
            t_qubit: 1e-6,
            omega: None,
        }
    }

    /// Double quantum dots in circuit cavities.
    pub fn qdot() -> Self {
        HardwarePreset {
            name: "qdot",
            g_phys: 2.0 * PI * 125e6,
            j_phys: 2.0 * PI * 100e6,
            t_cavity: 50e-6,
            t_qubit: 1e-6,
            omega: None,
        }
    }

    /// Raman-coupled atoms in toroidal micro-cavities (effective coupling).
    pub fn toroid() -> Self {
        HardwarePreset {
            name: "toroid",
            g_phys: 1e8,
            j_phys: 1.6e6,
            t_cavity: 25e-6,
            t_qubit: 6e-6,
            omega: None,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "cpb" => Some(Self::cpb()),
            "qdot" => Some(Self::qdot()),
            "toroid" => Some(Self::toroid()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !(positive(self.g_phys) && positive(self.t_cavity) && positive(self.t_qubit)) {
            return domain(format!("preset {}: coupling and lifetimes must be positive", self.name));
        }
        if !(self.j_phys.is_finite() && self.j_phys >= 0.0) {
            return domain(format!("preset {}: tunneling must be non-negative", self.name));
        }
        if let Some(o) = self.omega {
            if !positive(o) {
                return domain(format!("preset {}: drive amplitude must be positive", self.name));
            }
        }
        Ok(())
    }
}

/// Minimum `2 Omega / g` accepted as strong driving.
pub const STRONG_DRIVING_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub preset: &'static str,
    /// Gate time in units of `1/g`.
    pub gate_time_g: f64,
    /// Gate time in seconds (`gate_time_g / g_phys`).
    pub gate_time: f64,
    pub ratio_cavity: f64,
    pub ratio_qubit: f64,
    /// `2 Omega / g >= 10`, when a drive amplitude is known.
    pub strong_driving: Option<bool>,
}

/// Gate time of `config` (dimensionless, at `4 Gamma = pi`) converted with
/// the preset's coupling and compared with its coherence times.
pub fn feasibility_report(preset: &HardwarePreset, config: &LatticeConfig) -> Result<FeasibilityReport> {
    preset.validate()?;
    let gate_time_g = solve_gate_time(config, CLUSTER_PHASE)?;
    let gate_time = gate_time_g / preset.g_phys;
    Ok(FeasibilityReport {
        preset: preset.name,
        gate_time_g,
        gate_time,
        ratio_cavity: gate_time / preset.t_cavity,
        ratio_qubit: gate_time / preset.t_qubit,
        strong_driving: preset.omega.map(|o| 2.0 * o / preset.g_phys >= STRONG_DRIVING_RATIO),
    })
}
