//! Brute-force validation on truncated Fock spaces.
//!
//! The driven interaction Hamiltonian
//!
//! ```text
//! H(t) = (1/sqrt(MN)) sum_sites sigma_x sum_modes [g e^{-i(omega t + Lm + Kn)} a + h.c.]
//! ```
//!
//! is integrated numerically with every mode cut at `n_max` photons. No
//! closed-form displacement or phase enters here; the results are compared
//! against the `geomphase` formulas by the tests and the CLI.
//!
//! `H(t)` commutes with every `sigma_x`, so in the `sigma_x` eigenbasis of the
//! qubits it is block diagonal and each block is a field Hamiltonian with
//! c-number couplings. The propagator is integrated block by block; the
//! dense matrix of [`build_hamiltonian`] (computational basis) is the
//! reference it is checked against.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::lattice::{enumerate_modes, LatticeConfig, Mode};
use crate::numeric::hadamard_all;

pub const MAX_ORACLE_SITES: usize = 4;
/// Cap on `2^(MN) (n_max + 1)^(MN)`.
pub const MAX_FOCK_DIM: usize = 200_000;
/// Cap on the dimension of an explicitly built Hamiltonian matrix.
pub const MAX_DENSE_DIM: usize = 4096;
pub const DEFAULT_N_MAX: usize = 4;
/// Residual field excitation above which no qubit-only phase is extracted.
pub const EXTRACTION_RESIDUAL_LIMIT: f64 = 1e-6;
/// Step budget per interaction block.
pub const MAX_STEPS: usize = 1 << 22;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Qubits times truncated modes of a tiny array.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub config: LatticeConfig,
    pub n_max: usize,
    modes: Vec<Mode>,
    qubit_dim: usize,
    field_dim: usize,
}

impl FockSpace {
    pub fn new(config: &LatticeConfig, n_max: usize) -> Result<Self> {
        config.validate()?;
        let sites = config.sites();
        if sites > MAX_ORACLE_SITES {
            return Err(Error::CapExceeded { what: "oracle array sites", size: sites, cap: MAX_ORACLE_SITES });
        }
        if n_max == 0 {
            return domain("n_max must be at least 1");
        }
        let field_dim = (n_max + 1).checked_pow(sites as u32).unwrap_or(usize::MAX);
        let qubit_dim = 1usize << sites;
        let dim = field_dim.saturating_mul(qubit_dim);
        if dim > MAX_FOCK_DIM {
            return Err(Error::CapExceeded { what: "Fock space dimension", size: dim, cap: MAX_FOCK_DIM });
        }
        Ok(FockSpace { config: *config, n_max, modes: enumerate_modes(config), qubit_dim, field_dim })
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim * self.field_dim
    }

    pub fn qubit_dim(&self) -> usize {
        self.qubit_dim
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Stride of mode `md` in the mixed-radix field index.
    fn stride(&self, md: usize) -> usize {
        (self.n_max + 1).pow(md as u32)
    }

    fn site_coords(&self, site: usize) -> (usize, usize) {
        (site / self.config.n, site % self.config.n)
    }

    fn coupling_norm(&self) -> f64 {
        self.config.g / (self.config.sites() as f64).sqrt()
    }

    /// `C_md(x) = (g / sqrt(MN)) sum_s x_s e^{-i phi_s}` for a `sigma_x`
    /// configuration (bit set = eigenvalue -1).
    fn block_couplings(&self, xconf: usize) -> Vec<Complex64> {
        self.modes
            .iter()
            .map(|md| {
                let sum: Complex64 = (0..self.config.sites())
                    .map(|s| {
                        let (m, n) = self.site_coords(s);
                        let sign = if (xconf >> s) & 1 == 0 { 1.0 } else { -1.0 };
                        Complex64::from_polar(sign, -md.site_phase(m, n))
                    })
                    .sum();
                sum * self.coupling_norm()
            })
            .collect()
    }

    /// Generous bound on the generator norm, used to seed the step count.
    fn rate_bound(&self) -> f64 {
        let w = self.modes.iter().map(|md| md.omega.abs()).fold(0.0, f64::max);
        let c = self.config.g * (self.config.sites() as f64).sqrt() * (self.n_max as f64).sqrt();
        w + 2.0 * c * self.modes.len() as f64
    }
}

/// `H(t)` as a dense matrix; basis index `qubits * field_dim + field`, qubit
/// bit `s` set meaning `|down>` on site `s`.
pub fn build_hamiltonian(config: &LatticeConfig, t: f64, n_max: usize) -> Result<DMatrix<Complex64>> {
    let space = FockSpace::new(config, n_max)?;
    let dim = space.dim();
    if dim > MAX_DENSE_DIM {
        return Err(Error::CapExceeded { what: "dense Hamiltonian dimension", size: dim, cap: MAX_DENSE_DIM });
    }
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let fd = space.field_dim;
    for s in 0..config.sites() {
        let (m, n) = space.site_coords(s);
        for (mi, md) in space.modes.iter().enumerate() {
            let c = Complex64::from_polar(space.coupling_norm(), -(md.omega * t + md.site_phase(m, n)));
            let stride = space.stride(mi);
            for q in 0..space.qubit_dim {
                let q2 = q ^ (1 << s);
                for f in 0..fd {
                    let occ = (f / stride) % (n_max + 1);
                    if occ > 0 {
                        // <q2, f - stride| sigma_x a |q, f> = sqrt(occ)
                        let amp = c * (occ as f64).sqrt();
                        h[(q2 * fd + f - stride, q * fd + f)] += amp;
                        h[(q * fd + f, q2 * fd + f - stride)] += amp.conj();
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Joint qubit-field state. Qubits are held in the `sigma_x` eigenbasis
/// (bit set = eigenvalue -1); index `xconf * field_dim + field`.
#[derive(Debug, Clone)]
pub struct FockRegister {
    space: FockSpace,
    amps: Vec<Complex64>,
}

impl FockRegister {
    /// Field vacuum times a qubit state given in the computational basis.
    pub fn vacuum(space: &FockSpace, qubits_z: &[Complex64]) -> Result<Self> {
        if qubits_z.len() != space.qubit_dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{} qubit amplitudes", space.qubit_dim),
                found: qubits_z.len().to_string(),
            });
        }
        let mut x = qubits_z.to_vec();
        hadamard_all(&mut x);
        let mut amps = vec![ZERO; space.dim()];
        for (xc, a) in x.into_iter().enumerate() {
            amps[xc * space.field_dim] = a;
        }
        Ok(FockRegister { space: space.clone(), amps })
    }

    /// Field vacuum times a single `sigma_x` configuration.
    pub fn vacuum_x(space: &FockSpace, xconf: usize) -> Self {
        let mut amps = vec![ZERO; space.dim()];
        amps[xconf * space.field_dim] = Complex64::new(1.0, 0.0);
        FockRegister { space: space.clone(), amps }
    }

    /// From amplitudes in the computational basis of [`build_hamiltonian`].
    pub fn from_z_basis(space: &FockSpace, amps_z: &[Complex64]) -> Result<Self> {
        if amps_z.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim().to_string(), found: amps_z.len().to_string() });
        }
        let mut amps = amps_z.to_vec();
        qubit_hadamard(&mut amps, space.qubit_dim, space.field_dim);
        Ok(FockRegister { space: space.clone(), amps })
    }

    pub fn to_z_basis(&self) -> Vec<Complex64> {
        let mut amps = self.amps.clone();
        qubit_hadamard(&mut amps, self.space.qubit_dim, self.space.field_dim);
        amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Population outside the field vacuum.
    pub fn field_excitation(&self) -> f64 {
        let vac: f64 = (0..self.space.qubit_dim).map(|x| self.amps[x * self.space.field_dim].norm_sqr()).sum();
        (self.norm().powi(2) - vac).max(0.0)
    }

    /// `S_z = prod sigma_z`: flips every `sigma_x` eigenvalue.
    pub fn apply_sz(&mut self) {
        let fd = self.space.field_dim;
        let all = self.space.qubit_dim - 1;
        let old = self.amps.clone();
        for xc in 0..self.space.qubit_dim {
            let dst = (xc ^ all) * fd;
            self.amps[dst..dst + fd].copy_from_slice(&old[xc * fd..xc * fd + fd]);
        }
    }

    /// Integrate `H(t)` over `[t0, t0 + tau]` with `steps` RK4 steps.
    pub fn propagate(&mut self, t0: f64, tau: f64, steps: usize) {
        let fd = self.space.field_dim;
        let space = &self.space;
        self.amps.par_chunks_mut(fd).enumerate().for_each(|(xc, block)| {
            rk4_block(space, xc, block, t0, tau, steps);
        });
    }
}

fn qubit_hadamard(amps: &mut [Complex64], qubit_dim: usize, field_dim: usize) {
    let mut column = vec![ZERO; qubit_dim];
    for f in 0..field_dim {
        for q in 0..qubit_dim {
            column[q] = amps[q * field_dim + f];
        }
        hadamard_all(&mut column);
        for q in 0..qubit_dim {
            amps[q * field_dim + f] = column[q];
        }
    }
}

/// Couplings below this fraction of `g` are exact cancellations up to
/// rounding and are dropped from the block generator.
const COUPLING_FLOOR: f64 = 1e-14;

/// Field generator of one `sigma_x` block.
struct BlockGenerator {
    /// `(omega, C, stride)` of every coupled mode.
    terms: Vec<(f64, Complex64, usize)>,
    levels: usize,
    sqrt: Vec<f64>,
}

impl BlockGenerator {
    fn new(space: &FockSpace, xconf: usize) -> Self {
        let floor = COUPLING_FLOOR * space.config.g.max(f64::MIN_POSITIVE);
        let terms = space
            .modes
            .iter()
            .zip(space.block_couplings(xconf))
            .enumerate()
            .filter(|(_, (_, c))| c.norm() > floor)
            .map(|(mi, (md, c))| (md.omega, c, space.stride(mi)))
            .collect();
        let levels = space.n_max + 1;
        BlockGenerator { terms, levels, sqrt: (0..=levels).map(|k| (k as f64).sqrt()).collect() }
    }

    /// `out = -i H_x(t) y`.
    fn apply(&self, t: f64, y: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        let n_max = self.levels - 1;
        for &(omega, cm, stride) in &self.terms {
            // -i c a - i c* a^dag
            let c = -I * cm * Complex64::from_polar(1.0, -omega * t);
            let cc = -I * (cm * Complex64::from_polar(1.0, -omega * t)).conj();
            let span = stride * self.levels;
            for base in (0..y.len()).step_by(span) {
                for occ in 0..self.levels {
                    let row = base + occ * stride;
                    for inner in 0..stride {
                        let f = row + inner;
                        let mut acc = out[f];
                        if occ < n_max {
                            acc += c * (self.sqrt[occ + 1] * y[f + stride]);
                        }
                        if occ > 0 {
                            acc += cc * (self.sqrt[occ] * y[f - stride]);
                        }
                        out[f] = acc;
                    }
                }
            }
        }
    }
}

fn rk4_block(space: &FockSpace, xconf: usize, y: &mut [Complex64], t0: f64, tau: f64, steps: usize) {
    let generator = BlockGenerator::new(space, xconf);
    if steps == 0 || tau == 0.0 || generator.terms.is_empty() {
        return;
    }
    let len = y.len();
    let h = tau / steps as f64;
    let mut k1 = vec![ZERO; len];
    let mut k2 = vec![ZERO; len];
    let mut k3 = vec![ZERO; len];
    let mut k4 = vec![ZERO; len];
    let mut tmp = vec![ZERO; len];
    for step in 0..steps {
        let t = t0 + step as f64 * h;
        generator.apply(t, y, &mut k1);
        for i in 0..len {
            tmp[i] = y[i] + k1[i] * (h / 2.0);
        }
        generator.apply(t + h / 2.0, &tmp, &mut k2);
        for i in 0..len {
            tmp[i] = y[i] + k2[i] * (h / 2.0);
        }
        generator.apply(t + h / 2.0, &tmp, &mut k3);
        for i in 0..len {
            tmp[i] = y[i] + k3[i] * h;
        }
        generator.apply(t + h, &tmp, &mut k4);
        for i in 0..len {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

/// Images of `|vac> (x) |x>` for every `sigma_x` configuration `x`.
///
/// Each block is invariant, so this is the full action of the propagator on
/// the field-vacuum subspace.
#[derive(Debug, Clone)]
pub struct VacuumPropagator {
    pub space: FockSpace,
    /// Final field state of each block, indexed by `sigma_x` configuration.
    pub blocks: Vec<Vec<Complex64>>,
    pub steps: usize,
    pub error_estimate: f64,
    /// `max_x | ||U|vac, x>|| - 1 |`.
    pub unitarity_defect: f64,
}

impl VacuumPropagator {
    /// `<vac, x|U|vac, x>`.
    pub fn vacuum_amplitude(&self, xconf: usize) -> Complex64 {
        self.blocks[xconf][0]
    }

    /// `U (|vac> (x) |psi>)` for a qubit state in the computational basis.
    pub fn apply(&self, qubits_z: &[Complex64]) -> Result<FockRegister> {
        let start = FockRegister::vacuum(&self.space, qubits_z)?;
        let fd = self.space.field_dim;
        let mut amps = vec![ZERO; self.space.dim()];
        for (xc, block) in self.blocks.iter().enumerate() {
            let a = start.amps[xc * fd];
            for (f, b) in block.iter().enumerate() {
                amps[xc * fd + f] = a * b;
            }
        }
        Ok(FockRegister { space: self.space.clone(), amps })
    }

    /// Largest population left outside the vacuum by any qubit input.
    pub fn residual_excitation(&self) -> f64 {
        self.blocks.iter().map(|b| (1.0 - b[0].norm_sqr()).max(0.0)).fold(0.0, f64::max)
    }
}

/// Integrator run: final field state of every block under `schedule`,
/// doubling the step count until the Richardson estimate and the norm
/// defect are below `tol`.
fn converge(
    space: &FockSpace,
    tau: f64,
    tol: f64,
    schedule: impl Fn(usize, &mut [Complex64], usize) + Sync,
) -> Result<(Vec<Vec<Complex64>>, usize, f64, f64)> {
    if !(tol.is_finite() && tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let run = |steps: usize| -> Vec<Vec<Complex64>> {
        (0..space.qubit_dim)
            .into_par_iter()
            .map(|xc| {
                let mut block = vec![ZERO; space.field_dim];
                block[0] = Complex64::new(1.0, 0.0);
                schedule(xc, &mut block, steps);
                block
            })
            .collect()
    };
    let mut steps = ((4.0 * space.rate_bound() * tau).ceil() as usize).clamp(16, MAX_STEPS / 2);
    let mut coarse = run(steps);
    loop {
        let fine_steps = steps * 2;
        let fine = run(fine_steps);
        let err = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt() / 15.0)
            .fold(0.0, f64::max);
        let defect = fine
            .iter()
            .map(|b| (b.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        if err < tol && defect < tol {
            return Ok((fine, fine_steps, err, defect));
        }
        if fine_steps * 2 > MAX_STEPS {
            return Err(Error::NonConvergence { max_steps: MAX_STEPS, error_estimate: err.max(defect) });
        }
        steps = fine_steps;
        coarse = fine;
    }
}

/// Propagator of one interaction block `[0, tau]` on the vacuum subspace.
pub fn evolve(config: &LatticeConfig, tau: f64, n_max: usize, tolerance: f64) -> Result<VacuumPropagator> {
    if !(tau.is_finite() && tau >= 0.0) {
        return domain(format!("interaction time must be non-negative, got {tau}"));
    }
    let space = FockSpace::new(config, n_max)?;
    let (blocks, steps, error_estimate, unitarity_defect) = converge(&space, tau, tolerance, |xc, block, steps| {
        rk4_block(&space, xc, block, 0.0, tau, steps);
    })?;
    Ok(VacuumPropagator { space, blocks, steps, error_estimate, unitarity_defect })
}

/// Result of the echo sequence `S_z U(tau) S_z U(tau)`.
#[derive(Debug, Clone)]
pub struct EvolutionReport {
    pub propagator: VacuumPropagator,
    /// Drive phases re-zeroed before the second block.
    pub reset_time_origin: bool,
    pub residual_excitation: f64,
    /// `(site_a, site_b, Gamma_measured)` for every pair of sites, when the
    /// field returned to vacuum.
    pub pair_phases: Vec<(usize, usize, f64)>,
}

impl EvolutionReport {
    pub fn steps(&self) -> usize {
        self.propagator.steps
    }

    pub fn error_estimate(&self) -> f64 {
        self.propagator.error_estimate
    }

    /// Realized qubit operator `<vac| S_z U S_z U |vac>` in the computational basis.
    pub fn vacuum_block(&self) -> DMatrix<Complex64> {
        let dim = self.propagator.space.qubit_dim;
        DMatrix::from_fn(dim, dim, |r, c| {
            // H^n diag(v) H^n with H^n_{zx} = (-1)^{popcount(z & x)} / sqrt(dim)
            let s: Complex64 = (0..dim)
                .map(|x| {
                    let sign = if ((r & x).count_ones() + (c & x).count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                    self.propagator.vacuum_amplitude(x) * sign
                })
                .sum();
            s / dim as f64
        })
    }
}

/// Spin-echo sequence `S_z U(tau) S_z U(tau)` integrated from the interaction
/// Hamiltonian, with the drive phases reset at the start of each block.
pub fn echo_evolve(config: &LatticeConfig, tau: f64, n_max: usize, tolerance: f64) -> Result<EvolutionReport> {
    echo_evolve_with(config, tau, n_max, tolerance, true)
}

/// Echo sequence; with `reset_time_origin = false` the second block continues
/// on `[tau, 2 tau]` instead (experimental comparison).
pub fn echo_evolve_with(
    config: &LatticeConfig,
    tau: f64,
    n_max: usize,
    tolerance: f64,
    reset_time_origin: bool,
) -> Result<EvolutionReport> {
    if !(tau.is_finite() && tau >= 0.0) {
        return domain(format!("interaction time must be non-negative, got {tau}"));
    }
    let space = FockSpace::new(config, n_max)?;
    let second_start = if reset_time_origin { 0.0 } else { tau };
    let flip = space.qubit_dim - 1;
    // S_z moves block x to its complement for the second interaction and back
    let (blocks, steps, error_estimate, unitarity_defect) = converge(&space, tau, tolerance, |xc, block, steps| {
        rk4_block(&space, xc, block, 0.0, tau, steps);
        rk4_block(&space, xc ^ flip, block, second_start, tau, steps);
    })?;
    let propagator = VacuumPropagator { space, blocks, steps, error_estimate, unitarity_defect };
    let residual_excitation = propagator.residual_excitation();
    let sites = config.sites();
    let pair_phases = if residual_excitation <= EXTRACTION_RESIDUAL_LIMIT {
        (0..sites)
            .flat_map(|a| (a + 1..sites).map(move |b| (a, b)))
            .map(|(a, b)| (a, b, pair_phase_from(&propagator, a, b)))
            .collect()
    } else {
        Vec::new()
    };
    Ok(EvolutionReport { propagator, reset_time_origin, residual_excitation, pair_phases })
}

fn pair_phase_from(prop: &VacuumPropagator, a: usize, b: usize) -> f64 {
    let v = |xa: usize, xb: usize| prop.vacuum_amplitude((xa << a) | (xb << b));
    let z = v(0, 0) * v(1, 1) * v(0, 1).conj() * v(1, 0).conj();
    z.arg() / 4.0
}

/// `Gamma_ab = (phi(++) + phi(--) - phi(+-) - phi(-+)) / 4` from the echo's
/// vacuum block, all other sites in `|+x>`. The value is the principal one,
/// in `(-pi/4, pi/4]`.
pub fn extract_pair_phase(report: &EvolutionReport, site_a: usize, site_b: usize) -> Result<f64> {
    let sites = report.propagator.space.config.sites();
    if site_a >= sites || site_b >= sites || site_a == site_b {
        return domain(format!("sites ({site_a}, {site_b}) are not a pair of the {sites}-site array"));
    }
    if report.residual_excitation > EXTRACTION_RESIDUAL_LIMIT {
        return Err(Error::InvalidExtraction { residual: report.residual_excitation, limit: EXTRACTION_RESIDUAL_LIMIT });
    }
    Ok(pair_phase_from(&report.propagator, site_a, site_b))
}

/// Difference of two pair phases modulo the `pi/2` ambiguity of extraction.
pub fn phase_difference(measured: f64, analytic: f64) -> f64 {
    let q = std::f64::consts::FRAC_PI_2;
    let d = (measured - analytic).rem_euclid(q);
    if d > q / 2.0 { d - q } else { d }
}

/// Norms of the operator identities behind the echo cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub commutator_sz_jdagj: f64,
    pub anticommutator_sz_j: f64,
    pub anticommutator_sz_jdag: f64,
    pub mutual_commutators: f64,
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn sz_commutes_with_jdagj(&self) -> bool {
        self.commutator_sz_jdagj <= self.tolerance
    }
    pub fn sz_anticommutes_with_j(&self) -> bool {
        self.anticommutator_sz_j <= self.tolerance
    }
    pub fn sz_anticommutes_with_jdag(&self) -> bool {
        self.anticommutator_sz_jdag <= self.tolerance
    }
    pub fn collective_operators_commute(&self) -> bool {
        self.mutual_commutators <= self.tolerance
    }
    pub fn all_hold(&self) -> bool {
        self.sz_commutes_with_jdagj()
            && self.sz_anticommutes_with_j()
            && self.sz_anticommutes_with_jdag()
            && self.collective_operators_commute()
    }
}

pub const IDENTITY_TOL: f64 = 1e-14;

/// Checks `[S_z, J^dag J] = 0`, `{S_z, J} = {S_z, J^dag} = 0` and mutual
/// commutation of the collective operators `J_X^{(L,K)}` on every mode.
pub fn check_identities(m: usize, n: usize) -> Result<IdentityReport> {
    check_identities_with(m, n, None)
}

/// As [`check_identities`], optionally leaving one site out of `S_z`.
pub fn check_identities_with(m: usize, n: usize, skip_site: Option<usize>) -> Result<IdentityReport> {
    let config = LatticeConfig::new(m, n, 0.1, 0.0)?;
    let sites = config.sites();
    if sites > MAX_ORACLE_SITES {
        return Err(Error::CapExceeded { what: "oracle array sites", size: sites, cap: MAX_ORACLE_SITES });
    }
    let dim = 1usize << sites;
    let sx = |s: usize| DMatrix::<Complex64>::from_fn(dim, dim, |r, c| if r == c ^ (1 << s) { Complex64::new(1.0, 0.0) } else { ZERO });
    let sz = DMatrix::<Complex64>::from_fn(dim, dim, |r, c| {
        if r != c {
            return ZERO;
        }
        let flips = (0..sites).filter(|&s| Some(s) != skip_site && (r >> s) & 1 == 1).count();
        Complex64::new(if flips % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    });
    let js: Vec<DMatrix<Complex64>> = enumerate_modes(&config)
        .iter()
        .map(|md| {
            (0..sites).fold(DMatrix::zeros(dim, dim), |acc, s| {
                acc + sx(s) * Complex64::from_polar(1.0, md.site_phase(s / n, s % n))
            })
        })
        .collect();
    let mut report = IdentityReport {
        commutator_sz_jdagj: 0.0,
        anticommutator_sz_j: 0.0,
        anticommutator_sz_jdag: 0.0,
        mutual_commutators: 0.0,
        tolerance: IDENTITY_TOL,
    };
    let max_abs = |m: &DMatrix<Complex64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for (i, j) in js.iter().enumerate() {
        let jd = j.adjoint();
        let jdj = &jd * j;
        report.commutator_sz_jdagj = report.commutator_sz_jdagj.max(max_abs(&(&sz * &jdj - &jdj * &sz)));
        report.anticommutator_sz_j = report.anticommutator_sz_j.max(max_abs(&(&sz * j + j * &sz)));
        report.anticommutator_sz_jdag = report.anticommutator_sz_jdag.max(max_abs(&(&sz * &jd + &jd * &sz)));
        for k in &js[i..] {
            report.mutual_commutators = report
                .mutual_commutators
                .max(max_abs(&(j * k - k * j)))
                .max(max_abs(&(j * k.adjoint() - k.adjoint() * j)));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomphase::{gamma_total, pairwise_phase};
    use std::f64::consts::PI;

    fn cfg(m: usize, n: usize, j: f64, delta: f64) -> LatticeConfig {
        LatticeConfig::new(m, n, j, delta).unwrap()
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        for t in [0.0, 0.37, 2.9] {
            let h = build_hamiltonian(&cfg(1, 2, 0.1, 0.3), t, 3).unwrap();
            assert!((&h - h.adjoint()).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn hamiltonian_vanishes_without_coupling() {
        let c = LatticeConfig::with_coupling(1, 2, 0.0, 0.1, 0.0).unwrap();
        assert!(build_hamiltonian(&c, 1.3, 3).unwrap().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn single_site_hamiltonian() {
        let c = cfg(1, 1, 0.2, 0.5);
        let omega = 0.5 + 0.8;
        let t = 0.7;
        let h = build_hamiltonian(&c, t, 2).unwrap();
        // basis (q, n) -> q * 3 + n; sigma_x (g e^{-i w t} a + h.c.)
        let e = Complex64::from_polar(1.0, -omega * t);
        assert!((h[(3, 1)] - e).norm() < 1e-15);
        assert!((h[(4, 2)] - e * 2f64.sqrt()).norm() < 1e-15);
        assert!((h[(1, 3)] - e.conj()).norm() < 1e-15);
        assert!(h[(0, 1)].norm() == 0.0);
    }

    #[test]
    fn caps() {
        assert!(FockSpace::new(&cfg(1, 5, 0.1, 0.0), 1).is_err());
        assert!(FockSpace::new(&cfg(2, 2, 0.1, 0.0), 12).is_err());
        assert!(build_hamiltonian(&cfg(2, 2, 0.1, 0.0), 0.0, 4).is_err());
    }

    #[test]
    fn zero_time_is_identity() {
        let p = evolve(&cfg(1, 2, 0.1, 0.0), 0.0, 3, 1e-10).unwrap();
        for (x, b) in p.blocks.iter().enumerate() {
            assert_eq!(b[0], Complex64::new(1.0, 0.0), "block {x}");
        }
    }

    /// Dense RK4 on the explicit Hamiltonian matrix, computational basis.
    fn dense_rk4(c: &LatticeConfig, tau: f64, n_max: usize, steps: usize, psi: &[Complex64]) -> Vec<Complex64> {
        let h = tau / steps as f64;
        let mut y = nalgebra::DVector::from_column_slice(psi);
        let f = |t: f64, v: &nalgebra::DVector<Complex64>| build_hamiltonian(c, t, n_max).unwrap() * v * (-I);
        for k in 0..steps {
            let t = k as f64 * h;
            let k1 = f(t, &y);
            let k2 = f(t + h / 2.0, &(&y + &k1 * Complex64::new(h / 2.0, 0.0)));
            let k3 = f(t + h / 2.0, &(&y + &k2 * Complex64::new(h / 2.0, 0.0)));
            let k4 = f(t + h, &(&y + &k3 * Complex64::new(h, 0.0)));
            y += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        }
        y.iter().copied().collect()
    }

    #[test]
    fn block_propagation_matches_dense_matrix_route() {
        let c = cfg(1, 2, 0.15, 0.4);
        let n_max = 3;
        let tau = 1.7;
        let prop = evolve(&c, tau, n_max, 1e-11).unwrap();
        let space = FockSpace::new(&c, n_max).unwrap();
        let qubits = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.48), Complex64::new(0.0, 0.0), Complex64::new(0.64, 0.0)];
        let block_route = prop.apply(&qubits).unwrap().to_z_basis();
        let mut start = vec![ZERO; space.dim()];
        for (q, a) in qubits.iter().enumerate() {
            start[q * space.field_dim()] = *a;
        }
        let dense_route = dense_rk4(&c, tau, n_max, 4000, &start);
        for (a, b) in block_route.iter().zip(&dense_route) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn unitarity_defect_within_tolerance() {
        let p = evolve(&cfg(1, 2, 0.1, 2.0), 2.0, 6, 1e-9).unwrap();
        assert!(p.unitarity_defect < 1e-9);
        assert!(p.error_estimate < 1e-9);
    }

    #[test]
    fn single_mode_closed_loop() {
        // omega tau = 2 pi: the displacement closes and only the phase survives
        let c = LatticeConfig::with_coupling(1, 1, 0.3, 0.1, 0.6).unwrap();
        let tau = 2.0 * PI;
        let p = evolve(&c, tau, 30, 1e-10).unwrap();
        let gamma = gamma_total(&c, tau);
        assert!((gamma - 0.09 * 2.0 * PI).abs() < 1e-12);
        for x in 0..2 {
            let v = p.vacuum_amplitude(x);
            assert!((v.norm_sqr() - 1.0).abs() < 1e-8);
            let d = (v.arg() - gamma + PI).rem_euclid(2.0 * PI) - PI;
            assert!(d.abs() < 1e-7, "{} vs {gamma}", v.arg());
        }
    }

    #[test]
    fn echo_returns_field_to_vacuum_and_matches_pair_phase() {
        let c = cfg(1, 2, 2.0, 30.0);
        let tau = 4.0;
        let report = echo_evolve(&c, tau, DEFAULT_N_MAX, 1e-10).unwrap();
        assert!(report.residual_excitation < 1e-8, "{}", report.residual_excitation);
        let measured = extract_pair_phase(&report, 0, 1).unwrap();
        let analytic = pairwise_phase(&c, tau, 0, 1).unwrap();
        assert!(phase_difference(measured, analytic).abs() < 1e-6, "{measured} vs {analytic}");
    }

    #[test]
    fn resonant_two_site_pair_phase() {
        // g tau = 3, J = 0.1, delta = 0: one mode is exactly resonant and
        // displaces by up to ~4.2, so the truncation must be generous.
        let c = cfg(1, 2, 0.1, 0.0);
        let report = echo_evolve(&c, 3.0, 48, 1e-9).unwrap();
        assert!(report.residual_excitation < 1e-8, "{}", report.residual_excitation);
        let measured = extract_pair_phase(&report, 0, 1).unwrap();
        let analytic = pairwise_phase(&c, 3.0, 0, 1).unwrap();
        assert!(phase_difference(measured, analytic).abs() < 1e-6, "{measured} vs {analytic}");
    }

    #[test]
    fn decoupled_echo_is_identity() {
        let c = LatticeConfig::with_coupling(1, 2, 0.0, 0.1, 0.0).unwrap();
        let report = echo_evolve(&c, 2.0, 3, 1e-10).unwrap();
        let v = report.vacuum_block();
        for r in 0..4 {
            for col in 0..4 {
                let expect = if r == col { 1.0 } else { 0.0 };
                assert!((v[(r, col)] - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
        assert_eq!(extract_pair_phase(&report, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn extraction_refuses_excited_field() {
        // single block without echo leaves the field displaced
        let c = cfg(1, 2, 0.1, 1.0);
        let report = echo_evolve_with(&c, 1.0, 8, 1e-8, false).unwrap();
        let forged = EvolutionReport { residual_excitation: 0.5, ..report };
        assert!(matches!(extract_pair_phase(&forged, 0, 1), Err(Error::InvalidExtraction { .. })));
        assert!(extract_pair_phase(&forged, 0, 0).is_err());
    }

    #[test]
    fn identities_hold_and_corruption_is_detected() {
        for (m, n) in [(1, 1), (1, 2), (1, 3), (2, 2)] {
            let r = check_identities(m, n).unwrap();
            assert!(r.all_hold(), "{m}x{n}: {r:?}");
        }
        let broken = check_identities_with(1, 2, Some(1)).unwrap();
        assert!(!broken.sz_anticommutes_with_j());
        assert!(check_identities(1, 5).is_err());
    }

    #[test]
    fn phase_difference_wraps_quarter_turns() {
        assert!((phase_difference(0.1, 0.1 + PI / 2.0)).abs() < 1e-15);
        assert!((phase_difference(-0.7, 0.8) - (-1.5 + PI / 2.0)).abs() < 1e-15);
    }
}
