//! Dense qubit register under the effective pairwise `sigma_x sigma_x` evolution.
//!
//! Site `(m, n)` of an `M x N` array is qubit `m * N + n`, stored as bit
//! `m * N + n` of the basis index. Bit 0 is `|up>`, the `+1` eigenstate of
//! `sigma_z`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::geomphase::PhaseShiftTable;
use crate::numeric::{hadamard_all, inner, norm_sqr};

/// Largest register held as a dense vector.
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

/// Which pairs of sites an evolution couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSelection {
    /// Every unordered pair, each with its table entry.
    All,
    /// Only lattice neighbours, with or without wrap-around edges.
    NearestNeighbor { periodic: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitRegister {
    m: usize,
    n: usize,
    amps: Vec<Complex64>,
}

fn check_cap(m: usize, n: usize) -> Result<usize> {
    let sites = m * n;
    if m == 0 || n == 0 {
        return domain("register dimensions must be positive");
    }
    if sites > MAX_QUBITS {
        return Err(Error::CapExceeded { what: "qubit register", size: sites, cap: MAX_QUBITS });
    }
    Ok(sites)
}

impl QubitRegister {
    pub fn product_state(m: usize, n: usize, spin: Spin) -> Result<Self> {
        let sites = check_cap(m, n)?;
        let mut amps = vec![ZERO; 1 << sites];
        let idx = match spin {
            Spin::Up => 0,
            Spin::Down => (1 << sites) - 1,
        };
        amps[idx] = ONE;
        Ok(QubitRegister { m, n, amps })
    }

    /// Product of arbitrary single-site states `[<0|s>, <1|s>]`, each normalized here.
    pub fn from_site_states(m: usize, n: usize, states: &[[Complex64; 2]]) -> Result<Self> {
        let sites = check_cap(m, n)?;
        if states.len() != sites {
            return Err(Error::DimensionMismatch {
                expected: format!("{sites} site states"),
                found: states.len().to_string(),
            });
        }
        let normed: Vec<[Complex64; 2]> = states
            .iter()
            .map(|s| {
                let norm = (s[0].norm_sqr() + s[1].norm_sqr()).sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return domain("site state must have finite non-zero norm");
                }
                Ok([s[0] / norm, s[1] / norm])
            })
            .collect::<Result<_>>()?;
        let amps = (0..1usize << sites)
            .map(|idx| normed.iter().enumerate().map(|(q, s)| s[(idx >> q) & 1]).product())
            .collect();
        Ok(QubitRegister { m, n, amps })
    }

    /// Wrap raw amplitudes; the vector is renormalized.
    pub fn from_amplitudes(m: usize, n: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        let sites = check_cap(m, n)?;
        if amps.len() != 1 << sites {
            return Err(Error::DimensionMismatch {
                expected: format!("{} amplitudes", 1usize << sites),
                found: amps.len().to_string(),
            });
        }
        let norm = norm_sqr(&amps).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return domain("amplitude vector must have finite non-zero norm");
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(QubitRegister { m, n, amps })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn num_qubits(&self) -> usize {
        self.m * self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn site_index(&self, m: usize, n: usize) -> usize {
        m * self.n + n
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.amps).sqrt()
    }

    pub fn overlap(&self, other: &QubitRegister) -> Result<Complex64> {
        self.check_same_dims(other.m, other.n)?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &QubitRegister) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    fn check_same_dims(&self, m: usize, n: usize) -> Result<()> {
        if (self.m, self.n) != (m, n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.m, self.n),
                found: format!("{m}x{n}"),
            });
        }
        Ok(())
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.num_qubits() {
            return domain(format!("site {site} out of range for {} qubits", self.num_qubits()));
        }
        Ok(())
    }

    /// Apply a 2x2 unitary (row-major) to one qubit.
    pub fn apply_single(&mut self, site: usize, u: &Matrix2<Complex64>) -> Result<()> {
        self.check_site(site)?;
        let bit = 1usize << site;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | bit];
                self.amps[i] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                self.amps[i | bit] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_site(a)?;
        self.check_site(b)?;
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
        Ok(())
    }

    /// `exp(i gamma X_a X_b)` on one pair.
    pub fn apply_xx_pair(&mut self, a: usize, b: usize, gamma: f64) -> Result<()> {
        self.check_site(a)?;
        self.check_site(b)?;
        if a == b {
            return domain("a pair needs two distinct sites");
        }
        let mask = (1usize << a) | (1usize << b);
        let (c, s) = (gamma.cos(), gamma.sin());
        let old = self.amps.clone();
        for (i, amp) in self.amps.iter_mut().enumerate() {
            *amp = old[i] * c + I * s * old[i ^ mask];
        }
        Ok(())
    }

    /// `exp(i sum_{a<b} Gamma_ab X_a X_b)` with couplings from `table`.
    ///
    /// All factors commute, so the product is applied at once as a diagonal
    /// phase in the `sigma_x` eigenbasis.
    pub fn apply_pairwise_xx(&mut self, table: &PhaseShiftTable, selection: PairSelection) -> Result<()> {
        self.check_same_dims(table.config.m, table.config.n)?;
        let pairs = coupled_pairs(self.m, self.n, table, selection);
        self.apply_xx_diagonal(&pairs);
        Ok(())
    }

    fn apply_xx_diagonal(&mut self, pairs: &[(usize, usize, f64)]) {
        if pairs.is_empty() {
            return;
        }
        hadamard_all(&mut self.amps);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let phase: f64 = pairs
                .iter()
                .map(|&(a, b, g)| if ((idx >> a) ^ (idx >> b)) & 1 == 0 { g } else { -g })
                .sum();
            *amp *= Complex64::from_polar(1.0, phase);
        }
        hadamard_all(&mut self.amps);
    }

    /// `<psi|P|psi>`; the imaginary residue of a Hermitian `P` is discarded.
    pub fn stabilizer_expectation(&self, pauli: &PauliOperatorString) -> Result<f64> {
        Ok(self.pauli_expectation(pauli)?.re)
    }

    pub fn pauli_expectation(&self, pauli: &PauliOperatorString) -> Result<Complex64> {
        if pauli.len() != self.num_qubits() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} Pauli letters", self.num_qubits()),
                found: pauli.len().to_string(),
            });
        }
        let (flip, zmask, ycount) = pauli.masks();
        let y_phase = I.powi(ycount as i32);
        let acc: Complex64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &amp)| {
                let sign = if (i & zmask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                self.amps[i ^ flip].conj() * amp * sign
            })
            .sum();
        Ok(acc * y_phase * pauli.phase)
    }

    /// Single-site density matrix, tracing out every other qubit.
    pub fn reduced_single_qubit(&self, site: usize) -> Result<Matrix2<Complex64>> {
        self.check_site(site)?;
        let bit = 1usize << site;
        let mut rho = Matrix2::<Complex64>::zeros();
        for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let a0 = self.amps[i];
            let a1 = self.amps[i | bit];
            rho[(0, 0)] += a0 * a0.conj();
            rho[(0, 1)] += a0 * a1.conj();
            rho[(1, 0)] += a1 * a0.conj();
            rho[(1, 1)] += a1 * a1.conj();
        }
        Ok(rho)
    }

    /// Undo the site-local frame of an XX-generated cluster: a Hadamard on
    /// every qubit followed by `exp(-i pi deg/4 Z)`, with `deg` the vertex
    /// degree in the lattice graph.
    pub fn apply_cluster_correction(&mut self, periodic: bool) {
        let degrees = grid_degrees(self.m, self.n, periodic);
        hadamard_all(&mut self.amps);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let phase: f64 = degrees
                .iter()
                .enumerate()
                .map(|(q, &d)| {
                    let z = if (idx >> q) & 1 == 0 { 1.0 } else { -1.0 };
                    -PI * d as f64 / 4.0 * z
                })
                .sum();
            *amp *= Complex64::from_polar(1.0, phase);
        }
    }

    /// Inverse of [`Self::apply_cluster_correction`].
    pub fn undo_cluster_correction(&mut self, periodic: bool) {
        let degrees = grid_degrees(self.m, self.n, periodic);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let phase: f64 = degrees
                .iter()
                .enumerate()
                .map(|(q, &d)| {
                    let z = if (idx >> q) & 1 == 0 { 1.0 } else { -1.0 };
                    PI * d as f64 / 4.0 * z
                })
                .sum();
            *amp *= Complex64::from_polar(1.0, phase);
        }
        hadamard_all(&mut self.amps);
    }
}

impl fmt::Display for QubitRegister {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.amps.iter().enumerate().filter(|(_, a)| a.norm() > 1e-12) {
            writeln!(f, "{i:0width$b}: {a}", width = self.num_qubits())?;
        }
        Ok(())
    }
}

/// Edges of the `M x N` grid graph as ordered `(a, b)` qubit pairs with
/// `a < b`. Wrap-around edges are added when `periodic`; edges that would
/// repeat (size-2 rings) or loop back on a site (size-1 rings) are dropped.
pub fn grid_edges(m: usize, n: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for r in 0..m {
        for c in 0..n {
            let here = r * n + c;
            let right = if c + 1 < n { Some(c + 1) } else if periodic { Some(0) } else { None };
            let down = if r + 1 < m { Some(r + 1) } else if periodic { Some(0) } else { None };
            if let Some(c2) = right {
                edges.push((here, r * n + c2));
            }
            if let Some(r2) = down {
                edges.push((here, r2 * n + c));
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = edges
        .into_iter()
        .filter(|(a, b)| a != b)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

pub fn grid_degrees(m: usize, n: usize, periodic: bool) -> Vec<usize> {
    let mut deg = vec![0; m * n];
    for (a, b) in grid_edges(m, n, periodic) {
        deg[a] += 1;
        deg[b] += 1;
    }
    deg
}

pub fn grid_neighbors(m: usize, n: usize, periodic: bool, site: usize) -> Vec<usize> {
    grid_edges(m, n, periodic)
        .into_iter()
        .filter_map(|(a, b)| if a == site { Some(b) } else if b == site { Some(a) } else { None })
        .collect()
}

fn coupled_pairs(m: usize, n: usize, table: &PhaseShiftTable, selection: PairSelection) -> Vec<(usize, usize, f64)> {
    let coupling = |a: usize, b: usize| {
        let dm = (b / n) as i64 - (a / n) as i64;
        let dn = (b % n) as i64 - (a % n) as i64;
        table.get(dm, dn).unwrap_or(0.0)
    };
    match selection {
        PairSelection::All => {
            let sites = m * n;
            (0..sites)
                .flat_map(|a| (a + 1..sites).map(move |b| (a, b)))
                .map(|(a, b)| (a, b, coupling(a, b)))
                .filter(|&(_, _, g)| g != 0.0)
                .collect()
        }
        PairSelection::NearestNeighbor { periodic } => grid_edges(m, n, periodic)
            .into_iter()
            .map(|(a, b)| (a, b, coupling(a, b)))
            .collect(),
    }
}

/// `|up...up>` evolved under the couplings of `table`.
pub fn generate_cluster(table: &PhaseShiftTable, selection: PairSelection) -> Result<QubitRegister> {
    let mut reg = QubitRegister::product_state(table.config.m, table.config.n, Spin::Up)?;
    reg.apply_pairwise_xx(table, selection)?;
    Ok(reg)
}

/// Graph state on the grid: Hadamard on every qubit, then CZ on every edge.
pub fn reference_cluster(m: usize, n: usize, periodic: bool) -> Result<QubitRegister> {
    let sites = check_cap(m, n)?;
    let edges = grid_edges(m, n, periodic);
    let amp = (0.5f64).powf(sites as f64 / 2.0);
    let amps = (0..1usize << sites)
        .map(|idx| {
            let parity = edges.iter().filter(|&&(a, b)| (idx >> a) & (idx >> b) & 1 == 1).count();
            Complex64::new(if parity % 2 == 0 { amp } else { -amp }, 0.0)
        })
        .collect();
    Ok(QubitRegister { m, n, amps })
}

/// Fidelity of an XX-generated register with the grid graph state, after
/// the site-local correction.
pub fn cluster_fidelity(register: &QubitRegister, periodic: bool) -> Result<f64> {
    let (m, n) = register.dims();
    let mut corrected = register.clone();
    corrected.apply_cluster_correction(periodic);
    reference_cluster(m, n, periodic)?.fidelity(&corrected)
}

/// Graph-state stabilizer `X_a prod_{b ~ a} Z_b`.
pub fn cluster_stabilizer(m: usize, n: usize, periodic: bool, site: usize) -> PauliOperatorString {
    let mut letters = vec![Pauli::I; m * n];
    letters[site] = Pauli::X;
    for b in grid_neighbors(m, n, periodic, site) {
        letters[b] = Pauli::Z;
    }
    PauliOperatorString::new(letters)
}

/// Purity `tr(rho^2)` of a single-qubit density matrix.
pub fn purity(rho: &Matrix2<Complex64>) -> f64 {
    (rho * rho).trace().re
}

/// Hadamard gate.
pub fn hadamard() -> Matrix2<Complex64> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Matrix2::new(h, h, h, -h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Tensor product of single-site Paulis with an overall phase in `{±1, ±i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOperatorString {
    pub letters: Vec<Pauli>,
    pub phase: Complex64,
}

impl PauliOperatorString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        PauliOperatorString { letters, phase: ONE }
    }

    pub fn identity(len: usize) -> Self {
        Self::new(vec![Pauli::I; len])
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// (bit-flip mask, sign mask, number of Y letters); `Y = i X Z`.
    fn masks(&self) -> (usize, usize, usize) {
        let mut flip = 0;
        let mut z = 0;
        let mut ys = 0;
        for (q, p) in self.letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => flip |= 1 << q,
                Pauli::Z => z |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    z |= 1 << q;
                    ys += 1;
                }
            }
        }
        (flip, z, ys)
    }
}

impl FromStr for PauliOperatorString {
    type Err = Error;

    /// Letters `I X Y Z`, site 0 first, with an optional `+ - +i -i` prefix.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i") {
            (I, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (-I, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (-ONE, rest)
        } else {
            (ONE, s.strip_prefix('+').unwrap_or(s))
        };
        let letters = body
            .chars()
            .enumerate()
            .map(|(col, ch)| match ch {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse { line: 1, column: col + 1, message: format!("unexpected Pauli letter {other:?}") }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliOperatorString { letters, phase })
    }
}
