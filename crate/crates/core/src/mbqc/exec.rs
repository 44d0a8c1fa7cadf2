//! Pattern execution on dense states whose measured qubits are contracted away.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pattern::{Basis, MeasurementPattern, Site};
use crate::effective::{grid_edges, PairSelection, QubitRegister};
use crate::error::{domain, Error, Result};
use crate::geomphase::{PhaseShiftTable, CLUSTER_PHASE};
use crate::lattice::LatticeConfig;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Forced branches below this probability are rejected.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-14;

/// Measurement result; `Plus` is eigenvalue `+1` (bit 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn bit(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn eigenvalue(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_bit(bit: usize) -> Self {
        if bit & 1 == 0 { Outcome::Plus } else { Outcome::Minus }
    }
}

/// Outcomes of an executed pattern, one per step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub outcomes: Vec<Outcome>,
    /// Seed of the sampler, when outcomes were drawn rather than forced.
    pub seed: Option<u64>,
}

impl MeasurementRecord {
    fn parity(&self, domain: &[usize]) -> usize {
        domain.iter().map(|&i| self.outcomes[i].bit()).sum::<usize>() & 1
    }
}

/// Qubit label: a lattice site, or a reference qubit holding one logical
/// input (used to read off the full logical map in one run).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Site(Site),
    Reference(usize),
}

/// Dense state over labelled qubits; qubit `i` of `labels` is bit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternState {
    labels: Vec<Label>,
    amps: Vec<Complex64>,
    measured: Vec<Site>,
}

impl PatternState {
    pub fn new(labels: Vec<Label>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1usize << labels.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} amplitudes", 1usize << labels.len()),
                found: amps.len().to_string(),
            });
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return domain("qubit labels must be distinct");
        }
        Ok(PatternState { labels, amps, measured: vec![] })
    }

    /// Lattice register as a pattern state.
    pub fn from_register(register: &QubitRegister) -> Self {
        let (m, n) = register.dims();
        let labels = (0..m * n).map(|q| Label::Site((q / n, q % n))).collect();
        PatternState { labels, amps: register.amplitudes().to_vec(), measured: vec![] }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn position(&self, label: Label) -> Result<usize> {
        self.labels.iter().position(|&l| l == label).map_or_else(
            || match label {
                Label::Site(s) if self.measured.contains(&s) => domain(format!("site {s:?} was already measured")),
                _ => domain(format!("qubit {label:?} is not in the state")),
            },
            Ok,
        )
    }

    /// Apply a 2x2 matrix to one qubit.
    pub fn apply_single(&mut self, label: Label, u: &[[Complex64; 2]; 2]) -> Result<()> {
        let bit = 1usize << self.position(label)?;
        for i in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | bit]);
            self.amps[i] = u[0][0] * a0 + u[0][1] * a1;
            self.amps[i | bit] = u[1][0] * a0 + u[1][1] * a1;
        }
        Ok(())
    }

    fn apply_x(&mut self, label: Label) -> Result<()> {
        self.apply_single(label, &[[ZERO, ONE], [ONE, ZERO]])
    }

    fn apply_z(&mut self, label: Label) -> Result<()> {
        self.apply_single(label, &[[ONE, ZERO], [ZERO, -ONE]])
    }

    /// Amplitudes reordered so that `order[k]` is bit `k`; `order` must list
    /// every qubit of the state.
    pub fn amplitudes_in_order(&self, order: &[Label]) -> Result<Vec<Complex64>> {
        if order.len() != self.labels.len() {
            return Err(Error::DimensionMismatch { expected: format!("{} labels", self.labels.len()), found: order.len().to_string() });
        }
        let pos = order.iter().map(|&l| self.position(l)).collect::<Result<Vec<_>>>()?;
        Ok((0..self.amps.len())
            .map(|idx| {
                let src = pos.iter().enumerate().fold(0, |acc, (k, &p)| acc | (((idx >> k) & 1) << p));
                self.amps[src]
            })
            .collect())
    }
}

/// Basis vector `|b>` selected by `outcome`, for the measured angle or `Z`.
fn basis_vector(angle: Option<f64>, outcome: Outcome) -> [Complex64; 2] {
    match angle {
        None => match outcome {
            Outcome::Plus => [ONE, ZERO],
            Outcome::Minus => [ZERO, ONE],
        },
        Some(theta) => {
            let sign = if outcome == Outcome::Plus { 1.0 } else { -1.0 };
            let h = FRAC_1_SQRT_2;
            [Complex64::new(h, 0.0), Complex64::from_polar(sign * h, theta)]
        }
    }
}

/// `<b|` contracted into qubit `q`; returns the unnormalized remainder.
fn project(state: &PatternState, q: usize, b: [Complex64; 2]) -> Vec<Complex64> {
    let low = (1usize << q) - 1;
    (0..state.amps.len() / 2)
        .map(|r| {
            let base = ((r & !low) << 1) | (r & low);
            b[0].conj() * state.amps[base] + b[1].conj() * state.amps[base | (1 << q)]
        })
        .collect()
}

fn contract(state: &PatternState, site: Site, angle: Option<f64>, outcome: Outcome) -> Result<(f64, PatternState)> {
    let q = state.position(Label::Site(site))?;
    let amps = project(state, q, basis_vector(angle, outcome));
    let prob: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>() / state.norm().powi(2);
    let mut labels = state.labels.clone();
    labels.remove(q);
    let mut measured = state.measured.clone();
    measured.push(site);
    Ok((prob, PatternState { labels, amps, measured }))
}

/// A collapsed state and the probability of its branch.
#[derive(Debug, Clone)]
pub struct Measured {
    pub outcome: Outcome,
    pub probability: f64,
    pub state: PatternState,
}

/// Projective measurement of `site`, which is removed from the state.
///
/// With `forced` the given branch is taken (an error if its probability is
/// below [`MIN_BRANCH_PROBABILITY`]); otherwise the outcome is drawn with its
/// Born probability.
pub fn measure_qubit<R: Rng>(
    state: &PatternState,
    site: Site,
    basis: Basis,
    forced: Option<Outcome>,
    rng: &mut R,
) -> Result<Measured> {
    if let Basis::Equatorial(t) = basis {
        if !t.is_finite() {
            return domain("measurement angle must be finite");
        }
    }
    measure_at(state, site, basis.angle(), forced, rng)
}

fn measure_at<R: Rng>(
    state: &PatternState,
    site: Site,
    angle: Option<f64>,
    forced: Option<Outcome>,
    rng: &mut R,
) -> Result<Measured> {
    let (p_plus, plus) = contract(state, site, angle, Outcome::Plus)?;
    let outcome = match forced {
        Some(o) => o,
        None if rng.random::<f64>() < p_plus => Outcome::Plus,
        None => Outcome::Minus,
    };
    let (probability, mut collapsed) = match outcome {
        Outcome::Plus => (p_plus, plus),
        Outcome::Minus => contract(state, site, angle, Outcome::Minus)?,
    };
    if probability < MIN_BRANCH_PROBABILITY {
        return domain(format!("outcome {outcome:?} on site {site:?} has probability {probability:e}"));
    }
    let norm = collapsed.norm();
    collapsed.amps.iter_mut().for_each(|a| *a /= norm);
    Ok(Measured { outcome, probability, state: collapsed })
}

/// Angle of step `i` after feedforward; `None` for `Z`.
fn adapted_angle(pattern: &MeasurementPattern, i: usize, record: &MeasurementRecord) -> Option<f64> {
    let step = &pattern.steps[i];
    step.basis.angle().map(|theta| {
        let s = record.parity(&step.s_domain);
        let t = record.parity(&step.t_domain);
        (if s == 1 { -theta } else { theta }) + t as f64 * PI
    })
}

fn apply_corrections(state: &mut PatternState, pattern: &MeasurementPattern, record: &MeasurementRecord) -> Result<()> {
    for out in &pattern.outputs {
        let label = Label::Site(out.site);
        if record.parity(&out.x_domain) == 1 {
            state.apply_x(label)?;
        }
        if record.parity(&out.z_domain) == 1 {
            state.apply_z(label)?;
        }
    }
    Ok(())
}

fn check_state_matches(state: &PatternState, pattern: &MeasurementPattern) -> Result<()> {
    pattern.validate()?;
    for s in pattern.measured_sites().into_iter().chain(pattern.output_sites()) {
        state.position(Label::Site(s))?;
    }
    Ok(())
}

/// Run `pattern`: steps in order with feedforward, then byproduct
/// corrections. Outcomes come from `forced` (one per step) or are sampled
/// from `seed`. The returned state holds the outputs (plus any reference
/// qubits), with the outputs in pattern order first.
pub fn run_pattern(
    state: &PatternState,
    pattern: &MeasurementPattern,
    forced: Option<&[Outcome]>,
    seed: u64,
) -> Result<(PatternState, MeasurementRecord)> {
    check_state_matches(state, pattern)?;
    if let Some(f) = forced {
        if f.len() != pattern.steps.len() {
            return Err(Error::DimensionMismatch { expected: format!("{} forced outcomes", pattern.steps.len()), found: f.len().to_string() });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = MeasurementRecord { outcomes: Vec::with_capacity(pattern.steps.len()), seed: forced.is_none().then_some(seed) };
    let mut current = state.clone();
    for (i, step) in pattern.steps.iter().enumerate() {
        let angle = adapted_angle(pattern, i, &record);
        let measured = measure_at(&current, step.site, angle, forced.map(|f| f[i]), &mut rng)?;
        record.outcomes.push(measured.outcome);
        current = measured.state;
    }
    apply_corrections(&mut current, pattern, &record)?;
    let out = reorder_outputs(&current, pattern)?;
    Ok((out, record))
}

fn reorder_outputs(state: &PatternState, pattern: &MeasurementPattern) -> Result<PatternState> {
    let mut order: Vec<Label> = pattern.outputs.iter().map(|o| Label::Site(o.site)).collect();
    order.extend(state.labels.iter().copied().filter(|l| matches!(l, Label::Reference(_))));
    let amps = state.amplitudes_in_order(&order)?;
    Ok(PatternState { labels: order, amps, measured: state.measured.clone() })
}

/// One fully measured branch.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
    /// Corrected output state, outputs first in pattern order.
    pub output: PatternState,
}

/// Cap on exhaustively enumerated measured sites.
pub const MAX_ENUMERATED_STEPS: usize = 20;

/// Every outcome branch of `pattern`, in lexicographic outcome order.
/// Branches share measured prefixes; siblings run in parallel.
pub fn enumerate_branches(state: &PatternState, pattern: &MeasurementPattern) -> Result<Vec<Branch>> {
    check_state_matches(state, pattern)?;
    if pattern.steps.len() > MAX_ENUMERATED_STEPS {
        return Err(Error::CapExceeded { what: "enumerated measurement steps", size: pattern.steps.len(), cap: MAX_ENUMERATED_STEPS });
    }
    let record = MeasurementRecord { outcomes: vec![], seed: None };
    descend(state.clone(), 1.0, record, pattern)
}

fn descend(state: PatternState, prob: f64, record: MeasurementRecord, pattern: &MeasurementPattern) -> Result<Vec<Branch>> {
    let i = record.outcomes.len();
    if i == pattern.steps.len() {
        let mut state = state;
        apply_corrections(&mut state, pattern, &record)?;
        let output = reorder_outputs(&state, pattern)?;
        return Ok(vec![Branch { outcomes: record.outcomes, probability: prob, output }]);
    }
    let site = pattern.steps[i].site;
    let angle = adapted_angle(pattern, i, &record);
    let child = |outcome: Outcome| -> Result<Vec<Branch>> {
        let (p, mut next) = contract(&state, site, angle, outcome)?;
        if p < MIN_BRANCH_PROBABILITY {
            return Ok(vec![]);
        }
        let norm = next.norm();
        next.amps.iter_mut().for_each(|a| *a /= norm);
        let mut rec = record.clone();
        rec.outcomes.push(outcome);
        descend(next, prob * p, rec, pattern)
    };
    let (plus, minus) = rayon::join(|| child(Outcome::Plus), || child(Outcome::Minus));
    let mut branches = plus?;
    branches.extend(minus?);
    Ok(branches)
}

/// How the cluster under a pattern is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterSource {
    /// Graph state built directly with controlled-Z gates.
    Reference,
    /// `|up...up>` (inputs replaced by `H|psi>`) evolved under nearest-neighbour
    /// `exp(i pi/4 X X)` and then given the site-local correction.
    Generated,
}

/// Cluster on the pattern's lattice with logical input `k` set to the
/// computational basis value of bit `k` of `input_index`.
pub fn prepare_cluster(pattern: &MeasurementPattern, source: ClusterSource, input_index: usize) -> Result<QubitRegister> {
    let (m, n) = (pattern.m, pattern.n);
    let input_value = |site: Site| pattern.inputs.iter().position(|&s| s == site).map(|k| (input_index >> k) & 1);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let states: Vec<[Complex64; 2]> = (0..m * n)
        .map(|q| {
            let site = (q / n, q % n);
            match (source, input_value(site)) {
                (ClusterSource::Reference, None) => [h, h],
                (ClusterSource::Reference, Some(0)) => [ONE, ZERO],
                (ClusterSource::Reference, Some(_)) => [ZERO, ONE],
                (ClusterSource::Generated, None) => [ONE, ZERO],
                (ClusterSource::Generated, Some(0)) => [h, h],
                (ClusterSource::Generated, Some(_)) => [h, -h],
            }
        })
        .collect();
    let mut reg = QubitRegister::from_site_states(m, n, &states)?;
    match source {
        ClusterSource::Reference => {
            for (a, b) in grid_edges(m, n, pattern.periodic) {
                reg.apply_cz(a, b)?;
            }
        }
        ClusterSource::Generated => {
            let config = LatticeConfig::new(m, n, 0.0, 0.0)?;
            let table = PhaseShiftTable::uniform(&config, 0.0, CLUSTER_PHASE);
            reg.apply_pairwise_xx(&table, PairSelection::NearestNeighbor { periodic: pattern.periodic })?;
            reg.apply_cluster_correction(pattern.periodic);
        }
    }
    Ok(reg)
}

/// Cluster carrying every logical input at once: each input is maximally
/// entangled with a reference qubit, so the output encodes the whole map.
pub fn prepare_choi_cluster(pattern: &MeasurementPattern, source: ClusterSource) -> Result<PatternState> {
    let k = pattern.inputs.len();
    let d = 1usize << k;
    let cluster_labels = PatternState::from_register(&prepare_cluster(pattern, source, 0)?).labels;
    let nq = cluster_labels.len();
    if nq + k > crate::effective::MAX_QUBITS {
        return Err(Error::CapExceeded { what: "pattern state", size: nq + k, cap: crate::effective::MAX_QUBITS });
    }
    let mut amps = vec![ZERO; 1 << (nq + k)];
    let scale = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        let reg = prepare_cluster(pattern, source, i)?;
        for (idx, a) in reg.amplitudes().iter().enumerate() {
            amps[(i << nq) | idx] = a * scale;
        }
    }
    let mut labels = cluster_labels;
    labels.extend((0..k).map(Label::Reference));
    PatternState::new(labels, amps)
}

/// Logical map `K[out, in]` read from a corrected branch of a Choi run.
pub fn logical_map(branch: &PatternState, inputs: usize, outputs: usize) -> Result<DMatrix<Complex64>> {
    if branch.labels.len() != inputs + outputs {
        return Err(Error::DimensionMismatch { expected: format!("{} qubits", inputs + outputs), found: branch.labels.len().to_string() });
    }
    let scale = ((1usize << inputs) as f64).sqrt();
    let dout = 1usize << outputs;
    Ok(DMatrix::from_fn(dout, 1 << inputs, |o, i| branch.amps[(i << outputs) | o] * scale))
}

/// `min_phi max_ij |K_ij - e^{i phi} U_ij|`, with the phase fixed by `tr(U^dag K)`.
pub fn distance_up_to_phase(k: &DMatrix<Complex64>, u: &DMatrix<Complex64>) -> f64 {
    let overlap: Complex64 = u.iter().zip(k.iter()).map(|(a, b)| a.conj() * b).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    k.iter().zip(u.iter()).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max)
}

/// Summary of an exhaustive check of a pattern against a target unitary.
#[derive(Debug, Clone)]
pub struct PatternCheck {
    pub branches: usize,
    pub probability_sum: f64,
    /// Largest distance of any branch's logical map from the target.
    pub max_deviation: f64,
    /// Largest distance between any branch's map and the first branch's.
    pub max_branch_spread: f64,
}

impl PatternCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol && self.max_branch_spread <= tol && (self.probability_sum - 1.0).abs() <= 1e-12
    }
}

/// Runs every branch of `pattern` on a cluster from `source` and compares
/// each branch's logical map with `target` (outputs x inputs).
pub fn check_pattern(pattern: &MeasurementPattern, source: ClusterSource, target: &DMatrix<Complex64>) -> Result<PatternCheck> {
    let (ni, no) = (pattern.inputs.len(), pattern.outputs.len());
    if target.nrows() != 1 << no || target.ncols() != 1 << ni {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{} target", 1 << no, 1 << ni),
            found: format!("{}x{}", target.nrows(), target.ncols()),
        });
    }
    let state = prepare_choi_cluster(pattern, source)?;
    let branches = enumerate_branches(&state, pattern)?;
    let maps = branches.iter().map(|b| logical_map(&b.output, ni, no)).collect::<Result<Vec<_>>>()?;
    let first = maps.first().cloned().unwrap_or_else(|| target.clone());
    Ok(PatternCheck {
        branches: branches.len(),
        probability_sum: branches.iter().map(|b| b.probability).sum(),
        max_deviation: maps.iter().map(|k| distance_up_to_phase(k, target)).fold(0.0, f64::max),
        max_branch_spread: maps.iter().map(|k| distance_up_to_phase(k, &first)).fold(0.0, f64::max),
    })
}
