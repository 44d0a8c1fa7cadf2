use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cavity_cluster::mbqc::{
    distance_up_to_phase, enumerate_branches, gates, logical_map, prepare_choi_cluster, prepare_cluster, run_pattern,
    ClusterSource, MeasurementPattern, PatternState,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::{MbqcSection, RunConfig, Source, Target};
use crate::output::{header, num, write_all, Pending};
use crate::{CliError, Status};

pub fn default_mbqc_section() -> MbqcSection {
    MbqcSection { source: Source::Reference, pattern: None, target: Target::None, angles: Vec::new(), tolerance: 1e-10 }
}

fn target_matrix(section: &MbqcSection, inputs: usize) -> Result<Option<DMatrix<Complex64>>, CliError> {
    let (matrix, qubits) = match section.target {
        Target::None => return Ok(None),
        Target::Identity => (gates::identity(), 1),
        Target::Hadamard => (gates::hadamard(), 1),
        Target::Cnot => (gates::cnot(), 2),
        Target::Euler => match section.angles[..] {
            [a, b, c] => (gates::euler(a, b, c), 1),
            _ => return Err(CliError::Config("[mbqc]: target \"euler\" needs three angles".into())),
        },
    };
    if qubits != inputs {
        return Err(CliError::Config(format!("[mbqc]: target acts on {qubits} qubit(s), pattern has {inputs} input(s)")));
    }
    Ok(Some(matrix))
}

/// All `4^k` Pauli strings on `k` qubits, bit `q` of the index acting on qubit `q`.
fn pauli_strings(k: usize) -> Vec<DMatrix<Complex64>> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let single = [
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
    ];
    (0..1usize << (2 * k))
        .map(|code| {
            // highest qubit first so that qubit q sits on index bit q
            (0..k).rev().fold(DMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, q| acc.kronecker(&single[(code >> (2 * q)) & 3]))
        })
        .collect()
}

/// Whether `u` maps every Pauli string onto a single Pauli string (up to phase).
fn is_clifford(u: &DMatrix<Complex64>, k: usize, tol: f64) -> bool {
    let d = (1usize << k) as f64;
    let paulis = pauli_strings(k);
    let udag = u.adjoint();
    paulis.iter().all(|p| {
        let image = u * p * &udag;
        let weights: Vec<f64> = paulis.iter().map(|q| (q.adjoint() * &image).trace().norm() / d).collect();
        weights.iter().filter(|&&w| (w - 1.0).abs() <= tol).count() == 1 && weights.iter().filter(|&&w| w > tol).count() == 1
    })
}

fn complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { "" } else { "+" };
    format!("{}{sign}{}i", num(z.re), num(z.im))
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<Complex64>) {
    for r in 0..m.nrows() {
        let _ = write!(out, "{name}[{r}]");
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            let _ = write!(out, " {}", complex(z));
        }
        out.push('\n');
    }
}

/// Map normalized so that its largest entry is real and positive.
fn fix_phase(k: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let pivot = k.iter().copied().fold(Complex64::new(0.0, 0.0), |best, z| if z.norm() > best.norm() + 1e-12 { z } else { best });
    if pivot.norm() == 0.0 {
        return k.clone();
    }
    let phase = pivot.conj() / pivot.norm();
    k.map(|z| z * phase)
}

fn load_pattern(section: &MbqcSection) -> Result<MeasurementPattern, CliError> {
    let path = section
        .pattern
        .as_ref()
        .ok_or_else(|| CliError::Usage("mbqc needs a pattern file (--pattern or [mbqc] pattern)".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let pattern: MeasurementPattern = text.parse().map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    pattern.validate().map_err(|e| CliError::Config(format!("{path}: {e}")))?;
    Ok(pattern)
}

pub fn mbqc(config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    let section = config
        .mbqc
        .as_ref()
        .ok_or_else(|| CliError::Config("mbqc needs an [mbqc] section or --pattern".into()))?;
    let pattern = load_pattern(section)?;
    let (ni, no) = (pattern.inputs.len(), pattern.outputs.len());
    let target = target_matrix(section, ni)?;
    let source = match section.source {
        Source::Reference => ClusterSource::Reference,
        Source::Generated => ClusterSource::Generated,
    };
    let tol = section.tolerance;

    let choi = prepare_choi_cluster(&pattern, source)?;
    let branches = enumerate_branches(&choi, &pattern)?;
    let maps = branches.iter().map(|b| logical_map(&b.output, ni, no)).collect::<Result<Vec<_>, _>>()?;
    let first = maps.first().cloned().ok_or_else(|| CliError::Compute(cavity_cluster::Error::Domain("no branch has non-zero probability".into())))?;
    let probability_sum: f64 = branches.iter().map(|b| b.probability).sum();
    let spread = maps.iter().map(|k| distance_up_to_phase(k, &first)).fold(0.0, f64::max);
    let deterministic = spread <= tol;
    let unitary = ni == no && {
        let gram = first.adjoint() * &first;
        (gram - DMatrix::<Complex64>::identity(1 << ni, 1 << ni)).iter().all(|z| z.norm() <= tol.max(1e-9))
    };
    let clifford = unitary && is_clifford(&first, ni, 1e-9);
    let identity_like = unitary && distance_up_to_phase(&first, &DMatrix::identity(1 << ni, 1 << ni)) <= tol;
    let deviation = target.as_ref().map(|t| maps.iter().map(|k| distance_up_to_phase(k, t)).fold(0.0, f64::max));

    // one sampled run on the logical |0...0> input
    let cluster = prepare_cluster(&pattern, source, 0)?;
    let (sampled, record) = run_pattern(&PatternState::from_register(&cluster), &pattern, None, config.run.seed)?;

    let verdict = if !deterministic {
        "non-deterministic"
    } else if clifford {
        "identity-up-to-Clifford"
    } else if unitary {
        "unitary"
    } else {
        "non-unitary"
    };
    let target_ok = deviation.is_none_or(|d| d <= tol);
    let passed = deterministic && (probability_sum - 1.0).abs() <= 1e-12 && target_ok;

    let mut report = header("mbqc", config);
    let _ = writeln!(report, "lattice {} {} {}", pattern.m, pattern.n, if pattern.periodic { "periodic" } else { "open" });
    let _ = writeln!(report, "source {}", if source == ClusterSource::Reference { "reference" } else { "generated" });
    let _ = writeln!(report, "inputs {ni} outputs {no} steps {}", pattern.steps.len());
    let _ = writeln!(report, "branches {}", branches.len());
    let _ = writeln!(report, "probability_sum {}", num(probability_sum));
    let pmin = branches.iter().map(|b| b.probability).fold(f64::INFINITY, f64::min);
    let pmax = branches.iter().map(|b| b.probability).fold(0.0, f64::max);
    let _ = writeln!(report, "branch_probability_min {}", num(pmin));
    let _ = writeln!(report, "branch_probability_max {}", num(pmax));
    let _ = writeln!(report, "branch_spread {}", num(spread));
    let _ = writeln!(report, "deterministic {deterministic}");
    let _ = writeln!(report, "clifford {clifford}");
    let _ = writeln!(report, "identity {identity_like}");
    let _ = writeln!(report, "verdict {verdict}");
    if let Some(d) = deviation {
        let _ = writeln!(report, "target_deviation {} {}", num(d), if target_ok { "PASS" } else { "FAIL" });
    }
    write_matrix(&mut report, "map", &fix_phase(&first));
    let outcomes: String = record.outcomes.iter().map(|o| if o.bit() == 0 { '0' } else { '1' }).collect();
    let _ = writeln!(report, "sample_outcomes {}", if outcomes.is_empty() { "-" } else { outcomes.as_str() });
    for (i, a) in sampled.amplitudes().iter().enumerate() {
        let _ = writeln!(report, "sample_state[{i}] {}", complex(*a));
    }
    let _ = writeln!(report, "status {}", if passed { "PASS" } else { "FAIL" });

    for p in write_all(out, &[Pending { name: "mbqc_report.txt", body: report }])? {
        println!("wrote {}", p.display());
    }
    println!("verdict {verdict}, {} branches, {}", branches.len(), if passed { "PASS" } else { "FAIL" });
    Ok(if passed { Status::Ok } else { Status::Failed })
}
