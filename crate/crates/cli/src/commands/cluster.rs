use std::fmt::Write as _;
use std::path::Path;

use cavity_cluster::effective::{cluster_stabilizer, generate_cluster, purity, reference_cluster, PairSelection, MAX_QUBITS};
use cavity_cluster::geomphase::{build_phase_table, feasibility_report, solve_gate_time, HardwarePreset, CLUSTER_PHASE};
use cavity_cluster::Error;

use crate::config::{RunConfig, Selection};
use crate::output::{header, num, write_all, Pending};
use crate::{CliError, Status};

/// Largest register written out amplitude by amplitude.
const MAX_SNAPSHOT_QUBITS: usize = 16;

pub fn cluster(config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    let section = config
        .cluster
        .as_ref()
        .ok_or_else(|| CliError::Config("cluster needs a [cluster] section".into()))?;
    let lattice = config.lattice.to_config()?;
    let periodic = config.lattice.periodic;
    if lattice.sites() > MAX_QUBITS {
        return Err(Error::CapExceeded { what: "qubit register", size: lattice.sites(), cap: MAX_QUBITS }.into());
    }
    let tau = match section.tau {
        Some(t) if t.is_finite() && t >= 0.0 => t,
        Some(t) => return Err(CliError::Config(format!("[cluster]: tau must be non-negative, got {t}"))),
        None => solve_gate_time(&lattice, CLUSTER_PHASE)?,
    };
    let table = build_phase_table(&lattice, tau);
    let selection = match section.selection {
        Selection::Nn => PairSelection::NearestNeighbor { periodic },
        Selection::Full => PairSelection::All,
    };
    let raw = generate_cluster(&table, selection)?;
    let mut corrected = raw.clone();
    corrected.apply_cluster_correction(periodic);
    let fidelity = reference_cluster(lattice.m, lattice.n, periodic)?.fidelity(&corrected)?;
    let (dm, dn) = lattice.nearest_neighbor();
    let gamma_nn = table.get(dm, dn).unwrap_or(0.0);

    let mut report = header("cluster", config);
    let _ = writeln!(report, "tau {}", num(tau));
    let _ = writeln!(report, "tau_source {}", if section.tau.is_some() { "config" } else { "solved" });
    let _ = writeln!(report, "gamma_nn {}", num(gamma_nn));
    let _ = writeln!(report, "max_gamma_beyond_nn {}", num(table.max_beyond_nearest()));
    let _ = writeln!(report, "zero_mode {}", table.zero_mode);
    let _ = writeln!(report, "selection {}", if section.selection == Selection::Nn { "nn" } else { "full" });
    let _ = writeln!(report, "fidelity {}", num(fidelity));
    let _ = writeln!(report, "deficit {}", num(1.0 - fidelity));
    let _ = writeln!(report, "norm {}", num(raw.norm()));
    report.push_str("# site m n stabilizer purity\n");
    let sites = lattice.sites();
    for site in 0..sites {
        let k = cluster_stabilizer(lattice.m, lattice.n, periodic, site);
        let stab = corrected.stabilizer_expectation(&k)?;
        let p = purity(&raw.reduced_single_qubit(site)?);
        let _ = writeln!(report, "site {} {} {} {}", site / lattice.n, site % lattice.n, num(stab), num(p));
    }
    if let Some(name) = &config.run.preset {
        let preset = HardwarePreset::by_name(name).ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))?;
        let f = feasibility_report(&preset, &lattice)?;
        let _ = writeln!(report, "preset {}", f.preset);
        let _ = writeln!(report, "gate_time_g {}", num(f.gate_time_g));
        let _ = writeln!(report, "gate_time_s {}", num(f.gate_time));
        let _ = writeln!(report, "ratio_cavity {}", num(f.ratio_cavity));
        let _ = writeln!(report, "ratio_qubit {}", num(f.ratio_qubit));
        if let Some(strong) = f.strong_driving {
            let _ = writeln!(report, "strong_driving {strong}");
        }
    }
    let verdict = match section.min_fidelity {
        Some(min) if fidelity < min => Status::Failed,
        _ => Status::Ok,
    };
    if let Some(min) = section.min_fidelity {
        let _ = writeln!(report, "min_fidelity {} {}", num(min), if verdict == Status::Ok { "PASS" } else { "FAIL" });
    }

    let mut files = vec![Pending { name: "cluster_report.txt", body: report }];
    if section.snapshot {
        if sites <= MAX_SNAPSHOT_QUBITS {
            let mut snap = header("cluster", config);
            snap.push_str("index,re,im\n");
            for (i, a) in raw.amplitudes().iter().enumerate() {
                let _ = writeln!(snap, "{i},{},{}", num(a.re), num(a.im));
            }
            files.push(Pending { name: "cluster_state.csv", body: snap });
        } else {
            eprintln!("ccluster: {sites} qubits exceeds the {MAX_SNAPSHOT_QUBITS}-qubit snapshot limit; no state file");
        }
    }
    for p in write_all(out, &files)? {
        println!("wrote {}", p.display());
    }
    println!("fidelity {} deficit {}", num(fidelity), num(1.0 - fidelity));
    Ok(verdict)
}
