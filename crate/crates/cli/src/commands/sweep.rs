use std::fmt::Write as _;
use std::path::Path;

use cavity_cluster::geomphase::{sweep_delta, sweep_tau};

use crate::config::RunConfig;
use crate::output::{header, num, write_all, Pending};
use crate::{CliError, Status};

pub fn gamma_sweep(config: &RunConfig, out: &Path) -> Result<Status, CliError> {
    let section = config
        .gamma_sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("gamma-sweep needs a [gamma_sweep] section".into()))?;
    let lattice = config.lattice.to_config()?;
    let deltas = section.delta_grid()?;
    let taus = section.tau_grid()?;
    if section.separations.is_empty() {
        return Err(CliError::Config("[gamma_sweep]: separations list is empty".into()));
    }
    if !(section.tau.is_finite() && section.tau >= 0.0) {
        return Err(CliError::Config(format!("[gamma_sweep]: tau must be non-negative, got {}", section.tau)));
    }
    let seps: Vec<(i64, i64)> = section.separations.iter().map(|s| (s[0], s[1])).collect();

    let head = header("gamma-sweep", config);
    let mut by_delta = head.clone();
    by_delta.push_str("delta_over_g,gamma_nn\n");
    for row in sweep_delta(&lattice, section.tau, &deltas)? {
        let _ = writeln!(by_delta, "{},{}", num(row.delta), num(row.gamma_nn));
    }

    let mut by_tau = head;
    by_tau.push_str("g_tau");
    for (dm, dn) in &seps {
        let _ = write!(by_tau, ",G_{dm}_{dn}");
    }
    by_tau.push('\n');
    for row in sweep_tau(&lattice, &taus, &seps)? {
        by_tau.push_str(&num(row.tau * lattice.g));
        for g in &row.gammas {
            by_tau.push(',');
            by_tau.push_str(&num(*g));
        }
        by_tau.push('\n');
    }

    let written = write_all(
        out,
        &[Pending { name: "gamma_vs_delta.csv", body: by_delta }, Pending { name: "gamma_vs_tau.csv", body: by_tau }],
    )?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(Status::Ok)
}
