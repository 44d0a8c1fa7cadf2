//! Integrated qubit-field dynamics against closed forms derived here.

use num_complex::Complex64;

use cavity_cluster::geomphase::pairwise_phase;
use cavity_cluster::lattice::enumerate_modes;
use cavity_cluster::oracle::{echo_evolve, evolve, extract_pair_phase, phase_difference};
use cavity_cluster::LatticeConfig;

/// Field state of block `x` after one interaction: a product of coherent
/// states `alpha = -C^* (e^{i w tau} - 1) / w` times the phase
/// `sum |C|^2 / w (tau - sin(w tau) / w)`, with
/// `C = g / sqrt(MN) sum_s x_s e^{-i phi_s}`.
fn forced_oscillator_state(cfg: &LatticeConfig, tau: f64, xconf: usize, n_max: usize) -> Vec<Complex64> {
    let sites = cfg.sites();
    let modes = enumerate_modes(cfg);
    let mut alphas = Vec::new();
    let mut phase = 0.0;
    for md in &modes {
        let c: Complex64 = (0..sites)
            .map(|s| {
                let sign = if (xconf >> s) & 1 == 0 { 1.0 } else { -1.0 };
                Complex64::from_polar(sign, -md.site_phase(s / cfg.n, s % cfg.n))
            })
            .sum::<Complex64>()
            * (cfg.g / (sites as f64).sqrt());
        let w = md.omega;
        alphas.push(-c.conj() * (Complex64::from_polar(1.0, w * tau) - 1.0) / w);
        phase += c.norm_sqr() / w * (tau - (w * tau).sin() / w);
    }
    let levels = n_max + 1;
    let coherent = |a: Complex64, k: usize| {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        (-a.norm_sqr() / 2.0).exp() * a.powu(k as u32) / fact.sqrt()
    };
    (0..levels.pow(modes.len() as u32))
        .map(|f| {
            let amp: Complex64 = alphas.iter().enumerate().map(|(mi, &a)| coherent(a, (f / levels.pow(mi as u32)) % levels)).product();
            amp * Complex64::from_polar(1.0, phase)
        })
        .collect()
}

#[test]
fn single_block_matches_forced_oscillator() {
    for (cfg, tau, n_max) in [
        (LatticeConfig::new(1, 1, 0.2, 0.7).unwrap(), 2.3, 24),
        (LatticeConfig::with_coupling(1, 2, 0.4, 0.3, 1.1).unwrap(), 1.9, 28),
        (LatticeConfig::with_coupling(1, 2, 0.4, 0.0, 0.8).unwrap(), 3.0, 28),
    ] {
        let prop = evolve(&cfg, tau, n_max, 1e-11).unwrap();
        for (x, block) in prop.blocks.iter().enumerate() {
            let expect = forced_oscillator_state(&cfg, tau, x, n_max);
            let worst = block.iter().zip(&expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(worst < 1e-9, "{}x{} block {x}: {worst:e}", cfg.m, cfg.n);
        }
    }
}

#[test]
fn pair_phases_match_mode_sum_on_small_arrays() {
    for (m, n, j, delta, tau) in [(1, 2, 1.5, 25.0, 3.0), (2, 1, 1.5, 25.0, 3.0), (1, 3, 2.0, 30.0, 2.5)] {
        let cfg = LatticeConfig::new(m, n, j, delta).unwrap();
        let report = echo_evolve(&cfg, tau, 4, 1e-10).unwrap();
        for a in 0..m * n {
            for b in a + 1..m * n {
                let measured = extract_pair_phase(&report, a, b).unwrap();
                let dm = (b / n) as i64 - (a / n) as i64;
                let dn = (b % n) as i64 - (a % n) as i64;
                let analytic = pairwise_phase(&cfg, tau, dm, dn).unwrap();
                assert!(phase_difference(measured, analytic).abs() < 1e-6, "{m}x{n} ({a},{b}): {measured} vs {analytic}");
            }
        }
    }
}

#[test]
fn doubling_truncation_leaves_phases() {
    let cfg = LatticeConfig::new(1, 2, 2.0, 30.0).unwrap();
    let coarse = echo_evolve(&cfg, 4.0, 4, 1e-11).unwrap();
    let fine = echo_evolve(&cfg, 4.0, 8, 1e-11).unwrap();
    let drift = (extract_pair_phase(&coarse, 0, 1).unwrap() - extract_pair_phase(&fine, 0, 1).unwrap()).abs();
    assert!(drift < 1e-7, "{drift:e}");
}

#[test]
fn residual_excitation_falls_with_tolerance() {
    let cfg = LatticeConfig::new(1, 2, 1.0, 12.0).unwrap();
    let loose = echo_evolve(&cfg, 3.0, 10, 1e-5).unwrap();
    let tight = echo_evolve(&cfg, 3.0, 10, 1e-10).unwrap();
    assert!(tight.residual_excitation < 1e-12, "{:e}", tight.residual_excitation);
    assert!(tight.residual_excitation <= loose.residual_excitation, "{:e} vs {:e}", tight.residual_excitation, loose.residual_excitation);
    assert!(tight.steps() > loose.steps());
}

#[test]
fn without_time_reset_the_echo_still_closes_only_on_full_periods() {
    // all modes share omega tau = 2 pi when J = 0
    let cfg = LatticeConfig::with_coupling(1, 2, 0.3, 0.0, 1.0).unwrap();
    let tau = 2.0 * std::f64::consts::PI;
    let report = cavity_cluster::oracle::echo_evolve_with(&cfg, tau, 12, 1e-10, false).unwrap();
    assert!(report.residual_excitation < 1e-8);
    let off = cavity_cluster::oracle::echo_evolve_with(&cfg, 2.0, 12, 1e-10, false).unwrap();
    let on = echo_evolve(&cfg, 2.0, 12, 1e-10).unwrap();
    assert!(on.residual_excitation < 1e-8);
    assert!(off.residual_excitation > 1e-4);
}
