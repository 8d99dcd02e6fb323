//! Single-pass pipeline: state → GNS → modular data → Liouvillean → checks.

use kmsbound_core::boundedness::{
    beta_bounded_check, estimate_beta_max, extract_t, is_completely_beta_bounded, phi_norm_exact,
    pisier_haagerup_check, PhiMap,
};
use kmsbound_core::dynamics::{holomorphy_bound, kms_residual, liouvillean, Dynamics, Liouvillean};
use kmsbound_core::gns::{gns_from_state, modular_data, standard_subspace, GnsTriple, ModularData, QuantumState};
use kmsbound_core::holomorphy::{anal_cont_identity, remark_matrix_validation, remark_sweep, SequenceModel};
use kmsbound_core::passivity::{energy_form_check, psi_decomposition, psi_decomposition_check, subspace_passivity_check};
use kmsbound_core::report::{worst_status, ConditionReport, Provenance, Status};
use kmsbound_core::sampling::{derive_seed, gaussian_vector, rng_from_seed};
use kmsbound_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::scenario::{build_system, default_beta_grid, Scenario, CHECKS};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
const HOLOMORPHY_TOL: f64 = 1e-8;
const ANAL_CONT_VECTORS: usize = 5;
const PLATEAU_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub status: Status,
    pub reports: Vec<ConditionReport>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        if self.status == Status::Fail {
            1
        } else {
            0
        }
    }
}

struct System {
    state: QuantumState,
    dynamics: Dynamics,
    triple: GnsTriple,
    md: ModularData,
    lv: Liouvillean,
}

fn failed(check: &str, err: &CoreError) -> ConditionReport {
    let mut r = ConditionReport::new(check, Provenance::Exact, 0.0);
    r.note(err.to_string());
    r.with_status(Status::Fail)
}

pub fn run_scenario(s: &Scenario, seed_override: Option<u64>) -> Result<RunOutput, CliError> {
    let seed = seed_override.unwrap_or(s.params.seed);
    let mut reports = Vec::new();
    if !s.checks.is_empty() {
        let (state, dynamics) = build_system(s)?;
        let triple = gns_from_state(&state)?;
        let md = modular_data(&triple)?;
        let lv = liouvillean(&dynamics, &triple)?;
        let sys = System {
            state,
            dynamics,
            triple,
            md,
            lv,
        };
        let grid = default_beta_grid(s);
        for check in &s.checks {
            let idx = CHECKS.iter().position(|c| c == check).unwrap_or(CHECKS.len()) as u64;
            let check_seed = derive_seed(seed, idx);
            reports.extend(run_check(&sys, s, check, &grid, check_seed));
        }
        if !sys.state.is_faithful() {
            let flag = format!(
                "state has rank {} of {}; modular data lives on the reduced space",
                sys.state.support_rank(),
                sys.state.dim()
            );
            for r in &mut reports {
                r.note(flag.clone());
            }
        }
    }
    Ok(RunOutput {
        schema_version: SCHEMA_VERSION,
        scenario: s.name.clone(),
        seed,
        status: worst_status(&reports),
        reports,
    })
}

fn per_beta<F>(check: &str, grid: &[f64], seed: u64, f: F) -> Vec<ConditionReport>
where
    F: Fn(f64, u64) -> Result<ConditionReport, CoreError>,
{
    grid.iter()
        .enumerate()
        .map(|(i, &beta)| f(beta, derive_seed(seed, i as u64)).unwrap_or_else(|e| failed(check, &e).with_value("beta", beta)))
        .collect()
}

fn run_check(sys: &System, s: &Scenario, check: &str, grid: &[f64], seed: u64) -> Vec<ConditionReport> {
    let p = &s.params;
    let samples = p.samples;
    let phi = |beta: f64| PhiMap::new(&sys.state, &sys.dynamics, beta / 2.0);
    match check {
        "kms" => per_beta(check, grid, seed, |beta, sd| {
            kms_residual(&sys.triple, &sys.dynamics, &sys.lv, beta, samples.clamp(1, 50), 50, sd).map(|(_, r)| r)
        }),
        "holomorphy_bound" => per_beta(check, grid, seed, |beta, sd| {
            let hb = holomorphy_bound(&sys.triple, &sys.dynamics, &sys.lv, beta, samples, sd)?;
            let exact = phi_norm_exact(&phi(beta)?).powi(2);
            Ok(hb.report(exact, HOLOMORPHY_TOL))
        }),
        "beta_bounded" => per_beta(check, grid, seed, |beta, sd| Ok(beta_bounded_check(&phi(beta)?, samples, sd).1)),
        "pisier_haagerup" => per_beta(check, grid, seed, |beta, sd| {
            pisier_haagerup_check(&sys.md, &sys.triple, &sys.lv, &phi(beta)?, samples, sd)
        }),
        "extract_T" => per_beta(check, grid, seed, |beta, _| Ok(extract_t(&sys.md, &sys.lv, &phi(beta)?, p.k_max)?.1)),
        "complete_bounded" => per_beta(check, grid, seed, |beta, _| {
            Ok(is_completely_beta_bounded(&phi(beta)?, &sys.md, &sys.lv, p.k_max, p.tolerances.complete_bounded)?.1)
        }),
        "beta_max" => vec![estimate_beta_max(&sys.state, &sys.dynamics, p.k_max, p.tolerances.bisect, seed)
            .map(|(_, r)| r)
            .unwrap_or_else(|e| failed(check, &e))],
        "passivity_energy" => vec![energy_form_check(&sys.lv, &sys.triple, samples, seed)
            .map(|r| r.report)
            .unwrap_or_else(|e| failed(check, &e))],
        "passivity_subspace" => vec![standard_subspace(&sys.md, &sys.triple)
            .and_then(|ss| subspace_passivity_check(&sys.md, &ss, samples, seed))
            .map(|r| r.report)
            .unwrap_or_else(|e| failed(check, &e))],
        "psi_decomposition" => vec![standard_subspace(&sys.md, &sys.triple)
            .and_then(|ss| Ok(psi_decomposition_check(&psi_decomposition(&sys.md)?, &ss, samples.min(50), seed)))
            .unwrap_or_else(|e| failed(check, &e))],
        "anal_cont" => per_beta(check, grid, seed, |beta, sd| anal_cont_check(sys, beta, sd)),
        "remark" => vec![remark_check(s).unwrap_or_else(|e| failed(check, &e))],
        other => vec![failed(other, &CoreError::InvalidArgument(format!("unknown check {other}")))],
    }
}

/// Identity for `Ω` and a few random vectors; reports the worst case.
fn anal_cont_check(sys: &System, beta: f64, seed: u64) -> Result<ConditionReport, CoreError> {
    let mut rng = rng_from_seed(seed);
    let mut vectors = vec![sys.triple.omega().clone()];
    vectors.extend((0..ANAL_CONT_VECTORS).map(|_| gaussian_vector(&mut rng, sys.lv.dim())));
    let mut worst: Option<ConditionReport> = None;
    let mut worst_gap = f64::NEG_INFINITY;
    for xi in &vectors {
        let r = anal_cont_identity(&sys.lv, xi, beta)?;
        let gap = r.subchecks.first().map(|s| s.value.0).unwrap_or(0.0);
        if r.status > worst.as_ref().map(|w| w.status).unwrap_or(Status::Pass) || (gap > worst_gap && worst.as_ref().is_none_or(|w| w.status == r.status)) {
            worst_gap = gap;
            worst = Some(r);
        }
    }
    let mut r = worst.expect("at least one vector");
    r.provenance = Provenance::Sampled {
        seed,
        n: vectors.len() as u64,
    };
    r.set_value("vectors", vectors.len() as f64);
    Ok(r)
}

/// Growth of the sequence-model norm over the configured truncations.
fn remark_check(s: &Scenario) -> Result<ConditionReport, CoreError> {
    let spec = &s.params.remark;
    let truncations = &s.params.truncations;
    let model = SequenceModel::new(spec.kind, spec.alpha, spec.beta, truncations[0])?;
    let sweep = remark_sweep(&model, truncations)?;
    let limit = kmsbound_core::holomorphy::remark_norm(&model).bounded_in_limit;
    let mut r = ConditionReport::new("remark", Provenance::Exact, PLATEAU_TOL);
    r.set_value("epsilon", model.epsilon());
    r.set_value("growth_ratio", sweep.ratio);
    if truncations.len() > 1 {
        for (n, v) in sweep.truncations.iter().zip(&sweep.values) {
            r.set_value(format!("norm_N{n}"), *v);
        }
    }
    r.push_sub("monotone in N", sweep.monotone, sweep.ratio, 1.0);
    let first = sweep.values[0];
    let last = *sweep.values.last().expect("non-empty");
    r.set_value("norm", last);
    if limit {
        r.push_sub("plateau", (last - first).abs() <= PLATEAU_TOL, (last - first).abs(), PLATEAU_TOL);
    } else {
        let growing = sweep.values.windows(2).all(|w| w[1] > w[0] * (1.0 + PLATEAU_TOL));
        r.push_sub("growth without plateau", growing || sweep.values.len() < 2, sweep.ratio, 1.0 + PLATEAU_TOL);
    }
    let small_n = 4u64.max(spec.kind.first_index());
    let validation = remark_matrix_validation(&model.with_truncation(small_n)?)?;
    let gap = validation.sub("direct = closed form").map(|s| s.value.0).unwrap_or(f64::NAN);
    r.push_sub("explicit matrices at small N", validation.passed(), gap, validation.tolerance.0);
    Ok(r.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn empty_checks_give_empty_run() {
        let s = parse_scenario(r#"{"name": "x", "state": {"tracial": {"n": 2}}, "hamiltonian": {"diagonal": [0, 0]}}"#).unwrap();
        let out = run_scenario(&s, None).unwrap();
        assert!(out.reports.is_empty());
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn gibbs_suite_passes() {
        let s = parse_scenario(
            r#"{"name": "g", "state": {"gibbs": {"hamiltonian": {"diagonal": [0, 1]}, "beta": 1.0}},
                "checks": ["kms", "holomorphy_bound", "beta_bounded", "pisier_haagerup", "extract_T",
                           "complete_bounded", "beta_max", "passivity_energy", "passivity_subspace",
                           "psi_decomposition", "anal_cont"],
                "params": {"samples": 50, "seed": 3}}"#,
        )
        .unwrap();
        let out = run_scenario(&s, None).unwrap();
        for r in &out.reports {
            assert_eq!(r.status, Status::Pass, "{r:#?}");
        }
    }

    #[test]
    fn ness_kms_fails() {
        let s = parse_scenario(
            r#"{"name": "n", "state": {"ness": [
                    {"hamiltonian": {"diagonal": [0, 1]}, "beta": 1.0},
                    {"hamiltonian": {"diagonal": [0, 1]}, "beta": 2.0}]},
                "checks": ["kms", "beta_bounded", "complete_bounded"],
                "params": {"samples": 20, "beta_grid": [1.0]}}"#,
        )
        .unwrap();
        let out = run_scenario(&s, None).unwrap();
        assert_eq!(out.reports[0].status, Status::Fail);
        assert_eq!(out.reports[1].status, Status::Pass);
        let cb = &out.reports[2];
        assert_eq!(cb.status, Status::Fail);
        assert!(cb.value("first_violating_k").is_some());
        assert_eq!(out.exit_code(), 1);
    }

    #[test]
    fn rank_deficient_states_are_flagged() {
        let s = parse_scenario(
            r#"{"name": "p", "state": {"pure": {"vector": [[1, 0], [0, 0]]}},
                "hamiltonian": {"diagonal": [0, 1]}, "checks": ["beta_bounded"]}"#,
        )
        .unwrap();
        let out = run_scenario(&s, None).unwrap();
        assert!(out.reports[0].notes.iter().any(|n| n.contains("rank 1 of 2")));
    }
}
