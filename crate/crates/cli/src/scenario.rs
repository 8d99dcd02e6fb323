//! Scenario files: schema, validation and the state/dynamics builders.

use std::collections::BTreeSet;
use std::path::Path;

use kmsbound_core::dynamics::Dynamics;
use kmsbound_core::gns::QuantumState;
use kmsbound_core::holomorphy::SequenceKind;
use kmsbound_core::operator::{c64, commutator, kron, operator_norm, ComplexMatrix, ComplexVector, HermitianOperator};
use kmsbound_core::{boundedness, Error as CoreError};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CHECKS: [&str; 12] = [
    "kms",
    "holomorphy_bound",
    "beta_bounded",
    "pisier_haagerup",
    "extract_T",
    "complete_bounded",
    "beta_max",
    "passivity_energy",
    "passivity_subspace",
    "psi_decomposition",
    "anal_cont",
    "remark",
];

pub const PERTURBATION_TOL: f64 = 1e-10;

/// Row-major list of rows, each entry `[re, im]`.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Diagonal(Vec<f64>),
    Explicit { matrix: MatrixSpec },
    /// `Σ_i 1 ⊗ … ⊗ H_i ⊗ … ⊗ 1`.
    TensorSum(Vec<HamiltonianSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSpec {
    pub hamiltonian: HamiltonianSpec,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbedSpec {
    pub hamiltonian: HamiltonianSpec,
    pub perturbation: HamiltonianSpec,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gibbs(GibbsSpec),
    Tracial { n: usize },
    Pure { vector: Vec<[f64; 2]> },
    TensorProduct(Vec<StateSpec>),
    Explicit { matrix: MatrixSpec },
    /// Product of Gibbs states evolving under the sum of their Hamiltonians.
    Ness(Vec<GibbsSpec>),
    /// Gibbs state of `H + V` evolving under `H`.
    Perturbed(PerturbedSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemarkSpec {
    pub kind: SequenceKind,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for RemarkSpec {
    fn default() -> Self {
        Self {
            kind: SequenceKind::LogSqrt,
            alpha: 0.3,
            beta: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub bisect: f64,
    pub complete_bounded: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bisect: boundedness::DEFAULT_BISECT_TOL,
            complete_bounded: boundedness::CB_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Inverse temperatures (holomorphy β) at which β-dependent checks run.
    pub beta_grid: Option<Vec<f64>>,
    pub k_max: usize,
    pub seed: u64,
    pub samples: usize,
    pub truncations: Vec<u64>,
    pub remark: RemarkSpec,
    pub tolerances: Tolerances,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            beta_grid: None,
            k_max: boundedness::DEFAULT_K_MAX,
            seed: 0,
            samples: 200,
            truncations: vec![1_000, 10_000, 100_000, 1_000_000],
            remark: RemarkSpec::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub state: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub params: Params,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

fn core_at(path: &str) -> impl Fn(CoreError) -> CliError + '_ {
    move |e| invalid(path, e.to_string())
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|e| {
        invalid(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    validate(&scenario)?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Semantic checks beyond the schema; building the system catches
/// dimension and positivity problems.
pub fn validate(s: &Scenario) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    for (i, c) in s.checks.iter().enumerate() {
        if !CHECKS.contains(&c.as_str()) {
            return Err(invalid(format!("checks[{i}]"), format!("unknown check {c:?}")));
        }
        if !seen.insert(c) {
            return Err(invalid(format!("checks[{i}]"), format!("duplicate check {c:?}")));
        }
    }
    let p = &s.params;
    if let Some(grid) = &p.beta_grid {
        if grid.is_empty() {
            return Err(invalid("params.beta_grid", "must not be empty"));
        }
        for (i, &b) in grid.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) {
                return Err(invalid(format!("params.beta_grid[{i}]"), format!("must be positive and finite, got {b}")));
            }
        }
    }
    if p.k_max == 0 {
        return Err(invalid("params.k_max", "must be at least 1"));
    }
    if p.truncations.is_empty() {
        return Err(invalid("params.truncations", "must not be empty"));
    }
    let first = p.remark.kind.first_index();
    for (i, &n) in p.truncations.iter().enumerate() {
        if n < first {
            return Err(invalid(format!("params.truncations[{i}]"), format!("must be at least {first}")));
        }
    }
    for (name, v) in [("alpha", p.remark.alpha), ("beta", p.remark.beta)] {
        if !(v > 0.0 && v < 0.5) {
            return Err(invalid(format!("params.remark.{name}"), format!("must lie in (0, 1/2), got {v}")));
        }
    }
    for (name, v) in [("bisect", p.tolerances.bisect), ("complete_bounded", p.tolerances.complete_bounded)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(format!("params.tolerances.{name}"), "must be positive"));
        }
    }
    build_system(s)?;
    Ok(())
}

fn matrix_from_spec(m: &MatrixSpec, path: &str) -> Result<ComplexMatrix, CliError> {
    let n = m.len();
    if n == 0 {
        return Err(invalid(path, "empty matrix"));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(invalid(format!("{path}[{i}]"), format!("expected {n} entries, found {}", row.len())));
        }
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| c64(m[i][j][0], m[i][j][1])))
}

pub fn build_hamiltonian(spec: &HamiltonianSpec, path: &str) -> Result<HermitianOperator, CliError> {
    match spec {
        HamiltonianSpec::Diagonal(values) => {
            if values.is_empty() {
                return Err(invalid(format!("{path}.diagonal"), "empty diagonal"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("{path}.diagonal"), "non-finite entry"));
            }
            Ok(HermitianOperator::from_real_diagonal(values))
        }
        HamiltonianSpec::Explicit { matrix } => {
            let p = format!("{path}.explicit.matrix");
            HermitianOperator::new(matrix_from_spec(matrix, &p)?).map_err(core_at(&p))
        }
        HamiltonianSpec::TensorSum(parts) => {
            let p = format!("{path}.tensor_sum");
            let hs = parts
                .iter()
                .enumerate()
                .map(|(i, h)| build_hamiltonian(h, &format!("{p}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            tensor_sum(&hs).map_err(core_at(&p))
        }
    }
}

/// `Σ_i 1 ⊗ … ⊗ H_i ⊗ … ⊗ 1`.
pub fn tensor_sum(hs: &[HermitianOperator]) -> Result<HermitianOperator, CoreError> {
    if hs.is_empty() {
        return Err(CoreError::InvalidArgument("empty tensor sum".into()));
    }
    let dims: Vec<usize> = hs.iter().map(|h| h.dim()).collect();
    let total = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
    if total > kmsbound_core::operator::DEFAULT_SIZE_LIMIT {
        return Err(CoreError::SizeOverflow {
            dim: total,
            limit: kmsbound_core::operator::DEFAULT_SIZE_LIMIT,
        });
    }
    let mut sum = ComplexMatrix::zeros(total, total);
    for (i, h) in hs.iter().enumerate() {
        let before: usize = dims[..i].iter().product();
        let after: usize = dims[i + 1..].iter().product();
        let term = kron(&kron(&ComplexMatrix::identity(before, before), h.matrix())?, &ComplexMatrix::identity(after, after))?;
        sum += term;
    }
    HermitianOperator::new(sum)
}

/// Product of Gibbs states with the summed dynamics.
pub fn build_ness(specs: &[(HermitianOperator, f64)]) -> Result<(QuantumState, Dynamics), CoreError> {
    if specs.len() < 2 {
        return Err(CoreError::InvalidArgument("a steady state needs at least two reservoirs".into()));
    }
    let states = specs
        .iter()
        .map(|(h, b)| QuantumState::gibbs(h, *b))
        .collect::<Result<Vec<_>, _>>()?;
    let hs: Vec<HermitianOperator> = specs.iter().map(|(h, _)| h.clone()).collect();
    let h = tensor_sum(&hs)?;
    Ok((QuantumState::tensor_product(&states)?, Dynamics::new(h)?))
}

/// Gibbs state of `H + V` with dynamics `H`, for `[H, V] = 0`.
pub fn build_perturbed(h: &HermitianOperator, v: &HermitianOperator, beta: f64) -> Result<(QuantumState, Dynamics), CoreError> {
    if h.dim() != v.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: h.dim(),
            found: v.dim(),
        });
    }
    let c = operator_norm(&commutator(h.matrix(), v.matrix()));
    if c > PERTURBATION_TOL {
        return Err(CoreError::NonCommutingPerturbation { commutator_norm: c });
    }
    let state = QuantumState::gibbs(&h.add(v)?, beta)?;
    Ok((state, Dynamics::new(h.clone())?))
}

/// State and, when derivable, its natural Hamiltonian.
fn build_state(spec: &StateSpec, path: &str) -> Result<(QuantumState, Option<HermitianOperator>), CliError> {
    match spec {
        StateSpec::Gibbs(g) => {
            let p = format!("{path}.gibbs");
            check_beta(g.beta, &format!("{p}.beta"))?;
            let h = build_hamiltonian(&g.hamiltonian, &format!("{p}.hamiltonian"))?;
            Ok((QuantumState::gibbs(&h, g.beta).map_err(core_at(&p))?, Some(h)))
        }
        StateSpec::Tracial { n } => {
            let p = format!("{path}.tracial.n");
            Ok((QuantumState::tracial(*n).map_err(core_at(&p))?, None))
        }
        StateSpec::Pure { vector } => {
            let p = format!("{path}.pure.vector");
            let v = ComplexVector::from_iterator(vector.len(), vector.iter().map(|z| c64(z[0], z[1])));
            Ok((QuantumState::pure(&v).map_err(core_at(&p))?, None))
        }
        StateSpec::Explicit { matrix } => {
            let p = format!("{path}.explicit.matrix");
            Ok((QuantumState::new(matrix_from_spec(matrix, &p)?).map_err(core_at(&p))?, None))
        }
        StateSpec::TensorProduct(parts) => {
            let p = format!("{path}.tensor_product");
            if parts.is_empty() {
                return Err(invalid(p, "empty tensor product"));
            }
            let built = parts
                .iter()
                .enumerate()
                .map(|(i, s)| build_state(s, &format!("{p}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let states: Vec<QuantumState> = built.iter().map(|(s, _)| s.clone()).collect();
            let state = QuantumState::tensor_product(&states).map_err(core_at(&p))?;
            let h = if built.iter().all(|(_, h)| h.is_some()) {
                let hs: Vec<HermitianOperator> = built.into_iter().map(|(_, h)| h.expect("checked")).collect();
                Some(tensor_sum(&hs).map_err(core_at(&p))?)
            } else {
                None
            };
            Ok((state, h))
        }
        StateSpec::Ness(factors) => {
            let p = format!("{path}.ness");
            let specs = factors
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let q = format!("{p}[{i}]");
                    check_beta(g.beta, &format!("{q}.beta"))?;
                    Ok((build_hamiltonian(&g.hamiltonian, &format!("{q}.hamiltonian"))?, g.beta))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let (state, dynamics) = build_ness(&specs).map_err(core_at(&p))?;
            Ok((state, Some(dynamics.hamiltonian().clone())))
        }
        StateSpec::Perturbed(ps) => {
            let p = format!("{path}.perturbed");
            check_beta(ps.beta, &format!("{p}.beta"))?;
            let h = build_hamiltonian(&ps.hamiltonian, &format!("{p}.hamiltonian"))?;
            let v = build_hamiltonian(&ps.perturbation, &format!("{p}.perturbation"))?;
            let (state, dynamics) = build_perturbed(&h, &v, ps.beta).map_err(core_at(&p))?;
            Ok((state, Some(dynamics.hamiltonian().clone())))
        }
    }
}

fn check_beta(beta: f64, path: &str) -> Result<(), CliError> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid(path, format!("inverse temperature must be finite and >= 0, got {beta}")));
    }
    Ok(())
}

/// State and dynamics of a scenario. An explicit `hamiltonian` overrides
/// the one derived from the state.
pub fn build_system(s: &Scenario) -> Result<(QuantumState, Dynamics), CliError> {
    let (state, derived) = build_state(&s.state, "state")?;
    let h = match (&s.hamiltonian, derived) {
        (Some(spec), _) => build_hamiltonian(spec, "hamiltonian")?,
        (None, Some(h)) => h,
        (None, None) => return Err(invalid("hamiltonian", "required: the state does not determine a Hamiltonian")),
    };
    if h.dim() != state.dim() {
        return Err(invalid(
            "hamiltonian",
            format!("dimension {} does not match state dimension {}", h.dim(), state.dim()),
        ));
    }
    let dynamics = Dynamics::new(h).map_err(core_at("hamiltonian"))?;
    let defect = dynamics.invariance_defect(state.rho());
    if defect > kmsbound_core::dynamics::INVARIANCE_TOL {
        return Err(invalid("hamiltonian", CoreError::NotInvariant { commutator_norm: defect }.to_string()));
    }
    Ok((state, dynamics))
}

/// Natural inverse temperatures of the state: its own β for Gibbs states,
/// the minimum over reservoirs for steady states.
pub fn default_beta_grid(s: &Scenario) -> Vec<f64> {
    fn natural(spec: &StateSpec) -> Option<f64> {
        match spec {
            StateSpec::Gibbs(g) if g.beta > 0.0 => Some(g.beta),
            StateSpec::Perturbed(p) if p.beta > 0.0 => Some(p.beta),
            StateSpec::Ness(f) => f.iter().map(|g| g.beta).filter(|&b| b > 0.0).reduce(f64::min),
            StateSpec::TensorProduct(parts) => parts.iter().filter_map(natural).reduce(f64::min),
            _ => None,
        }
    }
    s.params
        .beta_grid
        .clone()
        .unwrap_or_else(|| vec![natural(&s.state).unwrap_or(1.0)])
}
