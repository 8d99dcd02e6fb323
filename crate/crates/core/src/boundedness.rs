//! The map `Φ_b(X) = e^{−bK} XΩ`, its exact norm, tensor powers and the
//! estimates built on them.
//!
//! With `[H, ρ] = 0` and the Hilbert–Schmidt realization,
//! `Φ_b(X) = e^{−bH} X ρ^{1/2} e^{bH}`, so
//! `‖Φ_b(X)‖² = tr(X* P X Q)` with `P = e^{−2bH}` and `Q = ρ e^{2bH}`.
//! Over the unit ball the supremum is the sorted pairing `Σ p↓ q↓`,
//! attained by the unitary sending the `q`-ordered eigenbasis onto the
//! `p`-ordered one.
//!
//! Parameters named `b` are exponents of `Φ`; the matching holomorphy
//! (inverse-temperature) parameter is `β = 2b`.

use rayon::prelude::*;

use crate::dynamics::{kms_residual, liouvillean, Dynamics, Liouvillean, KMS_TOL};
use crate::error::{Error, Result};
use crate::gns::{gns_from_state, GnsTriple, ModularData, QuantumState, KERNEL_TOL};
use crate::operator::{
    c64, commutator, operator_norm, psd_leq, ComplexMatrix, HermitianOperator, DEFAULT_SIZE_LIMIT,
};
use crate::report::{ConditionReport, Provenance, Status, Witness};
use crate::sampling::{contraction_from, derive_seed, ginibre, rng_from_seed, unitary_from};

pub const ORACLE_SLACK: f64 = 1e-9;
pub const CB_TOL: f64 = 1e-10;
pub const PH_TOL: f64 = 1e-9;
pub const T_TOL: f64 = 1e-10;
pub const DEFAULT_K_MAX: usize = 3;
/// Holomorphy-β resolution of [`estimate_beta_max`].
pub const DEFAULT_BISECT_TOL: f64 = 1e-10;
/// Bracket of [`estimate_beta_max`] in holomorphy units.
pub const BETA_MAX_BRACKET: (f64, f64) = (1e-3, 64.0);
const CLUSTER_TOL: f64 = 1e-9;
const MAX_PERMUTATION_DIM: usize = 6;

#[derive(Debug, Clone)]
pub struct PhiMap {
    b: f64,
    n: usize,
    /// Joint eigenbasis of `H` and `ρ` (columns).
    basis: ComplexMatrix,
    /// Energies shifted by the spectral midpoint of `H`.
    energies: Vec<f64>,
    weights: Vec<f64>,
    left: ComplexMatrix,
    right: ComplexMatrix,
}

impl PhiMap {
    pub fn new(state: &QuantumState, dynamics: &Dynamics, b: f64) -> Result<Self> {
        if !b.is_finite() || b < 0.0 {
            return Err(Error::InvalidArgument(format!("exponent must be finite and >= 0, got {b}")));
        }
        let n = state.dim();
        if dynamics.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: dynamics.dim(),
            });
        }
        let defect = dynamics.invariance_defect(state.rho());
        if defect > crate::dynamics::INVARIANCE_TOL {
            return Err(Error::NotInvariant {
                commutator_norm: defect,
            });
        }
        let (basis, energies, weights) = joint_eigenbasis(dynamics, state)?;
        let mid = 0.5 * (dynamics.spectral().min() + dynamics.spectral().max());
        let energies: Vec<f64> = energies.into_iter().map(|e| e - mid).collect();
        let mut pm = Self {
            b,
            n,
            basis,
            energies,
            weights,
            left: ComplexMatrix::zeros(0, 0),
            right: ComplexMatrix::zeros(0, 0),
        };
        pm.build_factors();
        Ok(pm)
    }

    fn build_factors(&mut self) {
        let b = self.b;
        let diag = |f: &dyn Fn(usize) -> f64| {
            let d = ComplexMatrix::from_fn(self.n, self.n, |i, j| if i == j { c64(f(i), 0.0) } else { c64(0.0, 0.0) });
            &self.basis * d * self.basis.adjoint()
        };
        self.left = diag(&|i| (-b * self.energies[i]).exp());
        self.right = diag(&|i| self.weights[i].sqrt() * (b * self.energies[i]).exp());
    }

    /// Same state and dynamics, different exponent.
    pub fn with_exponent(&self, b: f64) -> Result<Self> {
        if !b.is_finite() || b < 0.0 {
            return Err(Error::InvalidArgument(format!("exponent must be finite and >= 0, got {b}")));
        }
        let mut pm = self.clone();
        pm.b = b;
        pm.build_factors();
        Ok(pm)
    }

    /// The exponent `b` of `Φ_b`.
    pub fn exponent(&self) -> f64 {
        self.b
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn left_factor(&self) -> &ComplexMatrix {
        &self.left
    }

    pub fn right_factor(&self) -> &ComplexMatrix {
        &self.right
    }

    /// `Φ_b(X) = e^{−bH} X ρ^{1/2} e^{bH}` as a matrix.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        &self.left * x * &self.right
    }

    /// `‖Φ_b(X)‖` in the GNS norm.
    pub fn image_norm(&self, x: &ComplexMatrix) -> f64 {
        self.apply(x).norm()
    }

    /// Eigenvalues of `e^{−2bH}` in joint-basis order.
    pub fn p_values(&self) -> Vec<f64> {
        self.energies.iter().map(|&e| (-2.0 * self.b * e).exp()).collect()
    }

    /// Eigenvalues of `ρ e^{2bH}` in joint-basis order.
    pub fn q_values(&self) -> Vec<f64> {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * (2.0 * self.b * e).exp())
            .collect()
    }

    /// Unitary attaining the norm: maps the `q`-descending eigenvectors onto
    /// the `p`-descending ones.
    pub fn aligned_witness(&self) -> ComplexMatrix {
        let sigma = descending_order(&self.p_values());
        let tau = descending_order(&self.q_values());
        let pairs: Vec<(usize, usize)> = sigma.into_iter().zip(tau).collect();
        self.permutation_unitary(&pairs)
    }

    fn permutation_unitary(&self, pairs: &[(usize, usize)]) -> ComplexMatrix {
        let mut x = ComplexMatrix::zeros(self.n, self.n);
        for &(to, from) in pairs {
            x += self.basis.column(to) * self.basis.column(from).adjoint();
        }
        x
    }

    /// Every permutation of the joint eigenbasis, when `n` is small enough
    /// to enumerate.
    pub fn permutation_witnesses(&self) -> Vec<ComplexMatrix> {
        if self.n > MAX_PERMUTATION_DIM {
            return vec![self.aligned_witness()];
        }
        permutations(self.n)
            .into_iter()
            .map(|perm| {
                let pairs: Vec<(usize, usize)> = perm.into_iter().enumerate().map(|(i, j)| (j, i)).collect();
                self.permutation_unitary(&pairs)
            })
            .collect()
    }
}

/// Orthonormal basis diagonalizing both `H` and `ρ`, with the energy and
/// weight of each vector.
fn joint_eigenbasis(dynamics: &Dynamics, state: &QuantumState) -> Result<(ComplexMatrix, Vec<f64>, Vec<f64>)> {
    let hd = dynamics.spectral();
    let n = hd.dim();
    let ev = hd.eigenvalues();
    let scale = hd.max().abs().max(hd.min().abs()).max(1.0);
    let mut basis = ComplexMatrix::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && ev[end] - ev[end - 1] <= CLUSTER_TOL * scale {
            end += 1;
        }
        let block = hd.eigenvectors().columns(start, end - start).into_owned();
        let e = ev[start..end].iter().sum::<f64>() / (end - start) as f64;
        let inner = state.rho().compress(&block).eig()?;
        let rotated = &block * inner.eigenvectors();
        for (j, &w) in inner.eigenvalues().iter().enumerate() {
            basis.set_column(start + j, &rotated.column(j));
            energies.push(e);
            weights.push(w.max(0.0));
        }
        start = end;
    }
    Ok((basis, energies, weights))
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    idx
}

/// `Σ p↓ q↓`.
pub fn sorted_pairing(p: &[f64], q: &[f64]) -> f64 {
    let mut p = p.to_vec();
    let mut q = q.to_vec();
    p.sort_by(|a, b| b.total_cmp(a));
    q.sort_by(|a, b| b.total_cmp(a));
    p.iter().zip(&q).map(|(a, b)| a * b).sum()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    // Heap's algorithm
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

pub fn phi_norm_exact(pm: &PhiMap) -> f64 {
    sorted_pairing(&pm.p_values(), &pm.q_values()).sqrt()
}

/// Brute-force lower bound: maximum of `‖Φ_b(X)‖` over random unitaries and
/// contractions together with all eigenbasis permutation unitaries.
pub fn phi_norm_oracle(pm: &PhiMap, n_samples: usize, seed: u64) -> f64 {
    let structured = pm
        .permutation_witnesses()
        .iter()
        .map(|x| pm.image_norm(x))
        .fold(pm.image_norm(&ComplexMatrix::identity(pm.n, pm.n)), f64::max);
    random_sup(pm, n_samples, seed).max(structured)
}

/// Random part of [`phi_norm_oracle`] alone.
pub fn random_sup(pm: &PhiMap, n_samples: usize, seed: u64) -> f64 {
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let x = if i % 2 == 0 {
                unitary_from(&mut rng, pm.n)
            } else {
                contraction_from(&mut rng, pm.n)
            };
            pm.image_norm(&x)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct BoundednessCertificate {
    pub exponent: f64,
    pub norm_exact: f64,
    pub norm_oracle_lower: f64,
    pub c_constant: f64,
    pub passed: bool,
}

/// Exact norm of `Φ_b` cross-checked against the oracle.
pub fn beta_bounded_check(pm: &PhiMap, n_samples: usize, seed: u64) -> (BoundednessCertificate, ConditionReport) {
    let exact = phi_norm_exact(pm);
    let oracle = phi_norm_oracle(pm, n_samples, seed);
    let aligned = pm.image_norm(&pm.aligned_witness());
    let gap = (aligned - exact).abs();
    let passed = oracle <= exact + ORACLE_SLACK && gap <= ORACLE_SLACK;
    let cert = BoundednessCertificate {
        exponent: pm.b,
        norm_exact: exact,
        norm_oracle_lower: oracle,
        c_constant: exact * exact,
        passed,
    };
    let mut r = ConditionReport::new(
        "beta_bounded",
        Provenance::Sampled {
            seed,
            n: n_samples as u64,
        },
        ORACLE_SLACK,
    );
    r.set_value("beta", 2.0 * pm.b);
    r.set_value("phi_exponent", pm.b);
    r.set_value("norm", exact);
    r.set_value("norm_oracle", oracle);
    r.set_value("c_constant", exact * exact);
    r.push_sub("oracle <= exact", oracle <= exact + ORACLE_SLACK, oracle - exact, ORACLE_SLACK);
    r.push_sub("aligned witness attains exact", gap <= ORACLE_SLACK, gap, ORACLE_SLACK);
    if !passed {
        let w = pm.aligned_witness();
        r.witness = Some(Witness::vector("aligned witness", aligned, &crate::operator::vectorize(&w)));
    }
    (cert, r.finish())
}

/// `‖Φ_{b′}‖² ≤ 1 + ‖Φ_b‖²` for `b′ ≤ b`.
pub fn monotonicity_check(pm: &PhiMap, pm_prime: &PhiMap) -> Result<ConditionReport> {
    if pm_prime.b > pm.b {
        return Err(Error::InvalidArgument(format!(
            "need b' <= b, got b' = {} and b = {}",
            pm_prime.b, pm.b
        )));
    }
    let big = phi_norm_exact(pm).powi(2);
    let small = phi_norm_exact(pm_prime).powi(2);
    let mut r = ConditionReport::new("monotonicity", Provenance::Exact, ORACLE_SLACK);
    r.set_value("norm_sq", big);
    r.set_value("norm_sq_prime", small);
    r.push_sub("||Phi_b'||^2 <= 1 + ||Phi_b||^2", small <= 1.0 + big + ORACLE_SLACK, small - 1.0 - big, ORACLE_SLACK);
    Ok(r.finish())
}

/// Domination `e^{−2bK} ≤ 1 + ΔE` and its sampled consequences, valid when
/// `‖Φ_b‖ ≤ 1`.
pub fn pisier_haagerup_check(
    md: &ModularData,
    triple: &GnsTriple,
    lv: &Liouvillean,
    pm: &PhiMap,
    samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    let norm = phi_norm_exact(pm);
    let mut r = ConditionReport::new(
        "pisier_haagerup",
        Provenance::Sampled {
            seed,
            n: samples as u64,
        },
        PH_TOL,
    );
    r.set_value("beta", 2.0 * pm.b);
    r.set_value("phi_norm", norm);
    if norm > 1.0 + PH_TOL {
        r.note(format!("||Phi|| = {norm} > 1: hypothesis fails, not bounded by one"));
        for name in ["domination on samples", "e^{-2bK} <= 1 + Delta E", "unital case phi = psi = omega"] {
            r.push_skipped(name, norm, 1.0 + PH_TOL);
        }
        return Ok(r.finish());
    }

    let d = lv.dim();
    let one_plus = HermitianOperator::identity(d).add(&md.delta_e())?;
    let lhs = lv.damped(2.0 * pm.b);
    let order = psd_leq(&lhs, &one_plus, PH_TOL)?;
    r.set_value("min_eigenvalue", order.min_eigenvalue);

    let mut rng = rng_from_seed(seed);
    let mut dom_worst = f64::NEG_INFINITY;
    let mut unital_worst = f64::NEG_INFINITY;
    let e_half = lv.damped(pm.b);
    for _ in 0..samples {
        let x = contraction_from(&mut rng, triple.n());
        let xo = triple.x_omega(&x);
        let image = (e_half.matrix() * &xo).norm_squared();
        let bound = xo.norm_squared() + triple.x_omega(&x.adjoint()).norm_squared();
        dom_worst = dom_worst.max(image - bound);
        unital_worst = unital_worst.max(image - norm * norm * bound);
    }
    r.push_sub("domination on samples", dom_worst <= PH_TOL, dom_worst, PH_TOL);
    r.push_sub("e^{-2bK} <= 1 + Delta E", order.holds, order.min_eigenvalue, order.threshold);
    r.push_sub("unital case phi = psi = omega", unital_worst <= PH_TOL, unital_worst, PH_TOL);
    if !order.holds {
        r.witness = Some(Witness::vector("min eigenvector of 1 + Delta E - e^{-2bK}", order.min_eigenvalue, &order.eigenvector));
    }
    Ok(r.finish())
}

/// `T = −2bK (log Δ)^{-1}` on `(ker log Δ)^⊥` in `H₀` coordinates.
pub fn extract_t(
    md: &ModularData,
    lv: &Liouvillean,
    pm: &PhiMap,
    k_max: usize,
) -> Result<(HermitianOperator, ConditionReport)> {
    let b = pm.b;
    let k = md.restrict(lv.operator());
    let delta = md.delta();
    let scale = k.norm().max(delta.norm()).max(1.0);
    let kd = operator_norm(&commutator(k.matrix(), delta.matrix()));
    if kd > T_TOL * scale * 100.0 {
        return Err(Error::NonCommuting { residual: kd });
    }
    let log_pinv = md
        .log_delta()
        .eig()?
        .apply(|l| if l.abs() > KERNEL_TOL { 1.0 / l } else { 0.0 })?;
    let t = HermitianOperator::new((k.matrix() * log_pinv.matrix()) * c64(-2.0 * b, 0.0))
        .map_err(|e| match e {
            Error::NotHermitian { residual } => Error::NonCommuting { residual },
            other => other,
        })?;

    let m = t.dim();
    let lower = psd_leq(&HermitianOperator::zeros(m), &t, T_TOL)?;
    let upper = psd_leq(&t, &HermitianOperator::identity(m), T_TOL)?;
    let t_delta = operator_norm(&commutator(t.matrix(), delta.matrix()));
    let t_k = operator_norm(&commutator(t.matrix(), k.matrix()));
    let jtj = operator_norm(&(md.j().conjugate_linear(t.matrix()) - t.matrix()));
    let co_kernel = ComplexMatrix::identity(m, m) - md.e0().matrix();
    let recon = operator_norm(&((k.matrix() * c64(2.0 * b, 0.0) + t.matrix() * md.log_delta().matrix()) * &co_kernel));
    let kernel_leak = operator_norm(&(k.matrix() * md.e0().matrix()));

    let certified = completely_bounded_up_to(pm, k_max, CB_TOL)?.is_none();
    let mut r = ConditionReport::new("extract_T", Provenance::Exact, T_TOL);
    r.set_value("beta", 2.0 * b);
    r.set_value("t_min", lower.min_eigenvalue);
    r.set_value("t_max", 1.0 - upper.min_eigenvalue);
    r.set_value("reconstruction", recon);
    r.set_value("kernel_leak", kernel_leak);
    r.push_sub("T >= 0", lower.holds, lower.min_eigenvalue, lower.threshold);
    r.push_sub("T <= 1", upper.holds, upper.min_eigenvalue, upper.threshold);
    r.push_sub("[T, Delta] = 0", t_delta <= T_TOL * scale, t_delta, T_TOL * scale);
    r.push_sub("[T, K] = 0", t_k <= T_TOL * scale, t_k, T_TOL * scale);
    r.push_sub("J T J = T", jtj <= T_TOL * scale, jtj, T_TOL * scale);
    r.push_sub("2bK = -T log Delta off ker", recon <= T_TOL * scale, recon, T_TOL * scale);
    if !lower.holds {
        r.witness = Some(Witness::vector("T eigenvector", lower.min_eigenvalue, &lower.eigenvector));
    } else if !upper.holds {
        r.witness = Some(Witness::vector("T eigenvector", 1.0 - upper.min_eigenvalue, &upper.eigenvector));
    }
    let mut r = r.finish();
    if !certified {
        r.note(format!("complete boundedness not certified up to k = {k_max}; result is advisory"));
        if r.status == Status::Fail || r.status == Status::Pass {
            r.status = Status::Advisory;
        }
    }
    Ok((t, r))
}

fn tensor_values(values: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..k {
        out = out.iter().flat_map(|&a| values.iter().map(move |&v| a * v)).collect();
    }
    out
}

fn check_tensor_size(n: usize, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidArgument("tensor power must be >= 1".into()));
    }
    let dim = (0..k).try_fold(1usize, |acc, _| acc.checked_mul(n)).unwrap_or(usize::MAX);
    let sq = dim.saturating_mul(dim);
    if sq > DEFAULT_SIZE_LIMIT {
        return Err(Error::SizeOverflow {
            dim: sq,
            limit: DEFAULT_SIZE_LIMIT,
        });
    }
    Ok(dim)
}

/// `‖Φ_b^{⊗k}‖` from the sorted pairing of the composite spectra.
pub fn tensor_power_norm(pm: &PhiMap, k: usize) -> Result<f64> {
    check_tensor_size(pm.n, k)?;
    Ok(sorted_pairing(&tensor_values(&pm.p_values(), k), &tensor_values(&pm.q_values(), k)).sqrt())
}

fn kron_power(a: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let mut out = a.clone();
    for _ in 1..k {
        out = out.kronecker(a);
    }
    out
}

/// Permutation of tensor legs `|i₁…i_k⟩ ↦ |i_{π(1)}…i_{π(k)}⟩`.
pub fn leg_permutation(n: usize, perm: &[usize]) -> ComplexMatrix {
    let k = perm.len();
    let dim = n.pow(k as u32);
    let mut m = ComplexMatrix::zeros(dim, dim);
    let mut digits = vec![0usize; k];
    for idx in 0..dim {
        let mut r = idx;
        for d in (0..k).rev() {
            digits[d] = r % n;
            r /= n;
        }
        let target = perm.iter().fold(0, |acc, &p| acc * n + digits[p]);
        m[(target, idx)] = c64(1.0, 0.0);
    }
    m
}

/// Lower bound for `‖Φ_b^{⊗k}‖`: random composite contractions, product
/// contractions, leg permutations dressed with product unitaries, and the
/// composite aligned witness.
pub fn tensor_power_oracle(pm: &PhiMap, k: usize, n_samples: usize, seed: u64) -> Result<f64> {
    let dim = check_tensor_size(pm.n, k)?;
    let left = kron_power(&pm.left, k);
    let right = kron_power(&pm.right, k);
    let image = |x: &ComplexMatrix| (&left * x * &right).norm();

    let basis = kron_power(&pm.basis, k);
    let p = tensor_values(&pm.p_values(), k);
    let q = tensor_values(&pm.q_values(), k);
    let mut aligned = ComplexMatrix::zeros(dim, dim);
    for (to, from) in descending_order(&p).into_iter().zip(descending_order(&q)) {
        aligned += basis.column(to) * basis.column(from).adjoint();
    }
    let mut best = image(&aligned).max(image(&ComplexMatrix::identity(dim, dim)));
    let legs = permutations(k);
    for perm in &legs {
        best = best.max(image(&leg_permutation(pm.n, perm)));
    }

    let n = pm.n;
    let sampled = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let x = match i % 3 {
                0 => contraction_from(&mut rng, dim),
                1 => {
                    let factors: Vec<ComplexMatrix> = (0..k).map(|_| contraction_from(&mut rng, n)).collect();
                    factors[1..].iter().fold(factors[0].clone(), |acc, f| acc.kronecker(f))
                }
                _ => {
                    let perm = &legs[(i as usize / 3) % legs.len()];
                    let u: Vec<ComplexMatrix> = (0..k).map(|_| unitary_from(&mut rng, n)).collect();
                    let prod = u[1..].iter().fold(u[0].clone(), |acc, f| acc.kronecker(f));
                    leg_permutation(n, perm) * prod
                }
            };
            image(&x)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best.max(sampled))
}

/// First `k ≤ k_max` with `‖Φ_b^{⊗k}‖ > 1 + tol`, and that norm.
pub fn completely_bounded_up_to(pm: &PhiMap, k_max: usize, tol: f64) -> Result<Option<(usize, f64)>> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    for k in 1..=k_max {
        let norm = tensor_power_norm(pm, k)?;
        if norm > 1.0 + tol {
            return Ok(Some((k, norm)));
        }
    }
    Ok(None)
}

/// Tensor powers up to `k_max` have norm at most one; also certifies
/// `e^{−2bK} ≤ max(1, Δ)` with `Δ` extended by one off `H₀`.
pub fn is_completely_beta_bounded(
    pm: &PhiMap,
    md: &ModularData,
    lv: &Liouvillean,
    k_max: usize,
    tol: f64,
) -> Result<(bool, ConditionReport)> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }
    let mut r = ConditionReport::new("complete_bounded", Provenance::Exact, tol);
    r.set_value("beta", 2.0 * pm.b);
    let mut first = None;
    for k in 1..=k_max {
        let norm = tensor_power_norm(pm, k)?;
        r.set_value(format!("norm_k{k}"), norm);
        r.push_sub(format!("||Phi^(x){k}|| <= 1"), norm <= 1.0 + tol, norm, 1.0 + tol);
        if first.is_none() && norm > 1.0 + tol {
            first = Some(k);
        }
    }
    let max_delta = md.delta_spectral().apply(|l| l.max(1.0))?;
    let bound = md.extend(&max_delta, 1.0);
    let order = psd_leq(&lv.damped(2.0 * pm.b), &bound, tol)?;
    r.set_value("certificate_min_eigenvalue", order.min_eigenvalue);
    r.push_sub("e^{-2bK} <= max(1, Delta)", order.holds, order.min_eigenvalue, order.threshold);
    match first {
        Some(k) => {
            r.set_value("first_violating_k", k as f64);
            r.witness = Some(Witness::scalar(format!("tensor power k = {k}"), tensor_power_norm(pm, k)?));
        }
        None if !order.holds => {
            r.witness = Some(Witness::vector("certificate eigenvector", order.min_eigenvalue, &order.eigenvector));
        }
        None => {}
    }
    Ok((first.is_none(), r.finish()))
}

/// Largest holomorphy `β = 2b` for which tensor powers up to `k_max` stay
/// bounded by one, by bisection on `b`. Returns `+∞` when the predicate
/// holds at the top of the bracket and `0` when it fails at the bottom.
pub fn estimate_beta_max(
    state: &QuantumState,
    dynamics: &Dynamics,
    k_max: usize,
    bisect_tol: f64,
    seed: u64,
) -> Result<(f64, ConditionReport)> {
    if bisect_tol.is_nan() || bisect_tol <= 0.0 {
        return Err(Error::InvalidArgument("bisect_tol must be positive".into()));
    }
    let (lo_beta, hi_beta) = BETA_MAX_BRACKET;
    let base = PhiMap::new(state, dynamics, lo_beta / 2.0)?;
    let holds = |beta: f64| -> Result<bool> {
        Ok(completely_bounded_up_to(&base.with_exponent(beta / 2.0)?, k_max, CB_TOL)?.is_none())
    };
    let mut r = ConditionReport::new(
        "beta_max",
        Provenance::Sampled { seed, n: 20 },
        bisect_tol,
    );
    r.set_value("k_max", k_max as f64);
    r.set_value("bisect_tol", bisect_tol);

    if !holds(lo_beta)? {
        r.set_value("beta_max", 0.0);
        r.note(format!(
            "tensor powers exceed one already at beta = {lo_beta}; not completely bounded at any probed beta"
        ));
        return Ok((0.0, r.with_status(Status::Advisory)));
    }
    let mut lo = lo_beta;
    let mut hi = lo;
    loop {
        let next = (hi * 2.0).min(hi_beta);
        if !holds(next)? {
            hi = next;
            break;
        }
        lo = next;
        if next >= hi_beta {
            r.set_value("beta_max", f64::INFINITY);
            r.note("predicate holds at the upper probe: ground state or trivial dynamics");
            r.push_sub("predicate at upper probe", true, hi_beta, hi_beta);
            return Ok((f64::INFINITY, r.finish()));
        }
        hi = next;
    }
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta_max = lo;
    r.set_value("beta_max", beta_max);
    let triple = gns_from_state(state)?;
    let lv = liouvillean(dynamics, &triple)?;
    let (res, _) = kms_residual(&triple, dynamics, &lv, beta_max, 20, 50, seed)?;
    r.set_value("kms_residual", res);
    r.push_sub("KMS at beta_max", res <= KMS_TOL, res, KMS_TOL);
    Ok((beta_max, r.finish()))
}

/// Shift and clock matrices generating `M_n`.
pub fn shift_clock(n: usize) -> (ComplexMatrix, ComplexMatrix) {
    let shift = ComplexMatrix::from_fn(n, n, |i, j| if i == (j + 1) % n { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
    let w = 2.0 * std::f64::consts::PI / n as f64;
    let clock = ComplexMatrix::from_fn(n, n, |i, j| if i == j { crate::operator::C64::from_polar(1.0, w * i as f64) } else { c64(0.0, 0.0) });
    (shift, clock)
}

/// Sampled `sup ‖Φ_b(X)‖` over the unit ball of the span of words of length
/// at most `depth` in the shift and clock generators.
pub fn generated_subalgebra_sup(pm: &PhiMap, depth: usize, n_samples: usize, seed: u64) -> f64 {
    let n = pm.n;
    let (s, z) = shift_clock(n);
    let mut words = vec![ComplexMatrix::identity(n, n)];
    let mut frontier = words.clone();
    for _ in 0..depth {
        let next: Vec<ComplexMatrix> = frontier.iter().flat_map(|w| [w * &s, w * &z]).collect();
        words.extend(next.iter().cloned());
        frontier = next;
    }
    // orthonormal basis of the span in the Hilbert–Schmidt inner product
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    for w in words {
        let mut v = w;
        for b in &basis {
            let overlap = b.dotc(&v);
            v -= b * overlap;
        }
        let norm = v.norm();
        if norm > 1e-10 {
            basis.push(v / c64(norm, 0.0));
        }
    }
    let normalized = |x: ComplexMatrix| {
        let norm = operator_norm(&x);
        if norm > 0.0 {
            x / c64(norm, 0.0)
        } else {
            x
        }
    };
    let aligned = pm.aligned_witness();
    let projected = basis.iter().fold(ComplexMatrix::zeros(n, n), |acc, b| acc + b * b.dotc(&aligned));
    let mut best = pm.image_norm(&normalized(projected));
    let mut rng = rng_from_seed(seed);
    for _ in 0..n_samples {
        let coeffs = ginibre(&mut rng, basis.len(), 1);
        let x = basis
            .iter()
            .zip(coeffs.iter())
            .fold(ComplexMatrix::zeros(n, n), |acc, (b, &c)| acc + b * c);
        best = best.max(pm.image_norm(&normalized(x)));
    }
    best
}

/// `‖e^{−bK}‖` on the GNS space.
pub fn damped_norm(lv: &Liouvillean, b: f64) -> f64 {
    (-b * lv.spectral().min()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gns::modular_data;
    use crate::operator::real_diagonal;
    use crate::sampling::random_selfadjoint;

    fn two_level(beta0: f64) -> (QuantumState, Dynamics) {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        (QuantumState::gibbs(&h, beta0).unwrap(), Dynamics::new(h).unwrap())
    }

    fn ness() -> (QuantumState, Dynamics) {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let s1 = QuantumState::gibbs(&h, 1.0).unwrap();
        let s2 = QuantumState::gibbs(&h, 2.0).unwrap();
        let st = QuantumState::tensor_product(&[s1, s2]).unwrap();
        let hh = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 1.0, 2.0]);
        (st, Dynamics::new(hh).unwrap())
    }

    #[test]
    fn gibbs_norm_is_one_at_half_beta() {
        for beta0 in [0.5, 1.0, 2.0] {
            let (st, d) = two_level(beta0);
            let pm = PhiMap::new(&st, &d, beta0 / 2.0).unwrap();
            assert!((phi_norm_exact(&pm) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_norm_value() {
        let (st, d) = two_level(1.0);
        let pm = PhiMap::new(&st, &d, 1.0).unwrap();
        let e = 1.0f64.exp();
        let expected = (e + (-2.0f64).exp()) / (1.0 + (-1.0f64).exp());
        assert!((phi_norm_exact(&pm).powi(2) - expected).abs() < 1e-12);
        let oracle = phi_norm_oracle(&pm, 2000, 1);
        assert!(oracle <= phi_norm_exact(&pm) + ORACLE_SLACK);
        assert!((oracle - phi_norm_exact(&pm)).abs() < 1e-9);
    }

    #[test]
    fn zero_exponent_norm_is_one() {
        let st = QuantumState::new(real_diagonal(&[0.5, 0.3, 0.2])).unwrap();
        let d = Dynamics::new(HermitianOperator::from_real_diagonal(&[0.0, 1.0, 3.0])).unwrap();
        let pm = PhiMap::new(&st, &d, 0.0).unwrap();
        assert!((phi_norm_exact(&pm) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn phi_matches_liouvillean_route() {
        let h = random_selfadjoint(3, 2);
        let st = QuantumState::gibbs(&h, 0.6).unwrap();
        let d = Dynamics::new(h).unwrap();
        let g = gns_from_state(&st).unwrap();
        let lv = liouvillean(&d, &g).unwrap();
        let pm = PhiMap::new(&st, &d, 0.45).unwrap();
        let x = crate::sampling::random_contraction(3, 5);
        let via_k = lv.damped(0.45).matrix() * g.x_omega(&x);
        let direct = g.vector(&pm.apply(&x));
        assert!((via_k - direct).norm() < 1e-12);
        assert!((pm.apply(&ComplexMatrix::identity(3, 3)).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_is_monotone_in_samples() {
        let (st, d) = ness();
        let pm = PhiMap::new(&st, &d, 0.8).unwrap();
        let a = random_sup(&pm, 10, 3);
        let b = random_sup(&pm, 100, 3);
        assert!(b >= a);
    }

    #[test]
    fn rescaling_law() {
        let st = QuantumState::new(real_diagonal(&[0.6, 0.3, 0.1])).unwrap();
        let h = HermitianOperator::from_real_diagonal(&[0.2, -1.0, 0.7]);
        let lam = 2.5;
        let a = PhiMap::new(&st, &Dynamics::new(h.clone()).unwrap(), lam * 0.3).unwrap();
        let b = PhiMap::new(&st, &Dynamics::new(h.scale(lam)).unwrap(), 0.3).unwrap();
        assert!((phi_norm_exact(&a) - phi_norm_exact(&b)).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_examples() {
        let (st, d) = two_level(1.0);
        let pm = PhiMap::new(&st, &d, 1.0).unwrap();
        let r = monotonicity_check(&pm, &pm.with_exponent(0.5).unwrap()).unwrap();
        assert!(r.passed());
        assert!(monotonicity_check(&pm, &pm).unwrap().passed());
        assert!(monotonicity_check(&pm.with_exponent(0.5).unwrap(), &pm).is_err());
    }

    #[test]
    fn pisier_haagerup_gibbs_and_skip() {
        let (st, d) = two_level(1.0);
        let g = gns_from_state(&st).unwrap();
        let md = modular_data(&g).unwrap();
        let lv = liouvillean(&d, &g).unwrap();
        let pm = PhiMap::new(&st, &d, 0.5).unwrap();
        let r = pisier_haagerup_check(&md, &g, &lv, &pm, 50, 1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.value("min_eigenvalue").unwrap() >= -1e-10);
        let big = pm.with_exponent(1.5).unwrap();
        assert_eq!(pisier_haagerup_check(&md, &g, &lv, &big, 10, 1).unwrap().status, Status::Skipped);
        let bad = md.with_scaled_delta(0.1).unwrap();
        let r = pisier_haagerup_check(&bad, &g, &lv, &pm, 10, 1).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.witness.is_some());
    }

    #[test]
    fn extract_t_gibbs_and_rescaled() {
        let (st, d) = two_level(1.0);
        let g = gns_from_state(&st).unwrap();
        let md = modular_data(&g).unwrap();
        let lv = liouvillean(&d, &g).unwrap();
        let (t, r) = extract_t(&md, &lv, &PhiMap::new(&st, &d, 0.5).unwrap(), 3).unwrap();
        assert!(r.passed(), "{r:?}");
        let co = ComplexMatrix::identity(4, 4) - md.e0().matrix();
        assert!((t.matrix() - &co).norm() < 1e-10);
        let (t, r) = extract_t(&md, &lv, &PhiMap::new(&st, &d, 0.25).unwrap(), 3).unwrap();
        assert!(r.passed());
        assert!((t.matrix() - co * c64(0.5, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn extract_t_trivial_dynamics() {
        let st = QuantumState::tracial(2).unwrap();
        let d = Dynamics::trivial(2);
        let g = gns_from_state(&st).unwrap();
        let md = modular_data(&g).unwrap();
        let lv = liouvillean(&d, &g).unwrap();
        let (t, r) = extract_t(&md, &lv, &PhiMap::new(&st, &d, 0.7).unwrap(), 2).unwrap();
        assert!(t.norm() < 1e-15);
        assert!(r.passed());
    }

    #[test]
    fn tensor_powers() {
        let (st, d) = two_level(1.0);
        let pm = PhiMap::new(&st, &d, 0.5).unwrap();
        assert!((tensor_power_norm(&pm, 1).unwrap() - phi_norm_exact(&pm)).abs() < 1e-15);
        assert!((tensor_power_norm(&pm, 3).unwrap() - 1.0).abs() < 1e-12);
        let big = pm.with_exponent(0.8).unwrap();
        for k in 1..=3 {
            let exact = tensor_power_norm(&big, k).unwrap();
            let oracle = tensor_power_oracle(&big, k, 300, 5).unwrap();
            assert!(oracle <= exact + ORACLE_SLACK);
            assert!((oracle - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn ness_tensor_square_exceeds_first_power() {
        let (st, d) = ness();
        let pm = PhiMap::new(&st, &d, 0.5).unwrap();
        let n1 = tensor_power_norm(&pm, 1).unwrap();
        let n2 = tensor_power_norm(&pm, 2).unwrap();
        assert!(n2 > 1.0 + 1e-6, "{n2}");
        assert!(n1 <= 1.0 + 1e-12);
        let oracle = tensor_power_oracle(&pm, 2, 200, 2).unwrap();
        assert!(oracle <= n2 + ORACLE_SLACK);
        let big = pm.with_exponent(0.75).unwrap();
        assert!(tensor_power_norm(&big, 2).unwrap() > tensor_power_norm(&big, 1).unwrap());
    }

    #[test]
    fn tensor_size_overflow() {
        let (st, d) = ness();
        let pm = PhiMap::new(&st, &d, 0.5).unwrap();
        assert!(tensor_power_norm(&pm, 3).is_ok());
        assert!(matches!(tensor_power_norm(&pm, 4), Err(Error::SizeOverflow { .. })));
    }

    #[test]
    fn complete_boundedness_examples() {
        let (st, d) = two_level(1.0);
        let g = gns_from_state(&st).unwrap();
        let md = modular_data(&g).unwrap();
        let lv = liouvillean(&d, &g).unwrap();
        let (ok, r) = is_completely_beta_bounded(&PhiMap::new(&st, &d, 0.5).unwrap(), &md, &lv, 3, CB_TOL).unwrap();
        assert!(ok && r.passed());
        let (ok, r) = is_completely_beta_bounded(&PhiMap::new(&st, &d, 0.6).unwrap(), &md, &lv, 1, CB_TOL).unwrap();
        assert!(!ok);
        assert_eq!(r.value("first_violating_k"), Some(1.0));
    }

    #[test]
    fn beta_max_gibbs_and_ground() {
        let (st, d) = two_level(1.0);
        let (bm, r) = estimate_beta_max(&st, &d, 3, DEFAULT_BISECT_TOL, 1).unwrap();
        assert!((bm - 1.0).abs() < 1e-6, "{bm}");
        assert!(r.passed(), "{r:?}");
        let ground = QuantumState::new(real_diagonal(&[1.0, 0.0])).unwrap();
        let (bm, _) = estimate_beta_max(&ground, &d, 3, DEFAULT_BISECT_TOL, 1).unwrap();
        assert!(bm.is_infinite());
        let (bm, _) = estimate_beta_max(&st, &Dynamics::trivial(2), 3, DEFAULT_BISECT_TOL, 1).unwrap();
        assert!(bm.is_infinite());
    }

    #[test]
    fn permutations_are_complete() {
        let p = permutations(4);
        let set: std::collections::BTreeSet<Vec<usize>> = p.iter().cloned().collect();
        assert_eq!(p.len(), 24);
        assert_eq!(set.len(), 24);
    }

    #[test]
    fn generated_subalgebra_reaches_norm() {
        let (st, d) = two_level(1.0);
        let pm = PhiMap::new(&st, &d, 1.0).unwrap();
        let exact = phi_norm_exact(&pm);
        let s4 = generated_subalgebra_sup(&pm, 4, 200, 3);
        assert!((s4 - exact).abs() < 1e-6);
        assert!(generated_subalgebra_sup(&pm, 1, 200, 3) <= s4 + 1e-12);
    }

    #[test]
    fn pure_state_norm_equals_damped_norm() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let d = Dynamics::new(h).unwrap();
        for diag in [[1.0, 0.0], [0.0, 1.0]] {
            let st = QuantumState::new(real_diagonal(&diag)).unwrap();
            let g = gns_from_state(&st).unwrap();
            let lv = liouvillean(&d, &g).unwrap();
            for b in [0.1, 0.7, 2.0] {
                let pm = PhiMap::new(&st, &d, b).unwrap();
                assert!((phi_norm_exact(&pm) - damped_norm(&lv, b)).abs() < 1e-10);
            }
        }
    }
}
