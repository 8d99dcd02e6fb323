//! Spectral measures of the Liouvillean, the exponential `L¹` test, the
//! analytic-continuation identity and the sequence model showing that
//! `Φ_α ⊗ Φ_β` is unbounded for `α ≠ β`.

use rayon::prelude::*;

use crate::dynamics::Liouvillean;
use crate::error::{Error, Result};
use crate::operator::{
    c64, flip_operator, kron, operator_norm, ComplexMatrix, ComplexVector, HermitianOperator,
};
use crate::report::{ConditionReport, Provenance};

pub const ANAL_CONT_TOL: f64 = 1e-11;
pub const REMARK_MATRIX_TOL: f64 = 1e-10;
/// Atoms closer than this are merged.
const ATOM_MERGE_TOL: f64 = 1e-9;
/// Atoms lighter than this are dropped.
const ATOM_WEIGHT_FLOOR: f64 = 1e-15;
const STRIP_GRID: usize = 20;
const CHUNK: usize = 1 << 16;
pub const MAX_MATRIX_TRUNCATION: usize = 8;

/// `μ_ξ = Σ w_k δ_{λ_k}` with distinct frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectralMeasure {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteSpectralMeasure {
    pub fn from_atoms<I: IntoIterator<Item = (f64, f64)>>(atoms: I) -> Result<Self> {
        let mut raw: Vec<(f64, f64)> = atoms.into_iter().collect();
        if raw.iter().any(|&(l, w)| !l.is_finite() || !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(&(_, w)) = raw.iter().find(|&&(_, w)| w < 0.0) {
            return Err(Error::InvalidArgument(format!("negative weight {w}")));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (l, w) in raw {
            match merged.last_mut() {
                Some((l0, w0)) if (l - *l0).abs() <= ATOM_MERGE_TOL => {
                    // weighted frequency keeps the first moment
                    let total = *w0 + w;
                    if total > 0.0 {
                        *l0 = (*l0 * *w0 + l * w) / total;
                    }
                    *w0 = total;
                }
                _ => merged.push((l, w)),
            }
        }
        merged.retain(|&(_, w)| w > ATOM_WEIGHT_FLOOR);
        Ok(Self { atoms: merged })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|&(_, w)| w).sum()
    }

    /// `μ([0, ∞))`.
    pub fn positive_mass(&self) -> f64 {
        self.atoms.iter().filter(|&&(l, _)| l >= 0.0).map(|&(_, w)| w).sum()
    }

    /// `∫ e^{izλ} dμ(λ)`.
    pub fn fourier(&self, t: f64, s: f64) -> crate::operator::C64 {
        let iz = c64(-s, t);
        self.atoms.iter().map(|&(l, w)| (iz * l).exp() * w).sum()
    }
}

/// Spectral measure of `ξ` for the Hermitian operator `K`.
pub fn spectral_measure(k: &HermitianOperator, xi: &ComplexVector) -> Result<DiscreteSpectralMeasure> {
    if xi.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            found: xi.len(),
        });
    }
    let dec = k.eig()?;
    let coeffs = dec.eigenvectors().adjoint() * xi;
    DiscreteSpectralMeasure::from_atoms(
        dec.eigenvalues()
            .iter()
            .zip(coeffs.iter())
            .map(|(&l, c)| (l, c.norm_sqr())),
    )
}

/// `∫ e^{−βλ} dμ(λ)`.
pub fn exp_l1_test(mu: &DiscreteSpectralMeasure, beta: f64) -> f64 {
    mu.atoms.iter().map(|&(l, w)| w * (-beta * l).exp()).sum()
}

/// Compares the continuation of `t ↦ (e^{itK}ξ, ξ)` at `iβ` with
/// `‖e^{−(β/2)K}ξ‖²`, and checks the strip bound on a grid of `S̄_β`.
pub fn anal_cont_identity(lv: &Liouvillean, xi: &ComplexVector, beta: f64) -> Result<ConditionReport> {
    if xi.len() != lv.dim() {
        return Err(Error::DimensionMismatch {
            expected: lv.dim(),
            found: xi.len(),
        });
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be finite and >= 0, got {beta}")));
    }
    let f = lv.strip_function(xi, xi);
    let continued = f.at(0.0, beta);
    let damped = (lv.damped(beta / 2.0).matrix() * xi).norm_squared();
    let scale = damped.max(1.0);
    let gap = (continued - c64(damped, 0.0)).norm();

    let mu = spectral_measure(lv.operator(), xi)?;
    let bound = mu.positive_mass() + exp_l1_test(&mu, beta);
    let mut worst_excess = f64::NEG_INFINITY;
    for a in 0..STRIP_GRID {
        let t = -5.0 + 10.0 * a as f64 / (STRIP_GRID - 1) as f64;
        for b in 0..STRIP_GRID {
            let s = beta * b as f64 / (STRIP_GRID - 1) as f64;
            worst_excess = worst_excess.max(f.at(t, s).norm() - bound);
        }
    }

    let mut r = ConditionReport::new("anal_cont", Provenance::Exact, ANAL_CONT_TOL);
    r.set_value("beta", beta);
    r.set_value("continued", continued.re);
    r.set_value("damped_norm_sq", damped);
    r.set_value("exp_l1", exp_l1_test(&mu, beta));
    r.set_value("local_temperature", f64::INFINITY);
    r.push_sub("F(i beta) = ||e^{-beta K/2} xi||^2", gap <= ANAL_CONT_TOL * scale, gap, ANAL_CONT_TOL * scale);
    r.push_sub("strip bound", worst_excess <= ANAL_CONT_TOL * scale, worst_excess, ANAL_CONT_TOL * scale);
    Ok(r.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// `λ_n = 2^{−n}`, `n ≥ 1`.
    Geometric,
    /// `λ_n = 1 / (√n ln n)`, `n ≥ 2`.
    LogSqrt,
}

impl SequenceKind {
    pub fn first_index(self) -> u64 {
        match self {
            SequenceKind::Geometric => 1,
            SequenceKind::LogSqrt => 2,
        }
    }

    pub fn lambda(self, n: u64) -> f64 {
        let x = n as f64;
        match self {
            SequenceKind::Geometric => (-x * std::f64::consts::LN_2).exp(),
            SequenceKind::LogSqrt => 1.0 / (x.sqrt() * x.ln()),
        }
    }

    /// Whether `Σ λ_n^p` converges.
    pub fn summable(self, p: f64) -> bool {
        match self {
            SequenceKind::Geometric => p > 0.0,
            // n^{-p/2} ln^{-p} n
            SequenceKind::LogSqrt => p >= 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceModel {
    pub kind: SequenceKind,
    pub alpha: f64,
    pub beta: f64,
    pub truncation: u64,
}

impl SequenceModel {
    pub fn new(kind: SequenceKind, alpha: f64, beta: f64, truncation: u64) -> Result<Self> {
        for e in [alpha, beta] {
            if !(e > 0.0 && e < 0.5) {
                return Err(Error::InvalidExponent(e));
            }
        }
        if truncation < kind.first_index() {
            return Err(Error::InvalidArgument(format!(
                "truncation {truncation} below first index {}",
                kind.first_index()
            )));
        }
        Ok(Self {
            kind,
            alpha,
            beta,
            truncation,
        })
    }

    pub fn with_truncation(&self, truncation: u64) -> Result<Self> {
        Self::new(self.kind, self.alpha, self.beta, truncation)
    }

    /// `ε = 2α − 2β`.
    pub fn epsilon(&self) -> f64 {
        2.0 * self.alpha - 2.0 * self.beta
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (self.kind.first_index()..=self.truncation).map(|n| self.kind.lambda(n)).collect()
    }

    /// `Σ_{n ≤ N} λ_n^p`, compensated, in fixed chunks.
    pub fn power_sum(&self, p: f64) -> f64 {
        let first = self.kind.first_index();
        let count = self.truncation - first + 1;
        let chunks = count.div_ceil(CHUNK as u64);
        let kind = self.kind;
        let partial: Vec<(f64, f64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = first + c * CHUNK as u64;
                let hi = (lo + CHUNK as u64 - 1).min(self.truncation);
                let mut acc = Neumaier::default();
                for n in lo..=hi {
                    acc.add(kind.lambda(n).powf(p));
                }
                (acc.sum, acc.comp)
            })
            .collect();
        let mut total = Neumaier::default();
        for (s, c) in partial {
            total.add(s);
            total.add(c);
        }
        total.value()
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemarkNorm {
    /// `‖h^{1−ε} ⊗ h^{1+ε} F‖₂` at the truncation.
    pub value: f64,
    /// `‖h^{2α}‖₂ ‖h^{1−2α}‖₂ ‖h^{2β}‖₂ ‖h^{1−2β}‖₂`, present when all four
    /// series converge.
    pub product_bound: Option<f64>,
    /// Whether `value` stays bounded as the truncation grows.
    pub bounded_in_limit: bool,
}

pub fn remark_norm(model: &SequenceModel) -> RemarkNorm {
    let eps = model.epsilon();
    let value = (model.power_sum(2.0 * (1.0 - eps)) * model.power_sum(2.0 * (1.0 + eps))).sqrt();
    let powers = [
        4.0 * model.alpha,
        2.0 - 4.0 * model.alpha,
        4.0 * model.beta,
        2.0 - 4.0 * model.beta,
    ];
    let product_bound = if powers.iter().all(|&p| model.kind.summable(p)) {
        Some(powers.iter().map(|&p| model.power_sum(p).sqrt()).product())
    } else {
        None
    };
    let bounded_in_limit = model.kind.summable(2.0 * (1.0 - eps)) && model.kind.summable(2.0 * (1.0 + eps));
    RemarkNorm {
        value,
        product_bound,
        bounded_in_limit,
    }
}

fn diag_power(values: &[f64], p: f64) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64(values[i].powf(p), 0.0) } else { c64(0.0, 0.0) })
}

/// Evaluates `(Φ_α ⊗ Φ_β)(F)` with explicit matrices for a small truncation
/// and compares its Hilbert–Schmidt norm with [`remark_norm`].
pub fn remark_matrix_validation(model: &SequenceModel) -> Result<ConditionReport> {
    let lambdas = model.eigenvalues();
    let n = lambdas.len();
    if n > MAX_MATRIX_TRUNCATION {
        return Err(Error::InvalidArgument(format!(
            "explicit validation needs at most {MAX_MATRIX_TRUNCATION} eigenvalues, got {n}"
        )));
    }
    let (a, b) = (model.alpha, model.beta);
    let flip = flip_operator(n)?;
    let left = kron(&diag_power(&lambdas, 2.0 * a), &diag_power(&lambdas, 2.0 * b))?;
    let right = kron(&diag_power(&lambdas, 1.0 - 2.0 * a), &diag_power(&lambdas, 1.0 - 2.0 * b))?;
    let direct = (&left * &flip * &right).norm();
    let closed = remark_norm(model).value;

    // (A⊗B) F (C⊗D) = (AD ⊗ BC) F
    let ad_bc = kron(
        &(diag_power(&lambdas, 2.0 * a) * diag_power(&lambdas, 1.0 - 2.0 * b)),
        &(diag_power(&lambdas, 2.0 * b) * diag_power(&lambdas, 1.0 - 2.0 * a)),
    )?;
    let intertwine = operator_norm(&(&left * &flip * &right - &ad_bc * &flip));
    let drop = ((&ad_bc * &flip).norm() - ad_bc.norm()).abs();

    let scale = closed.max(1.0);
    let mut r = ConditionReport::new("remark_matrix", Provenance::Exact, REMARK_MATRIX_TOL);
    r.set_value("direct", direct);
    r.set_value("closed_form", closed);
    r.push_sub("(A x B) F (C x D) = (AD x BC) F", intertwine <= REMARK_MATRIX_TOL * scale, intertwine, REMARK_MATRIX_TOL * scale);
    r.push_sub("||A F||_2 = ||A||_2", drop <= REMARK_MATRIX_TOL * scale, drop, REMARK_MATRIX_TOL * scale);
    let gap = (direct - closed).abs();
    r.push_sub("direct = closed form", gap <= REMARK_MATRIX_TOL * scale, gap, REMARK_MATRIX_TOL * scale);
    Ok(r.finish())
}

/// Growth of [`remark_norm`] across truncations: values, monotonicity and
/// the ratio last/first.
#[derive(Debug, Clone)]
pub struct RemarkSweep {
    pub truncations: Vec<u64>,
    pub values: Vec<f64>,
    pub monotone: bool,
    pub ratio: f64,
}

pub fn remark_sweep(model: &SequenceModel, truncations: &[u64]) -> Result<RemarkSweep> {
    let values = truncations
        .iter()
        .map(|&n| Ok(remark_norm(&model.with_truncation(n)?).value))
        .collect::<Result<Vec<f64>>>()?;
    let monotone = values.windows(2).all(|w| w[1] >= w[0]);
    let ratio = match (values.first(), values.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => b / a,
        _ => f64::NAN,
    };
    Ok(RemarkSweep {
        truncations: truncations.to_vec(),
        values,
        monotone,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{liouvillean, Dynamics};
    use crate::gns::{gns_from_state, GnsTriple, QuantumState};
    use crate::sampling::{gaussian_vector, rng_from_seed};

    fn two_level() -> (GnsTriple, Liouvillean) {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
        let g = gns_from_state(&QuantumState::gibbs(&h, 1.0).unwrap()).unwrap();
        let lv = liouvillean(&Dynamics::new(h).unwrap(), &g).unwrap();
        (g, lv)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
    }

    #[test]
    fn eigenvector_gives_single_atom() {
        let k = HermitianOperator::from_real_diagonal(&[-0.5, 2.0]);
        let xi = ComplexVector::from_vec(vec![c64(0.0, 0.0), c64(0.0, 1.0)]);
        let mu = spectral_measure(&k, &xi).unwrap();
        assert_eq!(mu.atoms(), &[(2.0, 1.0)]);
        assert!((exp_l1_test(&mu, 0.3) - (-0.6f64).exp()).abs() < 1e-15);
        assert!(spectral_measure(&k, &ComplexVector::zeros(3)).is_err());
    }

    #[test]
    fn vacuum_and_pauli_measures() {
        let (g, lv) = two_level();
        let mu = spectral_measure(lv.operator(), g.omega()).unwrap();
        assert_eq!(mu.atoms().len(), 1);
        assert!(mu.atoms()[0].0.abs() < 1e-12 && (mu.atoms()[0].1 - 1.0).abs() < 1e-12);

        let xi = g.x_omega(&pauli_x());
        let mu = spectral_measure(lv.operator(), &xi).unwrap();
        let z = 1.0 + (-1.0f64).exp();
        assert_eq!(mu.atoms().len(), 2);
        assert!((mu.atoms()[0].0 + 1.0).abs() < 1e-12);
        assert!((mu.atoms()[0].1 - (-1.0f64).exp() / z).abs() < 1e-12);
        assert!((mu.atoms()[1].0 - 1.0).abs() < 1e-12);
        assert!((mu.atoms()[1].1 - 1.0 / z).abs() < 1e-12);
        assert!((mu.mass() - xi.norm_squared()).abs() < 1e-12);

        let expected = (-2.0f64).exp() / z + 2.0f64.exp() * (-1.0f64).exp() / z;
        let direct = (lv.damped(1.0).matrix() * &xi).norm_squared();
        assert!((exp_l1_test(&mu, 2.0) - expected).abs() < 1e-12);
        assert!((direct - expected).abs() < 1e-12);
        assert!((exp_l1_test(&mu, 0.0) - mu.mass()).abs() < 1e-15);
    }

    #[test]
    fn anal_cont_examples() {
        let (g, lv) = two_level();
        assert!(anal_cont_identity(&lv, g.omega(), 1.0).unwrap().passed());
        assert!(anal_cont_identity(&lv, &g.x_omega(&pauli_x()), 1.0).unwrap().passed());
        let xi = gaussian_vector(&mut rng_from_seed(11), 4);
        let r = anal_cont_identity(&lv, &xi, 0.7).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.value("local_temperature"), Some(f64::INFINITY));
    }

    #[test]
    fn exponent_validation() {
        assert!(matches!(
            SequenceModel::new(SequenceKind::Geometric, 0.5, 0.2, 10),
            Err(Error::InvalidExponent(_))
        ));
        assert!(matches!(
            SequenceModel::new(SequenceKind::Geometric, 0.2, 0.0, 10),
            Err(Error::InvalidExponent(_))
        ));
        assert!(SequenceModel::new(SequenceKind::LogSqrt, 0.2, 0.2, 1).is_err());
    }

    #[test]
    fn geometric_limit() {
        let m = SequenceModel::new(SequenceKind::Geometric, 0.25, 0.25, 2000).unwrap();
        let r = remark_norm(&m);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-14);
        assert!(r.bounded_in_limit);
        assert!(r.product_bound.unwrap() >= r.value);
    }

    #[test]
    fn log_sqrt_summability() {
        let eq = SequenceModel::new(SequenceKind::LogSqrt, 0.3, 0.3, 1000).unwrap();
        assert!(remark_norm(&eq).bounded_in_limit);
        assert!(remark_norm(&eq).product_bound.is_none());
        let ne = SequenceModel::new(SequenceKind::LogSqrt, 0.3, 0.2, 1000).unwrap();
        assert!(!remark_norm(&ne).bounded_in_limit);
    }

    #[test]
    fn single_eigenvalue_truncation() {
        let m = SequenceModel::new(SequenceKind::Geometric, 0.3, 0.2, 1).unwrap();
        assert!((remark_norm(&m).value - 0.25).abs() < 1e-15);
        assert!(remark_matrix_validation(&m).unwrap().passed());
    }

    #[test]
    fn matrix_validation_n4() {
        for (a, b) in [(0.3, 0.2), (0.25, 0.25), (0.1, 0.4)] {
            let m = SequenceModel::new(SequenceKind::Geometric, a, b, 4).unwrap();
            let r = remark_matrix_validation(&m).unwrap();
            assert!(r.passed(), "{r:?}");
            assert!((r.value("direct").unwrap() - r.value("closed_form").unwrap()).abs() < 1e-12);
        }
        let m = SequenceModel::new(SequenceKind::LogSqrt, 0.3, 0.2, 5).unwrap();
        assert!(remark_matrix_validation(&m).unwrap().passed());
        let eq = SequenceModel::new(SequenceKind::Geometric, 0.2, 0.2, 4).unwrap();
        let h2: f64 = eq.eigenvalues().iter().map(|l| l * l).sum();
        assert!((remark_norm(&eq).value - h2).abs() < 1e-15);
        assert!(remark_matrix_validation(&eq.with_truncation(9).unwrap()).is_err());
    }

    #[test]
    fn chunked_sum_matches_serial() {
        let m = SequenceModel::new(SequenceKind::LogSqrt, 0.3, 0.2, 200_000).unwrap();
        let serial: f64 = m.eigenvalues().iter().map(|l| l.powf(1.6)).sum();
        assert!((m.power_sum(1.6) - serial).abs() < 1e-10 * serial);
        assert_eq!(m.power_sum(1.6).to_bits(), m.power_sum(1.6).to_bits());
    }
}
