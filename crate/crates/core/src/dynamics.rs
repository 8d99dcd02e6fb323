//! Hamiltonian dynamics, the GNS Liouvillean and exact two-point functions.
//!
//! For `X, Y ∈ M_n` the correlation `F(z) = (e^{izK} XΩ, Y*Ω)` is a finite
//! exponential sum, so it is evaluated coefficient-wise anywhere in the
//! complex plane. On the real axis `F(t) = ω(Y α_t(X))`; a state is KMS at
//! inverse temperature `β` exactly when `F(t + iβ) = ω(α_t(X) Y)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gns::GnsTriple;
use crate::operator::{
    c64, commutator, operator_norm, ComplexMatrix, ComplexVector, HermitianOperator,
    SpectralDecomposition, C64,
};
use crate::report::{ConditionReport, Provenance, Witness};
use crate::sampling::{contraction_from, derive_seed, rng_from_seed};

pub const INVARIANCE_TOL: f64 = 1e-10;
pub const KMS_TOL: f64 = 1e-8;
/// Frequencies closer than this are merged in a [`StripFunction`].
const FREQUENCY_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Dynamics {
    hamiltonian: HermitianOperator,
    dec: SpectralDecomposition,
}

impl Dynamics {
    pub fn new(hamiltonian: HermitianOperator) -> Result<Self> {
        let dec = hamiltonian.eig()?;
        Ok(Self { hamiltonian, dec })
    }

    pub fn trivial(n: usize) -> Self {
        Self::new(HermitianOperator::zeros(n)).expect("zero matrix diagonalizes")
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.dec
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// `e^{itH}`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.dec.apply_complex(|e| C64::from_polar(1.0, t * e))
    }

    /// `α_t(X) = e^{itH} X e^{−itH}`.
    pub fn evolve(&self, x: &ComplexMatrix, t: f64) -> ComplexMatrix {
        let u = self.propagator(t);
        &u * x * u.adjoint()
    }

    /// `‖[H, ρ]‖` for a density matrix `ρ`.
    pub fn invariance_defect(&self, rho: &HermitianOperator) -> f64 {
        operator_norm(&commutator(self.hamiltonian.matrix(), rho.matrix()))
    }
}

/// Generator `K` of `U(t) π(X) Ω = π(α_t(X)) Ω`; `K(Y) = HY − YH`.
#[derive(Debug, Clone)]
pub struct Liouvillean {
    k: HermitianOperator,
    dec: SpectralDecomposition,
}

pub fn liouvillean(dynamics: &Dynamics, triple: &GnsTriple) -> Result<Liouvillean> {
    let n = triple.n();
    if dynamics.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dynamics.dim(),
        });
    }
    let defect = dynamics.invariance_defect(triple.state().rho());
    if defect > INVARIANCE_TOL {
        return Err(Error::NotInvariant {
            commutator_norm: defect,
        });
    }
    let h = dynamics.hamiltonian().matrix();
    let id = ComplexMatrix::identity(n, n);
    let ambient = h.kronecker(&id) - id.kronecker(&h.transpose());
    let k = HermitianOperator::new(triple.restrict(&ambient))?;
    let dec = k.eig()?;
    Ok(Liouvillean { k, dec })
}

impl Liouvillean {
    pub fn operator(&self) -> &HermitianOperator {
        &self.k
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.dec
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// `e^{itK}`.
    pub fn unitary(&self, t: f64) -> ComplexMatrix {
        self.dec.apply_complex(|l| C64::from_polar(1.0, t * l))
    }

    /// `e^{−sK}`.
    pub fn damped(&self, s: f64) -> HermitianOperator {
        self.dec
            .apply(|l| (-s * l).exp())
            .expect("exponential is finite on a finite spectrum")
    }

    /// `z ↦ (e^{izK} a, b)` as an exponential sum.
    pub fn strip_function(&self, a: &ComplexVector, b: &ComplexVector) -> StripFunction {
        let w = self.dec.eigenvectors();
        let ca = w.adjoint() * a;
        let cb = w.adjoint() * b;
        let terms = self
            .dec
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, &l)| (l, cb[k].conj() * ca[k]));
        StripFunction::from_terms(terms)
    }

    /// `‖KΩ‖`.
    pub fn vacuum_residual(&self, triple: &GnsTriple) -> f64 {
        (self.k.matrix() * triple.omega()).norm()
    }

    /// `max ‖e^{itK} π(X)Ω − π(α_t X)Ω‖` over sampled `X` and `t ∈ [−5, 5]`.
    pub fn implementation_residual(&self, dynamics: &Dynamics, triple: &GnsTriple, samples: usize, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        (0..samples)
            .map(|i| {
                let x = contraction_from(&mut rng, triple.n());
                let t = -5.0 + 10.0 * (i as f64 + 0.5) / samples as f64;
                (self.unitary(t) * triple.x_omega(&x) - triple.x_omega(&dynamics.evolve(&x, t))).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖e^{i(t+s)K} − e^{itK} e^{isK}‖` over a few pairs of times.
    pub fn group_law_residual(&self) -> f64 {
        let times = [-3.1, -0.7, 0.0, 0.4, 2.3];
        let mut worst: f64 = 0.0;
        for &t in &times {
            for &s in &times {
                let lhs = self.unitary(t + s);
                let rhs = self.unitary(t) * self.unitary(s);
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }
}

/// `F(z) = Σ_k c_k e^{izλ_k}` with distinct real frequencies `λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripFunction {
    terms: Vec<(f64, C64)>,
}

impl StripFunction {
    pub fn from_terms<I: IntoIterator<Item = (f64, C64)>>(terms: I) -> Self {
        let mut raw: Vec<(f64, C64)> = terms.into_iter().collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, C64)> = Vec::with_capacity(raw.len());
        for (l, c) in raw {
            match merged.last_mut() {
                Some((l0, c0)) if (l - *l0).abs() <= FREQUENCY_MERGE_TOL * (1.0 + l.abs()) => *c0 += c,
                _ => merged.push((l, c)),
            }
        }
        Self { terms: merged }
    }

    pub fn terms(&self) -> &[(f64, C64)] {
        &self.terms
    }

    pub fn eval(&self, z: C64) -> C64 {
        let iz = c64(0.0, 1.0) * z;
        self.terms.iter().map(|&(l, c)| c * (iz * l).exp()).sum()
    }

    pub fn at(&self, t: f64, s: f64) -> C64 {
        self.eval(c64(t, s))
    }
}

/// Strip function of the pair `(X, Y)`: `F(z) = (e^{izK} XΩ, Y*Ω)`.
pub fn correlation(triple: &GnsTriple, lv: &Liouvillean, x: &ComplexMatrix, y: &ComplexMatrix) -> StripFunction {
    lv.strip_function(&triple.x_omega(x), &triple.x_omega(&y.adjoint()))
}

/// `F_{X,Y}(z)`; on the real axis this is `ω(Y α_t(X))`.
pub fn two_point(triple: &GnsTriple, lv: &Liouvillean, x: &ComplexMatrix, y: &ComplexMatrix, z: C64) -> C64 {
    correlation(triple, lv, x, y).eval(z)
}

/// Fixed sampling grid: 50 points on `[−5, 5]` plus `t = 0`.
pub fn time_grid(points: usize) -> Vec<f64> {
    let mut ts: Vec<f64> = if points <= 1 {
        Vec::new()
    } else {
        (0..points)
            .map(|i| -5.0 + 10.0 * i as f64 / (points - 1) as f64)
            .collect()
    };
    ts.push(0.0);
    ts
}

/// `max |F_{X,Y}(t + iβ) − ω(α_t(X) Y)|` over sampled contractions and the
/// time grid; the right-hand side is computed directly from matrices.
pub fn kms_residual(
    triple: &GnsTriple,
    dynamics: &Dynamics,
    lv: &Liouvillean,
    beta: f64,
    sample_ops: usize,
    sample_times: usize,
    seed: u64,
) -> Result<(f64, ConditionReport)> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let times = time_grid(sample_times);
    let state = triple.state();
    let n = triple.n();
    let worst = (0..sample_ops as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let x = contraction_from(&mut rng, n);
            let y = contraction_from(&mut rng, n);
            let f = correlation(triple, lv, &x, &y);
            times
                .iter()
                .map(|&t| {
                    let lhs = f.at(t, beta);
                    let rhs = state.expectation(&(dynamics.evolve(&x, t) * &y));
                    ((lhs - rhs).norm(), t)
                })
                .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0_f64, 0.0_f64), |a, b| if b.0 > a.0 { b } else { a });

    let mut report = ConditionReport::new(
        "kms",
        Provenance::Sampled {
            seed,
            n: sample_ops as u64,
        },
        KMS_TOL,
    );
    report.set_value("beta", beta);
    report.set_value("residual", worst.0);
    report.push_sub("|F(t+i beta) - omega(alpha_t(X) Y)|", worst.0 <= KMS_TOL, worst.0, KMS_TOL);
    if worst.0 > KMS_TOL {
        report.witness = Some(Witness::scalar(format!("residual at t = {}", worst.1), worst.0));
    }
    Ok((worst.0, report.finish()))
}

/// Empirical holomorphy constant `sup |F_{X,Y}(t + iβ)| / (‖X‖ ‖Y‖)`.
#[derive(Debug, Clone)]
pub struct HolomorphyBound {
    pub beta: f64,
    /// Supremum over random contraction pairs only.
    pub random_sup: f64,
    /// `|F_{U, U*}(iβ)|` for the aligned unitary `U` of `Φ_{β/2}`.
    pub witness_value: f64,
    /// Supremum over everything sampled, witness included.
    pub sup: f64,
    pub seed: u64,
    pub samples: usize,
}

pub fn holomorphy_bound(
    triple: &GnsTriple,
    dynamics: &Dynamics,
    lv: &Liouvillean,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<HolomorphyBound> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    let times = time_grid(50);
    let n = triple.n();
    let random_sup = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, i));
            let x = contraction_from(&mut rng, n);
            let y = contraction_from(&mut rng, n);
            let scale = operator_norm(&x) * operator_norm(&y);
            if scale == 0.0 {
                return 0.0;
            }
            let f = correlation(triple, lv, &x, &y);
            times.iter().map(|&t| f.at(t, beta).norm()).fold(0.0, f64::max) / scale
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);

    let pm = crate::boundedness::PhiMap::new(triple.state(), dynamics, beta / 2.0)?;
    let u = pm.aligned_witness();
    let fw = correlation(triple, lv, &u, &u.adjoint());
    let witness_value = fw.at(0.0, beta).norm();
    let witness_grid = times.iter().map(|&t| fw.at(t, beta).norm()).fold(0.0, f64::max);
    let sup = random_sup.max(witness_value).max(witness_grid);
    Ok(HolomorphyBound {
        beta,
        random_sup,
        witness_value,
        sup,
        seed,
        samples,
    })
}

impl HolomorphyBound {
    /// Compares against the exact constant `‖Φ_{β/2}‖²`.
    pub fn report(&self, exact: f64, tol: f64) -> ConditionReport {
        let mut r = ConditionReport::new(
            "holomorphy_bound",
            Provenance::Sampled {
                seed: self.seed,
                n: self.samples as u64,
            },
            tol,
        );
        r.set_value("beta", self.beta);
        r.set_value("constant", self.sup);
        r.set_value("random_sup", self.random_sup);
        r.set_value("witness", self.witness_value);
        r.set_value("phi_norm_squared", exact);
        r.push_sub("finite", self.sup.is_finite(), self.sup, f64::INFINITY);
        r.push_sub("sampled sup <= ||Phi||^2", self.sup <= exact + tol, self.sup - exact, tol);
        let gap = (self.witness_value - exact).abs();
        r.push_sub("aligned witness attains ||Phi||^2", gap <= tol, gap, tol);
        r.finish()
    }
}
