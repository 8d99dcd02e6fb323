//! GNS representation of a state on `M_n` and its Tomita–Takesaki data.
//!
//! The Hilbert space is realized inside the Hilbert–Schmidt space of `n×n`
//! matrices (inner product `⟨Y₁, Y₂⟩ = tr(Y₂* Y₁)`, row-major coordinates),
//! with `Ω = ρ^{1/2}` and `π(X)Y = XY`. For a faithful `ρ` this is the whole
//! `n²`-dimensional space. For a rank-`r` state the cyclic subspace
//! `closure(M Ω) = { Y : Y p = Y }` (`p` the support projection) has
//! dimension `n·r`; the GNS space is that subspace, expressed in an
//! orthonormal basis `|i⟩⟨s_j|`.
//!
//! Modular data always lives on `H₀ = closure(M′Ω) = p M p`, the range of
//! `E = π(p)`, where `Ω` is cyclic and separating for `EME ≅ M_r`. There
//! `Δ(Y) = ρ Y ρ⁻¹` and `J(Y) = Y*`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{
    c64, flip_operator, kron, pseudo_inverse, unvectorize, vectorize, ComplexMatrix, ComplexVector,
    HermitianOperator, SpectralDecomposition, C64,
};
use crate::realform::{
    antilinear_rep, containment_residual, kernel_basis, orthonormal_span, principal_cosines, times_i,
    to_real, from_real,
};
use crate::report::{ConditionReport, Provenance, Witness};
use crate::sampling::{contraction_from, rng_from_seed};

/// Eigenvalues of `ρ` at or below this are treated as zero.
pub const SUPPORT_CUTOFF: f64 = 1e-12;
/// Eigenvalues of `log Δ` at or below this (in absolute value) span `ker log Δ`.
pub const KERNEL_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QuantumState {
    rho: HermitianOperator,
    dec: SpectralDecomposition,
    support_rank: usize,
}

impl QuantumState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        let rho = HermitianOperator::new(rho)?;
        let trace = rho.matrix().trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "trace {} differs from 1",
                trace
            )));
        }
        let dec = rho.eig()?;
        if dec.min() < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                dec.min()
            )));
        }
        let support_rank = dec.eigenvalues().iter().filter(|&&l| l > SUPPORT_CUTOFF).count();
        if support_rank == 0 {
            return Err(Error::InvalidState("zero density matrix".into()));
        }
        Ok(Self {
            rho,
            dec,
            support_rank,
        })
    }

    /// `e^{−βH} / Z`, built from the spectrum of `H` so the trace is exact.
    pub fn gibbs(h: &HermitianOperator, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidArgument(format!("inverse temperature {beta}")));
        }
        let dec = h.eig()?;
        let e0 = dec.min();
        let weights: Vec<f64> = dec.eigenvalues().iter().map(|&e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = weights.iter().sum();
        let rho = dec.apply(|e| (-beta * (e - e0)).exp() / z)?;
        Self::new(rho.into_matrix())
    }

    pub fn tracial(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Self::new(ComplexMatrix::identity(n, n) * c64(1.0 / n as f64, 0.0))
    }

    pub fn pure(vector: &ComplexVector) -> Result<Self> {
        let norm = vector.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("pure state needs a nonzero finite vector".into()));
        }
        let v = vector / c64(norm, 0.0);
        Self::new(&v * v.adjoint())
    }

    pub fn tensor_product(states: &[QuantumState]) -> Result<Self> {
        let mut iter = states.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty tensor product".into()))?;
        let mut rho = first.rho.matrix().clone();
        for s in iter {
            rho = kron(&rho, s.rho.matrix())?;
        }
        let trace = rho.trace();
        Self::new(rho * c64(1.0 / trace.re, 0.0))
    }

    pub fn rho(&self) -> &HermitianOperator {
        &self.rho
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.dec
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn is_faithful(&self) -> bool {
        self.support_rank == self.dim()
    }

    /// `n×r` matrix whose columns are the support eigenvectors, in
    /// descending order of weight.
    pub fn support_basis(&self) -> ComplexMatrix {
        let n = self.dim();
        let idx: Vec<usize> = (0..n).rev().take(self.support_rank).collect();
        ComplexMatrix::from_fn(n, idx.len(), |i, j| self.dec.eigenvectors()[(i, idx[j])])
    }

    /// Support eigenvalues in the same order as `support_basis`.
    pub fn support_weights(&self) -> Vec<f64> {
        self.dec.eigenvalues().iter().rev().take(self.support_rank).copied().collect()
    }

    pub fn sqrt(&self) -> HermitianOperator {
        self.dec
            .apply(|l| l.max(0.0).sqrt())
            .expect("sqrt is finite on a positive spectrum")
    }

    pub fn pseudo_inverse(&self) -> HermitianOperator {
        pseudo_inverse(&self.rho, SUPPORT_CUTOFF).expect("finite on the support")
    }

    /// `ω(X) = tr(ρ X)`.
    pub fn expectation(&self, x: &ComplexMatrix) -> C64 {
        (self.rho.matrix() * x).trace()
    }
}

/// Concrete GNS triple in the Hilbert–Schmidt realization.
#[derive(Debug, Clone)]
pub struct GnsTriple {
    state: QuantumState,
    n: usize,
    /// `n² × d` isometry from GNS coordinates to row-major matrix coordinates.
    embedding: ComplexMatrix,
    omega: ComplexVector,
}

pub fn gns_from_state(state: &QuantumState) -> Result<GnsTriple> {
    let n = state.dim();
    let embedding = if state.is_faithful() {
        ComplexMatrix::identity(n * n, n * n)
    } else {
        let s = state.support_basis();
        let r = s.ncols();
        let mut v = ComplexMatrix::zeros(n * n, n * r);
        for i in 0..n {
            for j in 0..r {
                // vec(e_i s_j^*)
                for b in 0..n {
                    v[(i * n + b, i * r + j)] = s[(b, j)].conj();
                }
            }
        }
        v
    };
    let sqrt_rho = state.sqrt();
    let omega = embedding.adjoint() * vectorize(sqrt_rho.matrix());
    Ok(GnsTriple {
        state: state.clone(),
        n,
        embedding,
        omega,
    })
}

impl GnsTriple {
    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    /// Dimension of the one-particle algebra `M_n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the GNS Hilbert space.
    pub fn dim(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn omega(&self) -> &ComplexVector {
        &self.omega
    }

    pub fn embedding(&self) -> &ComplexMatrix {
        &self.embedding
    }

    /// GNS coordinates of a matrix lying in the GNS subspace.
    pub fn vector(&self, y: &ComplexMatrix) -> ComplexVector {
        self.embedding.adjoint() * vectorize(y)
    }

    pub fn matrix_of(&self, v: &ComplexVector) -> ComplexMatrix {
        unvectorize(&(&self.embedding * v), self.n, self.n)
    }

    /// Restricts an operator on the ambient `n²`-dimensional space.
    pub fn restrict(&self, ambient: &ComplexMatrix) -> ComplexMatrix {
        self.embedding.adjoint() * ambient * &self.embedding
    }

    /// `π(X)` as a `d×d` matrix.
    pub fn pi(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let id = ComplexMatrix::identity(self.n, self.n);
        self.restrict(&x.kronecker(&id))
    }

    /// `π(X)Ω = X ρ^{1/2}`.
    pub fn x_omega(&self, x: &ComplexMatrix) -> ComplexVector {
        self.vector(&(x * self.matrix_of(&self.omega)))
    }

    /// `⟨π(X)Ω, Ω⟩`.
    pub fn vector_state(&self, x: &ComplexMatrix) -> C64 {
        self.omega.dotc(&self.x_omega(x))
    }

    /// `max |ω(X) − ⟨π(X)Ω, Ω⟩|` over sampled contractions.
    pub fn reproduction_residual(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        (0..samples)
            .map(|_| {
                let x = contraction_from(&mut rng, self.n);
                (self.state.expectation(&x) - self.vector_state(&x)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max(‖π(XY) − π(X)π(Y)‖, ‖π(X*) − π(X)*‖)` over sampled pairs.
    pub fn homomorphism_residual(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        (0..samples)
            .map(|_| {
                let x = contraction_from(&mut rng, self.n);
                let y = contraction_from(&mut rng, self.n);
                let mult = (self.pi(&(&x * &y)) - self.pi(&x) * self.pi(&y)).norm();
                let star = (self.pi(&x.adjoint()) - self.pi(&x).adjoint()).norm();
                mult.max(star)
            })
            .fold(0.0, f64::max)
    }
}

/// Real-linear map `x ↦ M conj(x)` in the canonical basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiLinear {
    matrix: ComplexMatrix,
}

impl AntiLinear {
    pub fn new(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexVector) -> ComplexVector {
        &self.matrix * x.map(|z| z.conj())
    }

    /// `self ∘ self`, a linear map.
    pub fn square(&self) -> ComplexMatrix {
        &self.matrix * self.matrix.map(|z| z.conj())
    }

    /// `self ∘ L ∘ self` for linear `L`, itself linear.
    pub fn conjugate_linear(&self, l: &ComplexMatrix) -> ComplexMatrix {
        let mbar = self.matrix.map(|z| z.conj());
        &self.matrix * l.map(|z| z.conj()) * mbar
    }

    /// `self ∘ L`, antilinear.
    pub fn after_linear(&self, l: &ComplexMatrix) -> AntiLinear {
        AntiLinear::new(&self.matrix * l.map(|z| z.conj()))
    }

    /// `L ∘ self`, antilinear.
    pub fn before_linear(&self, l: &ComplexMatrix) -> AntiLinear {
        AntiLinear::new(l * &self.matrix)
    }

    /// Real `2m × 2m` matrix of this map.
    pub fn real_rep(&self) -> DMatrix<f64> {
        antilinear_rep(&self.matrix)
    }
}

/// Modular objects on `H₀ = range(E)`, in an orthonormal basis of `H₀`.
#[derive(Debug, Clone)]
pub struct ModularData {
    faithful: bool,
    /// `d × m` isometry from `H₀` coordinates into GNS coordinates.
    h0_basis: ComplexMatrix,
    e_proj: HermitianOperator,
    omega: ComplexVector,
    delta: HermitianOperator,
    delta_dec: SpectralDecomposition,
    log_delta: HermitianOperator,
    j: AntiLinear,
    /// Closure of `XΩ ↦ X*Ω` built from its definition on matrix units.
    tomita: AntiLinear,
    e0: HermitianOperator,
    /// `n×r` support basis `s` of `ρ`, so `EME = { s A s* }`.
    support: ComplexMatrix,
}

pub fn modular_data(triple: &GnsTriple) -> Result<ModularData> {
    let state = triple.state();
    let n = triple.n();
    let s = state.support_basis();
    let r = s.ncols();
    let faithful = state.is_faithful();

    let v0 = if faithful {
        ComplexMatrix::identity(n * n, n * n)
    } else {
        let mut v0 = ComplexMatrix::zeros(n * n, r * r);
        for i in 0..r {
            for j in 0..r {
                let u = s.column(i) * s.column(j).adjoint();
                v0.set_column(i * r + j, &vectorize(&u));
            }
        }
        v0
    };
    let h0_basis = triple.embedding().adjoint() * &v0;

    let rho = state.rho().matrix();
    let rho_pinv = state.pseudo_inverse();
    let delta_ambient = kron(rho, &rho_pinv.matrix().transpose())?;
    let delta = HermitianOperator::symmetrized(v0.adjoint() * delta_ambient * &v0);
    let delta_dec = delta.eig()?;
    if delta_dec.min() <= 0.0 {
        return Err(Error::InvalidState(format!(
            "modular operator not positive on H0 (min eigenvalue {:e})",
            delta_dec.min()
        )));
    }
    let log_delta = delta_dec.apply(f64::ln)?;

    let flip = flip_operator(n)?;
    let j = AntiLinear::new(v0.adjoint() * flip * v0.map(|z| z.conj()));

    let sqrt_rho = state.sqrt();
    let m = r * r;
    let mut units_omega = ComplexMatrix::zeros(m, m);
    let mut adjoint_omega = ComplexMatrix::zeros(m, m);
    for i in 0..r {
        for jj in 0..r {
            let u = s.column(i) * s.column(jj).adjoint();
            let a = v0.adjoint() * vectorize(&(&u * sqrt_rho.matrix()));
            let b = v0.adjoint() * vectorize(&(u.adjoint() * sqrt_rho.matrix()));
            units_omega.set_column(i * r + jj, &a);
            adjoint_omega.set_column(i * r + jj, &b);
        }
    }
    let inv = units_omega
        .map(|z| z.conj())
        .try_inverse()
        .ok_or(Error::NoConvergence)?;
    let tomita = AntiLinear::new(adjoint_omega * inv);

    let log_dec = log_delta.eig()?;
    let e0 = log_dec.spectral_projection(|l| l.abs() <= KERNEL_TOL);
    let e_proj = HermitianOperator::symmetrized(&h0_basis * h0_basis.adjoint());
    let omega = h0_basis.adjoint() * triple.omega();

    Ok(ModularData {
        faithful,
        h0_basis,
        e_proj,
        omega,
        delta,
        delta_dec,
        log_delta,
        j,
        tomita,
        e0,
        support: s,
    })
}

impl ModularData {
    pub fn is_faithful(&self) -> bool {
        self.faithful
    }

    /// Complex dimension of `H₀`.
    pub fn h0_dim(&self) -> usize {
        self.h0_basis.ncols()
    }

    pub fn h0_basis(&self) -> &ComplexMatrix {
        &self.h0_basis
    }

    /// `E` in GNS coordinates.
    pub fn e_projection(&self) -> &HermitianOperator {
        &self.e_proj
    }

    pub fn e_rank(&self) -> usize {
        self.h0_dim()
    }

    /// `Ω` in `H₀` coordinates.
    pub fn omega(&self) -> &ComplexVector {
        &self.omega
    }

    pub fn delta(&self) -> &HermitianOperator {
        &self.delta
    }

    pub fn delta_spectral(&self) -> &SpectralDecomposition {
        &self.delta_dec
    }

    pub fn log_delta(&self) -> &HermitianOperator {
        &self.log_delta
    }

    pub fn j(&self) -> &AntiLinear {
        &self.j
    }

    pub fn tomita(&self) -> &AntiLinear {
        &self.tomita
    }

    /// `J Δ^{1/2}` from the stored polar data.
    pub fn polar_tomita(&self) -> AntiLinear {
        let half = self.delta_dec.apply(f64::sqrt).expect("positive spectrum");
        self.j.after_linear(half.matrix())
    }

    /// Projection onto `ker log Δ` in `H₀` coordinates.
    pub fn e0(&self) -> &HermitianOperator {
        &self.e0
    }

    pub fn support(&self) -> &ComplexMatrix {
        &self.support
    }

    /// `ΔE` as an operator on the GNS space (zero off `H₀`).
    pub fn delta_e(&self) -> HermitianOperator {
        HermitianOperator::symmetrized(&self.h0_basis * self.delta.matrix() * self.h0_basis.adjoint())
    }

    /// Extends an `H₀` operator `A` to the GNS space as `A ⊕ c(1 − E)`.
    pub fn extend(&self, a: &HermitianOperator, complement: f64) -> HermitianOperator {
        let d = self.h0_basis.nrows();
        let inner = &self.h0_basis * a.matrix() * self.h0_basis.adjoint();
        let outer = (ComplexMatrix::identity(d, d) - self.e_proj.matrix()) * c64(complement, 0.0);
        HermitianOperator::symmetrized(inner + outer)
    }

    /// Restricts a GNS-space operator commuting with `E` to `H₀`.
    pub fn restrict(&self, a: &HermitianOperator) -> HermitianOperator {
        a.compress(&self.h0_basis)
    }

    /// `H₀` coordinates of `XΩ` for `X ∈ M` (only the `EXE` part survives).
    pub fn h0_vector(&self, triple: &GnsTriple, x: &ComplexMatrix) -> ComplexVector {
        self.h0_basis.adjoint() * triple.x_omega(x)
    }

    /// Copy with `Δ` multiplied by `scale` while the Tomita map is kept;
    /// a negative control for the relation checks.
    pub fn with_scaled_delta(&self, scale: f64) -> Result<Self> {
        let delta = self.delta.scale(scale);
        let delta_dec = delta.eig()?;
        let log_delta = delta_dec.apply(f64::ln)?;
        let e0 = log_delta.eig()?.spectral_projection(|l| l.abs() <= KERNEL_TOL);
        Ok(Self {
            delta,
            delta_dec,
            log_delta,
            e0,
            ..self.clone()
        })
    }
}

/// Relation residuals of the modular objects; all should vanish.
#[derive(Debug, Clone)]
pub struct ModularResiduals {
    pub j_involution: f64,
    pub j_delta_j: f64,
    pub polar: f64,
    pub delta_from_tomita: f64,
    pub delta_omega: f64,
    pub j_omega: f64,
    pub tomita_on_samples: f64,
    pub modular_group: f64,
}

pub const MODULAR_TOL: f64 = 1e-10;

pub fn modular_residuals(md: &ModularData, triple: &GnsTriple, samples: usize, seed: u64) -> ModularResiduals {
    let m = md.h0_dim();
    let id = ComplexMatrix::identity(m, m);
    let j_involution = (md.j.square() - &id).norm();
    let delta_inv = md.delta_dec.apply(|l| 1.0 / l).expect("positive spectrum");
    let j_delta_j = (md.j.conjugate_linear(md.delta.matrix()) - delta_inv.matrix()).norm();
    let polar_s = md.polar_tomita();
    let polar = (polar_s.matrix() - md.tomita.matrix()).norm();
    // Δ = S*S, i.e. M^T conj(M) for S = M∘conj
    let ms = md.tomita.matrix();
    let delta_from_tomita = (ms.transpose() * ms.map(|z| z.conj()) - md.delta.matrix()).norm();
    let delta_omega = (md.delta.matrix() * &md.omega - &md.omega).norm();
    let j_omega = (md.j.apply(&md.omega) - &md.omega).norm();

    let s = &md.support;
    let r = s.ncols();
    let mut rng = rng_from_seed(seed);
    let mut tomita_on_samples: f64 = 0.0;
    let mut modular_group: f64 = 0.0;
    let n = triple.n();
    let v0_units = |a: &ComplexMatrix| s * a * s.adjoint();
    for k in 0..samples {
        let a = contraction_from(&mut rng, r);
        let x = v0_units(&a);
        let xo = md.h0_vector(triple, &x);
        let xso = md.h0_vector(triple, &x.adjoint());
        tomita_on_samples = tomita_on_samples.max((polar_s.apply(&xo) - xso).norm());

        // Δ^{it} π(X) Δ^{-it} must commute with right multiplications on H₀
        let t = -2.0 + 4.0 * (k as f64 + 0.5) / samples.max(1) as f64;
        let c = v0_units(&contraction_from(&mut rng, r));
        let dit = md.delta_dec.apply_complex(|l| C64::from_polar(1.0, t * l.ln()));
        let left = md.h0_basis.adjoint() * triple.pi(&x) * &md.h0_basis;
        let evolved = &dit * left * dit.adjoint();
        let right_ambient = ComplexMatrix::identity(n, n).kronecker(&c.transpose());
        let right = md.h0_basis.adjoint() * triple.restrict(&right_ambient) * &md.h0_basis;
        modular_group = modular_group.max((&evolved * &right - &right * &evolved).norm());
    }
    ModularResiduals {
        j_involution,
        j_delta_j,
        polar,
        delta_from_tomita,
        delta_omega,
        j_omega,
        tomita_on_samples,
        modular_group,
    }
}

/// Bundled sanity suite for `J² = 1`, `JΔJ = Δ⁻¹`, `S = JΔ^{1/2}`,
/// `Δ = S*S`, `ΔΩ = JΩ = Ω`, `S XΩ = X*Ω` and modular-group covariance.
pub fn verify_modular_relations(md: &ModularData, triple: &GnsTriple, samples: usize, seed: u64) -> ConditionReport {
    let res = modular_residuals(md, triple, samples, seed);
    let scale = md.delta.norm().max(1.0 / md.delta_dec.min()).max(1.0);
    let tol = MODULAR_TOL * scale;
    let mut report = ConditionReport::new(
        "modular_relations",
        Provenance::Sampled {
            seed,
            n: samples as u64,
        },
        tol,
    );
    for (name, v) in [
        ("J^2 = 1", res.j_involution),
        ("J Delta J = Delta^-1", res.j_delta_j),
        ("S = J Delta^1/2", res.polar),
        ("Delta = S* S", res.delta_from_tomita),
        ("Delta Omega = Omega", res.delta_omega),
        ("J Omega = Omega", res.j_omega),
        ("S X Omega = X* Omega", res.tomita_on_samples),
        ("modular group preserves M", res.modular_group),
    ] {
        report.push_sub(name, v <= tol, v, tol);
    }
    report.set_value("h0_dim", md.h0_dim() as f64);
    if !md.is_faithful() {
        report.note(format!(
            "state has rank {} < {}; modular data built on the reduced space E H",
            triple.state().support_rank(),
            triple.n()
        ));
    }
    report.finish()
}

/// `𝒦 = closure(M_sa Ω)` in `H₀` coordinates, built twice: as the real span
/// of selfadjoint vectors and as the fixed points of the Tomita map.
#[derive(Debug, Clone)]
pub struct StandardSubspace {
    basis: DMatrix<f64>,
    fixed_point_basis: DMatrix<f64>,
    /// `‖(1 − P_fix) B_span‖` and `‖(1 − P_span) B_fix‖`.
    pub span_in_fixed: f64,
    pub fixed_in_span: f64,
    pub min_principal_angle: f64,
    /// Real rank of `𝒦 + i𝒦` compared against `2 dim_C H₀`.
    pub sum_rank: usize,
}

pub const STANDARD_TOL: f64 = 1e-10;

pub fn standard_subspace(md: &ModularData, triple: &GnsTriple) -> Result<StandardSubspace> {
    let s = md.support();
    let r = s.ncols();
    let m = md.h0_dim();
    let mut cols: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(r * r);
    let unit = |i: usize, j: usize| s.column(i) * s.column(j).adjoint();
    for i in 0..r {
        cols.push(to_real(&md.h0_vector(triple, &unit(i, i))));
        for j in (i + 1)..r {
            let sym = unit(i, j) + unit(j, i);
            let asym = (unit(i, j) - unit(j, i)) * c64(0.0, 1.0);
            cols.push(to_real(&md.h0_vector(triple, &sym)));
            cols.push(to_real(&md.h0_vector(triple, &asym)));
        }
    }
    let stacked = DMatrix::from_columns(&cols);
    let basis = orthonormal_span(&stacked, 1e-10);

    let s_real = md.tomita().real_rep();
    let fixed = kernel_basis(&(s_real - DMatrix::identity(2 * m, 2 * m)), 1e-9 * md.delta().norm().max(1.0));

    let span_in_fixed = containment_residual(&basis, &fixed);
    let fixed_in_span = containment_residual(&fixed, &basis);
    let ibasis = times_i(&basis);
    let cos = principal_cosines(&basis, &ibasis);
    let max_cos = cos.first().copied().unwrap_or(0.0).min(1.0);
    let min_principal_angle = max_cos.acos();
    let combined = DMatrix::from_fn(2 * m, 2 * basis.ncols(), |i, j| {
        if j < basis.ncols() {
            basis[(i, j)]
        } else {
            ibasis[(i, j - basis.ncols())]
        }
    });
    let sum_rank = orthonormal_span(&combined, 1e-10).ncols();
    Ok(StandardSubspace {
        basis,
        fixed_point_basis: fixed,
        span_in_fixed,
        fixed_in_span,
        min_principal_angle,
        sum_rank,
    })
}

impl StandardSubspace {
    /// Real orthonormal basis (columns, real form) from `M_sa Ω`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn fixed_point_basis(&self) -> &DMatrix<f64> {
        &self.fixed_point_basis
    }

    pub fn real_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn vectors(&self) -> Vec<ComplexVector> {
        self.basis.column_iter().map(|c| from_real(&c.into_owned())).collect()
    }

    /// `𝒦 ∩ i𝒦 = {0}` and `𝒦 + i𝒦` spans `H₀`.
    pub fn is_standard(&self, h0_dim: usize) -> bool {
        self.min_principal_angle > STANDARD_TOL.sqrt() && self.sum_rank == 2 * h0_dim
    }

    pub fn report(&self, h0_dim: usize) -> ConditionReport {
        let mut r = ConditionReport::new("standard_subspace", Provenance::Exact, STANDARD_TOL);
        r.push_sub("span(M_sa Omega) in fix(S)", self.span_in_fixed <= STANDARD_TOL, self.span_in_fixed, STANDARD_TOL);
        r.push_sub("fix(S) in span(M_sa Omega)", self.fixed_in_span <= STANDARD_TOL, self.fixed_in_span, STANDARD_TOL);
        r.push_sub(
            "real dimension",
            self.basis.ncols() == h0_dim && self.fixed_point_basis.ncols() == h0_dim,
            self.basis.ncols() as f64,
            0.0,
        );
        r.push_sub("K and iK intersect trivially", self.min_principal_angle > STANDARD_TOL.sqrt(), self.min_principal_angle, STANDARD_TOL.sqrt());
        r.push_sub("K + iK spans H0", self.sum_rank == 2 * h0_dim, self.sum_rank as f64, 0.0);
        let mut r = r.finish();
        if r.status == crate::report::Status::Fail {
            r.witness = Some(Witness::scalar("min principal angle", self.min_principal_angle));
        }
        r
    }
}
