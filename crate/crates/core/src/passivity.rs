//! Passivity of the energy form `(KXΩ, XΩ)` and of the modular form
//! `−(log Δ ξ, ξ)` on the standard subspace, plus the `ψ±` decomposition of
//! the standard subspace.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::Liouvillean;
use crate::error::{Error, Result};
use crate::gns::{AntiLinear, GnsTriple, ModularData, StandardSubspace, KERNEL_TOL};
use crate::operator::{
    c64, real_matrix_min_eigen, ComplexMatrix, ComplexVector, HermitianOperator,
};
use crate::realform::{from_real, linear_rep, orthonormal_span, to_real};
use crate::report::{ConditionReport, Provenance, Witness};
use crate::sampling::{gaussian_real_vector, rng_from_seed, selfadjoint_from};

pub const PASSIVITY_TOL: f64 = 1e-9;
pub const PSI_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PassivityReport {
    /// Smallest sampled form value.
    pub sampled_min: f64,
    /// Smallest eigenvalue of the form compressed to the real subspace.
    pub exact_min: f64,
    /// Vector attaining `exact_min`.
    pub witness: ComplexVector,
    pub passed: bool,
    pub report: ConditionReport,
}

/// Hermitian matrices `E_ii`, `E_ij + E_ji`, `i(E_ij − E_ji)` spanning `M_n`
/// over the reals.
fn selfadjoint_basis(n: usize) -> Vec<ComplexMatrix> {
    let unit = |i: usize, j: usize| {
        let mut m = ComplexMatrix::zeros(n, n);
        m[(i, j)] = c64(1.0, 0.0);
        m
    };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(unit(i, i));
        for j in (i + 1)..n {
            out.push(unit(i, j) + unit(j, i));
            out.push((unit(i, j) - unit(j, i)) * c64(0.0, 1.0));
        }
    }
    out
}

/// Minimum of the real quadratic form `ξ ↦ (A ξ, ξ)` over unit `ξ` in the
/// real span of the orthonormal real-form columns of `basis`.
fn compressed_min(a: &HermitianOperator, basis: &DMatrix<f64>) -> Result<(f64, ComplexVector)> {
    if basis.ncols() == 0 {
        return Ok((0.0, ComplexVector::zeros(basis.nrows() / 2)));
    }
    let form = basis.transpose() * linear_rep(a.matrix()) * basis;
    let (val, v) = real_matrix_min_eigen(&form)?;
    Ok((val, from_real(&(basis * v))))
}

/// `(KXΩ, XΩ) ≥ 0` for selfadjoint `X`, sampled with `‖X‖ = 1` and exactly
/// on the real span of `M_sa Ω`.
pub fn energy_form_check(lv: &Liouvillean, triple: &GnsTriple, samples: usize, seed: u64) -> Result<PassivityReport> {
    let n = triple.n();
    let mut rng = rng_from_seed(seed);
    let mut sampled_min = f64::INFINITY;
    for _ in 0..samples {
        let x = selfadjoint_from(&mut rng, n);
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let x = x.scale(1.0 / norm);
        let xo = triple.x_omega(x.matrix());
        sampled_min = sampled_min.min(lv.operator().expectation(&xo));
    }
    let cols: Vec<DVector<f64>> = selfadjoint_basis(n).iter().map(|x| to_real(&triple.x_omega(x))).collect();
    let span = orthonormal_span(&DMatrix::from_columns(&cols), 1e-10);
    let (exact_min, witness) = compressed_min(lv.operator(), &span)?;
    let sampled_min = if samples == 0 { exact_min } else { sampled_min };

    let passed = sampled_min >= -PASSIVITY_TOL;
    let mut r = ConditionReport::new(
        "passivity_energy",
        Provenance::Sampled {
            seed,
            n: samples as u64,
        },
        PASSIVITY_TOL,
    );
    r.set_value("sampled_min", sampled_min);
    r.set_value("exact_min", exact_min);
    r.push_sub("(K X Omega, X Omega) >= 0 on samples", passed, sampled_min, -PASSIVITY_TOL);
    r.push_sub("compressed form >= 0", exact_min >= -PASSIVITY_TOL, exact_min, -PASSIVITY_TOL);
    if exact_min < -PASSIVITY_TOL {
        r.witness = Some(Witness::vector("minimizing vector", exact_min, &witness));
    }
    let report = r.finish();
    Ok(PassivityReport {
        sampled_min,
        exact_min,
        witness,
        passed: report.passed(),
        report,
    })
}

/// `−(log Δ ξ, ξ) ≥ 0` for `ξ` in the standard subspace.
pub fn subspace_passivity_check(
    md: &ModularData,
    ss: &StandardSubspace,
    samples: usize,
    seed: u64,
) -> Result<PassivityReport> {
    if !ss.is_standard(md.h0_dim()) {
        return Err(Error::NotStandard {
            min_angle: ss.min_principal_angle,
        });
    }
    let neg_log = md.log_delta().scale(-1.0);
    let basis = ss.basis();
    let mut rng = rng_from_seed(seed);
    let mut sampled_min = f64::INFINITY;
    for _ in 0..samples {
        let coeffs = gaussian_real_vector(&mut rng, basis.ncols());
        let xi = from_real(&(basis * coeffs));
        let norm2 = xi.norm_squared();
        if norm2 > 0.0 {
            sampled_min = sampled_min.min(neg_log.expectation(&xi) / norm2);
        }
    }
    let (exact_min, witness) = compressed_min(&neg_log, basis)?;
    let sampled_min = if samples == 0 { exact_min } else { sampled_min };
    let omega_value = neg_log.expectation(md.omega());

    let mut r = ConditionReport::new(
        "passivity_subspace",
        Provenance::Sampled {
            seed,
            n: samples as u64,
        },
        PASSIVITY_TOL,
    );
    r.set_value("sampled_min", sampled_min);
    r.set_value("exact_min", exact_min);
    r.set_value("omega_value", omega_value);
    r.push_sub("-(log Delta xi, xi) >= 0 on samples", sampled_min >= -PASSIVITY_TOL, sampled_min, -PASSIVITY_TOL);
    r.push_sub("compressed form >= 0", exact_min >= -PASSIVITY_TOL, exact_min, -PASSIVITY_TOL);
    if exact_min < -PASSIVITY_TOL {
        r.witness = Some(Witness::vector("minimizing vector", exact_min, &witness));
    }
    let report = r.finish();
    Ok(PassivityReport {
        sampled_min,
        exact_min,
        witness,
        passed: report.passed(),
        report,
    })
}

/// `𝒦 ⊖ ker = ψ⁺(L) ⊕ ψ⁻(L)` with `L` the real span of an eigenbasis of
/// `log Δ` on its positive spectral subspace.
#[derive(Debug, Clone)]
pub struct PsiDecomposition {
    c: AntiLinear,
    u: ComplexMatrix,
    theta: HermitianOperator,
    /// `e_i`, eigenvectors of `log Δ` with eigenvalues `μ_i > 0`.
    l_basis: ComplexMatrix,
    mu: Vec<f64>,
    /// Orthonormal `J`-fixed basis of `ker log Δ`.
    kernel_basis: ComplexMatrix,
    log_delta: HermitianOperator,
    j: AntiLinear,
    delta: HermitianOperator,
    cos_half: ComplexMatrix,
    sin_half: ComplexMatrix,
    cos_theta: ComplexMatrix,
}

/// `Θ` with `tan(Θ/2) = e^{−|μ|/2}`.
pub fn theta_of(mu: f64) -> f64 {
    2.0 * (-0.5 * mu.abs()).exp().atan()
}

pub fn psi_decomposition(md: &ModularData) -> Result<PsiDecomposition> {
    let m = md.h0_dim();
    let dec = md.log_delta().eig()?;
    let ev = dec.eigenvalues();
    let pos: Vec<usize> = (0..m).filter(|&i| ev[i] > KERNEL_TOL).collect();
    let ker: Vec<usize> = (0..m).filter(|&i| ev[i].abs() <= KERNEL_TOL).collect();
    if pos.is_empty() && md.log_delta().norm() > KERNEL_TOL {
        return Err(Error::DegenerateSpectrum);
    }
    let j = md.j().clone();
    let l_basis = ComplexMatrix::from_fn(m, pos.len(), |r, c| dec.eigenvectors()[(r, pos[c])]);
    let mu: Vec<f64> = pos.iter().map(|&i| ev[i]).collect();

    // J-fixed orthonormal basis of the kernel, by real Gram–Schmidt
    let mut kernel: Vec<ComplexVector> = Vec::new();
    for &i in &ker {
        let v = dec.eigenvector(i);
        let jv = j.apply(&v);
        for cand in [&v + &jv, (&v - &jv) * c64(0.0, 1.0)] {
            let mut w = cand;
            for k in &kernel {
                let overlap = k.dotc(&w).re;
                w -= k * c64(overlap, 0.0);
            }
            let norm = w.norm();
            if norm > 1e-8 && kernel.len() < ker.len() {
                kernel.push(w / c64(norm, 0.0));
            }
        }
    }
    let kernel_basis = if kernel.is_empty() {
        ComplexMatrix::zeros(m, 0)
    } else {
        ComplexMatrix::from_columns(&kernel)
    };

    let p = pos.len();
    let mut w = ComplexMatrix::zeros(m, m);
    for c in 0..p {
        let e = l_basis.column(c).into_owned();
        w.set_column(c, &e);
        w.set_column(p + c, &j.apply(&e));
    }
    for c in 0..kernel_basis.ncols() {
        w.set_column(2 * p + c, &kernel_basis.column(c));
    }
    if 2 * p + kernel_basis.ncols() != m {
        return Err(Error::DegenerateSpectrum);
    }
    let c = AntiLinear::new(&w * w.transpose());
    let u = j.matrix() * c.matrix().map(|z| z.conj());
    let theta = dec.apply(theta_of)?;
    let cos_half = dec.apply(|l| (0.5 * theta_of(l)).cos())?.into_matrix();
    let sin_half = dec.apply(|l| (0.5 * theta_of(l)).sin())?.into_matrix();
    let cos_theta = dec.apply(|l| theta_of(l).cos())?.into_matrix();
    Ok(PsiDecomposition {
        c,
        u,
        theta,
        l_basis,
        mu,
        kernel_basis,
        log_delta: md.log_delta().clone(),
        j,
        delta: md.delta().clone(),
        cos_half,
        sin_half,
        cos_theta,
    })
}

impl PsiDecomposition {
    pub fn c(&self) -> &AntiLinear {
        &self.c
    }

    /// `U = JC`, complex linear.
    pub fn u(&self) -> &ComplexMatrix {
        &self.u
    }

    pub fn theta(&self) -> &HermitianOperator {
        &self.theta
    }

    pub fn l_basis(&self) -> &ComplexMatrix {
        &self.l_basis
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn kernel_basis(&self) -> &ComplexMatrix {
        &self.kernel_basis
    }

    /// Real dimension of `L`.
    pub fn l_dim(&self) -> usize {
        self.l_basis.ncols()
    }

    fn embed(&self, y: &DVector<f64>) -> ComplexVector {
        &self.l_basis * y.map(|v| c64(v, 0.0))
    }

    /// `ψ⁺(y) = U cos(Θ/2) y + sin(Θ/2) y`.
    pub fn psi_plus(&self, y: &DVector<f64>) -> ComplexVector {
        let v = self.embed(y);
        &self.u * (&self.cos_half * &v) + &self.sin_half * &v
    }

    /// `ψ⁻(y) = iU cos(Θ/2) y − i sin(Θ/2) y`.
    pub fn psi_minus(&self, y: &DVector<f64>) -> ComplexVector {
        let v = self.embed(y);
        let i = c64(0.0, 1.0);
        (&self.u * (&self.cos_half * &v)) * i - (&self.sin_half * &v) * i
    }

    fn unit(&self, i: usize) -> DVector<f64> {
        let mut y = DVector::zeros(self.l_dim());
        y[i] = 1.0;
        y
    }

    /// Splits `ξ ∈ 𝒦` as `ψ⁺(y) + ψ⁻(z) + κ` with `κ` in the kernel.
    pub fn decompose(&self, xi: &ComplexVector) -> Decomposition {
        let p = self.l_dim();
        let plus: Vec<ComplexVector> = (0..p).map(|i| self.psi_plus(&self.unit(i))).collect();
        let minus: Vec<ComplexVector> = (0..p).map(|i| self.psi_minus(&self.unit(i))).collect();
        let y = DVector::from_fn(p, |i, _| plus[i].dotc(xi).re);
        let z = DVector::from_fn(p, |i, _| minus[i].dotc(xi).re);
        let kernel = &self.kernel_basis * (self.kernel_basis.adjoint() * xi);
        let rebuilt = self.psi_plus(&y) + self.psi_minus(&z) + &kernel;
        Decomposition {
            residual: (xi - rebuilt).norm(),
            y,
            z,
            kernel,
        }
    }

    /// `−(log Δ ξ, ξ) = Σ μ_i cos Θ_i (y_i² + z_i²)`.
    pub fn form_value(&self, d: &Decomposition) -> f64 {
        self.mu
            .iter()
            .enumerate()
            .map(|(i, &mu)| mu * theta_of(mu).cos() * (d.y[i] * d.y[i] + d.z[i] * d.z[i]))
            .sum()
    }

    /// Smallest value of the form per unit norm on `𝒦` as seen by the
    /// decomposition.
    pub fn form_min(&self) -> f64 {
        let pos_min = self
            .mu
            .iter()
            .map(|&mu| mu * theta_of(mu).cos())
            .fold(f64::INFINITY, f64::min);
        if self.kernel_basis.ncols() > 0 {
            pos_min.min(0.0)
        } else if pos_min.is_finite() {
            pos_min
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub kernel: ComplexVector,
    pub residual: f64,
}

/// Structural and sampled checks of a [`PsiDecomposition`].
pub fn psi_decomposition_check(
    psi: &PsiDecomposition,
    ss: &StandardSubspace,
    samples: usize,
    seed: u64,
) -> ConditionReport {
    let m = psi.u.nrows();
    let id = ComplexMatrix::identity(m, m);
    let mut r = ConditionReport::new(
        "psi_decomposition",
        Provenance::Sampled {
            seed,
            n: samples as u64,
        },
        PASSIVITY_TOL,
    );
    r.set_value("l_dim", psi.l_dim() as f64);
    if let Some(&mu) = psi.mu.first() {
        r.set_value("theta_first", theta_of(mu));
    }

    let c2 = (psi.c.square() - &id).norm();
    let cj = (psi.c.matrix() * psi.j.matrix().map(|z| z.conj()) - psi.j.matrix() * psi.c.matrix().map(|z| z.conj())).norm();
    let cd = (psi.c.conjugate_linear(psi.delta.matrix()) - psi.delta.matrix()).norm();
    r.push_sub("C^2 = 1", c2 <= PSI_TOL, c2, PSI_TOL);
    r.push_sub("CJ = JC", cj <= PSI_TOL, cj, PSI_TOL);
    r.push_sub("C Delta C = Delta", cd <= PSI_TOL * psi.delta.norm().max(1.0), cd, PSI_TOL * psi.delta.norm().max(1.0));
    let theta_ok = psi
        .theta
        .eig()
        .map(|d| d.min() >= -PSI_TOL && d.max() <= std::f64::consts::FRAC_PI_2 + PSI_TOL)
        .unwrap_or(false);
    r.push_sub("spec(Theta) in [0, pi/2]", theta_ok, 0.0, PSI_TOL);

    let mut rng = rng_from_seed(seed);
    let p = psi.l_dim();
    let k_basis = ss.basis();
    let mut isometry: f64 = 0.0;
    let mut orth: f64 = 0.0;
    let mut in_k: f64 = 0.0;
    let mut cross: f64 = 0.0;
    let mut minus_form: f64 = 0.0;
    let log = psi.log_delta.matrix();
    if p > 0 {
        for _ in 0..samples {
            let y = gaussian_real_vector(&mut rng, p);
            let z = gaussian_real_vector(&mut rng, p);
            let py = psi.psi_plus(&y);
            let my = psi.psi_minus(&y);
            let pz = psi.psi_plus(&z);
            let mz = psi.psi_minus(&z);
            isometry = isometry
                .max((py.norm() - y.norm()).abs())
                .max((my.norm() - y.norm()).abs());
            orth = orth.max(py.dotc(&mz).re.abs());
            let stuck_out = |v: &ComplexVector| crate::realform::containment_residual(&DMatrix::from_columns(&[to_real(v)]), k_basis);
            in_k = in_k.max(stuck_out(&py)).max(stuck_out(&my));
            cross = cross
                .max(my.dotc(&(log * &pz)).re.abs())
                .max(py.dotc(&(log * &mz)).re.abs());
            // (ψ⁻(y), log Δ ψ⁻(y)) = −(y, cos Θ log Δ y)
            let ey = psi.embed(&y);
            let rhs = -(ey.dotc(&(&psi.cos_theta * (log * &ey)))).re;
            minus_form = minus_form.max((my.dotc(&(log * &my)).re - rhs).abs());
        }
    }
    r.push_sub("psi isometric", isometry <= PSI_TOL, isometry, PSI_TOL);
    r.push_sub("ranges real-orthogonal", orth <= PSI_TOL, orth, PSI_TOL);
    r.push_sub("ranges inside K", in_k <= PASSIVITY_TOL, in_k, PASSIVITY_TOL);
    r.push_sub("cross terms purely imaginary", cross <= PSI_TOL, cross, PSI_TOL);
    r.push_sub("psi- form identity", minus_form <= PASSIVITY_TOL, minus_form, PASSIVITY_TOL);

    // rank of ψ⁺ + ψ⁻ together with the kernel
    let mut cols: Vec<DVector<f64>> = (0..p)
        .flat_map(|i| {
            let e = psi.unit(i);
            [to_real(&psi.psi_plus(&e)), to_real(&psi.psi_minus(&e))]
        })
        .collect();
    cols.extend(psi.kernel_basis.column_iter().map(|c| to_real(&c.into_owned())));
    let rank = if cols.is_empty() {
        0
    } else {
        orthonormal_span(&DMatrix::from_columns(&cols), 1e-10).ncols()
    };
    r.push_sub("psi+ + psi- + kernel spans K", rank == ss.real_dim(), rank as f64, ss.real_dim() as f64);

    let neg_log = psi.log_delta.scale(-1.0);
    let mut recon: f64 = 0.0;
    let mut norm_id: f64 = 0.0;
    let mut form: f64 = 0.0;
    for _ in 0..samples {
        let coeffs = gaussian_real_vector(&mut rng, k_basis.ncols());
        let xi = from_real(&(k_basis * coeffs));
        let d = psi.decompose(&xi);
        recon = recon.max(d.residual);
        let n2 = d.y.norm_squared() + d.z.norm_squared() + d.kernel.norm_squared();
        norm_id = norm_id.max((xi.norm_squared() - n2).abs());
        form = form.max((neg_log.expectation(&xi) - psi.form_value(&d)).abs());
    }
    r.set_value("reconstruction", recon);
    r.set_value("form_mismatch", form);
    r.set_value("form_min", psi.form_min());
    r.push_sub("reconstruction", recon <= PASSIVITY_TOL, recon, PASSIVITY_TOL);
    r.push_sub("norm identity", norm_id <= PASSIVITY_TOL, norm_id, PASSIVITY_TOL);
    r.push_sub("form value", form <= PASSIVITY_TOL, form, PASSIVITY_TOL);
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{liouvillean, Dynamics};
    use crate::gns::{gns_from_state, modular_data, standard_subspace, QuantumState};
    use crate::sampling::random_selfadjoint;

    fn setup(h: HermitianOperator, beta: f64) -> (GnsTriple, ModularData, StandardSubspace, Liouvillean) {
        let st = QuantumState::gibbs(&h, beta).unwrap();
        let g = gns_from_state(&st).unwrap();
        let md = modular_data(&g).unwrap();
        let ss = standard_subspace(&md, &g).unwrap();
        let lv = liouvillean(&Dynamics::new(h).unwrap(), &g).unwrap();
        (g, md, ss, lv)
    }

    #[test]
    fn energy_form_gibbs_and_trivial() {
        let (g, _, _, lv) = setup(HermitianOperator::from_real_diagonal(&[0.0, 1.0]), 1.0);
        let rep = energy_form_check(&lv, &g, 100, 1).unwrap();
        assert!(rep.passed, "{:?}", rep.report);
        let g = gns_from_state(&QuantumState::tracial(2).unwrap()).unwrap();
        let lv = liouvillean(&Dynamics::trivial(2), &g).unwrap();
        let rep = energy_form_check(&lv, &g, 20, 1).unwrap();
        assert!(rep.sampled_min.abs() < 1e-15 && rep.exact_min.abs() < 1e-15);
    }

    #[test]
    fn subspace_passivity_examples() {
        let (_, md, ss, _) = setup(HermitianOperator::from_real_diagonal(&[0.0, 1.0]), 1.0);
        let rep = subspace_passivity_check(&md, &ss, 100, 2).unwrap();
        assert!(rep.passed);
        assert!(rep.exact_min >= -1e-10);
        assert!(rep.report.value("omega_value").unwrap().abs() < 1e-14);
        let g = gns_from_state(&QuantumState::tracial(3).unwrap()).unwrap();
        let md = modular_data(&g).unwrap();
        let ss = standard_subspace(&md, &g).unwrap();
        let rep = subspace_passivity_check(&md, &ss, 20, 2).unwrap();
        assert!(rep.sampled_min.abs() < 1e-14 && rep.exact_min.abs() < 1e-14);
    }

    #[test]
    fn two_level_theta() {
        let (_, md, ss, _) = setup(HermitianOperator::from_real_diagonal(&[0.0, 1.0]), 1.0);
        let psi = psi_decomposition(&md).unwrap();
        assert_eq!(psi.l_dim(), 1);
        assert!((psi.mu()[0] - 1.0).abs() < 1e-12);
        let expected = 2.0 * (-0.5f64).exp().atan();
        assert!((theta_of(psi.mu()[0]) - expected).abs() < 1e-12);
        let rep = psi_decomposition_check(&psi, &ss, 50, 3);
        assert!(rep.passed(), "{rep:#?}");
    }

    #[test]
    fn tracial_decomposition_is_trivial() {
        let g = gns_from_state(&QuantumState::tracial(2).unwrap()).unwrap();
        let md = modular_data(&g).unwrap();
        let ss = standard_subspace(&md, &g).unwrap();
        let psi = psi_decomposition(&md).unwrap();
        assert_eq!(psi.l_dim(), 0);
        assert_eq!(psi.kernel_basis().ncols(), 4);
        assert!(psi_decomposition_check(&psi, &ss, 10, 1).passed());
    }

    #[test]
    fn random_states_decompose() {
        for seed in 0..4 {
            let n = 2 + (seed as usize % 3);
            let (_, md, ss, _) = setup(random_selfadjoint(n, 40 + seed), 0.9);
            let psi = psi_decomposition(&md).unwrap();
            let rep = psi_decomposition_check(&psi, &ss, 30, seed);
            assert!(rep.passed(), "seed {seed}: {rep:#?}");
            let exact = subspace_passivity_check(&md, &ss, 0, 0).unwrap().exact_min;
            assert!((exact - psi.form_min()).abs() < 1e-9);
        }
    }
}
