use kmsbound_core::boundedness::{phi_norm_exact, phi_norm_oracle, PhiMap};
use kmsbound_core::dynamics::{kms_residual, liouvillean, Dynamics};
use kmsbound_core::gns::{gns_from_state, modular_data, modular_residuals, QuantumState, MODULAR_TOL};
use kmsbound_core::holomorphy::{remark_sweep, SequenceKind, SequenceModel};
use kmsbound_core::operator::{operator_norm, psd_leq, HermitianOperator};
use kmsbound_core::sampling::{random_contraction, random_selfadjoint};
use proptest::prelude::*;

fn gibbs(seed: u64, n: usize, beta: f64) -> (QuantumState, Dynamics) {
    let h = random_selfadjoint(n, seed);
    (QuantumState::gibbs(&h, beta).unwrap(), Dynamics::new(h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn functional_calculus_is_multiplicative(seed in 0u64..1000, n in 2usize..5, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let x = random_selfadjoint(n, seed);
        let d = x.eig().unwrap();
        let lhs = d.apply(|l| (a * l).exp()).unwrap().matrix() * d.apply(|l| (b * l).exp()).unwrap().matrix();
        let rhs = d.apply(|l| ((a + b) * l).exp()).unwrap();
        prop_assert!(operator_norm(&(lhs - rhs.matrix())) < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn psd_order_detects_positive_shifts(seed in 0u64..1000, n in 2usize..5, eps in 1e-3f64..1.0) {
        let a = random_selfadjoint(n, seed);
        let c = random_contraction(n, seed + 1);
        let p = HermitianOperator::new(&c * c.adjoint()).unwrap();
        let b = a.add(&p).unwrap();
        prop_assert!(psd_leq(&a, &b, 1e-10).unwrap().holds);
        let lifted = b.add(&HermitianOperator::identity(n).scale(eps)).unwrap();
        let w = psd_leq(&lifted, &a, 1e-10).unwrap();
        prop_assert!(!w.holds);
        prop_assert!(w.min_eigenvalue <= -eps + 1e-9);
    }

    #[test]
    fn gibbs_states_are_kms_at_their_temperature(seed in 0u64..1000, n in 2usize..4, beta in 0.2f64..2.5) {
        let (state, dynamics) = gibbs(seed, n, beta);
        let triple = gns_from_state(&state).unwrap();
        let lv = liouvillean(&dynamics, &triple).unwrap();
        let (res, _) = kms_residual(&triple, &dynamics, &lv, beta, 5, 11, seed).unwrap();
        prop_assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn modular_relations_hold(seed in 0u64..1000, n in 2usize..4, beta in 0.1f64..2.0) {
        let (state, _) = gibbs(seed, n, beta);
        let triple = gns_from_state(&state).unwrap();
        let md = modular_data(&triple).unwrap();
        let r = modular_residuals(&md, &triple, 5, seed);
        let scale = md.delta().norm().max(1.0);
        for v in [r.j_involution, r.j_delta_j, r.polar, r.delta_omega, r.j_omega, r.tomita_on_samples] {
            prop_assert!(v < MODULAR_TOL * scale * 10.0, "{r:?}");
        }
    }

    #[test]
    fn oracle_never_exceeds_exact(seed in 0u64..1000, n in 2usize..4, beta in 0.1f64..2.0, b in 0.0f64..2.0) {
        let (state, dynamics) = gibbs(seed, n, beta);
        let pm = PhiMap::new(&state, &dynamics, b).unwrap();
        prop_assert!(phi_norm_oracle(&pm, 50, seed) <= phi_norm_exact(&pm) + 1e-9);
    }

    #[test]
    fn remark_norm_grows_with_truncation(alpha in 0.05f64..0.45, beta in 0.05f64..0.45, n in 2u64..500) {
        let m = SequenceModel::new(SequenceKind::LogSqrt, alpha, beta, n).unwrap();
        let sw = remark_sweep(&m, &[n, n + 1, 2 * n]).unwrap();
        prop_assert!(sw.monotone);
    }
}

#[test]
fn gibbs_phi_norm_is_one_at_half_temperature() {
    for seed in 0..5 {
        let (state, dynamics) = gibbs(seed, 3, 1.4);
        let pm = PhiMap::new(&state, &dynamics, 0.7).unwrap();
        assert!((phi_norm_exact(&pm) - 1.0).abs() < 1e-10);
        let past = pm.with_exponent(0.9).unwrap();
        assert!(phi_norm_exact(&past) > 1.0);
    }
}
