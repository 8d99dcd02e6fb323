//! Reference systems shared by the acceptance suite.

use std::path::PathBuf;

use kmsbound::scenario::{build_ness, tensor_sum};
use kmsbound_core::boundedness::PhiMap;
use kmsbound_core::dynamics::{liouvillean, Dynamics, Liouvillean};
use kmsbound_core::gns::{gns_from_state, modular_data, GnsTriple, ModularData, QuantumState};
use kmsbound_core::operator::{c64, ComplexMatrix, ComplexVector, HermitianOperator};
use kmsbound_core::sampling::{gaussian_real_vector, rng_from_seed, unitary_from};

pub struct System {
    pub name: String,
    pub state: QuantumState,
    pub dynamics: Dynamics,
    pub triple: GnsTriple,
    pub md: ModularData,
    pub lv: Liouvillean,
}

impl System {
    pub fn new(name: impl Into<String>, state: QuantumState, dynamics: Dynamics) -> Self {
        let triple = gns_from_state(&state).unwrap();
        let md = modular_data(&triple).unwrap();
        let lv = liouvillean(&dynamics, &triple).unwrap();
        Self {
            name: name.into(),
            state,
            dynamics,
            triple,
            md,
            lv,
        }
    }

    pub fn phi(&self, b: f64) -> PhiMap {
        PhiMap::new(&self.state, &self.dynamics, b).unwrap()
    }
}

pub fn diag(values: &[f64]) -> HermitianOperator {
    HermitianOperator::from_real_diagonal(values)
}

pub fn gibbs(name: &str, h: HermitianOperator, beta: f64) -> (System, f64) {
    let state = QuantumState::gibbs(&h, beta).unwrap();
    (System::new(name, state, Dynamics::new(h).unwrap()), beta)
}

/// Gibbs scenarios with their inverse temperatures.
pub fn gibbs_suite() -> Vec<(System, f64)> {
    let mut out: Vec<(System, f64)> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&b| gibbs(&format!("qubit beta={b}"), diag(&[0.0, 1.0]), b))
        .collect();
    out.push(gibbs("qutrit", diag(&[0.0, 0.7, 1.9]), 1.3));
    let two = tensor_sum(&[diag(&[0.0, 1.0]), diag(&[0.0, 0.5])]).unwrap();
    out.push(gibbs("two qubits", two, 0.8));
    out
}

pub fn tracial() -> System {
    System::new("tracial", QuantumState::tracial(3).unwrap(), Dynamics::trivial(3))
}

pub fn pure_ground() -> System {
    let v = ComplexVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
    System::new("pure ground", QuantumState::pure(&v).unwrap(), Dynamics::new(diag(&[0.0, 1.0])).unwrap())
}

pub fn ness() -> System {
    let (state, dynamics) = build_ness(&[(diag(&[0.0, 1.0]), 1.0), (diag(&[0.0, 1.0]), 2.0)]).unwrap();
    System::new("ness", state, dynamics)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn random_commuting(seed: u64, n: usize) -> System {
    let mut rng = rng_from_seed(seed);
    let u = unitary_from(&mut rng, n);
    let rotate = |d: Vec<f64>| {
        let m = ComplexMatrix::from_fn(n, n, |i, j| if i == j { c64(d[i], 0.0) } else { c64(0.0, 0.0) });
        &u * m * u.adjoint()
    };
    let h: Vec<f64> = gaussian_real_vector(&mut rng, n).iter().copied().collect();
    let w: Vec<f64> = gaussian_real_vector(&mut rng, n).iter().map(|x| x.exp()).collect();
    let total: f64 = w.iter().sum();
    let rho = rotate(w.iter().map(|x| x / total).collect());
    let state = QuantumState::new(rho).unwrap();
    let dynamics = Dynamics::new(HermitianOperator::new(rotate(h)).unwrap()).unwrap();
    System::new(format!("random n={n}"), state, dynamics)
}

pub fn scenario_files() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
}

