use ndarray::{Array1, ArrayView1};

use crate::linalg::{dirac_inner, norm, norm_sqr, CVector, C64};

/// Complex amplitudes over lattice sites in the global basis of a triple.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    pub fn new(amplitudes: CVector) -> Self {
        StateVector(amplitudes)
    }

    pub fn from_real(values: &[f64]) -> Self {
        StateVector(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        StateVector(Array1::zeros(len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, C64> {
        self.0.view()
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn dirac_norm(&self) -> f64 {
        norm(self.0.view())
    }

    pub fn dirac_norm_sqr(&self) -> f64 {
        norm_sqr(self.0.view())
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        dirac_inner(self.0.view(), other.0.view())
    }

    /// Per-site Dirac probabilities |⟨l|·⟩|².
    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn conj(&self) -> StateVector {
        StateVector(self.0.mapv(|z| z.conj()))
    }

    pub fn scaled(&self, k: C64) -> StateVector {
        StateVector(self.0.mapv(|z| z * k))
    }

    pub fn normalized(&self) -> Option<StateVector> {
        let n = self.dirac_norm();
        (n > 0.0).then(|| StateVector(self.0.mapv(|z| z / n)))
    }

    pub fn distance(&self, other: &StateVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }
}

impl std::ops::Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 - &rhs.0)
    }
}

impl From<CVector> for StateVector {
    fn from(v: CVector) -> Self {
        StateVector(v)
    }
}
