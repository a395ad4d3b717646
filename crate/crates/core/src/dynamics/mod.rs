//! Time evolution under the triple, expansion of initial states in the
//! common real-energy subspace and the probability audit.
//!
//! Evolution on a uniform grid applies one cached propagator e^{−iMΔt}
//! repeatedly; non-uniform grids get one propagator per distinct step.

mod expm;

pub use expm::expm;

use crate::correspondence::CorrespondenceFamily;
use crate::error::{Error, Result};
use crate::lattice::{parity_operator, HamiltonianTriple};
use crate::linalg::{dirac_inner, CMatrix, CVector, C64};
use crate::spectral::System;
use crate::state::StateVector;

/// e^{−iMt}
pub fn matrix_exponential(m: &CMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::Range(format!("time {t} is not finite")));
    }
    expm(&m.mapv(|z| z * C64::new(0.0, -t)))
}

/// e^{−iMΔt} for one generator and step.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub dt: f64,
    pub system: System,
    matrix: CMatrix,
}

impl Propagator {
    pub fn new(m: &CMatrix, system: System, dt: f64) -> Result<Self> {
        Ok(Propagator { dt, system, matrix: matrix_exponential(m, dt)? })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        self.matrix.dot(v)
    }
}

/// Times 0, Δt, 2Δt, … up to `t_max` inclusive.
pub fn uniform_grid(dt: f64, t_max: f64) -> Result<Vec<f64>> {
    if !dt.is_finite() || dt <= 0.0 || !t_max.is_finite() || t_max < 0.0 {
        return Err(Error::InvalidSpec(format!("bad time grid dt={dt}, t_max={t_max}")));
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidSpec("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidSpec("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec("times must be non-decreasing".into()));
    }
    Ok(())
}

/// States e^{−iMt}v at every entry of `times`.
pub fn propagate(m: &CMatrix, system: System, state: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    check_times(times)?;
    if state.len() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), actual: state.len() });
    }
    let mut cache: Option<Propagator> = None;
    let mut current = state.amplitudes().clone();
    let mut t_prev = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            let reuse = cache.as_ref().is_some_and(|p| (p.dt - dt).abs() <= 1e-12 * dt);
            if !reuse {
                cache = Some(Propagator::new(m, system, dt)?);
            }
            current = cache.as_ref().expect("propagator").apply(&current);
        }
        t_prev = t;
        out.push(StateVector::new(current.clone()));
    }
    Ok(out)
}

/// Site probabilities and Dirac norm of one evolved state.
#[derive(Debug, Clone)]
pub struct Track {
    pub label: String,
    pub system: System,
    /// `probabilities[t][site]` = |amplitude|²
    pub probabilities: Vec<Vec<f64>>,
    pub norms_sqr: Vec<f64>,
}

impl Track {
    fn from_states(label: &str, system: System, states: &[StateVector]) -> Self {
        Track {
            label: label.to_string(),
            system,
            probabilities: states.iter().map(|s| s.probabilities()).collect(),
            norms_sqr: states.iter().map(|s| s.dirac_norm_sqr()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// One track for a single evolution; φ, φ̃, ψ for a parallel one.
    pub tracks: Vec<Track>,
    /// ⟨φ(t)|φ̃(t)⟩
    pub overlap: Vec<C64>,
    /// ‖ψ(t) − φ(t) − φ̃(t)‖
    pub superposition_defect: Vec<f64>,
    /// ‖φ̃(t) − Pφ(t)‖, when the lattice is mirror symmetric.
    pub parity_defect: Option<Vec<f64>>,
    /// ‖Pψ(t) − ψ(t)‖
    pub psi_parity_defect: Option<Vec<f64>>,
}

impl EvolutionTrace {
    pub fn is_parallel(&self) -> bool {
        self.tracks.len() == 3
    }
}

pub fn evolve(state: &StateVector, m: &CMatrix, system: System, label: &str, times: &[f64]) -> Result<EvolutionTrace> {
    let states = propagate(m, system, state, times)?;
    Ok(EvolutionTrace {
        times: times.to_vec(),
        tracks: vec![Track::from_states(label, system, &states)],
        overlap: Vec::new(),
        superposition_defect: Vec::new(),
        parity_defect: None,
        psi_parity_defect: None,
    })
}

/// Evolves φ under 𝓗, φ̃ under 𝓗† and ψ under H concurrently.
pub fn parallel_evolve(
    triple: &HamiltonianTriple,
    phi0: &StateVector,
    phi_tilde0: &StateVector,
    psi0: &StateVector,
    times: &[f64],
) -> Result<EvolutionTrace> {
    let (phi, phi_t, psi) = std::thread::scope(|scope| {
        let a = scope.spawn(|| propagate(&triple.hn, System::N, phi0, times));
        let b = scope.spawn(|| propagate(&triple.hn_dag, System::NDag, phi_tilde0, times));
        let c = propagate(&triple.h, System::H, psi0, times);
        (a.join().expect("evolution thread panicked"), b.join().expect("evolution thread panicked"), c)
    });
    let (phi, phi_t, psi) = (phi?, phi_t?, psi?);

    let overlap = phi.iter().zip(&phi_t).map(|(a, b)| a.inner(b)).collect();
    let superposition_defect = (0..times.len()).map(|k| psi[k].distance(&(&phi[k] + &phi_t[k]))).collect();
    let (parity_defect, psi_parity_defect) = match parity_operator(triple) {
        Ok(p) => (
            Some(phi.iter().zip(&phi_t).map(|(a, b)| b.distance(&p.apply_state(a))).collect()),
            Some(psi.iter().map(|s| s.distance(&p.apply_state(s))).collect()),
        ),
        Err(_) => (None, None),
    };
    Ok(EvolutionTrace {
        times: times.to_vec(),
        tracks: vec![
            Track::from_states("phi", System::N, &phi),
            Track::from_states("phi_tilde", System::NDag, &phi_t),
            Track::from_states("psi", System::H, &psi),
        ],
        overlap,
        superposition_defect,
        parity_defect,
        psi_parity_defect,
    })
}

/// Largest site-probability difference at each time.
pub fn profile_deviation(a: &Track, b: &Track) -> Vec<f64> {
    a.probabilities
        .iter()
        .zip(&b.probabilities)
        .map(|(pa, pb)| pa.iter().zip(pb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .collect()
}

/// ψ(0) expanded on the ψ-family: c_n = ⟨ψ_n|ψ(0)⟩.
#[derive(Debug, Clone)]
pub struct ExpansionCoefficients {
    pub coefficients: Vec<C64>,
    pub energies: Vec<f64>,
    /// ‖ψ(0) − Σ c_n ψ_n‖
    pub truncation_residual: f64,
    pub phi0: StateVector,
    pub phi_tilde0: StateVector,
    /// Σ c_n ψ_n, which equals φ(0) + φ̃(0) exactly up to rounding.
    pub psi_projected: StateVector,
}

/// Expands `psi0` in the common subspace. With `threshold`, a truncation
/// residual above it is an error.
pub fn expand_in_common_subspace(
    psi0: &StateVector,
    family: &CorrespondenceFamily,
    threshold: Option<f64>,
) -> Result<ExpansionCoefficients> {
    let n = psi0.len();
    let mut phi = CVector::zeros(n);
    let mut phi_t = CVector::zeros(n);
    let mut proj = CVector::zeros(n);
    let mut coefficients = Vec::with_capacity(family.len());
    for t in &family.triplets {
        if t.psi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: t.psi.len() });
        }
        let cn = dirac_inner(t.psi.view(), psi0.view());
        phi.scaled_add(cn, t.phi.amplitudes());
        phi_t.scaled_add(cn, t.phi_tilde.amplitudes());
        proj.scaled_add(cn, t.psi.amplitudes());
        coefficients.push(cn);
    }
    let psi_projected = StateVector::new(proj);
    let truncation_residual = psi0.distance(&psi_projected);
    if let Some(th) = threshold {
        if truncation_residual > th {
            return Err(Error::SubspaceLeak { residual: truncation_residual, threshold: th });
        }
    }
    Ok(ExpansionCoefficients {
        coefficients,
        energies: family.triplets.iter().map(|t| t.energy).collect(),
        truncation_residual,
        phi0: StateVector::new(phi),
        phi_tilde0: StateVector::new(phi_t),
        psi_projected,
    })
}

/// Conservation checks on a parallel trace; all entries are maxima over time.
#[derive(Debug, Clone)]
pub struct AuditReport {
    /// θ = ⟨φ(0)|φ̃(0)⟩
    pub theta: C64,
    /// |‖ψ(t)‖² − 1|
    pub psi_norm_deviation: f64,
    /// |‖φ(t)‖² − ‖φ(0)‖²|
    pub phi_norm_drift: f64,
    pub phi_tilde_norm_drift: f64,
    /// |⟨φ(t)|φ̃(t)⟩ − θ|
    pub theta_drift: f64,
    /// |‖ψ‖² − ‖φ‖² − ‖φ̃‖² − 2 Re θ|
    pub norm_identity_defect: f64,
    /// |‖φ(t)‖² − ‖φ̃(t)‖²|
    pub norm_balance: f64,
    pub superposition_defect: f64,
    pub parity_defect: Option<f64>,
    pub psi_parity_defect: Option<f64>,
}

impl AuditReport {
    /// Named checks in a fixed order.
    pub fn checks(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("psi_norm_deviation", self.psi_norm_deviation),
            ("phi_norm_drift", self.phi_norm_drift),
            ("phi_tilde_norm_drift", self.phi_tilde_norm_drift),
            ("theta_drift", self.theta_drift),
            ("norm_identity_defect", self.norm_identity_defect),
            ("norm_balance", self.norm_balance),
            ("superposition_defect", self.superposition_defect),
        ];
        if let Some(p) = self.parity_defect {
            out.push(("parity_defect", p));
        }
        if let Some(p) = self.psi_parity_defect {
            out.push(("psi_parity_defect", p));
        }
        out
    }

    pub fn worst(&self) -> f64 {
        self.checks().iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn passes(&self, threshold: f64) -> bool {
        self.checks().iter().all(|c| c.1 <= threshold)
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

pub fn probability_audit(trace: &EvolutionTrace) -> Result<AuditReport> {
    if !trace.is_parallel() || trace.overlap.is_empty() {
        return Err(Error::InvalidSpec("audit needs a parallel trace".into()));
    }
    let (phi, phi_t, psi) = (&trace.tracks[0].norms_sqr, &trace.tracks[1].norms_sqr, &trace.tracks[2].norms_sqr);
    let theta = trace.overlap[0];
    Ok(AuditReport {
        theta,
        psi_norm_deviation: max_of(psi.iter().map(|x| (x - 1.0).abs())),
        phi_norm_drift: max_of(phi.iter().map(|x| (x - phi[0]).abs())),
        phi_tilde_norm_drift: max_of(phi_t.iter().map(|x| (x - phi_t[0]).abs())),
        theta_drift: max_of(trace.overlap.iter().map(|z| (z - theta).norm())),
        norm_identity_defect: max_of((0..psi.len()).map(|k| (psi[k] - phi[k] - phi_t[k] - 2.0 * theta.re).abs())),
        norm_balance: max_of(phi.iter().zip(phi_t).map(|(a, b)| (a - b).abs())),
        superposition_defect: max_of(trace.superposition_defect.iter().copied()),
        parity_defect: trace.parity_defect.as_ref().map(|v| max_of(v.iter().copied())),
        psi_parity_defect: trace.psi_parity_defect.as_ref().map(|v| max_of(v.iter().copied())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_uniform_triple, CouplingParams};
    use crate::linalg::{c, real};

    #[test]
    fn grid_is_inclusive() {
        let g = uniform_grid(0.5, 2.0).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(uniform_grid(0.0, 1.0).is_err());
    }

    #[test]
    fn unsorted_times_rejected() {
        let m = crate::linalg::identity(2);
        let s = StateVector::from_real(&[1.0, 0.0]);
        assert!(propagate(&m, System::H, &s, &[0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn hermitian_evolution_is_unitary() {
        let t = build_uniform_triple(8, 1.0, CouplingParams::new(0.0, 0.3, 0.7)).unwrap();
        let s = StateVector::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let grid = uniform_grid(0.25, 20.0).unwrap();
        let tr = evolve(&s, &t.h, System::H, "psi", &grid).unwrap();
        for n in &tr.tracks[0].norms_sqr {
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_invariance() {
        let t = build_uniform_triple(5, 1.0, CouplingParams::new(0.6, 0.0, 0.0)).unwrap();
        let s = StateVector::new(CVector::from_shape_fn(7, |i| c(i as f64 * 0.1, 0.2)));
        let coarse = propagate(&t.hn, System::N, &s, &[0.0, 2.0]).unwrap();
        let fine = propagate(&t.hn, System::N, &s, &uniform_grid(0.1, 2.0).unwrap()).unwrap();
        assert!(coarse[1].distance(fine.last().unwrap()) < 1e-12);
    }

    #[test]
    fn exponential_of_scalar() {
        let m = ndarray::array![[real(2.0)]];
        let e = matrix_exponential(&m, 0.3).unwrap();
        assert!((e[[0, 0]] - C64::from_polar(1.0, -0.6)).norm() < 1e-15);
    }
}
