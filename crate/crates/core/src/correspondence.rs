//! Hermitian/non-Hermitian correspondence: ψ = φ + φ̃ with 𝓗φ = εφ,
//! 𝓗†φ̃ = εφ̃ and Hψ = εψ.
//!
//! The endpoint equations
//!
//! ```text
//! V ψ_A + κ ψ_B = −iγ(φ_A − φ̃_A)
//! V ψ_B + κ ψ_A =  iγ(φ_B − φ̃_B)
//! ```
//!
//! with φ̃ = conj(φ) reduce to a 2×2 real system in (V, κ).

use crate::error::{Error, Result};
use crate::lattice::{CouplingParams, HamiltonianTriple, ParityOperator};
use crate::linalg::{c, eigen_residual, frobenius, leading_index, norm, proportionality, real, CVector, C64};
use crate::spectral::{
    match_eigensystems, pt_phase_align, triple_eigensystems, EigenSystem, SpectralMatch, Tolerances,
};
use crate::state::StateVector;

/// Relative size of the (V, κ) determinant below which the system is
/// treated as rank deficient.
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointAmplitudes {
    pub phi_a: C64,
    pub phi_b: C64,
}

impl EndpointAmplitudes {
    pub fn of(phi: &StateVector, site_a: usize, site_b: usize) -> Self {
        EndpointAmplitudes { phi_a: phi.amplitudes()[site_a], phi_b: phi.amplitudes()[site_b] }
    }
}

/// Which combination a one-parameter family fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combination {
    VPlusKappa,
    VMinusKappa,
}

impl Combination {
    pub fn label(self) -> &'static str {
        match self {
            Combination::VPlusKappa => "V+kappa",
            Combination::VMinusKappa => "V-kappa",
        }
    }
}

/// Solution set of the endpoint equations in (V, κ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamConstraint {
    Unique {
        v: f64,
        kappa: f64,
    },
    /// `combination = value`; the line through `base` along `direction`.
    Line {
        combination: Combination,
        value: f64,
        base: (f64, f64),
        direction: (f64, f64),
    },
    /// Every (V, κ) works.
    Any,
    Infeasible {
        residual: f64,
    },
}

impl ParamConstraint {
    pub fn kind(&self) -> &'static str {
        match self {
            ParamConstraint::Unique { .. } => "unique",
            ParamConstraint::Line { .. } => "line",
            ParamConstraint::Any => "any",
            ParamConstraint::Infeasible { .. } => "infeasible",
        }
    }

    /// Default representative: the unique point, or the symmetric point
    /// (c/2, ±c/2) of a line, or (0, 0).
    pub fn representative(&self) -> Option<(f64, f64)> {
        match *self {
            ParamConstraint::Unique { v, kappa } => Some((v, kappa)),
            ParamConstraint::Line { base, .. } => Some(base),
            ParamConstraint::Any => Some((0.0, 0.0)),
            ParamConstraint::Infeasible { .. } => None,
        }
    }

    pub fn point_on_line(&self, t: f64) -> Option<(f64, f64)> {
        match *self {
            ParamConstraint::Line { base, direction, .. } => Some((base.0 + t * direction.0, base.1 + t * direction.1)),
            _ => None,
        }
    }

    pub fn is_satisfied_by(&self, v: f64, kappa: f64, tol: f64) -> bool {
        match *self {
            ParamConstraint::Unique { v: v0, kappa: k0 } => {
                (v - v0).abs() <= tol * v0.abs().max(1.0) && (kappa - k0).abs() <= tol * k0.abs().max(1.0)
            }
            ParamConstraint::Line { combination, value, .. } => {
                let lhs = match combination {
                    Combination::VPlusKappa => v + kappa,
                    Combination::VMinusKappa => v - kappa,
                };
                (lhs - value).abs() <= tol * value.abs().max(1.0)
            }
            ParamConstraint::Any => true,
            ParamConstraint::Infeasible { .. } => false,
        }
    }
}

/// Solves the endpoint equations for (V, κ) given φ's endpoint amplitudes.
///
/// Rows: `V Reφ_A + κ Reφ_B = γ Imφ_A` and `V Reφ_B + κ Reφ_A = −γ Imφ_B`.
pub fn solve_hermitian_params(amp: EndpointAmplitudes, gamma: f64) -> ParamConstraint {
    let (ra, rb) = (amp.phi_a.re, amp.phi_b.re);
    let (b1, b2) = (gamma * amp.phi_a.im, -gamma * amp.phi_b.im);
    let det = ra * ra - rb * rb;
    let scale = ra * ra + rb * rb;
    let size = ra.abs().max(rb.abs()).max(amp.phi_a.im.abs()).max(amp.phi_b.im.abs());

    if size == 0.0 {
        return ParamConstraint::Any;
    }
    if det.abs() > DEGENERACY_TOL * scale {
        return ParamConstraint::Unique { v: (b1 * ra - b2 * rb) / det, kappa: (b2 * ra - b1 * rb) / det };
    }
    let rhs_scale = b1.abs().max(b2.abs()).max(f64::MIN_POSITIVE);
    if ra.abs().max(rb.abs()) <= DEGENERACY_TOL * size {
        let residual = b1.abs().max(b2.abs());
        return if residual <= DEGENERACY_TOL * gamma.abs() * size {
            ParamConstraint::Any
        } else {
            ParamConstraint::Infeasible { residual }
        };
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if ra * rb > 0.0 {
        // Reφ_A = Reφ_B: (V+κ)Reφ_A = b1 = b2
        let residual = (b1 - b2).abs();
        if residual > DEGENERACY_TOL * rhs_scale.max(gamma.abs() * size) {
            return ParamConstraint::Infeasible { residual };
        }
        let value = (b1 + b2) / (ra + rb);
        ParamConstraint::Line {
            combination: Combination::VPlusKappa,
            value,
            base: (value / 2.0, value / 2.0),
            direction: (s, -s),
        }
    } else {
        // Reφ_B = −Reφ_A: (V−κ)Reφ_A = b1 = −b2
        let residual = (b1 + b2).abs();
        if residual > DEGENERACY_TOL * rhs_scale.max(gamma.abs() * size) {
            return ParamConstraint::Infeasible { residual };
        }
        let value = (b1 - b2) / (ra - rb);
        ParamConstraint::Line {
            combination: Combination::VMinusKappa,
            value,
            base: (value / 2.0, -value / 2.0),
            direction: (s, s),
        }
    }
}

/// Constraint for the weighted superposition αφ + βφ̃ with β = ±α, i.e. the
/// constraint of φ (β = α) or of −iφ (β = −α).
pub fn weighted_constraint(
    phi: &StateVector,
    alpha: f64,
    beta: f64,
    gamma: f64,
    site_a: usize,
    site_b: usize,
) -> Result<ParamConstraint> {
    if alpha == 0.0 || (alpha.abs() - beta.abs()).abs() > 1e-12 * alpha.abs() {
        return Err(Error::Domain(format!("weights ({alpha}, {beta}) are not of the form beta = ±alpha")));
    }
    let rotated = if (alpha > 0.0) == (beta > 0.0) { phi.clone() } else { phi.scaled(c(0.0, -1.0)) };
    Ok(solve_hermitian_params(EndpointAmplitudes::of(&rotated, site_a, site_b), gamma))
}

/// Residuals of the two endpoint equations for given (V, κ) in the
/// appended-site convention (see [`HamiltonianTriple::endpoint_params`]).
pub fn endpoint_condition_residual(
    psi: &StateVector,
    phi: &StateVector,
    phi_tilde: &StateVector,
    params: CouplingParams,
    site_a: usize,
    site_b: usize,
) -> (f64, f64) {
    let (p, f, g) = (psi.amplitudes(), phi.amplitudes(), phi_tilde.amplitudes());
    let ig = c(0.0, params.gamma);
    let ra = p[site_a] * params.v + p[site_b] * params.kappa + ig * (f[site_a] - g[site_a]);
    let rb = p[site_b] * params.v + p[site_a] * params.kappa - ig * (f[site_b] - g[site_b]);
    (ra.norm(), rb.norm())
}

/// Eigensystems of the triple with the matched common real spectrum.
#[derive(Debug, Clone)]
pub struct TripleSpectrum {
    pub h: EigenSystem,
    pub n: EigenSystem,
    pub n_dag: EigenSystem,
    pub matches: Vec<SpectralMatch>,
}

pub fn analyze_triple(triple: &HamiltonianTriple, tol: &Tolerances) -> Result<TripleSpectrum> {
    tol.validate()?;
    let [h, n, n_dag] = triple_eigensystems(triple, tol)?;
    let matches = match_eigensystems(&h, &n, &n_dag, tol);
    Ok(TripleSpectrum { h, n, n_dag, matches })
}

/// Phase convention applied to the PT-aligned 𝓗 eigenvector w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gauge {
    /// φ ∝ w, ψ ∝ 2 Re w.
    Even,
    /// φ ∝ i w, ψ ∝ −2 Im w.
    Odd,
    /// φ ∝ e^{iα} w.
    Rotated(f64),
}

impl Gauge {
    pub fn label(&self) -> String {
        match self {
            Gauge::Even => "pt-even".into(),
            Gauge::Odd => "pt-odd".into(),
            Gauge::Rotated(a) => format!("rotated({a:?})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrespondenceTriplet {
    pub matched: SpectralMatch,
    pub energy: f64,
    /// Unit-norm eigenvector of H.
    pub psi: StateVector,
    pub phi: StateVector,
    pub phi_tilde: StateVector,
    pub gauge: Gauge,
    pub residual_h: f64,
    pub residual_n: f64,
    pub residual_ndag: f64,
    /// Constraint on the endpoint (V, κ) implied by φ.
    pub constraint: ParamConstraint,
}

#[derive(Debug, Clone)]
pub struct CorrespondenceFamily {
    pub triplets: Vec<CorrespondenceTriplet>,
    /// Matches skipped, with the reason.
    pub excluded: Vec<(SpectralMatch, String)>,
}

impl CorrespondenceFamily {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

fn superposition_for(u: &CVector) -> CVector {
    u.mapv(|z| real(2.0 * z.re))
}

/// Rotation α minimizing ‖(H − ε)ψ(α)‖/‖ψ(α)‖ with ψ(α) = 2 Re(e^{iα} w).
fn optimal_rotation(h: &crate::linalg::CMatrix, w: &CVector, energy: f64) -> f64 {
    let x = w.mapv(|z| real(z.re));
    let y = w.mapv(|z| real(-z.im));
    let shift = |v: &CVector| &h.dot(v) - &v.mapv(|z| z * energy);
    let (hx, hy) = (shift(&x), shift(&y));
    let re = |a: &CVector, b: &CVector| crate::linalg::dirac_inner(a.view(), b.view()).re;
    let (m11, m12, m22) = (re(&hx, &hx), re(&hx, &hy), re(&hy, &hy));
    let (g11, g12, g22) = (re(&x, &x), re(&x, &y), re(&y, &y));
    // det(M − λG) = 0
    let qa = g11 * g22 - g12 * g12;
    let qb = -(m11 * g22 + m22 * g11 - 2.0 * m12 * g12);
    let qc = m11 * m22 - m12 * m12;
    let lambda = if qa.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
        ((-qb - disc) / (2.0 * qa)).max(0.0)
    };
    let (a11, a12, a22) = (m11 - lambda * g11, m12 - lambda * g12, m22 - lambda * g22);
    let (c0, c1) = if a11.abs() + a12.abs() >= a12.abs() + a22.abs() { (-a12, a11) } else { (a22, -a12) };
    // ψ(α) = cos α·x + sin α·y
    c1.atan2(c0)
}

/// Builds (ψ, φ, φ̃) for every matched real energy.
///
/// Matches whose 𝓗 eigenvalue is degenerate within `tol.matching` are
/// excluded, since any basis inside the degenerate space is arbitrary.
pub fn build_correspondence(
    triple: &HamiltonianTriple,
    spectrum: &TripleSpectrum,
    parity: &ParityOperator,
    tol: &Tolerances,
) -> Result<CorrespondenceFamily> {
    let h_norm = frobenius(triple.h.view());
    let n_norm = frobenius(triple.hn.view());
    let endpoint = triple.endpoint_params();
    let mut triplets = Vec::new();
    let mut excluded = Vec::new();

    for &m in &spectrum.matches {
        let lambda = spectrum.n.eigenvalues[m.idx_n];
        let degenerate =
            (0..spectrum.n.len()).any(|k| k != m.idx_n && (spectrum.n.eigenvalues[k] - lambda).norm() <= tol.matching);
        if degenerate {
            excluded.push((m, "degenerate eigenvalue of the non-Hermitian member".to_string()));
            continue;
        }
        let w = pt_phase_align(&spectrum.n.vector(m.idx_n), parity, tol)?;
        let energy = m.energy;
        let bound = tol.eig * h_norm;

        let mut chosen = None;
        for (gauge, phase) in [(Gauge::Even, real(1.0)), (Gauge::Odd, c(0.0, 1.0))] {
            let u = w.mapv(|z| z * phase);
            let psi = superposition_for(&u);
            let pn = norm(psi.view());
            if pn <= tol.real * norm(u.view()) {
                continue;
            }
            if eigen_residual(&triple.h, psi.view(), real(energy)) / pn <= bound {
                chosen = Some((gauge, u, psi, pn));
                break;
            }
        }
        if chosen.is_none() {
            let alpha = optimal_rotation(&triple.h, &w, energy);
            let u = w.mapv(|z| z * C64::from_polar(1.0, alpha));
            let psi = superposition_for(&u);
            let pn = norm(psi.view());
            let r = if pn > 0.0 { eigen_residual(&triple.h, psi.view(), real(energy)) / pn } else { f64::INFINITY };
            if r > bound {
                return Err(Error::CorrespondenceViolation { energy, residual: r });
            }
            chosen = Some((Gauge::Rotated(alpha), u, psi, pn));
        }
        let (gauge, u, psi, pn) = chosen.expect("gauge chosen");

        let imax = leading_index(&psi.iter().map(|z| z.norm()).collect::<Vec<_>>());
        let sign = if psi[imax].re < 0.0 { -1.0 } else { 1.0 };
        let phi = StateVector::new(u.mapv(|z| z * (sign / pn)));
        let psi = StateVector::new(psi.mapv(|z| z * (sign / pn)));
        let phi_tilde = phi.conj();

        let residual_h = eigen_residual(&triple.h, psi.view(), real(energy));
        let residual_n = eigen_residual(&triple.hn, phi.view(), real(energy));
        let residual_ndag = eigen_residual(&triple.hn_dag, phi_tilde.view(), real(energy));
        let phi_norm = phi.dirac_norm();
        if residual_h > bound || residual_n > tol.eig * n_norm * phi_norm || residual_ndag > tol.eig * n_norm * phi_norm
        {
            return Err(Error::CorrespondenceViolation {
                energy,
                residual: residual_h.max(residual_n).max(residual_ndag),
            });
        }
        let constraint =
            solve_hermitian_params(EndpointAmplitudes::of(&phi, triple.site_a, triple.site_b), endpoint.gamma);
        triplets.push(CorrespondenceTriplet {
            matched: m,
            energy,
            psi,
            phi,
            phi_tilde,
            gauge,
            residual_h,
            residual_n,
            residual_ndag,
            constraint,
        });
    }
    Ok(CorrespondenceFamily { triplets, excluded })
}

#[derive(Debug, Clone)]
pub struct CorrespondenceReport {
    pub energy: f64,
    /// ‖H s − ε s‖/‖s‖ for s = φ + φ̃.
    pub superposition_residual: f64,
    /// s = c·reference, when a reference is supplied.
    pub proportionality: Option<C64>,
    pub proportionality_defect: Option<f64>,
    pub verified: bool,
}

/// Checks that φ + φ̃ is an eigenvector of `h` at `energy`.
pub fn verify_superposition(
    phi: &StateVector,
    phi_tilde: &StateVector,
    h: &crate::linalg::CMatrix,
    energy: f64,
    reference: Option<&StateVector>,
    tol: &Tolerances,
) -> Result<CorrespondenceReport> {
    if phi.len() != h.nrows() || phi_tilde.len() != h.nrows() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), actual: phi.len().max(phi_tilde.len()) });
    }
    let s = phi + phi_tilde;
    let sn = s.dirac_norm();
    if sn <= tol.norm * phi.dirac_norm().max(phi_tilde.dirac_norm()) || sn == 0.0 {
        return Err(Error::NullSuperposition { norm: sn });
    }
    let superposition_residual = eigen_residual(h, s.view(), real(energy)) / sn;
    let (proportionality, proportionality_defect) = match reference {
        Some(r) => {
            let (k, d) = crate::linalg::proportionality(s.view(), r.view());
            (Some(k), Some(d))
        }
        None => (None, None),
    };
    Ok(CorrespondenceReport {
        energy,
        superposition_residual,
        proportionality,
        proportionality_defect,
        verified: superposition_residual <= tol.eig * frobenius(h.view()),
    })
}

/// s = c·reference with the least-squares c and its defect.
pub fn proportionality_to(s: &StateVector, reference: &StateVector) -> (C64, f64) {
    proportionality(s.view(), reference.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_uniform_triple, parity_operator};

    fn amp(a: (f64, f64), b: (f64, f64)) -> EndpointAmplitudes {
        EndpointAmplitudes { phi_a: c(a.0, a.1), phi_b: c(b.0, b.1) }
    }

    #[test]
    fn unique_solution_satisfies_rows() {
        let e = amp((0.3, 0.2), (-0.7, 0.5));
        let ParamConstraint::Unique { v, kappa } = solve_hermitian_params(e, 1.3) else { panic!() };
        assert!((v * 0.3 + kappa * -0.7 - 1.3 * 0.2).abs() < 1e-14);
        assert!((v * -0.7 + kappa * 0.3 + 1.3 * 0.5).abs() < 1e-14);
    }

    #[test]
    fn conjugate_endpoints_give_plus_line() {
        let e = amp((0.4, 0.1), (0.4, -0.1));
        let k = solve_hermitian_params(e, 2.0);
        let ParamConstraint::Line { combination, value, base, .. } = k else { panic!("{k:?}") };
        assert_eq!(combination, Combination::VPlusKappa);
        assert!((value - 0.5).abs() < 1e-15);
        assert_eq!(base, (0.25, 0.25));
        assert!(k.is_satisfied_by(3.0, -2.5, 1e-12));
    }

    #[test]
    fn antisymmetric_endpoints_give_minus_line() {
        let e = amp((0.4, 0.1), (-0.4, 0.1));
        let k = solve_hermitian_params(e, 2.0);
        assert!(matches!(k, ParamConstraint::Line { combination: Combination::VMinusKappa, .. }), "{k:?}");
    }

    #[test]
    fn degenerate_cases() {
        assert_eq!(solve_hermitian_params(amp((0.0, 0.0), (0.0, 0.0)), 1.0), ParamConstraint::Any);
        assert_eq!(solve_hermitian_params(amp((0.0, 0.3), (0.0, 0.1)), 0.0), ParamConstraint::Any);
        assert!(matches!(solve_hermitian_params(amp((0.0, 0.3), (0.0, 0.1)), 1.0), ParamConstraint::Infeasible { .. }));
        assert!(matches!(solve_hermitian_params(amp((0.4, 0.3), (0.4, 0.1)), 1.0), ParamConstraint::Infeasible { .. }));
    }

    #[test]
    fn hermitian_limit_family() {
        let t = build_uniform_triple(6, 1.0, CouplingParams::default()).unwrap();
        let p = parity_operator(&t).unwrap();
        let tol = Tolerances::default();
        let spec = analyze_triple(&t, &tol).unwrap();
        let fam = build_correspondence(&t, &spec, &p, &tol).unwrap();
        assert_eq!(fam.len(), 8);
        for tr in &fam.triplets {
            assert!((tr.psi.dirac_norm() - 1.0).abs() < 1e-14);
            let (ra, rb) = endpoint_condition_residual(&tr.psi, &tr.phi, &tr.phi_tilde, t.params, t.site_a, t.site_b);
            assert!(ra < 1e-12 && rb < 1e-12);
        }
        assert!(fam.triplets.iter().any(|t| t.gauge == Gauge::Odd));
    }

    #[test]
    fn null_superposition() {
        let phi = StateVector::new(CVector::from(vec![c(0.0, 1.0), c(0.0, -1.0)]));
        let h = crate::linalg::identity(2);
        let r = verify_superposition(&phi, &phi.conj(), &h, 1.0, None, &Tolerances::default());
        assert!(matches!(r, Err(Error::NullSuperposition { .. })));
    }
}
