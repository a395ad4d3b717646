//! Closed-form states for the uniform and SSH chains.
//!
//! Each constructor evaluates its formula and then checks the result against
//! the dense matrix it claims to diagonalize; a formula that fails the
//! residual test is returned as [`Error::Certificate`], never silently.

use std::f64::consts::SQRT_2;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::lattice::{build_ssh_triple, build_uniform_triple, CouplingParams, HamiltonianTriple, ParityOperator};
use crate::linalg::{c, conj_vec, eigen_residual, frobenius, norm, proportionality, real, CMatrix, CVector, C64};
use crate::spectral::{eig_hermitian, System, Tolerances};
use crate::state::StateVector;

/// Relative residual every closed form must meet.
pub const ORACLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ClosedFormState {
    pub vector: StateVector,
    pub energy: C64,
    pub source_formula: &'static str,
    /// Parameter relations the formula assumes, e.g. `"gamma = -2J"`.
    pub required_params: Vec<String>,
    /// ‖M v − E v‖ against the designated matrix.
    pub residual: f64,
}

fn certify(formula: &str, m: &CMatrix, v: &CVector, energy: C64) -> Result<f64> {
    let r = eigen_residual(m, v.view(), energy);
    let scale = (frobenius(m.view()) * norm(v.view())).max(f64::MIN_POSITIVE);
    if r <= ORACLE_TOL * scale {
        Ok(r)
    } else {
        Err(Error::Certificate { formula: formula.to_string(), residual: r })
    }
}

fn closed_form(
    formula: &'static str,
    m: &CMatrix,
    v: CVector,
    energy: C64,
    required_params: Vec<String>,
) -> Result<ClosedFormState> {
    let residual = certify(formula, m, &v, energy)?;
    Ok(ClosedFormState { vector: StateVector::new(v), energy, source_formula: formula, required_params, residual })
}

fn i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, 1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, -1.0),
    }
}

fn check_j(j: f64) -> Result<()> {
    if j == 0.0 || !j.is_finite() {
        return Err(Error::Domain(format!("hopping J must be finite and non-zero, got {j}")));
    }
    Ok(())
}

/// φ₁, φ₂ (ε = ±J√(4 − γ²/J²)) followed by φ₃ (−J) and φ₄ (+J) of the N = 2
/// non-Hermitian chain.
pub fn n2_nonhermitian_eigensystem(gamma: f64, j: f64) -> Result<[ClosedFormState; 4]> {
    check_j(j)?;
    let g = gamma / j;
    if g.is_nan() || g * g > 4.0 {
        return Err(Error::Domain(format!(
            "gamma^2 = {} exceeds 4J^2: the ±J√(4−γ²) branch is complex",
            gamma * gamma
        )));
    }
    let [p3, p4] = n2_unit_pair(gamma, j)?;
    let triple = build_uniform_triple(2, j, CouplingParams::new(gamma, 0.0, 0.0))?;
    let root = (4.0 - g * g).sqrt();
    let mut out = Vec::with_capacity(4);
    for (eps, tag) in [(root, "phi_1"), (-root, "phi_2")] {
        let a = SQRT_2 / (c(-eps, g)).sqrt();
        let v = Array1::from(vec![a.conj().powu(3), a.conj() * SQRT_2, a * SQRT_2, a.powu(3)]);
        out.push(closed_form(tag, &triple.hn, v, real(j * eps), vec!["gamma^2 <= 4J^2".into()])?);
    }
    out.push(p3);
    out.push(p4);
    Ok(out.try_into().expect("four states"))
}

/// φ₃ (ε = −J) and φ₄ (ε = +J) of the N = 2 chain; valid for every γ.
pub fn n2_unit_pair(gamma: f64, j: f64) -> Result<[ClosedFormState; 2]> {
    check_j(j)?;
    let g = gamma / j;
    let h = SQRT_2 / 2.0;
    let triple = build_uniform_triple(2, j, CouplingParams::new(gamma, 0.0, 0.0))?;
    let v3 = Array1::from(vec![real(-1.0), c(-h, h * g), c(h, h * g), real(1.0)]);
    let v4 = Array1::from(vec![real(1.0), c(-h, -h * g), c(-h, h * g), real(1.0)]);
    Ok([
        closed_form("phi_3", &triple.hn, v3, real(-j), vec![])?,
        closed_form("phi_4", &triple.hn, v4, real(j), vec![])?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

fn symmetric_2x2(a: f64, b: f64, d: f64) -> [(f64, [f64; 2]); 2] {
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mean - r, mean + r].map(|e| {
        let u = [b, e - a];
        let w = [e - d, b];
        let nu = u[0].hypot(u[1]);
        let nw = w[0].hypot(w[1]);
        let (x, n) = if nu >= nw { (u, nu) } else { (w, nw) };
        if n == 0.0 {
            (e, [1.0, 0.0])
        } else {
            (e, [x[0] / n, x[1] / n])
        }
    })
}

/// Hermitian N = 2 eigensystem by reduction to the even sector
/// [[V+κ, −√2J], [−√2J, −J]] and odd sector [[V−κ, −√2J], [−√2J, J]].
///
/// Order: even lower, even upper, odd lower, odd upper.
pub fn n2_hermitian_even_odd_spectrum(v: f64, kappa: f64, j: f64) -> Result<[ClosedFormState; 4]> {
    check_j(j)?;
    let triple = build_uniform_triple(2, j, CouplingParams::new(0.0, kappa, v))?;
    let b = -SQRT_2 * j;
    let mut out = Vec::with_capacity(4);
    for (parity, (a, d)) in [(Parity::Even, (v + kappa, -j)), (Parity::Odd, (v - kappa, j))] {
        for (e, [x, y]) in symmetric_2x2(a, b, d) {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let vec = match parity {
                Parity::Even => [x, y, y, x],
                Parity::Odd => [x, y, -y, -x],
            };
            let tag = if parity == Parity::Even { "psi_even" } else { "psi_odd" };
            let state = Array1::from_iter(vec.iter().map(|&q| real(q * s)));
            out.push(closed_form(tag, &triple.h, state, real(e), vec![])?);
        }
    }
    Ok(out.try_into().expect("four states"))
}

/// Sector vector ½(−e/J ∓ 1, √2, ±√2, ∓e/J − 1), upper sign even. It is an
/// eigenvector only when `e` is an eigenvalue of that sector; not certified.
pub fn n2_displayed_hermitian_state(e: f64, parity: Parity, j: f64) -> StateVector {
    let x = e / j;
    let v = match parity {
        Parity::Even => [-x - 1.0, SQRT_2, SQRT_2, -x - 1.0],
        Parity::Odd => [-x + 1.0, SQRT_2, -SQRT_2, x - 1.0],
    };
    StateVector::from_real(&v.map(|q| 0.5 * q))
}

#[derive(Debug, Clone)]
pub struct UniformZeroModes {
    pub total_sites: usize,
    pub triple: HamiltonianTriple,
    /// Annihilated by 𝓗.
    pub phi_minus: ClosedFormState,
    /// conj(Φ₋), annihilated by 𝓗†.
    pub phi_plus: ClosedFormState,
    /// Unit kernel vector of H, phase-anchored to Φ₊ + Φ₋.
    pub psi: ClosedFormState,
    /// c in Φ₊ + Φ₋ = c·Ψ.
    pub proportionality: C64,
    pub proportionality_defect: f64,
    /// ⟨Φ₊|Φ₋⟩
    pub biorthogonal_overlap: C64,
}

/// Coalescing zero modes of the uniform chain with N_total = 4m + 3 sites,
/// γ = −2J and κ = V = 0.
pub fn uniform_zero_modes(m: usize, j: f64) -> Result<UniformZeroModes> {
    uniform_zero_modes_with(m, j, 0.0)
}

pub fn uniform_zero_modes_for_total(total_sites: usize, j: f64, v: f64) -> Result<UniformZeroModes> {
    if total_sites < 3 || total_sites % 4 != 3 {
        return Err(Error::Domain(format!("N_total = {total_sites} is not 3 mod 4")));
    }
    uniform_zero_modes_with((total_sites - 3) / 4, j, v)
}

/// As [`uniform_zero_modes`] with κ = V = `v`.
pub fn uniform_zero_modes_with(m: usize, j: f64, v: f64) -> Result<UniformZeroModes> {
    check_j(j)?;
    if !v.is_finite() {
        return Err(Error::Domain("V must be finite".into()));
    }
    let n = 4 * m + 3;
    let triple = build_uniform_triple(n - 2, j, CouplingParams::new(-2.0 * j, v, v))?;
    let required = vec!["gamma = -2J".to_string(), "kappa = V".to_string(), "N_total mod 4 = 3".to_string()];

    let scale = 1.0 / (2.0 * (n as f64 - 1.0)).sqrt();
    let mut phi = CVector::zeros(n);
    phi[0] = real(scale);
    phi[n - 1] = -i_pow(n + 1) * scale;
    for l in 2..n {
        phi[l - 1] = -i_pow(l + 1) * (SQRT_2 * scale);
    }
    let phi_minus = closed_form("Phi_minus", &triple.hn, phi.clone(), C64::default(), required.clone())?;
    let phi_plus = closed_form("Phi_plus", &triple.hn_dag, conj_vec(&phi), C64::default(), required.clone())?;

    let tol = Tolerances::default();
    let es = eig_hermitian(&triple.h, System::H, &tol)?;
    let hn = frobenius(triple.h.view());
    let kernel: Vec<usize> = (0..es.len()).filter(|&k| es.eigenvalues[k].norm() <= 1e-9 * hn).collect();
    if kernel.len() != 1 {
        return Err(Error::Certificate {
            formula: format!("kernel of H has dimension {}", kernel.len()),
            residual: f64::NAN,
        });
    }
    let sum = phi_plus.vector.amplitudes() + phi_minus.vector.amplitudes();
    let mut psi = es.vector(kernel[0]);
    let anchor = crate::linalg::dirac_inner(psi.view(), sum.view());
    if anchor.norm() > 0.0 {
        let phase = anchor / anchor.norm();
        psi.mapv_inplace(|z| z * phase);
    }
    let psi = closed_form("Psi", &triple.h, psi, C64::default(), required)?;
    let (coeff, defect) = proportionality(sum.view(), psi.vector.view());
    let overlap = phi_plus.vector.inner(&phi_minus.vector);

    Ok(UniformZeroModes {
        total_sites: n,
        triple,
        phi_minus,
        phi_plus,
        psi,
        proportionality: coeff,
        proportionality_defect: defect,
        biorthogonal_overlap: overlap,
    })
}

#[derive(Debug, Clone)]
pub struct SshZeroModes {
    pub sites: usize,
    /// Signed critical coupling κ_c = γ_c = J(1+δ)(−Δ)^{N/2}.
    pub kappa_c: f64,
    /// Δ = (1−δ)/(1+δ)
    pub delta_ratio: f64,
    pub norm_ssh: f64,
    /// Triple at κ = γ = κ_c.
    pub triple: HamiltonianTriple,
    pub psi_1: ClosedFormState,
    pub psi_2: ClosedFormState,
    pub psi_plus: ClosedFormState,
    pub psi_minus: ClosedFormState,
    pub phi_zm: ClosedFormState,
    pub eta_zm: ClosedFormState,
    /// c in φ_zm + η_zm = c·ψ₁ (√2) and φ_zm − η_zm = c·ψ₂ (i√2).
    pub sum_constant: C64,
    pub sum_defect: f64,
    pub difference_constant: C64,
    pub difference_defect: f64,
    /// ⟨η_zm|φ_zm⟩
    pub biorthogonal_overlap: C64,
}

/// Zero modes of the SSH chain at the critical coupling κ = γ = κ_c.
pub fn ssh_zero_modes(sites: usize, j: f64, delta: f64) -> Result<SshZeroModes> {
    check_j(j)?;
    if delta == 0.0 {
        return Err(Error::Domain("dimerization delta = 0 has no zero modes".into()));
    }
    if delta.is_nan() || delta.abs() >= 1.0 {
        return Err(Error::Domain(format!("dimerization must lie in (-1, 1), got {delta}")));
    }
    if sites < 2 || !sites.is_multiple_of(2) {
        return Err(Error::Domain(format!("SSH chain needs an even number of sites, got {sites}")));
    }
    let half = sites / 2;
    let ratio = (1.0 - delta) / (1.0 + delta);
    let kappa_c = j * (1.0 + delta) * (-ratio).powi(half as i32);
    let omega = (2.0 * delta * j * j / (j * j * (1.0 + delta) * (1.0 + delta) - kappa_c * kappa_c)).sqrt();
    let triple = build_ssh_triple(sites, j, delta, CouplingParams::new(kappa_c, kappa_c, 0.0))?;

    let odd = |jj: usize| (-ratio).powi(jj as i32 - 1);
    let even = |jj: usize| (-ratio).powi((half - jj) as i32);
    let mut p1 = CVector::zeros(sites);
    let mut p2 = CVector::zeros(sites);
    for jj in 1..=half {
        p1[2 * jj - 2] = real(SQRT_2 * omega * odd(jj));
        p2[2 * jj - 1] = real(SQRT_2 * omega * even(jj));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pp = (&p1 + &p2).mapv(|z| z * s);
    let pm = (&p1 - &p2).mapv(|z| z * s);
    let phi = (&p1 + &p2.mapv(|z| z * C64::i())).mapv(|z| z * s);
    let eta = conj_vec(&phi);

    let req = vec!["kappa = gamma = J(1+delta)(-Delta)^(N/2)".to_string()];
    let zero = C64::default();
    let psi_1 = closed_form("psi_1", &triple.h, p1, zero, req.clone())?;
    let psi_2 = closed_form("psi_2", &triple.h, p2, zero, req.clone())?;
    let psi_plus = closed_form("psi_plus", &triple.h, pp, zero, req.clone())?;
    let psi_minus = closed_form("psi_minus", &triple.h, pm, zero, req.clone())?;
    let phi_zm = closed_form("phi_zm", &triple.hn, phi, zero, req.clone())?;
    let eta_zm = closed_form("eta_zm", &triple.hn_dag, eta, zero, req)?;

    let sum = phi_zm.vector.amplitudes() + eta_zm.vector.amplitudes();
    let diff = phi_zm.vector.amplitudes() - eta_zm.vector.amplitudes();
    let (sum_constant, sum_defect) = proportionality(sum.view(), psi_1.vector.view());
    let (difference_constant, difference_defect) = proportionality(diff.view(), psi_2.vector.view());
    let biorthogonal_overlap = eta_zm.vector.inner(&phi_zm.vector);

    Ok(SshZeroModes {
        sites,
        kappa_c,
        delta_ratio: ratio,
        norm_ssh: omega,
        triple,
        psi_1,
        psi_2,
        psi_plus,
        psi_minus,
        phi_zm,
        eta_zm,
        sum_constant,
        sum_defect,
        difference_constant,
        difference_defect,
        biorthogonal_overlap,
    })
}

/// ψ₀ = (|1⟩ + √2 Σ_{l=2}^{N−1} |l⟩ + |N⟩)/√(2(N−1)) with ε₀ = −2J, an
/// eigenstate of the uniform H whenever V + κ = 0.
pub fn uniform_band_edge_state(total_sites: usize, j: f64, params: CouplingParams) -> Result<ClosedFormState> {
    check_j(j)?;
    if total_sites < 3 {
        return Err(Error::Domain(format!("uniform chain needs at least 3 sites, got {total_sites}")));
    }
    let mismatch = params.v + params.kappa;
    if mismatch.abs() > 1e-12 * (params.v.abs() + params.kappa.abs()).max(1.0) {
        return Err(Error::Constraint(format!("band-edge state needs V + kappa = 0, got {mismatch}")));
    }
    let triple = build_uniform_triple(total_sites - 2, j, params)?;
    let n = total_sites;
    let scale = 1.0 / (2.0 * (n as f64 - 1.0)).sqrt();
    let v = CVector::from_shape_fn(n, |i| if i == 0 || i == n - 1 { real(scale) } else { real(SQRT_2 * scale) });
    closed_form("psi_0", &triple.h, v, real(-2.0 * j), vec!["V + kappa = 0".into()])
}

/// Half-maximum width √(2 ln 2)/α of a Gaussian packet.
pub fn packet_width(alpha: f64) -> f64 {
    (2.0 * std::f64::consts::LN_2).sqrt() / alpha
}

/// e^{−α²(j−center)²} e^{ikj} on sites j = 1…N_total, normalized exactly.
pub fn gaussian_packet(total_sites: usize, center: f64, k: f64, alpha: f64) -> Result<StateVector> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Domain(format!("packet alpha must be positive, got {alpha}")));
    }
    if total_sites == 0 || !center.is_finite() || !k.is_finite() {
        return Err(Error::Domain("packet needs sites and finite center/momentum".into()));
    }
    let v = CVector::from_shape_fn(total_sites, |i| {
        let x = (i + 1) as f64;
        let env = (-(alpha * alpha) * (x - center) * (x - center)).exp();
        C64::from_polar(env, k * x)
    });
    StateVector::new(v).normalized().ok_or(Error::NullState)
}

/// (v + P v) normalized; exactly parity-even.
pub fn symmetrize_state(v: &StateVector, parity: &ParityOperator) -> Result<StateVector> {
    if v.len() != parity.dimension() {
        return Err(Error::DimensionMismatch { expected: parity.dimension(), actual: v.len() });
    }
    let sum = v + &parity.apply_state(v);
    let n = sum.dirac_norm();
    if n <= 1e-12 * v.dirac_norm() || n == 0.0 {
        return Err(Error::NullState);
    }
    Ok(sum.scaled(real(1.0 / n)))
}
