//! Eigensystems of the triple members, common real spectrum, PT gauge and
//! coalescence (exceptional point) diagnostics.

mod schur;

use std::cmp::Ordering;
use std::fmt;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::lattice::{HamiltonianTriple, ParityOperator};
use crate::linalg::{conj_transpose, dirac_inner, eigen_residual, frobenius, is_finite, norm, CMatrix, CVector, C64};

/// Which member of the triple an eigensystem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    H,
    N,
    NDag,
    Other,
}

impl System {
    pub fn tag(self) -> &'static str {
        match self {
            System::H => "H",
            System::N => "N",
            System::NDag => "NDAG",
            System::Other => "M",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigen-residual bound relative to ‖M‖_F.
    pub eig: f64,
    /// |Im λ| below which an eigenvalue counts as real.
    pub real: f64,
    /// Eigenvalue distance for matching across systems.
    pub matching: f64,
    pub norm: f64,
    /// Biorthogonal overlap below which a cluster is an exceptional point.
    pub ep: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eig: 1e-10, real: 1e-8, matching: 1e-8, norm: 1e-12, ep: 1e-6 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [self.eig, self.real, self.matching, self.norm, self.ep];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("tolerances must be positive and finite: {self:?}")))
        }
    }

    /// Radius used to group eigenvalues that may belong to one defective
    /// block. An order-k coalescence splits by roughly ε^{1/k} in double
    /// precision, far beyond `matching`.
    pub fn coalescence_radius(&self) -> f64 {
        self.matching.max(self.ep.sqrt())
    }
}

/// Eigenvalues and unit right eigenvectors (columns of `vectors`) of one
/// matrix, sorted by (Re λ, Im λ).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<C64>,
    pub vectors: CMatrix,
    pub residuals: Vec<f64>,
    pub source: System,
    pub matrix_norm: f64,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).to_owned()
    }

    pub fn vector_view(&self, k: usize) -> ArrayView1<'_, C64> {
        self.vectors.column(k)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Reorders the pairs so that new position `i` holds old pair `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> EigenSystem {
        let n = self.vectors.nrows();
        EigenSystem {
            eigenvalues: order.iter().map(|&k| self.eigenvalues[k]).collect(),
            vectors: Array2::from_shape_fn((n, order.len()), |(i, j)| self.vectors[[i, order[j]]]),
            residuals: order.iter().map(|&k| self.residuals[k]).collect(),
            source: self.source,
            matrix_norm: self.matrix_norm,
        }
    }
}

fn cmp_complex(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
    }
    if !is_finite(m.view()) {
        return Err(Error::InvalidSpec("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn certify(
    m: &CMatrix,
    eigenvalues: Vec<C64>,
    vectors: CMatrix,
    source: System,
    tol: &Tolerances,
) -> Result<EigenSystem> {
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| cmp_complex(&eigenvalues[a], &eigenvalues[b]));
    let n = m.nrows();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| vectors[[i, order[j]]]);
    let eigenvalues: Vec<C64> = order.iter().map(|&k| eigenvalues[k]).collect();
    let residuals: Vec<f64> = (0..n).map(|k| eigen_residual(m, vectors.column(k), eigenvalues[k])).collect();
    let matrix_norm = frobenius(m.view());
    let es = EigenSystem { eigenvalues, vectors, residuals, source, matrix_norm };
    let worst = es.max_residual();
    if worst > tol.eig * matrix_norm {
        return Err(Error::Solver {
            reason: format!("eigen-residual above {:.1e}·‖M‖", tol.eig),
            worst_residual: worst,
        });
    }
    Ok(es)
}

/// Full eigendecomposition of a general complex matrix with residual
/// certificates. Left eigenvectors are the right eigenvectors of M†.
pub fn eig_general(m: &CMatrix, tol: &Tolerances) -> Result<EigenSystem> {
    eig_tagged(m, System::Other, tol)
}

pub fn eig_tagged(m: &CMatrix, source: System, tol: &Tolerances) -> Result<EigenSystem> {
    check_square(m)?;
    let s = schur::schur(m)?;
    let n = m.nrows();
    let x = schur::triangular_eigenvectors(&s.t);
    let mut vectors = s.z.dot(&x);
    for k in 0..n {
        let nk = norm(vectors.column(k));
        if nk > 0.0 {
            vectors.column_mut(k).mapv_inplace(|z| z / nk);
        }
    }
    let eigenvalues = (0..n).map(|k| s.t[[k, k]]).collect();
    certify(m, eigenvalues, vectors, source, tol)
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues and an
/// orthonormal eigenbasis (Schur vectors), also inside degenerate spaces.
pub fn eig_hermitian(m: &CMatrix, source: System, tol: &Tolerances) -> Result<EigenSystem> {
    check_square(m)?;
    let asym = crate::linalg::max_abs_diff(m, &conj_transpose(m));
    if asym > tol.eig * frobenius(m.view()) {
        return Err(Error::InvalidSpec(format!("matrix is not Hermitian (defect {asym:.3e})")));
    }
    let s = schur::schur(m)?;
    let eigenvalues = (0..m.nrows()).map(|k| C64::new(s.t[[k, k]].re, 0.0)).collect();
    certify(m, eigenvalues, s.z, source, tol)
}

/// Eigensystems of H, 𝓗 and 𝓗† in that order.
pub fn triple_eigensystems(triple: &HamiltonianTriple, tol: &Tolerances) -> Result<[EigenSystem; 3]> {
    let (h, (n, nd)) = std::thread::scope(|scope| {
        let h = scope.spawn(|| eig_hermitian(&triple.h, System::H, tol));
        let n = scope.spawn(|| eig_tagged(&triple.hn, System::N, tol));
        let nd = eig_tagged(&triple.hn_dag, System::NDag, tol);
        (h.join().expect("eigensolver thread panicked"), (n.join().expect("eigensolver thread panicked"), nd))
    });
    Ok([h?, n?, nd?])
}

/// Indices with |Im λ| ≤ tol.real, ascending in Re λ.
pub fn real_eigen_subset(es: &EigenSystem, tol: &Tolerances) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..es.len()).filter(|&k| es.eigenvalues[k].im.abs() <= tol.real).collect();
    idx.sort_by(|&a, &b| es.eigenvalues[a].re.total_cmp(&es.eigenvalues[b].re).then(a.cmp(&b)));
    idx
}

/// One eigenvalue shared by H, 𝓗 and 𝓗†.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMatch {
    pub energy: f64,
    pub idx_h: usize,
    pub idx_n: usize,
    pub idx_ndag: usize,
    pub match_residual: f64,
}

pub fn match_spectra(triple: &HamiltonianTriple, tol: &Tolerances) -> Result<Vec<SpectralMatch>> {
    let [h, n, nd] = triple_eigensystems(triple, tol)?;
    Ok(match_eigensystems(&h, &n, &nd, tol))
}

/// Greedy one-to-one matching of the real eigenvalues of 𝓗 (ascending) to
/// unused real eigenvalues of H and 𝓗†; only complete triples are kept.
pub fn match_eigensystems(h: &EigenSystem, n: &EigenSystem, nd: &EigenSystem, tol: &Tolerances) -> Vec<SpectralMatch> {
    let pick = |es: &EigenSystem, used: &mut [bool], candidates: &[usize], target: f64| -> Option<usize> {
        candidates
            .iter()
            .copied()
            .find(|&k| !used[k] && (es.eigenvalues[k].re - target).abs() <= tol.matching)
            .inspect(|&k| used[k] = true)
    };

    let real_h = real_eigen_subset(h, tol);
    let real_n = real_eigen_subset(n, tol);
    let real_nd = real_eigen_subset(nd, tol);
    let mut used_h = vec![false; h.len()];
    let mut used_nd = vec![false; nd.len()];
    let mut out = Vec::new();

    for &kn in &real_n {
        let target = n.eigenvalues[kn].re;
        let Some(kh) = pick(h, &mut used_h, &real_h, target) else { continue };
        let Some(kd) = pick(nd, &mut used_nd, &real_nd, target) else {
            used_h[kh] = false;
            continue;
        };
        let (lh, ln, ld) = (h.eigenvalues[kh], n.eigenvalues[kn], nd.eigenvalues[kd]);
        let match_residual = (lh - ln).norm().max((lh - ld).norm()).max((ln - ld).norm());
        out.push(SpectralMatch { energy: lh.re, idx_h: kh, idx_n: kn, idx_ndag: kd, match_residual });
    }
    out
}

/// Rotates `v` by the phase e^{iχ/2} that makes P·conj(v) = v, without any
/// sign convention.
pub fn pt_phase_align(v: &CVector, parity: &ParityOperator, tol: &Tolerances) -> Result<CVector> {
    if v.len() != parity.dimension() {
        return Err(Error::DimensionMismatch { expected: parity.dimension(), actual: v.len() });
    }
    let scale = norm(v.view());
    if scale == 0.0 {
        return Err(Error::DegenerateGauge("zero vector".into()));
    }
    let image = parity.apply_pt(v);
    let overlap = dirac_inner(v.view(), image.view());
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let defect = norm((&image - &v.mapv(|z| z * phase)).view()) / scale;
    if defect > tol.matching {
        return Err(Error::Gauge { defect });
    }
    let half = C64::from_polar(1.0, phase.arg() / 2.0);
    Ok(v.mapv(|z| z * half))
}

/// PT gauge: v′ = e^{iχ/2}v with P·conj(v′) = v′ and the largest-magnitude
/// entry of Re v′ positive.
pub fn pt_gauge_fix(v: &CVector, parity: &ParityOperator, tol: &Tolerances) -> Result<CVector> {
    let w = pt_phase_align(v, parity, tol)?;
    let re: Vec<f64> = w.iter().map(|z| z.re.abs()).collect();
    let imax = crate::linalg::leading_index(&re);
    let remax = re[imax];
    if remax <= tol.real * norm(w.view()) {
        return Err(Error::DegenerateGauge("real part of the PT-gauged vector vanishes".into()));
    }
    Ok(if w[imax].re < 0.0 { w.mapv(|z| -z) } else { w })
}

/// ⟨u|w⟩ = Σ conj(u_i)·w_i.
pub fn biorthogonal_overlap(u: &CVector, w: &CVector) -> Result<C64> {
    if u.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), actual: w.len() });
    }
    Ok(dirac_inner(u.view(), w.view()))
}

/// A cluster of nearly equal eigenvalues with its biorthogonal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalescenceReport {
    pub center: C64,
    pub size: usize,
    /// Indices into the right eigensystem.
    pub indices: Vec<usize>,
    /// min |⟨left|right⟩| over eigenvalue-paired members.
    pub min_overlap: f64,
    /// Smallest singular value of the left–right overlap matrix of the cluster.
    pub min_singular: f64,
    pub exceptional: bool,
}

fn min_singular_value(g: &CMatrix, tol: &Tolerances) -> f64 {
    let gram = conj_transpose(g).dot(g);
    let relaxed = Tolerances { eig: 1e-6, ..*tol };
    match eig_hermitian(&gram, System::Other, &relaxed) {
        Ok(es) => es.eigenvalues.first().map(|l| l.re.max(0.0).sqrt()).unwrap_or(0.0),
        Err(_) => 0.0,
    }
}

/// Every cluster of two or more eigenvalues within
/// [`Tolerances::coalescence_radius`], flagged exceptional when its left and
/// right eigenvectors are biorthogonally degenerate.
pub fn coalescence_clusters(es: &EigenSystem, left: &EigenSystem, tol: &Tolerances) -> Vec<CoalescenceReport> {
    let n = es.len();
    let radius = tol.coalescence_radius();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (es.eigenvalues[i] - es.eigenvalues[j]).norm() <= radius {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }

    let mut reports = Vec::new();
    for members in groups.into_values().filter(|g| g.len() >= 2) {
        let size = members.len();
        let center = members.iter().map(|&k| es.eigenvalues[k]).sum::<C64>() / size as f64;

        // Left partners: the `size` eigenvalues of M† whose conjugates lie nearest.
        let mut partners: Vec<usize> = (0..left.len()).collect();
        partners.sort_by(|&a, &b| {
            let da = (left.eigenvalues[a].conj() - center).norm();
            let db = (left.eigenvalues[b].conj() - center).norm();
            da.total_cmp(&db).then(a.cmp(&b))
        });
        partners.truncate(size);

        let g = Array2::from_shape_fn((partners.len(), size), |(i, j)| {
            dirac_inner(left.vector_view(partners[i]), es.vector_view(members[j]))
        });
        let min_singular = min_singular_value(&g, tol);

        let mut free = partners.clone();
        let mut min_overlap = f64::INFINITY;
        for &k in &members {
            let lambda = es.eigenvalues[k];
            let pos = (0..free.len())
                .min_by(|&a, &b| {
                    let da = (left.eigenvalues[free[a]].conj() - lambda).norm();
                    let db = (left.eigenvalues[free[b]].conj() - lambda).norm();
                    da.total_cmp(&db)
                })
                .expect("partner list has cluster size");
            let l = free.remove(pos);
            min_overlap = min_overlap.min(dirac_inner(left.vector_view(l), es.vector_view(k)).norm());
        }

        reports.push(CoalescenceReport {
            center,
            size,
            indices: members,
            min_overlap,
            min_singular,
            exceptional: min_singular <= tol.ep,
        });
    }
    reports
}

/// Exceptional-point reports only.
pub fn detect_coalescence(es: &EigenSystem, left: &EigenSystem, tol: &Tolerances) -> Vec<CoalescenceReport> {
    coalescence_clusters(es, left, tol).into_iter().filter(|r| r.exceptional).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_ssh_triple, build_uniform_triple, parity_operator, CouplingParams};
    use crate::linalg::{c, real};
    use ndarray::array;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sorted_re(es: &EigenSystem) -> Vec<f64> {
        es.eigenvalues.iter().map(|z| z.re).collect()
    }

    #[test]
    fn diagonal_matrix() {
        let m = array![[real(2.0), real(0.0)], [real(0.0), c(0.0, -1.0)]];
        let es = eig_general(&m, &tol()).unwrap();
        assert!((es.eigenvalues[0] - c(0.0, -1.0)).norm() < 1e-15);
        assert!((es.eigenvalues[1] - real(2.0)).norm() < 1e-15);
        for k in 0..2 {
            assert!((norm(es.vector_view(k)) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_two_site_spectrum() {
        let t = build_uniform_triple(2, 1.0, CouplingParams::new(1.0, 0.0, 0.0)).unwrap();
        let es = eig_tagged(&t.hn, System::N, &tol()).unwrap();
        let expected = [-(3f64.sqrt()), -1.0, 1.0, 3f64.sqrt()];
        for (z, e) in es.eigenvalues.iter().zip(expected) {
            assert!((z.re - e).abs() < 1e-10 && z.im.abs() < 1e-10, "{z} vs {e}");
        }
        assert_eq!(real_eigen_subset(&es, &tol()).len(), 4);
    }

    #[test]
    fn broken_phase_keeps_only_the_unit_pair() {
        let t = build_uniform_triple(2, 1.0, CouplingParams::new(3.0, 0.0, 0.0)).unwrap();
        let es = eig_tagged(&t.hn, System::N, &tol()).unwrap();
        let real: Vec<f64> = real_eigen_subset(&es, &tol()).iter().map(|&k| es.eigenvalues[k].re).collect();
        assert_eq!(real.len(), 2);
        assert!((real[0] + 1.0).abs() < 1e-12 && (real[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_member_is_fully_real() {
        let t = build_uniform_triple(6, 1.0, CouplingParams::new(0.5, 0.3, -0.2)).unwrap();
        let es = eig_tagged(&t.h, System::H, &tol()).unwrap();
        assert_eq!(real_eigen_subset(&es, &tol()).len(), 8);
    }

    #[test]
    fn conjugate_spectrum_of_adjoint() {
        let t = build_uniform_triple(7, 1.0, CouplingParams::new(1.3, 0.0, 0.0)).unwrap();
        let n = eig_tagged(&t.hn, System::N, &tol()).unwrap();
        let nd = eig_tagged(&t.hn_dag, System::NDag, &tol()).unwrap();
        let mut conj: Vec<C64> = nd.eigenvalues.iter().map(|z| z.conj()).collect();
        conj.sort_by(cmp_complex);
        for (a, b) in n.eigenvalues.iter().zip(&conj) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn hermitian_eigenbasis_is_orthonormal() {
        let t = build_ssh_triple(20, 1.0, 0.1, CouplingParams::new(0.0, 0.147_840, 0.0)).unwrap();
        let es = eig_hermitian(&t.h, System::H, &tol()).unwrap();
        let gram = conj_transpose(&es.vectors).dot(&es.vectors);
        assert!(crate::linalg::max_abs_diff(&gram, &crate::linalg::identity(20)) < 1e-12);
        let re = sorted_re(&es);
        assert!(re.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trivial_matching_when_couplings_vanish() {
        let t = build_uniform_triple(8, 1.0, CouplingParams::default()).unwrap();
        let m = match_spectra(&t, &tol()).unwrap();
        assert_eq!(m.len(), 10);
    }

    #[test]
    fn two_site_match_at_minus_sqrt3() {
        let t = build_uniform_triple(2, 1.0, CouplingParams::new(1.0, 1.0, 0.0)).unwrap();
        let m = match_spectra(&t, &tol()).unwrap();
        assert!(m.iter().any(|x| (x.energy + 3f64.sqrt()).abs() < 1e-10));
    }

    #[test]
    fn gauge_fix_removes_global_phase() {
        let t = build_uniform_triple(4, 1.0, CouplingParams::new(0.6, 0.0, 0.0)).unwrap();
        let p = parity_operator(&t).unwrap();
        let es = eig_tagged(&t.hn, System::N, &tol()).unwrap();
        let v = pt_gauge_fix(&es.vector(0), &p, &tol()).unwrap();
        assert!(norm((&p.apply_pt(&v) - &v).view()) < 1e-12);
        let rotated = v.mapv(|z| z * C64::from_polar(1.0, 0.3));
        let back = pt_gauge_fix(&rotated, &p, &tol()).unwrap();
        assert!(norm((&back - &v).view()) < 1e-12);
        let again = pt_gauge_fix(&back, &p, &tol()).unwrap();
        assert!(norm((&again - &back).view()) < 1e-14);
    }

    #[test]
    fn broken_phase_vector_has_no_gauge() {
        let t = build_uniform_triple(2, 1.0, CouplingParams::new(3.0, 0.0, 0.0)).unwrap();
        let p = parity_operator(&t).unwrap();
        let es = eig_tagged(&t.hn, System::N, &tol()).unwrap();
        let k = (0..4).find(|&k| es.eigenvalues[k].im.abs() > 0.1).unwrap();
        assert!(matches!(pt_gauge_fix(&es.vector(k), &p, &tol()), Err(Error::Gauge { .. })));
    }

    #[test]
    fn overlap_of_unit_and_orthogonal_vectors() {
        let u = array![real(0.6), real(0.8)];
        assert!((biorthogonal_overlap(&u, &u).unwrap() - real(1.0)).norm() < 1e-15);
        let t = build_uniform_triple(3, 1.0, CouplingParams::new(0.0, 0.2, 0.1)).unwrap();
        let es = eig_hermitian(&t.h, System::H, &tol()).unwrap();
        assert!(biorthogonal_overlap(&es.vector(0), &es.vector(1)).unwrap().norm() < 1e-12);
        assert!(biorthogonal_overlap(&u, &es.vector(0)).is_err());
    }

    #[test]
    fn hermitian_matrices_have_no_exceptional_points() {
        let t = build_ssh_triple(20, 1.0, 0.1, CouplingParams::new(0.0, 0.147_840_3, 0.0)).unwrap();
        let es = eig_tagged(&t.h, System::H, &tol()).unwrap();
        assert!(detect_coalescence(&es, &es, &tol()).is_empty());
    }

    #[test]
    fn shuffled_input_gives_same_matches() {
        let t = build_uniform_triple(10, 1.0, CouplingParams::new(0.5, -1.0, 1.0)).unwrap();
        let [h, n, nd] = triple_eigensystems(&t, &tol()).unwrap();
        let base = match_eigensystems(&h, &n, &nd, &tol());
        let rev = |es: &EigenSystem| {
            let order: Vec<usize> = (0..es.len()).rev().collect();
            es.permuted(&order)
        };
        let (h2, n2, nd2) = (rev(&h), rev(&n), rev(&nd));
        let shuffled = match_eigensystems(&h2, &n2, &nd2, &tol());
        assert_eq!(base.len(), shuffled.len());
        for (a, b) in base.iter().zip(&shuffled) {
            assert!((a.energy - b.energy).abs() < 1e-12);
            assert_eq!(n.eigenvalues[a.idx_n], n2.eigenvalues[b.idx_n]);
            assert_eq!(nd.eigenvalues[a.idx_ndag], nd2.eigenvalues[b.idx_ndag]);
        }
    }
}
