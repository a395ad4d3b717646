//! Lattice models and the dense Hamiltonian triple {H, 𝓗, 𝓗†}.
//!
//! Every triple shares a Hermitian skeleton (the sub-graph plus its couplings
//! to the two endpoint sites A and B). `𝓗` adds −iγ on A and +iγ on B, `H`
//! instead adds a real A–B hopping κ and an on-site potential V on A and B.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{conj_transpose, real, CMatrix, CVector, C64};
use crate::state::StateVector;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// Uniform chain of `chain_length` interior sites with hopping −J, attached
    /// to A and B through −√2·J. Basis order is [A, 1, …, chain_length, B].
    UniformChain {
        chain_length: usize,
        hopping: f64,
    },
    /// SSH chain on sites 1…N with bonds −J(1−δ), −J(1+δ) alternating. A ≡ 1 and
    /// B ≡ N; there are no extra sites.
    SshChain {
        sites: usize,
        hopping: f64,
        dimerization: f64,
    },
    CustomGraph(CustomGraph),
}

/// Arbitrary Hermitian sub-graph with two fresh endpoint sites appended.
///
/// Global basis order is [A, sub-graph sites 0…n−1, B].
#[derive(Debug, Clone, PartialEq)]
pub struct CustomGraph {
    pub sites: usize,
    /// Undirected hoppings `(i, j, amplitude)`, each edge listed once.
    pub edges: Vec<(usize, usize, f64)>,
    pub a: usize,
    pub b: usize,
    /// Coupling g of a↔A and b↔B.
    pub coupling: f64,
    /// Mirror map on sub-graph sites, required for parity.
    pub mirror: Option<Vec<usize>>,
}

impl ModelSpec {
    pub fn uniform(chain_length: usize, hopping: f64) -> Self {
        ModelSpec::UniformChain { chain_length, hopping }
    }

    /// Uniform chain given the total site count including A and B.
    pub fn uniform_total(total_sites: usize, hopping: f64) -> Self {
        ModelSpec::UniformChain { chain_length: total_sites.saturating_sub(2), hopping }
    }

    pub fn ssh(sites: usize, hopping: f64, dimerization: f64) -> Self {
        ModelSpec::SshChain { sites, hopping, dimerization }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ModelSpec::UniformChain { chain_length, .. } => chain_length + 2,
            ModelSpec::SshChain { sites, .. } => *sites,
            ModelSpec::CustomGraph(g) => g.sites + 2,
        }
    }

    /// Hopping scale J (1 for custom graphs).
    pub fn hopping(&self) -> f64 {
        match self {
            ModelSpec::UniformChain { hopping, .. } | ModelSpec::SshChain { hopping, .. } => *hopping,
            ModelSpec::CustomGraph(_) => 1.0,
        }
    }
}

/// Gain/loss strength γ, A–B hopping κ and endpoint potential V.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingParams {
    pub gamma: f64,
    pub kappa: f64,
    pub v: f64,
}

impl CouplingParams {
    pub fn new(gamma: f64, kappa: f64, v: f64) -> Self {
        CouplingParams { gamma, kappa, v }
    }

    fn validate(&self) -> Result<()> {
        if [self.gamma, self.kappa, self.v].iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("non-finite coupling parameters {self:?}")))
        }
    }
}

/// Position of a global basis index in the uniform-chain labelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteLabel {
    A,
    Interior(usize),
    B,
}

#[derive(Debug, Clone)]
pub struct HamiltonianTriple {
    pub h: CMatrix,
    pub hn: CMatrix,
    pub hn_dag: CMatrix,
    pub spec: ModelSpec,
    pub params: CouplingParams,
    pub site_a: usize,
    pub site_b: usize,
}

impl HamiltonianTriple {
    pub fn dimension(&self) -> usize {
        self.h.nrows()
    }

    /// Shared Hermitian skeleton, i.e. the triple with γ = κ = V = 0.
    pub fn skeleton(&self) -> CMatrix {
        let mut s = self.hn.clone();
        s[[self.site_a, self.site_a]] -= C64::new(0.0, -self.params.gamma);
        s[[self.site_b, self.site_b]] -= C64::new(0.0, self.params.gamma);
        s
    }

    /// Rebuilds the same lattice with different couplings.
    pub fn with_params(&self, params: CouplingParams) -> Result<HamiltonianTriple> {
        build_triple(&self.spec, params)
    }

    /// Couplings as they enter `H` in the appended-site convention
    /// `V(|A⟩⟨A| + |B⟩⟨B|) + κ(|A⟩⟨B| + |B⟩⟨A|)`. SSH chains use −κ and no V.
    pub fn endpoint_params(&self) -> CouplingParams {
        match self.spec {
            ModelSpec::SshChain { .. } => CouplingParams::new(self.params.gamma, -self.params.kappa, 0.0),
            _ => self.params,
        }
    }

    /// Label of a global index for uniform chains: index 0 is A, the last
    /// index is B. In the relabelled 1…N_total view the site number is simply
    /// `index + 1`.
    pub fn site_label(&self, index: usize) -> SiteLabel {
        if index == self.site_a {
            SiteLabel::A
        } else if index == self.site_b {
            SiteLabel::B
        } else {
            SiteLabel::Interior(index)
        }
    }
}

pub fn build_triple(spec: &ModelSpec, params: CouplingParams) -> Result<HamiltonianTriple> {
    match spec {
        ModelSpec::UniformChain { chain_length, hopping } => build_uniform_triple(*chain_length, *hopping, params),
        ModelSpec::SshChain { sites, hopping, dimerization } => {
            build_ssh_triple(*sites, *hopping, *dimerization, params)
        }
        ModelSpec::CustomGraph(g) => build_custom_triple(g, params),
    }
}

fn check_hopping(j: f64) -> Result<()> {
    if j == 0.0 || !j.is_finite() {
        return Err(Error::InvalidSpec(format!("hopping J must be finite and non-zero, got {j}")));
    }
    Ok(())
}

fn set_bond(m: &mut CMatrix, i: usize, j: usize, amp: f64) {
    m[[i, j]] = real(amp);
    m[[j, i]] = real(amp);
}

/// Adds the endpoint terms to the skeleton. `kappa_sign` is +1 for the
/// appended-site models and −1 for SSH, which has no on-site V term.
fn assemble(
    skeleton: CMatrix,
    spec: ModelSpec,
    params: CouplingParams,
    site_a: usize,
    site_b: usize,
    kappa_sign: f64,
    with_potential: bool,
) -> HamiltonianTriple {
    let mut hn = skeleton.clone();
    hn[[site_a, site_a]] += C64::new(0.0, -params.gamma);
    hn[[site_b, site_b]] += C64::new(0.0, params.gamma);

    let mut h = skeleton;
    h[[site_a, site_b]] += real(kappa_sign * params.kappa);
    h[[site_b, site_a]] += real(kappa_sign * params.kappa);
    if with_potential {
        h[[site_a, site_a]] += real(params.v);
        h[[site_b, site_b]] += real(params.v);
    }

    let hn_dag = conj_transpose(&hn);
    HamiltonianTriple { h, hn, hn_dag, spec, params, site_a, site_b }
}

pub fn build_uniform_triple(chain_length: usize, j: f64, params: CouplingParams) -> Result<HamiltonianTriple> {
    if chain_length == 0 {
        return Err(Error::InvalidSpec("uniform chain needs at least one interior site".into()));
    }
    check_hopping(j)?;
    params.validate()?;

    let dim = chain_length + 2;
    let mut skel = Array2::zeros((dim, dim));
    for l in 1..chain_length {
        set_bond(&mut skel, l, l + 1, -j);
    }
    set_bond(&mut skel, 0, 1, -SQRT_2 * j);
    set_bond(&mut skel, chain_length, dim - 1, -SQRT_2 * j);

    Ok(assemble(skel, ModelSpec::uniform(chain_length, j), params, 0, dim - 1, 1.0, true))
}

pub fn build_ssh_triple(sites: usize, j: f64, delta: f64, params: CouplingParams) -> Result<HamiltonianTriple> {
    if sites < 2 || !sites.is_multiple_of(2) {
        return Err(Error::InvalidSpec(format!("SSH chain needs an even number of sites, got {sites}")));
    }
    if delta.is_nan() || delta.abs() >= 1.0 {
        return Err(Error::InvalidSpec(format!("dimerization must lie in (-1, 1), got {delta}")));
    }
    check_hopping(j)?;
    params.validate()?;

    let mut skel = Array2::zeros((sites, sites));
    for i in 0..sites - 1 {
        // 0-based bond (i, i+1): i even is the intra-cell bond (2j−1, 2j).
        let amp = if i % 2 == 0 { -(j - j * delta) } else { -(j + j * delta) };
        set_bond(&mut skel, i, i + 1, amp);
    }
    Ok(assemble(skel, ModelSpec::ssh(sites, j, delta), params, 0, sites - 1, -1.0, false))
}

fn validate_graph(g: &CustomGraph) -> Result<()> {
    if g.sites == 0 {
        return Err(Error::InvalidSpec("custom graph has no sites".into()));
    }
    if g.a >= g.sites || g.b >= g.sites {
        return Err(Error::InvalidSpec(format!("attachment sites ({}, {}) out of range", g.a, g.b)));
    }
    if g.a == g.b {
        return Err(Error::InvalidSpec("attachment sites a and b must differ".into()));
    }
    if !g.coupling.is_finite() {
        return Err(Error::InvalidSpec("endpoint coupling g must be finite".into()));
    }
    let mut seen = BTreeMap::new();
    for &(i, j, amp) in &g.edges {
        if i >= g.sites || j >= g.sites {
            return Err(Error::InvalidSpec(format!("edge ({i}, {j}) references a missing site")));
        }
        if !amp.is_finite() {
            return Err(Error::InvalidSpec(format!("edge ({i}, {j}) has non-finite amplitude")));
        }
        let key = (i.min(j), i.max(j));
        if seen.insert(key, amp).is_some() {
            return Err(Error::InvalidSpec(format!("edge ({i}, {j}) listed more than once")));
        }
    }
    Ok(())
}

pub fn build_custom_triple(graph: &CustomGraph, params: CouplingParams) -> Result<HamiltonianTriple> {
    validate_graph(graph)?;
    params.validate()?;

    let dim = graph.sites + 2;
    let mut skel: CMatrix = Array2::zeros((dim, dim));
    for &(i, j, amp) in &graph.edges {
        if i == j {
            skel[[i + 1, i + 1]] = real(amp);
        } else {
            set_bond(&mut skel, i + 1, j + 1, amp);
        }
    }
    set_bond(&mut skel, 0, graph.a + 1, graph.coupling);
    set_bond(&mut skel, graph.b + 1, dim - 1, graph.coupling);

    Ok(assemble(skel, ModelSpec::CustomGraph(graph.clone()), params, 0, dim - 1, 1.0, true))
}

/// Site-reflection operator stored as an involutive permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityOperator {
    permutation: Vec<usize>,
}

impl ParityOperator {
    /// Accepts any involutive permutation without checking a Hamiltonian.
    pub fn from_permutation(permutation: Vec<usize>) -> Result<Self> {
        let n = permutation.len();
        for (i, &p) in permutation.iter().enumerate() {
            if p >= n || permutation[p] != i {
                return Err(Error::Symmetry(format!("mirror map is not an involution at site {i}")));
            }
        }
        Ok(ParityOperator { permutation })
    }

    pub fn reflection(dim: usize) -> Self {
        ParityOperator { permutation: (0..dim).rev().collect() }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn dimension(&self) -> usize {
        self.permutation.len()
    }

    pub fn matrix(&self) -> CMatrix {
        let n = self.permutation.len();
        Array2::from_shape_fn((n, n), |(i, j)| if self.permutation[i] == j { real(1.0) } else { C64::default() })
    }

    /// (P v)_i = v_{p(i)}
    pub fn apply(&self, v: &CVector) -> CVector {
        self.permutation.iter().map(|&p| v[p]).collect()
    }

    pub fn apply_state(&self, v: &StateVector) -> StateVector {
        StateVector::new(self.apply(v.amplitudes()))
    }

    /// P·conj(v)
    pub fn apply_pt(&self, v: &CVector) -> CVector {
        self.permutation.iter().map(|&p| v[p].conj()).collect()
    }

    /// P·M·P
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        let p = &self.permutation;
        Array2::from_shape_fn(m.dim(), |(i, j)| m[[p[i], p[j]]])
    }
}

/// Parity operator of a mirror-symmetric model, certified by P·H·P = H.
pub fn parity_operator(triple: &HamiltonianTriple) -> Result<ParityOperator> {
    let dim = triple.dimension();
    let parity = match &triple.spec {
        ModelSpec::UniformChain { .. } | ModelSpec::SshChain { .. } => ParityOperator::reflection(dim),
        ModelSpec::CustomGraph(g) => {
            let mirror = g.mirror.as_ref().ok_or_else(|| Error::Symmetry("custom graph has no mirror map".into()))?;
            if mirror.len() != g.sites {
                return Err(Error::Symmetry("mirror map length differs from site count".into()));
            }
            if mirror.get(g.a) != Some(&g.b) {
                return Err(Error::Symmetry("mirror map must send a to b".into()));
            }
            let mut perm = vec![0; dim];
            perm[0] = dim - 1;
            perm[dim - 1] = 0;
            for (i, &m) in mirror.iter().enumerate() {
                if m >= g.sites {
                    return Err(Error::Symmetry(format!("mirror image of {i} out of range")));
                }
                perm[i + 1] = m + 1;
            }
            ParityOperator::from_permutation(perm)?
        }
    };
    let reflected = parity.conjugate(&triple.h);
    if reflected != triple.h {
        return Err(Error::Symmetry("P·H·P differs from H".into()));
    }
    Ok(parity)
}

/// max |P·conj(M)·P − M| over both 𝓗 and 𝓗†; zero certifies PT symmetry.
pub fn pt_symmetry_residual(triple: &HamiltonianTriple, parity: &ParityOperator) -> f64 {
    let residual = |m: &CMatrix| {
        let p = parity.permutation();
        let mut worst: f64 = 0.0;
        for ((i, j), z) in m.indexed_iter() {
            worst = worst.max((m[[p[i], p[j]]].conj() - z).norm());
        }
        worst
    };
    residual(&triple.hn).max(residual(&triple.hn_dag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};
    use ndarray::array;

    fn params(gamma: f64, kappa: f64, v: f64) -> CouplingParams {
        CouplingParams::new(gamma, kappa, v)
    }

    #[test]
    fn uniform_two_site_matches_explicit_matrix() {
        let g = 0.7;
        let t = build_uniform_triple(2, 1.0, params(g, 0.0, 0.0)).unwrap();
        let s = -SQRT_2;
        let z = real(0.0);
        let expected = array![
            [c(0.0, -g), real(s), z, z],
            [real(s), z, real(-1.0), z],
            [z, real(-1.0), z, real(s)],
            [z, z, real(s), c(0.0, g)],
        ];
        assert_eq!(t.hn, expected);
        assert_eq!(t.hn_dag, conj_transpose(&expected));
    }

    #[test]
    fn uniform_two_site_hermitian_member() {
        let (v, k) = (0.3, -0.8);
        let t = build_uniform_triple(2, 2.0, params(1.0, k, v)).unwrap();
        let s = -SQRT_2 * 2.0;
        let z = real(0.0);
        let expected = array![
            [real(v), real(s), z, real(k)],
            [real(s), z, real(-2.0), z],
            [z, real(-2.0), z, real(s)],
            [real(k), z, real(s), real(v)],
        ];
        assert_eq!(t.h, expected);
    }

    #[test]
    fn vanishing_couplings_collapse_triple() {
        let t = build_uniform_triple(5, 1.0, CouplingParams::default()).unwrap();
        assert_eq!(t.h, t.hn);
        assert_eq!(t.hn, t.hn_dag);
    }

    #[test]
    fn gain_loss_only_touches_endpoints() {
        let t = build_uniform_triple(5, 1.0, params(2.0, 0.0, 0.0)).unwrap();
        let d = &t.hn - &t.h;
        for ((i, j), z) in d.indexed_iter() {
            if i == 0 && j == 0 {
                assert_eq!(*z, c(0.0, -2.0));
            } else if i == 6 && j == 6 {
                assert_eq!(*z, c(0.0, 2.0));
            } else {
                assert_eq!(*z, real(0.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn rejects_empty_chain_and_zero_hopping() {
        assert!(matches!(build_uniform_triple(0, 1.0, CouplingParams::default()), Err(Error::InvalidSpec(_))));
        assert!(matches!(build_uniform_triple(3, 0.0, CouplingParams::default()), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn ssh_bond_pattern() {
        let t = build_ssh_triple(4, 1.0, 0.1, params(0.0, 0.25, 9.0)).unwrap();
        assert!((t.h[[0, 1]].re + 0.9).abs() < 1e-15);
        assert!((t.h[[1, 2]].re + 1.1).abs() < 1e-15);
        assert!((t.h[[2, 3]].re + 0.9).abs() < 1e-15);
        assert_eq!(t.h[[0, 3]], real(-0.25));
        assert_eq!(t.h[[3, 0]], real(-0.25));
        // V has no role in the SSH Hermitian member.
        assert_eq!(t.h[[0, 0]], real(0.0));
        assert_eq!((t.site_a, t.site_b), (0, 3));
    }

    #[test]
    fn ssh_without_dimerization_is_uniform() {
        let t = build_ssh_triple(6, 1.3, 0.0, CouplingParams::default()).unwrap();
        for i in 0..5 {
            assert_eq!(t.h[[i, i + 1]], real(-1.3));
        }
    }

    #[test]
    fn ssh_rejects_bad_inputs() {
        assert!(build_ssh_triple(5, 1.0, 0.1, CouplingParams::default()).is_err());
        assert!(build_ssh_triple(6, 1.0, 1.0, CouplingParams::default()).is_err());
        assert!(build_ssh_triple(6, 1.0, -1.2, CouplingParams::default()).is_err());
    }

    #[test]
    fn ssh_is_pt_symmetric_at_critical_gamma() {
        let kc = 1.1 * (0.9f64 / 1.1).powi(10);
        let t = build_ssh_triple(20, 1.0, 0.1, params(kc, kc, 0.0)).unwrap();
        let p = parity_operator(&t).unwrap();
        assert_eq!(pt_symmetry_residual(&t, &p), 0.0);
    }

    fn chain_graph(n: usize, j: f64) -> CustomGraph {
        CustomGraph {
            sites: n,
            edges: (0..n - 1).map(|i| (i, i + 1, -j)).collect(),
            a: 0,
            b: n - 1,
            coupling: -SQRT_2 * j,
            mirror: Some((0..n).rev().collect()),
        }
    }

    #[test]
    fn custom_chain_reproduces_uniform_bit_for_bit() {
        let p = params(0.4, -0.3, 1.7);
        let u = build_uniform_triple(6, 1.25, p).unwrap();
        let g = build_custom_triple(&chain_graph(6, 1.25), p).unwrap();
        assert_eq!(u.h, g.h);
        assert_eq!(u.hn, g.hn);
        assert_eq!(u.hn_dag, g.hn_dag);
    }

    #[test]
    fn custom_rejects_malformed_graphs() {
        let mut g = chain_graph(1, 1.0);
        assert!(matches!(build_custom_triple(&g, CouplingParams::default()), Err(Error::InvalidSpec(_))));
        g = chain_graph(3, 1.0);
        g.edges.push((2, 7, 1.0));
        assert!(build_custom_triple(&g, CouplingParams::default()).is_err());
        g = chain_graph(3, 1.0);
        g.edges.push((1, 0, -1.0));
        assert!(build_custom_triple(&g, CouplingParams::default()).is_err());
    }

    #[test]
    fn ring_gain_loss_difference_is_diagonal() {
        let ring = CustomGraph {
            sites: 3,
            edges: vec![(0, 1, -1.0), (1, 2, -1.0), (0, 2, -1.0)],
            a: 0,
            b: 2,
            coupling: 1.0,
            mirror: Some(vec![2, 1, 0]),
        };
        let t = build_custom_triple(&ring, params(0.5, 0.0, 0.0)).unwrap();
        let d = &t.hn - &t.hn_dag;
        for ((i, j), z) in d.indexed_iter() {
            let expected = match (i, j) {
                (0, 0) => c(0.0, -1.0),
                (4, 4) => c(0.0, 1.0),
                _ => real(0.0),
            };
            assert_eq!(*z, expected);
        }
        let p = parity_operator(&t).unwrap();
        assert_eq!(pt_symmetry_residual(&t, &p), 0.0);
    }

    #[test]
    fn uniform_parity_is_antidiagonal_involution() {
        let t = build_uniform_triple(2, 1.0, params(1.0, 0.5, 0.2)).unwrap();
        let p = parity_operator(&t).unwrap();
        let m = p.matrix();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[[i, j]], real(if i + j == 3 { 1.0 } else { 0.0 }));
            }
        }
        let id = m.dot(&m);
        assert_eq!(max_abs_diff(&id, &crate::linalg::identity(4)), 0.0);
        assert_eq!(pt_symmetry_residual(&t, &p), 0.0);
    }

    #[test]
    fn asymmetric_graph_with_forced_mirror() {
        let g = CustomGraph {
            sites: 3,
            edges: vec![(0, 1, -1.0), (1, 2, -2.0)],
            a: 0,
            b: 2,
            coupling: 1.0,
            mirror: Some(vec![2, 1, 0]),
        };
        let t = build_custom_triple(&g, params(0.3, 0.0, 0.0)).unwrap();
        assert!(matches!(parity_operator(&t), Err(Error::Symmetry(_))));
        let forced = ParityOperator::reflection(t.dimension());
        assert!(pt_symmetry_residual(&t, &forced) > 0.5);
    }

    #[test]
    fn mirror_map_must_be_involution() {
        assert!(ParityOperator::from_permutation(vec![1, 2, 0]).is_err());
        assert!(ParityOperator::from_permutation(vec![1, 0, 2]).is_ok());
    }

    #[test]
    fn skeleton_is_mean_of_non_hermitian_pair() {
        let t = build_uniform_triple(4, 1.0, params(0.9, 0.4, -0.6)).unwrap();
        let mean = (&t.hn + &t.hn_dag).mapv(|z| z * 0.5);
        let skel = build_uniform_triple(4, 1.0, CouplingParams::default()).unwrap().h;
        assert_eq!(mean, skel);
        assert_eq!(t.skeleton(), skel);
    }
}
