//! Dense complex helpers shared by every module: norms, Dirac products,
//! conjugate transposes and an LU solver.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Array2<C64>;
pub type CVector = Array1<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn conj_transpose(m: &CMatrix) -> CMatrix {
    let (r, k) = m.dim();
    Array2::from_shape_fn((k, r), |(i, j)| m[[j, i]].conj())
}

pub fn conj_vec(v: &CVector) -> CVector {
    v.mapv(|z| z.conj())
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { real(1.0) } else { C64::default() })
}

/// ⟨u|w⟩ = Σ conj(u_i) w_i
pub fn dirac_inner(u: ArrayView1<C64>, w: ArrayView1<C64>) -> C64 {
    u.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm_sqr(v: ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: ArrayView1<C64>) -> f64 {
    norm_sqr(v).sqrt()
}

pub fn frobenius(m: ArrayView2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn one_norm(m: ArrayView2<C64>) -> f64 {
    m.columns().into_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_abs(m: ArrayView2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn is_finite(m: ArrayView2<C64>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// ‖M v − λ v‖₂
pub fn eigen_residual(m: &CMatrix, v: ArrayView1<C64>, lambda: C64) -> f64 {
    let mv = m.dot(&v);
    mv.iter().zip(v.iter()).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>().sqrt()
}

/// Unit-norm copy; returns `None` for the zero vector.
pub fn normalized(v: &CVector) -> Option<CVector> {
    let n = norm(v.view());
    (n > 0.0).then(|| v.mapv(|z| z / n))
}

/// First index whose value is within a relative 1e-10 of the maximum.
pub fn leading_index(values: &[f64]) -> usize {
    let top = values.iter().copied().fold(0.0, f64::max);
    values.iter().position(|&x| x >= top * (1.0 - 1e-10)).unwrap_or(0)
}

/// Least-squares scalar c minimizing ‖s − c·r‖, with the attained minimum.
pub fn proportionality(s: ArrayView1<C64>, reference: ArrayView1<C64>) -> (C64, f64) {
    let rr = norm_sqr(reference);
    if rr == 0.0 {
        return (C64::default(), norm(s));
    }
    let coeff = dirac_inner(reference, s) / rr;
    let defect = s.iter().zip(reference.iter()).map(|(a, b)| (a - coeff * b).norm_sqr()).sum::<f64>().sqrt();
    (coeff, defect)
}

/// LU factorization with partial pivoting, `P A = L U` stored in place.
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Lu> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: a.ncols() });
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[[i, k]].norm()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 || !pmax.is_finite() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
            }
            let pivot = lu[[k, k]];
            for i in k + 1..n {
                let f = lu[[i, k]] / pivot;
                lu[[i, k]] = f;
                if f != C64::default() {
                    for j in k + 1..n {
                        let t = lu[[k, j]];
                        lu[[i, j]] -= f * t;
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let n = self.lu.nrows();
        let mut x = Array2::from_shape_fn(b.dim(), |(i, j)| b[[self.perm[i], j]]);
        for col in 0..b.ncols() {
            for i in 0..n {
                let mut s = x[[i, col]];
                for k in 0..i {
                    s -= self.lu[[i, k]] * x[[k, col]];
                }
                x[[i, col]] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[[i, col]];
                for k in i + 1..n {
                    s -= self.lu[[i, k]] * x[[k, col]];
                }
                x[[i, col]] = s / self.lu[[i, i]];
            }
        }
        x
    }
}
