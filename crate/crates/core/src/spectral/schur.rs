//! Complex Schur decomposition A = Z T Z† by Householder reduction to upper
//! Hessenberg form followed by single-shift implicit QR sweeps, and
//! eigenvectors of the triangular factor by back substitution.

use crate::error::{Error, Result};
use crate::linalg::{frobenius, identity, CMatrix, C64};

pub(crate) struct Schur {
    pub t: CMatrix,
    pub z: CMatrix,
}

fn householder_hessenberg(a: &mut CMatrix, z: &mut CMatrix) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    let mut v = vec![C64::default(); n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let col_norm = (k + 1..n).map(|i| a[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if col_norm == 0.0 {
            continue;
        }
        let x0 = a[[k + 1, k]];
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * col_norm;
        for i in 0..m {
            v[i] = a[[k + 1 + i, k]];
        }
        v[0] -= alpha;
        let vv: f64 = v[..m].iter().map(|x| x.norm_sqr()).sum();
        if vv == 0.0 {
            continue;
        }
        let beta = 2.0 / vv;

        // A ← (I − β v v†) A
        for j in k..n {
            let s: C64 = (0..m).map(|i| v[i].conj() * a[[k + 1 + i, j]]).sum::<C64>() * beta;
            for i in 0..m {
                a[[k + 1 + i, j]] -= v[i] * s;
            }
        }
        // A ← A (I − β v v†), Z likewise
        for target in [&mut *a, &mut *z] {
            for i in 0..n {
                let s: C64 = (0..m).map(|j| target[[i, k + 1 + j]] * v[j]).sum::<C64>() * beta;
                for j in 0..m {
                    target[[i, k + 1 + j]] -= s * v[j].conj();
                }
            }
        }
        a[[k + 1, k]] = alpha;
        for i in k + 2..n {
            a[[i, k]] = C64::default();
        }
    }
}

/// Rotation (c, s) with [c s; −s̄ c]·[x; y] = [r; 0].
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    if y == C64::default() {
        return (1.0, C64::default());
    }
    if ax == 0.0 {
        return (0.0, C64::new(1.0, 0.0) * (y.conj() / y.norm()));
    }
    let r = ax.hypot(y.norm());
    (ax / r, (x / ax) * y.conj() / r)
}

fn wilkinson_shift(a: C64, b: C64, cc: C64, d: C64) -> C64 {
    let p = (a - d) * 0.5;
    let bc = b * cc;
    let disc = (p * p + bc).sqrt();
    let (plus, minus) = (p + disc, p - disc);
    let denom = if plus.norm() >= minus.norm() { plus } else { minus };
    if denom.norm() == 0.0 {
        d
    } else {
        d - bc / denom
    }
}

pub(crate) fn schur(a: &CMatrix) -> Result<Schur> {
    let n = a.nrows();
    let mut h = a.clone();
    let mut z = identity(n);
    householder_hessenberg(&mut h, &mut z);
    if n < 2 {
        return Ok(Schur { t: h, z });
    }

    let eps = f64::EPSILON;
    let scale = frobenius(h.view()).max(f64::MIN_POSITIVE);
    let max_sweeps = 40 * n.max(8);
    let mut sweeps = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;

    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[[lo - 1, lo - 1]].norm() + h[[lo, lo]].norm();
            if s == 0.0 {
                s = scale;
            }
            if h[[lo, lo - 1]].norm() <= eps * s {
                h[[lo, lo - 1]] = C64::default();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            let worst = (1..n).map(|i| h[[i, i - 1]].norm()).fold(0.0, f64::max);
            return Err(Error::Solver {
                reason: format!("QR iteration did not converge after {max_sweeps} sweeps"),
                worst_residual: worst,
            });
        }

        let mu = if since_deflation % 10 == 0 {
            // Exceptional shift to break cycles.
            let sub = h[[hi, hi - 1]].norm() + if hi >= 2 { h[[hi - 1, hi - 2]].norm() } else { 0.0 };
            h[[hi, hi]] + C64::new(0.75 * sub, 0.25 * sub)
        } else {
            wilkinson_shift(h[[hi - 1, hi - 1]], h[[hi - 1, hi]], h[[hi, hi - 1]], h[[hi, hi]])
        };

        let mut x = h[[lo, lo]] - mu;
        let mut y = h[[lo + 1, lo]];
        for k in lo..hi {
            if k > lo {
                x = h[[k, k - 1]];
                y = h[[k + 1, k - 1]];
            }
            let (cs, sn) = givens(x, y);
            let jstart = if k > lo { k - 1 } else { lo };
            for j in jstart..n {
                let (p, q) = (h[[k, j]], h[[k + 1, j]]);
                h[[k, j]] = p * cs + sn * q;
                h[[k + 1, j]] = -sn.conj() * p + q * cs;
            }
            if k > lo {
                h[[k + 1, k - 1]] = C64::default();
            }
            let iend = (k + 2).min(hi);
            for i in 0..=iend {
                let (p, q) = (h[[i, k]], h[[i, k + 1]]);
                h[[i, k]] = p * cs + q * sn.conj();
                h[[i, k + 1]] = -p * sn + q * cs;
            }
            for i in 0..n {
                let (p, q) = (z[[i, k]], z[[i, k + 1]]);
                z[[i, k]] = p * cs + q * sn.conj();
                z[[i, k + 1]] = -p * sn + q * cs;
            }
        }
    }

    for i in 1..n {
        for j in 0..i {
            h[[i, j]] = C64::default();
        }
    }
    Ok(Schur { t: h, z })
}

/// Right eigenvectors of the upper-triangular `t` (columns, unnormalized).
pub(crate) fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let eps = f64::EPSILON;
    let smin_floor = f64::MIN_POSITIVE * (n as f64) / eps;
    let smin = (eps * frobenius(t.view())).max(smin_floor);
    let mut x = CMatrix::zeros((n, n));
    let mut col = vec![C64::default(); n];
    for k in 0..n {
        let lambda = t[[k, k]];
        col[..=k].fill(C64::default());
        col[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: C64 = (j + 1..=k).map(|l| t[[j, l]] * col[l]).sum();
            let mut d = t[[j, j]] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            col[j] = -s / d;
            let mag = col[j].norm();
            if mag > 1e100 {
                for v in col[j..=k].iter_mut() {
                    *v /= mag;
                }
            }
        }
        for j in 0..=k {
            x[[j, k]] = col[j];
        }
    }
    x
}
