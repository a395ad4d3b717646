//! Matrix exponential by Padé approximation with scaling and squaring
//! (degrees 3, 5, 7, 9, 13 as in Higham 2005).

use crate::error::{Error, Result};
use crate::linalg::{identity, is_finite, one_norm, CMatrix, Lu, C64};

const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.53939833006323e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn scaled(m: &CMatrix, s: f64) -> CMatrix {
    m.mapv(|z| z * s)
}

fn add_diag(m: &mut CMatrix, s: f64) {
    for i in 0..m.nrows() {
        m[[i, i]] += C64::new(s, 0.0);
    }
}

/// (U, V) of the degree-m Padé approximant for m ≤ 9.
fn pade_low(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let a2 = a.dot(a);
    let mut powers = vec![a2.clone()];
    for _ in 1..(b.len() / 2 - 1) {
        let next = powers.last().expect("non-empty").dot(&a2);
        powers.push(next);
    }
    let n = a.nrows();
    let mut u = CMatrix::zeros((n, n));
    let mut v = CMatrix::zeros((n, n));
    add_diag(&mut u, b[1]);
    add_diag(&mut v, b[0]);
    for (k, p) in powers.iter().enumerate() {
        u = u + scaled(p, b[2 * k + 3]);
        v = v + scaled(p, b[2 * k + 2]);
    }
    (a.dot(&u), v)
}

fn pade_13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let b = &B13;
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let mut inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    inner_u = a6.dot(&inner_u) + scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]);
    add_diag(&mut inner_u, b[1]);
    let u = a.dot(&inner_u);
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let mut v = a6.dot(&inner_v) + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]);
    add_diag(&mut v, b[0]);
    (u, v)
}

/// e^A for a general complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: a.ncols() });
    }
    if !is_finite(a.view()) {
        return Err(Error::Range("matrix has non-finite entries".into()));
    }
    let norm = one_norm(a.view());
    if norm == 0.0 {
        return Ok(identity(n));
    }

    let mut squarings = 0u32;
    let (u, v) = match THETA.iter().position(|&(_, th)| norm <= th) {
        Some(k) => {
            let b: &[f64] = match THETA[k].0 {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            pade_low(a, b)
        }
        None => {
            let s = (norm / THETA_13).log2().ceil().max(0.0);
            if s > 1000.0 {
                return Err(Error::Range(format!("‖A‖₁ = {norm:.3e} needs {s} squarings")));
            }
            squarings = s as u32;
            pade_13(&scaled(a, 0.5f64.powi(squarings as i32)))
        }
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = Lu::factor(&q)?.solve(&p);
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if !is_finite(r.view()) {
        return Err(Error::Range("exponential overflowed".into()));
    }
    Ok(r)
}
