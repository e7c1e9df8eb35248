//! Dense matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degree selection follows the backward-error thresholds θ_m of Higham's 2005
//! analysis: the lowest degree in {3, 5, 7, 9} whose θ bounds `‖A‖₁` is used,
//! otherwise `A` is scaled by `2^-s` so that `‖A/2^s‖₁ ≤ θ_13` and the degree-13
//! approximant is squared back `s` times.

use std::fmt::Debug;
use std::ops::{AddAssign, Div, Neg, SubAssign};

use ndarray::{Array2, LinalgScalar};
use num_complex::Complex64;

use crate::error::{Result, WpfpError};

/// Real dense matrix.
pub type DenseMatrix = Array2<f64>;

/// Field scalars the exponential is defined over.
pub trait Scalar:
    LinalgScalar + Debug + Send + Sync + Neg<Output = Self> + Div<Output = Self> + AddAssign + SubAssign
{
    fn modulus(self) -> f64;
    fn from_real(x: f64) -> Self;
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

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

/// Maximum absolute column sum.
pub fn norm1<T: Scalar>(a: &Array2<T>) -> f64 {
    a.columns().into_iter().map(|c| c.iter().map(|v| v.modulus()).sum::<f64>()).fold(0.0, f64::max)
}

fn identity<T: Scalar>(n: usize) -> Array2<T> {
    Array2::from_diag_elem(n, T::one())
}

fn scaled<T: Scalar>(a: &Array2<T>, s: f64) -> Array2<T> {
    a.mapv(|v| v * T::from_real(s))
}

fn axpy<T: Scalar>(acc: &mut Array2<T>, s: f64, x: &Array2<T>) {
    let s = T::from_real(s);
    acc.zip_mut_with(x, |y, &v| *y += v * s);
}

/// Returns `(U, V)` for the low-degree approximants `r_m = (V - U)⁻¹ (V + U)`.
fn pade_low<T: Scalar>(a: &Array2<T>, b: &[f64]) -> (Array2<T>, Array2<T>) {
    let n = a.nrows();
    let a2 = a.dot(a);
    let mut odd = scaled(&identity::<T>(n), b[1]);
    let mut even = scaled(&identity::<T>(n), b[0]);
    let mut power = a2.clone();
    for k in (2..b.len()).step_by(2) {
        axpy(&mut even, b[k], &power);
        if k + 1 < b.len() {
            axpy(&mut odd, b[k + 1], &power);
        }
        if k + 2 < b.len() {
            power = power.dot(&a2);
        }
    }
    (a.dot(&odd), even)
}

fn pade13<T: Scalar>(a: &Array2<T>) -> (Array2<T>, Array2<T>) {
    let b = &B13;
    let n = a.nrows();
    let eye = identity::<T>(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let mut w1 = scaled(&a6, b[13]);
    axpy(&mut w1, b[11], &a4);
    axpy(&mut w1, b[9], &a2);
    let mut w2 = scaled(&a6, b[7]);
    axpy(&mut w2, b[5], &a4);
    axpy(&mut w2, b[3], &a2);
    axpy(&mut w2, b[1], &eye);
    let u = a.dot(&(a6.dot(&w1) + w2));

    let mut z1 = scaled(&a6, b[12]);
    axpy(&mut z1, b[10], &a4);
    axpy(&mut z1, b[8], &a2);
    let mut z2 = scaled(&a6, b[6]);
    axpy(&mut z2, b[4], &a4);
    axpy(&mut z2, b[2], &a2);
    axpy(&mut z2, b[0], &eye);
    let v = a6.dot(&z1) + z2;
    (u, v)
}

/// Solves `A X = B` by LU factorization with partial pivoting.
pub fn lu_solve<T: Scalar>(mut a: Array2<T>, mut b: Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(WpfpError::Shape { expected: (n, n), found: a.dim() });
    }
    let scale = norm1(&a).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (piv, pmax) =
            (col..n)
                .map(|r| (r, a[[r, col]].modulus()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= f64::EPSILON * scale * 1e-3 {
            return Err(WpfpError::Numeric(format!("singular pivot in column {col} (|p| = {pmax:e})")));
        }
        if piv != col {
            for j in 0..n {
                a.swap([col, j], [piv, j]);
            }
            for j in 0..b.ncols() {
                b.swap([col, j], [piv, j]);
            }
        }
        let p = a[[col, col]];
        for r in col + 1..n {
            let f = a[[r, col]] / p;
            if f.modulus() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = a[[col, j]];
                a[[r, j]] -= f * v;
            }
            for j in 0..b.ncols() {
                let v = b[[col, j]];
                b[[r, j]] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let p = a[[col, col]];
        for j in 0..b.ncols() {
            let mut s = b[[col, j]];
            for k in col + 1..n {
                s -= a[[col, k]] * b[[k, j]];
            }
            b[[col, j]] = s / p;
        }
    }
    Ok(b)
}

/// `exp(A)` for a square matrix with finite entries.
pub fn matrix_exp<T: Scalar>(a: &Array2<T>) -> Result<Array2<T>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(WpfpError::Shape { expected: (n, n), found: a.dim() });
    }
    if let Some(((r, c), v)) = a.indexed_iter().find(|(_, v)| !v.finite()) {
        return Err(WpfpError::Numeric(format!("matrix_exp: non-finite entry {v:?} at ({r}, {c})")));
    }
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = norm1(a);
    for (m, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            return lu_solve(&v - &u, &v + &u);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let a_s = scaled(a, 2f64.powi(-s));
    let (u, v) = pade13(&a_s);
    let mut r = lu_solve(&v - &u, &v + &u)?;
    for k in 0..s {
        r = r.dot(&r);
        if !r.iter().all(|v| v.finite()) {
            return Err(WpfpError::Numeric(format!(
                "matrix_exp: overflow at squaring {} of {s} (‖A‖₁ = {norm:e})",
                k + 1
            )));
        }
    }
    Ok(r)
}
