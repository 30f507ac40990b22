//! Dense complex linear-algebra kernels shared by the operator layer:
//! hermitian eigendecomposition and the matrix exponential.
//!
//! The eigendecomposition is delegated to `nalgebra`'s self-adjoint solver;
//! the exponential is scaling-and-squaring with degree-adaptive Padé
//! approximants (Higham 2005).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

/// Hermitian eigendecomposition. Returns eigenvalues in ascending order and
/// the matching eigenvectors as columns.
///
/// The input is assumed hermitian; callers verify that against their own
/// tolerances before landing here.
pub(crate) fn eigh(m: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh requires a square matrix");
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let se = dm.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));

    let values = Array1::from_iter(order.iter().map(|&k| se.eigenvalues[k]));
    let mut vectors = Array2::zeros((n, n));
    for (j, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[[i, j]] = se.eigenvectors[(i, k)];
        }
    }
    (values, vectors)
}

/// Matrix exponential exp(A) by scaling-and-squaring with Padé approximants.
///
/// Degree is chosen from the 1-norm following Higham's thresholds, so small
/// generators (the common case in stepped propagation) stay cheap.
pub(crate) fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    if n == 1 {
        let mut r = Array2::zeros((1, 1));
        r[[0, 0]] = a[[0, 0]].exp();
        return r;
    }

    const THETA_3: f64 = 1.495585217958292e-2;
    const THETA_5: f64 = 2.539398330063230e-1;
    const THETA_7: f64 = 9.504178996162932e-1;
    const THETA_9: f64 = 2.097847961257068;
    const THETA_13: f64 = 5.371920351148152;

    let norm = one_norm(a);
    if norm <= THETA_3 {
        return pade_low(a, &PADE_3);
    }
    if norm <= THETA_5 {
        return pade_low(a, &PADE_5);
    }
    if norm <= THETA_7 {
        return pade_low(a, &PADE_7);
    }
    if norm <= THETA_9 {
        return pade_low(a, &PADE_9);
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|x| x / 2f64.powi(s as i32));
    let mut r = pade_13(&scaled);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
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

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Padé approximant for degrees 3, 5, 7, 9: U = A * (odd part), V = even part.
fn pade_low(a: &Array2<C64>, b: &[f64]) -> Array2<C64> {
    let n = a.nrows();
    let eye = Array2::from_diag_elem(n, c(1.0));
    // even powers A^2, A^4, ...
    let a2 = a.dot(a);
    let mut powers: Vec<Array2<C64>> = vec![eye.clone(), a2.clone()];
    let top = (b.len() - 1) / 2; // highest even power index / 2
    for _ in 2..=top {
        let next = powers.last().unwrap().dot(&a2);
        powers.push(next);
    }

    let mut u_poly = Array2::zeros((n, n));
    let mut v = Array2::zeros((n, n));
    for (k, &bk) in b.iter().enumerate() {
        if k % 2 == 1 {
            u_poly = u_poly + &powers[(k - 1) / 2] * c(bk);
        } else {
            v = v + &powers[k / 2] * c(bk);
        }
    }
    let u = a.dot(&u_poly);

    let p = &v + &u;
    let q = &v - &u;
    lu_solve(&q, &p)
}

/// Padé(13) with the factored evaluation scheme from Higham (2005).
fn pade_13(a: &Array2<C64>) -> Array2<C64> {
    let b = &PADE_13;
    let n = a.nrows();
    let eye = Array2::from_diag_elem(n, c(1.0));
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let w1 = &a6 * c(b[13]) + &a4 * c(b[11]) + &a2 * c(b[9]);
    let w2 = w1.dot(&a6) + &a6 * c(b[7]) + &a4 * c(b[5]) + &a2 * c(b[3]) + &eye * c(b[1]);
    let u = a.dot(&w2);

    let z1 = &a6 * c(b[12]) + &a4 * c(b[10]) + &a2 * c(b[8]);
    let v = z1.dot(&a6) + &a6 * c(b[6]) + &a4 * c(b[4]) + &a2 * c(b[2]) + &eye * c(b[0]);

    let p = &v + &u;
    let q = &v - &u;
    lu_solve(&q, &p)
}

/// Solve A X = B by LU with partial pivoting.
fn lu_solve(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let m = b.ncols();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());

    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = lu[[col, col]].norm_sqr();
        for row in (col + 1)..n {
            let mag = lu[[row, col]].norm_sqr();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_row != col {
            perm.swap(col, pivot_row);
            for j in 0..n {
                let tmp = lu[[col, j]];
                lu[[col, j]] = lu[[pivot_row, j]];
                lu[[pivot_row, j]] = tmp;
            }
        }
        let pivot = lu[[col, col]];
        if pivot.norm_sqr() == 0.0 {
            // Padé denominators are well conditioned by construction; a hard
            // zero pivot means the input was already pathological.
            panic!("lu_solve: singular matrix");
        }
        for row in (col + 1)..n {
            let factor = lu[[row, col]] / pivot;
            lu[[row, col]] = factor;
            for j in (col + 1)..n {
                let val = lu[[col, j]];
                lu[[row, j]] -= factor * val;
            }
        }
    }

    // forward + back substitution on the permuted right-hand side
    let mut x = Array2::zeros((n, m));
    for (i, &pi) in perm.iter().enumerate() {
        for j in 0..m {
            x[[i, j]] = b[[pi, j]];
        }
    }
    for col in 0..n {
        for row in (col + 1)..n {
            let factor = lu[[row, col]];
            for j in 0..m {
                let val = x[[col, j]];
                x[[row, j]] -= factor * val;
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[[col, col]];
        for j in 0..m {
            x[[col, j]] /= pivot;
        }
        for row in 0..col {
            let factor = lu[[row, col]];
            for j in 0..m {
                let val = x[[col, j]];
                x[[row, j]] -= factor * val;
            }
        }
    }
    x
}

/// 1-norm (max column sum of moduli).
pub(crate) fn one_norm(a: &Array2<C64>) -> f64 {
    let mut max = 0.0f64;
    for j in 0..a.ncols() {
        let mut sum = 0.0;
        for i in 0..a.nrows() {
            sum += a[[i, j]].norm();
        }
        max = max.max(sum);
    }
    max
}

pub(crate) fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.norm()))
}
