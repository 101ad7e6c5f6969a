//! Determinants and adjugates of small complex matrices.
//!
//! The adjugate comes from a Householder QR factorisation,
//! `adj(A) = det(Q) · adj(R) · Q†`, with `adj(R)` of the triangular factor
//! formed without division. It therefore stays finite and accurate when `A`
//! itself is singular (for instance at `ω = ω_i` in an uncoupled system).

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

/// Determinant and adjugate of a square matrix.
pub fn det_adjugate(a: &CMatrix) -> (C64, CMatrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "adjugate of a non-square matrix");
    match n {
        0 => (C64::new(1.0, 0.0), CMatrix::zeros(0, 0)),
        1 => (a[(0, 0)], CMatrix::from_element(1, 1, C64::new(1.0, 0.0))),
        _ => det_adjugate_qr(a),
    }
}

fn det_adjugate_qr(a: &CMatrix) -> (C64, CMatrix) {
    let qr = a.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let phase = q.clone().lu().determinant();
    let phase = phase / phase.norm();
    let (det_r, adj_r) = triangular_adjugate(&r);
    (phase * det_r, adj_r * q.adjoint() * phase)
}

/// Adjugate of an upper-triangular matrix, free of division by its diagonal.
fn triangular_adjugate(r: &CMatrix) -> (C64, CMatrix) {
    let n = r.nrows();
    let one = C64::new(1.0, 0.0);
    let d: Vec<C64> = (0..n).map(|k| r[(k, k)]).collect();
    // t[(i, j)] = (Π_{k=i..j} r_kk) (R⁻¹)_ij
    let mut t = CMatrix::zeros(n, n);
    for j in 0..n {
        t[(j, j)] = one;
        for i in (0..j).rev() {
            let mut acc = C64::new(0.0, 0.0);
            let mut between = one;
            for k in i + 1..=j {
                acc += r[(i, k)] * between * t[(k, j)];
                between *= d[k];
            }
            t[(i, j)] = -acc;
        }
    }
    let mut adj = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let outside: C64 = (0..n).filter(|&k| k < i || k > j).map(|k| d[k]).product();
            adj[(i, j)] = outside * t[(i, j)];
        }
    }
    (d.iter().product(), adj)
}

/// Explicit cofactor expansion for `n <= 3`; an independent check on [`det_adjugate`].
pub fn det_adjugate_cofactor(a: &CMatrix) -> Option<(C64, CMatrix)> {
    let n = a.nrows();
    let one = C64::new(1.0, 0.0);
    match n {
        1 => Some((a[(0, 0)], CMatrix::from_element(1, 1, one))),
        2 => {
            let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
            let adj = CMatrix::from_row_slice(2, 2, &[a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)]]);
            Some((det, adj))
        }
        3 => {
            let m = |r: usize, c: usize| a[(r, c)];
            // cofactor C_ij; adj_ji = C_ij
            let mut adj = CMatrix::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    let rows: Vec<usize> = (0..3).filter(|&r| r != i).collect();
                    let cols: Vec<usize> = (0..3).filter(|&c| c != j).collect();
                    let minor = m(rows[0], cols[0]) * m(rows[1], cols[1])
                        - m(rows[0], cols[1]) * m(rows[1], cols[0]);
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    adj[(j, i)] = minor * sign;
                }
            }
            let det = (0..3).map(|j| m(0, j) * adj[(j, 0)]).sum();
            Some((det, adj))
        }
        _ => None,
    }
}

/// Largest entry-wise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
