//! Closed-form determinants, adjugates and inverses for `d ≤ 3`.

use crate::error::{Error, Result};

/// Row-major matrix padded to `3×3`; only the leading `d×d` block is used.
pub type Mat = [[f64; 3]; 3];

pub const IDENTITY: Mat = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Smallest `|J|` accepted by [`jacobian_adjugate`].
pub const SINGULAR_JACOBIAN: f64 = 1e-12;

/// `(det m, adj m)` without a singularity check.
pub fn det_adj(m: &Mat, d: usize) -> (f64, Mat) {
    let mut adj = [[0.0; 3]; 3];
    let det = match d {
        1 => {
            adj[0][0] = 1.0;
            m[0][0]
        }
        2 => {
            adj[0][0] = m[1][1];
            adj[0][1] = -m[0][1];
            adj[1][0] = -m[1][0];
            adj[1][1] = m[0][0];
            m[0][0] * m[1][1] - m[0][1] * m[1][0]
        }
        _ => {
            // adj(m)_{ij} = cofactor_{ji}
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    adj[i][j] = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
                }
            }
            (0..3).map(|k| m[0][k] * adj[k][0]).sum()
        }
    };
    (det, adj)
}

/// `(J, adj(DX), A = adj/J)` for `d ∈ {1, 2, 3}`.
pub fn jacobian_adjugate(dx: &Mat, d: usize) -> Result<(f64, Mat, Mat)> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!("dimension {d} not in {{1,2,3}}")));
    }
    let (j, adj) = det_adj(dx, d);
    if !(j.abs() >= SINGULAR_JACOBIAN) {
        return Err(Error::NonPositiveJacobian(j));
    }
    let mut inv = [[0.0; 3]; 3];
    for r in 0..d {
        for c in 0..d {
            inv[r][c] = adj[r][c] / j;
        }
    }
    Ok((j, adj, inv))
}

pub fn mat_mul(a: &Mat, b: &Mat, d: usize) -> Mat {
    let mut out = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            out[i][j] = (0..d).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Reads the `d×d` matrix stored row-major at `offset` of a sample slice.
pub fn read_mat(x: &[f64], offset: usize, d: usize) -> Mat {
    let mut m = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            m[i][j] = x[offset + i * d + j];
        }
    }
    m
}

pub fn write_mat(m: &Mat, out: &mut [f64], offset: usize, d: usize) {
    for i in 0..d {
        for j in 0..d {
            out[offset + i * d + j] = m[i][j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_adjugate() {
        let m = [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [0.0; 3]];
        let (j, adj, inv) = jacobian_adjugate(&m, 2).unwrap();
        assert_eq!(j, -2.0);
        assert_eq!(adj[0], [4.0, -2.0, 0.0]);
        assert_eq!(adj[1], [-3.0, 1.0, 0.0]);
        assert_eq!(inv[0][0], -2.0);
    }

    #[test]
    fn identity_is_fixed() {
        for d in 1..=3 {
            let (j, adj, inv) = jacobian_adjugate(&IDENTITY, d).unwrap();
            assert_eq!(j, 1.0);
            for i in 0..d {
                for k in 0..d {
                    assert_eq!(adj[i][k], IDENTITY[i][k]);
                    assert_eq!(inv[i][k], IDENTITY[i][k]);
                }
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0; 3]];
        assert!(jacobian_adjugate(&m, 2).is_err());
    }

    proptest! {
        #[test]
        fn adjugate_times_matrix_is_det_identity(v in proptest::collection::vec(-1.0f64..1.0, 9)) {
            let mut m = IDENTITY;
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += 0.3 * v[3 * i + j];
                }
            }
            let (j, adj) = det_adj(&m, 3);
            prop_assume!(j > 1e-3);
            let p = mat_mul(&adj, &m, 3);
            for r in 0..3 {
                for c in 0..3 {
                    let want = if r == c { j } else { 0.0 };
                    prop_assert!((p[r][c] - want).abs() < 1e-12);
                }
            }
        }
    }
}
