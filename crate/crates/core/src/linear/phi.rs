//! Exponential-integrator φ-functions: `φ₁(z) = (e^z - 1)/z`,
//! `φ₂(z) = (e^z - 1 - z)/z²`.

use nalgebra::{Matrix2, Matrix6};

/// `(e^z, φ₁(z), φ₂(z))`.
pub fn phi_scalar(z: f64) -> [f64; 3] {
    if z.abs() < 0.5 {
        let mut term = 1.0;
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        // term = z^k / k!
        for k in 0..30 {
            p1 += term / (k + 1) as f64;
            p2 += term / ((k + 1) * (k + 2)) as f64;
            term *= z / (k + 1) as f64;
        }
        [z.exp(), p1, p2]
    } else {
        let em1 = z.exp_m1();
        [z.exp(), em1 / z, (em1 - z) / (z * z)]
    }
}

pub type Mat2 = [[f64; 2]; 2];

pub fn mat2_mul_vec<T>(m: &Mat2, x: [T; 2]) -> [T; 2]
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    [x[0] * m[0][0] + x[1] * m[0][1], x[0] * m[1][0] + x[1] * m[1][1]]
}

/// `(e^{B}, φ₁(B), φ₂(B))` for a real 2×2 matrix `B`, from the exponential of
/// the block matrix `[[B, I, 0], [0, 0, I], [0, 0, 0]]`.
pub fn phi_matrix2(b: &Mat2) -> [Mat2; 3] {
    let mut big = Matrix6::<f64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            big[(i, j)] = b[i][j];
        }
        big[(i, i + 2)] = 1.0;
        big[(i + 2, i + 4)] = 1.0;
    }
    let e = big.exp();
    let block = |c: usize| {
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = e[(i, c + j)];
            }
        }
        m
    };
    [block(0), block(2), block(4)]
}

/// Reference `e^{B}` through nalgebra.
pub fn expm2_reference(b: &Mat2) -> Mat2 {
    let m = Matrix2::new(b[0][0], b[0][1], b[1][0], b[1][1]).exp();
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_branches_agree() {
        for z in [-0.4999999, -0.5000001, 0.4999999, 0.5000001] {
            let a = phi_scalar(z);
            let em1 = z.exp_m1();
            assert!((a[1] - em1 / z).abs() < 1e-14);
            assert!((a[2] - (em1 - z) / (z * z)).abs() < 1e-12);
        }
        assert_eq!(phi_scalar(0.0), [1.0, 1.0, 0.5]);
    }

    #[test]
    fn diagonal_matrix_matches_scalar() {
        let b = [[-3.0, 0.0], [0.0, -0.01]];
        let [e, p1, p2] = phi_matrix2(&b);
        for (i, z) in [-3.0, -0.01].into_iter().enumerate() {
            let s = phi_scalar(z);
            assert!((e[i][i] - s[0]).abs() < 1e-13);
            assert!((p1[i][i] - s[1]).abs() < 1e-13);
            assert!((p2[i][i] - s[2]).abs() < 1e-13);
        }
    }
}
