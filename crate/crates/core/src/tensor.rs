//! Pointwise Christoffel and Ricci algebra in any dimension.
//!
//! Index layout: `dg[l][i][j] = d_l g_ij`, `gamma[k][i][j] = Gamma^k_ij`,
//! `dgamma[l][k][i][j] = d_l Gamma^k_ij`.

use nalgebra::{DMatrix, SMatrix};

pub type Sq<const D: usize> = [[f64; D]; D];
pub type Cube<const D: usize> = [[[f64; D]; D]; D];

pub fn inverse<const D: usize>(g: &Sq<D>) -> Option<Sq<D>> {
    let m = SMatrix::<f64, D, D>::from_fn(|i, j| g[i][j]);
    let inv = m.try_inverse()?;
    let mut out = [[0.0; D]; D];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = inv[(i, j)];
        }
    }
    Some(out)
}

pub fn determinant<const D: usize>(g: &Sq<D>) -> f64 {
    DMatrix::<f64>::from_fn(D, D, |i, j| g[i][j]).determinant()
}

/// `Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)`.
pub fn christoffel<const D: usize>(ginv: &Sq<D>, dg: &Cube<D>) -> Cube<D> {
    let mut out = [[[0.0; D]; D]; D];
    for k in 0..D {
        for i in 0..D {
            for j in i..D {
                let mut s = 0.0;
                for l in 0..D {
                    s += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                out[k][i][j] = 0.5 * s;
                out[k][j][i] = 0.5 * s;
            }
        }
    }
    out
}

/// `R_ij = d_k Gamma^k_ij - d_j Gamma^k_ik + Gamma^k_kl Gamma^l_ij - Gamma^k_jl Gamma^l_ik`,
/// symmetrized.
pub fn ricci<const D: usize>(gamma: &Cube<D>, dgamma: &[Cube<D>; D]) -> Sq<D> {
    let mut r = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            let mut s = 0.0;
            for k in 0..D {
                s += dgamma[k][k][i][j] - dgamma[j][k][i][k];
                for l in 0..D {
                    s += gamma[k][k][l] * gamma[l][i][j] - gamma[k][j][l] * gamma[l][i][k];
                }
            }
            r[i][j] = s;
        }
    }
    let mut out = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            out[i][j] = 0.5 * (r[i][j] + r[j][i]);
        }
    }
    out
}

/// `g^ij R_ij`.
pub fn trace<const D: usize>(ginv: &Sq<D>, t: &Sq<D>) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        for j in 0..D {
            s += ginv[i][j] * t[i][j];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit sphere `dx^2 + sin^2 x dy^2` at a point, with exact jets.
    fn sphere_at(x: f64) -> (Sq<2>, Cube<2>, [Cube<2>; 2]) {
        let (s, c) = x.sin_cos();
        let g = [[1.0, 0.0], [0.0, s * s]];
        let mut dg = [[[0.0; 2]; 2]; 2];
        dg[0][1][1] = 2.0 * s * c;
        let ginv = inverse(&g).unwrap();
        let gamma = christoffel(&ginv, &dg);
        // d_x of Gamma^0_11 = -s c and Gamma^1_01 = c / s
        let mut dgam = [[[[0.0; 2]; 2]; 2]; 2];
        dgam[0][0][1][1] = -(c * c - s * s);
        dgam[0][1][0][1] = -1.0 / (s * s);
        dgam[0][1][1][0] = -1.0 / (s * s);
        (g, gamma, dgam)
    }

    #[test]
    fn sphere_ricci_equals_metric() {
        for x in [0.3, 1.0, 2.0] {
            let (g, gamma, dgam) = sphere_at(x);
            assert!((gamma[0][1][1] + x.sin() * x.cos()).abs() < 1e-15);
            assert!((gamma[1][0][1] - x.cos() / x.sin()).abs() < 1e-14);
            let r = ricci(&gamma, &dgam);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((r[i][j] - g[i][j]).abs() < 1e-13);
                }
            }
            assert!((trace(&inverse(&g).unwrap(), &r) - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn inverse_of_identity_and_singular() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(inverse(&id).unwrap(), id);
        assert!(inverse(&[[1.0, 2.0], [2.0, 4.0]]).is_none());
        assert!((determinant(&[[2.0, 1.0], [1.0, 3.0]]) - 5.0).abs() < 1e-15);
    }
}
