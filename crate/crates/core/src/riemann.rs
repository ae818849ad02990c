//! Levi-Civita connection and curvature of a metric given by component jets.
//!
//! Curvature convention: R(X,Y)Z = ∇_{[X,Y]}Z − ∇_X∇_Y Z + ∇_Y∇_X Z and
//! R_{ijkl} = g(R(∂_i,∂_j)∂_k, ∂_l), so that the sectional curvature of an
//! orthonormal pair is R(X,Y,X,Y) and space forms satisfy
//! R_{ijkl} = C(g_ik g_jl − g_il g_jk).

use crate::jet::Jet;
use crate::linalg::{inverse_det, Mat};

/// Index helpers for flat row-major tensors of uniform dimension `n`.
#[inline]
pub fn ix3(n: usize, a: usize, b: usize, c: usize) -> usize {
    (a * n + b) * n + c
}

#[inline]
pub fn ix4(n: usize, a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * n + b) * n + c) * n + d
}

#[inline]
pub fn ix5(n: usize, a: usize, b: usize, c: usize, d: usize, e: usize) -> usize {
    (((a * n + b) * n + c) * n + d) * n + e
}

pub struct Connection {
    pub n: usize,
    pub g: Mat<Jet>,
    pub ginv: Mat<Jet>,
    pub det: Jet,
    /// Γ^k_{ij} at ix3(k, i, j).
    pub gamma: Vec<Jet>,
}

fn sum(terms: impl Iterator<Item = Jet>) -> Jet {
    let mut acc: Option<Jet> = None;
    for t in terms {
        acc = Some(match acc {
            None => t,
            Some(a) => a + t,
        });
    }
    acc.unwrap_or_else(|| Jet::constant(0.0))
}

/// Christoffel symbols of the `n×n` metric `g` whose jets use variables
/// `0..n` as the coordinates. Returns `None` for a degenerate metric.
pub fn connection(g: &Mat<Jet>, det_tol: f64) -> Option<Connection> {
    let n = g.len();
    let (ginv, det) = inverse_det(g, 1e-300)?;
    if det.value().abs() <= det_tol {
        return None;
    }
    let dg: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| (0..n).map(|j| g[i][j].diff(k)).collect())
                .collect()
        })
        .collect();
    // lowered Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut low = Vec::with_capacity(n * n * n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                low.push((&dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j]) * 0.5);
            }
        }
    }
    let mut gamma = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gamma.push(sum((0..n).map(|l| &ginv[k][l] * &low[ix3(n, l, i, j)])));
            }
        }
    }
    Some(Connection {
        n,
        g: g.clone(),
        ginv,
        det,
        gamma,
    })
}

impl Connection {
    /// Fully lowered curvature tensor in the convention documented above.
    pub fn riemann(&self) -> Vec<Jet> {
        let n = self.n;
        let gm = &self.gamma;
        let dgam: Vec<Vec<Jet>> = (0..n)
            .map(|v| gm.iter().map(|x| x.diff(v)).collect())
            .collect();
        let ord = dgam[0][0].order();
        // standard Rs^l_{kij} = ∂_iΓ^l_{jk} − ∂_jΓ^l_{ik} + Γ^l_{ip}Γ^p_{jk} − Γ^l_{jp}Γ^p_{ik}
        let mut rs = vec![Jet::constant(0.0); n * n * n * n];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if j < i {
                            let v = -rs[ix4(n, l, k, j, i)].clone();
                            rs[ix4(n, l, k, i, j)] = v;
                            continue;
                        }
                        if i == j {
                            rs[ix4(n, l, k, i, j)] = Jet::constant(0.0);
                            continue;
                        }
                        let mut t = &dgam[i][ix3(n, l, j, k)] - &dgam[j][ix3(n, l, i, k)];
                        for p in 0..n {
                            t += &(&gm[ix3(n, l, i, p)] * &gm[ix3(n, p, j, k)]);
                            t -= &(&gm[ix3(n, l, j, p)] * &gm[ix3(n, p, i, k)]);
                        }
                        rs[ix4(n, l, k, i, j)] = t.truncate(ord);
                    }
                }
            }
        }
        let gt: Mat<Jet> = self
            .g
            .iter()
            .map(|r| r.iter().map(|x| x.clone().truncate(ord)).collect())
            .collect();
        let mut out = vec![Jet::constant(0.0); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[ix4(n, i, j, k, l)] =
                            -sum((0..n).map(|q| &gt[l][q] * &rs[ix4(n, q, k, i, j)]));
                    }
                }
            }
        }
        out
    }
}

/// Ricci tensor Ric_{jl} = g^{ik} R_{ijkl} and scalar curvature.
pub fn ricci_scalar(n: usize, ginv: &Mat<f64>, riem: &[f64]) -> (Mat<f64>, f64) {
    let mut ric = vec![vec![0.0; n]; n];
    for j in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    s += ginv[i][k] * riem[ix4(n, i, j, k, l)];
                }
            }
            ric[j][l] = s;
        }
    }
    let mut sc = 0.0;
    for j in 0..n {
        for l in 0..n {
            sc += ginv[j][l] * ric[j][l];
        }
    }
    (ric, sc)
}
