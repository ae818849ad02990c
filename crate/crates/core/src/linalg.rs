//! Small dense matrices over any [`Real`] scalar, plus the f64 eigen and
//! frame routines used by the geometry code.

use crate::jet::Real;
use nalgebra::DMatrix;

pub type Mat<S> = Vec<Vec<S>>;

pub fn zeros<S: Real>(r: usize, c: usize) -> Mat<S> {
    vec![vec![S::cst(0.0); c]; r]
}

pub fn identity<S: Real>(n: usize) -> Mat<S> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = S::cst(1.0);
    }
    m
}

pub fn matmul<S: Real>(a: &Mat<S>, b: &Mat<S>) -> Mat<S> {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let mut s = a[i][0].clone() * b[0][j].clone();
            for l in 1..k {
                s = s + a[i][l].clone() * b[l][j].clone();
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose<S: Real>(a: &Mat<S>) -> Mat<S> {
    (0..a[0].len())
        .map(|j| (0..a.len()).map(|i| a[i][j].clone()).collect())
        .collect()
}

pub fn matvec<S: Real>(a: &Mat<S>, v: &[S]) -> Vec<S> {
    a.iter()
        .map(|row| {
            let mut s = row[0].clone() * v[0].clone();
            for k in 1..v.len() {
                s = s + row[k].clone() * v[k].clone();
            }
            s
        })
        .collect()
}

/// Inverse and determinant by Gauss–Jordan elimination with partial pivoting
/// on the value part. Returns `None` if a pivot falls below `tol`.
pub fn inverse_det<S: Real>(a: &Mat<S>, tol: f64) -> Option<(Mat<S>, S)> {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity::<S>(n);
    let mut det = S::cst(1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| {
                m[x][col]
                    .val()
                    .abs()
                    .partial_cmp(&m[y][col].val().abs())
                    .unwrap()
            })
            .unwrap();
        if m[piv][col].val().abs() <= tol {
            return None;
        }
        if piv != col {
            m.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det = det * p.clone();
        let pr = p.recip();
        for j in 0..n {
            m[col][j] = m[col][j].clone() * pr.clone();
            inv[col][j] = inv[col][j].clone() * pr.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                m[r][j] = m[r][j].clone() - f.clone() * m[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Some((inv, det))
}

/// Determinant. Small matrices and matrices whose pivot value vanishes use
/// cofactor expansion, which keeps every jet coefficient exact.
pub fn determinant<S: Real>(a: &Mat<S>) -> S {
    let n = a.len();
    if n <= 4 {
        return laplace(a);
    }
    let mut m = a.clone();
    let mut det = S::cst(1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| {
                m[x][col]
                    .val()
                    .abs()
                    .partial_cmp(&m[y][col].val().abs())
                    .unwrap()
            })
            .unwrap();
        if m[piv][col].val() == 0.0 {
            return laplace(a);
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det = det * p.clone();
        let pr = p.recip();
        for r in col + 1..n {
            let f = m[r][col].clone() * pr.clone();
            for j in col..n {
                m[r][j] = m[r][j].clone() - f.clone() * m[col][j].clone();
            }
        }
    }
    det
}

fn laplace<S: Real>(a: &Mat<S>) -> S {
    let n = a.len();
    match n {
        0 => S::cst(1.0),
        1 => a[0][0].clone(),
        2 => a[0][0].clone() * a[1][1].clone() - a[0][1].clone() * a[1][0].clone(),
        _ => {
            let mut acc = S::cst(0.0);
            for c in 0..n {
                let minor: Mat<S> = (1..n)
                    .map(|r| {
                        (0..n)
                            .filter(|&j| j != c)
                            .map(|j| a[r][j].clone())
                            .collect()
                    })
                    .collect();
                let t = a[0][c].clone() * laplace(&minor);
                acc = if c % 2 == 0 { acc + t } else { acc - t };
            }
            acc
        }
    }
}

pub fn to_f64(a: &Mat<impl Real>) -> Mat<f64> {
    a.iter()
        .map(|r| r.iter().map(|x| x.val()).collect())
        .collect()
}

pub fn to_dmatrix(a: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

pub fn from_dmatrix(a: &DMatrix<f64>) -> Mat<f64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect()
}

pub fn max_abs(a: &Mat<f64>) -> f64 {
    a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn bilinear(b: &Mat<f64>, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in 0..y.len() {
            s += b[i][j] * x[i] * y[j];
        }
    }
    s
}

/// Number of negative eigenvalues of a symmetric matrix.
pub fn negative_index(a: &Mat<f64>) -> usize {
    let e = nalgebra::SymmetricEigen::new(to_dmatrix(a));
    e.eigenvalues.iter().filter(|&&v| v < 0.0).count()
}

/// Orthonormal frame of a nondegenerate symmetric form `b` by Gram–Schmidt
/// on the coordinate basis, pivoting on the largest |b(e,e)| with ties going
/// to the lowest index. Returns the vectors (as columns in coordinate
/// components) and their signs `b(V_i, V_i) = ±1`.
pub fn pivoted_gram_schmidt(b: &Mat<f64>, tol: f64) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let n = b.len();
    let mut cands: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut frame = Vec::new();
    let mut signs = Vec::new();
    while frame.len() < n {
        let norms: Vec<f64> = cands.iter().map(|c| bilinear(b, c, c).abs()).collect();
        let mut best = 0;
        for (i, &v) in norms.iter().enumerate() {
            if v > norms[best] * (1.0 + 1e-12) {
                best = i;
            }
        }
        if norms[best] <= tol {
            // every remaining candidate is null: replace the pair with the
            // largest cross term by its sum and difference
            let mut pair = None;
            let mut bigb = tol;
            for i in 0..cands.len() {
                for j in i + 1..cands.len() {
                    let x = bilinear(b, &cands[i], &cands[j]).abs();
                    if x > bigb {
                        bigb = x;
                        pair = Some((i, j));
                    }
                }
            }
            let (i, j) = pair?;
            let s: Vec<f64> = cands[i].iter().zip(&cands[j]).map(|(x, y)| x + y).collect();
            let d: Vec<f64> = cands[i].iter().zip(&cands[j]).map(|(x, y)| x - y).collect();
            cands[i] = s;
            cands[j] = d;
            continue;
        }
        let c = cands.remove(best);
        let nb = bilinear(b, &c, &c);
        let sign = nb.signum();
        let v: Vec<f64> = c.iter().map(|x| x / nb.abs().sqrt()).collect();
        for cand in cands.iter_mut() {
            let p = bilinear(b, cand, &v) * sign;
            for k in 0..n {
                cand[k] -= p * v[k];
            }
        }
        frame.push(v);
        signs.push(sign);
    }
    Some((frame, signs))
}

/// Eigen-decomposition of `A = g^{-1} B` for symmetric `g`, `B`. Returns
/// eigenvalues and g-orthonormal eigenvectors (columns) with their signs
/// `g(E_i,E_i)`. Uses a Cholesky reduction when `g` is definite and a
/// non-symmetric solve otherwise.
pub fn generalized_eigen(
    g: &Mat<f64>,
    b: &Mat<f64>,
    pair_tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>), String> {
    let n = g.len();
    let gm = to_dmatrix(g);
    let bm = to_dmatrix(b);
    if let Some(ch) = nalgebra::Cholesky::new(gm.clone()) {
        let l = ch.l();
        let linv = l.clone().try_inverse().ok_or("singular Cholesky factor")?;
        let c = &linv * &bm * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let e = nalgebra::SymmetricEigen::new(c);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| e.eigenvalues[x].partial_cmp(&e.eigenvalues[y]).unwrap());
        let vt = linv.transpose() * &e.eigenvectors;
        let vals = idx.iter().map(|&k| e.eigenvalues[k]).collect();
        let vecs = idx
            .iter()
            .map(|&k| (0..n).map(|i| vt[(i, k)]).collect())
            .collect();
        return Ok((vals, vecs, vec![1.0; n]));
    }
    // indefinite g: work with A = g^{-1}B directly
    let ginv = gm.clone().try_inverse().ok_or("singular metric")?;
    let a = &ginv * &bm;
    let schur = a.clone().complex_eigenvalues();
    let mut vals: Vec<f64> = Vec::new();
    for z in schur.iter() {
        if z.im.abs() > pair_tol.max(1e-10) * (1.0 + z.re.abs()) {
            return Err("complex eigenvalues".into());
        }
        vals.push(z.re);
    }
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // group equal eigenvalues and take g-orthonormal bases of each eigenspace
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &v in &vals {
        match groups.last_mut() {
            Some((c, k)) if (v - *c).abs() <= 1e-7 * (1.0 + c.abs()) => {
                *c = (*c * *k as f64 + v) / (*k as f64 + 1.0);
                *k += 1;
            }
            _ => groups.push((v, 1)),
        }
    }
    let mut out_vals = Vec::new();
    let mut out_vecs = Vec::new();
    let mut out_signs = Vec::new();
    for (lam, mult) in groups {
        let shifted = &a - DMatrix::identity(n, n) * lam;
        let svd = shifted.svd(true, true);
        let vt = svd.v_t.ok_or("svd failed")?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| {
            svd.singular_values[x]
                .partial_cmp(&svd.singular_values[y])
                .unwrap()
        });
        let basis: Vec<Vec<f64>> = order[..mult]
            .iter()
            .map(|&k| (0..n).map(|i| vt[(k, i)]).collect())
            .collect();
        // restrict g to the eigenspace and orthonormalize
        let gsub: Mat<f64> = (0..mult)
            .map(|i| {
                (0..mult)
                    .map(|j| bilinear(g, &basis[i], &basis[j]))
                    .collect()
            })
            .collect();
        let (fr, sg) = pivoted_gram_schmidt(&gsub, 1e-12).ok_or("null eigenvector")?;
        // defective eigenvalue check: residual of A v - λ v
        for (f, s) in fr.iter().zip(sg) {
            let v: Vec<f64> = (0..n)
                .map(|i| (0..mult).map(|k| f[k] * basis[k][i]).sum())
                .collect();
            let av = &a * DMatrix::from_column_slice(n, 1, &v);
            let res: f64 = (0..n)
                .map(|i| (av[(i, 0)] - lam * v[i]).abs())
                .fold(0.0, f64::max);
            if res > 1e-6 * (1.0 + lam.abs()) {
                return Err("defective eigenvalue".into());
            }
            out_vals.push(lam);
            out_vecs.push(v);
            out_signs.push(s);
        }
    }
    Ok((out_vals, out_vecs, out_signs))
}
