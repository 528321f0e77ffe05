//! Orthogonal Procrustes alignment via a one-sided Jacobi SVD.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
pub const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// Thin SVD `a = u · diag(sigma) · vᵀ` of a square matrix, singular values in
/// descending order. Columns of `u` for vanishing singular values are
/// completed to an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v: Array2<f64>,
}

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
pub fn jacobi_svd(a: ArrayView2<f64>) -> Result<Svd> {
    let (rows, d) = a.dim();
    if rows != d {
        return Err(Error::dim(format!(
            "jacobi_svd expects a square matrix, got {rows}x{d}"
        )));
    }
    let mut work = a.to_owned();
    let mut v = Array2::<f64>::eye(d);

    // inner products below rounding level of the whole matrix count as zero
    let floor = f64::EPSILON * work.iter().map(|x| x * x).sum::<f64>();
    let mut converged = d < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let (alpha, beta, gamma) = {
                    let cp = work.column(p);
                    let cq = work.column(q);
                    (cp.dot(&cp), cq.dot(&cq), cp.dot(&cq))
                };
                if gamma.abs() <= floor || gamma.abs() <= OFF_DIAGONAL_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                rotate_columns(&mut work, p, q, c, sn);
                rotate_columns(&mut v, p, q, c, sn);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let norms: Vec<f64> = work.axis_iter(Axis(1)).map(|c| c.dot(&c).sqrt()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let largest = order.first().map(|&i| norms[i]).unwrap_or(0.0);
    let cutoff = largest * (d as f64) * f64::EPSILON;

    let mut u = Array2::zeros((d, d));
    let mut sigma = Array1::zeros(d);
    let mut v_sorted = Array2::zeros((d, d));
    let mut filled = Vec::new();
    for (k, &i) in order.iter().enumerate() {
        sigma[k] = norms[i];
        v_sorted.column_mut(k).assign(&v.column(i));
        if norms[i] > cutoff && norms[i] > 0.0 {
            // near-null columns are not orthogonal to the rest after deflation
            let mut col = work.column(i).mapv(|x| x / norms[i]);
            for _ in 0..2 {
                for &j in &filled {
                    let prev = u.column(j);
                    let proj = prev.dot(&col);
                    col.scaled_add(-proj, &prev);
                }
            }
            let norm = col.dot(&col).sqrt();
            if norm > 0.5 {
                u.column_mut(k).assign(&(col / norm));
                filled.push(k);
            }
        }
    }
    complete_basis(&mut u, &filled);
    Ok(Svd {
        u,
        sigma,
        v: v_sorted,
    })
}

fn rotate_columns(m: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    for mut row in m.rows_mut() {
        let (x, y) = (row[p], row[q]);
        row[p] = c * x - s * y;
        row[q] = s * x + c * y;
    }
}

/// Fills the columns of `u` not listed in `filled` with unit vectors
/// orthogonal to everything already present (Gram–Schmidt on the standard basis).
fn complete_basis(u: &mut Array2<f64>, filled: &[usize]) {
    let d = u.nrows();
    let mut have: Vec<usize> = filled.to_vec();
    let missing: Vec<usize> = (0..d).filter(|k| !filled.contains(k)).collect();
    let mut candidate = 0;
    for k in missing {
        while candidate < d {
            let mut e = Array1::<f64>::zeros(d);
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &j in &have {
                    let col = u.column(j);
                    let proj = col.dot(&e);
                    e.scaled_add(-proj, &col);
                }
            }
            let norm = e.dot(&e).sqrt();
            if norm > 1e-8 {
                u.column_mut(k).assign(&(e / norm));
                have.push(k);
                break;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Alignment {
    /// Orthogonal `d × d` rotation (reflections allowed).
    pub rotation: Array2<f64>,
    pub aligned: Array2<f64>,
}

/// The orthogonal `R` minimising `‖target·R − reference‖_F`, and `target·R`.
pub fn procrustes_align(reference: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<Alignment> {
    if reference.dim() != target.dim() || reference.nrows() == 0 {
        return Err(Error::dim(format!(
            "procrustes needs equal non-empty shapes, got {:?} and {:?}",
            reference.dim(),
            target.dim()
        )));
    }
    let rotation = rotation_between(reference, target)?;
    Ok(Alignment {
        aligned: target.dot(&rotation),
        rotation,
    })
}

fn rotation_between(reference: ArrayView2<f64>, target: ArrayView2<f64>) -> Result<Array2<f64>> {
    let cross = target.t().dot(&reference);
    let svd = jacobi_svd(cross.view())?;
    Ok(svd.u.dot(&svd.v.t()))
}

/// Aligns each step to the already aligned previous one over their common
/// (leading) rows; the rotation is applied to every row of the step.
pub fn align_series(embeddings: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
    let mut aligned: Vec<Array2<f64>> = Vec::with_capacity(embeddings.len());
    for (t, emb) in embeddings.iter().enumerate() {
        let next = match aligned.last() {
            None => emb.clone(),
            Some(prev) => {
                let m = prev.nrows();
                if emb.nrows() < m {
                    return Err(Error::dim(format!(
                        "step {t} has fewer rows than step {}",
                        t - 1
                    )));
                }
                let rotation = rotation_between(prev.view(), emb.slice(s![..m, ..]))?;
                emb.dot(&rotation)
            }
        };
        aligned.push(next);
    }
    Ok(aligned)
}
