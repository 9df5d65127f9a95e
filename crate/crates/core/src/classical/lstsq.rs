use crate::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub coefficients: Vec<f64>,
    /// Numerical rank detected from the triangular factor.
    pub rank: usize,
    /// True when the minimum-norm fallback was used.
    pub rank_deficient: bool,
    pub residual_norm: f64,
}

/// Solves min ‖A·x − y‖₂ by Householder QR on column-equilibrated `A`.
///
/// When the triangular factor reveals a rank deficiency the minimum-norm
/// solution is computed from the pseudo-inverse instead and `rank_deficient`
/// is set.
pub fn fit_least_squares(a: &DMatrix<f64>, targets: &[f64]) -> Result<LstsqSolution> {
    let (rows, cols) = a.shape();
    if targets.len() != rows {
        return Err(Error::LengthMismatch {
            expected: rows,
            got: targets.len(),
        });
    }
    if cols == 0 || rows < cols {
        return Err(Error::Underdetermined { rows, cols });
    }
    let b = DVector::from_column_slice(targets);

    let scales: Vec<f64> = a
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                1.0 / n
            } else {
                1.0
            }
        })
        .collect();
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= scales[j];
    }

    let qr = scaled.qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = diag_max * f64::EPSILON * rows.max(cols) as f64;
    let rank = r.diagonal().iter().filter(|v| v.abs() > tol).count();

    let (x, rank_deficient) = if rank == cols {
        let mut qtb = b.clone();
        qr.q_tr_mul(&mut qtb);
        let head = qtb.rows(0, cols).into_owned();
        let z = r
            .solve_upper_triangular(&head)
            .ok_or_else(|| Error::NonFinite("singular triangular factor".into()))?;
        let x = DVector::from_iterator(cols, z.iter().zip(&scales).map(|(z, s)| z * s));
        (x, false)
    } else {
        // Pseudo-inverse through the Gram eigendecomposition: nalgebra's SVD
        // returns wrong factors for exactly singular input.
        let eig = SymmetricEigen::new(a.transpose() * a);
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = lmax * f64::EPSILON * rows.max(cols) as f64;
        let proj = eig.eigenvectors.transpose() * (a.transpose() * &b);
        let inv = proj
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(p, &l)| if l > tol { p / l } else { 0.0 });
        (&eig.eigenvectors * DVector::from_iterator(cols, inv), true)
    };

    let residual = a * &x - &b;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("least-squares coefficients".into()));
    }
    Ok(LstsqSolution {
        coefficients: x.iter().copied().collect(),
        rank,
        rank_deficient,
        residual_norm: residual.norm(),
    })
}
