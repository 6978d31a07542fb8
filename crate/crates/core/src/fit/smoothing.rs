//! Generalized Fellner-Schall update of the smoothing parameters.

use nalgebra::DMatrix;

use crate::basis::PenaltyAssembly;
use crate::error::{Error, Result};

/// Relative singular-value cutoff for the pseudoinverse of `S`.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Quadratic forms below this make the update undefined.
pub const NULL_SPACE_QUAD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaUpdate {
    pub lambda: Vec<f64>,
    /// Numerator was negative or non-finite and the floor was applied.
    pub floored: Vec<bool>,
    /// Term was fitted in the penalty null space and set to the cap.
    pub capped: Vec<bool>,
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
pub fn pinv_symmetric(s: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = s.nrows();
    if max == 0.0 {
        return DMatrix::zeros(n, n);
    }
    let cutoff = PINV_CUTOFF * max;
    let mut out = DMatrix::zeros(n, n);
    for (k, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev.abs() > cutoff {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / ev;
        }
    }
    out
}

/// Pseudoinverse of `S = sum lambda_k^2 S_k`, assembled block by block.
///
/// The penalized blocks are disjoint, so this equals the pseudoinverse of the
/// full matrix; applying the cutoff within each block keeps a term with a huge
/// `lambda` from wiping out the spectrum of the others.
pub fn block_pinv(lambda: &[f64], penalty: &PenaltyAssembly) -> Result<DMatrix<f64>> {
    if lambda.len() != penalty.n_terms() {
        return Err(Error::Dimension(format!(
            "{} smoothing parameters for {} penalty terms",
            lambda.len(),
            penalty.n_terms()
        )));
    }
    let n = penalty.layout.total();
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in lambda.iter().enumerate() {
        let range = penalty.layout.penalized(k);
        let block = pinv_symmetric(&(&penalty.grams[k] * (l * l)));
        out.view_mut((range.start, range.start), (range.len(), range.len()))
            .copy_from(&block);
    }
    Ok(out)
}

/// `tr(A S_k)` for the block-embedded penalty `k`.
fn block_trace(a: &DMatrix<f64>, penalty: &PenaltyAssembly, k: usize) -> f64 {
    let range = penalty.layout.penalized(k);
    let gram = &penalty.grams[k];
    let mut t = 0.0;
    for (bi, i) in range.clone().enumerate() {
        for (bj, j) in range.clone().enumerate() {
            t += a[(i, j)] * gram[(bj, bi)];
        }
    }
    t
}

/// `lambda_k*^2 = [tr(S^- S_k) - tr(I^{-1} S_k)] / (theta' S_k theta) * lambda_k^2`.
///
/// `info_inv` is the inverse of `X' Omega X + S` at `theta`, with `S` built
/// from the current `lambda`.
pub fn fellner_schall_update(
    lambda: &[f64],
    theta: &[f64],
    penalty: &PenaltyAssembly,
    info_inv: &DMatrix<f64>,
    floor: f64,
    cap: f64,
) -> Result<LambdaUpdate> {
    let s_pinv = block_pinv(lambda, penalty)?;
    let mut out = LambdaUpdate {
        lambda: Vec::with_capacity(lambda.len()),
        floored: vec![false; lambda.len()],
        capped: vec![false; lambda.len()],
    };
    for (k, &l) in lambda.iter().enumerate() {
        let quad = penalty.quad_form(k, theta);
        if quad < NULL_SPACE_QUAD {
            out.capped[k] = true;
            out.lambda.push(cap);
            continue;
        }
        let numer = block_trace(&s_pinv, penalty, k) - block_trace(info_inv, penalty, k);
        let l2 = numer / quad * l * l;
        let updated = if l2.is_finite() && l2 > 0.0 {
            l2.sqrt()
        } else {
            out.floored[k] = true;
            floor
        };
        if updated < floor {
            out.floored[k] = true;
        }
        if updated > cap {
            out.capped[k] = true;
        }
        out.lambda.push(updated.clamp(floor, cap));
    }
    Ok(out)
}
