use nalgebra::DMatrix;

/// `I^{-1} F I^{-1}` with `I = F + S` and `F = X' Omega X`.
pub fn sandwich(info_inv: &DMatrix<f64>, fisher: &DMatrix<f64>) -> DMatrix<f64> {
    let sigma = info_inv * fisher * info_inv;
    (&sigma + sigma.transpose()) * 0.5
}

/// Effective degrees of freedom `tr(I^{-1} F)`.
pub fn edf(info_inv: &DMatrix<f64>, fisher: &DMatrix<f64>) -> f64 {
    info_inv.component_mul(&fisher.transpose()).sum()
}

/// Leading `q x q` block of the sandwich.
pub fn beta_covariance(info_inv: &DMatrix<f64>, fisher: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    sandwich(info_inv, fisher).view((0, 0), (q, q)).into_owned()
}
