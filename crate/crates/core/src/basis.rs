//! B-spline bases, quantile knot placement, difference penalties and the
//! sum-to-zero reparameterization of additive terms.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DEGREE: usize = 3;

/// Knot set of a clamped B-spline basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotVector {
    pub degree: usize,
    pub interior: Vec<f64>,
    /// `[lo, hi]`
    pub boundary: [f64; 2],
    /// Set when duplicate quantiles were dropped during placement.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub collapsed: bool,
}

/// Type-7 empirical quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl KnotVector {
    pub fn new(degree: usize, interior: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidArgument("spline degree must be >= 1".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "boundary knots {lo} >= {hi}"
            )));
        }
        if interior.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("interior knots not sorted".into()));
        }
        if interior.iter().any(|&k| !(k > lo && k < hi)) {
            return Err(Error::InvalidArgument(
                "interior knot outside boundary".into(),
            ));
        }
        Ok(Self {
            degree,
            interior,
            boundary: [lo, hi],
            collapsed: false,
        })
    }

    /// Interior knots at the `k / (n_interior + 1)` sample quantiles and
    /// boundary knots at the sample range.
    pub fn from_quantiles(values: &[f64], n_interior: usize, degree: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "no values for knot placement".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite value in knot placement".into(),
            ));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let lo = sorted[0];
        let hi = sorted[sorted.len() - 1];
        if lo == hi {
            return Err(Error::DegenerateCovariate);
        }
        let mut interior: Vec<f64> = Vec::with_capacity(n_interior);
        let mut collapsed = false;
        for k in 1..=n_interior {
            let q = quantile_sorted(&sorted, k as f64 / (n_interior + 1) as f64);
            let dup = interior.last().is_some_and(|&last| q <= last);
            if dup || q <= lo || q >= hi {
                collapsed = true;
                continue;
            }
            interior.push(q);
        }
        if collapsed {
            log::warn!(
                "collapsed duplicate quantile knots: requested {n_interior}, kept {}",
                interior.len()
            );
        }
        let mut knots = Self::new(degree, interior, lo, hi)?;
        knots.collapsed = collapsed;
        Ok(knots)
    }

    pub fn lo(&self) -> f64 {
        self.boundary[0]
    }

    pub fn hi(&self) -> f64 {
        self.boundary[1]
    }

    /// Number of basis functions.
    pub fn dim(&self) -> usize {
        self.interior.len() + self.degree + 1
    }

    /// Full knot sequence with `degree + 1` copies of each boundary knot.
    pub fn full(&self) -> Vec<f64> {
        let d = self.degree;
        let mut t = Vec::with_capacity(self.interior.len() + 2 * (d + 1));
        t.extend(std::iter::repeat_n(self.lo(), d + 1));
        t.extend_from_slice(&self.interior);
        t.extend(std::iter::repeat_n(self.hi(), d + 1));
        t
    }

    /// Basis values at `x` and whether `x` was clamped into the boundary range.
    pub fn row(&self, x: f64) -> (Vec<f64>, bool) {
        let mut out = vec![0.0; self.dim()];
        let clamped = self.row_into(x, &mut out);
        (out, clamped)
    }

    /// Writes the basis row into `out` (length `dim()`); returns the clamp flag.
    pub fn row_into(&self, x: f64, out: &mut [f64]) -> bool {
        let (first, values, clamped) = self.nonzero(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        out[first..first + values.len()].copy_from_slice(&values);
        clamped
    }

    /// Index of the first active basis function and the `degree + 1` active values.
    pub fn nonzero(&self, x: f64) -> (usize, Vec<f64>, bool) {
        let d = self.degree;
        let clamped = x < self.lo() || x > self.hi() || x.is_nan();
        let x = if x.is_nan() {
            self.lo()
        } else {
            x.clamp(self.lo(), self.hi())
        };
        let t = self.full();
        // knot span: t[span] <= x < t[span + 1], right end closed on the last span
        let last_span = self.interior.len() + d;
        let span = if x >= self.hi() {
            last_span
        } else {
            // first index in [d, last_span] whose right endpoint exceeds x
            let upper = t[d + 1..=last_span + 1].partition_point(|&k| k <= x);
            d + upper
        };
        let mut values = vec![0.0; d + 1];
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        values[0] = 1.0;
        for j in 1..=d {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { values[r] / denom };
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        (span - d, values, clamped)
    }

    /// `n x p` basis matrix and the number of clamped points.
    pub fn design(&self, xs: &[f64]) -> (DMatrix<f64>, usize) {
        let p = self.dim();
        let mut m = DMatrix::zeros(xs.len(), p);
        let mut n_clamped = 0;
        for (i, &x) in xs.iter().enumerate() {
            let (first, values, clamped) = self.nonzero(x);
            n_clamped += clamped as usize;
            for (k, v) in values.into_iter().enumerate() {
                m[(i, first + k)] = v;
            }
        }
        (m, n_clamped)
    }

    /// Spline value `sum_k coef_k b_k(x)`.
    pub fn eval(&self, coef: &[f64], x: f64) -> f64 {
        let (first, values, _) = self.nonzero(x);
        values.iter().zip(&coef[first..]).map(|(b, c)| b * c).sum()
    }
}

/// Reparameterization `alpha* = Q alpha` enforcing `Bstar' alpha* = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintTransform {
    pub bstar: DVector<f64>,
    pub q: DMatrix<f64>,
}

impl ConstraintTransform {
    /// Builds the transform from the raw `n x p` basis matrix of a sample.
    pub fn sum_to_zero(raw: &DMatrix<f64>) -> Result<Self> {
        let p = raw.ncols();
        if raw.nrows() < p {
            return Err(Error::Dimension(format!(
                "sum-to-zero transform needs n >= p, got n = {}, p = {p}",
                raw.nrows()
            )));
        }
        let bstar: DVector<f64> = raw.row_sum().transpose();
        Self::from_bstar(bstar)
    }

    pub fn from_bstar(bstar: DVector<f64>) -> Result<Self> {
        let p = bstar.len();
        if p < 2 {
            return Err(Error::Dimension(
                "constraint needs at least two basis functions".into(),
            ));
        }
        let norm = bstar.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "column sums of the basis are zero".into(),
            ));
        }
        // Householder reflector sending e1 to -bstar/|bstar|; its trailing
        // columns span the orthogonal complement.
        let mut u = &bstar / norm;
        let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
        u[0] += sign;
        let uu = u.norm_squared();
        let mut q = DMatrix::zeros(p, p - 1);
        for c in 1..p {
            let scale = 2.0 * u[c] / uu;
            for r in 0..p {
                let e = if r == c { 1.0 } else { 0.0 };
                q[(r, c - 1)] = e - scale * u[r];
            }
        }
        for mut col in q.column_iter_mut() {
            if let Some(&first) = col.iter().find(|v| v.abs() > 1e-14) {
                if first < 0.0 {
                    col.neg_mut();
                }
            }
        }
        Ok(Self { bstar, q })
    }

    pub fn raw_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn reduced_dim(&self) -> usize {
        self.q.ncols()
    }

    /// Constrained coefficients `Q alpha` in the raw basis.
    pub fn expand(&self, alpha: &[f64]) -> Vec<f64> {
        (&self.q * DVector::from_column_slice(alpha))
            .as_slice()
            .to_vec()
    }
}

/// `(p - r) x p` matrix of order-`r` differences.
pub fn difference_matrix(p: usize, r: usize) -> Result<DMatrix<f64>> {
    if r < 1 || r >= p {
        return Err(Error::InvalidArgument(format!(
            "difference order {r} needs 1 <= r < p = {p}"
        )));
    }
    let first = |len: usize| {
        DMatrix::from_fn(len - 1, len, |i, j| {
            if j == i {
                -1.0
            } else if j == i + 1 {
                1.0
            } else {
                0.0
            }
        })
    };
    let mut d = first(p);
    for k in 1..r {
        d = first(p - k) * d;
    }
    Ok(d)
}

/// Parameter layout `theta = (beta, gamma, alpha_1, ..., alpha_J)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub q: usize,
    pub p0: usize,
    /// Reduced dimensions `p_j - 1` of the additive terms.
    pub smooth: Vec<usize>,
}

impl BlockLayout {
    pub fn total(&self) -> usize {
        self.q + self.p0 + self.smooth.iter().sum::<usize>()
    }

    pub fn beta(&self) -> std::ops::Range<usize> {
        0..self.q
    }

    pub fn gamma(&self) -> std::ops::Range<usize> {
        self.q..self.q + self.p0
    }

    /// Range of `alpha_j`, `j` zero-based.
    pub fn alpha(&self, j: usize) -> std::ops::Range<usize> {
        let start = self.q + self.p0 + self.smooth[..j].iter().sum::<usize>();
        start..start + self.smooth[j]
    }

    /// Penalized block `k`: `0` is gamma, `k >= 1` is `alpha_k`.
    pub fn penalized(&self, k: usize) -> std::ops::Range<usize> {
        if k == 0 {
            self.gamma()
        } else {
            self.alpha(k - 1)
        }
    }

    pub fn n_penalized(&self) -> usize {
        1 + self.smooth.len()
    }
}

/// Difference penalties `S_k` for the gamma block and each alpha block.
#[derive(Debug, Clone)]
pub struct PenaltyAssembly {
    pub layout: BlockLayout,
    pub order: usize,
    /// `D_k^{(r)}` acting on the block's own coefficients.
    pub diffs: Vec<DMatrix<f64>>,
    /// `D' D` for each block (block-sized, not embedded).
    pub grams: Vec<DMatrix<f64>>,
}

impl PenaltyAssembly {
    pub fn new(layout: BlockLayout, order: usize) -> Result<Self> {
        let mut diffs = Vec::with_capacity(layout.n_penalized());
        for k in 0..layout.n_penalized() {
            diffs.push(difference_matrix(layout.penalized(k).len(), order)?);
        }
        let grams = diffs.iter().map(|d| d.transpose() * d).collect();
        Ok(Self {
            layout,
            order,
            diffs,
            grams,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.diffs.len()
    }

    /// `S_k` embedded in the full parameter space.
    pub fn embedded(&self, k: usize) -> DMatrix<f64> {
        let dim = self.layout.total();
        let mut s = DMatrix::zeros(dim, dim);
        let range = self.layout.penalized(k);
        s.view_mut((range.start, range.start), (range.len(), range.len()))
            .copy_from(&self.grams[k]);
        s
    }

    /// `S = sum_k lambda_k^2 S_k`.
    pub fn combined(&self, lambda: &[f64]) -> Result<DMatrix<f64>> {
        if lambda.len() != self.n_terms() {
            return Err(Error::Dimension(format!(
                "expected {} smoothing parameters, got {}",
                self.n_terms(),
                lambda.len()
            )));
        }
        if let Some(l) = lambda.iter().find(|l| !(**l >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "negative smoothing parameter {l}"
            )));
        }
        let dim = self.layout.total();
        let mut s = DMatrix::zeros(dim, dim);
        for (k, &l) in lambda.iter().enumerate() {
            let range = self.layout.penalized(k);
            let mut block = s.view_mut((range.start, range.start), (range.len(), range.len()));
            block += &self.grams[k] * (l * l);
        }
        Ok(s)
    }

    /// `theta' S_k theta`.
    pub fn quad_form(&self, k: usize, theta: &[f64]) -> f64 {
        let block = DVector::from_column_slice(&theta[self.layout.penalized(k)]);
        (&self.diffs[k] * block).norm_squared()
    }

    /// `theta' S theta`.
    pub fn penalty(&self, lambda: &[f64], theta: &[f64]) -> f64 {
        lambda
            .iter()
            .enumerate()
            .map(|(k, l)| l * l * self.quad_form(k, theta))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Textbook Cox-de Boor recursion, independent of the triangular scheme.
    fn cox_de_boor(t: &[f64], i: usize, d: usize, x: f64) -> f64 {
        if d == 0 {
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let a = t[i + d] - t[i];
        if a > 0.0 {
            v += (x - t[i]) / a * cox_de_boor(t, i, d - 1, x);
        }
        let b = t[i + d + 1] - t[i + 1];
        if b > 0.0 {
            v += (t[i + d + 1] - x) / b * cox_de_boor(t, i + 1, d - 1, x);
        }
        v
    }

    fn oracle_row(knots: &KnotVector, x: f64) -> Vec<f64> {
        let t = knots.full();
        // the right end belongs to the last nonempty span
        let last_start = t.len() - knots.degree - 2;
        (0..knots.dim())
            .map(|i| {
                if x == knots.hi() {
                    cox_de_boor_closed(&t, i, knots.degree, x, last_start)
                } else {
                    cox_de_boor(&t, i, knots.degree, x)
                }
            })
            .collect()
    }

    fn cox_de_boor_closed(t: &[f64], i: usize, d: usize, x: f64, last_start: usize) -> f64 {
        if d == 0 {
            return if i == last_start { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let a = t[i + d] - t[i];
        if a > 0.0 {
            v += (x - t[i]) / a * cox_de_boor_closed(t, i, d - 1, x, last_start);
        }
        let b = t[i + d + 1] - t[i + 1];
        if b > 0.0 {
            v += (t[i + d + 1] - x) / b * cox_de_boor_closed(t, i + 1, d - 1, x, last_start);
        }
        v
    }

    #[test]
    fn median_knot() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let k = KnotVector::from_quantiles(&values, 1, 3).unwrap();
        assert_eq!(k.interior, vec![50.5]);
        assert_eq!(k.dim(), 5);
        assert_eq!(k.boundary, [1.0, 100.0]);
    }

    #[test]
    fn no_interior_knots() {
        let k = KnotVector::from_quantiles(&[0.0, 1.0, 2.0], 0, 3).unwrap();
        assert!(k.interior.is_empty());
        assert_eq!(k.dim(), 4);
    }

    #[test]
    fn degenerate_covariate() {
        assert!(matches!(
            KnotVector::from_quantiles(&[2.0; 10], 3, 3),
            Err(Error::DegenerateCovariate)
        ));
    }

    #[test]
    fn duplicate_quantiles_collapse() {
        let mut values = vec![0.0; 50];
        values.extend((1..=10).map(f64::from));
        let k = KnotVector::from_quantiles(&values, 5, 3).unwrap();
        assert!(k.collapsed);
        assert!(k.interior.len() < 5);
        assert!(k.interior.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn uniform_sample_quantile_knots() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n_int = (400f64).cbrt().ceil() as usize;
        assert_eq!(n_int, 8);
        let k = KnotVector::from_quantiles(&values, n_int, 3).unwrap();
        assert_eq!(k.dim(), 12);
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for (i, &knot) in k.interior.iter().enumerate() {
            let level = (i + 1) as f64 / 9.0;
            // type-7 quantile recomputed by hand
            let h = 399.0 * level;
            let f = h.floor() as usize;
            let expected = sorted[f] + (h - f as f64) * (sorted[f + 1] - sorted[f]);
            assert_abs_diff_eq!(knot, expected, epsilon = 1e-15);
            let nominal = -1.0 + 2.0 * level;
            assert!((knot - nominal).abs() < 0.15, "{knot} vs {nominal}");
        }
    }

    #[test]
    fn left_boundary_interpolates() {
        let k = KnotVector::new(3, vec![0.3, 0.6], 0.0, 1.0).unwrap();
        let (row, _) = k.row(0.0);
        assert_eq!(row[0], 1.0);
        assert!(row[1..].iter().all(|&v| v == 0.0));
        let (row, _) = k.row(1.0);
        assert_eq!(row[row.len() - 1], 1.0);
    }

    #[test]
    fn linear_hat_functions() {
        let k = KnotVector::new(1, vec![0.5], 0.0, 1.0).unwrap();
        assert_eq!(k.full(), vec![0.0, 0.0, 0.5, 1.0, 1.0]);
        let (row, _) = k.row(0.25);
        assert_abs_diff_eq!(row[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(row[1], 0.5, epsilon = 1e-15);
        assert_eq!(row[2], 0.0);
    }

    #[test]
    fn clamps_outside_range() {
        let k = KnotVector::new(3, vec![0.5], 0.0, 1.0).unwrap();
        let (row, clamped) = k.row(-3.0);
        assert!(clamped);
        assert_eq!(row, k.row(0.0).0);
        let (_, clamped) = k.row(0.2);
        assert!(!clamped);
    }

    #[test]
    fn matches_recursive_oracle() {
        let k = KnotVector::new(3, vec![0.1, 0.25, 0.25, 0.7], 0.0, 1.0).unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let (row, _) = k.row(x);
            let oracle = oracle_row(&k, x);
            for (a, b) in row.iter().zip(&oracle) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn monotone_coefficients_give_monotone_spline() {
        let k = KnotVector::new(3, vec![0.2, 0.4, 0.5, 0.9], 0.0, 2.0).unwrap();
        let coef = [-1.0, -1.0, -0.2, 0.5, 0.5, 0.51, 3.0, 3.0];
        let mut prev = f64::NEG_INFINITY;
        for i in 0..1000 {
            let x = 2.0 * i as f64 / 999.0;
            let v = k.eval(&coef, x);
            assert!(v >= prev - 1e-14, "x {x}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn two_dim_complement() {
        let t = ConstraintTransform::from_bstar(DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(t.q[(0, 0)], s, epsilon = 1e-15);
        assert_abs_diff_eq!(t.q[(1, 0)], -s, epsilon = 1e-15);
    }

    #[test]
    fn sum_to_zero_properties() {
        let k = KnotVector::new(3, vec![-0.5, 0.0, 0.4], -1.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..57)
            .map(|i| -1.0 + 2.0 * (i as f64 / 56.0).powf(1.3))
            .collect();
        let (raw, _) = k.design(&xs);
        let t = ConstraintTransform::sum_to_zero(&raw).unwrap();
        let qtq = t.q.transpose() * &t.q;
        assert!((qtq - DMatrix::identity(6, 6)).amax() < 1e-10);
        assert!((t.bstar.transpose() * &t.q).amax() < 1e-10 * t.bstar.norm());
        let reduced = &raw * &t.q;
        assert!(reduced.row_sum().amax() < 1e-8);
        assert!(ConstraintTransform::sum_to_zero(&raw.rows(0, 3).into_owned()).is_err());
    }

    #[test]
    fn difference_matrices() {
        let d = difference_matrix(4, 2).unwrap();
        let expected = DMatrix::from_row_slice(2, 4, &[1.0, -2.0, 1.0, 0.0, 0.0, 1.0, -2.0, 1.0]);
        assert_eq!(d, expected);
        assert!(difference_matrix(4, 4).is_err());
        assert!(difference_matrix(4, 0).is_err());
        let d3 = difference_matrix(7, 3).unwrap();
        assert_eq!(d3.nrows(), 4);
        assert!((&d3 * DVector::from_element(7, 2.5)).amax() == 0.0);
        let d2 = difference_matrix(9, 2).unwrap();
        let ramp = DVector::from_fn(9, |i, _| i as f64 + 1.0);
        assert!((&d2 * ramp).amax() == 0.0);
    }

    #[test]
    fn difference_norms_match_sums() {
        let g = [0.3, -1.2, 2.0, 0.7, 5.1];
        let v = DVector::from_column_slice(&g);
        let d1 = (difference_matrix(5, 1).unwrap() * &v).norm_squared();
        let d2 = (difference_matrix(5, 2).unwrap() * &v).norm_squared();
        let s1: f64 = (1..5).map(|k| (g[k] - g[k - 1]).powi(2)).sum();
        let s2: f64 = (2..5)
            .map(|k| (g[k] - 2.0 * g[k - 1] + g[k - 2]).powi(2))
            .sum();
        assert_abs_diff_eq!(d1, s1, epsilon = 1e-12);
        assert_abs_diff_eq!(d2, s2, epsilon = 1e-12);
    }

    fn layout() -> BlockLayout {
        BlockLayout {
            q: 2,
            p0: 5,
            smooth: vec![4, 6],
        }
    }

    #[test]
    fn block_offsets() {
        let l = layout();
        assert_eq!(l.total(), 17);
        assert_eq!(l.gamma(), 2..7);
        assert_eq!(l.alpha(0), 7..11);
        assert_eq!(l.alpha(1), 11..17);
    }

    #[test]
    fn penalty_assembly_basics() {
        let pa = PenaltyAssembly::new(layout(), 2).unwrap();
        let s = pa.combined(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.amax(), 0.0);
        assert!(pa.combined(&[1.0, 1.0]).is_err());
        assert!(pa.combined(&[1.0, -1.0, 1.0]).is_err());
        let s = pa.combined(&[1.3, 0.4, 2.0]).unwrap();
        assert_eq!(s, s.transpose());
        assert_eq!(s.rows(0, 2).amax(), 0.0);
        assert!(s.clone().symmetric_eigenvalues().min() > -1e-10);
        // null space: beta arbitrary, penalized blocks linear in the index
        let mut theta = vec![4.0, -7.0];
        theta.extend((0..5).map(|i| 0.5 * i as f64 - 1.0));
        theta.extend((0..4).map(|i| -2.0 * i as f64));
        theta.extend([3.0; 6]);
        let th = DVector::from_vec(theta);
        assert!((th.transpose() * &s * &th)[0].abs() < 1e-10);
    }

    #[test]
    fn single_block_matches_explicit_product() {
        let l = BlockLayout {
            q: 0,
            p0: 4,
            smooth: vec![],
        };
        let pa = PenaltyAssembly::new(l, 2).unwrap();
        let s = pa.combined(&[1.0]).unwrap();
        // D'D for D = [[1,-2,1,0],[0,1,-2,1]] written out
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, -2.0, 1.0, 0.0, //
                -2.0, 5.0, -4.0, 1.0, //
                1.0, -4.0, 5.0, -2.0, //
                0.0, 1.0, -2.0, 1.0,
            ],
        );
        assert_eq!(s, expected);
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_support(x in -1.5f64..2.5, seed in 0u64..1000) {
            let interior: Vec<f64> = (1..=((seed % 6) as usize)).map(|i| i as f64 / 7.0).collect();
            let k = KnotVector::new(1 + (seed % 4) as usize, interior, 0.0, 1.0).unwrap();
            let (row, _) = k.row(x);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            let (first, vals, _) = k.nonzero(x);
            for (i, v) in row.iter().enumerate() {
                if i < first || i >= first + vals.len() {
                    prop_assert_eq!(*v, 0.0);
                }
            }
        }

        #[test]
        fn penalty_identity(theta in proptest::collection::vec(-5.0f64..5.0, 17),
                            lam in proptest::collection::vec(0.0f64..3.0, 3)) {
            let pa = PenaltyAssembly::new(layout(), 2).unwrap();
            let s = pa.combined(&lam).unwrap();
            let th = DVector::from_column_slice(&theta);
            let quad = (th.transpose() * &s * &th)[0];
            let direct = pa.penalty(&lam, &theta);
            prop_assert!((quad - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }

        #[test]
        fn constraint_exact_for_any_alpha(alpha in proptest::collection::vec(-10.0f64..10.0, 6)) {
            let k = KnotVector::new(3, vec![-0.3, 0.1, 0.5], -1.0, 1.0).unwrap();
            let xs: Vec<f64> = (0..80).map(|i| ((i * 37 % 80) as f64 / 40.0) - 1.0).collect();
            let (raw, _) = k.design(&xs);
            let t = ConstraintTransform::sum_to_zero(&raw).unwrap();
            let coef = t.expand(&alpha);
            let total: f64 = xs.iter().map(|&x| k.eval(&coef, x)).sum();
            prop_assert!(total.abs() < 1e-8);
            let dot: f64 = t.bstar.iter().zip(&coef).map(|(b, c)| b * c).sum();
            prop_assert!(dot.abs() < 1e-8);
        }
    }
}
