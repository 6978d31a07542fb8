use nalgebra::DMatrix;

use super::data::Dataset;
use super::spec::ModelSpec;
use crate::basis::{BlockLayout, ConstraintTransform, KnotVector, PenaltyAssembly};
use crate::error::{Error, Result};

/// Design matrix `X = (Z, M, B_1, ..., B_J)` with the bases behind it.
#[derive(Debug, Clone)]
pub struct AssembledDesign {
    pub x: DMatrix<f64>,
    pub layout: BlockLayout,
    pub eta_knots: KnotVector,
    pub smooth_knots: Vec<KnotVector>,
    pub transforms: Vec<ConstraintTransform>,
    pub penalty: PenaltyAssembly,
}

impl AssembledDesign {
    pub fn build(data: &Dataset, spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = data.n();
        for k in 0..data.q() {
            let col = data.z.column(k);
            let first = col[0];
            if col.iter().all(|&v| v == first) {
                return Err(Error::ConstantZColumn(k + 1));
            }
        }

        let cfg = spec.spline_for(0);
        let eta_knots = KnotVector::from_quantiles(&data.y, cfg.interior_for(n), cfg.degree)?;
        let mut smooth_knots = Vec::with_capacity(data.n_smooth());
        for j in 0..data.n_smooth() {
            let cfg = spec.spline_for(j + 1);
            smooth_knots.push(KnotVector::from_quantiles(
                &data.w_column(j),
                cfg.interior_for(n),
                cfg.degree,
            )?);
        }
        Self::with_knots(data, eta_knots, smooth_knots, spec.penalty_order)
    }

    /// Builds the design for fixed knots; the sum-to-zero transforms are
    /// computed from this sample.
    pub fn with_knots(
        data: &Dataset,
        eta_knots: KnotVector,
        smooth_knots: Vec<KnotVector>,
        penalty_order: usize,
    ) -> Result<Self> {
        let n = data.n();
        let q = data.q();
        if smooth_knots.len() != data.n_smooth() {
            return Err(Error::Dimension(
                "one knot vector per smooth covariate".into(),
            ));
        }
        let (m, _) = eta_knots.design(&data.y);
        let mut reduced = Vec::with_capacity(smooth_knots.len());
        let mut transforms = Vec::with_capacity(smooth_knots.len());
        for (j, knots) in smooth_knots.iter().enumerate() {
            let (raw, _) = knots.design(&data.w_column(j));
            let t =
                ConstraintTransform::sum_to_zero(&raw).map_err(|_| Error::TooFewObservations {
                    n,
                    params: knots.dim(),
                })?;
            reduced.push(raw * &t.q);
            transforms.push(t);
        }
        let layout = BlockLayout {
            q,
            p0: eta_knots.dim(),
            smooth: transforms.iter().map(|t| t.reduced_dim()).collect(),
        };
        let total = layout.total();
        if n < total {
            return Err(Error::TooFewObservations { n, params: total });
        }
        let mut x = DMatrix::zeros(n, total);
        x.view_mut((0, 0), (n, q)).copy_from(&data.z);
        x.view_mut((0, q), (n, layout.p0)).copy_from(&m);
        for (j, b) in reduced.iter().enumerate() {
            let r = layout.alpha(j);
            x.view_mut((0, r.start), (n, r.len())).copy_from(b);
        }
        let penalty = PenaltyAssembly::new(layout.clone(), penalty_order)?;
        Ok(Self {
            x,
            layout,
            eta_knots,
            smooth_knots,
            transforms,
            penalty,
        })
    }

    pub fn n_params(&self) -> usize {
        self.layout.total()
    }

    /// Starting point: `beta = 0`, `alpha = 0`, `gamma` an increasing ramp on [-1, 1].
    pub fn initial_theta(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.n_params()];
        let p0 = self.layout.p0;
        for (k, g) in theta[self.layout.gamma()].iter_mut().enumerate() {
            *g = if p0 == 1 {
                0.0
            } else {
                -1.0 + 2.0 * k as f64 / (p0 - 1) as f64
            };
        }
        theta
    }
}
