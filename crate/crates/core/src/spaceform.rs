//! Chart models of constant-curvature Riemannian manifolds.
//!
//! All models are conformally flat, `g_ij = φ(x)² δ_ij`, which lets one code
//! path cover the sphere (stereographic chart), the hyperbolic ball and flat
//! space. Derivatives of the metric come from forward-mode AD, never from
//! finite differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ad::{seed, Dual, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::verify::{nan_max, CheckReport, Witness};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Flat,
    /// `g = δ / (1 + (c/4)|x|²)²`.
    ConformalBall,
    /// Conformal ball metric times the extra factor `1 + strength·x¹`; not a
    /// space form unless `strength == 0`.
    PerturbedConformal {
        strength: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceForm {
    n: usize,
    c: f64,
    model: Model,
    chart_radius: f64,
}

impl SpaceForm {
    pub fn new(n: usize, c: f64, model: Model, chart_radius: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidModel(format!("dimension {n} < 2")));
        }
        if !c.is_finite() {
            return Err(Error::InvalidModel("curvature must be finite".into()));
        }
        if !(chart_radius.is_finite() && chart_radius > 0.0) {
            return Err(Error::InvalidModel(format!(
                "chart radius {chart_radius} must be positive"
            )));
        }
        match model {
            Model::Flat if c != 0.0 => {
                return Err(Error::InvalidModel(format!(
                    "flat model requires c = 0, got {c}"
                )))
            }
            Model::PerturbedConformal { strength } if !strength.is_finite() => {
                return Err(Error::InvalidModel(
                    "non-finite perturbation strength".into(),
                ))
            }
            _ => {}
        }
        if c < 0.0 && !matches!(model, Model::Flat) && chart_radius * chart_radius >= -4.0 / c {
            return Err(Error::InvalidModel(format!(
                "chart radius {chart_radius} reaches the boundary |x|² = {} of the c = {c} ball",
                -4.0 / c
            )));
        }
        Ok(Self {
            n,
            c,
            model,
            chart_radius,
        })
    }

    pub fn flat(n: usize) -> Result<Self> {
        Self::new(n, 0.0, Model::Flat, 1.0)
    }

    pub fn conformal_ball(n: usize, c: f64) -> Result<Self> {
        Self::new(n, c, Model::ConformalBall, 1.0)
    }

    pub fn perturbed_conformal(n: usize, c: f64, strength: f64) -> Result<Self> {
        Self::new(n, c, Model::PerturbedConformal { strength }, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn chart_radius(&self) -> f64 {
        self.chart_radius
    }

    fn domain_error(&self, x: &[f64], reason: impl Into<String>) -> Error {
        Error::ChartDomain {
            point: x.to_vec(),
            reason: reason.into(),
        }
    }

    /// Square of the conformal factor: `g_ij = conformal(x) δ_ij`.
    fn conformal<S: Scalar>(&self, x: &[S]) -> Result<S> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let primal: Vec<f64> = x.iter().map(Scalar::value).collect();
        if primal.iter().any(|v| !v.is_finite()) {
            return Err(self.domain_error(&primal, "non-finite coordinate"));
        }
        let ball = |x: &[S]| -> Result<S> {
            let r2 = x.iter().fold(S::zero(), |acc, &v| acc + v * v);
            let den = S::one() + S::from_f64(self.c / 4.0) * r2;
            if den.value() <= 0.0 {
                return Err(self.domain_error(&primal, "conformal denominator is not positive"));
            }
            Ok(den.powi(-2))
        };
        match self.model {
            Model::Flat => Ok(S::one()),
            Model::ConformalBall => ball(x),
            Model::PerturbedConformal { strength } => {
                let extra = S::one() + S::from_f64(strength) * x[0];
                if extra.value() <= 0.0 {
                    return Err(self.domain_error(&primal, "perturbation factor is not positive"));
                }
                Ok(ball(x)? * extra)
            }
        }
    }

    pub fn metric_at<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        let f = self.conformal(x)?;
        Ok(Mat::identity(self.n).scale(f))
    }

    pub fn inverse_metric_at<S: Scalar>(&self, x: &[S]) -> Result<Mat<S>> {
        self.metric_at(x)?.inverse()
    }

    /// First partial derivatives of the metric, `out[l] = ∂_l g`.
    pub fn metric_derivatives_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<Mat<S>>> {
        (0..self.n)
            .map(|l| Ok(self.metric_at(&seed(x, l))?.map(|d: Dual<S>| d.eps)))
            .collect()
    }

    pub fn christoffel_at<S: Scalar>(&self, x: &[S]) -> Result<Christoffel<S>> {
        let n = self.n;
        let ginv = self.inverse_metric_at(x)?;
        let dg = self.metric_derivatives_at(x)?;
        let half = S::from_f64(0.5);
        let mut out = Christoffel::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = S::zero();
                    for l in 0..n {
                        let first_kind = dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)];
                        acc = acc + ginv[(k, l)] * first_kind;
                    }
                    let v = half * acc;
                    out.set(k, i, j, v);
                    out.set(k, j, i, v);
                }
            }
        }
        Ok(out)
    }

    /// `R^h_kij = ∂_i Γ^h_jk − ∂_j Γ^h_ik + Γ^h_im Γ^m_jk − Γ^h_jm Γ^m_ik`,
    /// the components of `R(∂_i, ∂_j)∂_k`. With this convention the unit sphere
    /// has `R^h_kij = δ^h_i g_kj − δ^h_j g_ki`.
    pub fn curvature_at<S: Scalar>(&self, x: &[S]) -> Result<Curvature<S>> {
        let n = self.n;
        let gamma = self.christoffel_at(x)?;
        let dgamma: Vec<Christoffel<S>> = (0..n)
            .map(|i| Ok(self.christoffel_at(&seed(x, i))?.map(|d: Dual<S>| d.eps)))
            .collect::<Result<_>>()?;
        let mut out = Curvature::zeros(n);
        for h in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = dgamma[i].get(h, j, k) - dgamma[j].get(h, i, k);
                        for m in 0..n {
                            v = v
                                + (gamma.get(h, i, m) * gamma.get(m, j, k)
                                    - gamma.get(h, j, m) * gamma.get(m, i, k));
                        }
                        out.set(h, k, i, j, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// `max |R^h_kij − c(δ^h_i g_kj − δ^h_j g_ki)|` at one chart point.
    pub fn space_form_residual(&self, x: &[f64]) -> Result<f64> {
        let n = self.n;
        let r = self.curvature_at(x)?;
        let g = self.metric_at(x)?;
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut worst: f64 = 0.0;
        for h in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let model = self.c * (delta(h, i) * g[(k, j)] - delta(h, j) * g[(k, i)]);
                        let d = (r.get(h, k, i, j) - model).abs();
                        worst = nan_max(worst, d);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Checks that the curvature tensor has the constant-curvature shape at every
/// sample point.
pub fn check_space_form(
    m: &SpaceForm,
    sample: &[Vec<f64>],
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    if sample.is_empty() {
        return Err(Error::Sampling("empty sample".into()));
    }
    let residuals: Vec<f64> = sample
        .par_iter()
        .map(|x| m.space_form_residual(x))
        .collect::<Result<_>>()?;
    let witnesses = sample
        .iter()
        .map(|x| Witness::new(x.clone(), Vec::new()))
        .collect();
    Ok(CheckReport::from_residuals(
        "space_form",
        seed,
        tol,
        residuals,
        witnesses,
    ))
}

/// `Γ^k_ij`, stored as `data[(k·n + i)·n + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Christoffel<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> S {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: S) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn map<T, F: Fn(S) -> T>(&self, f: F) -> Christoffel<T> {
        Christoffel {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    /// `Γ⁰_ih = p_k Γ^k_ih`.
    pub fn contract_upper(&self, p: &[S]) -> Mat<S> {
        let n = self.n;
        Mat::from_fn(n, n, |i, h| {
            (0..n).fold(S::zero(), |acc, k| acc + p[k] * self.get(k, i, h))
        })
    }
}

/// `R^h_kij`, stored as `data[((h·n + k)·n + i)·n + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Curvature<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n * n * n],
        }
    }

    #[inline]
    pub fn get(&self, h: usize, k: usize, i: usize, j: usize) -> S {
        self.data[((h * self.n + k) * self.n + i) * self.n + j]
    }

    #[inline]
    fn set(&mut self, h: usize, k: usize, i: usize, j: usize, v: S) {
        self.data[((h * self.n + k) * self.n + i) * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }
}
