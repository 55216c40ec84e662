//! Numeric checkers for the lifted structures.
//!
//! Each check evaluates a residual at every sample point, reduces by maximum
//! and reports the worst points. Points are evaluated in parallel; the result
//! does not depend on the number of workers because residuals are collected
//! in sample order before reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ad::{seed, Dual, Dual64, Scalar};
use crate::coefficients::Epsilon;
use crate::error::{Error, Result};
use crate::lifted::LiftedStructure;
use crate::linalg::Mat;
use crate::phase::{adapted_basis, CotangentPoint};
use crate::spaceform::SpaceForm;

/// Algebraic identities, no differentiation.
pub const TOL_ALGEBRAIC: f64 = 1e-10;
/// Identities involving one AD derivative of the structure.
pub const TOL_FIRST_DERIVATIVE: f64 = 1e-8;
/// Relative agreement of AD with central differences.
pub const TOL_AD_VS_FD: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;

/// Maximum that propagates NaN.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| nan_max(m, v.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub residual: f64,
}

impl Witness {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        Self {
            q,
            p,
            residual: 0.0,
        }
    }
}

/// Sub-result of a composite check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub points_sampled: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub seed: u64,
    /// Up to three worst points, by descending residual.
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    /// Reduces per-point residuals; `points[k]` locates `residuals[k]`.
    /// Non-finite residuals fail the check and are reported as `f64::MAX`.
    pub fn from_residuals(
        name: &str,
        seed: u64,
        tolerance: f64,
        residuals: Vec<f64>,
        points: Vec<Witness>,
    ) -> Self {
        assert_eq!(residuals.len(), points.len());
        let mut notes = Vec::new();
        let bad: Vec<usize> = (0..residuals.len())
            .filter(|&k| !residuals[k].is_finite())
            .collect();
        if let Some(&first) = bad.first() {
            notes.push(format!(
                "{} non-finite residual(s), first at sample index {first}",
                bad.len()
            ));
        }
        let clean: Vec<f64> = residuals
            .iter()
            .map(|&r| if r.is_finite() { r } else { f64::MAX })
            .collect();
        let max_residual = clean.iter().copied().fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..clean.len()).collect();
        order.sort_by(|&a, &b| clean[b].total_cmp(&clean[a]).then(a.cmp(&b)));
        let witnesses = order
            .into_iter()
            .take(3)
            .map(|k| Witness {
                residual: clean[k],
                ..points[k].clone()
            })
            .collect();
        let pass = bad.is_empty() && max_residual <= tolerance;
        Self {
            check_name: name.to_string(),
            points_sampled: clean.len(),
            max_residual,
            tolerance,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            seed,
            witnesses,
            components: Vec::new(),
            notes,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn component(&self) -> Component {
        Component {
            name: self.check_name.clone(),
            max_residual: self.max_residual,
            tolerance: self.tolerance,
            verdict: self.verdict,
        }
    }
}

/// Sample of cotangent points with the seed that produced it.
#[derive(Clone, Debug)]
pub struct Sample {
    pub seed: u64,
    pub points: Vec<CotangentPoint>,
}

impl Sample {
    pub fn base_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|pt| pt.q().to_vec()).collect()
    }

    fn witnesses(&self) -> Vec<Witness> {
        self.points
            .iter()
            .map(|pt| Witness::new(pt.q().to_vec(), pt.p().to_vec()))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub count: usize,
    pub seed: u64,
    /// `|p| ≤ p_max`.
    pub p_max: f64,
    /// Points with `t > t_max` are rejected.
    pub t_max: f64,
    /// `|q| ≤ q_fraction · chart_radius`.
    pub q_fraction: f64,
}

impl SamplerConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            p_max: 2.0,
            t_max: crate::coefficients::DEFAULT_T_MAX,
            q_fraction: 0.8,
        }
    }

    pub fn p_max(mut self, p_max: f64) -> Self {
        self.p_max = p_max;
        self
    }

    pub fn t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }
}

fn uniform_ball(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r / norm).collect()
}

/// Draws `count` points; the first always has `p = 0`.
pub fn sample_points(m: &SpaceForm, cfg: &SamplerConfig) -> Result<Sample> {
    if cfg.count == 0 {
        return Err(Error::Sampling("sample count must be positive".into()));
    }
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let q_radius = cfg.q_fraction * m.chart_radius();
    let mut points = Vec::with_capacity(cfg.count);
    let q0 = uniform_ball(&mut rng, n, q_radius);
    points.push(crate::phase::make_point(m, &q0, &vec![0.0; n])?);
    let max_attempts = 1000 * cfg.count;
    let mut attempts = 0;
    while points.len() < cfg.count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Sampling(format!(
                "only {} of {} points with t <= {} after {max_attempts} draws",
                points.len(),
                cfg.count,
                cfg.t_max
            )));
        }
        let q = uniform_ball(&mut rng, n, q_radius);
        let p = uniform_ball(&mut rng, n, cfg.p_max);
        let pt = crate::phase::make_point(m, &q, &p)?;
        if pt.t() <= cfg.t_max {
            points.push(pt);
        }
    }
    Ok(Sample {
        seed: cfg.seed,
        points,
    })
}

fn run_pointwise<F>(name: &str, sample: &Sample, tol: f64, f: F) -> Result<CheckReport>
where
    F: Fn(&CotangentPoint) -> Result<f64> + Sync + Send,
{
    let residuals = sample
        .points
        .par_iter()
        .map(f)
        .collect::<Result<Vec<f64>>>()?;
    Ok(CheckReport::from_residuals(
        name,
        sample.seed,
        tol,
        residuals,
        sample.witnesses(),
    ))
}

/// `max ‖P² − I‖∞`.
pub fn check_almost_product(
    ls: &LiftedStructure,
    sample: &Sample,
    tol: f64,
) -> Result<CheckReport> {
    run_pointwise("almost_product", sample, tol, |pt| {
        let m = ls.p_adapted(pt)?;
        Ok(m.matmul(&m).sub(&Mat::identity(m.rows())).max_abs())
    })
}

/// Rank-(1,2) tensor over the `2n` coordinates, `data[(c·d + a)·d + b] = N^c_ab`.
#[derive(Clone, Debug, PartialEq)]
pub struct Nijenhuis {
    dim: usize,
    data: Vec<f64>,
}

impl Nijenhuis {
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.data[(c * self.dim + a) * self.dim + b]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.data.iter().copied())
    }

    /// `N(X, Y)` for coordinate-frame vectors, summed over `a < b` so that
    /// `N(X, X) = 0` and `N(X, Y) = −N(Y, X)` hold bit for bit.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|c| {
                let mut s = 0.0;
                for a in 0..d {
                    for b in (a + 1)..d {
                        s += self.get(c, a, b) * (x[a] * y[b] - x[b] * y[a]);
                    }
                }
                s
            })
            .collect()
    }
}

/// Partial derivatives `out[d] = ∂_d F` of a matrix field over the raw
/// coordinates `z = (q, p)`, by forward-mode AD.
pub fn matrix_field_derivatives<F>(f: F, z: &[f64]) -> Result<Vec<Mat<f64>>>
where
    F: Fn(&[Dual64]) -> Result<Mat<Dual64>>,
{
    (0..z.len())
        .map(|d| Ok(f(&seed(z, d))?.map(|v: Dual<f64>| v.eps)))
        .collect()
}

/// `N^C_AB = P^D_A ∂_D P^C_B − P^D_B ∂_D P^C_A − P^C_D(∂_A P^D_B − ∂_B P^D_A)`.
pub fn nijenhuis_at(ls: &LiftedStructure, pt: &CotangentPoint) -> Result<Nijenhuis> {
    let n = pt.dim();
    let d = 2 * n;
    let z = pt.coords();
    let p = ls.p_coordinate(pt.q(), pt.p())?;
    let dp = matrix_field_derivatives(|zz| ls.p_coordinate(&zz[..n], &zz[n..]), &z)?;
    let mut data = vec![0.0; d * d * d];
    for c in 0..d {
        for a in 0..d {
            for b in (a + 1)..d {
                let mut v = 0.0;
                for e in 0..d {
                    v += p[(e, a)] * dp[e][(c, b)]
                        - p[(e, b)] * dp[e][(c, a)]
                        - p[(c, e)] * (dp[a][(e, b)] - dp[b][(e, a)]);
                }
                data[(c * d + a) * d + b] = v;
                data[(c * d + b) * d + a] = -v;
            }
        }
    }
    Ok(Nijenhuis { dim: d, data })
}

/// `max ‖N_P‖∞`.
pub fn check_integrability(ls: &LiftedStructure, sample: &Sample, tol: f64) -> Result<CheckReport> {
    let mut report = run_pointwise("integrability", sample, tol, |pt| {
        Ok(nijenhuis_at(ls, pt)?.max_abs())
    })?;
    if ls.dim() == 2 {
        report
            .notes
            .push("n = 2: the integrability characterization assumes n > 2".into());
    }
    Ok(report)
}

/// `max ‖PᵀGP − εG‖∞` in the adapted frame.
pub fn check_compatibility(ls: &LiftedStructure, sample: &Sample, tol: f64) -> Result<CheckReport> {
    let eps = ls.spec().epsilon().as_f64();
    run_pointwise("compatibility", sample, tol, |pt| {
        let p = ls.p_adapted(pt)?;
        let g = ls.g_adapted(pt)?;
        Ok(p.transpose()
            .matmul(&g)
            .matmul(&p)
            .sub(&g.scale(eps))
            .max_abs())
    })
}

/// Fully covariant 3-form over the `2n` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Form3 {
    dim: usize,
    data: Vec<f64>,
}

impl Form3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    #[inline]
    fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        self.data[(a * self.dim + b) * self.dim + c] = v;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.data.iter().copied())
    }

    pub fn max_abs_diff(&self, other: &Form3) -> f64 {
        assert_eq!(self.dim, other.dim);
        max_abs(self.data.iter().zip(&other.data).map(|(a, b)| a - b))
    }

    /// Largest deviation from total antisymmetry.
    pub fn antisymmetry_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let v = self.get(a, b, c);
                    for w in [
                        v + self.get(b, a, c),
                        v + self.get(a, c, b),
                        v + self.get(c, b, a),
                    ] {
                        worst = nan_max(worst, w.abs());
                    }
                }
            }
        }
        worst
    }
}

/// `(dΩ)_ABC = ∂_A Ω_BC + ∂_B Ω_CA + ∂_C Ω_AB`, derivatives by AD.
pub fn exterior_derivative_2form<F>(omega: F, z: &[f64]) -> Result<Form3>
where
    F: Fn(&[Dual64]) -> Result<Mat<Dual64>>,
{
    let d = z.len();
    let dom = matrix_field_derivatives(omega, z)?;
    let mut out = Form3::zeros(d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                out.set(a, b, c, dom[a][(b, c)] + dom[b][(c, a)] + dom[c][(a, b)]);
            }
        }
    }
    Ok(out)
}

/// Numeric `dΩ` of the fundamental 2-form taken from its definition.
pub fn numeric_domega(ls: &LiftedStructure, pt: &CotangentPoint) -> Result<Form3> {
    let n = pt.dim();
    exterior_derivative_2form(
        |zz| ls.omega_coordinate_from_definition(&zz[..n], &zz[n..]),
        &pt.coords(),
    )
}

/// Closed form
/// `dΩ = ½(μ − λ′)g^{0k}(δ^j_i δ^h_k − δ^h_i δ^j_k)·Dp_h ∧ Dp_j ∧ dq^i`
/// (the `k`-contraction written out), evaluated on coordinate vectors via
/// `Dp_h = dp_h − Γ⁰_hk dq^k`.
pub fn analytic_domega(ls: &LiftedStructure, pt: &CotangentPoint) -> Result<Form3> {
    if !ls.spec().is_para_hermitian() {
        return Err(Error::Contract(
            "closed-form dΩ needs a para-Hermitian spec".into(),
        ));
    }
    let n = pt.dim();
    let d = 2 * n;
    let t = pt.t();
    if t > ls.spec().t_max() {
        return Err(Error::Range {
            t,
            t_max: ls.spec().t_max(),
        });
    }
    let spec = ls.spec();
    let defect = spec
        .coefficient(crate::coefficients::Coefficient::Mu)
        .eval(t)
        - spec
            .coefficient(crate::coefficients::Coefficient::Lambda)
            .deriv(t);
    let g0 = pt.g0();
    let gamma0 = pt.gamma0();
    // coordinate components of the 1-forms Dp_h and dq^i
    let dp_form: Vec<Vec<f64>> = (0..n)
        .map(|h| {
            let mut row = vec![0.0; d];
            for k in 0..n {
                row[k] = -gamma0[(h, k)];
            }
            row[n + h] = 1.0;
            row
        })
        .collect();
    let dq_form: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            row
        })
        .collect();
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = Form3::zeros(d);
    for h in 0..n {
        for j in 0..n {
            for (i, w) in dq_form.iter().enumerate() {
                let coeff = 0.5 * defect * (g0[h] * delta(j, i) - g0[j] * delta(h, i));
                if coeff == 0.0 {
                    continue;
                }
                let (x, y) = (&dp_form[h], &dp_form[j]);
                for a in 0..d {
                    for b in 0..d {
                        for c in 0..d {
                            let det = x[a] * (y[b] * w[c] - y[c] * w[b])
                                - x[b] * (y[a] * w[c] - y[c] * w[a])
                                + x[c] * (y[a] * w[b] - y[b] * w[a]);
                            let idx = (a * d + b) * d + c;
                            out.data[idx] += coeff * det;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `max ‖dΩ‖∞` with `dΩ` computed numerically.
pub fn check_closure(ls: &LiftedStructure, sample: &Sample, tol: f64) -> Result<CheckReport> {
    require_para_hermitian(ls)?;
    run_pointwise("closure", sample, tol, |pt| {
        Ok(numeric_domega(ls, pt)?.max_abs())
    })
}

/// `max ‖dΩ_numeric − dΩ_closed_form‖∞`.
pub fn check_domega_agreement(
    ls: &LiftedStructure,
    sample: &Sample,
    tol: f64,
) -> Result<CheckReport> {
    require_para_hermitian(ls)?;
    run_pointwise("domega_agreement", sample, tol, |pt| {
        Ok(numeric_domega(ls, pt)?.max_abs_diff(&analytic_domega(ls, pt)?))
    })
}

fn require_para_hermitian(ls: &LiftedStructure) -> Result<()> {
    if ls.spec().epsilon() == Epsilon::Minus && ls.spec().is_para_hermitian() {
        Ok(())
    } else {
        Err(Error::Contract(
            "2-form checks need a para-Hermitian (epsilon = -1, compatible) spec".into(),
        ))
    }
}

/// Compatibility, integrability and closure, each at `tol`.
pub fn check_para_kahler(ls: &LiftedStructure, sample: &Sample, tol: f64) -> Result<CheckReport> {
    require_para_hermitian(ls)?;
    let parts = [
        check_compatibility(ls, sample, tol)?,
        check_integrability(ls, sample, tol)?,
        check_closure(ls, sample, tol)?,
    ];
    let max_residual = parts.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let pass = parts.iter().all(CheckReport::passed);
    let worst = parts
        .iter()
        .max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
        .expect("three parts");
    Ok(CheckReport {
        check_name: "para_kahler".into(),
        points_sampled: sample.points.len(),
        max_residual,
        tolerance: tol,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        seed: sample.seed,
        witnesses: worst.witnesses.clone(),
        components: parts.iter().map(CheckReport::component).collect(),
        notes: parts.iter().flat_map(|r| r.notes.clone()).collect(),
    })
}

/// Central differences `(f(x + h e_a) − f(x − h e_a))/(2h)`, one output
/// vector per axis `a`.
pub fn fd_oracle<F>(f: F, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    (0..x.len())
        .map(|a| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[a] += h;
            minus[a] -= h;
            let (fp, fm) = (f(&plus)?, f(&minus)?);
            Ok(fp
                .iter()
                .zip(&fm)
                .map(|(u, v)| (u - v) / (2.0 * h))
                .collect())
        })
        .collect()
}

/// AD counterpart of [`fd_oracle`].
pub fn ad_jacobian<F>(f: F, x: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[Dual64]) -> Result<Vec<Dual64>>,
{
    (0..x.len())
        .map(|a| Ok(f(&seed(x, a))?.iter().map(|v| v.eps).collect()))
        .collect()
}

/// `max |ad − fd| / max(|fd|, 1)`.
pub fn relative_deviation(ad: &[Vec<f64>], fd: &[Vec<f64>]) -> f64 {
    ad.iter()
        .flatten()
        .zip(fd.iter().flatten())
        .fold(0.0, |m, (a, f)| {
            nan_max(m, (a - f).abs() / f.abs().max(1.0))
        })
}

/// Flattens a matrix-valued evaluator into the vector form the oracles use.
pub fn flatten<S: Scalar>(m: Mat<S>) -> Vec<S> {
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `B` and `B⁻¹` at a point, exposed for frame-covariance checks.
pub fn frame_at(pt: &CotangentPoint) -> crate::phase::FrameBasis {
    adapted_basis(pt)
}
