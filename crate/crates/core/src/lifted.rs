//! Component matrices of the lifted structures `P`, `G` and `Ω` on `T*M`.
//!
//! Adapted-frame layout: rows and columns run over `(δ_1..δ_n, ∂^1..∂^n)`.
//! For an endomorphism the column `A` holds the components of `P e_A`, so
//!
//! ```text
//! P = | 0    P₂ |    P₂[j][i] = P_(2)^{ij}   (P∂^i = P_(2)^{ij} δ_j)
//!     | P₁   0  |    P₁[j][i] = P^(1)_{ij}   (Pδ_i = P^(1)_{ij} ∂^j)
//! ```
//!
//! Bilinear forms store `G[A][B] = G(e_A, e_B)`. Every evaluator is generic
//! over [`Scalar`] so plain values, AD and the finite-difference oracle share
//! one code path.

use serde::{Deserialize, Serialize};

use crate::ad::Scalar;
use crate::coefficients::{CoefficientValues, StructureSpec};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::phase::{adapted_basis, make_point, CotangentPoint};
use crate::spaceform::SpaceForm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    NaturalDiagonal,
    /// `P(X^H) = −X^H`, `P(α^V) = α^V`.
    HorizontalReflection,
    /// `Q(X^H) = (X^♭)^V`, `Q(α^V) = (α^♯)^H`.
    MusicalSwap,
}

#[derive(Clone, Debug)]
pub struct LiftedStructure {
    spec: StructureSpec,
    manifold: SpaceForm,
    kind: StructureKind,
}

impl LiftedStructure {
    pub fn new(spec: StructureSpec, manifold: SpaceForm, kind: StructureKind) -> Result<Self> {
        if kind == StructureKind::NaturalDiagonal && !spec.provenance().almost_product {
            return Err(Error::Contract(
                "natural diagonal structure needs almost-product coefficients".into(),
            ));
        }
        Ok(Self {
            spec,
            manifold,
            kind,
        })
    }

    pub fn spec(&self) -> &StructureSpec {
        &self.spec
    }

    pub fn manifold(&self) -> &SpaceForm {
        &self.manifold
    }

    pub fn kind(&self) -> StructureKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    /// Same structure with a different coefficient bundle.
    pub fn with_spec(&self, spec: StructureSpec) -> Self {
        Self {
            spec,
            ..self.clone()
        }
    }

    pub fn point<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<CotangentPoint<S>> {
        make_point(&self.manifold, q, p)
    }

    fn coefficients_at<S: Scalar>(&self, pt: &CotangentPoint<S>) -> Result<CoefficientValues<S>> {
        let t = pt.t();
        if t.value() > self.spec.t_max() {
            return Err(Error::Range {
                t: t.value(),
                t_max: self.spec.t_max(),
            });
        }
        Ok(self.spec.values_generic(t))
    }

    /// `P^(1)_ij = a₁g_ij + b₁p_ip_j` and `P_(2)^ij = a₂g^ij + b₂g^{0i}g^{0j}`.
    fn p_blocks<S: Scalar>(pt: &CotangentPoint<S>, v: &CoefficientValues<S>) -> (Mat<S>, Mat<S>) {
        let p1 = pt
            .metric()
            .scale(v.a1)
            .add(&Mat::outer(pt.p(), pt.p()).scale(v.b1));
        let p2 = pt
            .inverse_metric()
            .scale(v.a2)
            .add(&Mat::outer(pt.g0(), pt.g0()).scale(v.b2));
        (p1, p2)
    }

    pub fn p_adapted<S: Scalar>(&self, pt: &CotangentPoint<S>) -> Result<Mat<S>> {
        let n = pt.dim();
        let v = self.coefficients_at(pt)?;
        let mut m = Mat::zeros(2 * n, 2 * n);
        match self.kind {
            StructureKind::HorizontalReflection => {
                for i in 0..n {
                    m[(i, i)] = -S::one();
                    m[(n + i, n + i)] = S::one();
                }
            }
            StructureKind::NaturalDiagonal | StructureKind::MusicalSwap => {
                let (p1, p2) = if self.kind == StructureKind::MusicalSwap {
                    (pt.metric().clone(), pt.inverse_metric().clone())
                } else {
                    Self::p_blocks(pt, &v)
                };
                for i in 0..n {
                    for j in 0..n {
                        m[(n + j, i)] = p1[(i, j)];
                        m[(j, n + i)] = p2[(i, j)];
                    }
                }
            }
        }
        Ok(m)
    }

    /// `B·P·B⁻¹` as a function of the raw coordinates `(q, p)`.
    pub fn p_coordinate<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Mat<S>> {
        let pt = self.point(q, p)?;
        let frame = adapted_basis(&pt);
        Ok(frame.endomorphism_to_coordinate(&self.p_adapted(&pt)?))
    }

    /// `G = diag(G^(1), G_(2))` with `G^(1)_ij = c₁g_ij + d₁p_ip_j` and
    /// `G_(2)^ij = c₂g^ij + d₂g^{0i}g^{0j}`.
    pub fn g_adapted<S: Scalar>(&self, pt: &CotangentPoint<S>) -> Result<Mat<S>> {
        let n = pt.dim();
        let v = self.coefficients_at(pt)?;
        let g1 = pt
            .metric()
            .scale(v.c1)
            .add(&Mat::outer(pt.p(), pt.p()).scale(v.d1));
        let g2 = pt
            .inverse_metric()
            .scale(v.c2)
            .add(&Mat::outer(pt.g0(), pt.g0()).scale(v.d2));
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.set_block(0, 0, &g1);
        m.set_block(n, n, &g2);
        Ok(m)
    }

    pub fn g_coordinate<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Mat<S>> {
        let pt = self.point(q, p)?;
        let frame = adapted_basis(&pt);
        Ok(frame.bilinear_to_coordinate(&self.g_adapted(&pt)?))
    }

    fn require_para_hermitian(&self) -> Result<()> {
        if self.spec.is_para_hermitian() {
            Ok(())
        } else {
            Err(Error::Contract(
                "the fundamental 2-form needs a para-Hermitian (epsilon = -1, compatible) spec"
                    .into(),
            ))
        }
    }

    /// `Ω(X, Y) = G(X, PY)`, i.e. the matrix `G·P`.
    pub fn omega_adapted<S: Scalar>(&self, pt: &CotangentPoint<S>) -> Result<Mat<S>> {
        self.require_para_hermitian()?;
        Ok(self.g_adapted(pt)?.matmul(&self.p_adapted(pt)?))
    }

    /// `Ω(δ_i, ∂^j) = λδ_i^j + μp_ig^{0j}`, indexed `[i][j]`.
    pub fn omega_mixed_block<S: Scalar>(&self, pt: &CotangentPoint<S>) -> Result<Mat<S>> {
        self.require_para_hermitian()?;
        let v = self.coefficients_at(pt)?;
        Ok(Mat::identity(pt.dim())
            .scale(v.lambda)
            .add(&Mat::outer(pt.p(), pt.g0()).scale(v.mu)))
    }

    /// Coordinate components of `Ω = W_i^j dq^i ∧ Dp_j` with
    /// `Dp_j = dp_j − Γ⁰_jh dq^h` and `W` the mixed block.
    pub fn omega_coordinate<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Mat<S>> {
        let pt = self.point(q, p)?;
        let n = pt.dim();
        let w = self.omega_mixed_block(&pt)?;
        let gamma0 = pt.gamma0();
        let mut out = Mat::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                out[(i, n + j)] = w[(i, j)];
                out[(n + j, i)] = -w[(i, j)];
            }
        }
        // −W_i^j Γ⁰_jh dq^i ∧ dq^h
        for i in 0..n {
            for h in (i + 1)..n {
                let mut v = S::zero();
                for j in 0..n {
                    v = v - w[(i, j)] * gamma0[(j, h)] + w[(h, j)] * gamma0[(j, i)];
                }
                out[(i, h)] = v;
                out[(h, i)] = -v;
            }
        }
        Ok(out)
    }

    /// `B⁻ᵀ·(G·P)·B⁻¹`: the fundamental 2-form straight from its definition.
    pub fn omega_coordinate_from_definition<S: Scalar>(&self, q: &[S], p: &[S]) -> Result<Mat<S>> {
        let pt = self.point(q, p)?;
        let frame = adapted_basis(&pt);
        Ok(frame.bilinear_to_coordinate(&self.omega_adapted(&pt)?))
    }
}
