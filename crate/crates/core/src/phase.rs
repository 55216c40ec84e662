//! Points of the cotangent bundle in induced coordinates `(q, p)`, the
//! horizontal/vertical splitting and the adapted frame `{δ_i, ∂^i}`.
//!
//! Axis order on `T*M` is always horizontal slots `0..n` (the `q`-directions)
//! followed by vertical slots `n..2n` (the `p`-directions).

use crate::ad::Scalar;
use crate::error::Result;
use crate::linalg::Mat;
use crate::spaceform::{Christoffel, SpaceForm};

#[derive(Clone, Debug, PartialEq)]
pub struct CotangentPoint<S = f64> {
    q: Vec<S>,
    p: Vec<S>,
    g: Mat<S>,
    ginv: Mat<S>,
    gamma: Christoffel<S>,
    t: S,
    g0: Vec<S>,
    gamma0: Mat<S>,
}

/// Builds a cotangent point and caches the metric data at its base point.
pub fn make_point<S: Scalar>(m: &SpaceForm, q: &[S], p: &[S]) -> Result<CotangentPoint<S>> {
    let n = m.dim();
    if p.len() != n {
        return Err(crate::Error::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let g = m.metric_at(q)?;
    let ginv = g.inverse()?;
    let gamma = m.christoffel_at(q)?;
    let g0 = ginv.matvec(p);
    let t = S::from_f64(0.5)
        * p.iter()
            .zip(&g0)
            .fold(S::zero(), |acc, (&a, &b)| acc + a * b);
    let gamma0 = gamma.contract_upper(p);
    Ok(CotangentPoint {
        q: q.to_vec(),
        p: p.to_vec(),
        g,
        ginv,
        gamma,
        t,
        g0,
        gamma0,
    })
}

impl<S: Scalar> CotangentPoint<S> {
    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[S] {
        &self.q
    }

    pub fn p(&self) -> &[S] {
        &self.p
    }

    /// Energy density `t = ½ g^{ik} p_i p_k`.
    pub fn t(&self) -> S {
        self.t
    }

    /// `g^{0i} = g^{ih} p_h`.
    pub fn g0(&self) -> &[S] {
        &self.g0
    }

    /// `Γ⁰_ih = p_k Γ^k_ih`.
    pub fn gamma0(&self) -> &Mat<S> {
        &self.gamma0
    }

    pub fn metric(&self) -> &Mat<S> {
        &self.g
    }

    pub fn inverse_metric(&self) -> &Mat<S> {
        &self.ginv
    }

    pub fn christoffel(&self) -> &Christoffel<S> {
        &self.gamma
    }

    /// Raw coordinates `(q, p)`.
    pub fn coords(&self) -> Vec<S> {
        self.q.iter().chain(&self.p).copied().collect()
    }
}

impl CotangentPoint<f64> {
    pub fn frame(&self) -> FrameBasis {
        adapted_basis(self)
    }

    pub fn lifts(&self) -> Lifts<'_> {
        Lifts { pt: self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// `{δ_1..δ_n, ∂^1..∂^n}`.
    Adapted,
    /// `{∂/∂q^1..∂/∂q^n, ∂/∂p_1..∂/∂p_n}`.
    Coordinate,
}

/// Tangent vector to `T*M` as raw components tagged with their frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub frame: Frame,
    pub comps: Vec<f64>,
}

impl TangentVector {
    pub fn adapted(comps: Vec<f64>) -> Self {
        Self {
            frame: Frame::Adapted,
            comps,
        }
    }

    pub fn coordinate(comps: Vec<f64>) -> Self {
        Self {
            frame: Frame::Coordinate,
            comps,
        }
    }
}

/// Change of basis between the adapted and coordinate frames. Columns of
/// `b` are the adapted frame vectors in coordinate components:
///
/// ```text
/// B = | I   0 |     B⁻¹ = |  I   0 |
///     | Γ⁰  I |           | −Γ⁰  I |
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBasis<S = f64> {
    pub b: Mat<S>,
    pub binv: Mat<S>,
}

pub fn adapted_basis<S: Scalar>(pt: &CotangentPoint<S>) -> FrameBasis<S> {
    let n = pt.dim();
    let mut b = Mat::identity(2 * n);
    let mut binv = Mat::identity(2 * n);
    for h in 0..n {
        for i in 0..n {
            // column δ_i has component Γ⁰_ih along ∂/∂p_h
            b[(n + h, i)] = pt.gamma0[(i, h)];
            binv[(n + h, i)] = -pt.gamma0[(i, h)];
        }
    }
    FrameBasis { b, binv }
}

impl<S: Scalar> FrameBasis<S> {
    /// Components of a (1,1)-tensor: `B·A·B⁻¹`.
    pub fn endomorphism_to_coordinate(&self, adapted: &Mat<S>) -> Mat<S> {
        self.b.matmul(adapted).matmul(&self.binv)
    }

    /// Components of a (0,2)-tensor: `B⁻ᵀ·A·B⁻¹`.
    pub fn bilinear_to_coordinate(&self, adapted: &Mat<S>) -> Mat<S> {
        self.binv.transpose().matmul(adapted).matmul(&self.binv)
    }
}

impl FrameBasis<f64> {
    pub fn to_coordinate(&self, v: &TangentVector) -> TangentVector {
        debug_assert_eq!(
            v.frame,
            Frame::Adapted,
            "vector is not in the adapted frame"
        );
        TangentVector::coordinate(self.b.matvec(&v.comps))
    }

    pub fn to_adapted(&self, v: &TangentVector) -> TangentVector {
        debug_assert_eq!(
            v.frame,
            Frame::Coordinate,
            "vector is not in the coordinate frame"
        );
        TangentVector::adapted(self.binv.matvec(&v.comps))
    }
}

/// Classical lifts and musical isomorphisms at a fixed cotangent point.
pub struct Lifts<'a> {
    pt: &'a CotangentPoint<f64>,
}

impl Lifts<'_> {
    /// `X^H`, adapted components `(X, 0)`.
    pub fn horizontal_lift(&self, x: &[f64]) -> TangentVector {
        let n = self.pt.dim();
        assert_eq!(x.len(), n);
        let mut comps = x.to_vec();
        comps.resize(2 * n, 0.0);
        TangentVector::adapted(comps)
    }

    /// `α^V`, adapted components `(0, α)`.
    pub fn vertical_lift(&self, alpha: &[f64]) -> TangentVector {
        let n = self.pt.dim();
        assert_eq!(alpha.len(), n);
        let mut comps = vec![0.0; n];
        comps.extend_from_slice(alpha);
        TangentVector::adapted(comps)
    }

    pub fn flat(&self, x: &[f64]) -> Vec<f64> {
        self.pt.g.matvec(x)
    }

    pub fn sharp(&self, alpha: &[f64]) -> Vec<f64> {
        self.pt.ginv.matvec(alpha)
    }

    /// Liouville field `p^V = p_i ∂^i`.
    pub fn liouville(&self) -> TangentVector {
        self.vertical_lift(&self.pt.p)
    }

    /// Geodesic spray `(p^♯)^H = g^{0i} δ_i`.
    pub fn spray(&self) -> TangentVector {
        self.horizontal_lift(&self.sharp(&self.pt.p))
    }
}
