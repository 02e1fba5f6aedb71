//! Linear maps between polyhedral spaces: operator norm, minimal gain on the
//! unit sphere, ε-isometry certification, and the two extension results
//! (functionals into `linf(n)`, ε-equivalent norms to a superspace).

use std::fmt;
use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};

use crate::error::{dim_mismatch, Error, Result};
use crate::exact::lp::{lexmin, lp_solve, Constraint, LpOutcome, Sense};
use crate::exact::{self, dd, Caps};
use crate::spaces::{PolyhedralSpace, Subspace};
use crate::{Matrix, Rational, Vector};

/// A linear operator given by its matrix (codomain.dim x domain.dim).
/// Operator norm and minimal gain are computed lazily and cached.
#[derive(Clone)]
pub struct LinearMap {
    domain: PolyhedralSpace,
    codomain: PolyhedralSpace,
    matrix: Matrix,
    op_norm: OnceLock<Rational>,
    min_gain: OnceLock<Option<Rational>>,
}

impl PartialEq for LinearMap {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
            && self.domain == other.domain
            && self.codomain == other.codomain
    }
}

impl Eq for LinearMap {}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearMap")
            .field("domain_dim", &self.domain.dim())
            .field("codomain_dim", &self.codomain.dim())
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl LinearMap {
    pub fn new(domain: PolyhedralSpace, codomain: PolyhedralSpace, matrix: Matrix) -> Result<Self> {
        if matrix.shape() != (codomain.dim(), domain.dim()) {
            return Err(Error::Dimension(format!(
                "map matrix is {:?}, spaces need {}x{}",
                matrix.shape(),
                codomain.dim(),
                domain.dim()
            )));
        }
        Ok(LinearMap {
            domain,
            codomain,
            matrix,
            op_norm: OnceLock::new(),
            min_gain: OnceLock::new(),
        })
    }

    pub fn identity(space: PolyhedralSpace) -> Self {
        let n = space.dim();
        Self::new(space.clone(), space, Matrix::identity(n)).expect("square")
    }

    pub fn zero(domain: PolyhedralSpace, codomain: PolyhedralSpace) -> Self {
        let m = Matrix::zeros(codomain.dim(), domain.dim());
        Self::new(domain, codomain, m).expect("shape by construction")
    }

    pub fn domain(&self) -> &PolyhedralSpace {
        &self.domain
    }

    pub fn codomain(&self) -> &PolyhedralSpace {
        &self.codomain
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, x: &[Rational]) -> Result<Vector> {
        self.matrix.mul_vec(x)
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &LinearMap) -> Result<LinearMap> {
        if inner.codomain != self.domain {
            return Err(Error::Input("composition: spaces do not match".into()));
        }
        LinearMap::new(
            inner.domain.clone(),
            self.codomain.clone(),
            self.matrix.mul(&inner.matrix)?,
        )
    }

    /// `self - other`, for maps between the same spaces.
    pub fn minus(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::Input(
                "difference of maps between different spaces".into(),
            ));
        }
        LinearMap::new(
            self.domain.clone(),
            self.codomain.clone(),
            self.matrix.sub(&other.matrix)?,
        )
    }

    /// The same matrix with a different (equal-dimensional) domain or
    /// codomain norm.
    pub fn reinterpret(
        &self,
        domain: PolyhedralSpace,
        codomain: PolyhedralSpace,
    ) -> Result<LinearMap> {
        LinearMap::new(domain, codomain, self.matrix.clone())
    }

    pub fn operator_norm(&self) -> Rational {
        self.op_norm
            .get_or_init(|| {
                self.domain
                    .vertices()
                    .iter()
                    .map(|v| {
                        self.codomain
                            .norm_of(&self.matrix.mul_vec(v).expect("shape checked"))
                    })
                    .max()
                    .unwrap_or_else(Rational::zero)
            })
            .clone()
    }

    /// Minimum of `||f(x)||` over the unit sphere; `None` when the domain is
    /// zero-dimensional and the sphere is empty.
    pub fn min_gain(&self) -> Result<Option<Rational>> {
        if let Some(g) = self.min_gain.get() {
            return Ok(g.clone());
        }
        let g = compute_min_gain(self)?;
        Ok(self.min_gain.get_or_init(|| g).clone())
    }

    pub fn distortion(&self) -> Result<DistortionReport> {
        let op_norm = self.operator_norm();
        let min_gain = self.min_gain()?;
        let eps_star = match &min_gain {
            None => EpsStar::Finite(Rational::zero()),
            Some(g) if g.is_zero() => EpsStar::Infinite,
            Some(g) => EpsStar::Finite(std::cmp::max(op_norm.clone(), g.recip()) - Rational::one()),
        };
        Ok(DistortionReport {
            op_norm,
            min_gain,
            eps_star,
        })
    }
}

/// Solve, for each facet `phi_k(x) = 1` of the domain ball, the LP
/// `min t` over `x` in the facet with `|psi(f x)| <= t` for every codomain
/// functional `psi`. By symmetry the facets `phi_k(x) = -1` are redundant.
fn compute_min_gain(f: &LinearMap) -> Result<Option<Rational>> {
    let d = f.domain.dim();
    if d == 0 {
        return Ok(None);
    }
    let dom = f.domain.functionals();
    let rows: Vec<Vector> = f
        .codomain
        .functionals()
        .iter()
        .map(|psi| f.matrix.transpose().mul_vec(psi))
        .collect::<Result<_>>()?;
    let lift = |a: &[Rational], t: Rational| {
        let mut v = a.to_vec();
        v.push(t);
        v
    };
    let mut base = Vec::with_capacity(2 * dom.len() + 2 * rows.len() + 1);
    for phi in dom {
        base.push(Constraint::new(
            lift(phi, Rational::zero()),
            Rational::one(),
        ));
        base.push(Constraint::new(
            lift(&exact::negated(phi), Rational::zero()),
            Rational::one(),
        ));
    }
    for r in &rows {
        base.push(Constraint::new(lift(r, -Rational::one()), Rational::zero()));
        base.push(Constraint::new(
            lift(&exact::negated(r), -Rational::one()),
            Rational::zero(),
        ));
    }
    let mut t_nonneg = vec![Rational::zero(); d + 1];
    t_nonneg[d] = -Rational::one();
    base.push(Constraint::new(t_nonneg, Rational::zero()));
    let mut objective = vec![Rational::zero(); d + 1];
    objective[d] = Rational::one();

    let mut best: Option<Rational> = None;
    for phi in dom {
        let mut cons = base.clone();
        cons.extend(Constraint::equality(
            lift(phi, Rational::zero()),
            Rational::one(),
        ));
        let value = match lp_solve(&objective, &cons, Sense::Minimize)? {
            LpOutcome::Optimal(s) => s.value,
            other => {
                return Err(Error::Verification(format!(
                    "facet LP did not solve: {other:?}"
                )));
            }
        };
        if best.as_ref().is_none_or(|b| value < *b) {
            best = Some(value);
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EpsStar {
    Finite(Rational),
    Infinite,
}

impl EpsStar {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            EpsStar::Finite(e) => Some(e),
            EpsStar::Infinite => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.finite().is_some_and(|e| e.is_zero())
    }
}

impl fmt::Display for EpsStar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsStar::Finite(e) => f.write_str(&exact::rational::to_string(e)),
            EpsStar::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistortionReport {
    pub op_norm: Rational,
    pub min_gain: Option<Rational>,
    pub eps_star: EpsStar,
}

impl DistortionReport {
    /// The two-sided bound `(1+eps)^{-1} <= gain <= 1+eps`, strict or not.
    pub fn within(&self, eps: &Rational, strict: bool) -> bool {
        let upper = Rational::one() + eps;
        let lower = upper.recip();
        let Some(g) = &self.min_gain else {
            return true;
        };
        if strict {
            self.op_norm < upper && *g > lower
        } else {
            self.op_norm <= upper && *g >= lower
        }
    }
}

fn check_eps(eps: &Rational) -> Result<()> {
    if eps.is_negative() {
        return Err(Error::Input("eps must be nonnegative".into()));
    }
    Ok(())
}

pub fn operator_norm(f: &LinearMap) -> Rational {
    f.operator_norm()
}

pub fn min_gain(f: &LinearMap) -> Result<Option<Rational>> {
    f.min_gain()
}

pub fn is_eps_isometric(
    f: &LinearMap,
    eps: &Rational,
    strict: bool,
) -> Result<(bool, DistortionReport)> {
    check_eps(eps)?;
    let report = f.distortion()?;
    Ok((report.within(eps, strict), report))
}

pub fn map_distance(f: &LinearMap, g: &LinearMap) -> Result<Rational> {
    Ok(f.minus(g)?.operator_norm())
}

/// The isometric embedding `x -> (phi_i(x))_i` into `linf(m)`, one
/// coordinate per canonical functional pair.
pub fn linf_embedding(space: &PolyhedralSpace) -> LinearMap {
    let fs = space.functionals();
    let m = fs.len();
    let matrix =
        Matrix::from_rows(space.dim(), fs.to_vec()).expect("functionals have the space dimension");
    LinearMap::new(space.clone(), PolyhedralSpace::linf_or_zero(m), matrix)
        .expect("shape by construction")
}

/// Extend `t: induced(e) -> linf(n)` to the ambient space of `e` without
/// increasing its norm. Each coordinate functional is extended to the
/// lexicographically smallest `psi` with `psi o basis = t_i` and dual norm at
/// most `||t||`.
pub fn extend_into_linf(t: &LinearMap, e: &Subspace) -> Result<LinearMap> {
    let induced = e.induced()?;
    if t.domain() != &induced {
        return Err(Error::Input(
            "map domain is not the induced subspace norm".into(),
        ));
    }
    let n = t.codomain().dim();
    if t.codomain() != &PolyhedralSpace::linf_or_zero(n) {
        return Err(Error::Input("extension target must be linf(n)".into()));
    }
    let f = e.ambient();
    let d = f.dim();
    let norm = t.operator_norm();
    let mut cons: Vec<Constraint<Rational>> = f
        .vertices()
        .iter()
        .map(|v| Constraint::new(v.clone(), norm.clone()))
        .collect();
    let basis_t = e.basis().transpose();
    let base_len = cons.len();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        cons.truncate(base_len);
        for (col, target) in basis_t.row_vecs().into_iter().zip(t.matrix().row(i)) {
            cons.extend(Constraint::equality(col, target.clone()));
        }
        let psi = lexmin(d, &cons)?.ok_or_else(|| {
            Error::Infeasible(format!("no norm-preserving extension of coordinate {i}"))
        })?;
        rows.push(psi);
    }
    let ext = LinearMap::new(f.clone(), t.codomain().clone(), Matrix::from_rows(d, rows)?)?;
    if ext.matrix().mul(e.basis())? != *t.matrix() {
        return Err(Error::Verification(
            "extension does not restrict to the given map".into(),
        ));
    }
    if ext.operator_norm() != norm {
        return Err(Error::Verification(
            "extension changed the operator norm".into(),
        ));
    }
    Ok(ext)
}

/// Extend a norm given on `e` (in its own coordinates) to the ambient space,
/// keeping the result ε-equivalent to the ambient norm.
///
/// The dual ball of the result is the symmetric hull of the functionals
/// `psi` on the ambient space with `||psi|| <= 1+eps` whose restriction lies
/// on the boundary of the dual ball of `new_norm`, together with
/// `(1+eps)^{-1}` times the ambient functionals. The second part keeps the
/// result a norm off `e` and never wins on `e`.
pub fn extend_norm(
    e: &Subspace,
    new_norm: &PolyhedralSpace,
    eps: &Rational,
) -> Result<PolyhedralSpace> {
    check_eps(eps)?;
    let k = e.dim();
    if new_norm.dim() != k {
        return Err(dim_mismatch("new norm dimension", k, new_norm.dim()));
    }
    let induced = e.induced()?;
    let id = LinearMap::new(induced, new_norm.clone(), Matrix::identity(k))?;
    let (ok, report) = is_eps_isometric(&id, eps, true)?;
    if !ok {
        return Err(Error::Precondition(format!(
            "new norm is not strictly {}-equivalent to the induced norm (eps* = {})",
            exact::rational::to_string(eps),
            report.eps_star
        )));
    }
    let f = e.ambient();
    let d = f.dim();
    let one_eps = Rational::one() + eps;
    let basis = e.basis();
    let restrict = |v: &Vector| basis.mul_vec(v).expect("basis rows match ambient");

    let mut cons: Vec<Constraint<Rational>> = Vec::new();
    for v in new_norm.vertices() {
        cons.push(Constraint::new(restrict(v), Rational::one()));
    }
    for x in f.vertices() {
        cons.push(Constraint::new(x.clone(), one_eps.clone()));
    }
    let caps = Caps::global();
    let mut points: Vec<Vector> = Vec::new();
    for w in new_norm.vertices() {
        if exact::sign_normalized(w).as_ref() != Some(w) {
            continue;
        }
        let mut slice = cons.clone();
        slice.extend(Constraint::equality(restrict(w), Rational::one()));
        points.extend(dd::polytope_vertices(d, &slice, &caps)?);
    }
    let shrink = one_eps.recip();
    points.extend(f.functionals().iter().map(|a| exact::scaled(a, &shrink)));
    let result = PolyhedralSpace::from_functionals(d, points)?;

    let back = Subspace::new(result.clone(), basis.clone())?.induced()?;
    if &back != new_norm {
        return Err(Error::Verification(
            "extended norm does not restrict to the given norm".into(),
        ));
    }
    let (ok, _) = is_eps_isometric(
        &LinearMap::new(f.clone(), result.clone(), Matrix::identity(d))?,
        eps,
        false,
    )?;
    if !ok {
        return Err(Error::Verification(
            "extended norm is not eps-equivalent to the ambient norm".into(),
        ));
    }
    Ok(result)
}
