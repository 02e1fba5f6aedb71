//! Polyhedral normed spaces `(R^n, max_i |phi_i(x)|)`, identified with their
//! canonical unit balls.

use num_traits::{One, Signed, Zero};

use crate::error::{dim_mismatch, Error, Result};
use crate::exact::polytope::SymmetricPolytope;
use crate::exact::{self, Caps};
use crate::maps::LinearMap;
use crate::{Matrix, Rational, Vector};

/// A finite-dimensional rational polyhedral space.
///
/// Equality compares canonical ball data only; the label is cosmetic.
#[derive(Clone, Debug)]
pub struct PolyhedralSpace {
    ball: SymmetricPolytope<Rational>,
    label: Option<String>,
}

impl PartialEq for PolyhedralSpace {
    fn eq(&self, other: &Self) -> bool {
        self.ball == other.ball
    }
}

impl Eq for PolyhedralSpace {}

impl PolyhedralSpace {
    /// The space whose norm is `max |phi(x)|` over the given functionals.
    pub fn from_functionals(dim: usize, functionals: Vec<Vector>) -> Result<Self> {
        let ball = SymmetricPolytope::from_hrep(dim, functionals)?.dd_convert(&Caps::global())?;
        Ok(Self::wrap(ball))
    }

    /// The space whose unit ball is the symmetric hull of `points`.
    pub fn from_vertices(dim: usize, points: Vec<Vector>) -> Result<Self> {
        let ball = SymmetricPolytope::from_vrep(dim, points)?.dd_convert(&Caps::global())?;
        Ok(Self::wrap(ball))
    }

    /// Adopt a ball; converted and canonicalized unless it already is.
    pub fn from_ball(ball: SymmetricPolytope<Rational>) -> Result<Self> {
        if ball.is_canonical() && ball.hrep().is_some() && ball.vrep().is_some() {
            return Ok(Self::wrap(ball));
        }
        Ok(Self::wrap(ball.dd_convert(&Caps::global())?))
    }

    fn wrap(ball: SymmetricPolytope<Rational>) -> Self {
        PolyhedralSpace { ball, label: None }
    }

    /// The zero-dimensional space.
    pub fn zero() -> Self {
        Self::wrap(
            SymmetricPolytope::from_parts(0, vec![], vec![])
                .and_then(|b| b.canonicalize())
                .expect("empty ball"),
        )
    }

    pub fn l1(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("l1(n) needs n >= 1".into()));
        }
        Ok(Self::from_vertices(n, unit_vectors(n))?.with_label(format!("l1({n})")))
    }

    pub fn linf(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("linf(n) needs n >= 1".into()));
        }
        Ok(Self::from_functionals(n, unit_vectors(n))?.with_label(format!("linf({n})")))
    }

    pub(crate) fn linf_or_zero(n: usize) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            Self::linf(n).expect("linf(n) is always constructible")
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.ball.dim()
    }

    pub fn ball(&self) -> &SymmetricPolytope<Rational> {
        &self.ball
    }

    /// Canonical functionals, one per antipodal pair.
    pub fn functionals(&self) -> &[Vector] {
        self.ball.hrep().unwrap_or(&[])
    }

    /// All vertices of the unit ball.
    pub fn vertices(&self) -> &[Vector] {
        self.ball.vrep().unwrap_or(&[])
    }

    pub fn norm(&self, x: &[Rational]) -> Result<Rational> {
        if x.len() != self.dim() {
            return Err(dim_mismatch("norm argument", self.dim(), x.len()));
        }
        Ok(self.norm_of(x))
    }

    pub(crate) fn norm_of(&self, x: &[Rational]) -> Rational {
        self.functionals()
            .iter()
            .map(|a| exact::dot(a, x).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// The dual space: its ball vertices are this space's functionals (with
    /// both signs) and vice versa.
    pub fn dual(&self) -> Self {
        Self::wrap(
            self.ball
                .polar()
                .expect("canonical balls carry both representations"),
        )
    }

    /// The same space with norm multiplied by `c > 0`.
    pub fn scaled(&self, c: &Rational) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::Input("norm scale must be positive".into()));
        }
        let inv = c.recip();
        let hrep = self
            .functionals()
            .iter()
            .map(|a| exact::scaled(a, c))
            .collect();
        let vrep = self
            .vertices()
            .iter()
            .map(|v| exact::scaled(v, &inv))
            .collect();
        Ok(Self::wrap(
            SymmetricPolytope::from_parts(self.dim(), hrep, vrep)?.canonicalize()?,
        ))
    }

    /// The image space under an invertible `t`: the norm of `y` is the old
    /// norm of `t^{-1} y`.
    pub fn transformed(&self, t: &Matrix) -> Result<Self> {
        Ok(Self::wrap(self.ball.transformed(t)?))
    }
}

fn unit_vectors(n: usize) -> Vec<Vector> {
    (0..n)
        .map(|i| {
            let mut e = vec![Rational::zero(); n];
            e[i] = Rational::one();
            e
        })
        .collect()
}

/// A subspace `E` of a polyhedral space, given by an explicit basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subspace {
    ambient: PolyhedralSpace,
    basis: Matrix,
}

impl Subspace {
    /// `basis` is `ambient.dim() x k` with linearly independent columns.
    pub fn new(ambient: PolyhedralSpace, basis: Matrix) -> Result<Self> {
        if basis.rows() != ambient.dim() {
            return Err(dim_mismatch(
                "subspace basis rows",
                ambient.dim(),
                basis.rows(),
            ));
        }
        if basis.rank() != basis.cols() {
            return Err(Error::Input("subspace basis is rank-deficient".into()));
        }
        Ok(Subspace { ambient, basis })
    }

    /// The whole space, with the identity basis.
    pub fn full(ambient: PolyhedralSpace) -> Self {
        let n = ambient.dim();
        Subspace {
            ambient,
            basis: Matrix::identity(n),
        }
    }

    /// The zero subspace.
    pub fn trivial(ambient: PolyhedralSpace) -> Self {
        let n = ambient.dim();
        Subspace {
            ambient,
            basis: Matrix::zeros(n, 0),
        }
    }

    pub fn ambient(&self) -> &PolyhedralSpace {
        &self.ambient
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    /// The subspace in its own coordinates with the norm inherited from the
    /// ambient space: functionals `phi o basis`.
    pub fn induced(&self) -> Result<PolyhedralSpace> {
        let k = self.dim();
        if k == 0 {
            return Ok(PolyhedralSpace::zero());
        }
        let fs = self
            .ambient
            .functionals()
            .iter()
            .map(|a| self.basis.transpose().mul_vec(a))
            .collect::<Result<Vec<_>>>()?;
        PolyhedralSpace::from_functionals(k, fs)
    }

    /// Basis in reduced column echelon form; equal for equal subspaces.
    pub fn canonical_basis(&self) -> Matrix {
        self.basis.column_echelon().0
    }

    pub fn same_subspace(&self, other: &Subspace) -> bool {
        self.ambient == other.ambient && self.canonical_basis() == other.canonical_basis()
    }
}

/// A witness isometry onto `linf(dim)` when the canonical ball has exactly
/// `dim` linearly independent functional pairs.
pub fn is_linf_isometric(space: &PolyhedralSpace) -> Option<LinearMap> {
    let n = space.dim();
    let fs = space.functionals();
    if fs.len() != n {
        return None;
    }
    let m = Matrix::from_rows(n, fs.to_vec()).ok()?;
    if m.rank() != n {
        return None;
    }
    LinearMap::new(space.clone(), PolyhedralSpace::linf_or_zero(n), m).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, ratio};

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn norms_of_the_standard_spaces() {
        let x = v(&[3, -4]);
        assert_eq!(PolyhedralSpace::linf(2).unwrap().norm(&x).unwrap(), int(4));
        assert_eq!(PolyhedralSpace::l1(2).unwrap().norm(&x).unwrap(), int(7));
        let rotated = PolyhedralSpace::from_functionals(2, vec![v(&[1, 1]), v(&[1, -1])]).unwrap();
        assert_eq!(rotated.norm(&x).unwrap(), int(7));
        assert!(rotated.norm(&v(&[1])).is_err());
    }

    #[test]
    fn standard_balls() {
        let sq = PolyhedralSpace::linf(2).unwrap();
        assert_eq!(
            sq.vertices(),
            &[v(&[1, 1]), v(&[1, -1]), v(&[-1, 1]), v(&[-1, -1])]
        );
        let diamond = PolyhedralSpace::l1(2).unwrap();
        assert_eq!(
            diamond.vertices(),
            &[v(&[1, 0]), v(&[0, 1]), v(&[0, -1]), v(&[-1, 0])]
        );
        assert_eq!(
            PolyhedralSpace::l1(1).unwrap(),
            PolyhedralSpace::linf(1).unwrap()
        );
        assert!(PolyhedralSpace::l1(0).is_err());
        assert!(PolyhedralSpace::linf(0).is_err());
    }

    #[test]
    fn duality_swaps_l1_and_linf() {
        for n in 1..=3 {
            let l1 = PolyhedralSpace::l1(n).unwrap();
            let linf = PolyhedralSpace::linf(n).unwrap();
            assert_eq!(l1.dual(), linf);
            assert_eq!(linf.dual(), l1);
        }
        let odd = PolyhedralSpace::from_functionals(2, vec![v(&[1, 2]), v(&[3, -1]), v(&[0, 1])])
            .unwrap();
        assert_eq!(odd.dual().dual(), odd);
    }

    #[test]
    fn induced_norms() {
        let linf = PolyhedralSpace::linf(2).unwrap();
        let diag = Matrix::from_cols(2, vec![v(&[1, 1])]).unwrap();
        let e = Subspace::new(linf.clone(), diag.clone())
            .unwrap()
            .induced()
            .unwrap();
        assert_eq!(e, PolyhedralSpace::linf(1).unwrap());
        let e1 = Subspace::new(PolyhedralSpace::l1(2).unwrap(), diag)
            .unwrap()
            .induced()
            .unwrap();
        assert_eq!(e1.functionals(), &[vec![int(2)]]);
        assert_eq!(e1.norm(&[int(-3)]).unwrap(), int(6));
        assert_eq!(Subspace::full(linf.clone()).induced().unwrap(), linf);
        let bad = Matrix::from_cols(2, vec![v(&[1, 1]), v(&[2, 2])]).unwrap();
        assert!(Subspace::new(linf, bad).is_err());
    }

    #[test]
    fn canonical_basis_identifies_subspaces() {
        let linf = PolyhedralSpace::linf(3).unwrap();
        let a = Subspace::new(
            linf.clone(),
            Matrix::from_cols(3, vec![v(&[1, 1, 0]), v(&[0, 1, 1])]).unwrap(),
        )
        .unwrap();
        let b = Subspace::new(
            linf,
            Matrix::from_cols(3, vec![v(&[1, 2, 1]), v(&[1, 0, -1])]).unwrap(),
        )
        .unwrap();
        assert!(a.same_subspace(&b));
    }

    #[test]
    fn scaling_and_transforming() {
        let sq = PolyhedralSpace::linf(2).unwrap();
        let big = sq.scaled(&ratio(3, 2)).unwrap();
        assert_eq!(big.norm(&v(&[1, -2])).unwrap(), int(3));
        let t = Matrix::from_rows(2, vec![v(&[1, 1]), v(&[1, -1])]).unwrap();
        let moved = sq.transformed(&t).unwrap();
        // ||y|| = ||t^{-1} y||_inf
        assert_eq!(moved.norm(&v(&[2, 0])).unwrap(), int(1));
        assert_eq!(moved.norm(&v(&[1, 1])).unwrap(), int(1));
    }

    #[test]
    fn linf_recognition() {
        let w = is_linf_isometric(&PolyhedralSpace::linf(3).unwrap()).unwrap();
        assert_eq!(w.matrix(), &Matrix::identity(3));
        let rotated = PolyhedralSpace::from_functionals(2, vec![v(&[1, 1]), v(&[1, -1])]).unwrap();
        let w = is_linf_isometric(&rotated).unwrap();
        assert_eq!(
            w.matrix(),
            &Matrix::from_rows(2, vec![v(&[1, 1]), v(&[1, -1])]).unwrap()
        );
        for vert in rotated.vertices() {
            assert_eq!(w.codomain().norm(&w.apply(vert).unwrap()).unwrap(), int(1));
        }
        let l1 = PolyhedralSpace::l1(3).unwrap();
        assert_eq!(l1.functionals().len(), 4);
        assert!(is_linf_isometric(&l1).is_none());
    }
}
