//! Centrally symmetric, bounded, full-dimensional polytopes.
//!
//! The H-representation stores one functional `a` per antipodal pair and
//! stands for the halfspaces `±a.x <= 1`. The V-representation stores every
//! vertex, so it is closed under negation. Canonical form: no redundant
//! functional, no non-vertex point, functionals sign-normalized (first
//! nonzero entry positive), both lists sorted in decreasing lexicographic
//! order (so the standard basis comes out as `e_1, e_2, ...`).

use super::dd::polytope_vertices;
use super::lp::Constraint;
use super::{dot, negated, sign_normalized, Caps, Field, Matrix};
use crate::error::{dim_mismatch, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymmetricPolytope<T> {
    dim: usize,
    hrep: Option<Vec<Vec<T>>>,
    vrep: Option<Vec<Vec<T>>>,
    canonical: bool,
}

fn check_lengths<T>(dim: usize, what: &str, vs: &[Vec<T>]) -> Result<()> {
    for (i, v) in vs.iter().enumerate() {
        if v.len() != dim {
            return Err(dim_mismatch(&format!("{what} {i}"), dim, v.len()));
        }
    }
    Ok(())
}

fn rank_of<T: Field>(dim: usize, vs: Vec<Vec<T>>) -> usize {
    Matrix::from_rows(dim, vs).map(|m| m.rank()).unwrap_or(0)
}

impl<T: Field> SymmetricPolytope<T> {
    pub fn from_hrep(dim: usize, functionals: Vec<Vec<T>>) -> Result<Self> {
        check_lengths(dim, "functional", &functionals)?;
        Ok(SymmetricPolytope {
            dim,
            hrep: Some(functionals),
            vrep: None,
            canonical: false,
        })
    }

    /// The symmetric hull of `points`; negations are added as needed.
    pub fn from_vrep(dim: usize, points: Vec<Vec<T>>) -> Result<Self> {
        check_lengths(dim, "point", &points)?;
        Ok(SymmetricPolytope {
            dim,
            hrep: None,
            vrep: Some(points),
            canonical: false,
        })
    }

    /// Both representations as given; the caller vouches that they describe
    /// the same body. Use [`SymmetricPolytope::canonicalize`] to normalize.
    pub fn from_parts(dim: usize, hrep: Vec<Vec<T>>, vrep: Vec<Vec<T>>) -> Result<Self> {
        check_lengths(dim, "functional", &hrep)?;
        check_lengths(dim, "point", &vrep)?;
        Ok(SymmetricPolytope {
            dim,
            hrep: Some(hrep),
            vrep: Some(vrep),
            canonical: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hrep(&self) -> Option<&[Vec<T>]> {
        self.hrep.as_deref()
    }

    pub fn vrep(&self) -> Option<&[Vec<T>]> {
        self.vrep.as_deref()
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Membership via the H-representation.
    pub fn contains(&self, x: &[T]) -> Option<bool> {
        let h = self.hrep.as_ref()?;
        Some(h.iter().all(|a| dot(a, x).abs() <= T::one()))
    }

    /// Compute the missing representation and canonicalize. When both are
    /// present the V-representation is taken as authoritative.
    pub fn dd_convert(&self, caps: &Caps) -> Result<Self> {
        caps.check_dim(self.dim)?;
        let d = self.dim;
        if let Some(points) = &self.vrep {
            let pts = symmetric_closure(points);
            if rank_of(d, pts.clone()) < d {
                return Err(Error::Degenerate(
                    "vertices are not full-dimensional".into(),
                ));
            }
            caps.check_vertices(pts.len())?;
            // Facets of the ball are the vertices of its polar.
            let polar: Vec<Constraint<T>> = pts
                .iter()
                .map(|p| Constraint::new(p.clone(), T::one()))
                .collect();
            let facets = polytope_vertices(d, &polar, caps)?;
            return Ok(canonical_parts(d, facets, pts));
        }
        let functionals = self
            .hrep
            .as_ref()
            .ok_or_else(|| Error::Input("polytope has neither representation".into()))?;
        if rank_of(d, functionals.clone()) < d {
            return Err(Error::Degenerate(
                "functionals do not span the dual space".into(),
            ));
        }
        let mut cons = Vec::with_capacity(2 * functionals.len());
        for a in functionals {
            cons.push(Constraint::new(a.clone(), T::one()));
            cons.push(Constraint::new(negated(a), T::one()));
        }
        let verts = polytope_vertices(d, &cons, caps)?;
        Ok(canonical_parts(d, functionals.clone(), verts))
    }

    /// Drop redundant functionals and non-vertex points, normalize and sort.
    pub fn canonicalize(&self) -> Result<Self> {
        match (&self.hrep, &self.vrep) {
            (Some(h), Some(v)) => Ok(canonical_parts(self.dim, h.clone(), v.clone())),
            _ => Err(Error::Input(
                "canonicalize needs both representations".into(),
            )),
        }
    }

    /// Image under an invertible linear map `t`: vertices map by `t`,
    /// functionals by the inverse transpose. No conversion is needed.
    pub fn transformed(&self, t: &Matrix<T>) -> Result<Self> {
        if t.shape() != (self.dim, self.dim) {
            return Err(dim_mismatch("transform size", self.dim, t.rows()));
        }
        let inv = t.inverse()?;
        let hrep = match &self.hrep {
            Some(h) => Some(
                h.iter()
                    .map(|a| inv.transpose().mul_vec(a))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let vrep = match &self.vrep {
            Some(v) => Some(v.iter().map(|p| t.mul_vec(p)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        let out = SymmetricPolytope {
            dim: self.dim,
            hrep,
            vrep,
            canonical: false,
        };
        if self.canonical {
            out.canonicalize()
        } else {
            Ok(out)
        }
    }

    /// The polar body: functionals and vertices swap roles.
    pub fn polar(&self) -> Option<Self> {
        let h = self.hrep.as_ref()?;
        let v = self.vrep.as_ref()?;
        let mut hrep: Vec<Vec<T>> = v.iter().filter_map(|p| sign_normalized(p)).collect();
        canonical_sort(&mut hrep);
        let vrep = symmetric_closure(h);
        Some(SymmetricPolytope {
            dim: self.dim,
            hrep: Some(hrep),
            vrep: Some(vrep),
            canonical: self.canonical,
        })
    }
}

fn symmetric_closure<T: Field>(points: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(2 * points.len());
    for p in points {
        if p.iter().all(|x| x.is_zero()) {
            continue;
        }
        out.push(p.clone());
        out.push(negated(p));
    }
    canonical_sort(&mut out);
    out
}

fn canonical_sort<T: Ord>(v: &mut Vec<Vec<T>>) {
    v.sort_by(|a, b| b.cmp(a));
    v.dedup();
}

fn canonical_parts<T: Field>(
    dim: usize,
    hrep: Vec<Vec<T>>,
    vrep: Vec<Vec<T>>,
) -> SymmetricPolytope<T> {
    let points = symmetric_closure(&vrep);
    let mut hs: Vec<Vec<T>> = hrep.iter().filter_map(|a| sign_normalized(a)).collect();
    canonical_sort(&mut hs);
    let one = T::one();
    let facets: Vec<Vec<T>> = hs
        .into_iter()
        .filter(|a| {
            let tight: Vec<Vec<T>> = points
                .iter()
                .filter(|v| dot(a, v) == one)
                .cloned()
                .collect();
            tight.len() >= dim && rank_of(dim, tight) == dim
        })
        .collect();
    let vertices: Vec<Vec<T>> = points
        .into_iter()
        .filter(|v| {
            let tight: Vec<Vec<T>> = facets
                .iter()
                .filter(|a| dot(a, v).abs() == one)
                .cloned()
                .collect();
            tight.len() >= dim && rank_of(dim, tight) == dim
        })
        .collect();
    SymmetricPolytope {
        dim,
        hrep: Some(facets),
        vrep: Some(vertices),
        canonical: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use num_traits::Signed;

    type Q = Ratio<i64>;

    fn q(n: i64) -> Q {
        Q::from_integer(n)
    }

    fn v(xs: &[i64]) -> Vec<Q> {
        xs.iter().map(|&x| q(x)).collect()
    }

    #[test]
    fn cube_from_hrep() {
        let p = SymmetricPolytope::from_hrep(3, vec![v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1])])
            .unwrap()
            .dd_convert(&Caps::default())
            .unwrap();
        let verts = p.vrep().unwrap();
        assert_eq!(verts.len(), 8);
        assert!(verts.iter().all(|x| x.iter().all(|c| c.abs() == q(1))));
        assert!(p.is_canonical());
        assert_eq!(
            p.hrep().unwrap(),
            &[v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1])]
        );
    }

    #[test]
    fn diamond_from_vrep() {
        let p = SymmetricPolytope::from_vrep(2, vec![v(&[1, 0]), v(&[0, 1])])
            .unwrap()
            .dd_convert(&Caps::default())
            .unwrap();
        assert_eq!(p.hrep().unwrap(), &[v(&[1, 1]), v(&[1, -1])]);
        assert_eq!(p.vrep().unwrap().len(), 4);
    }

    #[test]
    fn duplicate_and_redundant_functionals_are_removed() {
        let half = Ratio::new(1, 2);
        let p = SymmetricPolytope::from_hrep(
            2,
            vec![
                v(&[1, 0]),
                v(&[-1, 0]),
                vec![half, q(0)],
                v(&[0, 1]),
                vec![half, half],
            ],
        )
        .unwrap()
        .dd_convert(&Caps::default())
        .unwrap();
        assert_eq!(p.hrep().unwrap(), &[v(&[1, 0]), v(&[0, 1])]);
    }

    #[test]
    fn midpoint_is_not_a_vertex() {
        let p = SymmetricPolytope::from_parts(
            2,
            vec![v(&[1, 0]), v(&[0, 1])],
            vec![v(&[1, 1]), v(&[1, -1]), v(&[1, 0])],
        )
        .unwrap()
        .canonicalize()
        .unwrap();
        assert_eq!(p.vrep().unwrap().len(), 4);
        assert!(!p.vrep().unwrap().contains(&v(&[1, 0])));
        assert_eq!(p.canonicalize().unwrap(), p);
    }

    #[test]
    fn degenerate_inputs() {
        let flat = SymmetricPolytope::from_hrep(2, vec![v(&[1, 1])]).unwrap();
        assert!(matches!(
            flat.dd_convert(&Caps::default()),
            Err(Error::Degenerate(_))
        ));
        let thin = SymmetricPolytope::from_vrep(2, vec![v(&[1, 1]), v(&[2, 2])]).unwrap();
        assert!(matches!(
            thin.dd_convert(&Caps::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn zero_dimensional_body() {
        let p = SymmetricPolytope::<Q>::from_vrep(0, vec![])
            .unwrap()
            .dd_convert(&Caps::default())
            .unwrap();
        assert!(p.hrep().unwrap().is_empty() && p.vrep().unwrap().is_empty());
    }

    #[test]
    fn dimension_cap() {
        let caps = Caps {
            max_dim: 2,
            max_vertices: 4096,
        };
        let p = SymmetricPolytope::from_hrep(3, vec![v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1])])
            .unwrap();
        assert!(p.dd_convert(&caps).unwrap_err().is_resource());
    }
}
