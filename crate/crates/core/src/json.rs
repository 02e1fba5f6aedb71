//! JSON forms of the library's values. Rationals are always `"p/q"` strings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::polytope::SymmetricPolytope;
use crate::exact::rational::{parse_vec, vec_to_strings};
use crate::maps::{DistortionReport, LinearMap};
use crate::pushout::{PushoutChecks, PushoutResult};
use crate::spaces::{PolyhedralSpace, Subspace};
use crate::{exact, Matrix, Rational, Vector};

pub type Rows = Vec<Vec<String>>;

fn rows_of(vs: &[Vector]) -> Rows {
    vs.iter().map(|v| vec_to_strings(v)).collect()
}

fn parse_rows(rows: &Rows) -> Result<Vec<Vector>> {
    rows.iter().map(|r| parse_vec(r)).collect()
}

pub fn matrix_to_json(m: &Matrix) -> Rows {
    if m.rows() == 0 {
        return vec![];
    }
    rows_of(&m.row_vecs())
}

/// Rows of strings; `cols` is needed because a matrix without rows carries
/// no width.
pub fn matrix_from_json(rows: &Rows, cols: usize) -> Result<Matrix> {
    Matrix::from_rows(cols, parse_rows(rows)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolytopeJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hrep: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vrep: Option<Rows>,
    #[serde(default)]
    pub canonical: bool,
}

impl PolytopeJson {
    pub fn from_polytope(p: &SymmetricPolytope<Rational>) -> Self {
        PolytopeJson {
            dim: p.dim(),
            hrep: p.hrep().map(rows_of),
            vrep: p.vrep().map(rows_of),
            canonical: p.is_canonical(),
        }
    }

    /// The polytope as stated; `canonical` is not trusted and the result is
    /// never marked canonical.
    pub fn to_polytope(&self) -> Result<SymmetricPolytope<Rational>> {
        match (&self.hrep, &self.vrep) {
            (Some(h), Some(v)) => {
                SymmetricPolytope::from_parts(self.dim, parse_rows(h)?, parse_rows(v)?)
            }
            (Some(h), None) => SymmetricPolytope::from_hrep(self.dim, parse_rows(h)?),
            (None, Some(v)) => SymmetricPolytope::from_vrep(self.dim, parse_rows(v)?),
            (None, None) => Err(Error::Input("polytope needs hrep or vrep".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceJson {
    pub dim: usize,
    #[serde(default)]
    pub functionals: Rows,
    #[serde(default)]
    pub vertices: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SpaceJson {
    pub fn from_space(s: &PolyhedralSpace) -> Self {
        SpaceJson {
            dim: s.dim(),
            functionals: rows_of(s.functionals()),
            vertices: rows_of(s.vertices()),
            label: s.label().map(str::to_string),
        }
    }

    /// Built from the functionals when present, otherwise from the vertices.
    /// When both are given they must describe the same canonical ball.
    pub fn to_space(&self) -> Result<PolyhedralSpace> {
        let fs = parse_rows(&self.functionals)?;
        let vs = parse_rows(&self.vertices)?;
        let space = if self.dim == 0 {
            PolyhedralSpace::zero()
        } else if !fs.is_empty() {
            PolyhedralSpace::from_functionals(self.dim, fs.clone())?
        } else if !vs.is_empty() {
            PolyhedralSpace::from_vertices(self.dim, vs.clone())?
        } else {
            return Err(Error::Input("space needs functionals or vertices".into()));
        };
        if !fs.is_empty() && !vs.is_empty() && (space.functionals() != fs || space.vertices() != vs)
        {
            return Err(Error::Input(
                "functionals and vertices are not the same canonical ball".into(),
            ));
        }
        Ok(match &self.label {
            Some(l) => space.with_label(l.clone()),
            None => space,
        })
    }
}

/// `basis` has one row per ambient coordinate and `dim` columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceJson {
    pub ambient: SpaceJson,
    pub dim: usize,
    pub basis: Rows,
}

impl SubspaceJson {
    pub fn from_subspace(e: &Subspace) -> Self {
        SubspaceJson {
            ambient: SpaceJson::from_space(e.ambient()),
            dim: e.dim(),
            basis: matrix_to_json(e.basis()),
        }
    }

    pub fn to_subspace(&self) -> Result<Subspace> {
        Subspace::new(
            self.ambient.to_space()?,
            matrix_from_json(&self.basis, self.dim)?,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapJson {
    pub domain: SpaceJson,
    pub codomain: SpaceJson,
    pub matrix: Rows,
}

impl MapJson {
    pub fn from_map(f: &LinearMap) -> Self {
        MapJson {
            domain: SpaceJson::from_space(f.domain()),
            codomain: SpaceJson::from_space(f.codomain()),
            matrix: matrix_to_json(f.matrix()),
        }
    }

    pub fn to_map(&self) -> Result<LinearMap> {
        let domain = self.domain.to_space()?;
        let codomain = self.codomain.to_space()?;
        let m = matrix_from_json(&self.matrix, domain.dim())?;
        LinearMap::new(domain, codomain, m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistortionJson {
    pub op_norm: String,
    pub min_gain: Option<String>,
    pub eps_star: String,
}

impl DistortionJson {
    pub fn from_report(r: &DistortionReport) -> Self {
        DistortionJson {
            op_norm: exact::rational::to_string(&r.op_norm),
            min_gain: r.min_gain.as_ref().map(exact::rational::to_string),
            eps_star: r.eps_star.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushoutChecksJson {
    pub commutes: bool,
    pub j_isometric: bool,
    pub g_contractive: bool,
    pub g_lower_bound: bool,
}

impl From<&PushoutChecks> for PushoutChecksJson {
    fn from(c: &PushoutChecks) -> Self {
        PushoutChecksJson {
            commutes: c.commutes,
            j_isometric: c.j_isometric,
            g_contractive: c.g_contractive,
            g_lower_bound: c.g_lower_bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushoutJson {
    pub eps: String,
    pub w: SpaceJson,
    pub g: MapJson,
    pub j: MapJson,
    pub delta_basis: Rows,
    pub quotient: Rows,
    pub g_distortion: DistortionJson,
    pub j_distortion: DistortionJson,
    pub checks: PushoutChecksJson,
}

impl PushoutJson {
    pub fn from_result(p: &PushoutResult) -> Self {
        PushoutJson {
            eps: exact::rational::to_string(&p.eps),
            w: SpaceJson::from_space(&p.w),
            g: MapJson::from_map(&p.g),
            j: MapJson::from_map(&p.j),
            delta_basis: matrix_to_json(&p.delta_basis),
            quotient: matrix_to_json(&p.quotient),
            g_distortion: DistortionJson::from_report(&p.g_report),
            j_distortion: DistortionJson::from_report(&p.j_report),
            checks: (&p.checks).into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::ratio;

    #[test]
    fn space_roundtrip() {
        let s = PolyhedralSpace::from_functionals(
            2,
            vec![
                vec![ratio(1, 2), ratio(3, 1)],
                vec![ratio(1, 1), ratio(0, 1)],
            ],
        )
        .unwrap();
        let j = SpaceJson::from_space(&s);
        let text = serde_json::to_string(&j).unwrap();
        let back: SpaceJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_space().unwrap(), s);
        assert!(text.contains("\"1/2\""));
    }

    #[test]
    fn inconsistent_reps_are_rejected() {
        let mut j = SpaceJson::from_space(&PolyhedralSpace::linf(2).unwrap());
        j.vertices.pop();
        assert!(j.to_space().is_err());
    }

    #[test]
    fn map_and_polytope_roundtrip() {
        let f = crate::maps::linf_embedding(&PolyhedralSpace::l1(2).unwrap());
        let j = MapJson::from_map(&f);
        let back: MapJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back.to_map().unwrap(), f);
        let p = PolytopeJson::from_polytope(PolyhedralSpace::linf(3).unwrap().ball());
        let q = p.to_polytope().unwrap().canonicalize().unwrap();
        assert_eq!(&q, PolyhedralSpace::linf(3).unwrap().ball());
    }

    #[test]
    fn subspace_roundtrip() {
        let e = Subspace::new(
            PolyhedralSpace::l1(3).unwrap(),
            Matrix::from_cols(3, vec![vec![ratio(1, 1), ratio(-2, 3), ratio(0, 1)]]).unwrap(),
        )
        .unwrap();
        let j = SubspaceJson::from_subspace(&e);
        let back: SubspaceJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back.to_subspace().unwrap(), e);
    }
}
