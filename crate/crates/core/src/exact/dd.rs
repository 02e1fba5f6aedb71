//! Double description method.
//!
//! Halfspaces are normalized and processed in lexicographic order, so the
//! output never depends on input order. Two rays are combined only when they
//! are adjacent, decided by the rank of the constraints tight at both.

use super::lp::Constraint;
use super::{dot, Caps, Field, Matrix};
use crate::error::{Error, Result};

/// Fixed-width bitset over constraint indices.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn is_subset(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            (0..64)
                .filter(move |b| word >> b & 1 == 1)
                .map(move |b| w * 64 + b)
        })
    }
}

struct Ray<T> {
    dir: Vec<T>,
    tight: Bits,
}

/// Scale to a primitive integer vector; only directions matter here.
fn normalize<T: Field>(v: Vec<T>) -> Vec<T> {
    T::primitive(&v)
}

/// Extreme rays of the cone `{y : r . y >= 0 for every r in rows}`.
///
/// The rows must span the whole space (the cone is then pointed); otherwise
/// a [`Error::Degenerate`] is returned.
pub fn cone_rays<T: Field>(dim: usize, rows: &[Vec<T>], caps: &Caps) -> Result<Vec<Vec<T>>> {
    let mut hs: Vec<Vec<T>> = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .map(|r| normalize(r.clone()))
        .collect();
    hs.sort();
    hs.dedup();
    let total = hs.len();

    // Initial simplicial cone from the first independent rows.
    let mut initial: Vec<usize> = Vec::with_capacity(dim);
    let mut basis = Matrix::<T>::zeros(0, dim);
    for (i, h) in hs.iter().enumerate() {
        if initial.len() == dim {
            break;
        }
        let row = Matrix::from_rows(dim, vec![h.clone()])?;
        let candidate = basis.vstack(&row)?;
        if candidate.rank() > initial.len() {
            basis = candidate;
            initial.push(i);
        }
    }
    if initial.len() < dim {
        return Err(Error::Degenerate(format!(
            "constraints have rank {} < {dim}; cone is not pointed",
            initial.len()
        )));
    }
    if dim == 0 {
        return Ok(vec![]);
    }
    let inv = basis.inverse()?;
    let mut rays: Vec<Ray<T>> = (0..dim)
        .map(|k| {
            let mut tight = Bits::new(total);
            for (l, &i) in initial.iter().enumerate() {
                if l != k {
                    tight.insert(i);
                }
            }
            Ray {
                dir: normalize(inv.col(k)),
                tight,
            }
        })
        .collect();

    let is_initial = {
        let mut b = vec![false; total];
        for &i in &initial {
            b[i] = true;
        }
        b
    };
    for (h_idx, h) in hs.iter().enumerate() {
        if is_initial[h_idx] {
            continue;
        }
        let values: Vec<T> = rays.iter().map(|r| dot(h, &r.dir)).collect();
        if values.iter().all(|v| !v.is_negative()) {
            for (r, v) in rays.iter_mut().zip(&values) {
                if v.is_zero() {
                    r.tight.insert(h_idx);
                }
            }
            continue;
        }
        let pos: Vec<usize> = (0..rays.len())
            .filter(|&i| values[i].is_positive())
            .collect();
        let neg: Vec<usize> = (0..rays.len())
            .filter(|&i| values[i].is_negative())
            .collect();
        let mut next: Vec<Ray<T>> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common = rays[p].tight.and(&rays[q].tight);
                if !adjacent(dim, &hs, &rays, p, q, &common) {
                    continue;
                }
                let (vp, vq) = (values[p].clone(), -values[q].clone());
                let dir: Vec<T> = rays[p]
                    .dir
                    .iter()
                    .zip(&rays[q].dir)
                    .map(|(a, b)| vq.clone() * a.clone() + vp.clone() * b.clone())
                    .collect();
                let mut tight = common;
                tight.insert(h_idx);
                next.push(Ray {
                    dir: normalize(dir),
                    tight,
                });
            }
        }
        let mut kept: Vec<Ray<T>> = Vec::with_capacity(rays.len() + next.len());
        for (mut r, v) in rays.into_iter().zip(values) {
            if v.is_negative() {
                continue;
            }
            if v.is_zero() {
                r.tight.insert(h_idx);
            }
            kept.push(r);
        }
        kept.extend(next);
        caps.check_intermediate(kept.len())?;
        rays = kept;
    }
    let mut out: Vec<Vec<T>> = rays.into_iter().map(|r| r.dir).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

fn adjacent<T: Field>(
    dim: usize,
    hs: &[Vec<T>],
    rays: &[Ray<T>],
    p: usize,
    q: usize,
    common: &Bits,
) -> bool {
    if common.count() + 2 < dim {
        return false;
    }
    // Cheap necessary condition: no third ray is tight on a superset.
    let dominated = rays
        .iter()
        .enumerate()
        .any(|(k, r)| k != p && k != q && common.is_subset(&r.tight));
    if dominated {
        return false;
    }
    let m = Matrix::from_rows(dim, common.iter().map(|i| hs[i].clone()).collect())
        .expect("rows share the cone dimension");
    m.rank() + 2 == dim
}

/// Vertices of the polytope `{x : a_i . x <= b_i}`, sorted.
///
/// Fails with [`Error::Degenerate`] if the polyhedron is unbounded or the
/// constraint normals do not span the space. An empty polytope yields no
/// vertices.
pub fn polytope_vertices<T: Field>(
    dim: usize,
    constraints: &[Constraint<T>],
    caps: &Caps,
) -> Result<Vec<Vec<T>>> {
    // Homogenize: (t, x) with b t - a.x >= 0, t >= 0.
    let mut rows: Vec<Vec<T>> = constraints
        .iter()
        .map(|c| {
            let mut r = Vec::with_capacity(dim + 1);
            r.push(c.bound.clone());
            r.extend(c.coeffs.iter().map(|x| -x.clone()));
            r
        })
        .collect();
    let mut t_row = vec![T::zero(); dim + 1];
    t_row[0] = T::one();
    rows.push(t_row);
    let rays = cone_rays(dim + 1, &rows, caps)?;
    let mut verts = Vec::with_capacity(rays.len());
    for r in rays {
        if r[0].is_zero() {
            return Err(Error::Degenerate("polyhedron is unbounded".into()));
        }
        let t = r[0].clone();
        verts.push(
            r[1..]
                .iter()
                .map(|x| x.clone() / t.clone())
                .collect::<Vec<T>>(),
        );
    }
    verts.sort();
    verts.dedup();
    caps.check_vertices(verts.len())?;
    Ok(verts)
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

    fn box_constraints(d: usize) -> Vec<Constraint<Q>> {
        let mut cons = Vec::new();
        for i in 0..d {
            for s in [1, -1] {
                let mut a = vec![q(0); d];
                a[i] = q(s);
                cons.push(Constraint::new(a, q(1)));
            }
        }
        cons
    }

    #[test]
    fn cube_vertices() {
        let v = polytope_vertices(3, &box_constraints(3), &Caps::default()).unwrap();
        assert_eq!(v.len(), 8);
        assert!(v.iter().all(|p| p.iter().all(|x| x.abs() == q(1))));
    }

    #[test]
    fn order_of_constraints_is_irrelevant() {
        let mut cons = box_constraints(2);
        cons.push(Constraint::new(vec![q(1), q(1)], q(1)));
        let a = polytope_vertices(2, &cons, &Caps::default()).unwrap();
        cons.reverse();
        let b = polytope_vertices(2, &cons, &Caps::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn unbounded_and_empty() {
        let half = [
            Constraint::new(vec![q(1), q(0)], q(1)),
            Constraint::new(vec![q(0), q(1)], q(1)),
            Constraint::new(vec![q(0), q(-1)], q(1)),
        ];
        assert!(matches!(
            polytope_vertices(2, &half, &Caps::default()),
            Err(Error::Degenerate(_))
        ));
        let mut empty = box_constraints(2);
        empty.push(Constraint::new(vec![q(1), q(0)], q(-2)));
        assert!(polytope_vertices(2, &empty, &Caps::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn lower_dimensional_polytope_via_equalities() {
        // the segment x + y = 1 inside the square
        let mut cons = box_constraints(2);
        cons.extend(Constraint::equality(vec![q(1), q(1)], q(1)));
        let v = polytope_vertices(2, &cons, &Caps::default()).unwrap();
        assert_eq!(v, vec![vec![q(0), q(1)], vec![q(1), q(0)]]);
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let caps = Caps {
            max_dim: 6,
            max_vertices: 4,
        };
        let err = polytope_vertices(3, &box_constraints(3), &caps).unwrap_err();
        assert!(err.is_resource());
    }
}
