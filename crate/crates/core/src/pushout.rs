//! Amalgamation of an isometric embedding `i: Z -> X` and a near-isometric
//! map `f: Z -> Y`: the quotient of `X (+)_1 Y` by `{(i z, -f z)}`.
//!
//! Coordinates of `W`: the coordinates of `X (+)_1 Y` that are not pivots of
//! the reduced column echelon form of the antidiagonal basis. Those pivots
//! always fall in the `X` block, so `W` ends with a copy of the `Y`
//! coordinates and `j = [0; I]`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::maps::{DistortionReport, LinearMap};
use crate::spaces::PolyhedralSpace;
use crate::{exact, Matrix, Rational};

/// Which hypothesis on `f` the construction requires.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PushoutVariant {
    /// `||f|| <= 1` and `f` bounded below by `(1+eps)^{-1}`; `g` is then
    /// eps-isometric.
    #[default]
    Standard,
    /// Only `||f|| <= 1`; `g` is merely contractive.
    Contraction,
}

/// The invariants checked before a [`PushoutResult`] is returned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PushoutChecks {
    pub commutes: bool,
    pub j_isometric: bool,
    pub g_contractive: bool,
    /// `min_gain(g) >= (1+eps)^{-1}`; only required for the standard variant.
    pub g_lower_bound: bool,
}

impl PushoutChecks {
    pub fn all(&self, variant: PushoutVariant) -> bool {
        self.commutes
            && self.j_isometric
            && self.g_contractive
            && (variant == PushoutVariant::Contraction || self.g_lower_bound)
    }
}

#[derive(Clone, Debug)]
pub struct PushoutResult {
    pub i: LinearMap,
    pub f: LinearMap,
    pub eps: Rational,
    pub variant: PushoutVariant,
    pub w: PolyhedralSpace,
    pub g: LinearMap,
    pub j: LinearMap,
    /// Columns span the antidiagonal inside `X (+) Y`.
    pub delta_basis: Matrix,
    /// `X (+) Y -> W`, with kernel spanned by `delta_basis`.
    pub quotient: Matrix,
    /// Coordinates of `X (+) Y` eliminated by the quotient.
    pub pivots: Vec<usize>,
    pub g_report: DistortionReport,
    pub j_report: DistortionReport,
    pub checks: PushoutChecks,
}

pub fn pushout(
    i: &LinearMap,
    f: &LinearMap,
    eps: &Rational,
    variant: PushoutVariant,
) -> Result<PushoutResult> {
    if i.domain() != f.domain() {
        return Err(Error::Input("i and f must share their domain".into()));
    }
    if eps < &Rational::zero() {
        return Err(Error::Input("eps must be nonnegative".into()));
    }
    let one = Rational::one();
    if !i.distortion()?.eps_star.is_zero() {
        return Err(Error::Precondition(
            "i is not an isometric embedding".into(),
        ));
    }
    let fr = f.distortion()?;
    if fr.op_norm > one {
        return Err(Error::Precondition(format!(
            "f has norm {} > 1",
            exact::rational::to_string(&fr.op_norm)
        )));
    }
    let lower = (one.clone() + eps).recip();
    if variant == PushoutVariant::Standard && fr.min_gain.as_ref().is_some_and(|g| *g < lower) {
        return Err(Error::Precondition(format!(
            "f is not {}-isometric (eps* = {})",
            exact::rational::to_string(eps),
            fr.eps_star
        )));
    }

    let (dx, dy) = (i.codomain().dim(), f.codomain().dim());
    let delta_basis = i.matrix().vstack(&f.matrix().scale(&-one.clone()))?;
    let (reduced, pivots) = delta_basis.column_echelon();
    debug_assert!(pivots.iter().all(|&p| p < dx));
    let total = dx + dy;
    let keep: Vec<usize> = (0..total).filter(|r| !pivots.contains(r)).collect();
    let select_p = Matrix::identity(total).select_rows(&pivots);
    let quotient = Matrix::identity(total)
        .sub(&reduced.mul(&select_p)?)?
        .select_rows(&keep);
    let g_mat = quotient.select_cols(&(0..dx).collect::<Vec<_>>());
    let j_mat = quotient.select_cols(&(dx..total).collect::<Vec<_>>());

    let mut points =
        Vec::with_capacity(i.codomain().vertices().len() + f.codomain().vertices().len());
    for v in i.codomain().vertices() {
        points.push(g_mat.mul_vec(v)?);
    }
    for v in f.codomain().vertices() {
        points.push(j_mat.mul_vec(v)?);
    }
    let w = PolyhedralSpace::from_vertices(keep.len(), points)?;
    let g = LinearMap::new(i.codomain().clone(), w.clone(), g_mat)?;
    let j = LinearMap::new(f.codomain().clone(), w.clone(), j_mat)?;

    let g_report = g.distortion()?;
    let j_report = j.distortion()?;
    let checks = PushoutChecks {
        commutes: g.matrix().mul(i.matrix())? == j.matrix().mul(f.matrix())?,
        j_isometric: j_report.eps_star.is_zero(),
        g_contractive: g_report.op_norm <= one,
        g_lower_bound: g_report.min_gain.as_ref().is_none_or(|m| *m >= lower),
    };
    if !checks.all(variant) {
        return Err(Error::Verification(format!(
            "pushout invariants failed: {checks:?}"
        )));
    }
    Ok(PushoutResult {
        i: i.clone(),
        f: f.clone(),
        eps: eps.clone(),
        variant,
        w,
        g,
        j,
        delta_basis,
        quotient,
        pivots,
        g_report,
        j_report,
        checks,
    })
}

impl PushoutResult {
    /// Right inverse of the quotient: puts zeros at the pivot coordinates.
    pub fn section(&self) -> Matrix {
        let total = self.quotient.cols();
        let keep: Vec<usize> = (0..total).filter(|r| !self.pivots.contains(r)).collect();
        let mut s = Matrix::zeros(total, keep.len());
        for (c, &r) in keep.iter().enumerate() {
            s[(r, c)] = Rational::one();
        }
        s
    }
}

/// The map `h: W -> V` with `h o g = t` and `h o j = s`.
pub fn mediate(p: &PushoutResult, t: &LinearMap, s: &LinearMap) -> Result<LinearMap> {
    if t.domain() != p.g.domain() || s.domain() != p.j.domain() {
        return Err(Error::Input("T must start at X and S at Y".into()));
    }
    if t.codomain() != s.codomain() {
        return Err(Error::Input("T and S need a common codomain".into()));
    }
    if t.matrix().mul(p.i.matrix())? != s.matrix().mul(p.f.matrix())? {
        return Err(Error::Input("T o i differs from S o f".into()));
    }
    let ts = t.matrix().hstack(s.matrix())?;
    debug_assert!(ts.mul(&p.delta_basis)?.is_zero());
    let h = LinearMap::new(p.w.clone(), t.codomain().clone(), ts.mul(&p.section())?)?;
    if h.matrix().mul(p.g.matrix())? != *t.matrix() || h.matrix().mul(p.j.matrix())? != *s.matrix()
    {
        return Err(Error::Verification(
            "mediating map does not factor T and S".into(),
        ));
    }
    let bound = std::cmp::max(t.operator_norm(), s.operator_norm());
    if h.operator_norm() > bound {
        return Err(Error::Verification(format!(
            "mediating map has norm {} > {}",
            exact::rational::to_string(&h.operator_norm()),
            exact::rational::to_string(&bound)
        )));
    }
    Ok(h)
}

/// Given a retraction `proj: X -> Z` onto `i(Z)`, the map `h: W -> Y` with
/// `h o j = id` and `h o g = f o proj`, so `j(Y)` is complemented in `W`.
pub fn extend_projection(p: &PushoutResult, proj: &LinearMap) -> Result<LinearMap> {
    if proj.domain() != p.i.codomain() || proj.codomain() != p.i.domain() {
        return Err(Error::Input("projection must map X to Z".into()));
    }
    let dz = p.i.domain().dim();
    if proj.matrix().mul(p.i.matrix())? != Matrix::identity(dz) {
        return Err(Error::Input("P o i is not the identity on Z".into()));
    }
    let t = p.f.compose(proj)?;
    let h = mediate(p, &t, &LinearMap::identity(p.f.codomain().clone()))?;
    let bound = std::cmp::max(proj.operator_norm(), Rational::one());
    if h.operator_norm() > bound {
        return Err(Error::Verification(
            "extended projection exceeds the norm bound".into(),
        ));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, ratio};
    use crate::spaces::Subspace;
    use crate::suite::quotient_norm_oracle;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    fn linf(n: usize) -> PolyhedralSpace {
        PolyhedralSpace::linf(n).unwrap()
    }

    fn zero_maps(x: &PolyhedralSpace, y: &PolyhedralSpace) -> (LinearMap, LinearMap) {
        let z = PolyhedralSpace::zero();
        (
            LinearMap::zero(z.clone(), x.clone()),
            LinearMap::zero(z, y.clone()),
        )
    }

    fn e1_in_linf2() -> (LinearMap, LinearMap) {
        let x = linf(2);
        let z = Subspace::new(x.clone(), Matrix::from_cols(2, vec![v(&[1, 0])]).unwrap()).unwrap();
        let zs = z.induced().unwrap();
        (
            LinearMap::new(zs.clone(), x, z.basis().clone()).unwrap(),
            LinearMap::new(zs, linf(1), Matrix::identity(1)).unwrap(),
        )
    }

    #[test]
    fn trivial_amalgam_is_the_l1_sum() {
        let (i, f) = zero_maps(&linf(1), &linf(1));
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        assert_eq!(p.w, PolyhedralSpace::l1(2).unwrap());
        let x = linf(2);
        let (i, f) = zero_maps(&x, &linf(1));
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        assert_eq!(p.w.norm(&v(&[1, -1, 2])).unwrap(), int(3));
    }

    #[test]
    fn full_subspace_reproduces_y() {
        let x = PolyhedralSpace::l1(2).unwrap();
        let i = LinearMap::identity(x.clone());
        let f = crate::maps::linf_embedding(&x);
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        assert_eq!(p.w, linf(2));
        assert_eq!(p.g.matrix(), f.matrix());
        assert_eq!(p.j.matrix(), &Matrix::identity(2));
    }

    #[test]
    fn amalgam_over_a_line() {
        let (i, f) = e1_in_linf2();
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        assert_eq!(p.w.dim(), 2);
        assert!(p.g_report.eps_star.is_zero() && p.j_report.eps_star.is_zero());
        for a in -3..=3 {
            for b in -3..=3 {
                let x = vec![ratio(a, 2), ratio(b, 3)];
                assert_eq!(
                    p.g.codomain().norm(&p.g.apply(&x).unwrap()).unwrap(),
                    quotient_norm_oracle(&p, &x).unwrap()
                );
            }
        }
    }

    #[test]
    fn expansive_f_is_rejected() {
        let z = linf(1);
        let i = LinearMap::identity(z.clone());
        let f = LinearMap::new(z.clone(), z, Matrix::identity(1).scale(&int(2))).unwrap();
        assert!(matches!(
            pushout(&i, &f, &int(1), PushoutVariant::Standard),
            Err(Error::Precondition(_))
        ));
        let (i, f) = e1_in_linf2();
        let half = LinearMap::new(
            f.domain().clone(),
            f.codomain().clone(),
            f.matrix().scale(&ratio(1, 2)),
        )
        .unwrap();
        assert!(matches!(
            pushout(&i, &half, &ratio(1, 2), PushoutVariant::Standard),
            Err(Error::Precondition(_))
        ));
        let p = pushout(&i, &half, &int(0), PushoutVariant::Contraction).unwrap();
        assert!(p.checks.all(PushoutVariant::Contraction));
        let nonisometric = LinearMap::new(
            i.domain().clone(),
            i.codomain().clone(),
            i.matrix().scale(&ratio(1, 2)),
        )
        .unwrap();
        assert!(matches!(
            pushout(&nonisometric, &f, &int(0), PushoutVariant::Standard),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn mediating_maps() {
        let (i, f) = zero_maps(&linf(2), &linf(1));
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        let v3 = linf(3);
        let t = LinearMap::new(
            linf(2),
            v3.clone(),
            Matrix::from_rows(2, vec![v(&[1, 0]), v(&[0, 1]), v(&[1, 1])]).unwrap(),
        )
        .unwrap();
        let s = LinearMap::new(
            linf(1),
            v3,
            Matrix::from_rows(1, vec![v(&[0]), v(&[2]), v(&[-1])]).unwrap(),
        )
        .unwrap();
        let h = mediate(&p, &t, &s).unwrap();
        assert_eq!(h.matrix(), &t.matrix().hstack(s.matrix()).unwrap());

        let (i, f) = e1_in_linf2();
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        let h = mediate(&p, &p.g, &p.j).unwrap();
        assert_eq!(h.matrix(), &Matrix::identity(2));
        let bad = LinearMap::zero(linf(1), p.w.clone());
        assert!(matches!(mediate(&p, &p.g, &bad), Err(Error::Input(_))));
    }

    #[test]
    fn projections_through_the_amalgam() {
        let (i, f) = e1_in_linf2();
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        let proj = LinearMap::new(
            linf(2),
            i.domain().clone(),
            Matrix::from_rows(2, vec![v(&[1, 0])]).unwrap(),
        )
        .unwrap();
        let h = extend_projection(&p, &proj).unwrap();
        assert_eq!(h.operator_norm(), int(1));
        assert_eq!(h.matrix().mul(p.j.matrix()).unwrap(), Matrix::identity(1));

        let (i, f) = zero_maps(&linf(2), &linf(1));
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        let h = extend_projection(&p, &LinearMap::zero(linf(2), PolyhedralSpace::zero())).unwrap();
        assert_eq!(
            h.matrix(),
            &Matrix::from_rows(3, vec![v(&[0, 0, 1])]).unwrap()
        );
        assert_eq!(h.operator_norm(), int(1));

        let x = linf(2);
        let i = LinearMap::identity(x.clone());
        let p = pushout(
            &i,
            &LinearMap::identity(x.clone()),
            &int(0),
            PushoutVariant::Standard,
        )
        .unwrap();
        let h = extend_projection(&p, &LinearMap::identity(x)).unwrap();
        assert_eq!(h.matrix(), &Matrix::identity(2));

        let (i, f) = e1_in_linf2();
        let p = pushout(&i, &f, &int(0), PushoutVariant::Standard).unwrap();
        let wrong = LinearMap::new(
            linf(2),
            i.domain().clone(),
            Matrix::from_rows(2, vec![v(&[2, 0])]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            extend_projection(&p, &wrong),
            Err(Error::Input(_))
        ));
    }
}
