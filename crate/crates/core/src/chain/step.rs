use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::Caps;
use crate::maps::{extend_into_linf, is_eps_isometric, EpsStar, LinearMap};
use crate::pushout::{mediate, pushout, PushoutResult, PushoutVariant};
use crate::spaces::{is_linf_isometric, PolyhedralSpace, Subspace};
use crate::{Matrix, Rational};

use super::{
    Certificate, CertificateChecks, CertificateWitness, ChainStage, EmbeddingRequest, Retraction,
    StageWitness,
};

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Satisfaction {
    /// `stage` is `None` when the amalgam equals the current stage.
    Satisfied {
        stage: Option<ChainStage>,
        certificate: Certificate,
        pushout: Box<PushoutResult>,
        /// Reorders the coordinates of the amalgam so the old stage comes
        /// first.
        permutation: Matrix,
    },
    NotApplicable {
        certificate: Certificate,
    },
    Deferred {
        reason: String,
    },
}

fn certificate(stage: &ChainStage, r: &EmbeddingRequest, eps_star: EpsStar) -> Certificate {
    Certificate {
        index: 0,
        step: 0,
        round: 0,
        scheduled_at: stage.index,
        request: r.clone(),
        applicable: false,
        eps_star,
        witness: None,
        checks: CertificateChecks {
            isometric: false,
            restricts: false,
        },
    }
}

/// Builds the next stage for `r`, or explains why the stage stays. The
/// returned certificate has placeholder index, step and round.
pub fn satisfy_request(stage: &ChainStage, r: &EmbeddingRequest) -> Result<Satisfaction> {
    match try_satisfy(stage, r) {
        Err(e) if e.is_resource() => Ok(Satisfaction::Deferred {
            reason: e.to_string(),
        }),
        other => other,
    }
}

/// `W = [X rest; Y]` to `[Y; X rest]`.
fn restack(rest: usize, s: usize) -> Matrix {
    let mut p = Matrix::zeros(rest + s, rest + s);
    for t in 0..s {
        p[(t, rest + t)] = Rational::one();
    }
    for k in 0..rest {
        p[(s + k, k)] = Rational::one();
    }
    p
}

fn try_satisfy(stage: &ChainStage, r: &EmbeddingRequest) -> Result<Satisfaction> {
    let f = r.f_map(&stage.space)?;
    let eps = r.eps();
    let report = f.distortion()?;
    if !report.within(&eps, false) {
        return Ok(Satisfaction::NotApplicable {
            certificate: certificate(stage, r, report.eps_star),
        });
    }
    let (d, e, s) = (r.f_space().dim(), r.e.dim(), stage.dim());
    Caps::global().check_dim(s + d - e)?;

    // The pushout wants ||f|| <= 1; shrinking f by scaling up the norm of F
    // leaves g within 1/n in the original norm.
    let one = Rational::one();
    let scale = std::cmp::max(report.op_norm.clone(), one.clone());
    let eps_p = match &report.min_gain {
        Some(m) => &scale / m - &one,
        None => Rational::zero(),
    };
    let big_f = r.f_space().scaled(&scale)?;
    let sub = Subspace::new(big_f.clone(), r.e.basis().clone())?;
    let z = sub.induced()?;
    let i = LinearMap::new(z.clone(), big_f, r.e.basis().clone())?;
    let fp = LinearMap::new(z, stage.space.clone(), f.matrix().clone())?;
    let p = pushout(&i, &fp, &eps_p, PushoutVariant::Standard)?;

    let permutation = restack(d - e, s);
    let space = p.w.transformed(&permutation)?;
    debug_assert_eq!(
        permutation.mul(p.j.matrix())?,
        Matrix::identity(s).pad_rows(s + d - e)
    );
    let target = if d == e && space == stage.space {
        None
    } else {
        Some(stage.child(
            space.clone(),
            StageWitness::Pushout {
                certificate: 0,
                eps: eps_p,
                scale,
            },
        ))
    };
    let g = LinearMap::new(r.f_space().clone(), space, permutation.mul(p.g.matrix())?)?;
    let (isometric, g_report) = is_eps_isometric(&g, &eps, false)?;
    let restricts = g.matrix().mul(r.e.basis())? == r.f_matrix.pad_rows(g.codomain().dim());
    if !(isometric && restricts) {
        return Err(Error::Verification(format!(
            "witness for request failed: eps* = {}, restricts = {restricts}",
            g_report.eps_star
        )));
    }
    let mut cert = certificate(stage, r, report.eps_star);
    cert.applicable = true;
    cert.witness = Some(CertificateWitness {
        stage: target.as_ref().map_or(stage.index, |t| t.index),
        g,
    });
    cert.checks = CertificateChecks {
        isometric,
        restricts,
    };
    Ok(Satisfaction::Satisfied {
        stage: target,
        certificate: cert,
        pushout: Box::new(p),
        permutation,
    })
}

#[derive(Clone, Debug)]
pub enum EnvelopeOutcome {
    Extended {
        stage: Box<ChainStage>,
    },
    /// The stage is already `linf(m)` in its coordinates.
    Unchanged,
    Deferred {
        reason: String,
    },
}

/// Embeds the stage in `linf(k)`, `k` the number of functional pairs, and
/// re-coordinatizes so the old coordinates come first: the new coordinates
/// are the old ones followed by the `linf` coordinates not already spanned.
pub fn linf_envelope(stage: &ChainStage) -> Result<EnvelopeOutcome> {
    match try_envelope(stage) {
        Err(e) if e.is_resource() => Ok(EnvelopeOutcome::Deferred {
            reason: e.to_string(),
        }),
        other => other,
    }
}

fn try_envelope(stage: &ChainStage) -> Result<EnvelopeOutcome> {
    let s = stage.dim();
    let fs = stage.space.functionals();
    let k = fs.len();
    Caps::global().check_dim(k)?;
    let phi = Matrix::from_rows(s, fs.to_vec())?;
    let (_, pivots) = phi.column_echelon();
    let extra: Vec<usize> = (0..k).filter(|r| !pivots.contains(r)).collect();
    let change = phi.hstack(&Matrix::identity(k).select_cols(&extra))?;
    let space = PolyhedralSpace::from_functionals(k, change.row_vecs())?;
    if space == stage.space {
        return Ok(EnvelopeOutcome::Unchanged);
    }
    for v in stage.space.vertices() {
        let mut w = v.clone();
        w.resize(k, Rational::zero());
        if space.norm(&w)? != Rational::one() {
            return Err(Error::Verification(
                "envelope does not extend the stage norm".into(),
            ));
        }
    }
    let witness = is_linf_isometric(&space)
        .ok_or_else(|| Error::Verification("envelope is not linf".into()))?;
    Ok(EnvelopeOutcome::Extended {
        stage: Box::new(stage.child(
            space,
            StageWitness::Envelope {
                coordinates: witness.matrix().clone(),
            },
        )),
    })
}

fn line() -> PolyhedralSpace {
    PolyhedralSpace::linf(1).expect("dimension 1")
}

/// Carries a retraction `old: Y -> linf(1)` across the amalgam: extend
/// `old o f` from `E` to `F` in `linf(1)`, then take the mediating map.
pub(crate) fn retraction_through_pushout(
    old: &Matrix,
    p: &PushoutResult,
    permutation: &Matrix,
    stage: usize,
) -> Result<Retraction> {
    let sub = Subspace::new(p.i.codomain().clone(), p.i.matrix().clone())?;
    let on_e = LinearMap::new(p.i.domain().clone(), line(), old.mul(p.f.matrix())?)?;
    let t = extend_into_linf(&on_e, &sub)?;
    let s = LinearMap::new(p.f.codomain().clone(), line(), old.clone())?;
    let h = mediate(p, &t, &s)?;
    Ok(Retraction {
        stage,
        matrix: h.matrix().mul(&permutation.transpose())?,
    })
}

/// Extends a retraction from a stage to its envelope, whose first
/// coordinates are the stage's.
pub(crate) fn retraction_into_envelope(
    old: &Matrix,
    from: &ChainStage,
    to: &ChainStage,
) -> Result<Retraction> {
    let sub = Subspace::new(
        to.space.clone(),
        Matrix::identity(from.dim()).pad_rows(to.dim()),
    )?;
    let t = LinearMap::new(from.space.clone(), line(), old.clone())?;
    let ext = extend_into_linf(&t, &sub)?;
    Ok(Retraction {
        stage: to.index,
        matrix: ext.matrix().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational::{int, ratio};

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    fn request(
        f_space: PolyhedralSpace,
        basis: Matrix,
        f_matrix: Matrix,
        n: u32,
    ) -> EmbeddingRequest {
        EmbeddingRequest {
            e: Subspace::new(f_space, basis).unwrap(),
            f_matrix,
            n,
            complexity: 1,
        }
    }

    fn satisfied(s: Satisfaction) -> (Option<ChainStage>, Certificate) {
        match s {
            Satisfaction::Satisfied {
                stage, certificate, ..
            } => (stage, certificate),
            other => panic!("expected a satisfied request, got {other:?}"),
        }
    }

    #[test]
    fn identity_request_is_a_no_op() {
        let st = ChainStage::initial();
        let r = request(
            PolyhedralSpace::linf(1).unwrap(),
            Matrix::identity(1),
            Matrix::identity(1),
            1,
        );
        let (stage, cert) = satisfied(satisfy_request(&st, &r).unwrap());
        assert!(stage.is_none());
        let w = cert.witness.unwrap();
        assert_eq!(w.stage, 0);
        assert_eq!(w.g.matrix(), &Matrix::identity(1));
    }

    #[test]
    fn line_into_square() {
        let st = ChainStage::initial();
        let e1 = Matrix::from_cols(2, vec![v(&[1, 0])]).unwrap();
        let r = request(
            PolyhedralSpace::linf(2).unwrap(),
            e1,
            Matrix::identity(1),
            3,
        );
        let (stage, cert) = satisfied(satisfy_request(&st, &r).unwrap());
        let stage = stage.unwrap();
        assert_eq!(stage.dim(), 2);
        assert_eq!(stage.support, vec![0, 1]);
        assert_eq!(stage.space.norm(&v(&[1, 0])).unwrap(), int(1));
        let w = cert.witness.unwrap();
        assert!(w.g.distortion().unwrap().eps_star.is_zero());
        assert!(cert.checks.isometric && cert.checks.restricts);
    }

    #[test]
    fn distorted_f_is_not_applicable() {
        let st = ChainStage::initial();
        let r = request(
            PolyhedralSpace::linf(1).unwrap(),
            Matrix::identity(1),
            Matrix::from_rows(1, vec![v(&[2])]).unwrap(),
            2,
        );
        match satisfy_request(&st, &r).unwrap() {
            Satisfaction::NotApplicable { certificate } => {
                assert!(!certificate.applicable);
                assert_eq!(certificate.eps_star, EpsStar::Finite(int(1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn long_f_is_rescaled() {
        // ||f|| = 3/2 <= 1 + 1/1: needs the rescaled pushout
        let st = ChainStage::initial();
        let f = Matrix::from_rows(1, vec![vec![ratio(3, 2)]]).unwrap();
        let e1 = Matrix::from_cols(2, vec![v(&[1, 0])]).unwrap();
        let r = request(PolyhedralSpace::l1(2).unwrap(), e1, f, 1);
        let (stage, cert) = satisfied(satisfy_request(&st, &r).unwrap());
        assert_eq!(stage.unwrap().dim(), 2);
        let g = cert.witness.unwrap().g;
        assert!(g.distortion().unwrap().within(&int(1), false));
    }

    #[test]
    fn cap_overflow_defers() {
        let mut st = ChainStage::initial();
        st.space = PolyhedralSpace::linf(6).unwrap();
        let r = request(
            PolyhedralSpace::linf(1).unwrap(),
            Matrix::zeros(1, 0),
            Matrix::zeros(6, 0),
            1,
        );
        assert!(matches!(
            satisfy_request(&st, &r).unwrap(),
            Satisfaction::Deferred { .. }
        ));
    }

    #[test]
    fn diamond_is_its_own_envelope() {
        // (x1 + x2, x1 - x2) already identifies l1(2) with linf(2)
        let st = ChainStage::initial_with(PolyhedralSpace::l1(2).unwrap());
        assert!(matches!(
            linf_envelope(&st).unwrap(),
            EnvelopeOutcome::Unchanged
        ));
        let w = is_linf_isometric(&st.space).unwrap();
        assert_eq!(w.matrix().row_vecs(), vec![v(&[1, 1]), v(&[1, -1])]);
    }

    #[test]
    fn envelope_of_a_hexagon() {
        let hex =
            PolyhedralSpace::from_functionals(2, vec![v(&[1, 0]), v(&[0, 1]), v(&[1, 1])]).unwrap();
        let st = ChainStage::initial_with(hex.clone());
        let EnvelopeOutcome::Extended { stage } = linf_envelope(&st).unwrap() else {
            panic!("hexagon has three functional pairs");
        };
        assert_eq!(stage.dim(), 3);
        assert!(is_linf_isometric(&stage.space).is_some());
        let sub = Subspace::new(stage.space.clone(), Matrix::identity(2).pad_rows(3)).unwrap();
        assert_eq!(sub.induced().unwrap(), hex);
    }

    #[test]
    fn envelope_sizes() {
        let st = ChainStage::initial_with(PolyhedralSpace::linf(3).unwrap());
        assert!(matches!(
            linf_envelope(&st).unwrap(),
            EnvelopeOutcome::Unchanged
        ));
        let st = ChainStage::initial_with(PolyhedralSpace::l1(3).unwrap());
        let EnvelopeOutcome::Extended { stage } = linf_envelope(&st).unwrap() else {
            panic!()
        };
        assert_eq!(stage.support.len(), 4);
    }

    #[test]
    fn envelope_cap_defers() {
        let st = ChainStage::initial_with(PolyhedralSpace::l1(4).unwrap());
        assert!(matches!(
            linf_envelope(&st).unwrap(),
            EnvelopeOutcome::Deferred { .. }
        ));
    }
}
