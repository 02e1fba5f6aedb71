//! Seeded random instances, independent oracles and the property suites
//! shared by the acceptance tests and the `verify-suite` command.
//!
//! Each suite draws its cases from `ChaCha8Rng` streams keyed by
//! `(seed, case index)`, runs them in parallel and reports failures in case
//! order, so the outcome does not depend on thread scheduling.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{certify, run_chain_with, transcript, ChainConfig, ChainRun, Mode};
use crate::exact::lp::{lp_solve, Constraint, Sense};
use crate::exact::polytope::SymmetricPolytope;
use crate::exact::rational::{int, ratio, to_string};
use crate::exact::{self, Caps};
use crate::maps::{extend_into_linf, extend_norm, is_eps_isometric, linf_embedding, LinearMap};
use crate::pushout::{mediate, pushout, PushoutResult, PushoutVariant};
use crate::spaces::{PolyhedralSpace, Subspace};
use crate::{Matrix, Rational, Result, Vector};

/// Outcome of one property suite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn case_rng(seed: u64, case: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(case as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Run `cases` independent checks in parallel; each returns the list of
/// violated properties for its case.
fn run_cases<F>(name: &str, cases: usize, seed: u64, check: F) -> SuiteReport
where
    F: Fn(&mut ChaCha8Rng) -> Vec<String> + Sync,
{
    let per_case: Vec<Vec<String>> = (0..cases)
        .into_par_iter()
        .map(|c| {
            let mut rng = case_rng(seed, c);
            check(&mut rng)
                .into_iter()
                .map(|msg| format!("case {c}: {msg}"))
                .collect()
        })
        .collect();
    SuiteReport {
        name: name.to_string(),
        cases,
        failures: per_case.into_iter().flatten().collect(),
    }
}

fn err(what: &str, e: impl std::fmt::Display) -> Vec<String> {
    vec![format!("{what}: {e}")]
}

// ---------------------------------------------------------------- generators

/// A rational `p/q` with `|p| <= num`, `1 <= q <= den`.
pub fn small_rational(rng: &mut impl Rng, num: i64, den: i64) -> Rational {
    ratio(rng.random_range(-num..=num), rng.random_range(1..=den))
}

fn small_vector(rng: &mut impl Rng, len: usize, num: i64, den: i64) -> Vector {
    (0..len).map(|_| small_rational(rng, num, den)).collect()
}

fn small_matrix(rng: &mut impl Rng, rows: usize, cols: usize, num: i64) -> Matrix {
    Matrix::from_rows(
        cols,
        (0..rows).map(|_| small_vector(rng, cols, num, 1)).collect(),
    )
    .expect("row lengths by construction")
}

/// Random polyhedral space of dimension `dim` with `dim..=dim+2` defining
/// functionals.
pub fn random_space(rng: &mut impl Rng, dim: usize) -> PolyhedralSpace {
    if dim == 0 {
        return PolyhedralSpace::zero();
    }
    loop {
        let count = rng.random_range(dim..=dim + 2);
        let fs = (0..count).map(|_| small_vector(rng, dim, 3, 2)).collect();
        if let Ok(space) = PolyhedralSpace::from_functionals(dim, fs) {
            return space;
        }
    }
}

/// Random full-column-rank `rows x cols` integer matrix.
pub fn random_basis(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    loop {
        let m = small_matrix(rng, rows, cols, 2);
        if m.rank() == cols {
            return m;
        }
    }
}

fn random_invertible(rng: &mut impl Rng, n: usize) -> Matrix {
    random_basis(rng, n, n)
}

/// A random pushout instance: `i: Z -> X` isometric and `f: Z -> Y` with
/// `||f|| <= 1` and `min_gain(f) >= (1+eps)^{-1}`.
pub fn random_instance(rng: &mut impl Rng, eps: &Rational) -> (LinearMap, LinearMap) {
    let dz = rng.random_range(0..=2usize);
    let dx = rng.random_range(dz.max(1)..=3);
    let dy = rng.random_range(dz.max(1)..=3);
    let x = random_space(rng, dx);
    let b = random_basis(rng, dx, dz);
    let z = Subspace::new(x.clone(), b.clone())
        .expect("full rank")
        .induced()
        .expect("induced");
    let i = LinearMap::new(z.clone(), x, b).expect("shape");
    let f = random_near_isometry(rng, &z, dy, eps);
    (i, f)
}

/// `f: Z -> Y` with `dim Y = dy`: an isometric embedding into
/// `Z (+)_inf R` moved by a random invertible map, then perturbed within the
/// allowed distortion.
fn random_near_isometry(
    rng: &mut impl Rng,
    z: &PolyhedralSpace,
    dy: usize,
    eps: &Rational,
) -> LinearMap {
    let dz = z.dim();
    let rest = random_space(rng, dy - dz);
    let mut fs: Vec<Vector> = Vec::new();
    for a in z.functionals() {
        let mut v = a.clone();
        v.resize(dy, Rational::zero());
        fs.push(v);
    }
    for a in rest.functionals() {
        let mut v = vec![Rational::zero(); dz];
        v.extend(a.iter().cloned());
        fs.push(v);
    }
    let base = if dy == 0 {
        PolyhedralSpace::zero()
    } else {
        PolyhedralSpace::from_functionals(dy, fs).expect("direct sum is a norm")
    };
    let t = random_invertible(rng, dy);
    let y = base.transformed(&t).expect("invertible");
    let f0 = t
        .mul(&Matrix::identity(dy).select_cols(&(0..dz).collect::<Vec<_>>()))
        .expect("shape");
    if eps.is_zero() || dz == 0 {
        return LinearMap::new(z.clone(), y, f0).expect("shape");
    }
    let lower = (Rational::one() + eps).recip();
    let noise = small_matrix(rng, dy, dz, 1);
    let mut delta = eps / int(4);
    for _ in 0..6 {
        let m = f0.add(&noise.scale(&delta)).expect("shape");
        let mut f = LinearMap::new(z.clone(), y.clone(), m).expect("shape");
        let norm = f.operator_norm();
        if norm > Rational::one() {
            f = LinearMap::new(z.clone(), y.clone(), f.matrix().scale(&norm.recip()))
                .expect("shape");
        }
        if f.min_gain().ok().flatten().is_some_and(|g| g >= lower) {
            return f;
        }
        delta /= int(2);
    }
    LinearMap::new(z.clone(), y, f0).expect("shape")
}

// ------------------------------------------------------------------ oracles

/// `inf_z ||x + i z||_X + ||f z||_Y` by a single LP in `(z, s, u)`,
/// independent of the polytope computation of `W`.
pub fn quotient_norm_oracle(p: &PushoutResult, x: &[Rational]) -> Result<Rational> {
    let dz = p.i.domain().dim();
    let nv = dz + 2;
    let mut cons = Vec::new();
    let push = |cons: &mut Vec<Constraint<Rational>>,
                zc: Vector,
                s: Rational,
                u: Rational,
                b: Rational| {
        let mut c = zc;
        c.push(s);
        c.push(u);
        cons.push(Constraint::new(c, b));
    };
    for phi in p.i.codomain().functionals() {
        let zc = p.i.matrix().transpose().mul_vec(phi)?;
        let px = exact::dot(phi, x);
        for sign in [Rational::one(), -Rational::one()] {
            let c = zc.iter().map(|a| a * &sign).collect();
            push(
                &mut cons,
                c,
                -Rational::one(),
                Rational::zero(),
                -(&sign * &px),
            );
        }
    }
    for psi in p.f.codomain().functionals() {
        let zc = p.f.matrix().transpose().mul_vec(psi)?;
        for sign in [Rational::one(), -Rational::one()] {
            let c = zc.iter().map(|a| a * &sign).collect();
            push(
                &mut cons,
                c,
                Rational::zero(),
                -Rational::one(),
                Rational::zero(),
            );
        }
    }
    let mut objective = vec![Rational::zero(); nv];
    objective[dz] = Rational::one();
    objective[dz + 1] = Rational::one();
    let sol = lp_solve(&objective, &cons, Sense::Minimize)?
        .optimal()
        .ok_or_else(|| crate::Error::Verification("quotient oracle LP has no optimum".into()))?;
    Ok(sol.value)
}

/// The gauge of the symmetric hull of `points` at `x`: `max phi.x` over
/// `{phi : |phi.v| <= 1}`.
pub fn gauge_oracle(points: &[Vector], x: &[Rational]) -> Result<Rational> {
    let cons: Vec<_> = points
        .iter()
        .flat_map(|v| {
            [
                Constraint::new(v.clone(), Rational::one()),
                Constraint::new(exact::negated(v), Rational::one()),
            ]
        })
        .collect();
    lp_solve(x, &cons, Sense::Maximize)?
        .optimal()
        .map(|s| s.value)
        .ok_or_else(|| crate::Error::Verification("gauge LP has no optimum".into()))
}

// ------------------------------------------------------------------- suites

const EPS_CHOICES: [(i64, i64); 4] = [(0, 1), (1, 4), (1, 2), (1, 1)];

fn pick_eps(rng: &mut impl Rng) -> Rational {
    let (p, q) = EPS_CHOICES[rng.random_range(0..EPS_CHOICES.len())];
    ratio(p, q)
}

/// Square commutes; `j` isometric at every vertex of `B_Y`; the two-sided
/// bound on `g` at every vertex of `B_X`; `g` isometric when `eps = 0`.
pub fn pushout_suite(cases: usize, seed: u64) -> SuiteReport {
    run_cases("pushout lemma", cases, seed, |rng| {
        let eps = pick_eps(rng);
        let (i, f) = random_instance(rng, &eps);
        let p = match pushout(&i, &f, &eps, PushoutVariant::Standard) {
            Ok(p) => p,
            Err(e) => return err("pushout", e),
        };
        let mut out = Vec::new();
        let gi = p.g.matrix().mul(i.matrix()).expect("shape");
        if gi != p.j.matrix().mul(f.matrix()).expect("shape") {
            out.push("g o i != j o f".to_string());
        }
        for y in f.codomain().vertices() {
            let ny = p.w.norm(&p.j.apply(y).expect("shape")).expect("dim");
            if ny != Rational::one() {
                out.push(format!("||j(y)|| = {} at a vertex of B_Y", to_string(&ny)));
            }
        }
        let lower = (Rational::one() + &eps).recip();
        for x in i.codomain().vertices() {
            let nx = p.w.norm(&p.g.apply(x).expect("shape")).expect("dim");
            if nx > Rational::one() || nx < lower {
                out.push(format!(
                    "||g(x)|| = {} outside [{}, 1]",
                    to_string(&nx),
                    to_string(&lower)
                ));
            }
        }
        if eps.is_zero() && !p.g_report.eps_star.is_zero() {
            out.push(format!("eps = 0 but eps*(g) = {}", p.g_report.eps_star));
        }
        out
    })
}

pub fn quotient_oracle_suite(cases: usize, points: usize, seed: u64) -> SuiteReport {
    run_cases("quotient-norm oracle", cases, seed, |rng| {
        let eps = pick_eps(rng);
        let (i, f) = random_instance(rng, &eps);
        let p = match pushout(&i, &f, &eps, PushoutVariant::Standard) {
            Ok(p) => p,
            Err(e) => return err("pushout", e),
        };
        let dx = i.codomain().dim();
        let mut out = Vec::new();
        for _ in 0..points {
            let x = small_vector(rng, dx, 5, 4);
            let poly = p.w.norm(&p.g.apply(&x).expect("shape")).expect("dim");
            match quotient_norm_oracle(&p, &x) {
                Ok(lp) if lp == poly => {}
                Ok(lp) => out.push(format!(
                    "||g(x)|| = {} but LP gives {}",
                    to_string(&poly),
                    to_string(&lp)
                )),
                Err(e) => out.push(format!("oracle: {e}")),
            }
        }
        out
    })
}

/// `linf_embedding` is isometric; `extend_into_linf` keeps the norm and the
/// restriction exactly.
pub fn linf_suite(cases: usize, seed: u64) -> SuiteReport {
    run_cases("linf embedding and extension", cases, seed, |rng| {
        let mut out = Vec::new();
        let d = rng.random_range(1..=4usize);
        let space = random_space(rng, d);
        match linf_embedding(&space).distortion() {
            Ok(r) if r.eps_star.is_zero() => {}
            Ok(r) => out.push(format!("linf_embedding has eps* = {}", r.eps_star)),
            Err(e) => out.push(format!("distortion: {e}")),
        }

        let d = rng.random_range(1..=3usize);
        let k = rng.random_range(1..=d);
        let n = rng.random_range(1..=3usize);
        let f = random_space(rng, d);
        let e = Subspace::new(f, random_basis(rng, d, k)).expect("rank");
        let induced = e.induced().expect("induced");
        let t = LinearMap::new(
            induced,
            PolyhedralSpace::linf_or_zero(n),
            small_matrix(rng, n, k, 3),
        )
        .expect("shape");
        match extend_into_linf(&t, &e) {
            Ok(ext) => {
                if ext.operator_norm() != t.operator_norm() {
                    out.push("extension norm differs from ||T||".into());
                }
                if ext.matrix().mul(e.basis()).expect("shape") != *t.matrix() {
                    out.push("extension does not restrict to T".into());
                }
            }
            Err(e) => out.push(format!("extend_into_linf: {e}")),
        }
        out
    })
}

/// Random strictly eps-equivalent norms on a subspace: rescale each induced
/// functional by a factor strictly inside `((1+eps)^{-1}, 1+eps)`.
pub fn random_equivalent_norm(rng: &mut impl Rng, e: &Subspace, eps: &Rational) -> PolyhedralSpace {
    let induced = e.induced().expect("induced");
    let lo = (Rational::one() + eps).recip();
    let hi = Rational::one() + eps;
    let span = &hi - &lo;
    loop {
        let fs: Vec<Vector> = induced
            .functionals()
            .iter()
            .map(|a| {
                let k = rng.random_range(1..8);
                let c = &lo + &span * ratio(k, 8);
                exact::scaled(a, &c)
            })
            .collect();
        if let Ok(n) = PolyhedralSpace::from_functionals(induced.dim(), fs) {
            return n;
        }
    }
}

pub fn norm_extension_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut report = run_cases("norm extension", cases, seed, |rng| {
        let eps = [ratio(1, 4), ratio(1, 2), int(1)][rng.random_range(0..3)].clone();
        let d = rng.random_range(1..=3usize);
        let k = rng.random_range(1..=d);
        let f = random_space(rng, d);
        let e = Subspace::new(f.clone(), random_basis(rng, d, k)).expect("rank");
        let new = random_equivalent_norm(rng, &e, &eps);
        let out_space = match extend_norm(&e, &new, &eps) {
            Ok(s) => s,
            Err(e) => return err("extend_norm", e),
        };
        let mut out = Vec::new();
        for u in new.vertices() {
            let n = out_space
                .norm(&e.basis().mul_vec(u).expect("shape"))
                .expect("dim");
            if n != Rational::one() {
                out.push(format!(
                    "extended norm is {} at a vertex of the new ball",
                    to_string(&n)
                ));
            }
        }
        let id = LinearMap::new(f, out_space, Matrix::identity(d)).expect("shape");
        match is_eps_isometric(&id, &eps, false) {
            Ok((true, _)) => {}
            Ok((false, r)) => out.push(format!(
                "identity has eps* = {} > {}",
                r.eps_star,
                to_string(&eps)
            )),
            Err(e) => out.push(format!("distortion: {e}")),
        }
        out
    });
    let linf2 = PolyhedralSpace::linf(2).expect("linf");
    let e1 = Subspace::new(
        linf2,
        Matrix::from_cols(2, vec![vec![int(1), int(0)]]).expect("shape"),
    )
    .expect("rank");
    let double = PolyhedralSpace::from_functionals(1, vec![vec![int(2)]]).expect("norm");
    match extend_norm(&e1, &double, &int(1)) {
        Err(crate::Error::Precondition(_)) => {}
        other => report
            .failures
            .push(format!("boundary input not rejected: {other:?}")),
    }
    report.cases += 1;
    report
}

/// Random symmetric V-representation with up to 12 generators.
pub fn random_vrep(rng: &mut impl Rng, dim: usize) -> Vec<Vector> {
    loop {
        let count = rng.random_range(dim..=12usize.max(dim));
        let pts: Vec<Vector> = (0..count).map(|_| small_vector(rng, dim, 15, 8)).collect();
        if Matrix::from_rows(dim, pts.clone()).expect("shape").rank() == dim {
            return pts;
        }
    }
}

/// V -> H -> V reproduces the canonical input; H- and V-membership agree
/// with an LP gauge oracle on a rational grid sample.
pub fn dd_roundtrip_suite(cases: usize, grid_points: usize, seed: u64) -> SuiteReport {
    run_cases("double description roundtrip", cases, seed, |rng| {
        let dim = rng.random_range(1..=4usize);
        let pts = random_vrep(rng, dim);
        let caps = Caps::global();
        let p = match SymmetricPolytope::from_vrep(dim, pts.clone())
            .and_then(|p| p.dd_convert(&caps))
        {
            Ok(p) => p,
            Err(e) => return err("V->H", e),
        };
        let q = match SymmetricPolytope::from_hrep(dim, p.hrep().expect("both").to_vec())
            .and_then(|q| q.dd_convert(&caps))
        {
            Ok(q) => q,
            Err(e) => return err("H->V", e),
        };
        let mut out = Vec::new();
        if q.vrep() != p.vrep() || q.hrep() != p.hrep() {
            out.push("roundtrip changed the canonical polytope".into());
        }
        if p.canonicalize().ok().as_ref() != Some(&p) {
            out.push("canonicalize is not idempotent".into());
        }
        for v in p.vrep().expect("both") {
            let tight: Vec<Vector> = p
                .hrep()
                .expect("both")
                .iter()
                .filter(|a| exact::dot(a, v).abs() == Rational::one())
                .cloned()
                .collect();
            if p.hrep()
                .expect("both")
                .iter()
                .any(|a| exact::dot(a, v).abs() > Rational::one())
            {
                out.push("a vertex violates a facet inequality".into());
            }
            if Matrix::from_rows(dim, tight).expect("shape").rank() != dim {
                out.push("a vertex is not tight at dim independent facets".into());
            }
        }
        let bound = pts
            .iter()
            .flatten()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::one);
        for _ in 0..grid_points {
            let x: Vector = (0..dim)
                .map(|_| &bound * ratio(rng.random_range(-16..=16), 12))
                .collect();
            let inside_h = p.contains(&x).expect("hrep");
            match gauge_oracle(&pts, &x) {
                Ok(g) if (g <= Rational::one()) == inside_h => {}
                Ok(g) => out.push(format!(
                    "membership disagrees: gauge {} vs H-rep {inside_h}",
                    to_string(&g)
                )),
                Err(e) => out.push(format!("gauge oracle: {e}")),
            }
        }
        out
    })
}

/// Compatible `(T, S)`: `S` random, `T` prescribed on `i(Z)` by `S o f` and
/// random on a complement.
pub fn mediate_suite(cases: usize, seed: u64) -> SuiteReport {
    run_cases("mediating map", cases, seed, |rng| {
        let eps = pick_eps(rng);
        let (i, f) = random_instance(rng, &eps);
        let p = match pushout(&i, &f, &eps, PushoutVariant::Standard) {
            Ok(p) => p,
            Err(e) => return err("pushout", e),
        };
        let dv = rng.random_range(1..=3usize);
        let v = random_space(rng, dv);
        let (dx, dy, dz) = (i.codomain().dim(), f.codomain().dim(), i.domain().dim());
        let s_mat = small_matrix(rng, dv, dy, 2);
        // Complete the columns of i to a basis [i C] of X.
        let mut full = i.matrix().clone();
        for k in 0..dx {
            let mut e = Matrix::zeros(dx, 1);
            e[(k, 0)] = Rational::one();
            let cand = full.hstack(&e).expect("rows");
            if cand.rank() > full.rank() {
                full = cand;
            }
        }
        let images = s_mat
            .mul(f.matrix())
            .expect("shape")
            .hstack(&small_matrix(rng, dv, dx - dz, 2))
            .expect("rows");
        let t_mat = images.mul(&full.inverse().expect("basis")).expect("shape");
        let t = LinearMap::new(i.codomain().clone(), v.clone(), t_mat).expect("shape");
        let s = LinearMap::new(f.codomain().clone(), v, s_mat).expect("shape");
        let h = match mediate(&p, &t, &s) {
            Ok(h) => h,
            Err(e) => return err("mediate", e),
        };
        let mut out = Vec::new();
        if h.matrix().mul(p.g.matrix()).expect("shape") != *t.matrix() {
            out.push("h o g != T".into());
        }
        if h.matrix().mul(p.j.matrix()).expect("shape") != *s.matrix() {
            out.push("h o j != S".into());
        }
        let bound = std::cmp::max(t.operator_norm(), s.operator_norm());
        if h.operator_norm() > bound {
            out.push(format!(
                "||h|| = {} > {}",
                to_string(&h.operator_norm()),
                to_string(&bound)
            ));
        }
        out
    })
}

// ---------------------------------------------------------------- chains

fn transcript_of(config: &ChainConfig) -> Result<(ChainRun, String)> {
    let mut text = String::new();
    let run = run_chain_with(config, |r| {
        text.push_str(&r.to_line());
        text.push('\n');
        Ok(())
    })?;
    Ok((run, text))
}

/// Runs the chain twice per seed with the default caps, requiring identical
/// transcripts, a clean certification and the mode's structural checks.
pub fn chain_suite(mode: Mode, steps: usize, seeds: &[u64]) -> SuiteReport {
    let per_seed: Vec<Vec<String>> = seeds
        .par_iter()
        .map(|&seed| {
            let config = ChainConfig {
                steps,
                seed,
                mode,
                ..ChainConfig::default()
            };
            let (first, second) = match (transcript_of(&config), transcript_of(&config)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return err(&format!("seed {seed}: run"), e),
            };
            let mut out = Vec::new();
            if first.1 != second.1 {
                out.push("transcripts differ between runs".into());
            }
            let report = certify(&first.0);
            out.extend(report.failures.iter().cloned());
            if let Some(a) = &report.aborted {
                out.push(format!("run aborted: {a}"));
            }
            if report.verified != report.applicable {
                out.push(format!(
                    "{} of {} applicable certificates verified",
                    report.verified, report.applicable
                ));
            }
            match transcript::replay(&first.1) {
                Ok(r) if r == first.0 => {}
                Ok(_) => out.push("replayed transcript differs from the run".into()),
                Err(e) => out.push(format!("replay: {e}")),
            }
            if mode != Mode::Gurarii && report.envelope_stages == 0 {
                out.push("no envelope stage was reached".into());
            }
            if mode == Mode::Complemented && report.retractions != report.stages {
                out.push(format!(
                    "{} retractions for {} stages",
                    report.retractions, report.stages
                ));
            }
            out.into_iter()
                .map(|m| format!("seed {seed}: {m}"))
                .collect()
        })
        .collect();
    let name = match mode {
        Mode::Gurarii => "chain, gurarii mode",
        Mode::Lindenstrauss => "chain, lindenstrauss mode",
        Mode::Complemented => "chain, complemented mode",
    };
    SuiteReport {
        name: name.into(),
        cases: seeds.len(),
        failures: per_seed.into_iter().flatten().collect(),
    }
}
