use std::collections::BTreeMap;

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::exact::rational::to_string;
use crate::maps::LinearMap;
use crate::spaces::{is_linf_isometric, PolyhedralSpace};
use crate::{Matrix, Rational};

use super::{Certificate, ChainRun, ChainStage, Mode, StageWitness, StepAction, StepOutcome};

/// Requests scheduled at one complexity level, and what became of them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LevelCoverage {
    pub level: u32,
    pub scheduled: usize,
    pub satisfied: usize,
    pub not_applicable: usize,
    pub deferred: usize,
    /// Satisfied certificates at this level that re-verified.
    pub verified: usize,
    /// Same counts over all levels up to this one.
    pub scheduled_upto: usize,
    pub satisfied_upto: usize,
}

/// Finite-depth coverage only: which scheduled requests were met by this
/// run, never a claim about the limit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CertifyReport {
    pub stages: usize,
    pub final_dim: usize,
    pub steps: usize,
    pub certificates: usize,
    pub applicable: usize,
    pub verified: usize,
    pub deferred: usize,
    pub envelope_stages: usize,
    pub retractions: usize,
    pub levels: Vec<LevelCoverage>,
    pub failures: Vec<String>,
    pub aborted: Option<String>,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn coverage_csv(&self) -> String {
        let mut out = String::from("level,scheduled,satisfied,not_applicable,deferred,verified,scheduled_upto,satisfied_upto\n");
        for l in &self.levels {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                l.level,
                l.scheduled,
                l.satisfied,
                l.not_applicable,
                l.deferred,
                l.verified,
                l.scheduled_upto,
                l.satisfied_upto
            ));
        }
        out
    }
}

fn padded(v: &[Rational], n: usize) -> Vec<Rational> {
    let mut w = v.to_vec();
    w.resize(n, Rational::from_i64(0));
    w
}

/// `later` extends `earlier` on its first coordinates.
fn extends(earlier: &PolyhedralSpace, later: &PolyhedralSpace) -> Result<(), String> {
    if later.dim() < earlier.dim() {
        return Err(format!(
            "dimension drops from {} to {}",
            earlier.dim(),
            later.dim()
        ));
    }
    for v in earlier.vertices() {
        let n = later.norm_of(&padded(v, later.dim()));
        if !n.is_one() {
            return Err(format!(
                "vertex {:?} has norm {} != 1",
                crate::exact::rational::vec_to_strings(v),
                to_string(&n)
            ));
        }
    }
    Ok(())
}

fn first_difference(a: &Matrix, b: &Matrix) -> Option<(usize, usize)> {
    if a.shape() != b.shape() {
        return Some((a.rows().min(b.rows()), 0));
    }
    (0..a.rows())
        .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
        .find(|&(i, j)| a[(i, j)] != b[(i, j)])
}

/// Checks one certificate against the final stage; returns the violated
/// inequalities.
fn verify_certificate(c: &Certificate, stages: &[ChainStage]) -> Vec<String> {
    let mut out = Vec::new();
    let last = stages.last().expect("runs have a stage");
    let tag = format!("certificate {}", c.index);
    let eps = c.request.eps();
    let upper = Rational::one() + &eps;
    let lower = upper.recip();
    let f_final = match c.request.f_map(&last.space) {
        Ok(f) => f,
        Err(e) => return vec![format!("{tag}: {e}")],
    };
    if !c.applicable {
        if c.witness.is_some() {
            out.push(format!(
                "{tag}: non-applicable certificate carries a witness"
            ));
        }
        match f_final.distortion() {
            Ok(r) if r.within(&eps, false) => out.push(format!(
                "{tag}: marked non-applicable, but eps*(f) = {} <= 1/n = {}",
                r.eps_star,
                to_string(&eps)
            )),
            Ok(_) => {}
            Err(e) => out.push(format!("{tag}: {e}")),
        }
        return out;
    }
    let Some(w) = &c.witness else {
        return vec![format!("{tag}: applicable certificate has no witness")];
    };
    if !(c.checks.isometric && c.checks.restricts) {
        out.push(format!("{tag}: recorded checks are not both true"));
    }
    if w.g.domain() != c.request.f_space() {
        out.push(format!("{tag}: witness domain is not F"));
    }
    let rows = last.dim();
    if w.g.matrix().rows() > rows {
        return vec![format!(
            "{tag}: witness has {} rows, final stage has dimension {rows}",
            w.g.matrix().rows()
        )];
    }
    let g = match LinearMap::new(
        c.request.f_space().clone(),
        last.space.clone(),
        w.g.matrix().pad_rows(rows),
    ) {
        Ok(g) => g,
        Err(e) => return vec![format!("{tag}: {e}")],
    };
    match g.distortion() {
        Ok(r) => {
            if r.op_norm > upper {
                out.push(format!(
                    "{tag}: ||g|| = {} > 1 + 1/n = {}",
                    to_string(&r.op_norm),
                    to_string(&upper)
                ));
            }
            if let Some(m) = r.min_gain.as_ref().filter(|m| **m < lower) {
                out.push(format!(
                    "{tag}: min gain of g = {} < (1 + 1/n)^-1 = {}",
                    to_string(m),
                    to_string(&lower)
                ));
            }
        }
        Err(e) => out.push(format!("{tag}: {e}")),
    }
    match g.matrix().mul(c.request.e.basis()) {
        Ok(ge) => {
            if let Some((i, j)) = first_difference(&ge, f_final.matrix()) {
                let show = |m: &Matrix| {
                    if i < m.rows() && j < m.cols() {
                        to_string(&m[(i, j)])
                    } else {
                        "-".into()
                    }
                };
                out.push(format!(
                    "{tag}: (g restricted to E)[{i}][{j}] = {} != f[{i}][{j}] = {}",
                    show(&ge),
                    show(f_final.matrix())
                ));
            }
        }
        Err(e) => out.push(format!("{tag}: {e}")),
    }
    out
}

fn check_stages(run: &ChainRun, failures: &mut Vec<String>) {
    for (k, st) in run.stages.iter().enumerate() {
        if st.index != k {
            failures.push(format!("stage {k}: recorded index {}", st.index));
        }
        if st.support != (0..st.dim()).collect::<Vec<_>>() {
            failures.push(format!("stage {k}: support is not 0..{}", st.dim()));
        }
        let Some(p) = st.parent else {
            if k != 0 {
                failures.push(format!("stage {k}: no parent"));
            }
            continue;
        };
        if p >= k {
            failures.push(format!("stage {k}: parent {p} is not earlier"));
            continue;
        }
        if let Err(e) = extends(&run.stages[p].space, &st.space) {
            failures.push(format!("stage {k} does not extend stage {p}: {e}"));
        }
        if let StageWitness::Envelope { coordinates } = &st.witness {
            let witness = LinearMap::new(
                st.space.clone(),
                PolyhedralSpace::linf_or_zero(coordinates.rows()),
                coordinates.clone(),
            );
            if !witness.is_ok_and(|w| w.distortion().is_ok_and(|r| r.eps_star.is_zero())) {
                failures.push(format!(
                    "stage {k}: envelope witness is not an isometry onto linf"
                ));
            }
        }
    }
}

/// Stages current right after each envelope step that changed or confirmed
/// the stage.
fn envelope_stages(run: &ChainRun) -> Vec<usize> {
    let mut out: Vec<usize> = run
        .steps
        .iter()
        .filter(|s| {
            s.action == StepAction::Envelope
                && matches!(s.outcome, StepOutcome::Extended | StepOutcome::Unchanged)
        })
        .map(|s| s.stage)
        .collect();
    out.dedup();
    out
}

fn check_envelopes(run: &ChainRun, stages: &[usize], failures: &mut Vec<String>) {
    for &k in stages {
        if k >= run.stages.len() || is_linf_isometric(&run.stages[k].space).is_none() {
            failures.push(format!("envelope stage {k} is not isometric to linf"));
        }
    }
    for w in stages.windows(2) {
        if let Err(e) = extends(&run.stages[w[0]].space, &run.stages[w[1]].space) {
            failures.push(format!(
                "envelope stage {} does not embed in envelope stage {}: {e}",
                w[0], w[1]
            ));
        }
    }
}

fn check_retractions(run: &ChainRun, failures: &mut Vec<String>) {
    let mut prev: Option<&Matrix> = None;
    for r in &run.retractions {
        let tag = format!("retraction at stage {}", r.stage);
        let Some(st) = run.stages.get(r.stage) else {
            failures.push(format!("{tag}: no such stage"));
            continue;
        };
        if r.matrix.shape() != (1, st.dim()) {
            failures.push(format!("{tag}: shape {:?}", r.matrix.shape()));
            continue;
        }
        if !r.matrix[(0, 0)].is_one() {
            failures.push(format!(
                "{tag}: value on the initial line is {}",
                to_string(&r.matrix[(0, 0)])
            ));
        }
        match LinearMap::new(
            st.space.clone(),
            PolyhedralSpace::linf_or_zero(1),
            r.matrix.clone(),
        ) {
            Ok(m) if !m.operator_norm().is_one() => {
                failures.push(format!(
                    "{tag}: norm {} != 1",
                    to_string(&m.operator_norm())
                ));
            }
            Ok(_) => {}
            Err(e) => failures.push(format!("{tag}: {e}")),
        }
        if let Some(p) = prev {
            let cols: Vec<usize> = (0..p.cols()).collect();
            if p.cols() > r.matrix.cols() || r.matrix.select_cols(&cols) != *p {
                failures.push(format!(
                    "{tag}: does not restrict to the previous retraction"
                ));
            }
        }
        prev = Some(&r.matrix);
    }
    if run.config.mode == Mode::Complemented {
        let tracked: Vec<usize> = run.retractions.iter().map(|r| r.stage).collect();
        for st in &run.stages {
            if !tracked.contains(&st.index) {
                failures.push(format!("stage {} has no tracked retraction", st.index));
            }
        }
    }
}

/// Re-verifies every certificate against the final stage, checks the stage
/// chain and any envelope and retraction data, and tabulates coverage.
pub fn certify(run: &ChainRun) -> CertifyReport {
    let mut failures = Vec::new();
    check_stages(run, &mut failures);
    let per_cert: Vec<Vec<String>> = run
        .certificates
        .par_iter()
        .map(|c| verify_certificate(c, &run.stages))
        .collect();
    for (k, c) in run.certificates.iter().enumerate() {
        if c.index != k {
            failures.push(format!("certificate {k}: recorded index {}", c.index));
        }
    }
    let envs = envelope_stages(run);
    check_envelopes(run, &envs, &mut failures);
    check_retractions(run, &mut failures);

    let mut levels: BTreeMap<u32, LevelCoverage> = BTreeMap::new();
    for s in &run.steps {
        let StepAction::Request { complexity, .. } = s.action else {
            continue;
        };
        let l = levels.entry(complexity).or_insert_with(|| LevelCoverage {
            level: complexity,
            ..Default::default()
        });
        l.scheduled += 1;
        match &s.outcome {
            StepOutcome::Satisfied { certificate } => {
                l.satisfied += 1;
                if per_cert.get(*certificate).is_some_and(Vec::is_empty) {
                    l.verified += 1;
                }
            }
            StepOutcome::NotApplicable { .. } => l.not_applicable += 1,
            StepOutcome::Deferred { .. } => l.deferred += 1,
            _ => {}
        }
    }
    let (mut sched, mut sat) = (0, 0);
    for l in levels.values_mut() {
        sched += l.scheduled;
        sat += l.satisfied;
        l.scheduled_upto = sched;
        l.satisfied_upto = sat;
    }
    let applicable = run.certificates.iter().filter(|c| c.applicable).count();
    let verified = run
        .certificates
        .iter()
        .zip(&per_cert)
        .filter(|(c, f)| c.applicable && f.is_empty())
        .count();
    failures.extend(per_cert.into_iter().flatten());
    CertifyReport {
        stages: run.stages.len(),
        final_dim: run.final_stage().dim(),
        steps: run.steps.len(),
        certificates: run.certificates.len(),
        applicable,
        verified,
        deferred: levels.values().map(|l| l.deferred).sum(),
        envelope_stages: envs.len(),
        retractions: run.retractions.len(),
        levels: levels.into_values().collect(),
        failures,
        aborted: run.aborted.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{run_chain, ChainConfig};

    fn run(steps: usize, mode: Mode) -> ChainRun {
        run_chain(&ChainConfig {
            steps,
            mode,
            ..ChainConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn empty_run_has_an_empty_report() {
        let r = certify(&run(0, Mode::Gurarii));
        assert!(r.passed());
        assert_eq!((r.certificates, r.steps), (0, 0));
        assert!(r.levels.is_empty());
    }

    #[test]
    fn short_runs_verify() {
        for mode in [Mode::Gurarii, Mode::Lindenstrauss, Mode::Complemented] {
            let r = certify(&run(10, mode));
            assert!(r.passed(), "{mode:?}: {:?}", r.failures);
            assert_eq!(r.verified, r.applicable);
        }
    }

    #[test]
    fn report_is_a_function_of_the_run() {
        let a = run(8, Mode::Gurarii);
        assert_eq!(certify(&a), certify(&a.clone()));
    }

    #[test]
    fn tampering_is_reported() {
        let mut a = run(8, Mode::Gurarii);
        let k = a
            .certificates
            .iter()
            .position(|c| c.applicable && c.request.e.dim() > 0)
            .unwrap();
        let w = a.certificates[k].witness.as_mut().unwrap();
        let tripled = w.g.matrix().scale(&Rational::from_i64(3));
        w.g = LinearMap::new(w.g.domain().clone(), w.g.codomain().clone(), tripled).unwrap();
        let r = certify(&a);
        assert!(!r.passed());
        assert!(
            r.failures
                .iter()
                .any(|f| f.contains(&format!("certificate {k}: ||g|| = "))),
            "{:?}",
            r.failures
        );
        assert!(r.failures.iter().any(|f| f.contains("restricted to E")));
    }

    #[test]
    fn broken_retraction_is_reported() {
        let mut a = run(6, Mode::Complemented);
        let last = a.retractions.last_mut().unwrap();
        last.matrix = last.matrix.scale(&Rational::from_i64(2));
        let r = certify(&a);
        assert!(r
            .failures
            .iter()
            .any(|f| f.contains("value on the initial line is 2")));
    }
}
