//! Finite stages of the generic-sequence construction.
//!
//! A run starts from `linf(1)` on support `{0}` and processes a schedule of
//! embedding requests in rounds: round `r` lists every request of complexity
//! at most `r` over the stage current at the start of the round, so each
//! request family comes back in every later round. A satisfied request
//! amalgamates `F` into the stage; fresh coordinates are appended after the
//! existing ones, so every stage extends its parent's norm on a prefix of
//! the coordinates.

mod certify;
mod enumerate;
mod step;
pub mod transcript;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Caps;
use crate::maps::{EpsStar, LinearMap};
use crate::spaces::{PolyhedralSpace, Subspace};
use crate::{Matrix, Rational};

pub use certify::{certify, CertifyReport, LevelCoverage};
pub use enumerate::enumerate_requests;
pub use step::{linf_envelope, satisfy_request, EnvelopeOutcome, Satisfaction};
pub use transcript::Record;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Requests only.
    #[default]
    Gurarii,
    /// Every second step replaces the stage by its `linf` envelope.
    Lindenstrauss,
    /// As `Lindenstrauss`, also tracking a norm-one retraction onto the
    /// initial line.
    Complemented,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gurarii" => Ok(Mode::Gurarii),
            "lindenstrauss" => Ok(Mode::Lindenstrauss),
            "complemented" => Ok(Mode::Complemented),
            _ => Err(Error::Input(format!("unknown chain mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub steps: usize,
    /// Largest `dim F` a request may have.
    pub dim_cap: usize,
    /// Largest bit length of any numerator or denominator in a request.
    pub bit_cap: u32,
    /// `0` keeps the canonical order inside each round; any other value
    /// shuffles each round deterministically.
    pub seed: u64,
    pub mode: Mode,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            steps: 50,
            dim_cap: 3,
            bit_cap: 6,
            seed: 0,
            mode: Mode::Gurarii,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let caps = Caps::global();
        if self.dim_cap == 0 || self.dim_cap > caps.max_dim {
            return Err(Error::Input(format!(
                "dim_cap must be in 1..={}",
                caps.max_dim
            )));
        }
        if self.bit_cap == 0 || self.bit_cap > 62 {
            return Err(Error::Input("bit_cap must be in 1..=62".into()));
        }
        Ok(())
    }
}

/// How a stage was obtained from its parent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageWitness {
    Initial,
    /// Amalgamation for a certificate; `eps` is the parameter passed to the
    /// pushout after rescaling the norm of `F` by `scale`.
    Pushout {
        certificate: usize,
        eps: Rational,
        scale: Rational,
    },
    /// Rows are the functionals identifying the stage with `linf(m)`.
    Envelope {
        coordinates: Matrix,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainStage {
    pub index: usize,
    pub support: Vec<usize>,
    pub space: PolyhedralSpace,
    pub parent: Option<usize>,
    pub witness: StageWitness,
}

impl ChainStage {
    pub fn initial() -> Self {
        Self::initial_with(PolyhedralSpace::linf(1).expect("dimension 1"))
    }

    pub(crate) fn initial_with(space: PolyhedralSpace) -> Self {
        ChainStage {
            index: 0,
            support: (0..space.dim()).collect(),
            space,
            parent: None,
            witness: StageWitness::Initial,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn child(&self, space: PolyhedralSpace, witness: StageWitness) -> Self {
        ChainStage {
            index: self.index + 1,
            support: (0..space.dim()).collect(),
            space,
            parent: Some(self.index),
            witness,
        }
    }
}

/// Asks for an embedding of `F` into the chain extending `f: E -> stage`
/// up to distortion `1/n`. `f_matrix` is in the coordinates of the stage it
/// was enumerated over; later stages only append coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddingRequest {
    /// `E` as a subspace of `F`, with a reduced column echelon basis.
    pub e: Subspace,
    pub f_matrix: Matrix,
    pub n: u32,
    pub complexity: u32,
}

impl EmbeddingRequest {
    pub fn f_space(&self) -> &PolyhedralSpace {
        self.e.ambient()
    }

    pub fn eps(&self) -> Rational {
        Rational::from_i64(self.n as i64).recip()
    }

    /// `f` as a map into `stage`, padding with zero rows.
    pub fn f_map(&self, stage: &PolyhedralSpace) -> Result<LinearMap> {
        if stage.dim() < self.f_matrix.rows() {
            return Err(Error::Input(
                "stage is smaller than the request's target".into(),
            ));
        }
        LinearMap::new(
            self.e.induced()?,
            stage.clone(),
            self.f_matrix.pad_rows(stage.dim()),
        )
    }

    /// Identifies the request across rounds: trailing zero rows of `f` are
    /// dropped since later stages only append coordinates.
    pub fn family(&self) -> String {
        let rows = self.f_matrix.row_vecs();
        let used = rows
            .iter()
            .rposition(|r| r.iter().any(|x| !num_traits::Zero::is_zero(x)))
            .map_or(0, |p| p + 1);
        format!(
            "{:?}|{:?}|{:?}|{}",
            self.f_space().functionals(),
            self.e.basis().col_vecs(),
            &rows[..used],
            self.n
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateChecks {
    /// `g` is `(1/n)`-isometric.
    pub isometric: bool,
    /// `g` restricted to `E` equals `f`.
    pub restricts: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateWitness {
    /// Index of the stage `g` maps into.
    pub stage: usize,
    pub g: LinearMap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub index: usize,
    pub step: usize,
    pub round: u32,
    /// Stage the request was checked against.
    pub scheduled_at: usize,
    pub request: EmbeddingRequest,
    pub applicable: bool,
    /// Distortion of `f` when scheduled.
    pub eps_star: EpsStar,
    pub witness: Option<CertificateWitness>,
    pub checks: CertificateChecks,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepAction {
    Request { round: u32, complexity: u32 },
    Envelope,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Satisfied { certificate: usize },
    NotApplicable { certificate: usize },
    Deferred { reason: String },
    Extended,
    Unchanged,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub step: usize,
    pub action: StepAction,
    pub outcome: StepOutcome,
    /// Current stage after the step.
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u32,
    pub size: usize,
    /// Number of request steps taken before the round started.
    pub first_request: usize,
}

/// A retraction `stage -> linf(1)` that is the identity on the first
/// coordinate, stored as a `1 x dim` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Retraction {
    pub stage: usize,
    pub matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainRun {
    pub config: ChainConfig,
    pub stages: Vec<ChainStage>,
    pub certificates: Vec<Certificate>,
    pub steps: Vec<StepRecord>,
    pub rounds: Vec<RoundRecord>,
    pub retractions: Vec<Retraction>,
    /// Set when a resource cap stopped the run early.
    pub aborted: Option<String>,
}

impl ChainRun {
    pub fn final_stage(&self) -> &ChainStage {
        self.stages.last().expect("a run has its initial stage")
    }

    /// Request steps happen at every step in `gurarii` mode and at even
    /// steps otherwise.
    fn step_of_request(&self, q: usize) -> usize {
        match self.config.mode {
            Mode::Gurarii => q,
            _ => 2 * q,
        }
    }

    /// A step by which every request family of complexity at most `level`
    /// has been scheduled `times` times, if the run has enumerated far
    /// enough to know it. Such a family is listed in every round from
    /// `level` on.
    pub fn service_bound(&self, level: u32, times: u32) -> Option<usize> {
        if level == 0 || times == 0 {
            return Some(0);
        }
        let last = level + times - 1;
        let r = self.rounds.iter().find(|r| r.round == last)?;
        Some(self.step_of_request(r.first_request + r.size - 1))
    }
}

struct Scheduler {
    seed: u64,
    dim_cap: usize,
    bit_cap: u32,
    round: u32,
    queue: std::collections::VecDeque<EmbeddingRequest>,
    taken: usize,
}

impl Scheduler {
    fn next(
        &mut self,
        stage: &ChainStage,
        rounds: &mut Vec<RoundRecord>,
    ) -> (u32, EmbeddingRequest) {
        if self.queue.is_empty() {
            self.round += 1;
            let mut list = enumerate_requests(stage, self.round, self.dim_cap, self.bit_cap);
            if self.seed != 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ ((self.round as u64) << 32));
                list.shuffle(&mut rng);
            }
            rounds.push(RoundRecord {
                round: self.round,
                size: list.len(),
                first_request: self.taken,
            });
            self.queue = list.into();
        }
        self.taken += 1;
        (
            self.round,
            self.queue
                .pop_front()
                .expect("every round lists the linf(1) request"),
        )
    }
}

pub fn run_chain(config: &ChainConfig) -> Result<ChainRun> {
    run_chain_with(config, |_| Ok(()))
}

/// Runs the chain, handing every record to `sink` as soon as it exists.
pub fn run_chain_with(
    config: &ChainConfig,
    mut sink: impl FnMut(&Record) -> Result<()>,
) -> Result<ChainRun> {
    config.validate()?;
    let mut run = ChainRun {
        config: config.clone(),
        stages: vec![ChainStage::initial()],
        certificates: Vec::new(),
        steps: Vec::new(),
        rounds: Vec::new(),
        retractions: Vec::new(),
        aborted: None,
    };
    sink(&Record::config(config))?;
    sink(&Record::stage(&run.stages[0]))?;
    if config.mode == Mode::Complemented {
        let r = Retraction {
            stage: 0,
            matrix: Matrix::identity(1),
        };
        sink(&Record::retraction(&r))?;
        run.retractions.push(r);
    }
    let mut scheduler = Scheduler {
        seed: config.seed,
        dim_cap: config.dim_cap,
        bit_cap: config.bit_cap,
        round: 0,
        queue: Default::default(),
        taken: 0,
    };
    for t in 0..config.steps {
        let envelope_step = config.mode != Mode::Gurarii && t % 2 == 1;
        let result = if envelope_step {
            envelope_step_into(&mut run, t, &mut sink)
        } else {
            let rounds_before = run.rounds.len();
            let (round, req) =
                scheduler.next(run.stages.last().expect("initial stage"), &mut run.rounds);
            for r in &run.rounds[rounds_before..] {
                sink(&Record::round(r))?;
            }
            request_step_into(&mut run, t, round, req, &mut sink)
        };
        match result {
            Ok(step) => {
                sink(&Record::step(&step))?;
                run.steps.push(step);
            }
            Err(e) if e.is_resource() => {
                run.aborted = Some(format!("step {t}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    sink(&Record::end(&run))?;
    Ok(run)
}

fn request_step_into(
    run: &mut ChainRun,
    t: usize,
    round: u32,
    req: EmbeddingRequest,
    sink: &mut impl FnMut(&Record) -> Result<()>,
) -> Result<StepRecord> {
    let current = run.final_stage().clone();
    let action = StepAction::Request {
        round,
        complexity: req.complexity,
    };
    let index = run.certificates.len();
    let outcome = match satisfy_request(&current, &req)? {
        Satisfaction::Deferred { reason } => StepOutcome::Deferred { reason },
        Satisfaction::NotApplicable { mut certificate } => {
            certificate.index = index;
            certificate.step = t;
            certificate.round = round;
            sink(&Record::certificate(&certificate))?;
            run.certificates.push(certificate);
            StepOutcome::NotApplicable { certificate: index }
        }
        Satisfaction::Satisfied {
            stage,
            mut certificate,
            pushout,
            permutation,
        } => {
            certificate.index = index;
            certificate.step = t;
            certificate.round = round;
            if let Some(mut stage) = stage {
                if let StageWitness::Pushout { certificate, .. } = &mut stage.witness {
                    *certificate = index;
                }
                let retraction = if run.config.mode == Mode::Complemented {
                    let old = run
                        .retractions
                        .last()
                        .expect("complemented runs track a retraction");
                    Some(step::retraction_through_pushout(
                        &old.matrix,
                        &pushout,
                        &permutation,
                        stage.index,
                    )?)
                } else {
                    None
                };
                sink(&Record::stage(&stage))?;
                run.stages.push(stage);
                if let Some(r) = retraction {
                    sink(&Record::retraction(&r))?;
                    run.retractions.push(r);
                }
            }
            sink(&Record::certificate(&certificate))?;
            run.certificates.push(certificate);
            StepOutcome::Satisfied { certificate: index }
        }
    };
    Ok(StepRecord {
        step: t,
        action,
        outcome,
        stage: run.final_stage().index,
    })
}

fn envelope_step_into(
    run: &mut ChainRun,
    t: usize,
    sink: &mut impl FnMut(&Record) -> Result<()>,
) -> Result<StepRecord> {
    let current = run.final_stage().clone();
    let outcome = match linf_envelope(&current)? {
        EnvelopeOutcome::Deferred { reason } => StepOutcome::Deferred { reason },
        EnvelopeOutcome::Unchanged => StepOutcome::Unchanged,
        EnvelopeOutcome::Extended { stage } => {
            let retraction = if run.config.mode == Mode::Complemented {
                let old = run
                    .retractions
                    .last()
                    .expect("complemented runs track a retraction");
                Some(step::retraction_into_envelope(
                    &old.matrix,
                    &current,
                    &stage,
                )?)
            } else {
                None
            };
            sink(&Record::stage(&stage))?;
            run.stages.push(*stage);
            if let Some(r) = retraction {
                sink(&Record::retraction(&r))?;
                run.retractions.push(r);
            }
            StepOutcome::Extended
        }
    };
    Ok(StepRecord {
        step: t,
        action: StepAction::Envelope,
        outcome,
        stage: run.final_stage().index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(steps: usize, mode: Mode) -> ChainConfig {
        ChainConfig {
            steps,
            mode,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn zero_steps_is_the_initial_stage() {
        let run = run_chain(&config(0, Mode::Gurarii)).unwrap();
        assert_eq!(run.stages.len(), 1);
        assert_eq!(run.stages[0].space, PolyhedralSpace::linf(1).unwrap());
        assert!(run.certificates.is_empty());
    }

    #[test]
    fn first_round_on_linf1() {
        let run = run_chain(&config(4, Mode::Gurarii)).unwrap();
        // E = 0 first: the stage becomes linf(1) (+)_1 linf(1) = l1(2).
        assert_eq!(run.stages[1].space, PolyhedralSpace::l1(2).unwrap());
        let kinds: Vec<bool> = run.certificates.iter().map(|c| c.applicable).collect();
        // f = -1, 0, 1 on the line
        assert_eq!(kinds, vec![true, true, false, true]);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = ChainConfig {
            seed: 7,
            ..config(12, Mode::Lindenstrauss)
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_chain_with(&cfg, |r| {
            a.push(r.to_line());
            Ok(())
        })
        .unwrap();
        run_chain_with(&cfg, |r| {
            b.push(r.to_line());
            Ok(())
        })
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn families_return_in_later_rounds() {
        let run = run_chain(&config(12, Mode::Gurarii)).unwrap();
        let first = enumerate_requests(&run.stages[0], 1, 3, 6);
        for r in first {
            let steps: Vec<usize> = run
                .certificates
                .iter()
                .filter(|c| c.request.family() == r.family())
                .map(|c| c.step)
                .collect();
            assert_eq!(steps.len(), 2, "family {}", r.family());
            assert!(steps[1] <= run.service_bound(1, 2).unwrap());
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(run_chain(&ChainConfig {
            dim_cap: 0,
            ..ChainConfig::default()
        })
        .is_err());
        assert!(run_chain(&ChainConfig {
            bit_cap: 0,
            ..ChainConfig::default()
        })
        .is_err());
    }
}
