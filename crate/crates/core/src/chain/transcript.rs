//! JSON-lines transcript of a chain run. Records are written as they are
//! produced, in order, and a complete transcript replays into the run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::rational::{parse, to_string};
use crate::json::{matrix_from_json, matrix_to_json, Rows, SpaceJson};
use crate::maps::{EpsStar, LinearMap};
use crate::spaces::{PolyhedralSpace, Subspace};

use super::{
    Certificate, CertificateChecks, CertificateWitness, ChainConfig, ChainRun, ChainStage,
    EmbeddingRequest, Retraction, RoundRecord, StageWitness, StepAction, StepOutcome, StepRecord,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessJson {
    Initial,
    Pushout {
        certificate: usize,
        eps: String,
        scale: String,
    },
    Envelope {
        coordinates: Rows,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageJson {
    pub index: usize,
    pub support: Vec<usize>,
    pub parent: Option<usize>,
    pub space: SpaceJson,
    pub witness: WitnessJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestJson {
    pub complexity: u32,
    pub n: u32,
    pub f: SpaceJson,
    pub e_dim: usize,
    /// `dim F x e_dim`, one row per coordinate of `F`.
    pub e_basis: Rows,
    /// `stage dim x e_dim` in the coordinates of the scheduling stage.
    pub f_matrix: Rows,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessMapJson {
    pub stage: usize,
    pub matrix: Rows,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub index: usize,
    pub step: usize,
    pub round: u32,
    pub scheduled_at: usize,
    pub request: RequestJson,
    pub applicable: bool,
    pub eps_star: String,
    pub witness: Option<WitnessMapJson>,
    pub isometric: bool,
    pub restricts: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepJson {
    pub step: usize,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity: Option<u32>,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Config(ChainConfig),
    Round {
        round: u32,
        size: usize,
        first_request: usize,
    },
    Stage(StageJson),
    Certificate(CertificateJson),
    Retraction {
        stage: usize,
        matrix: Rows,
    },
    Step(StepJson),
    End {
        steps: usize,
        aborted: Option<String>,
    },
}

impl Record {
    pub fn config(c: &ChainConfig) -> Self {
        Record::Config(c.clone())
    }

    pub fn round(r: &RoundRecord) -> Self {
        Record::Round {
            round: r.round,
            size: r.size,
            first_request: r.first_request,
        }
    }

    pub fn stage(s: &ChainStage) -> Self {
        let witness = match &s.witness {
            StageWitness::Initial => WitnessJson::Initial,
            StageWitness::Pushout {
                certificate,
                eps,
                scale,
            } => WitnessJson::Pushout {
                certificate: *certificate,
                eps: to_string(eps),
                scale: to_string(scale),
            },
            StageWitness::Envelope { coordinates } => WitnessJson::Envelope {
                coordinates: matrix_to_json(coordinates),
            },
        };
        Record::Stage(StageJson {
            index: s.index,
            support: s.support.clone(),
            parent: s.parent,
            space: SpaceJson::from_space(&s.space),
            witness,
        })
    }

    pub fn certificate(c: &Certificate) -> Self {
        let r = &c.request;
        Record::Certificate(CertificateJson {
            index: c.index,
            step: c.step,
            round: c.round,
            scheduled_at: c.scheduled_at,
            request: RequestJson {
                complexity: r.complexity,
                n: r.n,
                f: SpaceJson::from_space(r.f_space()),
                e_dim: r.e.dim(),
                e_basis: matrix_to_json(r.e.basis()),
                f_matrix: matrix_to_json(&r.f_matrix),
            },
            applicable: c.applicable,
            eps_star: c.eps_star.to_string(),
            witness: c.witness.as_ref().map(|w| WitnessMapJson {
                stage: w.stage,
                matrix: matrix_to_json(w.g.matrix()),
            }),
            isometric: c.checks.isometric,
            restricts: c.checks.restricts,
        })
    }

    pub fn retraction(r: &Retraction) -> Self {
        Record::Retraction {
            stage: r.stage,
            matrix: matrix_to_json(&r.matrix),
        }
    }

    pub fn step(s: &StepRecord) -> Self {
        let (action, round, complexity) = match s.action {
            StepAction::Request { round, complexity } => ("request", Some(round), Some(complexity)),
            StepAction::Envelope => ("envelope", None, None),
        };
        let (outcome, certificate, reason) = match &s.outcome {
            StepOutcome::Satisfied { certificate } => ("satisfied", Some(*certificate), None),
            StepOutcome::NotApplicable { certificate } => {
                ("not_applicable", Some(*certificate), None)
            }
            StepOutcome::Deferred { reason } => ("deferred", None, Some(reason.clone())),
            StepOutcome::Extended => ("extended", None, None),
            StepOutcome::Unchanged => ("unchanged", None, None),
        };
        Record::Step(StepJson {
            step: s.step,
            action: action.into(),
            round,
            complexity,
            outcome: outcome.into(),
            certificate,
            reason,
            stage: s.stage,
        })
    }

    pub fn end(run: &ChainRun) -> Self {
        Record::End {
            steps: run.steps.len(),
            aborted: run.aborted.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Input(format!("transcript line {line}: {msg}"))
}

fn eps_star_from(s: &str) -> Result<EpsStar> {
    if s == "inf" {
        Ok(EpsStar::Infinite)
    } else {
        Ok(EpsStar::Finite(parse(s)?))
    }
}

fn stage_from(j: StageJson) -> Result<ChainStage> {
    let space = j.space.to_space()?;
    let witness = match j.witness {
        WitnessJson::Initial => StageWitness::Initial,
        WitnessJson::Pushout {
            certificate,
            eps,
            scale,
        } => StageWitness::Pushout {
            certificate,
            eps: parse(&eps)?,
            scale: parse(&scale)?,
        },
        WitnessJson::Envelope { coordinates } => StageWitness::Envelope {
            coordinates: matrix_from_json(&coordinates, space.dim())?,
        },
    };
    Ok(ChainStage {
        index: j.index,
        support: j.support,
        space,
        parent: j.parent,
        witness,
    })
}

fn certificate_from(j: CertificateJson, stages: &[ChainStage]) -> Result<Certificate> {
    let f_space = j.request.f.to_space()?;
    let basis = matrix_from_json(&j.request.e_basis, j.request.e_dim)?;
    let request = EmbeddingRequest {
        e: Subspace::new(f_space.clone(), basis)?,
        f_matrix: matrix_from_json(&j.request.f_matrix, j.request.e_dim)?,
        n: j.request.n,
        complexity: j.request.complexity,
    };
    let witness = match j.witness {
        None => None,
        Some(w) => {
            let stage = stages.iter().find(|s| s.index == w.stage).ok_or_else(|| {
                Error::Input(format!("witness refers to unknown stage {}", w.stage))
            })?;
            let m = matrix_from_json(&w.matrix, f_space.dim())?;
            Some(CertificateWitness {
                stage: w.stage,
                g: LinearMap::new(f_space, stage.space.clone(), m)?,
            })
        }
    };
    Ok(Certificate {
        index: j.index,
        step: j.step,
        round: j.round,
        scheduled_at: j.scheduled_at,
        request,
        applicable: j.applicable,
        eps_star: eps_star_from(&j.eps_star)?,
        witness,
        checks: CertificateChecks {
            isometric: j.isometric,
            restricts: j.restricts,
        },
    })
}

fn step_from(j: StepJson) -> Result<StepRecord> {
    let action = match (j.action.as_str(), j.round, j.complexity) {
        ("request", Some(round), Some(complexity)) => StepAction::Request { round, complexity },
        ("envelope", _, _) => StepAction::Envelope,
        (a, _, _) => return Err(Error::Input(format!("unknown step action {a:?}"))),
    };
    let need =
        |c: Option<usize>| c.ok_or_else(|| Error::Input("step outcome needs a certificate".into()));
    let outcome = match j.outcome.as_str() {
        "satisfied" => StepOutcome::Satisfied {
            certificate: need(j.certificate)?,
        },
        "not_applicable" => StepOutcome::NotApplicable {
            certificate: need(j.certificate)?,
        },
        "deferred" => StepOutcome::Deferred {
            reason: j.reason.unwrap_or_default(),
        },
        "extended" => StepOutcome::Extended,
        "unchanged" => StepOutcome::Unchanged,
        o => return Err(Error::Input(format!("unknown step outcome {o:?}"))),
    };
    Ok(StepRecord {
        step: j.step,
        action,
        outcome,
        stage: j.stage,
    })
}

/// Rebuilds a run from transcript text. A transcript cut short (no `end`
/// record) replays the steps it has and is marked aborted.
pub fn replay(text: &str) -> Result<ChainRun> {
    let mut config = None;
    let mut run = ChainRun {
        config: ChainConfig::default(),
        stages: Vec::new(),
        certificates: Vec::new(),
        steps: Vec::new(),
        rounds: Vec::new(),
        retractions: Vec::new(),
        aborted: Some("transcript has no end record".into()),
    };
    for (k, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let rec: Record = serde_json::from_str(line).map_err(|e| bad(k + 1, e))?;
        let wrap = |e: Error| bad(k + 1, e);
        match rec {
            Record::Config(c) => config = Some(c),
            Record::Round {
                round,
                size,
                first_request,
            } => run.rounds.push(RoundRecord {
                round,
                size,
                first_request,
            }),
            Record::Stage(s) => run.stages.push(stage_from(s).map_err(wrap)?),
            Record::Certificate(c) => run
                .certificates
                .push(certificate_from(c, &run.stages).map_err(wrap)?),
            Record::Retraction { stage, matrix } => {
                let cols = run
                    .stages
                    .iter()
                    .find(|s| s.index == stage)
                    .map_or(0, ChainStage::dim);
                run.retractions.push(Retraction {
                    stage,
                    matrix: matrix_from_json(&matrix, cols).map_err(wrap)?,
                });
            }
            Record::Step(s) => run.steps.push(step_from(s).map_err(wrap)?),
            Record::End { aborted, .. } => run.aborted = aborted,
        }
    }
    run.config = config.ok_or_else(|| Error::Input("transcript has no config record".into()))?;
    if run.stages.is_empty() {
        run.stages.push(ChainStage::initial());
    }
    if run.stages[0].space != PolyhedralSpace::linf(1)? {
        return Err(Error::Input(
            "transcript does not start from linf(1)".into(),
        ));
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{run_chain_with, Mode};

    fn transcript(cfg: &ChainConfig) -> (ChainRun, String) {
        let mut text = String::new();
        let run = run_chain_with(cfg, |r| {
            text.push_str(&r.to_line());
            text.push('\n');
            Ok(())
        })
        .unwrap();
        (run, text)
    }

    #[test]
    fn replay_reproduces_the_run() {
        for mode in [Mode::Gurarii, Mode::Complemented] {
            let cfg = ChainConfig {
                steps: 8,
                mode,
                ..ChainConfig::default()
            };
            let (run, text) = transcript(&cfg);
            assert_eq!(replay(&text).unwrap(), run);
        }
    }

    #[test]
    fn truncated_transcript_is_marked() {
        let (_, text) = transcript(&ChainConfig {
            steps: 6,
            ..ChainConfig::default()
        });
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        let run = replay(&cut).unwrap();
        assert!(run.aborted.is_some());
    }

    #[test]
    fn garbage_is_an_input_error() {
        assert!(matches!(
            replay("{\"type\":\"nope\"}"),
            Err(Error::Input(_))
        ));
        assert!(matches!(replay(""), Err(Error::Input(_))));
    }
}
