use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::summary::RunSummary;
use crate::error::{Error, Result};
use crate::learners::AlgorithmConfig;
use crate::stage_game::{expected_payoff, MarketModel, PriceDistribution, Seller};

pub const FORMAT_VERSION: u32 = 1;

/// Tolerance for stored per-round payoffs against recomputation.
pub const ROUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub format_version: u32,
    pub model: MarketModel,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub rounds: usize,
    /// Every `stride`-th round is stored, plus round 1, round T and phase boundaries.
    pub stride: usize,
    pub players: [AlgorithmConfig; 2],
    pub seeds: [u64; 2],
}

impl TranscriptHeader {
    /// The market model, rebuilt through the validating constructors.
    pub fn model(&self) -> Result<MarketModel> {
        let m = match self.tau {
            None => MarketModel::bertrand(self.k)?,
            Some(tau) => MarketModel::logit(self.k, tau)?,
        };
        if m != self.model {
            return Err(Error::InvalidParameter(
                "header model disagrees with its k and tau fields".into(),
            ));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub u1: f64,
    pub u2: f64,
    pub buyer_price: f64,
}

impl RoundRecord {
    /// `(own, opponent)` weights from `player`'s side.
    pub fn player_view(&self, player: Seller) -> (&[f64], &[f64]) {
        match player {
            Seller::One => (&self.d1, &self.d2),
            Seller::Two => (&self.d2, &self.d1),
        }
    }

    /// Largest deviation of the stored payoffs and buyer price from a fresh
    /// evaluation.
    pub fn recompute_error(&self, model: &MarketModel) -> Result<f64> {
        let d1 = PriceDistribution::new(self.d1.clone())?;
        let d2 = PriceDistribution::new(self.d2.clone())?;
        let (u1, u2) = expected_payoff(model, &d1, &d2)?;
        Ok((u1 - self.u1)
            .abs()
            .max((u2 - self.u2).abs())
            .max((self.u1 + self.u2 - self.buyer_price).abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub records: Vec<RoundRecord>,
    pub summary: RunSummary,
}

#[derive(Serialize, Deserialize)]
struct SummaryLine {
    summary: RunSummary,
}

#[derive(Serialize)]
struct SummaryLineRef<'a> {
    summary: &'a RunSummary,
}

impl Transcript {
    pub fn model(&self) -> Result<MarketModel> {
        self.header.model()
    }

    pub fn rounds(&self) -> usize {
        self.header.rounds
    }

    /// True when every round is stored.
    pub fn is_complete(&self) -> bool {
        self.records.len() == self.header.rounds
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(
            &mut out,
            &SummaryLineRef {
                summary: &self.summary,
            },
        )?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(buf)
    }

    /// Reads a transcript and re-verifies every stored round. Errors carry the
    /// byte offset of the offending input.
    pub fn read_jsonl<R: BufRead>(mut input: R) -> Result<Self> {
        let mut offset: u64 = 0;
        let mut line = String::new();
        let mut header: Option<TranscriptHeader> = None;
        let mut model = None;
        let mut records: Vec<RoundRecord> = Vec::new();
        let mut summary = None;
        loop {
            line.clear();
            let n = input.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            let start = offset;
            offset += n as u64;
            let text = line.trim_end();
            if text.is_empty() {
                continue;
            }
            let fail = |reason: String| Error::Parse {
                offset: start,
                reason,
            };
            let json_fail = |e: serde_json::Error| {
                let col = if e.column() > 0 {
                    e.column() as u64 - 1
                } else {
                    0
                };
                Error::Parse {
                    offset: start + col,
                    reason: e.to_string(),
                }
            };
            if summary.is_some() {
                return Err(fail("content after the summary line".into()));
            }
            let Some(h) = &header else {
                let h: TranscriptHeader = serde_json::from_str(text).map_err(json_fail)?;
                if h.format_version != FORMAT_VERSION {
                    return Err(fail(format!(
                        "format version {} is not {FORMAT_VERSION}",
                        h.format_version
                    )));
                }
                if h.stride == 0 {
                    return Err(fail("stride must be >= 1".into()));
                }
                model = Some(h.model().map_err(|e| fail(e.to_string()))?);
                header = Some(h);
                continue;
            };
            if text.starts_with("{\"summary\"") {
                let s: SummaryLine = serde_json::from_str(text).map_err(json_fail)?;
                if s.summary.rounds != h.rounds {
                    return Err(fail(format!(
                        "summary covers {} rounds, header says {}",
                        s.summary.rounds, h.rounds
                    )));
                }
                summary = Some(s.summary);
                continue;
            }
            let r: RoundRecord = serde_json::from_str(text).map_err(json_fail)?;
            let prev = records.last().map_or(0, |p| p.round);
            if r.round <= prev || r.round > h.rounds {
                return Err(fail(format!(
                    "round {} out of order after {prev} (horizon {})",
                    r.round, h.rounds
                )));
            }
            if r.d1.len() != h.k || r.d2.len() != h.k {
                return Err(fail(format!(
                    "round {} has distributions of length {}/{}, expected {}",
                    r.round,
                    r.d1.len(),
                    r.d2.len(),
                    h.k
                )));
            }
            let err = r
                .recompute_error(model.as_ref().expect("set with header"))
                .map_err(|e| fail(format!("round {}: {e}", r.round)))?;
            if err > ROUND_TOLERANCE {
                return Err(fail(format!(
                    "round {}: stored payoffs off by {err:e}",
                    r.round
                )));
            }
            records.push(r);
        }
        let Some(header) = header else {
            return Err(Error::Parse {
                offset,
                reason: "empty transcript file".into(),
            });
        };
        let Some(summary) = summary else {
            return Err(Error::Parse {
                offset,
                reason: "missing summary line".into(),
            });
        };
        if header.rounds > 0 {
            let first = records.first().map(|r| r.round);
            let last = records.last().map(|r| r.round);
            if first != Some(1) || last != Some(header.rounds) {
                return Err(Error::Parse {
                    offset,
                    reason: "the first and last rounds must be stored".into(),
                });
            }
        }
        Ok(Transcript {
            header,
            records,
            summary,
        })
    }
}
