//! On-disk formats: the problem container with its JSON sidecar, and trace CSVs.

use crate::error::{HarnessError, Result};
use projfree_core::matreg::{GenSpec, GroundTruth};
use projfree_core::{Constants, ParamMatrix, Problem, ProblemKind, TraceRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str = "outer_t,f_value,gap_to_ref,dist_to_star_F,dist_to_ref_F,cum_component_grads,cum_full_grads,cum_lo_calls,cum_projections,wall_ms,max_inner_gap";

const PROBLEM_MAGIC: &[u8; 8] = b"PFPROB01";

/// Human-readable description written next to a problem container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSidecar {
    pub spec: GenSpec,
    pub kind: ProblemKind,
    pub n: usize,
    pub constants: Constants,
    pub truth_rank: usize,
    pub truth_nuclear_norm: f64,
    /// SHA-256 of the binary container.
    pub sha256: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_problem(problem: &Problem, truth: &GroundTruth) -> Vec<u8> {
    let d = problem.dim();
    let c = problem.constants();
    let mut out = Vec::new();
    out.extend_from_slice(PROBLEM_MAGIC);
    for v in [d as u64, problem.n() as u64, problem.noise_cov().is_some() as u64, truth.rank as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    push_f64s(
        &mut out,
        &[c.smoothness, c.component_smoothness, c.lower_smoothness, c.rsc_sigma_hat, truth.nuclear_norm],
    );
    push_f64s(&mut out, problem.designs());
    push_f64s(&mut out, problem.responses());
    if let Some(w) = problem.noise_cov() {
        push_f64s(&mut out, w);
    }
    push_f64s(&mut out, truth.theta_star.as_slice());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl Reader<'_> {
    fn word(&mut self) -> Result<[u8; 8]> {
        if self.bytes.len() < 8 {
            return Err(truncated());
        }
        let (head, rest) = self.bytes.split_at(8);
        self.bytes = rest;
        Ok(head.try_into().expect("split at 8"))
    }

    fn u64(&mut self) -> Result<usize> {
        Ok(u64::from_le_bytes(self.word()?) as usize)
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| self.word().map(f64::from_le_bytes)).collect()
    }
}

fn truncated() -> HarnessError {
    HarnessError::Format {
        what: "problem file",
        detail: "truncated".into(),
    }
}

pub fn decode_problem(bytes: &[u8]) -> Result<(Problem, GroundTruth)> {
    let rest = bytes.strip_prefix(PROBLEM_MAGIC.as_slice()).ok_or(HarnessError::Format {
        what: "problem file",
        detail: "bad magic".into(),
    })?;
    let mut r = Reader { bytes: rest };
    let (d, n, noisy, rank) = (r.u64()?, r.u64()?, r.u64()?, r.u64()?);
    let p = d.checked_mul(d).ok_or_else(truncated)?;
    let words = 9 + n.saturating_mul(p) + n + if noisy == 1 { p } else { 0 } + p;
    if noisy > 1 || rest.len() != words.saturating_mul(8) {
        return Err(HarnessError::Format {
            what: "problem file",
            detail: format!("length {} does not match d = {d}, n = {n}", bytes.len()),
        });
    }
    let c = r.f64s(5)?;
    let constants = Constants {
        smoothness: c[0],
        component_smoothness: c[1],
        lower_smoothness: c[2],
        rsc_sigma_hat: c[3],
    };
    let designs = r.f64s(n * p)?;
    let responses = r.f64s(n)?;
    let noise = if noisy == 1 { Some(r.f64s(p)?) } else { None };
    let theta_star = ParamMatrix::from_vec(d, d, r.f64s(p)?)?;
    let problem = Problem::new(d, designs, responses, noise, constants)?;
    let truth = GroundTruth {
        theta_star,
        rank,
        nuclear_norm: c[4],
    };
    Ok((problem, truth))
}

/// Writes the container at `path` and its sidecar at `path.json`.
pub fn write_problem(path: &Path, spec: &GenSpec, problem: &Problem, truth: &GroundTruth) -> Result<ProblemSidecar> {
    let bytes = encode_problem(problem, truth);
    let sidecar = ProblemSidecar {
        spec: spec.clone(),
        kind: problem.kind(),
        n: problem.n(),
        constants: *problem.constants(),
        truth_rank: truth.rank,
        truth_nuclear_norm: truth.nuclear_norm,
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    fs::write(path, &bytes).map_err(HarnessError::io(path))?;
    let side = sidecar_path(path);
    fs::write(&side, to_json(&sidecar)?).map_err(HarnessError::io(&side))?;
    Ok(sidecar)
}

/// Reads a container and, when present, its sidecar (whose hash must match).
pub fn read_problem(path: &Path) -> Result<(Problem, GroundTruth, Option<ProblemSidecar>)> {
    let bytes = fs::read(path).map_err(HarnessError::io(path))?;
    let (problem, truth) = decode_problem(&bytes)?;
    let side = sidecar_path(path);
    let sidecar = if side.exists() {
        let text = fs::read_to_string(&side).map_err(HarnessError::io(&side))?;
        let s: ProblemSidecar = serde_json::from_str(&text).map_err(|e| HarnessError::Format {
            what: "problem sidecar",
            detail: e.to_string(),
        })?;
        if s.sha256 != hex::encode(Sha256::digest(&bytes)) {
            return Err(HarnessError::Format {
                what: "problem sidecar",
                detail: format!("{} does not describe {}", side.display(), path.display()),
            });
        }
        Some(s)
    } else {
        None
    };
    Ok((problem, truth, sidecar))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Format {
        what: "json",
        detail: e.to_string(),
    })?;
    s.push('\n');
    Ok(s)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn trace_to_csv(rows: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.outer_t.to_string(),
            format_real(r.f_value),
            format_real(r.gap_to_ref),
            format_real(r.dist_to_star_f),
            format_real(r.dist_to_ref_f),
            r.cum_component_grads.to_string(),
            r.cum_full_grads.to_string(),
            r.cum_lo_calls.to_string(),
            r.cum_projections.to_string(),
            format_real(r.wall_ms),
            format_real(r.max_inner_gap),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_trace(path: &Path, rows: &[TraceRecord]) -> Result<()> {
    fs::write(path, trace_to_csv(rows)).map_err(HarnessError::io(path))
}

fn malformed(detail: impl Into<String>) -> HarnessError {
    HarnessError::Format {
        what: "trace",
        detail: detail.into(),
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        Some(h) => return Err(malformed(format!("unexpected header `{h}`"))),
        None => return Err(malformed("empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(malformed(format!("line {line_no}: expected 11 fields, found {}", f.len())));
        }
        let int = |j: usize| {
            f[j].parse::<u64>()
                .map_err(|e| malformed(format!("line {line_no}, field {}: {e}", j + 1)))
        };
        let real = |j: usize| {
            f[j].parse::<f64>()
                .map_err(|e| malformed(format!("line {line_no}, field {}: {e}", j + 1)))
        };
        rows.push(TraceRecord {
            outer_t: int(0)? as usize,
            f_value: real(1)?,
            gap_to_ref: real(2)?,
            dist_to_star_f: real(3)?,
            dist_to_ref_f: real(4)?,
            cum_component_grads: int(5)?,
            cum_full_grads: int(6)?,
            cum_lo_calls: int(7)?,
            cum_projections: int(8)?,
            wall_ms: real(9)?,
            max_inner_gap: real(10)?,
        });
    }
    if rows.is_empty() {
        return Err(malformed("no data rows"));
    }
    Ok(rows)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
    parse_trace(&text).map_err(|e| match e {
        HarnessError::Format { what, detail } => HarnessError::Format {
            what,
            detail: format!("{}: {detail}", path.display()),
        },
        other => other,
    })
}
