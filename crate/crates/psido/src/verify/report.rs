//! Hypothesis reports: every checker returns the same structure — a list of
//! named sub-checks, each carrying the raw samples it was judged on, so the
//! verdict can be recomputed from the serialized artifact alone.
//!
//! Text schema (`# hypothesis-report v1`): one `[report]` block per report;
//! `hypothesis:`, `model:`, `sigma:` headers; `frame:` and `param:` lines;
//! then per check a `check:` line (semicolon-separated `key=value` fields)
//! followed by one `samples:` line of `radius:value` pairs; finally
//! `verdict: pass|fail`. Floats use the shortest round-tripping decimal
//! form, so emit → parse → emit is byte-identical.

use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub id: String,
    /// Slope target for decay/growth fits, cap for sup checks, floor for
    /// determinant checks; interpreted by `kind`.
    pub target: f64,
    pub measured: f64,
    /// Residual of the log-log fit; zero for non-fit checks.
    pub rms: f64,
    /// All samples sat below the fit floor: nothing left to measure.
    pub floor_skipped: bool,
    pub pass: bool,
    /// Raw (radius, value) pairs the verdict was computed from.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub hypothesis: String,
    pub model: String,
    pub sigma: f64,
    /// Rendered frame descriptions.
    pub frames: Vec<String>,
    /// Free-form recorded parameters (seeds, sampled region, estimates).
    pub params: Vec<(String, String)>,
    pub checks: Vec<CheckEntry>,
    pub verdict: bool,
}

impl HypothesisReport {
    pub fn new(hypothesis: &str, model: &str, sigma: f64) -> Self {
        HypothesisReport {
            hypothesis: hypothesis.to_string(),
            model: model.to_string(),
            sigma,
            frames: Vec::new(),
            params: Vec::new(),
            checks: Vec::new(),
            verdict: false,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    /// Fix the verdict from the recorded checks.
    pub fn seal(mut self) -> Self {
        self.verdict = self.recompute_verdict();
        self
    }

    /// The verdict is a pure function of the recorded checks; re-run it on a
    /// parsed report to validate a serialized artifact.
    pub fn recompute_verdict(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

pub fn describe_frame(frame: &crate::geometry::Frame) -> String {
    let base: Vec<String> = frame.base_point.iter().map(|v| v.to_string()).collect();
    let basis: Vec<String> = frame.basis.iter().map(|v| v.to_string()).collect();
    format!("base=[{}] basis=[{}]", base.join(","), basis.join(","))
}

pub fn render_reports(reports: &[HypothesisReport]) -> String {
    let mut out = String::from("# hypothesis-report v1\n");
    for r in reports {
        out.push_str("\n[report]\n");
        out.push_str(&format!("hypothesis: {}\n", r.hypothesis));
        out.push_str(&format!("model: {}\n", r.model));
        out.push_str(&format!("sigma: {}\n", r.sigma));
        for f in &r.frames {
            out.push_str(&format!("frame: {f}\n"));
        }
        for (k, v) in &r.params {
            out.push_str(&format!("param: {k} = {v}\n"));
        }
        for c in &r.checks {
            out.push_str(&format!(
                "check: id={}; target={}; measured={}; rms={}; floor={}; pass={}\n",
                c.id, c.target, c.measured, c.rms, c.floor_skipped, c.pass
            ));
            let pts: Vec<String> = c
                .samples
                .iter()
                .map(|(r, v)| format!("{r}:{v}"))
                .collect();
            out.push_str(&format!("samples: {}\n", pts.join(" ")));
        }
        out.push_str(&format!(
            "verdict: {}\n",
            if r.verdict { "pass" } else { "fail" }
        ));
    }
    out
}

/// Write the structured text to `path` and the raw samples as CSV next to it
/// (same stem, `.csv` extension).
pub fn emit_report(reports: &[HypothesisReport], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(render_reports(reports).as_bytes())?;
    let mut csv = std::fs::File::create(path.with_extension("csv"))?;
    writeln!(csv, "hypothesis,model,check,radius,value")?;
    for r in reports {
        for c in &r.checks {
            for (radius, value) in &c.samples {
                writeln!(csv, "{},{},{},{radius},{value}", r.hypothesis, r.model, c.id)?;
            }
        }
    }
    Ok(())
}

fn field<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    line.strip_prefix(prefix).map(str::trim)
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad float '{s}' in report {what}")))
}

pub fn parse_reports(text: &str) -> Result<Vec<HypothesisReport>> {
    let mut lines = text.lines().peekable();
    match lines.next() {
        Some(h) if h.trim() == "# hypothesis-report v1" => {}
        other => {
            return Err(Error::Format(format!(
                "missing report header (got {other:?})"
            )))
        }
    }
    let mut reports = Vec::new();
    let mut cur: Option<HypothesisReport> = None;
    while let Some(line) = lines.next() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if line == "[report]" {
            if let Some(r) = cur.take() {
                reports.push(r);
            }
            cur = Some(HypothesisReport::new("", "", 0.0));
            continue;
        }
        let r = cur
            .as_mut()
            .ok_or_else(|| Error::Format("report line before [report] marker".into()))?;
        if let Some(v) = field(line, "hypothesis:") {
            r.hypothesis = v.to_string();
        } else if let Some(v) = field(line, "model:") {
            r.model = v.to_string();
        } else if let Some(v) = field(line, "sigma:") {
            r.sigma = parse_f64(v, "sigma")?;
        } else if let Some(v) = field(line, "frame:") {
            r.frames.push(v.to_string());
        } else if let Some(v) = field(line, "param:") {
            let (k, val) = v
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad param line '{line}'")))?;
            r.params.push((k.trim().to_string(), val.trim().to_string()));
        } else if let Some(v) = field(line, "check:") {
            let mut entry = CheckEntry {
                id: String::new(),
                target: 0.0,
                measured: 0.0,
                rms: 0.0,
                floor_skipped: false,
                pass: false,
                samples: Vec::new(),
            };
            for part in v.split(';') {
                let (k, val) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Format(format!("bad check field '{part}'")))?;
                let val = val.trim();
                match k.trim() {
                    "id" => entry.id = val.to_string(),
                    "target" => entry.target = parse_f64(val, "target")?,
                    "measured" => entry.measured = parse_f64(val, "measured")?,
                    "rms" => entry.rms = parse_f64(val, "rms")?,
                    "floor" => entry.floor_skipped = val == "true",
                    "pass" => entry.pass = val == "true",
                    other => {
                        return Err(Error::Format(format!("unknown check field '{other}'")))
                    }
                }
            }
            let sline = lines
                .next()
                .and_then(|l| field(l, "samples:"))
                .ok_or_else(|| Error::Format("check line without samples line".into()))?;
            for pair in sline.split_whitespace() {
                let (a, b) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Format(format!("bad sample '{pair}'")))?;
                entry
                    .samples
                    .push((parse_f64(a, "radius")?, parse_f64(b, "value")?));
            }
            r.checks.push(entry);
        } else if let Some(v) = field(line, "verdict:") {
            r.verdict = v == "pass";
        } else {
            return Err(Error::Format(format!("unrecognized report line '{line}'")));
        }
    }
    if let Some(r) = cur.take() {
        reports.push(r);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> HypothesisReport {
        let mut r = HypothesisReport::new("bounded-geometry", "hyperbolic_exp", 1.0);
        r.frames.push("base=[0,0] basis=[1,0,0,1]".into());
        r.param("radii", "2..9.6 log, 10 points");
        r.checks.push(CheckEntry {
            id: "pair0->1 |a|=2 ray0 slope".into(),
            target: -1.0,
            measured: -1.05,
            rms: 0.02,
            floor_skipped: false,
            pass: true,
            samples: vec![(2.0, 0.125), (4.0, 0.061), (8.0, 0.0312)],
        });
        r.seal()
    }

    #[test]
    fn render_parse_round_trip() {
        let reports = vec![sample_report()];
        let text = render_reports(&reports);
        let back = parse_reports(&text).unwrap();
        assert_eq!(back, reports);
        // emit must be byte-identical after a round trip
        assert_eq!(render_reports(&back), text);
    }

    #[test]
    fn verdict_recomputes_from_samples() {
        let r = sample_report();
        let text = render_reports(&[r.clone()]);
        let back = &parse_reports(&text).unwrap()[0];
        assert_eq!(back.recompute_verdict(), r.verdict);
    }

    #[test]
    fn empty_list_renders_and_parses() {
        let text = render_reports(&[]);
        let back = parse_reports(&text).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn emit_writes_text_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("geo.report");
        emit_report(&[sample_report()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# hypothesis-report v1"));
        let csv = std::fs::read_to_string(dir.path().join("geo.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "hypothesis,model,check,radius,value");
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(parse_reports("not a report").is_err());
        assert!(parse_reports("# hypothesis-report v1\nbogus: x").is_err());
    }
}
