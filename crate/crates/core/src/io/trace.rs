use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sampler::{McmcTrace, Timing};

use super::dataset::write_text;

pub const TRACE_MAGIC: &str = "wishmix-trace 1";

/// Plain-text trace: a short key/value header, then one line per retained
/// draw with `iteration nu k_plus z_1 … z_n`. Timing is not stored.
pub fn trace_to_text(trace: &McmcTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TRACE_MAGIC}");
    let _ = writeln!(out, "seed {}", trace.seed);
    let _ = writeln!(out, "model {}", trace.model);
    let _ = writeln!(out, "n {}", trace.n);
    let _ = writeln!(out, "nu_accepted {}", trace.nu_accepted);
    let _ = writeln!(out, "nu_proposed {}", trace.nu_proposed);
    let _ = writeln!(out, "draws {}", trace.len());
    out.push_str("columns iteration nu k_plus labels\n");
    for d in 0..trace.len() {
        let _ = write!(out, "{} {:?} {}", trace.iterations[d], trace.nu[d], trace.k_plus[d]);
        for z in &trace.labels[d] {
            let _ = write!(out, " {z}");
        }
        out.push('\n');
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("trace line {line}: {msg}"))
}

fn parse<T: FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(line, format!("cannot parse {what} from {s:?}")))
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (no, line) = lines.next().ok_or_else(|| Error::Data(format!("trace ends before `{key}`")))?;
    match line.split_once(' ') {
        Some((k, v)) if k == key => Ok((no, v.trim())),
        _ => Err(bad(no, format!("expected `{key} <value>`, found {line:?}"))),
    }
}

pub fn trace_from_text(text: &str) -> Result<McmcTrace> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == TRACE_MAGIC => {}
        _ => return Err(Error::Data(format!("not a trace file (expected `{TRACE_MAGIC}`)"))),
    }
    let (no, v) = header(&mut lines, "seed")?;
    let seed = parse(no, "seed", v)?;
    let (_, model) = header(&mut lines, "model")?;
    let (no, v) = header(&mut lines, "n")?;
    let n: usize = parse(no, "n", v)?;
    let (no, v) = header(&mut lines, "nu_accepted")?;
    let nu_accepted = parse(no, "nu_accepted", v)?;
    let (no, v) = header(&mut lines, "nu_proposed")?;
    let nu_proposed = parse(no, "nu_proposed", v)?;
    let (no, v) = header(&mut lines, "draws")?;
    let draws: usize = parse(no, "draws", v)?;
    header(&mut lines, "columns")?;
    let mut trace = McmcTrace {
        seed,
        model: model.to_string(),
        n,
        iterations: Vec::with_capacity(draws),
        labels: Vec::with_capacity(draws),
        nu: Vec::with_capacity(draws),
        k_plus: Vec::with_capacity(draws),
        nu_accepted,
        nu_proposed,
        timing: Timing::default(),
    };
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.len() != n + 3 {
            return Err(bad(no, format!("expected {} fields, found {}", n + 3, fields.len())));
        }
        trace.iterations.push(parse(no, "iteration", fields[0])?);
        trace.nu.push(parse(no, "nu", fields[1])?);
        trace.k_plus.push(parse(no, "k_plus", fields[2])?);
        let labels = fields[3..]
            .iter()
            .map(|f| parse(no, "label", f))
            .collect::<Result<Vec<usize>>>()?;
        trace.labels.push(labels);
    }
    if trace.len() != draws {
        return Err(Error::Data(format!("trace header announces {draws} draws, found {}", trace.len())));
    }
    Ok(trace)
}

pub fn write_trace(trace: &McmcTrace, path: &Path) -> Result<()> {
    write_text(path, &trace_to_text(trace))
}

pub fn read_trace(path: &Path) -> Result<McmcTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    trace_from_text(&text).map_err(|e| super::dataset::with_path(e, path))
}
