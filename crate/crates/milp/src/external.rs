//! External solver adapter: export the model to free MPS, run a command
//! template in a subprocess, and parse the solution file it leaves behind.
//!
//! The command template is run through `sh -c` after substituting the
//! placeholders `{model_file}`, `{solution_file}`, `{time_limit}` and `{gap}`.
//! The solution file is expected in the HiGHS plain-text layout (as written by
//! `writeSolution(path, 0)`), which is what `tools/highs_solve.py` produces.
//! An optional `gap=<value>` token on the solver's stdout supplies the
//! achieved relative MIP gap.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use crate::export::{export_model, ExportFormat};
use crate::model::MilpModel;
use crate::{Limits, MilpError, SolveResult, SolveStatus};

/// Default extra wall-clock allowance on top of the solver's own time limit
/// before the process group is killed.
pub const KILL_GRACE: Duration = Duration::from_secs(30);
const STDERR_EXCERPT: usize = 600;

static SOLVE_COUNTER: AtomicUsize = AtomicUsize::new(0);

#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub command: String,
    /// Directory for model/solution files; a fresh temporary directory when `None`.
    pub work_dir: Option<PathBuf>,
    pub keep_files: bool,
    pub kill_grace: Duration,
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            work_dir: None,
            keep_files: false,
            kill_grace: KILL_GRACE,
        }
    }

    /// Substitutes placeholders; paths are single-quoted for the shell.
    pub fn render(&self, model_file: &Path, solution_file: &Path, limits: Limits) -> String {
        self.command
            .replace("{model_file}", &shell_quote(&model_file.to_string_lossy()))
            .replace("{solution_file}", &shell_quote(&solution_file.to_string_lossy()))
            .replace("{time_limit}", &format!("{}", limits.time.as_secs_f64()))
            .replace("{gap}", &format!("{}", limits.gap))
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "'\\''"))
}

fn scratch_dir(base: Option<&Path>) -> Result<PathBuf, MilpError> {
    let n = SOLVE_COUNTER.fetch_add(1, Ordering::Relaxed);
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let root = base.map(Path::to_path_buf).unwrap_or_else(std::env::temp_dir);
    let dir = root.join(format!("fcr-milp-{}-{n}-{stamp}", std::process::id()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn solve_external(model: &MilpModel, solver: &ExternalSolver, limits: Limits) -> Result<SolveResult, MilpError> {
    let exported = export_model(model, ExportFormat::MpsFree)?;
    let dir = scratch_dir(solver.work_dir.as_deref())?;
    let model_file = dir.join("model.mps");
    let solution_file = dir.join("model.sol");
    exported.write(&model_file)?;

    let cmdline = solver.render(&model_file, &solution_file, limits);
    log::debug!("external solve: {cmdline}");
    let start = Instant::now();
    // own process group, so a kill also reaches whatever `sh` spawned
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmdline)
        .process_group(0)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut out_pipe = child.stdout.take().expect("piped stdout");
    let mut err_pipe = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = out_pipe.read_to_string(&mut s);
        s
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = err_pipe.read_to_string(&mut s);
        s
    });

    let deadline = start + limits.time + solver.kill_grace;
    let mut killed = false;
    let status = loop {
        if let Some(st) = child.try_wait()? {
            break st;
        }
        if Instant::now() > deadline {
            // SAFETY: plain syscall on the group this adapter created
            unsafe {
                libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
            }
            let _ = child.kill();
            killed = true;
            break child.wait()?;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let wall_time = start.elapsed();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();

    let lookup = exported.names.column_lookup();
    let parsed = if solution_file.exists() {
        Some(parse_highs_solution(&fs::read_to_string(&solution_file)?, &lookup, model.num_vars()))
    } else {
        None
    };
    if !solver.keep_files {
        let _ = fs::remove_dir_all(&dir);
    }

    if killed {
        let (objective, solution) = match parsed {
            Some(Ok(p)) if !p.values.is_empty() => (p.objective.unwrap_or(f64::NAN), p.values),
            _ => (f64::NAN, Vec::new()),
        };
        return Ok(SolveResult {
            status: SolveStatus::TimeLimit,
            objective,
            solution,
            gap: f64::NAN,
            wall_time,
            message: Some("wall-clock limit exceeded; solver killed".into()),
        });
    }
    if !status.success() {
        let mut diag = format!("solver exited with {status}");
        let tail = excerpt(&stderr);
        if !tail.is_empty() {
            diag.push_str(": ");
            diag.push_str(&tail);
        }
        return Ok(SolveResult {
            status: SolveStatus::BackendError,
            objective: f64::NAN,
            solution: Vec::new(),
            gap: f64::NAN,
            wall_time,
            message: Some(diag),
        });
    }
    let parsed = match parsed {
        Some(p) => p?,
        None => {
            return Ok(SolveResult {
                status: SolveStatus::BackendError,
                objective: f64::NAN,
                solution: Vec::new(),
                gap: f64::NAN,
                wall_time,
                message: Some(format!("solver wrote no solution file; stderr: {}", excerpt(&stderr))),
            })
        }
    };

    let gap = parse_gap(&stdout);
    let status = match parsed.model_status.as_str() {
        "Optimal" => SolveStatus::Optimal,
        "Infeasible" => SolveStatus::Infeasible,
        s if s.starts_with("Time limit") => SolveStatus::TimeLimit,
        "Unbounded" => return Err(MilpError::Unbounded),
        _ => SolveStatus::BackendError,
    };
    let has_values = !parsed.values.is_empty();
    let objective = match (status, parsed.objective) {
        (SolveStatus::Optimal | SolveStatus::TimeLimit, Some(o)) if has_values => o,
        _ => f64::NAN,
    };
    Ok(SolveResult {
        status,
        objective,
        solution: if has_values { parsed.values } else { Vec::new() },
        gap: gap.unwrap_or(if status == SolveStatus::Optimal { 0.0 } else { f64::NAN }),
        wall_time,
        message: (status == SolveStatus::BackendError).then(|| format!("model status: {}", parsed.model_status)),
    })
}

fn excerpt(s: &str) -> String {
    let t = s.trim();
    if t.len() <= STDERR_EXCERPT {
        return t.to_string();
    }
    let mut start = t.len() - STDERR_EXCERPT;
    while !t.is_char_boundary(start) {
        start += 1;
    }
    format!("...{}", &t[start..])
}

fn parse_gap(stdout: &str) -> Option<f64> {
    stdout
        .split_whitespace()
        .rev()
        .find_map(|tok| tok.strip_prefix("gap=").and_then(|v| v.parse::<f64>().ok()))
}

#[derive(Debug)]
pub(crate) struct ParsedSolution {
    pub model_status: String,
    pub objective: Option<f64>,
    /// Empty when the file carries no primal values.
    pub values: Vec<f64>,
}

pub(crate) fn parse_highs_solution(
    text: &str,
    lookup: &HashMap<&str, usize>,
    ncols: usize,
) -> Result<ParsedSolution, MilpError> {
    let mut lines = text.lines().map(str::trim);
    let mut model_status = None;
    let mut objective = None;
    let mut values = Vec::new();
    while let Some(line) = lines.next() {
        if line == "Model status" {
            model_status = lines.next().map(str::to_string);
        } else if line == "# Primal solution values" {
            let feas = lines.next().unwrap_or("");
            if feas == "None" {
                continue;
            }
            let obj_line = lines.next().unwrap_or("");
            objective = obj_line
                .strip_prefix("Objective")
                .and_then(|v| v.trim().parse::<f64>().ok());
            if objective.is_none() {
                return Err(MilpError::Parse(format!("expected objective line, got `{obj_line}`")));
            }
            let count_line = lines.next().unwrap_or("");
            let count: usize = count_line
                .strip_prefix("# Columns")
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| MilpError::Parse(format!("expected column count, got `{count_line}`")))?;
            if count != ncols {
                return Err(MilpError::Parse(format!("solution has {count} columns, model has {ncols}")));
            }
            let mut vals = vec![f64::NAN; ncols];
            for _ in 0..count {
                let l = lines.next().ok_or_else(|| MilpError::Parse("truncated column list".into()))?;
                let (name, v) = l
                    .rsplit_once(char::is_whitespace)
                    .ok_or_else(|| MilpError::Parse(format!("bad column line `{l}`")))?;
                let j = *lookup
                    .get(name.trim())
                    .ok_or_else(|| MilpError::Parse(format!("unknown column `{name}`")))?;
                vals[j] = v
                    .parse::<f64>()
                    .map_err(|_| MilpError::Parse(format!("bad value in `{l}`")))?;
            }
            if vals.iter().any(|v| v.is_nan()) {
                return Err(MilpError::Parse("missing column values".into()));
            }
            values = vals;
        }
    }
    let model_status = model_status.ok_or_else(|| MilpError::Parse("no `Model status` section".into()))?;
    Ok(ParsedSolution {
        model_status,
        objective,
        values,
    })
}
