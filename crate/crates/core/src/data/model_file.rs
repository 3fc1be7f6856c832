//! Versioned plain-text model persistence.
//!
//! Single-task layout (`mkfn-model v1`):
//!
//! ```text
//! mkfn-model v1
//! kind weighted|average|product
//! delta <float>
//! p <float>|none
//! kernels <J>
//! kernel <j> <name> sigma <float>|none width_factor <float>|none
//! beta <J>          (weighted kind only, one value per line)
//! alpha <n>         (one value per line)
//! train none | train <view_mode> <n> <source...>
//! diag none | diag <iters> <final_change> <objective> <converged> <degenerate>
//! end
//! ```
//!
//! Joint layout (`mkfn-joint-model v1`) stores the shared weight block
//! followed by per-task coefficient blocks keyed by task name.

use std::fs;
use std::path::Path;

use nalgebra::DVector;

use crate::data::{fmt_f64, write_atomic};
use crate::error::{Error, Result};
use crate::model::{
    FitDiagnostics, JointTrainedModel, KernelCombiner, KernelInfo, TrainRef, TrainedModel,
    ViewMode,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const SINGLE_MAGIC: &str = "mkfn-model";
const JOINT_MAGIC: &str = "mkfn-joint-model";

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), fmt_f64)
}

fn sanitize(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("_")
}

fn push_kernels(out: &mut String, kernels: &[KernelInfo]) {
    out.push_str(&format!("kernels {}\n", kernels.len()));
    for (j, k) in kernels.iter().enumerate() {
        out.push_str(&format!(
            "kernel {j} {} sigma {} width_factor {}\n",
            sanitize(&k.name),
            fmt_opt(k.sigma),
            fmt_opt(k.width_factor),
        ));
    }
}

fn push_vector(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(&format!("{tag} {}\n", values.len()));
    for v in values {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
}

/// Serializes a trained model; lossless for every numeric field.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{SINGLE_MAGIC} v{MODEL_FORMAT_VERSION}\n"));
    out.push_str(&format!("kind {}\n", model.combiner.tag()));
    out.push_str(&format!("delta {}\n", fmt_f64(model.delta)));
    out.push_str(&format!("p {}\n", fmt_opt(model.p)));
    push_kernels(&mut out, &model.kernels);
    if let KernelCombiner::Weighted(beta) = &model.combiner {
        push_vector(&mut out, "beta", beta);
    }
    push_vector(&mut out, "alpha", model.alpha.as_slice());
    match &model.train_ref {
        None => out.push_str("train none\n"),
        Some(t) => out.push_str(&format!(
            "train {} {} {}\n",
            t.view_mode.tag(),
            t.n,
            t.source
        )),
    }
    match &model.diagnostics {
        None => out.push_str("diag none\n"),
        Some(d) => out.push_str(&format!(
            "diag {} {} {} {} {}\n",
            d.iterations_used,
            fmt_f64(d.final_change),
            fmt_f64(d.objective),
            d.converged,
            d.degenerate_responses
        )),
    }
    out.push_str("end\n");
    write_atomic(path, &out)
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate() }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        for (idx, raw) in self.lines.by_ref() {
            let line = raw.trim_end();
            if !line.is_empty() {
                return Ok((idx + 1, line));
            }
        }
        Err(Error::Format("unexpected end of model file".into()))
    }

    fn expect_field<'b>(&mut self, key: &str, line: &'b str, line_no: usize) -> Result<&'b str> {
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected '{key} ...', found '{line}'"),
            })
    }

    fn field(&mut self, key: &str) -> Result<(usize, String)> {
        let (line_no, line) = self.next()?;
        let rest = self.expect_field(key, line, line_no)?;
        Ok((line_no, rest.to_string()))
    }

    fn float_field(&mut self, key: &str) -> Result<f64> {
        let (line_no, rest) = self.field(key)?;
        rest.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad float '{rest}'"),
        })
    }

    fn opt_float_field(&mut self, key: &str) -> Result<Option<f64>> {
        let (line_no, rest) = self.field(key)?;
        parse_opt_float(&rest, line_no)
    }

    fn vector(&mut self, tag: &str) -> Result<Vec<f64>> {
        let (line_no, rest) = self.field(tag)?;
        let count: usize = rest.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad count '{rest}'"),
        })?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (line_no, line) = self.next()?;
            values.push(line.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad float '{line}'"),
            })?);
        }
        Ok(values)
    }
}

fn parse_opt_float(s: &str, line_no: usize) -> Result<Option<f64>> {
    if s == "none" {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad float '{s}'"),
        })
    }
}

fn check_magic(line: &str, magic: &str) -> Result<()> {
    let mut parts = line.split_whitespace();
    let found_magic = parts.next().unwrap_or_default();
    let version = parts.next().unwrap_or_default();
    if found_magic != magic || !version.starts_with('v') {
        return Err(Error::Format(format!(
            "not a {magic} file (first line '{line}')"
        )));
    }
    let v: u32 = version[1..].parse().map_err(|_| Error::Format(format!(
        "bad version token '{version}'"
    )))?;
    if v > MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: v,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    Ok(())
}

fn parse_kernels(parser: &mut Parser) -> Result<Vec<KernelInfo>> {
    let (line_no, rest) = parser.field("kernels")?;
    let count: usize = rest.parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("bad kernel count '{rest}'"),
    })?;
    let mut kernels = Vec::with_capacity(count);
    for _ in 0..count {
        let (line_no, line) = parser.next()?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 7 || toks[0] != "kernel" || toks[3] != "sigma" || toks[5] != "width_factor"
        {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("bad kernel record '{line}'"),
            });
        }
        kernels.push(KernelInfo {
            name: toks[2].to_string(),
            sigma: parse_opt_float(toks[4], line_no)?,
            width_factor: parse_opt_float(toks[6], line_no)?,
        });
    }
    Ok(kernels)
}

/// Loads a single-task model, verifying the format version.
pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path)?;
    let mut parser = Parser::new(&text);
    let (_, first) = parser.next()?;
    check_magic(first, SINGLE_MAGIC)?;

    let (kind_line_no, kind) = parser.field("kind")?;
    let delta = parser.float_field("delta")?;
    let p = parser.opt_float_field("p")?;
    let kernels = parse_kernels(&mut parser)?;
    let combiner = match kind.as_str() {
        "weighted" => KernelCombiner::Weighted(parser.vector("beta")?),
        "average" => KernelCombiner::Average,
        "product" => KernelCombiner::Product,
        other => {
            return Err(Error::Parse {
                line: kind_line_no,
                msg: format!("unknown combiner kind '{other}'"),
            })
        }
    };
    if let KernelCombiner::Weighted(beta) = &combiner {
        if beta.len() != kernels.len() {
            return Err(Error::Format(format!(
                "weight count {} does not match kernel count {}",
                beta.len(),
                kernels.len()
            )));
        }
    }
    let alpha = DVector::from_vec(parser.vector("alpha")?);

    let (train_line_no, train) = parser.field("train")?;
    let train_ref = if train == "none" {
        None
    } else {
        let mut toks = train.splitn(3, ' ');
        let mode = toks.next().unwrap_or_default();
        let n = toks.next().unwrap_or_default();
        let source = toks.next().unwrap_or_default();
        Some(TrainRef {
            view_mode: ViewMode::from_tag(mode)?,
            n: n.parse().map_err(|_| Error::Parse {
                line: train_line_no,
                msg: format!("bad train sample count '{n}'"),
            })?,
            source: source.to_string(),
        })
    };

    let (diag_line_no, diag) = parser.field("diag")?;
    let diagnostics = if diag == "none" {
        None
    } else {
        let toks: Vec<&str> = diag.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::Parse {
                line: diag_line_no,
                msg: format!("bad diagnostics record '{diag}'"),
            });
        }
        let bad = |what: &str| Error::Parse {
            line: diag_line_no,
            msg: format!("bad diagnostics {what}"),
        };
        Some(FitDiagnostics {
            iterations_used: toks[0].parse().map_err(|_| bad("iterations"))?,
            final_change: toks[1].parse().map_err(|_| bad("final_change"))?,
            objective: toks[2].parse().map_err(|_| bad("objective"))?,
            converged: toks[3].parse().map_err(|_| bad("converged"))?,
            degenerate_responses: toks[4].parse().map_err(|_| bad("degenerate flag"))?,
        })
    };
    let (end_line_no, end) = parser.next()?;
    if end != "end" {
        return Err(Error::Parse {
            line: end_line_no,
            msg: format!("expected 'end', found '{end}'"),
        });
    }
    Ok(TrainedModel {
        alpha,
        delta,
        p,
        combiner,
        kernels,
        train_ref,
        diagnostics,
    })
}

/// Serializes a jointly trained model: shared weights plus per-task
/// coefficient blocks keyed by task name.
pub fn save_joint_model(model: &JointTrainedModel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{JOINT_MAGIC} v{MODEL_FORMAT_VERSION}\n"));
    out.push_str(&format!("delta {}\n", fmt_f64(model.delta)));
    out.push_str(&format!("p {}\n", fmt_f64(model.p)));
    push_kernels(&mut out, &model.kernels);
    push_vector(&mut out, "beta", &model.beta);
    out.push_str(&format!("tasks {}\n", model.tasks.len()));
    for (c, (name, alpha)) in model.tasks.iter().enumerate() {
        out.push_str(&format!("task {c} {}\n", sanitize(name)));
        push_vector(&mut out, "alpha", alpha.as_slice());
    }
    out.push_str(&format!(
        "diag {} {} {}\n",
        model.iterations_used,
        fmt_f64(model.final_change),
        model.converged
    ));
    out.push_str("end\n");
    write_atomic(path, &out)
}

/// Loads a jointly trained model.
pub fn load_joint_model(path: &Path) -> Result<JointTrainedModel> {
    let text = fs::read_to_string(path)?;
    let mut parser = Parser::new(&text);
    let (_, first) = parser.next()?;
    check_magic(first, JOINT_MAGIC)?;
    let delta = parser.float_field("delta")?;
    let p = parser.float_field("p")?;
    let kernels = parse_kernels(&mut parser)?;
    let beta = parser.vector("beta")?;
    let (line_no, rest) = parser.field("tasks")?;
    let count: usize = rest.parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("bad task count '{rest}'"),
    })?;
    let mut tasks = Vec::with_capacity(count);
    for _ in 0..count {
        let (line_no, line) = parser.next()?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "task" {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("bad task record '{line}'"),
            });
        }
        let alpha = DVector::from_vec(parser.vector("alpha")?);
        tasks.push((toks[2].to_string(), alpha));
    }
    let (diag_line_no, diag) = parser.field("diag")?;
    let toks: Vec<&str> = diag.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(Error::Parse {
            line: diag_line_no,
            msg: format!("bad diagnostics record '{diag}'"),
        });
    }
    let bad = |what: &str| Error::Parse {
        line: diag_line_no,
        msg: format!("bad diagnostics {what}"),
    };
    let iterations_used = toks[0].parse().map_err(|_| bad("iterations"))?;
    let final_change = toks[1].parse().map_err(|_| bad("final_change"))?;
    let converged = toks[2].parse().map_err(|_| bad("converged"))?;
    let (end_line_no, end) = parser.next()?;
    if end != "end" {
        return Err(Error::Parse {
            line: end_line_no,
            msg: format!("expected 'end', found '{end}'"),
        });
    }
    Ok(JointTrainedModel {
        beta,
        p,
        delta,
        tasks,
        kernels,
        iterations_used,
        final_change,
        converged,
    })
}
