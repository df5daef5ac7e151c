//! Reload stored trace JSON documents so summaries can be recomputed
//! without refitting.

use flaretk_inference::program::ParamSpec;
use flaretk_inference::trace::{Trace, TraceStats};
use flaretk_inference::transform::Constraint;
use serde_json::Value;

use crate::CliError;

fn bad(msg: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("trace json: {msg}"))
}

fn constraint(name: &str, shape: &[usize]) -> Result<Constraint, CliError> {
    let k = || {
        shape
            .first()
            .copied()
            .ok_or_else(|| bad("structured constraint with empty shape"))
    };
    match name {
        "real" => Ok(Constraint::Real),
        "positive" => Ok(Constraint::Positive),
        "unit_interval" => Ok(Constraint::UnitInterval),
        "simplex" => Ok(Constraint::Simplex(k()?)),
        "cholesky_corr" => Ok(Constraint::CholeskyCorr(k()?)),
        other => Err(bad(format!("unknown constraint {other:?}"))),
    }
}

fn f64s(v: &Value, what: &str) -> Result<Vec<f64>, CliError> {
    match v {
        Value::Array(a) => a
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad(format!("non-numeric value in {what}"))))
            .collect(),
        other => other
            .as_f64()
            .map(|x| vec![x])
            .ok_or_else(|| bad(format!("non-numeric value in {what}"))),
    }
}

/// Parse the trace document written by the fit subcommands.
pub fn trace_from_json(text: &str) -> Result<Trace, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(bad)?;
    let chains = doc["chains"].as_u64().ok_or_else(|| bad("missing chains"))? as usize;
    let draws = doc["draws"].as_u64().ok_or_else(|| bad("missing draws"))? as usize;

    let mut params = Vec::new();
    for p in doc["params"].as_array().ok_or_else(|| bad("missing params"))? {
        let name = p["name"].as_str().ok_or_else(|| bad("param without name"))?;
        let shape: Vec<usize> = p["shape"]
            .as_array()
            .ok_or_else(|| bad("param without shape"))?
            .iter()
            .map(|s| s.as_u64().map(|v| v as usize).ok_or_else(|| bad("bad shape")))
            .collect::<Result<_, _>>()?;
        let cname = p["constraint"].as_str().ok_or_else(|| bad("param without constraint"))?;
        params.push(ParamSpec {
            name: name.to_string(),
            constraint: constraint(cname, &shape)?,
            shape,
        });
    }

    let sample_map = doc["samples"].as_object().ok_or_else(|| bad("missing samples"))?;
    let mut samples = Vec::new();
    for p in &params {
        let per_chain = sample_map
            .get(&p.name)
            .and_then(Value::as_array)
            .ok_or_else(|| bad(format!("missing samples for {}", p.name)))?;
        if per_chain.len() != chains {
            return Err(bad(format!("chain count mismatch for {}", p.name)));
        }
        let mut chains_out = Vec::new();
        for chain in per_chain {
            let draws_in = chain
                .as_array()
                .ok_or_else(|| bad(format!("bad chain for {}", p.name)))?;
            if draws_in.len() != draws {
                return Err(bad(format!("draw count mismatch for {}", p.name)));
            }
            let mut draws_out = Vec::new();
            for d in draws_in {
                draws_out.push(f64s(d, &p.name)?);
            }
            chains_out.push(draws_out);
        }
        samples.push(chains_out);
    }

    let log_lik = match doc.get("log_lik") {
        None | Some(Value::Null) => None,
        Some(ll) => {
            let per_chain = ll.as_array().ok_or_else(|| bad("bad log_lik"))?;
            let mut out = Vec::new();
            for chain in per_chain {
                let draws_in = chain.as_array().ok_or_else(|| bad("bad log_lik chain"))?;
                let mut chain_out = Vec::new();
                for d in draws_in {
                    chain_out.push(f64s(d, "log_lik")?);
                }
                out.push(chain_out);
            }
            Some(out)
        }
    };

    Ok(Trace {
        params,
        chains,
        draws,
        samples,
        log_lik,
        stats: TraceStats::default(),
    })
}
