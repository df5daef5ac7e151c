//! Posterior sample storage and its JSON serialization.

use serde_json::{json, Map, Value};

use crate::program::ParamSpec;

/// Per-draw sampler statistics, per chain.
#[derive(Clone, Debug, Default)]
pub struct TraceStats {
    /// Step size used after warmup, one per chain.
    pub step_size: Vec<f64>,
    /// Tree depth per [chain][draw].
    pub tree_depth: Vec<Vec<u32>>,
    /// Divergence flag per [chain][draw].
    pub divergent: Vec<Vec<bool>>,
    /// Hamiltonian energy per [chain][draw].
    pub energy: Vec<Vec<f64>>,
    /// Acceptance statistic per [chain][draw].
    pub accept: Vec<Vec<f64>>,
}

impl TraceStats {
    pub fn divergences(&self) -> Vec<u64> {
        self.divergent
            .iter()
            .map(|c| c.iter().filter(|&&d| d).count() as u64)
            .collect()
    }
}

/// chains x draws x parameters posterior samples in constrained space.
#[derive(Clone, Debug)]
pub struct Trace {
    pub params: Vec<ParamSpec>,
    pub chains: usize,
    pub draws: usize,
    /// samples[param][chain][draw] = constrained values of that block.
    pub samples: Vec<Vec<Vec<Vec<f64>>>>,
    /// log_lik[chain][draw][observation].
    pub log_lik: Option<Vec<Vec<Vec<f64>>>>,
    pub stats: TraceStats,
}

impl Trace {
    /// Flattened scalar names: `beta` for scalars, `alpha[i]` for blocks.
    pub fn flat_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for p in &self.params {
            let d = p.constrained_dim();
            if d == 1 {
                names.push(p.name.clone());
            } else {
                for i in 0..d {
                    names.push(format!("{}[{i}]", p.name));
                }
            }
        }
        names
    }

    /// [chain][draw] series for a flat scalar name (`beta` or `alpha[3]`).
    pub fn scalar_series(&self, name: &str) -> Option<Vec<Vec<f64>>> {
        let (base, idx) = match name.find('[') {
            Some(b) => {
                let i: usize = name[b + 1..name.len() - 1].parse().ok()?;
                (&name[..b], i)
            }
            None => (name, 0),
        };
        let p = self.params.iter().position(|p| p.name == base)?;
        if idx >= self.params[p].constrained_dim() {
            return None;
        }
        Some(
            self.samples[p]
                .iter()
                .map(|chain| chain.iter().map(|draw| draw[idx]).collect())
                .collect(),
        )
    }

    pub fn total_divergences(&self) -> u64 {
        self.stats.divergences().iter().sum()
    }

    /// Pointwise log-likelihood matrix flattened over chains:
    /// rows = draws (all chains), columns = observations.
    pub fn log_lik_matrix(&self) -> Option<Vec<Vec<f64>>> {
        let ll = self.log_lik.as_ref()?;
        let mut rows = Vec::new();
        for chain in ll {
            for draw in chain {
                rows.push(draw.clone());
            }
        }
        Some(rows)
    }

    /// Serialize to the trace JSON document. Key order is deterministic, so
    /// identical traces serialize byte-identically.
    pub fn to_json(&self) -> Value {
        let params: Vec<Value> = self
            .params
            .iter()
            .map(|p| {
                json!({
                    "name": p.name,
                    "shape": p.shape,
                    "constraint": p.constraint.name(),
                })
            })
            .collect();
        let mut samples = Map::new();
        for (pi, p) in self.params.iter().enumerate() {
            let scalar = p.constrained_dim() == 1;
            let chains: Vec<Value> = self.samples[pi]
                .iter()
                .map(|chain| {
                    let draws: Vec<Value> = chain
                        .iter()
                        .map(|draw| {
                            if scalar {
                                json!(draw[0])
                            } else {
                                json!(draw)
                            }
                        })
                        .collect();
                    Value::Array(draws)
                })
                .collect();
            samples.insert(p.name.clone(), Value::Array(chains));
        }
        let mut doc = Map::new();
        doc.insert("params".into(), Value::Array(params));
        doc.insert("chains".into(), json!(self.chains));
        doc.insert("draws".into(), json!(self.draws));
        doc.insert("samples".into(), Value::Object(samples));
        if let Some(ll) = &self.log_lik {
            doc.insert("log_lik".into(), json!(ll));
        }
        doc.insert(
            "stats".into(),
            json!({
                "divergences": self.stats.divergences(),
                "step_size": self.stats.step_size,
                "tree_depth": self.stats.tree_depth,
            }),
        );
        Value::Object(doc)
    }
}
