//! Differentiable unnormalized log-posteriors over named, constrained
//! parameter blocks.
//!
//! A [`Program`] owns the parameter layout and a density closure written in
//! terms of constrained values; evaluation applies the constraint transforms,
//! adds their log-Jacobians, and runs one reverse sweep for the gradient.

use crate::tape::{Tape, Var};
use crate::transform::Constraint;
use crate::Error;

#[derive(Clone, Debug)]
pub struct ParamSpec {
    pub name: String,
    /// Shape of the constrained value. For scalar constraints this is the
    /// array shape (product = element count); for simplex/cholesky_corr it is
    /// the shape of the single structured value ([K] / [K, K]).
    pub shape: Vec<usize>,
    pub constraint: Constraint,
}

impl ParamSpec {
    pub fn scalar(name: &str, constraint: Constraint) -> ParamSpec {
        ParamSpec {
            name: name.to_string(),
            shape: vec![],
            constraint,
        }
    }

    pub fn vector(name: &str, n: usize, constraint: Constraint) -> ParamSpec {
        ParamSpec {
            name: name.to_string(),
            shape: vec![n],
            constraint,
        }
    }

    pub fn simplex(name: &str, k: usize) -> ParamSpec {
        ParamSpec {
            name: name.to_string(),
            shape: vec![k],
            constraint: Constraint::Simplex(k),
        }
    }

    pub fn cholesky_corr(name: &str, k: usize) -> ParamSpec {
        ParamSpec {
            name: name.to_string(),
            shape: vec![k, k],
            constraint: Constraint::CholeskyCorr(k),
        }
    }

    /// Number of independent constraint units in this block.
    pub fn units(&self) -> usize {
        match self.constraint {
            Constraint::Simplex(_) | Constraint::CholeskyCorr(_) => 1,
            _ => self.shape.iter().product::<usize>().max(1),
        }
    }

    pub fn unconstrained_dim(&self) -> usize {
        self.units() * self.constraint.unconstrained_dim()
    }

    pub fn constrained_dim(&self) -> usize {
        self.units() * self.constraint.constrained_dim()
    }
}

/// Constrained parameter values of one evaluation, addressable by name.
pub struct ParamView<'p, 't> {
    specs: &'p [ParamSpec],
    values: Vec<Vec<Var<'t>>>,
}

impl<'p, 't> ParamView<'p, 't> {
    pub fn get(&self, name: &str) -> &[Var<'t>] {
        let i = self
            .specs
            .iter()
            .position(|s| s.name == name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"));
        &self.values[i]
    }
}

/// What the density closure returns: the log-density term (prior +
/// likelihood, no Jacobians) and optional per-observation log-likelihoods.
pub struct DensityParts<'t> {
    pub log_density: Var<'t>,
    pub log_lik: Option<Vec<Var<'t>>>,
}

type DensityFn =
    Box<dyn for<'p, 't> Fn(&'t Tape, &ParamView<'p, 't>) -> DensityParts<'t> + Send + Sync>;

pub struct Program {
    pub params: Vec<ParamSpec>,
    density: DensityFn,
}

/// One evaluation of a [`Program`].
pub struct Eval {
    pub value: f64,
    pub grad: Vec<f64>,
    pub log_lik: Option<Vec<f64>>,
}

impl Program {
    pub fn new(
        params: Vec<ParamSpec>,
        density: impl for<'p, 't> Fn(&'t Tape, &ParamView<'p, 't>) -> DensityParts<'t>
            + Send
            + Sync
            + 'static,
    ) -> Program {
        let mut seen = std::collections::HashSet::new();
        for p in &params {
            assert!(seen.insert(p.name.clone()), "duplicate parameter {}", p.name);
        }
        Program {
            params,
            density: Box::new(density),
        }
    }

    pub fn dim(&self) -> usize {
        self.params.iter().map(|p| p.unconstrained_dim()).sum()
    }

    /// Name of the parameter block owning unconstrained coordinate `idx`.
    pub fn param_at(&self, idx: usize) -> &str {
        let mut off = 0;
        for p in &self.params {
            off += p.unconstrained_dim();
            if idx < off {
                return &p.name;
            }
        }
        panic!("index {idx} out of range");
    }

    /// Evaluate log-density and gradient at an unconstrained point.
    ///
    /// Out-of-support evaluations come back as `value = -inf` with a zero
    /// gradient (the sampler rejects them); NaNs are reported as errors
    /// naming the offending parameter block.
    pub fn eval(&self, u: &[f64]) -> Result<Eval, Error> {
        assert_eq!(u.len(), self.dim());
        let tape = Tape::new();
        let inputs: Vec<Var> = u.iter().map(|&v| tape.input(v)).collect();

        let mut values = Vec::with_capacity(self.params.len());
        let mut log_jac: Option<Var> = None;
        let mut off = 0;
        for p in &self.params {
            let mut block = Vec::with_capacity(p.constrained_dim());
            let per_unit = p.constraint.unconstrained_dim();
            for unit in 0..p.units() {
                let start = off + unit * per_unit;
                let lj = p
                    .constraint
                    .push_constrained(&inputs[start..start + per_unit], &mut block);
                log_jac = Some(match log_jac {
                    Some(acc) => acc + lj,
                    None => lj,
                });
            }
            off += p.unconstrained_dim();
            values.push(block);
        }
        let view = ParamView {
            specs: &self.params,
            values,
        };
        let parts = (self.density)(&tape, &view);
        let total = match log_jac {
            Some(lj) => parts.log_density + lj,
            None => parts.log_density,
        };

        let value = total.value();
        if value == f64::NEG_INFINITY {
            return Ok(Eval {
                value,
                grad: vec![0.0; u.len()],
                log_lik: None,
            });
        }
        if !value.is_finite() {
            return Err(Error::NonFinite {
                param: self.param_at(0).to_string(),
            });
        }
        let grad = tape.gradient(total, u.len());
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                param: self.param_at(i).to_string(),
            });
        }
        let log_lik = parts
            .log_lik
            .map(|ll| ll.iter().map(|v| v.value()).collect());
        Ok(Eval {
            value,
            grad,
            log_lik,
        })
    }

    /// Map an unconstrained point to per-parameter constrained values
    /// (plain floats, no tape). Used when storing draws.
    pub fn constrain(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.params.len());
        let mut off = 0;
        for p in &self.params {
            let mut block = Vec::with_capacity(p.constrained_dim());
            let per_unit = p.constraint.unconstrained_dim();
            for unit in 0..p.units() {
                let start = off + unit * per_unit;
                p.constraint
                    .push_constrained(&u[start..start + per_unit], &mut block);
            }
            off += p.unconstrained_dim();
            out.push(block);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::Constraint;

    #[test]
    fn quadratic_gradient() {
        // density = -x^2/2 over one real parameter: grad = -x.
        let prog = Program::new(
            vec![ParamSpec::scalar("x", Constraint::Real)],
            |_tape, view| {
                let x = view.get("x")[0];
                DensityParts {
                    log_density: -(x * x) / 2.0,
                    log_lik: None,
                }
            },
        );
        let e = prog.eval(&[3.0]).unwrap();
        assert_eq!(e.value, -4.5);
        assert_eq!(e.grad, vec![-3.0]);
    }

    #[test]
    fn jacobian_included_for_positive() {
        // Exponential(1) prior on sigma > 0: log p = -sigma; in unconstrained
        // space log p(u) = -e^u + u, grad = -e^u + 1, maximized at u = 0.
        let prog = Program::new(
            vec![ParamSpec::scalar("sigma", Constraint::Positive)],
            |_tape, view| {
                let s = view.get("sigma")[0];
                DensityParts {
                    log_density: -s,
                    log_lik: None,
                }
            },
        );
        let e = prog.eval(&[0.0]).unwrap();
        assert!((e.value - (-1.0)).abs() < 1e-12);
        assert!(e.grad[0].abs() < 1e-12);
        let e2 = prog.eval(&[1.0]).unwrap();
        assert!((e2.grad[0] - (1.0 - 1.0f64.exp())).abs() < 1e-12);
    }

    #[test]
    fn neg_infinity_rejection_path() {
        let prog = Program::new(
            vec![ParamSpec::scalar("x", Constraint::Real)],
            |tape, _view| DensityParts {
                log_density: tape.constant(f64::NEG_INFINITY),
                log_lik: None,
            },
        );
        let e = prog.eval(&[0.5]).unwrap();
        assert_eq!(e.value, f64::NEG_INFINITY);
        assert_eq!(e.grad, vec![0.0]);
    }

    #[test]
    fn param_lookup_by_offset() {
        let prog = Program::new(
            vec![
                ParamSpec::vector("a", 2, Constraint::Real),
                ParamSpec::simplex("w", 3),
            ],
            |tape, _| DensityParts {
                log_density: tape.constant(0.0),
                log_lik: None,
            },
        );
        assert_eq!(prog.dim(), 4);
        assert_eq!(prog.param_at(1), "a");
        assert_eq!(prog.param_at(2), "w");
        let c = prog.constrain(&[0.1, -0.2, 0.0, 0.0]);
        assert_eq!(c[0], vec![0.1, -0.2]);
        assert!((c[1].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
