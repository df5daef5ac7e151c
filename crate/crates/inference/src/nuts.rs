//! No-U-Turn sampling with multinomial trajectory selection, dual-averaging
//! step-size adaptation, and diagonal mass-matrix estimation in expanding
//! warmup windows.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;

use crate::program::Program;
use crate::trace::{Trace, TraceStats};
use crate::Error;

const DIVERGENCE_THRESHOLD: f64 = 1000.0;
const INIT_RETRIES: usize = 100;

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub chains: usize,
    pub warmup_iters: usize,
    pub draw_iters: usize,
    pub target_accept: f64,
    pub max_tree_depth: usize,
    pub seed: u64,
    pub init_jitter: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            warmup_iters: 1000,
            draw_iters: 1000,
            target_accept: 0.8,
            max_tree_depth: 10,
            seed: 0,
            init_jitter: 2.0,
        }
    }
}

/// Point in phase space with cached density evaluation.
#[derive(Clone)]
struct State {
    q: Vec<f64>,
    p: Vec<f64>,
    grad: Vec<f64>,
    logp: f64,
    log_lik: Option<Vec<f64>>,
}

fn kinetic(p: &[f64], inv_mass: &[f64]) -> f64 {
    0.5 * p.iter().zip(inv_mass).map(|(pi, m)| pi * pi * m).sum::<f64>()
}

fn leapfrog(program: &Program, s: &State, eps: f64, inv_mass: &[f64]) -> State {
    let dim = s.q.len();
    let mut p = s.p.clone();
    for i in 0..dim {
        p[i] += 0.5 * eps * s.grad[i];
    }
    let mut q = s.q.clone();
    for i in 0..dim {
        q[i] += eps * p[i] * inv_mass[i];
    }
    // A numerically poisoned evaluation becomes a divergent leaf, not a hard
    // failure; the trajectory stops there.
    let (value, grad, log_lik) = match program.eval(&q) {
        Ok(e) => (e.value, e.grad, e.log_lik),
        Err(_) => (f64::NEG_INFINITY, vec![0.0; dim], None),
    };
    for i in 0..dim {
        p[i] += 0.5 * eps * grad[i];
    }
    State {
        q,
        p,
        grad,
        logp: value,
        log_lik,
    }
}

/// One NUTS trajectory subtree.
struct Tree {
    minus: State,
    plus: State,
    proposal: State,
    /// log-sum over leaves of exp(-H).
    log_sum_weight: f64,
    sum_accept: f64,
    n_leaves: usize,
    divergent: bool,
    turning: bool,
}

struct TreeCtx<'a> {
    program: &'a Program,
    inv_mass: &'a [f64],
    eps: f64,
    h0: f64,
}

fn uturn(minus: &State, plus: &State, inv_mass: &[f64]) -> bool {
    let mut dq_pm = 0.0;
    let mut dq_pp = 0.0;
    for i in 0..minus.q.len() {
        let dq = plus.q[i] - minus.q[i];
        dq_pm += dq * minus.p[i] * inv_mass[i];
        dq_pp += dq * plus.p[i] * inv_mass[i];
    }
    dq_pm < 0.0 || dq_pp < 0.0
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn build_tree(ctx: &TreeCtx, from: &State, dir: f64, depth: usize, rng: &mut ChaCha8Rng) -> Tree {
    if depth == 0 {
        let next = leapfrog(ctx.program, from, dir * ctx.eps, ctx.inv_mass);
        let h = -next.logp + kinetic(&next.p, ctx.inv_mass);
        let delta = h - ctx.h0;
        let divergent = !delta.is_finite() || delta > DIVERGENCE_THRESHOLD;
        let accept = if delta.is_finite() {
            (-delta).exp().min(1.0)
        } else {
            0.0
        };
        let w = if divergent { f64::NEG_INFINITY } else { -h };
        return Tree {
            minus: next.clone(),
            plus: next.clone(),
            proposal: next,
            log_sum_weight: w + ctx.h0, // relative weight exp(h0 - h)
            sum_accept: accept,
            n_leaves: 1,
            divergent,
            turning: false,
        };
    }
    let first = build_tree(ctx, from, dir, depth - 1, rng);
    if first.divergent || first.turning {
        return first;
    }
    let outer = if dir > 0.0 { &first.plus } else { &first.minus };
    let second = build_tree(ctx, outer, dir, depth - 1, rng);

    let log_sum_weight = log_sum_exp2(first.log_sum_weight, second.log_sum_weight);
    // Multinomial sampling within the subtree: pick the second half's
    // proposal with probability proportional to its weight.
    let take_second = {
        let p = (second.log_sum_weight - log_sum_weight).exp();
        rng.random::<f64>() < p
    };
    let (minus, plus) = if dir > 0.0 {
        (first.minus.clone(), second.plus.clone())
    } else {
        (second.minus.clone(), first.plus.clone())
    };
    let turning =
        second.turning || second.divergent || uturn(&minus, &plus, ctx.inv_mass);
    Tree {
        proposal: if take_second {
            second.proposal
        } else {
            first.proposal
        },
        minus,
        plus,
        log_sum_weight,
        sum_accept: first.sum_accept + second.sum_accept,
        n_leaves: first.n_leaves + second.n_leaves,
        divergent: second.divergent,
        turning,
    }
}

struct Transition {
    state: State,
    accept_stat: f64,
    tree_depth: u32,
    divergent: bool,
    energy: f64,
}

fn transition(
    program: &Program,
    current: &mut State,
    eps: f64,
    inv_mass: &[f64],
    max_depth: usize,
    rng: &mut ChaCha8Rng,
) -> Transition {
    // Fresh momentum: p_i ~ N(0, m_i) with m_i = 1 / inv_mass_i.
    let dim = current.q.len();
    for i in 0..dim {
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        current.p[i] = z / inv_mass[i].sqrt();
    }
    let h0 = -current.logp + kinetic(&current.p, inv_mass);
    let ctx = TreeCtx {
        program,
        inv_mass,
        eps,
        h0,
    };
    let mut minus = current.clone();
    let mut plus = current.clone();
    let mut proposal = current.clone();
    let mut log_sum_weight = 0.0; // exp(h0 - h0) = 1 for the start point
    let mut sum_accept = 0.0;
    let mut n_leaves = 0usize;
    let mut divergent = false;
    let mut depth = 0usize;

    while depth < max_depth {
        let dir: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let from = if dir > 0.0 { plus.clone() } else { minus.clone() };
        let tree = build_tree(&ctx, &from, dir, depth, rng);
        sum_accept += tree.sum_accept;
        n_leaves += tree.n_leaves;
        if tree.divergent {
            divergent = true;
            break;
        }
        if !tree.turning {
            // Biased progressive sampling toward the new subtree.
            let p = (tree.log_sum_weight - log_sum_weight).exp().min(1.0);
            if rng.random::<f64>() < p {
                proposal = tree.proposal.clone();
            }
        }
        log_sum_weight = log_sum_exp2(log_sum_weight, tree.log_sum_weight);
        if dir > 0.0 {
            plus = tree.plus;
        } else {
            minus = tree.minus;
        }
        if tree.turning || uturn(&minus, &plus, inv_mass) {
            depth += 1;
            break;
        }
        depth += 1;
    }
    let accept_stat = if n_leaves > 0 {
        sum_accept / n_leaves as f64
    } else {
        0.0
    };
    let energy = -proposal.logp + kinetic(&proposal.p, inv_mass);
    *current = proposal.clone();
    Transition {
        state: proposal,
        accept_stat,
        tree_depth: depth as u32,
        divergent,
        energy,
    }
}

/// Dual-averaging step-size adaptation (Nesterov primal averaging).
struct DualAverage {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    count: u64,
    gamma: f64,
    t0: f64,
    kappa: f64,
}

impl DualAverage {
    fn new(eps0: f64) -> DualAverage {
        DualAverage {
            mu: (10.0 * eps0).ln(),
            log_eps: eps0.ln(),
            log_eps_bar: eps0.ln(),
            h_bar: 0.0,
            count: 0,
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
        }
    }

    fn update(&mut self, accept: f64, target: f64) {
        self.count += 1;
        let m = self.count as f64;
        let w = 1.0 / (m + self.t0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (target - accept);
        self.log_eps = self.mu - m.sqrt() / self.gamma * self.h_bar;
        let mw = m.powf(-self.kappa);
        self.log_eps_bar = mw * self.log_eps + (1.0 - mw) * self.log_eps_bar;
    }

    fn eps(&self) -> f64 {
        self.log_eps.exp()
    }

    fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Online variance accumulator for mass-matrix estimation.
struct Welford {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Welford {
        Welford {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.n as f64;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    /// Regularized sample variance (shrunk toward unit scale).
    fn variance(&self) -> Option<Vec<f64>> {
        if self.n < 2 {
            return None;
        }
        let n = self.n as f64;
        Some(
            self.m2
                .iter()
                .map(|&m2| {
                    let v = m2 / (n - 1.0);
                    (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0))
                })
                .collect(),
        )
    }
}

fn find_initial_eps(
    program: &Program,
    state: &State,
    inv_mass: &[f64],
    rng: &mut ChaCha8Rng,
) -> f64 {
    let dim = state.q.len();
    let mut s = state.clone();
    for i in 0..dim {
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        s.p[i] = z / inv_mass[i].sqrt();
    }
    let h0 = -s.logp + kinetic(&s.p, inv_mass);
    let mut eps = 1.0;
    let ratio_at = |eps: f64, s: &State| -> f64 {
        let next = leapfrog(program, s, eps, inv_mass);
        let h = -next.logp + kinetic(&next.p, inv_mass);
        let r = (h0 - h).exp();
        if r.is_finite() {
            r
        } else {
            0.0
        }
    };
    let r = ratio_at(eps, &s);
    let dir: f64 = if r > 0.5 { 1.0 } else { -1.0 };
    for _ in 0..50 {
        let r = ratio_at(eps, &s);
        if (dir > 0.0 && r <= 0.5) || (dir < 0.0 && r >= 0.5) {
            break;
        }
        eps *= 2.0f64.powf(dir);
        if !(1e-10..=1e10).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-8, 1e2)
}

/// Warmup window schedule (fast start, expanding slow windows, fast tail).
/// Returns iteration indices at which the mass matrix is re-estimated.
fn mass_update_points(warmup: usize) -> Vec<usize> {
    if warmup < 20 {
        return vec![];
    }
    let (init, term) = if warmup >= 150 {
        (75usize, 50usize)
    } else {
        ((warmup * 15 / 100).max(1), (warmup * 10 / 100).max(1))
    };
    let slow_total = warmup - init - term;
    let mut points = Vec::new();
    let mut start = init;
    let mut size = if warmup >= 150 { 25 } else { (slow_total / 4).max(1) };
    while start < init + slow_total {
        let remaining = init + slow_total - start;
        let this = if remaining < 2 * size { remaining } else { size };
        start += this;
        points.push(start);
        size *= 2;
    }
    points
}

struct ChainOutput {
    draws: Vec<Vec<f64>>, // unconstrained
    log_lik: Vec<Option<Vec<f64>>>,
    step_size: f64,
    tree_depth: Vec<u32>,
    divergent: Vec<bool>,
    energy: Vec<f64>,
    accept: Vec<f64>,
}

fn run_chain(program: &Program, cfg: &SamplerConfig, chain: usize) -> Result<ChainOutput, Error> {
    let dim = program.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64 + 1);

    // Initialization: uniform unconstrained draws until the density is
    // finite.
    let mut current = None;
    let mut last_err: Option<Error> = None;
    for _ in 0..INIT_RETRIES {
        let q: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(-cfg.init_jitter..=cfg.init_jitter))
            .collect();
        match program.eval(&q) {
            Ok(e) if e.value.is_finite() => {
                current = Some(State {
                    p: vec![0.0; dim],
                    grad: e.grad,
                    logp: e.value,
                    log_lik: e.log_lik,
                    q,
                });
                break;
            }
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let mut current = current.ok_or_else(|| match last_err {
        Some(Error::NonFinite { param }) => Error::Init { param },
        _ => Error::Init {
            param: program.param_at(0).to_string(),
        },
    })?;

    let mut inv_mass = vec![1.0; dim];
    let mut eps = find_initial_eps(program, &current, &inv_mass, &mut rng);
    let mut da = DualAverage::new(eps);
    let update_points = mass_update_points(cfg.warmup_iters);
    let mut welford = Welford::new(dim);

    for iter in 0..cfg.warmup_iters {
        let t = transition(
            program,
            &mut current,
            eps,
            &inv_mass,
            cfg.max_tree_depth,
            &mut rng,
        );
        da.update(t.accept_stat, cfg.target_accept);
        eps = da.eps();
        welford.push(&current.q);
        if update_points.contains(&(iter + 1)) {
            if let Some(var) = welford.variance() {
                inv_mass = var;
            }
            welford = Welford::new(dim);
            // Step-size adaptation continues across windows: a fresh
            // dual-averaging restart first swings toward its 10x attractor
            // and the short terminal window would end mid-swing.
        }
    }
    if cfg.warmup_iters > 0 {
        eps = da.adapted();
    }

    let mut out = ChainOutput {
        draws: Vec::with_capacity(cfg.draw_iters),
        log_lik: Vec::with_capacity(cfg.draw_iters),
        step_size: eps,
        tree_depth: Vec::with_capacity(cfg.draw_iters),
        divergent: Vec::with_capacity(cfg.draw_iters),
        energy: Vec::with_capacity(cfg.draw_iters),
        accept: Vec::with_capacity(cfg.draw_iters),
    };
    for _ in 0..cfg.draw_iters {
        let t = transition(
            program,
            &mut current,
            eps,
            &inv_mass,
            cfg.max_tree_depth,
            &mut rng,
        );
        out.draws.push(t.state.q.clone());
        out.log_lik.push(t.state.log_lik.clone());
        out.tree_depth.push(t.tree_depth);
        out.divergent.push(t.divergent);
        out.energy.push(t.energy);
        out.accept.push(t.accept_stat);
    }
    Ok(out)
}

/// Sample a program with NUTS across parallel chains.
pub fn nuts_sample(program: &Program, cfg: &SamplerConfig) -> Result<Trace, Error> {
    assert!(program.dim() >= 1);
    assert!(cfg.chains >= 2, "R-hat requires at least 2 chains");
    assert!(0.0 < cfg.target_accept && cfg.target_accept < 1.0);

    let results: Vec<Result<ChainOutput, Error>> = (0..cfg.chains)
        .into_par_iter()
        .map(|chain| run_chain(program, cfg, chain))
        .collect();
    let mut chains = Vec::with_capacity(cfg.chains);
    for r in results {
        chains.push(r?);
    }

    // Constrain draws and assemble per-parameter storage.
    let n_params = program.params.len();
    let mut samples: Vec<Vec<Vec<Vec<f64>>>> = vec![Vec::with_capacity(cfg.chains); n_params];
    let mut log_lik: Option<Vec<Vec<Vec<f64>>>> = None;
    for chain in &chains {
        let mut per_param: Vec<Vec<Vec<f64>>> =
            vec![Vec::with_capacity(cfg.draw_iters); n_params];
        let mut ll_chain = Vec::with_capacity(cfg.draw_iters);
        let mut have_ll = true;
        for (q, ll) in chain.draws.iter().zip(&chain.log_lik) {
            let blocks = program.constrain(q);
            for (pi, block) in blocks.into_iter().enumerate() {
                per_param[pi].push(block);
            }
            match ll {
                Some(v) => ll_chain.push(v.clone()),
                None => have_ll = false,
            }
        }
        for (pi, v) in per_param.into_iter().enumerate() {
            samples[pi].push(v);
        }
        if have_ll && !ll_chain.is_empty() {
            log_lik.get_or_insert_with(Vec::new).push(ll_chain);
        } else {
            log_lik = None;
        }
    }

    Ok(Trace {
        params: program.params.clone(),
        chains: cfg.chains,
        draws: cfg.draw_iters,
        samples,
        log_lik,
        stats: TraceStats {
            step_size: chains.iter().map(|c| c.step_size).collect(),
            tree_depth: chains.iter().map(|c| c.tree_depth.clone()).collect(),
            divergent: chains.iter().map(|c| c.divergent.clone()).collect(),
            energy: chains.iter().map(|c| c.energy.clone()).collect(),
            accept: chains.iter().map(|c| c.accept.clone()).collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{DensityParts, ParamSpec, Program};
    use crate::transform::Constraint;

    fn std_normal_5d() -> Program {
        Program::new(
            vec![ParamSpec::vector("x", 5, Constraint::Real)],
            |_t, view| {
                let xs = view.get("x");
                let mut lp = xs[0].lit(0.0);
                for &x in xs {
                    lp = lp - x * x * 0.5;
                }
                DensityParts {
                    log_density: lp,
                    log_lik: None,
                }
            },
        )
    }

    #[test]
    fn standard_normal_moments() {
        let cfg = SamplerConfig {
            chains: 4,
            warmup_iters: 500,
            draw_iters: 1000,
            seed: 42,
            ..Default::default()
        };
        let trace = nuts_sample(&std_normal_5d(), &cfg).unwrap();
        for i in 0..5 {
            let series = trace.scalar_series(&format!("x[{i}]")).unwrap();
            let all: Vec<f64> = series.iter().flatten().copied().collect();
            let n = all.len() as f64;
            let mean = all.iter().sum::<f64>() / n;
            let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 0.1, "coordinate {i} mean {mean}");
            assert!((0.85..=1.15).contains(&var), "coordinate {i} var {var}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SamplerConfig {
            chains: 2,
            warmup_iters: 100,
            draw_iters: 50,
            seed: 7,
            ..Default::default()
        };
        let a = nuts_sample(&std_normal_5d(), &cfg).unwrap();
        let b = nuts_sample(&std_normal_5d(), &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn gamma_prior_only_mean() {
        use crate::dist::density;
        let prog = Program::new(
            vec![ParamSpec::scalar("beta", Constraint::Positive)],
            |_t, view| {
                let b = view.get("beta")[0];
                DensityParts {
                    log_density: density::gamma(b, b.lit(2.0), b.lit(2.0)),
                    log_lik: None,
                }
            },
        );
        let cfg = SamplerConfig {
            chains: 4,
            warmup_iters: 500,
            draw_iters: 1000,
            seed: 11,
            ..Default::default()
        };
        let trace = nuts_sample(&prog, &cfg).unwrap();
        let series = trace.scalar_series("beta").unwrap();
        let all: Vec<f64> = series.iter().flatten().copied().collect();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn acceptance_near_target() {
        let cfg = SamplerConfig {
            chains: 4,
            warmup_iters: 1000,
            draw_iters: 1000,
            seed: 3,
            ..Default::default()
        };
        let trace = nuts_sample(&std_normal_5d(), &cfg).unwrap();
        let acc: Vec<f64> = trace.stats.accept.iter().flatten().copied().collect();
        let mean = acc.iter().sum::<f64>() / acc.len() as f64;
        assert!(
            (mean - cfg.target_accept).abs() < 0.05,
            "mean accept {mean}"
        );
    }

    #[test]
    fn correlated_gaussian_recovers_correlation() {
        // 2-D zero-mean unit-variance target with correlation 0.9.
        let rho: f64 = 0.9;
        let prog = Program::new(
            vec![ParamSpec::vector("x", 2, Constraint::Real)],
            move |_t, view| {
                let x = view.get("x");
                let det = 1.0 - rho * rho;
                // -(x0^2 - 2 rho x0 x1 + x1^2) / (2 (1 - rho^2))
                let quad = x[0] * x[0] - x[0] * x[1] * (2.0 * rho) + x[1] * x[1];
                DensityParts {
                    log_density: -quad / (2.0 * det),
                    log_lik: None,
                }
            },
        );
        let cfg = SamplerConfig {
            chains: 4,
            warmup_iters: 1000,
            draw_iters: 2000,
            seed: 17,
            ..Default::default()
        };
        let trace = nuts_sample(&prog, &cfg).unwrap();
        let x0: Vec<f64> = trace
            .scalar_series("x[0]")
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        let x1: Vec<f64> = trace
            .scalar_series("x[1]")
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        let n = x0.len() as f64;
        let m0 = x0.iter().sum::<f64>() / n;
        let m1 = x1.iter().sum::<f64>() / n;
        let mut c00 = 0.0;
        let mut c11 = 0.0;
        let mut c01 = 0.0;
        for i in 0..x0.len() {
            c00 += (x0[i] - m0).powi(2);
            c11 += (x1[i] - m1).powi(2);
            c01 += (x0[i] - m0) * (x1[i] - m1);
        }
        let r = c01 / (c00.sqrt() * c11.sqrt());
        assert!((r - 0.9).abs() < 0.02, "recovered correlation {r}");
    }

    #[test]
    fn funnel_noncentered_converges_centered_diverges() {
        // Neal's funnel: v ~ N(0, 3), x_i | v ~ N(0, e^{v/2}), 9 latent
        // coordinates. The centered form is a canonical divergence
        // generator; the noncentered form samples cleanly.
        let centered = Program::new(
            vec![
                ParamSpec::scalar("v", Constraint::Real),
                ParamSpec::vector("x", 9, Constraint::Real),
            ],
            |_t, view| {
                let v = view.get("v")[0];
                let xs = view.get("x");
                let mut lp = -v * v / (2.0 * 9.0);
                // x_i | v ~ N(0, variance e^v): the canonical funnel.
                let inv_var = (-v).exp();
                for &x in xs {
                    lp = lp - v * 0.5 - x * x * inv_var * 0.5;
                }
                DensityParts {
                    log_density: lp,
                    log_lik: None,
                }
            },
        );
        let noncentered = Program::new(
            vec![
                ParamSpec::scalar("v", Constraint::Real),
                ParamSpec::vector("z", 9, Constraint::Real),
            ],
            |_t, view| {
                let v = view.get("v")[0];
                let zs = view.get("z");
                let mut lp = -v * v / (2.0 * 9.0);
                for &z in zs {
                    lp = lp - z * z * 0.5;
                }
                DensityParts {
                    log_density: lp,
                    log_lik: None,
                }
            },
        );
        let cfg = SamplerConfig {
            chains: 4,
            warmup_iters: 1000,
            draw_iters: 1000,
            seed: 23,
            ..Default::default()
        };
        let tc = nuts_sample(&centered, &cfg).unwrap();
        let tn = nuts_sample(&noncentered, &cfg).unwrap();
        assert_eq!(tn.total_divergences(), 0);
        let rhat_v = crate::diagnostics::split_rhat(&tn.scalar_series("v").unwrap());
        assert!(rhat_v < 1.05, "noncentered funnel rhat {rhat_v}");
        assert!(
            tc.total_divergences() > 0,
            "centered funnel should diverge"
        );
    }

    #[test]
    fn init_failure_reports_parameter() {
        let prog = Program::new(
            vec![ParamSpec::scalar("bad", Constraint::Real)],
            |t, _| DensityParts {
                log_density: t.constant(f64::NEG_INFINITY),
                log_lik: None,
            },
        );
        let cfg = SamplerConfig {
            chains: 2,
            warmup_iters: 10,
            draw_iters: 10,
            ..Default::default()
        };
        match nuts_sample(&prog, &cfg) {
            Err(Error::Init { param }) => assert_eq!(param, "bad"),
            other => panic!("expected init error, got {other:?}"),
        }
    }

    #[test]
    fn warmup_schedule_shapes() {
        assert!(mass_update_points(10).is_empty());
        let p = mass_update_points(1000);
        assert_eq!(p.first(), Some(&100)); // 75 + 25
        assert_eq!(*p.last().unwrap(), 950); // warmup - term
        let p = mass_update_points(100);
        assert!(!p.is_empty());
        assert!(*p.last().unwrap() <= 90);
    }
}

