use super::{evaluate_policy_from, solve_mdp_from, MdpSolution, PolicyMetrics, Problem, SolverConfig};
use crate::error::SolverError;

/// A λ-optimal policy together with its exact long-run metrics.
#[derive(Debug, Clone)]
pub struct Endpoint {
    pub lambda: f64,
    pub solution: MdpSolution,
    pub metrics: PolicyMetrics,
}

impl Endpoint {
    pub fn feasible(&self, budget: f64) -> bool {
        self.metrics.mean_tx <= budget
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub lambda: f64,
    pub ws_aaoi: f64,
    pub mean_tx: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone)]
pub struct BisectionOutcome {
    /// Feasible endpoint, `D̄ ≤ Γmax`.
    pub plus: Endpoint,
    /// Infeasible endpoint whose cost lower-bounds the constrained optimum.
    /// Equal to `plus` when the constraint is slack.
    pub minus: Endpoint,
    /// Every multiplier evaluated, in evaluation order.
    pub trace: Vec<TraceEntry>,
    /// The unconstrained optimum already meets the budget.
    pub slack: bool,
    pub bisections: usize,
}

impl BisectionOutcome {
    /// Trace sorted by multiplier.
    pub fn sorted_trace(&self) -> Vec<TraceEntry> {
        let mut t = self.trace.clone();
        t.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        t
    }
}

/// Bisection over the Lagrange multiplier.
///
/// The upper end starts at `solver.lambda_plus` and doubles until its
/// λ-optimal policy meets the budget; infeasible trial values raise the lower
/// end. The bracket is then halved until narrower than `zeta`. Endpoint
/// policies are the ones computed when each end was last moved.
pub fn bisect(problem: &Problem<'_>, solver: &SolverConfig) -> Result<BisectionOutcome, SolverError> {
    solver.validate()?;
    let budget = problem.cfg.budget();
    let mut trace = Vec::new();
    // Each solve and evaluation starts from the previous one's result.
    let mut warm: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut eval = |lambda: f64| -> Result<Endpoint, SolverError> {
        let (h0, mu0) = match &warm {
            Some((h, mu)) => (Some(h.as_slice()), Some(mu.as_slice())),
            None => (None, None),
        };
        let solution = solve_mdp_from(problem, lambda, solver, h0)?;
        let metrics = evaluate_policy_from(
            problem,
            &solution.policy,
            solver.stationary_tol,
            solver.max_power_iterations,
            mu0,
        )?;
        warm = Some((solution.relative.clone(), metrics.stationary.clone()));
        trace.push(TraceEntry {
            lambda,
            ws_aaoi: metrics.ws_aaoi,
            mean_tx: metrics.mean_tx,
            sweeps: solution.sweeps,
        });
        Ok(Endpoint {
            lambda,
            solution,
            metrics,
        })
    };

    let mut minus = eval(solver.lambda_minus)?;
    let mut known_plus = None;
    if minus.feasible(budget) && solver.lambda_minus > 0.0 {
        known_plus = Some(minus);
        minus = eval(0.0)?;
    }
    if minus.feasible(budget) {
        drop(eval);
        return Ok(BisectionOutcome {
            plus: minus.clone(),
            minus,
            trace,
            slack: true,
            bisections: 0,
        });
    }

    let mut plus = match known_plus {
        Some(p) => p,
        None => {
            let mut lambda = solver.lambda_plus;
            let mut expansions = 0;
            loop {
                let e = eval(lambda)?;
                if e.feasible(budget) {
                    break e;
                }
                minus = e;
                expansions += 1;
                if expansions > solver.max_expansions {
                    return Err(SolverError::BracketExpansion {
                        expansions,
                        lambda,
                        mean_tx: minus.metrics.mean_tx,
                    });
                }
                lambda *= 2.0;
            }
        }
    };

    let mut bisections = 0;
    while plus.lambda - minus.lambda >= solver.zeta && bisections < solver.max_bisections {
        let mid = 0.5 * (plus.lambda + minus.lambda);
        let e = eval(mid)?;
        if e.feasible(budget) {
            plus = e;
        } else {
            minus = e;
        }
        bisections += 1;
    }
    drop(eval);
    Ok(BisectionOutcome {
        plus,
        minus,
        trace,
        slack: false,
        bisections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::TransitionKernel;
    use crate::model::{AoiBound, SystemConfig};

    fn run(budget: f64) -> BisectionOutcome {
        let cfg = SystemConfig::unweighted(vec![0.5, 0.6], 0.7, 0.8, budget, AoiBound::Finite(3)).unwrap();
        let kernel = TransitionKernel::build(&cfg).unwrap();
        let problem = Problem::new(&kernel, &cfg);
        bisect(&problem, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn full_budget_is_slack() {
        let out = run(2.0);
        assert!(out.slack);
        assert_eq!(out.plus.lambda, 0.0);
    }

    #[test]
    fn binding_budget_brackets() {
        let out = run(0.6);
        assert!(!out.slack);
        assert!(out.plus.metrics.mean_tx <= 0.6);
        assert!(out.minus.metrics.mean_tx > 0.6);
        assert!(out.minus.metrics.ws_aaoi <= out.plus.metrics.ws_aaoi);
        assert!(out.plus.lambda - out.minus.lambda < 0.1);
        let t = out.sorted_trace();
        for w in t.windows(2) {
            assert!(w[1].mean_tx <= w[0].mean_tx + 1e-9);
            assert!(w[1].ws_aaoi >= w[0].ws_aaoi - 1e-9);
        }
    }
}
