//! Levenberg–Marquardt least squares with bound transforms and shared
//! parameter groups.
//!
//! Each model parameter is described by a [`ParamSpec`]. Bounded parameters
//! are optimized in an unconstrained coordinate `u` and mapped back through a
//! smooth transform. Specs carrying the same `group` tag are tied to a single
//! optimizer variable. Fixed specs never move.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Admissible region of a parameter and the transform that enforces it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// `p = u`.
    Free,
    /// `p = exp(u)`.
    Positive,
    /// `p = lo + exp(u)`.
    Lower(f64),
    /// `p = hi − exp(u)`.
    Upper(f64),
    /// `p = lo + (hi − lo)/(1 + exp(−u))`.
    Range(f64, f64),
    /// `p = lo·(hi/lo)^{1/(1 + exp(−u))}`, for `0 < lo < hi`.
    LogRange(f64, f64),
}

impl Bound {
    fn validate(&self, name: &str) -> Result<()> {
        match *self {
            Bound::Range(lo, hi) if !(lo < hi) => Err(Error::invalid(format!(
                "parameter `{name}`: bounds out of order ({lo} >= {hi})"
            ))),
            Bound::LogRange(lo, hi) if !(lo > 0.0 && lo < hi && hi.is_finite()) => Err(Error::invalid(format!(
                "parameter `{name}`: log range needs 0 < lo < hi ({lo}, {hi})"
            ))),
            Bound::Lower(v) | Bound::Upper(v) if !v.is_finite() => {
                Err(Error::invalid(format!("parameter `{name}`: non-finite bound")))
            }
            _ => Ok(()),
        }
    }

    fn to_model(self, u: f64) -> f64 {
        match self {
            Bound::Free => u,
            Bound::Positive => u.exp(),
            Bound::Lower(lo) => lo + u.exp(),
            Bound::Upper(hi) => hi - u.exp(),
            Bound::Range(lo, hi) => lo + (hi - lo) / (1.0 + (-u).exp()),
            Bound::LogRange(lo, hi) => lo * (hi / lo).powf(1.0 / (1.0 + (-u).exp())),
        }
    }

    /// dp/du at `u`.
    fn derivative(&self, u: f64) -> f64 {
        match *self {
            Bound::Free => 1.0,
            Bound::Positive | Bound::Lower(_) => u.exp(),
            Bound::Upper(_) => -u.exp(),
            Bound::Range(lo, hi) => {
                let s = 1.0 / (1.0 + (-u).exp());
                (hi - lo) * s * (1.0 - s)
            }
            Bound::LogRange(lo, hi) => {
                let s = 1.0 / (1.0 + (-u).exp());
                self.to_model(u) * (hi / lo).ln() * s * (1.0 - s)
            }
        }
    }

    fn to_internal(self, p: f64, name: &str) -> Result<f64> {
        let out_of_range =
            || Error::invalid(format!("parameter `{name}`: initial value {p} violates its bound"));
        match self {
            Bound::Free => Ok(p),
            Bound::Positive if p > 0.0 => Ok(p.ln()),
            Bound::Lower(lo) if p > lo => Ok((p - lo).ln()),
            Bound::Upper(hi) if p < hi => Ok((hi - p).ln()),
            Bound::Range(lo, hi) if p > lo && p < hi => {
                let s = (p - lo) / (hi - lo);
                Ok((s / (1.0 - s)).ln())
            }
            Bound::LogRange(lo, hi) if p > lo && p < hi => {
                let s = (p / lo).ln() / (hi / lo).ln();
                Ok((s / (1.0 - s)).ln())
            }
            _ => Err(out_of_range()),
        }
    }
}

/// Descriptor of one model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub initial: f64,
    pub bound: Bound,
    /// Specs sharing a tag are one optimizer variable.
    pub group: Option<String>,
    pub fixed: bool,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, initial: f64, bound: Bound) -> Self {
        Self {
            name: name.into(),
            initial,
            bound,
            group: None,
            fixed: false,
        }
    }

    pub fn free(name: impl Into<String>, initial: f64) -> Self {
        Self::new(name, initial, Bound::Free)
    }

    pub fn positive(name: impl Into<String>, initial: f64) -> Self {
        Self::new(name, initial, Bound::Positive)
    }

    pub fn shared(mut self, group: impl Into<String>) -> Self {
        self.group = Some(group.into());
        self
    }

    pub fn fixed(mut self) -> Self {
        self.fixed = true;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when ‖Jᵀr‖∞ falls below this.
    pub gradient_tol: f64,
    /// Stop when ‖δu‖ ≤ step_tol·(‖u‖ + step_tol).
    pub step_tol: f64,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub cost_tol: f64,
    /// Relative central-difference step for the Jacobian, floored at the same absolute value.
    pub jacobian_step: f64,
    pub initial_damping: f64,
    /// Scale the covariance by the reduced chi-square.
    pub scale_covariance: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tol: 1e-10,
            step_tol: 1e-12,
            cost_tol: 1e-15,
            jacobian_step: 1e-7,
            initial_damping: 1e-3,
            scale_covariance: true,
        }
    }
}

/// Residual function mapping the full model-parameter vector (one entry per
/// [`ParamSpec`], in order) to a residual vector of fixed length.
pub type ResidualFn<'a> = dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a;

pub struct FitProblem<'a> {
    pub params: Vec<ParamSpec>,
    pub residuals: Box<ResidualFn<'a>>,
    pub options: FitOptions,
}

impl<'a> FitProblem<'a> {
    pub fn new(params: Vec<ParamSpec>, residuals: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        Self {
            params,
            residuals: Box::new(residuals),
            options: FitOptions::default(),
        }
    }

    pub fn with_options(mut self, options: FitOptions) -> Self {
        self.options = options;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    Step,
    Cost,
    /// Damping exhausted without a cost decrease: the current point is a
    /// minimum to working precision.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub names: Vec<String>,
    /// Model-space estimates, one per spec.
    pub estimates: Vec<f64>,
    /// Model-space covariance, one row/column per spec; fixed specs are zero.
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    /// ½‖r‖².
    pub cost: f64,
    pub iterations: usize,
    /// Cost after the initial evaluation and after every accepted step.
    pub cost_history: Vec<f64>,
    pub rank_deficient: bool,
    pub stop: StopReason,
}

impl FitResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.estimates[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }
}

/// Maps specs to optimizer variables.
struct Layout {
    /// For each spec: optimizer variable index, or None when fixed.
    var_of: Vec<Option<usize>>,
    bounds: Vec<Bound>,
    names: Vec<String>,
    u0: Vec<f64>,
    fixed_values: Vec<f64>,
}

impl Layout {
    fn build(specs: &[ParamSpec]) -> Result<Self> {
        let mut var_of = Vec::with_capacity(specs.len());
        let mut bounds: Vec<Bound> = Vec::new();
        let mut names = Vec::new();
        let mut u0 = Vec::new();
        let mut groups: Vec<(String, usize, f64)> = Vec::new();
        for spec in specs {
            spec.bound.validate(&spec.name)?;
            if !spec.initial.is_finite() {
                return Err(Error::invalid(format!("parameter `{}`: non-finite initial value", spec.name)));
            }
            if spec.fixed {
                var_of.push(None);
                continue;
            }
            if let Some(tag) = &spec.group {
                if let Some((_, idx, _)) = groups.iter().find(|(g, _, _)| g == tag) {
                    if bounds[*idx] != spec.bound {
                        return Err(Error::invalid(format!(
                            "parameter `{}`: bound differs from other members of group `{tag}`",
                            spec.name
                        )));
                    }
                    var_of.push(Some(*idx));
                    continue;
                }
            }
            let idx = bounds.len();
            bounds.push(spec.bound);
            names.push(spec.group.clone().unwrap_or_else(|| spec.name.clone()));
            u0.push(spec.bound.to_internal(spec.initial, &spec.name)?);
            if let Some(tag) = &spec.group {
                groups.push((tag.clone(), idx, spec.initial));
            }
            var_of.push(Some(idx));
        }
        if bounds.is_empty() {
            return Err(Error::invalid("fit problem has no free parameters"));
        }
        Ok(Self {
            var_of,
            bounds,
            names,
            u0,
            fixed_values: specs.iter().map(|s| s.initial).collect(),
        })
    }

    fn model(&self, u: &[f64]) -> Vec<f64> {
        self.var_of
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Some(j) => self.bounds[*j].to_model(u[*j]),
                None => self.fixed_values[i],
            })
            .collect()
    }
}

struct Evaluator<'p, 'a> {
    problem: &'p FitProblem<'a>,
    layout: Layout,
    m: usize,
}

impl Evaluator<'_, '_> {
    fn residuals(&self, u: &[f64]) -> Option<DVector<f64>> {
        let r = (self.problem.residuals)(&self.layout.model(u));
        if r.len() != self.m || r.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some(DVector::from_vec(r))
    }

    fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let n = u.len();
        let mut jac = DMatrix::zeros(self.m, n);
        let mut w = u.to_vec();
        let step = self.problem.options.jacobian_step;
        for j in 0..n {
            let h = step.max(step * u[j].abs());
            w[j] = u[j] + h;
            let plus = self.residuals(&w);
            w[j] = u[j] - h;
            let minus = self.residuals(&w);
            w[j] = u[j];
            let (Some(plus), Some(minus)) = (plus, minus) else {
                return Err(Error::NonFiniteResidual { index: j });
            };
            let col = (plus - minus) / (2.0 * h);
            jac.set_column(j, &col);
        }
        Ok(jac)
    }
}

/// Minimizes ½‖r(p)‖² over the free parameters of `problem`.
pub fn levmar_fit(problem: &FitProblem<'_>) -> Result<FitResult> {
    let layout = Layout::build(&problem.params)?;
    let r0 = (problem.residuals)(&layout.model(&layout.u0));
    if let Some(index) = r0.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteResidual { index });
    }
    if r0.is_empty() {
        return Err(Error::invalid("residual vector is empty"));
    }
    let ev = Evaluator {
        problem,
        m: r0.len(),
        layout,
    };
    let opts = &problem.options;
    let n = ev.layout.u0.len();
    let mut u = DVector::from_vec(ev.layout.u0.clone());
    let mut r = DVector::from_vec(r0);
    let mut cost = 0.5 * r.norm_squared();
    let mut history = vec![cost];
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut stop = None;

    let mut jac = ev.jacobian(u.as_slice())?;
    for j in 0..n {
        if jac.column(j).iter().all(|x| *x == 0.0) {
            return Err(Error::SingularJacobian(ev.layout.names[j].clone()));
        }
    }

    loop {
        let grad = jac.transpose() * &r;
        if grad.amax() <= opts.gradient_tol {
            stop = Some(StopReason::Gradient);
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let dmax = jtj.diagonal().amax();
        let scale: DVector<f64> = jtj.diagonal().map(|d| d.max(1e-12 * dmax).max(f64::MIN_POSITIVE));

        let mut accepted = None;
        while lambda <= 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * scale[i];
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&(-&grad));
            let trial = &u + &delta;
            match ev.residuals(trial.as_slice()) {
                Some(rt) => {
                    let ct = 0.5 * rt.norm_squared();
                    if ct < cost {
                        // Gain ratio of actual to predicted decrease; a
                        // near-exact quadratic model earns a larger cut.
                        let predicted = -grad.dot(&delta) - 0.5 * (&jac * &delta).norm_squared();
                        let rho = (cost - ct) / predicted;
                        let cut = if rho > 0.999 { 1e3 } else { 10.0 };
                        lambda = (lambda / cut).max(1e-15);
                        accepted = Some((trial, rt, ct, delta));
                        break;
                    }
                    lambda *= 10.0;
                }
                None => lambda *= 10.0,
            }
        }
        let Some((trial, rt, ct, delta)) = accepted else {
            stop = Some(StopReason::Stalled);
            break;
        };
        let decrease = cost - ct;
        let u_norm = u.norm();
        u = trial;
        r = rt;
        let previous = cost;
        cost = ct;
        history.push(cost);
        if delta.norm() <= opts.step_tol * (u_norm + opts.step_tol) {
            stop = Some(StopReason::Step);
            break;
        }
        if decrease <= opts.cost_tol * previous {
            stop = Some(StopReason::Cost);
            break;
        }
        jac = ev.jacobian(u.as_slice())?;
    }

    let Some(stop) = stop else {
        return Err(Error::NonConvergence { iterations, cost });
    };

    let (covariance, rank_deficient) = model_covariance(&ev, u.as_slice(), cost)?;
    if rank_deficient {
        log::warn!("least-squares problem is rank deficient at the solution");
    }
    Ok(FitResult {
        names: problem.params.iter().map(|p| p.name.clone()).collect(),
        estimates: ev.layout.model(u.as_slice()),
        covariance,
        residuals: r.iter().copied().collect(),
        cost,
        iterations,
        cost_history: history,
        rank_deficient,
        stop,
    })
}

/// Model-space covariance at optimizer point `u`, plus a rank flag.
fn model_covariance(ev: &Evaluator<'_, '_>, u: &[f64], cost: f64) -> Result<(DMatrix<f64>, bool)> {
    let opts = &ev.problem.options;
    let n = u.len();
    let jac = ev.jacobian(u)?;
    let jtj = jac.transpose() * &jac;
    let (cov_u, rank_deficient) = invert_normal_matrix(&jtj);
    let dof = ev.m.saturating_sub(n);
    let s2 = if opts.scale_covariance && dof > 0 {
        2.0 * cost / dof as f64
    } else {
        1.0
    };
    let dpdu: Vec<f64> = (0..n).map(|j| ev.layout.bounds[j].derivative(u[j])).collect();
    let specs = ev.problem.params.len();
    let mut covariance = DMatrix::zeros(specs, specs);
    for a in 0..specs {
        for b in 0..specs {
            if let (Some(i), Some(j)) = (ev.layout.var_of[a], ev.layout.var_of[b]) {
                covariance[(a, b)] = s2 * dpdu[i] * cov_u[(i, j)] * dpdu[j];
            }
        }
    }
    Ok((covariance, rank_deficient))
}

/// Covariance and rank flag evaluated at the initial values of `problem`,
/// without optimizing.
pub fn covariance_at(problem: &FitProblem<'_>) -> Result<(DMatrix<f64>, bool)> {
    let layout = Layout::build(&problem.params)?;
    let r0 = (problem.residuals)(&layout.model(&layout.u0));
    if let Some(index) = r0.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteResidual { index });
    }
    let cost = 0.5 * r0.iter().map(|x| x * x).sum::<f64>();
    let u0 = layout.u0.clone();
    let ev = Evaluator {
        problem,
        m: r0.len(),
        layout,
    };
    model_covariance(&ev, &u0, cost)
}

/// Pseudo-inverse of a symmetric positive semi-definite matrix plus a rank flag.
fn invert_normal_matrix(a: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let emax = eig.eigenvalues.amax();
    let cutoff = emax * 1e-13;
    let mut rank_deficient = emax == 0.0;
    let inv_vals = eig.eigenvalues.map(|e| {
        if e > cutoff && e > 0.0 {
            1.0 / e
        } else {
            rank_deficient = true;
            0.0
        }
    });
    let v = &eig.eigenvectors;
    (v * DMatrix::from_diagonal(&inv_vals) * v.transpose(), rank_deficient)
}
