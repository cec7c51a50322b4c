//! Alternating design of pilots, analog combiners, and filters for the
//! one-bit path, plus the high-resolution noiseless heuristics.
//!
//! Each outer iteration solves the two convex surrogate subproblems (with
//! the quantizer linearization and the filters frozen), interpolates toward
//! the subproblem solutions with a decreasing step size, projects combiners
//! back onto the unit-modulus set, refreshes the linearization, and updates
//! the MMSE filters. The surrogate objectives are quadratics whose pieces
//! are precomputed once per subproblem, so the inner projected-gradient
//! loops touch only τ- and L-sized matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::bussgang::BussgangState;
use crate::error::{Error, Result};
use crate::estimation::{
    analytic_mse, assemble_with_linearization, mmse_filter, FilterSet, GlobalModel,
};
use crate::frontend::{CombinerMode, CombinerSet, FrontEndStats, PilotSet};
use crate::linalg::{block_diag, herm_solve, hermitize, to_complex};
use crate::rng::{standard_complex_matrix, uniform_phase};
use crate::scenario::{ChannelStats, SystemConfig};

/// Knobs of the alternating optimizer.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Outer iteration cap.
    pub max_outer_iters: usize,
    /// Initial interpolation step γ¹ ∈ (0, 1].
    pub gamma0: f64,
    /// Decay δ of the rule γ^{t+1} = γ^t (1 − δ γ^t).
    pub gamma_decay: f64,
    /// Projected-gradient cap per subproblem.
    pub inner_max_iters: usize,
    /// Relative objective-change tolerance of the inner loops.
    pub inner_tol: f64,
    /// Relative sum-MSE change that stops the outer loop.
    pub outer_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_outer_iters: 30,
            gamma0: 1.0,
            gamma_decay: 0.05,
            inner_max_iters: 200,
            inner_tol: 1e-6,
            outer_tol: 1e-4,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0 && self.gamma0 <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "gamma0 must lie in (0, 1] (got {})",
                self.gamma0
            )));
        }
        if !(self.gamma_decay > 0.0 && self.gamma_decay < 1.0) {
            return Err(Error::InvalidInput(format!(
                "gamma_decay must lie in (0, 1) (got {})",
                self.gamma_decay
            )));
        }
        if self.inner_max_iters == 0 {
            return Err(Error::InvalidInput("inner_max_iters must be >= 1".into()));
        }
        if !(self.inner_tol > 0.0) || !(self.outer_tol > 0.0) {
            return Err(Error::InvalidInput(
                "inner_tol and outer_tol must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Which design blocks the optimizer is allowed to touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Random pilots, random combiners (filters still MMSE).
    FullyRandom,
    /// Optimize combiners for random pilots.
    CombinerOpt,
    /// Optimize pilots for random combiners.
    PilotOpt,
    /// Jointly optimize pilots and combiners.
    Joint,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::FullyRandom,
        Scheme::CombinerOpt,
        Scheme::PilotOpt,
        Scheme::Joint,
    ];

    pub fn optimizes_pilots(self) -> bool {
        matches!(self, Scheme::PilotOpt | Scheme::Joint)
    }

    pub fn optimizes_combiners(self) -> bool {
        matches!(self, Scheme::CombinerOpt | Scheme::Joint)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullyRandom => "fully-random",
            Scheme::CombinerOpt => "combiner-opt",
            Scheme::PilotOpt => "pilot-opt",
            Scheme::Joint => "joint",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fully-random" => Ok(Scheme::FullyRandom),
            "combiner-opt" => Ok(Scheme::CombinerOpt),
            "pilot-opt" => Ok(Scheme::PilotOpt),
            "joint" => Ok(Scheme::Joint),
            other => Err(Error::InvalidInput(format!(
                "unknown scheme '{other}' (expected fully-random, combiner-opt, pilot-opt or joint)"
            ))),
        }
    }
}

/// Why the outer loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Relative sum-MSE change fell below `outer_tol`.
    Converged,
    /// Hit `max_outer_iters`.
    MaxIters,
}

/// Full record of one optimizer run.
#[derive(Debug, Clone)]
pub struct OptimizerTrace {
    /// Sum-MSE after each outer iteration; entry 0 is the initial design.
    pub sum_mse: Vec<f64>,
    pub pilots: PilotSet,
    pub combiners: CombinerSet,
    pub filters: FilterSet,
    /// Outer iterations actually executed.
    pub iterations: usize,
    pub termination: Termination,
}

impl OptimizerTrace {
    pub fn final_sum_mse(&self) -> f64 {
        *self.sum_mse.last().expect("trace is never empty")
    }
}

/// Feasible random design: full-power CN(0,1) pilots and unit-modulus
/// combiners with i.i.d. uniform phases.
pub fn init_design<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> (PilotSet, CombinerSet) {
    let mut s = standard_complex_matrix(cfg.tau, cfg.n_ue, rng);
    for k in 0..cfg.n_ue {
        let norm = s.column(k).norm();
        let target = (cfg.tau as f64 * cfg.power_per_ue).sqrt();
        if norm > 0.0 {
            let col = s.column(k).scale(target / norm);
            s.set_column(k, &col);
        }
    }
    let pilots = PilotSet {
        s,
        power_budget: vec![cfg.power_per_ue; cfg.n_ue],
    };
    let w = (0..cfg.n_rrh)
        .map(|_| DMatrix::from_fn(cfg.l_chains, cfg.m_antennas, |_, _| uniform_phase(rng)))
        .collect();
    let combiners = CombinerSet {
        w,
        mode: CombinerMode::Strict,
    };
    (pilots, combiners)
}

/// Phase extraction w ↦ w/|w|; zero entries map to 1.
pub fn project_modulus_matrix(w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    w.map(|z| {
        let mag = z.norm();
        if mag == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            z / mag
        }
    })
}

/// Strict-modulus projection of a whole combiner set.
pub fn project_modulus(combiners: &CombinerSet) -> CombinerSet {
    CombinerSet {
        w: combiners.w.iter().map(project_modulus_matrix).collect(),
        mode: CombinerMode::Strict,
    }
}

/// Recompute the per-RRH quantizer linearization for a design.
pub fn refresh_bussgang(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    stats: &ChannelStats,
    noise_var: f64,
) -> Result<Vec<BussgangState>> {
    let fe = FrontEndStats::compute(pilots, combiners, stats, noise_var)?;
    fe.c_signal
        .iter()
        .map(BussgangState::from_covariance)
        .collect()
}

/// Σ_k (F_k A)^H (F_k A): the Gram matrix through which every quadratic
/// surrogate term sees the design.
fn gain_weighted_gram(a_diag: &DVector<f64>, filters: &FilterSet) -> DMatrix<Complex64> {
    let n = a_diag.len();
    let mut g = DMatrix::zeros(n, n);
    for f_k in &filters.f {
        let mut fa = f_k.clone();
        for c in 0..n {
            let gain = a_diag[c];
            for r in 0..fa.nrows() {
                fa[(r, c)] *= gain;
            }
        }
        g += fa.adjoint() * fa;
    }
    hermitize(&g)
}

/// Θ_k F_k A for every UE; the linear surrogate terms read its blocks.
fn cross_terms(
    stats: &ChannelStats,
    a_diag: &DVector<f64>,
    filters: &FilterSet,
) -> Vec<DMatrix<Complex64>> {
    (0..stats.n_ue())
        .map(|k| {
            let mut fa = filters.f[k].clone();
            for c in 0..fa.ncols() {
                let gain = a_diag[c];
                for r in 0..fa.nrows() {
                    fa[(r, c)] *= gain;
                }
            }
            &stats.theta[k] * fa
        })
        .collect()
}

/// Quadratic surrogate of the sum-MSE in the pilots, with combiners,
/// linearization, and filters frozen. Terms independent of S are dropped.
pub struct PilotSurrogate {
    /// Per-UE Hermitian quadratic form (τ × τ).
    m: Vec<DMatrix<Complex64>>,
    /// Per-UE linear coefficient (τ).
    c: Vec<DVector<Complex64>>,
}

impl PilotSurrogate {
    pub fn build(
        stats: &ChannelStats,
        combiners: &CombinerSet,
        a_diag: &DVector<f64>,
        filters: &FilterSet,
        tau: usize,
    ) -> Self {
        let n_rrh = stats.n_rrh();
        let n_ue = stats.n_ue();
        let l = combiners.w[0].nrows();
        let m_ant = stats.m_antennas();
        let block = l * tau;
        let g = gain_weighted_gram(a_diag, filters);
        let cross = cross_terms(stats, a_diag, filters);

        // m_grid[i][(t', t)] = tr(V_i · G_ii block (t', t)).
        let mut m_grid = vec![DMatrix::<Complex64>::zeros(tau, tau); n_rrh];
        for i in 0..n_rrh {
            let w = &combiners.w[i];
            let v = w * to_complex(&stats.q_corr[i]) * w.adjoint();
            for tp in 0..tau {
                for t in 0..tau {
                    let gb = g.view((i * block + tp * l, i * block + t * l), (l, l));
                    let mut tr = Complex64::new(0.0, 0.0);
                    for a in 0..l {
                        for b in 0..l {
                            tr += v[(a, b)] * gb[(b, a)];
                        }
                    }
                    m_grid[i][(tp, t)] = tr;
                }
            }
        }

        let m = (0..n_ue)
            .map(|k| {
                let mut acc = DMatrix::<Complex64>::zeros(tau, tau);
                for i in 0..n_rrh {
                    acc += m_grid[i].scale(stats.rho[(i, k)]);
                }
                hermitize(&acc)
            })
            .collect();

        let c = (0..n_ue)
            .map(|k| {
                let mut coeff = DVector::<Complex64>::zeros(tau);
                for i in 0..n_rrh {
                    let c_ii = cross[k].view((i * m_ant, i * block), (m_ant, block));
                    let w = &combiners.w[i];
                    for t in 0..tau {
                        let mut tr = Complex64::new(0.0, 0.0);
                        for a in 0..m_ant {
                            for r in 0..l {
                                tr += c_ii[(a, t * l + r)] * w[(r, a)];
                            }
                        }
                        coeff[t] += tr;
                    }
                }
                coeff
            })
            .collect();

        PilotSurrogate { m, c }
    }

    /// Surrogate objective (sum-MSE minus S-independent constants).
    pub fn objective(&self, s: &DMatrix<Complex64>) -> f64 {
        let mut total = 0.0;
        for k in 0..self.m.len() {
            let col = s.column(k);
            let quad = col.dotc(&(&self.m[k] * col)).re;
            let lin = self.c[k].dot(&col.clone_owned()).re;
            total += quad - 2.0 * lin;
        }
        total
    }

    /// Gradient in the d/dRe + j·d/dIm convention (matches central
    /// finite differences of [`Self::objective`] entry by entry).
    pub fn gradient(&self, s: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let tau = s.nrows();
        let mut g = DMatrix::zeros(tau, s.ncols());
        for k in 0..self.m.len() {
            let col = s.column(k).clone_owned();
            let gk = (&self.m[k] * &col - self.c[k].conjugate()).scale(2.0);
            g.set_column(k, &gk);
        }
        g
    }
}

/// Quadratic surrogate of the sum-MSE in one RRH's combiner, with pilots,
/// linearization, and filters frozen. Terms independent of W_i are dropped.
pub struct CombinerSurrogate {
    /// Per-RRH signal-weighting matrix N_i (L × L).
    n: Vec<DMatrix<Complex64>>,
    /// Per-RRH noise-weighting matrix P_i (L × L).
    p: Vec<DMatrix<Complex64>>,
    /// Per-RRH linear coefficient D_i (M × L).
    d: Vec<DMatrix<Complex64>>,
    /// Complexified correlation Q_i.
    q_c: Vec<DMatrix<Complex64>>,
    noise_var: f64,
}

impl CombinerSurrogate {
    pub fn build(
        stats: &ChannelStats,
        pilots: &PilotSet,
        a_diag: &DVector<f64>,
        filters: &FilterSet,
        l_chains: usize,
        noise_var: f64,
    ) -> Self {
        let n_rrh = stats.n_rrh();
        let n_ue = stats.n_ue();
        let tau = pilots.tau();
        let m_ant = stats.m_antennas();
        let l = l_chains;
        let block = l * tau;
        let g = gain_weighted_gram(a_diag, filters);
        let cross = cross_terms(stats, a_diag, filters);

        let mut n_mats = Vec::with_capacity(n_rrh);
        let mut p_mats = Vec::with_capacity(n_rrh);
        let mut d_mats = Vec::with_capacity(n_rrh);
        for i in 0..n_rrh {
            let mut n_i = DMatrix::<Complex64>::zeros(l, l);
            let mut p_i = DMatrix::<Complex64>::zeros(l, l);
            for tp in 0..tau {
                for t in 0..tau {
                    let gb = g
                        .view((i * block + tp * l, i * block + t * l), (l, l))
                        .clone_owned();
                    let mut pilot_weight = Complex64::new(0.0, 0.0);
                    for k in 0..n_ue {
                        let s_k = pilots.s.column(k);
                        pilot_weight += s_k[t] * s_k[tp].conj() * stats.rho[(i, k)];
                    }
                    n_i += &gb * pilot_weight;
                    if tp == t {
                        p_i += gb;
                    }
                }
            }
            n_mats.push(hermitize(&n_i));
            p_mats.push(hermitize(&p_i));

            let mut d_i = DMatrix::<Complex64>::zeros(m_ant, l);
            for k in 0..n_ue {
                let c_ii = cross[k].view((i * m_ant, i * block), (m_ant, block));
                let s_k = pilots.s.column(k);
                for t in 0..tau {
                    let sub = c_ii.view((0, t * l), (m_ant, l));
                    d_i += sub.clone_owned() * s_k[t];
                }
            }
            d_mats.push(d_i);
        }

        CombinerSurrogate {
            n: n_mats,
            p: p_mats,
            d: d_mats,
            q_c: stats.q_corr.iter().map(to_complex).collect(),
            noise_var,
        }
    }

    pub fn n_rrh(&self) -> usize {
        self.n.len()
    }

    /// Surrogate objective restricted to RRH i.
    pub fn objective_rrh(&self, i: usize, w: &DMatrix<Complex64>) -> f64 {
        let wq = w * &self.q_c[i];
        let quad = (&wq * w.adjoint() * &self.n[i]).trace().re;
        let noise = (w * w.adjoint() * &self.p[i]).trace().re * self.noise_var;
        let lin = (&self.d[i] * w).trace().re;
        quad + noise - 2.0 * lin
    }

    /// Gradient over RRH i's combiner (d/dRe + j·d/dIm convention).
    pub fn gradient_rrh(&self, i: usize, w: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let wq = w * &self.q_c[i];
        let grad_w = &self.n[i] * &wq + (&self.p[i] * w).scale(self.noise_var) - self.d[i].adjoint();
        grad_w.scale(2.0)
    }

    /// Sum of the per-RRH surrogate objectives.
    pub fn objective(&self, w: &[DMatrix<Complex64>]) -> f64 {
        (0..self.n_rrh()).map(|i| self.objective_rrh(i, &w[i])).sum()
    }
}

/// Outcome of one projected-gradient run.
pub struct DescentOutcome {
    pub x: DMatrix<Complex64>,
    /// Objective after the start point and each accepted step; non-increasing.
    pub objective_trace: Vec<f64>,
}

/// Monotone projected gradient descent with backtracking. The candidate
/// step is projected before evaluation, and only strictly-improving steps
/// are accepted, so the recorded objective never increases.
fn projected_descent(
    x0: DMatrix<Complex64>,
    max_iters: usize,
    rel_tol: f64,
    obj: &dyn Fn(&DMatrix<Complex64>) -> f64,
    grad: &dyn Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>,
    project: &dyn Fn(&mut DMatrix<Complex64>),
) -> DescentOutcome {
    let mut x = x0;
    let mut f = obj(&x);
    let mut trace = vec![f];
    let mut alpha = 1.0f64;
    for _ in 0..max_iters {
        let g = grad(&x);
        let g_norm2 = g.norm_squared();
        if g_norm2 == 0.0 || !g_norm2.is_finite() {
            break;
        }
        let mut accepted = false;
        while alpha >= 1e-18 {
            let mut cand = &x - g.scale(alpha);
            project(&mut cand);
            let fc = obj(&cand);
            if fc.is_finite() && fc < f {
                let rel = (f - fc) / f.abs().max(1e-300);
                x = cand;
                f = fc;
                trace.push(f);
                accepted = true;
                alpha = (alpha * 2.0).min(1e9);
                if rel <= rel_tol {
                    return DescentOutcome {
                        x,
                        objective_trace: trace,
                    };
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    DescentOutcome {
        x,
        objective_trace: trace,
    }
}

/// Rescale pilot columns into their power balls.
fn project_pilot_columns(s: &mut DMatrix<Complex64>, budget: &[f64]) {
    let tau = s.nrows() as f64;
    for k in 0..s.ncols() {
        let norm = s.column(k).norm();
        let limit = (tau * budget[k]).sqrt();
        if norm > limit {
            let col = s.column(k).scale(limit / norm);
            s.set_column(k, &col);
        }
    }
}

/// Clip combiner entries into the unit disc (relaxed constraint).
fn project_unit_disc(w: &mut DMatrix<Complex64>) {
    for e in w.iter_mut() {
        let mag = e.norm();
        if mag > 1.0 {
            *e /= mag;
        }
    }
}

/// Minimize the pilot surrogate from the current pilots; the result is
/// power-feasible and its objective never exceeds the starting one.
pub fn pilot_subproblem(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    stats: &ChannelStats,
    a_diag: &DVector<f64>,
    filters: &FilterSet,
    opt: &OptimizerConfig,
) -> (PilotSet, Vec<f64>) {
    let sur = PilotSurrogate::build(stats, combiners, a_diag, filters, pilots.tau());
    let budget = pilots.power_budget.clone();
    let out = projected_descent(
        pilots.s.clone(),
        opt.inner_max_iters,
        opt.inner_tol,
        &|s| sur.objective(s),
        &|s| sur.gradient(s),
        &|s| project_pilot_columns(s, &budget),
    );
    (
        PilotSet {
            s: out.x,
            power_budget: budget,
        },
        out.objective_trace,
    )
}

/// Minimize the combiner surrogate per RRH under the relaxed |w| ≤ 1
/// constraint. Returns the relaxed-mode combiner set and per-RRH traces.
pub fn combiner_subproblem(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    stats: &ChannelStats,
    a_diag: &DVector<f64>,
    filters: &FilterSet,
    noise_var: f64,
    opt: &OptimizerConfig,
) -> (CombinerSet, Vec<Vec<f64>>) {
    let l = combiners.w[0].nrows();
    let sur = CombinerSurrogate::build(stats, pilots, a_diag, filters, l, noise_var);
    let mut out_w = Vec::with_capacity(combiners.n_rrh());
    let mut traces = Vec::with_capacity(combiners.n_rrh());
    for i in 0..combiners.n_rrh() {
        let run = projected_descent(
            combiners.w[i].clone(),
            opt.inner_max_iters,
            opt.inner_tol,
            &|w| sur.objective_rrh(i, w),
            &|w| sur.gradient_rrh(i, w),
            &project_unit_disc,
        );
        out_w.push(run.x);
        traces.push(run.objective_trace);
    }
    (
        CombinerSet {
            w: out_w,
            mode: CombinerMode::Relaxed,
        },
        traces,
    )
}

/// Sum-MSE of a design evaluated with an explicit (frozen) linearization.
/// This is the surrogate objective the subproblems descend, including the
/// design-independent constants.
pub fn surrogate_sum_mse(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    stats: &ChannelStats,
    a_diag: &DVector<f64>,
    c_q: &DMatrix<Complex64>,
    filters: &FilterSet,
    noise_var: f64,
) -> Result<f64> {
    let fe = FrontEndStats::compute(pilots, combiners, stats, noise_var)?;
    let model = assemble_with_linearization(stats, &fe, a_diag.clone(), c_q.clone())?;
    Ok(analytic_mse(&model, filters).1)
}

fn assemble_current(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    stats: &ChannelStats,
    noise_var: f64,
) -> Result<(GlobalModel, Vec<BussgangState>)> {
    let fe = FrontEndStats::compute(pilots, combiners, stats, noise_var)?;
    let states: Vec<BussgangState> = fe
        .c_signal
        .iter()
        .map(BussgangState::from_covariance)
        .collect::<Result<_>>()?;
    let model = crate::estimation::assemble_global(stats, &fe, &states)?;
    Ok((model, states))
}

/// Alternating optimization of pilots, combiners, and filters under the
/// one-bit model. `scheme` freezes blocks to realize the reference designs;
/// frozen blocks are never touched.
pub fn run_alternating_design<R: Rng>(
    cfg: &SystemConfig,
    stats: &ChannelStats,
    opt: &OptimizerConfig,
    scheme: Scheme,
    rng: &mut R,
) -> Result<OptimizerTrace> {
    cfg.validate()?;
    opt.validate()?;
    if cfg.noise_var <= 0.0 {
        return Err(Error::DegenerateSignal(
            "the one-bit path requires noise_var > 0".into(),
        ));
    }
    let noise_var = cfg.noise_var;

    let (mut pilots, mut combiners) = init_design(cfg, rng);
    let (model, mut states) = assemble_current(&pilots, &combiners, stats, noise_var)?;
    let mut filters = mmse_filter(&model)?;
    let (_, mut sum_mse) = analytic_mse(&model, &filters);
    let mut trace = vec![sum_mse];
    let mut gamma = opt.gamma0;
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;

    for _ in 0..opt.max_outer_iters {
        let a_diag = global_gain_diag(&states);
        // Pilot update with everything else frozen.
        if scheme.optimizes_pilots() {
            let (candidate, _) =
                pilot_subproblem(&pilots, &combiners, stats, &a_diag, &filters, opt);
            pilots.s = &pilots.s + (candidate.s - &pilots.s).scale(gamma);
        }
        // Combiner update with the fresh pilots, then modulus projection.
        if scheme.optimizes_combiners() {
            let (candidate, _) = combiner_subproblem(
                &pilots, &combiners, stats, &a_diag, &filters, noise_var, opt,
            );
            for i in 0..combiners.n_rrh() {
                let interp = &combiners.w[i] + (&candidate.w[i] - &combiners.w[i]).scale(gamma);
                combiners.w[i] = project_modulus_matrix(&interp);
            }
        }
        // Refresh the linearization and the filters for the new design.
        let (model, new_states) = assemble_current(&pilots, &combiners, stats, noise_var)?;
        states = new_states;
        filters = mmse_filter(&model)?;
        let (_, new_sum) = analytic_mse(&model, &filters);
        trace.push(new_sum);
        iterations += 1;

        let rel = (new_sum - sum_mse).abs() / sum_mse.abs().max(1e-300);
        sum_mse = new_sum;
        if rel <= opt.outer_tol {
            termination = Termination::Converged;
            break;
        }
        gamma *= 1.0 - opt.gamma_decay * gamma;
    }

    Ok(OptimizerTrace {
        sum_mse: trace,
        pilots,
        combiners,
        filters,
        iterations,
        termination,
    })
}

/// Global gain diagonal of a per-RRH state list.
pub fn global_gain_diag(states: &[BussgangState]) -> DVector<f64> {
    let total: usize = states.iter().map(|s| s.dim()).sum();
    let mut a = DVector::zeros(total);
    let mut off = 0;
    for s in states {
        a.rows_mut(off, s.dim()).copy_from(&s.a_gain);
        off += s.dim();
    }
    a
}

/// Global block-diagonal quantization covariance of a per-RRH state list.
pub fn global_quant_cov(states: &[BussgangState]) -> DMatrix<Complex64> {
    let blocks: Vec<DMatrix<Complex64>> = states.iter().map(|s| s.c_q.clone()).collect();
    block_diag(&blocks)
}

/// Objective f = Re tr(X A² X^H (X A X^H)^{-1}) and its Wirtinger-conjugate
/// gradient V^{-1} X A² − V^{-1} U V^{-1} X A, for Hermitian A.
fn ratio_trace_value_grad(
    x: &DMatrix<Complex64>,
    a: &DMatrix<Complex64>,
    context: &str,
) -> Result<(f64, DMatrix<Complex64>)> {
    let xa = x * a;
    let v = hermitize(&(&xa * x.adjoint()));
    let u = hermitize(&(&xa * xa.adjoint()));
    let t = herm_solve(&v, &u, context)?; // V^{-1} U
    let f = t.trace().re;
    let s1 = herm_solve(&v, &(&xa * a), context)?; // V^{-1} X A²
    let s2 = &t * herm_solve(&v, &xa, context)?; // V^{-1} U V^{-1} X A
    Ok((f, s1 - s2))
}

/// Value-only variant used by the greedy pilot search.
fn ratio_trace_value(x: &DMatrix<Complex64>, a: &DMatrix<Complex64>, context: &str) -> Result<f64> {
    let xa = x * a;
    let v = hermitize(&(&xa * x.adjoint()));
    let u = hermitize(&(&xa * xa.adjoint()));
    Ok(herm_solve(&v, &u, context)?.trace().re)
}

/// Maximize tr(J_i) = tr(W Q² W^H (W Q W^H)^{-1}) over unit-modulus W by
/// projected gradient ascent on the entries, with five random restarts.
pub fn highres_combiner_opt<R: Rng>(
    q: &DMatrix<f64>,
    l_chains: usize,
    opt: &OptimizerConfig,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    Ok(highres_combiner_opt_traced(q, l_chains, opt, rng)?.0)
}

/// [`highres_combiner_opt`] plus the best restart's objective trace
/// (non-decreasing over accepted ascent steps).
pub fn highres_combiner_opt_traced<R: Rng>(
    q: &DMatrix<f64>,
    l_chains: usize,
    opt: &OptimizerConfig,
    rng: &mut R,
) -> Result<(DMatrix<Complex64>, Vec<f64>)> {
    let m = q.nrows();
    let q_c = to_complex(q);
    let mut best: Option<(f64, DMatrix<Complex64>, Vec<f64>)> = None;
    for _ in 0..5 {
        let w0 = DMatrix::from_fn(l_chains, m, |_, _| uniform_phase(rng));
        // Minimize the negated trace; infeasible/singular iterates score +inf.
        let run = projected_descent(
            w0,
            opt.inner_max_iters,
            opt.inner_tol,
            &|w| match ratio_trace_value(w, &q_c, "combiner objective") {
                Ok(f) => -f,
                Err(_) => f64::INFINITY,
            },
            &|w| match ratio_trace_value_grad(w, &q_c, "combiner gradient") {
                Ok((_, g)) => g.scale(-2.0),
                Err(_) => DMatrix::zeros(w.nrows(), w.ncols()),
            },
            &|w| *w = project_modulus_matrix(w),
        );
        let f = ratio_trace_value(&run.x, &q_c, "combiner objective")?;
        if best.as_ref().map_or(true, |(bf, _, _)| f > *bf) {
            let ascent_trace = run.objective_trace.iter().map(|v| -v).collect();
            best = Some((f, run.x, ascent_trace));
        }
    }
    let (_, w, trace) = best.expect("at least one restart ran");
    Ok((w, trace))
}

/// Weighted pilot objective Σ_i w_i tr(K_i) of a pilot matrix.
pub fn highres_pilot_objective(
    stats: &ChannelStats,
    weights: &[f64],
    s: &DMatrix<Complex64>,
) -> Result<f64> {
    let n_ue = stats.n_ue();
    let mut total = 0.0;
    for i in 0..stats.n_rrh() {
        let p = DMatrix::from_fn(n_ue, n_ue, |a, b| {
            if a == b {
                Complex64::new(stats.rho[(i, a)], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        total += weights[i] * ratio_trace_value(s, &p, "pilot objective")?;
    }
    Ok(total)
}

/// tr(J) of one combiner against a real correlation matrix.
pub fn combiner_trace_objective(q: &DMatrix<f64>, w: &DMatrix<Complex64>) -> Result<f64> {
    ratio_trace_value(w, &to_complex(q), "combiner objective")
}

/// Greedy-plus-polish pilot design maximizing Σ_i w_i tr(K_i) at full power.
///
/// Greedy stage: each of the τ pilot rows is drawn from the N_U-point DFT
/// dictionary (entries scaled to the per-UE power), picking at every step
/// the column index that maximizes the weighted objective of the prefix.
/// Polish stage: projected gradient ascent on the same objective under the
/// per-UE power constraint.
pub fn highres_pilot_opt(
    stats: &ChannelStats,
    weights: &[f64],
    power_budget: &[f64],
    tau: usize,
    opt: &OptimizerConfig,
) -> Result<PilotSet> {
    let n_ue = stats.n_ue();
    let n_rrh = stats.n_rrh();
    if weights.len() != n_rrh {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {n_rrh} RRHs",
            weights.len()
        )));
    }
    let p_mats: Vec<DMatrix<Complex64>> = (0..n_rrh)
        .map(|i| {
            DMatrix::from_fn(n_ue, n_ue, |a, b| {
                if a == b {
                    Complex64::new(stats.rho[(i, a)], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
        })
        .collect();

    let objective = |s: &DMatrix<Complex64>| -> Result<f64> {
        let mut total = 0.0;
        for i in 0..n_rrh {
            total += weights[i] * ratio_trace_value(s, &p_mats[i], "pilot objective")?;
        }
        Ok(total)
    };

    // DFT dictionary row j: entry k is sqrt(P_k)·exp(-i 2π j k / N_U).
    let dict_row = |j: usize| -> Vec<Complex64> {
        (0..n_ue)
            .map(|k| {
                let phase = -std::f64::consts::TAU * (j * k) as f64 / n_ue as f64;
                Complex64::new(phase.cos(), phase.sin()) * power_budget[k].sqrt()
            })
            .collect()
    };

    let mut s = DMatrix::<Complex64>::zeros(tau, n_ue);
    for t in 0..tau {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n_ue {
            let row = dict_row(j);
            for (k, val) in row.iter().enumerate() {
                s[(t, k)] = *val;
            }
            let prefix = s.rows(0, t + 1).clone_owned();
            if let Ok(f) = objective(&prefix) {
                if best.as_ref().map_or(true, |(bf, _)| f > *bf) {
                    best = Some((f, j));
                }
            }
        }
        // All candidates singular cannot happen for t = 0; fall back to a
        // deterministic pick if a later prefix is degenerate anyway.
        let j = best.map(|(_, j)| j).unwrap_or(t % n_ue);
        let row = dict_row(j);
        for (k, val) in row.iter().enumerate() {
            s[(t, k)] = *val;
        }
    }

    // Polish with projected gradient ascent on the same objective.
    let budget = power_budget.to_vec();
    let run = projected_descent(
        s,
        opt.inner_max_iters,
        opt.inner_tol,
        &|s| match objective(s) {
            Ok(f) => -f,
            Err(_) => f64::INFINITY,
        },
        &|s| {
            let mut g = DMatrix::<Complex64>::zeros(s.nrows(), s.ncols());
            for i in 0..n_rrh {
                match ratio_trace_value_grad(s, &p_mats[i], "pilot gradient") {
                    Ok((_, gi)) => g += gi.scale(weights[i]),
                    Err(_) => return DMatrix::zeros(s.nrows(), s.ncols()),
                }
            }
            g.scale(-2.0)
        },
        &|s| project_pilot_columns(s, &budget),
    );

    Ok(PilotSet {
        s: run.x,
        power_budget: budget,
    })
}
