//! Stacked observation model, MMSE filtering, analytic and Monte-Carlo MSE,
//! and the high-resolution noiseless estimation path.
//!
//! The global observation stacks the per-RRH quantized vectors in RRH
//! order. All global matrices are block-diagonal with per-RRH blocks, and
//! the per-UE MSE evaluates
//!   ε_k = tr((F A B_k − I) Θ_k (·)^H) + Σ_{l≠k} tr(F A B_l Θ_l B_l^H A^H F^H)
//!       + tr(F A C_z̃ A^H F^H) + tr(F C_q F^H),
//! which is exact for Gaussian inputs because the one-bit second-order
//! statistics are exact.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bussgang::{quantize_one_bit, BussgangState};
use crate::error::{Error, Result};
use crate::exec;
use crate::frontend::{combine_and_vectorize, receive, CombinerSet, FrontEndStats, PilotSet};
use crate::linalg::{block_diag, herm_solve, herm_solve_strict, herm_solve_vec_strict, hermitize, to_complex};
use crate::rng::substream;
use crate::scenario::{sample_channels, ChannelStats};

/// Stacked observation model with per-RRH blocks in RRH order.
#[derive(Debug, Clone)]
pub struct GlobalModel {
    pub n_ue: usize,
    pub n_rrh: usize,
    pub m_antennas: usize,
    pub l_chains: usize,
    pub tau: usize,
    /// Diagonal of the global Bussgang gain A (length Lτ·N_R).
    pub a_diag: DVector<f64>,
    /// Per-UE global signature B_k = diag_i(B_{k,i}), size Lτ·N_R × M·N_R.
    pub b: Vec<DMatrix<Complex64>>,
    /// Global effective-noise covariance C_z̃ (block-diagonal).
    pub c_noise: DMatrix<Complex64>,
    /// Global quantization-noise covariance C_q (block-diagonal).
    pub c_q: DMatrix<Complex64>,
    /// Per-UE channel covariance Θ_k.
    pub theta: Vec<DMatrix<Complex64>>,
}

impl GlobalModel {
    /// Observation dimension Lτ·N_R.
    pub fn obs_dim(&self) -> usize {
        self.l_chains * self.tau * self.n_rrh
    }

    /// Channel dimension M·N_R.
    pub fn chan_dim(&self) -> usize {
        self.m_antennas * self.n_rrh
    }

    /// A · X for the diagonal gain A.
    pub fn scale_rows_by_gain(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = x.clone();
        for r in 0..out.nrows() {
            let g = self.a_diag[r];
            for c in 0..out.ncols() {
                out[(r, c)] *= g;
            }
        }
        out
    }

    /// X · A for the diagonal gain A.
    pub fn scale_cols_by_gain(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = x.clone();
        for c in 0..out.ncols() {
            let g = self.a_diag[c];
            for r in 0..out.nrows() {
                out[(r, c)] *= g;
            }
        }
        out
    }
}

fn check_blocks(stats: &ChannelStats, frontend: &FrontEndStats) -> Result<usize> {
    let n_rrh = stats.n_rrh();
    if frontend.c_signal.len() != n_rrh
        || frontend.c_noise.len() != n_rrh
        || frontend.b_blocks.len() != n_rrh
    {
        return Err(Error::DimensionMismatch(
            "front-end statistics do not cover every RRH".into(),
        ));
    }
    let dim = frontend.l_chains * frontend.tau;
    for i in 0..n_rrh {
        if frontend.c_signal[i].nrows() != dim
            || frontend.c_noise[i].nrows() != dim
            || frontend.b_blocks[i].len() != stats.n_ue()
            || frontend.b_blocks[i][0].nrows() != dim
        {
            return Err(Error::DimensionMismatch(format!(
                "RRH {i} front-end blocks disagree with shared dimensions L={} τ={}",
                frontend.l_chains, frontend.tau
            )));
        }
    }
    Ok(dim)
}

/// Assemble the global model from per-RRH pieces with an explicit
/// linearization (gain diagonal and quantization-noise covariance).
pub fn assemble_with_linearization(
    stats: &ChannelStats,
    frontend: &FrontEndStats,
    a_diag: DVector<f64>,
    c_q: DMatrix<Complex64>,
) -> Result<GlobalModel> {
    let block_dim = check_blocks(stats, frontend)?;
    let n_rrh = stats.n_rrh();
    let n_ue = stats.n_ue();
    let n = n_rrh * block_dim;

    if a_diag.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "gain diagonal has length {}, expected {n}",
            a_diag.len()
        )));
    }
    if c_q.nrows() != n || c_q.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "quantization covariance is {}x{}, expected {n}x{n}",
            c_q.nrows(),
            c_q.ncols()
        )));
    }

    let b = (0..n_ue)
        .map(|k| {
            let blocks: Vec<DMatrix<Complex64>> = (0..n_rrh)
                .map(|i| frontend.b_blocks[i][k].clone())
                .collect();
            block_diag(&blocks)
        })
        .collect();

    Ok(GlobalModel {
        n_ue,
        n_rrh,
        m_antennas: stats.m_antennas(),
        l_chains: frontend.l_chains,
        tau: frontend.tau,
        a_diag,
        b,
        c_noise: block_diag(&frontend.c_noise),
        c_q,
        theta: stats.theta.clone(),
    })
}

/// Assemble the global model from fresh Bussgang states.
pub fn assemble_global(
    stats: &ChannelStats,
    frontend: &FrontEndStats,
    states: &[BussgangState],
) -> Result<GlobalModel> {
    let block_dim = check_blocks(stats, frontend)?;
    let n_rrh = stats.n_rrh();
    if states.len() != n_rrh {
        return Err(Error::DimensionMismatch(format!(
            "{} Bussgang states for {n_rrh} RRHs",
            states.len()
        )));
    }
    let mut a_diag = DVector::zeros(n_rrh * block_dim);
    for (i, st) in states.iter().enumerate() {
        if st.dim() != block_dim {
            return Err(Error::DimensionMismatch(format!(
                "Bussgang state {i} has dimension {}, expected {block_dim}",
                st.dim()
            )));
        }
        a_diag
            .rows_mut(i * block_dim, block_dim)
            .copy_from(&st.a_gain);
    }
    let c_q_blocks: Vec<DMatrix<Complex64>> = states.iter().map(|s| s.c_q.clone()).collect();
    assemble_with_linearization(stats, frontend, a_diag, block_diag(&c_q_blocks))
}

/// Per-UE linear filters F_k (M·N_R × Lτ·N_R).
#[derive(Debug, Clone)]
pub struct FilterSet {
    pub f: Vec<DMatrix<Complex64>>,
}

impl FilterSet {
    /// All-zero filters (the estimator that ignores the data).
    pub fn zeros(model: &GlobalModel) -> Self {
        FilterSet {
            f: vec![DMatrix::zeros(model.chan_dim(), model.obs_dim()); model.n_ue],
        }
    }
}

/// Observation covariance C_ŷ = Σ_l A B_l Θ_l B_l^H A^H + A C_z̃ A^H + C_q.
pub fn observation_covariance(model: &GlobalModel) -> DMatrix<Complex64> {
    let n = model.obs_dim();
    let mut cov = DMatrix::zeros(n, n);
    for l in 0..model.n_ue {
        let ab = model.scale_rows_by_gain(&model.b[l]);
        cov += &ab * &model.theta[l] * ab.adjoint();
    }
    cov += model.scale_cols_by_gain(&model.scale_rows_by_gain(&model.c_noise));
    cov += &model.c_q;
    hermitize(&cov)
}

/// Closed-form MMSE filters F_k = Θ_k B_k^H A^H C_ŷ^{-1}.
pub fn mmse_filter(model: &GlobalModel) -> Result<FilterSet> {
    let cov = observation_covariance(model);
    let mut filters = Vec::with_capacity(model.n_ue);
    for k in 0..model.n_ue {
        let ab = model.scale_rows_by_gain(&model.b[k]);
        let cross = &ab * &model.theta[k]; // (A B_k Θ_k), n × m
        let x = herm_solve(&cov, &cross, "mmse filter covariance")?;
        filters.push(x.adjoint());
    }
    Ok(FilterSet { f: filters })
}

fn real_trace(x: Complex64) -> f64 {
    debug_assert!(
        x.im.abs() < 1e-9 * x.re.abs().max(1.0),
        "trace has imaginary residue {}",
        x.im
    );
    x.re
}

/// Per-UE and total MSE of given filters under the model's statistics.
pub fn analytic_mse(model: &GlobalModel, filters: &FilterSet) -> (Vec<f64>, f64) {
    let m = model.chan_dim();
    let eye = DMatrix::<Complex64>::identity(m, m);
    let mut per_ue = Vec::with_capacity(model.n_ue);
    for k in 0..model.n_ue {
        let f_k = &filters.f[k];
        let fa = model.scale_cols_by_gain(f_k);
        let mut eps = Complex64::new(0.0, 0.0);
        // Desired-UE term.
        let x = &fa * &model.b[k] - &eye;
        eps += (&x * &model.theta[k] * x.adjoint()).trace();
        // Interference from every other UE.
        for l in 0..model.n_ue {
            if l == k {
                continue;
            }
            let fab = &fa * &model.b[l];
            eps += (&fab * &model.theta[l] * fab.adjoint()).trace();
        }
        // Receiver noise and quantization noise through the filter.
        eps += (&fa * &model.c_noise * fa.adjoint()).trace();
        eps += (f_k * &model.c_q * f_k.adjoint()).trace();
        per_ue.push(real_trace(eps));
    }
    let sum = per_ue.iter().sum();
    (per_ue, sum)
}

/// Monte-Carlo MSE estimate with per-UE means and standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalMse {
    pub per_ue: Vec<f64>,
    pub per_ue_stderr: Vec<f64>,
    /// Standard error of the per-trial summed squared error.
    pub sum_stderr: f64,
    pub n_trials: usize,
}

impl EmpiricalMse {
    pub fn sum(&self) -> f64 {
        self.per_ue.iter().sum()
    }
}

fn one_bit_trial(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    filters: &FilterSet,
    stats: &ChannelStats,
    noise_var: f64,
    seed: u64,
    trial: usize,
) -> Vec<f64> {
    let mut rng = substream(seed, trial as u64);
    let channel = sample_channels(stats, &mut rng);
    let received = receive(&channel, pilots, noise_var, &mut rng);
    let per_rrh: Vec<DVector<Complex64>> = received
        .iter()
        .zip(combiners.w.iter())
        .map(|(y, w)| quantize_one_bit(&combine_and_vectorize(w, y)))
        .collect();
    let total: usize = per_rrh.iter().map(|v| v.len()).sum();
    let mut y_hat = DVector::zeros(total);
    let mut off = 0;
    for v in &per_rrh {
        y_hat.rows_mut(off, v.len()).copy_from(v);
        off += v.len();
    }
    (0..stats.n_ue())
        .map(|k| {
            let est = &filters.f[k] * &y_hat;
            (est - channel.stacked_for_ue(k)).norm_squared()
        })
        .collect()
}

fn merge_trials(errs: Vec<Vec<f64>>, n_ue: usize) -> EmpiricalMse {
    let n = errs.len();
    let mut sum = vec![0.0; n_ue];
    let mut sumsq = vec![0.0; n_ue];
    let mut tot_sum = 0.0;
    let mut tot_sumsq = 0.0;
    for trial in &errs {
        let mut trial_total = 0.0;
        for k in 0..n_ue {
            sum[k] += trial[k];
            sumsq[k] += trial[k] * trial[k];
            trial_total += trial[k];
        }
        tot_sum += trial_total;
        tot_sumsq += trial_total * trial_total;
    }
    let nf = n as f64;
    let stderr = |s: f64, sq: f64| {
        if n < 2 {
            f64::INFINITY
        } else {
            let mean = s / nf;
            let var = (sq - nf * mean * mean) / (nf - 1.0);
            (var.max(0.0) / nf).sqrt()
        }
    };
    let per_ue: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let per_ue_stderr = (0..n_ue).map(|k| stderr(sum[k], sumsq[k])).collect();
    EmpiricalMse {
        per_ue,
        per_ue_stderr,
        sum_stderr: stderr(tot_sum, tot_sumsq),
        n_trials: n,
    }
}

/// Average ‖F_k ŷ − h_k‖² over full simulations of the one-bit chain
/// (channels → reception → combining → quantization → filtering).
///
/// Trials use independent substreams of `seed` and are merged in trial
/// order, so the result does not depend on the execution backend.
pub fn empirical_mse(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    filters: &FilterSet,
    stats: &ChannelStats,
    noise_var: f64,
    n_trials: usize,
    seed: u64,
) -> EmpiricalMse {
    let errs = exec::map_indexed(n_trials, |t| {
        one_bit_trial(pilots, combiners, filters, stats, noise_var, seed, t)
    });
    merge_trials(errs, stats.n_ue())
}

/// Sequential fallback of [`empirical_mse`]; identical output bit for bit.
pub fn empirical_mse_seq(
    pilots: &PilotSet,
    combiners: &CombinerSet,
    filters: &FilterSet,
    stats: &ChannelStats,
    noise_var: f64,
    n_trials: usize,
    seed: u64,
) -> EmpiricalMse {
    let errs = exec::map_indexed_seq(n_trials, |t| {
        one_bit_trial(pilots, combiners, filters, stats, noise_var, seed, t)
    });
    merge_trials(errs, stats.n_ue())
}

/// High-resolution noiseless statistics: R_i = P_i ⊗ Q_i, B_{R,i} = S̄ ⊗ W_i,
/// and the trace-ratio matrices J_i, K_i of the decomposed sum-MSE.
///
/// The per-RRH channel h_{R,i} stacks UEs (UE-major), unlike the per-UE
/// stacking of [`GlobalModel`]; converters live on `ChannelRealization`.
#[derive(Debug, Clone)]
pub struct HighResStats {
    pub n_ue: usize,
    pub m_antennas: usize,
    /// Per-RRH channel covariance R_i (M·N_U square).
    pub r: Vec<DMatrix<Complex64>>,
    /// Per-RRH observation map B_{R,i} = S̄ ⊗ W_i (Lτ × M·N_U).
    pub b_r: Vec<DMatrix<Complex64>>,
    /// J_i = W_i Q_i² W_i^H (W_i Q_i W_i^H)^{-1}.
    pub j: Vec<DMatrix<Complex64>>,
    /// K_i = S̄ P_i² S̄^H (S̄ P_i S̄^H)^{-1}.
    pub k: Vec<DMatrix<Complex64>>,
}

/// X A² X^H (X A X^H)^{-1} for Hermitian A.
fn trace_ratio(
    x: &DMatrix<Complex64>,
    a: &DMatrix<Complex64>,
    context: &str,
) -> Result<DMatrix<Complex64>> {
    let xa = x * a;
    let v = hermitize(&(&xa * x.adjoint()));
    let u = hermitize(&(&xa * xa.adjoint()));
    // J = U V^{-1}; solve V Y = U (so Y = V^{-1} U = J^H) and return Y^H.
    Ok(herm_solve_strict(&v, &u, context)?.adjoint())
}

impl HighResStats {
    pub fn compute(
        stats: &ChannelStats,
        pilots: &PilotSet,
        combiners: &CombinerSet,
    ) -> Result<Self> {
        let n_rrh = stats.n_rrh();
        let n_ue = stats.n_ue();
        let mut r = Vec::with_capacity(n_rrh);
        let mut b_r = Vec::with_capacity(n_rrh);
        let mut j = Vec::with_capacity(n_rrh);
        let mut k_mats = Vec::with_capacity(n_rrh);
        for i in 0..n_rrh {
            let q_c = to_complex(&stats.q_corr[i]);
            let p = DMatrix::<Complex64>::from_fn(n_ue, n_ue, |a, b| {
                if a == b {
                    Complex64::new(stats.rho[(i, a)], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            r.push(p.kronecker(&q_c));
            b_r.push(pilots.s.kronecker(&combiners.w[i]));
            j.push(trace_ratio(&combiners.w[i], &q_c, "combiner trace ratio J")?);
            // S̄ multiplies P from the left as a τ×N_U map.
            k_mats.push(trace_ratio(&pilots.s, &p, "pilot trace ratio K")?);
        }
        Ok(HighResStats {
            n_ue,
            m_antennas: stats.m_antennas(),
            r,
            b_r,
            j,
            k: k_mats,
        })
    }

    pub fn n_rrh(&self) -> usize {
        self.r.len()
    }
}

/// Per-RRH noiseless MMSE estimate R B^H (B R B^H)^{-1} y.
pub fn highres_estimate(
    hr: &HighResStats,
    rrh: usize,
    y_i: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let b = &hr.b_r[rrh];
    let r = &hr.r[rrh];
    let gram = hermitize(&(b * r * b.adjoint()));
    let x = herm_solve_vec_strict(&gram, y_i, "high-resolution observation gram")?;
    Ok(r * b.adjoint() * x)
}

/// Decomposed noiseless sum-MSE Σ_i [tr(R_i) − tr(J_i)·tr(K_i)].
pub fn highres_summse(hr: &HighResStats) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..hr.n_rrh() {
        let tr_r = real_trace(hr.r[i].trace());
        let tr_j = real_trace(hr.j[i].trace());
        let tr_k = real_trace(hr.k[i].trace());
        total += tr_r - tr_j * tr_k;
    }
    Ok(total)
}

/// Monte-Carlo check of the noiseless path: sample channels, observe
/// y_i = B_{R,i} h_{R,i}, estimate, and average the per-UE squared errors.
pub fn highres_empirical_mse(
    hr: &HighResStats,
    stats: &ChannelStats,
    n_trials: usize,
    seed: u64,
) -> Result<EmpiricalMse> {
    let m = hr.m_antennas;
    let errs: Vec<Result<Vec<f64>>> = exec::map_indexed(n_trials, |t| {
        let mut rng = substream(seed, t as u64);
        let channel = sample_channels(stats, &mut rng);
        let mut per_ue = vec![0.0; hr.n_ue];
        for i in 0..hr.n_rrh() {
            let h_r = channel.stacked_for_rrh(i);
            let y = &hr.b_r[i] * &h_r;
            let est = highres_estimate(hr, i, &y)?;
            let err = est - h_r;
            for (k, out) in per_ue.iter_mut().enumerate() {
                *out += err.rows(k * m, m).norm_squared();
            }
        }
        Ok(per_ue)
    });
    let errs: Vec<Vec<f64>> = errs.into_iter().collect::<Result<_>>()?;
    Ok(merge_trials(errs, hr.n_ue))
}

/// Per-UE noiseless MSE from the error covariance
/// R_i − R_i B^H (B R B^H)^{-1} B R_i, summing each UE's M×M block over RRHs.
pub fn highres_per_ue_mse(hr: &HighResStats) -> Result<Vec<f64>> {
    let m = hr.m_antennas;
    let mut per_ue = vec![0.0; hr.n_ue];
    for i in 0..hr.n_rrh() {
        let b = &hr.b_r[i];
        let r = &hr.r[i];
        let gram = hermitize(&(b * r * b.adjoint()));
        let br = b * r; // Lτ × M·N_U
        let x = herm_solve_strict(&gram, &br, "high-resolution error covariance")?;
        let err = r - br.adjoint() * x;
        for (k, out) in per_ue.iter_mut().enumerate() {
            let block = err.view((k * m, k * m), (m, m));
            let mut tr = Complex64::new(0.0, 0.0);
            for d in 0..m {
                tr += block[(d, d)];
            }
            *out += real_trace(tr);
        }
    }
    Ok(per_ue)
}
