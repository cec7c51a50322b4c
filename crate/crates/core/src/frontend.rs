//! Pilot transmission through the analog front end, and exact second-order
//! statistics of the pre-ADC signal.
//!
//! Vectorization is column-major throughout, so vec(W Y) = (I_τ ⊗ W) vec(Y)
//! holds exactly and the per-UE signature matrices are B_{k,i} = s_k ⊗ W_i.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{hermitize, to_complex, vec_col_major};
use crate::rng::standard_complex;
use crate::scenario::{ChannelRealization, ChannelStats};

const MODULUS_TOL: f64 = 1e-9;
const POWER_TOL: f64 = 1e-9;

/// Pilot matrix S̄ = [s_1 ... s_{N_U}] (τ × N_U) with per-UE power budgets.
#[derive(Debug, Clone)]
pub struct PilotSet {
    /// τ × N_U pilot matrix; column k is UE k's pilot.
    pub s: DMatrix<Complex64>,
    /// Per-UE power budget P_k; feasibility is (1/τ)‖s_k‖² ≤ P_k.
    pub power_budget: Vec<f64>,
}

impl PilotSet {
    pub fn new(s: DMatrix<Complex64>, power_budget: Vec<f64>) -> Result<Self> {
        let set = PilotSet { s, power_budget };
        set.validate()?;
        Ok(set)
    }

    pub fn tau(&self) -> usize {
        self.s.nrows()
    }

    pub fn n_ue(&self) -> usize {
        self.s.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.power_budget.len() != self.n_ue() {
            return Err(Error::DimensionMismatch(format!(
                "{} power budgets for {} UEs",
                self.power_budget.len(),
                self.n_ue()
            )));
        }
        let tau = self.tau() as f64;
        for k in 0..self.n_ue() {
            let used = self.s.column(k).norm_squared() / tau;
            if used > self.power_budget[k] + POWER_TOL {
                return Err(Error::InvalidInput(format!(
                    "pilot {k} uses power {used:.9} over budget {:.9}",
                    self.power_budget[k]
                )));
            }
        }
        Ok(())
    }

    /// Scale each column back into its power ball: s_k ← s_k · min(1, √(τP_k)/‖s_k‖).
    pub fn project_power(&mut self) {
        let tau = self.tau() as f64;
        for k in 0..self.n_ue() {
            let norm = self.s.column(k).norm();
            let limit = (tau * self.power_budget[k]).sqrt();
            if norm > limit {
                let scale = limit / norm;
                let scaled = self.s.column(k).scale(scale);
                self.s.set_column(k, &scaled);
            }
        }
    }
}

/// Whether combiner entries must sit on the unit circle or inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerMode {
    /// |W(a,b)| = 1 (phase-shifter hardware).
    Strict,
    /// |W(a,b)| ≤ 1 (convex relaxation used inside the optimizer).
    Relaxed,
}

/// Per-RRH analog combiners W_i (L × M).
#[derive(Debug, Clone)]
pub struct CombinerSet {
    pub w: Vec<DMatrix<Complex64>>,
    pub mode: CombinerMode,
}

impl CombinerSet {
    pub fn new(w: Vec<DMatrix<Complex64>>, mode: CombinerMode) -> Result<Self> {
        let set = CombinerSet { w, mode };
        set.validate()?;
        Ok(set)
    }

    pub fn n_rrh(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.w.iter().enumerate() {
            for e in w.iter() {
                let mag2 = e.norm_sqr();
                let bad = match self.mode {
                    CombinerMode::Strict => (mag2 - 1.0).abs() > MODULUS_TOL,
                    CombinerMode::Relaxed => mag2 > 1.0 + MODULUS_TOL,
                };
                if bad {
                    return Err(Error::InvalidInput(format!(
                        "combiner {i} entry modulus² = {mag2:.12} violates {:?} mode",
                        self.mode
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Signature block B_{k,i} = s_k ⊗ W_i (Lτ × M).
pub fn b_block(s_k: &DVector<Complex64>, w_i: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let s_mat = DMatrix::from_column_slice(s_k.len(), 1, s_k.as_slice());
    s_mat.kronecker(w_i)
}

/// Simulate reception: Y_i = Σ_k h_{i,k} s_k^T + Z_i with Z_i i.i.d. CN(0, σ²).
pub fn receive<R: Rng>(
    channel: &ChannelRealization,
    pilots: &PilotSet,
    noise_var: f64,
    rng: &mut R,
) -> Vec<DMatrix<Complex64>> {
    let tau = pilots.tau();
    let sigma = noise_var.sqrt();
    channel
        .h
        .iter()
        .map(|h_i| {
            let m = h_i[0].len();
            let mut y = DMatrix::zeros(m, tau);
            for (k, h) in h_i.iter().enumerate() {
                let s_k = pilots.s.column(k);
                for t in 0..tau {
                    let s = s_k[t];
                    for a in 0..m {
                        y[(a, t)] += h[a] * s;
                    }
                }
            }
            if sigma > 0.0 {
                for t in 0..tau {
                    for a in 0..m {
                        y[(a, t)] += standard_complex(rng) * sigma;
                    }
                }
            }
            y
        })
        .collect()
}

/// ỹ_i = vec(W_i Y_i), column-major.
pub fn combine_and_vectorize(
    w_i: &DMatrix<Complex64>,
    y_i: &DMatrix<Complex64>,
) -> DVector<Complex64> {
    vec_col_major(&(w_i * y_i))
}

/// Effective noise covariance C_z̃ = σ² (I_τ ⊗ W)(I_τ ⊗ W)^H:
/// block-diagonal with τ copies of σ² W W^H (Lτ × Lτ).
pub fn noise_covariance(
    w_i: &DMatrix<Complex64>,
    noise_var: f64,
    tau: usize,
) -> DMatrix<Complex64> {
    let l = w_i.nrows();
    let block = (w_i * w_i.adjoint()).scale(noise_var);
    let mut out = DMatrix::zeros(l * tau, l * tau);
    for t in 0..tau {
        out.view_mut((t * l, t * l), (l, l)).copy_from(&block);
    }
    out
}

/// Received covariance C_ỹ = Σ_k rho_{i,k} B_{k,i} Q_i B_{k,i}^H + C_z̃,
/// symmetrized after assembly.
pub fn signal_covariance(
    pilots: &PilotSet,
    w_i: &DMatrix<Complex64>,
    stats: &ChannelStats,
    rrh: usize,
    noise_var: f64,
) -> DMatrix<Complex64> {
    let tau = pilots.tau();
    let q_c = to_complex(&stats.q_corr[rrh]);
    let mut cov = noise_covariance(w_i, noise_var, tau);
    for k in 0..pilots.n_ue() {
        let b = b_block(&pilots.s.column(k).clone_owned(), w_i);
        cov += (&b * &q_c * b.adjoint()).scale(stats.rho[(rrh, k)]);
    }
    hermitize(&cov)
}

/// Per-RRH front-end second-order statistics for a fixed design.
#[derive(Debug, Clone)]
pub struct FrontEndStats {
    /// RF chains per RRH (shared across RRHs).
    pub l_chains: usize,
    /// Pilot length.
    pub tau: usize,
    /// `b_blocks[i][k]` = s_k ⊗ W_i.
    pub b_blocks: Vec<Vec<DMatrix<Complex64>>>,
    /// Per-RRH effective noise covariance.
    pub c_noise: Vec<DMatrix<Complex64>>,
    /// Per-RRH received covariance C_ỹ_i.
    pub c_signal: Vec<DMatrix<Complex64>>,
}

impl FrontEndStats {
    pub fn compute(
        pilots: &PilotSet,
        combiners: &CombinerSet,
        stats: &ChannelStats,
        noise_var: f64,
    ) -> Result<Self> {
        if combiners.n_rrh() != stats.n_rrh() {
            return Err(Error::DimensionMismatch(format!(
                "{} combiners for {} RRHs",
                combiners.n_rrh(),
                stats.n_rrh()
            )));
        }
        if pilots.n_ue() != stats.n_ue() {
            return Err(Error::DimensionMismatch(format!(
                "{} pilots for {} UEs",
                pilots.n_ue(),
                stats.n_ue()
            )));
        }
        let tau = pilots.tau();
        let l_chains = combiners.w[0].nrows();
        for (i, w) in combiners.w.iter().enumerate() {
            if w.nrows() != l_chains || w.ncols() != stats.m_antennas() {
                return Err(Error::DimensionMismatch(format!(
                    "combiner {i} is {}x{}, expected {}x{}",
                    w.nrows(),
                    w.ncols(),
                    l_chains,
                    stats.m_antennas()
                )));
            }
        }
        let b_blocks = combiners
            .w
            .iter()
            .map(|w| {
                (0..pilots.n_ue())
                    .map(|k| b_block(&pilots.s.column(k).clone_owned(), w))
                    .collect()
            })
            .collect();
        let c_noise = combiners
            .w
            .iter()
            .map(|w| noise_covariance(w, noise_var, tau))
            .collect();
        let c_signal = combiners
            .w
            .iter()
            .enumerate()
            .map(|(i, w)| signal_covariance(pilots, w, stats, i, noise_var))
            .collect();
        Ok(FrontEndStats {
            l_chains,
            tau,
            b_blocks,
            c_noise,
            c_signal,
        })
    }
}
