//! Scenario generation: geometry, pathloss, spatial correlation, and
//! channel realizations.
//!
//! UEs and RRHs are dropped uniformly in a square area. The channel from
//! UE k to RRH i is `h_{i,k} = sqrt(rho_{i,k}) Q_i^{1/2} h_w` with
//! `h_w ~ CN(0, I_M)`, pathloss `rho = 1 / (1 + (D/10)^3)` and a per-RRH
//! receive correlation `Q_i(a,b) = J0(2π |a-b| sin(d/λ) / Δ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, sym_sqrt_psd, to_complex};
use crate::rng::standard_complex_vector;

/// All scenario dimensions, powers, noise levels, and the base seed.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    /// Number of single-antenna UEs.
    pub n_ue: usize,
    /// Number of RRHs.
    pub n_rrh: usize,
    /// Antennas per RRH.
    pub m_antennas: usize,
    /// RF chains per RRH (at most `m_antennas`).
    pub l_chains: usize,
    /// Pilot length in symbols.
    pub tau: usize,
    /// Per-UE transmit power budget (linear).
    pub power_per_ue: f64,
    /// Receiver noise variance (linear); kept consistent with `snr_db`.
    pub noise_var: f64,
    /// SNR in dB; `noise_var = power_per_ue * 10^(-snr_db/10)`.
    pub snr_db: f64,
    /// Side length of the square deployment area, meters.
    pub area_side_m: f64,
    /// Antenna spacing over wavelength.
    pub d_over_lambda: f64,
    /// Angular-spread parameter of the correlation model.
    pub delta_spread: f64,
    /// Base seed for all derived RNG streams.
    pub rng_seed: u64,
}

impl SystemConfig {
    /// Configuration with the documented defaults: unit power, 10 dB SNR,
    /// 100 m square, half-wavelength spacing, spread 25.
    pub fn new(n_ue: usize, n_rrh: usize, m_antennas: usize, l_chains: usize, tau: usize) -> Self {
        let snr_db = 10.0;
        let power = 1.0;
        SystemConfig {
            n_ue,
            n_rrh,
            m_antennas,
            l_chains,
            tau,
            power_per_ue: power,
            noise_var: power * 10f64.powf(-snr_db / 10.0),
            snr_db,
            area_side_m: 100.0,
            d_over_lambda: 0.5,
            delta_spread: 25.0,
            rng_seed: 1,
        }
    }

    /// Set the SNR and recompute the noise variance from it.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self.noise_var = self.power_per_ue * 10f64.powf(-snr_db / 10.0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ue == 0 || self.n_rrh == 0 || self.m_antennas == 0 {
            return Err(Error::InvalidInput(
                "n_ue, n_rrh and m_antennas must all be >= 1".into(),
            ));
        }
        if self.l_chains == 0 || self.l_chains > self.m_antennas {
            return Err(Error::InvalidInput(format!(
                "l_chains must satisfy 1 <= L <= M (got L={}, M={})",
                self.l_chains, self.m_antennas
            )));
        }
        if self.tau == 0 {
            return Err(Error::InvalidInput("tau must be >= 1".into()));
        }
        if self.power_per_ue < 0.0 || self.noise_var < 0.0 {
            return Err(Error::InvalidInput(
                "powers and noise variances must be >= 0".into(),
            ));
        }
        if self.area_side_m < 0.0 {
            return Err(Error::InvalidInput("area_side_m must be >= 0".into()));
        }
        if self.delta_spread <= 0.0 {
            return Err(Error::InvalidInput("delta_spread must be > 0".into()));
        }
        Ok(())
    }
}

/// UE and RRH positions plus the derived distance matrix.
#[derive(Debug, Clone)]
pub struct Geometry {
    /// UE positions in meters, within the square.
    pub ue_positions: Vec<[f64; 2]>,
    /// RRH positions in meters.
    pub rrh_positions: Vec<[f64; 2]>,
    /// `distances[(i, k)]`: Euclidean distance RRH i <-> UE k, meters.
    pub distances: DMatrix<f64>,
}

/// Second-order channel statistics for one placement.
#[derive(Debug, Clone)]
pub struct ChannelStats {
    /// Pathloss matrix, N_R x N_U, entries in (0, 1].
    pub rho: DMatrix<f64>,
    /// Per-RRH receive correlation Q_i (real symmetric PSD, unit diagonal).
    pub q_corr: Vec<DMatrix<f64>>,
    /// PSD square root of Q_i.
    pub q_sqrt: Vec<DMatrix<f64>>,
    /// Per-UE block-diagonal covariance Θ_k = diag_i(rho_{i,k} Q_i).
    pub theta: Vec<DMatrix<Complex64>>,
    pub(crate) q_sqrt_c: Vec<DMatrix<Complex64>>,
}

impl ChannelStats {
    /// Derive pathloss and correlation statistics for a sampled geometry.
    pub fn from_geometry(cfg: &SystemConfig, geo: &Geometry) -> Result<Self> {
        cfg.validate()?;
        let mut rho = DMatrix::zeros(cfg.n_rrh, cfg.n_ue);
        for i in 0..cfg.n_rrh {
            for k in 0..cfg.n_ue {
                rho[(i, k)] = pathloss(geo.distances[(i, k)])?;
            }
        }
        // One correlation model per RRH; identical parameters across RRHs.
        let q = correlation_matrix(cfg.m_antennas, cfg.d_over_lambda, cfg.delta_spread)?;
        Self::from_parts(rho, vec![q; cfg.n_rrh])
    }

    /// Build statistics from explicit pathlosses and correlation matrices.
    pub fn from_parts(rho: DMatrix<f64>, q_corr: Vec<DMatrix<f64>>) -> Result<Self> {
        let n_rrh = rho.nrows();
        let n_ue = rho.ncols();
        if q_corr.len() != n_rrh {
            return Err(Error::DimensionMismatch(format!(
                "{} correlation matrices for {n_rrh} RRHs",
                q_corr.len()
            )));
        }
        let q_sqrt: Vec<DMatrix<f64>> = q_corr.iter().map(sym_sqrt_psd).collect();
        let q_sqrt_c: Vec<DMatrix<Complex64>> = q_sqrt.iter().map(to_complex).collect();
        let theta = (0..n_ue)
            .map(|k| {
                let blocks: Vec<DMatrix<Complex64>> = (0..n_rrh)
                    .map(|i| to_complex(&q_corr[i]).scale(rho[(i, k)]))
                    .collect();
                block_diag(&blocks)
            })
            .collect();
        Ok(ChannelStats {
            rho,
            q_corr,
            q_sqrt,
            theta,
            q_sqrt_c,
        })
    }

    pub fn n_rrh(&self) -> usize {
        self.rho.nrows()
    }

    pub fn n_ue(&self) -> usize {
        self.rho.ncols()
    }

    pub fn m_antennas(&self) -> usize {
        self.q_corr[0].nrows()
    }
}

/// One draw of all channel vectors.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `h[i][k]`: M-vector from UE k to RRH i.
    pub h: Vec<Vec<DVector<Complex64>>>,
}

impl ChannelRealization {
    /// RRH-major stack h_k = [h_{1,k}; ...; h_{N_R,k}] for UE k.
    pub fn stacked_for_ue(&self, k: usize) -> DVector<Complex64> {
        let m = self.h[0][k].len();
        let n_rrh = self.h.len();
        let mut out = DVector::zeros(m * n_rrh);
        for i in 0..n_rrh {
            out.rows_mut(i * m, m).copy_from(&self.h[i][k]);
        }
        out
    }

    /// UE-major stack h_{R,i} = [h_{i,1}; ...; h_{i,N_U}] for RRH i.
    pub fn stacked_for_rrh(&self, i: usize) -> DVector<Complex64> {
        let m = self.h[i][0].len();
        let n_ue = self.h[i].len();
        let mut out = DVector::zeros(m * n_ue);
        for k in 0..n_ue {
            out.rows_mut(k * m, m).copy_from(&self.h[i][k]);
        }
        out
    }
}

/// Distance-dependent pathloss 1 / (1 + (D/10)^3).
pub fn pathloss(distance_m: f64) -> Result<f64> {
    if distance_m < 0.0 || distance_m.is_nan() {
        return Err(Error::InvalidInput(format!(
            "distance must be >= 0 (got {distance_m})"
        )));
    }
    Ok(1.0 / (1.0 + (distance_m / 10.0).powi(3)))
}

/// Zero-order Bessel function of the first kind, by power series.
///
/// Σ (-1)^m (x/2)^{2m} / (m!)², truncated at relative 1e-15. Arguments in
/// this crate stay well below 20, where the series is accurate in f64.
pub fn bessel_j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for m in 1..200 {
        term *= -q / ((m * m) as f64);
        sum += term;
        if term.abs() <= 1e-15 * sum.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum
}

/// Receive correlation matrix Q(a,b) = J0(2π |a-b| sin(d/λ) / Δ).
///
/// The result is exactly symmetric with unit diagonal; it is PSD up to
/// roundoff (negative eigenvalues are clamped where the square root is
/// taken, in [`sym_sqrt_psd`]).
pub fn correlation_matrix(m: usize, d_over_lambda: f64, delta: f64) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::InvalidInput("antenna count must be >= 1".into()));
    }
    if delta <= 0.0 || delta.is_nan() {
        return Err(Error::InvalidInput(format!(
            "correlation spread must be > 0 (got {delta})"
        )));
    }
    let scale = std::f64::consts::TAU * d_over_lambda.sin() / delta;
    let lags: Vec<f64> = (0..m).map(|d| bessel_j0(scale * d as f64)).collect();
    Ok(DMatrix::from_fn(m, m, |a, b| lags[a.abs_diff(b)]))
}

/// Drop UEs and RRHs i.i.d. uniformly in the square and record distances.
pub fn sample_geometry<R: Rng>(cfg: &SystemConfig, rng: &mut R) -> Geometry {
    let side = cfg.area_side_m;
    let draw = |rng: &mut R| [rng.random::<f64>() * side, rng.random::<f64>() * side];
    let ue_positions: Vec<[f64; 2]> = (0..cfg.n_ue).map(|_| draw(rng)).collect();
    let rrh_positions: Vec<[f64; 2]> = (0..cfg.n_rrh).map(|_| draw(rng)).collect();
    let distances = DMatrix::from_fn(cfg.n_rrh, cfg.n_ue, |i, k| {
        let (r, u) = (rrh_positions[i], ue_positions[k]);
        ((r[0] - u[0]).powi(2) + (r[1] - u[1]).powi(2)).sqrt()
    });
    Geometry {
        ue_positions,
        rrh_positions,
        distances,
    }
}

/// Draw all channel vectors: h_{i,k} = sqrt(rho_{i,k}) Q_i^{1/2} h_w.
///
/// Channels are independent across both indices; draws are ordered by RRH
/// then UE, so a fixed seed yields a fixed realization.
pub fn sample_channels<R: Rng>(stats: &ChannelStats, rng: &mut R) -> ChannelRealization {
    let m = stats.m_antennas();
    let h = (0..stats.n_rrh())
        .map(|i| {
            (0..stats.n_ue())
                .map(|k| {
                    let white = standard_complex_vector(m, rng);
                    (&stats.q_sqrt_c[i] * white).scale(stats.rho[(i, k)].sqrt())
                })
                .collect()
        })
        .collect();
    ChannelRealization { h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn pathloss_known_values() {
        assert_eq!(pathloss(0.0).unwrap(), 1.0);
        assert_eq!(pathloss(10.0).unwrap(), 0.5);
        assert!((pathloss(20.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(pathloss(-1.0).is_err());
    }

    #[test]
    fn pathloss_strictly_decreasing_and_bounded() {
        let mut prev = f64::INFINITY;
        for step in 0..200 {
            let d = step as f64 * 2.5;
            let p = pathloss(d).unwrap();
            assert!(p > 0.0 && p <= 1.0);
            assert!(p < prev || (step == 0 && p == 1.0));
            prev = p;
        }
    }

    #[test]
    fn correlation_matrix_single_antenna() {
        let q = correlation_matrix(1, 0.5, 25.0).unwrap();
        assert_eq!(q.nrows(), 1);
        assert_eq!(q[(0, 0)], 1.0);
    }

    #[test]
    fn correlation_matrix_unit_diagonal_and_symmetry() {
        for m in [2usize, 5, 16, 64] {
            let q = correlation_matrix(m, 0.5, 25.0).unwrap();
            for a in 0..m {
                assert_eq!(q[(a, a)], 1.0);
                for b in 0..m {
                    assert_eq!(q[(a, b)], q[(b, a)]);
                }
            }
        }
    }

    #[test]
    fn correlation_matrix_rejects_bad_spread() {
        assert!(correlation_matrix(4, 0.5, 0.0).is_err());
        assert!(correlation_matrix(4, 0.5, -3.0).is_err());
    }

    #[test]
    fn correlation_entry_matches_series_value() {
        // Entry (0, 2) at d/λ=0.5, Δ=25: J0(2π·2·sin(0.5)/25) ≈ 0.98553.
        let q = correlation_matrix(3, 0.5, 25.0).unwrap();
        assert!((q[(0, 2)] - 0.98553).abs() < 1e-5, "got {}", q[(0, 2)]);
    }

    #[test]
    fn geometry_is_deterministic_and_in_bounds() {
        let cfg = SystemConfig::new(6, 2, 4, 2, 2);
        let g1 = sample_geometry(&cfg, &mut substream(9, 0));
        let g2 = sample_geometry(&cfg, &mut substream(9, 0));
        assert_eq!(g1.ue_positions, g2.ue_positions);
        assert_eq!(g1.rrh_positions, g2.rrh_positions);
        assert_eq!(g1.distances, g2.distances);
        for p in g1.ue_positions.iter().chain(g1.rrh_positions.iter()) {
            assert!(p[0] >= 0.0 && p[0] <= cfg.area_side_m);
            assert!(p[1] >= 0.0 && p[1] <= cfg.area_side_m);
        }
    }

    #[test]
    fn degenerate_area_collapses_distances() {
        let mut cfg = SystemConfig::new(3, 2, 2, 1, 1);
        cfg.area_side_m = 0.0;
        let g = sample_geometry(&cfg, &mut substream(5, 0));
        let stats = ChannelStats::from_geometry(&cfg, &g).unwrap();
        for i in 0..cfg.n_rrh {
            for k in 0..cfg.n_ue {
                assert_eq!(g.distances[(i, k)], 0.0);
                assert_eq!(stats.rho[(i, k)], 1.0);
            }
        }
    }

    #[test]
    fn zero_pathloss_gives_zero_channel() {
        let cfg = SystemConfig::new(2, 1, 3, 2, 2);
        let g = sample_geometry(&cfg, &mut substream(3, 0));
        let mut stats = ChannelStats::from_geometry(&cfg, &g).unwrap();
        stats.rho[(0, 1)] = 0.0;
        let ch = sample_channels(&stats, &mut substream(3, 1));
        assert_eq!(ch.h[0][1].norm(), 0.0);
        assert!(ch.h[0][0].norm() > 0.0);
    }

    #[test]
    fn channels_are_deterministic_per_seed() {
        let cfg = SystemConfig::new(4, 2, 3, 2, 2);
        let g = sample_geometry(&cfg, &mut substream(11, 0));
        let stats = ChannelStats::from_geometry(&cfg, &g).unwrap();
        let c1 = sample_channels(&stats, &mut substream(11, 1));
        let c2 = sample_channels(&stats, &mut substream(11, 1));
        for i in 0..cfg.n_rrh {
            for k in 0..cfg.n_ue {
                assert_eq!(c1.h[i][k], c2.h[i][k]);
            }
        }
    }

    #[test]
    fn q_sqrt_squares_to_q() {
        let cfg = SystemConfig::new(2, 1, 6, 2, 2);
        let g = sample_geometry(&cfg, &mut substream(1, 0));
        let stats = ChannelStats::from_geometry(&cfg, &g).unwrap();
        let q = &stats.q_corr[0];
        let s = &stats.q_sqrt[0];
        assert!(((s * s) - q).norm() <= 1e-10 * q.norm());
    }

    #[test]
    fn stacking_orders() {
        let cfg = SystemConfig::new(2, 2, 2, 1, 1);
        let g = sample_geometry(&cfg, &mut substream(2, 0));
        let stats = ChannelStats::from_geometry(&cfg, &g).unwrap();
        let ch = sample_channels(&stats, &mut substream(2, 1));
        let hk = ch.stacked_for_ue(1);
        assert_eq!(hk.rows(0, 2), ch.h[0][1].rows(0, 2));
        assert_eq!(hk.rows(2, 2), ch.h[1][1].rows(0, 2));
        let hr = ch.stacked_for_rrh(0);
        assert_eq!(hr.rows(0, 2), ch.h[0][0].rows(0, 2));
        assert_eq!(hr.rows(2, 2), ch.h[0][1].rows(0, 2));
    }
}
