//! RSMA link metrics: received power decomposition, SINRs and rates, SAA
//! rate averages, and the MMSE equalizer / weight updates used by the
//! WMMSE surrogate.

use crate::channel::CsiSampleSet;
use crate::config::ValidatedConfig;
use crate::scalar::Scalar;
use nalgebra::{Complex, DMatrix, DVector};

/// Multi-sector BD-RIS coefficients. Row `l` holds sector `l`'s diagonal;
/// column `m` is the cell-`m` vector whose squared entries sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BdRis<T> {
    pub coeffs: DMatrix<Complex<T>>,
}

impl<T: Scalar> BdRis<T> {
    pub fn new(coeffs: DMatrix<Complex<T>>) -> Self {
        Self { coeffs }
    }

    pub fn sectors(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn cells(&self) -> usize {
        self.coeffs.ncols()
    }

    /// Cell-`m` coefficient vector across sectors (length L).
    pub fn cell(&self, m: usize) -> DVector<Complex<T>> {
        DVector::from_fn(self.sectors(), |l, _| self.coeffs[(l, m)])
    }

    pub fn set_cell(&mut self, m: usize, cell: &DVector<Complex<T>>) {
        for l in 0..self.sectors() {
            self.coeffs[(l, m)] = cell[l];
        }
    }

    /// Largest deviation of any cell from the unit-norm constraint.
    pub fn cell_norm_error(&self) -> T {
        let mut worst = T::zero();
        for m in 0..self.cells() {
            let s: T = (0..self.sectors())
                .map(|l| self.coeffs[(l, m)].norm_sqr())
                .sum();
            let dev = (s - T::one()).abs();
            if dev > worst {
                worst = dev;
            }
        }
        worst
    }
}

/// Transmit precoders and the common-rate split.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution<T> {
    /// Common-stream precoder (length N).
    pub common: DVector<Complex<T>>,
    /// Private precoders, one per user.
    pub private: Vec<DVector<Complex<T>>>,
    /// Common-rate split, non-negative per user.
    pub common_split: Vec<T>,
}

impl<T: Scalar> PrecoderSolution<T> {
    pub fn total_power(&self) -> T {
        self.common.norm_squared()
            + self
                .private
                .iter()
                .map(|p| p.norm_squared())
                .sum::<T>()
    }

    /// Positive part of the power-budget violation.
    pub fn power_violation(&self, budget: T) -> T {
        (self.total_power() - budget).max(T::zero())
    }
}

/// Received-power decomposition of one user on one channel state.
#[derive(Debug, Clone, Copy)]
pub struct StreamPowers<T> {
    /// Complex gain of the common stream at the receiver.
    pub common_gain: Complex<T>,
    /// Complex gain of the user's own private stream.
    pub private_gain: Complex<T>,
    /// Total received power while decoding the common stream.
    pub common_total: T,
    /// Total power after removing the common stream.
    pub private_total: T,
    /// Interference-plus-noise seen by the common stream.
    pub common_interf: T,
    /// Interference-plus-noise seen by the private stream.
    pub private_interf: T,
}

/// Receive-side complex gain `phi_l^T Q^H p` without materializing `Q^H`.
pub fn rx_gain<T: Scalar>(
    ris: &BdRis<T>,
    sector: usize,
    q: &DMatrix<Complex<T>>,
    p: &DVector<Complex<T>>,
) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for m in 0..q.ncols() {
        acc += ris.coeffs[(sector, m)] * q.column(m).dotc(p);
    }
    acc
}

/// Power terms of user `k` (served by `sector`) on channel state `q`.
pub fn power_terms<T: Scalar>(
    ris: &BdRis<T>,
    q: &DMatrix<Complex<T>>,
    prec: &PrecoderSolution<T>,
    k: usize,
    sector: usize,
    noise: T,
) -> StreamPowers<T> {
    let common_gain = rx_gain(ris, sector, q, &prec.common);
    let own_gain = rx_gain(ris, sector, q, &prec.private[k]);
    let mut private_interf = noise;
    for (kp, p) in prec.private.iter().enumerate() {
        if kp != k {
            private_interf += rx_gain(ris, sector, q, p).norm_sqr();
        }
    }
    let private_total = own_gain.norm_sqr() + private_interf;
    let common_total = common_gain.norm_sqr() + private_total;
    StreamPowers {
        common_gain,
        private_gain: own_gain,
        common_total,
        private_total,
        common_interf: private_total,
        private_interf,
    }
}

/// SINRs and rates from a power decomposition: `(gamma_c, gamma_p, r_c, r_p)`.
pub fn sinr_and_rates<T: Scalar>(sp: &StreamPowers<T>) -> (T, T, T, T) {
    let gamma_c = sp.common_gain.norm_sqr() / sp.common_interf;
    let gamma_p = sp.private_gain.norm_sqr() / sp.private_interf;
    (
        gamma_c,
        gamma_p,
        (T::one() + gamma_c).log2(),
        (T::one() + gamma_p).log2(),
    )
}

/// MMSE-optimal scalar equalizers `(g_c, g_p)` for one channel state.
pub fn optimal_equalizers<T: Scalar>(sp: &StreamPowers<T>) -> (Complex<T>, Complex<T>) {
    let gc = sp.common_gain.conj() / Complex::new(sp.common_total, T::zero());
    let gp = sp.private_gain.conj() / Complex::new(sp.private_total, T::zero());
    (gc, gp)
}

/// MSE of a scalar equalizer `g` against signal gain `gain` and total
/// received power `total`: `|g|^2 total - 2 Re{g gain} + 1`.
pub fn mse<T: Scalar>(g: Complex<T>, gain: Complex<T>, total: T) -> T {
    g.norm_sqr() * total - T::of(2.0) * (g * gain).re + T::one()
}

/// Rate-optimal MSE weights `(lambda_c, lambda_p) = (1 + gamma)`.
pub fn optimal_weights<T: Scalar>(gamma_c: T, gamma_p: T) -> (T, T) {
    (T::one() + gamma_c, T::one() + gamma_p)
}

/// Equalizers and weights for every user and SAA sample, `[user][sample]`.
#[derive(Debug, Clone)]
pub struct EqualizerState<T> {
    pub common_eq: Vec<Vec<Complex<T>>>,
    pub private_eq: Vec<Vec<Complex<T>>>,
    pub common_weight: Vec<Vec<T>>,
    pub private_weight: Vec<Vec<T>>,
}

/// Update every equalizer and weight to its closed-form optimum for the
/// current `(ris, prec)` pair.
pub fn optimal_state<T: Scalar>(
    set: &CsiSampleSet<T>,
    ris: &BdRis<T>,
    prec: &PrecoderSolution<T>,
    cfg: &ValidatedConfig<T>,
) -> EqualizerState<T> {
    let users = cfg.users;
    let mut state = EqualizerState {
        common_eq: vec![Vec::with_capacity(cfg.saa_samples); users],
        private_eq: vec![Vec::with_capacity(cfg.saa_samples); users],
        common_weight: vec![Vec::with_capacity(cfg.saa_samples); users],
        private_weight: vec![Vec::with_capacity(cfg.saa_samples); users],
    };
    for k in 0..users {
        let sector = cfg.sector_of[k];
        for q in &set.samples[k] {
            let sp = power_terms(ris, q, prec, k, sector, cfg.noise[k]);
            let (gc, gp) = optimal_equalizers(&sp);
            let (gamma_c, gamma_p, _, _) = sinr_and_rates(&sp);
            let (lc, lp) = optimal_weights(gamma_c, gamma_p);
            state.common_eq[k].push(gc);
            state.private_eq[k].push(gp);
            state.common_weight[k].push(lc);
            state.private_weight[k].push(lp);
        }
    }
    state
}

/// Instantaneous `(r_c, r_p)` per user on an arbitrary channel list.
pub fn rates_on<T: Scalar>(
    channels: &[DMatrix<Complex<T>>],
    prec: &PrecoderSolution<T>,
    ris: &BdRis<T>,
    cfg: &ValidatedConfig<T>,
) -> Vec<(T, T)> {
    (0..cfg.users)
        .map(|k| {
            let sp = power_terms(ris, &channels[k], prec, k, cfg.sector_of[k], cfg.noise[k]);
            let (_, _, rc, rp) = sinr_and_rates(&sp);
            (rc, rp)
        })
        .collect()
}

/// SAA average rates `(common, private)` per user over the sample set.
pub fn saa_average_rates<T: Scalar>(
    set: &CsiSampleSet<T>,
    prec: &PrecoderSolution<T>,
    ris: &BdRis<T>,
    cfg: &ValidatedConfig<T>,
) -> (Vec<T>, Vec<T>) {
    let a = T::of(cfg.saa_samples as f64);
    let mut common = vec![T::zero(); cfg.users];
    let mut private = vec![T::zero(); cfg.users];
    for k in 0..cfg.users {
        let sector = cfg.sector_of[k];
        for q in &set.samples[k] {
            let sp = power_terms(ris, q, prec, k, sector, cfg.noise[k]);
            let (_, _, rc, rp) = sinr_and_rates(&sp);
            common[k] += rc;
            private[k] += rp;
        }
        common[k] /= a;
        private[k] /= a;
    }
    (common, private)
}

/// Design-time SAA objective `min_k R_c,k + sum_k R_p,k`.
pub fn saa_objective<T: Scalar>(
    set: &CsiSampleSet<T>,
    prec: &PrecoderSolution<T>,
    ris: &BdRis<T>,
    cfg: &ValidatedConfig<T>,
) -> T {
    let (common, private) = saa_average_rates(set, prec, ris, cfg);
    let min_common = common
        .iter()
        .copied()
        .fold(T::of(f64::INFINITY), |a, b| a.min(b));
    min_common + private.iter().copied().sum::<T>()
}

/// Rates achieved by a finished design: SAA averages used during the
/// design plus instantaneous rates on the perfect channel.
#[derive(Debug, Clone)]
pub struct RateReport<T> {
    /// SAA average common rates on the design sample set.
    pub saa_common: Vec<T>,
    /// SAA average private rates on the design sample set.
    pub saa_private: Vec<T>,
    /// Common-rate split after evaluation-time capping.
    pub common_split: Vec<T>,
    /// Per-user totals `C_k + R_p,k` on the perfect channel.
    pub per_user_total: Vec<T>,
    /// Sum of the per-user totals.
    pub sum_rate: T,
    /// Instantaneous common rates on the perfect channel.
    pub inst_common: Vec<T>,
    /// Instantaneous private rates on the perfect channel.
    pub inst_private: Vec<T>,
}
