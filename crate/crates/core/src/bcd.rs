//! Outer block-coordinate-descent loop: alternating weight/equalizer,
//! BD-RIS, and precoder updates with convergence tracking, plus the SDMA
//! baseline mode and the perfect-channel evaluation step.

use crate::bdris;
use crate::channel::CsiSampleSet;
use crate::config::{Scheme, ValidatedConfig};
use crate::error::{Error, Result};
use crate::metrics::{self, BdRis, PrecoderSolution, RateReport};
use crate::precoder::{self, SocpData};
use crate::scalar::Scalar;
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use std::time::{Duration, Instant};

/// Outer-loop parameters for one solve.
#[derive(Debug, Clone, Copy)]
pub struct BcdParams<T> {
    /// Relative objective-change exit threshold.
    pub rel_tol: T,
    /// Outer iteration cap.
    pub max_iters: usize,
    pub scheme: Scheme,
    /// QoS relaxation retries before aborting the realization.
    pub qos_max_retries: usize,
    /// Multiplicative threshold shrink per retry, in (0,1).
    pub qos_shrink: T,
}

impl<T: Scalar> BcdParams<T> {
    pub fn from_config(cfg: &ValidatedConfig<T>, scheme: Scheme) -> Self {
        Self {
            rel_tol: cfg.bcd.rel_tol,
            max_iters: cfg.bcd.max_iters,
            scheme,
            qos_max_retries: cfg.bcd.qos_max_retries,
            qos_shrink: cfg.bcd.qos_shrink,
        }
    }
}

/// Per-iteration record of the solve trace.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord<T> {
    /// SAA objective `min_k R_c,k + sum_k R_p,k` after the iteration.
    pub objective: T,
    /// Worst cell-norm deviation of the BD-RIS iterate.
    pub cell_norm_error: T,
    /// Positive part of the power-budget violation.
    pub power_violation: T,
    /// Subproblem objective reached by the precoder block.
    pub socp_objective: T,
    /// Subproblem objective of the previous precoder on the current data,
    /// when that warm point is feasible for the current subproblem.
    pub warm_objective: Option<T>,
}

/// Convergence metadata of one solve.
#[derive(Debug, Clone)]
pub struct SolveTrace<T> {
    pub iterations: Vec<IterationRecord<T>>,
    pub converged: bool,
    pub qos_retries: usize,
    pub wall: Duration,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn outer_iterations(&self) -> usize {
        self.iterations.len()
    }

    pub fn final_objective(&self) -> Option<T> {
        self.iterations.last().map(|r| r.objective)
    }
}

/// Initialize the BD-RIS with uniform-magnitude random phases and the
/// precoders as power-scaled sums of sample channels through the surface;
/// the common stream takes 70% of the budget (none in SDMA mode).
pub fn initialize<T: Scalar, R: Rng + ?Sized>(
    set: &CsiSampleSet<T>,
    cfg: &ValidatedConfig<T>,
    scheme: Scheme,
    rng: &mut R,
) -> (BdRis<T>, PrecoderSolution<T>) {
    let inv_sqrt_l = T::one() / T::of(cfg.sectors as f64).sqrt();
    let coeffs = DMatrix::from_fn(cfg.sectors, cfg.cells, |_, _| {
        let phase = crate::rng::uniform(rng, T::zero(), T::two_pi());
        Complex::new(inv_sqrt_l * phase.cos(), inv_sqrt_l * phase.sin())
    });
    let ris = BdRis::new(coeffs);

    let n = cfg.tx_antennas;
    // per-user accumulated response sum_a Q_k^a conj(phi_l)
    let mut per_user: Vec<DVector<Complex<T>>> = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let sector = cfg.sector_of[k];
        let mut acc: DVector<Complex<T>> = DVector::zeros(n);
        for q in &set.samples[k] {
            for m in 0..cfg.cells {
                let phi = ris.coeffs[(sector, m)].conj();
                for r in 0..n {
                    acc[r] += q[(r, m)] * phi;
                }
            }
        }
        per_user.push(acc);
    }

    let (common_power, private_power) = match scheme {
        Scheme::Rsma => (
            T::of(0.7) * cfg.power,
            T::of(0.3) * cfg.power / T::of(cfg.users as f64),
        ),
        Scheme::Sdma => (T::zero(), cfg.power / T::of(cfg.users as f64)),
    };

    let common = match scheme {
        Scheme::Rsma => {
            let mut sum: DVector<Complex<T>> = DVector::zeros(n);
            for acc in &per_user {
                sum += acc;
            }
            scale_to_power(sum, common_power)
        }
        Scheme::Sdma => DVector::zeros(n),
    };
    let private = per_user
        .into_iter()
        .map(|acc| scale_to_power(acc, private_power))
        .collect();

    (
        ris,
        PrecoderSolution {
            common,
            private,
            common_split: vec![T::zero(); cfg.users],
        },
    )
}

fn scale_to_power<T: Scalar>(v: DVector<Complex<T>>, power: T) -> DVector<Complex<T>> {
    let norm = v.norm();
    if norm == T::zero() || power == T::zero() {
        return DVector::zeros(v.len());
    }
    v * Complex::new(power.sqrt() / norm, T::zero())
}

/// Run the block-coordinate-descent design on one CSI sample set.
///
/// Each iteration sets weights and equalizers to their closed forms,
/// redesigns the BD-RIS by cell sweeps, and re-solves the precoder
/// subproblem; the loop exits on the relative change of the SAA objective.
/// Infeasible QoS sets are retried with geometrically shrunk thresholds
/// before giving up with [`Error::QosInfeasible`].
pub fn solve<T: Scalar, R: Rng + ?Sized>(
    set: &CsiSampleSet<T>,
    cfg: &ValidatedConfig<T>,
    params: &BcdParams<T>,
    rng: &mut R,
) -> Result<(BdRis<T>, PrecoderSolution<T>, SolveTrace<T>)> {
    let start = Instant::now();
    let (mut ris, mut prec) = initialize(set, cfg, params.scheme, rng);
    let mut thresholds = cfg.rate_threshold.clone();
    let mut qos_retries = 0usize;
    let mut trace = SolveTrace {
        iterations: Vec::new(),
        converged: false,
        qos_retries: 0,
        wall: Duration::default(),
    };

    let mut objective_prev = metrics::saa_objective(set, &prec, &ris, cfg);
    // Stale weights can stall the measured objective for a single iteration
    // while the surrogate still improves, so the relative-change criterion
    // must hold on two consecutive iterations before the loop exits.
    let mut small_streak = 0usize;
    for _ in 1..=params.max_iters {
        let state = metrics::optimal_state(set, &ris, &prec, cfg);
        let pq = bdris::assemble_phase_quadratics(set, &prec, &state, cfg);
        let (next_ris, _sweep_info) = bdris::sweep_cells(&pq, &ris, &cfg.rcg, &cfg.sweep);
        ris = next_ris;

        let solved = loop {
            let data: SocpData<T> =
                precoder::assemble_socp_data(set, &ris, &state, cfg, &thresholds, params.scheme);
            let warm_objective = warm_reference(&data, &prec);
            match precoder::solve_precoder(&data) {
                Ok((solution, report)) => break Ok((solution, report, warm_objective)),
                Err(Error::Infeasible) => {
                    if qos_retries >= params.qos_max_retries {
                        break Err(Error::QosInfeasible {
                            retries: qos_retries,
                        });
                    }
                    qos_retries += 1;
                    for r in &mut thresholds {
                        *r *= params.qos_shrink;
                    }
                }
                Err(other) => break Err(other),
            }
        };
        let (solution, report, warm_objective) = match solved {
            Ok(v) => v,
            Err(e) => {
                trace.qos_retries = qos_retries;
                trace.wall = start.elapsed();
                return Err(e);
            }
        };
        prec = solution;

        let objective = metrics::saa_objective(set, &prec, &ris, cfg);
        trace.iterations.push(IterationRecord {
            objective,
            cell_norm_error: ris.cell_norm_error(),
            power_violation: prec.power_violation(cfg.power),
            socp_objective: report.objective,
            warm_objective,
        });

        let denom = objective_prev.abs().max(T::of(1e-30));
        if (objective - objective_prev).abs() / denom <= params.rel_tol {
            small_streak += 1;
            if small_streak >= 2 {
                trace.converged = true;
                break;
            }
        } else {
            small_streak = 0;
        }
        objective_prev = objective;
    }
    trace.qos_retries = qos_retries;
    trace.wall = start.elapsed();
    Ok((ris, prec, trace))
}

/// Objective of the current subproblem at the previous precoder, when that
/// point is still feasible (stale equalizers can push it outside).
fn warm_reference<T: Scalar>(data: &SocpData<T>, prev: &PrecoderSolution<T>) -> Option<T> {
    let values = precoder::constraint_values(data, prev);
    if values.worst() <= T::of(1e-7) {
        Some(precoder::objective(data, prev))
    } else {
        None
    }
}

/// Evaluate a finished design on the held-out perfect channels.
///
/// The designed common split can exceed the realized common rate under CSI
/// error, so the split is rescaled proportionally whenever its sum exceeds
/// `min_k R_c,k` on the perfect channel; SDMA reports the private sum.
pub fn evaluate<T: Scalar>(
    ris: &BdRis<T>,
    prec: &PrecoderSolution<T>,
    perfect: &[DMatrix<Complex<T>>],
    cfg: &ValidatedConfig<T>,
) -> RateReport<T> {
    let inst = metrics::rates_on(perfect, prec, ris, cfg);
    let inst_common: Vec<T> = inst.iter().map(|r| r.0).collect();
    let inst_private: Vec<T> = inst.iter().map(|r| r.1).collect();
    let min_common = inst_common
        .iter()
        .copied()
        .fold(T::of(f64::INFINITY), |a, b| a.min(b));
    let sum_split: T = prec.common_split.iter().copied().sum();
    let rescale = if sum_split > min_common && sum_split > T::zero() {
        min_common.max(T::zero()) / sum_split
    } else {
        T::one()
    };
    let common_split: Vec<T> = prec.common_split.iter().map(|&c| c * rescale).collect();
    let per_user_total: Vec<T> = (0..cfg.users)
        .map(|k| common_split[k] + inst_private[k])
        .collect();
    let sum_rate = per_user_total.iter().copied().sum();
    RateReport {
        saa_common: Vec::new(),
        saa_private: Vec::new(),
        common_split,
        per_user_total,
        sum_rate,
        inst_common,
        inst_private,
    }
}

/// [`evaluate`] plus the SAA averages on the design sample set.
pub fn evaluate_with_design_rates<T: Scalar>(
    ris: &BdRis<T>,
    prec: &PrecoderSolution<T>,
    set: &CsiSampleSet<T>,
    cfg: &ValidatedConfig<T>,
) -> RateReport<T> {
    let mut report = evaluate(ris, prec, &set.perfect, cfg);
    let (saa_common, saa_private) = metrics::saa_average_rates(set, prec, ris, cfg);
    report.saa_common = saa_common;
    report.saa_private = saa_private;
    report
}
