//! Precoder / common-rate-split block: assembles the sample-averaged
//! quadratic data of the convex subproblem and solves it with the
//! interior-point solver in [`crate::socp`].
//!
//! With equalizers `g`, weights `lambda`, and the BD-RIS fixed, the
//! subproblem in the precoders `p_c, p_p,k` and the negated split
//! `gv = -c` is
//!
//! ```text
//! minimize    sum_k ( gv_k + sum_k' p_p,k'^H Psi_p,k p_p,k' - 2 Re{psi_p,k^H p_p,k} )
//! subject to  |p_c|^2 + sum_k |p_p,k|^2 <= P
//!             quad_c,k(p) - 2 Re{psi_c,k^H p_c} <= sum_k' gv_k' + xi_c,k     (common rate)
//!             gv <= 0
//!             quad_p,k(p) - 2 Re{psi_p,k^H p_p,k} + gv_k <= xi_p,k - R_th,k  (QoS)
//! ```
//!
//! In SDMA mode the common precoder and the split variables are dropped
//! together with the common-rate and sign constraints.

use crate::channel::CsiSampleSet;
use crate::config::{Scheme, ValidatedConfig};
use crate::error::Result;
use crate::metrics::{EqualizerState, PrecoderSolution};
use crate::scalar::Scalar;
use crate::socp::{self, IpmParams, Qcqp, QuadConstraint};
use nalgebra::{Complex, DMatrix, DVector};

/// Sample-averaged data of the precoder subproblem.
#[derive(Debug, Clone)]
pub struct SocpData<T> {
    /// psi_c,k: averaged common-stream linear terms (length N each).
    pub common_lin: Vec<DVector<Complex<T>>>,
    /// psi_p,k: averaged private-stream linear terms.
    pub private_lin: Vec<DVector<Complex<T>>>,
    /// Psi_c,k: averaged common-stream Hermitian PSD quadratic terms (N x N).
    pub common_quad: Vec<DMatrix<Complex<T>>>,
    /// Psi_p,k: averaged private-stream quadratic terms.
    pub private_quad: Vec<DMatrix<Complex<T>>>,
    /// xi_c,k: averaged common-stream offsets.
    pub common_offset: Vec<T>,
    /// xi_p,k: averaged private-stream offsets.
    pub private_offset: Vec<T>,
    /// Transmit power budget (watts).
    pub power_budget: T,
    /// QoS thresholds in effect for this solve.
    pub rate_threshold: Vec<T>,
    pub scheme: Scheme,
}

/// Build [`SocpData`] from the current sample set, BD-RIS, and WMMSE state.
pub fn assemble_socp_data<T: Scalar>(
    set: &CsiSampleSet<T>,
    ris: &crate::metrics::BdRis<T>,
    state: &EqualizerState<T>,
    cfg: &ValidatedConfig<T>,
    rate_threshold: &[T],
    scheme: Scheme,
) -> SocpData<T> {
    let n = cfg.tx_antennas;
    let inv_a = T::one() / T::of(cfg.saa_samples as f64);

    let mut data = SocpData {
        common_lin: Vec::with_capacity(cfg.users),
        private_lin: Vec::with_capacity(cfg.users),
        common_quad: Vec::with_capacity(cfg.users),
        private_quad: Vec::with_capacity(cfg.users),
        common_offset: Vec::with_capacity(cfg.users),
        private_offset: Vec::with_capacity(cfg.users),
        power_budget: cfg.power,
        rate_threshold: rate_threshold.to_vec(),
        scheme,
    };

    for k in 0..cfg.users {
        let sector = cfg.sector_of[k];
        let sigma2 = cfg.noise[k];
        let mut psi_c = DVector::zeros(n);
        let mut psi_p = DVector::zeros(n);
        let mut quad_c = DMatrix::zeros(n, n);
        let mut quad_p = DMatrix::zeros(n, n);
        let mut xi_c = T::zero();
        let mut xi_p = T::zero();
        for (a, q) in set.samples[k].iter().enumerate() {
            // v = Q_k^a conj(phi_l), an N-vector
            let mut v: DVector<Complex<T>> = DVector::zeros(n);
            for m in 0..cfg.cells {
                let phi = ris.coeffs[(sector, m)].conj();
                for r in 0..n {
                    v[r] += q[(r, m)] * phi;
                }
            }
            let gc = state.common_eq[k][a];
            let gp = state.private_eq[k][a];
            let lc = state.common_weight[k][a];
            let lp = state.private_weight[k][a];
            let psi_c_a = &v * (gc.conj() * Complex::new(lc, T::zero()));
            let psi_p_a = &v * (gp.conj() * Complex::new(lp, T::zero()));
            // Psi^a = psi^a (psi^a)^H / lambda
            add_scaled_outer(&mut quad_c, &psi_c_a, T::one() / lc);
            add_scaled_outer(&mut quad_p, &psi_p_a, T::one() / lp);
            psi_c += psi_c_a;
            psi_p += psi_p_a;
            xi_c += lc.log2() - lc * gc.norm_sqr() * sigma2 - lc + T::one();
            xi_p += lp.log2() - lp * gp.norm_sqr() * sigma2 - lp + T::one();
        }
        data.common_lin.push(psi_c * Complex::new(inv_a, T::zero()));
        data.private_lin.push(psi_p * Complex::new(inv_a, T::zero()));
        data.common_quad.push(quad_c * Complex::new(inv_a, T::zero()));
        data.private_quad.push(quad_p * Complex::new(inv_a, T::zero()));
        data.common_offset.push(xi_c * inv_a);
        data.private_offset.push(xi_p * inv_a);
    }
    data
}

fn add_scaled_outer<T: Scalar>(acc: &mut DMatrix<Complex<T>>, v: &DVector<Complex<T>>, s: T) {
    let n = v.len();
    let sc = Complex::new(s, T::zero());
    for c in 0..n {
        let vc = v[c].conj() * sc;
        for r in 0..n {
            acc[(r, c)] += v[r] * vc;
        }
    }
}

/// Objective of the subproblem at a candidate solution (`gv = -c`).
pub fn objective<T: Scalar>(data: &SocpData<T>, prec: &PrecoderSolution<T>) -> T {
    let users = data.private_quad.len();
    let mut total = T::zero();
    for k in 0..users {
        total -= prec.common_split[k];
        for p in &prec.private {
            total += hermitian_form(&data.private_quad[k], p);
        }
        total -= T::of(2.0) * data.private_lin[k].dotc(&prec.private[k]).re;
    }
    total
}

/// Constraint values at a candidate solution; entries `<= 0` mean satisfied.
#[derive(Debug, Clone)]
pub struct ConstraintValues<T> {
    /// Power usage minus budget.
    pub power: T,
    /// Common-rate constraints (RSMA only; empty otherwise).
    pub common_rate: Vec<T>,
    /// QoS constraints.
    pub qos: Vec<T>,
    /// `-c` per user (positive entries mean a negative split).
    pub split_negativity: Vec<T>,
}

impl<T: Scalar> ConstraintValues<T> {
    pub fn worst(&self) -> T {
        let mut w = self.power;
        for v in self
            .common_rate
            .iter()
            .chain(self.qos.iter())
            .chain(self.split_negativity.iter())
        {
            w = w.max(*v);
        }
        w
    }
}

/// Evaluate all subproblem constraints at `prec` on the original data.
pub fn constraint_values<T: Scalar>(
    data: &SocpData<T>,
    prec: &PrecoderSolution<T>,
) -> ConstraintValues<T> {
    let users = data.private_quad.len();
    let two = T::of(2.0);
    let power = prec.total_power() - data.power_budget;
    let sum_split: T = prec.common_split.iter().copied().sum();
    let mut common_rate = Vec::new();
    if data.scheme == Scheme::Rsma {
        for k in 0..users {
            let mut v = hermitian_form(&data.common_quad[k], &prec.common);
            for p in &prec.private {
                v += hermitian_form(&data.common_quad[k], p);
            }
            v -= two * data.common_lin[k].dotc(&prec.common).re;
            // quad - 2Re <= sum gv + xi_c = -sum_split + xi_c
            common_rate.push(v + sum_split - data.common_offset[k]);
        }
    }
    let mut qos = Vec::new();
    for k in 0..users {
        let mut v = T::zero();
        for p in &prec.private {
            v += hermitian_form(&data.private_quad[k], p);
        }
        v -= two * data.private_lin[k].dotc(&prec.private[k]).re;
        v -= prec.common_split[k];
        qos.push(v - data.private_offset[k] + data.rate_threshold[k]);
    }
    let split_negativity = prec.common_split.iter().map(|&c| -c).collect();
    ConstraintValues {
        power,
        common_rate,
        qos,
        split_negativity,
    }
}

pub(crate) fn hermitian_form<T: Scalar>(h: &DMatrix<Complex<T>>, p: &DVector<Complex<T>>) -> T {
    // p^H H p for Hermitian H; the imaginary part cancels.
    let hp = h * p;
    p.dotc(&hp).re
}

/// Solver outcome metadata for trace logging.
#[derive(Debug, Clone, Copy)]
pub struct PrecoderReport<T> {
    pub objective: T,
    pub duality_gap: T,
    pub kkt_residual: T,
    pub newton_steps: usize,
}

/// Solve the subproblem with default interior-point settings.
pub fn solve_precoder<T: Scalar>(
    data: &SocpData<T>,
) -> Result<(PrecoderSolution<T>, PrecoderReport<T>)> {
    solve_precoder_with(data, &IpmParams::default())
}

/// Solve the subproblem. The problem is rescaled so precoders live on the
/// unit ball and data magnitudes stay O(1); the returned solution is
/// expressed in original units and satisfies the power budget and split
/// non-negativity exactly (barrier iterates stay strictly interior).
pub fn solve_precoder_with<T: Scalar>(
    data: &SocpData<T>,
    params: &IpmParams<T>,
) -> Result<(PrecoderSolution<T>, PrecoderReport<T>)> {
    let users = data.private_quad.len();
    let n = data.private_lin.first().map(|v| v.len()).unwrap_or(0);
    let rsma = data.scheme == Scheme::Rsma;

    // Presolve against dead streams. Sum-rate maximization legitimately
    // turns streams off; once a stream's equalizer hits zero its surrogate
    // data vanishes and the matching constraints degenerate to `0 <= 0`,
    // pinching the feasible interior shut for the barrier.
    //
    // 1. If the largest split any user could support is negligible, drop
    //    the common block entirely (costs at most `window` bits).
    // 2. A QoS row whose whole dynamic range is negligible is vacuous and
    //    is skipped; with a real threshold it stays and drives the retry
    //    policy instead.
    let sqrt_p = data.power_budget.sqrt();
    let window_tol = T::of(1e-6).max(T::eps() * T::of(1e3));
    let dead_tol = T::of(1e-7).max(T::eps() * T::of(1e2));
    // Feasibility tolerance on the rate constraints: streams being turned
    // off leave corridors the barrier cannot walk at the type's precision
    // (invisible at f64, ~1e-4 bits at f32).
    let feastol = T::eps() * T::of(1e3);
    if rsma {
        let mut window = T::of(f64::INFINITY);
        for k in 0..users {
            let reach =
                data.common_offset[k] + T::of(2.0) * sqrt_p * data.common_lin[k].norm();
            window = window.min(reach);
        }
        if window <= window_tol {
            let reduced = SocpData {
                scheme: Scheme::Sdma,
                ..data.clone()
            };
            return solve_precoder_with(&reduced, params);
        }
    }
    let qos_alive: Vec<bool> = (0..users)
        .map(|k| {
            let range = data.power_budget * data.private_quad[k].norm()
                + T::of(2.0) * sqrt_p * data.private_lin[k].norm()
                + data.private_offset[k].abs()
                + data.rate_threshold[k];
            range > dead_tol
        })
        .collect();
    let blocks = if rsma { users + 1 } else { users };
    let dim = 2 * n * blocks + if rsma { users } else { 0 };
    let scale = data.power_budget.sqrt();

    // Scaled data: p = scale * p_tilde, so quadratics gain P and linears
    // gain sqrt(P); the power ball becomes the unit ball.
    let p_budget = data.power_budget;
    let pq: Vec<DMatrix<T>> = data
        .private_quad
        .iter()
        .map(|h| embed_hermitian(h) * p_budget)
        .collect();
    let cq: Vec<DMatrix<T>> = data
        .common_quad
        .iter()
        .map(|h| embed_hermitian(h) * p_budget)
        .collect();
    let pl: Vec<DVector<T>> = data
        .private_lin
        .iter()
        .map(|v| embed_vector(v) * scale)
        .collect();
    let cl: Vec<DVector<T>> = data
        .common_lin
        .iter()
        .map(|v| embed_vector(v) * scale)
        .collect();

    let block_at = |b: usize| 2 * n * b;
    let split_at = 2 * n * blocks;
    let two = T::of(2.0);

    // Objective magnitude normalization (uniform, so the argmin is unchanged).
    let mut obj_scale = T::one();
    for k in 0..users {
        obj_scale = obj_scale.max(pq[k].amax()).max(two * pl[k].amax());
    }
    let inv_obj = T::one() / obj_scale;

    let mut quad_obj = DMatrix::zeros(dim, dim);
    let mut sum_pq = DMatrix::zeros(2 * n, 2 * n);
    for q in &pq {
        sum_pq += q;
    }
    sum_pq *= two * inv_obj;
    for b in 0..users {
        let off = block_at(if rsma { b + 1 } else { b });
        quad_obj
            .view_mut((off, off), (2 * n, 2 * n))
            .copy_from(&sum_pq);
    }
    let mut lin_obj = DVector::zeros(dim);
    for k in 0..users {
        let off = block_at(if rsma { k + 1 } else { k });
        lin_obj
            .rows_mut(off, 2 * n)
            .copy_from(&(&pl[k] * (-two * inv_obj)));
    }
    if rsma {
        for k in 0..users {
            lin_obj[split_at + k] = inv_obj;
        }
    }

    let mut constraints = Vec::new();
    // Power ball: |x_prec|^2 <= 1.
    {
        let mut a = DMatrix::zeros(dim, dim);
        for i in 0..2 * n * blocks {
            a[(i, i)] = two;
        }
        constraints.push(QuadConstraint {
            quad: Some(a),
            lin: DVector::zeros(dim),
            offset: -T::one(),
        });
    }
    if rsma {
        // Split sign: gv_k <= 0.
        for k in 0..users {
            let mut lin = DVector::zeros(dim);
            lin[split_at + k] = T::one();
            constraints.push(QuadConstraint::affine(lin, T::zero()));
        }
        // Common rate.
        for k in 0..users {
            let row_scale = T::one()
                .max(cq[k].amax())
                .max(two * cl[k].amax())
                .max(data.common_offset[k].abs());
            let inv = T::one() / row_scale;
            let mut a = DMatrix::zeros(dim, dim);
            for b in 0..blocks {
                let off = block_at(b);
                a.view_mut((off, off), (2 * n, 2 * n))
                    .copy_from(&(&cq[k] * (two * inv)));
            }
            let mut lin = DVector::zeros(dim);
            lin.rows_mut(0, 2 * n).copy_from(&(&cl[k] * (-two * inv)));
            for kp in 0..users {
                lin[split_at + kp] = -inv;
            }
            constraints.push(QuadConstraint {
                quad: Some(a),
                lin,
                offset: (-data.common_offset[k] - feastol) * inv,
            });
        }
    }
    // QoS.
    for k in 0..users {
        if !qos_alive[k] {
            continue;
        }
        let row_scale = T::one()
            .max(pq[k].amax())
            .max(two * pl[k].amax())
            .max((data.private_offset[k] - data.rate_threshold[k]).abs());
        let inv = T::one() / row_scale;
        let mut a = DMatrix::zeros(dim, dim);
        for b in 0..users {
            let off = block_at(if rsma { b + 1 } else { b });
            a.view_mut((off, off), (2 * n, 2 * n))
                .copy_from(&(&pq[k] * (two * inv)));
        }
        let mut lin = DVector::zeros(dim);
        let own = block_at(if rsma { k + 1 } else { k });
        lin.rows_mut(own, 2 * n).copy_from(&(&pl[k] * (-two * inv)));
        if rsma {
            lin[split_at + k] = inv;
        }
        constraints.push(QuadConstraint {
            quad: Some(a),
            lin,
            offset: (data.rate_threshold[k] - data.private_offset[k] - feastol) * inv,
        });
    }

    let problem = Qcqp {
        quad_obj,
        lin_obj,
        constraints,
    };
    let (x, report) = socp::solve(&problem, params)?;

    let take_block = |b: usize| -> DVector<Complex<T>> {
        let off = block_at(b);
        DVector::from_fn(n, |i, _| {
            Complex::new(x[off + i], x[off + n + i]) * Complex::new(scale, T::zero())
        })
    };
    let common = if rsma {
        take_block(0)
    } else {
        DVector::zeros(n)
    };
    let private: Vec<_> = (0..users)
        .map(|k| take_block(if rsma { k + 1 } else { k }))
        .collect();
    let common_split = if rsma {
        (0..users)
            .map(|k| (-x[split_at + k]).max(T::zero()))
            .collect()
    } else {
        vec![T::zero(); users]
    };
    let solution = PrecoderSolution {
        common,
        private,
        common_split,
    };
    let obj = objective(data, &solution);
    Ok((
        solution,
        PrecoderReport {
            objective: obj,
            duality_gap: report.duality_gap * obj_scale,
            kkt_residual: report.kkt_residual * obj_scale,
            newton_steps: report.newton_steps,
        },
    ))
}

/// Real embedding of a Hermitian matrix: `[[Re, -Im], [Im, Re]]`, which
/// represents `p^H H p` as a real quadratic form over `[Re p; Im p]`.
fn embed_hermitian<T: Scalar>(h: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            out[(r, c)] = z.re;
            out[(r, c + n)] = -z.im;
            out[(r + n, c)] = z.im;
            out[(r + n, c + n)] = z.re;
        }
    }
    out
}

/// Real embedding of a complex vector so `Re{v^H p} = embed(v) . [Re p; Im p]`.
fn embed_vector<T: Scalar>(v: &DVector<Complex<T>>) -> DVector<T> {
    let n = v.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v[i].re } else { v[i - n].im })
}
