//! Multi-sector BD-RIS design block.
//!
//! For fixed equalizers, weights, and precoders, the surface subproblem
//! minimizes
//!
//! ```text
//! max_k ( phi_l^H X_c,k phi_l - 2 Re{phi_l^H x_c,k} - xi_c,k )
//!   + sum_l ( phi_l^H Xbar_p,l phi_l - 2 Re{phi_l^H xbar_p,l} )
//! ```
//!
//! subject to unit norm for every per-cell coefficient vector. Cells are
//! designed one at a time: restricting to cell `m` gives scalar quadratics
//! per user / sector, the non-smooth max is replaced by its LogSumExp
//! upper bound with smoothing `epsilon`, and the resulting smooth problem
//! on the complex unit sphere is solved by a Riemannian conjugate-gradient
//! iteration with Polak-Ribiere directions, tangent-space projections, and
//! a normalization retraction.

use crate::channel::CsiSampleSet;
use crate::config::{RcgParams, SweepParams, ValidatedConfig};
use crate::error::{Error, Result};
use crate::metrics::{BdRis, EqualizerState, PrecoderSolution};
use crate::scalar::Scalar;
use nalgebra::{Complex, DMatrix, DVector};

/// Sample-averaged quadratics of the surface subproblem.
#[derive(Debug, Clone)]
pub struct PhaseQuadratics<T> {
    /// X_c,k: common-stream quadratic per user (cells x cells).
    pub common_quad: Vec<DMatrix<Complex<T>>>,
    /// x_c,k: common-stream linear term per user.
    pub common_lin: Vec<DVector<Complex<T>>>,
    /// xi_c,k: common-stream offsets per user.
    pub common_offset: Vec<T>,
    /// Xbar_p,l: private quadratic summed over each sector's users.
    pub private_quad: Vec<DMatrix<Complex<T>>>,
    /// xbar_p,l: private linear term per sector.
    pub private_lin: Vec<DVector<Complex<T>>>,
    /// Sector serving each user.
    pub sector_of: Vec<usize>,
}

/// Restriction of the surface objective to one cell: per-user and
/// per-sector scalar quadratics in the cell coefficients.
#[derive(Debug, Clone)]
pub struct CellAux<T> {
    /// nu_c,k,m: curvature of each user's common term.
    pub common_curv: Vec<T>,
    /// chi_c,k,m: linear coefficient of each user's common term.
    pub common_lin: Vec<Complex<T>>,
    /// xi_k,m: offset of each user's common term.
    pub common_offset: Vec<T>,
    /// nu_p,l,m: curvature of each sector's private term.
    pub private_curv: Vec<T>,
    /// chi_p,l,m: linear coefficient of each sector's private term.
    pub private_lin: Vec<Complex<T>>,
    /// Sector serving each user.
    pub sector_of: Vec<usize>,
}

/// Assemble the surface quadratics from the current iterates.
pub fn assemble_phase_quadratics<T: Scalar>(
    set: &CsiSampleSet<T>,
    prec: &PrecoderSolution<T>,
    state: &EqualizerState<T>,
    cfg: &ValidatedConfig<T>,
) -> PhaseQuadratics<T> {
    let m = cfg.cells;
    let users = cfg.users;
    let inv_a = T::one() / T::of(cfg.saa_samples as f64);

    let mut common_quad = vec![DMatrix::zeros(m, m); users];
    let mut common_lin = vec![DVector::zeros(m); users];
    let mut common_offset = vec![T::zero(); users];
    let mut private_quad_user = vec![DMatrix::zeros(m, m); users];
    let mut private_lin_user = vec![DVector::zeros(m); users];

    for k in 0..users {
        let sigma2 = cfg.noise[k];
        for (a, q) in set.samples[k].iter().enumerate() {
            // v_x = Q^T conj(p): length-M response of precoder p through Q.
            let v_common = response(q, &prec.common);
            let v_private: Vec<_> = prec.private.iter().map(|p| response(q, p)).collect();
            // interference outer-product sum shared by both streams
            let mut outer_sum = DMatrix::zeros(m, m);
            for v in &v_private {
                add_outer(&mut outer_sum, v, T::one());
            }
            let gc = state.common_eq[k][a];
            let gp = state.private_eq[k][a];
            let lc = state.common_weight[k][a];
            let lp = state.private_weight[k][a];

            let wc = lc * gc.norm_sqr();
            let mut xc = outer_sum.clone();
            add_outer(&mut xc, &v_common, T::one());
            common_quad[k] += xc * Complex::new(wc, T::zero());
            common_lin[k] += &v_common * (gc.conj() * Complex::new(lc, T::zero()));
            common_offset[k] += lc.log2() - lc * gc.norm_sqr() * sigma2 - lc + T::one();

            let wp = lp * gp.norm_sqr();
            private_quad_user[k] += &outer_sum * Complex::new(wp, T::zero());
            private_lin_user[k] += &v_private[k] * (gp.conj() * Complex::new(lp, T::zero()));
        }
        common_quad[k] *= Complex::new(inv_a, T::zero());
        common_lin[k] *= Complex::new(inv_a, T::zero());
        common_offset[k] *= inv_a;
        private_quad_user[k] *= Complex::new(inv_a, T::zero());
        private_lin_user[k] *= Complex::new(inv_a, T::zero());
    }

    // Sum private terms over each sector's users.
    let mut private_quad = vec![DMatrix::zeros(m, m); cfg.sectors];
    let mut private_lin = vec![DVector::zeros(m); cfg.sectors];
    for k in 0..users {
        let l = cfg.sector_of[k];
        private_quad[l] += &private_quad_user[k];
        private_lin[l] += &private_lin_user[k];
    }

    PhaseQuadratics {
        common_quad,
        common_lin,
        common_offset,
        private_quad,
        private_lin,
        sector_of: cfg.sector_of.clone(),
    }
}

/// `Q^T conj(p)`: length-M vector with entries `sum_n Q[n,m] conj(p[n])`.
fn response<T: Scalar>(q: &DMatrix<Complex<T>>, p: &DVector<Complex<T>>) -> DVector<Complex<T>> {
    let (n, m) = q.shape();
    DVector::from_fn(m, |col, _| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for r in 0..n {
            acc += q[(r, col)] * p[r].conj();
        }
        acc
    })
}

/// `acc += s * v v^H`.
fn add_outer<T: Scalar>(acc: &mut DMatrix<Complex<T>>, v: &DVector<Complex<T>>, s: T) {
    let n = v.len();
    let sc = Complex::new(s, T::zero());
    for c in 0..n {
        let vc = v[c].conj() * sc;
        for r in 0..n {
            acc[(r, c)] += v[r] * vc;
        }
    }
}

/// Max-form value of the surface subproblem at the current BD-RIS.
pub fn surface_objective<T: Scalar>(pq: &PhaseQuadratics<T>, ris: &BdRis<T>) -> T {
    let sectors = ris.sectors();
    let phi: Vec<DVector<Complex<T>>> = (0..sectors)
        .map(|l| DVector::from_fn(ris.cells(), |m, _| ris.coeffs[(l, m)]))
        .collect();
    let mut worst = T::of(f64::NEG_INFINITY);
    for k in 0..pq.common_quad.len() {
        let l = pq.sector_of[k];
        let v = quad_value(&pq.common_quad[k], &pq.common_lin[k], &phi[l]) - pq.common_offset[k];
        worst = worst.max(v);
    }
    let mut total = worst;
    for l in 0..sectors {
        total += quad_value(&pq.private_quad[l], &pq.private_lin[l], &phi[l]);
    }
    total
}

fn quad_value<T: Scalar>(
    x: &DMatrix<Complex<T>>,
    lin: &DVector<Complex<T>>,
    phi: &DVector<Complex<T>>,
) -> T {
    let xphi = x * phi;
    phi.dotc(&xphi).re - T::of(2.0) * phi.dotc(lin).re
}

/// LSE-smoothed surface objective. Every cell update descends this global
/// function exactly; the max-form value in [`surface_objective`] trails it
/// within `epsilon * ln(K)`.
pub fn surface_objective_smoothed<T: Scalar>(
    pq: &PhaseQuadratics<T>,
    ris: &BdRis<T>,
    epsilon: T,
) -> T {
    let sectors = ris.sectors();
    let phi: Vec<DVector<Complex<T>>> = (0..sectors)
        .map(|l| DVector::from_fn(ris.cells(), |m, _| ris.coeffs[(l, m)]))
        .collect();
    let fvals: Vec<T> = (0..pq.common_quad.len())
        .map(|k| {
            let l = pq.sector_of[k];
            quad_value(&pq.common_quad[k], &pq.common_lin[k], &phi[l]) - pq.common_offset[k]
        })
        .collect();
    let fmax = fvals
        .iter()
        .copied()
        .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b));
    let sum: T = fvals.iter().map(|&f| ((f - fmax) / epsilon).exp()).sum();
    let mut total = fmax + epsilon * sum.ln();
    for l in 0..sectors {
        total += quad_value(&pq.private_quad[l], &pq.private_lin[l], &phi[l]);
    }
    total
}

/// Restrict the surface objective to cell `m`, folding the current values
/// of every other cell into scalar coefficients.
pub fn cell_aux<T: Scalar>(pq: &PhaseQuadratics<T>, ris: &BdRis<T>, cell: usize) -> CellAux<T> {
    let users = pq.common_quad.len();
    let sectors = pq.private_quad.len();
    let two = T::of(2.0);
    let phi: Vec<DVector<Complex<T>>> = (0..sectors)
        .map(|l| DVector::from_fn(ris.cells(), |m, _| ris.coeffs[(l, m)]))
        .collect();

    let mut aux = CellAux {
        common_curv: Vec::with_capacity(users),
        common_lin: Vec::with_capacity(users),
        common_offset: Vec::with_capacity(users),
        private_curv: Vec::with_capacity(sectors),
        private_lin: Vec::with_capacity(sectors),
        sector_of: pq.sector_of.clone(),
    };

    for k in 0..users {
        let l = pq.sector_of[k];
        let x = &pq.common_quad[k];
        let lin = &pq.common_lin[k];
        let p = &phi[l];
        let w = x * p;
        let cross = w[cell] - x[(cell, cell)] * p[cell];
        let full = p.dotc(&w).re;
        let diag = x[(cell, cell)].re;
        // sum over n != m, n' != m of X[n,n'] phi_n^* phi_n'
        let inner_rest = full - p[cell].norm_sqr() * diag - two * (p[cell].conj() * cross).re;
        let lin_rest = p.dotc(lin) - p[cell].conj() * lin[cell];
        aux.common_curv.push(diag);
        aux.common_lin.push(lin[cell] - cross);
        aux.common_offset
            .push(pq.common_offset[k] - inner_rest + two * lin_rest.re);
    }
    for l in 0..sectors {
        let x = &pq.private_quad[l];
        let lin = &pq.private_lin[l];
        let p = &phi[l];
        let w = x * p;
        let cross = w[cell] - x[(cell, cell)] * p[cell];
        aux.private_curv.push(x[(cell, cell)].re);
        aux.private_lin.push(lin[cell] - cross);
    }
    aux
}

impl<T: Scalar> CellAux<T> {
    /// f_c,k at a candidate cell vector.
    pub fn f_common(&self, k: usize, cell: &DVector<Complex<T>>) -> T {
        let l = self.sector_of[k];
        let c = cell[l];
        self.common_curv[k] * c.norm_sqr() - T::of(2.0) * (c.conj() * self.common_lin[k]).re
            - self.common_offset[k]
    }

    /// f_p,l at a candidate cell vector.
    pub fn f_private(&self, l: usize, cell: &DVector<Complex<T>>) -> T {
        let c = cell[l];
        self.private_curv[l] * c.norm_sqr() - T::of(2.0) * (c.conj() * self.private_lin[l]).re
    }

    /// Max-form restricted objective (no smoothing).
    pub fn max_objective(&self, cell: &DVector<Complex<T>>) -> T {
        let worst = (0..self.common_curv.len())
            .map(|k| self.f_common(k, cell))
            .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b));
        let private: T = (0..self.private_curv.len())
            .map(|l| self.f_private(l, cell))
            .sum();
        worst + private
    }
}

/// Smoothed per-cell objective: private terms plus the LSE upper bound of
/// the worst common term, evaluated with a max shift so small `epsilon`
/// cannot overflow the exponentials.
pub fn smoothed_objective<T: Scalar>(aux: &CellAux<T>, cell: &DVector<Complex<T>>, epsilon: T) -> T {
    let k_count = aux.common_curv.len();
    let fvals: Vec<T> = (0..k_count).map(|k| aux.f_common(k, cell)).collect();
    let fmax = fvals
        .iter()
        .copied()
        .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b));
    let sum: T = fvals.iter().map(|&f| ((f - fmax) / epsilon).exp()).sum();
    let lse = fmax + epsilon * sum.ln();
    let private: T = (0..aux.private_curv.len())
        .map(|l| aux.f_private(l, cell))
        .sum();
    lse + private
}

/// Euclidean gradient of [`smoothed_objective`] in the convention
/// `2 nu phi - 2 chi` (twice the conjugate Wirtinger derivative, i.e. the
/// real gradient over interleaved re/im coordinates). The softmax weights
/// share the max shift with the objective.
pub fn euclidean_gradient<T: Scalar>(
    aux: &CellAux<T>,
    cell: &DVector<Complex<T>>,
    epsilon: T,
) -> DVector<Complex<T>> {
    let sectors = aux.private_curv.len();
    let k_count = aux.common_curv.len();
    let two = Complex::new(T::of(2.0), T::zero());
    let fvals: Vec<T> = (0..k_count).map(|k| aux.f_common(k, cell)).collect();
    let fmax = fvals
        .iter()
        .copied()
        .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b));
    let weights: Vec<T> = fvals.iter().map(|&f| ((f - fmax) / epsilon).exp()).collect();
    let denom: T = weights.iter().copied().sum();

    let mut grad = DVector::from_fn(sectors, |l, _| {
        (cell[l] * Complex::new(aux.private_curv[l], T::zero()) - aux.private_lin[l]) * two
    });
    for k in 0..k_count {
        let l = aux.sector_of[k];
        let g_c = (cell[l] * Complex::new(aux.common_curv[k], T::zero()) - aux.common_lin[k]) * two;
        grad[l] += g_c * Complex::new(weights[k] / denom, T::zero());
    }
    grad
}

/// Real inner product `Re{Tr(a^H b)}` on the embedded sphere.
pub fn real_inner<T: Scalar>(a: &DVector<Complex<T>>, b: &DVector<Complex<T>>) -> T {
    a.dotc(b).re
}

/// Project an ambient vector onto the tangent space of the unit sphere at
/// `point`.
pub fn project_tangent<T: Scalar>(
    point: &DVector<Complex<T>>,
    ambient: &DVector<Complex<T>>,
) -> DVector<Complex<T>> {
    let coeff = real_inner(point, ambient);
    ambient - point * Complex::new(coeff, T::zero())
}

/// Normalization retraction `(point + step dir) / |point + step dir|`.
pub fn retract<T: Scalar>(
    point: &DVector<Complex<T>>,
    direction: &DVector<Complex<T>>,
    step: T,
) -> Result<DVector<Complex<T>>> {
    let moved = point + direction * Complex::new(step, T::zero());
    let norm = moved.norm();
    if norm < T::of(1e-14) {
        return Err(Error::DegenerateRetraction);
    }
    Ok(moved / Complex::new(norm, T::zero()))
}

/// Riemannian Polak-Ribiere coefficient
/// `<g_v, g_v - Pr(g_{v-1})> / <g_{v-1}, g_{v-1}>`; the caller passes the
/// transported previous gradient together with the previous squared norm.
pub fn polak_ribiere<T: Scalar>(
    grad_now: &DVector<Complex<T>>,
    grad_prev_transported: &DVector<Complex<T>>,
    grad_prev_norm_sq: T,
) -> Result<T> {
    if grad_prev_norm_sq < T::of(1e-18) {
        return Err(Error::DivisionDegenerate);
    }
    let diff = grad_now - grad_prev_transported;
    Ok(real_inner(grad_now, &diff) / grad_prev_norm_sq)
}

/// Metadata of one per-cell RCG run.
#[derive(Debug, Clone, Copy)]
pub struct RcgOutcome<T> {
    pub iterations: usize,
    pub hit_cap: bool,
    pub grad_norm: T,
}

/// Minimize the smoothed cell objective on the unit sphere starting from
/// `start`. The objective never increases across iterations; conjugate
/// directions fall back to steepest descent whenever the Polak-Ribiere
/// coefficient degenerates, turns negative, or yields a non-descent
/// direction.
pub fn rcg_cell<T: Scalar>(
    aux: &CellAux<T>,
    start: &DVector<Complex<T>>,
    params: &RcgParams<T>,
) -> (DVector<Complex<T>>, RcgOutcome<T>) {
    let eps = params.epsilon;
    let mut point = start.clone();
    let mut grad = project_tangent(&point, &euclidean_gradient(aux, &point, eps));
    let mut grad_norm_sq = real_inner(&grad, &grad);
    if grad_norm_sq.sqrt() <= params.grad_tol {
        return (
            point,
            RcgOutcome {
                iterations: 0,
                hit_cap: false,
                grad_norm: grad_norm_sq.sqrt(),
            },
        );
    }
    let mut dir = -&grad;
    let mut f_cur = smoothed_objective(aux, &point, eps);

    for v in 1..=params.max_iters {
        let mut slope = real_inner(&grad, &dir);
        if slope >= T::zero() {
            dir = -&grad;
            slope = -grad_norm_sq;
        }
        // Armijo backtracking along the retracted path.
        let mut step = params.armijo_initial;
        let mut accepted: Option<(DVector<Complex<T>>, T)> = None;
        for _ in 0..60 {
            if let Ok(cand) = retract(&point, &dir, step) {
                let f_new = smoothed_objective(aux, &cand, eps);
                if f_new <= f_cur + params.armijo_decrease * step * slope {
                    accepted = Some((cand, f_new));
                    break;
                }
            }
            step *= params.armijo_contraction;
        }
        let Some((next, f_new)) = accepted else {
            // No decrease along the conjugate direction: retry once with
            // steepest descent, otherwise stop at the current point.
            let is_steepest = real_inner(&dir, &(-&grad)) >= grad_norm_sq * T::of(0.999);
            if !is_steepest {
                dir = -&grad;
                continue;
            }
            return (
                point,
                RcgOutcome {
                    iterations: v - 1,
                    hit_cap: false,
                    grad_norm: grad_norm_sq.sqrt(),
                },
            );
        };

        let grad_new = project_tangent(&next, &euclidean_gradient(aux, &next, eps));
        let grad_new_norm_sq = real_inner(&grad_new, &grad_new);
        if grad_new_norm_sq.sqrt() <= params.grad_tol {
            return (
                next,
                RcgOutcome {
                    iterations: v,
                    hit_cap: false,
                    grad_norm: grad_new_norm_sq.sqrt(),
                },
            );
        }
        let transported_prev = project_tangent(&next, &grad);
        let mu = polak_ribiere(&grad_new, &transported_prev, grad_norm_sq)
            .unwrap_or(T::zero())
            .max(T::zero());
        let transported_dir = project_tangent(&next, &dir);
        dir = -&grad_new + transported_dir * Complex::new(mu, T::zero());
        point = next;
        grad = grad_new;
        grad_norm_sq = grad_new_norm_sq;
        f_cur = f_new;
    }
    (
        point,
        RcgOutcome {
            iterations: params.max_iters,
            hit_cap: true,
            grad_norm: grad_norm_sq.sqrt(),
        },
    )
}

/// Metadata of a full cell sweep.
#[derive(Debug, Clone)]
pub struct SweepOutcome<T> {
    pub sweeps: usize,
    pub converged: bool,
    /// Max-form surface objective after each sweep.
    pub objective_trace: Vec<T>,
}

/// Successively redesign every cell until the summed squared sector change
/// per sweep falls below `sweep.tol` or the sweep cap is reached.
pub fn sweep_cells<T: Scalar>(
    pq: &PhaseQuadratics<T>,
    ris: &BdRis<T>,
    rcg: &RcgParams<T>,
    sweep: &SweepParams<T>,
) -> (BdRis<T>, SweepOutcome<T>) {
    let mut current = ris.clone();
    let mut trace = Vec::new();
    for v in 1..=sweep.max_sweeps {
        let previous = current.coeffs.clone();
        for m in 0..current.cells() {
            let aux = cell_aux(pq, &current, m);
            let start = current.cell(m);
            let (cell, _) = rcg_cell(&aux, &start, rcg);
            current.set_cell(m, &cell);
        }
        trace.push(surface_objective(pq, &current));
        let change = (&current.coeffs - &previous).norm_squared();
        if change <= sweep.tol {
            return (
                current,
                SweepOutcome {
                    sweeps: v,
                    converged: true,
                    objective_trace: trace,
                },
            );
        }
    }
    (
        current,
        SweepOutcome {
            sweeps: sweep.max_sweeps,
            converged: false,
            objective_trace: trace,
        },
    )
}
