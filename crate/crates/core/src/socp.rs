//! Dense log-barrier interior-point solver for small convex QCQPs.
//!
//! Solves
//!
//! ```text
//! minimize    0.5 x' H x + q' x
//! subject to  0.5 x' A_i x + b_i' x + c_i <= 0,   i = 1..m
//! ```
//!
//! with `H` and every `A_i` positive semidefinite. A phase-I pass minimizes
//! the worst constraint slack to find a strictly feasible start (or certify
//! infeasibility from the barrier's dual bound); phase II follows the
//! central path with damped Newton steps until the duality-gap bound `m/t`
//! drops below the target. The precoder block is the only intended caller,
//! so the representation stays dense and unclever.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use nalgebra::{Cholesky, DMatrix, DVector};

/// One convex quadratic constraint `0.5 x' A x + b' x + c <= 0`.
#[derive(Debug, Clone)]
pub struct QuadConstraint<T> {
    /// PSD quadratic term; `None` for affine constraints.
    pub quad: Option<DMatrix<T>>,
    pub lin: DVector<T>,
    pub offset: T,
}

impl<T: Scalar> QuadConstraint<T> {
    pub fn affine(lin: DVector<T>, offset: T) -> Self {
        Self {
            quad: None,
            lin,
            offset,
        }
    }

    pub fn value(&self, x: &DVector<T>) -> T {
        let mut v = self.lin.dot(x) + self.offset;
        if let Some(a) = &self.quad {
            v += x.dot(&(a * x)) * T::of(0.5);
        }
        v
    }

    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        match &self.quad {
            Some(a) => a * x + &self.lin,
            None => self.lin.clone(),
        }
    }
}

/// Dense convex QCQP.
#[derive(Debug, Clone)]
pub struct Qcqp<T> {
    pub quad_obj: DMatrix<T>,
    pub lin_obj: DVector<T>,
    pub constraints: Vec<QuadConstraint<T>>,
}

impl<T: Scalar> Qcqp<T> {
    pub fn dim(&self) -> usize {
        self.lin_obj.len()
    }

    pub fn objective(&self, x: &DVector<T>) -> T {
        x.dot(&(&self.quad_obj * x)) * T::of(0.5) + self.lin_obj.dot(x)
    }

    fn obj_gradient(&self, x: &DVector<T>) -> DVector<T> {
        &self.quad_obj * x + &self.lin_obj
    }

    /// Worst (largest) constraint value at `x`.
    pub fn max_violation(&self, x: &DVector<T>) -> T {
        self.constraints
            .iter()
            .map(|c| c.value(x))
            .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IpmParams<T> {
    /// Duality-gap target `m / t_final`.
    pub gap_tol: T,
    /// Barrier growth factor between centering steps.
    pub growth: T,
    /// Newton-decrement threshold (`lambda^2 / 2`) ending one centering.
    pub newton_tol: T,
    /// Newton iteration cap per centering.
    pub max_newton: usize,
    /// Centering stages cap.
    pub max_outer: usize,
    /// Phase-I margin: accept a start once all constraints sit below it.
    pub feas_margin: T,
}

impl<T: Scalar> Default for IpmParams<T> {
    fn default() -> Self {
        // Targets below a few thousand machine epsilons are unreachable for
        // the barrier (f32 lands near 2e-4, f64 keeps the nominal values).
        let eps = T::eps();
        Self {
            gap_tol: T::of(1e-9).max(eps * T::of(2e3)),
            growth: T::of(20.0),
            newton_tol: T::of(1e-12).max(eps * eps),
            max_newton: 120,
            max_outer: 64,
            feas_margin: T::of(1e-8).max(eps * T::of(100.0)),
        }
    }
}

/// Optimality evidence for the returned point.
#[derive(Debug, Clone, Copy)]
pub struct IpmReport<T> {
    pub objective: T,
    /// Duality-gap bound `m / t` at the last centered point.
    pub duality_gap: T,
    /// Infinity norm of the stationarity residual of the barrier KKT system,
    /// i.e. `|grad f + sum lambda_i grad g_i|_inf` with `lambda_i = 1/(t (-g_i))`.
    pub kkt_residual: T,
    pub newton_steps: usize,
}

/// Minimize the QCQP. `Error::Infeasible` when phase I certifies an empty
/// interior; `Error::SolverStall` when the tolerance cannot be reached.
pub fn solve<T: Scalar>(p: &Qcqp<T>, params: &IpmParams<T>) -> Result<(DVector<T>, IpmReport<T>)> {
    let x0 = phase_one(p, params)?;
    let (x, t, newton_steps) = phase_two(p, x0, params)?;
    let m = T::of(p.constraints.len() as f64);
    let duals: Vec<T> = p
        .constraints
        .iter()
        .map(|c| T::one() / (t * (-c.value(&x))))
        .collect();
    let (x, kkt_residual, gap) = match polish(p, &x, &duals, t) {
        Some((xp, res)) if res <= barrier_gradient(p, &x, t).amax() / t => {
            (xp, res, T::zero())
        }
        _ => {
            let res = barrier_gradient(p, &x, t).amax() / t;
            (x, res, m / t)
        }
    };
    let objective = p.objective(&x);
    Ok((
        x,
        IpmReport {
            objective,
            duality_gap: gap,
            kkt_residual,
            newton_steps,
        },
    ))
}

/// Active-set refinement: Newton on the KKT system of the constraints the
/// barrier identifies as binding. Constraints whose multiplier turns
/// negative are dropped and the refinement re-runs. Returns the polished
/// point and its stationarity residual, or `None` when no consistent
/// active set validates.
fn polish<T: Scalar>(
    p: &Qcqp<T>,
    x_ipm: &DVector<T>,
    duals: &[T],
    t: T,
) -> Option<(DVector<T>, T)> {
    let threshold = (T::one() / t).sqrt();
    let mut active: Vec<usize> = (0..p.constraints.len())
        .filter(|&i| duals[i] >= threshold)
        .collect();

    let debug = std::env::var_os("BDRIS_IPM_DEBUG").is_some();
    for _attempt in 0..3 {
        let Some((x, lam)) = polish_newton(p, x_ipm, duals, &active) else {
            if debug {
                eprintln!("polish: newton solve failed (active {active:?})");
            }
            return None;
        };
        // Drop constraints the refinement priced negatively and retry.
        let scale = x_ipm.amax().max(T::one());
        let tol = T::of(1e-9) * scale;
        let negative: Vec<usize> = active
            .iter()
            .enumerate()
            .filter(|(j, _)| lam[*j] < -tol)
            .map(|(_, &i)| i)
            .collect();
        if !negative.is_empty() {
            if debug {
                eprintln!("polish: dropping negatively priced constraints {negative:?}");
            }
            active.retain(|i| !negative.contains(i));
            continue;
        }
        // Feasibility of the full constraint set at the polished point.
        let worst = p
            .constraints
            .iter()
            .map(|c| c.value(&x))
            .fold(T::of(f64::NEG_INFINITY), |a, b| a.max(b));
        if worst > tol {
            if debug {
                eprintln!(
                    "polish: infeasible by {} (active {active:?})",
                    worst.as_f64()
                );
            }
            return None;
        }
        let mut r_stat = p.obj_gradient(&x);
        for (j, &i) in active.iter().enumerate() {
            r_stat += p.constraints[i].gradient(&x) * lam[j].max(T::zero());
        }
        return Some((x, r_stat.amax()));
    }
    None
}

fn polish_newton<T: Scalar>(
    p: &Qcqp<T>,
    x_ipm: &DVector<T>,
    duals: &[T],
    active: &[usize],
) -> Option<(DVector<T>, Vec<T>)> {
    let n = p.dim();
    let na = active.len();
    let mut x = x_ipm.clone();
    let mut lam: Vec<T> = active.iter().map(|&i| duals[i]).collect();
    for _ in 0..4 {
        // Residual F = [grad f + sum lam_i grad g_i ; g_active]
        let mut r_stat = p.obj_gradient(&x);
        for (j, &i) in active.iter().enumerate() {
            r_stat += p.constraints[i].gradient(&x) * lam[j];
        }
        let mut kkt = DMatrix::zeros(n + na, n + na);
        let mut rhs = DVector::zeros(n + na);
        let mut h = p.quad_obj.clone();
        for (j, &i) in active.iter().enumerate() {
            if let Some(a) = &p.constraints[i].quad {
                h += a * lam[j];
            }
            let gi = p.constraints[i].gradient(&x);
            for r in 0..n {
                kkt[(r, n + j)] = gi[r];
                kkt[(n + j, r)] = gi[r];
            }
            rhs[n + j] = -p.constraints[i].value(&x);
        }
        kkt.view_mut((0, 0), (n, n)).copy_from(&h);
        for r in 0..n {
            rhs[r] = -r_stat[r];
        }
        // Optimal faces (e.g. an undetermined split of a sum) make the
        // plain KKT matrix singular; a tiny primal-dual regularization
        // selects the minimum-norm step along the face.
        let reg = T::of(1e-10);
        for r in 0..n {
            kkt[(r, r)] += reg;
        }
        for j in 0..na {
            kkt[(n + j, n + j)] -= reg;
        }
        let lu = kkt.lu();
        let step = lu.solve(&rhs)?;
        for r in 0..n {
            x[r] += step[r];
        }
        for j in 0..na {
            lam[j] += step[n + j];
        }
    }
    Some((x, lam))
}

/// Find a strictly feasible point by minimizing the worst slack.
fn phase_one<T: Scalar>(p: &Qcqp<T>, params: &IpmParams<T>) -> Result<DVector<T>> {
    let n = p.dim();
    let x0 = DVector::zeros(n);
    if p.max_violation(&x0) < -params.feas_margin {
        return Ok(x0);
    }

    // Augmented problem over (x, s): minimize s, s.t. g_i(x) - s <= 0.
    let m = p.constraints.len();
    let aug = Qcqp {
        quad_obj: DMatrix::zeros(n + 1, n + 1),
        lin_obj: DVector::from_fn(n + 1, |i, _| if i == n { T::one() } else { T::zero() }),
        constraints: p
            .constraints
            .iter()
            .map(|c| {
                let mut lin = DVector::zeros(n + 1);
                lin.rows_mut(0, n).copy_from(&c.lin);
                lin[n] = -T::one();
                QuadConstraint {
                    quad: c.quad.as_ref().map(|a| {
                        let mut big = DMatrix::zeros(n + 1, n + 1);
                        big.view_mut((0, 0), (n, n)).copy_from(a);
                        big
                    }),
                    lin,
                    offset: c.offset,
                }
            })
            .collect(),
    };

    let mut y = DVector::zeros(n + 1);
    y[n] = p.max_violation(&x0) + T::one();
    let mut t = T::one();
    let mcount = T::of(m as f64);
    for _ in 0..params.max_outer {
        let stop_when = |y: &DVector<T>| {
            // Early exit once x is strictly feasible with margin.
            p.max_violation(&DVector::from(y.rows(0, n).clone_owned())) < -params.feas_margin
        };
        let outcome = center(&aug, y, t, params, Some(&stop_when));
        y = outcome.point;
        let x = DVector::from(y.rows(0, n).clone_owned());
        if std::env::var_os("BDRIS_IPM_DEBUG").is_some() {
            eprintln!(
                "phase1 t={:.2e} s={:.6e} maxg={:.6e} centered={} steps={}",
                t.as_f64(),
                y[n].as_f64(),
                p.max_violation(&x).as_f64(),
                outcome.centered,
                outcome.steps
            );
        }
        if outcome.early_stop || p.max_violation(&x) < -params.feas_margin {
            return Ok(x);
        }
        // Lower bound on the optimal worst slack from the barrier gap; the
        // bound only holds at (near-)centered points.
        let gap = mcount / t;
        if outcome.centered && y[n] - gap > T::zero() {
            return Err(Error::Infeasible);
        }
        if gap < params.gap_tol {
            break;
        }
        t *= params.growth;
    }
    // The optimal slack is pinched around zero: no usable strict interior.
    Err(Error::Infeasible)
}

fn phase_two<T: Scalar>(
    p: &Qcqp<T>,
    mut x: DVector<T>,
    params: &IpmParams<T>,
) -> Result<(DVector<T>, T, usize)> {
    let m = T::of(p.constraints.len() as f64);
    let mut t = T::one();
    let mut newton_total = 0usize;
    for _ in 0..params.max_outer {
        let outcome = center(p, x, t, params, None);
        x = outcome.point;
        newton_total += outcome.steps;
        if m / t <= params.gap_tol {
            return Ok((x, t, newton_total));
        }
        t *= params.growth;
    }
    Err(Error::SolverStall(format!(
        "gap {} above target after {} centering stages",
        (m / t).as_f64(),
        params.max_outer
    )))
}

fn barrier_value<T: Scalar>(p: &Qcqp<T>, x: &DVector<T>, t: T) -> Option<T> {
    let mut v = p.objective(x) * t;
    for c in &p.constraints {
        let g = c.value(x);
        if !(g < T::zero()) {
            return None;
        }
        v -= (-g).ln();
    }
    Some(v)
}

fn barrier_gradient<T: Scalar>(p: &Qcqp<T>, x: &DVector<T>, t: T) -> DVector<T> {
    let mut grad = p.obj_gradient(x) * t;
    for c in &p.constraints {
        let g = c.value(x);
        grad += c.gradient(x) / (-g);
    }
    grad
}

struct CenterOutcome<T> {
    point: DVector<T>,
    steps: usize,
    early_stop: bool,
    /// The Newton decrement dropped below tolerance (the duality bound of
    /// the centered point applies).
    centered: bool,
}

/// One centering run: damped Newton on `t f + barrier` from a strictly
/// feasible `x`.
fn center<T: Scalar>(
    p: &Qcqp<T>,
    mut x: DVector<T>,
    t: T,
    params: &IpmParams<T>,
    early_stop: Option<&dyn Fn(&DVector<T>) -> bool>,
) -> CenterOutcome<T> {
    let n = p.dim();
    for step in 0..params.max_newton {
        if let Some(stop) = early_stop {
            if stop(&x) {
                return CenterOutcome {
                    point: x,
                    steps: step,
                    early_stop: true,
                    centered: false,
                };
            }
        }
        let mut grad = p.obj_gradient(&x) * t;
        let mut hess = &p.quad_obj * t;
        for c in &p.constraints {
            let g = c.value(&x);
            let cg = c.gradient(&x);
            let inv = T::one() / (-g);
            grad += &cg * inv;
            // hess += (1/g^2) cg cg' + (1/-g) A
            rank_one_update(&mut hess, inv * inv, &cg);
            if let Some(a) = &c.quad {
                hess += a * inv;
            }
        }
        // Newton direction with an escalating ridge if factorization fails.
        let mut dx = None;
        let mut ridge = T::zero();
        for _ in 0..8 {
            let mut h = hess.clone();
            if ridge > T::zero() {
                for i in 0..n {
                    h[(i, i)] += ridge;
                }
            }
            if let Some(ch) = Cholesky::new(h) {
                dx = Some(ch.solve(&(-&grad)));
                break;
            }
            ridge = if ridge == T::zero() {
                T::of(1e-12)
            } else {
                ridge * T::of(100.0)
            };
        }
        let Some(dx) = dx else {
            return CenterOutcome {
                point: x,
                steps: step,
                early_stop: false,
                centered: false,
            };
        };
        let decrement = -grad.dot(&dx); // = dx' H dx >= 0
        if decrement * T::of(0.5) <= params.newton_tol {
            return CenterOutcome {
                point: x,
                steps: step,
                early_stop: false,
                centered: true,
            };
        }
        // Backtrack into the domain, then require Armijo decrease.
        let f0 = barrier_value(p, &x, t).expect("centering iterate left the domain");
        let mut s = T::one();
        let mut accepted = false;
        for _ in 0..70 {
            let cand = &x + &dx * s;
            if let Some(f1) = barrier_value(p, &cand, t) {
                if f1 <= f0 - T::of(0.25) * s * decrement {
                    x = cand;
                    accepted = true;
                    break;
                }
            }
            s *= T::of(0.5);
        }
        if !accepted {
            // Line search exhausted: treat as centered enough to move on.
            return CenterOutcome {
                point: x,
                steps: step,
                early_stop: false,
                centered: false,
            };
        }
    }
    CenterOutcome {
        point: x,
        steps: params.max_newton,
        early_stop: false,
        centered: false,
    }
}

/// `mat += alpha * u u'`.
fn rank_one_update<T: Scalar>(mat: &mut DMatrix<T>, alpha: T, u: &DVector<T>) {
    let n = u.len();
    for j in 0..n {
        let uj = u[j] * alpha;
        if uj == T::zero() {
            continue;
        }
        for i in 0..n {
            mat[(i, j)] += u[i] * uj;
        }
    }
}
