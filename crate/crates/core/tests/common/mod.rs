//! Shared test oracles, independent of the library's solver paths.

#![allow(dead_code)]

use bdris_core::bdris::{smoothed_objective, CellAux};
use bdris_core::channel::CsiSampleSet;
use bdris_core::config::{Scheme, SystemConfig, ValidatedConfig};
use bdris_core::metrics::{BdRis, PrecoderSolution};
use bdris_core::precoder::SocpData;
use bdris_core::rng::{derive_stream, standard_cgauss, uniform, StreamRole};
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha12Rng {
    derive_stream(seed, 0, StreamRole::Fading)
}

/// Random BD-RIS with exactly unit-norm cells.
pub fn unit_cells_ris(sectors: usize, cells: usize, rng: &mut impl Rng) -> BdRis<f64> {
    let mut coeffs = DMatrix::from_fn(sectors, cells, |_, _| standard_cgauss::<f64, _>(rng));
    for m in 0..cells {
        let norm: f64 = (0..sectors)
            .map(|l| coeffs[(l, m)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        for l in 0..sectors {
            coeffs[(l, m)] /= Complex::new(norm, 0.0);
        }
    }
    BdRis::new(coeffs)
}

/// Random unit vector on the complex sphere.
pub fn unit_cell(sectors: usize, rng: &mut impl Rng) -> DVector<C64> {
    let v = DVector::from_fn(sectors, |_, _| standard_cgauss::<f64, _>(rng));
    let n = v.norm();
    v / Complex::new(n, 0.0)
}

/// Random precoder scaled to use `fraction` of the power budget.
pub fn random_precoder(
    n: usize,
    users: usize,
    power: f64,
    fraction: f64,
    rng: &mut impl Rng,
) -> PrecoderSolution<f64> {
    let common = DVector::from_fn(n, |_, _| standard_cgauss::<f64, _>(rng));
    let private: Vec<DVector<C64>> = (0..users)
        .map(|_| DVector::from_fn(n, |_, _| standard_cgauss::<f64, _>(rng)))
        .collect();
    let total: f64 = common.norm_squared() + private.iter().map(|p| p.norm_squared()).sum::<f64>();
    let scale = Complex::new((fraction * power / total).sqrt(), 0.0);
    PrecoderSolution {
        common: common * scale,
        private: private.into_iter().map(|p| p * scale).collect(),
        common_split: vec![0.0; users],
    }
}

/// Small validated scenario with unit-scale channels (no path loss).
pub fn unit_scale_config(
    sectors: usize,
    cells: usize,
    tx: usize,
    users_per_sector: Vec<usize>,
    samples: usize,
) -> ValidatedConfig<f64> {
    let mut raw = SystemConfig::<f64>::desk_scale();
    raw.sectors = sectors;
    raw.cells = cells;
    raw.cells_x = cells;
    raw.cells_y = 1;
    raw.tx_antennas = tx;
    raw.users_per_sector = users_per_sector;
    raw.noise_dbm = vec![0.0]; // 1 mW in watts = 1e-3
    raw.power_dbm = 30.0; // 1 W
    raw.saa_samples = samples;
    raw.validate().unwrap()
}

/// Sample set with i.i.d. unit CSCG entries (all samples independent).
pub fn random_sample_set(cfg: &ValidatedConfig<f64>, rng: &mut impl Rng) -> CsiSampleSet<f64> {
    let mk = |rng: &mut dyn FnMut() -> C64| {
        DMatrix::from_fn(cfg.tx_antennas, cfg.cells, |_, _| rng())
    };
    let mut draw = || standard_cgauss::<f64, _>(rng);
    let samples: Vec<Vec<DMatrix<C64>>> = (0..cfg.users)
        .map(|_| (0..cfg.saa_samples).map(|_| mk(&mut draw)).collect())
        .collect();
    CsiSampleSet {
        estimate: samples.iter().map(|s| s[0].clone()).collect(),
        perfect: samples.iter().map(|s| s[0].clone()).collect(),
        samples,
        error_var: vec![0.0; cfg.users],
    }
}

/// Random per-cell restriction with O(1) data.
pub fn random_cell_aux(sectors: usize, sector_of: Vec<usize>, rng: &mut impl Rng) -> CellAux<f64> {
    let users = sector_of.len();
    CellAux {
        common_curv: (0..users).map(|_| uniform(rng, 0.0, 2.0)).collect(),
        common_lin: (0..users).map(|_| standard_cgauss(rng)).collect(),
        common_offset: (0..users).map(|_| uniform(rng, -1.0, 1.0)).collect(),
        private_curv: (0..sectors).map(|_| uniform(rng, 0.0, 2.0)).collect(),
        private_lin: (0..sectors).map(|_| standard_cgauss(rng)).collect(),
        sector_of,
    }
}

/// Central finite differences of the smoothed cell objective over the
/// interleaved re/im coordinates.
pub fn fd_gradient(aux: &CellAux<f64>, cell: &DVector<C64>, eps: f64, h: f64) -> DVector<C64> {
    let l = cell.len();
    DVector::from_fn(l, |i, _| {
        let mut plus = cell.clone();
        let mut minus = cell.clone();
        plus[i] += Complex::new(h, 0.0);
        minus[i] -= Complex::new(h, 0.0);
        let d_re = (smoothed_objective(aux, &plus, eps) - smoothed_objective(aux, &minus, eps))
            / (2.0 * h);
        let mut plus = cell.clone();
        let mut minus = cell.clone();
        plus[i] += Complex::new(0.0, h);
        minus[i] -= Complex::new(0.0, h);
        let d_im = (smoothed_objective(aux, &plus, eps) - smoothed_objective(aux, &minus, eps))
            / (2.0 * h);
        Complex::new(d_re, d_im)
    })
}

/// Exhaustive minimum of the smoothed objective over the L = 2 complex
/// sphere, parameterized as `(cos a e^{i t1}, sin a e^{i t2})`: a coarse
/// 100x100x100 grid (1e6 points) followed by three local refinement rounds.
pub fn sphere_grid_min(aux: &CellAux<f64>, eps: f64) -> f64 {
    let eval = |a: f64, t1: f64, t2: f64| {
        let cell = DVector::from_vec(vec![
            Complex::new(a.cos() * t1.cos(), a.cos() * t1.sin()),
            Complex::new(a.sin() * t2.cos(), a.sin() * t2.sin()),
        ]);
        smoothed_objective(aux, &cell, eps)
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let two_pi = std::f64::consts::TAU;
    let (na, nt) = (100usize, 100usize);
    // keep several coarse candidates so near-tied basins all get refined
    let mut top: Vec<(f64, f64, f64, f64)> = Vec::new();
    for ia in 0..na {
        let a = half_pi * ia as f64 / (na - 1) as f64;
        for i1 in 0..nt {
            let t1 = two_pi * i1 as f64 / nt as f64;
            for i2 in 0..nt {
                let t2 = two_pi * i2 as f64 / nt as f64;
                let f = eval(a, t1, t2);
                if top.len() < 8 || f < top.last().unwrap().0 {
                    top.push((f, a, t1, t2));
                    top.sort_by(|x, y| x.0.total_cmp(&y.0));
                    top.truncate(8);
                }
            }
        }
    }
    let coarse_spacing = (
        half_pi / (na - 1) as f64,
        two_pi / nt as f64,
        two_pi / nt as f64,
    );
    let mut best = top[0];
    for seed in top {
        let mut local = seed;
        let mut spacing = coarse_spacing;
        for _ in 0..4 {
            let center = local;
            for ia in -10i32..=10 {
                let a = center.1 + spacing.0 * ia as f64 / 10.0;
                for i1 in -10i32..=10 {
                    let t1 = center.2 + spacing.1 * i1 as f64 / 10.0;
                    for i2 in -10i32..=10 {
                        let t2 = center.3 + spacing.2 * i2 as f64 / 10.0;
                        let f = eval(a, t1, t2);
                        if f < local.0 {
                            local = (f, a, t1, t2);
                        }
                    }
                }
            }
            spacing = (spacing.0 / 10.0, spacing.1 / 10.0, spacing.2 / 10.0);
        }
        if local.0 < best.0 {
            best = local;
        }
    }
    best.0
}

/// Independent first-order reference for the precoder subproblem: an
/// augmented-Lagrangian loop whose inner solves are projected gradient
/// descent (projection onto the power ball and the non-positive orthant).
/// Shares no code with the interior-point path.
pub struct AlmResult {
    pub objective: f64,
    pub solution: PrecoderSolution<f64>,
    pub worst_violation: f64,
}

#[derive(Clone)]
struct Point {
    pc: DVector<C64>,
    pp: Vec<DVector<C64>>,
    gv: Vec<f64>,
}

impl Point {
    fn zeros(n: usize, users: usize, rsma: bool) -> Self {
        Self {
            pc: DVector::zeros(if rsma { n } else { 0 }),
            pp: vec![DVector::zeros(n); users],
            gv: vec![0.0; if rsma { users } else { 0 }],
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Point) {
        let a = Complex::new(alpha, 0.0);
        self.pc += &other.pc * a;
        for (m, o) in self.pp.iter_mut().zip(other.pp.iter()) {
            *m += o * a;
        }
        for (m, o) in self.gv.iter_mut().zip(other.gv.iter()) {
            *m += alpha * o;
        }
    }

    fn sub(&self, other: &Point) -> Point {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    fn norm_sq(&self) -> f64 {
        let mut d = self.pc.norm_squared();
        for p in &self.pp {
            d += p.norm_squared();
        }
        for g in &self.gv {
            d += g * g;
        }
        d
    }

    fn dist_sq(&self, other: &Point) -> f64 {
        let mut d = (&self.pc - &other.pc).norm_squared();
        for (a, b) in self.pp.iter().zip(other.pp.iter()) {
            d += (a - b).norm_squared();
        }
        for (a, b) in self.gv.iter().zip(other.gv.iter()) {
            d += (a - b) * (a - b);
        }
        d
    }

    /// Real inner product with another point.
    fn inner(&self, other: &Point) -> f64 {
        let mut acc = self.pc.dotc(&other.pc).re;
        for (a, b) in self.pp.iter().zip(other.pp.iter()) {
            acc += a.dotc(b).re;
        }
        for (a, b) in self.gv.iter().zip(other.gv.iter()) {
            acc += a * b;
        }
        acc
    }

    fn project(&mut self, power: f64) {
        let total: f64 =
            self.pc.norm_squared() + self.pp.iter().map(|p| p.norm_squared()).sum::<f64>();
        if total > power {
            let s = Complex::new((power / total).sqrt(), 0.0);
            self.pc *= s;
            for p in &mut self.pp {
                *p *= s;
            }
        }
        for g in &mut self.gv {
            *g = g.min(0.0);
        }
    }
}

fn hermitian_quad(h: &DMatrix<C64>, p: &DVector<C64>) -> f64 {
    p.dotc(&(h * p)).re
}

fn objective_at(data: &SocpData<f64>, x: &Point) -> f64 {
    let users = data.private_quad.len();
    let mut total = 0.0;
    for k in 0..users {
        if !x.gv.is_empty() {
            total += x.gv[k];
        }
        for p in &x.pp {
            total += hermitian_quad(&data.private_quad[k], p);
        }
        total -= 2.0 * data.private_lin[k].dotc(&x.pp[k]).re;
    }
    total
}

/// Constraint values; positive entries are violations.
fn constraints_at(data: &SocpData<f64>, x: &Point) -> (Vec<f64>, Vec<f64>) {
    let users = data.private_quad.len();
    let rsma = data.scheme == Scheme::Rsma;
    let sum_gv: f64 = x.gv.iter().sum();
    let mut common = Vec::new();
    if rsma {
        for k in 0..users {
            let mut v = hermitian_quad(&data.common_quad[k], &x.pc);
            for p in &x.pp {
                v += hermitian_quad(&data.common_quad[k], p);
            }
            v -= 2.0 * data.common_lin[k].dotc(&x.pc).re;
            common.push(v - sum_gv - data.common_offset[k]);
        }
    }
    let mut qos = Vec::new();
    for k in 0..users {
        let mut v = 0.0;
        for p in &x.pp {
            v += hermitian_quad(&data.private_quad[k], p);
        }
        v -= 2.0 * data.private_lin[k].dotc(&x.pp[k]).re;
        if rsma {
            v += x.gv[k];
        }
        qos.push(v - data.private_offset[k] + data.rate_threshold[k]);
    }
    (common, qos)
}

fn al_value(data: &SocpData<f64>, x: &Point, mu_c: &[f64], mu_q: &[f64], rho: f64) -> f64 {
    let (common, qos) = constraints_at(data, x);
    let mut v = objective_at(data, x);
    for (g, mu) in common.iter().zip(mu_c.iter()) {
        let t = (mu + rho * g).max(0.0);
        v += (t * t - mu * mu) / (2.0 * rho);
    }
    for (g, mu) in qos.iter().zip(mu_q.iter()) {
        let t = (mu + rho * g).max(0.0);
        v += (t * t - mu * mu) / (2.0 * rho);
    }
    v
}

fn al_gradient(data: &SocpData<f64>, x: &Point, mu_c: &[f64], mu_q: &[f64], rho: f64) -> Point {
    let users = data.private_quad.len();
    let rsma = data.scheme == Scheme::Rsma;
    let n = x.pp[0].len();
    let (common, qos) = constraints_at(data, x);
    let mut grad = Point::zeros(n, users, rsma);

    // objective part
    for k in 0..users {
        for (j, p) in x.pp.iter().enumerate() {
            grad.pp[j] += (&data.private_quad[k] * p) * Complex::new(2.0, 0.0);
            let _ = j;
        }
        grad.pp[k] -= &data.private_lin[k] * Complex::new(2.0, 0.0);
    }
    for g in &mut grad.gv {
        *g += 1.0;
    }

    // common-rate constraints
    if rsma {
        for k in 0..users {
            let w = (mu_c[k] + rho * common[k]).max(0.0);
            if w == 0.0 {
                continue;
            }
            grad.pc += (&data.common_quad[k] * &x.pc) * Complex::new(2.0 * w, 0.0);
            grad.pc -= &data.common_lin[k] * Complex::new(2.0 * w, 0.0);
            for (j, p) in x.pp.iter().enumerate() {
                grad.pp[j] += (&data.common_quad[k] * p) * Complex::new(2.0 * w, 0.0);
            }
            for g in &mut grad.gv {
                *g -= w;
            }
        }
    }
    // qos constraints
    for k in 0..users {
        let w = (mu_q[k] + rho * qos[k]).max(0.0);
        if w == 0.0 {
            continue;
        }
        for (j, p) in x.pp.iter().enumerate() {
            grad.pp[j] += (&data.private_quad[k] * p) * Complex::new(2.0 * w, 0.0);
        }
        grad.pp[k] -= &data.private_lin[k] * Complex::new(2.0 * w, 0.0);
        if rsma {
            grad.gv[k] += w;
        }
    }
    grad
}

/// Minimize the augmented Lagrangian at fixed multipliers with FISTA
/// (accelerated projected gradient, backtracking step, value restart).
fn fista_inner(
    data: &SocpData<f64>,
    x0: Point,
    mu_c: &[f64],
    mu_q: &[f64],
    rho: f64,
    max_iter: usize,
    mapping_tol: f64,
) -> Point {
    let mut x = x0.clone();
    let mut y = x0;
    let mut momentum = 1.0f64;
    let mut step = 1e-2;
    let mut f_x = al_value(data, &x, mu_c, mu_q, rho);
    for _ in 0..max_iter {
        let g = al_gradient(data, &y, mu_c, mu_q, rho);
        let f_y = al_value(data, &y, mu_c, mu_q, rho);
        // backtrack until the quadratic majorization around y holds
        let mut cand = y.clone();
        let mut f_cand = f_y;
        for _ in 0..60 {
            cand = y.clone();
            cand.axpy(-step, &g);
            cand.project(data.power_budget);
            f_cand = al_value(data, &cand, mu_c, mu_q, rho);
            let diff = cand.sub(&y);
            let bound = f_y + g.inner(&diff) + diff.norm_sq() / (2.0 * step);
            if f_cand <= bound + 1e-14 * f_y.abs().max(1.0) {
                break;
            }
            step *= 0.5;
        }
        if f_cand > f_x {
            // value increased: restart the momentum from the best iterate
            let g_at_x = al_gradient(data, &x, mu_c, mu_q, rho);
            let mut probe = x.clone();
            probe.axpy(-1e-6, &g_at_x);
            probe.project(data.power_budget);
            if probe.dist_sq(&x).sqrt() / 1e-6 < mapping_tol {
                break;
            }
            y = x.clone();
            momentum = 1.0;
            continue;
        }
        let momentum_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / momentum_next;
        let moved = cand.dist_sq(&x).sqrt();
        y = cand.clone();
        y.axpy(beta, &cand.sub(&x));
        x = cand;
        f_x = f_cand;
        momentum = momentum_next;
        step *= 1.1;
        if moved < mapping_tol * step.max(1e-9) {
            break;
        }
    }
    x
}

pub fn alm_reference_solve(data: &SocpData<f64>) -> AlmResult {
    let users = data.private_quad.len();
    let rsma = data.scheme == Scheme::Rsma;
    let n = data.private_lin[0].len();
    let mut x = Point::zeros(n, users, rsma);
    let mut mu_c = vec![0.0; if rsma { users } else { 0 }];
    let mut mu_q = vec![0.0; users];
    let mut rho = 100.0;

    for outer in 0..120 {
        let iters = if outer < 5 { 4_000 } else { 12_000 };
        x = fista_inner(data, x, &mu_c, &mu_q, rho, iters, 1e-10);
        let (common, qos) = constraints_at(data, &x);
        for (mu, g) in mu_c.iter_mut().zip(common.iter()) {
            *mu = (*mu + rho * g).max(0.0);
        }
        for (mu, g) in mu_q.iter_mut().zip(qos.iter()) {
            *mu = (*mu + rho * g).max(0.0);
        }
        let worst = common
            .iter()
            .chain(qos.iter())
            .fold(0.0f64, |a, &b| a.max(b));
        if worst <= 1e-11 && outer > 10 {
            break;
        }
        rho = (rho * 1.5).min(1e4);
    }

    let (common, qos) = constraints_at(data, &x);
    let mut worst: f64 = 0.0;
    for g in common.iter().chain(qos.iter()) {
        worst = worst.max(*g);
    }
    let total: f64 = x.pc.norm_squared() + x.pp.iter().map(|p| p.norm_squared()).sum::<f64>();
    worst = worst.max(total - data.power_budget);
    let solution = PrecoderSolution {
        common: if rsma { x.pc.clone() } else { DVector::zeros(n) },
        private: x.pp.clone(),
        common_split: if rsma {
            x.gv.iter().map(|&g| (-g).max(0.0)).collect()
        } else {
            vec![0.0; users]
        },
    };
    AlmResult {
        objective: objective_at(data, &x),
        solution,
        worst_violation: worst,
    }
}
