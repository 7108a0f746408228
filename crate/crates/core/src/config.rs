//! Scenario parameters: validation, unit conversion, derived geometry.
//!
//! All user-facing powers are configured in dBm and converted once to linear
//! watts at validation; everything downstream works in linear units.

use crate::error::{Error, Result};
use crate::rng::{self, StreamRole};
use crate::scalar::Scalar;
use std::fmt::Write as _;
use std::path::Path;

/// Per-antenna radiation pattern entering the path-loss model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiationPattern {
    Idealized,
    Practical,
}

impl RadiationPattern {
    pub fn name(self) -> &'static str {
        match self {
            RadiationPattern::Idealized => "idealized",
            RadiationPattern::Practical => "practical",
        }
    }
}

/// Multiple-access scheme: rate splitting or plain linear precoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rsma,
    Sdma,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rsma => "rsma",
            Scheme::Sdma => "sdma",
        }
    }
}

/// Riemannian conjugate-gradient settings for one cell subproblem.
#[derive(Debug, Clone, Copy)]
pub struct RcgParams<T> {
    /// LSE smoothing scalar.
    pub epsilon: T,
    /// Exit threshold on the Riemannian gradient norm.
    pub grad_tol: T,
    /// Iteration cap.
    pub max_iters: usize,
    /// Armijo initial step.
    pub armijo_initial: T,
    /// Armijo contraction factor in (0,1).
    pub armijo_contraction: T,
    /// Armijo sufficient-decrease constant.
    pub armijo_decrease: T,
}

impl<T: Scalar> Default for RcgParams<T> {
    fn default() -> Self {
        Self {
            epsilon: T::of(0.1),
            grad_tol: T::of(1e-6),
            max_iters: 500,
            armijo_initial: T::one(),
            armijo_contraction: T::of(0.5),
            armijo_decrease: T::of(1e-4),
        }
    }
}

/// Cell-sweep settings for the BD-RIS block.
#[derive(Debug, Clone, Copy)]
pub struct SweepParams<T> {
    /// Exit threshold on the summed squared sector change per sweep.
    pub tol: T,
    /// Sweep cap.
    pub max_sweeps: usize,
}

impl<T: Scalar> Default for SweepParams<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-6),
            max_sweeps: 50,
        }
    }
}

/// Outer block-coordinate-descent settings (scheme-independent part).
#[derive(Debug, Clone, Copy)]
pub struct BcdSettings<T> {
    /// Relative objective-change exit threshold.
    pub rel_tol: T,
    /// Outer iteration cap.
    pub max_iters: usize,
    /// QoS relaxation retries before aborting a realization.
    pub qos_max_retries: usize,
    /// Multiplicative threshold shrink applied per retry, in (0,1).
    pub qos_shrink: T,
}

impl<T: Scalar> Default for BcdSettings<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::of(1e-3),
            max_iters: 100,
            qos_max_retries: 3,
            qos_shrink: T::of(0.5),
        }
    }
}

/// Raw scenario description. Per-user lists may hold a single entry, which
/// broadcasts to all users at validation.
#[derive(Debug, Clone)]
pub struct SystemConfig<T> {
    /// Number of BD-RIS sectors (L).
    pub sectors: usize,
    /// Antennas per sector = number of cells (M).
    pub cells: usize,
    /// Planar-array factorization of the cells, `cells_x * cells_y == cells`.
    pub cells_x: usize,
    pub cells_y: usize,
    /// Transmit antennas (N).
    pub tx_antennas: usize,
    /// Users served by each sector (K_l), length `sectors`.
    pub users_per_sector: Vec<usize>,
    /// Transmit power budget in dBm.
    pub power_dbm: T,
    /// Per-user noise power in dBm.
    pub noise_dbm: Vec<T>,
    /// Per-user QoS thresholds in bits/s/Hz.
    pub rate_threshold: Vec<T>,
    /// CSI uncertainty scalar in [0, 1).
    pub csi_delta: T,
    /// Number of SAA samples (A).
    pub saa_samples: usize,
    /// Rician factor in dB (shared by all links).
    pub rician_kappa_db: T,
    /// Carrier frequency in Hz.
    pub freq_hz: T,
    /// Transmitter-RIS distance in meters.
    pub dist_tx_ris: T,
    /// RIS-user distances in meters (per user).
    pub dist_ris_user: Vec<T>,
    /// Path-loss exponents.
    pub pathloss_exp_tx: T,
    pub pathloss_exp_user: T,
    /// Antenna gains (linear).
    pub gain_tx: T,
    pub gain_user: T,
    /// Radiation pattern of the BD-RIS antennas.
    pub pattern: RadiationPattern,
    /// Elevation angle transmitter->RIS in radians; drawn uniformly in
    /// [0, pi/L] when absent.
    pub elev_tx: Option<T>,
    /// Elevation angles RIS->user in radians; drawn uniformly in [0, pi/L]
    /// when absent.
    pub elev_user: Option<Vec<T>>,
    /// Override for the practical-pattern beamwidth exponent.
    pub alpha_override: Option<T>,
    /// RNG seed.
    pub seed: u64,
    /// LSE smoothing scalar.
    pub lse_epsilon: T,
    /// Gradient tolerance / iteration cap / Armijo constants for RCG.
    pub rcg_grad_tol: T,
    pub rcg_max_iters: usize,
    pub armijo_initial: T,
    pub armijo_contraction: T,
    pub armijo_decrease: T,
    /// Cell-sweep settings.
    pub sweep_tol: T,
    pub sweep_max: usize,
    /// Outer-loop settings.
    pub bcd_rel_tol: T,
    pub bcd_max_iters: usize,
    pub qos_max_retries: usize,
    pub qos_shrink: T,
}

impl<T: Scalar> SystemConfig<T> {
    /// Full-scale scenario matching the reference simulation settings
    /// (L = 3, M = 5x4, N = 4, two users per sector, A = 50).
    pub fn full_scale() -> Self {
        Self {
            sectors: 3,
            cells: 20,
            cells_x: 5,
            cells_y: 4,
            tx_antennas: 4,
            users_per_sector: vec![2, 2, 2],
            power_dbm: T::of(35.0),
            noise_dbm: vec![T::of(-90.0)],
            rate_threshold: vec![T::zero()],
            csi_delta: T::of(0.15),
            saa_samples: 50,
            rician_kappa_db: T::zero(),
            freq_hz: T::of(2.4e9),
            dist_tx_ris: T::of(100.0),
            dist_ris_user: vec![T::of(10.0)],
            pathloss_exp_tx: T::of(2.0),
            pathloss_exp_user: T::of(2.0),
            gain_tx: T::one(),
            gain_user: T::one(),
            pattern: RadiationPattern::Idealized,
            elev_tx: None,
            elev_user: None,
            alpha_override: None,
            seed: 1,
            lse_epsilon: T::of(0.1),
            rcg_grad_tol: T::of(1e-6),
            rcg_max_iters: 500,
            armijo_initial: T::one(),
            armijo_contraction: T::of(0.5),
            armijo_decrease: T::of(1e-4),
            sweep_tol: T::of(1e-6),
            sweep_max: 50,
            bcd_rel_tol: T::of(1e-3),
            bcd_max_iters: 100,
            qos_max_retries: 3,
            qos_shrink: T::of(0.5),
        }
    }

    /// Desk-scale scenario: full scale shrunk to M = 4x2 cells and A = 10
    /// samples so sweeps finish in minutes instead of hours.
    pub fn desk_scale() -> Self {
        Self {
            cells: 8,
            cells_x: 4,
            cells_y: 2,
            saa_samples: 10,
            ..Self::full_scale()
        }
    }

    /// Check all invariants, convert dBm fields to watts, resolve drawn
    /// angles, and build the user->sector assignment.
    pub fn validate(&self) -> Result<ValidatedConfig<T>> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.sectors < 1 {
            return bad("sectors must satisfy L >= 1".into());
        }
        if self.cells < 1 {
            return bad("cells must satisfy M >= 1".into());
        }
        if self.cells_x * self.cells_y != self.cells {
            return bad(format!(
                "cells_x * cells_y = {} does not match cells = {}",
                self.cells_x * self.cells_y,
                self.cells
            ));
        }
        if self.tx_antennas < 1 {
            return bad("tx_antennas must satisfy N >= 1".into());
        }
        if self.users_per_sector.len() != self.sectors {
            return bad(format!(
                "users_per_sector has {} entries, expected one per sector ({})",
                self.users_per_sector.len(),
                self.sectors
            ));
        }
        let users: usize = self.users_per_sector.iter().sum();
        if users < 1 {
            return bad("total user count K must satisfy K >= 1".into());
        }
        if !(self.csi_delta >= T::zero() && self.csi_delta < T::one()) {
            return bad(format!("csi_delta = {} outside [0, 1)", self.csi_delta));
        }
        if self.saa_samples < 1 {
            return bad("saa_samples must satisfy A >= 1".into());
        }
        if !(self.lse_epsilon > T::zero()) {
            return bad(format!("lse_epsilon = {} must be positive", self.lse_epsilon));
        }
        if !(self.freq_hz > T::zero()) {
            return bad("freq_hz must be positive".into());
        }
        if !(self.dist_tx_ris > T::zero()) {
            return bad("dist_tx_ris must be positive".into());
        }
        if !(self.gain_tx > T::zero() && self.gain_user > T::zero()) {
            return bad("antenna gains must be positive".into());
        }
        let noise_dbm = broadcast(&self.noise_dbm, users, "noise_dbm")?;
        let rate_threshold = broadcast(&self.rate_threshold, users, "rate_threshold")?;
        let dist_ris_user = broadcast(&self.dist_ris_user, users, "dist_ris_user")?;
        for (k, r) in rate_threshold.iter().enumerate() {
            if !(*r >= T::zero()) {
                return bad(format!("rate_threshold[{k}] = {r} must be non-negative"));
            }
        }
        for (k, d) in dist_ris_user.iter().enumerate() {
            if !(*d > T::zero()) {
                return bad(format!("dist_ris_user[{k}] = {d} must be positive"));
            }
        }
        let sector_span = T::pi() / T::of(self.sectors as f64);
        let mut geom = rng::derive_stream(self.seed, 0, StreamRole::Geometry);
        let elev_tx = match self.elev_tx {
            Some(t) => {
                if !(t >= T::zero() && t <= sector_span) {
                    return bad(format!("elev_tx = {t} outside [0, pi/L]"));
                }
                t
            }
            None => rng::uniform(&mut geom, T::zero(), sector_span),
        };
        let elev_user = match &self.elev_user {
            Some(list) => {
                let list = broadcast(list, users, "elev_user")?;
                for (k, t) in list.iter().enumerate() {
                    if !(*t >= T::zero() && *t <= sector_span) {
                        return bad(format!("elev_user[{k}] = {t} outside [0, pi/L]"));
                    }
                }
                list
            }
            None => (0..users)
                .map(|_| rng::uniform(&mut geom, T::zero(), sector_span))
                .collect(),
        };
        if !(self.rcg_grad_tol > T::zero())
            || !(self.armijo_initial > T::zero())
            || !(self.armijo_decrease > T::zero())
            || !(self.sweep_tol > T::zero())
            || !(self.bcd_rel_tol > T::zero())
        {
            return bad("tolerances must be positive".into());
        }
        if !(self.armijo_contraction > T::zero() && self.armijo_contraction < T::one()) {
            return bad("armijo_contraction must lie in (0, 1)".into());
        }
        if !(self.qos_shrink > T::zero() && self.qos_shrink < T::one()) {
            return bad("qos_shrink must lie in (0, 1)".into());
        }
        if self.rcg_max_iters == 0 || self.sweep_max == 0 || self.bcd_max_iters == 0 {
            return bad("iteration caps must be at least 1".into());
        }
        let alpha = match self.alpha_override {
            Some(a) => {
                if !(a > T::zero()) {
                    return bad(format!("alpha_override = {a} must be positive"));
                }
                Some(a)
            }
            None if self.sectors >= 2 => {
                // Half-power at the sector edge: alpha = ln(1/2) / ln(cos(pi/L)).
                let edge = (T::pi() / T::of(self.sectors as f64)).cos();
                Some(T::of(0.5).ln() / edge.ln())
            }
            None => None,
        };
        if self.pattern == RadiationPattern::Practical && alpha.is_none() {
            return bad(
                "practical pattern with a single sector needs alpha_override \
                 (the half-power rule is degenerate at L = 1)"
                    .into(),
            );
        }

        let mut sector_of = Vec::with_capacity(users);
        let mut users_of = Vec::with_capacity(self.sectors);
        for (l, &count) in self.users_per_sector.iter().enumerate() {
            let start = sector_of.len();
            sector_of.extend(std::iter::repeat(l).take(count));
            users_of.push((start..start + count).collect());
        }

        Ok(ValidatedConfig {
            sectors: self.sectors,
            cells: self.cells,
            cells_x: self.cells_x,
            cells_y: self.cells_y,
            tx_antennas: self.tx_antennas,
            users,
            sector_of,
            users_of,
            power: dbm_to_watt(self.power_dbm),
            noise: noise_dbm.iter().map(|&d| dbm_to_watt(d)).collect(),
            rate_threshold,
            csi_delta: self.csi_delta,
            saa_samples: self.saa_samples,
            kappa: T::of(10.0).powf(self.rician_kappa_db / T::of(10.0)),
            wavelength: T::of(299_792_458.0) / self.freq_hz,
            dist_tx_ris: self.dist_tx_ris,
            dist_ris_user,
            pathloss_exp_tx: self.pathloss_exp_tx,
            pathloss_exp_user: self.pathloss_exp_user,
            gain_tx: self.gain_tx,
            gain_user: self.gain_user,
            pattern: self.pattern,
            elev_tx,
            elev_user,
            alpha,
            seed: self.seed,
            rcg: RcgParams {
                epsilon: self.lse_epsilon,
                grad_tol: self.rcg_grad_tol,
                max_iters: self.rcg_max_iters,
                armijo_initial: self.armijo_initial,
                armijo_contraction: self.armijo_contraction,
                armijo_decrease: self.armijo_decrease,
            },
            sweep: SweepParams {
                tol: self.sweep_tol,
                max_sweeps: self.sweep_max,
            },
            bcd: BcdSettings {
                rel_tol: self.bcd_rel_tol,
                max_iters: self.bcd_max_iters,
                qos_max_retries: self.qos_max_retries,
                qos_shrink: self.qos_shrink,
            },
        })
    }

    /// Parse a flat `key = value` config file. Unknown keys are an error;
    /// keys not present keep the desk-scale defaults.
    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_kv_str(&text)
    }

    /// See [`SystemConfig::from_kv_file`]; parses from a string.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Self::desk_scale();
        cfg.apply_kv_text(text)?;
        Ok(cfg)
    }

    /// Apply `key = value` overrides from a config text onto this config.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.apply_kv(key.trim(), value.trim()).map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sectors" => self.sectors = parse_usize(key, value)?,
            "cells" => self.cells = parse_usize(key, value)?,
            "cells_x" => self.cells_x = parse_usize(key, value)?,
            "cells_y" => self.cells_y = parse_usize(key, value)?,
            "tx_antennas" => self.tx_antennas = parse_usize(key, value)?,
            "users_per_sector" => self.users_per_sector = parse_usize_list(key, value)?,
            "power_dbm" => self.power_dbm = parse_scalar(key, value)?,
            "noise_dbm" => self.noise_dbm = parse_scalar_list(key, value)?,
            "rate_threshold" => self.rate_threshold = parse_scalar_list(key, value)?,
            "csi_delta" => self.csi_delta = parse_scalar(key, value)?,
            "saa_samples" => self.saa_samples = parse_usize(key, value)?,
            "rician_kappa_db" => self.rician_kappa_db = parse_scalar(key, value)?,
            "freq_hz" => self.freq_hz = parse_scalar(key, value)?,
            "dist_tx_ris" => self.dist_tx_ris = parse_scalar(key, value)?,
            "dist_ris_user" => self.dist_ris_user = parse_scalar_list(key, value)?,
            "pathloss_exp_tx" => self.pathloss_exp_tx = parse_scalar(key, value)?,
            "pathloss_exp_user" => self.pathloss_exp_user = parse_scalar(key, value)?,
            "gain_tx" => self.gain_tx = parse_scalar(key, value)?,
            "gain_user" => self.gain_user = parse_scalar(key, value)?,
            "pattern" => {
                self.pattern = match value {
                    "idealized" => RadiationPattern::Idealized,
                    "practical" => RadiationPattern::Practical,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "pattern must be `idealized` or `practical`, got `{other}`"
                        )))
                    }
                }
            }
            "elev_tx" => self.elev_tx = Some(parse_scalar(key, value)?),
            "elev_user" => self.elev_user = Some(parse_scalar_list(key, value)?),
            "alpha_override" => self.alpha_override = Some(parse_scalar(key, value)?),
            "seed" => {
                self.seed = value.parse().map_err(|_| {
                    Error::InvalidConfig(format!("seed: cannot parse `{value}` as u64"))
                })?
            }
            "lse_epsilon" => self.lse_epsilon = parse_scalar(key, value)?,
            "rcg_grad_tol" => self.rcg_grad_tol = parse_scalar(key, value)?,
            "rcg_max_iters" => self.rcg_max_iters = parse_usize(key, value)?,
            "armijo_initial" => self.armijo_initial = parse_scalar(key, value)?,
            "armijo_contraction" => self.armijo_contraction = parse_scalar(key, value)?,
            "armijo_decrease" => self.armijo_decrease = parse_scalar(key, value)?,
            "sweep_tol" => self.sweep_tol = parse_scalar(key, value)?,
            "sweep_max" => self.sweep_max = parse_usize(key, value)?,
            "bcd_rel_tol" => self.bcd_rel_tol = parse_scalar(key, value)?,
            "bcd_max_iters" => self.bcd_max_iters = parse_usize(key, value)?,
            "qos_max_retries" => self.qos_max_retries = parse_usize(key, value)?,
            "qos_shrink" => self.qos_shrink = parse_scalar(key, value)?,
            other => {
                return Err(Error::InvalidConfig(format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }

    /// Render the config back to the flat key-value format.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let join = |v: &[T]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "sectors = {}", self.sectors);
        let _ = writeln!(s, "cells = {}", self.cells);
        let _ = writeln!(s, "cells_x = {}", self.cells_x);
        let _ = writeln!(s, "cells_y = {}", self.cells_y);
        let _ = writeln!(s, "tx_antennas = {}", self.tx_antennas);
        let _ = writeln!(
            s,
            "users_per_sector = {}",
            self.users_per_sector
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(s, "power_dbm = {}", self.power_dbm);
        let _ = writeln!(s, "noise_dbm = {}", join(&self.noise_dbm));
        let _ = writeln!(s, "rate_threshold = {}", join(&self.rate_threshold));
        let _ = writeln!(s, "csi_delta = {}", self.csi_delta);
        let _ = writeln!(s, "saa_samples = {}", self.saa_samples);
        let _ = writeln!(s, "rician_kappa_db = {}", self.rician_kappa_db);
        let _ = writeln!(s, "freq_hz = {}", self.freq_hz);
        let _ = writeln!(s, "dist_tx_ris = {}", self.dist_tx_ris);
        let _ = writeln!(s, "dist_ris_user = {}", join(&self.dist_ris_user));
        let _ = writeln!(s, "pathloss_exp_tx = {}", self.pathloss_exp_tx);
        let _ = writeln!(s, "pathloss_exp_user = {}", self.pathloss_exp_user);
        let _ = writeln!(s, "gain_tx = {}", self.gain_tx);
        let _ = writeln!(s, "gain_user = {}", self.gain_user);
        let _ = writeln!(s, "pattern = {}", self.pattern.name());
        if let Some(t) = self.elev_tx {
            let _ = writeln!(s, "elev_tx = {t}");
        }
        if let Some(list) = &self.elev_user {
            let _ = writeln!(s, "elev_user = {}", join(list));
        }
        if let Some(a) = self.alpha_override {
            let _ = writeln!(s, "alpha_override = {a}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "lse_epsilon = {}", self.lse_epsilon);
        let _ = writeln!(s, "rcg_grad_tol = {}", self.rcg_grad_tol);
        let _ = writeln!(s, "rcg_max_iters = {}", self.rcg_max_iters);
        let _ = writeln!(s, "armijo_initial = {}", self.armijo_initial);
        let _ = writeln!(s, "armijo_contraction = {}", self.armijo_contraction);
        let _ = writeln!(s, "armijo_decrease = {}", self.armijo_decrease);
        let _ = writeln!(s, "sweep_tol = {}", self.sweep_tol);
        let _ = writeln!(s, "sweep_max = {}", self.sweep_max);
        let _ = writeln!(s, "bcd_rel_tol = {}", self.bcd_rel_tol);
        let _ = writeln!(s, "bcd_max_iters = {}", self.bcd_max_iters);
        let _ = writeln!(s, "qos_max_retries = {}", self.qos_max_retries);
        let _ = writeln!(s, "qos_shrink = {}", self.qos_shrink);
        s
    }
}

/// Immutable validated scenario; safe to share read-only across workers.
#[derive(Debug, Clone)]
pub struct ValidatedConfig<T> {
    pub sectors: usize,
    pub cells: usize,
    pub cells_x: usize,
    pub cells_y: usize,
    pub tx_antennas: usize,
    /// Total user count K.
    pub users: usize,
    /// Sector serving each user, length K.
    pub sector_of: Vec<usize>,
    /// Users served by each sector, length L.
    pub users_of: Vec<Vec<usize>>,
    /// Transmit power budget in watts.
    pub power: T,
    /// Per-user noise power in watts.
    pub noise: Vec<T>,
    pub rate_threshold: Vec<T>,
    pub csi_delta: T,
    pub saa_samples: usize,
    /// Linear Rician factor.
    pub kappa: T,
    pub wavelength: T,
    pub dist_tx_ris: T,
    pub dist_ris_user: Vec<T>,
    pub pathloss_exp_tx: T,
    pub pathloss_exp_user: T,
    pub gain_tx: T,
    pub gain_user: T,
    pub pattern: RadiationPattern,
    pub elev_tx: T,
    pub elev_user: Vec<T>,
    /// Practical-pattern beamwidth exponent; `None` only for L = 1 idealized.
    pub alpha: Option<T>,
    pub seed: u64,
    pub rcg: RcgParams<T>,
    pub sweep: SweepParams<T>,
    pub bcd: BcdSettings<T>,
}

fn broadcast<T: Scalar>(list: &[T], n: usize, key: &str) -> Result<Vec<T>> {
    if list.len() == n {
        Ok(list.to_vec())
    } else if list.len() == 1 {
        Ok(vec![list[0]; n])
    } else {
        Err(Error::InvalidConfig(format!(
            "{key} has {} entries, expected 1 or {n}",
            list.len()
        )))
    }
}

/// dBm -> watts.
pub fn dbm_to_watt<T: Scalar>(dbm: T) -> T {
    T::of(10.0).powf(dbm / T::of(10.0)) / T::of(1000.0)
}

/// watts -> dBm.
pub fn watt_to_dbm<T: Scalar>(watt: T) -> T {
    T::of(10.0) * (watt * T::of(1000.0)).ln() * T::log10_e()
}

fn parse_scalar<T: Scalar>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<f64>()
        .map(T::of)
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse `{value}` as a number")))
}

fn parse_scalar_list<T: Scalar>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_scalar(key, v.trim()))
        .collect()
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse `{value}` as an integer")))
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse_usize(key, v.trim())).collect()
}
