//! Channel generation: Rician small-scale fading, sector path loss,
//! cascaded transmitter->RIS->user matrices, and SAA sample sets with
//! injected CSI errors.

use crate::config::{RadiationPattern, ValidatedConfig};
use crate::error::{Error, Result};
use crate::rng::{standard_cgauss, uniform};
use crate::scalar::Scalar;
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use std::io::{Read, Write};

/// One draw of the physical channel.
#[derive(Debug, Clone)]
pub struct ChannelRealization<T> {
    /// Small-scale transmitter->RIS channel, `cells x tx_antennas`.
    pub ris_tx: DMatrix<Complex<T>>,
    /// Small-scale RIS->user channels, one length-`cells` vector per user.
    pub ris_user: Vec<DVector<Complex<T>>>,
    /// Per-user path loss (linear attenuation denominator).
    pub path_loss: Vec<T>,
}

/// Channel estimate plus SAA samples available to the transmitter.
#[derive(Debug, Clone)]
pub struct CsiSampleSet<T> {
    /// Estimates Q-hat, one `tx_antennas x cells` matrix per user.
    pub estimate: Vec<DMatrix<Complex<T>>>,
    /// Perfect cascaded channels, held out for evaluation only.
    pub perfect: Vec<DMatrix<Complex<T>>>,
    /// SAA samples, `samples[k][a]`.
    pub samples: Vec<Vec<DMatrix<Complex<T>>>>,
    /// Per-user error variance (per complex entry).
    pub error_var: Vec<T>,
}

/// Path loss of user `k` for the configured radiation pattern.
///
/// Idealized: rho * (1 - cos(pi/L))^2.
/// Practical: rho / ((alpha+1)^2 * (cos(elev_tx) cos(elev_user))^alpha),
/// with rho = 4^3 pi^4 d_it^e_it d_iu^e_iu / (lambda^4 G_t G_u).
pub fn path_loss<T: Scalar>(cfg: &ValidatedConfig<T>, k: usize) -> Result<T> {
    let four = T::of(4.0);
    let rho = four.powi(3)
        * T::pi().powi(4)
        * cfg.dist_tx_ris.powf(cfg.pathloss_exp_tx)
        * cfg.dist_ris_user[k].powf(cfg.pathloss_exp_user)
        / (cfg.wavelength.powi(4) * cfg.gain_tx * cfg.gain_user);
    match cfg.pattern {
        RadiationPattern::Idealized => {
            let f = T::one() - (T::pi() / T::of(cfg.sectors as f64)).cos();
            Ok(rho * f * f)
        }
        RadiationPattern::Practical => {
            let alpha = cfg
                .alpha
                .expect("validation guarantees alpha for the practical pattern");
            let c = cfg.elev_tx.cos() * cfg.elev_user[k].cos();
            if !(c > T::zero()) {
                return Err(Error::DegenerateGeometry(format!(
                    "cos(elev_tx) * cos(elev_user[{k}]) = {c} is non-positive"
                )));
            }
            let a1 = alpha + T::one();
            Ok(rho / (a1 * a1 * c.powf(alpha)))
        }
    }
}

/// Uniform-linear-array response with half-wavelength spacing.
fn ula_response<T: Scalar>(n: usize, sin_angle: T) -> DVector<Complex<T>> {
    DVector::from_fn(n, |i, _| {
        let phase = T::pi() * T::of(i as f64) * sin_angle;
        Complex::new(phase.cos(), phase.sin())
    })
}

/// Uniform-planar-array response (nx x ny elements, half-wavelength grid).
fn upa_response<T: Scalar>(nx: usize, ny: usize, azimuth: T, elevation: T) -> DVector<Complex<T>> {
    let u = elevation.sin() * azimuth.cos();
    let v = elevation.sin() * azimuth.sin();
    DVector::from_fn(nx * ny, |i, _| {
        let ix = T::of((i / ny) as f64);
        let iy = T::of((i % ny) as f64);
        let phase = T::pi() * (ix * u + iy * v);
        Complex::new(phase.cos(), phase.sin())
    })
}

/// Rician mixture sqrt(k/(k+1)) los + sqrt(1/(k+1)) nlos.
fn rician_mix<T: Scalar>(
    kappa: T,
    los: DMatrix<Complex<T>>,
    nlos: DMatrix<Complex<T>>,
) -> DMatrix<Complex<T>> {
    let w_los = (kappa / (kappa + T::one())).sqrt();
    let w_nlos = (T::one() / (kappa + T::one())).sqrt();
    los * Complex::new(w_los, T::zero()) + nlos * Complex::new(w_nlos, T::zero())
}

/// Draw one channel realization. LoS terms are rank-one array-response
/// outer products with angles drawn uniformly within the sector coverage;
/// NLoS entries are i.i.d. unit-variance CSCG.
pub fn gen_realization<T: Scalar, R: Rng + ?Sized>(
    cfg: &ValidatedConfig<T>,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    let m = cfg.cells;
    let n = cfg.tx_antennas;
    let span = T::pi() / T::of(cfg.sectors as f64);

    // Transmitter->RIS link (sector 1 faces the transmitter).
    let az = uniform(rng, -span, span);
    let el = uniform(rng, T::zero(), span);
    let dep = uniform(rng, -T::frac_pi_2(), T::frac_pi_2());
    let a_ris = upa_response(cfg.cells_x, cfg.cells_y, az, el);
    let a_tx = ula_response(n, dep.sin());
    let g_los = DMatrix::from_fn(m, n, |r, c| a_ris[r] * a_tx[c]);
    let g_nlos = DMatrix::from_fn(m, n, |_, _| standard_cgauss::<T, _>(rng));
    let ris_tx = rician_mix(cfg.kappa, g_los, g_nlos);

    let mut ris_user = Vec::with_capacity(cfg.users);
    let mut loss = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let az = uniform(rng, -span, span);
        let el = uniform(rng, T::zero(), span);
        let h_los = upa_response(cfg.cells_x, cfg.cells_y, az, el);
        let h_nlos = DVector::from_fn(m, |_, _| standard_cgauss::<T, _>(rng));
        let mixed = rician_mix(
            cfg.kappa,
            DMatrix::from_column_slice(m, 1, h_los.as_slice()),
            DMatrix::from_column_slice(m, 1, h_nlos.as_slice()),
        );
        ris_user.push(DVector::from_column_slice(mixed.as_slice()));
        loss.push(path_loss(cfg, k)?);
    }

    Ok(ChannelRealization {
        ris_tx,
        ris_user,
        path_loss: loss,
    })
}

/// Cascaded channel of user `k`: sqrt(1/zeta_k) * G^H * diag(h_k),
/// an `tx_antennas x cells` matrix.
pub fn cascade<T: Scalar>(real: &ChannelRealization<T>, k: usize) -> DMatrix<Complex<T>> {
    let g = &real.ris_tx;
    let h = &real.ris_user[k];
    let scale = (T::one() / real.path_loss[k]).sqrt();
    let (m, n) = g.shape();
    DMatrix::from_fn(n, m, |row, col| {
        g[(col, row)].conj() * h[col] * Complex::new(scale, T::zero())
    })
}

/// Build the transmitter-side CSI: estimate, held-out perfect channel, and
/// `A` perturbed samples per user, all with per-entry error variance
/// `zeta_k^{-1} * delta^2`.
pub fn draw_sample_set<T: Scalar, R: Rng + ?Sized>(
    real: &ChannelRealization<T>,
    cfg: &ValidatedConfig<T>,
    rng: &mut R,
) -> CsiSampleSet<T> {
    let n = cfg.tx_antennas;
    let m = cfg.cells;
    let mut perfect = Vec::with_capacity(cfg.users);
    let mut estimate = Vec::with_capacity(cfg.users);
    let mut error_var = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let q = cascade(real, k);
        let var = cfg.csi_delta * cfg.csi_delta / real.path_loss[k];
        let std = var.sqrt();
        let err = DMatrix::from_fn(n, m, |_, _| {
            standard_cgauss::<T, _>(rng) * Complex::new(std, T::zero())
        });
        estimate.push(&q - &err);
        perfect.push(q);
        error_var.push(var);
    }
    let mut samples = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let std = error_var[k].sqrt();
        let mut per_user = Vec::with_capacity(cfg.saa_samples);
        for _ in 0..cfg.saa_samples {
            let err = DMatrix::from_fn(n, m, |_, _| {
                standard_cgauss::<T, _>(rng) * Complex::new(std, T::zero())
            });
            per_user.push(&estimate[k] + err);
        }
        samples.push(per_user);
    }
    CsiSampleSet {
        estimate,
        perfect,
        samples,
        error_var,
    }
}

impl<T: Scalar> CsiSampleSet<T> {
    pub fn users(&self) -> usize {
        self.estimate.len()
    }

    pub fn sample_count(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }

    /// Serialize to the documented little-endian layout:
    /// header `u64 x 4` = (users, samples, tx_antennas, cells), then per user
    /// the error variance as `f64`, then per user the perfect matrix, the
    /// estimate, and the A samples, each row-major as interleaved re/im `f64`.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let k = self.users();
        let a = self.sample_count();
        let (n, m) = self
            .estimate
            .first()
            .map(|q| q.shape())
            .unwrap_or((0, 0));
        for dim in [k as u64, a as u64, n as u64, m as u64] {
            w.write_all(&dim.to_le_bytes())?;
        }
        for v in &self.error_var {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
        let write_mat = |w: &mut W, q: &DMatrix<Complex<T>>| -> Result<()> {
            for r in 0..q.nrows() {
                for c in 0..q.ncols() {
                    w.write_all(&q[(r, c)].re.as_f64().to_le_bytes())?;
                    w.write_all(&q[(r, c)].im.as_f64().to_le_bytes())?;
                }
            }
            Ok(())
        };
        for k_idx in 0..k {
            write_mat(w, &self.perfect[k_idx])?;
            write_mat(w, &self.estimate[k_idx])?;
            for s in &self.samples[k_idx] {
                write_mat(w, s)?;
            }
        }
        Ok(())
    }

    /// Inverse of [`CsiSampleSet::write_to`].
    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut u64buf = [0u8; 8];
        let mut dims = [0u64; 4];
        for d in &mut dims {
            r.read_exact(&mut u64buf)?;
            *d = u64::from_le_bytes(u64buf);
        }
        let [k, a, n, m] = dims.map(|d| d as usize);
        if k == 0 || n == 0 || m == 0 {
            return Err(Error::MalformedDump("zero dimension in header".into()));
        }
        let mut error_var = Vec::with_capacity(k);
        for _ in 0..k {
            r.read_exact(&mut u64buf)?;
            error_var.push(T::of(f64::from_le_bytes(u64buf)));
        }
        let mut read_mat = |r: &mut R| -> Result<DMatrix<Complex<T>>> {
            let mut q = DMatrix::zeros(n, m);
            for row in 0..n {
                for col in 0..m {
                    r.read_exact(&mut u64buf)?;
                    let re = f64::from_le_bytes(u64buf);
                    r.read_exact(&mut u64buf)?;
                    let im = f64::from_le_bytes(u64buf);
                    q[(row, col)] = Complex::new(T::of(re), T::of(im));
                }
            }
            Ok(q)
        };
        let mut perfect = Vec::with_capacity(k);
        let mut estimate = Vec::with_capacity(k);
        let mut samples = Vec::with_capacity(k);
        for _ in 0..k {
            perfect.push(read_mat(r)?);
            estimate.push(read_mat(r)?);
            let mut per_user = Vec::with_capacity(a);
            for _ in 0..a {
                per_user.push(read_mat(r)?);
            }
            samples.push(per_user);
        }
        Ok(Self {
            estimate,
            perfect,
            samples,
            error_var,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::rng::{derive_stream, StreamRole};
    use approx::assert_relative_eq;

    fn small_cfg() -> ValidatedConfig<f64> {
        let mut cfg = SystemConfig::<f64>::desk_scale();
        cfg.sectors = 3;
        cfg.cells = 4;
        cfg.cells_x = 2;
        cfg.cells_y = 2;
        cfg.tx_antennas = 2;
        cfg.users_per_sector = vec![1, 1, 1];
        cfg.saa_samples = 3;
        cfg.validate().unwrap()
    }

    #[test]
    fn idealized_path_loss_is_quarter_rho_for_three_sectors() {
        let cfg = small_cfg();
        // (1 - cos(pi/3))^2 = 1/4
        let zeta = path_loss(&cfg, 0).unwrap();
        let rho = 64.0
            * std::f64::consts::PI.powi(4)
            * cfg.dist_tx_ris.powf(2.0)
            * cfg.dist_ris_user[0].powf(2.0)
            / cfg.wavelength.powi(4);
        assert_relative_eq!(zeta, 0.25 * rho, max_relative = 1e-14);
    }

    #[test]
    fn practical_path_loss_at_zero_elevation() {
        let mut raw = SystemConfig::<f64>::desk_scale();
        raw.pattern = RadiationPattern::Practical;
        raw.elev_tx = Some(0.0);
        raw.elev_user = Some(vec![0.0]);
        raw.users_per_sector = vec![1, 0, 0];
        let cfg = raw.validate().unwrap();
        let alpha = cfg.alpha.unwrap();
        // cos(0) = 1 so the angular term vanishes.
        let zeta = path_loss(&cfg, 0).unwrap();
        let rho = 64.0
            * std::f64::consts::PI.powi(4)
            * cfg.dist_tx_ris.powf(2.0)
            * cfg.dist_ris_user[0].powf(2.0)
            / cfg.wavelength.powi(4);
        assert_relative_eq!(zeta, rho / (alpha + 1.0).powi(2), max_relative = 1e-14);
        // L = 3 half-power rule gives alpha = 1.
        assert_relative_eq!(alpha, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn idealized_ignores_elevation() {
        let mut raw = SystemConfig::<f64>::desk_scale();
        raw.users_per_sector = vec![1, 0, 0];
        raw.elev_tx = Some(0.3);
        raw.elev_user = Some(vec![0.7]);
        let a = raw.clone().validate().unwrap();
        raw.elev_tx = Some(1.0);
        raw.elev_user = Some(vec![0.1]);
        let b = raw.validate().unwrap();
        assert_eq!(path_loss(&a, 0).unwrap(), path_loss(&b, 0).unwrap());
    }

    #[test]
    fn pure_los_has_unit_modulus_entries() {
        let mut raw = SystemConfig::<f64>::desk_scale();
        raw.rician_kappa_db = 60.0; // kappa = 1e6
        raw.users_per_sector = vec![1, 1, 1];
        raw.cells = 4;
        raw.cells_x = 2;
        raw.cells_y = 2;
        raw.tx_antennas = 2;
        let cfg = raw.validate().unwrap();
        let mut rng = derive_stream(5, 0, StreamRole::Fading);
        let real = gen_realization(&cfg, &mut rng).unwrap();
        for v in real.ris_tx.iter() {
            assert_relative_eq!(v.norm(), 1.0, epsilon = 2e-3);
        }
        for h in &real.ris_user {
            for v in h.iter() {
                assert_relative_eq!(v.norm(), 1.0, epsilon = 2e-3);
            }
        }
    }

    #[test]
    fn zero_kappa_is_pure_nlos() {
        let los = DMatrix::from_element(2, 2, Complex::new(1.0, 0.0));
        let nlos = DMatrix::from_element(2, 2, Complex::new(0.3, -0.4));
        let mixed = rician_mix(0.0, los, nlos.clone());
        assert_eq!(mixed, nlos);
    }

    #[test]
    fn unit_kappa_entry_variance_near_one() {
        let cfg = small_cfg();
        let mut rng = derive_stream(9, 0, StreamRole::Fading);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..2_000 {
            let real = gen_realization(&cfg, &mut rng).unwrap();
            for v in real.ris_tx.iter() {
                acc += v.norm_sqr();
                count += 1;
            }
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.05, "per-entry second moment {var}");
    }

    #[test]
    fn cascade_identity_case() {
        let real = ChannelRealization {
            ris_tx: DMatrix::identity(2, 2),
            ris_user: vec![DVector::from_element(2, Complex::new(1.0, 0.0))],
            path_loss: vec![1.0],
        };
        let q = cascade(&real, 0);
        assert_relative_eq!((q - DMatrix::identity(2, 2)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn cascade_scales_with_inverse_sqrt_loss() {
        let mut rng = derive_stream(2, 0, StreamRole::Fading);
        let base = ChannelRealization {
            ris_tx: DMatrix::from_fn(3, 2, |_, _| standard_cgauss::<f64, _>(&mut rng)),
            ris_user: vec![DVector::from_fn(3, |_, _| standard_cgauss::<f64, _>(&mut rng))],
            path_loss: vec![1.0],
        };
        let scaled = ChannelRealization {
            path_loss: vec![4.0],
            ..base.clone()
        };
        let q1 = cascade(&base, 0);
        let q4 = cascade(&scaled, 0);
        assert_relative_eq!(
            (q4 * Complex::new(2.0, 0.0) - q1).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn cascade_matches_indexwise_oracle() {
        let mut rng = derive_stream(3, 0, StreamRole::Fading);
        let g = DMatrix::from_fn(3, 2, |_, _| standard_cgauss::<f64, _>(&mut rng));
        let h = DVector::from_fn(3, |_, _| standard_cgauss::<f64, _>(&mut rng));
        let zeta = 2.5;
        let real = ChannelRealization {
            ris_tx: g.clone(),
            ris_user: vec![h.clone()],
            path_loss: vec![zeta],
        };
        let q = cascade(&real, 0);
        for n in 0..2 {
            for m in 0..3 {
                let want = (1.0 / zeta).sqrt() * g[(m, n)].conj() * h[m];
                assert_relative_eq!((q[(n, m)] - want).norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn zero_delta_gives_exact_estimates() {
        let mut raw = SystemConfig::<f64>::desk_scale();
        raw.csi_delta = 0.0;
        raw.cells = 4;
        raw.cells_x = 2;
        raw.cells_y = 2;
        raw.tx_antennas = 2;
        raw.saa_samples = 3;
        let cfg = raw.validate().unwrap();
        let mut rng = derive_stream(4, 0, StreamRole::Fading);
        let real = gen_realization(&cfg, &mut rng).unwrap();
        let mut rng_err = derive_stream(4, 0, StreamRole::CsiError);
        let set = draw_sample_set(&real, &cfg, &mut rng_err);
        for k in 0..cfg.users {
            assert_eq!(set.estimate[k], set.perfect[k]);
            for s in &set.samples[k] {
                assert_eq!(*s, set.estimate[k]);
            }
        }
    }

    #[test]
    fn single_sample_set() {
        let mut raw = SystemConfig::<f64>::desk_scale();
        raw.saa_samples = 1;
        raw.cells = 4;
        raw.cells_x = 2;
        raw.cells_y = 2;
        let cfg = raw.validate().unwrap();
        let mut rng = derive_stream(4, 1, StreamRole::Fading);
        let real = gen_realization(&cfg, &mut rng).unwrap();
        let mut rng_err = derive_stream(4, 1, StreamRole::CsiError);
        let set = draw_sample_set(&real, &cfg, &mut rng_err);
        for k in 0..cfg.users {
            assert_eq!(set.samples[k].len(), 1);
        }
    }

    #[test]
    fn error_variance_scaling_is_exact() {
        let cfg = small_cfg();
        let mut rng = derive_stream(6, 0, StreamRole::Fading);
        let real = gen_realization(&cfg, &mut rng).unwrap();
        let mut rng_err = derive_stream(6, 0, StreamRole::CsiError);
        let set = draw_sample_set(&real, &cfg, &mut rng_err);
        for k in 0..cfg.users {
            let want = cfg.csi_delta * cfg.csi_delta / real.path_loss[k];
            assert_eq!(set.error_var[k], want);
        }
    }

    #[test]
    fn sample_sets_deterministic_for_fixed_stream() {
        let cfg = small_cfg();
        let draw = || {
            let mut rng = derive_stream(8, 2, StreamRole::Fading);
            let real = gen_realization(&cfg, &mut rng).unwrap();
            let mut rng_err = derive_stream(8, 2, StreamRole::CsiError);
            draw_sample_set(&real, &cfg, &mut rng_err)
        };
        let a = draw();
        let b = draw();
        for k in 0..cfg.users {
            assert_eq!(a.estimate[k], b.estimate[k]);
            assert_eq!(a.samples[k], b.samples[k]);
        }
    }

    #[test]
    fn dump_round_trip() {
        let cfg = small_cfg();
        let mut rng = derive_stream(10, 0, StreamRole::Fading);
        let real = gen_realization(&cfg, &mut rng).unwrap();
        let mut rng_err = derive_stream(10, 0, StreamRole::CsiError);
        let set = draw_sample_set(&real, &cfg, &mut rng_err);
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        let back = CsiSampleSet::<f64>::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.users(), set.users());
        assert_eq!(back.sample_count(), set.sample_count());
        for k in 0..set.users() {
            assert_eq!(back.perfect[k], set.perfect[k]);
            assert_eq!(back.estimate[k], set.estimate[k]);
            assert_eq!(back.samples[k], set.samples[k]);
            assert_eq!(back.error_var[k], set.error_var[k]);
        }
    }

    #[test]
    fn truncated_dump_is_rejected() {
        let cfg = small_cfg();
        let mut rng = derive_stream(10, 0, StreamRole::Fading);
        let real = gen_realization(&cfg, &mut rng).unwrap();
        let mut rng_err = derive_stream(10, 0, StreamRole::CsiError);
        let set = draw_sample_set(&real, &cfg, &mut rng_err);
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() / 2);
        assert!(CsiSampleSet::<f64>::read_from(&mut buf.as_slice()).is_err());
    }
}
