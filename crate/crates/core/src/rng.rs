//! Deterministic random-stream derivation and complex Gaussian sampling.
//!
//! Every stochastic operation takes an explicit stream. Streams are derived
//! from `(seed, realization index, role)` so that independent realizations,
//! and independent roles within one realization (fading draws, CSI error
//! draws, initialization phases), never share state. All raw draws happen in
//! `f64` and are then lifted into the working scalar type, so `f32` and
//! `f64` builds consume identical underlying sequences.

use crate::scalar::Scalar;
use nalgebra::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

/// Independent sub-stream roles within one channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    /// Small-scale fading and line-of-sight angle draws.
    Fading,
    /// CSI estimation-error draws (estimate error and SAA samples).
    CsiError,
    /// BD-RIS phase initialization.
    Init,
    /// Scenario geometry drawn at config validation (elevation angles).
    Geometry,
}

impl StreamRole {
    fn id(self) -> u64 {
        match self {
            StreamRole::Fading => 0,
            StreamRole::CsiError => 1,
            StreamRole::Init => 2,
            StreamRole::Geometry => 3,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the stream for `(seed, realization, role)`.
///
/// The key is expanded with splitmix64 so nearby seeds or indices do not
/// produce correlated ChaCha keys; the role selects a ChaCha stream on top.
pub fn derive_stream(seed: u64, realization: u64, role: StreamRole) -> ChaCha12Rng {
    let mut state = seed ^ 0x243f_6a88_85a3_08d3;
    let a = splitmix64(&mut state);
    state ^= realization.wrapping_mul(0x1000_0000_01b3);
    let b = splitmix64(&mut state);
    let c = splitmix64(&mut state);
    let d = splitmix64(&mut state);
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    key[24..32].copy_from_slice(&d.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(role.id());
    rng
}

/// Standard real Gaussian, drawn in `f64` and lifted to `T`.
pub fn standard_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    let x: f64 = StandardNormal.sample(rng);
    T::of(x)
}

/// Circularly-symmetric complex Gaussian with unit per-entry variance:
/// two independent real Gaussians of variance 1/2 per component.
pub fn standard_cgauss<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(T::of(re * half), T::of(im * half))
}

/// Uniform draw on `[lo, hi)`, sampled in `f64`.
pub fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::of(u)
}
