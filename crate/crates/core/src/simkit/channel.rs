//! Channel generation: a ray-sum reference channel and seeded small
//! perturbations around it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{complex_gaussian, real, CMatrix, C64};
use crate::model::steering_vector;

/// Inclusive range of propagation paths per user.
pub const PATH_RANGE: (usize, usize) = (60, 100);

/// SplitMix64 finalizer applied to `master + (index + 1)·γ`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reference channel and the number of paths drawn for each user.
#[derive(Debug, Clone, PartialEq)]
pub struct RayChannel {
    pub h: CMatrix,
    pub paths: Vec<usize>,
}

/// Ray-sum channel: user row `k` is `(1/√P_k)·Σ_p g_p·a(φ_p)ᵀ` with
/// `P_k ~ U{60..100}`, `g_p ~ CN(0, 1)` and `φ_p ~ U[−90°, 90°]`.
pub fn make_href_detailed(users: usize, antennas: usize, seed: u64) -> RayChannel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMatrix::zeros(users, antennas);
    let mut paths = Vec::with_capacity(users);
    for k in 0..users {
        let p = rng.random_range(PATH_RANGE.0..=PATH_RANGE.1);
        paths.push(p);
        let gains = complex_gaussian(&mut rng, p, 1);
        let mut row = CMatrix::zeros(1, antennas);
        for g in gains.iter() {
            let phi = rng.random_range(-90.0..=90.0);
            row += steering_vector(antennas, phi).transpose() * *g;
        }
        h.set_row(k, &(row.row(0) * real(1.0 / (p as f64).sqrt())));
    }
    RayChannel { h, paths }
}

pub fn make_href(users: usize, antennas: usize, seed: u64) -> CMatrix {
    make_href_detailed(users, antennas, seed).h
}

/// `H̄ = H_ref + εΔ₂` (fixed per experiment) and `H₀ = H_ref + εΔ₁` (redrawn
/// per episode), with `Δ` entry-wise standard complex Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationModel {
    pub h_ref: CMatrix,
    pub epsilon: f64,
    pub seed: u64,
    h_bar: CMatrix,
}

impl PerturbationModel {
    pub fn new(h_ref: CMatrix, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon", format!("must be finite and nonnegative, got {epsilon}")));
        }
        let h_bar = perturb(&h_ref, epsilon, derive_seed(seed, u64::MAX));
        Ok(Self { h_ref, epsilon, seed, h_bar })
    }

    pub fn h_bar(&self) -> &CMatrix {
        &self.h_bar
    }

    /// True channel of `episode`, a pure function of `(seed, episode)`.
    pub fn h_true(&self, episode: u64) -> CMatrix {
        perturb(&self.h_ref, self.epsilon, derive_seed(self.seed, episode))
    }
}

fn perturb(h_ref: &CMatrix, epsilon: f64, seed: u64) -> CMatrix {
    if epsilon == 0.0 {
        return h_ref.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = complex_gaussian(&mut rng, h_ref.nrows(), h_ref.ncols());
    h_ref + delta * C64::new(epsilon, 0.0)
}

/// `(H₀, H̄)` for one episode.
pub fn generate_channels(model: &PerturbationModel, episode: u64) -> (CMatrix, CMatrix) {
    (model.h_true(episode), model.h_bar.clone())
}

/// Serializable description of how channels were produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub epsilon: f64,
    pub href_seed: u64,
    pub perturbation_seed: u64,
}
