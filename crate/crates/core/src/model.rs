//! System configuration, uncertainty sets and performance metrics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, invalid, IsacError, Result};
use crate::linalg::{fro, fro2, min_eigenvalue, real, shape, CMatrix, CVector, C64};

/// Dimensions and power budget of the dual-functional transmitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub users: usize,
    pub antennas: usize,
    pub frame_length: usize,
    pub power_watts: f64,
    pub noise_watts: f64,
    #[serde(default = "default_symbol_power")]
    pub symbol_power: f64,
    #[serde(default)]
    pub carrier_hz: Option<f64>,
}

fn default_symbol_power() -> f64 {
    1.0
}

impl SystemConfig {
    /// K = 4 users, N = 16 antennas, L = 30 symbols, 2.5 W, 0.25 W noise.
    pub fn reference() -> Self {
        Self {
            users: 4,
            antennas: 16,
            frame_length: 30,
            power_watts: 2.5,
            noise_watts: 0.25,
            symbol_power: 1.0,
            carrier_hz: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(invalid("users", "must be at least 1"));
        }
        if self.users > self.antennas {
            return Err(invalid("antennas", format!("must be >= users ({}), got {}", self.users, self.antennas)));
        }
        if self.antennas > self.frame_length {
            return Err(invalid(
                "frame_length",
                format!("must be >= antennas ({}), got {}", self.antennas, self.frame_length),
            ));
        }
        if !(self.power_watts > 0.0 && self.power_watts.is_finite()) {
            return Err(invalid("power_watts", format!("must be positive, got {}", self.power_watts)));
        }
        if !(self.noise_watts > 0.0 && self.noise_watts.is_finite()) {
            return Err(invalid("noise_watts", format!("must be positive, got {}", self.noise_watts)));
        }
        if !(self.symbol_power > 0.0 && self.symbol_power.is_finite()) {
            return Err(invalid("symbol_power", format!("must be positive, got {}", self.symbol_power)));
        }
        Ok(())
    }

    pub fn l(&self) -> f64 {
        self.frame_length as f64
    }
}

/// Hermitian positive-definite transmit covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCovariance {
    r: CMatrix,
}

impl SpatialCovariance {
    pub fn new(r: CMatrix) -> Result<Self> {
        if !r.is_square() {
            return Err(dim_mismatch("SpatialCovariance", "square matrix", shape(&r)));
        }
        let herm_err = fro(&(&r - r.adjoint()));
        if herm_err > 1e-12 * fro(&r).max(1.0) {
            return Err(invalid("covariance", format!("not Hermitian (asymmetry {herm_err:e})")));
        }
        let r = (&r + r.adjoint()) * real(0.5);
        let min_eigenvalue = min_eigenvalue(&r);
        if !(min_eigenvalue > 0.0) {
            return Err(IsacError::NotPositiveDefinite { min_eigenvalue });
        }
        Ok(Self { r })
    }

    /// `(P_T/N)·I`.
    pub fn omnidirectional(antennas: usize, power: f64) -> Result<Self> {
        Self::new(CMatrix::identity(antennas, antennas) * real(power / antennas as f64))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.r.trace().re
    }
}

/// Norm defining the uncertainty ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    /// Frobenius norm, i.e. the 2-norm of the stacked real vector.
    #[default]
    Frobenius,
    /// Largest absolute real or imaginary part of any entry.
    EntryInfinity,
}

impl NormKind {
    pub fn norm(self, h: &CMatrix) -> f64 {
        match self {
            NormKind::Frobenius => fro(h),
            NormKind::EntryInfinity => h.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max),
        }
    }

    /// Constant `B` with `‖H‖_F ≤ B·‖H‖` for K×N channels.
    pub fn b_constant(self, users: usize, antennas: usize) -> f64 {
        match self {
            NormKind::Frobenius => 1.0,
            NormKind::EntryInfinity => ((2 * users * antennas) as f64).sqrt(),
        }
    }
}

/// Norm ball of channels `{H : ‖H − H̄‖ ≤ β·θ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySet {
    pub center: CMatrix,
    pub radius: f64,
    pub budget: f64,
    pub norm: NormKind,
}

impl UncertaintySet {
    pub fn new(center: CMatrix, radius: f64, budget: f64, norm: NormKind) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid("theta", format!("must be finite and nonnegative, got {radius}")));
        }
        if !(0.0..=1.0).contains(&budget) {
            return Err(invalid("budget", format!("must lie in [0, 1], got {budget}")));
        }
        Ok(Self { center, radius, budget, norm })
    }

    pub fn effective_radius(&self) -> f64 {
        self.budget * self.radius
    }

    pub fn distance(&self, h: &CMatrix) -> f64 {
        self.norm.norm(&(h - &self.center))
    }

    /// Ball membership with a 1e-12 relative allowance for boundary points.
    pub fn contains(&self, h: &CMatrix) -> bool {
        h.shape() == self.center.shape() && self.distance(h) <= self.effective_radius() * (1.0 + 1e-12)
    }
}

pub fn membership(set: &UncertaintySet, h: &CMatrix) -> bool {
    set.contains(h)
}

fn check_dims(op: &'static str, h: &CMatrix, x: &CMatrix, s: &CMatrix) -> Result<()> {
    if h.ncols() != x.nrows() || s.shape() != (h.nrows(), x.ncols()) {
        return Err(dim_mismatch(
            op,
            "H: KxN, X: NxL, S: KxL",
            format!("H: {}, X: {}, S: {}", shape(h), shape(x), shape(s)),
        ));
    }
    Ok(())
}

/// `‖HX − S‖²_F`.
pub fn mui_energy(h: &CMatrix, x: &CMatrix, s: &CMatrix) -> Result<f64> {
    check_dims("mui_energy", h, x, s)?;
    Ok(fro2(&(h * x - s)))
}

/// SINR of user `k` (0-based).
pub fn sinr_per_user(h: &CMatrix, x: &CMatrix, s: &CMatrix, noise: f64, k: usize) -> Result<f64> {
    check_dims("sinr_per_user", h, x, s)?;
    if k >= h.nrows() {
        return Err(invalid("user", format!("index {k} out of range for {} users", h.nrows())));
    }
    Ok(sinr_row(h, x, s, noise, k))
}

fn sinr_row(h: &CMatrix, x: &CMatrix, s: &CMatrix, noise: f64, k: usize) -> f64 {
    let l = x.ncols() as f64;
    let received = h.row(k) * x;
    let signal: f64 = s.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>() / l;
    let mui: f64 = (received - s.row(k)).iter().map(|z| z.norm_sqr()).sum::<f64>() / l;
    signal / (mui + noise)
}

/// SINR of every user.
pub fn sinr_all(h: &CMatrix, x: &CMatrix, s: &CMatrix, noise: f64) -> Result<Vec<f64>> {
    check_dims("sinr_all", h, x, s)?;
    Ok((0..h.nrows()).map(|k| sinr_row(h, x, s, noise, k)).collect())
}

/// Average achievable sum-rate in bps/Hz/user.
pub fn aasr(h: &CMatrix, x: &CMatrix, s: &CMatrix, noise: f64) -> Result<f64> {
    let gammas = sinr_all(h, x, s, noise)?;
    Ok(gammas.iter().map(|g| (1.0 + g).log2()).sum::<f64>() / gammas.len() as f64)
}

/// Half-wavelength ULA steering vector `[e^{jπ n sin φ}]_n`.
pub fn steering_vector(antennas: usize, azimuth_deg: f64) -> CVector {
    let phase = std::f64::consts::PI * azimuth_deg.to_radians().sin();
    CVector::from_fn(antennas, |n, _| C64::from_polar(1.0, phase * n as f64))
}

/// Transmit beampattern `a(φ)^H R a(φ)` at each azimuth (degrees).
pub fn beampattern(r: &CMatrix, azimuths_deg: &[f64]) -> Vec<f64> {
    azimuths_deg
        .iter()
        .map(|&phi| {
            let a = steering_vector(r.nrows(), phi);
            a.dotc(&(r * &a)).re.max(0.0)
        })
        .collect()
}

/// Feasible-set description for a waveform.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerConstraint {
    /// `‖X‖²_F / L = P_T`.
    Total,
    /// `(XX^H)_nn = L·P_T/N` for every antenna.
    PerAntenna,
    /// `XX^H = L·R`.
    Covariance(CMatrix),
}

impl PowerConstraint {
    pub fn name(&self) -> &'static str {
        match self {
            PowerConstraint::Total => "TPC",
            PowerConstraint::PerAntenna => "PAPC",
            PowerConstraint::Covariance(_) => "COVARIANCE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCheck {
    pub satisfied: bool,
    pub residual: f64,
}

/// Checks a waveform against its power constraint. TPC and PAPC residuals are
/// absolute; the covariance residual is relative to `‖L·R‖_F`.
pub fn check_power(x: &CMatrix, mode: &PowerConstraint, power: f64, tol: f64) -> PowerCheck {
    let l = x.ncols() as f64;
    let n = x.nrows() as f64;
    let residual = match mode {
        PowerConstraint::Total => (fro2(x) / l - power).abs(),
        PowerConstraint::PerAntenna => {
            let target = l * power / n;
            x.row_iter()
                .map(|row| (row.iter().map(|z| z.norm_sqr()).sum::<f64>() - target).abs())
                .fold(0.0, f64::max)
        }
        PowerConstraint::Covariance(r) => {
            if r.shape() != (x.nrows(), x.nrows()) {
                f64::INFINITY
            } else {
                let target = r * real(l);
                fro(&(x * x.adjoint() - &target)) / fro(&target).max(f64::MIN_POSITIVE)
            }
        }
    };
    PowerCheck { satisfied: residual <= tol, residual }
}

/// K×L QPSK symbols `(±1 ± j)·√(P_s/2)`.
pub fn qpsk_constellation<R: Rng + ?Sized>(users: usize, frame_length: usize, symbol_power: f64, rng: &mut R) -> CMatrix {
    let amp = (symbol_power / 2.0).sqrt();
    CMatrix::from_fn(users, frame_length, |_, _| {
        let re = if rng.random::<bool>() { amp } else { -amp };
        let im = if rng.random::<bool>() { amp } else { -amp };
        C64::new(re, im)
    })
}
