//! Seeded random states and unitaries.
//!
//! Every sample owns an [`RngStream`] keyed by `(seed, stream_id)`; the
//! stream is a ChaCha keystream, so sample `k` draws the same numbers no
//! matter which worker evaluates it or in what order.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{ComplexMatrix, DensityMatrix, UnitaryMatrix};

/// Counter-based random stream for one sample.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Standard complex Gaussian, `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = StandardNormal.sample(self);
        let im: f64 = StandardNormal.sample(self);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits in [0, 1).
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Parse a seed written in decimal or `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64> {
    let t = text.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse::<u64>(),
    };
    parsed.map_err(|e| Error::invalid(format!("bad seed {text:?}: {e}")))
}

fn check_dim(dim: usize) -> Result<()> {
    if dim != 2 && dim != 4 {
        return Err(Error::invalid(format!(
            "sampling dimension must be 2 or 4, got {dim}"
        )));
    }
    Ok(())
}

fn ginibre(dim: usize, rng: &mut RngStream) -> ComplexMatrix {
    let mut g = ComplexMatrix::zeros_unchecked(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            g[(r, c)] = rng.complex_normal();
        }
    }
    g
}

/// Orthonormalize the columns of `g` (classical Gram-Schmidt, applied twice).
/// The implied `R` has a positive real diagonal, which is the phase fixing
/// that makes `Q` Haar distributed. `None` for numerically dependent columns.
fn orthonormal_columns(g: &ComplexMatrix) -> Option<ComplexMatrix> {
    let n = g.rows();
    let mut q = *g;
    for c in 0..n {
        let original_norm: f64 = (0..n).map(|r| q[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for prev in 0..c {
                let dot: Complex64 = (0..n).map(|r| q[(r, prev)].conj() * q[(r, c)]).sum();
                for r in 0..n {
                    let qp = q[(r, prev)];
                    q[(r, c)] -= qp * dot;
                }
            }
        }
        let norm: f64 = (0..n).map(|r| q[(r, c)].norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 1e-8 * original_norm.max(f64::MIN_POSITIVE)) {
            return None;
        }
        for r in 0..n {
            q[(r, c)] /= norm;
        }
    }
    Some(q)
}

/// Haar-random unitary from a phase-fixed QR of a Ginibre matrix.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> Result<UnitaryMatrix> {
    check_dim(dim)?;
    loop {
        let g = ginibre(dim, rng);
        if let Some(q) = orthonormal_columns(&g) {
            return Ok(UnitaryMatrix::trusted(q));
        }
    }
}

/// Haar-random unit vector.
pub fn haar_vector(dim: usize, rng: &mut RngStream) -> Result<Vec<Complex64>> {
    check_dim(dim)?;
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| rng.complex_normal()).collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return Ok(v.into_iter().map(|z| z / norm).collect());
        }
    }
}

/// `|ψ⟩⟨ψ|` for a Haar-random `|ψ⟩`.
pub fn haar_pure_state(dim: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    let v = haar_vector(dim, rng)?;
    let mut m = ComplexMatrix::outer(&v)?;
    // Exact Hermiticity and zero-imaginary diagonal by construction.
    for i in 0..dim {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    DensityMatrix::from_computed(m)
}

/// Hilbert-Schmidt random mixed state `G G† / tr(G G†)`.
pub fn hs_mixed_state(dim: usize, rng: &mut RngStream) -> Result<DensityMatrix> {
    check_dim(dim)?;
    loop {
        let g = ginibre(dim, rng);
        let w = g.matmul(&g.adjoint());
        let tr = w.trace().re;
        if tr >= 1e-12 {
            return DensityMatrix::from_computed(w.scale_real(1.0 / tr));
        }
    }
}

/// `ρ0(α) = (I + α σ_z)/2`.
pub fn control_state(alpha: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    DensityMatrix::new(ComplexMatrix::real_diag(&[
        0.5 * (1.0 + alpha),
        0.5 * (1.0 - alpha),
    ])?)
}

/// How the control qubit's initial state is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlSampler {
    /// Haar-random pure state.
    PureHaar,
    /// Hilbert-Schmidt random mixed state.
    MixedHs,
    /// The diagonal state `ρ0(α)`; no randomness consumed.
    Alpha(f64),
}

impl ControlSampler {
    pub fn draw(&self, rng: &mut RngStream) -> Result<DensityMatrix> {
        match *self {
            ControlSampler::PureHaar => haar_pure_state(2, rng),
            ControlSampler::MixedHs => hs_mixed_state(2, rng),
            ControlSampler::Alpha(alpha) => control_state(alpha),
        }
    }
}

impl std::str::FromStr for ControlSampler {
    type Err = Error;

    /// `pure`, `hs` or `alpha=<value>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pure" | "pure-haar" => Ok(ControlSampler::PureHaar),
            "hs" | "mixed-hs" | "mixed" => Ok(ControlSampler::MixedHs),
            other => {
                let value = other
                    .strip_prefix("alpha=")
                    .ok_or_else(|| Error::invalid(format!("unknown control sampler {other:?}")))?;
                let alpha: f64 = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad alpha value {value:?}")))?;
                control_state(alpha)?;
                Ok(ControlSampler::Alpha(alpha))
            }
        }
    }
}

impl std::fmt::Display for ControlSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControlSampler::PureHaar => write!(f, "pure"),
            ControlSampler::MixedHs => write!(f, "hs"),
            ControlSampler::Alpha(a) => write!(f, "alpha={a}"),
        }
    }
}

const PURE_TOL: f64 = 1e-9;

/// `(1-ε)/4 · I₄ + ε |ψ⟩⟨ψ|`.
pub fn nmr_state(epsilon: f64, psi: &DensityMatrix) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    if psi.dim() != 4 {
        return Err(Error::invalid("nmr_state needs a two-qubit pure state"));
    }
    if (crate::qla::purity(psi) - 1.0).abs() > PURE_TOL {
        return Err(Error::invalid("nmr_state needs a pure state"));
    }
    let mut m = psi.matrix().scale_real(epsilon);
    let bg = Complex64::new(0.25 * (1.0 - epsilon), 0.0);
    for i in 0..4 {
        m[(i, i)] += bg;
    }
    DensityMatrix::from_computed(m)
}
