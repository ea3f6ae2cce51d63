//! Fano decomposition of two-qubit states and the four correlation
//! measures: Horodecki Bell quantity, negativity, geometric discord and
//! coherence.
//!
//! Coherence in [`Correlations`] is the trace norm of the off-diagonal part,
//! ‖ρ − ρ_diag‖₁. The plain ℓ1 sum is kept as [`l1_coherence`].

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{
    hermitian_eig, kron, partial_transpose, pauli, trace_norm, ComplexMatrix, DensityMatrix,
    Subsystem,
};

pub const BELL_MAX: f64 = 2.0 * SQRT_2;
pub const NEGATIVITY_MAX: f64 = 0.5;
pub const DISCORD_MAX: f64 = 0.5;
/// Largest trace-norm coherence of a two-qubit state, reached by the uniform
/// superposition.
pub const COHERENCE_MAX: f64 = 1.5;

/// Values in `[-CLAMP_TOL, 0)` are reported as zero.
const CLAMP_TOL: f64 = 1e-12;
/// Slack allowed above a measure's theoretical maximum before
/// normalization rejects it.
const RANGE_SLACK: f64 = 1e-9;

/// Bloch vectors and correlation matrix of a two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FanoDecomposition {
    /// Control qubit polarization, `s_i = tr[ρ(σ_i⊗I)]`.
    pub s: [f64; 3],
    /// Auxiliary qubit polarization, `r_j = tr[ρ(I⊗σ_j)]`.
    pub r: [f64; 3],
    /// `c_ij = tr[ρ(σ_i⊗σ_j)]`.
    pub c: [[f64; 3]; 3],
}

impl FanoDecomposition {
    /// `(1/4)[I⊗I + I⊗(r·σ) + (s·σ)⊗I + Σ c_ij σ_i⊗σ_j]`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let paulis = pauli::xyz();
        let id = pauli::identity();
        let mut m = kron(&id, &id).expect("4x4");
        for i in 0..3 {
            m = m + kron(&paulis[i], &id).expect("4x4").scale_real(self.s[i]);
            m = m + kron(&id, &paulis[i]).expect("4x4").scale_real(self.r[i]);
            for j in 0..3 {
                m = m + kron(&paulis[i], &paulis[j])
                    .expect("4x4")
                    .scale_real(self.c[i][j]);
            }
        }
        m.scale_real(0.25)
    }

    /// `C·Cᵀ`.
    pub fn correlation_gram(&self) -> [[f64; 3]; 3] {
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = (0..3).map(|k| self.c[i][k] * self.c[j][k]).sum();
            }
        }
        t
    }
}

fn real_sym_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let cm = ComplexMatrix::from_real_rows(*m).expect("3x3");
    let e = hermitian_eig(&cm).expect("symmetric");
    [e.values()[0], e.values()[1], e.values()[2]]
}

fn require_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::invalid(
            "correlation measures need a two-qubit state",
        ));
    }
    Ok(())
}

/// `tr[ρ A]` for Hermitian `A` without forming the product.
fn expectation(rho: &ComplexMatrix, op: &ComplexMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            acc += rho[(i, j)] * op[(j, i)];
        }
    }
    acc
}

pub fn fano_decompose(rho: &DensityMatrix) -> Result<FanoDecomposition> {
    require_two_qubit(rho)?;
    let m = rho.matrix();
    let paulis = pauli::xyz();
    let id = pauli::identity();
    let mut out = FanoDecomposition {
        s: [0.0; 3],
        r: [0.0; 3],
        c: [[0.0; 3]; 3],
    };
    for i in 0..3 {
        out.s[i] = expectation(m, &kron(&paulis[i], &id)?).re;
        out.r[i] = expectation(m, &kron(&id, &paulis[i])?).re;
        for j in 0..3 {
            out.c[i][j] = expectation(m, &kron(&paulis[i], &paulis[j])?).re;
        }
    }
    Ok(out)
}

/// `B(ρ) = 2√(m₁+m₂)` from the two largest eigenvalues of `C·Cᵀ`.
pub fn bell_quantity(rho: &DensityMatrix) -> Result<f64> {
    Ok(bell_from_fano(&fano_decompose(rho)?))
}

pub fn bell_from_fano(f: &FanoDecomposition) -> f64 {
    let ev = real_sym_eigenvalues(&f.correlation_gram());
    (2.0 * (ev[0] + ev[1]).max(0.0).sqrt()).min(BELL_MAX)
}

/// `N(ρ) = (‖ρ^{T_A}‖₁ - 1)/2` with the transpose on the control qubit.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    require_two_qubit(rho)?;
    let pt = partial_transpose(rho, Subsystem::Control)?;
    let n = 0.5 * (trace_norm(&pt)? - 1.0);
    Ok(clamp_small(n).min(NEGATIVITY_MAX))
}

/// Geometric discord with the measurement on the control qubit:
/// `(|s|² + ‖C‖²_F - λ_max(s sᵀ + C Cᵀ))/4`.
pub fn geometric_discord(rho: &DensityMatrix) -> Result<f64> {
    Ok(discord_from_fano(&fano_decompose(rho)?))
}

pub fn discord_from_fano(f: &FanoDecomposition) -> f64 {
    let mut lambda = f.correlation_gram();
    for i in 0..3 {
        for j in 0..3 {
            lambda[i][j] += f.s[i] * f.s[j];
        }
    }
    let s2: f64 = f.s.iter().map(|x| x * x).sum();
    let c2: f64 = f.c.iter().flatten().map(|x| x * x).sum();
    let lmax = real_sym_eigenvalues(&lambda)[0];
    clamp_small(0.25 * (s2 + c2 - lmax)).min(DISCORD_MAX)
}

/// Sum of off-diagonal moduli in the computational basis.
pub fn l1_coherence(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    let n = rho.dim();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += m[(i, j)].norm();
            }
        }
    }
    total
}

/// Trace norm of the off-diagonal part, ‖ρ − ρ_diag‖₁.
pub fn trace_norm_coherence(rho: &DensityMatrix) -> f64 {
    let mut off = *rho.matrix();
    for i in 0..rho.dim() {
        off[(i, i)] = Complex64::new(0.0, 0.0);
    }
    // Zero diagonal and the hermitian input make the eigen path infallible.
    trace_norm(&off.hermitian_part()).unwrap_or_else(|_| l1_coherence(rho))
}

fn clamp_small(x: f64) -> f64 {
    if (-CLAMP_TOL..0.0).contains(&x) {
        0.0
    } else {
        x.max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Bell,
    Negativity,
    Discord,
    Coherence,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Bell,
        Measure::Negativity,
        Measure::Discord,
        Measure::Coherence,
    ];

    /// Largest value the measure takes on two-qubit states.
    pub fn max_value(self) -> f64 {
        match self {
            Measure::Bell => BELL_MAX,
            Measure::Negativity => NEGATIVITY_MAX,
            Measure::Discord => DISCORD_MAX,
            Measure::Coherence => COHERENCE_MAX,
        }
    }
}

/// `X / X_max`.
pub fn normalize_correlation(value: f64, which: Measure) -> Result<f64> {
    let max = which.max_value();
    if !(value.is_finite() && value >= -RANGE_SLACK && value <= max + RANGE_SLACK) {
        return Err(Error::invalid(format!(
            "{which:?} value {value} outside [0, {max}]"
        )));
    }
    Ok((value / max).clamp(0.0, 1.0))
}

/// All four measures of one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub bell: f64,
    pub negativity: f64,
    pub discord: f64,
    pub coherence: f64,
}

impl Correlations {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        let f = fano_decompose(rho)?;
        Ok(Self {
            bell: bell_from_fano(&f),
            negativity: negativity(rho)?,
            discord: discord_from_fano(&f),
            coherence: trace_norm_coherence(rho),
        })
    }

    pub fn get(&self, which: Measure) -> f64 {
        match which {
            Measure::Bell => self.bell,
            Measure::Negativity => self.negativity,
            Measure::Discord => self.discord,
            Measure::Coherence => self.coherence,
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        Ok(Self {
            bell: normalize_correlation(self.bell, Measure::Bell)?,
            negativity: normalize_correlation(self.negativity, Measure::Negativity)?,
            discord: normalize_correlation(self.discord, Measure::Discord)?,
            coherence: normalize_correlation(self.coherence, Measure::Coherence)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qla::{C0, C1};
    use crate::sampling::control_state;

    fn bell_state() -> DensityMatrix {
        DensityMatrix::pure(&[C1, C0, C0, C1]).unwrap()
    }

    fn werner(p: f64) -> DensityMatrix {
        let b = bell_state().matrix().scale_real(p);
        let flat = DensityMatrix::maximally_mixed(4)
            .unwrap()
            .matrix()
            .scale_real(1.0 - p);
        DensityMatrix::from_computed(b + flat).unwrap()
    }

    #[test]
    fn fano_examples() {
        let flat = fano_decompose(&DensityMatrix::maximally_mixed(4).unwrap()).unwrap();
        assert_eq!(flat.s, [0.0; 3]);
        assert_eq!(flat.r, [0.0; 3]);
        assert_eq!(flat.c, [[0.0; 3]; 3]);

        let alpha = 0.37;
        let prod = DensityMatrix::product(
            &control_state(alpha).unwrap(),
            &DensityMatrix::maximally_mixed(2).unwrap(),
        )
        .unwrap();
        let f = fano_decompose(&prod).unwrap();
        assert!((f.s[2] - alpha).abs() < 1e-15 && f.s[0] == 0.0 && f.s[1] == 0.0);
        assert_eq!(f.r, [0.0; 3]);

        let b = fano_decompose(&bell_state()).unwrap();
        let want = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            assert!(b.s[i].abs() < 1e-15 && b.r[i].abs() < 1e-15);
            for j in 0..3 {
                assert!((b.c[i][j] - want[i][j]).abs() < 1e-12);
            }
        }
        assert!(b.reconstruct().max_abs_diff(bell_state().matrix()) < 1e-12);
    }

    #[test]
    fn bell_state_measures() {
        let b = bell_state();
        assert!((bell_quantity(&b).unwrap() - BELL_MAX).abs() < 1e-9);
        assert!((negativity(&b).unwrap() - 0.5).abs() < 1e-9);
        assert!((geometric_discord(&b).unwrap() - 0.5).abs() < 1e-9);
        assert!((l1_coherence(&b) - 1.0).abs() < 1e-9);
        assert!((trace_norm_coherence(&b) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn maximally_mixed_measures() {
        let c = Correlations::of(&DensityMatrix::maximally_mixed(4).unwrap()).unwrap();
        assert_eq!(c.bell, 0.0);
        assert_eq!(c.negativity, 0.0);
        assert_eq!(c.discord, 0.0);
        assert_eq!(c.coherence, 0.0);
    }

    #[test]
    fn werner_negativity() {
        // Partial transpose eigenvalues: (1+p)/4 thrice and (1-3p)/4.
        for (p, want) in [(0.5, 0.125), (1.0 / 3.0, 0.0), (0.2, 0.0), (0.8, 0.35)] {
            let got = negativity(&werner(p)).unwrap();
            assert!((got - want).abs() < 1e-9, "p={p}: {got} vs {want}");
        }
    }

    #[test]
    fn product_and_classical_states() {
        let a = DensityMatrix::pure(&[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]).unwrap();
        let b = DensityMatrix::pure(&[Complex64::new(0.8, 0.0), Complex64::new(0.6, 0.0)]).unwrap();
        let ab = DensityMatrix::product(&a, &b).unwrap();
        assert!(negativity(&ab).unwrap() < 1e-12);
        assert!(geometric_discord(&ab).unwrap() < 1e-12);
        assert!(bell_quantity(&ab).unwrap() <= 2.0 + 1e-12);

        let diag =
            DensityMatrix::new(ComplexMatrix::real_diag(&[0.1, 0.4, 0.3, 0.2]).unwrap()).unwrap();
        assert!(geometric_discord(&diag).unwrap() < 1e-12);
        assert_eq!(l1_coherence(&diag), 0.0);
    }

    #[test]
    fn maximally_coherent_state() {
        let v = [Complex64::new(0.5, 0.0); 4];
        let plus = DensityMatrix::pure(&v).unwrap();
        assert!((l1_coherence(&plus) - 3.0).abs() < 1e-12);
        // (J - I)/4 has eigenvalues 3/4 and -1/4 (three times).
        assert!((trace_norm_coherence(&plus) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_coherence_of_qubit() {
        // Off-diagonal part of a qubit state has eigenvalues ±|ρ01|.
        let rho = DensityMatrix::new(
            ComplexMatrix::from_rows([
                [Complex64::new(0.7, 0.0), Complex64::new(0.1, 0.2)],
                [Complex64::new(0.1, -0.2), Complex64::new(0.3, 0.0)],
            ])
            .unwrap(),
        )
        .unwrap();
        assert!((trace_norm_coherence(&rho) - 2.0 * 0.05f64.sqrt()).abs() < 1e-12);
        assert!((l1_coherence(&rho) - 2.0 * 0.05f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn normalization() {
        let b = normalize_correlation(2.0, Measure::Bell).unwrap();
        assert!((b - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(
            normalize_correlation(0.5, Measure::Negativity).unwrap(),
            1.0
        );
        assert_eq!(normalize_correlation(0.0, Measure::Discord).unwrap(), 0.0);
        assert_eq!(normalize_correlation(0.75, Measure::Coherence).unwrap(), 0.5);
        assert!(normalize_correlation(1.6, Measure::Coherence).is_err());
        assert!(normalize_correlation(0.6, Measure::Discord).is_err());
        assert!(normalize_correlation(-0.1, Measure::Bell).is_err());
        assert!(normalize_correlation(f64::NAN, Measure::Bell).is_err());
    }
}
