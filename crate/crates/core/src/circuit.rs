//! The two-qubit DQC1 circuit, the local post-selection filter on the
//! control qubit, and the normalized-trace readout.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qla::{kron, pauli, ComplexMatrix, DensityMatrix, UnitaryMatrix, C0, C1};

/// Success probabilities below this are treated as filter annihilation.
pub const ANNIHILATION_THRESHOLD: f64 = 1e-12;

/// Parameters of `F = η·I + (1-η)·|u⟩⟨u|` with
/// `|u⟩ = (cos θ/2, e^{iφ} sin θ/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    pub eta: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FilterSpec {
    pub fn new(eta: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!("eta must lie in [0, 1], got {eta}")));
        }
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::invalid("filter angles must be finite"));
        }
        Ok(Self::canonical(eta, theta, phi))
    }

    /// The identity filter.
    pub fn identity() -> Self {
        Self {
            eta: 1.0,
            theta: 0.0,
            phi: 0.0,
        }
    }

    /// Fold arbitrary angles onto `θ ∈ [0, π]`, `φ ∈ [0, 2π)` describing
    /// the same Bloch direction.
    pub(crate) fn canonical(eta: f64, theta: f64, phi: f64) -> Self {
        let mut theta = theta.rem_euclid(TAU);
        let mut phi = phi;
        if theta > PI {
            theta = TAU - theta;
            phi += PI;
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Self { eta, theta, phi }
    }

    /// Filter whose distinguished direction is the (normalized) vector `u`,
    /// e.g. the first column of a unitary `U_a`.
    pub fn from_direction(eta: f64, u: [Complex64; 2]) -> Result<Self> {
        let n = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("filter direction must be a non-zero vector"));
        }
        let a = u[0].norm() / n;
        let b = u[1].norm() / n;
        let theta = 2.0 * b.atan2(a);
        let phi = if u[1].norm() == 0.0 {
            0.0
        } else if u[0].norm() == 0.0 {
            u[1].arg()
        } else {
            u[1].arg() - u[0].arg()
        };
        Self::new(eta, theta, phi)
    }

    /// `|u⟩`.
    pub fn direction(&self) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi)]
    }
}

/// A post-selected two-qubit state and the probability of obtaining it.
#[derive(Clone, Copy, Debug)]
pub struct FilteredState {
    pub state: DensityMatrix,
    pub success_probability: f64,
}

pub fn hadamard() -> UnitaryMatrix {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut m = ComplexMatrix::zeros_unchecked(2, 2);
    m[(0, 0)] = h;
    m[(0, 1)] = h;
    m[(1, 0)] = h;
    m[(1, 1)] = -h;
    UnitaryMatrix::trusted(m)
}

fn require_qubit_unitary(u: &UnitaryMatrix) -> Result<()> {
    if u.dim() != 2 {
        return Err(Error::invalid("expected a single-qubit (2x2) unitary"));
    }
    Ok(())
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ u1`.
pub fn controlled_u(u1: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    require_qubit_unitary(u1)?;
    let mut m = ComplexMatrix::zeros_unchecked(4, 4);
    m[(0, 0)] = C1;
    m[(1, 1)] = C1;
    for r in 0..2 {
        for c in 0..2 {
            m[(2 + r, 2 + c)] = u1.matrix()[(r, c)];
        }
    }
    UnitaryMatrix::new(m)
}

/// `(H⊗I)·CU·(H⊗I)`, the circuit unitary.
pub fn circuit_unitary(u1: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    let hi = kron(hadamard().matrix(), &pauli::identity())?;
    let cu = controlled_u(u1)?;
    Ok(UnitaryMatrix::trusted(hi.matmul(cu.matrix()).matmul(&hi)))
}

/// Circuit output before filtering; `aux` is `I/2` in the standard model.
pub fn dqc1_output(
    rho0: &DensityMatrix,
    u1: &UnitaryMatrix,
    aux: &DensityMatrix,
) -> Result<DensityMatrix> {
    if rho0.dim() != 2 || aux.dim() != 2 {
        return Err(Error::invalid(
            "control and auxiliary states must be single-qubit",
        ));
    }
    let g = circuit_unitary(u1)?;
    let input = DensityMatrix::product(rho0, aux)?;
    input.evolve(&g)
}

/// Standard DQC1 output with the auxiliary qubit maximally mixed.
pub fn standard_output(rho0: &DensityMatrix, u1: &UnitaryMatrix) -> Result<DensityMatrix> {
    dqc1_output(rho0, u1, &DensityMatrix::maximally_mixed(2)?)
}

/// `η·I + (1-η)·|u⟩⟨u|`.
pub fn filter_matrix(spec: &FilterSpec) -> ComplexMatrix {
    scaled_projector_matrix(spec.eta, 1.0 - spec.eta, spec.direction())
}

/// `F² = η²·I + (1-η²)·|u⟩⟨u|` (F is Hermitian, so this is also F†F).
pub(crate) fn filter_gram(eta: f64, u: [Complex64; 2]) -> ComplexMatrix {
    scaled_projector_matrix(eta * eta, 1.0 - eta * eta, u)
}

fn scaled_projector_matrix(base: f64, weight: f64, u: [Complex64; 2]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros_unchecked(2, 2);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = u[r] * u[c].conj() * weight;
        }
        m[(r, r)] += Complex64::new(base, 0.0);
    }
    // Diagonal is real by construction; drop the rounding residue.
    for r in 0..2 {
        m[(r, r)] = Complex64::new(m[(r, r)].re, 0.0);
    }
    m
}

/// `(F⊗I) ρ (F⊗I)` without normalization.
pub(crate) fn filter_unnormalized(rho: &ComplexMatrix, f: &ComplexMatrix) -> ComplexMatrix {
    let mut ff = ComplexMatrix::zeros_unchecked(4, 4);
    for c in 0..2 {
        for c2 in 0..2 {
            for a in 0..2 {
                ff[(2 * c + a, 2 * c2 + a)] = f[(c, c2)];
            }
        }
    }
    ff.matmul(rho).matmul(&ff.adjoint())
}

/// Success probability and unnormalized auxiliary marginal of the filtered
/// state, computed from `F²` and the 2×2 blocks of `ρ` only.
pub(crate) fn filtered_aux_marginal(
    rho: &ComplexMatrix,
    gram: &ComplexMatrix,
) -> (f64, ComplexMatrix) {
    // tr_c[(F⊗I)ρ(F⊗I)] = Σ_{c,c'} (F²)_{c'c} ρ[(c,·),(c',·)].
    let mut aux = ComplexMatrix::zeros_unchecked(2, 2);
    for c in 0..2 {
        for c2 in 0..2 {
            let w = gram[(c2, c)];
            if w == C0 {
                continue;
            }
            for a in 0..2 {
                for a2 in 0..2 {
                    aux[(a, a2)] += w * rho[(2 * c + a, 2 * c2 + a2)];
                }
            }
        }
    }
    (aux[(0, 0)].re + aux[(1, 1)].re, aux)
}

/// Post-select `ρ_bf` through `F⊗I`.
pub fn apply_filter(rho_bf: &DensityMatrix, spec: &FilterSpec) -> Result<FilteredState> {
    if rho_bf.dim() != 4 {
        return Err(Error::invalid("filtering needs a two-qubit state"));
    }
    if !(0.0..=1.0).contains(&spec.eta) {
        return Err(Error::invalid(format!(
            "eta must lie in [0, 1], got {}",
            spec.eta
        )));
    }
    if spec.eta == 1.0 {
        return Ok(FilteredState {
            state: *rho_bf,
            success_probability: 1.0,
        });
    }
    let f = filter_matrix(spec);
    let out = filter_unnormalized(rho_bf.matrix(), &f);
    let p = out.trace().re;
    if !(p >= ANNIHILATION_THRESHOLD) {
        return Err(Error::FilterAnnihilated { probability: p });
    }
    Ok(FilteredState {
        state: DensityMatrix::from_computed(out.scale_real(1.0 / p))?,
        success_probability: p.min(1.0),
    })
}

/// Estimate `tr(u1)/2` from the control qubit's Pauli expectations.
///
/// Without the trailing Hadamard the control qubit carries
/// `⟨σ_x⟩ = α Re t`, `⟨σ_y⟩ = α Im t` with `t = tr(u1)/2`; the final
/// Hadamard maps these onto `⟨σ_z⟩` and `-⟨σ_y⟩`.
pub fn normalized_trace_estimate(alpha: f64, u1: &UnitaryMatrix) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1] for a trace readout, got {alpha}"
        )));
    }
    let rho = standard_output(&crate::sampling::control_state(alpha)?, u1)?;
    let expect = |p: ComplexMatrix| -> Result<f64> {
        let op = kron(&p, &pauli::identity())?;
        Ok(rho.matrix().matmul(&op).trace().re)
    };
    let sz = expect(pauli::z())?;
    let sy = expect(pauli::y())?;
    Ok(Complex64::new(sz, -sy) / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qla::{partial_trace, purity, Subsystem, C1};
    use crate::sampling::{
        control_state, haar_pure_state, haar_unitary, hs_mixed_state, RngStream,
    };

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hadamard_examples() {
        let h = hadamard();
        let hh = h.matrix().matmul(h.matrix());
        assert!(hh.max_abs_diff(&ComplexMatrix::identity(2).unwrap()) < 1e-15);
        let plus = h.matrix().column(0);
        assert!((plus[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((plus[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let hzh = h.matrix().matmul(&pauli::z()).matmul(h.matrix());
        assert!(hzh.max_abs_diff(&pauli::x()) < 1e-15);
    }

    #[test]
    fn controlled_u_examples() {
        let id = UnitaryMatrix::identity(2).unwrap();
        assert_eq!(
            *controlled_u(&id).unwrap().matrix(),
            ComplexMatrix::identity(4).unwrap()
        );
        let cnot = controlled_u(&UnitaryMatrix::new(pauli::x()).unwrap()).unwrap();
        let want = ComplexMatrix::from_real_rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        assert_eq!(*cnot.matrix(), want);
        let cz = controlled_u(&UnitaryMatrix::new(pauli::z()).unwrap()).unwrap();
        assert_eq!(
            *cz.matrix(),
            ComplexMatrix::real_diag(&[1.0, 1.0, 1.0, -1.0]).unwrap()
        );
        let four = UnitaryMatrix::identity(4).unwrap();
        assert!(controlled_u(&four).is_err());
    }

    #[test]
    fn dqc1_output_examples() {
        let mut rng = RngStream::new(1, 0);
        let rho0 = hs_mixed_state(2, &mut rng).unwrap();
        let aux = hs_mixed_state(2, &mut rng).unwrap();
        let id = UnitaryMatrix::identity(2).unwrap();
        let out = dqc1_output(&rho0, &id, &aux).unwrap();
        let want = DensityMatrix::product(&rho0, &aux).unwrap();
        assert!(out.matrix().max_abs_diff(want.matrix()) < 1e-14);

        let half = DensityMatrix::maximally_mixed(2).unwrap();
        let u = haar_unitary(2, &mut rng).unwrap();
        let flat = standard_output(&half, &u).unwrap();
        assert!(
            flat.matrix()
                .max_abs_diff(DensityMatrix::maximally_mixed(4).unwrap().matrix())
                < 1e-14
        );

        for _ in 0..200 {
            let rho0 = hs_mixed_state(2, &mut rng).unwrap();
            let u = haar_unitary(2, &mut rng).unwrap();
            let out = standard_output(&rho0, &u).unwrap();
            let aux = partial_trace(&out, Subsystem::Auxiliary).unwrap();
            assert!(aux.matrix().max_abs_diff(half.matrix()) < 1e-14);
            assert!((purity(&aux) - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn filter_matrix_examples() {
        let id = filter_matrix(&FilterSpec::new(1.0, 0.7, 2.0).unwrap());
        assert!(id.max_abs_diff(&ComplexMatrix::identity(2).unwrap()) < 1e-15);
        let p0 = filter_matrix(&FilterSpec::new(0.0, 0.0, 0.0).unwrap());
        assert!(p0.max_abs_diff(&ComplexMatrix::real_diag(&[1.0, 0.0]).unwrap()) < 1e-15);
        let half = filter_matrix(&FilterSpec::new(0.5, PI / 2.0, 0.0).unwrap());
        let want = ComplexMatrix::from_real_rows([[0.75, 0.25], [0.25, 0.75]]).unwrap();
        assert!(half.max_abs_diff(&want) < 1e-15);
        let spec = FilterSpec::new(0.3, 1.1, 4.0).unwrap();
        let e = crate::qla::hermitian_eig(&filter_matrix(&spec)).unwrap();
        assert!((e.values()[0] - 1.0).abs() < 1e-14);
        assert!((e.values()[1] - 0.3).abs() < 1e-14);
        assert!(FilterSpec::new(1.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn canonical_angles() {
        let s = FilterSpec::new(0.5, 3.0 * PI / 2.0, 0.25).unwrap();
        assert!((s.theta - PI / 2.0).abs() < 1e-12);
        assert!((s.phi - (0.25 + PI)).abs() < 1e-12);
        let t = FilterSpec::new(0.5, PI / 2.0, 0.25 + PI).unwrap();
        assert!(filter_matrix(&s).max_abs_diff(&filter_matrix(&t)) < 1e-12);
        let u = [c(0.6, 0.0), Complex64::from_polar(0.8, 1.3)];
        let from_dir = FilterSpec::from_direction(0.2, u).unwrap();
        let d = from_dir.direction();
        assert!((d[0] - u[0]).norm() < 1e-12 && (d[1] - u[1]).norm() < 1e-12);
    }

    #[test]
    fn apply_filter_examples() {
        let mut rng = RngStream::new(3, 0);
        let rho0 = haar_pure_state(2, &mut rng).unwrap();
        let u = haar_unitary(2, &mut rng).unwrap();
        let bf = standard_output(&rho0, &u).unwrap();
        let same = apply_filter(&bf, &FilterSpec::new(1.0, 0.4, 0.2).unwrap()).unwrap();
        assert_eq!(same.success_probability, 1.0);
        assert_eq!(same.state, bf);
        let aux = partial_trace(&same.state, Subsystem::Auxiliary).unwrap();
        assert!((purity(&aux) - 0.5).abs() < 1e-12);

        let flat = DensityMatrix::maximally_mixed(4).unwrap();
        let proj = apply_filter(&flat, &FilterSpec::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((proj.success_probability - 0.5).abs() < 1e-15);
        let want = ComplexMatrix::real_diag(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(proj.state.matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn apply_filter_annihilation() {
        let one = DensityMatrix::pure(&[C0, C1]).unwrap();
        let aux = DensityMatrix::maximally_mixed(2).unwrap();
        let rho = DensityMatrix::product(&one, &aux).unwrap();
        let err = apply_filter(&rho, &FilterSpec::new(0.0, 0.0, 0.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::FilterAnnihilated { .. }));
    }

    #[test]
    fn aux_marginal_shortcut_matches_full_filter() {
        let mut rng = RngStream::new(4, 4);
        for _ in 0..100 {
            let rho = hs_mixed_state(4, &mut rng).unwrap();
            let spec =
                FilterSpec::new(rng.uniform(), PI * rng.uniform(), TAU * rng.uniform()).unwrap();
            let full = filter_unnormalized(rho.matrix(), &filter_matrix(&spec));
            let (p, aux) =
                filtered_aux_marginal(rho.matrix(), &filter_gram(spec.eta, spec.direction()));
            assert!((full.trace().re - p).abs() < 1e-14);
            let want = crate::qla::partial_trace_raw(&full, Subsystem::Auxiliary);
            assert!(want.max_abs_diff(&aux) < 1e-14);
        }
    }

    #[test]
    fn trace_estimate_examples() {
        let oracle = |u: &UnitaryMatrix| u.matrix().trace() / 2.0;
        let id = UnitaryMatrix::identity(2).unwrap();
        let z = UnitaryMatrix::new(pauli::z()).unwrap();
        let s = UnitaryMatrix::new(ComplexMatrix::diag(&[C1, c(0.0, 1.0)]).unwrap()).unwrap();
        for alpha in [0.25, 0.5, 1.0] {
            assert!((normalized_trace_estimate(alpha, &id).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
            assert!(normalized_trace_estimate(alpha, &z).unwrap().norm() < 1e-12);
            assert!((normalized_trace_estimate(alpha, &s).unwrap() - c(0.5, 0.5)).norm() < 1e-12);
        }
        let mut rng = RngStream::new(9, 9);
        for _ in 0..200 {
            let u = haar_unitary(2, &mut rng).unwrap();
            let got = normalized_trace_estimate(0.7, &u).unwrap();
            assert!((got - oracle(&u)).norm() < 1e-12);
        }
        assert!(normalized_trace_estimate(0.0, &id).is_err());
        assert!(control_state(0.5).is_ok());
    }
}
