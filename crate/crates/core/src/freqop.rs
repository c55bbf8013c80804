//! The relative-frequency operator `F_N^P = (1/N) Σ_n I⊗…⊗P_n⊗…⊗I` and its
//! eigen-projectors, built as explicit dense matrices.
//!
//! `Q_N^K` is the sum, over every choice of `K` positions out of `N`, of the
//! tensor product with `P` at the chosen positions and `P⊥` elsewhere. The
//! functions here check the resulting identities numerically: spectrum
//! `{K/N}`, completeness, spectral form, mean `p` and variance `p(1-p)/N`.

use itertools::Itertools;
use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    check_dim, max_abs_diff, orthocomplement, real_part, CMatrix, DenseOperator, Projector,
    StateVector, TOL_OP,
};

/// Tolerance on computed eigenvalues.
pub const TOL_EIG: f64 = 1e-8;
/// Largest `N` for which the eigen-projectors are enumerated.
pub const MAX_ENUM_COPIES: usize = 12;

#[derive(Clone, Debug)]
pub struct FrequencyOperator {
    op: DenseOperator,
    source: Projector,
}

impl FrequencyOperator {
    pub fn op(&self) -> &DenseOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn n_copies(&self) -> usize {
        self.op.n_copies()
    }

    pub fn projector(&self) -> &Projector {
        &self.source
    }
}

/// `Q_N^0, …, Q_N^N`, indexed by `K`.
#[derive(Clone, Debug)]
pub struct EigenProjectorFamily {
    projectors: Vec<DenseOperator>,
    n_copies: usize,
}

/// Worst violations of the projector-family invariants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FamilyDefects {
    pub hermitian: f64,
    pub idempotent: f64,
    pub orthogonal: f64,
    pub completeness: f64,
}

impl FamilyDefects {
    pub fn max(&self) -> f64 {
        self.hermitian
            .max(self.idempotent)
            .max(self.orthogonal)
            .max(self.completeness)
    }
}

impl EigenProjectorFamily {
    pub fn n_copies(&self) -> usize {
        self.n_copies
    }

    pub fn get(&self, k: usize) -> Option<&DenseOperator> {
        self.projectors.get(k)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DenseOperator> {
        self.projectors.iter()
    }

    /// `max |Σ_K Q_N^K − I|`
    pub fn completeness_deviation(&self) -> f64 {
        let dim = self.projectors[0].dim();
        let sum = self
            .projectors
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, q| acc + q.matrix());
        max_abs_diff(&sum, &CMatrix::identity(dim, dim))
    }

    /// Checks every invariant, including all pairwise products; `O(N² D³)`.
    pub fn defects(&self) -> FamilyDefects {
        let mut out = FamilyDefects {
            completeness: self.completeness_deviation(),
            ..FamilyDefects::default()
        };
        for (k, q) in self.projectors.iter().enumerate() {
            let m = q.matrix();
            out.hermitian = out.hermitian.max(q.hermitian_deviation());
            out.idempotent = out.idempotent.max(max_abs_diff(&(m * m), m));
            for other in &self.projectors[k + 1..] {
                let prod = m * other.matrix();
                let worst = prod.iter().map(|z| z.norm()).fold(0.0, f64::max);
                out.orthogonal = out.orthogonal.max(worst);
            }
        }
        out
    }

    /// `⟨Ψ|Q_N^K|Ψ⟩` for `K = 0..=N`.
    pub fn ensemble_probabilities(&self, big_psi: &StateVector) -> Result<Vec<f64>> {
        self.projectors
            .iter()
            .map(|q| q.expectation(big_psi))
            .collect()
    }
}

fn identity_and_complement(p: &Projector) -> (CMatrix, CMatrix) {
    let d = p.dim();
    (CMatrix::identity(d, d), orthocomplement(p).matrix().clone())
}

pub fn build_frequency_operator(p: &Projector, n: usize) -> Result<FrequencyOperator> {
    let mut op = DenseOperator::zeros(p.dim(), n)?;
    let (id, _) = identity_and_complement(p);
    let weight = 1.0 / n as f64;
    for position in 0..n {
        let factors: Vec<&CMatrix> = (0..n)
            .map(|i| if i == position { p.matrix() } else { &id })
            .collect();
        op.accumulate_kron(&factors, weight)?;
    }
    Ok(FrequencyOperator {
        op,
        source: p.clone(),
    })
}

/// Enumerates the `C(N,K)` position combinations in lexicographic order for
/// every `K` and accumulates each tensor-product term in place.
pub fn build_eigenprojectors(p: &Projector, n: usize) -> Result<EigenProjectorFamily> {
    if n > MAX_ENUM_COPIES {
        return Err(Error::TooManyCopies {
            n,
            cap: MAX_ENUM_COPIES,
        });
    }
    let (_, perp) = identity_and_complement(p);
    let mut projectors = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut q = DenseOperator::zeros(p.dim(), n)?;
        let mut factors: Vec<&CMatrix> = vec![&perp; n];
        for chosen in (0..n).combinations(k) {
            factors.iter_mut().for_each(|f| *f = &perp);
            for &i in &chosen {
                factors[i] = p.matrix();
            }
            q.accumulate_kron(&factors, 1.0)?;
        }
        projectors.push(q);
    }
    Ok(EigenProjectorFamily {
        projectors,
        n_copies: n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub k: usize,
    pub eigenvalue: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub n_copies: usize,
    pub single_dim: usize,
    pub rank: usize,
    /// Eigenvalues `K/N` that occur, with their multiplicities.
    pub entries: Vec<SpectrumEntry>,
    /// Largest distance from a computed eigenvalue to the nearest `K/N`.
    pub max_deviation: f64,
    /// Every eigenvalue lies within [`TOL_EIG`] of some `K/N`, `0 <= K <= N`.
    pub membership_ok: bool,
    /// Multiplicities are checked against `C(N,K)` only for `d = 2`, rank 1.
    pub multiplicity_checked: bool,
    pub multiplicity_ok: bool,
}

impl SpectrumReport {
    pub fn passed(&self) -> bool {
        self.membership_ok && (!self.multiplicity_checked || self.multiplicity_ok)
    }
}

/// `N choose K` as an exact integer.
pub fn binomial_coefficient(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Diagonalizes `F` and sorts its eigenvalues onto the grid `K/N`.
pub fn verify_spectrum(f: &FrequencyOperator) -> Result<SpectrumReport> {
    let n = f.n_copies();
    let dim = f.op().dim();
    let eig = SymmetricEigen::try_new(f.matrix().clone(), f64::EPSILON, 1000 * dim)
        .ok_or(Error::Diagonalization { dim })?;
    let nf = n as f64;
    let mut counts = vec![0usize; n + 1];
    let mut max_deviation = 0.0f64;
    let mut membership_ok = true;
    for &lambda in eig.eigenvalues.iter() {
        let k = (lambda * nf).round();
        let deviation = (lambda - k / nf).abs();
        max_deviation = max_deviation.max(deviation);
        if !(0.0..=nf).contains(&k) || deviation > TOL_EIG {
            membership_ok = false;
            continue;
        }
        counts[k as usize] += 1;
    }
    let single_dim = f.op().single_dim();
    let rank = f.projector().rank();
    let multiplicity_checked = single_dim == 2 && rank == 1;
    let multiplicity_ok = multiplicity_checked
        && counts
            .iter()
            .enumerate()
            .all(|(k, &c)| c as u128 == binomial_coefficient(n as u64, k as u64));
    Ok(SpectrumReport {
        n_copies: n,
        single_dim,
        rank,
        entries: counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| SpectrumEntry {
                k,
                eigenvalue: k as f64 / nf,
                multiplicity: c,
            })
            .collect(),
        max_deviation,
        membership_ok,
        multiplicity_checked,
        multiplicity_ok,
    })
}

fn check_family(f: &FrequencyOperator, q: &EigenProjectorFamily) -> Result<()> {
    if f.n_copies() != q.n_copies() || q.projectors.len() != q.n_copies + 1 {
        return Err(Error::MismatchedFamily(format!(
            "operator has N = {}, family has N = {}",
            f.n_copies(),
            q.n_copies()
        )));
    }
    if q.projectors[0].dim() != f.op().dim() {
        return Err(Error::MismatchedFamily(format!(
            "operator dimension {} vs family dimension {}",
            f.op().dim(),
            q.projectors[0].dim()
        )));
    }
    Ok(())
}

/// `max |F − Σ_K (K/N) Q_N^K|`
pub fn spectral_reconstruction_check(
    f: &FrequencyOperator,
    q: &EigenProjectorFamily,
) -> Result<f64> {
    check_family(f, q)?;
    let dim = f.op().dim();
    let nf = f.n_copies() as f64;
    let sum = q
        .projectors
        .iter()
        .enumerate()
        .fold(CMatrix::zeros(dim, dim), |acc, (k, proj)| {
            acc + proj.matrix().scale(k as f64 / nf)
        });
    Ok(max_abs_diff(f.matrix(), &sum))
}

/// `⟨Ψ|F|Ψ⟩`
pub fn expectation(f: &FrequencyOperator, big_psi: &StateVector) -> Result<f64> {
    f.op().expectation(big_psi)
}

/// The variance evaluated along three algebraically equal routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceForms {
    /// `⟨Ψ|(F − p)²|Ψ⟩` with the square formed as a matrix product.
    pub direct: f64,
    /// `⟨Ψ|F²|Ψ⟩ − p²`
    pub second_moment: f64,
    /// `‖FΨ − pΨ‖²`
    pub distance: f64,
}

impl VarianceForms {
    pub fn spread(&self) -> f64 {
        let v = [self.direct, self.second_moment, self.distance];
        let hi = v.iter().copied().fold(f64::MIN, f64::max);
        let lo = v.iter().copied().fold(f64::MAX, f64::min);
        hi - lo
    }
}

pub fn variance_forms(
    f: &FrequencyOperator,
    big_psi: &StateVector,
    p: f64,
) -> Result<VarianceForms> {
    check_dim(f.op().dim(), big_psi.dim())?;
    let dim = f.op().dim();
    let m = f.matrix();
    let shifted = m - CMatrix::identity(dim, dim).scale(p);
    let amps = big_psi.amplitudes();

    let direct = real_part(amps.dotc(&(&shifted * &shifted * amps)))?;
    let second_moment = real_part(amps.dotc(&(m * m * amps)))? - p * p;
    let distance = (m * amps - amps.scale(p)).norm_squared();
    Ok(VarianceForms {
        direct,
        second_moment,
        distance,
    })
}

/// `⟨Ψ|(F − p)²|Ψ⟩`, failing if the three routes in [`variance_forms`]
/// disagree by more than [`TOL_OP`].
pub fn variance_exact(f: &FrequencyOperator, big_psi: &StateVector, p: f64) -> Result<f64> {
    let forms = variance_forms(f, big_psi, p)?;
    let spread = forms.spread();
    if spread > TOL_OP {
        return Err(Error::Inconsistent {
            what: "variance forms",
            deviation: spread,
        });
    }
    Ok(forms.direct)
}

/// `Σ_K (K/N − p)² ⟨Ψ|Q_N^K|Ψ⟩`
pub fn variance_spectral(q: &EigenProjectorFamily, big_psi: &StateVector, p: f64) -> Result<f64> {
    let nf = q.n_copies() as f64;
    Ok(q.ensemble_probabilities(big_psi)?
        .iter()
        .enumerate()
        .map(|(k, w)| (k as f64 / nf - p).powi(2) * w)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{probability, tensor_power_state};
    use crate::random::{random_projector, random_state, state_with_probability};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    fn p10() -> Projector {
        Projector::diagonal(&[true, false]).unwrap()
    }

    /// Independent route: `Q_N^K = P ⊗ Q_{N-1}^{K-1} + P⊥ ⊗ Q_{N-1}^K`.
    fn recursive_family(p: &Projector, n: usize) -> Vec<CMatrix> {
        let perp = orthocomplement(p).matrix().clone();
        let mut level = vec![perp.clone(), p.matrix().clone()];
        for _ in 1..n {
            let dim = level[0].nrows() * p.dim();
            let next = (0..=level.len())
                .map(|k| {
                    let mut m = CMatrix::zeros(dim, dim);
                    if k > 0 {
                        m += p.matrix().kronecker(&level[k - 1]);
                    }
                    if k < level.len() {
                        m += perp.kronecker(&level[k]);
                    }
                    m
                })
                .collect();
            level = next;
        }
        level
    }

    #[test]
    fn frequency_operator_examples() {
        let f = build_frequency_operator(&p10(), 1).unwrap();
        assert_eq!(f.matrix(), &diag(&[1.0, 0.0]));

        let f = build_frequency_operator(&p10(), 2).unwrap();
        assert!(max_abs_diff(f.matrix(), &diag(&[1.0, 0.5, 0.5, 0.0])) < 1e-15);

        let f = build_frequency_operator(&Projector::identity(2), 3).unwrap();
        assert!(max_abs_diff(f.matrix(), &CMatrix::identity(8, 8)) < 1e-15);
    }

    #[test]
    fn frequency_operator_matches_nalgebra_kronecker() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_projector(3, 2, &mut rng).unwrap();
        let n = 3;
        let id = CMatrix::identity(3, 3);
        let mut want = CMatrix::zeros(27, 27);
        for pos in 0..n {
            let mut term = CMatrix::identity(1, 1);
            for i in 0..n {
                term = term.kronecker(if i == pos { p.matrix() } else { &id });
            }
            want += term.scale(1.0 / n as f64);
        }
        let f = build_frequency_operator(&p, n).unwrap();
        assert!(max_abs_diff(f.matrix(), &want) < 1e-14);
        assert!(f.op().hermitian_deviation() < TOL_OP);
    }

    #[test]
    fn eigenprojector_examples() {
        let q = build_eigenprojectors(&p10(), 1).unwrap();
        assert_eq!(q.get(0).unwrap().matrix(), &diag(&[0.0, 1.0]));
        assert_eq!(q.get(1).unwrap().matrix(), &diag(&[1.0, 0.0]));

        let q = build_eigenprojectors(&p10(), 2).unwrap();
        assert_eq!(q.get(1).unwrap().matrix(), &diag(&[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn eigenprojector_traces_are_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let p = random_projector(2, 1, &mut rng).unwrap();
        for n in 1..=6 {
            let q = build_eigenprojectors(&p, n).unwrap();
            for (k, proj) in q.iter().enumerate() {
                let trace = proj.matrix().trace();
                let want = binomial_coefficient(n as u64, k as u64) as f64;
                assert!((trace.re - want).abs() < 1e-10 && trace.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn eigenprojectors_match_recursive_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (d, r, n) in [(2, 1, 5), (3, 1, 3), (3, 2, 3), (4, 2, 2)] {
            let p = random_projector(d, r, &mut rng).unwrap();
            let q = build_eigenprojectors(&p, n).unwrap();
            for (got, want) in q.iter().zip(recursive_family(&p, n)) {
                assert!(max_abs_diff(got.matrix(), &want) < 1e-13);
            }
        }
    }

    #[test]
    fn family_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for (d, r, n) in [(2, 1, 4), (3, 1, 3), (3, 2, 2)] {
            let p = random_projector(d, r, &mut rng).unwrap();
            let q = build_eigenprojectors(&p, n).unwrap();
            assert!(q.defects().max() < TOL_OP, "{:?}", q.defects());
        }
    }

    #[test]
    fn enumeration_cap() {
        assert_eq!(
            build_eigenprojectors(&p10(), 13).unwrap_err(),
            Error::TooManyCopies { n: 13, cap: 12 }
        );
    }

    #[test]
    fn spectrum_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let p = random_projector(2, 1, &mut rng).unwrap();
        let report = verify_spectrum(&build_frequency_operator(&p, 3).unwrap()).unwrap();
        assert!(report.passed() && report.multiplicity_checked);
        let mult: Vec<_> = report
            .entries
            .iter()
            .map(|e| (e.k, e.multiplicity))
            .collect();
        assert_eq!(mult, vec![(0, 1), (1, 3), (2, 3), (3, 1)]);

        let report = verify_spectrum(&build_frequency_operator(&p, 1).unwrap()).unwrap();
        let values: Vec<_> = report.entries.iter().map(|e| e.eigenvalue).collect();
        assert_eq!(values, vec![0.0, 1.0]);

        let p = random_projector(3, 1, &mut rng).unwrap();
        let report = verify_spectrum(&build_frequency_operator(&p, 4).unwrap()).unwrap();
        assert!(report.membership_ok && !report.multiplicity_checked);
        assert!(report.max_deviation < TOL_EIG);
        // r^K (d-r)^(N-K) C(N,K) for d = 3, r = 1.
        let mult: Vec<_> = report.entries.iter().map(|e| e.multiplicity).collect();
        assert_eq!(mult, vec![16, 32, 24, 8, 1]);
    }

    #[test]
    fn reconstruction_examples() {
        let f = build_frequency_operator(&p10(), 1).unwrap();
        let q = build_eigenprojectors(&p10(), 1).unwrap();
        assert_eq!(spectral_reconstruction_check(&f, &q).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let p = random_projector(2, 1, &mut rng).unwrap();
        let f = build_frequency_operator(&p, 6).unwrap();
        let q = build_eigenprojectors(&p, 6).unwrap();
        assert!(spectral_reconstruction_check(&f, &q).unwrap() < 1e-10);

        let q5 = build_eigenprojectors(&p, 5).unwrap();
        assert!(matches!(
            spectral_reconstruction_check(&f, &q5),
            Err(Error::MismatchedFamily(_))
        ));
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = random_projector(2, 1, &mut rng).unwrap();
        let psi = state_with_probability(&p, 0.3).unwrap();
        for n in 1..=8 {
            let f = build_frequency_operator(&p, n).unwrap();
            let big = tensor_power_state(&psi, n).unwrap();
            assert!((expectation(&f, &big).unwrap() - 0.3).abs() < 1e-10);
        }
        let up = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let f = build_frequency_operator(&p10(), 4).unwrap();
        let big = tensor_power_state(&up, 4).unwrap();
        assert!((expectation(&f, &big).unwrap() - 1.0).abs() < 1e-15);

        let psi = random_state(2, &mut rng).unwrap();
        let f = build_frequency_operator(&p, 1).unwrap();
        let want = probability(&psi, &p).unwrap();
        assert!((expectation(&f, &psi).unwrap() - want).abs() < 1e-14);

        let wrong = tensor_power_state(&psi, 2).unwrap();
        assert!(expectation(&f, &wrong).is_err());
    }

    #[test]
    fn variance_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let p = random_projector(2, 1, &mut rng).unwrap();
        for (prob, n, want) in [
            (0.5, 2, 0.125),
            (0.3, 5, 0.042),
            (0.0, 3, 0.0),
            (1.0, 4, 0.0),
        ] {
            let psi = state_with_probability(&p, prob).unwrap();
            let f = build_frequency_operator(&p, n).unwrap();
            let big = tensor_power_state(&psi, n).unwrap();
            let v = variance_exact(&f, &big, prob).unwrap();
            assert!((v - want).abs() < 1e-10, "p={prob} n={n}: {v}");
        }
    }

    #[test]
    fn variance_exact_flags_disagreement() {
        // Only a non-Hermitian matrix separates ⟨Ψ|F²|Ψ⟩ from ‖FΨ‖².
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let f = FrequencyOperator {
            op: DenseOperator::from_matrix(m, 2, 1).unwrap(),
            source: p10(),
        };
        let psi = StateVector::from_real(&[0.0, 1.0]).unwrap();
        assert!(matches!(
            variance_exact(&f, &psi, 0.0),
            Err(Error::Inconsistent { .. })
        ));
    }

    #[test]
    fn variance_spectral_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let p = random_projector(2, 1, &mut rng).unwrap();
        for (prob, n, want) in [(0.5, 2, 0.125), (0.3, 8, 0.02625)] {
            let psi = state_with_probability(&p, prob).unwrap();
            let q = build_eigenprojectors(&p, n).unwrap();
            let big = tensor_power_state(&psi, n).unwrap();
            assert!((variance_spectral(&q, &big, prob).unwrap() - want).abs() < 1e-10);
        }
        let psi = random_state(2, &mut rng).unwrap();
        let prob = probability(&psi, &p).unwrap();
        let q = build_eigenprojectors(&p, 1).unwrap();
        let v = variance_spectral(&q, &psi, prob).unwrap();
        assert!((v - prob * (1.0 - prob)).abs() < 1e-12);
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial_coefficient(12, 6), 924);
        assert_eq!(binomial_coefficient(8, 0), 1);
        assert_eq!(binomial_coefficient(8, 9), 0);
        assert_eq!(binomial_coefficient(60, 30), 118264581564861424);
    }
}
