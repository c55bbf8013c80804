//! Random states and projectors for property checks.
//!
//! Projectors are drawn by taking the first `rank` columns of a Haar-random
//! unitary, obtained from the QR factorization of a complex Gaussian matrix
//! with the phases of `R`'s diagonal divided out.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, Projector, StateVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed `dim × dim` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = DMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        if n > 0.0 {
            col *= rjj / n;
        }
    }
    q
}

/// Uniformly random rank-`rank` projector on `C^dim`.
pub fn random_projector<R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> Result<Projector> {
    if dim == 0 || rank > dim {
        return Err(Error::InvalidProjector(format!(
            "rank {rank} is not admissible in dimension {dim}"
        )));
    }
    let u = haar_unitary(dim, rng);
    let cols = u.columns(0, rank);
    let m = cols * cols.adjoint();
    // Symmetrize away rounding so the validity check sees an exact Hermitian matrix.
    let m = (&m + m.adjoint()).unscale(2.0);
    Projector::new(m)
}

/// Uniformly random unit vector in `C^dim`.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<StateVector> {
    StateVector::normalized((0..dim).map(|_| gaussian(rng)).collect())
}

/// A state whose probability for `projector` is exactly `p` (up to rounding),
/// built from the projector's range and its complement.
pub fn state_with_probability(projector: &Projector, p: f64) -> Result<StateVector> {
    crate::error::check_range("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1")?;
    let d = projector.dim();
    let perp = crate::hilbert::orthocomplement(projector);
    let pick = |m: &CMatrix| -> Option<nalgebra::DVector<Complex64>> {
        m.column_iter()
            .map(|c| c.into_owned())
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .filter(|c| c.norm() > 1e-6)
            .map(|c| c.normalize())
    };
    let inside = pick(projector.matrix());
    let outside = pick(perp.matrix());
    let amps = match (inside, outside) {
        (Some(u), Some(v)) => {
            u * Complex64::new(p.sqrt(), 0.0) + v * Complex64::new((1.0 - p).sqrt(), 0.0)
        }
        (Some(u), None) if p == 1.0 => u,
        (None, Some(v)) if p == 0.0 => v,
        _ => {
            return Err(Error::OutOfRange {
                name: "p",
                value: p,
                expected: "reachable for this projector",
            })
        }
    };
    debug_assert_eq!(amps.len(), d);
    StateVector::normalized(amps.iter().copied().collect())
}
