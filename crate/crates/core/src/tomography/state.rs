use nalgebra::{DMatrix, DVector};

use super::counts::{projector, CountsRecord, Port};
use crate::error::{Error, Result};
use crate::quantum::{pauli, ComplexMatrix, DensityMatrix, C64};

/// Pauli operator basis of dimension `dim` (2 or 4), products ordered A-slow.
pub(crate) fn pauli_basis(dim: usize) -> Vec<ComplexMatrix> {
    if dim == 2 {
        return (0..4).map(pauli).collect();
    }
    let mut out = Vec::with_capacity(16);
    for a in 0..4 {
        for b in 0..4 {
            out.push(pauli(a).tensor(&pauli(b)).expect("2x2 factors"));
        }
    }
    out
}

/// Projects the spectrum onto the probability simplex, giving the closest
/// unit-trace PSD matrix in Frobenius norm.
pub fn project_to_density(m: &ComplexMatrix) -> Result<DensityMatrix> {
    let (vals, vecs) = m.eigh();
    let mut sorted = vals.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cum += v;
        let s = (cum - 1.0) / (k + 1) as f64;
        if v - s > 0.0 {
            shift = s;
        }
    }
    let d = DVector::from_iterator(vals.len(), vals.iter().map(|v| C64::new((v - shift).max(0.0), 0.0)));
    let rho = &vecs * DMatrix::from_diagonal(&d) * vecs.adjoint();
    DensityMatrix::from_unnormalized(ComplexMatrix::from_inner(rho))
}

/// Least-squares operator `X` with `Tr(P_i X) ≈ f_i` for measured projector
/// frequencies, expanded in the Pauli basis.
pub(crate) fn linear_inversion(dim: usize, samples: &[(ComplexMatrix, f64)]) -> Result<ComplexMatrix> {
    let basis = pauli_basis(dim);
    let mut a = DMatrix::<f64>::zeros(samples.len(), basis.len());
    let mut y = DVector::<f64>::zeros(samples.len());
    for (i, (p, f)) in samples.iter().enumerate() {
        for (j, s) in basis.iter().enumerate() {
            a[(i, j)] = (p * s).trace().re / dim as f64;
        }
        y[i] = *f;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.len() < basis.len() || svd.singular_values.iter().any(|&s| s <= 1e-10 * smax) {
        return Err(Error::SingularDesign);
    }
    let coef = svd.solve(&y, 0.0).map_err(|_| Error::SingularDesign)?;
    let mut m = ComplexMatrix::zeros(dim);
    for (j, s) in basis.iter().enumerate() {
        m = &m + &s.scale(coef[j] / dim as f64);
    }
    Ok(m)
}

/// Linear inversion over the Pauli basis followed by projection onto
/// unit-trace PSD matrices.
pub fn reconstruct_state(c: &CountsRecord) -> Result<DensityMatrix> {
    let rows: Vec<_> = c.rows.iter().filter(|r| r.port == Port::Direct).collect();
    let first = rows.first().ok_or_else(|| Error::IncompleteDesign("no direct counts".into()))?;
    let dim = 1usize << first.projector.chars().count();
    if dim != 2 && dim != 4 {
        return Err(Error::UnsupportedDimensions { rows: dim, cols: dim });
    }
    if rows.len() < dim * dim {
        return Err(Error::IncompleteDesign(format!("{} settings, at least {} needed", rows.len(), dim * dim)));
    }
    let mut samples = Vec::with_capacity(rows.len());
    for r in &rows {
        let p = projector(&r.projector)?;
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: format!("{dim}"), got: format!("{}", p.dim()) });
        }
        samples.push((p, r.count / r.n as f64));
    }
    let m = linear_inversion(dim, &samples)?;
    let tr = m.trace().re;
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::InvalidState(format!("reconstructed trace {tr}")));
    }
    project_to_density(&m.scale(1.0 / tr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{family_state, fidelity, trace_distance, StateParams};
    use crate::tomography::counts::{simulate_counts, state_settings, CountSource, Noise, StateDesign};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_inversion_is_exact() {
        let rho = family_state(StateParams::new(0.452, 0.647).unwrap());
        for design in [StateDesign::Minimal, StateDesign::Overcomplete] {
            let c = simulate_counts(CountSource::State(&rho), &state_settings(design), 1000, Noise::Noiseless, &mut ChaCha8Rng::seed_from_u64(0))
                .unwrap();
            let est = reconstruct_state(&c).unwrap();
            assert!(trace_distance(&est, &rho).unwrap() < 1e-9);
            assert!(fidelity(&est, &rho).unwrap() >= 0.999999);
        }
    }

    #[test]
    fn incomplete_design_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(4);
        let mut s = state_settings(StateDesign::Minimal);
        s.pop();
        let c = simulate_counts(CountSource::State(&rho), &s, 10, Noise::Noiseless, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matches!(reconstruct_state(&c), Err(Error::IncompleteDesign(_))));

        // 16 settings that only probe H/V on both qubits.
        let mut s = state_settings(StateDesign::Minimal);
        for x in s.iter_mut() {
            x.projector = x.projector.replace(['D', 'R'], "H");
        }
        let c = simulate_counts(CountSource::State(&rho), &s, 10, Noise::Noiseless, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matches!(reconstruct_state(&c), Err(Error::SingularDesign)));
    }

    #[test]
    fn simplex_projection() {
        let m = ComplexMatrix::diag(&[1.2, 0.1, -0.2, -0.1]);
        let rho = project_to_density(&m).unwrap();
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0, 0.0, 0.0])) < 1e-12);
        let m = ComplexMatrix::diag(&[0.5, 0.3, 0.1, 0.1]);
        assert!(project_to_density(&m).unwrap().matrix().max_abs_diff(&m) < 1e-15);
    }
}
