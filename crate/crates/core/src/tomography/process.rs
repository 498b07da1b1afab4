use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::counts::{ket, projector, CountsRecord, Port};
use super::state::linear_inversion;
use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::quantum::{fidelity, pauli, ComplexMatrix, DensityMatrix, C64};

/// Residual above which a Kraus fit is flagged as poor.
pub const KRAUS_RESIDUAL_THRESHOLD: f64 = 1e-3;

/// Single-qubit process matrix in the basis {I, σx, σy, σz}:
/// `E(ρ) = Σ χ_mn σ_m ρ σ_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiMatrix(ComplexMatrix);

impl ChiMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.dims() != (4, 4) {
            let (rows, cols) = m.dims();
            return Err(Error::UnsupportedDimensions { rows, cols });
        }
        Ok(Self(m))
    }

    pub fn from_kraus(ops: &[ComplexMatrix]) -> Result<Self> {
        let mut chi = DMatrix::<C64>::zeros(4, 4);
        for f in ops {
            if f.dims() != (2, 2) {
                let (rows, cols) = f.dims();
                return Err(Error::UnsupportedDimensions { rows, cols });
            }
            let a: Vec<C64> = (0..4).map(|m| (&pauli(m) * f).trace() * 0.5).collect();
            for m in 0..4 {
                for n in 0..4 {
                    chi[(m, n)] += a[m] * a[n].conj();
                }
            }
        }
        Ok(Self(ComplexMatrix::from_inner(chi)))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(2);
        for m in 0..4 {
            for n in 0..4 {
                let term = &(&pauli(m) * rho) * &pauli(n);
                out = &out + &ComplexMatrix::from_inner(term.inner() * self.0.get(m, n));
            }
        }
        out
    }

    /// max-abs of `Σ χ_mn σ_n σ_m − I`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let mut s = DMatrix::<C64>::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                s += (&pauli(n) * &pauli(m)).inner() * self.0.get(m, n);
            }
        }
        ComplexMatrix::from_inner(s).max_abs_diff(&ComplexMatrix::identity(2))
    }

    /// Clamps negative eigenvalues of the Hermitian part to zero.
    pub fn project_psd(&self) -> Self {
        Self(self.0.map_spectrum(|x| x.max(0.0)))
    }
}

/// Output operator `E(ρ_in)` (unnormalized) for every preparation, from the
/// summed A1 + A2 counts.
fn channel_outputs(c: &CountsRecord) -> Result<Vec<(char, ComplexMatrix)>> {
    let mut preps: Vec<String> = c.rows.iter().filter(|r| r.port != Port::Direct).map(|r| r.prep.clone()).collect();
    preps.sort();
    preps.dedup();
    let mut out = Vec::new();
    for prep in preps {
        let mut chars = prep.chars();
        let (Some(label), None) = (chars.next(), chars.next()) else {
            return Err(Error::Parse(format!("process preparation must be one label, got {prep:?}")));
        };
        let mut projs: Vec<&str> =
            c.rows.iter().filter(|r| r.prep == prep && r.port != Port::Direct).map(|r| r.projector.as_str()).collect();
        projs.sort();
        projs.dedup();
        let mut samples = Vec::new();
        for p in projs {
            let f = c.frequency(&prep, &[p], Port::A1) + c.frequency(&prep, &[p], Port::A2);
            samples.push((projector(p)?, f));
        }
        let e = linear_inversion(2, &samples).map_err(|_| Error::IncompleteDesign(format!("measurements for input {prep}")))?;
        out.push((label, e));
    }
    Ok(out)
}

/// Standard single-qubit process tomography: linear inversion of
/// `E(ρ_j) = Σ χ_mn σ_m ρ_j σ_n` over the inputs, then PSD projection.
pub fn process_tomography(c: &CountsRecord) -> Result<ChiMatrix> {
    let outputs = channel_outputs(c)?;
    if outputs.len() < 4 {
        return Err(Error::IncompleteDesign(format!("{} input states, at least 4 needed", outputs.len())));
    }
    let rows = 4 * outputs.len();
    let mut b = DMatrix::<C64>::zeros(rows, 16);
    let mut e = DVector::<C64>::zeros(rows);
    for (j, (label, out)) in outputs.iter().enumerate() {
        let rho = ComplexMatrix::projector(&ket(*label)?);
        for m in 0..4 {
            for n in 0..4 {
                let t = &(&pauli(m) * &rho) * &pauli(n);
                for (k, v) in t.row_major().into_iter().enumerate() {
                    b[(4 * j + k, 4 * m + n)] = v;
                }
            }
        }
        for (k, v) in out.row_major().into_iter().enumerate() {
            e[4 * j + k] = v;
        }
    }
    let svd = b.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.iter().any(|&s| s <= 1e-10 * smax) {
        return Err(Error::IncompleteDesign("input states do not span the operator space".into()));
    }
    let x = svd.solve(&e, 0.0).map_err(|_| Error::SingularDesign)?;
    let chi = DMatrix::from_fn(4, 4, |m, n| x[4 * m + n]);
    let chi = ComplexMatrix::from_inner((&chi + chi.adjoint()) * C64::new(0.5, 0.0));
    Ok(ChiMatrix(chi).project_psd())
}

/// Fractions of an unpolarized input leaving through A1 and A2, averaged
/// over the H and V preparations.
pub fn branch_fractions(c: &CountsRecord) -> (f64, f64) {
    let avg = |port| 0.5 * (c.branch_fraction("H", port) + c.branch_fraction("V", port));
    (avg(Port::A1), avg(Port::A2))
}

/// Real Pauli coefficients of the two filter operators:
/// `F_k = Σ_m a_km σ_m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausCoefficients {
    pub a1: [f64; 4],
    pub a2: [f64; 4],
}

impl KrausCoefficients {
    pub fn operators(&self) -> [ComplexMatrix; 2] {
        [self.a1, self.a2].map(|a| {
            (0..4).fold(ComplexMatrix::zeros(2), |acc, m| &acc + &pauli(m).scale(a[m]))
        })
    }

    /// Diagonal entries `(a0 + a3, a0 − a3)` of each operator.
    pub fn diagonal_amplitudes(&self) -> [[f64; 2]; 2] {
        [self.a1, self.a2].map(|a| [a[0] + a[3], a[0] - a[3]])
    }

    pub fn chi(&self) -> ChiMatrix {
        ChiMatrix::from_kraus(&self.operators()).expect("2x2 operators")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KrausFit {
    pub coefficients: KrausCoefficients,
    pub residual: f64,
    pub poor_fit: bool,
}

fn fit_objective(chi: &ComplexMatrix, a1: &[f64], a2: &[f64]) -> f64 {
    let mut s = 0.0;
    for m in 0..4 {
        for n in 0..4 {
            let d = C64::new(a1[m] * a1[n] + a2[m] * a2[n], 0.0) - chi.get(m, n);
            s += d.norm_sqr();
        }
    }
    s
}

/// Scales `u` to squared norm `f`.
fn on_sphere(u: &[f64], f: f64) -> [f64; 4] {
    let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return [f.sqrt(), 0.0, 0.0, 0.0];
    }
    std::array::from_fn(|i| u[i] * f.sqrt() / n)
}

fn leading_sign(a: &[f64; 4]) -> f64 {
    let d = [a[0] + a[3], a[0] - a[3]];
    let lead = if d[0].abs() > 1e-12 { d[0] } else { d[1] };
    if lead < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn canonical_sign(a: &mut [f64; 4]) {
    let s = leading_sign(a);
    a.iter_mut().for_each(|c| *c *= s);
}

fn rotate(a1: &[f64; 4], a2: &[f64; 4], phi: f64) -> ([f64; 4], [f64; 4]) {
    let (s, c) = phi.sin_cos();
    let mut r1 = std::array::from_fn(|i| c * a1[i] + s * a2[i]);
    let mut r2 = std::array::from_fn(|i| -s * a1[i] + c * a2[i]);
    canonical_sign(&mut r1);
    canonical_sign(&mut r2);
    (r1, r2)
}

/// Kraus pairs with the same χ and the same operator norms. A real rotation
/// of (F₁, F₂) keeps χ fixed; it keeps both norms only at angle 0 and at
/// `atan2(2 a₁·a₂, ‖a₁‖² − ‖a₂‖²)`, or at every angle when the operators are
/// orthogonal with equal norms.
enum Orbit {
    Discrete([f64; 4], [f64; 4], f64),
    Continuous([f64; 4], [f64; 4]),
}

fn gauge_orbit(a1: &[f64; 4], a2: &[f64; 4]) -> Orbit {
    let n1: f64 = a1.iter().map(|x| x * x).sum();
    let n2: f64 = a2.iter().map(|x| x * x).sum();
    let d: f64 = a1.iter().zip(a2).map(|(x, y)| x * y).sum();
    let scale = (n1 + n2).max(f64::MIN_POSITIVE);
    if (n1 - n2).abs() <= 1e-9 * scale && d.abs() <= 1e-9 * scale {
        Orbit::Continuous(*a1, *a2)
    } else {
        Orbit::Discrete(*a1, *a2, f64::atan2(2.0 * d, n1 - n2))
    }
}

/// Least-squares minimum of the χ objective under the norm constraints.
fn fit_core(chi: &ChiMatrix, fractions: (f64, f64)) -> Result<(f64, [f64; 4], [f64; 4])> {
    let (f1, f2) = fractions;
    let sum = f1 + f2;
    // Finite counts perturb the sum; rescale unless the data are grossly inconsistent.
    if !(f1 >= 0.0 && f2 >= 0.0 && (sum - 1.0).abs() <= 0.5) {
        return Err(Error::OutOfRange { name: "branch fractions sum", value: sum, lo: 0.5, hi: 1.5 });
    }
    let (f1, f2) = (f1 / sum, f2 / sum);
    let m = chi.matrix();
    let objective = |x: &[f64]| fit_objective(m, &on_sphere(&x[..4], f1), &on_sphere(&x[4..], f2));

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let re = DMatrix::from_fn(4, 4, |r, c| m.get(r, c).re);
    let eig = nalgebra::SymmetricEigen::new(re);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let v = |k: usize| -> Vec<f64> { (0..4).map(|i| eig.eigenvectors[(i, order[k])]).collect() };
    let (v0, v1) = (v(0), v(1));
    for angle in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5] {
        let (c, s) = (f64::cos(angle), f64::sin(angle));
        let mut x: Vec<f64> = (0..4).map(|i| c * v0[i] + s * v1[i]).collect();
        x.extend((0..4).map(|i| -s * v0[i] + c * v1[i]));
        starts.push(x);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b52);
    for _ in 0..8 {
        starts.push((0..8).map(|_| rng.random_range(-1.0..1.0)).collect());
    }

    let nm = NelderMead { f_tol: 1e-22, x_tol: 1e-12, max_evals: 6000 };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x0 in starts {
        let mut r = nm.minimize(objective, &x0, &[0.2; 8]);
        for _ in 0..3 {
            let again = nm.minimize(objective, &r.x, &[0.01; 8]);
            if again.value >= r.value {
                break;
            }
            r = again;
        }
        if best.as_ref().is_none_or(|b| r.value < b.0) {
            best = Some((r.value, r.x));
        }
    }
    let (residual, x) = best.expect("at least one start");
    Ok((residual, on_sphere(&x[..4], f1), on_sphere(&x[4..], f2)))
}

fn select(residual: f64, orbit: Orbit, score: impl Fn(&[f64; 4], &[f64; 4]) -> f64) -> KrausFit {
    let (a1, a2) = match orbit {
        Orbit::Discrete(a1, a2, phi) => {
            let (x, y) = (rotate(&a1, &a2, 0.0), rotate(&a1, &a2, phi));
            if score(&y.0, &y.1) < score(&x.0, &x.1) {
                y
            } else {
                x
            }
        }
        Orbit::Continuous(a1, a2) => {
            let f = |phi: f64| {
                let (r1, r2) = rotate(&a1, &a2, phi);
                score(&r1, &r2)
            };
            let h = std::f64::consts::PI / 360.0;
            let coarse = (0..720).map(|k| k as f64 * h).min_by(|x, y| f(*x).total_cmp(&f(*y))).expect("grid");
            let (mut lo, mut hi) = (coarse - h, coarse + h);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if f(x1) < f(x2) {
                    hi = x2;
                } else {
                    lo = x1;
                }
            }
            rotate(&a1, &a2, 0.5 * (lo + hi))
        }
    };
    KrausFit { coefficients: KrausCoefficients { a1, a2 }, residual, poor_fit: residual > KRAUS_RESIDUAL_THRESHOLD }
}

/// Fits real Pauli coefficients to `chi` under `‖a_k‖² = f_k`, i.e.
/// `Tr(F_k†F_k) = 2 f_k`, with multi-start simplex search.
///
/// χ and the two fractions fix the operators only up to a real rotation
/// between them. Each operator gets a nonnegative leading diagonal entry and
/// the representative with the largest leading entry of `F₁` is returned;
/// [`fit_kraus_with_ports`] resolves the choice from port-resolved data.
pub fn fit_kraus(chi: &ChiMatrix, fractions: (f64, f64)) -> Result<KrausFit> {
    let (residual, a1, a2) = fit_core(chi, fractions)?;
    Ok(select(residual, gauge_orbit(&a1, &a2), |f1, _| -(f1[0] + f1[3])))
}

/// As [`fit_kraus`], choosing among equivalent representatives by the
/// fractions of the H and V inputs leaving through port A1.
pub fn fit_kraus_with_ports(chi: &ChiMatrix, fractions: (f64, f64), a1_fractions_hv: [f64; 2]) -> Result<KrausFit> {
    let (residual, a1, a2) = fit_core(chi, fractions)?;
    let score = |f1: &[f64; 4], _: &[f64; 4]| {
        let op = KrausCoefficients { a1: *f1, a2: [0.0; 4] }.operators()[0].clone();
        let h = op.get(0, 0).norm_sqr() + op.get(1, 0).norm_sqr();
        let v = op.get(0, 1).norm_sqr() + op.get(1, 1).norm_sqr();
        (h - a1_fractions_hv[0]).powi(2) + (v - a1_fractions_hv[1]).powi(2)
    };
    Ok(select(residual, gauge_orbit(&a1, &a2), score))
}

/// Process matrix and port-resolved Kraus fit from one record.
pub fn fit_process(c: &CountsRecord) -> Result<(ChiMatrix, KrausFit)> {
    let chi = process_tomography(c)?;
    let hv = [c.branch_fraction("H", Port::A1), c.branch_fraction("V", Port::A1)];
    let fit = fit_kraus_with_ports(&chi, branch_fractions(c), hv)?;
    Ok((chi, fit))
}

/// Fidelity between the unit-trace normalizations of two process matrices
/// (equivalently, of their Choi states).
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> Result<f64> {
    let ra = DensityMatrix::from_unnormalized(a.matrix().clone())?;
    let rb = DensityMatrix::from_unnormalized(b.matrix().clone())?;
    fidelity(&ra, &rb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterEnsemble;
    use crate::quantum::Side;
    use crate::tomography::counts::{process_settings, simulate_counts, CountSource, Noise};

    fn chi_of(a1: f64, a2: f64) -> (FilterEnsemble, ChiMatrix, CountsRecord) {
        let f = FilterEnsemble::from_diagonals(a1, a2, 1.0, 1.0).unwrap();
        let c = simulate_counts(
            CountSource::Filter { ensemble: &f, side: Side::A },
            &process_settings(),
            10_000,
            Noise::Noiseless,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let chi = process_tomography(&c).unwrap();
        (f, chi, c)
    }

    #[test]
    fn identity_and_dephasing() {
        let (_, chi, _) = chi_of(1.0, 1.0);
        assert!(chi.matrix().max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0, 0.0, 0.0])) < 1e-9);
        let (_, deph, c) = chi_of(1.0, 0.0);
        assert!(deph.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-9);
        assert!(deph.trace_preservation_residual() < 1e-8);
        let (f1, f2) = branch_fractions(&c);
        assert!((f1 - 0.5).abs() < 1e-12 && (f2 - 0.5).abs() < 1e-12);
        assert!((process_fidelity(&chi, &deph).unwrap() - 0.5).abs() < 1e-9);
        assert!((process_fidelity(&deph, &deph).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn chi_reproduces_channel() {
        let (f, chi, _) = chi_of(0.70, 0.20);
        let direct = ChiMatrix::from_kraus(&[f.operator(Side::A, 1), f.operator(Side::A, 2)]).unwrap();
        assert!(chi.matrix().max_abs_diff(direct.matrix()) < 1e-9);
        for label in ['H', 'V', 'D', 'R'] {
            let rho = ComplexMatrix::projector(&ket(label).unwrap());
            let expect = &f.operator(Side::A, 1).sandwich(&rho) + &f.operator(Side::A, 2).sandwich(&rho);
            assert!(chi.apply(&rho).max_abs_diff(&expect) < 1e-9);
        }
    }

    #[test]
    fn kraus_fit_examples() {
        let (_, deph, c) = chi_of(1.0, 0.0);
        let fit = fit_kraus(&deph, branch_fractions(&c)).unwrap();
        let d = fit.coefficients.diagonal_amplitudes();
        assert!((d[0][0] - 1.0).abs() < 1e-6 && d[0][1].abs() < 1e-6, "{d:?}");
        assert!(d[1][0].abs() < 1e-6 && (d[1][1] - 1.0).abs() < 1e-6, "{d:?}");

        let (_, id, c) = chi_of(1.0, 1.0);
        let fit = fit_kraus(&id, branch_fractions(&c)).unwrap();
        let d = fit.coefficients.diagonal_amplitudes();
        assert!((d[0][0] - 1.0).abs() < 1e-6 && (d[0][1] - 1.0).abs() < 1e-6, "{d:?}");
        assert!(fit.coefficients.a2.iter().all(|x| x.abs() < 1e-6));

        let (f, chi, c) = chi_of(0.70, 0.20);
        let (_, fit) = fit_process(&c).unwrap();
        assert!(!fit.poor_fit);
        let d = fit.coefficients.diagonal_amplitudes();
        assert!((d[0][0] - 0.70).abs() < 1e-3 && (d[0][1] - 0.20).abs() < 1e-3, "{d:?}");
        assert!((d[1][0] - f.diagonal(Side::A, 2)[0]).abs() < 1e-3);
        assert!(process_fidelity(&fit.coefficients.chi(), &chi).unwrap() >= 0.999);
    }

    #[test]
    fn port_data_resolves_gauge() {
        // diag(0.2, 0.7) has the same χ and fractions as diag(0.7, 0.2).
        let (_, chi, c) = chi_of(0.20, 0.70);
        let d = fit_kraus(&chi, branch_fractions(&c)).unwrap().coefficients.diagonal_amplitudes();
        assert!((d[0][0] - 0.70).abs() < 1e-3, "{d:?}");
        let d = fit_process(&c).unwrap().1.coefficients.diagonal_amplitudes();
        assert!((d[0][0] - 0.20).abs() < 1e-3 && (d[0][1] - 0.70).abs() < 1e-3, "{d:?}");
    }

    #[test]
    fn incomplete_inputs_are_rejected() {
        let (_, _, c) = chi_of(0.7, 0.2);
        let partial = CountsRecord { rows: c.rows.into_iter().filter(|r| r.prep != "R").collect() };
        assert!(matches!(process_tomography(&partial), Err(Error::IncompleteDesign(_))));
    }
}
