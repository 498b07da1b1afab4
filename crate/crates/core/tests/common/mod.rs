//! Reference implementations shared by the integration tests. Nothing here
//! calls the library's solver.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use steerfilter::quantum::{ComplexMatrix, DensityMatrix, C64};
use steerfilter::steering::Targets;

const N: usize = 8;
/// Barrier parameter of the eight second-order cones.
const NU: f64 = 2.0 * N as f64;

/// Random two-qubit state from a 4x4 complex Ginibre matrix of the given rank.
pub fn random_state<R: Rng>(rng: &mut R, rank: usize) -> DensityMatrix {
    let g: Vec<C64> = (0..4 * rank)
        .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let mut m = vec![C64::new(0.0, 0.0); 16];
    for r in 0..4 {
        for c in 0..4 {
            m[4 * r + c] = (0..rank).map(|k| g[r * rank + k] * g[c * rank + k].conj()).sum();
        }
    }
    DensityMatrix::from_unnormalized(ComplexMatrix::from_row_slice(4, 4, &m).unwrap()).unwrap()
}

/// Radius of the smallest hidden-state ball reproducing `targets`, computed
/// by bisection on `t` with an interior-point feasibility test per step.
///
/// Unknowns are the unnormalized hidden states `(w_i, v_i)` of the eight
/// deterministic strategies. The linear reproduction constraints are solved
/// exactly through a null-space parameterization, leaving sixteen free
/// coordinates `z`. For a bound `t`, the phase-I problem
/// `max s  s.t.  t·w_i − ‖v_i‖ ≥ s` is solved with a log barrier on the
/// shifted cones; `t` is feasible iff the optimum is nonnegative.
pub fn oracle_radius(targets: &Targets, tol: f64) -> f64 {
    let p = PhaseOne::new(targets);
    let mut hi = 1.0;
    while !p.feasible(hi) {
        hi *= 2.0;
        assert!(hi < 64.0, "oracle: no feasible radius");
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p.feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

struct PhaseOne {
    /// Minimum-norm particular solution, `x0[c][i]` for component c of state i.
    x0: [[f64; N]; 4],
    /// Null-space basis of the strategy-to-assemblage map.
    null: Vec<[f64; N]>,
}

impl PhaseOne {
    fn new(t: &Targets) -> Self {
        let mut m = DMatrix::<f64>::zeros(6, N);
        for i in 0..N {
            for k in 0..3 {
                m[(2 * k + ((i >> k) & 1), i)] = 1.0;
            }
        }
        let svd = m.clone().svd(true, true);
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10).count();
        assert_eq!(rank, 4);
        // The thin SVD of a wide matrix misses part of the kernel; pad to
        // square to get the full right-singular basis.
        let mut padded = DMatrix::<f64>::zeros(N, N);
        padded.view_mut((0, 0), (6, N)).copy_from(&m);
        let full = padded.svd(false, true);
        let vt = full.v_t.unwrap();
        let null: Vec<[f64; N]> = (0..N)
            .filter(|&r| full.singular_values[r] < 1e-10)
            .map(|r| std::array::from_fn(|i| vt[(r, i)]))
            .collect();
        assert_eq!(null.len(), N - rank);

        let mut x0 = [[0.0; N]; 4];
        for (c, row) in x0.iter_mut().enumerate() {
            let b = DVector::from_iterator(6, (0..6).map(|j| if c == 0 { t.trace[j] } else { t.bloch[j][c - 1] }));
            let sol = svd.solve(&b, 1e-12).unwrap();
            for i in 0..N {
                row[i] = sol[i];
            }
        }
        Self { x0, null }
    }

    fn dim(&self) -> usize {
        4 * self.null.len() + 1
    }

    /// Cone coordinates `(a_i, b_i) = (t·w_i − s, v_i)` as affine maps of
    /// `y = (z, s)`: offset and 4 × dim coefficient matrix.
    fn cone_map(&self, i: usize, t: f64) -> ([f64; 4], DMatrix<f64>) {
        let k = self.null.len();
        let mut l = DMatrix::zeros(4, self.dim());
        for j in 0..k {
            l[(0, j)] = t * self.null[j][i];
            for c in 1..4 {
                l[(c, c * k + j)] = self.null[j][i];
            }
        }
        l[(0, 4 * k)] = -1.0;
        let off = [t * self.x0[0][i], self.x0[1][i], self.x0[2][i], self.x0[3][i]];
        (off, l)
    }

    fn slack(maps: &[([f64; 4], DMatrix<f64>)], y: &DVector<f64>) -> Option<Vec<[f64; 4]>> {
        maps.iter()
            .map(|(off, l)| {
                let x = l * y;
                let ab = [0, 1, 2, 3].map(|c| off[c] + x[c]);
                let d = ab[0] * ab[0] - ab[1] * ab[1] - ab[2] * ab[2] - ab[3] * ab[3];
                (ab[0] > 0.0 && d > 0.0).then_some(ab)
            })
            .collect()
    }

    fn barrier(ab: &[[f64; 4]]) -> f64 {
        ab.iter().map(|a| -(a[0] * a[0] - a[1] * a[1] - a[2] * a[2] - a[3] * a[3]).ln()).sum()
    }

    fn feasible(&self, t: f64) -> bool {
        let n = self.dim();
        let maps: Vec<_> = (0..N).map(|i| self.cone_map(i, t)).collect();
        let mut y = DVector::zeros(n);
        // Strictly feasible start: s below every shifted cone margin.
        let margin = (0..N)
            .map(|i| {
                let v = (self.x0[1][i].powi(2) + self.x0[2][i].powi(2) + self.x0[3][i].powi(2)).sqrt();
                t * self.x0[0][i] - v
            })
            .fold(f64::INFINITY, f64::min);
        y[n - 1] = margin - 1.0;
        let mut kappa = 1.0;
        loop {
            for _ in 0..200 {
                let ab = Self::slack(&maps, &y).unwrap();
                let mut g = DVector::zeros(n);
                g[n - 1] = -kappa;
                let mut h = DMatrix::zeros(n, n);
                for ((_, l), a) in maps.iter().zip(&ab) {
                    let d = a[0] * a[0] - a[1] * a[1] - a[2] * a[2] - a[3] * a[3];
                    let u = DVector::from_row_slice(&[2.0 * a[0], -2.0 * a[1], -2.0 * a[2], -2.0 * a[3]]);
                    let mut hl = &u * u.transpose() / (d * d);
                    hl[(0, 0)] -= 2.0 / d;
                    for c in 1..4 {
                        hl[(c, c)] += 2.0 / d;
                    }
                    g -= l.transpose() * (&u / d);
                    h += l.transpose() * hl * l;
                }
                let step = match h.clone().cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => break,
                };
                let decrement = -g.dot(&step);
                if decrement < 1e-14 {
                    break;
                }
                let f0 = -kappa * y[n - 1] + Self::barrier(&ab);
                let mut alpha = 1.0;
                loop {
                    let trial = &y + alpha * &step;
                    if let Some(abt) = Self::slack(&maps, &trial) {
                        if -kappa * trial[n - 1] + Self::barrier(&abt) <= f0 - 0.25 * alpha * decrement {
                            y = trial;
                            break;
                        }
                    }
                    alpha *= 0.5;
                    if alpha < 1e-12 {
                        break;
                    }
                }
                if y[n - 1] > 0.0 {
                    return true;
                }
            }
            // The optimum lies within ν/κ of the central point.
            if y[n - 1] + NU / kappa < 0.0 {
                return false;
            }
            if kappa > 1e15 {
                return y[n - 1] >= 0.0;
            }
            kappa *= 8.0;
        }
    }
}
