//! Ground-state oracle: dense Hermitian diagonalization for small registers
//! and a matrix-free Lanczos solver for larger ones.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::Hamiltonian;
use crate::rng::stream_rng;
use crate::simulator::StateVector;

/// Largest register handled by [`ground_state`].
pub const MAX_GROUND_STATE_QUBITS: usize = 14;
/// Registers up to this size may use [`ground_state_dense`].
pub const MAX_DENSE_QUBITS: usize = 10;
/// [`ground_state`] switches from dense to Lanczos above this size.
pub const DENSE_CUTOFF: usize = 6;

pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub e_gs: f64,
    pub ground_state: StateVector,
    /// `E_1 - E_0`; zero for a degenerate ground space.
    pub degeneracy_gap: f64,
    pub residual: f64,
    pub method: Method,
}

#[derive(Serialize, Deserialize)]
struct GroundTruthRepr {
    n: usize,
    e_gs: f64,
    degeneracy_gap: f64,
    residual: f64,
    method: Method,
    amplitudes: Vec<[f64; 2]>,
}

impl GroundTruth {
    pub fn probabilities(&self) -> Vec<f64> {
        self.ground_state.probabilities()
    }

    pub fn to_json(&self) -> String {
        let repr = GroundTruthRepr {
            n: self.ground_state.n(),
            e_gs: self.e_gs,
            degeneracy_gap: self.degeneracy_gap,
            residual: self.residual,
            method: self.method,
            amplitudes: self.ground_state.amps().iter().map(|a| [a.re, a.im]).collect(),
        };
        serde_json::to_string_pretty(&repr).expect("ground truth serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: GroundTruthRepr = serde_json::from_str(text).map_err(|e| Error::json("ground truth", e))?;
        let amps = repr.amplitudes.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(GroundTruth {
            e_gs: repr.e_gs,
            ground_state: StateVector::from_amps(repr.n, amps)?,
            degeneracy_gap: repr.degeneracy_gap,
            residual: repr.residual,
            method: repr.method,
        })
    }
}

/// Lowest eigenpair of `h`, dense for small registers and Lanczos otherwise.
pub fn ground_state(h: &Hamiltonian) -> Result<GroundTruth> {
    if h.n() > MAX_GROUND_STATE_QUBITS {
        return Err(Error::InvalidSize(format!(
            "ground state limited to n <= {MAX_GROUND_STATE_QUBITS}, got {}",
            h.n()
        )));
    }
    if h.n() <= DENSE_CUTOFF {
        ground_state_dense(h)
    } else {
        ground_state_lanczos(h)
    }
}

pub fn ground_state_dense(h: &Hamiltonian) -> Result<GroundTruth> {
    let n = h.n();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::InvalidSize(format!("dense path limited to n <= {MAX_DENSE_QUBITS}, got {n}")));
    }
    let dim = 1usize << n;
    let dense = h.to_dense();
    let matrix = DMatrix::from_fn(dim, dim, |r, c| dense[r * dim + c]);
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let gap = if dim > 1 { eig.eigenvalues[order[1]] - e0 } else { 0.0 };
    let vec: Vec<Complex64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    finish(h, e0, vec, gap.max(0.0), Method::Dense)
}

pub fn ground_state_lanczos(h: &Hamiltonian) -> Result<GroundTruth> {
    let (e0, v0) = lanczos_lowest(h, &[], 0)?;
    let dim = 1usize << h.n();
    let gap = if dim > 1 {
        let (e1, _) = lanczos_lowest(h, std::slice::from_ref(&v0), 1)?;
        (e1 - e0).max(0.0)
    } else {
        0.0
    };
    finish(h, e0, v0, gap, Method::Lanczos)
}

fn finish(h: &Hamiltonian, e0: f64, mut vec: Vec<Complex64>, gap: f64, method: Method) -> Result<GroundTruth> {
    normalize(&mut vec);
    fix_phase(&mut vec);
    let residual = residual_norm(h, e0, &vec);
    if residual > RESIDUAL_TOL {
        return Err(Error::NoConvergence { residual });
    }
    Ok(GroundTruth {
        e_gs: e0,
        ground_state: StateVector::from_amps_unchecked(h.n(), vec),
        degeneracy_gap: gap,
        residual,
        method,
    })
}

/// Rotates the global phase so the largest amplitude is real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let Some(big) = v.iter().copied().max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr())) else {
        return;
    };
    if big.norm() == 0.0 {
        return;
    }
    let rot = big.conj() / big.norm();
    for a in v.iter_mut() {
        *a *= rot;
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [Complex64]) {
    let n = norm(a);
    for x in a.iter_mut() {
        *x /= n;
    }
}

fn project_out(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for b in basis {
        let c = dot(b, w);
        for (x, y) in w.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

fn residual_norm(h: &Hamiltonian, e: f64, v: &[Complex64]) -> f64 {
    let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
    h.apply_into(v, &mut hv);
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

const KRYLOV_DIM: usize = 60;
const MAX_RESTARTS: usize = 200;

/// Restarted Lanczos with full reorthogonalization, restricted to the
/// orthogonal complement of `deflate`.
fn lanczos_lowest(h: &Hamiltonian, deflate: &[Vec<Complex64>], stream: u64) -> Result<(f64, Vec<Complex64>)> {
    let dim = 1usize << h.n();
    let mut rng = stream_rng(0x5eed ^ stream, "lanczos-start");
    let mut start: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    project_out(&mut start, deflate);
    normalize(&mut start);

    let m = KRYLOV_DIM.min(dim - deflate.len());
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut best = (f64::INFINITY, start.clone(), f64::INFINITY);
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            h.apply_into(&basis[j], &mut w);
            alpha.push(dot(&basis[j], &w).re);
            // Two passes of classical Gram-Schmidt keep the basis orthogonal.
            for _ in 0..2 {
                project_out(&mut w, &basis);
                project_out(&mut w, deflate);
            }
            let b = norm(&w);
            if j + 1 == m || b < 1e-12 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let low = (0..k).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).expect("k >= 1");
        let mut x = vec![Complex64::new(0.0, 0.0); dim];
        for (i, b) in basis.iter().enumerate().take(k) {
            let y = eig.eigenvectors[(i, low)];
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi += bi * y;
            }
        }
        project_out(&mut x, deflate);
        normalize(&mut x);
        let rayleigh = {
            h.apply_into(&x, &mut w);
            dot(&x, &w).re
        };
        let residual = residual_norm(h, rayleigh, &x);
        if residual < best.2 {
            best = (rayleigh, x.clone(), residual);
        }
        if residual <= RESIDUAL_TOL * 0.1 {
            break;
        }
        start = x;
    }
    if best.2 > RESIDUAL_TOL {
        return Err(Error::NoConvergence { residual: best.2 });
    }
    Ok((best.0, best.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_tfim, Boundary};

    #[test]
    fn two_site_critical_chain() {
        let h = build_tfim(2, 1.0, Boundary::Open).unwrap();
        for gt in [ground_state_dense(&h).unwrap(), ground_state_lanczos(&h).unwrap()] {
            // Symmetric sector {(|00>+|11>), (|01>+|10>)} carries [[-1, -2], [-2, 1]].
            assert!((gt.e_gs + 5f64.sqrt()).abs() < 1e-10, "{:?} {}", gt.method, gt.e_gs);
            assert!(gt.residual <= RESIDUAL_TOL);
            // Stoquastic chain: nonnegative real amplitudes after phase fixing.
            assert!(gt.ground_state.amps().iter().all(|a| a.re > -1e-10 && a.im.abs() < 1e-10));
        }
    }

    #[test]
    fn classical_chain_is_degenerate() {
        let h = build_tfim(2, 0.0, Boundary::Open).unwrap();
        for gt in [ground_state_dense(&h).unwrap(), ground_state_lanczos(&h).unwrap()] {
            assert!((gt.e_gs + 1.0).abs() < 1e-10);
            assert!(gt.degeneracy_gap.abs() < 1e-9);
        }
    }

    #[test]
    fn dense_and_lanczos_agree() {
        for (n, h_field) in [(3, 0.5), (5, 1.0), (7, 1.3), (8, 1.0)] {
            let h = build_tfim(n, h_field, Boundary::Open).unwrap();
            let a = ground_state_dense(&h).unwrap();
            let b = ground_state_lanczos(&h).unwrap();
            assert!((a.e_gs - b.e_gs).abs() < 1e-8, "n={n}");
            assert!((a.degeneracy_gap - b.degeneracy_gap).abs() < 1e-6, "n={n}");
            let overlap: Complex64 = a.ground_state.amps().iter().zip(b.ground_state.amps()).map(|(x, y)| x.conj() * y).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn json_round_trip() {
        let gt = ground_state(&build_tfim(3, 1.0, Boundary::Open).unwrap()).unwrap();
        let back = GroundTruth::from_json(&gt.to_json()).unwrap();
        assert_eq!(back.e_gs, gt.e_gs);
        assert_eq!(back.ground_state, gt.ground_state);
    }

    #[test]
    fn oversized_register_is_rejected() {
        let h = build_tfim(11, 1.0, Boundary::Open).unwrap();
        assert!(matches!(ground_state_dense(&h), Err(Error::InvalidSize(_))));
    }
}
