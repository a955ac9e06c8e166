//! Independent reference implementations used by the integration and
//! acceptance tests. Everything here works on plain row-major `Vec<C64>`
//! with naive loops and shares no numerical code with the library beyond
//! the `TensorOperator` container.

#![allow(dead_code)]

use ddmem::model::LindbladGenerator;
use ddmem::tensor::{TensorOperator, C64, ONE, ZERO};
use rand::Rng;

pub type Mat = Vec<C64>;

pub fn matmul(a: &[C64], b: &[C64], n: usize) -> Mat {
    let mut c = vec![ZERO; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn matvec(a: &[C64], x: &[C64]) -> Mat {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|k| a[i * n + k] * x[k]).sum()).collect()
}

pub fn adjoint(a: &[C64], n: usize) -> Mat {
    let mut b = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            b[j * n + i] = a[i * n + j].conj();
        }
    }
    b
}

pub fn identity(n: usize) -> Mat {
    let mut m = vec![ZERO; n * n];
    for i in 0..n {
        m[i * n + i] = ONE;
    }
    m
}

pub fn kron_plain(a: &[C64], na: usize, b: &[C64], nb: usize) -> Mat {
    let n = na * nb;
    let mut m = vec![ZERO; n * n];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    m[(i * nb + k) * n + j * nb + l] = a[i * na + j] * b[k * nb + l];
                }
            }
        }
    }
    m
}

fn one_norm(a: &[C64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring around a truncated Taylor series.
pub fn expm(a: &[C64], n: usize) -> Mat {
    let norm = one_norm(a, n);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(s as i32);
    let x: Mat = a.iter().map(|v| v * scale).collect();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = matmul(&term, &x, n);
        for v in term.iter_mut() {
            *v /= k as f64;
        }
        let mut biggest = 0.0f64;
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
            biggest = biggest.max(t.norm());
        }
        if biggest < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result, n);
    }
    result
}

/// Row-major vectorization: `vec(A X B) = (A ⊗ B^T) vec(X)`.
pub fn liouvillian(h: &TensorOperator, jumps: &[(f64, TensorOperator)]) -> Mat {
    let n = h.side();
    let id = identity(n);
    let transpose = |m: &TensorOperator| -> Mat {
        let mut t = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                t[j * n + i] = m.get(i, j);
            }
        }
        t
    };
    let hd = h.data().to_vec();
    let minus_i = C64::new(0.0, -1.0);
    let mut l: Mat = kron_plain(&hd, n, &id, n).iter().map(|v| v * minus_i).collect();
    for (v, w) in l.iter_mut().zip(kron_plain(&id, n, &transpose(h), n)) {
        *v -= w * minus_i;
    }
    for (rate, op) in jumps {
        let a = op.data().to_vec();
        let ad = adjoint(&a, n);
        let ada = matmul(&ad, &a, n);
        let ada_t = transpose(&TensorOperator::new(vec![n], ada.clone()).unwrap());
        let conj: Mat = a.iter().map(|v| v.conj()).collect();
        let sandwich = kron_plain(&a, n, &conj, n);
        let left = kron_plain(&ada, n, &id, n);
        let right = kron_plain(&id, n, &ada_t, n);
        for i in 0..l.len() {
            l[i] += (sandwich[i] - (left[i] + right[i]) * 0.5) * *rate;
        }
    }
    l
}

/// `exp(L t)` for the generator, as a dense `side^2 x side^2` matrix.
pub fn propagator_matrix(gen: &LindbladGenerator, t: f64) -> Mat {
    let l = liouvillian(gen.hamiltonian(), gen.jumps());
    let d = gen.side() * gen.side();
    expm(&l.iter().map(|v| v * t).collect::<Vec<_>>(), d)
}

/// Term-by-term `-i[H, rho] + sum r (L rho L^dag - {L^dag L, rho}/2)`.
pub fn lindblad_terms(h: &TensorOperator, jumps: &[(f64, TensorOperator)], rho: &TensorOperator) -> Mat {
    let n = h.side();
    let (hd, r) = (h.data(), rho.data());
    let minus_i = C64::new(0.0, -1.0);
    let hr = matmul(hd, r, n);
    let rh = matmul(r, hd, n);
    let mut out: Mat = hr.iter().zip(&rh).map(|(a, b)| (a - b) * minus_i).collect();
    for (rate, op) in jumps {
        let a = op.data();
        let ad = adjoint(a, n);
        let ada = matmul(&ad, a, n);
        let lrl = matmul(&matmul(a, r, n), &ad, n);
        let anti_l = matmul(&ada, r, n);
        let anti_r = matmul(r, &ada, n);
        for i in 0..out.len() {
            out[i] += (lrl[i] - (anti_l[i] + anti_r[i]) * 0.5) * *rate;
        }
    }
    out
}

/// `Tr_B` of an operator on `A ⊗ B` by explicit summation.
pub fn trace_out_second(op: &[C64], na: usize, nb: usize) -> Mat {
    let n = na * nb;
    let mut out = vec![ZERO; na * na];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                out[i * na + j] += op[(i * nb + k) * n + j * nb + k];
            }
        }
    }
    out
}

/// `Tr_A` of an operator on `A ⊗ B` by explicit summation.
pub fn trace_out_first(op: &[C64], na: usize, nb: usize) -> Mat {
    let n = na * nb;
    let mut out = vec![ZERO; nb * nb];
    for k in 0..nb {
        for l in 0..nb {
            for i in 0..na {
                out[k * nb + l] += op[(i * nb + k) * n + i * nb + l];
            }
        }
    }
    out
}

/// Applies `prop` (acting on `S ⊗ E`) to every ancilla block of a state on
/// `A ⊗ S ⊗ E`, which is how `I_A ⊗ exp(L t)` acts.
pub fn evolve_ancilla_blocks(prop: &[C64], state: &[C64], na: usize, nse: usize) -> Mat {
    let n = na * nse;
    let mut out = vec![ZERO; n * n];
    for a in 0..na {
        for b in 0..na {
            let mut block = Vec::with_capacity(nse * nse);
            for r in 0..nse {
                for c in 0..nse {
                    block.push(state[(a * nse + r) * n + b * nse + c]);
                }
            }
            let evolved = matvec(prop, &block);
            for r in 0..nse {
                for c in 0..nse {
                    out[(a * nse + r) * n + b * nse + c] = evolved[r * nse + c];
                }
            }
        }
    }
    out
}

/// Conjugates the system factor of an `A ⊗ S ⊗ E` state by the qubit unitary `k`.
pub fn kick_system(state: &[C64], k: &TensorOperator, na: usize, ne: usize) -> Mat {
    let full = kron_plain(&kron_plain(&identity(na), na, k.data(), 2), 2 * na, &identity(ne), ne);
    let n = na * 2 * ne;
    matmul(&matmul(&full, state, n), &adjoint(&full, n), n)
}

/// `|psi><psi|` for `|psi> = (|00> + |11>) / sqrt 2` on ancilla ⊗ system.
pub fn max_entangled() -> Mat {
    let mut m = vec![ZERO; 16];
    for &r in &[0usize, 3] {
        for &c in &[0usize, 3] {
            m[r * 4 + c] = C64::new(0.5, 0.0);
        }
    }
    m
}

/// Erased composition by simulation: evolve ancilla ⊗ system ⊗ fresh
/// environment for one segment, trace the environment out, re-attach a
/// fresh environment state, and repeat `n` times.
pub fn tensor_refresh_choi(gen: &LindbladGenerator, rho_e: &TensorOperator, tau: f64, n: usize) -> Mat {
    let ne = rho_e.side();
    let prop = propagator_matrix(gen, tau);
    let mut as_state = max_entangled();
    for _ in 0..n {
        let full = kron_plain(&as_state, 4, rho_e.data(), ne);
        let evolved = evolve_ancilla_blocks(&prop, &full, 2, 2 * ne);
        as_state = trace_out_second(&evolved, 4, ne);
    }
    as_state
}

/// Choi matrix of the controlled map by full `A ⊗ S ⊗ E` simulation:
/// evolve, kick, evolve, kick, ... with the dense propagator.
pub fn full_space_choi(gen: &LindbladGenerator, rho_e: &TensorOperator, tau: f64, kicks: &[TensorOperator]) -> Mat {
    let ne = rho_e.side();
    let prop = propagator_matrix(gen, tau);
    let mut state = kron_plain(&max_entangled(), 4, rho_e.data(), ne);
    let segments = kicks.len().max(1);
    for j in 0..segments {
        state = evolve_ancilla_blocks(&prop, &state, 2, 2 * ne);
        if let Some(k) = kicks.get(j) {
            state = kick_system(&state, k, 2, ne);
        }
    }
    trace_out_second(&state, 4, ne)
}

/// Final qubit state of `rho_s ⊗ rho_e` under the same protocol.
pub fn full_space_state(prop: &[C64], rho_s: &TensorOperator, rho_e: &TensorOperator, kicks: &[TensorOperator]) -> Mat {
    let ne = rho_e.side();
    let mut state = kron_plain(rho_s.data(), 2, rho_e.data(), ne);
    let segments = kicks.len().max(1);
    for j in 0..segments {
        state = matvec(prop, &state);
        if let Some(k) = kicks.get(j) {
            state = kick_system(&state, k, 1, ne);
        }
    }
    trace_out_second(&state, 2, ne)
}

/// Number of eigenvalues of Hermitian `h` below `sigma`, from the signs of
/// the pivots of `h - sigma I` (Sylvester's law of inertia).
pub fn count_below(h: &[C64], n: usize, sigma: f64) -> usize {
    let mut a: Mat = h.to_vec();
    for i in 0..n {
        a[i * n + i] -= sigma;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut p = a[k * n + k].re;
        if p.abs() < 1e-300 {
            p = -1e-300;
        }
        if p < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = a[i * n + k] / p;
            for j in k..n {
                let v = a[k * n + j];
                a[i * n + j] -= f * v;
            }
        }
    }
    negatives
}

/// Eigenvalues of Hermitian `h`, ascending, by bisection on the inertia count.
pub fn bisection_eigenvalues(h: &TensorOperator) -> Vec<f64> {
    let n = h.side();
    let bound = (0..n)
        .map(|i| (0..n).map(|j| h.get(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(h.data(), n, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-13 * bound {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize) -> TensorOperator {
    let g: Mat = (0..n * n).map(|_| random_complex(rng)).collect();
    let gd = adjoint(&g, n);
    operator(&[n], g.iter().zip(&gd).map(|(a, b)| (a + b) * 0.5).collect())
}

/// Random full-rank density matrix `G G^dag / Tr`.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> TensorOperator {
    let g: Vec<C64> = (0..n * n).map(|_| random_complex(rng)).collect();
    let ggd = matmul(&g, &adjoint(&g, n), n);
    let tr: f64 = (0..n).map(|i| ggd[i * n + i].re).sum();
    TensorOperator::new(vec![n], ggd.iter().map(|v| v / tr).collect()).unwrap()
}

/// Random qubit state with Bloch vector drawn uniformly from the ball.
pub fn random_qubit<R: Rng>(rng: &mut R) -> TensorOperator {
    loop {
        let v: [f64; 3] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return ddmem::tensor::qubit::bloch_state(v[0], v[1], v[2]);
        }
    }
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Trace distance of two small Hermitian matrices via the bisection
/// eigenvalues of their difference.
pub fn trace_distance_oracle(a: &[C64], b: &[C64], n: usize) -> f64 {
    let diff = TensorOperator::new(vec![n], a.iter().zip(b).map(|(x, y)| x - y).collect()).unwrap();
    0.5 * bisection_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>()
}

pub fn operator(dims: &[usize], data: Mat) -> TensorOperator {
    TensorOperator::new(dims.to_vec(), data).unwrap()
}
