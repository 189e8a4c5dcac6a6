//! Reference implementations used to check the library from the outside.
//! None of these call into the code paths they are compared against.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtc_core::qsim::{Angle, Circuit, Gate};

pub type CMatrix = Vec<Vec<Complex64>>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                .collect()
        })
        .collect()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn add(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn matvec(a: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn h_matrix() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]
}

pub fn p_matrix(t: f64) -> CMatrix {
    vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), Complex64::from_polar(1.0, t)],
    ]
}

pub fn ry_matrix(t: f64) -> CMatrix {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
}

fn proj(bit: usize) -> CMatrix {
    let mut m = vec![vec![c(0.0, 0.0); 2]; 2];
    m[bit][bit] = c(1.0, 0.0);
    m
}

fn x_matrix() -> CMatrix {
    vec![
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(1.0, 0.0), c(0.0, 0.0)],
    ]
}

/// Tensor product with qubit `n-1` as the leftmost factor, so qubit 0 is
/// the least significant bit of the basis index.
pub fn embed(n: usize, ops: &[(usize, CMatrix)]) -> CMatrix {
    let mut out = vec![vec![c(1.0, 0.0)]];
    for q in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map_or_else(|| identity(2), |(_, m)| m.clone());
        out = kron(&out, &factor);
    }
    out
}

pub fn gate_matrix(gate: &Gate, n: usize) -> CMatrix {
    let angle = |a: &Angle| a.value().expect("bound angle");
    match gate {
        Gate::H { qubit } => embed(n, &[(*qubit, h_matrix())]),
        Gate::P { qubit, angle: a } => embed(n, &[(*qubit, p_matrix(angle(a)))]),
        Gate::Ry { qubit, angle: a } => embed(n, &[(*qubit, ry_matrix(angle(a)))]),
        Gate::Cx { control, target } => add(
            &embed(n, &[(*control, proj(0))]),
            &embed(n, &[(*control, proj(1)), (*target, x_matrix())]),
        ),
    }
}

pub fn circuit_unitary(circuit: &Circuit) -> CMatrix {
    let mut u = identity(1 << circuit.n_qubits);
    for g in &circuit.gates {
        u = matmul(&gate_matrix(g, circuit.n_qubits), &u);
    }
    u
}

pub fn basis_zero(n: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Circuit {
    let mut circuit = Circuit::new(n);
    for _ in 0..len {
        let q = rng.gen_range(0..n);
        let t = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let kind = if n > 1 {
            rng.gen_range(0..4)
        } else {
            rng.gen_range(0..3)
        };
        let g = match kind {
            0 => Gate::h(q),
            1 => Gate::p(q, t),
            2 => Gate::ry(q, t),
            _ => {
                let mut target = rng.gen_range(0..n - 1);
                if target >= q {
                    target += 1;
                }
                Gate::cx(q, target)
            }
        };
        circuit.push(g);
    }
    circuit
}

/// ZZ feature-map state written as `(D(x) H^n)^reps |0>`, where `D` is the
/// diagonal phase `exp(i (sum_i 2 x_i b_i + sum_pairs 2 phi_ij (b_i xor b_j)))`
/// and `phi_ij = (pi - x_i)(pi - x_j)` over linear neighbours.
pub fn zz_state_oracle(x: &[f64], reps: usize) -> Vec<Complex64> {
    use std::f64::consts::PI;
    let n = x.len();
    let dim = 1usize << n;
    let mut hn = vec![vec![c(1.0, 0.0)]];
    for _ in 0..n {
        hn = kron(&hn, &h_matrix());
    }
    let mut state = basis_zero(n);
    for _ in 0..reps {
        state = matvec(&hn, &state);
        for (b, amp) in state.iter_mut().enumerate() {
            let bit = |q: usize| ((b >> q) & 1) as f64;
            let mut phase = 0.0;
            for q in 0..n {
                phase += 2.0 * x[q] * bit(q);
            }
            for q in 0..n.saturating_sub(1) {
                let parity = ((b >> q) ^ (b >> (q + 1))) & 1;
                phase += 2.0 * (PI - x[q]) * (PI - x[q + 1]) * parity as f64;
            }
            *amp *= Complex64::from_polar(1.0, phase);
        }
        debug_assert_eq!(state.len(), dim);
    }
    state
}

pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr()
}

/// Cyclic Jacobi rotations; returns eigenvalues in descending order with
/// their eigenvectors (as columns of the second value, one Vec per vector).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = cs * mkp - sn * mkq;
                    m[k][q] = sn * mkp + cs * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = cs * mpk - sn * mqk;
                    m[q][k] = sn * mpk + cs * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = cs * vkp - sn * vkq;
                    v[k][q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

/// Sample covariance with the `n - 1` denominator.
pub fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= n - 1.0;
        }
    }
    cov
}

pub fn min_eigenvalue(a: &[Vec<f64>]) -> f64 {
    *jacobi_eigen(a).0.last().unwrap()
}

/// `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`
pub fn dual_value(k: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let m = y.len();
    let mut quad = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation of `(alpha, b)`, measured on `y_i f(x_i)`.
pub fn kkt_violation(k: &[Vec<f64>], y: &[f64], alpha: &[f64], b: f64, cbox: f64) -> f64 {
    let m = y.len();
    let mut worst: f64 = 0.0;
    let eq: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
    worst = worst.max(eq.abs());
    for i in 0..m {
        worst = worst.max(-alpha[i]).max(alpha[i] - cbox);
        let f: f64 = (0..m).map(|j| alpha[j] * y[j] * k[i][j]).sum::<f64>() + b;
        let margin = y[i] * f;
        let scale = 1e-8 * cbox;
        let v = if alpha[i] <= scale {
            1.0 - margin
        } else if alpha[i] >= cbox - scale {
            margin - 1.0
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Uniform box point moved onto `sum alpha_i y_i = 0` by shrinking the
/// heavier side, which keeps it inside the box.
pub fn random_feasible(rng: &mut ChaCha8Rng, y: &[f64], cbox: f64) -> Vec<f64> {
    let mut a: Vec<f64> = y.iter().map(|_| rng.gen_range(0.0..=cbox)).collect();
    let pos: f64 = a
        .iter()
        .zip(y)
        .filter(|(_, &y)| y > 0.0)
        .map(|(a, _)| a)
        .sum();
    let neg: f64 = a
        .iter()
        .zip(y)
        .filter(|(_, &y)| y < 0.0)
        .map(|(a, _)| a)
        .sum();
    let (shrink_pos, factor) = if pos > neg {
        (true, neg / pos)
    } else {
        (false, pos / neg)
    };
    for (ai, &yi) in a.iter_mut().zip(y) {
        if (yi > 0.0) == shrink_pos {
            *ai *= factor;
        }
    }
    a
}

/// Lloyd's k-means from several seeded starts; returns the labelling with
/// the lowest inertia.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut best = (f64::INFINITY, vec![0; points.len()]);
    for _ in 0..20 {
        let mut centers: Vec<Vec<f64>> = Vec::new();
        while centers.len() < k {
            let p = &points[rng.gen_range(0..points.len())];
            if !centers.contains(p) {
                centers.push(p.clone());
            }
        }
        let mut assign = vec![0; points.len()];
        for _ in 0..100 {
            for (i, p) in points.iter().enumerate() {
                assign[i] = (0..k)
                    .min_by(|&a, &b| {
                        dist(p, &centers[a])
                            .partial_cmp(&dist(p, &centers[b]))
                            .unwrap()
                    })
                    .unwrap();
            }
            for (j, center) in centers.iter_mut().enumerate() {
                let members: Vec<&Vec<f64>> = points
                    .iter()
                    .zip(&assign)
                    .filter(|(_, &a)| a == j)
                    .map(|(p, _)| p)
                    .collect();
                if !members.is_empty() {
                    for (d, v) in center.iter_mut().enumerate() {
                        *v = members.iter().map(|m| m[d]).sum::<f64>() / members.len() as f64;
                    }
                }
            }
        }
        let inertia: f64 = points
            .iter()
            .zip(&assign)
            .map(|(p, &a)| dist(p, &centers[a]))
            .sum();
        if inertia < best.0 {
            best = (inertia, assign);
        }
    }
    best.1
}

/// Fraction of points whose cluster's majority label matches their own.
pub fn purity(clusters: &[usize], labels: &[usize], k: usize, n_labels: usize) -> f64 {
    let mut counts = vec![vec![0usize; n_labels]; k];
    for (&c, &l) in clusters.iter().zip(labels) {
        counts[c][l] += 1;
    }
    counts
        .iter()
        .map(|row| row.iter().max().copied().unwrap_or(0))
        .sum::<usize>() as f64
        / labels.len() as f64
}

/// Three Gaussian blobs in `[0, pi]^2`, `per_class` points each, classes
/// interleaved.
pub fn blobs(seed: u64, per_class: usize, spread: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centers = [[0.8, 0.8], [2.3, 0.9], [1.5, 2.4]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..per_class {
        for (k, ctr) in centers.iter().enumerate() {
            x.push(
                ctr.iter()
                    .map(|&m| {
                        let z: f64 = rng.sample(rand_distr::StandardNormal);
                        (m + spread * z).clamp(0.0, std::f64::consts::PI)
                    })
                    .collect(),
            );
            y.push(k);
        }
    }
    (x, y)
}
