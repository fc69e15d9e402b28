//! Reference computations for tests. Nothing here shares code with the
//! library under test: linear systems are assembled explicitly and solved
//! with a dense LU factorization, and the network forward pass is written out
//! from its closed form.

use nalgebra::{DMatrix, DVector};

/// Corner readings of the reference room in `x + 2y + 4z` order
/// (x left to right, y bottom to top, z front to back).
pub const REFERENCE_CORNERS: [f64; 8] = [19.0, 20.0, 26.0, 27.0, 20.0, 21.0, 25.0, 26.0];

/// Closed-form trilinear blend of 8 corners given in `x + 2y + 4z` order.
pub fn trilinear(c: &[f64; 8], p: [f64; 3]) -> f64 {
    let mut acc = 0.0;
    for z in 0..2 {
        for y in 0..2 {
            for x in 0..2 {
                let w = |bit: usize, t: f64| if bit == 1 { t } else { 1.0 - t };
                acc += w(x, p[0]) * w(y, p[1]) * w(z, p[2]) * c[x + 2 * y + 4 * z];
            }
        }
    }
    acc
}

/// Solves the 7-point discrete Laplace equation on an `n^3` lattice with the
/// boundary layer taken from `boundary(i, j, k)`. Returns all `n^3` values,
/// index `i + n (j + n k)`.
pub fn dense_laplace3d(n: usize, boundary: impl Fn(usize, usize, usize) -> f64) -> Vec<f64> {
    assert!(n >= 3);
    let m = n - 2;
    let unknown = |i: usize, j: usize, k: usize| (i - 1) + m * ((j - 1) + m * (k - 1));
    let interior = |c: usize| c >= 1 && c <= n - 2;
    let mut a = DMatrix::<f64>::zeros(m * m * m, m * m * m);
    let mut rhs = DVector::<f64>::zeros(m * m * m);
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let row = unknown(i, j, k);
                a[(row, row)] = 6.0;
                let neighbors =
                    [(i - 1, j, k), (i + 1, j, k), (i, j - 1, k), (i, j + 1, k), (i, j, k - 1), (i, j, k + 1)];
                for (ni, nj, nk) in neighbors {
                    if interior(ni) && interior(nj) && interior(nk) {
                        a[(row, unknown(ni, nj, nk))] -= 1.0;
                    } else {
                        rhs[row] += boundary(ni, nj, nk);
                    }
                }
            }
        }
    }
    let x = a.lu().solve(&rhs).expect("Laplace system is nonsingular");
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                out[i + n * (j + n * k)] =
                    if interior(i) && interior(j) && interior(k) { x[unknown(i, j, k)] } else { boundary(i, j, k) };
            }
        }
    }
    out
}

/// 5-point discrete Laplace solve on an `n x n` face. Ring nodes take
/// `ring(a, b)`; each node in `pins` is fixed at `pin_value`. Returns `n^2`
/// values, index `a + n b`.
pub fn dense_laplace2d(
    n: usize,
    ring: impl Fn(usize, usize) -> f64,
    pins: &[(usize, usize)],
    pin_value: f64,
) -> Vec<f64> {
    assert!(n >= 3);
    let on_ring = |a: usize, b: usize| a == 0 || b == 0 || a == n - 1 || b == n - 1;
    let fixed = |a: usize, b: usize| -> Option<f64> {
        if on_ring(a, b) {
            Some(ring(a, b))
        } else if pins.contains(&(a, b)) {
            Some(pin_value)
        } else {
            None
        }
    };
    let free: Vec<(usize, usize)> =
        (0..n * n).map(|idx| (idx % n, idx / n)).filter(|&(a, b)| fixed(a, b).is_none()).collect();
    let pos = |a: usize, b: usize| free.iter().position(|&q| q == (a, b));
    let mut mat = DMatrix::<f64>::zeros(free.len(), free.len());
    let mut rhs = DVector::<f64>::zeros(free.len());
    for (row, &(a, b)) in free.iter().enumerate() {
        mat[(row, row)] = 4.0;
        for (na, nb) in [(a - 1, b), (a + 1, b), (a, b - 1), (a, b + 1)] {
            match fixed(na, nb) {
                Some(v) => rhs[row] += v,
                None => mat[(row, pos(na, nb).unwrap())] -= 1.0,
            }
        }
    }
    let x = mat.lu().solve(&rhs).expect("face system is nonsingular");
    (0..n * n)
        .map(|idx| {
            let (a, b) = (idx % n, idx / n);
            fixed(a, b).unwrap_or_else(|| x[pos(a, b).unwrap()])
        })
        .collect()
}

/// `sum_i z_i / (1 + exp(-(w_0i x + w_1i y + w_2i z + b1_i))) + b2`, with `w`
/// stored input-major (`w[k * L + i]`).
pub fn net_forward(w: &[f64], b1: &[f64], z: &[f64], b2: f64, p: [f64; 3]) -> f64 {
    let l = z.len();
    assert_eq!(w.len(), 3 * l);
    assert_eq!(b1.len(), l);
    let mut out = b2;
    for i in 0..l {
        let pre = w[i] * p[0] + w[l + i] * p[1] + w[2 * l + i] * p[2] + b1[i];
        out += z[i] / (1.0 + (-pre).exp());
    }
    out
}

/// Mean squared error of [`net_forward`] over `(point, target)` pairs, with
/// the parameters flattened as `w ++ b1 ++ z ++ [b2]`.
pub fn net_mse(flat: &[f64], hidden: usize, samples: &[([f64; 3], f64)]) -> f64 {
    let (w, rest) = flat.split_at(3 * hidden);
    let (b1, rest) = rest.split_at(hidden);
    let (z, rest) = rest.split_at(hidden);
    let b2 = rest[0];
    samples.iter().map(|(p, t)| (net_forward(w, b1, z, b2, *p) - t).powi(2)).sum::<f64>() / samples.len() as f64
}

/// Central difference `(f(x + h e_i) - f(x - h e_i)) / 2h` for every `i`.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
