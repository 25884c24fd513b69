//! Truncated Taylor jets in the base variables.
//!
//! A jet of order `k` stores the normalised Taylor coefficients
//! `∂^α f / α!` for every multi-index with `|α| ≤ k`. Multi-indices are kept in
//! graded order, so a jet of lower order is a prefix of a jet of higher order
//! and products are plain Cauchy products.

/// Number of multi-indices of total degree `≤ order` in `dim` variables.
pub fn jet_len(dim: usize, order: usize) -> usize {
    match dim {
        1 => order + 1,
        2 => (order + 1) * (order + 2) / 2,
        _ => unreachable!("jets are defined for one or two variables"),
    }
}

/// Multi-index stored at position `idx`.
pub fn multi_index(dim: usize, idx: usize) -> [usize; 2] {
    match dim {
        1 => [idx, 0],
        _ => {
            let mut t = 0;
            while (t + 1) * (t + 2) / 2 <= idx {
                t += 1;
            }
            let b = idx - t * (t + 1) / 2;
            [t - b, b]
        }
    }
}

/// Position of a multi-index.
pub fn jet_index(dim: usize, alpha: [usize; 2]) -> usize {
    match dim {
        1 => alpha[0],
        _ => {
            let t = alpha[0] + alpha[1];
            t * (t + 1) / 2 + alpha[1]
        }
    }
}

/// All multi-indices with `|α| = total`, in storage order.
pub fn indices_of_degree(dim: usize, total: usize) -> Vec<[usize; 2]> {
    match dim {
        1 => vec![[total, 0]],
        _ => (0..=total).map(|b| [total - b, b]).collect(),
    }
}

/// Triples `(i, j, k)` with `α_i + α_j = α_k` and `|α_k| ≤ order`.
pub fn product_table(dim: usize, order: usize) -> Vec<(usize, usize, usize)> {
    let len = jet_len(dim, order);
    let mut table = Vec::new();
    for i in 0..len {
        let a = multi_index(dim, i);
        for j in 0..len {
            let b = multi_index(dim, j);
            if a[0] + a[1] + b[0] + b[1] <= order {
                table.push((i, j, jet_index(dim, [a[0] + b[0], a[1] + b[1]])));
            }
        }
    }
    table
}

/// `α!` for a multi-index.
pub fn factorial(alpha: [usize; 2]) -> f64 {
    let f = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    f(alpha[0]) * f(alpha[1])
}

/// Scalar jets in a single variable, used for closed-form cutoff profiles.
pub mod scalar {
    /// `a · b`, truncated to the common length.
    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        let len = a.len().min(b.len());
        (0..len)
            .map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum())
            .collect()
    }

    /// `1 / a`; requires `a[0] != 0`.
    pub fn recip(a: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; a.len()];
        g[0] = 1.0 / a[0];
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|i| a[i] * g[k - i]).sum();
            g[k] = -g[0] * s;
        }
        g
    }

    /// `exp(a)`.
    pub fn exp(a: &[f64]) -> Vec<f64> {
        let mut e = vec![0.0; a.len()];
        e[0] = a[0].exp();
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|i| i as f64 * a[i] * e[k - i]).sum();
            e[k] = s / k as f64;
        }
        e
    }
}
