use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Parameter initializers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    Ones,
    Const(f64),
    /// Uniform on [-bound, bound].
    Uniform(f64),
    Normal(f64),
    /// Orthogonal rows/columns of the matrix obtained by flattening every
    /// dimension after the first, scaled by `gain`.
    Orthogonal {
        gain: f64,
    },
}

/// Gain for orthogonal init ahead of a rectifier.
pub const RELU_GAIN: f64 = std::f64::consts::SQRT_2;

impl Init {
    pub fn sample<R: Rng + ?Sized>(self, shape: &[usize], rng: &mut R) -> Vec<f64> {
        let n: usize = shape.iter().product();
        match self {
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
            Init::Const(c) => vec![c; n],
            Init::Uniform(b) => (0..n).map(|_| rng.random_range(-b..=b)).collect(),
            Init::Normal(std) => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    std * z
                })
                .collect(),
            Init::Orthogonal { gain } => {
                let rows = shape.first().copied().unwrap_or(1);
                let cols = n.checked_div(rows).unwrap_or(0);
                orthogonal(rows, cols, gain, rng)
            }
        }
    }
}

/// Random `rows`×`cols` matrix (row-major) with orthonormal rows or columns,
/// whichever set is smaller, via modified Gram-Schmidt on a Gaussian draw.
pub fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Vec<f64> {
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // Work on the tall orientation: `tall` has `long` rows and `short`
    // columns, stored column-major so each column is contiguous.
    let (long, short) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let mut q: Vec<f64> = (0..long * short).map(|_| StandardNormal.sample(rng)).collect();
    for j in 0..short {
        let (done, rest) = q.split_at_mut(j * long);
        let col = &mut rest[..long];
        for i in 0..j {
            let prev = &done[i * long..(i + 1) * long];
            let dot: f64 = prev.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
            for (c, p) in col.iter_mut().zip(prev) {
                *c -= dot * p;
            }
        }
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm = if norm > 1e-300 { norm } else { 1.0 };
        for c in col.iter_mut() {
            *c /= norm;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for j in 0..short {
        for i in 0..long {
            let v = gain * q[j * long + i];
            if rows >= cols {
                out[i * cols + j] = v;
            } else {
                out[j * cols + i] = v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn gram(m: &[f64], rows: usize, cols: usize, by_rows: bool) -> Vec<f64> {
        let n = if by_rows { rows } else { cols };
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                g[a * n + b] = if by_rows {
                    (0..cols).map(|k| m[a * cols + k] * m[b * cols + k]).sum()
                } else {
                    (0..rows).map(|k| m[k * cols + a] * m[k * cols + b]).sum()
                };
            }
        }
        g
    }

    #[test]
    fn orthogonal_is_orthonormal_both_orientations() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (r, c) in [(7, 3), (3, 7), (5, 5)] {
            let m = orthogonal(r, c, 1.0, &mut rng);
            let by_rows = r < c;
            let g = gram(&m, r, c, by_rows);
            let n = r.min(c);
            for a in 0..n {
                for b in 0..n {
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((g[a * n + b] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn constant_inits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(Init::Zeros.sample(&[2, 2], &mut rng), vec![0.0; 4]);
        assert_eq!(Init::Const(0.5).sample(&[3], &mut rng), vec![0.5; 3]);
        assert!(Init::Uniform(0.1)
            .sample(&[100], &mut rng)
            .iter()
            .all(|v| v.abs() <= 0.1));
    }
}
