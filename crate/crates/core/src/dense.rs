//! Plain (unencrypted) matrix helpers used by the report generators and the
//! CLI oracle checks. Test suites keep their own independent reference
//! implementations; this module exists so that reports can ship accuracy
//! metrics next to the emulated results.

use nalgebra::DMatrix;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Population covariance of a samples-by-features matrix: (1/s)XᵀX − μμᵀ.
    pub fn covariance(&self) -> Mat {
        let s = self.rows as f64;
        let t = self.cols;
        let mut mean = vec![0.0; t];
        for i in 0..self.rows {
            for j in 0..t {
                mean[j] += self[(i, j)];
            }
        }
        for m in &mut mean {
            *m /= s;
        }
        let mut cov = Mat::zeros(t, t);
        for a in 0..t {
            for b in 0..t {
                let mut acc = 0.0;
                for i in 0..self.rows {
                    acc += self[(i, a)] * self[(i, b)];
                }
                cov[(a, b)] = acc / s - mean[a] * mean[b];
            }
        }
        cov
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                mean[j] += self[(i, j)];
            }
        }
        for m in &mut mean {
            *m /= self.rows as f64;
        }
        mean
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen decomposition of a symmetric matrix, eigenvalues descending.
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as rows.
pub fn sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let dm = DMatrix::from_row_slice(n, n, m.data());
    let se = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (r, &i) in order.iter().enumerate() {
        let col = se.eigenvectors.column(i);
        for j in 0..n {
            vectors[(r, j)] = col[j];
        }
    }
    (values, vectors)
}

/// R2 score between a reference matrix and an approximation:
/// `1 − Σ(ref − approx)² / Σ(ref − mean(ref))²` over all entries.
pub fn r2_score(reference: &Mat, approx: &Mat) -> f64 {
    assert_eq!(reference.rows, approx.rows);
    assert_eq!(reference.cols, approx.cols);
    let mean: f64 =
        reference.data().iter().sum::<f64>() / (reference.rows * reference.cols) as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (r, a) in reference.data().iter().zip(approx.data()) {
        ss_res += (r - a) * (r - a);
        ss_tot += (r - mean) * (r - mean);
    }
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - ss_res / ss_tot
}

/// Reconstruction R2: project the centered dataset onto the given components
/// (rows of `components`), reconstruct, and score against the original.
pub fn r2_reconstruction(data: &Mat, components: &Mat) -> f64 {
    let mean = data.column_means();
    let mut centered = data.clone();
    for i in 0..data.rows {
        for j in 0..data.cols {
            centered[(i, j)] -= mean[j];
        }
    }
    // X̂ = mean + (X − mean)·VᵀV  with V rows orthonormal-ish.
    let vt = components.transpose();
    let scores = centered.matmul(&vt);
    let recon_c = scores.matmul(components);
    let mut recon = recon_c;
    for i in 0..data.rows {
        for j in 0..data.cols {
            recon[(i, j)] += mean[j];
        }
    }
    r2_score(data, &recon)
}

/// Eigenvector-similarity R2 after per-row sign alignment.
pub fn r2_vectors(truth: &Mat, computed: &Mat) -> f64 {
    assert_eq!(truth.rows, computed.rows);
    assert_eq!(truth.cols, computed.cols);
    let mut aligned = computed.clone();
    for r in 0..truth.rows {
        let dot: f64 = (0..truth.cols).map(|j| truth[(r, j)] * computed[(r, j)]).sum();
        if dot < 0.0 {
            for j in 0..truth.cols {
                aligned[(r, j)] = -aligned[(r, j)];
            }
        }
    }
    r2_score(truth, &aligned)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_matches_hand_computation() {
        // two samples, two features
        let x = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let cov = x.covariance();
        // means (2,3); centered rows (−1,−1),(1,1); population cov = [[1,1],[1,1]]
        for a in 0..2 {
            for b in 0..2 {
                assert!((cov[(a, b)] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sym_eigen_orders_descending() {
        let m = Mat::from_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]);
        let (vals, vecs) = sym_eigen(&m);
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        assert!(vecs[(0, 1)].abs() > 0.99);
    }

    #[test]
    fn r2_of_identical_matrices_is_one() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!((r2_score(&m, &m) - 1.0).abs() < 1e-15);
    }
}
