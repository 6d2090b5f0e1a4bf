//! Minimal sparse linear algebra: CSR matrices, quadratic forms, block
//! assembly, and a banded direct solver with RCM preordering.
//!
//! Matrices are immutable after construction and safe to share across
//! threads. All summations run in a fixed order so repeated runs are
//! bit-identical.

use crate::error::{Error, Result};

/// Relative residual bound enforced by [`solve`]:
/// `||m x - b|| <= SOLVE_RTOL * (||b|| + ||m||_F ||x||)`.
pub const SOLVE_RTOL: f64 = 1e-12;

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets. Duplicates are summed;
    /// columns end up sorted within each row (canonical form).
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidStructure(format!(
                    "entry ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            entries.push((r, c, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));

        let mut rows = Vec::with_capacity(entries.len());
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if rows.last() == Some(&r) && col_indices.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_indices.push(c);
                values.push(v);
            }
        }
        let mut row_offsets = vec![0usize; n_rows + 1];
        for &r in &rows {
            row_offsets[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// n x n identity.
    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Square diagonal matrix.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Sparse matrix-vector product. Summation order is fixed per row.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec: matrix is {}x{}, vector has length {}",
                self.n_rows,
                self.n_cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// Quadratic form x' m y.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.n_rows || y.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "quadratic_form: matrix is {}x{}, vectors have lengths {} and {}",
                self.n_rows,
                self.n_cols,
                x.len(),
                y.len()
            )));
        }
        let mut acc = 0.0;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                row_acc += v * y[*c];
            }
            acc += x[i] * row_acc;
        }
        Ok(acc)
    }

    /// Frobenius norm of the stored entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest |a_ij - a_ji| over the stored pattern.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let vt = self.get(*c, i);
                defect = defect.max((v - vt).abs());
            }
        }
        defect
    }

    /// Entry lookup, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.n_rows {
            return 0.0;
        }
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Dense row-major copy; intended for small matrices in tests and
    /// block-placement checks.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                d[i * self.n_cols + c] = *v;
            }
        }
        d
    }
}

/// Grid of scaled references to shared matrices; materializes into the
/// sparse matrix with each block placed at its offset.
pub struct BlockSystem<'a> {
    n_block_rows: usize,
    n_block_cols: usize,
    blocks: Vec<Option<(f64, &'a SparseMatrix)>>,
}

impl<'a> BlockSystem<'a> {
    pub fn new(n_block_rows: usize, n_block_cols: usize) -> Self {
        Self {
            n_block_rows,
            n_block_cols,
            blocks: vec![None; n_block_rows * n_block_cols],
        }
    }

    /// Place `scale * m` at block position (i, j).
    pub fn set(&mut self, i: usize, j: usize, scale: f64, m: &'a SparseMatrix) {
        assert!(i < self.n_block_rows && j < self.n_block_cols);
        self.blocks[i * self.n_block_cols + j] = Some((scale, m));
    }

    fn block(&self, i: usize, j: usize) -> Option<&(f64, &'a SparseMatrix)> {
        self.blocks[i * self.n_block_cols + j].as_ref()
    }

    /// Sum of scaled blocks placed at their offsets.
    pub fn materialize(&self) -> Result<SparseMatrix> {
        let mut row_sizes = vec![None; self.n_block_rows];
        let mut col_sizes = vec![None; self.n_block_cols];
        for i in 0..self.n_block_rows {
            for j in 0..self.n_block_cols {
                if let Some((_, m)) = self.block(i, j) {
                    match row_sizes[i] {
                        None => row_sizes[i] = Some(m.n_rows()),
                        Some(r) if r != m.n_rows() => {
                            return Err(Error::InvalidStructure(format!(
                                "block row {i} mixes heights {r} and {}",
                                m.n_rows()
                            )))
                        }
                        _ => {}
                    }
                    match col_sizes[j] {
                        None => col_sizes[j] = Some(m.n_cols()),
                        Some(c) if c != m.n_cols() => {
                            return Err(Error::InvalidStructure(format!(
                                "block column {j} mixes widths {c} and {}",
                                m.n_cols()
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        let row_sizes: Vec<usize> = row_sizes
            .into_iter()
            .map(|s| {
                s.ok_or_else(|| Error::InvalidStructure("empty block row".into()))
            })
            .collect::<Result<_>>()?;
        let col_sizes: Vec<usize> = col_sizes
            .into_iter()
            .map(|s| {
                s.ok_or_else(|| Error::InvalidStructure("empty block column".into()))
            })
            .collect::<Result<_>>()?;

        let mut row_offset = vec![0usize; self.n_block_rows];
        for i in 1..self.n_block_rows {
            row_offset[i] = row_offset[i - 1] + row_sizes[i - 1];
        }
        let mut col_offset = vec![0usize; self.n_block_cols];
        for j in 1..self.n_block_cols {
            col_offset[j] = col_offset[j - 1] + col_sizes[j - 1];
        }
        let total_rows = row_offset[self.n_block_rows - 1] + row_sizes[self.n_block_rows - 1];
        let total_cols = col_offset[self.n_block_cols - 1] + col_sizes[self.n_block_cols - 1];

        let mut triplets = Vec::new();
        for i in 0..self.n_block_rows {
            for j in 0..self.n_block_cols {
                if let Some((scale, m)) = self.block(i, j) {
                    for r in 0..m.n_rows() {
                        let (cols, vals) = m.row(r);
                        for (c, v) in cols.iter().zip(vals) {
                            triplets.push((row_offset[i] + r, col_offset[j] + c, scale * v));
                        }
                    }
                }
            }
        }
        SparseMatrix::from_triplets(total_rows, total_cols, &triplets)
    }
}

/// Direct solve with residual contract
/// `||m x - b|| <= 1e-12 (||b|| + ||m||_F ||x||)`.
///
/// The SPD hint selects a banded Cholesky; otherwise banded LU with
/// partial pivoting after an RCM preordering. Failure carries the
/// achieved residual.
pub fn solve(m: &SparseMatrix, b: &[f64], spd_hint: bool) -> Result<Vec<f64>> {
    let factors = factorize(m, spd_hint)?;
    solve_prefactored(m, &factors, b)
}

/// Solve against an existing factorization of `m`, enforcing the same
/// residual contract as [`solve`].
pub fn solve_prefactored(m: &SparseMatrix, factors: &Factorization, b: &[f64]) -> Result<Vec<f64>> {
    if m.n_rows() != m.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "solve needs a square matrix, got {}x{}",
            m.n_rows(),
            m.n_cols()
        )));
    }
    if b.len() != m.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "solve: matrix is {0}x{0}, right side has length {1}",
            m.n_rows(),
            b.len()
        )));
    }
    let x = factors.apply(b);
    let r = m.matvec(&x)?;
    let mut res2 = 0.0;
    let mut b2 = 0.0;
    let mut x2 = 0.0;
    for i in 0..b.len() {
        let d = r[i] - b[i];
        res2 += d * d;
        b2 += b[i] * b[i];
        x2 += x[i] * x[i];
    }
    let residual = res2.sqrt();
    let bound = SOLVE_RTOL * (b2.sqrt() + m.frobenius_norm() * x2.sqrt());
    if residual > bound {
        return Err(Error::SingularSystem { residual });
    }
    Ok(x)
}

/// Reusable direct factorization (permutation + banded factors).
pub struct Factorization {
    perm: Vec<usize>,
    kind: FactorKind,
}

enum FactorKind {
    Lu(BandLu),
    Cholesky(BandCholesky),
}

/// Factor a square sparse matrix for repeated solves.
pub fn factorize(m: &SparseMatrix, spd_hint: bool) -> Result<Factorization> {
    if m.n_rows() != m.n_cols() {
        return Err(Error::DimensionMismatch(format!(
            "factorize needs a square matrix, got {}x{}",
            m.n_rows(),
            m.n_cols()
        )));
    }
    let perm = reverse_cuthill_mckee(m);
    let kind = if spd_hint {
        FactorKind::Cholesky(BandCholesky::new(m, &perm)?)
    } else {
        FactorKind::Lu(BandLu::new(m, &perm)?)
    };
    Ok(Factorization { perm, kind })
}

impl Factorization {
    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut bp = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            bp[new] = b[old];
        }
        let y = match &self.kind {
            FactorKind::Lu(lu) => lu.solve(bp),
            FactorKind::Cholesky(ch) => ch.solve(bp),
        };
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering on the symmetrized pattern.
/// Returns `perm` with `perm[new] = old`.
fn reverse_cuthill_mckee(m: &SparseMatrix) -> Vec<usize> {
    let n = m.n_rows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, _) = m.row(i);
        for &c in cols {
            if c != i {
                adj[i].push(c);
                adj[c].push(i);
            }
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    // Next component: unvisited node of minimum degree, then one extra
    // BFS sweep toward a pseudo-peripheral start.
    while let Some(seed) = (0..n)
        .filter(|&i| !visited[i])
        .min_by_key(|&i| (degree[i], i))
    {
        let start = farthest_node(seed, &adj, &visited, &degree);

        let mut queue = std::collections::VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (degree[v], v));
            for v in next {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

fn farthest_node(start: usize, adj: &[Vec<usize>], visited: &[bool], degree: &[usize]) -> usize {
    let mut seen: Vec<bool> = visited.to_vec();
    let mut level = vec![start];
    seen[start] = true;
    let mut last = start;
    while !level.is_empty() {
        let mut next_level = Vec::new();
        for &u in &level {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    next_level.push(v);
                }
            }
        }
        if next_level.is_empty() {
            break;
        }
        last = *next_level.iter().min_by_key(|&&v| (degree[v], v)).unwrap();
        level = next_level;
    }
    last
}

/// Banded LU with partial pivoting (LAPACK gbtrf-style working band).
struct BandLu {
    n: usize,
    kl: usize,
    kw: usize, // upper working bandwidth: ku + kl (pivoting fill)
    band: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    fn new(m: &SparseMatrix, perm: &[usize]) -> Result<Self> {
        let n = m.n_rows();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut kl = 0usize;
        let mut ku = 0usize;
        for i in 0..n {
            let (cols, _) = m.row(i);
            for &c in cols {
                let (pi, pj) = (inv[i], inv[c]);
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
            }
        }
        let kw = ku + kl;
        let rows = kl + kw + 1;
        let mut band = vec![0.0; rows * n];
        // entry (i, j) lives at band[(i - j + kw) * n + j]
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let (pi, pj) = (inv[i], inv[*c]);
                band[(pi + kw - pj) * n + pj] += *v;
            }
        }

        let mut ipiv = vec![0usize; n];
        let at = |band: &Vec<f64>, i: usize, j: usize| band[(i + kw - j) * n + j];
        for j in 0..n {
            let i_max = (j + kl).min(n - 1);
            let mut piv = j;
            let mut piv_val = at(&band, j, j).abs();
            for i in (j + 1)..=i_max {
                let v = at(&band, i, j).abs();
                if v > piv_val {
                    piv = i;
                    piv_val = v;
                }
            }
            ipiv[j] = piv;
            if piv_val == 0.0 {
                // Leave the zero pivot in place; the residual contract
                // reports the failure with the right side attached.
                return Err(Error::SingularSystem { residual: f64::INFINITY });
            }
            let j_hi = (j + kw).min(n - 1);
            if piv != j {
                for jj in j..=j_hi {
                    let a = (j + kw - jj) * n + jj;
                    let b = (piv + kw - jj) * n + jj;
                    band.swap(a, b);
                }
            }
            let d = at(&band, j, j);
            for i in (j + 1)..=i_max {
                let l = at(&band, i, j) / d;
                band[(i + kw - j) * n + j] = l;
                for jj in (j + 1)..=j_hi {
                    band[(i + kw - jj) * n + jj] -= l * at(&band, j, jj);
                }
            }
        }
        Ok(Self { n, kl, kw, band, ipiv })
    }

    fn solve(&self, mut b: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        let at = |i: usize, j: usize| self.band[(i + self.kw - j) * n + j];
        for j in 0..n {
            b.swap(j, self.ipiv[j]);
            let i_max = (j + self.kl).min(n - 1);
            for i in (j + 1)..=i_max {
                b[i] -= at(i, j) * b[j];
            }
        }
        for j in (0..n).rev() {
            let j_hi = (j + self.kw).min(n - 1);
            let mut acc = b[j];
            for jj in (j + 1)..=j_hi {
                acc -= at(j, jj) * b[jj];
            }
            b[j] = acc / at(j, j);
        }
        b
    }
}

/// Banded Cholesky (L L') for SPD matrices.
struct BandCholesky {
    n: usize,
    kl: usize,
    band: Vec<f64>, // lower band: entry (i, j) at band[(i - j) * n + j], 0 <= i-j <= kl
}

impl BandCholesky {
    fn new(m: &SparseMatrix, perm: &[usize]) -> Result<Self> {
        let n = m.n_rows();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut kl = 0usize;
        for i in 0..n {
            let (cols, _) = m.row(i);
            for &c in cols {
                let (pi, pj) = (inv[i], inv[c]);
                kl = kl.max(pi.max(pj) - pi.min(pj));
            }
        }
        let mut band = vec![0.0; (kl + 1) * n];
        for i in 0..n {
            let (cols, vals) = m.row(i);
            for (c, v) in cols.iter().zip(vals) {
                let (pi, pj) = (inv[i], inv[*c]);
                if pi >= pj {
                    band[(pi - pj) * n + pj] += *v;
                }
            }
        }
        for j in 0..n {
            let mut d = band[j];
            let k_lo = j.saturating_sub(kl);
            for k in k_lo..j {
                let l = band[(j - k) * n + k];
                d -= l * l;
            }
            if d <= 0.0 {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let dj = d.sqrt();
            band[j] = dj;
            let i_max = (j + kl).min(n - 1);
            for i in (j + 1)..=i_max {
                let mut s = band[(i - j) * n + j];
                let k_lo = i.saturating_sub(kl).max(k_lo);
                for k in k_lo..j {
                    s -= band[(i - k) * n + k] * band[(j - k) * n + k];
                }
                band[(i - j) * n + j] = s / dj;
            }
        }
        Ok(Self { n, kl, band })
    }

    fn solve(&self, mut b: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        for j in 0..n {
            b[j] /= self.band[j];
            let i_max = (j + self.kl).min(n - 1);
            for i in (j + 1)..=i_max {
                b[i] -= self.band[(i - j) * n + j] * b[j];
            }
        }
        for j in (0..n).rev() {
            let mut acc = b[j];
            let i_max = (j + self.kl).min(n - 1);
            for i in (j + 1)..=i_max {
                acc -= self.band[(i - j) * n + j] * b[i];
            }
            b[j] = acc / self.band[j];
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tridiag(n: usize, lo: f64, diag: f64, hi: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, diag));
            if i > 0 {
                t.push((i, i - 1, lo));
            }
            if i + 1 < n {
                t.push((i, i + 1, hi));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    /// Dense Gaussian elimination with partial pivoting; the independent
    /// oracle for solver checks.
    fn dense_solve(a: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
        let mut m = a.to_vec();
        let mut x = b.to_vec();
        for j in 0..n {
            let piv = (j..n).max_by(|&p, &q| {
                m[p * n + j].abs().partial_cmp(&m[q * n + j].abs()).unwrap()
            });
            let piv = piv.unwrap();
            for c in 0..n {
                m.swap(j * n + c, piv * n + c);
            }
            x.swap(j, piv);
            for i in (j + 1)..n {
                let l = m[i * n + j] / m[j * n + j];
                for c in j..n {
                    m[i * n + c] -= l * m[j * n + c];
                }
                x[i] -= l * x[j];
            }
        }
        for j in (0..n).rev() {
            for c in (j + 1)..n {
                x[j] -= m[j * n + c] * x[c];
            }
            x[j] /= m[j * n + j];
        }
        x
    }

    #[test]
    fn matvec_identity_and_zero() {
        let id = SparseMatrix::identity(3);
        assert_eq!(id.matvec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);

        let zero = SparseMatrix::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(zero.matvec(&[4.0, 5.0, 6.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn matvec_tridiagonal_hand_check() {
        // Dense hand multiplication: tridiag(-1, 2, -1) * (1,1,1) = (1,0,1).
        let t = tridiag(3, -1.0, 2.0, -1.0);
        assert_eq!(t.matvec(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn matvec_rejects_dimension_mismatch() {
        let id = SparseMatrix::identity(3);
        assert!(matches!(
            id.matvec(&[1.0, 2.0]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn quadratic_form_values() {
        let id = SparseMatrix::identity(2);
        let x = [3.0, 4.0];
        assert_eq!(id.quadratic_form(&x, &x).unwrap(), 25.0);

        // tridiag(-1, 2, -1)/h with h = 0.5 on (1,1): dense evaluation gives 4.
        let m = tridiag(2, -2.0, 4.0, -2.0);
        assert_eq!(m.quadratic_form(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn quadratic_form_symmetry() {
        let m = tridiag(5, -1.0, 2.0, -1.0);
        let x = [0.3, -0.1, 0.7, 0.2, -0.5];
        let y = [1.0, 0.4, -0.2, 0.9, 0.1];
        let xy = m.quadratic_form(&x, &y).unwrap();
        let yx = m.quadratic_form(&y, &x).unwrap();
        assert!((xy - yx).abs() <= 1e-13 * xy.abs().max(1.0));
    }

    #[test]
    fn duplicates_merge_and_columns_sort() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            &[(0, 1, 2.0), (0, 0, 1.0), (0, 1, 3.0), (1, 1, 4.0)],
        )
        .unwrap();
        let (cols, vals) = m.row(0);
        assert_eq!(cols, &[0, 1]);
        assert_eq!(vals, &[1.0, 5.0]);
        assert_eq!(m.nnz(), 3);
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let id = SparseMatrix::identity(4);
        let b = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(solve(&id, &b, false).unwrap(), b.to_vec());

        let d = SparseMatrix::diagonal(&[2.0, 4.0]);
        let x = solve(&d, &[2.0, 8.0], true).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_matches_dense_lu_oracle_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 8;
        // SPD via A = B B' + n I, dense, then sparsify.
        let bmat: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += bmat[i * n + k] * bmat[j * n + k];
                }
                a[i * n + j] = acc + if i == j { n as f64 } else { 0.0 };
            }
        }
        let triplets: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j, 0.0)).collect::<Vec<_>>())
            .enumerate()
            .map(|(k, (i, j, _))| (i, j, a[k]))
            .collect();
        let m = SparseMatrix::from_triplets(n, n, &triplets).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();

        let oracle = dense_solve(&a, n, &b);
        for spd in [false, true] {
            let x = solve(&m, &b, spd).unwrap();
            for i in 0..n {
                assert!(
                    (x[i] - oracle[i]).abs() < 1e-10,
                    "spd={spd} i={i}: {} vs {}",
                    x[i],
                    oracle[i]
                );
            }
        }
    }

    #[test]
    fn solve_roundtrip_on_random_well_conditioned_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = rng.gen_range(2..30);
            // Diagonally dominant tridiagonal-ish with random off-band entry.
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, 4.0 + rng.gen_range(0.0..1.0)));
                if i > 0 {
                    t.push((i, i - 1, rng.gen_range(-1.0..1.0)));
                }
                if i + 1 < n {
                    t.push((i, i + 1, rng.gen_range(-1.0..1.0)));
                }
            }
            t.push((0, n - 1, rng.gen_range(-0.5..0.5)));
            let m = SparseMatrix::from_triplets(n, n, &t).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = solve(&m, &b, false).unwrap();
            let r = m.matvec(&x).unwrap();
            let res: f64 = r
                .iter()
                .zip(&b)
                .map(|(ri, bi)| (ri - bi) * (ri - bi))
                .sum::<f64>()
                .sqrt();
            let bnorm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(res <= 1e-11 * bnorm.max(1e-30), "trial {trial}: {res}");
        }
    }

    #[test]
    fn solve_reports_singular_matrix() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        match solve(&m, &[1.0, 1.0], false) {
            Err(Error::SingularSystem { .. }) => {}
            other => panic!("expected SingularSystem, got {other:?}"),
        }
    }

    #[test]
    fn block_materialization_matches_dense_placement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = tridiag(3, -1.0, 2.0, -1.0);
        let d = SparseMatrix::diagonal(&[1.5, -0.5, 2.0]);
        let mut bs = BlockSystem::new(2, 2);
        bs.set(0, 0, 1.0, &a);
        bs.set(0, 1, -0.25, &a);
        bs.set(1, 0, 0.25, &a);
        bs.set(1, 1, rng.gen_range(0.5..1.5), &d);
        let m = bs.materialize().unwrap();
        assert_eq!(m.n_rows(), 6);

        // Dense placement oracle.
        let scale11 = bs.block(1, 1).unwrap().0;
        let mut dense = vec![0.0; 36];
        let da = a.to_dense();
        let dd = d.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                dense[i * 6 + j] += da[i * 3 + j];
                dense[i * 6 + (j + 3)] += -0.25 * da[i * 3 + j];
                dense[(i + 3) * 6 + j] += 0.25 * da[i * 3 + j];
                dense[(i + 3) * 6 + (j + 3)] += scale11 * dd[i * 3 + j];
            }
        }
        let got = m.to_dense();
        for k in 0..36 {
            assert!((got[k] - dense[k]).abs() < 1e-15, "entry {k}");
        }
    }

    #[test]
    fn block_materialization_rejects_inconsistent_sizes() {
        let a = SparseMatrix::identity(2);
        let b = SparseMatrix::identity(3);
        let mut bs = BlockSystem::new(1, 2);
        bs.set(0, 0, 1.0, &a);
        bs.set(0, 1, 1.0, &b);
        // Row heights differ (2 vs 3) within block row 0.
        assert!(bs.materialize().is_err());
    }

    #[test]
    fn symmetry_defect_detects_asymmetry() {
        let sym = tridiag(4, -1.0, 2.0, -1.0);
        assert_eq!(sym.symmetry_defect(), 0.0);
        let asym = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 0.5)]).unwrap();
        assert!((asym.symmetry_defect() - 0.5).abs() < 1e-15);
    }
}
