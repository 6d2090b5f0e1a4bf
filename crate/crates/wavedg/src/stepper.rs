//! dG(0)/dG(1) time stepping for the semidiscrete system
//! `M u2' + A u1 = b(t)`, `u1' = u2`, via the per-interval block systems.
//!
//! Each interval solves one block system whose unknowns are the interval
//! polynomial's endpoint values; the trajectory records one-sided limits
//! and jumps at every time node. The dG(1) interval basis is the nodal
//! pair `Psi1 = (t_n - t)/k`, `Psi2 = (t - t_{n-1})/k`, so the temporal
//! weights are `omega_11 = omega_22 = k/3`, `omega_12 = omega_21 = k/6`.

use crate::error::{Error, Result};
use crate::fem::{l2_project, ritz_project, ExactField, FeSpace};
use crate::quadrature::gauss_on;
use crate::sparse::{factorize, solve_prefactored, BlockSystem, Factorization, SparseMatrix};

/// Time-dependent spatial load vector, `b_i(t) = (f(., t), phi_i)`.
pub type SpatialLoad<'a> = &'a dyn Fn(f64) -> Vec<f64>;

/// Temporal polynomial degree of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgScheme {
    Dg0,
    Dg1,
}

impl DgScheme {
    pub fn q(self) -> usize {
        match self {
            DgScheme::Dg0 => 0,
            DgScheme::Dg1 => 1,
        }
    }
}

impl std::fmt::Display for DgScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DgScheme::Dg0 => f.write_str("dg0"),
            DgScheme::Dg1 => f.write_str("dg1"),
        }
    }
}

/// Temporal mesh 0 = t_0 < t_1 < ... < t_N = T.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    nodes: Vec<f64>,
    uniform_k: Option<f64>,
}

impl TimePartition {
    /// Uniform partition of (0, t_final) into n steps. Every interval
    /// reports the identical step size, so step factorizations are
    /// reused bit-exactly.
    pub fn uniform(t_final: f64, n: usize) -> Result<Self> {
        if !(t_final > 0.0) || n == 0 {
            return Err(Error::InvalidPartition(format!(
                "need t_final > 0 and n >= 1, got ({t_final}, {n})"
            )));
        }
        let k = t_final / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * k).collect();
        nodes[n] = t_final;
        Ok(Self {
            nodes,
            uniform_k: Some(k),
        })
    }

    /// Partition from an explicit node list starting at 0.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidPartition("need at least one interval".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidPartition(format!(
                "first node must be 0, got {}",
                nodes[0]
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidPartition(format!(
                    "nodes not strictly increasing near {}",
                    w[0]
                )));
            }
        }
        Ok(Self {
            nodes,
            uniform_k: None,
        })
    }

    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, n: usize) -> f64 {
        self.nodes[n]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn t_final(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Step size of interval n (0-based, spanning (t_n, t_{n+1})).
    pub fn k(&self, n: usize) -> f64 {
        match self.uniform_k {
            Some(k) => k,
            None => self.nodes[n + 1] - self.nodes[n],
        }
    }

    pub fn k_max(&self) -> f64 {
        (0..self.n_intervals()).map(|n| self.k(n)).fold(0.0, f64::max)
    }

    /// Interval index containing t; nodes belong to the interval on
    /// their left except t = 0.
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        let t_final = self.t_final();
        if !(0.0..=t_final).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_final });
        }
        let i = match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&t).unwrap())
        {
            Ok(0) => 0,
            Ok(j) => j - 1,
            Err(j) => j - 1,
        };
        Ok(i.min(self.n_intervals() - 1))
    }
}

/// One-sided limits of the pair (U1, U2) at a time node.
#[derive(Debug, Clone, PartialEq)]
pub struct DgState {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl DgState {
    pub fn zero(n_dof: usize) -> Self {
        Self {
            u1: vec![0.0; n_dof],
            u2: vec![0.0; n_dof],
        }
    }
}

/// Endpoint values of the interval polynomials: `*_plus` at the left
/// endpoint (from the right), `*_minus` at the right endpoint (from the
/// left). For dG(0) both coincide with the interval constant.
#[derive(Debug, Clone)]
pub struct IntervalRecord {
    pub u1_plus: Vec<f64>,
    pub u1_minus: Vec<f64>,
    pub u2_plus: Vec<f64>,
    pub u2_minus: Vec<f64>,
}

/// Which one-sided limit to take at a time node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Side {
    /// The paper's convention: trajectories are left-continuous.
    #[default]
    Left,
    Right,
}

/// Piecewise-polynomial trajectory produced by [`run`].
#[derive(Debug, Clone)]
pub struct DgTrajectory {
    scheme: DgScheme,
    partition: TimePartition,
    init: DgState,
    intervals: Vec<IntervalRecord>,
}

impl DgTrajectory {
    pub fn scheme(&self) -> DgScheme {
        self.scheme
    }

    pub fn partition(&self) -> &TimePartition {
        &self.partition
    }

    pub fn initial(&self) -> &DgState {
        &self.init
    }

    pub fn interval(&self, n: usize) -> &IntervalRecord {
        &self.intervals[n]
    }

    pub fn n_intervals(&self) -> usize {
        self.intervals.len()
    }

    /// Minus limit at node n (the initial data for n = 0).
    pub fn minus_at_node(&self, n: usize) -> (&[f64], &[f64]) {
        if n == 0 {
            (&self.init.u1, &self.init.u2)
        } else {
            let r = &self.intervals[n - 1];
            (&r.u1_minus, &r.u2_minus)
        }
    }

    /// Plus limit at node n (needs n < N).
    pub fn plus_at_node(&self, n: usize) -> (&[f64], &[f64]) {
        let r = &self.intervals[n];
        (&r.u1_plus, &r.u2_plus)
    }

    /// Final minus limit, `(U1_N^-, U2_N^-)`.
    pub fn final_state(&self) -> DgState {
        let (u1, u2) = self.minus_at_node(self.partition.n_intervals());
        DgState {
            u1: u1.to_vec(),
            u2: u2.to_vec(),
        }
    }

    /// Evaluate (U1, U2) at time t; at nodes, `side` picks the limit.
    /// At t = T only the left limit exists and is returned for both
    /// sides.
    pub fn eval(&self, t: f64, side: Side) -> Result<(Vec<f64>, Vec<f64>)> {
        let t_final = self.partition.t_final();
        if !(0.0..=t_final).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_final });
        }
        if let Ok(j) = self
            .partition
            .nodes()
            .binary_search_by(|n| n.partial_cmp(&t).unwrap())
        {
            let n_int = self.partition.n_intervals();
            return Ok(match side {
                Side::Left if j == 0 => (self.init.u1.clone(), self.init.u2.clone()),
                Side::Left => {
                    let (u1, u2) = self.minus_at_node(j);
                    (u1.to_vec(), u2.to_vec())
                }
                Side::Right if j == n_int => {
                    let (u1, u2) = self.minus_at_node(j);
                    (u1.to_vec(), u2.to_vec())
                }
                Side::Right => {
                    let (u1, u2) = self.plus_at_node(j);
                    (u1.to_vec(), u2.to_vec())
                }
            });
        }
        let n = self.partition.interval_of(t)?;
        Ok(self.eval_in_interval(n, t))
    }

    /// Evaluate inside interval n without node disambiguation.
    pub fn eval_in_interval(&self, n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
        let t0 = self.partition.node(n);
        let k = self.partition.k(n);
        let psi2 = (t - t0) / k;
        let psi1 = 1.0 - psi2;
        let r = &self.intervals[n];
        let u1 = lin_comb(psi1, &r.u1_plus, psi2, &r.u1_minus);
        let u2 = lin_comb(psi1, &r.u2_plus, psi2, &r.u2_minus);
        (u1, u2)
    }

    /// Jumps `[U_i]_n = U_i(t_n^+) - U_i(t_n^-)` for n = 0..N-1; the
    /// n = 0 jump uses the initial data as minus limit.
    pub fn jumps(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..self.n_intervals())
            .map(|n| {
                let (m1, m2) = self.minus_at_node(n);
                let (p1, p2) = self.plus_at_node(n);
                (
                    p1.iter().zip(m1).map(|(p, m)| p - m).collect(),
                    p2.iter().zip(m2).map(|(p, m)| p - m).collect(),
                )
            })
            .collect()
    }
}

fn lin_comb(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect()
}

/// Natural discrete initial data: Ritz projection of the displacement,
/// L2 projection of the velocity.
pub fn initial_state(space: &FeSpace, u0: &ExactField, v0: &ExactField) -> Result<DgState> {
    let u1 = ritz_project(space, u0, 0.0)?.coeffs().to_vec();
    let u2 = l2_project(space, |x| v0.value(x, 0.0))?.coeffs().to_vec();
    Ok(DgState { u1, u2 })
}

/// Time-integrated load over one interval, `int_{I} b(t) dt`, by
/// 2-point Gauss. This is the dG(0) right-side contribution.
pub fn dg0_time_load(load: Option<SpatialLoad>, t0: f64, t1: f64, n_dof: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_dof];
    if let Some(f) = load {
        for (t, w) in gauss_on(t0, t1, 2) {
            let b = f(t);
            for (o, bi) in out.iter_mut().zip(&b) {
                *o += w * bi;
            }
        }
    }
    out
}

/// Load moments against the dG(1) interval basis, `int_{I} b(t) Psi^p dt`
/// for p = 1, 2, by 3-point Gauss.
pub fn dg1_time_moments(
    load: Option<SpatialLoad>,
    t0: f64,
    t1: f64,
    n_dof: usize,
) -> (Vec<f64>, Vec<f64>) {
    let mut f1 = vec![0.0; n_dof];
    let mut f2 = vec![0.0; n_dof];
    if let Some(f) = load {
        let k = t1 - t0;
        for (t, w) in gauss_on(t0, t1, 3) {
            let psi2 = (t - t0) / k;
            let psi1 = 1.0 - psi2;
            let b = f(t);
            for i in 0..n_dof {
                f1[i] += w * psi1 * b[i];
                f2[i] += w * psi2 * b[i];
            }
        }
    }
    (f1, f2)
}

/// Temporal weights of the dG(1) interval basis on a step of length k:
/// `omega[p][r] = int Psi^{p+1} Psi^{r+1} dt`, giving k/3 on the
/// diagonal and k/6 off it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dg1Weights {
    pub omega: [[f64; 2]; 2],
}

impl Dg1Weights {
    pub fn new(k: f64) -> Self {
        Self {
            omega: [[k / 3.0, k / 6.0], [k / 6.0, k / 3.0]],
        }
    }
}

fn dg0_block(m: &SparseMatrix, a: &SparseMatrix, k: f64) -> Result<SparseMatrix> {
    let mut bs = BlockSystem::new(2, 2);
    bs.set(0, 0, 1.0, a);
    bs.set(0, 1, -k, a);
    bs.set(1, 0, k, a);
    bs.set(1, 1, 1.0, m);
    bs.materialize()
}

fn dg1_block(m: &SparseMatrix, a: &SparseMatrix, k: f64) -> Result<SparseMatrix> {
    let w = Dg1Weights::new(k).omega;
    let (w11, w12) = (w[0][0], w[0][1]);
    let (w21, w22) = (w[1][0], w[1][1]);
    let mut bs = BlockSystem::new(4, 4);
    bs.set(0, 0, 0.5, a);
    bs.set(0, 1, 0.5, a);
    bs.set(0, 2, -w12, a);
    bs.set(0, 3, -w11, a);
    bs.set(1, 0, 0.5, a);
    bs.set(1, 1, -0.5, a);
    bs.set(1, 2, -w22, a);
    bs.set(1, 3, -w21, a);
    bs.set(2, 0, w12, a);
    bs.set(2, 1, w11, a);
    bs.set(2, 2, 0.5, m);
    bs.set(2, 3, 0.5, m);
    bs.set(3, 0, w22, a);
    bs.set(3, 1, w21, a);
    bs.set(3, 2, 0.5, m);
    bs.set(3, 3, -0.5, m);
    bs.materialize()
}

fn check_dims(m: &SparseMatrix, a: &SparseMatrix, prev: &DgState) -> Result<usize> {
    let n = m.n_rows();
    if m.n_cols() != n || a.n_rows() != n || a.n_cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "mass is {}x{}, stiffness is {}x{}",
            m.n_rows(),
            m.n_cols(),
            a.n_rows(),
            a.n_cols()
        )));
    }
    if prev.u1.len() != n || prev.u2.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "state has lengths ({}, {}), matrices are {n}x{n}",
            prev.u1.len(),
            prev.u2.len()
        )));
    }
    Ok(n)
}

/// One dG(0) step: solves the 2x2 block system
/// `[[A, -kA], [kA, M]] (U1, U2) = (A u1_prev, M u2_prev + f_load)`.
/// The interval constants are also the new minus limits.
pub fn step_dg0(
    m: &SparseMatrix,
    a: &SparseMatrix,
    prev: &DgState,
    k: f64,
    f_load: &[f64],
) -> Result<DgState> {
    let n = check_dims(m, a, prev)?;
    let block = dg0_block(m, a, k)?;
    let factors = factorize(&block, false)?;
    let rec = dg0_apply(m, a, &block, &factors, prev, f_load)?;
    debug_assert_eq!(rec.u1_minus.len(), n);
    Ok(DgState {
        u1: rec.u1_minus,
        u2: rec.u2_minus,
    })
}

fn dg0_apply(
    m: &SparseMatrix,
    a: &SparseMatrix,
    block: &SparseMatrix,
    factors: &Factorization,
    prev: &DgState,
    f_load: &[f64],
) -> Result<IntervalRecord> {
    let n = m.n_rows();
    let mut rhs = a.matvec(&prev.u1)?;
    let mu2 = m.matvec(&prev.u2)?;
    rhs.extend(mu2.iter().zip(f_load).map(|(v, f)| v + f));
    let x = solve_prefactored(block, factors, &rhs)?;
    let u1 = x[..n].to_vec();
    let u2 = x[n..].to_vec();
    Ok(IntervalRecord {
        u1_plus: u1.clone(),
        u1_minus: u1,
        u2_plus: u2.clone(),
        u2_minus: u2,
    })
}

/// One dG(1) step: solves the 4x4 block system for the unknowns
/// `(U1_n^-, U1_{n-1}^+, U2_n^-, U2_{n-1}^+)`; the right side carries
/// only the previous minus limits and the load moments.
pub fn step_dg1(
    m: &SparseMatrix,
    a: &SparseMatrix,
    prev: &DgState,
    k: f64,
    f_moments: (&[f64], &[f64]),
) -> Result<IntervalRecord> {
    check_dims(m, a, prev)?;
    let block = dg1_block(m, a, k)?;
    let factors = factorize(&block, false)?;
    dg1_apply(m, a, &block, &factors, prev, f_moments)
}

fn dg1_apply(
    m: &SparseMatrix,
    a: &SparseMatrix,
    block: &SparseMatrix,
    factors: &Factorization,
    prev: &DgState,
    f_moments: (&[f64], &[f64]),
) -> Result<IntervalRecord> {
    let n = m.n_rows();
    let (f1, f2) = f_moments;
    let mut rhs = a.matvec(&prev.u1)?;
    rhs.resize(2 * n, 0.0);
    let mu2 = m.matvec(&prev.u2)?;
    rhs.extend(mu2.iter().zip(f1).map(|(v, f)| v + f));
    rhs.extend(f2.iter().copied());
    let x = solve_prefactored(block, factors, &rhs)?;
    Ok(IntervalRecord {
        u1_minus: x[..n].to_vec(),
        u1_plus: x[n..2 * n].to_vec(),
        u2_minus: x[2 * n..3 * n].to_vec(),
        u2_plus: x[3 * n..].to_vec(),
    })
}

/// March the trajectory through the whole partition. Step systems are
/// refactorized only when the step size changes (bit-exact comparison),
/// so uniform partitions factor once.
pub fn run(
    scheme: DgScheme,
    m: &SparseMatrix,
    a: &SparseMatrix,
    partition: &TimePartition,
    init: DgState,
    load: Option<SpatialLoad>,
) -> Result<DgTrajectory> {
    let n = check_dims(m, a, &init)?;
    let mut intervals = Vec::with_capacity(partition.n_intervals());
    let mut state = init.clone();
    let mut cached: Option<(u64, SparseMatrix, Factorization)> = None;
    for i in 0..partition.n_intervals() {
        let t0 = partition.node(i);
        let t1 = partition.node(i + 1);
        let k = partition.k(i);
        let step = (|| -> Result<IntervalRecord> {
            if cached.as_ref().map(|c| c.0) != Some(k.to_bits()) {
                let block = match scheme {
                    DgScheme::Dg0 => dg0_block(m, a, k)?,
                    DgScheme::Dg1 => dg1_block(m, a, k)?,
                };
                let factors = factorize(&block, false)?;
                cached = Some((k.to_bits(), block, factors));
            }
            let (_, block, factors) = cached.as_ref().unwrap();
            match scheme {
                DgScheme::Dg0 => {
                    let f_load = dg0_time_load(load, t0, t1, n);
                    dg0_apply(m, a, block, factors, &state, &f_load)
                }
                DgScheme::Dg1 => {
                    let (f1, f2) = dg1_time_moments(load, t0, t1, n);
                    dg1_apply(m, a, block, factors, &state, (&f1, &f2))
                }
            }
        })()
        .map_err(|e| Error::StepFailed {
            interval: i + 1,
            source: Box::new(e),
        })?;
        state = DgState {
            u1: step.u1_minus.clone(),
            u2: step.u2_minus.clone(),
        };
        intervals.push(step);
    }
    Ok(DgTrajectory {
        scheme,
        partition: partition.clone(),
        init,
        intervals,
    })
}

/// Per-interval variational residuals of the interval equations against
/// every temporal test basis function, evaluated by 3-point Gauss.
///
/// Returns, per interval, the relative residual norm of each equation
/// and test function: `||r|| / max(term norms)`. Load moments reuse the
/// stepper's quadrature so a solved trajectory audits cleanly.
pub fn weak_form_residuals(
    traj: &DgTrajectory,
    m: &SparseMatrix,
    a: &SparseMatrix,
    load: Option<SpatialLoad>,
) -> Result<Vec<IntervalResidual>> {
    let n = m.n_rows();
    let q = traj.scheme().q();
    let n_test = q + 1;
    let mut out = Vec::with_capacity(traj.n_intervals());
    for i in 0..traj.n_intervals() {
        let t0 = traj.partition().node(i);
        let t1 = traj.partition().node(i + 1);
        let k = traj.partition().k(i);
        let rec = traj.interval(i);
        let (prev_u1, prev_u2) = traj.minus_at_node(i);

        let du1 = scaled_diff(&rec.u1_minus, &rec.u1_plus, 1.0 / k);
        let du2 = scaled_diff(&rec.u2_minus, &rec.u2_plus, 1.0 / k);

        let f_mom: Vec<Vec<f64>> = match traj.scheme() {
            DgScheme::Dg0 => vec![dg0_time_load(load, t0, t1, n)],
            DgScheme::Dg1 => {
                let (f1, f2) = dg1_time_moments(load, t0, t1, n);
                vec![f1, f2]
            }
        };

        let mut eq1 = Vec::with_capacity(n_test);
        let mut eq2 = Vec::with_capacity(n_test);
        for p in 0..n_test {
            // Quadrature of the interval polynomials against the test
            // function: psi = 1 for dG(0), else Psi^{p+1}.
            let mut int_psi = 0.0; // int psi dt
            let mut int_u1 = vec![0.0; n];
            let mut int_u2 = vec![0.0; n];
            for (t, w) in gauss_on(t0, t1, 3) {
                let s = (t - t0) / k;
                let psi = match (traj.scheme(), p) {
                    (DgScheme::Dg0, _) => 1.0,
                    (DgScheme::Dg1, 0) => 1.0 - s,
                    _ => s,
                };
                int_psi += w * psi;
                let (u1t, u2t) = traj.eval_in_interval(i, t);
                for j in 0..n {
                    int_u1[j] += w * psi * u1t[j];
                    int_u2[j] += w * psi * u2t[j];
                }
            }
            let psi_at_t0 = match (traj.scheme(), p) {
                (DgScheme::Dg0, _) => 1.0,
                (DgScheme::Dg1, 0) => 1.0,
                _ => 0.0,
            };

            // Equation 1: int a(U1', v) - a(U2, v) dt + jump = history.
            let t_du1 = scale_vec(&a.matvec(&du1)?, int_psi);
            let t_u2 = scale_vec(&a.matvec(&int_u2)?, -1.0);
            let t_jump1 = scale_vec(&a.matvec(&rec.u1_plus)?, psi_at_t0);
            let t_hist1 = scale_vec(&a.matvec(prev_u1)?, -psi_at_t0);
            eq1.push(relative_residual(&[t_du1, t_u2, t_jump1, t_hist1]));

            // Equation 2: int (U2', v) + a(U1, v) dt + jump = history + load.
            let t_du2 = scale_vec(&m.matvec(&du2)?, int_psi);
            let t_u1 = a.matvec(&int_u1)?;
            let t_jump2 = scale_vec(&m.matvec(&rec.u2_plus)?, psi_at_t0);
            let t_hist2 = scale_vec(&m.matvec(prev_u2)?, -psi_at_t0);
            let t_load = scale_vec(&f_mom[p], -1.0);
            eq2.push(relative_residual(&[t_du2, t_u1, t_jump2, t_hist2, t_load]));
        }
        out.push(IntervalResidual { eq1, eq2 });
    }
    Ok(out)
}

/// Relative weak-form residuals of one interval, per test function.
#[derive(Debug, Clone)]
pub struct IntervalResidual {
    pub eq1: Vec<f64>,
    pub eq2: Vec<f64>,
}

impl IntervalResidual {
    pub fn max(&self) -> f64 {
        self.eq1
            .iter()
            .chain(self.eq2.iter())
            .copied()
            .fold(0.0, f64::max)
    }
}

fn scaled_diff(x: &[f64], y: &[f64], scale: f64) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| (a - b) * scale).collect()
}

fn scale_vec(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|v| v * s).collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn relative_residual(terms: &[Vec<f64>]) -> f64 {
    let n = terms[0].len();
    let mut r = vec![0.0; n];
    let mut scale = 0.0f64;
    for t in terms {
        for (ri, ti) in r.iter_mut().zip(t) {
            *ri += ti;
        }
        scale = scale.max(norm2(t));
    }
    if scale == 0.0 {
        0.0
    } else {
        norm2(&r) / scale
    }
}
