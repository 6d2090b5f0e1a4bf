//! 1D continuous P1 finite elements on (a, b) with homogeneous Dirichlet
//! conditions: mesh, mass/stiffness/load assembly, Ritz and L2
//! projections, and error norms against exact fields.
//!
//! Boundary degrees of freedom are eliminated, so assembled matrices act
//! on interior nodes only and are symmetric positive definite.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::gauss_on;
use crate::sparse::{solve, SparseMatrix};

/// Gauss points per element for loads, projection right sides, and error
/// norms. Exact for the polynomial parts; reduces sin/cos quadrature
/// error below 1e-12 at the mesh sizes used here.
pub const QUAD_POINTS: usize = 5;

/// Partition of (a, b) into intervals with strictly increasing nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    widths: Vec<f64>,
}

impl Mesh1D {
    /// Uniform mesh with `nx` equal elements.
    pub fn uniform(a: f64, b: f64, nx: usize) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidMesh(format!("need b > a, got ({a}, {b})")));
        }
        if nx < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 elements for an interior node, got {nx}"
            )));
        }
        let h = (b - a) / nx as f64;
        let mut nodes: Vec<f64> = (0..=nx).map(|i| a + i as f64 * h).collect();
        nodes[nx] = b;
        Self::from_nodes(nodes)
    }

    /// Mesh from an explicit sorted node list.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidMesh(
                "need at least 3 nodes (one interior)".into(),
            ));
        }
        let mut widths = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let h = w[1] - w[0];
            if !(h > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "nodes not strictly increasing near {}",
                    w[0]
                )));
            }
            widths.push(h);
        }
        Ok(Self { nodes, widths })
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn n_elements(&self) -> usize {
        self.widths.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn width(&self, e: usize) -> f64 {
        self.widths[e]
    }

    /// Maximum element width.
    pub fn h_max(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    /// Element containing x (clamped to the first/last element).
    pub fn element_of(&self, x: f64) -> usize {
        match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(self.n_elements() - 1),
            Err(i) => i.saturating_sub(1).min(self.n_elements() - 1),
        }
    }
}

/// P1 space on a mesh with boundary dofs eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    mesh: Mesh1D,
    dof_to_node: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Mesh1D) -> Self {
        let dof_to_node = (1..mesh.n_elements()).collect();
        Self { mesh, dof_to_node }
    }

    /// Uniform-mesh convenience constructor.
    pub fn uniform(a: f64, b: f64, nx: usize) -> Result<Self> {
        Ok(Self::new(Mesh1D::uniform(a, b, nx)?))
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    /// Number of interior degrees of freedom.
    pub fn n_dof(&self) -> usize {
        self.dof_to_node.len()
    }

    /// Mesh node index of a dof.
    pub fn node_of_dof(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }

    /// Nodal interpolant of g (boundary values dropped).
    pub fn interpolate(&self, g: impl Fn(f64) -> f64) -> FeFunction<'_> {
        let coeffs = self
            .dof_to_node
            .iter()
            .map(|&j| g(self.mesh.nodes()[j]))
            .collect();
        FeFunction { space: self, coeffs }
    }

    /// Coefficient value at node j (zero on the boundary).
    fn nodal_value(&self, coeffs: &[f64], j: usize) -> f64 {
        if j == 0 || j == self.mesh.n_elements() {
            0.0
        } else {
            coeffs[j - 1]
        }
    }

    /// Evaluate the P1 function with the given coefficients at x.
    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        let e = self.mesh.element_of(x);
        let x0 = self.mesh.nodes()[e];
        let h = self.mesh.width(e);
        let vl = self.nodal_value(coeffs, e);
        let vr = self.nodal_value(coeffs, e + 1);
        vl + (vr - vl) * (x - x0) / h
    }

    /// Derivative of the P1 function at x (constant per element).
    pub fn eval_dx(&self, coeffs: &[f64], x: f64) -> f64 {
        let e = self.mesh.element_of(x);
        let h = self.mesh.width(e);
        let vl = self.nodal_value(coeffs, e);
        let vr = self.nodal_value(coeffs, e + 1);
        (vr - vl) / h
    }
}

/// Coefficient vector over a space's interior dofs; vanishes at both
/// boundary nodes by construction.
#[derive(Debug, Clone)]
pub struct FeFunction<'a> {
    space: &'a FeSpace,
    coeffs: Vec<f64>,
}

impl<'a> FeFunction<'a> {
    pub fn from_coeffs(space: &'a FeSpace, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.n_dof());
        Self { space, coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn space(&self) -> &FeSpace {
        self.space
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.space.eval(&self.coeffs, x)
    }

    pub fn eval_dx(&self, x: f64) -> f64 {
        self.space.eval_dx(&self.coeffs, x)
    }
}

/// Closed-form field (x, t) -> value with its exact spatial derivative.
#[derive(Clone)]
pub struct ExactField {
    value: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    dx: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl ExactField {
    pub fn new(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        dx: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            dx: Arc::new(dx),
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0, |_, _| 0.0)
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        (self.value)(x, t)
    }

    pub fn dx(&self, x: f64, t: f64) -> f64 {
        (self.dx)(x, t)
    }
}

impl std::fmt::Debug for ExactField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ExactField")
    }
}

/// Mass matrix M_ij = int phi_i phi_j over interior dofs. Closed-form
/// P1 element integrals; tridiagonal.
pub fn assemble_mass(space: &FeSpace) -> SparseMatrix {
    assemble_tridiagonal(space, |h| (h / 3.0, h / 6.0))
}

/// Stiffness matrix A_ij = int phi_i' phi_j'; tridiagonal,
/// (-1/h, 2/h, -1/h) on uniform meshes.
pub fn assemble_stiffness(space: &FeSpace) -> SparseMatrix {
    assemble_tridiagonal(space, |h| (1.0 / h, -1.0 / h))
}

fn assemble_tridiagonal(
    space: &FeSpace,
    local: impl Fn(f64) -> (f64, f64),
) -> SparseMatrix {
    let mesh = space.mesh();
    let n = space.n_dof();
    let mut triplets = Vec::with_capacity(4 * mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let (diag, off) = local(mesh.width(e));
        // Element nodes e and e+1; interior dof of node j is j-1.
        let left = if e >= 1 { Some(e - 1) } else { None };
        let right = if e + 1 < mesh.n_elements() { Some(e) } else { None };
        if let Some(l) = left {
            triplets.push((l, l, diag));
        }
        if let Some(r) = right {
            triplets.push((r, r, diag));
        }
        if let (Some(l), Some(r)) = (left, right) {
            triplets.push((l, r, off));
            triplets.push((r, l, off));
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("assembly indices in range")
}

/// Load vector b_i = int g phi_i dx by fixed per-element Gauss
/// quadrature ([`QUAD_POINTS`]).
pub fn assemble_load(space: &FeSpace, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let mesh = space.mesh();
    let mut b = vec![0.0; space.n_dof()];
    let rule = gauss_on(0.0, 1.0, QUAD_POINTS);
    for e in 0..mesh.n_elements() {
        let x0 = mesh.nodes()[e];
        let h = mesh.width(e);
        for &(s, w) in &rule {
            let x = x0 + s * h;
            let gv = g(x) * w * h;
            if e >= 1 {
                b[e - 1] += gv * (1.0 - s);
            }
            if e + 1 < mesh.n_elements() {
                b[e] += gv * s;
            }
        }
    }
    b
}

/// Right side of the Ritz system: r_i = int v'(x, t) phi_i'(x) dx.
fn assemble_dx_load(space: &FeSpace, v: &ExactField, t: f64) -> Vec<f64> {
    let mesh = space.mesh();
    let mut r = vec![0.0; space.n_dof()];
    let rule = gauss_on(0.0, 1.0, QUAD_POINTS);
    for e in 0..mesh.n_elements() {
        let x0 = mesh.nodes()[e];
        let h = mesh.width(e);
        for &(s, w) in &rule {
            let x = x0 + s * h;
            let dv = v.dx(x, t) * w; // phi' = +-1/h and dx = h ds cancel to w
            if e >= 1 {
                r[e - 1] -= dv;
            }
            if e + 1 < mesh.n_elements() {
                r[e] += dv;
            }
        }
    }
    r
}

/// Ritz (elliptic) projection: solves A c = (v', phi') for the
/// a-orthogonal best approximation of v at time t.
pub fn ritz_project<'a>(space: &'a FeSpace, v: &ExactField, t: f64) -> Result<FeFunction<'a>> {
    let a = assemble_stiffness(space);
    let rhs = assemble_dx_load(space, v, t);
    let coeffs = solve(&a, &rhs, true)?;
    Ok(FeFunction { space, coeffs })
}

/// L2 projection: solves M c = (v, phi).
pub fn l2_project<'a>(
    space: &'a FeSpace,
    v: impl Fn(f64) -> f64,
) -> Result<FeFunction<'a>> {
    let m = assemble_mass(space);
    let rhs = assemble_load(space, v);
    let coeffs = solve(&m, &rhs, true)?;
    Ok(FeFunction { space, coeffs })
}

/// L2 and H1-seminorm errors of u_h against an exact field at time t,
/// by per-element Gauss quadrature.
pub fn error_norms(u_h: &FeFunction<'_>, exact: &ExactField, t: f64) -> (f64, f64) {
    let space = u_h.space();
    let mesh = space.mesh();
    let rule = gauss_on(0.0, 1.0, QUAD_POINTS);
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for e in 0..mesh.n_elements() {
        let x0 = mesh.nodes()[e];
        let h = mesh.width(e);
        let vl = space.nodal_value(u_h.coeffs(), e);
        let vr = space.nodal_value(u_h.coeffs(), e + 1);
        let du = (vr - vl) / h;
        for &(s, w) in &rule {
            let x = x0 + s * h;
            let ev = vl + (vr - vl) * s - exact.value(x, t);
            let ed = du - exact.dx(x, t);
            l2 += w * h * ev * ev;
            h1 += w * h * ed * ed;
        }
    }
    (l2.sqrt(), h1.sqrt())
}
