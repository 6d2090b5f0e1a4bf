//! Refinement studies against manufactured solutions: nodal and
//! uniform-in-time error norms, EOC tables, and the temporal
//! interpolation probe.
//!
//! Temporal studies can measure errors either against the exact solution
//! or against the exact evolution of the spatially-discrete system
//! ([`ErrorBaseline::DiscreteMode`]); the latter isolates the temporal
//! rate from the fixed spatial error floor.

use std::sync::Arc;

use serde::Serialize;

use crate::energy;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_mass, assemble_stiffness, error_norms, ExactField, FeFunction,
    FeSpace,
};
use crate::quadrature::gauss_on;
use crate::sparse::SparseMatrix;
use crate::stepper::{initial_state, run, DgScheme, DgState, DgTrajectory, TimePartition};

/// Error floor below which an EOC entry is not a rate (degenerate
/// ladder); such entries serialize as empty/null.
pub const EOC_FLOOR: f64 = 1e-13;

/// Time-dependent load vector bound to one space.
pub type LoadClosure = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Source term of a manufactured problem.
#[derive(Clone)]
pub enum SourceTerm {
    Zero,
    /// Pointwise field f(x, t); loads are assembled per time.
    Pointwise(ExactField),
    /// Precomputed load vector t -> b(t), bound to one space.
    Assembled(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
}

impl SourceTerm {
    pub fn is_zero(&self) -> bool {
        matches!(self, SourceTerm::Zero)
    }
}

/// Analytically chosen exact solution with its source and domain.
#[derive(Clone)]
pub struct ManufacturedSolution {
    name: &'static str,
    domain: (f64, f64),
    u1: ExactField,
    u2: ExactField,
    f: SourceTerm,
    sine_mode: bool,
}

impl ManufacturedSolution {
    /// The default example: u1 = sin x cos t, u2 = -sin x sin t, f = 0
    /// on (0, pi).
    pub fn default_example() -> Self {
        Self {
            name: "sinwave",
            domain: (0.0, std::f64::consts::PI),
            u1: ExactField::new(|x, t| x.sin() * t.cos(), |x, t| x.cos() * t.cos()),
            u2: ExactField::new(|x, t| -x.sin() * t.sin(), |x, t| -x.cos() * t.sin()),
            f: SourceTerm::Zero,
            sine_mode: true,
        }
    }

    /// Reproduction problem: u1 = (1 + t) w, u2 = w for the P1 profile
    /// w interpolating x (b - x) / (b - a); the discrete load is
    /// (1 + t) A w. dG(1) reproduces this exactly.
    pub fn poly_time(space: &FeSpace) -> Self {
        let (a, b) = (space.mesh().a(), space.mesh().b());
        let len = b - a;
        let w = space
            .interpolate(|x| (x - a) * (b - x) / len)
            .coeffs()
            .to_vec();
        let aw = assemble_stiffness(space).matvec(&w).expect("square");
        let sp1 = space.clone();
        let w1 = w.clone();
        let sp2 = space.clone();
        let w2 = w.clone();
        let sp3 = space.clone();
        let w3 = w.clone();
        let sp4 = space.clone();
        let w4 = w;
        Self {
            name: "polyt",
            domain: (a, b),
            u1: ExactField::new(
                move |x, t| (1.0 + t) * sp1.eval(&w1, x),
                move |x, t| (1.0 + t) * sp2.eval_dx(&w2, x),
            ),
            u2: ExactField::new(move |x, _| sp3.eval(&w3, x), move |x, _| sp4.eval_dx(&w4, x)),
            f: SourceTerm::Assembled(Arc::new(move |t: f64| {
                aw.iter().map(|v| (1.0 + t) * v).collect()
            })),
            sine_mode: false,
        }
    }

    /// Zero data, zero source.
    pub fn zero(domain: (f64, f64)) -> Self {
        Self {
            name: "none",
            domain,
            u1: ExactField::zero(),
            u2: ExactField::zero(),
            f: SourceTerm::Zero,
            sine_mode: false,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn u1(&self) -> &ExactField {
        &self.u1
    }

    pub fn u2(&self) -> &ExactField {
        &self.u2
    }

    pub fn source(&self) -> &SourceTerm {
        &self.f
    }

    /// Whether the displacement data is the first discrete sine mode, so
    /// the [`DiscreteModeReference`] applies.
    pub fn is_sine_mode(&self) -> bool {
        self.sine_mode
    }

    /// Load-vector closure for a space, or None for a zero source.
    pub fn load_closure(&self, space: &FeSpace) -> Result<Option<LoadClosure>> {
        match &self.f {
            SourceTerm::Zero => Ok(None),
            SourceTerm::Pointwise(field) => {
                let sp = space.clone();
                let field = field.clone();
                Ok(Some(Box::new(move |t: f64| {
                    assemble_load(&sp, |x| field.value(x, t))
                })))
            }
            SourceTerm::Assembled(f) => {
                if f(0.0).len() != space.n_dof() {
                    return Err(Error::InvalidConfig(format!(
                        "assembled source built for {} dofs, space has {}",
                        f(0.0).len(),
                        space.n_dof()
                    )));
                }
                let f = f.clone();
                Ok(Some(Box::new(move |t: f64| f(t))))
            }
        }
    }

    /// Discrete initial data (Ritz of u1, L2 projection of u2).
    pub fn initial_state(&self, space: &FeSpace) -> Result<DgState> {
        initial_state(space, &self.u1, &self.u2)
    }
}

/// Builtin problem selector, mirrored by the CLI's `--problem` flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinProblem {
    SinWave,
    PolyTime,
    None,
}

impl BuiltinProblem {
    /// Whether the problem's source term vanishes identically.
    pub fn has_zero_source(self) -> bool {
        matches!(self, BuiltinProblem::SinWave | BuiltinProblem::None)
    }

    pub fn build(self, space: &FeSpace) -> ManufacturedSolution {
        match self {
            BuiltinProblem::SinWave => ManufacturedSolution::default_example(),
            BuiltinProblem::PolyTime => ManufacturedSolution::poly_time(space),
            BuiltinProblem::None => {
                ManufacturedSolution::zero((space.mesh().a(), space.mesh().b()))
            }
        }
    }
}

impl std::str::FromStr for BuiltinProblem {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sinwave" => Ok(BuiltinProblem::SinWave),
            "polyt" => Ok(BuiltinProblem::PolyTime),
            "none" => Ok(BuiltinProblem::None),
            other => Err(format!("unknown problem '{other}'")),
        }
    }
}

impl std::fmt::Display for BuiltinProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BuiltinProblem::SinWave => f.write_str("sinwave"),
            BuiltinProblem::PolyTime => f.write_str("polyt"),
            BuiltinProblem::None => f.write_str("none"),
        }
    }
}

/// Exact evolution of the first discrete sine mode of the spatially
/// discretized system: on a uniform mesh the nodal interpolant of sin x
/// is an exact generalized eigenvector of (A, M), so the semidiscrete
/// solution from (s, 0) stays in its span and equals
/// `u1(t) = cos(omega t) s`, `u2(t) = -omega sin(omega t) s`.
#[derive(Debug, Clone)]
pub struct DiscreteModeReference {
    shape: Vec<f64>,
    omega: f64,
}

impl DiscreteModeReference {
    /// Build and verify the mode on the given space. Fails when the
    /// interpolant of sin is not an eigenvector (nonuniform mesh or a
    /// domain other than (0, pi)).
    pub fn sine_mode(space: &FeSpace, m: &SparseMatrix, a: &SparseMatrix) -> Result<Self> {
        let shape = space.interpolate(|x| x.sin()).coeffs().to_vec();
        let am = a.matvec(&shape)?;
        let mm = m.matvec(&shape)?;
        let num = dot(&shape, &am);
        let den = dot(&shape, &mm);
        if den <= 0.0 {
            return Err(Error::NoDiscreteMode("degenerate mode shape".into()));
        }
        let lambda = num / den;
        let mut defect2 = 0.0;
        let mut scale2 = 0.0;
        for i in 0..shape.len() {
            let d = am[i] - lambda * mm[i];
            defect2 += d * d;
            scale2 += am[i] * am[i];
        }
        if defect2.sqrt() > 1e-10 * scale2.sqrt() {
            return Err(Error::NoDiscreteMode(format!(
                "interpolated sine is not an eigenvector (defect {:.2e})",
                defect2.sqrt() / scale2.sqrt()
            )));
        }
        Ok(Self {
            shape,
            omega: lambda.sqrt(),
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Semidiscrete state at time t.
    pub fn state_at(&self, t: f64) -> DgState {
        let c1 = (self.omega * t).cos();
        let c2 = -self.omega * (self.omega * t).sin();
        DgState {
            u1: self.shape.iter().map(|s| c1 * s).collect(),
            u2: self.shape.iter().map(|s| c2 * s).collect(),
        }
    }
}

/// Six error columns shared by all studies.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorColumns {
    pub u1_l2_nodal: f64,
    pub u1_h1_nodal: f64,
    pub u2_l2_nodal: f64,
    pub u1_l2_unif: f64,
    pub u1_h1_unif: f64,
    pub u2_l2_unif: f64,
}

/// Errors at the final node (left limits) against the exact solution:
/// (u1 L2, u1 H1, u2 L2).
pub fn nodal_errors(
    traj: &DgTrajectory,
    space: &FeSpace,
    sol: &ManufacturedSolution,
) -> (f64, f64, f64) {
    let t = traj.partition().t_final();
    let st = traj.final_state();
    let u1 = FeFunction::from_coeffs(space, st.u1);
    let u2 = FeFunction::from_coeffs(space, st.u2);
    let (l2_1, h1_1) = error_norms(&u1, sol.u1(), t);
    let (l2_2, _) = error_norms(&u2, sol.u2(), t);
    (l2_1, h1_1, l2_2)
}

/// Uniform-in-time errors against the exact solution, maximized over
/// `s >= 2` equispaced samples per interval including both one-sided
/// endpoint limits: (sup u1 L2, sup u1 H1, sup u2 L2).
pub fn uniform_errors(
    traj: &DgTrajectory,
    space: &FeSpace,
    sol: &ManufacturedSolution,
    s: usize,
) -> Result<(f64, f64, f64)> {
    if s < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 samples per interval, got {s}"
        )));
    }
    let part = traj.partition();
    let mut sup = (0.0f64, 0.0f64, 0.0f64);
    for n in 0..part.n_intervals() {
        let t0 = part.node(n);
        let k = part.k(n);
        for j in 0..s {
            let t = t0 + k * j as f64 / (s - 1) as f64;
            let (c1, c2) = traj.eval_in_interval(n, t);
            let u1 = FeFunction::from_coeffs(space, c1);
            let u2 = FeFunction::from_coeffs(space, c2);
            let (l2_1, h1_1) = error_norms(&u1, sol.u1(), t);
            let (l2_2, _) = error_norms(&u2, sol.u2(), t);
            sup.0 = sup.0.max(l2_1);
            sup.1 = sup.1.max(h1_1);
            sup.2 = sup.2.max(l2_2);
        }
    }
    Ok(sup)
}

/// Nodal and uniform errors in the discrete norms against a discrete
/// reference trajectory (M-norm for L2 columns, A-norm for H1).
pub fn errors_vs_reference(
    traj: &DgTrajectory,
    m: &SparseMatrix,
    a: &SparseMatrix,
    reference: &DiscreteModeReference,
    s: usize,
) -> Result<ErrorColumns> {
    if s < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 samples per interval, got {s}"
        )));
    }
    let part = traj.partition();
    let norms = |st: &DgState, rf: &DgState| -> Result<(f64, f64, f64)> {
        let d1: Vec<f64> = st.u1.iter().zip(&rf.u1).map(|(x, y)| x - y).collect();
        let d2: Vec<f64> = st.u2.iter().zip(&rf.u2).map(|(x, y)| x - y).collect();
        Ok((
            m.quadratic_form(&d1, &d1)?.sqrt(),
            a.quadratic_form(&d1, &d1)?.sqrt(),
            m.quadratic_form(&d2, &d2)?.sqrt(),
        ))
    };

    let t_final = part.t_final();
    let final_state = traj.final_state();
    let (n_l2_1, n_h1_1, n_l2_2) = norms(&final_state, &reference.state_at(t_final))?;

    let mut sup = (0.0f64, 0.0f64, 0.0f64);
    for n in 0..part.n_intervals() {
        let t0 = part.node(n);
        let k = part.k(n);
        for j in 0..s {
            let t = t0 + k * j as f64 / (s - 1) as f64;
            let (c1, c2) = traj.eval_in_interval(n, t);
            let st = DgState { u1: c1, u2: c2 };
            let (l2_1, h1_1, l2_2) = norms(&st, &reference.state_at(t))?;
            sup.0 = sup.0.max(l2_1);
            sup.1 = sup.1.max(h1_1);
            sup.2 = sup.2.max(l2_2);
        }
    }
    Ok(ErrorColumns {
        u1_l2_nodal: n_l2_1,
        u1_h1_nodal: n_h1_1,
        u2_l2_nodal: n_l2_2,
        u1_l2_unif: sup.0,
        u1_h1_unif: sup.1,
        u2_l2_unif: sup.2,
    })
}

/// What errors are measured against in a temporal study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorBaseline {
    /// The manufactured solution itself (includes the spatial error).
    Exact,
    /// The exact evolution of the spatially-discrete system; isolates
    /// the temporal rate. Requires the sine-mode problem on a uniform
    /// mesh.
    DiscreteMode,
}

/// Configuration of a refinement study.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub scheme: DgScheme,
    pub problem: BuiltinProblem,
    pub domain: (f64, f64),
    pub t_final: f64,
    /// Spatial resolutions; a single entry for temporal studies.
    pub nx: Vec<usize>,
    /// Temporal resolutions; the ladder for temporal studies, ignored
    /// for spatial studies (derived from the coupling).
    pub nt: Vec<usize>,
    /// Samples per interval for uniform-in-time norms.
    pub samples_per_interval: usize,
    pub baseline: ErrorBaseline,
    /// Worker cap for ladder fan-out; 0 picks the available parallelism.
    pub threads: usize,
}

impl StudyConfig {
    pub fn new(scheme: DgScheme, problem: BuiltinProblem) -> Self {
        Self {
            scheme,
            problem,
            domain: (0.0, std::f64::consts::PI),
            t_final: 1.0,
            nx: vec![64],
            nt: vec![8, 16, 32, 64],
            samples_per_interval: 5,
            baseline: ErrorBaseline::Exact,
            threads: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if !(self.domain.1 > self.domain.0) {
            return Err(Error::InvalidConfig(format!(
                "domain must satisfy a < b, got ({}, {})",
                self.domain.0, self.domain.1
            )));
        }
        if self.nx.is_empty() || self.nt.is_empty() {
            return Err(Error::InvalidConfig("empty resolution list".into()));
        }
        for list in [&self.nx, &self.nt] {
            if list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidConfig(
                    "resolution lists must be strictly increasing".into(),
                ));
            }
        }
        if self.samples_per_interval < 2 {
            return Err(Error::InvalidConfig(
                "samples_per_interval must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// One row of an EOC table.
#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub resolution: usize,
    pub k: f64,
    pub h: f64,
    pub err_u1_l2_nodal: f64,
    pub err_u1_h1_nodal: f64,
    pub err_u2_l2_nodal: f64,
    pub err_u1_l2_unif: f64,
    pub err_u1_h1_unif: f64,
    pub err_u2_l2_unif: f64,
    pub eoc_u1_l2_nodal: Option<f64>,
    pub eoc_u1_h1_nodal: Option<f64>,
    pub eoc_u2_l2_nodal: Option<f64>,
    pub eoc_u1_l2_unif: Option<f64>,
    pub eoc_u1_h1_unif: Option<f64>,
    pub eoc_u2_l2_unif: Option<f64>,
}

/// The mesh parameter EOCs are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeshParameter {
    StepSize,
    MeshWidth,
}

/// EOC table with a fixed serialization schema.
#[derive(Debug, Clone, Serialize)]
pub struct RateTable {
    pub mesh_parameter: MeshParameter,
    pub rows: Vec<RateRow>,
}

const ERROR_COLUMNS: [&str; 6] = [
    "err_u1_l2_nodal",
    "err_u1_h1_nodal",
    "err_u2_l2_nodal",
    "err_u1_l2_unif",
    "err_u1_h1_unif",
    "err_u2_l2_unif",
];

const EOC_COLUMNS: [&str; 6] = [
    "eoc_u1_l2_nodal",
    "eoc_u1_h1_nodal",
    "eoc_u2_l2_nodal",
    "eoc_u1_l2_unif",
    "eoc_u1_h1_unif",
    "eoc_u2_l2_unif",
];

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

impl RateRow {
    fn errors(&self) -> [f64; 6] {
        [
            self.err_u1_l2_nodal,
            self.err_u1_h1_nodal,
            self.err_u2_l2_nodal,
            self.err_u1_l2_unif,
            self.err_u1_h1_unif,
            self.err_u2_l2_unif,
        ]
    }

    fn eocs(&self) -> [Option<f64>; 6] {
        [
            self.eoc_u1_l2_nodal,
            self.eoc_u1_h1_nodal,
            self.eoc_u2_l2_nodal,
            self.eoc_u1_l2_unif,
            self.eoc_u1_h1_unif,
            self.eoc_u2_l2_unif,
        ]
    }
}

impl RateTable {
    /// CSV with the fixed header: resolution, k, h, six error columns,
    /// six eoc columns. Numbers carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("resolution,k,h");
        for c in ERROR_COLUMNS.iter().chain(EOC_COLUMNS.iter()) {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{},{}", row.resolution, fmt17(row.k), fmt17(row.h)));
            for e in row.errors() {
                out.push(',');
                out.push_str(&fmt17(e));
            }
            for e in row.eocs() {
                out.push(',');
                if let Some(v) = e {
                    out.push_str(&fmt17(v));
                }
            }
            out.push('\n');
        }
        out
    }

    /// JSON object mirroring the CSV fields.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mesh_parameter": match self.mesh_parameter {
                MeshParameter::StepSize => "k",
                MeshParameter::MeshWidth => "h",
            },
            "rows": self.rows,
        })
    }

    /// Gnuplot-style log-log plot data: one two-column
    /// (mesh-parameter, error) block per norm, blocks separated by
    /// blank lines.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::new();
        for (i, name) in ERROR_COLUMNS.iter().enumerate() {
            out.push_str(&format!("# {name}\n"));
            for row in &self.rows {
                let m = match self.mesh_parameter {
                    MeshParameter::StepSize => row.k,
                    MeshParameter::MeshWidth => row.h,
                };
                out.push_str(&format!("{} {}\n", fmt17(m), fmt17(row.errors()[i])));
            }
            out.push('\n');
        }
        out
    }

    /// EOC entries of the final pair (the asymptotic end of the ladder).
    pub fn final_eocs(&self) -> [Option<f64>; 6] {
        self.rows.last().map(|r| r.eocs()).unwrap_or([None; 6])
    }
}

/// Consecutive-pair EOC: `log(e_i / e_{i+1}) / log(m_i / m_{i+1})`,
/// None for the first row and for floor-limited pairs.
pub fn eoc(errors: &[f64], mesh_params: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for i in 1..errors.len() {
        let (e0, e1) = (errors[i - 1], errors[i]);
        let (m0, m1) = (mesh_params[i - 1], mesh_params[i]);
        if e0 > EOC_FLOOR && e1 > EOC_FLOOR {
            out[i] = Some((e0 / e1).ln() / (m0 / m1).ln());
        }
    }
    out
}

struct LadderEntry {
    resolution: usize,
    k: f64,
    h: f64,
    errors: ErrorColumns,
}

fn run_entry(
    cfg: &StudyConfig,
    nx: usize,
    nt: usize,
) -> Result<LadderEntry> {
    let space = FeSpace::uniform(cfg.domain.0, cfg.domain.1, nx)?;
    let m = assemble_mass(&space);
    let a = assemble_stiffness(&space);
    let sol = cfg.problem.build(&space);
    let init = sol.initial_state(&space)?;
    let load = sol.load_closure(&space)?;
    let part = TimePartition::uniform(cfg.t_final, nt)?;
    let load_ref = load.as_ref().map(|f| f as &dyn Fn(f64) -> Vec<f64>);
    let traj = run(cfg.scheme, &m, &a, &part, init, load_ref)?;

    let errors = match cfg.baseline {
        ErrorBaseline::Exact => {
            let (n1, n2, n3) = nodal_errors(&traj, &space, &sol);
            let (s1, s2, s3) = uniform_errors(&traj, &space, &sol, cfg.samples_per_interval)?;
            ErrorColumns {
                u1_l2_nodal: n1,
                u1_h1_nodal: n2,
                u2_l2_nodal: n3,
                u1_l2_unif: s1,
                u1_h1_unif: s2,
                u2_l2_unif: s3,
            }
        }
        ErrorBaseline::DiscreteMode => {
            if !sol.is_sine_mode() {
                return Err(Error::NoDiscreteMode(format!(
                    "problem '{}' has no discrete mode reference",
                    sol.name()
                )));
            }
            let reference = DiscreteModeReference::sine_mode(&space, &m, &a)?;
            errors_vs_reference(&traj, &m, &a, &reference, cfg.samples_per_interval)?
        }
    };
    Ok(LadderEntry {
        resolution: 0,
        k: part.k(0),
        h: space.mesh().h_max(),
        errors,
    })
}

fn table_from_entries(entries: Vec<LadderEntry>, param: MeshParameter) -> RateTable {
    let mesh: Vec<f64> = entries
        .iter()
        .map(|e| match param {
            MeshParameter::StepSize => e.k,
            MeshParameter::MeshWidth => e.h,
        })
        .collect();
    let errs: Vec<[f64; 6]> = entries
        .iter()
        .map(|e| {
            [
                e.errors.u1_l2_nodal,
                e.errors.u1_h1_nodal,
                e.errors.u2_l2_nodal,
                e.errors.u1_l2_unif,
                e.errors.u1_h1_unif,
                e.errors.u2_l2_unif,
            ]
        })
        .collect();
    let eocs: Vec<Vec<Option<f64>>> = (0..6)
        .map(|c| eoc(&errs.iter().map(|e| e[c]).collect::<Vec<_>>(), &mesh))
        .collect();
    let rows = entries
        .iter()
        .enumerate()
        .map(|(i, e)| RateRow {
            resolution: e.resolution,
            k: e.k,
            h: e.h,
            err_u1_l2_nodal: errs[i][0],
            err_u1_h1_nodal: errs[i][1],
            err_u2_l2_nodal: errs[i][2],
            err_u1_l2_unif: errs[i][3],
            err_u1_h1_unif: errs[i][4],
            err_u2_l2_unif: errs[i][5],
            eoc_u1_l2_nodal: eocs[0][i],
            eoc_u1_h1_nodal: eocs[1][i],
            eoc_u2_l2_nodal: eocs[2][i],
            eoc_u1_l2_unif: eocs[3][i],
            eoc_u1_h1_unif: eocs[4][i],
            eoc_u2_l2_unif: eocs[5][i],
        })
        .collect();
    RateTable {
        mesh_parameter: param,
        rows,
    }
}

/// Sweep the temporal ladder at fixed spatial resolution.
pub fn run_temporal_study(cfg: &StudyConfig) -> Result<RateTable> {
    cfg.validate()?;
    if cfg.nt.len() < 2 {
        return Err(Error::LadderTooShort(cfg.nt.len()));
    }
    let nx = *cfg.nx.last().unwrap();
    let results = parallel_try_map(cfg.nt.len(), cfg.threads, |i| {
        let nt = cfg.nt[i];
        let mut e = run_entry(cfg, nx, nt)?;
        e.resolution = nt;
        Ok(e)
    })?;
    Ok(table_from_entries(results, MeshParameter::StepSize))
}

/// Sweep the spatial ladder with the step size coupled to the mesh
/// width: k = h for dG(1), k = h^2 (capped at 2000 steps) for dG(0).
pub fn run_spatial_study(cfg: &StudyConfig) -> Result<RateTable> {
    cfg.validate()?;
    if cfg.nx.len() < 2 {
        return Err(Error::LadderTooShort(cfg.nx.len()));
    }
    if cfg.baseline == ErrorBaseline::DiscreteMode {
        return Err(Error::InvalidConfig(
            "spatial studies measure against the exact solution".into(),
        ));
    }
    let results = parallel_try_map(cfg.nx.len(), cfg.threads, |i| {
        let nx = cfg.nx[i];
        let h = (cfg.domain.1 - cfg.domain.0) / nx as f64;
        let nt = match cfg.scheme {
            DgScheme::Dg1 => (cfg.t_final / h).ceil() as usize,
            DgScheme::Dg0 => ((cfg.t_final / (h * h)).ceil() as usize).min(2000),
        }
        .max(1);
        let mut e = run_entry(cfg, nx, nt)?;
        e.resolution = nx;
        Ok(e)
    })?;
    Ok(table_from_entries(results, MeshParameter::MeshWidth))
}

/// Energy audit of a single run; convenience driver for the CLI.
pub fn run_audit(
    cfg: &StudyConfig,
    nx: usize,
    nt: usize,
) -> Result<(energy::EnergyLedger, energy::StabilityReport, DgTrajectory)> {
    cfg.validate()?;
    let space = FeSpace::uniform(cfg.domain.0, cfg.domain.1, nx)?;
    let m = assemble_mass(&space);
    let a = assemble_stiffness(&space);
    let sol = cfg.problem.build(&space);
    let init = sol.initial_state(&space)?;
    let load = sol.load_closure(&space)?;
    let part = TimePartition::uniform(cfg.t_final, nt)?;
    let load_ref = load.as_ref().map(|f| f as &dyn Fn(f64) -> Vec<f64>);
    let traj = run(cfg.scheme, &m, &a, &part, init, load_ref)?;
    let ledger = energy::audit(&traj, &m, &a, load_ref)?;
    let report = energy::stability_bound_check(&traj, &m, &a, load_ref)?;
    Ok((ledger, report, traj))
}

/// Report of the temporal interpolation probe.
#[derive(Debug, Clone, Serialize)]
pub struct InterpProbeReport {
    pub q: usize,
    /// Largest right-endpoint condition residual over the ladder.
    pub endpoint_residual: f64,
    /// Largest moment-orthogonality residual (zero for q = 0, where the
    /// condition is vacuous).
    pub moment_residual: f64,
    /// (steps, k, L1-in-time interpolation error) per ladder entry.
    pub errors: Vec<(usize, f64, f64)>,
    pub eoc: Vec<Option<f64>>,
}

/// Interpolate a scalar temporal mode onto piecewise polynomials of
/// degree q matching the right endpoint of every interval and, for
/// q = 1, the interval mean; measures the L1-in-time error under
/// refinement.
pub fn interpolation_rate_probe(
    u: &dyn Fn(f64) -> f64,
    t_final: f64,
    steps: &[usize],
    q: usize,
) -> Result<InterpProbeReport> {
    if q > 1 {
        return Err(Error::InvalidConfig(format!(
            "interpolation probe supports q in {{0, 1}}, got {q}"
        )));
    }
    if steps.len() < 2 {
        return Err(Error::LadderTooShort(steps.len()));
    }
    let mut endpoint_residual = 0.0f64;
    let mut moment_residual = 0.0f64;
    let mut errors = Vec::with_capacity(steps.len());
    for &n in steps {
        let part = TimePartition::uniform(t_final, n)?;
        let mut l1 = 0.0;
        for i in 0..n {
            let t0 = part.node(i);
            let t1 = part.node(i + 1);
            let k = part.k(i);
            let right = u(t1);
            // Coefficients in the nodal interval basis.
            let (left, _mean) = if q == 0 {
                (right, 0.0)
            } else {
                let mean: f64 = gauss_on(t0, t1, 7).iter().map(|&(t, w)| w * u(t)).sum();
                (2.0 * mean / k - right, mean)
            };
            let interp = |t: f64| {
                let s = (t - t0) / k;
                left * (1.0 - s) + right * s
            };
            let p_right = if q == 0 { right } else { interp(t1) };
            endpoint_residual = endpoint_residual.max((p_right - u(t1)).abs());
            if q == 1 {
                let moment: f64 = gauss_on(t0, t1, 7)
                    .iter()
                    .map(|&(t, w)| w * (interp(t) - u(t)))
                    .sum();
                moment_residual = moment_residual.max(moment.abs());
            }
            let value = |t: f64| if q == 0 { right } else { interp(t) };
            l1 += gauss_on(t0, t1, 10)
                .iter()
                .map(|&(t, w)| w * (value(t) - u(t)).abs())
                .sum::<f64>();
        }
        errors.push((n, t_final / n as f64, l1));
    }
    let ks: Vec<f64> = errors.iter().map(|e| e.1).collect();
    let es: Vec<f64> = errors.iter().map(|e| e.2).collect();
    let rates = eoc(&es, &ks);
    Ok(InterpProbeReport {
        q,
        endpoint_residual,
        moment_residual,
        errors,
        eoc: rates,
    })
}

/// Index-parallel map with an explicit worker cap; results keep index
/// order, so output is deterministic regardless of scheduling.
fn parallel_try_map<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let workers = if threads == 0 {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
    } else {
        threads
    }
    .min(n)
    .max(1);

    if workers == 1 {
        return (0..n).map(&f).collect();
    }

    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<T>>>> =
        (0..n).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
