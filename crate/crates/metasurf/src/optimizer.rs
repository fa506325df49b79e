//! Objective functional and the optimization loop.
//!
//! Each iteration: remesh → cell solve → coefficients → macro solve →
//! objective → adjoint → multipliers → topological derivative → level-set
//! update. J = w·J₁ − (1−w)·J₂ with J₁, J₂ the outlet norms ∫|P⁻|² over
//! Γmin and Γmax, divided by their values at iteration 0.

use crate::adjoint::{lagrange_multipliers, solve_macro_adjoint, Multipliers};
use crate::cell::{compute_coefficients, CellSolution, HomogenizedCoeffs, MaterialPair};
use crate::error::{Error, Result};
use crate::levelset::{initialize, DesignDomain, LevelSet, LevelSetParams, LevelSetStepper, Shape};
use crate::macroscale::{boundary_norm, build_macro_mesh, MacroConfig, MacroGeometry, MacroProblem, MacroSolution};
use crate::mesh::write_vtk;
use crate::mesh::{BoundaryTag, ConformOptions, TriMesh};
use crate::sensitivity::{sensitivity_field, Direction, SensitivityField};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub w: f64,
    pub gamma_min: BoundaryTag,
    pub gamma_max: BoundaryTag,
    pub norm_min: Option<f64>,
    pub norm_max: Option<f64>,
}

impl ObjectiveSpec {
    /// Case 1: suppress outlet 2, enhance outlet 1.
    pub fn case1(w: f64) -> Self {
        ObjectiveSpec { w, gamma_min: BoundaryTag::Outlet2, gamma_max: BoundaryTag::Outlet1, norm_min: None, norm_max: None }
    }

    /// Case 2: the outlets swapped.
    pub fn case2(w: f64) -> Self {
        ObjectiveSpec { w, gamma_min: BoundaryTag::Outlet1, gamma_max: BoundaryTag::Outlet2, norm_min: None, norm_max: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::invalid(format!("objective weight w must lie in [0, 1], got {}", self.w)));
        }
        Ok(())
    }

    pub fn is_captured(&self) -> bool {
        self.norm_min.is_some() && self.norm_max.is_some()
    }

    /// Record the normalizers from the initial design. Later calls are no-ops.
    pub fn capture(&mut self, sol: &MacroSolution) -> Result<()> {
        if self.is_captured() {
            return Ok(());
        }
        let n_min = boundary_norm(sol, self.gamma_min)?;
        let n_max = boundary_norm(sol, self.gamma_max)?;
        if !(n_min > 0.0 && n_max > 0.0) {
            return Err(Error::Solver(format!(
                "degenerate initial field: outlet norms {n_min:e} ({}) and {n_max:e} ({})",
                self.gamma_min.name(),
                self.gamma_max.name()
            )));
        }
        self.norm_min = Some(n_min);
        self.norm_max = Some(n_max);
        Ok(())
    }

    /// (tag, c) with J = Σ c·∫_tag |P⁻|².
    pub fn source_terms(&self) -> Result<[(BoundaryTag, f64); 2]> {
        match (self.norm_min, self.norm_max) {
            (Some(a), Some(b)) => Ok([(self.gamma_min, self.w / a), (self.gamma_max, -(1.0 - self.w) / b)]),
            _ => Err(Error::invalid("objective normalizers have not been captured")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub j: f64,
    pub j1: f64,
    pub j2: f64,
}

/// Evaluates J; captures the normalizers first if they are still unset.
pub fn evaluate_objective(sol: &MacroSolution, spec: &mut ObjectiveSpec) -> Result<ObjectiveValue> {
    spec.validate()?;
    spec.capture(sol)?;
    let j1 = boundary_norm(sol, spec.gamma_min)? / spec.norm_min.unwrap();
    let j2 = boundary_norm(sol, spec.gamma_max)? / spec.norm_max.unwrap();
    Ok(ObjectiveValue { j: spec.w * j1 - (1.0 - spec.w) * j2, j1, j2 })
}

/// Cell-to-objective chain for a fixed macro problem.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub materials: MaterialPair,
    pub macro_cfg: MacroConfig,
    pub problem: MacroProblem,
    pub objective: ObjectiveSpec,
}

/// Everything computed from one cell mesh.
#[derive(Clone, Debug)]
pub struct DesignEvaluation {
    pub cell: CellSolution,
    pub coeffs: HomogenizedCoeffs,
    pub state: MacroSolution,
    pub value: ObjectiveValue,
}

impl Evaluator {
    pub fn new(materials: MaterialPair, macro_cfg: MacroConfig, nx: usize, ny: usize, objective: ObjectiveSpec) -> Result<Self> {
        let mesh = build_macro_mesh(&macro_cfg, nx, ny)?;
        let problem = MacroProblem::new(&mesh, &macro_cfg)?;
        Ok(Evaluator { materials, macro_cfg, problem, objective })
    }

    /// Cell solve, macro solve and J. Captures the normalizers on first use.
    pub fn evaluate(&mut self, cell_mesh: Arc<TriMesh>) -> Result<DesignEvaluation> {
        let (cell, coeffs) = compute_coefficients(cell_mesh, &self.materials)?;
        let state = self.problem.solve(&coeffs, &self.macro_cfg)?;
        let value = evaluate_objective(&state, &mut self.objective)?;
        Ok(DesignEvaluation { cell, coeffs, state, value })
    }

    /// J for given coefficients (normalizers must be captured).
    pub fn objective_of(&self, coeffs: &HomogenizedCoeffs) -> Result<f64> {
        let state = self.problem.solve(coeffs, &self.macro_cfg)?;
        let mut spec = self.objective;
        if !spec.is_captured() {
            return Err(Error::invalid("objective normalizers have not been captured"));
        }
        Ok(evaluate_objective(&state, &mut spec)?.j)
    }

    pub fn multipliers(&self, state: &MacroSolution) -> Result<Multipliers> {
        let adj = solve_macro_adjoint(state, &self.objective)?;
        Ok(lagrange_multipliers(state, &adj))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub materials: MaterialPair,
    pub geometry: MacroGeometry,
    pub k0: f64,
    pub eps0: f64,
    pub kappa: f64,
    pub p_in: f64,
    pub objective: ObjectiveSpec,
    pub cell_n: usize,
    pub macro_nx: usize,
    pub macro_ny: usize,
    pub initial_shape: Shape,
    pub initial_width: f64,
    pub levelset: LevelSetParams,
    pub conform: ConformOptions,
    pub max_iterations: usize,
    pub threshold: f64,
    pub activation: usize,
    pub snapshot_every: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            materials: MaterialPair::air_aluminum(),
            geometry: MacroGeometry::design(),
            k0: 25.0,
            eps0: 0.01,
            kappa: 1.0,
            p_in: 1.0,
            objective: ObjectiveSpec::case1(0.5),
            cell_n: 40,
            macro_nx: 40,
            macro_ny: 40,
            initial_shape: Shape::Circle { center: [0.5, 0.5], radius: 0.3 },
            initial_width: 0.1,
            levelset: LevelSetParams::default(),
            conform: ConformOptions::default(),
            max_iterations: 400,
            threshold: 3e-4,
            activation: 200,
            snapshot_every: 50,
            output_dir: None,
        }
    }
}

impl OptimizerConfig {
    pub fn macro_config(&self) -> MacroConfig {
        // the background medium is the cell's air
        let mut m = MacroConfig::from_k0(self.k0, self.geometry);
        m.rho0 = self.materials.rho_air;
        m.k_bulk0 = self.materials.k_air;
        m.omega = self.k0 * m.c0();
        m.eps0 = self.eps0;
        m.kappa = self.kappa;
        m.p_in = self.p_in;
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: ObjectiveValue,
    pub coeffs: HomogenizedCoeffs,
    pub moving_avg: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub iteration: usize,
    pub history: Vec<IterationRecord>,
    pub phi: LevelSet,
    pub converged: bool,
}

pub const HISTORY_HEADER: [&str; 9] = ["iter", "J", "J1", "J2", "A11", "B1", "Kinv", "F", "moving_avg"];

/// 10-sample mean of |ΔJ|/|J| over the last 11 values, once available.
pub fn moving_average(js: &[f64]) -> Option<f64> {
    if js.len() < 11 {
        return None;
    }
    let tail = &js[js.len() - 11..];
    let sum: f64 = tail.windows(2).map(|w| (w[1] - w[0]).abs() / w[1].abs().max(1e-300)).sum();
    Some(sum / 10.0)
}

pub fn history_row(r: &IterationRecord) -> [String; 9] {
    let c = &r.coeffs;
    [
        r.iteration.to_string(),
        r.value.j.to_string(),
        r.value.j1.to_string(),
        r.value.j2.to_string(),
        c.a11.to_string(),
        c.b1.to_string(),
        c.kinv.to_string(),
        c.f.to_string(),
        r.moving_avg.map(|m| m.to_string()).unwrap_or_default(),
    ]
}

/// Stage-by-stage record of one loop pass, for inspection and tests.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub cell_mesh: Arc<TriMesh>,
    pub evaluation: DesignEvaluation,
    pub multipliers: Multipliers,
    pub sensitivity: SensitivityField,
    pub next: LevelSet,
}

/// The optimizer with its cached operators.
pub struct Optimizer {
    pub cfg: OptimizerConfig,
    pub domain: DesignDomain,
    pub evaluator: Evaluator,
    stepper: LevelSetStepper,
}

fn stage<T>(iteration: usize, name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { iteration, stage: name, source: Box::new(e) })
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig) -> Result<Self> {
        cfg.objective.validate()?;
        if cfg.max_iterations == 0 {
            return Err(Error::invalid("iteration cap must be at least 1"));
        }
        let domain = DesignDomain::structured(cfg.cell_n)?;
        let evaluator = Evaluator::new(cfg.materials, cfg.macro_config(), cfg.macro_nx, cfg.macro_ny, cfg.objective)?;
        if !(evaluator.problem.spaces.minus.mesh.has_tag(cfg.objective.gamma_min) && evaluator.problem.spaces.minus.mesh.has_tag(cfg.objective.gamma_max)) {
            return Err(Error::invalid("objective outlets are not present in the macro geometry"));
        }
        let stepper = LevelSetStepper::new(&domain, cfg.levelset)?;
        Ok(Optimizer { cfg, domain, evaluator, stepper })
    }

    pub fn initial_levelset(&self) -> Result<LevelSet> {
        initialize(&self.cfg.initial_shape, &self.domain, self.cfg.initial_width)
    }

    /// State evaluation of a design (remesh, cell, coefficients, macro, J).
    pub fn evaluate(&mut self, ls: &LevelSet, iteration: usize) -> Result<(Arc<TriMesh>, DesignEvaluation)> {
        let mesh = Arc::new(stage(iteration, "remesh", self.domain.conforming_mesh(ls, &self.cfg.conform))?);
        let (cell, coeffs) = stage(iteration, "cell", compute_coefficients(mesh.clone(), &self.cfg.materials))?;
        let state = stage(iteration, "macro", self.evaluator.problem.solve(&coeffs, &self.evaluator.macro_cfg))?;
        let value = stage(iteration, "objective", evaluate_objective(&state, &mut self.evaluator.objective))?;
        Ok((mesh, DesignEvaluation { cell, coeffs, state, value }))
    }

    /// Adjoint, multipliers, topological derivative and level-set update.
    pub fn advance(&self, ls: &LevelSet, eval: &DesignEvaluation, iteration: usize) -> Result<(Multipliers, SensitivityField, LevelSet)> {
        let adj = stage(iteration, "adjoint", solve_macro_adjoint(&eval.state, &self.evaluator.objective))?;
        let mult = lagrange_multipliers(&eval.state, &adj);
        let sens = stage(iteration, "sensitivity", sensitivity_field(&eval.cell, &mult, &self.cfg.materials, &self.domain, ls))?;
        let next = stage(iteration, "update", self.stepper.step(ls, &sens.jprime))?;
        Ok((mult, sens, next))
    }

    /// One full pass from φ.
    pub fn iterate(&mut self, ls: &LevelSet, iteration: usize) -> Result<IterationTrace> {
        let (cell_mesh, evaluation) = self.evaluate(ls, iteration)?;
        let (multipliers, sensitivity, next) = self.advance(ls, &evaluation, iteration)?;
        Ok(IterationTrace { cell_mesh, evaluation, multipliers, sensitivity, next })
    }

    fn snapshot(&self, dir: &std::path::Path, iteration: usize, ls: &LevelSet, mesh: &TriMesh) -> Result<()> {
        ls.save(&dir.join(format!("phi_{iteration:05}.vtk")), &self.domain)?;
        write_vtk(&dir.join(format!("design_{iteration:05}.vtk")), mesh, &[], &[])
    }

    /// Full loop. History is appended to `history.csv` in the output
    /// directory after every iteration, so a failure leaves a partial file.
    pub fn run(&mut self) -> Result<OptimizerState> {
        let mut ls = self.initial_levelset()?;
        let mut writer = match &self.cfg.output_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let mut w = csv::Writer::from_path(dir.join("history.csv"))?;
                w.write_record(HISTORY_HEADER)?;
                w.flush()?;
                Some(w)
            }
            None => None,
        };
        let mut history: Vec<IterationRecord> = Vec::new();
        let mut js = Vec::new();
        let mut converged = false;
        let mut last_mesh = None;
        for it in 0..self.cfg.max_iterations {
            let (mesh, eval) = self.evaluate(&ls, it)?;
            js.push(eval.value.j);
            let record = IterationRecord { iteration: it, value: eval.value, coeffs: eval.coeffs, moving_avg: moving_average(&js) };
            if let Some(w) = writer.as_mut() {
                w.write_record(history_row(&record))?;
                w.flush()?;
            }
            history.push(record);
            if let Some(dir) = &self.cfg.output_dir {
                if self.cfg.snapshot_every > 0 && it % self.cfg.snapshot_every == 0 {
                    self.snapshot(dir, it, &ls, &mesh)?;
                }
            }
            last_mesh = Some(mesh);
            if it >= self.cfg.activation && record.moving_avg.is_some_and(|m| m < self.cfg.threshold) {
                converged = true;
                break;
            }
            if it + 1 == self.cfg.max_iterations {
                break;
            }
            let (_, _, next) = self.advance(&ls, &eval, it)?;
            ls = next;
        }
        if let (Some(dir), Some(mesh)) = (&self.cfg.output_dir, &last_mesh) {
            ls.save(&dir.join("phi_final.vtk"), &self.domain)?;
            write_vtk(&dir.join("design_final.vtk"), mesh, &[], &[])?;
            let mut f = std::fs::File::create(dir.join("coefficients.csv"))?;
            let c = history.last().unwrap().coeffs;
            writeln!(f, "A11,B1,Kinv,F\n{},{},{},{}", c.a11, c.b1, c.kinv, c.f)?;
        }
        Ok(OptimizerState { iteration: history.len(), history, phi: ls, converged })
    }
}

/// Convenience wrapper: build and run.
pub fn run(cfg: OptimizerConfig) -> Result<OptimizerState> {
    Optimizer::new(cfg)?.run()
}

/// Striped-design heuristic: the elastic phase contains a connected
/// component touching both periodic sides (a band crossing D) whose
/// horizontal extent exceeds its vertical extent.
pub fn is_striped(mesh: &TriMesh) -> bool {
    use crate::mesh::Region;
    let n = mesh.n_triangles();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let elastic: Vec<bool> = mesh.regions.iter().map(|r| *r == Region::Elastic).collect();
    let mut owner = std::collections::HashMap::new();
    for t in 0..n {
        if !elastic[t] {
            continue;
        }
        for k in 0..3 {
            let (a, b) = (mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3]);
            if let Some(&u) = owner.get(&(a.min(b), a.max(b))) {
                let (ra, rb) = (find(&mut parent, u), find(&mut parent, t));
                parent[ra] = rb;
            } else {
                owner.insert((a.min(b), a.max(b)), t);
            }
        }
    }
    // periodic sides: a component touches x = 0 and x = 1
    let mut ext: std::collections::HashMap<usize, [f64; 4]> = std::collections::HashMap::new();
    for t in 0..n {
        if !elastic[t] {
            continue;
        }
        let r = find(&mut parent, t);
        let e = ext.entry(r).or_insert([f64::MAX, f64::MIN, f64::MAX, f64::MIN]);
        for p in mesh.vertices(t) {
            e[0] = e[0].min(p[0]);
            e[1] = e[1].max(p[0]);
            e[2] = e[2].min(p[1]);
            e[3] = e[3].max(p[1]);
        }
    }
    ext.values().any(|e| e[0] < 1e-9 && e[1] > 1.0 - 1e-9 && (e[1] - e[0]) > (e[3] - e[2]))
}

/// One probe of the topological-derivative oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdProbe {
    pub point: [f64; 2],
    pub eps: f64,
    pub direction: Direction,
    /// D_T J from the adjoint formula.
    pub predicted: f64,
    /// (J_pert − J)/(−|ω_ε|) with |ω_ε| the area actually switched.
    pub observed: f64,
    pub switched_area: f64,
}

impl TdProbe {
    pub fn rel_err(&self) -> f64 {
        (self.observed - self.predicted).abs() / self.predicted.abs()
    }
}

/// Brute-force check of D_T J: insert a disk of radius `eps` (cell units)
/// of the other material at `point` and re-solve the whole chain. The cell
/// mesh is bisected down to eps/8 around the probe, which must be a node
/// of the base mesh.
pub fn td_perturbation_check(cfg: &OptimizerConfig, point: [f64; 2], eps: f64) -> Result<TdProbe> {
    use crate::cell::DESIGN_BAND;
    use crate::mesh::{cell_base_mesh, refine_near, Region};
    use crate::sensitivity::{recover_gradients, topological_derivative};
    if !(eps > 0.0) || point[1] - eps <= DESIGN_BAND.0 || point[1] + eps >= DESIGN_BAND.1 {
        return Err(Error::invalid(format!("probe {point:?} with radius {eps} must lie inside the design band")));
    }
    let base = cell_base_mesh(cfg.cell_n, DESIGN_BAND)?;
    let domain = DesignDomain::new(refine_near(&base, point, 2.0 * eps, eps / 8.0)?)?;
    let ls = initialize(&cfg.initial_shape, &domain, cfg.initial_width)?;
    let probe = domain
        .design_mesh
        .nodes
        .iter()
        .position(|p| (p[0] - point[0]).abs() < 1e-12 && (p[1] - point[1]).abs() < 1e-12)
        .ok_or_else(|| Error::Mesh("probe is not a node of the graded mesh".into()))?;
    let direction = if ls.phi[probe] > 0.0 { Direction::ElasticToAir } else { Direction::AirToElastic };

    let mut ev = Evaluator::new(cfg.materials, cfg.macro_config(), cfg.macro_nx, cfg.macro_ny, cfg.objective)?;
    let base_mesh = Arc::new(domain.conforming_mesh(&ls, &cfg.conform)?);
    let base = ev.evaluate(base_mesh.clone())?;
    let mult = ev.multipliers(&base.state)?;
    let grads = recover_gradients(&base.cell, direction.inclusion_exterior().1);
    let predicted = topological_derivative(&grads[domain.to_cell[probe]], &mult, &cfg.materials, direction);

    // sharp disk profile, merged with φ by max (adding elastic) or min
    let width = eps / 4.0;
    let pert = LevelSet {
        phi: domain
            .design_mesh
            .nodes
            .iter()
            .zip(&ls.phi)
            .map(|(p, &f)| {
                let dx = p[0] - point[0];
                let dx = dx - dx.round();
                let d = ((eps - dx.hypot(p[1] - point[1])) / width).clamp(-1.0, 1.0);
                match direction {
                    Direction::AirToElastic => f.max(d),
                    Direction::ElasticToAir => f.min(-d),
                }
            })
            .collect(),
    };
    let pert_mesh = Arc::new(domain.conforming_mesh(&pert, &cfg.conform)?);
    let perturbed = ev.evaluate(pert_mesh.clone())?;
    let elastic = |m: &TriMesh| m.region_area(|r| r == Region::Elastic);
    let switched_area = (elastic(&pert_mesh) - elastic(&base_mesh)).abs();
    let observed = (perturbed.value.j - base.value.j) / -switched_area;
    Ok(TdProbe { point, eps, direction, predicted, observed, switched_area })
}
