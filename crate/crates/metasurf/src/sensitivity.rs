//! Topological derivative of J over the design domain and the level-set
//! source J′ built from it.
//!
//! With V(ε) = −πε², J(inclusion of radius ε at y) ≈ J + V(ε)·D_T J(y),
//! so a positive D_T J marks a point where switching material lowers J.

use crate::adjoint::Multipliers;
use crate::cell::{CellSolution, MaterialPair};
use crate::error::{Error, Result};
use crate::levelset::{DesignDomain, LevelSet};
use crate::mesh::{Material, Region};
use crate::par::Exec;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    AirToElastic,
    ElasticToAir,
}

impl Direction {
    /// Materials of the inclusion and of the surrounding medium.
    pub fn inclusion_exterior(self) -> (Material, Material) {
        match self {
            Direction::AirToElastic => (Material::Elastic, Material::Air),
            Direction::ElasticToAir => (Material::Air, Material::Elastic),
        }
    }
}

/// Nodal ∇η and ∇ξ.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodalGradients {
    pub eta: [f64; 2],
    pub xi: [f64; 2],
}

/// Area-weighted nodal gradients recovered from the elements of one
/// material only; nodes with no such element fall back to the other one.
/// Periodic partners pool their neighborhoods.
pub fn recover_gradients(sol: &CellSolution, side: Material) -> Vec<NodalGradients> {
    let mesh = sol.mesh();
    let n = mesh.n_nodes();
    // [Σw∇η, Σw∇ξ, Σw] per node and per side (0 = requested, 1 = other)
    let mut acc = vec![[[0.0f64; 5]; 2]; n];
    for t in 0..mesh.n_triangles() {
        let s = usize::from(mesh.regions[t].material() != side);
        let w = mesh.area(t);
        for (k, &v) in mesh.triangles[t].iter().enumerate() {
            let mut l = [0.0; 3];
            l[k] = 1.0;
            let ge = sol.space.grad(&sol.eta, t, l);
            let gx = sol.space.grad(&sol.xi, t, l);
            let a = &mut acc[v][s];
            a[0] += w * ge[0];
            a[1] += w * ge[1];
            a[2] += w * gx[0];
            a[3] += w * gx[1];
            a[4] += w;
        }
    }
    if let Some(map) = &sol.space.periodic {
        for &(m, s) in &map.pairs {
            let mut sum = acc[m];
            for side in 0..2 {
                for k in 0..5 {
                    sum[side][k] += acc[s][side][k];
                }
            }
            acc[m] = sum;
            acc[s] = sum;
        }
    }
    acc.iter()
        .map(|a| {
            let b = if a[0][4] > 0.0 { a[0] } else { a[1] };
            if b[4] > 0.0 {
                NodalGradients { eta: [b[0] / b[4], b[1] / b[4]], xi: [b[2] / b[4], b[3] / b[4]] }
            } else {
                NodalGradients::default()
            }
        })
        .collect()
}

/// The four ε-independent terms at a point with the given background
/// gradients.
pub fn i_terms(g: &NodalGradients, mat: &MaterialPair, dir: Direction) -> [f64; 4] {
    let (inc, ext) = dir.inclusion_exterior();
    let region = |m: Material| if m == Material::Elastic { Region::Elastic } else { Region::Air };
    let (ri, re) = (mat.rho(region(inc)), mat.rho(region(ext)));
    let (ki, ke) = (mat.bulk(region(inc)), mat.bulk(region(ext)));
    let contrast = 4.0 * PI * (ri - re) / (re * (ri + re));
    let (e, x) = (g.eta, g.xi);
    let i1 = -contrast * (e[0] * e[0] + e[1] * e[1] + 2.0 * e[0] + 1.0);
    let i2 = -contrast * (x[0] * e[0] + x[1] * e[1] + x[0]);
    let i3 = 2.0 * PI * (1.0 / ki - 1.0 / ke);
    let i4 = contrast * (x[0] * x[0] + x[1] * x[1]);
    [i1, i2, i3, i4]
}

/// D_T J = −(1/2π)(λ_A·I₁ + λ_B·I₂ + λ_K·I₃ + λ_F·I₄).
pub fn topological_derivative(g: &NodalGradients, mult: &Multipliers, mat: &MaterialPair, dir: Direction) -> f64 {
    let i = i_terms(g, mat, dir);
    -(mult.lambda_a11 * i[0] + mult.lambda_b1 * i[1] + mult.lambda_kinv * i[2] + mult.lambda_f * i[3]) / (2.0 * PI)
}

/// D_T J at the given cell-mesh nodes.
pub fn topological_derivative_field(
    sol: &CellSolution,
    mult: &Multipliers,
    mat: &MaterialPair,
    dir: Direction,
    nodes: &[usize],
) -> Vec<f64> {
    let grads = recover_gradients(sol, dir.inclusion_exterior().1);
    crate::par::map(Exec::default(), nodes, |&v| topological_derivative(&grads[v], mult, mat, dir))
}

/// Both directional derivatives on the design nodes, and J′.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityField {
    pub dt_air_to_elastic: Vec<f64>,
    pub dt_elastic_to_air: Vec<f64>,
    pub jprime: Vec<f64>,
}

pub fn sensitivity_field(
    sol: &CellSolution,
    mult: &Multipliers,
    mat: &MaterialPair,
    domain: &DesignDomain,
    ls: &LevelSet,
) -> Result<SensitivityField> {
    if ls.phi.len() != domain.n_design_nodes() {
        return Err(Error::invalid("level set does not match the design mesh"));
    }
    if domain.to_cell.iter().any(|&v| v >= sol.mesh().n_nodes()) {
        return Err(Error::invalid("cell solution mesh does not contain the design nodes"));
    }
    let ae = topological_derivative_field(sol, mult, mat, Direction::AirToElastic, &domain.to_cell);
    let ea = topological_derivative_field(sol, mult, mat, Direction::ElasticToAir, &domain.to_cell);
    let jprime = map_to_jprime(&ae, &ea, &ls.phi);
    Ok(SensitivityField { dt_air_to_elastic: ae, dt_elastic_to_air: ea, jprime })
}

/// J′ = −D_T J(air→elastic) in air (φ ≤ 0), +D_T J(elastic→air) where
/// φ > 0, scaled to unit L∞ norm (left at zero when it vanishes).
pub fn map_to_jprime(dt_ae: &[f64], dt_ea: &[f64], phi: &[f64]) -> Vec<f64> {
    let mut j: Vec<f64> = phi.iter().zip(dt_ae.iter().zip(dt_ea)).map(|(&p, (&ae, &ea))| if p > 0.0 { ea } else { -ae }).collect();
    let max = j.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 && max.is_finite() {
        j.iter_mut().for_each(|v| *v /= max);
    }
    j
}
