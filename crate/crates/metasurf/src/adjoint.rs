//! Macroscale adjoint and the Lagrange multipliers of the four interface
//! coefficients.
//!
//! The adjoint unknowns (Q⁺, Q⁻, q⁰, Ψ⁺, Ψ⁻) are the multipliers of the
//! state equations tested by (P̃⁺, P̃⁻, q̃, ψ, φ). Each adjoint row below is
//! the variation of the Lagrangian with respect to one state variable, so
//! the system is assembled from its own weak forms rather than by
//! transposing the state matrix. For any coefficient θ,
//! dJ/dθ = 2Re[vᵀ (∂A/∂θ) u].

use crate::cell::HomogenizedCoeffs;
use crate::error::{Error, Result};
use crate::fem::{BlockLayout, Coo, SparseSystem};
use crate::macroscale::{c, outlet_mass, MacroSolution};
use crate::optimizer::ObjectiveSpec;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct AdjointSolution {
    pub q_plus: Vec<Complex64>,
    pub q_minus: Vec<Complex64>,
    pub q0: Vec<Complex64>,
    pub psi_plus: Vec<Complex64>,
    pub psi_minus: Vec<Complex64>,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Multipliers {
    pub lambda_a11: f64,
    pub lambda_b1: f64,
    pub lambda_kinv: f64,
    pub lambda_f: f64,
}

impl Multipliers {
    /// Same order as `HomogenizedCoeffs::as_array`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.lambda_a11, self.lambda_b1, self.lambda_kinv, self.lambda_f]
    }
}

fn adjoint_layout(state: &MacroSolution) -> BlockLayout {
    let mut l = BlockLayout::new();
    l.push("Q+", state.p_plus.len());
    l.push("Q-", state.p_minus.len());
    l.push("q0", state.p0.len());
    l.push("Psi+", state.g_plus.len());
    l.push("Psi-", state.g_minus.len());
    l
}

/// Adjoint system; row blocks are named after the adjoint unknown of the
/// same size (row "Q+" is the P⁺-variation equation, and so on).
pub fn assemble_adjoint_system(state: &MacroSolution, objective: &ObjectiveSpec) -> Result<SparseSystem<Complex64>> {
    let cfg = &state.cfg;
    let b = &*state.blocks;
    let HomogenizedCoeffs { a11, b1, kinv, f } = state.coeffs;
    let (rho0, w2) = (cfg.rho0, cfg.omega * cfg.omega);
    let robin = crate::macroscale::I * (cfg.k0 / rho0);
    let inv_eps = 1.0 / cfg.eps0;
    let mut sys = SparseSystem::<Complex64>::new(adjoint_layout(state));

    // δP⁺: ∫(1/ρ₀)∇Q⁺∇δP − (ω²/K₀)∫Q⁺δP + (ik₀/ρ₀)∫_in Q⁺δP − (1/ε₀)∫Ψ⁺δP − ½∫Ψ⁻δP = 0
    sys.add("Q+", "Q+", &b.stiff_plus, c(1.0 / rho0))?;
    sys.add("Q+", "Q+", &b.mass_plus, c(-w2 / cfg.k_bulk0))?;
    sys.add("Q+", "Q+", &b.inlet, robin)?;
    sys.add("Q+", "Psi+", &b.g_tp_m, c(-inv_eps))?;
    sys.add("Q+", "Psi-", &b.g_tp_m, c(-0.5))?;

    // δP⁻: same operator with absorbing outlets, + (1/ε₀)∫Ψ⁺δP − ½∫Ψ⁻δP = −∂g/∂P⁻
    sys.add("Q-", "Q-", &b.stiff_minus, c(1.0 / rho0))?;
    sys.add("Q-", "Q-", &b.mass_minus, c(-w2 / cfg.k_bulk0))?;
    sys.add("Q-", "Q-", &b.outlet, robin)?;
    sys.add("Q-", "Psi+", &b.g_tm_m, c(inv_eps))?;
    sys.add("Q-", "Psi-", &b.g_tm_m, c(-0.5))?;

    // δp⁰: A₁₁∫q⁰'δp' − ω²K⁻¹∫q⁰δp + B₁∫Ψ⁺δp' + ∫Ψ⁻δp = 0
    sys.add("q0", "q0", &b.p0_p0_dd, c(a11))?;
    sys.add("q0", "q0", &b.p0_p0_m, c(-w2 * kinv))?;
    sys.add("q0", "Psi+", &b.g_p0_testdx, c(b1))?;
    sys.add("q0", "Psi-", &b.g_p0_m, c(1.0))?;

    // δG⁺: −∫Q⁺δG + ½B₁∫q⁰'δG + (1/ε₀)∫q⁰δG − ½F∫Ψ⁺δG = 0
    sys.add("Psi+", "Q+", &b.tp_g_m, c(-1.0))?;
    sys.add("Psi+", "q0", &b.p0_g_trialdx, c(0.5 * b1))?;
    sys.add("Psi+", "q0", &b.p0_g_m, c(inv_eps))?;
    sys.add("Psi+", "Psi+", &b.g_g_m, c(-0.5 * f))?;

    // δG⁻: ∫Q⁻δG + ½B₁∫q⁰'δG − (1/ε₀)∫q⁰δG − ½F∫Ψ⁺δG = 0
    sys.add("Psi-", "Q-", &b.tm_g_m, c(1.0))?;
    sys.add("Psi-", "q0", &b.p0_g_trialdx, c(0.5 * b1))?;
    sys.add("Psi-", "q0", &b.p0_g_m, c(-inv_eps))?;
    sys.add("Psi-", "Psi+", &b.g_g_m, c(-0.5 * f))?;

    // ∂/∂P⁻ of c·∫|P⁻|² is c·M·conj(P⁻)
    let range = sys.layout.range("Q-");
    for (tag, weight) in objective.source_terms()? {
        let m = outlet_mass(state, tag)?;
        let conj: Vec<Complex64> = state.p_minus.iter().map(|p| p.conj()).collect();
        let g = m.matvec(&conj);
        for (i, v) in g.into_iter().enumerate() {
            sys.rhs[range.start + i] -= v * weight;
        }
    }
    Ok(sys)
}

pub fn solve_macro_adjoint(state: &MacroSolution, objective: &ObjectiveSpec) -> Result<AdjointSolution> {
    let sys = assemble_adjoint_system(state, objective)?;
    let x = sys.solve()?;
    let residual = sys.relative_residual(&x);
    if !(residual < 1e-8) {
        return Err(Error::Solver(format!("adjoint residual {residual:.3e} too large")));
    }
    let get = |n: &str| x[sys.layout.range(n)].to_vec();
    Ok(AdjointSolution {
        q_plus: get("Q+"),
        q_minus: get("Q-"),
        q0: get("q0"),
        psi_plus: get("Psi+"),
        psi_minus: get("Psi-"),
        residual,
    })
}

/// vᵀ·M·u without conjugation.
fn pair(m: &Coo, v: &[Complex64], u: &[Complex64]) -> Complex64 {
    m.entries.iter().map(|&(i, j, w)| v[i] * u[j] * w).sum()
}

/// λ_A = 2Re∫p⁰'q⁰', λ_B = 2Re[½∫(G⁺+G⁻)q⁰' + ∫p⁰'Ψ⁺],
/// λ_K = 2Re[−ω²∫p⁰q⁰], λ_F = 2Re[−½∫(G⁺+G⁻)Ψ⁺].
pub fn lagrange_multipliers(state: &MacroSolution, adj: &AdjointSolution) -> Multipliers {
    let b = &*state.blocks;
    let w2 = state.cfg.omega * state.cfg.omega;
    let g_sum: Vec<Complex64> = state.g_plus.iter().zip(&state.g_minus).map(|(a, b)| a + b).collect();
    let a = pair(&b.p0_p0_dd, &adj.q0, &state.p0);
    let bb = pair(&b.g_p0_testdx, &adj.q0, &g_sum) * 0.5 + pair(&b.p0_g_trialdx, &adj.psi_plus, &state.p0);
    let k = pair(&b.p0_p0_m, &adj.q0, &state.p0) * -w2;
    let f = pair(&b.g_g_m, &adj.psi_plus, &g_sum) * -0.5;
    Multipliers { lambda_a11: 2.0 * a.re, lambda_b1: 2.0 * bb.re, lambda_kinv: 2.0 * k.re, lambda_f: 2.0 * f.re }
}
