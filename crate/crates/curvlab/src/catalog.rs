//! Registry of verification tasks.

use curvlab_core::conformal::VariationKind;
use curvlab_core::curvature::identities as id;
use curvlab_core::curvature::{CurvatureState, Scalar};
use curvlab_core::Result;

/// A pointwise residual evaluated on a curvature state.
pub type PointCheck = fn(&CurvatureState) -> Result<f64>;

/// How a task is executed.
#[derive(Debug, Clone, Copy)]
pub enum TaskKind {
    /// Residual at every sample point from a state of the task's jet order.
    Pointwise(PointCheck),
    /// Relative conformal Killing residual of the configured field.
    Ckv,
    /// Conformal variation law along `e^{2tη}g`.
    Variation(VariationKind),
    /// Pointwise `L_X G_2r` chain for a conformal Killing field.
    CkvChain(usize),
    /// Pointwise `v^(6)` identity for a conformal Killing field.
    V6Ckv,
    /// `|∫⟨X, ∇Q⟩| / ∫|⟨X, ∇Q⟩|` over the ladder.
    KazdanWarner(Scalar),
    /// `F(g)` versus `F(e^{2η}g)` for `n = 6`.
    Invariance,
}

#[derive(Debug, Clone, Copy)]
pub struct TaskSpec {
    pub name: &'static str,
    /// The statement under test.
    pub cite: &'static str,
    /// Metric jet order the task needs.
    pub min_order: usize,
    /// Default tolerance on the task's residual.
    pub tol: f64,
    pub kind: TaskKind,
}

fn p_divergence_1(s: &CurvatureState) -> Result<f64> {
    id::p_divergence(s, 1)
}
fn p_divergence_2(s: &CurvatureState) -> Result<f64> {
    id::p_divergence(s, 2)
}
fn p_divergence_3(s: &CurvatureState) -> Result<f64> {
    id::p_divergence(s, 3)
}
fn p_trace_1(s: &CurvatureState) -> Result<f64> {
    id::p_trace(s, 1)
}
fn p_trace_2(s: &CurvatureState) -> Result<f64> {
    id::p_trace(s, 2)
}
fn gauss_bonnet_lcf_2(s: &CurvatureState) -> Result<f64> {
    id::gauss_bonnet_lcf(s, 2)
}

const fn point(name: &'static str, cite: &'static str, min_order: usize, tol: f64, f: PointCheck) -> TaskSpec {
    TaskSpec {
        name,
        cite,
        min_order,
        tol,
        kind: TaskKind::Pointwise(f),
    }
}

const fn task(name: &'static str, cite: &'static str, min_order: usize, tol: f64, kind: TaskKind) -> TaskSpec {
    TaskSpec {
        name,
        cite,
        min_order,
        tol,
        kind,
    }
}

static CATALOG: [TaskSpec; 44] = [
    point("space_form", "unit round S^n: R = n(n-1), A = g/2, W = C = B = 0, sigma_k = C(n,k)/2^k, G_2r and v^(6) closed forms", 4, 1e-9, crate::runner::space_form_residual),
    point("decomposition", "Rm = W + A (Kulkarni-Nomizu) g", 2, 1e-10, id::decomposition),
    point("riemann_symmetries", "Riemann pair symmetries and the first Bianchi identity", 2, 1e-10, id::riemann_symmetries),
    point("bianchi", "second Bianchi identity R_ijkl,m + R_ijlm,k + R_ijmk,l = 0", 3, 1e-9, id::second_bianchi),
    point("schouten_reconstruction", "Ric = (n-2) A + (tr A) g", 2, 1e-10, id::schouten_reconstruction),
    point("weyl_traces", "the Weyl tensor is totally trace-free", 2, 1e-9, id::weyl_traces),
    point("newton_contraction", "k sigma_k = T^(k-1)_ij A_ij", 2, 1e-8, id::newton_contraction),
    point("newton_trace", "tr T^(k) = (n-k) sigma_k", 2, 1e-8, id::newton_trace),
    point("weyl_divergence", "div W = -(n-3) C", 3, 1e-8, id::weyl_divergence_cotton),
    point("cotton_traces", "the Cotton tensor is trace-free", 3, 1e-9, id::cotton_traces),
    point("cotton_divergence", "sum_i C_ijk,i = 0", 4, 1e-9, id::cotton_divergence),
    point("schouten_bianchi", "sum_i A_ii,j = sum_i A_ij,i (second Bianchi identity)", 3, 1e-9, id::schouten_bianchi),
    point("newton_divergence", "div T^(2) = -A^kl C_kli", 3, 1e-7, id::newton_divergence),
    point("bach_divergence", "div B = (n-4) A^kl C_kli", 5, 1e-7, id::bach_divergence),
    point("bach_symmetry", "B is symmetric and trace-free", 4, 1e-8, id::bach_symmetry),
    point("p_divergence_r1", "P_1 is divergence free", 3, 1e-7, p_divergence_1),
    point("p_divergence_r2", "P_2 is divergence free", 3, 1e-7, p_divergence_2),
    point("p_divergence_r3", "P_3 is divergence free", 3, 1e-7, p_divergence_3),
    point("p_trace_r1", "tr P_1 = (n-2) G_2", 2, 1e-9, p_trace_1),
    point("p_trace_r2", "tr P_2 = (n-4) G_4", 2, 1e-9, p_trace_2),
    point("g2_scalar", "G_2 = 2R", 2, 1e-10, id::g2_scalar),
    point("lcf_gauss_bonnet", "locally conformally flat: G_4 = 32 (n-2)(n-3) sigma_2", 2, 1e-8, gauss_bonnet_lcf_2),
    point("lcf_v6", "locally conformally flat: v^(6) = -sigma_3/8", 4, 1e-8, id::v6_lcf),
    task("ckv", "X is conformal Killing: L_X g = (2 div X / n) g", 1, 1e-8, TaskKind::Ckv),
    task("schouten_dot", "d/dt (g_t^-1 A(g_t)) = -g^-1 Hess(eta) - 2 eta g^-1 A", 2, 1e-6, TaskKind::Variation(VariationKind::SchoutenDot)),
    task("div_dot", "d/dt div_{g_t} X = n <X, grad eta>", 1, 1e-6, TaskKind::Variation(VariationKind::DivDot)),
    task("riemann_conf", "R(e^{2t eta} g)^ij_kl = e^{-2t eta} (R - alpha (Kulkarni-Nomizu) g)^ij_kl at finite t", 2, 1e-9, TaskKind::Variation(VariationKind::RiemannConf)),
    task("bach_dot", "d/dt B_ij = (n-4)(C_ijk + C_jik) grad^k eta - 2 eta B_ij", 4, 1e-6, TaskKind::Variation(VariationKind::BachDot)),
    task("v6_variation", "d/dt v^(6) = -6 eta v^(6) + div[(T^(2)/8 + B/(24(n-4))) grad eta]", 5, 1e-6, TaskKind::Variation(VariationKind::V6Variation)),
    task("g2r_variation_r1", "d/dt G_2 = -2 eta G_2 - 4(n-1) P_0 . Hess(eta)", 2, 1e-6, TaskKind::Variation(VariationKind::G2rVariation(1))),
    task("g2r_variation_r2", "d/dt G_4 = -4 eta G_4 - 8(n-3) P_1 . Hess(eta)", 2, 1e-6, TaskKind::Variation(VariationKind::G2rVariation(2))),
    task("g2r_ckv_chain_r1", "L_X G_2 + 2 (div X/n) G_2 + (4(n-1)/n) div(P_0 grad div X) = 0", 3, 1e-6, TaskKind::CkvChain(1)),
    task("g2r_ckv_chain_r2", "L_X G_4 + 4 (div X/n) G_4 + (8(n-3)/n) div(P_1 grad div X) = 0", 3, 1e-6, TaskKind::CkvChain(2)),
    task("g2r_ckv_chain_r3", "L_X G_6 + 6 (div X/n) G_6 + (12(n-5)/n) div(P_2 grad div X) = 0", 3, 1e-6, TaskKind::CkvChain(3)),
    task("v6_ckv_identity", "(1-6/n)<X, grad v^(6)> + (6/n) div(v^(6) X) - (1/n) div(M grad div X) = 0", 5, 1e-6, TaskKind::V6Ckv),
    task("kw_sigma1", "Kazdan-Warner: int <X, grad sigma_1> dv = 0", 3, 1e-7, TaskKind::KazdanWarner(Scalar::Sigma(1))),
    task("kw_sigma2", "Kazdan-Warner: int <X, grad sigma_2> dv = 0", 3, 1e-7, TaskKind::KazdanWarner(Scalar::Sigma(2))),
    task("kw_sigma3", "Kazdan-Warner: int <X, grad sigma_3> dv = 0", 3, 1e-7, TaskKind::KazdanWarner(Scalar::Sigma(3))),
    task("kw_v4", "Kazdan-Warner: int <X, grad v^(4)> dv = 0", 3, 1e-7, TaskKind::KazdanWarner(Scalar::V(2))),
    task("kw_v6", "Kazdan-Warner: int <X, grad v^(6)> dv = 0", 5, 1e-7, TaskKind::KazdanWarner(Scalar::V(3))),
    task("kw_g2", "Kazdan-Warner: int L_X G_2 dv = 0", 3, 1e-7, TaskKind::KazdanWarner(Scalar::GaussBonnet(1))),
    task("kw_g4", "Kazdan-Warner: int L_X G_4 dv = 0", 3, 1e-7, TaskKind::KazdanWarner(Scalar::GaussBonnet(2))),
    task("kw_g6", "Kazdan-Warner: int L_X G_6 dv = 0", 3, 1e-7, TaskKind::KazdanWarner(Scalar::GaussBonnet(3))),
    task("invariance_functional", "n = 6: int div X v^(6) dv is the same for every metric in the conformal class", 4, 1e-4, TaskKind::Invariance),
];

/// Every registered task, in catalog order.
pub fn catalog() -> &'static [TaskSpec] {
    &CATALOG
}

pub fn lookup(name: &str) -> Option<&'static TaskSpec> {
    CATALOG.iter().find(|t| t.name == name)
}

/// One line per task: name, statement, minimal jet order and default tolerance.
pub fn listing() -> String {
    let width = CATALOG.iter().map(|t| t.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for t in &CATALOG {
        out.push_str(&format!(
            "{:width$} → {} [jet order {}, tol {:e}]\n",
            t.name, t.cite, t.min_order, t.tol
        ));
    }
    out
}
