//! The local interpolation operator `I = (I₁, I₂)` and macro-mesh
//! postprocessing.
//!
//! On every cell `I v` matches `v` at both endpoints and has the same
//! moments against `P_{q−2}`. `I₁` maps into the `u`-space and `I₂` into the
//! `w`-space of a [`DiscreteSpace`]; they differ only in which endpoint
//! values are eliminated.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::fem::{DiscreteSpace, PairField, SLIVER_TOL};
use crate::mesh::Mesh1D;
use crate::quadrature::{legendre, merge_breakpoints, GaussRule, LagrangeBasis};
use crate::{Error, Result};

/// Sub-panels per cell used for the moments of general functions.
pub const MOMENT_PANELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    U,
    W,
}

/// Shifted Legendre polynomial `P_k(2s − 1)` on `[0, 1]`.
fn shifted_legendre(k: usize, s: f64) -> f64 {
    legendre(k, 2.0 * s - 1.0).0
}

/// Reference-cell data for degree `q`.
#[derive(Debug, Clone)]
pub struct Interpolator {
    q: usize,
    basis: LagrangeBasis,
    rule: GaussRule,
    /// Inverse of `M_{kj} = ∫ P_k φ_j`, `k ≤ q−2`, `j` interior.
    m_inv: DMatrix<f64>,
    /// `∫ P_k φ_0` and `∫ P_k φ_q`.
    m_end: [Vec<f64>; 2],
}

impl Interpolator {
    pub fn new(q: usize) -> Self {
        let basis = LagrangeBasis::new(q);
        let rule = GaussRule::new(q + 6);
        let nm = q.saturating_sub(1);
        let exact = GaussRule::new(q + 1);
        let mut m = DMatrix::zeros(nm, nm);
        let mut m_end = [vec![0.0; nm], vec![0.0; nm]];
        let mut v = vec![0.0; q + 1];
        for (&s, &w) in exact.points.iter().zip(&exact.weights) {
            basis.values(s, &mut v);
            for k in 0..nm {
                let p = w * shifted_legendre(k, s);
                for j in 0..nm {
                    m[(k, j)] += p * v[j + 1];
                }
                m_end[0][k] += p * v[0];
                m_end[1][k] += p * v[q];
            }
        }
        let m_inv = m.try_inverse().expect("moment matrix of a nodal basis is regular");
        Interpolator {
            q,
            basis,
            rule,
            m_inv,
            m_end,
        }
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    /// Local nodal coefficients from endpoint values and the moments
    /// `∫₀¹ P_k(s) v(a + hs) ds`, `k ≤ q − 2`.
    pub fn local_coefficients(&self, va: f64, vb: f64, moments: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut c = vec![0.0; q + 1];
        c[0] = va;
        c[q] = vb;
        if q >= 2 {
            let rhs = DVector::from_iterator(
                q - 1,
                (0..q - 1).map(|k| moments[k] - va * self.m_end[0][k] - vb * self.m_end[1][k]),
            );
            let inner = &self.m_inv * rhs;
            c[1..q].copy_from_slice(inner.as_slice());
        }
        c
    }

    /// Moments of `v` on `[a, b]` by composite Gauss on the given reference
    /// breakpoints of `[0, 1]`.
    fn moments(&self, a: f64, b: f64, breaks: &[f64], v: &mut dyn FnMut(f64, f64) -> f64) -> Vec<f64> {
        let nm = self.q.saturating_sub(1);
        let mut out = vec![0.0; nm];
        if nm == 0 {
            return out;
        }
        let h = b - a;
        for seg in breaks.windows(2) {
            let (s0, s1) = (seg[0], seg[1]);
            let mid = 0.5 * (s0 + s1);
            for (&t, &w) in self.rule.points.iter().zip(&self.rule.weights) {
                let s = s0 + (s1 - s0) * t;
                let val = w * (s1 - s0) * v(a + h * s, a + h * mid);
                for (k, o) in out.iter_mut().enumerate() {
                    *o += val * shifted_legendre(k, s);
                }
            }
        }
        out
    }

    fn uniform_panels() -> Vec<f64> {
        (0..=MOMENT_PANELS).map(|i| i as f64 / MOMENT_PANELS as f64).collect()
    }

    /// Interpolates `v` into the continuous piecewise `P_q` space on `mesh`,
    /// returning the nodal values at the `qN + 1` global nodes.
    pub fn interpolate_on_mesh(&self, mesh: &Mesh1D, v: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let q = self.q;
        let mut out = vec![0.0; q * mesh.n_cells() + 1];
        let panels = Self::uniform_panels();
        for cell in 0..mesh.n_cells() {
            let (a, b) = mesh.cell(cell);
            let mom = self.moments(a, b, &panels, &mut |x, _| v(x));
            let c = self.local_coefficients(v(a), v(b), &mom);
            out[cell * q..=cell * q + q].copy_from_slice(&c);
        }
        out
    }

    /// Interpolates one component of a discrete field (of any mesh and
    /// degree) into this degree on `mesh`; moments are exact because the
    /// cells are split at the field's nodes.
    pub fn interpolate_field_on_mesh(&self, mesh: &Mesh1D, field: &PairField, comp: Component) -> Vec<f64> {
        let q = self.q;
        let fmesh = field.mesh();
        let pick = |v: crate::fem::FieldValue| if comp == Component::U { v.u } else { v.w };
        let mut out = vec![0.0; q * mesh.n_cells() + 1];
        let fnodes = fmesh.nodes();
        for cell in 0..mesh.n_cells() {
            let (a, b) = mesh.cell(cell);
            let lo = fnodes.partition_point(|&p| p <= a);
            let hi = fnodes.partition_point(|&p| p < b);
            let inside: Vec<f64> = fnodes[lo..hi].iter().map(|&p| (p - a) / (b - a)).collect();
            let breaks = merge_breakpoints(0.0, 1.0, &[&inside], SLIVER_TOL);
            let mut last_mid = f64::NAN;
            let mut fcell = 0;
            let mom = self.moments(a, b, &breaks, &mut |x, mid| {
                if mid != last_mid {
                    last_mid = mid;
                    fcell = fmesh.locate(mid).expect("inside");
                }
                pick(field.eval_in_cell(fcell, x))
            });
            let va = pick(field.eval(a).expect("inside"));
            let vb = pick(field.eval(b).expect("inside"));
            let c = self.local_coefficients(va, vb, &mom);
            out[cell * q..=cell * q + q].copy_from_slice(&c);
        }
        out
    }
}

fn apply_elimination(space: &DiscreteSpace, u: &mut [f64], w: &mut [f64]) {
    for g in 0..space.n_nodes() {
        if space.u_dof(g).is_none() {
            u[g] = 0.0;
        }
        if space.w_dof(g).is_none() {
            w[g] = 0.0;
        }
    }
}

/// `(I₁ u, I₂ w)` for functions.
pub fn interpolate(space: &Arc<DiscreteSpace>, u: &dyn Fn(f64) -> f64, w: &dyn Fn(f64) -> f64) -> PairField {
    let ip = Interpolator::new(space.degree());
    let mut uu = ip.interpolate_on_mesh(space.mesh(), u);
    let mut ww = ip.interpolate_on_mesh(space.mesh(), w);
    apply_elimination(space, &mut uu, &mut ww);
    PairField::from_nodal(space, uu, ww).expect("consistent lengths")
}

/// One component of the interpolant, honouring that component's eliminated
/// endpoint values.
pub fn interpolate_component(space: &Arc<DiscreteSpace>, v: &dyn Fn(f64) -> f64, comp: Component) -> Vec<f64> {
    let mut vals = Interpolator::new(space.degree()).interpolate_on_mesh(space.mesh(), v);
    let last = vals.len() - 1;
    let eliminated = |g| match comp {
        Component::U => space.u_dof(g).is_none(),
        Component::W => space.w_dof(g).is_none(),
    };
    for g in [0, last] {
        if eliminated(g) {
            vals[g] = 0.0;
        }
    }
    vals
}

/// `(I₁ u, I₂ w)` of a discrete field, typically a fine reference solution.
pub fn interpolate_field(field: &PairField, space: &Arc<DiscreteSpace>) -> PairField {
    let ip = Interpolator::new(space.degree());
    let mut uu = ip.interpolate_field_on_mesh(space.mesh(), field, Component::U);
    let mut ww = ip.interpolate_field_on_mesh(space.mesh(), field, Component::W);
    apply_elimination(space, &mut uu, &mut ww);
    PairField::from_nodal(space, uu, ww).expect("consistent lengths")
}

/// `max_s (Σ|ℓ_end(s)| + ∫|K(s,t)| dt)`, the norm of the reference-cell
/// operator on `C[0,1]`.
pub fn linf_stability_constant(q: usize) -> f64 {
    let ip = Interpolator::new(q);
    let nm = q.saturating_sub(1);
    let mut v = vec![0.0; q + 1];
    let fine = GaussRule::new(40);
    let mut best: f64 = 0.0;
    for i in 0..=200 {
        let s = i as f64 / 200.0;
        ip.basis.values(s, &mut v);
        // coefficient of each moment in I v(s)
        let mut g = vec![0.0; nm];
        for (k, gk) in g.iter_mut().enumerate() {
            for j in 0..nm {
                *gk += v[j + 1] * ip.m_inv[(j, k)];
            }
        }
        let end0 = v[0] - (0..nm).map(|k| g[k] * ip.m_end[0][k]).sum::<f64>();
        let end1 = v[q] - (0..nm).map(|k| g[k] * ip.m_end[1][k]).sum::<f64>();
        let kernel = fine.integrate(0.0, 1.0, |t| {
            (0..nm).map(|k| g[k] * shifted_legendre(k, t)).sum::<f64>().abs()
        });
        best = best.max(end0.abs() + end1.abs() + kernel);
    }
    best
}

/// Largest cellwise ratio `‖(v − Iv)^{(ℓ)}‖_{L²(T)} / ‖h^{s−ℓ} v^{(s)}‖_{L²(T)}`
/// for `ℓ ∈ {0, 1}`.
pub fn local_interp_error_ratio(
    v: &dyn Fn(f64) -> f64,
    dv: &dyn Fn(f64) -> f64,
    ds: &dyn Fn(f64) -> f64,
    mesh: &Mesh1D,
    q: usize,
    ell: usize,
    s: usize,
) -> Result<f64> {
    if ell > 1 || s <= ell || s > q + 1 {
        return Err(Error::InvalidInput(format!("need ℓ ∈ {{0,1}} and ℓ < s ≤ q+1, got ℓ = {ell}, s = {s}")));
    }
    let ip = Interpolator::new(q);
    let vals = ip.interpolate_on_mesh(mesh, v);
    let rule = GaussRule::new(q + 6);
    let mut phi = vec![0.0; q + 1];
    let mut dphi = vec![0.0; q + 1];
    let mut worst: f64 = 0.0;
    for cell in 0..mesh.n_cells() {
        let (a, b) = mesh.cell(cell);
        let h = b - a;
        let c = &vals[cell * q..=cell * q + q];
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (&t, &w) in rule.points.iter().zip(&rule.weights) {
            let x = a + h * t;
            ip.basis.values(t, &mut phi);
            ip.basis.derivatives(t, &mut dphi);
            let e = if ell == 0 {
                v(x) - c.iter().zip(&phi).map(|(ci, p)| ci * p).sum::<f64>()
            } else {
                dv(x) - c.iter().zip(&dphi).map(|(ci, p)| ci * p).sum::<f64>() / h
            };
            lhs += w * h * e * e;
            let r = h.powi((s - ell) as i32) * ds(x);
            rhs += w * h * r * r;
        }
        if rhs > 0.0 {
            worst = worst.max((lhs / rhs).sqrt());
        } else if lhs > 1e-28 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(worst)
}

/// Macro-mesh postprocessing: on each pair of cells `(2i, 2i+1)` the field is
/// replaced by the polynomial of degree `q + 1` that matches it at the three
/// nodes of the pair and fits its moments against `P_{q−2}` on both cells in
/// the least-squares sense. Matching the moments over the whole pair instead
/// is not unisolvent for even `q` on symmetric pairs. The result lives on the
/// pair-coarsened mesh.
pub fn postprocess(field: &PairField) -> Result<PairField> {
    let space = field.space();
    let q = space.degree();
    let mesh = space.mesh();
    let coarse = mesh.pair_coarsened()?;
    let target = DiscreteSpace::new(coarse, q + 1, space.bc())?;
    let qt = q + 1;
    let nc = qt + 1;
    let basis = LagrangeBasis::new(qt);
    let rule = GaussRule::new(q + 3);
    let nm = q.saturating_sub(1);
    let mut u = vec![0.0; target.n_nodes()];
    let mut w = vec![0.0; target.n_nodes()];
    let mut v = vec![0.0; nc];
    for mc in 0..target.mesh().n_cells() {
        let (x0, xm, x1) = (mesh.nodes()[2 * mc], mesh.nodes()[2 * mc + 1], mesh.nodes()[2 * mc + 2]);
        let hm = x1 - x0;
        // KKT system: normal equations of the moment rows, nodal rows as constraints
        let mut kkt = DMatrix::zeros(nc + 3, nc + 3);
        let mut rhs = DMatrix::zeros(nc + 3, 2);
        basis.values((xm - x0) / hm, &mut v);
        let constraint_rows = [(0usize, None), (1, None), (2, Some(v.clone()))];
        let vals = |x: f64, cell: usize| field.eval_in_cell(cell, x);
        let ends = [vals(x0, 2 * mc), vals(x1, 2 * mc + 1), vals(xm, 2 * mc)];
        for (r, coeffs) in constraint_rows {
            match coeffs {
                None => {
                    let j = if r == 0 { 0 } else { qt };
                    kkt[(nc + r, j)] = 1.0;
                    kkt[(j, nc + r)] = 1.0;
                }
                Some(c) => {
                    for j in 0..nc {
                        kkt[(nc + r, j)] = c[j];
                        kkt[(j, nc + r)] = c[j];
                    }
                }
            }
            rhs[(nc + r, 0)] = ends[r].u;
            rhs[(nc + r, 1)] = ends[r].w;
        }
        for sub in 0..2 {
            let (a0, a1) = mesh.cell(2 * mc + sub);
            for k in 0..nm {
                let mut row = vec![0.0; nc];
                let (mut gu, mut gw) = (0.0, 0.0);
                for (&t, &wt) in rule.points.iter().zip(&rule.weights) {
                    let x = a0 + (a1 - a0) * t;
                    basis.values((x - x0) / hm, &mut v);
                    let fv = field.eval_in_cell(2 * mc + sub, x);
                    let p = wt * shifted_legendre(k, t);
                    for j in 0..nc {
                        row[j] += p * v[j];
                    }
                    gu += p * fv.u;
                    gw += p * fv.w;
                }
                for i in 0..nc {
                    for j in 0..nc {
                        kkt[(i, j)] += row[i] * row[j];
                    }
                    rhs[(i, 0)] += row[i] * gu;
                    rhs[(i, 1)] += row[i] * gw;
                }
            }
        }
        let sol = kkt
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("macro interpolation system".into()))?;
        for j in 0..nc {
            u[mc * qt + j] = sol[(j, 0)];
            w[mc * qt + j] = sol[(j, 1)];
        }
    }
    apply_elimination(&target, &mut u, &mut w);
    PairField::from_nodal(&target, u, w)
}
