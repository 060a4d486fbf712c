//! Discrete spaces, assembly of the mixed form and the linear solve.
//!
//! The unknowns are the nodal values of `u_h` and `w_h` at the global
//! Gauss–Lobatto nodes, interleaved as `(u_g, w_g)` and numbered left to
//! right. Endpoint values of `u_h` are eliminated, and for `m = 2` also those
//! of `w_h`. With this numbering the matrix splits into a left block, the two
//! unknowns at `x = 1` and a right block; the shift term only couples rows of
//! the right part to columns of the left part, so both diagonal blocks are
//! banded and the system is solved by block elimination.

use std::io::Write;
use std::sync::Arc;

use crate::banded::{BandLu, BandMatrix};
use crate::mesh::Mesh1D;
use crate::problem::{BcOrder, ProblemSpec};
use crate::quadrature::{merge_breakpoints, GaussRule, LagrangeBasis};
use crate::{Error, Result};

/// Relative gap below which neighbouring breakpoints are merged.
pub(crate) const SLIVER_TOL: f64 = 1e-12;

#[derive(Debug)]
pub struct DiscreteSpace {
    mesh: Arc<Mesh1D>,
    q: usize,
    m: BcOrder,
    basis: LagrangeBasis,
    u_dof: Vec<Option<usize>>,
    w_dof: Vec<Option<usize>>,
    n_dofs: usize,
    n_left: usize,
}

impl DiscreteSpace {
    pub fn new(mesh: impl Into<Arc<Mesh1D>>, q: usize, m: BcOrder) -> Result<Arc<Self>> {
        if q == 0 {
            return Err(Error::InvalidInput("polynomial degree must be at least 1".into()));
        }
        let mesh = mesh.into();
        let ng = q * mesh.n_cells() + 1;
        let gmid = q * mesh.midpoint_index();
        let mut u_dof = vec![None; ng];
        let mut w_dof = vec![None; ng];
        let mut next = 0;
        let mut n_left = 0;
        for g in 0..ng {
            if g == gmid {
                n_left = next;
            }
            let end = g == 0 || g == ng - 1;
            if !end {
                u_dof[g] = Some(next);
                next += 1;
            }
            if !(end && m == BcOrder::Two) {
                w_dof[g] = Some(next);
                next += 1;
            }
        }
        Ok(Arc::new(DiscreteSpace {
            mesh,
            q,
            m,
            basis: LagrangeBasis::new(q),
            u_dof,
            w_dof,
            n_dofs: next,
            n_left,
        }))
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<Mesh1D> {
        self.mesh.clone()
    }

    pub fn degree(&self) -> usize {
        self.q
    }

    pub fn bc(&self) -> BcOrder {
        self.m
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    /// Global nodes per component, `qN + 1`.
    pub fn n_nodes(&self) -> usize {
        self.u_dof.len()
    }

    /// Number of unknowns after elimination.
    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn u_dof(&self, g: usize) -> Option<usize> {
        self.u_dof[g]
    }

    pub fn w_dof(&self, g: usize) -> Option<usize> {
        self.w_dof[g]
    }

    /// Global index of local node `a` of cell `i`.
    #[inline]
    pub fn global(&self, cell: usize, a: usize) -> usize {
        cell * self.q + a
    }

    pub fn node_x(&self, g: usize) -> f64 {
        let (cell, a) = if g == self.n_nodes() - 1 {
            (self.mesh.n_cells() - 1, self.q)
        } else {
            (g / self.q, g % self.q)
        };
        let (x0, x1) = self.mesh.cell(cell);
        if a == 0 {
            x0
        } else if a == self.q {
            x1
        } else {
            x0 + (x1 - x0) * self.basis.nodes()[a]
        }
    }

    pub fn same_as(&self, other: &DiscreteSpace) -> bool {
        std::ptr::eq(self, other) || (self.q == other.q && self.m == other.m && self.mesh.nodes() == other.mesh.nodes())
    }
}

/// Nodal values of `(u_h, w_h)` at every global node of a space; eliminated
/// values are stored as zeros.
#[derive(Debug, Clone)]
pub struct PairField {
    space: Arc<DiscreteSpace>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

/// Values of both components and their first derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldValue {
    pub u: f64,
    pub du: f64,
    pub w: f64,
    pub dw: f64,
}

impl PairField {
    pub fn zeros(space: &Arc<DiscreteSpace>) -> Self {
        let n = space.n_nodes();
        PairField {
            space: space.clone(),
            u: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    /// Builds a field from full nodal vectors. Values at eliminated nodes
    /// must vanish.
    pub fn from_nodal(space: &Arc<DiscreteSpace>, u: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = space.n_nodes();
        if u.len() != n || w.len() != n {
            return Err(Error::SpaceMismatch(format!("expected {n} nodal values per component")));
        }
        let field = PairField { space: space.clone(), u, w };
        for g in 0..n {
            let scale = 1e-12 * (1.0 + field.u[g].abs().max(field.w[g].abs()));
            if (space.u_dof[g].is_none() && field.u[g].abs() > scale)
                || (space.w_dof[g].is_none() && field.w[g].abs() > scale)
            {
                return Err(Error::SpaceMismatch(format!("nonzero value at eliminated node {g}")));
            }
        }
        Ok(field)
    }

    /// Interpolates `(u, w)` at the nodes; eliminated values are set to 0.
    pub fn from_fns(space: &Arc<DiscreteSpace>, u: impl Fn(f64) -> f64, w: impl Fn(f64) -> f64) -> Self {
        let mut field = PairField::zeros(space);
        for g in 0..space.n_nodes() {
            let x = space.node_x(g);
            if space.u_dof[g].is_some() {
                field.u[g] = u(x);
            }
            if space.w_dof[g].is_some() {
                field.w[g] = w(x);
            }
        }
        field
    }

    pub fn from_reduced(space: &Arc<DiscreteSpace>, x: &[f64]) -> Result<Self> {
        if x.len() != space.n_dofs() {
            return Err(Error::SpaceMismatch(format!(
                "vector of length {} for a space with {} unknowns",
                x.len(),
                space.n_dofs()
            )));
        }
        let mut field = PairField::zeros(space);
        for g in 0..space.n_nodes() {
            if let Some(k) = space.u_dof[g] {
                field.u[g] = x[k];
            }
            if let Some(k) = space.w_dof[g] {
                field.w[g] = x[k];
            }
        }
        Ok(field)
    }

    pub fn to_reduced(&self) -> Vec<f64> {
        let s = &self.space;
        let mut x = vec![0.0; s.n_dofs()];
        for g in 0..s.n_nodes() {
            if let Some(k) = s.u_dof[g] {
                x[k] = self.u[g];
            }
            if let Some(k) = s.w_dof[g] {
                x[k] = self.w[g];
            }
        }
        x
    }

    pub fn space(&self) -> &Arc<DiscreteSpace> {
        &self.space
    }

    pub fn mesh(&self) -> &Mesh1D {
        self.space.mesh()
    }

    pub fn degree(&self) -> usize {
        self.space.q
    }

    /// `a·self + b·other`, both in the same space.
    pub fn combine(&self, a: f64, other: &PairField, b: f64) -> Result<PairField> {
        if !self.space.same_as(&other.space) {
            return Err(Error::SpaceMismatch("fields live in different spaces".into()));
        }
        let lin = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, r)| a * p + b * r).collect();
        Ok(PairField {
            space: self.space.clone(),
            u: lin(&self.u, &other.u),
            w: lin(&self.w, &other.w),
        })
    }

    pub fn scaled(&self, t: f64) -> PairField {
        PairField {
            space: self.space.clone(),
            u: self.u.iter().map(|v| t * v).collect(),
            w: self.w.iter().map(|v| t * v).collect(),
        }
    }

    /// Evaluates both components on `cell` at the physical point `x`.
    pub fn eval_in_cell(&self, cell: usize, x: f64) -> FieldValue {
        let (x0, x1) = self.space.mesh.cell(cell);
        self.eval_local(cell, (x - x0) / (x1 - x0), x1 - x0)
    }

    /// Evaluates on `cell` at the reference coordinate `s ∈ [0,1]`.
    pub fn eval_local(&self, cell: usize, s: f64, h: f64) -> FieldValue {
        let n = self.space.q + 1;
        let mut v = [0.0; 16];
        let mut d = [0.0; 16];
        self.space.basis.values(s, &mut v[..n]);
        self.space.basis.derivatives(s, &mut d[..n]);
        let base = cell * self.space.q;
        let mut out = FieldValue::default();
        for a in 0..n {
            let (uu, ww) = (self.u[base + a], self.w[base + a]);
            out.u += uu * v[a];
            out.w += ww * v[a];
            out.du += uu * d[a];
            out.dw += ww * d[a];
        }
        out.du /= h;
        out.dw /= h;
        out
    }

    /// Value and first derivative at `x`; at interior nodes the cell to the
    /// left is used.
    pub fn eval(&self, x: f64) -> Result<FieldValue> {
        let cell = self.space.mesh.locate(x)?;
        Ok(self.eval_in_cell(cell, x))
    }

    /// `(u, w)` if `deriv == 0`, `(u′, w′)` if `deriv == 1`.
    pub fn eval_field(&self, x: f64, deriv: usize) -> Result<(f64, f64)> {
        let v = self.eval(x)?;
        match deriv {
            0 => Ok((v.u, v.w)),
            1 => Ok((v.du, v.dw)),
            _ => Err(Error::InvalidInput(format!("derivative order {deriv} not available"))),
        }
    }

    /// Writes `x,u,u′,w,w′` rows for each sample point.
    pub fn write_csv(&self, xs: &[f64], mut out: impl Write) -> Result<()> {
        writeln!(out, "x,u,du,w,dw")?;
        for &x in xs {
            let v = self.eval(x)?;
            writeln!(out, "{:.5e},{:.5e},{:.5e},{:.5e},{:.5e}", x, v.u, v.du, v.w, v.dw)?;
        }
        Ok(())
    }
}

/// Sample grid: every mesh node plus `per_cell − 1` equispaced interior
/// points per cell.
pub fn sample_points(mesh: &Mesh1D, per_cell: usize) -> Vec<f64> {
    let per_cell = per_cell.max(1);
    let mut xs = Vec::with_capacity(mesh.n_cells() * per_cell + 1);
    for i in 0..mesh.n_cells() {
        let (a, b) = mesh.cell(i);
        for k in 0..per_cell {
            xs.push(a + (b - a) * k as f64 / per_cell as f64);
        }
    }
    xs.push(2.0);
    xs
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|e| e.1.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `yᵀ A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        (0..self.n).map(|i| y[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub space: Arc<DiscreteSpace>,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `B(trial, test)` through the assembled matrix.
    pub fn bilinear(&self, trial: &PairField, test: &PairField) -> Result<f64> {
        if !self.space.same_as(&trial.space) || !self.space.same_as(&test.space) {
            return Err(Error::SpaceMismatch("field not in the system's space".into()));
        }
        Ok(self.matrix.bilinear(&test.to_reduced(), &trial.to_reduced()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssembleOptions {
    /// Gauss points per cell; default `q + 3`.
    pub quad_points: Option<usize>,
    /// Assemble `⟨d u(·−1), y⟩` on `(1, 2)`.
    pub include_shift: bool,
    /// Replaces the problem's ε; `Some(0.0)` gives the reduced problem.
    pub epsilon: Option<f64>,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions {
            quad_points: None,
            include_shift: true,
            epsilon: None,
        }
    }
}

pub fn assemble(spec: &ProblemSpec, space: &Arc<DiscreteSpace>) -> Result<AssembledSystem> {
    assemble_with(spec, space, AssembleOptions::default())
}

pub fn assemble_with(spec: &ProblemSpec, space: &Arc<DiscreteSpace>, opts: AssembleOptions) -> Result<AssembledSystem> {
    if spec.m != space.m {
        return Err(Error::SpaceMismatch(format!(
            "problem has m = {} but the space was built for m = {}",
            spec.m.as_int(),
            space.m.as_int()
        )));
    }
    let eps = opts.epsilon.unwrap_or(spec.epsilon);
    let q = space.q;
    let nb = q + 1;
    let mesh = space.mesh();
    let rule = GaussRule::new(opts.quad_points.unwrap_or(q + 3));
    let (phi, dphi) = space.basis.tabulate(&rule.points);
    let n = space.n_dofs();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(4 * nb); n];
    let mut rhs = vec![0.0; n];

    let mut ke = vec![0.0; 4 * nb * nb];
    let mut fe = vec![0.0; nb];
    for cell in 0..mesh.n_cells() {
        let (x0, x1) = mesh.cell(cell);
        let h = x1 - x0;
        ke.iter_mut().for_each(|v| *v = 0.0);
        fe.iter_mut().for_each(|v| *v = 0.0);
        // ke layout: [uu | uw | wu | ww] blocks, each nb × nb, row = test
        for (k, (&s, &wq)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let x = x0 + h * s;
            let jw = wq * h;
            let b = spec.b.eval(x);
            let db = spec.b_prime_at(x);
            let c = spec.c.eval(x);
            let f = spec.f.eval(x);
            let hist = if x < 1.0 { spec.d.eval(x) * spec.history(x - 1.0)? } else { 0.0 };
            let v = &phi[k * nb..(k + 1) * nb];
            let d = &dphi[k * nb..(k + 1) * nb];
            for a in 0..nb {
                let (va, da) = (v[a], d[a] / h);
                fe[a] += jw * (f - hist) * va;
                for bb in 0..nb {
                    let (vb, dbb) = (v[bb], d[bb] / h);
                    let stiff = jw * da * dbb;
                    ke[a * nb + bb] += jw * (b * dbb * da + db * dbb * va + c * vb * va);
                    ke[nb * nb + a * nb + bb] -= eps * stiff;
                    ke[2 * nb * nb + a * nb + bb] += eps * stiff;
                    ke[3 * nb * nb + a * nb + bb] += jw * vb * va;
                }
            }
        }
        for a in 0..nb {
            let ga = space.global(cell, a);
            for bb in 0..nb {
                let gb = space.global(cell, bb);
                let blocks = [
                    (space.u_dof[ga], space.u_dof[gb]),
                    (space.u_dof[ga], space.w_dof[gb]),
                    (space.w_dof[ga], space.u_dof[gb]),
                    (space.w_dof[ga], space.w_dof[gb]),
                ];
                for (blk, (r, c)) in blocks.into_iter().enumerate() {
                    if let (Some(r), Some(c)) = (r, c) {
                        rows[r].push((c, ke[blk * nb * nb + a * nb + bb]));
                    }
                }
            }
            if let Some(r) = space.u_dof[ga] {
                rhs[r] += fe[a];
            }
        }
    }

    if opts.include_shift {
        assemble_shift(spec, space, &rule, &mut rows);
    }
    Ok(AssembledSystem {
        space: space.clone(),
        matrix: CsrMatrix::from_rows(rows),
        rhs,
    })
}

/// `⟨d u(·−1), y⟩_(1,2)`: each right cell is split at the images of the
/// left nodes inside it, and the work is done in the shifted coordinate
/// `t = x − 1`, where node values `X − 1` are exact for `X ∈ [1, 2]`.
fn assemble_shift(spec: &ProblemSpec, space: &DiscreteSpace, rule: &GaussRule, rows: &mut [Vec<(usize, f64)>]) {
    let mesh = space.mesh();
    let nodes = mesh.nodes();
    let mid = mesh.midpoint_index();
    let left = &nodes[..=mid];
    let nb = space.q + 1;
    let mut vr = vec![0.0; nb];
    let mut vl = vec![0.0; nb];
    for cell in mid..mesh.n_cells() {
        let a = nodes[cell] - 1.0;
        let b = nodes[cell + 1] - 1.0;
        let breaks = merge_breakpoints(a, b, &[left], SLIVER_TOL);
        for seg in breaks.windows(2) {
            let (s0, s1) = (seg[0], seg[1]);
            let lc = left.partition_point(|&p| p <= 0.5 * (s0 + s1)).saturating_sub(1).min(mid - 1);
            let (l0, l1) = (left[lc], left[lc + 1]);
            for (&s, &wq) in rule.points.iter().zip(&rule.weights) {
                let t = s0 + (s1 - s0) * s;
                let jw = wq * (s1 - s0) * spec.d.eval(t + 1.0);
                space.basis.values((t - a) / (b - a), &mut vr);
                space.basis.values((t - l0) / (l1 - l0), &mut vl);
                for i in 0..nb {
                    let Some(r) = space.u_dof[space.global(cell, i)] else { continue };
                    for j in 0..nb {
                        if let Some(c) = space.u_dof[space.global(lc, j)] {
                            rows[r].push((c, jw * vr[i] * vl[j]));
                        }
                    }
                }
            }
        }
    }
}

/// Factorization of an assembled system by block elimination.
pub struct BlockSolver<'a> {
    system: &'a AssembledSystem,
    nl: usize,
    left: BandLu,
    right: BandLu,
    /// `A_LL⁻¹ A_LI`, column-major `nl × 2`.
    q_left: [Vec<f64>; 2],
    /// `A_RR⁻¹ (A_RI − S_RL Q_L)`.
    q_right: [Vec<f64>; 2],
    schur: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub n_dofs: usize,
    /// `‖Ax − b‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)` after refinement.
    pub relative_residual: f64,
}

impl<'a> BlockSolver<'a> {
    pub fn new(system: &'a AssembledSystem) -> Result<Self> {
        let a = &system.matrix;
        let n = a.dim();
        let nl = system.space.n_left;
        let ni = 2;
        if nl + ni > n {
            return Err(Error::InvalidInput("system too small for block elimination".into()));
        }
        let nr = n - nl - ni;
        let r0 = nl + ni;
        let band = |lo: usize, len: usize| -> Result<BandLu> {
            let (mut kl, mut ku) = (0usize, 0usize);
            for i in lo..lo + len {
                for (j, _) in a.row(i).filter(|e| e.0 >= lo && e.0 < lo + len) {
                    kl = kl.max(i.saturating_sub(j));
                    ku = ku.max(j.saturating_sub(i));
                }
            }
            let mut m = BandMatrix::zeros(len, kl, ku);
            for i in lo..lo + len {
                for (j, v) in a.row(i).filter(|e| e.0 >= lo && e.0 < lo + len) {
                    m.add(i - lo, j - lo, v);
                }
            }
            m.factor()
        };
        let left = band(0, nl)?;
        let right = band(r0, nr)?;

        let mut q_left = [vec![0.0; nl], vec![0.0; nl]];
        for (i, row) in (0..nl).map(|i| (i, a.row(i))) {
            for (j, v) in row {
                if j == nl || j == nl + 1 {
                    q_left[j - nl][i] = v;
                }
            }
        }
        for col in q_left.iter_mut() {
            left.solve_in_place(col);
        }
        let mut q_right = [vec![0.0; nr], vec![0.0; nr]];
        for i in 0..nr {
            for (j, v) in a.row(r0 + i) {
                if j < nl {
                    q_right[0][i] -= v * q_left[0][j];
                    q_right[1][i] -= v * q_left[1][j];
                } else if j < r0 {
                    q_right[j - nl][i] += v;
                }
            }
        }
        for col in q_right.iter_mut() {
            right.solve_in_place(col);
        }
        let mut schur = [[0.0; 2]; 2];
        for (r, srow) in schur.iter_mut().enumerate() {
            for (j, v) in a.row(nl + r) {
                for (k, s) in srow.iter_mut().enumerate() {
                    if j < nl {
                        *s -= v * q_left[k][j];
                    } else if j < r0 {
                        if j - nl == k {
                            *s += v;
                        }
                    } else {
                        *s -= v * q_right[k][j - r0];
                    }
                }
            }
        }
        let det = schur[0][0] * schur[1][1] - schur[0][1] * schur[1][0];
        let scale = schur.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(det.abs() > 1e-300 && det.abs() > f64::EPSILON * 1e-3 * scale * scale) {
            return Err(Error::Singular(format!("interface system at x = 1 is singular (det = {det:e})")));
        }
        Ok(BlockSolver {
            system,
            nl,
            left,
            right,
            q_left,
            q_right,
            schur,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.system.matrix;
        let nl = self.nl;
        let r0 = nl + 2;
        let nr = a.dim() - r0;
        let p_left = self.left.solve(&b[..nl]);
        let mut p_right = b[r0..].to_vec();
        for (i, pr) in p_right.iter_mut().enumerate() {
            for (j, v) in a.row(r0 + i) {
                if j < nl {
                    *pr -= v * p_left[j];
                }
            }
        }
        self.right.solve_in_place(&mut p_right);
        let mut rhs = [b[nl], b[nl + 1]];
        for (r, rr) in rhs.iter_mut().enumerate() {
            for (j, v) in a.row(nl + r) {
                if j < nl {
                    *rr -= v * p_left[j];
                } else if j >= r0 {
                    *rr -= v * p_right[j - r0];
                }
            }
        }
        let s = &self.schur;
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let xi = [
            (rhs[0] * s[1][1] - s[0][1] * rhs[1]) / det,
            (s[0][0] * rhs[1] - s[1][0] * rhs[0]) / det,
        ];
        let mut x = Vec::with_capacity(a.dim());
        x.extend((0..nl).map(|i| p_left[i] - self.q_left[0][i] * xi[0] - self.q_left[1][i] * xi[1]));
        x.extend_from_slice(&xi);
        x.extend((0..nr).map(|i| p_right[i] - self.q_right[0][i] * xi[0] - self.q_right[1][i] * xi[1]));
        x
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Direct solve with one step of iterative refinement and an a-posteriori
/// residual check.
pub fn solve_with_stats(system: &AssembledSystem) -> Result<(PairField, SolveStats)> {
    let solver = BlockSolver::new(system)?;
    let a = &system.matrix;
    let b = &system.rhs;
    let mut x = solver.solve(b);
    let residual = |x: &[f64]| -> Vec<f64> { a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let r = residual(&x);
    let dx = solver.solve(&r);
    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
    let r = residual(&x);
    let denom = a.norm_inf() * norm_inf(&x) + norm_inf(b);
    let rel = if denom > 0.0 { norm_inf(&r) / denom } else { 0.0 };
    if !(rel <= 1e-10) {
        return Err(Error::Singular(format!("relative residual {rel:e} exceeds 1e-10")));
    }
    let field = PairField::from_reduced(&system.space, &x)?;
    Ok((
        field,
        SolveStats {
            n_dofs: x.len(),
            relative_residual: rel,
        },
    ))
}

pub fn solve(system: &AssembledSystem) -> Result<PairField> {
    solve_with_stats(system).map(|(f, _)| f)
}

/// Assembles and solves in one go.
pub fn solve_problem(spec: &ProblemSpec, space: &Arc<DiscreteSpace>) -> Result<PairField> {
    solve(&assemble(spec, space)?)
}

/// `B(trial, test)` by quadrature on the common refinement of both meshes,
/// independent of the assembled matrix. The fields may live on different
/// meshes and have different degrees.
pub fn bilinear_form(spec: &ProblemSpec, trial: &PairField, test: &PairField) -> f64 {
    let eps = spec.epsilon;
    let rule = GaussRule::new(trial.degree().max(test.degree()) + 3);
    let breaks = merge_breakpoints(0.0, 2.0, &[trial.mesh().nodes(), test.mesh().nodes()], SLIVER_TOL);
    let mut total = 0.0;
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mid = 0.5 * (a + b);
        let ct = trial.mesh().locate(mid).expect("inside");
        let cs = test.mesh().locate(mid).expect("inside");
        total += rule.integrate(a, b, |x| {
            let u = trial.eval_in_cell(ct, x);
            let y = test.eval_in_cell(cs, x);
            -eps * u.dw * y.du
                + spec.b.eval(x) * u.du * y.du
                + spec.b_prime_at(x) * u.du * y.u
                + spec.c.eval(x) * u.u * y.u
                + eps * u.du * y.dw
                + u.w * y.w
        });
    }
    // shift term in t = x − 1
    let tm = trial.mesh();
    let sm = test.mesh();
    let t_left = &tm.nodes()[..=tm.midpoint_index()];
    let s_right: Vec<f64> = sm.nodes()[sm.midpoint_index()..].iter().map(|x| x - 1.0).collect();
    let breaks = merge_breakpoints(0.0, 1.0, &[t_left, &s_right], SLIVER_TOL);
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mid = 0.5 * (a + b);
        let ct = tm.locate(mid).expect("inside");
        let k = s_right.partition_point(|&p| p <= mid).saturating_sub(1).min(s_right.len() - 2);
        let cs = sm.midpoint_index() + k;
        let (r0, r1) = (s_right[k], s_right[k + 1]);
        total += rule.integrate(a, b, |t| {
            let u = trial.eval_in_cell(ct, t);
            let y = test.eval_local(cs, (t - r0) / (r1 - r0), r1 - r0);
            spec.d.eval(t + 1.0) * u.u * y.u
        });
    }
    total
}

/// `B(pair1, pair2)` for two fields of the same space.
pub fn bilinear_eval(spec: &ProblemSpec, space: &Arc<DiscreteSpace>, pair1: &PairField, pair2: &PairField) -> Result<f64> {
    if !space.same_as(&pair1.space) || !space.same_as(&pair2.space) {
        return Err(Error::SpaceMismatch("fields do not belong to the given space".into()));
    }
    Ok(bilinear_form(spec, pair1, pair2))
}

/// `F(y) = ⟨f, y⟩ − ⟨dΦ(·−1), y⟩_(0,1)` by quadrature on the test mesh.
pub fn load_functional(spec: &ProblemSpec, test: &PairField) -> Result<f64> {
    let rule = GaussRule::new(test.degree() + 3);
    let mesh = test.mesh();
    let mut total = 0.0;
    for cell in 0..mesh.n_cells() {
        let (a, b) = mesh.cell(cell);
        let mut err = None;
        total += rule.integrate(a, b, |x| {
            let y = test.eval_in_cell(cell, x).u;
            let hist = if x < 1.0 {
                match spec.history(x - 1.0) {
                    Ok(p) => spec.d.eval(x) * p,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            } else {
                0.0
            };
            (spec.f.eval(x) - hist) * y
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(total)
}

/// Unit vector in the reduced numbering as a field.
pub fn basis_pair(space: &Arc<DiscreteSpace>, dof: usize) -> Result<PairField> {
    let mut x = vec![0.0; space.n_dofs()];
    *x.get_mut(dof).ok_or_else(|| Error::InvalidInput(format!("no unknown {dof}")))? = 1.0;
    PairField::from_reduced(space, &x)
}
