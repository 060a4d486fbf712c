//! Gauss rules, Gauss–Lobatto nodes and the nodal Lagrange basis on `[0, 1]`.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[0, 1]`, exact up to degree `2n − 1`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint value P_n′(±1) = (±1)^{n+1} n(n+1)/2
        let s = if x > 0.0 { 1.0 } else { (-1f64).powi(n as i32 + 1) };
        s * n * (n + 1.0) / 2.0
    } else {
        n * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map to [0,1]
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&s, &w)| w * f(a + h * s))
            .sum::<f64>()
            * h
    }
}

/// Gauss–Lobatto–Legendre nodes of degree `q` on `[0, 1]`, ascending.
pub fn gauss_lobatto_nodes(q: usize) -> Vec<f64> {
    assert!(q >= 1);
    let n = q;
    let mut nodes = vec![0.0; n + 1];
    for (j, node) in nodes.iter_mut().enumerate() {
        // Chebyshev–Gauss–Lobatto start, iterate on (1−x²)P_n′ = 0
        let mut x = -(PI * j as f64 / n as f64).cos();
        if j == 0 || j == n {
            *node = 0.5 * (1.0 + x);
            continue;
        }
        for _ in 0..100 {
            let (p, _) = legendre(n, x);
            let (pm, _) = legendre(n - 1, x);
            let dx = (x * p - pm) / ((n as f64 + 1.0) * p);
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        *node = 0.5 * (1.0 + x);
    }
    nodes
}

/// Nodal Lagrange basis of `P_q` on `[0, 1]` at the Gauss–Lobatto nodes.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(q: usize) -> Self {
        Self::with_nodes(gauss_lobatto_nodes(q))
    }

    pub fn with_nodes(nodes: Vec<f64>) -> Self {
        let bary = (0..nodes.len())
            .map(|j| {
                1.0 / nodes
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &xk)| nodes[j] - xk)
                    .product::<f64>()
            })
            .collect();
        LagrangeBasis { nodes, bary }
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Values of all basis functions at `s`.
    pub fn values(&self, s: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        for j in 0..n {
            let mut v = self.bary[j];
            for k in 0..n {
                if k != j {
                    v *= s - self.nodes[k];
                }
            }
            out[j] = v;
        }
    }

    /// First derivatives of all basis functions at `s`.
    pub fn derivatives(&self, s: f64, out: &mut [f64]) {
        let n = self.nodes.len();
        for j in 0..n {
            let mut sum = 0.0;
            for l in 0..n {
                if l == j {
                    continue;
                }
                let mut prod = self.bary[j];
                for k in 0..n {
                    if k != j && k != l {
                        prod *= s - self.nodes[k];
                    }
                }
                sum += prod;
            }
            out[j] = sum;
        }
    }

    /// Values and derivatives at every point of `rule`, row-major
    /// `[point][basis]`.
    pub fn tabulate(&self, points: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut vals = vec![0.0; points.len() * n];
        let mut ders = vec![0.0; points.len() * n];
        for (k, &s) in points.iter().enumerate() {
            self.values(s, &mut vals[k * n..(k + 1) * n]);
            self.derivatives(s, &mut ders[k * n..(k + 1) * n]);
        }
        (vals, ders)
    }
}

/// Splits `[a, b]` into panels that shrink geometrically (ratio 2) towards
/// each of the `foci` until the panel next to a focus is at most `min_width`.
/// Foci outside `[a, b]` are ignored; the returned breakpoints are sorted and
/// include `a` and `b`.
pub fn graded_breakpoints(a: f64, b: f64, foci: &[f64], min_width: f64) -> Vec<f64> {
    let mut pts = vec![a, b];
    for &p in foci {
        if p < a || p > b {
            continue;
        }
        pts.push(p);
        for dir in [-1.0, 1.0] {
            let room = if dir < 0.0 { p - a } else { b - p };
            let mut w = room / 2.0;
            while w > min_width {
                pts.push(p + dir * w);
                w /= 2.0;
            }
            if room > 0.0 {
                pts.push(p + dir * w.min(room));
            }
        }
    }
    pts.retain(|x| (a..=b).contains(x));
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
    pts
}

/// Composite Gauss integration of `f` over consecutive panels.
pub fn integrate_panels(breaks: &[f64], rule: &GaussRule, mut f: impl FnMut(f64) -> f64) -> f64 {
    breaks.windows(2).map(|w| rule.integrate(w[0], w[1], &mut f)).sum()
}

/// Sorted union of several breakpoint lists restricted to `[a, b]`, with
/// points closer than `tol · (b − a)` merged.
pub fn merge_breakpoints(a: f64, b: f64, lists: &[&[f64]], tol: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = lists
        .iter()
        .flat_map(|l| l.iter().copied())
        .filter(|&x| x > a && x < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let gap = tol * (b - a);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for x in pts {
        match out.last() {
            Some(&last) if x - last <= gap => {}
            _ => out.push(x),
        }
    }
    // keep b itself as the last point
    let last = out.len() - 1;
    if out[last] != b {
        if b - out[last] <= gap && last > 0 {
            out[last] = b;
        } else {
            out.push(b);
        }
    }
    out
}
