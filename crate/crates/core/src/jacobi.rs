//! Orthonormal Jacobi polynomials and Gauss-Jacobi rules.
//!
//! Polynomials are orthonormal with respect to the *probability* measure proportional to
//! `(1 - s)^a (1 + s)^b` on `[-1, 1]`, so `p_0 = 1`. Evaluation uses the three-term
//! recurrence of the monic family rescaled to unit norm.

/// Recurrence coefficients of the monic Jacobi family: `p_{j+1} = (s - diag_j) p_j - offsq_j p_{j-1}`.
#[derive(Debug, Clone)]
pub struct JacobiRecurrence {
    pub a: f64,
    pub b: f64,
    diag: Vec<f64>,
    /// `sqrt(beta_j)` for `j >= 1`; entry 0 is unused.
    off: Vec<f64>,
}

impl JacobiRecurrence {
    /// Coefficients for degrees `0..len`.
    pub fn new(a: f64, b: f64, len: usize) -> Self {
        assert!(a > -1.0 && b > -1.0, "Jacobi parameters must exceed -1");
        let len = len.max(1);
        let mut diag = Vec::with_capacity(len);
        let mut off = Vec::with_capacity(len + 1);
        off.push(0.0);
        let ab = a + b;
        for j in 0..len {
            let jf = j as f64;
            let d = if j == 0 {
                (b - a) / (ab + 2.0)
            } else {
                let t = 2.0 * jf + ab;
                (b * b - a * a) / (t * (t + 2.0))
            };
            diag.push(d);
        }
        for j in 1..=len {
            let jf = j as f64;
            let beta = if j == 1 {
                4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                let t = 2.0 * jf + ab;
                4.0 * jf * (jf + a) * (jf + b) * (jf + ab) / (t * t * (t + 1.0) * (t - 1.0))
            };
            off.push(beta.sqrt());
        }
        Self { a, b, diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Writes the orthonormal polynomials `p_0(s), ..., p_{out.len()-1}(s)` into `out`.
    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        assert!(out.len() <= self.len() + 1, "recurrence table too short");
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        if out.len() == 1 {
            return;
        }
        out[1] = (s - self.diag[0]) / self.off[1];
        for j in 1..out.len() - 1 {
            out[j + 1] = ((s - self.diag[j]) * out[j] - self.off[j] * out[j - 1]) / self.off[j + 1];
        }
    }

    pub fn eval(&self, degree: usize, s: f64) -> f64 {
        let mut buf = vec![0.0; degree + 1];
        self.eval_into(s, &mut buf);
        buf[degree]
    }

    /// Gauss rule with `nodes` points for the probability measure; exact for degree `2 nodes - 1`.
    pub fn gauss(&self, nodes: usize) -> (Vec<f64>, Vec<f64>) {
        assert!(nodes >= 1 && nodes <= self.len(), "recurrence table too short for {nodes} nodes");
        let diag = self.diag[..nodes].to_vec();
        let off = self.off[1..nodes].to_vec();
        golub_welsch(diag, off)
    }
}

/// Gauss-Jacobi nodes and probability weights for `(1-s)^a (1+s)^b`.
pub fn gauss_jacobi(nodes: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    JacobiRecurrence::new(a, b, nodes).gauss(nodes)
}

/// Eigen-decomposition of the symmetric tridiagonal Jacobi matrix by implicit QL, tracking
/// only the first row of the eigenvector matrix. Returns nodes ascending and weights
/// normalized to sum to one.
fn golub_welsch(mut d: Vec<f64>, offdiag: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    let mut e = offdiag;
    e.push(0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 100, "implicit QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(z.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Normalized moment E[s^k] under (1-s)^a (1+s)^b, from the recurrence obtained by
    /// integrating s^k d[(1-s)^(a+1) (1+s)^(b+1)] by parts.
    fn moment(k: usize, a: f64, b: f64) -> f64 {
        let (mut prev, mut cur) = (0.0, 1.0);
        for j in 0..k {
            let next = ((b - a) * cur + j as f64 * prev) / (a + b + 2.0 + j as f64);
            prev = cur;
            cur = next;
        }
        cur
    }

    #[test]
    fn gauss_rules_integrate_monomials_exactly() {
        for &(a, b) in &[(0.0, 0.0), (-0.5, -0.5), (0.0, 3.0), (1.0, 0.0), (-0.5, 0.0), (2.5, 1.5)] {
            let nodes = 8;
            let (x, w) = gauss_jacobi(nodes, a, b);
            for k in 0..2 * nodes {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = moment(k, a, b);
                assert!((q - exact).abs() < 1e-13, "a={a} b={b} k={k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn legendre_nodes_match_known_values() {
        let (x, w) = gauss_jacobi(3, 0.0, 0.0);
        let r = (0.6f64).sqrt();
        assert!((x[0] + r).abs() < 1e-15 && x[1].abs() < 1e-15 && (x[2] - r).abs() < 1e-15);
        // probability weights: 5/18, 8/18, 5/18
        assert!((w[1] - 8.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormality_under_gauss_rule() {
        for &(a, b) in &[(-0.5, -0.5), (0.0, 4.0), (1.0, 7.0)] {
            let rec = JacobiRecurrence::new(a, b, 40);
            let (x, w) = rec.gauss(30);
            let mut vals = vec![vec![0.0; 12]; x.len()];
            for (v, &s) in vals.iter_mut().zip(&x) {
                rec.eval_into(s, v);
            }
            for i in 0..12 {
                for j in 0..12 {
                    let g: f64 = vals.iter().zip(&w).map(|(v, w)| w * v[i] * v[j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-12, "({i},{j}) = {g}");
                }
            }
        }
    }

    #[test]
    fn chebyshev_case_has_finite_coefficients() {
        // a + b = -1 makes the generic beta_1 formula 0/0.
        let rec = JacobiRecurrence::new(-0.5, -0.5, 4);
        assert!(rec.off.iter().all(|v| v.is_finite()));
        // p_1 for Chebyshev probability measure is sqrt(2) s
        assert!((rec.eval(1, 0.3) - 2f64.sqrt() * 0.3).abs() < 1e-15);
    }

    #[test]
    fn large_rule_is_accurate() {
        let (x, w) = gauss_jacobi(600, 0.0, 0.0);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-13);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((q - 1.0 / 11.0).abs() < 1e-13);
    }
}
