#![allow(dead_code)]

//! Finite-difference reference for two delta-coupled surfaces.

use num_complex::Complex64;

pub struct GridProblem {
    pub mass: f64,
    pub omega: f64,
    pub center1: f64,
    pub center2: f64,
    pub k0: f64,
    pub xc: f64,
    pub half_width: f64,
}

type Block = [[Complex64; 2]; 2];

fn inv(m: &Block) -> Block {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

fn mul(m: &Block, v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

impl GridProblem {
    /// Nodes `-L + jΔx`, `j = 0..=n`, with Dirichlet walls at both ends.
    pub fn nodes(&self, n: usize) -> Vec<f64> {
        let dx = 2.0 * self.half_width / n as f64;
        (0..=n).map(|j| -self.half_width + dx * j as f64).collect()
    }

    fn index_of(&self, n: usize, x: f64) -> usize {
        let dx = 2.0 * self.half_width / n as f64;
        let j = ((x + self.half_width) / dx).round();
        assert!(
            ((x + self.half_width) / dx - j).abs() < 1e-9,
            "{x} is not a node at n = {n}"
        );
        j as usize
    }

    /// Column of `(E − H)⁻¹ / Δx` for a unit source on `surface` at `x0`:
    /// the discrete `G_{1s}(x, x0)` and `G_{2s}(x, x0)` at every node.
    pub fn column(&self, n: usize, e: Complex64, x0: f64, surface: usize) -> Vec<[Complex64; 2]> {
        let xs = self.nodes(n);
        let dx = 2.0 * self.half_width / n as f64;
        let jc = self.index_of(n, self.xc);
        let j0 = self.index_of(n, x0);
        let t = 1.0 / (2.0 * self.mass * dx * dx);
        let v = |x: f64, c: f64| 0.5 * self.mass * self.omega * self.omega * (x - c) * (x - c);
        let zero = Complex64::new(0.0, 0.0);

        let m = xs.len();
        let mut piv: Vec<Block> = Vec::with_capacity(m);
        let mut rhs: Vec<[Complex64; 2]> = Vec::with_capacity(m);
        for (j, &x) in xs.iter().enumerate() {
            let coupling = if j == jc { self.k0 / dx } else { 0.0 };
            let mut d: Block = [
                [
                    e - 2.0 * t - v(x, self.center1),
                    Complex64::new(-coupling, 0.0),
                ],
                [
                    Complex64::new(-coupling, 0.0),
                    e - 2.0 * t - v(x, self.center2),
                ],
            ];
            let mut b = [zero, zero];
            if j == j0 {
                b[surface] = Complex64::new(1.0 / dx, 0.0);
            }
            if j > 0 {
                let prev = inv(&piv[j - 1]);
                for r in 0..2 {
                    for c in 0..2 {
                        d[r][c] -= t * t * prev[r][c];
                    }
                }
                let carry = mul(&prev, rhs[j - 1]);
                b[0] -= t * carry[0];
                b[1] -= t * carry[1];
            }
            piv.push(d);
            rhs.push(b);
        }
        let mut u = vec![[zero, zero]; m];
        for j in (0..m).rev() {
            let mut r = rhs[j];
            if j + 1 < m {
                r[0] -= t * u[j + 1][0];
                r[1] -= t * u[j + 1][1];
            }
            u[j] = mul(&inv(&piv[j]), r);
        }
        u
    }

    /// `(G11(x, x0), G12(x, x0))` on an `n`-interval grid.
    pub fn g11_g12(&self, n: usize, e: Complex64, x: f64, x0: f64) -> (Complex64, Complex64) {
        let i = self.index_of(n, x);
        let from1 = self.column(n, e, x0, 0);
        let from2 = self.column(n, e, x0, 1);
        (from1[i][0], from2[i][0])
    }
}

/// `log2(err_coarse / err_fine)` for successive halvings.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
