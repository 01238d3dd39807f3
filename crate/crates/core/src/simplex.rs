//! Dense-tableau primal simplex for the packing relaxations the solvers
//! build.
//!
//! Maximizes `c.x` subject to `Ax <= b, x >= 0` with `b >= 0`, so the slack
//! basis is feasible and no phase-one is needed.  Pivot selection follows
//! Bland's rule (lowest eligible index in, lowest basis index out on ratio
//! ties), which cannot cycle.  The packing instances have 0/1 constraint
//! coefficients and small integer objective weights, far inside f64 comfort.

use crate::error::{Error, Result};

const EPS: f64 = 1e-9;

/// `max c.x  s.t.  rows.x <= rhs, x >= 0`.
pub struct DenseLp {
    n: usize,
    c: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

impl DenseLp {
    pub fn new(c: Vec<f64>) -> Self {
        DenseLp {
            n: c.len(),
            c,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    /// Adds the constraint `sum coeffs.x <= rhs`; `rhs` must be nonnegative
    /// to keep the slack basis feasible.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], rhs: f64) -> Result<()> {
        if rhs < 0.0 {
            return Err(Error::InvalidSpec(
                "LP row has a negative right-hand side".into(),
            ));
        }
        let mut row = vec![0.0; self.n];
        for &(j, v) in coeffs {
            if j >= self.n {
                return Err(Error::InvalidSpec(format!(
                    "LP row references variable {j} out of {}",
                    self.n
                )));
            }
            row[j] += v;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.n;
        let m = self.rows.len();
        if n == 0 {
            return Ok(LpSolution {
                x: vec![],
                objective: 0.0,
            });
        }
        let width = n + m + 1;
        // Row 0 carries the reduced costs (negated objective); rows 1..=m the
        // constraints with an identity slack block and the rhs column.
        let mut tab = vec![vec![0.0; width]; m + 1];
        for j in 0..n {
            tab[0][j] = -self.c[j];
        }
        for i in 0..m {
            tab[i + 1][..n].copy_from_slice(&self.rows[i]);
            tab[i + 1][n + i] = 1.0;
            tab[i + 1][width - 1] = self.rhs[i];
        }
        let mut basis: Vec<usize> = (n..n + m).collect();

        loop {
            let Some(enter) = (0..n + m).find(|&j| tab[0][j] < -EPS) else {
                break;
            };
            let mut min_ratio = f64::INFINITY;
            for i in 0..m {
                let a = tab[i + 1][enter];
                if a > EPS {
                    min_ratio = min_ratio.min(tab[i + 1][width - 1] / a);
                }
            }
            if min_ratio.is_infinite() {
                return Err(Error::InvalidSpec("LP is unbounded".into()));
            }
            let leave = (0..m)
                .filter(|&i| {
                    let a = tab[i + 1][enter];
                    a > EPS && tab[i + 1][width - 1] / a <= min_ratio + EPS
                })
                .min_by_key(|&i| basis[i])
                .expect("a finite ratio row exists");

            let piv = tab[leave + 1][enter];
            for v in &mut tab[leave + 1] {
                *v /= piv;
            }
            for r in 0..=m {
                if r == leave + 1 {
                    continue;
                }
                let f = tab[r][enter];
                if f != 0.0 {
                    for j in 0..width {
                        tab[r][j] -= f * tab[leave + 1][j];
                    }
                }
            }
            basis[leave] = enter;
        }

        let mut x = vec![0.0; n];
        for (i, &bv) in basis.iter().enumerate() {
            if bv < n {
                x[bv] = tab[i + 1][width - 1].max(0.0);
            }
        }
        Ok(LpSolution {
            x,
            objective: tab[0][width - 1],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(c: &[f64], rows: &[(&[(usize, f64)], f64)]) -> LpSolution {
        let mut p = DenseLp::new(c.to_vec());
        for (coeffs, rhs) in rows {
            p.add_row(coeffs, *rhs).unwrap();
        }
        p.solve().unwrap()
    }

    /// Partial-pivot Gaussian elimination; `None` for singular systems.
    fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| {
                a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
            })?;
            if a[piv][col].abs() < 1e-9 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
        Some((0..n).map(|i| b[i] / a[i][i]).collect())
    }

    fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        if n < k {
            return vec![];
        }
        let mut out = combos(n - 1, k);
        for mut c in combos(n - 1, k - 1) {
            c.push(n - 1);
            out.push(c);
        }
        out
    }

    /// Independent LP oracle: enumerate every basic point (each choice of n
    /// active hyperplanes among rows and axes), keep the feasible ones, and
    /// take the best objective.
    fn vertex_oracle(c: &[f64], rows: &[Vec<f64>], b: &[f64]) -> f64 {
        let n = c.len();
        let mut planes: Vec<(Vec<f64>, f64)> = rows
            .iter()
            .zip(b)
            .map(|(r, &v)| (r.clone(), v))
            .collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            planes.push((e, 0.0));
        }
        let mut best = f64::NEG_INFINITY;
        for combo in combos(planes.len(), n) {
            let a: Vec<Vec<f64>> = combo.iter().map(|&i| planes[i].0.clone()).collect();
            let rhs: Vec<f64> = combo.iter().map(|&i| planes[i].1).collect();
            let Some(x) = solve_linear(a, rhs) else {
                continue;
            };
            let feasible = rows
                .iter()
                .zip(b)
                .all(|(r, &v)| r.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= v + 1e-6)
                && x.iter().all(|&v| v >= -1e-6);
            if feasible {
                let obj: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                best = best.max(obj);
            }
        }
        best
    }

    #[test]
    fn one_variable_box() {
        let s = lp(&[1.0], &[(&[(0, 1.0)], 1.0)]);
        assert!((s.objective - 1.0).abs() < 1e-9);
        assert!((s.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_variable_vertex() {
        // max 3x+2y s.t. x+y <= 4, x <= 2: optimum (2,2) with value 10.
        let s = lp(
            &[3.0, 2.0],
            &[(&[(0, 1.0), (1, 1.0)], 4.0), (&[(0, 1.0)], 2.0)],
        );
        assert!((s.objective - 10.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
        assert!((s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_origin_climbs_out() {
        // The origin vertex is degenerate (a zero rhs); Bland still leaves it.
        let s = lp(
            &[1.0, 1.0],
            &[(&[(0, 1.0), (1, -1.0)], 0.0), (&[(1, 1.0)], 2.0)],
        );
        assert!((s.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_is_reported() {
        let mut p = DenseLp::new(vec![1.0, 1.0]);
        p.add_row(&[(0, 1.0)], 1.0).unwrap();
        assert!(p.solve().is_err());
    }

    #[test]
    fn negative_rhs_is_rejected() {
        let mut p = DenseLp::new(vec![1.0]);
        assert!(p.add_row(&[(0, 1.0)], -1.0).is_err());
    }

    #[test]
    fn beale_cycling_example_terminates_at_optimum() {
        // The classic cycling instance; Bland's rule must terminate, and the
        // optimum (0.05) is confirmed by the vertex-enumeration oracle.
        let c = vec![0.75, -150.0, 0.02, -6.0];
        let rows = vec![
            vec![0.25, -60.0, -0.04, 9.0],
            vec![0.5, -90.0, -0.02, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let b = vec![0.0, 0.0, 1.0];
        let mut p = DenseLp::new(c.clone());
        for (r, &v) in rows.iter().zip(&b) {
            let coeffs: Vec<(usize, f64)> = r.iter().cloned().enumerate().collect();
            p.add_row(&coeffs, v).unwrap();
        }
        let s = p.solve().unwrap();
        let oracle = vertex_oracle(&c, &rows, &b);
        assert!((s.objective - oracle).abs() < 1e-9);
        assert!((s.objective - 0.05).abs() < 1e-9);
    }

    fn small_lp() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
        (1usize..=3, 1usize..=3).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(0..=5i32, n),
                prop::collection::vec(prop::collection::vec(0..=4i32, n), m),
                prop::collection::vec(0..=6i32, m),
            )
                .prop_map(move |(c, rows, b)| {
                    let c: Vec<f64> = c.into_iter().map(f64::from).collect();
                    let mut rows: Vec<Vec<f64>> = rows
                        .into_iter()
                        .map(|r| r.into_iter().map(f64::from).collect())
                        .collect();
                    let mut b: Vec<f64> = b.into_iter().map(f64::from).collect();
                    // A box row keeps every instance bounded.
                    rows.push(vec![1.0; n]);
                    b.push(6.0);
                    (c, rows, b)
                })
        })
    }

    proptest! {
        #[test]
        fn random_lps_match_vertex_enumeration((c, rows, b) in small_lp()) {
            let mut p = DenseLp::new(c.clone());
            for (r, &v) in rows.iter().zip(&b) {
                let coeffs: Vec<(usize, f64)> = r.iter().cloned().enumerate().collect();
                p.add_row(&coeffs, v).unwrap();
            }
            let s = p.solve().unwrap();
            let oracle = vertex_oracle(&c, &rows, &b);
            prop_assert!((s.objective - oracle).abs() < 1e-6,
                "simplex {} vs oracle {}", s.objective, oracle);
            // The returned point is primal feasible and prices correctly.
            for (r, &v) in rows.iter().zip(&b) {
                let lhs: f64 = r.iter().zip(&s.x).map(|(a, b)| a * b).sum();
                prop_assert!(lhs <= v + 1e-6);
            }
            let priced: f64 = c.iter().zip(&s.x).map(|(a, b)| a * b).sum();
            prop_assert!((priced - s.objective).abs() < 1e-6);
        }
    }
}
