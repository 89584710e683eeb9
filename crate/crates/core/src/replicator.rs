//! Deterministic replicator dynamics on the probability simplex.
//!
//! `dx_i/dt = x_i (u_i - sum_j x_j u_j)`, integrated with classic fixed-step
//! RK4. After each step negative coordinates are clamped to zero and the
//! state renormalized, so every recorded state is on the simplex.

use std::path::Path;

use crate::error::{Error, Result};

/// Distance from the simplex tolerated for user-supplied starting points.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

pub fn replicator_derivative(x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    if x.len() != u.len() {
        return Err(Error::Contract(format!(
            "state has {} coordinates, payoff has {}",
            x.len(),
            u.len()
        )));
    }
    let mass: f64 = x.iter().sum();
    let mean = x.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / mass;
    Ok(x.iter().zip(u).map(|(xi, ui)| xi * (ui - mean)).collect())
}

pub fn check_simplex(x: &[f64], tolerance: f64) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Contract("empty state".into()));
    }
    if let Some(bad) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Contract(format!(
            "coordinate {bad} is not a probability"
        )));
    }
    let sum: f64 = x.iter().sum();
    if (sum - 1.0).abs() > tolerance {
        return Err(Error::Contract(format!("coordinates sum to {sum}, not 1")));
    }
    Ok(())
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = x.iter().sum();
    for v in x.iter_mut() {
        *v /= sum;
    }
}

/// Recorded states, `states[0]` being the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }
}

pub fn integrate_replicator<F>(x0: &[f64], payoff: F, dt: f64, steps: usize) -> Result<Trajectory>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    check_simplex(x0, SIMPLEX_TOLERANCE)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("dt", format!("must be > 0, got {dt}")));
    }
    let k = x0.len();
    let field = |x: &[f64]| -> Result<Vec<f64>> {
        let u = payoff(x);
        if u.len() != k {
            return Err(Error::Contract(format!(
                "payoff returned {} values for {k} strategies",
                u.len()
            )));
        }
        replicator_derivative(x, &u)
    };
    let axpy = |x: &[f64], d: &[f64], h: f64| -> Vec<f64> {
        x.iter().zip(d).map(|(a, b)| a + h * b).collect()
    };

    let mut x = x0.to_vec();
    project(&mut x);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x.clone());
    for _ in 0..steps {
        let k1 = field(&x)?;
        let k2 = field(&axpy(&x, &k1, dt / 2.0))?;
        let k3 = field(&axpy(&x, &k2, dt / 2.0))?;
        let k4 = field(&axpy(&x, &k3, dt))?;
        for i in 0..k {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        project(&mut x);
        states.push(x.clone());
    }
    Ok(Trajectory { dt, states })
}

/// Payoffs for the standalone integrator.
///
/// A table with one value per row is a constant payoff vector; a square table
/// is a matrix game with `u = A x`.
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffTable {
    Constant(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

impl PayoffTable {
    pub fn dim(&self) -> usize {
        match self {
            PayoffTable::Constant(u) => u.len(),
            PayoffTable::Matrix(a) => a.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PayoffTable::Constant(u) => u.clone(),
            PayoffTable::Matrix(a) => a
                .iter()
                .map(|row| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum())
                .collect(),
        }
    }

    /// Whitespace-separated rows; row `i` belongs to strategy `i`. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: n + 1,
                        reason: format!("`{tok}` is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            reason,
        };
        if rows.is_empty() {
            return Err(parse_err("payoff table is empty".into()));
        }
        let k = rows.len();
        if rows.iter().all(|r| r.len() == 1) {
            Ok(PayoffTable::Constant(
                rows.into_iter().map(|r| r[0]).collect(),
            ))
        } else if rows.iter().all(|r| r.len() == k) {
            Ok(PayoffTable::Matrix(rows))
        } else {
            Err(parse_err(format!(
                "expected {k} rows of 1 value or {k} rows of {k} values"
            )))
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}
