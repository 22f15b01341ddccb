//! The equilibrium system linking converged pass rates, difficulties and
//! competence:
//!
//! ```text
//! D*(x) = σ(C* − D*(x)) − S*(x)     for every problem x
//! C*    = −mean_x D*(x)
//! ```
//!
//! The synchronous map `F(D, C) = (σ(C − D) − S*, −mean(σ(C − D) − S*))` is a
//! contraction with constant 1/2 in the sup norm over `(D, C)`, so plain
//! iteration converges to the unique solution from any starting point.
//!
//! Successive deltas shrink towards the rounding floor of the state, which
//! would make late contraction ratios meaningless if deltas were measured by
//! subtracting states. [`solve`] therefore propagates the step vector
//! `x_{n+1} − x_n` directly through a cancellation-free difference of
//! sigmoids.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::{logistic, SIGMOID_SATURATION};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProblem {
    /// Converged pass rate per problem.
    pub s_star: Vec<f64>,
    pub init_d: Vec<f64>,
    pub init_c: f64,
}

impl EquilibriumProblem {
    /// Starts from all-zero difficulties and zero competence.
    pub fn from_pass_rates(s_star: Vec<f64>) -> Self {
        let n = s_star.len();
        Self {
            s_star,
            init_d: vec![0.0; n],
            init_c: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.s_star.is_empty() {
            return Err(Error::Domain("equilibrium problem has no pass rates".into()));
        }
        if self.init_d.len() != self.s_star.len() {
            return Err(Error::Domain(format!(
                "{} initial difficulties for {} pass rates",
                self.init_d.len(),
                self.s_star.len()
            )));
        }
        if let Some(s) = self.s_star.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Domain(format!("converged pass rate {s} outside [0, 1]")));
        }
        if !self.init_c.is_finite() || self.init_d.iter().any(|d| !d.is_finite()) {
            return Err(Error::Domain("initial state must be finite".into()));
        }
        Ok(())
    }
}

/// Iterates visited by [`solve`]. `deltas[n]` is the sup-norm step from
/// `states[n]` to `states[n + 1]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<(Vec<f64>, f64)>,
    pub deltas: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from bare states, measuring steps by subtraction.
    pub fn from_states(states: Vec<(Vec<f64>, f64)>) -> Self {
        let deltas = states
            .windows(2)
            .map(|w| sup_distance(&w[0], &w[1]))
            .collect();
        Self { states, deltas }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Successive ratios `δ_{n+1} / δ_n`, skipping steps at the rounding floor.
    pub fn ratios(&self) -> Vec<f64> {
        let floor = 10.0 * f64::EPSILON;
        self.deltas
            .windows(2)
            .filter(|w| w[0] > floor)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// One `iteration,delta,ratio` row per step; the first ratio is empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "delta", "ratio"])?;
        for (i, delta) in self.deltas.iter().enumerate() {
            let ratio = match i.checked_sub(1).map(|p| self.deltas[p]) {
                Some(prev) if prev > 10.0 * f64::EPSILON => (delta / prev).to_string(),
                _ => String::new(),
            };
            w.write_record([(i + 1).to_string(), delta.to_string(), ratio])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub d_star: Vec<f64>,
    pub c_star: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub contraction_ratios: Vec<f64>,
    #[serde(skip)]
    pub trajectory: Trajectory,
}

fn sup_distance(a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y).abs())
        .fold((a.1 - b.1).abs(), f64::max)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// One application of the joint map.
pub fn iterate_once(d: &[f64], c: f64, s_star: &[f64]) -> (Vec<f64>, f64) {
    debug_assert_eq!(d.len(), s_star.len());
    let next: Vec<f64> = d
        .iter()
        .zip(s_star)
        .map(|(&di, &si)| logistic(c - di) - si)
        .collect();
    let c_next = -mean(&next);
    (next, c_next)
}

/// `σ(a + h) − σ(a)` without cancellation when `h` is small.
fn sigmoid_increment(a: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let saturated = |z: f64| z.abs() > SIGMOID_SATURATION;
    if saturated(a) || saturated(a + h) {
        return logistic(a + h) - logistic(a);
    }
    // σ(a+h) − σ(a) = σ(a+h) · (1 − σ(a)) · (1 − e^{−h})
    logistic(a + h) * logistic(-a) * -(-h).exp_m1()
}

/// Largest residual of the equilibrium equations at `(d, c)`.
pub fn residual(d: &[f64], c: f64, s_star: &[f64]) -> f64 {
    let eq = d
        .iter()
        .zip(s_star)
        .map(|(&di, &si)| (di - (logistic(c - di) - si)).abs())
        .fold(0.0, f64::max);
    eq.max((c + mean(d)).abs())
}

/// Iterates the joint map until the sup-norm step falls to `tolerance`.
pub fn solve(
    problem: &EquilibriumProblem,
    tolerance: f64,
    max_iters: usize,
) -> Result<EquilibriumSolution> {
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")));
    }
    problem.validate()?;
    let s_star = &problem.s_star;

    let mut d = problem.init_d.clone();
    let mut c = problem.init_c;
    let (d1, c1) = iterate_once(&d, c, s_star);
    let mut step_d: Vec<f64> = d1.iter().zip(&d).map(|(a, b)| a - b).collect();
    let mut step_c = c1 - c;

    let mut trajectory = Trajectory::default();
    trajectory.states.push((d.clone(), c));

    for iteration in 1..=max_iters {
        let delta = step_d.iter().map(|x| x.abs()).fold(step_c.abs(), f64::max);
        trajectory.deltas.push(delta);

        let next_d: Vec<f64> = d.iter().zip(&step_d).map(|(x, s)| x + s).collect();
        let next_c = c + step_c;

        if delta <= tolerance {
            trajectory.states.push((next_d.clone(), next_c));
            let final_residual = residual(&next_d, next_c, s_star);
            return Ok(EquilibriumSolution {
                d_star: next_d,
                c_star: next_c,
                iterations: iteration,
                final_residual,
                contraction_ratios: trajectory.ratios(),
                trajectory,
            });
        }

        // Propagate the step: the argument of σ moves by (ΔC − ΔD(x)).
        let new_step_d: Vec<f64> = d
            .iter()
            .zip(&step_d)
            .map(|(&di, &sdi)| sigmoid_increment(c - di, step_c - sdi))
            .collect();
        let new_step_c = -mean(&new_step_d);

        d = next_d;
        c = next_c;
        step_d = new_step_d;
        step_c = new_step_c;
        trajectory.states.push((d.clone(), c));
    }

    let last_delta = trajectory.deltas.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::Convergence {
        iterations: max_iters,
        last_delta,
        trajectory: Box::new(trajectory),
    })
}

/// Largest observed ratio of successive steps; 0 when no step rises above
/// the rounding floor.
pub fn measure_contraction(trajectory: &Trajectory) -> Result<f64> {
    if trajectory.len() < 3 {
        return Err(Error::Domain(format!(
            "contraction needs at least 3 states, got {}",
            trajectory.len()
        )));
    }
    Ok(trajectory.ratios().into_iter().fold(0.0, f64::max))
}
