//! Augmented-Lagrangian solver for a two-dimensional box-constrained problem
//!
//! `min f(p)  s.t.  c_i(p) >= margin,  lo <= p <= hi`
//!
//! with a projected BFGS inner loop and Armijo backtracking. Constraint
//! functions may be nonsmooth; the solver consumes whatever (sub)gradient
//! the objective reports. Every feasible point it touches is a candidate for
//! the returned incumbent, so the result is never worse than the best
//! feasible iterate.

use std::time::Instant;

use crate::zonotope::{Mat2, Vec2};

/// Problem data for one bin. Calls are counted by the solver.
pub trait BinObjective: Sync {
    fn n_constraints(&self) -> usize;
    /// Cost value and gradient.
    fn cost(&self, p: &Vec2) -> (f64, Vec2);
    /// Constraint values only.
    fn constraint_values(&self, p: &Vec2, out: &mut [f64]);
    /// Constraint values and gradients.
    fn constraint_gradients(&self, p: &Vec2, values: &mut [f64], grads: &mut [Vec2]);
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Cap on inner (quasi-Newton) iterations.
    pub max_iter: usize,
    pub kkt_tol: f64,
    pub margin: f64,
    pub mu0: f64,
    pub deadline: Option<Instant>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 15,
            kkt_tol: 1e-6,
            margin: 0.01,
            mu0: 10.0,
            deadline: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub constraint_evals: usize,
    pub gradient_evals: usize,
    pub converged: bool,
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// Lowest-cost point seen with every constraint at or above the margin.
    pub best: Option<(Vec2, f64)>,
    pub last: Vec2,
    pub stats: SolveStats,
}

struct Evaluator<'a, O: BinObjective + ?Sized> {
    obj: &'a O,
    cfg: SolverConfig,
    stats: SolveStats,
    best: Option<(Vec2, f64)>,
    values: Vec<f64>,
    grads: Vec<Vec2>,
}

impl<'a, O: BinObjective + ?Sized> Evaluator<'a, O> {
    fn consider(&mut self, p: &Vec2, cost: f64) {
        let feasible = self.values.iter().all(|&c| c >= self.cfg.margin);
        if feasible && self.best.is_none_or(|(_, b)| cost < b) {
            self.best = Some((*p, cost));
        }
    }

    /// Augmented Lagrangian value (PHR form for `g = c − margin >= 0`).
    fn lagrangian_value(&mut self, p: &Vec2, lambda: &[f64], mu: f64) -> f64 {
        let (f, _) = self.obj.cost(p);
        self.obj.constraint_values(p, &mut self.values);
        self.stats.constraint_evals += 1;
        self.consider(p, f);
        f + self.penalty(lambda, mu)
    }

    fn penalty(&self, lambda: &[f64], mu: f64) -> f64 {
        self.values
            .iter()
            .zip(lambda)
            .map(|(&c, &l)| {
                let g = c - self.cfg.margin;
                let s = (l - mu * g).max(0.0);
                (s * s - l * l) / (2.0 * mu)
            })
            .sum()
    }

    fn lagrangian_grad(&mut self, p: &Vec2, lambda: &[f64], mu: f64) -> (f64, Vec2) {
        let (f, df) = self.obj.cost(p);
        self.obj.constraint_gradients(p, &mut self.values, &mut self.grads);
        self.stats.constraint_evals += 1;
        self.stats.gradient_evals += 1;
        self.consider(p, f);
        let mut g = df;
        for ((&c, gc), &l) in self.values.iter().zip(&self.grads).zip(lambda) {
            let s = (l - mu * (c - self.cfg.margin)).max(0.0);
            g -= s * gc;
        }
        (f + self.penalty(lambda, mu), g)
    }

    fn out_of_time(&mut self) -> bool {
        let out = self.cfg.deadline.is_some_and(|d| Instant::now() >= d);
        if out {
            self.stats.timed_out = true;
        }
        out
    }
}

fn project(p: Vec2, lo: &Vec2, hi: &Vec2) -> Vec2 {
    Vec2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y))
}

/// Gradient components that would push past an active bound are dropped.
fn projected_gradient(p: &Vec2, g: &Vec2, lo: &Vec2, hi: &Vec2) -> Vec2 {
    project(p - g, lo, hi) - p
}

/// Safety cap on multiplier updates; the inner-iteration cap normally binds first.
const MAX_OUTER: usize = 50;

pub fn solve_bin<O: BinObjective + ?Sized>(obj: &O, lo: Vec2, hi: Vec2, p0: Vec2, cfg: &SolverConfig) -> SolveOutcome {
    let m = obj.n_constraints();
    let mut ev = Evaluator {
        obj,
        cfg: *cfg,
        stats: SolveStats::default(),
        best: None,
        values: vec![0.0; m],
        grads: vec![Vec2::zeros(); m],
    };
    let mut lambda = vec![0.0; m];
    let mut mu = cfg.mu0;
    let mut p = project(p0, &lo, &hi);
    let mut prev_violation = f64::INFINITY;

    'outer: for _ in 0..MAX_OUTER {
        let (mut l_val, mut grad) = ev.lagrangian_grad(&p, &lambda, mu);
        let mut at_p = (ev.values.clone(), ev.grads.clone());
        let mut h = Mat2::identity();
        loop {
            let pg = projected_gradient(&p, &grad, &lo, &hi);
            if pg.norm() <= cfg.kkt_tol {
                break;
            }
            if ev.stats.iterations >= cfg.max_iter || ev.out_of_time() {
                break 'outer;
            }
            ev.stats.iterations += 1;

            // Free variables: not pinned at a bound by the gradient.
            let mut free = [true, true];
            for i in 0..2 {
                let at_lo = p[i] <= lo[i] && grad[i] > 0.0;
                let at_hi = p[i] >= hi[i] && grad[i] < 0.0;
                free[i] = !(at_lo || at_hi);
            }
            let mut hr = h;
            for i in 0..2 {
                if !free[i] {
                    for k in 0..2 {
                        hr[(i, k)] = if i == k { 1.0 } else { 0.0 };
                        hr[(k, i)] = if i == k { 1.0 } else { 0.0 };
                    }
                }
            }
            let mut d = -(hr * grad);
            for i in 0..2 {
                if !free[i] {
                    d[i] = 0.0;
                }
            }
            if d.dot(&grad) >= 0.0 {
                d = -grad;
                h = Mat2::identity();
            }

            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let trial = project(p + alpha * d, &lo, &hi);
                let step = trial - p;
                if step.norm() < 1e-14 {
                    break;
                }
                let val = ev.lagrangian_value(&trial, &lambda, mu);
                if val <= l_val + 1e-4 * grad.dot(&step) {
                    accepted = Some(trial);
                    break;
                }
                alpha *= 0.5;
                if ev.out_of_time() {
                    break 'outer;
                }
            }
            let Some(next) = accepted else {
                break;
            };
            let (next_val, next_grad) = ev.lagrangian_grad(&next, &lambda, mu);
            let s = next - p;
            let y = next_grad - grad;
            let sy = s.dot(&y);
            if sy > 1e-12 {
                let rho = 1.0 / sy;
                let i = Mat2::identity();
                h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
            }
            at_p = (ev.values.clone(), ev.grads.clone());
            p = next;
            l_val = next_val;
            grad = next_grad;
        }

        // Multiplier and penalty update from the constraint values at p.
        let (values, grads) = at_p;
        let violation = values
            .iter()
            .map(|&c| (cfg.margin - c).max(0.0))
            .fold(0.0, f64::max);
        let mut comp: f64 = 0.0;
        for (l, &c) in lambda.iter_mut().zip(&values) {
            let g = c - cfg.margin;
            *l = (*l - mu * g).max(0.0);
            comp = comp.max((*l * g).abs());
        }
        let (_, df) = obj.cost(&p);
        let mut grad_l = df;
        for (gc, &l) in grads.iter().zip(&lambda) {
            grad_l -= l * gc;
        }
        let stationarity = projected_gradient(&p, &grad_l, &lo, &hi).norm();
        if violation <= 1e-9 && stationarity <= cfg.kkt_tol && comp <= cfg.kkt_tol {
            ev.stats.converged = true;
            break;
        }
        if ev.stats.iterations >= cfg.max_iter || ev.out_of_time() {
            break;
        }
        if violation > 0.25 * prev_violation {
            mu *= 10.0;
        }
        prev_violation = violation;
    }

    SolveOutcome {
        best: ev.best,
        last: p,
        stats: ev.stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// `min ‖p − target‖²` subject to staying outside a disc.
    struct Disc {
        target: Vec2,
        center: Vec2,
        radius: f64,
    }

    impl BinObjective for Disc {
        fn n_constraints(&self) -> usize {
            1
        }
        fn cost(&self, p: &Vec2) -> (f64, Vec2) {
            let d = p - self.target;
            (d.norm_squared(), 2.0 * d)
        }
        fn constraint_values(&self, p: &Vec2, out: &mut [f64]) {
            out[0] = (p - self.center).norm() - self.radius;
        }
        fn constraint_gradients(&self, p: &Vec2, values: &mut [f64], grads: &mut [Vec2]) {
            let d = p - self.center;
            values[0] = d.norm() - self.radius;
            grads[0] = d / d.norm();
        }
    }

    #[test]
    fn unconstrained_optimum_inside_box() {
        let obj = Disc {
            target: Vec2::new(1.0, 2.0),
            center: Vec2::new(10.0, 10.0),
            radius: 1.0,
        };
        let cfg = SolverConfig {
            max_iter: 50,
            ..Default::default()
        };
        let out = solve_bin(&obj, Vec2::new(-5.0, -5.0), Vec2::new(5.0, 5.0), Vec2::zeros(), &cfg);
        let (p, _) = out.best.unwrap();
        assert_abs_diff_eq!(p, Vec2::new(1.0, 2.0), epsilon = 1e-6);
    }

    #[test]
    fn box_bound_is_respected() {
        let obj = Disc {
            target: Vec2::new(9.0, 0.0),
            center: Vec2::new(-10.0, -10.0),
            radius: 1.0,
        };
        let cfg = SolverConfig {
            max_iter: 50,
            ..Default::default()
        };
        let out = solve_bin(&obj, Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), Vec2::zeros(), &cfg);
        let (p, _) = out.best.unwrap();
        assert_abs_diff_eq!(p, Vec2::new(1.0, 0.0), epsilon = 1e-9);
    }

    #[test]
    fn active_constraint() {
        let obj = Disc {
            target: Vec2::new(0.0, 0.0),
            center: Vec2::new(0.5, 0.0),
            radius: 1.0,
        };
        let cfg = SolverConfig {
            max_iter: 200,
            ..Default::default()
        };
        let out = solve_bin(&obj, Vec2::new(-3.0, -3.0), Vec2::new(3.0, 3.0), Vec2::new(-2.0, 0.1), &cfg);
        let (p, _) = out.best.unwrap();
        assert!((p - obj.center).norm() >= obj.radius + cfg.margin - 1e-12);
        assert_abs_diff_eq!(p, Vec2::new(-0.51, 0.0), epsilon = 1e-3);
    }

    #[test]
    fn iteration_cap_and_counts() {
        let obj = Disc {
            target: Vec2::new(0.0, 0.0),
            center: Vec2::new(0.5, 0.0),
            radius: 1.0,
        };
        let cfg = SolverConfig {
            max_iter: 3,
            ..Default::default()
        };
        let out = solve_bin(&obj, Vec2::new(-3.0, -3.0), Vec2::new(3.0, 3.0), Vec2::new(-2.0, 0.1), &cfg);
        assert!(out.stats.iterations <= 3);
        assert!(out.stats.gradient_evals >= 1);
        assert!(out.stats.constraint_evals >= out.stats.gradient_evals);
    }
}
