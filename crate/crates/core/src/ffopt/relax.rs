use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{energy_and_gradient, PairPotentialParams};
use crate::error::{Error, Result};
use crate::geom::{Structure, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop when no atom feels a gradient larger than this (eV/Å).
    pub gradient_tolerance: f64,
    /// Extra simplex restarts from each start's best point.
    pub restarts: usize,
    /// Largest displacement of any atom in one relaxation step (Å).
    pub max_step: f64,
    /// Initial simplex edge for positional parameters (Å); the orientation
    /// angles use half this value in radians.
    pub simplex_step: f64,
    pub max_evaluations: usize,
    pub function_tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 2000,
            gradient_tolerance: 1e-4,
            restarts: 2,
            max_step: 0.2,
            simplex_step: 0.2,
            max_evaluations: 20_000,
            function_tolerance: 1e-10,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0 && self.max_step > 0.0 && self.simplex_step > 0.0 && self.function_tolerance > 0.0) {
            return Err(Error::InvalidArgument("optimizer tolerances and steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxed {
    pub structure: Structure,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;

fn flat(g: &[Vec3]) -> Vec<f64> {
    g.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_atom_norm(v: &[f64]) -> f64 {
    v.chunks(3).map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()).fold(0.0, f64::max)
}

/// L-BFGS with a backtracking Armijo line search. Every accepted step lowers
/// the energy. A trial geometry that collapses two atoms is treated as a
/// failed trial; if no trial succeeds the last accepted state is returned
/// unconverged.
pub fn relax(s: &Structure, p: &PairPotentialParams, cfg: &OptimizerConfig) -> Result<Relaxed> {
    cfg.validate()?;
    let (mut e, g) = energy_and_gradient(s, p)?;
    let mut g = flat(&g);
    let mut current = s.clone();
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for iter in 0..cfg.max_iterations {
        if max_atom_norm(&g) <= cfg.gradient_tolerance {
            return Ok(done(current, e, iter, true));
        }
        let mut d = two_loop(&g, &history);
        if dot(&d, &g) >= 0.0 {
            history.clear();
            d = g.iter().map(|x| -x).collect();
        }
        let longest = max_atom_norm(&d);
        if longest > cfg.max_step {
            d.iter_mut().for_each(|x| *x *= cfg.max_step / longest);
        }
        let slope = dot(&d, &g);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let pos: Vec<Vec3> = current
                .positions()
                .iter()
                .enumerate()
                .map(|(i, x)| x + Vec3::new(d[3 * i], d[3 * i + 1], d[3 * i + 2]) * alpha)
                .collect();
            let trial = current.with_positions(pos)?;
            if let Ok((et, gt)) = energy_and_gradient(&trial, p) {
                if et <= e + ARMIJO * alpha * slope && et < e {
                    accepted = Some((trial, et, flat(&gt)));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((next, en, gn)) = accepted else {
            return Ok(done(current, e, iter, false));
        };
        let step: Vec<f64> = d.iter().map(|x| x * alpha).collect();
        let dg: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &dg);
        if sy > 1e-12 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((step, dg, 1.0 / sy));
        }
        current = next;
        e = en;
        g = gn;
    }
    let converged = max_atom_norm(&g) <= cfg.gradient_tolerance;
    Ok(done(current, e, cfg.max_iterations, converged))
}

fn done(s: Structure, e: f64, iterations: usize, converged: bool) -> Relaxed {
    Relaxed { structure: s.with_energy(e), energy: e, iterations, converged }
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|x| *x *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}
