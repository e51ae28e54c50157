use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{energy, nelder_mead, OptimizerConfig, PairPotentialParams};
use crate::error::{Error, Result};
use crate::geom::{Structure, Vec3};
use crate::posnergen::{build_s6, PhosphateTemplate, S6Params};

#[derive(Debug, Clone, PartialEq)]
pub struct S6Minimum {
    pub params: S6Params,
    pub structure: Structure,
    pub energy: f64,
    /// Index of the winning start.
    pub start: usize,
    pub evaluations: usize,
}

/// Energy of the S6 structure built from `x`, with the phosphates rigid.
/// Collisions, singular geometries and points outside `bounds` are +∞.
pub fn s6_objective(x: &[f64; 10], p: &PairPotentialParams, bounds: Option<&[(f64, f64); 10]>) -> f64 {
    if let Some(b) = bounds {
        if x.iter().zip(b).any(|(v, (lo, hi))| v < lo || v > hi) {
            return f64::INFINITY;
        }
    }
    let Ok(s) = build_s6(&S6Params::from_array(x), &PhosphateTemplate::default()) else {
        return f64::INFINITY;
    };
    energy(&s, p).unwrap_or(f64::INFINITY)
}

/// `n` starting points: the default parameters, then seeded perturbations of
/// them (±0.3 Å on positions, ±0.3 rad on angles) that build without
/// collisions.
pub fn s6_starts(n: usize, seed: u64) -> Vec<S6Params> {
    let base = S6Params::default().to_array();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        out.push(S6Params::default());
    }
    while out.len() < n {
        let mut x = base;
        for v in x.iter_mut() {
            *v += rng.random_range(-0.3..=0.3);
        }
        let params = S6Params::from_array(&x);
        if build_s6(&params, &PhosphateTemplate::default()).is_ok() {
            out.push(params);
        }
    }
    out
}

/// Simplex search from every start (in parallel), keeping the lowest energy;
/// ties go to the earlier start. The intra-phosphate pairs are always
/// excluded. The structure is S6 by construction, not by penalty.
pub fn minimize_s6(starts: &[S6Params], p: &PairPotentialParams, cfg: &OptimizerConfig) -> Result<S6Minimum> {
    minimize_s6_within(starts, p, cfg, None)
}

/// As [`minimize_s6`], with the search confined to a box in the 10
/// parameters (same order as [`S6Params::to_array`]).
pub fn minimize_s6_within(
    starts: &[S6Params],
    p: &PairPotentialParams,
    cfg: &OptimizerConfig,
    bounds: Option<&[(f64, f64); 10]>,
) -> Result<S6Minimum> {
    cfg.validate()?;
    if starts.is_empty() {
        return Err(Error::InvalidArgument("need at least one start".into()));
    }
    let rigid = p.rigid();
    let objective = |x: &[f64]| s6_objective(x.try_into().expect("10 parameters"), &rigid, bounds);
    let h = cfg.simplex_step;
    let steps = [h, h, h, h, h, h, h, 0.5 * h, 0.5 * h, 0.5 * h];

    let results: Vec<(usize, [f64; 10], f64, usize)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, start)| {
            let mut x = start.to_array();
            let mut value = objective(&x);
            let mut evaluations = 1;
            if !value.is_finite() {
                return (i, x, value, evaluations);
            }
            for _ in 0..=cfg.restarts {
                let r = nelder_mead(objective, &x, &steps, cfg.max_evaluations, cfg.function_tolerance);
                evaluations += r.evaluations;
                if r.value < value {
                    x.copy_from_slice(&r.x);
                    value = r.value;
                }
            }
            (i, x, value, evaluations)
        })
        .collect();

    let evaluations = results.iter().map(|r| r.3).sum();
    let (start, x, value, _) = results
        .into_iter()
        .filter(|r| r.2.is_finite())
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Collision("every start collides".into()))?;
    let params = S6Params::from_array(&x);
    let structure = build_s6(&params, &PhosphateTemplate::default())?.with_energy(value).with_label("S6 minimum");
    Ok(S6Minimum { params, structure, energy: value, start, evaluations })
}

/// Score of the S6 operation about z for `s` (0 for an exact S6 structure
/// built by [`build_s6`]).
pub fn s6_generator_score(s: &Structure) -> f64 {
    let op = crate::symdetect::ElementKind::improper(Vec3::z(), 6).matrix();
    crate::symdetect::score_operation(s, &op).unwrap_or(f64::INFINITY)
}
