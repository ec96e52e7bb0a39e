//! Joint search over designs and biological/technical replication plans.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factorial::{Design, FactorLayout, Parametrization};
use crate::model::{DyeStructure, ModelSpec, ReplicationPlan};
use crate::rational::Rational;

use super::engine::{Engine, EngineSpec};
use super::{aligned_weights, effect_contrasts, exact_criteria, with_jobs, CriterionWeights, SearchSpace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplicationResult {
    pub ratio: Rational,
    pub criterion: Rational,
    pub design: Design,
    pub plan: ReplicationPlan,
    /// Number of (design, plan) pairs attaining the optimum.
    pub optima_count: usize,
}

/// Every way of assigning subjects to the samples of a design: for each treatment, a
/// set partition of its appearances. Subjects are numbered by first appearance, red
/// before green within a slide, so distinct plans never differ by a relabeling.
pub fn replication_plans(design: &Design) -> Vec<ReplicationPlan> {
    let layout = design.layout();
    let v = layout.treatment_count();
    // appearances[t] = positions (slide, side) carrying treatment t
    let mut appearances: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v];
    for (i, s) in design.slides().iter().enumerate() {
        appearances[layout.index_of(&s.red)].push((i, 0));
        appearances[layout.index_of(&s.green)].push((i, 1));
    }
    let per_treatment: Vec<Vec<Vec<u32>>> = appearances.iter().map(|a| growth_strings(a.len())).collect();

    let mut plans = Vec::new();
    let mut choice = vec![0usize; v];
    loop {
        let mut raw = vec![[0u32; 2]; design.len()];
        for (t, positions) in appearances.iter().enumerate() {
            let blocks = &per_treatment[t][choice[t]];
            for (&(slide, side), &b) in positions.iter().zip(blocks) {
                // unique before relabeling: treatment-major block ids
                raw[slide][side] = (t * 2 * design.len()) as u32 + b;
            }
        }
        plans.push(ReplicationPlan::new(relabel(&raw)));

        let mut t = 0;
        loop {
            if t == v {
                return plans;
            }
            choice[t] += 1;
            if choice[t] < per_treatment[t].len() {
                break;
            }
            choice[t] = 0;
            t += 1;
        }
    }
}

/// Restricted growth strings of length `n`, i.e. the set partitions of `n` items.
fn growth_strings(n: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn extend(current: &mut Vec<u32>, max: u32, n: usize, out: &mut Vec<Vec<u32>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        let limit = if current.is_empty() { 0 } else { max + 1 };
        for b in 0..=limit {
            current.push(b);
            extend(current, max.max(b), n, out);
            current.pop();
        }
    }
    extend(&mut current, 0, n, &mut out);
    out
}

fn relabel(raw: &[[u32; 2]]) -> Vec<[u32; 2]> {
    let mut seen: Vec<u32> = Vec::new();
    let mut label = |x: u32| match seen.iter().position(|&s| s == x) {
        Some(p) => p as u32,
        None => {
            seen.push(x);
            (seen.len() - 1) as u32
        }
    };
    raw.iter().map(|&[r, g]| [label(r), label(g)]).collect()
}

fn distinct_subjects(plan: &ReplicationPlan) -> usize {
    plan.subjects().iter().flatten().max().map_or(0, |&m| m as usize + 1)
}

/// Deterministic preference among tied optima: smaller canonical design, then more
/// distinct subjects, then the smaller subject listing.
fn preference(a: &(Design, ReplicationPlan), b: &(Design, ReplicationPlan)) -> Ordering {
    a.0.slides()
        .cmp(b.0.slides())
        .then_with(|| distinct_subjects(&b.1).cmp(&distinct_subjects(&a.1)))
        .then_with(|| a.1.subjects().cmp(b.1.subjects()))
}

/// For each ratio `r = γ²/δ²`, the w-optimal pair of design and replication plan over
/// all designs with `slides` slides, in the model without dye effects.
pub fn replication_search(
    layout: &FactorLayout,
    slides: usize,
    weights: &CriterionWeights,
    ratios: &[Rational],
    jobs: usize,
) -> Result<Vec<ReplicationResult>> {
    if ratios.iter().any(Rational::is_negative) {
        return Err(Error::InvalidInput("variance ratios must be nonnegative".into()));
    }
    let plain = ModelSpec::plain();
    let space = SearchSpace::all(layout, slides, DyeStructure::None)?;
    let contrasts = effect_contrasts(layout, Parametrization::Baseline)?;
    let w = aligned_weights(layout, weights)?;
    let pairs = space.pairs();
    let engine = Engine::new(EngineSpec {
        layout,
        model: &plain,
        candidates: &pairs,
        base: &[],
        slides,
        repetition: true,
        contrasts: &contrasts,
        require_connected: false,
    })?;
    // designs estimating every positively weighted effect
    let chosen: Vec<Vec<usize>> = with_jobs(jobs, || {
        engine.fold(
            Vec::new,
            |acc, chosen, out| {
                if out.iter().zip(&w).all(|(x, wi)| x.is_some() || !wi.is_positive()) {
                    acc.push(chosen.to_vec());
                }
            },
            |mut a, b| {
                a.extend(b);
                a
            },
        )
    })?;
    if chosen.is_empty() {
        return Err(Error::EmptySearchSpace);
    }
    let designs: Vec<Design> =
        chosen.iter().map(|c| space.design_from(c).map(|d| d.canonical(false))).collect::<Result<_>>()?;

    let mut results = Vec::with_capacity(ratios.len());
    for ratio in ratios {
        let scored: Vec<(Rational, Design, ReplicationPlan)> = with_jobs(jobs, || {
            designs
                .par_iter()
                .map(|d| {
                    replication_plans(d)
                        .into_iter()
                        .map(|plan| {
                            let model = plain.clone().replicated(plan.clone(), ratio.clone())?;
                            let value = exact_criteria(d, &model, &contrasts, std::slice::from_ref(&w))?.remove(0);
                            Ok((value, d.clone(), plan))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })??
        .into_iter()
        .flatten()
        .collect();
        let min = scored.iter().map(|(v, _, _)| v).min().cloned().ok_or(Error::EmptySearchSpace)?;
        let mut optima: Vec<(Design, ReplicationPlan)> =
            scored.into_iter().filter(|(v, _, _)| *v == min).map(|(_, d, p)| (d, p)).collect();
        optima.sort_by(preference);
        let optima_count = optima.len();
        let (design, plan) = optima.swap_remove(0);
        results.push(ReplicationResult { ratio: ratio.clone(), criterion: min, design, plan, optima_count });
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let sizes: Vec<usize> = (0..6).map(|n| growth_strings(n).len()).collect();
        assert_eq!(sizes, [1, 1, 2, 5, 15, 52]);
    }

    #[test]
    fn plans_of_the_four_slide_loop() {
        let layout: FactorLayout = "2x2".parse().unwrap();
        let d = Design::from_labels(&layout, &[("01", "00"), ("10", "00"), ("11", "01"), ("11", "10")]).unwrap();
        let plans = replication_plans(&d);
        assert_eq!(plans.len(), 16);
        assert!(plans.iter().all(|p| p.validate(&d).is_ok()));
        assert_eq!(plans.iter().filter(|p| p.is_all_biological()).count(), 1);
        assert!(plans.contains(&ReplicationPlan::all_biological(&d)));
        let mut unique = plans.clone();
        unique.sort_by(|a, b| a.subjects().cmp(b.subjects()));
        unique.dedup();
        assert_eq!(unique.len(), 16);
    }
}
