//! Exhaustive and heuristic searches for w-optimal and admissible designs.
//!
//! Every search screens candidates in `f64` and re-evaluates the near-best designs in
//! exact arithmetic, so reported values and tie-breaks are exact.

mod engine;
mod replication;

use std::collections::BTreeMap;
use std::fmt;

use serde_json::json;

use crate::construct::{construct_dbar, d0_collection, dye_swap};
use crate::error::{Error, Result};
use crate::factorial::{
    baseline_contrast, ordered_pairs, orthogonal_contrast_2x2, unordered_pairs, ContrastVector, Design, EffectIndex,
    FactorLayout, Parametrization, Slide,
};
use crate::model::{blue_variances, variance_report, DyeStructure, ModelSpec};
use crate::rational::Rational;

use engine::{Engine, EngineSpec};

pub use replication::{replication_plans, replication_search, ReplicationResult};

/// Relative slack used when deciding which screened designs get an exact re-evaluation.
const SCREEN_TOLERANCE: f64 = 1e-9;

/// Nonnegative weight per effect; the criterion is Σ weight · Var(θ̂).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriterionWeights {
    weights: BTreeMap<EffectIndex, Rational>,
}

impl CriterionWeights {
    pub fn new(weights: BTreeMap<EffectIndex, Rational>) -> Result<Self> {
        if weights.values().any(Rational::is_negative) {
            return Err(Error::InvalidInput("criterion weights must be nonnegative".into()));
        }
        if !weights.values().any(Rational::is_positive) {
            return Err(Error::InvalidInput("at least one criterion weight must be positive".into()));
        }
        Ok(CriterionWeights { weights })
    }

    /// Weight 1 on main effects and `w` on every interaction.
    pub fn two_factor(layout: &FactorLayout, w: Rational) -> Result<Self> {
        let weights = layout
            .effects()
            .into_iter()
            .map(|e| {
                let weight = if e.order() == 1 { Rational::one() } else { w.clone() };
                (e, weight)
            })
            .collect();
        CriterionWeights::new(weights)
    }

    /// Either a single interaction weight `w` or a list `effect=weight,…`; effects left
    /// out of a list get weight zero.
    pub fn parse(layout: &FactorLayout, text: &str) -> Result<Self> {
        let text = text.trim();
        if !text.contains('=') {
            return CriterionWeights::two_factor(layout, text.parse()?);
        }
        let mut weights = BTreeMap::new();
        for item in text.split(',') {
            let (effect, weight) =
                item.split_once('=').ok_or_else(|| Error::Parse(format!("expected effect=weight, got `{item}`")))?;
            let effect: EffectIndex = effect.trim().parse()?;
            layout.check(effect.treatment())?;
            if weights.insert(effect.clone(), weight.trim().parse()?).is_some() {
                return Err(Error::InvalidInput(format!("effect {effect} weighted twice")));
            }
        }
        CriterionWeights::new(weights)
    }

    pub fn weight(&self, effect: &EffectIndex) -> Rational {
        self.weights.get(effect).cloned().unwrap_or_else(Rational::zero)
    }

    /// Effects with positive weight.
    pub fn support(&self) -> impl Iterator<Item = (&EffectIndex, &Rational)> {
        self.weights.iter().filter(|(_, w)| w.is_positive())
    }

    fn check(&self, layout: &FactorLayout) -> Result<()> {
        for e in self.weights.keys() {
            layout.check(e.treatment())?;
        }
        Ok(())
    }
}

/// Contrasts for every effect of a layout under one parametrization.
pub fn effect_contrasts(layout: &FactorLayout, parametrization: Parametrization) -> Result<Vec<ContrastVector>> {
    layout
        .effects()
        .iter()
        .map(|e| match parametrization {
            Parametrization::Baseline => baseline_contrast(layout, e),
            Parametrization::Orthogonal => orthogonal_contrast_2x2(layout, e),
        })
        .collect()
}

/// Weight vector aligned with `layout.effects()`.
fn aligned_weights(layout: &FactorLayout, weights: &CriterionWeights) -> Result<Vec<Rational>> {
    weights.check(layout)?;
    Ok(layout.effects().iter().map(|e| weights.weight(e)).collect())
}

/// Exact Σ weight · Var(θ̂) for a design.
pub fn criterion_value(design: &Design, model: &ModelSpec, weights: &CriterionWeights) -> Result<Rational> {
    criterion_value_with(design, model, weights, Parametrization::Baseline)
}

pub fn criterion_value_with(
    design: &Design,
    model: &ModelSpec,
    weights: &CriterionWeights,
    parametrization: Parametrization,
) -> Result<Rational> {
    let layout = design.layout();
    let w = aligned_weights(layout, weights)?;
    let contrasts = effect_contrasts(layout, parametrization)?;
    exact_criteria(design, model, &contrasts, std::slice::from_ref(&w)).map(|mut v| v.remove(0))
}

/// Exact criteria for several weight vectors sharing one set of contrasts.
fn exact_criteria(
    design: &Design,
    model: &ModelSpec,
    contrasts: &[ContrastVector],
    weights: &[Vec<Rational>],
) -> Result<Vec<Rational>> {
    let needed: Vec<usize> = (0..contrasts.len()).filter(|&i| weights.iter().any(|w| w[i].is_positive())).collect();
    let chosen: Vec<ContrastVector> = needed.iter().map(|&i| contrasts[i].clone()).collect();
    let values = blue_variances(design, model, &chosen)?;
    let layout = design.layout();
    let effects = layout.effects();
    weights
        .iter()
        .map(|w| {
            let mut total = Rational::zero();
            let mut missing = Vec::new();
            for (&i, value) in needed.iter().zip(&values) {
                if !w[i].is_positive() {
                    continue;
                }
                match value {
                    Some(v) => total += &(&w[i] * v),
                    None => missing.push(effects[i].to_string()),
                }
            }
            if missing.is_empty() {
                Ok(total)
            } else {
                Err(Error::NotEstimable(missing))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub criterion: Rational,
    /// Lexicographically smallest optimum in canonical form.
    pub design: Design,
    pub optima_count: usize,
    /// Every optimum in canonical form, sorted.
    pub optima: Vec<Design>,
}

impl SearchResult {
    pub fn to_json(&self, with_optima: bool) -> String {
        let design: serde_json::Value = serde_json::to_value(&self.design).expect("design serializes");
        let mut value = json!({
            "criterion": self.criterion.to_string(),
            "design": design,
            "optima_count": self.optima_count,
        });
        if with_optima {
            value["optima"] = serde_json::to_value(&self.optima).expect("designs serialize");
        }
        serde_json::to_string(&value).expect("result serializes")
    }
}

impl fmt::Display for SearchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} optima): {}", self.criterion, self.optima_count, self.design)
    }
}

/// All multisets (or subsets) of a fixed size over a list of candidate slides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchSpace {
    layout: FactorLayout,
    candidates: Vec<Slide>,
    slides: usize,
    repetition: bool,
    dye_sensitive: bool,
}

impl SearchSpace {
    /// Every design with `slides` slides: unordered pairs when orientation cannot matter,
    /// ordered pairs otherwise.
    pub fn all(layout: &FactorLayout, slides: usize, dye: DyeStructure) -> Result<Self> {
        let pairs = if dye.is_dye_sensitive() { ordered_pairs(layout) } else { unordered_pairs(layout) };
        let candidates =
            pairs.into_iter().map(|(r, g)| Slide::new(layout.treatment_at(r), layout.treatment_at(g))).collect();
        SearchSpace::new(layout, candidates, slides, true, dye)
    }

    /// Designs built from the given slides only. Duplicate candidates are merged; with
    /// `repetition` false each candidate is used at most once.
    pub fn restricted(
        layout: &FactorLayout,
        candidates: &[Slide],
        slides: usize,
        repetition: bool,
        dye: DyeStructure,
    ) -> Result<Self> {
        SearchSpace::new(layout, candidates.to_vec(), slides, repetition, dye)
    }

    fn new(
        layout: &FactorLayout,
        candidates: Vec<Slide>,
        slides: usize,
        repetition: bool,
        dye: DyeStructure,
    ) -> Result<Self> {
        if slides == 0 {
            return Err(Error::InvalidInput("a design needs at least one slide".into()));
        }
        let dye_sensitive = dye.is_dye_sensitive();
        let mut candidates: Vec<Slide> = candidates
            .iter()
            .map(|s| {
                layout.check(&s.red)?;
                layout.check(&s.green)?;
                if s.red == s.green {
                    return Err(Error::InvalidDesign(format!("slide {s} compares a treatment with itself")));
                }
                Ok(if dye_sensitive { s.clone() } else { s.unoriented() })
            })
            .collect::<Result<_>>()?;
        candidates.sort();
        candidates.dedup();
        Ok(SearchSpace { layout: layout.clone(), candidates, slides, repetition, dye_sensitive })
    }

    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    pub fn candidates(&self) -> &[Slide] {
        &self.candidates
    }

    pub fn slides(&self) -> usize {
        self.slides
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        self.candidates.iter().map(|s| (self.layout.index_of(&s.red), self.layout.index_of(&s.green))).collect()
    }

    fn check_model(&self, model: &ModelSpec) -> Result<()> {
        if model.dye.is_dye_sensitive() && !self.dye_sensitive {
            return Err(Error::InvalidInput("space built without orientation used with a dye model".into()));
        }
        Ok(())
    }

    /// w-optimal design over the space.
    pub fn w_optimal(&self, model: &ModelSpec, weights: &CriterionWeights, jobs: usize) -> Result<SearchResult> {
        self.w_optimal_many(model, std::slice::from_ref(weights), jobs).map(|mut v| v.remove(0))
    }

    /// One pass over the space for several criteria.
    pub fn w_optimal_many(
        &self,
        model: &ModelSpec,
        weights: &[CriterionWeights],
        jobs: usize,
    ) -> Result<Vec<SearchResult>> {
        self.check_model(model)?;
        let pairs = self.pairs();
        let base = Base { layout: &self.layout, pairs: Vec::new() };
        optimize(&[base], &pairs, self.slides, self.repetition, model, weights, Parametrization::Baseline, jobs)
    }

    /// Designs with every effect estimable that no other design in the space dominates
    /// on the full vector of per-effect variances. Canonical and sorted.
    pub fn admissible(&self, model: &ModelSpec, jobs: usize) -> Result<Vec<Design>> {
        self.check_model(model)?;
        let layout = &self.layout;
        let contrasts = effect_contrasts(layout, Parametrization::Baseline)?;
        let pairs = self.pairs();
        let engine = Engine::new(EngineSpec {
            layout,
            model,
            candidates: &pairs,
            base: &[],
            slides: self.slides,
            repetition: self.repetition,
            contrasts: &contrasts,
            require_connected: true,
        })?;
        let points: Vec<(Vec<usize>, Vec<f64>)> = with_jobs(jobs, || {
            engine.fold(
                Vec::new,
                |acc, chosen, out| {
                    if let Some(values) = out.iter().copied().collect::<Option<Vec<f64>>>() {
                        acc.push((chosen.to_vec(), values));
                    }
                },
                |mut a, b| {
                    a.extend(b);
                    a
                },
            )
        })?;
        let designs: Vec<Design> = points.iter().map(|(idx, _)| self.design_from(idx)).collect::<Result<_>>()?;
        let floats: Vec<Vec<f64>> = points.into_iter().map(|(_, v)| v).collect();
        let front = pareto_front(&designs, &floats, model)?;
        let mut out: Vec<Design> = front.into_iter().map(|i| designs[i].canonical(self.dye_sensitive)).collect();
        out.sort_by(|a, b| a.slides().cmp(b.slides()));
        out.dedup();
        Ok(out)
    }

    fn design_from(&self, indices: &[usize]) -> Result<Design> {
        let slides = indices.iter().map(|&i| self.candidates[i].clone()).collect();
        Design::new(self.layout.clone(), slides)
    }
}

/// Runs `f` on a pool of `jobs` workers (0: the global default pool).
pub(crate) fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Fixed slides every searched design starts from.
struct Base<'a> {
    layout: &'a FactorLayout,
    pairs: Vec<(usize, usize)>,
}

/// Screened designs within tolerance of the best value seen, per criterion.
#[derive(Clone)]
struct Screen {
    best: f64,
    hits: Vec<(f64, Vec<usize>)>,
}

impl Screen {
    fn new() -> Self {
        Screen { best: f64::INFINITY, hits: Vec::new() }
    }

    fn cutoff(best: f64) -> f64 {
        best + SCREEN_TOLERANCE * best.abs().max(1e-300) + 1e-12
    }

    fn offer(&mut self, value: f64, chosen: &[usize]) {
        if value > Screen::cutoff(self.best) {
            return;
        }
        if value < self.best {
            self.best = value;
            let cut = Screen::cutoff(value);
            self.hits.retain(|(v, _)| *v <= cut);
        }
        self.hits.push((value, chosen.to_vec()));
    }

    fn merge(mut self, other: Screen) -> Screen {
        for (v, c) in other.hits {
            self.offer(v, &c);
        }
        self
    }
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    bases: &[Base<'_>],
    candidates: &[(usize, usize)],
    slides: usize,
    repetition: bool,
    model: &ModelSpec,
    weights: &[CriterionWeights],
    parametrization: Parametrization,
    jobs: usize,
) -> Result<Vec<SearchResult>> {
    let layout = bases[0].layout;
    let contrasts = effect_contrasts(layout, parametrization)?;
    let exact_weights: Vec<Vec<Rational>> =
        weights.iter().map(|w| aligned_weights(layout, w)).collect::<Result<_>>()?;
    let float_weights: Vec<Vec<f64>> = exact_weights.iter().map(|w| w.iter().map(Rational::to_f64).collect()).collect();
    let all_positive = exact_weights.iter().all(|w| w.iter().all(Rational::is_positive));
    let dye_sensitive = model.dye.is_dye_sensitive();

    // (base, screened hits) for every base design
    let mut screened: Vec<(usize, Vec<Screen>)> = Vec::new();
    for (b, base) in bases.iter().enumerate() {
        let engine = Engine::new(EngineSpec {
            layout,
            model,
            candidates,
            base: &base.pairs,
            slides,
            repetition,
            contrasts: &contrasts,
            require_connected: all_positive,
        })?;
        let k = weights.len();
        let screens = with_jobs(jobs, || {
            engine.fold(
                || vec![Screen::new(); k],
                |acc, chosen, out| {
                    for (screen, w) in acc.iter_mut().zip(&float_weights) {
                        let mut total = 0.0;
                        let mut ok = true;
                        for (x, &wi) in out.iter().zip(w) {
                            if wi > 0.0 {
                                match x {
                                    Some(x) => total += wi * x,
                                    None => {
                                        ok = false;
                                        break;
                                    }
                                }
                            }
                        }
                        if ok {
                            screen.offer(total, chosen);
                        }
                    }
                },
                |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
            )
        })?;
        screened.push((b, screens));
    }

    let mut results = Vec::with_capacity(weights.len());
    for (c, w) in exact_weights.iter().enumerate() {
        let best = screened.iter().map(|(_, s)| s[c].best).fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(Error::EmptySearchSpace);
        }
        let cut = Screen::cutoff(best);
        let mut exact: Vec<(Rational, Design)> = Vec::new();
        for (b, screens) in &screened {
            for (value, chosen) in &screens[c].hits {
                if *value > cut {
                    continue;
                }
                let pairs = bases[*b].pairs.iter().chain(chosen.iter().map(|&i| &candidates[i]));
                let slides = pairs.map(|&(r, g)| Slide::new(layout.treatment_at(r), layout.treatment_at(g))).collect();
                let design = Design::new(layout.clone(), slides)?.canonical(dye_sensitive);
                let value = exact_criteria(&design, model, &contrasts, std::slice::from_ref(w))?.remove(0);
                exact.push((value, design));
            }
        }
        let min = exact.iter().map(|(v, _)| v).min().cloned().ok_or(Error::EmptySearchSpace)?;
        let mut optima: Vec<Design> = exact.into_iter().filter(|(v, _)| *v == min).map(|(_, d)| d).collect();
        optima.sort_by(|a, b| a.slides().cmp(b.slides()));
        optima.dedup();
        results.push(SearchResult { criterion: min, design: optima[0].clone(), optima_count: optima.len(), optima });
    }
    Ok(results)
}

/// Indices of the designs not dominated by any other. Components closer than the
/// screening tolerance are compared exactly.
fn pareto_front(designs: &[Design], floats: &[Vec<f64>], model: &ModelSpec) -> Result<Vec<usize>> {
    let mut exact: Vec<Option<Vec<Rational>>> = vec![None; designs.len()];
    let exact_of = |i: usize, exact: &mut Vec<Option<Vec<Rational>>>| -> Result<()> {
        if exact[i].is_none() {
            exact[i] = Some(variance_report(&designs[i], model)?.values());
        }
        Ok(())
    };
    let mut order: Vec<usize> = (0..designs.len()).collect();
    order.sort_by(|&a, &b| floats[a].iter().sum::<f64>().total_cmp(&floats[b].iter().sum::<f64>()));

    // componentwise comparison: Less, Equal, Greater
    let compare = |a: usize, b: usize, exact: &mut Vec<Option<Vec<Rational>>>| -> Result<Vec<std::cmp::Ordering>> {
        let mut out = Vec::with_capacity(floats[a].len());
        for (j, (x, y)) in floats[a].iter().zip(&floats[b]).enumerate() {
            let scale = x.abs().max(y.abs()).max(1.0);
            if (x - y).abs() > SCREEN_TOLERANCE * scale {
                out.push(x.total_cmp(y));
            } else {
                exact_of(a, exact)?;
                exact_of(b, exact)?;
                out.push(exact[a].as_ref().unwrap()[j].cmp(&exact[b].as_ref().unwrap()[j]));
            }
        }
        Ok(out)
    };
    let dominates = |cmp: &[std::cmp::Ordering]| cmp.iter().all(|o| o.is_le()) && cmp.iter().any(|o| o.is_lt());

    let mut front: Vec<usize> = Vec::new();
    for &x in &order {
        let mut dominated = false;
        for &f in &front {
            if dominates(&compare(f, x, &mut exact)?) {
                dominated = true;
                break;
            }
        }
        if dominated {
            continue;
        }
        let mut kept = Vec::with_capacity(front.len() + 1);
        for &f in &front {
            if !dominates(&compare(x, f, &mut exact)?) {
                kept.push(f);
            }
        }
        kept.push(x);
        front = kept;
    }
    front.sort_unstable();
    Ok(front)
}

pub fn exhaustive_w_optimal(
    layout: &FactorLayout,
    slides: usize,
    model: &ModelSpec,
    weights: &CriterionWeights,
    restrict: Option<&[Slide]>,
    jobs: usize,
) -> Result<SearchResult> {
    let space = match restrict {
        None => SearchSpace::all(layout, slides, model.dye)?,
        Some(c) => SearchSpace::restricted(layout, c, slides, true, model.dye)?,
    };
    space.w_optimal(model, weights, jobs)
}

pub fn pareto_admissible(layout: &FactorLayout, slides: usize, model: &ModelSpec, jobs: usize) -> Result<Vec<Design>> {
    SearchSpace::all(layout, slides, model.dye)?.admissible(model, jobs)
}

/// `100 · best criterion / criterion of d`, the best taken over every design with as many
/// slides as `d` (exhaustive, so only for small spaces).
pub fn relative_efficiency(design: &Design, model: &ModelSpec, weights: &CriterionWeights, jobs: usize) -> Result<f64> {
    let own = criterion_value(design, model, weights)?;
    let best = exhaustive_w_optimal(design.layout(), design.len(), model, weights, None, jobs)?;
    Ok(100.0 * (best.criterion / own).to_f64())
}

/// Designs the augmentation heuristic starts from: the optimal saturated designs, or
/// their dye swaps when every treatment carries its own dye effect.
pub fn augmentation_bases(layout: &FactorLayout, dye: DyeStructure) -> Vec<Design> {
    let collection = d0_collection(layout);
    match dye {
        DyeStructure::GeneralDye => collection.iter().map(dye_swap).collect(),
        _ => collection,
    }
}

/// Best design over every way of adding slides to each base design.
pub fn augment_optimal(
    layout: &FactorLayout,
    slides: usize,
    model: &ModelSpec,
    weights: &CriterionWeights,
    jobs: usize,
) -> Result<SearchResult> {
    augment_optimal_many(layout, slides, model, std::slice::from_ref(weights), jobs).map(|mut v| v.remove(0))
}

pub fn augment_optimal_many(
    layout: &FactorLayout,
    slides: usize,
    model: &ModelSpec,
    weights: &[CriterionWeights],
    jobs: usize,
) -> Result<Vec<SearchResult>> {
    let designs = augmentation_bases(layout, model.dye);
    let base_size = designs[0].len();
    if slides < base_size {
        return Err(Error::InvalidInput(format!("augmentation starts from {base_size} slides, {slides} requested")));
    }
    let bases: Vec<Base<'_>> = designs
        .iter()
        .map(|d| Base {
            layout,
            pairs: d.slides().iter().map(|s| (layout.index_of(&s.red), layout.index_of(&s.green))).collect(),
        })
        .collect();
    let candidates = SearchSpace::all(layout, 1, model.dye)?.pairs();
    optimize(&bases, &candidates, slides - base_size, true, model, weights, Parametrization::Baseline, jobs)
}

/// Restricted and unrestricted optima for one size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjectureReport {
    pub slides: usize,
    pub omega: SearchResult,
    pub global: SearchResult,
    pub equal: bool,
}

/// Compares the best design made of distinct slides of the union design against the
/// best design overall, in the model without dye effects.
pub fn check_conjecture(
    layout: &FactorLayout,
    slides: usize,
    weights: &CriterionWeights,
    jobs: usize,
) -> Result<ConjectureReport> {
    let union = construct_dbar(layout)?;
    let v = layout.treatment_count();
    if slides < v || slides > union.len() {
        return Err(Error::InvalidInput(format!("size must lie in {}..={} for {layout}", v, union.len())));
    }
    let model = ModelSpec::plain();
    let omega = SearchSpace::restricted(layout, union.slides(), slides, false, DyeStructure::None)?
        .w_optimal(&model, weights, jobs)?;
    let global = SearchSpace::all(layout, slides, DyeStructure::None)?.w_optimal(&model, weights, jobs)?;
    let equal = omega.criterion == global.criterion;
    Ok(ConjectureReport { slides, omega, global, equal })
}

/// Smallest number of slides for which some design keeps every effect estimable, with
/// the first such design in enumeration order.
pub fn min_slides(layout: &FactorLayout, model: &ModelSpec, max_slides: usize, jobs: usize) -> Result<(usize, Design)> {
    let contrasts = effect_contrasts(layout, Parametrization::Baseline)?;
    for n in 1..=max_slides {
        let space = SearchSpace::all(layout, n, model.dye)?;
        let pairs = space.pairs();
        let engine = Engine::new(EngineSpec {
            layout,
            model,
            candidates: &pairs,
            base: &[],
            slides: n,
            repetition: true,
            contrasts: &contrasts,
            require_connected: true,
        })?;
        let found = with_jobs(jobs, || {
            engine.find_first(|chosen, out| {
                out.iter().all(Option::is_some)
                    && space.design_from(chosen).and_then(|d| variance_report(&d, model)).is_ok()
            })
        })?;
        if let Some(chosen) = found {
            return Ok((n, space.design_from(&chosen)?));
        }
    }
    Err(Error::EmptySearchSpace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p, d).unwrap()
    }

    fn l(s: &str) -> FactorLayout {
        s.parse().unwrap()
    }

    fn w(layout: &FactorLayout, x: i64) -> CriterionWeights {
        CriterionWeights::two_factor(layout, Rational::integer(x)).unwrap()
    }

    #[test]
    fn example_one_criteria() {
        let layout = l("2x2");
        let sym = Design::from_frequencies_2x2([1; 6]).unwrap();
        let rival = Design::from_frequencies_2x2([2, 2, 0, 0, 1, 1]).unwrap();
        assert_eq!(criterion_value(&sym, &ModelSpec::plain(), &w(&layout, 1)).unwrap(), q(2, 1));
        assert_eq!(criterion_value(&rival, &ModelSpec::plain(), &w(&layout, 1)).unwrap(), q(19, 12));
        let mains = CriterionWeights::parse(&layout, "01=1,10=1").unwrap();
        assert_eq!(criterion_value(&rival, &ModelSpec::plain(), &mains).unwrap(), q(5, 6));
    }

    #[test]
    fn weights_validation() {
        let layout = l("2x2");
        assert!(CriterionWeights::parse(&layout, "0").is_ok());
        assert!(CriterionWeights::parse(&layout, "01=0").is_err());
        assert!(CriterionWeights::parse(&layout, "-1").is_err());
        assert!(CriterionWeights::parse(&layout, "01=1,01=2").is_err());
        assert!(CriterionWeights::parse(&layout, "02=1").is_err());
        assert_eq!(CriterionWeights::parse(&layout, "2/3").unwrap().weight(&"11".parse().unwrap()), q(2, 3));
    }

    #[test]
    fn small_table_cell() {
        let layout = l("2x2");
        let r = exhaustive_w_optimal(&layout, 4, &ModelSpec::plain(), &w(&layout, 1), None, 1).unwrap();
        let expected = Design::from_labels(&layout, &[("01", "00"), ("10", "00"), ("11", "01"), ("11", "10")]).unwrap();
        assert_eq!(r.design, expected);
        assert_eq!(r.criterion, criterion_value(&expected, &ModelSpec::plain(), &w(&layout, 1)).unwrap());
        assert!(r.optima_count >= 1);
    }

    #[test]
    fn jobs_do_not_change_results() {
        let layout = l("2x2");
        let a = exhaustive_w_optimal(&layout, 5, &ModelSpec::plain(), &w(&layout, 2), None, 1).unwrap();
        let b = exhaustive_w_optimal(&layout, 5, &ModelSpec::plain(), &w(&layout, 2), None, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn admissible_set_excludes_symmetric_design() {
        let layout = l("2x2");
        let front = pareto_admissible(&layout, 6, &ModelSpec::plain(), 1).unwrap();
        let sym = Design::from_frequencies_2x2([1; 6]).unwrap().canonical(false);
        assert!(!front.contains(&sym));
        let rival = Design::from_frequencies_2x2([2, 2, 0, 0, 1, 1]).unwrap().canonical(false);
        assert!(front.contains(&rival));
    }

    #[test]
    fn singleton_space_is_admissible() {
        let layout = l("2x2");
        let only = Design::from_labels(&layout, &[("01", "00"), ("10", "00"), ("11", "00")]).unwrap();
        let space = SearchSpace::restricted(&layout, only.slides(), 3, false, DyeStructure::None).unwrap();
        assert_eq!(space.admissible(&ModelSpec::plain(), 1).unwrap(), vec![only.canonical(false)]);
    }

    #[test]
    fn saturated_augmentation_is_best_base() {
        let layout = l("2x3");
        let r = augment_optimal(&layout, 5, &ModelSpec::plain(), &w(&layout, 1), 1).unwrap();
        let best = d0_collection(&layout)
            .iter()
            .map(|d| criterion_value(d, &ModelSpec::plain(), &w(&layout, 1)).unwrap())
            .min()
            .unwrap();
        assert_eq!(r.criterion, best);
        assert!(augment_optimal(&layout, 4, &ModelSpec::plain(), &w(&layout, 1), 1).is_err());
    }

    #[test]
    fn minimal_sizes() {
        let layout = l("2x2");
        assert_eq!(min_slides(&layout, &ModelSpec::plain(), 5, 1).unwrap().0, 3);
        let (n, witness) = min_slides(&layout, &ModelSpec::general_dye(), 6, 1).unwrap();
        assert_eq!(n, 6);
        assert!(variance_report(&witness, &ModelSpec::general_dye()).is_ok());
    }

    #[test]
    fn result_json_shape() {
        let layout = l("2x2");
        let r = exhaustive_w_optimal(&layout, 4, &ModelSpec::plain(), &w(&layout, 1), None, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json(false)).unwrap();
        assert_eq!(v["criterion"], r.criterion.to_string());
        assert_eq!(v["optima_count"], r.optima_count);
        assert_eq!(v["design"]["layout"], json!([2, 2]));
        assert!(v.get("optima").is_none());
    }
}
