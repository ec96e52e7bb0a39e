//! Design measures: probability distributions over candidate slides.
//!
//! A measure `π` has per-unit information `M(π) = Σ π_s x_s x_s' / σ_s²` and criterion
//! `Φ(π) = Σ_e w_e c_e' M(π)⁻ c_e`, so a design with `N` slides, read as the measure
//! `d/N`, has `Φ = N · criterion`. `Φ` is convex on the simplex; a measure is optimal
//! exactly when no slide has `d_s(π) = Σ_e w_e (x_s' M⁻¹ c_e)² / σ_s²` above `Φ(π)`.
//! This module works in binary64 throughout.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorial::{unordered_pairs, Design, FactorLayout, Parametrization, Slide};
use crate::linalg::{psd_quadratic_forms, Matrix};
use crate::model::{slide_row, variance_report, ModelSpec, Noise};
use crate::rational::Rational;
use crate::search::{criterion_value_with, effect_contrasts, with_jobs, CriterionWeights, SearchSpace};

/// Masses below this are treated as zero.
const MASS_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DesignMeasure {
    layout: FactorLayout,
    mass: Vec<(Slide, f64)>,
}

#[derive(Serialize, Deserialize)]
struct RawMass {
    red: crate::factorial::Treatment,
    green: crate::factorial::Treatment,
    pi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    layout: FactorLayout,
    mass: Vec<RawMass>,
}

impl DesignMeasure {
    /// Masses must be nonnegative and sum to one within 1e-9; they are renormalized.
    /// Repeated slides are merged.
    pub fn new(layout: FactorLayout, mass: Vec<(Slide, f64)>) -> Result<Self> {
        let mut merged: Vec<(Slide, f64)> = Vec::with_capacity(mass.len());
        for (s, pi) in mass {
            layout.check(&s.red)?;
            layout.check(&s.green)?;
            if s.red == s.green {
                return Err(Error::InvalidDesign(format!("slide {s} compares a treatment with itself")));
            }
            if !pi.is_finite() || pi < 0.0 {
                return Err(Error::InvalidInput(format!("mass {pi} on {s}")));
            }
            match merged.iter_mut().find(|(t, _)| *t == s) {
                Some(entry) => entry.1 += pi,
                None => merged.push((s, pi)),
            }
        }
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("masses sum to {total}")));
        }
        for entry in &mut merged {
            entry.1 /= total;
        }
        Ok(DesignMeasure { layout, mass: merged })
    }

    /// The measure putting mass `f_s / N` on every slide of a design.
    pub fn from_design(design: &Design) -> Self {
        let n = design.len() as f64;
        let mass = design.slides().iter().map(|s| (s.clone(), 1.0 / n)).collect();
        DesignMeasure::new(design.layout().clone(), mass).expect("design measure")
    }

    /// 2×2 measure from masses on (01,00),(10,00),(11,00),(10,01),(11,01),(11,10).
    pub fn from_masses_2x2(masses: [f64; 6]) -> Result<Self> {
        let layout: FactorLayout = "2x2".parse().expect("2x2");
        let mass = slides_2x2(&layout).into_iter().zip(masses).collect();
        DesignMeasure::new(layout, mass)
    }

    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    pub fn masses(&self) -> &[(Slide, f64)] {
        &self.mass
    }

    /// Mass on a slide, either orientation counted when `dye_sensitive` is false.
    pub fn mass_of(&self, slide: &Slide, dye_sensitive: bool) -> f64 {
        self.mass
            .iter()
            .filter(|(s, _)| s == slide || (!dye_sensitive && s.unoriented() == slide.unoriented()))
            .map(|(_, p)| p)
            .sum()
    }

    /// Masses on the six 2×2 slides in their conventional order.
    pub fn masses_2x2(&self) -> Result<[f64; 6]> {
        if !self.layout.is_two_by_two() {
            return Err(Error::Unsupported("six-slide masses exist only for 2x2".into()));
        }
        let mut out = [0.0; 6];
        for (slot, s) in out.iter_mut().zip(&slides_2x2(&self.layout)) {
            *slot = self.mass_of(s, false);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let raw = RawMeasure {
            layout: self.layout.clone(),
            mass: self
                .mass
                .iter()
                .map(|(s, pi)| RawMass { red: s.red.clone(), green: s.green.clone(), pi: *pi })
                .collect(),
        };
        serde_json::to_string(&raw).expect("measure serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawMeasure = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let mass = raw.mass.into_iter().map(|m| (Slide::new(m.red, m.green), m.pi)).collect();
        DesignMeasure::new(raw.layout, mass)
    }
}

fn slides_2x2(layout: &FactorLayout) -> Vec<Slide> {
    unordered_pairs(layout)
        .into_iter()
        .map(|(r, g)| Slide::new(layout.treatment_at(r), layout.treatment_at(g)))
        .collect()
}

impl fmt::Display for DesignMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.mass.iter().map(|(s, p)| format!("{s}: {p:.6}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// The candidate slides, their model rows in reduced coordinates (baseline τ pinned to
/// zero), and the weighted contrasts.
struct Problem {
    layout: FactorLayout,
    dye_sensitive: bool,
    candidates: Vec<Slide>,
    /// `x_s / σ_s`, length `p` each.
    rows: Vec<DVector<f64>>,
    contrasts: Vec<DVector<f64>>,
    weights: Vec<f64>,
    p: usize,
}

impl Problem {
    fn new(
        layout: &FactorLayout,
        model: &ModelSpec,
        weights: &CriterionWeights,
        parametrization: Parametrization,
    ) -> Result<Problem> {
        if model.replication.is_some() {
            return Err(Error::Unsupported("design measures under technical replication".into()));
        }
        let v = layout.treatment_count();
        let p = v - 1 + model.dye.nuisance_count(v);
        let space = SearchSpace::all(layout, 1, model.dye)?;
        let ratios: Option<Vec<f64>> = match &model.noise {
            Noise::Homoscedastic => None,
            Noise::Heteroscedastic(r) if r.len() == v => Some(r.iter().map(Rational::to_f64).collect()),
            Noise::Heteroscedastic(r) => {
                return Err(Error::InvalidInput(format!("{} variance ratios for {v} treatments", r.len())))
            }
        };
        let rows = space
            .candidates()
            .iter()
            .map(|s| {
                let (red, green) = (layout.index_of(&s.red), layout.index_of(&s.green));
                let (entries, len) = slide_row(model.dye, v, red, green);
                let scale = ratios.as_ref().map_or(1.0, |r| (r[red] + r[green] + 1.0).sqrt().recip());
                let mut x = DVector::zeros(p);
                for &(col, value) in &entries[..len] {
                    if col > 0 {
                        x[col - 1] = value as f64 * scale;
                    }
                }
                x
            })
            .collect();
        let mut contrasts = Vec::new();
        let mut w = Vec::new();
        for (e, c) in layout.effects().iter().zip(effect_contrasts(layout, parametrization)?) {
            let weight = weights.weight(e);
            if weight.is_positive() {
                let mut x = DVector::zeros(p);
                for (i, coefficient) in c.coefficients().iter().enumerate().skip(1) {
                    x[i - 1] = coefficient.to_f64();
                }
                contrasts.push(x);
                w.push(weight.to_f64());
            }
        }
        Ok(Problem {
            layout: layout.clone(),
            dye_sensitive: model.dye.is_dye_sensitive(),
            candidates: space.candidates().to_vec(),
            rows,
            contrasts,
            weights: w,
            p,
        })
    }

    fn index_of(&self, slide: &Slide) -> Option<usize> {
        let key = if self.dye_sensitive { slide.clone() } else { slide.unoriented() };
        self.candidates.iter().position(|s| *s == key)
    }

    fn masses_of(&self, m: &DesignMeasure) -> Result<Vec<f64>> {
        if m.layout() != &self.layout {
            return Err(Error::InvalidInput(format!("measure on {} used for {}", m.layout(), self.layout)));
        }
        let mut pi = vec![0.0; self.candidates.len()];
        for (s, mass) in m.masses() {
            let i = self.index_of(s).ok_or_else(|| Error::InvalidInput(format!("slide {s} is not a candidate")))?;
            pi[i] += mass;
        }
        Ok(pi)
    }

    fn measure(&self, pi: &[f64]) -> DesignMeasure {
        let mass = self.candidates.iter().zip(pi).filter(|(_, &p)| p > 0.0).map(|(s, &p)| (s.clone(), p)).collect();
        DesignMeasure::new(self.layout.clone(), mass).expect("optimizer keeps a probability vector")
    }

    fn information(&self, pi: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.p, self.p);
        for (x, &mass) in self.rows.iter().zip(pi) {
            if mass > 0.0 {
                m.ger(mass, x, x, 1.0);
            }
        }
        m
    }

    /// Φ through a generalized inverse, so singular but estimable supports work too.
    fn criterion(&self, pi: &[f64]) -> Result<f64> {
        let m = self.information(pi);
        let rows: Vec<Vec<f64>> = (0..self.p).map(|i| m.row(i).iter().copied().collect()).collect();
        let vectors: Vec<Vec<f64>> = self.contrasts.iter().map(|c| c.iter().copied().collect()).collect();
        let forms = psd_quadratic_forms(&Matrix::from_rows(rows), &vectors);
        let mut total = 0.0;
        for (form, w) in forms.into_iter().zip(&self.weights) {
            total += w * form.ok_or_else(|| Error::NotEstimable(vec!["measure support".into()]))?;
        }
        Ok(total)
    }

    /// Φ, `d_s` for every candidate, and the products `g_se = x_s' M⁻¹ c_e`; `None` when
    /// `M` is singular.
    fn evaluate(&self, pi: &[f64]) -> Option<Evaluation> {
        let chol = self.information(pi).cholesky()?;
        let solved: Vec<DVector<f64>> = self.contrasts.iter().map(|c| chol.solve(c)).collect();
        let phi = self.contrasts.iter().zip(&solved).zip(&self.weights).map(|((c, s), w)| w * c.dot(s)).sum();
        let g: Vec<Vec<f64>> = self.rows.iter().map(|x| solved.iter().map(|s| x.dot(s)).collect()).collect();
        let d = g.iter().map(|ge| ge.iter().zip(&self.weights).map(|(x, w)| w * x * x).sum()).collect();
        Some(Evaluation { phi, d, g, chol })
    }
}

struct Evaluation {
    phi: f64,
    d: Vec<f64>,
    g: Vec<Vec<f64>>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Evaluation {
    /// Largest relative excess of a slide's derivative over Φ; ≤ 0 at the optimum.
    fn gap(&self) -> f64 {
        self.d.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) / self.phi - 1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions {
    /// Relative tolerance on the first-order certificate.
    pub tol: f64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    /// Worker threads for the restarts; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { tol: 1e-10, restarts: 20, max_iterations: 100_000, seed: 0, jobs: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureOptimum {
    pub measure: DesignMeasure,
    pub criterion: f64,
    /// max_s d_s / Φ − 1 at the returned measure.
    pub certificate_gap: f64,
}

/// Φ of a measure.
pub fn measure_criterion(
    m: &DesignMeasure,
    model: &ModelSpec,
    weights: &CriterionWeights,
    parametrization: Parametrization,
) -> Result<f64> {
    let problem = Problem::new(m.layout(), model, weights, parametrization)?;
    problem.criterion(&problem.masses_of(m)?)
}

/// A w-optimal measure over all candidate slides, certified by the first-order check.
pub fn optimize_measure(
    layout: &FactorLayout,
    model: &ModelSpec,
    weights: &CriterionWeights,
    parametrization: Parametrization,
    options: &OptimizerOptions,
) -> Result<MeasureOptimum> {
    let problem = Problem::new(layout, model, weights, parametrization)?;
    let runs: Vec<Option<(Vec<f64>, f64, f64)>> = with_jobs(options.jobs, || {
        (0..options.restarts.max(1))
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(r as u64));
                let start: Vec<f64> = if r == 0 {
                    vec![1.0 / problem.rows.len() as f64; problem.rows.len()]
                } else {
                    let raw: Vec<f64> =
                        (0..problem.rows.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                    let total: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / total).collect()
                };
                solve(&problem, start, options)
            })
            .collect()
    })?;
    let best = runs.into_iter().flatten().filter(|(_, _, gap)| *gap <= options.tol).min_by(|a, b| {
        let tie = (a.1 - b.1).abs() <= 1e-12 * a.1.abs().max(b.1.abs());
        if tie {
            a.0.iter().zip(&b.0).map(|(x, y)| y.total_cmp(x)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        } else {
            a.1.total_cmp(&b.1)
        }
    });
    match best {
        Some((pi, phi, gap)) => {
            Ok(MeasureOptimum { measure: problem.measure(&pi), criterion: phi, certificate_gap: gap })
        }
        None => Err(Error::NonConvergence(format!(
            "no restart met the optimality certificate within {} iterations",
            options.max_iterations
        ))),
    }
}

fn normalize(pi: &mut [f64]) {
    for x in pi.iter_mut() {
        if *x < MASS_FLOOR {
            *x = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for x in pi.iter_mut() {
        *x /= total;
    }
}

/// One restart: multiplicative updates until the support settles, then Newton steps on
/// the support with slides entering or leaving as the certificate dictates. Returns the
/// masses, Φ and the certificate gap.
fn solve(problem: &Problem, mut pi: Vec<f64>, options: &OptimizerOptions) -> Option<(Vec<f64>, f64, f64)> {
    let mut iterations = 0;
    let mut eval = problem.evaluate(&pi)?;
    // π_s ← π_s (d_s / Φ)^½ decreases Φ monotonically
    while iterations < options.max_iterations && eval.gap() > 1e-3 {
        for (x, d) in pi.iter_mut().zip(&eval.d) {
            *x *= (d / eval.phi).sqrt();
        }
        normalize(&mut pi);
        eval = problem.evaluate(&pi)?;
        iterations += 1;
    }

    let mut support: Vec<bool> = pi.iter().map(|&x| x > 1e-6).collect();
    for (x, keep) in pi.iter_mut().zip(&support) {
        if !keep {
            *x = 0.0;
        }
    }
    normalize(&mut pi);
    let mut fallback = false;
    while iterations < options.max_iterations {
        iterations += 1;
        eval = match problem.evaluate(&pi) {
            Some(e) => e,
            None => {
                fallback = true;
                break;
            }
        };
        let active: Vec<usize> = (0..pi.len()).filter(|&s| support[s]).collect();
        let step = newton_step(problem, &eval, &active);
        let Some(step) = step else {
            fallback = true;
            break;
        };
        let size = step.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if size < 1e-13 || !line_search(problem, &eval, &active, &step, &mut pi, &mut support) {
            // stationary on the support: let the worst outside slide in, or stop
            let (worst, excess) = (0..pi.len())
                .filter(|&s| !support[s])
                .map(|s| (s, eval.d[s] / eval.phi - 1.0))
                .fold((usize::MAX, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            if worst == usize::MAX || excess <= options.tol * 0.1 {
                break;
            }
            support[worst] = true;
            pi[worst] = 1e-4;
            normalize(&mut pi);
        }
    }
    if fallback {
        // singular support: continue with plain multiplicative updates
        pi.iter_mut().for_each(|x| *x = x.max(1e-6));
        normalize(&mut pi);
        eval = problem.evaluate(&pi)?;
        while iterations < options.max_iterations && eval.gap() > options.tol {
            for (x, d) in pi.iter_mut().zip(&eval.d) {
                *x *= (d / eval.phi).sqrt();
            }
            normalize(&mut pi);
            eval = problem.evaluate(&pi)?;
            iterations += 1;
        }
    }
    normalize(&mut pi);
    let eval = problem.evaluate(&pi)?;
    Some((pi, eval.phi, eval.gap()))
}

/// Moves along `step` as far as feasibility and descent allow, dropping a slide whose
/// mass reaches zero. False when no decrease was found.
fn line_search(
    problem: &Problem,
    eval: &Evaluation,
    active: &[usize],
    step: &[f64],
    pi: &mut Vec<f64>,
    support: &mut [bool],
) -> bool {
    let mut t = 1.0f64;
    let mut blocking = None;
    for (k, &s) in active.iter().enumerate() {
        if step[k] < 0.0 && pi[s] + t * step[k] < 0.0 {
            t = -pi[s] / step[k];
            blocking = Some(s);
        }
    }
    for _ in 0..60 {
        let mut trial = pi.clone();
        for (k, &s) in active.iter().enumerate() {
            trial[s] = (trial[s] + t * step[k]).max(0.0);
        }
        if let Some(b) = blocking {
            trial[b] = 0.0;
        }
        let total: f64 = trial.iter().sum();
        trial.iter_mut().for_each(|x| *x /= total);
        if let Some(e) = problem.evaluate(&trial) {
            if e.phi <= eval.phi * (1.0 + 1e-15) {
                if let Some(b) = blocking {
                    support[b] = false;
                }
                *pi = trial;
                return true;
            }
        }
        t *= 0.5;
        blocking = None;
    }
    false
}

/// Newton direction for Φ restricted to the active slides and the hyperplane Σπ = 1.
/// `H_st = 2 (x_s' M⁻¹ x_t) Σ_e w_e g_se g_te`, gradient `−d_s`.
fn newton_step(problem: &Problem, eval: &Evaluation, active: &[usize]) -> Option<Vec<f64>> {
    let k = active.len();
    let solved: Vec<DVector<f64>> = active.iter().map(|&s| eval.chol.solve(&problem.rows[s])).collect();
    let mut kkt = DMatrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for a in 0..k {
        let s = active[a];
        for b in 0..k {
            let t = active[b];
            let inner = problem.rows[s].dot(&solved[b]);
            let coupling: f64 =
                (0..problem.weights.len()).map(|e| problem.weights[e] * eval.g[s][e] * eval.g[t][e]).sum();
            kkt[(a, b)] = 2.0 * inner * coupling;
        }
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
        rhs[a] = eval.d[s];
    }
    let ridge = 1e-14 * (0..k).map(|a| kkt[(a, a)].abs()).fold(0.0, f64::max).max(1e-300);
    for a in 0..k {
        kkt[(a, a)] += ridge;
    }
    let sol = kkt.lu().solve(&rhs)?;
    Some(sol.iter().take(k).copied().collect())
}

/// `ξ = ¼(√(w² + 2w) − w)`.
pub fn xi(w: f64) -> f64 {
    0.25 * ((w * w + 2.0 * w).sqrt() - w)
}

/// `(½ − ξ, ½ − ξ, 0, 0, ξ, ξ)` on the 2×2 slides.
pub fn closed_form_pi0(w: f64) -> Result<DesignMeasure> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidInput(format!("w must be positive, got {w}")));
    }
    let x = xi(w);
    DesignMeasure::from_masses_2x2([0.5 - x, 0.5 - x, 0.0, 0.0, x, x])
}

/// Optimal 2×2 measure under the orthogonal parametrization: `(α, α, ½ − 2α, ½ − 2α, α, α)`
/// with `α = ½√w / (2 + √w)` below `w = 4`, and equal mass on the four adjacent pairs from there on.
pub fn closed_form_orth(w: f64) -> Result<DesignMeasure> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidInput(format!("w must be positive, got {w}")));
    }
    if w >= 4.0 {
        return DesignMeasure::from_masses_2x2([0.25, 0.25, 0.0, 0.0, 0.25, 0.25]);
    }
    let a = 0.5 * w.sqrt() / (2.0 + w.sqrt());
    DesignMeasure::from_masses_2x2([a, a, 0.5 - 2.0 * a, 0.5 - 2.0 * a, a, a])
}

/// What an efficiency is computed for.
#[derive(Clone, Debug)]
pub enum Candidate<'a> {
    Design(&'a Design),
    Measure(&'a DesignMeasure),
}

/// Φ of a design read as a measure, `N · criterion`, from exact arithmetic.
fn candidate_criterion(
    candidate: &Candidate<'_>,
    model: &ModelSpec,
    weights: &CriterionWeights,
    parametrization: Parametrization,
) -> Result<f64> {
    match candidate {
        Candidate::Design(d) => {
            let exact = criterion_value_with(d, model, weights, parametrization)?;
            Ok((exact * Rational::integer(d.len() as i64)).to_f64())
        }
        Candidate::Measure(m) => measure_criterion(m, model, weights, parametrization),
    }
}

/// `100 · Φ(optimal measure) / Φ(candidate)`, in percent.
pub fn efficiency(
    candidate: Candidate<'_>,
    model: &ModelSpec,
    weights: &CriterionWeights,
    parametrization: Parametrization,
    options: &OptimizerOptions,
) -> Result<f64> {
    let layout = match &candidate {
        Candidate::Design(d) => d.layout(),
        Candidate::Measure(m) => m.layout(),
    };
    let optimum = optimize_measure(layout, model, weights, parametrization, options)?;
    let own = candidate_criterion(&candidate, model, weights, parametrization)?;
    Ok((100.0 * optimum.criterion / own).min(100.0))
}

/// Efficiency of the homoscedastic optimum `π₀(w)` under a heteroscedastic 2×2 pattern.
pub fn hetero_efficiency(pattern: &[Rational], w: &Rational, options: &OptimizerOptions) -> Result<f64> {
    let layout: FactorLayout = "2x2".parse().expect("2x2");
    let model = ModelSpec::plain().heteroscedastic(pattern.to_vec())?;
    let weights = CriterionWeights::two_factor(&layout, w.clone())?;
    let pi0 = closed_form_pi0(w.to_f64())?;
    efficiency(Candidate::Measure(&pi0), &model, &weights, Parametrization::Baseline, options)
}

/// Frequencies nearest to `N · π`, then corrected to total `N` by largest remainders
/// (ties to the earlier slide). Fails if the result leaves an effect inestimable in the
/// model without dye effects.
pub fn round_measure(m: &DesignMeasure, slides: usize) -> Result<Design> {
    if slides == 0 {
        return Err(Error::InvalidInput("a design needs at least one slide".into()));
    }
    let n = slides as f64;
    let targets: Vec<f64> = m.masses().iter().map(|(_, p)| n * p).collect();
    let mut counts: Vec<i64> = targets.iter().map(|t| t.round() as i64).collect();
    let mut total: i64 = counts.iter().sum();
    while total != slides as i64 {
        let remainders: Vec<f64> = targets.iter().zip(&counts).map(|(t, &c)| t - c as f64).collect();
        let pick = if total < slides as i64 {
            (0..counts.len()).fold(None, |best: Option<usize>, i| match best {
                Some(b) if remainders[b] >= remainders[i] => Some(b),
                _ => Some(i),
            })
        } else {
            (0..counts.len()).filter(|&i| counts[i] > 0).fold(None, |best: Option<usize>, i| match best {
                Some(b) if remainders[b] <= remainders[i] => Some(b),
                _ => Some(i),
            })
        };
        let i = pick.expect("a slide to adjust");
        if total < slides as i64 {
            counts[i] += 1;
            total += 1;
        } else {
            counts[i] -= 1;
            total -= 1;
        }
    }
    let mut design_slides = Vec::with_capacity(slides);
    for ((s, _), &c) in m.masses().iter().zip(&counts) {
        design_slides.extend(std::iter::repeat_n(s.clone(), c as usize));
    }
    let design = Design::new(m.layout().clone(), design_slides)?;
    variance_report(&design, &ModelSpec::plain())?;
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(w: i64) -> CriterionWeights {
        CriterionWeights::two_factor(&"2x2".parse().unwrap(), Rational::integer(w)).unwrap()
    }

    #[test]
    fn xi_values() {
        assert!((xi(2.0) - 0.207107).abs() < 1e-6);
        assert!((xi(2.0 / 3.0) - 1.0 / 6.0).abs() < 1e-12);
        assert!((xi(1e8) - 0.25).abs() < 1e-6);
    }

    #[test]
    fn rounding() {
        let pi0 = closed_form_pi0(2.0).unwrap();
        assert_eq!(round_measure(&pi0, 22).unwrap().frequencies_2x2().unwrap(), [6, 6, 0, 0, 5, 5]);
        assert_eq!(round_measure(&pi0, 10).unwrap().frequencies_2x2().unwrap(), [3, 3, 0, 0, 2, 2]);
        let tilde = closed_form_orth(9.0).unwrap();
        assert_eq!(round_measure(&tilde, 8).unwrap().frequencies_2x2().unwrap(), [2, 2, 0, 0, 2, 2]);
        let lopsided = DesignMeasure::from_masses_2x2([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(round_measure(&lopsided, 4), Err(Error::NotEstimable(_))));
    }

    #[test]
    fn scaling_identity() {
        let d = Design::from_frequencies_2x2([2, 2, 0, 0, 1, 1]).unwrap();
        let m = DesignMeasure::from_design(&d);
        let phi = measure_criterion(&m, &ModelSpec::plain(), &weights(1), Parametrization::Baseline).unwrap();
        assert!((phi - 6.0 * 19.0 / 12.0).abs() < 1e-12, "{phi}");
    }

    #[test]
    fn optimizer_recovers_pi0() {
        let opt = optimize_measure(
            &"2x2".parse().unwrap(),
            &ModelSpec::plain(),
            &weights(2),
            Parametrization::Baseline,
            &OptimizerOptions { restarts: 4, ..Default::default() },
        )
        .unwrap();
        let got = opt.measure.masses_2x2().unwrap();
        let want = closed_form_pi0(2.0).unwrap().masses_2x2().unwrap();
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-6, "{got:?} vs {want:?}");
        }
        assert!(opt.certificate_gap <= 1e-10);
    }

    #[test]
    fn six_slide_order() {
        let m = DesignMeasure::from_masses_2x2([0.1, 0.1, 0.3, 0.2, 0.15, 0.15]).unwrap();
        assert_eq!(m.masses()[2].0.to_string(), "(11, 00)");
        assert_eq!(m.masses_2x2().unwrap(), [0.1, 0.1, 0.3, 0.2, 0.15, 0.15]);
    }

    #[test]
    fn json_round_trip() {
        let m = closed_form_pi0(2.0).unwrap();
        let back = DesignMeasure::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["layout"], serde_json::json!([2, 2]));
        assert_eq!(v["mass"][0]["red"], serde_json::json!([0, 1]));
    }
}
