//! Observation models for slides and exact BLUE variances of the factorial effects.
//!
//! A slide `(red, green)` observes the log-ratio `τ_red − τ_green`, plus
//! `λ_red + λ_green` under the general dye model or a single `η` under the reduced
//! dye model. Variances are reported in units of σ² for homoscedastic errors and δ²
//! (measurement error) for the heteroscedastic and technical-replication structures.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorial::{baseline_contrast, ContrastVector, Design, EffectIndex, FactorLayout};
use crate::linalg::{invert, is_positive_definite, psd_quadratic_forms, Matrix};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum DyeStructure {
    /// No dye effects: every λ is zero.
    #[default]
    None,
    /// One nuisance parameter λ per treatment, entering as `λ_red + λ_green`.
    GeneralDye,
    /// A single nuisance parameter η common to every slide.
    ReducedDye,
}

impl DyeStructure {
    /// Whether the red/green orientation of a slide can change the analysis.
    pub fn is_dye_sensitive(self) -> bool {
        !matches!(self, DyeStructure::None)
    }

    pub fn nuisance_count(self, v: usize) -> usize {
        match self {
            DyeStructure::None => 0,
            DyeStructure::GeneralDye => v,
            DyeStructure::ReducedDye => 1,
        }
    }
}

impl FromStr for DyeStructure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" | "none" => Ok(DyeStructure::None),
            "dye" | "general-dye" => Ok(DyeStructure::GeneralDye),
            "dye-reduced" | "reduced-dye" => Ok(DyeStructure::ReducedDye),
            _ => Err(Error::InvalidInput(format!("unknown model `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Noise {
    #[default]
    Homoscedastic,
    /// Biological variance ratios γ̃² = γ²/δ², one per treatment in lexicographic order.
    Heteroscedastic(Vec<Rational>),
}

/// Subject labels for the red and green sample of every slide. A label shared by two
/// slides means the same biological subject was hybridized twice (technical replication).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReplicationPlan {
    subjects: Vec<[u32; 2]>,
}

impl ReplicationPlan {
    pub fn new(subjects: Vec<[u32; 2]>) -> Self {
        ReplicationPlan { subjects }
    }

    /// Every sample is a distinct subject.
    pub fn all_biological(design: &Design) -> Self {
        let subjects = (0..design.len() as u32).map(|k| [2 * k, 2 * k + 1]).collect();
        ReplicationPlan { subjects }
    }

    pub fn subjects(&self) -> &[[u32; 2]] {
        &self.subjects
    }

    pub fn is_all_biological(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.subjects.iter().flatten().all(|s| seen.insert(*s))
    }

    /// A subject may only carry one treatment, and the plan must cover every slide.
    pub fn validate(&self, design: &Design) -> Result<()> {
        if self.subjects.len() != design.len() {
            return Err(Error::InvalidInput(format!(
                "replication plan covers {} slides, design has {}",
                self.subjects.len(),
                design.len()
            )));
        }
        let mut owner = HashMap::new();
        for (pair, slide) in self.subjects.iter().zip(design.slides()) {
            for (subject, t) in [(pair[0], &slide.red), (pair[1], &slide.green)] {
                if let Some(prev) = owner.insert(subject, t) {
                    if prev != t {
                        return Err(Error::InvalidInput(format!(
                            "subject {subject} is attached to both {prev} and {t}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Technical replication with a known variance ratio `r = γ²/δ²`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replication {
    pub plan: ReplicationPlan,
    pub ratio: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ModelSpec {
    pub dye: DyeStructure,
    pub noise: Noise,
    pub replication: Option<Replication>,
}

impl ModelSpec {
    pub fn plain() -> Self {
        ModelSpec::default()
    }

    pub fn general_dye() -> Self {
        ModelSpec { dye: DyeStructure::GeneralDye, ..ModelSpec::default() }
    }

    pub fn reduced_dye() -> Self {
        ModelSpec { dye: DyeStructure::ReducedDye, ..ModelSpec::default() }
    }

    pub fn with_dye(dye: DyeStructure) -> Self {
        ModelSpec { dye, ..ModelSpec::default() }
    }

    pub fn heteroscedastic(mut self, ratios: Vec<Rational>) -> Result<Self> {
        if ratios.iter().any(Rational::is_negative) {
            return Err(Error::InvalidInput("variance ratios must be nonnegative".into()));
        }
        if self.replication.is_some() {
            return Err(Error::InvalidInput("replication requires a common biological variance".into()));
        }
        self.noise = Noise::Heteroscedastic(ratios);
        Ok(self)
    }

    pub fn replicated(mut self, plan: ReplicationPlan, ratio: Rational) -> Result<Self> {
        if ratio.is_negative() {
            return Err(Error::InvalidInput("variance ratio must be nonnegative".into()));
        }
        if self.noise != Noise::Homoscedastic {
            return Err(Error::InvalidInput("replication requires a common biological variance".into()));
        }
        self.replication = Some(Replication { plan, ratio });
        Ok(self)
    }

    pub fn parameter_count(&self, layout: &FactorLayout) -> usize {
        let v = layout.treatment_count();
        v + self.dye.nuisance_count(v)
    }

    fn validate(&self, design: &Design) -> Result<()> {
        if let Noise::Heteroscedastic(ratios) = &self.noise {
            if ratios.len() != design.layout().treatment_count() {
                return Err(Error::InvalidInput(format!(
                    "{} variance ratios for {} treatments",
                    ratios.len(),
                    design.layout().treatment_count()
                )));
            }
        }
        if let Some(rep) = &self.replication {
            rep.plan.validate(design)?;
        }
        Ok(())
    }
}

/// Nonzero entries `(column, value)` of the model row for a slide given by treatment
/// indices. Columns are τ (v of them) followed by the nuisance block.
pub fn slide_row(dye: DyeStructure, v: usize, red: usize, green: usize) -> ([(usize, i8); 4], usize) {
    let mut entries = [(0usize, 0i8); 4];
    entries[0] = (red, 1);
    entries[1] = (green, -1);
    let len = match dye {
        DyeStructure::None => 2,
        DyeStructure::GeneralDye => {
            entries[2] = (v + red, 1);
            entries[3] = (v + green, 1);
            4
        }
        DyeStructure::ReducedDye => {
            entries[2] = (v, 1);
            3
        }
    };
    (entries, len)
}

/// One row per slide over the τ block and the nuisance block of `model`.
pub fn model_rows(design: &Design, model: &ModelSpec) -> Matrix<Rational> {
    let layout = design.layout();
    let v = layout.treatment_count();
    let mut x = Matrix::zeros(design.len(), model.parameter_count(layout));
    for (i, s) in design.slides().iter().enumerate() {
        let (entries, len) = slide_row(model.dye, v, layout.index_of(&s.red), layout.index_of(&s.green));
        for &(col, value) in &entries[..len] {
            x.set(i, col, Rational::integer(value as i64));
        }
    }
    x
}

/// Variance of a slide's log-ratio under heteroscedastic noise, in δ² units.
pub fn heteroscedastic_slide_variance(ratios: &[Rational], red: usize, green: usize) -> Rational {
    &(&ratios[red] + &ratios[green]) + &Rational::one()
}

/// Covariance matrix of the slide log-ratios in the model's units.
pub fn observation_covariance(design: &Design, model: &ModelSpec) -> Result<Matrix<Rational>> {
    model.validate(design)?;
    let layout = design.layout();
    let n = design.len();
    let mut sigma = Matrix::identity(n);
    if let Noise::Heteroscedastic(ratios) = &model.noise {
        for (i, s) in design.slides().iter().enumerate() {
            let var = heteroscedastic_slide_variance(ratios, layout.index_of(&s.red), layout.index_of(&s.green));
            sigma.set(i, i, var);
        }
    }
    if let Some(rep) = &model.replication {
        let r = &rep.ratio;
        let diag = &(r + r) + &Rational::one();
        let subjects = rep.plan.subjects();
        for i in 0..n {
            sigma.set(i, i, diag.clone());
            for j in 0..i {
                // +1 per shared subject on the same dye side, −1 on opposite sides
                let mut shared = 0i64;
                for (pi, si) in subjects[i].iter().enumerate() {
                    for (pj, sj) in subjects[j].iter().enumerate() {
                        if si == sj {
                            shared += if pi == pj { 1 } else { -1 };
                        }
                    }
                }
                let c = r * &Rational::integer(shared);
                sigma.set(i, j, c.clone());
                sigma.set(j, i, c);
            }
        }
        if !is_positive_definite(&sigma) {
            return Err(Error::IndefiniteCovariance);
        }
    }
    Ok(sigma)
}

/// `X' Σ⁻¹ X` over all parameters (τ and nuisance).
pub fn information_matrix(design: &Design, model: &ModelSpec) -> Result<Matrix<Rational>> {
    let x = model_rows(design, model);
    let sigma = observation_covariance(design, model)?;
    let weighted = if model.replication.is_some() {
        let inv = invert(&sigma).ok_or(Error::IndefiniteCovariance)?;
        inv.mul_matrix(&x)
    } else {
        let mut w = x.clone();
        for i in 0..x.rows() {
            let d = sigma.get(i, i).recip();
            for j in 0..x.cols() {
                if !x.get(i, j).is_zero() {
                    w.set(i, j, x.get(i, j) * &d);
                }
            }
        }
        w
    };
    Ok(x.transpose().mul_matrix(&weighted))
}

fn padded(contrast: &ContrastVector, p: usize) -> Vec<Rational> {
    let mut c = contrast.coefficients().to_vec();
    c.resize(p, Rational::zero());
    c
}

fn check_layout(design: &Design, contrast: &ContrastVector) -> Result<()> {
    if contrast.layout() != design.layout() {
        return Err(Error::InvalidInput(format!(
            "contrast on {} used with a design on {}",
            contrast.layout(),
            design.layout()
        )));
    }
    Ok(())
}

/// BLUE variances for several contrasts at once; `None` marks an inestimable contrast.
pub fn blue_variances(
    design: &Design,
    model: &ModelSpec,
    contrasts: &[ContrastVector],
) -> Result<Vec<Option<Rational>>> {
    for c in contrasts {
        check_layout(design, c)?;
    }
    let info = information_matrix(design, model)?;
    let p = info.rows();
    let vectors: Vec<Vec<Rational>> = contrasts.iter().map(|c| padded(c, p)).collect();
    Ok(psd_quadratic_forms(&info, &vectors))
}

/// Variance of the generalized-least-squares estimator of `contrast`.
pub fn blue_variance(design: &Design, model: &ModelSpec, contrast: &ContrastVector) -> Result<Rational> {
    blue_variances(design, model, std::slice::from_ref(contrast))?
        .pop()
        .flatten()
        .ok_or_else(|| Error::NotEstimable(vec!["contrast".into()]))
}

pub fn is_estimable(design: &Design, model: &ModelSpec, contrast: &ContrastVector) -> Result<bool> {
    Ok(blue_variances(design, model, std::slice::from_ref(contrast))?[0].is_some())
}

/// Per-effect BLUE variances for every baseline effect θ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarianceReport {
    layout: FactorLayout,
    entries: Vec<(EffectIndex, Rational)>,
}

impl VarianceReport {
    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    pub fn entries(&self) -> &[(EffectIndex, Rational)] {
        &self.entries
    }

    pub fn values(&self) -> Vec<Rational> {
        self.entries.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn get(&self, effect: &EffectIndex) -> Option<&Rational> {
        self.entries.iter().find(|(e, _)| e == effect).map(|(_, v)| v)
    }

    /// Looks up an effect by its label, e.g. `"11"`. Panics on unknown labels.
    pub fn value(&self, label: &str) -> &Rational {
        let e: EffectIndex = label.parse().expect("effect label");
        self.get(&e).unwrap_or_else(|| panic!("no effect {label}"))
    }

    /// Componentwise ≤ with at least one strict inequality.
    pub fn dominates(&self, other: &VarianceReport) -> bool {
        dominates(&self.values(), &other.values())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("effect,order,variance\n");
        for (e, v) in &self.entries {
            let _ = writeln!(out, "{e},{},{v}", e.order());
        }
        out
    }
}

/// Componentwise ≤ with at least one strict inequality.
pub fn dominates(a: &[Rational], b: &[Rational]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

pub fn variance_report(design: &Design, model: &ModelSpec) -> Result<VarianceReport> {
    let layout = design.layout();
    let effects = layout.effects();
    let contrasts = effects.iter().map(|e| baseline_contrast(layout, e)).collect::<Result<Vec<_>>>()?;
    let values = blue_variances(design, model, &contrasts)?;
    let missing: Vec<String> =
        effects.iter().zip(&values).filter(|(_, v)| v.is_none()).map(|(e, _)| e.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::NotEstimable(missing));
    }
    Ok(VarianceReport {
        layout: layout.clone(),
        entries: effects.into_iter().zip(values.into_iter().map(Option::unwrap)).collect(),
    })
}

/// Whether every baseline effect θ is estimable.
pub fn all_effects_estimable(design: &Design, model: &ModelSpec) -> Result<bool> {
    match variance_report(design, model) {
        Ok(_) => Ok(true),
        Err(Error::NotEstimable(_)) => Ok(false),
        Err(e) => Err(e),
    }
}
