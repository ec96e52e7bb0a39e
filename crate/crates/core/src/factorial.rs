//! Factorial layouts, treatment combinations, slides and designs, plus the contrast
//! algebra of the baseline and (2×2) orthogonal parametrizations.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// An `s₁ × … × sₙ` factorial with every `sⱼ ≥ 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct FactorLayout {
    levels: Vec<u8>,
}

impl FactorLayout {
    pub fn new(levels: Vec<u8>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidLayout("at least one factor is required".into()));
        }
        if let Some(bad) = levels.iter().find(|&&s| s < 2) {
            return Err(Error::InvalidLayout(format!("factor with {bad} levels")));
        }
        let v = levels.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s as usize));
        match v {
            Some(v) if v <= 4096 => Ok(FactorLayout { levels }),
            _ => Err(Error::InvalidLayout("too many treatment combinations".into())),
        }
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    /// `n`, the number of factors.
    pub fn factor_count(&self) -> usize {
        self.levels.len()
    }

    /// `v = ∏ sⱼ`.
    pub fn treatment_count(&self) -> usize {
        self.levels.iter().map(|&s| s as usize).product()
    }

    pub fn is_two_by_two(&self) -> bool {
        self.levels == [2, 2]
    }

    pub fn contains(&self, t: &Treatment) -> bool {
        t.0.len() == self.levels.len() && t.0.iter().zip(&self.levels).all(|(&i, &s)| i < s)
    }

    pub fn check(&self, t: &Treatment) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::InvalidTreatment(format!("{t} is not a treatment of the {self} layout")))
        }
    }

    /// Position of `t` in lexicographic order.
    pub fn index_of(&self, t: &Treatment) -> usize {
        debug_assert!(self.contains(t));
        t.0.iter().zip(&self.levels).fold(0usize, |acc, (&i, &s)| acc * s as usize + i as usize)
    }

    pub fn treatment_at(&self, mut index: usize) -> Treatment {
        let mut digits = vec![0u8; self.levels.len()];
        for (d, &s) in digits.iter_mut().zip(&self.levels).rev() {
            *d = (index % s as usize) as u8;
            index /= s as usize;
        }
        Treatment(digits)
    }

    /// All `v` treatment combinations in lexicographic order.
    pub fn treatments(&self) -> Vec<Treatment> {
        (0..self.treatment_count()).map(|i| self.treatment_at(i)).collect()
    }

    /// The `v − 1` factorial effects, in lexicographic order.
    pub fn effects(&self) -> Vec<EffectIndex> {
        (1..self.treatment_count()).map(|i| EffectIndex(self.treatment_at(i))).collect()
    }

    pub fn baseline(&self) -> Treatment {
        Treatment(vec![0; self.levels.len()])
    }

    /// Reorders factors: factor `k` of the result is factor `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<FactorLayout> {
        check_permutation(order, self.levels.len())?;
        FactorLayout::new(order.iter().map(|&k| self.levels[k]).collect())
    }
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidInput(format!("permutation of length {} for {n} factors", order.len())));
    }
    for &k in order {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(Error::InvalidInput(format!("{order:?} is not a permutation of 0..{n}")));
        }
    }
    Ok(())
}

impl fmt::Display for FactorLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.levels.iter().map(u8::to_string).collect();
        f.write_str(&parts.join("x"))
    }
}

impl FromStr for FactorLayout {
    type Err = Error;

    /// Parses `2x3`, `2x2x3` (also accepts `×` and `*` as separators).
    fn from_str(s: &str) -> Result<Self> {
        let levels = s
            .trim()
            .split(['x', 'X', '×', '*'])
            .map(|p| p.trim().parse::<u8>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidLayout(format!("cannot parse `{s}`")))?;
        FactorLayout::new(levels)
    }
}

impl<'de> Deserialize<'de> for FactorLayout {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let levels = Vec::<u8>::deserialize(d)?;
        FactorLayout::new(levels).map_err(serde::de::Error::custom)
    }
}

/// A treatment combination `i₁…iₙ`; level 0 of every factor is its baseline.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Treatment(Vec<u8>);

impl Treatment {
    pub fn new(levels: Vec<u8>) -> Self {
        Treatment(levels)
    }

    pub fn levels(&self) -> &[u8] {
        &self.0
    }

    pub fn is_baseline(&self) -> bool {
        self.0.iter().all(|&i| i == 0)
    }

    /// Number of nonzero components.
    pub fn order(&self) -> usize {
        self.0.iter().filter(|&&i| i != 0).count()
    }

    /// Sets the first nonzero entry to zero. `None` for the baseline combination.
    pub fn rho(&self) -> Option<Treatment> {
        let first = self.0.iter().position(|&i| i != 0)?;
        let mut out = self.0.clone();
        out[first] = 0;
        Some(Treatment(out))
    }

    /// Treatment of the permuted layout: component `k` is component `order[k]` here.
    pub fn permuted(&self, order: &[usize]) -> Treatment {
        Treatment(order.iter().map(|&k| self.0[k]).collect())
    }

    /// Inverse of [`Treatment::permuted`].
    pub fn unpermuted(&self, order: &[usize]) -> Treatment {
        let mut out = vec![0; self.0.len()];
        for (k, &src) in order.iter().enumerate() {
            out[src] = self.0[k];
        }
        Treatment(out)
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&i| i < 10) {
            for i in &self.0 {
                write!(f, "{i}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(u8::to_string).collect();
            f.write_str(&parts.join("."))
        }
    }
}

impl FromStr for Treatment {
    type Err = Error;

    /// `012` (one digit per factor) or `0.1.12` when some level exceeds 9.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidTreatment(format!("cannot parse `{s}`"));
        if s.is_empty() {
            return Err(bad());
        }
        let digits = if s.contains('.') {
            s.split('.').map(|p| p.parse::<u8>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?
        } else {
            s.chars().map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad)).collect::<Result<Vec<_>>>()?
        };
        Ok(Treatment(digits))
    }
}

/// A treatment combination other than the baseline, naming the effect θ with the same
/// subscript. Its order is the number of factors involved.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct EffectIndex(Treatment);

impl EffectIndex {
    pub fn new(t: Treatment) -> Result<Self> {
        if t.is_baseline() {
            return Err(Error::InvalidTreatment("the all-zero combination is not an effect".into()));
        }
        Ok(EffectIndex(t))
    }

    pub fn treatment(&self) -> &Treatment {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }
}

impl fmt::Display for EffectIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for EffectIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EffectIndex::new(s.parse()?)
    }
}

/// Which family of factorial effects a contrast belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Parametrization {
    #[default]
    Baseline,
    /// Only defined for the 2×2 factorial.
    Orthogonal,
}

impl FromStr for Parametrization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Parametrization::Baseline),
            "orthogonal" => Ok(Parametrization::Orthogonal),
            _ => Err(Error::InvalidInput(format!("unknown parametrization `{s}`"))),
        }
    }
}

/// Linear form in the treatment effects τ, one exact coefficient per treatment in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContrastVector {
    layout: FactorLayout,
    coefficients: Vec<Rational>,
}

impl ContrastVector {
    pub fn new(layout: FactorLayout, coefficients: Vec<Rational>) -> Result<Self> {
        if coefficients.len() != layout.treatment_count() {
            return Err(Error::InvalidInput("coefficient count does not match layout".into()));
        }
        if !coefficients.iter().sum::<Rational>().is_zero() {
            return Err(Error::InvalidInput("coefficients of a contrast must sum to zero".into()));
        }
        Ok(ContrastVector { layout, coefficients })
    }

    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    pub fn coefficient(&self, t: &Treatment) -> &Rational {
        &self.coefficients[self.layout.index_of(t)]
    }

    pub fn scaled(&self, k: &Rational) -> ContrastVector {
        ContrastVector { layout: self.layout.clone(), coefficients: self.coefficients.iter().map(|c| c * k).collect() }
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|c| !c.is_zero()).count()
    }

    pub fn for_effect(
        layout: &FactorLayout,
        effect: &EffectIndex,
        parametrization: Parametrization,
    ) -> Result<ContrastVector> {
        match parametrization {
            Parametrization::Baseline => baseline_contrast(layout, effect),
            Parametrization::Orthogonal => orthogonal_contrast_2x2(layout, effect),
        }
    }
}

/// θ for a baseline-parametrized effect: the alternating sum over every way of zeroing a
/// subset of the effect's nonzero positions, signed by the number of positions zeroed.
pub fn baseline_contrast(layout: &FactorLayout, effect: &EffectIndex) -> Result<ContrastVector> {
    layout.check(effect.treatment())?;
    let levels = effect.treatment().levels();
    let support: Vec<usize> = (0..levels.len()).filter(|&j| levels[j] != 0).collect();
    let u = support.len();
    let mut coefficients = vec![Rational::zero(); layout.treatment_count()];
    for mask in 0u32..(1 << u) {
        let mut t = levels.to_vec();
        for (bit, &pos) in support.iter().enumerate() {
            if mask & (1 << bit) == 0 {
                t[pos] = 0;
            }
        }
        let kept = mask.count_ones() as usize;
        let sign = if (u - kept).is_multiple_of(2) { 1 } else { -1 };
        coefficients[layout.index_of(&Treatment(t))] = Rational::integer(sign);
    }
    ContrastVector::new(layout.clone(), coefficients)
}

/// The orthogonal-parametrization counterpart θ* of a 2×2 effect.
pub fn orthogonal_contrast_2x2(layout: &FactorLayout, effect: &EffectIndex) -> Result<ContrastVector> {
    if !layout.is_two_by_two() {
        return Err(Error::Unsupported(format!(
            "orthogonal parametrization is implemented for 2x2 only, not {layout}"
        )));
    }
    layout.check(effect.treatment())?;
    let half = Rational::new(1, 2)?;
    let e = effect.treatment().levels();
    let coefficients = layout
        .treatments()
        .iter()
        .map(|t| {
            let negatives = (0..2).filter(|&j| e[j] == 1 && t.0[j] == 0).count();
            if negatives % 2 == 0 {
                half.clone()
            } else {
                -&half
            }
        })
        .collect();
    ContrastVector::new(layout.clone(), coefficients)
}

/// One array: `red` and `green` are the treatments hybridized with each dye.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slide {
    pub red: Treatment,
    pub green: Treatment,
}

impl Slide {
    pub fn new(red: Treatment, green: Treatment) -> Self {
        Slide { red, green }
    }

    pub fn swapped(&self) -> Slide {
        Slide { red: self.green.clone(), green: self.red.clone() }
    }

    /// The lexicographically larger treatment on red.
    pub fn unoriented(&self) -> Slide {
        if self.red >= self.green {
            self.clone()
        } else {
            self.swapped()
        }
    }
}

impl fmt::Display for Slide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.red, self.green)
    }
}

/// A multiset of slides over one layout.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Design {
    layout: FactorLayout,
    slides: Vec<Slide>,
}

#[derive(Deserialize)]
struct RawDesign {
    layout: FactorLayout,
    slides: Vec<Slide>,
}

impl Design {
    pub fn new(layout: FactorLayout, slides: Vec<Slide>) -> Result<Self> {
        if slides.is_empty() {
            return Err(Error::InvalidDesign("a design needs at least one slide".into()));
        }
        for s in &slides {
            layout.check(&s.red)?;
            layout.check(&s.green)?;
            if s.red == s.green {
                return Err(Error::InvalidDesign(format!("slide {s} compares a treatment with itself")));
            }
        }
        Ok(Design { layout, slides })
    }

    /// Builds a design from `(red, green)` labels such as `("11", "01")`.
    pub fn from_labels(layout: &FactorLayout, pairs: &[(&str, &str)]) -> Result<Self> {
        let slides = pairs.iter().map(|(r, g)| Ok(Slide::new(r.parse()?, g.parse()?))).collect::<Result<Vec<_>>>()?;
        Design::new(layout.clone(), slides)
    }

    pub fn layout(&self) -> &FactorLayout {
        &self.layout
    }

    pub fn slides(&self) -> &[Slide] {
        &self.slides
    }

    /// `N`, the number of slides.
    pub fn len(&self) -> usize {
        self.slides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slides.is_empty()
    }

    pub fn canonical(&self, dye_sensitive: bool) -> Design {
        canonicalize(self, dye_sensitive)
    }

    /// Same multiset of slides, ignoring slide order (and orientation unless `dye_sensitive`).
    pub fn same_as(&self, other: &Design, dye_sensitive: bool) -> bool {
        self.layout == other.layout && self.canonical(dye_sensitive) == other.canonical(dye_sensitive)
    }

    /// Appearances of every treatment (lexicographic order), counting both dyes.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.layout.treatment_count()];
        for s in &self.slides {
            deg[self.layout.index_of(&s.red)] += 1;
            deg[self.layout.index_of(&s.green)] += 1;
        }
        deg
    }

    /// Red count minus green count for every treatment.
    pub fn dye_imbalance(&self) -> Vec<i64> {
        let mut out = vec![0; self.layout.treatment_count()];
        for s in &self.slides {
            out[self.layout.index_of(&s.red)] += 1;
            out[self.layout.index_of(&s.green)] -= 1;
        }
        out
    }

    /// Multiplicity of every unordered pair of treatments, keyed by sorted index pair.
    pub fn pair_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for s in &self.slides {
            let a = self.layout.index_of(&s.red);
            let b = self.layout.index_of(&s.green);
            *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        counts
    }

    /// The 2×2 frequency vector `f₁…f₆` over the slides
    /// (01,00),(10,00),(11,00),(10,01),(11,01),(11,10), ignoring dye orientation.
    pub fn frequencies_2x2(&self) -> Result<[usize; 6]> {
        if !self.layout.is_two_by_two() {
            return Err(Error::Unsupported("frequency vectors are defined for 2x2 only".into()));
        }
        let order = unordered_pairs(&self.layout);
        let mut f = [0; 6];
        for s in &self.slides {
            let a = self.layout.index_of(&s.red);
            let b = self.layout.index_of(&s.green);
            let k = order.iter().position(|&(r, g)| (r, g) == (a.max(b), a.min(b))).expect("2x2 pair");
            f[k] += 1;
        }
        Ok(f)
    }

    /// The 2×2 design with frequency vector `f` in the order of [`Design::frequencies_2x2`].
    pub fn from_frequencies_2x2(f: [usize; 6]) -> Result<Design> {
        let layout = FactorLayout::new(vec![2, 2])?;
        let order = unordered_pairs(&layout);
        let mut slides = Vec::new();
        for (k, &(r, g)) in order.iter().enumerate() {
            for _ in 0..f[k] {
                slides.push(Slide::new(layout.treatment_at(r), layout.treatment_at(g)));
            }
        }
        Design::new(layout, slides)
    }

    /// Union as multisets.
    pub fn join(&self, other: &Design) -> Result<Design> {
        if self.layout != other.layout {
            return Err(Error::InvalidDesign("cannot join designs on different layouts".into()));
        }
        let mut slides = self.slides.clone();
        slides.extend(other.slides.iter().cloned());
        Design::new(self.layout.clone(), slides)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("design serializes")
    }

    pub fn from_json(s: &str) -> Result<Design> {
        let raw: RawDesign = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Design::new(raw.layout, raw.slides)
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.slides.iter().map(Slide::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Deterministic representative: slides sorted lexicographically, and, unless
/// `dye_sensitive`, each slide first put in [`Slide::unoriented`] form.
pub fn canonicalize(design: &Design, dye_sensitive: bool) -> Design {
    let mut slides: Vec<Slide> =
        if dye_sensitive { design.slides.clone() } else { design.slides.iter().map(Slide::unoriented).collect() };
    slides.sort();
    Design { layout: design.layout.clone(), slides }
}

/// Unordered treatment pairs as `(red, green)` index pairs with red > green, grouped by
/// green: for 2×2 this is (01,00),(10,00),(11,00),(10,01),(11,01),(11,10).
pub fn unordered_pairs(layout: &FactorLayout) -> Vec<(usize, usize)> {
    let v = layout.treatment_count();
    (0..v).flat_map(|g| (g + 1..v).map(move |r| (r, g))).collect()
}

/// All ordered `(red, green)` index pairs with red ≠ green, lexicographic.
pub fn ordered_pairs(layout: &FactorLayout) -> Vec<(usize, usize)> {
    let v = layout.treatment_count();
    (0..v).flat_map(|r| (0..v).filter(move |&g| g != r).map(move |g| (r, g))).collect()
}
