//! Flag and file parsing shared by the commands.

use std::fs;

use baseline_odx::{
    CriterionWeights, Design, DesignMeasure, DyeStructure, Error, FactorLayout, ModelSpec, Rational, Result, Treatment,
};

use crate::ModelArgs;

pub fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {path}: {e}")))
}

/// A design JSON object, or any object carrying one under `"design"`.
pub fn design_file(path: &str) -> Result<Design> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    match value.get("design") {
        Some(inner) => Design::from_json(&inner.to_string()),
        None => Design::from_json(&text),
    }
}

/// Either a design or a measure; designs are recognized by their `slides` key.
pub enum DesignOrMeasure {
    Design(Design),
    Measure(DesignMeasure),
}

pub fn design_or_measure_file(path: &str) -> Result<DesignOrMeasure> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if value.get("mass").is_some() {
        DesignMeasure::from_json(&text).map(DesignOrMeasure::Measure)
    } else {
        design_file(path).map(DesignOrMeasure::Design)
    }
}

pub fn model(layout: &FactorLayout, args: &ModelArgs) -> Result<ModelSpec> {
    let dye: DyeStructure = args.model.parse()?;
    let spec = ModelSpec::with_dye(dye);
    match &args.hetero {
        None => Ok(spec),
        Some(text) => spec.heteroscedastic(hetero_ratios(layout, text)?),
    }
}

/// `label=value,…` covering every treatment, or `v` values in treatment order.
pub fn hetero_ratios(layout: &FactorLayout, text: &str) -> Result<Vec<Rational>> {
    let v = layout.treatment_count();
    let items: Vec<&str> = text.split(',').map(str::trim).collect();
    if !text.contains('=') {
        if items.len() != v {
            return Err(Error::InvalidInput(format!("{} variance ratios for {v} treatments", items.len())));
        }
        return items.iter().map(|x| x.parse()).collect();
    }
    let mut ratios: Vec<Option<Rational>> = vec![None; v];
    for item in items {
        let (label, value) =
            item.split_once('=').ok_or_else(|| Error::Parse(format!("expected treatment=value, got `{item}`")))?;
        let t: Treatment = label.trim().parse()?;
        layout.check(&t)?;
        let slot = &mut ratios[layout.index_of(&t)];
        if slot.is_some() {
            return Err(Error::InvalidInput(format!("treatment {t} given twice")));
        }
        *slot = Some(value.trim().parse()?);
    }
    ratios
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Error::InvalidInput(format!("no variance ratio for {}", layout.treatment_at(i)))))
        .collect()
}

/// `--w` or `--weights`, defaulting to w = 1.
pub fn weights(layout: &FactorLayout, w: Option<&str>, list: Option<&str>) -> Result<CriterionWeights> {
    CriterionWeights::parse(layout, list.or(w).unwrap_or("1"))
}

pub fn permutation(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| Error::Parse(format!("factor index `{x}`: {e}"))))
        .collect()
}
