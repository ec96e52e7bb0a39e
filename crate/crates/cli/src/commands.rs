use std::fmt::Write as _;

use baseline_odx::approx::MeasureOptimum;
use baseline_odx::construct::{
    construct_d0, construct_d0_permuted, construct_dbar, construct_egd_2x3, construct_reference, construct_symmetric,
    d0_collection, dye_swap, family_phi,
};
use baseline_odx::search::{augment_optimal, SearchSpace};
use baseline_odx::{
    criterion_value, efficiency, optimize_measure, round_measure, variance_report, Candidate, Design, Error,
    FactorLayout, ModelSpec, OptimizerOptions, Parametrization, ReplicationPlan, Result,
};
use serde_json::json;

use crate::inputs::{self, DesignOrMeasure};
use crate::{ApproxArgs, ConstructArgs, EvaluateArgs, SearchArgs};

fn layout(text: &str) -> Result<FactorLayout> {
    text.parse()
}

fn line(s: String) -> String {
    s + "\n"
}

pub fn construct(args: &ConstructArgs) -> Result<String> {
    let layout = layout(&args.layout)?;
    let design = match args.kind.as_str() {
        "d0" => match &args.permute {
            Some(p) => construct_d0_permuted(&layout, &inputs::permutation(p)?)?,
            None => construct_d0(&layout),
        },
        "collection" => {
            let all: Vec<serde_json::Value> = d0_collection(&layout)
                .iter()
                .map(|d| serde_json::from_str(&d.to_json()).expect("design JSON"))
                .collect();
            return Ok(line(serde_json::Value::Array(all).to_string()));
        }
        "dswap" => dye_swap(&construct_d0(&layout)),
        "dbar" => construct_dbar(&layout)?,
        "reference" => construct_reference(&layout),
        "symmetric" => construct_symmetric(&layout),
        "egd2x3" => {
            if layout.levels() != [2, 3] {
                return Err(Error::InvalidInput("egd2x3 needs --layout 2x3".into()));
            }
            construct_egd_2x3()
        }
        "family" => {
            if !layout.is_two_by_two() {
                return Err(Error::InvalidInput("family needs --layout 2x2".into()));
            }
            let n = args.slides.ok_or_else(|| Error::InvalidInput("family needs --N".into()))?;
            let phi = args.phi.ok_or_else(|| Error::InvalidInput("family needs --phi".into()))?;
            family_phi(n, phi)?
        }
        other => return Err(Error::InvalidInput(format!("unknown construction `{other}`"))),
    };
    Ok(line(design.to_json()))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<String> {
    let design = inputs::design_file(&args.design)?;
    let layout = design.layout().clone();
    let mut model = inputs::model(&layout, &args.model)?;
    if let (Some(path), Some(ratio)) = (&args.replication, &args.ratio) {
        let plan = ReplicationPlan::from_json(&inputs::read(path)?)?;
        model = model.replicated(plan, ratio.parse()?)?;
    }
    let weights = baseline_odx::CriterionWeights::parse(&layout, &args.weights)?;
    let report = variance_report(&design, &model)?;
    let criterion = criterion_value(&design, &model, &weights)?;
    if args.json {
        let variances: Vec<serde_json::Value> = report
            .entries()
            .iter()
            .map(|(e, v)| json!({"effect": e.to_string(), "order": e.order(), "variance": v.to_string()}))
            .collect();
        return Ok(line(json!({"variances": variances, "criterion": criterion.to_string()}).to_string()));
    }
    let mut out = report.to_csv();
    let _ = writeln!(out, "criterion,,{criterion}");
    Ok(out)
}

pub fn search(args: &SearchArgs, augment: bool) -> Result<String> {
    let layout = layout(&args.layout)?;
    let model = inputs::model(&layout, &args.model)?;
    let weights = inputs::weights(&layout, args.w.as_deref(), args.weights.as_deref())?;
    if augment {
        if args.restrict.is_some() || args.admissible {
            return Err(Error::InvalidInput("augment takes neither --restrict nor --admissible".into()));
        }
        let result = augment_optimal(&layout, args.slides, &model, &weights, args.jobs)?;
        return Ok(line(result.to_json(args.optima)));
    }
    let space = match &args.restrict {
        None => SearchSpace::all(&layout, args.slides, model.dye)?,
        Some(source) => {
            let pool: Design = if source == "dbar" { construct_dbar(&layout)? } else { inputs::design_file(source)? };
            if pool.layout() != &layout {
                return Err(Error::InvalidInput(format!("restriction is on {}, search on {layout}", pool.layout())));
            }
            SearchSpace::restricted(&layout, pool.slides(), args.slides, !args.distinct, model.dye)?
        }
    };
    if args.admissible {
        let designs = space.admissible(&model, args.jobs)?;
        let values: Vec<serde_json::Value> =
            designs.iter().map(|d| serde_json::from_str(&d.to_json()).expect("design JSON")).collect();
        return Ok(line(serde_json::Value::Array(values).to_string()));
    }
    let result = space.w_optimal(&model, &weights, args.jobs)?;
    Ok(line(result.to_json(args.optima)))
}

pub fn approx(args: &ApproxArgs) -> Result<String> {
    let layout = layout(&args.layout)?;
    let model: ModelSpec = inputs::model(&layout, &args.model)?;
    let weights = inputs::weights(&layout, args.w.as_deref(), args.weights.as_deref())?;
    let parametrization: Parametrization = args.parametrization.parse()?;
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(Error::InvalidInput("--tol must be positive".into()));
    }
    let options = OptimizerOptions { tol: args.tol, seed: args.seed, jobs: args.jobs, ..Default::default() };
    let MeasureOptimum { measure, criterion, .. } =
        optimize_measure(&layout, &model, &weights, parametrization, &options)?;
    let measure_value: serde_json::Value = serde_json::from_str(&measure.to_json()).expect("measure JSON");
    let mut out = json!({"criterion": criterion, "measure": measure_value});
    if let Some(n) = args.round {
        let design = round_measure(&measure, n)?;
        out["rounded"] = serde_json::from_str(&design.to_json()).expect("design JSON");
    }
    if let Some(path) = &args.efficiency_of {
        let target = inputs::design_or_measure_file(path)?;
        let candidate = match &target {
            DesignOrMeasure::Design(d) => Candidate::Design(d),
            DesignOrMeasure::Measure(m) => Candidate::Measure(m),
        };
        out["efficiency"] = json!(efficiency(candidate, &model, &weights, parametrization, &options)?);
    }
    Ok(line(out.to_string()))
}
