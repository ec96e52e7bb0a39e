//! Exact BLUE variances checked against a floating-point oracle that builds the model
//! from scratch and uses an SVD pseudo-inverse.

use baseline_odx::{
    variance_report, Design, DyeStructure, Error, FactorLayout, ModelSpec, Rational, ReplicationPlan, Slide,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Baseline contrast over treatments: alternating sum over the sub-treatments obtained by
/// zeroing any subset of the effect's nonzero coordinates.
fn contrast(layout: &FactorLayout, effect: &[u8]) -> DVector<f64> {
    let v = layout.treatment_count();
    let mut c = DVector::zeros(v);
    let support: Vec<usize> = (0..effect.len()).filter(|&k| effect[k] != 0).collect();
    for mask in 0u32..(1 << support.len()) {
        let mut t = effect.to_vec();
        for (bit, &k) in support.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                t[k] = 0;
            }
        }
        let dropped = mask.count_ones();
        let sign = if dropped % 2 == 0 { 1.0 } else { -1.0 };
        c[index(layout, &t)] += sign;
    }
    c
}

fn index(layout: &FactorLayout, t: &[u8]) -> usize {
    t.iter().zip(layout.levels()).fold(0, |acc, (&x, &s)| acc * s as usize + x as usize)
}

/// Moore-Penrose inverse of a symmetric PSD matrix from its eigendecomposition.
fn symmetric_pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let cutoff = 1e-10 * eig.eigenvalues.amax().max(1.0);
    let inv = eig.eigenvalues.map(|x| if x > cutoff { 1.0 / x } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

struct Oracle {
    variances: Vec<Option<f64>>,
}

fn oracle(d: &Design, dye: DyeStructure, hetero: Option<&[f64]>, rep: Option<(&ReplicationPlan, f64)>) -> Oracle {
    let layout = d.layout();
    let v = layout.treatment_count();
    let extra = match dye {
        DyeStructure::None => 0,
        DyeStructure::GeneralDye => v,
        DyeStructure::ReducedDye => 1,
    };
    let n = d.len();
    let mut x = DMatrix::zeros(n, v + extra);
    let mut sigma = DMatrix::identity(n, n);
    for (i, s) in d.slides().iter().enumerate() {
        let (a, b) = (index(layout, s.red.levels()), index(layout, s.green.levels()));
        x[(i, a)] += 1.0;
        x[(i, b)] -= 1.0;
        match dye {
            DyeStructure::None => {}
            DyeStructure::GeneralDye => {
                x[(i, v + a)] += 1.0;
                x[(i, v + b)] += 1.0;
            }
            DyeStructure::ReducedDye => x[(i, v)] = 1.0,
        }
        if let Some(g) = hetero {
            sigma[(i, i)] = g[a] + g[b] + 1.0;
        }
    }
    if let Some((plan, r)) = rep {
        // log-ratio_i = subject(red_i) − subject(green_i) + technical noise
        let subj = plan.subjects();
        for i in 0..n {
            for j in 0..n {
                let same = |p: u32, q: u32| if p == q { r } else { 0.0 };
                let mut c = same(subj[i][0], subj[j][0]) + same(subj[i][1], subj[j][1])
                    - same(subj[i][0], subj[j][1])
                    - same(subj[i][1], subj[j][0]);
                if i == j {
                    c += 1.0;
                }
                sigma[(i, j)] = c;
            }
        }
    }
    let sigma_inv = sigma.try_inverse().expect("covariance invertible");
    let m = x.transpose() * sigma_inv * &x;
    let ginv = symmetric_pseudo_inverse(&m);
    let projector = &ginv * &m;
    let variances = layout
        .effects()
        .iter()
        .map(|e| {
            let mut c = DVector::zeros(v + extra);
            c.rows_mut(0, v).copy_from(&contrast(layout, e.treatment().levels()));
            let back = projector.transpose() * &c;
            if (back - &c).amax() > 1e-7 {
                None
            } else {
                Some((c.transpose() * &ginv * &c)[0])
            }
        })
        .collect();
    Oracle { variances }
}

fn compare(d: &Design, model: &ModelSpec, expected: Oracle) -> Result<(), TestCaseError> {
    match variance_report(d, model) {
        Ok(rep) => {
            for ((e, exact), want) in rep.entries().iter().zip(&expected.variances) {
                let want = want.ok_or_else(|| TestCaseError::fail(format!("oracle: {e} inestimable")))?;
                let got = exact.to_f64();
                prop_assert!((got - want).abs() <= 1e-8 * want.max(1.0), "{e}: {got} vs {want}");
            }
        }
        Err(Error::NotEstimable(missing)) => {
            let oracle_missing: Vec<String> = d
                .layout()
                .effects()
                .iter()
                .zip(&expected.variances)
                .filter(|(_, v)| v.is_none())
                .map(|(e, _)| e.to_string())
                .collect();
            prop_assert_eq!(missing, oracle_missing);
        }
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    }
    Ok(())
}

fn design_strategy() -> impl Strategy<Value = Design> {
    prop_oneof![Just("2x2"), Just("2x3"), Just("3x3"), Just("2x2x2")]
        .prop_flat_map(|l| {
            let layout: FactorLayout = l.parse().unwrap();
            let v = layout.treatment_count();
            (Just(layout), prop::collection::vec((0..v, 1..v), v - 1..2 * v + 2))
        })
        .prop_map(|(layout, picks)| {
            let ts = layout.treatments();
            let v = ts.len();
            let slides = picks.iter().map(|&(a, k)| Slide::new(ts[a].clone(), ts[(a + k) % v].clone())).collect();
            Design::new(layout, slides).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn plain_model_matches_oracle(d in design_strategy()) {
        compare(&d, &ModelSpec::plain(), oracle(&d, DyeStructure::None, None, None))?;
    }

    #[test]
    fn general_dye_matches_oracle(d in design_strategy()) {
        compare(&d, &ModelSpec::general_dye(), oracle(&d, DyeStructure::GeneralDye, None, None))?;
    }

    #[test]
    fn reduced_dye_matches_oracle(d in design_strategy()) {
        compare(&d, &ModelSpec::reduced_dye(), oracle(&d, DyeStructure::ReducedDye, None, None))?;
    }

    #[test]
    fn heteroscedastic_matches_oracle(d in design_strategy(), seed in prop::collection::vec(0u8..12, 8)) {
        let v = d.layout().treatment_count();
        let ratios: Vec<Rational> = (0..v).map(|i| Rational::new(seed[i % seed.len()] as i64, 4).unwrap()).collect();
        let floats: Vec<f64> = ratios.iter().map(Rational::to_f64).collect();
        let model = ModelSpec::plain().heteroscedastic(ratios).unwrap();
        compare(&d, &model, oracle(&d, DyeStructure::None, Some(&floats), None))?;
    }

    #[test]
    fn technical_replication_matches_oracle(
        picks in prop::collection::vec((0usize..4, 1usize..4), 3..7),
        merges in prop::collection::vec(0u32..3, 14),
        ratio in 0i64..6,
    ) {
        let layout: FactorLayout = "2x2".parse().unwrap();
        let ts = layout.treatments();
        let slides: Vec<Slide> = picks.iter().map(|&(a, k)| Slide::new(ts[a].clone(), ts[(a + k) % 4].clone())).collect();
        let d = Design::new(layout, slides).unwrap();
        // subject id = treatment index × 8 + a small per-treatment label, so merges only join like treatments
        let mut k = 0;
        let mut label = || { k += 1; merges[(k - 1) % merges.len()] };
        let subjects: Vec<[u32; 2]> = d
            .slides()
            .iter()
            .map(|s| {
                let a = index(d.layout(), s.red.levels()) as u32;
                let b = index(d.layout(), s.green.levels()) as u32;
                [a * 8 + label(), b * 8 + label()]
            })
            .collect();
        let plan = ReplicationPlan::new(subjects);
        let r = Rational::new(ratio, 2).unwrap();
        let model = match ModelSpec::plain().replicated(plan.clone(), r.clone()) {
            Ok(m) => m,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        match variance_report(&d, &model) {
            Err(Error::IndefiniteCovariance) => {}
            _ => compare(&d, &model, oracle(&d, DyeStructure::None, None, Some((&plan, r.to_f64()))))?,
        }
    }
}
