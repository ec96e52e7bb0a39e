//! Named design constructions.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::factorial::{canonicalize, Design, FactorLayout, Slide, Treatment};

/// Zeroes the first nonzero entry of `t`.
pub fn rho(t: &Treatment) -> Result<Treatment> {
    t.rho().ok_or_else(|| Error::InvalidTreatment("rho is undefined for the baseline combination".into()))
}

/// The saturated design `{(t, ρ(t)) : t ≠ 0…0}`: `v − 1` slides forming a spanning tree
/// rooted at the baseline, treatment on red and `ρ(t)` on green.
pub fn construct_d0(layout: &FactorLayout) -> Design {
    let slides = layout
        .treatments()
        .into_iter()
        .filter(|t| !t.is_baseline())
        .map(|t| {
            let parent = t.rho().expect("nonzero treatment");
            Slide::new(t, parent)
        })
        .collect();
    Design::new(layout.clone(), slides).expect("layouts have at least two treatments")
}

/// [`construct_d0`] built on the layout with factors reordered by `order`, with every
/// treatment mapped back to the original factor order.
pub fn construct_d0_permuted(layout: &FactorLayout, order: &[usize]) -> Result<Design> {
    let permuted = layout.permuted(order)?;
    let slides = construct_d0(&permuted)
        .slides()
        .iter()
        .map(|s| Slide::new(s.red.unpermuted(order), s.green.unpermuted(order)))
        .collect();
    Design::new(layout.clone(), slides)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Optimal saturated designs known to attain `2^{u−1}σ²` for every effect.
///
/// Two factors: every choice of `0i₂` or `i₁0` as partner of each `i₁i₂` with both
/// entries nonzero. Three or more factors: [`construct_d0`] under every factor
/// ordering. The first entry is always [`construct_d0`]; duplicates are removed.
pub fn d0_collection(layout: &FactorLayout) -> Vec<Design> {
    let mut out = Vec::new();
    match layout.factor_count() {
        1 => out.push(construct_d0(layout)),
        2 => {
            let interior: Vec<Treatment> =
                layout.treatments().into_iter().filter(|t| t.levels().iter().all(|&i| i != 0)).collect();
            assert!(interior.len() < 24, "collection too large to enumerate");
            for mask in 0u32..(1 << interior.len()) {
                let slides = layout
                    .treatments()
                    .into_iter()
                    .filter(|t| !t.is_baseline())
                    .map(|t| {
                        let green = match interior.iter().position(|x| *x == t) {
                            Some(k) if mask & (1 << k) != 0 => Treatment::new(vec![t.levels()[0], 0]),
                            _ => t.rho().expect("nonzero"),
                        };
                        Slide::new(t, green)
                    })
                    .collect();
                out.push(Design::new(layout.clone(), slides).expect("valid"));
            }
        }
        n => {
            let mut seen = HashSet::new();
            for order in permutations(n) {
                let d = construct_d0_permuted(layout, &order).expect("valid permutation");
                if seen.insert(canonicalize(&d, true)) {
                    out.push(d);
                }
            }
        }
    }
    out
}

/// Every slide followed by its red/green reversal.
pub fn dye_swap(design: &Design) -> Design {
    let slides = design.slides().iter().flat_map(|s| [s.clone(), s.swapped()]).collect();
    Design::new(design.layout().clone(), slides).expect("valid")
}

/// Union of the two-factor saturated collection: slides `(i₁i₂, 0i₂)` for `i₁ ≥ 1`
/// and `(i₁i₂, i₁0)` for `i₂ ≥ 1`.
pub fn construct_dbar(layout: &FactorLayout) -> Result<Design> {
    if layout.factor_count() != 2 {
        return Err(Error::Unsupported(format!("d-bar needs two factors, got {layout}")));
    }
    let (s1, s2) = (layout.levels()[0], layout.levels()[1]);
    let mut slides = Vec::new();
    for i1 in 1..s1 {
        for i2 in 0..s2 {
            slides.push(Slide::new(Treatment::new(vec![i1, i2]), Treatment::new(vec![0, i2])));
        }
    }
    for i1 in 0..s1 {
        for i2 in 1..s2 {
            slides.push(Slide::new(Treatment::new(vec![i1, i2]), Treatment::new(vec![i1, 0])));
        }
    }
    Design::new(layout.clone(), slides)
}

/// Every treatment against the common reference `0…0`.
pub fn construct_reference(layout: &FactorLayout) -> Design {
    let base = layout.baseline();
    let slides =
        layout.treatments().into_iter().filter(|t| !t.is_baseline()).map(|t| Slide::new(t, base.clone())).collect();
    Design::new(layout.clone(), slides).expect("valid")
}

/// Each unordered pair of treatments on exactly one slide.
pub fn construct_symmetric(layout: &FactorLayout) -> Design {
    let slides = crate::factorial::unordered_pairs(layout)
        .into_iter()
        .map(|(r, g)| Slide::new(layout.treatment_at(r), layout.treatment_at(g)))
        .collect();
    Design::new(layout.clone(), slides).expect("valid")
}

/// Whether the number of slides comparing two treatments depends only on which factors
/// they agree on.
pub fn is_egd(design: &Design) -> bool {
    let layout = design.layout();
    let v = layout.treatment_count();
    let counts = design.pair_counts();
    let mut by_pattern: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    for a in 0..v {
        let ta = layout.treatment_at(a);
        for b in a + 1..v {
            let tb = layout.treatment_at(b);
            let pattern: Vec<bool> = ta.levels().iter().zip(tb.levels()).map(|(x, y)| x == y).collect();
            let m = counts.get(&(a, b)).copied().unwrap_or(0);
            if *by_pattern.entry(pattern).or_insert(m) != m {
                return false;
            }
        }
    }
    true
}

/// The six-slide extended group divisible design for the 2×3 factorial.
pub fn construct_egd_2x3() -> Design {
    let layout = FactorLayout::new(vec![2, 3]).expect("valid");
    Design::from_labels(&layout, &[("11", "00"), ("12", "00"), ("10", "01"), ("12", "01"), ("10", "02"), ("11", "02")])
        .expect("valid")
}

/// The 2×2 design with frequency vector `(N/2 − φ, N/2 − φ, 0, 0, φ, φ)`.
pub fn family_phi(n: usize, phi: usize) -> Result<Design> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("N must be a positive even number, got {n}")));
    }
    if phi > n / 2 {
        return Err(Error::InvalidInput(format!("phi must lie in 0..={}, got {phi}", n / 2)));
    }
    Design::from_frequencies_2x2([n / 2 - phi, n / 2 - phi, 0, 0, phi, phi])
}

/// Re-orients the slides of an even design so that every treatment is red exactly as
/// often as green, by walking an Eulerian circuit of each component of the slide
/// multigraph (lowest-index neighbour first). Designs that are already balanced are
/// returned unchanged apart from canonical slide order.
pub fn orient_even_design(design: &Design) -> Result<Design> {
    let layout = design.layout();
    if let Some(k) = design.degrees().iter().position(|d| d % 2 != 0) {
        return Err(Error::OddDegree(layout.treatment_at(k).to_string()));
    }
    if design.dye_imbalance().iter().all(|&x| x == 0) {
        return Ok(canonicalize(design, true));
    }
    let v = layout.treatment_count();
    let edges: Vec<(usize, usize)> =
        design.slides().iter().map(|s| (layout.index_of(&s.red), layout.index_of(&s.green))).collect();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); v];
    for (id, &(a, b)) in edges.iter().enumerate() {
        adjacency[a].push((b, id));
        adjacency[b].push((a, id));
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }
    let mut used = vec![false; edges.len()];
    let mut next = vec![0usize; v];
    let mut oriented = Vec::with_capacity(edges.len());
    for start in 0..v {
        let mut stack: Vec<usize> = vec![start];
        while let Some(&u) = stack.last() {
            while next[u] < adjacency[u].len() && used[adjacency[u][next[u]].1] {
                next[u] += 1;
            }
            if let Some(&(w, id)) = adjacency[u].get(next[u]) {
                used[id] = true;
                oriented.push(Slide::new(layout.treatment_at(u), layout.treatment_at(w)));
                stack.push(w);
            } else {
                stack.pop();
            }
        }
    }
    debug_assert_eq!(oriented.len(), edges.len());
    Ok(canonicalize(&Design::new(layout.clone(), oriented)?, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(s: &str) -> FactorLayout {
        s.parse().unwrap()
    }

    fn design(l: &str, pairs: &[(&str, &str)]) -> Design {
        Design::from_labels(&layout(l), pairs).unwrap()
    }

    #[test]
    fn rho_examples() {
        let r = |s: &str| rho(&s.parse().unwrap()).unwrap().to_string();
        assert_eq!(r("012"), "002");
        assert_eq!(r("111"), "011");
        assert_eq!(r("100"), "000");
        assert_eq!(r("11"), "01");
        assert!(rho(&"000".parse().unwrap()).is_err());
    }

    #[test]
    fn d0_listings() {
        let d = construct_d0(&layout("2x2x3"));
        let expect = design(
            "2x2x3",
            &[
                ("001", "000"),
                ("002", "000"),
                ("010", "000"),
                ("011", "001"),
                ("012", "002"),
                ("100", "000"),
                ("101", "001"),
                ("102", "002"),
                ("110", "010"),
                ("111", "011"),
                ("112", "012"),
            ],
        );
        assert_eq!(d, expect);
        let d = construct_d0(&layout("3x2x2"));
        let expect = design(
            "3x2x2",
            &[
                ("001", "000"),
                ("010", "000"),
                ("011", "001"),
                ("100", "000"),
                ("101", "001"),
                ("110", "010"),
                ("111", "011"),
                ("200", "000"),
                ("201", "001"),
                ("210", "010"),
                ("211", "011"),
            ],
        );
        assert_eq!(d, expect);
        assert_eq!(construct_d0(&layout("2x2")), design("2x2", &[("01", "00"), ("10", "00"), ("11", "01")]));
    }

    #[test]
    fn collections() {
        let c = d0_collection(&layout("2x2"));
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], design("2x2", &[("01", "00"), ("10", "00"), ("11", "01")]));
        assert_eq!(c[1], design("2x2", &[("01", "00"), ("10", "00"), ("11", "10")]));
        assert_eq!(d0_collection(&layout("2x3")).len(), 4);
        assert_eq!(d0_collection(&layout("3x3")).len(), 16);

        // the 3x2x2 listing with factors put back in 2x2x3 order
        let l = layout("2x2x3");
        let c = d0_collection(&l);
        let from_322: Vec<Slide> = construct_d0(&layout("3x2x2"))
            .slides()
            .iter()
            .map(|s| Slide::new(s.red.permuted(&[1, 2, 0]), s.green.permuted(&[1, 2, 0])))
            .collect();
        let mapped = Design::new(l.clone(), from_322).unwrap();
        assert!(c.iter().any(|d| d.same_as(&mapped, true)));
        assert!(c.len() > 1 && c.len() <= 6);
    }

    #[test]
    fn dye_swap_doubles() {
        let d = dye_swap(&construct_d0(&layout("2x2")));
        let expect =
            design("2x2", &[("01", "00"), ("00", "01"), ("10", "00"), ("00", "10"), ("11", "01"), ("01", "11")]);
        assert_eq!(d, expect);
        let flipped = Design::new(d.layout().clone(), d.slides().iter().map(Slide::swapped).collect()).unwrap();
        assert!(flipped.same_as(&d, true));
    }

    #[test]
    fn dbar_sizes() {
        let d = construct_dbar(&layout("2x2")).unwrap();
        assert!(d.same_as(&design("2x2", &[("01", "00"), ("10", "00"), ("11", "01"), ("11", "10")]), true));
        let d = construct_dbar(&layout("2x3")).unwrap();
        let table = design(
            "2x3",
            &[("01", "00"), ("02", "00"), ("10", "00"), ("11", "01"), ("12", "02"), ("11", "10"), ("12", "10")],
        );
        assert!(d.same_as(&table, true));
        for s in ["2x4", "3x3", "3x4"] {
            let l = layout(s);
            let (a, b) = (l.levels()[0] as usize, l.levels()[1] as usize);
            assert_eq!(construct_dbar(&l).unwrap().len(), l.treatment_count() - 1 + (a - 1) * (b - 1));
        }
        assert!(construct_dbar(&layout("2x2x2")).is_err());
    }

    #[test]
    fn reference_and_symmetric() {
        assert_eq!(construct_reference(&layout("2x2")), design("2x2", &[("01", "00"), ("10", "00"), ("11", "00")]));
        assert_eq!(construct_reference(&layout("2x2x3")).len(), 11);
        assert_eq!(construct_symmetric(&layout("2x2")).len(), 6);
        assert_eq!(construct_symmetric(&layout("2x3")).len(), 15);
    }

    #[test]
    fn egd_membership() {
        assert!(is_egd(&construct_egd_2x3()));
        assert!(is_egd(&construct_symmetric(&layout("2x2"))));
        assert!(!is_egd(&construct_d0(&layout("2x3"))));
    }

    #[test]
    fn family_members() {
        assert_eq!(family_phi(20, 4).unwrap().frequencies_2x2().unwrap(), [6, 6, 0, 0, 4, 4]);
        assert_eq!(family_phi(22, 5).unwrap().frequencies_2x2().unwrap(), [6, 6, 0, 0, 5, 5]);
        assert_eq!(family_phi(12, 3).unwrap().frequencies_2x2().unwrap(), [3, 3, 0, 0, 3, 3]);
        assert!(family_phi(21, 3).is_err());
        assert!(family_phi(10, 6).is_err());
    }

    #[test]
    fn even_orientation() {
        let dbar = construct_dbar(&layout("2x2")).unwrap();
        let o = orient_even_design(&dbar).unwrap();
        assert!(o.dye_imbalance().iter().all(|&x| x == 0));
        assert!(o.same_as(&dbar, false));

        let dbar23 = construct_dbar(&layout("2x3")).unwrap();
        assert!(matches!(orient_even_design(&dbar23), Err(Error::OddDegree(_))));
        assert!(matches!(orient_even_design(&construct_symmetric(&layout("2x3"))), Err(Error::OddDegree(_))));

        let swapped = dye_swap(&construct_d0(&layout("2x3")));
        assert_eq!(orient_even_design(&swapped).unwrap(), canonicalize(&swapped, true));
    }
}
