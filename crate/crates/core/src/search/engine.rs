//! Floating-point screening over multisets of candidate slides.
//!
//! The information matrix is accumulated slide by slide along a depth-first walk of the
//! combinations, so each leaf costs one small symmetric elimination. τ of the baseline
//! treatment is pinned to zero: every contrast and every row is invariant under a common
//! shift of τ, so dropping that column changes neither estimability nor variances.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factorial::{ContrastVector, FactorLayout};
use crate::linalg::psd_quadratic_forms_in_place;
use crate::model::{slide_row, ModelSpec, Noise};

#[derive(Clone, Copy)]
struct Row {
    entries: [(usize, f64); 4],
    len: usize,
    /// Precision of the slide's log-ratio.
    weight: f64,
}

pub(crate) struct Engine {
    p: usize,
    v: usize,
    rows: Vec<Row>,
    pairs: Vec<(usize, usize)>,
    /// Contrasts, `k` chunks of length `p`.
    contrasts: Vec<f64>,
    k: usize,
    base: Vec<f64>,
    base_pairs: Vec<(usize, usize)>,
    slides: usize,
    repetition: bool,
    require_connected: bool,
}

/// Scratch buffers owned by one worker.
struct Work {
    mats: Vec<Vec<f64>>,
    labels: Vec<Vec<u16>>,
    components: Vec<usize>,
    chosen: Vec<usize>,
    a: Vec<f64>,
    rhs: Vec<f64>,
    out: Vec<Option<f64>>,
    pivoted: Vec<bool>,
}

pub(crate) struct EngineSpec<'a> {
    pub layout: &'a FactorLayout,
    pub model: &'a ModelSpec,
    pub candidates: &'a [(usize, usize)],
    pub base: &'a [(usize, usize)],
    pub slides: usize,
    pub repetition: bool,
    pub contrasts: &'a [ContrastVector],
    /// Skip designs whose treatment graph cannot end up connected. Only sound when every
    /// effect must be estimable under a model without dye parameters.
    pub require_connected: bool,
}

impl Engine {
    pub fn new(spec: EngineSpec<'_>) -> Result<Engine> {
        let model = spec.model;
        if model.replication.is_some() {
            return Err(Error::Unsupported("exhaustive search under technical replication".into()));
        }
        let v = spec.layout.treatment_count();
        let p = v - 1 + model.dye.nuisance_count(v);
        let ratios: Option<Vec<f64>> = match &model.noise {
            Noise::Homoscedastic => None,
            Noise::Heteroscedastic(r) => {
                if r.len() != v {
                    return Err(Error::InvalidInput(format!("{} variance ratios for {v} treatments", r.len())));
                }
                Some(r.iter().map(|x| x.to_f64()).collect())
            }
        };
        let make_row = |&(red, green): &(usize, usize)| {
            let (entries, len) = slide_row(model.dye, v, red, green);
            let weight = match &ratios {
                None => 1.0,
                Some(r) => 1.0 / (r[red] + r[green] + 1.0),
            };
            let mut row = Row { entries: [(0, 0.0); 4], len: 0, weight };
            for &(col, value) in &entries[..len] {
                if col == 0 {
                    continue;
                }
                row.entries[row.len] = (col - 1, value as f64);
                row.len += 1;
            }
            row
        };
        let rows: Vec<Row> = spec.candidates.iter().map(make_row).collect();
        let mut base = vec![0.0; p * p];
        for pair in spec.base {
            add_row(&mut base, p, &make_row(pair));
        }
        let contrasts = spec
            .contrasts
            .iter()
            .flat_map(|c| c.coefficients()[1..].iter().map(|x| x.to_f64()).chain(std::iter::repeat_n(0.0, p - (v - 1))))
            .collect();
        Ok(Engine {
            p,
            v,
            rows,
            pairs: spec.candidates.to_vec(),
            contrasts,
            k: spec.contrasts.len(),
            base,
            base_pairs: spec.base.to_vec(),
            slides: spec.slides,
            repetition: spec.repetition,
            require_connected: spec.require_connected && model.dye.nuisance_count(v) == 0,
        })
    }

    /// Prefixes that split the walk into independent pieces, in enumeration order.
    fn prefixes(&self) -> Vec<Vec<usize>> {
        let m = self.rows.len();
        let depth = self.slides.min(2);
        let mut out = vec![Vec::new()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for prefix in &out {
                let start = match prefix.last() {
                    None => 0,
                    Some(&i) if self.repetition => i,
                    Some(&i) => i + 1,
                };
                for i in start..m {
                    let mut p = prefix.clone();
                    p.push(i);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    fn work(&self) -> Work {
        let n = self.slides;
        let mut labels = vec![(0..self.v as u16).collect::<Vec<_>>(); n + 1];
        let mut components = vec![self.v; n + 1];
        for &(a, b) in &self.base_pairs {
            merge(&mut labels[0], &mut components[0], a, b);
        }
        let mut mats = vec![vec![0.0; self.p * self.p]; n + 1];
        mats[0].copy_from_slice(&self.base);
        Work {
            mats,
            labels,
            components,
            chosen: Vec::with_capacity(n),
            a: vec![0.0; self.p * self.p],
            rhs: vec![0.0; self.p * self.k],
            out: vec![None; self.k],
            pivoted: vec![false; self.p],
        }
    }

    fn push(&self, w: &mut Work, depth: usize, index: usize) -> bool {
        let (prev, rest) = w.mats.split_at_mut(depth + 1);
        rest[0].copy_from_slice(&prev[depth]);
        add_row(&mut rest[0], self.p, &self.rows[index]);
        w.chosen.truncate(depth);
        w.chosen.push(index);
        if self.require_connected {
            let (prev, rest) = w.labels.split_at_mut(depth + 1);
            rest[0].copy_from_slice(&prev[depth]);
            w.components[depth + 1] = w.components[depth];
            let (a, b) = self.pairs[index];
            let mut c = w.components[depth + 1];
            merge(&mut rest[0], &mut c, a, b);
            w.components[depth + 1] = c;
            let remaining = self.slides - depth - 1;
            if c - 1 > remaining {
                return false;
            }
        }
        true
    }

    fn leaf(&self, w: &mut Work) {
        w.a.copy_from_slice(&w.mats[self.slides]);
        w.rhs.copy_from_slice(&self.contrasts);
        psd_quadratic_forms_in_place(&mut w.a, self.p, &mut w.rhs, &mut w.out, &mut w.pivoted);
    }

    /// Depth-first walk below a prefix. `visit` returns false to stop the walk.
    fn walk<F>(&self, w: &mut Work, prefix: &[usize], visit: &mut F) -> bool
    where
        F: FnMut(&[usize], &[Option<f64>]) -> bool,
    {
        for (d, &i) in prefix.iter().enumerate() {
            if !self.push(w, d, i) {
                return true;
            }
        }
        self.descend(w, prefix.len(), visit)
    }

    fn descend<F>(&self, w: &mut Work, depth: usize, visit: &mut F) -> bool
    where
        F: FnMut(&[usize], &[Option<f64>]) -> bool,
    {
        if depth == self.slides {
            if self.require_connected && w.components[depth] != 1 {
                return true;
            }
            self.leaf(w);
            let Work { chosen, out, .. } = w;
            return visit(chosen, out);
        }
        let start = match w.chosen[..depth].last() {
            None => 0,
            Some(&i) if self.repetition => i,
            Some(&i) => i + 1,
        };
        for i in start..self.rows.len() {
            if self.push(w, depth, i) && !self.descend(w, depth + 1, visit) {
                return false;
            }
        }
        true
    }

    /// Folds every leaf into a per-piece accumulator; pieces are merged in enumeration
    /// order so the result does not depend on scheduling.
    pub fn fold<R, I, V, M>(&self, init: I, visit: V, merge_into: M) -> R
    where
        R: Send,
        I: Fn() -> R + Sync,
        V: Fn(&mut R, &[usize], &[Option<f64>]) + Sync,
        M: Fn(R, R) -> R,
    {
        let pieces: Vec<R> = self
            .prefixes()
            .into_par_iter()
            .map(|prefix| {
                let mut acc = init();
                let mut w = self.work();
                self.walk(&mut w, &prefix, &mut |chosen: &[usize], out: &[Option<f64>]| {
                    visit(&mut acc, chosen, out);
                    true
                });
                acc
            })
            .collect();
        pieces.into_iter().reduce(merge_into).unwrap_or_else(init)
    }

    /// First leaf in enumeration order accepted by `accept`.
    pub fn find_first<A>(&self, accept: A) -> Option<Vec<usize>>
    where
        A: Fn(&[usize], &[Option<f64>]) -> bool + Sync,
    {
        self.prefixes().into_par_iter().find_map_first(|prefix| {
            let mut w = self.work();
            let mut found = None;
            self.walk(&mut w, &prefix, &mut |chosen: &[usize], out: &[Option<f64>]| {
                if accept(chosen, out) {
                    found = Some(chosen.to_vec());
                    false
                } else {
                    true
                }
            });
            found
        })
    }
}

#[inline]
fn add_row(m: &mut [f64], p: usize, row: &Row) {
    for &(i, x) in &row.entries[..row.len] {
        for &(j, y) in &row.entries[..row.len] {
            m[i * p + j] += row.weight * x * y;
        }
    }
}

fn merge(labels: &mut [u16], components: &mut usize, a: usize, b: usize) {
    let (la, lb) = (labels[a], labels[b]);
    if la != lb {
        for l in labels.iter_mut() {
            if *l == lb {
                *l = la;
            }
        }
        *components -= 1;
    }
}
