//! Simulated class-mixture tables with planted region rules.
//!
//! Every table has columns `cat`, `x`, `y`. Row `i` draws its category
//! uniformly and then a point from that category's geometry, all from the
//! `(seed, i)` stream.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::rules::{Region, RuleSpec};
use crate::fd::FunctionalDependency;
use crate::rng::stream_rng;
use crate::table::{Cell, Column, ColumnKind, Schema, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    DisjointRects,
    OverlappingRects,
    GaussianBlobs,
    ConcentricRings,
}

impl SimKind {
    pub const ALL: [SimKind; 4] = [
        SimKind::DisjointRects,
        SimKind::OverlappingRects,
        SimKind::GaussianBlobs,
        SimKind::ConcentricRings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimKind::DisjointRects => "disjoint_rects",
            SimKind::OverlappingRects => "overlapping_rects",
            SimKind::GaussianBlobs => "gaussian_blobs",
            SimKind::ConcentricRings => "concentric_rings",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Kinds whose category regions never meet, so `{x, y} -> cat` holds.
    pub fn is_disjoint(self) -> bool {
        self != SimKind::OverlappingRects
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    /// DisjointRects: how far each rectangle reaches into its right
    /// neighbour's x range. Neighbours sit in different y bands, so the
    /// rectangles stay disjoint while x alone no longer pins the category.
    pub x_reach: f64,
    /// OverlappingRects: shared fraction of each adjacent pair's area.
    pub overlap: f64,
    /// GaussianBlobs: standard deviation; draws are truncated at 3 sigma.
    pub sigma: f64,
    /// ConcentricRings: ring width and the gap between rings.
    pub ring_width: f64,
    pub ring_gap: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            x_reach: 0.025,
            overlap: 0.2,
            sigma: 1.0,
            ring_width: 1.0,
            ring_gap: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub kind: SimKind,
    pub categories: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub geometry: Geometry,
}

impl SimSpec {
    pub fn new(kind: SimKind, categories: usize, n: usize, seed: u64) -> Self {
        Self {
            kind,
            categories,
            n,
            seed,
            geometry: Geometry::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.categories < 2 {
            return Err(Error::InvalidSpec("need at least 2 categories".into()));
        }
        if self.n < self.categories {
            return Err(Error::InvalidSpec("need at least one row per category".into()));
        }
        let g = &self.geometry;
        let ok = match self.kind {
            SimKind::DisjointRects => g.x_reach >= 0.0 && g.x_reach < 1.0,
            SimKind::OverlappingRects => g.overlap > 0.0 && g.overlap < 1.0,
            SimKind::GaussianBlobs => g.sigma > 0.0 && g.sigma.is_finite(),
            SimKind::ConcentricRings => g.ring_width > 0.0 && g.ring_gap > 0.0,
        };
        if !ok {
            return Err(Error::InvalidSpec(format!("bad geometry for {}", self.kind.name())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub table: Table,
    pub rules: Vec<RuleSpec>,
    /// Dependencies that hold by construction, over columns (cat, x, y).
    pub truth: Vec<FunctionalDependency>,
}

pub fn category_name(i: usize) -> String {
    format!("c{i}")
}

fn regions(spec: &SimSpec) -> Vec<Region> {
    let g = &spec.geometry;
    (0..spec.categories)
        .map(|i| {
            let f = i as f64;
            match spec.kind {
                SimKind::DisjointRects => {
                    let y0 = if i % 2 == 0 { 0.0 } else { 1.5 };
                    Region::Box {
                        x_min: f,
                        x_max: f + 1.0 + g.x_reach,
                        y_min: y0,
                        y_max: y0 + 1.0,
                    }
                }
                SimKind::OverlappingRects => {
                    let step = 1.0 - g.overlap;
                    Region::Box {
                        x_min: f * step,
                        x_max: f * step + 1.0,
                        y_min: 0.0,
                        y_max: 1.0,
                    }
                }
                SimKind::GaussianBlobs => {
                    // Centres 7 sigma apart keep the 3-sigma boxes apart.
                    let s = 7.0 * g.sigma;
                    let (cx, cy) = (f * s, (i % 2) as f64 * s);
                    Region::Box {
                        x_min: cx - 3.0 * g.sigma,
                        x_max: cx + 3.0 * g.sigma,
                        y_min: cy - 3.0 * g.sigma,
                        y_max: cy + 3.0 * g.sigma,
                    }
                }
                SimKind::ConcentricRings => {
                    let inner = f * (g.ring_width + g.ring_gap);
                    Region::Annulus {
                        cx: 0.0,
                        cy: 0.0,
                        inner,
                        outer: inner + g.ring_width,
                    }
                }
            }
        })
        .collect()
}

fn draw<R: Rng>(region: &Region, kind: SimKind, sigma: f64, rng: &mut R) -> (f64, f64) {
    match *region {
        Region::Box {
            x_min,
            x_max,
            y_min,
            y_max,
        } => {
            if kind == SimKind::GaussianBlobs {
                let (cx, cy) = ((x_min + x_max) / 2.0, (y_min + y_max) / 2.0);
                let normal = Normal::new(0.0, sigma).expect("validated sigma");
                let mut one = |c: f64| loop {
                    let d: f64 = normal.sample(rng);
                    if d.abs() <= 3.0 * sigma {
                        return c + d;
                    }
                };
                let x = one(cx);
                (x, one(cy))
            } else {
                (rng.gen_range(x_min..=x_max), rng.gen_range(y_min..=y_max))
            }
        }
        Region::Annulus { cx, cy, inner, outer } => {
            // Uniform over the annulus area.
            let r = (rng.gen_range(inner * inner..=outer * outer)).sqrt();
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            (cx + r * theta.cos(), cy + r * theta.sin())
        }
        Region::Polygon { .. } => unreachable!("simulations use boxes and annuli"),
    }
}

pub fn simulate(spec: &SimSpec) -> Result<Simulation> {
    spec.validate()?;
    let regs = regions(spec);
    let schema = Schema::new(vec![
        Column::new("cat", ColumnKind::Categorical),
        Column::new("x", ColumnKind::Numeric),
        Column::new("y", ColumnKind::Numeric),
    ])?;
    let rows = (0..spec.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.seed, i as u64);
            let c = rng.gen_range(0..spec.categories);
            let (mut x, mut y) = draw(&regs[c], spec.kind, spec.geometry.sigma, &mut rng);
            // Trigonometry can land a hair outside an annulus; redraw rather
            // than plant a violation.
            while !regs[c].contains(x, y) {
                (x, y) = draw(&regs[c], spec.kind, spec.geometry.sigma, &mut rng);
            }
            vec![Cell::categorical(category_name(c)), Cell::from_f64(x), Cell::from_f64(y)]
        })
        .collect();
    let table = Table::new(schema, rows)?;
    let rules = vec![RuleSpec::Region {
        category: "cat".into(),
        x: "x".into(),
        y: "y".into(),
        regions: regs
            .into_iter()
            .enumerate()
            .map(|(i, r)| (category_name(i), r))
            .collect::<BTreeMap<_, _>>(),
    }];
    let truth = if spec.kind.is_disjoint() {
        vec![FunctionalDependency::exact(vec![1, 2], vec![0])?]
    } else {
        Vec::new()
    };
    Ok(Simulation { table, rules, truth })
}
