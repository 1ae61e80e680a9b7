//! Declarative fact checks over synthetic rows.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{ColumnKind, Schema, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Region {
    Box {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    /// Vertices in order; the closing edge back to the first vertex is
    /// implied, and a repeated first vertex at the end is tolerated.
    Polygon { vertices: Vec<[f64; 2]> },
    /// Points whose distance from the centre lies in `[inner, outer]`.
    Annulus {
        cx: f64,
        cy: f64,
        inner: f64,
        outer: f64,
    },
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    cross(a, b, p) == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_touch(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

impl Region {
    fn vertices(&self) -> &[[f64; 2]] {
        match self {
            Region::Polygon { vertices } => match vertices.split_last() {
                Some((last, rest)) if vertices.len() > 1 && last == &vertices[0] => rest,
                _ => vertices,
            },
            _ => &[],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |vs: &[f64]| vs.iter().all(|v| v.is_finite());
        match self {
            Region::Box {
                x_min,
                x_max,
                y_min,
                y_max,
            } => {
                if !finite(&[*x_min, *x_max, *y_min, *y_max]) || x_min > x_max || y_min > y_max {
                    return Err(Error::InvalidRule("box bounds must be finite and ordered".into()));
                }
            }
            Region::Annulus { cx, cy, inner, outer } => {
                if !finite(&[*cx, *cy, *inner, *outer]) || *inner < 0.0 || inner > outer {
                    return Err(Error::InvalidRule("annulus radii must satisfy 0 <= inner <= outer".into()));
                }
            }
            Region::Polygon { .. } => {
                let v = self.vertices();
                let n = v.len();
                if n < 3 {
                    return Err(Error::InvalidRule("polygon needs at least 3 vertices".into()));
                }
                if !v.iter().all(|p| finite(p)) {
                    return Err(Error::InvalidRule("polygon vertices must be finite".into()));
                }
                for i in 0..n {
                    if v[i] == v[(i + 1) % n] {
                        return Err(Error::InvalidRule("polygon has a zero-length edge".into()));
                    }
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if adjacent {
                            continue;
                        }
                        if segments_touch(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                            return Err(Error::InvalidRule("polygon is self-intersecting".into()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Membership test; boundary points count as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Region::Box {
                x_min,
                x_max,
                y_min,
                y_max,
            } => x >= *x_min && x <= *x_max && y >= *y_min && y <= *y_max,
            Region::Annulus { cx, cy, inner, outer } => {
                let r = (x - cx).hypot(y - cy);
                r >= *inner && r <= *outer
            }
            Region::Polygon { .. } => {
                let v = self.vertices();
                let n = v.len();
                let p = [x, y];
                let mut inside = false;
                for i in 0..n {
                    let a = v[i];
                    let b = v[(i + 1) % n];
                    if on_segment(p, a, b) {
                        return true;
                    }
                    if (a[1] > y) != (b[1] > y) {
                        let t = (y - a[1]) / (b[1] - a[1]);
                        if x < a[0] + t * (b[0] - a[0]) {
                            inside = !inside;
                        }
                    }
                }
                inside
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleSpec {
    /// Rows agreeing with the reference on `lhs` should carry its modal
    /// `rhs` value.
    Fd { lhs: Vec<String>, rhs: String },
    Range { column: String, lo: f64, hi: f64 },
    Region {
        category: String,
        x: String,
        y: String,
        regions: BTreeMap<String, Region>,
    },
}

impl RuleSpec {
    pub fn name(&self) -> String {
        match self {
            RuleSpec::Fd { lhs, rhs } => format!("fd: {} -> {}", lhs.join(", "), rhs),
            RuleSpec::Range { column, lo, hi } => format!("range: {column} in [{lo}, {hi}]"),
            RuleSpec::Region { category, x, y, .. } => format!("region: ({x}, {y}) by {category}"),
        }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        let col = |name: &str| {
            schema
                .index_of(name)
                .ok_or_else(|| Error::InvalidRule(format!("unknown column `{name}`")))
        };
        let numeric = |name: &str| -> Result<()> {
            if schema.kind(col(name)?) != ColumnKind::Numeric {
                return Err(Error::KindMismatch(format!("column `{name}` must be numeric")));
            }
            Ok(())
        };
        match self {
            RuleSpec::Fd { lhs, rhs } => {
                if lhs.is_empty() {
                    return Err(Error::InvalidRule("fd rule needs a determinant".into()));
                }
                for l in lhs {
                    col(l)?;
                }
                col(rhs)?;
                if lhs.contains(rhs) {
                    return Err(Error::InvalidRule(format!("`{rhs}` on both sides")));
                }
            }
            RuleSpec::Range { column, lo, hi } => {
                numeric(column)?;
                if !(lo <= hi) {
                    return Err(Error::InvalidRule("range needs lo <= hi".into()));
                }
            }
            RuleSpec::Region { category, x, y, regions } => {
                col(category)?;
                numeric(x)?;
                numeric(y)?;
                for r in regions.values() {
                    r.validate()?;
                }
            }
        }
        Ok(())
    }
}

pub fn rules_from_json(s: &str) -> Result<Vec<RuleSpec>> {
    Ok(serde_json::from_str(s)?)
}

pub fn rules_to_json(rules: &[RuleSpec]) -> String {
    serde_json::to_string_pretty(rules).expect("rules serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CategoryRate {
    pub checked: usize,
    pub violations: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleResult {
    pub rule: String,
    pub checked: usize,
    pub violations: usize,
    /// `violations / checked`, 0 when nothing was checked.
    pub rate: f64,
    /// Rows whose determinant tuple never occurs in the reference.
    pub unseen: usize,
    pub per_category: BTreeMap<String, CategoryRate>,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Modal rhs values per lhs tuple of the reference.
fn fd_lookup(reference: &Table, lhs: &[usize], rhs: usize) -> HashMap<Vec<String>, Vec<String>> {
    let mut counts: HashMap<Vec<String>, HashMap<&str, usize>> = HashMap::new();
    for row in reference.rows() {
        let key = lhs.iter().map(|&c| row[c].lexical.clone()).collect();
        *counts.entry(key).or_default().entry(row[rhs].lexical.as_str()).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(k, vals)| {
            let best = vals.values().copied().max().unwrap_or(0);
            let modes = vals
                .into_iter()
                .filter(|&(_, c)| c == best)
                .map(|(v, _)| v.to_string())
                .collect();
            (k, modes)
        })
        .collect()
}

pub fn violation_rate(synth: &Table, rules: &[RuleSpec], reference: Option<&Table>) -> Result<Vec<RuleResult>> {
    let schema = synth.schema();
    for r in rules {
        r.validate(schema)?;
    }
    let mut out = Vec::with_capacity(rules.len());
    for rule in rules {
        let mut per: BTreeMap<String, CategoryRate> = BTreeMap::new();
        let mut checked = 0;
        let mut violations = 0;
        let mut unseen = 0;
        let mut record = |cat: Option<&str>, bad: bool| {
            checked += 1;
            violations += bad as usize;
            if let Some(cat) = cat {
                let e = per.entry(cat.to_string()).or_default();
                e.checked += 1;
                e.violations += bad as usize;
            }
        };
        match rule {
            RuleSpec::Fd { lhs, rhs } => {
                let reference = reference.ok_or_else(|| Error::InvalidRule("fd rule needs a reference table".into()))?;
                if reference.schema() != schema {
                    return Err(Error::SchemaMismatch("reference schema differs".into()));
                }
                let l: Vec<usize> = lhs.iter().map(|n| schema.require(n)).collect::<Result<_>>()?;
                let r = schema.require(rhs)?;
                let lookup = fd_lookup(reference, &l, r);
                for row in synth.rows() {
                    let key: Vec<String> = l.iter().map(|&c| row[c].lexical.clone()).collect();
                    match lookup.get(&key) {
                        None => unseen += 1,
                        Some(modes) => {
                            let v = &row[r].lexical;
                            record(Some(v), !modes.contains(v));
                        }
                    }
                }
            }
            RuleSpec::Range { column, lo, hi } => {
                let c = schema.require(column)?;
                for row in synth.rows() {
                    let v = row[c].numeric.expect("validated numeric");
                    record(None, v < *lo || v > *hi);
                }
            }
            RuleSpec::Region { category, x, y, regions } => {
                let (c, xi, yi) = (schema.require(category)?, schema.require(x)?, schema.require(y)?);
                for row in synth.rows() {
                    let cat = row[c].lexical.as_str();
                    let (px, py) = (row[xi].numeric.expect("numeric"), row[yi].numeric.expect("numeric"));
                    let inside = regions.get(cat).is_some_and(|reg| reg.contains(px, py));
                    record(Some(cat), !inside);
                }
            }
        }
        for e in per.values_mut() {
            e.rate = ratio(e.violations, e.checked);
        }
        out.push(RuleResult {
            rule: rule.name(),
            checked,
            violations,
            rate: ratio(violations, checked),
            unseen,
            per_category: per,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::load_table_str;

    fn unit_box() -> Region {
        Region::Box {
            x_min: 0.0,
            x_max: 1.0,
            y_min: 0.0,
            y_max: 1.0,
        }
    }

    fn region_rule() -> RuleSpec {
        RuleSpec::Region {
            category: "cat".into(),
            x: "x".into(),
            y: "y".into(),
            regions: [("a".to_string(), unit_box())].into_iter().collect(),
        }
    }

    #[test]
    fn point_outside_box_is_full_violation() {
        let t = load_table_str("cat,x,y\na,2,0.5\n", None).unwrap();
        let r = violation_rate(&t, &[region_rule()], None).unwrap();
        assert_eq!(r[0].rate, 1.0);
        assert_eq!(r[0].per_category["a"].rate, 1.0);
    }

    #[test]
    fn boundary_counts_inside() {
        let sq = Region::Polygon {
            vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]],
        };
        sq.validate().unwrap();
        for (x, y) in [(0.0, 0.0), (1.0, 0.0), (2.0, 1.0), (1.0, 1.0), (0.0, 2.0)] {
            assert!(sq.contains(x, y), "({x},{y})");
        }
        assert!(!sq.contains(2.5, 1.0));
        assert!(unit_box().contains(1.0, 1.0));
    }

    #[test]
    fn concave_polygon() {
        // An L shape.
        let l = Region::Polygon {
            vertices: vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0], [0.0, 0.0]],
        };
        l.validate().unwrap();
        assert!(l.contains(0.5, 1.5));
        assert!(!l.contains(1.5, 1.5));
    }

    #[test]
    fn polygon_validation() {
        let bow = Region::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
        };
        assert!(matches!(bow.validate(), Err(Error::InvalidRule(_))));
        let two = Region::Polygon {
            vertices: vec![[0.0, 0.0], [1.0, 1.0]],
        };
        assert!(two.validate().is_err());
    }

    #[test]
    fn annulus() {
        let a = Region::Annulus {
            cx: 0.0,
            cy: 0.0,
            inner: 1.0,
            outer: 2.0,
        };
        assert!(a.contains(1.5, 0.0));
        assert!(a.contains(0.0, 2.0));
        assert!(!a.contains(0.5, 0.0));
    }

    #[test]
    fn fd_rule_uses_modal_reference() {
        let real = load_table_str("e,n\nBach,13\nBach,13\nHS,9\n", None).unwrap();
        let synth = load_table_str("e,n\nBach,13\nBach,12\nPhD,20\n", None).unwrap();
        let rule = RuleSpec::Fd {
            lhs: vec!["e".into()],
            rhs: "n".into(),
        };
        let r = violation_rate(&synth, std::slice::from_ref(&rule), Some(&real)).unwrap();
        assert_eq!(r[0].checked, 2);
        assert_eq!(r[0].violations, 1);
        assert_eq!(r[0].unseen, 1);
        assert_eq!(r[0].rate, 0.5);
        let own = violation_rate(&real, &[rule], Some(&real)).unwrap();
        assert_eq!(own[0].rate, 0.0);
    }

    #[test]
    fn range_rule_and_kinds() {
        let t = load_table_str("c,v\na,1\na,5\n", None).unwrap();
        let r = violation_rate(
            &t,
            &[RuleSpec::Range {
                column: "v".into(),
                lo: 0.0,
                hi: 2.0,
            }],
            None,
        )
        .unwrap();
        assert_eq!(r[0].rate, 0.5);
        let bad = RuleSpec::Range {
            column: "c".into(),
            lo: 0.0,
            hi: 1.0,
        };
        assert!(matches!(violation_rate(&t, &[bad], None), Err(Error::KindMismatch(_))));
        let missing = RuleSpec::Range {
            column: "zz".into(),
            lo: 0.0,
            hi: 1.0,
        };
        assert!(matches!(violation_rate(&t, &[missing], None), Err(Error::InvalidRule(_))));
    }

    #[test]
    fn json_shape() {
        let json = r#"[{"kind":"region","category":"cat","x":"x","y":"y",
            "regions":{"a":{"shape":"box","x_min":0,"x_max":1,"y_min":0,"y_max":1}}}]"#;
        let rules = rules_from_json(json).unwrap();
        assert_eq!(rules, vec![region_rule()]);
        assert_eq!(rules_from_json(&rules_to_json(&rules)).unwrap(), rules);
    }
}
