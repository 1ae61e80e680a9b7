//! Acceptance suite. Runs every criterion, prints one `[PASS]`/`[FAIL]` line
//! each, and exits non-zero if any failed.
//!
//!     cargo test -p tabperm-cli --test acceptance

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use tabperm_core::chain::{self, ChainConfig};
use tabperm_core::codec::{decode_sentence, encode_record};
use tabperm_core::distill::{distill, EdgeKind};
use tabperm_core::eval::rules::violation_rate;
use tabperm_core::eval::stats::{pair_trends_score, shape_score};
use tabperm_core::eval::{discriminator_score, ks_statistic, mle_score, Learner, LearnerKind, Task};
use tabperm_core::fd::oracle::enumerate_fds;
use tabperm_core::fd::{discover_fds, discover_with, DiscoveryOptions, FunctionalDependency};
use tabperm_core::distill::DependencyGraph;
use tabperm_core::order::{optimal_order_bruteforce, condense_scc, total_order, violation_count};
use tabperm_core::sim::{simulate, SimKind, SimSpec};
use tabperm_core::table::{load_table_str, Cell, Column, ColumnKind, Permutation, Schema, Table};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<String, String> {
    let took = start.elapsed();
    ensure!(took < limit, "took {:.1}s, limit {}s", took.as_secs_f64(), limit.as_secs());
    Ok(format!("{:.2}s", took.as_secs_f64()))
}

fn fd_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for seed in 0..200 {
        let case = common::random_fd_case(seed, 6, 1000);
        let fast = discover_fds(&case.table, case.max_lhs, case.threshold).map_err(|e| e.to_string())?;
        let slow = enumerate_fds(&case.table, case.max_lhs, case.threshold).map_err(|e| e.to_string())?;
        ensure!(fast == slow, "table {seed}: discovered {fast:?}, oracle {slow:?}");
        total += fast.len();
    }
    let t = within(Duration::from_secs(60), start)?;
    Ok(format!("200 tables, {total} dependencies, {t}"))
}

fn ordering_optimality() -> Outcome {
    let start = Instant::now();
    let (mut dags, mut cyclic) = (0, 0);
    for seed in 0..500u64 {
        let dag = seed % 2 == 0;
        let g: DependencyGraph = common::random_graph(seed, 8, dag);
        let r = total_order(&g);
        let (_, best) = optimal_order_bruteforce(&g).map_err(|e| e.to_string())?;
        let got = violation_count(&g, &r.permutation).map_err(|e| e.to_string())?;
        ensure!(got == r.violated.len(), "graph {seed}: report disagrees with recount");
        let comp = condense_scc(&g).component_of;
        for e in &r.violated {
            ensure!(comp[e.from] == comp[e.to], "graph {seed}: inter-component edge {e:?} violated");
        }
        if dag {
            ensure!(got == 0 && best == 0, "graph {seed}: DAG ordered with {got} violations");
            dags += 1;
        } else {
            ensure!(best <= got, "graph {seed}: brute force {best} worse than heuristic {got}");
            cyclic += 1;
        }
    }
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!("{dags} DAGs at 0 violations, {cyclic} general graphs intra-component only, {t}"))
}

fn distillation_contract() -> Outcome {
    let edges = |fds: &[FunctionalDependency], m: usize| -> Result<Vec<(usize, usize, EdgeKind)>, String> {
        let g = distill(fds, m).map_err(|e| e.to_string())?;
        let mut v: Vec<_> = g.edges().map(|e| (e.from, e.to, e.kind)).collect();
        v.sort_by_key(|&(a, b, _)| (a, b));
        Ok(v)
    };
    // Columns: State=0, Lat=1, Long=2.
    let location = edges(&[FunctionalDependency::exact(vec![1, 2], vec![0]).unwrap()], 3)?;
    ensure!(
        location == vec![(0, 1, EdgeKind::Type2), (0, 2, EdgeKind::Type2)],
        "{{Lat,Long}}->{{State}} gave {location:?}"
    );
    // Columns: A=0, B=1, C=2.
    let fanout = edges(&[FunctionalDependency::exact(vec![0], vec![1, 2]).unwrap()], 3)?;
    ensure!(
        fanout == vec![(0, 1, EdgeKind::Type1), (0, 2, EdgeKind::Type1)],
        "{{A}}->{{B,C}} gave {fanout:?}"
    );
    Ok("two Type2 back edges; two Type1 forward edges".into())
}

fn random_value<R: Rng>(r: &mut R) -> String {
    const ALPHABET: &[u8] = b"abcXYZ019 .,;:/-_";
    loop {
        let len = r.gen_range(1..=10);
        let s: String = (0..len).map(|_| ALPHABET[r.gen_range(0..ALPHABET.len())] as char).collect();
        if !s.contains(", ") && !s.contains(" is ") {
            return s;
        }
    }
}

fn codec_round_trip() -> Outcome {
    let mut r = common::rng(4);
    for i in 0..10_000 {
        let m = r.gen_range(1..=8);
        let kinds: Vec<bool> = (0..m).map(|_| r.gen_bool(0.5)).collect();
        let schema = Schema::new(
            (0..m)
                .map(|j| Column::new(format!("col {j}"), if kinds[j] { ColumnKind::Numeric } else { ColumnKind::Categorical }))
                .collect(),
        );
        let schema = schema.map_err(|e| format!("pair {i}: {e}"))?;
        let record: Vec<Cell> = kinds
            .iter()
            .map(|&numeric| {
                if numeric {
                    Cell::from_f64(r.gen_range(-1e9..1e9f64) / 10f64.powi(r.gen_range(0..6)))
                } else {
                    Cell::categorical(random_value(&mut r))
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut r);
        let k = Permutation::new(order).unwrap();
        let text = encode_record(&record, &schema, &k).map_err(|e| format!("pair {i}: {e}"))?.text;
        let back = decode_sentence(&text, &schema).map_err(|e| format!("pair {i}: {e} in {text:?}"))?;
        ensure!(back == record, "pair {i}: {text:?} decoded to {back:?}");
    }
    Ok("10000 pairs, 0 failures".into())
}

/// Rule violation rate of a chain model fitted under `k` and sampled once.
fn sampled_violation_rate(sim: &tabperm_core::sim::Simulation, k: &Permutation, config: &ChainConfig, seed: u64) -> Result<f64, String> {
    let model = chain::fit(&sim.table, k, config.clone()).map_err(|e| e.to_string())?;
    let synth = model.sample(4000, seed).map_err(|e| e.to_string())?;
    Ok(violation_rate(&synth, &sim.rules, None).map_err(|e| e.to_string())?[0].rate)
}

fn order_effect() -> Outcome {
    let start = Instant::now();
    let config = ChainConfig {
        context: 1,
        bins: 128,
        alpha: 0.001,
        min_count: 5,
    };
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let sim = simulate(&SimSpec::new(SimKind::DisjointRects, 4, 4000, seed)).map_err(|e| e.to_string())?;
        let fds = discover_with(&sim.table, &DiscoveryOptions::default()).map_err(|e| e.to_string())?;
        let graph = distill(&fds, 3).map_err(|e| e.to_string())?;
        let ordered = total_order(&graph).permutation;
        ensure!(ordered.order()[0] == 0, "seed {seed}: discovered order {:?} does not start with cat", ordered.order());
        // Generate the dependent column last instead of first, which inverts
        // every discovered edge.
        let mut rest = ordered.order()[1..].to_vec();
        rest.push(ordered.order()[0]);
        let reversed = Permutation::new(rest).unwrap();
        let a = sampled_violation_rate(&sim, &ordered, &config, seed + 100)?;
        let b = sampled_violation_rate(&sim, &reversed, &config, seed + 100)?;
        ensure!(a <= 0.05, "seed {seed}: ordered rate {a:.4} above 0.05");
        ensure!(b >= 2.0 * a, "seed {seed}: reversed rate {b:.4} not 2x ordered {a:.4}");
        lines.push(format!("{:.3}/{:.3}", a, b));
    }
    let t = within(Duration::from_secs(120), start)?;
    Ok(format!("ordered/reversed rates {}, {t}", lines.join(" ")))
}

fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |xs: &[f64], v: f64| xs.iter().filter(|&&x| x <= v).count() as f64 / xs.len() as f64;
    a.iter().chain(b).map(|&v| (ecdf(a, v) - ecdf(b, v)).abs()).fold(0.0, f64::max)
}

fn table(header: &str, rows: &[&str]) -> Table {
    load_table_str(&format!("{header}\n{}\n", rows.join("\n")), None).unwrap()
}

fn metric_correctness() -> Outcome {
    let mut r = common::rng(6);
    for i in 0..100 {
        let n = r.gen_range(1..300);
        let k = r.gen_range(1..300);
        let ties = r.gen_bool(0.5);
        let draw = |r: &mut rand_chacha::ChaCha8Rng| if ties { r.gen_range(0..20) as f64 } else { r.gen_range(-5.0..5.0) };
        let a: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
        let b: Vec<f64> = (0..k).map(|_| draw(&mut r)).collect();
        let (got, want) = (ks_statistic(&a, &b), ks_oracle(&a, &b));
        ensure!((got - want).abs() <= 1e-12, "pair {i}: ks {got} vs oracle {want}");
    }
    let sim = simulate(&SimSpec::new(SimKind::GaussianBlobs, 3, 500, 6)).map_err(|e| e.to_string())?.table;
    let copy = Table::new(sim.schema().clone(), sim.rows().to_vec()).unwrap();
    let s = shape_score(&sim, &copy).map_err(|e| e.to_string())?;
    ensure!(s == 1.0, "shape score of a copy is {s}");

    let half: Vec<&str> = (0..100).map(|i| if i < 50 { "A" } else { "B" }).collect();
    let cat = shape_score(&table("c", &half), &table("c", &["A"; 100])).unwrap();
    let bits: Vec<&str> = (0..100).map(|i| if i < 50 { "0" } else { "1" }).collect();
    let num = shape_score(&table("v", &bits), &table("v", &["0"; 100])).unwrap();
    let corr = pair_trends_score(
        &table("x,y", &["1,1", "-1,-1", "1,1", "-1,-1"]),
        &table("x,y", &["1,1", "-1,1", "1,-1", "-1,-1"]),
    )
    .unwrap();
    let coupled = pair_trends_score(
        &table("a,b", &["A,X", "B,Y", "A,X", "B,Y"]),
        &table("a,b", &["A,X", "A,Y", "B,X", "B,Y"]),
    )
    .unwrap();
    for (name, v) in [("categorical shape", cat), ("numeric shape", num), ("correlation pair", corr), ("contingency pair", coupled)] {
        ensure!(v == 0.5, "{name} example scored {v}");
    }
    Ok("100 KS pairs within 1e-12; copy shape 1.0; closed-form examples 0.5".into())
}

fn discriminator_calibration() -> Outcome {
    let real = simulate(&SimSpec::new(SimKind::GaussianBlobs, 3, 1000, 7)).map_err(|e| e.to_string())?.table;
    let mut rows = real.rows().to_vec();
    rows.shuffle(&mut common::rng(8));
    let copy = Table::new(real.schema().clone(), rows).unwrap();
    let shifted = Table::new(
        real.schema().clone(),
        real.rows()
            .iter()
            .map(|r| vec![r[0].clone(), Cell::from_f64(r[1].numeric.unwrap() + 1000.0), Cell::from_f64(r[2].numeric.unwrap() + 1000.0)])
            .collect(),
    )
    .unwrap();
    let mut parts = Vec::new();
    for kind in LearnerKind::ALL {
        let l = Learner { kind, seed: 7 };
        let same = discriminator_score(&real, &copy, &l, 5, 7).map_err(|e| e.to_string())?.accuracy;
        let far = discriminator_score(&real, &shifted, &l, 5, 7).map_err(|e| e.to_string())?.accuracy;
        ensure!((same - 0.5).abs() <= 0.05, "{}: copy accuracy {same:.3}", kind.name());
        ensure!(far >= 0.95, "{}: shifted accuracy {far:.3}", kind.name());
        parts.push(format!("{} copy {:.3} shifted {:.3}", kind.name(), same, far));
    }
    Ok(parts.join("; "))
}

fn mle_sanity() -> Outcome {
    let sim = simulate(&SimSpec::new(SimKind::OverlappingRects, 3, 900, 9)).map_err(|e| e.to_string())?.table;
    let train = sim.select_rows(&(0..600).collect::<Vec<_>>());
    let test = sim.select_rows(&(600..900).collect::<Vec<_>>());
    let synth = Table::new(train.schema().clone(), train.rows().to_vec()).unwrap();
    for kind in LearnerKind::ALL {
        let l = Learner { kind, seed: 3 };
        for (target, task) in [("cat", Task::Classification), ("x", Task::Regression)] {
            let a = mle_score(&train, &test, target, task, &l).map_err(|e| e.to_string())?;
            let b = mle_score(&synth, &test, target, task, &l).map_err(|e| e.to_string())?;
            ensure!(a.score == b.score, "{} {target}: real {} vs synth {}", kind.name(), a.score, b.score);
        }
    }
    let constant = table("label,x", &["yes,1", "yes,2", "yes,3", "yes,4"]);
    let test = table("label,x", &["yes,1", "no,2", "yes,3", "yes,9", "no,0"]);
    for kind in LearnerKind::ALL {
        let s = mle_score(&constant, &test, "label", Task::Classification, &Learner { kind, seed: 0 })
            .map_err(|e| e.to_string())?
            .score;
        ensure!(s == 0.6, "{}: constant-label accuracy {s}, majority share 0.6", kind.name());
    }
    Ok("identical-synth scores equal real; constant label scores majority share".into())
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn pipeline_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sim_dir = tmp.path().join("sim");
    let run = |args: &[&str]| -> Result<(), String> {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = tabperm_cli::run(std::iter::once("tabperm").chain(args.iter().copied()), &mut out, &mut err);
        ensure!(code == 0, "{args:?} exited {code}: {}", String::from_utf8_lossy(&err));
        Ok(())
    };
    let sim = sim_dir.to_str().unwrap();
    run(&["simulate", "--kind", "disjoint_rects", "--n", "1500", "--seed", "3", "--out", sim])?;
    let data = sim_dir.join("data.csv");
    let rules = sim_dir.join("rules.json");
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        run(&[
            "pipeline",
            "--input",
            data.to_str().unwrap(),
            "--rules",
            rules.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "11",
            "--target",
            "cat",
            "--task",
            "classification",
        ])?;
        runs.push(read_dir(&out));
    }
    ensure!(runs[0].len() >= 10, "only {} artifacts written", runs[0].len());
    ensure!(runs[0].keys().eq(runs[1].keys()), "artifact sets differ");
    for (name, bytes) in &runs[0] {
        ensure!(runs[1][name] == *bytes, "{name} differs between runs");
    }
    Ok(format!("{} artifacts byte-identical", runs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("FD discovery matches exhaustive enumeration", fd_oracle_equivalence),
        ("column ordering is optimal on DAGs and confined to components", ordering_optimality),
        ("distillation edge contract", distillation_contract),
        ("row codec round trip", codec_round_trip),
        ("dependency order lowers rule violations", order_effect),
        ("metric correctness", metric_correctness),
        ("discriminator calibration", discriminator_calibration),
        ("MLE harness sanity", mle_sanity),
        ("pipeline determinism", pipeline_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
