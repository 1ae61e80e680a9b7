use tabperm_core::binning::discretize;
use tabperm_core::eval::violation_rate;
use tabperm_core::fd::fd_holds;
use tabperm_core::sim::{simulate, SimKind, SimSpec};

#[test]
fn disjoint_two_category_fd_is_exact_on_bins() {
    let sim = simulate(&SimSpec::new(SimKind::DisjointRects, 2, 1000, 3)).unwrap();
    let binned = discretize(&sim.table, 32);
    assert_eq!(fd_holds(&binned, &[1, 2], 0).unwrap(), (true, 0.0));
    assert_eq!(sim.truth.len(), 1);
}

#[test]
fn overlapping_rects_break_the_fd() {
    let sim = simulate(&SimSpec::new(SimKind::OverlappingRects, 2, 2000, 3)).unwrap();
    let binned = discretize(&sim.table, 32);
    let (holds, g3) = fd_holds(&binned, &[1, 2], 0).unwrap();
    assert!(!holds && g3 > 0.0, "{g3}");
    assert!(sim.truth.is_empty());
}

#[test]
fn every_kind_is_clean_against_its_rules() {
    for kind in SimKind::ALL {
        for seed in 0..3 {
            let sim = simulate(&SimSpec::new(kind, 5, 500, seed)).unwrap();
            assert_eq!(violation_rate(&sim.table, &sim.rules, None).unwrap()[0].violations, 0);
        }
    }
}
