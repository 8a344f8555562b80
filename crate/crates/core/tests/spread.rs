mod common;

use bubbletower_core::infinity::subset_energy;
use bubbletower_core::spread::{
    comparison_certify, comparison_certify_tau, min_gap_ratio, parse_spread, partition, sigma,
    subset_label, theorem1_certify, validate_spread, validate_spreading, CertificateKind,
    ComparisonInput, Rejection, Spread, SpreadMember, StripLadder, DEFAULT_TAU_MARGIN,
};
use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// K-value whose singleton energy c·K^{−(n−2)/n} equals `e` (c = 1).
fn value_for_energy(n: usize, e: f64) -> f64 {
    e.powf(-(n as f64) / (n as f64 - 2.0))
}

fn member(label: &str, values: Vec<f64>, laplacian: Vec<f64>) -> SpreadMember {
    SpreadMember {
        label: label.into(),
        values,
        laplacian,
        solvable: None,
        samples: Vec::new(),
    }
}

fn two_point(n: usize, e2: f64) -> SpreadMember {
    member(
        "K",
        vec![value_for_energy(n, 1.0), value_for_energy(n, e2)],
        vec![-1.0, -1.0],
    )
}

fn three_class() -> Spread {
    parse_spread(&read_corpus("spread_three_class.toml")).unwrap()
}

#[test]
fn ladder_interleaving_and_lookup() {
    let l = StripLadder::new(vec![0.9, 1.9, 2.3], vec![1.1, 2.1, 2.5]).unwrap();
    assert_eq!(l.strip_of(2.0), Some(2));
    assert_eq!(l.strip_of(2.2), None);
    assert_eq!(l.strip_of(0.9), Some(1));
    assert!(StripLadder::new(vec![0.0, 1.0], vec![0.5, 2.0]).is_err());
    assert!(StripLadder::new(vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
    assert!(StripLadder::new(vec![1.2], vec![1.1]).is_err());
    assert!(StripLadder::new(vec![], vec![]).is_err());
    // Degenerate strips with k̲ = k̄ are allowed.
    assert_eq!(
        StripLadder::new(vec![1.0], vec![1.0])
            .unwrap()
            .strip_of(1.0),
        Some(1)
    );
}

#[test]
fn spreading_examples() {
    let n = 3;
    let k = two_point(n, 2.0);
    let pair = k.subset_energy(n, 1.0, 0b11);
    let oracle = (1.0f64 + 2f64.powf(1.5)).powf(2.0 / 3.0);
    assert!((pair - oracle).abs() < 1e-12 && pair > 2.3 && pair < 2.5);
    let ladder = StripLadder::new(vec![0.9, 1.9, 2.3], vec![1.1, 2.1, 2.5]).unwrap();
    let a = validate_spreading(&k, &ladder, &[1, 2], n, 1.0);
    assert!(a.pass, "{:?}", a.checks);
    assert_eq!(a.strips[0b11], Some(3));

    let shifted = StripLadder::new(vec![0.9, 1.9, 2.3], vec![1.1, 2.1, 2.4]).unwrap();
    let a = validate_spreading(&k, &shifted, &[1, 2], n, 1.0);
    assert!(!a.pass);
    assert_eq!(a.first_violation.as_deref(), Some("{1,2}"));

    let single = member("K1", vec![value_for_energy(n, 1.0)], vec![-1.0]);
    let one = StripLadder::new(vec![0.95], vec![1.05]).unwrap();
    assert!(validate_spreading(&single, &one, &[1], n, 1.0).pass);
    let miss = StripLadder::new(vec![1.1], vec![1.2]).unwrap();
    let a = validate_spreading(&single, &miss, &[1], n, 1.0);
    assert!(!a.pass && a.first_violation.as_deref() == Some("{1}"));

    let mut flat = k.clone();
    flat.laplacian[1] = 0.0;
    assert!(!validate_spreading(&flat, &ladder, &[1, 2], n, 1.0).pass);
    assert!(!validate_spreading(&k, &ladder, &[1], n, 1.0).pass);
}

#[test]
fn spread_examples() {
    let n = 3;
    let ladder = StripLadder::new(vec![0.975, 1.95, 2.385], vec![1.025, 2.05, 2.51]).unwrap();
    let a = two_point(n, 2.0);
    let mut b = a.clone();
    b.label = "K'".into();
    b.values = a
        .values
        .iter()
        .zip([1.004, 0.993])
        .map(|(v, s)| v * s)
        .collect();
    let spread = Spread {
        n,
        energy_constant: 1.0,
        ladder: ladder.clone(),
        fixed_indices: vec![1, 2],
        members: vec![a.clone(), b],
    };
    let audit = validate_spread(&spread);
    assert!(audit.pass, "{:?}", audit.violations);
    assert_eq!(audit.strip_map[1..], [Some(1), Some(2), Some(3)]);
    assert!(audit.injective);

    // The second point of one member moves so that the pair changes strip.
    let wide = StripLadder::new(vec![0.95, 1.5, 2.2, 2.42], vec![1.05, 2.1, 2.4, 2.6]).unwrap();
    let moved = member("K''", two_point(n, 1.75).values, vec![-1.0, -1.0]);
    let spread = Spread {
        n,
        energy_constant: 1.0,
        ladder: wide,
        fixed_indices: vec![1, 2],
        members: vec![a.clone(), moved],
    };
    let audit = validate_spread(&spread);
    assert!(!audit.pass);
    assert!(audit.members.iter().all(|m| m.pass));
    assert!(
        audit.violations[0].contains(&subset_label(0b11)),
        "{:?}",
        audit.violations
    );

    let solo = Spread {
        n,
        energy_constant: 1.0,
        ladder,
        fixed_indices: vec![1, 2],
        members: vec![a],
    };
    assert!(validate_spread(&solo).pass);
}

#[test]
fn shared_strip_breaks_injectivity() {
    let n = 3;
    // Both singleton energies sit in one wide strip.
    let k = member(
        "K",
        vec![value_for_energy(n, 1.0), value_for_energy(n, 1.02)],
        vec![-1.0, -1.0],
    );
    let ladder = StripLadder::new(vec![0.9, 1.5], vec![1.1, 1.7]).unwrap();
    let spread = Spread {
        n,
        energy_constant: 1.0,
        ladder,
        fixed_indices: vec![1, 1],
        members: vec![k],
    };
    let audit = validate_spread(&spread);
    assert!(!audit.injective && !audit.pass);
}

#[test]
fn heart_spread_has_three_ordered_classes() {
    let spread = parse_spread(&read_corpus("spread_heart.toml")).unwrap();
    let part = partition(&spread).unwrap();
    assert_eq!(part.classes.len(), 3);
    let strips = part.strips();
    assert!(strips.windows(2).all(|w| w[0] < w[1]));
    let (n, c) = (spread.n, spread.energy_constant);
    let mu: Vec<f64> = part
        .classes
        .iter()
        .map(|cl| {
            let m = &spread.members[cl.members[0]];
            subset_energy(
                n,
                c,
                m.values
                    .iter()
                    .zip(&m.laplacian)
                    .filter(|(_, l)| **l < 0.0)
                    .map(|(v, _)| *v),
            )
        })
        .collect();
    assert!(mu.windows(2).all(|w| w[0] < w[1]), "{mu:?}");
    for (cl, e) in part.classes.iter().zip(&mu) {
        assert_eq!(
            strip_scan(spread.ladder.lowers(), spread.ladder.uppers(), *e),
            Some(cl.strip)
        );
    }
    // Every member lands in exactly one class.
    let total: usize = part.classes.iter().map(|c| c.members.len()).sum();
    assert_eq!(total, spread.members.len());
}

#[test]
fn common_signature_gives_one_class() {
    let mut spread = three_class();
    let lap = spread.members[0].laplacian.clone();
    for m in &mut spread.members {
        m.laplacian = lap.clone();
    }
    let part = partition(&spread).unwrap();
    assert_eq!(part.classes.len(), 1);
    let cert = theorem1_certify(&spread, &part, 0.95, 1.14).unwrap();
    assert_eq!(cert.kind, CertificateKind::Theorem1);
    assert!(cert.audit.iter().any(|l| l.contains("vacuous")));
}

#[test]
fn sigma_examples() {
    let mut spread = three_class();
    let part = partition(&spread).unwrap();
    let strips = part.strips();
    let set_flags = |spread: &mut Spread, unsolvable_class: Option<usize>| {
        for (ci, cl) in part.classes.iter().enumerate() {
            for &m in &cl.members {
                spread.members[m].solvable = Some(Some(ci) != unsolvable_class);
            }
        }
    };
    set_flags(&mut spread, None);
    assert_eq!(sigma(&part, &spread.members), 0);
    set_flags(&mut spread, Some(2));
    assert_eq!(sigma(&part, &spread.members), strips[2]);
    set_flags(&mut spread, Some(1));
    assert_eq!(sigma(&part, &spread.members), strips[1]);
    // An unknown flag counts as not known to be solvable.
    set_flags(&mut spread, None);
    spread.members[part.classes[0].members[0]].solvable = None;
    assert_eq!(sigma(&part, &spread.members), strips[0]);
}

#[test]
fn class_certificate_examples() {
    let spread = three_class();
    let part = partition(&spread).unwrap();
    let g = min_gap_ratio(&spread.ladder, &part.strips()).unwrap().2;
    assert!(g > 1.3 && g < 1.5, "gap ratio {g}");
    let cert = theorem1_certify(&spread, &part, 0.95, 1.14).unwrap();
    let top = part
        .strips()
        .iter()
        .map(|&s| spread.ladder.upper(s))
        .fold(0.0, f64::max);
    assert!((cert.energy_bound - 1.14 / 0.95 * top).abs() < 1e-12);
    assert!(matches!(
        theorem1_certify(&spread, &part, 0.8, 1.2),
        Err(Rejection::Gap { .. })
    ));
    assert!(matches!(
        theorem1_certify(&spread, &part, 1.0, 1.2),
        Err(Rejection::Input(_))
    ));
    assert!(matches!(
        theorem1_certify(&spread, &part, 0.9, 0.99),
        Err(Rejection::Input(_))
    ));
}

fn comparison_members() -> (SpreadMember, SpreadMember, StripLadder) {
    let s = parse_spread(&read_corpus("spread_comparison.toml")).unwrap();
    let upper = s
        .members
        .iter()
        .find(|m| m.label == "K_sigma")
        .unwrap()
        .clone();
    let lower = s
        .members
        .iter()
        .find(|m| m.label == "K_lower")
        .unwrap()
        .clone();
    // Keep only the two class strips of the file's ladder.
    let ladder = StripLadder::new(
        vec![s.ladder.lower(1), s.ladder.lower(3)],
        vec![s.ladder.upper(1), s.ladder.upper(3)],
    )
    .unwrap();
    (upper, lower, ladder)
}

const INPUT: ComparisonInput = ComparisonInput {
    sigma: 2,
    sigma_lower: 1,
    kappa_prev: 0.95,
    kappa: 1.1,
    cap: None,
};

#[test]
fn comparison_examples() {
    let (upper, lower, ladder) = comparison_members();
    let cert = comparison_certify(&upper, &lower, &ladder, 5, &INPUT).unwrap();
    let (a, b) = cert.window.unwrap();
    assert!((a - 0.95 * 1.4).abs() < 1e-12 && (b - 1.1 * 1.47).abs() < 1e-12);
    assert!((cert.energy_bound - 1.1 / 0.95 * 1.47).abs() < 1e-12);
    assert_eq!(cert.kind, CertificateKind::Comparison);
    assert!(matches!(
        comparison_certify(
            &upper,
            &lower,
            &ladder,
            5,
            &ComparisonInput {
                kappa: 1.3,
                ..INPUT
            }
        ),
        Err(Rejection::Gap { .. })
    ));
    // Identical members share a class; the comparison is refused as input.
    assert!(matches!(
        comparison_certify(&upper, &upper.clone(), &ladder, 5, &INPUT),
        Err(Rejection::Input(_))
    ));
    assert!(matches!(
        comparison_certify(
            &upper,
            &lower,
            &ladder,
            5,
            &ComparisonInput { sigma: 3, ..INPUT }
        ),
        Err(Rejection::Input(_))
    ));
    let tau =
        comparison_certify_tau(&upper, &lower, &ladder, 5, &INPUT, DEFAULT_TAU_MARGIN).unwrap();
    let (ta, tb) = tau.window.unwrap();
    assert!(ta < a && tb > b);
    assert!((ta - a * (1.0 - DEFAULT_TAU_MARGIN)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gap_verdict_survives_shrinking(lo in 0.5f64..0.999, hi in 1.001f64..2.0, t in 0.0f64..1.0) {
        let spread = three_class();
        let part = partition(&spread).unwrap();
        let wide = theorem1_certify(&spread, &part, lo, hi);
        let (lo2, hi2) = (1.0 - (1.0 - lo) * t, 1.0 + (hi - 1.0) * t);
        prop_assume!(lo2 < 1.0 && hi2 > 1.0);
        let narrow = theorem1_certify(&spread, &part, lo2, hi2);
        if !matches!(wide, Err(Rejection::Gap { .. })) {
            let narrow_gap = matches!(narrow, Err(Rejection::Gap { .. }));
            prop_assert!(!narrow_gap);
        }
    }

    #[test]
    fn comparison_window_sits_above_the_lower_strip(
        kp in 0.8f64..0.999,
        k in 1.001f64..1.3,
        lo2 in 1.2f64..2.0,
        width in 0.0f64..0.2,
    ) {
        let (upper, lower, _) = comparison_members();
        let ladder = StripLadder::new(vec![1.0, lo2], vec![1.05, lo2 + width]).unwrap();
        let input = ComparisonInput { kappa_prev: kp, kappa: k, ..INPUT };
        if let Ok(cert) = comparison_certify(&upper, &lower, &ladder, 5, &input) {
            let (a, b) = cert.window.unwrap();
            prop_assert!(a > ladder.upper(1));
            prop_assert!(a < b);
        }
    }

    #[test]
    fn signature_and_strip_partition_agree(seed in any::<u64>(), m in 1usize..=6, count in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spread = random_spread(&mut rng, 5, m, count);
        partition(&spread).unwrap();
        for i in 0..count {
            for j in 0..count {
                let (a, b) = (&spread.members[i], &spread.members[j]);
                let same_sig = a.signature() == b.signature();
                let same_strip = spread.ladder.strip_of(a.mu(5, 1.0)) == spread.ladder.strip_of(b.mu(5, 1.0));
                prop_assert_eq!(same_sig, same_strip);
            }
        }
    }

    #[test]
    fn sigma_ignores_member_order(seed in any::<u64>(), m in 1usize..=5, count in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spread = random_spread(&mut rng, 5, m, count);
        let s0 = sigma(&partition(&spread).unwrap(), &spread.members);
        let mut shuffled = spread.clone();
        shuffled.members.shuffle(&mut rng);
        let s1 = sigma(&partition(&shuffled).unwrap(), &shuffled.members);
        prop_assert_eq!(s0, s1);
    }
}

#[test]
fn spread_files_are_checked() {
    assert!(parse_spread("dim = 2\nfixed_indices = [1]\nlower = [1.0]\nupper = [1.1]\n").is_err());
    assert!(parse_spread("dim = 5\nfixed_indices = [1]\nlower = [1.0\n").is_err());
    let s = three_class();
    assert_eq!(s.members.len(), 6);
    assert!(validate_spread(&s).pass);
}
