use hkpr::sampling::{AliasTable, RandomSource};

/// Upper 0.001 quantile of chi-square via the Wilson–Hilferty approximation.
fn chi_square_critical(dof: usize) -> f64 {
    let k = dof as f64;
    let z = 3.090_232_306;
    let a = 2.0 / (9.0 * k);
    k * (1.0 - a + z * a.sqrt()).powi(3)
}

fn chi_square(table: &AliasTable, weights: &[f64], draws: usize, seed: u64) -> f64 {
    let mut rng = RandomSource::new(seed);
    let mut counts = vec![0usize; weights.len()];
    for _ in 0..draws {
        counts[table.sample(&mut rng)] += 1;
    }
    let total: f64 = weights.iter().sum();
    counts
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&c, &w)| {
            let expected = draws as f64 * w / total;
            (c as f64 - expected).powi(2) / expected
        })
        .sum()
}

#[test]
fn alias_goodness_of_fit() {
    let cases: Vec<Vec<f64>> = vec![
        vec![1.0, 2.0],
        vec![0.1, 0.2, 0.3, 0.4],
        (1..=50).map(|i| i as f64).collect(),
        (0..20).map(|i| 0.7f64.powi(i)).collect(),
        vec![5.0, 0.0, 1.0, 0.0, 3.0],
    ];
    for (i, w) in cases.iter().enumerate() {
        let table = AliasTable::new(w).unwrap();
        let support = w.iter().filter(|&&x| x > 0.0).count();
        let stat = chi_square(&table, w, 200_000, 100 + i as u64);
        let crit = chi_square_critical(support - 1);
        assert!(stat < crit, "case {i}: chi2 {stat} >= {crit}");
    }
}

#[test]
fn exact_slot_probabilities_match_weights() {
    let w = [0.5, 3.0, 1.5, 0.0, 2.0];
    let table = AliasTable::new(&w).unwrap();
    let total: f64 = w.iter().sum();
    for (i, &x) in w.iter().enumerate() {
        assert!((table.slot_probability(i) - x / total).abs() < 1e-12);
    }
    let mut rng = RandomSource::new(5);
    assert!((0..10_000).all(|_| table.sample(&mut rng) != 3));
}

#[test]
fn rejects_degenerate_weights() {
    assert!(AliasTable::new(&[]).is_err());
    assert!(AliasTable::new(&[0.0, 0.0]).is_err());
    assert!(AliasTable::new(&[1.0, -0.5]).is_err());
    assert!(AliasTable::new(&[1.0, f64::NAN]).is_err());
}
