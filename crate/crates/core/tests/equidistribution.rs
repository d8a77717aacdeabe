//! Eigenvalue averages against surface averages for smooth bounded test
//! functions on a four-bond graph.
//!
//! The surface side uses the chart-mixture proposal: its weights are bounded,
//! so the jackknife error is trustworthy. The single-chart weight has infinite
//! variance and its reported error understates the spread for statistics that
//! grow near the poles.

use stargraph::model::{generate_lengths, BondLengths, LengthBox};
use stargraph::secular::{eigenvalues, SpectralPoint};
use stargraph::torus::{surface_average_with, torus_point, Proposal};

type TestFn = Box<dyn Fn(&[f64]) -> f64 + Sync>;

/// Mean and batch-means standard error; neighbouring eigenvalues are correlated.
fn batch_mean(f: &dyn Fn(&[f64]) -> f64, pts: &[SpectralPoint], l: &BondLengths, batches: usize) -> (f64, f64) {
    let size = pts.len() / batches;
    let means: Vec<f64> = pts
        .chunks_exact(size)
        .map(|c| c.iter().map(|p| f(&torus_point(p, l))).sum::<f64>() / size as f64)
        .collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (m, (var / batches as f64).sqrt())
}

#[test]
fn smooth_functions_agree_on_both_routes() {
    let l = generate_lengths(LengthBox::new(1.0, 1.0).unwrap(), 4, 21).unwrap();
    let pts = eigenvalues(&l, 20_001).unwrap();
    let v2 = 16.0;
    let lz = l.as_slice().to_vec();
    let tests: Vec<(&str, TestFn)> = vec![
        ("cos 2x_1", Box::new(|x: &[f64]| (2.0 * x[0]).cos())),
        ("sin^2 x_2 cos^2 x_3", Box::new(|x: &[f64]| (x[1].sin() * x[2].cos()).powi(2))),
        ("atan Z'/v^2", Box::new(move |x: &[f64]| {
            let zp: f64 = x.iter().zip(&lz).map(|(x, l)| l / x.cos().powi(2)).sum();
            (zp / v2).atan()
        })),
    ];
    for (name, f) in &tests {
        let (eig, eig_se) = batch_mean(f.as_ref(), &pts[1..], &l, 50);
        let surf = surface_average_with(f, &l, 400_000, 5, Proposal::ChartMixture).unwrap();
        let se = eig_se.hypot(surf.std_error);
        assert!(
            (eig - surf.estimate).abs() < 3.0 * se,
            "{name}: eigenvalues {eig} vs surface {} (se {se})",
            surf.estimate
        );
    }
}
