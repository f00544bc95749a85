use pcls::linalg::{lstsq, Matrix};
use pcls::reduction::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

#[test]
fn identical_samples_give_canonical_directions() {
    let s = SampleSet::from_points(vec![vec![1.0, 2.0, 3.0]; 4]).unwrap();
    let b = svd_basis(&s, 2).unwrap();
    assert_eq!(b.phi0, vec![1.0, 2.0, 3.0]);
    assert_eq!(b.phi, Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]));
}

#[test]
fn line_is_reconstructed_by_one_direction() {
    let d = [0.3, -1.0, 2.0, 0.5];
    let pts: Vec<Vec<f64>> = (0..6).map(|t| d.iter().map(|x| 1.0 + x * t as f64).collect()).collect();
    let s = SampleSet::from_points(pts.clone()).unwrap();
    let b = svd_basis(&s, 1).unwrap();
    for p in &pts {
        assert!(reassign_distance(p, &b).unwrap() <= 1e-20);
    }
}

#[test]
fn full_basis_is_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = random_points(&mut rng, 30, 7);
    let s = SampleSet::from_points(pts.clone()).unwrap();
    let b = svd_basis(&s, 7).unwrap();
    assert!(b.phi.orthonormality_defect() < 1e-12);
    for p in &pts {
        assert!(reassign_distance(p, &b).unwrap().sqrt() <= 1e-10);
    }
    assert!(svd_basis(&s, 8).is_err());
}

#[test]
fn distance_matches_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = SampleSet::from_points(random_points(&mut rng, 20, 6)).unwrap();
    let b = svd_basis(&s, 3).unwrap();
    for p in random_points(&mut rng, 10, 6) {
        let d: Vec<f64> = p.iter().zip(&b.phi0).map(|(x, y)| x - y).collect();
        let v = lstsq(&b.phi, &d).unwrap();
        let fit = b.phi.matvec(&v).unwrap();
        let oracle: f64 = d.iter().zip(&fit).map(|(x, y)| (x - y).powi(2)).sum();
        assert!((reassign_distance(&p, &b).unwrap() - oracle).abs() <= 1e-10);
        assert!(reassign_distance(&b.expand(&v).unwrap(), &b).unwrap() <= 1e-20);
    }
}

#[test]
fn single_cluster_matches_svd_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = SampleSet::from_points(random_points(&mut rng, 25, 5)).unwrap();
    let b = svd_basis(&s, 2).unwrap();
    let km = kmeans(&s, 1, 2, 0).unwrap();
    assert_eq!(km.bases[0], b);
    let ks = ksvd(&s, &[2], &vec![0; 25]).unwrap();
    assert_eq!(ks.bases[0], b);
    assert_eq!(ks.iterations, 1);
}

#[test]
fn one_cluster_per_sample_costs_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = SampleSet::from_points(random_points(&mut rng, 6, 3)).unwrap();
    let km = kmeans(&s, 6, 0, 1).unwrap();
    assert_eq!(km.cluster_sizes(), vec![1; 6]);
    assert_eq!(ksvd_cost(&km, &s).unwrap(), 0.0);
}

#[test]
fn separated_clouds_are_recovered_by_kmeans() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for c in 0..2 {
        for _ in 0..15 {
            let centre = if c == 0 { -50.0 } else { 50.0 };
            pts.push((0..4).map(|_| centre + rng.random_range(-1.0..1.0)).collect());
            truth.push(c);
        }
    }
    let s = SampleSet::from_points(pts).unwrap();
    for seed in 0..20 {
        let km = kmeans(&s, 2, 1, seed).unwrap();
        assert!(same_partition(&km.assignments, &truth), "seed {seed}");
    }
}

#[test]
fn identical_samples_converge_at_once() {
    let s = SampleSet::from_points(vec![vec![0.5, -0.5]; 5]).unwrap();
    let m = ksvd(&s, &[1, 1], &[0, 1, 0, 1, 0]).unwrap();
    assert_eq!(m.iterations, 1);
    assert_eq!(ksvd_cost(&m, &s).unwrap(), 0.0);
}

#[test]
fn two_affine_lines_are_separated() {
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for t in [-1.5, -0.5, 0.5, 1.5] {
        pts.push(vec![t, 0.0, 5.0]);
        truth.push(0);
        pts.push(vec![8.0, 8.0 + t, 0.0]);
        truth.push(1);
    }
    let s = SampleSet::from_points(pts).unwrap();
    let m = ksvd_from_kmeans(&s, 2, 1, 4).unwrap();
    assert!(same_partition(&m.assignments, &truth));
    assert!(ksvd_cost(&m, &s).unwrap() < 1e-20);
}

#[test]
fn cost_identity_and_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s = SampleSet::from_points(random_points(&mut rng, 60, 6)).unwrap();
    let init = random_partition(60, 3, 9);
    let m = ksvd(&s, &[2, 1, 3], &init).unwrap();
    for w in m.costs_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * m.costs_trace[0]);
    }
    let direct = ksvd_cost(&m, &s).unwrap();
    let byproduct = trailing_singular_cost(&m.assignments, &m.m_per_cluster, &s).unwrap();
    assert!((direct - byproduct).abs() <= 1e-8 * direct.max(1e-300));
    assert!((direct - m.costs_trace.last().unwrap()).abs() <= 1e-8 * direct);
    for b in &m.bases {
        assert!(b.phi.orthonormality_defect() < 1e-10);
    }
}

#[test]
fn runs_are_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = SampleSet::from_points(random_points(&mut rng, 40, 5)).unwrap();
    let a = ksvd_from_kmeans(&s, 3, 2, 17).unwrap();
    let b = ksvd_from_kmeans(&s, 3, 2, 17).unwrap();
    assert_eq!(a, b);
}

#[test]
fn json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = SampleSet::from_points(random_points(&mut rng, 12, 3)).unwrap();
    let m = ksvd_from_kmeans(&s, 2, 1, 0).unwrap();
    let back = ClusterModel::from_json(&m.to_json()).unwrap();
    assert_eq!(back.assignments, m.assignments);
    assert_eq!(back.bases, m.bases);
    assert!(ClusterModel::from_json("{\"version\":9}").is_err());
}

#[test]
fn scale_example() {
    let mut a = vec![0.0; 4];
    a[0] = 10.0;
    let mut b = vec![0.0; 4];
    b[0] = 100.0;
    let mut c = a.clone();
    c[1] = 1.0;
    let s = SampleSet::from_points(vec![a, b, c]).unwrap();
    // Euclidean clustering puts the two nearby points together
    let km = kmeans(&s, 2, 1, 0).unwrap();
    assert!(same_partition(&km.assignments, &[0, 1, 0]));
    // with an affine line per cluster every 2-partition of three points has zero
    // cost, so the collinear grouping is a fixed point once reached
    let ks = ksvd(&s, &[1, 1], &[0, 0, 1]).unwrap();
    assert!(same_partition(&ks.assignments, &[0, 0, 1]));
    assert!(ksvd_cost(&ks, &s).unwrap() < 1e-20);
}

#[test]
fn cap_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = SampleSet::from_points(random_points(&mut rng, 50, 4)).unwrap();
    let init = random_partition(50, 4, 3);
    assert!(matches!(ksvd_with_cap(&s, &[1; 4], &init, 1), Err(pcls::Error::IterationCap(1))));
}
