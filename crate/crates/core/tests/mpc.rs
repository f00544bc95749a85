use pcls::bench::{gen_mpc, random_dynamics, RandomMpcSpec, Stability};
use pcls::linalg::{qr_full, vec_ops};
use pcls::mpc::*;
use pcls::pcls::eliminate_equalities;
use pcls::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(n_x: usize, n_u: usize, horizon: usize, seed: u64) -> RandomMpcSpec {
    RandomMpcSpec { n_x, n_u, horizon, seed, ..Default::default() }
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).unwrap().norm_fro() / b.norm_fro().max(1e-300)
}

fn abs(m: &Matrix) -> Matrix {
    m.map(|x| x.abs())
}

fn dense_weights(p: &mut MpcProblem) {
    let (nx, nu, t) = (p.model.n_x(), p.model.n_u(), p.model.horizon());
    let dense = |r: usize, c: usize| Matrix::from_fn(r, c, |i, j| 1.0 + ((i * 7 + j * 3) % 5) as f64 * 0.1);
    p.weights = MpcWeights::constant(dense(nu, nu), dense(nx, nx), t);
}

#[test]
fn equality_rows_follow_the_dynamics() {
    let p = gen_mpc(&spec(3, 2, 4, 1)).unwrap();
    let (c, e) = build_equality(&p.model, &p.x0).unwrap();
    assert_eq!(c.shape(), (12, 20));
    let inputs: Vec<Vec<f64>> = (0..4).map(|k| vec![0.3 * k as f64, -0.1]).collect();
    let states = p.model.simulate(&p.x0, &inputs).unwrap();
    let mut z = vec![0.0; 20];
    for k in 0..4 {
        z[u_offset(k, 3, 2)..u_offset(k, 3, 2) + 2].copy_from_slice(&inputs[k]);
        z[x_offset(k, 3, 2)..x_offset(k, 3, 2) + 3].copy_from_slice(&states[k]);
    }
    let r = vec_ops::sub(&c.matvec(&z).unwrap(), &e);
    assert!(vec_ops::norm2(&r) < 1e-12);
}

#[test]
fn single_step_blocks() {
    let a = Matrix::from_rows(&[&[0.5, 1.0], &[0.0, 2.0]]);
    let b = Matrix::from_rows(&[&[1.0], &[3.0]]);
    let model = LtvModel::lti(a.clone(), b.clone(), 1).unwrap();
    let (c, e) = build_equality(&model, &[1.0, -1.0]).unwrap();
    assert_eq!(c, Matrix::from_rows(&[&[1.0, -1.0, 0.0], &[3.0, 0.0, -1.0]]));
    let ax0 = a.matvec(&[1.0, -1.0]).unwrap();
    assert!(vec_ops::norm2(&vec_ops::add(&e, &ax0)) < 1e-15);
}

#[test]
fn identity_weights_give_identity_cost() {
    let w = MpcWeights::<f64>::constant(Matrix::identity(2), Matrix::identity(3), 4);
    let (a, b) = build_cost(&w);
    assert_eq!(a, Matrix::identity(20));
    assert!(b.iter().all(|&v| v == 0.0));
    let w = MpcWeights::constant(Matrix::from_rows(&[&[1.0, 1.0, 1.0]]), Matrix::identity(2), 3);
    assert_eq!(build_cost(&w).0.shape(), (9, 15));
}

#[test]
fn structured_qr_matches_generic_factor() {
    let mut cases = 0;
    for &horizon in &[2, 5, 10, 20] {
        for &n_x in &[2, 5] {
            for &n_u in &[1, 3] {
                for seed in 0..3 {
                    let p = gen_mpc(&spec(n_x, n_u, horizon, 1000 * horizon as u64 + 10 * seed + n_x as u64)).unwrap();
                    let (c, _) = build_equality(&p.model, &p.x0).unwrap();
                    let ct = c.transpose();
                    let f = qr_mpc(&ct, n_x, n_u, horizon, None).unwrap();
                    let g = qr_full(&ct);
                    assert!(rel(&abs(&f.r), &abs(&g.r)) <= 1e-10, "T={horizon} nx={n_x} nu={n_u}");
                    assert!(pattern_violation(&f, n_x, n_u, horizon) <= 1e-12 * c.norm_fro());
                    assert!(rel(&f.q.matmul(&f.r).unwrap(), &ct) <= 1e-12);
                    assert!(f.q.orthonormality_defect() <= 1e-12);
                    assert_eq!(f.flops.r_phase, exact_r_flops(horizon, n_x, n_u));
                    assert_eq!(f.flops.q_phase, exact_q_flops(horizon, n_x, n_u));
                    assert_eq!(g.flops, exact_qr_full_flops(ct.rows(), ct.cols()));
                    cases += 1;
                }
            }
        }
    }
    assert_eq!(cases, 48);
}

#[test]
fn scalar_model_needs_one_rotation() {
    let model = LtvModel::<f64>::lti(Matrix::from_rows(&[&[0.7]]), Matrix::from_rows(&[&[2.0]]), 1).unwrap();
    let (c, _) = build_equality(&model, &[1.0]).unwrap();
    let f = qr_mpc(&c.transpose(), 1, 1, 1, None).unwrap();
    assert_eq!(f.rotations + f.swaps, 1);
    assert!((f.r[(0, 0)].abs() - 5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn zero_input_rows_skip_work() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (a, _) = random_dynamics(&mut rng, 3, Stability::Stable).unwrap();
    let b = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 0.0], &[0.2, -1.0]]);
    let dense = Matrix::from_rows(&[&[1.0, 0.5], &[0.3, 0.1], &[0.2, -1.0]]);
    let horizon = 6;
    let ct = |b: &Matrix| build_equality(&LtvModel::lti(a.clone(), b.clone(), horizon).unwrap(), &[0.0; 3]).unwrap().0.transpose();
    let sparse = qr_mpc(&ct(&b), 3, 2, horizon, Some(1e-14)).unwrap();
    let full = qr_mpc(&ct(&dense), 3, 2, horizon, Some(1e-14)).unwrap();
    assert!(sparse.skipped + sparse.swaps > 0);
    assert!(sparse.flops.total() < full.flops.total());
    assert!(sparse.q.matmul(&sparse.r).unwrap().sub(&ct(&b)).unwrap().max_abs() < 1e-12);
}

#[test]
fn band_violation_is_rejected() {
    let p = gen_mpc(&spec(2, 1, 4, 2)).unwrap();
    let (c, _) = build_equality(&p.model, &p.x0).unwrap();
    let mut ct = c.transpose();
    let last = ct.rows() - 1;
    ct[(last, 0)] = 1.0;
    assert!(qr_mpc(&ct, 2, 1, 4, None).is_err());
}

#[test]
fn every_path_parameterizes_the_equalities() {
    for (stability, horizon) in [(Stability::Stable, 8), (Stability::Unstable, 8)] {
        let p = gen_mpc(&RandomMpcSpec { stability, horizon, seed: 21, constrained: true, ..Default::default() }).unwrap();
        let (c, e) = build_equality(&p.model, &p.x0).unwrap();
        for method in [CondenseMethod::Standard, CondenseMethod::Riccati, CondenseMethod::QrMpc] {
            let cond = condense(&p, method).unwrap();
            let cz = c.matmul(&cond.transform.z_mat).unwrap();
            assert!(cz.max_abs() <= 1e-10 * c.norm_fro() * cond.transform.z_mat.norm_fro(), "{}", method.name());
            let r = vec_ops::sub(&c.matvec(&cond.transform.z_off).unwrap(), &e);
            assert!(vec_ops::max_abs(&r) <= 1e-9 * vec_ops::max_abs(&e).max(1.0), "{}", method.name());
            let s: Vec<f64> = (0..cond.reduced.n()).map(|i| (i as f64 * 0.37).sin()).collect();
            let z = cond.recover_z(&s).unwrap();
            let pcls = p.to_pcls().unwrap();
            let full = pcls.objective(&z).unwrap();
            let red = cond.reduced.objective(&s).unwrap();
            assert!((full - red).abs() <= 1e-8 * full.abs().max(1.0), "{}: {full} vs {red}", method.name());
            let gz = vec_ops::sub(&p.g_mat.matvec(&z).unwrap(), &p.g);
            let gs = vec_ops::sub(&cond.reduced.g_mat.matvec(&s).unwrap(), &cond.reduced.g);
            assert!(vec_ops::max_abs(&vec_ops::sub(&gz, &gs)) <= 1e-8);
        }
    }
}

#[test]
fn standard_map_for_one_step() {
    let a = Matrix::from_rows(&[&[1.0, 0.1], &[0.0, 0.9]]);
    let b = Matrix::from_rows(&[&[0.0], &[0.5]]);
    let model = LtvModel::lti(a.clone(), b.clone(), 1).unwrap();
    let x0 = vec![2.0, -1.0];
    let w = MpcWeights::constant(Matrix::identity(1), Matrix::identity(2), 1);
    let p = MpcProblem::new(model, w, x0.clone(), Matrix::zeros(0, 3), vec![]).unwrap();
    let cond = condense_standard(&p).unwrap();
    assert_eq!(cond.transform.z_mat, Matrix::from_rows(&[&[1.0], &[0.0], &[0.5]]));
    let z = cond.recover_z(&[0.4]).unwrap();
    let x1 = vec_ops::add(&a.matvec(&x0).unwrap(), &b.matvec(&[0.4]).unwrap());
    assert!(vec_ops::norm2(&vec_ops::sub(&z[1..], &x1)) < 1e-15);
}

#[test]
fn qr_path_offset_is_minimum_norm() {
    for seed in 0..10 {
        let p = gen_mpc(&spec(3, 2, 6, 300 + seed)).unwrap();
        let cond = condense_qr(&p).unwrap();
        let (c, e) = build_equality(&p.model, &p.x0).unwrap();
        let cct = c.matmul(&c.transpose()).unwrap();
        let y = pcls::linalg::lstsq(&cct, &e).unwrap();
        let oracle = c.tr_matvec(&y).unwrap();
        let d = vec_ops::norm2(&vec_ops::sub(&cond.transform.z_off, &oracle));
        assert!(d <= 1e-10 * vec_ops::norm2(&oracle), "{d}");
    }
}

#[test]
fn qr_path_agrees_with_generic_elimination() {
    for seed in 0..5 {
        let p = gen_mpc(&spec(4, 2, 7, 400 + seed)).unwrap();
        let cond = condense_qr(&p).unwrap();
        let (_, generic) = eliminate_equalities(&p.to_pcls().unwrap()).unwrap();
        // the reduced Hessians differ by an orthogonal change of coordinates
        let gram = |a: &Matrix| a.matmul(&a.transpose()).unwrap();
        assert!(rel(&gram(&cond.reduced.a), &gram(&generic.a)) <= 1e-9);
        let ab = |r: &pcls::pcls::ReducedPcls| r.a.tr_matvec(&r.b).map(|v| vec_ops::norm2(&v)).unwrap();
        assert!((ab(&cond.reduced) - ab(&generic)).abs() <= 1e-9 * ab(&generic));
    }
}

#[test]
fn riccati_scalar_recursion() {
    let model = LtvModel::<f64>::lti(Matrix::from_rows(&[&[2.0]]), Matrix::from_rows(&[&[1.0]]), 2).unwrap();
    let w = MpcWeights::constant(Matrix::identity(1), Matrix::identity(1), 2);
    let (gains, closed) = riccati_prestabilize(&model, &w).unwrap();
    // P2 = 1, P1 = 3, P0 = 4; K_k = −b P_k a / (r + b² P_k)
    assert!((gains[1][(0, 0)] + 1.5).abs() < 1e-14);
    assert!((gains[0][(0, 0)] + 1.6).abs() < 1e-14);
    assert!((closed.a[0][(0, 0)] - 0.4).abs() < 1e-14);
    assert!((closed.a[1][(0, 0)] - 0.5).abs() < 1e-14);
}

#[test]
fn riccati_without_inputs_gives_zero_gains() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (a, _) = random_dynamics(&mut rng, 3, Stability::Unstable).unwrap();
    let model = LtvModel::lti(a.clone(), Matrix::zeros(3, 2), 5).unwrap();
    let w = MpcWeights::constant(Matrix::identity(2), Matrix::identity(3), 5);
    let (gains, closed) = riccati_prestabilize(&model, &w).unwrap();
    assert!(gains.iter().all(|k| k.max_abs() == 0.0));
    assert_eq!(closed.a[0], a);
}

fn spectral_radius(a: &Matrix) -> f64 {
    let mut p = a.clone();
    let k = 64;
    for _ in 1..k {
        p = p.matmul(a).unwrap();
        let s = p.max_abs();
        p = p.scale(1.0 / s.max(1e-300));
        p = p.scale(s);
    }
    p.norm_fro().powf(1.0 / k as f64)
}

#[test]
fn riccati_stabilizes_unstable_models() {
    for seed in 0..5 {
        let p = gen_mpc(&RandomMpcSpec { stability: Stability::Unstable, horizon: 30, seed: 600 + seed, ..Default::default() }).unwrap();
        let (_, closed) = riccati_prestabilize(&p.model, &p.weights).unwrap();
        let before = spectral_radius(&p.model.a[0]);
        let after = spectral_radius(&closed.a[0]);
        assert!(before >= 0.99, "{before}");
        assert!(after < before, "{after} vs {before}");
    }
}

#[test]
fn singular_riccati_denominator_is_reported() {
    let model = LtvModel::<f64>::lti(Matrix::from_rows(&[&[1.0]]), Matrix::from_rows(&[&[0.0]]), 2).unwrap();
    let w = MpcWeights::constant(Matrix::zeros(1, 1), Matrix::identity(1), 2);
    assert!(riccati_prestabilize(&model, &w).is_err());
}

#[test]
fn substitution_band_start() {
    assert_eq!(substitution_start(1, 3), 1);
    assert_eq!(substitution_start(3, 3), 1);
    assert_eq!(substitution_start(4, 3), 1);
    assert_eq!(substitution_start(7, 3), 4);
    assert_eq!(substitution_start(9, 3), 4);
    let p = gen_mpc(&spec(3, 2, 5, 9)).unwrap();
    let cond = condense_qr(&p).unwrap();
    assert_eq!(cond.flops.substitution, exact_substitution_flops(5, 3));
}

#[test]
fn closed_form_examples() {
    assert_eq!(flops_closed_form(FlopModel::QrMpc, 10, 5, 3), 183_000.0);
    assert_eq!(flops_closed_form(FlopModel::Standard, 10, 5, 3), 6_750.0);
    assert_eq!(flops_closed_form(FlopModel::QrSavings, 10, 5, 3), 1_675_000.0);
}

fn measured(model: FlopModel, horizon: usize, n_x: usize, n_u: usize) -> f64 {
    let mut p = gen_mpc(&spec(n_x, n_u, horizon, 77)).unwrap();
    dense_weights(&mut p);
    match model {
        FlopModel::QrMpc => {
            let (c, _) = build_equality(&p.model, &p.x0).unwrap();
            let f = qr_mpc(&c.transpose(), n_x, n_u, horizon, None).unwrap();
            (f.flops.r_phase + f.flops.q_phase) as f64
        }
        FlopModel::Standard => condense_standard(&p).unwrap().flops.total() as f64,
        _ => unreachable!(),
    }
}

#[test]
fn closed_forms_hold_up_to_linear_remainders() {
    for model in [FlopModel::QrMpc, FlopModel::Standard] {
        for (n_x, n_u) in [(2, 1), (5, 3)] {
            let diff = |t: usize| measured(model, t, n_x, n_u) - flops_closed_form(model, t, n_x, n_u);
            let (d2, d3) = (diff(2), diff(3));
            let c1 = (d3 - d2).abs();
            let c2 = d2.abs().max(d3.abs());
            for t in [10, 20, 40] {
                let d = diff(t);
                assert!(d.abs() <= c1 * t as f64 + c2, "{model:?} nx={n_x} nu={n_u} T={t}: {d}");
            }
        }
    }
}

#[test]
fn structured_qr_is_cheaper() {
    for t in [5, 10, 20] {
        let p = gen_mpc(&spec(5, 3, t, 5)).unwrap();
        let (c, _) = build_equality(&p.model, &p.x0).unwrap();
        let f = qr_mpc(&c.transpose(), 5, 3, t, None).unwrap();
        let g = qr_full(&c.transpose());
        assert!(f.flops.r_phase + f.flops.q_phase < g.flops);
    }
}

#[test]
fn control_horizon_basis() {
    let b = move_blocking_basis(6, 2, &control_horizon_breakpoints(6, 2)).unwrap();
    assert_eq!((b.n(), b.m()), (12, 4));
    assert!(b.phi.orthonormality_defect() < 1e-15);
    let u = b.expand(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    let held = 3.0 / 5f64.sqrt();
    assert!((u[2] - 3.0 / 5f64.sqrt() * 1.0).abs() < 1e-15);
    assert!((u[10] - held).abs() < 1e-15);
    assert_eq!(u[0], 1.0);
    assert!(move_blocking_basis(6, 1, &[0, 3, 3, 6]).is_err());
    assert!(move_blocking_basis(6, 1, &[1, 6]).is_err());
    assert!(move_blocking_basis(6, 1, &[0, 5]).is_err());
    assert_eq!(move_blocking_basis(4, 1, &[0, 1, 2, 3, 4]).unwrap().phi, Matrix::identity(4));
}

#[test]
fn slack_extension_keeps_the_objective() {
    use pcls::pcls::soften;
    let p = gen_mpc(&RandomMpcSpec { horizon: 5, constrained: true, seed: 31, ..Default::default() }).unwrap();
    let inst = p.to_pcls().unwrap();
    let rows: Vec<usize> = (0..inst.n_i()).collect();
    let soft = soften(&inst, &rows, &[10.0], 1).unwrap();
    let cond = extend_slack(&condense_qr(&p).unwrap(), &soft).unwrap();
    let n = cond.reduced.n();
    let mut s = vec![0.1; n];
    s[n - 1] = 0.5;
    let z = cond.recover_z(&s).unwrap();
    let ext = soft.extended();
    let full = ext.objective(&z).unwrap();
    let red = cond.reduced.objective(&s).unwrap();
    assert!((full - red).abs() <= 1e-9 * full.abs().max(1.0));
    let q = extended_q(&Matrix::<f64>::identity(3), 2);
    assert_eq!(q, Matrix::identity(5));
}
