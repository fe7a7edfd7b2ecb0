use kscert_sdp::{solve, to_sdpa, verify_certificate, Coeff, SdpProblem, Sense, Status};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lovasz theta of a graph: max <J, X> with tr X = 1 and X_ij = 0 on edges.
fn theta(n: usize, edges: &[(usize, usize)]) -> SdpProblem {
    let mut p = SdpProblem::new(vec![n], Sense::Maximize);
    let mut obj = Coeff::new();
    let mut tr = Coeff::new();
    for i in 0..n {
        tr.push(0, i, i, 1.0);
        for j in 0..n {
            obj.push(0, i, j, 1.0);
        }
    }
    p.objective = obj;
    p.add_eq(tr, 1.0);
    for &(i, j) in edges {
        p.add_eq(Coeff::entry(0, i, j, 1.0), 0.0);
    }
    p
}

fn cycle(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

#[test]
fn theta_of_pentagon() {
    let s = solve(&theta(5, &cycle(5)), 1e-9, 200).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.value - 5f64.sqrt()).abs() < 1e-6, "{}", s.value);
}

#[test]
fn theta_of_odd_cycles() {
    for n in [7usize, 9, 11] {
        let s = solve(&theta(n, &cycle(n)), 1e-9, 200).unwrap();
        let pi = std::f64::consts::PI;
        let want = n as f64 * (pi / n as f64).cos() / (1.0 + (pi / n as f64).cos());
        assert!((s.value - want).abs() < 1e-6, "C{n}: {} vs {want}", s.value);
    }
}

#[test]
fn theta_of_complete_and_empty_graphs() {
    let n = 6;
    let all: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let s = solve(&theta(n, &all), 1e-9, 200).unwrap();
    assert!((s.value - 1.0).abs() < 1e-6);
    let s = solve(&theta(n, &[]), 1e-9, 200).unwrap();
    assert!((s.value - n as f64).abs() < 1e-6);
}

#[test]
fn negative_diagonal_is_infeasible() {
    let mut p = SdpProblem::feasibility(vec![3]);
    p.add_eq(Coeff::entry(0, 1, 1, 1.0), -1.0);
    let s = solve(&p, 1e-8, 200).unwrap();
    assert_eq!(s.status, Status::PrimalInfeasible);
    assert!(verify_certificate(&p, s.certificate.as_ref().unwrap()) <= 1e-7);
}

#[test]
fn correlation_beyond_one_is_infeasible() {
    // unit diagonal forces |X01| <= 1
    let mut p = SdpProblem::feasibility(vec![2]);
    p.add_eq(Coeff::entry(0, 0, 0, 1.0), 1.0);
    p.add_eq(Coeff::entry(0, 1, 1, 1.0), 1.0);
    p.add_box(Coeff::entry(0, 0, 1, 1.0), 1.05, f64::INFINITY);
    let s = solve(&p, 1e-8, 200).unwrap();
    assert_eq!(s.status, Status::PrimalInfeasible);
    assert!(verify_certificate(&p, s.certificate.as_ref().unwrap()) <= 1e-7);
}

#[test]
fn sdpa_export_header() {
    let mut p = theta(5, &cycle(5));
    p.add_box(Coeff::entry(0, 0, 0, 1.0), 0.0, 0.5);
    let text = to_sdpa(&p);
    let lines: Vec<&str> = text.lines().collect();
    let m: usize = lines[1].trim().parse().unwrap();
    assert_eq!(m, p.standard_form().m());
    assert_eq!(lines[2].trim(), "2");
    assert!(lines[3].starts_with("5 -"));
    assert_eq!(lines[4].split_whitespace().count(), m);
    for l in &lines[5..] {
        let f: Vec<&str> = l.split_whitespace().collect();
        assert_eq!(f.len(), 5);
        let (i, j): (usize, usize) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert!(i <= j);
    }
}

fn random_sym(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // max <C, X> over density matrices is the top eigenvalue of C
    #[test]
    fn max_eigenvalue(n in 2usize..7, seed in any::<u64>()) {
        let c = random_sym(n, seed);
        let mut p = SdpProblem::new(vec![n], Sense::Maximize);
        let mut tr = Coeff::new();
        for i in 0..n {
            tr.push(0, i, i, 1.0);
            for j in 0..n {
                p.objective.push(0, i, j, c[(i, j)]);
            }
        }
        p.add_eq(tr, 1.0);
        let s = solve(&p, 1e-9, 200).unwrap();
        prop_assert_eq!(s.status, Status::Optimal);
        let top = SymmetricEigen::new(c).eigenvalues.max();
        prop_assert!((s.value - top).abs() < 1e-6, "{} vs {}", s.value, top);
        prop_assert!((s.value - s.dual_value).abs() < 1e-6);
        let min_eig = SymmetricEigen::new(s.x[0].clone()).eigenvalues.min();
        prop_assert!(min_eig > -1e-7);
    }

    // equality constraints hold at the returned point
    #[test]
    fn equalities_hold(n in 2usize..6, seed in any::<u64>()) {
        let c = random_sym(n, seed);
        let mut p = SdpProblem::new(vec![n], Sense::Minimize);
        for i in 0..n {
            for j in 0..n {
                p.objective.push(0, i, j, c[(i, j)]);
            }
            p.add_eq(Coeff::entry(0, i, i, 1.0), 1.0);
        }
        let s = solve(&p, 1e-9, 200).unwrap();
        prop_assert_eq!(s.status, Status::Optimal);
        for i in 0..n {
            prop_assert!((s.x[0][(i, i)] - 1.0).abs() < 1e-7);
        }
        prop_assert!(p.objective.eval(&s.x) - s.value < 1e-7);
    }
}
