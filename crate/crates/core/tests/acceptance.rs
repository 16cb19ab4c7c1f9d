//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them). Tolerances and runtime
//! budgets are pinned here and nowhere else.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toda_core::closure::{enumerate, float_oracle_enumerate, ClosureOptions, ORACLE_TOL};
use toda_core::conic::Conic;
use toda_core::numeric::{Cmp, Rational, RealScalar};
use toda_core::quantization::{
    cartan, fully_bubbling_energy, margin_check, pohozaev_residual, GammaVector,
};
use toda_core::radial::{
    classify_decay, detect_plateaus, integrate, liouville_exact, pohozaev_residual_f64,
    residual_report, Decay, RadialProblem, Trajectory, DEFAULT_FAST_THRESHOLD,
};

fn conic(m1: Rational, m2: Rational) -> Conic {
    Conic::new(m1, m2).unwrap()
}

fn rat(p: i64, q: i64) -> Rational {
    Rational::new(p, q)
}

fn passed(n: u32, what: &str, t: Instant, budget: Option<Duration>) {
    let elapsed = t.elapsed();
    if let Some(b) = budget {
        assert!(
            elapsed <= b,
            "criterion {} exceeded its runtime budget: {:?} > {:?}",
            n,
            elapsed,
            b
        );
    }
    println!("[acceptance] criterion {:2} ({}): PASS in {:?}", n, what, elapsed);
}

fn scalar_trajectory() -> Trajectory {
    let p = RadialProblem::new(vec![rat(0, 1)], vec![1.0], vec![0.0], -7.0, 7.0).unwrap();
    integrate(&p).unwrap()
}

fn symmetric_trajectory() -> Trajectory {
    let p = RadialProblem::new(
        vec![rat(0, 1), rat(0, 1)],
        vec![1.0, 1.0],
        vec![0.0, 0.0],
        -7.0,
        12.0,
    )
    .unwrap();
    integrate(&p).unwrap()
}

fn tower_trajectory() -> Trajectory {
    let p = RadialProblem::new(
        vec![rat(0, 1), rat(0, 1)],
        vec![1.0, 1.0],
        vec![0.0, -30.0],
        -7.0,
        40.0,
    )
    .unwrap();
    integrate(&p).unwrap()
}

fn singular_trajectory() -> Trajectory {
    let p = RadialProblem::new(
        vec![rat(1, 2), rat(0, 1)],
        vec![1.0, 1.0],
        vec![0.0, 0.0],
        -7.0,
        15.0,
    )
    .unwrap();
    integrate(&p).unwrap()
}

#[test]
fn criterion_01_sigma_1_1_exact() {
    let t = Instant::now();
    let set = enumerate(&conic(rat(1, 1), rat(1, 1)), ClosureOptions::default()).unwrap();
    let got: Vec<(Rational, Rational)> = set
        .points
        .iter()
        .map(|p| {
            (
                p.s1.exact().cloned().expect("rational"),
                p.s2.exact().cloned().expect("rational"),
            )
        })
        .collect();
    let want: Vec<(Rational, Rational)> = [(0, 0), (0, 2), (2, 0), (2, 4), (4, 2), (4, 4)]
        .iter()
        .map(|&(a, b)| (Rational::from_integer(a), Rational::from_integer(b)))
        .collect();
    assert_eq!(got, want, "Sigma(1,1) must be exactly the six seed points");
    passed(1, "Sigma(1,1) exact", t, Some(Duration::from_secs(1)));
}

#[test]
fn criterion_02_sigma_2_2_oracle_agreement() {
    let t = Instant::now();
    let c = conic(rat(2, 1), rat(2, 1));
    let set = enumerate(&c, ClosureOptions::default()).unwrap();
    assert_eq!(set.len(), 20, "Sigma(2,2) must have 20 points");
    for (a, b) in [(0, 0), (4, 0), (0, 4), (4, 8), (8, 4), (8, 8)] {
        assert!(
            set.is_member(&RealScalar::from_integer(a), &RealScalar::from_integer(b)),
            "seed ({}, {}) missing",
            a,
            b
        );
    }
    for p in &set.points {
        let res = c.residual(&p.s1, &p.s2).refine(256);
        assert!(
            res.enclosure().contains_zero(),
            "residual enclosure of {:?} excludes zero",
            p.to_f64()
        );
    }
    let oracle = float_oracle_enumerate(&c, false);
    assert_eq!(set.len(), oracle.len());
    for (p, o) in set.points.iter().zip(&oracle) {
        let (x, y) = p.to_f64();
        assert!((x - o.0).abs() <= 1e-9 && (y - o.1).abs() <= 1e-9);
    }
    passed(2, "Sigma(2,2): 20 points, oracle agrees", t, Some(Duration::from_secs(10)));
}

#[test]
fn criterion_03_subcritical_mu_keeps_six_points() {
    let t = Instant::now();
    let c = conic(rat(3, 10), rat(3, 10));
    let (b1, b2) = c.bounding_box();
    // both coordinate maxima are ~1.2928 < 2, the subcritical regime
    assert!(b1.decimal_string(5).starts_with("1.2928"));
    assert_eq!(b1.cmp(&RealScalar::from_integer(2)), Cmp::Less);
    assert_eq!(b2.cmp(&RealScalar::from_integer(2)), Cmp::Less);
    let set = enumerate(&c, ClosureOptions::default()).unwrap();
    assert_eq!(set.len(), 6);
    passed(3, "Sigma(3/10,3/10) has six points", t, None);
}

#[test]
fn criterion_04_random_mu_box_swap_idempotence_oracle() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20260811);
    for trial in 0..50 {
        let draw = |rng: &mut ChaCha8Rng| {
            let q = rng.gen_range(1i64..=12);
            let p = rng.gen_range(1i64..=3 * q);
            rat(p, q)
        };
        let m1 = draw(&mut rng);
        let m2 = draw(&mut rng);
        let c = conic(m1.clone(), m2.clone());
        let set = enumerate(&c, ClosureOptions::default()).unwrap();

        // box
        let (b1, b2) = c.bounding_box();
        for p in &set.points {
            assert!(p.s1.cmp(&b1) != Cmp::Greater, "trial {}: s1 beyond box", trial);
            assert!(p.s2.cmp(&b2) != Cmp::Greater, "trial {}: s2 beyond box", trial);
        }

        // swap symmetry, element by element
        let swapped = enumerate(&c.swapped(), ClosureOptions::default()).unwrap();
        assert_eq!(set.len(), swapped.len(), "trial {}: swap changed cardinality", trial);
        let mut mirrored: Vec<(RealScalar, RealScalar)> = swapped
            .points
            .iter()
            .map(|p| (p.s2.clone(), p.s1.clone()))
            .collect();
        mirrored.sort_by(|a, b| match a.0.cmp(&b.0) {
            Cmp::Less => std::cmp::Ordering::Less,
            Cmp::Greater => std::cmp::Ordering::Greater,
            Cmp::Equal => match a.1.cmp(&b.1) {
                Cmp::Less => std::cmp::Ordering::Less,
                Cmp::Greater => std::cmp::Ordering::Greater,
                Cmp::Equal => std::cmp::Ordering::Equal,
            },
        });
        for (p, (s1, s2)) in set.points.iter().zip(&mirrored) {
            assert_eq!(p.s1.cmp(s1), Cmp::Equal, "trial {}: swap mismatch", trial);
            assert_eq!(p.s2.cmp(s2), Cmp::Equal, "trial {}: swap mismatch", trial);
        }

        // idempotence: one more sweep adds nothing
        assert_eq!(
            set.count_missing(ClosureOptions::default()).unwrap(),
            0,
            "trial {}: closure not idempotent",
            trial
        );

        // float-oracle agreement in cardinality and pairing
        let oracle = float_oracle_enumerate(&c, false);
        assert_eq!(set.len(), oracle.len(), "trial {}: oracle cardinality", trial);
        for (p, o) in set.points.iter().zip(&oracle) {
            let (x, y) = p.to_f64();
            assert!(
                (x - o.0).abs() <= ORACLE_TOL && (y - o.1).abs() <= ORACLE_TOL,
                "trial {}: oracle pairing ({}, {}) vs {:?}",
                trial,
                x,
                y,
                o
            );
        }
    }
    passed(4, "50 random mu: box, swap, idempotence, oracle", t, None);
}

#[test]
fn criterion_05_quantization_identities() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=6usize {
        let a = cartan(n).unwrap();
        for _ in 0..100 {
            // gamma_i in (-9/10, 3]
            let gamma: Vec<Rational> = (0..n)
                .map(|_| rat(rng.gen_range(-8i64..=30), 10))
                .collect();
            let g = GammaVector::new(gamma).unwrap();
            let sv = fully_bubbling_energy(&g).unwrap();
            let r = sv.as_rationals().unwrap();
            for i in 0..n {
                assert_eq!(r[i], r[n - 1 - i], "fully-bubbling energy must be palindromic");
            }
            let res = pohozaev_residual(&a, &sv, &g).unwrap();
            assert_eq!(res.exact(), Some(&Rational::zero()), "identity must hold exactly");
            let margins = margin_check(&a, &sv, &g).unwrap();
            for (i, m) in margins.iter().enumerate() {
                let want = &Rational::from_integer(2)
                    + &(&Rational::from_integer(2) * &g.gamma()[n - 1 - i]);
                assert_eq!(m.exact(), Some(&want));
                assert!(want.is_positive());
            }
        }
    }
    passed(5, "quantization exact for n <= 6", t, Some(Duration::from_secs(5)));
}

#[test]
fn criterion_06_scalar_matches_closed_form() {
    let t = Instant::now();
    let traj = scalar_trajectory();
    let mu = Rational::one();
    let mut sup_u: f64 = 0.0;
    let mut sup_s: f64 = 0.0;
    for k in 0..traj.len() {
        let (u, s) = liouville_exact(&mu, 0.5, 1.0, traj.t[k].exp());
        sup_u = sup_u.max((traj.u[0][k] - u).abs());
        sup_s = sup_s.max((traj.sigma[0][k] - s).abs());
    }
    assert!(sup_u <= 1e-8, "sup |u - exact| = {:e}", sup_u);
    assert!(sup_s <= 1e-6, "sup |sigma - exact| = {:e}", sup_s);
    let last = traj.len() - 1;
    assert_eq!(traj.t[last], 7.0);
    let r = traj.t[last].exp();
    let closed = 2.0 * 0.25 * r * r / (1.0 + 0.25 * r * r);
    assert!((traj.sigma[0][last] - closed).abs() <= 1e-6);
    // converging to 2*mu = 2
    assert!((traj.sigma[0][last] - 2.0).abs() <= 1e-5);
    passed(6, "scalar integration vs closed form", t, Some(Duration::from_secs(1)));
}

#[test]
fn criterion_07_conservation_residuals_on_all_runs() {
    let t = Instant::now();
    let runs: [(&str, Trajectory); 4] = [
        ("scalar", scalar_trajectory()),
        ("symmetric", symmetric_trajectory()),
        ("tower", tower_trajectory()),
        ("singular", singular_trajectory()),
    ];
    for (name, traj) in &runs {
        let rep = residual_report(traj);
        assert!(
            rep.max_pohozaev_rel() <= 1e-6,
            "{}: conservation-law residual {:e}",
            name,
            rep.max_pohozaev_rel()
        );
        assert!(
            rep.max_neumann_rel() <= 1e-6,
            "{}: Neumann residual {:e}",
            name,
            rep.max_neumann_rel()
        );
    }
    passed(7, "residuals <= 1e-6 on all runs", t, None);
}

#[test]
fn criterion_08_symmetric_su3() {
    let t = Instant::now();
    let traj = symmetric_trajectory();
    for k in 0..traj.len() {
        assert!(
            (traj.sigma[0][k] - traj.sigma[1][k]).abs() <= 1e-9,
            "symmetry broken at t = {}",
            traj.t[k]
        );
    }
    let last = traj.len() - 1;
    assert_eq!(traj.t[last], 12.0);
    assert!((traj.sigma[0][last] - 4.0).abs() <= 1e-3);
    assert!((traj.sigma[1][last] - 4.0).abs() <= 1e-3);
    passed(8, "symmetric run reaches (4,4)", t, Some(Duration::from_secs(1)));
}

#[test]
fn criterion_09_tower_realizes_sigma_members() {
    let t = Instant::now();
    let traj = tower_trajectory();
    // the inter-bubble plateaus of this tower are ~1.3 units long, so the
    // detection window is 1.0 here; slope tolerance stays at the default
    let plateaus = detect_plateaus(&traj, 1e-3, 1.0, DEFAULT_FAST_THRESHOLD);
    assert_eq!(plateaus.len(), 3, "expected exactly three plateaus: {:?}", plateaus);
    let expected = [(2.0, 0.0), (2.0, 4.0), (4.0, 4.0)];
    let set = enumerate(&conic(rat(1, 1), rat(1, 1)), ClosureOptions::default()).unwrap();
    let members: Vec<(f64, f64)> = set.points.iter().map(|p| p.to_f64()).collect();
    for (p, e) in plateaus.iter().zip(&expected) {
        assert!(
            (p.sigma[0] - e.0).abs() <= 0.05 && (p.sigma[1] - e.1).abs() <= 0.05,
            "plateau {:?} is not within 0.05 of {:?}",
            p.sigma,
            e
        );
        assert!(
            members
                .iter()
                .any(|m| (p.sigma[0] - m.0).abs() <= 0.05 && (p.sigma[1] - m.1).abs() <= 0.05),
            "plateau {:?} is not a member of Sigma(1,1)",
            p.sigma
        );
    }
    passed(9, "tower: (2,0) -> (2,4) -> (4,4)", t, Some(Duration::from_secs(60)));
}

#[test]
fn criterion_10_singular_endpoint_on_the_curve() {
    let t = Instant::now();
    let traj = singular_trajectory();
    let rep = residual_report(&traj);
    assert!(rep.max_pohozaev_rel() <= 1e-6);
    assert!(rep.max_neumann_rel() <= 1e-6);
    let last = traj.len() - 1;
    let decay = classify_decay(&traj, last, DEFAULT_FAST_THRESHOLD);
    if decay.iter().all(|d| *d == Decay::Fast) {
        let endpoint = traj.sigma_at(last);
        let res = pohozaev_residual_f64(&traj.gamma, &endpoint);
        assert!(
            res.abs() <= 1e-3,
            "all components fast but endpoint residual is {:e} at {:?}",
            res,
            endpoint
        );
    }
    // this configuration does reach the all-fast regime, so the implication
    // above is exercised rather than vacuous
    assert_eq!(decay, vec![Decay::Fast, Decay::Fast]);
    passed(10, "singular run ends on the curve", t, None);
}
