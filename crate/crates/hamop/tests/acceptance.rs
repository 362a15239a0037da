//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Every check is exact — expected values are either closed forms evaluated
//! by an independent in-test route or canonical-form zero. Randomized
//! batteries draw from the seeded trial sampler, so runs are reproducible.

use num_rational::BigRational;

use hamop::algebra::{Atom, Expr};
use hamop::calculus::{
    characteristic_bracket, d_pow1, divergence, ev, jet_gradient, nabla_star, total_derivative_pow,
    MuJetFamily,
};
use hamop::jacobi::{
    is_hamiltonian, lambda_operator, jacobi_density, q_tensor, q_tensor_firstorder, r_tensor,
    supports,
};
use hamop::multiindex::{binom_primed, trinom1};
use hamop::operators::{pairing, DiffOp};
use hamop::oracle::{run_trials, TrialSampler};

fn u(k: u32) -> Expr {
    Expr::jet1(0, k)
}

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

fn lam_u(lam: &Expr, k: u32) -> Expr {
    lam.partial(&Atom::jet1(0, k)).unwrap()
}

/// Opaque coefficient depending on `u_0 .. u_n`.
fn opaque_lam(n: u32) -> Expr {
    let args: Vec<Expr> = (0..=n).map(u).collect();
    Expr::func("lam", vec![0; (n + 1) as usize], args)
}

fn criterion<F: FnOnce() + std::panic::UnwindSafe>(tag: &str, f: F) {
    match std::panic::catch_unwind(f) {
        Ok(()) => println!("acceptance {tag}: PASS"),
        Err(e) => {
            println!("acceptance {tag}: FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

#[test]
fn criterion_1_classification_reproduction() {
    criterion("1 (first-order classification reproduction)", || {
        // lam = (phi u2 + psi)^(-2) with phi, psi the two first derivatives
        // of one arbitrary smooth chi evaluated at (u0, u1^2/2)
        let w = u(1).mul(&u(1)).scale_rational(&half());
        let phi = Expr::func("chi", vec![0, 1], vec![u(0), w.clone()]);
        let psi = Expr::func("chi", vec![1, 0], vec![u(0), w]);
        let lam = phi.mul(&u(2)).add(&psi).powi(-2).unwrap();
        let verdict = is_hamiltonian(&lambda_operator(&lam));
        assert!(
            verdict.skew,
            "the first-order family is skew by construction"
        );
        assert!(
            verdict.witnesses.is_empty(),
            "every defining-tensor entry must vanish exactly, found {}",
            verdict.witnesses.len()
        );
        assert!(verdict.hamiltonian);
    });
}

#[test]
fn criterion_2_genericity_bound() {
    criterion("2 (genericity bound)", || {
        for n in [3u32, 4, 5] {
            let lam = opaque_lam(n);
            let op = lambda_operator(&lam);
            assert!(op.skew_defect().unwrap().is_zero());
            let q = q_tensor(&op).unwrap();
            // Q_{1,n+1} = ((-1)^n n/2 - 1) lam lam_{u_n}
            let sign = if n % 2 == 0 { 1i64 } else { -1 };
            let coef = BigRational::new((sign * n as i64).into(), 2.into())
                - BigRational::from_integer(1.into());
            let expected = lam.mul(&lam_u(&lam, n)).scale_rational(&coef);
            let got = q.get_scalar(1, n + 1);
            assert_eq!(got, expected, "entry (1, {}) mismatch at n={n}", n + 1);
            assert!(!got.is_zero());
            // skew but with surviving entries: not Hamiltonian
            assert!(!q.is_empty());
            if n == 3 {
                let verdict = is_hamiltonian(&op);
                assert!(verdict.skew && !verdict.hamiltonian);
            }
        }
    });
}

#[test]
fn criterion_3_derived_chain() {
    criterion("3 (derived chain)", || {
        let lam = opaque_lam(2);
        let op = lambda_operator(&lam);
        let q = q_tensor(&op).unwrap();
        let d = |e: &Expr| d_pow1(e, 1);
        let q03 = q.get_scalar(0, 3);
        // Q_{0,3} = lam D(lam_{u2}) - (3/2) D(lam) lam_{u2} - lam lam_{u1}
        let expected03 = lam
            .mul(&d(&lam_u(&lam, 2)))
            .sub(
                &d(&lam)
                    .mul(&lam_u(&lam, 2))
                    .scale_rational(&BigRational::new(3.into(), 2.into())),
            )
            .sub(&lam.mul(&lam_u(&lam, 1)));
        assert_eq!(q03, expected03);
        assert!(q.get_scalar(0, 4).is_zero(), "Q_{{0,4}} must vanish");
        assert!(q.get_scalar(1, 3).is_zero(), "Q_{{1,3}} must vanish");
        assert_eq!(
            q.get_scalar(1, 2),
            q03.scale_rational(&BigRational::new(3.into(), 2.into())),
            "Q_{{1,2}} = (3/2) Q_{{0,3}}"
        );
        assert_eq!(
            q.get_scalar(0, 2),
            d(&q03).scale_rational(&BigRational::new(3.into(), 2.into())),
            "Q_{{0,2}} = (3/2) D Q_{{0,3}}"
        );
        assert_eq!(
            q.get_scalar(0, 1),
            d(&d(&q03)).scale_rational(&half()),
            "Q_{{0,1}} = (1/2) D^2 Q_{{0,3}}"
        );
        // vanishing everywhere else on the whole structural support,
        // checked exhaustively rather than assumed
        let sup = supports(&op).unwrap();
        let listed: std::collections::BTreeSet<(u32, u32)> = [
            (0, 1),
            (1, 0),
            (0, 2),
            (2, 0),
            (0, 3),
            (3, 0),
            (1, 2),
            (2, 1),
        ]
        .into_iter()
        .collect();
        let mut support_all: std::collections::BTreeSet<(u32, u32)> = sup.r.into_iter().collect();
        support_all.extend(sup.q_prime);
        support_all.extend(sup.q_double_prime);
        for (k, l) in support_all {
            if !listed.contains(&(k, l)) {
                assert!(
                    q.get_scalar(k, l).is_zero(),
                    "unexpected nonzero entry at ({k},{l})"
                );
            }
        }
        // and no witness escapes the listed set
        for ((_, _, _, k, l), _) in q.iter() {
            assert!(listed.contains(&(k.get(0), l.get(0))));
        }
    });
}

#[test]
fn criterion_4_reduction_identity() {
    criterion("4 (reduction identity)", || {
        let phi = Expr::func("phi", vec![0, 0], vec![u(0), u(1)]);
        let psi = Expr::func("psi", vec![0, 0], vec![u(0), u(1)]);
        let base = phi.mul(&u(2)).add(&psi);
        let lam = base.powi(-2).unwrap();
        let q = q_tensor(&lambda_operator(&lam)).unwrap();
        // Q_{0,3} = 2 (phi u2 + psi)^(-5) (psi_{u1} - phi_{u0} u1)
        let expected = Expr::from_int(2)
            .mul(&base.powi(-5).unwrap())
            .mul(&lam_u(&psi, 1).sub(&lam_u(&phi, 0).mul(&u(1))));
        assert_eq!(q.get_scalar(0, 3), expected);
    });
}

#[test]
fn criterion_5_counterexample() {
    criterion("5 (counterexample)", || {
        let op = lambda_operator(&u(1));
        let q = q_tensor(&op).unwrap();
        assert_eq!(q.get_scalar(0, 3), u(1).neg());
        let report = run_trials(&op, 0, 20).unwrap();
        assert_eq!(report.trials, 20);
        assert!(
            report.any_nonzero(),
            "some seeded trial must expose a nonzero residual"
        );
    });
}

#[test]
fn criterion_6_known_hamiltonian_operators() {
    criterion("6 (known Hamiltonian operators)", || {
        let candidates: Vec<(String, DiffOp)> = vec![
            ("D".into(), DiffOp::d(1, 0)),
            (
                "D^3 + u0 D + u1/2".into(),
                DiffOp::scalar_terms([(3, Expr::one())]).addition(&lambda_operator(&u(0))),
            ),
            (
                "D^3 + (2/3)(u0 D + u1/2)".into(),
                DiffOp::scalar_terms([(3, Expr::one())]).addition(&lambda_operator(
                    &u(0).scale_rational(&BigRational::new(2.into(), 3.into())),
                )),
            ),
        ];
        for (name, op) in candidates {
            let q = q_tensor(&op).unwrap();
            assert!(q.is_empty(), "{name}: defining tensor must vanish");
            let report = run_trials(&op, 1, 20).unwrap();
            assert!(
                report.all_zero(),
                "{name}: all 20 residuals must be exactly zero, got {:?}",
                report.residuals
            );
        }
    });
}

/// Test-side evaluation of the first scatter family from the displayed
/// formula, independent of the engine's scatter.
fn first_family_entry(r: &hamop::jacobi::RTensor, k: u32, l: u32) -> Expr {
    let mut out = Expr::zero();
    for ((_, _, _, i, j), value) in r.iter() {
        let (i, j) = (i.get(0) as i64, j.get(0) as i64);
        let p = i + j - (k as i64) - (l as i64);
        if p < 0 {
            continue;
        }
        let c = trinom1(j, p, k as i64, l as i64 - i);
        if c == 0.into() {
            continue;
        }
        let sign = if j % 2 == 0 { 1 } else { -1 };
        let term = d_pow1(value, p as u32).scale_rational(&BigRational::from_integer(c * sign));
        out = out.add(&term);
    }
    out
}

#[test]
fn criterion_7_structural_identity_suite() {
    criterion("7 (structural identity suite)", || {
        let mut sampler = TrialSampler::new(1234, 1);
        let instances = 50;

        // the closed forms of the worked first-order family
        for _ in 0..instances {
            let lam = sampler.differential_polynomial();
            let op = lambda_operator(&lam);
            let r = r_tensor(&op).unwrap();
            let n = lam.max_jet_order().map(|v| v + 1).unwrap_or(0);

            // first-stage column one: R_{k1} = (1/2) sum C'(i,k) D^(i+1-k)lam lam_{u_i}
            for k in 0..=(n + 1) {
                let mut expected = Expr::zero();
                for i in 0..=n {
                    let c = binom_primed(i as i64, k as i64);
                    if c == 0.into() || i + 1 < k {
                        continue;
                    }
                    expected = expected.add(
                        &d_pow1(&lam, i + 1 - k)
                            .mul(&lam_u(&lam, i))
                            .scale_rational(&(BigRational::from_integer(c) * half())),
                    );
                }
                assert_eq!(
                    r.get_scalar(k, 1),
                    expected,
                    "column-one closed form at k={k}"
                );
            }

            // first-column recurrence: R_{k0} = (1/2)(D R_{k1} + R_{k-1,1})
            for k in 0..=(n + 2) {
                let prev = if k == 0 {
                    Expr::zero()
                } else {
                    r.get_scalar(k - 1, 1)
                };
                let rhs = d_pow1(&r.get_scalar(k, 1), 1)
                    .add(&prev)
                    .scale_rational(&half());
                assert_eq!(r.get_scalar(k, 0), rhs, "recurrence at k={k}");
            }

            // first scatter family collapses to the transposed first stage
            for k in 0..=(n + 3) {
                for l in 0..=(n + 3) {
                    let q1 = first_family_entry(&r, k, l);
                    assert_eq!(q1, r.get_scalar(l, k).neg(), "first family at ({k},{l})");
                }
            }

            // assembled antisymmetry
            let q = q_tensor_firstorder(&lam);
            for ((_, _, _, k, l), value) in q.iter() {
                let mirrored = q.get_scalar(l.get(0), k.get(0));
                assert_eq!(value.neg(), mirrored, "antisymmetry at ({:?},{:?})", k, l);
            }
        }

        // density expansion: the literal three-term density equals the
        // final-tensor contraction with the same arguments
        for _ in 0..instances {
            let lam = sampler.differential_polynomial();
            let op = lambda_operator(&lam);
            let g = [sampler.differential_polynomial()];
            let h = [sampler.differential_polynomial()];
            let density = jacobi_density(&op, &g, &h).unwrap();
            let q = q_tensor(&op).unwrap();
            let mut contracted = Expr::zero();
            for ((_, _, _, k, l), value) in q.iter() {
                contracted = contracted.add(
                    &value
                        .mul(&total_derivative_pow(&g[0], k))
                        .mul(&total_derivative_pow(&h[0], l)),
                );
            }
            assert_eq!(density[0], contracted);
        }

        // gradient/divergence cancellation on random currents
        for _ in 0..instances {
            let psi = [sampler.differential_polynomial()];
            let mut total = jet_gradient(&divergence(&psi));
            let mut chi = MuJetFamily::new();
            for (mu, p) in psi.iter().enumerate() {
                for (key, d) in jet_gradient(p).iter() {
                    chi.insert(mu, key.0, key.1.clone(), d.clone());
                }
            }
            for ((dep, index), value) in nabla_star(&chi).iter() {
                total.add_to(*dep, index.clone(), value.clone());
            }
            assert!(total.is_empty());
        }

        // Jacobi identity for the characteristic bracket
        for _ in 0..instances {
            let a = [sampler.differential_polynomial()];
            let b = [sampler.differential_polynomial()];
            let c = [sampler.differential_polynomial()];
            let mut total = Expr::zero();
            let cycles: [(&[Expr; 1], &[Expr; 1], &[Expr; 1]); 3] =
                [(&a, &b, &c), (&b, &c, &a), (&c, &a, &b)];
            for (x, y, z) in cycles {
                let inner = characteristic_bracket(x, y);
                total = total.add(&characteristic_bracket(&inner, z)[0]);
            }
            assert!(total.is_zero());
        }

        // coefficient-wise action of evolutionary derivations on operators
        for idx in 0..instances {
            let op = DiffOp::scalar_terms([
                ((idx % 4) as u32, sampler.differential_polynomial()),
                ((idx % 3) as u32, sampler.differential_polynomial()),
            ]);
            let phi = [sampler.differential_polynomial()];
            let h = sampler.differential_polynomial();
            let lhs = ev(&phi, &op.apply(std::slice::from_ref(&h)).unwrap()[0])
                .sub(&op.apply(&[ev(&phi, &h)]).unwrap()[0]);
            let mut rhs = Expr::zero();
            for ((_, _, index), coeff) in op.entries() {
                rhs = rhs.add(&ev(&phi, coeff).mul(&total_derivative_pow(&h, index)));
            }
            assert_eq!(lhs, rhs);
        }

        // adjoint involution and contravariance
        for idx in 0..instances {
            let p = DiffOp::scalar_terms([
                ((idx % 5) as u32, sampler.differential_polynomial()),
                ((idx % 4) as u32, sampler.differential_polynomial()),
            ]);
            let q = DiffOp::scalar_terms([((idx % 3) as u32, sampler.differential_polynomial())]);
            assert_eq!(p.adjoint().adjoint(), p);
            assert_eq!(
                p.compose(&q).unwrap().adjoint(),
                q.adjoint().compose(&p.adjoint()).unwrap()
            );
        }

        // boundary-current exactness
        for idx in 0..instances {
            let p = DiffOp::scalar_terms([
                ((idx % 4) as u32, sampler.differential_polynomial()),
                (((idx + 1) % 3) as u32, sampler.differential_polynomial()),
            ]);
            let zeta = [sampler.differential_polynomial()];
            let eta = [sampler.differential_polynomial()];
            let psi = p.green_current(&zeta, &eta).unwrap();
            let defect = pairing(&zeta, &p.apply(&eta).unwrap())
                .sub(&pairing(&p.adjoint().apply(&zeta).unwrap(), &eta));
            assert_eq!(d_pow1(&psi, 1), defect);
        }
    });
}

#[test]
fn criterion_8_fast_path_equivalence() {
    criterion("8 (fast path equivalence)", || {
        let mut sampler = TrialSampler::new(77, 1);
        for _ in 0..20 {
            let lam = sampler.differential_polynomial();
            let fast = q_tensor_firstorder(&lam);
            let general = q_tensor(&lambda_operator(&lam)).unwrap();
            assert_eq!(fast, general);
        }
        let lam = opaque_lam(2);
        assert_eq!(
            q_tensor_firstorder(&lam),
            q_tensor(&lambda_operator(&lam)).unwrap()
        );
    });
}
