use super::*;

fn opts(samples: usize, seed: u64) -> VerifyOptions {
    VerifyOptions {
        samples,
        seed,
        ..VerifyOptions::default()
    }
}

fn certify_all(id: &str, samples: usize) {
    let runs = certify(id, &opts(samples, 11)).unwrap();
    assert_eq!(runs.len(), samples);
    for (p, r) in runs {
        let r = r.unwrap_or_else(|e| panic!("{id} at {}: {e}", p.display()));
        assert!(
            r.certification.pass,
            "{id} at {}: {:?}",
            p.display(),
            r.certification
        );
    }
}

#[test]
fn first_gosper_analogue() {
    certify_all("thm2.1", 3);
}

#[test]
fn second_gosper_analogue() {
    certify_all("thm2.2", 3);
}

#[test]
fn heine_extension() {
    certify_all("gauss", 3);
}

#[test]
fn kummer_variants() {
    for id in ["variant1", "variant2", "variant3"] {
        certify_all(id, 3);
    }
}

#[test]
fn cantarini_analogue() {
    certify_all("cantarini", 3);
}

#[test]
fn lookup_by_alias() {
    assert_eq!(find_theorem("H2").unwrap().id, "gauss");
    assert_eq!(find_theorem("THM2.1").unwrap().id, "thm2.1");
    assert!(matches!(find_theorem("thm9"), Err(Error::Unknown(_))));
    for t in theorems() {
        assert!(find(t.identity).is_ok());
    }
}

#[test]
fn solver_matches_closed_form_coefficients() {
    let policy = PrecisionPolicy::new(192);
    let p = Point::parse("q=3/10,a=7/4,b=5/2").unwrap();
    let setup = find_theorem("thm2.2").unwrap().setup(&p, &policy).unwrap();
    let (q, a, b) = (
        get(&p, "q", &policy).unwrap(),
        get(&p, "a", &policy).unwrap(),
        get(&p, "b", &policy).unwrap(),
    );
    let x = &b / &(&a + &b);
    let beta = pow(&q, &(1i64 - &a)).unwrap();
    let want = (1i64 - &q + &beta * &x - &x) / ((1i64 - &q) * (&q - &beta * &x));
    assert!(Scalar::rel_diff(&setup.coefficients.unwrap().a2, &want, 0.0) < 1e-50);

    let p = Point::parse("q=2/5").unwrap();
    let setup = find_theorem("cantarini")
        .unwrap()
        .setup(&p, &policy)
        .unwrap();
    let q = get(&p, "q", &policy).unwrap();
    let k = setup.coefficients.unwrap();
    assert!(
        Scalar::rel_diff(
            &k.t_star,
            &(Scalar::from_i64(2, 224) / (&q * &(1i64 + &q))),
            0.0
        ) < 1e-50
    );
    let want = (&q + 2i64) / ((1i64 + &q).square() * &q);
    assert!(Scalar::rel_diff(&k.a2, &want, 0.0) < 1e-50);
}

#[test]
fn perturbed_claims_fail() {
    for t in theorems() {
        let o = VerifyOptions {
            rhs_factor: Some(1.0 + 1e-6),
            ..opts(2, 5)
        };
        for (p, r) in certify(t.id, &o).unwrap() {
            assert!(
                !r.unwrap().certification.pass,
                "{} at {}",
                t.id,
                p.display()
            );
        }
    }
}

#[test]
fn report_json_lists_coefficients() {
    let runs = certify("thm2.2", &opts(1, 3)).unwrap();
    let v = runs[0].1.as_ref().unwrap().to_json();
    assert!(v["coefficients"]["a2"].is_string());
    assert_eq!(v["pass"], true);
}
