//! Every registered identity at 25 sampled points, 192 bits.

use qverify_core::identities::{registry, verify, VerifyOptions};

fn run(id: &str) {
    let opts = VerifyOptions {
        samples: 25,
        seed: 2024,
        ..VerifyOptions::default()
    };
    let run = verify(id, &opts).unwrap();
    for p in &run.points {
        match &p.result {
            Ok(r) => assert!(
                r.pass,
                "{id} at {}: rel error {:e}",
                p.params.display(),
                r.rel_error
            ),
            Err(e) => panic!("{id} at {}: {e}", p.params.display()),
        }
    }
}

macro_rules! suites {
    ($($name:ident => $id:literal),* $(,)?) => {$(
        #[test]
        fn $name() {
            run($id);
        }
    )*};
}

suites! {
    gosper => "G1",
    gosper_q_first => "G2",
    gosper_q_second => "G3",
    heine => "H1",
    heine_extension => "H2",
    bailey_daum => "K1",
    kummer_six_phi_five => "K2",
    kummer_four_phi_three_a => "K3",
    kummer_four_phi_three_b => "K4",
    very_well_poised => "K5",
    dougall => "D1",
    dougall_limit => "D2",
    cantarini_classical => "C1",
    cantarini_q => "C2",
    bauer => "B1",
    cantarini_companion => "C3",
    double_series => "X1",
    q_binomial => "QB",
}

#[test]
fn every_record_has_a_suite() {
    assert_eq!(registry().len(), 18);
}

#[test]
fn perturbed_right_sides_fail_everywhere() {
    for r in registry() {
        let opts = VerifyOptions {
            samples: 5,
            seed: 99,
            rhs_factor: Some(1.0 + 1e-6),
            ..VerifyOptions::default()
        };
        let run = verify(r.id, &opts).unwrap();
        assert!(
            run.points.iter().all(|p| !p.pass()),
            "{} survived a perturbed right side",
            r.id
        );
    }
}
