mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use filterbound::algebra::Rat;
use filterbound::filter::FloatFormat;
use filterbound::frontend::{analyze, check, parse, parse_syntax, AnalyzeOptions, CheckOptions, Report};

use common::random_network;

fn networks_dir() -> String {
    format!("{}/networks", env!("CARGO_MANIFEST_DIR"))
}

fn shipped() -> Vec<String> {
    let mut files: Vec<_> = std::fs::read_dir(networks_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files.into_iter().map(|p| std::fs::read_to_string(p).unwrap()).collect()
}

/// A random equation-form network (syntax only; not necessarily causal).
fn equation_source() -> impl Strategy<Value = String> {
    let coeff = (-40i64..=40, 1i64..=12).prop_map(|(n, d)| format!("{n}/{d}"));
    let magnitude = (0i64..=40, 1i64..=12).prop_map(|(n, d)| format!("{n}/{d}"));
    let reference = prop_oneof![
        (0usize..3).prop_map(|k| format!("x{k}")),
        Just("u".to_string()),
        (0usize..3, 1usize..4).prop_map(|(k, n)| format!("delay(x{k}, {n})")),
        (0usize..3, 1usize..3).prop_map(|(k, n)| format!("delay(x{k}, {n}, r)")),
        coeff.clone().prop_map(|c| format!("const({c})")),
    ];
    let term = (prop::bool::ANY, magnitude, reference).prop_map(|(neg, c, r)| format!("{} {c} * {r}", if neg { "-" } else { "+" }));
    let eq = prop::collection::vec(term, 1..4).prop_map(|ts| ts.concat().trim_start_matches("+ ").to_string());
    (prop::collection::vec(eq, 3), prop_oneof![Just("ieee64"), Just("ieee32"), Just("fixed:2^-12:rne")]).prop_map(|(eqs, fmt)| {
        let mut s = format!("format {fmt};\ngroup g <= 3/2;\ninput u <= 5;\nreset r = -1/3 g;\noutput x2;\n");
        for (k, e) in eqs.iter().enumerate() {
            s.push_str(&format!("x{k} = {e};\n"));
        }
        s
    })
}

fn assert_round_trip(src: &str) {
    let net = parse_syntax(src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let printed = net.to_string();
    let again = parse_syntax(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert_eq!(net, again, "{printed}");
    assert_eq!(printed, again.to_string());
}

#[test]
fn shipped_networks_round_trip() {
    for src in shipped() {
        assert_round_trip(&src);
    }
}

#[test]
fn shipped_networks_pass_their_check() {
    for src in shipped() {
        let m = parse(&src).unwrap();
        let rep = analyze(&m, &AnalyzeOptions::default()).unwrap();
        let bounds: Vec<f64> = rep.outputs.iter().map(|o| o.bound.0).collect();
        let o = check(&m, &bounds, &FloatFormat::ieee64(), &CheckOptions { steps: 2000, seed: 3, runs: 2 }).unwrap();
        assert!(o.passed(), "{:?}", o.violations);
        assert!(o.slack.iter().all(|&s| s >= 0.0));
    }
}

#[test]
fn report_json_round_trips_bit_exactly() {
    for src in shipped() {
        let rep = analyze(&parse(&src).unwrap(), &AnalyzeOptions::default()).unwrap();
        let json = rep.to_json();
        let back = Report::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        for (a, b) in rep.outputs.iter().zip(&back.outputs) {
            assert_eq!(a.bound.0.to_bits(), b.bound.0.to_bits());
            assert_eq!(a.eps_abs.0.to_bits(), b.eps_abs.0.to_bits());
        }
    }
}

#[test]
fn fixed_point_and_single_precision_are_checked_too() {
    let src = std::fs::read_to_string(format!("{}/filter1.flt", networks_dir())).unwrap();
    let m = parse(&src).unwrap();
    for fmt in [FloatFormat::ieee32(), FloatFormat::fixed(2f64.powi(-10), true), FloatFormat::fixed(2f64.powi(-10), false)] {
        let rep = analyze(&m, &AnalyzeOptions { format: Some(fmt), ..Default::default() }).unwrap();
        let bounds: Vec<f64> = rep.outputs.iter().map(|o| o.bound.0).collect();
        let o = check(&m, &bounds, &fmt, &CheckOptions { steps: 3000, seed: 9, runs: 2 }).unwrap();
        assert!(o.passed(), "{fmt}: {:?}", o.violations);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn block_networks_round_trip(seed in any::<u64>()) {
        let g = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        assert_round_trip(&g.source);
    }

    #[test]
    fn equation_networks_round_trip(src in equation_source()) {
        assert_round_trip(&src);
    }

    #[test]
    fn analysis_is_deterministic(seed in any::<u64>()) {
        let g = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let m = parse(&g.source).unwrap();
        let a = analyze(&m, &AnalyzeOptions::default()).unwrap().to_json();
        let b = analyze(&parse(&g.source).unwrap(), &AnalyzeOptions::default()).unwrap().to_json();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn doubling_input_bounds_doubles_the_linear_part(seed in any::<u64>()) {
        let g = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let m = parse(&g.source).unwrap();
        let mut m2 = m.clone();
        for b in m2.input_bounds.iter_mut().flatten() {
            *b *= Rat::from_integer(2.into());
        }
        let r1 = analyze(&m, &AnalyzeOptions::default()).unwrap();
        let r2 = analyze(&m2, &AnalyzeOptions::default()).unwrap();
        for (o1, o2) in r1.outputs.iter().zip(&r2.outputs) {
            prop_assert_eq!(o2.input_term.0, 2.0 * o1.input_term.0);
            prop_assert_eq!(o2.reset_term.0, o1.reset_term.0);
            prop_assert!(o2.error_term.0 <= 2.0 * o1.error_term.0);
            prop_assert!(o1.bound.0 <= o2.bound.0 && o2.bound.0 <= 2.0 * o1.bound.0);
        }
    }

    #[test]
    fn check_never_fails_on_analyzer_bounds(seed in any::<u64>()) {
        let g = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let m = parse(&g.source).unwrap();
        let rep = analyze(&m, &AnalyzeOptions::default()).unwrap();
        let bounds: Vec<f64> = rep.outputs.iter().map(|o| o.bound.0).collect();
        let o = check(&m, &bounds, &FloatFormat::ieee64(), &CheckOptions { steps: 500, seed, runs: 1 }).unwrap();
        prop_assert!(o.passed(), "{:?}\n{}", o.violations, g.source);
    }
}
