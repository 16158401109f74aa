use ncretract::corpus::{standard_corpus, DEFAULT_SEED};
use ncretract::report::{evaluate, EvalOptions, Status};
use ncretract::Property;

#[test]
fn standard_corpus_matches_constructed_verdicts() {
    let mut bad = Vec::new();
    for inst in standard_corpus(DEFAULT_SEED) {
        let r = evaluate(&inst, "corpus", &EvalOptions::default());
        if r.status != Status::Ok {
            let failing: Vec<String> = r
                .certificates
                .iter()
                .filter(|c| !c.holds())
                .map(|c| format!("{:?}:{:?} {:?}", c.property, c.reason, c.notes))
                .collect();
            bad.push(format!("{:?} {:?} {:?} {:?} {:?}", r.name, r.status, r.error, failing, r.notes));
        }
    }
    assert!(bad.is_empty(), "{}", bad.join("\n"));
}

#[test]
fn implication_chain_on_corpus() {
    let opts = EvalOptions {
        checks: ncretract::report::CheckSelection {
            jordan: true,
            triple: true,
            ..Default::default()
        },
        ..Default::default()
    };
    for inst in standard_corpus(DEFAULT_SEED) {
        let r = evaluate(&inst, "corpus", &opts);
        let holds = |p| r.certificate(p).map(|c: &ncretract::Certificate| c.holds());
        let Some(hom) = holds(Property::Homomorphic) else { continue };
        let triple = holds(Property::TripleHomomorphism).unwrap();
        let jordan = holds(Property::JordanHomomorphism).unwrap();
        assert!(!hom || triple, "{:?}", r.name);
        assert!(!triple || jordan, "{:?}", r.name);
        assert_eq!(hom, jordan, "{:?}: Jordan but not homomorphic", r.name);
        assert!(holds(Property::ExpectationFormulas).unwrap(), "{:?}", r.name);
        for c in &r.certificates {
            assert_ne!(c.reason, Some(ncretract::Reason::DecidersDisagree), "{:?} {:?}", r.name, c);
        }
    }
}
