mod common;

use proptest::prelude::*;
use tm_core::passes::{simplify, PassConfig};
use tm_core::{ActionKind, Level};

use common::{check_laws, corpus, gen_model, CORPUS};

#[test]
fn corpus_obeys_laws() {
    for name in CORPUS {
        check_laws(name, &corpus(name)).unwrap();
    }
}

#[test]
fn s1_of_login_keeps_the_comparisons_connected() {
    let s = simplify(&corpus("login"), &PassConfig::new(Level::S1)).unwrap();
    let has = |from: &str, to: &str| s.arcs.iter().any(|a| a.from.as_str() == from && a.to.as_str() == to);
    assert!(has("Users.Record.getid", "Logs.cmp_id"));
    assert!(has("User.id", "Logs.cmp_id"));
    assert!(has("Logs.LogEntry.fill", "LogEntries.ins"));
}

#[test]
fn s3_of_login_drops_user_and_errors() {
    let s = simplify(&corpus("login"), &PassConfig::new(Level::S3)).unwrap();
    assert!(s.thimac("User").is_none());
    assert!(s.thimac("Errors").is_none());
    assert!(s.actions.iter().all(|a| a.kind == ActionKind::Process));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn generated_models_obey_laws(seed in any::<u64>()) {
        let m = gen_model(seed, 30);
        check_laws(&format!("seed {seed}"), &m).map_err(TestCaseError::fail)?;
    }
}
