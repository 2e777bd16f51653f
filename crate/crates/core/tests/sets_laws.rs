use std::collections::BTreeSet;

use proptest::prelude::*;
use tm_core::sets::{RetrievePolicy, Retrieved, VersionBuilder};
use tm_core::{Scalar, SetError, ThimacId, Tuple, TupleStore};

fn scalar() -> impl Strategy<Value = Scalar> {
    prop_oneof![(-5i64..5).prop_map(Scalar::Int), "[a-c]{1,2}".prop_map(Scalar::Str)]
}

fn tuple() -> impl Strategy<Value = Tuple> {
    proptest::collection::vec(scalar(), 2)
}

fn store() -> impl Strategy<Value = TupleStore> {
    proptest::collection::btree_set(tuple(), 0..8).prop_map(|ts| {
        TupleStore::with_tuples(ThimacId::from("S"), vec!["a".into(), "b".into()], ts.into_iter().collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn add_member_grows_by_one_and_leaves_the_input(s in store(), m in tuple()) {
        let before = s.clone();
        match s.add_member(m.clone()) {
            Ok(next) => {
                prop_assert!(!before.contains(&m));
                prop_assert_eq!(next.len(), before.len() + 1);
                prop_assert_eq!(next.version, before.version + 1);
                let mut expected: BTreeSet<&Tuple> = before.as_set();
                expected.insert(&m);
                prop_assert_eq!(next.as_set(), expected);
            }
            Err(SetError::Duplicate { .. }) => prop_assert!(before.contains(&m)),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        prop_assert_eq!(s, before);
    }

    #[test]
    fn new_version_copy_equals_add(s in store(), m in tuple()) {
        match (s.add_member(m.clone()), s.new_version_copy(m)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.as_set(), b.as_set());
                prop_assert_eq!(a.version, b.version);
            }
            (Err(_), Err(_)) => {}
            (a, b) => return Err(TestCaseError::fail(format!("{a:?} vs {b:?}"))),
        }
    }

    #[test]
    fn export_is_the_extension(s in store()) {
        let exported: BTreeSet<Tuple> = s.export_extension().into_iter().collect();
        let direct: BTreeSet<Tuple> = s.tuples().iter().cloned().collect();
        prop_assert_eq!(exported.len(), s.len());
        prop_assert_eq!(exported, direct);
    }

    #[test]
    fn retrieve_first_is_the_earliest_match(s in store(), probe in scalar()) {
        let hit = s.tuples().iter().find(|t| t[0] == probe);
        match s.retrieve_member(|t| t[0] == probe, RetrievePolicy::First) {
            Retrieved::Found(v) => prop_assert_eq!(Some(v[0]), hit),
            Retrieved::NotFound => prop_assert!(hit.is_none()),
        }
    }
}

#[test]
fn wrong_arity_is_rejected() {
    let s = TupleStore::new(ThimacId::from("S"), vec!["a".into(), "b".into()]);
    let err = s.add_member(vec![Scalar::Int(1)]).unwrap_err();
    assert!(matches!(err, SetError::Arity { arity: 2, found: 1, .. }));
}

#[test]
fn builder_fills_then_copies() {
    let s = TupleStore::with_tuples(ThimacId::from("M"), vec!["v".into()], vec![vec![Scalar::Int(1)]]).unwrap();
    let mut b = VersionBuilder::open(&s);
    b.insert(vec![Scalar::Int(2)]).unwrap();
    assert_eq!(b.pending().len(), 1);
    assert!(b.insert(vec![Scalar::Int(1)]).is_err());
    let next = b.copy_old();
    assert_eq!(next.tuples(), &[vec![Scalar::Int(2)], vec![Scalar::Int(1)]]);
    assert_eq!(s.len(), 1);
}
