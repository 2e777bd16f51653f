//! Parser for `.scn` scenario files.
//!
//! ```text
//! scenario happy;
//! rounds 1;
//! store Users { ("u1", "pw1"); ("u2", "pw2"); }
//! inject User.id = "u1";
//! expect fired E1, E2;
//! expect not fired E3;
//! expect sequence E1, E2;
//! expect emitted "error";
//! expect store LogEntries = { (1, "u1", "09:00", "17:00"); };
//! expect store WORK_FOR contains (7, 3);
//! expect created Six.c = 6;
//! ```

use crate::dynamics::{Expectation, Injection, Scenario, Value};
use crate::ir::{ActionId, EventId, ThimacId};
use crate::sets::{Scalar, Tuple};

use super::{tokenize, Diagnostic, PResult, Parser, SourceFile, Tok};

pub fn parse_scenario(source: &SourceFile) -> Result<Scenario, Vec<Diagnostic>> {
    let tokens = tokenize(&source.text)?;
    let mut p = Parser::new(tokens);
    let mut sc = Scenario::default();
    while !p.at_eof() {
        let before = p.pos();
        if statement(&mut p, &mut sc).is_err() {
            p.synchronize();
            if p.pos() == before {
                p.bump();
            }
        }
    }
    if p.errors.is_empty() {
        Ok(sc)
    } else {
        Err(p.errors)
    }
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, Vec<Diagnostic>> {
    parse_scenario(&SourceFile::new("<scenario>", text))
}

fn statement(p: &mut Parser, sc: &mut Scenario) -> PResult<()> {
    let head = p.word("a scenario statement")?;
    match head.value.as_str() {
        "scenario" => {
            sc.name = p.word("a scenario name")?.value;
        }
        "rounds" => match p.peek().clone() {
            Tok::Int(n) if n >= 1 && n <= u32::MAX as i64 => {
                p.bump();
                sc.rounds = n as u32;
            }
            _ => return p.unexpected("a positive round count"),
        },
        "store" => {
            let store = p.word("a store thimac")?;
            let tuples = tuple_block(p)?;
            sc.seeds.push((ThimacId::new(store.value), tuples));
            p.eat(&Tok::Semi);
            return Ok(());
        }
        "inject" => {
            let target = p.word("an injection target")?;
            p.expect(Tok::Eq, "`=`")?;
            let value = value(p)?;
            sc.injections.push(Injection { target: ActionId::new(target.value), value });
        }
        "expect" => {
            let e = expectation(p)?;
            let braced = matches!(e, Expectation::StoreEquals { .. });
            sc.expectations.push(e);
            if braced {
                p.eat(&Tok::Semi);
                return Ok(());
            }
        }
        other => {
            let span = head.span;
            return p.error(format!("unknown scenario statement `{other}`"), span);
        }
    }
    p.expect(Tok::Semi, "`;`")?;
    Ok(())
}

fn event_list(p: &mut Parser) -> PResult<Vec<EventId>> {
    let mut out = vec![EventId::new(p.word("an event id")?.value)];
    while p.eat(&Tok::Comma) {
        out.push(EventId::new(p.word("an event id")?.value));
    }
    Ok(out)
}

fn expectation(p: &mut Parser) -> PResult<Expectation> {
    let negated = p.is_word("not");
    if negated {
        p.bump();
    }
    let what = p.word("an expectation kind")?;
    match (negated, what.value.as_str()) {
        (false, "fired") => Ok(Expectation::Fired(event_list(p)?)),
        (true, "fired") => Ok(Expectation::NotFired(event_list(p)?)),
        (false, "sequence") => Ok(Expectation::Sequence(event_list(p)?)),
        (false, "emitted") => Ok(Expectation::Emitted(string(p)?)),
        (true, "emitted") => Ok(Expectation::NotEmitted(string(p)?)),
        (false, "store") => {
            let store = ThimacId::new(p.word("a store thimac")?.value);
            if p.is_word("contains") {
                p.bump();
                Ok(Expectation::StoreContains { store, tuple: tuple(p)? })
            } else {
                p.expect(Tok::Eq, "`=` or `contains`")?;
                Ok(Expectation::StoreEquals { store, tuples: tuple_block(p)? })
            }
        }
        (false, "created") => {
            let node = ActionId::new(p.word("a node id")?.value);
            p.expect(Tok::Eq, "`=`")?;
            Ok(Expectation::Created { node, value: value(p)? })
        }
        _ => {
            let span = what.span;
            p.error(format!("unknown expectation `{}{}`", if negated { "not " } else { "" }, what.value), span)
        }
    }
}

fn string(p: &mut Parser) -> PResult<String> {
    match p.peek().clone() {
        Tok::Str(s) => {
            p.bump();
            Ok(s)
        }
        _ => p.unexpected("a string"),
    }
}

fn scalar(p: &mut Parser) -> PResult<Scalar> {
    match p.peek().clone() {
        Tok::Int(i) => {
            p.bump();
            Ok(Scalar::Int(i))
        }
        Tok::Str(s) => {
            p.bump();
            Ok(Scalar::Str(s))
        }
        _ => p.unexpected("an integer or string"),
    }
}

fn tuple(p: &mut Parser) -> PResult<Tuple> {
    p.expect(Tok::LParen, "`(`")?;
    let mut out = Vec::new();
    if !matches!(p.peek(), Tok::RParen) {
        out.push(scalar(p)?);
        while p.eat(&Tok::Comma) {
            out.push(scalar(p)?);
        }
    }
    p.expect(Tok::RParen, "`)`")?;
    Ok(out)
}

fn tuple_block(p: &mut Parser) -> PResult<Vec<Tuple>> {
    p.expect(Tok::LBrace, "`{`")?;
    let mut out = Vec::new();
    while matches!(p.peek(), Tok::LParen) {
        out.push(tuple(p)?);
        if !(p.eat(&Tok::Semi) || p.eat(&Tok::Comma)) {
            break;
        }
    }
    p.expect(Tok::RBrace, "`}`")?;
    Ok(out)
}

fn value(p: &mut Parser) -> PResult<Value> {
    if matches!(p.peek(), Tok::LParen) {
        return tuple(p).map(Value::Tuple);
    }
    scalar(p).map(Value::Scalar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scenario() {
        let sc = parse_scenario_str(
            r#"scenario s; rounds 2;
            store Users { ("u1", "pw"); ("u2", "pw2") }
            inject User.id = "u1";
            inject X.t = (1, "a");
            expect fired E1, E2;
            expect not fired E3;
            expect emitted "bad";
            expect store Users contains ("u1", "pw");
            expect store Logs = {};
            expect created Six.c = 6;"#,
        )
        .unwrap();
        assert_eq!(sc.name, "s");
        assert_eq!(sc.rounds, 2);
        assert_eq!(sc.seeds[0].1.len(), 2);
        assert_eq!(sc.injections.len(), 2);
        assert_eq!(sc.injections[1].value, Value::Tuple(vec![Scalar::Int(1), Scalar::from("a")]));
        assert_eq!(sc.expectations.len(), 6);
        assert_eq!(sc.expectations[4], Expectation::StoreEquals { store: ThimacId::from("Logs"), tuples: vec![] });
    }

    #[test]
    fn garbage_yields_diagnostics() {
        let err = parse_scenario_str("inject = ; expect wat; rounds 0;").unwrap_err();
        assert!(err.len() >= 3);
    }
}
