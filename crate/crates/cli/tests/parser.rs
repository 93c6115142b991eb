mod common;

use common::{check_vector, VECTORS};
use frachardy_cli::expr::{BinOp, Expr, Func};
use frachardy_cli::parse;
use proptest::prelude::*;

#[test]
fn grammar_vectors() {
    assert_eq!(VECTORS.len(), 40);
    let failures: Vec<String> = VECTORS.iter().filter_map(|v| check_vector(v).err()).collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn unknown_identifier_names_the_token() {
    let e = parse("2*foo(x)").unwrap_err();
    assert_eq!(e.offset(), 2);
    assert!(e.to_string().contains("foo"));
}

#[test]
fn evaluation_errors_carry_x() {
    let e = parse("log(x-0.5)").unwrap().eval(0.25).unwrap_err();
    assert!(e.to_string().contains("0.25"), "{e}");
    assert!(parse("sqrt(-x)").unwrap().eval(0.5).is_err());
    assert!(parse("1/(x-x)").unwrap().eval(0.5).is_err());
}

fn tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::X),
        (0u32..1000).prop_map(|n| Expr::Num(n as f64)),
        (1e-8f64..1e8).prop_map(Expr::Num),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (0..Func::ALL.len(), inner.clone()).prop_map(|(i, e)| Expr::Call(Func::ALL[i], Box::new(e))),
            (op, inner.clone(), inner).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_parse_round_trip(e in tree()) {
        let text = e.to_string();
        let back = parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
    }
}
