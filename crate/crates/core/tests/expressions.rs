mod common;

use common::fixtures::{trig_problem, ABS_DOMAIN, ABS_OP_DOMAIN, TRIG_DOMAIN};

use std::sync::Arc;

use hyplan::expr::{compile, Arity, EvalEnv, OperatorRegistry};
use hyplan::ground::{GroundOptions, SymbolTables};
use hyplan::pddl::{CmpOp, Expr, GroundAtom};
use hyplan::ptree::Applicability;
use hyplan::search::{plan, Dynamics, SearchConfig, Status};
use hyplan::state::{Precision, PropSet, State};
use proptest::prelude::*;

/// Tree-walking reference evaluator. `None` on any non-finite intermediate.
fn interpret(e: &Expr, vars: &[f64], props: &[bool], reg: &OperatorRegistry) -> Option<f64> {
    let fin = |v: f64| v.is_finite().then_some(v);
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    match e {
        Expr::Number(n) => Some(*n),
        Expr::Fluent(r) => fin(vars[r.name[1..].parse::<usize>().unwrap()]),
        Expr::Prop(r) => Some(b(props[r.name[1..].parse::<usize>().unwrap()])),
        Expr::Op { op, args } => {
            let vals: Vec<f64> = args
                .iter()
                .map(|a| interpret(a, vars, props, reg))
                .collect::<Option<_>>()?;
            let r = match (op.as_str(), vals.as_slice()) {
                ("+", [a, b]) => a + b,
                ("-", [a]) => -a,
                ("-", [a, b]) => a - b,
                ("*", [a, b]) => a * b,
                ("/", [a, b]) => a / b,
                ("^", [a, b]) => a.powf(*b),
                (sym, vs) => (reg.get(reg.lookup(sym)?).func)(vs),
            };
            fin(r)
        }
        Expr::Cmp { op, lhs, rhs } => {
            let l = interpret(lhs, vars, props, reg)?;
            let r = interpret(rhs, vars, props, reg)?;
            Some(b(op.holds(l, r)))
        }
        Expr::And(xs) => {
            let vals: Vec<f64> = xs
                .iter()
                .map(|x| interpret(x, vars, props, reg))
                .collect::<Option<_>>()?;
            Some(b(vals.iter().all(|v| *v != 0.0)))
        }
        Expr::Or(xs) => {
            let vals: Vec<f64> = xs
                .iter()
                .map(|x| interpret(x, vars, props, reg))
                .collect::<Option<_>>()?;
            Some(b(vals.iter().any(|v| *v != 0.0)))
        }
        Expr::Not(x) => Some(b(interpret(x, vars, props, reg)? == 0.0)),
        other => panic!("unexpected {other}"),
    }
}

fn numeric(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        (-50i32..50).prop_map(|n| Expr::Number(n as f64 / 4.0)),
        (0usize..4).prop_map(|i| Expr::fluent(&format!("x{i}"))),
    ];
    leaf.prop_recursive(depth, 64, 3, |inner| {
        prop_oneof![
            (
                prop::sample::select(vec!["+", "-", "*", "/", "^"]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::op(op, vec![a, b])),
            inner.clone().prop_map(|a| Expr::op("-", vec![a])),
            inner.prop_map(|a| Expr::op("abs", vec![a])),
        ]
    })
    .boxed()
}

fn boolean() -> BoxedStrategy<Expr> {
    let cmp = (
        prop::sample::select(vec![CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq]),
        numeric(2),
        numeric(2),
    )
        .prop_map(|(op, a, b)| Expr::cmp(op, a, b));
    let leaf = prop_oneof![cmp, (0usize..3).prop_map(|i| Expr::prop(&format!("p{i}")))];
    leaf.prop_recursive(3, 32, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Expr::And),
            prop::collection::vec(inner.clone(), 1..4).prop_map(Expr::Or),
            inner.prop_map(|a| Expr::Not(Box::new(a))),
        ]
    })
    .boxed()
}

fn tables() -> SymbolTables {
    let mut t = SymbolTables::default();
    for i in 0..4 {
        t.vars.intern(GroundAtom::new(format!("x{i}"), vec![]));
    }
    for i in 0..3 {
        t.props.intern(GroundAtom::new(format!("p{i}"), vec![]));
    }
    t
}

fn registry_with_abs() -> OperatorRegistry {
    let mut r = OperatorRegistry::new();
    r.register("abs", Arity::Fixed(1), |a| a[0].abs()).unwrap();
    r
}

fn state(vars: &[f64], props: &[bool]) -> State {
    let mut p = PropSet::with_capacity(props.len());
    for (i, on) in props.iter().enumerate() {
        if *on {
            p.insert(i as u32);
        }
    }
    State::new(p, vars.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn compiled_numeric_matches_interpreter(e in numeric(6), vars in prop::array::uniform4(-20i32..20)) {
        let reg = registry_with_abs();
        let vars: Vec<f64> = vars.iter().map(|v| *v as f64 / 2.0).collect();
        let code = compile(&e, &tables(), &reg).unwrap();
        let s = state(&vars, &[false; 3]);
        let got = code.eval(&EvalEnv::new(&s, 1.0, &reg)).ok();
        let want = interpret(&e, &vars, &[false; 3], &reg);
        prop_assert_eq!(got.map(f64::to_bits), want.map(f64::to_bits), "{}", e);
    }

    #[test]
    fn compiled_condition_matches_interpreter(
        e in boolean(),
        vars in prop::array::uniform4(-20i32..20),
        props in prop::array::uniform3(any::<bool>()),
    ) {
        let reg = registry_with_abs();
        let vars: Vec<f64> = vars.iter().map(|v| *v as f64 / 2.0).collect();
        let code = compile(&e, &tables(), &reg).unwrap();
        let s = state(&vars, &props);
        let mut stats = Default::default();
        let got = code.holds(&EvalEnv::new(&s, 1.0, &reg), &mut stats);
        let want = interpret(&e, &vars, &props, &reg).is_some_and(|v| v != 0.0);
        prop_assert_eq!(got, want, "{}", e);
    }

    #[test]
    fn half_power_is_sqrt(x in 0.0f64..1e6) {
        let reg = OperatorRegistry::new();
        let e = Expr::op("^", vec![Expr::fluent("x0"), Expr::Number(0.5)]);
        let code = compile(&e, &tables(), &reg).unwrap();
        let s = state(&[x, 0.0, 0.0, 0.0], &[]);
        let v = code.eval(&EvalEnv::new(&s, 1.0, &reg)).unwrap();
        prop_assert!((v - x.sqrt()).abs() <= 1e-12 * x.sqrt().max(1.0));
    }
}

#[test]
fn negative_base_fractional_power_is_a_fault() {
    let reg = OperatorRegistry::new();
    let e = Expr::cmp(
        CmpOp::Ge,
        Expr::op("^", vec![Expr::fluent("x0"), Expr::Number(0.5)]),
        Expr::Number(0.0),
    );
    let code = compile(&e, &tables(), &reg).unwrap();
    let s = state(&[-4.0, 0.0, 0.0, 0.0], &[]);
    let mut stats = Default::default();
    assert!(!code.holds(&EvalEnv::new(&s, 1.0, &reg), &mut stats));
    assert_eq!(stats.faults, 1);
}

#[test]
fn bhaskara_approximation_close_to_sin_and_cos() {
    for theta in [0.0, 30.0, 45.0, 60.0, 90.0] {
        let gp = common::ground_opts(
            TRIG_DOMAIN,
            &trig_problem(theta),
            &common::options(1.0, Precision::EXACT, None),
        );
        let idx = Applicability::linear();
        let d = Dynamics::new(&gp, &idx);
        let s = d.transition(&gp.init, &gp.actions[0], 0.0).unwrap();
        let sin = s.vars[gp.var_slot("(sin_theta)").unwrap() as usize];
        let cos = s.vars[gp.var_slot("(cos_theta)").unwrap() as usize];
        let rad = f64::to_radians(theta);
        assert!((sin - rad.sin()).abs() <= 0.002, "sin {theta}: {sin}");
        assert!((cos - rad.cos()).abs() <= 0.002, "cos {theta}: {cos}");
    }
}

#[test]
fn bhaskara_exact_points() {
    let gp = common::ground_opts(
        TRIG_DOMAIN,
        &trig_problem(30.0),
        &common::options(1.0, Precision::EXACT, None),
    );
    let idx = Applicability::linear();
    let s = Dynamics::new(&gp, &idx)
        .transition(&gp.init, &gp.actions[0], 0.0)
        .unwrap();
    assert_eq!(s.vars[gp.var_slot("sin_theta").unwrap() as usize], 0.5);
}

#[test]
fn power_operator_gives_absolute_value_and_magnitude() {
    for z in [-3.0, 0.0, 2.5] {
        let problem = format!(
            "(define (problem m) (:domain magnitude)
               (:init (= (z) {z}) (= (x_abs) 0) (= (x1) 1) (= (x2) 4) (= (y1) -2) (= (y2) 2) (= (v_mag) 0))
               (:goal (>= (x_abs) 0)))"
        );
        let gp = common::ground(ABS_DOMAIN, &problem);
        let idx = Applicability::linear();
        let s = Dynamics::new(&gp, &idx)
            .transition(&gp.init, &gp.actions[0], 0.0)
            .unwrap();
        assert_eq!(s.vars[gp.var_slot("x_abs").unwrap() as usize], f64::abs(z));
        assert_eq!(s.vars[gp.var_slot("v_mag").unwrap() as usize], 5.0);
    }
}

#[test]
fn registered_operator_usable_end_to_end() {
    let problem = "(define (problem p) (:domain drift) (:init (= (pos) 0)) (:goal (>= (abs (pos)) 3)))";
    let default = hyplan::load(ABS_OP_DOMAIN, problem, &GroundOptions::default());
    let msg = default.unwrap_err().to_string();
    assert!(msg.contains("abs") && msg.contains('^'), "{msg}");

    let mut reg = OperatorRegistry::new();
    reg.register("abs", Arity::Fixed(1), |a| a[0].abs()).unwrap();
    let opts = GroundOptions {
        registry: Arc::new(reg),
        ..GroundOptions::default()
    };
    let gp = common::ground_opts(ABS_OP_DOMAIN, problem, &opts);
    let r = plan(&gp, &Applicability::linear(), &SearchConfig::default()).unwrap();
    assert_eq!(r.status, Status::Solved);
    let best = r.plans.best().unwrap();
    assert_eq!(best.makespan, 3.0);
    assert_eq!(best.steps.len(), 1);
    assert_eq!(best.steps[0].name, "(start)");
}
