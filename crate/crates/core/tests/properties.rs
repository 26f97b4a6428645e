use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use termred::diagnostics::{detect_ode, occupancy_table};
use termred::expr::{parse_expression, parse_system, Coeff, Expression, ParamMonomial, System, Term, VariableTable};
use termred::linearize::partition;
use termred::quotient::{apply_reduction, best_reduction, collect_quotients, find_reduction};
use termred::scheduler::{run_reduction, RunConfig, StepOutcome, Strategy, SystemState};
use termred::toolkit::{oracle_best, random_poly, random_small_pair};

fn vars() -> VariableTable {
    VariableTable::new(&["x1", "x2", "x3"], &["f", "g", "h"], &[]).unwrap()
}

fn ordered(a: Expression, b: Expression) -> (Expression, Expression) {
    if a.term_count() >= b.term_count() {
        (a, b)
    } else {
        (b, a)
    }
}

fn system_from(seeds: &[u64]) -> System {
    let equations = seeds
        .iter()
        .flat_map(|&s| {
            let (a, b) = random_small_pair(s);
            [a, b]
        })
        .filter(|e| !e.is_zero())
        .collect();
    System {
        vars: vars(),
        equations,
        rules: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let (a, b) = random_small_pair(seed);
        for e in [a, b] {
            let back = parse_expression(&e.to_string(), &vars()).unwrap();
            prop_assert_eq!(back, e);
        }
    }

    #[test]
    fn normalize_idempotent_and_order_free(seed in any::<u64>()) {
        let (a, b) = random_small_pair(seed);
        let mut raw: Vec<Term> = a.terms().iter().chain(b.terms()).cloned().collect();
        let once = Expression::normalize(raw.clone());
        prop_assert_eq!(Expression::normalize(once.terms().to_vec()), once.clone());
        raw.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(Expression::normalize(raw), once);
    }

    #[test]
    fn subtract_length_bound(seed in any::<u64>()) {
        let (a, b) = random_small_pair(seed);
        let d = a.subtract(&b);
        prop_assert!(d.term_count() <= a.term_count() + b.term_count());
        prop_assert_eq!(d.add(&b), a.clone());
        prop_assert!(a.subtract(&a).is_zero());
    }

    #[test]
    fn partition_reassembles(seed in any::<u64>()) {
        let (a, _) = random_small_pair(seed);
        let p = partition(&a);
        prop_assert_eq!(p.term_count(), a.term_count());
        prop_assert_eq!(p.reassemble(), a);
    }

    #[test]
    fn engine_matches_oracle(seed in any::<u64>()) {
        let (e1, e2) = {
            let (a, b) = random_small_pair(seed);
            ordered(a, b)
        };
        let oracle = oracle_best(&e1, &e2).unwrap();
        let search = find_reduction(&e1, &e2, true);
        match &search.reduction {
            Some(r) => {
                let e3 = apply_reduction(&e1, &e2, r).unwrap();
                prop_assert_eq!(e3.term_count(), r.predicted_n3);
                prop_assert_eq!(r.predicted_n3, oracle.min_terms);
            }
            None => prop_assert_eq!(oracle.min_terms, e1.term_count()),
        }
    }

    #[test]
    fn pruning_is_sound(seed in any::<u64>()) {
        let (e1, e2) = {
            let (a, b) = random_small_pair(seed);
            ordered(a, b)
        };
        let (p1, p2) = (partition(&e1), partition(&e2));
        let pruned = collect_quotients(&p1, &p2, true);
        let full = collect_quotients(&p1, &p2, false);
        prop_assert!(pruned.stats.raw_quotients <= full.stats.raw_quotients);
        prop_assert_eq!(best_reduction(&pruned), best_reduction(&full));
    }

    #[test]
    fn ode_detection_ignores_parametric_factor(seed in any::<u64>(), k in 1i64..5, e in 0u32..3) {
        let (a, _) = random_small_pair(seed);
        let m = Term::parametric(
            Coeff::from_integer(k.into()),
            ParamMonomial::from_factors([(termred::expr::ParamAtom::indep("x2"), e)]),
        );
        prop_assert_eq!(detect_ode(&a.multiply_by_term(&m).unwrap()), detect_ode(&a));
    }

    #[test]
    fn random_poly_shape(seed in any::<u64>(), n in 1usize..40, vars in 1usize..5, deg in 2u32..6) {
        let available = termred::toolkit::monomial_count(vars, deg);
        prop_assume!(n as u128 <= available);
        let p = random_poly(seed, n, vars, deg).unwrap();
        prop_assert_eq!(p.term_count(), n);
        prop_assert!(p.terms().iter().all(|t| t.param.degree() <= deg));
        prop_assert_eq!(p, random_poly(seed, n, vars, deg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scheduler_invariants(seeds in prop::collection::vec(any::<u64>(), 1..4), many in any::<bool>()) {
        let sys = system_from(&seeds);
        let initial = sys.clone();
        let strategy = if many { Strategy::Many } else { Strategy::Few };
        let state = run_reduction(SystemState::new(sys, strategy), &RunConfig::default()).unwrap();
        prop_assert!(state.steps() <= initial.total_terms());

        let rows = occupancy_table(state.equations());
        prop_assert_eq!(rows.iter().map(|r| r.terms).sum::<usize>(), state.total_terms());

        // replay: every step is an exact row operation on the logged parents
        let mut slots: Vec<Option<Expression>> = initial.equations.iter().cloned().map(Some).collect();
        let mut total = initial.total_terms();
        for step in state.log() {
            let rep = slots[step.replaced].clone().unwrap();
            let kept = slots[step.kept].as_ref().unwrap();
            let raw = rep
                .multiply_by_term(&step.multiplier_replaced)
                .unwrap()
                .subtract(&kept.multiply_by_term(&step.multiplier_kept).unwrap());
            prop_assert_eq!(raw.term_count(), step.reduction.predicted_n3);
            let inv = Term::parametric(step.content.recip(), ParamMonomial::one());
            prop_assert_eq!(raw.multiply_by_term(&inv).unwrap(), step.result.clone());
            let next = total - rep.term_count() + step.result.term_count();
            prop_assert!(next < total);
            total = next;
            slots[step.replaced] = (step.outcome != StepOutcome::Redundant).then(|| step.result.clone());
        }
        let replayed: Vec<Expression> = slots.into_iter().flatten().collect();
        prop_assert_eq!(&replayed, &state.to_system().equations);

        // fixed point: no pair admits a reduction
        let eqs = &state.to_system().equations;
        for i in 0..eqs.len() {
            for j in i + 1..eqs.len() {
                let (a, b) = ordered(eqs[i].clone(), eqs[j].clone());
                prop_assert!(find_reduction(&a, &b, true).reduction.is_none());
            }
        }

        let par = run_reduction(
            SystemState::new(initial, strategy),
            &RunConfig { threads: 3, ..RunConfig::default() },
        )
        .unwrap();
        prop_assert_eq!(par.to_system(), state.to_system());
    }
}

#[test]
fn system_print_parse_round_trip() {
    let text = "indep t r h p\nunknown k11 k22\nparam b\nrule cos(h)^2 = 1 - sin(h)^2\neq r*d(k11,r) + 2*k11\neq cos(h)^2*k22 + b^2*r^3*d(k11,h)\n";
    let sys = parse_system(text).unwrap();
    let again = parse_system(&sys.to_string()).unwrap();
    assert_eq!(again, sys);
}
