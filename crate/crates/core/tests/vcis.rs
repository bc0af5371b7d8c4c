use pbmc_core::counter::{Brancher, Candidates, Heuristic, VcisScores};
use pbmc_core::formula::Var;
use pbmc_core::parse_opb;

fn close(got: f64, want: f64) -> bool {
    if want == 0.0 {
        got == 0.0
    } else {
        ((got - want) / want).abs() <= 1e-12
    }
}

fn scores(text: &str) -> VcisScores {
    VcisScores::compute(&parse_opb(text).unwrap().formula)
}

#[test]
fn single_constraint() {
    let s = scores("+3 x1 +2 x2 >= 4 ;\n");
    assert!(close(s.score(Var::new(1)), 0.75));
    assert!(close(s.score(Var::new(2)), 0.5));
}

#[test]
fn mean_over_constraints() {
    let s = scores("+2 x1 +1 x2 +1 x3 >= 4 ;\n+1 x1 +1 x4 >= 2 ;\n");
    assert!(close(s.score(Var::new(1)), 0.5));
    assert!(close(s.score(Var::new(4)), 0.5));
}

#[test]
fn absent_variable_scores_zero() {
    let s = scores("* #variable= 3 #constraint= 1\n+1 x1 >= 1 ;\n");
    assert_eq!(s.score(Var::new(2)), 0.0);
    assert_eq!(s.preferred(Var::new(2)), Var::new(2).positive());
}

#[test]
fn phase_follows_heavier_polarity() {
    // The second constraint is ~x1 + x3 >= 1 after normalization.
    let s = scores("+1 x1 +1 x2 >= 2 ;\n-3 x1 +1 x3 >= -2 ;\n");
    assert!(close(s.score(Var::new(1)), 0.75));
    assert_eq!(s.preferred(Var::new(1)), Var::new(1).negative());
}

#[test]
fn higher_score_wins_at_equal_activity() {
    // x1: (4/5 + 1) / 2 = 0.9, x2: 1/5 = 0.2.
    let f = parse_opb("+4 x1 +1 x2 >= 5 ;\n+1 x1 +1 x3 >= 1 ;\n").unwrap().formula;
    for static_only in [false, true] {
        let b = Brancher::new(&f, Heuristic::Vcis, static_only, None);
        assert!(close(b.scores().score(Var::new(1)), 0.9));
        assert!(close(b.scores().score(Var::new(2)), 0.2));
        let vars = [Var::new(2), Var::new(1)];
        let c = Candidates {
            vars: &vars,
            activity: &|_| 1.0,
            occurrences: &|_| 1,
        };
        assert_eq!(b.pick(&c).var(), Var::new(1));
    }
}

#[test]
fn singleton_candidate() {
    let f = parse_opb("+4 x1 +1 x2 >= 5 ;\n").unwrap().formula;
    let b = Brancher::new(&f, Heuristic::Baseline, false, Some(3));
    let c = Candidates {
        vars: &[Var::new(2)],
        activity: &|_| 0.0,
        occurrences: &|_| 0,
    };
    assert_eq!(b.pick(&c), Var::new(2).positive());
}
