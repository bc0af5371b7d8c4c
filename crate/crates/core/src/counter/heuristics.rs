//! Branching literal selection.

use crate::formula::{Lit, PbFormula, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Heuristic {
    /// Conflict activity blended with the static coefficient-weighted score.
    #[default]
    Vcis,
    /// Conflict activity plus occurrence count in active constraints.
    Baseline,
}

/// Static per-variable score: the mean of `coef / degree` over the
/// constraints mentioning the variable (0 if none), and the preferred
/// polarity (the one with larger summed `coef / degree`, positive on ties).
#[derive(Clone, Debug, PartialEq)]
pub struct VcisScores {
    score: Vec<f64>,
    positive: Vec<bool>,
}

impl VcisScores {
    pub fn compute(f: &PbFormula) -> VcisScores {
        let n = f.num_vars() as usize;
        let mut sum = vec![0.0; n];
        let mut by_polarity = vec![[0.0f64; 2]; n];
        let mut occurrences = vec![0u32; n];
        for c in f.constraints() {
            let k = c.degree() as f64;
            for t in c.terms() {
                let v = t.lit.var().index();
                let w = t.coef as f64 / k;
                sum[v] += w;
                by_polarity[v][t.lit.is_negated() as usize] += w;
                occurrences[v] += 1;
            }
        }
        VcisScores {
            score: (0..n)
                .map(|v| {
                    if occurrences[v] == 0 {
                        0.0
                    } else {
                        sum[v] / occurrences[v] as f64
                    }
                })
                .collect(),
            positive: by_polarity.iter().map(|p| p[0] >= p[1]).collect(),
        }
    }

    pub fn score(&self, v: Var) -> f64 {
        self.score[v.index()]
    }

    pub fn preferred(&self, v: Var) -> Lit {
        Lit::new(v, !self.positive[v.index()])
    }
}

/// Inputs for one branching decision.
pub struct Candidates<'a> {
    pub vars: &'a [Var],
    pub activity: &'a dyn Fn(Var) -> f64,
    /// Occurrences in the component's active constraints; only read by the
    /// baseline heuristic.
    pub occurrences: &'a dyn Fn(Var) -> u32,
}

#[derive(Clone, Debug)]
pub struct Brancher {
    heuristic: Heuristic,
    static_only: bool,
    vcis: VcisScores,
    seed: Option<u64>,
}

fn tie_hash(seed: u64, v: Var) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (v.id() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Brancher {
    pub fn new(f: &PbFormula, heuristic: Heuristic, static_only: bool, seed: Option<u64>) -> Brancher {
        Brancher {
            heuristic,
            static_only,
            vcis: VcisScores::compute(f),
            seed,
        }
    }

    pub fn scores(&self) -> &VcisScores {
        &self.vcis
    }

    /// Picks the highest scoring candidate. Ties go to the smallest variable
    /// id, or to a seeded hash order when a seed is set.
    pub fn pick(&self, c: &Candidates<'_>) -> Lit {
        assert!(!c.vars.is_empty(), "no branching candidates");
        let max_of = |f: &dyn Fn(Var) -> f64| c.vars.iter().map(|&v| f(v)).fold(0.0f64, f64::max);
        let norm = |x: f64, max: f64| if max > 0.0 { x / max } else { 0.0 };
        let score: Box<dyn Fn(Var) -> f64 + '_> = match (self.heuristic, self.static_only) {
            (Heuristic::Vcis, true) => Box::new(|v| self.vcis.score(v)),
            (Heuristic::Vcis, false) => {
                let max_act = max_of(c.activity);
                let max_vcis = max_of(&|v| self.vcis.score(v));
                Box::new(move |v| 0.5 * norm((c.activity)(v), max_act) + 0.5 * norm(self.vcis.score(v), max_vcis))
            }
            (Heuristic::Baseline, _) => {
                let max_act = max_of(c.activity);
                let max_occ = max_of(&|v| (c.occurrences)(v) as f64);
                Box::new(move |v| norm((c.activity)(v), max_act) + norm((c.occurrences)(v) as f64, max_occ))
            }
        };
        let mut best = c.vars[0];
        let mut best_score = score(best);
        for &v in &c.vars[1..] {
            let s = score(v);
            let better = match s.total_cmp(&best_score) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => match self.seed {
                    Some(seed) => tie_hash(seed, v) < tie_hash(seed, best),
                    None => false,
                },
            };
            if better {
                best = v;
                best_score = s;
            }
        }
        match self.heuristic {
            Heuristic::Vcis => self.vcis.preferred(best),
            Heuristic::Baseline => best.positive(),
        }
    }
}
