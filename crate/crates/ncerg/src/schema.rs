//! Published layout of every output file. CSV headers are generated from
//! this table, so files and schema cannot drift apart.

use serde_json::{json, Value};

pub struct TableSchema {
    pub file: &'static str,
    pub suite: &'static str,
    pub columns: &'static [(&'static str, &'static str)],
}

impl TableSchema {
    pub fn header(&self) -> Vec<&'static str> {
        self.columns.iter().map(|c| c.0).collect()
    }
}

pub const TABLES: &[TableSchema] = &[
    TableSchema {
        file: "validation.csv",
        suite: "validate-semigroup",
        columns: &[
            ("t", "sample time"),
            (
                "choi_min_eigenvalue",
                "smallest Choi eigenvalue over blocks",
            ),
            (
                "positivity_violation",
                "max over probes of -min eig(α_t(x)), >= 0",
            ),
            ("unitality_excess", "max(0, max eig(α_t(1)) - 1)"),
            (
                "trace_excess",
                "max over probes of max(0, τ(α_t(x)) - τ(x))",
            ),
        ],
    },
    TableSchema {
        file: "violations.csv",
        suite: "validate-semigroup",
        columns: &[
            ("t", "sample time"),
            ("check", "positivity | unitality | trace"),
            ("value", "violation above tolerance"),
        ],
    },
    TableSchema {
        file: "local_avg.csv",
        suite: "local-avg",
        columns: &[
            ("T", "averaging horizon, decreasing"),
            ("norm_p", "‖β_T(x) - x‖_p"),
            ("analytic", "closed form where available, empty otherwise"),
        ],
    },
    TableSchema {
        file: "cauchy_decay.csv",
        suite: "local-avg",
        columns: &[
            ("T", "grid value T_j"),
            (
                "d",
                "max over j <= i < l of ‖e(β_{T_i}(x) - β_{T_l}(x))e‖_∞",
            ),
        ],
    },
    TableSchema {
        file: "sandwich.csv",
        suite: "sandwich",
        columns: &[
            ("a", "inner horizon"),
            ("b", "outer horizon"),
            ("lower_slack", "min over samples of min eig(Δ - L)"),
            ("upper_slack", "min over samples of min eig(U - Δ)"),
        ],
    },
    TableSchema {
        file: "lemma_levels.csv",
        suite: "sandwich",
        columns: &[
            (
                "family",
                "h (integral over [0,a]) or g (integral over [b,b+a])",
            ),
            ("k", "level"),
            ("a", "selected a_k"),
            ("moment", "τ(h^p(a_k))"),
            ("moment_target", "ε²/2^{2k}"),
            ("cut", "ε/2^{k+1}"),
            ("cotrace", "τ of the complement of the level projection"),
        ],
    },
    TableSchema {
        file: "lemma_decay.csv",
        suite: "sandwich",
        columns: &[
            ("a", "inner horizon, decreasing"),
            ("compressed_difference", "‖e(β_a(β_b(x)) - β_b(x))e‖_∞"),
            ("compressed_h", "‖e h(a) e‖_∞"),
            ("compressed_g", "‖e g(a) e‖_∞"),
        ],
    },
    TableSchema {
        file: "maximal.csv",
        suite: "maximal",
        columns: &[
            ("epsilon", "cut level"),
            ("sample", "index of the random self-adjoint x"),
            ("cotrace", "τ(e⊥)"),
            ("bound", "C (‖x‖_p/ε)^p with the configured C"),
            ("achieved", "max over the grid of ‖e β_T(x) e‖_∞"),
            ("empirical_c", "τ(e⊥) / (‖x‖_p/ε)^p"),
            ("exceeded", "1 if τ(e⊥) > bound"),
        ],
    },
    TableSchema {
        file: "maximal_c.csv",
        suite: "maximal",
        columns: &[
            ("epsilon", "cut level"),
            ("empirical_c", "max over samples of the empirical constant"),
        ],
    },
    TableSchema {
        file: "weighted_avg.csv",
        suite: "weighted-avg",
        columns: &[
            ("T", "averaging horizon"),
            ("norm_p", "‖β̃_T(x)‖_p"),
            ("bound", "‖b‖_∞ ‖x‖_p"),
            ("slack", "bound - norm_p"),
        ],
    },
    TableSchema {
        file: "substitution.csv",
        suite: "weighted-avg",
        columns: &[
            ("case", "sweep case"),
            ("T", "averaging horizon"),
            ("lhs", "‖β̃_T(x) - (1/T)∫_0^T P(t)α_t(x)dt‖_∞"),
            ("rhs", "2 ((1/T)∫_0^T |P - b|) ‖x‖_∞"),
            ("slack", "rhs - lhs"),
        ],
    },
    TableSchema {
        file: "besicovitch.csv",
        suite: "besicovitch",
        columns: &[
            ("T", "horizon, decreasing"),
            ("mean", "(1/T)∫_0^T |b - P|"),
            ("error", "quadrature error estimate of mean"),
        ],
    },
    TableSchema {
        file: "transfer.csv",
        suite: "besicovitch",
        columns: &[
            ("epsilon", "perturbation level"),
            (
                "threshold_T",
                "first T of the tail where every gap is below epsilon",
            ),
            ("gap", "max over the tail of ‖β̃_T(x) - β^P_T(x)‖_∞"),
            (
                "base_bound",
                "pair bound of the trig-polynomial averages on the tail",
            ),
            (
                "new_bound",
                "pair bound of the weighted averages on the tail",
            ),
            ("allowed", "base_bound + 2 gap"),
        ],
    },
    TableSchema {
        file: "banach_steps.csv",
        suite: "banach-check",
        columns: &[
            (
                "step",
                "approximation | oracle | meet | anchor | dense | assemble",
            ),
            ("quantity", "bounded quantity"),
            ("index", "approximant or tail index, empty if none"),
            ("value", "computed value"),
            ("target", "bound it must satisfy"),
        ],
    },
    TableSchema {
        file: "summary.csv",
        suite: "",
        columns: &[
            ("suite", "suite name"),
            ("check", "check name"),
            ("passed", "true or false"),
            ("value", "measured value"),
            ("threshold", "value it is compared against"),
        ],
    },
];

pub fn table(file: &str) -> &'static TableSchema {
    TABLES
        .iter()
        .find(|t| t.file == file)
        .unwrap_or_else(|| panic!("no schema for {file}"))
}

/// JSON description of every CSV and JSON output.
pub fn schema_json() -> Value {
    let tables: Vec<Value> = TABLES
        .iter()
        .map(|t| {
            json!({
                "file": t.file,
                "suite": t.suite,
                "columns": t.columns.iter().map(|(n, d)| json!({"name": n, "description": d})).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "csv": tables,
        "report.json": {
            "experiment": "suite name",
            "seed": "random seed",
            "passed": "all checks passed",
            "checks": "[{suite, name, passed, value, threshold, detail}]",
            "tables": "paths of CSV files, relative to the output directory",
            "certificates": "paths of certificate JSON files, relative to the output directory",
        },
        "certificate": {
            "cotrace": "τ(1 - e)",
            "epsilon": "co-trace budget",
            "achieved_bound": "uniform compressed-norm bound achieved by e",
            "grid": "parameter grid of the family",
            "projection": "operator in the wire format {blocks: [{dim, re, im}], weights}",
            "flags": "warnings",
            "kind": "members | pairwise_differences | right_multiplication",
            "description": "family description",
            "tail_start": "first grid index the bound ranges over",
        },
    })
}
