//! Markdown summaries. No timestamps, so reruns are byte-identical.

use std::fmt::Write;

use nilres_core::norms::NormsReport;
use nilres_core::resonance::Check;

use crate::pipeline::{Analysis, PairAnalysis};

fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn checks_table(out: &mut String, checks: &[Check]) {
    out.push_str("| check | result | margin | detail |\n|---|---|---|---|\n");
    for c in checks {
        let _ = writeln!(out, "| {} | {} | {:.3e} | {} |", c.name, verdict_word(c.pass), c.margin, c.detail);
    }
    out.push('\n');
}

fn pair_section(out: &mut String, index: usize, p: &PairAnalysis) {
    let meta = &p.series.meta;
    let _ = writeln!(out, "## Pair {index}\n");
    let _ = writeln!(
        out,
        "grid {}, n_max {}, resolved lags {}, theta truncation {}\n",
        meta.grid, meta.n_max, meta.resolved_len, meta.theta_truncation
    );
    if let Some(fit) = &p.fit {
        let _ = writeln!(out, "numerical rank {}\n", fit.rank);
        out.push_str("| xi | modulus | band | mu | amplitude |\n|---|---|---|---|---|\n");
        for r in &fit.resonances {
            let band = r.band.map_or("-".to_string(), |b| b.to_string());
            let mu = r.mu.map_or("-".to_string(), |m| format!("{:.8}{:+.8}i", m.re, m.im));
            let _ = writeln!(
                out,
                "| {:.10}{:+.10}i | {:.10} | {} | {} | {:.4e}{:+.4e}i |",
                r.xi.re,
                r.xi.im,
                r.modulus(),
                band,
                mu,
                r.amplitude.re,
                r.amplitude.im
            );
        }
        out.push('\n');
        if !fit.rejected.is_empty() {
            let _ = writeln!(out, "{} candidate(s) rejected outside the unit disk\n", fit.rejected.len());
        }
    }
    if let Some(d) = &p.decay {
        let _ = writeln!(
            out,
            "remainder slope {:.6} over lags {}..={} (expected {:.6})\n",
            d.slope, d.first, d.last, d.expected
        );
    }
    checks_table(out, &p.verdict.checks);
    for note in &p.verdict.notes {
        let _ = writeln!(out, "- {note}");
    }
    if !p.verdict.notes.is_empty() {
        out.push('\n');
    }
}

pub fn verify_markdown(a: &Analysis) -> String {
    let mut out = String::new();
    let meta = &a.pairs[0].series.meta;
    let p = &meta.automorphism;
    let _ = writeln!(out, "# Resonance verification: {}\n", verdict_word(a.pass()));
    let _ = writeln!(
        out,
        "automorphism (a, b, c, d, l, m) = ({}, {}, {}, {}, {}, {}), K = {}, N = {}, lambda = {:.12}\n",
        p.a, p.b, p.c, p.d, p.l, p.m, meta.sector_k, meta.sector_n, meta.lambda
    );
    let _ = writeln!(out, "pairing: {}\n", meta.pairing);
    for (i, pair) in a.pairs.iter().enumerate() {
        pair_section(&mut out, i, pair);
    }
    if !a.checks.is_empty() {
        out.push_str("## Across pairs\n\n");
        checks_table(&mut out, &a.checks);
    }
    out
}

pub fn norms_markdown(r: &NormsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Anisotropic norm experiments: {}\n", verdict_word(r.passed()));
    let c = &r.config;
    let _ = writeln!(
        out,
        "p = {}, q = {}, delta = {}, base points {}^3, {} modulations, k <= {}\n",
        c.p, c.q, c.delta, c.base_points, c.modulations, c.k_max
    );
    let mut lemmas: Vec<&str> = Vec::new();
    for e in &r.entries {
        if !lemmas.contains(&e.lemma.as_str()) {
            lemmas.push(&e.lemma);
        }
    }
    for lemma in lemmas {
        let entries: Vec<_> = r.entries_for(lemma).collect();
        let failed = entries.iter().filter(|e| !e.verdict).count();
        let worst = entries.iter().map(|e| e.ratio).fold(0.0f64, f64::max);
        let _ = writeln!(
            out,
            "## {lemma}\n\n{} entries, {} failed, largest lhs/rhs {:.4}\n",
            entries.len(),
            failed,
            worst
        );
        out.push_str("| detail | lhs | rhs | ratio | semantics | result |\n|---|---|---|---|---|---|\n");
        for e in entries {
            let _ = writeln!(
                out,
                "| {} | {:.6e} | {:.6e} | {:.4} | {} | {} |",
                e.detail,
                e.lhs,
                e.rhs,
                e.ratio,
                serde_json::to_value(e.semantics).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                verdict_word(e.verdict)
            );
        }
        out.push('\n');
    }
    if !r.estimates.is_empty() {
        out.push_str("## Norm estimates\n\n| observable | value | seminorms |\n|---|---|---|\n");
        for (label, est) in &r.estimates {
            let semis: Vec<String> = est.seminorms.iter().map(|s| format!("{s:.6e}")).collect();
            let _ = writeln!(out, "| {label} | {:.6e} | {} |", est.value, semis.join(", "));
        }
        out.push('\n');
    }
    out
}
