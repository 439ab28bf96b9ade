//! Report emission: a JSON document with the measured quantities at six
//! decimal places, a human-readable accuracy matrix, and the one-line
//! summary rows used by the `report` command.
//!
//! The JSON is assembled by hand so the number formatting stays fixed;
//! undefined quantities are emitted as `null`, never as zero.

use crate::metrics::{Criterion, MetricBundle, PairwiseAccuracyMatrix};

fn num(v: f64) -> String {
    format!("{:.6}", v)
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "null".into())
}

fn row_list<T, F: Fn(&T) -> String>(items: &[T], f: F) -> String {
    let cells: Vec<String> = items.iter().map(f).collect();
    format!("[{}]", cells.join(", "))
}

fn square(k: usize, entries: &[Option<f64>]) -> String {
    let rows: Vec<String> = (0..k)
        .map(|i| row_list(&entries[i * k..(i + 1) * k], |v| opt(*v)))
        .collect();
    format!("[{}]", rows.join(", "))
}

fn square_counts(k: usize, counts: &[u64]) -> String {
    let rows: Vec<String> = (0..k)
        .map(|i| row_list(&counts[i * k..(i + 1) * k], |v| v.to_string()))
        .collect();
    format!("[{}]", rows.join(", "))
}

fn bundle_fields(bundle: &MetricBundle) -> Vec<(String, String)> {
    let mut fields = Vec::new();
    fields.push(("auc".into(), opt(bundle.auc)));
    fields.push(("mse".into(), opt(bundle.mse.map(|m| m))));
    match &bundle.matrix {
        Some(m) => {
            fields.push(("matrix".into(), square(m.k, &m.entries)));
            fields.push(("counts".into(), square_counts(m.k, &m.counts)));
            fields.push(("row_marginals".into(), row_list(&m.row_marginals, |v| opt(*v))));
            fields.push(("col_marginals".into(), row_list(&m.col_marginals, |v| opt(*v))));
        }
        None => {
            fields.push(("matrix".into(), "null".into()));
            fields.push(("counts".into(), "null".into()));
            fields.push(("row_marginals".into(), "null".into()));
            fields.push(("col_marginals".into(), "null".into()));
        }
    }
    if let Some(p) = &bundle.parity {
        fields.push(("parity".into(), square(p.k, &p.entries)));
    }
    if let Some(c) = &bundle.continuous {
        fields.push((
            "continuous".into(),
            format!(
                "{{\"greater\": {}, \"less\": {}}}",
                opt(c.greater),
                opt(c.less)
            ),
        ));
    }
    let viols: Vec<String> = Criterion::all()
        .iter()
        .map(|&c| {
            format!(
                "\"{}\": {}",
                c.name(),
                opt(crate::metrics::violation(bundle, c))
            )
        })
        .collect();
    fields.push(("violations".into(), format!("{{{}}}", viols.join(", "))));
    fields
}

fn object(fields: &[(String, String)]) -> String {
    let parts: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("\"{}\": {}", k, v))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// The full JSON report for one evaluation. Per-atom bundles are attached
/// for stochastic models.
pub fn bundle_json(
    bundle: &MetricBundle,
    split: &str,
    atoms: Option<&[(f64, MetricBundle)]>,
) -> String {
    let mut fields = vec![("split".to_string(), format!("\"{}\"", split))];
    fields.extend(bundle_fields(bundle));
    if let Some(atoms) = atoms {
        let parts: Vec<String> = atoms
            .iter()
            .map(|(p, b)| {
                let mut f = vec![("p".to_string(), num(*p))];
                f.extend(bundle_fields(b));
                object(&f)
            })
            .collect();
        fields.push(("atoms".into(), format!("[{}]", parts.join(", "))));
    }
    object(&fields)
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{:.3}", x)).unwrap_or_else(|| "  -  ".into())
}

fn render_discrete(m: &PairwiseAccuracyMatrix, out: &mut String) {
    let k = m.k;
    out.push_str("            ");
    for j in 0..k {
        out.push_str(&format!("  worse G{}", j));
    }
    out.push_str("   row marg\n");
    for i in 0..k {
        out.push_str(&format!("  better G{} ", i));
        for j in 0..k {
            out.push_str(&format!("     {}", fmt_cell(m.entry(i, j))));
        }
        out.push_str(&format!("      {}\n", fmt_cell(m.row_marginals[i])));
    }
    out.push_str("  col marg  ");
    for j in 0..k {
        out.push_str(&format!("     {}", fmt_cell(m.col_marginals[j])));
    }
    out.push('\n');
}

/// Plain-text rendering of the group-conditioned accuracies.
pub fn render_bundle(bundle: &MetricBundle, split: &str) -> String {
    let mut out = format!("pairwise accuracies, {} split\n", split);
    if let Some(m) = &bundle.matrix {
        render_discrete(m, &mut out);
    }
    if let Some(c) = &bundle.continuous {
        out.push_str(&format!(
            "  A(attr greater) {}   A(attr less) {}\n",
            fmt_cell(c.greater),
            fmt_cell(c.less)
        ));
    }
    out.push_str(&format!("  auc {}", fmt_cell(bundle.auc)));
    if let Some(mse) = bundle.mse {
        out.push_str(&format!("   mse {:.4}", mse));
    }
    out.push('\n');
    out
}

/// One summary row: method name, objective, violation in parentheses.
pub fn summary_row(method: &str, objective: f64, violation: Option<f64>) -> String {
    let obj = if objective.abs() < 0.1 && objective != 0.0 {
        format!("{:.4}", objective)
    } else {
        format!("{:.2}", objective)
    };
    match violation {
        Some(v) => format!("{}\t{} ({:.2})", method, obj, v),
        None => format!("{}\t{}", method, obj),
    }
}
