//! Report rendering: an aligned text table, a tab-separated table, and a
//! cost/accuracy points file.

use ats_core::orchestrator::{PriceTable, ReportRow};

/// Aligned human-readable table with one row per (task, method, setting).
pub fn render_text(rows: &[ReportRow], prices: &PriceTable) -> String {
    let mut out = String::new();
    out += &format!(
        "{:<14} {:<8} {:<14} {:>9} {:>10} {:>10} {:>10}\n",
        "Task", "Method", "Setting", "Accuracy", "Input", "Output", "Fee"
    );
    out += &"-".repeat(80);
    out.push('\n');
    let mut current_kind = None;
    for row in rows {
        if current_kind.is_some() && current_kind != Some(row.kind) {
            out += &"-".repeat(80);
            out.push('\n');
        }
        current_kind = Some(row.kind);
        out += &format!(
            "{:<14} {:<8} {:<14} {:>9.1} {:>10.2} {:>10.2} {:>10.4}\n",
            row.kind.display_name(),
            row.method.label(),
            format!("{}/{}", row.shot.label(), row.tier.label()),
            row.accuracy_percent(),
            row.mean_input_tokens(),
            row.mean_output_tokens(),
            row.mean_fee(prices),
        );
    }
    out
}

/// Tab-separated table carrying both means and exact totals.
pub fn render_tsv(rows: &[ReportRow], prices: &PriceTable) -> String {
    let mut out = String::from(
        "task\tmethod\tshot\ttier\tinstances\tcorrect\taccuracy\tmean_input\tmean_output\ttotal_input\ttotal_output\tmean_fee\n",
    );
    for row in rows {
        out += &format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.1}\t{:.2}\t{:.2}\t{}\t{}\t{:.6}\n",
            row.kind.tag(),
            row.method.label(),
            row.shot.label(),
            row.tier.label(),
            row.instances,
            row.correct,
            row.accuracy_percent(),
            row.mean_input_tokens(),
            row.mean_output_tokens(),
            row.total_input_tokens,
            row.total_output_tokens,
            row.mean_fee(prices),
        );
    }
    out
}

/// Cost/accuracy points, one per row: enough to re-plot fee-versus-accuracy
/// charts.
pub fn render_points(rows: &[ReportRow], prices: &PriceTable) -> String {
    let mut out = String::from("task\tmethod\tsetting\tmean_fee\taccuracy\n");
    for row in rows {
        out += &format!(
            "{}\t{}\t{}/{}\t{:.6}\t{:.1}\n",
            row.kind.tag(),
            row.method.label(),
            row.shot.label(),
            row.tier.label(),
            row.mean_fee(prices),
            row.accuracy_percent(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ats_core::orchestrator::{CostTier, Method};
    use ats_core::prompts::Shot;
    use ats_core::puzzles::PuzzleKind;

    fn row() -> ReportRow {
        ReportRow {
            kind: PuzzleKind::DropWater,
            method: Method::AtsBfs,
            shot: Shot::ZeroShot,
            tier: CostTier::Low,
            instances: 82,
            correct: 61,
            total_input_tokens: 61_992,
            total_output_tokens: 83_157,
        }
    }

    #[test]
    fn accuracy_prints_to_one_decimal() {
        let text = render_text(&[row()], &PriceTable::default());
        assert!(text.contains("74.4"), "{text}");
    }

    #[test]
    fn tsv_keeps_exact_totals() {
        let tsv = render_tsv(&[row()], &PriceTable::default());
        assert!(tsv.contains("\t61992\t83157\t"));
    }

    #[test]
    fn points_have_fee_and_accuracy() {
        let prices = PriceTable {
            input_per_1k: 0.03,
            output_per_1k: 0.06,
        };
        let points = render_points(&[row()], &prices);
        let line = points.lines().nth(1).unwrap();
        assert!(line.starts_with("drop_water\tATS-BFS\t0-shot/low\t"));
        assert!(line.ends_with("74.4"));
    }
}
