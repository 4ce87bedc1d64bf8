//! Plain-text statistics tables shared by the `eval` and `search` commands.

use std::fmt::Write;

use glc3d_core::RuleStats;

/// One `key value` pair per line, then one `class <label> <count>` line per
/// class and the confusion counts.
pub fn stats_table(stats: &RuleStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "predicted {}", stats.predicted_class);
    let _ = writeln!(out, "total {}", stats.total);
    let _ = writeln!(out, "covered {}", stats.covered);
    if stats.empty {
        let _ = writeln!(out, "purity {:.3} (no cases covered)", stats.purity);
    } else {
        let _ = writeln!(out, "purity {:.3}", stats.purity);
    }
    let _ = writeln!(out, "accuracy {:.3}", stats.accuracy);
    for c in &stats.per_class {
        let _ = writeln!(out, "class {} {}", c.class, c.count);
    }
    let m = &stats.confusion;
    let _ = writeln!(
        out,
        "confusion tp {} fp {} tn {} fn {}",
        m.true_positive, m.false_positive, m.true_negative, m.false_negative
    );
    out
}
