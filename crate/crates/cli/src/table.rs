//! Preference tables with the two allocations marked.
//!
//! One column per agent, one row per rank. Each agent's `μ` house is marked
//! `[mu]` and their `ν` house `[nu]`; on a terminal the marks become colors
//! (blue for `μ`, red for `ν`).

use reallot_core::construct::CounterexampleBundle;

const BLUE: &str = "\x1b[34m";
const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

/// A cell's visible width and its rendered text (which may hold escapes).
struct Cell {
    width: usize,
    text: String,
}

impl Cell {
    fn plain(text: String) -> Self {
        Cell {
            width: text.chars().count(),
            text,
        }
    }
}

pub fn render_bundle(bundle: &CounterexampleBundle, color: bool) -> String {
    let profile = &bundle.profile;
    let inst = profile.instance();
    let n = profile.n();

    let mut rows: Vec<Vec<Cell>> = vec![profile
        .agents()
        .map(|a| Cell::plain(format!("P_{}", inst.agent_name(a))))
        .collect()];
    for rank in 0..n {
        let row = profile
            .agents()
            .map(|a| {
                let h = profile.pref(a).ranking()[rank];
                let name = inst.house_name(h);
                let (is_mu, is_nu) = (bundle.mu.house(a) == h, bundle.nu.house(a) == h);
                if color {
                    let text = match (is_mu, is_nu) {
                        (_, true) => format!("{RED}{name}{RESET}"),
                        (true, false) => format!("{BLUE}{name}{RESET}"),
                        _ => name.to_string(),
                    };
                    Cell {
                        width: name.chars().count(),
                        text,
                    }
                } else {
                    Cell::plain(match (is_mu, is_nu) {
                        (true, true) => format!("{name} [mu,nu]"),
                        (true, false) => format!("{name} [mu]"),
                        (false, true) => format!("{name} [nu]"),
                        (false, false) => name.to_string(),
                    })
                }
            })
            .collect();
        rows.push(row);
    }
    let widths: Vec<usize> = (0..n)
        .map(|c| rows.iter().map(|r| r[c].width).max().unwrap_or(0))
        .collect();
    rows.insert(
        1,
        widths.iter().map(|&w| Cell::plain("-".repeat(w))).collect(),
    );

    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(&cell.text);
            line.push_str(&" ".repeat(widths[c] - cell.width));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
