//! Text formats for instances (with their profile) and allocations.
//!
//! Instance file:
//!
//! ```text
//! order: h1 h2 h3
//! endow: a1=h1 a2=h2 a3=h3
//! agent a1: h2 h3 h1
//! agent a2: h3 h1 h2
//! agent a3: h1 h2 h3
//! ```
//!
//! `order:` lists every house from lowest to highest. `endow:` is optional
//! and defaults to the i-th agent owning the i-th house. Houses are indexed
//! by natural name order (`h2` before `h10`), agents by line order. Blank
//! lines and lines starting with `#` are ignored. The canonical form, which
//! [`write_instance`] emits, has single spaces and omits a default `endow:`.
//!
//! Allocation file: one `<agent> -> <house>` line per agent, in the
//! instance's agent order.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::model::{Agent, Allocation, House, Instance, LinearOrder, Preference, Profile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Missing(&'static str),
    #[error(transparent)]
    Invalid(#[from] crate::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// `h2` sorts before `h10`.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u128>) {
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        (&s[..cut], s[cut..].parse().ok())
    }
    let (pa, na) = split(a);
    let (pb, nb) = split(b);
    pa.cmp(pb).then(na.cmp(&nb)).then(a.cmp(b))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses an instance file into its profile.
pub fn parse_instance(text: &str) -> Result<Profile, FormatError> {
    let mut order_line: Option<(usize, Vec<&str>)> = None;
    let mut endow_line: Option<(usize, Vec<(&str, &str)>)> = None;
    let mut agents: Vec<(usize, &str, Vec<&str>)> = Vec::new();

    for (no, line) in lines(text) {
        if let Some(rest) = line.strip_prefix("order:") {
            if order_line.is_some() {
                return Err(syntax(no, "duplicate order line"));
            }
            order_line = Some((no, rest.split_whitespace().collect()));
        } else if let Some(rest) = line.strip_prefix("endow:") {
            if endow_line.is_some() {
                return Err(syntax(no, "duplicate endow line"));
            }
            let mut pairs = Vec::new();
            for item in rest.split_whitespace() {
                let (a, h) = item
                    .split_once('=')
                    .ok_or_else(|| syntax(no, format!("expected agent=house, got {item:?}")))?;
                pairs.push((a, h));
            }
            endow_line = Some((no, pairs));
        } else if let Some(rest) = line.strip_prefix("agent ") {
            let (name, ranking) = rest
                .split_once(':')
                .ok_or_else(|| syntax(no, "expected `agent <name>: <ranking>`"))?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(syntax(no, format!("invalid agent name {name:?}")));
            }
            agents.push((no, name, ranking.split_whitespace().collect()));
        } else {
            return Err(syntax(no, format!("unrecognized line {line:?}")));
        }
    }

    let (order_no, order_names) =
        order_line.ok_or(FormatError::Missing("missing `order:` line"))?;
    let mut house_names: Vec<String> = order_names.iter().map(|s| s.to_string()).collect();
    house_names.sort_by(|a, b| natural_cmp(a, b));
    if let Some(w) = house_names.windows(2).find(|w| w[0] == w[1]) {
        return Err(syntax(order_no, format!("house {:?} listed twice", w[0])));
    }
    let house_of = |name: &str| house_names.iter().position(|h| h == name).map(House);
    let order = LinearOrder::from_sequence(
        &order_names
            .iter()
            .map(|s| house_of(s).expect("listed"))
            .collect::<Vec<_>>(),
    )
    .map_err(|e| syntax(order_no, e.to_string()))?;

    let n = house_names.len();
    if agents.len() != n {
        return Err(syntax(
            order_no,
            format!("{n} houses but {} agent lines", agents.len()),
        ));
    }
    let agent_names: Vec<String> = agents.iter().map(|(_, name, _)| name.to_string()).collect();

    let endowment = match endow_line {
        None => (0..n).map(House).collect(),
        Some((no, pairs)) => {
            if pairs.len() != n {
                return Err(syntax(
                    no,
                    format!("expected {n} endowments, got {}", pairs.len()),
                ));
            }
            let mut endowment = vec![None; n];
            for (a, h) in pairs {
                let ai = agent_names
                    .iter()
                    .position(|x| x == a)
                    .ok_or_else(|| syntax(no, format!("unknown agent {a:?}")))?;
                let hi = house_of(h).ok_or_else(|| syntax(no, format!("unknown house {h:?}")))?;
                if endowment[ai].replace(hi).is_some() {
                    return Err(syntax(no, format!("agent {a:?} endowed twice")));
                }
            }
            endowment
                .into_iter()
                .map(|h| h.expect("all agents endowed"))
                .collect()
        }
    };
    let endow_no = endow_line_no(text);
    let instance = Instance::with_names(agent_names, house_names.clone(), endowment, order)
        .map_err(|e| syntax(endow_no.unwrap_or(order_no), e.to_string()))?;

    let mut prefs = Vec::with_capacity(n);
    for (no, _, ranking) in &agents {
        let houses = ranking
            .iter()
            .map(|h| house_of(h).ok_or_else(|| syntax(*no, format!("unknown house {h:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if houses.len() != n {
            return Err(syntax(
                *no,
                format!("ranking lists {} of {n} houses", houses.len()),
            ));
        }
        prefs.push(
            Preference::new(houses)
                .map_err(|_| syntax(*no, "ranking is not a permutation of the houses"))?,
        );
    }
    Ok(Profile::new(Arc::new(instance), prefs)?)
}

fn endow_line_no(text: &str) -> Option<usize> {
    lines(text)
        .find(|(_, l)| l.starts_with("endow:"))
        .map(|(no, _)| no)
}

/// Canonical serialization of an instance and its profile.
pub fn write_instance(profile: &Profile) -> String {
    let inst = profile.instance();
    let mut out = String::new();
    let order: Vec<&str> = inst
        .order()
        .houses()
        .iter()
        .map(|&h| inst.house_name(h))
        .collect();
    let _ = writeln!(out, "order: {}", order.join(" "));
    if !inst.has_identity_endowment() {
        let pairs: Vec<String> = inst
            .agents()
            .map(|a| {
                format!(
                    "{}={}",
                    inst.agent_name(a),
                    inst.house_name(inst.endowment(a))
                )
            })
            .collect();
        let _ = writeln!(out, "endow: {}", pairs.join(" "));
    }
    for a in profile.agents() {
        let _ = writeln!(
            out,
            "agent {}: {}",
            inst.agent_name(a),
            inst.display_preference(profile.pref(a))
        );
    }
    out
}

pub fn parse_allocation(text: &str, instance: &Instance) -> Result<Allocation, FormatError> {
    let n = instance.n();
    let mut assign = Vec::with_capacity(n);
    let mut last_line = 0;
    for (no, line) in lines(text) {
        last_line = no;
        let (a, h) = line
            .split_once("->")
            .ok_or_else(|| syntax(no, "expected `<agent> -> <house>`"))?;
        let (a, h) = (a.trim(), h.trim());
        let agent = instance
            .agent_by_name(a)
            .ok_or_else(|| syntax(no, format!("unknown agent {a:?}")))?;
        if agent != Agent(assign.len()) {
            return Err(syntax(
                no,
                format!(
                    "expected agent {:?} on this line",
                    agent_name_at(instance, assign.len())
                ),
            ));
        }
        let house = instance
            .house_by_name(h)
            .ok_or_else(|| syntax(no, format!("unknown house {h:?}")))?;
        assign.push(house);
    }
    if assign.len() != n {
        return Err(syntax(
            last_line.max(1),
            format!("expected {n} assignments, got {}", assign.len()),
        ));
    }
    Allocation::new(assign).map_err(|_| syntax(last_line, "a house is assigned twice"))
}

fn agent_name_at(instance: &Instance, i: usize) -> &str {
    if i < instance.n() {
        instance.agent_name(Agent(i))
    } else {
        "<none>"
    }
}

pub fn write_allocation(mu: &Allocation, instance: &Instance) -> String {
    let mut out = String::new();
    for a in instance.agents() {
        let _ = writeln!(
            out,
            "{} -> {}",
            instance.agent_name(a),
            instance.house_name(mu.house(a))
        );
    }
    out
}

/// `[(a1, h3), (a2, h1), (a3, h2)]` with instance names.
pub fn display_allocation(mu: &Allocation, instance: &Instance) -> String {
    let parts: Vec<String> = instance
        .agents()
        .map(|a| {
            format!(
                "({}, {})",
                instance.agent_name(a),
                instance.house_name(mu.house(a))
            )
        })
        .collect();
    format!("[{}]", parts.join(", "))
}
