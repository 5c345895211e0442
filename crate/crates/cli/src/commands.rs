use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use reallot_core::construct::{
    build_sd_counterexample, build_sp_counterexample, CounterexampleBundle, Roles,
};
use reallot_core::domains::{
    enumerate_all, enumerate_single_dipped, enumerate_single_peaked, sample_profile,
};
use reallot_core::efficiency::{
    apply_cycle, count_efficient, find_blocking_pair, find_improving_cycle,
};
use reallot_core::equivalence::{trial_seed, verify_equivalence, Color, DEFAULT_BUDGET};
use reallot_core::format::{
    display_allocation, parse_allocation, parse_instance, write_allocation, write_instance,
};
use reallot_core::rules::is_individually_rational;
use reallot_core::{
    Agent, AgentDomain, DomainSpec, Error, House, Instance, LinearOrder, Preference, Profile,
    Scope, VerifyOptions,
};

use crate::table::render_bundle;
use crate::Mode;

pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input.
    Input(String),
    /// The request was understood but refused.
    Rejected(String),
    /// A size guard or check budget was exceeded.
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Rejected(_) => 1,
            CliError::Input(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Rejected(m) | CliError::Budget(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } | Error::TooLarge { .. } => {
                CliError::Budget(e.to_string())
            }
            Error::AlreadyInDomain(_) => CliError::Rejected(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

type CmdResult = Result<Outcome, CliError>;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Profile, CliError> {
    parse_instance(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn budget() -> Result<u128, CliError> {
    match std::env::var("REALLOT_BUDGET") {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Input(format!(
                "REALLOT_BUDGET must be a non-negative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn agents_line(inst: &Instance, agents: &[Agent]) -> String {
    let names: Vec<&str> = agents.iter().map(|&a| inst.agent_name(a)).collect();
    format!("({})", names.join(" "))
}

pub fn check(
    instance: &Path,
    allocation: &Path,
    pair: bool,
    pareto: bool,
    ir: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let profile = load_instance(instance)?;
    let inst = profile.instance();
    let mu = parse_allocation(&read(allocation)?, inst)
        .map_err(|e| CliError::Input(format!("{}: {e}", allocation.display())))?;
    let mut pass = true;
    if pair {
        match find_blocking_pair(&profile, &mu) {
            None => writeln!(out, "pair-efficient: yes")?,
            Some((a, b)) => {
                pass = false;
                writeln!(out, "pair-efficient: no")?;
                writeln!(out, "  blocking pair: {}", agents_line(inst, &[a, b]))?;
            }
        }
    }
    if pareto {
        match find_improving_cycle(&profile, &mu) {
            None => writeln!(out, "pareto-efficient: yes")?,
            Some(cycle) => {
                pass = false;
                let nu = apply_cycle(&mu, &cycle)?;
                writeln!(out, "pareto-efficient: no")?;
                writeln!(
                    out,
                    "  improving cycle: {}",
                    agents_line(inst, cycle.agents())
                )?;
                writeln!(out, "  dominated by: {}", display_allocation(&nu, inst))?;
            }
        }
    }
    if ir {
        if is_individually_rational(&profile, &mu) {
            writeln!(out, "individually rational: yes")?;
        } else {
            pass = false;
            writeln!(out, "individually rational: no")?;
            for a in inst.agents() {
                let e = inst.endowment(a);
                if profile.pref(a).prefers(e, mu.house(a)) {
                    writeln!(
                        out,
                        "  {} prefers endowment {} to {}",
                        inst.agent_name(a),
                        inst.house_name(e),
                        inst.house_name(mu.house(a))
                    )?;
                }
            }
        }
    }
    Ok(Outcome::from_pass(pass))
}

fn agent_domain(word: &str) -> Result<AgentDomain, CliError> {
    match word.trim() {
        "sp" => Ok(AgentDomain::SinglePeaked),
        "sd" => Ok(AgentDomain::SingleDipped),
        "all" => Ok(AgentDomain::All),
        other => Err(CliError::Input(format!(
            "unknown domain {other:?} (expected sp, sd or all)"
        ))),
    }
}

pub fn parse_domain(text: &str, n: Option<usize>) -> Result<DomainSpec, CliError> {
    let spec = if text.contains(',') {
        let domains = text
            .split(',')
            .map(agent_domain)
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(n) = n.filter(|&n| n != domains.len()) {
            return Err(CliError::Input(format!(
                "--n {n} does not match {} listed domains",
                domains.len()
            )));
        }
        DomainSpec::Product(domains)
    } else {
        let n =
            n.ok_or_else(|| CliError::Input(format!("--n is required with --domain {text}")))?;
        if text == "union" {
            DomainSpec::PeakedOrDipped { n }
        } else {
            DomainSpec::uniform(n, agent_domain(text)?)
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn profile_line(profile: &Profile) -> String {
    let inst = profile.instance();
    profile
        .agents()
        .map(|a| {
            format!(
                "{}: {}",
                inst.agent_name(a),
                inst.display_preference(profile.pref(a))
            )
        })
        .collect::<Vec<_>>()
        .join(" | ")
}

pub fn verify(
    domain: &str,
    n: Option<usize>,
    random: Option<u64>,
    seed: u64,
    jobs: usize,
    out: &mut dyn Write,
) -> CmdResult {
    let spec = parse_domain(domain, n)?;
    let scope = match random {
        Some(trials) => Scope::Randomized { seed, trials },
        None => Scope::Exhaustive,
    };
    let options = VerifyOptions {
        budget: budget()?,
        jobs: jobs.max(1),
        extract: false,
    };
    let report = verify_equivalence(&spec, scope, &options)?;
    writeln!(out, "domain: {spec}")?;
    match scope {
        Scope::Exhaustive => writeln!(out, "scope: exhaustive")?,
        Scope::Randomized { seed, trials } => {
            writeln!(out, "scope: random ({trials} trials, seed {seed})")?
        }
    }
    writeln!(out, "profiles checked: {}", report.profiles_checked)?;
    writeln!(out, "allocations checked: {}", report.allocations_checked)?;
    writeln!(out, "pair-efficient allocations: {}", report.pair_efficient)?;
    writeln!(out, "violations: {}", report.violations.len())?;
    for (i, v) in report.violations.iter().enumerate() {
        let inst = v.profile.instance();
        writeln!(out, "violation {}:", i + 1)?;
        writeln!(out, "  profile: {}", profile_line(&v.profile))?;
        writeln!(out, "  mu: {}", display_allocation(&v.mu, inst))?;
        writeln!(out, "  nu: {}", display_allocation(v.witness.nu(), inst))?;
        let labels: Vec<String> = v
            .witness
            .labels()
            .iter()
            .zip(v.witness.colors())
            .enumerate()
            .map(|(l, (&b, c))| {
                let color = match c {
                    Color::Red => "red",
                    Color::Blue => "blue",
                };
                format!("b{}={} ({color})", l + 1, inst.agent_name(b))
            })
            .collect();
        writeln!(out, "  improved: {}", labels.join(" "))?;
    }
    Ok(Outcome::from_pass(report.violations.is_empty()))
}

fn parse_houses(text: &str, inst: &Instance, what: &str) -> Result<Vec<House>, CliError> {
    text.split_whitespace()
        .map(|name| {
            inst.house_by_name(name)
                .ok_or_else(|| CliError::Input(format!("{what}: unknown house {name:?}")))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub fn synth(
    mode: Mode,
    pref: &str,
    order: Option<&str>,
    n: Option<usize>,
    seed: Option<u64>,
    dir: Option<&Path>,
    color: bool,
    out: &mut dyn Write,
) -> CmdResult {
    let len = pref.split_whitespace().count();
    let n = n.unwrap_or(len);
    if len != n {
        return Err(CliError::Input(format!(
            "--pref lists {len} houses but n = {n}"
        )));
    }
    let names = Instance::standard(n)?;
    let p_a = Preference::new(parse_houses(pref, &names, "--pref")?)
        .map_err(|e| CliError::Input(format!("--pref: {e}")))?;
    let order = match order {
        Some(text) => LinearOrder::from_sequence(&parse_houses(text, &names, "--order")?)
            .map_err(|e| CliError::Input(format!("--order: {e}")))?,
        None => LinearOrder::identity(n),
    };
    let roles = match seed {
        Some(s) => Roles::random(n, s),
        None => Roles::canonical(Agent(0)),
    };
    let bundle: CounterexampleBundle = match mode {
        Mode::Sp => build_sp_counterexample(&order, &p_a, roles),
        Mode::Sd => build_sd_counterexample(&order, &p_a, roles),
    }
    .map_err(|e| match e {
        Error::AlreadyInDomain(which) => CliError::Rejected(format!("preference is {which}")),
        other => other.into(),
    })?;
    bundle.verify()?;

    let inst = bundle.profile.instance();
    let (h, hm, hf) = bundle.witness_triple;
    writeln!(
        out,
        "mode: {}",
        match mode {
            Mode::Sp => "sp",
            Mode::Sd => "sd",
        }
    )?;
    writeln!(
        out,
        "witness: h={} h'={} h~={}",
        inst.house_name(h),
        inst.house_name(hm),
        inst.house_name(hf)
    )?;
    writeln!(
        out,
        "roles: a={} a'={} a~={}",
        inst.agent_name(bundle.roles.a),
        inst.agent_name(bundle.roles.a_prime),
        inst.agent_name(bundle.roles.a_tilde)
    )?;
    writeln!(out)?;
    write!(out, "{}", render_bundle(&bundle, color))?;
    writeln!(out)?;
    writeln!(out, "mu: {}", display_allocation(&bundle.mu, inst))?;
    writeln!(out, "nu: {}", display_allocation(&bundle.nu, inst))?;
    writeln!(out, "mu is pair-efficient; nu Pareto-dominates mu")?;

    let instance_text = write_instance(&bundle.profile);
    let mu_text = write_allocation(&bundle.mu, inst);
    let nu_text = write_allocation(&bundle.nu, inst);
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, text) in [
                ("instance.txt", &instance_text),
                ("mu.txt", &mu_text),
                ("nu.txt", &nu_text),
            ] {
                let path = dir.join(name);
                fs::write(&path, text)?;
                writeln!(out, "wrote {}", path.display())?;
            }
        }
        None => {
            for (name, text) in [
                ("instance", &instance_text),
                ("mu", &mu_text),
                ("nu", &nu_text),
            ] {
                writeln!(out, "\n# {name}")?;
                write!(out, "{text}")?;
            }
        }
    }
    Ok(Outcome::Pass)
}

pub fn ttc(instance: &Path, out: &mut dyn Write) -> CmdResult {
    let profile = load_instance(instance)?;
    let mu = reallot_core::rules::ttc(&profile);
    write!(out, "{}", write_allocation(&mu, profile.instance()))?;
    Ok(Outcome::Pass)
}

pub fn count_file(instance: &Path, out: &mut dyn Write) -> CmdResult {
    let profile = load_instance(instance)?;
    let counts = count_efficient(&profile)?;
    writeln!(out, "pair_count pareto_count")?;
    writeln!(out, "{} {}", counts.pair_efficient, counts.pareto_efficient)?;
    Ok(Outcome::from_pass(
        counts.pareto_efficient <= counts.pair_efficient,
    ))
}

pub fn count_random(trials: u64, n: usize, seed: u64, out: &mut dyn Write) -> CmdResult {
    let spec = DomainSpec::unrestricted(n);
    spec.validate()?;
    let instance = Arc::new(Instance::standard(n)?);
    let mut pass = true;
    let mut max_ratio = 0.0f64;
    writeln!(out, "pair_count pareto_count")?;
    for t in 0..trials {
        let profile = sample_profile(&spec, &instance, trial_seed(seed, t))?;
        let counts = count_efficient(&profile)?;
        pass &= counts.pareto_efficient <= counts.pair_efficient;
        max_ratio =
            max_ratio.max(counts.pair_efficient as f64 / counts.pareto_efficient.max(1) as f64);
        writeln!(out, "{} {}", counts.pair_efficient, counts.pareto_efficient)?;
    }
    writeln!(out, "max ratio: {max_ratio:.4}")?;
    Ok(Outcome::from_pass(pass))
}

pub fn enumerate(
    sp: bool,
    sd: bool,
    m: usize,
    order: Option<&str>,
    out: &mut dyn Write,
) -> CmdResult {
    if m < 2 {
        return Err(CliError::Input(format!("--m must be at least 2, got {m}")));
    }
    let names: Vec<String> = (0..m).map(|i| House(i).to_string()).collect();
    let lookup = |name: &str| names.iter().position(|x| x == name).map(House);
    let order = match order {
        Some(text) => {
            let seq = text
                .split_whitespace()
                .map(|s| {
                    lookup(s)
                        .ok_or_else(|| CliError::Input(format!("--order: unknown house {s:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            LinearOrder::from_sequence(&seq)
                .map_err(|e| CliError::Input(format!("--order: {e}")))?
        }
        None => LinearOrder::identity(m),
    };
    let prefs: Box<dyn Iterator<Item = Preference>> = if sp {
        Box::new(enumerate_single_peaked(&order).into_iter())
    } else if sd {
        Box::new(enumerate_single_dipped(&order).into_iter())
    } else {
        Box::new(enumerate_all(m))
    };
    for p in prefs {
        writeln!(out, "{p}")?;
    }
    Ok(Outcome::Pass)
}
