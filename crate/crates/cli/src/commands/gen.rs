use std::collections::BTreeMap;
use std::io::Write;

use bisim_core::mdp::duplicate_states;
use bisim_core::textio::{format_mdp, format_pairs, format_policy};

use super::{emit, load_mdp, load_policy, out_dir, write_file};
use crate::config::Config;
use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "seed",
    "out",
    "workers",
    "mdp",
    "policy",
    "states",
    "actions",
    "reward_min",
    "reward_max",
    "discount",
    "duplicate",
];

/// `"0:2,3:3"` → state 0 gets two copies, state 3 three.
fn parse_duplicate(directive: &str) -> CliResult<BTreeMap<usize, usize>> {
    directive.split(',')
        .map(|item| {
            let (z, k) = item
                .split_once(':')
                .ok_or_else(|| CliError::config(format!("duplicate entry `{item}` is not `state:copies`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::config(format!("duplicate entry `{item}` is not numeric")))
            };
            Ok((parse(z)?, parse(k)?))
        })
        .collect()
}

pub fn run(cfg: &Config, out: &mut dyn Write) -> CliResult<()> {
    let dir = out_dir(cfg)?;
    let mut mdp = load_mdp(cfg)?;
    let mut policy = load_policy(cfg, &mdp)?;
    let mut pairs = None;
    if let Some(directive) = cfg.str("duplicate") {
        let dup = duplicate_states(&mdp, &parse_duplicate(directive)?)?;
        policy = policy.lift(&dup.origin)?;
        mdp = dup.mdp;
        pairs = Some(dup.pairs);
    }
    write_file(&dir.join("mdp.txt"), format_mdp(&mdp))?;
    write_file(&dir.join("policy.txt"), format_policy(&policy))?;
    let mut line = format!(
        "gen: {} states, {} actions, discount {} -> {}",
        mdp.n_states(),
        mdp.n_actions(),
        mdp.discount(),
        dir.join("mdp.txt").display()
    );
    if let Some(p) = pairs {
        write_file(&dir.join("pairs.txt"), format_pairs(&p))?;
        line.push_str(&format!(", {} bisimilar pairs", p.pairs.len()));
    }
    emit(out, &line)
}
