//! Subcommand bodies and the helpers they share.

pub mod estimate;
pub mod gen;
pub mod learn;
pub mod solve;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use bisim_core::mdp::{random_mdp, random_policy};
use bisim_core::operators::{ActionEmbedding, OperatorKind, OperatorTag, SimilarityG};
use bisim_core::seed::derive_seed;
use bisim_core::textio::{parse_mdp, parse_policy};
use bisim_core::{FiniteMdp, TabularPolicy};

use crate::config::Config;
use crate::error::{CliError, CliResult};

pub(crate) fn seed(cfg: &Config) -> CliResult<u64> {
    cfg.get_or("seed", 0)
}

pub(crate) fn out_dir(cfg: &Config) -> CliResult<PathBuf> {
    let dir = PathBuf::from(cfg.str_or("out", "."));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn emit(out: &mut dyn Write, line: &str) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io("<stdout>", e))
}

/// Two-state chain where each state loops on itself; rewards 1 and 0.
pub fn self_loop_mdp() -> FiniteMdp {
    FiniteMdp::from_tables(
        &[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]],
        &[vec![1.0], vec![0.0]],
        0.9,
    )
    .expect("valid built-in MDP")
}

/// One state, two actions with rewards 0 and 1.
pub fn two_action_mdp() -> FiniteMdp {
    FiniteMdp::from_tables(&[vec![vec![1.0], vec![1.0]]], &[vec![0.0, 1.0]], 0.9).expect("valid built-in MDP")
}

/// `mdp` is a file path, `random` (the default) or a built-in name
/// (`self-loop`, `two-action`).
pub(crate) fn load_mdp(cfg: &Config) -> CliResult<FiniteMdp> {
    match cfg.str_or("mdp", "random") {
        "random" => {
            let n = cfg.get_or("states", 3usize)?;
            let na = cfg.get_or("actions", 2usize)?;
            let lo = cfg.get_or("reward_min", 0.0)?;
            let hi = cfg.get_or("reward_max", 1.0)?;
            let discount = cfg.get_or("discount", 0.9)?;
            Ok(random_mdp(n, na, (lo, hi), discount, derive_seed(seed(cfg)?, "gen/mdp", 0))?)
        }
        "self-loop" => Ok(self_loop_mdp()),
        "two-action" => Ok(two_action_mdp()),
        path => Ok(parse_mdp(&read_file(Path::new(path))?)?),
    }
}

/// `policy` is a file path, `uniform` (the default) or `random`.
pub(crate) fn load_policy(cfg: &Config, mdp: &FiniteMdp) -> CliResult<TabularPolicy> {
    match cfg.str_or("policy", "uniform") {
        "uniform" => Ok(TabularPolicy::uniform(mdp.n_states(), mdp.n_actions())?),
        "random" => Ok(random_policy(mdp, derive_seed(seed(cfg)?, "gen/policy", 0))?),
        path => Ok(parse_policy(&read_file(Path::new(path))?)?),
    }
}

pub(crate) fn similarity(cfg: &Config, mdp: &FiniteMdp, policy: &TabularPolicy) -> CliResult<SimilarityG> {
    match cfg.str_or("similarity", "reward") {
        "reward" => Ok(SimilarityG::reward_diff(mdp)),
        "policy-mean" => Ok(SimilarityG::policy_mean_diff(policy, &ActionEmbedding::one_hot(mdp.n_actions()))?),
        other => Err(CliError::config(format!("unknown similarity `{other}` (reward | policy-mean)"))),
    }
}

pub(crate) fn operator_kind(tag: OperatorTag, g: &SimilarityG, n_actions: usize) -> OperatorKind {
    match tag {
        OperatorTag::Pi => OperatorKind::Pi,
        OperatorTag::Eps => OperatorKind::Eps(g.clone()),
        OperatorTag::EpsBar => OperatorKind::EpsBar(g.clone()),
        OperatorTag::DbcStyle => OperatorKind::DbcStyle,
        OperatorTag::PsmStyle => OperatorKind::PsmStyle(ActionEmbedding::one_hot(n_actions)),
    }
}

pub(crate) fn parse_tag(s: &str) -> CliResult<OperatorTag> {
    s.parse()
        .map_err(|_| CliError::config(format!("unknown operator `{s}` (pi | eps | eps-bar | dbc | psm)")))
}

/// `c` defaults to the MDP's discount.
pub(crate) fn constant(cfg: &Config, mdp: &FiniteMdp) -> CliResult<f64> {
    let c = cfg.get_or("c", mdp.discount())?;
    if !(0.0..1.0).contains(&c) {
        return Err(CliError::config(format!("c = {c} must lie in [0, 1)")));
    }
    Ok(c)
}
