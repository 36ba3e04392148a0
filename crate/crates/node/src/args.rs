use std::path::PathBuf;

use authcred::coi::CoiVariant;
use authcred::node::{NodeConfig, Roles};

/// Node settings shared by the `authcred-node` binary and the CLI.
#[derive(Debug, Clone, clap::Args)]
pub struct NodeArgs {
    #[arg(long, env = "AUTHCRED_DATA_DIR", default_value = "./authcred-data")]
    pub data_dir: PathBuf,
    /// Deterministic keys and a logical clock.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "AUTHCRED_WALLET_PASSPHRASE", default_value = "authcred", hide_env_values = true)]
    pub passphrase: String,
    /// Comma-separated subset of issuer,journal,wallet,reader.
    #[arg(long, default_value = "issuer,journal,wallet,reader")]
    pub roles: String,
    #[arg(long, default_value_t = 14)]
    pub consent_deadline_days: u64,
    #[arg(long, default_value_t = 365)]
    pub credential_validity_days: u64,
    #[arg(long, value_parser = ["dh", "salted"], default_value = "dh")]
    pub coi: String,
}

impl NodeArgs {
    pub fn to_config(&self) -> NodeConfig {
        let has = |r: &str| self.roles.split(',').any(|x| x.trim() == r);
        NodeConfig {
            data_dir: Some(self.data_dir.clone()),
            roles: Roles { issuer: has("issuer"), journal: has("journal"), wallet: has("wallet"), reader: has("reader") },
            consent_deadline_days: self.consent_deadline_days,
            credential_validity_days: self.credential_validity_days,
            coi_variant: if self.coi == "salted" { CoiVariant::SaltedHash } else { CoiVariant::DhBlinded },
            seed: self.seed,
            wallet_passphrase: self.passphrase.clone(),
            ..NodeConfig::default()
        }
    }
}
