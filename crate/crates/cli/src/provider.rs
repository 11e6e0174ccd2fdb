use anyhow::{Context, Result};
use upscan_core::chain::{ChainProvider, FixtureProvider, RpcProvider};

use crate::ProviderArgs;

pub enum Backend {
    Fixture(FixtureProvider),
    Rpc(RpcProvider),
}

impl Backend {
    pub fn open(args: &ProviderArgs) -> Result<Self> {
        match (&args.fixture, &args.rpc) {
            (Some(path), _) => Ok(Self::Fixture(
                FixtureProvider::from_path(path).with_context(|| format!("loading fixture {}", path.display()))?,
            )),
            (None, Some(url)) => Ok(Self::Rpc(RpcProvider::new(url.clone()))),
            (None, None) => anyhow::bail!("either --rpc or --fixture is required"),
        }
    }

    pub fn is_live(&self) -> bool {
        matches!(self, Self::Rpc(_))
    }

    pub fn get(&self) -> &dyn ChainProvider {
        match self {
            Self::Fixture(p) => p,
            Self::Rpc(p) => p,
        }
    }
}
