use dotedge::dataset::{generate_dataset, DatasetKind};

use crate::args::SynthArgs;
use crate::error::{CliError, Result};
use crate::output::{create_dir, out_dir};

pub fn run(args: &SynthArgs) -> Result<String> {
    let kind = DatasetKind::from(args.kind);
    let per_config = args.per_config.unwrap_or(kind.paper_per_config());
    if per_config == 0 {
        return Err(CliError::Usage("--per-config must be at least 1".into()));
    }
    let dir = out_dir(args.common.out.as_deref(), &format!("{}-seed{}", kind.name(), args.seed));
    create_dir(&dir)?;
    let manifest = generate_dataset(kind, args.seed, per_config, &dir)?;
    Ok(format!("{} {} stimuli in {}", manifest.entries.len(), kind.name(), dir.display()))
}
