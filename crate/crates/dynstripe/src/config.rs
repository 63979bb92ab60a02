//! Cluster files and layout strings.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use dynstripe_core::size::parse_size;
use dynstripe_core::{ClusterModel, CompositeLayout, DirectoryType, StripingConfig, Watermark};

/// Loads a cluster description. Field names match [`ClusterModel`]; every
/// field except `launch_jitter` is required. Bandwidths are bytes per second
/// and times are seconds.
///
/// ```toml
/// num_clients = 16
/// client_link_bw = 6.0e9
/// num_oss = 8
/// oss_bw_cap = 3.2e9
/// osts_per_oss = 8
/// ost_bw = 3.0e8
/// per_op_latency = 2.0e-4
/// seek_penalty = 4.0e-3
/// aggregate_fabric_bw = 3.6e10
/// ```
pub fn load_cluster(path: &Path) -> anyhow::Result<ClusterModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_cluster(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_cluster(text: &str) -> anyhow::Result<ClusterModel> {
    let model: ClusterModel = toml::from_str(text)?;
    model.validate()?;
    Ok(model)
}

/// Parses a layout written as configs separated by watermarks, e.g.
/// `4x1M,1G,8x2M,10G,16x4M` or `A,1T,B`. A config is either a directory
/// type letter or `COUNTxWIDTH`.
pub fn parse_layout(text: &str) -> anyhow::Result<CompositeLayout> {
    let mut configs = Vec::new();
    let mut watermarks = Vec::new();
    for (i, tok) in text.split(',').map(str::trim).enumerate() {
        if i % 2 == 1 {
            watermarks.push(Watermark(parse_size(tok).with_context(|| format!("watermark `{tok}`"))?));
            continue;
        }
        let mut letters = tok.chars();
        let config = match (letters.next(), letters.next()) {
            (Some(c), None) => match DirectoryType::from_letter(c.to_ascii_uppercase()) {
                Some(d) => d.config(),
                None => bail!("unknown directory type `{tok}`"),
            },
            _ => {
                let Some((count, width)) = tok.split_once(['x', 'X']) else {
                    bail!("expected COUNTxWIDTH or a directory letter, got `{tok}`");
                };
                let count = count.parse().with_context(|| format!("stripe count in `{tok}`"))?;
                StripingConfig::new(count, parse_size(width).with_context(|| format!("stripe width in `{tok}`"))?)?
            }
        };
        configs.push(config);
    }
    if configs.len() == watermarks.len() {
        bail!("layout must end with a striping config, not a watermark");
    }
    Ok(CompositeLayout::build(&watermarks, &configs)?)
}
