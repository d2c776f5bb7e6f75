use std::path::PathBuf;

use navmap_core::eval::{format_table, MetricReport};

use crate::error::{CliError, Code, Result};
use crate::manifest::write_atomic;
use crate::Context;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// `NAME=metrics.json` pairs, one table row each.
    #[arg(required = true)]
    pub entries: Vec<String>,
    /// Also write the table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(_ctx: &Context, args: Args) -> Result<()> {
    let mut rows = Vec::new();
    for entry in &args.entries {
        let (name, path) = entry
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("'{entry}' is not NAME=PATH")))?;
        let path = PathBuf::from(path);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let report: MetricReport =
            serde_json::from_str(&text).map_err(|e| CliError::new(Code::Parse, format!("{}: {e}", path.display())))?;
        rows.push((name.to_string(), report));
    }
    let ks: Vec<usize> = rows[0].1.metrics.iter().map(|m| m.k).collect();
    if let Some((name, _)) = rows
        .iter()
        .find(|(_, r)| r.metrics.iter().map(|m| m.k).ne(ks.iter().copied()))
    {
        return Err(CliError::usage(format!(
            "'{name}' reports different k values than '{}'",
            rows[0].0
        )));
    }
    let refs: Vec<(String, &MetricReport)> = rows.iter().map(|(n, r)| (n.clone(), r)).collect();
    let table = format_table(&refs);
    print!("{table}");
    if let Some(out) = &args.out {
        write_atomic(out, table.as_bytes())?;
    }
    Ok(())
}
