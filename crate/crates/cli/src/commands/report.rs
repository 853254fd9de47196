use crate::error::{CliError, CliResult};
use crate::report::{read_manifest, verify_manifest};
use crate::ReportArgs;

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let manifest = read_manifest(&args.input)?;
    println!("{} {} {}", manifest.tool, manifest.version, manifest.subcommand);
    println!("config_hash  {}", manifest.config_hash);
    if let Some(seed) = manifest.seed {
        println!("seed         {seed}");
    }
    println!("wall_time_ms {}", manifest.wall_time_ms);
    println!("workers      {}", manifest.workers);
    let bad = verify_manifest(&args.input, &manifest);
    for f in &manifest.files {
        let status = if bad.contains(&f.name) { "MISMATCH" } else { "ok" };
        println!("{:<24} {:>10} bytes  {}  {status}", f.name, f.bytes, &f.sha256[..16]);
    }
    println!("summary {}", serde_json::to_string_pretty(&manifest.summary).map_err(|e| CliError::Io(e.to_string()))?);
    if !bad.is_empty() {
        return Err(CliError::Failed(format!("{} listed files are missing or modified: {}", bad.len(), bad.join(", "))));
    }
    Ok(())
}
