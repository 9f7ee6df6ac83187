//! Running an experiment into a directory of CSVs, a manifest and a summary,
//! and replaying a run from its manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use sha2::{Digest, Sha256};

use crate::commands::{self, Outcome};
use crate::params::Params;

pub const MANIFEST: &str = "manifest.toml";
pub const SUMMARY: &str = "summary.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Git-style object hash of the config echo: sha256 of `blob <len>\0<text>`.
pub fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()));
    h.update(text);
    hex::encode(h.finalize())
}

/// Run `p` on a pool of `threads` workers; `None` uses one per logical core.
pub fn run_with_threads(p: &Params, threads: Option<usize>) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("could not start the worker pool")?;
    pool.install(|| commands::run(p))
}

/// CSV text of every table, in output order.
pub fn csv_outputs(o: &Outcome) -> Vec<(String, String)> {
    o.tables
        .iter()
        .map(|(n, t)| (n.clone(), t.to_csv_string()))
        .collect()
}

/// What a finished run left behind.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub outcome: Outcome,
    /// File name to sha256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    pub summary: String,
}

pub fn summary_text(p: &Params, o: &Outcome) -> String {
    let mut s = format!("quadlab {} (seed {})\n", p.subcommand, p.u64("seed"));
    for l in &o.summary {
        s += &format!("  {l}\n");
    }
    s += "cap and horizon hits:\n";
    if o.cap_hits.is_empty() {
        s += "  none recorded\n";
    }
    for (what, n) in &o.cap_hits {
        s += &format!("  {what}: {n}\n");
    }
    if let Some(f) = &o.failure {
        s += &format!("FAILED: {f}\n");
    }
    s
}

/// Run and write `<dir>/*.csv`, `manifest.toml` and `summary.txt`.
pub fn execute(p: &Params, dir: &Path, threads: Option<usize>) -> Result<RunArtifacts> {
    let start = Instant::now();
    let outcome = run_with_threads(p, threads)?;
    let wall = start.elapsed().as_secs_f64();
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let mut outputs = BTreeMap::new();
    for (name, text) in csv_outputs(&outcome) {
        fs::write(dir.join(&name), &text).with_context(|| format!("cannot write {name}"))?;
        outputs.insert(name, sha256_hex(text.as_bytes()));
    }

    let config = p.to_toml();
    let config_text = toml::to_string(&config)?;
    let mut run = toml::Table::new();
    run.insert("subcommand".into(), p.subcommand.clone().into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("seed".into(), (p.u64("seed") as i64).into());
    run.insert(
        "threads".into(),
        (threads.unwrap_or_else(rayon::current_num_threads) as i64).into(),
    );
    run.insert("wall_time_s".into(), wall.into());
    run.insert("config_hash".into(), content_hash(&config_text).into());
    run.insert("failed".into(), outcome.failure.is_some().into());

    let mut caps = toml::Table::new();
    for (what, n) in &outcome.cap_hits {
        caps.insert(what.clone(), (*n as i64).into());
    }
    let mut doc = toml::Table::new();
    doc.insert("run".into(), run.into());
    doc.insert("config".into(), config.into());
    doc.insert(
        "outputs".into(),
        toml::Value::Table(
            outputs
                .iter()
                .map(|(k, v)| (k.clone(), v.clone().into()))
                .collect(),
        ),
    );
    doc.insert("cap_hits".into(), caps.into());
    fs::write(dir.join(MANIFEST), toml::to_string(&doc)?).context("cannot write the manifest")?;

    let summary = summary_text(p, &outcome);
    fs::write(dir.join(SUMMARY), &summary).context("cannot write the summary")?;
    Ok(RunArtifacts {
        dir: dir.to_path_buf(),
        outcome,
        outputs,
        summary,
    })
}

/// A manifest read back from disk.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub params: Params,
    pub outputs: BTreeMap<String, String>,
    pub config_hash: String,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc: toml::Table =
        toml::from_str(&text).with_context(|| format!("{} is not valid TOML", path.display()))?;
    let table = |k: &str| {
        doc.get(k)
            .and_then(|v| v.as_table())
            .ok_or_else(|| anyhow!("manifest lacks a [{k}] table"))
    };
    let run = table("run")?;
    let sub = run
        .get("subcommand")
        .and_then(|v| v.as_str())
        .ok_or_else(|| anyhow!("manifest lacks run.subcommand"))?;
    let config = table("config")?;
    let outputs = table("outputs")?
        .iter()
        .map(|(k, v)| {
            Ok((
                k.clone(),
                v.as_str()
                    .ok_or_else(|| anyhow!("bad hash for {k}"))?
                    .to_string(),
            ))
        })
        .collect::<Result<_>>()?;
    let hash = run
        .get("config_hash")
        .and_then(|v| v.as_str())
        .unwrap_or_default();
    if content_hash(&toml::to_string(config)?) != hash {
        return Err(anyhow!("the [config] table does not match run.config_hash"));
    }
    Ok(Manifest {
        params: Params::from_manifest(sub, config)?,
        outputs,
        config_hash: hash.to_string(),
    })
}

/// Outcome of a replay: `(file, recorded hash, replayed hash)` for each
/// output that differs or is missing.
#[derive(Clone, Debug)]
pub struct Replay {
    pub artifacts: RunArtifacts,
    pub mismatches: Vec<(String, String, String)>,
}

pub fn replay(manifest: &Path, dir: &Path, threads: Option<usize>) -> Result<Replay> {
    let m = read_manifest(manifest)?;
    let artifacts = execute(&m.params, dir, threads)?;
    let mut mismatches = Vec::new();
    for (name, want) in &m.outputs {
        let got = artifacts
            .outputs
            .get(name)
            .cloned()
            .unwrap_or_else(|| "missing".into());
        if &got != want {
            mismatches.push((name.clone(), want.clone(), got));
        }
    }
    for name in artifacts
        .outputs
        .keys()
        .filter(|n| !m.outputs.contains_key(*n))
    {
        mismatches.push((
            name.clone(),
            "missing".into(),
            artifacts.outputs[name].clone(),
        ));
    }
    Ok(Replay {
        artifacts,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn git_blob_hash() {
        assert_eq!(content_hash("hello"), sha256_hex(b"blob 5\0hello"));
        assert_ne!(content_hash("a"), content_hash("b"));
    }

    #[test]
    fn manifest_round_trip_reproduces_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let p = Params::resolve("transversality", None, &BTreeMap::new()).unwrap();
        let a = execute(&p, dir.path(), Some(1)).unwrap();
        let r = replay(
            &dir.path().join(MANIFEST),
            &dir.path().join("again"),
            Some(2),
        )
        .unwrap();
        assert!(r.mismatches.is_empty(), "{:?}", r.mismatches);
        assert_eq!(a.outputs, r.artifacts.outputs);
    }

    #[test]
    fn tampered_config_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = Params::resolve("certify", None, &BTreeMap::new()).unwrap();
        execute(&p, dir.path(), Some(1)).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("horizon = 64", "horizon = 65");
        fs::write(&path, text).unwrap();
        assert!(read_manifest(&path).is_err());
    }
}
