//! Flat key=value configuration files. Every key maps one-to-one onto a CLI
//! flag of the same name; precedence is defaults < file < flags. Each run
//! writes an echo of the effective values that can be fed back as a config
//! file to reproduce it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

/// Parse "key = value" lines; '#' starts a comment, blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_kv_file(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("bad value `{value}` for key `{key}`")))
}

/// Apply one key=value pair onto a training config.
pub fn apply_key(config: &mut TrainConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "walks_per_node" => config.walks_per_node = parse(key, value)?,
        "walk_length" => config.walk_length = parse(key, value)?,
        "context_size" => config.context_size = parse(key, value)?,
        "subsample_threshold" => config.subsample_threshold = parse(key, value)?,
        "subsample_sense" => config.subsample_sense = value.parse()?,
        "embedding_dim" => config.embedding_dim = parse(key, value)?,
        "hidden1" => config.hidden1 = parse(key, value)?,
        "hidden2" => config.hidden2 = parse(key, value)?,
        "negatives" => config.negatives = parse(key, value)?,
        "pos_weight" => config.pos_weight = parse(key, value)?,
        "neg_strength" => config.neg_strength = parse(key, value)?,
        "attr_weight" => config.attr_weight = parse(key, value)?,
        "learning_rate" => config.learning_rate = parse(key, value)?,
        "beta1" => config.beta1 = parse(key, value)?,
        "beta2" => config.beta2 = parse(key, value)?,
        "epsilon" => config.epsilon = parse(key, value)?,
        "clip" => config.clip = parse(key, value)?,
        "target_matrix" => config.target_matrix = value.parse()?,
        "sampling_mode" => config.sampling_mode = value.parse()?,
        "max_epochs" => config.max_epochs = parse(key, value)?,
        "batch_size" => config.batch_size = parse(key, value)?,
        "patience" => config.patience = parse(key, value)?,
        "min_delta" => config.min_delta = parse(key, value)?,
        "checkpoint_every" => config.checkpoint_every = parse(key, value)?,
        "pool_factor" => config.pool_factor = parse(key, value)?,
        "workers" => config.workers = parse(key, value)?,
        "seed" => config.seed = parse(key, value)?,
        other => return Err(Error::Config(format!("unknown config key `{other}`"))),
    }
    Ok(())
}

/// Effective values as key=value text, suitable both for reading and for the
/// per-run config echo.
pub fn echo(config: &TrainConfig) -> String {
    let mut out = String::new();
    let mut w = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    w("walks_per_node", config.walks_per_node.to_string());
    w("walk_length", config.walk_length.to_string());
    w("context_size", config.context_size.to_string());
    w("subsample_threshold", config.subsample_threshold.to_string());
    w("subsample_sense", config.subsample_sense.to_string());
    w("embedding_dim", config.embedding_dim.to_string());
    w("hidden1", config.hidden1.to_string());
    w("hidden2", config.hidden2.to_string());
    w("negatives", config.negatives.to_string());
    w("pos_weight", config.pos_weight.to_string());
    w("neg_strength", config.neg_strength.to_string());
    w("attr_weight", config.attr_weight.to_string());
    w("learning_rate", config.learning_rate.to_string());
    w("beta1", config.beta1.to_string());
    w("beta2", config.beta2.to_string());
    w("epsilon", config.epsilon.to_string());
    w("clip", config.clip.to_string());
    w("target_matrix", config.target_matrix.to_string());
    w("sampling_mode", config.sampling_mode.to_string());
    w("max_epochs", config.max_epochs.to_string());
    w("batch_size", config.batch_size.to_string());
    w("patience", config.patience.to_string());
    w("min_delta", config.min_delta.to_string());
    w("checkpoint_every", config.checkpoint_every.to_string());
    w("pool_factor", config.pool_factor.to_string());
    w("workers", config.workers.to_string());
    w("seed", config.seed.to_string());
    out
}

/// Build a config from defaults, an optional file, and override pairs.
pub fn build_config(
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<TrainConfig> {
    let mut config = TrainConfig::default();
    if let Some(path) = file {
        for (k, v) in read_kv_file(path)? {
            apply_key(&mut config, &k, &v)?;
        }
    }
    for (k, v) in overrides {
        apply_key(&mut config, k, v)?;
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut config = TrainConfig::default();
        config.context_size = 7;
        config.attr_weight = 12345.5;
        config.sampling_mode = crate::trainer::SamplingChoice::Pre;
        let text = echo(&config);
        let mut rebuilt = TrainConfig::default();
        for (k, v) in parse_kv(&text).unwrap() {
            apply_key(&mut rebuilt, &k, &v).unwrap();
        }
        assert_eq!(config, rebuilt);
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let kv = parse_kv("# full line comment\n\nseed = 9 # trailing\n").unwrap();
        assert_eq!(kv.get("seed").map(String::as_str), Some("9"));
        assert_eq!(kv.len(), 1);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut config = TrainConfig::default();
        assert!(apply_key(&mut config, "warp_drive", "1").is_err());
    }

    #[test]
    fn overrides_beat_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "seed = 1\nmax_epochs = 3\n").unwrap();
        let cfg = build_config(
            Some(&p),
            &[("seed".to_string(), "42".to_string())],
        )
        .unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.max_epochs, 3);
    }
}
