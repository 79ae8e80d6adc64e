//! Run configuration: presets, JSON config files and the metadata record.
//!
//! Values are resolved as preset defaults, then the config file, then
//! command-line flags. Unknown keys in a file are rejected.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{RunError, RunResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Seconds; for smoke tests.
    Smoke,
    /// Minutes on a laptop.
    #[default]
    Desk,
    /// Full-scale reference budgets; hours.
    Paper,
}

/// Keys shared by every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    pub seed: u64,
    /// Worker threads; `None` defers to `PMTUNE_WORKERS`, then to the
    /// number of available cores.
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
}

impl Common {
    pub fn defaults(command: &str) -> Self {
        Self {
            seed: 20_160_101,
            workers: None,
            output_dir: PathBuf::from("out").join(command),
        }
    }
}

const COMMON_KEYS: [&str; 3] = ["seed", "workers", "output_dir"];

pub trait ExperimentConfig: Serialize + DeserializeOwned + Clone + std::fmt::Debug {
    const COMMAND: &'static str;
    fn preset(p: Preset) -> Self;
    fn validate(&self) -> RunResult<()>;
}

/// Reads a config file. A metadata record written by an earlier run is
/// accepted too, in which case its `config` object is used.
pub fn load_file(path: &Path, command: &str) -> RunResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return Err(RunError::config(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    if let (Some(Value::String(cmd)), Some(Value::Object(_))) =
        (map.get("command"), map.get("config"))
    {
        if cmd != command {
            return Err(RunError::config(format!(
                "metadata is for `{cmd}`, not `{command}`"
            )));
        }
        let Some(Value::Object(cfg)) = map.remove("config") else {
            unreachable!()
        };
        return Ok(cfg);
    }
    Ok(map)
}

/// Preset defaults overlaid with the file's keys.
pub fn resolve<C: ExperimentConfig>(
    preset: Preset,
    file: Option<Map<String, Value>>,
) -> RunResult<(Common, C)> {
    let mut common = serde_json::to_value(Common::defaults(C::COMMAND)).expect("serializable");
    let mut exp = serde_json::to_value(C::preset(preset)).expect("serializable");
    if let Some(file) = file {
        for (k, v) in file {
            let target = if COMMON_KEYS.contains(&k.as_str()) {
                &mut common
            } else {
                &mut exp
            };
            target.as_object_mut().expect("object").insert(k, v);
        }
    }
    let common: Common =
        serde_json::from_value(common).map_err(|e| RunError::config(e.to_string()))?;
    let exp: C = serde_json::from_value(exp)
        .map_err(|e| RunError::config(format!("{}: {e}", C::COMMAND)))?;
    Ok((common, exp))
}

/// Worker count from the config, then `PMTUNE_WORKERS`, then the machine.
pub fn worker_count(common: &Common) -> RunResult<usize> {
    if let Some(w) = common.workers {
        return if w == 0 {
            Err(RunError::config("workers must be positive"))
        } else {
            Ok(w)
        };
    }
    if let Ok(v) = std::env::var("PMTUNE_WORKERS") {
        return match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(RunError::config(format!(
                "PMTUNE_WORKERS={v:?} is not a positive integer"
            ))),
        };
    }
    Ok(std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1))
}

/// Contents of `metadata.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata<'a, C: Serialize> {
    pub command: &'static str,
    pub config: MergedConfig<'a, C>,
    pub version: &'static str,
    pub workers: usize,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

/// The resolved configuration as one flat object, so that the metadata
/// file can be fed back through `--config`.
#[derive(Clone, Debug)]
pub struct MergedConfig<'a, C> {
    pub common: &'a Common,
    pub experiment: &'a C,
}

impl<C: Serialize> Serialize for MergedConfig<'_, C> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map =
            match serde_json::to_value(self.experiment).map_err(serde::ser::Error::custom)? {
                Value::Object(m) => m,
                _ => {
                    return Err(serde::ser::Error::custom(
                        "experiment config must be an object",
                    ))
                }
            };
        if let Value::Object(c) =
            serde_json::to_value(self.common).map_err(serde::ser::Error::custom)?
        {
            map.extend(c);
        }
        map.serialize(s)
    }
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Demo {
        m: usize,
        ell: f64,
    }

    impl ExperimentConfig for Demo {
        const COMMAND: &'static str = "demo";
        fn preset(p: Preset) -> Self {
            Demo {
                m: if p == Preset::Paper { 100 } else { 10 },
                ell: 2.0,
            }
        }
        fn validate(&self) -> RunResult<()> {
            Ok(())
        }
    }

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn file_overrides_preset() {
        let f = obj(serde_json::json!({"m": 5, "seed": 9}));
        let (c, d) = resolve::<Demo>(Preset::Paper, Some(f)).unwrap();
        assert_eq!(d, Demo { m: 5, ell: 2.0 });
        assert_eq!(c.seed, 9);
        assert_eq!(c.output_dir, PathBuf::from("out/demo"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let f = obj(serde_json::json!({"mm": 5}));
        let e = resolve::<Demo>(Preset::Desk, Some(f)).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn merged_config_round_trips() {
        let common = Common::defaults("demo");
        let exp = Demo { m: 7, ell: 1.5 };
        let v = serde_json::to_value(MergedConfig {
            common: &common,
            experiment: &exp,
        })
        .unwrap();
        let (c2, e2) = resolve::<Demo>(Preset::Paper, Some(obj(v))).unwrap();
        assert_eq!((c2, e2), (common, exp));
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<usize>("1,x").is_err());
    }
}
