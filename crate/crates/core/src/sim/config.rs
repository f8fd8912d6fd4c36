use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Model, StageKind, StageRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptPolicy {
    Always,
    Never,
}

/// `count` instances born at `stage` on `tick`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spawn {
    pub stage: StageRef,
    pub tick: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    pub max_ticks: u64,
    pub spawns: Vec<Spawn>,
    /// Ticks a thing stays at a stage of this kind; missing kinds take 1.
    pub durations: BTreeMap<StageKind, u64>,
    /// Per Accept stage; missing stages accept everything.
    pub accept: BTreeMap<StageRef, AcceptPolicy>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_ticks: 1000,
            spawns: Vec::new(),
            durations: BTreeMap::new(),
            accept: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("spawn stage `{0}` is not a create stage of the model")]
    BadSpawn(String),
    #[error("accept policy for `{0}`, which has no accept stage")]
    BadAccept(String),
}

impl SimConfig {
    pub fn duration(&self, kind: StageKind) -> u64 {
        self.durations.get(&kind).copied().unwrap_or(1)
    }

    pub fn policy(&self, accept: &StageRef) -> AcceptPolicy {
        self.accept
            .get(accept)
            .copied()
            .unwrap_or(AcceptPolicy::Always)
    }

    /// One spawn of a single instance at tick 1.
    pub fn single(stage: StageRef) -> Self {
        Self {
            spawns: vec![Spawn {
                stage,
                tick: 1,
                count: 1,
            }],
            ..Self::default()
        }
    }

    /// Rewrites every stage reference to its exact path in `model`, failing
    /// for references that do not name a stage of the right kind.
    pub fn resolve(&self, model: &Model) -> Result<SimConfig, ConfigError> {
        let fix = |r: &StageRef, kind: StageKind| -> Option<StageRef> {
            if r.kind != kind {
                return None;
            }
            let m = model
                .machine(&r.machine)
                .or_else(|| model.find_machine(r.machine.as_str()))?;
            (!m.folded && m.has(kind)).then(|| StageRef::new(m.path.clone(), kind))
        };
        let mut out = self.clone();
        for s in &mut out.spawns {
            s.stage = fix(&s.stage, StageKind::Create)
                .ok_or_else(|| ConfigError::BadSpawn(s.stage.to_string()))?;
        }
        out.accept = self
            .accept
            .iter()
            .map(|(r, p)| {
                fix(r, StageKind::Accept)
                    .map(|r| (r, *p))
                    .ok_or_else(|| ConfigError::BadAccept(r.machine.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(out)
    }
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .unwrap_or(v)
}

/// Reads the `key = value` config format. Keys: `seed`, `max_ticks`,
/// `spawn = "PATH.create @ TICK x COUNT"` (repeatable, `x COUNT` optional),
/// `duration.KIND = N`, `accept.PATH = always|never`. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ConfigError::Syntax { line, message };
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim(), unquote(value.trim()).trim());
        let int = |v: &str| -> Result<u64, ConfigError> {
            v.parse()
                .map_err(|_| err(format!("`{v}` is not a non-negative integer")))
        };
        let positive = |v: &str| -> Result<u64, ConfigError> {
            match int(v)? {
                0 => Err(err(format!("`{key}` must be at least 1"))),
                n => Ok(n),
            }
        };
        match key {
            "seed" => cfg.seed = int(value)?,
            "max_ticks" => cfg.max_ticks = positive(value)?,
            "spawn" => {
                let (stage, rest) = value
                    .split_once('@')
                    .ok_or_else(|| err("spawn needs the form `PATH.create @ TICK x COUNT`".into()))?;
                let stage: StageRef = stage
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("`{}` is not a stage reference", stage.trim())))?;
                let (tick, count) = match rest.split_once('x') {
                    Some((t, c)) => (positive(t.trim())?, positive(c.trim())?),
                    None => (positive(rest.trim())?, 1),
                };
                cfg.spawns.push(Spawn { stage, tick, count });
            }
            _ => {
                if let Some(kind) = key.strip_prefix("duration.") {
                    let kind = StageKind::from_keyword(kind)
                        .ok_or_else(|| err(format!("`{kind}` is not a stage kind")))?;
                    cfg.durations.insert(kind, positive(value)?);
                } else if let Some(path) = key.strip_prefix("accept.") {
                    let stage: StageRef = format!("{path}.accept")
                        .parse()
                        .map_err(|_| err(format!("`{path}` is not a machine path")))?;
                    let policy = match value {
                        "always" => AcceptPolicy::Always,
                        "never" => AcceptPolicy::Never,
                        other => return Err(err(format!("accept policy must be `always` or `never`, found `{other}`"))),
                    };
                    cfg.accept.insert(stage, policy);
                } else {
                    return Err(err(format!("unknown key `{key}`")));
                }
            }
        }
    }
    Ok(cfg)
}
