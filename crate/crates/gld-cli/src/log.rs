// SPDX-License-Identifier: MIT

//! Leveled stderr logging controlled by the `GLD_LOG` env var.
//! Accepted values: `error` (default), `info`, `debug`; anything else
//! falls back to `error`.

use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Error,
    Info,
    Debug,
}

static LEVEL: OnceLock<Level> = OnceLock::new();

/// Resolves `GLD_LOG` once per process.
pub fn level() -> Level {
    *LEVEL.get_or_init(|| match std::env::var("GLD_LOG").as_deref() {
        Ok("debug") => Level::Debug,
        Ok("info") => Level::Info,
        _ => Level::Error,
    })
}

pub fn info(msg: impl AsRef<str>) {
    if level() >= Level::Info {
        eprintln!("gld: {}", msg.as_ref());
    }
}

pub fn debug(msg: impl AsRef<str>) {
    if level() >= Level::Debug {
        eprintln!("gld[debug]: {}", msg.as_ref());
    }
}
