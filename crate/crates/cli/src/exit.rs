//! Exit codes and error reporting.

use neuromouse_core::Error;

pub const OK: i32 = 0;
pub const USAGE: i32 = 1;
pub const DATA: i32 = 2;
pub const NUMERIC: i32 = 3;

/// A bad flag value or option combination.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// A numerical failure that still produced output (e.g. a diverged run).
#[derive(Debug)]
pub struct Numeric(pub String);

impl std::fmt::Display for Numeric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Numeric {}

pub fn code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if cause.is::<Usage>() {
            return USAGE;
        }
        if cause.is::<Numeric>() {
            return NUMERIC;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::Numeric(_) | Error::Estimation(_) => NUMERIC,
                Error::Config(_) | Error::Lookup(_) => USAGE,
                _ => DATA,
            };
        }
    }
    DATA
}

pub fn kind(code: i32) -> &'static str {
    match code {
        USAGE => "usage",
        NUMERIC => "numeric",
        _ => "data",
    }
}

pub fn report_json(kind: &str, msg: &str) {
    let code = match kind {
        "usage" => USAGE,
        "numeric" => NUMERIC,
        _ => DATA,
    };
    eprintln!("{}", serde_json::json!({ "error": msg, "kind": kind, "exit_code": code }));
}

pub fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn codes_follow_the_cause_chain() {
        let numeric: anyhow::Result<()> = Err(Error::Numeric("nan".into())).context("training");
        assert_eq!(code(&numeric.unwrap_err()), NUMERIC);
        assert_eq!(code(&Error::Parse { line: 3, msg: "x".into() }.into()), DATA);
        assert_eq!(code(&Error::Lookup("model".into()).into()), USAGE);
        assert_eq!(code(&usage("bad")), USAGE);
        assert_eq!(code(&anyhow::anyhow!("io")), DATA);
        let io: anyhow::Result<()> = Err(std::io::Error::other("gone")).context("reading");
        assert_eq!(code(&io.unwrap_err()), DATA);
    }
}
