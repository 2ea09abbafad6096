//! Text checkpoint layout:
//!
//! ```text
//! siren-checkpoint v1
//! widths 2 128 128 128 1
//! omega0 3.0000000000000000e1
//! params 33793
//! <one parameter per line, 17 significant digits>
//! ```
//!
//! Parameters follow the flat layout of [`SirenNet::params`]. Values are
//! written with enough digits to round-trip bit-exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::net::SirenNet;
use crate::error::{Error, Result};

const MAGIC: &str = "siren-checkpoint v1";

pub fn to_checkpoint_string(net: &SirenNet) -> String {
    let mut out = String::with_capacity(24 * net.num_params() + 64);
    let widths: Vec<String> = net.widths().iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "widths {}", widths.join(" "));
    let _ = writeln!(out, "omega0 {:.16e}", net.omega0());
    let _ = writeln!(out, "params {}", net.num_params());
    for p in net.params() {
        let _ = writeln!(out, "{p:.16e}");
    }
    out
}

pub fn save_checkpoint(net: &SirenNet, path: &Path) -> Result<()> {
    fs::write(path, to_checkpoint_string(net)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<SirenNet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text, path)
}

pub fn parse_checkpoint(text: &str, path: &Path) -> Result<SirenNet> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| perr(0, format!("missing `{key}` line")))?;
        match line.strip_prefix(key) {
            Some(rest) => Ok((no, rest.trim().to_string())),
            None => Err(perr(no, format!("expected `{key}`, found `{line}`"))),
        }
    };
    let (no, rest) = header(MAGIC)?;
    if !rest.is_empty() {
        return Err(perr(no, "trailing text after magic line".into()));
    }
    let (no, w) = header("widths")?;
    let widths = w
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| perr(no, format!("bad width: {e}")))?;
    let (no, o) = header("omega0")?;
    let omega0: f64 = o.parse().map_err(|e| perr(no, format!("bad omega0: {e}")))?;
    let (no, c) = header("params")?;
    let count: usize = c.parse().map_err(|e| perr(no, format!("bad count: {e}")))?;

    let mut params = Vec::with_capacity(count);
    let mut last = no;
    for (no, line) in lines {
        last = no;
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|e| perr(no, format!("bad parameter `{line}`: {e}")))?;
        params.push(v);
    }
    if params.len() != count {
        return Err(perr(
            last,
            format!("header declares {count} parameters, file holds {}", params.len()),
        ));
    }
    SirenNet::from_params(widths, omega0, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::siren::init_siren;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut net = init_siren(&[2, 7, 5, 1], 30.0, 11).unwrap();
        net.params_mut()[3] = 1.0 / 3.0;
        net.params_mut()[4] = -f64::MIN_POSITIVE;
        let text = to_checkpoint_string(&net);
        let back = parse_checkpoint(&text, Path::new("mem")).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn truncated_file_rejected() {
        let net = init_siren(&[2, 3, 1], 30.0, 0).unwrap();
        let text = to_checkpoint_string(&net);
        let cut: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        let err = parse_checkpoint(&cut, Path::new("ck")).unwrap_err();
        assert!(err.to_string().contains("declares"));
        assert!(parse_checkpoint("garbage", Path::new("ck")).is_err());
    }
}
