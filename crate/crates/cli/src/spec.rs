//! Parsers for the compact shape and rank notation used on the command line.

use sbtd::CoreStructure;

use crate::error::{CliError, CliResult};

/// `"60x40x40"` → `[60, 40, 40]`.
pub fn parse_dims(s: &str) -> CliResult<Vec<usize>> {
    let dims: Vec<usize> = s
        .split('x')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("'{s}' is not a shape like 4x4x2")))?;
    if dims.contains(&0) {
        return Err(CliError::Input(format!("'{s}' has a zero dimension")));
    }
    Ok(dims)
}

/// One entry per term: either `cpd:R` for `R` rank-1 terms, or a comma
/// separated list of block sizes such as `2x2x1,2x2x2`, where `BxC*k`
/// repeats a block `k` times. All-ones blocks are rank-1 terms.
pub fn parse_ranks(s: &str, order: usize) -> CliResult<Vec<(CoreStructure, Vec<usize>)>> {
    let bad = |msg: String| CliError::Input(format!("ranks '{s}': {msg}"));
    if let Some(r) = s.strip_prefix("cpd:") {
        let r: usize = r.trim().parse().map_err(|_| bad("expected cpd:R with an integer R".into()))?;
        if r == 0 {
            return Err(bad("rank must be positive".into()));
        }
        return Ok(vec![(CoreStructure::Rank1, vec![1; order]); r]);
    }
    let mut out = Vec::new();
    for item in s.split(',') {
        let (block, count) = match item.split_once('*') {
            Some((b, k)) => (b, k.trim().parse::<usize>().map_err(|_| bad(format!("bad repeat in '{item}'")))?),
            None => (item, 1),
        };
        let l = parse_dims(block)?;
        if l.len() != order {
            return Err(bad(format!("block {block} has order {}, expected {order}", l.len())));
        }
        let structure = if l.iter().all(|&x| x == 1) {
            CoreStructure::Rank1
        } else {
            CoreStructure::FullRank
        };
        out.extend(std::iter::repeat_n((structure, l), count));
    }
    if out.is_empty() {
        return Err(bad("no terms".into()));
    }
    Ok(out)
}

/// Splits `key=value`.
pub fn parse_param(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("'{s}' is not of the form key=value")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims() {
        assert_eq!(parse_dims("265x371x7").unwrap(), vec![265, 371, 7]);
        assert!(parse_dims("4x0").is_err());
        assert!(parse_dims("4,4").is_err());
    }

    #[test]
    fn ranks() {
        let r = parse_ranks("cpd:3", 3).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.iter().all(|(s, l)| *s == CoreStructure::Rank1 && l == &[1, 1, 1]));
        let r = parse_ranks("2x2x1*2,1x1x1", 3).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0], (CoreStructure::FullRank, vec![2, 2, 1]));
        assert_eq!(r[2].0, CoreStructure::Rank1);
        assert!(parse_ranks("2x2", 3).is_err());
    }

    #[test]
    fn params() {
        assert_eq!(parse_param("n=100").unwrap(), ("n".into(), "100".into()));
        assert!(parse_param("=1").is_err());
        assert!(parse_param("n").is_err());
    }
}
