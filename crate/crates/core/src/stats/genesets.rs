//! GMT gene-set files: one set per line, tab-separated as
//! `set_id<TAB>description<TAB>member...`. One file per source database tag.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::DataError;

/// set id → (source tag, members). The map shape consumed by [`crate::stats::ora`]
/// and [`crate::stats::gsea`].
pub type GeneSetMap = BTreeMap<String, (String, BTreeSet<String>)>;

/// Parses one GMT file, tagging every set with `source`.
pub fn parse_gmt(text: &str, source: &str) -> GeneSetMap {
    let mut out = GeneSetMap::new();
    for line in text.lines() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let Some(id) = parts.next() else { continue };
        let _description = parts.next();
        let members: BTreeSet<String> = parts
            .filter(|m| !m.is_empty())
            .map(|m| m.to_string())
            .collect();
        if !id.is_empty() {
            out.insert(id.to_string(), (source.to_string(), members));
        }
    }
    out
}

/// Loads a GMT file; the source tag defaults to the file stem.
pub fn load_gmt(path: &Path, source: Option<&str>) -> Result<GeneSetMap, DataError> {
    if !path.exists() {
        return Err(DataError::MissingFile(path.to_path_buf()));
    }
    let tag = source
        .map(|s| s.to_string())
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "genesets".to_string());
    Ok(parse_gmt(&std::fs::read_to_string(path)?, &tag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sets_and_skips_blanks() {
        let text = "SET_A\timmune response\tP01\tP02\tP03\n\nSET_B\t\tP04\n";
        let map = parse_gmt(text, "go");
        assert_eq!(map.len(), 2);
        let (source, members) = &map["SET_A"];
        assert_eq!(source, "go");
        assert_eq!(members.len(), 3);
        assert!(members.contains("P02"));
        assert_eq!(map["SET_B"].1.len(), 1);
    }
}
