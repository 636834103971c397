//! Structured-output parsers for the formats the prompts mandate.

use serde::{Deserialize, Serialize};

use crate::error::LlmError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTypeAnswer {
    pub analysis: String,
    pub cell_type: String,
}

/// Extracts the text after the final "Cell Type:" marker; the analysis is
/// whatever sits between "Analysis:" and that marker.
pub fn parse_cell_type(response: &str) -> Result<CellTypeAnswer, LlmError> {
    let marker = "Cell Type:";
    let idx = response
        .rfind(marker)
        .ok_or_else(|| LlmError::ParseFailure(format!("no {marker:?} marker")))?;
    let cell_type = response[idx + marker.len()..].trim().to_string();
    if cell_type.is_empty() {
        return Err(LlmError::ParseFailure("empty cell type".into()));
    }
    let before = &response[..idx];
    let analysis = match before.find("Analysis:") {
        Some(a) => before["Analysis:".len() + a..].trim().to_string(),
        None => before.trim().to_string(),
    };
    Ok(CellTypeAnswer {
        analysis,
        cell_type,
    })
}

/// Integer after the final "Score (0-5):" marker, accepted only in 0..=5.
pub fn parse_score(response: &str) -> Result<u8, LlmError> {
    let marker = "Score (0-5):";
    let idx = response
        .rfind(marker)
        .ok_or_else(|| LlmError::ParseFailure(format!("no {marker:?} marker")))?;
    let tail = response[idx + marker.len()..].trim();
    let token = tail.split_whitespace().next().unwrap_or("");
    let digits: String = token
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '-')
        .collect();
    let value: i64 = digits
        .parse()
        .map_err(|_| LlmError::ParseFailure(format!("non-integer score {token:?}")))?;
    if !(0..=5).contains(&value) {
        return Err(LlmError::ScoreOutOfRange(value));
    }
    Ok(value as u8)
}

/// Comma-separated refined annotations; the count must match the number of
/// clusters that were annotated. Names containing internal commas are not
/// representable in this format and surface as a count mismatch.
pub fn parse_refined_annotations(
    response: &str,
    expected_count: usize,
) -> Result<Vec<String>, LlmError> {
    let cleaned = response.trim();
    if cleaned.is_empty() {
        return Err(LlmError::ParseFailure("empty annotation list".into()));
    }
    let names: Vec<String> = cleaned
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if names.is_empty() {
        return Err(LlmError::ParseFailure("empty annotation list".into()));
    }
    if names.len() != expected_count {
        return Err(LlmError::CountMismatch {
            expected: expected_count,
            got: names.len(),
        });
    }
    Ok(names)
}

/// One parsed hypothesis block: overview, statistics, final statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisBlock {
    pub summary: String,
    pub statistical_test: String,
    pub hypothesis: String,
}

/// Splits a proposal response into blocks on `---` lines and parses each
/// block's three mandated sections. A response with fewer blocks than
/// requested is fine; a block missing a section is not.
pub fn parse_hypotheses(response: &str) -> Result<Vec<HypothesisBlock>, LlmError> {
    let lines: Vec<&str> = response.lines().collect();
    let blocks: Vec<String> = lines
        .split(|line| line.trim() == "---")
        .map(|chunk| chunk.join("\n").trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if blocks.is_empty() {
        return Err(LlmError::ParseFailure("no hypothesis blocks".into()));
    }
    blocks.iter().map(|b| parse_block(b)).collect()
}

fn parse_block(block: &str) -> Result<HypothesisBlock, LlmError> {
    let find = |header: &str| -> Result<usize, LlmError> {
        block
            .find(header)
            .ok_or_else(|| LlmError::ParseFailure(header.trim_end_matches(':').to_string()))
    };
    let s = find("Summary:")?;
    let t = find("Statistical Test:")?;
    let h = find("Hypothesis:")?;
    if !(s < t && t < h) {
        return Err(LlmError::ParseFailure("sections out of order".into()));
    }
    let summary = block[s + "Summary:".len()..t].trim().to_string();
    let statistical_test = block[t + "Statistical Test:".len()..h].trim().to_string();
    let hypothesis = block[h + "Hypothesis:".len()..].trim().to_string();
    for (name, part) in [
        ("Summary", &summary),
        ("Statistical Test", &statistical_test),
        ("Hypothesis", &hypothesis),
    ] {
        if part.is_empty() {
            return Err(LlmError::ParseFailure(name.to_string()));
        }
    }
    Ok(HypothesisBlock {
        summary,
        statistical_test,
        hypothesis,
    })
}

/// Numbered-list responses ("1. item") from the planning prompts; the
/// "NONE" sentinel yields an empty list.
pub fn parse_numbered_list(response: &str) -> Result<Vec<String>, LlmError> {
    let cleaned = response.trim();
    if cleaned == "NONE" {
        return Ok(Vec::new());
    }
    let mut items = Vec::new();
    for line in cleaned.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let rest = line
            .split_once('.')
            .filter(|(n, _)| n.chars().all(|c| c.is_ascii_digit()) && !n.is_empty())
            .map(|(_, r)| r.trim());
        match rest {
            Some(item) if !item.is_empty() => items.push(item.to_string()),
            _ => {
                return Err(LlmError::ParseFailure(format!(
                    "line is not a numbered item: {line:?}"
                )))
            }
        }
    }
    if items.is_empty() {
        return Err(LlmError::ParseFailure("empty list".into()));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_type_happy_path() {
        let r = parse_cell_type("Analysis: high CD3 and CD8. Cell Type: T Cells").unwrap();
        assert_eq!(r.cell_type, "T Cells");
        assert_eq!(r.analysis, "high CD3 and CD8.");
    }

    #[test]
    fn cell_type_last_marker_wins() {
        let r = parse_cell_type(
            "Analysis: could be Cell Type: B Cells, revising. Cell Type: Memory B Cells",
        )
        .unwrap();
        assert_eq!(r.cell_type, "Memory B Cells");
    }

    #[test]
    fn cell_type_missing_marker() {
        assert!(parse_cell_type("no marker here").is_err());
    }

    #[test]
    fn score_accepts_exactly_zero_to_five() {
        for s in 0..=5u8 {
            let text = format!("General assessment: fine\n\nScore (0-5): {s}");
            assert_eq!(parse_score(&text).unwrap(), s);
        }
        assert!(matches!(
            parse_score("Score (0-5): 7").unwrap_err(),
            LlmError::ScoreOutOfRange(7)
        ));
        assert!(matches!(
            parse_score("Score (0-5): six").unwrap_err(),
            LlmError::ParseFailure(_)
        ));
        assert!(matches!(
            parse_score("Score (0-5): -1").unwrap_err(),
            LlmError::ScoreOutOfRange(-1)
        ));
    }

    #[test]
    fn refined_annotations_count_checked() {
        let names = parse_refined_annotations("T Cells, T Cells, B Cells", 3).unwrap();
        assert_eq!(names, vec!["T Cells", "T Cells", "B Cells"]);
        assert!(matches!(
            parse_refined_annotations("T Cells, B Cells", 3).unwrap_err(),
            LlmError::CountMismatch { expected: 3, got: 2 }
        ));
        assert!(parse_refined_annotations("  ", 1).is_err());
    }

    #[test]
    fn hypotheses_three_blocks() {
        let text = "Summary: A\nStatistical Test: logFC=1.5, p_adj=0.01\nHypothesis: H1\n---\nSummary: B\nStatistical Test: r=0.9\nHypothesis: H2\n---\nSummary: C\nStatistical Test: p=0.04\nHypothesis: H3";
        let blocks = parse_hypotheses(text).unwrap();
        assert_eq!(blocks.len(), 3);
        assert_eq!(blocks[1].hypothesis, "H2");
    }

    #[test]
    fn hypothesis_missing_section_named() {
        let text = "Summary: A\nStatistical Test: x";
        match parse_hypotheses(text).unwrap_err() {
            LlmError::ParseFailure(s) => assert_eq!(s, "Hypothesis"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numbered_list_parsing() {
        let items = parse_numbered_list("1. Clustering and Annotation\n2. Visualization\n").unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[1], "Visualization");
        assert!(parse_numbered_list("NONE").unwrap().is_empty());
        assert!(parse_numbered_list("not a list").is_err());
    }
}
