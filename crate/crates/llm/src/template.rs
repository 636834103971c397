//! Prompt templates. Bodies live in `templates/*.txt`; each template
//! declares named slots and the exact marker text they replace, so
//! everything outside the marker spans stays byte-identical to the stored
//! body when rendered.

use std::collections::BTreeMap;

use crate::error::LlmError;

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub id: &'static str,
    pub body: &'static str,
    /// (slot name, marker text in the body).
    pub slots: &'static [(&'static str, &'static str)],
}

macro_rules! template {
    ($id:literal, $file:literal, $slots:expr) => {
        PromptTemplate {
            id: $id,
            body: include_str!(concat!("../templates/", $file)),
            slots: $slots,
        }
    };
}

/// Every stored template. The two annotation prompts and the five
/// evaluation prompts are fixed transcriptions; the rest are house-written
/// planning prompts (non-verbatim).
pub const TEMPLATES: &[PromptTemplate] = &[
    template!(
        "cell_type_annotation",
        "cell_type_annotation.txt",
        &[("tissue", "<tissue name>"), ("markers", "<markers>")]
    ),
    template!(
        "annotation_refinement",
        "annotation_refinement.txt",
        &[
            ("count", "<cell type number>"),
            ("annotations", "<original cell type annotations>")
        ]
    ),
    template!(
        "eval_paper_alignment",
        "eval_paper_alignment.txt",
        &[
            ("conclusion", "[Insert AI conclusion here]"),
            ("paper_conclusion", "[Insert original conclusion here]")
        ]
    ),
    template!(
        "eval_literature_alignment",
        "eval_literature_alignment.txt",
        &[
            ("articles", "[Insert relevant PubMed article information here]"),
            ("conclusion", "[Insert AI conclusion here]")
        ]
    ),
    template!(
        "eval_literature_novelty",
        "eval_literature_novelty.txt",
        &[
            ("articles", "[Insert relevant PubMed article information here]"),
            ("conclusion", "[Insert AI conclusion here]")
        ]
    ),
    template!(
        "eval_logical_coherence",
        "eval_logical_coherence.txt",
        &[("conclusion", "[Insert AI conclusion here]")]
    ),
    template!(
        "eval_evaluability",
        "eval_evaluability.txt",
        &[("conclusion", "[Insert AI conclusion here]")]
    ),
    template!(
        "data_description",
        "data_description.txt",
        &[("summary", "<structured summary>")]
    ),
    template!(
        "objective_planning",
        "objective_planning.txt",
        &[
            ("description", "<data description>"),
            ("max_objectives", "<max objectives>")
        ]
    ),
    template!(
        "workflow_planning",
        "workflow_planning.txt",
        &[
            ("objective", "<objective>"),
            ("description", "<data description>"),
            ("catalog", "<workflow catalog>"),
            ("max_workflows", "<max workflows>")
        ]
    ),
    template!(
        "parameter_selection",
        "parameter_selection.txt",
        &[
            ("workflow", "<workflow name>"),
            ("workflow_description", "<workflow description>"),
            ("schema", "<parameter schema>"),
            ("objective", "<objective>"),
            ("description", "<data description>")
        ]
    ),
    template!(
        "result_interpretation",
        "result_interpretation.txt",
        &[
            ("objective", "<objective>"),
            ("workflow", "<workflow name>"),
            ("summary", "<numeric summary>")
        ]
    ),
    template!(
        "workflow_update",
        "workflow_update.txt",
        &[
            ("objective", "<objective>"),
            ("interpretation", "<latest interpretation>"),
            ("plan", "<remaining plan>"),
            ("catalog", "<workflow catalog>")
        ]
    ),
    template!(
        "objective_update",
        "objective_update.txt",
        &[
            ("objective", "<objective>"),
            ("findings", "<findings>"),
            ("remaining", "<remaining objectives>")
        ]
    ),
    template!(
        "hypothesis_proposal",
        "hypothesis_proposal.txt",
        &[
            ("objective", "<objective>"),
            ("history", "<analysis history>"),
            ("max_hypotheses", "<max hypotheses>")
        ]
    ),
    template!(
        "refinement_target",
        "refinement_target.txt",
        &[("objective", "<objective>"), ("summary", "<cluster summary>")]
    ),
    template!(
        "query_generation",
        "query_generation.txt",
        &[("hypothesis", "<hypothesis>")]
    ),
    template!(
        "protein_selection",
        "protein_selection.txt",
        &[
            ("objective", "<objective>"),
            ("proteins", "<protein list>"),
            ("max_proteins", "<max proteins>")
        ]
    ),
];

pub fn template(id: &str) -> Result<&'static PromptTemplate, LlmError> {
    TEMPLATES
        .iter()
        .find(|t| t.id == id)
        .ok_or_else(|| LlmError::UnknownTemplate(id.to_string()))
}

/// Renders a template: every declared slot's marker is substituted with its
/// binding, everything else stays byte-identical to the stored body.
pub fn render(id: &str, bindings: &BTreeMap<String, String>) -> Result<String, LlmError> {
    let t = template(id)?;
    let mut out = t.body.to_string();
    for (name, marker) in t.slots {
        let value = bindings.get(*name).ok_or_else(|| LlmError::MissingSlot {
            template: id.to_string(),
            slot: (*name).to_string(),
        })?;
        out = out.replace(marker, value);
    }
    Ok(out)
}

/// Convenience for building bindings from pairs.
pub fn bindings(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
