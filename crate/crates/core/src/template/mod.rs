//! Template mining: turn free-text messages into event classes made of
//! constant words and variable slots.

mod distance;
mod miner;
mod tokenize;
mod vartype;

use std::collections::HashSet;

use serde::Serialize;

pub use distance::{edit_distance, merge_templates, slot_distance, token_distance};
pub use miner::{match_template, mine_templates, MinerConfig, Slot, Template, TemplateCatalog};
pub use tokenize::{
    apply_masks, parse_stage_list, render, skeleton, tokenize, unique_skeleton_count, MaskKind, MaskStage, Token,
    TokenSeq, PLACEHOLDER, WILDCARD,
};
pub use vartype::{infer_type, type_variables, value_matches, SlotType, VariableType};

use crate::error::Result;
use crate::store::EventStore;

/// One point on a refinement curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefinementStep {
    pub label: String,
    /// Templates plus distinct outlier skeletons.
    pub classes: usize,
    pub templates: usize,
    pub outliers: usize,
}

/// Distinct skeletons among a catalog's outlier events.
pub fn outlier_skeletons(catalog: &TemplateCatalog, store: &EventStore, stages: &[MaskStage]) -> usize {
    let outliers: HashSet<u64> = catalog.outliers().iter().copied().collect();
    store
        .events()
        .iter()
        .filter(|e| outliers.contains(&e.seq))
        .map(|e| skeleton(&e.message, stages))
        .collect::<HashSet<_>>()
        .len()
}

fn step(label: String, catalog: &TemplateCatalog, store: &EventStore, stages: &[MaskStage]) -> RefinementStep {
    RefinementStep {
        label,
        classes: catalog.len() + outlier_skeletons(catalog, store, stages),
        templates: catalog.len(),
        outliers: catalog.outlier_count(),
    }
}

/// Mines once per stage list, then merges the last catalog at
/// `cfg.merge_distance`. Returns one step per mining run plus the merge.
pub fn refinement_curve(
    store: &EventStore,
    cfg: &MinerConfig,
    stage_lists: &[(String, Vec<MaskStage>)],
) -> Result<(Vec<RefinementStep>, TemplateCatalog)> {
    let mut steps = Vec::new();
    let mut last: Option<(TemplateCatalog, &[MaskStage])> = None;
    for (label, stages) in stage_lists {
        let run_cfg = MinerConfig {
            stages: stages.clone(),
            ..cfg.clone()
        };
        let catalog = mine_templates(store, &run_cfg)?;
        steps.push(step(format!("templates[{label}]"), &catalog, store, stages));
        last = Some((catalog, stages));
    }
    let Some((catalog, stages)) = last else {
        return Ok((steps, TemplateCatalog::empty()));
    };
    let merged = merge_templates(&catalog, cfg.merge_distance);
    steps.push(step(
        format!("merged[d={}]", cfg.merge_distance),
        &merged,
        store,
        stages,
    ));
    Ok((steps, merged))
}
