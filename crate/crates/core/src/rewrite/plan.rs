use std::fmt;

use crate::config::{MemoryGeometry, MppSoCConfig, Neighborhood};

use super::RewriteAction;

/// The five files of the template library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateKind {
    UserLibrary,
    PackMppsoc,
    MappingMppsoc,
    MemAcu,
    MemPe,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 5] = [
        TemplateKind::UserLibrary,
        TemplateKind::PackMppsoc,
        TemplateKind::MappingMppsoc,
        TemplateKind::MemAcu,
        TemplateKind::MemPe,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            TemplateKind::UserLibrary => "user_library.vhd",
            TemplateKind::PackMppsoc => "pack_mppsoc.vhd",
            TemplateKind::MappingMppsoc => "mapping_mppsoc.vhd",
            TemplateKind::MemAcu => "mem_acu.vhd",
            TemplateKind::MemPe => "mem_pe.vhd",
        }
    }

    pub(crate) fn bundled_text(self) -> &'static str {
        match self {
            TemplateKind::UserLibrary => include_str!("../../templates/user_library.vhd"),
            TemplateKind::PackMppsoc => include_str!("../../templates/pack_mppsoc.vhd"),
            TemplateKind::MappingMppsoc => include_str!("../../templates/mapping_mppsoc.vhd"),
            TemplateKind::MemAcu => include_str!("../../templates/mem_acu.vhd"),
            TemplateKind::MemPe => include_str!("../../templates/mem_pe.vhd"),
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedAction {
    pub file: TemplateKind,
    pub action: RewriteAction,
}

/// VHDL literal of the `topology` constant.
pub fn topology_literal(kind: Option<Neighborhood>) -> &'static str {
    match kind {
        None => "NONE",
        Some(Neighborhood::Linear) => "LINEAR",
        Some(Neighborhood::Ring) => "RING",
        Some(Neighborhood::Mesh2D) => "MESH",
        Some(Neighborhood::Torus2D) => "TORUS",
        Some(Neighborhood::Xnet) => "XNET",
    }
}

fn memory_actions(
    file: TemplateKind,
    geometry: MemoryGeometry,
    init: Option<&str>,
) -> Vec<PlannedAction> {
    let mut actions = Vec::with_capacity(4);
    if let Some(name) = init {
        actions.push(RewriteAction::association(
            "init_file",
            format!("\"{name}\""),
        ));
    }
    actions.push(RewriteAction::association(
        "numwords_a",
        geometry.words.to_string(),
    ));
    actions.push(RewriteAction::association(
        "widthad_a",
        geometry.addr_width.to_string(),
    ));
    actions.push(RewriteAction::vector_width("address", geometry.addr_width));
    actions
        .into_iter()
        .map(|a| PlannedAction {
            file,
            action: a.expect("planned values are single tokens"),
        })
        .collect()
}

/// Maps a validated configuration onto template rewrites.
///
/// `pack_mppsoc` gets the grid, the two memory address widths and, when a
/// neighbourhood network is selected, the topology. Each memory gets its word
/// count, address width and, when `mem_init` is set, its init file.
/// `user_library` and `mapping_mppsoc` are copied unchanged.
pub fn plan_actions(config: &MppSoCConfig) -> Vec<PlannedAction> {
    let acu = config.acu_geometry();
    let pe = config.pe_geometry();
    let pack = TemplateKind::PackMppsoc;

    let mut constants = vec![
        RewriteAction::constant("sl_nb_rows", config.rows.to_string()),
        RewriteAction::constant("sl_nb_column", config.cols.to_string()),
        RewriteAction::constant("MS_add_width", acu.addr_width.to_string()),
        RewriteAction::constant("SL_add_width", pe.addr_width.to_string()),
    ];
    if config.neighborhood.is_some() {
        constants.push(RewriteAction::constant(
            "topology",
            topology_literal(config.neighborhood),
        ));
    }
    let mut plan: Vec<PlannedAction> = constants
        .into_iter()
        .map(|a| PlannedAction {
            file: pack,
            action: a.expect("planned values are single tokens"),
        })
        .collect();

    let init = config
        .mem_init
        .as_ref()
        .map(|p| p.to_string_lossy().into_owned());
    plan.extend(memory_actions(TemplateKind::MemAcu, acu, init.as_deref()));
    plan.extend(memory_actions(TemplateKind::MemPe, pe, init.as_deref()));
    plan
}
