//! Rendering of analysis results in two formats: `text` for reading and
//! `kv` (one `key = value` pair per line) for scripting. Both are pure
//! functions of the analysis, so repeated runs produce identical bytes.

use std::fmt::Write;

use workbench_core::ratmath::{RMatrix, RVector};
use workbench_core::workload::Analysis;

use crate::netfile::NetworkFile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Kv,
}

fn push_matrix_kv(out: &mut String, prefix: &str, matrix: &RMatrix) {
    for i in 0..matrix.rows() {
        let _ = writeln!(out, "{prefix}.row.{} = {}", i + 1, matrix.row_vec(i).display_row());
    }
}

fn push_matrix_text(out: &mut String, label: &str, matrix: &RMatrix) {
    let _ = writeln!(out, "  {label}:");
    for i in 0..matrix.rows() {
        let _ = writeln!(out, "    {}", matrix.row_vec(i).display_row());
    }
}

fn counted(count: usize, singular: &str, plural: &str) -> String {
    if count == 1 {
        format!("{count} {singular}")
    } else {
        format!("{count} {plural}")
    }
}

fn indices_one_based(list: &[usize]) -> String {
    let parts: Vec<String> = list.iter().map(|j| (j + 1).to_string()).collect();
    parts.join(" ")
}

/// Servers with positive weight in one pooling row, one-based.
fn pooled_servers(row: &RVector) -> Vec<usize> {
    (0..row.len())
        .filter(|&k| row[k].is_positive())
        .map(|k| k + 1)
        .collect()
}

pub fn render_analysis(file: &NetworkFile, analysis: &Analysis, format: Format) -> String {
    match format {
        Format::Kv => render_kv(file, analysis),
        Format::Text => render_text(file, analysis),
    }
}

fn render_kv(file: &NetworkFile, analysis: &Analysis) -> String {
    let mut out = String::new();
    let net = &file.net;
    let _ = writeln!(out, "network.name = {}", file.name);
    let _ = writeln!(out, "network.materials = {}", net.materials());
    let _ = writeln!(out, "network.servers = {}", net.servers());
    let _ = writeln!(out, "network.activities = {}", net.activities());

    let plan = &analysis.plan;
    let _ = writeln!(out, "plan.utilization = {}", plan.utilization);
    let _ = writeln!(out, "plan.rates = {}", plan.rates.display_row());
    let _ = writeln!(out, "plan.basic = {}", indices_one_based(&plan.basic));

    let report = &analysis.report;
    let _ = writeln!(out, "assumptions.utilization_is_one = {}", report.rho_is_one);
    let _ = writeln!(out, "assumptions.full_utilization = {}", report.full_utilization);
    let _ = writeln!(out, "assumptions.plan_unique = {}", report.primal_unique);
    let _ = writeln!(out, "assumptions.satisfied = {}", report.satisfied);
    for (idx, diagnostic) in report.diagnostics.iter().enumerate() {
        let _ = writeln!(out, "assumptions.diagnostic.{} = {}", idx + 1, diagnostic);
    }

    let cuts = &analysis.cuts;
    let _ = writeln!(out, "vertices.count = {}", cuts.count());
    let _ = writeln!(out, "vertices.binding = {}", cuts.binding_count);
    let _ = writeln!(out, "vertices.bounded = {}", cuts.bounded);
    if let Some(direction) = &cuts.recession_witness {
        let _ = writeln!(out, "vertices.recession = {}", direction.display_row());
    }
    for (idx, vertex) in cuts.vertices.iter().enumerate() {
        let n = idx + 1;
        let _ = writeln!(out, "vertex.{n}.materials = {}", vertex.material_weights.display_row());
        let _ = writeln!(out, "vertex.{n}.servers = {}", vertex.server_weights.display_row());
        let _ = writeln!(out, "vertex.{n}.binding = {}", vertex.binding);
    }

    if let Some(rep) = &analysis.representation {
        let _ = writeln!(out, "workload.dim = {}", rep.dim());
        let _ = writeln!(out, "workload.basic_count = {}", rep.basic_count());
        let _ = writeln!(out, "workload.augmented_rows = {}", rep.augmented_rows());
        let _ = writeln!(out, "workload.selected = {}", indices_one_based(&rep.selected));
        let _ = writeln!(out, "workload.full_rank_basic_flow = {}", rep.assumption3_holds());
        push_matrix_kv(&mut out, "workload", &rep.workload);
        push_matrix_kv(&mut out, "pooling", &rep.pooling);
        push_matrix_kv(&mut out, "augmented", &rep.augmented_capacity);
        push_matrix_kv(&mut out, "idleness_cost", &rep.control_cost);
        if rep.nonbasic_cost.cols() > 0 {
            push_matrix_kv(&mut out, "penalty", &rep.nonbasic_cost);
        }
        if let Some(factored) = &analysis.factored {
            push_matrix_kv(&mut out, "factored", factored);
        }
        let _ = writeln!(
            out,
            "checks.nonnegative = {}",
            workbench_core::workload::check_nonnegativity(rep)
        );
        let _ = writeln!(
            out,
            "checks.basis = {}",
            workbench_core::workload::check_basis_property(net, rep)
        );
    }
    out
}

fn render_text(file: &NetworkFile, analysis: &Analysis) -> String {
    let mut out = String::new();
    let net = &file.net;
    let _ = writeln!(
        out,
        "network {}: {}, {}, {}",
        file.name,
        counted(net.materials(), "material", "materials"),
        counted(net.servers(), "server", "servers"),
        counted(net.activities(), "activity", "activities"),
    );

    let plan = &analysis.plan;
    let _ = writeln!(out, "\nstatic plan");
    let _ = writeln!(out, "  utilization: {}", plan.utilization);
    let _ = writeln!(out, "  rates: {}", plan.rates.display_row());
    let _ = writeln!(out, "  basic activities: {}", indices_one_based(&plan.basic));

    let report = &analysis.report;
    if report.satisfied {
        let _ = writeln!(out, "\nheavy-traffic conditions: satisfied");
    } else {
        let _ = writeln!(out, "\nheavy-traffic conditions: NOT satisfied");
        for diagnostic in &report.diagnostics {
            let _ = writeln!(out, "  - {diagnostic}");
        }
    }

    let cuts = &analysis.cuts;
    let boundedness = if cuts.bounded { "bounded" } else { "unbounded" };
    let _ = writeln!(
        out,
        "\ndual polyhedron: {} ({} binding), {boundedness}",
        counted(cuts.count(), "vertex", "vertices"),
        cuts.binding_count
    );
    if let Some(direction) = &cuts.recession_witness {
        let _ = writeln!(out, "  recession direction: {}", direction.display_row());
    }
    for (idx, vertex) in cuts.vertices.iter().enumerate() {
        let marker = if vertex.binding { " (binding)" } else { "" };
        let _ = writeln!(
            out,
            "  vertex {}{marker}: materials {} | servers {}",
            idx + 1,
            vertex.material_weights.display_row(),
            vertex.server_weights.display_row()
        );
    }

    if let Some(rep) = &analysis.representation {
        let _ = writeln!(out, "\nworkload representation: dimension {}", rep.dim());
        let _ = writeln!(out, "  rows from vertices: {}", indices_one_based(&rep.selected));
        let _ = writeln!(
            out,
            "  basic activities: {} of {}; augmented capacity rows: {}",
            rep.basic_count(),
            net.activities(),
            rep.augmented_rows()
        );
        let full_rank = if rep.assumption3_holds() { "yes" } else { "no" };
        let _ = writeln!(out, "  full-rank basic flow: {full_rank}");
        push_matrix_text(&mut out, "workload matrix", &rep.workload);
        push_matrix_text(&mut out, "server pooling matrix", &rep.pooling);
        push_matrix_text(&mut out, "augmented capacity matrix", &rep.augmented_capacity);
        push_matrix_text(&mut out, "idleness cost matrix", &rep.control_cost);
        if rep.nonbasic_cost.cols() > 0 {
            push_matrix_text(&mut out, "nonbasic penalty matrix", &rep.nonbasic_cost);
        }
        if let Some(factored) = &analysis.factored {
            push_matrix_text(
                &mut out,
                "factored workload (pooling x basic capacity x right inverse)",
                factored,
            );
        }
        let nonneg = if workbench_core::workload::check_nonnegativity(rep) {
            "yes"
        } else {
            "no"
        };
        let _ = writeln!(out, "  workload matrix nonnegative: {nonneg}");
        let basis = if workbench_core::workload::check_basis_property(net, rep) {
            "holds"
        } else {
            "FAILS"
        };
        let _ = writeln!(out, "  basis property: {basis}");
        for i in 0..rep.pooling.rows() {
            let row = rep.pooling.row_vec(i);
            let pooled = pooled_servers(&row);
            if pooled.len() > 1 {
                let names: Vec<String> = pooled.iter().map(|k| k.to_string()).collect();
                let _ = writeln!(
                    out,
                    "  workload row {}: servers {} function as a single capacity pool (weights {})",
                    i + 1,
                    names.join(", "),
                    row.display_row()
                );
            }
        }
    }
    out
}
