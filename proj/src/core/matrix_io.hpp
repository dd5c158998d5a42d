#pragma once

#include "fit.hpp"
#include "lexis.hpp"

#include <string>
#include <vector>

namespace lexmrf {

// Canonical CSV matrix layout: first row carries the age axis, first column
// the calendar years; reals are printed with 17 significant digits so the
// round trip is bit-exact. NaN cells are written empty.
void write_matrix_csv(const std::string &path, const LexisLattice &lattice, const Matrix &values);

// Reads the layout back; the lattice is reconstructed from the axis labels.
Matrix read_matrix_csv(const std::string &path, LexisLattice *lattice_out = nullptr);

// Gamma traces, one column per chain and parameter.
void write_traces_csv(const std::string &path, const std::vector<ChainOutput> &chains);

struct HeatmapRange {
    double min = 0.0;
    double max = 0.0;
};

// Binary PGM (P5): finite values scaled into 1..255, gaps rendered black.
HeatmapRange write_heatmap_pgm(const std::string &path, const Matrix &values);

std::string summary_json_text(const FitResult &fit);
void write_summary_json(const std::string &path, const FitResult &fit);

// Writes via a temporary file and rename so readers never see partial
// content.
void write_file_atomic(const std::string &path, const std::string &content);

} // namespace lexmrf
