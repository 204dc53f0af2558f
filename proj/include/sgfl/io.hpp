#pragma once

#include "sgfl/simulate.hpp"
#include "sgfl/types.hpp"

#include <filesystem>
#include <string>

namespace sgfl {

/// Dataset container: manifest.json {T, d, p, layout:"txy",
/// mode:"design"|"response"} plus little-endian float64 blobs X.bin
/// (T*d*p values, t-major then row-major within each X_t) and y.bin
/// (T*d values, t-major). Response-mode containers additionally record m
/// and keep the Kronecker structure on load.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// CSV ingestion for the response layout: columns t, y_1..y_d, x_1..x_m,
/// one row per time point; the result is Kronecker-lifted.
Dataset read_response_csv(const std::filesystem::path& file, int d);

/// Chain-wise coefficient CSV: header then one row per chain,
/// chain_start, chain_end (1-based, inclusive), then p coefficients.
/// dense = true expands to one row per time point: t, then p coefficients.
void write_solution_csv(const Solution& sol, const std::filesystem::path& file,
                        bool dense = false);
Solution read_solution_csv(const std::filesystem::path& file);

/// Segmentation JSON: {"T":..., "starts":[...], "change_points":[...]},
/// 1-based indices.
void write_segmentation_json(const Segmentation& seg, const std::filesystem::path& file);
Segmentation read_segmentation_json(const std::filesystem::path& file);

void write_report_json(const SolverReport& report, double objective,
                       const std::filesystem::path& file);

/// Flat metrics record mirroring the evaluation columns:
/// {ncp, hausdorff, tpr, ppv, sparsity, r2}.
void write_metrics_json(const Metrics& metrics, const std::filesystem::path& file);

Vec read_weights_file(const std::filesystem::path& file, int T);

}  // namespace sgfl
