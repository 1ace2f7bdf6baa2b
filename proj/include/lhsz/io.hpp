// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lhsz/anova.hpp"
#include "lhsz/design.hpp"
#include "lhsz/glm.hpp"
#include "lhsz/harness.hpp"
#include "lhsz/zsolve.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lhsz {

inline constexpr const char* library_version = "0.1.0";

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// Header x1,...,xd then one row per point; LF line endings.
void write_design_csv(const DesignMatrix& design, const std::filesystem::path& path);
/// Reads a CSV written by write_design_csv. Method and seed are not stored
/// in the file; the caller supplies them.
DesignMatrix read_design_csv(const std::filesystem::path& path, Method method = Method::iid, StreamKey seed = {});

/// Header x1,...,xd,z.
void write_dataset_csv(const GlmDataset& dataset, const std::filesystem::path& path);

/// method,n,param,variance,sq_bias,mse,norm_var,failures (param 1-based).
void write_sweep_csv(const ExperimentTable& table, const std::filesystem::path& path);
/// param,p,empirical_q,normal_q (param 1-based).
void write_qq_csv(const QQTable& table, const std::filesystem::path& path);

nlohmann::json to_json(const Eigen::MatrixXd& m);  // row-major nested arrays
nlohmann::json to_json_vector(const Eigen::VectorXd& v);
nlohmann::json to_json(const FitReport& fit);
nlohmann::json to_json(const DecompositionReport& rep);
nlohmann::json to_json(const OracleResult& oracle);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
    std::string command;
    std::vector<std::string> arguments;
    std::uint64_t seed = 0;
    std::chrono::system_clock::time_point started;
    std::chrono::system_clock::time_point finished;
    std::vector<std::filesystem::path> outputs;
};

/// Appends the run to `<dir>/manifest.json` and refreshes the digest of every
/// file the manifest lists, so digests always describe the files on disk.
void record_manifest(const std::filesystem::path& dir, const RunManifest& run);

}  // namespace lhsz
