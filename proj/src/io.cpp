// SPDX-License-Identifier: Apache-2.0
#include "lhsz/io.hpp"

#include "lhsz/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

namespace lhsz {

namespace fs = std::filesystem;

std::string format_double(double v) {
    std::array<char, 40> buf{};
    const int len = std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return std::string(buf.data(), static_cast<std::size_t>(len));
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error(ErrorKind::io_error, "failed writing '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void write_design_csv(const DesignMatrix& design, const fs::path& path) {
    std::string s;
    for (std::size_t j = 0; j < design.d(); ++j) s += (j ? ",x" : "x") + std::to_string(j + 1);
    s += '\n';
    for (std::size_t i = 0; i < design.n(); ++i) {
        for (std::size_t j = 0; j < design.d(); ++j) {
            if (j) s += ',';
            s += format_double(design(i, j));
        }
        s += '\n';
    }
    write_text(path, s);
}

DesignMatrix read_design_csv(const fs::path& path, Method method, StreamKey seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::io_error, "'" + path.string() + "' is empty");
    const std::size_t d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    std::vector<double> values;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc()) {
                throw Error(ErrorKind::io_error, "malformed number on data row " + std::to_string(rows + 1));
            }
            values.push_back(v);
            p = res.ptr;
            if (j + 1 < d) {
                if (p == end || *p != ',') throw Error(ErrorKind::io_error, "too few columns on data row " + std::to_string(rows + 1));
                ++p;
            }
        }
        if (p != end) throw Error(ErrorKind::io_error, "too many columns on data row " + std::to_string(rows + 1));
        ++rows;
    }
    RowMatrix pts(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
    std::copy(values.begin(), values.end(), pts.data());
    return DesignMatrix(std::move(pts), method, seed);
}

void write_dataset_csv(const GlmDataset& dataset, const fs::path& path) {
    const auto& design = dataset.design;
    std::string s;
    for (std::size_t j = 0; j < design.d(); ++j) s += "x" + std::to_string(j + 1) + ",";
    s += "z\n";
    for (std::size_t i = 0; i < design.n(); ++i) {
        for (std::size_t j = 0; j < design.d(); ++j) s += format_double(design(i, j)) + ",";
        s += format_double(dataset.responses[i]) + "\n";
    }
    write_text(path, s);
}

void write_sweep_csv(const ExperimentTable& table, const fs::path& path) {
    std::string s = "method,n,param,variance,sq_bias,mse,norm_var,failures\n";
    for (const auto& r : table.rows) {
        s += std::string(to_string(r.method)) + "," + std::to_string(r.n) + "," + std::to_string(r.param + 1) + "," +
             format_double(r.variance) + "," + format_double(r.squared_bias) + "," + format_double(r.mse) + "," +
             format_double(r.normalized_variance) + "," + std::to_string(r.failures) + "\n";
    }
    write_text(path, s);
}

void write_qq_csv(const QQTable& table, const fs::path& path) {
    std::string s = "param,p,empirical_q,normal_q\n";
    for (const auto& c : table.columns) {
        for (std::size_t i = 0; i < c.empirical.size(); ++i) {
            s += std::to_string(c.param + 1) + "," + format_double(c.probabilities[i]) + "," +
                 format_double(c.empirical[i]) + "," + format_double(c.normal_quantiles[i]) + "\n";
        }
    }
    write_text(path, s);
}

nlohmann::json to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json to_json_vector(const Eigen::VectorXd& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json to_json(const FitReport& fit) {
    nlohmann::json j;
    j["theta_hat"] = to_json_vector(fit.theta_hat);
    j["iterations"] = fit.iterations;
    j["residual_norm"] = fit.residual_norm;
    j["residual_trace"] = fit.residual_trace;
    j["A_hat"] = to_json(fit.A_hat);
    j["B_iid"] = to_json(fit.B_iid);
    j["sandwich_iid"] = to_json(fit.sandwich_iid);
    j["sandwich_lhs"] = fit.sandwich_lhs ? to_json(*fit.sandwich_lhs) : nlohmann::json(nullptr);
    j["converged"] = fit.converged;
    j["design_method"] = std::string(to_string(fit.design_method));
    j["n"] = fit.n;
    return j;
}

nlohmann::json to_json(const DecompositionReport& rep) {
    nlohmann::json j;
    j["G"] = to_json_vector(rep.G);
    j["G_standard_error"] = to_json_vector(rep.G_standard_error);
    j["R"] = to_json(rep.R);
    j["full_cov"] = to_json(rep.full_cov);
    j["residual"] = to_json(rep.residual);
    j["residual_standard_errors"] = to_json(rep.residual_standard_errors);
    j["standard_errors"] = to_json(rep.standard_errors);
    nlohmann::json A = nlohmann::json::array();
    for (const auto& a : rep.main_effect_cov) A.push_back(to_json(a));
    j["main_effect_cov"] = std::move(A);
    j["min_eigenvalue"] = rep.min_eigenvalue;
    j["psd_tolerance"] = rep.psd_tolerance;
    j["mc_sizes"] = {{"outer", rep.mc_sizes.outer}, {"bins", rep.mc_sizes.bins}, {"inner", rep.mc_sizes.inner}};
    return j;
}

nlohmann::json to_json(const OracleResult& oracle) {
    nlohmann::json j;
    j["normalized_variances"] = to_json_vector(oracle.normalized_variances);
    j["lhs_covariance"] = to_json(oracle.lhs_covariance);
    j["iid_covariance"] = to_json(oracle.iid_covariance);
    j["A"] = to_json(oracle.A);
    j["R"] = to_json(oracle.R);
    j["B"] = to_json(oracle.B);
    j["n_oracle"] = oracle.n_oracle;
    j["decomposition"] = to_json(oracle.decomposition);
    return j;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io_error, "cannot open '" + path.string() + "' for hashing");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

}  // namespace

void record_manifest(const fs::path& dir, const RunManifest& run) {
    const fs::path target = dir.empty() ? fs::path(".") : dir;
    fs::create_directories(target);
    const fs::path path = target / "manifest.json";
    nlohmann::json m;
    if (fs::exists(path)) {
        std::ifstream in(path);
        m = nlohmann::json::parse(in, nullptr, false);
        if (m.is_discarded() || !m.is_object()) m = nlohmann::json::object();
    }
    m["tool"] = "lhsz";
    m["library_version"] = library_version;
    if (!m.contains("runs")) m["runs"] = nlohmann::json::array();
    if (!m.contains("files")) m["files"] = nlohmann::json::object();

    nlohmann::json entry;
    entry["command"] = run.command;
    entry["arguments"] = run.arguments;
    entry["seed"] = run.seed;
    entry["library_version"] = library_version;
    entry["started"] = iso8601(run.started);
    entry["finished"] = iso8601(run.finished);
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& p : run.outputs) {
        const std::string name = p.filename().string();
        outputs[name] = sha256_file(p);
        m["files"][name] = nullptr;
    }
    entry["outputs"] = std::move(outputs);
    m["runs"].push_back(std::move(entry));

    nlohmann::json files = nlohmann::json::object();
    for (const auto& [name, _] : m["files"].items()) {
        const fs::path f = target / name;
        if (fs::exists(f)) files[name] = sha256_file(f);
    }
    m["files"] = std::move(files);
    write_json(path, m);
}

}  // namespace lhsz
