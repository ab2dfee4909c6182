// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "camsplat/cameras_io.hpp"
#include "camsplat/config.hpp"
#include "camsplat/diagnostics.hpp"
#include "camsplat/occlusion.hpp"
#include "camsplat/optimize.hpp"
#include "camsplat/ply.hpp"
#include "camsplat/pointcam.hpp"
#include "camsplat/synth.hpp"
#include "camsplat/version.hpp"

namespace camsplat {

// Sub-seeds for the independent random consumers, derived from the run seed
// by fixed offsets so one config key controls the whole run.
inline std::uint64_t seed_for_fps(std::uint64_t seed) { return seed; }
inline std::uint64_t seed_for_init(std::uint64_t seed) { return seed + 1; }
inline std::uint64_t seed_for_sampler(std::uint64_t seed) { return seed + 2; }
inline std::uint64_t seed_for_voronoi(std::uint64_t seed) { return seed + 3; }

constexpr std::size_t kDiagnosticsMcSamples = 20000;
constexpr double kCoverageTau = 0.8;

namespace detail {

inline double lower_median(std::vector<double> values) {
    if (values.empty()) throw std::logic_error("lower_median: empty");
    const std::size_t mid = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    return values[mid];
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (const unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for digest: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline void atomic_write_text(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out << text;
        if (!out) throw IoError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

// Scene-derived values behind the config's auto (0) sentinels.
struct ResolvedScales {
    double median_radius = 0.0;
    double eps_normal = 0.0;
    double eps_self = 0.0;
    double eps_depth = 0.0;
    double lr_position = 0.0;
};

inline ResolvedScales resolve_scales(const OptimizationConfig& cfg,
                                     const std::vector<ProxyPoint>& proxy,
                                     const SceneBounds& bounds) {
    ResolvedScales rs;
    std::vector<double> radii;
    radii.reserve(proxy.size());
    for (const auto& p : proxy) radii.push_back(p.radius);
    rs.median_radius = detail::lower_median(std::move(radii));
    rs.eps_normal = cfg.eps_normal > 0.0 ? cfg.eps_normal : 0.5 * rs.median_radius;
    rs.eps_self = cfg.eps_self > 0.0 ? cfg.eps_self : 2.0 * rs.median_radius;
    rs.eps_depth = 1e-4 * bounds.proxy_radius;
    rs.lr_position = cfg.lr_position > 0.0 ? cfg.lr_position : 0.01 * bounds.proxy_radius;
    return rs;
}

// Everything derived from (proxy, config) that both `optimize` and `eval`
// need: the direction basis, the probes with masks and targets, the bounds
// and the resolved step sizes.
struct ScenePipeline {
    std::vector<ProxyPoint> proxy;
    std::vector<CameraSplat> fixed;
    DirectionBasis basis;
    std::vector<PointCamera> pcs;
    std::vector<double> targets;
    std::vector<std::string> pc_labels;
    SceneBounds bounds;
    ResolvedScales scales;
    OptimizationConfig cfg;
    std::size_t fully_masked = 0;
};

// Group label per point camera: the explicit proxy labels when present,
// otherwise a high/low split of vds at its (lower) median over the probes.
inline std::vector<std::string> label_point_cameras(const std::vector<PointCamera>& pcs,
                                                    const std::vector<std::string>& proxy_labels) {
    std::vector<std::string> labels;
    labels.reserve(pcs.size());
    if (!proxy_labels.empty()) {
        for (const auto& pc : pcs) {
            if (pc.proxy_index >= proxy_labels.size()) {
                throw IoError("labels file shorter than the proxy point list");
            }
            labels.push_back(proxy_labels[pc.proxy_index]);
        }
        return labels;
    }
    std::vector<double> vds;
    vds.reserve(pcs.size());
    for (const auto& pc : pcs) vds.push_back(pc.vds);
    const double median = detail::lower_median(std::move(vds));
    for (const auto& pc : pcs) labels.push_back(pc.vds >= median ? "high" : "low");
    return labels;
}

inline ScenePipeline build_pipeline(std::vector<ProxyPoint> proxy,
                                    std::vector<std::string> proxy_labels,
                                    std::vector<CameraSplat> fixed, OptimizationConfig cfg,
                                    int threads = 1) {
    cfg.validate();
    if (!proxy_labels.empty() && proxy_labels.size() != proxy.size()) {
        throw IoError("labels row count does not match the proxy point count");
    }
    ScenePipeline p;
    p.cfg = cfg;
    p.proxy = std::move(proxy);
    p.fixed = std::move(fixed);
    p.bounds = make_scene_bounds(p.proxy, cfg.boundary[0], cfg.boundary[1]);
    p.scales = resolve_scales(cfg, p.proxy, p.bounds);
    p.basis = fibonacci_directions(static_cast<std::size_t>(cfg.direction_samples));

    const std::size_t n_pc =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.n_point_cameras), p.proxy.size());
    const std::vector<std::size_t> picks =
        farthest_point_sample(p.proxy, n_pc, seed_for_fps(cfg.seed));
    const GridOcclusion occ(p.proxy);
    p.pcs = build_point_cameras(p.proxy, picks, p.basis, p.scales.eps_normal, p.scales.eps_self,
                                occ, threads);
    p.targets.reserve(p.pcs.size());
    const SplatGlobals globals = cfg.globals();
    for (const auto& pc : p.pcs) {
        p.targets.push_back(ground_truth(pc, globals, cfg));
        if (pc.unmasked_count() == 0) ++p.fully_masked;
    }
    p.pc_labels = label_point_cameras(p.pcs, proxy_labels);
    return p;
}

inline OptimizeParams make_optimize_params(const ScenePipeline& p) {
    OptimizeParams params;
    params.loss.globals = p.cfg.globals();
    params.loss.lambda_reg = p.cfg.lambda_reg;
    params.loss.lambda_bound = p.cfg.lambda_bound;
    params.loss.coverage_gamma = p.cfg.coverage_gamma;
    params.loss.eps_depth = p.scales.eps_depth;
    params.loss.bounds = p.bounds;
    params.batch_size = p.cfg.batch_size;
    params.iterations = p.cfg.iterations;
    params.lr_position = p.scales.lr_position;
    params.lr_axis = p.cfg.lr_axis;
    params.seed = seed_for_sampler(p.cfg.seed);
    return params;
}

inline void write_log_csv(const std::string& path, const std::vector<IterationLog>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "iteration,image,directional,boundary,total,mean_coverage,min_coverage,wall_ms\n";
    for (const auto& row : rows) {
        out << row.iteration << "," << detail::format_double(row.losses.image) << ","
            << detail::format_double(row.losses.directional) << ","
            << detail::format_double(row.losses.boundary) << ","
            << detail::format_double(row.losses.total) << ","
            << detail::format_double(row.mean_coverage) << ","
            << detail::format_double(row.min_coverage) << ","
            << detail::format_double(row.wall_ms) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// Iterations at which Voronoi/coverage diagnostics are recorded: 0, every
// T/10 (at least every iteration for tiny T), and T itself.
inline std::set<long> diagnostics_iterations(long total) {
    std::set<long> iters{0, total};
    const long step = std::max<long>(1, total / 10);
    for (long i = step; i < total; i += step) iters.insert(i);
    return iters;
}

struct RunOutputs {
    std::vector<CameraSplat> splats;
    std::vector<IterationLog> log;
    std::vector<GroupVoronoiRow> voronoi_rows;
    std::vector<CoverageRow> coverage_rows;
    std::vector<std::string> warnings;
    double wall_ms_total = 0.0;
};

// One diagnostics snapshot: Voronoi group rows + the coverage ratio.
inline void record_diagnostics(const ScenePipeline& p, const std::vector<CameraSplat>& splats,
                               long iteration, int threads, RunOutputs& out) {
    const SplatGlobals globals = p.cfg.globals();
    const auto cells =
        voronoi_stats_for_scene(p.pcs, splats, globals, p.basis, kDiagnosticsMcSamples,
                                seed_for_voronoi(p.cfg.seed), p.scales.eps_depth, threads);
    std::vector<std::string> omitted;
    const auto rows = aggregate_voronoi_groups(cells, p.pc_labels, iteration, &omitted);
    out.voronoi_rows.insert(out.voronoi_rows.end(), rows.begin(), rows.end());
    for (const auto& g : omitted) {
        out.warnings.push_back("group '" + g + "' has no Voronoi cells at iteration " +
                               std::to_string(iteration) + "; omitted");
    }
    CoverageRow cov;
    cov.iteration = iteration;
    cov.ratio = coverage_ratio(p.pcs, splats, globals, p.basis, p.targets, kCoverageTau,
                               p.scales.eps_depth, threads);
    out.coverage_rows.push_back(cov);
}

inline nlohmann::json make_manifest(const ScenePipeline& p,
                                    const std::vector<std::pair<std::string, std::string>>& inputs,
                                    int threads, double wall_ms_total) {
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = p.cfg.seed;
    manifest["threads"] = threads;
    manifest["config"] = config_to_json(p.cfg);
    nlohmann::json digests = nlohmann::json::object();
    for (const auto& [name, path] : inputs) {
        digests[name] = detail::file_digest(path);
    }
    manifest["inputs"] = digests;
    manifest["wall_ms_total"] = wall_ms_total;
    return manifest;
}

// The full `optimize` run: initialize, iterate with periodic diagnostics and
// optional snapshots, then write transforms.json, log.csv, voronoi.csv,
// coverage.csv and manifest.json into out_dir.
inline RunOutputs run_optimize(const ScenePipeline& p, const std::string& out_dir, int threads,
                               const std::vector<std::pair<std::string, std::string>>& inputs) {
    const auto t_start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);

    std::vector<CameraSplat> initial = initialize_splats(
        p.bounds, static_cast<std::size_t>(p.cfg.n_new_splats), seed_for_init(p.cfg.seed),
        p.fixed);
    const OptimizeParams params = make_optimize_params(p);

    RunOutputs out;
    if (p.fully_masked > 0) {
        out.warnings.push_back(std::to_string(p.fully_masked) +
                               " point camera(s) fully masked; excluded from batching");
    }
    const std::set<long> diag_iters = diagnostics_iterations(params.iterations);
    const SplatGlobals globals = p.cfg.globals();

    auto observer = [&](long iteration, const std::vector<CameraSplat>& splats) {
        if (diag_iters.count(iteration)) {
            record_diagnostics(p, splats, iteration, threads, out);
        }
        if (p.cfg.snapshot_every > 0 && iteration > 0 && iteration % p.cfg.snapshot_every == 0 &&
            iteration != params.iterations) {
            char name[64];
            std::snprintf(name, sizeof(name), "transforms_%06ld.json", iteration);
            export_transforms(splats, globals, out_dir + "/" + name);
        }
    };

    OptimizeResult result = optimize(p.pcs, std::move(initial), p.targets, p.basis, params,
                                     threads, observer);
    out.splats = std::move(result.splats);
    out.log = std::move(result.log);

    export_transforms(out.splats, globals, out_dir + "/transforms.json");
    write_log_csv(out_dir + "/log.csv", out.log);
    write_voronoi_csv(out_dir + "/voronoi.csv", out.voronoi_rows);
    write_coverage_csv(out_dir + "/coverage.csv", out.coverage_rows);

    const auto t_end = std::chrono::steady_clock::now();
    out.wall_ms_total = std::chrono::duration<double, std::milli>(t_end - t_start).count();
    detail::atomic_write_text(out_dir + "/manifest.json",
                              make_manifest(p, inputs, threads, out.wall_ms_total).dump(2) + "\n");
    return out;
}

// The `eval` run: diagnostics of a fixed camera set, no optimization.
inline RunOutputs run_eval(const ScenePipeline& p, const std::vector<CameraSplat>& cameras,
                           const std::string& out_dir, int threads,
                           const std::vector<std::pair<std::string, std::string>>& inputs) {
    const auto t_start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);

    RunOutputs out;
    record_diagnostics(p, cameras, p.cfg.iterations, threads, out);
    out.splats = cameras;

    write_voronoi_csv(out_dir + "/voronoi.csv", out.voronoi_rows);
    write_coverage_csv(out_dir + "/coverage.csv", out.coverage_rows);

    const auto t_end = std::chrono::steady_clock::now();
    out.wall_ms_total = std::chrono::duration<double, std::milli>(t_end - t_start).count();
    detail::atomic_write_text(out_dir + "/manifest.json",
                              make_manifest(p, inputs, threads, out.wall_ms_total).dump(2) + "\n");
    return out;
}

// Accepts either camera-set format: a transforms.json document or a plain
// JSON array of {position, forward} records (loaded frozen).
inline std::vector<CameraSplat> load_camera_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cameras file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cameras: JSON parse error in " + path + ": " + e.what());
    }
    if (doc.is_array()) return load_cameras_json(path);
    return load_transforms_json(path).splats;
}

// Loads proxy.ply plus an optional labels.csv sitting next to it.
struct LoadedScene {
    std::vector<ProxyPoint> proxy;
    std::vector<std::string> labels;
};

inline LoadedScene load_scene(const std::string& proxy_path) {
    LoadedScene scene;
    scene.proxy = load_proxy_ply(proxy_path);
    const std::filesystem::path labels_path =
        std::filesystem::path(proxy_path).parent_path() / "labels.csv";
    if (std::filesystem::exists(labels_path)) {
        scene.labels = load_labels_csv(labels_path.string());
    }
    return scene;
}

} // namespace camsplat
