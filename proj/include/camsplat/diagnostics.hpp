// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "camsplat/directions.hpp"
#include "camsplat/errors.hpp"
#include "camsplat/losses.hpp"
#include "camsplat/parallel.hpp"
#include "camsplat/render.hpp"
#include "camsplat/rng.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

// Monte-Carlo spherical Voronoi areas of the visible splat directions seen
// from one point camera.
struct VoronoiCells {
    std::vector<std::size_t> splat_indices; // visible splats, ascending
    std::vector<double> areas;              // steradians, aligned with splat_indices
    double mean_area = 0.0;
    double std_area = 0.0; // population standard deviation over this camera's cells
    bool empty = true;     // no visible splat
};

// Uniform sphere samples are assigned to the nearest visible-splat direction
// (ties to the lowest splat index); samples whose nearest direction-basis
// sample is masked are discarded. Each cell's area is its share of the full
// sphere, count / k_mc * 4*pi, so the areas sum to the unmasked solid angle.
// A splat only seeds a cell if the camera actually observes the point: it
// must pass the field-of-view gate and sit in an unmasked direction, so
// cameras behind the proxy surface do not count as samples of this point.
inline VoronoiCells voronoi_cell_areas(const PointCamera& pc,
                                       const std::vector<CameraSplat>& splats,
                                       const SplatGlobals& globals, const DirectionBasis& basis,
                                       std::size_t k_mc, std::uint64_t seed,
                                       double eps_depth = 0.0) {
    VoronoiCells cells;
    std::vector<Vec3> dirs; // u_j per visible splat
    for (std::size_t j = 0; j < splats.size(); ++j) {
        const Vec3 rel = splats[j].center - pc.position;
        const double depth = rel.norm();
        if (!(depth > eps_depth)) continue;
        if (!visibility(splats[j], pc.position, globals)) continue;
        const Vec3 u = rel / depth;
        if (!pc.occlusion_mask[nearest_direction(basis, UnitVec3::unchecked(u))]) continue;
        cells.splat_indices.push_back(j);
        dirs.push_back(u);
    }
    if (dirs.empty()) return cells;
    cells.empty = false;

    std::vector<std::size_t> counts(dirs.size(), 0);
    Rng rng(seed);
    for (std::size_t s = 0; s < k_mc; ++s) {
        const UnitVec3 sample = rng.sphere_direction();
        if (!pc.occlusion_mask[nearest_direction(basis, sample)]) continue;
        std::size_t best = 0;
        double best_dot = dot(dirs[0], sample.vec());
        for (std::size_t j = 1; j < dirs.size(); ++j) {
            const double d = dot(dirs[j], sample.vec());
            if (d > best_dot) {
                best_dot = d;
                best = j;
            }
        }
        ++counts[best];
    }
    cells.areas.resize(dirs.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < dirs.size(); ++j) {
        cells.areas[j] = static_cast<double>(counts[j]) / static_cast<double>(k_mc) * 4.0 * kPi;
        sum += cells.areas[j];
    }
    cells.mean_area = sum / static_cast<double>(dirs.size());
    double var = 0.0;
    for (const double a : cells.areas) {
        var += (a - cells.mean_area) * (a - cells.mean_area);
    }
    cells.std_area = std::sqrt(var / static_cast<double>(dirs.size()));
    return cells;
}

// Per-point-camera cells for a whole scene; camera i uses seed ^ i so the
// estimates are independent and order-insensitive.
inline std::vector<VoronoiCells> voronoi_stats_for_scene(const std::vector<PointCamera>& pcs,
                                                         const std::vector<CameraSplat>& splats,
                                                         const SplatGlobals& globals,
                                                         const DirectionBasis& basis,
                                                         std::size_t k_mc, std::uint64_t seed,
                                                         double eps_depth, int threads = 1) {
    std::vector<VoronoiCells> all(pcs.size());
    parallel_for(pcs.size(), threads, [&](std::size_t i) {
        all[i] = voronoi_cell_areas(pcs[i], splats, globals, basis, k_mc,
                                    seed ^ static_cast<std::uint64_t>(i), eps_depth);
    });
    return all;
}

// Fraction of point cameras whose achieved coverage reaches tau.
inline double coverage_ratio(const std::vector<PointCamera>& pcs,
                             const std::vector<CameraSplat>& splats, const SplatGlobals& globals,
                             const DirectionBasis& basis, const std::vector<double>& targets,
                             double tau, double eps_depth, int threads = 1) {
    if (pcs.empty()) throw std::logic_error("coverage_ratio: no point cameras");
    std::vector<double> covs(pcs.size());
    parallel_for(pcs.size(), threads, [&](std::size_t i) {
        const RenderedImage image = render(pcs[i], splats, globals, basis, eps_depth);
        covs[i] = coverage(image, targets[i], pcs[i]);
    });
    std::size_t hit = 0;
    for (const double c : covs) {
        if (c >= tau) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(pcs.size());
}

// One voronoi.csv row: cells of all point cameras sharing a label, pooled,
// then mean and population std over the pooled cells.
struct GroupVoronoiRow {
    long iteration = 0;
    std::string group;
    double mean_area = 0.0;
    double std_area = 0.0;
};

struct CoverageRow {
    long iteration = 0;
    double ratio = 0.0;
};

// Pools cell areas by group label. Labels with no cells at all (every member
// camera saw zero splats) are omitted and reported back for a warning.
inline std::vector<GroupVoronoiRow> aggregate_voronoi_groups(
    const std::vector<VoronoiCells>& cells, const std::vector<std::string>& labels,
    long iteration, std::vector<std::string>* omitted_groups = nullptr) {
    if (cells.size() != labels.size()) {
        throw std::logic_error("aggregate_voronoi_groups: labels size mismatch");
    }
    std::map<std::string, std::vector<double>> pooled;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto& bucket = pooled[labels[i]]; // creates the group even if empty
        bucket.insert(bucket.end(), cells[i].areas.begin(), cells[i].areas.end());
    }
    std::vector<GroupVoronoiRow> rows;
    for (const auto& [group, areas] : pooled) {
        if (areas.empty()) {
            if (omitted_groups) omitted_groups->push_back(group);
            continue;
        }
        GroupVoronoiRow row;
        row.iteration = iteration;
        row.group = group;
        double sum = 0.0;
        for (const double a : areas) sum += a;
        row.mean_area = sum / static_cast<double>(areas.size());
        double var = 0.0;
        for (const double a : areas) {
            var += (a - row.mean_area) * (a - row.mean_area);
        }
        row.std_area = std::sqrt(var / static_cast<double>(areas.size()));
        rows.push_back(row);
    }
    return rows;
}

namespace detail {

// Shortest representation that round-trips; deterministic across runs, unlike
// stream formatting with locale-dependent state.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

inline void write_voronoi_csv(const std::string& path, const std::vector<GroupVoronoiRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "iteration,group,mean_area,std_area\n";
    for (const auto& row : rows) {
        out << row.iteration << "," << row.group << "," << detail::format_double(row.mean_area)
            << "," << detail::format_double(row.std_area) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline void write_coverage_csv(const std::string& path, const std::vector<CoverageRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "iteration,ratio\n";
    for (const auto& row : rows) {
        out << row.iteration << "," << detail::format_double(row.ratio) << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace camsplat
