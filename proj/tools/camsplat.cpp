// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: synth | optimize | eval | export.
// Exit codes: 0 success, 2 input/validation failure, 3 numerical abort.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "camsplat/camsplat.hpp"

namespace {

struct CommonOpts {
    std::string proxy_path;
    std::string cameras_path;
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> set_pairs;
    std::int64_t seed = -1;       // -1: not given
    std::int64_t iterations = -1; // -1: not given
    int threads = 1;
};

// Precedence: config file < --set key=value < dedicated flags.
camsplat::OptimizationConfig merge_config(const CommonOpts& opts) {
    nlohmann::json doc = nlohmann::json::object();
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        if (!in) throw camsplat::IoError("cannot open config file: " + opts.config_path);
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw camsplat::ConfigError("config: JSON parse error in " + opts.config_path + ": " +
                                        e.what());
        }
        if (!doc.is_object()) {
            throw camsplat::ConfigError("config: top-level JSON value must be an object");
        }
    }
    for (const auto& pair : opts.set_pairs) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw camsplat::ConfigError("--set expects key=value, got '" + pair + "'");
        }
        const std::string key = pair.substr(0, eq);
        const std::string value = pair.substr(eq + 1);
        try {
            doc[key] = nlohmann::json::parse(value);
        } catch (const nlohmann::json::exception&) {
            throw camsplat::ConfigError("--set " + key + ": value '" + value +
                                        "' is not valid JSON");
        }
    }
    if (opts.seed >= 0) doc["seed"] = static_cast<std::uint64_t>(opts.seed);
    if (opts.iterations >= 0) doc["iterations"] = opts.iterations;
    return camsplat::parse_config(doc);
}

std::vector<std::pair<std::string, std::string>> input_digest_list(const CommonOpts& opts) {
    std::vector<std::pair<std::string, std::string>> inputs;
    if (!opts.proxy_path.empty()) inputs.emplace_back("proxy", opts.proxy_path);
    if (!opts.cameras_path.empty()) inputs.emplace_back("cameras", opts.cameras_path);
    if (!opts.config_path.empty()) inputs.emplace_back("config", opts.config_path);
    return inputs;
}

void print_warnings(const camsplat::RunOutputs& out) {
    for (const auto& w : out.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
}

int cmd_synth(const std::string& kind, const CommonOpts& opts, int n_points, double radius,
              double vds_high, double vds_low, double extent, double vds, double gap) {
    camsplat::SyntheticScene scene;
    const std::uint64_t seed = opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed) : 0;
    if (kind == "vds-sphere") {
        scene = camsplat::make_vds_sphere(n_points, radius, vds_high, vds_low, seed);
    } else if (kind == "plane") {
        scene = camsplat::make_plane(n_points, extent, vds, seed);
    } else if (kind == "facing-planes") {
        scene = camsplat::make_facing_planes(gap, n_points, vds, seed);
    } else {
        std::cerr << "error: unknown scene kind '" << kind
                  << "' (expected vds-sphere, plane or facing-planes)\n";
        return 2;
    }
    std::filesystem::create_directories(opts.out_dir);
    camsplat::write_scene(scene, opts.out_dir);
    std::cout << "wrote " << opts.out_dir << "/proxy.ply (" << scene.proxy.size()
              << " points) and labels.csv\n";
    return 0;
}

int cmd_optimize(const CommonOpts& opts) {
    const camsplat::OptimizationConfig cfg = merge_config(opts);
    const camsplat::LoadedScene scene = camsplat::load_scene(opts.proxy_path);
    std::vector<camsplat::CameraSplat> fixed;
    if (!opts.cameras_path.empty()) {
        fixed = camsplat::load_cameras_json(opts.cameras_path);
    }
    const camsplat::ScenePipeline pipeline =
        camsplat::build_pipeline(scene.proxy, scene.labels, fixed, cfg, opts.threads);
    const camsplat::RunOutputs out =
        camsplat::run_optimize(pipeline, opts.out_dir, opts.threads, input_digest_list(opts));
    print_warnings(out);
    std::cout << "optimized " << cfg.n_new_splats << " splats (+" << fixed.size()
              << " fixed) for " << cfg.iterations << " iterations";
    if (!out.coverage_rows.empty()) {
        std::cout << "; final coverage ratio " << out.coverage_rows.back().ratio;
    }
    std::cout << "\noutputs in " << opts.out_dir << "\n";
    return 0;
}

int cmd_eval(const CommonOpts& opts) {
    const camsplat::OptimizationConfig cfg = merge_config(opts);
    const camsplat::LoadedScene scene = camsplat::load_scene(opts.proxy_path);
    const std::vector<camsplat::CameraSplat> cameras =
        camsplat::load_camera_set(opts.cameras_path);
    const camsplat::ScenePipeline pipeline =
        camsplat::build_pipeline(scene.proxy, scene.labels, {}, cfg, opts.threads);
    const camsplat::RunOutputs out =
        camsplat::run_eval(pipeline, cameras, opts.out_dir, opts.threads,
                           input_digest_list(opts));
    print_warnings(out);
    std::cout << "evaluated " << cameras.size() << " cameras; coverage ratio "
              << out.coverage_rows.back().ratio << "\noutputs in " << opts.out_dir << "\n";
    return 0;
}

int cmd_export(const CommonOpts& opts) {
    const camsplat::OptimizationConfig cfg = merge_config(opts);
    const std::vector<camsplat::CameraSplat> cameras =
        camsplat::load_camera_set(opts.cameras_path);
    std::filesystem::create_directories(opts.out_dir);
    camsplat::export_transforms(cameras, cfg.globals(), opts.out_dir + "/transforms.json");
    std::cout << "wrote " << opts.out_dir << "/transforms.json (" << cameras.size()
              << " frames)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"camsplat: camera placement optimization over a proxy point cloud"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string synth_kind;
    int n_points = 500;
    double radius = 1.0, vds_high = 4.0, vds_low = 2.0, extent = 1.0, vds = 1.0, gap = 1.0;

    auto add_common = [&](CLI::App* sub, bool needs_proxy, bool needs_cameras) {
        if (needs_proxy) {
            sub->add_option("--proxy", opts.proxy_path, "proxy point cloud (.ply)")->required();
        }
        auto* cam = sub->add_option("--cameras", opts.cameras_path,
                                    "camera set (JSON array or transforms.json)");
        if (needs_cameras) cam->required();
        sub->add_option("--config", opts.config_path, "config JSON file");
        sub->add_option("--out", opts.out_dir, "output directory")->required();
        sub->add_option("--seed", opts.seed, "override the config seed");
        sub->add_option("--threads", opts.threads, "worker threads (1 = bit-reproducible)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--set", opts.set_pairs,
                        "config override key=value (value is JSON), repeatable");
        sub->add_option("--iterations", opts.iterations, "override iteration count")
            ->check(CLI::NonNegativeNumber);
    };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic proxy scene");
    synth->add_option("kind", synth_kind, "vds-sphere | plane | facing-planes")->required();
    synth->add_option("--out", opts.out_dir, "output directory")->required();
    synth->add_option("--seed", opts.seed, "layout seed");
    synth->add_option("--n-points", n_points, "proxy point count");
    synth->add_option("--radius", radius, "sphere radius");
    synth->add_option("--vds-high", vds_high, "vds of the upper hemisphere");
    synth->add_option("--vds-low", vds_low, "vds of the lower hemisphere");
    synth->add_option("--extent", extent, "plane side length");
    synth->add_option("--vds", vds, "uniform vds for plane scenes");
    synth->add_option("--gap", gap, "distance between facing planes");

    CLI::App* optimize = app.add_subcommand("optimize", "optimize camera splats over a proxy");
    add_common(optimize, /*needs_proxy=*/true, /*needs_cameras=*/false);

    CLI::App* eval = app.add_subcommand("eval", "diagnostics for a fixed camera set");
    add_common(eval, /*needs_proxy=*/true, /*needs_cameras=*/true);

    CLI::App* exp = app.add_subcommand("export", "convert a camera set to transforms.json");
    exp->add_option("--cameras", opts.cameras_path, "camera set (JSON array or transforms.json)")
        ->required();
    exp->add_option("--config", opts.config_path, "config JSON file (for the FoV)");
    exp->add_option("--out", opts.out_dir, "output directory")->required();
    exp->add_option("--set", opts.set_pairs, "config override key=value, repeatable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            return cmd_synth(synth_kind, opts, n_points, radius, vds_high, vds_low, extent, vds,
                             gap);
        }
        if (optimize->parsed()) return cmd_optimize(opts);
        if (eval->parsed()) return cmd_eval(opts);
        if (exp->parsed()) return cmd_export(opts);
    } catch (const camsplat::NumericalError& e) {
        std::cerr << "numerical abort at iteration " << e.iteration << ": " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
