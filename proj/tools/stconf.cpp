// Command-line front end: match, confidence, eval, features, list-measures, sparsify.
#include "stconf/dataio.hpp"
#include "stconf/evaluation.hpp"
#include "stconf/features.hpp"
#include "stconf/measures.hpp"
#include "stconf/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace stconf;

namespace {

struct CommonOptions {
    std::string config;
    std::string algo;
    std::string out;
    std::string measures;
    std::optional<int> window;
    std::optional<unsigned> workers;
    std::optional<double> p1, p2;
    std::optional<int> max_arm, tau_color, cbca_iters;
    std::optional<int> census_window;
    // direct single-pair input
    std::string left, right, volume, volume_mode = "costs";
    int d_max = 0;
    int entry = -1;
};

void add_common(CLI::App* app, CommonOptions& o, bool with_measures)
{
    app->add_option("--config", o.config, "Pipeline config (JSON)");
    app->add_option("--algo", o.algo, "census-cbca | census-sgm | external-volume");
    app->add_option("--out", o.out, "Output directory or file");
    app->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    app->add_option("--p1", o.p1, "SGM small-jump penalty");
    app->add_option("--p2", o.p2, "SGM large-jump penalty");
    app->add_option("--max-arm", o.max_arm, "CBCA maximum arm length");
    app->add_option("--tau-color", o.tau_color, "CBCA intensity threshold");
    app->add_option("--cbca-iters", o.cbca_iters, "CBCA iterations");
    app->add_option("--census-window", o.census_window, "Census window size");
    app->add_option("--left", o.left, "Left image (single-pair mode)");
    app->add_option("--right", o.right, "Right image (single-pair mode)");
    app->add_option("--d-max", o.d_max, "Maximum disparity (single-pair mode)");
    app->add_option("--volume", o.volume, "STCVOL file for external-volume");
    app->add_option("--volume-mode", o.volume_mode, "costs | probabilities");
    app->add_option("--entry", o.entry, "Only this manifest entry (index)");
    if (with_measures) {
        app->add_option("--measures", o.measures, "Comma separated ids or 'all'");
        app->add_option("--window", o.window, "Window N(p) for windowed measures");
    }
}

PipelineConfig build_config(const CommonOptions& o)
{
    PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_config(o.config);
    if (!o.algo.empty())
        cfg.algorithm = parse_algorithm(o.algo);
    else if (o.config.empty() && !o.volume.empty())
        cfg.algorithm = Algorithm::external_volume;
    if (!o.out.empty())
        cfg.output = o.out;
    if (!o.measures.empty())
        cfg.measures = o.measures;
    if (o.window)
        cfg.measure_params.window = *o.window;
    if (o.workers)
        cfg.workers = *o.workers;
    if (o.p1)
        cfg.sgm.p1 = *o.p1;
    if (o.p2)
        cfg.sgm.p2 = *o.p2;
    if (o.max_arm)
        cfg.cbca.max_arm = *o.max_arm;
    if (o.tau_color)
        cfg.cbca.tau_color = *o.tau_color;
    if (o.cbca_iters)
        cfg.cbca.iterations = *o.cbca_iters;
    if (o.census_window)
        cfg.census_window = *o.census_window;
    cfg.validate();
    return cfg;
}

/// Manifest entries selected by the options: the single pair, or the (filtered) manifest.
std::vector<std::pair<std::size_t, ManifestEntry>> select_entries(const PipelineConfig& cfg, const CommonOptions& o)
{
    std::vector<std::pair<std::size_t, ManifestEntry>> out;
    if (!o.left.empty() || !o.volume.empty()) {
        ManifestEntry e;
        e.left = o.left;
        e.right = o.right;
        e.d_max = o.d_max;
        e.volume = o.volume;
        e.volume_mode = o.volume_mode;
        out.emplace_back(0, e);
        return out;
    }
    if (cfg.manifest.empty())
        throw ConfigError("give --left/--right/--d-max, --volume, or a config with a manifest");
    DatasetManifest m;
    try {
        m = load_manifest(cfg.manifest);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    for (std::size_t i = 0; i < m.entries.size(); ++i)
        if (o.entry < 0 || static_cast<std::size_t>(o.entry) == i)
            out.emplace_back(i, m.entries[i]);
    if (out.empty())
        throw ConfigError("no manifest entry selected");
    return out;
}

int run_match_cmd(const CommonOptions& o)
{
    const PipelineConfig cfg = build_config(o);
    int status = 0;
    for (const auto& [i, e] : select_entries(cfg, o)) {
        try {
            run_match(cfg, i, e, Exec{cfg.workers});
            std::cout << "matched " << entry_id(i, e) << "\n";
        } catch (const Error& ex) {
            std::cerr << "error: " << ex.what() << "\n";
            status = 1;
        }
    }
    return status;
}

int run_confidence_cmd(const CommonOptions& o)
{
    const PipelineConfig cfg = build_config(o);
    const auto requests = requested_measures(cfg);
    bool self = false;
    for (const auto& r : requests)
        self = self || (measure_info(r.kind).needs & kNeedsSelfVolumes);
    int status = 0;
    for (const auto& [i, e] : select_entries(cfg, o)) {
        try {
            const EntryData data = load_entry(cfg, i, e, self, Exec{cfg.workers});
            const fs::path dir = cfg.output / data.id / "confidence";
            fs::create_directories(dir);
            for (const auto& r : requests) {
                try {
                    const ConfidenceMap map = compute_measure(data.inputs, cfg.measure_params, r);
                    save_map(map.scores, dir / (r.id() + ".pfm"), MapEncoding::pfm);
                } catch (const Error& ex) {
                    std::cerr << "error: " << data.id << ": " << r.id() << ": " << ex.what() << "\n";
                    status = 1;
                }
            }
            std::cout << "wrote " << dir.string() << "\n";
        } catch (const Error& ex) {
            std::cerr << "error: " << entry_id(i, e) << ": " << ex.what() << "\n";
            status = 1;
        }
    }
    return status;
}

int run_eval_cmd(const CommonOptions& o, bool sweep, std::optional<int> k, std::optional<std::uint64_t> seed)
{
    PipelineConfig cfg = build_config(o);
    if (sweep)
        cfg.sweep = true;
    if (k)
        cfg.k = *k;
    if (seed)
        cfg.shuffle_seed = *seed;
    cfg.validate();
    const EvalOutcome outcome = run_eval(cfg);
    for (const auto& f : outcome.failures)
        std::cerr << "error: " << f << "\n";
    std::cout << "evaluated " << outcome.records.size() << " (measure, image) pairs into " << cfg.output.string()
              << "\n";
    return outcome.failures.empty() ? 0 : 1;
}

int run_features_cmd(const CommonOptions& o, const std::string& kind_name)
{
    CommonOptions opts = o;
    const StackKind kind = [&] {
        try {
            return parse_stack_kind(kind_name);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }();
    const std::string out_file = opts.out.empty() ? kind_name + ".stfeat" : opts.out;
    opts.out.clear();
    const PipelineConfig cfg = build_config(opts);
    auto entries = select_entries(cfg, opts);
    if (entries.size() != 1)
        throw ConfigError("features exports one entry at a time; pass --entry");
    const auto& [i, e] = entries.front();
    const Exec exec{cfg.workers};
    EntryData data = load_entry(cfg, i, e, false, exec);
    const StereoRunner runner = [&](const GrayImage& l, const GrayImage& r, int d) {
        return run_stereo(cfg, l, r, d, exec).volume;
    };
    const FeatureStack stack = assemble_stack(kind, data.inputs, cfg.measure_params, runner, exec);
    export_stack(stack, out_file);
    std::cout << "wrote " << stack.channels.size() << " channels to " << out_file << "\n";
    return 0;
}

int run_sparsify_cmd(const std::string& conf_path, const std::string& disp_path, const std::string& gt_path,
                     const std::string& gt_encoding, double tau, int k, const std::string& measure, int sign,
                     std::optional<std::uint64_t> seed, const std::string& out)
{
    const auto to_real_map = [](const Image2D<float>& f) {
        RealMap m(f.width(), f.height());
        for (std::size_t i = 0; i < f.size(); ++i)
            m.data()[i] = f.data()[i];
        return m;
    };
    RealMap conf = to_real_map(load_pfm(conf_path));
    const DisparityMap disp = to_real_map(load_pfm(disp_path));
    const GroundTruth gt = load_ground_truth(gt_path, parse_gt_encoding(gt_encoding));
    if (!measure.empty())
        sign = measure_info(parse_measure_id(measure).kind).evaluation_sign;
    for (double& v : conf.data())
        v *= sign;
    const auto curve = sparsify(conf, disp, gt, tau, {k, seed});
    const std::string csv = curve_csv(curve);
    if (out.empty())
        std::cout << csv;
    else
        write_text_file(out, csv);
    std::cerr << "AUC x100 = " << format_x100(auc(curve), 4) << ", optimal x100 = "
              << format_x100(curve.epsilon < 1.0 ? optimal_auc(curve.epsilon) : 1.0, 4)
              << ", D1 % = " << format_x100(curve.epsilon, 4) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stereo confidence toolkit"};
    app.require_subcommand(1);

    CommonOptions match_opts, conf_opts, eval_opts, feat_opts;
    auto* match = app.add_subcommand("match", "Compute disparity maps and volumes");
    add_common(match, match_opts, false);

    auto* confidence = app.add_subcommand("confidence", "Compute confidence maps");
    add_common(confidence, conf_opts, true);

    auto* eval = app.add_subcommand("eval", "Evaluate confidence measures against ground truth");
    add_common(eval, eval_opts, true);
    bool sweep = false;
    std::optional<int> eval_k;
    std::optional<std::uint64_t> eval_seed;
    eval->add_flag("--sweep", sweep, "Evaluate windowed measures at every window size");
    eval->add_option("--k", eval_k, "Sparsification steps")->check(CLI::PositiveNumber);
    eval->add_option("--shuffle-ties", eval_seed, "Break confidence ties with this random seed");

    auto* features = app.add_subcommand("features", "Export a feature stack (STFEAT)");
    add_common(features, feat_opts, false);
    std::string kind;
    features->add_option("--kind", kind, "GCP, ENS7, ENS23, LEV22, LEV50, O1, O2, FA1, FA2, SGMF")->required();

    auto* list = app.add_subcommand("list-measures", "Print the measure catalog");
    bool json = false;
    list->add_flag("--json", json, "Machine-readable output");

    auto* sp = app.add_subcommand("sparsify", "Dump a sparsification curve as CSV");
    std::string sp_conf, sp_disp, sp_gt, sp_enc = "pfm", sp_measure, sp_out;
    double sp_tau = 3.0;
    int sp_k = 20;
    int sp_sign = 1;
    std::optional<std::uint64_t> sp_seed;
    sp->add_option("--confidence", sp_conf, "Confidence map (PFM)")->required();
    sp->add_option("--disparity", sp_disp, "Disparity map (PFM)")->required();
    sp->add_option("--gt", sp_gt, "Ground truth")->required();
    sp->add_option("--gt-encoding", sp_enc, "pfm | kitti-png16");
    sp->add_option("--tau", sp_tau, "Error threshold");
    sp->add_option("--k", sp_k, "Sparsification steps")->check(CLI::PositiveNumber);
    sp->add_option("--measure", sp_measure, "Take the polarity of this catalog measure");
    sp->add_option("--sign", sp_sign, "Multiply confidences by this sign")->check(CLI::IsMember({-1, 1}));
    sp->add_option("--shuffle-ties", sp_seed, "Break confidence ties with this random seed");
    sp->add_option("--out", sp_out, "Output CSV (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*match)
            return run_match_cmd(match_opts);
        if (*confidence)
            return run_confidence_cmd(conf_opts);
        if (*eval)
            return run_eval_cmd(eval_opts, sweep, eval_k, eval_seed);
        if (*features)
            return run_features_cmd(feat_opts, kind);
        if (*list) {
            if (json) {
                std::cout << catalog_json() << "\n";
            } else {
                for (const auto& m : measure_catalog())
                    std::cout << m.id << "\t" << to_string(m.family) << "\t" << m.name << "\n";
            }
            return 0;
        }
        if (*sp)
            return run_sparsify_cmd(sp_conf, sp_disp, sp_gt, sp_enc, sp_tau, sp_k, sp_measure, sp_sign, sp_seed, sp_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
