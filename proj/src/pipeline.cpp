#include "stconf/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace stconf {

namespace fs = std::filesystem;

Algorithm parse_algorithm(const std::string& name)
{
    if (name == "census-cbca")
        return Algorithm::census_cbca;
    if (name == "census-sgm")
        return Algorithm::census_sgm;
    if (name == "external-volume")
        return Algorithm::external_volume;
    throw ConfigError("unknown algorithm '" + name + "' (census-cbca, census-sgm, external-volume)");
}

const char* to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::census_cbca: return "census-cbca";
    case Algorithm::census_sgm: return "census-sgm";
    case Algorithm::external_volume: return "external-volume";
    }
    return "?";
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed)
{
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

void PipelineConfig::validate() const
{
    if (census_window < 3 || census_window > 31 || census_window % 2 == 0)
        throw ConfigError("census_window must be odd and in [3, 31]");
    if (cbca.max_arm < 1 || cbca.tau_color < 1 || cbca.iterations < 0)
        throw ConfigError("cbca parameters: max_arm >= 1, tau_color >= 1, iterations >= 0");
    if (!(sgm.p1 >= 0.0 && sgm.p1 <= sgm.p2))
        throw ConfigError("sgm parameters must satisfy 0 <= p1 <= p2");
    if (workers < 1)
        throw ConfigError("workers must be >= 1");
    if (k < 1)
        throw ConfigError("k must be >= 1");
    try {
        measure_params.validate();
        requested_measures(*this);
        for (const auto& s : feature_stacks)
            parse_stack_kind(s);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

PipelineConfig parse_config(const std::string& json_text, const fs::path& base_dir)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");

    static const std::set<std::string> known = {
        "algorithm", "census_window", "cbca",  "sgm",          "measure_params", "measures", "sweep",
        "features",  "manifest",      "output", "workers",     "k",              "shuffle_ties",
        "cache",     "save_maps"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown config key '" + key + "'");

    PipelineConfig cfg;
    try {
        if (j.contains("algorithm"))
            cfg.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
        cfg.census_window = j.value("census_window", cfg.census_window);
        if (j.contains("cbca")) {
            const auto& c = j["cbca"];
            cfg.cbca.max_arm = c.value("max_arm", cfg.cbca.max_arm);
            cfg.cbca.tau_color = c.value("tau_color", cfg.cbca.tau_color);
            cfg.cbca.iterations = c.value("iterations", cfg.cbca.iterations);
        }
        if (j.contains("sgm")) {
            cfg.sgm.p1 = j["sgm"].value("p1", cfg.sgm.p1);
            cfg.sgm.p2 = j["sgm"].value("p2", cfg.sgm.p2);
        }
        if (j.contains("measure_params")) {
            const auto& m = j["measure_params"];
            auto& p = cfg.measure_params;
            p.sigma_nlm = m.value("sigma_nlm", p.sigma_nlm);
            p.sigma_mlm = m.value("sigma_mlm", p.sigma_mlm);
            p.s_per = m.value("s_per", p.s_per);
            p.gamma_lc = m.value("gamma_lc", p.gamma_lc);
            p.gamma_ps = m.value("gamma_ps", p.gamma_ps);
            p.wpkr_threshold = m.value("wpkr_threshold", p.wpkr_threshold);
            p.window = m.value("window", p.window);
            p.epsilon_div = m.value("epsilon_div", p.epsilon_div);
            p.edge_threshold_disparity = m.value("edge_threshold_disparity", p.edge_threshold_disparity);
            p.edge_threshold_intensity = m.value("edge_threshold_intensity", p.edge_threshold_intensity);
            p.sge_p1 = m.value("sge_p1", p.sge_p1);
            p.sge_p2 = m.value("sge_p2", p.sge_p2);
            if (m.contains("wpkr_mode")) {
                const auto mode = m["wpkr_mode"].get<std::string>();
                if (mode == "same")
                    p.wpkr_mode = WpkrMode::same_image;
                else if (mode == "cross")
                    p.wpkr_mode = WpkrMode::cross_image;
                else
                    throw ConfigError("wpkr_mode must be 'same' or 'cross'");
            }
        }
        if (j.contains("measures")) {
            const auto& m = j["measures"];
            if (m.is_string()) {
                cfg.measures = m.get<std::string>();
            } else {
                std::string joined;
                for (const auto& id : m)
                    joined += (joined.empty() ? "" : ",") + id.get<std::string>();
                cfg.measures = joined;
            }
        }
        cfg.sweep = j.value("sweep", cfg.sweep);
        if (j.contains("features"))
            cfg.feature_stacks = j["features"].get<std::vector<std::string>>();
        if (j.contains("manifest")) {
            fs::path m = j["manifest"].get<std::string>();
            cfg.manifest = m.is_relative() && !base_dir.empty() ? base_dir / m : m;
        }
        if (j.contains("output"))
            cfg.output = j["output"].get<std::string>();
        cfg.workers = j.value("workers", cfg.workers);
        cfg.k = j.value("k", cfg.k);
        if (j.contains("shuffle_ties") && !j["shuffle_ties"].is_null())
            cfg.shuffle_seed = j["shuffle_ties"].get<std::uint64_t>();
        cfg.cache = j.value("cache", cfg.cache);
        cfg.save_maps = j.value("save_maps", cfg.save_maps);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::vector<MeasureRequest> requested_measures(const PipelineConfig& cfg)
{
    const auto base = resolve_measures(cfg.measures, cfg.algorithm == Algorithm::census_sgm);
    if (!cfg.sweep)
        return base;
    std::vector<MeasureRequest> out;
    for (const auto& r : base) {
        if (measure_info(r.kind).windowed && !r.window) {
            for (int w : kWindowSweep)
                out.push_back({r.kind, w});
        } else {
            out.push_back(r);
        }
    }
    return out;
}

namespace {

CostVolume census_cbca_volume(const PipelineConfig& cfg, const GrayImage& left, const GrayImage& right, int d_max,
                              Exec exec)
{
    const CensusImage cl = census_transform(left, cfg.census_window, exec);
    const CensusImage cr = census_transform(right, cfg.census_window, exec);
    const CostVolume raw = build_cost_volume(cl, cr, d_max, exec);
    const CrossMap xl = build_cross(left, cfg.cbca.max_arm, cfg.cbca.tau_color);
    const CrossMap xr = build_cross(right, cfg.cbca.max_arm, cfg.cbca.tau_color);
    return cbca_aggregate(raw, xl, xr, cfg.cbca.iterations, exec);
}

StereoResult finish_stereo(const PipelineConfig& cfg, CostVolume aggregated, Exec exec)
{
    StereoResult out;
    if (cfg.algorithm == Algorithm::census_sgm) {
        out.scanlines = sgm_aggregate(aggregated, cfg.sgm, exec);
        out.volume = out.scanlines->total;
        out.pre_aggregation = std::move(aggregated);
    } else {
        out.volume = std::move(aggregated);
    }
    return out;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t cache_key(const PipelineConfig& cfg, const GrayImage& left, const GrayImage& right, int d_max)
{
    std::uint64_t h = fnv1a(left.data().data(), left.size());
    h = fnv1a(right.data().data(), right.size(), h);
    const std::int64_t params[] = {left.width(), left.height(), right.width(), right.height(), d_max,
                                   cfg.census_window, cfg.cbca.max_arm, cfg.cbca.tau_color, cfg.cbca.iterations};
    return fnv1a(params, sizeof(params), h);
}

void write_atomic(const CostVolume& vol, const fs::path& path)
{
    static std::atomic<unsigned> counter{0};
    std::ostringstream tmp_name;
    tmp_name << path.filename().string() << ".tmp." << std::this_thread::get_id() << '.' << counter++;
    const fs::path tmp = path.parent_path() / tmp_name.str();
    write_stcvol(vol, tmp);
    fs::rename(tmp, path);
}

CostVolume cached_census_cbca(const PipelineConfig& cfg, const GrayImage& left, const GrayImage& right, int d_max,
                              Exec exec)
{
    if (!cfg.cache)
        return census_cbca_volume(cfg, left, right, d_max, exec);
    const fs::path dir = cfg.output / "cache";
    const fs::path file = dir / (hex64(cache_key(cfg, left, right, d_max)) + ".stcvol");
    if (fs::exists(file)) {
        try {
            CostVolume vol = read_stcvol(file);
            if (vol.width() == left.width() && vol.height() == left.height() && vol.d_max() == d_max)
                return vol;
        } catch (const Error&) {
            // Unreadable cache entries are recomputed and overwritten.
        }
    }
    CostVolume vol = census_cbca_volume(cfg, left, right, d_max, exec);
    fs::create_directories(dir);
    write_atomic(vol, file);
    return vol;
}

bool needs_any(const std::vector<MeasureRequest>& reqs, unsigned flag)
{
    for (const auto& r : reqs)
        if (measure_info(r.kind).needs & flag)
            return true;
    return false;
}

void save_disparity(const DisparityMap& d, const fs::path& path) { save_map(d, path, MapEncoding::pfm); }

} // namespace

EntryData load_entry(const PipelineConfig& cfg, std::size_t index, const ManifestEntry& entry, bool self_volumes,
                     Exec exec)
{
    EntryData data;
    data.id = entry_id(index, entry);
    data.tau = entry.tau;
    GrayImage left, right;
    if (!entry.left.empty())
        left = load_gray_image(entry.left);
    if (!entry.right.empty())
        right = load_gray_image(entry.right);
    if (!left.empty() && !right.empty() && !left.same_shape(right))
        throw Error("left and right images differ in size");

    StereoResult stereo;
    if (cfg.algorithm == Algorithm::external_volume) {
        if (entry.volume.empty())
            throw Error("external-volume entries need a \"volume\" path");
        stereo.volume = ingest_cost_volume(entry.volume, parse_ingest_mode(entry.volume_mode));
        if (entry.d_max > 0 && entry.d_max != stereo.volume.d_max())
            throw Error("manifest d_max differs from the volume's hypothesis count");
    } else {
        if (left.empty() || right.empty())
            throw Error("census pipelines need left and right images");
        if (entry.d_max < 1 || entry.d_max >= left.width())
            throw Error("d_max must be in [1, image width)");
        stereo = finish_stereo(cfg, cached_census_cbca(cfg, left, right, entry.d_max, exec), exec);
    }
    if (!left.empty() && !left.same_shape(stereo.volume.width(), stereo.volume.height()))
        throw Error("image and volume dimensions differ");

    data.inputs = make_measure_inputs(std::move(stereo.volume), {}, {}, cfg.census_window, exec);
    if (self_volumes && !left.empty() && !right.empty()) {
        data.inputs.self_left = build_self_volume(left, data.inputs.d_max(), cfg.census_window, exec);
        data.inputs.self_right = build_self_volume(right, data.inputs.d_max(), cfg.census_window, exec);
    }
    data.inputs.left_image = std::move(left);
    data.inputs.right_image = std::move(right);
    data.inputs.scanlines = std::move(stereo.scanlines);
    data.inputs.pre_aggregation = std::move(stereo.pre_aggregation);
    return data;
}

StereoResult run_stereo(const PipelineConfig& cfg, const GrayImage& left, const GrayImage& right, int d_max, Exec exec)
{
    if (cfg.algorithm == Algorithm::external_volume)
        throw Error("external-volume pipelines read volumes from disk instead of matching");
    return finish_stereo(cfg, census_cbca_volume(cfg, left, right, d_max, exec), exec);
}

std::string entry_id(std::size_t index, const ManifestEntry& entry)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03zu", index);
    const std::string stem = fs::path(entry.left.empty() ? entry.volume : entry.left).stem().string();
    return stem.empty() ? std::string(buf) : std::string(buf) + "_" + stem;
}

EntryData prepare_entry(const PipelineConfig& cfg, std::size_t index, const ManifestEntry& entry, Exec exec)
{
    const bool self = needs_any(requested_measures(cfg), kNeedsSelfVolumes);
    EntryData data = load_entry(cfg, index, entry, self, exec);
    data.gt = load_ground_truth(entry.gt, entry.gt_encoding);
    if (!data.gt.disparity.same_shape(data.inputs.width(), data.inputs.height()))
        throw Error("ground truth dimensions differ from the cost volume");
    return data;
}

void run_match(const PipelineConfig& cfg, std::size_t index, const ManifestEntry& entry, Exec exec)
{
    try {
        const EntryData data = load_entry(cfg, index, entry, true, exec);
        const fs::path dir = cfg.output / data.id;
        fs::create_directories(dir);
        const MeasureInputs& in = data.inputs;
        save_disparity(in.left_disparity, dir / "disparity_left.pfm");
        save_disparity(in.right_disparity, dir / "disparity_right.pfm");
        write_atomic(in.left_volume, dir / "volume_left.stcvol");
        write_atomic(in.right_volume, dir / "volume_right.stcvol");
        if (!in.self_left.costs.empty()) {
            write_atomic(in.self_left.costs, dir / "self_left.stcvol");
            write_atomic(in.self_right.costs, dir / "self_right.stcvol");
        }
        if (in.scanlines) {
            for (std::size_t s = 0; s < kSgmPaths.size(); ++s)
                write_atomic(in.scanlines->paths[s], dir / (std::string("scanline_") + to_string(kSgmPaths[s]) + ".stcvol"));
            write_atomic(in.pre_aggregation, dir / "volume_pre_sgm.stcvol");
        }
    } catch (const std::exception& e) {
        throw Error(entry_id(index, entry) + ": " + e.what());
    }
}

EvalOutcome run_eval(const PipelineConfig& cfg)
{
    cfg.validate();
    if (cfg.manifest.empty())
        throw ConfigError("no manifest given");
    DatasetManifest manifest;
    try {
        manifest = load_manifest(cfg.manifest);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    const auto requests = requested_measures(cfg);
    const std::size_t n = manifest.entries.size();
    std::vector<std::vector<EvalRecord>> per_entry(n, std::vector<EvalRecord>(requests.size()));
    std::vector<std::vector<char>> ok(n, std::vector<char>(requests.size(), 0));
    std::vector<std::vector<std::string>> failures(n);

    const Exec outer{std::min<unsigned>(cfg.workers, static_cast<unsigned>(std::max<std::size_t>(n, 1)))};
    const Exec inner{std::max(1u, cfg.workers / outer.workers)};
    fs::create_directories(cfg.output);

    parallel_for(0, static_cast<int>(n), outer, [&](int e) {
        const auto& entry = manifest.entries[e];
        const std::string id = entry_id(e, entry);
        try {
            const EntryData data = prepare_entry(cfg, e, entry, inner);
            const double eps = d1_rate(data.inputs.left_disparity, data.gt, data.tau);
            const double opt = eps < 1.0 ? optimal_auc(eps) : 1.0;
            const fs::path dir = cfg.output / id;
            if (cfg.save_maps) {
                fs::create_directories(dir / "confidence");
                save_disparity(data.inputs.left_disparity, dir / "disparity_left.pfm");
            }
            for (std::size_t m = 0; m < requests.size(); ++m) {
                try {
                    const ConfidenceMap map = compute_measure(data.inputs, cfg.measure_params, requests[m]);
                    const auto curve = sparsify(map.oriented(), data.inputs.left_disparity, data.gt, data.tau,
                                                {cfg.k, cfg.shuffle_seed});
                    per_entry[e][m] = {requests[m].id(), id, auc(curve), opt, eps};
                    ok[e][m] = 1;
                    if (cfg.save_maps) {
                        save_map(map.scores, dir / "confidence" / (requests[m].id() + ".pfm"), MapEncoding::pfm);
                        write_text_file(dir / "curves" / (requests[m].id() + ".csv"), curve_csv(curve));
                    }
                } catch (const std::exception& ex) {
                    failures[e].push_back(id + ": " + requests[m].id() + ": " + ex.what());
                }
            }
            for (const auto& kind : cfg.feature_stacks) {
                try {
                    const StereoRunner runner = [&](const GrayImage& l, const GrayImage& r, int d) {
                        return run_stereo(cfg, l, r, d, inner).volume;
                    };
                    const FeatureStack stack =
                        assemble_stack(parse_stack_kind(kind), data.inputs, cfg.measure_params, runner, inner);
                    fs::create_directories(dir / "features");
                    export_stack(stack, dir / "features" / (kind + ".stfeat"));
                } catch (const std::exception& ex) {
                    failures[e].push_back(id + ": features " + kind + ": " + ex.what());
                }
            }
        } catch (const std::exception& ex) {
            failures[e].push_back(id + ": " + ex.what());
        }
    });

    EvalOutcome out;
    for (std::size_t m = 0; m < requests.size(); ++m)
        for (std::size_t e = 0; e < n; ++e)
            if (ok[e][m])
                out.records.push_back(per_entry[e][m]);
    for (auto& f : failures)
        out.failures.insert(out.failures.end(), f.begin(), f.end());

    write_text_file(cfg.output / "results.csv", report_csv(out.records));
    write_text_file(cfg.output / "macro.csv", macro_csv(out.records));
    write_text_file(cfg.output / "summary.md", report_markdown(out.records));
    return out;
}

} // namespace stconf
