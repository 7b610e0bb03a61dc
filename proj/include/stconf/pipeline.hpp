#pragma once

#include "stconf/aggregate.hpp"
#include "stconf/cost_volume.hpp"
#include "stconf/dataio.hpp"
#include "stconf/evaluation.hpp"
#include "stconf/features.hpp"
#include "stconf/measures.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stconf {

enum class Algorithm { census_cbca, census_sgm, external_volume };
Algorithm parse_algorithm(const std::string& name);
const char* to_string(Algorithm a);

struct CbcaParams {
    int max_arm = 17;
    int tau_color = 20;
    int iterations = 2;
};

/// Thrown for invalid configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct PipelineConfig {
    Algorithm algorithm = Algorithm::census_cbca;
    int census_window = 9;
    CbcaParams cbca;
    SgmParams sgm;
    MeasureParams measure_params;
    /// "all" or a comma separated list of ids.
    std::string measures = "all";
    /// Expands every windowed measure over the full window sweep.
    bool sweep = false;
    std::vector<std::string> feature_stacks;
    std::filesystem::path manifest;
    std::filesystem::path output = "out";
    unsigned workers = 1;
    int k = 20;
    std::optional<std::uint64_t> shuffle_seed;
    bool cache = true;
    bool save_maps = true;

    void validate() const;
};

PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Volumes of one stereo pass. `pre_aggregation` is the volume before the final
/// optimization step (raw census for CBCA, CBCA output for SGM).
struct StereoResult {
    CostVolume volume;
    CostVolume pre_aggregation;
    std::optional<ScanlineResult> scanlines;
};

StereoResult run_stereo(const PipelineConfig& cfg, const GrayImage& left, const GrayImage& right, int d_max,
                        Exec exec = {});

/// Loaded pair, ground truth and full measure inputs for one manifest entry.
struct EntryData {
    std::string id;
    GroundTruth gt;
    double tau = 0.0;
    MeasureInputs inputs;
};

/// Entry id: zero-padded index plus the left image stem.
std::string entry_id(std::size_t index, const ManifestEntry& entry);

/// Loads images, runs (or ingests) the stereo pass and derives measure inputs; no ground truth.
/// Self-matching volumes are built only when `self_volumes` is set.
EntryData load_entry(const PipelineConfig& cfg, std::size_t index, const ManifestEntry& entry, bool self_volumes,
                     Exec exec = {});
/// load_entry plus ground truth, building self volumes when a requested measure needs them.
EntryData prepare_entry(const PipelineConfig& cfg, std::size_t index, const ManifestEntry& entry, Exec exec = {});

/// Writes disparity maps and volumes of one entry under <output>/<entry id>/.
void run_match(const PipelineConfig& cfg, std::size_t index, const ManifestEntry& entry, Exec exec = {});

struct EvalOutcome {
    std::vector<EvalRecord> records;
    std::vector<std::string> failures;
};

/// Evaluates every requested measure on every manifest entry and writes
/// results.csv, macro.csv and summary.md into the output directory.
EvalOutcome run_eval(const PipelineConfig& cfg);

/// Measure requests for a config and algorithm (applies the sweep expansion).
std::vector<MeasureRequest> requested_measures(const PipelineConfig& cfg);

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 14695981039346656037ull);

} // namespace stconf
