#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subtail/domain.hpp"
#include "subtail/trainer.hpp"

namespace subtail {

// ---------------------------------------------------------------------------
// Synthetic long-tailed mixtures

/// Class c gets round(n_max * R^(-c/(K-1))) samples drawn from a Gaussian mixture with
/// `modes` components. Class centers are N(0, overlap^2 I/d) (so centers sit roughly
/// overlap * sqrt(2) apart), mode centers scatter around them with half that spread, and
/// samples add isotropic N(0, within_std^2) noise.
struct SyntheticSpec {
    int num_classes = 10;
    int dim = 32;
    int n_max = 2000;
    double imbalance_ratio = 65.78;
    double within_std = 1.0;
    int modes = 2;
    double overlap = 4.0;
    std::uint64_t seed = 0;

    void validate() const;
    std::vector<int> class_sizes() const;
};

SyntheticSpec parse_synthetic_spec(std::string_view json_text);

Dataset generate_synthetic(const SyntheticSpec& spec);

/// Fresh draws from the same mixture with explicit per-class sizes. Different stream labels
/// give independent samples; the mixture geometry depends only on spec.seed.
Dataset sample_synthetic(const SyntheticSpec& spec, std::span<const int> class_sizes, std::string_view stream);

// ---------------------------------------------------------------------------
// Feature files: header `id,label,f0,...,f{d-1}`, one sample per row.

Dataset parse_features(std::istream& in, const std::string& source_name = "<stream>");
Dataset load_features(const std::filesystem::path& path);
void write_features(std::ostream& out, const Dataset& ds);
void save_features(const std::filesystem::path& path, const Dataset& ds);

// ---------------------------------------------------------------------------
// Splits

enum class SplitMode { random, standard };

struct SplitSpec {
    SplitMode mode = SplitMode::standard;
    double train = 0.8;
    double valid = 0.1;
    double test = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

/// random: unstratified shuffle, valid/test get floor(fraction * N).
/// standard: every class contributes floor(fraction * n_min) samples to valid and to test.
SplitIndices make_split(const Dataset& ds, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Run configuration (JSON object with optional sections)

struct RunConfig {
    std::string source;  // verbatim file text
    TrainConfig train;
    SplitSpec split;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Reports

struct RunReport {
    RunConfig config;
    std::vector<EpochRecord> epochs;
    std::map<std::string, EvalReport> metrics;  // keyed by split name
    std::vector<WeightSnapshot> weights;
};

bool operator==(const RunReport& a, const RunReport& b);

std::string report_to_json(const RunReport& report);
/// One evaluation as a JSON object (same layout as the report's metrics entries).
std::string eval_to_json(const EvalReport& eval);
RunReport report_from_json(std::string_view text);
/// Long format `section,key,field,value`; numbers use shortest round-trip notation.
std::string report_to_csv(const RunReport& report);

void save_report(const std::filesystem::path& path, const RunReport& report);
RunReport load_report(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Checkpoints: "SUBT", u32 version, u32 d/h/e/K, then little-endian f64 blocks
// w1, b1, w2, b2, w, b in row-major order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<unsigned char> checkpoint_bytes(const TrainedModel& model);
TrainedModel checkpoint_from_bytes(std::span<const unsigned char> bytes);
void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace subtail
