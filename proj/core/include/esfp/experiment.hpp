#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esfp/corruption.hpp"
#include "esfp/metrics.hpp"
#include "esfp/training.hpp"

namespace esfp {

// One reproducible evaluation run: generate (or reuse) clean sequences,
// corrupt the held-out tail, smooth with each requested method, score
// everything with the full metric set.
struct ExperimentConfig {
    SyntheticDatasetSpec dataset;
    NoiseProfile profile = NoiseProfile::eval_hard();
    std::vector<std::string> methods{"noisy", "savgol", "particle"};
    std::string checkpoint;      // model prefix; required by the hpstm methods
    std::string skeleton_path;   // empty -> built-in 24-joint skeleton
    std::size_t stride = 5;
    std::size_t particle_count = 300;
    double particle_process_sigma = 0.02;
    double particle_meas_sigma = 0.03;
    std::uint64_t seed = 0;

    static ExperimentConfig from_json_file(const std::string& path);
    std::string to_json() const;
};

struct MethodResult {
    std::string method;
    MetricReport report;
};

// Known methods: noisy (passthrough), savgol, particle, hpstm (unit fusion
// weights), hpstm+covariance (variance-weighted fusion). Evaluation runs on
// the last 20% of the dataset (the training hold-out convention).
std::vector<MethodResult> run_experiment(const ExperimentConfig& config,
                                         const std::string& out_dir);

// report.csv / report.json / report.md: metrics as rows, methods as columns,
// 4-decimal fixed formatting.
void emit_report(const std::vector<MethodResult>& results, const std::string& out_dir);

}  // namespace esfp
