#include "esfp/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "esfp/baselines.hpp"
#include "esfp/pipeline.hpp"

namespace esfp {

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("experiment: cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    ExperimentConfig c;
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        c.dataset.sequences = d.value("sequences", c.dataset.sequences);
        c.dataset.frames = d.value("frames", c.dataset.frames);
        c.dataset.amplitude_min = d.value("amplitude_min", c.dataset.amplitude_min);
        c.dataset.amplitude_max = d.value("amplitude_max", c.dataset.amplitude_max);
        c.dataset.frequency_min = d.value("frequency_min", c.dataset.frequency_min);
        c.dataset.frequency_max = d.value("frequency_max", c.dataset.frequency_max);
        c.dataset.harmonics = d.value("harmonics", c.dataset.harmonics);
        c.dataset.bone_spread = d.value("bone_spread", c.dataset.bone_spread);
        c.dataset.root_amplitude = d.value("root_amplitude", c.dataset.root_amplitude);
        c.dataset.seed = d.value("seed", c.dataset.seed);
    }
    if (j.contains("profile")) {
        if (j["profile"].is_string())
            c.profile = NoiseProfile::named_or_file(j["profile"].get<std::string>());
        else {
            // inline profile object
            const std::string tmp = (std::filesystem::temp_directory_path() /
                                     "esfp_inline_profile.json").string();
            std::ofstream os(tmp);
            os << j["profile"].dump();
            os.close();
            c.profile = NoiseProfile::from_json_file(tmp);
        }
    }
    if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
    c.checkpoint = j.value("checkpoint", std::string{});
    c.skeleton_path = j.value("skeleton", std::string{});
    c.stride = j.value("stride", c.stride);
    c.particle_count = j.value("particle_count", c.particle_count);
    c.particle_process_sigma = j.value("particle_process_sigma", c.particle_process_sigma);
    c.particle_meas_sigma = j.value("particle_meas_sigma", c.particle_meas_sigma);
    c.seed = j.value("seed", c.seed);
    return c;
}

std::string ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["dataset"] = {{"sequences", dataset.sequences},
                    {"frames", dataset.frames},
                    {"amplitude_min", dataset.amplitude_min},
                    {"amplitude_max", dataset.amplitude_max},
                    {"frequency_min", dataset.frequency_min},
                    {"frequency_max", dataset.frequency_max},
                    {"harmonics", dataset.harmonics},
                    {"bone_spread", dataset.bone_spread},
                    {"root_amplitude", dataset.root_amplitude},
                    {"seed", dataset.seed}};
    j["profile"] = nlohmann::json::parse(profile.to_json());
    j["methods"] = methods;
    j["checkpoint"] = checkpoint;
    j["skeleton"] = skeleton_path;
    j["stride"] = stride;
    j["particle_count"] = particle_count;
    j["particle_process_sigma"] = particle_process_sigma;
    j["particle_meas_sigma"] = particle_meas_sigma;
    j["seed"] = seed;
    return j.dump(2);
}

namespace {

MetricReport average_reports(const std::vector<MetricReport>& reports) {
    MetricReport avg;
    const double n = static_cast<double>(reports.size());
    for (const auto& r : reports) {
        avg.mpjpe_mm += r.mpjpe_mm / n;
        avg.pa_mpjpe_mm += r.pa_mpjpe_mm / n;
        avg.rr_mpjpe_mm += r.rr_mpjpe_mm / n;
        avg.mean_accel += r.mean_accel / n;
        avg.mean_jerk += r.mean_jerk / n;
        avg.bone_mae_mm += r.bone_mae_mm / n;
        avg.bone_stddev_mm += r.bone_stddev_mm / n;
    }
    return avg;
}

}  // namespace

std::vector<MethodResult> run_experiment(const ExperimentConfig& config,
                                         const std::string& out_dir) {
    const SkeletonDefinition skeleton =
        config.skeleton_path.empty() ? default_skeleton24() : load_skeleton(config.skeleton_path);
    SyntheticDatasetSpec spec = config.dataset;
    if (spec.seed == 0) spec.seed = config.seed;
    const auto dataset = generate_synthetic_dataset(spec, skeleton);

    // same hold-out convention as training: the last 20% of sequences
    const std::size_t n_val = std::max<std::size_t>(1, dataset.size() / 5);
    const std::size_t first_val = dataset.size() - n_val;

    std::vector<PoseSequence> clean, noisy;
    for (std::size_t i = first_val; i < dataset.size(); ++i) {
        clean.push_back(dataset[i].positions);
        Rng rng(config.seed ^ (0x51ed2701ull + 97ull * i));
        noisy.push_back(apply_profile(dataset[i].positions, skeleton, config.profile, rng));
    }

    const bool needs_model = std::any_of(config.methods.begin(), config.methods.end(),
                                         [](const std::string& m) {
                                             return m == "hpstm" || m == "hpstm+covariance";
                                         });
    std::optional<HpstmModel> model;
    if (needs_model) {
        if (config.checkpoint.empty())
            throw std::invalid_argument("run_experiment: hpstm methods need --checkpoint");
        model.emplace(HpstmModel::load_from(config.checkpoint, skeleton));
    }

    std::vector<MethodResult> results;
    for (const auto& method : config.methods) {
        std::vector<MetricReport> per_seq;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            PoseSequence smoothed;
            if (method == "noisy") {
                smoothed = noisy[i];
            } else if (method == "savgol") {
                smoothed = savgol_smooth(noisy[i]);
            } else if (method == "particle") {
                Rng rng(config.seed ^ (0x7a11ceull + i));
                smoothed = particle_filter_smooth(noisy[i], config.particle_count,
                                                  config.particle_process_sigma,
                                                  config.particle_meas_sigma, rng);
            } else if (method == "hpstm") {
                smoothed = run_offline(noisy[i], *model, config.stride, false);
            } else if (method == "hpstm+covariance") {
                smoothed = run_offline(noisy[i], *model, config.stride, true);
            } else {
                throw std::invalid_argument("run_experiment: unknown method " + method);
            }
            per_seq.push_back(compute_metrics(smoothed, clean[i], skeleton));
        }
        results.push_back({method, average_reports(per_seq)});
    }

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream cfg(out_dir + "/experiment_config.json");
        cfg << config.to_json() << '\n';
        emit_report(results, out_dir);
    }
    return results;
}

void emit_report(const std::vector<MethodResult>& results, const std::string& out_dir) {
    if (results.empty()) throw std::invalid_argument("emit_report: no results");
    std::filesystem::create_directories(out_dir);
    const std::vector<std::pair<std::string, double MetricReport::*>> rows = {
        {"mpjpe_mm", &MetricReport::mpjpe_mm},
        {"pa_mpjpe_mm", &MetricReport::pa_mpjpe_mm},
        {"rr_mpjpe_mm", &MetricReport::rr_mpjpe_mm},
        {"mean_accel", &MetricReport::mean_accel},
        {"mean_jerk", &MetricReport::mean_jerk},
        {"bone_mae_mm", &MetricReport::bone_mae_mm},
        {"bone_stddev_mm", &MetricReport::bone_stddev_mm}};

    auto fmt = [](double v) {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(4);
        os << v;
        return os.str();
    };

    {
        std::ofstream csv(out_dir + "/report.csv");
        csv << "metric";
        for (const auto& r : results) csv << ',' << r.method;
        csv << '\n';
        for (const auto& [name, field] : rows) {
            csv << name;
            for (const auto& r : results) csv << ',' << fmt(r.report.*field);
            csv << '\n';
        }
    }
    {
        nlohmann::json j;
        for (const auto& r : results) j[r.method] = nlohmann::json::parse(r.report.to_json());
        std::ofstream js(out_dir + "/report.json");
        js << j.dump(2) << '\n';
    }
    {
        std::ofstream md(out_dir + "/report.md");
        md << "| metric |";
        for (const auto& r : results) md << ' ' << r.method << " |";
        md << "\n|---|";
        for (std::size_t i = 0; i < results.size(); ++i) md << "---|";
        md << '\n';
        for (const auto& [name, field] : rows) {
            md << "| " << name << " |";
            for (const auto& r : results) md << ' ' << fmt(r.report.*field) << " |";
            md << '\n';
        }
    }
}

}  // namespace esfp
