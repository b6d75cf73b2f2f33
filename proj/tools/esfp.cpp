// Command-line front end: dataset generation, corruption, training,
// smoothing, evaluation, retargeting, streaming pipeline and full
// experiment runs over the documented file formats.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "esfp/baselines.hpp"
#include "esfp/corruption.hpp"
#include "esfp/experiment.hpp"
#include "esfp/metrics.hpp"
#include "esfp/model.hpp"
#include "esfp/pipeline.hpp"
#include "esfp/retarget.hpp"
#include "esfp/training.hpp"

namespace fs = std::filesystem;
using namespace esfp;

namespace {

void write_run_info(const std::string& dir, std::uint64_t seed) {
    nlohmann::json j = {{"seed", seed}};
    std::ofstream os(dir + "/run_info.json");
    os << j.dump(2) << '\n';
}

SkeletonDefinition skeleton_or_default(const std::string& path) {
    return path.empty() ? default_skeleton24() : load_skeleton(path);
}

std::size_t joint_by_name(const SkeletonDefinition& sk, const std::string& name) {
    const auto& names = sk.joint_names();
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return j;
    throw std::invalid_argument("unknown joint name: " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"esfp: pose sequence smoothing, evaluation and retargeting"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    // ESFP_THREADS=1 is the deterministic reference mode; all computation here
    // is single-threaded, so any other value is accepted but has no effect.
    if (const char* threads = std::getenv("ESFP_THREADS"); threads && std::string(threads) != "1")
        std::cerr << "note: ESFP_THREADS ignored, running single-threaded\n";

    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::string config_path;
    std::string skeleton_path;
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--skeleton", skeleton_path, "skeleton JSON (default: built-in 24 joints)");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic clean dataset");
    std::size_t gen_count = 200, gen_frames = 90;
    gen->add_option("--count", gen_count, "sequences")->capture_default_str();
    gen->add_option("--frames", gen_frames, "frames per sequence")->capture_default_str();

    // corrupt
    auto* corrupt = app.add_subcommand("corrupt", "apply a noise profile to a pose sequence");
    std::string in_prefix, profile_name = "stage2";
    corrupt->add_option("--in", in_prefix, "input pose prefix (.json/.bin)")->required();
    corrupt->add_option("--profile", profile_name, "stage2 | eval-hard | <json path>")
        ->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "run the three-stage curriculum");
    std::string preset = "desk";
    std::size_t train_count = 200, train_frames = 90;
    std::size_t crops = 8;
    double amp_max = 0.5, freq_max = 0.08;
    std::string epochs_arg;
    train->add_option("--preset", preset, "desk | paper")->capture_default_str();
    train->add_option("--count", train_count, "training sequences")->capture_default_str();
    train->add_option("--frames", train_frames, "frames per sequence")->capture_default_str();
    train->add_option("--crops", crops, "window crops per sequence per epoch")
        ->capture_default_str();
    train->add_option("--amp-max", amp_max, "max joint angle amplitude, rad")
        ->capture_default_str();
    train->add_option("--freq-max", freq_max, "max angle frequency, cycles/frame")
        ->capture_default_str();
    train->add_option("--epochs", epochs_arg, "a,b,c epochs per stage");
    double lr12 = 1e-4;
    train->add_option("--lr", lr12, "stage 1-2 learning rate")->capture_default_str();

    // smooth
    auto* smooth = app.add_subcommand("smooth", "smooth a pose sequence file");
    std::string method = "hpstm", checkpoint;
    std::size_t stride = 5;
    smooth->add_option("--in", in_prefix, "input pose prefix")->required();
    smooth->add_option("--method", method, "hpstm | hpstm+covariance | savgol | particle")
        ->capture_default_str();
    smooth->add_option("--checkpoint", checkpoint, "model checkpoint prefix");
    smooth->add_option("--stride", stride, "window stride")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "score a prediction against ground truth");
    std::string pred_prefix, gt_prefix;
    eval->add_option("--pred", pred_prefix, "prediction pose prefix")->required();
    eval->add_option("--gt", gt_prefix, "ground-truth pose prefix")->required();

    // retarget
    auto* retarget = app.add_subcommand("retarget", "map a pose sequence to robot commands");
    std::string shoulder_name = "right_shoulder", elbow_name = "right_elbow",
                wrist_name = "right_wrist";
    retarget->add_option("--in", in_prefix, "input pose prefix")->required();
    retarget->add_option("--shoulder", shoulder_name)->capture_default_str();
    retarget->add_option("--elbow", elbow_name)->capture_default_str();
    retarget->add_option("--wrist", wrist_name)->capture_default_str();

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "streaming smooth + retarget");
    pipeline->add_option("--in", in_prefix, "input pose prefix")->required();
    pipeline->add_option("--checkpoint", checkpoint, "model checkpoint prefix")->required();
    pipeline->add_option("--stride", stride, "window stride")->capture_default_str();

    // experiment
    auto* experiment = app.add_subcommand("experiment", "full multi-method evaluation run");
    experiment->add_option("--checkpoint", checkpoint, "model checkpoint prefix");
    experiment->add_option("--profile", profile_name, "noise profile")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out_dir);
        const SkeletonDefinition skeleton = skeleton_or_default(skeleton_path);

        if (*gen) {
            SyntheticDatasetSpec spec;
            spec.sequences = gen_count;
            spec.frames = gen_frames;
            spec.seed = seed;
            const auto data = generate_synthetic_dataset(spec, skeleton);
            for (std::size_t i = 0; i < data.size(); ++i)
                save_pose_sequence(data[i].positions,
                                   out_dir + "/seq" + std::to_string(i));
            save_skeleton(skeleton, out_dir + "/skeleton.json");
        } else if (*corrupt) {
            PoseSequence seq = load_pose_sequence(in_prefix);
            NoiseProfile profile = NoiseProfile::named_or_file(profile_name);
            profile.seed = seed;
            save_pose_sequence(apply_profile(seq, skeleton, profile), out_dir + "/corrupted");
            std::ofstream os(out_dir + "/profile.json");
            os << profile.to_json() << '\n';
        } else if (*train) {
            SyntheticDatasetSpec spec;
            spec.sequences = train_count;
            spec.frames = train_frames;
            spec.amplitude_max = amp_max;
            spec.frequency_max = freq_max;
            spec.seed = seed;
            const auto data = generate_synthetic_dataset(spec, skeleton);
            ModelConfig mc = preset == "paper" ? ModelConfig{} : ModelConfig::desk();
            mc.joints = skeleton.joint_count();
            HpstmModel model(mc, skeleton, seed);
            CurriculumConfig cc;
            cc.seed = seed;
            cc.crops_per_sequence = crops;
            cc.lr_stage12 = lr12;
            if (preset == "paper") cc.epochs = {10, 10, 10};
            if (!epochs_arg.empty()) {
                std::istringstream es(epochs_arg);
                char comma;
                es >> cc.epochs[0] >> comma >> cc.epochs[1] >> comma >> cc.epochs[2];
            }
            run_curriculum(cc, data, model, out_dir);
            model.save(out_dir + "/model");
        } else if (*smooth) {
            PoseSequence seq = load_pose_sequence(in_prefix);
            PoseSequence result;
            if (method == "savgol") {
                result = savgol_smooth(seq);
            } else if (method == "particle") {
                Rng rng(seed);
                const ExperimentConfig pf_defaults;
                result = particle_filter_smooth(seq, pf_defaults.particle_count,
                                                pf_defaults.particle_process_sigma,
                                                pf_defaults.particle_meas_sigma, rng);
            } else if (method == "hpstm" || method == "hpstm+covariance") {
                if (checkpoint.empty())
                    throw std::invalid_argument("smooth: --checkpoint required for hpstm");
                HpstmModel model = HpstmModel::load_from(checkpoint, skeleton);
                result = run_offline(seq, model, stride, method == "hpstm+covariance");
            } else {
                throw std::invalid_argument("smooth: unknown method " + method);
            }
            save_pose_sequence(result, out_dir + "/smoothed");
        } else if (*eval) {
            const PoseSequence pred = load_pose_sequence(pred_prefix);
            const PoseSequence gt = load_pose_sequence(gt_prefix);
            const MetricReport report = compute_metrics(pred, gt, skeleton);
            std::ofstream csv(out_dir + "/metrics.csv");
            csv << MetricReport::csv_header() << '\n' << report.to_csv_row() << '\n';
            std::ofstream js(out_dir + "/metrics.json");
            js << report.to_json() << '\n';
            std::cout << report.to_json() << '\n';
        } else if (*retarget) {
            const PoseSequence seq = load_pose_sequence(in_prefix);
            RetargetConfig rc =
                config_path.empty() ? RetargetConfig{} : RetargetConfig::from_json_file(config_path);
            Retargeter mapper(rc);
            const std::size_t js = joint_by_name(skeleton, shoulder_name);
            const std::size_t je = joint_by_name(skeleton, elbow_name);
            const std::size_t jw = joint_by_name(skeleton, wrist_name);
            for (std::size_t t = 0; t < seq.frames; ++t)
                mapper.push({seq.joint(t, js), seq.joint(t, je), seq.joint(t, jw)});
            mapper.write_log_jsonl(out_dir + "/commands.jsonl");
        } else if (*pipeline) {
            const PoseSequence seq = load_pose_sequence(in_prefix);
            HpstmModel model = HpstmModel::load_from(checkpoint, skeleton);
            StreamingSmoother sm(model, stride);
            RetargetConfig rc =
                config_path.empty() ? RetargetConfig{} : RetargetConfig::from_json_file(config_path);
            Retargeter mapper(rc);
            const std::size_t js = joint_by_name(skeleton, "right_shoulder");
            const std::size_t je = joint_by_name(skeleton, "right_elbow");
            const std::size_t jw = joint_by_name(skeleton, "right_wrist");
            PoseSequence out(seq.frames, seq.joints);
            auto consume = [&](const std::vector<FusedFrame>& frames) {
                for (const auto& f : frames) {
                    for (std::size_t j = 0; j < seq.joints; ++j)
                        out.set_joint(f.index, j, f.positions[j]);
                    mapper.push({f.positions[js], f.positions[je], f.positions[jw]});
                }
            };
            std::vector<Vec3> frame(seq.joints);
            for (std::size_t t = 0; t < seq.frames; ++t) {
                for (std::size_t j = 0; j < seq.joints; ++j) frame[j] = seq.joint(t, j);
                consume(sm.push(frame));
            }
            consume(sm.flush());
            save_pose_sequence(out, out_dir + "/smoothed");
            mapper.write_log_jsonl(out_dir + "/commands.jsonl");
        } else if (*experiment) {
            ExperimentConfig ec = config_path.empty() ? ExperimentConfig{}
                                                      : ExperimentConfig::from_json_file(config_path);
            if (ec.seed == 0) ec.seed = seed;
            if (!checkpoint.empty()) ec.checkpoint = checkpoint;
            if (config_path.empty()) ec.profile = NoiseProfile::named_or_file(profile_name);
            run_experiment(ec, out_dir);
        }
        write_run_info(out_dir, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
