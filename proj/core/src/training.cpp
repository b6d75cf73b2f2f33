#include "esfp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace esfp {

void SyntheticDatasetSpec::validate() const {
    if (sequences == 0 || frames == 0) throw std::invalid_argument("dataset spec: empty");
    if (amplitude_min < 0 || amplitude_max < amplitude_min)
        throw std::invalid_argument("dataset spec: bad amplitude range");
    if (amplitude_max > std::numbers::pi)
        throw std::invalid_argument("dataset spec: amplitude beyond pi");
    if (frequency_min <= 0 || frequency_max < frequency_min)
        throw std::invalid_argument("dataset spec: bad frequency range");
    if (bone_spread < 0 || bone_spread >= 1)
        throw std::invalid_argument("dataset spec: bone_spread out of [0, 1)");
    if (harmonics == 0) throw std::invalid_argument("dataset spec: harmonics == 0");
}

namespace {

Vec3 random_unit_axis(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        Vec3 a{n(rng), n(rng), n(rng)};
        const double l = norm(a);
        if (l > 1e-6) return (1.0 / l) * a;
    }
}

struct SinTrack {
    // angle(t) = sum_h amp[h] * sin(2*pi*freq[h]*t + phase[h])
    std::vector<double> amp, freq, phase;
    double eval(double t) const {
        double v = 0;
        for (std::size_t h = 0; h < amp.size(); ++h)
            v += amp[h] * std::sin(2.0 * std::numbers::pi * freq[h] * t + phase[h]);
        return v;
    }
};

SinTrack sample_track(const SyntheticDatasetSpec& spec, double base_amp, Rng& rng) {
    std::uniform_real_distribution<double> uf(spec.frequency_min, spec.frequency_max);
    std::uniform_real_distribution<double> up(0.0, 2.0 * std::numbers::pi);
    SinTrack tr;
    for (std::size_t h = 1; h <= spec.harmonics; ++h) {
        tr.amp.push_back(base_amp / static_cast<double>(h));
        tr.freq.push_back(uf(rng));
        tr.phase.push_back(up(rng));
    }
    return tr;
}

}  // namespace

std::vector<SyntheticSequence> generate_synthetic_dataset(const SyntheticDatasetSpec& spec,
                                                          const SkeletonDefinition& skeleton) {
    spec.validate();
    const std::size_t joints = skeleton.joint_count();
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> uamp(spec.amplitude_min, spec.amplitude_max);
    std::uniform_real_distribution<double> uspread(-spec.bone_spread, spec.bone_spread);
    std::uniform_real_distribution<double> uroot(0.2, 1.0);
    std::uniform_real_distribution<double> urootf(0.002, 0.02);
    std::uniform_real_distribution<double> uphase(0.0, 2.0 * std::numbers::pi);

    std::vector<SyntheticSequence> out;
    out.reserve(spec.sequences);
    for (std::size_t s = 0; s < spec.sequences; ++s) {
        // per-subject bone lengths around canonical
        std::vector<double> bones(joints, 0.0);
        for (std::size_t j = 0; j < joints; ++j)
            if (!skeleton.is_root(j))
                bones[j] = skeleton.canonical_lengths()[j] * (1.0 + uspread(rng));

        // one fixed rotation axis + angle track per joint (root included)
        std::vector<Vec3> axes(joints);
        std::vector<SinTrack> tracks(joints);
        for (std::size_t j = 0; j < joints; ++j) {
            axes[j] = random_unit_axis(rng);
            const double amp = skeleton.is_root(j) ? 0.3 * uamp(rng) : uamp(rng);
            tracks[j] = sample_track(spec, amp, rng);
        }
        // smooth low-frequency root translation, two sinusoids per axis
        SinTrack root_xyz[3];
        for (auto& tr : root_xyz) {
            for (int h = 0; h < 2; ++h) {
                tr.amp.push_back(spec.root_amplitude * uroot(rng) / (h + 1));
                tr.freq.push_back(urootf(rng));
                tr.phase.push_back(uphase(rng));
            }
        }

        SyntheticSequence seq;
        seq.positions = PoseSequence(spec.frames, joints);
        seq.params.reserve(spec.frames);
        for (std::size_t t = 0; t < spec.frames; ++t) {
            PoseParameters p;
            const double tt = static_cast<double>(t);
            p.root_translation = {root_xyz[0].eval(tt), root_xyz[1].eval(tt),
                                  root_xyz[2].eval(tt)};
            p.root_orientation =
                Quaternion::from_axis_angle(axes[skeleton.root()],
                                            tracks[skeleton.root()].eval(tt));
            for (std::size_t j = 0; j < joints; ++j)
                if (!skeleton.is_root(j))
                    p.local_rotations.push_back(
                        Quaternion::from_axis_angle(axes[j], tracks[j].eval(tt)));
            p.bone_lengths = bones;
            const std::vector<Vec3> pos = forward_kinematics(skeleton, p);
            for (std::size_t j = 0; j < joints; ++j) seq.positions.set_joint(t, j, pos[j]);
            seq.params.push_back(std::move(p));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

AdamW::AdamW(ad::ParameterStore& store, AdamWConfig config)
    : store_(&store), config_(config) {}

void AdamW::step() {
    for (const auto& p : store_->all()) {
        const ad::Tensor& g = p.node->grad;
        if (g.size() != p.node->value.size() || !g.all_finite()) {
            ++skipped_;
            return;
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (auto& p : store_->all()) {
        const double* g = p.node->grad.data();
        double* w = p.node->value.data();
        double* m = p.m.data();
        double* v = p.v.data();
        const std::size_t n = p.node->value.size();
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= config_.lr * config_.weight_decay * w[i];  // decoupled decay
            w[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

void AdamW::reset(double lr) {
    config_.lr = lr;
    t_ = 0;
    for (auto& p : store_->all()) {
        p.m = ad::Tensor(p.node->value.shape());
        p.v = ad::Tensor(p.node->value.shape());
    }
}

double PlateauScheduler::step(double validation_loss) {
    if (!has_best || validation_loss < best - min_delta) {
        best = std::min(validation_loss, has_best ? best : validation_loss);
        has_best = true;
        bad_evals = 0;
    } else {
        ++bad_evals;
        if (bad_evals >= patience) {
            lr = std::max(lr * factor, lr_min);
            bad_evals = 0;
        }
    }
    return lr;
}

void CurriculumConfig::validate() const {
    if (lr_stage12 <= 0 || lr_stage3 <= 0)
        throw std::invalid_argument("curriculum: learning rates must be > 0");
    if (batch_size == 0) throw std::invalid_argument("curriculum: batch_size == 0");
    stage2_profile.validate();
}

namespace {

using ad::Tensor;
using ad::Value;

// Copies a T-frame crop of `seq` into the batch tensor at row b.
void fill_crop(Tensor& dst, std::size_t b, const PoseSequence& seq, std::size_t start,
               std::size_t window) {
    const std::size_t joints = seq.joints;
    double* base = dst.data() + b * window * joints * 3;
    for (std::size_t t = 0; t < window; ++t)
        for (std::size_t j = 0; j < joints; ++j)
            for (std::size_t d = 0; d < 3; ++d)
                base[(t * joints + j) * 3 + d] = seq.at(start + t, j, d);
}

struct BatchLossOut {
    Value total;
};

BatchLossOut batch_loss(HpstmModel& model, const Tensor& noisy, const Tensor& clean, int stage,
                        const LossWeights& weights, bool training, std::mt19937_64* rng) {
    const auto& cfg = model.config();
    const Value input = Value::constant(noisy);
    const Value gt = Value::constant(clean);
    const auto fwd = model.forward(input, /*with_cov=*/stage == 3, training, rng);

    lossgraph::StageComponents c;
    c.pos = lossgraph::loss_position(fwd.positions, gt);
    if (stage >= 2) {
        std::vector<double> canon = model.skeleton().canonical_lengths();
        c.bone = lossgraph::loss_bone(
            fwd.bones, Value::constant(Tensor({cfg.joints}, std::move(canon))));
        c.vel = lossgraph::loss_velocity(fwd.positions, gt);
        c.accel = lossgraph::loss_acceleration(fwd.positions, gt);
    }
    if (stage == 3) c.nll = lossgraph::loss_nll(fwd.positions, gt, fwd.cov_diag, fwd.cov_lower);
    BatchLossOut out;
    out.total = lossgraph::loss_total(stage, c, weights);
    return out;
}

}  // namespace

TrainResult run_curriculum(const CurriculumConfig& config,
                           const std::vector<SyntheticSequence>& dataset, HpstmModel& model,
                           const std::string& artifact_dir) {
    config.validate();
    const std::size_t window = model.config().window;
    const std::size_t joints = model.config().joints;
    if (dataset.empty()) throw std::invalid_argument("run_curriculum: empty dataset");
    for (const auto& s : dataset) {
        if (s.positions.frames < window)
            throw std::invalid_argument("run_curriculum: sequence shorter than window");
        if (s.positions.joints != joints)
            throw std::invalid_argument("run_curriculum: joint count mismatch");
    }
    // fixed 80/20 split by sequence index
    const std::size_t n_val = std::max<std::size_t>(1, dataset.size() / 5);
    const std::size_t n_train = dataset.size() - n_val;
    if (n_train == 0) throw std::invalid_argument("run_curriculum: no training sequences");

    if (!artifact_dir.empty()) std::filesystem::create_directories(artifact_dir);

    TrainResult result;
    AdamW opt(model.parameters(), AdamWConfig{config.lr_stage12});
    std::mt19937_64 sample_rng(config.seed);
    std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ull);

    for (int stage = 1; stage <= 3; ++stage) {
        if (stage == 2 && config.reinit_optimizer_stage2) opt.reset(config.lr_stage12);
        if (stage == 3) opt.reset(config.lr_stage3);
        PlateauScheduler sched;
        sched.factor = config.plateau_factor;
        sched.patience = config.plateau_patience;
        sched.min_delta = config.plateau_min_delta;
        sched.lr_min = config.lr_min;
        sched.lr = opt.lr();

        const std::size_t epochs = config.epochs[static_cast<std::size_t>(stage - 1)];
        for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
            const auto wall_start = std::chrono::steady_clock::now();

            // fresh corruption every epoch; validation corruption is fixed per
            // stage so epochs stay comparable
            std::vector<PoseSequence> noisy_train(n_train);
            for (std::size_t i = 0; i < n_train; ++i) {
                if (stage == 1) {
                    noisy_train[i] = dataset[i].positions;
                } else {
                    Rng crng(config.seed + 1000003ull * static_cast<std::uint64_t>(stage) +
                             7919ull * epoch + i);
                    noisy_train[i] = apply_profile(dataset[i].positions, model.skeleton(),
                                                   config.stage2_profile, crng);
                }
            }

            const std::size_t batches = std::max<std::size_t>(
                1, n_train * config.crops_per_sequence / config.batch_size);
            double train_loss_sum = 0;
            std::uniform_int_distribution<std::size_t> pick_seq(0, n_train - 1);
            for (std::size_t b = 0; b < batches; ++b) {
                Tensor noisy({config.batch_size, window, joints, 3});
                Tensor clean({config.batch_size, window, joints, 3});
                for (std::size_t k = 0; k < config.batch_size; ++k) {
                    const std::size_t si = pick_seq(sample_rng);
                    const std::size_t max_start = dataset[si].positions.frames - window;
                    std::uniform_int_distribution<std::size_t> pick_start(0, max_start);
                    const std::size_t start = pick_start(sample_rng);
                    fill_crop(noisy, k, noisy_train[si], start, window);
                    fill_crop(clean, k, dataset[si].positions, start, window);
                }
                const auto out = batch_loss(model, noisy, clean, stage, config.weights, true,
                                            &dropout_rng);
                const double loss = out.total.val().item();
                if (!std::isfinite(loss)) {
                    std::ostringstream os;
                    os << "run_curriculum: non-finite loss at stage " << stage << " epoch "
                       << epoch << " batch " << b;
                    throw std::runtime_error(os.str());
                }
                model.parameters().zero_grads();
                ad::backward(out.total);
                opt.step();
                train_loss_sum += loss;
            }

            // validation on the held-out tail, deterministic crops
            double val_loss_sum = 0;
            std::size_t val_windows = 0;
            for (std::size_t i = n_train; i < dataset.size(); ++i) {
                PoseSequence vin = dataset[i].positions;
                if (stage >= 2) {
                    Rng vrng(config.seed ^ (0xabcdef12345ull + 31ull * i +
                                            static_cast<std::uint64_t>(stage)));
                    vin = apply_profile(vin, model.skeleton(), config.stage2_profile, vrng);
                }
                for (std::size_t start = 0; start + window <= vin.frames; start += window) {
                    Tensor noisy({1, window, joints, 3});
                    Tensor clean({1, window, joints, 3});
                    fill_crop(noisy, 0, vin, start, window);
                    fill_crop(clean, 0, dataset[i].positions, start, window);
                    const auto out =
                        batch_loss(model, noisy, clean, stage, config.weights, false, nullptr);
                    val_loss_sum += out.total.val().item();
                    ++val_windows;
                }
            }
            const double val_loss =
                val_windows ? val_loss_sum / static_cast<double>(val_windows) : 0.0;
            opt.set_lr(sched.step(val_loss));

            EpochLog entry;
            entry.stage = stage;
            entry.epoch = epoch;
            entry.train_loss = train_loss_sum / static_cast<double>(batches);
            entry.val_loss = val_loss;
            entry.lr = opt.lr();
            entry.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
                    .count();
            result.log.push_back(entry);
        }
        if (!artifact_dir.empty() && epochs > 0)
            model.save(artifact_dir + "/stage" + std::to_string(stage));
    }
    result.skipped_steps = opt.skipped_steps();
    if (!artifact_dir.empty()) write_training_log(result.log, artifact_dir + "/training_log.csv");
    return result;
}

void write_training_log(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_training_log: cannot write " + path);
    os << "stage,epoch,train_loss,val_loss,lr,wall_seconds\n";
    for (const auto& e : log)
        os << e.stage << ',' << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ','
           << e.lr << ',' << e.wall_seconds << '\n';
}

}  // namespace esfp
