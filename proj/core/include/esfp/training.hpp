#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "esfp/corruption.hpp"
#include "esfp/losses.hpp"
#include "esfp/model.hpp"
#include "esfp/pose.hpp"

namespace esfp {

// Procedural motion generator: per-subject bone lengths, sum-of-sinusoid
// joint angle tracks about fixed random axes, a smooth root trajectory, FK
// decode. Ground truth therefore lies exactly on the kinematic manifold.
struct SyntheticDatasetSpec {
    std::size_t sequences = 200;
    std::size_t frames = 90;
    double amplitude_min = 0.05;   // rad
    double amplitude_max = 0.5;    // rad, must stay within +-pi
    double frequency_min = 0.01;   // cycles per frame
    double frequency_max = 0.08;
    std::size_t harmonics = 3;
    double bone_spread = 0.10;     // relative, +-10% around canonical
    double root_amplitude = 0.3;   // m
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticSequence {
    PoseSequence positions;
    std::vector<PoseParameters> params;  // one per frame
};

std::vector<SyntheticSequence> generate_synthetic_dataset(const SyntheticDatasetSpec& spec,
                                                          const SkeletonDefinition& skeleton);

// AdamW with decoupled weight decay and bias correction. Gradients are read
// from the parameter nodes; a non-finite gradient anywhere skips the whole
// step and increments skipped_steps.
struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

class AdamW {
public:
    AdamW(ad::ParameterStore& store, AdamWConfig config);

    void step();
    void reset(double lr);  // fresh moments + step counter

    double lr() const { return config_.lr; }
    void set_lr(double lr) { config_.lr = lr; }
    std::size_t steps_taken() const { return t_; }
    std::size_t skipped_steps() const { return skipped_; }

private:
    ad::ParameterStore* store_;
    AdamWConfig config_;
    std::size_t t_ = 0;
    std::size_t skipped_ = 0;
};

// Reduce-on-plateau: lr *= factor after `patience` consecutive evaluations
// without an improvement larger than min_delta; floored at lr_min.
struct PlateauScheduler {
    double factor = 0.5;
    std::size_t patience = 3;
    double min_delta = 1e-5;
    double lr_min = 1e-7;

    double lr = 1e-4;
    double best = 0;
    bool has_best = false;
    std::size_t bad_evals = 0;

    double step(double validation_loss);
};

struct CurriculumConfig {
    std::array<std::size_t, 3> epochs{5, 5, 5};
    double lr_stage12 = 1e-4;
    double lr_stage3 = 1e-5;
    double plateau_factor = 0.5;
    std::size_t plateau_patience = 3;
    double plateau_min_delta = 1e-5;
    double lr_min = 1e-7;
    std::size_t batch_size = 16;
    // random window crops drawn per training sequence each epoch; scales the
    // number of optimizer steps per epoch
    std::size_t crops_per_sequence = 8;
    std::uint64_t seed = 0;
    bool reinit_optimizer_stage2 = false;  // stage 3 always re-initializes
    NoiseProfile stage2_profile = NoiseProfile::stage2();
    LossWeights weights;

    void validate() const;
};

struct EpochLog {
    int stage = 0;
    std::size_t epoch = 0;  // within stage
    double train_loss = 0;
    double val_loss = 0;
    double lr = 0;
    double wall_seconds = 0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    std::size_t skipped_steps = 0;
};

// Three-stage schedule: clean position-only pre-training; noise-aware
// refinement with bone/velocity/acceleration terms; covariance fine-tuning
// with the NLL term and a re-initialized optimizer. Validation uses the last
// 20% of sequences (split by index). If artifact_dir is non-empty, writes
// training_log.csv and a checkpoint per stage.
TrainResult run_curriculum(const CurriculumConfig& config,
                           const std::vector<SyntheticSequence>& dataset, HpstmModel& model,
                           const std::string& artifact_dir = "");

// CSV columns: stage,epoch,train_loss,val_loss,lr,wall_seconds.
void write_training_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace esfp
