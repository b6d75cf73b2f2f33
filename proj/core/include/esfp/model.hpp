#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "esfp/fk_graph.hpp"
#include "esfp/losses.hpp"
#include "esfp/params.hpp"
#include "esfp/pose.hpp"

namespace esfp {

struct ModelConfig {
    std::size_t window = 31;
    std::size_t joints = 24;
    std::size_t d_model = 128;
    std::size_t heads = 4;
    std::size_t encoder_layers = 3;
    std::size_t decoder_layers = 3;
    std::size_t ff_width = 256;
    double dropout = 0.1;
    bool covariance_head = true;
    std::string activation = "gelu";  // "gelu" or "relu"

    void validate() const;

    // Small configuration for CPU-scale runs and gradient checks.
    static ModelConfig desk(std::size_t joints = 24);

    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// One smoothed window: FK-decoded positions, the manifold parameters that
// produced them, and (optionally) per-joint covariance Cholesky factors.
struct SmoothedWindow {
    PoseSequence positions;
    std::vector<PoseParameters> params;
    std::optional<CovarianceFactors> cov;
};

// Sinusoidal positional encoding, (frames, d).
ad::Tensor positional_encoding(std::size_t frames, std::size_t d);

// Encoder-decoder attention smoother with FK decode and optional covariance
// head. Weights live in an ordered ParameterStore (the checkpoint layout).
class HpstmModel {
public:
    HpstmModel(ModelConfig config, SkeletonDefinition skeleton, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    const SkeletonDefinition& skeleton() const { return skeleton_; }
    ad::ParameterStore& parameters() { return params_; }
    const ad::ParameterStore& parameters() const { return params_; }

    struct ForwardOut {
        ad::Value positions;  // (B, T, J, 3)
        ad::Value root_t;     // (B, T, 3)
        ad::Value quats;      // (B, T, J, 4), rows unit-norm
        ad::Value bones;      // (B, T, J), root slot 0, others > 0
        ad::Value cov_diag;   // (B, T, J, 3), set when with_cov
        ad::Value cov_lower;  // (B, T, J, 3), set when with_cov
    };

    // Builds the forward graph over an input window batch (B, T, J, 3).
    // `rng` supplies dropout masks and may be null for inference.
    ForwardOut forward(const ad::Value& input, bool with_cov, bool training = false,
                       std::mt19937_64* rng = nullptr) const;

    // Input embedding alone: (B, T, J*3) -> (B, T, d) linear map plus
    // positional encoding.
    ad::Value embed_window(const ad::Value& flat_input) const;

    // Inference convenience over one window (B = 1).
    SmoothedWindow smooth_window(const PoseSequence& window) const;

    // Covariance-head evaluation counter (curriculum stage instrumentation).
    std::size_t covariance_head_evals() const { return cov_evals_; }
    void reset_covariance_counter() { cov_evals_ = 0; }

    void save(const std::string& path_prefix) const;   // checkpoint + config sidecar
    void load(const std::string& path_prefix);
    static HpstmModel load_from(const std::string& path_prefix, SkeletonDefinition skeleton);

private:
    void build_parameters(std::uint64_t seed);
    ad::Value attention(const ad::Value& x, const ad::Value& memory, const std::string& prefix,
                        bool training, std::mt19937_64* rng) const;
    ad::Value ffn(const ad::Value& x, const std::string& prefix) const;
    ad::Value dropout_mask(const ad::Value& x, bool training, std::mt19937_64* rng) const;
    ad::Value linear(const ad::Value& x, const std::string& name) const;
    ad::Value lnorm(const ad::Value& x, const std::string& name) const;

    ModelConfig config_;
    SkeletonDefinition skeleton_;
    ad::ParameterStore params_;
    ad::Tensor pos_encoding_;
    mutable std::size_t cov_evals_ = 0;
};

}  // namespace esfp
