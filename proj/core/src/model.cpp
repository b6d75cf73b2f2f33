#include "esfp/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace esfp {

using ad::Tensor;
using ad::Value;

void ModelConfig::validate() const {
    if (d_model % heads != 0) throw std::invalid_argument("ModelConfig: d_model % heads != 0");
    if (window < 3) throw std::invalid_argument("ModelConfig: window must be >= 3");
    if (joints < 1 || d_model < 1 || heads < 1 || encoder_layers < 1 || decoder_layers < 1)
        throw std::invalid_argument("ModelConfig: sizes must be positive");
    if (dropout < 0 || dropout >= 1) throw std::invalid_argument("ModelConfig: bad dropout");
    if (activation != "gelu" && activation != "relu")
        throw std::invalid_argument("ModelConfig: activation must be gelu or relu");
}

ModelConfig ModelConfig::desk(std::size_t joints) {
    ModelConfig c;
    c.window = 31;
    c.joints = joints;
    c.d_model = 32;
    c.heads = 2;
    c.encoder_layers = 2;
    c.decoder_layers = 2;
    c.ff_width = 64;
    c.dropout = 0.0;
    return c;
}

std::string ModelConfig::to_json() const {
    nlohmann::json j = {{"window", window},
                        {"joints", joints},
                        {"d_model", d_model},
                        {"heads", heads},
                        {"encoder_layers", encoder_layers},
                        {"decoder_layers", decoder_layers},
                        {"ff_width", ff_width},
                        {"dropout", dropout},
                        {"covariance_head", covariance_head},
                        {"activation", activation}};
    return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ModelConfig c;
    c.window = j.at("window").get<std::size_t>();
    c.joints = j.at("joints").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.encoder_layers = j.at("encoder_layers").get<std::size_t>();
    c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
    c.ff_width = j.at("ff_width").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.covariance_head = j.at("covariance_head").get<bool>();
    c.activation = j.at("activation").get<std::string>();
    c.validate();
    return c;
}

Tensor positional_encoding(std::size_t frames, std::size_t d) {
    Tensor pe({frames, d});
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, -(double)(2 * (i / 2)) / (double)d);
            const double angle = (double)t * rate;
            pe.at({t, i}) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return pe;
}

namespace {

Tensor xavier(std::size_t in, std::size_t out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (double)(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t({in, out});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
    return t;
}

double inv_softplus(double y) {
    // softplus(x) = y  =>  x = log(exp(y) - 1)
    if (y > 30.0) return y;
    return std::log(std::expm1(std::max(y, 1e-4)));
}

}  // namespace

HpstmModel::HpstmModel(ModelConfig config, SkeletonDefinition skeleton, std::uint64_t seed)
    : config_(std::move(config)), skeleton_(std::move(skeleton)) {
    config_.validate();
    if (skeleton_.joint_count() != config_.joints)
        throw std::invalid_argument("HpstmModel: skeleton joint count mismatch");
    pos_encoding_ = positional_encoding(config_.window, config_.d_model);
    build_parameters(seed);
}

void HpstmModel::build_parameters(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t d = config_.d_model;
    const std::size_t j = config_.joints;
    const std::size_t t = config_.window;
    const std::size_t ff = config_.ff_width;

    auto add_linear = [&](const std::string& name, std::size_t in, std::size_t out) {
        params_.add(name + ".W", xavier(in, out, rng));
        params_.add(name + ".b", Tensor({out}));
    };
    auto add_lnorm = [&](const std::string& name) {
        params_.add(name + ".g", Tensor::full({d}, 1.0));
        params_.add(name + ".b", Tensor({d}));
    };
    auto add_attn = [&](const std::string& prefix) {
        add_linear(prefix + ".q", d, d);
        add_linear(prefix + ".k", d, d);
        add_linear(prefix + ".v", d, d);
        add_linear(prefix + ".o", d, d);
    };

    add_linear("embed", j * 3, d);
    for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
        const std::string p = "enc" + std::to_string(l);
        add_lnorm(p + ".ln1");
        add_attn(p + ".attn");
        add_lnorm(p + ".ln2");
        add_linear(p + ".ffn.1", d, ff);
        add_linear(p + ".ffn.2", ff, d);
    }
    add_lnorm("enc.final_ln");

    {
        std::normal_distribution<double> n(0.0, 0.02);
        Tensor q({t, d});
        for (std::size_t i = 0; i < q.size(); ++i) q[i] = n(rng);
        params_.add("dec.queries", std::move(q));
    }
    for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
        const std::string p = "dec" + std::to_string(l);
        add_lnorm(p + ".ln1");
        add_attn(p + ".self");
        add_lnorm(p + ".ln2");
        add_attn(p + ".cross");
        add_lnorm(p + ".ln3");
        add_linear(p + ".ffn.1", d, ff);
        add_linear(p + ".ffn.2", ff, d);
    }
    add_lnorm("dec.final_ln");

    add_linear("head.root", d, 3);
    add_linear("head.quat", d, 4 * j);
    add_linear("head.bone", d, j);
    add_linear("head.cov", d, 6 * j);

    // Biased starts: identity rotations, canonical bone lengths, moderate
    // initial uncertainty. Keeps the FK decode well-conditioned from step 0.
    {
        Tensor& qb = params_.at("head.quat.b").node->value;
        for (std::size_t k = 0; k < j; ++k) qb[4 * k] = 1.0;
        Tensor& bb = params_.at("head.bone.b").node->value;
        const auto& canon = skeleton_.canonical_lengths();
        for (std::size_t k = 0; k < j; ++k)
            bb[k] = inv_softplus(std::max(canon[k], 0.05));
        Tensor& cb = params_.at("head.cov.b").node->value;
        for (std::size_t k = 0; k < j; ++k)
            for (std::size_t m = 0; m < 3; ++m) cb[6 * k + m] = std::log(0.05);
        // Nearly-zero weights keep the initial factors close to the bias:
        // isotropic sigma with tiny off-diagonals. A full-scale random init
        // makes the off-diagonal entries dwarf the 0.05 diagonal, so the NLL
        // starts badly conditioned and its gradients swamp the position terms
        // when the uncertainty stage begins.
        Tensor& cw = params_.at("head.cov.W").node->value;
        for (std::size_t i = 0; i < cw.size(); ++i) cw[i] *= 0.01;
    }
}

Value HpstmModel::linear(const Value& x, const std::string& name) const {
    Value w(params_.at(name + ".W").node);
    Value b(params_.at(name + ".b").node);
    return ad::matmul(x, w) + b;
}

Value HpstmModel::lnorm(const Value& x, const std::string& name) const {
    Value g(params_.at(name + ".g").node);
    Value b(params_.at(name + ".b").node);
    return ad::layer_norm(x, g, b);
}

Value HpstmModel::dropout_mask(const Value& x, bool training, std::mt19937_64* rng) const {
    if (!training || config_.dropout <= 0.0 || rng == nullptr) return x;
    const double keep = 1.0 - config_.dropout;
    std::bernoulli_distribution b(keep);
    Tensor mask(x.val().shape());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = b(*rng) ? 1.0 / keep : 0.0;
    return ad::mul(x, Value::constant(std::move(mask)));
}

Value HpstmModel::attention(const Value& x, const Value& memory, const std::string& prefix,
                            bool, std::mt19937_64*) const {
    const std::size_t b = x.val().shape()[0];
    const std::size_t t = x.val().shape()[1];
    const std::size_t s = memory.val().shape()[1];
    const std::size_t d = config_.d_model;
    const std::size_t h = config_.heads;
    const std::size_t dh = d / h;

    auto split = [&](const Value& v, std::size_t len) {
        return ad::transpose(ad::reshape(v, {b, len, h, dh}), {0, 2, 1, 3});
    };
    Value q = split(linear(x, prefix + ".q"), t);
    Value k = split(linear(memory, prefix + ".k"), s);
    Value v = split(linear(memory, prefix + ".v"), s);

    Value scores = ad::scale(ad::matmul(q, ad::transpose(k, {0, 1, 3, 2})),
                             1.0 / std::sqrt((double)dh));
    Value attn = ad::softmax_last(scores);
    Value ctx = ad::reshape(ad::transpose(ad::matmul(attn, v), {0, 2, 1, 3}), {b, t, d});
    return linear(ctx, prefix + ".o");
}

Value HpstmModel::ffn(const Value& x, const std::string& prefix) const {
    Value hidden = linear(x, prefix + ".1");
    hidden = config_.activation == "gelu" ? ad::gelu(hidden) : ad::relu(hidden);
    return linear(hidden, prefix + ".2");
}

Value HpstmModel::embed_window(const Value& flat_input) const {
    return linear(flat_input, "embed") + Value::constant(pos_encoding_);
}

HpstmModel::ForwardOut HpstmModel::forward(const Value& input, bool with_cov, bool training,
                                           std::mt19937_64* rng) const {
    const auto& shape = input.val().shape();
    if (shape.size() != 4 || shape[1] != config_.window || shape[2] != config_.joints ||
        shape[3] != 3)
        throw std::invalid_argument("model_forward: input must be (B, T, J, 3), got " +
                                    input.val().shape_str());
    if (!input.val().all_finite()) throw std::invalid_argument("model_forward: non-finite input");
    const std::size_t b = shape[0];
    const std::size_t t = config_.window;
    const std::size_t j = config_.joints;
    const std::size_t d = config_.d_model;

    auto check_finite = [](const Value& v, const std::string& where) {
        if (!v.val().all_finite())
            throw std::runtime_error("model_forward: non-finite activations at " + where);
    };

    // Window centering: removes the absolute offset before embedding and adds
    // it back onto the root-translation head.
    Value center = ad::mean(input, {1, 2}, true);  // (B,1,1,3)
    Value flat = ad::reshape(input - center, {b, t, j * 3});
    Value x = embed_window(flat);
    x = dropout_mask(x, training, rng);

    for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
        const std::string p = "enc" + std::to_string(l);
        Value xn = lnorm(x, p + ".ln1");
        x = x + dropout_mask(attention(xn, xn, p + ".attn", training, rng), training, rng);
        x = x + dropout_mask(ffn(lnorm(x, p + ".ln2"), p + ".ffn"), training, rng);
        check_finite(x, "encoder layer " + std::to_string(l));
    }
    Value memory = lnorm(x, "enc.final_ln");

    Value y = ad::add(Value(params_.at("dec.queries").node),
                      Value::constant(Tensor({b, t, d})));  // broadcast queries over batch
    for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
        const std::string p = "dec" + std::to_string(l);
        Value yn = lnorm(y, p + ".ln1");
        y = y + dropout_mask(attention(yn, yn, p + ".self", training, rng), training, rng);
        y = y + dropout_mask(
                    attention(lnorm(y, p + ".ln2"), memory, p + ".cross", training, rng),
                    training, rng);
        y = y + dropout_mask(ffn(lnorm(y, p + ".ln3"), p + ".ffn"), training, rng);
        check_finite(y, "decoder layer " + std::to_string(l));
    }
    y = lnorm(y, "dec.final_ln");

    ForwardOut out;
    out.root_t = linear(y, "head.root") + ad::reshape(center, {b, 1, 3});
    out.quats = graphfk::quat_normalize(ad::reshape(linear(y, "head.quat"), {b, t, j, 4}));
    {
        // strictly positive lengths; the root slot is zeroed to match the
        // extract_bone_lengths convention
        Tensor mask({j});
        for (std::size_t k = 0; k < j; ++k) mask[k] = skeleton_.is_root(k) ? 0.0 : 1.0;
        out.bones = ad::mul(ad::add_const(ad::softplus(linear(y, "head.bone")), 1e-4),
                            Value::constant(std::move(mask)));
    }
    if (with_cov) {
        ++cov_evals_;
        Value raw = ad::reshape(linear(y, "head.cov"), {b, t, j, 6});
        out.cov_diag = ad::maximum_const(ad::exp_(ad::slice(raw, 3, 0, 3)), 1e-6);
        out.cov_lower = ad::slice(raw, 3, 3, 3);
    }

    Value root_flat = ad::reshape(out.root_t, {b * t, 3});
    Value quat_flat = ad::reshape(out.quats, {b * t, j, 4});
    Value bone_flat = ad::reshape(out.bones, {b * t, j});
    out.positions = ad::reshape(
        graphfk::forward_kinematics_graph(skeleton_, root_flat, quat_flat, bone_flat),
        {b, t, j, 3});
    check_finite(out.positions, "fk decode");
    return out;
}

SmoothedWindow HpstmModel::smooth_window(const PoseSequence& window) const {
    if (window.frames != config_.window || window.joints != config_.joints)
        throw std::invalid_argument("smooth_window: window shape mismatch");
    Value input = Value::constant(
        Tensor({1, window.frames, window.joints, 3}, window.positions));
    ForwardOut f = forward(input, config_.covariance_head, false, nullptr);

    const std::size_t t = config_.window;
    const std::size_t j = config_.joints;
    SmoothedWindow out;
    out.positions = PoseSequence(t, j);
    out.positions.positions.assign(f.positions.val().storage().begin(),
                                   f.positions.val().storage().end());
    out.params.resize(t);
    const Tensor& root = f.root_t.val();
    const Tensor& quats = f.quats.val();
    const Tensor& bones = f.bones.val();
    for (std::size_t s = 0; s < t; ++s) {
        PoseParameters& p = out.params[s];
        p.root_translation = {root.at({0, s, 0}), root.at({0, s, 1}), root.at({0, s, 2})};
        p.bone_lengths.resize(j);
        for (std::size_t k = 0; k < j; ++k) p.bone_lengths[k] = bones.at({0, s, k});
        for (std::size_t k = 0; k < j; ++k) {
            Quaternion q(quats.at({0, s, k, 0}), quats.at({0, s, k, 1}), quats.at({0, s, k, 2}),
                         quats.at({0, s, k, 3}));
            q = q.canonical();
            if (skeleton_.is_root(k))
                p.root_orientation = q;
            else
                p.local_rotations.push_back(q);
        }
    }
    if (config_.covariance_head) {
        CovarianceFactors cov(t, j);
        const Tensor& diag = f.cov_diag.val();
        const Tensor& lower = f.cov_lower.val();
        for (std::size_t s = 0; s < t; ++s)
            for (std::size_t k = 0; k < j; ++k) {
                cov.at(s, k, 0, 0) = diag.at({0, s, k, 0});
                cov.at(s, k, 1, 1) = diag.at({0, s, k, 1});
                cov.at(s, k, 2, 2) = diag.at({0, s, k, 2});
                cov.at(s, k, 1, 0) = lower.at({0, s, k, 0});
                cov.at(s, k, 2, 0) = lower.at({0, s, k, 1});
                cov.at(s, k, 2, 1) = lower.at({0, s, k, 2});
            }
        out.cov = std::move(cov);
    }
    return out;
}

void HpstmModel::save(const std::string& path_prefix) const {
    ad::save_checkpoint(params_, path_prefix);
    std::ofstream os(path_prefix + ".config.json");
    if (!os) throw std::runtime_error("model: cannot write " + path_prefix + ".config.json");
    os << config_.to_json() << "\n";
}

void HpstmModel::load(const std::string& path_prefix) {
    ad::load_checkpoint(params_, path_prefix);
}

HpstmModel HpstmModel::load_from(const std::string& path_prefix, SkeletonDefinition skeleton) {
    std::ifstream is(path_prefix + ".config.json");
    if (!is) throw std::runtime_error("model: cannot read " + path_prefix + ".config.json");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    HpstmModel model(ModelConfig::from_json(text), std::move(skeleton), 0);
    model.load(path_prefix);
    return model;
}

}  // namespace esfp
