#ifndef FEDCACHE_MODEL_HPP
#define FEDCACHE_MODEL_HPP

#include "fedcache/numeric.hpp"
#include "fedcache/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedcache {

enum class Architecture { mlp_small, mlp_medium, mlp_large };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

/// Architecture assignment used for heterogeneous federations: client k gets
/// small / medium / large for k mod 3 = 0 / 1 / 2.
Architecture architecture_for_client(int client_id);

/// Fully connected ReLU network shape. The output layer has num_classes units.
struct ModelSpec {
    Architecture architecture = Architecture::mlp_small;
    int input_dim = 0;
    std::vector<int> hidden_widths;
    int num_classes = 0;

    /// Standard widths: small [32], medium [64], large [128, 64], each
    /// multiplied by width_scale.
    static ModelSpec standard(Architecture arch, int input_dim, int num_classes, int width_scale = 1);

    void validate() const;
    std::size_t param_count() const;
    /// Layer widths including input and output.
    std::vector<int> layer_dims() const;
};

/// A client's predictor. Parameters are one flat vector holding, per layer,
/// the weight matrix (out x in, column-major) followed by the bias.
class ClientModel {
public:
    ClientModel(ModelSpec spec, std::uint64_t seed, RealVector params);

    const ModelSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    const RealVector& params() const { return params_; }
    void set_params(RealVector params);

    /// Raw logits for one sample.
    RealVector forward(const RealVector& x) const;
    /// Logits for every column of `inputs`.
    RealMatrix forward_batch(const RealMatrix& inputs) const;

private:
    ModelSpec spec_;
    std::uint64_t seed_;
    RealVector params_;
};

/// Parameters drawn from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ClientModel build_model(const ModelSpec& spec, std::uint64_t seed);

enum class DistillLoss {
    kl,                  ///< beta * KL(tau(f(x)) || teacher)
    soft_cross_entropy,  ///< beta * CE(tau(f(x)), teacher)
};

/// One minibatch. Teachers are probability distributions; an absent teacher
/// drops the distillation term for that sample.
struct Batch {
    RealMatrix inputs;
    std::vector<int> labels;
    std::vector<std::optional<RealVector>> teachers;

    Eigen::Index size() const { return inputs.cols(); }
};

struct LossOptions {
    double beta = 0.0;
    double temperature = 1.0;
    DistillLoss distill = DistillLoss::kl;
};

struct LossAndGrad {
    double loss = 0.0;
    RealVector grad;
};

/// Batch mean of CE(tau(f(x)), y) + beta * distill(tau(f(x)), teacher) and its
/// gradient with respect to `params`, by backpropagation.
LossAndGrad objective(const ModelSpec& spec, const RealVector& params, const Batch& batch, const LossOptions& opts);

/// Loss value only.
double objective_value(const ModelSpec& spec, const RealVector& params, const Batch& batch, const LossOptions& opts);

/// One SGD step on the batch objective. Returns the loss before the step.
double train_batch(ClientModel& model, const Batch& batch, const LossOptions& opts, double lr);

/// Fraction of samples whose argmax logit (lowest index on ties) equals the label.
double evaluate(const ClientModel& model, const LabeledDataset& test);

/// Checkpoint: one text header line, then the parameters as little-endian
/// IEEE-754 doubles.
void save_checkpoint(const std::filesystem::path& path, const ClientModel& model);
ClientModel load_checkpoint(const std::filesystem::path& path);

}  // namespace fedcache

#endif
