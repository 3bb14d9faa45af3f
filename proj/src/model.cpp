#include "fedcache/model.hpp"

#include "fedcache/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fedcache {

namespace {

using ConstMatrixMap = Eigen::Map<const RealMatrix>;
using ConstVectorMap = Eigen::Map<const RealVector>;

struct LayerView {
    ConstMatrixMap weight;
    ConstVectorMap bias;
};

struct LayerOffsets {
    Eigen::Index weight = 0;
    Eigen::Index bias = 0;
    int in = 0;
    int out = 0;
};

std::vector<LayerOffsets> layer_offsets(const ModelSpec& spec) {
    const auto dims = spec.layer_dims();
    std::vector<LayerOffsets> out;
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LayerOffsets lo;
        lo.in = dims[l];
        lo.out = dims[l + 1];
        lo.weight = offset;
        offset += static_cast<Eigen::Index>(lo.in) * lo.out;
        lo.bias = offset;
        offset += lo.out;
        out.push_back(lo);
    }
    return out;
}

LayerView view(const RealVector& params, const LayerOffsets& lo) {
    return {ConstMatrixMap(params.data() + lo.weight, lo.out, lo.in), ConstVectorMap(params.data() + lo.bias, lo.out)};
}

// Pre-activations per layer, plus the input, so backprop can reuse them.
struct ForwardTrace {
    std::vector<RealMatrix> activations;  // a_0 = input, a_l = relu(z_l), last = logits
};

ForwardTrace run_forward(const ModelSpec& spec, const RealVector& params, const RealMatrix& inputs) {
    const auto layers = layer_offsets(spec);
    ForwardTrace trace;
    trace.activations.reserve(layers.size() + 1);
    trace.activations.push_back(inputs);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto layer = view(params, layers[l]);
        RealMatrix z = layer.weight * trace.activations.back();
        z.colwise() += layer.bias;
        if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
        trace.activations.push_back(std::move(z));
    }
    return trace;
}

void check_batch(const ModelSpec& spec, const Batch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("batch is empty");
    if (batch.inputs.rows() != spec.input_dim) throw std::invalid_argument("batch input dimension mismatch");
    if (static_cast<Eigen::Index>(batch.labels.size()) != batch.size() ||
        static_cast<Eigen::Index>(batch.teachers.size()) != batch.size())
        throw std::invalid_argument("batch labels/teachers length mismatch");
    for (std::size_t s = 0; s < batch.teachers.size(); ++s) {
        if (batch.labels[s] < 0 || batch.labels[s] >= spec.num_classes)
            throw std::invalid_argument("batch label out of range");
        if (batch.teachers[s] && batch.teachers[s]->size() != spec.num_classes)
            throw std::invalid_argument("teacher length mismatch");
    }
}

// Loss and d(loss)/d(logits) for every column, already scaled by 1/B.
double logits_loss(const RealMatrix& logits, const Batch& batch, const LossOptions& opts, RealMatrix* dlogits) {
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double temp = opts.temperature;
    double total = 0.0;
    if (dlogits) dlogits->resize(logits.rows(), logits.cols());
    for (Eigen::Index s = 0; s < logits.cols(); ++s) {
        const RealVector probs = softmax_temp(logits.col(s), temp);
        const int y = batch.labels[static_cast<std::size_t>(s)];
        double loss = cross_entropy(probs, y);
        RealVector g;
        if (dlogits) g = cross_entropy_logit_grad(probs, y, temp);
        const auto& teacher = batch.teachers[static_cast<std::size_t>(s)];
        if (teacher) {
            if (opts.distill == DistillLoss::kl) {
                loss += opts.beta * kl_div(probs, *teacher);
                if (dlogits) g += opts.beta * kl_logit_grad(probs, *teacher, temp);
            } else {
                loss += opts.beta * soft_cross_entropy(probs, *teacher);
                if (dlogits) g += opts.beta * soft_cross_entropy_logit_grad(probs, *teacher, temp);
            }
        }
        total += loss;
        if (dlogits) dlogits->col(s) = g * inv_b;
    }
    return total * inv_b;
}

void write_le_doubles(std::ostream& os, const RealVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(v(i));
        unsigned char buf[8];
        for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xffu);
        os.write(reinterpret_cast<const char*>(buf), 8);
    }
}

}  // namespace

std::string_view to_string(Architecture arch) {
    switch (arch) {
        case Architecture::mlp_small: return "mlp_small";
        case Architecture::mlp_medium: return "mlp_medium";
        case Architecture::mlp_large: return "mlp_large";
    }
    return "unknown";
}

Architecture parse_architecture(std::string_view name) {
    if (name == "mlp_small") return Architecture::mlp_small;
    if (name == "mlp_medium") return Architecture::mlp_medium;
    if (name == "mlp_large") return Architecture::mlp_large;
    throw std::invalid_argument("unknown architecture: " + std::string(name));
}

Architecture architecture_for_client(int client_id) {
    switch (client_id % 3) {
        case 0: return Architecture::mlp_small;
        case 1: return Architecture::mlp_medium;
        default: return Architecture::mlp_large;
    }
}

ModelSpec ModelSpec::standard(Architecture arch, int input_dim, int num_classes, int width_scale) {
    ModelSpec spec;
    spec.architecture = arch;
    spec.input_dim = input_dim;
    spec.num_classes = num_classes;
    switch (arch) {
        case Architecture::mlp_small: spec.hidden_widths = {32}; break;
        case Architecture::mlp_medium: spec.hidden_widths = {64}; break;
        case Architecture::mlp_large: spec.hidden_widths = {128, 64}; break;
    }
    for (auto& w : spec.hidden_widths) w *= width_scale;
    spec.validate();
    return spec;
}

void ModelSpec::validate() const {
    if (input_dim <= 0) throw std::invalid_argument("ModelSpec: input_dim must be positive");
    if (num_classes <= 0) throw std::invalid_argument("ModelSpec: num_classes must be positive");
    if (hidden_widths.empty()) throw std::invalid_argument("ModelSpec: hidden_widths must be non-empty");
    for (int w : hidden_widths)
        if (w <= 0) throw std::invalid_argument("ModelSpec: hidden widths must be positive");
}

std::vector<int> ModelSpec::layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_widths.begin(), hidden_widths.end());
    dims.push_back(num_classes);
    return dims;
}

std::size_t ModelSpec::param_count() const {
    const auto dims = layer_dims();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        n += static_cast<std::size_t>(dims[l]) * static_cast<std::size_t>(dims[l + 1]) + static_cast<std::size_t>(dims[l + 1]);
    return n;
}

ClientModel::ClientModel(ModelSpec spec, std::uint64_t seed, RealVector params)
    : spec_(std::move(spec)), seed_(seed), params_(std::move(params)) {
    spec_.validate();
    if (static_cast<std::size_t>(params_.size()) != spec_.param_count())
        throw std::invalid_argument("ClientModel: parameter count does not match spec");
}

void ClientModel::set_params(RealVector params) {
    if (params.size() != params_.size()) throw std::invalid_argument("set_params: length mismatch");
    params_ = std::move(params);
}

RealVector ClientModel::forward(const RealVector& x) const {
    if (x.size() != spec_.input_dim) throw std::invalid_argument("forward: input dimension mismatch");
    return run_forward(spec_, params_, x).activations.back().col(0);
}

RealMatrix ClientModel::forward_batch(const RealMatrix& inputs) const {
    if (inputs.rows() != spec_.input_dim) throw std::invalid_argument("forward_batch: input dimension mismatch");
    return std::move(run_forward(spec_, params_, inputs).activations.back());
}

ClientModel build_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    RealVector params(static_cast<Eigen::Index>(spec.param_count()));
    for (const auto& lo : layer_offsets(spec)) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(lo.in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        const Eigen::Index end = lo.bias + lo.out;
        for (Eigen::Index i = lo.weight; i < end; ++i) params(i) = dist(rng);
    }
    return ClientModel(spec, seed, std::move(params));
}

LossAndGrad objective(const ModelSpec& spec, const RealVector& params, const Batch& batch, const LossOptions& opts) {
    check_batch(spec, batch);
    const auto layers = layer_offsets(spec);
    const auto trace = run_forward(spec, params, batch.inputs);

    LossAndGrad out;
    RealMatrix delta;
    out.loss = logits_loss(trace.activations.back(), batch, opts, &delta);
    out.grad = RealVector::Zero(params.size());

    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& lo = layers[l];
        const RealMatrix& input = trace.activations[l];
        Eigen::Map<RealMatrix>(out.grad.data() + lo.weight, lo.out, lo.in).noalias() = delta * input.transpose();
        out.grad.segment(lo.bias, lo.out) = delta.rowwise().sum();
        if (l == 0) break;
        const auto layer = view(params, lo);
        RealMatrix back = layer.weight.transpose() * delta;
        // relu'(z) is 1 exactly where the stored activation is positive
        delta = (input.array() > 0.0).select(back, 0.0);
    }
    return out;
}

double objective_value(const ModelSpec& spec, const RealVector& params, const Batch& batch, const LossOptions& opts) {
    check_batch(spec, batch);
    const auto trace = run_forward(spec, params, batch.inputs);
    return logits_loss(trace.activations.back(), batch, opts, nullptr);
}

double train_batch(ClientModel& model, const Batch& batch, const LossOptions& opts, double lr) {
    if (!(lr > 0.0)) throw std::invalid_argument("train_batch: lr must be positive");
    auto lg = objective(model.spec(), model.params(), batch, opts);
    model.set_params(sgd_step(model.params(), lg.grad, lr));
    return lg.loss;
}

double evaluate(const ClientModel& model, const LabeledDataset& test) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test split");
    const RealMatrix logits = model.forward_batch(test.features);
    std::size_t correct = 0;
    for (Eigen::Index s = 0; s < logits.cols(); ++s)
        if (argmax(logits.col(s)) == test.labels[static_cast<std::size_t>(s)]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

void save_checkpoint(const std::filesystem::path& path, const ClientModel& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    const auto& spec = model.spec();
    os << "fedcache-model v1 " << to_string(spec.architecture) << ' ' << spec.input_dim << ' ';
    for (std::size_t i = 0; i < spec.hidden_widths.size(); ++i) os << (i ? "," : "") << spec.hidden_widths[i];
    os << ' ' << spec.num_classes << ' ' << model.seed() << ' ' << model.params().size() << '\n';
    write_le_doubles(os, model.params());
    if (!os) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

ClientModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
    std::string header;
    std::getline(is, header);
    std::istringstream hs(header);
    std::string magic, version, arch, hidden;
    ModelSpec spec;
    std::uint64_t seed = 0;
    std::size_t count = 0;
    if (!(hs >> magic >> version >> arch >> spec.input_dim >> hidden >> spec.num_classes >> seed >> count) ||
        magic != "fedcache-model" || version != "v1")
        throw ParseError("bad checkpoint header", 0);
    spec.architecture = parse_architecture(arch);
    std::istringstream ws(hidden);
    for (std::string tok; std::getline(ws, tok, ',');) spec.hidden_widths.push_back(std::stoi(tok));
    spec.validate();
    if (count != spec.param_count()) throw FormatError("checkpoint parameter count does not match header shape");

    const std::size_t offset = header.size() + 1;
    RealVector params(static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char buf[8];
        if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ParseError("truncated checkpoint", offset + 8 * i);
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
        params(static_cast<Eigen::Index>(i)) = std::bit_cast<double>(bits);
    }
    return ClientModel(std::move(spec), seed, std::move(params));
}

}  // namespace fedcache
