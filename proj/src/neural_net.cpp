#include "uavtraj/neural_net.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace uavtraj {

namespace {

constexpr const char* kMagic = "uavtraj-qnet";
constexpr int kFormatVersion = 1;

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd to_matrix(std::span<const QSample> batch, int inputs)
{
    Eigen::MatrixXd x(inputs, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        if (static_cast<int>(batch[j].features.size()) != inputs)
            throw std::invalid_argument("feature length does not match the input layer");
        for (int i = 0; i < inputs; ++i)
            x(i, static_cast<Eigen::Index>(j)) = batch[j].features[static_cast<std::size_t>(i)];
    }
    return x;
}

}  // namespace

MlpQNetwork::MlpQNetwork(const std::vector<int>& sizes, std::uint64_t seed)
    : MlpQNetwork(zeros(sizes))
{
    std::seed_seq seq{seed, std::uint64_t{0x0E7}};
    std::mt19937_64 rng(seq);
    for (auto& layer : layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
                layer.weights(r, c) = u(rng);
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
            layer.bias(r) = u(rng);
    }
}

MlpQNetwork MlpQNetwork::zeros(const std::vector<int>& sizes)
{
    if (sizes.size() < 2)
        throw std::invalid_argument("network needs at least an input and an output size");
    for (int s : sizes)
        if (s < 1)
            throw std::invalid_argument("layer sizes must be positive");
    MlpQNetwork net;
    for (std::size_t i = 1; i < sizes.size(); ++i)
        net.layers_.push_back({Eigen::MatrixXd::Zero(sizes[i], sizes[i - 1]), Eigen::VectorXd::Zero(sizes[i])});
    return net;
}

int MlpQNetwork::input_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weights.cols()); }
int MlpQNetwork::output_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weights.rows()); }

std::vector<int> MlpQNetwork::sizes() const
{
    std::vector<int> s;
    if (layers_.empty())
        return s;
    s.push_back(input_size());
    for (const auto& l : layers_)
        s.push_back(static_cast<int>(l.weights.rows()));
    return s;
}

bool MlpQNetwork::same_shape(const MlpQNetwork& other) const { return sizes() == other.sizes(); }

void MlpQNetwork::check_input(std::size_t length) const
{
    if (layers_.empty())
        throw std::logic_error("network has no layers");
    if (static_cast<int>(length) != input_size())
        throw std::invalid_argument("feature length does not match the input layer");
}

Eigen::VectorXd MlpQNetwork::forward(std::span<const double> features) const
{
    check_input(features.size());
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(features.data(), static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Eigen::VectorXd z = layers_[i].weights * a + layers_[i].bias;
        a = (i + 1 < layers_.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    return a;
}

Eigen::MatrixXd MlpQNetwork::forward_batch(const Eigen::MatrixXd& inputs) const
{
    check_input(static_cast<std::size_t>(inputs.rows()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Eigen::MatrixXd z = layers_[i].weights * a;
        z.colwise() += layers_[i].bias;
        a = (i + 1 < layers_.size()) ? relu(z) : z;
    }
    return a;
}

double MlpQNetwork::loss(std::span<const QSample> batch) const
{
    if (batch.empty())
        throw std::invalid_argument("loss needs a non-empty batch");
    const Eigen::MatrixXd q = forward_batch(to_matrix(batch, input_size()));
    double sum = 0.0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const int a = batch[j].action;
        if (a < 0 || a >= output_size())
            throw std::out_of_range("action index outside the output layer");
        const double e = batch[j].target - q(a, static_cast<Eigen::Index>(j));
        sum += e * e;
    }
    return sum / static_cast<double>(batch.size());
}

MlpQNetwork::Gradients MlpQNetwork::gradients(std::span<const QSample> batch) const
{
    if (batch.empty())
        throw std::invalid_argument("gradient needs a non-empty batch");
    const auto n_layers = layers_.size();
    const auto b = static_cast<Eigen::Index>(batch.size());

    // Hidden activations; the output layer is only evaluated on taken actions.
    std::vector<Eigen::MatrixXd> acts;
    acts.reserve(n_layers);
    acts.push_back(to_matrix(batch, input_size()));
    for (std::size_t i = 0; i + 1 < n_layers; ++i) {
        Eigen::MatrixXd z = layers_[i].weights * acts.back();
        z.colwise() += layers_[i].bias;
        acts.push_back(relu(z));
    }

    Gradients g;
    g.layers.resize(n_layers);
    for (std::size_t i = 0; i < n_layers; ++i) {
        g.layers[i].weights = Eigen::MatrixXd::Zero(layers_[i].weights.rows(), layers_[i].weights.cols());
        g.layers[i].bias = Eigen::VectorXd::Zero(layers_[i].bias.size());
    }

    const auto& out = layers_.back();
    auto& gout = g.layers.back();
    const Eigen::MatrixXd& last = acts.back();
    Eigen::MatrixXd delta(last.rows(), b);  // gradient w.r.t. the last hidden activation
    double sum = 0.0;
    for (Eigen::Index j = 0; j < b; ++j) {
        const int a = batch[static_cast<std::size_t>(j)].action;
        if (a < 0 || a >= output_size())
            throw std::out_of_range("action index outside the output layer");
        const double q = out.weights.row(a).dot(last.col(j)) + out.bias(a);
        const double e = batch[static_cast<std::size_t>(j)].target - q;
        sum += e * e;
        const double dq = -2.0 * e / static_cast<double>(b);
        gout.weights.row(a) += dq * last.col(j).transpose();
        gout.bias(a) += dq;
        delta.col(j) = dq * out.weights.row(a).transpose();
    }
    g.loss = sum / static_cast<double>(b);

    for (std::size_t k = n_layers - 1; k-- > 0;) {
        delta = delta.cwiseProduct((acts[k + 1].array() > 0.0).cast<double>().matrix());
        g.layers[k].weights = delta * acts[k].transpose();
        g.layers[k].bias = delta.rowwise().sum();
        if (k > 0)
            delta = layers_[k].weights.transpose() * delta;
    }
    return g;
}

double MlpQNetwork::sgd_step(std::span<const QSample> batch, double learning_rate)
{
    const Gradients g = gradients(batch);
    if (!std::isfinite(g.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss in SGD step; batch of " << batch.size() << " samples:";
        for (const auto& s : batch) {
            msg << "\n  action=" << s.action << " target=" << s.target << " features=[";
            for (std::size_t i = 0; i < s.features.size(); ++i)
                msg << (i ? "," : "") << s.features[i];
            msg << "]";
        }
        throw DivergenceError(msg.str());
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].weights -= learning_rate * g.layers[i].weights;
        layers_[i].bias -= learning_rate * g.layers[i].bias;
    }
    if (!all_finite())
        throw DivergenceError("parameters became non-finite after an SGD step");
    return g.loss;
}

std::size_t MlpQNetwork::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& l : layers_)
        n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

double& MlpQNetwork::parameter_ref(std::size_t flat_index)
{
    for (auto& l : layers_) {
        const auto w = static_cast<std::size_t>(l.weights.size());
        if (flat_index < w)
            return l.weights(static_cast<Eigen::Index>(flat_index / static_cast<std::size_t>(l.weights.cols())),
                             static_cast<Eigen::Index>(flat_index % static_cast<std::size_t>(l.weights.cols())));
        flat_index -= w;
        const auto nb = static_cast<std::size_t>(l.bias.size());
        if (flat_index < nb)
            return l.bias(static_cast<Eigen::Index>(flat_index));
        flat_index -= nb;
    }
    throw std::out_of_range("parameter index out of range");
}

double MlpQNetwork::parameter(std::size_t flat_index) const
{
    return const_cast<MlpQNetwork*>(this)->parameter_ref(flat_index);
}

void MlpQNetwork::set_parameter(std::size_t flat_index, double value) { parameter_ref(flat_index) = value; }

bool MlpQNetwork::all_finite() const
{
    for (const auto& l : layers_)
        if (!l.weights.allFinite() || !l.bias.allFinite())
            return false;
    return true;
}

bool MlpQNetwork::operator==(const MlpQNetwork& other) const
{
    if (!same_shape(other))
        return false;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (layers_[i].weights != other.layers_[i].weights || layers_[i].bias != other.layers_[i].bias)
            return false;
    return true;
}

// Text format:
//   uavtraj-qnet 1
//   layers <L>
//   <in> <out>            (L lines)
//   weights row-major then bias, one value per line, per layer
void MlpQNetwork::save(std::ostream& out) const
{
    out << kMagic << ' ' << kFormatVersion << '\n' << "layers " << layers_.size() << '\n';
    for (const auto& l : layers_)
        out << l.weights.cols() << ' ' << l.weights.rows() << '\n';
    out << std::setprecision(17);
    for (const auto& l : layers_) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
                out << l.weights(r, c) << '\n';
        for (Eigen::Index r = 0; r < l.bias.size(); ++r)
            out << l.bias(r) << '\n';
    }
    if (!out)
        throw std::runtime_error("failed to write network parameters");
}

void MlpQNetwork::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open network file for writing: " + path.string());
    save(out);
}

MlpQNetwork MlpQNetwork::load(std::istream& in)
{
    std::string magic, word;
    int version = 0;
    std::size_t count = 0;
    if (!(in >> magic >> version) || magic != kMagic)
        throw std::runtime_error("not a network parameter file");
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported network file version " + std::to_string(version));
    if (!(in >> word >> count) || word != "layers" || count == 0)
        throw std::runtime_error("malformed network header");
    std::vector<int> sizes;
    for (std::size_t i = 0; i < count; ++i) {
        int fan_in = 0, fan_out = 0;
        if (!(in >> fan_in >> fan_out))
            throw std::runtime_error("malformed layer shape");
        if (i == 0)
            sizes.push_back(fan_in);
        else if (fan_in != sizes.back())
            throw std::runtime_error("layer shapes do not chain");
        sizes.push_back(fan_out);
    }
    MlpQNetwork net = zeros(sizes);
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
        std::string token;
        if (!(in >> token))
            throw std::runtime_error("network file ends early");
        net.set_parameter(i, std::stod(token));
    }
    return net;
}

MlpQNetwork MlpQNetwork::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open network file: " + path.string());
    return load(in);
}

void sync_target(const MlpQNetwork& source, MlpQNetwork& target)
{
    if (!target.layers().empty() && !source.same_shape(target))
        throw std::invalid_argument("target network shape differs from the source");
    target = source;
}

double td_target(double reward, std::span<const double> next_features, bool done, const MlpQNetwork& target_net,
                 double gamma, std::span<const std::uint8_t> next_mask)
{
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("discount factor must lie in [0, 1]");
    if (done)
        return reward;
    const Eigen::VectorXd q = target_net.forward(next_features);
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.size(); ++a)
        if (next_mask.empty() || next_mask[static_cast<std::size_t>(a)])
            best = std::max(best, q(a));
    if (!std::isfinite(best))
        throw std::invalid_argument("no admissible action in the next state");
    return reward + gamma * best;
}

}  // namespace uavtraj
