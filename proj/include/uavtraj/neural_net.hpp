#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace uavtraj {

/// Raised when a training step produces a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One regression target for the head of the taken action.
struct QSample {
    std::vector<double> features;
    int action = 0;
    double target = 0.0;
};

/// Dense feed-forward Q-function: affine layers with ReLU between them and
/// an identity output, one output per joint action.
class MlpQNetwork {
public:
    struct Layer {
        Eigen::MatrixXd weights;  // out x in
        Eigen::VectorXd bias;
    };

    MlpQNetwork() = default;

    /// sizes = {inputs, hidden..., outputs}. Weights and biases are drawn
    /// uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    MlpQNetwork(const std::vector<int>& sizes, std::uint64_t seed);

    static MlpQNetwork zeros(const std::vector<int>& sizes);

    int input_size() const;
    int output_size() const;
    std::vector<int> sizes() const;
    bool same_shape(const MlpQNetwork& other) const;

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    Eigen::VectorXd forward(std::span<const double> features) const;

    /// Column-per-sample batch forward.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

    /// Mean over the batch of (target - Q(s, a))^2.
    double loss(std::span<const QSample> batch) const;

    /// Gradients of loss() with the same layout as layers().
    struct Gradients {
        std::vector<Layer> layers;
        double loss = 0.0;
    };
    Gradients gradients(std::span<const QSample> batch) const;

    /// One plain SGD update; returns the loss before the update.
    /// Throws DivergenceError if the loss or any parameter becomes non-finite.
    double sgd_step(std::span<const QSample> batch, double learning_rate);

    std::size_t parameter_count() const;
    double parameter(std::size_t flat_index) const;
    void set_parameter(std::size_t flat_index, double value);
    bool all_finite() const;

    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static MlpQNetwork load(std::istream& in);
    static MlpQNetwork load(const std::filesystem::path& path);

    bool operator==(const MlpQNetwork& other) const;

private:
    double& parameter_ref(std::size_t flat_index);
    void check_input(std::size_t length) const;

    std::vector<Layer> layers_;
};

/// Overwrite the frozen copy with the live parameters.
void sync_target(const MlpQNetwork& source, MlpQNetwork& target);

/// TD target: reward when done, else reward + gamma * max of the target
/// network's outputs over the actions allowed by next_mask (all when empty).
double td_target(double reward, std::span<const double> next_features, bool done, const MlpQNetwork& target_net,
                 double gamma, std::span<const std::uint8_t> next_mask = {});

}  // namespace uavtraj
