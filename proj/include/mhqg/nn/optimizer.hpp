#pragma once

#include "mhqg/nn/parameters.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace mhqg::nn {

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    /// Each gradient component is clipped to [-clip, clip] before the update; <= 0 disables.
    double clip = 5.0;
};

/// Clamp every gradient component into [-limit, limit].
void clip_gradients(ParameterStore& store, double limit);

class Adam {
public:
    Adam(ParameterStore& store, AdamConfig config);

    /// Clip, update, and zero the gradients.
    void step();

    const AdamConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    std::uint64_t steps() const { return t_; }
    /// Largest |gradient component| seen by the last step(), after clipping.
    double last_max_abs_grad() const { return last_max_abs_grad_; }

    void write(std::ostream& out) const;
    void read(std::istream& in);

private:
    ParameterStore* store_;
    AdamConfig config_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    std::uint64_t t_ = 0;
    double last_max_abs_grad_ = 0.0;
};

}  // namespace mhqg::nn
