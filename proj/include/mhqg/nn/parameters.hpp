#pragma once

#include "mhqg/nn/graph.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace mhqg::nn {

enum class Init {
    Zero,
    /// Gaussian with variance 2 / (fan_in + fan_out), fan_in = cols, fan_out = rows.
    XavierNormal,
};

/// Owns the parameters of one model. Insertion order is the canonical order
/// for serialization and optimizer state.
class ParameterStore {
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;
    ParameterStore(ParameterStore&&) = default;
    ParameterStore& operator=(ParameterStore&&) = default;

    Parameter& add(std::string name, Index rows, Index cols, Init init, Rng& rng);

    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();

    /// Values only, in insertion order, with names and shapes checked on read.
    void write(std::ostream& out) const;
    void read(std::istream& in);

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace mhqg::nn
