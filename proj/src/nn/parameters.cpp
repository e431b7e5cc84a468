#include "mhqg/nn/parameters.hpp"

#include "mhqg/binary_io.hpp"

#include <cmath>
#include <stdexcept>

namespace mhqg::nn {

Parameter& ParameterStore::add(std::string name, Index rows, Index cols, Init init, Rng& rng) {
    for (const auto& p : params_) {
        if (p->name == name) {
            throw std::logic_error("duplicate parameter name: " + name);
        }
    }
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->value = Matrix::Zero(rows, cols);
    p->grad = Matrix::Zero(rows, cols);
    if (init == Init::XavierNormal) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(rows + cols)));
        for (Index i = 0; i < p->value.size(); ++i) {
            p->value(i) = dist(rng);
        }
    }
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
    for (auto& p : params_) {
        if (p->name == name) return *p;
    }
    throw std::out_of_range("no parameter named " + name);
}

const Parameter& ParameterStore::get(const std::string& name) const {
    for (const auto& p : params_) {
        if (p->name == name) return *p;
    }
    throw std::out_of_range("no parameter named " + name);
}

std::vector<Parameter*> ParameterStore::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) {
        p->grad.setZero(p->value.rows(), p->value.cols());
    }
}

void ParameterStore::write(std::ostream& out) const {
    binary::write_u64(out, params_.size());
    for (const auto& p : params_) {
        binary::write_string(out, p->name);
        binary::write_matrix(out, p->value);
    }
}

void ParameterStore::read(std::istream& in) {
    auto n = binary::read_u64(in);
    if (n != params_.size()) {
        throw binary::FormatError("parameter count mismatch: stored " + std::to_string(n) + ", model has " +
                                  std::to_string(params_.size()));
    }
    for (auto& p : params_) {
        auto name = binary::read_string(in);
        if (name != p->name) {
            throw binary::FormatError("parameter order mismatch: expected " + p->name + ", found " + name);
        }
        Matrix m = binary::read_matrix(in);
        if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
            throw binary::FormatError("shape mismatch for parameter " + name);
        }
        p->value = std::move(m);
    }
}

}  // namespace mhqg::nn
