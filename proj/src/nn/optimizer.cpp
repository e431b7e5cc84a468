#include "mhqg/nn/optimizer.hpp"

#include "mhqg/binary_io.hpp"

#include <algorithm>
#include <cmath>

namespace mhqg::nn {

void clip_gradients(ParameterStore& store, double limit) {
    if (limit <= 0.0) return;
    for (Parameter* p : store.all()) {
        p->grad = p->grad.cwiseMax(-limit).cwiseMin(limit);
    }
}

Adam::Adam(ParameterStore& store, AdamConfig config) : store_(&store), config_(config) {
    for (const Parameter* p : store.all()) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    clip_gradients(*store_, config_.clip);
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    auto params = store_->all();
    last_max_abs_grad_ = 0.0;
    for (const Parameter* p : params) {
        if (p->grad.size() > 0) last_max_abs_grad_ = std::max(last_max_abs_grad_, p->grad.cwiseAbs().maxCoeff());
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        m_[k] = b1 * m_[k] + (1.0 - b1) * p.grad;
        v_[k] = b2 * v_[k] + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= config_.learning_rate * (m_[k].array() / correction1) /
                           ((v_[k].array() / correction2).sqrt() + config_.epsilon);
        p.grad.setZero();
    }
}

void Adam::write(std::ostream& out) const {
    binary::write_u64(out, t_);
    binary::write_u64(out, m_.size());
    for (std::size_t k = 0; k < m_.size(); ++k) {
        binary::write_matrix(out, m_[k]);
        binary::write_matrix(out, v_[k]);
    }
}

void Adam::read(std::istream& in) {
    t_ = binary::read_u64(in);
    auto n = binary::read_u64(in);
    if (n != m_.size()) {
        throw binary::FormatError("optimizer state does not match the parameter set");
    }
    for (std::size_t k = 0; k < n; ++k) {
        Matrix m = binary::read_matrix(in);
        Matrix v = binary::read_matrix(in);
        if (m.rows() != m_[k].rows() || m.cols() != m_[k].cols() || v.rows() != v_[k].rows() ||
            v.cols() != v_[k].cols()) {
            throw binary::FormatError("optimizer moment shape mismatch");
        }
        m_[k] = std::move(m);
        v_[k] = std::move(v);
    }
}

}  // namespace mhqg::nn
