#include "mhqg/nn/graph.hpp"

#include <stdexcept>
#include <vector>

namespace mhqg::nn {

const Matrix& Expr::value() const { return graph_->value(id_); }

double Expr::scalar() const {
    const Matrix& v = value();
    if (v.size() != 1) {
        throw std::logic_error("Expr::scalar on a non-scalar node");
    }
    return v(0, 0);
}

Expr Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Expr(this, nodes_.size() - 1);
}

Expr Graph::constant(Matrix value) {
    Node node;
    node.value = std::move(value);
    return push(std::move(node));
}

Expr Graph::parameter(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
        return Expr(this, it->second);
    }
    Node node;
    node.value = p.value;
    node.param = &p;
    node.requires_grad = true;
    Expr e = push(std::move(node));
    param_nodes_.emplace(&p, e.id());
    return e;
}

Expr Graph::parameter(const Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
        return Expr(this, it->second);
    }
    Expr e = constant(p.value);
    param_nodes_.emplace(&p, e.id());
    return e;
}

namespace {

Matrix gather_columns(const Matrix& table, std::span<const int> ids) {
    Matrix out(table.rows(), static_cast<Index>(ids.size()));
    for (std::size_t j = 0; j < ids.size(); ++j) {
        if (ids[j] < 0 || ids[j] >= table.cols()) {
            throw std::out_of_range("lookup id " + std::to_string(ids[j]) + " outside table of " +
                                    std::to_string(table.cols()) + " entries");
        }
        out.col(static_cast<Index>(j)) = table.col(ids[j]);
    }
    return out;
}

}  // namespace

Expr Graph::lookup_columns(Parameter& table, std::span<const int> ids) {
    Node node;
    node.value = gather_columns(table.value, ids);
    node.param = &table;
    node.is_lookup = true;
    node.lookup_ids.assign(ids.begin(), ids.end());
    node.requires_grad = true;
    return push(std::move(node));
}

Expr Graph::lookup_columns(const Parameter& table, std::span<const int> ids) {
    return constant(gather_columns(table.value, ids));
}

Expr Graph::record(Matrix value, std::initializer_list<Expr> inputs, Backward backward) {
    return record(std::move(value), std::span<const Expr>(inputs.begin(), inputs.size()),
                  std::move(backward));
}

Expr Graph::record(Matrix value, std::span<const Expr> inputs, Backward backward) {
    Node node;
    node.value = std::move(value);
    for (const Expr& in : inputs) {
        if (&in.graph() != this) {
            throw std::logic_error("expression belongs to a different graph");
        }
        node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    if (node.requires_grad) {
        node.backward = std::move(backward);
    }
    return push(std::move(node));
}

Matrix& Graph::grad_ref(std::size_t id) {
    Node& node = nodes_[id];
    if (!node.grad_ready) {
        node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
        node.grad_ready = true;
    }
    return node.grad;
}

Rng& Graph::rng() {
    if (rng_ == nullptr) {
        throw std::logic_error("graph has no random source (needed for dropout in training mode)");
    }
    return *rng_;
}

void Graph::backward(Expr loss) {
    if (&loss.graph() != this || loss.value().size() != 1) {
        throw std::logic_error("backward requires a scalar node of this graph");
    }
    if (!nodes_[loss.id()].requires_grad) {
        return;
    }
    grad_ref(loss.id()).setOnes();
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.requires_grad || !node.grad_ready) {
            continue;
        }
        if (node.backward) {
            node.backward(*this, node.grad);
        }
        if (node.param != nullptr) {
            Matrix& pg = node.param->grad;
            if (pg.rows() != node.param->value.rows() || pg.cols() != node.param->value.cols()) {
                pg = Matrix::Zero(node.param->value.rows(), node.param->value.cols());
            }
            if (node.is_lookup) {
                for (std::size_t j = 0; j < node.lookup_ids.size(); ++j) {
                    pg.col(node.lookup_ids[j]) += node.grad.col(static_cast<Index>(j));
                }
            } else {
                pg += node.grad;
            }
        }
    }
}

}  // namespace mhqg::nn
