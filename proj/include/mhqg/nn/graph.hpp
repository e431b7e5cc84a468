#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <unordered_map>

namespace mhqg::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// A named trainable tensor. Embedding tables store one column per entry.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
};

class Graph;

/// Handle to a node on a Graph. Cheap to copy; valid for the graph's lifetime.
class Expr {
public:
    Expr() = default;
    Expr(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

    const Matrix& value() const;
    double scalar() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }

    Graph& graph() const { return *graph_; }
    std::size_t id() const { return id_; }
    bool valid() const { return graph_ != nullptr; }

private:
    Graph* graph_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in topological order, so backward()
/// just walks the tape in reverse.
class Graph {
public:
    using Backward = std::function<void(Graph&, const Matrix& out_grad)>;

    explicit Graph(bool training = false, Rng* rng = nullptr) : training_(training), rng_(rng) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Expr constant(Matrix value);
    Expr parameter(Parameter& p);
    Expr parameter(const Parameter& p);
    /// d×n matrix whose j-th column is column ids[j] of the table.
    Expr lookup_columns(Parameter& table, std::span<const int> ids);
    Expr lookup_columns(const Parameter& table, std::span<const int> ids);

    Expr record(Matrix value, std::initializer_list<Expr> inputs, Backward backward);
    Expr record(Matrix value, std::span<const Expr> inputs, Backward backward);

    /// Seeds d(loss)/d(loss) = 1 and accumulates into Parameter::grad.
    void backward(Expr loss);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Gradient buffer of a node, zero-initialized on first access.
    Matrix& grad_ref(std::size_t id);

    bool training() const { return training_; }
    Rng& rng();
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        Parameter* param = nullptr;
        std::vector<int> lookup_ids;
        bool is_lookup = false;
        bool requires_grad = false;
        bool grad_ready = false;
    };

    Expr push(Node node);

    std::deque<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;
    bool training_;
    Rng* rng_;
};

}  // namespace mhqg::nn
