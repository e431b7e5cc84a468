#include "mhqg/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mhqg::nn {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

void require_same_shape(Expr a, Expr b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                    "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                    "x" + std::to_string(b.cols()));
    }
}

double sigmoid_scalar(double x) {
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Expr matmul(Expr a, Expr b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.rows()) + ")");
    }
    Matrix v = a.value() * b.value();
    auto ia = a.id(), ib = b.id();
    return a.graph().record(std::move(v), {a, b}, [ia, ib](Graph& g, const Matrix& dy) {
        if (g.requires_grad(ia)) g.grad_ref(ia).noalias() += dy * g.value(ib).transpose();
        if (g.requires_grad(ib)) g.grad_ref(ib).noalias() += g.value(ia).transpose() * dy;
    });
}

Expr add(Expr a, Expr b) {
    require_same_shape(a, b, "add");
    auto ia = a.id(), ib = b.id();
    return a.graph().record(a.value() + b.value(), {a, b}, [ia, ib](Graph& g, const Matrix& dy) {
        if (g.requires_grad(ia)) g.grad_ref(ia) += dy;
        if (g.requires_grad(ib)) g.grad_ref(ib) += dy;
    });
}

Expr sub(Expr a, Expr b) {
    require_same_shape(a, b, "sub");
    auto ia = a.id(), ib = b.id();
    return a.graph().record(a.value() - b.value(), {a, b}, [ia, ib](Graph& g, const Matrix& dy) {
        if (g.requires_grad(ia)) g.grad_ref(ia) += dy;
        if (g.requires_grad(ib)) g.grad_ref(ib) -= dy;
    });
}

Expr cmult(Expr a, Expr b) {
    require_same_shape(a, b, "cmult");
    auto ia = a.id(), ib = b.id();
    return a.graph().record(a.value().cwiseProduct(b.value()), {a, b},
                            [ia, ib](Graph& g, const Matrix& dy) {
                                if (g.requires_grad(ia)) g.grad_ref(ia) += dy.cwiseProduct(g.value(ib));
                                if (g.requires_grad(ib)) g.grad_ref(ib) += dy.cwiseProduct(g.value(ia));
                            });
}

Expr scale(Expr x, double factor) { return affine_scalar(x, factor, 0.0); }

Expr affine_scalar(Expr x, double factor, double offset) {
    auto ix = x.id();
    Matrix v = (factor * x.value().array() + offset).matrix();
    return x.graph().record(std::move(v), {x}, [ix, factor](Graph& g, const Matrix& dy) {
        g.grad_ref(ix) += factor * dy;
    });
}

Expr scalar_mul(Expr s, Expr x) {
    require(s.value().size() == 1, "scalar_mul: first operand must be 1x1");
    auto is = s.id(), ix = x.id();
    return s.graph().record(s.scalar() * x.value(), {s, x}, [is, ix](Graph& g, const Matrix& dy) {
        if (g.requires_grad(is)) g.grad_ref(is)(0, 0) += dy.cwiseProduct(g.value(ix)).sum();
        if (g.requires_grad(ix)) g.grad_ref(ix) += g.value(is)(0, 0) * dy;
    });
}

Expr sum(std::span<const Expr> terms) {
    require(!terms.empty(), "sum: no terms");
    Matrix v = terms.front().value();
    for (std::size_t i = 1; i < terms.size(); ++i) {
        require_same_shape(terms.front(), terms[i], "sum");
        v += terms[i].value();
    }
    std::vector<std::size_t> ids;
    ids.reserve(terms.size());
    for (const Expr& t : terms) ids.push_back(t.id());
    return terms.front().graph().record(std::move(v), terms, [ids](Graph& g, const Matrix& dy) {
        for (auto id : ids) {
            if (g.requires_grad(id)) g.grad_ref(id) += dy;
        }
    });
}

Expr sum_all(Expr x) {
    auto ix = x.id();
    Matrix v(1, 1);
    v(0, 0) = x.value().sum();
    return x.graph().record(std::move(v), {x}, [ix](Graph& g, const Matrix& dy) {
        g.grad_ref(ix).array() += dy(0, 0);
    });
}

Expr add_bias(Expr x, Expr b) {
    require(b.cols() == 1 && b.rows() == x.rows(), "add_bias: bias must be a column matching rows");
    auto ix = x.id(), ib = b.id();
    Matrix v = x.value().colwise() + b.value().col(0);
    return x.graph().record(std::move(v), {x, b}, [ix, ib](Graph& g, const Matrix& dy) {
        if (g.requires_grad(ix)) g.grad_ref(ix) += dy;
        if (g.requires_grad(ib)) g.grad_ref(ib) += dy.rowwise().sum();
    });
}

Expr affine(Expr weight, Expr x, Expr bias) { return add_bias(matmul(weight, x), bias); }

Expr broadcast_cols(Expr column_expr, Index count) {
    require(column_expr.cols() == 1, "broadcast_cols: input must be a column");
    auto ic = column_expr.id();
    Matrix v = column_expr.value().replicate(1, count);
    return column_expr.graph().record(std::move(v), {column_expr}, [ic](Graph& g, const Matrix& dy) {
        g.grad_ref(ic) += dy.rowwise().sum();
    });
}

Expr broadcast_rows(Expr row, Index count) {
    require(row.rows() == 1, "broadcast_rows: input must be a row");
    auto ir = row.id();
    Matrix v = row.value().replicate(count, 1);
    return row.graph().record(std::move(v), {row}, [ir](Graph& g, const Matrix& dy) {
        g.grad_ref(ir) += dy.colwise().sum();
    });
}

Expr sigmoid(Expr x) {
    auto ix = x.id();
    Matrix v = x.value().unaryExpr([](double t) { return sigmoid_scalar(t); });
    Matrix y = v;
    return x.graph().record(std::move(v), {x}, [ix, y = std::move(y)](Graph& g, const Matrix& dy) {
        g.grad_ref(ix).array() += dy.array() * y.array() * (1.0 - y.array());
    });
}

Expr tanh(Expr x) {
    auto ix = x.id();
    Matrix v = x.value().array().tanh().matrix();
    Matrix y = v;
    return x.graph().record(std::move(v), {x}, [ix, y = std::move(y)](Graph& g, const Matrix& dy) {
        g.grad_ref(ix).array() += dy.array() * (1.0 - y.array().square());
    });
}

Expr relu(Expr x) {
    auto ix = x.id();
    Matrix v = x.value().cwiseMax(0.0);
    return x.graph().record(std::move(v), {x}, [ix](Graph& g, const Matrix& dy) {
        g.grad_ref(ix).array() += (g.value(ix).array() > 0.0).cast<double>() * dy.array();
    });
}

Expr log_clamped(Expr x, double eps) {
    auto ix = x.id();
    Matrix v = x.value().unaryExpr([eps](double t) { return std::log(std::max(t, eps)); });
    return x.graph().record(std::move(v), {x}, [ix, eps](Graph& g, const Matrix& dy) {
        const Matrix& in = g.value(ix);
        Matrix& gx = g.grad_ref(ix);
        for (Index i = 0; i < in.size(); ++i) {
            if (in(i) > eps) gx(i) += dy(i) / in(i);
        }
    });
}

Expr dropout(Expr x, double rate) {
    Graph& graph = x.graph();
    if (!graph.training() || rate <= 0.0) {
        return x;
    }
    require(rate < 1.0, "dropout: rate must be below 1");
    std::bernoulli_distribution keep(1.0 - rate);
    Matrix mask(x.rows(), x.cols());
    Rng& rng = graph.rng();
    for (Index i = 0; i < mask.size(); ++i) {
        mask(i) = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
    }
    auto ix = x.id();
    Matrix v = x.value().cwiseProduct(mask);
    return graph.record(std::move(v), {x}, [ix, mask = std::move(mask)](Graph& g, const Matrix& dy) {
        g.grad_ref(ix) += dy.cwiseProduct(mask);
    });
}

Expr softmax_cols(Expr x) {
    Matrix v(x.rows(), x.cols());
    const Matrix& in = x.value();
    for (Index j = 0; j < in.cols(); ++j) {
        double m = in.col(j).maxCoeff();
        v.col(j) = (in.col(j).array() - m).exp().matrix();
        v.col(j) /= v.col(j).sum();
    }
    auto ix = x.id();
    Matrix y = v;
    return x.graph().record(std::move(v), {x}, [ix, y = std::move(y)](Graph& g, const Matrix& dy) {
        Matrix& gx = g.grad_ref(ix);
        for (Index j = 0; j < y.cols(); ++j) {
            double dot = y.col(j).dot(dy.col(j));
            gx.col(j).array() += y.col(j).array() * (dy.col(j).array() - dot);
        }
    });
}

Expr max_cols(Expr x) {
    require(x.cols() > 0, "max_cols: empty input");
    const Matrix& in = x.value();
    Matrix v(in.rows(), 1);
    std::vector<Index> arg(static_cast<std::size_t>(in.rows()));
    for (Index i = 0; i < in.rows(); ++i) {
        Index best = 0;
        v(i, 0) = in.row(i).maxCoeff(&best);
        arg[static_cast<std::size_t>(i)] = best;
    }
    auto ix = x.id();
    return x.graph().record(std::move(v), {x}, [ix, arg = std::move(arg)](Graph& g, const Matrix& dy) {
        Matrix& gx = g.grad_ref(ix);
        for (std::size_t i = 0; i < arg.size(); ++i) {
            gx(static_cast<Index>(i), arg[i]) += dy(static_cast<Index>(i), 0);
        }
    });
}

Expr segment_max_cols(Expr x, std::span<const Index> segment_ends) {
    const Matrix& in = x.value();
    Matrix v(in.rows(), static_cast<Index>(segment_ends.size()));
    std::vector<Index> arg(static_cast<std::size_t>(v.size()));
    Index begin = 0;
    for (std::size_t s = 0; s < segment_ends.size(); ++s) {
        const Index end = segment_ends[s];
        require(end > begin && end <= in.cols(), "segment_max_cols: segments must be non-empty and ordered");
        for (Index i = 0; i < in.rows(); ++i) {
            Index best = 0;
            v(i, static_cast<Index>(s)) = in.row(i).segment(begin, end - begin).maxCoeff(&best);
            arg[static_cast<std::size_t>(static_cast<Index>(s) * in.rows() + i)] = begin + best;
        }
        begin = end;
    }
    auto ix = x.id();
    const Index rows = in.rows();
    return x.graph().record(std::move(v), {x}, [ix, rows, arg = std::move(arg)](Graph& g, const Matrix& dy) {
        Matrix& gx = g.grad_ref(ix);
        for (Index s = 0; s < dy.cols(); ++s) {
            for (Index i = 0; i < rows; ++i) gx(i, arg[static_cast<std::size_t>(s * rows + i)]) += dy(i, s);
        }
    });
}

Expr slice_cols(Expr x, Index start, Index count) {
    require(start >= 0 && count > 0 && start + count <= x.cols(), "slice_cols: range outside input");
    auto ix = x.id();
    return x.graph().record(x.value().middleCols(start, count), {x}, [ix, start, count](Graph& g, const Matrix& dy) {
        g.grad_ref(ix).middleCols(start, count) += dy;
    });
}

Expr transpose(Expr x) {
    auto ix = x.id();
    return x.graph().record(x.value().transpose(), {x}, [ix](Graph& g, const Matrix& dy) {
        g.grad_ref(ix) += dy.transpose();
    });
}

Expr concat_rows(std::span<const Expr> parts) {
    require(!parts.empty(), "concat_rows: no parts");
    Index cols = parts.front().cols();
    Index rows = 0;
    for (const Expr& p : parts) {
        require(p.cols() == cols, "concat_rows: column counts differ");
        rows += p.rows();
    }
    Matrix v(rows, cols);
    std::vector<std::pair<std::size_t, Index>> layout;
    layout.reserve(parts.size());
    Index offset = 0;
    for (const Expr& p : parts) {
        v.middleRows(offset, p.rows()) = p.value();
        layout.emplace_back(p.id(), offset);
        offset += p.rows();
    }
    return parts.front().graph().record(std::move(v), parts, [layout](Graph& g, const Matrix& dy) {
        for (const auto& [id, off] : layout) {
            if (!g.requires_grad(id)) continue;
            Matrix& gp = g.grad_ref(id);
            gp += dy.middleRows(off, gp.rows());
        }
    });
}

Expr concat_cols(std::span<const Expr> parts) {
    require(!parts.empty(), "concat_cols: no parts");
    Index rows = parts.front().rows();
    Index cols = 0;
    for (const Expr& p : parts) {
        require(p.rows() == rows, "concat_cols: row counts differ");
        cols += p.cols();
    }
    Matrix v(rows, cols);
    std::vector<std::pair<std::size_t, Index>> layout;
    layout.reserve(parts.size());
    Index offset = 0;
    for (const Expr& p : parts) {
        v.middleCols(offset, p.cols()) = p.value();
        layout.emplace_back(p.id(), offset);
        offset += p.cols();
    }
    return parts.front().graph().record(std::move(v), parts, [layout](Graph& g, const Matrix& dy) {
        for (const auto& [id, off] : layout) {
            if (!g.requires_grad(id)) continue;
            Matrix& gp = g.grad_ref(id);
            gp += dy.middleCols(off, gp.cols());
        }
    });
}

Expr slice_rows(Expr x, Index start, Index count) {
    require(start >= 0 && count >= 0 && start + count <= x.rows(), "slice_rows: range out of bounds");
    auto ix = x.id();
    return x.graph().record(x.value().middleRows(start, count), {x},
                            [ix, start, count](Graph& g, const Matrix& dy) {
                                g.grad_ref(ix).middleRows(start, count) += dy;
                            });
}

Expr column(Expr x, Index j) {
    require(j >= 0 && j < x.cols(), "column: index out of bounds");
    auto ix = x.id();
    return x.graph().record(x.value().col(j), {x}, [ix, j](Graph& g, const Matrix& dy) {
        g.grad_ref(ix).col(j) += dy.col(0);
    });
}

Expr element(Expr x, Index i, Index j) {
    require(i >= 0 && i < x.rows() && j >= 0 && j < x.cols(), "element: index out of bounds");
    auto ix = x.id();
    Matrix v(1, 1);
    v(0, 0) = x.value()(i, j);
    return x.graph().record(std::move(v), {x}, [ix, i, j](Graph& g, const Matrix& dy) {
        g.grad_ref(ix)(i, j) += dy(0, 0);
    });
}

Expr pad_rows(Expr x, Index total) {
    require(x.cols() == 1 && total >= x.rows(), "pad_rows: needs a column no longer than total");
    Matrix v = Matrix::Zero(total, 1);
    v.topRows(x.rows()) = x.value();
    auto ix = x.id();
    Index n = x.rows();
    return x.graph().record(std::move(v), {x}, [ix, n](Graph& g, const Matrix& dy) {
        g.grad_ref(ix) += dy.topRows(n);
    });
}

Expr scatter_add(Expr x, std::span<const int> indices, Index size) {
    require(x.cols() == 1 && x.rows() == static_cast<Index>(indices.size()),
            "scatter_add: one index per row required");
    Matrix v = Matrix::Zero(size, 1);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        require(indices[i] >= 0 && indices[i] < size, "scatter_add: index out of range");
        v(indices[i], 0) += x.value()(static_cast<Index>(i), 0);
    }
    auto ix = x.id();
    std::vector<int> idx(indices.begin(), indices.end());
    return x.graph().record(std::move(v), {x}, [ix, idx = std::move(idx)](Graph& g, const Matrix& dy) {
        Matrix& gx = g.grad_ref(ix);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            gx(static_cast<Index>(i), 0) += dy(idx[i], 0);
        }
    });
}

Expr im2col(Expr x, Index width) {
    require(width >= 1 && x.cols() >= width, "im2col: input shorter than window");
    const Index d = x.rows();
    const Index windows = x.cols() - width + 1;
    Matrix v(width * d, windows);
    for (Index w = 0; w < windows; ++w) {
        for (Index k = 0; k < width; ++k) {
            v.block(k * d, w, d, 1) = x.value().col(w + k);
        }
    }
    auto ix = x.id();
    return x.graph().record(std::move(v), {x}, [ix, width, d, windows](Graph& g, const Matrix& dy) {
        Matrix& gx = g.grad_ref(ix);
        for (Index w = 0; w < windows; ++w) {
            for (Index k = 0; k < width; ++k) {
                gx.col(w + k) += dy.block(k * d, w, d, 1);
            }
        }
    });
}

Expr lstm_cell(Expr gates, Expr prev_cell) {
    const Index h = prev_cell.rows();
    require(gates.cols() == 1 && prev_cell.cols() == 1 && gates.rows() == 4 * h,
            "lstm_cell: gates must be 4H×1 for an H×1 cell");
    const Matrix& z = gates.value();
    auto sig = [](double t) { return sigmoid_scalar(t); };
    Vector i = z.middleRows(0, h).unaryExpr(sig);
    Vector f = z.middleRows(h, h).unaryExpr(sig);
    Vector c_hat = z.middleRows(2 * h, h).array().tanh();
    Vector o = z.middleRows(3 * h, h).unaryExpr(sig);
    Vector c = f.cwiseProduct(prev_cell.value().col(0)) + i.cwiseProduct(c_hat);
    Vector tc = c.array().tanh();
    Matrix v(2 * h, 1);
    v.topRows(h) = o.cwiseProduct(tc);
    v.bottomRows(h) = c;
    auto ig = gates.id(), ic = prev_cell.id();
    return gates.graph().record(
        std::move(v), {gates, prev_cell},
        [ig, ic, h, i, f, c_hat, o, tc](Graph& g, const Matrix& dy) {
            Vector dh = dy.topRows(h);
            Vector dc = dy.bottomRows(h).col(0) +
                        dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix());
            const Vector& c_prev = g.value(ic).col(0);
            if (g.requires_grad(ig)) {
                Matrix& gz = g.grad_ref(ig);
                gz.middleRows(0, h).array() +=
                    dc.array() * c_hat.array() * i.array() * (1.0 - i.array());
                gz.middleRows(h, h).array() +=
                    dc.array() * c_prev.array() * f.array() * (1.0 - f.array());
                gz.middleRows(2 * h, h).array() +=
                    dc.array() * i.array() * (1.0 - c_hat.array().square());
                gz.middleRows(3 * h, h).array() +=
                    dh.array() * tc.array() * o.array() * (1.0 - o.array());
            }
            if (g.requires_grad(ic)) {
                g.grad_ref(ic).col(0) += dc.cwiseProduct(f);
            }
        });
}

}  // namespace mhqg::nn
