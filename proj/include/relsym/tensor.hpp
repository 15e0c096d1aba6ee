#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "relsym/errors.hpp"

namespace relsym {

namespace detail {

/// One node of the reverse-mode tape. Values are immutable after the forward
/// op that created them; `grad` is filled during backward().
struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop; // empty for leaves

    std::size_t size() const { return rows * cols; }
    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), 0.0);
    }
};

// ---------------------------------------------------------------------------
// Row-major kernels. All loops are ikj-style accumulations with fixed
// iteration order: the compiler can vectorize them without reassociating
// floating-point sums, which keeps results bit-reproducible.
// ---------------------------------------------------------------------------

/// c += a @ b, a: m x p, b: p x n, c: m x n
inline void gemm_acc(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t p, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * p;
        double* crow = c + i * n;
        for (std::size_t k = 0; k < p; ++k) {
            const double aik = arow[k];
            const double* brow = b + k * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

inline std::vector<double> transposed(const double* a, std::size_t rows, std::size_t cols) {
    std::vector<double> t(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) t[j * rows + i] = a[i * cols + j];
    return t;
}

inline std::string shape_str(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

} // namespace detail

/// A rank-2 tensor of doubles with reverse-mode gradients. Scalars are 1x1.
/// Cheap to copy (shared handle to the tape node).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false) {
        return full(rows, cols, 0.0, requires_grad);
    }

    static Tensor full(std::size_t rows, std::size_t cols, double v, bool requires_grad = false) {
        auto n = std::make_shared<detail::Node>();
        n->rows = rows;
        n->cols = cols;
        n->val.assign(rows * cols, v);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor make(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false) {
        if (data.size() != rows * cols)
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + detail::shape_str(rows, cols));
        auto n = std::make_shared<detail::Node>();
        n->rows = rows;
        n->cols = cols;
        n->val = std::move(data);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor scalar(double v, bool requires_grad = false) { return full(1, 1, v, requires_grad); }

    bool defined() const { return static_cast<bool>(n_); }
    std::size_t rows() const { return n_->rows; }
    std::size_t cols() const { return n_->cols; }
    std::size_t size() const { return n_->size(); }
    std::vector<std::size_t> shape() const { return {n_->rows, n_->cols}; }
    bool requires_grad() const { return n_->requires_grad; }

    double at(std::size_t r, std::size_t c) const { return n_->val[r * n_->cols + c]; }
    double item() const {
        if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_string());
        return n_->val[0];
    }

    const std::vector<double>& value() const { return n_->val; }

    /// Gradient accumulated by backward(); zeros if never reached.
    std::vector<double> grad() const {
        if (n_->grad.size() == n_->val.size()) return n_->grad;
        return std::vector<double>(n_->val.size(), 0.0);
    }

    void zero_grad() { n_->grad.assign(n_->val.size(), 0.0); }

    /// Mutable access to the raw values. Reserved for the optimizer and
    /// initializer; graph results must never be written through this.
    std::vector<double>& data_mut() { return n_->val; }

    /// Value copy detached from the tape.
    Tensor detached() const {
        auto n = std::make_shared<detail::Node>();
        n->rows = n_->rows;
        n->cols = n_->cols;
        n->val = n_->val;
        return Tensor(std::move(n));
    }

    std::string shape_string() const { return detail::shape_str(n_->rows, n_->cols); }

    std::shared_ptr<detail::Node> node() const { return n_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : n_(std::move(n)) {}
    std::shared_ptr<detail::Node> n_;

    friend Tensor op_result(std::size_t, std::size_t, std::vector<double>,
                            std::vector<Tensor>, std::function<void(detail::Node&)>);
};

inline Tensor op_result(std::size_t rows, std::size_t cols, std::vector<double> val,
                        std::vector<Tensor> parents, std::function<void(detail::Node&)> backprop) {
    auto n = std::make_shared<detail::Node>();
    n->rows = rows;
    n->cols = cols;
    n->val = std::move(val);
    bool needs = false;
    n->parents.reserve(parents.size());
    for (const auto& p : parents) {
        needs = needs || p.requires_grad();
        n->parents.push_back(p.node());
    }
    n->requires_grad = needs;
    if (needs) n->backprop = std::move(backprop);
    return Tensor(std::move(n));
}

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner extents differ, lhs " + a.shape_string() +
                         " vs rhs " + b.shape_string());
    const std::size_t m = a.rows(), p = a.cols(), n = b.cols();
    std::vector<double> out(m * n, 0.0);
    detail::gemm_acc(a.value().data(), b.value().data(), out.data(), m, p, n);
    return op_result(m, n, std::move(out), {a, b}, [m, p, n](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            auto bt = detail::transposed(pb.val.data(), p, n); // n x p
            detail::gemm_acc(self.grad.data(), bt.data(), pa.grad.data(), m, n, p);
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            auto at = detail::transposed(pa.val.data(), m, p); // p x m
            detail::gemm_acc(at.data(), self.grad.data(), pb.grad.data(), p, m, n);
        }
    });
}

inline Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    return op_result(n, m, detail::transposed(a.value().data(), m, n), {a},
                     [m, n](detail::Node& self) {
                         auto& pa = *self.parents[0];
                         pa.ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = 0; j < m; ++j)
                                 pa.grad[j * n + i] += self.grad[i * m + j];
                     });
}

namespace detail {
inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shapes differ, " + a.shape_string() +
                         " vs " + b.shape_string());
}
} // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
    return op_result(a.rows(), a.cols(), std::move(out), {a, b}, [](detail::Node& self) {
        for (auto& p : self.parents) {
            if (!p->requires_grad) continue;
            p->ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
    return op_result(a.rows(), a.cols(), std::move(out), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
        }
    });
}

/// Elementwise (Hadamard) product.
inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    return op_result(a.rows(), a.cols(), std::move(out), {a, b}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pa.grad[i] += self.grad[i] * pb.val[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pb.grad[i] += self.grad[i] * pa.val[i];
        }
    });
}

/// x + b with b broadcast over rows (b is 1 x cols).
inline Tensor add_bias(const Tensor& x, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != x.cols())
        throw ShapeError("add_bias: bias " + b.shape_string() + " does not broadcast over " +
                         x.shape_string());
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.value()[i * n + j] + b.value()[j];
    return op_result(m, n, std::move(out), {x, b}, [m, n](detail::Node& self) {
        auto& px = *self.parents[0];
        auto& pb = *self.parents[1];
        if (px.requires_grad) {
            px.ensure_grad();
            for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) pb.grad[j] += self.grad[i * n + j];
        }
    });
}

inline Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * c;
    return op_result(a.rows(), a.cols(), std::move(out), {a}, [c](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += c * self.grad[i];
    });
}

/// ReLU; subgradient 0 at the kink.
inline Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] > 0.0 ? a.value()[i] : 0.0;
    return op_result(a.rows(), a.cols(), std::move(out), {a}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (pa.val[i] > 0.0) pa.grad[i] += self.grad[i];
    });
}

inline Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.value()[i]));
    return op_result(a.rows(), a.cols(), std::move(out), {a}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double y = self.val[i];
            pa.grad[i] += self.grad[i] * y * (1.0 - y);
        }
    });
}

inline Tensor square(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * a.value()[i];
    return op_result(a.rows(), a.cols(), std::move(out), {a}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            pa.grad[i] += 2.0 * pa.val[i] * self.grad[i];
    });
}

inline Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.value()) s += v;
    return op_result(1, 1, {s}, {a}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[0];
    });
}

inline Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw ContractError("mean of empty tensor");
    double s = 0.0;
    for (double v : a.value()) s += v;
    const double inv = 1.0 / static_cast<double>(a.size());
    return op_result(1, 1, {s * inv}, {a}, [inv](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[0] * inv;
    });
}

inline Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    if (r0 > r1 || r1 > a.rows())
        throw ShapeError("slice_rows [" + std::to_string(r0) + "," + std::to_string(r1) +
                         ") out of range for " + a.shape_string());
    const std::size_t n = a.cols(), m = r1 - r0;
    std::vector<double> out(a.value().begin() + r0 * n, a.value().begin() + r1 * n);
    return op_result(m, n, std::move(out), {a}, [r0, n](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[r0 * n + i] += self.grad[i];
    });
}

inline Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
    if (c0 > c1 || c1 > a.cols())
        throw ShapeError("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") out of range for " + a.shape_string());
    const std::size_t m = a.rows(), w = c1 - c0, n = a.cols();
    std::vector<double> out(m * w);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.value()[i * n + c0 + j];
    return op_result(m, w, std::move(out), {a}, [c0, w, n](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.rows; ++i)
            for (std::size_t j = 0; j < w; ++j)
                pa.grad[i * n + c0 + j] += self.grad[i * w + j];
    });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols of zero tensors");
    const std::size_t m = parts[0].rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != m)
            throw ShapeError("concat_cols: row mismatch, " + parts[0].shape_string() + " vs " +
                             p.shape_string());
        total += p.cols();
    }
    std::vector<double> out(m * total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t w = p.cols();
        for (std::size_t i = 0; i < m; ++i)
            std::copy_n(p.value().data() + i * w, w, out.data() + i * total + off);
        off += w;
    }
    return op_result(m, total, std::move(out), parts, [m, total](detail::Node& self) {
        std::size_t off = 0;
        for (auto& p : self.parents) {
            const std::size_t w = p->cols;
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < w; ++j)
                        p->grad[i * w + j] += self.grad[i * total + off + j];
            }
            off += w;
        }
    });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_rows of zero tensors");
    const std::size_t n = parts[0].cols();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.cols() != n)
            throw ShapeError("concat_rows: column mismatch, " + parts[0].shape_string() + " vs " +
                             p.shape_string());
        total += p.rows();
    }
    std::vector<double> out;
    out.reserve(total * n);
    for (const auto& p : parts) out.insert(out.end(), p.value().begin(), p.value().end());
    return op_result(total, n, std::move(out), parts, [](detail::Node& self) {
        std::size_t off = 0;
        for (auto& p : self.parents) {
            const std::size_t len = p->size();
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < len; ++i) p->grad[i] += self.grad[off + i];
            }
            off += len;
        }
    });
}

/// Row-major reinterpretation to a new shape with the same element count.
inline Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
    if (rows * cols != a.size())
        throw ShapeError("reshape: " + a.shape_string() + " has " + std::to_string(a.size()) +
                         " elements, target " + detail::shape_str(rows, cols));
    return op_result(rows, cols, a.value(), {a}, [](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    });
}

/// out[r] = a[indices[r]]; backward scatter-adds into the gathered rows.
inline Tensor gather_rows(const Tensor& a, std::vector<std::size_t> indices) {
    const std::size_t n = a.cols();
    std::vector<double> out(indices.size() * n);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] >= a.rows())
            throw ShapeError("gather_rows: index " + std::to_string(indices[r]) +
                             " out of range for " + a.shape_string());
        std::copy_n(a.value().data() + indices[r] * n, n, out.data() + r * n);
    }
    const std::size_t m = indices.size();
    return op_result(m, n, std::move(out), {a},
                     [idx = std::move(indices), n](detail::Node& self) {
                         auto& pa = *self.parents[0];
                         pa.ensure_grad();
                         for (std::size_t r = 0; r < idx.size(); ++r)
                             for (std::size_t j = 0; j < n; ++j)
                                 pa.grad[idx[r] * n + j] += self.grad[r * n + j];
                     });
}

/// Numerically stable row softmax.
inline Tensor softmax_rows(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = a.value().data() + i * n;
        double mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) denom += std::exp(row[j] - mx);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = std::exp(row[j] - mx) / denom;
    }
    return op_result(m, n, std::move(out), {a}, [m, n](detail::Node& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            const double* y = self.val.data() + i * n;
            const double* g = self.grad.data() + i * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
            for (std::size_t j = 0; j < n; ++j) pa.grad[i * n + j] += y[j] * (g[j] - dot);
        }
    });
}

// ---------------------------------------------------------------------------
// Reverse pass
// ---------------------------------------------------------------------------

/// Accumulates dLoss/d(leaf) into every reachable leaf that requires grad.
/// Interior gradients are rebuilt per call, so repeated backward calls on
/// different losses over the same parameters add up linearly.
inline void backward(const Tensor& loss) {
    if (loss.rows() != 1 || loss.cols() != 1)
        throw ContractError("backward: loss must be a scalar, got " + loss.shape_string());
    detail::Node* root = loss.node().get();
    if (!root->requires_grad) return;

    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{root, 0}};
    seen.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        bool descended = false;
        while (next < node->parents.size()) {
            detail::Node* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) {
                stack.emplace_back(p, 0);
                descended = true;
                break;
            }
        }
        if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
            order.push_back(stack.back().first);
            stack.pop_back();
        }
    }

    // Interior grads reset per pass; leaf grads persist and accumulate.
    for (detail::Node* n : order) {
        if (n->backprop)
            n->grad.assign(n->val.size(), 0.0);
        else
            n->ensure_grad();
    }
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backprop) (*it)->backprop(**it);
}

/// Order-canonical sum: sorts addends by bit pattern before folding, so the
/// result is independent of the order the values arrived in. Used by the
/// hard-mode (deterministic) model paths, where reductions run over objects
/// and must not depend on object ordering.
inline double canonical_sum(std::span<const double> values) {
    std::vector<std::uint64_t> bits(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) bits[i] = std::bit_cast<std::uint64_t>(values[i]);
    std::sort(bits.begin(), bits.end());
    double acc = 0.0;
    for (std::uint64_t b : bits) acc += std::bit_cast<double>(b);
    return acc;
}

} // namespace relsym
