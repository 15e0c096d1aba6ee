#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "relsym/rng.hpp"
#include "relsym/tensor.hpp"

namespace relsym {

/// Named map of trainable leaf tensors. Iteration is sorted by path
/// (std::map), which fixes the order of every loop over parameters.
class ParameterSet {
public:
    ParameterSet() = default;
    explicit ParameterSet(std::uint64_t rng_seed) : seed_(rng_seed) {}

    std::uint64_t rng_seed() const { return seed_; }

    /// Weight initialized uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a
    /// deterministic stream named by the parameter path.
    Tensor& add_weight(const std::string& path, std::size_t fan_in, std::size_t fan_out) {
        Rng rng = Rng::stream(seed_, path);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<double> data(fan_in * fan_out);
        for (double& v : data) v = rng.uniform(-bound, bound);
        return insert(path, Tensor::make(fan_in, fan_out, std::move(data), true));
    }

    Tensor& add_zeros(const std::string& path, std::size_t rows, std::size_t cols) {
        return insert(path, Tensor::zeros(rows, cols, true));
    }

    Tensor& at(const std::string& path) {
        auto it = params_.find(path);
        if (it == params_.end()) throw ContractError("unknown parameter path: " + path);
        return it->second;
    }
    const Tensor& at(const std::string& path) const {
        auto it = params_.find(path);
        if (it == params_.end()) throw ContractError("unknown parameter path: " + path);
        return it->second;
    }
    bool contains(const std::string& path) const { return params_.count(path) != 0; }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    std::size_t count() const { return params_.size(); }

    void zero_grad() {
        for (auto& [path, t] : params_) t.zero_grad();
    }

    std::size_t element_count() const {
        std::size_t n = 0;
        for (const auto& [path, t] : params_) n += t.size();
        return n;
    }

    /// Copy with requires_grad stripped, for deterministic evaluation passes.
    ParameterSet frozen() const {
        ParameterSet out(seed_);
        for (const auto& [path, t] : params_)
            out.insert(path, Tensor::make(t.rows(), t.cols(), t.value(), false));
        return out;
    }

private:
    Tensor& insert(const std::string& path, Tensor t) {
        auto [it, fresh] = params_.emplace(path, std::move(t));
        if (!fresh) throw ContractError("duplicate parameter path: " + path);
        return it->second;
    }

    std::map<std::string, Tensor> params_;
    std::uint64_t seed_ = 0;
};

// ---------------------------------------------------------------------------
// Shared-weight MLP applied independently to each input row.
// ---------------------------------------------------------------------------

/// Registers parameters for a stack of linear layers `widths[0] -> ... ->
/// widths.back()`. Layer i lives at "<prefix>.l<i>.w" / "<prefix>.l<i>.b".
inline void init_mlp(ParameterSet& params, const std::string& prefix,
                     std::span<const std::size_t> widths) {
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::string base = prefix + ".l" + std::to_string(i);
        params.add_weight(base + ".w", widths[i], widths[i + 1]);
        params.add_zeros(base + ".b", 1, widths[i + 1]);
    }
}

/// Forward through the stack registered by init_mlp. ReLU after every layer
/// except the last; `activate_last` turns the final ReLU back on (used for
/// trunks whose output is itself a hidden representation).
inline Tensor mlp_forward(const ParameterSet& params, const std::string& prefix, const Tensor& x,
                          std::span<const std::size_t> widths, bool activate_last = false) {
    if (x.cols() != widths[0])
        throw ShapeError(prefix + ": input " + x.shape_string() + " does not match layer width " +
                         std::to_string(widths[0]));
    Tensor h = x;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const std::string base = prefix + ".l" + std::to_string(i);
        h = add_bias(matmul(h, params.at(base + ".w")), params.at(base + ".b"));
        if (i + 2 < widths.size() || activate_last) h = relu(h);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

struct GradCheckEntry {
    std::string path;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> per_parameter;
    double max_rel_err = 0.0;
};

namespace detail {
inline double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
    return std::fabs(analytic - numeric) / denom;
}
} // namespace detail

/// Central finite differences against the analytic gradients of `f`.
/// `f` must be deterministic given the parameters (freeze any noise source).
/// Reports the max relative error per parameter path; relative error uses a
/// small absolute floor so near-zero gradients stay meaningful.
template <class F>
GradCheckReport grad_check(F&& f, ParameterSet& params, double eps = 1e-5) {
    params.zero_grad();
    Tensor loss = f();
    backward(loss);

    std::map<std::string, std::vector<double>> analytic;
    for (auto& [path, t] : params) analytic[path] = t.grad();

    GradCheckReport report;
    for (auto& [path, t] : params) {
        GradCheckEntry entry{path, 0.0};
        auto& data = t.data_mut();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double keep = data[i];
            data[i] = keep + eps;
            const double fp = f().item();
            data[i] = keep - eps;
            const double fm = f().item();
            data[i] = keep;
            const double numeric = (fp - fm) / (2.0 * eps);
            entry.max_rel_err = std::max(entry.max_rel_err, detail::rel_err(analytic[path][i], numeric));
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.per_parameter.push_back(std::move(entry));
    }
    return report;
}

} // namespace relsym
