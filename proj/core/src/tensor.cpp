#include "esfp/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace esfp::ad {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
        throw std::invalid_argument("Tensor: data size " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data_ = {v};
    return t;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
}

namespace {

std::size_t flat_offset(const std::vector<std::size_t>& shape,
                        std::initializer_list<std::size_t> idx) {
    if (idx.size() != shape.size()) throw std::invalid_argument("Tensor::at: rank mismatch");
    std::size_t off = 0;
    std::size_t i = 0;
    for (std::size_t v : idx) {
        if (v >= shape[i]) throw std::out_of_range("Tensor::at: index out of range");
        off = off * shape[i] + v;
        ++i;
    }
    return off;
}

}  // namespace

double& Tensor::at(std::initializer_list<std::size_t> idx) {
    return data_[flat_offset(shape_, idx)];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
    return data_[flat_offset(shape_, idx)];
}

double Tensor::item() const {
    if (data_.size() != 1) throw std::logic_error("Tensor::item: not a scalar, shape " + shape_str());
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

std::vector<std::size_t> broadcast_shapes(const std::vector<std::size_t>& a,
                                          const std::vector<std::size_t>& b) {
    const std::size_t r = std::max(a.size(), b.size());
    std::vector<std::size_t> out(r, 1);
    for (std::size_t i = 0; i < r; ++i) {
        const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1) {
            throw std::invalid_argument("broadcast: incompatible shapes " + shape_to_string(a) +
                                        " and " + shape_to_string(b));
        }
        out[i] = std::max(da, db);
    }
    return out;
}

namespace {

// Row-major strides with 0 for broadcast (size-1) dims, right-aligned to rank r.
std::vector<std::size_t> broadcast_strides(const std::vector<std::size_t>& shape, std::size_t r) {
    std::vector<std::size_t> strides(r, 0);
    std::size_t s = 1;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const std::size_t dim = shape.size() - 1 - i;
        strides[r - 1 - i] = (shape[dim] == 1) ? 0 : s;
        s *= shape[dim];
    }
    return strides;
}

}  // namespace

Tensor broadcast_binary(const Tensor& a, const Tensor& b, double (*op)(double, double)) {
    if (a.same_shape(b)) {
        Tensor out(a.shape());
        const std::size_t n = a.size();
        for (std::size_t i = 0; i < n; ++i) out[i] = op(a[i], b[i]);
        return out;
    }
    const auto oshape = broadcast_shapes(a.shape(), b.shape());
    const std::size_t r = oshape.size();
    Tensor out(oshape);
    const auto sa = broadcast_strides(a.shape(), r);
    const auto sb = broadcast_strides(b.shape(), r);
    std::vector<std::size_t> idx(r, 0);
    const std::size_t n = out.size();
    std::size_t oa = 0, ob = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        out[flat] = op(a[oa], b[ob]);
        for (std::size_t k = r; k-- > 0;) {
            idx[k]++;
            oa += sa[k];
            ob += sb[k];
            if (idx[k] < oshape[k]) break;
            oa -= sa[k] * idx[k];
            ob -= sb[k] * idx[k];
            idx[k] = 0;
        }
    }
    return out;
}

Tensor reduce_to_shape(const Tensor& t, const std::vector<std::size_t>& target) {
    if (t.shape() == target) return t;
    const std::size_t r = t.rank();
    Tensor out(target);
    const auto st = broadcast_strides(target, r);
    std::vector<std::size_t> idx(r, 0);
    std::size_t off = 0;
    const std::size_t n = t.size();
    const auto& shape = t.shape();
    for (std::size_t flat = 0; flat < n; ++flat) {
        out[off] += t[flat];
        for (std::size_t k = r; k-- > 0;) {
            idx[k]++;
            off += st[k];
            if (idx[k] < shape[k]) break;
            off -= st[k] * idx[k];
            idx[k] = 0;
        }
    }
    return out;
}

Tensor transpose_last_two(const Tensor& t) {
    const std::size_t r = t.rank();
    if (r < 2) throw std::invalid_argument("transpose_last_two: rank < 2");
    const std::size_t m = t.shape()[r - 2];
    const std::size_t n = t.shape()[r - 1];
    auto oshape = t.shape();
    std::swap(oshape[r - 2], oshape[r - 1]);
    Tensor out(oshape);
    const std::size_t batch = t.size() / (m * n);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = t.data() + b * m * n;
        double* dst = out.data() + b * m * n;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
    }
    return out;
}

Tensor matmul_eager(const Tensor& a, const Tensor& b) {
    if (a.rank() < 2 || b.rank() < 2)
        throw std::invalid_argument("matmul: operands must have rank >= 2");
    const std::size_t m = a.shape()[a.rank() - 2];
    const std::size_t k = a.shape()[a.rank() - 1];
    const std::size_t kb = b.shape()[b.rank() - 2];
    const std::size_t n = b.shape()[b.rank() - 1];
    if (k != kb)
        throw std::invalid_argument("matmul: inner dims mismatch " + a.shape_str() + " x " +
                                    b.shape_str());

    std::vector<std::size_t> lead_a(a.shape().begin(), a.shape().end() - 2);
    std::vector<std::size_t> lead_b(b.shape().begin(), b.shape().end() - 2);
    std::vector<std::size_t> lead;
    if (lead_a == lead_b) {
        lead = lead_a;
    } else if (lead_b.empty()) {
        lead = lead_a;
    } else if (lead_a.empty()) {
        lead = lead_b;
    } else {
        throw std::invalid_argument("matmul: incompatible batch dims " + a.shape_str() + " x " +
                                    b.shape_str());
    }
    const std::size_t batch = shape_numel(lead);
    auto oshape = lead;
    oshape.push_back(m);
    oshape.push_back(n);
    Tensor out(oshape);
    const bool abatch = !lead_a.empty() || lead.empty();
    const bool bbatch = !lead_b.empty() || lead.empty();
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* pa = a.data() + (abatch ? bi * m * k : 0);
        const double* pb = b.data() + (bbatch ? bi * k * n : 0);
        double* po = out.data() + bi * m * n;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t kk = 0; kk < k; ++kk) {
                const double av = pa[i * k + kk];
                if (av == 0.0) continue;
                const double* row = pb + kk * n;
                double* orow = po + i * n;
                for (std::size_t j = 0; j < n; ++j) orow[j] += av * row[j];
            }
        }
    }
    return out;
}

}  // namespace esfp::ad
