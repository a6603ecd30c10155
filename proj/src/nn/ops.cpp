#include "voin/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "voin/core/error.hpp"

namespace voin::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

int norm_axis(int axis, int rank) {
    if (axis < 0) axis += rank;
    if (axis < 0 || axis >= rank) throw ShapeError("axis out of range");
    return axis;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t i = 0; i < r; ++i) {
        const std::int64_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
        const std::int64_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
        if (da != db && da != 1 && db != 1) {
            throw ShapeError("cannot broadcast " + shape_str(a) + " with " + shape_str(b));
        }
        out[i] = std::max(da, db);
    }
    return out;
}

// For every linear index of `out`, the linear index of the broadcast source `in`.
std::vector<std::int64_t> broadcast_map(const Shape& out, const Shape& in) {
    const std::size_t r = out.size();
    std::vector<std::int64_t> in_stride(r, 0);
    std::int64_t stride = 1;
    for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t i = in.size() - 1 - k;
        const std::size_t o = r - 1 - k;
        in_stride[o] = in[i] == 1 ? 0 : stride;
        stride *= in[i];
    }
    const std::int64_t n = numel(out);
    std::vector<std::int64_t> map(static_cast<std::size_t>(n));
    std::vector<std::int64_t> counter(r, 0);
    std::int64_t offset = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        map[static_cast<std::size_t>(i)] = offset;
        for (std::size_t d = r; d-- > 0;) {
            ++counter[d];
            offset += in_stride[d];
            if (counter[d] < out[d]) break;
            offset -= in_stride[d] * counter[d];
            counter[d] = 0;
        }
    }
    return map;
}

struct Indexer {
    enum class Kind { identity, scalar, mapped } kind = Kind::identity;
    std::vector<std::int64_t> map;

    Indexer(const Shape& out, const Shape& in) {
        if (in == out) kind = Kind::identity;
        else if (numel(in) == 1) kind = Kind::scalar;
        else {
            kind = Kind::mapped;
            map = broadcast_map(out, in);
        }
    }
    std::int64_t operator()(std::int64_t i) const {
        switch (kind) {
        case Kind::identity: return i;
        case Kind::scalar: return 0;
        default: return map[static_cast<std::size_t>(i)];
        }
    }
};

template <class F, class DA, class DB>
Var binary(const Var& a, const Var& b, F f, DA da, DB db) {
    const Shape out_shape = broadcast_shapes(a.shape(), b.shape());
    auto ia = std::make_shared<Indexer>(out_shape, a.shape());
    auto ib = std::make_shared<Indexer>(out_shape, b.shape());
    Tensor out(out_shape);
    const double* pa = a.value().data();
    const double* pb = b.value().data();
    double* po = out.data();
    const std::int64_t n = out.numel();
    for (std::int64_t i = 0; i < n; ++i) po[i] = f(pa[(*ia)(i)], pb[(*ib)(i)]);
    return make_result(std::move(out), {a, b}, [ia, ib, da, db](Node& self) {
        Node* na = self.parents[0].get();
        Node* nb = self.parents[1].get();
        const double* g = self.grad.data();
        const double* xa = na->value.data();
        const double* xb = nb->value.data();
        const std::int64_t n = self.value.numel();
        if (na->requires_grad) {
            double* ga = na->grad_buffer().data();
            for (std::int64_t i = 0; i < n; ++i) {
                const auto j = (*ia)(i);
                ga[j] += g[i] * da(xa[j], xb[(*ib)(i)]);
            }
        }
        if (nb->requires_grad) {
            double* gb = nb->grad_buffer().data();
            for (std::int64_t i = 0; i < n; ++i) {
                const auto j = (*ib)(i);
                gb[j] += g[i] * db(xa[(*ia)(i)], xb[j]);
            }
        }
    });
}

// df(x, y) receives the input and the output value.
template <class F, class DF>
Var unary(const Var& x, F f, DF df) {
    Tensor out(x.shape());
    const double* px = x.value().data();
    double* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = f(px[i]);
    return make_result(std::move(out), {x}, [df](Node& self) {
        Node* nx = self.parents[0].get();
        double* gx = nx->grad_buffer().data();
        const double* g = self.grad.data();
        const double* xv = nx->value.data();
        const double* yv = self.value.data();
        for (std::int64_t i = 0; i < self.value.numel(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
    });
}

Shape reduced_shape(const Shape& in, const std::vector<int>& axes, bool keepdim, std::vector<bool>& reduced) {
    reduced.assign(in.size(), false);
    for (int a : axes) reduced[static_cast<std::size_t>(norm_axis(a, static_cast<int>(in.size())))] = true;
    Shape out;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!reduced[i]) out.push_back(in[i]);
        else if (keepdim) out.push_back(1);
    }
    return out;
}

Shape keep_shape(const Shape& in, const std::vector<bool>& reduced) {
    Shape keep = in;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (reduced[i]) keep[i] = 1;
    }
    return keep;
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Var operator-(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Var operator*(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Var operator/(const Var& a, const Var& b) {
    return binary(
        a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
        [](double x, double y) { return -x / (y * y); });
}

Var operator-(const Var& a) {
    return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var operator+(const Var& a, double s) {
    return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var operator*(const Var& a, double s) {
    return unary(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Var exp(const Var& x) {
    return unary(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
    return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sigmoid(const Var& x) {
    return unary(
        x,
        [](double v) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& x) {
    return unary(
        x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
        [](double v, double) {
            if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        });
}

Var relu(const Var& x) {
    return unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(const Var& x, double slope) {
    return unary(
        x, [slope](double v) { return v > 0 ? v : slope * v; },
        [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Var tanh(const Var& x) {
    return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var abs(const Var& x) {
    return unary(
        x, [](double v) { return std::abs(v); },
        [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Var square(const Var& x) {
    return unary(x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var sqrt(const Var& x) {
    return unary(x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var clamp(const Var& x, double lo, double hi) {
    return unary(
        x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
        [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Var sum(const Var& x) {
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    return make_result(Tensor::scalar(s), {x}, [](Node& self) {
        Node* nx = self.parents[0].get();
        const double g = self.grad[0];
        for (double& v : nx->grad_buffer().values()) v += g;
    });
}

Var mean(const Var& x) {
    if (x.numel() == 0) throw ShapeError("mean of empty tensor");
    return sum(x) * (1.0 / static_cast<double>(x.numel()));
}

Var sum(const Var& x, const std::vector<int>& axes, bool keepdim) {
    std::vector<bool> reduced;
    const Shape out_shape = reduced_shape(x.shape(), axes, keepdim, reduced);
    auto map = std::make_shared<std::vector<std::int64_t>>(broadcast_map(x.shape(), keep_shape(x.shape(), reduced)));
    Tensor out(out_shape, 0.0);
    const double* px = x.value().data();
    for (std::int64_t i = 0; i < x.numel(); ++i) out[(*map)[static_cast<std::size_t>(i)]] += px[i];
    return make_result(std::move(out), {x}, [map](Node& self) {
        Node* nx = self.parents[0].get();
        double* gx = nx->grad_buffer().data();
        for (std::int64_t i = 0; i < nx->value.numel(); ++i) gx[i] += self.grad[(*map)[static_cast<std::size_t>(i)]];
    });
}

Var mean(const Var& x, const std::vector<int>& axes, bool keepdim) {
    std::int64_t count = 1;
    for (int a : axes) count *= x.dim(a);
    return sum(x, axes, keepdim) * (1.0 / static_cast<double>(count));
}

Var max(const Var& x, int axis, bool keepdim) {
    std::vector<bool> reduced;
    const Shape out_shape = reduced_shape(x.shape(), {axis}, keepdim, reduced);
    const auto map = broadcast_map(x.shape(), keep_shape(x.shape(), reduced));
    Tensor out(out_shape, -std::numeric_limits<double>::infinity());
    auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out.numel()), -1);
    const double* px = x.value().data();
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        const auto o = map[static_cast<std::size_t>(i)];
        if ((*argmax)[static_cast<std::size_t>(o)] < 0 || px[i] > out[o]) {
            out[o] = px[i];
            (*argmax)[static_cast<std::size_t>(o)] = i;
        }
    }
    return make_result(std::move(out), {x}, [argmax](Node& self) {
        Node* nx = self.parents[0].get();
        double* gx = nx->grad_buffer().data();
        for (std::int64_t o = 0; o < self.value.numel(); ++o) gx[(*argmax)[static_cast<std::size_t>(o)]] += self.grad[o];
    });
}

Var reshape(const Var& x, Shape shape) {
    std::int64_t known = 1;
    int infer = -1;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (shape[i] == -1) infer = static_cast<int>(i);
        else known *= shape[i];
    }
    if (infer >= 0) shape[static_cast<std::size_t>(infer)] = known == 0 ? 0 : x.numel() / known;
    Tensor out = x.value().reshaped(shape);
    return make_result(std::move(out), {x}, [](Node& self) {
        Node* nx = self.parents[0].get();
        nx->accumulate(self.grad);
    });
}

Var permute(const Var& x, const std::vector<int>& order) {
    const Shape& in = x.shape();
    const std::size_t r = in.size();
    if (order.size() != r) throw ShapeError("permute order has wrong length");
    std::vector<std::int64_t> in_stride(r);
    std::int64_t s = 1;
    for (std::size_t i = r; i-- > 0;) {
        in_stride[i] = s;
        s *= in[i];
    }
    Shape out_shape(r);
    std::vector<std::int64_t> step(r);
    for (std::size_t i = 0; i < r; ++i) {
        out_shape[i] = in[static_cast<std::size_t>(order[i])];
        step[i] = in_stride[static_cast<std::size_t>(order[i])];
    }
    const std::int64_t n = x.numel();
    auto map = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(n));
    std::vector<std::int64_t> counter(r, 0);
    std::int64_t offset = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        (*map)[static_cast<std::size_t>(i)] = offset;
        for (std::size_t d = r; d-- > 0;) {
            ++counter[d];
            offset += step[d];
            if (counter[d] < out_shape[d]) break;
            offset -= step[d] * counter[d];
            counter[d] = 0;
        }
    }
    Tensor out(out_shape);
    const double* px = x.value().data();
    for (std::int64_t i = 0; i < n; ++i) out[i] = px[(*map)[static_cast<std::size_t>(i)]];
    return make_result(std::move(out), {x}, [map](Node& self) {
        Node* nx = self.parents[0].get();
        double* gx = nx->grad_buffer().data();
        for (std::int64_t i = 0; i < self.value.numel(); ++i) gx[(*map)[static_cast<std::size_t>(i)]] += self.grad[i];
    });
}

Var concat(const std::vector<Var>& xs, int axis) {
    if (xs.empty()) throw ShapeError("concat of nothing");
    const int r = static_cast<int>(xs[0].shape().size());
    axis = norm_axis(axis, r);
    Shape out_shape = xs[0].shape();
    out_shape[static_cast<std::size_t>(axis)] = 0;
    for (const auto& x : xs) {
        if (static_cast<int>(x.shape().size()) != r) throw ShapeError("concat rank mismatch");
        for (int d = 0; d < r; ++d) {
            if (d != axis && x.dim(d) != xs[0].dim(d)) throw ShapeError("concat shape mismatch");
        }
        out_shape[static_cast<std::size_t>(axis)] += x.dim(axis);
    }
    std::int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= out_shape[static_cast<std::size_t>(d)];
    for (int d = axis + 1; d < r; ++d) inner *= out_shape[static_cast<std::size_t>(d)];
    const std::int64_t out_len = out_shape[static_cast<std::size_t>(axis)];
    Tensor out(out_shape);
    std::vector<std::int64_t> offsets;
    std::int64_t off = 0;
    for (const auto& x : xs) {
        offsets.push_back(off);
        const std::int64_t len = x.dim(axis);
        const double* px = x.value().data();
        for (std::int64_t o = 0; o < outer; ++o) {
            std::copy(px + o * len * inner, px + (o + 1) * len * inner, out.data() + (o * out_len + off) * inner);
        }
        off += len;
    }
    return make_result(std::move(out), xs, [offsets, outer, inner, out_len, axis](Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            Node* p = self.parents[k].get();
            if (!p || !p->requires_grad) continue;
            const std::int64_t len = p->value.dim(axis);
            double* gp = p->grad_buffer().data();
            for (std::int64_t o = 0; o < outer; ++o) {
                const double* src = self.grad.data() + (o * out_len + offsets[k]) * inner;
                double* dst = gp + o * len * inner;
                for (std::int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
            }
        }
    });
}

Var slice(const Var& x, int axis, std::int64_t start, std::int64_t length) {
    const int r = static_cast<int>(x.shape().size());
    axis = norm_axis(axis, r);
    const std::int64_t full = x.dim(axis);
    if (start < 0 || length < 0 || start + length > full) throw ShapeError("slice out of range");
    std::int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= x.dim(d);
    for (int d = axis + 1; d < r; ++d) inner *= x.dim(d);
    Shape out_shape = x.shape();
    out_shape[static_cast<std::size_t>(axis)] = length;
    Tensor out(out_shape);
    const double* px = x.value().data();
    for (std::int64_t o = 0; o < outer; ++o) {
        std::copy(px + (o * full + start) * inner, px + (o * full + start + length) * inner, out.data() + o * length * inner);
    }
    return make_result(std::move(out), {x}, [outer, inner, full, start, length](Node& self) {
        Node* nx = self.parents[0].get();
        double* gx = nx->grad_buffer().data();
        for (std::int64_t o = 0; o < outer; ++o) {
            const double* src = self.grad.data() + o * length * inner;
            double* dst = gx + (o * full + start) * inner;
            for (std::int64_t i = 0; i < length * inner; ++i) dst[i] += src[i];
        }
    });
}

Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
    const int ra = static_cast<int>(a.shape().size()), rb = static_cast<int>(b.shape().size());
    if (ra != rb || (ra != 2 && ra != 3)) throw ShapeError("matmul expects two rank-2 or two rank-3 operands");
    const std::int64_t batch = ra == 3 ? a.dim(0) : 1;
    if (ra == 3 && b.dim(0) != batch) throw ShapeError("matmul batch mismatch");
    const std::int64_t ar = a.dim(-2), ac = a.dim(-1), br = b.dim(-2), bc = b.dim(-1);
    const std::int64_t m = ta ? ac : ar, k = ta ? ar : ac;
    const std::int64_t kb = tb ? bc : br, n = tb ? br : bc;
    if (k != kb) throw ShapeError("matmul inner dimension mismatch: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    Shape out_shape = ra == 3 ? Shape{batch, m, n} : Shape{m, n};
    Tensor out(out_shape);
    for (std::int64_t i = 0; i < batch; ++i) {
        ConstMapMat A(a.value().data() + i * ar * ac, ar, ac);
        ConstMapMat B(b.value().data() + i * br * bc, br, bc);
        MapMat C(out.data() + i * m * n, m, n);
        if (!ta && !tb) C.noalias() = A * B;
        else if (ta && !tb) C.noalias() = A.transpose() * B;
        else if (!ta && tb) C.noalias() = A * B.transpose();
        else C.noalias() = A.transpose() * B.transpose();
    }
    return make_result(std::move(out), {a, b}, [=](Node& self) {
        Node* na = self.parents[0].get();
        Node* nb = self.parents[1].get();
        for (std::int64_t i = 0; i < batch; ++i) {
            ConstMapMat A(na->value.data() + i * ar * ac, ar, ac);
            ConstMapMat B(nb->value.data() + i * br * bc, br, bc);
            ConstMapMat G(self.grad.data() + i * m * n, m, n);
            if (na->requires_grad) {
                MapMat GA(na->grad_buffer().data() + i * ar * ac, ar, ac);
                if (!ta && !tb) GA.noalias() += G * B.transpose();
                else if (ta && !tb) GA.noalias() += B * G.transpose();
                else if (!ta && tb) GA.noalias() += G * B;
                else GA.noalias() += B.transpose() * G.transpose();
            }
            if (nb->requires_grad) {
                MapMat GB(nb->grad_buffer().data() + i * br * bc, br, bc);
                if (!ta && !tb) GB.noalias() += A.transpose() * G;
                else if (ta && !tb) GB.noalias() += A * G;
                else if (!ta && tb) GB.noalias() += G.transpose() * A;
                else GB.noalias() += G.transpose() * A.transpose();
            }
        }
    });
}

Var softmax(const Var& x) {
    const std::int64_t cols = x.dim(-1);
    const std::int64_t rows = x.numel() / cols;
    Tensor out(x.shape());
    const double* px = x.value().data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* row = px + r * cols;
        double* o = out.data() + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double z = 0.0;
        for (std::int64_t c = 0; c < cols; ++c) z += (o[c] = std::exp(row[c] - mx));
        for (std::int64_t c = 0; c < cols; ++c) o[c] /= z;
    }
    return make_result(std::move(out), {x}, [rows, cols](Node& self) {
        Node* nx = self.parents[0].get();
        double* gx = nx->grad_buffer().data();
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * cols;
            const double* g = self.grad.data() + r * cols;
            double dot = 0.0;
            for (std::int64_t c = 0; c < cols; ++c) dot += g[c] * y[c];
            for (std::int64_t c = 0; c < cols; ++c) gx[r * cols + c] += y[c] * (g[c] - dot);
        }
    });
}

Var log_softmax(const Var& x) {
    const std::int64_t cols = x.dim(-1);
    const std::int64_t rows = x.numel() / cols;
    Tensor out(x.shape());
    const double* px = x.value().data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* row = px + r * cols;
        const double mx = *std::max_element(row, row + cols);
        double z = 0.0;
        for (std::int64_t c = 0; c < cols; ++c) z += std::exp(row[c] - mx);
        const double lse = mx + std::log(z);
        for (std::int64_t c = 0; c < cols; ++c) out[r * cols + c] = row[c] - lse;
    }
    return make_result(std::move(out), {x}, [rows, cols](Node& self) {
        Node* nx = self.parents[0].get();
        double* gx = nx->grad_buffer().data();
        for (std::int64_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * cols;
            const double* g = self.grad.data() + r * cols;
            double gs = 0.0;
            for (std::int64_t c = 0; c < cols; ++c) gs += g[c];
            for (std::int64_t c = 0; c < cols; ++c) gx[r * cols + c] += g[c] - std::exp(y[c]) * gs;
        }
    });
}

namespace {

struct Conv2dGeom {
    std::int64_t C, H, W, kh, kw, Ho, Wo;
    int stride, pad;
};

void im2col2d(const double* x, const Conv2dGeom& g, double* col) {
    const std::int64_t hw = g.Ho * g.Wo;
    for (std::int64_t c = 0; c < g.C; ++c) {
        for (std::int64_t i = 0; i < g.kh; ++i) {
            for (std::int64_t j = 0; j < g.kw; ++j) {
                double* row = col + ((c * g.kh + i) * g.kw + j) * hw;
                for (std::int64_t oy = 0; oy < g.Ho; ++oy) {
                    const std::int64_t y = oy * g.stride - g.pad + i;
                    if (y < 0 || y >= g.H) {
                        std::fill(row + oy * g.Wo, row + (oy + 1) * g.Wo, 0.0);
                        continue;
                    }
                    const double* src = x + (c * g.H + y) * g.W;
                    for (std::int64_t ox = 0; ox < g.Wo; ++ox) {
                        const std::int64_t xx = ox * g.stride - g.pad + j;
                        row[oy * g.Wo + ox] = (xx >= 0 && xx < g.W) ? src[xx] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im2d(const double* col, const Conv2dGeom& g, double* x) {
    const std::int64_t hw = g.Ho * g.Wo;
    for (std::int64_t c = 0; c < g.C; ++c) {
        for (std::int64_t i = 0; i < g.kh; ++i) {
            for (std::int64_t j = 0; j < g.kw; ++j) {
                const double* row = col + ((c * g.kh + i) * g.kw + j) * hw;
                for (std::int64_t oy = 0; oy < g.Ho; ++oy) {
                    const std::int64_t y = oy * g.stride - g.pad + i;
                    if (y < 0 || y >= g.H) continue;
                    double* dst = x + (c * g.H + y) * g.W;
                    for (std::int64_t ox = 0; ox < g.Wo; ++ox) {
                        const std::int64_t xx = ox * g.stride - g.pad + j;
                        if (xx >= 0 && xx < g.W) dst[xx] += row[oy * g.Wo + ox];
                    }
                }
            }
        }
    }
}

struct Conv3dGeom {
    std::int64_t C, T, H, W, kt, kh, kw, To, Ho, Wo;
    std::array<int, 3> stride, pad;
};

template <bool Scatter>
void im2col3d_impl(std::conditional_t<Scatter, double*, const double*> x, const Conv3dGeom& g,
                   std::conditional_t<Scatter, const double*, double*> col) {
    const std::int64_t thw = g.To * g.Ho * g.Wo;
    for (std::int64_t c = 0; c < g.C; ++c) {
        for (std::int64_t a = 0; a < g.kt; ++a) {
            for (std::int64_t i = 0; i < g.kh; ++i) {
                for (std::int64_t j = 0; j < g.kw; ++j) {
                    auto row = col + (((c * g.kt + a) * g.kh + i) * g.kw + j) * thw;
                    for (std::int64_t ot = 0; ot < g.To; ++ot) {
                        const std::int64_t t = ot * g.stride[0] - g.pad[0] + a;
                        for (std::int64_t oy = 0; oy < g.Ho; ++oy) {
                            const std::int64_t y = oy * g.stride[1] - g.pad[1] + i;
                            const std::int64_t base = (ot * g.Ho + oy) * g.Wo;
                            const bool inside = t >= 0 && t < g.T && y >= 0 && y < g.H;
                            for (std::int64_t ox = 0; ox < g.Wo; ++ox) {
                                const std::int64_t xx = ox * g.stride[2] - g.pad[2] + j;
                                const bool ok = inside && xx >= 0 && xx < g.W;
                                if constexpr (Scatter) {
                                    if (ok) x[((c * g.T + t) * g.H + y) * g.W + xx] += row[base + ox];
                                } else {
                                    row[base + ox] = ok ? x[((c * g.T + t) * g.H + y) * g.W + xx] : 0.0;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    if (x.shape().size() != 4 || w.shape().size() != 4) throw ShapeError("conv2d expects NCHW input and OCkk weights");
    if (x.dim(1) != w.dim(1)) {
        throw ShapeError("conv2d channel mismatch: input " + shape_str(x.shape()) + " weight " + shape_str(w.shape()));
    }
    const std::int64_t N = x.dim(0), O = w.dim(0);
    Conv2dGeom g{x.dim(1), x.dim(2), x.dim(3), w.dim(2), w.dim(3), 0, 0, stride, pad};
    g.Ho = (g.H + 2 * pad - g.kh) / stride + 1;
    g.Wo = (g.W + 2 * pad - g.kw) / stride + 1;
    if (g.Ho <= 0 || g.Wo <= 0) throw ShapeError("conv2d output would be empty");
    const std::int64_t K = g.C * g.kh * g.kw, P = g.Ho * g.Wo;
    Tensor out({N, O, g.Ho, g.Wo});
    std::vector<double> col(static_cast<std::size_t>(K * P));
    ConstMapMat Wm(w.value().data(), O, K);
    for (std::int64_t n = 0; n < N; ++n) {
        im2col2d(x.value().data() + n * g.C * g.H * g.W, g, col.data());
        MapMat out_n(out.data() + n * O * P, O, P);
        out_n.noalias() = Wm * ConstMapMat(col.data(), K, P);
        if (b.defined()) {
            for (std::int64_t o = 0; o < O; ++o) out_n.row(o).array() += b.value()[o];
        }
    }
    std::vector<Var> parents{x, w};
    if (b.defined()) parents.push_back(b);
    return make_result(std::move(out), parents, [g, N, O, K, P](Node& self) {
        Node* nx = self.parents[0].get();
        Node* nw = self.parents[1].get();
        Node* nb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
        std::vector<double> col(static_cast<std::size_t>(K * P));
        std::vector<double> dcol(static_cast<std::size_t>(K * P));
        ConstMapMat Wm(nw->value.data(), O, K);
        for (std::int64_t n = 0; n < N; ++n) {
            ConstMapMat G(self.grad.data() + n * O * P, O, P);
            if (nw->requires_grad) {
                im2col2d(nx->value.data() + n * g.C * g.H * g.W, g, col.data());
                MapMat GW(nw->grad_buffer().data(), O, K);
                GW.noalias() += G * ConstMapMat(col.data(), K, P).transpose();
            }
            if (nx->requires_grad) {
                MapMat D(dcol.data(), K, P);
                D.noalias() = Wm.transpose() * G;
                col2im2d(dcol.data(), g, nx->grad_buffer().data() + n * g.C * g.H * g.W);
            }
            if (nb && nb->requires_grad) {
                double* gb = nb->grad_buffer().data();
                for (std::int64_t o = 0; o < O; ++o) gb[o] += G.row(o).sum();
            }
        }
    });
}

Var conv3d(const Var& x, const Var& w, const Var& b, std::array<int, 3> stride, std::array<int, 3> pad) {
    if (x.shape().size() != 5 || w.shape().size() != 5) throw ShapeError("conv3d expects NCTHW input and OCkkk weights");
    if (x.dim(1) != w.dim(1)) throw ShapeError("conv3d channel mismatch");
    const std::int64_t N = x.dim(0), O = w.dim(0);
    Conv3dGeom g{x.dim(1), x.dim(2), x.dim(3), x.dim(4), w.dim(2), w.dim(3), w.dim(4), 0, 0, 0, stride, pad};
    g.To = (g.T + 2 * pad[0] - g.kt) / stride[0] + 1;
    g.Ho = (g.H + 2 * pad[1] - g.kh) / stride[1] + 1;
    g.Wo = (g.W + 2 * pad[2] - g.kw) / stride[2] + 1;
    if (g.To <= 0 || g.Ho <= 0 || g.Wo <= 0) throw ShapeError("conv3d output would be empty");
    const std::int64_t K = g.C * g.kt * g.kh * g.kw, P = g.To * g.Ho * g.Wo, in_sz = g.C * g.T * g.H * g.W;
    Tensor out({N, O, g.To, g.Ho, g.Wo});
    std::vector<double> col(static_cast<std::size_t>(K * P));
    ConstMapMat Wm(w.value().data(), O, K);
    for (std::int64_t n = 0; n < N; ++n) {
        im2col3d_impl<false>(x.value().data() + n * in_sz, g, col.data());
        MapMat out_n(out.data() + n * O * P, O, P);
        out_n.noalias() = Wm * ConstMapMat(col.data(), K, P);
        if (b.defined()) {
            for (std::int64_t o = 0; o < O; ++o) out_n.row(o).array() += b.value()[o];
        }
    }
    std::vector<Var> parents{x, w};
    if (b.defined()) parents.push_back(b);
    return make_result(std::move(out), parents, [g, N, O, K, P, in_sz](Node& self) {
        Node* nx = self.parents[0].get();
        Node* nw = self.parents[1].get();
        Node* nb = self.parents.size() > 2 ? self.parents[2].get() : nullptr;
        std::vector<double> col(static_cast<std::size_t>(K * P));
        ConstMapMat Wm(nw->value.data(), O, K);
        for (std::int64_t n = 0; n < N; ++n) {
            ConstMapMat G(self.grad.data() + n * O * P, O, P);
            if (nw->requires_grad) {
                im2col3d_impl<false>(nx->value.data() + n * in_sz, g, col.data());
                MapMat GW(nw->grad_buffer().data(), O, K);
                GW.noalias() += G * ConstMapMat(col.data(), K, P).transpose();
            }
            if (nx->requires_grad) {
                MapMat D(col.data(), K, P);
                D.noalias() = Wm.transpose() * G;
                im2col3d_impl<true>(nx->grad_buffer().data() + n * in_sz, g, col.data());
            }
            if (nb && nb->requires_grad) {
                double* gb = nb->grad_buffer().data();
                for (std::int64_t o = 0; o < O; ++o) gb[o] += G.row(o).sum();
            }
        }
    });
}

Var upsample_nearest2d(const Var& x, int factor) {
    const int r = static_cast<int>(x.shape().size());
    if (r < 2) throw ShapeError("upsample needs at least 2 axes");
    const std::int64_t H = x.dim(-2), W = x.dim(-1);
    const std::int64_t outer = x.numel() / (H * W);
    Shape out_shape = x.shape();
    out_shape[static_cast<std::size_t>(r - 2)] = H * factor;
    out_shape[static_cast<std::size_t>(r - 1)] = W * factor;
    const std::int64_t Ho = H * factor, Wo = W * factor;
    Tensor out(out_shape);
    const double* px = x.value().data();
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t y = 0; y < Ho; ++y) {
            for (std::int64_t xx = 0; xx < Wo; ++xx) {
                out[(o * Ho + y) * Wo + xx] = px[(o * H + y / factor) * W + xx / factor];
            }
        }
    }
    return make_result(std::move(out), {x}, [outer, H, W, Ho, Wo, factor](Node& self) {
        double* gx = self.parents[0]->grad_buffer().data();
        for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t y = 0; y < Ho; ++y) {
                for (std::int64_t xx = 0; xx < Wo; ++xx) {
                    gx[(o * H + y / factor) * W + xx / factor] += self.grad[(o * Ho + y) * Wo + xx];
                }
            }
        }
    });
}

Var pad_replicate2d(const Var& x, int pad) {
    const int r = static_cast<int>(x.shape().size());
    const std::int64_t H = x.dim(-2), W = x.dim(-1);
    const std::int64_t outer = x.numel() / (H * W);
    const std::int64_t Ho = H + 2 * pad, Wo = W + 2 * pad;
    Shape out_shape = x.shape();
    out_shape[static_cast<std::size_t>(r - 2)] = Ho;
    out_shape[static_cast<std::size_t>(r - 1)] = Wo;
    auto src_index = [H, W, pad](std::int64_t y, std::int64_t xx) {
        const std::int64_t sy = std::clamp<std::int64_t>(y - pad, 0, H - 1);
        const std::int64_t sx = std::clamp<std::int64_t>(xx - pad, 0, W - 1);
        return sy * W + sx;
    };
    Tensor out(out_shape);
    const double* px = x.value().data();
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t y = 0; y < Ho; ++y) {
            for (std::int64_t xx = 0; xx < Wo; ++xx) out[(o * Ho + y) * Wo + xx] = px[o * H * W + src_index(y, xx)];
        }
    }
    return make_result(std::move(out), {x}, [outer, H, W, Ho, Wo, src_index](Node& self) {
        double* gx = self.parents[0]->grad_buffer().data();
        for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t y = 0; y < Ho; ++y) {
                for (std::int64_t xx = 0; xx < Wo; ++xx) gx[o * H * W + src_index(y, xx)] += self.grad[(o * Ho + y) * Wo + xx];
            }
        }
    });
}

Var flow_warp(const Var& img, const Var& flow) {
    if (img.shape().size() != 4 || flow.shape().size() != 4 || flow.dim(1) != 2 || img.dim(0) != flow.dim(0) ||
        img.dim(2) != flow.dim(2) || img.dim(3) != flow.dim(3)) {
        throw ShapeError("flow_warp expects img N×C×H×W and flow N×2×H×W");
    }
    const std::int64_t N = img.dim(0), C = img.dim(1), H = img.dim(2), W = img.dim(3);
    struct Tap {
        std::int64_t x0, x1, y0, y1;
        double wx, wy;
    };
    auto taps = std::make_shared<std::vector<Tap>>(static_cast<std::size_t>(N * H * W));
    const double* pf = flow.value().data();
    for (std::int64_t n = 0; n < N; ++n) {
        for (std::int64_t y = 0; y < H; ++y) {
            for (std::int64_t x = 0; x < W; ++x) {
                const double sx = static_cast<double>(x) + pf[((n * 2 + 0) * H + y) * W + x];
                const double sy = static_cast<double>(y) + pf[((n * 2 + 1) * H + y) * W + x];
                const double fx = std::floor(sx), fy = std::floor(sy);
                const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
                (*taps)[static_cast<std::size_t>((n * H + y) * W + x)] = {
                    std::clamp<std::int64_t>(ix, 0, W - 1), std::clamp<std::int64_t>(ix + 1, 0, W - 1),
                    std::clamp<std::int64_t>(iy, 0, H - 1), std::clamp<std::int64_t>(iy + 1, 0, H - 1), sx - fx, sy - fy};
            }
        }
    }
    Tensor out(img.shape());
    const double* pi = img.value().data();
    for (std::int64_t n = 0; n < N; ++n) {
        for (std::int64_t c = 0; c < C; ++c) {
            const double* plane = pi + (n * C + c) * H * W;
            for (std::int64_t p = 0; p < H * W; ++p) {
                const Tap& t = (*taps)[static_cast<std::size_t>(n * H * W + p)];
                out[(n * C + c) * H * W + p] = (1 - t.wy) * ((1 - t.wx) * plane[t.y0 * W + t.x0] + t.wx * plane[t.y0 * W + t.x1]) +
                                               t.wy * ((1 - t.wx) * plane[t.y1 * W + t.x0] + t.wx * plane[t.y1 * W + t.x1]);
            }
        }
    }
    return make_result(std::move(out), {img, flow}, [taps, N, C, H, W](Node& self) {
        Node* ni = self.parents[0].get();
        Node* nf = self.parents[1].get();
        const double* pi = ni->value.data();
        const double* g = self.grad.data();
        double* gi = ni->requires_grad ? ni->grad_buffer().data() : nullptr;
        double* gf = nf->requires_grad ? nf->grad_buffer().data() : nullptr;
        for (std::int64_t n = 0; n < N; ++n) {
            for (std::int64_t p = 0; p < H * W; ++p) {
                const Tap& t = (*taps)[static_cast<std::size_t>(n * H * W + p)];
                double du = 0.0, dv = 0.0;
                for (std::int64_t c = 0; c < C; ++c) {
                    const std::int64_t base = (n * C + c) * H * W;
                    const double gc = g[base + p];
                    if (gc == 0.0) continue;
                    if (gi) {
                        gi[base + t.y0 * W + t.x0] += gc * (1 - t.wy) * (1 - t.wx);
                        gi[base + t.y0 * W + t.x1] += gc * (1 - t.wy) * t.wx;
                        gi[base + t.y1 * W + t.x0] += gc * t.wy * (1 - t.wx);
                        gi[base + t.y1 * W + t.x1] += gc * t.wy * t.wx;
                    }
                    if (gf) {
                        const double* plane = pi + base;
                        const double a = plane[t.y0 * W + t.x0], b = plane[t.y0 * W + t.x1];
                        const double c2 = plane[t.y1 * W + t.x0], d = plane[t.y1 * W + t.x1];
                        du += gc * ((1 - t.wy) * (b - a) + t.wy * (d - c2));
                        dv += gc * ((1 - t.wx) * (c2 - a) + t.wx * (d - b));
                    }
                }
                if (gf) {
                    gf[(n * 2 + 0) * H * W + p] += du;
                    gf[(n * 2 + 1) * H * W + p] += dv;
                }
            }
        }
    });
}

}  // namespace voin::nn
