#include "tape.hpp"

#include <cmath>
#include <cstring>
#include <memory>

#include "error.hpp"

namespace timebridge {

namespace {

// Decomposes a shape around one axis: flat index = (o * len + k) * inner + i.
struct AxisView {
    std::int64_t outer;
    std::int64_t len;
    std::int64_t inner;
};

AxisView make_axis_view(const Shape& s, int axis) {
    AxisView v{1, s[static_cast<std::size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) v.outer *= s[static_cast<std::size_t>(i)];
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) v.inner *= s[i];
    return v;
}

inline std::int64_t clamp_index(std::int64_t i, std::int64_t len) {
    return i < 0 ? 0 : (i >= len ? len - 1 : i);
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&)> bw) {
    Node n;
    n.grad.assign(static_cast<std::size_t>(value.numel()), 0.0);
    n.value = std::move(value);
    n.backward = std::move(bw);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
    check_owned(v, "node access");
    return nodes_[static_cast<std::size_t>(v.id)];
}

void Tape::check_owned(Var v, const char* op) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw contract_error(std::string(op) + ": variable does not belong to this tape");
    }
}

void Tape::check_axis(const Tensor& t, int axis, const char* op) const {
    if (axis < 0 || static_cast<std::size_t>(axis) >= t.ndim()) {
        throw dimension_error(std::string(op) + ": axis " + std::to_string(axis) +
                              " invalid for shape " + shape_str(t.shape()));
    }
}

Var Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

const Tensor& Tape::value(Var v) const { return node(v).value; }

Tensor Tape::grad(Var v) const {
    const Node& n = node(v);
    return Tensor(n.value.shape(), n.grad);
}

void Tape::backward(Var loss) {
    check_owned(loss, "backward");
    if (node(loss).value.numel() != 1) {
        throw contract_error("backward requires a scalar loss node, got shape " +
                             shape_str(node(loss).value.shape()));
    }
    for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
    nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        auto& bw = nodes_[static_cast<std::size_t>(i)].backward;
        if (bw) bw(*this);
    }
}

// ---------------------------------------------------------------------------
// elementwise

Var Tape::add(Var a, Var b) {
    check_owned(a, "add");
    check_owned(b, "add");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) {
        throw dimension_error("add: shape mismatch " + shape_str(ta.shape()) + " vs " +
                              shape_str(tb.shape()));
    }
    Tensor out(ta.shape());
    for (std::int64_t i = 0; i < ta.numel(); ++i) out.at(i) = ta.at(i) + tb.at(i);
    const int ia = a.id, ib = b.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, ib, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        auto& gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    };
    return r;
}

Var Tape::sub(Var a, Var b) {
    check_owned(a, "sub");
    check_owned(b, "sub");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) {
        throw dimension_error("sub: shape mismatch " + shape_str(ta.shape()) + " vs " +
                              shape_str(tb.shape()));
    }
    Tensor out(ta.shape());
    for (std::int64_t i = 0; i < ta.numel(); ++i) out.at(i) = ta.at(i) - tb.at(i);
    const int ia = a.id, ib = b.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, ib, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        auto& gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    };
    return r;
}

Var Tape::mul(Var a, Var b) {
    check_owned(a, "mul");
    check_owned(b, "mul");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb)) {
        throw dimension_error("mul: shape mismatch " + shape_str(ta.shape()) + " vs " +
                              shape_str(tb.shape()));
    }
    Tensor out(ta.shape());
    for (std::int64_t i = 0; i < ta.numel(); ++i) out.at(i) = ta.at(i) * tb.at(i);
    const int ia = a.id, ib = b.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, ib, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        const auto& va = t.data_buf(ia);
        const auto& vb = t.data_buf(ib);
        auto& ga = t.grad_buf(ia);
        auto& gb = t.grad_buf(ib);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * vb[i];
            gb[i] += g[i] * va[i];
        }
    };
    return r;
}

Var Tape::scale(Var a, double c) {
    check_owned(a, "scale");
    const Tensor& ta = value(a);
    Tensor out(ta.shape());
    for (std::int64_t i = 0; i < ta.numel(); ++i) out.at(i) = c * ta.at(i);
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io, c](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    };
    return r;
}

Var Tape::abs(Var a) {
    check_owned(a, "abs");
    const Tensor& ta = value(a);
    Tensor out(ta.shape());
    for (std::int64_t i = 0; i < ta.numel(); ++i) out.at(i) = std::fabs(ta.at(i));
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        const auto& va = t.data_buf(ia);
        auto& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (va[i] > 0.0) ga[i] += g[i];
            else if (va[i] < 0.0) ga[i] -= g[i];
            // exact tie: subgradient 0
        }
    };
    return r;
}

Var Tape::gelu(Var a) {
    check_owned(a, "gelu");
    const Tensor& ta = value(a);
    Tensor out(ta.shape());
    for (std::int64_t i = 0; i < ta.numel(); ++i) {
        const double x = ta.at(i);
        out.at(i) = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        const auto& va = t.data_buf(ia);
        auto& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = va[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            ga[i] += g[i] * (cdf + x * pdf);
        }
    };
    return r;
}

// ---------------------------------------------------------------------------
// linear algebra

Var Tape::matmul(Var a, Var b) {
    check_owned(a, "matmul");
    check_owned(b, "matmul");
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (ta.ndim() != 2 || tb.ndim() != 2 || ta.dim(1) != tb.dim(0)) {
        throw dimension_error("matmul: incompatible shapes " + shape_str(ta.shape()) + " and " +
                              shape_str(tb.shape()));
    }
    const std::int64_t m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
    Tensor out({m, n});
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = ta.at(i, p);
            if (av == 0.0) continue;
            for (std::int64_t j = 0; j < n; ++j) out.at(i, j) += av * tb.at(p, j);
        }
    }
    const int ia = a.id, ib = b.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, ib, io, m, k, n](Tape& t) {
        const auto& g = t.grad_buf(io);
        const auto& va = t.data_buf(ia);
        const auto& vb = t.data_buf(ib);
        auto& ga = t.grad_buf(ia);
        auto& gb = t.grad_buf(ib);
        // grad_a += g . b^T
        for (std::int64_t i = 0; i < m; ++i) {
            for (std::int64_t p = 0; p < k; ++p) {
                double s = 0.0;
                for (std::int64_t j = 0; j < n; ++j)
                    s += g[static_cast<std::size_t>(i * n + j)] * vb[static_cast<std::size_t>(p * n + j)];
                ga[static_cast<std::size_t>(i * k + p)] += s;
            }
        }
        // grad_b += a^T . g
        for (std::int64_t p = 0; p < k; ++p) {
            for (std::int64_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::int64_t i = 0; i < m; ++i)
                    s += va[static_cast<std::size_t>(i * k + p)] * g[static_cast<std::size_t>(i * n + j)];
                gb[static_cast<std::size_t>(p * n + j)] += s;
            }
        }
    };
    return r;
}

Var Tape::transpose(Var a) {
    check_owned(a, "transpose");
    const Tensor& ta = value(a);
    if (ta.ndim() != 2) {
        throw dimension_error("transpose: expected a matrix, got " + shape_str(ta.shape()));
    }
    const std::int64_t m = ta.dim(0), n = ta.dim(1);
    Tensor out({n, m});
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < n; ++j) out.at(j, i) = ta.at(i, j);
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io, m, n](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        for (std::int64_t i = 0; i < m; ++i)
            for (std::int64_t j = 0; j < n; ++j)
                ga[static_cast<std::size_t>(i * n + j)] += g[static_cast<std::size_t>(j * m + i)];
    };
    return r;
}

Var Tape::add_rowvec(Var m, Var v) {
    check_owned(m, "add_rowvec");
    check_owned(v, "add_rowvec");
    const Tensor& tm = value(m);
    const Tensor& tv = value(v);
    if (tm.ndim() != 2 || tv.numel() != tm.dim(1)) {
        throw dimension_error("add_rowvec: matrix " + shape_str(tm.shape()) +
                              " incompatible with vector " + shape_str(tv.shape()));
    }
    const std::int64_t rows = tm.dim(0), cols = tm.dim(1);
    Tensor out(tm.shape());
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = 0; c < cols; ++c) out.at(r, c) = tm.at(r, c) + tv.at(c);
    const int im = m.id, iv = v.id;
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_.back().backward = [im, iv, io, rows, cols](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& gm = t.grad_buf(im);
        auto& gv = t.grad_buf(iv);
        for (std::int64_t r = 0; r < rows; ++r) {
            for (std::int64_t c = 0; c < cols; ++c) {
                const double gi = g[static_cast<std::size_t>(r * cols + c)];
                gm[static_cast<std::size_t>(r * cols + c)] += gi;
                gv[static_cast<std::size_t>(c)] += gi;
            }
        }
    };
    return res;
}

// ---------------------------------------------------------------------------
// structure

Var Tape::reshape(Var a, Shape new_shape) {
    check_owned(a, "reshape");
    Tensor out = value(a).reshaped(std::move(new_shape));
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    };
    return r;
}

Var Tape::slice_rows(Var a, std::int64_t r0, std::int64_t r1) {
    check_owned(a, "slice_rows");
    const Tensor& ta = value(a);
    if (ta.ndim() != 2 || r0 < 0 || r1 > ta.dim(0) || r0 >= r1) {
        throw dimension_error("slice_rows: range [" + std::to_string(r0) + "," +
                              std::to_string(r1) + ") invalid for " + shape_str(ta.shape()));
    }
    const std::int64_t cols = ta.dim(1);
    Tensor out({r1 - r0, cols});
    for (std::int64_t r = r0; r < r1; ++r)
        for (std::int64_t c = 0; c < cols; ++c) out.at(r - r0, c) = ta.at(r, c);
    const int ia = a.id;
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_.back().backward = [ia, io, r0, r1, cols](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        for (std::int64_t r = r0; r < r1; ++r)
            for (std::int64_t c = 0; c < cols; ++c)
                ga[static_cast<std::size_t>(r * cols + c)] +=
                    g[static_cast<std::size_t>((r - r0) * cols + c)];
    };
    return res;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw dimension_error("concat_rows: no inputs");
    std::int64_t rows = 0;
    const std::int64_t cols = value(parts[0]).dim(1);
    for (Var p : parts) {
        check_owned(p, "concat_rows");
        const Tensor& tp = value(p);
        if (tp.ndim() != 2 || tp.dim(1) != cols) {
            throw dimension_error("concat_rows: column mismatch at " + shape_str(tp.shape()));
        }
        rows += tp.dim(0);
    }
    Tensor out({rows, cols});
    std::int64_t off = 0;
    std::vector<int> ids;
    std::vector<std::int64_t> offsets, counts;
    for (Var p : parts) {
        const Tensor& tp = value(p);
        for (std::int64_t r = 0; r < tp.dim(0); ++r)
            for (std::int64_t c = 0; c < cols; ++c) out.at(off + r, c) = tp.at(r, c);
        ids.push_back(p.id);
        offsets.push_back(off);
        counts.push_back(tp.dim(0));
        off += tp.dim(0);
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_.back().backward = [ids, offsets, counts, cols, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            auto& gp = t.grad_buf(ids[k]);
            for (std::int64_t r = 0; r < counts[k]; ++r)
                for (std::int64_t c = 0; c < cols; ++c)
                    gp[static_cast<std::size_t>(r * cols + c)] +=
                        g[static_cast<std::size_t>((offsets[k] + r) * cols + c)];
        }
    };
    return res;
}

Var Tape::slice_cols(Var a, std::int64_t c0, std::int64_t c1) {
    check_owned(a, "slice_cols");
    const Tensor& ta = value(a);
    if (ta.ndim() != 2 || c0 < 0 || c1 > ta.dim(1) || c0 >= c1) {
        throw dimension_error("slice_cols: range [" + std::to_string(c0) + "," +
                              std::to_string(c1) + ") invalid for " + shape_str(ta.shape()));
    }
    const std::int64_t rows = ta.dim(0), cols = ta.dim(1);
    Tensor out({rows, c1 - c0});
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t c = c0; c < c1; ++c) out.at(r, c - c0) = ta.at(r, c);
    const int ia = a.id;
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_.back().backward = [ia, io, c0, c1, rows, cols](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        const std::int64_t w = c1 - c0;
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = c0; c < c1; ++c)
                ga[static_cast<std::size_t>(r * cols + c)] +=
                    g[static_cast<std::size_t>(r * w + (c - c0))];
    };
    return res;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw dimension_error("concat_cols: no inputs");
    const std::int64_t rows = value(parts[0]).dim(0);
    std::int64_t cols = 0;
    for (Var p : parts) {
        check_owned(p, "concat_cols");
        const Tensor& tp = value(p);
        if (tp.ndim() != 2 || tp.dim(0) != rows) {
            throw dimension_error("concat_cols: row mismatch at " + shape_str(tp.shape()));
        }
        cols += tp.dim(1);
    }
    Tensor out({rows, cols});
    std::int64_t off = 0;
    std::vector<int> ids;
    std::vector<std::int64_t> offsets, widths;
    for (Var p : parts) {
        const Tensor& tp = value(p);
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < tp.dim(1); ++c) out.at(r, off + c) = tp.at(r, c);
        ids.push_back(p.id);
        offsets.push_back(off);
        widths.push_back(tp.dim(1));
        off += tp.dim(1);
    }
    Var res = push(std::move(out), nullptr);
    const int io = res.id;
    nodes_.back().backward = [ids, offsets, widths, rows, cols, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            auto& gp = t.grad_buf(ids[k]);
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t c = 0; c < widths[k]; ++c)
                    gp[static_cast<std::size_t>(r * widths[k] + c)] +=
                        g[static_cast<std::size_t>(r * cols + offsets[k] + c)];
        }
    };
    return res;
}

// ---------------------------------------------------------------------------
// normalization / reductions

Var Tape::softmax(Var a, int axis) {
    check_owned(a, "softmax");
    const Tensor& ta = value(a);
    check_axis(ta, axis, "softmax");
    const AxisView v = make_axis_view(ta.shape(), axis);
    Tensor out(ta.shape());
    for (std::int64_t o = 0; o < v.outer; ++o) {
        for (std::int64_t i = 0; i < v.inner; ++i) {
            double mx = -1e300;
            for (std::int64_t k = 0; k < v.len; ++k)
                mx = std::max(mx, ta.at((o * v.len + k) * v.inner + i));
            double z = 0.0;
            for (std::int64_t k = 0; k < v.len; ++k) {
                const double e = std::exp(ta.at((o * v.len + k) * v.inner + i) - mx);
                out.at((o * v.len + k) * v.inner + i) = e;
                z += e;
            }
            for (std::int64_t k = 0; k < v.len; ++k) out.at((o * v.len + k) * v.inner + i) /= z;
        }
    }
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io, v](Tape& t) {
        const auto& g = t.grad_buf(io);
        const auto& y = t.data_buf(io);
        auto& ga = t.grad_buf(ia);
        for (std::int64_t o = 0; o < v.outer; ++o) {
            for (std::int64_t i = 0; i < v.inner; ++i) {
                double dot = 0.0;
                for (std::int64_t k = 0; k < v.len; ++k) {
                    const auto idx = static_cast<std::size_t>((o * v.len + k) * v.inner + i);
                    dot += g[idx] * y[idx];
                }
                for (std::int64_t k = 0; k < v.len; ++k) {
                    const auto idx = static_cast<std::size_t>((o * v.len + k) * v.inner + i);
                    ga[idx] += y[idx] * (g[idx] - dot);
                }
            }
        }
    };
    return r;
}

Var Tape::layer_norm(Var x, int axis, double eps, Var gain, Var bias) {
    check_owned(x, "layer_norm");
    check_owned(gain, "layer_norm");
    check_owned(bias, "layer_norm");
    if (eps <= 0.0) throw config_error("layer_norm: eps must be > 0");
    const Tensor& tx = value(x);
    check_axis(tx, axis, "layer_norm");
    const AxisView v = make_axis_view(tx.shape(), axis);
    if (value(gain).numel() != v.len || value(bias).numel() != v.len) {
        throw dimension_error("layer_norm: gain/bias length must equal axis length " +
                              std::to_string(v.len));
    }
    const Tensor& tg = value(gain);
    const Tensor& tb = value(bias);
    Tensor out(tx.shape());
    // cache normalized values and inverse stddevs for the backward rule
    auto xhat = std::make_shared<std::vector<double>>(static_cast<std::size_t>(tx.numel()));
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(v.outer * v.inner));
    for (std::int64_t o = 0; o < v.outer; ++o) {
        for (std::int64_t i = 0; i < v.inner; ++i) {
            double mean = 0.0;
            for (std::int64_t k = 0; k < v.len; ++k) mean += tx.at((o * v.len + k) * v.inner + i);
            mean /= static_cast<double>(v.len);
            double var = 0.0;
            for (std::int64_t k = 0; k < v.len; ++k) {
                const double d = tx.at((o * v.len + k) * v.inner + i) - mean;
                var += d * d;
            }
            var /= static_cast<double>(v.len);
            const double inv = 1.0 / std::sqrt(var + eps);
            (*inv_std)[static_cast<std::size_t>(o * v.inner + i)] = inv;
            for (std::int64_t k = 0; k < v.len; ++k) {
                const std::int64_t idx = (o * v.len + k) * v.inner + i;
                const double h = (tx.at(idx) - mean) * inv;
                (*xhat)[static_cast<std::size_t>(idx)] = h;
                out.at(idx) = tg.at(k) * h + tb.at(k);
            }
        }
    }
    const int ix = x.id, ig = gain.id, ib = bias.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ix, ig, ib, io, v, xhat, inv_std](Tape& t) {
        const auto& g = t.grad_buf(io);
        const auto& vg = t.data_buf(ig);
        auto& gx = t.grad_buf(ix);
        auto& gg = t.grad_buf(ig);
        auto& gb = t.grad_buf(ib);
        const double n = static_cast<double>(v.len);
        for (std::int64_t o = 0; o < v.outer; ++o) {
            for (std::int64_t i = 0; i < v.inner; ++i) {
                const double inv = (*inv_std)[static_cast<std::size_t>(o * v.inner + i)];
                double sum_h = 0.0, sum_hx = 0.0;
                for (std::int64_t k = 0; k < v.len; ++k) {
                    const auto idx = static_cast<std::size_t>((o * v.len + k) * v.inner + i);
                    const double h = g[idx] * vg[static_cast<std::size_t>(k)];
                    sum_h += h;
                    sum_hx += h * (*xhat)[idx];
                    gg[static_cast<std::size_t>(k)] += g[idx] * (*xhat)[idx];
                    gb[static_cast<std::size_t>(k)] += g[idx];
                }
                const double mean_h = sum_h / n;
                const double mean_hx = sum_hx / n;
                for (std::int64_t k = 0; k < v.len; ++k) {
                    const auto idx = static_cast<std::size_t>((o * v.len + k) * v.inner + i);
                    const double h = g[idx] * vg[static_cast<std::size_t>(k)];
                    gx[idx] += inv * (h - mean_h - (*xhat)[idx] * mean_hx);
                }
            }
        }
    };
    return r;
}

Var Tape::sum_all(Var a) {
    check_owned(a, "sum_all");
    const Tensor& ta = value(a);
    double s = 0.0;
    for (std::int64_t i = 0; i < ta.numel(); ++i) s += ta.at(i);
    const int ia = a.id;
    Var r = push(Tensor::scalar(s), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io](Tape& t) {
        const double g = t.grad_buf(io)[0];
        auto& ga = t.grad_buf(ia);
        for (auto& x : ga) x += g;
    };
    return r;
}

Var Tape::mean_all(Var a) {
    check_owned(a, "mean_all");
    const Tensor& ta = value(a);
    const double n = static_cast<double>(ta.numel());
    double s = 0.0;
    for (std::int64_t i = 0; i < ta.numel(); ++i) s += ta.at(i);
    const int ia = a.id;
    Var r = push(Tensor::scalar(s / n), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io, n](Tape& t) {
        const double g = t.grad_buf(io)[0] / n;
        auto& ga = t.grad_buf(ia);
        for (auto& x : ga) x += g;
    };
    return r;
}

// ---------------------------------------------------------------------------
// moving average

Tensor avg_pool_tensor(const Tensor& x, int axis, std::int64_t kernel) {
    if (axis < 0 || static_cast<std::size_t>(axis) >= x.ndim()) {
        throw dimension_error("avg_pool: axis " + std::to_string(axis) + " invalid for shape " +
                              shape_str(x.shape()));
    }
    const AxisView v = make_axis_view(x.shape(), axis);
    if (kernel < 1 || kernel % 2 == 0) {
        throw config_error("avg_pool: kernel must be a positive odd integer, got " +
                           std::to_string(kernel));
    }
    if (kernel > v.len) {
        throw config_error("avg_pool: kernel " + std::to_string(kernel) +
                           " exceeds axis length " + std::to_string(v.len));
    }
    const std::int64_t half = kernel / 2;
    Tensor out(x.shape());
    for (std::int64_t o = 0; o < v.outer; ++o) {
        for (std::int64_t i = 0; i < v.inner; ++i) {
            for (std::int64_t k = 0; k < v.len; ++k) {
                const double center = x.at((o * v.len + k) * v.inner + i);
                // deviation form: mean = x[k] + mean of neighbour differences,
                // so constant slices are reproduced bit-exactly
                double dev = 0.0;
                for (std::int64_t w = -half; w <= half; ++w) {
                    if (w == 0) continue;
                    const std::int64_t src = clamp_index(k + w, v.len);
                    dev += x.at((o * v.len + src) * v.inner + i) - center;
                }
                out.at((o * v.len + k) * v.inner + i) = center + dev / static_cast<double>(kernel);
            }
        }
    }
    return out;
}

Var Tape::avg_pool(Var a, int axis, std::int64_t kernel) {
    check_owned(a, "avg_pool");
    Tensor out = avg_pool_tensor(value(a), axis, kernel);
    const AxisView v = make_axis_view(value(a).shape(), axis);
    const std::int64_t half = kernel / 2;
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io, v, half, kernel](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        const double invk = 1.0 / static_cast<double>(kernel);
        for (std::int64_t o = 0; o < v.outer; ++o) {
            for (std::int64_t i = 0; i < v.inner; ++i) {
                for (std::int64_t k = 0; k < v.len; ++k) {
                    const double gi = g[static_cast<std::size_t>((o * v.len + k) * v.inner + i)];
                    if (gi == 0.0) continue;
                    ga[static_cast<std::size_t>((o * v.len + k) * v.inner + i)] += gi;
                    for (std::int64_t w = -half; w <= half; ++w) {
                        if (w == 0) continue;
                        const std::int64_t src = clamp_index(k + w, v.len);
                        if (src == k) continue;  // the forward term is identically zero
                        ga[static_cast<std::size_t>((o * v.len + src) * v.inner + i)] += gi * invk;
                        ga[static_cast<std::size_t>((o * v.len + k) * v.inner + i)] -= gi * invk;
                    }
                }
            }
        }
    };
    return r;
}

// ---------------------------------------------------------------------------
// DFT

Var Tape::dft_real_part(Var a, int axis) {
    check_owned(a, "dft_real_part");
    const Tensor& ta = value(a);
    check_axis(ta, axis, "dft_real_part");
    const AxisView v = make_axis_view(ta.shape(), axis);
    const double w0 = 2.0 * M_PI / static_cast<double>(v.len);
    Tensor out(ta.shape());
    for (std::int64_t o = 0; o < v.outer; ++o) {
        for (std::int64_t i = 0; i < v.inner; ++i) {
            for (std::int64_t k = 0; k < v.len; ++k) {
                double s = 0.0;
                for (std::int64_t n = 0; n < v.len; ++n)
                    s += ta.at((o * v.len + n) * v.inner + i) * std::cos(w0 * static_cast<double>(k * n));
                out.at((o * v.len + k) * v.inner + i) = s;
            }
        }
    }
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    // cos(w0*k*n) is symmetric in (k, n): the adjoint reuses the same kernel
    nodes_.back().backward = [ia, io, v, w0](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        for (std::int64_t o = 0; o < v.outer; ++o) {
            for (std::int64_t i = 0; i < v.inner; ++i) {
                for (std::int64_t n = 0; n < v.len; ++n) {
                    double s = 0.0;
                    for (std::int64_t k = 0; k < v.len; ++k)
                        s += g[static_cast<std::size_t>((o * v.len + k) * v.inner + i)] *
                             std::cos(w0 * static_cast<double>(k * n));
                    ga[static_cast<std::size_t>((o * v.len + n) * v.inner + i)] += s;
                }
            }
        }
    };
    return r;
}

Var Tape::dft_imag_part(Var a, int axis) {
    check_owned(a, "dft_imag_part");
    const Tensor& ta = value(a);
    check_axis(ta, axis, "dft_imag_part");
    const AxisView v = make_axis_view(ta.shape(), axis);
    const double w0 = 2.0 * M_PI / static_cast<double>(v.len);
    Tensor out(ta.shape());
    for (std::int64_t o = 0; o < v.outer; ++o) {
        for (std::int64_t i = 0; i < v.inner; ++i) {
            for (std::int64_t k = 0; k < v.len; ++k) {
                double s = 0.0;
                for (std::int64_t n = 0; n < v.len; ++n)
                    s -= ta.at((o * v.len + n) * v.inner + i) * std::sin(w0 * static_cast<double>(k * n));
                out.at((o * v.len + k) * v.inner + i) = s;
            }
        }
    }
    const int ia = a.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ia, io, v, w0](Tape& t) {
        const auto& g = t.grad_buf(io);
        auto& ga = t.grad_buf(ia);
        for (std::int64_t o = 0; o < v.outer; ++o) {
            for (std::int64_t i = 0; i < v.inner; ++i) {
                for (std::int64_t n = 0; n < v.len; ++n) {
                    double s = 0.0;
                    for (std::int64_t k = 0; k < v.len; ++k)
                        s -= g[static_cast<std::size_t>((o * v.len + k) * v.inner + i)] *
                             std::sin(w0 * static_cast<double>(k * n));
                    ga[static_cast<std::size_t>((o * v.len + n) * v.inner + i)] += s;
                }
            }
        }
    };
    return r;
}

ComplexPair dft_real(const Tensor& x) {
    if (x.ndim() != 1) throw dimension_error("dft_real: expected a 1-D tensor");
    Tape t;
    Var v = t.leaf(x);
    Tensor re = t.value(t.dft_real_part(v, 0));
    Tensor im = t.value(t.dft_imag_part(v, 0));
    return ComplexPair{std::move(re), std::move(im)};
}

Var Tape::complex_modulus(Var re, Var im, double eps) {
    check_owned(re, "complex_modulus");
    check_owned(im, "complex_modulus");
    const Tensor& tr = value(re);
    const Tensor& ti = value(im);
    if (!tr.same_shape(ti)) {
        throw dimension_error("complex_modulus: shape mismatch " + shape_str(tr.shape()) +
                              " vs " + shape_str(ti.shape()));
    }
    Tensor out(tr.shape());
    for (std::int64_t i = 0; i < tr.numel(); ++i)
        out.at(i) = std::sqrt(tr.at(i) * tr.at(i) + ti.at(i) * ti.at(i) + eps * eps);
    const int ir = re.id, ii = im.id;
    Var r = push(std::move(out), nullptr);
    const int io = r.id;
    nodes_.back().backward = [ir, ii, io](Tape& t) {
        const auto& g = t.grad_buf(io);
        const auto& m = t.data_buf(io);
        const auto& vr = t.data_buf(ir);
        const auto& vi = t.data_buf(ii);
        auto& gr = t.grad_buf(ir);
        auto& gi = t.grad_buf(ii);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gr[i] += g[i] * vr[i] / m[i];
            gi[i] += g[i] * vi[i] / m[i];
        }
    };
    return r;
}

}  // namespace timebridge
