#include "congestnet/tape.hpp"

#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

namespace congestnet {

namespace {

template <class T>
T stable_sigmoid(T x) {
    if (x >= T(0)) {
        const T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <class T>
T stable_softplus(T x) {
    // log(1 + e^x) without overflow for large |x|
    const T m = x > T(0) ? x : T(0);
    return m + std::log1p(std::exp(-std::abs(x)));
}

} // namespace

template <class T>
typename Tape<T>::Id Tape<T>::push(Tensor<T> v, bool requires_grad, std::function<void()> back) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    if (requires_grad) n.grad.assign(n.value.numel(), T(0));
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size()) - 1;
}

template <class T>
void Tape<T>::check_finite(const Tensor<T>& v, const char* op) const {
    if (!all_finite(v.data.data(), v.data.size()))
        throw std::runtime_error(std::string("tape: non-finite value produced by ") + op);
}

template <class T>
typename Tape<T>::Id Tape<T>::leaf(Tensor<T> v, bool requires_grad) {
    check_finite(v, "leaf");
    return push(std::move(v), requires_grad, {});
}

template <class T>
void Tape<T>::zero_grad() {
    for (Node& n : nodes_)
        if (n.requires_grad) std::fill(n.grad.begin(), n.grad.end(), T(0));
}

template <class T>
typename Tape<T>::Id Tape<T>::add(Id a, Id b) {
    return binary_ew(EwOp::add, a, b, "add");
}
template <class T>
typename Tape<T>::Id Tape<T>::sub(Id a, Id b) {
    return binary_ew(EwOp::sub, a, b, "sub");
}
template <class T>
typename Tape<T>::Id Tape<T>::mul(Id a, Id b) {
    return binary_ew(EwOp::mul, a, b, "mul");
}

template <class T>
typename Tape<T>::Id Tape<T>::binary_ew(EwOp op, Id a, Id b, const char* name) {
    const Tensor<T>& av = nodes_[a].value;
    const Tensor<T>& bv = nodes_[b].value;
    const bool broadcast = av.rank() == 2 && bv.rank() == 1 && av.cols() == bv.shape[0];
    if (!broadcast && !av.same_shape(bv))
        throw std::invalid_argument(std::string("tape: ") + name + " shape mismatch " +
                                    shape_str(av.shape) + " vs " + shape_str(bv.shape));

    Tensor<T> out(av.shape);
    if (broadcast)
        ew_rowvec(op, av.data.data(), bv.data.data(), out.data.data(), av.rows(), av.cols());
    else
        ew(op, av.data.data(), bv.data.data(), out.data.data(), av.numel());
    check_finite(out, name);

    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, op, a, b, o, broadcast]() {
            const std::vector<T>& g = nodes_[o].grad;
            const Tensor<T>& av = nodes_[a].value;
            const Tensor<T>& bv = nodes_[b].value;
            const int rows = av.rows(), cols = av.cols();
            if (nodes_[a].requires_grad) {
                std::vector<T>& da = nodes_[a].grad;
                switch (op) {
                    case EwOp::add:
                    case EwOp::sub:
                        for (size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                        break;
                    case EwOp::mul:
                        if (broadcast) {
                            for (int i = 0; i < rows; ++i)
                                for (int j = 0; j < cols; ++j)
                                    da[static_cast<size_t>(i) * cols + j] +=
                                        g[static_cast<size_t>(i) * cols + j] * bv.data[j];
                        } else {
                            for (size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv.data[i];
                        }
                        break;
                }
            }
            if (nodes_[b].requires_grad) {
                std::vector<T>& db = nodes_[b].grad;
                const T sign = op == EwOp::sub ? T(-1) : T(1);
                if (broadcast) {
                    // column reduction, ascending row order
                    for (int i = 0; i < rows; ++i)
                        for (int j = 0; j < cols; ++j) {
                            const T gij = g[static_cast<size_t>(i) * cols + j];
                            db[j] += op == EwOp::mul
                                         ? gij * av.data[static_cast<size_t>(i) * cols + j]
                                         : sign * gij;
                        }
                } else {
                    if (op == EwOp::mul)
                        for (size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av.data[i];
                    else
                        for (size_t i = 0; i < g.size(); ++i) db[i] += sign * g[i];
                }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::matmul(Id a, Id b) {
    const Tensor<T>& av = nodes_[a].value;
    const Tensor<T>& bv = nodes_[b].value;
    if (av.rank() != 2 || bv.rank() != 2 || av.shape[1] != bv.shape[0])
        throw std::invalid_argument("tape: matmul shape mismatch " + shape_str(av.shape) +
                                    " vs " + shape_str(bv.shape));
    const int m = av.shape[0], k = av.shape[1], n = bv.shape[1];
    Tensor<T> out({m, n});
    gemm(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    check_finite(out, "matmul");

    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, a, b, o, m, k, n]() {
            const std::vector<T>& g = nodes_[o].grad;
            if (nodes_[a].requires_grad) {
                std::vector<T> bt(static_cast<size_t>(n) * k);
                transpose(nodes_[b].value.data.data(), bt.data(), k, n);
                gemm(g.data(), bt.data(), nodes_[a].grad.data(), m, n, k, /*accumulate=*/true);
            }
            if (nodes_[b].requires_grad) {
                std::vector<T> at(static_cast<size_t>(k) * m);
                transpose(nodes_[a].value.data.data(), at.data(), m, k);
                gemm(at.data(), g.data(), nodes_[b].grad.data(), k, m, n, /*accumulate=*/true);
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::concat(Id a, Id b, int axis) {
    const Tensor<T>& av = nodes_[a].value;
    const Tensor<T>& bv = nodes_[b].value;
    Tensor<T> out;
    if (axis == 0 && av.rank() == 1 && bv.rank() == 1) {
        out = Tensor<T>({av.shape[0] + bv.shape[0]});
        std::copy(av.data.begin(), av.data.end(), out.data.begin());
        std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.shape[0]);
    } else if (axis == 0 && av.rank() == 2 && bv.rank() == 2 && av.shape[1] == bv.shape[1]) {
        out = Tensor<T>({av.shape[0] + bv.shape[0], av.shape[1]});
        std::copy(av.data.begin(), av.data.end(), out.data.begin());
        std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.numel());
    } else if (axis == 1 && av.rank() == 2 && bv.rank() == 2 && av.shape[0] == bv.shape[0]) {
        const int r = av.shape[0], ca = av.shape[1], cb = bv.shape[1];
        out = Tensor<T>({r, ca + cb});
        for (int i = 0; i < r; ++i) {
            std::copy(av.data.begin() + static_cast<size_t>(i) * ca,
                      av.data.begin() + static_cast<size_t>(i + 1) * ca,
                      out.data.begin() + static_cast<size_t>(i) * (ca + cb));
            std::copy(bv.data.begin() + static_cast<size_t>(i) * cb,
                      bv.data.begin() + static_cast<size_t>(i + 1) * cb,
                      out.data.begin() + static_cast<size_t>(i) * (ca + cb) + ca);
        }
    } else {
        throw std::invalid_argument("tape: concat axis " + std::to_string(axis) +
                                    " incompatible with " + shape_str(av.shape) + " and " +
                                    shape_str(bv.shape));
    }

    const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, a, b, o, axis]() {
            const std::vector<T>& g = nodes_[o].grad;
            const Tensor<T>& av = nodes_[a].value;
            const Tensor<T>& bv = nodes_[b].value;
            if (axis == 0) {
                if (nodes_[a].requires_grad) {
                    std::vector<T>& da = nodes_[a].grad;
                    for (size_t i = 0; i < av.numel(); ++i) da[i] += g[i];
                }
                if (nodes_[b].requires_grad) {
                    std::vector<T>& db = nodes_[b].grad;
                    const size_t off = av.numel();
                    for (size_t i = 0; i < bv.numel(); ++i) db[i] += g[off + i];
                }
            } else {
                const int r = av.shape[0], ca = av.shape[1], cb = bv.shape[1];
                if (nodes_[a].requires_grad) {
                    std::vector<T>& da = nodes_[a].grad;
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < ca; ++j)
                            da[static_cast<size_t>(i) * ca + j] +=
                                g[static_cast<size_t>(i) * (ca + cb) + j];
                }
                if (nodes_[b].requires_grad) {
                    std::vector<T>& db = nodes_[b].grad;
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < cb; ++j)
                            db[static_cast<size_t>(i) * cb + j] +=
                                g[static_cast<size_t>(i) * (ca + cb) + ca + j];
                }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::gather_rows(Id x, std::vector<int> idx) {
    const Tensor<T>& xv = nodes_[x].value;
    if (xv.rank() != 2)
        throw std::invalid_argument("tape: gather_rows needs a rank-2 input, got " +
                                    shape_str(xv.shape));
    const int n = xv.shape[0], f = xv.shape[1];
    const int e = static_cast<int>(idx.size());
    for (int i : idx)
        if (i < 0 || i >= n)
            throw std::out_of_range("tape: gather_rows index " + std::to_string(i) +
                                    " outside [0," + std::to_string(n) + ")");
    Tensor<T> out({e, f});
    congestnet::gather_rows(xv.data.data(), f, idx.data(), e, out.data.data());

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        auto seg = std::make_shared<SegmentIndex>(build_segment_index(idx, n));
        back = [this, x, o, seg, e, f]() {
            scatter_add_rows(nodes_[o].grad.data(), e, f, *seg, nodes_[x].grad.data());
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::leaky_relu(Id x, T slope) {
    const Tensor<T>& xv = nodes_[x].value;
    Tensor<T> out(xv.shape);
    for (size_t i = 0; i < xv.numel(); ++i)
        out.data[i] = xv.data[i] > T(0) ? xv.data[i] : slope * xv.data[i];
    check_finite(out, "leaky_relu");

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, x, o, slope]() {
            const std::vector<T>& g = nodes_[o].grad;
            const Tensor<T>& xv = nodes_[x].value;
            std::vector<T>& dx = nodes_[x].grad;
            for (size_t i = 0; i < g.size(); ++i)
                dx[i] += g[i] * (xv.data[i] > T(0) ? T(1) : slope);
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::shifted_softplus(Id x) {
    const Tensor<T>& xv = nodes_[x].value;
    const T ln2 = std::log(T(2));
    Tensor<T> out(xv.shape);
    for (size_t i = 0; i < xv.numel(); ++i) out.data[i] = stable_softplus(xv.data[i]) - ln2;
    check_finite(out, "shifted_softplus");

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, x, o]() {
            const std::vector<T>& g = nodes_[o].grad;
            const Tensor<T>& xv = nodes_[x].value;
            std::vector<T>& dx = nodes_[x].grad;
            for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * stable_sigmoid(xv.data[i]);
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::sigmoid(Id x) {
    const Tensor<T>& xv = nodes_[x].value;
    Tensor<T> out(xv.shape);
    for (size_t i = 0; i < xv.numel(); ++i) out.data[i] = stable_sigmoid(xv.data[i]);
    check_finite(out, "sigmoid");

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, x, o]() {
            const std::vector<T>& g = nodes_[o].grad;
            const std::vector<T>& s = nodes_[o].value.data;
            std::vector<T>& dx = nodes_[x].grad;
            for (size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * s[i] * (T(1) - s[i]);
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::mean(Id x) {
    const Tensor<T>& xv = nodes_[x].value;
    if (xv.numel() == 0) throw std::invalid_argument("tape: mean of an empty tensor");
    T s = T(0);
    for (size_t i = 0; i < xv.numel(); ++i) s += xv.data[i];
    const T inv_n = T(1) / static_cast<T>(xv.numel());
    Tensor<T> out = Tensor<T>::scalar(s * inv_n);
    check_finite(out, "mean");

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, x, o, inv_n]() {
            const T g = nodes_[o].grad[0] * inv_n;
            std::vector<T>& dx = nodes_[x].grad;
            for (size_t i = 0; i < dx.size(); ++i) dx[i] += g;
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::sum(Id x) {
    const Tensor<T>& xv = nodes_[x].value;
    T s = T(0);
    for (size_t i = 0; i < xv.numel(); ++i) s += xv.data[i];
    Tensor<T> out = Tensor<T>::scalar(s);
    check_finite(out, "sum");

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, x, o]() {
            const T g = nodes_[o].grad[0];
            std::vector<T>& dx = nodes_[x].grad;
            for (size_t i = 0; i < dx.size(); ++i) dx[i] += g;
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::segment_sum(Id x, std::vector<int> ids, int n_segments) {
    const Tensor<T>& xv = nodes_[x].value;
    if (xv.rank() != 2)
        throw std::invalid_argument("tape: segment_sum needs a rank-2 input, got " +
                                    shape_str(xv.shape));
    if (ids.size() != static_cast<size_t>(xv.shape[0]))
        throw std::invalid_argument("tape: segment_sum ids length != rows");
    const int e = xv.shape[0], f = xv.shape[1];
    auto seg = std::make_shared<SegmentIndex>(build_segment_index(ids, n_segments));
    Tensor<T> out({n_segments, f});
    congestnet::segment_sum(xv.data.data(), e, f, *seg, out.data.data());
    check_finite(out, "segment_sum");

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        auto ids_p = std::make_shared<std::vector<int>>(std::move(ids));
        back = [this, x, o, ids_p, f]() {
            const std::vector<T>& g = nodes_[o].grad;
            std::vector<T>& dx = nodes_[x].grad;
            const std::vector<int>& ids = *ids_p;
            for (size_t r = 0; r < ids.size(); ++r) {
                const size_t src = static_cast<size_t>(ids[r]) * f;
                const size_t dst = r * f;
                for (int c = 0; c < f; ++c) dx[dst + c] += g[src + c];
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::segment_softmax(Id x, std::vector<int> ids, int n_segments) {
    const Tensor<T>& xv = nodes_[x].value;
    if (xv.rank() != 2)
        throw std::invalid_argument("tape: segment_softmax needs a rank-2 input, got " +
                                    shape_str(xv.shape));
    if (ids.size() != static_cast<size_t>(xv.shape[0]))
        throw std::invalid_argument("tape: segment_softmax ids length != rows");
    const int e = xv.shape[0], f = xv.shape[1];
    auto seg = std::make_shared<SegmentIndex>(build_segment_index(ids, n_segments));
    Tensor<T> out(xv.shape);
    congestnet::segment_softmax(xv.data.data(), e, f, *seg, out.data.data());
    check_finite(out, "segment_softmax");

    const bool rg = nodes_[x].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, x, o, seg, e, f]() {
            segment_softmax_backward(nodes_[o].value.data.data(), nodes_[o].grad.data(), e, f,
                                     *seg, nodes_[x].grad.data());
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::head_dot(Id z, Id a, int heads) {
    const Tensor<T>& zv = nodes_[z].value;
    const Tensor<T>& av = nodes_[a].value;
    if (zv.rank() != 2 || av.rank() != 2 || heads <= 0 || zv.shape[1] % heads != 0 ||
        av.shape[0] != heads || av.shape[1] != zv.shape[1] / heads)
        throw std::invalid_argument("tape: head_dot expects z (R,H*dh) and a (H,dh), got " +
                                    shape_str(zv.shape) + " and " + shape_str(av.shape));
    const int rows = zv.shape[0], dh = zv.shape[1] / heads;
    Tensor<T> out({rows, heads});
    congestnet::head_dot(zv.data.data(), av.data.data(), out.data.data(), rows, heads, dh);
    check_finite(out, "head_dot");

    const bool rg = nodes_[z].requires_grad || nodes_[a].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, z, a, o, rows, heads, dh]() {
            const std::vector<T>& g = nodes_[o].grad;
            const Tensor<T>& zv = nodes_[z].value;
            const Tensor<T>& av = nodes_[a].value;
            if (nodes_[z].requires_grad) {
                std::vector<T>& dz = nodes_[z].grad;
                for (int i = 0; i < rows; ++i)
                    for (int h = 0; h < heads; ++h) {
                        const T gih = g[static_cast<size_t>(i) * heads + h];
                        const size_t zoff = (static_cast<size_t>(i) * heads + h) * dh;
                        const size_t aoff = static_cast<size_t>(h) * dh;
                        for (int c = 0; c < dh; ++c) dz[zoff + c] += gih * av.data[aoff + c];
                    }
            }
            if (nodes_[a].requires_grad) {
                std::vector<T>& da = nodes_[a].grad;
                for (int i = 0; i < rows; ++i) // ascending-row accumulation
                    for (int h = 0; h < heads; ++h) {
                        const T gih = g[static_cast<size_t>(i) * heads + h];
                        const size_t zoff = (static_cast<size_t>(i) * heads + h) * dh;
                        const size_t aoff = static_cast<size_t>(h) * dh;
                        for (int c = 0; c < dh; ++c) da[aoff + c] += gih * zv.data[zoff + c];
                    }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
typename Tape<T>::Id Tape<T>::head_scale(Id v, Id s, int heads) {
    const Tensor<T>& vv = nodes_[v].value;
    const Tensor<T>& sv = nodes_[s].value;
    if (vv.rank() != 2 || sv.rank() != 2 || heads <= 0 || vv.shape[1] % heads != 0 ||
        sv.shape[0] != vv.shape[0] || sv.shape[1] != heads)
        throw std::invalid_argument("tape: head_scale expects v (R,H*dh) and s (R,H), got " +
                                    shape_str(vv.shape) + " and " + shape_str(sv.shape));
    const int rows = vv.shape[0], dh = vv.shape[1] / heads;
    Tensor<T> out(vv.shape);
    congestnet::head_scale(vv.data.data(), sv.data.data(), out.data.data(), rows, heads, dh);
    check_finite(out, "head_scale");

    const bool rg = nodes_[v].requires_grad || nodes_[s].requires_grad;
    std::function<void()> back;
    if (rg) {
        const Id o = static_cast<Id>(nodes_.size());
        back = [this, v, s, o, rows, heads, dh]() {
            const std::vector<T>& g = nodes_[o].grad;
            const Tensor<T>& vv = nodes_[v].value;
            const Tensor<T>& sv = nodes_[s].value;
            if (nodes_[v].requires_grad) {
                std::vector<T>& dv = nodes_[v].grad;
                for (int i = 0; i < rows; ++i)
                    for (int h = 0; h < heads; ++h) {
                        const T sih = sv.data[static_cast<size_t>(i) * heads + h];
                        const size_t off = (static_cast<size_t>(i) * heads + h) * dh;
                        for (int c = 0; c < dh; ++c) dv[off + c] += g[off + c] * sih;
                    }
            }
            if (nodes_[s].requires_grad) {
                std::vector<T>& ds = nodes_[s].grad;
                for (int i = 0; i < rows; ++i)
                    for (int h = 0; h < heads; ++h) {
                        const size_t off = (static_cast<size_t>(i) * heads + h) * dh;
                        T acc = T(0);
                        for (int c = 0; c < dh; ++c) acc += g[off + c] * vv.data[off + c];
                        ds[static_cast<size_t>(i) * heads + h] += acc;
                    }
            }
        };
    }
    return push(std::move(out), rg, std::move(back));
}

template <class T>
void Tape<T>::backward(Id loss) {
    if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
        throw std::out_of_range("tape: backward on unknown node");
    Node& ln = nodes_[loss];
    if (ln.value.numel() != 1)
        throw std::invalid_argument("tape: backward requires a scalar loss, got " +
                                    shape_str(ln.value.shape));
    if (!ln.requires_grad)
        throw std::invalid_argument("tape: backward on a node that does not require grad");
    ln.grad[0] += T(1);
    for (Id i = loss; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back();
}

template class Tape<float>;
template class Tape<double>;

double grad_check(const std::function<Tape<double>::Id(Tape<double>&, Tape<double>::Id)>& f,
                  const Tensor<double>& x, double eps) {
    Tape<double> tape;
    const auto xid = tape.leaf(x, /*requires_grad=*/true);
    const auto loss = f(tape, xid);
    tape.backward(loss);
    const std::vector<double> analytic = tape.grad(xid);

    double worst = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) {
        Tensor<double> xp = x;
        Tensor<double> xm = x;
        xp.data[i] += eps;
        xm.data[i] -= eps;
        Tape<double> tp;
        const double fp = tp.value(f(tp, tp.leaf(xp))).data[0];
        Tape<double> tm;
        const double fm = tm.value(f(tm, tm.leaf(xm))).data[0];
        const double central = (fp - fm) / (2.0 * eps);
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(central)});
        worst = std::max(worst, std::abs(analytic[i] - central) / denom);
    }
    return worst;
}

} // namespace congestnet
