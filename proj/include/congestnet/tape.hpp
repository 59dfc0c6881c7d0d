#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "congestnet/kernels.hpp"
#include "congestnet/tensor.hpp"

namespace congestnet {

// Reverse-mode tape. Nodes are appended in execution order; backward() walks
// them in reverse, each rule accumulating (+=) into its inputs' grads. A node
// whose inputs do not require grad records no backward rule. Every forward
// result is checked for NaN/Inf and throws on a non-finite value.
//
// A tape belongs to one logical thread. Kernels may parallelize internally;
// their accumulation order is fixed, so results are reproducible bitwise.
template <class T>
class Tape {
  public:
    using Id = int;

    Id leaf(Tensor<T> v, bool requires_grad = false);

    const Tensor<T>& value(Id id) const { return nodes_[id].value; }
    const std::vector<T>& grad(Id id) const { return nodes_[id].grad; }
    bool requires_grad(Id id) const { return nodes_[id].requires_grad; }
    size_t size() const { return nodes_.size(); }
    void zero_grad();

    // add/sub/mul accept equal shapes or a rank-1 right operand broadcast
    // across the rows of a rank-2 left operand (bias addition).
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);
    Id matmul(Id a, Id b);
    Id concat(Id a, Id b, int axis);
    Id gather_rows(Id x, std::vector<int> idx);
    Id leaky_relu(Id x, T slope);
    Id shifted_softplus(Id x); // ln(0.5 e^x + 0.5)
    Id sigmoid(Id x);
    Id mean(Id x);
    Id sum(Id x);
    Id segment_sum(Id x, std::vector<int> ids, int n_segments);
    Id segment_softmax(Id x, std::vector<int> ids, int n_segments);
    // out[i,h] = dot of head-h slice of z row i with a row h; z: R x (H*dh), a: H x dh
    Id head_dot(Id z, Id a, int heads);
    // out row i head h slice = v slice * s[i,h]; v: R x (H*dh), s: R x H
    Id head_scale(Id v, Id s, int heads);

    // Seeds d(loss)/d(loss) = 1 and runs all recorded rules in reverse order.
    // Call once per tape (or zero_grad() first); grads accumulate with +=.
    void backward(Id loss);

  private:
    struct Node {
        Tensor<T> value;
        std::vector<T> grad; // same shape as value when requires_grad
        bool requires_grad = false;
        std::function<void()> back; // empty for leaves / no-grad nodes
    };

    Id push(Tensor<T> v, bool requires_grad, std::function<void()> back);
    Id binary_ew(EwOp op, Id a, Id b, const char* name);
    void check_finite(const Tensor<T>& v, const char* op) const;

    std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

// Max over coordinates of |analytic - central_diff| / max(1, |analytic|, |central_diff|)
// for a scalar-valued function built on a fresh tape. `f` receives the tape and
// the id of the leaf holding x and returns the loss id.
double grad_check(const std::function<Tape<double>::Id(Tape<double>&, Tape<double>::Id)>& f,
                  const Tensor<double>& x, double eps);

} // namespace congestnet
