#pragma once

#include <functional>
#include <vector>

#include "tensor.hpp"

namespace timebridge {

class Tape;

// Handle to a node on a tape. Cheap to copy; only meaningful together with
// the tape that produced it.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

// Reverse-mode differentiation tape. Nodes are recorded in evaluation order,
// which is a topological order by construction (an op can only reference
// already-existing nodes). backward() replays the recorded local rules once,
// in reverse order, after zeroing every gradient buffer, so repeated calls
// are idempotent.
//
// A tape is built per evaluation and thrown away; tensors without a tape
// attachment are plain immutable values.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Records an input node (parameter or data constant).
    Var leaf(Tensor value);
    Var constant(Tensor value) { return leaf(std::move(value)); }

    const Tensor& value(Var v) const;
    // Gradient of the last backward() target with respect to node v.
    Tensor grad(Var v) const;

    // Seeds d(loss)/d(loss) = 1 and runs every recorded rule once in reverse
    // order. loss must be a scalar node.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

    // -- elementwise / arithmetic --------------------------------------
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var abs(Var a);  // subgradient 0 at x = 0
    Var gelu(Var a);

    // -- linear algebra (2-D) -------------------------------------------
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add_rowvec(Var m, Var v);  // m: [R x C], v: [C]

    // -- structure -------------------------------------------------------
    Var reshape(Var a, Shape new_shape);
    Var slice_rows(Var a, std::int64_t r0, std::int64_t r1);
    Var concat_rows(const std::vector<Var>& parts);
    Var slice_cols(Var a, std::int64_t c0, std::int64_t c1);
    Var concat_cols(const std::vector<Var>& parts);

    // -- normalization / reductions ---------------------------------------
    Var softmax(Var a, int axis);
    Var layer_norm(Var x, int axis, double eps, Var gain, Var bias);
    Var sum_all(Var a);
    Var mean_all(Var a);

    // Moving average along `axis` with replicate (edge-value) padding; the
    // window length `kernel` must be odd and no longer than the axis.
    // Computed in deviation form (x[i] plus mean of neighbour differences) so
    // constant inputs map to themselves bit-exactly.
    Var avg_pool(Var a, int axis, std::int64_t kernel);

    // Dense DFT along `axis`: real part uses the cos kernel, imaginary part
    // the -sin kernel. O(len^2) per slice; the adjoint reuses the same
    // symmetric kernels.
    Var dft_real_part(Var a, int axis);
    Var dft_imag_part(Var a, int axis);

    // sqrt(re^2 + im^2 + eps^2), smooth at the origin for eps > 0.
    Var complex_modulus(Var re, Var im, double eps);

private:
    struct Node {
        Tensor value;
        std::vector<double> grad;
        std::function<void(Tape&)> backward;
    };

    Var push(Tensor value, std::function<void(Tape&)> bw);
    const Node& node(Var v) const;
    std::vector<double>& grad_buf(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    const std::vector<double>& grad_buf(int id) const {
        return nodes_[static_cast<std::size_t>(id)].grad;
    }
    const std::vector<double>& data_buf(int id) const {
        return nodes_[static_cast<std::size_t>(id)].value.vec();
    }
    void check_owned(Var v, const char* op) const;
    void check_axis(const Tensor& t, int axis, const char* op) const;

    std::vector<Node> nodes_;
};

// Tape-free moving average with replicate padding (shared by the recorded op
// and plain-tensor callers). kernel must be odd and <= the axis length.
Tensor avg_pool_tensor(const Tensor& x, int axis, std::int64_t kernel);

// Tape-free DFT of a 1-D tensor.
ComplexPair dft_real(const Tensor& x);

}  // namespace timebridge
