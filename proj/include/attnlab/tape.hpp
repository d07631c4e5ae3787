#pragma once

#include <map>
#include <string>
#include <vector>

#include "attnlab/mask.hpp"
#include "attnlab/matrix.hpp"

namespace attnlab {

// Gradient of the loss with respect to one named parameter.
struct Gradient {
    std::string param;
    Matrix value;
};

// Define-by-run reverse-mode graph over the fixed op set the trainer needs:
// matmul, row softmax (dense and masked), linear pieces, relu, elementwise
// add/mul, column concat/slice, and the masked L1 loss. Forward values are
// computed eagerly at node creation; backward() fills gradients.
class Tape {
public:
    using NodeId = int;

    NodeId parameter(const std::string& name, Matrix value);
    NodeId constant(Matrix value);

    NodeId matmul(NodeId a, NodeId b);
    // a * transpose(b)
    NodeId matmul_transpose_b(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    // x + bias with bias (1 x cols) broadcast over rows
    NodeId add_row_vector(NodeId x, NodeId bias);
    // elementwise product
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double s);
    NodeId relu(NodeId a);
    NodeId row_softmax(NodeId a);
    NodeId masked_row_softmax(NodeId a, AttentionMask mask);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId slice_top_left(NodeId a, int rows, int cols);
    // x * w + bias
    NodeId linear(NodeId x, NodeId w, NodeId bias);
    // scalar sum of all entries
    NodeId sum(NodeId a);
    // Mean absolute error between pred and target over the rows flagged in
    // row_mask (all columns of those rows). Scalar output; raises
    // DegenerateRowError when no row is flagged.
    NodeId l1_masked(NodeId pred, NodeId target, std::vector<std::uint8_t> row_mask);

    const Matrix& value(NodeId id) const;

    // Accumulates gradients of a scalar loss into every node at or below it.
    void backward(NodeId loss);

    const Matrix& grad(NodeId id) const;
    // Gradient for a registered parameter; UnknownParameterError when absent.
    Matrix grad_of(const std::string& name) const;
    std::vector<Gradient> gradients(const std::vector<std::string>& names) const;
    bool has_parameter(const std::string& name) const;

private:
    enum class Op {
        Parameter,
        Constant,
        MatMul,
        MatMulTB,
        Add,
        AddRow,
        Mul,
        Scale,
        Relu,
        RowSoftmax,
        MaskedRowSoftmax,
        ConcatCols,
        SliceTopLeft,
        Sum,
        L1Masked,
    };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        std::vector<int> srcs;
        Matrix value;
        Matrix grad;
        bool has_grad = false;
        double scalar = 0.0;
        AttentionMask mask;
        std::vector<std::uint8_t> row_mask;
        long long count = 0;
        std::string name;
    };

    NodeId push(Node node);
    int checked(NodeId id) const;
    Matrix& ensure_grad(int id);
    void propagate(int id);

    std::vector<Node> nodes_;
    std::map<std::string, int> params_;
    bool ran_backward_ = false;
};

}  // namespace attnlab
