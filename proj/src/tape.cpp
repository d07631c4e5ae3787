#include "attnlab/tape.hpp"

#include <cmath>

namespace attnlab {

namespace {

std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

}  // namespace

Tape::NodeId Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

int Tape::checked(NodeId id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
        throw Error("tape: node id " + std::to_string(id) + " out of range");
    return id;
}

Tape::NodeId Tape::parameter(const std::string& name, Matrix value) {
    if (params_.count(name)) throw Error("tape: duplicate parameter name '" + name + "'");
    Node n;
    n.op = Op::Parameter;
    n.value = std::move(value);
    n.name = name;
    NodeId id = push(std::move(n));
    params_[name] = id;
    return id;
}

Tape::NodeId Tape::constant(Matrix value) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::MatMul;
    n.a = checked(a);
    n.b = checked(b);
    n.value = attnlab::matmul(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::matmul_transpose_b(NodeId a, NodeId b) {
    Node n;
    n.op = Op::MatMulTB;
    n.a = checked(a);
    n.b = checked(b);
    n.value = attnlab::matmul_transpose_b(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Add;
    n.a = checked(a);
    n.b = checked(b);
    n.value = attnlab::add(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::add_row_vector(NodeId x, NodeId bias) {
    const Matrix& xm = nodes_[checked(x)].value;
    const Matrix& bm = nodes_[checked(bias)].value;
    if (bm.rows != 1 || bm.cols != xm.cols)
        throw ShapeError("tape add_row_vector: bias must be 1x" + std::to_string(xm.cols) +
                         ", got " + shape_of(bm));
    Node n;
    n.op = Op::AddRow;
    n.a = x;
    n.b = bias;
    n.value = xm;
    for (int i = 0; i < n.value.rows; ++i) {
        double* row = n.value.row(i);
        for (int j = 0; j < n.value.cols; ++j) row[j] += bm(0, j);
    }
    return push(std::move(n));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    Node n;
    n.op = Op::Mul;
    n.a = checked(a);
    n.b = checked(b);
    n.value = hadamard(nodes_[a].value, nodes_[b].value);
    return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double s) {
    Node n;
    n.op = Op::Scale;
    n.a = checked(a);
    n.scalar = s;
    n.value = attnlab::scale(nodes_[a].value, s);
    return push(std::move(n));
}

Tape::NodeId Tape::relu(NodeId a) {
    Node n;
    n.op = Op::Relu;
    n.a = checked(a);
    n.value = attnlab::relu(nodes_[a].value);
    return push(std::move(n));
}

Tape::NodeId Tape::row_softmax(NodeId a) {
    Node n;
    n.op = Op::RowSoftmax;
    n.a = checked(a);
    n.value = attnlab::row_softmax(nodes_[a].value);
    return push(std::move(n));
}

Tape::NodeId Tape::masked_row_softmax(NodeId a, AttentionMask mask) {
    Node n;
    n.op = Op::MaskedRowSoftmax;
    n.a = checked(a);
    n.value = attnlab::masked_row_softmax(nodes_[a].value, mask);
    n.mask = std::move(mask);
    return push(std::move(n));
}

Tape::NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeError("tape concat_cols: no parts");
    int rows = nodes_[checked(parts[0])].value.rows;
    int cols = 0;
    for (NodeId p : parts) {
        const Matrix& m = nodes_[checked(p)].value;
        if (m.rows != rows) throw ShapeError("tape concat_cols: row counts differ");
        cols += m.cols;
    }
    Node n;
    n.op = Op::ConcatCols;
    n.srcs.assign(parts.begin(), parts.end());
    n.value = Matrix(rows, cols);
    int offset = 0;
    for (NodeId p : parts) {
        const Matrix& m = nodes_[p].value;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < m.cols; ++j) n.value(i, offset + j) = m(i, j);
        offset += m.cols;
    }
    return push(std::move(n));
}

Tape::NodeId Tape::slice_top_left(NodeId a, int rows, int cols) {
    const Matrix& m = nodes_[checked(a)].value;
    if (rows < 1 || cols < 1 || rows > m.rows || cols > m.cols)
        throw ShapeError("tape slice_top_left: slice " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " does not fit in " + shape_of(m));
    Node n;
    n.op = Op::SliceTopLeft;
    n.a = a;
    n.value = Matrix(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) n.value(i, j) = m(i, j);
    return push(std::move(n));
}

Tape::NodeId Tape::linear(NodeId x, NodeId w, NodeId bias) {
    return add_row_vector(matmul(x, w), bias);
}

Tape::NodeId Tape::sum(NodeId a) {
    Node n;
    n.op = Op::Sum;
    n.a = checked(a);
    double total = 0.0;
    for (double v : nodes_[a].value.data) total += v;
    n.value = Matrix(1, 1);
    n.value(0, 0) = total;
    return push(std::move(n));
}

Tape::NodeId Tape::l1_masked(NodeId pred, NodeId target, std::vector<std::uint8_t> row_mask) {
    const Matrix& p = nodes_[checked(pred)].value;
    const Matrix& t = nodes_[checked(target)].value;
    if (!p.same_shape(t))
        throw ShapeError("tape l1_masked: prediction " + shape_of(p) + " vs target " + shape_of(t));
    if (static_cast<int>(row_mask.size()) != p.rows)
        throw ShapeError("tape l1_masked: row mask length " + std::to_string(row_mask.size()) +
                         " does not match " + std::to_string(p.rows) + " rows");
    long long masked_rows = 0;
    for (std::uint8_t v : row_mask) masked_rows += v ? 1 : 0;
    if (masked_rows == 0) throw DegenerateRowError("tape l1_masked: no rows are masked");
    Node n;
    n.op = Op::L1Masked;
    n.a = pred;
    n.b = target;
    n.row_mask = std::move(row_mask);
    n.count = masked_rows * p.cols;
    double total = 0.0;
    for (int i = 0; i < p.rows; ++i) {
        if (!n.row_mask[i]) continue;
        for (int j = 0; j < p.cols; ++j) total += std::abs(p(i, j) - t(i, j));
    }
    n.value = Matrix(1, 1);
    n.value(0, 0) = total / static_cast<double>(n.count);
    return push(std::move(n));
}

const Matrix& Tape::value(NodeId id) const { return nodes_[checked(id)].value; }

Matrix& Tape::ensure_grad(int id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Matrix(n.value.rows, n.value.cols);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::propagate(int id) {
    Node& n = nodes_[id];
    const Matrix& g = n.grad;
    switch (n.op) {
        case Op::Parameter:
        case Op::Constant:
            break;
        case Op::MatMul: {
            // c = a b: da += g b^T, db += a^T g
            Matrix da = attnlab::matmul_transpose_b(g, nodes_[n.b].value);
            Matrix db = attnlab::matmul(transpose(nodes_[n.a].value), g);
            ensure_grad(n.a) = attnlab::add(ensure_grad(n.a), da);
            ensure_grad(n.b) = attnlab::add(ensure_grad(n.b), db);
            break;
        }
        case Op::MatMulTB: {
            // c = a b^T: da += g b, db += g^T a
            Matrix da = attnlab::matmul(g, nodes_[n.b].value);
            Matrix db = attnlab::matmul(transpose(g), nodes_[n.a].value);
            ensure_grad(n.a) = attnlab::add(ensure_grad(n.a), da);
            ensure_grad(n.b) = attnlab::add(ensure_grad(n.b), db);
            break;
        }
        case Op::Add: {
            ensure_grad(n.a) = attnlab::add(ensure_grad(n.a), g);
            ensure_grad(n.b) = attnlab::add(ensure_grad(n.b), g);
            break;
        }
        case Op::AddRow: {
            ensure_grad(n.a) = attnlab::add(ensure_grad(n.a), g);
            Matrix& gb = ensure_grad(n.b);
            for (int i = 0; i < g.rows; ++i) {
                const double* grow = g.row(i);
                for (int j = 0; j < g.cols; ++j) gb(0, j) += grow[j];
            }
            break;
        }
        case Op::Mul: {
            Matrix da = hadamard(g, nodes_[n.b].value);
            Matrix db = hadamard(g, nodes_[n.a].value);
            ensure_grad(n.a) = attnlab::add(ensure_grad(n.a), da);
            ensure_grad(n.b) = attnlab::add(ensure_grad(n.b), db);
            break;
        }
        case Op::Scale: {
            ensure_grad(n.a) = attnlab::add(ensure_grad(n.a), attnlab::scale(g, n.scalar));
            break;
        }
        case Op::Relu: {
            const Matrix& x = nodes_[n.a].value;
            Matrix& ga = ensure_grad(n.a);
            for (std::size_t i = 0; i < ga.data.size(); ++i)
                if (x.data[i] > 0.0) ga.data[i] += g.data[i];
            break;
        }
        case Op::RowSoftmax:
        case Op::MaskedRowSoftmax: {
            // dz_ij = y_ij (g_ij - sum_k g_ik y_ik); masked outputs are zero,
            // so masked positions receive zero gradient automatically.
            const Matrix& y = n.value;
            Matrix& ga = ensure_grad(n.a);
            for (int i = 0; i < y.rows; ++i) {
                const double* yrow = y.row(i);
                const double* grow = g.row(i);
                double dot = 0.0;
                for (int j = 0; j < y.cols; ++j) dot += grow[j] * yrow[j];
                double* garow = ga.row(i);
                for (int j = 0; j < y.cols; ++j) garow[j] += yrow[j] * (grow[j] - dot);
            }
            break;
        }
        case Op::ConcatCols: {
            int offset = 0;
            for (int src : n.srcs) {
                Matrix& gs = ensure_grad(src);
                for (int i = 0; i < gs.rows; ++i)
                    for (int j = 0; j < gs.cols; ++j) gs(i, j) += g(i, offset + j);
                offset += gs.cols;
            }
            break;
        }
        case Op::SliceTopLeft: {
            Matrix& ga = ensure_grad(n.a);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) ga(i, j) += g(i, j);
            break;
        }
        case Op::Sum: {
            double gv = g(0, 0);
            Matrix& ga = ensure_grad(n.a);
            for (double& v : ga.data) v += gv;
            break;
        }
        case Op::L1Masked: {
            double gv = g(0, 0) / static_cast<double>(n.count);
            const Matrix& p = nodes_[n.a].value;
            const Matrix& t = nodes_[n.b].value;
            Matrix& gp = ensure_grad(n.a);
            Matrix& gt = ensure_grad(n.b);
            for (int i = 0; i < p.rows; ++i) {
                if (!n.row_mask[i]) continue;
                for (int j = 0; j < p.cols; ++j) {
                    double diff = p(i, j) - t(i, j);
                    double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                    gp(i, j) += gv * s;
                    gt(i, j) -= gv * s;
                }
            }
            break;
        }
    }
}

void Tape::backward(NodeId loss) {
    int id = checked(loss);
    const Matrix& lv = nodes_[id].value;
    if (lv.rows != 1 || lv.cols != 1)
        throw ShapeError("tape backward: loss must be a 1x1 scalar, got " + shape_of(lv));
    for (Node& n : nodes_) {
        n.has_grad = false;
        n.grad = Matrix();
    }
    ensure_grad(id)(0, 0) = 1.0;
    for (int i = id; i >= 0; --i)
        if (nodes_[i].has_grad) propagate(i);
    // Unused parameters still report a (zero) gradient.
    for (const auto& [name, pid] : params_) ensure_grad(pid);
    ran_backward_ = true;
}

const Matrix& Tape::grad(NodeId id) const {
    const Node& n = nodes_[checked(id)];
    if (!ran_backward_ || !n.has_grad) throw Error("tape: gradient not available; run backward()");
    return n.grad;
}

Matrix Tape::grad_of(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end())
        throw UnknownParameterError("tape: unknown parameter '" + name + "'");
    return grad(it->second);
}

std::vector<Gradient> Tape::gradients(const std::vector<std::string>& names) const {
    std::vector<Gradient> out;
    out.reserve(names.size());
    for (const std::string& name : names) out.push_back({name, grad_of(name)});
    return out;
}

bool Tape::has_parameter(const std::string& name) const { return params_.count(name) > 0; }

}  // namespace attnlab
