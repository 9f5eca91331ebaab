#include "pwinr/tape.hpp"

#include <string>
#include <utility>

#include "pwinr/common.hpp"
#include "pwinr/kernels.hpp"

namespace pwinr {

template <typename T>
typename Tape<T>::NodeId Tape<T>::push(Node node, const char* what) {
  ensure_finite(node.value, what);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node_at(NodeId id) const {
  if (id >= nodes_.size()) throw ContractError("tape node id out of range");
  return nodes_[id];
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  n.needs_grad = false;
  return push(std::move(n), "constant");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::parameter(Tensor<T> value) {
  Node n;
  n.op = Op::parameter;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n), "parameter");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::affine(NodeId x, NodeId w, NodeId b) {
  const Node& nx = node_at(x);
  const Node& nw = node_at(w);
  const Node& nb = node_at(b);
  if (nx.value.rank() != 2 || nw.value.rank() != 2 || nb.value.rank() != 1)
    throw DimensionError("affine expects matrix inputs and a vector bias");
  const std::size_t n = nx.value.rows(), din = nx.value.cols(), dout = nw.value.cols();
  if (nw.value.rows() != din || nb.value.extent(0) != dout)
    throw DimensionError("affine shape mismatch");

  Node out;
  out.op = Op::affine;
  out.in[0] = x;
  out.in[1] = w;
  out.in[2] = b;
  out.needs_grad = nx.needs_grad || nw.needs_grad || nb.needs_grad;
  out.value = Tensor<T>::matrix(n, dout);
  kernels::affine(nx.value.data(), nw.value.data(), nb.value.data(), out.value.data(), n,
                  din, dout);
  return push(std::move(out), "affine");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::relu(NodeId x) {
  const Node& nx = node_at(x);
  Node out;
  out.op = Op::relu;
  out.in[0] = x;
  out.needs_grad = nx.needs_grad;
  out.value = Tensor<T>(nx.value.shape());
  kernels::relu(nx.value.data(), out.value.data(), nx.value.numel());
  return push(std::move(out), "relu");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::concat_cols(NodeId a, NodeId b) {
  const Node& na = node_at(a);
  const Node& nb = node_at(b);
  if (na.value.rank() != 2 || nb.value.rank() != 2 || na.value.rows() != nb.value.rows())
    throw DimensionError("concat_cols expects matrices with equal row counts");
  const std::size_t n = na.value.rows(), ca = na.value.cols(), cb = nb.value.cols();

  Node out;
  out.op = Op::concat_cols;
  out.in[0] = a;
  out.in[1] = b;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor<T>::matrix(n, ca + cb);
  for (std::size_t r = 0; r < n; ++r) {
    T* dst = out.value.data() + r * (ca + cb);
    const T* pa = na.value.data() + r * ca;
    const T* pb = nb.value.data() + r * cb;
    for (std::size_t c = 0; c < ca; ++c) dst[c] = pa[c];
    for (std::size_t c = 0; c < cb; ++c) dst[ca + c] = pb[c];
  }
  return push(std::move(out), "concat_cols");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::conv2d_separable(NodeId x, std::vector<T> vtaps,
                                                   std::vector<T> htaps) {
  const Node& nx = node_at(x);
  if (nx.value.rank() != 2) throw DimensionError("conv2d_separable expects a matrix");
  if (vtaps.empty() || htaps.empty())
    throw DimensionError("conv2d_separable expects non-empty taps");
  const std::size_t h = nx.value.rows(), w = nx.value.cols();
  if (h < vtaps.size() / 2 + 1 || w < htaps.size() / 2 + 1)
    throw DimensionError("image smaller than kernel radius+1");

  Node out;
  out.op = Op::conv2d_separable;
  out.in[0] = x;
  out.needs_grad = nx.needs_grad;
  out.vtaps = std::move(vtaps);
  out.htaps = std::move(htaps);
  out.value = Tensor<T>::matrix(h, w);
  Tensor<T> tmp = Tensor<T>::matrix(h, w);
  kernels::conv_rows(nx.value.data(), tmp.data(), h, w, out.vtaps.data(), out.vtaps.size());
  kernels::conv_cols(tmp.data(), out.value.data(), h, w, out.htaps.data(),
                     out.htaps.size());
  return push(std::move(out), "conv2d_separable");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::add(NodeId a, NodeId b) {
  const Node& na = node_at(a);
  const Node& nb = node_at(b);
  if (!na.value.same_shape(nb.value)) throw DimensionError("add shape mismatch");
  Node out;
  out.op = Op::add;
  out.in[0] = a;
  out.in[1] = b;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor<T>(na.value.shape());
  kernels::binary(kernels::BinaryOp::add, na.value.data(), nb.value.data(),
                  out.value.data(), out.value.numel());
  return push(std::move(out), "add");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::sub(NodeId a, NodeId b) {
  const Node& na = node_at(a);
  const Node& nb = node_at(b);
  if (!na.value.same_shape(nb.value)) throw DimensionError("sub shape mismatch");
  Node out;
  out.op = Op::sub;
  out.in[0] = a;
  out.in[1] = b;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor<T>(na.value.shape());
  kernels::binary(kernels::BinaryOp::sub, na.value.data(), nb.value.data(),
                  out.value.data(), out.value.numel());
  return push(std::move(out), "sub");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::mul(NodeId a, NodeId b) {
  const Node& na = node_at(a);
  const Node& nb = node_at(b);
  if (!na.value.same_shape(nb.value)) throw DimensionError("mul shape mismatch");
  Node out;
  out.op = Op::mul;
  out.in[0] = a;
  out.in[1] = b;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor<T>(na.value.shape());
  kernels::binary(kernels::BinaryOp::mul, na.value.data(), nb.value.data(),
                  out.value.data(), out.value.numel());
  return push(std::move(out), "mul");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::div(NodeId a, NodeId b) {
  const Node& na = node_at(a);
  const Node& nb = node_at(b);
  if (!na.value.same_shape(nb.value)) throw DimensionError("div shape mismatch");
  Node out;
  out.op = Op::div;
  out.in[0] = a;
  out.in[1] = b;
  out.needs_grad = na.needs_grad || nb.needs_grad;
  out.value = Tensor<T>(na.value.shape());
  kernels::binary(kernels::BinaryOp::div, na.value.data(), nb.value.data(),
                  out.value.data(), out.value.numel());
  return push(std::move(out), "div");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::scale(NodeId x, T alpha) {
  const Node& nx = node_at(x);
  Node out;
  out.op = Op::scale;
  out.in[0] = x;
  out.alpha = alpha;
  out.needs_grad = nx.needs_grad;
  out.value = Tensor<T>(nx.value.shape());
  kernels::scale_add(nx.value.data(), alpha, T(0), out.value.data(), out.value.numel());
  return push(std::move(out), "scale");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::add_scalar(NodeId x, T beta) {
  const Node& nx = node_at(x);
  Node out;
  out.op = Op::add_scalar;
  out.in[0] = x;
  out.alpha = beta;
  out.needs_grad = nx.needs_grad;
  out.value = Tensor<T>(nx.value.shape());
  kernels::scale_add(nx.value.data(), T(1), beta, out.value.data(), out.value.numel());
  return push(std::move(out), "add_scalar");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::crop_rows(NodeId x, std::size_t r0, std::size_t r1) {
  const Node& nx = node_at(x);
  if (nx.value.rank() != 2) throw DimensionError("crop_rows expects a matrix");
  if (r0 >= r1 || r1 > nx.value.rows()) throw ContractError("crop_rows range invalid");
  const std::size_t w = nx.value.cols();

  Node out;
  out.op = Op::crop_rows;
  out.in[0] = x;
  out.r0 = r0;
  out.r1 = r1;
  out.needs_grad = nx.needs_grad;
  out.value = Tensor<T>::matrix(r1 - r0, w);
  const T* src = nx.value.data() + r0 * w;
  for (std::size_t i = 0; i < (r1 - r0) * w; ++i) out.value.data()[i] = src[i];
  return push(std::move(out), "crop_rows");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::reshape(NodeId x, std::size_t rows, std::size_t cols) {
  const Node& nx = node_at(x);
  if (rows * cols != nx.value.numel())
    throw DimensionError("reshape changes element count");
  Node out;
  out.op = Op::reshape;
  out.in[0] = x;
  out.needs_grad = nx.needs_grad;
  out.value = nx.value.reshaped({rows, cols});
  return push(std::move(out), "reshape");
}

template <typename T>
typename Tape<T>::NodeId Tape<T>::mean_all(NodeId x) {
  const Node& nx = node_at(x);
  if (nx.value.numel() == 0) throw DimensionError("mean_all of empty tensor");
  Node out;
  out.op = Op::mean_all;
  out.in[0] = x;
  out.needs_grad = nx.needs_grad;
  out.value = Tensor<T>({1});
  out.value.data()[0] =
      kernels::reduce_sum(nx.value.data(), nx.value.numel()) / static_cast<T>(nx.value.numel());
  return push(std::move(out), "mean_all");
}

template <typename T>
const Tensor<T>& Tape<T>::value(NodeId id) const {
  return node_at(id).value;
}

template <typename T>
bool Tape<T>::needs_grad(NodeId id) const {
  return node_at(id).needs_grad;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(NodeId id) const {
  const Node& n = node_at(id);
  if (!n.needs_grad) throw ContractError("node does not carry gradients");
  if (n.grad.numel() == 0) throw ContractError("backward() has not run on this tape");
  return n.grad;
}

template <typename T>
void Tape<T>::backward(NodeId loss) {
  const Node& ln = node_at(loss);
  if (ln.value.numel() != 1) throw ContractError("backward target must be scalar");

  // Fresh zero gradients for every gradient-carrying node, so grads from a
  // previous backward() never leak into this one.
  for (Node& n : nodes_) {
    if (n.needs_grad)
      n.grad = Tensor<T>(n.value.shape(), T(0));
    else
      n.grad = Tensor<T>();
  }
  if (!nodes_[loss].needs_grad) return;  // loss independent of all parameters

  // Mark the nodes the loss actually depends on; backward skips the rest.
  std::vector<char> reach(nodes_.size(), 0);
  reach[loss] = 1;
  for (NodeId id = loss + 1; id-- > 0;) {
    if (!reach[id]) continue;
    const Node& n = nodes_[id];
    const int arity = [&] {
      switch (n.op) {
        case Op::constant:
        case Op::parameter:
          return 0;
        case Op::affine:
          return 3;
        case Op::concat_cols:
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
          return 2;
        default:
          return 1;
      }
    }();
    for (int i = 0; i < arity; ++i)
      if (nodes_[n.in[i]].needs_grad) reach[n.in[i]] = 1;
  }

  nodes_[loss].grad.data()[0] = T(1);

  for (NodeId id = loss + 1; id-- > 0;) {
    if (!reach[id]) continue;
    Node& n = nodes_[id];
    const T* gy = n.grad.data();
    const std::size_t ny = n.grad.numel();

    switch (n.op) {
      case Op::constant:
      case Op::parameter:
        break;

      case Op::affine: {
        Node& nx = nodes_[n.in[0]];
        Node& nw = nodes_[n.in[1]];
        Node& nb = nodes_[n.in[2]];
        const std::size_t rows = nx.value.rows(), din = nx.value.cols(),
                          dout = nw.value.cols();
        if (nx.needs_grad)
          kernels::affine_grad_x(gy, nw.value.data(), nx.grad.data(), rows, din, dout);
        if (nw.needs_grad)
          kernels::affine_grad_w(nx.value.data(), gy, nw.grad.data(), rows, din, dout);
        if (nb.needs_grad) kernels::affine_grad_b(gy, nb.grad.data(), rows, dout);
        break;
      }

      case Op::relu: {
        Node& nx = nodes_[n.in[0]];
        if (nx.needs_grad)
          kernels::relu_grad(nx.value.data(), gy, nx.grad.data(), nx.value.numel());
        break;
      }

      case Op::concat_cols: {
        Node& na = nodes_[n.in[0]];
        Node& nb = nodes_[n.in[1]];
        const std::size_t rows = na.value.rows(), ca = na.value.cols(),
                          cb = nb.value.cols();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* grow = gy + r * (ca + cb);
          if (na.needs_grad) {
            T* ga = na.grad.data() + r * ca;
            for (std::size_t c = 0; c < ca; ++c) ga[c] += grow[c];
          }
          if (nb.needs_grad) {
            T* gb = nb.grad.data() + r * cb;
            for (std::size_t c = 0; c < cb; ++c) gb[c] += grow[ca + c];
          }
        }
        break;
      }

      case Op::conv2d_separable: {
        Node& nx = nodes_[n.in[0]];
        if (nx.needs_grad) {
          const std::size_t h = nx.value.rows(), w = nx.value.cols();
          Tensor<T> gtmp = Tensor<T>::matrix(h, w);  // zero-initialized
          kernels::conv_cols_adj(gy, gtmp.data(), h, w, n.htaps.data(), n.htaps.size());
          kernels::conv_rows_adj(gtmp.data(), nx.grad.data(), h, w, n.vtaps.data(),
                                 n.vtaps.size());
        }
        break;
      }

      case Op::add: {
        Node& na = nodes_[n.in[0]];
        Node& nb = nodes_[n.in[1]];
        if (na.needs_grad) kernels::axpy(gy, T(1), na.grad.data(), ny);
        if (nb.needs_grad) kernels::axpy(gy, T(1), nb.grad.data(), ny);
        break;
      }

      case Op::sub: {
        Node& na = nodes_[n.in[0]];
        Node& nb = nodes_[n.in[1]];
        if (na.needs_grad) kernels::axpy(gy, T(1), na.grad.data(), ny);
        if (nb.needs_grad) kernels::axpy(gy, T(-1), nb.grad.data(), ny);
        break;
      }

      case Op::mul: {
        Node& na = nodes_[n.in[0]];
        Node& nb = nodes_[n.in[1]];
        if (na.needs_grad) kernels::mul_accum(gy, nb.value.data(), na.grad.data(), ny);
        if (nb.needs_grad) kernels::mul_accum(gy, na.value.data(), nb.grad.data(), ny);
        break;
      }

      case Op::div: {
        Node& na = nodes_[n.in[0]];
        Node& nb = nodes_[n.in[1]];
        if (na.needs_grad)
          kernels::div_grad_num(gy, nb.value.data(), na.grad.data(), ny);
        if (nb.needs_grad)
          kernels::div_grad_den(gy, n.value.data(), nb.value.data(), nb.grad.data(), ny);
        break;
      }

      case Op::scale: {
        Node& nx = nodes_[n.in[0]];
        if (nx.needs_grad) kernels::axpy(gy, n.alpha, nx.grad.data(), ny);
        break;
      }

      case Op::add_scalar: {
        Node& nx = nodes_[n.in[0]];
        if (nx.needs_grad) kernels::axpy(gy, T(1), nx.grad.data(), ny);
        break;
      }

      case Op::crop_rows: {
        Node& nx = nodes_[n.in[0]];
        if (nx.needs_grad) {
          const std::size_t w = nx.value.cols();
          kernels::axpy(gy, T(1), nx.grad.data() + n.r0 * w, (n.r1 - n.r0) * w);
        }
        break;
      }

      case Op::reshape: {
        Node& nx = nodes_[n.in[0]];
        if (nx.needs_grad) kernels::axpy(gy, T(1), nx.grad.data(), ny);
        break;
      }

      case Op::mean_all: {
        Node& nx = nodes_[n.in[0]];
        if (nx.needs_grad) {
          const T c = gy[0] / static_cast<T>(nx.value.numel());
          T* gx = nx.grad.data();
          for (std::size_t i = 0; i < nx.value.numel(); ++i) gx[i] += c;
        }
        break;
      }
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace pwinr
