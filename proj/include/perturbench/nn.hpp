#ifndef PERTURBENCH_NN_HPP
#define PERTURBENCH_NN_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "perturbench/rng.hpp"

// Small layer kit with explicit forward/backward passes. Layers cache what
// their backward pass needs, so a layer instance serves one computation at a
// time. Parameter gradients accumulate into the *_grad members until
// zero_grads().
namespace perturbench::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Matrix<Scalar> random_matrix(Eigen::Index rows, Eigen::Index cols, Scalar scale, Rng& rng) {
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = static_cast<Scalar>(rng.normal()) * scale;
  return m;
}

// y = W x + b
template <typename Scalar>
struct Dense {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;
  Matrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;
  Vector<Scalar> cached_input;

  void init(int out_dim, int in_dim, Rng& rng) {
    weight = random_matrix<Scalar>(out_dim, in_dim,
                                   std::sqrt(Scalar(2) / Scalar(in_dim)), rng);
    bias = Vector<Scalar>::Zero(out_dim);
    zero_grads();
  }
  void zero_grads() {
    weight_grad = Matrix<Scalar>::Zero(weight.rows(), weight.cols());
    bias_grad = Vector<Scalar>::Zero(bias.size());
  }
  Vector<Scalar> forward(const Vector<Scalar>& x) {
    cached_input = x;
    return weight * x + bias;
  }
  Vector<Scalar> backward(const Vector<Scalar>& grad_out) {
    weight_grad.noalias() += grad_out * cached_input.transpose();
    bias_grad += grad_out;
    return weight.transpose() * grad_out;
  }
};

// Column-wise affine map: applies the same Dense to every column (frame).
template <typename Scalar>
struct FrameDense {
  Matrix<Scalar> weight;
  Vector<Scalar> bias;
  Matrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;
  Matrix<Scalar> cached_input;

  void init(int out_dim, int in_dim, Rng& rng) {
    weight = random_matrix<Scalar>(out_dim, in_dim,
                                   std::sqrt(Scalar(2) / Scalar(in_dim)), rng);
    bias = Vector<Scalar>::Zero(out_dim);
    zero_grads();
  }
  void zero_grads() {
    weight_grad = Matrix<Scalar>::Zero(weight.rows(), weight.cols());
    bias_grad = Vector<Scalar>::Zero(bias.size());
  }
  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    cached_input = x;
    return (weight * x).colwise() + bias;
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& grad_out) {
    weight_grad.noalias() += grad_out * cached_input.transpose();
    bias_grad += grad_out.rowwise().sum();
    return weight.transpose() * grad_out;
  }
};

// 1-d convolution over a (channels x length) signal, no padding.
// Implemented as an im2col matrix product.
template <typename Scalar>
struct Conv1d {
  int in_channels = 0, out_channels = 0, kernel = 0, stride = 1;
  Matrix<Scalar> weight;  // out_channels x (in_channels * kernel)
  Vector<Scalar> bias;
  Matrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;
  Matrix<Scalar> cached_cols;
  Eigen::Index cached_len = 0;

  void init(int out_ch, int in_ch, int k, int s, Rng& rng) {
    in_channels = in_ch;
    out_channels = out_ch;
    kernel = k;
    stride = s;
    weight = random_matrix<Scalar>(out_ch, in_ch * k,
                                   std::sqrt(Scalar(2) / Scalar(in_ch * k)), rng);
    bias = Vector<Scalar>::Zero(out_ch);
    zero_grads();
  }
  void zero_grads() {
    weight_grad = Matrix<Scalar>::Zero(weight.rows(), weight.cols());
    bias_grad = Vector<Scalar>::Zero(bias.size());
  }
  Eigen::Index output_length(Eigen::Index in_len) const {
    if (in_len < kernel)
      throw std::invalid_argument("conv1d: input shorter than kernel");
    return (in_len - kernel) / stride + 1;
  }
  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    const Eigen::Index out_len = output_length(x.cols());
    cached_len = x.cols();
    cached_cols.resize(static_cast<Eigen::Index>(in_channels) * kernel, out_len);
    for (Eigen::Index t = 0; t < out_len; ++t)
      for (int j = 0; j < kernel; ++j)
        cached_cols.col(t).segment(static_cast<Eigen::Index>(j) * in_channels, in_channels) =
            x.col(t * stride + j);
    return (weight * cached_cols).colwise() + bias;
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& grad_out) {
    weight_grad.noalias() += grad_out * cached_cols.transpose();
    bias_grad += grad_out.rowwise().sum();
    const Matrix<Scalar> grad_cols = weight.transpose() * grad_out;
    Matrix<Scalar> grad_x = Matrix<Scalar>::Zero(in_channels, cached_len);
    for (Eigen::Index t = 0; t < grad_out.cols(); ++t)
      for (int j = 0; j < kernel; ++j)
        grad_x.col(t * stride + j) +=
            grad_cols.col(t).segment(static_cast<Eigen::Index>(j) * in_channels, in_channels);
    return grad_x;
  }
};

// 2-d convolution over a (channels x (H*W)) image, no padding, square
// stride. Columns are row-major pixels.
template <typename Scalar>
struct Conv2d {
  int in_channels = 0, out_channels = 0, kernel = 0, stride = 1;
  int in_h = 0, in_w = 0;  // fixed input geometry
  Matrix<Scalar> weight;   // out_channels x (in_channels * kernel * kernel)
  Vector<Scalar> bias;
  Matrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;
  Matrix<Scalar> cached_cols;

  void init(int out_ch, int in_ch, int k, int s, int h, int w, Rng& rng) {
    in_channels = in_ch;
    out_channels = out_ch;
    kernel = k;
    stride = s;
    in_h = h;
    in_w = w;
    weight = random_matrix<Scalar>(
        out_ch, in_ch * k * k, std::sqrt(Scalar(2) / Scalar(in_ch * k * k)), rng);
    bias = Vector<Scalar>::Zero(out_ch);
    zero_grads();
  }
  void zero_grads() {
    weight_grad = Matrix<Scalar>::Zero(weight.rows(), weight.cols());
    bias_grad = Vector<Scalar>::Zero(bias.size());
  }
  int out_h() const { return (in_h - kernel) / stride + 1; }
  int out_w() const { return (in_w - kernel) / stride + 1; }

  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    if (x.rows() != in_channels || x.cols() != static_cast<Eigen::Index>(in_h) * in_w)
      throw std::invalid_argument("conv2d: bad input shape");
    const int oh = out_h(), ow = out_w();
    cached_cols.resize(static_cast<Eigen::Index>(in_channels) * kernel * kernel,
                       static_cast<Eigen::Index>(oh) * ow);
    Eigen::Index col = 0;
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c, ++col) {
        Eigen::Index row = 0;
        for (int kr = 0; kr < kernel; ++kr)
          for (int kc = 0; kc < kernel; ++kc) {
            const Eigen::Index pixel =
                static_cast<Eigen::Index>(r * stride + kr) * in_w + (c * stride + kc);
            cached_cols.col(col).segment(row, in_channels) = x.col(pixel);
            row += in_channels;
          }
      }
    }
    return (weight * cached_cols).colwise() + bias;
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& grad_out) {
    weight_grad.noalias() += grad_out * cached_cols.transpose();
    bias_grad += grad_out.rowwise().sum();
    const Matrix<Scalar> grad_cols = weight.transpose() * grad_out;
    Matrix<Scalar> grad_x =
        Matrix<Scalar>::Zero(in_channels, static_cast<Eigen::Index>(in_h) * in_w);
    const int oh = out_h(), ow = out_w();
    Eigen::Index col = 0;
    for (int r = 0; r < oh; ++r) {
      for (int c = 0; c < ow; ++c, ++col) {
        Eigen::Index row = 0;
        for (int kr = 0; kr < kernel; ++kr)
          for (int kc = 0; kc < kernel; ++kc) {
            const Eigen::Index pixel =
                static_cast<Eigen::Index>(r * stride + kr) * in_w + (c * stride + kc);
            grad_x.col(pixel) += grad_cols.col(col).segment(row, in_channels);
            row += in_channels;
          }
      }
    }
    return grad_x;
  }
};

// Elman recurrence over frame columns: h_t = tanh(W_ih u_t + W_hh h_{t-1} + b).
template <typename Scalar>
struct ElmanRnn {
  Matrix<Scalar> w_input, w_recur;
  Vector<Scalar> bias;
  Matrix<Scalar> w_input_grad, w_recur_grad;
  Vector<Scalar> bias_grad;
  Matrix<Scalar> cached_input, cached_hidden;

  void init(int hidden, int in_dim, Rng& rng) {
    w_input = random_matrix<Scalar>(hidden, in_dim,
                                    std::sqrt(Scalar(1) / Scalar(in_dim)), rng);
    w_recur = random_matrix<Scalar>(hidden, hidden,
                                    std::sqrt(Scalar(1) / Scalar(hidden)), rng);
    bias = Vector<Scalar>::Zero(hidden);
    zero_grads();
  }
  void zero_grads() {
    w_input_grad = Matrix<Scalar>::Zero(w_input.rows(), w_input.cols());
    w_recur_grad = Matrix<Scalar>::Zero(w_recur.rows(), w_recur.cols());
    bias_grad = Vector<Scalar>::Zero(bias.size());
  }
  Matrix<Scalar> forward(const Matrix<Scalar>& u) {
    const Eigen::Index frames = u.cols();
    const Eigen::Index hidden = w_recur.rows();
    cached_input = u;
    cached_hidden.resize(hidden, frames);
    Vector<Scalar> h = Vector<Scalar>::Zero(hidden);
    for (Eigen::Index t = 0; t < frames; ++t) {
      h = (w_input * u.col(t) + w_recur * h + bias).array().tanh();
      cached_hidden.col(t) = h;
    }
    return cached_hidden;
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& grad_hidden) {
    const Eigen::Index frames = cached_input.cols();
    Matrix<Scalar> grad_u(cached_input.rows(), frames);
    Vector<Scalar> carry = Vector<Scalar>::Zero(w_recur.rows());
    for (Eigen::Index t = frames - 1; t >= 0; --t) {
      const Vector<Scalar> h = cached_hidden.col(t);
      const Vector<Scalar> g =
          ((grad_hidden.col(t) + carry).array() * (Scalar(1) - h.array().square()))
              .matrix();
      w_input_grad.noalias() += g * cached_input.col(t).transpose();
      if (t > 0) w_recur_grad.noalias() += g * cached_hidden.col(t - 1).transpose();
      bias_grad += g;
      grad_u.col(t) = w_input.transpose() * g;
      carry = w_recur.transpose() * g;
    }
    return grad_u;
  }
};

template <typename Scalar>
struct Relu {
  Matrix<Scalar> cached_output;
  Matrix<Scalar> forward(const Matrix<Scalar>& x) {
    cached_output = x.cwiseMax(Scalar(0));
    return cached_output;
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& grad_out) const {
    return (cached_output.array() > Scalar(0))
        .select(grad_out, Matrix<Scalar>::Zero(grad_out.rows(), grad_out.cols()));
  }
};

// Inverted dropout on matrix entries. Identity when inactive.
template <typename Scalar>
struct Dropout {
  Scalar rate = Scalar(0);
  bool active = false;
  Matrix<Scalar> cached_mask;

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Rng& rng) {
    if (!active || rate <= Scalar(0)) {
      cached_mask.resize(0, 0);
      return x;
    }
    const Scalar keep = Scalar(1) - rate;
    cached_mask.resize(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        cached_mask(i, j) = rng.uniform() < static_cast<double>(rate)
                                ? Scalar(0)
                                : Scalar(1) / keep;
    return x.cwiseProduct(cached_mask);
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& grad_out) const {
    if (cached_mask.size() == 0) return grad_out;
    return grad_out.cwiseProduct(cached_mask);
  }
};

// Column-wise log-softmax: each column maps to log-probabilities.
template <typename Scalar>
Matrix<Scalar> log_softmax_columns(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Scalar m = logits.col(j).maxCoeff();
    const Scalar lse = m + std::log((logits.col(j).array() - m).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

// Backward of column-wise log-softmax given log-probs and upstream grads.
template <typename Scalar>
Matrix<Scalar> log_softmax_columns_backward(const Matrix<Scalar>& log_probs,
                                            const Matrix<Scalar>& grad_out) {
  Matrix<Scalar> grad(log_probs.rows(), log_probs.cols());
  for (Eigen::Index j = 0; j < log_probs.cols(); ++j) {
    const Scalar total = grad_out.col(j).sum();
    grad.col(j) =
        grad_out.col(j).array() - log_probs.col(j).array().exp() * total;
  }
  return grad;
}

template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  const Scalar m = logits.maxCoeff();
  Vector<Scalar> e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

}  // namespace perturbench::nn

#endif  // PERTURBENCH_NN_HPP
