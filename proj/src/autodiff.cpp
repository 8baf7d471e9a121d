#include "lerp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lerp/errors.hpp"

namespace lerp::ad {

namespace {

void require_rank(const Node* x, std::size_t rank, const char* op) {
  if (x->value.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank-" + std::to_string(rank) +
                         " input, got shape " + x->value.shape_str());
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Node* Tape::leaf(Tensor value) { return emplace(std::move(value), {}, nullptr); }

Node* Tape::emplace(Tensor value, std::vector<Node*> parents, std::function<void(Node&)> backward) {
  auto node = std::make_unique<Node>();
  node->grad = Tensor(value.shape());
  node->value = std::move(value);
  node->parents = std::move(parents);
  node->backward = std::move(backward);
  node->index = nodes_.size();
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

void Tape::backward(Node* loss) {
  if (loss == nullptr || loss->index >= nodes_.size() || nodes_[loss->index].get() != loss) {
    throw ContractError("backward: loss node is not on this tape");
  }
  if (loss->value.numel() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + loss->value.shape_str());
  }
  loss->grad.at(0) = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = *nodes_[i];
    if (n.backward) n.backward(n);
  }
}

// --- elementwise / shape ops ---------------------------------------------

Node* add(Tape& t, Node* a, Node* b) {
  if (!a->value.same_shape(b->value)) {
    throw DimensionError("add: shape " + a->value.shape_str() + " vs " + b->value.shape_str());
  }
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) += b->value.at(i);
  return t.emplace(std::move(out), {a, b}, [a, b](Node& self) {
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      a->grad.at(i) += self.grad.at(i);
      b->grad.at(i) += self.grad.at(i);
    }
  });
}

Node* mul(Tape& t, Node* a, Node* b) {
  if (!a->value.same_shape(b->value)) {
    throw DimensionError("mul: shape " + a->value.shape_str() + " vs " + b->value.shape_str());
  }
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) *= b->value.at(i);
  return t.emplace(std::move(out), {a, b}, [a, b](Node& self) {
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      a->grad.at(i) += self.grad.at(i) * b->value.at(i);
      b->grad.at(i) += self.grad.at(i) * a->value.at(i);
    }
  });
}

Node* scale(Tape& t, Node* x, double c) {
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) *= c;
  return t.emplace(std::move(out), {x}, [x, c](Node& self) {
    for (std::size_t i = 0; i < self.grad.numel(); ++i) x->grad.at(i) += c * self.grad.at(i);
  });
}

Node* relu(Tape& t, Node* x) {
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = std::max(0.0, out.at(i));
  return t.emplace(std::move(out), {x}, [x](Node& self) {
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      if (x->value.at(i) > 0.0) x->grad.at(i) += self.grad.at(i);
    }
  });
}

Node* sigmoid(Tape& t, Node* x) {
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = stable_sigmoid(out.at(i));
  return t.emplace(std::move(out), {x}, [x](Node& self) {
    for (std::size_t i = 0; i < self.grad.numel(); ++i) {
      double y = self.value.at(i);
      x->grad.at(i) += self.grad.at(i) * y * (1.0 - y);
    }
  });
}

Node* concat(Tape& t, Node* a, Node* b) {
  if (a->value.rank() != 1 || b->value.rank() != 1) {
    throw DimensionError("concat: expects two rank-1 inputs, got " + a->value.shape_str() +
                         " and " + b->value.shape_str());
  }
  std::size_t p = a->value.numel(), q = b->value.numel();
  Tensor out({p + q});
  for (std::size_t i = 0; i < p; ++i) out.at(i) = a->value.at(i);
  for (std::size_t i = 0; i < q; ++i) out.at(p + i) = b->value.at(i);
  return t.emplace(std::move(out), {a, b}, [a, b, p, q](Node& self) {
    for (std::size_t i = 0; i < p; ++i) a->grad.at(i) += self.grad.at(i);
    for (std::size_t i = 0; i < q; ++i) b->grad.at(i) += self.grad.at(p + i);
  });
}

Node* reshape(Tape& t, Node* x, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  if (n != x->value.numel()) {
    throw DimensionError("reshape: cannot view " + x->value.shape_str() + " as " +
                         shape_str(shape));
  }
  Tensor out = Tensor::from(std::move(shape), x->value.values());
  return t.emplace(std::move(out), {x}, [x](Node& self) {
    for (std::size_t i = 0; i < self.grad.numel(); ++i) x->grad.at(i) += self.grad.at(i);
  });
}

// --- linear algebra -------------------------------------------------------

Node* matmul(Tape& t, Node* a, Node* b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t p = a->value.dim(0), q = a->value.dim(1);
  const std::size_t q2 = b->value.dim(0), r = b->value.dim(1);
  if (q != q2) {
    throw DimensionError("matmul: inner dimensions differ, " + a->value.shape_str() + " · " +
                         b->value.shape_str());
  }
  Tensor out({p, r});
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t k = 0; k < q; ++k) {
      const double av = a->value.at(i, k);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < r; ++j) out.at(i, j) += av * b->value.at(k, j);
    }
  return t.emplace(std::move(out), {a, b}, [a, b, p, q, r](Node& self) {
    // dA = dC·Bᵀ, dB = Aᵀ·dC
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        const double g = self.grad.at(i, j);
        if (g == 0.0) continue;
        for (std::size_t k = 0; k < q; ++k) {
          a->grad.at(i, k) += g * b->value.at(k, j);
          b->grad.at(k, j) += g * a->value.at(i, k);
        }
      }
  });
}

Node* matvec(Tape& t, Node* a, Node* x) {
  require_rank(a, 2, "matvec");
  require_rank(x, 1, "matvec");
  const std::size_t p = a->value.dim(0), q = a->value.dim(1);
  if (q != x->value.numel()) {
    throw DimensionError("matvec: " + a->value.shape_str() + " · " + x->value.shape_str());
  }
  Tensor out({p});
  for (std::size_t i = 0; i < p; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < q; ++j) s += a->value.at(i, j) * x->value.at(j);
    out.at(i) = s;
  }
  return t.emplace(std::move(out), {a, x}, [a, x, p, q](Node& self) {
    for (std::size_t i = 0; i < p; ++i) {
      const double g = self.grad.at(i);
      if (g == 0.0) continue;
      for (std::size_t j = 0; j < q; ++j) {
        a->grad.at(i, j) += g * x->value.at(j);
        x->grad.at(j) += g * a->value.at(i, j);
      }
    }
  });
}

Node* transpose(Tape& t, Node* x) {
  require_rank(x, 2, "transpose");
  const std::size_t p = x->value.dim(0), q = x->value.dim(1);
  Tensor out({q, p});
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) out.at(j, i) = x->value.at(i, j);
  return t.emplace(std::move(out), {x}, [x, p, q](Node& self) {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) x->grad.at(i, j) += self.grad.at(j, i);
  });
}

Node* add_col_bias(Tape& t, Node* x, Node* b) {
  require_rank(x, 2, "add_col_bias");
  require_rank(b, 1, "add_col_bias");
  const std::size_t r = x->value.dim(0), c = x->value.dim(1);
  if (b->value.numel() != r) {
    throw DimensionError("add_col_bias: bias " + b->value.shape_str() + " vs rows of " +
                         x->value.shape_str());
  }
  Tensor out = x->value;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += b->value.at(i);
  return t.emplace(std::move(out), {x, b}, [x, b, r, c](Node& self) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double g = self.grad.at(i, j);
        x->grad.at(i, j) += g;
        b->grad.at(i) += g;
      }
  });
}

// --- reductions -------------------------------------------------------------

Node* sum_all(Tape& t, Node* x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x->value.numel(); ++i) s += x->value.at(i);
  return t.emplace(Tensor::scalar(s), {x}, [x](Node& self) {
    const double g = self.grad.at(0);
    for (std::size_t i = 0; i < x->grad.numel(); ++i) x->grad.at(i) += g;
  });
}

Node* sum_axis(Tape& t, Node* x, int axis) {
  require_rank(x, 2, "sum_axis");
  const std::size_t r = x->value.dim(0), c = x->value.dim(1);
  if (axis == 0) {
    Tensor out({c});
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t i = 0; i < r; ++i) out.at(j) += x->value.at(i, j);
    return t.emplace(std::move(out), {x}, [x, r, c](Node& self) {
      for (std::size_t j = 0; j < c; ++j)
        for (std::size_t i = 0; i < r; ++i) x->grad.at(i, j) += self.grad.at(j);
    });
  }
  if (axis == 1) {
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.at(i) += x->value.at(i, j);
    return t.emplace(std::move(out), {x}, [x, r, c](Node& self) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) x->grad.at(i, j) += self.grad.at(i);
    });
  }
  throw ConfigError("sum_axis: axis must be 0 or 1, got " + std::to_string(axis));
}

Node* mean_scalars(Tape& t, const std::vector<Node*>& xs) {
  if (xs.empty()) throw ContractError("mean_scalars: empty input list");
  double s = 0.0;
  for (Node* x : xs) {
    if (x->value.numel() != 1) {
      throw DimensionError("mean_scalars: non-scalar input of shape " + x->value.shape_str());
    }
    s += x->value.at(0);
  }
  const double inv = 1.0 / static_cast<double>(xs.size());
  return t.emplace(Tensor::scalar(s * inv), std::vector<Node*>(xs), [xs, inv](Node& self) {
    const double g = self.grad.at(0) * inv;
    for (Node* x : xs) x->grad.at(0) += g;
  });
}

// --- softmax ---------------------------------------------------------------

namespace {

// Softmax over one strided slice; max is subtracted first.
void softmax_slice(const Tensor& in, Tensor& out, std::size_t base, std::size_t stride,
                   std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, in.at(base + i * stride));
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = std::exp(in.at(base + i * stride) - m);
    out.at(base + i * stride) = e;
    z += e;
  }
  for (std::size_t i = 0; i < n; ++i) out.at(base + i * stride) /= z;
}

// dx_i = y_i (dy_i − Σ_k dy_k y_k) over one slice.
void softmax_slice_backward(const Tensor& y, const Tensor& dy, Tensor& dx, std::size_t base,
                            std::size_t stride, std::size_t n) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    dot += dy.at(base + i * stride) * y.at(base + i * stride);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = base + i * stride;
    dx.at(k) += y.at(k) * (dy.at(k) - dot);
  }
}

}  // namespace

Node* softmax(Tape& t, Node* x, int axis) {
  if (x->value.rank() == 1) {
    Tensor out(x->value.shape());
    softmax_slice(x->value, out, 0, 1, x->value.numel());
    return t.emplace(std::move(out), {x}, [x](Node& self) {
      softmax_slice_backward(self.value, self.grad, x->grad, 0, 1, self.value.numel());
    });
  }
  require_rank(x, 2, "softmax");
  const std::size_t r = x->value.dim(0), c = x->value.dim(1);
  Tensor out(x->value.shape());
  if (axis == 0) {
    for (std::size_t j = 0; j < c; ++j) softmax_slice(x->value, out, j, c, r);
    return t.emplace(std::move(out), {x}, [x, r, c](Node& self) {
      for (std::size_t j = 0; j < c; ++j)
        softmax_slice_backward(self.value, self.grad, x->grad, j, c, r);
    });
  }
  if (axis == 1) {
    for (std::size_t i = 0; i < r; ++i) softmax_slice(x->value, out, i * c, 1, c);
    return t.emplace(std::move(out), {x}, [x, r, c](Node& self) {
      for (std::size_t i = 0; i < r; ++i)
        softmax_slice_backward(self.value, self.grad, x->grad, i * c, 1, c);
    });
  }
  throw ConfigError("softmax: axis must be 0 or 1, got " + std::to_string(axis));
}

Node* masked_softmax(Tape& t, Node* x, const std::vector<std::uint8_t>& keep) {
  require_rank(x, 1, "masked_softmax");
  const std::size_t n = x->value.numel();
  if (keep.size() != n) {
    throw DimensionError("masked_softmax: mask size " + std::to_string(keep.size()) +
                         " vs input " + x->value.shape_str());
  }
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) m = std::max(m, x->value.at(i));
  if (!std::isfinite(m)) throw DataError("masked_softmax: all positions are masked out");
  Tensor out({n});
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    double e = std::exp(x->value.at(i) - m);
    out.at(i) = e;
    z += e;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.at(i) /= z;
  return t.emplace(std::move(out), {x}, [x, keep, n](Node& self) {
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (keep[i]) dot += self.grad.at(i) * self.value.at(i);
    for (std::size_t i = 0; i < n; ++i)
      if (keep[i]) x->grad.at(i) += self.value.at(i) * (self.grad.at(i) - dot);
  });
}

// --- convolution / pooling ---------------------------------------------------

Node* conv1d(Tape& t, Node* x, Node* kernel, Node* bias) {
  require_rank(x, 2, "conv1d");
  require_rank(kernel, 3, "conv1d");
  require_rank(bias, 1, "conv1d");
  const std::size_t c_in = x->value.dim(0), len = x->value.dim(1);
  const std::size_t c_out = kernel->value.dim(0), kc = kernel->value.dim(1),
                    k1 = kernel->value.dim(2);
  if (k1 % 2 == 0) throw ConfigError("conv1d: kernel width must be odd, got " + std::to_string(k1));
  if (kc != c_in) {
    throw DimensionError("conv1d: kernel " + kernel->value.shape_str() + " vs input " +
                         x->value.shape_str());
  }
  if (bias->value.numel() != c_out) {
    throw DimensionError("conv1d: bias " + bias->value.shape_str() + " vs kernel " +
                         kernel->value.shape_str());
  }
  const std::size_t pad = (k1 - 1) / 2;
  // Cross-correlation (no kernel flip), zero same-padding.
  Tensor out({c_out, len});
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t i = 0; i < len; ++i) {
      double s = bias->value.at(o);
      for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t tap = 0; tap < k1; ++tap) {
          const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i + tap) -
                                   static_cast<std::ptrdiff_t>(pad);
          if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
          s += kernel->value.at(o, c, tap) * x->value.at(c, static_cast<std::size_t>(j));
        }
      out.at(o, i) = s;
    }
  return t.emplace(std::move(out), {x, kernel, bias},
                   [x, kernel, bias, c_in, c_out, len, k1, pad](Node& self) {
    for (std::size_t o = 0; o < c_out; ++o)
      for (std::size_t i = 0; i < len; ++i) {
        const double g = self.grad.at(o, i);
        if (g == 0.0) continue;
        bias->grad.at(o) += g;
        for (std::size_t c = 0; c < c_in; ++c)
          for (std::size_t tap = 0; tap < k1; ++tap) {
            const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i + tap) -
                                     static_cast<std::ptrdiff_t>(pad);
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
            kernel->grad.at(o, c, tap) += g * x->value.at(c, static_cast<std::size_t>(j));
            x->grad.at(c, static_cast<std::size_t>(j)) += g * kernel->value.at(o, c, tap);
          }
      }
  });
}

Node* conv1d_depthwise_shared(Tape& t, Node* x, Node* kernel, Node* bias) {
  require_rank(x, 2, "conv1d_depthwise_shared");
  require_rank(kernel, 1, "conv1d_depthwise_shared");
  const std::size_t c_in = x->value.dim(0), len = x->value.dim(1);
  const std::size_t k1 = kernel->value.numel();
  if (k1 % 2 == 0) {
    throw ConfigError("conv1d_depthwise_shared: kernel width must be odd, got " +
                      std::to_string(k1));
  }
  if (bias->value.numel() != 1) {
    throw DimensionError("conv1d_depthwise_shared: bias must be scalar, got " +
                         bias->value.shape_str());
  }
  const std::size_t pad = (k1 - 1) / 2;
  Tensor out({c_in, len});
  for (std::size_t c = 0; c < c_in; ++c)
    for (std::size_t i = 0; i < len; ++i) {
      double s = bias->value.at(0);
      for (std::size_t tap = 0; tap < k1; ++tap) {
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i + tap) -
                                 static_cast<std::ptrdiff_t>(pad);
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
        s += kernel->value.at(tap) * x->value.at(c, static_cast<std::size_t>(j));
      }
      out.at(c, i) = s;
    }
  return t.emplace(std::move(out), {x, kernel, bias},
                   [x, kernel, bias, c_in, len, k1, pad](Node& self) {
    for (std::size_t c = 0; c < c_in; ++c)
      for (std::size_t i = 0; i < len; ++i) {
        const double g = self.grad.at(c, i);
        if (g == 0.0) continue;
        bias->grad.at(0) += g;
        for (std::size_t tap = 0; tap < k1; ++tap) {
          const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i + tap) -
                                   static_cast<std::ptrdiff_t>(pad);
          if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
          kernel->grad.at(tap) += g * x->value.at(c, static_cast<std::size_t>(j));
          x->grad.at(c, static_cast<std::size_t>(j)) += g * kernel->value.at(tap);
        }
      }
  });
}

Node* maxpool_axis(Tape& t, Node* x, int axis, std::size_t window, std::size_t stride,
                   bool same_pad) {
  require_rank(x, 2, "maxpool_axis");
  if (axis != 0 && axis != 1) {
    throw ConfigError("maxpool_axis: axis must be 0 or 1, got " + std::to_string(axis));
  }
  if (stride < 1) throw ConfigError("maxpool_axis: stride must be >= 1");
  if (window < 1) throw ConfigError("maxpool_axis: window must be >= 1");
  const std::size_t rows = x->value.dim(0), cols = x->value.dim(1);
  const std::size_t len = (axis == 0) ? rows : cols;    // pooled axis
  const std::size_t keepn = (axis == 0) ? cols : rows;  // untouched axis
  if (window > len) {
    throw ConfigError("maxpool_axis: window " + std::to_string(window) + " exceeds axis length " +
                      std::to_string(len));
  }
  std::size_t out_len, pad_left = 0;
  if (same_pad) {
    out_len = (len + stride - 1) / stride;
    const std::size_t total_pad = (out_len - 1) * stride + window >= len
                                      ? (out_len - 1) * stride + window - len
                                      : 0;
    pad_left = total_pad / 2;
  } else {
    out_len = (len - window) / stride + 1;
  }

  auto in_at = [&](std::size_t a, std::size_t k) {  // a on pooled axis, k on kept axis
    return (axis == 0) ? x->value.at(a, k) : x->value.at(k, a);
  };
  Tensor out(axis == 0 ? std::vector<std::size_t>{out_len, cols}
                       : std::vector<std::size_t>{rows, out_len});
  // Flat input index of each output's argmax; ties take the lowest index.
  std::vector<std::size_t> argmax(out.numel());
  for (std::size_t o = 0; o < out_len; ++o) {
    const std::ptrdiff_t start0 = static_cast<std::ptrdiff_t>(o * stride) -
                                  static_cast<std::ptrdiff_t>(pad_left);
    const std::ptrdiff_t stop0 = start0 + static_cast<std::ptrdiff_t>(window);
    const std::size_t start = start0 < 0 ? 0 : static_cast<std::size_t>(start0);
    const std::size_t stop =
        stop0 > static_cast<std::ptrdiff_t>(len) ? len : static_cast<std::size_t>(stop0);
    for (std::size_t k = 0; k < keepn; ++k) {
      double best = in_at(start, k);
      std::size_t best_a = start;
      for (std::size_t a = start + 1; a < stop; ++a) {
        if (in_at(a, k) > best) {
          best = in_at(a, k);
          best_a = a;
        }
      }
      if (axis == 0) {
        out.at(o, k) = best;
        argmax[o * cols + k] = best_a * cols + k;
      } else {
        out.at(k, o) = best;
        argmax[k * out_len + o] = k * cols + best_a;
      }
    }
  }
  return t.emplace(std::move(out), {x}, [x, argmax = std::move(argmax)](Node& self) {
    for (std::size_t i = 0; i < self.grad.numel(); ++i)
      x->grad.values()[argmax[i]] += self.grad.at(i);
  });
}

// --- masking -------------------------------------------------------------------

Node* mask_rows(Tape& t, Node* x, const std::vector<std::uint8_t>& keep) {
  require_rank(x, 2, "mask_rows");
  const std::size_t r = x->value.dim(0), c = x->value.dim(1);
  if (keep.size() != r) {
    throw DimensionError("mask_rows: mask size " + std::to_string(keep.size()) + " vs " +
                         x->value.shape_str());
  }
  Tensor out = x->value;
  for (std::size_t i = 0; i < r; ++i)
    if (!keep[i])
      for (std::size_t j = 0; j < c; ++j) out.at(i, j) = 0.0;
  return t.emplace(std::move(out), {x}, [x, keep, r, c](Node& self) {
    for (std::size_t i = 0; i < r; ++i)
      if (keep[i])
        for (std::size_t j = 0; j < c; ++j) x->grad.at(i, j) += self.grad.at(i, j);
  });
}

Node* mask_cols(Tape& t, Node* x, const std::vector<std::uint8_t>& keep) {
  require_rank(x, 2, "mask_cols");
  const std::size_t r = x->value.dim(0), c = x->value.dim(1);
  if (keep.size() != c) {
    throw DimensionError("mask_cols: mask size " + std::to_string(keep.size()) + " vs " +
                         x->value.shape_str());
  }
  Tensor out = x->value;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (!keep[j]) out.at(i, j) = 0.0;
  return t.emplace(std::move(out), {x}, [x, keep, r, c](Node& self) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        if (keep[j]) x->grad.at(i, j) += self.grad.at(i, j);
  });
}

}  // namespace lerp::ad
