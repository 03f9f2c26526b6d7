#include "cvsqi/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cvsqi/errors.hpp"

namespace cvsqi::nn {

namespace {

constexpr double kProbClamp = 1e-12;

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

void check_dense(const Tensor& x, const Tensor& W, const Tensor& b) {
    require(x.size() == W.cols, "dense: input has " + std::to_string(x.size()) + " elements, W is " +
                                    W.shape_string());
    require(b.size() == W.rows, "dense: bias " + b.shape_string() + " vs W " + W.shape_string());
}

void check_conv(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width, std::size_t stride) {
    require(width % 2 == 1, "conv: kernel width must be odd");
    require(stride >= 1, "conv: stride must be positive");
    require(x.rows >= 1, "conv: empty input");
    require(K.rows == width * x.cols,
            "conv: kernel " + K.shape_string() + " does not match input channels " + std::to_string(x.cols));
    require(b.size() == K.cols, "conv: bias " + b.shape_string() + " vs kernel " + K.shape_string());
}

}  // namespace

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

Tensor dense_forward(const Tensor& x, const Tensor& W, const Tensor& b) {
    check_dense(x, W, b);
    Tensor y(W.rows, 1);
    const double* xv = x.data.data();
    for (std::size_t r = 0; r < W.rows; ++r) {
        const double* w = &W.data[r * W.cols];
        double acc = b.data[r];
        for (std::size_t c = 0; c < W.cols; ++c) acc += w[c] * xv[c];
        y.data[r] = acc;
    }
    return y;
}

std::size_t conv_output_length(std::size_t length, std::size_t width, std::size_t stride) {
    const std::size_t pad = (width - 1) / 2;
    if (length + 2 * pad < width) return 0;
    return (length + 2 * pad - width) / stride + 1;
}

Tensor conv1d_forward(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width,
                      std::size_t stride) {
    check_conv(x, K, b, width, stride);
    const std::size_t cin = x.cols, cout = K.cols;
    const std::size_t out_len = conv_output_length(x.rows, width, stride);
    const long pad = static_cast<long>((width - 1) / 2);
    Tensor y(out_len, cout);
    for (std::size_t l = 0; l < out_len; ++l) {
        double* yrow = &y.data[l * cout];
        std::copy(b.data.begin(), b.data.end(), yrow);
        for (std::size_t t = 0; t < width; ++t) {
            const long pos = static_cast<long>(l * stride + t) - pad;
            if (pos < 0 || pos >= static_cast<long>(x.rows)) continue;
            const double* xrow = &x.data[static_cast<std::size_t>(pos) * cin];
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double xv = xrow[ci];
                const double* krow = &K.data[(t * cin + ci) * cout];
                for (std::size_t co = 0; co < cout; ++co) yrow[co] += xv * krow[co];
            }
        }
    }
    return y;
}

Tensor conv_transpose1d_forward(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width,
                                std::size_t stride, std::size_t out_length) {
    check_conv(x, K, b, width, stride);
    require(conv_output_length(out_length, width, stride) == x.rows,
            "conv_transpose: output length " + std::to_string(out_length) + " does not map onto input length " +
                std::to_string(x.rows));
    const std::size_t cin = x.cols, cout = K.cols;
    const long pad = static_cast<long>((width - 1) / 2);
    Tensor y(out_length, cout);
    for (std::size_t o = 0; o < out_length; ++o)
        std::copy(b.data.begin(), b.data.end(), &y.data[o * cout]);
    for (std::size_t l = 0; l < x.rows; ++l) {
        const double* xrow = &x.data[l * cin];
        for (std::size_t t = 0; t < width; ++t) {
            const long pos = static_cast<long>(l * stride + t) - pad;
            if (pos < 0 || pos >= static_cast<long>(out_length)) continue;
            double* yrow = &y.data[static_cast<std::size_t>(pos) * cout];
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double xv = xrow[ci];
                const double* krow = &K.data[(t * cin + ci) * cout];
                for (std::size_t co = 0; co < cout; ++co) yrow[co] += xv * krow[co];
            }
        }
    }
    return y;
}

Tensor maxpool1d(const Tensor& x) {
    require(x.rows >= 2, "maxpool: length must be at least 2");
    const std::size_t out_len = x.rows / 2;
    Tensor y(out_len, x.cols);
    for (std::size_t l = 0; l < out_len; ++l)
        for (std::size_t c = 0; c < x.cols; ++c)
            y(l, c) = std::max(x(2 * l, c), x(2 * l + 1, c));
    return y;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = sigmoid(v);
    return y;
}

double weighted_bce_value(double pred, double y, double zeta_pos, double zeta_neg) {
    const double p = std::clamp(pred, kProbClamp, 1.0 - kProbClamp);
    return -zeta_pos * y * std::log(p) - zeta_neg * (1.0 - y) * std::log(1.0 - p);
}

double kl_value(const Tensor& mu, const Tensor& sigma) {
    require(mu.size() == sigma.size(), "kl: mu and sigma differ in size");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double s = sigma.data[i];
        if (!(s > 0.0)) throw Error(ErrorCode::NonPositiveSigma, "sigma[" + std::to_string(i) + "] = " + std::to_string(s));
        acc += mu.data[i] * mu.data[i] + s * s - std::log(s * s) - 1.0;
    }
    return 0.5 * acc;
}

// ---------------------------------------------------------------------------
// Recorded ops
// ---------------------------------------------------------------------------
namespace ad {

Var dense(Graph& g, Var x, Var W, Var b) {
    Tensor y = dense_forward(g.value(x), g.value(W), g.value(b));
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        const Tensor& xv = gr.value(x);
        const Tensor& Wv = gr.value(W);
        const std::size_t rows = Wv.rows, cols = Wv.cols;
        {
            Tensor& dW = gr.grad(W);
            for (std::size_t r = 0; r < rows; ++r) {
                const double d = dy.data[r];
                if (d == 0.0) continue;
                double* dw = &dW.data[r * cols];
                for (std::size_t c = 0; c < cols; ++c) dw[c] += d * xv.data[c];
            }
        }
        {
            Tensor& db = gr.grad(b);
            for (std::size_t r = 0; r < rows; ++r) db.data[r] += dy.data[r];
        }
        {
            Tensor& dx = gr.grad(x);
            for (std::size_t r = 0; r < rows; ++r) {
                const double d = dy.data[r];
                if (d == 0.0) continue;
                const double* w = &Wv.data[r * cols];
                for (std::size_t c = 0; c < cols; ++c) dx.data[c] += d * w[c];
            }
        }
    });
}

Var conv1d(Graph& g, Var x, Var K, Var b, std::size_t width, std::size_t stride) {
    Tensor y = conv1d_forward(g.value(x), g.value(K), g.value(b), width, stride);
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        const Tensor& xv = gr.value(x);
        const Tensor& Kv = gr.value(K);
        Tensor& dx = gr.grad(x);
        Tensor& dK = gr.grad(K);
        Tensor& db = gr.grad(b);
        const std::size_t cin = xv.cols, cout = Kv.cols;
        const long pad = static_cast<long>((width - 1) / 2);
        for (std::size_t l = 0; l < dy.rows; ++l) {
            const double* dyrow = &dy.data[l * cout];
            for (std::size_t co = 0; co < cout; ++co) db.data[co] += dyrow[co];
            for (std::size_t t = 0; t < width; ++t) {
                const long pos = static_cast<long>(l * stride + t) - pad;
                if (pos < 0 || pos >= static_cast<long>(xv.rows)) continue;
                const std::size_t p = static_cast<std::size_t>(pos);
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    const double xval = xv.data[p * cin + ci];
                    const double* krow = &Kv.data[(t * cin + ci) * cout];
                    double* dkrow = &dK.data[(t * cin + ci) * cout];
                    double acc = 0.0;
                    for (std::size_t co = 0; co < cout; ++co) {
                        acc += dyrow[co] * krow[co];
                        dkrow[co] += xval * dyrow[co];
                    }
                    dx.data[p * cin + ci] += acc;
                }
            }
        }
    });
}

Var conv_transpose1d(Graph& g, Var x, Var K, Var b, std::size_t width, std::size_t stride,
                     std::size_t out_length) {
    Tensor y = conv_transpose1d_forward(g.value(x), g.value(K), g.value(b), width, stride, out_length);
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        const Tensor& xv = gr.value(x);
        const Tensor& Kv = gr.value(K);
        Tensor& dx = gr.grad(x);
        Tensor& dK = gr.grad(K);
        Tensor& db = gr.grad(b);
        const std::size_t cin = xv.cols, cout = Kv.cols;
        const long pad = static_cast<long>((width - 1) / 2);
        for (std::size_t o = 0; o < dy.rows; ++o)
            for (std::size_t co = 0; co < cout; ++co) db.data[co] += dy.data[o * cout + co];
        for (std::size_t l = 0; l < xv.rows; ++l) {
            for (std::size_t t = 0; t < width; ++t) {
                const long pos = static_cast<long>(l * stride + t) - pad;
                if (pos < 0 || pos >= static_cast<long>(out_length)) continue;
                const double* dyrow = &dy.data[static_cast<std::size_t>(pos) * cout];
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    const double xval = xv.data[l * cin + ci];
                    const double* krow = &Kv.data[(t * cin + ci) * cout];
                    double* dkrow = &dK.data[(t * cin + ci) * cout];
                    double acc = 0.0;
                    for (std::size_t co = 0; co < cout; ++co) {
                        acc += dyrow[co] * krow[co];
                        dkrow[co] += xval * dyrow[co];
                    }
                    dx.data[l * cin + ci] += acc;
                }
            }
        }
    });
}

Var maxpool1d(Graph& g, Var x) {
    const Tensor& xv = g.value(x);
    Tensor y = nn::maxpool1d(xv);
    // Winner index per output element; ties go to the first element of the pair.
    std::vector<std::size_t> argmax(y.size());
    for (std::size_t l = 0; l < y.rows; ++l)
        for (std::size_t c = 0; c < y.cols; ++c) {
            const std::size_t a = (2 * l) * xv.cols + c, b = (2 * l + 1) * xv.cols + c;
            argmax[l * y.cols + c] = xv.data[a] >= xv.data[b] ? a : b;
        }
    const Var self{g.size()};
    return g.push(std::move(y), [=, argmax = std::move(argmax)](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        Tensor& dx = gr.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[argmax[i]] += dy.data[i];
    });
}

Var relu(Graph& g, Var x) {
    Tensor y = nn::relu(g.value(x));
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        const Tensor& xv = gr.value(x);
        Tensor& dx = gr.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i)
            if (xv.data[i] > 0.0) dx.data[i] += dy.data[i];
    });
}

Var sigmoid(Graph& g, Var x) {
    Tensor y = nn::sigmoid(g.value(x));
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        const Tensor& yv = gr.value(self);
        Tensor& dx = gr.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] += dy.data[i] * yv.data[i] * (1.0 - yv.data[i]);
    });
}

Var reshape(Graph& g, Var x, std::size_t rows, std::size_t cols) {
    const Tensor& xv = g.value(x);
    require(rows * cols == xv.size(), "reshape: " + xv.shape_string() + " -> " + std::to_string(rows) + "x" +
                                          std::to_string(cols));
    Tensor y(rows, cols, xv.data);
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        Tensor& dx = gr.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] += dy.data[i];
    });
}

Var slice_rows(Graph& g, Var x, std::size_t begin, std::size_t count) {
    const Tensor& xv = g.value(x);
    require(begin + count <= xv.rows, "slice_rows: range exceeds " + xv.shape_string());
    const std::size_t cols = xv.cols;
    Tensor y(count, cols);
    std::copy(xv.data.begin() + static_cast<long>(begin * cols),
              xv.data.begin() + static_cast<long>((begin + count) * cols), y.data.begin());
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const Tensor& dy = gr.grad(self);
        Tensor& dx = gr.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[begin * cols + i] += dy.data[i];
    });
}

Var reparameterize(Graph& g, Var mu, Var log_sigma, const Tensor& noise) {
    const Tensor& m = g.value(mu);
    const Tensor& s = g.value(log_sigma);
    require(m.same_shape(s) && m.size() == noise.size(), "reparameterize: mu/log_sigma/noise shapes differ");
    Tensor z = m;
    std::vector<double> sigma(m.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        sigma[i] = std::exp(s.data[i]);
        z.data[i] += sigma[i] * noise.data[i];
    }
    const Var self{g.size()};
    return g.push(std::move(z), [=, sigma = std::move(sigma), noise = noise.data](Graph& gr) {
        const Tensor& dz = gr.grad(self);
        Tensor& dm = gr.grad(mu);
        for (std::size_t i = 0; i < dz.size(); ++i) dm.data[i] += dz.data[i];
        Tensor& ds = gr.grad(log_sigma);
        for (std::size_t i = 0; i < dz.size(); ++i) ds.data[i] += dz.data[i] * sigma[i] * noise[i];
    });
}

Var add_scaled(Graph& g, Var a, Var b, double scale) {
    const Tensor& av = g.value(a);
    const Tensor& bv = g.value(b);
    require(av.size() == 1 && bv.size() == 1, "add_scaled: operands must be scalars");
    Tensor y(1, 1, av.data[0] + scale * bv.data[0]);
    const Var self{g.size()};
    return g.push(std::move(y), [=](Graph& gr) {
        const double d = gr.grad(self).data[0];
        gr.grad(a).data[0] += d;
        gr.grad(b).data[0] += scale * d;
    });
}

Var weighted_bce(Graph& g, Var pred, double y, double zeta_pos, double zeta_neg) {
    const Tensor& pv = g.value(pred);
    require(pv.size() == 1, "weighted_bce: prediction must be a scalar");
    const double p = std::clamp(pv.data[0], kProbClamp, 1.0 - kProbClamp);
    Tensor loss(1, 1, weighted_bce_value(pv.data[0], y, zeta_pos, zeta_neg));
    const Var self{g.size()};
    return g.push(std::move(loss), [=](Graph& gr) {
        const double d = gr.grad(self).data[0];
        gr.grad(pred).data[0] += d * (-zeta_pos * y / p + zeta_neg * (1.0 - y) / (1.0 - p));
    });
}

Var squared_error(Graph& g, Var recon, const Tensor& target) {
    const Tensor& rv = g.value(recon);
    require(rv.size() == target.size(), "squared_error: reconstruction " + rv.shape_string() + " vs target " +
                                            target.shape_string());
    std::vector<double> diff(rv.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = rv.data[i] - target.data[i];
        acc += diff[i] * diff[i];
    }
    const Var self{g.size()};
    return g.push(Tensor(1, 1, acc), [=, diff = std::move(diff)](Graph& gr) {
        const double d = gr.grad(self).data[0];
        Tensor& dr = gr.grad(recon);
        for (std::size_t i = 0; i < diff.size(); ++i) dr.data[i] += 2.0 * d * diff[i];
    });
}

Var kl_standard_normal(Graph& g, Var mu, Var log_sigma) {
    const Tensor& m = g.value(mu);
    const Tensor& s = g.value(log_sigma);
    require(m.same_shape(s), "kl: mu and log_sigma shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double ls = s.data[i];
        acc += m.data[i] * m.data[i] + std::exp(2.0 * ls) - 2.0 * ls - 1.0;
    }
    const Var self{g.size()};
    return g.push(Tensor(1, 1, 0.5 * acc), [=](Graph& gr) {
        const double d = gr.grad(self).data[0];
        const Tensor& mv = gr.value(mu);
        const Tensor& sv = gr.value(log_sigma);
        Tensor& dm = gr.grad(mu);
        for (std::size_t i = 0; i < mv.size(); ++i) dm.data[i] += d * mv.data[i];
        Tensor& ds = gr.grad(log_sigma);
        for (std::size_t i = 0; i < sv.size(); ++i) ds.data[i] += d * (std::exp(2.0 * sv.data[i]) - 1.0);
    });
}

}  // namespace ad
}  // namespace cvsqi::nn
