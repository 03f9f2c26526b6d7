#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace oracle {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(rows, cols);
    for (double& v : t.data) v = u(rng);
    return t;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

Tensor dense(const Tensor& x, const Tensor& W, const Tensor& b) {
    Tensor y(W.rows, 1);
    for (std::size_t r = 0; r < W.rows; ++r) {
        double s = b.data[r];
        for (std::size_t c = 0; c < W.cols; ++c) s += W.data[r * W.cols + c] * x.data[c];
        y.data[r] = s;
    }
    return y;
}

Tensor conv(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width, std::size_t stride) {
    const std::size_t L = x.rows, cin = x.cols, cout = K.cols, pad = (width - 1) / 2;
    std::vector<std::vector<double>> padded(L + 2 * pad, std::vector<double>(cin, 0.0));
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t c = 0; c < cin; ++c) padded[l + pad][c] = x.data[l * cin + c];
    const std::size_t out_len = (L + 2 * pad - width) / stride + 1;
    Tensor y(out_len, cout);
    for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t o = 0; o < out_len; ++o) {
            double s = b.data[co];
            for (std::size_t ci = 0; ci < cin; ++ci)
                for (std::size_t t = 0; t < width; ++t)
                    s += padded[o * stride + t][ci] * K.data[(t * cin + ci) * cout + co];
            y.data[o * cout + co] = s;
        }
    return y;
}

Tensor conv_transpose(const Tensor& x, const Tensor& K, const Tensor& b, std::size_t width, std::size_t stride,
                      std::size_t out_length) {
    const long pad = static_cast<long>((width - 1) / 2);
    const std::size_t cin = x.cols, cout = K.cols;
    Tensor y(out_length, cout);
    for (std::size_t j = 0; j < out_length; ++j)
        for (std::size_t co = 0; co < cout; ++co) {
            double s = b.data[co];
            for (std::size_t t = 0; t < width; ++t) {
                const long num = static_cast<long>(j) + pad - static_cast<long>(t);
                if (num < 0 || num % static_cast<long>(stride) != 0) continue;
                const std::size_t l = static_cast<std::size_t>(num) / stride;
                if (l >= x.rows) continue;
                for (std::size_t ci = 0; ci < cin; ++ci)
                    s += x.data[l * cin + ci] * K.data[(t * cin + ci) * cout + co];
            }
            y.data[j * cout + co] = s;
        }
    return y;
}

Tensor maxpool(const Tensor& x) {
    Tensor y(x.rows / 2, x.cols);
    for (std::size_t c = 0; c < x.cols; ++c)
        for (std::size_t o = 0; o < y.rows; ++o) {
            const double a = x.data[(2 * o) * x.cols + c], b = x.data[(2 * o + 1) * x.cols + c];
            y.data[o * x.cols + c] = a > b ? a : b;
        }
    return y;
}

double mann_whitney_auc(std::span<const double> scores, std::span<const int> labels) {
    double credit = 0.0;
    std::size_t npos = 0, nneg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 1) ++npos;
        else ++nneg;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] == 1) continue;
            if (scores[i] > scores[j]) credit += 1.0;
            else if (scores[i] == scores[j]) credit += 0.5;
        }
    }
    return credit / (static_cast<double>(npos) * static_cast<double>(nneg));
}

double youden_at(std::span<const double> residuals, std::span<const int> labels, double d) {
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const bool says_normal = residuals[i] <= d;
        if (labels[i] == 1) (says_normal ? tp : fn)++;
        else (says_normal ? fp : tn)++;
    }
    return static_cast<double>(tp) / static_cast<double>(tp + fn) +
           static_cast<double>(tn) / static_cast<double>(tn + fp) - 1.0;
}

double youden_grid_best(std::span<const double> residuals, std::span<const int> labels, std::size_t n) {
    const auto [lo_it, hi_it] = std::minmax_element(residuals.begin(), residuals.end());
    const double step = (*hi_it - *lo_it) / static_cast<double>(n - 1);
    const double lo = *lo_it - step, hi = *hi_it + step;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        best = std::max(best, youden_at(residuals, labels, d));
    }
    for (double r : residuals) best = std::max(best, youden_at(residuals, labels, r));
    return best;
}

std::vector<double> eigen_projector(std::span<const std::vector<double>> samples, std::size_t k) {
    const std::size_t n = samples.size(), d = samples.front().size();
    Eigen::MatrixXd X(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) X(i, j) = samples[i][j];
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    const Eigen::MatrixXd C = X.transpose() * X / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    // Eigen sorts ascending; the top k are the last k columns.
    const Eigen::MatrixXd V = es.eigenvectors().rightCols(k);
    const Eigen::MatrixXd P = V * V.transpose();
    std::vector<double> out(d * d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = P(i, j);
    return out;
}

std::vector<double> projector_from(const std::vector<std::vector<double>>& rows) {
    const std::size_t d = rows.front().size();
    std::vector<double> P(d * d, 0.0);
    for (const auto& v : rows)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) P[i * d + j] += v[i] * v[j];
    return P;
}

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheck check_param_gradients(cvsqi::nn::ParamSet& params, const std::function<double(bool)>& loss,
                                std::size_t coords, std::uint64_t seed, double h) {
    params.zero_grad();
    loss(true);
    std::vector<std::pair<std::size_t, std::size_t>> picks;
    std::mt19937_64 rng(seed);
    for (std::size_t p = 0; p < params.size(); ++p)
        picks.emplace_back(p, std::uniform_int_distribution<std::size_t>(0, params[p].value.size() - 1)(rng));
    const std::size_t total = params.scalar_count();
    while (picks.size() < coords) {
        std::size_t flat = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
        std::size_t p = 0;
        while (flat >= params[p].value.size()) flat -= params[p++].value.size();
        picks.emplace_back(p, flat);
    }
    GradCheck out;
    for (const auto& [p, i] : picks) {
        const double analytic = params[p].grad.data[i];
        double& w = params[p].value.data[i];
        const double w0 = w;
        w = w0 + h;
        const double up = loss(false);
        w = w0 - h;
        const double down = loss(false);
        w = w0;
        const double numeric = (up - down) / (2.0 * h);
        const double e = relative_error(analytic, numeric);
        ++out.checked;
        if (e > out.max_rel_error) {
            out.max_rel_error = e;
            out.worst = params[p].name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic) +
                        " numeric " + std::to_string(numeric);
        }
    }
    return out;
}

GradCheck check_input_gradient(std::vector<double> x,
                               const std::function<double(const std::vector<double>&, std::vector<double>*)>& f,
                               double h) {
    std::vector<double> grad(x.size(), 0.0);
    f(x, &grad);
    GradCheck out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double up = f(x, nullptr);
        x[i] = x0 - h;
        const double down = f(x, nullptr);
        x[i] = x0;
        const double e = relative_error(grad[i], (up - down) / (2.0 * h));
        ++out.checked;
        if (e > out.max_rel_error) {
            out.max_rel_error = e;
            out.worst = "x[" + std::to_string(i) + "]";
        }
    }
    return out;
}

std::vector<double> normal_beat(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rise = 0.25 + 0.1 * u(rng), gain = 0.8 + 0.2 * u(rng);
    std::vector<double> v(cvsqi::prep::kTargetLength);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double p = static_cast<double>(i) / static_cast<double>(v.size() - 1);
        const double s = p < rise ? 0.5 * (1.0 - std::cos(std::numbers::pi * p / rise))
                                  : 0.5 * (1.0 + std::cos(std::numbers::pi * (p - rise) / (1.0 - rise)));
        v[i] = gain * s + 0.01 * (u(rng) - 0.5);
    }
    return v;
}

std::vector<cvsqi::prep::NormalizedCycle> toy_cycles(std::size_t n_pos, std::size_t n_neg, std::uint64_t seed,
                                                     std::size_t subjects) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<cvsqi::prep::NormalizedCycle> out;
    for (std::size_t i = 0; i < n_pos + n_neg; ++i) {
        cvsqi::prep::NormalizedCycle c;
        char id[32];
        std::snprintf(id, sizeof id, "S%03zu", i % subjects);
        c.subject_id = id;
        c.t_start_ms = static_cast<std::int64_t>(i) * 800;
        c.source_length = cvsqi::prep::kTargetLength;
        c.values = normal_beat(rng);
        if (i >= n_pos) {
            c.label = u(rng) < 0.5 ? cvsqi::QualityClass::MotionInfluenced : cvsqi::QualityClass::Ambiguous;
            const double centre = 20.0 + 110.0 * u(rng), width = 8.0 + 10.0 * u(rng);
            const double amp = (u(rng) < 0.5 ? -1.0 : 1.0) * (1.0 + 1.5 * u(rng));
            for (std::size_t k = 0; k < c.values.size(); ++k) {
                const double z = (static_cast<double>(k) - centre) / width;
                c.values[k] += amp * std::exp(-0.5 * z * z);
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace oracle
