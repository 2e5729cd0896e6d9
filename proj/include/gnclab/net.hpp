#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnclab/errors.hpp"
#include "gnclab/grid.hpp"

namespace gnclab {

// Row-major matrix of input points (one point per row).
struct Matrix {
    std::vector<double> data;
    std::int64_t rows = 0;
    std::int64_t cols = 0;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c)
        : data(static_cast<std::size_t>(r * c), 0.0), rows(r), cols(c) {}

    double* row(std::int64_t i) { return data.data() + i * cols; }
    const double* row(std::int64_t i) const { return data.data() + i * cols; }
    double& at(std::int64_t i, std::int64_t j) { return data[static_cast<std::size_t>(i * cols + j)]; }
    double at(std::int64_t i, std::int64_t j) const { return data[static_cast<std::size_t>(i * cols + j)]; }
};

// Parameter configuration stored as grid level indices in the canonical
// flattening order (see Arch index helpers).
using Levels = std::vector<std::uint8_t>;

enum class ArchKind { fc, conv };

// Network shape for the quantized binary classifier families:
//   fc          fully connected, per-layer weights and biases
//   fc scaled   adds a per-neuron multiplicative scale on every layer
//               (the output-layer scale exists in the parameter vector but
//               the forward pass never reads it)
//   conv        1-D valid convolutions, stride 1, linear readout head
//   conv scaled adds a per-channel scale on every conv layer
// Hidden activation is max(z, lrelu_slope * z); the classifier output is
// sign of the final logit with sign(0) = +1.
struct Arch {
    ArchKind kind = ArchKind::fc;
    bool scaled = false;
    double lrelu_slope = 0.0;

    std::vector<int> widths;    // fc: d_0 .. d_L
    std::vector<int> channels;  // conv: c_0 .. c_L
    std::vector<int> kernels;   // conv: k_1 .. k_L
    int s0 = 0;                 // conv: input positions per channel

    std::vector<int> spatial;   // conv: s_0 .. s_L
    std::int64_t head_dim = 0;  // conv: c_L * s_L
    std::int64_t params = 0;
    std::vector<std::int64_t> layer_off;  // offset of each layer block

    static Arch fc(std::vector<int> w, bool scaled = false, double lrelu = 0.0) {
        require(w.size() >= 2, "Arch: need at least input and output widths");
        for (int d : w) require(d >= 1, "Arch: widths must be positive");
        require(w.back() == 1, "Arch: output width must be 1 (scalar logit)");
        Arch a;
        a.kind = ArchKind::fc;
        a.scaled = scaled;
        a.lrelu_slope = lrelu;
        a.widths = std::move(w);
        const int L = a.layers();
        a.layer_off.assign(static_cast<std::size_t>(L) + 1, 0);
        std::int64_t off = 0;
        for (int l = 1; l <= L; ++l) {
            a.layer_off[static_cast<std::size_t>(l - 1)] = off;
            off += static_cast<std::int64_t>(a.widths[static_cast<std::size_t>(l)]) *
                   (a.widths[static_cast<std::size_t>(l - 1)] + (scaled ? 2 : 1));
        }
        a.layer_off[static_cast<std::size_t>(L)] = off;
        a.params = off;
        return a;
    }

    static Arch conv(std::vector<int> ch, std::vector<int> ks, int s0,
                     bool scaled = false, double lrelu = 0.0) {
        require(ch.size() >= 2, "Arch: need at least input and one conv layer");
        require(ks.size() + 1 == ch.size(), "Arch: kernels must match conv layers");
        for (int c : ch) require(c >= 1, "Arch: channel counts must be positive");
        for (int k : ks) require(k >= 1, "Arch: kernel sizes must be positive");
        require(s0 >= 1, "Arch: input positions must be positive");
        Arch a;
        a.kind = ArchKind::conv;
        a.scaled = scaled;
        a.lrelu_slope = lrelu;
        a.channels = std::move(ch);
        a.kernels = std::move(ks);
        a.s0 = s0;
        const int L = a.layers();
        a.spatial.assign(static_cast<std::size_t>(L) + 1, 0);
        a.spatial[0] = s0;
        for (int l = 1; l <= L; ++l) {
            const int s = a.spatial[static_cast<std::size_t>(l - 1)] -
                          a.kernels[static_cast<std::size_t>(l - 1)] + 1;
            require(s >= 1, "Arch: kernel " + std::to_string(l) +
                                " exceeds its input length");
            a.spatial[static_cast<std::size_t>(l)] = s;
        }
        a.head_dim = static_cast<std::int64_t>(a.channels.back()) * a.spatial.back();
        a.layer_off.assign(static_cast<std::size_t>(L) + 2, 0);
        std::int64_t off = 0;
        for (int l = 1; l <= L; ++l) {
            a.layer_off[static_cast<std::size_t>(l - 1)] = off;
            const std::int64_t cl = a.channels[static_cast<std::size_t>(l)];
            const std::int64_t cp = a.channels[static_cast<std::size_t>(l - 1)];
            const std::int64_t kl = a.kernels[static_cast<std::size_t>(l - 1)];
            off += kl * cl * cp + cl * (scaled ? 2 : 1);
        }
        a.layer_off[static_cast<std::size_t>(L)] = off;  // head block
        off += a.head_dim + 1;
        a.layer_off[static_cast<std::size_t>(L) + 1] = off;
        a.params = off;
        return a;
    }

    int layers() const {
        return kind == ArchKind::fc ? static_cast<int>(widths.size()) - 1
                                    : static_cast<int>(channels.size()) - 1;
    }

    std::int64_t input_dim() const {
        return kind == ArchKind::fc ? widths[0]
                                    : static_cast<std::int64_t>(channels[0]) * s0;
    }

    // Canonical flattening, fc: per layer [W row-major | b | scale].
    std::int64_t w_index(int l, int i, int j) const {
        return layer_off[static_cast<std::size_t>(l - 1)] +
               static_cast<std::int64_t>(i) * widths[static_cast<std::size_t>(l - 1)] + j;
    }
    std::int64_t b_index(int l, int i) const {
        return layer_off[static_cast<std::size_t>(l - 1)] +
               static_cast<std::int64_t>(widths[static_cast<std::size_t>(l)]) *
                   widths[static_cast<std::size_t>(l - 1)] +
               i;
    }
    std::int64_t g_index(int l, int i) const {
        return b_index(l, i) + widths[static_cast<std::size_t>(l)];
    }

    // Canonical flattening, conv: per layer [K (out, in, tap) | b | scale],
    // then [head w (channel-major) | head bias].
    std::int64_t k_index(int l, int co, int ci, int t) const {
        const std::int64_t cp = channels[static_cast<std::size_t>(l - 1)];
        const std::int64_t kl = kernels[static_cast<std::size_t>(l - 1)];
        return layer_off[static_cast<std::size_t>(l - 1)] +
               (static_cast<std::int64_t>(co) * cp + ci) * kl + t;
    }
    std::int64_t cb_index(int l, int c) const {
        const std::int64_t cl = channels[static_cast<std::size_t>(l)];
        const std::int64_t cp = channels[static_cast<std::size_t>(l - 1)];
        const std::int64_t kl = kernels[static_cast<std::size_t>(l - 1)];
        return layer_off[static_cast<std::size_t>(l - 1)] + kl * cl * cp + c;
    }
    std::int64_t cg_index(int l, int c) const {
        return cb_index(l, c) + channels[static_cast<std::size_t>(l)];
    }
    std::int64_t head_w_index(int c, int p) const {
        return layer_off[static_cast<std::size_t>(layers())] +
               static_cast<std::int64_t>(c) * spatial.back() + p;
    }
    std::int64_t head_b_index() const {
        return layer_off[static_cast<std::size_t>(layers())] + head_dim;
    }
};

// Reusable forward-pass buffers.
struct Workspace {
    std::vector<double> a;
    std::vector<double> b;
};

namespace detail {

inline double act(double z, double slope) { return z > 0.0 ? z : slope * z; }

inline double fc_logit(const Arch& A, const QuantGrid& g, const Levels& lv,
                       const double* x, Workspace& ws) {
    const int L = A.layers();
    ws.a.assign(x, x + A.widths[0]);
    std::int64_t off = 0;
    for (int l = 1; l <= L; ++l) {
        const int dl = A.widths[static_cast<std::size_t>(l)];
        const int dp = A.widths[static_cast<std::size_t>(l - 1)];
        ws.b.assign(static_cast<std::size_t>(dl), 0.0);
        for (int i = 0; i < dl; ++i) {
            double z = 0.0;
            for (int j = 0; j < dp; ++j)
                z += g.value(lv[static_cast<std::size_t>(off + i * dp + j)]) *
                     ws.a[static_cast<std::size_t>(j)];
            if (A.scaled && l < L)
                z *= g.value(lv[static_cast<std::size_t>(off + dl * dp + dl + i)]);
            z += g.value(lv[static_cast<std::size_t>(off + dl * dp + i)]);
            ws.b[static_cast<std::size_t>(i)] = (l < L) ? act(z, A.lrelu_slope) : z;
        }
        ws.a.swap(ws.b);
        off += static_cast<std::int64_t>(dl) * (dp + (A.scaled ? 2 : 1));
    }
    return ws.a[0];
}

inline double conv_logit(const Arch& A, const QuantGrid& g, const Levels& lv,
                         const double* x, Workspace& ws) {
    const int L = A.layers();
    ws.a.assign(x, x + A.channels[0] * static_cast<std::int64_t>(A.s0));
    std::int64_t off = 0;
    for (int l = 1; l <= L; ++l) {
        const int cl = A.channels[static_cast<std::size_t>(l)];
        const int cp = A.channels[static_cast<std::size_t>(l - 1)];
        const int kl = A.kernels[static_cast<std::size_t>(l - 1)];
        const int sp = A.spatial[static_cast<std::size_t>(l - 1)];
        const int so = A.spatial[static_cast<std::size_t>(l)];
        ws.b.assign(static_cast<std::size_t>(cl) * so, 0.0);
        for (int co = 0; co < cl; ++co) {
            const double scale =
                A.scaled ? g.value(lv[static_cast<std::size_t>(off + kl * cl * cp + cl + co)])
                         : 1.0;
            const double bias =
                g.value(lv[static_cast<std::size_t>(off + kl * cl * cp + co)]);
            for (int p = 0; p < so; ++p) {
                double z = 0.0;
                for (int ci = 0; ci < cp; ++ci)
                    for (int t = 0; t < kl; ++t)
                        z += g.value(lv[static_cast<std::size_t>(
                                 off + (static_cast<std::int64_t>(co) * cp + ci) * kl + t)]) *
                             ws.a[static_cast<std::size_t>(ci) * sp + p + t];
                ws.b[static_cast<std::size_t>(co) * so + p] =
                    act(scale * z + bias, A.lrelu_slope);
            }
        }
        ws.a.swap(ws.b);
        off += static_cast<std::int64_t>(kl) * cl * cp + static_cast<std::int64_t>(cl) * (A.scaled ? 2 : 1);
    }
    double z = g.value(lv[static_cast<std::size_t>(off + A.head_dim)]);
    for (std::int64_t d = 0; d < A.head_dim; ++d)
        z += g.value(lv[static_cast<std::size_t>(off + d)]) * ws.a[static_cast<std::size_t>(d)];
    return z;
}

}  // namespace detail

inline double logit(const Arch& A, const QuantGrid& g, const Levels& lv,
                    const double* x, Workspace& ws) {
    return A.kind == ArchKind::fc ? detail::fc_logit(A, g, lv, x, ws)
                                  : detail::conv_logit(A, g, lv, x, ws);
}

// Binary label: sign of the logit with sign(0) = +1.
inline int label(const Arch& A, const QuantGrid& g, const Levels& lv,
                 const double* x, Workspace& ws) {
    return logit(A, g, lv, x, ws) >= 0.0 ? 1 : -1;
}

// Labels over every row of pts, written to out (size pts.rows).
inline void label_table(const Arch& A, const QuantGrid& g, const Levels& lv,
                        const Matrix& pts, std::int8_t* out, Workspace& ws) {
    for (std::int64_t i = 0; i < pts.rows; ++i)
        out[i] = static_cast<std::int8_t>(label(A, g, lv, pts.row(i), ws));
}

// True iff the configuration reproduces every target label (early exit).
inline bool matches_labels(const Arch& A, const QuantGrid& g, const Levels& lv,
                           const Matrix& pts, const std::int8_t* target,
                           Workspace& ws) {
    for (std::int64_t i = 0; i < pts.rows; ++i)
        if (label(A, g, lv, pts.row(i), ws) != target[i]) return false;
    return true;
}

// Number of nonzero parameter values in the configuration.
inline std::int64_t support_size(const QuantGrid& g, const Levels& lv) {
    std::int64_t s = 0;
    for (auto level : lv)
        if (level != g.zero_level()) ++s;
    return s;
}

inline void validate_params(const Arch& A, const QuantGrid& g, const Levels& lv) {
    require(static_cast<std::int64_t>(lv.size()) == A.params,
            "params: wrong length for architecture");
    for (auto level : lv)
        require(level < static_cast<std::uint32_t>(g.size()),
                "params: level index out of grid range");
}

}  // namespace gnclab
