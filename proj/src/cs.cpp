#include "adaptcs/cs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "adaptcs/errors.hpp"
#include "adaptcs/rng.hpp"

namespace adaptcs {

void Matrix::multiply(std::span<const double> v, std::span<double> out) const {
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* row = data_.data() + r * cols_;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
}

void Matrix::multiply_transposed(std::span<const double> v, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* row = data_.data() + r * cols_;
        const double s = v[r];
        for (std::size_t c = 0; c < cols_; ++c) out[c] += row[c] * s;
    }
}

DctBasis::DctBasis(std::size_t p) : p_(p) {
    if (p == 0) throw std::invalid_argument("DCT dimension must be positive");
    psi_ = Matrix(p, p);
    const double pd = static_cast<double>(p);
    for (std::size_t n = 0; n < p; ++n) {
        for (std::size_t k = 0; k < p; ++k) {
            const double w = k == 0 ? std::sqrt(1.0 / pd) : std::sqrt(2.0 / pd);
            psi_(n, k) = w * std::cos(std::numbers::pi * (static_cast<double>(n) + 0.5) * static_cast<double>(k) / pd);
        }
    }
}

std::vector<double> DctBasis::forward(std::span<const double> x) const {
    if (x.size() != p_) throw std::invalid_argument("DCT forward: length mismatch");
    std::vector<double> c(p_);
    psi_.multiply_transposed(x, c);
    return c;
}

std::vector<double> DctBasis::inverse(std::span<const double> c) const {
    if (c.size() != p_) throw std::invalid_argument("DCT inverse: length mismatch");
    std::vector<double> x(p_);
    psi_.multiply(c, x);
    return x;
}

const DctBasis& default_basis() {
    static const DctBasis basis(kSegmentSamples);
    return basis;
}

SensingPattern SensingPattern::make(std::size_t p, std::size_t q, std::uint64_t seed) {
    if (p == 0 || p > 0xffff) throw std::invalid_argument("sensing pattern: p out of range");
    if (q > p) throw std::invalid_argument("sensing pattern: q exceeds p");
    std::vector<std::uint16_t> idx(p);
    for (std::size_t i = 0; i < p; ++i) idx[i] = static_cast<std::uint16_t>(i);
    // Partial Fisher-Yates: the first q slots are a uniform q-subset.
    Rng rng(seed);
    for (std::size_t i = 0; i < q; ++i) {
        const std::size_t j = i + rng.uniform_index(p - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(q);
    std::sort(idx.begin(), idx.end());
    return SensingPattern{p, std::move(idx), seed};
}

std::size_t kept_count(std::size_t p, double keep_fraction) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("keep fraction must be in (0, 1]");
    const auto q = static_cast<std::size_t>(std::llround(static_cast<double>(p) * keep_fraction));
    if (q == 0) throw std::invalid_argument("keep fraction leaves no samples");
    return q;
}

std::size_t kept_count_for_cr(std::size_t p, double cr_percent) {
    if (!(cr_percent >= 0.0 && cr_percent < 100.0))
        throw std::invalid_argument("compression ratio must be in [0, 100)");
    return kept_count(p, 1.0 - cr_percent / 100.0);
}

std::vector<double> apply_pattern(std::span<const double> axis, const SensingPattern& pattern) {
    if (axis.size() != pattern.p) throw std::invalid_argument("pattern length mismatch");
    std::vector<double> out;
    out.reserve(pattern.q());
    for (auto i : pattern.kept) out.push_back(axis[i]);
    return out;
}

FilteredSequence sparse_filter(std::span<const double> axis, double keep_fraction, std::uint64_t seed) {
    const std::size_t q = kept_count(axis.size(), keep_fraction);
    auto pattern = SensingPattern::make(axis.size(), q, seed);
    auto values = apply_pattern(axis, pattern);
    return {std::move(values), std::move(pattern)};
}

MeasurementMatrix MeasurementMatrix::from(const DctBasis& basis, const SensingPattern& pattern) {
    if (pattern.p != basis.size()) throw std::invalid_argument("measurement matrix: dimension mismatch");
    MeasurementMatrix m;
    m.pattern = pattern;
    m.a = Matrix(pattern.q(), basis.size());
    for (std::size_t r = 0; r < pattern.q(); ++r) {
        const auto src = basis.psi().row(pattern.kept[r]);
        for (std::size_t c = 0; c < basis.size(); ++c) m.a(r, c) = src[c];
    }
    return m;
}

std::vector<double> MeasurementMatrix::measure(std::span<const double> coefficients) const {
    if (coefficients.size() != a.cols()) throw std::invalid_argument("measure: dimension mismatch");
    std::vector<double> y(a.rows());
    a.multiply(coefficients, y);
    return y;
}

namespace {

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

Recovery reconstruct(std::span<const double> y, const MeasurementMatrix& mm, const DctBasis& basis,
                     const RecoveryConfig& cfg) {
    const Matrix& a = mm.a;
    const std::size_t q = a.rows(), p = a.cols();
    if (y.size() != q) throw std::invalid_argument("reconstruct: measurement length mismatch");
    if (p != basis.size()) throw std::invalid_argument("reconstruct: basis dimension mismatch");
    if (cfg.epsilon_rel < 0.0 || cfg.max_iter < 1 || !(cfg.lambda_decay > 0.0 && cfg.lambda_decay < 1.0) ||
        cfg.stage_iter < 1)
        throw std::invalid_argument("reconstruct: invalid recovery config");

    Recovery out;
    out.coefficients.assign(p, 0.0);
    const double ynorm = norm2(y);
    out.epsilon = cfg.epsilon_rel * ynorm;

    if (q == p) {
        // Fully sampled: A is an orthonormal row permutation of Psi, so Ac = y
        // has the unique solution A^T y.
        a.multiply_transposed(y, out.coefficients);
    } else if (ynorm > out.epsilon) {
        // Rows of an orthonormal basis are orthonormal, so A A^T = I and the
        // gradient's Lipschitz constant is exactly 1.
        const double inv_l = 1.0;
        std::vector<double> at(p * q);
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t k = 0; k < p; ++k) at[k * q + i] = a(i, k);
        std::vector<double> c(p, 0.0), z(p, 0.0), c_new(p), grad(p);
        std::vector<double> ac(q, 0.0), az(q, 0.0), ac_new(q), r(q);

        a.multiply_transposed(y, grad);
        double lambda_max = 0.0;
        for (double g : grad) lambda_max = std::max(lambda_max, std::abs(g));
        double lambda = cfg.lambda_decay * lambda_max;
        const double lambda_min = 1e-13 * lambda_max;

        double t = 1.0;
        int stage = 0;
        for (int it = 1; it <= cfg.max_iter; ++it) {
            for (std::size_t i = 0; i < q; ++i) r[i] = az[i] - y[i];
            a.multiply_transposed(r, grad);
            const double thr = lambda * inv_l;
            double delta = 0.0, cn = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
                const double v = z[i] - inv_l * grad[i];
                const double s = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
                c_new[i] = s;
                delta += (s - c[i]) * (s - c[i]);
                cn += s * s;
            }
            // A c_new as a sum over the (few) nonzero coefficients.
            std::fill(ac_new.begin(), ac_new.end(), 0.0);
            for (std::size_t k = 0; k < p; ++k) {
                const double s = c_new[k];
                if (s == 0.0) continue;
                const double* col = at.data() + k * q;
                for (std::size_t i = 0; i < q; ++i) ac_new[i] += col[i] * s;
            }
            const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_new;
            double res = 0.0;
            for (std::size_t i = 0; i < q; ++i) {
                az[i] = ac_new[i] + beta * (ac_new[i] - ac[i]);
                res += (ac_new[i] - y[i]) * (ac_new[i] - y[i]);
            }
            for (std::size_t i = 0; i < p; ++i) z[i] = c_new[i] + beta * (c_new[i] - c[i]);
            c.swap(c_new);
            ac.swap(ac_new);
            t = t_new;
            out.iterations = it;

            if (std::sqrt(res) <= out.epsilon) break;
            const bool settled = delta <= 1e-20 * std::max(cn, 1e-300);
            if ((++stage >= cfg.stage_iter || settled) && lambda > lambda_min) {
                lambda = std::max(lambda * cfg.lambda_decay, lambda_min);
                stage = 0;
                // Momentum restart at each continuation stage.
                t = 1.0;
                z = c;
                az = ac;
            }
        }
        out.coefficients = std::move(c);
    }

    out.signal = basis.inverse(out.coefficients);
    std::vector<double> ac(q);
    a.multiply(out.coefficients, ac);
    double res = 0.0;
    for (std::size_t i = 0; i < q; ++i) res += (ac[i] - y[i]) * (ac[i] - y[i]);
    out.residual = std::sqrt(res);
    out.converged = out.residual <= out.epsilon || q == p;
    return out;
}

double nrmse(std::span<const double> x, std::span<const double> x_hat) {
    if (x.size() != x_hat.size() || x.empty()) throw std::invalid_argument("nrmse: length mismatch");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) throw std::invalid_argument("nrmse: reference signal is constant");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
    return std::sqrt(s / static_cast<double>(x.size())) / range;
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::uint32_t, T>>;
    U bits;
    if constexpr (std::is_floating_point_v<T>)
        bits = std::bit_cast<std::uint32_t>(value);
    else
        bits = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes[pos + i]) << (8 * i));
    pos += sizeof(U);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode(const CompressedSegment& seg) {
    const std::size_t q = seg.q();
    if (seg.y[1].size() != q || seg.y[2].size() != q) throw std::invalid_argument("encode: axes differ in length");
    if (q > seg.p) throw std::invalid_argument("encode: q exceeds p");
    std::vector<std::uint8_t> out;
    out.reserve(kWireHeaderBytes + 12 * q);
    put_le<std::uint16_t>(out, seg.p);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(q));
    put_le<std::uint64_t>(out, seg.seed);
    put_le<std::uint8_t>(out, seg.cr_percent);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(seg.location));
    put_le<std::uint8_t>(out, seg.cluster);
    for (const auto& axis : seg.y)
        for (float v : axis) put_le<float>(out, v);
    return out;
}

CompressedSegment decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kWireHeaderBytes) throw ParseError("compressed segment: truncated header");
    std::size_t pos = 0;
    CompressedSegment seg;
    seg.p = get_le<std::uint16_t>(bytes, pos);
    const std::size_t q = get_le<std::uint16_t>(bytes, pos);
    seg.seed = get_le<std::uint64_t>(bytes, pos);
    seg.cr_percent = get_le<std::uint8_t>(bytes, pos);
    const auto loc = get_le<std::uint8_t>(bytes, pos);
    seg.cluster = get_le<std::uint8_t>(bytes, pos);
    if (loc >= kNumLocations) throw ParseError("compressed segment: bad location code");
    if (q > seg.p || seg.p == 0) throw ParseError("compressed segment: q exceeds p");
    seg.location = static_cast<Location>(loc);
    if (bytes.size() != kWireHeaderBytes + 12 * q) throw ParseError("compressed segment: payload size mismatch");
    for (auto& axis : seg.y) {
        axis.resize(q);
        for (auto& v : axis) v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
    }
    return seg;
}

}  // namespace adaptcs
