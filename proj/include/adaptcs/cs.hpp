#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "adaptcs/dataset.hpp"

namespace adaptcs {

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    /// out = M v
    void multiply(std::span<const double> v, std::span<double> out) const;
    /// out = M^T v
    void multiply_transposed(std::span<const double> v, std::span<double> out) const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Orthonormal DCT-II synthesis basis: x = Psi c, c = Psi^T x.
/// Column k is the k-th cosine atom; column 0 is the constant 1/sqrt(p).
class DctBasis {
public:
    explicit DctBasis(std::size_t p);

    std::size_t size() const { return p_; }
    const Matrix& psi() const { return psi_; }
    std::vector<double> forward(std::span<const double> x) const;  // Psi^T x
    std::vector<double> inverse(std::span<const double> c) const;  // Psi c

private:
    std::size_t p_;
    Matrix psi_;
};

/// Shared read-only basis for the default segment length.
const DctBasis& default_basis();

/// Sorted sample indices kept by the sparse filter. Reproducible from (p, q, seed).
struct SensingPattern {
    std::size_t p = 0;
    std::vector<std::uint16_t> kept;
    std::uint64_t seed = 0;

    std::size_t q() const { return kept.size(); }
    static SensingPattern make(std::size_t p, std::size_t q, std::uint64_t seed);
};

/// q = round(p * keep_fraction).
std::size_t kept_count(std::size_t p, double keep_fraction);
/// Kept samples for a compression ratio cr (percent removed): round(p (1 - cr/100)).
std::size_t kept_count_for_cr(std::size_t p, double cr_percent);

struct FilteredSequence {
    std::vector<double> values;  // kept samples in original index order
    SensingPattern pattern;
};

/// Random subsampling without replacement. keep_fraction in (0, 1].
FilteredSequence sparse_filter(std::span<const double> axis, double keep_fraction, std::uint64_t seed);
/// Applies an existing pattern.
std::vector<double> apply_pattern(std::span<const double> axis, const SensingPattern& pattern);

/// A = Phi Psi: the rows of Psi selected by a sensing pattern.
struct MeasurementMatrix {
    Matrix a;
    SensingPattern pattern;

    static MeasurementMatrix from(const DctBasis& basis, const SensingPattern& pattern);
    /// y = A c
    std::vector<double> measure(std::span<const double> coefficients) const;
};

struct RecoveryConfig {
    /// Residual tolerance as a fraction of ||y||_2 (the stopping margin).
    double epsilon_rel = 0.05;
    int max_iter = 2000;
    /// Multiplicative lambda decrease between continuation stages.
    double lambda_decay = 0.5;
    /// Iterations per continuation stage before lambda is lowered.
    int stage_iter = 25;
};

struct Recovery {
    std::vector<double> coefficients;  // c'
    std::vector<double> signal;        // x' = Psi c'
    double residual = 0.0;             // ||y - A c'||_2
    double epsilon = 0.0;              // absolute tolerance used
    int iterations = 0;
    bool converged = false;            // residual <= epsilon
};

/// l1-regularised recovery by accelerated iterative shrinkage (FISTA) with
/// lambda continuation, stopping once ||y - A c'|| <= epsilon or after
/// max_iter iterations (flagged, not thrown).
Recovery reconstruct(std::span<const double> y, const MeasurementMatrix& a, const DctBasis& basis,
                     const RecoveryConfig& cfg = {});

/// RMSE(x, x') / (max(x) - min(x)). Throws for constant x or length mismatch.
double nrmse(std::span<const double> x, std::span<const double> x_hat);

/// Node payload. Three axes share one sensing pattern.
struct CompressedSegment {
    std::uint16_t p = kSegmentSamples;
    std::uint64_t seed = 0;
    std::uint8_t cr_percent = 0;
    Location location = Location::T;
    std::uint8_t cluster = 0;
    std::array<std::vector<float>, 3> y;  // q values per axis

    std::size_t q() const { return y[0].size(); }
    SensingPattern pattern() const { return SensingPattern::make(p, q(), seed); }
    std::size_t transmitted_samples() const { return 3 * q(); }
};

inline constexpr std::size_t kWireHeaderBytes = 15;

/// Little-endian wire format:
///   u16 p | u16 q | u64 seed | u8 cr_percent | u8 location | u8 cluster |
///   3*q f32 samples (all X, then all Y, then all Z).
std::vector<std::uint8_t> encode(const CompressedSegment& seg);
CompressedSegment decode(std::span<const std::uint8_t> bytes);

}  // namespace adaptcs
