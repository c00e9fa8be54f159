#ifndef FINSWIM_COMMON_HPP
#define FINSWIM_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#ifndef M_PI
#define M_PI 3.14159265358979323846
#endif

namespace finswim {

/** Configuration or input validation problem (maps to CLI exit code 1). */
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/** File format problem: bad header, truncated payload, wrong magic. */
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/** Checkpoint or dataset version mismatch. */
struct VersionError : std::runtime_error {
    explicit VersionError(const std::string& msg) : std::runtime_error(msg) {}
};

/** Numerical failure: diverged iteration, non-finite field (maps to CLI exit code 2). */
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

/** API misuse, e.g. stepping a finished episode. */
struct UsageError : std::logic_error {
    explicit UsageError(const std::string& msg) : std::logic_error(msg) {}
};

/** Filesystem I/O failure. */
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/** Invalid body geometry, e.g. a self-intersecting outline. */
struct GeometryError : std::runtime_error {
    explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

/** printf-style formatting into a std::string. */
inline std::string strfmt(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    char buf[1024];
    vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    return std::string(buf);
}

/** 2D vector with the handful of operations the geometry code needs. */
struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    /** z-component of the cross product (this x o). */
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
    /** Counter-clockwise rotation by 90 degrees. */
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

/** Dense 2D array of doubles, contiguous in the first (x) index. */
class Array2D {
  public:
    Array2D() = default;
    Array2D(int nx, int ny, double fill = 0.0) : nx_(nx), ny_(ny), a_(size_t(nx) * ny, fill) {}

    double& operator()(int i, int j) { return a_[size_t(j) * nx_ + i]; }
    double operator()(int i, int j) const { return a_[size_t(j) * nx_ + i]; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    void fill(double v) { a_.assign(a_.size(), v); }
    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    size_t size() const { return a_.size(); }

    double max_abs() const {
        double m = 0.0;
        for (double v : a_) m = std::max(m, std::fabs(v));
        return m;
    }
    bool all_finite() const {
        for (double v : a_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    int nx_ = 0, ny_ = 0;
    std::vector<double> a_;
};

/**
 * Deterministic random source. The engine is the fully specified
 * std::mt19937_64; the uniform and normal transforms are written out here so
 * draws are identical across standard library implementations.
 */
class Rng {
  public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /** Uniform double in [0, 1) with 53 random bits. */
    double uniform() { return double(gen_() >> 11) * 0x1.0p-53; }

    /** Uniform double in [lo, hi). */
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /** Integer in [0, n) by rejection-free scaled draw (n << 2^64). */
    uint64_t uniform_index(uint64_t n) { return gen_() % n; }

    /** Fisher-Yates shuffle driven by this stream. */
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(i)]);
    }

    /** Standard normal via Box-Muller; caches the second draw of each pair. */
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /** Deterministic child seed derived from this stream's seed and a tag. */
    static uint64_t derive_seed(uint64_t base, uint64_t tag) {
        // splitmix64 finalizer over the combined word
        uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/** Mean of a vector (0 for empty input). */
inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
}

/** Pearson correlation of two equal-length series; 0 if either is constant. */
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    size_t n = std::min(a.size(), b.size());
    if (n < 2) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; i++) { ma += a[i]; mb += b[i]; }
    ma /= double(n); mb /= double(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (size_t i = 0; i < n; i++) {
        double da = a[i] - ma, db = b[i] - mb;
        saa += da * da; sbb += db * db; sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace finswim

#endif
