#include "fibro/random.hpp"
#include "fibro/error.hpp"

#include <boost/random/beta_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <cmath>

namespace fibro {

double uniform01(Rng& rng) {
    boost::random::uniform_01<double> dist;
    return dist(rng);
}

double uniform_real(Rng& rng, double lo, double hi) {
    boost::random::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
}

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    boost::random::uniform_int_distribution<std::int64_t> dist(lo, hi);
    return dist(rng);
}

double normal(Rng& rng, double mean, double sd) {
    boost::random::normal_distribution<double> dist(mean, sd);
    return dist(rng);
}

double beta(Rng& rng, double a, double b) {
    boost::random::beta_distribution<double> dist(a, b);
    const double v = dist(rng);
    // Both gamma draws underflow for tiny shapes; use the limiting Bernoulli.
    if (!std::isfinite(v)) return uniform01(rng) < a / (a + b) ? 1.0 : 0.0;
    return v;
}

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::TruncatedFile: return "TruncatedFile";
        case ErrorKind::BadMagic: return "BadMagic";
        case ErrorKind::BadHeader: return "BadHeader";
        case ErrorKind::UnsupportedDatatype: return "UnsupportedDatatype";
        case ErrorKind::UnsupportedDim: return "UnsupportedDim";
        case ErrorKind::UnsupportedEncoding: return "UnsupportedEncoding";
        case ErrorKind::NonFiniteData: return "NonFiniteData";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::EmptyMask: return "EmptyMask";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::EmptyList: return "EmptyList";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::UsageError: return "UsageError";
    }
    return "Unknown";
}

}  // namespace fibro
