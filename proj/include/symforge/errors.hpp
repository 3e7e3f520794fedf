#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace symforge {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class invalid_descriptor : public error {
public:
    using error::error;
};

class dimension_error : public error {
public:
    using error::error;
};

class enumeration_too_large : public error {
public:
    using error::error;
};

class not_in_image : public error {
public:
    using error::error;
};

class numeric_error : public error {
public:
    using error::error;
};

class parse_error : public error {
public:
    // line 0: no meaningful line number
    parse_error(const std::string& what, std::size_t line)
        : error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line), message_(what) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::string message_;
};

class empty_dataset : public error {
public:
    using error::error;
};

class generation_error : public error {
public:
    using error::error;
};

class training_diverged : public error {
public:
    training_diverged(const std::string& what, double last_finite_loss)
        : error(what), last_finite_loss_(last_finite_loss) {}

    double last_finite_loss() const noexcept { return last_finite_loss_; }

private:
    double last_finite_loss_;
};

/// Seeded 64-bit engine. Distinct `stream` values give independent,
/// reproducible sub-streams of one seed.
using rng_engine = std::mt19937_64;

inline rng_engine make_stream(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedu};
    return rng_engine(seq);
}

}  // namespace symforge
