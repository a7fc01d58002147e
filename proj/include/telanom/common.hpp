#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iterator>
#include <utility>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace telanom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error hierarchy. Every failure raised by the library derives from Error so
// the CLI can turn it into a machine-readable record.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, std::string kind = "error")
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error(what, "argument") {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what, "parse"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what, "validation") {}
};

class SingularityError : public Error {
public:
    explicit SingularityError(const std::string& what) : Error(what, "singular") {}
};

class DegenerateScaleError : public Error {
public:
    DegenerateScaleError(const std::string& what, std::size_t column)
        : Error(what, "degenerate_scale"), column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

class StateError : public Error {
public:
    explicit StateError(const std::string& what) : Error(what, "state") {}
};

class UndefinedMetricError : public Error {
public:
    explicit UndefinedMetricError(const std::string& what) : Error(what, "undefined_metric") {}
};

class DependencyError : public Error {
public:
    explicit DependencyError(const std::string& what) : Error(what, "missing_artifact") {}
};

// Warning sink. Defaults to stderr; tests swap it to capture messages.
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    };
    return sink;
}

inline void warn(const std::string& msg) {
    static std::mutex mu;
    std::lock_guard lock(mu);
    if (warning_sink()) warning_sink()(msg);
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is split by index,
// so results written to per-index slots are independent of the thread count.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(jobs, n);
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline unsigned default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Sample mean and (n-1) standard deviation of a range.
template <typename Range>
std::pair<double, double> mean_and_sd(const Range& xs) {
    const double n = static_cast<double>(std::size(xs));
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

}  // namespace telanom
