#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsenls {

using Vec = std::vector<double>;

// Dense row-major matrix, sized for small p and sample counts in the thousands.
struct Matrix {
    Vec data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : data(r * c, 0.0), rows(r), cols(c) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files, bad CLI arguments, inconsistent schemas. Maps to exit code 1.
class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

// Model evaluation failed (non-finite output, unstable simulation).
// Carries the physical parameter vector that triggered it.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& msg, Vec params)
        : Error(msg), params_physical(std::move(params)) {}
    Vec params_physical;
};

class MetricError : public Error {
public:
    explicit MetricError(const std::string& msg) : Error(msg) {}
};

class StudyError : public Error {
public:
    explicit StudyError(const std::string& msg) : Error(msg) {}
};

}  // namespace sparsenls
