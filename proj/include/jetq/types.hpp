#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace jetq {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed kernel text. `offset` is the 1-based byte column of the offending token
/// (end of input reports size()+1).
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : Error("syntax error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Numerical evaluation left the safe domain (branch cut, log of zero, division by zero,
/// non-positive metric, unbound parameter, ...).
class EvalError : public Error {
public:
    using Error::Error;
};

/// Invalid argument to a library operation (dimension mismatch, order cap, bad parameters).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Binomial magnitudes or degree counts exceed what double precision can represent.
class OverflowError : public Error {
public:
    using Error::Error;
};

}  // namespace jetq
