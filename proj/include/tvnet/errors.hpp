#pragma once
#include <stdexcept>
#include <string>

namespace tvnet {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

// Well-formed input for which the requested quantity is undefined
// (unbounded coordinate, all-zero kernel window, constant matrix, ...).
class DegenerateProblem : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(const std::string& what, long pivot)
        : Error(what), pivot_(pivot) {}
    long pivot() const noexcept { return pivot_; }

private:
    long pivot_;
};

class RankDeficient : public Error {
public:
    RankDeficient(const std::string& what, double eigenvalue)
        : Error(what), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace tvnet
