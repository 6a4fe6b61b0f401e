#pragma once

#include <stdexcept>
#include <string>

namespace logdet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape mismatch: non-square input, M > N, block sizes that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Factorization failure or a singular system where an inverse is required.
class NumericalError : public Error {
public:
    using Error::Error;
};

// t_{M+1} == 0 with M < N: the retained block of the Grushin problem is singular.
class DeflationError : public Error {
public:
    using Error::Error;
};

// delta * |G| / alpha exceeds 1/2, so the Neumann series is not guaranteed to converge.
class ContractionError : public Error {
public:
    using Error::Error;
};

// Precondition on caller-supplied data (e.g. singular values not sorted).
class ContractError : public Error {
public:
    using Error::Error;
};

// Equivalence parameters violate one of their constraints.
class ParameterError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace logdet
