#pragma once

#include <stdexcept>
#include <string>

namespace spatialplus {

// Model errors map to CLI exit code 3, convergence errors to 4, input errors to 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

#define SPATIALPLUS_ERROR(Name, Base)                                   \
    class Name : public Base {                                          \
    public:                                                             \
        explicit Name(const std::string& what) : Base(#Name ": " + what) {} \
    };

SPATIALPLUS_ERROR(DuplicatePoints, InvalidInput)
SPATIALPLUS_ERROR(OrderTooSmall, InvalidInput)
SPATIALPLUS_ERROR(RankOutOfRange, InvalidInput)
SPATIALPLUS_ERROR(NonPositiveLambda, InvalidInput)
SPATIALPLUS_ERROR(InvalidResponse, InvalidInput)
SPATIALPLUS_ERROR(MeanOutOfRange, InvalidInput)

SPATIALPLUS_ERROR(RankDeficientPolynomialBlock, ModelError)
SPATIALPLUS_ERROR(EigenFailure, ModelError)
SPATIALPLUS_ERROR(DegenerateDenominator, ModelError)
SPATIALPLUS_ERROR(SingularDesign, ModelError)
SPATIALPLUS_ERROR(CollinearCovariateWithNullspace, ModelError)
SPATIALPLUS_ERROR(DegenerateResiduals, ModelError)
SPATIALPLUS_ERROR(CovarianceNotPSD, ModelError)

SPATIALPLUS_ERROR(PirlsDivergence, ConvergenceError)
SPATIALPLUS_ERROR(StepHalvingExhausted, ConvergenceError)

#undef SPATIALPLUS_ERROR

}  // namespace spatialplus
