#pragma once

#include <stdexcept>
#include <string>

namespace gevreylab {

struct NumericsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WeightOverflow : NumericsError {
    explicit WeightOverflow(const std::string& what) : NumericsError("weight overflow: " + what) {}
};

struct SeriesNotConverged : NumericsError {
    explicit SeriesNotConverged(const std::string& what) : NumericsError("series-not-converged: " + what) {}
};

struct DivergentIntegral : NumericsError {
    explicit DivergentIntegral(const std::string& what) : NumericsError("divergent-integral: " + what) {}
};

struct DilationOffGrid : NumericsError {
    explicit DilationOffGrid(const std::string& what) : NumericsError("dilation-off-grid: " + what) {}
};

struct StepFailure : NumericsError {
    explicit StepFailure(const std::string& what) : NumericsError("step-failure: " + what) {}
};

struct NormBlowup : NumericsError {
    explicit NormBlowup(const std::string& what) : NumericsError("norm-blowup: " + what) {}
};

struct NotConverged : NumericsError {
    explicit NotConverged(const std::string& what) : NumericsError("not-converged: " + what) {}
};

struct ScheduleInfeasible : NumericsError {
    explicit ScheduleInfeasible(const std::string& what) : NumericsError("schedule-infeasible: " + what) {}
};

struct TailFitFailure : NumericsError {
    explicit TailFitFailure(const std::string& what) : NumericsError("tail-fit-failure: " + what) {}
};

struct ConfigError : NumericsError {
    explicit ConfigError(const std::string& what) : NumericsError("config-invalid: " + what) {}
};

}  // namespace gevreylab
