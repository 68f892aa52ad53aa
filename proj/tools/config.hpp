#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eqd/errors.hpp"
#include "eqd/projective.hpp"

namespace eqd::cli {

/// Config error at a 1-based line and column (0 when not tied to a line).
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::size_t line, std::size_t column)
        : Error("config:" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

struct SamplerConfig {
    std::string method = "backward";
    int burn_in = 40;
    int depth = 10;
    std::size_t N = 0;
    std::vector<cplx> start;
};

struct NormsConfig {
    std::size_t grid_n = 0;
    std::size_t pairs = 2000;
};

struct CorrelateConfig {
    std::string psi;
    std::string phi;
    int n_max = 0;
    std::size_t grid_n = 40000;
};

struct CltConfig {
    std::string phi;
    int n_block = 0;
    int trajectories = 0;
    int gk_n_max = 6;
    /// Center the trajectory sums by their own mean before the KS test.
    bool center = true;
    std::optional<double> reference_sigma2;
};

struct TransferConfig {
    std::string phi;
    int N = 0;
    std::size_t nodes = 0;
};

struct ExperimentConfig {
    std::string text;
    std::string map_spec;
    /// name -> observable spec, in file order.
    std::vector<std::pair<std::string, std::string>> observables;
    std::uint64_t seed = 0;
    std::vector<std::string> tasks;
    std::string output = "eqd_out";
    SamplerConfig sampler;
    NormsConfig norms;
    CorrelateConfig correlate;
    CltConfig clt;
    TransferConfig transfer;

    bool has_task(const std::string& t) const;
    const std::string& observable(const std::string& name) const;
};

inline const std::vector<std::string> kTaskOrder{"degrees", "sample", "norms", "correlate", "transfer", "clt"};

/// Parses the sectioned key = value format; validates map and observable
/// specs and the parameters of every requested task.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace eqd::cli
